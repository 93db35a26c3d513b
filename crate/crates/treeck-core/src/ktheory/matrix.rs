//! Exact integer matrices: Smith normal form with tracked unimodular
//! transforms, fraction-free determinants, determinantal divisors (the
//! independent oracle for the SNF diagonal), and row-lattice membership via
//! an echelon basis. Everything is arbitrary precision.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum MatrixError {
    #[error("matrix must be rectangular: row {row} has {got} entries, expected {expected}")]
    Ragged {
        row: usize,
        got: usize,
        expected: usize,
    },
    #[error("matrix must be nonempty")]
    Empty,
    #[error("determinantal divisors limited to min dimension {limit}, got {got}")]
    SizeGuard { got: usize, limit: usize },
    #[error("determinant requires a square matrix")]
    NotSquare,
}

/// A dense rectangular matrix of arbitrary-precision integers.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IntMatrix {
    rows: usize,
    cols: usize,
    data: Vec<BigInt>,
}

impl IntMatrix {
    pub fn zero(rows: usize, cols: usize) -> IntMatrix {
        IntMatrix {
            rows,
            cols,
            data: vec![BigInt::zero(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> IntMatrix {
        let mut m = IntMatrix::zero(n, n);
        for i in 0..n {
            m.set(i, i, BigInt::one());
        }
        m
    }

    pub fn from_rows<T: Clone + Into<BigInt>>(rows: &[Vec<T>]) -> Result<IntMatrix, MatrixError> {
        if rows.is_empty() || rows[0].is_empty() {
            return Err(MatrixError::Empty);
        }
        let cols = rows[0].len();
        for (i, r) in rows.iter().enumerate() {
            if r.len() != cols {
                return Err(MatrixError::Ragged {
                    row: i,
                    got: r.len(),
                    expected: cols,
                });
            }
        }
        Ok(IntMatrix {
            rows: rows.len(),
            cols,
            data: rows.iter().flat_map(|r| r.iter().cloned().map(Into::into)).collect(),
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> &BigInt {
        &self.data[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: BigInt) {
        self.data[i * self.cols + j] = v;
    }

    pub fn row_slice(&self, i: usize) -> &[BigInt] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn transpose(&self) -> IntMatrix {
        let mut t = IntMatrix::zero(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t.set(j, i, self.get(i, j).clone());
            }
        }
        t
    }

    pub fn mul(&self, other: &IntMatrix) -> IntMatrix {
        assert_eq!(self.cols, other.rows, "dimension mismatch");
        let mut out = IntMatrix::zero(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(i, k);
                if a.is_zero() {
                    continue;
                }
                for j in 0..other.cols {
                    let add = a * other.get(k, j);
                    let cur = out.get(i, j) + add;
                    out.set(i, j, cur);
                }
            }
        }
        out
    }

    pub fn mul_vec(&self, v: &[BigInt]) -> Vec<BigInt> {
        assert_eq!(self.cols, v.len());
        (0..self.rows)
            .map(|i| (0..self.cols).map(|j| self.get(i, j) * &v[j]).sum())
            .collect()
    }

    pub fn column(&self, j: usize) -> Vec<BigInt> {
        (0..self.rows).map(|i| self.get(i, j).clone()).collect()
    }

    pub fn diagonal(&self) -> Vec<BigInt> {
        (0..self.rows.min(self.cols)).map(|i| self.get(i, i).clone()).collect()
    }

    pub fn is_diagonal(&self) -> bool {
        for i in 0..self.rows {
            for j in 0..self.cols {
                if i != j && !self.get(i, j).is_zero() {
                    return false;
                }
            }
        }
        true
    }

    fn swap_rows(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for j in 0..self.cols {
            self.data.swap(a * self.cols + j, b * self.cols + j);
        }
    }

    fn swap_cols(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for i in 0..self.rows {
            self.data.swap(i * self.cols + a, i * self.cols + b);
        }
    }

    /// row_i += c * row_t
    fn add_row(&mut self, i: usize, t: usize, c: &BigInt) {
        for j in 0..self.cols {
            let add = c * self.get(t, j);
            let v = self.get(i, j) + add;
            self.set(i, j, v);
        }
    }

    /// col_j += c * col_t
    fn add_col(&mut self, j: usize, t: usize, c: &BigInt) {
        for i in 0..self.rows {
            let add = c * self.get(i, t);
            let v = self.get(i, j) + add;
            self.set(i, j, v);
        }
    }

    fn negate_row(&mut self, i: usize) {
        for j in 0..self.cols {
            let v = -self.get(i, j);
            self.set(i, j, v);
        }
    }

    fn negate_col(&mut self, j: usize) {
        for i in 0..self.rows {
            let v = -self.get(i, j);
            self.set(i, j, v);
        }
    }

    /// Exact determinant by fraction-free (Bareiss) elimination.
    pub fn determinant(&self) -> Result<BigInt, MatrixError> {
        if self.rows != self.cols {
            return Err(MatrixError::NotSquare);
        }
        let n = self.rows;
        let mut a = self.clone();
        let mut sign = BigInt::one();
        let mut prev = BigInt::one();
        for k in 0..n {
            if a.get(k, k).is_zero() {
                match (k + 1..n).find(|&i| !a.get(i, k).is_zero()) {
                    Some(i) => {
                        a.swap_rows(k, i);
                        sign = -sign;
                    }
                    None => return Ok(BigInt::zero()),
                }
            }
            for i in k + 1..n {
                for j in k + 1..n {
                    let num = a.get(i, j) * a.get(k, k) - a.get(i, k) * a.get(k, j);
                    let v = num / &prev;
                    a.set(i, j, v);
                }
                a.set(i, k, BigInt::zero());
            }
            prev = a.get(k, k).clone();
        }
        Ok(sign * a.get(n - 1, n - 1).clone())
    }
}

/// Smith decomposition `U * A * V = D` with unimodular `U`, `V`, diagonal
/// `D` whose nonnegative entries form a divisibility chain with zeros last.
/// `u_inv` is the tracked inverse of `U`, used to lift diagonal coordinates
/// back to the original basis.
#[derive(Debug, Clone)]
pub struct SmithDecomposition {
    pub u: IntMatrix,
    pub d: IntMatrix,
    pub v: IntMatrix,
    pub u_inv: IntMatrix,
}

impl SmithDecomposition {
    pub fn diagonal(&self) -> Vec<BigInt> {
        self.d.diagonal()
    }
}

/// Position of the submatrix entry of minimal nonzero absolute value,
/// scanning rows first and columns second.
fn min_abs_pivot(b: &IntMatrix, t: usize) -> Option<(usize, usize)> {
    let mut best: Option<(BigInt, usize, usize)> = None;
    for i in t..b.rows() {
        for j in t..b.cols() {
            let v = b.get(i, j);
            if v.is_zero() {
                continue;
            }
            let a = v.abs();
            match &best {
                Some((m, _, _)) if *m <= a => {}
                _ => best = Some((a, i, j)),
            }
        }
    }
    best.map(|(_, i, j)| (i, j))
}

/// Computes the Smith normal form of a rectangular integer matrix.
///
/// Pivots are chosen of minimal nonzero absolute value (ties row-then-column)
/// and reduced by Euclidean row/column steps; before a pivot is finalized the
/// remaining submatrix is forced to be divisible by it, which yields the
/// invariant-factor chain. Deterministic for a fixed input.
pub fn smith_normal_form(a: &IntMatrix) -> SmithDecomposition {
    let rows = a.rows();
    let cols = a.cols();
    let mut b = a.clone();
    let mut u = IntMatrix::identity(rows);
    let mut u_inv = IntMatrix::identity(rows);
    let mut v = IntMatrix::identity(cols);

    let steps = rows.min(cols);
    'pivots: for t in 0..steps {
        let Some((pi, pj)) = min_abs_pivot(&b, t) else {
            break 'pivots;
        };
        b.swap_rows(t, pi);
        u.swap_rows(t, pi);
        u_inv.swap_cols(t, pi);
        b.swap_cols(t, pj);
        v.swap_cols(t, pj);

        loop {
            let mut restart = false;
            // Clear the pivot column below t.
            for i in t + 1..rows {
                if b.get(i, t).is_zero() {
                    continue;
                }
                let q = b.get(i, t) / b.get(t, t);
                if !q.is_zero() {
                    let c = -q.clone();
                    b.add_row(i, t, &c);
                    u.add_row(i, t, &c);
                    u_inv.add_col(t, i, &q);
                }
                if !b.get(i, t).is_zero() {
                    // Truncated division left a smaller remainder; promote it.
                    b.swap_rows(t, i);
                    u.swap_rows(t, i);
                    u_inv.swap_cols(t, i);
                    restart = true;
                    break;
                }
            }
            if restart {
                continue;
            }
            // Clear the pivot row right of t.
            for j in t + 1..cols {
                if b.get(t, j).is_zero() {
                    continue;
                }
                let q = b.get(t, j) / b.get(t, t);
                if !q.is_zero() {
                    let c = -q;
                    b.add_col(j, t, &c);
                    v.add_col(j, t, &c);
                }
                if !b.get(t, j).is_zero() {
                    b.swap_cols(t, j);
                    v.swap_cols(t, j);
                    restart = true;
                    break;
                }
            }
            if restart {
                continue;
            }
            // Pivot divides the whole remaining submatrix, or fix it up.
            let pivot = b.get(t, t).clone();
            let offender = (t + 1..rows).find(|&i| (t + 1..cols).any(|j| !(b.get(i, j) % &pivot).is_zero()));
            match offender {
                Some(i) => {
                    let one = BigInt::one();
                    b.add_row(t, i, &one);
                    u.add_row(t, i, &one);
                    let minus = -BigInt::one();
                    u_inv.add_col(i, t, &minus);
                }
                None => break,
            }
        }
    }

    for t in 0..steps {
        if b.get(t, t).is_negative() {
            b.negate_row(t);
            u.negate_row(t);
            u_inv.negate_col(t);
        }
    }

    SmithDecomposition {
        u,
        d: b,
        v,
        u_inv,
    }
}

/// Maximal minor size accepted by [`determinantal_divisors`]; the number of
/// minors grows combinatorially.
pub const DIVISOR_SIZE_LIMIT: usize = 8;

/// The sequence `d_1, ..., d_r` where `d_k` is the gcd of all `k x k`
/// minors (`0` when all vanish). The k-th invariant factor is
/// `d_k / d_{k-1}`. Serves as an oracle for the SNF diagonal.
pub fn determinantal_divisors(a: &IntMatrix) -> Result<Vec<BigInt>, MatrixError> {
    let r = a.rows().min(a.cols());
    if r > DIVISOR_SIZE_LIMIT {
        return Err(MatrixError::SizeGuard {
            got: r,
            limit: DIVISOR_SIZE_LIMIT,
        });
    }
    let mut out = Vec::with_capacity(r);
    for k in 1..=r {
        let mut g = BigInt::zero();
        for row_set in combinations(a.rows(), k) {
            for col_set in combinations(a.cols(), k) {
                let mut sub = IntMatrix::zero(k, k);
                for (si, &i) in row_set.iter().enumerate() {
                    for (sj, &j) in col_set.iter().enumerate() {
                        sub.set(si, sj, a.get(i, j).clone());
                    }
                }
                let det = sub.determinant().expect("square minor");
                g = g.gcd(&det);
                if g.is_one() {
                    break;
                }
            }
            if g.is_one() {
                break;
            }
        }
        out.push(g);
    }
    Ok(out)
}

/// Invariant factors implied by a divisor sequence: `f_k = d_k / d_{k-1}`,
/// with `f_k = 0` once the divisors vanish.
pub fn divisors_to_factors(divisors: &[BigInt]) -> Vec<BigInt> {
    let mut out = Vec::with_capacity(divisors.len());
    let mut prev = BigInt::one();
    for d in divisors {
        if d.is_zero() {
            out.push(BigInt::zero());
        } else {
            out.push(d / &prev);
            prev = d.clone();
        }
    }
    out
}

fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur = Vec::with_capacity(k);
    fn rec(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            cur.push(i);
            rec(i + 1, n, k, cur, out);
            cur.pop();
        }
    }
    rec(0, n, k, &mut cur, &mut out);
    out
}

/// An integer row lattice held as a row-echelon basis, built with purely
/// unimodular row operations. Used for membership tests independent of the
/// SNF code path.
#[derive(Debug, Clone)]
pub struct RowLattice {
    basis: Vec<Vec<BigInt>>,
    pivots: Vec<usize>,
    cols: usize,
}

impl RowLattice {
    pub fn from_matrix(a: &IntMatrix) -> RowLattice {
        let cols = a.cols();
        let mut work: Vec<Vec<BigInt>> = (0..a.rows()).map(|i| a.row_slice(i).to_vec()).collect();
        let mut basis: Vec<Vec<BigInt>> = Vec::new();
        let mut pivots = Vec::new();
        for col in 0..cols {
            // Combine all remaining rows with a nonzero entry in this column
            // into one via Euclidean steps.
            loop {
                let mut nz: Vec<usize> = (0..work.len()).filter(|&i| !work[i][col].is_zero()).collect();
                if nz.len() <= 1 {
                    break;
                }
                nz.sort_by_key(|&i| work[i][col].abs());
                let (small, other) = (nz[0], nz[1]);
                let q = &work[other][col] / &work[small][col];
                for j in 0..cols {
                    let sub = &q * &work[small][j];
                    work[other][j] -= sub;
                }
            }
            if let Some(i) = (0..work.len()).find(|&i| !work[i][col].is_zero()) {
                let mut row = work.swap_remove(i);
                if row[col].is_negative() {
                    for x in row.iter_mut() {
                        *x = -&*x;
                    }
                }
                pivots.push(col);
                basis.push(row);
            }
        }
        // Order the basis by pivot column.
        let mut paired: Vec<(usize, Vec<BigInt>)> = pivots.into_iter().zip(basis).collect();
        paired.sort_by_key(|(p, _)| *p);
        let (pivots, basis) = paired.into_iter().unzip();
        RowLattice {
            basis,
            pivots,
            cols,
        }
    }

    /// The rank of the lattice, which equals the rank of the original matrix
    /// over the rationals.
    pub fn rank(&self) -> usize {
        self.basis.len()
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    /// Exact membership of an integer vector in the lattice.
    pub fn contains(&self, v: &[BigInt]) -> bool {
        assert_eq!(v.len(), self.cols);
        let mut v = v.to_vec();
        for (row, &p) in self.basis.iter().zip(&self.pivots) {
            if v[p].is_zero() {
                continue;
            }
            let (q, r) = v[p].div_rem(&row[p]);
            if !r.is_zero() {
                return false;
            }
            for j in 0..self.cols {
                let sub = &q * &row[j];
                v[j] -= sub;
            }
        }
        v.iter().all(Zero::is_zero)
    }

    /// Whether a vector lies in the rational span of the lattice.
    pub fn spans_rationally(&self, v: &[BigInt]) -> bool {
        assert_eq!(v.len(), self.cols);
        let mut v = v.to_vec();
        for (row, &p) in self.basis.iter().zip(&self.pivots) {
            if v[p].is_zero() {
                continue;
            }
            // Clear coordinate p over Q: v <- row[p]·v - v[p]·row.
            let vp = v[p].clone();
            let rp = row[p].clone();
            for j in 0..self.cols {
                let a = &rp * &v[j];
                let b = &vp * &row[j];
                v[j] = a - b;
            }
        }
        v.iter().all(Zero::is_zero)
    }
}
