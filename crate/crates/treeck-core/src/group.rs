//! Finite groups as validated multiplication tables, subgroup embeddings,
//! coset transversals and the malnormality test.
//!
//! Elements are dense indices `0..order`. The identity is discovered from the
//! table, so index 0 need not be the identity.

use std::fmt;

use thiserror::Error;

/// Default cap on group order; every construction here is brute force over
/// elements, so unbounded tables are rejected early.
pub const DEFAULT_MAX_ORDER: usize = 512;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum GroupError {
    #[error("multiplication table is not square: {rows} rows, row {bad_row} has {bad_len} entries")]
    NonSquare {
        rows: usize,
        bad_row: usize,
        bad_len: usize,
    },
    #[error("empty multiplication table")]
    Empty,
    #[error("group order {order} exceeds the cap {cap}")]
    OrderCap { order: usize, cap: usize },
    #[error("table entry {value} at ({row},{col}) is out of range 0..{order}")]
    IndexOutOfRange {
        row: usize,
        col: usize,
        value: usize,
        order: usize,
    },
    #[error("not a Latin square: row {row} repeats value {value} at columns {col1} and {col2}")]
    RowNotPermutation {
        row: usize,
        col1: usize,
        col2: usize,
        value: usize,
    },
    #[error("not a Latin square: column {col} repeats value {value} at rows {row1} and {row2}")]
    ColNotPermutation {
        col: usize,
        row1: usize,
        row2: usize,
        value: usize,
    },
    #[error("no two-sided identity element")]
    NoIdentity,
    #[error("not associative: ({a}*{b})*{c} = {lhs} but {a}*({b}*{c}) = {rhs}")]
    NotAssociative {
        a: usize,
        b: usize,
        c: usize,
        lhs: usize,
        rhs: usize,
    },
    #[error("element {g} has no inverse")]
    NoInverse { g: usize },
    #[error("cyclic group order must be at least 1")]
    ZeroOrder,
    #[error("embedding image is wrong length: {got} entries for a source of order {expected}")]
    ImageLength { got: usize, expected: usize },
    #[error("embedding image entry {value} for source element {element} is out of range 0..{order}")]
    ImageOutOfRange {
        element: usize,
        value: usize,
        order: usize,
    },
    #[error("embedding is not injective: source elements {g1} and {g2} both map to {image}")]
    NotInjective { g1: usize, g2: usize, image: usize },
    #[error("embedding does not preserve the identity: identity {source_identity} maps to {image}, target identity is {target_identity}")]
    IdentityNotPreserved {
        source_identity: usize,
        image: usize,
        target_identity: usize,
    },
    #[error("embedding is not a homomorphism: image({g}*{h}) = {expected} but image({g})*image({h}) = {got}")]
    NotHomomorphic {
        g: usize,
        h: usize,
        expected: usize,
        got: usize,
    },
}

/// A finite group given by its full multiplication table.
///
/// `table[g][h]` is the product `g * h`. Construction validates the group
/// axioms and derives identity and inverses.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FiniteGroup {
    order: usize,
    table: Vec<u16>,
    identity: u16,
    inverse: Vec<u16>,
    names: Vec<String>,
}

impl FiniteGroup {
    /// Cyclic group of order `n` with element `i` named `"i"` and product
    /// `(i + j) mod n`.
    pub fn cyclic(n: usize) -> Result<FiniteGroup, GroupError> {
        if n == 0 {
            return Err(GroupError::ZeroOrder);
        }
        let table: Vec<Vec<usize>> = (0..n).map(|i| (0..n).map(|j| (i + j) % n).collect()).collect();
        let names: Vec<String> = (0..n).map(|i| i.to_string()).collect();
        FiniteGroup::from_table(&table, Some(names))
    }

    /// Validates a literal multiplication table. `names` defaults to
    /// `g0, g1, ...` when absent.
    pub fn from_table(table: &[Vec<usize>], names: Option<Vec<String>>) -> Result<FiniteGroup, GroupError> {
        FiniteGroup::from_table_capped(table, names, DEFAULT_MAX_ORDER)
    }

    /// As [`FiniteGroup::from_table`] with an explicit order cap.
    pub fn from_table_capped(
        table: &[Vec<usize>],
        names: Option<Vec<String>>,
        cap: usize,
    ) -> Result<FiniteGroup, GroupError> {
        let order = table.len();
        if order == 0 {
            return Err(GroupError::Empty);
        }
        if order > cap {
            return Err(GroupError::OrderCap { order, cap });
        }
        for (i, row) in table.iter().enumerate() {
            if row.len() != order {
                return Err(GroupError::NonSquare {
                    rows: order,
                    bad_row: i,
                    bad_len: row.len(),
                });
            }
        }
        for (i, row) in table.iter().enumerate() {
            for (j, &v) in row.iter().enumerate() {
                if v >= order {
                    return Err(GroupError::IndexOutOfRange {
                        row: i,
                        col: j,
                        value: v,
                        order,
                    });
                }
            }
        }
        // Latin square: rows and columns are permutations.
        for (i, row) in table.iter().enumerate() {
            let mut seen = vec![usize::MAX; order];
            for (j, &v) in row.iter().enumerate() {
                if seen[v] != usize::MAX {
                    return Err(GroupError::RowNotPermutation {
                        row: i,
                        col1: seen[v],
                        col2: j,
                        value: v,
                    });
                }
                seen[v] = j;
            }
        }
        for j in 0..order {
            let mut seen = vec![usize::MAX; order];
            for i in 0..order {
                let v = table[i][j];
                if seen[v] != usize::MAX {
                    return Err(GroupError::ColNotPermutation {
                        col: j,
                        row1: seen[v],
                        row2: i,
                        value: v,
                    });
                }
                seen[v] = i;
            }
        }
        // Two-sided identity.
        let identity = (0..order)
            .find(|&e| (0..order).all(|g| table[e][g] == g && table[g][e] == g))
            .ok_or(GroupError::NoIdentity)?;
        // Associativity, brute force over all triples.
        for a in 0..order {
            for b in 0..order {
                let ab = table[a][b];
                for c in 0..order {
                    let lhs = table[ab][c];
                    let rhs = table[a][table[b][c]];
                    if lhs != rhs {
                        return Err(GroupError::NotAssociative { a, b, c, lhs, rhs });
                    }
                }
            }
        }
        // Inverses: unique h with g*h = identity; two-sidedness follows from
        // the axioms but is checked anyway.
        let mut inverse = vec![0u16; order];
        for g in 0..order {
            let h = (0..order)
                .find(|&h| table[g][h] == identity && table[h][g] == identity)
                .ok_or(GroupError::NoInverse { g })?;
            inverse[g] = h as u16;
        }
        let names = match names {
            Some(n) if n.len() == order => n,
            _ => (0..order).map(|i| format!("g{i}")).collect(),
        };
        let flat: Vec<u16> = table.iter().flat_map(|r| r.iter().map(|&v| v as u16)).collect();
        Ok(FiniteGroup {
            order,
            table: flat,
            identity: identity as u16,
            inverse,
            names,
        })
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn identity(&self) -> u16 {
        self.identity
    }

    pub fn mul(&self, g: u16, h: u16) -> u16 {
        self.table[g as usize * self.order + h as usize]
    }

    pub fn inv(&self, g: u16) -> u16 {
        self.inverse[g as usize]
    }

    pub fn name(&self, g: u16) -> &str {
        &self.names[g as usize]
    }

    pub fn elements(&self) -> impl Iterator<Item = u16> + '_ {
        0..self.order as u16
    }

    /// Order of a single element (smallest n >= 1 with g^n = identity).
    pub fn element_order(&self, g: u16) -> usize {
        let mut acc = g;
        let mut n = 1;
        while acc != self.identity {
            acc = self.mul(acc, g);
            n += 1;
        }
        n
    }
}

impl fmt::Display for FiniteGroup {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "group of order {}", self.order)
    }
}

/// An injective homomorphism between finite groups, stored as the image of
/// each source element. Validated on construction.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Embedding {
    source: FiniteGroup,
    target: FiniteGroup,
    image: Vec<u16>,
}

impl Embedding {
    /// Validates that `image` defines an injective homomorphism fixing the
    /// identities. This is the embedding check; invalid maps are rejected
    /// with a witness.
    pub fn new(source: FiniteGroup, target: FiniteGroup, image: Vec<usize>) -> Result<Embedding, GroupError> {
        if image.len() != source.order() {
            return Err(GroupError::ImageLength {
                got: image.len(),
                expected: source.order(),
            });
        }
        for (g, &v) in image.iter().enumerate() {
            if v >= target.order() {
                return Err(GroupError::ImageOutOfRange {
                    element: g,
                    value: v,
                    order: target.order(),
                });
            }
        }
        for g1 in 0..image.len() {
            for g2 in g1 + 1..image.len() {
                if image[g1] == image[g2] {
                    return Err(GroupError::NotInjective {
                        g1,
                        g2,
                        image: image[g1],
                    });
                }
            }
        }
        let e = source.identity() as usize;
        if image[e] != target.identity() as usize {
            return Err(GroupError::IdentityNotPreserved {
                source_identity: e,
                image: image[e],
                target_identity: target.identity() as usize,
            });
        }
        for g in 0..source.order() {
            for h in 0..source.order() {
                let expected = image[source.mul(g as u16, h as u16) as usize];
                let got = target.mul(image[g] as u16, image[h] as u16) as usize;
                if got != expected {
                    return Err(GroupError::NotHomomorphic {
                        g,
                        h,
                        expected,
                        got,
                    });
                }
            }
        }
        let image = image.into_iter().map(|v| v as u16).collect();
        Ok(Embedding {
            source,
            target,
            image,
        })
    }

    /// Identity-only embedding of the trivial group into `target`.
    pub fn trivial(target: FiniteGroup) -> Embedding {
        let source = FiniteGroup::cyclic(1).expect("trivial group");
        let image = vec![target.identity()];
        Embedding {
            source,
            target,
            image,
        }
    }

    pub fn source(&self) -> &FiniteGroup {
        &self.source
    }

    pub fn target(&self) -> &FiniteGroup {
        &self.target
    }

    pub fn apply(&self, g: u16) -> u16 {
        self.image[g as usize]
    }

    /// Index of `t` in the image, when `t` lies in the image subgroup.
    pub fn preimage(&self, t: u16) -> Option<u16> {
        self.image.iter().position(|&v| v == t).map(|i| i as u16)
    }

    pub fn image_contains(&self, t: u16) -> bool {
        self.image.contains(&t)
    }

    pub fn index(&self) -> usize {
        self.target.order() / self.source.order()
    }
}

/// Left transversal of the image subgroup: one representative per left coset
/// `g·H`. The identity represents `H` itself; every other coset is
/// represented by its minimal element index. The identity is listed first,
/// the rest ascend by index.
pub fn left_transversal(sub: &Embedding) -> Vec<u16> {
    let g = sub.target();
    let n = g.order();
    let mut seen = vec![false; n];
    let mut reps = Vec::new();
    // H itself, represented by the identity.
    for h in 0..sub.source().order() {
        seen[sub.apply(h as u16) as usize] = true;
    }
    reps.push(g.identity());
    for x in 0..n as u16 {
        if seen[x as usize] {
            continue;
        }
        // Minimal index in the coset x·H is x itself: smaller members of the
        // coset would already be marked.
        reps.push(x);
        for h in 0..sub.source().order() {
            seen[g.mul(x, sub.apply(h as u16)) as usize] = true;
        }
    }
    reps
}

/// Witness that a subgroup fails to be malnormal: `g` outside the subgroup
/// and a nontrivial `h` in the subgroup with `g⁻¹ h g` back in the subgroup.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MalnormalityWitness {
    pub conjugator: u16,
    pub element: u16,
}

/// Tests whether the image of `sub` is malnormal in its target:
/// `g⁻¹ H g ∩ H = {1}` for every `g` outside `H`.
pub fn is_malnormal(sub: &Embedding) -> Result<(), MalnormalityWitness> {
    let g = sub.target();
    for x in g.elements() {
        if sub.image_contains(x) {
            continue;
        }
        let xi = g.inv(x);
        for h in 0..sub.source().order() as u16 {
            let hh = sub.apply(h);
            if hh == g.identity() {
                continue;
            }
            let conj = g.mul(g.mul(xi, hh), x);
            if sub.image_contains(conj) {
                return Err(MalnormalityWitness {
                    conjugator: x,
                    element: hh,
                });
            }
        }
    }
    Ok(())
}
