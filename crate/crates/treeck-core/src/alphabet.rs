//! Orbit enumeration for directed segments: the alphabet (orbits of
//! segments of length `k+1`), the {0,1} one-step-shift transition matrix,
//! and decorations at a base vertex.

use std::collections::BTreeMap;
use std::fmt;

use thiserror::Error;

use crate::tree::{FixedPathWitness, GroupElement, TreeModel, Vertex};

#[derive(Debug, Error)]
pub enum AlphabetError {
    #[error("segment needs at least one vertex")]
    EmptySegment,
    #[error("vertices {0} and {1} are not adjacent")]
    NotAdjacent(String, String),
    #[error("segment backtracks at position {0}")]
    Backtracks(usize),
    #[error("segment has length {got}, expected {expected}")]
    WrongLength { got: usize, expected: usize },
    #[error("k = {k} is below the acylindricity constant k_min = {k_min}")]
    KTooSmall { k: usize, k_min: usize },
    #[error("segment length {requested} exceeds the ball cap {cap}")]
    LengthCap { requested: usize, cap: usize },
    #[error("the action is not free on segments of length {k}: {element} fixes a segment")]
    NotFree { k: usize, element: String },
    #[error("decoration base vertex must be a fundamental-domain vertex")]
    NotFundamental,
    #[error("internal: extension of a letter canonicalizes outside the alphabet")]
    IncompleteAlphabet,
    #[error("transition matrix is degenerate: empty {0} at letter {1}")]
    DegenerateMatrix(&'static str, usize),
    #[error("matrix rows must be square 0/1")]
    BadMatrix,
}

impl AlphabetError {
    pub(crate) fn not_free(model: &TreeModel, k: usize, w: &FixedPathWitness) -> AlphabetError {
        AlphabetError::NotFree {
            k,
            element: model.element_name(&w.element),
        }
    }
}

/// A directed segment: a geodesic sequence of vertices. Since the graph is a
/// tree, being a geodesic is equivalent to consecutive adjacency without
/// backtracking.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Segment {
    vertices: Vec<Vertex>,
}

impl Segment {
    pub fn new(model: &TreeModel, vertices: Vec<Vertex>) -> Result<Segment, AlphabetError> {
        if vertices.is_empty() {
            return Err(AlphabetError::EmptySegment);
        }
        for i in 1..vertices.len() {
            if !model.neighbors(&vertices[i - 1]).contains(&vertices[i]) {
                return Err(AlphabetError::NotAdjacent(
                    model.vertex_name(&vertices[i - 1]),
                    model.vertex_name(&vertices[i]),
                ));
            }
            if i >= 2 && vertices[i] == vertices[i - 2] {
                return Err(AlphabetError::Backtracks(i));
            }
        }
        Ok(Segment { vertices })
    }

    pub(crate) fn from_path(vertices: Vec<Vertex>) -> Segment {
        Segment { vertices }
    }

    /// Number of edges.
    pub fn len(&self) -> usize {
        self.vertices.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn vertices(&self) -> &[Vertex] {
        &self.vertices
    }

    pub fn initial(&self) -> &Vertex {
        &self.vertices[0]
    }

    pub fn terminal(&self) -> &Vertex {
        self.vertices.last().expect("segments are nonempty")
    }

    pub fn name(&self, model: &TreeModel) -> String {
        let parts: Vec<String> = self.vertices.iter().map(|v| model.vertex_name(v)).collect();
        parts.join(" -> ")
    }
}

/// Canonical representative of the orbit of a segment, together with the
/// element carrying the input onto the representative.
///
/// The initial vertex is translated to its fundamental-domain base, then the
/// vertex sequence is minimized lexicographically over the finite stabilizer
/// of that base. Any translate moving the initial vertex into the
/// fundamental domain differs by a stabilizer element, so two segments get
/// equal canonical forms exactly when they lie in the same orbit.
pub fn canonical_segment(model: &TreeModel, seg: &Segment) -> (Segment, GroupElement) {
    let s0 = seg.initial();
    let to_base = model.inv(&model.element_of_word(&s0.word));
    let translated: Vec<Vertex> = seg.vertices.iter().map(|v| model.act(&to_base, v)).collect();
    debug_assert_eq!(translated[0], model.base_vertex(s0.site));
    let mut best: Option<(Vec<Vertex>, GroupElement)> = None;
    for a in model.stabilizer_of_base(s0.site) {
        let cand: Vec<Vertex> = translated.iter().map(|v| model.act(&a, v)).collect();
        let better = match &best {
            None => true,
            Some((b, _)) => cand < *b,
        };
        if better {
            let g = model.mul(&a, &to_base);
            best = Some((cand, g));
        }
    }
    let (vertices, g) = best.expect("stabilizer contains the identity");
    (Segment { vertices }, g)
}

/// Canonical orbit of a segment of length exactly `k+1` (an alphabet
/// letter).
pub fn canonical_orbit(
    model: &TreeModel,
    k: usize,
    seg: &Segment,
) -> Result<(Segment, GroupElement), AlphabetError> {
    if seg.len() != k + 1 {
        return Err(AlphabetError::WrongLength {
            got: seg.len(),
            expected: k + 1,
        });
    }
    Ok(canonical_segment(model, seg))
}

/// The alphabet: canonical representatives of the orbits of directed
/// segments of length `k+1`, with letter ids assigned in lexicographic order
/// of the canonical forms.
#[derive(Debug, Clone)]
pub struct Alphabet {
    k: usize,
    letters: Vec<Segment>,
    index: BTreeMap<Segment, usize>,
}

impl Alphabet {
    pub fn k(&self) -> usize {
        self.k
    }

    pub fn len(&self) -> usize {
        self.letters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.letters.is_empty()
    }

    pub fn letters(&self) -> &[Segment] {
        &self.letters
    }

    pub fn letter(&self, id: usize) -> &Segment {
        &self.letters[id]
    }

    pub fn id_of(&self, canonical: &Segment) -> Option<usize> {
        self.index.get(canonical).copied()
    }

    /// Canonicalizes an arbitrary segment of length `k+1` and returns its
    /// letter id.
    pub fn classify(&self, model: &TreeModel, seg: &Segment) -> Result<usize, AlphabetError> {
        let (canon, _) = canonical_orbit(model, self.k, seg)?;
        self.id_of(&canon).ok_or(AlphabetError::IncompleteAlphabet)
    }
}

/// Enumerates the alphabet by listing all segments of length `k+1` with
/// initial vertex in the fundamental domain and deduplicating by canonical
/// form. Requires `k >= k_min` and a free action on length-`k` segments.
pub fn build_alphabet(model: &TreeModel, k: usize) -> Result<Alphabet, AlphabetError> {
    if k < model.k_min() {
        return Err(AlphabetError::KTooSmall {
            k,
            k_min: model.k_min(),
        });
    }
    if k + 1 > model.ball_cap() {
        return Err(AlphabetError::LengthCap {
            requested: k + 1,
            cap: model.ball_cap(),
        });
    }
    if let Err(w) = model.verify_free_action(k) {
        return Err(AlphabetError::not_free(model, k, &w));
    }
    let mut index: BTreeMap<Segment, usize> = BTreeMap::new();
    for base in model.fundamental_vertices() {
        for path in model.paths_from(&base, k + 1) {
            let (canon, _) = canonical_segment(model, &Segment::from_path(path));
            index.entry(canon).or_insert(0);
        }
    }
    let letters: Vec<Segment> = index.keys().cloned().collect();
    for (i, l) in letters.iter().enumerate() {
        *index.get_mut(l).expect("letter present") = i;
    }
    Ok(Alphabet { k, letters, index })
}

/// The {0,1} transition matrix: `M(b, a) = 1` when the representative of `a`
/// admits a one-step shift extension in the orbit of `b`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TransitionMatrix {
    n: usize,
    bits: Vec<u8>,
}

impl TransitionMatrix {
    pub fn from_rows(rows: &[Vec<u8>]) -> Result<TransitionMatrix, AlphabetError> {
        let n = rows.len();
        if n == 0 || rows.iter().any(|r| r.len() != n || r.iter().any(|&b| b > 1)) {
            return Err(AlphabetError::BadMatrix);
        }
        Ok(TransitionMatrix {
            n,
            bits: rows.iter().flatten().copied().collect(),
        })
    }

    pub fn size(&self) -> usize {
        self.n
    }

    /// Entry `M(next, prev)`: 1 when `prev` can be followed by `next`.
    pub fn get(&self, next: usize, prev: usize) -> bool {
        self.bits[next * self.n + prev] == 1
    }

    fn set(&mut self, next: usize, prev: usize) {
        self.bits[next * self.n + prev] = 1;
    }

    /// Successors of a letter: all `b` with `M(b, a) = 1`.
    pub fn successors(&self, a: usize) -> Vec<usize> {
        (0..self.n).filter(|&b| self.get(b, a)).collect()
    }

    /// Predecessors of a letter: all `b` with `M(a, b) = 1`.
    pub fn predecessors(&self, a: usize) -> Vec<usize> {
        (0..self.n).filter(|&b| self.get(a, b)).collect()
    }

    pub fn row(&self, i: usize) -> &[u8] {
        &self.bits[i * self.n..(i + 1) * self.n]
    }

    pub fn rows_as_strings(&self) -> Vec<String> {
        (0..self.n)
            .map(|i| self.row(i).iter().map(|b| char::from(b'0' + b)).collect())
            .collect()
    }

    pub fn ones(&self) -> usize {
        self.bits.iter().map(|&b| b as usize).sum()
    }
}

impl fmt::Display for TransitionMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for r in self.rows_as_strings() {
            writeln!(f, "{r}")?;
        }
        Ok(())
    }
}

/// Builds the transition matrix by extending each canonical representative
/// one step forward past its terminal vertex.
pub fn build_transition(model: &TreeModel, alphabet: &Alphabet) -> Result<TransitionMatrix, AlphabetError> {
    let n = alphabet.len();
    let mut m = TransitionMatrix {
        n,
        bits: vec![0; n * n],
    };
    for (a_id, rep) in alphabet.letters().iter().enumerate() {
        let vs = rep.vertices();
        let last = rep.terminal();
        let before_last = &vs[vs.len() - 2];
        for t in model.neighbors(last) {
            if &t == before_last {
                continue;
            }
            let mut shifted: Vec<Vertex> = vs[1..].to_vec();
            shifted.push(t);
            let (canon, _) = canonical_segment(model, &Segment::from_path(shifted));
            let b_id = alphabet.id_of(&canon).ok_or(AlphabetError::IncompleteAlphabet)?;
            m.set(b_id, a_id);
        }
    }
    for i in 0..n {
        if (0..n).all(|a| !m.get(i, a)) {
            return Err(AlphabetError::DegenerateMatrix("row", i));
        }
        if (0..n).all(|b| !m.get(b, i)) {
            return Err(AlphabetError::DegenerateMatrix("column", i));
        }
    }
    Ok(m)
}

/// The decoration at a fundamental vertex `P`: all segments of length `k+1`
/// starting at `P` together with the letter each one canonicalizes to.
#[derive(Debug, Clone)]
pub struct Decoration {
    pub base: Vertex,
    pub elements: Vec<Segment>,
    pub letter_of: Vec<usize>,
    pub multiplicities: Vec<u64>,
}

impl Decoration {
    pub fn size(&self) -> usize {
        self.elements.len()
    }
}

pub fn build_decoration(
    model: &TreeModel,
    alphabet: &Alphabet,
    base: &Vertex,
) -> Result<Decoration, AlphabetError> {
    if !model.fundamental_vertices().contains(base) {
        return Err(AlphabetError::NotFundamental);
    }
    let mut elements = Vec::new();
    let mut letter_of = Vec::new();
    let mut multiplicities = vec![0u64; alphabet.len()];
    for path in model.paths_from(base, alphabet.k() + 1) {
        let seg = Segment::from_path(path);
        let id = alphabet.classify(model, &seg)?;
        elements.push(seg);
        letter_of.push(id);
        multiplicities[id] += 1;
    }
    Ok(Decoration {
        base: base.clone(),
        elements,
        letter_of,
        multiplicities,
    })
}

/// Number of orbits of directed segments of length `n`, by
/// fundamental-domain enumeration and canonicalization.
pub fn count_orbits(model: &TreeModel, n: usize) -> Result<usize, AlphabetError> {
    if n > model.ball_cap() {
        return Err(AlphabetError::LengthCap {
            requested: n,
            cap: model.ball_cap(),
        });
    }
    let mut seen: BTreeMap<Segment, ()> = BTreeMap::new();
    for base in model.fundamental_vertices() {
        for path in model.paths_from(&base, n) {
            let (canon, _) = canonical_segment(model, &Segment::from_path(path));
            seen.insert(canon, ());
        }
    }
    Ok(seen.len())
}
