//! Local construction of the Bass-Serre tree for the supported lattice
//! actions, together with the group action, stabilizers and the
//! acylindricity constant.
//!
//! All three supported actions are handled by one coset-word engine:
//!
//! * edge free product `G0 * G1` — segment of groups with trivial edge group,
//! * amalgam `G0 *_{C} G1` — segment of groups with edge group `C`,
//! * star free product `G0 * ... * G{n-1}` — star of groups with a trivial
//!   central vertex group and trivial edge groups.
//!
//! Group elements are alternating words of nontrivial left-transversal
//! representatives followed by an edge-group tail; vertices are the words of
//! the corresponding cosets. Normal forms are unique, so vertex equality is
//! structural equality.

use std::collections::HashMap;
use std::fmt;

use thiserror::Error;

use crate::group::{is_malnormal, left_transversal, Embedding, FiniteGroup};

/// Default cap on ball radii; everything the pipeline needs stays well under
/// this, and path enumeration grows exponentially with the radius.
pub const DEFAULT_BALL_CAP: usize = 12;

/// A finite description of a uniform lattice action on a tree.
#[derive(Debug, Clone)]
pub enum LatticeAction {
    /// Free product of two finite groups acting on the Bass-Serre tree of the
    /// single-edge splitting (one vertex per factor).
    EdgeFreeProduct(FiniteGroup, FiniteGroup),
    /// Free product of `n >= 2` finite groups acting on the Bass-Serre tree
    /// of the star splitting: a central vertex with trivial group joined to
    /// one vertex per factor.
    StarFreeProduct(Vec<FiniteGroup>),
    /// Amalgamated free product over a common subgroup, given by its two
    /// embeddings. Sources of the embeddings must be the same group.
    Amalgam {
        into_left: Embedding,
        into_right: Embedding,
    },
}

impl LatticeAction {
    pub fn variant_name(&self) -> &'static str {
        match self {
            LatticeAction::EdgeFreeProduct(..) => "edge_free_product",
            LatticeAction::StarFreeProduct(..) => "star_free_product",
            LatticeAction::Amalgam { .. } => "amalgam",
        }
    }
}

#[derive(Debug, Error)]
pub enum TreeError {
    #[error("star free product needs at least 2 factors, got {0}")]
    TooFewFactors(usize),
    #[error("amalgam embeddings have different source groups")]
    MismatchedCores,
    #[error("ball radius {requested} exceeds the cap {cap}")]
    RadiusCap { requested: usize, cap: usize },
    #[error("malformed vertex word: {0}")]
    MalformedVertex(String),
    #[error("hypothesis violated: {name}: {detail}")]
    Hypothesis { name: String, detail: String },
}

/// Vertex type in the quotient graph of groups.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Site {
    /// The trivially-stabilized central vertex of a star model.
    Central,
    /// The vertex whose stabilizer is factor `j` (cosets of factor `j`).
    Coset(u16),
}

/// One letter of a normal-form word: a nontrivial transversal representative
/// in the given factor.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Letter {
    pub factor: u16,
    pub rep: u16,
}

/// A vertex of the tree: a coset in normal form.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Vertex {
    pub site: Site,
    pub word: Vec<Letter>,
}

/// A group element in normal form: alternating transversal letters followed
/// by an edge-group tail.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct GroupElement {
    pub letters: Vec<Letter>,
    pub tail: u16,
}

impl GroupElement {
    pub fn is_identity(&self, model: &TreeModel) -> bool {
        self.letters.is_empty() && self.tail == model.edge.identity()
    }
}

/// Result of a hypothesis check, with a machine-readable name.
#[derive(Debug, Clone)]
pub struct HypothesisCheck {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone)]
pub struct HypothesisReport {
    pub checks: Vec<HypothesisCheck>,
}

impl HypothesisReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn first_failure(&self) -> Option<&HypothesisCheck> {
        self.checks.iter().find(|c| !c.passed)
    }
}

/// A nontrivial element fixing a path, disproving freeness of the action on
/// paths of that length.
#[derive(Debug, Clone)]
pub struct FixedPathWitness {
    pub element: GroupElement,
    pub path: Vec<Vertex>,
}

/// A ball of the tree around a center, as produced by breadth-first search.
/// Parent links encode the (tree) edge set: `|edges| = |vertices| - 1`.
#[derive(Debug, Clone)]
pub struct Ball {
    pub center: Vertex,
    pub radius: usize,
    pub vertices: Vec<Vertex>,
    pub dist: Vec<usize>,
    pub parent: Vec<Option<usize>>,
}

impl Ball {
    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.parent
            .iter()
            .enumerate()
            .filter_map(|(i, p)| p.map(|p| (p, i)))
    }

    pub fn layer_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0usize; self.radius + 1];
        for &d in &self.dist {
            sizes[d] += 1;
        }
        sizes
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Shape {
    Segment,
    Star,
}

/// The locally-constructible tree with its lattice action.
#[derive(Debug, Clone)]
pub struct TreeModel {
    action: LatticeAction,
    shape: Shape,
    factors: Vec<FiniteGroup>,
    edge: FiniteGroup,
    embeds: Vec<Embedding>,
    transversals: Vec<Vec<u16>>,
    // Per factor, per element x: decomposition x = t·e(γ) with t a transversal
    // representative and γ in the edge group.
    rep_of: Vec<Vec<u16>>,
    edge_part: Vec<Vec<u16>>,
    in_image: Vec<Vec<Option<u16>>>,
    k_min: u8,
    ball_cap: usize,
}

/// Builds the tree model and verifies the method hypotheses; any failed
/// check (trivial factor, two-ended tree, non-malnormal amalgam subgroup) is
/// an error carrying the failing check.
pub fn build_model(action: LatticeAction) -> Result<TreeModel, TreeError> {
    let model = TreeModel::from_action(action)?;
    let report = validate_hypotheses(&model);
    // A violated method hypothesis (non-malnormal amalgam subgroup) is the
    // most specific reason; report it ahead of geometric degeneracies.
    let fail = report
        .checks
        .iter()
        .find(|c| !c.passed && c.name == "acylindricity")
        .or_else(|| report.first_failure());
    if let Some(fail) = fail {
        return Err(TreeError::Hypothesis {
            name: fail.name.to_string(),
            detail: fail.detail.clone(),
        });
    }
    Ok(model)
}

/// Checks the standing hypotheses for the action: nontrivial factors, proper
/// amalgam subgroup, infinite tree with more than two ends, uniformity,
/// minimality, and the acylindricity source (malnormality for amalgams).
/// Never fails; returns a report with one entry per check.
pub fn validate_hypotheses(model: &TreeModel) -> HypothesisReport {
    let mut checks = Vec::new();

    let trivial: Vec<usize> = model
        .factors
        .iter()
        .enumerate()
        .filter(|(_, g)| g.order() < 2)
        .map(|(i, _)| i)
        .collect();
    let nontrivial_ok = trivial.is_empty();
    checks.push(HypothesisCheck {
        name: "nontrivial_factors",
        passed: nontrivial_ok,
        detail: if nontrivial_ok {
            "every factor has order >= 2".to_string()
        } else {
            format!("trivial factor at position {}", trivial[0])
        },
    });

    let proper = match model.shape {
        Shape::Segment => model.embeds.iter().all(|e| e.index() >= 2),
        Shape::Star => true,
    };
    checks.push(HypothesisCheck {
        name: "proper_edge_subgroup",
        passed: proper,
        detail: if proper {
            "edge subgroup is proper in both factors".to_string()
        } else {
            "edge subgroup equals a whole factor".to_string()
        },
    });

    let infinite = nontrivial_ok && proper;
    checks.push(HypothesisCheck {
        name: "infinite_tree",
        passed: infinite,
        detail: if infinite {
            "nontrivial splitting generates an infinite tree".to_string()
        } else {
            "degenerate splitting; the tree is finite".to_string()
        },
    });

    let degrees = model.site_degrees();
    let max_degree = degrees.iter().map(|(_, d)| *d).max().unwrap_or(0);
    let ends_ok = infinite && max_degree >= 3;
    checks.push(HypothesisCheck {
        name: "more_than_two_ends",
        passed: ends_ok,
        detail: if ends_ok {
            format!("a vertex of degree {max_degree} >= 3 exists")
        } else {
            "every vertex has degree <= 2: the tree is a line with two ends".to_string()
        },
    });

    checks.push(HypothesisCheck {
        name: "uniform_lattice",
        passed: true,
        detail: "finite vertex groups and finite quotient graph by construction".to_string(),
    });

    checks.push(HypothesisCheck {
        name: "minimal_action",
        passed: infinite,
        detail: if infinite {
            "no proper invariant subtree for a nondegenerate splitting".to_string()
        } else {
            "degenerate splitting".to_string()
        },
    });

    let (acyl_ok, acyl_detail) = match model.shape {
        Shape::Star => (true, "free products act freely on directed edges (k = 1)".to_string()),
        Shape::Segment if model.edge.order() == 1 => {
            (true, "free products act freely on directed edges (k = 1)".to_string())
        }
        Shape::Segment => {
            let mut failure = None;
            for (side, emb) in model.embeds.iter().enumerate() {
                if let Err(w) = is_malnormal(emb) {
                    failure = Some(format!(
                        "edge subgroup is not malnormal in factor {side}: conjugating {} by {} stays in the subgroup",
                        emb.target().name(w.element),
                        emb.target().name(w.conjugator),
                    ));
                    break;
                }
            }
            match failure {
                None => (true, "edge subgroup malnormal in both factors (k = 2)".to_string()),
                Some(d) => (false, d),
            }
        }
    };
    checks.push(HypothesisCheck {
        name: "acylindricity",
        passed: acyl_ok,
        detail: acyl_detail,
    });

    HypothesisReport { checks }
}

impl TreeModel {
    /// Structural construction without hypothesis validation. Used by
    /// [`build_model`] and by [`validate_hypotheses`] callers that want the
    /// report for a degenerate action.
    pub fn from_action(action: LatticeAction) -> Result<TreeModel, TreeError> {
        let (shape, factors, edge, embeds) = match &action {
            LatticeAction::EdgeFreeProduct(g0, g1) => {
                let edge = FiniteGroup::cyclic(1).expect("trivial group");
                let embeds = vec![Embedding::trivial(g0.clone()), Embedding::trivial(g1.clone())];
                (Shape::Segment, vec![g0.clone(), g1.clone()], edge, embeds)
            }
            LatticeAction::StarFreeProduct(gs) => {
                if gs.len() < 2 {
                    return Err(TreeError::TooFewFactors(gs.len()));
                }
                let edge = FiniteGroup::cyclic(1).expect("trivial group");
                let embeds = gs.iter().map(|g| Embedding::trivial(g.clone())).collect();
                (Shape::Star, gs.clone(), edge, embeds)
            }
            LatticeAction::Amalgam {
                into_left,
                into_right,
            } => {
                if into_left.source() != into_right.source() {
                    return Err(TreeError::MismatchedCores);
                }
                let edge = into_left.source().clone();
                let factors = vec![into_left.target().clone(), into_right.target().clone()];
                (Shape::Segment, factors, edge, vec![into_left.clone(), into_right.clone()])
            }
        };

        let k_min = match (shape, edge.order()) {
            (Shape::Star, _) => 1,
            (Shape::Segment, 1) => 1,
            (Shape::Segment, _) => 2,
        };

        let mut transversals = Vec::new();
        let mut rep_of = Vec::new();
        let mut edge_part = Vec::new();
        let mut in_image = Vec::new();
        for emb in &embeds {
            let g = emb.target();
            let reps = left_transversal(emb);
            let mut rep = vec![u16::MAX; g.order()];
            let mut part = vec![u16::MAX; g.order()];
            for &t in &reps {
                for c in 0..edge.order() as u16 {
                    let x = g.mul(t, emb.apply(c));
                    rep[x as usize] = t;
                    part[x as usize] = c;
                }
            }
            debug_assert!(rep.iter().all(|&r| r != u16::MAX));
            let img: Vec<Option<u16>> = (0..g.order() as u16).map(|x| emb.preimage(x)).collect();
            transversals.push(reps);
            rep_of.push(rep);
            edge_part.push(part);
            in_image.push(img);
        }

        Ok(TreeModel {
            action,
            shape,
            factors,
            edge,
            embeds,
            transversals,
            rep_of,
            edge_part,
            in_image,
            k_min,
            ball_cap: DEFAULT_BALL_CAP,
        })
    }

    pub fn with_ball_cap(mut self, cap: usize) -> TreeModel {
        self.ball_cap = cap;
        self
    }

    pub fn action(&self) -> &LatticeAction {
        &self.action
    }

    pub fn k_min(&self) -> usize {
        self.k_min as usize
    }

    pub fn ball_cap(&self) -> usize {
        self.ball_cap
    }

    pub fn factors(&self) -> &[FiniteGroup] {
        &self.factors
    }

    pub fn edge_group(&self) -> &FiniteGroup {
        &self.edge
    }

    pub fn is_star(&self) -> bool {
        self.shape == Shape::Star
    }

    /// Sites of the quotient graph, in canonical order.
    pub fn sites(&self) -> Vec<Site> {
        match self.shape {
            Shape::Segment => vec![Site::Coset(0), Site::Coset(1)],
            Shape::Star => {
                let mut v = vec![Site::Central];
                v.extend((0..self.factors.len() as u16).map(Site::Coset));
                v
            }
        }
    }

    pub fn site_name(&self, site: Site) -> String {
        match (self.shape, site) {
            (Shape::Segment, Site::Coset(0)) => "P".to_string(),
            (Shape::Segment, Site::Coset(1)) => "Q".to_string(),
            (Shape::Star, Site::Central) => "P".to_string(),
            (Shape::Star, Site::Coset(j)) => format!("Q{}", j + 1),
            _ => "?".to_string(),
        }
    }

    pub fn degree(&self, site: Site) -> usize {
        match (self.shape, site) {
            (Shape::Segment, Site::Coset(j)) => self.transversals[j as usize].len(),
            (Shape::Star, Site::Central) => self.factors.len(),
            (Shape::Star, Site::Coset(j)) => self.factors[j as usize].order(),
            _ => 0,
        }
    }

    pub fn site_degrees(&self) -> Vec<(Site, usize)> {
        self.sites().into_iter().map(|s| (s, self.degree(s))).collect()
    }

    pub fn base_vertex(&self, site: Site) -> Vertex {
        Vertex {
            site,
            word: Vec::new(),
        }
    }

    /// The fundamental-domain vertices, one per site.
    pub fn fundamental_vertices(&self) -> Vec<Vertex> {
        self.sites().into_iter().map(|s| self.base_vertex(s)).collect()
    }

    pub fn identity_element(&self) -> GroupElement {
        GroupElement {
            letters: Vec::new(),
            tail: self.edge.identity(),
        }
    }

    /// The element whose normal form is the given vertex word with trivial
    /// tail; it carries the base vertex of the word's site onto the vertex.
    pub fn element_of_word(&self, word: &[Letter]) -> GroupElement {
        GroupElement {
            letters: word.to_vec(),
            tail: self.edge.identity(),
        }
    }

    fn decompose(&self, factor: usize, x: u16) -> (u16, u16) {
        (self.rep_of[factor][x as usize], self.edge_part[factor][x as usize])
    }

    /// Right-multiplies a normal form by an arbitrary element of one factor,
    /// re-normalizing.
    fn mul_factor(&self, elem: &mut GroupElement, factor: usize, x: u16) {
        let g = &self.factors[factor];
        let y = g.mul(self.embeds[factor].apply(elem.tail), x);
        if let Some(c) = self.in_image[factor][y as usize] {
            elem.tail = c;
            return;
        }
        if let Some(last) = elem.letters.last().copied() {
            if last.factor as usize == factor {
                let z = g.mul(last.rep, y);
                elem.letters.pop();
                if let Some(c) = self.in_image[factor][z as usize] {
                    elem.tail = c;
                    return;
                }
                let (t, c) = self.decompose(factor, z);
                elem.letters.push(Letter {
                    factor: factor as u16,
                    rep: t,
                });
                elem.tail = c;
                return;
            }
        }
        let (t, c) = self.decompose(factor, y);
        elem.letters.push(Letter {
            factor: factor as u16,
            rep: t,
        });
        elem.tail = c;
    }

    fn mul_edge(&self, elem: &mut GroupElement, c: u16) {
        elem.tail = self.edge.mul(elem.tail, c);
    }

    pub fn mul(&self, a: &GroupElement, b: &GroupElement) -> GroupElement {
        let mut acc = a.clone();
        for l in &b.letters {
            self.mul_factor(&mut acc, l.factor as usize, l.rep);
        }
        self.mul_edge(&mut acc, b.tail);
        acc
    }

    pub fn inv(&self, a: &GroupElement) -> GroupElement {
        let mut acc = self.identity_element();
        self.mul_edge(&mut acc, self.edge.inv(a.tail));
        for l in a.letters.iter().rev() {
            let x = self.factors[l.factor as usize].inv(l.rep);
            self.mul_factor(&mut acc, l.factor as usize, x);
        }
        acc
    }

    /// Left action of an element on a vertex; the result is in normal form.
    pub fn act(&self, g: &GroupElement, v: &Vertex) -> Vertex {
        let moved = self.mul(g, &self.element_of_word(&v.word));
        self.vertex_of_element(moved, v.site)
    }

    /// The coset vertex of an element at the given site.
    fn vertex_of_element(&self, elem: GroupElement, site: Site) -> Vertex {
        let mut word = elem.letters;
        if let Site::Coset(j) = site {
            if let Some(last) = word.last() {
                if last.factor == j {
                    word.pop();
                }
            }
        }
        Vertex { site, word }
    }

    /// Validates that a vertex word is a normal form for its site.
    pub fn check_vertex(&self, v: &Vertex) -> Result<(), TreeError> {
        match (self.shape, v.site) {
            (Shape::Segment, Site::Coset(j)) if j < 2 => {
                if let Some(last) = v.word.last() {
                    if last.factor == j {
                        return Err(TreeError::MalformedVertex(format!(
                            "coset word for site {} must not end in a factor-{} letter",
                            self.site_name(v.site),
                            j
                        )));
                    }
                }
            }
            (Shape::Star, Site::Central) => {}
            (Shape::Star, Site::Coset(j)) if (j as usize) < self.factors.len() => {
                if let Some(last) = v.word.last() {
                    if last.factor == j {
                        return Err(TreeError::MalformedVertex(format!(
                            "coset word for site {} must not end in a factor-{} letter",
                            self.site_name(v.site),
                            j
                        )));
                    }
                }
            }
            _ => {
                return Err(TreeError::MalformedVertex(format!(
                    "site {:?} does not exist in this model",
                    v.site
                )))
            }
        }
        let mut prev: Option<u16> = None;
        for l in &v.word {
            let f = l.factor as usize;
            if f >= self.factors.len() {
                return Err(TreeError::MalformedVertex(format!("letter factor {f} out of range")));
            }
            if prev == Some(l.factor) {
                return Err(TreeError::MalformedVertex(
                    "consecutive letters from the same factor".to_string(),
                ));
            }
            let valid_rep = l.rep != self.factors[f].identity()
                && self.rep_of[f][l.rep as usize] == l.rep
                && (l.rep as usize) < self.factors[f].order();
            if !valid_rep {
                return Err(TreeError::MalformedVertex(format!(
                    "letter {} in factor {f} is not a nontrivial transversal representative",
                    l.rep
                )));
            }
            prev = Some(l.factor);
        }
        Ok(())
    }

    /// As [`TreeModel::neighbors`], rejecting malformed vertex words.
    pub fn neighbors_checked(&self, v: &Vertex) -> Result<Vec<Vertex>, TreeError> {
        self.check_vertex(v)?;
        Ok(self.neighbors(v))
    }

    /// All neighbors of a vertex, in a deterministic order; the length equals
    /// the degree of the vertex's site. The vertex is assumed to be in
    /// normal form.
    pub fn neighbors(&self, v: &Vertex) -> Vec<Vertex> {
        match (self.shape, v.site) {
            (Shape::Segment, Site::Coset(j)) => {
                let other = 1 - j;
                self.transversals[j as usize]
                    .iter()
                    .map(|&t| {
                        if t == self.factors[j as usize].identity() {
                            let mut word = v.word.clone();
                            word.pop();
                            Vertex {
                                site: Site::Coset(other),
                                word,
                            }
                        } else {
                            let mut word = v.word.clone();
                            word.push(Letter { factor: j, rep: t });
                            Vertex {
                                site: Site::Coset(other),
                                word,
                            }
                        }
                    })
                    .collect()
            }
            (Shape::Star, Site::Central) => (0..self.factors.len() as u16)
                .map(|j| {
                    let mut word = v.word.clone();
                    if word.last().map(|l| l.factor) == Some(j) {
                        word.pop();
                    }
                    Vertex {
                        site: Site::Coset(j),
                        word,
                    }
                })
                .collect(),
            (Shape::Star, Site::Coset(j)) => {
                let g = &self.factors[j as usize];
                let mut out = Vec::with_capacity(g.order());
                out.push(Vertex {
                    site: Site::Central,
                    word: v.word.clone(),
                });
                for a in g.elements() {
                    if a == g.identity() {
                        continue;
                    }
                    let mut word = v.word.clone();
                    word.push(Letter { factor: j, rep: a });
                    out.push(Vertex {
                        site: Site::Central,
                        word,
                    });
                }
                out
            }
            _ => Vec::new(),
        }
    }

    /// The stabilizer of a fundamental base vertex, as a list of normal-form
    /// elements (the vertex group; trivial for the central site).
    pub fn stabilizer_of_base(&self, site: Site) -> Vec<GroupElement> {
        match (self.shape, site) {
            (_, Site::Central) => vec![self.identity_element()],
            (_, Site::Coset(j)) => {
                let j = j as usize;
                self.factors[j]
                    .elements()
                    .map(|a| {
                        let (t, c) = self.decompose(j, a);
                        let letters = if t == self.factors[j].identity() {
                            Vec::new()
                        } else {
                            vec![Letter {
                                factor: j as u16,
                                rep: t,
                            }]
                        };
                        GroupElement { letters, tail: c }
                    })
                    .collect()
            }
        }
    }

    /// Breadth-first ball of radius `r` around a center.
    pub fn ball(&self, center: &Vertex, r: usize) -> Result<Ball, TreeError> {
        if r > self.ball_cap {
            return Err(TreeError::RadiusCap {
                requested: r,
                cap: self.ball_cap,
            });
        }
        self.check_vertex(center)?;
        let mut vertices = vec![center.clone()];
        let mut dist = vec![0usize];
        let mut parent: Vec<Option<usize>> = vec![None];
        let mut index: HashMap<Vertex, usize> = HashMap::new();
        index.insert(center.clone(), 0);
        let mut head = 0;
        while head < vertices.len() {
            let d = dist[head];
            if d == r {
                head += 1;
                continue;
            }
            let v = vertices[head].clone();
            for w in self.neighbors(&v) {
                if let Some(&i) = index.get(&w) {
                    debug_assert_eq!(
                        parent[head],
                        Some(i),
                        "non-tree adjacency found in ball construction"
                    );
                    continue;
                }
                index.insert(w.clone(), vertices.len());
                vertices.push(w);
                dist.push(d + 1);
                parent.push(Some(head));
            }
            head += 1;
        }
        Ok(Ball {
            center: center.clone(),
            radius: r,
            vertices,
            dist,
            parent,
        })
    }

    /// All non-backtracking paths of exactly `len` steps starting at `start`.
    /// In a tree these are exactly the directed segments of length `len`.
    pub fn paths_from(&self, start: &Vertex, len: usize) -> Vec<Vec<Vertex>> {
        let mut out = Vec::new();
        let mut stack = vec![start.clone()];
        self.extend_paths(&mut stack, len, &mut out);
        out
    }

    fn extend_paths(&self, stack: &mut Vec<Vertex>, len: usize, out: &mut Vec<Vec<Vertex>>) {
        if stack.len() == len + 1 {
            out.push(stack.clone());
            return;
        }
        let last = stack.last().expect("nonempty path stack").clone();
        let prev = if stack.len() >= 2 {
            Some(stack[stack.len() - 2].clone())
        } else {
            None
        };
        for w in self.neighbors(&last) {
            if Some(&w) == prev.as_ref() {
                continue;
            }
            stack.push(w);
            self.extend_paths(stack, len, out);
            stack.pop();
        }
    }

    /// Checks that the action is free on directed segments of length `k`.
    /// By transitivity on each site it suffices to test segments whose
    /// initial vertex is a fundamental base; any fixing element must lie in
    /// the finite stabilizer of that base.
    pub fn verify_free_action(&self, k: usize) -> Result<(), FixedPathWitness> {
        assert!(k >= 1, "freeness is only meaningful for k >= 1");
        for site in self.sites() {
            let base = self.base_vertex(site);
            let stab = self.stabilizer_of_base(site);
            for path in self.paths_from(&base, k) {
                for g in &stab {
                    if g.is_identity(self) {
                        continue;
                    }
                    if path.iter().all(|v| &self.act(g, v) == v) {
                        return Err(FixedPathWitness {
                            element: g.clone(),
                            path,
                        });
                    }
                }
            }
        }
        Ok(())
    }

    /// Elements of word length at most `max_letters` (all tails); used by
    /// tests and witness searches.
    pub fn enumerate_elements(&self, max_letters: usize) -> Vec<GroupElement> {
        let mut words: Vec<Vec<Letter>> = vec![Vec::new()];
        let mut frontier: Vec<Vec<Letter>> = vec![Vec::new()];
        for _ in 0..max_letters {
            let mut next = Vec::new();
            for w in &frontier {
                let last = w.last().map(|l| l.factor);
                for (j, tr) in self.transversals.iter().enumerate() {
                    if last == Some(j as u16) {
                        continue;
                    }
                    for &t in tr {
                        if t == self.factors[j].identity() {
                            continue;
                        }
                        let mut w2 = w.clone();
                        w2.push(Letter {
                            factor: j as u16,
                            rep: t,
                        });
                        next.push(w2);
                    }
                }
            }
            words.extend(next.iter().cloned());
            frontier = next;
        }
        let mut out = Vec::new();
        for w in words {
            for c in 0..self.edge.order() as u16 {
                out.push(GroupElement {
                    letters: w.clone(),
                    tail: c,
                });
            }
        }
        out
    }

    /// Human-readable rendering of a letter, e.g. `a2` for element `2` of
    /// factor 0.
    pub fn letter_name(&self, l: Letter) -> String {
        let f = (b'a' + (l.factor as u8 % 26)) as char;
        format!("{}{}", f, self.factors[l.factor as usize].name(l.rep))
    }

    pub fn vertex_name(&self, v: &Vertex) -> String {
        if v.word.is_empty() {
            self.site_name(v.site)
        } else {
            let word: Vec<String> = v.word.iter().map(|&l| self.letter_name(l)).collect();
            format!("{}.{}", word.join("."), self.site_name(v.site))
        }
    }

    pub fn element_name(&self, g: &GroupElement) -> String {
        let mut parts: Vec<String> = g.letters.iter().map(|&l| self.letter_name(l)).collect();
        if g.tail != self.edge.identity() {
            parts.push(format!("e{}", self.edge.name(g.tail)));
        }
        if parts.is_empty() {
            "1".to_string()
        } else {
            parts.join(".")
        }
    }

    /// Graphviz dump of a ball, vertices labeled by normal-form words.
    pub fn ball_to_dot(&self, ball: &Ball) -> String {
        let mut s = String::from("graph ball {\n");
        for (i, v) in ball.vertices.iter().enumerate() {
            s.push_str(&format!("  n{} [label=\"{}\"];\n", i, self.vertex_name(v)));
        }
        for (p, c) in ball.edges() {
            s.push_str(&format!("  n{p} -- n{c};\n"));
        }
        s.push_str("}\n");
        s
    }
}

impl fmt::Display for TreeModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let orders: Vec<String> = self.factors.iter().map(|g| g.order().to_string()).collect();
        match self.shape {
            Shape::Segment if self.edge.order() == 1 => {
                write!(f, "edge free product of orders {}", orders.join(", "))
            }
            Shape::Segment => write!(
                f,
                "amalgam of orders {} over a subgroup of order {}",
                orders.join(", "),
                self.edge.order()
            ),
            Shape::Star => write!(f, "star free product of orders {}", orders.join(", ")),
        }
    }
}
