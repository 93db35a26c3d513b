//! Pipeline orchestration: parse, build the tree model, check hypotheses,
//! build the alphabet and transition matrix, verify the subshift conditions,
//! compute the K-theory, classify, and emit a deterministic report.

use std::time::Instant;

use num_bigint::BigInt;
use serde::Serialize;

use crate::alphabet::{build_alphabet, build_decoration, build_transition, count_orbits, Alphabet, TransitionMatrix};
use crate::ktheory::{
    bowen_franks, classify, identity_class, pointed_isomorphic, reference_formula_equal_star,
    reference_formula_two_factors, verify_class_oracle, BowenFranks, PointedGroup,
};
use crate::parse::{lower_to_action, parse_spec, SpecSource, TreeModelChoice};
use crate::sft::{check_h2, check_h3, count_words, find_nonperiodic_witness};
use crate::tree::{validate_hypotheses, LatticeAction, TreeModel, Vertex};

pub const SCHEMA_VERSION: u32 = 1;

/// Options for a pipeline run; command-line flags map onto this.
#[derive(Debug, Clone)]
pub struct AnalyzeOptions {
    /// Override for the segment length constant; must be at least the
    /// model's k_min. Wins over a `set k` in the input.
    pub k: Option<usize>,
    /// Override for the free-product tree model. Wins over `set tree_model`.
    pub tree_model: Option<TreeModelChoice>,
    /// Include the transition matrix, letter legend and per-letter images.
    pub emit_matrix: bool,
    /// Include a Graphviz dump of the ball of this radius around the first
    /// fundamental vertex.
    pub emit_ball: Option<usize>,
    /// Largest m for the orbit-vs-word count cross-check.
    pub max_l1_check: usize,
    /// Cap on ball radii and enumerated segment lengths.
    pub ball_cap: Option<usize>,
}

impl Default for AnalyzeOptions {
    fn default() -> AnalyzeOptions {
        AnalyzeOptions {
            k: None,
            tree_model: None,
            emit_matrix: false,
            emit_ball: None,
            max_l1_check: 3,
            ball_cap: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Ok,
    HypothesisFailure,
    ParseError,
    InternalError,
}

/// Process exit code for a finished run: 0 success, 2 hypothesis/validation
/// failure, 3 parse error, 4 internal consistency failure.
pub fn exit_code(report: &Report) -> i32 {
    match report.status {
        Status::Ok => 0,
        Status::HypothesisFailure => 2,
        Status::ParseError => 3,
        Status::InternalError => 4,
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct InputEcho {
    pub filename: String,
    pub text: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct ErrorInfo {
    pub kind: String,
    pub message: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct SiteSummary {
    pub name: String,
    pub degree: usize,
    pub stabilizer_order: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct ModelSummary {
    pub variant: String,
    pub description: String,
    pub factor_orders: Vec<usize>,
    pub edge_group_order: usize,
    pub k_min: usize,
    pub k_used: usize,
    pub sites: Vec<SiteSummary>,
}

#[derive(Debug, Clone, Serialize)]
pub struct CheckSummary {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct HypothesesSection {
    pub passed: bool,
    pub checks: Vec<CheckSummary>,
}

#[derive(Debug, Clone, Serialize)]
pub struct FreeActionSection {
    pub k: usize,
    pub free: bool,
    pub witness: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct AlphabetSection {
    pub size: usize,
    /// Letter legend (canonical segment words), present with the matrix dump.
    pub letters: Option<Vec<String>>,
}

#[derive(Debug, Clone, Serialize)]
pub struct MatrixSection {
    pub rows: Vec<String>,
    pub ones: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct H2Section {
    pub holds: bool,
    pub unreachable_pair: Option<(usize, usize)>,
}

#[derive(Debug, Clone, Serialize)]
pub struct H3Witness {
    pub period: usize,
    pub searched_up_to: usize,
    pub word: Option<Vec<usize>>,
}

#[derive(Debug, Clone, Serialize)]
pub struct H3Section {
    pub holds: bool,
    pub permutation_matrix: bool,
    pub justification: String,
    pub witnesses: Vec<H3Witness>,
}

#[derive(Debug, Clone, Serialize)]
pub struct L1Entry {
    pub m: usize,
    pub segment_length: usize,
    pub orbit_count: String,
    pub word_count: String,
    pub equal: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct ClassSummary {
    pub coords: Vec<String>,
    pub oracle_agrees: bool,
    pub oracle_checks: Vec<CheckSummary>,
}

#[derive(Debug, Clone, Serialize)]
pub struct DecoratedClass {
    pub base: String,
    pub decoration_size: u64,
    pub multiplicities: Vec<u64>,
    pub class: ClassSummary,
}

#[derive(Debug, Clone, Serialize)]
pub struct IdentitySection {
    /// Class of the sum of all letters.
    pub epsilon: ClassSummary,
    /// Class of the unit of the decorated algebra, one entry per
    /// fundamental base vertex.
    pub decorated: Vec<DecoratedClass>,
    /// Base vertex whose decorated class is used for classification.
    pub canonical_base: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct KTheorySection {
    pub k0_invariant_factors: Vec<String>,
    pub k0_description: String,
    pub k0_order: Option<String>,
    pub k1_rank: usize,
    /// Images of the letters in invariant-factor coordinates, present with
    /// the matrix dump.
    pub generator_images: Option<Vec<Vec<String>>>,
    pub identity_class: IdentitySection,
}

#[derive(Debug, Clone, Serialize)]
pub struct ClassificationSection {
    pub stable: String,
    pub pointed: String,
    pub cuntz_index: Option<String>,
    pub matrix_size: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ReferenceSection {
    pub family: String,
    pub parameters: Vec<(String, u64)>,
    pub expected_factors: Vec<String>,
    pub factors_match: bool,
    pub k1_match: bool,
    /// The claimed identity class of the closed form, reduced.
    pub claimed_class: Option<Vec<String>>,
    /// Raw claimed value before reduction (the letter count l+m), when the
    /// family states one.
    pub claimed_value: Option<u64>,
    /// Whether the computed epsilon class and the claimed class agree up to
    /// an automorphism.
    pub epsilon_matches_claim: Option<bool>,
    pub claim_pointed_label: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct RobustnessSection {
    pub baseline_k: usize,
    pub baseline_factors: Vec<String>,
    pub baseline_k1_rank: usize,
    pub factors_match: bool,
    pub k1_match: bool,
    pub identity_pointed_isomorphic: bool,
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct Timings {
    pub parse_ms: f64,
    pub model_ms: f64,
    pub alphabet_ms: f64,
    pub sft_ms: f64,
    pub ktheory_ms: f64,
    pub total_ms: f64,
}

/// The full analysis result. Deterministic for a fixed input and version,
/// except for the timings.
#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub schema: u32,
    pub input: InputEcho,
    pub status: Status,
    pub error: Option<ErrorInfo>,
    pub model: Option<ModelSummary>,
    pub hypotheses: Option<HypothesesSection>,
    pub free_action: Option<FreeActionSection>,
    pub alphabet: Option<AlphabetSection>,
    pub matrix: Option<MatrixSection>,
    pub h2: Option<H2Section>,
    pub h3: Option<H3Section>,
    pub lemma_l1: Option<Vec<L1Entry>>,
    pub k_theory: Option<KTheorySection>,
    pub classification: Option<ClassificationSection>,
    pub reference_comparison: Option<ReferenceSection>,
    pub robustness: Option<RobustnessSection>,
    pub ball_dot: Option<String>,
    pub timings: Timings,
}

impl Report {
    fn empty(src: &SpecSource) -> Report {
        Report {
            schema: SCHEMA_VERSION,
            input: InputEcho {
                filename: src.name.clone(),
                text: src.text.clone(),
            },
            status: Status::Ok,
            error: None,
            model: None,
            hypotheses: None,
            free_action: None,
            alphabet: None,
            matrix: None,
            h2: None,
            h3: None,
            lemma_l1: None,
            k_theory: None,
            classification: None,
            reference_comparison: None,
            robustness: None,
            ball_dot: None,
            timings: Timings::default(),
        }
    }

    fn fail(mut self, status: Status, kind: &str, message: String) -> Report {
        self.status = status;
        self.error = Some(ErrorInfo {
            kind: kind.to_string(),
            message,
        });
        self
    }
}

fn bigints_to_strings(xs: &[BigInt]) -> Vec<String> {
    xs.iter().map(BigInt::to_string).collect()
}

fn class_summary(bf: &BowenFranks, vector: &[BigInt], class: &PointedGroup) -> (ClassSummary, bool) {
    let oracle = verify_class_oracle(bf, vector, class);
    let summary = ClassSummary {
        coords: bigints_to_strings(&class.point),
        oracle_agrees: oracle.agrees,
        oracle_checks: oracle
            .checks
            .iter()
            .map(|c| CheckSummary {
                name: c.name.to_string(),
                passed: c.passed,
                detail: c.detail.clone(),
            })
            .collect(),
    };
    let agrees = oracle.agrees;
    (summary, agrees)
}

struct KRun {
    alphabet: Alphabet,
    matrix: TransitionMatrix,
    bf: BowenFranks,
    /// Decorated identity class per fundamental base, canonical base first.
    decorated: Vec<(Vertex, Vec<u64>, PointedGroup)>,
    epsilon: PointedGroup,
}

/// Alphabet, matrix and K-theory at a given k; shared by the main run and
/// the k-robustness baseline.
fn k_run(model: &TreeModel, k: usize) -> Result<KRun, String> {
    let alphabet = build_alphabet(model, k).map_err(|e| e.to_string())?;
    let matrix = build_transition(model, &alphabet).map_err(|e| e.to_string())?;
    let bf = bowen_franks(&matrix);
    let mut decorated = Vec::new();
    for base in model.fundamental_vertices() {
        let dec = build_decoration(model, &alphabet, &base).map_err(|e| e.to_string())?;
        let cls = identity_class(&bf, Some(&dec.multiplicities));
        decorated.push((
            base,
            dec.multiplicities.clone(),
            cls.decorated.expect("decoration supplied"),
        ));
    }
    let epsilon = identity_class(&bf, None).epsilon;
    Ok(KRun {
        alphabet,
        matrix,
        bf,
        decorated,
        epsilon,
    })
}

/// Runs the full pipeline on a source. Never panics on user input: failures
/// are recorded in the report's status and error fields. The pipeline halts
/// at the first hard failure, leaving a partial report.
pub fn analyze(src: &SpecSource, options: &AnalyzeOptions) -> Report {
    let total_start = Instant::now();
    let mut report = Report::empty(src);

    // Parse and lower.
    let parse_start = Instant::now();
    let mut ast = match parse_spec(src) {
        Ok(ast) => ast,
        Err(d) => return finish(report.fail(Status::ParseError, "parse", d.to_string()), total_start),
    };
    if let Some(tm) = options.tree_model {
        ast.settings.tree_model = Some(tm);
    }
    if let Some(k) = options.k {
        ast.settings.k = Some(k);
    }
    let (action, settings) = match lower_to_action(src, &ast) {
        Ok(x) => x,
        Err(d) => return finish(report.fail(Status::ParseError, "parse", d.to_string()), total_start),
    };
    report.timings.parse_ms = ms(parse_start);

    // Model and hypotheses.
    let model_start = Instant::now();
    let model = match TreeModel::from_action(action) {
        Ok(m) => m,
        Err(e) => return finish(report.fail(Status::HypothesisFailure, "hypothesis", e.to_string()), total_start),
    };
    let model = match options.ball_cap {
        Some(cap) => model.with_ball_cap(cap),
        None => model,
    };
    let hypotheses = validate_hypotheses(&model);
    let k_used = settings.k.unwrap_or(model.k_min());
    report.model = Some(model_summary(&model, k_used));
    report.hypotheses = Some(HypothesesSection {
        passed: hypotheses.passed(),
        checks: hypotheses
            .checks
            .iter()
            .map(|c| CheckSummary {
                name: c.name.to_string(),
                passed: c.passed,
                detail: c.detail.clone(),
            })
            .collect(),
    });
    if !hypotheses.passed() {
        let fail = hypotheses
            .checks
            .iter()
            .find(|c| !c.passed && c.name == "acylindricity")
            .or_else(|| hypotheses.first_failure())
            .expect("a check failed");
        let msg = format!("hypothesis violated: {}: {}", fail.name, fail.detail);
        return finish(report.fail(Status::HypothesisFailure, "hypothesis", msg), total_start);
    }
    if k_used < model.k_min() {
        let msg = format!(
            "requested k = {k_used} is below the acylindricity constant k_min = {}",
            model.k_min()
        );
        return finish(report.fail(Status::HypothesisFailure, "hypothesis", msg), total_start);
    }

    // Freeness of the action on length-k segments.
    let free = model.verify_free_action(k_used);
    report.free_action = Some(FreeActionSection {
        k: k_used,
        free: free.is_ok(),
        witness: free
            .as_ref()
            .err()
            .map(|w| format!("{} fixes {}", model.element_name(&w.element), path_name(&model, &w.path))),
    });
    if free.is_err() {
        return finish(
            report.fail(
                Status::HypothesisFailure,
                "hypothesis",
                format!("the action is not free on segments of length {k_used}"),
            ),
            total_start,
        );
    }
    report.timings.model_ms = ms(model_start);

    if let Some(r) = options.emit_ball {
        match model.ball(&model.fundamental_vertices()[0], r) {
            Ok(ball) => report.ball_dot = Some(model.ball_to_dot(&ball)),
            Err(e) => {
                return finish(
                    report.fail(Status::HypothesisFailure, "validation", e.to_string()),
                    total_start,
                )
            }
        }
    }

    // Alphabet, transition matrix and K-theory at the working k.
    let alphabet_start = Instant::now();
    let run = match k_run(&model, k_used) {
        Ok(run) => run,
        Err(msg) => return finish(report.fail(Status::HypothesisFailure, "validation", msg), total_start),
    };
    report.alphabet = Some(AlphabetSection {
        size: run.alphabet.len(),
        letters: options
            .emit_matrix
            .then(|| run.alphabet.letters().iter().map(|l| l.name(&model)).collect()),
    });
    if options.emit_matrix {
        report.matrix = Some(MatrixSection {
            rows: run.matrix.rows_as_strings(),
            ones: run.matrix.ones(),
        });
    }
    report.timings.alphabet_ms = ms(alphabet_start);

    // Subshift conditions.
    let sft_start = Instant::now();
    let h2 = check_h2(&run.matrix);
    let h2_holds = h2.is_ok();
    report.h2 = Some(H2Section {
        holds: h2_holds,
        unreachable_pair: h2.err(),
    });
    if !h2_holds {
        return finish(
            report.fail(
                Status::HypothesisFailure,
                "hypothesis",
                "the transition graph is not irreducible".to_string(),
            ),
            total_start,
        );
    }
    let h3 = match check_h3(&run.matrix) {
        Ok(out) => out,
        Err(e) => return finish(report.fail(Status::InternalError, "internal", e.to_string()), total_start),
    };
    let mut witnesses = Vec::new();
    for p in 1..=3usize {
        let mut max_len = run.alphabet.len() + p + 2;
        while max_len > p + 1 && count_words(&run.matrix, max_len - 1) > 200_000u32.into() {
            max_len -= 1;
        }
        let word = find_nonperiodic_witness(&run.matrix, p, max_len);
        witnesses.push(H3Witness {
            period: p,
            searched_up_to: max_len,
            word: word.map(|w| w.0),
        });
    }
    let h3_holds = h3.holds;
    report.h3 = Some(H3Section {
        holds: h3.holds,
        permutation_matrix: h3.is_permutation_matrix,
        justification: h3.justification,
        witnesses,
    });
    if !h3_holds {
        return finish(
            report.fail(
                Status::HypothesisFailure,
                "hypothesis",
                "the subshift admits a period with only periodic words".to_string(),
            ),
            total_start,
        );
    }

    // Orbit counting against word counting.
    let mut l1 = Vec::new();
    for m in 0..=options.max_l1_check {
        let n = m + k_used + 1;
        if n > model.ball_cap() {
            break;
        }
        let orbits = match count_orbits(&model, n) {
            Ok(c) => c,
            Err(e) => return finish(report.fail(Status::InternalError, "internal", e.to_string()), total_start),
        };
        let words = count_words(&run.matrix, m);
        l1.push(L1Entry {
            m,
            segment_length: n,
            orbit_count: orbits.to_string(),
            word_count: words.to_string(),
            equal: BigInt::from(orbits) == words.clone().into(),
        });
    }
    let l1_ok = l1.iter().all(|e| e.equal);
    report.lemma_l1 = Some(l1);
    if !l1_ok {
        return finish(
            report.fail(
                Status::InternalError,
                "internal",
                "orbit counts disagree with word counts".to_string(),
            ),
            total_start,
        );
    }
    report.timings.sft_ms = ms(sft_start);

    // K-theory, identity classes, oracles.
    let k_start = Instant::now();
    let (eps_summary, eps_ok) = class_summary(&run.bf, &run.bf.epsilon(), &run.epsilon);
    let mut oracle_ok = eps_ok;
    let mut decorated_sections = Vec::new();
    for (base, mult, cls) in &run.decorated {
        let v: Vec<BigInt> = mult.iter().map(|&c| BigInt::from(c)).collect();
        let (summary, ok) = class_summary(&run.bf, &v, cls);
        oracle_ok &= ok;
        decorated_sections.push(DecoratedClass {
            base: model.vertex_name(base),
            decoration_size: mult.iter().sum(),
            multiplicities: mult.clone(),
            class: summary,
        });
    }
    let canonical = &run.decorated[0];
    let label = classify(&canonical.2, run.bf.k1_rank());
    report.k_theory = Some(KTheorySection {
        k0_invariant_factors: bigints_to_strings(run.bf.group().factors()),
        k0_description: run.bf.group().to_string(),
        k0_order: run.bf.group().order().map(|o| o.to_string()),
        k1_rank: run.bf.k1_rank(),
        generator_images: options.emit_matrix.then(|| {
            (0..run.alphabet.len())
                .map(|a| bigints_to_strings(&run.bf.generator_image(a)))
                .collect()
        }),
        identity_class: IdentitySection {
            epsilon: eps_summary,
            decorated: decorated_sections,
            canonical_base: model.vertex_name(&canonical.0),
        },
    });
    report.classification = Some(ClassificationSection {
        stable: label.stable.clone(),
        pointed: label.pointed.clone(),
        cuntz_index: label.mk_on.as_ref().map(|(n, _)| n.to_string()),
        matrix_size: label.mk_on.as_ref().map(|(_, k)| k.to_string()),
    });
    report.reference_comparison = reference_section(&model, &run);
    if !oracle_ok {
        report.timings.ktheory_ms = ms(k_start);
        return finish(
            report.fail(
                Status::InternalError,
                "internal",
                "identity-class oracle disagrees with the main computation".to_string(),
            ),
            total_start,
        );
    }

    // k-robustness self-test: rerunning at the minimal k must give the same
    // invariants and an equivalent identity class.
    if k_used > model.k_min() {
        match k_run(&model, model.k_min()) {
            Ok(base_run) => {
                let factors_match = base_run.bf.group().factors() == run.bf.group().factors();
                let k1_match = base_run.bf.k1_rank() == run.bf.k1_rank();
                let iso = pointed_isomorphic(&base_run.decorated[0].2, &canonical.2).unwrap_or(false);
                report.robustness = Some(RobustnessSection {
                    baseline_k: model.k_min(),
                    baseline_factors: bigints_to_strings(base_run.bf.group().factors()),
                    baseline_k1_rank: base_run.bf.k1_rank(),
                    factors_match,
                    k1_match,
                    identity_pointed_isomorphic: iso,
                });
                if !(factors_match && k1_match && iso) {
                    report.timings.ktheory_ms = ms(k_start);
                    return finish(
                        report.fail(
                            Status::InternalError,
                            "internal",
                            "invariants changed between k and k_min".to_string(),
                        ),
                        total_start,
                    );
                }
            }
            Err(msg) => {
                return finish(report.fail(Status::InternalError, "internal", msg), total_start);
            }
        }
    }
    report.timings.ktheory_ms = ms(k_start);

    finish(report, total_start)
}

fn finish(mut report: Report, total_start: Instant) -> Report {
    report.timings.total_ms = ms(total_start);
    report
}

fn ms(start: Instant) -> f64 {
    start.elapsed().as_secs_f64() * 1e3
}

fn path_name(model: &TreeModel, path: &[Vertex]) -> String {
    let parts: Vec<String> = path.iter().map(|v| model.vertex_name(v)).collect();
    parts.join(" -> ")
}

fn model_summary(model: &TreeModel, k_used: usize) -> ModelSummary {
    ModelSummary {
        variant: model.action().variant_name().to_string(),
        description: model.to_string(),
        factor_orders: model.factors().iter().map(|g| g.order()).collect(),
        edge_group_order: model.edge_group().order(),
        k_min: model.k_min(),
        k_used,
        sites: model
            .sites()
            .into_iter()
            .map(|s| SiteSummary {
                name: model.site_name(s),
                degree: model.degree(s),
                stabilizer_order: model.stabilizer_of_base(s).len(),
            })
            .collect(),
    }
}

fn reference_section(model: &TreeModel, run: &KRun) -> Option<ReferenceSection> {
    let factors = model.factors();
    match model.action() {
        LatticeAction::EdgeFreeProduct(..) => {
            let l = (factors[0].order() - 1) as u64;
            let m = (factors[1].order() - 1) as u64;
            let claimed = reference_formula_two_factors(l, m).ok()?;
            let factors_match = run.bf.group() == &claimed.group;
            let epsilon_matches_claim = pointed_isomorphic(&run.epsilon, &claimed).ok();
            let claim_label = classify(&claimed, 0);
            Some(ReferenceSection {
                family: "two_factor_free_product".to_string(),
                parameters: vec![("l".to_string(), l), ("m".to_string(), m)],
                expected_factors: bigints_to_strings(claimed.group.factors()),
                factors_match,
                k1_match: run.bf.k1_rank() == 0,
                claimed_class: Some(bigints_to_strings(&claimed.point)),
                claimed_value: Some(l + m),
                epsilon_matches_claim,
                claim_pointed_label: Some(claim_label.pointed),
            })
        }
        LatticeAction::StarFreeProduct(gs) => {
            let n = gs.len() as u64;
            let order = gs[0].order();
            if !gs.iter().all(|g| g.order() == order) {
                return None;
            }
            let gamma = (order - 1) as u64;
            let expected = reference_formula_equal_star(n, gamma).ok()?;
            Some(ReferenceSection {
                family: "equal_order_star".to_string(),
                parameters: vec![("n".to_string(), n), ("gamma".to_string(), gamma)],
                expected_factors: bigints_to_strings(expected.factors()),
                factors_match: run.bf.group() == &expected,
                k1_match: run.bf.k1_rank() == 0,
                claimed_class: None,
                claimed_value: None,
                epsilon_matches_claim: None,
                claim_pointed_label: None,
            })
        }
        LatticeAction::Amalgam { .. } => None,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EmitFormat {
    Text,
    Json,
}

/// Serializes a report with a stable field order; text output is a
/// human-readable digest of the same data.
pub fn emit(report: &Report, format: EmitFormat) -> String {
    match format {
        EmitFormat::Json => {
            let mut s = serde_json::to_string_pretty(report).expect("report serializes");
            s.push('\n');
            s
        }
        EmitFormat::Text => emit_text(report),
    }
}

fn emit_text(report: &Report) -> String {
    use std::fmt::Write;
    let mut out = String::new();
    let _ = writeln!(out, "input: {}", report.input.filename);
    let _ = writeln!(
        out,
        "status: {}",
        match report.status {
            Status::Ok => "ok",
            Status::HypothesisFailure => "hypothesis failure",
            Status::ParseError => "parse error",
            Status::InternalError => "internal error",
        }
    );
    if let Some(err) = &report.error {
        let _ = writeln!(out, "error: {}", err.message);
    }
    if let Some(m) = &report.model {
        let _ = writeln!(out, "model: {} (k_min = {}, k = {})", m.description, m.k_min, m.k_used);
        for s in &m.sites {
            let _ = writeln!(
                out,
                "  site {}: degree {}, stabilizer order {}",
                s.name, s.degree, s.stabilizer_order
            );
        }
    }
    if let Some(h) = &report.hypotheses {
        let _ = writeln!(out, "hypotheses: {}", if h.passed { "pass" } else { "FAIL" });
        for c in &h.checks {
            let _ = writeln!(out, "  [{}] {}: {}", if c.passed { "ok" } else { "FAIL" }, c.name, c.detail);
        }
    }
    if let Some(f) = &report.free_action {
        let _ = writeln!(out, "free action on length-{} segments: {}", f.k, f.free);
        if let Some(w) = &f.witness {
            let _ = writeln!(out, "  witness: {w}");
        }
    }
    if let Some(a) = &report.alphabet {
        let _ = writeln!(out, "alphabet size: {}", a.size);
        if let Some(letters) = &a.letters {
            for (i, l) in letters.iter().enumerate() {
                let _ = writeln!(out, "  {i}: {l}");
            }
        }
    }
    if let Some(m) = &report.matrix {
        let _ = writeln!(out, "transition matrix ({} ones):", m.ones);
        for r in &m.rows {
            let _ = writeln!(out, "  {r}");
        }
    }
    if let Some(h) = &report.h2 {
        let _ = writeln!(out, "irreducible (H2): {}", h.holds);
    }
    if let Some(h) = &report.h3 {
        let _ = writeln!(out, "aperiodic (H3): {} ({})", h.holds, h.justification);
    }
    if let Some(l1) = &report.lemma_l1 {
        for e in l1 {
            let _ = writeln!(
                out,
                "orbit/word count at m = {}: {} vs {} ({})",
                e.m,
                e.orbit_count,
                e.word_count,
                if e.equal { "equal" } else { "MISMATCH" }
            );
        }
    }
    if let Some(k) = &report.k_theory {
        let _ = writeln!(
            out,
            "K0 = {} (invariant factors [{}])",
            k.k0_description,
            k.k0_invariant_factors.join(", ")
        );
        let _ = writeln!(out, "K1 rank = {}", k.k1_rank);
        let ic = &k.identity_class;
        let _ = writeln!(
            out,
            "identity class (epsilon): ({}) oracle {}",
            ic.epsilon.coords.join(", "),
            if ic.epsilon.oracle_agrees { "agrees" } else { "DISAGREES" }
        );
        for d in &ic.decorated {
            let _ = writeln!(
                out,
                "identity class (decorated at {}): ({}) from {} decorations, oracle {}",
                d.base,
                d.class.coords.join(", "),
                d.decoration_size,
                if d.class.oracle_agrees { "agrees" } else { "DISAGREES" }
            );
        }
    }
    if let Some(c) = &report.classification {
        let _ = writeln!(out, "classification: {}; {}", c.stable, c.pointed);
    }
    if let Some(r) = &report.reference_comparison {
        let params: Vec<String> = r.parameters.iter().map(|(k, v)| format!("{k} = {v}")).collect();
        let _ = writeln!(
            out,
            "reference ({}, {}): expected factors [{}], match = {}",
            r.family,
            params.join(", "),
            r.expected_factors.join(", "),
            r.factors_match
        );
        if let Some(v) = r.claimed_value {
            let _ = writeln!(
                out,
                "  claimed identity class {} -> ({}); epsilon matches claim: {}",
                v,
                r.claimed_class.as_deref().unwrap_or(&[]).join(", "),
                r.epsilon_matches_claim
                    .map(|b| b.to_string())
                    .unwrap_or_else(|| "n/a".to_string())
            );
        }
    }
    if let Some(r) = &report.robustness {
        let _ = writeln!(
            out,
            "robustness vs k = {}: factors match = {}, K1 match = {}, identity class equivalent = {}",
            r.baseline_k, r.factors_match, r.k1_match, r.identity_pointed_isomorphic
        );
    }
    if let Some(dot) = &report.ball_dot {
        let _ = writeln!(out, "ball dump:");
        out.push_str(dot);
    }
    let _ = writeln!(out, "total time: {:.1} ms", report.timings.total_ms);
    out
}
