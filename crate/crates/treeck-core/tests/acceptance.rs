//! Acceptance suite: one test per acceptance criterion, each printing a
//! pass/fail line. Run with
//! `cargo test -p treeck-core --test acceptance -- --nocapture`.

use num_bigint::BigInt;
use num_traits::Signed;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use treeck_core::alphabet::{build_alphabet, build_decoration, build_transition, count_orbits};
use treeck_core::group::{is_malnormal, Embedding, FiniteGroup};
use treeck_core::ktheory::{
    bowen_franks, determinantal_divisors, divisors_to_factors, identity_class, pointed_isomorphic,
    reference_formula_equal_star, smith_normal_form, IntMatrix, PointedGroup,
};
use treeck_core::parse::SpecSource;
use treeck_core::report::{analyze, exit_code, AnalyzeOptions, Report, Status};
use treeck_core::sft::count_words;
use treeck_core::tree::{build_model, LatticeAction, TreeModel, TreeError};

fn pass(n: usize, what: &str) {
    println!("criterion {n}: PASS - {what}");
}

fn cyclic(n: usize) -> FiniteGroup {
    FiniteGroup::cyclic(n).expect("cyclic group")
}

fn s3() -> FiniteGroup {
    let perms: [[usize; 3]; 6] = [
        [0, 1, 2],
        [1, 0, 2],
        [2, 1, 0],
        [0, 2, 1],
        [1, 2, 0],
        [2, 0, 1],
    ];
    let compose = |g: [usize; 3], h: [usize; 3]| [g[h[0]], g[h[1]], g[h[2]]];
    let table: Vec<Vec<usize>> = (0..6)
        .map(|g| {
            (0..6)
                .map(|h| {
                    let p = compose(perms[g], perms[h]);
                    perms.iter().position(|&q| q == p).unwrap()
                })
                .collect()
        })
        .collect();
    FiniteGroup::from_table(&table, None).expect("symmetric group table")
}

fn z2_in_s3() -> Embedding {
    Embedding::new(cyclic(2), s3(), vec![0, 1]).expect("order-2 embedding")
}

fn edge_source(l: u64, m: u64) -> SpecSource {
    SpecSource::new(
        format!("edge_{l}_{m}.tk"),
        format!(
            "group a = cyclic({})\ngroup b = cyclic({})\naction x = free_product(a, b)\n",
            l + 1,
            m + 1
        ),
    )
}

fn star_source(n: usize, gamma: u64) -> SpecSource {
    let mut text = String::new();
    let mut names = Vec::new();
    for i in 0..n {
        text.push_str(&format!("group g{i} = cyclic({})\n", gamma + 1));
        names.push(format!("g{i}"));
    }
    text.push_str(&format!("action x = free_product({})\n", names.join(", ")));
    if n == 2 {
        text.push_str("set tree_model = star\n");
    }
    SpecSource::new(format!("star_{n}_{gamma}.tk"), text)
}

fn s3_amalgam_source() -> SpecSource {
    SpecSource::new(
        "s3_amalgam.tk",
        "group h = cyclic(2)\n\
         group g = table(0, 1, 2, 3, 4, 5; 1, 0, 5, 4, 3, 2; 2, 4, 0, 5, 1, 3; 3, 5, 4, 0, 2, 1; 4, 2, 3, 1, 5, 0; 5, 3, 1, 2, 0, 4)\n\
         action x = amalgam(g, g, over = h, embed1 = [0 -> 0, 1 -> 1], embed2 = [0 -> 0, 1 -> 1])\n",
    )
}

fn run_ok(src: &SpecSource, options: &AnalyzeOptions) -> Report {
    let report = analyze(src, options);
    assert_eq!(
        report.status,
        Status::Ok,
        "pipeline failed on {}: {:?}",
        src.name,
        report.error
    );
    report
}

fn factors_of(report: &Report) -> Vec<String> {
    report
        .k_theory
        .as_ref()
        .expect("K-theory section")
        .k0_invariant_factors
        .clone()
}

/// The decorated identity class at the canonical base, recomputed through
/// the library for pointed comparisons.
fn canonical_class(model: &TreeModel, k: usize) -> PointedGroup {
    let alphabet = build_alphabet(model, k).unwrap();
    let matrix = build_transition(model, &alphabet).unwrap();
    let bf = bowen_franks(&matrix);
    let base = model.fundamental_vertices()[0].clone();
    let dec = build_decoration(model, &alphabet, &base).unwrap();
    identity_class(&bf, Some(&dec.multiplicities)).decorated.unwrap()
}

#[test]
fn criterion_1_two_factor_grid() {
    for l in 1..=4u64 {
        for m in 1..=4u64 {
            if l * m < 2 {
                continue;
            }
            let start = std::time::Instant::now();
            let report = run_ok(&edge_source(l, m), &AnalyzeOptions::default());
            assert_eq!(
                report.alphabet.as_ref().unwrap().size,
                (l + m) as usize,
                "alphabet size at ({l},{m})"
            );
            let expected: Vec<String> = if l * m - 1 == 1 {
                vec![]
            } else {
                vec![(l * m - 1).to_string()]
            };
            assert_eq!(factors_of(&report), expected, "K0 at ({l},{m})");
            assert_eq!(report.k_theory.as_ref().unwrap().k1_rank, 0, "K1 at ({l},{m})");
            assert!(
                start.elapsed().as_secs_f64() < 1.0,
                "case ({l},{m}) exceeded 1 s"
            );
        }
    }
    pass(1, "two-factor grid: |A| = l+m, K0 = Z_{lm-1}, K1 = 0, < 1 s per case");
}

#[test]
fn criterion_2_equal_star_grid() {
    let cases = [
        (3usize, 1u64, vec!["2", "2"]),
        (3, 2, vec!["3", "9"]),
        (4, 1, vec!["2", "2", "4"]),
        (4, 2, vec!["3", "3", "15"]),
    ];
    for (n, gamma, expected) in cases {
        let report = run_ok(&star_source(n, gamma), &AnalyzeOptions::default());
        assert_eq!(factors_of(&report), expected, "K0 at (n,gamma) = ({n},{gamma})");
        assert_eq!(report.k_theory.as_ref().unwrap().k1_rank, 0);
        // The computed group also matches the closed form in normal form.
        let formula = reference_formula_equal_star(n as u64, gamma).unwrap();
        let formula_strings: Vec<String> = formula.factors().iter().map(BigInt::to_string).collect();
        assert_eq!(factors_of(&report), formula_strings);
    }
    pass(2, "equal-order star grid matches the closed form, K1 = 0");
}

#[test]
fn criterion_3_model_independence() {
    for gamma in [2u64, 3] {
        let g = cyclic(gamma as usize + 1);
        let edge = build_model(LatticeAction::EdgeFreeProduct(g.clone(), g.clone())).unwrap();
        let star = build_model(LatticeAction::StarFreeProduct(vec![g.clone(), g.clone()])).unwrap();

        let class_edge = canonical_class(&edge, 1);
        let class_star = canonical_class(&star, 1);
        let expected = vec![BigInt::from(gamma * gamma - 1)];
        assert_eq!(class_edge.group.factors(), &expected, "edge K0 at gamma = {gamma}");
        assert_eq!(class_star.group.factors(), &expected, "star K0 at gamma = {gamma}");
        assert!(
            pointed_isomorphic(&class_edge, &class_star).unwrap(),
            "identity classes differ between models at gamma = {gamma}: {class_edge} vs {class_star}"
        );
    }
    pass(3, "edge and star models of the same free product agree as pointed groups");
}

#[test]
fn criterion_4_k_robustness() {
    // All two-factor grid fixtures, rerun at k_min + 1 = 2; the pipeline
    // compares against the k_min baseline internally and hard-fails on any
    // mismatch.
    for l in 1..=4u64 {
        for m in 1..=4u64 {
            if l * m < 2 {
                continue;
            }
            let options = AnalyzeOptions {
                k: Some(2),
                ..AnalyzeOptions::default()
            };
            let report = run_ok(&edge_source(l, m), &options);
            let rb = report.robustness.as_ref().expect("robustness section");
            assert!(
                rb.factors_match && rb.k1_match && rb.identity_pointed_isomorphic,
                "robustness failed at ({l},{m}): {rb:?}"
            );
        }
    }
    // The amalgam fixture at k_min + 1 = 3.
    let options = AnalyzeOptions {
        k: Some(3),
        ..AnalyzeOptions::default()
    };
    let report = run_ok(&s3_amalgam_source(), &options);
    let rb = report.robustness.as_ref().expect("robustness section");
    assert!(rb.factors_match && rb.k1_match && rb.identity_pointed_isomorphic);
    pass(4, "rerunning at k+1 preserves invariant factors, K1 and the identity class");
}

#[test]
fn criterion_5_orbit_word_counts() {
    let fixtures: Vec<TreeModel> = vec![
        build_model(LatticeAction::EdgeFreeProduct(cyclic(2), cyclic(3))).unwrap(),
        build_model(LatticeAction::EdgeFreeProduct(cyclic(3), cyclic(3))).unwrap(),
        build_model(LatticeAction::StarFreeProduct(vec![cyclic(2), cyclic(2), cyclic(2)])).unwrap(),
    ];
    for model in &fixtures {
        let k = model.k_min();
        let alphabet = build_alphabet(model, k).unwrap();
        let matrix = build_transition(model, &alphabet).unwrap();
        for m in 0..=3usize {
            let orbits = count_orbits(model, m + k + 1).unwrap();
            let words = count_words(&matrix, m);
            assert_eq!(
                BigInt::from(orbits),
                words.clone().into(),
                "orbit/word mismatch at m = {m} for {model}"
            );
        }
    }
    pass(5, "orbit counts equal word counts for m = 0..3 on all three fixtures");
}

#[test]
fn criterion_6_hypothesis_gate() {
    // Rejections with the two-ends reason.
    let line = analyze(
        &SpecSource::new("z2_z2.tk", "group a = cyclic(2)\ngroup b = cyclic(2)\naction x = free_product(a, b)\n"),
        &AnalyzeOptions::default(),
    );
    assert_eq!(line.status, Status::HypothesisFailure);
    assert_eq!(exit_code(&line), 2);
    assert!(line.error.as_ref().unwrap().message.contains("two ends"));

    let star_line = analyze(&star_source(2, 1), &AnalyzeOptions::default());
    assert_eq!(star_line.status, Status::HypothesisFailure);
    assert!(star_line.error.as_ref().unwrap().message.contains("two ends"));

    // Rejection of the non-malnormal amalgam.
    let z4 = cyclic(4);
    let emb = Embedding::new(cyclic(2), z4, vec![0, 2]).unwrap();
    let err = build_model(LatticeAction::Amalgam {
        into_left: emb.clone(),
        into_right: emb,
    })
    .unwrap_err();
    match err {
        TreeError::Hypothesis { name, detail } => {
            assert_eq!(name, "acylindricity");
            assert!(detail.contains("not malnormal"), "{detail}");
        }
        other => panic!("expected hypothesis error, got {other:?}"),
    }

    // Accepted fixtures act freely at k_min and satisfy H2 and H3.
    let mut accepted: Vec<SpecSource> = Vec::new();
    for l in 1..=4u64 {
        for m in 1..=4u64 {
            if l * m >= 2 {
                accepted.push(edge_source(l, m));
            }
        }
    }
    for (n, gamma) in [(3usize, 1u64), (3, 2), (4, 1), (4, 2)] {
        accepted.push(star_source(n, gamma));
    }
    accepted.push(s3_amalgam_source());
    for src in &accepted {
        let report = run_ok(src, &AnalyzeOptions::default());
        let free = report.free_action.as_ref().unwrap();
        assert!(free.free, "free action fails for {}", src.name);
        assert_eq!(free.k, report.model.as_ref().unwrap().k_min);
        assert!(report.h2.as_ref().unwrap().holds, "H2 fails for {}", src.name);
        assert!(report.h3.as_ref().unwrap().holds, "H3 fails for {}", src.name);
    }
    pass(6, "degenerate inputs rejected with their reasons; accepted fixtures free, H2, H3");
}

#[test]
fn criterion_7_snf_property_suite() {
    let start = std::time::Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_1234);
    let one = BigInt::from(1);
    for round in 0..500 {
        let rows = rng.gen_range(1..=6);
        let cols = rng.gen_range(1..=6);
        let data: Vec<Vec<i64>> = (0..rows)
            .map(|_| (0..cols).map(|_| rng.gen_range(-9..=9)).collect())
            .collect();
        let a = IntMatrix::from_rows(&data).unwrap();

        let s = smith_normal_form(&a);
        assert_eq!(s.u.mul(&a).mul(&s.v), s.d, "UAV = D fails in round {round}");
        assert!(s.d.is_diagonal());
        assert_eq!(s.u.determinant().unwrap().abs(), one, "U unimodular in round {round}");
        assert_eq!(s.v.determinant().unwrap().abs(), one, "V unimodular in round {round}");

        let diag = s.diagonal();
        for w in diag.windows(2) {
            if w[0] == BigInt::from(0) {
                assert_eq!(w[1], BigInt::from(0), "zeros last in round {round}");
            } else {
                assert_eq!(&w[1] % &w[0], BigInt::from(0), "chain fails in round {round}");
            }
        }

        let divisors = determinantal_divisors(&a).unwrap();
        assert_eq!(divisors_to_factors(&divisors), diag, "divisor oracle in round {round}");

        let st = smith_normal_form(&a.transpose());
        assert_eq!(st.diagonal(), diag, "transpose diagonal in round {round}");

        // Invariance under random unimodular multipliers with bounded entries.
        let left = random_unimodular(&mut rng, rows);
        let right = random_unimodular(&mut rng, cols);
        let b = left.mul(&a).mul(&right);
        assert_eq!(smith_normal_form(&b).diagonal(), diag, "unimodular invariance in round {round}");
    }
    let elapsed = start.elapsed().as_secs_f64();
    assert!(elapsed < 5.0, "SNF suite took {elapsed:.2} s");
    pass(7, "500 random matrices: decomposition, chain, oracle, transpose, invariance");
}

fn random_unimodular(rng: &mut ChaCha8Rng, n: usize) -> IntMatrix {
    let mut m = IntMatrix::identity(n);
    if n < 2 {
        return m;
    }
    for _ in 0..4 {
        let i = rng.gen_range(0..n);
        let mut j = rng.gen_range(0..n);
        while j == i {
            j = rng.gen_range(0..n);
        }
        let c = BigInt::from(rng.gen_range(-3..=3i64));
        // row_i += c * row_j, an elementary (determinant 1) operation
        let op = {
            let mut e = IntMatrix::identity(n);
            e.set(i, j, c);
            e
        };
        m = op.mul(&m);
    }
    m
}

#[test]
fn criterion_8_amalgam_fixture() {
    assert!(is_malnormal(&z2_in_s3()).is_ok(), "subgroup must be malnormal");

    let model = build_model(LatticeAction::Amalgam {
        into_left: z2_in_s3(),
        into_right: z2_in_s3(),
    })
    .unwrap();
    assert_eq!(model.k_min(), 2);

    let options = AnalyzeOptions {
        max_l1_check: 2,
        ..AnalyzeOptions::default()
    };
    let report = run_ok(&s3_amalgam_source(), &options);
    assert_eq!(report.model.as_ref().unwrap().k_min, 2);
    assert!(report.h2.as_ref().unwrap().holds);
    assert!(report.h3.as_ref().unwrap().holds);
    let l1 = report.lemma_l1.as_ref().unwrap();
    assert!(l1.len() >= 3, "orbit/word cross-check must cover m = 0..2");
    assert!(l1.iter().all(|e| e.equal));
    let ic = &report.k_theory.as_ref().unwrap().identity_class;
    assert!(ic.epsilon.oracle_agrees);
    assert!(ic.decorated.iter().all(|d| d.class.oracle_agrees));
    pass(8, "malnormal amalgam: k_min = 2, pipeline green, counts match, oracle agrees");
}

#[test]
fn criterion_9_identity_class_reporting() {
    for l in 1..=4u64 {
        for m in 1..=4u64 {
            if l * m < 2 {
                continue;
            }
            let report = run_ok(&edge_source(l, m), &AnalyzeOptions::default());
            let k = report.k_theory.as_ref().unwrap();

            // (a) the computed image of the all-ones vector, verified against
            // the independent oracle.
            assert!(
                k.identity_class.epsilon.oracle_agrees,
                "oracle disagrees at ({l},{m})"
            );
            assert!(!k.identity_class.epsilon.oracle_checks.is_empty());

            // (b) a well-formed comparison against the claimed value l+m.
            let reference = report.reference_comparison.as_ref().expect("reference section");
            assert_eq!(reference.claimed_value, Some(l + m));
            let claimed = reference.claimed_class.as_ref().expect("claimed class");
            let group_order = l * m - 1;
            if group_order == 1 {
                assert!(claimed.is_empty());
            } else {
                let c: u64 = claimed[0].parse().expect("claimed coordinate is an integer");
                assert_eq!(c, (l + m) % group_order);
            }
            assert!(
                reference.epsilon_matches_claim.is_some(),
                "comparison verdict missing at ({l},{m})"
            );
            assert!(reference.claim_pointed_label.is_some());
        }
    }
    pass(9, "identity class oracle-verified and compared against the claimed value");
}
