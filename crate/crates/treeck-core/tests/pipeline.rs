//! Cross-module integration: the amalgam fixture driven through the library
//! surface, with the invariant factors confirmed along a second, independent
//! route (determinantal divisors of the relation matrix).

use num_bigint::BigInt;
use treeck_core::alphabet::{build_alphabet, build_decoration, build_transition};
use treeck_core::group::{Embedding, FiniteGroup};
use treeck_core::ktheory::{
    bowen_franks, determinantal_divisors, divisors_to_factors, identity_class, pointed_isomorphic,
};
use treeck_core::tree::{build_model, LatticeAction, Site, TreeModel};

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
    FiniteGroup::from_table(&table, None).unwrap()
}

fn amalgam_model() -> TreeModel {
    let emb = Embedding::new(FiniteGroup::cyclic(2).unwrap(), s3(), vec![0, 1]).unwrap();
    build_model(LatticeAction::Amalgam {
        into_left: emb.clone(),
        into_right: emb,
    })
    .unwrap()
}

#[test]
fn amalgam_alphabet_structure() {
    let model = amalgam_model();
    let alphabet = build_alphabet(&model, 2).unwrap();
    assert_eq!(alphabet.len(), 4);
    // Two orbit classes start at each of the two base vertices, and the
    // canonical forms start at a base.
    let mut per_site = [0usize; 2];
    for letter in alphabet.letters() {
        assert!(letter.initial().word.is_empty());
        match letter.initial().site {
            Site::Coset(j) => per_site[j as usize] += 1,
            Site::Central => panic!("segment models have no central site"),
        }
    }
    assert_eq!(per_site, [2, 2]);

    // At k = 3 the alphabet doubles: one extra branching step per orbit.
    let alphabet3 = build_alphabet(&model, 3).unwrap();
    assert_eq!(alphabet3.len(), 8);
}

#[test]
fn amalgam_decorations_are_balanced() {
    let model = amalgam_model();
    let alphabet = build_alphabet(&model, 2).unwrap();
    for base in model.fundamental_vertices() {
        let dec = build_decoration(&model, &alphabet, &base).unwrap();
        // 3·2·2 segments of length 3 leave each base vertex; the stabilizer
        // of the base acts freely on them, so each of the two orbits in the
        // range is hit 6 times.
        assert_eq!(dec.size(), 12);
        let nonzero: Vec<u64> = dec.multiplicities.iter().copied().filter(|&c| c > 0).collect();
        assert_eq!(nonzero, vec![6, 6]);
    }
}

#[test]
fn amalgam_invariants_via_two_routes() {
    let model = amalgam_model();
    let alphabet = build_alphabet(&model, 2).unwrap();
    let matrix = build_transition(&model, &alphabet).unwrap();
    let bf = bowen_franks(&matrix);

    // Independent route: invariant factors from the determinantal divisors
    // of the relation matrix.
    let divisors = determinantal_divisors(bf.relation_rows()).unwrap();
    let via_divisors: Vec<BigInt> = divisors_to_factors(&divisors)
        .into_iter()
        .filter(|f| *f != BigInt::from(1))
        .collect();
    assert_eq!(bf.group().factors(), via_divisors.as_slice());
    assert_eq!(bf.group().factors(), &[BigInt::from(3)]);
    assert_eq!(bf.k1_rank(), 0);
}

#[test]
fn amalgam_identity_class_is_stable_across_k() {
    let model = amalgam_model();
    let mut classes = Vec::new();
    for k in [2usize, 3] {
        let alphabet = build_alphabet(&model, k).unwrap();
        let matrix = build_transition(&model, &alphabet).unwrap();
        let bf = bowen_franks(&matrix);
        let base = model.fundamental_vertices()[0].clone();
        let dec = build_decoration(&model, &alphabet, &base).unwrap();
        let cls = identity_class(&bf, Some(&dec.multiplicities));
        classes.push((bf.group().clone(), cls.decorated.unwrap()));
    }
    assert_eq!(classes[0].0, classes[1].0);
    assert!(pointed_isomorphic(&classes[0].1, &classes[1].1).unwrap());
}
