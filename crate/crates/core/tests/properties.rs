use cbd_core::canonical::{canonical_subset, enumerate_dichotomies};
use cbd_core::coupling::{is_multimaximal, joint_marginal, multimaximal_coupling};
use cbd_core::io::{system_from_json, system_to_json};
use cbd_core::rational::{format_rational, parse_rational, ratio, Rational};
use cbd_core::solver::{build_connected_constraints, min_total_variation, SolverConfig};
use cbd_core::system::ValueSet;
use cbd_core::testlab::{
    random_binary_system, random_cyclic_system, random_dominating, random_marginals,
    random_noncontextual_system, random_two_connection, satisfies_all_splits,
};
use cbd_core::transform::{enumerate_partitions, PartitionScheme};
use cbd_core::two_connection::{
    construct_12_coupling, lp_cross_check, nominally_dominates, relation_residual, MaxSplit,
};
use num_traits::{One, Zero};
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn rational_text_round_trip(n in -5000i64..5000, d in 1i64..5000) {
        let r = ratio(n, d);
        prop_assert_eq!(parse_rational(&format_rational(&r)).unwrap(), r);
    }

    #[test]
    fn decimals_are_exact(int_part in 0u32..100, frac in 0u32..10_000) {
        let text = format!("{int_part}.{frac:04}");
        let want = ratio(int_part as i64, 1) + ratio(frac as i64, 10_000);
        prop_assert_eq!(parse_rational(&text).unwrap(), want);
    }

    #[test]
    fn canonical_subset_ignores_complement(k in 2usize..9, mask in 1u32..255) {
        let full = (1u32 << k) - 1;
        let mask = mask & full;
        prop_assume!(mask != 0 && mask != full);
        let w: Vec<usize> = (0..k).filter(|i| mask >> i & 1 == 1).collect();
        let c: Vec<usize> = (0..k).filter(|i| mask >> i & 1 == 0).collect();
        let a = canonical_subset(&w, k).unwrap();
        prop_assert_eq!(&a, &canonical_subset(&c, k).unwrap());
        prop_assert!(a.len() <= k / 2);
        let all = enumerate_dichotomies(&ValueSet::numbered(k).unwrap()).unwrap();
        prop_assert!(all.contains(&a));
    }

    #[test]
    fn dominating_pairs_satisfy_every_split(k in 2usize..7, seed in any::<u64>()) {
        let inst = random_dominating(k, 20, seed).unwrap();
        let c = construct_12_coupling(&inst).unwrap();
        prop_assert!(c.satisfies_12_equations(&inst));
        prop_assert!(c.off_diagonal_in_single_line());
        prop_assert!(satisfies_all_splits(&c, &inst));
        for mask in 1u32..(1 << k) - 1 {
            let w: Vec<usize> = (0..k).filter(|i| mask >> i & 1 == 1).collect();
            if w.len() >= 3 {
                prop_assert!(relation_residual(&inst, &w).unwrap().is_zero());
            }
        }
    }

    #[test]
    fn dominance_decides_both_programs(k in 3usize..6, seed in any::<u64>()) {
        let inst = random_two_connection(k, 16, seed).unwrap();
        let dom = nominally_dominates(inst.p(), inst.q()).unwrap()
            || nominally_dominates(inst.q(), inst.p()).unwrap();
        prop_assert_eq!(lp_cross_check(&inst, MaxSplit::Order(2)).unwrap().feasible, dom);
        prop_assert_eq!(lp_cross_check(&inst, MaxSplit::All).unwrap().feasible, dom);
        prop_assert_eq!(construct_12_coupling(&inst).is_some(), dom);
    }

    #[test]
    fn multimaximal_follows_input_order(n in 2usize..7, seed in any::<u64>(), rot in 0usize..6) {
        let m = random_marginals(n, 10, seed);
        let named: Vec<(String, Rational)> =
            m.iter().enumerate().map(|(i, p)| (format!("c{i}"), p.clone())).collect();
        let j = multimaximal_coupling(&named).unwrap();
        prop_assert!(is_multimaximal(&j).unwrap());
        prop_assert_eq!(j.total(), Rational::one());

        let mut rotated = named.clone();
        rotated.rotate_left(rot % n);
        let r = multimaximal_coupling(&rotated).unwrap();
        let back: Vec<usize> = (0..n).map(|i| (i + n - rot % n) % n).collect();
        let reordered = joint_marginal(&r, &back).unwrap();
        prop_assert_eq!(reordered.masses(), j.masses());
    }

    #[test]
    fn system_json_round_trip(seed in any::<u64>(), kind in 0u8..3) {
        let sys = match kind {
            0 => random_binary_system(12, seed),
            1 => random_noncontextual_system(12, seed),
            _ => random_cyclic_system(4, seed).unwrap(),
        };
        let text = system_to_json(&sys);
        let back = system_from_json(&text).unwrap();
        prop_assert_eq!(system_to_json(&back), text);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn quasi_witness_meets_every_equality(seed in any::<u64>()) {
        let sys = random_binary_system(8, seed);
        let config = SolverConfig::default();
        let built = build_connected_constraints(&sys, config).unwrap();
        let v = min_total_variation(&sys, config).unwrap();
        let w = v.witness.unwrap();
        prop_assert_eq!(w.total(), Rational::one());
        prop_assert_eq!(w.total_variation(), v.degree.unwrap() + Rational::one());
        let n = w.variables().len();
        let x: Vec<Rational> = (0..built.lp.num_vars())
            .map(|s| {
                let state: Vec<usize> = (0..n).map(|b| (s >> b) & 1).collect();
                w.mass_of(&state)
            })
            .collect();
        let mut signed = built.lp.clone();
        signed.set_all_free();
        prop_assert!(signed.is_feasible_point(&x));
    }
}

#[test]
fn partition_counts_are_bell_numbers() {
    // the one-block partition is excluded
    let bell = [2, 5, 15, 52, 203, 877, 4140];
    for (k, want) in (2..=8).zip(bell) {
        let values = ValueSet::numbered(k).unwrap();
        assert_eq!(
            enumerate_partitions(&values, PartitionScheme::All)
                .unwrap()
                .len(),
            want - 1
        );
        assert_eq!(
            enumerate_partitions(&values, PartitionScheme::Interval)
                .unwrap()
                .len(),
            (1 << (k - 1)) - 1
        );
    }
}

#[test]
fn dichotomy_counts() {
    for k in 2..=10 {
        let values = ValueSet::numbered(k).unwrap();
        assert_eq!(
            enumerate_dichotomies(&values).unwrap().len(),
            (1 << (k - 1)) - 1
        );
    }
}
