mod common;

use common::{arb_prob, brute_reach, brute_reach_standard, outcomes, permutations};
use kofn::mincost::{
    conservative_mincost, standard_mincost_dp, standard_mincost_two_perm, StrategyRepr,
    DEFAULT_DP_LIMIT,
};
use kofn::num::{q, qi};
use kofn::{CostInstance, Q};
use num_traits::Zero;
use proptest::prelude::*;

fn dot(c: &[Q], g: &[Q]) -> Q {
    c.iter().zip(g).fold(Q::zero(), |acc, (a, b)| acc + a * b)
}

fn arb_cost_instance(max_n: usize) -> impl Strategy<Value = CostInstance> {
    (1..=max_n)
        .prop_flat_map(|n| {
            (
                1..=n,
                proptest::collection::vec(arb_prob(), n),
                proptest::collection::vec((1i64..=12, 1i64..=3).prop_map(|(a, b)| q(a, b)), n),
            )
        })
        .prop_map(|(k, p, c)| CostInstance::new(k, p, c).unwrap())
}

/// Cheapest conservative permutation strategy by enumeration.
fn brute_conservative(inst: &CostInstance) -> Q {
    permutations(inst.n())
        .iter()
        .map(|perm| dot(inst.c(), &brute_reach(inst.p(), perm, inst.k())))
        .min()
        .unwrap()
}

/// Optimal standard cost by exhaustive recursion over outcome-conditioned
/// subtrees, written without the library's state table.
fn brute_standard(inst: &CostInstance) -> Q {
    fn best(inst: &CostInstance, untested: &[usize], fails: usize, passes: usize) -> Q {
        let n = inst.n();
        if fails == inst.k() || passes == n - inst.k() + 1 {
            return Q::zero();
        }
        untested
            .iter()
            .map(|&t| {
                let rest: Vec<usize> = untested.iter().copied().filter(|&u| u != t).collect();
                let p = &inst.p()[t];
                &inst.c()[t]
                    + p * best(inst, &rest, fails, passes + 1)
                    + (Q::from_integer(1.into()) - p) * best(inst, &rest, fails + 1, passes)
            })
            .min()
            .unwrap()
    }
    best(inst, &(0..inst.n()).collect::<Vec<_>>(), 0, 0)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn conservative_matches_enumeration(inst in arb_cost_instance(6)) {
        let s = conservative_mincost(&inst);
        prop_assert_eq!(&s.expected_cost, &brute_conservative(&inst));
        prop_assert_eq!(&s.expected_cost, &dot(inst.c(), &s.g));
        let StrategyRepr::Permutation(perm) = &s.representation else { unreachable!() };
        prop_assert_eq!(&s.g[perm[0]], &qi(1));
    }

    #[test]
    fn dp_matches_exhaustive_recursion(inst in arb_cost_instance(5)) {
        let dp = standard_mincost_dp(&inst, DEFAULT_DP_LIMIT).unwrap();
        prop_assert_eq!(&dp.expected_cost, &brute_standard(&inst));
        prop_assert_eq!(&dp.expected_cost, &dot(inst.c(), &dp.g));
    }

    #[test]
    fn two_permutation_rule_matches_dp(inst in arb_cost_instance(8)) {
        let dp = standard_mincost_dp(&inst, DEFAULT_DP_LIMIT).unwrap();
        let compact = standard_mincost_two_perm(&inst).unwrap();
        prop_assert_eq!(&compact.expected_cost, &dp.expected_cost);
        prop_assert_eq!(&compact.expected_cost, &dot(inst.c(), &compact.g));
    }

    #[test]
    fn standard_is_no_worse_than_any_standard_permutation(inst in arb_cost_instance(5)) {
        let dp = standard_mincost_dp(&inst, DEFAULT_DP_LIMIT).unwrap();
        let cons = conservative_mincost(&inst);
        prop_assert!(dp.expected_cost <= cons.expected_cost);
        for perm in permutations(inst.n()) {
            let cost = dot(inst.c(), &brute_reach_standard(inst.p(), &perm, inst.k()));
            prop_assert!(dp.expected_cost <= cost);
        }
    }

    #[test]
    fn k1_variants_coincide(inst in arb_cost_instance(7)) {
        let inst = CostInstance::new(1, inst.p().to_vec(), inst.c().to_vec()).unwrap();
        let cons = conservative_mincost(&inst).expected_cost;
        prop_assert_eq!(&standard_mincost_dp(&inst, DEFAULT_DP_LIMIT).unwrap().expected_cost, &cons);
        prop_assert_eq!(&standard_mincost_two_perm(&inst).unwrap().expected_cost, &cons);
    }

    #[test]
    fn k_equals_n_orders_by_pass_ratio(inst in arb_cost_instance(7)) {
        let n = inst.n();
        let inst = CostInstance::new(n, inst.p().to_vec(), inst.c().to_vec()).unwrap();
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| (&inst.c()[a] * &inst.p()[b]).cmp(&(&inst.c()[b] * &inst.p()[a])).then(a.cmp(&b)));
        let cost = dot(inst.c(), &brute_reach_standard(inst.p(), &order, n));
        prop_assert_eq!(standard_mincost_dp(&inst, DEFAULT_DP_LIMIT).unwrap().expected_cost, cost);
    }

    #[test]
    fn cost_scaling(inst in arb_cost_instance(6), factor in 1i64..=7) {
        let scaled = CostInstance::new(
            inst.k(),
            inst.p().to_vec(),
            inst.c().iter().map(|c| c * qi(factor)).collect(),
        ).unwrap();
        let a = conservative_mincost(&inst);
        let b = conservative_mincost(&scaled);
        prop_assert_eq!(&a.representation, &b.representation);
        prop_assert_eq!(b.expected_cost, a.expected_cost * qi(factor));
    }

    #[test]
    fn per_outcome_costs_average_to_expectation(inst in arb_cost_instance(5)) {
        for s in [
            conservative_mincost(&inst),
            standard_mincost_dp(&inst, DEFAULT_DP_LIMIT).unwrap(),
            standard_mincost_two_perm(&inst).unwrap(),
        ] {
            let avg = outcomes(inst.p())
                .into_iter()
                .fold(Q::zero(), |acc, (x, prob)| acc + prob * s.cost_on(&inst, &x).unwrap());
            prop_assert_eq!(avg, s.expected_cost.clone());
        }
    }
}
