//! Independent oracles and instance generators shared by the integration tests.
#![allow(dead_code)]

use kofn::lp::{certify, solve_lp, LinearProgram, LpStatus, Relation, Sense};
use kofn::num::{q, qi};
use kofn::{Instance, Q};
use num_traits::{One, Zero};
use proptest::prelude::*;
use rand::Rng;

/// Every outcome vector over `n` tests (`true` = pass) with its probability.
pub fn outcomes(pass: &[Q]) -> Vec<(Vec<bool>, Q)> {
    let n = pass.len();
    (0..1u32 << n)
        .map(|bits| {
            let x: Vec<bool> = (0..n).map(|i| bits >> i & 1 == 1).collect();
            let prob = x.iter().zip(pass).fold(Q::one(), |acc, (&ok, p)| {
                acc * if ok { p.clone() } else { Q::one() - p }
            });
            (x, prob)
        })
        .collect()
}

/// Probability that conservative testing along `perm` performs each test,
/// by enumerating outcomes.
pub fn brute_reach(pass: &[Q], perm: &[usize], k: usize) -> Vec<Q> {
    let mut g = vec![Q::zero(); pass.len()];
    for (x, prob) in outcomes(pass) {
        let mut fails = 0;
        for &t in perm {
            if fails == k {
                break;
            }
            g[t] += &prob;
            fails += usize::from(!x[t]);
        }
    }
    g
}

/// Same for standard testing, which also stops after `n - k + 1` passes.
pub fn brute_reach_standard(pass: &[Q], perm: &[usize], k: usize) -> Vec<Q> {
    let n = pass.len();
    let mut g = vec![Q::zero(); n];
    for (x, prob) in outcomes(pass) {
        let (mut fails, mut passes) = (0, 0);
        for &t in perm {
            if fails == k || passes == n - k + 1 {
                break;
            }
            g[t] += &prob;
            if x[t] {
                passes += 1;
            } else {
                fails += 1;
            }
        }
    }
    g
}

pub fn permutations(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![Vec::new()];
    }
    let mut out = Vec::new();
    for rest in permutations(n - 1) {
        for at in 0..=rest.len() {
            let mut p = rest.clone();
            p.insert(at, n - 1);
            out.push(p);
        }
    }
    out
}

/// Optimum of the conservative MaxThroughput LP over all `n!` permutation
/// strategies, with coefficients from outcome enumeration.
pub fn lp_oracle_throughput(instance: &Instance) -> Q {
    let perms = permutations(instance.n());
    let columns: Vec<Vec<Q>> = perms
        .iter()
        .map(|perm| brute_reach(instance.p(), perm, instance.k()))
        .collect();
    let mut lp = LinearProgram::new(Sense::Max, vec![Q::one(); perms.len()]);
    for i in 0..instance.n() {
        lp.constrain(
            columns.iter().map(|g| g[i].clone()).collect(),
            Relation::Le,
            instance.r()[i].clone(),
        );
    }
    let sol = solve_lp(&lp);
    assert_eq!(sol.status, LpStatus::Optimal);
    assert!(certify(&lp, &sol));
    sol.objective
}

/// Per-unit-input load of every processor when flow crosses `classes` in
/// order, each class splitting its input over the cyclic shifts of its
/// members in proportion to the predecessor's failure probability.
fn unit_loads(pass: &[Q], classes: &[Vec<usize>], k: usize) -> Vec<Q> {
    let mut mix: Vec<(Vec<usize>, Q)> = vec![(Vec::new(), Q::one())];
    for class in classes {
        let s = class.len();
        let total = class
            .iter()
            .fold(Q::zero(), |acc, &m| acc + Q::one() - &pass[m]);
        let mut next = Vec::new();
        for (prefix, w) in &mix {
            for start in 0..s {
                let mut perm = prefix.clone();
                perm.extend((0..s).map(|t| class[(start + t) % s]));
                let pred = class[(start + s - 1) % s];
                next.push((perm, w * (Q::one() - &pass[pred]) / &total));
            }
        }
        mix = next;
    }
    let mut load = vec![Q::zero(); pass.len()];
    for (perm, w) in mix {
        for (l, g) in load.iter_mut().zip(brute_reach(pass, &perm, k)) {
            *l += &w * g;
        }
    }
    load
}

/// The equalizing algorithm with a full rescan of all classes per phase
/// and loads from outcome enumeration. Returns `(classes, flow)` per phase.
pub fn rescan_reference(instance: &Instance) -> Vec<(Vec<Vec<usize>>, Q)> {
    let (n, k) = (instance.n(), instance.k());
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| instance.r()[b].cmp(&instance.r()[a]).then(a.cmp(&b)));
    let mut classes: Vec<Vec<usize>> = Vec::new();
    let mut residual: Vec<Q> = Vec::new();
    for &id in &order {
        if residual.last() == Some(&instance.r()[id]) {
            classes.last_mut().unwrap().push(id);
        } else {
            classes.push(vec![id]);
            residual.push(instance.r()[id].clone());
        }
    }
    let mut phases = Vec::new();
    loop {
        let load = unit_loads(instance.p(), &classes, k);
        let xi: Vec<Q> = classes
            .iter()
            .map(|c| {
                assert!(
                    c.iter().all(|&m| load[m] == load[c[0]]),
                    "members loaded unequally"
                );
                load[c[0]].clone()
            })
            .collect();
        let last = classes.len() - 1;
        let saturate = &residual[last] / &xi[last];
        let equalize = (1..classes.len())
            .filter(|&i| xi[i - 1] > xi[i])
            .map(|i| (&residual[i - 1] - &residual[i]) / (&xi[i - 1] - &xi[i]))
            .min();
        match equalize {
            Some(t) if t < saturate => {
                phases.push((classes.clone(), t.clone()));
                for (r, x) in residual.iter_mut().zip(&xi) {
                    *r -= x * &t;
                }
                let mut merged: Vec<Vec<usize>> = Vec::new();
                let mut merged_res: Vec<Q> = Vec::new();
                for (c, r) in classes.into_iter().zip(residual) {
                    if merged_res.last() == Some(&r) {
                        merged.last_mut().unwrap().extend(c);
                    } else {
                        merged.push(c);
                        merged_res.push(r);
                    }
                }
                classes = merged;
                residual = merged_res;
            }
            _ => {
                phases.push((classes, saturate));
                return phases;
            }
        }
    }
}

/// Rational strictly inside (0, 1) with denominator at most `max_den`.
pub fn rand_prob(rng: &mut impl Rng, max_den: i64) -> Q {
    let den = rng.random_range(2..=max_den);
    q(rng.random_range(1..den), den)
}

/// Random instance; with `ties`, rates are drawn from a small set so
/// equal rates are common.
pub fn random_instance(rng: &mut impl Rng, n: usize, k: usize, ties: bool) -> Instance {
    let p = (0..n).map(|_| rand_prob(rng, 9)).collect();
    let r = (0..n)
        .map(|_| {
            if ties {
                qi(rng.random_range(1..=4) * 5)
            } else {
                q(rng.random_range(1..=60), rng.random_range(1..=4))
            }
        })
        .collect();
    Instance::new(k, p, r).unwrap()
}

pub fn arb_prob() -> impl Strategy<Value = Q> {
    (2i64..=9).prop_flat_map(|den| (1..den).prop_map(move |num| q(num, den)))
}

pub fn arb_rate() -> impl Strategy<Value = Q> {
    prop_oneof![
        (1i64..=4).prop_map(|v| qi(5 * v)),
        (1i64..=60, 1i64..=4).prop_map(|(a, b)| q(a, b)),
    ]
}

pub fn arb_instance(max_n: usize) -> impl Strategy<Value = Instance> {
    (1..=max_n)
        .prop_flat_map(|n| {
            (
                1..=n,
                proptest::collection::vec(arb_prob(), n),
                proptest::collection::vec(arb_rate(), n),
            )
        })
        .prop_map(|(k, p, r)| Instance::new(k, p, r).unwrap())
}
