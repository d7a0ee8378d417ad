use num_traits::{One, Signed, Zero};

use super::{MegaRouting, PermutationRouting, Routing, TreeRouting};
use crate::error::{KofnError, Result};
use crate::instance::Instance;
use crate::num::Q;
use crate::prob::CountDistribution;

/// Exact per-processor loads of a routing.
#[derive(Debug, Clone, PartialEq)]
pub struct LoadReport {
    pub load: Vec<Q>,
    /// `r_i - load_i`; negative where the routing is infeasible.
    pub residual: Vec<Q>,
    /// Processors with residual exactly zero, ascending.
    pub saturated: Vec<usize>,
    pub throughput: Q,
}

impl LoadReport {
    fn new(instance: &Instance, load: Vec<Q>, throughput: Q) -> Self {
        let residual: Vec<Q> = instance.r().iter().zip(&load).map(|(r, l)| r - l).collect();
        let saturated = residual
            .iter()
            .enumerate()
            .filter(|(_, r)| r.is_zero())
            .map(|(i, _)| i)
            .collect();
        Self {
            load,
            residual,
            saturated,
            throughput,
        }
    }

    pub fn is_feasible(&self) -> bool {
        self.residual.iter().all(|r| !r.is_negative())
    }

    /// Processors whose load exceeds their rate limit.
    pub fn overloaded(&self) -> Vec<usize> {
        self.residual
            .iter()
            .enumerate()
            .filter(|(_, r)| r.is_negative())
            .map(|(i, _)| i)
            .collect()
    }

    pub fn all_saturated(&self) -> bool {
        self.saturated.len() == self.load.len()
    }
}

pub fn evaluate_loads(instance: &Instance, routing: &Routing) -> Result<LoadReport> {
    match routing {
        Routing::Mega(m) => evaluate_mega_loads(instance, m),
        Routing::Compressed(c) => evaluate_mega_loads(instance, &c.replay()?),
        Routing::Permutation(p) => evaluate_permutation_loads(instance, p),
        Routing::Tree(t) => evaluate_tree_loads(instance, t),
    }
}

/// Probability that `C_k(perm)` performs each test, indexed by processor id.
pub fn permutation_reach(pass: &[Q], perm: &[usize], k: usize) -> Vec<Q> {
    let mut g = vec![Q::zero(); pass.len()];
    // alive[j]: still testing with exactly j failures so far.
    let mut alive = vec![Q::zero(); k];
    alive[0] = Q::one();
    for &i in perm {
        g[i] = alive.iter().fold(Q::zero(), |acc, a| acc + a);
        let p = &pass[i];
        let fail = Q::one() - p;
        for j in (0..k).rev() {
            let stay = &alive[j] * p;
            alive[j] = if j == 0 {
                stay
            } else {
                stay + &alive[j - 1] * &fail
            };
        }
    }
    g
}

fn check_ids(n: usize, ids: &[usize]) -> Result<()> {
    let mut seen = vec![false; n];
    for &i in ids {
        if i >= n {
            return Err(KofnError::UnknownProcessor(i + 1));
        }
        if std::mem::replace(&mut seen[i], true) {
            return Err(KofnError::Structure(format!(
                "processor {} listed twice",
                i + 1
            )));
        }
    }
    if ids.len() != n {
        return Err(KofnError::Structure(format!(
            "{} of {} processors listed",
            ids.len(),
            n
        )));
    }
    Ok(())
}

fn check_flow(flow: &Q) -> Result<()> {
    if flow.is_negative() {
        return Err(KofnError::Structure(format!("negative flow {flow}")));
    }
    Ok(())
}

pub fn evaluate_permutation_loads(
    instance: &Instance,
    routing: &PermutationRouting,
) -> Result<LoadReport> {
    let n = instance.n();
    let mut load = vec![Q::zero(); n];
    for (perm, flow) in &routing.entries {
        check_ids(n, perm)?;
        check_flow(flow)?;
        let g = permutation_reach(instance.p(), perm, instance.k());
        for (l, gi) in load.iter_mut().zip(&g) {
            *l += gi * flow;
        }
    }
    Ok(LoadReport::new(instance, load, routing.throughput()))
}

/// Loads of arbitrary strategies; each tree is checked to be a valid
/// k-of-n strategy first.
pub fn evaluate_tree_loads(instance: &Instance, routing: &TreeRouting) -> Result<LoadReport> {
    let mut load = vec![Q::zero(); instance.n()];
    for (tree, flow) in &routing.entries {
        tree.validate(instance.n(), instance.k())?;
        check_flow(flow)?;
        for (l, gi) in load.iter_mut().zip(tree.reach(instance.p())) {
            *l += gi * flow;
        }
    }
    Ok(LoadReport::new(instance, load, routing.throughput()))
}

/// Propagates flow types megaprocessor by megaprocessor.
///
/// A unit of flow that has already failed `tau` tests and enters megaprocessor
/// `M` adds `sum_{v=1}^{k-tau} Pr_M[Z >= v] / sum_{t in M} (1 - p_t)` to each
/// member's load; the flow leaving `M` is the truncated convolution of the
/// arriving types with `M`'s failure-count distribution.
pub fn evaluate_mega_loads(instance: &Instance, routing: &MegaRouting) -> Result<LoadReport> {
    let (n, k) = (instance.n(), instance.k());
    let pass = instance.p();
    let mut load = vec![Q::zero(); n];
    for phase in &routing.phases {
        check_ids(n, &phase.classes.concat())?;
        check_flow(&phase.flow)?;
        if phase.classes.iter().any(Vec::is_empty) {
            return Err(KofnError::Structure("empty megaprocessor".into()));
        }
        let mut arriving = vec![Q::zero(); k];
        arriving[0] = phase.flow.clone();
        for class in &phase.classes {
            let fail: Vec<Q> = class.iter().map(|&m| Q::one() - &pass[m]).collect();
            let sum_fail: Q = fail.iter().fold(Q::zero(), |acc, f| acc + f);
            let pmf = CountDistribution::from_failure_probs(&fail, k);
            let d = pmf.tail_sums();
            let per_member = arriving
                .iter()
                .zip(&d)
                .fold(Q::zero(), |acc, (a, dj)| acc + a * dj)
                / sum_fail;
            for &m in class {
                load[m] += &per_member;
            }
            let mass = pmf.mass();
            arriving = (0..k)
                .map(|t| (0..=t).fold(Q::zero(), |acc, tau| acc + &arriving[tau] * &mass[t - tau]))
                .collect();
        }
    }
    Ok(LoadReport::new(instance, load, routing.throughput()))
}
