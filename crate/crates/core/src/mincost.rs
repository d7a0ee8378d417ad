//! MinCost strategies for k-of-n testing.
//!
//! Outcomes are written `x[i] = true` when test `i` passes. An item is
//! decided once it has failed `k` tests (conservative and standard), or,
//! for standard strategies only, once it has passed `n - k + 1`.

use std::collections::{BTreeMap, HashMap};

use num_traits::{One, Zero};

use crate::error::{KofnError, Result};
use crate::instance::CostInstance;
use crate::num::Q;
use crate::routing::permutation_reach;

/// Largest `n` accepted by the exact standard DP.
pub const DEFAULT_DP_LIMIT: usize = 20;

/// An adaptive strategy: which test to run next given the outcomes so far.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum DecisionTree {
    Leaf,
    Test {
        test: usize,
        fail: Box<DecisionTree>,
        pass: Box<DecisionTree>,
    },
}

impl DecisionTree {
    /// Probability that each test is performed on a random item.
    pub fn reach(&self, pass: &[Q]) -> Vec<Q> {
        let mut g = vec![Q::zero(); pass.len()];
        let mut stack = vec![(self, Q::one())];
        while let Some((node, prob)) = stack.pop() {
            if let DecisionTree::Test {
                test,
                fail,
                pass: on_pass,
            } = node
            {
                g[*test] += &prob;
                stack.push((fail, &prob * (Q::one() - &pass[*test])));
                stack.push((on_pass, prob * &pass[*test]));
            }
        }
        g
    }

    /// Tests performed, in order, on outcome vector `x`.
    pub fn tests_on(&self, x: &[bool]) -> Vec<usize> {
        let mut out = Vec::new();
        let mut node = self;
        while let DecisionTree::Test { test, fail, pass } = node {
            out.push(*test);
            node = if x[*test] { pass } else { fail };
        }
        out
    }

    /// Checks that the tree is a standard or conservative k-of-n strategy
    /// over `n` tests: no test repeats on a path, nothing is tested after
    /// `k` failures, and every leaf is decided.
    pub fn validate(&self, n: usize, k: usize) -> Result<()> {
        fn walk(
            node: &DecisionTree,
            n: usize,
            k: usize,
            used: &mut Vec<bool>,
            fails: usize,
            passes: usize,
        ) -> Result<()> {
            match node {
                DecisionTree::Leaf => {
                    if fails < k && passes < n - k + 1 {
                        return Err(KofnError::Structure(format!(
                            "strategy stops undecided after {fails} failures and {passes} passes"
                        )));
                    }
                    Ok(())
                }
                DecisionTree::Test { test, fail, pass } => {
                    let t = *test;
                    if t >= n {
                        return Err(KofnError::UnknownProcessor(t + 1));
                    }
                    if used[t] {
                        return Err(KofnError::Structure(format!(
                            "test {} repeated on a path",
                            t + 1
                        )));
                    }
                    if fails >= k {
                        return Err(KofnError::Structure(
                            "testing continues after k failures".into(),
                        ));
                    }
                    used[t] = true;
                    let res = walk(fail, n, k, used, fails + 1, passes)
                        .and_then(|_| walk(pass, n, k, used, fails, passes + 1));
                    used[t] = false;
                    res
                }
            }
        }
        walk(self, n, k, &mut vec![false; n], 0, 0)
    }

    /// The conservative strategy `C_k(perm)` as a tree.
    pub fn conservative(perm: &[usize], k: usize) -> Self {
        fn build(perm: &[usize], k: usize, fails: usize) -> DecisionTree {
            match perm.split_first() {
                Some((&test, rest)) if fails < k => DecisionTree::Test {
                    test,
                    fail: Box::new(build(rest, k, fails + 1)),
                    pass: Box::new(build(rest, k, fails)),
                },
                _ => DecisionTree::Leaf,
            }
        }
        build(perm, k, 0)
    }

    /// Number of internal nodes.
    pub fn size(&self) -> usize {
        match self {
            DecisionTree::Leaf => 0,
            DecisionTree::Test { fail, pass, .. } => 1 + fail.size() + pass.size(),
        }
    }
}

/// Optimal actions of the standard DP, keyed by (tested set, failures).
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct StateTable {
    pub actions: BTreeMap<(u64, usize), usize>,
}

impl StateTable {
    pub fn next(&self, tested: u64, fails: usize) -> Option<usize> {
        self.actions.get(&(tested, fails)).copied()
    }

    pub fn to_tree(&self) -> DecisionTree {
        fn build(table: &StateTable, tested: u64, fails: usize) -> DecisionTree {
            match table.next(tested, fails) {
                None => DecisionTree::Leaf,
                Some(t) => DecisionTree::Test {
                    test: t,
                    fail: Box::new(build(table, tested | 1 << t, fails + 1)),
                    pass: Box::new(build(table, tested | 1 << t, fails)),
                },
            }
        }
        build(self, 0, 0)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum StrategyRepr {
    /// Conservative `C_k(perm)`.
    Permutation(Vec<usize>),
    /// Standard strategy driven by the two ratio orders.
    TwoPermutations {
        by_fail: Vec<usize>,
        by_pass: Vec<usize>,
    },
    /// Standard strategy from the exact DP.
    Table(StateTable),
}

#[derive(Debug, Clone, PartialEq)]
pub struct StrategySummary {
    pub expected_cost: Q,
    /// Probability each test is performed.
    pub g: Vec<Q>,
    pub representation: StrategyRepr,
}

impl StrategySummary {
    pub fn to_tree(&self, instance: &CostInstance) -> Result<DecisionTree> {
        Ok(match &self.representation {
            StrategyRepr::Permutation(perm) => DecisionTree::conservative(perm, instance.k()),
            StrategyRepr::Table(table) => table.to_tree(),
            StrategyRepr::TwoPermutations { by_fail, by_pass } => {
                fn build(
                    inst: &CostInstance,
                    s0: &[usize],
                    s1: &[usize],
                    tested: u64,
                    fails: usize,
                ) -> Result<DecisionTree> {
                    let passes = tested.count_ones() as usize - fails;
                    if fails == inst.k() || passes == inst.n() - inst.k() + 1 {
                        return Ok(DecisionTree::Leaf);
                    }
                    let t = two_perm_choice(
                        s0,
                        s1,
                        tested,
                        inst.k() - fails,
                        inst.n() - inst.k() + 1 - passes,
                    )?;
                    Ok(DecisionTree::Test {
                        test: t,
                        fail: Box::new(build(inst, s0, s1, tested | 1 << t, fails + 1)?),
                        pass: Box::new(build(inst, s0, s1, tested | 1 << t, fails)?),
                    })
                }
                check_mask_width(instance.n())?;
                build(instance, by_fail, by_pass, 0, 0)?
            }
        })
    }

    /// Total cost paid on outcome vector `x` (`true` = pass).
    pub fn cost_on(&self, instance: &CostInstance, x: &[bool]) -> Result<Q> {
        let tests = match &self.representation {
            StrategyRepr::Permutation(perm) => {
                let mut fails = 0;
                let mut out = Vec::new();
                for &t in perm {
                    if fails == instance.k() {
                        break;
                    }
                    out.push(t);
                    fails += usize::from(!x[t]);
                }
                out
            }
            _ => self.to_tree(instance)?.tests_on(x),
        };
        Ok(tests
            .iter()
            .fold(Q::zero(), |acc, &t| acc + &instance.c()[t]))
    }
}

fn dot(c: &[Q], g: &[Q]) -> Q {
    c.iter().zip(g).fold(Q::zero(), |acc, (a, b)| acc + a * b)
}

fn check_mask_width(n: usize) -> Result<()> {
    if n > 64 {
        return Err(KofnError::TooLarge { n, limit: 64 });
    }
    Ok(())
}

/// Indices sorted by `c_i / w_i` ascending, ties by index.
fn ratio_order(c: &[Q], w: &[Q]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..c.len()).collect();
    // c_a / w_a vs c_b / w_b with positive weights: compare c_a w_b with c_b w_a.
    order.sort_by(|&a, &b| (&c[a] * &w[b]).cmp(&(&c[b] * &w[a])).then(a.cmp(&b)));
    order
}

/// Optimal conservative strategy: increasing `c_i / (1 - p_i)`.
pub fn conservative_mincost(instance: &CostInstance) -> StrategySummary {
    let fail: Vec<Q> = instance.p().iter().map(|p| Q::one() - p).collect();
    let perm = ratio_order(instance.c(), &fail);
    let g = permutation_reach(instance.p(), &perm, instance.k());
    StrategySummary {
        expected_cost: dot(instance.c(), &g),
        g,
        representation: StrategyRepr::Permutation(perm),
    }
}

/// Exact optimal standard strategy by dynamic programming over
/// (tested set, failure count). Refuses `n > limit`.
pub fn standard_mincost_dp(instance: &CostInstance, limit: usize) -> Result<StrategySummary> {
    let (n, k) = (instance.n(), instance.k());
    if n > limit.min(64) {
        return Err(KofnError::TooLarge {
            n,
            limit: limit.min(64),
        });
    }
    let (p, c) = (instance.p(), instance.c());
    let need_pass = n - k + 1;
    let mut value: HashMap<(u64, usize), Q> = HashMap::new();
    let mut table = StateTable::default();

    // Post-order over the reachable state graph, without recursion.
    let mut stack = vec![(0u64, 0usize, false)];
    while let Some((tested, fails, expanded)) = stack.pop() {
        if value.contains_key(&(tested, fails)) {
            continue;
        }
        let passes = tested.count_ones() as usize - fails;
        if fails == k || passes == need_pass {
            value.insert((tested, fails), Q::zero());
            continue;
        }
        if !expanded {
            stack.push((tested, fails, true));
            for t in (0..n).filter(|t| tested & 1 << t == 0) {
                stack.push((tested | 1 << t, fails + 1, false));
                stack.push((tested | 1 << t, fails, false));
            }
            continue;
        }
        let mut best: Option<(Q, usize)> = None;
        for t in (0..n).filter(|t| tested & 1 << t == 0) {
            let next = tested | 1 << t;
            let v = &c[t]
                + &p[t] * &value[&(next, fails)]
                + (Q::one() - &p[t]) * &value[&(next, fails + 1)];
            if best.as_ref().is_none_or(|(b, _)| v < *b) {
                best = Some((v, t));
            }
        }
        let (v, t) = best.expect("undecided state has an untested test");
        value.insert((tested, fails), v);
        table.actions.insert((tested, fails), t);
    }

    // Keep only states the optimal policy reaches.
    let mut reached = StateTable::default();
    let g = propagate(n, k, p, |tested, fails| {
        let t = table
            .next(tested, fails)
            .expect("action for undecided state");
        reached.actions.insert((tested, fails), t);
        Ok(t)
    })?;
    let expected_cost = value[&(0, 0)].clone();
    debug_assert_eq!(expected_cost, dot(c, &g));
    Ok(StrategySummary {
        expected_cost,
        g,
        representation: StrategyRepr::Table(reached),
    })
}

/// Forward probability propagation of a standard strategy given by `action`.
fn propagate(
    n: usize,
    k: usize,
    p: &[Q],
    mut action: impl FnMut(u64, usize) -> Result<usize>,
) -> Result<Vec<Q>> {
    let need_pass = n - k + 1;
    let mut g = vec![Q::zero(); n];
    let mut layer: BTreeMap<(u64, usize), Q> = BTreeMap::from([((0, 0), Q::one())]);
    while !layer.is_empty() {
        let mut next: BTreeMap<(u64, usize), Q> = BTreeMap::new();
        for ((tested, fails), prob) in layer {
            let passes = tested.count_ones() as usize - fails;
            if fails == k || passes == need_pass {
                continue;
            }
            let t = action(tested, fails)?;
            g[t] += &prob;
            let to = tested | 1 << t;
            *next.entry((to, fails)).or_insert_with(Q::zero) += &prob * &p[t];
            *next.entry((to, fails + 1)).or_insert_with(Q::zero) += prob * (Q::one() - &p[t]);
        }
        layer = next;
    }
    Ok(g)
}

/// First entry of `by_fail` that is among the first `a` untested entries of
/// `by_fail` and the first `b` untested entries of `by_pass`.
fn two_perm_choice(
    by_fail: &[usize],
    by_pass: &[usize],
    tested: u64,
    a: usize,
    b: usize,
) -> Result<usize> {
    let front: Vec<usize> = by_pass
        .iter()
        .copied()
        .filter(|t| tested & 1 << t == 0)
        .take(b)
        .collect();
    by_fail
        .iter()
        .copied()
        .filter(|t| tested & 1 << t == 0)
        .take(a)
        .find(|t| front.contains(t))
        .ok_or_else(|| {
            KofnError::Structure("two-permutation rule found an empty intersection".into())
        })
}

/// Standard strategy from the two ratio orders: `by_fail` ascending by
/// `c_i / (1 - p_i)` and `by_pass` ascending by `c_i / p_i`. With `a` more
/// failures or `b` more passes needed to decide, the next test is the first
/// of `by_fail` lying in both the first `a` untested entries of `by_fail`
/// and the first `b` untested entries of `by_pass`.
pub fn standard_mincost_two_perm(instance: &CostInstance) -> Result<StrategySummary> {
    let (n, k) = (instance.n(), instance.k());
    check_mask_width(n)?;
    let (p, c) = (instance.p(), instance.c());
    let fail: Vec<Q> = p.iter().map(|p| Q::one() - p).collect();
    let by_fail = ratio_order(c, &fail);
    let by_pass = ratio_order(c, p);
    let g = propagate(n, k, p, |tested, fails| {
        let passes = tested.count_ones() as usize - fails;
        two_perm_choice(&by_fail, &by_pass, tested, k - fails, n - k + 1 - passes)
    })?;
    Ok(StrategySummary {
        expected_cost: dot(c, &g),
        g,
        representation: StrategyRepr::TwoPermutations { by_fail, by_pass },
    })
}
