//! Standard k-of-n MaxThroughput by cutting planes on the dual LP.
//!
//! The dual asks for prices `y >= 0` minimizing `sum r_i y_i` such that
//! every strategy costs at least 1 under `y`. The cheapest strategy under
//! `y` (the standard MinCost DP) either proves `y` feasible or yields a
//! violated constraint, which joins the restricted master problem.

use std::collections::HashSet;

use num_traits::{One, Zero};

use crate::error::{KofnError, Result};
use crate::instance::{CostInstance, Instance};
use crate::lp::{certify, solve_lp, LinearProgram, LpStatus, Relation, Sense};
use crate::mincost::{standard_mincost_dp, DecisionTree, StrategySummary, DEFAULT_DP_LIMIT};
use crate::num::Q;
use crate::routing::TreeRouting;

#[derive(Debug, Clone, PartialEq)]
pub struct PoolEntry {
    pub tree: DecisionTree,
    pub g: Vec<Q>,
}

/// Strategies collected by separation, distinct by `g`.
#[derive(Debug, Clone, Default)]
pub struct StrategyPool {
    entries: Vec<PoolEntry>,
    seen: HashSet<Vec<Q>>,
}

impl StrategyPool {
    /// Adds a strategy; returns false if one with the same `g` is present.
    pub fn insert(&mut self, tree: DecisionTree, g: Vec<Q>) -> bool {
        if !self.seen.insert(g.clone()) {
            return false;
        }
        self.entries.push(PoolEntry { tree, g });
        true
    }

    pub fn entries(&self) -> &[PoolEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Separation {
    /// The cheapest strategy costs less than 1 under the prices.
    Violated { strategy: StrategySummary, cost: Q },
    /// Every strategy costs at least `min_cost >= 1`.
    Feasible { min_cost: Q },
}

/// Finds a strategy whose dual constraint `sum g_i y_i >= 1` fails.
pub fn separation_oracle(instance: &Instance, y: &[Q], dp_limit: usize) -> Result<Separation> {
    let costs =
        CostInstance::with_nonnegative_costs(instance.k(), instance.p().to_vec(), y.to_vec())?;
    let strategy = standard_mincost_dp(&costs, dp_limit)?;
    let cost = strategy.expected_cost.clone();
    Ok(if cost < Q::one() {
        Separation::Violated { strategy, cost }
    } else {
        Separation::Feasible { min_cost: cost }
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StandardOptions {
    pub dp_limit: usize,
    /// Separation rounds allowed; `None` means `10 n k`.
    pub max_iterations: Option<usize>,
}

impl Default for StandardOptions {
    fn default() -> Self {
        Self {
            dp_limit: DEFAULT_DP_LIMIT,
            max_iterations: None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct StandardSolution {
    pub routing: TreeRouting,
    pub throughput: Q,
    /// Final dual prices.
    pub dual: Vec<Q>,
    /// Proven upper bound on the optimum; equals `throughput` when certified.
    pub upper_bound: Q,
    /// The oracle confirmed the final prices and the master LPs certified.
    pub certified: bool,
    pub iterations: usize,
    pub pool: StrategyPool,
}

impl StandardSolution {
    pub fn gap(&self) -> Q {
        &self.upper_bound - &self.throughput
    }
}

fn to_tree(instance: &Instance, strategy: &StrategySummary) -> Result<DecisionTree> {
    let costs = CostInstance::with_nonnegative_costs(
        instance.k(),
        instance.p().to_vec(),
        vec![Q::zero(); instance.n()],
    )?;
    strategy.to_tree(&costs)
}

fn restricted_dual(instance: &Instance, pool: &StrategyPool) -> LinearProgram {
    let mut lp = LinearProgram::new(Sense::Min, instance.r().to_vec());
    for e in pool.entries() {
        lp.constrain(e.g.clone(), Relation::Ge, Q::one());
    }
    lp
}

fn restricted_primal(instance: &Instance, pool: &StrategyPool) -> LinearProgram {
    let mut lp = LinearProgram::new(Sense::Max, vec![Q::one(); pool.len()]);
    for i in 0..instance.n() {
        lp.constrain(
            pool.entries().iter().map(|e| e.g[i].clone()).collect(),
            Relation::Le,
            instance.r()[i].clone(),
        );
    }
    lp
}

/// Optimal standard routing over decision-tree strategies.
pub fn solve_standard(instance: &Instance, options: StandardOptions) -> Result<StandardSolution> {
    let (n, k) = (instance.n(), instance.k());
    if n > options.dp_limit {
        return Err(KofnError::TooLarge {
            n,
            limit: options.dp_limit,
        });
    }
    let cap = options.max_iterations.unwrap_or(10 * n * k);
    let mut pool = StrategyPool::default();

    // Seed with the cheapest strategy when test i costs 1 / r_i.
    let seed: Vec<Q> = instance.r().iter().map(|r| r.recip()).collect();
    let first = match separation_oracle(instance, &seed, options.dp_limit)? {
        Separation::Violated { strategy, .. } => strategy,
        Separation::Feasible { .. } => {
            let costs = CostInstance::with_nonnegative_costs(k, instance.p().to_vec(), seed)?;
            standard_mincost_dp(&costs, options.dp_limit)?
        }
    };
    pool.insert(to_tree(instance, &first)?, first.g);

    let mut iterations = 0;
    let mut y;
    let mut min_cost;
    loop {
        let dual_lp = restricted_dual(instance, &pool);
        let dual = solve_lp(&dual_lp);
        if dual.status != LpStatus::Optimal || !certify(&dual_lp, &dual) {
            return Err(KofnError::Structure(
                "restricted dual did not solve to a certified optimum".into(),
            ));
        }
        y = dual.primal;
        match separation_oracle(instance, &y, options.dp_limit)? {
            Separation::Feasible { min_cost: c } => {
                min_cost = c;
                break;
            }
            Separation::Violated { strategy, cost } => {
                min_cost = cost;
                if iterations == cap {
                    break;
                }
                iterations += 1;
                let tree = to_tree(instance, &strategy)?;
                if !pool.insert(tree, strategy.g) {
                    return Err(KofnError::Structure(
                        "separation returned a strategy already in the pool".into(),
                    ));
                }
            }
        }
    }

    let primal_lp = restricted_primal(instance, &pool);
    let primal = solve_lp(&primal_lp);
    if primal.status != LpStatus::Optimal || !certify(&primal_lp, &primal) {
        return Err(KofnError::Structure(
            "restricted primal did not solve to a certified optimum".into(),
        ));
    }
    let master: Q = instance
        .r()
        .iter()
        .zip(&y)
        .fold(Q::zero(), |acc, (r, v)| acc + r * v);
    let feasible = min_cost >= Q::one();
    // Scaling the prices by 1 / min_cost makes them dual feasible.
    let upper_bound = if feasible {
        master.clone()
    } else if min_cost.is_zero() {
        return Err(KofnError::Structure(
            "iteration cap reached with free strategies".into(),
        ));
    } else {
        &master / &min_cost
    };
    let routing = TreeRouting {
        entries: pool
            .entries()
            .iter()
            .zip(&primal.primal)
            .filter(|(_, x)| !x.is_zero())
            .map(|(e, x)| (e.tree.clone(), x.clone()))
            .collect(),
    };
    let throughput = primal.objective;
    Ok(StandardSolution {
        certified: feasible && throughput == master,
        routing,
        throughput,
        dual: y,
        upper_bound,
        iterations,
        pool,
    })
}
