//! Monte Carlo replay of a routing.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{cyclic_shift_weights, LoadReport, MegaRouting, Routing};
use crate::error::{KofnError, Result};
use crate::instance::Instance;
use crate::mincost::DecisionTree;
use crate::num::{Scalar, Q};

#[derive(Debug, Clone, PartialEq)]
pub struct SimulationReport {
    pub items: u64,
    /// Number of sampled items each processor tested.
    pub visits: Vec<u64>,
    /// Empirical arrival rate per processor, scaled to the routing's throughput.
    pub load: Vec<f64>,
    pub throughput: f64,
}

/// Cumulative weights over the members' cyclic shifts.
type ShiftTable = Vec<(f64, Vec<usize>)>;

/// Sampling tables in f64.
enum Plan {
    /// Per phase: cumulative weight, then per class the cumulative shift weights.
    Mega(Vec<(f64, Vec<ShiftTable>)>),
    Perm(Vec<(f64, Vec<usize>)>),
    Tree(Vec<(f64, DecisionTree)>),
}

fn cumulative<T>(items: Vec<(Q, T)>) -> Vec<(f64, T)> {
    let total: Q = items
        .iter()
        .fold(Q::from_integer(0.into()), |acc, (w, _)| acc + w);
    let mut acc = Q::from_integer(0.into());
    items
        .into_iter()
        .map(|(w, t)| {
            acc += w;
            (Scalar::to_f64(&(&acc / &total)), t)
        })
        .collect()
}

fn pick<T>(table: &[(f64, T)], u: f64) -> &T {
    let at = table.partition_point(|(c, _)| *c <= u);
    &table[at.min(table.len() - 1)].1
}

fn mega_plan(pass: &[Q], mega: &MegaRouting) -> Plan {
    let phases: Vec<(Q, Vec<ShiftTable>)> = mega
        .phases
        .iter()
        .map(|ph| {
            let classes = ph
                .classes
                .iter()
                .map(|c| {
                    cumulative(
                        cyclic_shift_weights(c, pass)
                            .into_iter()
                            .map(|(s, w)| (w, s))
                            .collect(),
                    )
                })
                .collect();
            (ph.flow.clone(), classes)
        })
        .collect();
    Plan::Mega(cumulative(phases))
}

fn run_shard(plan: &Plan, pass: &[f64], k: usize, items: u64, rng: &mut ChaCha8Rng) -> Vec<u64> {
    let mut visits = vec![0u64; pass.len()];
    let mut route: Vec<usize> = Vec::with_capacity(pass.len());
    for _ in 0..items {
        route.clear();
        if let Plan::Tree(trees) = plan {
            let mut node = pick(trees, rng.random::<f64>());
            while let DecisionTree::Test {
                test,
                fail,
                pass: on_pass,
            } = node
            {
                visits[*test] += 1;
                node = if rng.random::<f64>() < pass[*test] {
                    on_pass
                } else {
                    fail
                };
            }
            continue;
        }
        match plan {
            Plan::Perm(entries) => route.extend_from_slice(pick(entries, rng.random::<f64>())),
            Plan::Mega(phases) => {
                for class in pick(phases, rng.random::<f64>()) {
                    route.extend_from_slice(pick(class, rng.random::<f64>()));
                }
            }
            Plan::Tree(_) => unreachable!(),
        }
        let mut failures = 0;
        for &i in &route {
            visits[i] += 1;
            if rng.random::<f64>() >= pass[i] {
                failures += 1;
                if failures == k {
                    break;
                }
            }
        }
    }
    visits
}

/// Samples `items` items, split over `shards` independently seeded streams.
///
/// The result depends only on `(seed, shards)`.
pub fn simulate_monte_carlo(
    instance: &Instance,
    routing: &Routing,
    items: u64,
    seed: u64,
    shards: usize,
) -> Result<SimulationReport> {
    if items == 0 {
        return Err(KofnError::Structure("need at least one item".into()));
    }
    let shards = shards.clamp(1, items.min(1024) as usize);
    let n = instance.n();
    // Validates structure and gives the throughput.
    let exact = super::evaluate_loads(instance, routing)?;
    if exact.throughput == Q::from_integer(0.into()) {
        return Err(KofnError::Structure("routing carries no flow".into()));
    }
    let plan = match routing {
        Routing::Mega(m) => mega_plan(instance.p(), m),
        Routing::Compressed(c) => mega_plan(instance.p(), &c.replay()?),
        Routing::Permutation(p) => Plan::Perm(cumulative(
            p.entries
                .iter()
                .map(|(s, w)| (w.clone(), s.clone()))
                .collect(),
        )),
        Routing::Tree(t) => Plan::Tree(cumulative(
            t.entries
                .iter()
                .map(|(s, w)| (w.clone(), s.clone()))
                .collect(),
        )),
    };
    let pass: Vec<f64> = instance.p().iter().map(Scalar::to_f64).collect();
    let k = instance.k();
    let share = |s: usize| items / shards as u64 + u64::from((s as u64) < items % shards as u64);
    let stream = |s: usize| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(s as u64);
        rng
    };
    let tallies: Vec<Vec<u64>> = if shards == 1 {
        vec![run_shard(&plan, &pass, k, items, &mut stream(0))]
    } else {
        std::thread::scope(|scope| {
            let handles: Vec<_> = (0..shards)
                .map(|s| {
                    let (plan, pass) = (&plan, &pass);
                    scope.spawn(move || run_shard(plan, pass, k, share(s), &mut stream(s)))
                })
                .collect();
            handles
                .into_iter()
                .map(|h| h.join().expect("shard panicked"))
                .collect()
        })
    };
    let mut visits = vec![0u64; n];
    for t in tallies {
        for (v, x) in visits.iter_mut().zip(t) {
            *v += x;
        }
    }
    let throughput = Scalar::to_f64(&exact.throughput);
    let load = visits
        .iter()
        .map(|&v| v as f64 / items as f64 * throughput)
        .collect();
    Ok(SimulationReport {
        items,
        visits,
        load,
        throughput,
    })
}

/// Per processor: is the empirical load within three standard errors of the exact one?
///
/// Each item visits processor `i` with probability `g_i = load_i / F`, so the
/// scaled visit frequency has standard error `F sqrt(g_i (1 - g_i) / items)`.
pub fn within_three_sigma(exact: &LoadReport, sim: &SimulationReport) -> Vec<bool> {
    let f = sim.throughput;
    exact
        .load
        .iter()
        .zip(&sim.load)
        .map(|(e, s)| {
            let e = Scalar::to_f64(e);
            let g = (e / f).clamp(0.0, 1.0);
            let se = f * (g * (1.0 - g) / sim.items as f64).sqrt();
            (s - e).abs() <= 3.0 * se + 1e-12 * f.max(1.0)
        })
        .collect()
}
