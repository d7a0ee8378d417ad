//! The demo's operations, as plain functions from instance text to JSON.

use kofn::cli::format::{parse_instance, write_routing};
use kofn::equalize::solve_conservative;
use kofn::mincost::{
    conservative_mincost, standard_mincost_dp, DecisionTree, StrategyRepr, DEFAULT_DP_LIMIT,
};
use kofn::num::{format_decimal, Scalar};
use kofn::prob::throughput_upper_bound;
use kofn::routing::{
    check_saturated_suffix, evaluate_loads, simulate_monte_carlo, within_three_sigma, LoadReport,
    Routing,
};
use kofn::smt::{solve_standard, StandardOptions};
use kofn::{Instance, Q};
use serde_json::{json, Value};

/// Largest sample accepted from the page.
pub const MAX_ITEMS: u64 = 5_000_000;

fn number(x: &Q) -> Value {
    json!({ "exact": x.to_string(), "approx": Scalar::to_f64(x), "text": format_decimal(x, 6) })
}

fn load_instance(text: &str) -> Result<(Instance, Option<Vec<Q>>), String> {
    let file = parse_instance(text).map_err(|e| e.to_string())?;
    Ok((file.instance, file.costs))
}

fn processors(inst: &Instance, report: &LoadReport) -> Value {
    (0..inst.n())
        .map(|i| {
            json!({
                "id": i + 1,
                "pass": inst.p()[i].to_string(),
                "rate": number(&inst.r()[i]),
                "load": number(&report.load[i]),
                "saturated": report.saturated.contains(&i),
            })
        })
        .collect()
}

/// Solves MaxThroughput. `mode` is `conservative` or `standard`.
pub fn solve(text: &str, mode: &str) -> Result<Value, String> {
    let (inst, _) = load_instance(text)?;
    let bound = throughput_upper_bound(&inst);
    match mode {
        "conservative" => {
            let sol = solve_conservative(&inst);
            let routing = Routing::Compressed(sol.compressed.clone());
            let report = evaluate_loads(&inst, &routing).map_err(|e| e.to_string())?;
            let cert =
                check_saturated_suffix(&inst, &routing, &report).map_err(|e| e.to_string())?;
            let phases: Vec<Value> = sol
                .mega()
                .phases
                .iter()
                .map(|ph| {
                    let classes: Vec<Vec<usize>> = ph
                        .classes
                        .iter()
                        .map(|c| c.iter().map(|i| i + 1).collect())
                        .collect();
                    json!({ "flow": number(&ph.flow), "classes": classes })
                })
                .collect();
            Ok(json!({
                "mode": mode,
                "throughput": number(&sol.throughput),
                "bound": number(&bound),
                "certificate": cert.map(|c| c.kind.as_str()),
                "processors": processors(&inst, &report),
                "phases": phases,
                "routing": write_routing(&routing),
            }))
        }
        "standard" => {
            let sol =
                solve_standard(&inst, StandardOptions::default()).map_err(|e| e.to_string())?;
            let routing = Routing::Tree(sol.routing.clone());
            let report = evaluate_loads(&inst, &routing).map_err(|e| e.to_string())?;
            Ok(json!({
                "mode": mode,
                "throughput": number(&sol.throughput),
                "bound": number(&sol.upper_bound),
                "certificate": sol.certified.then_some("duality"),
                "processors": processors(&inst, &report),
                "strategies": sol.routing.entries.len(),
                "iterations": sol.iterations,
                "routing": write_routing(&routing),
            }))
        }
        other => Err(format!("unknown mode `{other}`")),
    }
}

/// Solves the conservative problem, then replays the routing on `items`
/// sampled items.
pub fn simulate(text: &str, items: u64, seed: u64) -> Result<Value, String> {
    if items == 0 || items > MAX_ITEMS {
        return Err(format!("items must be between 1 and {MAX_ITEMS}"));
    }
    let (inst, _) = load_instance(text)?;
    let sol = solve_conservative(&inst);
    let routing = Routing::Compressed(sol.compressed);
    let exact = evaluate_loads(&inst, &routing).map_err(|e| e.to_string())?;
    // Browsers have no threads here, so one shard.
    let sim = simulate_monte_carlo(&inst, &routing, items, seed, 1).map_err(|e| e.to_string())?;
    let within = within_three_sigma(&exact, &sim);
    let rows: Vec<Value> = (0..inst.n())
        .map(|i| {
            json!({
                "id": i + 1,
                "exact": Scalar::to_f64(&exact.load[i]),
                "sampled": sim.load[i],
                "visits": sim.visits[i],
                "within": within[i],
            })
        })
        .collect();
    Ok(json!({
        "items": items,
        "seed": seed,
        "throughput": number(&exact.throughput),
        "processors": rows,
    }))
}

fn preorder(tree: &DecisionTree, out: &mut Vec<String>) {
    match tree {
        DecisionTree::Leaf => out.push(".".into()),
        DecisionTree::Test { test, fail, pass } => {
            out.push((test + 1).to_string());
            preorder(fail, out);
            preorder(pass, out);
        }
    }
}

/// Cheapest single strategy. Needs a cost column in the instance.
pub fn mincost(text: &str, mode: &str) -> Result<Value, String> {
    let file = parse_instance(text).map_err(|e| e.to_string())?;
    let inst = file
        .cost_instance()
        .ok_or("the instance has no cost column")?;
    let summary = match mode {
        "conservative" => conservative_mincost(&inst),
        "standard" => standard_mincost_dp(&inst, DEFAULT_DP_LIMIT).map_err(|e| e.to_string())?,
        other => return Err(format!("unknown mode `{other}`")),
    };
    let order = match &summary.representation {
        StrategyRepr::Permutation(perm) => Some(perm.iter().map(|i| i + 1).collect::<Vec<_>>()),
        _ => None,
    };
    let tree = summary.to_tree(&inst).map_err(|e| e.to_string())?;
    let mut nodes = Vec::new();
    preorder(&tree, &mut nodes);
    let reach: Vec<Value> = summary.g.iter().map(number).collect();
    Ok(json!({
        "mode": mode,
        "expected_cost": number(&summary.expected_cost),
        "order": order,
        "tree": nodes.join(" "),
        "reach": reach,
    }))
}
