//! The `kofn` command line.

pub mod format;

use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};

use crate::equalize::{solve_conservative, Representation};
use crate::mincost::{conservative_mincost, standard_mincost_dp, DecisionTree};
use crate::num::{format_decimal, Q};
use crate::prob::throughput_upper_bound;
use crate::routing::{
    check_saturated_suffix, evaluate_loads, simulate_monte_carlo, within_three_sigma, Routing,
    DEFAULT_EXPANSION_CAP,
};
use crate::smt::{solve_standard, StandardOptions};
use format::{parse_instance, parse_routing, write_routing, InstanceFile};

/// Environment variable that supplies a seed when `--seed` is absent.
pub const SEED_ENV: &str = "KOFN_SEED";

#[derive(Debug, Parser)]
#[command(
    name = "kofn",
    version,
    about = "Maximum-throughput routing for parallel k-of-n testing"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Mode {
    Conservative,
    Standard,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Rep {
    Mega,
    Compressed,
    Perm,
    Tree,
}

#[derive(Debug, clap::Args)]
struct DecimalArgs {
    /// Also print rounded decimals (non-canonical)
    #[arg(long)]
    decimal: bool,
    /// Significant digits for --decimal
    #[arg(long, default_value_t = 12)]
    precision: usize,
}

impl DecimalArgs {
    fn show(&self, value: &Q) -> String {
        if self.decimal {
            format!("{value} (~{})", format_decimal(value, self.precision))
        } else {
            value.to_string()
        }
    }
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Compute a maximum-throughput routing
    Solve {
        instance: PathBuf,
        #[arg(long, value_enum, default_value_t = Mode::Conservative)]
        mode: Mode,
        /// Output representation [default: compressed, or tree for standard]
        #[arg(long, value_enum)]
        rep: Option<Rep>,
        /// Most permutations a perm expansion may produce
        #[arg(long, default_value_t = DEFAULT_EXPANSION_CAP)]
        cap: u128,
        /// Write the routing here instead of stdout
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        decimal: DecimalArgs,
    },
    /// Recompute loads of a routing and check feasibility
    Validate {
        instance: PathBuf,
        /// Routing file, or - for stdin
        routing: PathBuf,
        #[command(flatten)]
        decimal: DecimalArgs,
    },
    /// Cheapest strategy for the instance's costs
    Mincost {
        instance: PathBuf,
        #[arg(long, value_enum, default_value_t = Mode::Conservative)]
        mode: Mode,
        #[command(flatten)]
        decimal: DecimalArgs,
    },
    /// Throughput upper bound sum r_i (1 - p_i) / E[min(k, Z)]
    Bound {
        instance: PathBuf,
        #[command(flatten)]
        decimal: DecimalArgs,
    },
    /// Monte Carlo check of a routing's loads
    Simulate {
        instance: PathBuf,
        /// Routing file, or - for stdin
        routing: PathBuf,
        #[arg(long, default_value_t = 1_000_000)]
        items: u64,
        /// Defaults to $KOFN_SEED, then 0
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        shards: Option<usize>,
    },
}

struct Failure {
    code: i32,
    message: String,
}

fn fail(code: i32, message: impl Into<String>) -> Failure {
    Failure {
        code,
        message: message.into(),
    }
}

fn read_text(path: &Path, stdin: &mut dyn Read) -> Result<String, Failure> {
    if path.as_os_str() == "-" {
        let mut s = String::new();
        stdin
            .read_to_string(&mut s)
            .map_err(|e| fail(2, format!("stdin: {e}")))?;
        return Ok(s);
    }
    std::fs::read_to_string(path).map_err(|e| fail(2, format!("{}: {e}", path.display())))
}

fn load_instance(path: &Path, stdin: &mut dyn Read) -> Result<InstanceFile, Failure> {
    parse_instance(&read_text(path, stdin)?)
        .map_err(|e| fail(2, format!("{}: {e}", path.display())))
}

fn load_routing(path: &Path, stdin: &mut dyn Read) -> Result<Routing, Failure> {
    parse_routing(&read_text(path, stdin)?).map_err(|e| fail(2, format!("{}: {e}", path.display())))
}

fn io(e: std::io::Error) -> Failure {
    fail(2, e.to_string())
}

/// Runs the command line; returns the process exit status.
///
/// 0 on success, 1 when a routing fails validation or a solve is refused,
/// 2 on usage or input errors.
pub fn run<I, T>(args: I, stdin: &mut dyn Read, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let text = e.render().to_string();
            let _ = if code == 0 {
                out.write_all(text.as_bytes())
            } else {
                err.write_all(text.as_bytes())
            };
            return code;
        }
    };
    match dispatch(cli.command, stdin, out) {
        Ok(code) => code,
        Err(f) => {
            let _ = writeln!(err, "kofn: {}", f.message);
            f.code
        }
    }
}

fn dispatch(command: Command, stdin: &mut dyn Read, out: &mut dyn Write) -> Result<i32, Failure> {
    match command {
        Command::Solve {
            instance,
            mode,
            rep,
            cap,
            out: target,
            decimal,
        } => {
            let file = load_instance(&instance, stdin)?;
            let inst = &file.instance;
            let (routing, throughput, certificate) = match mode {
                Mode::Conservative => {
                    let rep = match rep.unwrap_or(Rep::Compressed) {
                        Rep::Mega => Representation::Mega,
                        Rep::Compressed => Representation::Compressed,
                        Rep::Perm => Representation::Permutation,
                        Rep::Tree => return Err(fail(2, "--rep tree needs --mode standard")),
                    };
                    let sol = solve_conservative(inst);
                    let routing = sol
                        .routing(inst, rep, cap)
                        .map_err(|e| fail(1, e.to_string()))?;
                    let report =
                        evaluate_loads(inst, &routing).map_err(|e| fail(1, e.to_string()))?;
                    let cert = check_saturated_suffix(inst, &routing, &report)
                        .map_err(|e| fail(1, e.to_string()))?
                        .map_or("none", |c| c.kind.as_str())
                        .to_string();
                    (routing, sol.throughput, cert)
                }
                Mode::Standard => {
                    if !matches!(rep, None | Some(Rep::Tree)) {
                        return Err(fail(2, "standard routings are written with --rep tree"));
                    }
                    let sol = solve_standard(inst, StandardOptions::default())
                        .map_err(|e| fail(1, e.to_string()))?;
                    let cert = if sol.certified {
                        "duality".to_string()
                    } else {
                        format!("none (gap {})", sol.gap())
                    };
                    let throughput = sol.throughput.clone();
                    (Routing::Tree(sol.routing), throughput, cert)
                }
            };
            let mut text = write_routing(&routing);
            text.push_str(&format!("# certificate {certificate}\n"));
            if decimal.decimal {
                text.push_str(&format!(
                    "# throughput {} (rounded, non-canonical)\n",
                    decimal.show(&throughput)
                ));
            }
            match target {
                Some(path) => {
                    std::fs::write(&path, &text)
                        .map_err(|e| fail(2, format!("{}: {e}", path.display())))?;
                    writeln!(out, "throughput {}", decimal.show(&throughput)).map_err(io)?;
                    writeln!(out, "certificate {certificate}").map_err(io)?;
                }
                None => out.write_all(text.as_bytes()).map_err(io)?,
            }
            Ok(0)
        }
        Command::Validate {
            instance,
            routing,
            decimal,
        } => {
            let file = load_instance(&instance, stdin)?;
            let inst = &file.instance;
            let routing = load_routing(&routing, stdin)?;
            let report = evaluate_loads(inst, &routing).map_err(|e| fail(1, e.to_string()))?;
            for i in 0..inst.n() {
                let state = if report.residual[i] < Q::from_integer(0.into()) {
                    "OVERLOADED"
                } else if report.saturated.contains(&i) {
                    "saturated"
                } else {
                    "slack"
                };
                writeln!(
                    out,
                    "processor {}: load {} of {} ({state})",
                    i + 1,
                    decimal.show(&report.load[i]),
                    inst.r()[i]
                )
                .map_err(io)?;
            }
            writeln!(out, "throughput {}", decimal.show(&report.throughput)).map_err(io)?;
            let over = report.overloaded();
            writeln!(
                out,
                "feasible {}",
                if over.is_empty() { "yes" } else { "no" }
            )
            .map_err(io)?;
            if let Some(&i) = over.first() {
                return Err(fail(
                    1,
                    format!(
                        "processor {} exceeds its rate limit: load {} > {}",
                        i + 1,
                        report.load[i],
                        inst.r()[i]
                    ),
                ));
            }
            let cert = check_saturated_suffix(inst, &routing, &report)
                .map_err(|e| fail(1, e.to_string()))?;
            writeln!(
                out,
                "certificate {}",
                cert.map_or("none", |c| c.kind.as_str())
            )
            .map_err(io)?;
            Ok(0)
        }
        Command::Mincost {
            instance,
            mode,
            decimal,
        } => {
            let file = load_instance(&instance, stdin)?;
            let costs = file.cost_instance().ok_or_else(|| {
                fail(
                    2,
                    format!("{}: records need a third cost field", instance.display()),
                )
            })?;
            let summary = match mode {
                Mode::Conservative => conservative_mincost(&costs),
                Mode::Standard => standard_mincost_dp(&costs, crate::mincost::DEFAULT_DP_LIMIT)
                    .map_err(|e| fail(1, e.to_string()))?,
            };
            writeln!(
                out,
                "expected-cost {}",
                decimal.show(&summary.expected_cost)
            )
            .map_err(io)?;
            if let crate::mincost::StrategyRepr::Permutation(perm) = &summary.representation {
                let ids: Vec<String> = perm.iter().map(|i| (i + 1).to_string()).collect();
                writeln!(out, "order {}", ids.join(" ")).map_err(io)?;
            }
            let tree = summary
                .to_tree(&costs)
                .map_err(|e| fail(1, e.to_string()))?;
            writeln!(out, "tree {}", preorder(&tree)).map_err(io)?;
            let g: Vec<String> = summary.g.iter().map(ToString::to_string).collect();
            writeln!(out, "g {}", g.join(" ")).map_err(io)?;
            Ok(0)
        }
        Command::Bound { instance, decimal } => {
            let file = load_instance(&instance, stdin)?;
            writeln!(
                out,
                "{}",
                decimal.show(&throughput_upper_bound(&file.instance))
            )
            .map_err(io)?;
            Ok(0)
        }
        Command::Simulate {
            instance,
            routing,
            items,
            seed,
            shards,
        } => {
            let file = load_instance(&instance, stdin)?;
            let inst = &file.instance;
            let routing = load_routing(&routing, stdin)?;
            let seed = match seed {
                Some(s) => s,
                None => match std::env::var(SEED_ENV) {
                    Ok(v) => v
                        .trim()
                        .parse()
                        .map_err(|_| fail(2, format!("{SEED_ENV}={v:?} is not an integer seed")))?,
                    Err(_) => 0,
                },
            };
            let shards = shards.unwrap_or_else(|| {
                std::thread::available_parallelism().map_or(1, |n| n.get().min(8))
            });
            let exact = evaluate_loads(inst, &routing).map_err(|e| fail(1, e.to_string()))?;
            let sim = simulate_monte_carlo(inst, &routing, items, seed, shards)
                .map_err(|e| fail(1, e.to_string()))?;
            let ok = within_three_sigma(&exact, &sim);
            writeln!(out, "items {items} seed {seed} shards {shards}").map_err(io)?;
            for (i, (load, (sampled, within))) in
                exact.load.iter().zip(sim.load.iter().zip(&ok)).enumerate()
            {
                writeln!(
                    out,
                    "processor {}: exact {} (~{}) simulated {:.6} within-3se {}",
                    i + 1,
                    load,
                    format_decimal(load, 6),
                    sampled,
                    if *within { "yes" } else { "no" }
                )
                .map_err(io)?;
            }
            let all = ok.iter().all(|&b| b);
            writeln!(out, "all-within-3se {}", if all { "yes" } else { "no" }).map_err(io)?;
            Ok(if all { 0 } else { 1 })
        }
    }
}

fn preorder(tree: &DecisionTree) -> String {
    match tree {
        DecisionTree::Leaf => ".".into(),
        DecisionTree::Test { test, fail, pass } => {
            format!("{} {} {}", test + 1, preorder(fail), preorder(pass))
        }
    }
}
