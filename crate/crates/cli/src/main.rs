use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use corrsample::agreement::best_response_iteration;
use corrsample::harness::{exact_strategy_error, in_pool};
use corrsample::io::{self, DistributionInput, Input};
use corrsample::model::{dp_lower_bound, flat_tv_distance};
use corrsample::rational::to_f64;
use corrsample::matching::{analyze, matching_exact_error, shared_index};
use corrsample::sampling::{continuous_exact_error, holenstein_exact_error, minhash_exact_error};
use corrsample::{
    brute_force_optimum, build_intersection_graph, conjecture_probe, decompose, grid_embed, holenstein_bound,
    holenstein_continuous_sample, minhash_sample, monte_carlo_error, parse_rational, matching_sample, sweep_delta,
    tv_distance, Error, GridParams, GridRule, PairDistribution, PriorityTable, Rational, Result, Side, Strategy,
    SubsetPair, TrialConfig,
};


/// Denominator used to snap inexact float inputs outside the grid sampler.
const FLOAT_SNAP: u64 = 1_000_000;

#[derive(Parser)]
#[command(name = "corrsample", version, about = "Correlated sampling strategies and exact agreement oracles")]
struct Cli {
    /// Worker threads (default: all cores). Output does not depend on it.
    #[arg(long, global = true)]
    threads: Option<usize>,

    /// Write the result here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,

    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Subcommand)]
enum Command {
    /// Total variation distance between two inputs.
    Tv(Pair),
    /// Run MinHash once on two flat inputs and report its exact error.
    Minhash {
        #[command(flatten)]
        pair: Pair,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Run Holenstein's strategy once and report marginals and exact error.
    Holenstein {
        #[command(flatten)]
        pair: Pair,
        #[command(flatten)]
        grid: GridArgs,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Verify the matching strategy on every promise pair of [n].
    #[command(name = "rivest")]
    MatchingStrategy {
        #[arg(long)]
        n: usize,
        /// Optional inputs to run the strategy on.
        #[arg(long, requires = "right")]
        left: Option<PathBuf>,
        #[arg(long, requires = "left")]
        right: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Print the perfect matching decomposition for odd n.
    Matchings {
        #[arg(long)]
        n: usize,
    },
    /// Exact optimum of the constrained agreement game by exhaustive search.
    Bruteforce {
        #[command(flatten)]
        family: FamilyArgs,
        /// On hitting the search cap, report alternating best responses instead.
        #[arg(long)]
        iterate: bool,
    },
    /// Compare the optimum on the uniform (n, a, b, l) family with MinHash.
    Probe {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        a: usize,
        #[arg(long)]
        b: usize,
        #[arg(long)]
        l: usize,
    },
    /// Tabulate a strategy's error against 2δ/(1+δ).
    Sweep {
        #[arg(long, value_enum, default_value_t = StrategyName::Minhash)]
        strategy: StrategyName,
        /// Comma separated, e.g. 1/10,1/4,1/3.
        #[arg(long, value_delimiter = ',', default_value = "0,1/10,1/4,1/3,1/2,3/4,1")]
        deltas: Vec<String>,
        /// Largest universe the construction may use; larger rows are flagged.
        #[arg(long, default_value_t = 1000)]
        max_n: usize,
        #[command(flatten)]
        grid: GridArgs,
        #[command(flatten)]
        trials: TrialArgs,
    },
    /// Estimate a strategy's disagreement probability by simulation.
    Montecarlo {
        #[arg(long, value_enum, default_value_t = StrategyName::Minhash)]
        strategy: StrategyName,
        #[command(flatten)]
        pair: Pair,
        #[command(flatten)]
        grid: GridArgs,
        #[command(flatten)]
        trials: TrialArgs,
    },
}

#[derive(Args)]
struct Pair {
    /// JSON file: {"n", "set"} or {"n", "probs"}.
    #[arg(long)]
    left: PathBuf,
    #[arg(long)]
    right: PathBuf,
}

#[derive(Args)]
struct GridArgs {
    /// Grid step as p/q with integral q/p. Without it Holenstein runs on the continuous square.
    #[arg(long)]
    gamma: Option<String>,
    #[arg(long, value_enum, default_value_t = RuleName::Floor)]
    grid_rule: RuleName,
}

#[derive(Args)]
struct TrialArgs {
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 100_000)]
    trials: u64,
}

#[derive(Args)]
struct FamilyArgs {
    #[arg(long, value_enum)]
    family: FamilyName,
    #[arg(long)]
    n: usize,
    #[arg(long)]
    p: Option<String>,
    #[arg(long)]
    delta: Option<String>,
    #[arg(long)]
    a: Option<usize>,
    #[arg(long)]
    b: Option<usize>,
    #[arg(long)]
    l: Option<usize>,
}

#[derive(Clone, Copy, ValueEnum)]
enum FamilyName {
    Product,
    Correlated,
    Match,
    Intersection,
}

#[derive(Clone, Copy, ValueEnum)]
enum StrategyName {
    Minhash,
    Holenstein,
    Matching,
}

#[derive(Clone, Copy, ValueEnum)]
enum RuleName {
    Floor,
    Strict,
}

fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidInput(msg.into())
}

fn read(path: &Path) -> Result<Input> {
    io::read_input(path)
}

fn read_pair(pair: &Pair) -> Result<(Input, Input)> {
    let (a, b) = (read(&pair.left)?, read(&pair.right)?);
    if a.n() != b.n() {
        return Err(invalid(format!("inputs have universes of size {} and {}", a.n(), b.n())));
    }
    Ok((a, b))
}

fn grid_params(args: &GridArgs) -> Result<Option<GridParams>> {
    let rule = match args.grid_rule {
        RuleName::Floor => GridRule::Floor,
        RuleName::Strict => GridRule::Strict,
    };
    args.gamma.as_deref().map(|g| Ok(GridParams::parse(g)?.with_rule(rule))).transpose()
}

fn exact(d: &DistributionInput, grid: Option<&GridParams>) -> Result<corrsample::ExactDistribution> {
    match grid {
        Some(g) if d.exact.is_none() => g.snap(&d.float),
        _ => d.exact_or_snap(FLOAT_SNAP),
    }
}

fn required<T>(v: Option<T>, flag: &str) -> Result<T> {
    v.ok_or_else(|| invalid(format!("--{flag} is required for this family")))
}

fn family(args: &FamilyArgs) -> Result<PairDistribution> {
    let rational = |v: &Option<String>, flag| parse_rational(&required(v.clone(), flag)?);
    match args.family {
        FamilyName::Product => PairDistribution::product(args.n, rational(&args.p, "p")?),
        FamilyName::Correlated => {
            PairDistribution::positively_correlated(args.n, rational(&args.p, "p")?, rational(&args.delta, "delta")?)
        }
        FamilyName::Match => PairDistribution::match_family(args.n),
        FamilyName::Intersection => PairDistribution::intersection_family(
            args.n,
            required(args.a, "a")?,
            required(args.b, "b")?,
            required(args.l, "l")?,
        ),
    }
}

fn strategy(name: StrategyName, grid: &GridArgs, n: Option<usize>) -> Result<Strategy> {
    Ok(match name {
        StrategyName::Minhash => Strategy::MinHash,
        StrategyName::Holenstein => match grid_params(grid)? {
            Some(g) => Strategy::HolensteinGrid(g),
            None => Strategy::HolensteinContinuous,
        },
        StrategyName::Matching => {
            let n = n.ok_or_else(|| invalid("the matching strategy needs inputs"))?;
            Strategy::Matching(Arc::new(decompose(&build_intersection_graph(n)?)?))
        }
    })
}

fn rational_list(values: &[Rational]) -> Value {
    Value::Array(values.iter().map(io::rational_json).collect())
}

enum Output {
    Json(Value),
    Csv(String),
}

fn run(cli: &Cli) -> Result<Output> {
    let json_only = |v: Value| {
        if cli.format == Format::Csv {
            Err(invalid("this command only writes JSON"))
        } else {
            Ok(Output::Json(v))
        }
    };
    match &cli.command {
        Command::Tv(pair) => {
            let (a, b) = read_pair(pair)?;
            let (p, q) = (a.into_distribution()?, b.into_distribution()?);
            let v = match (&p.exact, &q.exact) {
                (Some(p), Some(q)) => {
                    let tv = tv_distance(p, q)?.into_inner();
                    json!({
                        "n": p.n(),
                        "tv": io::rational_json(&tv),
                        "holenstein_bound": io::rational_json(&holenstein_bound(&tv)),
                        "lower_bound": io::rational_json(&dp_lower_bound(&(Rational::from_integer(1.into()) - &tv))),
                    })
                }
                _ => {
                    let tv = *tv_distance(&p.float, &q.float)?.value();
                    json!({ "n": p.n(), "tv": tv, "holenstein_bound": 2.0 * tv / (1.0 + tv) })
                }
            };
            json_only(v)
        }
        Command::Minhash { pair, seed } => {
            let (a, b) = read_pair(pair)?;
            let (a, b) = (a.into_subset()?, b.into_subset()?);
            let pri = PriorityTable::new(*seed);
            let pair = SubsetPair::new(a, b)?;
            json_only(json!({
                "n": pair.n(),
                "seed": seed,
                "left": minhash_sample(&pair.a, &pri)?,
                "right": minhash_sample(&pair.b, &pri)?,
                "tv": io::rational_json(flat_tv_distance(&pair)?.value()),
                "exact_error": io::rational_json(&minhash_exact_error(&pair)?),
            }))
        }
        Command::Holenstein { pair, grid, seed } => {
            let (a, b) = read_pair(pair)?;
            let (a, b) = (a.into_distribution()?, b.into_distribution()?);
            let params = grid_params(grid)?;
            let (p, q) = (exact(&a, params.as_ref())?, exact(&b, params.as_ref())?);
            let tv = tv_distance(&p, &q)?.into_inner();
            let v = match params {
                Some(params) => {
                    let (ep, eq) = (grid_embed(&p, &params)?, grid_embed(&q, &params)?);
                    let pri = PriorityTable::new(*seed);
                    json!({
                        "n": p.n(),
                        "gamma": io::rational_json(params.gamma()),
                        "seed": seed,
                        "left": ep.sample(&pri),
                        "right": eq.sample(&pri),
                        "left_cells": ep.counts(),
                        "right_cells": eq.counts(),
                        "left_marginals": rational_list(&ep.marginals()),
                        "right_marginals": rational_list(&eq.marginals()),
                        "tv": io::rational_json(&tv),
                        "exact_error": io::rational_json(&holenstein_exact_error(&p, &q, &params)?),
                        "error_bound": io::rational_json(&params.error_bound(&tv, p.n())),
                    })
                }
                None => json!({
                    "n": p.n(),
                    "seed": seed,
                    "left": holenstein_continuous_sample(&a.float, *seed)?,
                    "right": holenstein_continuous_sample(&b.float, *seed)?,
                    "tv": io::rational_json(&tv),
                    "exact_error": io::rational_json(&continuous_exact_error(&p, &q)?),
                    "bound": io::rational_json(&holenstein_bound(&tv)),
                }),
            };
            json_only(v)
        }
        Command::MatchingStrategy { n, left, right, seed } => {
            let graph = build_intersection_graph(*n)?;
            let decomp = decompose(&graph)?;
            let mut v = io::matching_analysis_json(&analyze(&graph, &decomp)?);
            v["exact_error"] = io::rational_json(&matching_exact_error(*n)?);
            if let (Some(l), Some(r)) = (left, right) {
                let (a, b) = (read(l)?.into_subset()?, read(r)?.into_subset()?);
                let idx = shared_index(*seed, decomp.k());
                v["seed"] = json!(seed);
                v["r"] = json!(idx);
                v["left"] = json!(matching_sample(Side::Left, &a, idx, &decomp)?);
                v["right"] = json!(matching_sample(Side::Right, &b, idx, &decomp)?);
            }
            json_only(v)
        }
        Command::Matchings { n } => json_only(io::matchings_json(&decompose(&build_intersection_graph(*n)?)?)),
        Command::Bruteforce { family: args, iterate } => {
            let d = family(args)?;
            match brute_force_optimum(&d) {
                Ok(r) => json_only(io::brute_force_json(&d, &r)),
                Err(Error::ResourceLimit { .. }) if *iterate => {
                    log::warn!("search space too large; reporting alternating best responses (an upper bound)");
                    json_only(io::iteration_json(&d, &best_response_iteration(&d)?))
                }
                Err(e) => Err(e),
            }
        }
        Command::Probe { n, a, b, l } => json_only(io::probe_json(&conjecture_probe(*n, *a, *b, *l)?)),
        Command::Sweep { strategy: name, deltas, max_n, grid, trials } => {
            let deltas = deltas.iter().map(|d| parse_rational(d)).collect::<Result<Vec<_>>>()?;
            let s = strategy(*name, grid, None)?;
            let cfg = TrialConfig::new(trials.seed, trials.trials);
            let report = sweep_delta(&s, &deltas, *max_n, &cfg)?;
            Ok(match cli.format {
                Format::Json => Output::Json(io::sweep_json(&report)),
                Format::Csv => Output::Csv(io::sweep_csv(&report)?),
            })
        }
        Command::Montecarlo { strategy: name, pair, grid, trials } => {
            let (a, b) = read_pair(pair)?;
            let n = a.n();
            let params = grid_params(grid)?;
            let (a, b) = (a.into_distribution()?, b.into_distribution()?);
            let (p, q) = (exact(&a, params.as_ref())?, exact(&b, params.as_ref())?);
            let s = strategy(*name, grid, Some(n))?;
            let cfg = TrialConfig::new(trials.seed, trials.trials);
            let est = monte_carlo_error(&s, &p, &q, &cfg)?;
            let exact = exact_strategy_error(&s, &p, &q)?;
            Ok(match cli.format {
                Format::Json => Output::Json(io::estimate_json(&s.to_string(), &est, Some(&exact), cfg.master_seed)),
                Format::Csv => Output::Csv(format!(
                    "strategy,estimate,stderr,disagreements,trials,seed,exact\n{},{},{},{},{},{},{}\n",
                    s,
                    est.estimate,
                    est.stderr,
                    est.disagreements,
                    est.trials,
                    cfg.master_seed,
                    to_f64(&exact)
                )),
            })
        }
    }
}

fn write(out: Option<&Path>, output: Output) -> Result<()> {
    let text = match output {
        Output::Json(v) => {
            let mut s = serde_json::to_string_pretty(&v).map_err(|e| Error::InvariantViolation(e.to_string()))?;
            s.push('\n');
            s
        }
        Output::Csv(s) => s,
    };
    match out {
        Some(path) => fs::write(path, text)?,
        None => print!("{text}"),
    }
    Ok(())
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::InvalidInput(_) | Error::Parse { .. } => 2,
        Error::ResourceLimit { .. } => 3,
        Error::InvariantViolation(_) => 4,
        Error::Io(_) => 1,
    }
}

fn execute(cli: &Cli) -> Result<()> {
    let output = in_pool(cli.threads, || run(cli))??;
    write(cli.out.as_deref(), output)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match execute(&Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
