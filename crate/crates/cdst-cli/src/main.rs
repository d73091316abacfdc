//! Command-line surface for the cost-distance Steiner tree pipeline:
//! solve instances, generate instance families, run the exact oracle,
//! re-verify solution files, and emit benchmark CSV.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use cdst::analysis;
use cdst::instances;
use cdst::oracle;
use cdst::{BetaMethod, Error, Instance, SolveOptions, SplitRule};

#[derive(Parser)]
#[command(
    name = "cdst",
    version,
    about = "Cost-distance Steiner trees: solve, generate, verify, bench"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run the splitting/reconnection pipeline on an instance file.
    Solve(SolveArgs),
    /// Generate instance files.
    Gen {
        #[command(subcommand)]
        what: GenCmd,
    },
    /// Exact optimum by branch and bound (small instances only).
    Oracle {
        /// Instance file.
        #[arg(long)]
        input: PathBuf,
        /// Optional path for the optimal solution JSON (also printed).
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Re-validate a solution file: tree structure and stored costs.
    Check {
        /// Instance file.
        #[arg(long)]
        input: PathBuf,
        /// Solution file produced by `solve` or `oracle`.
        #[arg(long)]
        solution: PathBuf,
    },
    /// Benchmark sweeps as CSV on stdout.
    Bench(BenchArgs),
    /// The approximation-factor table, rounded up at the fifth decimal.
    Factors,
}

#[derive(Clone, Copy, ValueEnum)]
enum BetaMethodArg {
    /// Initial tree: minimum spanning tree over root and terminals.
    Mst,
    /// Initial tree: exact minimum Steiner tree (dynamic programming).
    Exact,
}

#[derive(Clone, Copy, ValueEnum)]
enum SplitterArg {
    /// Cut when the expected reattachment cost fits the threshold budget.
    Improved,
    /// Cut purely on subtree weight.
    Baseline,
}

#[derive(Clone, Copy, ValueEnum)]
enum PortsArg {
    /// Reattach components only through terminals.
    Terminals,
    /// Allow Steiner points as ports.
    Any,
}

#[derive(Clone, Copy)]
struct MuArg(Option<f64>);

fn parse_mu(s: &str) -> Result<MuArg, String> {
    if s == "auto" {
        return Ok(MuArg(None));
    }
    match s.parse::<f64>() {
        Ok(v) if v.is_finite() && v > 0.0 => Ok(MuArg(Some(v))),
        _ => Err("expected `auto` or a positive number".to_string()),
    }
}

#[derive(Args)]
struct SolveArgs {
    /// Instance file.
    #[arg(long)]
    input: PathBuf,
    /// Optional initial tree (solution-format JSON: {"edges": [[u,v],...]});
    /// skips the built-in Steiner construction.
    #[arg(long)]
    initial: Option<PathBuf>,
    /// How the initial tree is built when --initial is not given.
    #[arg(long, value_enum, default_value_t = BetaMethodArg::Mst)]
    beta_method: BetaMethodArg,
    /// Splitting threshold: `auto` or a positive number.
    #[arg(long, default_value = "auto", value_parser = parse_mu)]
    mu: MuArg,
    #[arg(long, value_enum, default_value_t = SplitterArg::Improved)]
    splitter: SplitterArg,
    #[arg(long, value_enum, default_value_t = PortsArg::Terminals)]
    ports: PortsArg,
    /// Output solution file.
    #[arg(long)]
    output: PathBuf,
    /// Optional run report (bound checks, costs, stats) as JSON.
    #[arg(long)]
    report: Option<PathBuf>,
    /// Debug dump: per-node subtree summaries of the (normalized) initial
    /// tree, one JSON object per line.
    #[arg(long)]
    dump_aggregates: Option<PathBuf>,
}

#[derive(Subcommand)]
enum GenCmd {
    /// Lower-bound-gap family instance.
    Gap {
        /// Number of weighted star terminals.
        #[arg(long)]
        k: usize,
        /// Subdivision granularity of the root-hub path (length 2).
        #[arg(long)]
        delta: f64,
        /// Subdivision granularity of the hub-terminal paths (length 1/√2).
        #[arg(long)]
        delta_prime: f64,
        /// Output instance file.
        #[arg(long)]
        out: PathBuf,
    },
    /// Seeded random instance from a named family.
    Random {
        /// Requested terminal count (star-heavy treats this as a steer).
        #[arg(long)]
        terminals: usize,
        #[arg(long)]
        seed: u64,
        /// euclidean2d | random-graph | star-heavy
        #[arg(long)]
        family: String,
        /// Output instance file.
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Args)]
struct BenchArgs {
    /// Largest k of the gap-family sweep.
    #[arg(long, default_value_t = 16)]
    gap_max: usize,
    /// Seeds per random family.
    #[arg(long, default_value_t = 5)]
    seeds: u64,
    /// Measure split+reconnect wall time on synthetic trees of 10^4..10^6
    /// terminals instead of the instance sweep.
    #[arg(long)]
    scaling: bool,
}

fn log_enabled() -> bool {
    std::env::var_os("CDST_LOG").is_some_and(|v| !v.is_empty())
}

fn exit_for(err: &Error) -> u8 {
    match err {
        Error::Invariant(_) => 3,
        _ => 2,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_for(&e))
        }
    }
}

fn run(cli: Cli) -> cdst::Result<ExitCode> {
    match cli.cmd {
        Cmd::Solve(args) => run_solve(args),
        Cmd::Gen { what } => run_gen(what),
        Cmd::Oracle { input, output } => run_oracle(&input, output.as_deref()),
        Cmd::Check { input, solution } => run_check(&input, &solution),
        Cmd::Bench(args) => run_bench(args),
        Cmd::Factors => run_factors(),
    }
}

fn run_solve(args: SolveArgs) -> cdst::Result<ExitCode> {
    let instance = instances::read_instance(&args.input)?;
    let opts = SolveOptions {
        splitter: match args.splitter {
            SplitterArg::Improved => SplitRule::Refined,
            SplitterArg::Baseline => SplitRule::WeightThreshold,
        },
        mu_override: args.mu.0,
        ports_any: matches!(args.ports, PortsArg::Any),
    };

    let initial_edges = match &args.initial {
        Some(path) => Some(instances::read_solution(path, &instance)?.0.edges),
        None => None,
    };
    let (solution, report) = match &initial_edges {
        Some(edges) => cdst::solve_with_initial_tree(&instance, edges, &opts)?,
        None => {
            let beta = match args.beta_method {
                BetaMethodArg::Mst => BetaMethod::Mst,
                BetaMethodArg::Exact => BetaMethod::Exact,
            };
            cdst::solve(&instance, beta, &opts)?
        }
    };

    if let Some(path) = &args.dump_aggregates {
        dump_aggregates(path, &instance, &args, initial_edges.as_deref())?;
    }

    instances::write_solution(&args.output, &instance, &solution, &report.costs)?;
    if let Some(path) = &args.report {
        instances::write_report(path, &report)?;
    }
    if log_enabled() {
        eprintln!(
            "cdst: splitter={} beta={} mu={:?} ({}) shortcut={:?} total={:.9} bounds_ok={} visits={}+{}",
            report.splitter,
            report.beta_method,
            report.mu,
            report.mu_source,
            report.shortcut,
            report.costs.total,
            report.bounds_ok,
            report.stats.split_node_visits,
            report.stats.reconnect_node_visits,
        );
    }
    if !report.bounds_ok {
        return Err(Error::Invariant(format!(
            "cost bound violated: {}",
            report.violations.join("; ")
        )));
    }
    println!("total: {:.9}", report.costs.total);
    Ok(ExitCode::SUCCESS)
}

fn dump_aggregates(
    path: &PathBuf,
    instance: &Instance,
    args: &SolveArgs,
    given: Option<&[(usize, usize)]>,
) -> cdst::Result<()> {
    let edges = match given {
        Some(e) => e.to_vec(),
        None => match args.beta_method {
            BetaMethodArg::Mst => cdst::init::mst_steiner(instance)?,
            BetaMethodArg::Exact => cdst::init::exact_steiner(instance)?,
        },
    };
    let arb = cdst::init::binarize(instance, &edges)?;
    let agg = cdst::aggregates::compute_aggregates(&arb, arb.root());
    let mut out = String::new();
    for v in arb.post_order(arb.root()) {
        let node = arb.node(v);
        let a = &agg[v as usize];
        let line = serde_json::json!({
            "node": v,
            "point": instance.id(node.point as usize),
            "weight": a.weight,
            "direct_delay": a.direct_delay,
            "edge_cost": a.edge_cost,
            "cross_weight_cost": a.cross_weight_cost,
            "below_weight_cost": a.below_weight_cost,
        });
        out.push_str(&line.to_string());
        out.push('\n');
    }
    std::fs::write(path, out).map_err(|e| Error::Io {
        path: path.display().to_string(),
        source: e,
    })
}

fn run_gen(what: GenCmd) -> cdst::Result<ExitCode> {
    match what {
        GenCmd::Gap {
            k,
            delta,
            delta_prime,
            out,
        } => {
            let inst = instances::gen_gap(k, delta, delta_prime)?;
            instances::write_instance(&out, &inst)?;
            println!("wrote {} ({} points)", out.display(), inst.point_count());
        }
        GenCmd::Random {
            terminals,
            seed,
            family,
            out,
        } => {
            let inst = instances::gen_random(terminals, seed, &family)?;
            instances::write_instance(&out, &inst)?;
            println!("wrote {} ({} points)", out.display(), inst.point_count());
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn run_oracle(input: &PathBuf, output: Option<&std::path::Path>) -> cdst::Result<ExitCode> {
    let instance = instances::read_instance(input)?;
    let (solution, value) = oracle::brute_force_opt(&instance)?;
    let costs = cdst::evaluate_cost(&instance, &solution)?;
    if (costs.total - value).abs() > 1e-6 * (1.0 + value.abs()) {
        return Err(Error::Invariant(format!(
            "oracle value {value} disagrees with recomputed cost {}",
            costs.total
        )));
    }
    let doc = instances::solution_to_json(&instance, &solution, &costs);
    println!("{}", serde_json::to_string_pretty(&doc).unwrap_or_default());
    if let Some(path) = output {
        instances::write_solution(path, &instance, &solution, &costs)?;
    }
    Ok(ExitCode::SUCCESS)
}

fn run_check(input: &PathBuf, solution: &PathBuf) -> cdst::Result<ExitCode> {
    let instance = instances::read_instance(input)?;
    let (sol, stored) = match instances::read_solution(solution, &instance) {
        Ok(x) => x,
        Err(e) => {
            println!("check failed: {e}");
            return Ok(ExitCode::from(1));
        }
    };
    let recomputed = match cdst::evaluate_cost(&instance, &sol) {
        Ok(c) => c,
        Err(e) => {
            println!("check failed: solution is not a spanning tree: {e}");
            return Ok(ExitCode::from(1));
        }
    };
    let mut mismatches = Vec::new();
    if let Some(stored) = stored {
        for (name, got, want) in [
            ("connection", stored.connection, recomputed.connection),
            ("delay", stored.delay, recomputed.delay),
            ("total", stored.total, recomputed.total),
        ] {
            if (got - want).abs() > 1e-9 * (1.0 + want.abs()) {
                mismatches.push(format!("{name}: stored {got} != recomputed {want}"));
            }
        }
    }
    if mismatches.is_empty() {
        println!(
            "ok: tree spans all terminals; connection {:.9}, delay {:.9}, total {:.9}",
            recomputed.connection, recomputed.delay, recomputed.total
        );
        Ok(ExitCode::SUCCESS)
    } else {
        for m in &mismatches {
            println!("check failed: {m}");
        }
        Ok(ExitCode::from(1))
    }
}

fn csv_row(fields: &[String]) -> String {
    fields.join(",")
}

fn run_bench(args: BenchArgs) -> cdst::Result<ExitCode> {
    if args.scaling {
        return run_scaling();
    }
    println!(
        "instance,beta_method,splitter,mu,connection,delay,total,lower_bound,ratio,wall_micros,node_visits"
    );
    let mut rows: Vec<(String, Instance)> = Vec::new();
    for k in 1..=args.gap_max.max(1) {
        let kf = k as f64;
        rows.push((
            format!("gap-k{k}"),
            instances::gen_gap(k, 0.25 / kf, 0.5 / kf)?,
        ));
    }
    for family in ["euclidean2d", "random-graph", "star-heavy"] {
        for seed in 0..args.seeds {
            rows.push((
                format!("{family}-s{seed}"),
                instances::gen_random(8, seed, family)?,
            ));
        }
    }
    for (name, instance) in &rows {
        for (splitter, split_name) in [
            (SplitRule::Refined, "improved"),
            (SplitRule::WeightThreshold, "baseline"),
        ] {
            let opts = SolveOptions {
                splitter,
                mu_override: None,
                ports_any: false,
            };
            let (_, report) = cdst::solve(instance, BetaMethod::Mst, &opts)?;
            let fields = vec![
                name.clone(),
                report.beta_method.clone(),
                split_name.to_string(),
                report.mu.map(|m| format!("{m:.9}")).unwrap_or_default(),
                format!("{:.9}", report.costs.connection),
                format!("{:.9}", report.costs.delay),
                format!("{:.9}", report.costs.total),
                format!("{:.9}", report.lower_bound),
                report.ratio.map(|r| format!("{r:.9}")).unwrap_or_default(),
                report.stats.total_wall_micros.to_string(),
                (report.stats.split_node_visits + report.stats.reconnect_node_visits).to_string(),
            ];
            println!("{}", csv_row(&fields));
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn run_scaling() -> cdst::Result<ExitCode> {
    println!("terminals,split_micros,reconnect_micros,total_micros,split_visits,reconnect_visits");
    for n in [10_000usize, 100_000, 1_000_000] {
        let (instance, edges) = instances::gen_scaling_euclidean(n, 1)?;
        let opts = SolveOptions::default();
        let (_, report) = cdst::solve_with_initial_tree(&instance, &edges, &opts)?;
        let fields = vec![
            (n - 1).to_string(),
            report.stats.split_wall_micros.to_string(),
            report.stats.reconnect_wall_micros.to_string(),
            report.stats.total_wall_micros.to_string(),
            report.stats.split_node_visits.to_string(),
            report.stats.reconnect_node_visits.to_string(),
        ];
        println!("{}", csv_row(&fields));
    }
    Ok(ExitCode::SUCCESS)
}

fn run_factors() -> cdst::Result<ExitCode> {
    let betas: [(f64, &str); 4] = [
        (1.0, "1"),
        (4.0f64.ln(), "ln4"),
        (1.5, "1.5"),
        (2.0, "2"),
    ];
    let mut header = vec!["factor".to_string()];
    let mut baseline = vec!["weight-threshold".to_string()];
    let mut refined = vec!["refined".to_string()];
    for (beta, label) in betas {
        header.push(format!("beta_{label}"));
        baseline.push(format!("{:.5}", analysis::ceil5(analysis::baseline_factor(beta)?)));
        refined.push(format!("{:.5}", analysis::ceil5(analysis::approx_factor(beta)?)));
    }
    println!("{}", csv_row(&header));
    println!("{}", csv_row(&baseline));
    println!("{}", csv_row(&refined));
    Ok(ExitCode::SUCCESS)
}
