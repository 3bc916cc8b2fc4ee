//! `iqdp`: solve, sweep, simulate, and compare interactive quantization
//! strategies for distributed extremum computation, emitting JSON or CSV.

mod output;

use std::error::Error as StdError;
use std::fmt;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use iqdp_core::closed_form::{
    binary_search_delay_bound, binary_search_delay_recursive, binary_search_rate_closed,
    binary_search_rate_recursive, max_search_delay_closed, max_search_delay_recursive,
    max_search_rate_closed, max_search_rate_recursive,
};
use iqdp_core::sim::{SimConfig, SimPolicy, SimReport};
use iqdp_core::{
    compare_quantizer_costs, default_lambda_grid, gap_metrics, solve, Error as CoreError, Pmf,
    SearchSpace, Solution, SolveConfig, State, Target,
};

use output::{emit, fmt_sig, parse_lambdas, parse_quantizer, to_json_doc};

#[derive(Parser)]
#[command(
    name = "iqdp",
    version,
    about = "Interactive quantization rate/delay solver and simulator"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve one scalarized instance and print cost, expectations, and policy.
    Solve(SolveArgs),
    /// Trace the rate/delay frontier over a λ grid.
    Sweep(SweepArgs),
    /// Monte Carlo the round protocol under a chosen policy.
    Simulate(SimulateArgs),
    /// List the candidate quantizers of a search space.
    Family(FamilyArgs),
    /// Per-λ optimality gap of a candidate subset against partitions.
    Gap(GapArgs),
    /// Cost of two forced first-round quantizers, optimal play afterwards.
    Compare(CompareArgs),
    /// Analytical binary-search and max-search baselines, with self-check.
    Heuristics(HeuristicsArgs),
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum DistArg {
    Uniform,
    Geometric,
    Binomial,
}

#[derive(Clone, Copy, ValueEnum)]
enum TargetArg {
    Argmax,
    Max,
    Both,
}

impl From<TargetArg> for Target {
    fn from(t: TargetArg) -> Target {
        match t {
            TargetArg::Argmax => Target::Argmax,
            TargetArg::Max => Target::Max,
            TargetArg::Both => Target::Both,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum SpaceArg {
    Partitions,
    Compositions,
    ExtendedMaxSearch,
    BinaryPlusExtended,
}

impl From<SpaceArg> for SearchSpace {
    fn from(s: SpaceArg) -> SearchSpace {
        match s {
            SpaceArg::Partitions => SearchSpace::Partitions,
            SpaceArg::Compositions => SearchSpace::Compositions,
            SpaceArg::ExtendedMaxSearch => SearchSpace::ExtendedMaxSearch,
            SpaceArg::BinaryPlusExtended => SearchSpace::BinaryPlusExtended,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Json,
    Csv,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum PolicyArg {
    Dp,
    BinarySearch,
    MaxSearch,
}

#[derive(Args)]
struct SourceArgs {
    /// Source distribution of each user's value.
    #[arg(long, value_enum, default_value = "uniform")]
    dist: DistArg,
    /// Support size (values are 1..=L).
    #[arg(long = "L")]
    l: usize,
    /// Shape parameter for geometric/binomial sources.
    #[arg(long)]
    p: Option<f64>,
    /// Number of users.
    #[arg(long = "N")]
    n: usize,
}

impl SourceArgs {
    fn pmf(&self) -> Result<Pmf> {
        match self.dist {
            DistArg::Uniform => {
                if self.p.is_some() {
                    bail!("--p applies only to geometric and binomial sources");
                }
                Ok(Pmf::uniform(self.l)?)
            }
            DistArg::Geometric => {
                let p = self.p.context("--p is required for a geometric source")?;
                Ok(Pmf::truncated_geometric(self.l, p)?)
            }
            DistArg::Binomial => {
                let p = self.p.context("--p is required for a binomial source")?;
                Ok(Pmf::binomial(self.l, p)?)
            }
        }
    }

    fn root(&self) -> Result<State> {
        Ok(State::root(self.n, self.pmf()?)?)
    }
}

#[derive(Args)]
struct OutputArgs {
    /// Output encoding; each command has a natural default.
    #[arg(long, value_enum)]
    format: Option<FormatArg>,
    /// Output file (standard output when omitted).
    #[arg(long)]
    out: Option<PathBuf>,
}

impl OutputArgs {
    fn format_or(&self, default: FormatArg) -> FormatArg {
        self.format.unwrap_or(default)
    }
}

#[derive(Args)]
struct SolveArgs {
    #[command(flatten)]
    source: SourceArgs,
    #[arg(long, value_enum)]
    target: TargetArg,
    /// Trade-off weight in [0, 1]: 0 = pure rate, 1 = pure delay.
    #[arg(long)]
    lambda: f64,
    #[arg(long, value_enum, default_value = "partitions")]
    space: SpaceArg,
    /// Charge the center's per-round broadcast to the rate.
    #[arg(long)]
    feedback: bool,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    source: SourceArgs,
    #[arg(long, value_enum)]
    target: TargetArg,
    #[arg(long, value_enum, default_value = "partitions")]
    space: SpaceArg,
    #[arg(long)]
    feedback: bool,
    /// λ grid as lo:hi:step or a comma list (default 0:1:0.005).
    #[arg(long)]
    lambdas: Option<String>,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args)]
struct SimulateArgs {
    #[command(flatten)]
    source: SourceArgs,
    #[arg(long, value_enum)]
    target: TargetArg,
    /// Per-state quantizer source.
    #[arg(long, value_enum, default_value = "dp")]
    policy: PolicyArg,
    /// Trade-off weight for the dp policy.
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long, value_enum, default_value = "partitions")]
    space: SpaceArg,
    #[arg(long)]
    feedback: bool,
    #[arg(long, default_value_t = 10_000)]
    trials: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args)]
struct FamilyArgs {
    /// Support size whose candidates to list.
    #[arg(long = "L")]
    l: usize,
    #[arg(long, value_enum, default_value = "extended-max-search")]
    space: SpaceArg,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args)]
struct GapArgs {
    #[command(flatten)]
    source: SourceArgs,
    #[arg(long, value_enum, default_value = "max")]
    target: TargetArg,
    /// Restricted space measured against partitions.
    #[arg(long, value_enum, default_value = "extended-max-search")]
    subset: SpaceArg,
    #[arg(long)]
    lambdas: Option<String>,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args)]
struct CompareArgs {
    #[command(flatten)]
    source: SourceArgs,
    /// First forced root quantizer, e.g. 11,5.
    #[arg(long)]
    q1: String,
    /// Second forced root quantizer, e.g. 15,1.
    #[arg(long)]
    q2: String,
    #[arg(long, value_enum, default_value = "max")]
    target: TargetArg,
    #[arg(long)]
    lambdas: Option<String>,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args)]
struct HeuristicsArgs {
    /// User counts, comma separated.
    #[arg(long = "N", value_delimiter = ',')]
    n: Vec<usize>,
    /// Support sizes, comma separated (powers of two).
    #[arg(long = "L", value_delimiter = ',')]
    l: Vec<usize>,
    #[command(flatten)]
    output: OutputArgs,
}

/// Closed form and recursion disagreed; the numeric core cannot be trusted.
#[derive(Debug)]
struct SelfCheckMismatch(String);

impl fmt::Display for SelfCheckMismatch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "self-check failed: {}", self.0)
    }
}

impl StdError for SelfCheckMismatch {}

fn exit_code_for(err: &anyhow::Error) -> u8 {
    if err.downcast_ref::<SelfCheckMismatch>().is_some() {
        return 4;
    }
    if let Some(core) = err.downcast_ref::<CoreError>() {
        if matches!(core, CoreError::CapacityExceeded(_)) {
            return 3;
        }
    }
    2
}

fn init_thread_pool() -> Result<()> {
    if let Ok(raw) = std::env::var("IQDP_THREADS") {
        let threads: usize = raw
            .trim()
            .parse()
            .with_context(|| format!("IQDP_THREADS must be a non-negative integer, got {raw:?}"))?;
        if threads > 0 {
            rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build_global()
                .context("configuring the worker pool")?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let run = init_thread_pool().and_then(|()| match cli.command {
        Command::Solve(args) => cmd_solve(args),
        Command::Sweep(args) => cmd_sweep(args),
        Command::Simulate(args) => cmd_simulate(args),
        Command::Family(args) => cmd_family(args),
        Command::Gap(args) => cmd_gap(args),
        Command::Compare(args) => cmd_compare(args),
        Command::Heuristics(args) => cmd_heuristics(args),
    });
    match run {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(exit_code_for(&err))
        }
    }
}

#[derive(Serialize)]
struct KeyDoc {
    n: usize,
    lo: usize,
    hi: usize,
}

#[derive(Serialize)]
struct PolicyEntryDoc {
    state: KeyDoc,
    quantizer: Vec<usize>,
}

#[derive(Serialize)]
struct SolveDoc {
    lambda: f64,
    target: String,
    space: String,
    feedback: bool,
    cost: f64,
    expected_rate: f64,
    expected_delay: f64,
    states_evaluated: usize,
    policy: Vec<PolicyEntryDoc>,
}

fn solve_doc(
    sol: &Solution,
    lambda: f64,
    target: Target,
    space: &SearchSpace,
    feedback: bool,
) -> SolveDoc {
    let policy = sol
        .policy
        .actions
        .iter()
        .map(|(key, q)| PolicyEntryDoc {
            state: KeyDoc {
                n: key.n,
                lo: key.lo,
                hi: key.hi,
            },
            quantizer: q.bins().to_vec(),
        })
        .collect();
    SolveDoc {
        lambda,
        target: target.to_string(),
        space: space.label().to_string(),
        feedback,
        cost: sol.cost,
        expected_rate: sol.expected_rate,
        expected_delay: sol.expected_delay,
        states_evaluated: sol.states_evaluated,
        policy,
    }
}

fn cmd_solve(args: SolveArgs) -> Result<()> {
    let root = args.source.root()?;
    let space: SearchSpace = args.space.into();
    let target: Target = args.target.into();
    let sol = solve(
        &root,
        &SolveConfig {
            lambda: args.lambda,
            target,
            space: space.clone(),
            include_ceo_feedback: args.feedback,
        },
    )?;
    let doc = solve_doc(&sol, args.lambda, target, &space, args.feedback);
    let content = match args.output.format_or(FormatArg::Json) {
        FormatArg::Json => to_json_doc(&doc)?,
        FormatArg::Csv => {
            let mut csv = String::from(
                "lambda,target,space,feedback,cost,expected_rate,expected_delay,states_evaluated\n",
            );
            csv.push_str(&format!(
                "{},{},{},{},{},{},{},{}\n",
                args.lambda,
                doc.target,
                doc.space,
                doc.feedback,
                fmt_sig(doc.cost),
                fmt_sig(doc.expected_rate),
                fmt_sig(doc.expected_delay),
                doc.states_evaluated
            ));
            csv
        }
    };
    emit(&args.output.out, &content)
}

#[derive(Serialize)]
struct SweepDoc {
    target: String,
    space: String,
    feedback: bool,
    points: Vec<iqdp_core::SweepPoint>,
}

fn cmd_sweep(args: SweepArgs) -> Result<()> {
    let root = args.source.root()?;
    let space: SearchSpace = args.space.into();
    let target: Target = args.target.into();
    let grid = match &args.lambdas {
        Some(spec) => parse_lambdas(spec)?,
        None => default_lambda_grid(),
    };
    let points = iqdp_core::sweep_lambda(&root, target, &space, args.feedback, &grid)?;
    let content = match args.output.format_or(FormatArg::Csv) {
        FormatArg::Csv => {
            let mut csv = String::from("lambda,rate,delay,cost\n");
            for p in &points {
                csv.push_str(&format!(
                    "{},{},{},{}\n",
                    p.lambda,
                    fmt_sig(p.rate),
                    fmt_sig(p.delay),
                    fmt_sig(p.cost)
                ));
            }
            csv
        }
        FormatArg::Json => to_json_doc(&SweepDoc {
            target: target.to_string(),
            space: space.label().to_string(),
            feedback: args.feedback,
            points,
        })?,
    };
    emit(&args.output.out, &content)
}

#[derive(Serialize)]
struct SimDoc {
    target: String,
    policy: String,
    seed: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    lambda: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    space: Option<String>,
    #[serde(flatten)]
    report: SimReport,
}

fn cmd_simulate(args: SimulateArgs) -> Result<()> {
    let root = args.source.root()?;
    let target: Target = args.target.into();
    let space: SearchSpace = args.space.into();
    let (policy, policy_name, lambda, space_label) = match args.policy {
        PolicyArg::Dp => {
            let lambda = args
                .lambda
                .context("--lambda is required for the dp policy")?;
            let sol = solve(
                &root,
                &SolveConfig {
                    lambda,
                    target,
                    space: space.clone(),
                    include_ceo_feedback: args.feedback,
                },
            )?;
            (
                SimPolicy::Dp(sol.policy),
                "dp",
                Some(lambda),
                Some(space.label().to_string()),
            )
        }
        PolicyArg::BinarySearch => (SimPolicy::BinarySearch, "binary-search", None, None),
        PolicyArg::MaxSearch => (SimPolicy::MaxSearch, "max-search", None, None),
    };
    let report = iqdp_core::simulate(
        &root,
        target,
        &SimConfig {
            trials: args.trials,
            seed: args.seed,
            policy,
        },
    )?;
    let doc = SimDoc {
        target: target.to_string(),
        policy: policy_name.to_string(),
        seed: args.seed,
        lambda,
        space: space_label,
        report,
    };
    let content = match args.output.format_or(FormatArg::Json) {
        FormatArg::Json => to_json_doc(&doc)?,
        FormatArg::Csv => {
            let mut csv = String::from(
                "mean_rate,mean_delay,std_err_rate,std_err_delay,correctness,trials\n",
            );
            csv.push_str(&format!(
                "{},{},{},{},{},{}\n",
                fmt_sig(report.mean_rate),
                fmt_sig(report.mean_delay),
                fmt_sig(report.std_err_rate),
                fmt_sig(report.std_err_delay),
                report.correctness,
                report.trials
            ));
            csv
        }
    };
    emit(&args.output.out, &content)
}

#[derive(Serialize)]
struct FamilyDoc {
    space: String,
    l: usize,
    count: usize,
    quantizers: Vec<Vec<usize>>,
}

fn cmd_family(args: FamilyArgs) -> Result<()> {
    let space: SearchSpace = args.space.into();
    let quantizers = space.candidates(args.l)?;
    let content = match args.output.format_or(FormatArg::Json) {
        FormatArg::Json => to_json_doc(&FamilyDoc {
            space: space.label().to_string(),
            l: args.l,
            count: quantizers.len(),
            quantizers: quantizers.iter().map(|q| q.bins().to_vec()).collect(),
        })?,
        FormatArg::Csv => {
            let mut csv = String::from("index,k,bins\n");
            for (i, q) in quantizers.iter().enumerate() {
                let bins: Vec<String> = q.bins().iter().map(usize::to_string).collect();
                csv.push_str(&format!("{},{},{}\n", i, q.k(), bins.join("|")));
            }
            csv
        }
    };
    emit(&args.output.out, &content)
}

#[derive(Serialize)]
struct GapDoc {
    target: String,
    subset: String,
    delta_max: f64,
    delta_min: f64,
    points: Vec<iqdp_core::GapPoint>,
}

fn cmd_gap(args: GapArgs) -> Result<()> {
    let root = args.source.root()?;
    let target: Target = args.target.into();
    let subset: SearchSpace = args.subset.into();
    let grid = match &args.lambdas {
        Some(spec) => parse_lambdas(spec)?,
        None => default_lambda_grid(),
    };
    let report = gap_metrics(&root, target, &subset, &grid)?;
    let content = match args.output.format_or(FormatArg::Csv) {
        FormatArg::Csv => {
            let mut csv = String::from("lambda,delta_abs,delta_rel\n");
            for p in &report.points {
                csv.push_str(&format!(
                    "{},{},{}\n",
                    p.lambda,
                    fmt_sig(p.delta_abs),
                    fmt_sig(p.delta_rel)
                ));
            }
            csv.push_str(&format!(
                "# delta_max={} delta_min={}\n",
                fmt_sig(report.delta_max),
                fmt_sig(report.delta_min)
            ));
            csv
        }
        FormatArg::Json => to_json_doc(&GapDoc {
            target: target.to_string(),
            subset: subset.label().to_string(),
            delta_max: report.delta_max,
            delta_min: report.delta_min,
            points: report.points,
        })?,
    };
    emit(&args.output.out, &content)
}

#[derive(Serialize)]
struct ComparePoint {
    lambda: f64,
    cost_q1: f64,
    cost_q2: f64,
}

#[derive(Serialize)]
struct CompareDoc {
    target: String,
    q1: Vec<usize>,
    q2: Vec<usize>,
    points: Vec<ComparePoint>,
}

fn cmd_compare(args: CompareArgs) -> Result<()> {
    let root = args.source.root()?;
    let target: Target = args.target.into();
    let q1 = parse_quantizer(&args.q1)?;
    let q2 = parse_quantizer(&args.q2)?;
    let grid = match &args.lambdas {
        Some(spec) => parse_lambdas(spec)?,
        None => default_lambda_grid(),
    };
    let mut points = Vec::with_capacity(grid.len());
    for &lambda in &grid {
        let (cost_q1, cost_q2) = compare_quantizer_costs(&root, &q1, &q2, lambda, target)?;
        points.push(ComparePoint {
            lambda,
            cost_q1,
            cost_q2,
        });
    }
    let content = match args.output.format_or(FormatArg::Csv) {
        FormatArg::Csv => {
            let mut csv = String::from("lambda,cost_q1,cost_q2\n");
            for p in &points {
                csv.push_str(&format!(
                    "{},{},{}\n",
                    p.lambda,
                    fmt_sig(p.cost_q1),
                    fmt_sig(p.cost_q2)
                ));
            }
            csv
        }
        FormatArg::Json => to_json_doc(&CompareDoc {
            target: target.to_string(),
            q1: q1.bins().to_vec(),
            q2: q2.bins().to_vec(),
            points,
        })?,
    };
    emit(&args.output.out, &content)
}

#[derive(Serialize)]
struct HeuristicRow {
    n: usize,
    l: usize,
    rate_binary_closed: f64,
    rate_binary_recursion: f64,
    delay_binary_exact: f64,
    delay_binary_bound: f64,
    rate_max_closed: f64,
    rate_max_recursion: f64,
    delay_max_closed: f64,
    delay_max_recursion: f64,
}

fn cmd_heuristics(args: HeuristicsArgs) -> Result<()> {
    if args.n.is_empty() || args.l.is_empty() {
        bail!("--N and --L each need at least one value");
    }
    let mut rows = Vec::new();
    for &n in &args.n {
        for &l in &args.l {
            let row = HeuristicRow {
                n,
                l,
                rate_binary_closed: binary_search_rate_closed(n, l)?,
                rate_binary_recursion: binary_search_rate_recursive(n, l)?,
                delay_binary_exact: binary_search_delay_recursive(n, l)?,
                delay_binary_bound: binary_search_delay_bound(n, l)?,
                rate_max_closed: max_search_rate_closed(n, l)?,
                rate_max_recursion: max_search_rate_recursive(n, l)?,
                delay_max_closed: max_search_delay_closed(n, l)?,
                delay_max_recursion: max_search_delay_recursive(n, l)?,
            };
            let mut mismatches = Vec::new();
            if (row.rate_binary_closed - row.rate_binary_recursion).abs() > 1e-9 {
                mismatches.push("binary-search rate");
            }
            if row.delay_binary_exact > row.delay_binary_bound + 1e-12 {
                mismatches.push("binary-search delay bound");
            }
            if (row.rate_max_closed - row.rate_max_recursion).abs() > 1e-9 {
                mismatches.push("max-search rate");
            }
            if (row.delay_max_closed - row.delay_max_recursion).abs() > 1e-9 {
                mismatches.push("max-search delay");
            }
            if !mismatches.is_empty() {
                return Err(
                    SelfCheckMismatch(format!("N={n} L={l}: {}", mismatches.join(", "))).into(),
                );
            }
            rows.push(row);
        }
    }
    let content = match args.output.format_or(FormatArg::Csv) {
        FormatArg::Csv => {
            let mut csv = String::from(
                "n,l,rate_binary_closed,rate_binary_recursion,delay_binary_exact,delay_binary_bound,rate_max_closed,rate_max_recursion,delay_max_closed,delay_max_recursion\n",
            );
            for r in &rows {
                csv.push_str(&format!(
                    "{},{},{},{},{},{},{},{},{},{}\n",
                    r.n,
                    r.l,
                    fmt_sig(r.rate_binary_closed),
                    fmt_sig(r.rate_binary_recursion),
                    fmt_sig(r.delay_binary_exact),
                    fmt_sig(r.delay_binary_bound),
                    fmt_sig(r.rate_max_closed),
                    fmt_sig(r.rate_max_recursion),
                    fmt_sig(r.delay_max_closed),
                    fmt_sig(r.delay_max_recursion)
                ));
            }
            csv
        }
        FormatArg::Json => to_json_doc(&rows)?,
    };
    emit(&args.output.out, &content)
}
