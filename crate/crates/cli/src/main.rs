use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use gsleepy::conditions::{
    self, check_general, check_m3, parse_rational, recommended_params, ConditionReport, Params, ScanGrid,
};
use gsleepy::instances::{self, gen_case1, gen_case2, gen_one_one_two, gen_random, ProcDistribution, RandomSpec};
use gsleepy::metrics::{self, check_leftover, check_waste_bound, extract_chain, interval_report};
use gsleepy::opt::{exact_opt, DEFAULT_NODE_BUDGET};
use gsleepy::policies;
use gsleepy::stress::{run_stress, StressConfig, TrialRow};
use gsleepy::{simulate, Error, Instance, PolicyParams, ScheduleTrace};

const EXIT_PARSE: u8 = 2;
const EXIT_SEMANTIC: u8 = 3;

#[derive(Parser)]
#[command(
    name = "gsleepy",
    version,
    about = "Online makespan scheduling with locking: simulate, solve, stress and analyze"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate an instance file
    Gen(GenArgs),
    /// Simulate a policy on an instance
    Run(RunArgs),
    /// Solve the offline optimum of an instance
    Opt(OptArgs),
    /// Compare policies against the optimum on a seeded instance pool
    Stress(StressArgs),
    /// Locking chain, critical jobs and efficiency metrics of a trace
    Analyze(AnalyzeArgs),
    /// Check the parameter conditions in exact arithmetic
    Conditions(ConditionsArgs),
    /// Emit delimited data for plotting
    Plotdata(PlotArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Family {
    OneOneTwo,
    Case1,
    Case2,
    Random,
}

#[derive(Clone, Copy, ValueEnum)]
enum Dist {
    Uniform,
    Geometric,
    TwoClass,
}

#[derive(Args)]
struct GenArgs {
    #[arg(value_enum)]
    family: Family,
    #[arg(long, default_value_t = 2)]
    m: usize,
    #[arg(long, default_value_t = instances::DEFAULT_EPS)]
    eps: f64,
    /// Locking parameter the case 2 sizes are built for
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 8)]
    n: usize,
    #[arg(long, default_value_t = 1.0)]
    span: f64,
    #[arg(long, value_enum, default_value_t = Dist::Uniform)]
    dist: Dist,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct PolicyArgs {
    /// lpt, sleepy2, gsleepy-static or gsleepy-dynamic
    #[arg(long)]
    policy: Option<String>,
    /// Explicit locking parameter (overrides the named policy)
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    lambda: Option<f64>,
}

impl PolicyArgs {
    fn resolve(&self, m: usize) -> Result<PolicyParams> {
        let base = match &self.policy {
            Some(name) => policies::by_name(name, m)?,
            None if self.alpha.is_some() => policies::lpt(),
            None => policies::gsleepy(m, true)?,
        };
        let params =
            PolicyParams { alpha: self.alpha.unwrap_or(base.alpha), lambda: self.lambda.unwrap_or(base.lambda) };
        params.validate()?;
        Ok(params)
    }
}

#[derive(Args)]
struct RunArgs {
    instance: PathBuf,
    #[command(flatten)]
    policy: PolicyArgs,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct OptArgs {
    instance: PathBuf,
    #[arg(long, default_value_t = DEFAULT_NODE_BUDGET)]
    node_budget: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct StressArgs {
    /// Policies to compare, comma separated
    #[arg(long, value_delimiter = ',', default_values_t = [String::from("gsleepy-dynamic")])]
    policy: Vec<String>,
    #[arg(long, default_value_t = 3)]
    m: usize,
    /// Largest instance size in the pool
    #[arg(long, default_value_t = 8)]
    n: usize,
    #[arg(long, default_value_t = 1000)]
    trials: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = DEFAULT_NODE_BUDGET)]
    node_budget: u64,
    #[arg(long, default_value_t = instances::DEFAULT_EPS)]
    eps: f64,
    /// Compare against the lower bound instead of the exact optimum
    #[arg(long)]
    lower_bound_only: bool,
    /// Per-trial log (CSV)
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct AnalyzeArgs {
    trace: PathBuf,
    /// Instance the trace must belong to
    #[arg(long)]
    instance: Option<PathBuf>,
    /// Optimal trace for the left-over check
    #[arg(long)]
    opt_trace: Option<PathBuf>,
    #[arg(long)]
    gamma: Option<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ConditionsArgs {
    #[arg(long, default_value_t = 4)]
    m: u64,
    /// Exact rational ("p/q" or decimal); defaults to the recommended value
    #[arg(long)]
    alpha: Option<String>,
    #[arg(long)]
    gamma: Option<String>,
    /// Scan the three-machine feasibility region instead
    #[arg(long)]
    scan: bool,
    #[command(flatten)]
    grid: GridArgs,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct GridArgs {
    /// lo:hi
    #[arg(long, default_value = "0:0.1")]
    alpha_range: String,
    /// lo:hi
    #[arg(long, default_value = "0.45:0.5")]
    gamma_range: String,
    #[arg(long, default_value_t = 50)]
    steps: u32,
}

#[derive(Clone, Copy, ValueEnum)]
enum Curve {
    #[value(name = "f_case2")]
    FCase2,
}

#[derive(Args)]
struct PlotArgs {
    #[arg(long, value_enum, conflicts_with = "scan_m3")]
    curve: Option<Curve>,
    /// start:end:step
    #[arg(long, default_value = "0:0.1:1e-4")]
    range: String,
    /// Machine count for the 1/(2(m-1)) marker
    #[arg(long, default_value_t = 6)]
    m: usize,
    #[arg(long)]
    scan_m3: bool,
    #[command(flatten)]
    grid: GridArgs,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::Parse(format!("cannot read {}: {e}", path.display())).into())
}

fn read_instance(path: &Path) -> Result<Instance> {
    Instance::from_json(&read(path)?).with_context(|| format!("instance file {}", path.display()))
}

/// Writes `text` to `out`, or to stdout when no path is given.
fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(path) => fs::write(path, text).with_context(|| format!("writing {}", path.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn cmd_gen(args: &GenArgs) -> Result<()> {
    let inst = match args.family {
        Family::OneOneTwo => gen_one_one_two(args.m, args.eps)?,
        Family::Case1 => gen_case1(args.m)?,
        Family::Case2 => {
            let alpha = args.alpha.unwrap_or(1.0 / (2.0 * (args.m as f64 - 1.0)));
            gen_case2(args.m, alpha, args.eps)?
        }
        Family::Random => {
            let proc = match args.dist {
                Dist::Uniform => ProcDistribution::Uniform { lo: 0.1, hi: 1.0 },
                Dist::Geometric => ProcDistribution::Geometric { ratio: 0.5 },
                Dist::TwoClass => ProcDistribution::TwoClass { small: 1.0, large: 2.0, fraction: 0.3 },
            };
            gen_random(&RandomSpec { seed: args.seed, n: args.n, m: args.m, release_span: args.span, proc })?
        }
    };
    emit(args.out.as_deref(), &(inst.to_json() + "\n"))
}

fn cmd_run(args: &RunArgs) -> Result<()> {
    let inst = read_instance(&args.instance)?;
    let params = args.policy.resolve(inst.m)?;
    let trace = simulate(&inst, &params)?;
    if let Some(out) = &args.out {
        fs::write(out, trace.to_json() + "\n").with_context(|| format!("writing {}", out.display()))?;
    }
    println!(
        "makespan={} alpha={} lambda={} jobs={} m={}",
        trace.makespan,
        params.alpha,
        params.lambda,
        inst.n(),
        inst.m
    );
    Ok(())
}

fn cmd_opt(args: &OptArgs) -> Result<()> {
    let inst = read_instance(&args.instance)?;
    let result = exact_opt(&inst, args.node_budget)?;
    if let (Some(out), Some(trace)) = (&args.out, &result.trace) {
        fs::write(out, trace.to_json() + "\n").with_context(|| format!("writing {}", out.display()))?;
    }
    let label = if result.exact { "opt" } else { "lower_bound" };
    println!(
        "{label}={} upper_bound={} exact={} nodes={}",
        result.value, result.upper_bound, result.exact, result.nodes_explored
    );
    Ok(())
}

fn cmd_stress(args: &StressArgs) -> Result<()> {
    let policies = args
        .policy
        .iter()
        .map(|name| Ok((name.clone(), policies::by_name(name, args.m)?)))
        .collect::<Result<Vec<_>>>()?;
    let report = run_stress(&StressConfig {
        policies,
        m: args.m,
        n_max: args.n,
        trials: args.trials,
        seed: args.seed,
        node_budget: args.node_budget,
        eps: args.eps,
        lower_bound_only: args.lower_bound_only,
    })?;
    if let Some(out) = &args.out {
        let mut log = String::from(TrialRow::CSV_HEADER);
        log.push('\n');
        for row in &report.rows {
            log.push_str(&row.csv_line());
            log.push('\n');
        }
        fs::write(out, log).with_context(|| format!("writing {}", out.display()))?;
    }
    println!("trials={} certified={} worst_ratio={}", report.trials, report.certified_count, report.worst_ratio);
    for s in &report.per_policy {
        let uncertified = s.worst_uncertified.map_or(String::from("-"), |w| w.to_string());
        let trial = s.worst_trial.map_or(String::from("-"), |t| t.to_string());
        println!(
            "policy={} certified={}/{} worst_ratio={} worst_trial={trial} worst_ratio_upper_bound={uncertified}",
            s.policy, s.certified_count, s.trials, s.worst_ratio
        );
    }
    if let Some(inst) = &report.worst_instance {
        println!("worst_instance={}", serde_json::to_string(inst)?);
    }
    Ok(())
}

fn ids(v: &[gsleepy::JobId]) -> String {
    v.iter().map(|id| id.to_string()).collect::<Vec<_>>().join(",")
}

fn cmd_analyze(args: &AnalyzeArgs) -> Result<()> {
    let instance = args.instance.as_deref().map(read_instance).transpose()?;
    let trace = ScheduleTrace::from_json(&read(&args.trace)?, instance.as_ref())?;
    let gamma = match args.gamma {
        Some(g) => g,
        None => policies::target_gamma(trace.m())?,
    };
    let mut out = String::new();
    writeln!(out, "makespan={}", trace.makespan)?;
    if let Some(chain) = extract_chain(&trace, gamma) {
        writeln!(out, "chain={} k={}", ids(&chain.chain), chain.k())?;
        let gaps: Vec<String> = chain.link_gaps.iter().map(|g| g.to_string()).collect();
        writeln!(out, "link_gaps={} links_ok={}", gaps.join(","), chain.links_ok())?;
        writeln!(
            out,
            "chain_alpha_max={} gamma={} gamma_prime={}",
            chain.chain_alpha_max, chain.gamma, chain.gamma_prime
        )?;
        writeln!(out, "critical_jobs={}", ids(&chain.critical_jobs))?;
        writeln!(out, "early={} late={}", ids(&chain.early), ids(&chain.late))?;
        writeln!(out, "theta_plus={}", chain.theta_plus)?;
    }
    let report = interval_report(&trace, 0.0, trace.makespan)?;
    writeln!(
        out,
        "interval=[0,{}) busy_work={} waste={} extended_work={}",
        report.t2, report.busy_work, report.waste, report.extended_work
    )?;
    let bound = check_waste_bound(&trace, 0.0, trace.makespan)?;
    writeln!(out, "waste_bound lhs={} rhs={} ok={}", bound.lhs, bound.rhs, bound.ok)?;
    let idle = metrics::idle_during_delay(&trace);
    writeln!(out, "idle_during_delay={}", idle.len())?;
    if let Some(path) = &args.opt_trace {
        let opt = ScheduleTrace::from_json(&read(path)?, Some(&trace.instance))?;
        let horizon = trace.makespan.max(opt.makespan);
        let left = check_leftover(&trace, &opt, horizon)?;
        let tight = left.tightest().map_or(String::from("-"), |c| format!("t={} lhs={} rhs={}", c.t2, c.lhs, c.rhs));
        writeln!(out, "leftover points={} ok={} tightest {tight}", left.checks.len(), left.ok)?;
        let diag = metrics::diagnose_counterexample(&trace, opt.makespan, gamma);
        writeln!(out, "diagnostics: {}", diag.summary())?;
    }
    emit(args.out.as_deref(), &out)
}

fn parse_pair(text: &str) -> Result<(conditions::Rational, conditions::Rational)> {
    let (a, b) = text.split_once(':').ok_or_else(|| Error::Parse(format!("expected lo:hi, got `{text}`")))?;
    Ok((parse_rational(a)?, parse_rational(b)?))
}

fn scan_csv(grid: &GridArgs) -> Result<String> {
    let rows = conditions::scan_m3_region(&ScanGrid {
        alpha_range: parse_pair(&grid.alpha_range)?,
        gamma_range: parse_pair(&grid.gamma_range)?,
        alpha_steps: grid.steps,
        gamma_steps: grid.steps,
    })?;
    let mut out = String::new();
    if let Some(first) = rows.first() {
        writeln!(out, "{}", first.csv_header())?;
    }
    for row in &rows {
        writeln!(out, "{}", row.csv_line())?;
    }
    Ok(out)
}

fn format_report(report: &ConditionReport) -> Result<String> {
    let mut out = String::from("id,relation,satisfied,margin,margin_approx,note\n");
    for r in &report.results {
        let relation = serde_json::to_value(r.relation)?;
        let id = if r.informational { format!("{} (info)", r.id) } else { r.id.clone() };
        writeln!(
            out,
            "{id},{},{},{},{:e},{}",
            relation.as_str().unwrap_or_default(),
            r.satisfied,
            r.margin,
            conditions::to_f64(&r.margin),
            r.note.as_deref().unwrap_or("")
        )?;
    }
    let failed: Vec<&str> = report.failures().map(|r| r.id.as_str()).collect();
    if failed.is_empty() {
        writeln!(out, "summary: all conditions satisfied")?;
    } else {
        writeln!(out, "summary: violated {}", failed.join(", "))?;
    }
    Ok(out)
}

fn cmd_conditions(args: &ConditionsArgs) -> Result<()> {
    if args.scan {
        return emit(args.out.as_deref(), &scan_csv(&args.grid)?);
    }
    if args.m == 2 && (args.alpha.is_none() || args.gamma.is_none()) {
        bail!(Error::InvalidArgument("the conditions do not apply to two machines".into()));
    }
    let recommended = recommended_params(args.m)?;
    let default = recommended.feasibility.or(recommended.params);
    let alpha = match &args.alpha {
        Some(text) => parse_rational(text)?,
        None => default.as_ref().map(|p| p.alpha.clone()).ok_or_else(|| anyhow!("no default alpha"))?,
    };
    let gamma = match &args.gamma {
        Some(text) => parse_rational(text)?,
        None => default.as_ref().map(|p| p.gamma.clone()).ok_or_else(|| anyhow!("no default gamma"))?,
    };
    let report = if args.m == 3 {
        check_m3(&alpha, &gamma)
    } else {
        check_general(&Params::new(args.m, alpha.clone(), gamma.clone())?)
    };
    let header = format!("m={} alpha={alpha} gamma={gamma}\n", args.m);
    emit(args.out.as_deref(), &(header + &format_report(&report)?))
}

fn parse_range(text: &str) -> Result<(f64, f64, f64)> {
    let bad = || Error::Parse(format!("expected start:end:step, got `{text}`"));
    let parts: Vec<f64> =
        text.split(':').map(|p| p.trim().parse::<f64>()).collect::<std::result::Result<_, _>>().map_err(|_| bad())?;
    match parts[..] {
        [start, end, step] if step > 0.0 && end >= start && start.is_finite() && end.is_finite() => {
            Ok((start, end, step))
        }
        _ => Err(bad().into()),
    }
}

fn cmd_plotdata(args: &PlotArgs) -> Result<()> {
    if args.scan_m3 {
        return emit(args.out.as_deref(), &scan_csv(&args.grid)?);
    }
    let Some(Curve::FCase2) = args.curve else {
        bail!(Error::Parse("plotdata needs --curve or --scan-m3".into()));
    };
    let (start, end, step) = parse_range(&args.range)?;
    if args.m < 2 {
        bail!(Error::InvalidArgument("marker needs m >= 2".into()));
    }
    let marker = 1.0 / (2.0 * (args.m as f64 - 1.0));
    let count = ((end - start) / step + 1e-9).floor() as u64;
    let mut out = String::from("alpha,f,reference,marker\n");
    for i in 0..=count {
        let alpha = start + i as f64 * step;
        writeln!(out, "{alpha},{},1.5,{marker}", instances::f_case2(alpha))?;
    }
    emit(args.out.as_deref(), &out)
}

fn exit_code(err: &anyhow::Error) -> u8 {
    match err.downcast_ref::<Error>() {
        Some(Error::Parse(_) | Error::Json(_)) => EXIT_PARSE,
        _ => EXIT_SEMANTIC,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Gen(a) => cmd_gen(a),
        Command::Run(a) => cmd_run(a),
        Command::Opt(a) => cmd_opt(a),
        Command::Stress(a) => cmd_stress(a),
        Command::Analyze(a) => cmd_analyze(a),
        Command::Conditions(a) => cmd_conditions(a),
        Command::Plotdata(a) => cmd_plotdata(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(exit_code(&err))
        }
    }
}
