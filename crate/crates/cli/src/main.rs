//! `fewsums` — command-line harness over the exact subset-sum toolkit.
//!
//! Exit codes: 0 success; 1 a verified hypothesis failed (refutations,
//! violations found by a verifier); 2 a search or pipeline budget was
//! exhausted; 3 usage, parse, or validation errors.

mod input;
mod report;

use std::fs::OpenOptions;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use num_traits::{One, Signed, ToPrimitive};
use serde_json::{json, Value};

use fewsums::fs::{fs_set, fs_set_points, incremental_trace, FsConfig};
use fewsums::gap::{clean, fiber_affine_dim, fiber_count_exact, fiber_points, fiber_upper_bounds};
use fewsums::linear::{equivalence_scan, one_step_growth, triangular};
use fewsums::pipeline::{decompose, PipelineConfig};
use fewsums::scalar::rat;
use fewsums::stability::{fd_search, stability_certificate};
use fewsums::{Int, Rat, Scalar, ScalarSet};

use input::{parse_gap, parse_input, parse_slice, read_file, CliError, CliResult, ParsedInput};
use report::{registry_append, sha_hex, Report, RunRecord};

#[derive(Parser)]
#[command(
    name = "fewsums",
    version,
    about = "Exact computations on subset-sum sets: counts, inverse theorems, extremal searches, and progression-cover decompositions"
)]
struct Cli {
    /// Write the JSON report to this file instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Append a run record to this line-delimited JSON registry.
    #[arg(long, global = true)]
    registry: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Subset-sum set computations.
    #[command(subcommand)]
    Fs(FsCmd),
    /// Desk-scale exhaustive verification of the structure theorems.
    #[command(subcommand)]
    Verify(VerifyCmd),
    /// Extremal configuration searches.
    #[command(subcommand)]
    Search(SearchCmd),
    /// Polynomial-growth certificates.
    #[command(subcommand)]
    Certify(CertifyCmd),
    /// Symmetric progression (GAP) tools.
    #[command(subcommand)]
    Gap(GapCmd),
    /// Decompose a few-sums set into dilated integers plus a small rest.
    Decompose(DecomposeArgs),
}

#[derive(Subcommand)]
enum FsCmd {
    /// Compute FS(A) and its summary statistics.
    Compute(FsComputeArgs),
}

#[derive(Args)]
struct FsComputeArgs {
    /// Set file (rational, integer-vector, or formal domain).
    #[arg(long)]
    input: PathBuf,
    /// Also report the ascending-prefix growth trace (positive scalar sets).
    #[arg(long)]
    trace: bool,
}

#[derive(Subcommand)]
enum VerifyCmd {
    /// Few-sums ⇔ structured equivalence over all primitive n-tuples.
    Linear(VerifyLinearArgs),
    /// One-step growth bound and its equality characterisation.
    Growth(VerifyGrowthArgs),
}

#[derive(Args)]
struct VerifyLinearArgs {
    /// Set size.
    #[arg(long)]
    n: usize,
    /// Slack budget M.
    #[arg(long = "M")]
    m_budget: u64,
    /// Largest element sum to enumerate.
    #[arg(long)]
    cap: u64,
}

#[derive(Args)]
struct VerifyGrowthArgs {
    /// Size of the base set B.
    #[arg(long)]
    m: usize,
    /// Check every B ⊂ [1, x−1] of size m for every x up to this value.
    #[arg(long = "x-max")]
    x_max: u64,
}

#[derive(Subcommand)]
enum SearchCmd {
    /// Grid minimum of |FS| over bounded-concentration configurations.
    Fd(SearchFdArgs),
}

#[derive(Args)]
struct SearchFdArgs {
    /// Ambient dimension.
    #[arg(long)]
    d: usize,
    /// Number of points.
    #[arg(long)]
    n: usize,
    /// Maximum points allowed in a proper linear subspace.
    #[arg(long)]
    m: u64,
    /// Coordinate radius N of the search grid.
    #[arg(long)]
    grid: i64,
    /// Maximum configurations evaluated per shard.
    #[arg(long, default_value_t = 1 << 40)]
    budget: u64,
    /// Recorded for provenance; the canonical order makes runs seed-independent.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Worker threads for the sharded search.
    #[arg(long)]
    jobs: Option<usize>,
    /// Append one CSV row (d,n,m,value,exhaustive,witness) to this file.
    #[arg(long)]
    csv: Option<PathBuf>,
}

#[derive(Subcommand)]
enum CertifyCmd {
    /// Explicit γ·n^{d+1} lower-bound certificate for |FS|.
    Stability(CertifyStabilityArgs),
}

#[derive(Args)]
struct CertifyStabilityArgs {
    /// Ambient dimension.
    #[arg(long)]
    d: usize,
    /// Concentration parameter (the certified class allows ⌈(1−eps)n⌉
    /// points per proper subspace).
    #[arg(long)]
    eps: String,
    /// Set size the bound is evaluated at.
    #[arg(long)]
    n: u64,
}

#[derive(Subcommand)]
enum GapCmd {
    /// Properness, rank, and box volume of a progression.
    Check(GapFileArgs),
    /// Iterative hyperplane cleaning of values covered by a progression.
    Clean(GapFileArgs),
    /// Exact fiber count and upper bounds for a sliced box.
    Fiber(GapFileArgs),
}

#[derive(Args)]
struct GapFileArgs {
    #[arg(long)]
    input: PathBuf,
}

#[derive(Args)]
struct DecomposeArgs {
    /// Set file (rational or formal domain).
    #[arg(long)]
    input: PathBuf,
    /// Few-sums budget: the hypothesis is |FS(A)| ≤ C·n².
    #[arg(long = "C")]
    c: String,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 3 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let started = Instant::now();
    let out = cli.out.clone();
    let registry = cli.registry.clone();
    match dispatch(cli.command) {
        Ok(run) => match emit(&run, &out, &registry, started) {
            Ok(()) => ExitCode::from(run.exit),
            Err(e) => {
                eprintln!("error: {e}");
                ExitCode::from(e.exit_code)
            }
        },
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code)
        }
    }
}

struct RunOutput {
    report: Report,
    /// Content hash of the input file, or of the parameters when the
    /// command takes no input file.
    input_digest: Option<String>,
    seed: u64,
    exit: u8,
}

fn dispatch(command: Command) -> CliResult<RunOutput> {
    match command {
        Command::Fs(FsCmd::Compute(args)) => fs_compute(args),
        Command::Verify(VerifyCmd::Linear(args)) => verify_linear(args),
        Command::Verify(VerifyCmd::Growth(args)) => verify_growth(args),
        Command::Search(SearchCmd::Fd(args)) => search_fd(args),
        Command::Certify(CertifyCmd::Stability(args)) => certify_stability(args),
        Command::Gap(GapCmd::Check(args)) => gap_check(args),
        Command::Gap(GapCmd::Clean(args)) => gap_clean(args),
        Command::Gap(GapCmd::Fiber(args)) => gap_fiber(args),
        Command::Decompose(args) => run_decompose(args),
    }
}

fn emit(
    run: &RunOutput,
    out: &Option<PathBuf>,
    registry: &Option<PathBuf>,
    started: Instant,
) -> CliResult<()> {
    let mut rendered = serde_json::to_string_pretty(&run.report)
        .map_err(|e| CliError::usage(format!("cannot serialize report: {e}")))?;
    rendered.push('\n');
    match out {
        Some(path) => std::fs::write(path, rendered.as_bytes())
            .map_err(|e| CliError::usage(format!("cannot write {}: {e}", path.display())))?,
        None => {
            // A closed pipe downstream (e.g. `fewsums … | head`) is not an error.
            if let Err(e) = std::io::stdout().write_all(rendered.as_bytes()) {
                if e.kind() != std::io::ErrorKind::BrokenPipe {
                    return Err(CliError::usage(format!("cannot write report: {e}")));
                }
            }
        }
    }
    if let Some(path) = registry {
        let digest = run.input_digest.clone().unwrap_or_else(|| {
            sha_hex(Value::Object(run.report.params.clone()).to_string().as_bytes())
        });
        let record = RunRecord::new(&run.report, digest, run.seed, started.elapsed(), run.exit);
        registry_append(path, &record)?;
    }
    Ok(())
}

fn scalar_strings(set: &ScalarSet) -> Vec<String> {
    set.iter().map(|s| s.to_string()).collect()
}

fn rat_str(r: &Rat) -> String {
    r.to_string()
}

fn parse_rat_arg(s: &str, what: &str) -> CliResult<Rat> {
    match Scalar::parse_rational(s) {
        Ok(Scalar::Rational(r)) => Ok(r),
        _ => Err(CliError::usage(format!("--{what}: not a rational number: {s:?}"))),
    }
}

fn fs_compute(args: FsComputeArgs) -> CliResult<RunOutput> {
    let digest = sha_hex(read_file(&args.input)?.as_bytes());
    let mut report = Report::new("fs compute");
    report
        .param("input", args.input.display().to_string())
        .param("trace", args.trace);
    let cfg = FsConfig::default();
    match parse_input(&args.input)? {
        ParsedInput::Scalars(a) => {
            let n = a.len();
            let fs = fs_set(&a, &cfg)?;
            let mut results = json!({
                "fs_size": fs.len(),
                "source_size": n,
                "dense_representation": fs.is_dense(),
                "min": fs.min_value()?.map(|s| s.to_string()),
                "max": fs.max_value()?.map(|s| s.to_string()),
            });
            if args.trace {
                let trace = incremental_trace(&a, &cfg)?;
                results["trace"] = json!({
                    "order": trace.order.iter().map(|s| s.to_string()).collect::<Vec<_>>(),
                    "z": trace.z,
                    "y": trace.y,
                });
            }
            let n_sq = Rat::new(Int::from(fs.len()), Int::from((n.max(1) * n.max(1)) as u64));
            report.results = results;
            report.realized_constants = json!({ "fs_over_n_squared": rat_str(&n_sq) });
            report.checks = if a.all_positive()? {
                json!({ "at_least_n_plus_1": fs.len() > n as u64 })
            } else {
                json!({})
            };
        }
        ParsedInput::Points(p) => {
            if args.trace {
                return Err(CliError::usage("--trace needs a scalar set, not lattice points"));
            }
            let fs = fs_set_points(&p, &cfg)?;
            report.results = json!({
                "fs_size": fs.len(),
                "source_size": p.len(),
                "dim": p.dim(),
            });
        }
    }
    Ok(RunOutput { report, input_digest: Some(digest), seed: 0, exit: 0 })
}

fn verify_linear(args: VerifyLinearArgs) -> CliResult<RunOutput> {
    let scan = equivalence_scan(args.n, args.m_budget, args.cap)?;
    let mut report = Report::new("verify linear");
    report
        .param("n", args.n)
        .param("M", args.m_budget)
        .param("cap", args.cap);
    report.results = json!({
        "instances": scan.instances,
        "violations": scan.violations,
    });
    report.realized_constants = json!({
        "minimum_fs_bound": triangular(args.n as u64) + 1 + args.m_budget,
    });
    let all_equivalent = scan.all_equivalent();
    report.checks = json!({
        "all_equivalent": all_equivalent,
        "within_guarantee": args.m_budget + 4 <= args.n as u64,
    });
    let exit = if all_equivalent { 0 } else { 1 };
    Ok(RunOutput { report, input_digest: None, seed: 0, exit })
}

fn verify_growth(args: VerifyGrowthArgs) -> CliResult<RunOutput> {
    let m = args.m;
    if m == 0 || args.x_max <= m as u64 {
        return Err(CliError::usage("verify growth needs m ≥ 1 and x-max > m"));
    }
    // Instance count is C(x_max, m+1); refuse clearly infeasible sweeps.
    let mut total = Int::one();
    for i in 0..=m as u64 {
        total = total * Int::from(args.x_max - i) / Int::from(i + 1);
    }
    if total > Int::from(5_000_000u64) {
        return Err(CliError {
            message: format!("sweep of {total} instances exceeds the built-in budget of 5000000"),
            exit_code: 2,
        });
    }
    let cfg = FsConfig::default();
    let mut instances = 0u64;
    let mut violations: Vec<Value> = Vec::new();
    let mut choose = vec![0i64; m];
    fn descend(
        lo: i64,
        x: i64,
        slot: usize,
        choose: &mut Vec<i64>,
        cfg: &FsConfig,
        instances: &mut u64,
        violations: &mut Vec<Value>,
    ) -> CliResult<()> {
        let m = choose.len();
        if slot == m {
            let b = ScalarSet::from_ints(choose)?;
            let rep = one_step_growth(&b, &Scalar::from_int(x), cfg)?;
            *instances += 1;
            if !rep.confirmed && violations.len() < 64 {
                violations.push(json!({ "b": choose.clone(), "x": x, "delta": rep.delta }));
            }
            return Ok(());
        }
        for v in lo..x - (m - slot - 1) as i64 {
            choose[slot] = v;
            descend(v + 1, x, slot + 1, choose, cfg, instances, violations)?;
        }
        Ok(())
    }
    for x in (m as i64 + 1)..=(args.x_max as i64) {
        descend(1, x, 0, &mut choose, &cfg, &mut instances, &mut violations)?;
    }
    let mut report = Report::new("verify growth");
    report.param("m", m).param("x-max", args.x_max);
    let all_confirmed = violations.is_empty();
    report.results = json!({
        "instances": instances,
        "violations": violations,
    });
    report.realized_constants = json!({ "minimum_delta": m as u64 + 1 });
    report.checks = json!({ "all_confirmed": all_confirmed });
    let exit = if all_confirmed { 0 } else { 1 };
    Ok(RunOutput { report, input_digest: None, seed: 0, exit })
}

fn search_fd(args: SearchFdArgs) -> CliResult<RunOutput> {
    let run = || fd_search(args.d, args.n, args.m, args.grid, args.budget, args.seed);
    let record = match args.jobs {
        Some(jobs) => rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build()
            .map_err(|e| CliError::usage(format!("cannot build worker pool: {e}")))?
            .install(run),
        None => run(),
    }?;
    let witness: Vec<Vec<i64>> = record
        .witness
        .points()
        .iter()
        .map(|p| p.coords().iter().map(|c| c.to_i64().expect("grid coordinate")).collect())
        .collect();
    if let Some(csv) = &args.csv {
        append_csv_row(csv, &record.best_value, &args, record.exhaustive, &witness)?;
    }
    let mut report = Report::new("search fd");
    report
        .param("d", args.d)
        .param("n", args.n)
        .param("m", args.m)
        .param("grid", args.grid)
        .param("budget", args.budget)
        .param("seed", args.seed);
    report.results = json!({
        "best_value": record.best_value,
        "exhaustive": record.exhaustive,
        "witness": witness,
        "leaves_examined": record.leaves_examined,
    });
    let n_pow = (args.n as u64).pow(args.d as u32 + 1);
    report.realized_constants = json!({
        "value_over_n_pow_d_plus_1": rat_str(&Rat::new(
            Int::from(record.best_value),
            Int::from(n_pow.max(1)),
        )),
    });
    report.checks = json!({ "exhaustive": record.exhaustive });
    let exit = if record.exhaustive { 0 } else { 2 };
    Ok(RunOutput { report, input_digest: None, seed: args.seed, exit })
}

fn append_csv_row(
    path: &Path,
    value: &u64,
    args: &SearchFdArgs,
    exhaustive: bool,
    witness: &[Vec<i64>],
) -> CliResult<()> {
    let fresh = !path.exists();
    let mut file = OpenOptions::new()
        .create(true)
        .append(true)
        .open(path)
        .map_err(|e| CliError::usage(format!("cannot open {}: {e}", path.display())))?;
    let rendered: Vec<String> = witness
        .iter()
        .map(|p| p.iter().map(|c| c.to_string()).collect::<Vec<_>>().join(" "))
        .collect();
    let mut row = String::new();
    if fresh {
        row.push_str("d,n,m,value,exhaustive,witness\n");
    }
    row.push_str(&format!(
        "{},{},{},{},{},\"{}\"\n",
        args.d,
        args.n,
        args.m,
        value,
        exhaustive,
        rendered.join(";")
    ));
    file.write_all(row.as_bytes())
        .map_err(|e| CliError::usage(format!("cannot write {}: {e}", path.display())))
}

fn certify_stability(args: CertifyStabilityArgs) -> CliResult<RunOutput> {
    let eps = parse_rat_arg(&args.eps, "eps")?;
    let cert = stability_certificate(args.d, &eps, args.n)?;
    let class_m = ((Rat::one() - &eps) * Rat::from_integer(Int::from(args.n)))
        .ceil()
        .to_integer();
    let mut report = Report::new("certify stability");
    report
        .param("d", args.d)
        .param("eps", rat_str(&eps))
        .param("n", args.n);
    report.results = json!({
        "gamma": rat_str(&cert.gamma),
        "threshold": cert.threshold,
        "bound": cert.bound.to_string(),
        "below_threshold": cert.below_threshold,
        "class_concentration": class_m.to_string(),
    });
    report.realized_constants = json!({ "gamma": rat_str(&cert.gamma) });
    report.checks = json!({ "applicable": !cert.below_threshold });
    Ok(RunOutput { report, input_digest: None, seed: 0, exit: 0 })
}

fn gap_check(args: GapFileArgs) -> CliResult<RunOutput> {
    let digest = sha_hex(read_file(&args.input)?.as_bytes());
    let parsed = parse_gap(&args.input)?;
    let mut report = Report::new("gap check");
    report.param("input", args.input.display().to_string());
    report.results = json!({
        "rank": parsed.gap.rank(),
        "diffs": parsed.gap.diffs().iter().map(|d| d.to_string()).collect::<Vec<_>>(),
        "half_sides": parsed.gap.half_sides(),
        "proper": parsed.gap.is_proper(),
        "box_volume": parsed.gap.box_volume().to_string(),
    });
    report.checks = json!({ "proper": parsed.gap.is_proper() });
    Ok(RunOutput { report, input_digest: Some(digest), seed: 0, exit: 0 })
}

fn gap_clean(args: GapFileArgs) -> CliResult<RunOutput> {
    let digest = sha_hex(read_file(&args.input)?.as_bytes());
    let parsed = parse_gap(&args.input)?;
    if parsed.values.is_empty() {
        return Err(CliError::usage("gap clean needs a nonempty \"values\" list"));
    }
    let eps = parsed.eps.clone().unwrap_or_else(|| rat(51, 100));
    let outcome = clean(&parsed.gap, &parsed.values, &eps)?;
    let mut report = Report::new("gap clean");
    report
        .param("input", args.input.display().to_string())
        .param("eps", rat_str(&eps));
    report.results = json!({
        "rounds": outcome.rounds,
        "kept": scalar_strings(&outcome.b_prime),
        "kept_count": outcome.b_prime.len(),
        "gap": {
            "rank": outcome.q_prime.rank(),
            "diffs": outcome.q_prime.diffs().iter().map(|d| d.to_string()).collect::<Vec<_>>(),
            "half_sides": outcome.q_prime.half_sides(),
            "proper": outcome.q_prime.is_proper(),
        },
    });
    report.realized_constants = json!({ "realized_keep": rat_str(&outcome.realized_keep) });
    report.checks = json!({
        "proper": outcome.q_prime.is_proper(),
        "rank_nonincreasing": outcome.q_prime.rank() <= parsed.gap.rank(),
    });
    Ok(RunOutput { report, input_digest: Some(digest), seed: 0, exit: 0 })
}

fn gap_fiber(args: GapFileArgs) -> CliResult<RunOutput> {
    let digest = sha_hex(read_file(&args.input)?.as_bytes());
    let slice = parse_slice(&args.input)?;
    let count = fiber_count_exact(&slice);
    let affine_dim = fiber_affine_dim(&slice)?;
    let mut report = Report::new("gap fiber");
    report.param("input", args.input.display().to_string());
    let mut results = json!({
        "count": count.to_string(),
        "affine_dim": affine_dim,
    });
    let mut checks = json!({});
    if let Some(dim) = affine_dim {
        let bounds = fiber_upper_bounds(&slice, dim);
        let count_rat = Rat::from_integer(count.clone());
        if let Some(p2) = &bounds.part2 {
            results["factorial_bound"] = json!(rat_str(p2));
            checks["within_factorial_bound"] = json!(count_rat <= *p2);
        }
        if let Some(p1) = &bounds.part1 {
            results["volume_ratio_bound"] = json!(rat_str(p1));
            checks["within_volume_ratio_bound"] = json!(count_rat <= *p1);
        }
    }
    if count <= Int::from(64) && !count.is_negative() {
        results["points"] = json!(fiber_points(&slice)?);
    }
    report.results = results;
    report.checks = checks;
    Ok(RunOutput { report, input_digest: Some(digest), seed: 0, exit: 0 })
}

fn run_decompose(args: DecomposeArgs) -> CliResult<RunOutput> {
    let digest = sha_hex(read_file(&args.input)?.as_bytes());
    let a = parse_input(&args.input)?.scalars()?;
    let c = parse_rat_arg(&args.c, "C")?;
    let cfg = PipelineConfig::default();
    let rep = decompose(&a, &c, &cfg)?;
    let n = a.len();
    let mut report = Report::new("decompose");
    report
        .param("input", args.input.display().to_string())
        .param("C", rat_str(&c));
    report.results = json!({
        "a1": scalar_strings(&rep.a1),
        "a2": scalar_strings(&rep.a2),
        "r": rep.r.to_string(),
        "normalized_sum": rep.normalized_sum.to_string(),
        "fs_size": rep.fs_size,
        "m": rep.m,
        "d": rep.d.to_string(),
        "stage_log": rep
            .stage_log
            .iter()
            .map(|(stage, detail)| json!([stage.to_string(), detail]))
            .collect::<Vec<_>>(),
    });
    report.realized_constants = json!({
        "realized_c": rat_str(&Rat::new(Int::from(rep.fs_size), Int::from((n * n) as u64))),
        "a1_density": rat_str(&Rat::new(Int::from(rep.a1.len() as u64), Int::from(n as u64))),
    });
    report.checks = json!({
        "a1_dilated_integers": rep.checks.a1_dilated_integers,
        "sum_within_budget": rep.checks.sum_within_budget,
        "a2_within_budget": rep.checks.a2_within_budget,
        "product_bound": rep.checks.product_bound,
        "all": rep.checks.all(),
    });
    Ok(RunOutput { report, input_digest: Some(digest), seed: 0, exit: 0 })
}
