//! Command-line front end for the solver library: symbolic analysis reports,
//! synthetic matrix generation, Q-table training, factorization, solving and
//! benchmarking.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use ess::matgen::{generate, GenSpec};
use ess::numeric::train_real;
use ess::qlearn::{sim::SimConfig, train, Hyper, TrainOptions, UpdateTarget};
use ess::schedmdp::{FeaturizerSpec, RewardWeights, SchedulePolicy, SerialPolicy, StaticPolicy};
use ess::sparse::io::{load_matrix_market, load_vector, save_matrix_market, save_vector};
use ess::symbolic::{frontal_workloads, NONE};
use ess::{
    analyze, analyze_blocked, load_qtable, par_solve, parallel_factor, permute, residual_norm,
    save_qtable, Analysis, AnalyzeOptions, CscMatrix64, FactorOptions, LUFactors64, LearnedPolicy,
    QTable, ScheduleTrace,
};

/// Largest residual a benchmark run may report and still count as correct.
const RESIDUAL_TOL: f64 = 1e-10;

#[derive(Parser)]
#[command(
    name = "ess",
    version,
    about = "Parallel sparse LU solver with a learned task scheduler"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Symbolic analysis report for a Matrix Market file
    Analyze(AnalyzeCmd),
    /// Generate a synthetic power-system matrix from a JSON spec
    Gen(GenCmd),
    /// Train a scheduling Q-table on a corpus of matrices
    Train(TrainCmd),
    /// Factor a matrix and report schedule and timing
    Factor(FactorCmd),
    /// Factor a matrix and solve it against a right-hand side
    Solve(SolveCmd),
    /// Benchmark policies and thread counts over a corpus
    Bench(BenchCmd),
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum OrderArg {
    /// Minimum degree on the symmetrized pattern
    Amd,
    /// Keep the input order
    Natural,
}

impl OrderArg {
    fn to_ordering(self) -> ess::symbolic::Ordering {
        match self {
            OrderArg::Amd => ess::symbolic::Ordering::MinDegree,
            OrderArg::Natural => ess::symbolic::Ordering::Natural,
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum PolicyArg {
    /// Never cut: the whole tree runs as one task
    Serial,
    /// Level-order greedy cuts sized to the core count
    Static,
}

impl PolicyArg {
    fn name(self) -> &'static str {
        match self {
            PolicyArg::Serial => "serial",
            PolicyArg::Static => "static",
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum BenchPolicyArg {
    Serial,
    Static,
    /// Learned policy; needs --qtable
    Qtable,
}

impl BenchPolicyArg {
    fn name(self) -> &'static str {
        match self {
            BenchPolicyArg::Serial => "serial",
            BenchPolicyArg::Static => "static",
            BenchPolicyArg::Qtable => "qtable",
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum TargetArg {
    /// TD target uses the on-policy next action's value
    Next,
    /// TD target uses the greedy maximum over available classes
    Max,
}

#[derive(Args)]
struct AnalyzeCmd {
    /// Input matrix (Matrix Market coordinate format)
    matrix: PathBuf,
    /// Fill-reducing ordering
    #[arg(long, value_enum, default_value_t = OrderArg::Amd)]
    order: OrderArg,
    /// Extra structure rows a column may add to its predecessor and still
    /// share a front with it
    #[arg(long, default_value_t = 4)]
    relax: usize,
    /// Also write the report as JSON
    #[arg(long, value_name = "FILE")]
    json: Option<PathBuf>,
    /// Detect repeated diagonal blocks and reuse one symbolic analysis per
    /// distinct block structure
    #[arg(long)]
    blocks: bool,
    /// Trailing columns treated as the coupling border during block
    /// detection
    #[arg(long, default_value_t = 0, requires = "blocks")]
    border: usize,
}

#[derive(Args)]
struct GenCmd {
    /// Generator spec (JSON)
    #[arg(long, value_name = "FILE")]
    templates: PathBuf,
    /// Output matrix path
    #[arg(long, value_name = "FILE")]
    out: PathBuf,
    /// Also write the generated block layout as JSON
    #[arg(long, value_name = "FILE")]
    blockmap: Option<PathBuf>,
}

#[derive(Args)]
struct TrainCmd {
    /// Directory of .mtx training matrices
    #[arg(long, value_name = "DIR")]
    corpus: PathBuf,
    #[arg(long, default_value_t = 400)]
    episodes: usize,
    /// Base learning rate in (0, 1]
    #[arg(long, default_value_t = 0.2)]
    alpha: f64,
    /// Discount in [0, 1)
    #[arg(long, default_value_t = 0.95)]
    gamma: f64,
    /// Base exploration rate in [0, 1]
    #[arg(long, default_value_t = 0.5)]
    epsilon: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Cores the scheduling episodes plan for
    #[arg(long, default_value_t = 4)]
    threads: usize,
    /// Output Q-table path
    #[arg(long, value_name = "FILE")]
    out: PathBuf,
    /// Train against real wall-clock execution instead of the virtual-clock
    /// simulator
    #[arg(long)]
    real_exec: bool,
    /// Which next-state value the TD update targets
    #[arg(long, value_enum, default_value_t = TargetArg::Next)]
    target: TargetArg,
    /// Reward weight per second of epoch time
    #[arg(long, default_value_t = 1.0)]
    w_time: f64,
    /// Reward weight per byte of peak frontal storage
    #[arg(long, default_value_t = 1e-9)]
    w_mem: f64,
    /// Reward weight on core imbalance
    #[arg(long, default_value_t = 0.5)]
    w_balance: f64,
}

#[derive(Args)]
struct FactorCmd {
    /// Input matrix (Matrix Market coordinate format)
    matrix: PathBuf,
    /// Worker cores
    #[arg(long)]
    threads: usize,
    /// Schedule with a trained Q-table
    #[arg(long, value_name = "FILE", conflicts_with = "policy")]
    qtable: Option<PathBuf>,
    /// Built-in scheduling policy
    #[arg(long, value_enum, default_value_t = PolicyArg::Static)]
    policy: PolicyArg,
    /// Threshold-pivoting relative tolerance in (0, 1]
    #[arg(long, default_value_t = 0.001)]
    pivot_tol: f64,
    /// Write the schedule trace as CSV
    #[arg(long, value_name = "FILE")]
    trace: Option<PathBuf>,
}

#[derive(Args)]
struct SolveCmd {
    /// Input matrix (Matrix Market coordinate format)
    matrix: PathBuf,
    /// Right-hand side vector (Matrix Market n-by-1)
    #[arg(long, value_name = "FILE")]
    rhs: PathBuf,
    /// Output solution vector path
    #[arg(long, value_name = "FILE")]
    out: PathBuf,
    /// Worker cores
    #[arg(long, default_value_t = 1)]
    threads: usize,
    /// Schedule with a trained Q-table
    #[arg(long, value_name = "FILE", conflicts_with = "policy")]
    qtable: Option<PathBuf>,
    /// Built-in scheduling policy
    #[arg(long, value_enum, default_value_t = PolicyArg::Static)]
    policy: PolicyArg,
    /// Threshold-pivoting relative tolerance in (0, 1]
    #[arg(long, default_value_t = 0.001)]
    pivot_tol: f64,
}

#[derive(Args)]
struct BenchCmd {
    /// Directory of .mtx benchmark matrices
    #[arg(long, value_name = "DIR")]
    corpus: PathBuf,
    /// Comma-separated worker counts
    #[arg(long, value_delimiter = ',', default_value = "1,2,4")]
    threads: Vec<usize>,
    /// Comma-separated scheduling policies
    #[arg(long, value_enum, value_delimiter = ',', default_value = "serial,static")]
    policies: Vec<BenchPolicyArg>,
    /// Q-table file; required when policies include qtable
    #[arg(long, value_name = "FILE")]
    qtable: Option<PathBuf>,
    /// Timing repeats per configuration (median is reported, minimum 3)
    #[arg(long, default_value_t = 5)]
    repeats: usize,
    /// Output report CSV path
    #[arg(long, value_name = "FILE")]
    out: PathBuf,
}

fn main() -> Result<()> {
    // Die quietly on a closed pipe (`ess analyze ... | head`) instead of
    // panicking: restore the default SIGPIPE disposition the Rust runtime
    // overrides.
    #[cfg(unix)]
    unsafe {
        libc::signal(libc::SIGPIPE, libc::SIG_DFL);
    }
    match Cli::parse().cmd {
        Cmd::Analyze(c) => run_analyze(c),
        Cmd::Gen(c) => run_gen(c),
        Cmd::Train(c) => run_train(c),
        Cmd::Factor(c) => run_factor(c),
        Cmd::Solve(c) => run_solve(c),
        Cmd::Bench(c) => run_bench(c),
    }
}

fn load_matrix(path: &Path) -> Result<CscMatrix64> {
    load_matrix_market::<f64, _>(path).with_context(|| format!("loading {}", path.display()))
}

/// All .mtx files of a directory in name order, so corpus traversal is
/// deterministic.
fn load_corpus(dir: &Path) -> Result<Vec<(String, CscMatrix64)>> {
    let entries =
        fs::read_dir(dir).with_context(|| format!("reading corpus {}", dir.display()))?;
    let mut paths: Vec<PathBuf> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "mtx"))
        .collect();
    paths.sort();
    if paths.is_empty() {
        bail!("no .mtx files in {}", dir.display());
    }
    paths
        .into_iter()
        .map(|p| {
            let name = p
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| p.display().to_string());
            Ok((name, load_matrix(&p)?))
        })
        .collect()
}

/// Longest root-to-leaf path of a parent-vector forest, counted in nodes.
/// Parents always have larger ids than their children.
fn tree_height(parents: &[usize]) -> usize {
    let mut depth = vec![0usize; parents.len()];
    let mut best = 0;
    for j in (0..parents.len()).rev() {
        depth[j] = match parents[j] {
            NONE => 1,
            p => depth[p] + 1,
        };
        best = best.max(depth[j]);
    }
    best
}

fn factor_nnz(lu: &LUFactors64) -> usize {
    lu.fronts()
        .iter()
        .map(|f| {
            f.l_struct.iter().map(Vec::len).sum::<usize>()
                + f.u_struct.iter().map(Vec::len).sum::<usize>()
                + f.n_eliminated()
        })
        .sum()
}

/// Upper bound on concurrently live task bytes: sweep the trace intervals,
/// adding each task's own peak while it runs. Ends sort before starts at the
/// same instant so back-to-back tasks on one core do not count as
/// overlapping.
fn concurrent_peak(trace: &ScheduleTrace) -> u64 {
    let mut events: Vec<(u64, i64)> = Vec::with_capacity(2 * trace.rows.len());
    for r in &trace.rows {
        events.push((r.t_start_us, r.peak_bytes as i64));
        events.push((r.t_end_us, -(r.peak_bytes as i64)));
    }
    events.sort_by_key(|&(t, d)| (t, d));
    let mut live = 0i64;
    let mut peak = 0i64;
    for (_, d) in events {
        live += d;
        peak = peak.max(live);
    }
    peak.max(0) as u64
}

fn median(samples: &mut [f64]) -> f64 {
    samples.sort_by(|a, b| a.partial_cmp(b).expect("timings are finite"));
    let m = samples.len() / 2;
    if samples.len() % 2 == 1 {
        samples[m]
    } else {
        0.5 * (samples[m - 1] + samples[m])
    }
}

/// Factor with the chosen scheduling policy; a loaded Q-table wins over the
/// built-in policies.
fn policy_factor(
    a: &CscMatrix64,
    an: &Analysis,
    opts: &FactorOptions,
    threads: usize,
    table: Option<&QTable>,
    builtin: PolicyArg,
) -> ess::Result<(LUFactors64, ScheduleTrace)> {
    let mut policy: Box<dyn SchedulePolicy + '_> = match table {
        Some(t) => Box::new(LearnedPolicy::new(t)),
        None => match builtin {
            PolicyArg::Serial => Box::new(SerialPolicy),
            PolicyArg::Static => Box::new(StaticPolicy),
        },
    };
    parallel_factor(a, an, opts, threads, &mut *policy)
}

fn run_analyze(cmd: AnalyzeCmd) -> Result<()> {
    let a = load_matrix(&cmd.matrix)?;
    let opts = AnalyzeOptions {
        ordering: cmd.order.to_ordering(),
        relax: cmd.relax,
    };
    let blocked = if cmd.blocks {
        Some(analyze_blocked(&a, cmd.border, &opts, true)?)
    } else {
        None
    };
    let an = match &blocked {
        Some(b) => b.analysis.clone(),
        None => analyze(&a, &opts)?,
    };

    let sym = a.symmetrize_pattern();
    let m = permute(&sym, &an.ordering, &an.ordering);
    let fill_count = an.fill.fill_count(&m);
    let parents = an.frontals.parents(&an.etree);
    let height = tree_height(&parents);
    let workloads = frontal_workloads(&an.frontals, &an.fill);

    println!("matrix: {}", cmd.matrix.display());
    println!("n: {}", a.n());
    println!("nnz: {}", a.nnz());
    println!("fill count: {fill_count}");
    println!("frontal count: {}", an.frontals.len());
    println!("tree height: {height}");
    if let Some(b) = &blocked {
        let n_blocks = b.map.n_blocks();
        let n_groups = b.plan.n_groups();
        let reuse = if n_blocks == 0 {
            0.0
        } else {
            1.0 - n_groups as f64 / n_blocks as f64
        };
        println!("block count: {n_blocks}");
        println!("group count: {n_groups}");
        println!("reuse ratio: {reuse:.3}");
        println!("block analyses run: {}", b.block_analyses);
    }
    println!("frontal workloads:");
    for (fi, w) in workloads.iter().enumerate() {
        let cols = an.frontals.cols(fi);
        println!("  {fi:>4}: cols {}..{}  workload {w}", cols.start, cols.end);
    }

    if let Some(path) = &cmd.json {
        let frontals: Vec<serde_json::Value> = workloads
            .iter()
            .enumerate()
            .map(|(fi, w)| {
                let cols = an.frontals.cols(fi);
                serde_json::json!({ "id": fi, "cols": [cols.start, cols.end], "workload": w })
            })
            .collect();
        let mut report = serde_json::json!({
            "matrix": cmd.matrix.display().to_string(),
            "n": a.n(),
            "nnz": a.nnz(),
            "fill_count": fill_count,
            "frontal_count": an.frontals.len(),
            "tree_height": height,
            "frontals": frontals,
        });
        if let Some(b) = &blocked {
            let n_blocks = b.map.n_blocks();
            let n_groups = b.plan.n_groups();
            report["blocks"] = serde_json::json!({
                "block_count": n_blocks,
                "group_count": n_groups,
                "reuse_ratio": if n_blocks == 0 { 0.0 } else {
                    1.0 - n_groups as f64 / n_blocks as f64
                },
                "block_analyses": b.block_analyses,
            });
        }
        fs::write(path, serde_json::to_string_pretty(&report)? + "\n")
            .with_context(|| format!("writing {}", path.display()))?;
        println!("report written to {}", path.display());
    }
    Ok(())
}

fn run_gen(cmd: GenCmd) -> Result<()> {
    let text = fs::read_to_string(&cmd.templates)
        .with_context(|| format!("reading {}", cmd.templates.display()))?;
    let spec: GenSpec = serde_json::from_str(&text)
        .with_context(|| format!("parsing {}", cmd.templates.display()))?;
    let (a, map) = generate::<f64>(&spec)?;
    save_matrix_market(&a, &cmd.out)?;
    println!(
        "wrote {}: n = {}, nnz = {}, blocks = {}, network = {}, seed = {}",
        cmd.out.display(),
        a.n(),
        a.nnz(),
        map.n_blocks(),
        spec.network_size,
        spec.seed
    );
    if let Some(path) = &cmd.blockmap {
        let bm = serde_json::json!({
            "n": map.n(),
            "blocks": map.blocks.iter().map(|r| [r.start, r.end]).collect::<Vec<_>>(),
            "coupling": [map.coupling.start, map.coupling.end],
        });
        fs::write(path, serde_json::to_string_pretty(&bm)? + "\n")
            .with_context(|| format!("writing {}", path.display()))?;
        println!("block map written to {}", path.display());
    }
    Ok(())
}

fn run_train(cmd: TrainCmd) -> Result<()> {
    let corpus = load_corpus(&cmd.corpus)?;
    let mats: Vec<CscMatrix64> = corpus.iter().map(|(_, m)| m.clone()).collect();
    let hyper = Hyper {
        alpha: cmd.alpha,
        gamma: cmd.gamma,
        epsilon: cmd.epsilon,
    };
    let weights = RewardWeights {
        time: cmd.w_time,
        mem: cmd.w_mem,
        balance: cmd.w_balance,
    };
    let train_opts = TrainOptions {
        episodes: cmd.episodes,
        seed: cmd.seed,
        target: match cmd.target {
            TargetArg::Next => UpdateTarget::Next,
            TargetArg::Max => UpdateTarget::Max,
        },
        ..TrainOptions::default()
    };
    let analyze_opts = AnalyzeOptions::default();
    let featurizer = FeaturizerSpec::default();

    let t0 = Instant::now();
    let outcome = if cmd.real_exec {
        train_real(
            &mats,
            cmd.threads,
            hyper,
            &FactorOptions::default(),
            &weights,
            &featurizer,
            &train_opts,
            &analyze_opts,
        )?
    } else {
        let sim_cfg = SimConfig {
            weights,
            featurizer,
            ..SimConfig::default()
        };
        train(&mats, cmd.threads, hyper, &sim_cfg, &train_opts, &analyze_opts)?
    };
    let elapsed = t0.elapsed().as_secs_f64();

    if !outcome.skipped.is_empty() {
        let names: Vec<&str> = outcome
            .skipped
            .iter()
            .map(|&i| corpus[i].0.as_str())
            .collect();
        eprintln!(
            "warning: symbolic analysis failed, skipped: {}",
            names.join(", ")
        );
    }
    save_qtable(&outcome.table, &cmd.out)?;
    println!(
        "trained {} episodes on {} matrices at {} cores ({} backend) in {:.2} s",
        cmd.episodes,
        mats.len() - outcome.skipped.len(),
        cmd.threads,
        if cmd.real_exec { "real-exec" } else { "simulated" },
        elapsed
    );
    println!("table entries: {}", outcome.table.len());
    println!("q-table written to {}", cmd.out.display());
    Ok(())
}

fn run_factor(cmd: FactorCmd) -> Result<()> {
    let a = load_matrix(&cmd.matrix)?;
    let an = analyze(&a, &AnalyzeOptions::default())?;
    let opts = FactorOptions {
        pivot_tol: cmd.pivot_tol,
    };
    let table = cmd.qtable.as_deref().map(load_qtable).transpose()?;
    let policy_name = if table.is_some() {
        "qtable"
    } else {
        cmd.policy.name()
    };

    let t0 = Instant::now();
    let (lu, trace) = policy_factor(&a, &an, &opts, cmd.threads, table.as_ref(), cmd.policy)?;
    let factor_s = t0.elapsed().as_secs_f64();

    println!(
        "matrix: {} (n = {}, nnz = {})",
        cmd.matrix.display(),
        a.n(),
        a.nnz()
    );
    println!(
        "frontals: {}  tasks: {}  threads: {}  policy: {}",
        an.frontals.len(),
        trace.rows.len(),
        cmd.threads,
        policy_name
    );
    println!("factor time: {factor_s:.6} s");
    println!("factor nonzeros: {}", factor_nnz(&lu));
    println!("peak concurrent bytes: {}", concurrent_peak(&trace));
    if let Some(path) = &cmd.trace {
        fs::write(path, trace.to_csv()).with_context(|| format!("writing {}", path.display()))?;
        println!("trace written to {}", path.display());
    }
    Ok(())
}

fn run_solve(cmd: SolveCmd) -> Result<()> {
    let a = load_matrix(&cmd.matrix)?;
    let b: Vec<f64> = load_vector(&cmd.rhs)
        .with_context(|| format!("loading right-hand side {}", cmd.rhs.display()))?;
    let an = analyze(&a, &AnalyzeOptions::default())?;
    let opts = FactorOptions {
        pivot_tol: cmd.pivot_tol,
    };
    let table = cmd.qtable.as_deref().map(load_qtable).transpose()?;
    let policy_name = if table.is_some() {
        "qtable"
    } else {
        cmd.policy.name()
    };

    let t0 = Instant::now();
    let (lu, _) = policy_factor(&a, &an, &opts, cmd.threads, table.as_ref(), cmd.policy)?;
    let factor_s = t0.elapsed().as_secs_f64();
    let t1 = Instant::now();
    let x = par_solve(&lu, &b, cmd.threads)?;
    let solve_s = t1.elapsed().as_secs_f64();
    let residual = residual_norm(&a, &x, &b);

    save_vector(&x, &cmd.out)?;
    println!(
        "matrix: {} (n = {}, nnz = {})",
        cmd.matrix.display(),
        a.n(),
        a.nnz()
    );
    println!(
        "factor time: {factor_s:.6} s  (threads = {}, policy = {policy_name})",
        cmd.threads
    );
    println!("solve time: {solve_s:.6} s");
    println!("residual: {residual:.3e}");
    println!("solution written to {}", cmd.out.display());
    Ok(())
}

struct BenchRow {
    matrix: String,
    threads: usize,
    policy: &'static str,
    factor_s: f64,
    solve_s: f64,
    residual: f64,
    speedup: Option<f64>,
    peak_bytes: u64,
    valid: bool,
}

fn run_bench(cmd: BenchCmd) -> Result<()> {
    if cmd.repeats < 3 {
        bail!("--repeats must be at least 3 (the reported time is a median)");
    }
    if cmd.threads.is_empty() || cmd.threads.contains(&0) {
        bail!("--threads must list positive worker counts");
    }
    if cmd.policies.is_empty() {
        bail!("--policies must list at least one policy");
    }
    let table = if cmd.policies.contains(&BenchPolicyArg::Qtable) {
        let path = cmd
            .qtable
            .as_deref()
            .context("--policies includes qtable; pass --qtable FILE")?;
        Some(load_qtable(path)?)
    } else {
        None
    };
    let corpus = load_corpus(&cmd.corpus)?;

    let mut rows: Vec<BenchRow> = Vec::new();
    for (name, a) in &corpus {
        let an = analyze(a, &AnalyzeOptions::default())?;
        let ones = vec![1.0; a.n()];
        let b = a.mul_vec(&ones);
        for &threads in &cmd.threads {
            for &pol in &cmd.policies {
                let (builtin, tab) = match pol {
                    BenchPolicyArg::Serial => (PolicyArg::Serial, None),
                    BenchPolicyArg::Static => (PolicyArg::Static, None),
                    BenchPolicyArg::Qtable => (PolicyArg::Static, table.as_ref()),
                };
                let mut factor_times = Vec::with_capacity(cmd.repeats);
                let mut solve_times = Vec::with_capacity(cmd.repeats);
                let mut residual: f64 = 0.0;
                let mut peak_bytes = 0u64;
                let mut valid = true;
                for _ in 0..cmd.repeats {
                    let t0 = Instant::now();
                    let (lu, trace) =
                        policy_factor(a, &an, &FactorOptions::default(), threads, tab, builtin)?;
                    factor_times.push(t0.elapsed().as_secs_f64());
                    let t1 = Instant::now();
                    let x = par_solve(&lu, &b, threads)?;
                    solve_times.push(t1.elapsed().as_secs_f64());
                    let r = residual_norm(a, &x, &b);
                    residual = residual.max(r);
                    valid &= r <= RESIDUAL_TOL;
                    peak_bytes = peak_bytes.max(concurrent_peak(&trace));
                }
                rows.push(BenchRow {
                    matrix: name.clone(),
                    threads,
                    policy: pol.name(),
                    factor_s: median(&mut factor_times),
                    solve_s: median(&mut solve_times),
                    residual,
                    speedup: None,
                    peak_bytes,
                    valid,
                });
            }
        }
    }

    // Speedup baseline: the serial policy at one thread on the same matrix,
    // falling back to the row's own policy at one thread. Rows without a
    // valid baseline in this run set leave the column empty.
    let speedups: Vec<Option<f64>> = rows
        .iter()
        .map(|row| {
            if !row.valid {
                return None;
            }
            let base = rows
                .iter()
                .find(|r| {
                    r.matrix == row.matrix && r.threads == 1 && r.policy == "serial" && r.valid
                })
                .or_else(|| {
                    rows.iter().find(|r| {
                        r.matrix == row.matrix
                            && r.threads == 1
                            && r.policy == row.policy
                            && r.valid
                    })
                });
            base.map(|b| b.factor_s / row.factor_s)
        })
        .collect();
    for (row, s) in rows.iter_mut().zip(speedups) {
        row.speedup = s;
    }

    // Timings of invalid rows are withheld: the residual gate failed, so the
    // measurements do not describe a correct solve.
    let mut csv = String::from(
        "matrix,threads,policy,factor_time_s,solve_time_s,residual,speedup_vs_serial,peak_bytes\n",
    );
    for r in &rows {
        let (ft, st, sp) = if r.valid {
            (
                format!("{:.6}", r.factor_s),
                format!("{:.6}", r.solve_s),
                r.speedup.map(|s| format!("{s:.4}")).unwrap_or_default(),
            )
        } else {
            (String::new(), String::new(), String::new())
        };
        writeln!(
            csv,
            "{},{},{},{},{},{:.6e},{},{}",
            r.matrix, r.threads, r.policy, ft, st, r.residual, sp, r.peak_bytes
        )?;
    }
    fs::write(&cmd.out, &csv).with_context(|| format!("writing {}", cmd.out.display()))?;

    let header = [
        "matrix",
        "threads",
        "policy",
        "factor_s",
        "solve_s",
        "residual",
        "speedup",
        "peak_bytes",
    ];
    let cells: Vec<Vec<String>> = rows
        .iter()
        .map(|r| {
            vec![
                r.matrix.clone(),
                r.threads.to_string(),
                r.policy.to_string(),
                if r.valid {
                    format!("{:.6}", r.factor_s)
                } else {
                    "-".into()
                },
                if r.valid {
                    format!("{:.6}", r.solve_s)
                } else {
                    "-".into()
                },
                format!("{:.3e}", r.residual),
                match r.speedup {
                    Some(s) => format!("{s:.2}"),
                    None => "-".into(),
                },
                if r.valid {
                    r.peak_bytes.to_string()
                } else {
                    format!("{} RESIDUAL FAIL", r.peak_bytes)
                },
            ]
        })
        .collect();
    print_table(&header, &cells);
    println!("report written to {}", cmd.out.display());

    let failures = rows.iter().filter(|r| !r.valid).count();
    if failures > 0 {
        bail!("{failures} bench row(s) exceeded the residual bound {RESIDUAL_TOL:e}");
    }
    Ok(())
}

/// Prints rows under a header with every column padded to its widest cell.
/// The first three columns are left-aligned labels, the rest right-aligned
/// numbers.
fn print_table(header: &[&str], rows: &[Vec<String>]) {
    let mut widths: Vec<usize> = header.iter().map(|h| h.len()).collect();
    for row in rows {
        for (i, cell) in row.iter().enumerate() {
            widths[i] = widths[i].max(cell.len());
        }
    }
    let render = |cells: &[String]| -> String {
        cells
            .iter()
            .enumerate()
            .map(|(i, c)| {
                if i < 3 {
                    format!("{:<w$}", c, w = widths[i])
                } else {
                    format!("{:>w$}", c, w = widths[i])
                }
            })
            .collect::<Vec<_>>()
            .join("  ")
    };
    let head: Vec<String> = header.iter().map(|h| h.to_string()).collect();
    println!("{}", render(&head));
    for row in rows {
        println!("{}", render(row));
    }
}
