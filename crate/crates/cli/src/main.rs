//! Command-line driver: generate ensembles, run sweeps, analyze their output
//! and check the engine against the exact oracles.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use csrlm_core::analysis::{GridAxis, GridSpec, PhaseAxis, TcMethod};
use csrlm_core::harness::check::CheckSuite;
use csrlm_core::harness::{
    analyze, run_sweep, sweep_artifacts, write_artifacts, AnalyzeOptions, AnalyzeTask, Artifact,
    CheckScope, HarnessError, OutputConfig, ParameterGrid, ProtocolConfig, RealGrid, SweepConfig,
};

/// Environment variable naming the default output directory.
const OUT_ENV: &str = "CSRLM_OUT";
const DEFAULT_OUT: &str = "csrlm-out";

#[derive(Parser, Debug)]
#[command(
    name = "csrlm",
    version,
    about = "Context-sensitive random language model simulator"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate ensembles from a config file and/or parameter flags.
    Generate(GenerateArgs),
    /// Run every point of a sweep config and write the observables table.
    Sweep(SweepArgs),
    /// Analyze files written by a sweep.
    Analyze(AnalyzeArgs),
    /// Compare the engine against the exact toy-scale oracles.
    OracleCheck(OracleArgs),
}

#[derive(Args, Debug)]
struct RunArgs {
    /// Output directory [default: config `outputs.dir`, then $CSRLM_OUT, then ./csrlm-out].
    #[arg(long)]
    out: Option<PathBuf>,
    /// Base seed; overrides the config.
    #[arg(long)]
    seed: Option<u64>,
    /// Number of worker threads; overrides the config.
    #[arg(long)]
    parallel: Option<usize>,
    /// Replace existing output files.
    #[arg(long)]
    overwrite: bool,
}

#[derive(Args, Debug)]
struct SweepArgs {
    /// JSON sweep configuration.
    #[arg(long)]
    config: PathBuf,
    #[command(flatten)]
    run: RunArgs,
}

#[derive(Args, Debug)]
struct GenerateArgs {
    /// JSON configuration; parameter flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    #[command(flatten)]
    run: RunArgs,
    /// Alphabet sizes K.
    #[arg(long = "k", value_delimiter = ',')]
    k: Vec<usize>,
    /// Couplings J.
    #[arg(long = "j", value_delimiter = ',')]
    coupling: Vec<f64>,
    /// Probabilities q of a non-context rule.
    #[arg(long, value_delimiter = ',')]
    q: Vec<f64>,
    /// Probabilities t of termination within a non-context rule.
    #[arg(long, value_delimiter = ',')]
    t: Vec<f64>,
    /// Copy error rates epsilon.
    #[arg(long, value_delimiter = ',')]
    epsilon: Vec<f64>,
    /// Temperatures kT.
    #[arg(long = "kt", value_delimiter = ',')]
    kt: Vec<f64>,
    /// Sentence lengths N.
    #[arg(long = "n", value_delimiter = ',')]
    n: Vec<usize>,
    /// Samples per point [default: 1000 for N <= 1024, 200 above].
    #[arg(long)]
    samples: Option<u64>,
    /// Context sweeps applied after each sentence reaches its length.
    #[arg(long)]
    post_growth_sweeps: Option<u32>,
    /// Artifacts to write, e.g. observables,histogram,zipf.
    #[arg(long, value_delimiter = ',', value_parser = parse_artifact)]
    artifacts: Vec<Artifact>,
    /// Dump sentences with M in [DUMP_BIN, DUMP_BIN + 0.02).
    #[arg(long)]
    dump_bin: Option<f64>,
    /// Maximum dumped sentences per point.
    #[arg(long)]
    max_dumps: Option<usize>,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum TaskArg {
    Fss,
    Tc,
    PhaseDiagram,
    Zipf,
    Histogram,
}

impl From<TaskArg> for AnalyzeTask {
    fn from(t: TaskArg) -> Self {
        match t {
            TaskArg::Fss => AnalyzeTask::Fss,
            TaskArg::Tc => AnalyzeTask::Tc,
            TaskArg::PhaseDiagram => AnalyzeTask::PhaseDiagram,
            TaskArg::Zipf => AnalyzeTask::Zipf,
            TaskArg::Histogram => AnalyzeTask::Histogram,
        }
    }
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum AxisArg {
    Q,
    T,
}

#[derive(Args, Debug)]
struct AnalyzeArgs {
    #[arg(long, value_enum)]
    task: TaskArg,
    /// Input file [default: the task's input file inside the output directory].
    #[arg(long)]
    input: Option<PathBuf>,
    /// Output directory [default: $CSRLM_OUT, then ./csrlm-out].
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    overwrite: bool,
    /// Phase-diagram axis; detected from the table when omitted.
    #[arg(long, value_enum)]
    axis: Option<AxisArg>,
    /// Tc methods for the tc and phase-diagram tasks [default: all].
    #[arg(long, value_delimiter = ',', value_parser = parse_method)]
    methods: Vec<TcMethod>,
    /// Tc grid START:STOP:STEP for the exponent search.
    #[arg(long, value_parser = parse_axis)]
    tc_grid: Option<GridAxis>,
    /// nu grid START:STOP:STEP [default: 0.25:5:0.25].
    #[arg(long, value_parser = parse_axis, requires = "tc_grid")]
    nu_grid: Option<GridAxis>,
    /// gamma grid START:STOP:STEP [default: 0.25:5:0.25].
    #[arg(long, value_parser = parse_axis, requires = "tc_grid")]
    gamma_grid: Option<GridAxis>,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum ScopeArg {
    Equilibrium,
    Absorption,
    All,
}

#[derive(Args, Debug)]
struct OracleArgs {
    #[arg(long, value_enum, default_value = "all")]
    scope: ScopeArg,
    /// Base seed of the engine runs.
    #[arg(long)]
    seed: Option<u64>,
    /// Scales the temperature handed to the engine (negative control).
    #[arg(long, hide = true, default_value_t = 1.0)]
    kt_scale: f64,
}

fn parse_artifact(s: &str) -> Result<Artifact, String> {
    serde_json::from_value(serde_json::Value::String(s.to_string())).map_err(|_| {
        format!("unknown artifact `{s}`; expected one of observables, histogram, correlation, mutual_info, zipf, fss, phase_diagram, dumps, runs")
    })
}

fn parse_method(s: &str) -> Result<TcMethod, String> {
    TcMethod::parse(s).ok_or_else(|| {
        let names: Vec<&str> = TcMethod::ALL.iter().map(|m| m.name()).collect();
        format!("unknown method `{s}`; expected one of {}", names.join(", "))
    })
}

fn parse_axis(s: &str) -> Result<GridAxis, String> {
    let parts: Vec<&str> = s.split(':').collect();
    let [start, stop, step] = parts.as_slice() else {
        return Err(format!("expected START:STOP:STEP, got `{s}`"));
    };
    let num = |x: &str| {
        x.trim()
            .parse::<f64>()
            .map_err(|_| format!("`{x}` is not a number"))
    };
    GridAxis::new(num(start)?, num(stop)?, num(step)?).map_err(|e| e.to_string())
}

fn output_dir(flag: Option<&Path>, config: Option<&Path>) -> PathBuf {
    flag.or(config)
        .map(Path::to_path_buf)
        .or_else(|| std::env::var_os(OUT_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT))
}

fn load_config(path: &Path) -> Result<SweepConfig> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    SweepConfig::from_json(&text).with_context(|| format!("invalid config {}", path.display()))
}

fn apply_run_args(config: &mut SweepConfig, run: &RunArgs) {
    if let Some(seed) = run.seed {
        config.protocol.seed = seed;
    }
    if let Some(p) = run.parallel {
        config.parallelism = p;
    }
}

fn execute(mut config: SweepConfig, run: &RunArgs) -> Result<()> {
    apply_run_args(&mut config, run);
    config.validate()?;
    let dir = output_dir(run.out.as_deref(), config.outputs.dir.as_deref());
    config.outputs.dir = Some(dir.clone());
    // Every run writes config.json; refuse before spending the compute.
    let marker = dir.join("config.json");
    if !run.overwrite && marker.exists() {
        return Err(HarnessError::WouldOverwrite(vec![marker]).into());
    }
    let points = config.points().len();
    eprintln!(
        "running {points} points with {} worker(s)",
        config.parallelism
    );
    let output = run_sweep(&config)?;
    let failed: Vec<_> = output
        .table
        .rows()
        .iter()
        .filter(|r| r.error.is_some())
        .collect();
    for row in &failed {
        eprintln!(
            "warning: {}: {}",
            row.key,
            row.error.as_deref().unwrap_or_default()
        );
    }
    let written = write_artifacts(&dir, &sweep_artifacts(&config, &output), run.overwrite)?;
    for path in &written {
        println!("{}", path.display());
    }
    eprintln!("{points} points, {} with errors", failed.len());
    Ok(())
}

fn generate(args: GenerateArgs) -> Result<()> {
    let mut config = match &args.config {
        Some(path) => load_config(path)?,
        None => {
            let mut missing = Vec::new();
            for (flag, empty) in [
                ("--k", args.k.is_empty()),
                ("--q", args.q.is_empty()),
                ("--kt", args.kt.is_empty()),
                ("--n", args.n.is_empty()),
            ] {
                if empty {
                    missing.push(flag);
                }
            }
            if !missing.is_empty() {
                bail!("without --config, {} must be given", missing.join(", "));
            }
            SweepConfig {
                schema_version: csrlm_core::harness::config::CONFIG_SCHEMA_VERSION,
                grid: ParameterGrid {
                    k: Vec::new(),
                    coupling: RealGrid::List(vec![1.0]),
                    q: RealGrid::List(Vec::new()),
                    t: RealGrid::List(vec![0.0]),
                    epsilon: RealGrid::List(vec![0.0]),
                    kt: RealGrid::List(Vec::new()),
                    n: Vec::new(),
                },
                protocol: ProtocolConfig {
                    seed: 0,
                    samples: None,
                    post_growth_sweeps: 0,
                    runaway_cap: None,
                },
                outputs: OutputConfig::default(),
                parallelism: 1,
            }
        }
    };
    let g = &mut config.grid;
    if !args.k.is_empty() {
        g.k = args.k.clone();
    }
    for (values, slot) in [
        (&args.coupling, &mut g.coupling),
        (&args.q, &mut g.q),
        (&args.t, &mut g.t),
        (&args.epsilon, &mut g.epsilon),
        (&args.kt, &mut g.kt),
    ] {
        if !values.is_empty() {
            *slot = RealGrid::List(values.clone());
        }
    }
    if !args.n.is_empty() {
        g.n = args.n.clone();
    }
    if let Some(s) = args.samples {
        config.protocol.samples = Some(s);
    }
    if let Some(s) = args.post_growth_sweeps {
        config.protocol.post_growth_sweeps = s;
    }
    if !args.artifacts.is_empty() {
        config.outputs.artifacts = args.artifacts.clone();
    }
    if let Some(bin) = args.dump_bin {
        config.outputs.dump_bin = Some(bin);
        if !config.wants(Artifact::Dumps) {
            config.outputs.artifacts.push(Artifact::Dumps);
        }
    }
    if let Some(m) = args.max_dumps {
        config.outputs.max_dumps = m;
    }
    execute(config, &args.run)
}

fn analyze_cmd(args: AnalyzeArgs) -> Result<()> {
    let task = AnalyzeTask::from(args.task);
    let dir = output_dir(args.out.as_deref(), None);
    let input = args
        .input
        .clone()
        .unwrap_or_else(|| dir.join(task.input_file()));
    let text =
        fs::read_to_string(&input).with_context(|| format!("reading {}", input.display()))?;
    let grid = match args.tc_grid {
        Some(tc) => {
            let standard = GridAxis::new(0.25, 5.0, 0.25)?;
            let spec = GridSpec {
                tc,
                nu: args.nu_grid.unwrap_or(standard),
                gamma: args.gamma_grid.unwrap_or(standard),
            };
            spec.validate()?;
            Some(spec)
        }
        None => None,
    };
    let options = AnalyzeOptions {
        grid,
        axis: args.axis.map(|a| match a {
            AxisArg::Q => PhaseAxis::Q,
            AxisArg::T => PhaseAxis::T,
        }),
        methods: args.methods,
    };
    let files =
        analyze(task, &text, &options).with_context(|| format!("analyzing {}", input.display()))?;
    for path in write_artifacts(&dir, &files, args.overwrite)? {
        println!("{}", path.display());
    }
    Ok(())
}

fn oracle_check(args: OracleArgs) -> Result<bool> {
    let defaults = CheckSuite::default();
    let suite = CheckSuite {
        seed: args.seed.unwrap_or(defaults.seed),
        engine_kt_scale: args.kt_scale,
        ..defaults
    };
    let scope = match args.scope {
        ScopeArg::Equilibrium => CheckScope::Equilibrium,
        ScopeArg::Absorption => CheckScope::Absorption,
        ScopeArg::All => CheckScope::All,
    };
    let report = suite.run(scope)?;
    for e in &report.entries {
        println!(
            "[{}] {}: observed {:.6}, expected {:.6}, statistic {:.4} (threshold {})",
            if e.pass { "PASS" } else { "FAIL" },
            e.name,
            e.observed,
            e.expected,
            e.statistic,
            e.threshold
        );
    }
    let failed = report.entries.iter().filter(|e| !e.pass).count();
    println!("{} checks, {failed} failed", report.entries.len());
    Ok(report.pass())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Generate(args) => generate(args).map(|()| true),
        Command::Sweep(args) => load_config(&args.config)
            .and_then(|c| execute(c, &args.run))
            .map(|()| true),
        Command::Analyze(args) => analyze_cmd(args).map(|()| true),
        Command::OracleCheck(args) => oracle_check(args),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
