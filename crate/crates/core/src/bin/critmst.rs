use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use critmst::experiments::{
    run_critical_window, run_dimension, run_generate, run_mst, run_scaling, run_validate, summary_path, Experiment,
    ExperimentConfig, ExperimentOutput,
};
use critmst::Error;

#[derive(Parser)]
#[command(name = "critmst", version, about = "MST scaling experiments on heavy-tailed rank-1 random graphs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sample a percolation ensemble and write its edge list.
    Generate(Common),
    /// MST of the giant of an ensemble; writes the tree file.
    Mst(Common),
    /// Typical-distance scaling of the giant's MST across n.
    Scaling(Common),
    /// Nested Hausdorff distances and surplus diagnostics across lambda.
    CriticalWindow(Common),
    /// Run the oracle suite; exits 1 on any failure.
    Validate(Common),
    /// Covering-number dimension diagnostic of the giant's MST.
    Dimension(Common),
}

#[derive(Args)]
struct Common {
    /// Flat `key = value` config file.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    replicas: Option<String>,
    /// Output path; `<out>.summary.csv` is written alongside.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads (defaults to all cores).
    #[arg(long)]
    threads: Option<usize>,
    /// Comma-separated vertex counts.
    #[arg(long)]
    n: Option<String>,
    #[arg(long)]
    tau: Option<String>,
    #[arg(long)]
    c: Option<String>,
    /// Comma-separated lambda values.
    #[arg(long)]
    lambda: Option<String>,
    #[arg(long)]
    delta: Option<String>,
    #[arg(long)]
    delta1: Option<String>,
    #[arg(long)]
    pairs: Option<String>,
    /// product-full-L or product-minus-ell.
    #[arg(long)]
    kernel: Option<String>,
    #[arg(long)]
    weights_file: Option<PathBuf>,
    #[arg(long)]
    input: Option<PathBuf>,
    /// Comma-separated hop radii.
    #[arg(long)]
    scales: Option<String>,
    #[arg(long)]
    max_expected_edges: Option<String>,
    /// Also render an SVG plot next to the CSV.
    #[arg(long)]
    svg: bool,
    /// Extra `key=value` overrides, applied last.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

impl Common {
    fn config(&self, exp: Experiment) -> Result<ExperimentConfig, Error> {
        let mut cfg = match &self.config {
            Some(p) => ExperimentConfig::from_file(exp, p)?,
            None => ExperimentConfig::defaults(exp),
        };
        let path_str = |p: &Option<PathBuf>| p.as_ref().map(|x| x.to_string_lossy().into_owned());
        let flags: [(&str, Option<String>); 15] = [
            ("seed", self.seed.map(|s| s.to_string())),
            ("replicas", self.replicas.clone()),
            ("out", path_str(&self.out)),
            ("n", self.n.clone()),
            ("tau", self.tau.clone()),
            ("c", self.c.clone()),
            ("lambda", self.lambda.clone()),
            ("delta", self.delta.clone()),
            ("delta1", self.delta1.clone()),
            ("pairs", self.pairs.clone()),
            ("kernel", self.kernel.clone()),
            ("weights_file", path_str(&self.weights_file)),
            ("input", path_str(&self.input)),
            ("scales", self.scales.clone()),
            ("max_expected_edges", self.max_expected_edges.clone()),
        ];
        for (k, v) in flags {
            if let Some(v) = v {
                cfg.set(k, &v)?;
            }
        }
        if self.svg {
            cfg.svg = true;
        }
        for kv in &self.set {
            let (k, v) = kv
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("--set expects KEY=VALUE, got `{kv}`")))?;
            cfg.set(k, v)?;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn is_config_error(e: &Error) -> bool {
    matches!(
        e,
        Error::Config(_)
            | Error::InvalidParameter { .. }
            | Error::InvalidWeights(_)
            | Error::Parse { .. }
            | Error::EdgeBudgetExceeded { .. }
    )
}

fn print_output(cfg: &ExperimentConfig, o: &ExperimentOutput) {
    match &cfg.out {
        Some(out) => eprintln!("wrote {} and {}", out.display(), summary_path(out).display()),
        None => {
            let mut stdout = std::io::stdout().lock();
            let _ = stdout.write_all(o.data.to_csv().as_bytes());
            eprint!("{}", o.summary.to_csv());
        }
    }
}

fn run(cmd: &Command) -> Result<ExitCode, Error> {
    let (exp, common) = match cmd {
        Command::Generate(c) => (Experiment::Generate, c),
        Command::Mst(c) => (Experiment::Mst, c),
        Command::Scaling(c) => (Experiment::Scaling, c),
        Command::CriticalWindow(c) => (Experiment::CriticalWindow, c),
        Command::Validate(c) => (Experiment::Validate, c),
        Command::Dimension(c) => (Experiment::Dimension, c),
    };
    let cfg = common.config(exp)?;
    if let Some(t) = common.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global()
            .map_err(|e| Error::Config(format!("cannot set thread count: {e}")))?;
    }
    log::info!("running {exp} with seed {}", cfg.seed);
    match exp {
        Experiment::Generate => {
            let (ens, o) = run_generate(&cfg)?;
            if cfg.out.is_none() {
                ens.write_edge_list_to(&mut std::io::stdout().lock())?;
                eprint!("{}", o.summary.to_csv());
            } else {
                print_output(&cfg, &o);
            }
        }
        Experiment::Mst => {
            let r = run_mst(&cfg)?;
            if cfg.out.is_none() {
                r.tree.write_to(&mut std::io::stdout().lock())?;
                eprint!("{}", r.output.summary.to_csv());
            } else {
                print_output(&cfg, &r.output);
            }
        }
        Experiment::Scaling => {
            let r = run_scaling(&cfg)?;
            print_output(&cfg, &r.output());
        }
        Experiment::CriticalWindow => {
            let r = run_critical_window(&cfg)?;
            print_output(&cfg, &r.output());
        }
        Experiment::Dimension => {
            let r = run_dimension(&cfg)?;
            print_output(&cfg, &r.output());
        }
        Experiment::Validate => {
            let report = run_validate(&cfg)?;
            for c in &report.checks {
                eprintln!(
                    "[{}] {} (seed {}): {}",
                    if c.passed { "PASS" } else { "FAIL" },
                    c.name,
                    c.seed,
                    c.detail
                );
            }
            print_output(&cfg, &report.output());
            if !report.passed() {
                return Ok(ExitCode::from(1));
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(&cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if is_config_error(&e) { 2 } else { 1 })
        }
    }
}
