use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};
use srlab::manifest::{desk_manifest, full_figure_manifest, ExperimentManifest};
use srlab::report::write_json;
use srlab::runner::{run_sweep, RunOptions};
use srlab::single::{self, GenParams};
use srlab_core::hp_numeric::{parse_decimal, Precision};
use srlab_core::suites::SuiteConfig;
use srlab_core::{Domain, Layout};

/// Every flag can also be set through an `SRLAB_`-prefixed environment variable.
#[derive(Parser, Debug)]
#[command(name = "srlab", version, about = "Clustered-node Vandermonde spectra experiments")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct Common {
    /// Manifest (sweep) or configuration file (other subcommands).
    #[arg(long, global = true, env = "SRLAB_MANIFEST")]
    manifest: Option<PathBuf>,
    /// Output directory; reports go to stdout when absent.
    #[arg(long, global = true, env = "SRLAB_OUT")]
    out: Option<PathBuf>,
    /// Fixed working precision instead of the per-point policy.
    #[arg(long, global = true, env = "SRLAB_PRECISION_BITS")]
    precision_bits: Option<u32>,
    #[arg(long, global = true, env = "SRLAB_WORKERS")]
    workers: Option<usize>,
    #[arg(long, global = true, env = "SRLAB_SEED")]
    seed: Option<u64>,
    /// Constant multiplying the lower-bound shape.
    #[arg(long, global = true, env = "SRLAB_C1", default_value = "1")]
    c1: String,
    /// Stand-in for the unquantified window constant: in window needs N·θ ≥ floor·s.
    #[arg(long, global = true, env = "SRLAB_WINDOW_FLOOR", default_value_t = srlab_core::bound_models::DEFAULT_WINDOW_FLOOR)]
    window_floor: u32,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Write a validated configuration, or a manifest template with --template.
    GenConfig(GenArgs),
    /// Run every point of a manifest grid.
    Sweep,
    /// Full singular spectrum, bounds and level counts of one configuration.
    Spectrum,
    /// Bound report of one configuration.
    Bounds,
    /// Prolate eigenvalues of a line-domain configuration.
    Prolate,
    /// Randomized inequality suites.
    Inequalities {
        #[arg(long, default_value_t = 500)]
        instances: usize,
        #[arg(long, default_value_t = 5)]
        max_ell: usize,
        #[arg(long, default_value = "1")]
        bernstein_c: String,
    },
    /// Distance between the scaled Vandermonde Gram spectrum and the prolate one.
    LimitCheck {
        #[arg(long, value_delimiter = ',', default_value = "10,50,250")]
        n_list: Vec<usize>,
    },
}

#[derive(Args, Debug)]
struct GenArgs {
    /// Emit a manifest template (`desk` or `full`) instead of a configuration.
    #[arg(long)]
    template: Option<String>,
    #[arg(long, default_value_t = 2)]
    s: usize,
    #[arg(long, default_value_t = 2)]
    ell: usize,
    #[arg(long, default_value = "ell-1")]
    tau: String,
    #[arg(long, default_value = "1e-3")]
    delta: String,
    #[arg(long)]
    theta: Option<String>,
    #[arg(long = "N", default_value_t = 100)]
    n: usize,
    #[arg(long, default_value_t = 1)]
    clusters: usize,
    #[arg(long, default_value = "equispaced-in-cluster")]
    layout: Layout,
    #[arg(long, default_value = "periodic")]
    domain: String,
    /// Comma-separated cluster sizes.
    #[arg(long, value_delimiter = ',')]
    multiplicities: Option<Vec<usize>>,
}

fn options(c: &Common) -> RunOptions {
    RunOptions {
        precision_bits: c.precision_bits,
        workers: c.workers,
        seed: c.seed,
        c1: c.c1.clone(),
        window_floor: c.window_floor,
        ..RunOptions::default()
    }
}

fn emit<T: serde::Serialize>(out: Option<&Path>, name: &str, value: &T) -> anyhow::Result<()> {
    match out {
        Some(dir) => {
            std::fs::create_dir_all(dir)?;
            write_json(&dir.join(name), value)
        }
        None => {
            println!("{}", serde_json::to_string_pretty(value)?);
            Ok(())
        }
    }
}

fn input(c: &Common) -> anyhow::Result<&Path> {
    c.manifest.as_deref().context("--manifest <path> is required")
}

fn run(cli: Cli) -> anyhow::Result<bool> {
    let opts = options(&cli.common);
    let out = cli.common.out.as_deref();
    match cli.command {
        Command::GenConfig(g) => {
            if let Some(t) = g.template {
                let m = match t.as_str() {
                    "desk" => desk_manifest(),
                    "full" => full_figure_manifest(),
                    other => bail!("unknown template {other:?}; expected desk or full"),
                };
                emit(out, "manifest.json", &m)?;
                return Ok(true);
            }
            let domain = match g.domain.as_str() {
                "periodic" => Domain::Periodic,
                "line" => Domain::Line,
                other => bail!("unknown domain {other:?}"),
            };
            let params = GenParams {
                s: g.s,
                ell: g.ell,
                tau: g.tau,
                delta: g.delta,
                theta: g.theta,
                n: g.n,
                clusters: g.clusters,
                layout: g.layout,
                domain,
                seed: cli.common.seed.unwrap_or(0),
                multiplicities: g.multiplicities,
            };
            emit(out, "config.json", &single::gen_config(&params, &opts)?)?;
            Ok(true)
        }
        Command::Sweep => {
            let path = input(&cli.common)?;
            let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            let manifest = ExperimentManifest::from_json(&text).with_context(|| path.display().to_string())?;
            let dir = out.map(Path::to_path_buf).unwrap_or_else(|| PathBuf::from("results").join(&manifest.experiment_id));
            let summary = run_sweep(&manifest, &dir, &opts)?;
            println!("{}", serde_json::to_string_pretty(&summary)?);
            Ok(summary.failed == 0)
        }
        Command::Spectrum => {
            let cfg = single::load_path(input(&cli.common)?, &opts)?;
            let report = single::run_spectrum(&cfg, &opts)?;
            emit(out, "spectrum.json", &report)?;
            Ok(true)
        }
        Command::Bounds => {
            let cfg = single::load_path(input(&cli.common)?, &opts)?;
            emit(out, "bounds.json", &single::run_bounds(&cfg, &opts)?)?;
            Ok(true)
        }
        Command::Prolate => {
            let cfg = single::load_path(input(&cli.common)?, &opts)?;
            emit(out, "prolate.json", &single::run_prolate(&cfg, &opts)?)?;
            Ok(true)
        }
        Command::Inequalities { instances, max_ell, bernstein_c } => {
            let mut suite = SuiteConfig {
                instances,
                max_ell,
                bernstein_c: parse_decimal(&bernstein_c, Precision::default())?,
                ..SuiteConfig::default()
            };
            if let Some(seed) = cli.common.seed {
                suite.seed = seed;
            }
            let pool = rayon::ThreadPoolBuilder::new().num_threads(cli.common.workers.unwrap_or(0)).build()?;
            let report = pool.install(|| single::run_inequalities(&suite))?;
            for t in &report.tallies {
                eprintln!("{:<18} {:>5} instances  {:>3} violations", t.check, t.instances, t.violations);
            }
            eprintln!("salem spread {:.3e}  riemann max ratio {:.3e}", report.salem.spread, report.riemann_max_ratio);
            emit(out, "inequalities.json", &report)?;
            Ok(report.all_hold())
        }
        Command::LimitCheck { n_list } => {
            let cfg = single::load_path(input(&cli.common)?, &opts)?;
            let report = single::run_limit_check(&cfg, &n_list)?;
            emit(out, "limit_check.json", &report)?;
            Ok(report.decreasing)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().filter_or("SRLAB_LOG", "warn")).init();
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
