use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use ucp_trunc::exec::set_jobs;
use ucp_trunc::ucpmetric::MetricConfig;
use ucp_trunc_cli::{
    duality_corpus, kernel_report, one_off_distance, parse_sweep, run_sweep, CliError, ExperimentConfig, Side,
    VariantSpec,
};

#[derive(Parser)]
#[command(name = "ucptrunc", version, about = "Gromov-Hausdorff sweeps over spectral truncations")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Certified constants, GH upper bounds and empirical distortion per level.
    Sweep {
        #[command(flatten)]
        exp: ExperimentArgs,
        /// Run levels in parallel on this many threads.
        #[arg(long)]
        jobs: Option<usize>,
    },
    /// Roundtrip kernel diagnostics per level.
    Kernels {
        #[command(flatten)]
        exp: ExperimentArgs,
    },
    /// Distance between two serialized UCP maps.
    Distance {
        #[arg(long)]
        a: PathBuf,
        #[arg(long)]
        b: PathBuf,
        #[arg(long)]
        variant: String,
        #[arg(long)]
        level: usize,
        #[arg(long, value_enum, default_value = "truncated")]
        side: Side,
        #[arg(long, default_value_t = 1)]
        m: usize,
        #[arg(long, default_value_t = 6)]
        depth: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 1e-4)]
        tol: f64,
    },
    /// PSD versus positive-pairing checks on random Toeplitz matrices.
    Duality {
        #[arg(long, default_value_t = 200)]
        count: usize,
        #[arg(long, default_value_t = 64)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Write the report here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct ExperimentArgs {
    /// JSON experiment configuration; flags override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    variant: Option<String>,
    /// Levels as `2,4,8` or `1..8`.
    #[arg(long)]
    sweep: Option<String>,
    #[arg(long)]
    m: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    samples_each: Option<usize>,
    #[arg(long)]
    depth: Option<usize>,
    /// Write 0 in the runtime column.
    #[arg(long)]
    no_runtime: bool,
}

impl ExperimentArgs {
    fn resolve(self) -> Result<ExperimentConfig, CliError> {
        let mut cfg = match (&self.config, &self.variant) {
            (Some(path), _) => ExperimentConfig::load(path)?,
            (None, Some(v)) => ExperimentConfig::new(VariantSpec::parse(v)?),
            (None, None) => return Err(CliError::Config("either --config or --variant is required".into())),
        };
        if self.config.is_some() {
            if let Some(v) = &self.variant {
                cfg.variant = VariantSpec::parse(v)?;
            }
        }
        if let Some(s) = &self.sweep {
            cfg.sweep = parse_sweep(s)?;
        }
        cfg.m = self.m.unwrap_or(cfg.m);
        cfg.seed = self.seed.unwrap_or(cfg.seed);
        cfg.samples_each = self.samples_each.unwrap_or(cfg.samples_each);
        cfg.depth = self.depth.unwrap_or(cfg.depth);
        if let Some(o) = self.out {
            cfg.out = o;
        }
        if self.no_runtime {
            cfg.record_runtime = false;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn run(cli: Cli) -> Result<u8, CliError> {
    match cli.command {
        Command::Sweep { exp, jobs } => {
            let cfg = exp.resolve()?;
            set_jobs(jobs);
            let out = run_sweep(&cfg, jobs.is_some())?;
            for l in &out.levels {
                if let Some(e) = &l.error {
                    eprintln!("level {}: {e}", l.level);
                }
            }
            println!("{}", out.csv.display());
            Ok(if out.all_failed() { 2 } else { 0 })
        }
        Command::Kernels { exp } => {
            let cfg = exp.resolve()?;
            let levels = kernel_report(&cfg)?;
            println!("{} levels written to {}", levels.len(), ucp_trunc_cli::tools::kernel_path(&cfg).display());
            Ok(0)
        }
        Command::Distance { a, b, variant, level, side, m, depth, seed, tol } => {
            let read = |p: &PathBuf| std::fs::read_to_string(p).map_err(|e| CliError::Config(format!("{}: {e}", p.display())));
            let metric = MetricConfig { m, depth, seed, tol_obj: tol, ..MetricConfig::default() };
            let r = one_off_distance(&read(&a)?, &read(&b)?, VariantSpec::parse(&variant)?.at(level), side, &metric)?;
            println!("{}", serde_json::to_string_pretty(&r)?);
            Ok(0)
        }
        Command::Duality { count, trials, seed, out } => {
            let r = duality_corpus(count, trials, seed)?;
            let text = serde_json::to_string_pretty(&r)?;
            match out {
                Some(p) => std::fs::write(p, text)?,
                None => println!("{text}"),
            }
            eprintln!("agreement {}/{}", r.agreements, r.count);
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
