//! Command-line front end: `run`, `sweep`, `theory`, `cases`.

use std::fs;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::cases::{generate_cases, load_case};
use crate::config::{Algo, OptimizerChoice, QuantizerChoice, RunConfig, ScheduleChoice};
use crate::error::{Result, SimError};
use crate::experiment::{grid_search, problem_for, run_batch_observed, RunSpec};
use crate::metrics::write_csv;
use crate::theory_report::{report_for, Overrides};
use crate::trace::format_round;

#[derive(Debug, Parser)]
#[command(
    name = "effadam",
    version,
    about = "Two-way quantized distributed Adam simulator"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run one configuration and write its metrics CSV.
    Run(RunArgs),
    /// Grid-search the step size over a set of cases.
    Sweep(SweepArgs),
    /// Evaluate the convergence and bit bounds for a configuration.
    Theory(TheoryArgs),
    /// Generate and save problem cases.
    Cases(CasesArgs),
}

/// Every [`RunConfig`] field as an optional flag; flags win over the file.
#[derive(Debug, Args, Default, Clone)]
pub struct ConfigArgs {
    /// TOML file with RunConfig fields.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Sets case_seed and noise_seed unless those are given explicitly.
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub run_id: Option<String>,
    #[arg(long)]
    pub algo: Option<Algo>,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub beta: Option<f64>,
    #[arg(long)]
    pub theta: Option<f64>,
    #[arg(long)]
    pub epsilon: Option<f64>,
    #[arg(long)]
    pub schedule: Option<ScheduleChoice>,
    #[arg(long)]
    pub rounds: Option<u64>,
    #[arg(long)]
    pub workers: Option<usize>,
    #[arg(long)]
    pub dim: Option<usize>,
    #[arg(long)]
    pub noise_variance: Option<f64>,
    #[arg(long)]
    pub case_seed: Option<u64>,
    #[arg(long)]
    pub noise_seed: Option<u64>,
    #[arg(long)]
    pub momentum: Option<f64>,
    #[arg(long)]
    pub norm_bits: Option<u32>,
    #[arg(long, allow_hyphen_values = true)]
    pub log_min_exp: Option<i32>,
    #[arg(long, allow_hyphen_values = true)]
    pub log_max_exp: Option<i32>,
    #[arg(long)]
    pub topk_fraction: Option<f64>,
    #[arg(long)]
    pub optimizer: Option<OptimizerChoice>,
    #[arg(long)]
    pub uplink: Option<QuantizerChoice>,
    #[arg(long)]
    pub downlink: Option<QuantizerChoice>,
    #[arg(long)]
    pub error_feedback: Option<bool>,
}

impl ConfigArgs {
    pub fn resolve(&self) -> Result<RunConfig> {
        let mut c = match &self.config {
            Some(path) => RunConfig::from_toml(&fs::read_to_string(path)?)?,
            None => RunConfig::default(),
        };
        if let Some(seed) = self.seed {
            c.case_seed = seed;
            c.noise_seed = seed;
        }
        macro_rules! apply {
            ($($field:ident),+) => { $(if let Some(v) = self.$field.clone() { c.$field = v; })+ };
        }
        macro_rules! apply_opt {
            ($($field:ident),+) => { $(if let Some(v) = self.$field.clone() { c.$field = Some(v); })+ };
        }
        apply!(
            algo,
            alpha,
            beta,
            theta,
            epsilon,
            schedule,
            rounds,
            workers,
            dim,
            noise_variance,
            case_seed,
            noise_seed,
            momentum,
            norm_bits,
            log_min_exp,
            log_max_exp,
            topk_fraction
        );
        apply_opt!(run_id, optimizer, uplink, downlink, error_feedback);
        c.validate()?;
        Ok(c)
    }
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[command(flatten)]
    pub config: ConfigArgs,
    /// CSV destination; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Also write a round trace here.
    #[arg(long)]
    pub trace: Option<PathBuf>,
    /// Use a saved case instead of generating one from case_seed.
    #[arg(long)]
    pub case_file: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub config: ConfigArgs,
    /// Comma-separated step sizes; defaults to 1e-5, 2e-5, ..., 100e-5.
    #[arg(long, value_delimiter = ',')]
    pub alphas: Vec<f64>,
    /// Comma-separated case seeds; defaults to 1..=20.
    #[arg(long, value_delimiter = ',')]
    pub cases: Vec<u64>,
    /// Directory for `grid.csv` and `best.csv`.
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct TheoryArgs {
    #[command(flatten)]
    pub config: ConfigArgs,
    /// Target accuracy for the iteration and bit bounds.
    #[arg(long, default_value_t = 1e-2)]
    pub target: f64,
    #[arg(long)]
    pub g_bound: Option<f64>,
    #[arg(long)]
    pub lipschitz: Option<f64>,
    #[arg(long)]
    pub f_gap: Option<f64>,
}

#[derive(Debug, Args)]
pub struct CasesArgs {
    #[arg(long)]
    pub out_dir: PathBuf,
    /// Comma-separated seeds; defaults to 1..=20.
    #[arg(long, value_delimiter = ',')]
    pub seeds: Vec<u64>,
    #[arg(long, default_value_t = 500)]
    pub dim: usize,
    #[arg(long, default_value_t = 0.1)]
    pub noise_variance: f64,
}

pub fn default_alpha_grid() -> Vec<f64> {
    (1..=100).map(|i| i as f64 * 1e-5).collect()
}

fn open_out<'a>(path: &Option<PathBuf>, stdout: &'a mut dyn Write) -> Result<Box<dyn Write + 'a>> {
    Ok(match path {
        Some(p) => Box::new(std::io::BufWriter::new(fs::File::create(p)?)),
        None => Box::new(stdout),
    })
}

pub fn execute(cli: Cli, stdout: &mut dyn Write) -> Result<()> {
    match cli.command {
        Command::Run(args) => {
            let config = args.config.resolve()?;
            let spec = RunSpec::from_config(&config)?;
            let problem = match &args.case_file {
                Some(path) => {
                    let (_, p) = load_case(path)?;
                    if p.a.cols() != config.dim {
                        return Err(SimError::config(format!(
                            "case file has d = {}, config has dim = {}",
                            p.a.cols(),
                            config.dim
                        )));
                    }
                    p
                }
                None => problem_for(&config),
            };
            let mut trace_out = match &args.trace {
                Some(p) => Some(std::io::BufWriter::new(fs::File::create(p)?)),
                None => None,
            };
            let rows = run_batch_observed(&problem, &[spec], &mut |_, _, out, _| {
                if let Some(w) = trace_out.as_mut() {
                    writeln!(w, "{}", format_round(&out.trace))?;
                }
                Ok(())
            })?
            .pop()
            .expect("one spec")?;
            if let Some(mut w) = trace_out {
                w.flush()?;
            }
            let mut out = open_out(&args.out, stdout)?;
            write_csv(&mut out, &rows)?;
            out.flush()?;
        }
        Command::Sweep(args) => {
            let config = args.config.resolve()?;
            let alphas = if args.alphas.is_empty() {
                default_alpha_grid()
            } else {
                args.alphas
            };
            let cases = if args.cases.is_empty() {
                crate::cases::STANDARD_CASES.collect()
            } else {
                args.cases
            };
            let g = grid_search(&config, &alphas, &cases)?;
            writeln!(stdout, "algo = {}", g.algo)?;
            writeln!(stdout, "cases = {}", cases.len())?;
            writeln!(stdout, "best_alpha = {:e}", g.best_alpha)?;
            writeln!(
                stdout,
                "alpha,mean_final_grad_norm_sq,median_final_grad_norm_sq,diverged"
            )?;
            let mut table = String::new();
            for r in &g.table {
                let line = format!(
                    "{:e},{:e},{:e},{}\n",
                    r.alpha, r.mean_final, r.median_final, r.diverged
                );
                table.push_str(&line);
                stdout.write_all(line.as_bytes())?;
            }
            if let Some(dir) = args.out_dir {
                fs::create_dir_all(&dir)?;
                fs::write(
                    dir.join("grid.csv"),
                    format!(
                        "alpha,mean_final_grad_norm_sq,median_final_grad_norm_sq,diverged\n{table}"
                    ),
                )?;
                let rows: Vec<_> = g
                    .best
                    .runs
                    .iter()
                    .filter_map(|r| r.as_ref().ok())
                    .flatten()
                    .cloned()
                    .collect();
                let mut w = std::io::BufWriter::new(fs::File::create(dir.join("best.csv"))?);
                write_csv(&mut w, &rows)?;
                w.flush()?;
            }
        }
        Command::Theory(args) => {
            let config = args.config.resolve()?;
            let over = Overrides {
                g_bound: args.g_bound,
                lipschitz: args.lipschitz,
                f_gap: args.f_gap,
            };
            stdout.write_all(report_for(&config, args.target, over)?.as_bytes())?;
        }
        Command::Cases(args) => {
            let seeds: Vec<u64> = if args.seeds.is_empty() {
                crate::cases::STANDARD_CASES.collect()
            } else {
                args.seeds
            };
            for path in generate_cases(&args.out_dir, &seeds, args.dim, args.noise_variance)? {
                writeln!(stdout, "{}", path.display())?;
            }
        }
    }
    Ok(())
}
