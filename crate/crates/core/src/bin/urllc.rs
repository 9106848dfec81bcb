use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};

use urllc::harness::{
    default_table1, run_monte_carlo, solve_one, sweep, write_records, write_sweep, write_table1,
    write_timings, Axis, ExperimentConfig, Objective,
};
use urllc::rate::make_regime;

#[derive(Parser)]
#[command(name = "urllc", version, about = "Finite-blocklength beamforming experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print the SINR thresholds of a regime as JSON.
    Thresholds {
        #[arg(long, default_value_t = 1e-5)]
        epsilon: f64,
        #[arg(long, default_value_t = 128)]
        n: u32,
        #[arg(long, default_value_t = 256)]
        d: u32,
    },
    /// Series versus bisection accuracy table as CSV.
    Table1 {
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Solve one sampled instance and dump it as JSON.
    Solve(RunArgs),
    /// Monte Carlo run: records.csv, timings.csv, summary.json.
    Mc(RunArgs),
    /// Sweep over one or two list-valued axes: sweep.csv, records.csv, timings.csv.
    Sweep(RunArgs),
}

#[derive(Args)]
struct RunArgs {
    /// JSON configuration; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads, 0 for all cores.
    #[arg(long, default_value_t = 0)]
    workers: usize,
    /// Output directory; stdout when omitted for `solve`.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    objective: Option<Objective>,
    #[arg(long, value_delimiter = ',')]
    snr: Vec<f64>,
    #[arg(long, value_delimiter = ',')]
    k: Vec<usize>,
    #[arg(long, value_delimiter = ',')]
    n: Vec<u32>,
    #[arg(long, value_delimiter = ',')]
    epsilon: Vec<f64>,
    #[arg(long)]
    trials: Option<usize>,
    /// Skip the parameter range checks.
    #[arg(long)]
    force: bool,
}

fn axis<T: Clone>(values: &[T]) -> Option<Axis<T>> {
    match values {
        [] => None,
        [v] => Some(Axis::One(v.clone())),
        _ => Some(Axis::Many(values.to_vec())),
    }
}

impl RunArgs {
    fn config(&self) -> Result<ExperimentConfig> {
        let mut cfg = match &self.config {
            Some(p) => ExperimentConfig::load(p)?,
            None => ExperimentConfig::default(),
        };
        if let Some(s) = self.seed {
            cfg.seed = Some(s);
        }
        if let Some(o) = self.objective {
            cfg.objective = o;
        }
        if let Some(a) = axis(&self.snr) {
            cfg.snr_db = a;
        }
        if let Some(a) = axis(&self.k) {
            cfg.k_users = a;
        }
        if let Some(a) = axis(&self.n) {
            cfg.blocklength = a;
        }
        if let Some(a) = axis(&self.epsilon) {
            cfg.epsilon = a;
        }
        if let Some(t) = self.trials {
            cfg.trials = t;
        }
        cfg.force |= self.force;
        cfg.validate()?;
        Ok(cfg)
    }

    fn out_dir(&self) -> Result<&Path> {
        let dir = self.out.as_deref().unwrap_or(Path::new("."));
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        Ok(dir)
    }
}

fn create(dir: &Path, name: &str) -> Result<BufWriter<File>> {
    let path = dir.join(name);
    let f = File::create(&path).with_context(|| format!("creating {}", path.display()))?;
    Ok(BufWriter::new(f))
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::Thresholds { epsilon, n, d } => {
            let regime = make_regime(epsilon, n, d, false)?;
            println!("{}", serde_json::to_string_pretty(&regime)?);
        }
        Command::Table1 { out } => {
            let rows = default_table1()?;
            match out {
                Some(p) => {
                    let f = File::create(&p).with_context(|| format!("creating {}", p.display()))?;
                    write_table1(BufWriter::new(f), &rows)?;
                }
                None => write_table1(io::stdout().lock(), &rows)?,
            }
        }
        Command::Solve(args) => {
            let cfg = args.config()?;
            let report = solve_one(&cfg, cfg.seed()?)?;
            let text = serde_json::to_string_pretty(&report)?;
            match &args.out {
                Some(_) => writeln!(create(args.out_dir()?, "solution.json")?, "{text}")?,
                None => println!("{text}"),
            }
        }
        Command::Mc(args) => {
            let cfg = args.config()?;
            let (summary, records) = run_monte_carlo(&cfg, args.workers)?;
            let dir = args.out_dir()?;
            write_records(create(dir, "records.csv")?, &[(None, &records)])?;
            write_timings(create(dir, "timings.csv")?, &[(None, &records)])?;
            let mut f = create(dir, "summary.json")?;
            writeln!(f, "{}", serde_json::to_string_pretty(&summary)?)?;
            eprintln!(
                "feasible {}/{} ({:.2}%)",
                summary.feasible,
                summary.trials,
                100.0 * summary.feasible_prob
            );
        }
        Command::Sweep(args) => {
            let cfg = args.config()?;
            let res = sweep(&cfg, args.workers)?;
            let dir = args.out_dir()?;
            write_sweep(create(dir, "sweep.csv")?, &res.rows)?;
            let cells: Vec<_> = res
                .runs
                .iter()
                .map(|r| (Some(r.cell), r.records.as_slice()))
                .collect();
            write_records(create(dir, "records.csv")?, &cells)?;
            write_timings(create(dir, "timings.csv")?, &cells)?;
        }
    }
    Ok(())
}
