use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use mfsim::experiment::{ExperimentOptions, Preset, DESK_ROUNDS, FULL_ROUNDS};
use mfsim::pipeline::{analyze_dir, describe_lags, run_cell, write_cell, write_event_log, DEFAULT_DTS};
use mfsim::{emit_plot_data, load_config, run_experiment, Figure};
use mfsim_core::RunConfig;

#[derive(Parser)]
#[command(name = "mfsim", version, about = "Order-book market model with long-memory order signs")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run one parameter set and write its returns and fits.
    Simulate {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        rounds: Option<usize>,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        /// Worker threads (0 = all cores).
        #[arg(long, default_value_t = 0)]
        jobs: usize,
        /// Also write the event log of round 0 to this file.
        #[arg(long)]
        events: Option<PathBuf>,
    },
    /// Re-fit the stored returns in a result directory.
    Analyze { dir: PathBuf },
    /// Run a preset: standard, case1, case2, case3, table1, grid.
    Experiment {
        preset: String,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        rounds: Option<usize>,
        /// Publication-size run (20 rounds per cell).
        #[arg(long)]
        full: bool,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        jobs: usize,
        /// Comma-separated α_x values replacing the preset's.
        #[arg(long, value_delimiter = ',')]
        alphas: Option<Vec<f64>>,
        /// Comma-separated H_s values replacing the preset's.
        #[arg(long, value_delimiter = ',')]
        hursts: Option<Vec<f64>>,
    },
    /// Write plot-ready data for fig1..fig5 from stored results.
    Plotdata {
        figure: String,
        results: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn base_config(path: Option<&PathBuf>) -> Result<RunConfig, String> {
    match path {
        Some(p) => load_config(p).map_err(|e| e.to_string()),
        None => Ok(RunConfig::default()),
    }
}

fn run(cli: Cli) -> Result<(), String> {
    match cli.cmd {
        Cmd::Simulate { config, seed, rounds, out, jobs, events } => {
            let mut cfg = base_config(config.as_ref())?;
            cfg.seed = seed.unwrap_or(cfg.seed);
            cfg.rounds = rounds.unwrap_or(cfg.rounds);
            cfg.validate().map_err(|e| e.to_string())?;
            let pool = rayon::ThreadPoolBuilder::new().num_threads(jobs).build().map_err(|e| e.to_string())?;
            let (cell, cols) = pool.install(|| run_cell(&cfg, &DEFAULT_DTS)).map_err(|e| e.to_string())?;
            write_cell(&out, &cell, &DEFAULT_DTS, &cols).map_err(|e| e.to_string())?;
            if let Some(p) = events {
                write_event_log(&p, &cfg, 0).map_err(|e| e.to_string())?;
            }
            print!("{}", describe_lags(&cell.lags));
            for e in &cell.errors {
                eprintln!("warning: {e}");
            }
            println!("wrote {}", out.display());
            Ok(())
        }
        Cmd::Analyze { dir } => {
            let lags = analyze_dir(&dir).map_err(|e| e.to_string())?;
            print!("{}", describe_lags(&lags));
            Ok(())
        }
        Cmd::Experiment { preset, config, seed, rounds, full, out, jobs, alphas, hursts } => {
            let p = Preset::parse(&preset).ok_or_else(|| format!("unknown preset `{preset}`"))?;
            let mut opts = ExperimentOptions::new(out.unwrap_or_else(|| PathBuf::from(format!("results/{p}"))));
            if let Some(c) = config.as_ref() {
                opts.base = base_config(Some(c))?;
            }
            opts.base.rounds = rounds.unwrap_or(if full { FULL_ROUNDS } else { DESK_ROUNDS });
            opts.base.seed = seed.unwrap_or(opts.base.seed);
            opts.base.validate().map_err(|e| e.to_string())?;
            opts.jobs = jobs;
            opts.alphas = alphas;
            opts.hursts = hursts;
            let o = run_experiment(p, &opts).map_err(|e| e.to_string())?;
            let failed = o.failed();
            println!("{}: {} cells, {} failed, results in {}", p, o.cells.len(), failed.len(), opts.out.display());
            if let Some(Ok(s)) = &o.surface {
                let c = s.coefficients;
                println!(
                    "alpha_r = {:.3} + {:.3} a + {:.3} H + {:.3} aH  (R^2 {:.3})",
                    c[0], c[1], c[2], c[3], s.r_squared
                );
            }
            for c in &o.collapse {
                println!("{}: max KS {:.4}", c.group, c.max_ks());
            }
            if failed.is_empty() {
                Ok(())
            } else {
                for (name, e) in &failed {
                    eprintln!("failed: {name}: {e}");
                }
                Err(format!("{} cell(s) failed", failed.len()))
            }
        }
        Cmd::Plotdata { figure, results, out } => {
            let f = Figure::parse(&figure).ok_or_else(|| format!("unknown figure `{figure}` (fig1..fig5)"))?;
            let out = out.unwrap_or_else(|| results.join("plots").join(f.name()));
            let files = emit_plot_data(&results, f, &out).map_err(|e| e.to_string())?;
            println!("wrote {} files to {}", files.len(), out.display());
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
