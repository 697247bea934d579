use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use svqe_harness::{exact, io, report, run_experiment, sweep, ExperimentConfig, Result, SweepManifest};

#[derive(Parser)]
#[command(name = "svqe", version, about = "Seeded subspace-VQE experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every run of one experiment config.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Overrides `output_dir`.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Overrides `base_seed`.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Run a sweep manifest and write the aggregate tables.
    Sweep {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long, default_value_t = 1)]
        jobs: usize,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Skip runs that already finished successfully.
        #[arg(long)]
        resume: bool,
    },
    /// Diagonalize a model exactly.
    Exact {
        /// A model document or a run config.
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value = ".")]
        out: PathBuf,
        /// Lowest eigenpairs to compute iteratively instead of the full spectrum.
        #[arg(long, requires = "k_high")]
        k_low: Option<usize>,
        /// Highest eigenpairs to compute iteratively.
        #[arg(long, requires = "k_low")]
        k_high: Option<usize>,
    },
    /// Rebuild the aggregate tables of a results directory.
    Report { dir: PathBuf },
}

fn execute(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Run { config, out, seed } => {
            let mut c: ExperimentConfig = io::read_json(&config)?;
            if let Some(out) = out {
                c.output_dir = out;
            }
            if let Some(seed) = seed {
                c.base_seed = seed;
            }
            let summaries = run_experiment(&c)?;
            for s in &summaries {
                println!(
                    "run {:3}  cost {:.10}  F_sub {:.6}  F_trc {:.6}",
                    s.run_index,
                    s.final_cost.unwrap_or(f64::NAN),
                    s.f_sub.unwrap_or(f64::NAN),
                    s.f_trc.unwrap_or(f64::NAN)
                );
            }
        }
        Command::Sweep {
            manifest,
            jobs,
            out,
            resume,
        } => {
            let m: SweepManifest = io::read_json(&manifest)?;
            let out = out
                .or_else(|| m.output_dir.clone())
                .unwrap_or_else(|| PathBuf::from("results"));
            let outcome = sweep::execute_sweep(&m, &out, jobs, resume)?;
            println!(
                "{} runs executed, {} skipped, {} failed",
                outcome.executed, outcome.skipped, outcome.failed
            );
            for row in &outcome.report.fidelity {
                println!(
                    "{:<20} {:<11} K={} N_l={}  max F {:.6}  med F {:.6} ± {:.6}",
                    row.model, row.method, row.k, row.layers, row.max_f, row.med_f, row.med_f_err
                );
            }
        }
        Command::Exact {
            config,
            out,
            k_low,
            k_high,
        } => {
            let model = exact::load_model(&config)?;
            let file = exact::write_spectrum(&model, k_low.zip(k_high), &out)?;
            println!(
                "{}: {} eigenvalues, ground energy {:.12}",
                file.label,
                file.eigenvalues.len(),
                file.eigenvalues[0]
            );
        }
        Command::Report { dir } => {
            let r = report::generate(&dir)?;
            println!("{} runs in {} cells", r.summaries.len(), r.fidelity.len());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
