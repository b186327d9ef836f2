use std::path::PathBuf;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};

use csboost::datasets::{gen_bayes, gen_two_clouds, Dataset, GaussParams, TwoCloudsGeometry};
use csboost::harness::{emit_report, run_experiment, ExperimentConfig, ReportKind, RunOptions, RunStore};

#[derive(Parser)]
#[command(name = "csboost", version, about = "Cost-sensitive boosting benchmark")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every cell of an experiment config and write a run store.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Worker threads (0 = all cores).
        #[arg(long, default_value_t = 1)]
        jobs: usize,
        /// Overrides the config seed.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Emit a report from a run store.
    Report {
        #[arg(long)]
        store: PathBuf,
        /// appendix_tables, delta_global, delta_by_cost, ca_surface, timing or all.
        #[arg(long)]
        kind: String,
        /// Output directory; defaults to `<store>/reports`.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Generate a synthetic dataset as CSV.
    Gen {
        #[arg(long, value_enum)]
        dataset: Generator,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        n_pos: Option<usize>,
        #[arg(long)]
        n_neg: Option<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Generator {
    Bayes,
    Twoclouds,
}

fn write_dataset(ds: &Dataset, path: &PathBuf) -> Result<()> {
    let mut w = csv::Writer::from_path(path).with_context(|| format!("creating {}", path.display()))?;
    let mut header: Vec<String> = (0..ds.n_features()).map(|j| format!("f{j}")).collect();
    if ds.points.is_some() {
        header.extend(["x".into(), "y".into()]);
    }
    header.push("label".into());
    w.write_record(&header)?;
    for i in 0..ds.len() {
        let mut row: Vec<String> = ds.features.row(i).iter().map(f64::to_string).collect();
        if let Some(points) = &ds.points {
            row.extend(points[i].iter().map(f64::to_string));
        }
        row.push(ds.labels[i].to_string());
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    match cli.command {
        Command::Run {
            config,
            out,
            jobs,
            seed,
        } => {
            let mut cfg = ExperimentConfig::load(&config)
                .with_context(|| format!("loading {}", config.display()))?;
            if let Some(s) = seed {
                cfg.seed = s;
            }
            let start = Instant::now();
            let store = run_experiment(&cfg, RunOptions { jobs })?;
            store.write(&out)?;
            let failures = store.failures().len();
            eprintln!(
                "{} records ({failures} failed) written to {} in {:.1}s",
                store.records.len(),
                out.display(),
                start.elapsed().as_secs_f64()
            );
        }
        Command::Report { store, kind, out } => {
            let kinds = if kind == "all" {
                ReportKind::ALL.to_vec()
            } else {
                vec![kind.parse::<ReportKind>()?]
            };
            let run = RunStore::read(&store).with_context(|| format!("reading {}", store.display()))?;
            let out = out.unwrap_or_else(|| store.join("reports"));
            for k in kinds {
                for f in emit_report(&run, k, &out)? {
                    println!("{}", f.display());
                }
            }
        }
        Command::Gen {
            dataset,
            out,
            n_pos,
            n_neg,
            seed,
        } => {
            let ds = match dataset {
                Generator::Bayes => gen_bayes(
                    n_pos.unwrap_or(250),
                    n_neg.unwrap_or(250),
                    &GaussParams::default(),
                    seed,
                )?,
                Generator::Twoclouds => gen_two_clouds(
                    n_pos.unwrap_or(500),
                    n_neg.unwrap_or(500),
                    &TwoCloudsGeometry::default(),
                    seed,
                )?,
            };
            if ds.is_empty() {
                bail!("generator produced no samples");
            }
            write_dataset(&ds, &out)?;
            eprintln!("{} samples written to {}", ds.len(), out.display());
        }
    }
    Ok(())
}
