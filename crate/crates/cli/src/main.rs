//! Batch experiment driver.
//!
//! Exit codes: 0 success, 2 invalid input, 3 numerical failure,
//! 4 file integrity error.

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use pmlab_cli::config::ExperimentConfig;
use pmlab_cli::pipeline;
use pmlab_cli::report::{num, Csv};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "pmlab", version, about = "perceptual-manifold analysis experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// TOML experiment config; defaults are used when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override the config's output directory.
    #[arg(long)]
    output_dir: Option<PathBuf>,
    /// Override the config's master seed.
    #[arg(long)]
    seed: Option<u64>,
}

impl Common {
    fn load(&self) -> Result<ExperimentConfig> {
        let mut cfg = match &self.config {
            Some(path) => ExperimentConfig::load(path)?,
            None => ExperimentConfig::default(),
        };
        if let Some(dir) = &self.output_dir {
            cfg.output_dir = dir.clone();
        }
        if let Some(seed) = self.seed {
            cfg.seed = seed;
        }
        Ok(cfg)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Train the toy model family and emit the full report tree.
    ToyPipeline {
        #[command(flatten)]
        common: Common,
    },
    /// Monte Carlo vs analytic distance to random ellipsoids.
    Ellipsoid {
        #[command(flatten)]
        common: Common,
        /// Also write an SVG plot.
        #[arg(long)]
        svg: bool,
    },
    /// Sample a stored model's perceptual manifold.
    SamplePm {
        #[command(flatten)]
        common: Common,
        /// Model checkpoint.
        #[arg(long)]
        model: PathBuf,
        /// Target class index.
        #[arg(long)]
        class: usize,
        /// Number of attempts.
        #[arg(long, default_value_t = 1000)]
        n_samples: usize,
        /// Output sample-set file.
        #[arg(long)]
        output: PathBuf,
        /// Per-run CSV log path.
        #[arg(long)]
        log: Option<PathBuf>,
    },
    /// Dimension estimates for stored sample sets.
    Dim {
        #[command(flatten)]
        common: Common,
        /// Input sample-set files.
        #[arg(long, required = true, num_args = 1..)]
        input: Vec<PathBuf>,
        /// pr, 2nn or both.
        #[arg(long, default_value = "both")]
        estimator: String,
        /// Optional scaling grid, e.g. 250,500,1000.
        #[arg(long, value_delimiter = ',')]
        grid: Vec<usize>,
        /// Output CSV.
        #[arg(long)]
        output: PathBuf,
    },
    /// PGD attack and robust accuracy on a stored model and dataset.
    Attack {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        model: PathBuf,
        /// Labeled per-class sample-set files.
        #[arg(long, required = true, num_args = 1..)]
        data: Vec<PathBuf>,
        #[arg(long, default_value_t = 0.06)]
        epsilon: f64,
        /// Output per-point CSV.
        #[arg(long)]
        output: PathBuf,
    },
    /// Spectrum densities, alignment scores and radial PSDs.
    Spectral {
        #[command(flatten)]
        common: Common,
        /// Manifold sample-set files (extends the config list).
        #[arg(long, num_args = 0..)]
        pm: Vec<PathBuf>,
        /// Data sample-set files (extends the config list).
        #[arg(long, num_args = 0..)]
        data: Vec<PathBuf>,
    },
    /// Convert sample sets between the binary format and CSV.
    Convert {
        /// Input file (.pmss or .csv, by extension).
        #[arg(long)]
        input: PathBuf,
        /// Output file (the opposite format).
        #[arg(long)]
        output: PathBuf,
        /// Seed recorded when building a binary set from CSV.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Source tag recorded when building a binary set from CSV.
        #[arg(long, default_value = "converted")]
        source: String,
        /// Class label recorded when building a binary set from CSV.
        #[arg(long)]
        label: Option<u32>,
    },
}

fn run() -> Result<()> {
    match Cli::parse().command {
        Command::ToyPipeline { common } => {
            let cfg = common.load()?;
            let out = pipeline::toy_pipeline(&cfg)?;
            for s in &out.summaries {
                println!(
                    "eps_train={:.3} clean={:.4} robust={:.4} pm_pr={:.2} pm_2nn={:.2} dist_noise={:.3} dist_nat={:.3}",
                    s.eps_train,
                    s.clean_accuracy,
                    s.robust_accuracy,
                    s.pm_pr_mean,
                    s.pm_2nn_mean,
                    s.dist_noise.mean_sq_dist,
                    s.dist_natural.mean_sq_dist
                );
            }
            println!("reports in {}", out.out_dir.display());
            Ok(())
        }
        Command::Ellipsoid { common, svg } => {
            let mut cfg = common.load()?;
            cfg.ellipsoid.svg |= svg;
            let rows = pipeline::ellipsoid_fig(&cfg)?;
            for r in &rows {
                println!(
                    "d={:4}  analytic={:9.3}  mc_boundary={:9.3} (+-{:.3})  mc_filled={:9.3}",
                    r.d, r.analytic, r.mc_boundary_mean, r.mc_boundary_sigma, r.mc_filled_mean
                );
            }
            println!("report in {}", cfg.resolved_output_dir().join("reports/ellipsoid.csv").display());
            Ok(())
        }
        Command::SamplePm {
            common,
            model,
            class,
            n_samples,
            output,
            log,
        } => {
            let cfg = common.load()?;
            let pga = cfg.pga.to_config()?;
            let model = pmlab::io::load_checkpoint(&model).map_err(anyhow::Error::from)?;
            let (set, records) =
                pmlab::sampler::sample_pm_detailed(&model, class, n_samples, &pga, cfg.seed)
                    .map_err(anyhow::Error::from)?;
            if let Some(parent) = output.parent() {
                std::fs::create_dir_all(parent)?;
            }
            pmlab::io::save_sample_set(&set, &output).map_err(anyhow::Error::from)?;
            if let Some(log_path) = log {
                let mut csv = Csv::new(
                    &cfg.config_hash(),
                    "run,seed,stream,success,iterations,sq_dist_from_init,final_prob",
                );
                for r in &records {
                    csv.row(r.csv_row());
                }
                csv.write_to(&log_path)?;
            }
            println!(
                "{} successes of {} attempts -> {}",
                set.meta.successes,
                set.meta.attempts,
                output.display()
            );
            if set.meta.low_yield {
                eprintln!("warning: success rate below one half");
            }
            Ok(())
        }
        Command::Dim {
            common,
            input,
            estimator,
            grid,
            output,
        } => {
            let cfg = common.load()?;
            let want_pr = estimator == "pr" || estimator == "both";
            let want_nn = estimator == "2nn" || estimator == "both";
            if !want_pr && !want_nn {
                anyhow::bail!("estimator must be pr, 2nn or both");
            }
            let mut csv = Csv::new(&cfg.config_hash(), "estimator,class,n,estimate,is_lower_bound");
            let mut scaling = Csv::new(&cfg.config_hash(), "set,estimator,n,estimate");
            for path in &input {
                let set = pmlab::io::load_sample_set(path).map_err(anyhow::Error::from)?;
                let label = set
                    .meta
                    .class_label
                    .map(|l| l.to_string())
                    .unwrap_or_else(|| "none".into());
                let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
                if want_pr {
                    let r = pmlab::dimension::pr_of_samples(&set).map_err(anyhow::Error::from)?;
                    println!("{stem}: PR = {:.3} (lower bound: {})", r.estimate, r.is_lower_bound);
                    csv.row(r.csv_row(&label));
                    if !grid.is_empty() {
                        let curve = pmlab::dimension::scaling_curve(
                            &set,
                            pmlab::dimension::Estimator::ParticipationRatio,
                            &grid,
                        )
                        .map_err(anyhow::Error::from)?;
                        for (n, est) in curve {
                            scaling.row(format!("{stem},pr,{n},{}", num(est)));
                        }
                    }
                }
                if want_nn {
                    let r = pmlab::dimension::two_nn(&set).map_err(anyhow::Error::from)?;
                    println!(
                        "{stem}: 2NN = {:.3} (lower bound: {}, dropped {})",
                        r.estimate, r.is_lower_bound, r.dropped_duplicates
                    );
                    csv.row(r.csv_row(&label));
                    if !grid.is_empty() {
                        let curve = pmlab::dimension::scaling_curve(
                            &set,
                            pmlab::dimension::Estimator::TwoNn,
                            &grid,
                        )
                        .map_err(anyhow::Error::from)?;
                        for (n, est) in curve {
                            scaling.row(format!("{stem},2nn,{n},{}", num(est)));
                        }
                    }
                }
            }
            csv.write_to(&output)?;
            if !grid.is_empty() {
                let scaling_path = output.with_extension("scaling.csv");
                scaling.write_to(&scaling_path)?;
            }
            Ok(())
        }
        Command::Attack {
            common,
            model,
            data,
            epsilon,
            output,
        } => {
            let cfg = common.load()?;
            let model = pmlab::io::load_checkpoint(&model).map_err(anyhow::Error::from)?;
            let examples = pipeline::dataset_from_files(&data)?;
            let attack_cfg = cfg.attack.to_config(epsilon, cfg.seed);
            let report = pmlab::attack::robust_accuracy(&model, &examples, &attack_cfg)
                .map_err(anyhow::Error::from)?;
            let mut csv = Csv::new(
                &cfg.config_hash(),
                "point_index,clean_correct,attack_success,iterations_used,margin",
            );
            for o in &report.outcomes {
                csv.row(o.csv_row());
            }
            csv.write_to(&output)?;
            println!(
                "clean accuracy {:.4}, robust accuracy {:.4} at eps={epsilon}",
                report.clean_accuracy, report.robust_accuracy
            );
            Ok(())
        }
        Command::Spectral { common, pm, data } => {
            let mut cfg = common.load()?;
            cfg.spectral.pm_sets.extend(pm);
            cfg.spectral.data_sets.extend(data);
            pipeline::spectral_suite(&cfg)?;
            println!(
                "spectral reports in {}",
                cfg.resolved_output_dir().join("spectral").display()
            );
            Ok(())
        }
        Command::Convert {
            input,
            output,
            seed,
            source,
            label,
        } => {
            let to_csv = output
                .extension()
                .map(|e| e.eq_ignore_ascii_case("csv"))
                .unwrap_or(false);
            if to_csv {
                pipeline::convert_to_csv(&input, &output)
                    .with_context(|| format!("converting {} to csv", input.display()))?;
            } else {
                pipeline::convert_from_csv(&input, &output, seed, &source, label)
                    .with_context(|| format!("converting {} to binary", input.display()))?;
            }
            println!("wrote {}", output.display());
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    match run() {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            let code = err
                .chain()
                .find_map(|cause| cause.downcast_ref::<pmlab::Error>())
                .map(|e| e.exit_code())
                .unwrap_or(2);
            ExitCode::from(code as u8)
        }
    }
}
