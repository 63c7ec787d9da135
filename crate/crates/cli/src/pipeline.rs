//! Batch pipelines wiring the library into reproducible experiments.
//!
//! Every pipeline derives all of its seeds from the config's master seed,
//! writes outputs incrementally (a failing stage leaves earlier artifacts
//! on disk), and stamps the config hash into each CSV.

use crate::config::ExperimentConfig;
use crate::report::{num, write_run_meta, Csv};
use crate::svg;
use anyhow::{Context, Result};
use pmlab::attack::robust_accuracy;
use pmlab::dimension::{pr_of_samples, scaling_curve, two_nn, Estimator};
use pmlab::geometry::{analytic_expected_sqdist, make_ellipsoid, monte_carlo_expected_sqdist};
use pmlab::io::{load_sample_set, save_checkpoint, save_sample_set};
use pmlab::model::{synth_dataset, train, MlpModel, SynthDataset};
use pmlab::numerics::{covariance, sym_eig, Matrix, SeededRng};
use pmlab::sample_set::{SampleMeta, SampleSet};
use pmlab::sampler::{distance_to_pm, sample_pm_detailed, DistanceStats};
use pmlab::spectral::{
    pick_k_for_variance, power_law_field, radial_psd, random_alignment_baseline,
    spectrum_density, subspace_alignment,
};
use std::path::{Path, PathBuf};

// Stream tags for seed derivation, one per pipeline stage.
const SEED_TRAIN_DATA: u64 = 1;
const SEED_TEST_DATA: u64 = 2;
const SEED_MODEL_INIT: u64 = 3;
const SEED_TRAINING: u64 = 4;
const SEED_ATTACK: u64 = 5;
const SEED_PM_BASE: u64 = 100;
const SEED_NOISE_INITS: u64 = 6;
const SEED_ELLIPSOID_BASE: u64 = 1000;

fn derive_seed(master: u64, tag: u64) -> u64 {
    // SplitMix64 step keyed by the tag; documented, stable derivation.
    let mut z = master ^ tag.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Per-model results of the toy pipeline, one row of the combined CSV.
#[derive(Debug, Clone)]
pub struct ModelSummary {
    pub eps_train: f64,
    pub clean_accuracy: f64,
    pub robust_accuracy: f64,
    pub data_pr_mean: f64,
    pub pm_pr_mean: f64,
    pub pm_2nn_mean: f64,
    pub dist_noise: DistanceStats,
    pub dist_natural: DistanceStats,
    pub pm_attempts: u64,
    pub pm_successes: u64,
}

pub struct ToyPipelineOutput {
    pub summaries: Vec<ModelSummary>,
    pub out_dir: PathBuf,
}

fn eps_tag(eps: f64) -> String {
    format!("{eps:.3}")
}

/// Train the model family, sample their manifolds, and emit the combined
/// report tree.
pub fn toy_pipeline(cfg: &ExperimentConfig) -> Result<ToyPipelineOutput> {
    let hash = cfg.config_hash();
    let out = cfg.resolved_output_dir();
    let toy = &cfg.toy;
    let pga = cfg.pga.to_config().context("stage config: pga")?;

    std::fs::create_dir_all(out.join("data")).context("stage setup: output dirs")?;

    // Stage: datasets.
    let train_data = synth_dataset(
        toy.ambient_dim,
        toy.n_classes,
        toy.intrinsic_dim,
        toy.n_per_class,
        toy.noise_sigma,
        derive_seed(cfg.seed, SEED_TRAIN_DATA),
    )
    .context("stage datasets: training set")?;
    let test_data = synth_dataset(
        toy.ambient_dim,
        toy.n_classes,
        toy.intrinsic_dim,
        toy.n_test_per_class,
        toy.noise_sigma,
        derive_seed(cfg.seed, SEED_TEST_DATA),
    )
    .context("stage datasets: test set")?;
    for (label, class) in train_data.classes.iter().enumerate() {
        save_sample_set(class, out.join(format!("data/train_class{label}.pmss")))
            .context("stage datasets: saving")?;
    }
    for (label, class) in test_data.classes.iter().enumerate() {
        save_sample_set(class, out.join(format!("data/test_class{label}.pmss")))
            .context("stage datasets: saving")?;
    }

    let data_prs: Vec<f64> = train_data
        .classes
        .iter()
        .map(|c| pr_of_samples(c).map(|r| r.estimate))
        .collect::<pmlab::Result<_>>()
        .context("stage datasets: class PR")?;
    let data_pr_mean = data_prs.iter().sum::<f64>() / data_prs.len() as f64;

    let init_model = MlpModel::new(
        &toy.layer_dims(),
        toy.activation()?,
        derive_seed(cfg.seed, SEED_MODEL_INIT),
    )
    .context("stage models: init")?;

    let mut combined = Csv::new(
        &hash,
        "model,eps_train,clean_acc,robust_acc,data_pr_mean,pm_pr_mean,pm_2nn_mean,\
         dist_noise_mean,dist_noise_std,dist_noise_n,dist_natural_mean,dist_natural_std,\
         dist_natural_n,pm_attempts,pm_successes",
    );
    let mut scaling_csv = Csv::new(&hash, "model,class,estimator,n,estimate");
    let mut summaries = Vec::new();

    for (mi, &eps) in toy.train_eps.iter().enumerate() {
        let tag = eps_tag(eps);
        let stage = |s: &str| format!("stage {s}: model eps={tag}");

        // Stage: training.
        let tcfg = toy.train_config(eps, derive_seed(cfg.seed, SEED_TRAINING + mi as u64));
        let outcome = train(&init_model, &train_data, &tcfg)
            .with_context(|| stage("training"))?;
        let model = outcome.model;
        save_checkpoint(&model, out.join(format!("models/model_eps{tag}.ckpt")))
            .with_context(|| stage("training checkpoint"))?;

        // Stage: accuracy.
        let attack_cfg = cfg
            .attack
            .to_config(toy.eval_eps, derive_seed(cfg.seed, SEED_ATTACK));
        let examples = test_data.to_examples();
        let report = robust_accuracy(&model, &examples, &attack_cfg)
            .with_context(|| stage("robust accuracy"))?;
        let mut attack_csv = Csv::new(
            &hash,
            "point_index,clean_correct,attack_success,iterations_used,margin",
        );
        for o in &report.outcomes {
            attack_csv.row(o.csv_row());
        }
        attack_csv
            .write_to(&out.join(format!("reports/attack_eps{tag}.csv")))
            .with_context(|| stage("attack report"))?;

        // Stage: manifold sampling + dimensions + distances.
        let mut dim_csv = Csv::new(&hash, "estimator,class,n,estimate,is_lower_bound");
        let mut pm_prs = Vec::new();
        let mut pm_2nns = Vec::new();
        let mut attempts = 0u64;
        let mut successes = 0u64;
        let mut dist_noise_acc: Option<DistanceStats> = None;
        let mut dist_nat_acc: Option<DistanceStats> = None;

        for class in 0..toy.n_classes {
            let pm_seed = derive_seed(cfg.seed, SEED_PM_BASE + (mi * 64 + class) as u64);
            let (pm, records) = sample_pm_detailed(&model, class, toy.n_pm_per_class, &pga, pm_seed)
                .with_context(|| stage("pm sampling"))?;
            attempts += pm.meta.attempts;
            successes += pm.meta.successes;
            save_sample_set(&pm, out.join(format!("pm/model_eps{tag}_class{class}.pmss")))
                .with_context(|| stage("pm save"))?;
            let mut log = Csv::new(
                &hash,
                "run,seed,stream,success,iterations,sq_dist_from_init,final_prob",
            );
            for r in &records {
                log.row(r.csv_row());
            }
            log.write_to(&out.join(format!("logs/pm_runs_eps{tag}_class{class}.csv")))
                .with_context(|| stage("pm run log"))?;

            let pr = pr_of_samples(&pm).with_context(|| stage("pm PR"))?;
            dim_csv.row(pr.csv_row(&class.to_string()));
            pm_prs.push(pr.estimate);
            let nn = two_nn(&pm).with_context(|| stage("pm 2NN"))?;
            dim_csv.row(nn.csv_row(&class.to_string()));
            pm_2nns.push(nn.estimate);

            let n = pm.n_samples();
            if n >= 8 {
                let grid = [n / 8, n / 4, n / 2, n];
                let curve = scaling_curve(&pm, Estimator::ParticipationRatio, &grid)
                    .with_context(|| stage("pm scaling curve"))?;
                for (size, est) in curve {
                    scaling_csv.row(format!("eps{tag},{class},pr,{size},{}", num(est)));
                }
                let curve = scaling_curve(&pm, Estimator::TwoNn, &grid)
                    .with_context(|| stage("pm 2nn scaling"))?;
                for (size, est) in curve {
                    scaling_csv.row(format!("eps{tag},{class},2nn,{size},{}", num(est)));
                }
            }

            // Distances: uniform-noise inits and held-out natural inits
            // from the other classes.
            let noise_seed = derive_seed(cfg.seed, SEED_NOISE_INITS + (mi * 64 + class) as u64);
            let mut rng = SeededRng::new(noise_seed);
            let noise_rows: Vec<Vec<f64>> = (0..toy.n_distance_inits)
                .map(|_| rng.uniform_cube_point(toy.ambient_dim))
                .collect();
            let noise =
                SampleSet::from_rows(noise_rows, SampleMeta::new(noise_seed, "noise"))
                    .map_err(anyhow::Error::from)
                    .with_context(|| stage("noise inits"))?;
            let d_noise = distance_to_pm(&model, class, &noise, &pga)
                .with_context(|| stage("distance from noise"))?;

            let mut nat_rows = Vec::new();
            for (x, l) in test_data.examples() {
                if l != class && nat_rows.len() < toy.n_distance_inits {
                    nat_rows.push(x.to_vec());
                }
            }
            let nat = SampleSet::from_rows(
                nat_rows,
                SampleMeta::new(derive_seed(cfg.seed, SEED_TEST_DATA), "natural"),
            )
            .map_err(anyhow::Error::from)
            .with_context(|| stage("natural inits"))?;
            let d_nat = distance_to_pm(&model, class, &nat, &pga)
                .with_context(|| stage("distance from natural"))?;

            dist_noise_acc = Some(merge_stats(dist_noise_acc, d_noise));
            dist_nat_acc = Some(merge_stats(dist_nat_acc, d_nat));
        }

        for (label, &pr) in data_prs.iter().enumerate() {
            dim_csv.row(format!("pr,data_class{label},{},{},false",
                train_data.classes[label].n_samples(), num(pr)));
        }
        dim_csv
            .write_to(&out.join(format!("reports/dim_eps{tag}.csv")))
            .with_context(|| stage("dimension report"))?;

        let dist_noise = dist_noise_acc.expect("at least one class");
        let dist_natural = dist_nat_acc.expect("at least one class");
        let pm_pr_mean = pm_prs.iter().sum::<f64>() / pm_prs.len() as f64;
        let pm_2nn_mean = pm_2nns.iter().sum::<f64>() / pm_2nns.len() as f64;

        combined.row(format!(
            "eps{tag},{},{},{},{},{},{},{},{},{},{},{},{},{attempts},{successes}",
            num(eps),
            num(report.clean_accuracy),
            num(report.robust_accuracy),
            num(data_pr_mean),
            num(pm_pr_mean),
            num(pm_2nn_mean),
            num(dist_noise.mean_sq_dist),
            num(dist_noise.std_sq_dist),
            dist_noise.n_success,
            num(dist_natural.mean_sq_dist),
            num(dist_natural.std_sq_dist),
            dist_natural.n_success,
        ));
        summaries.push(ModelSummary {
            eps_train: eps,
            clean_accuracy: report.clean_accuracy,
            robust_accuracy: report.robust_accuracy,
            data_pr_mean,
            pm_pr_mean,
            pm_2nn_mean,
            dist_noise,
            dist_natural,
            pm_attempts: attempts,
            pm_successes: successes,
        });
    }

    combined
        .write_to(&out.join("reports/combined.csv"))
        .context("stage reports: combined")?;
    scaling_csv
        .write_to(&out.join("reports/scaling.csv"))
        .context("stage reports: scaling")?;
    write_run_meta(&out, &hash, &cfg.experiment)?;
    Ok(ToyPipelineOutput {
        summaries,
        out_dir: out,
    })
}

/// Pool two distance summaries, weighting by success counts.
fn merge_stats(acc: Option<DistanceStats>, next: DistanceStats) -> DistanceStats {
    match acc {
        None => next,
        Some(prev) => {
            let n1 = prev.n_success as f64;
            let n2 = next.n_success as f64;
            let mean = (prev.mean_sq_dist * n1 + next.mean_sq_dist * n2) / (n1 + n2);
            // Pooled spread; adequate for reporting.
            let var = (prev.std_sq_dist.powi(2) * n1 + next.std_sq_dist.powi(2) * n2)
                / (n1 + n2);
            DistanceStats {
                mean_sq_dist: mean,
                std_sq_dist: var.sqrt(),
                sem_sq_dist: (var / (n1 + n2)).sqrt(),
                n_success: prev.n_success + next.n_success,
                n_total: prev.n_total + next.n_total,
                init_source: prev.init_source,
            }
        }
    }
}

/// One row of the ellipsoid distance report.
#[derive(Debug, Clone)]
pub struct EllipsoidRow {
    pub d: usize,
    pub analytic: f64,
    pub mc_boundary_mean: f64,
    pub mc_boundary_sigma: f64,
    pub mc_filled_mean: f64,
    pub n_points: usize,
    pub seed: u64,
}

/// Monte Carlo vs closed-form distance as the ellipsoid dimension sweeps.
pub fn ellipsoid_fig(cfg: &ExperimentConfig) -> Result<Vec<EllipsoidRow>> {
    let hash = cfg.config_hash();
    let out = cfg.resolved_output_dir();
    let e = &cfg.ellipsoid;
    if e.d_grid.is_empty() {
        anyhow::bail!("ellipsoid d_grid is empty");
    }
    for &d in &e.d_grid {
        if d == 0 || d > e.ambient_dim {
            anyhow::bail!("ellipsoid d_grid entry {d} outside [1, {}]", e.ambient_dim);
        }
    }

    let mut rows = Vec::new();
    let mut csv = Csv::new(
        &hash,
        "d,analytic,mc_boundary_mean,mc_boundary_sigma,mc_filled_mean,n_points,seed",
    );
    for &d in &e.d_grid {
        let seed = derive_seed(cfg.seed, SEED_ELLIPSOID_BASE + d as u64);
        let mc = monte_carlo_expected_sqdist(
            e.ambient_dim,
            d,
            (e.radius_low, e.radius_high),
            e.n_points,
            seed,
        )
        .with_context(|| format!("stage ellipsoid: d={d}"))?;
        // The analytic value is evaluated on the same seeded radii draw.
        let spec = make_ellipsoid(e.ambient_dim, d, e.radius_low, e.radius_high, seed)
            .with_context(|| format!("stage ellipsoid: spec d={d}"))?;
        let analytic = analytic_expected_sqdist(e.ambient_dim, &spec.radii)
            .with_context(|| format!("stage ellipsoid: analytic d={d}"))?;
        csv.row(format!(
            "{d},{},{},{},{},{},{seed}",
            num(analytic),
            num(mc.boundary.mean_sq_dist),
            num(mc.boundary.std),
            num(mc.filled.mean_sq_dist),
            e.n_points
        ));
        rows.push(EllipsoidRow {
            d,
            analytic,
            mc_boundary_mean: mc.boundary.mean_sq_dist,
            mc_boundary_sigma: mc.boundary.std,
            mc_filled_mean: mc.filled.mean_sq_dist,
            n_points: e.n_points,
            seed,
        });
    }
    csv.write_to(&out.join("reports/ellipsoid.csv"))
        .context("stage ellipsoid: report")?;

    if e.svg {
        let theory: Vec<(f64, f64)> = rows.iter().map(|r| (r.d as f64, r.analytic)).collect();
        let mc_b: Vec<(f64, f64)> = rows
            .iter()
            .map(|r| (r.d as f64, r.mc_boundary_mean))
            .collect();
        let bars: Vec<f64> = rows.iter().map(|r| r.mc_boundary_sigma).collect();
        let mc_f: Vec<(f64, f64)> = rows
            .iter()
            .map(|r| (r.d as f64, r.mc_filled_mean))
            .collect();
        let plot = svg::line_plot(
            "expected squared distance to a random ellipsoid",
            "intrinsic dimension d",
            "mean squared distance",
            &[
                svg::Series {
                    label: "theory (filled set)",
                    color: "#cc2222",
                    points: theory,
                    bars: None,
                },
                svg::Series {
                    label: "monte carlo, boundary",
                    color: "#2255cc",
                    points: mc_b,
                    bars: Some(bars),
                },
                svg::Series {
                    label: "monte carlo, filled",
                    color: "#22aa66",
                    points: mc_f,
                    bars: None,
                },
            ],
        );
        std::fs::create_dir_all(out.join("plots"))?;
        std::fs::write(out.join("plots/ellipsoid.svg"), plot)
            .context("stage ellipsoid: svg")?;
    }
    write_run_meta(&out, &hash, &cfg.experiment)?;
    Ok(rows)
}

fn load_named_sets(paths: &[PathBuf]) -> Result<Vec<(String, SampleSet)>> {
    let mut sets = Vec::new();
    for path in paths {
        if !path.exists() {
            // Surface the path in an invalid-input error, as the batch
            // contract requires.
            return Err(anyhow::Error::from(pmlab::Error::InvalidInput(format!(
                "missing input file: {}",
                path.display()
            ))));
        }
        let set = load_sample_set(path)
            .map_err(anyhow::Error::from)
            .with_context(|| format!("loading {}", path.display()))?;
        let name = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "set".into());
        sets.push((name, set));
    }
    Ok(sets)
}

fn eigen_of(set: &SampleSet) -> Result<(Vec<f64>, Matrix)> {
    let cov = covariance(set).map_err(anyhow::Error::from)?;
    let eig = sym_eig(&cov).map_err(anyhow::Error::from)?;
    Ok((eig.eigenvalues, eig.eigenvectors))
}

fn top_columns(vectors: &Matrix, k: usize) -> Matrix {
    let mut m = Matrix::zeros(vectors.rows(), k);
    for j in 0..k {
        for i in 0..vectors.rows() {
            m.set(i, j, vectors.get(i, j));
        }
    }
    m
}

/// Spectrum densities, alignment scores against the random baseline, and
/// radially averaged PSDs for stored sample sets.
pub fn spectral_suite(cfg: &ExperimentConfig) -> Result<()> {
    let hash = cfg.config_hash();
    let out = cfg.resolved_output_dir();
    let sp = &cfg.spectral;
    let data_sets = load_named_sets(&sp.data_sets).context("stage spectral: data sets")?;
    let pm_sets = load_named_sets(&sp.pm_sets).context("stage spectral: pm sets")?;
    if data_sets.is_empty() || pm_sets.is_empty() {
        anyhow::bail!("spectral suite needs at least one data set and one pm set");
    }
    std::fs::create_dir_all(out.join("spectral"))?;

    // Stage: spectrum densities.
    let mut eigens: Vec<(String, Vec<f64>, Matrix)> = Vec::new();
    for (name, set) in data_sets.iter().chain(pm_sets.iter()) {
        let (vals, vecs) = eigen_of(set).with_context(|| format!("stage spectral: eigen {name}"))?;
        let density = spectrum_density(&vals, sp.n_bins)
            .map_err(anyhow::Error::from)
            .with_context(|| format!("stage spectral: density {name}"))?;
        let mut csv = Csv::new(&hash, "eigenvalue,density");
        for (i, d) in density.density.iter().enumerate() {
            let center = ((density.log_edges[i] + density.log_edges[i + 1]) / 2.0).exp();
            csv.row(format!("{},{}", num(center), num(*d)));
        }
        csv.write_to(&out.join(format!("spectral/density_{name}.csv")))?;
        eigens.push((name.clone(), vals, vecs));
    }

    // Stage: alignment sweep. k explains the variance fraction of the data
    // set; m sweeps k, 2k, 4k, ... up to the ambient dimension.
    let n_data = data_sets.len();
    let mut alignment = Csv::new(
        &hash,
        "data_set,pm_set,k,m,score,baseline_mean,baseline_std,baseline_sem",
    );
    for (dname, dvals, dvecs) in &eigens[..n_data] {
        let ambient = dvecs.rows();
        let k = pick_k_for_variance(dvals, sp.variance_fraction)
            .map_err(anyhow::Error::from)
            .with_context(|| format!("stage spectral: k for {dname}"))?;
        let u = top_columns(dvecs, k);
        for (pname, _pvals, pvecs) in &eigens[n_data..] {
            if pvecs.rows() != ambient {
                continue;
            }
            let mut m = k;
            loop {
                let v = top_columns(pvecs, m);
                let score = subspace_alignment(&u, &v)
                    .map_err(anyhow::Error::from)
                    .with_context(|| format!("stage spectral: alignment {dname}/{pname}"))?;
                let baseline = random_alignment_baseline(
                    ambient,
                    k,
                    m,
                    sp.baseline_trials,
                    derive_seed(cfg.seed, 7000 + m as u64),
                )
                .map_err(anyhow::Error::from)?;
                alignment.row(format!(
                    "{dname},{pname},{k},{m},{},{},{},{}",
                    num(score),
                    num(baseline.mean),
                    num(baseline.std),
                    num(baseline.sem)
                ));
                if m >= ambient {
                    break;
                }
                m = (m * 2).min(ambient);
            }
        }
    }
    alignment.write_to(&out.join("spectral/alignment.csv"))?;

    // Stage: radially averaged PSDs, plus white-noise and 1/f^2 controls.
    let mut slopes = Csv::new(&hash, "set,slope,alpha,band_lo,band_hi,n_images,band_widened");
    for (name, set) in data_sets.iter().chain(pm_sets.iter()) {
        let side = (set.dim() as f64).sqrt() as usize;
        if side * side != set.dim() || !side.is_power_of_two() {
            eprintln!(
                "spectral: skipping PSD for {name}: dimension {} is not a power-of-two square",
                set.dim()
            );
            continue;
        }
        let images: Vec<Matrix> = set
            .rows()
            .map(|r| Matrix::from_vec(side, side, r.to_vec()))
            .collect::<pmlab::Result<_>>()
            .map_err(anyhow::Error::from)?;
        match radial_psd(&images) {
            Ok(psd) => {
                let mut csv = Csv::new(&hash, "k,power");
                for (f, p) in psd.freqs.iter().zip(&psd.power) {
                    csv.row(format!("{},{}", num(*f), num(*p)));
                }
                csv.write_to(&out.join(format!("spectral/psd_{name}.csv")))?;
                slopes.row(format!(
                    "{name},{},{},{},{},{},{}",
                    num(psd.slope),
                    num(psd.alpha()),
                    psd.fit_band.0,
                    psd.fit_band.1,
                    psd.n_images,
                    psd.band_widened
                ));
            }
            Err(err) => eprintln!("spectral: PSD for {name} degenerate: {err}"),
        }
    }
    // Controls validate the estimator inside the same report.
    let mut rng = SeededRng::new(derive_seed(cfg.seed, 7777));
    let white: Vec<Matrix> = (0..sp.control_images)
        .map(|_| {
            Matrix::from_vec(
                sp.control_side,
                sp.control_side,
                (0..sp.control_side * sp.control_side)
                    .map(|_| rng.normal())
                    .collect(),
            )
        })
        .collect::<pmlab::Result<_>>()
        .map_err(anyhow::Error::from)?;
    let psd = radial_psd(&white).map_err(anyhow::Error::from)?;
    slopes.row(format!(
        "control_white,{},{},{},{},{},{}",
        num(psd.slope),
        num(psd.alpha()),
        psd.fit_band.0,
        psd.fit_band.1,
        psd.n_images,
        psd.band_widened
    ));
    let pink: Vec<Matrix> = (0..sp.control_images)
        .map(|_| power_law_field(sp.control_side, 2.0, &mut rng))
        .collect::<pmlab::Result<_>>()
        .map_err(anyhow::Error::from)?;
    let psd = radial_psd(&pink).map_err(anyhow::Error::from)?;
    slopes.row(format!(
        "control_pink,{},{},{},{},{},{}",
        num(psd.slope),
        num(psd.alpha()),
        psd.fit_band.0,
        psd.fit_band.1,
        psd.n_images,
        psd.band_widened
    ));
    slopes.write_to(&out.join("spectral/psd_slopes.csv"))?;

    write_run_meta(&out, &hash, &cfg.experiment)?;
    Ok(())
}

/// Convert a binary sample set to CSV (one row per point).
pub fn convert_to_csv(input: &Path, output: &Path) -> Result<()> {
    let set = load_sample_set(input).map_err(anyhow::Error::from)?;
    let mut text = String::new();
    text.push_str(&format!(
        "# seed={} source={} rng={} label={} attempts={} successes={}\n",
        set.meta.seed,
        set.meta.source,
        set.meta.rng_name,
        set.meta
            .class_label
            .map(|l| l.to_string())
            .unwrap_or_else(|| "none".into()),
        set.meta.attempts,
        set.meta.successes,
    ));
    for row in set.rows() {
        let line: Vec<String> = row.iter().map(|v| format!("{v:.17e}")).collect();
        text.push_str(&line.join(","));
        text.push('\n');
    }
    if let Some(parent) = output.parent() {
        std::fs::create_dir_all(parent)?;
    }
    std::fs::write(output, text)?;
    Ok(())
}

/// Convert a CSV of points (comment lines ignored) into the binary format.
pub fn convert_from_csv(
    input: &Path,
    output: &Path,
    seed: u64,
    source: &str,
    label: Option<u32>,
) -> Result<()> {
    let text = std::fs::read_to_string(input)?;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let row: std::result::Result<Vec<f64>, _> =
            line.split(',').map(|f| f.trim().parse::<f64>()).collect();
        let row = row.with_context(|| format!("parsing {}:{}", input.display(), lineno + 1))?;
        rows.push(row);
    }
    let mut meta = SampleMeta::new(seed, source);
    meta.class_label = label;
    let set = SampleSet::from_rows(rows, meta).map_err(anyhow::Error::from)?;
    if let Some(parent) = output.parent() {
        std::fs::create_dir_all(parent)?;
    }
    save_sample_set(&set, output).map_err(anyhow::Error::from)?;
    Ok(())
}

/// Accuracy of a model over per-class sample-set files.
pub fn dataset_from_files(paths: &[PathBuf]) -> Result<Vec<(Vec<f64>, usize)>> {
    let sets = load_named_sets(paths)?;
    let mut examples = Vec::new();
    for (name, set) in sets {
        let label = set
            .meta
            .class_label
            .ok_or_else(|| anyhow::anyhow!("set {name} carries no class label"))?;
        for row in set.rows() {
            examples.push((row.to_vec(), label as usize));
        }
    }
    Ok(examples)
}

/// Synthetic dataset handle exposed for the `dim`/`attack` subcommands.
pub fn toy_dataset(cfg: &ExperimentConfig, n_per_class: usize, tag: u64) -> Result<SynthDataset> {
    synth_dataset(
        cfg.toy.ambient_dim,
        cfg.toy.n_classes,
        cfg.toy.intrinsic_dim,
        n_per_class,
        cfg.toy.noise_sigma,
        derive_seed(cfg.seed, tag),
    )
    .map_err(anyhow::Error::from)
}
