// Probe confidence landscapes per model family configuration.
use pmlab::attack::{robust_accuracy, AttackConfig};
use pmlab::dimension::{pr_of_samples, two_nn};
use pmlab::model::*;
use pmlab::sample_set::{SampleMeta, SampleSet};
use pmlab::sampler::*;
use pmlab::numerics::SeededRng;

fn envf(k: &str, d: f64) -> f64 { std::env::var(k).ok().and_then(|v| v.parse().ok()).unwrap_or(d) }
fn envu(k: &str, d: usize) -> usize { std::env::var(k).ok().and_then(|v| v.parse().ok()).unwrap_or(d) }

fn mean_conf(model: &MlpModel, points: &[Vec<f64>]) -> f64 {
    let mut s = 0.0;
    for x in points {
        let (_, p) = model.forward(x).unwrap();
        s += p.iter().cloned().fold(0.0f64, f64::max);
    }
    s / points.len() as f64
}

fn main() {
    let d = 64usize;
    let k = envu("PMLAB_TUNE_K", 3);
    let width = envu("PMLAB_TUNE_WIDTH", 48);
    let wd = envf("PMLAB_TUNE_WD", 0.0);
    let epochs = envu("PMLAB_TUNE_EPOCHS", 30);
    let n_per_class = envu("PMLAB_TUNE_N", 3000);

    let data = synth_dataset(d, k, 4, n_per_class, 0.02, 901).unwrap();
    let test = synth_dataset(d, k, 4, 120, 0.02, 901).unwrap();
    let init = MlpModel::new(&[d, width, k], Activation::Tanh, 902).unwrap();

    let mut rng = SeededRng::new(99);
    let noise_pts: Vec<Vec<f64>> = (0..200).map(|_| rng.uniform_cube_point(d)).collect();
    let corner_pts: Vec<Vec<f64>> = (0..200)
        .map(|_| (0..d).map(|_| if rng.uniform() < 0.5 { 0.0 } else { 1.0 }).collect())
        .collect();
    let data_pts: Vec<Vec<f64>> = test.examples().map(|(x, _)| x.to_vec()).take(200).collect();

    for eps in [0.0, 0.03, 0.06] {
        let cfg = TrainConfig {
            epochs,
            seed: 903,
            weight_decay: wd,
            adversarial: (eps > 0.0).then(|| AdvTrainSettings::new(eps)),
            ..TrainConfig::default()
        };
        let model = train(&init, &data, &cfg).unwrap().model;
        let clean = test.clean_accuracy(&model).unwrap();
        let examples: Vec<(Vec<f64>, usize)> = test.examples().map(|(x, l)| (x.to_vec(), l)).collect();
        let rob = robust_accuracy(&model, &examples, &AttackConfig::new(0.06)).unwrap();

        let pga = PgaConfig::default();
        let mut per_class = String::new();
        let mut prs = Vec::new();
        let mut pm0 = None;
        for class in 0..k {
            let (pm, _) = sample_pm_detailed(&model, class, 1200, &pga, 904 + class as u64).unwrap();
            let pr = if pm.n_samples() > 10 {
                let v = pr_of_samples(&pm).unwrap().estimate;
                prs.push(v);
                v
            } else { f64::NAN };
            per_class.push_str(&format!(" c{class}:{}/{} pr={pr:.1}", pm.meta.successes, pm.meta.attempts));
            if class == 0 { pm0 = Some(pm); }
        }
        let pm = pm0.unwrap();
        let pm_pr = if prs.is_empty() { f64::NAN } else { prs.iter().sum::<f64>() / prs.len() as f64 };
        let pm_nn = if pm.n_samples() > 10 { two_nn(&pm).unwrap().estimate } else { f64::NAN };
        println!("   classes:{per_class}");

        let noise_set = SampleSet::from_rows(noise_pts.clone(), SampleMeta::new(905, "noise")).unwrap();
        let mut noise_means = Vec::new();
        let mut nat_means = Vec::new();
        for target in 0..k {
            let dtn = distance_to_pm(&model, target, &noise_set, &pga)
                .map(|s| s.mean_sq_dist).unwrap_or(f64::NAN);
            let mut parts = String::new();
            let mut nat_all = Vec::new();
            for source in 0..k {
                if source == target { continue; }
                let pts: Vec<Vec<f64>> = test
                    .examples()
                    .filter(|(_, l)| *l == source)
                    .map(|(x, _)| x.to_vec())
                    .collect();
                let set = SampleSet::from_rows(pts, SampleMeta::new(906, "natural")).unwrap();
                let d = distance_to_pm(&model, target, &set, &pga)
                    .map(|s| s.mean_sq_dist).unwrap_or(f64::NAN);
                parts.push_str(&format!(" s{source}:{d:.3}"));
                nat_all.push(d);
            }
            let dtnat = nat_all.iter().sum::<f64>() / nat_all.len() as f64;
            println!("   target {target}: noise={dtn:.3} natural={dtnat:.3} ({parts})");
            noise_means.push(dtn);
            nat_means.push(dtnat);
        }
        let dn = noise_means.iter().sum::<f64>() / k as f64;
        let nsucc = 0usize;
        let dnat = nat_means.iter().sum::<f64>() / k as f64;

        println!(
            "eps={eps:.2}: clean={clean:.3} rob06={:.3} conf_data={:.3} conf_noise={:.3} conf_corner={:.3} yield={}/{} pm_pr={pm_pr:.1} pm_2nn={pm_nn:.1} dist_noise={dn:.2} (n={nsucc}) dist_nat={dnat:.2}",
            rob.robust_accuracy,
            mean_conf(&model, &data_pts),
            mean_conf(&model, &noise_pts),
            mean_conf(&model, &corner_pts),
            pm.meta.successes, pm.meta.attempts
        );
    }
}
