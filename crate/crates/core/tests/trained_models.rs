//! Seeded end-to-end behavior of trained toy models: ascent yield, attack
//! strength, and the effect of adversarial training. Scales here are kept
//! small; the acceptance suite runs the full-size versions.

use pmlab::attack::{robust_accuracy, AttackConfig};
use pmlab::dimension::pr_of_samples;
use pmlab::model::{
    finite_diff_check, synth_dataset, train, Activation, AdvTrainSettings, MlpModel, SynthDataset,
    TrainConfig,
};
use pmlab::numerics::SeededRng;
use pmlab::sampler::{pga_sample_from_uniform, sample_pm, PgaConfig};
use std::sync::OnceLock;

const AMBIENT: usize = 32;
const CLASSES: usize = 3;
const D_NAT: usize = 4;

struct Fixture {
    train_data: SynthDataset,
    test_data: SynthDataset,
    standard: MlpModel,
    adversarial: MlpModel,
}

fn fixture() -> &'static Fixture {
    static FIXTURE: OnceLock<Fixture> = OnceLock::new();
    FIXTURE.get_or_init(|| {
        let train_data = synth_dataset(AMBIENT, CLASSES, D_NAT, 1500, 0.02, 501).unwrap();
        let test_data = synth_dataset(AMBIENT, CLASSES, D_NAT, 200, 0.02, 501).unwrap();
        let init = MlpModel::new(&[AMBIENT, 24, CLASSES], Activation::Tanh, 502).unwrap();
        let standard = train(
            &init,
            &train_data,
            &TrainConfig {
                epochs: 25,
                seed: 503,
                ..TrainConfig::default()
            },
        )
        .unwrap()
        .model;
        let adversarial = train(
            &init,
            &train_data,
            &TrainConfig {
                epochs: 25,
                seed: 503,
                adversarial: Some(AdvTrainSettings::new(0.06)),
                ..TrainConfig::default()
            },
        )
        .unwrap()
        .model;
        Fixture {
            train_data,
            test_data,
            standard,
            adversarial,
        }
    })
}

fn examples_of(data: &SynthDataset) -> Vec<(Vec<f64>, usize)> {
    data.examples().map(|(x, l)| (x.to_vec(), l)).collect()
}

#[test]
fn trained_model_classifies_training_points() {
    let f = fixture();
    let acc = f.train_data.clean_accuracy(&f.standard).unwrap();
    assert!(acc >= 0.99, "training accuracy {acc}");
}

#[test]
fn gradients_verified_on_trained_model() {
    let f = fixture();
    let mut rng = SeededRng::new(504);
    for _ in 0..10 {
        let x = rng.uniform_cube_point(AMBIENT);
        let c = rng.index(CLASSES);
        let err = finite_diff_check(&f.standard, &x, c, 1e-5).unwrap();
        assert!(err <= 1e-5, "finite-difference error {err:.2e}");
    }
}

#[test]
fn pga_yield_on_standard_model() {
    // Golden seeded run: ascent from uniform noise succeeds nearly always
    // on a standard-trained model.
    let f = fixture();
    let cfg = PgaConfig::default();
    let mut successes = 0;
    let runs = 300;
    for i in 0..runs {
        let mut rng = SeededRng::with_stream(505, i);
        for class in 0..CLASSES {
            if pga_sample_from_uniform(&f.standard, class, &cfg, &mut rng)
                .unwrap()
                .success
            {
                successes += 1;
            }
        }
    }
    let rate = successes as f64 / (runs * CLASSES as u64) as f64;
    println!("PGA success rate on standard model: {rate:.4}");
    assert!(rate >= 0.95, "success rate {rate}");
}

#[test]
fn attack_breaks_standard_model() {
    // Golden seeded run: multi-restart PGD at the toy radius flips nearly
    // every clean-correct test point of the standard model.
    let f = fixture();
    let cfg = AttackConfig::new(0.06);
    let report = robust_accuracy(&f.standard, &examples_of(&f.test_data), &cfg).unwrap();
    let clean_correct: Vec<_> = report.outcomes.iter().filter(|o| o.clean_correct).collect();
    let broken = clean_correct.iter().filter(|o| o.attack_success).count();
    let rate = broken as f64 / clean_correct.len() as f64;
    println!("attack success rate on standard model: {rate:.4}");
    assert!(rate >= 0.90, "attack success rate {rate}");
}

#[test]
fn adversarial_training_raises_robust_accuracy() {
    let f = fixture();
    let cfg = AttackConfig::new(0.06);
    let examples = examples_of(&f.test_data);
    let std_report = robust_accuracy(&f.standard, &examples, &cfg).unwrap();
    let adv_report = robust_accuracy(&f.adversarial, &examples, &cfg).unwrap();
    println!(
        "robust accuracy: standard {:.4}, adversarially trained {:.4}",
        std_report.robust_accuracy, adv_report.robust_accuracy
    );
    assert!(adv_report.robust_accuracy > std_report.robust_accuracy);
}

#[test]
fn pm_dimension_exceeds_data_dimension() {
    // Reduced-scale check that the sampled manifold is far higher
    // dimensional than the data classes.
    let f = fixture();
    let cfg = PgaConfig::default();
    let pm = sample_pm(&f.standard, 0, 1500, &cfg, 506).unwrap();
    assert!(!pm.meta.low_yield);
    let pm_pr = pr_of_samples(&pm).unwrap().estimate;
    let data_pr = pr_of_samples(&f.train_data.classes[0]).unwrap().estimate;
    println!("PM PR {pm_pr:.2} vs data PR {data_pr:.2}");
    assert!(pm_pr >= 3.0 * data_pr, "PM PR {pm_pr} vs data PR {data_pr}");
}

#[test]
fn adversarially_trained_pm_is_lower_dimensional() {
    let f = fixture();
    let cfg = PgaConfig::default();
    let pm_std = sample_pm(&f.standard, 1, 1200, &cfg, 507).unwrap();
    let pm_adv = sample_pm(&f.adversarial, 1, 1200, &cfg, 507).unwrap();
    let pr_std = pr_of_samples(&pm_std).unwrap().estimate;
    let pr_adv = pr_of_samples(&pm_adv).unwrap().estimate;
    println!("PM PR: standard {pr_std:.2}, adversarially trained {pr_adv:.2}");
    assert!(pr_adv < pr_std);
}
