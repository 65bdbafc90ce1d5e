//! Train the confounder classifier on a preliminary dataset: out-of-fold
//! error vector, F1_z, and predictions for a separate target dataset.

use confound::corpus::{biased_sample, generate_pool, inject_noise_dataset, split_pool, BiasSpec, CorpusConfig, Exclusion, Split};
use confound::learner::{annotate_z, crossval_z_errors, fit, TrainConfig};
use confound::metrics::f1_scores;
use confound::Target;

pub fn run_example() -> confound::Result<()> {
    let config = CorpusConfig {
        vocab_size_y: 8,
        vocab_size_z: 8,
        doc_count: 6000,
        seed: 3,
        ..CorpusConfig::default()
    };
    let pool = generate_pool(&config)?;
    let (z_idx, y_idx) = split_pool(pool.len(), 0.5, 3);
    let d_z = pool.subset(&z_idx);
    let d_y = biased_sample(
        &pool.subset(&y_idx),
        &BiasSpec::uniform(0.8, 0.5, 1000, 0),
        Split::Train,
        3,
        &mut Exclusion::new(),
    )?;

    let train = TrainConfig::default();
    for noise in [0.0, 0.1, 0.2, 0.3] {
        let noisy = inject_noise_dataset(&d_z, noise, 5)?;
        let cv = crossval_z_errors(&noisy, 10, &train)?;
        let model = fit(&noisy, Target::Z, &train)?.model;
        let annotated = annotate_z(&model, &d_y)?;
        let on_target = f1_scores(&annotated.z_preds()?, &d_y.zs())?;
        let err_rate = cv.errors.iter().map(|&e| e as f64).sum::<f64>() / cv.errors.len() as f64;
        println!(
            "D_z noise {noise:.1}: cv F1_z {:.3}, cv error rate {err_rate:.3}, F1 against true z on D_y {:.3}",
            cv.f1(),
            on_target.f1_pos
        );
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> confound::Result<()> {
    run_example()
}
