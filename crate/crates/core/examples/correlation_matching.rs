//! Correlation matching: correct the attenuated r(y, z') using the
//! preliminary classifier's cross-validated error variance, then flip the
//! least confident predictions until r(y, z') matches the estimate.

use confound::adjust::{correlation_match, correlation_objective, estimate_correlation, MatchOrder};
use confound::corpus::{bias_for_correlation, biased_sample, generate_pool, split_pool, BiasSpec, CorpusConfig, Exclusion, Split};
use confound::learner::{annotate_z, crossval_z_errors, fit, TrainConfig};
use confound::metrics::{f1_scores, phi_correlation};
use confound::Target;

pub fn run_example() -> confound::Result<()> {
    let config = CorpusConfig {
        vocab_size_y: 8,
        vocab_size_z: 8,
        doc_count: 12000,
        seed: 9,
        ..CorpusConfig::default()
    };
    let pool = generate_pool(&config)?;
    let (z_idx, y_idx) = split_pool(pool.len(), 0.3, 9);
    let d_z = pool.subset(&z_idx);
    let train = TrainConfig::default();
    let cv = crossval_z_errors(&d_z, 10, &train)?;
    let z_model = fit(&d_z, Target::Z, &train)?.model;
    println!("preliminary F1_z = {:.3}", cv.f1());

    let target_pool = pool.subset(&y_idx);
    println!("{:>7} {:>8} {:>7} {:>6} {:>9} {:>9}", "r_true", "r_obs", "r_hat", "flips", "acc_pre", "acc_post");
    for r in [-0.8, -0.4, 0.4, 0.8] {
        let spec = BiasSpec::uniform(bias_for_correlation(r), 0.5, 2000, 0);
        let d_y = biased_sample(&target_pool, &spec, Split::Train, 9, &mut Exclusion::new())?;
        let annotated = annotate_z(&z_model, &d_y)?;
        let est = estimate_correlation(&cv.errors, &annotated)?;
        let m = correlation_match(&annotated, est.r_hat, MatchOrder::AscendingConfidence)?;
        let z = d_y.zs();
        println!(
            "{:>7.3} {:>8.3} {:>7.3} {:>6} {:>9.3} {:>9.3}",
            phi_correlation(&d_y.ys(), &z)?.value,
            est.r_observed,
            est.r_hat,
            m.flips,
            f1_scores(&annotated.z_preds()?, &z)?.accuracy,
            f1_scores(&m.assignments, &z)?.accuracy,
        );
        let before = correlation_objective(&annotated.z_preds()?, &annotated.predictions()?, &annotated.ys(), est.r_hat)?;
        let after = correlation_objective(&m.assignments, &annotated.predictions()?, &annotated.ys(), est.r_hat)?;
        println!("        objective {:.4} -> {:.4}", before.value, after.value);
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> confound::Result<()> {
    run_example()
}
