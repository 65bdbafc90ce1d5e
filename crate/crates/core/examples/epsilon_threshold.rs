//! Confidence thresholding: keep only instances whose predicted confounder
//! has posterior at least ε. Higher ε keeps fewer instances, and the kept
//! predictions correlate with y more like the true confounder does.

use confound::adjust::threshold_filter;
use confound::corpus::{biased_sample, generate_pool, split_pool, BiasSpec, CorpusConfig, Exclusion, Split};
use confound::learner::{annotate_z, fit, TrainConfig};
use confound::metrics::{f1_scores, phi_correlation};
use confound::Target;

pub fn run_example() -> confound::Result<()> {
    let config = CorpusConfig {
        vocab_size_y: 8,
        vocab_size_z: 8,
        doc_count: 8000,
        seed: 5,
        ..CorpusConfig::default()
    };
    let pool = generate_pool(&config)?;
    let (z_idx, y_idx) = split_pool(pool.len(), 0.5, 5);
    let z_model = fit(&pool.subset(&z_idx), Target::Z, &TrainConfig::default())?.model;
    let d_y = biased_sample(
        &pool.subset(&y_idx),
        &BiasSpec::uniform(0.9, 0.5, 1500, 0),
        Split::Train,
        5,
        &mut Exclusion::new(),
    )?;
    let annotated = annotate_z(&z_model, &d_y)?;
    let r_true = phi_correlation(&d_y.ys(), &d_y.zs())?.value;
    println!("true r(y,z) = {r_true:.3}");
    println!("{:>5} {:>9} {:>9} {:>9}", "eps", "retained", "r_eps", "acc_z");
    for eps in [0.5, 0.6, 0.7, 0.8, 0.9] {
        let kept = threshold_filter(&annotated, eps)?;
        let z_pred = kept.data.z_preds()?;
        let r_eps = phi_correlation(&kept.data.ys(), &z_pred)?.value;
        let acc = f1_scores(&z_pred, &kept.data.zs())?.accuracy;
        println!("{eps:>5.2} {:>9.3} {r_eps:>9.3} {acc:>9.3}", kept.retained_fraction);
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> confound::Result<()> {
    run_example()
}
