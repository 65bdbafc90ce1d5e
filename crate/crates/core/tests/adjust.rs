use confound::adjust::{
    correlation_match, correlation_objective, estimate_correlation, match_assignments,
    threshold_filter, MatchOrder,
};
use confound::corpus::{
    bias_for_correlation, biased_sample, generate_pool, inject_noise, split_pool, BiasSpec,
    CorpusConfig, Exclusion, Split,
};
use confound::learner::{annotate_z, crossval_z_errors, fit, TrainConfig};
use confound::metrics::{f1_scores, mean, phi_correlation, population_variance};
use confound::{Dataset, Instance, Target, ZPrediction};

fn corpus(seed: u64, doc_count: usize) -> CorpusConfig {
    CorpusConfig {
        vocab_size_y: 8,
        vocab_size_z: 8,
        doc_count,
        seed,
        ..CorpusConfig::default()
    }
}

/// A preliminary classifier trained on one half of a pool and a target
/// sample with training correlation `r` drawn from the other half.
fn annotated_target(seed: u64, r: f64, n: usize) -> (Dataset, Vec<u8>) {
    let pool = generate_pool(&corpus(seed, 8000)).unwrap();
    let (z_idx, y_idx) = split_pool(pool.len(), 0.5, seed);
    let d_z = pool.subset(&z_idx);
    let train = TrainConfig { seed, ..TrainConfig::default() };
    let errors = crossval_z_errors(&d_z, 10, &train).unwrap().errors;
    let model = fit(&d_z, Target::Z, &train).unwrap().model;
    let spec = BiasSpec::uniform(bias_for_correlation(r), 0.5, n, 0);
    let d_y = biased_sample(&pool.subset(&y_idx), &spec, Split::Train, seed, &mut Exclusion::new()).unwrap();
    (annotate_z(&model, &d_y).unwrap(), errors)
}

#[test]
fn worked_case_is_the_brute_force_optimum() {
    let preds: Vec<ZPrediction> = [(1, 0.95), (0, 0.55), (0, 0.9), (0, 0.9)]
        .iter()
        .map(|&(label, posterior)| ZPrediction { label, posterior })
        .collect();
    let y = [1, 1, 0, 0];
    let m = match_assignments(&preds, &y, 1.0, MatchOrder::AscendingConfidence).unwrap();
    let best = (0u8..16)
        .map(|mask| (0..4).map(|i| (mask >> i) & 1).collect::<Vec<u8>>())
        .max_by(|a, b| {
            let oa = correlation_objective(a, &preds, &y, 1.0).unwrap().value;
            let ob = correlation_objective(b, &preds, &y, 1.0).unwrap().value;
            oa.total_cmp(&ob)
        })
        .unwrap();
    assert_eq!(best, vec![1, 1, 0, 0]);
    assert_eq!(m.assignments, best);
}

/// Errors measured on one noisy sample, correction applied to another.
fn symmetric_noise_estimate(pool: &Dataset, p: f64, r: f64, seed: u64) -> f64 {
    let spec = BiasSpec::uniform(bias_for_correlation(r), 0.5, 5000, 0);
    let d = biased_sample(pool, &spec, Split::Train, seed, &mut Exclusion::new()).unwrap();
    let z_noisy = inject_noise(&d.zs(), p, 1000 + seed).unwrap();
    let mut annotated = d.clone();
    for (inst, &z) in annotated.instances.iter_mut().zip(&z_noisy) {
        inst.z_pred = Some(ZPrediction { label: z, posterior: 1.0 - p });
    }
    let errors = inject_noise(&vec![0; 5000], p, 2000 + seed).unwrap();
    estimate_correlation(&errors, &annotated).unwrap().r_hat
}

#[test]
fn corrected_estimate_inverts_symmetric_noise() {
    let pool: Vec<Instance> = (0..4)
        .flat_map(|c| (0..2500).map(move |_| Instance::new(Vec::new(), (c / 2) as u8, (c % 2) as u8)))
        .collect();
    let pool = Dataset::new(1, pool).unwrap();
    for p in [0.1, 0.2, 0.3, 0.4] {
        for r in [-0.6, 0.4, 0.8] {
            let estimates: Vec<f64> = (0..20).map(|seed| symmetric_noise_estimate(&pool, p, r, seed)).collect();
            // the correction scales sampling noise in r' by 1/(1-2p), so
            // single draws are only held to the bound at mild noise
            if p <= 0.2 {
                for e in &estimates {
                    assert!((e - r).abs() <= 0.05, "p={p} r={r}: r_hat {e}");
                }
            }
            let m = mean(&estimates);
            assert!((m - r).abs() <= 0.05, "p={p} r={r}: mean r_hat {m}");
        }
    }
}

#[test]
fn epsilon_raises_retained_accuracy() {
    let eps = [0.5, 0.6, 0.7, 0.8, 0.9];
    let mut acc = vec![Vec::new(); eps.len()];
    for seed in 0..20 {
        let (annotated, _) = annotated_target(seed, 0.6, 1000);
        for (k, &e) in eps.iter().enumerate() {
            let kept = threshold_filter(&annotated, e).unwrap();
            acc[k].push(f1_scores(&kept.data.z_preds().unwrap(), &kept.data.zs()).unwrap().accuracy);
        }
    }
    let means: Vec<f64> = acc.iter().map(|a| mean(a)).collect();
    let se: Vec<f64> = acc.iter().map(|a| (population_variance(a) / a.len() as f64).sqrt()).collect();
    for k in 1..eps.len() {
        assert!(means[k] >= means[k - 1] - se[k].max(se[k - 1]), "{means:?}");
    }
}

#[test]
fn matching_improves_confounder_accuracy() {
    for seed in 0..20 {
        let r = if seed % 2 == 0 { 0.6 } else { -0.8 };
        let (annotated, errors) = annotated_target(seed, r, 1000);
        let est = estimate_correlation(&errors, &annotated).unwrap();
        let m = correlation_match(&annotated, est.r_hat, MatchOrder::AscendingConfidence).unwrap();
        let z = annotated.zs();
        let before = f1_scores(&annotated.z_preds().unwrap(), &z).unwrap().accuracy;
        let after = f1_scores(&m.assignments, &z).unwrap().accuracy;
        assert!(after >= before, "seed {seed}: {before} -> {after}");
        assert!(m.flips as f64 <= 0.3 * annotated.len() as f64, "seed {seed}: {} flips", m.flips);
    }
}

#[test]
fn matching_moves_observed_toward_estimate() {
    let (annotated, errors) = annotated_target(3, 0.8, 1000);
    let est = estimate_correlation(&errors, &annotated).unwrap();
    let m = correlation_match(&annotated, est.r_hat, MatchOrder::AscendingConfidence).unwrap();
    let r_after = phi_correlation(&annotated.ys(), &m.assignments).unwrap().value;
    assert!((r_after - est.r_hat).abs() < (est.r_observed - est.r_hat).abs());
    assert!((r_after - est.r_hat).abs() < 0.01);
}

#[test]
fn filter_keeps_fields_and_order() {
    let (annotated, _) = annotated_target(4, 0.6, 500);
    let kept = threshold_filter(&annotated, 0.8).unwrap();
    let mut prev = None;
    for (&i, inst) in kept.retained.iter().zip(&kept.data.instances) {
        assert_eq!(inst, &annotated.instances[i]);
        assert!(prev.map_or(true, |p| p < i));
        prev = Some(i);
    }
    assert_eq!(threshold_filter(&annotated, 0.5).unwrap().data.len(), annotated.len());
}
