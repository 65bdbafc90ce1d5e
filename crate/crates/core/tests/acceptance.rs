//! Acceptance criteria. Each test prints one `PASS`/`FAIL` line with the
//! measured quantities, then asserts. Run with `--nocapture` to see them.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use confound::adjust::{
    correction_factor, correlation_objective, estimate_correlation,
    match_assignments, threshold_filter, MatchOrder,
};
use confound::backdoor::fit_backdoor;
use confound::corpus::{
    bias_for_correlation, biased_sample, generate_pool, split_pool, BiasSpec, CorpusConfig,
    Exclusion, Split,
};
use confound::data::{Dataset, Instance, ZPrediction};
use confound::harness::{
    emit_csv, robustness, run_heatmap, run_noise_sweep, run_umbrella, BiasPair, ExperimentConfig,
    Method, SweepResult,
};
use confound::learner::{annotate_z, crossval_z_errors, fit, loss_and_gradient, LogRegModel, TrainConfig};
use confound::metrics::{mean, phi_correlation, population_variance};
use confound::Target;

fn verdict(id: u32, name: &str, pass: bool, detail: String) {
    println!(
        "{} criterion {id} ({name}): {detail}",
        if pass { "PASS" } else { "FAIL" }
    );
    assert!(pass, "criterion {id} failed: {detail}");
}

fn seeds10() -> Vec<u64> {
    (0..10).collect()
}

/// Mean F1_y of `method` over the rows with `|δ| >= min_delta`.
fn mean_f1(result: &SweepResult, method: Method, min_delta: f64) -> f64 {
    let v: Vec<f64> = result
        .rows_for(method)
        .filter(|r| r.delta_yz.abs() >= min_delta - 1e-9)
        .map(|r| r.f1_y)
        .collect();
    assert!(!v.is_empty(), "no rows for {method}");
    mean(&v)
}

#[test]
fn c1_attenuation_correction_exact() {
    let mut worst = 0.0f64;
    for p in [0.1, 0.2, 0.3, 0.4] {
        let v_ez = p * (1.0 - p);
        let v_z = 0.25 - v_ez;
        let err = (correction_factor(v_ez, v_z) - 1.0 / (1.0 - 2.0 * p)).abs();
        worst = worst.max(err);
    }
    verdict(1, "attenuation correction", worst <= 1e-12, format!("max |factor - 1/(1-2p)| = {worst:.2e} (tol 1e-12)"));
}

#[test]
fn c2_pipeline_correlation_recovery() {
    let corpus = CorpusConfig {
        vocab_size_y: 8,
        vocab_size_z: 8,
        doc_count: 14_000,
        ..CorpusConfig::default()
    };
    let targets = [-0.8, -0.6, -0.4, -0.2, 0.2, 0.4, 0.6, 0.8];
    let mut within = vec![0usize; targets.len()];
    let mut worst = 0.0f64;
    let mut f1_z = Vec::new();
    for seed in 0..20u64 {
        let pool = generate_pool(&CorpusConfig { seed, ..corpus }).unwrap();
        let (z_idx, y_idx) = split_pool(pool.len(), 1.0 / 7.0, seed);
        let d_z = pool.subset(&z_idx);
        let train = TrainConfig {
            seed,
            ..TrainConfig::default()
        };
        let cv = crossval_z_errors(&d_z, 10, &train).unwrap();
        f1_z.push(cv.f1());
        let model = fit(&d_z, Target::Z, &train).unwrap().model;
        let target_pool = pool.subset(&y_idx);
        for (k, &r) in targets.iter().enumerate() {
            let spec = BiasSpec::uniform(bias_for_correlation(r), 0.5, 5000, 0);
            let d_y = biased_sample(&target_pool, &spec, Split::Train, seed * 31 + k as u64, &mut Exclusion::new()).unwrap();
            let r_true = phi_correlation(&d_y.ys(), &d_y.zs()).unwrap().value;
            let est = estimate_correlation(&cv.errors, &annotate_z(&model, &d_y).unwrap()).unwrap();
            let err = (est.r_hat - r_true).abs();
            worst = worst.max(err);
            within[k] += (err <= 0.1) as usize;
        }
    }
    let min_rate = within.iter().map(|&w| w as f64 / 20.0).fold(1.0, f64::min);
    verdict(
        2,
        "correlation recovery",
        min_rate >= 0.9,
        format!(
            "F1_z {:.3}; min fraction within 0.1 over settings = {min_rate:.2} (need 0.90); per setting {within:?}/20; worst |r_hat - r_true| = {worst:.3}",
            mean(&f1_z)
        ),
    );
}

#[test]
fn c3_greedy_vs_brute_force() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut gap_ok = 0;
    let mut trace_ok = 0;
    let mut local_optima = 0;
    let mut worst_excess = f64::NEG_INFINITY;
    let cases = 200;
    for _ in 0..cases {
        let n: usize = rng.gen_range(4..=12);
        let y: Vec<u8> = loop {
            let y: Vec<u8> = (0..n).map(|_| rng.gen_range(0..2)).collect();
            if y.contains(&0) && y.contains(&1) {
                break y;
            }
        };
        let preds: Vec<ZPrediction> = (0..n)
            .map(|_| ZPrediction::from_positive_prob(rng.gen_range(0.0..1.0)))
            .collect();
        let r_hat = rng.gen_range(-1.0..1.0);
        let m = match_assignments(&preds, &y, r_hat, MatchOrder::AscendingConfidence).unwrap();

        let mut best: Option<(f64, f64)> = None;
        for mask in 0u32..(1 << n) {
            let z: Vec<u8> = (0..n).map(|i| ((mask >> i) & 1) as u8).collect();
            let o = correlation_objective(&z, &preds, &y, r_hat).unwrap();
            if best.map_or(true, |(v, _)| o.value > v) {
                best = Some((o.value, o.gap));
            }
        }
        let opt_gap = best.unwrap().1;
        worst_excess = worst_excess.max(m.final_gap - opt_gap);
        if m.final_gap <= opt_gap + 0.05 {
            gap_ok += 1;
        } else {
            // no single flip helps: the optimum needs several flips at once
            let stuck = (0..n).all(|i| {
                let mut z = m.assignments.clone();
                z[i] ^= 1;
                (r_hat - phi_correlation(&z, &y).unwrap().value).abs() >= m.final_gap
            });
            local_optima += stuck as usize;
        }
        trace_ok += m.objective_trace.windows(2).all(|w| w[1] < w[0]) as usize;
    }
    verdict(
        3,
        "greedy vs brute force",
        gap_ok == cases && trace_ok == cases,
        format!(
            "gap within optimum + 0.05 in {gap_ok}/{cases} ({local_optima} of the {} misses are single-flip local optima), strictly decreasing traces {trace_ok}/{cases}, worst excess {worst_excess:+.3}",
            cases - gap_ok
        ),
    );
}

#[test]
fn c4_backdoor_benefit_observed() {
    let config = ExperimentConfig {
        bias_grid: vec![BiasPair::from_correlations(0.6, -0.6)],
        methods: vec![Method::Lr, Method::BaObserved],
        seeds: seeds10(),
        n_train: 1000,
        n_test: 1000,
        ..ExperimentConfig::default()
    };
    let result = run_umbrella(&config, 0.0).unwrap();
    assert_eq!(result.rows.len(), 20);
    let lr = mean_f1(&result, Method::Lr, 0.0);
    let ba = mean_f1(&result, Method::BaObserved, 0.0);
    verdict(
        4,
        "back-door benefit, observed z",
        ba - lr >= 0.04,
        format!("F1_y ba_observed {ba:.4} - lr {lr:.4} = {:+.4} (need >= 0.04)", ba - lr),
    );
}

#[test]
fn c5_noise_degradation_trend() {
    let config = ExperimentConfig {
        noise_grid: vec![0.0, 0.05, 0.10, 0.15, 0.20],
        methods: vec![Method::Lr, Method::BaObserved],
        seeds: seeds10(),
        ..ExperimentConfig::default()
    };
    let result = run_noise_sweep(&config).unwrap();
    let ba: Vec<_> = robustness(&result)
        .into_iter()
        .filter(|r| r.method == Method::BaObserved)
        .collect();
    assert_eq!(ba.len(), 5);
    let means: Vec<f64> = ba.iter().map(|r| r.mean_f1_y).collect();
    let stds: Vec<f64> = ba.iter().map(|r| r.std_f1_y).collect();
    let mean_ok = means.windows(2).all(|w| w[1] <= w[0] + 0.01);
    let std_ok = stds.windows(2).all(|w| w[1] >= w[0] - 0.01);
    verdict(
        5,
        "noise degradation trend",
        mean_ok && std_ok,
        format!("mean F1_y {:?}, std {:?}", rounded(&means), rounded(&stds)),
    );
}

fn rounded(xs: &[f64]) -> Vec<f64> {
    xs.iter().map(|x| (x * 1e4).round() / 1e4).collect()
}

#[test]
fn c6_robustness_ordering() {
    let config = ExperimentConfig {
        methods: vec![Method::BaRaw, Method::BaCorrmatch],
        seeds: seeds10(),
        ..ExperimentConfig::default()
    };
    let result = run_heatmap(&config).unwrap();
    let summary = robustness(&result);
    let mut high = Vec::new();
    let mut low = Vec::new();
    let mut lines = Vec::new();
    for &noise in &config.noise_grid {
        let get = |m: Method| {
            summary
                .iter()
                .find(|r| r.method == m && (r.noise - noise).abs() < 1e-12)
                .expect("row present")
        };
        let (raw, cm) = (get(Method::BaRaw), get(Method::BaCorrmatch));
        let f1_z = raw.mean_f1_z.unwrap();
        lines.push(format!("F1_z {f1_z:.3}: raw {:.4} cm {:.4}", raw.std_f1_y, cm.std_f1_y));
        if f1_z >= 0.70 {
            high.push(cm.std_f1_y < raw.std_f1_y);
        }
        if f1_z <= 0.58 {
            low.push(raw.std_f1_y <= cm.std_f1_y);
        }
    }
    let pass = !high.is_empty() && !low.is_empty() && high.iter().chain(&low).all(|&b| b);
    verdict(
        6,
        "robustness ordering",
        pass,
        format!(
            "{} high-quality rows, {} near-chance rows; {}",
            high.len(),
            low.len(),
            lines.join("; ")
        ),
    );
}

#[test]
fn c7_extreme_shift_ordering() {
    let config = ExperimentConfig {
        methods: vec![Method::BaRaw, Method::BaEpsilon, Method::BaCorrmatch],
        seeds: seeds10(),
        ..ExperimentConfig::default()
    };
    let result = run_umbrella(&config, 0.0).unwrap();
    let f1_z = mean(&result.rows.iter().filter_map(|r| r.f1_z).collect::<Vec<_>>());
    let cm = mean_f1(&result, Method::BaCorrmatch, 1.2);
    let raw = mean_f1(&result, Method::BaRaw, 1.2);
    let eps = mean_f1(&result, Method::BaEpsilon, 1.2);
    verdict(
        7,
        "extreme-shift ordering",
        (0.73..=0.83).contains(&f1_z) && cm - raw >= 0.05 && cm - eps >= 0.03,
        format!(
            "F1_z {f1_z:.3}; |delta| >= 1.2: corrmatch {cm:.4}, raw {raw:.4} ({:+.4}, need 0.05), epsilon {eps:.4} ({:+.4}, need 0.03)",
            cm - raw,
            cm - eps
        ),
    );
}

#[test]
fn c8_epsilon_calibration() {
    let eps = [0.5, 0.6, 0.7, 0.8, 0.9];
    let corpus = CorpusConfig {
        vocab_size_y: 8,
        vocab_size_z: 8,
        doc_count: 8000,
        ..CorpusConfig::default()
    };
    let seeds = 20;
    let mut gaps = vec![Vec::new(); eps.len()];
    let mut retained_09 = Vec::new();
    for seed in 0..seeds {
        let pool = generate_pool(&CorpusConfig { seed, ..corpus }).unwrap();
        let (z_idx, y_idx) = split_pool(pool.len(), 0.5, seed);
        let model = fit(&pool.subset(&z_idx), Target::Z, &TrainConfig::default()).unwrap().model;
        let spec = BiasSpec::uniform(0.8, 0.5, 1000, 0);
        let d_y = biased_sample(&pool.subset(&y_idx), &spec, Split::Train, seed, &mut Exclusion::new()).unwrap();
        let r_true = phi_correlation(&d_y.ys(), &d_y.zs()).unwrap().value;
        let annotated = annotate_z(&model, &d_y).unwrap();
        for (k, &e) in eps.iter().enumerate() {
            let kept = threshold_filter(&annotated, e).unwrap();
            let r = phi_correlation(&kept.data.ys(), &kept.data.z_preds().unwrap()).unwrap().value;
            gaps[k].push((r - r_true).abs());
            if e == 0.9 {
                retained_09.push(kept.retained_fraction);
            }
        }
    }
    let means: Vec<f64> = gaps.iter().map(|g| mean(g)).collect();
    let se: Vec<f64> = gaps
        .iter()
        .map(|g| (population_variance(g) / g.len() as f64).sqrt())
        .collect();
    let pass = (1..eps.len()).all(|k| means[k] <= means[k - 1] + se[k].max(se[k - 1]));
    verdict(
        8,
        "epsilon calibration",
        pass,
        format!(
            "mean |r_eps - r_true| over eps {eps:?} = {:?}; retained fraction at 0.9 = {:.3}",
            rounded(&means),
            mean(&retained_09)
        ),
    );
}

#[test]
fn c9_numerical_core() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let vocab = 20;
    let h = 1e-6;
    let mut worst_rel = 0.0f64;
    for _ in 0..50 {
        let n = rng.gen_range(5..40);
        let instances = (0..n)
            .map(|_| {
                let mut f: Vec<u32> = (0..vocab as u32).filter(|_| rng.gen_bool(0.3)).collect();
                f.dedup();
                Instance::new(f, rng.gen_range(0..2), rng.gen_range(0..2))
            })
            .collect();
        let data = Dataset::new(vocab, instances).unwrap();
        let mut model = LogRegModel::zeros(vocab, rng.gen_range(0.1..3.0), rng.gen_range(0.1..3.0), 3);
        for w in &mut model.weights {
            *w = rng.gen_range(-1.5..1.5);
        }
        model.intercept = rng.gen_range(-1.0..1.0);
        let (_, grad) = loss_and_gradient(&model, &data, Target::Y).unwrap();
        for j in 0..=vocab {
            let eval = |delta: f64| {
                let mut m = model.clone();
                if j < vocab {
                    m.weights[j] += delta;
                } else {
                    m.intercept += delta;
                }
                loss_and_gradient(&m, &data, Target::Y).unwrap().0
            };
            let fd = (eval(h) - eval(-h)) / (2.0 * h);
            worst_rel = worst_rel.max((fd - grad[j]).abs() / grad[j].abs().max(1.0));
        }
    }
    let grad_ok = worst_rel <= 1e-5;

    // adjusted and complementary probabilities sum to one
    let pool = generate_pool(&CorpusConfig {
        doc_count: 400,
        seed: 9,
        ..CorpusConfig::default()
    })
    .unwrap();
    let ba = fit_backdoor(&pool, &pool.zs(), &TrainConfig::default()).unwrap();
    let mut worst_norm = 0.0f64;
    for inst in &pool.instances {
        let (c0, c1) = (
            ba.conditional(&inst.features, 0).unwrap(),
            ba.conditional(&inst.features, 1).unwrap(),
        );
        let p1 = ba.predict_adjusted(&inst.features).unwrap();
        let p0 = (1.0 - ba.p_z) * (1.0 - c0) + ba.p_z * (1.0 - c1);
        worst_norm = worst_norm.max((p0 + p1 - 1.0).abs());
    }
    let norm_ok = worst_norm <= 1e-12;

    let config = ExperimentConfig {
        noise_grid: vec![0.0, 0.2],
        bias_grid: vec![BiasPair::from_correlations(0.6, -0.6), BiasPair::from_correlations(0.6, 0.2)],
        seeds: vec![0, 1],
        ..ExperimentConfig::default()
    };
    let dir = tempfile::tempdir().unwrap();
    let mut identical = true;
    for (name, run) in [
        ("noise", run_noise_sweep as fn(&ExperimentConfig) -> confound::Result<SweepResult>),
        ("umbrella", |c: &ExperimentConfig| run_umbrella(c, 0.0)),
        ("heatmap", run_heatmap),
    ] {
        let mut bytes = Vec::new();
        for k in 0..2 {
            let path = dir.path().join(format!("{name}{k}.csv"));
            let cfg = ExperimentConfig {
                methods: if name == "noise" {
                    vec![Method::Lr, Method::BaObserved]
                } else {
                    Method::ALL.to_vec()
                },
                ..config.clone()
            };
            emit_csv(&run(&cfg).unwrap(), Some(&cfg), &path).unwrap();
            bytes.push(std::fs::read(&path).unwrap());
        }
        identical &= bytes[0] == bytes[1];
    }
    verdict(
        9,
        "numerical core",
        grad_ok && norm_ok && identical,
        format!(
            "worst gradient error {worst_rel:.2e} (tol 1e-5), worst normalization error {worst_norm:.2e} (tol 1e-12), sweeps byte-identical: {identical}"
        ),
    );
}
