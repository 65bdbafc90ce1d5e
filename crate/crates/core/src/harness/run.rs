//! The experiment families: noise injection into an observed confounder,
//! fixed preliminary quality across shifts, and the preliminary-quality by
//! shift grid.

use serde::{Deserialize, Serialize};

use super::config::{BiasPair, ExperimentConfig, Method};
use crate::adjust::{self, estimate_correlation, threshold_filter};
use crate::backdoor::{fit_backdoor, BackdoorModel};
use crate::corpus::{self, BiasSpec, Exclusion, Split};
use crate::data::{Dataset, Target};
use crate::error::{Error, Result};
use crate::learner::{self, annotate_z, crossval_z_errors, CrossVal, LogRegModel, TrainConfig};
use crate::metrics::{f1_scores, phi_correlation};
use crate::rng::{derive, tag_f64};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Noise,
    Umbrella,
    Heatmap,
}

impl Mode {
    pub fn name(self) -> &'static str {
        match self {
            Mode::Noise => "noise",
            Mode::Umbrella => "umbrella",
            Mode::Heatmap => "heatmap",
        }
    }
}

/// One evaluated (method, seed, noise, shift) cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Row {
    pub method: Method,
    pub seed: u64,
    /// Flip probability: on the observed confounder (noise mode) or on the
    /// preliminary training labels (umbrella and heatmap modes).
    pub noise: f64,
    pub b_train: f64,
    pub b_test: f64,
    pub delta_yz: f64,
    pub f1_z: Option<f64>,
    pub f1_y: f64,
    pub r_true: f64,
    pub r_observed: Option<f64>,
    pub r_hat: Option<f64>,
    /// Correlation of `y` with the confounder column the model was fit on.
    pub r_used: Option<f64>,
    pub flips: Option<usize>,
    pub degenerate: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SkippedCell {
    pub seed: u64,
    pub noise: f64,
    pub b_train: f64,
    pub b_test: f64,
    pub method: Option<Method>,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub mode: Mode,
    pub rows: Vec<Row>,
    pub skipped: Vec<SkippedCell>,
}

impl SweepResult {
    pub fn empty(mode: Mode) -> Self {
        SweepResult {
            mode,
            rows: Vec::new(),
            skipped: Vec::new(),
        }
    }

    /// Sorts rows by (method, seed, noise, b_train, b_test).
    pub fn sort(&mut self) {
        self.rows.sort_by(|a, b| {
            a.method
                .cmp(&b.method)
                .then(a.seed.cmp(&b.seed))
                .then(a.noise.total_cmp(&b.noise))
                .then(a.b_train.total_cmp(&b.b_train))
                .then(a.b_test.total_cmp(&b.b_test))
        });
    }

    pub fn rows_for(&self, method: Method) -> impl Iterator<Item = &Row> {
        self.rows.iter().filter(move |r| r.method == method)
    }
}

/// Data shared by every cell of one seed: the pool, the preliminary study's
/// training set and the disjoint part of the pool the target samples use.
pub struct SeedContext {
    pub seed: u64,
    pub d_z: Dataset,
    pub target_pool: Dataset,
}

impl SeedContext {
    pub fn new(config: &ExperimentConfig, seed: u64) -> Result<Self> {
        let corpus_cfg = corpus::CorpusConfig {
            seed: derive(config.corpus.seed, &[seed]),
            ..config.corpus
        };
        let pool = corpus::generate_pool(&corpus_cfg)?;
        let (z_idx, y_idx) = corpus::split_pool(pool.len(), config.prelim_split, derive(seed, &[1]));
        let z_part = pool.subset(&z_idx);
        let d_z = corpus::biased_sample(
            &z_part,
            &BiasSpec::uniform(0.5, 0.5, config.n_prelim, 0),
            Split::Train,
            derive(seed, &[2]),
            &mut Exclusion::new(),
        )?;
        Ok(SeedContext {
            seed,
            d_z,
            target_pool: pool.subset(&y_idx),
        })
    }

    /// Disjoint train and test samples for one shift setting.
    pub fn draw_cell(&self, config: &ExperimentConfig, pair: BiasPair) -> Result<Cell> {
        let spec = BiasSpec::uniform(pair.b_train, pair.b_test, config.n_train, config.n_test);
        let seed = derive(self.seed, &[3, tag_f64(pair.b_train), tag_f64(pair.b_test)]);
        let mut exclude = Exclusion::new();
        let train = corpus::biased_sample(&self.target_pool, &spec, Split::Train, seed, &mut exclude)?;
        let test = corpus::biased_sample(&self.target_pool, &spec, Split::Test, seed, &mut exclude)?;
        Ok(Cell { pair, train, test })
    }
}

pub struct Cell {
    pub pair: BiasPair,
    pub train: Dataset,
    pub test: Dataset,
}

impl Cell {
    pub fn r_true(&self) -> f64 {
        phi_correlation(&self.train.ys(), &self.train.zs())
            .map(|r| r.value)
            .unwrap_or(0.0)
    }
}

/// A confounder classifier trained on the (possibly label-flipped)
/// preliminary data, with its out-of-fold evaluation.
pub struct Preliminary {
    pub noise: f64,
    pub model: LogRegModel,
    pub cv: CrossVal,
}

impl Preliminary {
    pub fn train(d_z: &Dataset, noise: f64, config: &ExperimentConfig, seed: u64) -> Result<Self> {
        let noisy = corpus::inject_noise_dataset(d_z, noise, derive(seed, &[4, tag_f64(noise)]))?;
        let train_cfg = TrainConfig {
            seed: derive(seed, &[5]),
            ..config.train
        };
        let cv = crossval_z_errors(&noisy, config.folds, &train_cfg)?;
        let model = learner::fit(&noisy, Target::Z, &train_cfg)?.model;
        Ok(Preliminary { noise, model, cv })
    }

    pub fn f1_z(&self) -> f64 {
        self.cv.f1()
    }
}

/// Outcome of training and testing one method on one cell.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Outcome {
    pub f1_y: f64,
    pub r_observed: Option<f64>,
    pub r_hat: Option<f64>,
    pub r_used: Option<f64>,
    pub flips: Option<usize>,
    pub degenerate: bool,
}

fn ba_f1(model: &BackdoorModel, test: &Dataset) -> Result<f64> {
    let pred = test
        .instances
        .iter()
        .map(|i| model.predict_label(&i.features, 0.5))
        .collect::<Result<Vec<_>>>()?;
    Ok(f1_scores(&pred, &test.ys())?.f1_pos)
}

fn corr(y: &[u8], z: &[u8]) -> Result<f64> {
    Ok(phi_correlation(y, z)?.value)
}

pub fn evaluate_lr(cell: &Cell, train: &TrainConfig) -> Result<Outcome> {
    let model = learner::fit(&cell.train, Target::Y, train)?.model;
    let pred = cell
        .test
        .instances
        .iter()
        .map(|i| model.predict(&i.features))
        .collect::<Result<Vec<_>>>()?;
    Ok(Outcome {
        f1_y: f1_scores(&pred, &cell.test.ys())?.f1_pos,
        r_observed: None,
        r_hat: None,
        r_used: None,
        flips: None,
        degenerate: false,
    })
}

/// Back-door adjustment trained with the given confounder column.
pub fn evaluate_ba_with(cell: &Cell, z: &[u8], train: &TrainConfig) -> Result<Outcome> {
    let model = fit_backdoor(&cell.train, z, train)?;
    Ok(Outcome {
        f1_y: ba_f1(&model, &cell.test)?,
        r_observed: None,
        r_hat: None,
        r_used: Some(corr(&cell.train.ys(), z)?),
        flips: None,
        degenerate: false,
    })
}

/// Evaluates a preliminary-based method on a training set already annotated
/// with the preliminary classifier's predictions.
pub fn evaluate_adjusted(
    method: Method,
    cell: &Cell,
    annotated: &Dataset,
    prelim: &Preliminary,
    config: &ExperimentConfig,
) -> Result<Outcome> {
    let y = annotated.ys();
    let z_pred = annotated.z_preds()?;
    let r_observed = corr(&y, &z_pred)?;
    let train = &config.train;
    match method {
        Method::BaRaw => {
            let mut out = evaluate_ba_with(cell, &z_pred, train)?;
            out.r_observed = Some(r_observed);
            Ok(out)
        }
        Method::BaEpsilon => {
            let kept = threshold_filter(annotated, config.epsilon)?;
            let z_kept = kept.data.z_preds()?;
            let model = fit_backdoor(&kept.data, &z_kept, train)?;
            Ok(Outcome {
                f1_y: ba_f1(&model, &cell.test)?,
                r_observed: Some(r_observed),
                r_hat: None,
                r_used: Some(corr(&kept.data.ys(), &z_kept)?),
                flips: None,
                degenerate: false,
            })
        }
        Method::BaCorrmatch => {
            let est = estimate_correlation(&prelim.cv.errors, annotated)?;
            let m = adjust::correlation_match(annotated, est.r_hat, config.match_order)?;
            let mut out = evaluate_ba_with(cell, &m.assignments, train)?;
            out.r_observed = Some(r_observed);
            out.r_hat = Some(est.r_hat);
            out.flips = Some(m.flips);
            out.degenerate = est.degenerate || m.degenerate;
            Ok(out)
        }
        Method::Lr | Method::BaObserved => Err(Error::config(
            "methods",
            format!("{method} does not use the preliminary classifier"),
        )),
    }
}

fn row(
    method: Method,
    seed: u64,
    noise: f64,
    cell: &Cell,
    f1_z: Option<f64>,
    out: Outcome,
) -> Row {
    Row {
        method,
        seed,
        noise,
        b_train: cell.pair.b_train,
        b_test: cell.pair.b_test,
        delta_yz: cell.pair.delta_yz(),
        f1_z,
        f1_y: out.f1_y,
        r_true: cell.r_true(),
        r_observed: out.r_observed,
        r_hat: out.r_hat,
        r_used: out.r_used,
        flips: out.flips,
        degenerate: out.degenerate,
    }
}

fn skip(
    result: &mut SweepResult,
    seed: u64,
    noise: f64,
    pair: BiasPair,
    method: Option<Method>,
    err: Error,
) {
    log::warn!(
        "skipping cell seed={seed} noise={noise} b_train={} b_test={} method={}: {err}",
        pair.b_train,
        pair.b_test,
        method.map_or("*", Method::name)
    );
    result.skipped.push(SkippedCell {
        seed,
        noise,
        b_train: pair.b_train,
        b_test: pair.b_test,
        method,
        reason: err.to_string(),
    });
}

/// Observed confounder with label noise injected into the training column:
/// back-door adjustment on the flipped column versus plain logistic
/// regression, across the shift grid.
pub fn run_noise_sweep(config: &ExperimentConfig) -> Result<SweepResult> {
    config.validate()?;
    if !config.has(Method::Lr) || !config.has(Method::BaObserved) {
        return Err(Error::config("methods", "noise sweep needs lr and ba_observed"));
    }
    let mut result = SweepResult::empty(Mode::Noise);
    for &seed in &config.seeds {
        let ctx = SeedContext::new(config, seed)?;
        for &pair in &config.bias_grid {
            let cell = match ctx.draw_cell(config, pair) {
                Ok(c) => c,
                Err(e) => {
                    for &noise in &config.noise_grid {
                        skip(&mut result, seed, noise, pair, None, clone_err(&e));
                    }
                    continue;
                }
            };
            let lr = evaluate_lr(&cell, &config.train);
            let z_true = cell.train.zs();
            for &noise in &config.noise_grid {
                match &lr {
                    Ok(out) => result.rows.push(row(Method::Lr, seed, noise, &cell, None, *out)),
                    Err(e) => skip(&mut result, seed, noise, pair, Some(Method::Lr), clone_err(e)),
                }
                let noise_seed = derive(seed, &[6, tag_f64(pair.b_train), tag_f64(pair.b_test), tag_f64(noise)]);
                let outcome = corpus::inject_noise(&z_true, noise, noise_seed).and_then(|z| {
                    let f1_z = f1_scores(&z, &z_true)?.f1_pos;
                    let mut out = evaluate_ba_with(&cell, &z, &config.train)?;
                    out.r_observed = out.r_used;
                    Ok((f1_z, out))
                });
                match outcome {
                    Ok((f1_z, out)) => result
                        .rows
                        .push(row(Method::BaObserved, seed, noise, &cell, Some(f1_z), out)),
                    Err(e) => skip(&mut result, seed, noise, pair, Some(Method::BaObserved), e),
                }
            }
        }
    }
    result.sort();
    Ok(result)
}

/// Preliminary quality fixed by flipping `dz_noise` of the preliminary
/// labels; every configured method is run across the shift grid.
pub fn run_umbrella(config: &ExperimentConfig, dz_noise: f64) -> Result<SweepResult> {
    let cfg = ExperimentConfig {
        noise_grid: vec![dz_noise],
        ..config.clone()
    };
    let mut result = run_grid(&cfg)?;
    result.mode = Mode::Umbrella;
    Ok(result)
}

/// Full grid of preliminary-label noise by shift, for every method.
pub fn run_heatmap(config: &ExperimentConfig) -> Result<SweepResult> {
    let mut result = run_grid(config)?;
    result.mode = Mode::Heatmap;
    Ok(result)
}

fn run_grid(config: &ExperimentConfig) -> Result<SweepResult> {
    config.validate()?;
    let mut result = SweepResult::empty(Mode::Heatmap);
    let needs_prelim = config.methods.iter().any(|m| m.uses_preliminary());
    for &seed in &config.seeds {
        let ctx = SeedContext::new(config, seed)?;
        let prelims: Vec<Result<Preliminary>> = config
            .noise_grid
            .iter()
            .map(|&noise| {
                if needs_prelim {
                    Preliminary::train(&ctx.d_z, noise, config, seed)
                } else {
                    Err(Error::config("methods", "no preliminary needed"))
                }
            })
            .collect();

        for &pair in &config.bias_grid {
            let cell = match ctx.draw_cell(config, pair) {
                Ok(c) => c,
                Err(e) => {
                    for &noise in &config.noise_grid {
                        skip(&mut result, seed, noise, pair, None, clone_err(&e));
                    }
                    continue;
                }
            };
            // methods that ignore the preliminary study are computed once per cell
            let lr = config.has(Method::Lr).then(|| evaluate_lr(&cell, &config.train));
            let observed = config
                .has(Method::BaObserved)
                .then(|| evaluate_ba_with(&cell, &cell.train.zs(), &config.train));

            for (&noise, prelim) in config.noise_grid.iter().zip(&prelims) {
                let f1_z = prelim.as_ref().ok().map(Preliminary::f1_z);
                for (method, out) in [(Method::Lr, &lr), (Method::BaObserved, &observed)] {
                    match out {
                        Some(Ok(o)) => result.rows.push(row(method, seed, noise, &cell, f1_z, *o)),
                        Some(Err(e)) => skip(&mut result, seed, noise, pair, Some(method), clone_err(e)),
                        None => {}
                    }
                }
                if !needs_prelim {
                    continue;
                }
                let prelim = match prelim {
                    Ok(p) => p,
                    Err(e) => {
                        skip(&mut result, seed, noise, pair, None, clone_err(e));
                        continue;
                    }
                };
                let annotated = match annotate_z(&prelim.model, &cell.train) {
                    Ok(a) => a,
                    Err(e) => {
                        skip(&mut result, seed, noise, pair, None, e);
                        continue;
                    }
                };
                for &method in config.methods.iter().filter(|m| m.uses_preliminary()) {
                    match evaluate_adjusted(method, &cell, &annotated, prelim, config) {
                        Ok(o) => result.rows.push(row(method, seed, noise, &cell, f1_z, o)),
                        Err(e) => skip(&mut result, seed, noise, pair, Some(method), e),
                    }
                }
            }
        }
    }
    result.sort();
    Ok(result)
}

/// Errors are not `Clone`; cell failures that fan out to several rows are
/// re-created from their message.
fn clone_err(e: &Error) -> Error {
    match e {
        Error::Infeasible {
            y,
            z,
            needed,
            available,
        } => Error::Infeasible {
            y: *y,
            z: *z,
            needed: *needed,
            available: *available,
        },
        other => Error::Degenerate(other.to_string()),
    }
}
