//! L2-regularized binary logistic regression over sparse binary features.
//!
//! The objective is
//!
//! ```text
//! L(w, b) = Σ_i [ log(1 + exp(s_i)) - y_i s_i ] + ½ Σ_j λ_j w_j²,   s_i = w·x_i + b
//! ```
//!
//! with an unregularized intercept. `λ_j` is `l2_text` for ordinary terms and
//! `l2_confounder` for the trailing confounder-indicator slots. Minimization
//! uses L-BFGS whose line search solves `φ'(α) = 0` by safeguarded Newton
//! steps, which keeps progress possible after loss differences fall below
//! floating-point resolution.

use std::collections::VecDeque;
use std::io::{BufRead, Write};

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::data::{Dataset, Target, ZPrediction};
use crate::error::{Error, Result};
use crate::metrics::{f1_scores, EvalReport};
use crate::rng;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub l2_text: f64,
    pub l2_confounder: f64,
    pub max_iters: usize,
    /// Convergence tolerance on the relative change of the loss.
    pub tol: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            l2_text: 1.0,
            l2_confounder: 1.0,
            max_iters: 500,
            tol: 1e-8,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.l2_text >= 0.0 && self.l2_text.is_finite()) {
            return Err(Error::config("l2_text", "must be a finite value >= 0"));
        }
        if !(self.l2_confounder >= 0.0 && self.l2_confounder.is_finite()) {
            return Err(Error::config("l2_confounder", "must be a finite value >= 0"));
        }
        if self.max_iters < 1 {
            return Err(Error::config("max_iters", "must be >= 1"));
        }
        if !(self.tol > 0.0) {
            return Err(Error::config("tol", "must be > 0"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LogRegModel {
    pub weights: Vec<f64>,
    pub intercept: f64,
    pub l2_text: f64,
    pub l2_confounder: f64,
    /// Number of trailing weights penalized with `l2_confounder`.
    pub confounder_features: usize,
}

/// A fitted model plus optimizer metadata.
#[derive(Debug, Clone)]
pub struct Fit {
    pub model: LogRegModel,
    pub converged: bool,
    pub iterations: usize,
    pub loss: f64,
}

#[inline]
pub fn sigmoid(s: f64) -> f64 {
    if s >= 0.0 {
        1.0 / (1.0 + (-s).exp())
    } else {
        let e = s.exp();
        e / (1.0 + e)
    }
}

#[inline]
fn softplus(s: f64) -> f64 {
    if s > 0.0 {
        s + (-s).exp().ln_1p()
    } else {
        s.exp().ln_1p()
    }
}

impl LogRegModel {
    pub fn zeros(dim: usize, l2_text: f64, l2_confounder: f64, confounder_features: usize) -> Self {
        LogRegModel {
            weights: vec![0.0; dim],
            intercept: 0.0,
            l2_text,
            l2_confounder,
            confounder_features,
        }
    }

    pub fn dim(&self) -> usize {
        self.weights.len()
    }

    fn penalty(&self, j: usize) -> f64 {
        if j + self.confounder_features >= self.weights.len() {
            self.l2_confounder
        } else {
            self.l2_text
        }
    }

    fn check(&self, features: &[u32]) -> Result<()> {
        match features.iter().find(|&&f| f as usize >= self.dim()) {
            Some(&f) => Err(Error::Dimension {
                index: f as usize,
                dim: self.dim(),
            }),
            None => Ok(()),
        }
    }

    #[inline]
    pub(crate) fn score_unchecked(&self, features: &[u32]) -> f64 {
        self.intercept
            + features
                .iter()
                .map(|&f| self.weights[f as usize])
                .sum::<f64>()
    }

    /// Linear score `w·x + b`.
    pub fn score(&self, features: &[u32]) -> Result<f64> {
        self.check(features)?;
        Ok(self.score_unchecked(features))
    }

    /// `p(class 1 | x) = σ(w·x + b)`.
    pub fn predict_posterior(&self, features: &[u32]) -> Result<f64> {
        self.score(features).map(sigmoid)
    }

    pub fn predict(&self, features: &[u32]) -> Result<u8> {
        self.predict_posterior(features).map(|p| (p >= 0.5) as u8)
    }

    /// Argmax prediction with the posterior of the predicted class.
    pub fn predict_z(&self, features: &[u32]) -> Result<ZPrediction> {
        self.predict_posterior(features)
            .map(ZPrediction::from_positive_prob)
    }

    /// Regularization term `½ Σ_j λ_j w_j²`.
    pub fn regularizer(&self) -> f64 {
        self.weights
            .iter()
            .enumerate()
            .map(|(j, w)| 0.5 * self.penalty(j) * w * w)
            .sum()
    }

    /// Writes the versioned plain-text model format.
    pub fn write_to<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "confound-logreg v1")?;
        writeln!(w, "dim {}", self.dim())?;
        writeln!(w, "confounder_features {}", self.confounder_features)?;
        writeln!(w, "l2_text {}", self.l2_text)?;
        writeln!(w, "l2_confounder {}", self.l2_confounder)?;
        writeln!(w, "intercept {}", self.intercept)?;
        writeln!(w, "weights")?;
        for x in &self.weights {
            writeln!(w, "{x}")?;
        }
        Ok(())
    }

    pub fn read_from<R: BufRead>(r: R) -> Result<Self> {
        let mut lines = LineReader::new(r.lines());
        Self::read_lines(&mut lines)
    }

    pub(crate) fn read_lines<I>(lines: &mut LineReader<I>) -> Result<Self>
    where
        I: Iterator<Item = std::io::Result<String>>,
    {
        lines.expect_exact("confound-logreg v1")?;
        let dim: usize = lines.keyed("dim")?;
        let confounder_features: usize = lines.keyed("confounder_features")?;
        let l2_text: f64 = lines.keyed("l2_text")?;
        let l2_confounder: f64 = lines.keyed("l2_confounder")?;
        let intercept: f64 = lines.keyed("intercept")?;
        lines.expect_exact("weights")?;
        let weights = (0..dim)
            .map(|_| lines.value::<f64>())
            .collect::<Result<Vec<_>>>()?;
        if confounder_features > dim {
            return Err(lines.err("confounder_features exceeds dim"));
        }
        Ok(LogRegModel {
            weights,
            intercept,
            l2_text,
            l2_confounder,
            confounder_features,
        })
    }
}

/// Line cursor for the plain-text model formats.
pub(crate) struct LineReader<I> {
    inner: I,
    line: usize,
}

impl<I: Iterator<Item = std::io::Result<String>>> LineReader<I> {
    pub(crate) fn new(inner: I) -> Self {
        LineReader { inner, line: 0 }
    }

    pub(crate) fn err(&self, reason: impl Into<String>) -> Error {
        Error::Parse {
            line: self.line,
            reason: reason.into(),
        }
    }

    fn next_line(&mut self) -> Result<String> {
        self.line += 1;
        match self.inner.next() {
            Some(Ok(l)) => Ok(l.trim_end().to_string()),
            Some(Err(e)) => Err(self.err(e.to_string())),
            None => Err(self.err("unexpected end of input")),
        }
    }

    pub(crate) fn expect_exact(&mut self, want: &str) -> Result<()> {
        let got = self.next_line()?;
        if got == want {
            Ok(())
        } else {
            Err(self.err(format!("expected `{want}`, got `{got}`")))
        }
    }

    pub(crate) fn keyed<T: std::str::FromStr>(&mut self, key: &str) -> Result<T> {
        let got = self.next_line()?;
        got.strip_prefix(key)
            .and_then(|rest| rest.strip_prefix(' '))
            .and_then(|v| v.parse().ok())
            .ok_or_else(|| self.err(format!("expected `{key} <value>`, got `{got}`")))
    }

    fn value<T: std::str::FromStr>(&mut self) -> Result<T> {
        let got = self.next_line()?;
        got.parse()
            .map_err(|_| self.err(format!("bad value `{got}`")))
    }
}

/// Sparse design used by the optimizer.
pub(crate) struct Problem<'a> {
    pub rows: Vec<&'a [u32]>,
    pub labels: Vec<f64>,
    pub dim: usize,
    pub penalties: Vec<f64>,
}

impl<'a> Problem<'a> {
    pub(crate) fn new(
        rows: Vec<&'a [u32]>,
        labels: &[u8],
        dim: usize,
        l2_text: f64,
        l2_confounder: f64,
        confounder_features: usize,
    ) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::Degenerate("cannot fit on an empty dataset".into()));
        }
        let pos = labels.iter().filter(|&&l| l == 1).count();
        if pos == 0 || pos == labels.len() {
            return Err(Error::Degenerate(format!(
                "training labels contain a single class ({} instances)",
                labels.len()
            )));
        }
        for row in &rows {
            if let Some(&f) = row.iter().find(|&&f| f as usize >= dim) {
                return Err(Error::Dimension {
                    index: f as usize,
                    dim,
                });
            }
        }
        let penalties = (0..dim)
            .map(|j| {
                if j + confounder_features >= dim {
                    l2_confounder
                } else {
                    l2_text
                }
            })
            .collect();
        Ok(Problem {
            rows,
            labels: labels.iter().map(|&l| l as f64).collect(),
            dim,
            penalties,
        })
    }

    fn scores(&self, theta: &[f64]) -> Vec<f64> {
        let b = theta[self.dim];
        self.rows
            .iter()
            .map(|r| b + r.iter().map(|&f| theta[f as usize]).sum::<f64>())
            .collect()
    }

    /// Loss and gradient at `theta = [w..., b]`.
    pub(crate) fn loss_grad(&self, theta: &[f64]) -> (f64, Vec<f64>) {
        let mut grad = vec![0.0; self.dim + 1];
        let mut loss = 0.0;
        for (row, (&y, s)) in self
            .rows
            .iter()
            .zip(self.labels.iter().zip(self.scores(theta)))
        {
            loss += softplus(s) - y * s;
            let r = sigmoid(s) - y;
            for &f in row.iter() {
                grad[f as usize] += r;
            }
            grad[self.dim] += r;
        }
        for j in 0..self.dim {
            let lam = self.penalties[j];
            loss += 0.5 * lam * theta[j] * theta[j];
            grad[j] += lam * theta[j];
        }
        (loss, grad)
    }

    /// Solves `φ'(α) = 0` for `φ(α) = L(θ + α d)` by safeguarded Newton.
    fn line_search(&self, theta: &[f64], dir: &[f64], slope0: f64) -> f64 {
        let s0 = self.scores(theta);
        let b = dir[self.dim];
        let t: Vec<f64> = self
            .rows
            .iter()
            .map(|r| b + r.iter().map(|&f| dir[f as usize]).sum::<f64>())
            .collect();
        let (mut wd, mut dd) = (0.0, 0.0);
        for j in 0..self.dim {
            wd += self.penalties[j] * theta[j] * dir[j];
            dd += self.penalties[j] * dir[j] * dir[j];
        }
        let derivs = |a: f64| {
            let (mut d1, mut d2) = (wd + a * dd, dd);
            for ((&s, &ti), &y) in s0.iter().zip(&t).zip(&self.labels) {
                let p = sigmoid(s + a * ti);
                d1 += (p - y) * ti;
                d2 += p * (1.0 - p) * ti * ti;
            }
            (d1, d2)
        };

        let (mut lo, mut hi) = (0.0f64, f64::INFINITY);
        let mut alpha = 1.0;
        for _ in 0..50 {
            let (d1, d2) = derivs(alpha);
            if d1.abs() <= 1e-3 * slope0.abs() {
                break;
            }
            if d1 < 0.0 {
                lo = alpha;
            } else {
                hi = alpha;
            }
            let newton = if d2 > 0.0 { alpha - d1 / d2 } else { f64::NAN };
            alpha = if newton.is_finite() && newton > lo && newton < hi {
                newton
            } else if hi.is_finite() {
                0.5 * (lo + hi)
            } else {
                2.0 * lo.max(alpha)
            };
        }
        alpha
    }

    pub(crate) fn minimize(&self, config: &TrainConfig) -> (Vec<f64>, bool, usize, f64) {
        const MEMORY: usize = 10;
        let n = self.dim + 1;
        let mut theta = vec![0.0; n];
        let (mut loss, mut grad) = self.loss_grad(&theta);
        let mut history: VecDeque<(Vec<f64>, Vec<f64>, f64)> = VecDeque::with_capacity(MEMORY);
        let grad_tol = 10.0 * config.tol;
        let inf_norm = |g: &[f64]| g.iter().fold(0.0f64, |m, x| m.max(x.abs()));

        if inf_norm(&grad) <= config.tol {
            return (theta, true, 0, loss);
        }

        for iter in 1..=config.max_iters {
            // two-loop recursion
            let mut q = grad.clone();
            let mut alphas = Vec::with_capacity(history.len());
            for (s, y, rho) in history.iter().rev() {
                let a = rho * dot(s, &q);
                axpy(-a, y, &mut q);
                alphas.push(a);
            }
            if let Some((s, y, _)) = history.back() {
                let gamma = dot(s, y) / dot(y, y);
                q.iter_mut().for_each(|v| *v *= gamma);
            }
            for ((s, y, rho), a) in history.iter().zip(alphas.into_iter().rev()) {
                let beta = rho * dot(y, &q);
                axpy(a - beta, s, &mut q);
            }
            let mut dir: Vec<f64> = q.into_iter().map(|v| -v).collect();
            let mut slope = dot(&dir, &grad);
            if slope >= 0.0 {
                history.clear();
                dir = grad.iter().map(|g| -g).collect();
                slope = dot(&dir, &grad);
            }

            let step = self.line_search(&theta, &dir, slope);
            let s: Vec<f64> = dir.iter().map(|d| step * d).collect();
            let next: Vec<f64> = theta.iter().zip(&s).map(|(t, d)| t + d).collect();
            let (next_loss, next_grad) = self.loss_grad(&next);
            let yv: Vec<f64> = next_grad.iter().zip(&grad).map(|(a, b)| a - b).collect();
            let sy = dot(&s, &yv);
            if sy > 1e-16 {
                if history.len() == MEMORY {
                    history.pop_front();
                }
                history.push_back((s, yv, 1.0 / sy));
            }

            let rel = (loss - next_loss).abs() / loss.abs().max(next_loss.abs()).max(1.0);
            theta = next;
            loss = next_loss;
            grad = next_grad;
            let gmax = inf_norm(&grad);
            if gmax <= config.tol || (rel < config.tol && gmax < grad_tol) {
                return (theta, true, iter, loss);
            }
        }
        (theta, false, config.max_iters, loss)
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn axpy(a: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += a * xi;
    }
}

pub(crate) fn fit_problem(
    problem: &Problem<'_>,
    config: &TrainConfig,
    confounder_features: usize,
) -> Fit {
    let (theta, converged, iterations, loss) = problem.minimize(config);
    if !converged {
        log::debug!("logistic regression stopped after {iterations} iterations without converging");
    }
    let dim = problem.dim;
    Fit {
        model: LogRegModel {
            weights: theta[..dim].to_vec(),
            intercept: theta[dim],
            l2_text: config.l2_text,
            l2_confounder: config.l2_confounder,
            confounder_features,
        },
        converged,
        iterations,
        loss,
    }
}

/// Fits a plain logistic regression predicting `target` from the text features.
pub fn fit(data: &Dataset, target: Target, config: &TrainConfig) -> Result<Fit> {
    config.validate()?;
    let rows = data.instances.iter().map(|i| i.features.as_slice()).collect();
    let problem = Problem::new(
        rows,
        &data.labels(target),
        data.vocab_size,
        config.l2_text,
        config.l2_confounder,
        0,
    )?;
    Ok(fit_problem(&problem, config, 0))
}

/// Regularized negative log-likelihood of `model` on `data` and its gradient.
///
/// The gradient is laid out as `[∂w_0, ..., ∂w_{d-1}, ∂b]`.
pub fn loss_and_gradient(
    model: &LogRegModel,
    data: &Dataset,
    target: Target,
) -> Result<(f64, Vec<f64>)> {
    if data.vocab_size > model.dim() {
        return Err(Error::Dimension {
            index: data.vocab_size - 1,
            dim: model.dim(),
        });
    }
    let rows: Vec<&[u32]> = data.instances.iter().map(|i| i.features.as_slice()).collect();
    let labels: Vec<f64> = data.labels(target).iter().map(|&l| l as f64).collect();
    let dim = model.dim();
    let problem = Problem {
        rows,
        labels,
        dim,
        penalties: (0..dim).map(|j| model.penalty(j)).collect(),
    };
    let mut theta = model.weights.clone();
    theta.push(model.intercept);
    Ok(problem.loss_grad(&theta))
}

/// Out-of-fold evaluation of a confounder classifier.
#[derive(Debug, Clone)]
pub struct CrossVal {
    /// `e_i = |z_i - z'_i|` from the fold where instance `i` was held out.
    pub errors: Vec<u8>,
    /// Out-of-fold argmax prediction and its posterior.
    pub predictions: Vec<ZPrediction>,
    pub report: EvalReport,
}

impl CrossVal {
    pub fn f1(&self) -> f64 {
        self.report.f1_pos
    }
}

/// Stratified fold ids: each class is shuffled and dealt round-robin.
pub fn stratified_folds(labels: &[u8], k: usize, seed: u64) -> Result<Vec<usize>> {
    if k < 2 {
        return Err(Error::config("k", "fold count must be >= 2"));
    }
    let mut folds = vec![0usize; labels.len()];
    let mut rng = rng::derived_rng(seed, &[0xF01D]);
    for class in [0u8, 1] {
        let mut idx: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == class).collect();
        if idx.len() < k {
            return Err(Error::Stratification(format!(
                "class {class} has {} instances, fewer than {k} folds",
                idx.len()
            )));
        }
        idx.shuffle(&mut rng);
        for (pos, i) in idx.into_iter().enumerate() {
            folds[i] = pos % k;
        }
    }
    Ok(folds)
}

/// K-fold stratified cross-validation of the z-classifier on `data_z`.
pub fn crossval_z_errors(data_z: &Dataset, k: usize, config: &TrainConfig) -> Result<CrossVal> {
    config.validate()?;
    let z = data_z.zs();
    let folds = stratified_folds(&z, k, config.seed)?;
    let mut predictions = vec![
        ZPrediction {
            label: 0,
            posterior: 0.5,
        };
        data_z.len()
    ];
    for fold in 0..k {
        let (train_idx, test_idx): (Vec<usize>, Vec<usize>) =
            (0..data_z.len()).partition(|&i| folds[i] != fold);
        let model = fit(&data_z.subset(&train_idx), Target::Z, config)?.model;
        for i in test_idx {
            predictions[i] =
                ZPrediction::from_positive_prob(sigmoid(model.score_unchecked(&data_z.instances[i].features)));
        }
    }
    let pred: Vec<u8> = predictions.iter().map(|p| p.label).collect();
    let errors = pred.iter().zip(&z).map(|(a, b)| a ^ b).collect();
    let report = f1_scores(&pred, &z)?;
    Ok(CrossVal {
        errors,
        predictions,
        report,
    })
}

/// Annotates every instance of `data` with the classifier's z prediction.
pub fn annotate_z(model: &LogRegModel, data: &Dataset) -> Result<Dataset> {
    let mut out = data.clone();
    for inst in &mut out.instances {
        inst.z_pred = Some(model.predict_z(&inst.features)?);
    }
    Ok(out)
}
