//! Corrections for a confounder that is only available through a noisy
//! preliminary classifier: confidence thresholding and correlation matching.
//!
//! Correlation matching first undoes the attenuation of the observed
//! correlation `r' = r(y, z')` caused by errors in `z'`:
//!
//! ```text
//! r̂ = r' · sqrt(1 + V̂_ez / V̂_z),   V̂_ez = Var(e),   V̂_z = Var(z') - V̂_ez
//! ```
//!
//! where `e` is the out-of-fold error indicator of the preliminary classifier
//! on its own training data. It then flips predicted labels, least confident
//! first, while each flip brings `r(y, z*)` strictly closer to `r̂`.

use std::io::Write;
use std::path::Path;

use crate::data::{Dataset, ZPrediction};
use crate::error::{Error, Result};
use crate::metrics::{mean, phi_correlation, phi_from_counts, population_variance};

/// Instances whose prediction confidence is at least `epsilon`.
#[derive(Debug, Clone)]
pub struct Filtered {
    pub data: Dataset,
    /// Indices into the input dataset, in input order.
    pub retained: Vec<usize>,
    pub retained_fraction: f64,
}

pub fn threshold_filter(data: &Dataset, epsilon: f64) -> Result<Filtered> {
    if !(0.5..=1.0).contains(&epsilon) {
        return Err(Error::Range {
            name: "epsilon",
            value: epsilon,
            lo: 0.5,
            hi: 1.0,
        });
    }
    let preds = data.predictions()?;
    let retained: Vec<usize> = (0..data.len())
        .filter(|&i| preds[i].posterior >= epsilon)
        .collect();
    if retained.is_empty() {
        return Err(Error::EmptyFilter { epsilon });
    }
    Ok(Filtered {
        retained_fraction: retained.len() as f64 / data.len() as f64,
        data: data.subset(&retained),
        retained,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CorrelationEstimate {
    pub r_observed: f64,
    pub v_ez_hat: f64,
    pub v_z_hat: f64,
    pub mu_ez: f64,
    /// Attenuation-corrected correlation, clamped to `[-1, 1]`.
    pub r_hat: f64,
    /// `V̂_z <= 0`: no correction was applied.
    pub degenerate: bool,
}

/// Mean and population variance of the error indicator vector.
pub fn estimate_error_variance(errors: &[u8]) -> Result<(f64, f64)> {
    if errors.is_empty() {
        return Err(Error::Degenerate("empty error vector".into()));
    }
    let e: Vec<f64> = errors.iter().map(|&x| x as f64).collect();
    Ok((mean(&e), population_variance(&e)))
}

/// `V̂_z = Var(z') - V̂_ez`. May be non-positive.
pub fn estimate_z_variance(z_pred_on_target: &[u8], v_ez_hat: f64) -> Result<f64> {
    if z_pred_on_target.is_empty() {
        return Err(Error::Degenerate("empty prediction vector".into()));
    }
    let z: Vec<f64> = z_pred_on_target.iter().map(|&x| x as f64).collect();
    Ok(population_variance(&z) - v_ez_hat)
}

/// Inverts the attenuation relation with no error in `y`.
///
/// `mu_ez` is filled with the root `<= 0.5` of `μ(1 - μ) = V̂_ez`, which is
/// the mean error whenever the errors are 0/1.
pub fn estimate_true_correlation(r_observed: f64, v_ez_hat: f64, v_z_hat: f64) -> CorrelationEstimate {
    let mu_ez = 0.5 * (1.0 - (1.0 - 4.0 * v_ez_hat).max(0.0).sqrt());
    let degenerate = !(v_z_hat > 0.0);
    let r_hat = if degenerate {
        r_observed
    } else {
        (r_observed * correction_factor(v_ez_hat, v_z_hat)).clamp(-1.0, 1.0)
    };
    CorrelationEstimate {
        r_observed,
        v_ez_hat,
        v_z_hat,
        mu_ez,
        r_hat,
        degenerate,
    }
}

/// `sqrt(1 + V_ez / V_z)`.
pub fn correction_factor(v_ez: f64, v_z: f64) -> f64 {
    (1.0 + v_ez / v_z).sqrt()
}

/// Full estimate from the preliminary study's out-of-fold errors and the
/// target data's predicted confounder.
pub fn estimate_correlation(errors: &[u8], target: &Dataset) -> Result<CorrelationEstimate> {
    let (mu_ez, v_ez) = estimate_error_variance(errors)?;
    let z_pred = target.z_preds()?;
    let v_z = estimate_z_variance(&z_pred, v_ez)?;
    let r_obs = phi_correlation(&target.ys(), &z_pred)?;
    if r_obs.degenerate {
        log::warn!("observed correlation undefined (constant column); using 0");
    }
    Ok(CorrelationEstimate {
        mu_ez,
        ..estimate_true_correlation(r_obs.value, v_ez, v_z)
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Objective {
    pub value: f64,
    pub mean_posterior: f64,
    pub gap: f64,
    /// `r'(z^j)` was undefined and taken as 0.
    pub degenerate: bool,
}

/// `(1/n) Σ p(z_i = z_i^j | x_i) - |r̂ - r'(z^j)|`.
pub fn correlation_objective(
    assignments: &[u8],
    predictions: &[ZPrediction],
    y: &[u8],
    r_hat: f64,
) -> Result<Objective> {
    if assignments.len() != predictions.len() {
        return Err(Error::LengthMismatch {
            left: assignments.len(),
            right: predictions.len(),
        });
    }
    let r = phi_correlation(assignments, y)?;
    let mean_posterior = assignments
        .iter()
        .zip(predictions)
        .map(|(&z, p)| p.prob_of(z))
        .sum::<f64>()
        / assignments.len() as f64;
    let gap = (r_hat - r.value).abs();
    Ok(Objective {
        value: mean_posterior - gap,
        mean_posterior,
        gap,
        degenerate: r.degenerate,
    })
}

/// Order in which the greedy pass visits instances.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MatchOrder {
    /// Least confident prediction first.
    #[default]
    AscendingConfidence,
    DescendingConfidence,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceStep {
    pub step: usize,
    pub instance_index: usize,
    pub flipped: bool,
    /// `|r̂ - r'|` after this step.
    pub gap: f64,
}

#[derive(Debug, Clone)]
pub struct MatchResult {
    pub assignments: Vec<u8>,
    pub flips: usize,
    /// Gap before any flip, then after each accepted flip.
    pub objective_trace: Vec<f64>,
    pub final_gap: f64,
    pub steps: Vec<TraceStep>,
    /// The starting assignment had an undefined correlation.
    pub degenerate: bool,
}

/// Gap below which matching stops.
pub const GAP_FLOOR: f64 = 1e-9;

/// Greedy passes over instances, flipping a label whenever that strictly
/// shrinks `|r̂ - r(y, z)|`. Passes repeat until one makes no flip.
pub fn match_assignments(
    predictions: &[ZPrediction],
    y: &[u8],
    r_hat: f64,
    order: MatchOrder,
) -> Result<MatchResult> {
    let n = predictions.len();
    if y.len() != n {
        return Err(Error::LengthMismatch {
            left: y.len(),
            right: n,
        });
    }
    if n < 2 {
        return Err(Error::Degenerate(format!(
            "correlation matching needs at least 2 instances, got {n}"
        )));
    }
    let mut z: Vec<u8> = predictions.iter().map(|p| p.label).collect();
    let sum_y = y.iter().filter(|&&v| v == 1).count();
    let mut sum_z = z.iter().filter(|&&v| v == 1).count();
    let mut sum_yz = z.iter().zip(y).filter(|(&a, &b)| a == 1 && b == 1).count();

    let start = phi_from_counts(n, sum_y, sum_z, sum_yz);
    if start.degenerate {
        log::warn!("initial assignment has undefined correlation; treating it as 0");
    }
    let mut gap = (r_hat - start.value).abs();
    let mut trace = vec![gap];
    let mut steps = Vec::new();

    let mut visit: Vec<usize> = (0..n).collect();
    match order {
        MatchOrder::AscendingConfidence => visit.sort_by(|&a, &b| {
            predictions[a]
                .posterior
                .total_cmp(&predictions[b].posterior)
        }),
        MatchOrder::DescendingConfidence => visit.sort_by(|&a, &b| {
            predictions[b]
                .posterior
                .total_cmp(&predictions[a].posterior)
        }),
    }

    let mut step = 0;
    'passes: loop {
        let flips_before = trace.len();
        for &i in &visit {
            if gap <= GAP_FLOOR {
                break 'passes;
            }
            let (nz, nyz) = if z[i] == 1 {
                (sum_z - 1, sum_yz - y[i] as usize)
            } else {
                (sum_z + 1, sum_yz + y[i] as usize)
            };
            let candidate = (r_hat - phi_from_counts(n, sum_y, nz, nyz).value).abs();
            let flipped = candidate < gap;
            if flipped {
                z[i] = 1 - z[i];
                sum_z = nz;
                sum_yz = nyz;
                gap = candidate;
                trace.push(gap);
            }
            steps.push(TraceStep {
                step,
                instance_index: i,
                flipped,
                gap,
            });
            step += 1;
        }
        if trace.len() == flips_before {
            break;
        }
    }

    Ok(MatchResult {
        flips: trace.len() - 1,
        assignments: z,
        objective_trace: trace,
        final_gap: gap,
        steps,
        degenerate: start.degenerate,
    })
}

/// Correlation matching over a dataset annotated with predictions.
pub fn correlation_match(data: &Dataset, r_hat: f64, order: MatchOrder) -> Result<MatchResult> {
    match_assignments(&data.predictions()?, &data.ys(), r_hat, order)
}

impl MatchResult {
    /// CSV trace with columns `step,instance_index,flipped,gap`.
    pub fn write_trace<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "step,instance_index,flipped,gap")?;
        for s in &self.steps {
            writeln!(
                w,
                "{},{},{},{}",
                s.step, s.instance_index, s.flipped as u8, s.gap
            )?;
        }
        Ok(())
    }

    pub fn save_trace(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = std::io::BufWriter::new(f);
        self.write_trace(&mut w)
            .and_then(|_| w.flush())
            .map_err(|e| Error::io(path, e))
    }
}
