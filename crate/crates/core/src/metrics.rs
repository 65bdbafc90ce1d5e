//! Binary classification scores, phi correlation and robustness summaries.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Phi coefficient of two binary vectors.
///
/// `degenerate` is set when either vector is constant; `value` is then 0.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Correlation {
    pub value: f64,
    pub degenerate: bool,
}

/// Phi from sufficient statistics: `n`, `Σa`, `Σb`, `Σab`.
pub fn phi_from_counts(n: usize, sum_a: usize, sum_b: usize, sum_ab: usize) -> Correlation {
    let n = n as f64;
    let (sa, sb, sab) = (sum_a as f64, sum_b as f64, sum_ab as f64);
    let denom = sa * (n - sa) * sb * (n - sb);
    if denom <= 0.0 {
        return Correlation {
            value: 0.0,
            degenerate: true,
        };
    }
    let value = ((n * sab - sa * sb) / denom.sqrt()).clamp(-1.0, 1.0);
    Correlation {
        value,
        degenerate: false,
    }
}

pub fn phi_correlation(a: &[u8], b: &[u8]) -> Result<Correlation> {
    if a.len() != b.len() {
        return Err(Error::LengthMismatch {
            left: a.len(),
            right: b.len(),
        });
    }
    let (mut sa, mut sb, mut sab) = (0usize, 0usize, 0usize);
    for (&x, &y) in a.iter().zip(b) {
        let (x, y) = ((x != 0) as usize, (y != 0) as usize);
        sa += x;
        sb += y;
        sab += x & y;
    }
    Ok(phi_from_counts(a.len(), sa, sb, sab))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub f1_pos: f64,
    pub f1_macro: f64,
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    /// Counts indexed `[truth][pred]`.
    pub confusion: [[usize; 2]; 2],
}

fn f1(tp: usize, fp: usize, fn_: usize) -> (f64, f64, f64) {
    let precision = if tp + fp == 0 {
        0.0
    } else {
        tp as f64 / (tp + fp) as f64
    };
    let recall = if tp + fn_ == 0 {
        0.0
    } else {
        tp as f64 / (tp + fn_) as f64
    };
    let f = if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    };
    (precision, recall, f)
}

pub fn f1_scores(pred: &[u8], truth: &[u8]) -> Result<EvalReport> {
    if pred.len() != truth.len() {
        return Err(Error::LengthMismatch {
            left: pred.len(),
            right: truth.len(),
        });
    }
    let mut c = [[0usize; 2]; 2];
    for (&p, &t) in pred.iter().zip(truth) {
        c[(t != 0) as usize][(p != 0) as usize] += 1;
    }
    let (tn, fp, fn_, tp) = (c[0][0], c[0][1], c[1][0], c[1][1]);
    let (precision, recall, f1_pos) = f1(tp, fp, fn_);
    let (_, _, f1_neg) = f1(tn, fn_, fp);
    let n = pred.len();
    let accuracy = if n == 0 {
        0.0
    } else {
        (tp + tn) as f64 / n as f64
    };
    Ok(EvalReport {
        f1_pos,
        f1_macro: 0.5 * (f1_pos + f1_neg),
        accuracy,
        precision,
        recall,
        confusion: c,
    })
}

pub fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Population (1/n) variance. Computed about the first element, so a
/// constant input gives exactly 0.
pub fn population_variance(xs: &[f64]) -> f64 {
    let Some(&origin) = xs.first() else {
        return f64::NAN;
    };
    let shifted: Vec<f64> = xs.iter().map(|x| x - origin).collect();
    let m = mean(&shifted);
    shifted.iter().map(|x| (x - m).powi(2)).sum::<f64>() / xs.len() as f64
}

/// Population standard deviation of F1 values across a shift grid.
/// Smaller is more robust.
pub fn robustness_stddev(f1_values: &[f64]) -> Result<f64> {
    if f1_values.len() < 2 {
        return Err(Error::Degenerate(format!(
            "robustness needs at least 2 values, got {}",
            f1_values.len()
        )));
    }
    Ok(population_variance(f1_values).sqrt())
}
