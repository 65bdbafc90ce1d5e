//! Back-door adjusted classifier.
//!
//! The confounder enters the model as two one-hot indicator features at
//! indices `V` (z = 0) and `V + 1` (z = 1). Prediction marginalizes the
//! confounder out with its training prior:
//!
//! ```text
//! p(y=1 | do(x)) = (1 - p_z) σ(w·[x, z=0] + b) + p_z σ(w·[x, z=1] + b)
//! ```

use std::io::{BufRead, Write};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::learner::{fit_problem, sigmoid, LineReader, LogRegModel, Problem, TrainConfig};

#[derive(Debug, Clone, PartialEq)]
pub struct BackdoorModel {
    /// Model over `vocab_size + 2` features.
    pub base: LogRegModel,
    /// Training frequency of `z = 1`.
    pub p_z: f64,
    pub vocab_size: usize,
}

/// `features` plus the indicator for `z_value`.
pub fn augment(features: &[u32], vocab_size: usize, z_value: u8) -> Vec<u32> {
    let mut out = Vec::with_capacity(features.len() + 1);
    out.extend_from_slice(features);
    out.push((vocab_size + z_value.min(1) as usize) as u32);
    out
}

/// Fits `p(y | x, z)` on indicator-augmented features, using `z_column` as
/// the confounder value of each instance.
pub fn fit_backdoor(data: &Dataset, z_column: &[u8], config: &TrainConfig) -> Result<BackdoorModel> {
    config.validate()?;
    if z_column.len() != data.len() {
        return Err(Error::LengthMismatch {
            left: z_column.len(),
            right: data.len(),
        });
    }
    if data.is_empty() {
        return Err(Error::Degenerate("cannot fit on an empty dataset".into()));
    }
    let v = data.vocab_size;
    let augmented: Vec<Vec<u32>> = data
        .instances
        .iter()
        .zip(z_column)
        .map(|(inst, &z)| augment(&inst.features, v, z))
        .collect();
    let rows = augmented.iter().map(Vec::as_slice).collect();
    let problem = Problem::new(
        rows,
        &data.ys(),
        v + 2,
        config.l2_text,
        config.l2_confounder,
        2,
    )?;
    let fit = fit_problem(&problem, config, 2);
    let ones = z_column.iter().filter(|&&z| z == 1).count();
    Ok(BackdoorModel {
        base: fit.model,
        p_z: ones as f64 / z_column.len() as f64,
        vocab_size: v,
    })
}

impl BackdoorModel {
    fn check(&self, features: &[u32]) -> Result<()> {
        match features.iter().find(|&&f| f as usize >= self.vocab_size) {
            Some(&f) => Err(Error::Dimension {
                index: f as usize,
                dim: self.vocab_size,
            }),
            None => Ok(()),
        }
    }

    /// `p(y=1 | x, z)`.
    pub fn conditional(&self, features: &[u32], z_value: u8) -> Result<f64> {
        self.check(features)?;
        let s = self.base.score_unchecked(features)
            + self.base.weights[self.vocab_size + z_value.min(1) as usize];
        Ok(sigmoid(s))
    }

    /// `p(y=1 | do(x))`, the prior-weighted mix of both conditionals.
    pub fn predict_adjusted(&self, features: &[u32]) -> Result<f64> {
        let p0 = self.conditional(features, 0)?;
        let p1 = self.conditional(features, 1)?;
        Ok((1.0 - self.p_z) * p0 + self.p_z * p1)
    }

    /// 1 iff the adjusted probability is at least `threshold`.
    pub fn predict_label(&self, features: &[u32], threshold: f64) -> Result<u8> {
        Ok((self.predict_adjusted(features)? >= threshold) as u8)
    }

    pub fn write_to<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "confound-backdoor v1")?;
        writeln!(w, "p_z {}", self.p_z)?;
        writeln!(w, "vocab_size {}", self.vocab_size)?;
        self.base.write_to(w)
    }

    pub fn read_from<R: BufRead>(r: R) -> Result<Self> {
        let mut lines = LineReader::new(r.lines());
        lines.expect_exact("confound-backdoor v1")?;
        let p_z: f64 = lines.keyed("p_z")?;
        let vocab_size: usize = lines.keyed("vocab_size")?;
        let base = LogRegModel::read_lines(&mut lines)?;
        if base.dim() != vocab_size + 2 {
            return Err(lines.err(format!(
                "model dimension {} does not match vocab_size + 2 = {}",
                base.dim(),
                vocab_size + 2
            )));
        }
        Ok(BackdoorModel {
            base,
            p_z,
            vocab_size,
        })
    }
}
