//! Instances, datasets and the tab-separated dataset file format.
//!
//! ```text
//! #vocab=<N>
//! y<TAB>z_true<TAB>[z_pred<TAB>z_posterior<TAB>]i1,i2,...
//! ```
//!
//! Feature indices are written in increasing order. An instance with no
//! active terms ends with an empty field.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use crate::error::{Error, Result};

/// Prediction of the confounder by a preliminary classifier.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ZPrediction {
    pub label: u8,
    /// Posterior of `label`, in `[0.5, 1]`.
    pub posterior: f64,
}

impl ZPrediction {
    /// Builds the argmax prediction from `p(z=1|x)`. Ties go to class 1.
    pub fn from_positive_prob(p1: f64) -> Self {
        if p1 >= 0.5 {
            ZPrediction {
                label: 1,
                posterior: p1,
            }
        } else {
            ZPrediction {
                label: 0,
                posterior: 1.0 - p1,
            }
        }
    }

    /// Posterior the preliminary classifier gives to `value`.
    pub fn prob_of(&self, value: u8) -> f64 {
        if value == self.label {
            self.posterior
        } else {
            1.0 - self.posterior
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Instance {
    /// Active term indices, strictly increasing.
    pub features: Vec<u32>,
    pub y: u8,
    pub z_true: u8,
    pub z_pred: Option<ZPrediction>,
}

impl Instance {
    pub fn new(features: Vec<u32>, y: u8, z_true: u8) -> Self {
        Instance {
            features,
            y,
            z_true,
            z_pred: None,
        }
    }
}

/// Which binary column a learner is trained to predict.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Target {
    Y,
    Z,
}

impl Target {
    pub fn label(self, inst: &Instance) -> u8 {
        match self {
            Target::Y => inst.y,
            Target::Z => inst.z_true,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub vocab_size: usize,
    pub instances: Vec<Instance>,
}

impl Dataset {
    pub fn new(vocab_size: usize, instances: Vec<Instance>) -> Result<Self> {
        let ds = Dataset {
            vocab_size,
            instances,
        };
        ds.validate()?;
        Ok(ds)
    }

    pub fn validate(&self) -> Result<()> {
        for inst in &self.instances {
            if inst.y > 1 || inst.z_true > 1 {
                return Err(Error::Degenerate("labels must be 0 or 1".into()));
            }
            let mut prev: Option<u32> = None;
            for &f in &inst.features {
                if f as usize >= self.vocab_size {
                    return Err(Error::Dimension {
                        index: f as usize,
                        dim: self.vocab_size,
                    });
                }
                if prev.is_some_and(|p| p >= f) {
                    return Err(Error::Degenerate(
                        "feature indices must be strictly increasing".into(),
                    ));
                }
                prev = Some(f);
            }
            if let Some(p) = inst.z_pred {
                if p.label > 1 || !(0.5..=1.0).contains(&p.posterior) {
                    return Err(Error::Range {
                        name: "z_posterior",
                        value: p.posterior,
                        lo: 0.5,
                        hi: 1.0,
                    });
                }
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.instances.len()
    }

    pub fn is_empty(&self) -> bool {
        self.instances.is_empty()
    }

    pub fn labels(&self, target: Target) -> Vec<u8> {
        self.instances.iter().map(|i| target.label(i)).collect()
    }

    pub fn ys(&self) -> Vec<u8> {
        self.labels(Target::Y)
    }

    pub fn zs(&self) -> Vec<u8> {
        self.labels(Target::Z)
    }

    /// Predicted confounder labels; fails on the first unannotated instance.
    pub fn z_preds(&self) -> Result<Vec<u8>> {
        self.predictions().map(|p| p.iter().map(|p| p.label).collect())
    }

    pub fn predictions(&self) -> Result<Vec<ZPrediction>> {
        self.instances
            .iter()
            .enumerate()
            .map(|(index, i)| i.z_pred.ok_or(Error::MissingPrediction { index }))
            .collect()
    }

    /// Counts indexed `[y][z]` over the true confounder.
    pub fn cell_counts(&self) -> [[usize; 2]; 2] {
        let mut c = [[0usize; 2]; 2];
        for i in &self.instances {
            c[i.y as usize][i.z_true as usize] += 1;
        }
        c
    }

    /// Copy with `z_true` replaced by `labels`.
    pub fn with_z_true(&self, labels: &[u8]) -> Result<Dataset> {
        if labels.len() != self.len() {
            return Err(Error::LengthMismatch {
                left: labels.len(),
                right: self.len(),
            });
        }
        let mut out = self.clone();
        for (inst, &z) in out.instances.iter_mut().zip(labels) {
            inst.z_true = z;
        }
        Ok(out)
    }

    pub fn subset(&self, indices: &[usize]) -> Dataset {
        Dataset {
            vocab_size: self.vocab_size,
            instances: indices.iter().map(|&i| self.instances[i].clone()).collect(),
        }
    }

    pub fn write_to<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "#vocab={}", self.vocab_size)?;
        for inst in &self.instances {
            write!(w, "{}\t{}\t", inst.y, inst.z_true)?;
            if let Some(p) = inst.z_pred {
                write!(w, "{}\t{}\t", p.label, p.posterior)?;
            }
            let mut first = true;
            for f in &inst.features {
                if !first {
                    w.write_all(b",")?;
                }
                write!(w, "{f}")?;
                first = false;
            }
            w.write_all(b"\n")?;
        }
        Ok(())
    }

    pub fn read_from<R: BufRead>(r: R) -> Result<Dataset> {
        let mut lines = r.lines().enumerate();
        let header = match lines.next() {
            Some((_, l)) => l.map_err(|e| Error::Parse {
                line: 1,
                reason: e.to_string(),
            })?,
            None => {
                return Err(Error::Parse {
                    line: 1,
                    reason: "missing #vocab header".into(),
                })
            }
        };
        let vocab_size = header
            .strip_prefix("#vocab=")
            .and_then(|v| v.trim().parse::<usize>().ok())
            .ok_or_else(|| Error::Parse {
                line: 1,
                reason: format!("expected `#vocab=<N>`, got `{header}`"),
            })?;

        let mut instances = Vec::new();
        for (n, line) in lines {
            let line_no = n + 1;
            let perr = |reason: String| Error::Parse {
                line: line_no,
                reason,
            };
            let line = line.map_err(|e| perr(e.to_string()))?;
            if line.is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split('\t').collect();
            let bit = |s: &str| -> Result<u8> {
                match s {
                    "0" => Ok(0),
                    "1" => Ok(1),
                    other => Err(perr(format!("expected 0 or 1, got `{other}`"))),
                }
            };
            let (y, z, pred, feats) = match fields.as_slice() {
                [y, z, feats] => (bit(y)?, bit(z)?, None, *feats),
                [y, z, zp, post, feats] => {
                    let posterior: f64 = post
                        .parse()
                        .map_err(|_| perr(format!("bad posterior `{post}`")))?;
                    let p = ZPrediction {
                        label: bit(zp)?,
                        posterior,
                    };
                    (bit(y)?, bit(z)?, Some(p), *feats)
                }
                _ => return Err(perr(format!("expected 3 or 5 fields, got {}", fields.len()))),
            };
            let features = if feats.is_empty() {
                Vec::new()
            } else {
                feats
                    .split(',')
                    .map(|t| {
                        t.parse::<u32>()
                            .map_err(|_| perr(format!("bad feature index `{t}`")))
                    })
                    .collect::<Result<Vec<_>>>()?
            };
            instances.push(Instance {
                features,
                y,
                z_true: z,
                z_pred: pred,
            });
        }
        Dataset::new(vocab_size, instances)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let f = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = BufWriter::new(f);
        self.write_to(&mut w)
            .and_then(|_| w.flush())
            .map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Dataset> {
        let path = path.as_ref();
        let f = File::open(path).map_err(|e| Error::io(path, e))?;
        Dataset::read_from(BufReader::new(f))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> Dataset {
        let mut a = Instance::new(vec![0, 3, 9], 1, 0);
        a.z_pred = Some(ZPrediction {
            label: 1,
            posterior: 0.8125,
        });
        let b = Instance::new(vec![], 0, 1);
        Dataset::new(10, vec![a, b]).unwrap()
    }

    #[test]
    fn text_format_layout() {
        let mut buf = Vec::new();
        sample().write_to(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text, "#vocab=10\n1\t0\t1\t0.8125\t0,3,9\n0\t1\t\n");
    }

    #[test]
    fn text_format_round_trip() {
        let ds = sample();
        let mut buf = Vec::new();
        ds.write_to(&mut buf).unwrap();
        assert_eq!(Dataset::read_from(&buf[..]).unwrap(), ds);
    }

    #[test]
    fn rejects_unsorted_and_out_of_range() {
        assert!(Dataset::new(10, vec![Instance::new(vec![3, 2], 0, 0)]).is_err());
        assert!(matches!(
            Dataset::new(4, vec![Instance::new(vec![4], 0, 0)]),
            Err(Error::Dimension { index: 4, dim: 4 })
        ));
        assert!(Dataset::read_from("#vocab=3\n1\t0\t0,5\n".as_bytes()).is_err());
        assert!(Dataset::read_from("vocab 3\n".as_bytes()).is_err());
    }

    #[test]
    fn posterior_out_of_range_is_rejected() {
        let text = "#vocab=3\n1\t0\t1\t0.3\t0\n";
        assert!(matches!(
            Dataset::read_from(text.as_bytes()),
            Err(Error::Range { .. })
        ));
    }

    #[test]
    fn argmax_prediction_ties_to_one() {
        assert_eq!(ZPrediction::from_positive_prob(0.5).label, 1);
        let p = ZPrediction::from_positive_prob(0.2);
        assert_eq!(p.label, 0);
        assert!((p.posterior - 0.8).abs() < 1e-15);
        assert!((p.prob_of(1) - 0.2).abs() < 1e-15);
    }
}
