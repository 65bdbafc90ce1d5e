//! Back-door adjusted classification that stays robust when the relationship
//! between the label and a confounder shifts between training and testing,
//! including the case where the confounder is only observed through a noisy
//! preliminary classifier.
//!
//! The modules follow the pipeline:
//!
//! - [`corpus`]: synthetic confounded corpora and bias-constrained sampling
//! - [`learner`]: L2-regularized logistic regression and cross-validation
//! - [`backdoor`]: the back-door adjusted classifier
//! - [`adjust`]: confidence thresholding and correlation matching
//! - [`metrics`]: F1, phi correlation, robustness summaries
//! - [`harness`]: experiment sweeps and their CSV outputs

pub mod adjust;
pub mod backdoor;
pub mod corpus;
pub mod data;
pub mod error;
pub mod harness;
pub mod learner;
pub mod metrics;
pub mod rng;

pub use data::{Dataset, Instance, Target, ZPrediction};
pub use error::{Error, Result};
