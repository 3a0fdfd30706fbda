//! Cloud segmentation for ground-based radiometric infrared sky images.
//!
//! The crate is `no_std` (it needs `alloc`) and holds every algorithm of the
//! pipeline; file formats, cross-validation drivers and the command line live
//! in the `irseg` crate.
//!
//! * [`features`]: height mapping, window-artifact removal, background
//!   residuals, 8-bit normalization, velocity fields and design matrices.
//! * [`generative`]: discriminant analysis, naive Bayes, Gaussian mixtures
//!   and k-means.
//! * [`mrf`]: Markov random field segmentation with supervised fitting,
//!   iterated conditional modes and simulated annealing.
//! * [`discriminative`]: ridge regression, squared-hinge SVC and Laplace
//!   logistic regression solved in the primal.
//! * [`eval`]: confusion matrices, the j-statistic and virtual-prior tuning.
//! * [`ensemble`]: soft voting across model posteriors.
//! * [`model`]: one fit/predict interface over all eleven models.
//! * [`synth`]: deterministic synthetic sky scenes with ground truth.
#![no_std]
extern crate alloc;

pub mod dataset;
pub mod discriminative;
pub mod ensemble;
pub mod error;
pub mod eval;
pub mod features;
pub mod generative;
pub mod grid;
pub mod linalg;
pub mod model;
pub mod mrf;
pub mod site;
pub mod synth;

pub use error::{Error, Result};
pub use grid::{Grid, HeightImage, IntensityImage, LabelMask, TemperatureImage};
pub use site::SiteParams;
