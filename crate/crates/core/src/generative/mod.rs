//! Generative per-pixel classifiers: discriminant analysis, naive Bayes,
//! Gaussian mixtures and k-means.

pub mod gaussian;
pub mod gmm;
pub mod kmeans;

pub use gaussian::{
    class1_posterior, fit_gda, fit_nbc, posterior, ClassGaussian, CovarianceMode, GaussianClassModel, GaussianScorer,
};
pub use gmm::{em_step, fit_gmm, GmmFit, GmmParams};
pub use kmeans::{fit_kmeans, KMeansFit, KMeansModel};
