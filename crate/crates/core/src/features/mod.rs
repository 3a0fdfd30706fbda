//! Feature extraction from radiometric frames.

pub mod assemble;
pub mod background;
pub mod flow;
pub mod height;
pub mod pipeline;
pub mod poly;
pub mod window;

pub use assemble::{assemble, FeatureBundle, FeatureMatrix, FeatureSpec, FeatureVariant, Neighborhood};
pub use background::{background_residual, normalize_8bit, BackgroundModel, ColdQuantile, Residual};
pub use flow::{optical_flow, FlowParams, VelocityField};
pub use height::{malr_height, HeightModel, LinearLapse};
pub use pipeline::FramePipeline;
pub use poly::{poly_expand, PolyExpansion};
pub use window::{remove_window, window_artifact, ClearSkyBuffer};
