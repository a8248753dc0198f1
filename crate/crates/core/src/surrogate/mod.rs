//! Regression and density machinery used by the model-based strategies:
//! bagged CART regression forests, Gaussian-process regression with the
//! Expected Improvement acquisition, and Parzen good/bad density estimators.

pub mod forest;
pub mod gp;
pub mod parzen;

pub use forest::{ForestModel, ForestOptions};
pub use gp::{expected_improvement, GpModel};
pub use parzen::ParzenPair;
