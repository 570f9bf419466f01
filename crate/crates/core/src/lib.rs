//! Spectral approximation laboratory for multivariate periodic functions
//! of small mixed smoothness: hyperbolic-cross frequency sets, classical
//! trigonometric kernels, block projection operators, best m-term
//! approximation schemes and sparse-grid sampling recovery.

pub mod error;
pub mod freq;
pub mod grid;
pub mod kernels;
pub mod lab;
pub mod mterm;
pub mod poly;
pub mod smolyak;
pub mod spectral;

pub use error::{Error, Result};
pub use freq::{BlockIndex, FreqIndex, FreqSet};
pub use grid::GridFunction;
pub use kernels::{BernoulliSpec, MultiplierTable};
pub use lab::{ExperimentConfig, RateFit, ReportRow};
pub use mterm::{BudgetPlan, MTermResult};
pub use poly::TrigPolynomial;
pub use smolyak::Sampler;
pub use spectral::{Family, LayerKind, SmoothnessSpec};
