//! Tamed Euler and tamed Milstein time stepping for interacting particle
//! approximations of scalar McKean–Vlasov SDEs, with Lévy-area sampling for
//! the cross-particle Lions-derivative terms and the convergence, particle
//! decay and propagation-of-chaos experiments built on top.

pub mod cli;
pub mod error;
pub mod exec;
pub mod experiments;
pub mod measure;
pub mod model;
pub mod noise;
pub mod schemes;

pub use error::{Error, Result};
pub use exec::Execution;
pub use measure::EmpiricalMeasureView;
pub use model::{make_builtin, BuiltinModel, BuiltinModelParams, Example, LinearMeanField, McKeanVlasovModel, TamingVariant};
pub use noise::{LevyAreaConfig, NoiseBlock, NoiseSource};
pub use schemes::{EnsembleState, SchemeKind, SchemeSpec, SimOptions, TimeGrid};
