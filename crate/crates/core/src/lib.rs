//! Classical shadows with orthogonal and unitary randomized measurements.
//!
//! A shot applies a random transform `U` from an [`EnsembleSpec`], measures in
//! a [`MeasurementBasis`] and records the outcome. The inverse of the
//! measurement channel turns each record into a classical shadow whose
//! expectation, restricted to the channel's visible space, is the state.
//!
//! - [`channels`]: the channel, its spectrum, pseudo-inverse and visible space.
//! - [`commutant`]: Brauer-pairing bases, twirls and closed-form moments.
//! - [`bases`]: measurement bases and their reality.
//! - [`shadow`]: sampling, shadows, estimators and median of means.
//! - [`variance`]: exact variance predictors and local bounds.
//! - [`experiment`] and [`validation`]: config-driven runs and self-checks.
//!
//! ```
//! use orthoshadow::{EnsembleSpec, Group, MeasurementBasis, Observable, ShadowSimulator};
//! use orthoshadow::linalg::DenseOperator;
//! use orthoshadow::pauli::Pauli;
//!
//! let spec = EnsembleSpec::global(Group::Orthogonal, MeasurementBasis::computational(1)?);
//! let rho = DenseOperator::identity(2).scale_re(0.5);
//! let sim = ShadowSimulator::new(&spec, rho, 1)?;
//! let reports = sim.estimate_all(&[("z".into(), Observable::Dense(Pauli::Z.matrix()))], 10_000, 1, true)?;
//! assert_eq!(reports[0].predicted_variance.as_ref().unwrap().value, 2.0);
//! # Ok::<(), orthoshadow::Error>(())
//! ```

pub mod bases;
pub mod channels;
pub mod commutant;
pub mod ensemble;
pub mod error;
pub mod experiment;
pub mod linalg;
pub mod pauli;
pub mod sampling;
pub mod shadow;
pub mod validation;
pub mod variance;

pub use bases::{BasisTag, MeasurementBasis};
pub use channels::{ChannelDescriptor, ChannelSpectrum};
pub use ensemble::{EnsembleSpec, Group, Scope};
pub use error::{Error, Result};
pub use linalg::{DenseOperator, StateVector, C64};
pub use pauli::{Pauli, PauliString};
pub use sampling::RngStream;
pub use shadow::{EstimateReport, Estimator, Observable, ShadowRecord, ShadowSimulator};
pub use variance::{PredictionKind, VariancePrediction};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/channels.md")]
    mod channels {}
    #[doc = include_str!("../../../book/src/commutants.md")]
    mod commutants {}
    #[doc = include_str!("../../../book/src/reality.md")]
    mod reality {}
    #[doc = include_str!("../../../book/src/variance.md")]
    mod variance {}
    #[doc = include_str!("../../../book/src/local.md")]
    mod local {}
    #[doc = include_str!("../../../book/src/workbench.md")]
    mod workbench {}
}
