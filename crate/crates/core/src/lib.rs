//! Simulation and analysis of single-coin quantum coin tossing with weak
//! coherent states, together with the classical limits it is measured
//! against.
//!
//! * [`optics`]: coherent-state overlaps, cheating bounds, click model.
//! * [`protocol`]: the four-message protocol between pluggable strategies.
//! * [`bounds`]: merit function, optimisation over |α|², loss sweeps.
//! * [`classical`]: classical trit protocols, backward induction and the
//!   monotone used to bound them.
//! * [`montecarlo`]: seeded batch runner and estimators.

pub mod bounds;
pub mod classical;
pub mod error;
pub mod montecarlo;
pub mod optics;
pub mod protocol;

pub use bounds::{AliceBoundForm, BiasPair, MeritReport};
pub use error::{ParamError, ProtocolError, TreeError};
pub use optics::{DerivedIntensities, ExperimentParams};
pub use protocol::{Bit, Outcome, Transcript};
