//! Gaussian covariance-matrix simulation of pulsed optomechanical
//! entanglement between two mechanical resonators.
//!
//! ```
//! use optomech::protocol::{run_protocol, EntangleSchedule, VerifySchedule};
//! use optomech::SystemParams;
//!
//! let report = run_protocol(
//!     &SystemParams::default(),
//!     &EntangleSchedule::default(),
//!     &VerifySchedule::default(),
//! )
//! .unwrap();
//! assert!(report.e_n_ent > 2.8 && report.e_n_ver.unwrap() < report.e_n_ent);
//! ```

pub mod dynamics;
pub mod error;
pub mod export;
pub mod gaussian;
pub mod measurement;
pub mod optimize;
pub mod params;
pub mod protocol;
pub mod sweep;
pub mod wigner;

pub use error::{Error, Result};
pub use gaussian::{BasisLabel, BasisMap, GaussianState};
pub use params::SystemParams;
