//! Energetics of dilute two-species Bose gases.
//!
//! Units: ℏ = 1 and particle mass ½, so the kinetic symbol is `k²`.
//! Every length is an absolute length; callers that prefer dimensionless
//! input (densities as `ρā³`) rescale before constructing parameters.
//!
//! ```
//! use bosemix::lhy::energy_breakdown;
//! use bosemix::mixture::MixtureParams;
//! use bosemix::potentials::{make_potential, PotentialDescriptor};
//! use bosemix::scattering::{solve_scattering, GridConfig};
//!
//! let well = make_potential(&PotentialDescriptor::square_well(2.0, 1.0))?;
//! let sol = solve_scattering(&well, &GridConfig::default())?;
//! // The well enters the radial equation halved, so κ = √(height / 2) = 1.
//! assert!((sol.a() - (1.0 - 1f64.tanh())).abs() < 1e-10);
//!
//! let p = MixtureParams::constant(1e-6, 5e-7, 1.0, 0.8, 0.5)?;
//! let e = energy_breakdown(&p, 0.1, 1.0)?;
//! assert!(e.e_lhy > 0.0 && e.e_lhy < e.e_main);
//! # Ok::<(), bosemix::Error>(())
//! ```

pub mod boxsum;
pub mod error;
pub mod lhy;
pub mod mixture;
pub mod numerics;
pub mod potentials;
pub mod quasifree;
pub mod scattering;
pub mod thermo;

pub use error::{Error, Result};
