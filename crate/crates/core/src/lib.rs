//! Simulator for a parametrically controlled chiral coupler.
//!
//! Two λ/4-spaced resonators a1, a2 on a waveguide are converted to a third mode b
//! by pumps with phases φ1, φ2. The relative phase selects the routing direction.
//! The modules cover frequency-domain scattering, semiclassical emission and
//! absorption, Lindblad state transfer between cascaded couplers, the SNAIL
//! element, calibration fits and parameter sweeps.

pub mod calibration;
pub mod cli;
pub mod config;
pub mod error;
pub mod freqdomain;
pub mod lindblad;
pub mod linear;
pub mod model;
pub mod snail;
pub mod sweeps;
pub mod timedomain;

pub use error::{Error, Result};
pub use model::{units, CouplerParams, ModeParams, PumpSettings};
