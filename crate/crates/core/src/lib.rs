//! Numerical toolkit for Arnold diffusion in the elliptic Hill four-body
//! problem: Lyapunov orbits, invariant manifolds, homoclinic/heteroclinic
//! connections, Melnikov-based scattering maps and diffusion mechanisms.

pub mod connections;
pub mod diffusion;
pub mod dynamics;
pub mod error;
pub mod integrator;
pub mod io;
pub mod manifolds;
pub mod numerics;
pub mod orbits;
pub mod scattering;

pub use dynamics::{ExtendedState, ModelParams, PhaseState, Symmetry, VariationalState};
pub use error::{Error, Result};
pub use integrator::{IntegratorConfig, SectionSpec, Trajectory};
pub use orbits::{EquilibriumPoint, LyapunovOrbit, OrbitFamily, PeriodicOrbit, Side};
