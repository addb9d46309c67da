//! Numerical obstruction-to-integrability toolkit for nearly integrable systems.
//!
//! The crate evaluates subharmonic and homoclinic Melnikov functions for
//! periodically forced planar Hamiltonian systems, the resonant-torus
//! integrals of action-angle systems (by a Fourier-lattice formula and by
//! direct quadrature), and turns the results into theorem-level verdicts
//! that carry their numeric evidence.
//!
//! Module map:
//!
//! * [`specfun`]: complete elliptic integrals and Jacobi elliptic functions.
//! * [`odecore`]: adaptive Dormand–Prince integration, stroboscopic maps,
//!   Newton shooting for periodic points.
//! * [`systems`]: the example catalog (pendulum with torque, coupled
//!   oscillators, forced Duffing) and the exact Duffing orbit families.
//! * [`melnikov`]: Melnikov curves by quadrature and closed form, resonance
//!   solving, simple zeros, the chaos threshold.
//! * [`actionangle`]: Fourier spectra, resonance lattices, resonant integrals.
//! * [`criteria`]: hypothesis tests and verdict assembly.

// `!(x > 0.0)` style guards are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod actionangle;
pub mod criteria;
pub mod error;
pub mod exec;
pub mod melnikov;
pub mod odecore;
pub mod quad;
pub mod specfun;
pub mod systems;

pub use error::{Error, Result};
