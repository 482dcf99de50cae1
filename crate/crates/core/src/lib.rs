//! Constellation design for the noncoherent MIMO multiple access channel.
//!
//! K users with M antennas each send T×M space-time codewords to an
//! N-antenna receiver over Rayleigh block fading, with no channel knowledge
//! at either end. This crate designs the users' codebooks by Riemannian
//! steepest descent and measures them with a Monte Carlo simulator running
//! the optimal noncoherent joint ML detector.
//!
//! * [`manifolds`]: Grassmann, oblique and trace power constraints.
//! * [`fulldiv`]: one-error union bound of the asymptotic pairwise error
//!   probability, for coherence times `T ≥ (K+1)M`, and a min-max variant.
//! * [`proxy`]: log-sum-exp union bounds of the β and δ eigenvalue proxies,
//!   usable when full diversity is out of reach.
//! * [`optimizer`]: normalized-gradient descent with backtracking.
//! * [`sim`]: symbol error rate simulation with the ML detector.
//! * [`gradcheck`]: central finite differences for validating gradients.
//!
//! The crate is `no_std` (it needs `alloc`); the `std` feature is on by
//! default and `parallel` spreads pair sums and Monte Carlo blocks over a
//! rayon pool without changing any result bit.

#![cfg_attr(not(feature = "std"), no_std)]
// `!(x > 0.0)` is used on purpose so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

pub mod constellation;
pub mod cost;
pub mod error;
pub mod fulldiv;
pub mod gradcheck;
pub mod linalg;
pub mod manifolds;
pub mod optimizer;
mod par;
pub mod proxy;
pub mod rng;
pub mod sim;

pub use constellation::{AmbientGradientSet, BlockSet, Constellation, TangentDirection};
pub use cost::{Cost, CostFunction, CostKind};
pub use error::{Error, Result};
pub use linalg::{CMat, C64};
pub use manifolds::ManifoldKind;
