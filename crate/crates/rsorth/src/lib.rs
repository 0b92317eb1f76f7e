//! Channel orthogonalization with reconfigurable surfaces.
//!
//! An `M`-antenna base station serves `K` single-antenna users through a
//! direct channel plus a reflected path over an `N`-element reconfigurable
//! surface, `H = H0 + H1 Θ H2`. Surfaces with per-element complex gains
//! (diagonal Θ) or a full reflection matrix can shape `H` into an exactly
//! orthogonal channel `√β·Ũ`. This crate provides:
//!
//! - closed-form surface configurations for both surface types
//!   ([`orthogonalizer`]), plus a phase-only baseline that minimizes the
//!   channel condition number ([`ris_baseline`]);
//! - pilot-based protocols by which the base station estimates everything it
//!   needs and computes the configuration itself ([`estimation`]);
//! - minimization of the surface sum power over the semi-unitary manifold of
//!   target channels, via geodesic descent with Armijo step control
//!   ([`power_opt`]);
//! - seeded Rayleigh channel generation and uplink simulation ([`channel`]);
//! - the complex linear-algebra primitives the above share ([`linalg`]).
//!
//! All randomness is driven by named ChaCha streams so every experiment is
//! replayable component-wise (see [`rng`]).

pub mod channel;
pub mod error;
pub mod estimation;
pub mod io;
pub mod linalg;
pub mod orthogonalizer;
pub mod power_opt;
pub mod ris_baseline;
pub mod rng;

pub use channel::{ChannelSet, RxBlock};
pub use error::Error;
pub use linalg::{CMatrix, SemiUnitary};
pub use orthogonalizer::{RsConfig, SurfaceKind, TargetChannel};

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;
