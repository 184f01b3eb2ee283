//! Resonances of a Neumann trap coupled to a half-plane through a narrow
//! channel whose length is tuned to a trap eigenfrequency.
//!
//! The crate has two independent halves. [`asymptotics`] evaluates the
//! closed-form pole expansions and regional field formulas from a handful of
//! spectral scalars ([`interior`], [`exterior`], [`junction`]). [`oracle`]
//! solves the full scattering problem by mode matching across the two
//! apertures and locates the poles directly. [`verify`] compares the two.

pub mod asymptotics;
pub mod exterior;
pub mod geometry;
pub mod interior;
pub mod junction;
pub mod oracle;
pub mod special;
pub mod verify;

pub use num_complex::Complex64 as C64;
