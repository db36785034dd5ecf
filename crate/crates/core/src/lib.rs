//! Boundary-vanishing weights for integrals of holomorphic L¹ functions.
//!
//! Given a smoothly bounded model domain Ω with boundary distance δ, an order
//! `k ≥ 1` and a smooth multiplier `g`, this crate builds an explicit smooth
//! weight `ω_{k,g}` such that
//!
//! ```text
//! ∫_Ω η·g dV = ∫_Ω δ^k · ω_{k,g} · η dV
//! ```
//!
//! for every holomorphic `η` in `L¹(Ω)`, and checks the identity numerically.
//!
//! * [`field`]: expression IR with structural derivatives and the fields N, T, Δ.
//! * [`geometry`]: disc and ball models with a smooth δ and cutoff ζ.
//! * [`weights`]: the base case and the induction on `k`.
//! * [`quadrature`]: adaptive polar cubature with boundary-singularity hints.
//! * [`catalog`]: holomorphic test functions and multipliers.
//! * [`verify`]: identity checks, boundary-term decay, suites.
//! * [`bergman`]: the Bergman projection of the disc and a smoothing check.
//! * [`config`], [`report`], [`selftest`]: reproducible runs.

pub mod bergman;
pub mod catalog;
pub mod config;
pub mod field;
pub mod geometry;
pub mod quadrature;
pub mod report;
pub mod selftest;
pub mod verify;
pub mod weights;

pub use num_complex::Complex64;
