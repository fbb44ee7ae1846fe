//! Riemann zeta strip analysis.
//!
//! The upper half plane is cut into horizontal strips by the contour lines
//! `Im zeta(s) = 0` that run out to `sigma = +inf` near `t = 2 m pi / ln 2`.
//! This crate evaluates zeta, finds the critical zeros, traces those
//! contours, assembles the strips and computes the statistics of strip
//! heights, widths, zero counts and primary-zero positions.

// `!(x < y)` guards are deliberate: they also reject NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod artifacts;
pub mod contour;
pub mod pipeline;
pub mod special;
pub mod stats;
pub mod strips;
pub mod zeros;
pub mod zeta;

pub use zeta::{ComplexPoint, EvalResult, PhaseValue, Zeta, ZetaConfig, ZetaError};
