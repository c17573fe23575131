//! Ground states of the one-dimensional periodic Gross-Pitaevskii energy.
//!
//! The energy is discretized pseudo-spectrally on `2^n` points and minimized
//! either by a simulated variational circuit over the whole grid, by
//! alternating circuit updates on three overlapping subdomains, or by a
//! classical Newton solve used as the reference.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod circuit;
pub mod dd;
pub mod dla;
mod error;
pub mod experiment;
pub mod grid;
pub mod newton;
pub mod optimizer;
pub mod par;
pub mod trace;
pub mod vqa;

pub use error::{Error, Result};
