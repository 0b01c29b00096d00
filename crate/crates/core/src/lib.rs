//! Analytic key rates, linear-optics channel verification, and seeded Monte
//! Carlo simulation for a heralded single-photon-source device-independent
//! quantum secret sharing protocol.
//!
//! Modules map onto the protocol stack:
//! - [`polarization`]: exact state algebra on 1–6 photon polarization spaces.
//! - [`heralded`]: VBS branching, the GHZ analyzer, and the storage loop.
//! - [`noise`]: the white-noise/local-loss outcome model, QBERs, and the
//!   CHSH/Svetlichny polynomials.
//! - [`keyrate`]: entropies, secrecy-bound providers, Devetak–Winter rates,
//!   sweeps, and threshold root-finding.
//! - [`montecarlo`]: round-level seeded simulation of the full protocol.
//!
//! The `parallel` feature (on by default) runs Monte Carlo rounds and sweep
//! rows on a rayon pool; results are bit-identical to the sequential path.

pub mod error;
pub mod heralded;
pub mod keyrate;
pub mod montecarlo;
pub mod noise;
pub mod polarization;

mod exec;

pub use error::{Error, Result};
