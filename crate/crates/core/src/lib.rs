//! Dialect identification toolkit for North Sámi speech.
//!
//! The crate covers the full experimental pipeline:
//!
//! * [`corpus`] — JSON-Lines manifest schema and dataset statistics,
//! * [`dsp`] — from-scratch spectral features (40-bin log-mel filter banks,
//!   13/39-dim MFCCs),
//! * [`prosody`] — f0 / energy / spectral-tilt descriptors and utterance
//!   functionals,
//! * [`fmx`] — a bit-exact binary container for frame-level feature
//!   matrices, including externally computed self-supervised embeddings,
//! * [`pooling`] — mean/std/meanstd utterance pooling and per-speaker
//!   z-score normalization,
//! * [`splits`] — deterministic speaker-dependent and speaker-independent
//!   splits,
//! * [`classifier`] — a small feed-forward network with Adam training,
//! * [`evaluation`] — confusion matrices, unweighted accuracy, and
//!   multi-run averaging,
//! * [`lid`] — n-best language-identification aggregation for majority
//!   language influence analysis.
//!
//! The `nsdid` binary in the companion crate wires these together behind
//! subcommands.

pub mod classifier;
pub mod corpus;
pub mod dsp;
pub mod error;
pub mod evaluation;
pub mod fmx;
pub mod lid;
pub mod pooling;
pub mod prosody;
pub mod rng;
pub mod splits;
pub mod wav;

pub use error::{Error, Result};
