//! Arc-stability monitoring for electric arc welding current signals.
//!
//! The crate implements an end-to-end pipeline: regime-faithful synthesis
//! of welding-current traces, windowed spectral analysis (Hann window,
//! zero-padded FFT, one-sided Welch PSD), a ten-dimensional
//! spectral/time-domain feature vector, a suite of classifiers behind a
//! common strategy trait (SVM-RBF via SMO, KNN, decision tree, bagged
//! trees), statistical evaluation (hold-out, k-fold, LOOCV, ROC/PR/AUC,
//! binomial CI, Fisher criterion, permutation importance), and a streaming
//! early-warning monitor.
//!
//! Everything is deterministic given explicit seeds: the only randomness
//! source is a seeded ChaCha8 stream, never OS entropy.

pub mod classify;
pub mod config;
pub mod error;
pub mod eval;
pub mod features;
pub mod monitor;
pub mod seed;
pub mod signal;
pub mod tfr;

pub use error::ArcError;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, ArcError>;
