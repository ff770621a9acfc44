//! Windowed Fisher-Shannon analysis of gridded space-time fields.
//!
//! The crate estimates Shannon entropy power (SEP), Fisher information (FIM)
//! and Fisher-Shannon complexity (FSC) from Gaussian kernel density estimates,
//! tracks them over sliding calendar windows at every grid location, and
//! summarizes the resulting measure fields with EOF decomposition and
//! latitude-time (Hovmöller) means.
//!
//! Module map:
//!
//! - [`kde`]: Gaussian KDE, its derivative, Sheather-Jones bandwidth.
//! - [`fisher_shannon`]: entropy, SEP, FIM and FSC by quadrature.
//! - [`windows`]: calendar-month sliding windows and z-scoring.
//! - [`eof`]: empirical orthogonal functions and PC series.
//! - [`grid`]: gridded fields, native/CSV I/O, Hovmöller tables.
//! - [`synth`]: seeded synthetic fixtures.
//! - [`stats`]: linear trend fits with R².

pub mod eof;
pub mod error;
pub mod fisher_shannon;
pub mod grid;
pub mod kde;
pub mod stats;
pub mod synth;
pub mod windows;

pub use error::{Error, ErrorCategory, Result};
