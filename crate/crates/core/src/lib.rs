//! Retrospective active-learning virtual screening.
//!
//! A campaign repeatedly fits a surrogate on the labelled molecules, scores
//! the unlabelled pool with an acquisition function and "docks" the selected
//! batch by looking up its precomputed score.

pub mod acquisition;
pub mod campaign;
pub mod config;
pub mod fingerprint;
pub mod library;
pub mod seed;
pub mod smiles;
pub mod surrogate;
pub mod synthetic;
