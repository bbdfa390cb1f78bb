//! Landscape-aware differential evolution for multimodal optimization.
//!
//! A single individual explores one peak per lifetime. Each exhausted
//! individual is classified against the known peaks, global peaks are refined
//! by local search, peak regions are simulated from the evaluation history
//! and act as taboo zones, and the next lifetime starts in a region chosen
//! from the landscape seen so far.

pub mod bench;
pub mod cli;
pub mod distinct;
pub mod engine;
pub mod error;
pub mod explore;
pub mod history;
pub mod metrics;
pub mod refine;
pub mod region;
pub mod reinit;
pub mod space;
