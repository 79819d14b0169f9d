//! File formats, dataset adapters, report emitters and the `figbias`
//! command line, on top of the in-memory toolkit in `figbias-core`.

pub mod adapter;
pub mod cli;
pub mod config;
pub mod emit;
pub mod export;
pub mod io;

pub use figbias_core as core;
