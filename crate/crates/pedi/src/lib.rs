//! Host-side companion to `pedi-core`: configuration loading, the demonstration
//! dataset container, tracking reports, the teleoperation server and the
//! `pedi` command line.

pub mod cli;
pub mod config;
pub mod dataset;
pub mod error;
pub mod paramfile;
pub mod report;
pub mod teleop;

pub use error::{Error, Result};
pub use pedi_core as core;
