// SPDX-License-Identifier: MIT OR Apache-2.0

//! Command-line front end for the `mocpd` detector: simulate labelled
//! series, run detection over CSV streams, and score detections.

pub mod args;
pub mod commands;
pub mod error;
pub mod io;

pub use args::{Cli, Command};
pub use commands::{run, DetectManifest, SimulateManifest, TimingSummary};
pub use error::CliError;
