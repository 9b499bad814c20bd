//! Command-line interface and HTTP service over the `pmascan-core` pipeline.
//!
//! The binary front-end lives in [`commands`]; the embedded HTTP server
//! (invoked via `pmascan serve`) lives in [`server`]. Both are exported as a
//! library so integration tests can drive the router in-process.

pub mod commands;
pub mod server;

pub use commands::{run, Cli};
