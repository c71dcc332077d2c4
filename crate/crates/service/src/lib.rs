//! Command line and HTTP front end for interactive and simulated sessions.

pub mod api;
pub mod cli;
