//! Library side of the `slidewin` command: stream files, generators, the
//! `run` driver and the acceptance suite.

pub mod accept;
pub mod commands;
pub mod gen;
pub mod run;
