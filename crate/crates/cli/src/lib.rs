//! File formats, option parsing and subcommand drivers for the `diffsplines`
//! command-line tool. All numerics live in `diffsplines_core`.

pub mod commands;
pub mod config;
pub mod io;
