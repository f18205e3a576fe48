//! Configuration, file formats and subcommands of the `nlhom` driver.

pub mod commands;
pub mod config;
pub mod io;
