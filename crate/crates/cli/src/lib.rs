//! Scenario files, dataset emission and the verification report for the
//! `susyprop` command-line tool.

pub mod commands;
pub mod config;
pub mod output;
pub mod verify;
