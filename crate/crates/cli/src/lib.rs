//! Command-line driver and JSON query service for the people finder.

pub mod api;
pub mod commands;
pub mod search;
