//! Config text, CSV output and SVG plots.

pub mod config;
pub mod csv;
pub mod plot;
