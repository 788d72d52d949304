//! Configuration, curve files, snapshot output and SVG rendering.

pub mod config;
pub mod snapshot;
pub mod svg;
