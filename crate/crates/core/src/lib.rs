//! Metric polygons, tripodal planar embeddings and their distortion.

pub mod metric;
pub mod polygon;
pub mod tripodal;
pub mod distortion;
pub mod optimizer;
pub mod lemma_lab;
pub mod cli;
