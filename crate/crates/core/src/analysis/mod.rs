//! Dataset-level confidence correlation and heatmap rendering.

mod correlation;
mod heatmap;

pub use correlation::{confidence_correlation, ConfidenceTable, Correlation};
pub use heatmap::{render_heatmap, HeatmapStyle};
