//! `corr` and `render`.

use keyshap::analysis::{confidence_correlation, render_heatmap, ConfidenceTable, HeatmapStyle};
use keyshap::matrix::{read_labelled_csv, write_labelled_csv};

use crate::error::CliError;
use crate::run::Run;
use crate::{CorrArgs, RenderArgs};

pub fn corr(run: &mut Run, a: &CorrArgs) -> Result<(), CliError> {
    let bytes = run.read(&a.table)?;
    let table = ConfidenceTable::from_csv(bytes.as_slice())?;
    let corr = confidence_correlation(&table)?;
    for &(i, j) in &corr.zero_variance {
        eprintln!(
            "warning: zero variance for ({}, {}); correlation set to 0",
            table.names[i], table.names[j]
        );
    }
    let mut csv = Vec::new();
    write_labelled_csv(&mut csv, &table.names, &corr.matrix, 1.0)?;
    run.emit("corr.csv", csv, true)
}

pub fn render(run: &mut Run, a: &RenderArgs) -> Result<(), CliError> {
    let bytes = run.read(&a.matrix)?;
    let (labels, m) = read_labelled_csv(bytes.as_slice(), 1.0)?;
    let style = HeatmapStyle {
        decimals: a.decimals,
        ..HeatmapStyle::default()
    };
    let svg = render_heatmap(&m, &labels, &style)?;
    let stem = a
        .matrix
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "heatmap".into());
    run.emit(&format!("{stem}.svg"), svg.into_bytes(), true)
}
