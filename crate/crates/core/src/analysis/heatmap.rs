use std::fmt::Write;

use crate::error::{Error, Result};
use crate::matrix::SquareMatrix;

/// Layout and colour ramp for [`render_heatmap`].
#[derive(Clone, Debug, PartialEq)]
pub struct HeatmapStyle {
    pub cell: u32,
    pub label_width: u32,
    /// Ramp colours at the low and high ends.
    pub low_color: [u8; 3],
    pub high_color: [u8; 3],
    /// Decimal places of the per-cell text.
    pub decimals: usize,
}

impl Default for HeatmapStyle {
    fn default() -> Self {
        Self {
            cell: 40,
            label_width: 90,
            low_color: [0xff, 0xff, 0xff],
            high_color: [0x08, 0x30, 0x6b],
            decimals: 2,
        }
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

fn hex(c: [u8; 3]) -> String {
    format!("#{:02x}{:02x}{:02x}", c[0], c[1], c[2])
}

/// Render `matrix` as an SVG 1.1 heatmap with row/column labels and the
/// value printed in each cell.
///
/// The ramp runs from `min(0, min value)` to `max(1, max value)`; both ends
/// are written into the document.
pub fn render_heatmap(matrix: &SquareMatrix, labels: &[String], style: &HeatmapStyle) -> Result<String> {
    let n = matrix.n();
    if !matrix.all_finite() {
        return Err(Error::NonFinite("heatmap input".into()));
    }
    if labels.len() != n {
        return Err(Error::DimensionMismatch(format!("{} labels for {n}x{n} matrix", labels.len())));
    }
    let values = (0..n).flat_map(|i| (0..n).map(move |j| (i, j)));
    let lo = values.clone().map(|(i, j)| matrix.get(i, j)).fold(0.0, f64::min);
    let hi = values.map(|(i, j)| matrix.get(i, j)).fold(1.0, f64::max);

    let (c, lw) = (style.cell, style.label_width);
    let size = lw + c * n as u32;
    let mut svg = String::new();
    let _ = writeln!(svg, r#"<?xml version="1.0" encoding="UTF-8"?>"#);
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{size}" height="{size}" viewBox="0 0 {size} {size}">"#
    );
    let _ = writeln!(
        svg,
        r#"<desc>ramp-low={lo:?} {} ramp-high={hi:?} {}</desc>"#,
        hex(style.low_color),
        hex(style.high_color)
    );
    let _ = writeln!(svg, r#"<g font-family="sans-serif" font-size="11">"#);
    for (k, label) in labels.iter().enumerate() {
        let mid = lw + c * k as u32 + c / 2;
        let _ = writeln!(
            svg,
            r#"<text class="row-label" x="{}" y="{mid}" text-anchor="end" dominant-baseline="middle">{}</text>"#,
            lw - 4,
            escape(label)
        );
        let _ = writeln!(
            svg,
            r#"<text class="col-label" x="{mid}" y="{}" text-anchor="start" transform="rotate(-90 {mid} {})">{}</text>"#,
            lw - 4,
            lw - 4,
            escape(label)
        );
    }
    for i in 0..n {
        for j in 0..n {
            let v = matrix.get(i, j);
            let t = if hi > lo { (v - lo) / (hi - lo) } else { 1.0 };
            let mix = |a: u8, b: u8| (f64::from(a) + (f64::from(b) - f64::from(a)) * t).round() as u8;
            let fill = [
                mix(style.low_color[0], style.high_color[0]),
                mix(style.low_color[1], style.high_color[1]),
                mix(style.low_color[2], style.high_color[2]),
            ];
            let (x, y) = (lw + c * j as u32, lw + c * i as u32);
            let ink = if t > 0.5 { "#ffffff" } else { "#000000" };
            let _ = writeln!(
                svg,
                r#"<rect class="cell" data-row="{i}" data-col="{j}" x="{x}" y="{y}" width="{c}" height="{c}" fill="{}"/>"#,
                hex(fill)
            );
            let _ = writeln!(
                svg,
                r#"<text x="{}" y="{}" text-anchor="middle" dominant-baseline="middle" fill="{ink}">{:.*}</text>"#,
                x + c / 2,
                y + c / 2,
                style.decimals,
                v
            );
        }
    }
    svg.push_str("</g>\n</svg>\n");
    Ok(svg)
}
