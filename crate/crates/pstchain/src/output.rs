//! CSV, metadata, and SVG emission. All file content is a pure function of
//! the data (fixed float formatting, fixed palette), so identical runs
//! produce byte-identical files.

use std::fmt::Write as _;
use std::path::Path;

use crate::config::RunConfig;
use crate::dynamics::TimeSeries;
use crate::error::{Error, Result};
use crate::experiments::{FitResult, ScanResult};

/// Floats are written with 12 significant digits: fixed notation in the
/// human range, scientific outside it.
pub fn format_float(v: f64) -> String {
    if v == 0.0 {
        return "0.000000000000".to_string();
    }
    let a = v.abs();
    if (1e-3..1e6).contains(&a) {
        format!("{v:.12}")
    } else {
        format!("{v:.11e}")
    }
}

fn write_file(path: &Path, content: &str) -> Result<()> {
    std::fs::write(path, content).map_err(|e| Error::io(path.display().to_string(), e))
}

/// Sibling metadata file: the full canonical config plus version comments.
/// Its body parses back to the originating configuration.
fn write_metadata(path: &Path, config: &RunConfig) -> Result<()> {
    let meta_path = path.with_extension(format!(
        "{}.meta",
        path.extension().and_then(|e| e.to_str()).unwrap_or("out")
    ));
    let mut s = String::new();
    let _ = writeln!(s, "# pstchain {}", env!("CARGO_PKG_VERSION"));
    let _ = writeln!(s, "# reproduces the run that wrote {}", path.display());
    s.push_str(&config.to_text());
    write_file(&meta_path, &s)
}

/// Write a time series as CSV (`tau_over_tS` first) plus its metadata file.
pub fn emit_series_csv(series: &TimeSeries, path: &Path, config: &RunConfig) -> Result<()> {
    let mut s = String::new();
    let names: Vec<&str> = series.columns.iter().map(|(n, _)| n.as_str()).collect();
    let _ = writeln!(s, "tau_over_tS,{}", names.join(","));
    for (i, &tau) in series.tau.iter().enumerate() {
        let mut row = format_float(tau);
        for (_, col) in &series.columns {
            row.push(',');
            row.push_str(&format_float(col[i]));
        }
        let _ = writeln!(s, "{row}");
    }
    write_file(path, &s)?;
    write_metadata(path, config)
}

/// Write a scan as CSV: one row per grid point with mean and standard error.
pub fn emit_scan_csv(scan: &ScanResult, path: &Path, config: &RunConfig) -> Result<()> {
    let mut s = String::new();
    let _ = writeln!(
        s,
        "{},mean,std_err,n_realizations",
        scan.axis_names.join(",")
    );
    for row in &scan.rows {
        let coords: Vec<String> = row.coords.iter().map(|&c| format_float(c)).collect();
        let _ = writeln!(
            s,
            "{},{},{},{}",
            coords.join(","),
            format_float(row.mean),
            format_float(row.std_err),
            row.n_realizations
        );
    }
    write_file(path, &s)?;
    write_metadata(path, config)
}

/// Write a fit result as a single CSV row.
pub fn emit_fit_csv(fit: &FitResult, path: &Path, config: &RunConfig) -> Result<()> {
    let mut s = String::new();
    let _ = writeln!(s, "p0,residual_rms,points_used,points_excluded");
    let _ = writeln!(
        s,
        "{},{},{},{}",
        format_float(fit.p0),
        format_float(fit.residual_rms),
        fit.points_used,
        fit.points_excluded
    );
    write_file(path, &s)?;
    write_metadata(path, config)
}

const SVG_PALETTE: &[&str] = &[
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#17becf", "#7f7f7f",
];

const WIDTH: f64 = 800.0;
const HEIGHT: f64 = 500.0;
const MARGIN_L: f64 = 64.0;
const MARGIN_R: f64 = 20.0;
const MARGIN_T: f64 = 24.0;
const MARGIN_B: f64 = 48.0;

/// Render selected series columns as a standalone SVG line plot.
pub fn emit_svg(series: &TimeSeries, path: &Path, columns: &[String]) -> Result<()> {
    if series.tau.is_empty() {
        return Err(Error::domain("cannot plot an empty series"));
    }
    let selected: Vec<(&str, &[f64])> = if columns.is_empty() {
        series
            .columns
            .iter()
            .map(|(n, v)| (n.as_str(), v.as_slice()))
            .collect()
    } else {
        let mut sel = Vec::new();
        for name in columns {
            let col = series
                .column(name)
                .ok_or_else(|| Error::domain(format!("series has no column named {name}")))?;
            sel.push((name.as_str(), col));
        }
        sel
    };

    let x_min = series.tau[0];
    let x_max = *series.tau.last().unwrap();
    let x_span = if x_max > x_min { x_max - x_min } else { 1.0 };
    let mut y_min = f64::INFINITY;
    let mut y_max = f64::NEG_INFINITY;
    for (_, col) in &selected {
        for &v in *col {
            y_min = y_min.min(v);
            y_max = y_max.max(v);
        }
    }
    if !y_min.is_finite() || !y_max.is_finite() {
        return Err(Error::numeric("series contains non-finite values"));
    }
    let pad = 0.05 * (y_max - y_min).max(1e-12);
    let (y_lo, y_hi) = (y_min - pad, y_max + pad);

    let to_x = |tau: f64| MARGIN_L + (tau - x_min) / x_span * (WIDTH - MARGIN_L - MARGIN_R);
    let to_y = |v: f64| HEIGHT - MARGIN_B - (v - y_lo) / (y_hi - y_lo) * (HEIGHT - MARGIN_T - MARGIN_B);

    let mut s = String::new();
    let _ = writeln!(
        s,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{HEIGHT}\" \
         viewBox=\"0 0 {WIDTH} {HEIGHT}\">"
    );
    let _ = writeln!(s, "<rect width=\"{WIDTH}\" height=\"{HEIGHT}\" fill=\"white\"/>");

    // axes
    let _ = writeln!(
        s,
        "<line x1=\"{:.3}\" y1=\"{:.3}\" x2=\"{:.3}\" y2=\"{:.3}\" stroke=\"black\"/>",
        MARGIN_L,
        HEIGHT - MARGIN_B,
        WIDTH - MARGIN_R,
        HEIGHT - MARGIN_B
    );
    let _ = writeln!(
        s,
        "<line x1=\"{:.3}\" y1=\"{:.3}\" x2=\"{:.3}\" y2=\"{:.3}\" stroke=\"black\"/>",
        MARGIN_L, MARGIN_T, MARGIN_L,
        HEIGHT - MARGIN_B
    );

    // ticks
    for k in 0..=5 {
        let frac = k as f64 / 5.0;
        let tau = x_min + frac * x_span;
        let x = to_x(tau);
        let _ = writeln!(
            s,
            "<line x1=\"{x:.3}\" y1=\"{:.3}\" x2=\"{x:.3}\" y2=\"{:.3}\" stroke=\"black\"/>",
            HEIGHT - MARGIN_B,
            HEIGHT - MARGIN_B + 5.0
        );
        let _ = writeln!(
            s,
            "<text x=\"{x:.3}\" y=\"{:.3}\" font-size=\"12\" text-anchor=\"middle\">{tau:.3}</text>",
            HEIGHT - MARGIN_B + 18.0
        );
        let v = y_lo + frac * (y_hi - y_lo);
        let y = to_y(v);
        let _ = writeln!(
            s,
            "<line x1=\"{:.3}\" y1=\"{y:.3}\" x2=\"{:.3}\" y2=\"{y:.3}\" stroke=\"black\"/>",
            MARGIN_L - 5.0,
            MARGIN_L
        );
        let _ = writeln!(
            s,
            "<text x=\"{:.3}\" y=\"{:.3}\" font-size=\"12\" text-anchor=\"end\">{v:.3}</text>",
            MARGIN_L - 8.0,
            y + 4.0
        );
    }
    let _ = writeln!(
        s,
        "<text x=\"{:.3}\" y=\"{:.3}\" font-size=\"13\" text-anchor=\"middle\">t / t_S</text>",
        MARGIN_L + (WIDTH - MARGIN_L - MARGIN_R) / 2.0,
        HEIGHT - 10.0
    );

    // polylines
    for (i, (name, col)) in selected.iter().enumerate() {
        let color = SVG_PALETTE[i % SVG_PALETTE.len()];
        let mut points = String::new();
        for (j, &tau) in series.tau.iter().enumerate() {
            let _ = write!(points, "{:.3},{:.3} ", to_x(tau), to_y(col[j]));
        }
        let _ = writeln!(
            s,
            "<polyline fill=\"none\" stroke=\"{color}\" stroke-width=\"1.2\" points=\"{}\"/>",
            points.trim_end()
        );
        // legend
        let ly = MARGIN_T + 16.0 * i as f64 + 8.0;
        let _ = writeln!(
            s,
            "<line x1=\"{:.3}\" y1=\"{ly:.3}\" x2=\"{:.3}\" y2=\"{ly:.3}\" stroke=\"{color}\" stroke-width=\"2\"/>",
            WIDTH - MARGIN_R - 150.0,
            WIDTH - MARGIN_R - 120.0
        );
        let _ = writeln!(
            s,
            "<text x=\"{:.3}\" y=\"{:.3}\" font-size=\"12\">{name}</text>",
            WIDTH - MARGIN_R - 112.0,
            ly + 4.0
        );
    }
    let _ = writeln!(s, "</svg>");
    write_file(path, &s)
}
