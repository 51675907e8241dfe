//! CSV, JSON and SVG output. Files are written to a temporary sibling and
//! renamed into place.

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::Path;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::sweep::SweepGrid;
use crate::wigner::WignerGrid;

fn io_err(path: &Path, e: impl std::fmt::Display) -> Error {
    Error::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    }
}

/// Writes `bytes` to `path` atomically.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| io_err(path, e))?;
    tmp.write_all(bytes).map_err(|e| io_err(path, e))?;
    tmp.as_file().sync_all().map_err(|e| io_err(path, e))?;
    tmp.persist(path).map_err(|e| io_err(path, e.error))?;
    Ok(())
}

fn csv_bytes(header: &[String], rows: impl Iterator<Item = Vec<f64>>) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let err = |e: csv::Error| Error::Io {
        path: "<csv>".into(),
        message: e.to_string(),
    };
    w.write_record(header).map_err(err)?;
    for row in rows {
        w.write_record(row.iter().map(|v| v.to_string())).map_err(err)?;
    }
    w.into_inner().map_err(|e| Error::Io {
        path: "<csv>".into(),
        message: e.to_string(),
    })
}

/// One row per grid point with a header of axis and result names.
pub fn grid_csv(grid: &SweepGrid) -> Result<Vec<u8>> {
    csv_bytes(&grid.columns, grid.rows.iter().cloned())
}

/// `x,y,density` rows, `x` varying fastest.
pub fn wigner_csv(w: &WignerGrid) -> Result<Vec<u8>> {
    let header = ["x", "y", "density"].map(String::from);
    let (xs, ys) = (w.grid.xs(), w.grid.ys());
    let rows = ys.iter().enumerate().flat_map(move |(j, &y)| {
        let xs = xs.clone();
        let row = w.density[j].clone();
        xs.into_iter().zip(row).map(move |(x, d)| vec![x, y, d])
    });
    csv_bytes(&header, rows)
}

/// Run metadata written next to the data files. Everything except
/// `timestamp` and `elapsed_ms` is a pure function of the inputs.
#[derive(Debug, Clone, Serialize)]
pub struct Manifest<C: Serialize> {
    pub command: String,
    pub version: String,
    pub config: C,
    pub outputs: Vec<String>,
    pub timestamp: u64,
    pub elapsed_ms: u128,
}

impl<C: Serialize> Manifest<C> {
    pub fn new(command: &str, config: C, outputs: Vec<String>, elapsed: std::time::Duration) -> Self {
        let timestamp = std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map_or(0, |d| d.as_secs());
        Self {
            command: command.to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            config,
            outputs,
            timestamp,
            elapsed_ms: elapsed.as_millis(),
        }
    }
}

pub fn to_json<T: Serialize>(value: &T) -> Result<Vec<u8>> {
    let mut s = serde_json::to_vec_pretty(value).map_err(|e| Error::Io {
        path: "<json>".into(),
        message: e.to_string(),
    })?;
    s.push(b'\n');
    Ok(s)
}

const COLORMAP: [(f64, [u8; 3]); 5] = [
    (0.00, [68, 1, 84]),
    (0.25, [59, 82, 139]),
    (0.50, [33, 145, 140]),
    (0.75, [94, 201, 98]),
    (1.00, [253, 231, 37]),
];

fn color(t: f64) -> [u8; 3] {
    let t = if t.is_finite() { t.clamp(0.0, 1.0) } else { 0.0 };
    let k = COLORMAP.iter().position(|&(s, _)| s >= t).unwrap_or(4).max(1);
    let ((s0, c0), (s1, c1)) = (COLORMAP[k - 1], COLORMAP[k]);
    let f = (t - s0) / (s1 - s0);
    let mix = |a: u8, b: u8| (f64::from(a) + f * (f64::from(b) - f64::from(a))).round() as u8;
    [mix(c0[0], c1[0]), mix(c0[1], c1[1]), mix(c0[2], c1[2])]
}

/// Heatmap of `values[row][col]` with rows drawn bottom to top.
pub fn heatmap_svg(values: &[Vec<f64>], title: &str, x_label: &str, y_label: &str) -> String {
    const CELL: f64 = 3.0;
    const MARGIN: f64 = 40.0;
    let ny = values.len();
    let nx = values.first().map_or(0, Vec::len);
    let (lo, hi) = values
        .iter()
        .flatten()
        .filter(|v| v.is_finite())
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
    let span = if hi > lo { hi - lo } else { 1.0 };
    let width = 2.0 * MARGIN + CELL * nx as f64;
    let height = 2.0 * MARGIN + CELL * ny as f64;

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" shape-rendering="crispEdges">"#
    );
    let _ = writeln!(svg, r#"<text x="{MARGIN}" y="20" font-size="12">{title} [{lo:.3}, {hi:.3}]</text>"#);
    for (j, row) in values.iter().enumerate() {
        let y = MARGIN + CELL * (ny - 1 - j) as f64;
        for (i, &v) in row.iter().enumerate() {
            let [r, g, b] = color((v - lo) / span);
            let x = MARGIN + CELL * i as f64;
            let _ = writeln!(
                svg,
                r#"<rect x="{x}" y="{y}" width="{CELL}" height="{CELL}" fill="rgb({r},{g},{b})"/>"#
            );
        }
    }
    let _ = writeln!(
        svg,
        r#"<text x="{}" y="{}" font-size="12">{x_label}</text>"#,
        width / 2.0,
        height - 10.0
    );
    let _ = writeln!(
        svg,
        r#"<text x="12" y="{}" font-size="12" transform="rotate(-90 12 {})">{y_label}</text>"#,
        height / 2.0,
        height / 2.0
    );
    svg.push_str("</svg>\n");
    svg
}
