use std::fmt::Write as _;
use std::path::Path;

use serde::Serialize;

use crate::densities::{DensityGrid, LineAxis};
use crate::error::{io_err, Result};

/// Version of every CSV layout written by the harness.
pub const CSV_VERSION: u32 = 1;

/// Shortest round-trip representation; stable across runs and platforms.
/// Very small or large magnitudes use exponent notation.
pub fn fmt_f64(x: f64) -> String {
    let a = x.abs();
    if a == 0.0 || !a.is_finite() || (1e-4..1e15).contains(&a) {
        format!("{x}")
    } else {
        format!("{x:e}")
    }
}

/// CSV text whose first line is `# rankdiff <kind> v<version>`, followed by
/// optional `# ` comment lines and the column header.
pub fn csv_string(kind: &str, comments: &[&str], header: &[&str], rows: &[Vec<String>]) -> String {
    let mut s = format!("# rankdiff {kind} v{CSV_VERSION}\n");
    for c in comments {
        let _ = writeln!(s, "# {c}");
    }
    s.push_str(&header.join(","));
    s.push('\n');
    for r in rows {
        let fields: Vec<String> = r.iter().map(|f| csv_field(f)).collect();
        s.push_str(&fields.join(","));
        s.push('\n');
    }
    s
}

fn csv_field(f: &str) -> String {
    if f.contains([',', '"', '\n']) {
        format!("\"{}\"", f.replace('"', "\"\""))
    } else {
        f.to_string()
    }
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
    }
    std::fs::write(path, text).map_err(|e| io_err(path, e))
}

pub fn write_csv(path: &Path, kind: &str, comments: &[&str], header: &[&str], rows: &[Vec<String>]) -> Result<()> {
    write_text(path, &csv_string(kind, comments, header, rows))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    write_text(path, &text)
}

const STOPS: [(f64, [f64; 3]); 5] = [
    (0.0, [68.0, 1.0, 84.0]),
    (0.25, [59.0, 82.0, 139.0]),
    (0.5, [33.0, 145.0, 140.0]),
    (0.75, [94.0, 201.0, 98.0]),
    (1.0, [253.0, 231.0, 37.0]),
];

fn color(v: f64) -> String {
    let v = if v.is_finite() { v.clamp(0.0, 1.0) } else { 0.0 };
    let k = STOPS.iter().position(|s| s.0 >= v).unwrap_or(STOPS.len() - 1).max(1);
    let (a, b) = (STOPS[k - 1], STOPS[k]);
    let w = (v - a.0) / (b.0 - a.0);
    let c: Vec<u8> = (0..3).map(|i| (a.1[i] + w * (b.1[i] - a.1[i])).round() as u8).collect();
    format!("#{:02x}{:02x}{:02x}", c[0], c[1], c[2])
}

/// Heatmap of the continuous density with a colour bar; the singular line is
/// drawn in red when it carries mass.
pub fn svg_heatmap(grid: &DensityGrid) -> String {
    let (nx, ny) = (grid.xi1.len(), grid.xi2.len());
    let (left, top, size, bar) = (60.0, 20.0, 400.0, 20.0);
    let cw = size / nx as f64;
    let ch = size / ny as f64;
    let vmax = grid.values.iter().flatten().copied().filter(|v| v.is_finite()).fold(0.0f64, f64::max);
    let scale = if vmax > 0.0 { vmax } else { 1.0 };
    let width = left + size + 90.0;
    let height = top + size + 50.0;
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width:.0}" height="{height:.0}" viewBox="0 0 {width:.0} {height:.0}">"#
    );
    let _ = writeln!(s, r#"<rect x="0" y="0" width="{width:.0}" height="{height:.0}" fill="white"/>"#);
    for i in 0..nx {
        for j in 0..ny {
            // xi2 grows upwards
            let x = left + i as f64 * cw;
            let y = top + (ny - 1 - j) as f64 * ch;
            let _ = writeln!(
                s,
                r#"<rect x="{x:.3}" y="{y:.3}" width="{cw:.3}" height="{ch:.3}" fill="{}"/>"#,
                color(grid.values[i][j] / scale)
            );
        }
    }
    if let Some(line) = grid.atom.filter(|a| a.mass() > 0.0) {
        let (x0, x1) = (grid.xi1[0], grid.xi1[nx - 1]);
        let (y0, y1) = (grid.xi2[0], grid.xi2[ny - 1]);
        let px = |v: f64| left + (v - x0) / (x1 - x0).max(f64::MIN_POSITIVE) * size;
        let py = |v: f64| top + size - (v - y0) / (y1 - y0).max(f64::MIN_POSITIVE) * size;
        let seg = match line.axis {
            LineAxis::Xi2Fixed | LineAxis::Rank2Fixed if (y0..=y1).contains(&line.level) => {
                Some((px(line.level.max(x0)), py(line.level), px(x1), py(line.level)))
            }
            LineAxis::Xi1Fixed if (x0..=x1).contains(&line.level) => {
                Some((px(line.level), py(line.level.max(y0)), px(line.level), py(y1)))
            }
            _ => None,
        };
        if let Some((a, b, c, d)) = seg {
            let _ = writeln!(
                s,
                r#"<line x1="{a:.3}" y1="{b:.3}" x2="{c:.3}" y2="{d:.3}" stroke="red" stroke-width="2"/>"#
            );
        }
    }
    let bx = left + size + 20.0;
    let nb = 50;
    for k in 0..nb {
        let v = (nb - 1 - k) as f64 / (nb - 1) as f64;
        let y = top + k as f64 * size / nb as f64;
        let _ = writeln!(
            s,
            r#"<rect x="{bx:.3}" y="{y:.3}" width="{bar:.3}" height="{:.3}" fill="{}"/>"#,
            size / nb as f64,
            color(v)
        );
    }
    let _ = writeln!(s, r#"<text x="{:.3}" y="{:.3}" font-size="10">{vmax:.4}</text>"#, bx + bar + 4.0, top + 8.0);
    let _ = writeln!(s, r#"<text x="{:.3}" y="{:.3}" font-size="10">0</text>"#, bx + bar + 4.0, top + size);
    let axis = |v: f64| format!("{v:.3}");
    let _ = writeln!(
        s,
        r#"<text x="{left:.3}" y="{:.3}" font-size="10">{}</text>"#,
        top + size + 15.0,
        axis(grid.xi1[0])
    );
    let _ = writeln!(
        s,
        r#"<text x="{:.3}" y="{:.3}" font-size="10" text-anchor="end">{}</text>"#,
        left + size,
        top + size + 15.0,
        axis(grid.xi1[nx - 1])
    );
    let _ = writeln!(s, r#"<text x="{:.3}" y="{:.3}" font-size="12">xi1</text>"#, left + size / 2.0, top + size + 35.0);
    let _ = writeln!(s, r#"<text x="5" y="{:.3}" font-size="10">{}</text>"#, top + size, axis(grid.xi2[0]));
    let _ = writeln!(s, r#"<text x="5" y="{:.3}" font-size="10">{}</text>"#, top + 8.0, axis(grid.xi2[ny - 1]));
    let _ = writeln!(s, r#"<text x="5" y="{:.3}" font-size="12">xi2</text>"#, top + size / 2.0);
    s.push_str("</svg>\n");
    s
}

pub fn emit_svg_heatmap(grid: &DensityGrid, path: &Path) -> Result<()> {
    if grid.values.iter().flatten().any(|v| !v.is_finite()) {
        return Err(crate::error::invalid("heatmap needs a finite grid"));
    }
    write_text(path, &svg_heatmap(grid))
}
