//! Tables and self-contained SVG plots.

use std::fmt::Write as _;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sweeps::{fmt17, SweepResult};

/// Named numeric columns, one row per sample.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Table {
    pub name: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn new(name: &str, columns: &[&str]) -> Self {
        Self { name: name.into(), columns: columns.iter().map(|s| s.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<f64>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let k = self.columns.iter().position(|c| c == name)?;
        Some(self.rows.iter().map(|r| r[k]).collect())
    }

    /// Axis and metric columns of a sweep (status and resolved parameters dropped).
    pub fn from_sweep(r: &SweepResult) -> Self {
        let mut columns: Vec<String> = r.provenance.axes.iter().map(|a| a.name.clone()).collect();
        columns.extend(r.provenance.metrics.iter().map(|c| c.name.clone()));
        let rows = r.rows.iter().map(|row| row.axes.iter().chain(&row.metrics).copied().collect()).collect();
        Self { name: r.provenance.sweep.clone(), columns, rows }
    }

    pub fn write_csv(&self, out: impl Write) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(&self.columns)?;
        for r in &self.rows {
            w.write_record(r.iter().map(|x| fmt17(*x)))?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn write_json(&self, out: impl Write) -> Result<()> {
        serde_json::to_writer_pretty(out, self)?;
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PlotKind {
    /// First column on x, every other column a series.
    Line,
    /// Columns 0 and 1 span the grid; one map per remaining column.
    Heatmap,
}

const W: f64 = 640.0;
const H: f64 = 420.0;
const ML: f64 = 70.0;
const MR: f64 = 150.0;
const MT: f64 = 40.0;
const MB: f64 = 55.0;
const COLORS: [&str; 8] = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf"];

fn finite_range(v: impl Iterator<Item = f64>) -> Option<(f64, f64)> {
    let (lo, hi) = v.filter(|x| x.is_finite()).fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), x| (a.min(x), b.max(x)));
    if lo > hi {
        return None;
    }
    Some(if hi - lo < 1e-300 { (lo - 0.5, hi + 0.5) } else { (lo, hi) })
}

fn tick(v: f64) -> String {
    let s = format!("{v:.4}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" { "0".into() } else { s.into() }
}

fn frame(svg: &mut String, title: &str, xlabel: &str, ylabel: &str, xr: (f64, f64), yr: (f64, f64)) {
    let (pw, ph) = (W - ML - MR, H - MT - MB);
    let _ = write!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="12">
<rect width="{W}" height="{H}" fill="white"/>
<text x="{}" y="22" text-anchor="middle" font-size="14">{}</text>
<rect x="{ML}" y="{MT}" width="{pw}" height="{ph}" fill="none" stroke="black"/>
"#,
        ML + pw / 2.0,
        esc(title)
    );
    for k in 0..=4 {
        let f = k as f64 / 4.0;
        let x = ML + f * pw;
        let y = MT + ph - f * ph;
        let _ = writeln!(svg, r#"<line x1="{x}" y1="{}" x2="{x}" y2="{}" stroke="black"/>"#, MT + ph, MT + ph + 5.0);
        let _ = writeln!(svg, r#"<text x="{x}" y="{}" text-anchor="middle">{}</text>"#, MT + ph + 18.0, tick(xr.0 + f * (xr.1 - xr.0)));
        let _ = writeln!(svg, r#"<line x1="{}" y1="{y}" x2="{ML}" y2="{y}" stroke="black"/>"#, ML - 5.0);
        let _ = writeln!(svg, r#"<text x="{}" y="{}" text-anchor="end">{}</text>"#, ML - 8.0, y + 4.0, tick(yr.0 + f * (yr.1 - yr.0)));
    }
    let _ = writeln!(svg, r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#, ML + pw / 2.0, H - 12.0, esc(xlabel));
    let _ = writeln!(
        svg,
        r#"<text x="16" y="{}" text-anchor="middle" transform="rotate(-90 16 {})">{}</text>"#,
        MT + ph / 2.0,
        MT + ph / 2.0,
        esc(ylabel)
    );
}

fn esc(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Line plot of every column against the first. `y_offset` is added to all y values.
pub fn render_line(table: &Table, title: &str, y_offset: f64) -> Result<String> {
    if table.rows.is_empty() {
        return Err(Error::Plot(format!("{}: empty table", table.name)));
    }
    if table.rows.len() < 2 {
        return Err(Error::Plot(format!("{}: a line plot needs at least 2 points", table.name)));
    }
    if table.columns.len() < 2 {
        return Err(Error::Plot(format!("{}: no series to plot", table.name)));
    }
    let xr = finite_range(table.rows.iter().map(|r| r[0])).ok_or_else(|| Error::Plot("no finite x values".into()))?;
    let yr = finite_range(table.rows.iter().flat_map(|r| r[1..].iter().map(|v| v + y_offset)))
        .ok_or_else(|| Error::Plot("no finite y values".into()))?;
    let (pw, ph) = (W - ML - MR, H - MT - MB);
    let sx = |x: f64| ML + (x - xr.0) / (xr.1 - xr.0) * pw;
    let sy = |y: f64| MT + ph - (y - yr.0) / (yr.1 - yr.0) * ph;
    let mut svg = String::new();
    let ylabel = if table.columns.len() == 2 { table.columns[1].as_str() } else { "" };
    frame(&mut svg, title, &table.columns[0], ylabel, xr, yr);
    for (k, name) in table.columns.iter().enumerate().skip(1) {
        let color = COLORS[(k - 1) % COLORS.len()];
        // Non-finite samples break the polyline into segments.
        let mut seg: Vec<String> = Vec::new();
        let flush = |seg: &mut Vec<String>, svg: &mut String| {
            if seg.len() > 1 {
                let _ = writeln!(svg, r#"<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{}"/>"#, seg.join(" "));
            }
            seg.clear();
        };
        for r in &table.rows {
            let y = r[k] + y_offset;
            if r[0].is_finite() && y.is_finite() {
                seg.push(format!("{:.2},{:.2}", sx(r[0]), sy(y)));
            } else {
                flush(&mut seg, &mut svg);
            }
        }
        flush(&mut seg, &mut svg);
        let ly = MT + 14.0 + 18.0 * (k - 1) as f64;
        let _ = writeln!(svg, r#"<line x1="{}" y1="{ly}" x2="{}" y2="{ly}" stroke="{color}" stroke-width="2"/>"#, W - MR + 10.0, W - MR + 30.0);
        let _ = writeln!(svg, r#"<text x="{}" y="{}">{}</text>"#, W - MR + 35.0, ly + 4.0, esc(name));
    }
    svg.push_str("</svg>\n");
    Ok(svg)
}

fn viridis(t: f64) -> String {
    // Five-stop piecewise-linear approximation.
    const STOPS: [(f64, f64, f64); 5] =
        [(68.0, 1.0, 84.0), (59.0, 82.0, 139.0), (33.0, 145.0, 140.0), (94.0, 201.0, 98.0), (253.0, 231.0, 37.0)];
    let t = t.clamp(0.0, 1.0) * 4.0;
    let i = (t.floor() as usize).min(3);
    let f = t - i as f64;
    let (a, b) = (STOPS[i], STOPS[i + 1]);
    let c = |u: f64, v: f64| (u + f * (v - u)).round() as u8;
    format!("#{:02x}{:02x}{:02x}", c(a.0, b.0), c(a.1, b.1), c(a.2, b.2))
}

/// Heatmap of column `z` over the grid spanned by columns 0 and 1.
pub fn render_heatmap(table: &Table, z: usize, title: &str) -> Result<String> {
    if table.rows.is_empty() {
        return Err(Error::Plot(format!("{}: empty table", table.name)));
    }
    if table.columns.len() < 3 || z < 2 || z >= table.columns.len() {
        return Err(Error::Plot(format!("{}: heatmap needs x, y and a metric column", table.name)));
    }
    let uniq = |k: usize| {
        let mut v: Vec<f64> = table.rows.iter().map(|r| r[k]).collect();
        v.sort_by(f64::total_cmp);
        v.dedup();
        v
    };
    let (xs, ys) = (uniq(0), uniq(1));
    if xs.len() < 2 || ys.len() < 2 {
        return Err(Error::Plot(format!("{}: heatmap needs at least 2 distinct values per axis", table.name)));
    }
    let zr = finite_range(table.rows.iter().map(|r| r[z])).ok_or_else(|| Error::Plot("no finite values".into()))?;
    let (pw, ph) = (W - ML - MR, H - MT - MB);
    let (cw, ch) = (pw / xs.len() as f64, ph / ys.len() as f64);
    let mut svg = String::new();
    frame(&mut svg, title, &table.columns[0], &table.columns[1], (xs[0], xs[xs.len() - 1]), (ys[0], ys[ys.len() - 1]));
    for r in &table.rows {
        let i = xs.iter().position(|&v| v == r[0]).expect("x in grid");
        let j = ys.iter().position(|&v| v == r[1]).expect("y in grid");
        let fill = if r[z].is_finite() { viridis((r[z] - zr.0) / (zr.1 - zr.0)) } else { "#bbbbbb".into() };
        let _ = writeln!(
            svg,
            r#"<rect x="{:.2}" y="{:.2}" width="{:.2}" height="{:.2}" fill="{fill}"/>"#,
            ML + i as f64 * cw,
            MT + ph - (j + 1) as f64 * ch,
            cw + 0.3,
            ch + 0.3
        );
    }
    // Colour bar.
    let bx = W - MR + 20.0;
    for k in 0..50 {
        let t = k as f64 / 49.0;
        let _ = writeln!(svg, r#"<rect x="{bx}" y="{:.2}" width="16" height="{:.2}" fill="{}"/>"#, MT + ph - (k + 1) as f64 * ph / 50.0, ph / 50.0 + 0.3, viridis(t));
    }
    let _ = writeln!(svg, r#"<text x="{}" y="{}">{}</text>"#, bx + 22.0, MT + ph, tick(zr.0));
    let _ = writeln!(svg, r#"<text x="{}" y="{}">{}</text>"#, bx + 22.0, MT + 10.0, tick(zr.1));
    let _ = writeln!(svg, r#"<text x="{bx}" y="{}">{}</text>"#, MT - 8.0, esc(&table.columns[z]));
    svg.push_str("</svg>\n");
    Ok(svg)
}

/// Renders `table` as one SVG (line) or one SVG per metric column (heatmap).
pub fn render_plot(table: &Table, kind: PlotKind, y_offset: f64) -> Result<Vec<(String, String)>> {
    match kind {
        PlotKind::Line => Ok(vec![(format!("{}.svg", table.name), render_line(table, &table.name, y_offset)?)]),
        PlotKind::Heatmap => {
            if table.rows.is_empty() {
                return Err(Error::Plot(format!("{}: empty table", table.name)));
            }
            (2..table.columns.len())
                .map(|z| {
                    let name = format!("{}_{}.svg", table.name, table.columns[z]);
                    Ok((name, render_heatmap(table, z, &format!("{} {}", table.name, table.columns[z]))?))
                })
                .collect()
        }
    }
}
