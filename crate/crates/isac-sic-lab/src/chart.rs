//! Deterministic SVG line charts from CSV files.
//!
//! The renderer is intentionally small: fixed canvas, fixed palette, no
//! randomness and no timestamps, so identical input bytes always produce
//! identical output bytes. Values that cannot be plotted (blank cells,
//! non-finite numbers, nonpositive values on a log axis) are skipped
//! point-by-point rather than failing the whole chart.

use std::path::Path;

use crate::{Error, Result};

const WIDTH: f64 = 800.0;
const HEIGHT: f64 = 500.0;
const MARGIN_LEFT: f64 = 70.0;
const MARGIN_RIGHT: f64 = 170.0;
const MARGIN_TOP: f64 = 44.0;
const MARGIN_BOTTOM: f64 = 52.0;

const PALETTE: [&str; 6] =
    ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#8c564b", "#e377c2"];

/// What to draw from a CSV file.
#[derive(Debug, Clone)]
pub struct ChartSpec {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    /// Column holding the x value of each row.
    pub x_column: String,
    /// Columns plotted as one line each (exactly one when grouping).
    pub series: Vec<String>,
    /// Log10 y axis; nonpositive values are skipped.
    pub log_y: bool,
    /// Split rows into one line per distinct value of this column.
    pub group_column: Option<String>,
    /// Sort each line by x and extend it to the axes, closing a region
    /// boundary visually.
    pub close_region: bool,
}

/// Renders `csv_path` according to `spec` into an SVG file at `out_path`.
pub fn render_chart(csv_path: &Path, spec: &ChartSpec, out_path: &Path) -> Result<()> {
    let text = std::fs::read_to_string(csv_path)?;
    let (header, rows) = parse_csv(&text);
    let source_name = csv_path.display().to_string();

    let col = |name: &str| -> Result<usize> {
        header.iter().position(|h| h == name).ok_or_else(|| Error::MissingColumn {
            column: name.to_string(),
            source_name: source_name.clone(),
        })
    };
    let x_idx = col(&spec.x_column)?;

    // (label, points) per line.
    let mut lines: Vec<(String, Vec<(f64, f64)>)> = Vec::new();
    match &spec.group_column {
        None => {
            for name in &spec.series {
                let y_idx = col(name)?;
                let pts = collect_points(&rows, x_idx, y_idx, spec.log_y);
                lines.push((name.clone(), pts));
            }
        }
        Some(group) => {
            let g_idx = col(group)?;
            let y_idx = col(spec.series.first().map(String::as_str).unwrap_or_default())?;
            for row in &rows {
                let label = row.get(g_idx).cloned().unwrap_or_default();
                if !lines.iter().any(|(l, _)| *l == label) {
                    lines.push((label, Vec::new()));
                }
            }
            for (label, pts) in &mut lines {
                let subset: Vec<Vec<String>> = rows
                    .iter()
                    .filter(|r| r.get(g_idx).map(String::as_str) == Some(label.as_str()))
                    .cloned()
                    .collect();
                *pts = collect_points(&subset, x_idx, y_idx, spec.log_y);
            }
        }
    }

    if spec.close_region {
        for (_, pts) in &mut lines {
            pts.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("finite points"));
            if let (Some(&first), Some(&last)) = (pts.first(), pts.last()) {
                pts.insert(0, (0.0, first.1));
                pts.push((last.0, 0.0));
            }
        }
    }

    let svg = draw(spec, &lines);
    std::fs::write(out_path, svg)?;
    Ok(())
}

fn collect_points(
    rows: &[Vec<String>],
    x_idx: usize,
    y_idx: usize,
    log_y: bool,
) -> Vec<(f64, f64)> {
    rows.iter()
        .filter_map(|row| {
            let x: f64 = row.get(x_idx)?.parse().ok()?;
            let y: f64 = row.get(y_idx)?.parse().ok()?;
            if !x.is_finite() || !y.is_finite() || (log_y && y <= 0.0) {
                return None;
            }
            Some((x, y))
        })
        .collect()
}

/// Minimal RFC-4180 reader: quoted fields, doubled quotes, CRLF or LF.
/// Returns the header row and the data rows.
pub(crate) fn parse_csv(text: &str) -> (Vec<String>, Vec<Vec<String>>) {
    let mut records: Vec<Vec<String>> = Vec::new();
    let mut field = String::new();
    let mut record: Vec<String> = Vec::new();
    let mut in_quotes = false;
    let mut chars = text.chars().peekable();
    while let Some(c) = chars.next() {
        if in_quotes {
            match c {
                '"' if chars.peek() == Some(&'"') => {
                    chars.next();
                    field.push('"');
                }
                '"' => in_quotes = false,
                _ => field.push(c),
            }
        } else {
            match c {
                '"' => in_quotes = true,
                ',' => record.push(std::mem::take(&mut field)),
                '\r' => {}
                '\n' => {
                    record.push(std::mem::take(&mut field));
                    records.push(std::mem::take(&mut record));
                }
                _ => field.push(c),
            }
        }
    }
    if !field.is_empty() || !record.is_empty() {
        record.push(field);
        records.push(record);
    }
    let mut it = records.into_iter();
    let header = it.next().unwrap_or_default();
    (header, it.collect())
}

// ─────────────────────────── Drawing ───────────────────────────

struct Axis {
    lo: f64,
    hi: f64,
    log: bool,
}

impl Axis {
    fn place(&self, v: f64) -> f64 {
        let v = if self.log { v.log10() } else { v };
        (v - self.lo) / (self.hi - self.lo)
    }

    fn ticks(&self) -> Vec<(f64, String)> {
        if self.log {
            let span = (self.hi - self.lo).max(1.0);
            let step = (span / 8.0).ceil().max(1.0) as i64;
            let mut out = Vec::new();
            let mut e = self.lo.ceil() as i64;
            while (e as f64) <= self.hi + 1e-9 {
                out.push((10f64.powi(e as i32), format!("1e{e}")));
                e += step;
            }
            out
        } else {
            let step = nice_step(self.hi - self.lo);
            let mut out = Vec::new();
            let mut v = (self.lo / step).ceil() * step;
            while v <= self.hi + step * 1e-9 {
                out.push((v, fmt_tick(v)));
                v += step;
            }
            out
        }
    }
}

fn nice_step(range: f64) -> f64 {
    let raw = range / 5.0;
    let mag = 10f64.powf(raw.log10().floor());
    let norm = raw / mag;
    let mult = if norm <= 1.0 {
        1.0
    } else if norm <= 2.0 {
        2.0
    } else if norm <= 5.0 {
        5.0
    } else {
        10.0
    };
    mult * mag
}

fn fmt_tick(v: f64) -> String {
    if v == 0.0 {
        return "0".into();
    }
    let s = format!("{v:.6}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    s.to_string()
}

fn axis_bounds(values: impl Iterator<Item = f64>, log: bool) -> Axis {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for v in values {
        lo = lo.min(v);
        hi = hi.max(v);
    }
    if !lo.is_finite() || !hi.is_finite() {
        return if log {
            Axis { lo: -1.0, hi: 0.0, log }
        } else {
            Axis { lo: 0.0, hi: 1.0, log }
        };
    }
    if log {
        let lo_e = lo.log10().floor();
        let mut hi_e = hi.log10().ceil();
        if hi_e <= lo_e {
            hi_e = lo_e + 1.0;
        }
        Axis { lo: lo_e, hi: hi_e, log }
    } else {
        let pad = if hi > lo { 0.05 * (hi - lo) } else { 0.5 * hi.abs().max(1.0) };
        Axis { lo: lo - pad, hi: hi + pad, log }
    }
}

fn escape(text: &str) -> String {
    text.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn draw(spec: &ChartSpec, lines: &[(String, Vec<(f64, f64)>)]) -> String {
    let plot_w = WIDTH - MARGIN_LEFT - MARGIN_RIGHT;
    let plot_h = HEIGHT - MARGIN_TOP - MARGIN_BOTTOM;
    let x_axis = axis_bounds(
        lines.iter().flat_map(|(_, pts)| pts.iter().map(|p| p.0)),
        false,
    );
    let y_axis = axis_bounds(
        lines.iter().flat_map(|(_, pts)| pts.iter().map(|p| p.1)),
        spec.log_y,
    );
    let px = |x: f64| MARGIN_LEFT + x_axis.place(x) * plot_w;
    let py = |y: f64| MARGIN_TOP + (1.0 - y_axis.place(y)) * plot_h;

    let mut s = String::new();
    s.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{HEIGHT}\" \
         viewBox=\"0 0 {WIDTH} {HEIGHT}\" font-family=\"sans-serif\">\n"
    ));
    s.push_str(&format!(
        "<rect x=\"0\" y=\"0\" width=\"{WIDTH}\" height=\"{HEIGHT}\" fill=\"#ffffff\"/>\n"
    ));
    s.push_str(&format!(
        "<text x=\"{:.2}\" y=\"24\" text-anchor=\"middle\" font-size=\"16\">{}</text>\n",
        MARGIN_LEFT + plot_w / 2.0,
        escape(&spec.title)
    ));

    // Grid and tick labels.
    for (v, label) in x_axis.ticks() {
        let x = px(v);
        s.push_str(&format!(
            "<line x1=\"{x:.2}\" y1=\"{:.2}\" x2=\"{x:.2}\" y2=\"{:.2}\" stroke=\"#dddddd\"/>\n",
            MARGIN_TOP,
            MARGIN_TOP + plot_h
        ));
        s.push_str(&format!(
            "<text x=\"{x:.2}\" y=\"{:.2}\" text-anchor=\"middle\" font-size=\"12\">{label}</text>\n",
            MARGIN_TOP + plot_h + 18.0
        ));
    }
    for (v, label) in y_axis.ticks() {
        let y = py(v);
        s.push_str(&format!(
            "<line x1=\"{:.2}\" y1=\"{y:.2}\" x2=\"{:.2}\" y2=\"{y:.2}\" stroke=\"#dddddd\"/>\n",
            MARGIN_LEFT,
            MARGIN_LEFT + plot_w
        ));
        s.push_str(&format!(
            "<text x=\"{:.2}\" y=\"{:.2}\" text-anchor=\"end\" font-size=\"12\">{label}</text>\n",
            MARGIN_LEFT - 8.0,
            y + 4.0
        ));
    }

    // Plot frame.
    s.push_str(&format!(
        "<rect x=\"{:.2}\" y=\"{:.2}\" width=\"{plot_w:.2}\" height=\"{plot_h:.2}\" \
         fill=\"none\" stroke=\"#000000\"/>\n",
        MARGIN_LEFT, MARGIN_TOP
    ));

    // Axis labels.
    s.push_str(&format!(
        "<text x=\"{:.2}\" y=\"{:.2}\" text-anchor=\"middle\" font-size=\"13\">{}</text>\n",
        MARGIN_LEFT + plot_w / 2.0,
        HEIGHT - 12.0,
        escape(&spec.x_label)
    ));
    s.push_str(&format!(
        "<text x=\"18\" y=\"{:.2}\" text-anchor=\"middle\" font-size=\"13\" \
         transform=\"rotate(-90 18 {:.2})\">{}</text>\n",
        MARGIN_TOP + plot_h / 2.0,
        MARGIN_TOP + plot_h / 2.0,
        escape(&spec.y_label)
    ));

    // Lines and legend.
    for (i, (label, pts)) in lines.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        if !pts.is_empty() {
            let coords: Vec<String> =
                pts.iter().map(|&(x, y)| format!("{:.2},{:.2}", px(x), py(y))).collect();
            s.push_str(&format!(
                "<polyline points=\"{}\" fill=\"none\" stroke=\"{color}\" stroke-width=\"1.5\"/>\n",
                coords.join(" ")
            ));
        }
        let ly = MARGIN_TOP + 12.0 + 20.0 * i as f64;
        let lx = WIDTH - MARGIN_RIGHT + 16.0;
        s.push_str(&format!(
            "<rect x=\"{lx:.2}\" y=\"{:.2}\" width=\"14\" height=\"14\" fill=\"{color}\"/>\n",
            ly - 11.0
        ));
        s.push_str(&format!(
            "<text x=\"{:.2}\" y=\"{ly:.2}\" font-size=\"12\">{}</text>\n",
            lx + 20.0,
            escape(label)
        ));
    }

    s.push_str("</svg>\n");
    s
}

// ─────────────────────────────── Tests ───────────────────────────────
