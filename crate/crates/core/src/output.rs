//! CSV and SVG emission.

use std::fmt::Write as _;
use std::path::Path;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum OutputError {
    #[error("nothing to write: {0}")]
    Empty(String),
    #[error("column '{name}' has {len} values, expected {expected}")]
    Ragged { name: String, len: usize, expected: usize },
    #[error("cannot write {path}: {message}")]
    Io { path: String, message: String },
}

fn io_err(path: &Path, e: impl ToString) -> OutputError {
    OutputError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    }
}

/// A named numeric column.
#[derive(Debug, Clone)]
pub struct Column {
    pub name: String,
    pub values: Vec<f64>,
}

impl Column {
    pub fn new(name: impl Into<String>, values: Vec<f64>) -> Self {
        Column {
            name: name.into(),
            values,
        }
    }
}

/// Shortest decimal that parses back to the same `f64`.
pub fn format_real(v: f64) -> String {
    format!("{v}")
}

/// Writes equal-length columns as CSV with a header row.
pub fn emit_csv(columns: &[Column], path: &Path) -> Result<(), OutputError> {
    let Some(first) = columns.first() else {
        return Err(OutputError::Empty("no columns".into()));
    };
    let rows = first.values.len();
    if rows == 0 {
        return Err(OutputError::Empty(format!("column '{}' is empty", first.name)));
    }
    for c in columns {
        if c.values.len() != rows {
            return Err(OutputError::Ragged {
                name: c.name.clone(),
                len: c.values.len(),
                expected: rows,
            });
        }
    }
    let headers: Vec<String> = columns.iter().map(|c| c.name.clone()).collect();
    let body: Vec<Vec<String>> = (0..rows)
        .map(|k| columns.iter().map(|c| format_real(c.values[k])).collect())
        .collect();
    emit_table(&headers, &body, path)
}

/// Writes a CSV table of preformatted cells.
pub fn emit_table(headers: &[String], rows: &[Vec<String>], path: &Path) -> Result<(), OutputError> {
    if headers.is_empty() || rows.is_empty() {
        return Err(OutputError::Empty("table has no rows".into()));
    }
    if let Some(bad) = rows.iter().find(|r| r.len() != headers.len()) {
        return Err(OutputError::Ragged {
            name: "row".into(),
            len: bad.len(),
            expected: headers.len(),
        });
    }
    let mut w = csv::Writer::from_path(path).map_err(|e| io_err(path, e))?;
    w.write_record(headers).map_err(|e| io_err(path, e))?;
    for r in rows {
        w.write_record(r).map_err(|e| io_err(path, e))?;
    }
    w.flush().map_err(|e| io_err(path, e))
}

#[derive(Debug, Clone)]
pub struct Curve {
    pub label: String,
    pub xs: Vec<f64>,
    pub ys: Vec<f64>,
}

impl Curve {
    pub fn new(label: impl Into<String>, xs: Vec<f64>, ys: Vec<f64>) -> Self {
        Curve {
            label: label.into(),
            xs,
            ys,
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct AxesSpec {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
}

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 480.0;
const PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"];
const DASHES: [&str; 3] = ["", "8 4", "8 3 2 3"];

fn style(k: usize) -> String {
    let dash = DASHES[k % DASHES.len()];
    let mut s = format!("fill=\"none\" stroke=\"{}\" stroke-width=\"1.5\"", PALETTE[k % PALETTE.len()]);
    if !dash.is_empty() {
        let _ = write!(s, " stroke-dasharray=\"{dash}\"");
    }
    s
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn legend(out: &mut String, labels: &[&str], x: f64, y: f64) {
    for (k, label) in labels.iter().enumerate() {
        let yy = y + 18.0 * k as f64;
        let _ = writeln!(
            out,
            "<line x1=\"{x}\" y1=\"{yy}\" x2=\"{}\" y2=\"{yy}\" {}/>",
            x + 28.0,
            style(k)
        );
        let _ = writeln!(
            out,
            "<text x=\"{}\" y=\"{}\" font-size=\"12\">{}</text>",
            x + 34.0,
            yy + 4.0,
            escape(label)
        );
    }
}

fn write_file(path: &Path, text: &str) -> Result<(), OutputError> {
    std::fs::write(path, text).map_err(|e| io_err(path, e))
}

/// Cartesian line plot. Non-finite points break the polyline.
pub fn emit_svg(curves: &[Curve], axes: &AxesSpec, path: &Path) -> Result<(), OutputError> {
    if curves.is_empty() || curves.iter().all(|c| c.xs.is_empty()) {
        return Err(OutputError::Empty("no curves".into()));
    }
    for c in curves {
        if c.xs.len() != c.ys.len() {
            return Err(OutputError::Ragged {
                name: c.label.clone(),
                len: c.ys.len(),
                expected: c.xs.len(),
            });
        }
    }
    let finite = |v: &f64| v.is_finite();
    let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for c in curves {
        for (x, y) in c.xs.iter().zip(&c.ys).filter(|(x, y)| finite(x) && finite(y)) {
            x0 = x0.min(*x);
            x1 = x1.max(*x);
            y0 = y0.min(*y);
            y1 = y1.max(*y);
        }
    }
    if !x0.is_finite() {
        return Err(OutputError::Empty("no finite points".into()));
    }
    if x1 == x0 {
        x1 = x0 + 1.0;
    }
    if y1 == y0 {
        y1 = y0 + 1.0;
    }
    let (left, right, top, bottom) = (70.0, WIDTH - 20.0, 40.0, HEIGHT - 50.0);
    let sx = |x: f64| left + (x - x0) / (x1 - x0) * (right - left);
    let sy = |y: f64| bottom - (y - y0) / (y1 - y0) * (bottom - top);

    let mut out = String::new();
    let _ = writeln!(
        out,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{HEIGHT}\" font-family=\"sans-serif\">"
    );
    let _ = writeln!(out, "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>");
    let _ = writeln!(
        out,
        "<text x=\"{}\" y=\"22\" font-size=\"15\" text-anchor=\"middle\">{}</text>",
        WIDTH / 2.0,
        escape(&axes.title)
    );
    let _ = writeln!(
        out,
        "<path d=\"M{left},{top} L{left},{bottom} L{right},{bottom}\" fill=\"none\" stroke=\"black\"/>"
    );
    for k in 0..=5 {
        let fx = x0 + (x1 - x0) * k as f64 / 5.0;
        let fy = y0 + (y1 - y0) * k as f64 / 5.0;
        let _ = writeln!(
            out,
            "<text x=\"{:.1}\" y=\"{}\" font-size=\"11\" text-anchor=\"middle\">{}</text>",
            sx(fx),
            bottom + 16.0,
            tick(fx)
        );
        let _ = writeln!(
            out,
            "<text x=\"{}\" y=\"{:.1}\" font-size=\"11\" text-anchor=\"end\">{}</text>",
            left - 6.0,
            sy(fy) + 4.0,
            tick(fy)
        );
    }
    let _ = writeln!(
        out,
        "<text x=\"{}\" y=\"{}\" font-size=\"13\" text-anchor=\"middle\">{}</text>",
        (left + right) / 2.0,
        HEIGHT - 12.0,
        escape(&axes.x_label)
    );
    let _ = writeln!(
        out,
        "<text x=\"16\" y=\"{}\" font-size=\"13\" text-anchor=\"middle\" transform=\"rotate(-90 16 {})\">{}</text>",
        (top + bottom) / 2.0,
        (top + bottom) / 2.0,
        escape(&axes.y_label)
    );
    for (k, c) in curves.iter().enumerate() {
        for run in finite_runs(&c.xs, &c.ys) {
            let pts: Vec<String> = run.iter().map(|&(x, y)| format!("{:.2},{:.2}", sx(x), sy(y))).collect();
            let _ = writeln!(out, "<polyline points=\"{}\" {}/>", pts.join(" "), style(k));
        }
    }
    let labels: Vec<&str> = curves.iter().map(|c| c.label.as_str()).collect();
    legend(&mut out, &labels, right - 150.0, top + 10.0);
    out.push_str("</svg>\n");
    write_file(path, &out)
}

fn tick(v: f64) -> String {
    if v != 0.0 && (v.abs() >= 1e4 || v.abs() < 1e-2) {
        format!("{v:.1e}")
    } else {
        format!("{v:.2}")
    }
}

fn finite_runs(xs: &[f64], ys: &[f64]) -> Vec<Vec<(f64, f64)>> {
    let mut runs = vec![Vec::new()];
    for (&x, &y) in xs.iter().zip(ys) {
        if x.is_finite() && y.is_finite() {
            runs.last_mut().unwrap().push((x, y));
        } else if !runs.last().unwrap().is_empty() {
            runs.push(Vec::new());
        }
    }
    runs.retain(|r| r.len() > 1);
    runs
}

/// A closed polar curve `r(φ)`.
#[derive(Debug, Clone)]
pub struct PolarCurve {
    pub label: String,
    pub angles: Vec<f64>,
    pub radii: Vec<f64>,
}

/// Polar plot of `ln r` against angle. The plotted radial coordinate is
/// `ln r - base`, where `base` sits just below the smallest `ln r`.
pub fn emit_polar_svg(curves: &[PolarCurve], title: &str, path: &Path) -> Result<(), OutputError> {
    if curves.is_empty() || curves.iter().all(|c| c.angles.is_empty()) {
        return Err(OutputError::Empty("no curves".into()));
    }
    for c in curves {
        if c.angles.len() != c.radii.len() {
            return Err(OutputError::Ragged {
                name: c.label.clone(),
                len: c.radii.len(),
                expected: c.angles.len(),
            });
        }
        if let Some(r) = c.radii.iter().find(|r| !(**r > 0.0 && r.is_finite())) {
            return Err(OutputError::Empty(format!(
                "curve '{}' has radius {r}; ln r needs positive finite radii",
                c.label
            )));
        }
    }
    let logs = curves.iter().flat_map(|c| c.radii.iter().map(|r| r.ln()));
    let (lo, hi) = logs.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
    let base = lo.floor() - 1.0;
    let outer = (hi - base).ceil().max(1.0);
    let (cx, cy) = (HEIGHT / 2.0, HEIGHT / 2.0 + 10.0);
    let scale = (HEIGHT / 2.0 - 40.0) / outer;

    let mut out = String::new();
    let _ = writeln!(
        out,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{HEIGHT}\" font-family=\"sans-serif\">"
    );
    let _ = writeln!(out, "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>");
    let _ = writeln!(
        out,
        "<text x=\"{}\" y=\"22\" font-size=\"15\" text-anchor=\"middle\">{}</text>",
        WIDTH / 2.0,
        escape(title)
    );
    for ring in 1..=outer as usize {
        let rr = ring as f64 * scale;
        let _ = writeln!(
            out,
            "<circle cx=\"{cx}\" cy=\"{cy}\" r=\"{rr:.2}\" fill=\"none\" stroke=\"#cccccc\"/>"
        );
        let _ = writeln!(
            out,
            "<text x=\"{:.2}\" y=\"{cy}\" font-size=\"10\" fill=\"#666666\">ln r = {}</text>",
            cx + rr + 2.0,
            base + ring as f64
        );
    }
    let reach = outer * scale;
    let _ = writeln!(
        out,
        "<path d=\"M{},{cy} L{},{cy} M{cx},{} L{cx},{}\" stroke=\"#999999\"/>",
        cx - reach,
        cx + reach,
        cy - reach,
        cy + reach
    );
    let _ = writeln!(
        out,
        "<text x=\"{}\" y=\"{}\" font-size=\"12\">angle (rad), radial axis: ln r</text>",
        cx + reach - 120.0,
        cy + reach + 16.0
    );
    for (k, c) in curves.iter().enumerate() {
        let mut pts: Vec<String> = c
            .angles
            .iter()
            .zip(&c.radii)
            .map(|(&a, &r)| {
                let rho = (r.ln() - base) * scale;
                format!("{:.2},{:.2}", cx + rho * a.cos(), cy - rho * a.sin())
            })
            .collect();
        if let Some(first) = pts.first().cloned() {
            pts.push(first);
        }
        let _ = writeln!(out, "<polyline points=\"{}\" {}/>", pts.join(" "), style(k));
    }
    let labels: Vec<&str> = curves.iter().map(|c| c.label.as_str()).collect();
    legend(&mut out, &labels, HEIGHT + 20.0, 60.0);
    out.push_str("</svg>\n");
    write_file(path, &out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_columns_three_rows() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("a.csv");
        emit_csv(
            &[Column::new("t", vec![0.0, 0.5, 1.0]), Column::new("y", vec![1.0, 0.1, 1.0 / 3.0])],
            &path,
        )
        .unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 4);
        assert_eq!(lines[0], "t,y");
        assert_eq!(lines[2], "0.5,0.1");
        let back: f64 = lines[3].split(',').nth(1).unwrap().parse().unwrap();
        assert_eq!(back, 1.0 / 3.0);
    }

    #[test]
    fn empty_and_ragged_are_errors() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("a.csv");
        assert!(matches!(emit_csv(&[], &path), Err(OutputError::Empty(_))));
        assert!(matches!(emit_csv(&[Column::new("t", vec![])], &path), Err(OutputError::Empty(_))));
        assert!(matches!(
            emit_csv(&[Column::new("t", vec![1.0]), Column::new("y", vec![1.0, 2.0])], &path),
            Err(OutputError::Ragged { .. })
        ));
        assert!(matches!(emit_svg(&[], &AxesSpec::default(), &path), Err(OutputError::Empty(_))));
    }

    #[test]
    fn unwritable_path() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("missing").join("a.csv");
        assert!(matches!(
            emit_csv(&[Column::new("t", vec![1.0])], &path),
            Err(OutputError::Io { .. })
        ));
    }

    #[test]
    fn polar_plot_uses_log_radius() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("r.svg");
        let angles: Vec<f64> = (0..8).map(|k| k as f64 * std::f64::consts::PI / 4.0).collect();
        let curve = PolarCurve {
            label: "boundary".into(),
            angles: angles.clone(),
            radii: vec![std::f64::consts::E; 8],
        };
        emit_polar_svg(&[curve], "region", &path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.contains("ln r = 1"));
        assert!(text.contains("<polyline"));
        assert!(text.contains("boundary"));
        let bad = PolarCurve {
            label: "bad".into(),
            angles,
            radii: vec![0.0; 8],
        };
        assert!(emit_polar_svg(&[bad], "region", &path).is_err());
    }

    #[test]
    fn line_plot_has_axes_and_legend() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.svg");
        let axes = AxesSpec {
            title: "norms".into(),
            x_label: "t".into(),
            y_label: "value".into(),
        };
        let xs = vec![0.0, 1.0, 2.0];
        emit_svg(
            &[
                Curve::new("|x|", xs.clone(), vec![1.0, 0.5, 0.25]),
                Curve::new("y", xs, vec![1.0, f64::INFINITY, 0.3]),
            ],
            &axes,
            &path,
        )
        .unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.contains("|x|") && text.contains(">t<") && text.contains("value"));
        assert_eq!(text.matches("<polyline").count(), 1);
    }
}
