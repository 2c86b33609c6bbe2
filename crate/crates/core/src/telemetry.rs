//! CSV telemetry and static SVG plots.
//!
//! Columns: `t`, then for each follower `i` (1-based) `px_i, py_i, rx_i,
//! ry_i, z_i, delta_i, e_rho_i, e_delta_i, est_err_i, ux_i, uy_i`, then
//! `lapx, lapy, V1, V2`. Values use 9 significant digits in scientific
//! notation. Plots are rendered from a parsed CSV table only, so
//! regenerating them from a saved file gives identical output.

use std::fmt::Write as _;

use crate::analysis::{RunLog, Sample};
use crate::error::{Error, Result};

const PER_FOLLOWER: [&str; 11] = ["px", "py", "rx", "ry", "z", "delta", "e_rho", "e_delta", "est_err", "ux", "uy"];

pub fn csv_header(follower_count: usize) -> Vec<String> {
    let mut cols = vec!["t".to_owned()];
    for i in 1..=follower_count {
        cols.extend(PER_FOLLOWER.iter().map(|c| format!("{c}_{i}")));
    }
    cols.extend(["lapx", "lapy", "V1", "V2"].map(String::from));
    cols
}

fn row(sample: &Sample) -> Vec<f64> {
    let mut out = vec![sample.t];
    for i in 0..sample.followers.len() {
        out.extend([
            sample.followers[i].x,
            sample.followers[i].y,
            sample.r[i].x,
            sample.r[i].y,
            sample.z[i],
            sample.delta[i],
            sample.e_rho[i],
            sample.e_delta[i],
            sample.est_err[i],
            sample.u[i].x,
            sample.u[i].y,
        ]);
    }
    out.extend([sample.lap.x, sample.lap.y, sample.v1, sample.v2]);
    out
}

pub fn format_value(x: f64) -> String {
    format!("{x:.8e}")
}

pub fn to_csv(log: &RunLog) -> String {
    let mut out = csv_header(log.follower_count).join(",");
    out.push('\n');
    for sample in &log.samples {
        let cells: Vec<String> = row(sample).into_iter().map(format_value).collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}

/// Column-major numeric table parsed from telemetry CSV.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub names: Vec<String>,
    pub columns: Vec<Vec<f64>>,
}

impl Table {
    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        let names: Vec<String> = lines
            .next()
            .ok_or_else(|| Error::Parse("empty CSV".into()))?
            .split(',')
            .map(str::to_owned)
            .collect();
        let mut columns = vec![Vec::new(); names.len()];
        for (k, line) in lines.enumerate().filter(|(_, l)| !l.is_empty()) {
            let cells: Vec<&str> = line.split(',').collect();
            if cells.len() != names.len() {
                return Err(Error::Parse(format!("row {} has {} cells, expected {}", k + 1, cells.len(), names.len())));
            }
            for (col, cell) in columns.iter_mut().zip(cells) {
                col.push(cell.parse().map_err(|_| Error::Parse(format!("row {}: bad number {cell:?}", k + 1)))?);
            }
        }
        Ok(Self { names, columns })
    }

    pub fn column(&self, name: &str) -> Option<&[f64]> {
        self.names.iter().position(|n| n == name).map(|i| self.columns[i].as_slice())
    }

    pub fn rows(&self) -> usize {
        self.columns.first().map_or(0, Vec::len)
    }

    /// Number of followers implied by the `px_i` columns.
    pub fn follower_count(&self) -> usize {
        self.names.iter().filter(|n| n.starts_with("px_")).count()
    }
}

const PALETTE: [&str; 8] = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf"];
const MAX_POINTS: usize = 2000;

struct Series<'a> {
    label: String,
    xs: &'a [f64],
    ys: &'a [f64],
}

struct Panel<'a> {
    title: String,
    x_label: &'a str,
    series: Vec<Series<'a>>,
    equal_aspect: bool,
}

fn extent(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = values.filter(|v| v.is_finite()).fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
    if !lo.is_finite() {
        return (0.0, 1.0);
    }
    if hi - lo < 1e-12 {
        (lo - 0.5, hi + 0.5)
    } else {
        (lo, hi)
    }
}

fn render(panels: &[Panel]) -> String {
    let width = 900.0;
    let panel_h = 300.0;
    let (ml, mr, mt, mb) = (80.0, 150.0, 30.0, 40.0);
    let height = panel_h * panels.len() as f64;
    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(svg, r#"<rect width="100%" height="100%" fill="white"/>"#);
    for (k, panel) in panels.iter().enumerate() {
        let top = k as f64 * panel_h;
        let (x0, y0) = (ml, top + mt);
        let (w, h) = (width - ml - mr, panel_h - mt - mb);
        let (mut xmin, mut xmax) = extent(panel.series.iter().flat_map(|s| s.xs.iter().copied()));
        let (mut ymin, mut ymax) = extent(panel.series.iter().flat_map(|s| s.ys.iter().copied()));
        if panel.equal_aspect {
            let scale = ((xmax - xmin) / w).max((ymax - ymin) / h);
            let (cx, cy) = ((xmin + xmax) / 2.0, (ymin + ymax) / 2.0);
            xmin = cx - scale * w / 2.0;
            xmax = cx + scale * w / 2.0;
            ymin = cy - scale * h / 2.0;
            ymax = cy + scale * h / 2.0;
        }
        let px = |x: f64| x0 + (x - xmin) / (xmax - xmin) * w;
        let py = |y: f64| y0 + h - (y - ymin) / (ymax - ymin) * h;
        let _ = writeln!(svg, r##"<rect x="{x0}" y="{y0}" width="{w}" height="{h}" fill="none" stroke="#444"/>"##);
        let _ = writeln!(svg, r#"<text x="{}" y="{}" text-anchor="middle" font-weight="bold">{}</text>"#, x0 + w / 2.0, top + 18.0, panel.title);
        let _ = writeln!(svg, r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#, x0 + w / 2.0, y0 + h + 32.0, panel.x_label);
        for (v, anchor, x, y) in [
            (xmin, "start", x0, y0 + h + 16.0),
            (xmax, "end", x0 + w, y0 + h + 16.0),
        ] {
            let _ = writeln!(svg, r#"<text x="{x}" y="{y}" text-anchor="{anchor}">{v:.3}</text>"#);
        }
        for (v, y) in [(ymin, y0 + h), (ymax, y0 + 10.0)] {
            let _ = writeln!(svg, r#"<text x="{}" y="{y}" text-anchor="end">{v:.4}</text>"#, x0 - 6.0);
        }
        if ymin < 0.0 && ymax > 0.0 {
            let _ = writeln!(svg, r##"<line x1="{x0}" y1="{0}" x2="{1}" y2="{0}" stroke="#bbb" stroke-dasharray="4 3"/>"##, py(0.0), x0 + w);
        }
        for (j, s) in panel.series.iter().enumerate() {
            let color = PALETTE[j % PALETTE.len()];
            let step = s.xs.len().div_ceil(MAX_POINTS).max(1);
            let mut points = String::new();
            let last = s.xs.len().saturating_sub(1);
            for idx in (0..s.xs.len()).step_by(step).chain((last % step != 0).then_some(last)) {
                let _ = write!(points, "{:.2},{:.2} ", px(s.xs[idx]), py(s.ys[idx]));
            }
            let _ = writeln!(svg, r#"<polyline fill="none" stroke="{color}" stroke-width="1.2" points="{}"/>"#, points.trim_end());
            let ly = y0 + 14.0 + 16.0 * j as f64;
            let lx = x0 + w + 12.0;
            let _ = writeln!(svg, r#"<line x1="{lx}" y1="{ly}" x2="{}" y2="{ly}" stroke="{color}" stroke-width="2"/>"#, lx + 18.0);
            let _ = writeln!(svg, r#"<text x="{}" y="{}">{}</text>"#, lx + 24.0, ly + 4.0, s.label);
        }
    }
    svg.push_str("</svg>\n");
    svg
}

fn follower_panel<'a>(table: &'a Table, prefix: &str, title: &str) -> Result<Panel<'a>> {
    let t = table.column("t").ok_or_else(|| Error::Parse("missing column t".into()))?;
    let series = (1..=table.follower_count())
        .map(|i| {
            let name = format!("{prefix}_{i}");
            table
                .column(&name)
                .map(|ys| Series { label: name.clone(), xs: t, ys })
                .ok_or_else(|| Error::Parse(format!("missing column {name}")))
        })
        .collect::<Result<_>>()?;
    Ok(Panel { title: title.to_owned(), x_label: "t (s)", series, equal_aspect: false })
}

/// Renders `(file name, svg)` pairs from a telemetry table.
pub fn render_plots(table: &Table) -> Result<Vec<(&'static str, String)>> {
    let errors = render(&[
        follower_panel(table, "z", "estimated radial error z")?,
        follower_panel(table, "delta", "estimated spacing error delta")?,
        follower_panel(table, "e_rho", "real radial error e_rho")?,
        follower_panel(table, "e_delta", "real spacing error e_delta")?,
    ]);
    let estimator = render(&[follower_panel(table, "est_err", "estimator error |r_i - LAP|")?]);
    let controls = render(&[
        follower_panel(table, "ux", "control input u_x")?,
        follower_panel(table, "uy", "control input u_y")?,
    ]);

    let mut paths = Vec::new();
    for i in 1..=table.follower_count() {
        let (xs, ys) = (format!("px_{i}"), format!("py_{i}"));
        if let (Some(xs), Some(ys)) = (table.column(&xs), table.column(&ys)) {
            paths.push(Series { label: format!("F{i}"), xs, ys });
        }
    }
    if let (Some(xs), Some(ys)) = (table.column("lapx"), table.column("lapy")) {
        paths.push(Series { label: "LAP".into(), xs, ys });
    }
    let trajectory = render(&[Panel { title: "trajectories".into(), x_label: "x (m)", series: paths, equal_aspect: true }]);

    Ok(vec![
        ("errors.svg", errors),
        ("estimator_error.svg", estimator),
        ("controls.svg", controls),
        ("trajectory.svg", trajectory),
    ])
}
