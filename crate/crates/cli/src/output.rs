//! CSV tables, SVG line charts and the PASS/FAIL summary.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Serialize;

/// One checked claim with the numbers it was judged on.
#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub criterion: String,
    pub description: String,
    pub value: f64,
    pub tolerance: f64,
    /// Grid spacing, when the check involves a discretized operator.
    pub h: Option<f64>,
    pub pass: bool,
}

impl Check {
    pub fn new(criterion: &str, description: impl Into<String>, value: f64, tolerance: f64, h: Option<f64>, pass: bool) -> Check {
        Check { criterion: criterion.into(), description: description.into(), value, tolerance, h, pass }
    }

    pub fn line(&self) -> String {
        let h = self.h.map(|h| format!(" h={h:e}")).unwrap_or_default();
        format!(
            "{} criterion {}: {} (value {:e}, tol {:e}{h})",
            if self.pass { "PASS" } else { "FAIL" },
            self.criterion,
            self.description,
            self.value,
            self.tolerance
        )
    }
}

/// Collects artifacts and checks of one run.
#[derive(Debug, Default)]
pub struct Report {
    pub out: PathBuf,
    pub checks: Vec<Check>,
    pub files: Vec<PathBuf>,
}

impl Report {
    pub fn new(out: &Path) -> Result<Report> {
        fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
        Ok(Report { out: out.to_path_buf(), ..Report::default() })
    }

    pub fn check(&mut self, check: Check) {
        self.checks.push(check);
    }

    pub fn all_pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn table(&mut self, name: &str, headers: &[&str], rows: &[Vec<f64>]) -> Result<()> {
        let path = self.out.join(format!("{name}.csv"));
        let mut writer = csv::Writer::from_path(&path).with_context(|| format!("writing {}", path.display()))?;
        writer.write_record(headers)?;
        for row in rows {
            writer.write_record(row.iter().map(|v| v.to_string()))?;
        }
        writer.flush()?;
        self.files.push(path);
        Ok(())
    }

    pub fn text(&mut self, name: &str, contents: &str) -> Result<()> {
        let path = self.out.join(name);
        fs::write(&path, contents).with_context(|| format!("writing {}", path.display()))?;
        self.files.push(path);
        Ok(())
    }

    /// Writes `name.svg` and its CSV twin `name.csv` (columns: series, x, y).
    pub fn chart(&mut self, name: &str, chart: &Chart) -> Result<()> {
        self.text(&format!("{name}.svg"), &chart.to_svg())?;
        let path = self.out.join(format!("{name}.csv"));
        let mut writer = csv::Writer::from_path(&path)?;
        writer.write_record(["series", chart.x_label.as_str(), chart.y_label.as_str()])?;
        for series in &chart.series {
            for &(x, y) in &series.points {
                writer.write_record([series.name.clone(), x.to_string(), y.to_string()])?;
            }
        }
        writer.flush()?;
        self.files.push(path);
        Ok(())
    }

    /// Writes `summary.csv` and `summary.txt` and returns the summary text.
    pub fn finish(&mut self) -> Result<String> {
        let path = self.out.join("summary.csv");
        let mut writer = csv::Writer::from_path(&path)?;
        for check in &self.checks {
            writer.serialize(check)?;
        }
        writer.flush()?;
        self.files.push(path);
        let mut text: String = self.checks.iter().map(|c| c.line() + "\n").collect();
        let passed = self.checks.iter().filter(|c| c.pass).count();
        let _ = writeln!(text, "{passed} of {} checks passed", self.checks.len());
        self.text("summary.txt", &text)?;
        Ok(text)
    }
}

#[derive(Debug, Clone)]
pub struct Series {
    pub name: String,
    pub points: Vec<(f64, f64)>,
    /// Draw markers only.
    pub scatter: bool,
}

impl Series {
    pub fn line(name: &str, points: Vec<(f64, f64)>) -> Series {
        Series { name: name.into(), points, scatter: false }
    }

    pub fn scatter(name: &str, points: Vec<(f64, f64)>) -> Series {
        Series { name: name.into(), points, scatter: true }
    }
}

#[derive(Debug, Clone)]
pub struct Chart {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub series: Vec<Series>,
}

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 440.0;
const MARGIN: [f64; 4] = [70.0, 20.0, 40.0, 55.0]; // left, right, top, bottom
const COLORS: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];

fn nice_range(lo: f64, hi: f64) -> (f64, f64) {
    if !(lo.is_finite() && hi.is_finite()) {
        return (0.0, 1.0);
    }
    if (hi - lo).abs() <= 1e-12 * lo.abs().max(1e-300) {
        let pad = lo.abs().max(1.0) * 0.05;
        return (lo - pad, hi + pad);
    }
    let pad = 0.05 * (hi - lo);
    (lo - pad, hi + pad)
}

impl Chart {
    pub fn new(title: &str, x_label: &str, y_label: &str, series: Vec<Series>) -> Chart {
        Chart { title: title.into(), x_label: x_label.into(), y_label: y_label.into(), series }
    }

    pub fn to_svg(&self) -> String {
        let finite = |v: &f64| v.is_finite();
        let xs: Vec<f64> = self.series.iter().flat_map(|s| s.points.iter().map(|p| p.0)).filter(finite).collect();
        let ys: Vec<f64> = self.series.iter().flat_map(|s| s.points.iter().map(|p| p.1)).filter(finite).collect();
        let (x0, x1) = nice_range(xs.iter().copied().fold(f64::INFINITY, f64::min), xs.iter().copied().fold(f64::NEG_INFINITY, f64::max));
        let (y0, y1) = nice_range(ys.iter().copied().fold(f64::INFINITY, f64::min), ys.iter().copied().fold(f64::NEG_INFINITY, f64::max));
        let [left, right, top, bottom] = MARGIN;
        let (pw, ph) = (WIDTH - left - right, HEIGHT - top - bottom);
        let px = |x: f64| left + (x - x0) / (x1 - x0) * pw;
        let py = |y: f64| top + (1.0 - (y - y0) / (y1 - y0)) * ph;

        let mut svg = String::new();
        let _ = writeln!(svg, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" font-family="sans-serif" font-size="12">"#);
        let _ = writeln!(svg, r#"<rect width="100%" height="100%" fill="white"/>"#);
        let _ = writeln!(svg, r#"<text x="{}" y="22" text-anchor="middle" font-size="14">{}</text>"#, WIDTH / 2.0, escape(&self.title));
        let _ = writeln!(svg, r#"<rect x="{left}" y="{top}" width="{pw}" height="{ph}" fill="none" stroke="black"/>"#);
        for i in 0..=4 {
            let f = i as f64 / 4.0;
            let (xv, yv) = (x0 + f * (x1 - x0), y0 + f * (y1 - y0));
            let _ = writeln!(svg, r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{}</text>"#, px(xv), top + ph + 16.0, tick(xv));
            let _ = writeln!(svg, r#"<text x="{:.1}" y="{:.1}" text-anchor="end">{}</text>"#, left - 6.0, py(yv) + 4.0, tick(yv));
            let _ = writeln!(svg, r##"<line x1="{left}" x2="{:.1}" y1="{:.1}" y2="{:.1}" stroke="#ddd"/>"##, left + pw, py(yv), py(yv));
        }
        let _ = writeln!(svg, r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#, left + pw / 2.0, HEIGHT - 12.0, escape(&self.x_label));
        let _ = writeln!(
            svg,
            r#"<text x="16" y="{}" text-anchor="middle" transform="rotate(-90 16 {})">{}</text>"#,
            top + ph / 2.0,
            top + ph / 2.0,
            escape(&self.y_label)
        );
        for (k, series) in self.series.iter().enumerate() {
            let color = COLORS[k % COLORS.len()];
            let pts: Vec<(f64, f64)> = series.points.iter().copied().filter(|p| p.0.is_finite() && p.1.is_finite()).collect();
            if series.scatter {
                for (x, y) in &pts {
                    let _ = writeln!(svg, r#"<circle cx="{:.2}" cy="{:.2}" r="3" fill="{color}"/>"#, px(*x), py(*y));
                }
            } else {
                let path: Vec<String> = pts.iter().map(|(x, y)| format!("{:.2},{:.2}", px(*x), py(*y))).collect();
                let _ = writeln!(svg, r#"<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{}"/>"#, path.join(" "));
            }
            let ly = top + 14.0 + 16.0 * k as f64;
            let _ = writeln!(svg, r#"<rect x="{:.1}" y="{:.1}" width="10" height="10" fill="{color}"/>"#, left + pw - 150.0, ly - 9.0);
            let _ = writeln!(svg, r#"<text x="{:.1}" y="{ly:.1}">{}</text>"#, left + pw - 135.0, escape(&series.name));
        }
        svg.push_str("</svg>\n");
        svg
    }
}

fn tick(v: f64) -> String {
    if v != 0.0 && (v.abs() >= 1e4 || v.abs() < 1e-2) {
        format!("{v:.2e}")
    } else {
        format!("{v:.3}")
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}
