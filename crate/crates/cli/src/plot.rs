//! Hand-written SVG figures. Output depends only on the input numbers, so
//! repeated runs produce identical bytes.

use std::fmt::Write;
use std::path::Path;

use smirl_core::StepRecord;

use crate::CliError;

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 400.0;
const MARGIN_L: f64 = 70.0;
const MARGIN_R: f64 = 150.0;
const MARGIN_T: f64 = 40.0;
const MARGIN_B: f64 = 50.0;
const PALETTE: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf",
];

/// One curve: binned mean with a ±1 std band.
#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub label: String,
    /// Series key written to `data-alpha`.
    pub key: String,
    pub x: Vec<f64>,
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

struct Scale {
    lo: f64,
    hi: f64,
    px_lo: f64,
    px_hi: f64,
}

impl Scale {
    fn new(lo: f64, hi: f64, px_lo: f64, px_hi: f64) -> Self {
        let (lo, hi) = if hi > lo { (lo, hi) } else { (lo - 0.5, lo + 0.5) };
        Self { lo, hi, px_lo, px_hi }
    }

    fn map(&self, v: f64) -> f64 {
        self.px_lo + (v - self.lo) / (self.hi - self.lo) * (self.px_hi - self.px_lo)
    }

    fn ticks(&self, n: usize) -> Vec<f64> {
        (0..=n)
            .map(|i| self.lo + (self.hi - self.lo) * i as f64 / n as f64)
            .collect()
    }
}

fn header(out: &mut String, w: f64, h: f64) {
    writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}" font-family="sans-serif" font-size="12">"#
    )
    .unwrap();
    writeln!(out, r#"<rect width="{w}" height="{h}" fill="white"/>"#).unwrap();
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

fn axes(out: &mut String, xs: &Scale, ys: &Scale, x_label: &str, y_label: &str) {
    let (x0, x1) = (xs.px_lo, xs.px_hi);
    let (y0, y1) = (ys.px_lo, ys.px_hi);
    writeln!(
        out,
        r#"<path d="M{x0:.2},{y1:.2} L{x0:.2},{y0:.2} L{x1:.2},{y0:.2}" fill="none" stroke="black"/>"#
    )
    .unwrap();
    for t in xs.ticks(4) {
        let px = xs.map(t);
        writeln!(
            out,
            r#"<text x="{px:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
            y0 + 16.0,
            tick_label(t)
        )
        .unwrap();
    }
    for t in ys.ticks(4) {
        let py = ys.map(t);
        writeln!(
            out,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"#,
            x0 - 6.0,
            py + 4.0,
            tick_label(t)
        )
        .unwrap();
    }
    writeln!(
        out,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
        (x0 + x1) / 2.0,
        y0 + 36.0,
        escape(x_label)
    )
    .unwrap();
    writeln!(
        out,
        r#"<text transform="translate({:.2},{:.2}) rotate(-90)" text-anchor="middle">{}</text>"#,
        x0 - 50.0,
        (y0 + y1) / 2.0,
        escape(y_label)
    )
    .unwrap();
}

fn tick_label(v: f64) -> String {
    if v.abs() >= 1000.0 {
        format!("{v:.0}")
    } else {
        format!("{v:.2}")
    }
}

/// A single panel of binned curves, one per series, with shaded ±1 std bands.
pub fn line_panel(title: &str, x_label: &str, y_label: &str, series: &[Series]) -> String {
    let points = || {
        series
            .iter()
            .flat_map(|s| s.x.iter().zip(&s.mean).zip(&s.std))
            .filter(|((x, m), sd)| x.is_finite() && m.is_finite() && sd.is_finite())
    };
    let x_lo = points().map(|((x, _), _)| *x).fold(f64::INFINITY, f64::min);
    let x_hi = points().map(|((x, _), _)| *x).fold(f64::NEG_INFINITY, f64::max);
    let y_lo = points().map(|((_, m), sd)| m - sd).fold(f64::INFINITY, f64::min);
    let y_hi = points()
        .map(|((_, m), sd)| m + sd)
        .fold(f64::NEG_INFINITY, f64::max);
    let (x_lo, x_hi, y_lo, y_hi) = if x_lo.is_finite() {
        (x_lo, x_hi, y_lo, y_hi)
    } else {
        (0.0, 1.0, 0.0, 1.0)
    };
    let xs = Scale::new(x_lo, x_hi, MARGIN_L, WIDTH - MARGIN_R);
    let ys = Scale::new(y_lo, y_hi, HEIGHT - MARGIN_B, MARGIN_T);

    let mut out = String::new();
    header(&mut out, WIDTH, HEIGHT);
    writeln!(
        out,
        r#"<text x="{:.2}" y="22" text-anchor="middle" font-size="14">{}</text>"#,
        WIDTH / 2.0 - (MARGIN_R - MARGIN_L) / 2.0,
        escape(title)
    )
    .unwrap();
    axes(&mut out, &xs, &ys, x_label, y_label);

    for (k, s) in series.iter().enumerate() {
        let color = PALETTE[k % PALETTE.len()];
        let pts: Vec<(f64, f64, f64)> =
            s.x.iter()
                .zip(&s.mean)
                .zip(&s.std)
                .filter(|((x, m), sd)| x.is_finite() && m.is_finite() && sd.is_finite())
                .map(|((x, m), sd)| (*x, *m, *sd))
                .collect();
        writeln!(out, r#"<g class="curve" data-alpha="{}">"#, escape(&s.key)).unwrap();
        if !pts.is_empty() {
            let mut band = String::new();
            for (x, m, sd) in &pts {
                write!(band, "{:.2},{:.2} ", xs.map(*x), ys.map(m + sd)).unwrap();
            }
            for (x, m, sd) in pts.iter().rev() {
                write!(band, "{:.2},{:.2} ", xs.map(*x), ys.map(m - sd)).unwrap();
            }
            writeln!(
                out,
                r#"<polygon class="band" points="{}" fill="{color}" fill-opacity="0.2" stroke="none"/>"#,
                band.trim_end()
            )
            .unwrap();
            let line: Vec<String> = pts
                .iter()
                .map(|(x, m, _)| format!("{:.2},{:.2}", xs.map(*x), ys.map(*m)))
                .collect();
            writeln!(
                out,
                r#"<polyline class="mean" points="{}" fill="none" stroke="{color}" stroke-width="1.5"/>"#,
                line.join(" ")
            )
            .unwrap();
        }
        let ly = MARGIN_T + 10.0 + 20.0 * k as f64;
        let lx = WIDTH - MARGIN_R + 15.0;
        writeln!(
            out,
            r#"<line x1="{lx:.2}" y1="{ly:.2}" x2="{:.2}" y2="{ly:.2}" stroke="{color}" stroke-width="3"/><text x="{:.2}" y="{:.2}">{}</text>"#,
            lx + 20.0,
            lx + 26.0,
            ly + 4.0,
            escape(&s.label)
        )
        .unwrap();
        writeln!(out, "</g>").unwrap();
    }
    out.push_str("</svg>\n");
    out
}

/// Demand at selected days, one panel per day, grouped bars per hour for every
/// run with the grid price drawn over them on its own axis.
///
/// Each bar carries the plotted value verbatim in `data-value`.
pub fn consumption_panels(
    runs: &[(String, Vec<StepRecord>)],
    steps: &[u64],
    grid: &[f64],
) -> Result<String, CliError> {
    let mut picked: Vec<Vec<&StepRecord>> = Vec::with_capacity(steps.len());
    for &step in steps {
        let mut row = Vec::with_capacity(runs.len());
        for (name, records) in runs {
            let rec = records.iter().find(|r| r.step == step).ok_or_else(|| {
                let range = match (records.first(), records.last()) {
                    (Some(a), Some(b)) => format!("{}..={}", a.step, b.step),
                    _ => "none".to_string(),
                };
                CliError::Data(format!(
                    "step {step} not present in {name} (available steps: {range})"
                ))
            })?;
            row.push(rec);
        }
        picked.push(row);
    }
    if steps.is_empty() {
        return Err(CliError::Data("no steps requested".into()));
    }

    let hours = grid.len();
    let panel_w = 420.0;
    let panel_h = 300.0;
    let (left, right, top, bottom) = (60.0, 60.0, 40.0, 50.0);
    let legend_h = 20.0 * runs.len() as f64 + 30.0;
    let total_w = panel_w * steps.len() as f64;
    let total_h = panel_h + legend_h;
    let d_hi = picked
        .iter()
        .flatten()
        .flat_map(|r| r.demand.iter())
        .fold(0.0f64, |a, b| a.max(*b))
        .max(1e-9);
    let g_hi = grid.iter().fold(0.0f64, |a, b| a.max(*b)).max(1e-9);

    let mut out = String::new();
    header(&mut out, total_w, total_h);
    for (k, (step, row)) in steps.iter().zip(&picked).enumerate() {
        let ox = panel_w * k as f64;
        let xs = Scale::new(0.0, hours as f64, ox + left, ox + panel_w - right);
        let ys = Scale::new(0.0, d_hi * 1.05, panel_h - bottom, top);
        let gs = Scale::new(0.0, g_hi * 1.05, panel_h - bottom, top);
        writeln!(out, r#"<g class="panel" data-step="{step}">"#).unwrap();
        writeln!(
            out,
            r#"<text x="{:.2}" y="22" text-anchor="middle" font-size="14">Day {step}</text>"#,
            ox + panel_w / 2.0
        )
        .unwrap();
        axes(&mut out, &xs, &ys, "hour", "demand (kWh)");
        let slot = (xs.px_hi - xs.px_lo) / hours as f64;
        let bar_w = slot * 0.8 / row.len() as f64;
        for (j, rec) in row.iter().enumerate() {
            let color = PALETTE[j % PALETTE.len()];
            for (h, d) in rec.demand.iter().enumerate() {
                let x = xs.map(h as f64) + slot * 0.1 + bar_w * j as f64;
                let y = ys.map(*d);
                writeln!(
                    out,
                    r#"<rect class="bar" data-run="{}" data-hour="{}" data-value="{d}" x="{x:.2}" y="{y:.2}" width="{bar_w:.2}" height="{:.2}" fill="{color}"/>"#,
                    escape(&runs[j].0),
                    h + 1,
                    ys.px_lo - y
                )
                .unwrap();
            }
        }
        let line: Vec<String> = grid
            .iter()
            .enumerate()
            .map(|(h, g)| format!("{:.2},{:.2}", xs.map(h as f64 + 0.5), gs.map(*g)))
            .collect();
        writeln!(
            out,
            r#"<polyline class="grid-price" points="{}" fill="none" stroke="black" stroke-dasharray="4 3" stroke-width="1.5"/>"#,
            line.join(" ")
        )
        .unwrap();
        for (h, g) in grid.iter().enumerate() {
            writeln!(
                out,
                r#"<circle class="grid-point" data-hour="{}" data-value="{g}" cx="{:.2}" cy="{:.2}" r="2.5"/>"#,
                h + 1,
                xs.map(h as f64 + 0.5),
                gs.map(*g)
            )
            .unwrap();
        }
        for t in gs.ticks(4) {
            writeln!(
                out,
                r#"<text x="{:.2}" y="{:.2}">{}</text>"#,
                xs.px_hi + 6.0,
                gs.map(t) + 4.0,
                tick_label(t)
            )
            .unwrap();
        }
        writeln!(
            out,
            r#"<text transform="translate({:.2},{:.2}) rotate(90)" text-anchor="middle">grid price ($/kWh)</text>"#,
            xs.px_hi + 48.0,
            (ys.px_lo + ys.px_hi) / 2.0
        )
        .unwrap();
        writeln!(out, "</g>").unwrap();
    }
    for (j, (name, _)) in runs.iter().enumerate() {
        let y = panel_h + 15.0 + 20.0 * j as f64;
        writeln!(
            out,
            r#"<rect x="{left:.2}" y="{:.2}" width="14" height="10" fill="{}"/><text x="{:.2}" y="{y:.2}">{}</text>"#,
            y - 9.0,
            PALETTE[j % PALETTE.len()],
            left + 20.0,
            escape(name)
        )
        .unwrap();
    }
    let y = panel_h + 15.0 + 20.0 * runs.len() as f64;
    writeln!(
        out,
        r#"<line x1="{left:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="black" stroke-dasharray="4 3"/><text x="{:.2}" y="{y:.2}">grid price</text>"#,
        y - 4.0,
        left + 14.0,
        y - 4.0,
        left + 20.0
    )
    .unwrap();
    out.push_str("</svg>\n");
    Ok(out)
}

pub fn write_svg(path: &Path, svg: &str) -> Result<(), CliError> {
    std::fs::write(path, svg).map_err(|e| CliError::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(step: u64, scale: f64) -> StepRecord {
        StepRecord {
            step,
            seed: 0,
            alpha: 0.0,
            r_energy: 0.0,
            r_smirl: 0.0,
            r_combined: 0.0,
            sample_entropy: f64::NAN,
            prices: vec![1.0; 10],
            demand: (0..10).map(|h| scale * (h as f64 + 0.125)).collect(),
        }
    }

    #[test]
    fn one_curve_per_series() {
        let s = |key: &str| Series {
            label: format!("α = {key}"),
            key: key.into(),
            x: vec![100.0, 200.0, 300.0],
            mean: vec![0.1, f64::NAN, 0.3],
            std: vec![0.01, 0.02, 0.03],
        };
        let svg = line_panel("t", "x", "y", &[s("0"), s("0.12")]);
        assert_eq!(svg.matches(r#"class="curve""#).count(), 2);
        assert_eq!(svg.matches(r#"class="band""#).count(), 2);
        assert!(svg.contains(r#"data-alpha="0.12""#));
        assert!(!svg.contains("NaN"));
        assert_eq!(svg, line_panel("t", "x", "y", &[s("0"), s("0.12")]));
    }

    #[test]
    fn empty_panel_is_still_valid() {
        let svg = line_panel("t", "x", "y", &[]);
        assert!(svg.starts_with("<svg") && svg.ends_with("</svg>\n"));
    }

    #[test]
    fn bars_carry_csv_values() {
        let runs = vec![("a".to_string(), (0..5).map(|s| rec(s, 0.3)).collect::<Vec<_>>())];
        let svg = consumption_panels(&runs, &[2, 4], &[0.1; 10]).unwrap();
        assert_eq!(svg.matches(r#"class="panel""#).count(), 2);
        assert_eq!(svg.matches(r#"class="bar""#).count(), 20);
        let want = format!(r#"data-value="{}""#, 0.3 * 9.125);
        assert!(svg.contains(&want));
    }

    #[test]
    fn missing_step_lists_range() {
        let runs = vec![("a".to_string(), (0..5).map(|s| rec(s, 1.0)).collect::<Vec<_>>())];
        let err = consumption_panels(&runs, &[9], &[0.1; 10]).unwrap_err();
        assert!(err.to_string().contains("0..=4"), "{err}");
    }
}
