//! CSV and SVG artifacts. Numbers are written with 17 significant digits so
//! that every `f64` round-trips exactly.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::Serialize;

use crate::driver::{Curve, SampleKind, SweepRow};
use crate::hessian::HessianKernel;
use crate::pencil::Lambda;
use crate::seminorm::SeminormKind;
use crate::tolerance::ToleranceConfig;

/// `{:.16e}`, with `+inf`, `-inf` and `nan` spelled out.
pub fn num(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else if x == f64::INFINITY {
        "+inf".into()
    } else if x == f64::NEG_INFINITY {
        "-inf".into()
    } else {
        format!("{x:.16e}")
    }
}

pub fn parse_num(s: &str) -> Option<f64> {
    s.trim().parse().ok()
}

fn lam(l: Lambda) -> String {
    num(l.to_f64())
}

/// Header lines shared by every artifact.
#[derive(Debug, Clone, Serialize)]
pub struct Metadata {
    pub tool: String,
    pub config: String,
    pub entries: Vec<(String, String)>,
}

impl Metadata {
    pub fn new(config: &str) -> Self {
        Self { tool: format!("objstab {}", env!("CARGO_PKG_VERSION")), config: config.to_string(), entries: vec![] }
    }

    pub fn with(mut self, key: &str, value: impl ToString) -> Self {
        self.entries.push((key.to_string(), value.to_string()));
        self
    }

    pub fn with_tolerances(self, t: &ToleranceConfig) -> Self {
        self.with("tolerances", serde_json::to_string(t).unwrap_or_default())
    }

    pub fn header(&self) -> String {
        let mut s = format!("# tool: {}\n# config: {}\n", self.tool, self.config);
        for (k, v) in &self.entries {
            let _ = writeln!(s, "# {k}: {v}");
        }
        s
    }
}

fn flag(kind: SampleKind, ambiguous: bool) -> String {
    let k = match kind {
        SampleKind::Grid => "grid",
        SampleKind::Refined => "refined",
        SampleKind::Trail => "trail",
        SampleKind::Singular => "singular",
    };
    if ambiguous {
        format!("{k}+ambiguous")
    } else {
        k.to_string()
    }
}

/// One row per `(ρ, k)`: `rho_id, k_1..k_{d2}, lambda_R, lambda_R00, rankB_R, rankB_R00, flags`.
/// Columns of a seminorm without a sample at that `k` are left empty.
pub fn curve_csv(curves: &[Curve], d2: usize, meta: &Metadata) -> String {
    type Cell = (String, String, String);
    let mut rows: BTreeMap<(String, Vec<u64>), [Option<Cell>; 2]> = BTreeMap::new();
    let mut order: Vec<String> = Vec::new();
    for c in curves {
        if !order.contains(&c.rep) {
            order.push(c.rep.clone());
        }
        let slot = match c.kind {
            SeminormKind::Full => 0,
            SeminormKind::ZeroZero => 1,
        };
        for s in &c.samples {
            let key = (c.rep.clone(), s.k.iter().map(|x| ordered_bits(*x)).collect());
            let cell = (lam(s.value), format!("{}", s.rank), flag(s.kind, s.ambiguous));
            rows.entry(key).or_insert([None, None])[slot] = Some(cell);
        }
    }
    let mut out = meta.header();
    let kcols: Vec<String> = (1..=d2).map(|i| format!("k{i}")).collect();
    let _ = writeln!(out, "rho_id,{}{}lambda_R,lambda_R00,rankB_R,rankB_R00,flags", kcols.join(","), if d2 > 0 { "," } else { "" });
    for rep in &order {
        for ((r, kb), cells) in rows.iter().filter(|((r, _), _)| r == rep) {
            let ks: Vec<String> = kb.iter().map(|b| num(from_ordered_bits(*b))).collect();
            let get = |i: usize, f: fn(&Cell) -> &String| cells[i].as_ref().map(f).cloned().unwrap_or_default();
            let mut flags: Vec<String> = cells.iter().flatten().map(|c| c.2.clone()).collect();
            flags.dedup();
            let _ = writeln!(
                out,
                "{r},{}{}{},{},{},{},{}",
                ks.join(","),
                if d2 > 0 { "," } else { "" },
                get(0, |c| &c.0),
                get(1, |c| &c.0),
                get(0, |c| &c.1),
                get(1, |c| &c.1),
                flags.join("|")
            );
        }
    }
    out
}

/// Bits of `x` mapped so that integer order equals numeric order.
fn ordered_bits(x: f64) -> u64 {
    let b = x.to_bits();
    if b >> 63 == 1 {
        !b
    } else {
        b | (1 << 63)
    }
}

fn from_ordered_bits(b: u64) -> f64 {
    f64::from_bits(if b >> 63 == 1 { b & !(1 << 63) } else { !b })
}

pub fn sweep_csv(rows: &[SweepRow], meta: &Metadata) -> String {
    let mut out = meta.header();
    out.push_str("a,lambda_a,lambda_a00,ev_norm,energy,error\n");
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{}",
            num(r.a),
            lam(r.lambda_a),
            lam(r.lambda_a00),
            num(r.ev_norm),
            num(r.energy),
            r.error.as_deref().unwrap_or("").replace([',', '\n'], ";")
        );
    }
    out
}

/// Rows: `z` exponents, `q`, then the `d×d` entries row-major.
pub fn kernel_csv(k: &HessianKernel, meta: &Metadata) -> String {
    let mut out = meta.header();
    let d = k.d;
    let d2 = k.entries.keys().next().map_or(0, |w| w.z.len());
    let mut cols: Vec<String> = (1..=d2).map(|i| format!("z{i}")).collect();
    cols.push("q".into());
    for i in 0..d {
        for j in 0..d {
            cols.push(format!("f{i}{j}"));
        }
    }
    let _ = writeln!(out, "{}", cols.join(","));
    for (w, m) in &k.entries {
        let mut row: Vec<String> = w.z.iter().map(|z| z.to_string()).collect();
        row.push(w.q.to_string());
        for i in 0..d {
            for j in 0..d {
                row.push(num(m[(i, j)]));
            }
        }
        let _ = writeln!(out, "{}", row.join(","));
    }
    out
}

/// Parses the data rows of a CSV produced here, skipping `#` lines and the header.
pub fn read_csv(text: &str) -> Vec<Vec<String>> {
    text.lines()
        .filter(|l| !l.starts_with('#'))
        .skip(1)
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect()
}

#[derive(Debug, Clone)]
pub struct Series {
    pub label: String,
    pub color: String,
    pub points: Vec<(f64, f64)>,
}

#[derive(Debug, Clone)]
pub struct Plot {
    pub title: String,
    pub xlabel: String,
    pub ylabel: String,
    pub series: Vec<Series>,
    /// Vertical markers, e.g. rank-deficient or divergent wave vectors.
    pub markers: Vec<(f64, String)>,
}

const W: f64 = 720.0;
const H: f64 = 480.0;
const ML: f64 = 80.0;
const MR: f64 = 150.0;
const MT: f64 = 40.0;
const MB: f64 = 60.0;

fn quantile(sorted: &[f64], q: f64) -> f64 {
    let i = ((sorted.len() - 1) as f64 * q).round() as usize;
    sorted[i]
}

fn nice_ticks(lo: f64, hi: f64) -> Vec<f64> {
    let span = hi - lo;
    let raw = span / 6.0;
    let mag = 10f64.powf(raw.log10().floor());
    let step = [1.0, 2.0, 5.0, 10.0].iter().map(|m| m * mag).find(|s| span / s <= 8.0).unwrap_or(10.0 * mag);
    let mut t = (lo / step).ceil() * step;
    let mut out = Vec::new();
    while t <= hi + 1e-9 * step {
        out.push(if t.abs() < 1e-12 * step { 0.0 } else { t });
        t += step;
    }
    out
}

fn esc(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Static SVG line plot. The vertical range covers the 2nd to 98th percentile
/// of the finite values (and zero); points outside are clamped to the frame.
pub fn emit_svg(plot: &Plot) -> String {
    let xs: Vec<f64> = plot.series.iter().flat_map(|s| s.points.iter().map(|p| p.0)).filter(|x| x.is_finite()).collect();
    let mut ys: Vec<f64> = plot.series.iter().flat_map(|s| s.points.iter().map(|p| p.1)).filter(|y| y.is_finite()).collect();
    ys.sort_by(f64::total_cmp);
    let (mut x0, mut x1) = xs.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &x| (a.min(x), b.max(x)));
    if !x0.is_finite() {
        (x0, x1) = (0.0, 1.0);
    }
    if x1 <= x0 {
        x1 = x0 + 1.0;
    }
    let (mut y0, mut y1) = if ys.is_empty() { (-1.0, 1.0) } else { (quantile(&ys, 0.02).min(0.0), quantile(&ys, 0.98).max(0.0)) };
    if y1 <= y0 {
        y1 = y0 + 1.0;
    }
    let pad = 0.08 * (y1 - y0);
    y0 -= pad;
    y1 += pad;
    let pw = W - ML - MR;
    let ph = H - MT - MB;
    let sx = |x: f64| ML + (x - x0) / (x1 - x0) * pw;
    let sy = |y: f64| MT + (y1 - y.clamp(y0, y1)) / (y1 - y0) * ph;

    let mut s = String::new();
    let _ = writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="12">"#);
    let _ = writeln!(s, r#"<rect x="0" y="0" width="{W}" height="{H}" fill="white"/>"#);
    let _ = writeln!(s, r#"<text x="{:.2}" y="24" text-anchor="middle" font-size="14">{}</text>"#, ML + pw / 2.0, esc(&plot.title));
    let _ = writeln!(s, r#"<rect x="{ML}" y="{MT}" width="{pw}" height="{ph}" fill="none" stroke="black"/>"#);
    for t in nice_ticks(x0, x1) {
        let x = sx(t);
        let _ = writeln!(s, r#"<line x1="{x:.2}" y1="{:.2}" x2="{x:.2}" y2="{:.2}" stroke="black"/>"#, MT + ph, MT + ph + 5.0);
        let _ = writeln!(s, r#"<text x="{x:.2}" y="{:.2}" text-anchor="middle">{}</text>"#, MT + ph + 18.0, fmt_tick(t));
    }
    for t in nice_ticks(y0, y1) {
        let y = sy(t);
        let _ = writeln!(s, r#"<line x1="{:.2}" y1="{y:.2}" x2="{ML}" y2="{y:.2}" stroke="black"/>"#, ML - 5.0);
        let _ = writeln!(s, r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"#, ML - 8.0, y + 4.0, fmt_tick(t));
    }
    if y0 < 0.0 && y1 > 0.0 {
        let y = sy(0.0);
        let _ = writeln!(s, r#"<line x1="{ML}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}" stroke="gray" stroke-dasharray="4 3"/>"#, ML + pw);
    }
    let _ = writeln!(s, r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#, ML + pw / 2.0, H - 15.0, esc(&plot.xlabel));
    let _ = writeln!(s, r#"<text x="18" y="{:.2}" text-anchor="middle" transform="rotate(-90 18 {:.2})">{}</text>"#, MT + ph / 2.0, MT + ph / 2.0, esc(&plot.ylabel));
    for (x, label) in &plot.markers {
        if !x.is_finite() {
            continue;
        }
        let px = sx(*x);
        let _ = writeln!(s, r#"<line x1="{px:.2}" y1="{MT}" x2="{px:.2}" y2="{:.2}" stroke="red" stroke-dasharray="2 2"><title>{}</title></line>"#, MT + ph, esc(label));
    }
    for (i, ser) in plot.series.iter().enumerate() {
        let mut pts: Vec<(f64, f64)> = ser.points.clone();
        pts.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut run: Vec<String> = Vec::new();
        let flush = |run: &mut Vec<String>, s: &mut String| {
            if run.len() >= 2 {
                let _ = writeln!(s, r#"<polyline fill="none" stroke="{}" stroke-width="1.5" points="{}"/>"#, ser.color, run.join(" "));
            }
            run.clear();
        };
        for (x, y) in pts {
            if x.is_finite() && y.is_finite() {
                run.push(format!("{:.2},{:.2}", sx(x), sy(y)));
            } else {
                flush(&mut run, &mut s);
            }
        }
        flush(&mut run, &mut s);
        let ly = MT + 16.0 + 18.0 * i as f64;
        let lx = ML + pw + 12.0;
        let _ = writeln!(s, r#"<line x1="{lx:.2}" y1="{ly:.2}" x2="{:.2}" y2="{ly:.2}" stroke="{}" stroke-width="2"/>"#, lx + 20.0, ser.color);
        let _ = writeln!(s, r#"<text x="{:.2}" y="{:.2}">{}</text>"#, lx + 26.0, ly + 4.0, esc(&ser.label));
    }
    s.push_str("</svg>\n");
    s
}

fn fmt_tick(t: f64) -> String {
    if t != 0.0 && (t.abs() >= 1e4 || t.abs() < 1e-3) {
        format!("{t:.1e}")
    } else {
        let s = format!("{t:.4}");
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    }
}

/// λ-curves of one representation for both seminorms, with singular points marked.
pub fn curve_plot(curves: &[Curve], title: &str) -> Plot {
    let colors = ["#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b"];
    let mut series = Vec::new();
    let mut markers = Vec::new();
    for (i, c) in curves.iter().enumerate() {
        let pts: Vec<(f64, f64)> = c
            .samples
            .iter()
            .filter(|s| s.kind != SampleKind::Singular && s.k.len() == 1)
            .map(|s| (s.k[0], s.value.to_f64()))
            .collect();
        let label = match c.kind {
            SeminormKind::Full => format!("λ_min, ‖·‖_R ({})", c.rep),
            SeminormKind::ZeroZero => format!("λ_min, |·|_R,0,0 ({})", c.rep),
        };
        series.push(Series { label, color: colors[i % colors.len()].into(), points: pts });
        for sp in &c.singular {
            if let Some(k) = sp.k.first() {
                let tag = if sp.divergent { "divergent" } else { "rank-deficient" };
                markers.push((*k, format!("{tag} k = {}", num(*k))));
            }
        }
    }
    markers.sort_by(|a, b| a.0.total_cmp(&b.0));
    markers.dedup_by(|a, b| (a.0 - b.0).abs() < 1e-9 && a.1 == b.1);
    Plot { title: title.into(), xlabel: "k".into(), ylabel: "λ_min".into(), series, markers }
}

pub fn sweep_plot(rows: &[SweepRow], title: &str) -> Plot {
    let a: Vec<(f64, f64)> = rows.iter().map(|r| (r.a, r.lambda_a.to_f64())).collect();
    let b: Vec<(f64, f64)> = rows.iter().map(|r| (r.a, r.lambda_a00.to_f64())).collect();
    Plot {
        title: title.into(),
        xlabel: "a".into(),
        ylabel: "λ".into(),
        series: vec![
            Series { label: "λ_a".into(), color: "#1f77b4".into(), points: a },
            Series { label: "λ_a,0,0".into(), color: "#ff7f0e".into(), points: b },
        ],
        markers: rows.iter().filter(|r| r.lambda_a == Lambda::NegInf).map(|r| (r.a, "λ_a = −∞".to_string())).collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn numbers_round_trip_bit_exactly() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..10_000 {
            let x = f64::from_bits(rng.gen::<u64>());
            if x.is_nan() {
                continue;
            }
            assert_eq!(parse_num(&num(x)).unwrap().to_bits(), x.to_bits(), "{x:e}");
        }
        for x in [0.0, -0.0, f64::MIN_POSITIVE, 5e-324, f64::MAX, f64::INFINITY, f64::NEG_INFINITY] {
            assert_eq!(parse_num(&num(x)).unwrap().to_bits(), x.to_bits());
        }
    }

    #[test]
    fn ordered_bits_preserve_order() {
        let v = [-3.0, -0.5, -0.0, 0.0, 1e-300, 2.0, 7.5];
        for w in v.windows(2) {
            assert!(ordered_bits(w[0]) <= ordered_bits(w[1]));
        }
        for x in v {
            assert_eq!(from_ordered_bits(ordered_bits(x)).to_bits(), x.to_bits());
        }
    }

    #[test]
    fn two_point_curve_is_one_segment() {
        let p = Plot {
            title: "t".into(),
            xlabel: "x".into(),
            ylabel: "y".into(),
            series: vec![Series { label: "s".into(), color: "black".into(), points: vec![(0.0, 1.0), (1.0, 2.0)] }],
            markers: vec![],
        };
        let svg = emit_svg(&p);
        assert_eq!(svg.matches("<polyline").count(), 1);
        let pts = svg.split("points=\"").nth(1).unwrap().split('"').next().unwrap();
        assert_eq!(pts.split(' ').count(), 2);
        assert_eq!(svg, emit_svg(&p));
        assert!(!svg.contains("href"));
    }

    #[test]
    fn non_finite_values_break_the_line() {
        let p = Plot {
            title: "t".into(),
            xlabel: "x".into(),
            ylabel: "y".into(),
            series: vec![Series {
                label: "s".into(),
                color: "black".into(),
                points: vec![(0.0, 1.0), (1.0, 2.0), (2.0, f64::NEG_INFINITY), (3.0, 1.0), (4.0, 0.5)],
            }],
            markers: vec![(2.0, "divergent".into())],
        };
        let svg = emit_svg(&p);
        assert_eq!(svg.matches("<polyline").count(), 2);
        assert!(svg.contains("stroke=\"red\""));
    }
}
