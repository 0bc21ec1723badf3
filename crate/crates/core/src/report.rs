//! Static figures and markdown tables, built only from the stage CSVs.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::csvio;
use crate::error::{io_err, Result};
use crate::plan::TargetType;
use crate::select::{BASELINES_FILE, SELECT_DIR};
use crate::tables::CONVERGENCE_FILE;
use crate::train::r2_file;
use crate::ProtocolConfig;

pub const REPORT_DIR: &str = "report";

const PALETTE: [&str; 6] = ["#1b9e77", "#d95f02", "#7570b3", "#e7298a", "#66a61e", "#444444"];

/// Plot area in pixels, with data ranges mapped onto it.
struct Frame {
    x0: f64,
    y0: f64,
    w: f64,
    h: f64,
    xr: (f64, f64),
    yr: (f64, f64),
}

impl Frame {
    fn px(&self, x: f64) -> f64 {
        self.x0 + (x - self.xr.0) / (self.xr.1 - self.xr.0).max(1e-12) * self.w
    }

    fn py(&self, y: f64) -> f64 {
        self.y0 + self.h - (y - self.yr.0) / (self.yr.1 - self.yr.0).max(1e-12) * self.h
    }
}

struct Svg {
    body: String,
    width: f64,
    height: f64,
}

impl Svg {
    fn new(width: f64, height: f64) -> Self {
        Self { body: String::new(), width, height }
    }

    fn text(&mut self, x: f64, y: f64, anchor: &str, size: u32, s: &str) {
        let s = s.replace('&', "&amp;").replace('<', "&lt;");
        writeln!(self.body, r#"<text x="{x:.1}" y="{y:.1}" font-size="{size}" text-anchor="{anchor}">{s}</text>"#).unwrap();
    }

    fn line(&mut self, a: (f64, f64), b: (f64, f64), stroke: &str, extra: &str) {
        writeln!(
            self.body,
            r#"<line x1="{:.1}" y1="{:.1}" x2="{:.1}" y2="{:.1}" stroke="{stroke}" {extra}/>"#,
            a.0, a.1, b.0, b.1
        )
        .unwrap();
    }

    fn rect(&mut self, x: f64, y: f64, w: f64, h: f64, fill: &str, stroke: &str) {
        writeln!(
            self.body,
            r#"<rect x="{x:.1}" y="{y:.1}" width="{w:.1}" height="{h:.1}" fill="{fill}" stroke="{stroke}"/>"#
        )
        .unwrap();
    }

    fn axes(&mut self, f: &Frame, xlabel: &str, ylabel: &str, yticks: usize) {
        self.rect(f.x0, f.y0, f.w, f.h, "none", "#000");
        for i in 0..=yticks {
            let v = f.yr.0 + (f.yr.1 - f.yr.0) * i as f64 / yticks as f64;
            let y = f.py(v);
            self.line((f.x0 - 4.0, y), (f.x0, y), "#000", "");
            self.line((f.x0, y), (f.x0 + f.w, y), "#ddd", "");
            self.text(f.x0 - 6.0, y + 4.0, "end", 11, &format!("{v:.2}"));
        }
        self.text(f.x0 + f.w / 2.0, f.y0 + f.h + 36.0, "middle", 12, xlabel);
        let (cx, cy) = (f.x0 - 48.0, f.y0 + f.h / 2.0);
        writeln!(
            self.body,
            r#"<text x="{cx:.1}" y="{cy:.1}" font-size="12" text-anchor="middle" transform="rotate(-90 {cx:.1} {cy:.1})">{ylabel}</text>"#
        )
        .unwrap();
    }

    fn save(&self, path: &Path) -> Result<()> {
        let s = format!(
            "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{h}\" viewBox=\"0 0 {w} {h}\" font-family=\"sans-serif\">\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n{}</svg>\n",
            self.body,
            w = self.width,
            h = self.height
        );
        std::fs::write(path, s).map_err(io_err(path))
    }
}

fn range(v: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = v.filter(|x| x.is_finite()).fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), x| (a.min(x), b.max(x)));
    if !lo.is_finite() {
        return (0.0, 1.0);
    }
    if hi - lo < 1e-9 {
        (lo - 0.5, hi + 0.5)
    } else {
        let pad = 0.05 * (hi - lo);
        (lo - pad, hi + pad)
    }
}

/// Mean log10 precision against evaluations, one line per algorithm, with
/// the switch point marked.
fn convergence_plot(path: &Path, function: usize, curves: &BTreeMap<String, Vec<(f64, f64)>>, switch: usize) -> Result<()> {
    let mut svg = Svg::new(640.0, 420.0);
    let f = Frame {
        x0: 70.0,
        y0: 40.0,
        w: 430.0,
        h: 320.0,
        xr: range(curves.values().flatten().map(|p| p.0)),
        yr: range(curves.values().flatten().map(|p| p.1)),
    };
    svg.text(320.0, 24.0, "middle", 14, &format!("f{function}: mean best-so-far precision"));
    svg.axes(&f, "evaluations", "mean log10 precision", 5);
    let sx = f.px(switch as f64);
    svg.line((sx, f.y0), (sx, f.y0 + f.h), "#888", r#"stroke-dasharray="4 3""#);
    for (i, (name, pts)) in curves.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let step = (pts.len() / 400).max(1);
        let d: Vec<String> = pts
            .iter()
            .step_by(step)
            .chain(pts.last())
            .map(|(x, y)| format!("{:.1},{:.1}", f.px(*x), f.py(*y)))
            .collect();
        writeln!(svg.body, r#"<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{}"/>"#, d.join(" ")).unwrap();
        let ly = f.y0 + 16.0 * i as f64 + 10.0;
        svg.line((515.0, ly), (535.0, ly), color, r#"stroke-width="3""#);
        svg.text(540.0, ly + 4.0, "start", 12, name);
    }
    svg.save(path)
}

fn quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let (lo, hi) = (pos.floor() as usize, pos.ceil() as usize);
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

/// Box per series (quartiles, 1.5 IQR whiskers, outliers) with the mean as
/// a red diamond.
fn boxplot(path: &Path, title: &str, series: &[(String, Vec<f64>)]) -> Result<()> {
    let width = 120.0 + 80.0 * series.len() as f64;
    let mut svg = Svg::new(width, 400.0);
    let f = Frame {
        x0: 70.0,
        y0: 40.0,
        w: width - 100.0,
        h: 300.0,
        xr: (0.0, series.len() as f64),
        yr: range(series.iter().flat_map(|(_, v)| v.iter().copied()).chain([0.0])),
    };
    svg.text(width / 2.0, 24.0, "middle", 14, title);
    svg.axes(&f, "", "loss (orders of magnitude)", 5);
    for (i, (name, v)) in series.iter().enumerate() {
        let cx = f.px(i as f64 + 0.5);
        svg.text(cx, f.y0 + f.h + 18.0, "middle", 11, name);
        if v.is_empty() {
            continue;
        }
        let mut s = v.clone();
        s.sort_by(f64::total_cmp);
        let (q1, q2, q3) = (quantile(&s, 0.25), quantile(&s, 0.5), quantile(&s, 0.75));
        let iqr = q3 - q1;
        let lo = s.iter().copied().find(|x| *x >= q1 - 1.5 * iqr).unwrap_or(q1);
        let hi = s.iter().rev().copied().find(|x| *x <= q3 + 1.5 * iqr).unwrap_or(q3);
        let color = PALETTE[i % PALETTE.len()];
        svg.line((cx, f.py(lo)), (cx, f.py(q1)), "#000", "");
        svg.line((cx, f.py(q3)), (cx, f.py(hi)), "#000", "");
        svg.line((cx - 10.0, f.py(lo)), (cx + 10.0, f.py(lo)), "#000", "");
        svg.line((cx - 10.0, f.py(hi)), (cx + 10.0, f.py(hi)), "#000", "");
        svg.rect(cx - 22.0, f.py(q3), 44.0, (f.py(q1) - f.py(q3)).max(1.0), color, "#000");
        svg.line((cx - 22.0, f.py(q2)), (cx + 22.0, f.py(q2)), "#000", r#"stroke-width="2""#);
        for x in s.iter().filter(|x| **x < lo || **x > hi) {
            writeln!(svg.body, r#"<circle cx="{cx:.1}" cy="{:.1}" r="2" fill="none" stroke="black"/>"#, f.py(*x)).unwrap();
        }
        let m = v.iter().sum::<f64>() / v.len() as f64;
        let my = f.py(m);
        writeln!(svg.body, r#"<polygon points="{:.1},{my:.1} {cx:.1},{:.1} {:.1},{my:.1} {cx:.1},{:.1}" fill="red"/>"#, cx - 5.0, my - 5.0, cx + 5.0, my + 5.0).unwrap();
    }
    svg.save(path)
}

/// Algorithms by budgets, cell shade proportional to the count.
fn heatmap(path: &Path, title: &str, cols: &[String], rows: &[(String, Vec<f64>)]) -> Result<()> {
    let (cw, ch) = (70.0, 34.0);
    let width = 110.0 + cw * cols.len() as f64 + 20.0;
    let height = 70.0 + ch * rows.len() as f64 + 40.0;
    let mut svg = Svg::new(width, height);
    svg.text(width / 2.0, 24.0, "middle", 14, title);
    let max = rows.iter().flat_map(|(_, v)| v.iter().copied()).fold(1.0, f64::max);
    for (j, c) in cols.iter().enumerate() {
        svg.text(110.0 + cw * (j as f64 + 0.5), 58.0, "middle", 12, c);
    }
    for (i, (name, vals)) in rows.iter().enumerate() {
        let y = 66.0 + ch * i as f64;
        svg.text(104.0, y + ch / 2.0 + 4.0, "end", 12, name);
        for (j, v) in vals.iter().enumerate() {
            let t = v / max;
            let shade = (255.0 - 200.0 * t).round() as u8;
            let fill = format!("rgb({shade},{shade},255)");
            svg.rect(110.0 + cw * j as f64, y, cw, ch, &fill, "#fff");
            let color = if t > 0.6 { "#fff" } else { "#000" };
            writeln!(
                svg.body,
                r#"<text x="{:.1}" y="{:.1}" font-size="12" text-anchor="middle" fill="{color}">{}</text>"#,
                110.0 + cw * (j as f64 + 0.5),
                y + ch / 2.0 + 4.0,
                v
            )
            .unwrap();
        }
    }
    svg.text(110.0 + cw * cols.len() as f64 / 2.0, height - 12.0, "middle", 12, "A2 budget");
    svg.save(path)
}

fn md_table(out: &mut String, header: &[String], rows: &[Vec<String>]) {
    writeln!(out, "| {} |", header.join(" | ")).unwrap();
    writeln!(out, "|{}", header.iter().map(|_| "---|").collect::<String>()).unwrap();
    for r in rows {
        writeln!(out, "| {} |", r.join(" | ")).unwrap();
    }
    out.push('\n');
}

fn fmt4(s: &str) -> String {
    s.parse::<f64>().map_or_else(|_| s.to_string(), |v| format!("{v:.4}"))
}

/// Writes every figure and `tables.md` under `<out>/report`; returns the
/// files written.
pub fn report(cfg: &ProtocolConfig) -> Result<Vec<PathBuf>> {
    let out = &cfg.out;
    let dir = out.join(REPORT_DIR);
    let select_dir = out.join(SELECT_DIR);
    // Read everything first so a missing stage is reported before writing.
    let (_, conv) = csvio::read(&out.join(CONVERGENCE_FILE), "features")?;
    let r2: Vec<(TargetType, (Vec<String>, Vec<Vec<String>>))> = [TargetType::Raw, TargetType::Log10]
        .into_iter()
        .map(|t| Ok((t, csvio::read(&out.join(r2_file(t)), "train")?)))
        .collect::<Result<_>>()?;
    let (_, baselines) = csvio::read(&select_dir.join(BASELINES_FILE), "select")?;
    let mut per_subset = Vec::new();
    for s in cfg.subsets() {
        let sd = select_dir.join(&s.name);
        let mut losses = Vec::new();
        let mut confusion = Vec::new();
        for b in &cfg.a2_budgets {
            losses.push((*b, csvio::read(&sd.join(format!("losses_{b}.csv")), "select")?));
            confusion.push((*b, csvio::read(&sd.join(format!("confusion_{b}.csv")), "select")?));
        }
        let best = csvio::read(&sd.join("counts_best.csv"), "select")?;
        let selected = csvio::read(&sd.join("counts_selected.csv"), "select")?;
        per_subset.push((s, losses, confusion, best, selected));
    }
    std::fs::create_dir_all(&dir).map_err(io_err(&dir))?;
    let mut written = Vec::new();

    let mut curves: BTreeMap<usize, BTreeMap<String, Vec<(f64, f64)>>> = BTreeMap::new();
    for r in &conv {
        let f: usize = r[0].parse().unwrap_or(0);
        let e: f64 = r[2].parse().unwrap_or(f64::NAN);
        let l: f64 = r[4].parse().unwrap_or(f64::NAN);
        curves.entry(f).or_default().entry(r[1].clone()).or_default().push((e, l));
    }
    for (f, c) in &curves {
        let p = dir.join(format!("convergence_f{f}.svg"));
        convergence_plot(&p, *f, c, cfg.a1_budget())?;
        written.push(p);
    }

    let mut md = String::from("# Results\n\n");
    for (t, (header, rows)) in &r2 {
        writeln!(md, "## Mean leave-one-instance-out R², {} target\n", t.name()).unwrap();
        let rows: Vec<Vec<String>> =
            rows.iter().map(|r| r.iter().enumerate().map(|(i, c)| if i == 0 { c.clone() } else { fmt4(c) }).collect()).collect();
        md_table(&mut md, header, &rows);
    }
    md.push_str("## Baselines\n\n");
    let header = ["subset", "budget", "SBS", "SBS loss", "selector loss", "VBS loss", "gap closed", "selector/SBS"]
        .map(String::from);
    let rows: Vec<Vec<String>> =
        baselines.iter().map(|r| r.iter().enumerate().map(|(i, c)| if i < 3 { c.clone() } else { fmt4(c) }).collect()).collect();
    md_table(&mut md, &header, &rows);

    for (s, losses, confusion, best, selected) in &per_subset {
        for (b, (header, rows)) in losses {
            let mut series = vec![("selector".to_string(), rows.iter().filter_map(|r| r[7].parse().ok()).collect())];
            for (j, h) in header.iter().enumerate().skip(8) {
                let name = h.trim_start_matches("loss_").to_string();
                series.push((name, rows.iter().filter_map(|r| r[j].parse().ok()).collect()));
            }
            let p = dir.join(format!("loss_{}_{b}.svg", s.name));
            boxplot(&p, &format!("Loss at A2 budget {b} ({})", s.name), &series)?;
            written.push(p);
        }
        for (kind, (header, rows)) in [("best", best), ("selected", selected)] {
            let data: Vec<(String, Vec<f64>)> =
                rows.iter().map(|r| (r[0].clone(), r[1..].iter().map(|c| c.parse().unwrap_or(0.0)).collect())).collect();
            let p = dir.join(format!("counts_{kind}_{}.svg", s.name));
            let title = format!("Runs where each algorithm is {kind} ({})", s.name);
            heatmap(&p, &title, &header[1..], &data)?;
            written.push(p);
        }
        for (b, (header, rows)) in confusion {
            writeln!(md, "## Confusion matrix, {} portfolio, A2 budget {b}\n", s.name).unwrap();
            md_table(&mut md, header, rows);
        }
    }
    let p = dir.join("tables.md");
    std::fs::write(&p, md).map_err(io_err(&p))?;
    written.push(p);
    Ok(written)
}
