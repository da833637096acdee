use std::fmt::Write as _;
use std::path::Path;

use anyhow::{Context, Result};
use serde::Serialize;

use ablate_core::eval::EvalReport;

/// Pretty JSON with a trailing newline; the same value always produces
/// the same bytes.
pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

pub fn eval_csv(report: &EvalReport) -> String {
    let mut out = String::from("concept,model_tag,score_posterior,score_raw,stderr,n\n");
    for pair in &report.scores {
        for score in [&pair.baseline, &pair.ablated] {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{}",
                csv_field(&score.concept),
                score.model_tag,
                score.posterior,
                score.raw_logdens,
                score.posterior_stderr,
                score.n
            );
        }
    }
    out
}

fn csv_field(s: &str) -> String {
    if s.contains(',') || s.contains('"') || s.contains('\n') {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 400.0;
const MARGIN_L: f64 = 56.0;
const MARGIN_R: f64 = 16.0;
const MARGIN_T: f64 = 24.0;
const MARGIN_B: f64 = 48.0;
const PALETTE: [&str; 4] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd"];

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

fn fmt2(v: f64) -> String {
    format!("{v:.2}")
}

fn svg_open(out: &mut String) {
    let _ = writeln!(
        out,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"0 0 {} {}\" font-family=\"sans-serif\">",
        WIDTH as u32, HEIGHT as u32
    );
    let _ = writeln!(
        out,
        "<rect x=\"0\" y=\"0\" width=\"{}\" height=\"{}\" fill=\"white\"/>",
        WIDTH as u32, HEIGHT as u32
    );
}

fn axes(out: &mut String, y_label: &str) {
    let x0 = MARGIN_L;
    let x1 = WIDTH - MARGIN_R;
    let y0 = HEIGHT - MARGIN_B;
    let y1 = MARGIN_T;
    let _ = writeln!(
        out,
        "<line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"black\"/>",
        fmt2(x0), fmt2(y0), fmt2(x1), fmt2(y0)
    );
    let _ = writeln!(
        out,
        "<line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"black\"/>",
        fmt2(x0), fmt2(y0), fmt2(x0), fmt2(y1)
    );
    for (frac, label) in [(0.0, "0"), (0.5, "0.5"), (1.0, "1")] {
        let y = y0 - frac * (y0 - y1);
        let _ = writeln!(
            out,
            "<line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"black\"/>",
            fmt2(x0 - 4.0), fmt2(y), fmt2(x0), fmt2(y)
        );
        let _ = writeln!(
            out,
            "<text x=\"{}\" y=\"{}\" font-size=\"11\" text-anchor=\"end\">{}</text>",
            fmt2(x0 - 7.0), fmt2(y + 4.0), label
        );
    }
    let _ = writeln!(
        out,
        "<text x=\"14\" y=\"{}\" font-size=\"11\" text-anchor=\"middle\" transform=\"rotate(-90 14 {})\">{}</text>",
        fmt2((y0 + y1) / 2.0), fmt2((y0 + y1) / 2.0), xml_escape(y_label)
    );
}

/// Training trajectories: one polyline per labeled curve of
/// (step, target posterior) points, y axis fixed to [0, 1].
pub fn probe_chart_svg(curves: &[(String, Vec<(usize, f64)>)]) -> String {
    let mut out = String::new();
    svg_open(&mut out);
    axes(&mut out, "target alignment");
    let max_step = curves
        .iter()
        .flat_map(|(_, pts)| pts.iter().map(|&(s, _)| s))
        .max()
        .unwrap_or(1)
        .max(1) as f64;
    let x0 = MARGIN_L;
    let x1 = WIDTH - MARGIN_R;
    let y0 = HEIGHT - MARGIN_B;
    let y1 = MARGIN_T;
    let sx = |step: usize| x0 + (step as f64 / max_step) * (x1 - x0);
    let sy = |v: f64| y0 - v.clamp(0.0, 1.0) * (y0 - y1);

    for (tick, label) in [(0.0, "0".to_string()), (0.5, fmt_step(max_step / 2.0)), (1.0, fmt_step(max_step))] {
        let x = x0 + tick * (x1 - x0);
        let _ = writeln!(
            out,
            "<line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"black\"/>",
            fmt2(x), fmt2(y0), fmt2(x), fmt2(y0 + 4.0)
        );
        let _ = writeln!(
            out,
            "<text x=\"{}\" y=\"{}\" font-size=\"11\" text-anchor=\"middle\">{}</text>",
            fmt2(x), fmt2(y0 + 18.0), label
        );
    }
    let _ = writeln!(
        out,
        "<text x=\"{}\" y=\"{}\" font-size=\"11\" text-anchor=\"middle\">step</text>",
        fmt2((x0 + x1) / 2.0), fmt2(HEIGHT - 10.0)
    );

    for (i, (label, pts)) in curves.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let coords: Vec<String> = pts.iter().map(|&(s, v)| format!("{},{}", fmt2(sx(s)), fmt2(sy(v)))).collect();
        let _ = writeln!(
            out,
            "<polyline points=\"{}\" fill=\"none\" stroke=\"{}\" stroke-width=\"1.5\"/>",
            coords.join(" "), color
        );
        let ly = MARGIN_T + 14.0 * i as f64;
        let _ = writeln!(
            out,
            "<rect x=\"{}\" y=\"{}\" width=\"10\" height=\"3\" fill=\"{}\"/>",
            fmt2(x1 - 120.0), fmt2(ly + 2.0), color
        );
        let _ = writeln!(
            out,
            "<text x=\"{}\" y=\"{}\" font-size=\"11\">{}</text>",
            fmt2(x1 - 105.0), fmt2(ly + 7.0), xml_escape(label)
        );
    }
    out.push_str("</svg>\n");
    out
}

fn fmt_step(v: f64) -> String {
    format!("{}", v.round() as u64)
}

/// Grouped bars: per evaluation concept, baseline and ablated alignment
/// side by side.
pub fn bar_chart_svg(report: &EvalReport) -> String {
    let mut out = String::new();
    svg_open(&mut out);
    axes(&mut out, "alignment");
    let x0 = MARGIN_L;
    let x1 = WIDTH - MARGIN_R;
    let y0 = HEIGHT - MARGIN_B;
    let y1 = MARGIN_T;
    let groups = report.scores.len().max(1) as f64;
    let group_w = (x1 - x0) / groups;
    let bar_w = (group_w * 0.35).min(40.0);
    let sy = |v: f64| y0 - v.clamp(0.0, 1.0) * (y0 - y1);

    for (i, pair) in report.scores.iter().enumerate() {
        let cx = x0 + (i as f64 + 0.5) * group_w;
        for (j, (score, color)) in
            [(&pair.baseline, PALETTE[0]), (&pair.ablated, PALETTE[1])].iter().enumerate()
        {
            let bx = cx - bar_w + j as f64 * bar_w;
            let top = sy(score.posterior);
            let _ = writeln!(
                out,
                "<rect x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" fill=\"{}\"/>",
                fmt2(bx), fmt2(top), fmt2(bar_w - 2.0), fmt2(y0 - top), color
            );
        }
        let label = format!("{} ({})", pair.concept, pair.role);
        let short = if label.chars().count() > 18 {
            format!("{}..", label.chars().take(16).collect::<String>())
        } else {
            label
        };
        let _ = writeln!(
            out,
            "<text x=\"{}\" y=\"{}\" font-size=\"10\" text-anchor=\"middle\">{}</text>",
            fmt2(cx), fmt2(y0 + 14.0), xml_escape(&short)
        );
    }
    for (i, (name, color)) in [("baseline", PALETTE[0]), ("ablated", PALETTE[1])].iter().enumerate() {
        let ly = MARGIN_T + 14.0 * i as f64;
        let _ = writeln!(
            out,
            "<rect x=\"{}\" y=\"{}\" width=\"10\" height=\"10\" fill=\"{}\"/>",
            fmt2(x1 - 100.0), fmt2(ly), color
        );
        let _ = writeln!(
            out,
            "<text x=\"{}\" y=\"{}\" font-size=\"11\">{}</text>",
            fmt2(x1 - 85.0), fmt2(ly + 9.0), name
        );
    }
    out.push_str("</svg>\n");
    out
}
