//! Minimal SVG line charts for sweep output.

use std::fmt::Write;

use crate::analysis::SweepRow;

const WIDTH: f64 = 640.0;
const PANEL_HEIGHT: f64 = 300.0;
const MARGIN_LEFT: f64 = 70.0;
const MARGIN_RIGHT: f64 = 20.0;
const MARGIN_TOP: f64 = 30.0;
const MARGIN_BOTTOM: f64 = 45.0;
const MRD_COLOR: &str = "#1f77b4";
const DMRD_COLOR: &str = "#d62728";

struct Panel<'a> {
    title: &'a str,
    y_label: &'a str,
    mrd: Vec<(f64, f64)>,
    dmrd: Vec<(f64, f64)>,
}

fn range(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = values.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
    if !(lo.is_finite() && hi.is_finite()) {
        (0.0, 1.0)
    } else if hi - lo < 1e-12 {
        (lo - 1.0, hi + 1.0)
    } else {
        let pad = 0.05 * (hi - lo);
        (lo - pad, hi + pad)
    }
}

fn polyline(out: &mut String, points: &[(f64, f64)], map: &impl Fn(f64, f64) -> (f64, f64), color: &str) {
    let coords: Vec<String> = points
        .iter()
        .map(|&(x, y)| {
            let (px, py) = map(x, y);
            format!("{px:.2},{py:.2}")
        })
        .collect();
    let _ = writeln!(
        out,
        r#"  <polyline fill="none" stroke="{color}" stroke-width="2" points="{}"/>"#,
        coords.join(" ")
    );
}

fn panel(out: &mut String, p: &Panel, offset: f64, x_range: (f64, f64), markers: &[f64]) {
    let (x0, x1) = x_range;
    let (y0, y1) = range(p.mrd.iter().chain(&p.dmrd).map(|&(_, y)| y));
    let plot_w = WIDTH - MARGIN_LEFT - MARGIN_RIGHT;
    let plot_h = PANEL_HEIGHT - MARGIN_TOP - MARGIN_BOTTOM;
    let map = |x: f64, y: f64| {
        (
            MARGIN_LEFT + (x - x0) / (x1 - x0) * plot_w,
            offset + MARGIN_TOP + (1.0 - (y - y0) / (y1 - y0)) * plot_h,
        )
    };
    let top = offset + MARGIN_TOP;
    let bottom = top + plot_h;

    let _ = writeln!(
        out,
        r#"  <text x="{:.2}" y="{:.2}" font-size="14" text-anchor="middle">{}</text>"#,
        MARGIN_LEFT + plot_w / 2.0,
        offset + 18.0,
        p.title
    );
    let _ = writeln!(
        out,
        r##"  <rect x="{MARGIN_LEFT}" y="{top:.2}" width="{plot_w:.2}" height="{plot_h:.2}" fill="none" stroke="#000"/>"##
    );
    for i in 0..=4 {
        let fx = x0 + (x1 - x0) * i as f64 / 4.0;
        let fy = y0 + (y1 - y0) * i as f64 / 4.0;
        let (px, _) = map(fx, y0);
        let (_, py) = map(x0, fy);
        let _ = writeln!(
            out,
            r#"  <text x="{px:.2}" y="{:.2}" font-size="11" text-anchor="middle">{fx:.1}</text>"#,
            bottom + 15.0
        );
        let _ = writeln!(
            out,
            r#"  <text x="{:.2}" y="{:.2}" font-size="11" text-anchor="end">{fy:.1}</text>"#,
            MARGIN_LEFT - 5.0,
            py + 4.0
        );
    }
    let _ = writeln!(
        out,
        r#"  <text x="{:.2}" y="{:.2}" font-size="12" text-anchor="middle">travel time T (min)</text>"#,
        MARGIN_LEFT + plot_w / 2.0,
        bottom + 35.0
    );
    let _ = writeln!(
        out,
        r#"  <text x="15" y="{:.2}" font-size="12" text-anchor="middle" transform="rotate(-90 15 {:.2})">{}</text>"#,
        top + plot_h / 2.0,
        top + plot_h / 2.0,
        p.y_label
    );
    for &m in markers {
        if m >= x0 && m <= x1 {
            let (px, _) = map(m, y0);
            let _ = writeln!(
                out,
                r##"  <line x1="{px:.2}" y1="{top:.2}" x2="{px:.2}" y2="{bottom:.2}" stroke="#555" stroke-dasharray="4 3"/>"##
            );
        }
    }
    polyline(out, &p.mrd, &map, MRD_COLOR);
    polyline(out, &p.dmrd, &map, DMRD_COLOR);
    let _ = writeln!(
        out,
        r#"  <text x="{:.2}" y="{:.2}" font-size="11" fill="{MRD_COLOR}">MRD</text>"#,
        MARGIN_LEFT + 8.0,
        top + 14.0
    );
    let _ = writeln!(
        out,
        r#"  <text x="{:.2}" y="{:.2}" font-size="11" fill="{DMRD_COLOR}">DMRD</text>"#,
        MARGIN_LEFT + 48.0,
        top + 14.0
    );
}

/// Two stacked charts, optimal departure and optimal utility against
/// travel time, with dashed markers at the given travel times.
pub fn sweep_chart(rows: &[SweepRow], markers: &[f64]) -> String {
    let x_range = range(rows.iter().map(|r| r.t.minutes()));
    let x_range = if rows.len() > 1 {
        let lo = rows.first().map_or(0.0, |r| r.t.minutes());
        let hi = rows.last().map_or(1.0, |r| r.t.minutes());
        (lo, hi)
    } else {
        x_range
    };
    let departures = Panel {
        title: "Optimal departure time",
        y_label: "s* (min after midnight)",
        mrd: rows.iter().map(|r| (r.t.minutes(), r.s_star_mrd.minutes())).collect(),
        dmrd: rows.iter().map(|r| (r.t.minutes(), r.s_star_dmrd.minutes())).collect(),
    };
    let utilities = Panel {
        title: "Optimal gross utility",
        y_label: "GU*",
        mrd: rows.iter().map(|r| (r.t.minutes(), r.gu_star_mrd)).collect(),
        dmrd: rows.iter().map(|r| (r.t.minutes(), r.gu_star_dmrd)).collect(),
    };

    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{}" viewBox="0 0 {WIDTH} {}">"#,
        2.0 * PANEL_HEIGHT,
        2.0 * PANEL_HEIGHT
    );
    let _ = writeln!(out, r##"  <rect width="100%" height="100%" fill="#fff"/>"##);
    panel(&mut out, &departures, 0.0, x_range, markers);
    panel(&mut out, &utilities, PANEL_HEIGHT, x_range, markers);
    out.push_str("</svg>\n");
    out
}
