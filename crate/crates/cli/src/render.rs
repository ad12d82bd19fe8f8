//! Deterministic SVG drawing: one density track per player, with an optional
//! division overlay.

use std::fmt::Write;

use cake_core::model::{Coverage, Division, Instance};
use cake_core::rational::{to_f64, Rational};

const LEFT: f64 = 60.0;
const PLOT: f64 = 700.0;
const TOP: f64 = 40.0;
const TRACK: f64 = 64.0;
const GAP: f64 = 16.0;
const BAND: f64 = 28.0;
const PALETTE: [&str; 8] = [
    "#4e79a7", "#f28e2b", "#e15759", "#76b7b2", "#59a14f", "#edc948", "#b07aa1", "#9c755f",
];

fn x_of(v: &Rational) -> f64 {
    LEFT + PLOT * to_f64(v)
}

pub fn render_svg(instance: &Instance, division: Option<&Division>) -> anyhow::Result<String> {
    let n = instance.n();
    let tracks_bottom = TOP + n as f64 * (TRACK + GAP);
    let height = tracks_bottom + if division.is_some() { BAND + GAP + 24.0 } else { 24.0 };
    let width = LEFT + PLOT + 40.0;
    let mut s = String::new();
    writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width:.0}" height="{height:.0}" viewBox="0 0 {width:.0} {height:.0}" font-family="sans-serif" font-size="12">"#
    )?;
    s.push_str(concat!(
        r#"<defs><pattern id="hatch" width="6" height="6" patternUnits="userSpaceOnUse" patternTransform="rotate(45)">"#,
        r##"<line x1="0" y1="0" x2="0" y2="6" stroke="#888" stroke-width="2"/></pattern></defs>"##,
        "\n"
    ));
    writeln!(s, r#"<rect width="{width:.0}" height="{height:.0}" fill="white"/>"#)?;
    writeln!(s, r#"<text x="{LEFT:.0}" y="20">{}</text>"#, escape(&instance.label))?;

    if let Some(d) = division {
        if let Coverage::Partial(leftovers) = d.classify()? {
            for gap in &leftovers {
                let (x0, x1) = (x_of(gap.left()), x_of(gap.right()));
                writeln!(
                    s,
                    r#"<rect x="{x0:.2}" y="{TOP:.2}" width="{:.2}" height="{:.2}" fill="url(#hatch)" opacity="0.5"/>"#,
                    x1 - x0,
                    tracks_bottom - TOP + BAND + GAP
                )?;
            }
        }
    }

    for (i, v) in instance.players().iter().enumerate() {
        let top = TOP + i as f64 * (TRACK + GAP);
        let base = top + TRACK;
        let color = PALETTE[i % PALETTE.len()];
        let peak = to_f64(&v.max_density());
        writeln!(
            s,
            r#"<text x="{:.0}" y="{:.2}" text-anchor="end">{}</text>"#,
            LEFT - 12.0,
            base - TRACK / 2.0 + 4.0,
            i + 1
        )?;
        if let Some(d) = division {
            let piece = d.piece(i);
            if !piece.is_empty() {
                let (x0, x1) = (x_of(piece.left()), x_of(piece.right()));
                writeln!(
                    s,
                    r#"<rect x="{x0:.2}" y="{top:.2}" width="{:.2}" height="{TRACK:.2}" fill="{color}" opacity="0.12"/>"#,
                    x1 - x0
                )?;
            }
        }
        let bps = v.breakpoints();
        for (c, density) in v.densities().iter().enumerate() {
            let h = if peak > 0.0 {
                (TRACK - 8.0) * to_f64(density) / peak
            } else {
                0.0
            };
            if h <= 0.0 {
                continue;
            }
            let (x0, x1) = (x_of(&bps[c]), x_of(&bps[c + 1]));
            writeln!(
                s,
                r#"<rect x="{x0:.2}" y="{:.2}" width="{:.2}" height="{h:.2}" fill="{color}"/>"#,
                base - h,
                (x1 - x0).max(0.5)
            )?;
        }
        writeln!(
            s,
            r##"<line x1="{LEFT:.0}" y1="{base:.2}" x2="{:.0}" y2="{base:.2}" stroke="#333"/>"##,
            LEFT + PLOT
        )?;
    }

    if let Some(d) = division {
        let band = tracks_bottom;
        let mut edges: Vec<&Rational> = Vec::new();
        for (i, piece) in d.pieces().iter().enumerate() {
            if piece.is_empty() {
                continue;
            }
            let (x0, x1) = (x_of(piece.left()), x_of(piece.right()));
            writeln!(
                s,
                r##"<rect x="{x0:.2}" y="{band:.2}" width="{:.2}" height="{BAND:.2}" fill="{}" stroke="#333"/>"##,
                x1 - x0,
                PALETTE[i % PALETTE.len()]
            )?;
            writeln!(
                s,
                r#"<text x="{:.2}" y="{:.2}" text-anchor="middle" fill="white">{}</text>"#,
                (x0 + x1) / 2.0,
                band + BAND / 2.0 + 4.0,
                i + 1
            )?;
            edges.push(piece.left());
            edges.push(piece.right());
        }
        edges.sort();
        edges.dedup();
        for e in edges {
            let x = x_of(e);
            writeln!(
                s,
                r##"<line x1="{x:.2}" y1="{TOP:.2}" x2="{x:.2}" y2="{:.2}" stroke="#333" stroke-dasharray="3,3"/>"##,
                band + BAND
            )?;
        }
    }

    let axis = height - 8.0;
    for (label, at) in [("0", 0.0), ("1/2", 0.5), ("1", 1.0)] {
        writeln!(
            s,
            r#"<text x="{:.2}" y="{axis:.2}" text-anchor="middle">{label}</text>"#,
            LEFT + PLOT * at
        )?;
    }
    s.push_str("</svg>\n");
    Ok(s)
}

fn escape(text: &str) -> String {
    text.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}
