//! Self-contained log-log SVG of error tables.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::theory::{expected_rate, ErrorTable};

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 480.0;
const LEFT: f64 = 80.0;
const RIGHT: f64 = 170.0;
const TOP: f64 = 30.0;
const BOTTOM: f64 = 60.0;

const COLORS: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#e377c2", "#17becf",
];

struct Series {
    label: String,
    points: Vec<(f64, f64)>,
    rate: Option<f64>,
}

fn escape(text: &str) -> String {
    text.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

fn decade_range(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = values.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
        (lo.min(v), hi.max(v))
    });
    let (lo, hi) = (lo.floor(), hi.ceil());
    if hi > lo {
        (lo, hi)
    } else {
        (lo - 1.0, hi + 1.0)
    }
}

/// One polyline with markers per table and, for tables whose metadata
/// carries ϑ, a dashed line of slope `1/2 − ϑ` through the last point.
pub fn render_svg(tables: &[ErrorTable], title: &str) -> Result<String> {
    if tables.is_empty() {
        return Err(Error::invalid("nothing to plot: no tables given"));
    }
    let mut series = Vec::with_capacity(tables.len());
    for (i, t) in tables.iter().enumerate() {
        let points: Vec<(f64, f64)> = t
            .rows()
            .iter()
            .filter(|r| r.s > 0 && r.error > 0.0)
            .map(|r| ((r.s as f64).log10(), r.error.log10()))
            .collect();
        if points.is_empty() {
            return Err(Error::invalid(format!(
                "table {} has no positive rows to plot",
                i + 1
            )));
        }
        let label = match t.metadata.theta {
            Some(theta) => format!("ϑ = {theta}"),
            None => format!("table {}", i + 1),
        };
        let rate = t.metadata.theta.map(expected_rate).transpose()?;
        series.push(Series {
            label,
            points,
            rate,
        });
    }

    let (x0, x1) = decade_range(series.iter().flat_map(|s| s.points.iter().map(|p| p.0)));
    let (y0, y1) = decade_range(series.iter().flat_map(|s| s.points.iter().map(|p| p.1)));
    let pw = WIDTH - LEFT - RIGHT;
    let ph = HEIGHT - TOP - BOTTOM;
    let px = |x: f64| LEFT + (x - x0) / (x1 - x0) * pw;
    let py = |y: f64| TOP + (y1 - y) / (y1 - y0) * ph;

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(svg, "<title>{}</title>", escape(title));
    let _ = writeln!(svg, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        svg,
        r#"<defs><clipPath id="plot-area"><rect x="{LEFT}" y="{TOP}" width="{pw}" height="{ph}"/></clipPath></defs>"#
    );

    // axes with decade ticks
    let _ = writeln!(svg, r##"<g class="axes" stroke="#444" fill="none">"##);
    let _ = writeln!(
        svg,
        r#"<rect x="{LEFT}" y="{TOP}" width="{pw}" height="{ph}"/>"#
    );
    for d in (x0 as i32)..=(x1 as i32) {
        let x = px(d as f64);
        let _ = writeln!(
            svg,
            r#"<line x1="{x:.2}" y1="{:.2}" x2="{x:.2}" y2="{:.2}"/>"#,
            TOP + ph,
            TOP + ph + 5.0
        );
    }
    for d in (y0 as i32)..=(y1 as i32) {
        let y = py(d as f64);
        let _ = writeln!(
            svg,
            r#"<line x1="{:.2}" y1="{y:.2}" x2="{LEFT}" y2="{y:.2}"/>"#,
            LEFT - 5.0
        );
    }
    let _ = writeln!(svg, "</g>");
    let _ = writeln!(svg, r##"<g class="tick-labels" fill="#222">"##);
    for d in (x0 as i32)..=(x1 as i32) {
        let _ = writeln!(
            svg,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">1e{d}</text>"#,
            px(d as f64),
            TOP + ph + 20.0
        );
    }
    for d in (y0 as i32)..=(y1 as i32) {
        let _ = writeln!(
            svg,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="end">1e{d}</text>"#,
            LEFT - 8.0,
            py(d as f64) + 4.0
        );
    }
    let _ = writeln!(
        svg,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">s</text>"#,
        LEFT + pw / 2.0,
        HEIGHT - 15.0
    );
    let _ = writeln!(
        svg,
        r#"<text x="20" y="{:.2}" text-anchor="middle" transform="rotate(-90 20 {:.2})">truncation error</text>"#,
        TOP + ph / 2.0,
        TOP + ph / 2.0
    );
    let _ = writeln!(svg, "</g>");

    let _ = writeln!(svg, r#"<g clip-path="url(#plot-area)">"#);
    for (i, s) in series.iter().enumerate() {
        let color = COLORS[i % COLORS.len()];
        let pts: Vec<String> = s
            .points
            .iter()
            .map(|&(x, y)| format!("{:.2},{:.2}", px(x), py(y)))
            .collect();
        let _ = writeln!(
            svg,
            r#"<polyline class="data" points="{}" fill="none" stroke="{color}" stroke-width="1.5"/>"#,
            pts.join(" ")
        );
        for &(x, y) in &s.points {
            let _ = writeln!(
                svg,
                r#"<circle class="marker" cx="{:.2}" cy="{:.2}" r="3" fill="{color}"/>"#,
                px(x),
                py(y)
            );
        }
        if let Some(rate) = s.rate {
            let &(xl, yl) = s.points.last().unwrap();
            let xf = s.points[0].0;
            let yf = yl + rate * (xf - xl);
            let _ = writeln!(
                svg,
                r#"<line class="reference" x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="{color}" stroke-width="1" stroke-dasharray="6 4"/>"#,
                px(xf),
                py(yf),
                px(xl),
                py(yl)
            );
        }
    }
    let _ = writeln!(svg, "</g>");

    let _ = writeln!(svg, r#"<g class="legend">"#);
    let lx = LEFT + pw + 15.0;
    for (i, s) in series.iter().enumerate() {
        let color = COLORS[i % COLORS.len()];
        let y = TOP + 15.0 + 20.0 * i as f64;
        let _ = writeln!(
            svg,
            r#"<line x1="{lx:.2}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}" stroke="{color}" stroke-width="1.5"/>"#,
            lx + 20.0
        );
        let rate = s.rate.map(|r| format!(" (rate {r})")).unwrap_or_default();
        let _ = writeln!(
            svg,
            r#"<text class="legend-entry" x="{:.2}" y="{:.2}">{}{}</text>"#,
            lx + 26.0,
            y + 4.0,
            escape(&s.label),
            rate
        );
    }
    let _ = writeln!(svg, "</g>");
    svg.push_str("</svg>\n");
    Ok(svg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::theory::{ErrorRow, TableMetadata};

    fn power_law(theta: Option<f64>, rate: f64) -> ErrorTable {
        let rows = (1..=9)
            .map(|k| ErrorRow {
                s: 1 << k,
                error: 0.3 * ((1 << k) as f64).powf(rate),
            })
            .collect();
        ErrorTable::new(
            rows,
            TableMetadata {
                theta,
                ..TableMetadata::default()
            },
        )
        .unwrap()
    }

    fn count(doc: &roxmltree::Document, class: &str) -> usize {
        doc.descendants()
            .filter(|n| n.attribute("class") == Some(class))
            .count()
    }

    #[test]
    fn single_table_structure() {
        let svg = render_svg(&[power_law(Some(2.0), -1.5)], "t").unwrap();
        let doc = roxmltree::Document::parse(&svg).unwrap();
        assert_eq!(count(&doc, "data"), 1);
        assert_eq!(count(&doc, "reference"), 1);
        let dashed = doc
            .descendants()
            .filter(|n| n.attribute("stroke-dasharray").is_some())
            .count();
        assert_eq!(dashed, 1);
        assert_eq!(count(&doc, "marker"), 9);
    }

    #[test]
    fn legend_follows_metadata() {
        let tables: Vec<ErrorTable> = [1.5, 2.0, 3.0]
            .iter()
            .map(|&t| power_law(Some(t), 0.5 - t))
            .collect();
        let svg = render_svg(&tables, "three & more").unwrap();
        let doc = roxmltree::Document::parse(&svg).unwrap();
        assert_eq!(count(&doc, "data"), 3);
        let legend: Vec<String> = doc
            .descendants()
            .filter(|n| n.attribute("class") == Some("legend-entry"))
            .map(|n| n.text().unwrap().to_string())
            .collect();
        assert_eq!(legend.len(), 3);
        for (entry, theta) in legend.iter().zip(["1.5", "2", "3"]) {
            assert!(entry.starts_with(&format!("ϑ = {theta}")), "{entry}");
        }
    }

    #[test]
    fn no_reference_without_theta() {
        let svg = render_svg(&[power_law(None, -1.0)], "t").unwrap();
        let doc = roxmltree::Document::parse(&svg).unwrap();
        assert_eq!(count(&doc, "reference"), 0);
    }

    #[test]
    fn empty_inputs_rejected() {
        assert!(render_svg(&[], "t").is_err());
        let empty = ErrorTable::new(vec![], TableMetadata::default()).unwrap();
        assert!(render_svg(&[empty], "t").is_err());
    }
}
