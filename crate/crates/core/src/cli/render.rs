use std::fmt::Write as _;

use super::config::RenderOptions;

/// Fraction of the half-canvas taken by the unit circle.
const DISK_FILL: f64 = 0.95;

fn escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&apos;"),
            c => out.push(c),
        }
    }
    out
}

/// SVG scatter plot of 2-d Poincaré coordinates inside the unit disk.
/// `edges` index into `points`.
pub fn render_svg(ids: &[String], points: &[[f64; 2]], edges: &[(usize, usize)], opts: &RenderOptions) -> String {
    let size = f64::from(opts.size);
    let c = size / 2.0;
    let scale = c * DISK_FILL;
    let at = |p: &[f64; 2]| (c + scale * p[0], c - scale * p[1]);

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{0}" height="{0}" viewBox="0 0 {0} {0}">"#,
        opts.size
    );
    let _ = writeln!(
        s,
        r#"<circle class="boundary" cx="{c:.3}" cy="{c:.3}" r="{scale:.3}" fill="none" stroke="black" stroke-width="1"/>"#
    );
    if opts.edges {
        let _ = writeln!(s, r##"<g class="edges" stroke="#999999" stroke-width="0.5">"##);
        for &(a, b) in edges {
            let (x1, y1) = at(&points[a]);
            let (x2, y2) = at(&points[b]);
            let _ = writeln!(s, r#"<line x1="{x1:.3}" y1="{y1:.3}" x2="{x2:.3}" y2="{y2:.3}"/>"#);
        }
        s.push_str("</g>\n");
    }
    let _ = writeln!(s, r##"<g class="points" fill="#1f4e9c">"##);
    for (id, p) in ids.iter().zip(points) {
        let (x, y) = at(p);
        let _ = writeln!(
            s,
            r#"<circle class="point" cx="{x:.3}" cy="{y:.3}" r="{:.3}"><title>{}</title></circle>"#,
            opts.radius,
            escape(id)
        );
    }
    s.push_str("</g>\n");
    if opts.labels {
        let _ = writeln!(s, r#"<g class="labels" font-family="sans-serif" font-size="10">"#);
        for (id, p) in ids.iter().zip(points) {
            let (x, y) = at(p);
            let dx = opts.radius + 2.0;
            let _ = writeln!(s, r#"<text x="{:.3}" y="{y:.3}">{}</text>"#, x + dx, escape(id));
        }
        s.push_str("</g>\n");
    }
    s.push_str("</svg>\n");
    s
}
