//! Minimal SVG line plots for profile inspection.

use std::fmt::Write as _;

use crate::correlation::CorrelationProfile;
use crate::gosnr::{GosnrProfile, ReferenceProfile, Validity};

const W: f64 = 720.0;
const H: f64 = 420.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 20.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 50.0;

struct Series<'a> {
    label: &'a str,
    color: &'a str,
    dashed: bool,
    points: Vec<(f64, f64)>,
}

struct Frame {
    x0: f64,
    x1: f64,
    y0: f64,
    y1: f64,
}

impl Frame {
    fn fit(series: &[Series<'_>]) -> Frame {
        let pts = series.iter().flat_map(|s| s.points.iter()).filter(|p| p.1.is_finite());
        let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
        for (x, y) in pts {
            x0 = x0.min(*x);
            x1 = x1.max(*x);
            y0 = y0.min(*y);
            y1 = y1.max(*y);
        }
        if !x0.is_finite() {
            return Frame { x0: 0.0, x1: 1.0, y0: 0.0, y1: 1.0 };
        }
        if x1 <= x0 {
            x1 = x0 + 1.0;
        }
        let pad = ((y1 - y0) * 0.05).max(1e-12);
        Frame { x0, x1, y0: y0 - pad, y1: y1 + pad }
    }

    fn px(&self, x: f64) -> f64 {
        LEFT + (x - self.x0) / (self.x1 - self.x0) * (W - LEFT - RIGHT)
    }

    fn py(&self, y: f64) -> f64 {
        H - BOTTOM - (y - self.y0) / (self.y1 - self.y0) * (H - TOP - BOTTOM)
    }
}

fn render(title: &str, y_label: &str, series: &[Series<'_>]) -> String {
    let f = Frame::fit(series);
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
    let _ = writeln!(s, r#"<text x="{}" y="24" text-anchor="middle" font-size="14">{}</text>"#, W / 2.0, escape(title));
    let (bx, by) = (LEFT, H - BOTTOM);
    let _ = writeln!(
        s,
        r#"<path d="M{bx} {TOP} L{bx} {by} L{} {by}" stroke="black" fill="none"/>"#,
        W - RIGHT
    );
    for i in 0..=5 {
        let xv = f.x0 + (f.x1 - f.x0) * i as f64 / 5.0;
        let yv = f.y0 + (f.y1 - f.y0) * i as f64 / 5.0;
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{}</text>"#,
            f.px(xv),
            by + 18.0,
            tick(xv)
        );
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="end">{}</text>"#,
            bx - 6.0,
            f.py(yv) + 4.0,
            tick(yv)
        );
    }
    let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="middle">z (km)</text>"#, (LEFT + W - RIGHT) / 2.0, H - 10.0);
    let _ = writeln!(
        s,
        r#"<text x="16" y="{0}" text-anchor="middle" transform="rotate(-90 16 {0})">{1}</text>"#,
        (TOP + H - BOTTOM) / 2.0,
        escape(y_label)
    );
    for (i, ser) in series.iter().enumerate() {
        let pts: Vec<String> = ser
            .points
            .iter()
            .filter(|p| p.1.is_finite())
            .map(|(x, y)| format!("{:.2},{:.2}", f.px(*x), f.py(*y)))
            .collect();
        let dash = if ser.dashed { r#" stroke-dasharray="6 4""# } else { "" };
        if pts.len() == 1 {
            let (x, y) = pts[0].split_once(',').unwrap_or(("0", "0"));
            let _ = writeln!(s, r#"<circle cx="{x}" cy="{y}" r="4" fill="{}"/>"#, ser.color);
        } else {
            let _ = writeln!(
                s,
                r#"<polyline points="{}" fill="none" stroke="{}" stroke-width="1.5"{dash}/>"#,
                pts.join(" "),
                ser.color
            );
        }
        let ly = TOP + 14.0 * i as f64 + 6.0;
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="{ly:.1}" fill="{}" text-anchor="end">{}</text>"#,
            W - RIGHT - 4.0,
            ser.color,
            escape(ser.label)
        );
    }
    s.push_str("</svg>\n");
    s
}

fn tick(v: f64) -> String {
    if v != 0.0 && (v.abs() < 1e-2 || v.abs() >= 1e4) {
        format!("{v:.2e}")
    } else {
        format!("{v:.1}")
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// gOSNR profile (unflagged points) with optional ASE reference and an
/// end-of-link marker.
pub fn gosnr_plot(
    title: &str,
    g: &GosnrProfile,
    reference: Option<&ReferenceProfile>,
    end_marker: Option<(f64, f64)>,
) -> String {
    let mut series = vec![Series {
        label: "estimated gOSNR",
        color: "#1f5fbf",
        dashed: false,
        points: g
            .z_grid_km
            .iter()
            .zip(&g.gosnr_db)
            .zip(&g.validity)
            .map(|((z, v), ok)| (*z, if *ok == Validity::Ok { *v } else { f64::NAN }))
            .collect(),
    }];
    if let Some(r) = reference {
        series.push(Series {
            label: "ASE reference",
            color: "black",
            dashed: true,
            points: r.z_grid_km.iter().copied().zip(r.osnr_db.iter().copied()).collect(),
        });
    }
    if let Some(p) = end_marker {
        series.push(Series {
            label: "simulated end-of-link",
            color: "#c03020",
            dashed: false,
            points: vec![p],
        });
    }
    render(title, "gOSNR (dB, 12.5 GHz)", &series)
}

/// PPE and NPPE correlation profiles.
pub fn profile_plot(title: &str, ppe: &CorrelationProfile, nppe: &CorrelationProfile) -> String {
    let pts = |p: &CorrelationProfile| p.z_grid_km.iter().copied().zip(p.values.iter().copied()).collect();
    render(
        title,
        "correlation",
        &[
            Series { label: "PPE", color: "#1f5fbf", dashed: false, points: pts(ppe) },
            Series { label: "NPPE", color: "#c03020", dashed: false, points: pts(nppe) },
        ],
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::correlation::{Convention, ProfileKind};
    use num_complex::Complex64;

    #[test]
    fn plots_are_well_formed() {
        let z = vec![0.0, 10.0, 20.0];
        let p = CorrelationProfile::from_blocks(
            z.clone(),
            vec![vec![Complex64::new(1.0, 0.0), Complex64::new(2.0, 0.0), Complex64::new(1.5, 0.0)]],
            ProfileKind::Ppe,
            Convention::Real,
        )
        .unwrap();
        let svg = profile_plot("a < b", &p, &p);
        assert!(svg.starts_with("<svg") && svg.trim_end().ends_with("</svg>"));
        assert!(svg.contains("a &lt; b"));
        assert_eq!(svg.matches("<polyline").count(), 2);
        let g = GosnrProfile {
            z_grid_km: z,
            gosnr_db: vec![40.0, 27.0, 26.0],
            validity: vec![Validity::RatioLeOne, Validity::Ok, Validity::Ok],
            r_factor: 5.44,
            f_baud: 68e9,
        };
        let svg = gosnr_plot("g", &g, None, Some((20.0, 25.0)));
        assert!(svg.contains("<circle"));
    }
}
