//! Atomic file writes and self-contained SVG heatmaps.

use std::f64::consts::PI;
use std::fmt::Write as _;
use std::fs;
use std::io::{self, Write};
use std::path::Path;

/// Writes to a sibling temporary file, syncs it and renames it into place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> io::Result<()> {
    let dir = path.parent().filter(|d| !d.as_os_str().is_empty()).unwrap_or(Path::new("."));
    let name = path.file_name().ok_or_else(|| io::Error::new(io::ErrorKind::InvalidInput, "no file name"))?;
    let tmp = dir.join(format!(".{}.tmp", name.to_string_lossy()));
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path)
}

/// Creates the directory and checks that a file can be written into it.
pub fn ensure_writable(dir: &Path) -> io::Result<()> {
    fs::create_dir_all(dir)?;
    write_atomic(&dir.join(".write-probe"), b"")?;
    fs::remove_file(dir.join(".write-probe"))
}

/// Fixed color ramp, dark to bright: value 0 maps to the first stop and 1 to the last.
pub const RAMP: [[u8; 3]; 5] = [[13, 8, 135], [126, 3, 168], [204, 71, 120], [248, 149, 64], [240, 249, 33]];

/// Color for `t` in `[0, 1]`, linear between ramp stops.
pub fn ramp(t: f64) -> String {
    let t = if t.is_finite() { t.clamp(0.0, 1.0) } else { 0.0 };
    let x = t * (RAMP.len() - 1) as f64;
    let i = (x.floor() as usize).min(RAMP.len() - 2);
    let f = x - i as f64;
    let c: Vec<u8> = (0..3).map(|k| (RAMP[i][k] as f64 * (1.0 - f) + RAMP[i + 1][k] as f64 * f).round() as u8).collect();
    format!("#{:02x}{:02x}{:02x}", c[0], c[1], c[2])
}

/// Decades of dynamic range shown by the log-scaled heatmap.
pub const LOG_DECADES: f64 = 4.0;

/// Log-scaled heatmap of a cell array (row-major, `x` fastest, `y` up).
///
/// `None` marks cells outside the domain. Blocks of cells are averaged so
/// that at most `max_side` squares are drawn per axis.
pub fn heatmap_svg(values: &[Option<f64>], nx: usize, ny: usize, max_side: usize, title: &str) -> String {
    let b = nx.max(ny).div_ceil(max_side.max(1)).max(1);
    let (bx, by) = (nx.div_ceil(b), ny.div_ceil(b));
    let mut blocks = vec![None; bx * by];
    for j in 0..by {
        for i in 0..bx {
            let (mut s, mut c) = (0.0, 0usize);
            for jj in j * b..((j + 1) * b).min(ny) {
                for ii in i * b..((i + 1) * b).min(nx) {
                    if let Some(v) = values[jj * nx + ii] {
                        s += v;
                        c += 1;
                    }
                }
            }
            if c > 0 {
                blocks[j * bx + i] = Some(s / c as f64);
            }
        }
    }
    let vmax = blocks.iter().flatten().copied().fold(0.0, f64::max);
    let px = 4usize;
    let (w, h) = (bx * px, by * px);
    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{}" viewBox="0 0 {w} {}">"#,
        h + 20,
        h + 20
    );
    let _ = writeln!(svg, r#"<title>{}</title>"#, escape(title));
    let _ = writeln!(svg, r##"<rect width="{w}" height="{h}" fill="#ffffff"/>"##);
    for j in 0..by {
        for i in 0..bx {
            if let Some(v) = blocks[j * bx + i] {
                let t = if vmax > 0.0 && v > 0.0 { 1.0 + (v / vmax).log10() / LOG_DECADES } else { 0.0 };
                let _ = writeln!(
                    svg,
                    r#"<rect x="{}" y="{}" width="{px}" height="{px}" fill="{}"/>"#,
                    i * px,
                    (by - 1 - j) * px,
                    ramp(t)
                );
            }
        }
    }
    let _ = writeln!(
        svg,
        r#"<text x="2" y="{}" font-family="monospace" font-size="11">max {vmax:.4e}, {LOG_DECADES} decades</text>"#,
        h + 14
    );
    svg.push_str("</svg>\n");
    svg
}

/// Polar heatmap of a sampled surface over the unit disk: one annular
/// sector per sample, linear in value from the minimum to the maximum.
pub fn polar_svg(samples: &[(usize, usize, f64)], rings: usize, angles: usize, offset: f64, title: &str) -> String {
    let size = 400.0;
    let c = size / 2.0;
    let scale = size / 2.0 - 10.0;
    let lo = samples.iter().map(|s| s.2).fold(f64::INFINITY, f64::min);
    let hi = samples.iter().map(|s| s.2).fold(f64::NEG_INFINITY, f64::max);
    let span = if hi > lo { hi - lo } else { 1.0 };
    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{size}" height="{}" viewBox="0 0 {size} {}">"#,
        size + 20.0,
        size + 20.0
    );
    let _ = writeln!(svg, r#"<title>{}</title>"#, escape(title));
    let pt = |r: f64, t: f64| (c + scale * r * t.cos(), c - scale * r * t.sin());
    let dr = 1.0 / rings as f64;
    let dt = 2.0 * PI / angles as f64;
    for &(ring, angle, v) in samples {
        let color = ramp((v - lo) / span);
        if ring == 0 {
            let _ = writeln!(svg, r#"<circle cx="{c}" cy="{c}" r="{:.3}" fill="{color}"/>"#, 0.5 * dr * scale);
            continue;
        }
        let r0 = (ring as f64 - 0.5) * dr;
        let r1 = ((ring as f64 + 0.5) * dr).min(1.0);
        let t = offset + angle as f64 * dt;
        let (t0, t1) = (t - 0.5 * dt, t + 0.5 * dt);
        let (a, bp, cp, d) = (pt(r0, t0), pt(r1, t0), pt(r1, t1), pt(r0, t1));
        let _ = writeln!(
            svg,
            r#"<path d="M{:.3},{:.3} L{:.3},{:.3} A{:.3},{:.3} 0 0 0 {:.3},{:.3} L{:.3},{:.3} A{:.3},{:.3} 0 0 1 {:.3},{:.3} Z" fill="{color}"/>"#,
            a.0,
            a.1,
            bp.0,
            bp.1,
            r1 * scale,
            r1 * scale,
            cp.0,
            cp.1,
            d.0,
            d.1,
            r0 * scale,
            r0 * scale,
            a.0,
            a.1
        );
    }
    let _ = writeln!(
        svg,
        r#"<text x="2" y="{}" font-family="monospace" font-size="11">min {lo:.4e} max {hi:.4e}</text>"#,
        size + 14.0
    );
    svg.push_str("</svg>\n");
    svg
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}
