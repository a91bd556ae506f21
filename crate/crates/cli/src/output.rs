use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use serde::Serialize;

use crate::job::Failure;

/// Writes `bytes` to `dir/name` through a temporary file in `dir` and a rename,
/// so readers never see a partial artifact.
pub fn write_atomic(dir: &Path, name: &str, bytes: &[u8]) -> Result<PathBuf, Failure> {
    let io = |e: std::io::Error| Failure::Parse(format!("cannot write {}: {e}", dir.join(name).display()));
    fs::create_dir_all(dir).map_err(io)?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(io)?;
    tmp.write_all(bytes).map_err(io)?;
    tmp.as_file().sync_all().map_err(io)?;
    let target = dir.join(name);
    tmp.persist(&target).map_err(|e| io(e.error))?;
    Ok(target)
}

pub fn write_json<V: Serialize>(dir: &Path, name: &str, value: &V) -> Result<PathBuf, Failure> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| Failure::Parse(e.to_string()))?;
    text.push('\n');
    write_atomic(dir, name, text.as_bytes())
}

/// CSV with every number in `{:.16e}` (17 significant digits).
pub struct Csv {
    text: String,
}

impl Csv {
    pub fn new(header: &[&str]) -> Self {
        Self { text: header.join(",") + "\n" }
    }

    pub fn row(&mut self, values: &[f64]) {
        for (k, v) in values.iter().enumerate() {
            if k > 0 {
                self.text.push(',');
            }
            write!(self.text, "{v:.16e}").unwrap();
        }
        self.text.push('\n');
    }

    pub fn into_bytes(self) -> Vec<u8> {
        self.text.into_bytes()
    }
}

/// Layer of an [`Svg`] overlay.
pub enum Layer<'a> {
    Polyline { points: &'a [Complex64], colour: &'a str, width: f64 },
    Dots { points: &'a [Complex64], colour: &'a str, radius: f64 },
}

/// Static overlay of curves and point sets in the complex plane, imaginary
/// axis pointing up.
pub struct Svg;

impl Svg {
    const SIZE: f64 = 640.0;
    const MARGIN: f64 = 24.0;

    pub fn render(title: &str, layers: &[Layer]) -> String {
        let all = layers.iter().flat_map(|l| match l {
            Layer::Polyline { points, .. } | Layer::Dots { points, .. } => points.iter(),
        });
        let (mut lo, mut hi) = (Complex64::new(f64::INFINITY, f64::INFINITY), Complex64::new(f64::NEG_INFINITY, f64::NEG_INFINITY));
        for z in all {
            lo = Complex64::new(lo.re.min(z.re), lo.im.min(z.im));
            hi = Complex64::new(hi.re.max(z.re), hi.im.max(z.im));
        }
        if !lo.re.is_finite() {
            (lo, hi) = (Complex64::new(-1.0, -1.0), Complex64::new(1.0, 1.0));
        }
        let span = (hi.re - lo.re).max(hi.im - lo.im).max(1e-9);
        let scale = (Self::SIZE - 2.0 * Self::MARGIN) / span;
        let map = |z: &Complex64| (Self::MARGIN + (z.re - lo.re) * scale, Self::SIZE - Self::MARGIN - (z.im - lo.im) * scale);

        let mut s = String::new();
        writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{0}" height="{0}" viewBox="0 0 {0} {0}">"#, Self::SIZE).unwrap();
        writeln!(s, "<title>{title}</title>").unwrap();
        writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#).unwrap();
        for layer in layers {
            match layer {
                Layer::Polyline { points, colour, width } => {
                    let pts: Vec<String> = points.iter().map(map).map(|(x, y)| format!("{x:.3},{y:.3}")).collect();
                    writeln!(s, r#"<polyline fill="none" stroke="{colour}" stroke-width="{width}" points="{}"/>"#, pts.join(" ")).unwrap();
                }
                Layer::Dots { points, colour, radius } => {
                    for (x, y) in points.iter().map(map) {
                        writeln!(s, r#"<circle cx="{x:.3}" cy="{y:.3}" r="{radius}" fill="{colour}"/>"#).unwrap();
                    }
                }
            }
        }
        s.push_str("</svg>\n");
        s
    }
}
