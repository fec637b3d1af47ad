//! CSV, JSON and SVG emitters for Kloosterman paths.

use std::io::Write;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::klooster::{e_q, inverse_table};
use crate::modring::PrimePowerModulus;
use crate::paths::{KloostermanPath, Variant};

/// Display-only decimation threshold for SVG output.
pub const SVG_MAX_POINTS: usize = 100_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExportFormat {
    Csv,
    Json,
    Svg,
}

impl std::str::FromStr for ExportFormat {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(ExportFormat::Csv),
            "json" => Ok(ExportFormat::Json),
            "svg" => Ok(ExportFormat::Svg),
            other => Err(Error::Usage(format!("unknown export format {other:?}"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SvgOptions {
    pub decimate: bool,
    pub max_points: usize,
}

impl Default for SvgOptions {
    fn default() -> Self {
        Self { decimate: true, max_points: SVG_MAX_POINTS }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PathDocument {
    pub p: u64,
    pub n: u32,
    pub a: u64,
    pub b: u64,
    pub variant: Variant,
    pub vertices: Vec<[f64; 2]>,
}

impl From<&KloostermanPath> for PathDocument {
    fn from(path: &KloostermanPath) -> Self {
        Self {
            p: path.modulus.p(),
            n: path.modulus.n(),
            a: path.a,
            b: path.b,
            variant: path.variant,
            vertices: path.vertices.iter().map(|z| [z.re, z.im]).collect(),
        }
    }
}

impl PathDocument {
    pub fn into_path(self) -> Result<KloostermanPath> {
        Ok(KloostermanPath {
            modulus: PrimePowerModulus::new(self.p, self.n)?,
            a: self.a,
            b: self.b,
            variant: self.variant,
            vertices: self.vertices.into_iter().map(|[re, im]| Complex64::new(re, im)).collect(),
        })
    }
}

/// Decimal rendering with 12 significant digits.
pub fn sig12(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return if x.is_finite() { "0".to_string() } else { x.to_string() };
    }
    let magnitude = x.abs().log10().floor() as i32;
    let decimals = (11 - magnitude).max(0) as usize;
    format!("{x:.decimals$}")
}

pub fn export_path<W: Write>(path: &KloostermanPath, format: ExportFormat, out: W) -> Result<()> {
    match format {
        ExportFormat::Csv => write_csv(path, out),
        ExportFormat::Json => write_json(path, out),
        ExportFormat::Svg => write_svg(path, out, SvgOptions::default()),
    }
}

pub fn write_csv<W: Write>(path: &KloostermanPath, mut out: W) -> Result<()> {
    writeln!(out, "index,re,im")?;
    for (i, z) in path.vertices.iter().enumerate() {
        writeln!(out, "{i},{},{}", sig12(z.re), sig12(z.im))?;
    }
    out.flush()?;
    Ok(())
}

pub fn write_json<W: Write>(path: &KloostermanPath, mut out: W) -> Result<()> {
    serde_json::to_writer(&mut out, &PathDocument::from(path)).map_err(|e| Error::Io(e.to_string()))?;
    out.flush()?;
    Ok(())
}

pub fn read_json(text: &str) -> Result<KloostermanPath> {
    let doc: PathDocument = serde_json::from_str(text).map_err(|e| Error::Usage(e.to_string()))?;
    doc.into_path()
}

pub fn write_svg<W: Write>(path: &KloostermanPath, mut out: W, opts: SvgOptions) -> Result<()> {
    let points: Vec<Complex64> = if opts.decimate && path.len() > opts.max_points && opts.max_points >= 2 {
        let last = path.len() - 1;
        (0..opts.max_points).map(|i| path.vertices[i * last / (opts.max_points - 1)]).collect()
    } else {
        path.vertices.clone()
    };
    let (mut x0, mut x1, mut y0, mut y1) = (f64::MAX, f64::MIN, f64::MAX, f64::MIN);
    for z in points.iter().chain(std::iter::once(&Complex64::new(0.0, 0.0))) {
        x0 = x0.min(z.re);
        x1 = x1.max(z.re);
        y0 = y0.min(-z.im);
        y1 = y1.max(-z.im);
    }
    let span = (x1 - x0).max(y1 - y0).max(1e-9);
    let margin = 0.05 * span;
    let (vx, vy) = (x0 - margin, y0 - margin);
    let (vw, vh) = (x1 - x0 + 2.0 * margin, y1 - y0 + 2.0 * margin);
    let stroke = 0.003 * span;
    writeln!(out, r#"<?xml version="1.0" encoding="UTF-8"?>"#)?;
    writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" viewBox="{} {} {} {}" width="800" height="{}">"#,
        sig12(vx),
        sig12(vy),
        sig12(vw),
        sig12(vh),
        (800.0 * vh / vw).round().max(1.0)
    )?;
    write!(
        out,
        r#"<polyline fill="none" stroke="black" stroke-width="{}" stroke-linejoin="round" points=""#,
        sig12(stroke)
    )?;
    for (i, z) in points.iter().enumerate() {
        if i > 0 {
            write!(out, " ")?;
        }
        write!(out, "{},{}", sig12(z.re), sig12(-z.im))?;
    }
    writeln!(out, r#""/>"#)?;
    writeln!(out, "</svg>")?;
    out.flush()?;
    Ok(())
}

/// CSV rows for the standard path without materializing the vertex array.
pub fn stream_standard_csv<W: Write>(m: &PrimePowerModulus, a: u64, b: u64, mut out: W) -> Result<u64> {
    if !m.is_unit(a) || !m.is_unit(b) {
        return Err(Error::NotAUnit { value: if m.is_unit(a) { b } else { a }, modulus: m.q() });
    }
    let q = m.q();
    let inv = inverse_table(m);
    let norm = 1.0 / (q as f64).sqrt();
    let mut acc = Complex64::new(0.0, 0.0);
    writeln!(out, "index,re,im")?;
    let mut rows = 0u64;
    for x in m.units() {
        acc += e_q(m.add(m.mul(a % q, x), m.mul(b % q, inv[x as usize])), q);
        let z = acc * norm;
        writeln!(out, "{rows},{},{}", sig12(z.re), sig12(z.im))?;
        rows += 1;
    }
    out.flush()?;
    Ok(rows)
}
