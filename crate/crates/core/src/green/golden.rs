//! Plain-text golden corpus of kernel values.
//!
//! One record per line, whitespace separated:
//!
//! ```text
//! <kind> a b k  x y z  xp yp zp  re00 im00 re01 im01 ... re22 im22
//! ```
//!
//! `kind` is one of `freespace`, `imagesum`, `modesum`, `self`; the tensor is
//! row-major. For `freespace` the geometry columns are ignored and the
//! displacement is `(x - xp, y - yp, z - zp)`. Numbers are written with 17
//! significant digits. Lines starting with `#` are comments; the first line
//! must be the version header.

use std::fmt::Write as _;
use std::path::Path;

use nalgebra::Matrix3;
use num_complex::Complex64;

use super::{
    freespace_dyadic, waveguide_dyadic_imagesum, waveguide_dyadic_modesum, waveguide_self_term,
    GreenTensor, KernelOptions, Point3,
};
use crate::error::{Error, Result};
use crate::geometry::WaveguideGeometry;

pub const HEADER: &str = "# wgcdm-golden v1";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GoldenKind {
    FreeSpace,
    ImageSum,
    ModeSum,
    SelfTerm,
}

impl GoldenKind {
    fn as_str(&self) -> &'static str {
        match self {
            GoldenKind::FreeSpace => "freespace",
            GoldenKind::ImageSum => "imagesum",
            GoldenKind::ModeSum => "modesum",
            GoldenKind::SelfTerm => "self",
        }
    }

    fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "freespace" => GoldenKind::FreeSpace,
            "imagesum" => GoldenKind::ImageSum,
            "modesum" => GoldenKind::ModeSum,
            "self" => GoldenKind::SelfTerm,
            _ => return None,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GoldenRecord {
    pub kind: GoldenKind,
    pub geom: WaveguideGeometry,
    pub k: f64,
    pub r: Point3,
    pub rp: Point3,
    pub tensor: GreenTensor,
}

impl GoldenRecord {
    /// Evaluate this record's inputs with the crate's kernels.
    pub fn evaluate(&self, opts: &KernelOptions) -> Result<GreenTensor> {
        match self.kind {
            GoldenKind::FreeSpace => freespace_dyadic(&(self.r - self.rp), self.k),
            GoldenKind::ImageSum => waveguide_dyadic_imagesum(&self.r, &self.rp, &self.geom, self.k, opts),
            GoldenKind::ModeSum => waveguide_dyadic_modesum(&self.r, &self.rp, &self.geom, self.k, opts),
            GoldenKind::SelfTerm => waveguide_self_term(&self.r, &self.geom, self.k, opts),
        }
    }
}

pub fn format_corpus(records: &[GoldenRecord]) -> String {
    let mut out = String::new();
    out.push_str(HEADER);
    out.push('\n');
    for rec in records {
        out.push_str(rec.kind.as_str());
        let scalars = [
            rec.geom.a, rec.geom.b, rec.k, rec.r.x, rec.r.y, rec.r.z, rec.rp.x, rec.rp.y, rec.rp.z,
        ];
        for v in scalars {
            let _ = write!(out, " {v:.16e}");
        }
        for i in 0..3 {
            for j in 0..3 {
                let z = rec.tensor.get(i, j);
                let _ = write!(out, " {:.16e} {:.16e}", z.re, z.im);
            }
        }
        out.push('\n');
    }
    out
}

pub fn parse_corpus(text: &str) -> Result<Vec<GoldenRecord>> {
    let mut lines = text.lines();
    match lines.next() {
        Some(h) if h.trim() == HEADER => {}
        other => {
            return Err(Error::Parse(format!(
                "golden corpus: expected header `{HEADER}`, found {other:?}"
            )))
        }
    }
    let mut records = Vec::new();
    for (lineno, line) in lines.enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let bad = |what: &str| Error::Parse(format!("golden corpus line {}: {what}", lineno + 2));
        let mut fields = line.split_whitespace();
        let kind = fields
            .next()
            .and_then(GoldenKind::parse)
            .ok_or_else(|| bad("unknown record kind"))?;
        let nums: Vec<f64> = fields
            .map(|f| f.parse::<f64>().map_err(|_| bad("bad number")))
            .collect::<Result<_>>()?;
        if nums.len() != 27 {
            return Err(bad("expected 27 numeric fields"));
        }
        let tensor = Matrix3::from_fn(|i, j| {
            let o = 9 + 2 * (3 * i + j);
            Complex64::new(nums[o], nums[o + 1])
        });
        records.push(GoldenRecord {
            kind,
            // the free-space rows carry placeholder sizes
            geom: WaveguideGeometry { a: nums[0], b: nums[1] },
            k: nums[2],
            r: Point3::new(nums[3], nums[4], nums[5]),
            rp: Point3::new(nums[6], nums[7], nums[8]),
            tensor: GreenTensor(tensor),
        });
    }
    Ok(records)
}

pub fn read_corpus(path: &Path) -> Result<Vec<GoldenRecord>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_corpus(&text)
}

pub fn write_corpus(path: &Path, records: &[GoldenRecord]) -> Result<()> {
    std::fs::write(path, format_corpus(records)).map_err(|e| Error::io(path, e))
}
