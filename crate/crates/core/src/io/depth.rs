//! 16-bit PNG and PFM depth files.
//!
//! PNG stores integer depth in a declared unit (millimeters by convention),
//! with 0 meaning "no measurement". PFM stores 32-bit floats, meters by
//! convention; non-finite and non-positive values mean "no measurement".

use std::fmt;
use std::io::Cursor;
use std::path::Path;
use std::str::FromStr;

use image::{DynamicImage, ImageBuffer, ImageFormat, Luma};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{DepthMap, MaskedGrid};
use crate::scalar::Scalar;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DepthUnit {
    Mm,
    M,
}

impl DepthUnit {
    /// Divisor turning a stored value into meters.
    fn per_meter(self) -> f64 {
        match self {
            DepthUnit::Mm => 1000.0,
            DepthUnit::M => 1.0,
        }
    }

    /// Unit a file of this format uses unless declared otherwise.
    pub fn conventional_for(format: DepthFormat) -> Self {
        match format {
            DepthFormat::Png => DepthUnit::Mm,
            DepthFormat::Pfm => DepthUnit::M,
        }
    }
}

impl FromStr for DepthUnit {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "mm" => Ok(DepthUnit::Mm),
            "m" => Ok(DepthUnit::M),
            other => Err(Error::Format(format!("unknown depth unit {other:?}"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DepthFormat {
    Png,
    Pfm,
}

impl DepthFormat {
    pub fn extension(self) -> &'static str {
        match self {
            DepthFormat::Png => "png",
            DepthFormat::Pfm => "pfm",
        }
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        match path.extension().and_then(|e| e.to_str()).map(str::to_ascii_lowercase).as_deref() {
            Some("png") => Ok(DepthFormat::Png),
            Some("pfm") => Ok(DepthFormat::Pfm),
            _ => Err(Error::Format(format!("cannot infer depth format of {}", path.display()))),
        }
    }

    /// Sniffs the format from the leading bytes.
    pub fn detect(bytes: &[u8]) -> Option<Self> {
        if bytes.starts_with(b"\x89PNG\r\n\x1a\n") {
            Some(DepthFormat::Png)
        } else if bytes.starts_with(b"Pf") || bytes.starts_with(b"PF") {
            Some(DepthFormat::Pfm)
        } else {
            None
        }
    }
}

impl fmt::Display for DepthFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.extension())
    }
}

impl FromStr for DepthFormat {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "png" => Ok(DepthFormat::Png),
            "pfm" => Ok(DepthFormat::Pfm),
            other => Err(Error::Format(format!("unknown depth format {other:?}"))),
        }
    }
}

fn corrupt(path: &Path, reason: impl Into<String>) -> Error {
    Error::CorruptFile { path: path.to_path_buf(), reason: reason.into() }
}

/// Reads a PNG or PFM depth file, converting `unit` to meters.
pub fn read_depth<T: Scalar>(path: impl AsRef<Path>, unit: DepthUnit) -> Result<DepthMap<T>> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::io_at(path, e))?;
    decode_depth(&bytes, unit, path)
}

/// Decodes an in-memory depth file; `origin` only labels errors.
pub fn decode_depth<T: Scalar>(bytes: &[u8], unit: DepthUnit, origin: &Path) -> Result<DepthMap<T>> {
    match DepthFormat::detect(bytes) {
        Some(DepthFormat::Png) => decode_png(bytes, unit, origin),
        Some(DepthFormat::Pfm) => decode_pfm(bytes, unit, origin),
        None => Err(Error::Format(format!("{} is neither PNG nor PFM", origin.display()))),
    }
}

fn decode_png<T: Scalar>(bytes: &[u8], unit: DepthUnit, origin: &Path) -> Result<DepthMap<T>> {
    let img = image::load_from_memory_with_format(bytes, ImageFormat::Png)
        .map_err(|e| corrupt(origin, e.to_string()))?;
    let (w, h) = (img.width() as usize, img.height() as usize);
    let raw: Vec<u16> = match img {
        DynamicImage::ImageLuma16(buf) => buf.into_raw(),
        DynamicImage::ImageLuma8(buf) => buf.into_raw().into_iter().map(u16::from).collect(),
        other => {
            return Err(Error::Format(format!(
                "{}: depth PNG must be single-channel grayscale, found {:?}",
                origin.display(),
                other.color()
            )))
        }
    };
    let per_meter = unit.per_meter();
    let values = raw.into_iter().map(|v| T::lit(f64::from(v) / per_meter)).collect();
    DepthMap::from_values(w, h, values)
}

/// Splits `n` whitespace-separated header tokens off the front, consuming one
/// whitespace byte after the last.
fn pfm_header(bytes: &[u8], n: usize) -> Option<(Vec<&str>, usize)> {
    let mut tokens = Vec::with_capacity(n);
    let mut pos = 0;
    while tokens.len() < n {
        while pos < bytes.len() && bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        let start = pos;
        while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if start == pos {
            return None;
        }
        tokens.push(std::str::from_utf8(&bytes[start..pos]).ok()?);
    }
    (pos < bytes.len()).then_some((tokens, pos + 1))
}

fn decode_pfm<T: Scalar>(bytes: &[u8], unit: DepthUnit, origin: &Path) -> Result<DepthMap<T>> {
    let (tokens, data_start) = pfm_header(bytes, 4).ok_or_else(|| corrupt(origin, "truncated PFM header"))?;
    if tokens[0] != "Pf" {
        return Err(Error::Format(format!("{}: color PFM ({}) is not a depth map", origin.display(), tokens[0])));
    }
    let parse = |s: &str, what: &str| s.parse::<f64>().map_err(|_| corrupt(origin, format!("bad PFM {what} {s:?}")));
    let (w, h, scale) = (parse(tokens[1], "width")?, parse(tokens[2], "height")?, parse(tokens[3], "scale")?);
    if w < 0.0 || h < 0.0 || w.fract() != 0.0 || h.fract() != 0.0 || scale == 0.0 || !scale.is_finite() {
        return Err(corrupt(origin, "invalid PFM dimensions or scale"));
    }
    let (w, h) = (w as usize, h as usize);
    let little_endian = scale < 0.0;
    let data = &bytes[data_start..];
    let needed = w * h * 4;
    if data.len() < needed {
        return Err(corrupt(origin, format!("PFM payload has {} bytes, expected {needed}", data.len())));
    }

    let per_meter = unit.per_meter();
    let mut values = vec![T::zero(); w * h];
    // Scanlines are stored bottom to top.
    for (row, chunk) in data[..needed].chunks_exact(w * 4).enumerate() {
        let y = h - 1 - row;
        for (x, b) in chunk.chunks_exact(4).enumerate() {
            let b: [u8; 4] = b.try_into().expect("chunks_exact(4)");
            let v = if little_endian { f32::from_le_bytes(b) } else { f32::from_be_bytes(b) };
            values[y * w + x] = if per_meter == 1.0 { T::lit(f64::from(v)) } else { T::lit(f64::from(v) / per_meter) };
        }
    }
    DepthMap::from_values(w, h, values)
}

/// Encodes a depth map. PNG values are rounded to whole `unit`s.
pub fn encode_depth<T: Scalar>(d: &DepthMap<T>, format: DepthFormat, unit: DepthUnit) -> Result<Vec<u8>> {
    if d.is_empty() {
        return Err(Error::Shape("cannot encode an empty depth map".into()));
    }
    match format {
        DepthFormat::Png => encode_png(d, unit),
        DepthFormat::Pfm => Ok(encode_pfm(d, unit)),
    }
}

fn encode_png<T: Scalar>(d: &DepthMap<T>, unit: DepthUnit) -> Result<Vec<u8>> {
    let per_meter = unit.per_meter();
    let max_meters = f64::from(u16::MAX) / per_meter;
    let mut raw = vec![0u16; d.len()];
    for (i, v) in d.iter_valid() {
        let q = (v.as_f64() * per_meter).round();
        if q > f64::from(u16::MAX) {
            return Err(Error::Range(format!(
                "depth {} m exceeds the 16-bit PNG range of {max_meters} m; write PFM instead",
                v.as_f64()
            )));
        }
        if q < 1.0 {
            return Err(Error::Range(format!(
                "depth {} m rounds to zero in 16-bit PNG and would read back invalid; write PFM instead",
                v.as_f64()
            )));
        }
        raw[i] = q as u16;
    }
    let buf: ImageBuffer<Luma<u16>, Vec<u16>> =
        ImageBuffer::from_raw(d.width() as u32, d.height() as u32, raw).expect("buffer matches dimensions");
    let mut out = Cursor::new(Vec::new());
    buf.write_to(&mut out, ImageFormat::Png).map_err(|e| Error::Format(e.to_string()))?;
    Ok(out.into_inner())
}

fn encode_pfm<T: Scalar>(d: &DepthMap<T>, unit: DepthUnit) -> Vec<u8> {
    let (w, h) = (d.width(), d.height());
    let mut out = format!("Pf\n{w} {h}\n-1\n").into_bytes();
    out.reserve(w * h * 4);
    let per_meter = unit.per_meter();
    for y in (0..h).rev() {
        for x in 0..w {
            let v = d.at(x, y).map_or(0.0, |v| (v.as_f64() * per_meter) as f32);
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    out
}

/// Writes `d` to `path`. PFM round-trips exactly for values representable in
/// `f32`; PNG in millimeters round-trips within 0.5 mm.
pub fn write_depth<T: Scalar>(d: &DepthMap<T>, path: impl AsRef<Path>, format: DepthFormat, unit: DepthUnit) -> Result<()> {
    let bytes = encode_depth(d, format, unit)?;
    std::fs::write(path, bytes)?;
    Ok(())
}

/// Reads any grayscale-convertible image as intensities in `[0, 1]`.
pub fn read_gray<T: Scalar>(path: impl AsRef<Path>) -> Result<MaskedGrid<T>> {
    let path = path.as_ref();
    let img = image::open(path).map_err(|e| match e {
        image::ImageError::IoError(io) => Error::io_at(path, io),
        image::ImageError::Unsupported(u) => Error::Format(format!("{}: {u}", path.display())),
        other => corrupt(path, other.to_string()),
    })?;
    let luma = img.to_luma32f();
    let (w, h) = (luma.width() as usize, luma.height() as usize);
    MaskedGrid::dense(w, h, luma.into_raw().into_iter().map(|v| T::lit(f64::from(v))).collect())
}
