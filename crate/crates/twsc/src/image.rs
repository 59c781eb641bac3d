//! Planar floating-point images and 8-bit file I/O (PNG, binary PPM/PGM).
//!
//! Pixel planes hold raw intensities in `[0, 255]` as `f64`. Values are kept
//! unclamped through processing; clamping and quantization happen only when
//! an image is written back to an 8-bit file.

use std::io::{BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Result, TwscError};

/// A single-channel or RGB image stored as one row-major `f64` plane per channel.
#[derive(Debug, Clone, PartialEq)]
pub struct PlanarImage {
    height: usize,
    width: usize,
    planes: Vec<Vec<f64>>,
}

impl PlanarImage {
    /// Creates an image with every sample set to `fill`.
    pub fn new(height: usize, width: usize, channels: usize, fill: f64) -> Self {
        assert!(channels == 1 || channels == 3, "1 or 3 channels");
        Self {
            height,
            width,
            planes: vec![vec![fill; height * width]; channels],
        }
    }

    /// Builds an image from existing planes (each `height * width` long, row-major).
    pub fn from_planes(height: usize, width: usize, planes: Vec<Vec<f64>>) -> Result<Self> {
        if planes.is_empty() || (planes.len() != 1 && planes.len() != 3) {
            return Err(TwscError::InvalidParameter {
                name: "planes".into(),
                reason: format!("expected 1 or 3 planes, got {}", planes.len()),
            });
        }
        for (c, p) in planes.iter().enumerate() {
            if p.len() != height * width {
                return Err(TwscError::ShapeMismatch {
                    context: format!("plane {c}"),
                    expected: format!("{} samples", height * width),
                    actual: format!("{} samples", p.len()),
                });
            }
        }
        Ok(Self {
            height,
            width,
            planes,
        })
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn channels(&self) -> usize {
        self.planes.len()
    }

    pub fn is_color(&self) -> bool {
        self.planes.len() == 3
    }

    pub fn plane(&self, c: usize) -> &[f64] {
        &self.planes[c]
    }

    pub fn plane_mut(&mut self, c: usize) -> &mut [f64] {
        &mut self.planes[c]
    }

    #[inline]
    pub fn get(&self, c: usize, row: usize, col: usize) -> f64 {
        self.planes[c][row * self.width + col]
    }

    #[inline]
    pub fn set(&mut self, c: usize, row: usize, col: usize, value: f64) {
        self.planes[c][row * self.width + col] = value;
    }

    /// Collapses an RGB image to one plane by channel mean; grayscale images
    /// pass through unchanged.
    pub fn to_grayscale(&self) -> PlanarImage {
        if !self.is_color() {
            return self.clone();
        }
        let mut plane = vec![0.0; self.height * self.width];
        for (i, v) in plane.iter_mut().enumerate() {
            *v = (self.planes[0][i] + self.planes[1][i] + self.planes[2][i]) / 3.0;
        }
        PlanarImage {
            height: self.height,
            width: self.width,
            planes: vec![plane],
        }
    }

    /// Largest absolute per-sample difference between two same-shaped images.
    pub fn max_abs_diff(&self, other: &PlanarImage) -> f64 {
        assert_eq!(self.planes.len(), other.planes.len());
        assert_eq!((self.height, self.width), (other.height, other.width));
        let mut worst = 0.0f64;
        for (a, b) in self.planes.iter().zip(&other.planes) {
            for (x, y) in a.iter().zip(b) {
                worst = worst.max((x - y).abs());
            }
        }
        worst
    }

    /// Quantizes to 8-bit samples: clamp to `[0, 255]`, then round half away
    /// from zero.
    pub fn to_u8(&self) -> Vec<Vec<u8>> {
        self.planes
            .iter()
            .map(|p| p.iter().map(|&v| quantize(v)).collect())
            .collect()
    }
}

/// Clamp to `[0, 255]` and round half away from zero.
pub fn quantize(v: f64) -> u8 {
    let v = v.clamp(0.0, 255.0);
    // Non-negative after clamping, so half away from zero is plain +0.5 floor.
    (v + 0.5).floor() as u8
}

// ---------------------------------------------------------------------------
// File I/O
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum FileKind {
    Png,
    Ppm,
    Pgm,
}

fn kind_for(path: &Path) -> Result<FileKind> {
    match path
        .extension()
        .and_then(|e| e.to_str())
        .map(|e| e.to_ascii_lowercase())
        .as_deref()
    {
        Some("png") => Ok(FileKind::Png),
        Some("ppm") => Ok(FileKind::Ppm),
        Some("pgm") => Ok(FileKind::Pgm),
        other => Err(TwscError::UnsupportedFormat(format!(
            "{} (expected .png, .ppm, or .pgm)",
            other.unwrap_or("<none>")
        ))),
    }
}

/// Reads an 8-bit PNG or binary PPM/PGM file.
pub fn read_image(path: &Path) -> Result<PlanarImage> {
    match kind_for(path)? {
        FileKind::Png => read_png(path),
        FileKind::Ppm | FileKind::Pgm => read_pnm(path),
    }
}

/// Writes an image as 8-bit PNG or binary PPM/PGM, chosen by extension.
/// Samples are clamped and rounded half away from zero.
pub fn write_image(path: &Path, img: &PlanarImage) -> Result<()> {
    match kind_for(path)? {
        FileKind::Png => write_png(path, img),
        FileKind::Ppm => {
            if !img.is_color() {
                return Err(TwscError::UnsupportedFormat(
                    "cannot write grayscale image as .ppm; use .pgm".into(),
                ));
            }
            write_pnm(path, img)
        }
        FileKind::Pgm => {
            if img.is_color() {
                return Err(TwscError::UnsupportedFormat(
                    "cannot write color image as .pgm; use .ppm".into(),
                ));
            }
            write_pnm(path, img)
        }
    }
}

fn read_png(path: &Path) -> Result<PlanarImage> {
    let dynimg = image::open(path)?;
    let (w, h) = (dynimg.width() as usize, dynimg.height() as usize);
    match dynimg {
        image::DynamicImage::ImageLuma8(buf) => {
            let plane = buf.into_raw().into_iter().map(f64::from).collect();
            PlanarImage::from_planes(h, w, vec![plane])
        }
        other => {
            let rgb = other.to_rgb8();
            let raw = rgb.into_raw();
            let mut planes = vec![vec![0.0; h * w]; 3];
            for (i, px) in raw.chunks_exact(3).enumerate() {
                planes[0][i] = f64::from(px[0]);
                planes[1][i] = f64::from(px[1]);
                planes[2][i] = f64::from(px[2]);
            }
            PlanarImage::from_planes(h, w, planes)
        }
    }
}

fn write_png(path: &Path, img: &PlanarImage) -> Result<()> {
    let (h, w) = (img.height() as u32, img.width() as u32);
    let planes = img.to_u8();
    if img.is_color() {
        let mut raw = Vec::with_capacity(3 * planes[0].len());
        for ((r, g), b) in planes[0].iter().zip(&planes[1]).zip(&planes[2]) {
            raw.extend_from_slice(&[*r, *g, *b]);
        }
        let buf: image::RgbImage =
            image::ImageBuffer::from_raw(w, h, raw).expect("buffer sized from image dims");
        buf.save_with_format(path, image::ImageFormat::Png)?;
    } else {
        let buf: image::GrayImage =
            image::ImageBuffer::from_raw(w, h, planes[0].clone()).expect("buffer sized from dims");
        buf.save_with_format(path, image::ImageFormat::Png)?;
    }
    Ok(())
}

/// Binary PPM (P6) / PGM (P5) reader, maxval 255. Header tokens may be
/// separated by whitespace and `#` comments.
fn read_pnm(path: &Path) -> Result<PlanarImage> {
    let mut bytes = Vec::new();
    std::fs::File::open(path)?.read_to_end(&mut bytes)?;
    let mut pos = 0usize;

    let magic = next_token(&bytes, &mut pos)
        .ok_or_else(|| TwscError::UnsupportedFormat("truncated PNM header".into()))?;
    let channels = match magic.as_str() {
        "P5" => 1,
        "P6" => 3,
        m => {
            return Err(TwscError::UnsupportedFormat(format!(
                "PNM magic {m:?} (only binary P5/P6 supported)"
            )))
        }
    };
    let w: usize = parse_header_int(&bytes, &mut pos, "width")?;
    let h: usize = parse_header_int(&bytes, &mut pos, "height")?;
    let maxval: usize = parse_header_int(&bytes, &mut pos, "maxval")?;
    if maxval != 255 {
        return Err(TwscError::UnsupportedFormat(format!(
            "PNM maxval {maxval} (only 255 supported)"
        )));
    }
    // Exactly one whitespace byte separates the header from pixel data.
    pos += 1;
    let need = w * h * channels;
    if bytes.len() < pos + need {
        return Err(TwscError::UnsupportedFormat(format!(
            "PNM pixel data truncated: need {need} bytes, have {}",
            bytes.len().saturating_sub(pos)
        )));
    }
    let data = &bytes[pos..pos + need];
    let mut planes = vec![vec![0.0; w * h]; channels];
    for i in 0..w * h {
        for (c, plane) in planes.iter_mut().enumerate() {
            plane[i] = f64::from(data[i * channels + c]);
        }
    }
    PlanarImage::from_planes(h, w, planes)
}

fn next_token(bytes: &[u8], pos: &mut usize) -> Option<String> {
    // Skip whitespace and comment lines.
    loop {
        while *pos < bytes.len() && bytes[*pos].is_ascii_whitespace() {
            *pos += 1;
        }
        if *pos < bytes.len() && bytes[*pos] == b'#' {
            while *pos < bytes.len() && bytes[*pos] != b'\n' {
                *pos += 1;
            }
        } else {
            break;
        }
    }
    let start = *pos;
    while *pos < bytes.len() && !bytes[*pos].is_ascii_whitespace() {
        *pos += 1;
    }
    if *pos > start {
        Some(String::from_utf8_lossy(&bytes[start..*pos]).into_owned())
    } else {
        None
    }
}

fn parse_header_int(bytes: &[u8], pos: &mut usize, what: &str) -> Result<usize> {
    next_token(bytes, pos)
        .and_then(|t| t.parse().ok())
        .ok_or_else(|| TwscError::UnsupportedFormat(format!("bad PNM {what}")))
}

fn write_pnm(path: &Path, img: &PlanarImage) -> Result<()> {
    let planes = img.to_u8();
    let mut out = BufWriter::new(std::fs::File::create(path)?);
    let magic = if img.is_color() { "P6" } else { "P5" };
    write!(out, "{magic}\n{} {}\n255\n", img.width(), img.height())?;
    if img.is_color() {
        let mut raw = Vec::with_capacity(3 * planes[0].len());
        for ((r, g), b) in planes[0].iter().zip(&planes[1]).zip(&planes[2]) {
            raw.extend_from_slice(&[*r, *g, *b]);
        }
        out.write_all(&raw)?;
    } else {
        out.write_all(&planes[0])?;
    }
    Ok(())
}
