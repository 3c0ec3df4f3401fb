//! Grayscale image file I/O: 8- and 16-bit PNG and binary PGM (P5).
//!
//! Pixels are processed in double precision; on write they are quantized
//! by round-half-away-from-zero and clipped to the format range. Color or
//! alpha inputs are rejected — convert externally.

use std::fmt;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use despeckle_core::Image;

/// Sample depth of a file, and with it the metric peak.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BitDepth {
    Eight,
    Sixteen,
}

impl BitDepth {
    pub fn peak(self) -> f64 {
        match self {
            BitDepth::Eight => 255.0,
            BitDepth::Sixteen => 65535.0,
        }
    }
}

/// An image together with the depth it was stored at.
#[derive(Debug, Clone)]
pub struct LoadedImage {
    pub image: Image,
    pub depth: BitDepth,
}

#[derive(Debug)]
pub enum IoError {
    Read { path: PathBuf, source: io::Error },
    Write { path: PathBuf, source: io::Error },
    Decode { path: PathBuf, detail: String },
    /// Not grayscale: color, palette or alpha channels present.
    ColorInput { path: PathBuf },
    UnsupportedFormat { path: PathBuf },
}

impl fmt::Display for IoError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            IoError::Read { path, source } => write!(f, "cannot read {}: {source}", path.display()),
            IoError::Write { path, source } => {
                write!(f, "cannot write {}: {source}", path.display())
            }
            IoError::Decode { path, detail } => {
                write!(f, "cannot decode {}: {detail}", path.display())
            }
            IoError::ColorInput { path } => write!(
                f,
                "{} is not grayscale; convert color images externally",
                path.display()
            ),
            IoError::UnsupportedFormat { path } => write!(
                f,
                "{}: unsupported format (expected PNG or binary PGM)",
                path.display()
            ),
        }
    }
}

impl std::error::Error for IoError {}

/// Reads a PNG or PGM grayscale image, sniffing the magic bytes.
pub fn read_image(path: &Path) -> Result<LoadedImage, IoError> {
    let bytes = fs::read(path).map_err(|source| IoError::Read {
        path: path.to_path_buf(),
        source,
    })?;
    if bytes.starts_with(b"\x89PNG") {
        read_png(path, &bytes)
    } else if bytes.starts_with(b"P5") {
        read_pgm(path, &bytes)
    } else {
        Err(IoError::UnsupportedFormat {
            path: path.to_path_buf(),
        })
    }
}

/// Quantizes and writes; the extension picks the container
/// (`.png` or `.pgm`).
pub fn write_image(path: &Path, image: &Image, depth: BitDepth) -> Result<(), IoError> {
    let ext = path
        .extension()
        .and_then(|e| e.to_str())
        .map(|e| e.to_ascii_lowercase());
    match ext.as_deref() {
        Some("png") => write_png(path, image, depth),
        Some("pgm") => write_pgm(path, image, depth),
        _ => Err(IoError::UnsupportedFormat {
            path: path.to_path_buf(),
        }),
    }
}

/// Round-half-away-from-zero, clipped to `[0, peak]`.
pub fn quantize_sample(v: f64, peak: f64) -> u16 {
    v.round().clamp(0.0, peak) as u16
}

/// The image as it will be stored: every pixel quantized to the grid of
/// the target depth. Metrics on this match metrics on a written-then-read
/// file exactly.
pub fn quantized(image: &Image, depth: BitDepth) -> Image {
    let peak = depth.peak();
    image.map(|v| quantize_sample(v, peak) as f64)
}

fn read_png(path: &Path, bytes: &[u8]) -> Result<LoadedImage, IoError> {
    let decode_err = |detail: String| IoError::Decode {
        path: path.to_path_buf(),
        detail,
    };
    let decoder = png::Decoder::new(bytes);
    let mut reader = decoder.read_info().map_err(|e| decode_err(e.to_string()))?;
    let mut buf = vec![0u8; reader.output_buffer_size()];
    let info = reader
        .next_frame(&mut buf)
        .map_err(|e| decode_err(e.to_string()))?;
    if info.color_type != png::ColorType::Grayscale {
        return Err(IoError::ColorInput {
            path: path.to_path_buf(),
        });
    }
    let (w, h) = (info.width as usize, info.height as usize);
    match info.bit_depth {
        png::BitDepth::Eight => {
            let data = &buf[..w * h];
            let pixels = data.iter().map(|&b| b as f64).collect();
            Ok(LoadedImage {
                image: Image::from_pixels(w, h, pixels),
                depth: BitDepth::Eight,
            })
        }
        png::BitDepth::Sixteen => {
            let data = &buf[..w * h * 2];
            let pixels = data
                .chunks_exact(2)
                .map(|c| u16::from_be_bytes([c[0], c[1]]) as f64)
                .collect();
            Ok(LoadedImage {
                image: Image::from_pixels(w, h, pixels),
                depth: BitDepth::Sixteen,
            })
        }
        other => Err(decode_err(format!("unsupported PNG bit depth {other:?}"))),
    }
}

fn write_png(path: &Path, image: &Image, depth: BitDepth) -> Result<(), IoError> {
    let write_err = |source: io::Error| IoError::Write {
        path: path.to_path_buf(),
        source,
    };
    let file = fs::File::create(path).map_err(write_err)?;
    let mut encoder = png::Encoder::new(
        io::BufWriter::new(file),
        image.width() as u32,
        image.height() as u32,
    );
    encoder.set_color(png::ColorType::Grayscale);
    encoder.set_depth(match depth {
        BitDepth::Eight => png::BitDepth::Eight,
        BitDepth::Sixteen => png::BitDepth::Sixteen,
    });
    let mut writer = encoder
        .write_header()
        .map_err(|e| IoError::Decode {
            path: path.to_path_buf(),
            detail: e.to_string(),
        })?;
    let peak = depth.peak();
    let data: Vec<u8> = match depth {
        BitDepth::Eight => image
            .pixels()
            .iter()
            .map(|&v| quantize_sample(v, peak) as u8)
            .collect(),
        BitDepth::Sixteen => image
            .pixels()
            .iter()
            .flat_map(|&v| quantize_sample(v, peak).to_be_bytes())
            .collect(),
    };
    writer.write_image_data(&data).map_err(|e| IoError::Decode {
        path: path.to_path_buf(),
        detail: e.to_string(),
    })?;
    Ok(())
}

fn read_pgm(path: &Path, bytes: &[u8]) -> Result<LoadedImage, IoError> {
    let decode_err = |detail: &str| IoError::Decode {
        path: path.to_path_buf(),
        detail: detail.to_string(),
    };
    let mut pos = 2usize; // past "P5"
    let mut fields = [0usize; 3];
    for field in &mut fields {
        // skip whitespace and '#' comments
        loop {
            match bytes.get(pos) {
                Some(b) if b.is_ascii_whitespace() => pos += 1,
                Some(b'#') => {
                    while pos < bytes.len() && bytes[pos] != b'\n' {
                        pos += 1;
                    }
                }
                Some(_) => break,
                None => return Err(decode_err("truncated PGM header")),
            }
        }
        let start = pos;
        while pos < bytes.len() && bytes[pos].is_ascii_digit() {
            pos += 1;
        }
        if pos == start {
            return Err(decode_err("malformed PGM header field"));
        }
        *field = std::str::from_utf8(&bytes[start..pos])
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| decode_err("malformed PGM header field"))?;
    }
    let [w, h, maxval] = fields;
    if w == 0 || h == 0 {
        return Err(decode_err("zero PGM dimensions"));
    }
    if maxval == 0 || maxval > 65535 {
        return Err(decode_err("PGM maxval out of range"));
    }
    // single whitespace byte separates header and raster
    if !bytes.get(pos).is_some_and(|b| b.is_ascii_whitespace()) {
        return Err(decode_err("missing PGM raster separator"));
    }
    pos += 1;
    let raster = &bytes[pos..];
    if maxval <= 255 {
        if raster.len() < w * h {
            return Err(decode_err("truncated PGM raster"));
        }
        let pixels = raster[..w * h].iter().map(|&b| b as f64).collect();
        Ok(LoadedImage {
            image: Image::from_pixels(w, h, pixels),
            depth: BitDepth::Eight,
        })
    } else {
        if raster.len() < w * h * 2 {
            return Err(decode_err("truncated PGM raster"));
        }
        let pixels = raster[..w * h * 2]
            .chunks_exact(2)
            .map(|c| u16::from_be_bytes([c[0], c[1]]) as f64)
            .collect();
        Ok(LoadedImage {
            image: Image::from_pixels(w, h, pixels),
            depth: BitDepth::Sixteen,
        })
    }
}

fn write_pgm(path: &Path, image: &Image, depth: BitDepth) -> Result<(), IoError> {
    let peak = depth.peak();
    let mut out = format!("P5\n{} {}\n{}\n", image.width(), image.height(), peak as u32)
        .into_bytes();
    match depth {
        BitDepth::Eight => {
            out.extend(image.pixels().iter().map(|&v| quantize_sample(v, peak) as u8));
        }
        BitDepth::Sixteen => {
            for &v in image.pixels() {
                out.extend(quantize_sample(v, peak).to_be_bytes());
            }
        }
    }
    fs::write(path, out).map_err(|source| IoError::Write {
        path: path.to_path_buf(),
        source,
    })
}
