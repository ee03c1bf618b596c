//! Bit-exact raster file I/O.
//!
//! Two on-disk formats: binary PGM (`P5`, maxval 255) and 8-bit grayscale
//! PNG. Intensities map linearly, byte 0 to 0.0 and byte 255 to 1.0 on
//! load, `round(v * 255)` on save, so a load/save/load cycle reproduces the
//! source bytes exactly. Writers emit headers in one canonical form: PGM as
//! `P5\n<w> <h>\n255\n` with no comments (comments are tolerated on read).

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::image::{BinaryMask, Foreground, GrayImage};

/// Supported on-disk formats.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ImageFormat {
    Pgm,
    Png,
}

impl ImageFormat {
    /// Picks the format from a file extension (`.pgm` or `.png`, any case).
    pub fn from_path(path: &Path) -> Result<ImageFormat> {
        match path
            .extension()
            .and_then(|e| e.to_str())
            .map(|e| e.to_ascii_lowercase())
            .as_deref()
        {
            Some("pgm") => Ok(ImageFormat::Pgm),
            Some("png") => Ok(ImageFormat::Png),
            other => Err(Error::MalformedHeader {
                path: path.to_path_buf(),
                reason: format!(
                    "cannot infer format from extension {:?} (expected .pgm or .png)",
                    other.unwrap_or("")
                ),
            }),
        }
    }
}

/// Loads an 8-bit grayscale image and normalizes intensities to `[0, 1]`.
pub fn load_image(path: &Path, format: ImageFormat) -> Result<GrayImage> {
    let bytes = read_file(path)?;
    let (width, height, pixels) = match format {
        ImageFormat::Pgm => decode_pgm(path, &bytes)?,
        ImageFormat::Png => decode_png(path, &bytes)?,
    };
    let data = pixels.iter().map(|&b| b as f32 / 255.0).collect();
    GrayImage::new(width, height, data)
}

/// Saves an image, quantizing each intensity by `round(v * 255)`.
pub fn save_image(img: &GrayImage, path: &Path, format: ImageFormat) -> Result<()> {
    let pixels: Vec<u8> = img
        .data()
        .iter()
        .map(|&v| (v * 255.0).round() as u8)
        .collect();
    write_pixels(path, format, img.width(), img.height(), &pixels)
}

/// Saves a mask rendered in raw-fingerprint polarity: ridge pixels dark (0),
/// valley pixels bright (255). A `Ridge`-tagged mask therefore writes its
/// foreground as 0, a `Valley`-tagged one as 255. `invert` flips the
/// rendering.
pub fn save_mask(mask: &BinaryMask, path: &Path, format: ImageFormat, invert: bool) -> Result<()> {
    let fg_byte = match (mask.foreground(), invert) {
        (Foreground::Ridge, false) | (Foreground::Valley, true) => 0u8,
        (Foreground::Valley, false) | (Foreground::Ridge, true) => 255u8,
    };
    let bg_byte = 255 - fg_byte;
    let pixels: Vec<u8> = mask
        .data()
        .iter()
        .map(|&v| if v { fg_byte } else { bg_byte })
        .collect();
    write_pixels(path, format, mask.width(), mask.height(), &pixels)
}

/// Reads a mask file written by [`save_mask`]: dark pixels (< 128) are taken
/// as ridge foreground. `invert` reads the opposite rendering.
pub fn load_mask(path: &Path, format: ImageFormat, invert: bool) -> Result<BinaryMask> {
    let img = load_image(path, format)?;
    let data = img.data().iter().map(|&v| (v < 0.5) != invert).collect();
    BinaryMask::new(img.width(), img.height(), data, Foreground::Ridge)
}

fn read_file(path: &Path) -> Result<Vec<u8>> {
    let file = File::open(path).map_err(|e| match e.kind() {
        std::io::ErrorKind::NotFound => Error::NotFound(path.to_path_buf()),
        _ => Error::IoFailure {
            path: path.to_path_buf(),
            source: e,
        },
    })?;
    let mut bytes = Vec::new();
    BufReader::new(file)
        .read_to_end(&mut bytes)
        .map_err(|e| Error::IoFailure {
            path: path.to_path_buf(),
            source: e,
        })?;
    Ok(bytes)
}

fn write_pixels(
    path: &Path,
    format: ImageFormat,
    width: usize,
    height: usize,
    pixels: &[u8],
) -> Result<()> {
    let io_err = |e: std::io::Error| Error::IoFailure {
        path: path.to_path_buf(),
        source: e,
    };
    let file = File::create(path).map_err(io_err)?;
    let mut writer = BufWriter::new(file);
    match format {
        ImageFormat::Pgm => {
            write!(writer, "P5\n{} {}\n255\n", width, height).map_err(io_err)?;
            writer.write_all(pixels).map_err(io_err)?;
        }
        ImageFormat::Png => {
            let mut encoder = png::Encoder::new(&mut writer, width as u32, height as u32);
            encoder.set_color(png::ColorType::Grayscale);
            encoder.set_depth(png::BitDepth::Eight);
            let mut png_writer = encoder.write_header().map_err(|e| Error::IoFailure {
                path: path.to_path_buf(),
                source: std::io::Error::other(e.to_string()),
            })?;
            png_writer
                .write_image_data(pixels)
                .map_err(|e| Error::IoFailure {
                    path: path.to_path_buf(),
                    source: std::io::Error::other(e.to_string()),
                })?;
        }
    }
    writer.flush().map_err(io_err)
}

/// PGM token scanner: skips whitespace and `#` comments between header
/// fields, as produced by common tools.
struct PgmCursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> PgmCursor<'a> {
    fn skip_whitespace_and_comments(&mut self) {
        while self.pos < self.bytes.len() {
            let b = self.bytes[self.pos];
            if b.is_ascii_whitespace() {
                self.pos += 1;
            } else if b == b'#' {
                while self.pos < self.bytes.len() && self.bytes[self.pos] != b'\n' {
                    self.pos += 1;
                }
            } else {
                break;
            }
        }
    }

    fn read_number(&mut self) -> Option<u64> {
        self.skip_whitespace_and_comments();
        let start = self.pos;
        while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        if self.pos == start {
            return None;
        }
        std::str::from_utf8(&self.bytes[start..self.pos])
            .ok()?
            .parse()
            .ok()
    }
}

fn decode_pgm(path: &Path, bytes: &[u8]) -> Result<(usize, usize, Vec<u8>)> {
    let malformed = |reason: &str| Error::MalformedHeader {
        path: path.to_path_buf(),
        reason: reason.to_string(),
    };
    if bytes.len() < 2 {
        return Err(malformed("file shorter than a magic number"));
    }
    match &bytes[..2] {
        b"P5" => {}
        b"P6" => {
            return Err(Error::UnsupportedColor {
                path: path.to_path_buf(),
                detail: "P6 (color PPM) magic".to_string(),
            })
        }
        other => {
            return Err(malformed(&format!(
                "magic {:?} is not binary PGM (P5)",
                String::from_utf8_lossy(other)
            )))
        }
    }

    let mut cursor = PgmCursor { bytes, pos: 2 };
    let width = cursor
        .read_number()
        .ok_or_else(|| malformed("missing width"))? as usize;
    let height = cursor
        .read_number()
        .ok_or_else(|| malformed("missing height"))? as usize;
    let maxval = cursor
        .read_number()
        .ok_or_else(|| malformed("missing maxval"))?;
    if maxval != 255 {
        return Err(Error::UnsupportedDepth {
            path: path.to_path_buf(),
            detail: format!("maxval {}", maxval),
        });
    }
    if width == 0 || height == 0 {
        return Err(malformed("zero width or height"));
    }

    // Exactly one whitespace byte separates the maxval from the raster.
    if cursor.pos >= bytes.len() || !bytes[cursor.pos].is_ascii_whitespace() {
        return Err(malformed("missing whitespace before raster data"));
    }
    let raster_start = cursor.pos + 1;
    let expected = width * height;
    let raster = &bytes[raster_start..];
    if raster.len() < expected {
        return Err(malformed(&format!(
            "raster truncated: expected {} bytes, found {}",
            expected,
            raster.len()
        )));
    }
    Ok((width, height, raster[..expected].to_vec()))
}

fn decode_png(path: &Path, bytes: &[u8]) -> Result<(usize, usize, Vec<u8>)> {
    let decoder = png::Decoder::new(bytes);
    let mut reader = decoder.read_info().map_err(|e| Error::MalformedHeader {
        path: path.to_path_buf(),
        reason: e.to_string(),
    })?;
    let info = reader.info();
    if info.color_type != png::ColorType::Grayscale {
        return Err(Error::UnsupportedColor {
            path: path.to_path_buf(),
            detail: format!("{:?}", info.color_type),
        });
    }
    if info.bit_depth != png::BitDepth::Eight {
        return Err(Error::UnsupportedDepth {
            path: path.to_path_buf(),
            detail: format!("{:?}", info.bit_depth),
        });
    }
    let mut buf = vec![0u8; reader.output_buffer_size()];
    let frame = reader
        .next_frame(&mut buf)
        .map_err(|e| Error::MalformedHeader {
            path: path.to_path_buf(),
            reason: e.to_string(),
        })?;
    let (width, height) = (frame.width as usize, frame.height as usize);
    buf.truncate(frame.buffer_size());
    Ok((width, height, buf))
}
