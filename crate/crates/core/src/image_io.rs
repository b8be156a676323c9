//! Grayscale images and the PGM container.
//!
//! PGM is the only container: binary P5 on write, P5 or ASCII P2 on read,
//! maxval fixed at 255. The codec is bit-exact so golden-file comparisons
//! stay meaningful.

use ndarray::Array2;

use crate::error::{Error, Result};

/// 8-bit grayscale image, row-major, top-left origin.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Image {
    width: usize,
    height: usize,
    pixels: Vec<u8>,
}

impl Image {
    pub fn new(width: usize, height: usize, pixels: Vec<u8>) -> Result<Self> {
        if pixels.len() != width * height {
            return Err(Error::DimensionMismatch(format!(
                "pixel buffer of {} for a {width}x{height} image",
                pixels.len()
            )));
        }
        Ok(Self { width, height, pixels })
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> u8) -> Self {
        let mut pixels = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                pixels.push(f(x, y));
            }
        }
        Self { width, height, pixels }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn pixels(&self) -> &[u8] {
        &self.pixels
    }

    pub fn get(&self, x: usize, y: usize) -> u8 {
        self.pixels[y * self.width + x]
    }

    /// Real-valued copy for the transform pipeline.
    pub fn to_matrix(&self) -> Array2<f64> {
        Array2::from_shape_fn((self.height, self.width), |(y, x)| {
            f64::from(self.get(x, y))
        })
    }
}

/// Decode a binary (P5) or ASCII (P2) PGM with maxval 255.
pub fn load_pgm(bytes: &[u8]) -> Result<Image> {
    let mut cursor = 0usize;

    let magic = next_token(bytes, &mut cursor)
        .ok_or_else(|| Error::MalformedHeader("missing magic".into()))?;
    let binary = match magic.as_str() {
        "P5" => true,
        "P2" => false,
        other => return Err(Error::MalformedHeader(format!("magic {other:?}"))),
    };

    let width = next_usize(bytes, &mut cursor, "width")?;
    let height = next_usize(bytes, &mut cursor, "height")?;
    let maxval = next_usize(bytes, &mut cursor, "maxval")?;
    if maxval != 255 {
        return Err(Error::UnsupportedMaxval(maxval as u32));
    }
    if width == 0 || height == 0 {
        return Err(Error::MalformedHeader("zero dimension".into()));
    }
    let count = width * height;

    let pixels = if binary {
        // Exactly one whitespace byte separates the header from the raster.
        match bytes.get(cursor) {
            Some(b) if b.is_ascii_whitespace() => cursor += 1,
            _ => return Err(Error::MalformedHeader("missing raster separator".into())),
        }
        let raster = &bytes[cursor.min(bytes.len())..];
        if raster.len() < count {
            return Err(Error::TruncatedPayload { expected: count, got: raster.len() });
        }
        raster[..count].to_vec()
    } else {
        let mut pixels = Vec::with_capacity(count);
        for _ in 0..count {
            let value = match next_token(bytes, &mut cursor) {
                Some(tok) => tok
                    .parse::<i64>()
                    .map_err(|_| Error::MalformedHeader(format!("bad sample {tok:?}")))?,
                None => {
                    return Err(Error::TruncatedPayload { expected: count, got: pixels.len() })
                }
            };
            if !(0..=255).contains(&value) {
                return Err(Error::PixelOutOfRange(value));
            }
            pixels.push(value as u8);
        }
        pixels
    };

    Image::new(width, height, pixels)
}

/// Encode as binary PGM: `P5\n<w> <h>\n255\n` followed by the raster.
pub fn save_pgm(img: &Image) -> Vec<u8> {
    let mut out = format!("P5\n{} {}\n255\n", img.width, img.height).into_bytes();
    out.extend_from_slice(&img.pixels);
    out
}

/// Pad bottom/right with zeros up to the smallest power-of-two square that
/// holds the image. Already-legal images come back unchanged.
pub fn pad_to_square_pow2(img: &Image) -> Image {
    let side = img.width.max(img.height).next_power_of_two();
    if img.width == side && img.height == side {
        return img.clone();
    }
    Image::from_fn(side, side, |x, y| {
        if x < img.width && y < img.height {
            img.get(x, y)
        } else {
            0
        }
    })
}

/// Round half-away-from-zero, then clamp to [0, 255].
pub fn quantize(values: &Array2<f64>) -> Result<Image> {
    let (height, width) = values.dim();
    let mut pixels = Vec::with_capacity(width * height);
    for value in values.iter() {
        if !value.is_finite() {
            return Err(Error::NonFinite);
        }
        pixels.push(value.round().clamp(0.0, 255.0) as u8);
    }
    Image::new(width, height, pixels)
}

fn next_token(bytes: &[u8], cursor: &mut usize) -> Option<String> {
    loop {
        while *cursor < bytes.len() && bytes[*cursor].is_ascii_whitespace() {
            *cursor += 1;
        }
        if bytes.get(*cursor) == Some(&b'#') {
            while *cursor < bytes.len() && bytes[*cursor] != b'\n' {
                *cursor += 1;
            }
            continue;
        }
        break;
    }
    let start = *cursor;
    while *cursor < bytes.len() && !bytes[*cursor].is_ascii_whitespace() {
        *cursor += 1;
    }
    if start == *cursor {
        None
    } else {
        Some(String::from_utf8_lossy(&bytes[start..*cursor]).into_owned())
    }
}

fn next_usize(bytes: &[u8], cursor: &mut usize, what: &str) -> Result<usize> {
    let tok = next_token(bytes, cursor)
        .ok_or_else(|| Error::MalformedHeader(format!("missing {what}")))?;
    tok.parse::<usize>()
        .map_err(|_| Error::MalformedHeader(format!("bad {what} {tok:?}")))
}
