//! Deterministic attack battery for robustness evaluation.
//!
//! Every attack preserves the canvas size so extraction shapes stay valid:
//! row/column deletion rescales back, cropping zero-fills the removed area.
//! Stochastic attacks are fully determined by their 64-bit seed (see
//! [`crate::rng`] for the pinned generator).
//!
//! Parameter conventions, fixed here and nowhere else:
//! - Gaussian noise P%: additive zero-mean with sigma = 25.5 · P/100.
//! - Salt & pepper P%: fraction 0.1 · P/100 of pixels forced to 0 or 255
//!   with equal probability.
//! - JPEG: 8x8 block DCT against the standard luminance table scaled by a
//!   libjpeg-style quality factor; quantize/dequantize only, no entropy
//!   coding.

use std::fmt;

use ndarray::Array2;

use crate::error::{Error, Result};
use crate::image_io::{quantize, Image};
use crate::rng::XorShift64Star;

#[derive(Debug, Clone, PartialEq)]
pub enum AttackKind {
    GaussianBlur { kernel: usize, sigma: f64 },
    GaussianNoise { percent: f64 },
    SaltPepper { percent: f64 },
    Jpeg { quality: u32 },
    RowColDelete { count: usize },
    Pixelate { block: usize },
    Crop { fraction: f64 },
    FlipV,
    FlipH,
    Sharpen { amount: f64 },
    WarpSpherical { strength: f64 },
}

impl AttackKind {
    pub fn name(&self) -> &'static str {
        match self {
            AttackKind::GaussianBlur { .. } => "gaussian_blur",
            AttackKind::GaussianNoise { .. } => "gaussian_noise",
            AttackKind::SaltPepper { .. } => "salt_pepper",
            AttackKind::Jpeg { .. } => "jpeg",
            AttackKind::RowColDelete { .. } => "row_col_delete",
            AttackKind::Pixelate { .. } => "pixelate",
            AttackKind::Crop { .. } => "crop",
            AttackKind::FlipV => "flip_v",
            AttackKind::FlipH => "flip_h",
            AttackKind::Sharpen { .. } => "sharpen",
            AttackKind::WarpSpherical { .. } => "warp_spherical",
        }
    }

    fn is_stochastic(&self) -> bool {
        matches!(
            self,
            AttackKind::GaussianNoise { .. }
                | AttackKind::SaltPepper { .. }
                | AttackKind::RowColDelete { .. }
        )
    }

    /// Canonical `key=value;...` rendering for reports; empty for
    /// parameterless kinds.
    pub fn params_string(&self) -> String {
        match self {
            AttackKind::GaussianBlur { kernel, sigma } => format!("kernel={kernel};sigma={sigma}"),
            AttackKind::GaussianNoise { percent } => format!("percent={percent}"),
            AttackKind::SaltPepper { percent } => format!("percent={percent}"),
            AttackKind::Jpeg { quality } => format!("quality={quality}"),
            AttackKind::RowColDelete { count } => format!("count={count}"),
            AttackKind::Pixelate { block } => format!("block={block}"),
            AttackKind::Crop { fraction } => format!("fraction={fraction}"),
            AttackKind::FlipV | AttackKind::FlipH => String::new(),
            AttackKind::Sharpen { amount } => format!("amount={amount}"),
            AttackKind::WarpSpherical { strength } => format!("strength={strength}"),
        }
    }

    fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidParameter(msg));
        match *self {
            AttackKind::GaussianBlur { kernel, sigma } => {
                if kernel == 0 || kernel % 2 == 0 {
                    return bad(format!("blur kernel {kernel} must be odd"));
                }
                if !(sigma > 0.0) {
                    return bad(format!("blur sigma {sigma} must be positive"));
                }
            }
            AttackKind::GaussianNoise { percent } | AttackKind::SaltPepper { percent } => {
                if !(0.0..=100.0).contains(&percent) {
                    return bad(format!("noise percent {percent} outside [0, 100]"));
                }
            }
            AttackKind::Jpeg { quality } => {
                if !(1..=100).contains(&quality) {
                    return bad(format!("jpeg quality {quality} outside [1, 100]"));
                }
            }
            AttackKind::RowColDelete { .. } | AttackKind::Pixelate { .. } => {}
            AttackKind::Crop { fraction } => {
                if !(fraction > 0.0 && fraction <= 1.0) {
                    return bad(format!("crop fraction {fraction} outside (0, 1]"));
                }
            }
            AttackKind::FlipV | AttackKind::FlipH => {}
            AttackKind::Sharpen { amount } => {
                if !(amount >= 0.0) {
                    return bad(format!("sharpen amount {amount} must be nonnegative"));
                }
            }
            AttackKind::WarpSpherical { strength } => {
                if !(0.0..=1.0).contains(&strength) {
                    return bad(format!("warp strength {strength} outside [0, 1]"));
                }
            }
        }
        Ok(())
    }
}

/// One configured attack; `seed` is required for the stochastic kinds.
#[derive(Debug, Clone, PartialEq)]
pub struct AttackSpec {
    pub kind: AttackKind,
    pub seed: Option<u64>,
}

impl AttackSpec {
    pub fn new(kind: AttackKind, seed: Option<u64>) -> Result<Self> {
        kind.validate()?;
        if kind.is_stochastic() && seed.is_none() {
            return Err(Error::InvalidParameter(format!(
                "{} requires a seed",
                kind.name()
            )));
        }
        Ok(Self { kind, seed })
    }

    /// Parse one suite-config line: `<kind> key=value ... [seed=N]`.
    pub fn parse(line: &str) -> Result<Self> {
        let mut parts = line.split_whitespace();
        let kind_name = parts
            .next()
            .ok_or_else(|| Error::BadAttackSpec("empty spec".into()))?;
        let mut kv = std::collections::BTreeMap::new();
        for part in parts {
            let (key, value) = part
                .split_once('=')
                .ok_or_else(|| Error::BadAttackSpec(format!("expected key=value, got {part:?}")))?;
            if kv.insert(key.to_string(), value.to_string()).is_some() {
                return Err(Error::BadAttackSpec(format!("duplicate key {key:?}")));
            }
        }
        let seed = match kv.remove("seed") {
            Some(v) => Some(
                v.parse::<u64>()
                    .map_err(|_| Error::BadAttackSpec(format!("bad seed {v:?}")))?,
            ),
            None => None,
        };

        fn take<T: std::str::FromStr>(
            kv: &mut std::collections::BTreeMap<String, String>,
            key: &str,
        ) -> Result<T> {
            let v = kv
                .remove(key)
                .ok_or_else(|| Error::BadAttackSpec(format!("missing {key}")))?;
            v.parse::<T>()
                .map_err(|_| Error::BadAttackSpec(format!("bad {key} value {v:?}")))
        }

        let kind = match kind_name {
            "gaussian_blur" => AttackKind::GaussianBlur {
                kernel: take(&mut kv, "kernel")?,
                sigma: take(&mut kv, "sigma")?,
            },
            "gaussian_noise" => AttackKind::GaussianNoise { percent: take(&mut kv, "percent")? },
            "salt_pepper" => AttackKind::SaltPepper { percent: take(&mut kv, "percent")? },
            "jpeg" => AttackKind::Jpeg { quality: take(&mut kv, "quality")? },
            "row_col_delete" => AttackKind::RowColDelete { count: take(&mut kv, "count")? },
            "pixelate" => AttackKind::Pixelate { block: take(&mut kv, "block")? },
            "crop" => AttackKind::Crop { fraction: take(&mut kv, "fraction")? },
            "flip_v" => AttackKind::FlipV,
            "flip_h" => AttackKind::FlipH,
            "sharpen" => AttackKind::Sharpen { amount: take(&mut kv, "amount")? },
            "warp_spherical" => AttackKind::WarpSpherical { strength: take(&mut kv, "strength")? },
            other => return Err(Error::BadAttackSpec(format!("unknown attack {other:?}"))),
        };
        if let Some(stray) = kv.keys().next() {
            return Err(Error::BadAttackSpec(format!("unexpected key {stray:?}")));
        }
        Self::new(kind, seed)
    }
}

impl fmt::Display for AttackSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.kind.name())?;
        let params = self.kind.params_string();
        if !params.is_empty() {
            for part in params.split(';') {
                write!(f, " {part}")?;
            }
        }
        if let Some(seed) = self.seed {
            write!(f, " seed={seed}")?;
        }
        Ok(())
    }
}

/// Apply one attack; output dimensions always equal the input's.
pub fn apply_attack(img: &Image, spec: &AttackSpec) -> Result<Image> {
    spec.kind.validate()?;
    let out = match spec.kind {
        AttackKind::GaussianBlur { kernel, sigma } => gaussian_blur(img, kernel, sigma)?,
        AttackKind::GaussianNoise { percent } => {
            gaussian_noise(img, percent, require_seed(spec)?)
        }
        AttackKind::SaltPepper { percent } => salt_pepper(img, percent, require_seed(spec)?),
        AttackKind::Jpeg { quality } => jpeg_quantize(img, quality),
        AttackKind::RowColDelete { count } => row_col_delete(img, count, require_seed(spec)?)?,
        AttackKind::Pixelate { block } => pixelate(img, block)?,
        AttackKind::Crop { fraction } => crop_center(img, fraction),
        AttackKind::FlipV => flip_vertical(img),
        AttackKind::FlipH => flip_horizontal(img),
        AttackKind::Sharpen { amount } => sharpen(img, amount)?,
        AttackKind::WarpSpherical { strength } => warp_spherical(img, strength),
    };
    debug_assert_eq!((out.width(), out.height()), (img.width(), img.height()));
    Ok(out)
}

fn require_seed(spec: &AttackSpec) -> Result<u64> {
    spec.seed
        .ok_or_else(|| Error::InvalidParameter(format!("{} requires a seed", spec.kind.name())))
}

fn gaussian_kernel_1d(size: usize, sigma: f64) -> Vec<f64> {
    let center = (size / 2) as f64;
    let mut k: Vec<f64> = (0..size)
        .map(|i| {
            let d = i as f64 - center;
            (-d * d / (2.0 * sigma * sigma)).exp()
        })
        .collect();
    let total: f64 = k.iter().sum();
    for v in &mut k {
        *v /= total;
    }
    k
}

/// Direct 2-D convolution against the separable Gaussian kernel, replicated
/// borders. The naive oracle in the tests recomputes the same sums from the
/// closed-form weights.
fn gaussian_blur(img: &Image, kernel: usize, sigma: f64) -> Result<Image> {
    let k1 = gaussian_kernel_1d(kernel, sigma);
    let half = (kernel / 2) as isize;
    let (w, h) = (img.width() as isize, img.height() as isize);
    let mut out = Array2::zeros((img.height(), img.width()));
    for y in 0..h {
        for x in 0..w {
            let mut acc = 0.0;
            for (ky, wy) in k1.iter().enumerate() {
                let sy = (y + ky as isize - half).clamp(0, h - 1) as usize;
                let mut row_acc = 0.0;
                for (kx, wx) in k1.iter().enumerate() {
                    let sx = (x + kx as isize - half).clamp(0, w - 1) as usize;
                    row_acc += wx * f64::from(img.get(sx, sy));
                }
                acc += wy * row_acc;
            }
            out[(y as usize, x as usize)] = acc;
        }
    }
    quantize(&out)
}

fn gaussian_noise(img: &Image, percent: f64, seed: u64) -> Image {
    let sigma = 25.5 * percent / 100.0;
    let mut rng = XorShift64Star::new(seed);
    Image::from_fn(img.width(), img.height(), |x, y| {
        let noisy = f64::from(img.get(x, y)) + sigma * rng.next_gaussian();
        noisy.round().clamp(0.0, 255.0) as u8
    })
}

fn salt_pepper(img: &Image, percent: f64, seed: u64) -> Image {
    let density = 0.1 * percent / 100.0;
    let mut rng = XorShift64Star::new(seed);
    Image::from_fn(img.width(), img.height(), |x, y| {
        if rng.next_f64() < density {
            if rng.next_u64() & 1 == 0 {
                0
            } else {
                255
            }
        } else {
            img.get(x, y)
        }
    })
}

// Standard JPEG luminance quantization table (Annex K), row-major.
const LUMA_QUANT: [u32; 64] = [
    16, 11, 10, 16, 24, 40, 51, 61, //
    12, 12, 14, 19, 26, 58, 60, 55, //
    14, 13, 16, 24, 40, 57, 69, 56, //
    14, 17, 22, 29, 51, 87, 80, 62, //
    18, 22, 37, 56, 68, 109, 103, 77, //
    24, 35, 55, 64, 81, 104, 113, 92, //
    49, 64, 78, 87, 103, 121, 120, 101, //
    72, 92, 95, 98, 112, 100, 103, 99,
];

fn scaled_quant_table(quality: u32) -> [f64; 64] {
    // libjpeg quality scaling.
    let scale = if quality < 50 { 5000 / quality } else { 200 - 2 * quality };
    let mut table = [0.0; 64];
    for (dst, &base) in table.iter_mut().zip(&LUMA_QUANT) {
        *dst = ((base * scale + 50) / 100).clamp(1, 255) as f64;
    }
    table
}

/// Quantize/dequantize each 8x8 block through the DCT, the lossy core of a
/// baseline JPEG codec. Edge blocks replicate border pixels.
fn jpeg_quantize(img: &Image, quality: u32) -> Image {
    let table = scaled_quant_table(quality);
    let cos_table: Vec<f64> = (0..64)
        .map(|i| {
            let (x, u) = (i / 8, i % 8);
            ((2.0 * x as f64 + 1.0) * u as f64 * std::f64::consts::PI / 16.0).cos()
        })
        .collect();
    let alpha = |u: usize| if u == 0 { (0.5f64).sqrt() } else { 1.0 };

    let (w, h) = (img.width(), img.height());
    let mut out = vec![0u8; w * h];
    for by in (0..h).step_by(8) {
        for bx in (0..w).step_by(8) {
            // Level-shifted block with replicated borders.
            let mut block = [0.0f64; 64];
            for y in 0..8 {
                for x in 0..8 {
                    let sx = (bx + x).min(w - 1);
                    let sy = (by + y).min(h - 1);
                    block[y * 8 + x] = f64::from(img.get(sx, sy)) - 128.0;
                }
            }
            // Forward DCT-II, quantize, dequantize.
            let mut coefs = [0.0f64; 64];
            for v in 0..8 {
                for u in 0..8 {
                    let mut acc = 0.0;
                    for y in 0..8 {
                        for x in 0..8 {
                            acc += block[y * 8 + x] * cos_table[x * 8 + u] * cos_table[y * 8 + v];
                        }
                    }
                    let coef = 0.25 * alpha(u) * alpha(v) * acc;
                    let q = table[v * 8 + u];
                    coefs[v * 8 + u] = (coef / q).round() * q;
                }
            }
            // Inverse DCT.
            for y in 0..8 {
                for x in 0..8 {
                    if by + y >= h || bx + x >= w {
                        continue;
                    }
                    let mut acc = 0.0;
                    for v in 0..8 {
                        for u in 0..8 {
                            acc += alpha(u)
                                * alpha(v)
                                * coefs[v * 8 + u]
                                * cos_table[x * 8 + u]
                                * cos_table[y * 8 + v];
                        }
                    }
                    let value = 0.25 * acc + 128.0;
                    out[(by + y) * w + bx + x] = value.round().clamp(0.0, 255.0) as u8;
                }
            }
        }
    }
    Image::new(w, h, out).expect("sized buffer")
}

/// Delete `count` seeded rows and columns, then nearest-neighbor rescale
/// back to the original canvas.
fn row_col_delete(img: &Image, count: usize, seed: u64) -> Result<Image> {
    let (w, h) = (img.width(), img.height());
    if count >= w.min(h) {
        return Err(Error::InvalidParameter(format!(
            "cannot delete {count} rows/columns from a {w}x{h} image"
        )));
    }
    let mut rng = XorShift64Star::new(seed);
    let rows = rng.sample_distinct(h, count);
    let cols = rng.sample_distinct(w, count);
    let keep_rows: Vec<usize> = (0..h).filter(|r| !rows.contains(r)).collect();
    let keep_cols: Vec<usize> = (0..w).filter(|c| !cols.contains(c)).collect();
    let (rw, rh) = (keep_cols.len(), keep_rows.len());
    Ok(Image::from_fn(w, h, |x, y| {
        let sx = keep_cols[(x * rw) / w];
        let sy = keep_rows[(y * rh) / h];
        img.get(sx, sy)
    }))
}

fn pixelate(img: &Image, block: usize) -> Result<Image> {
    if block == 0 {
        return Err(Error::InvalidParameter("pixelate block must be >= 1".into()));
    }
    let (w, h) = (img.width(), img.height());
    let mut out = vec![0u8; w * h];
    for by in (0..h).step_by(block) {
        for bx in (0..w).step_by(block) {
            let (bw, bh) = ((w - bx).min(block), (h - by).min(block));
            let mut sum = 0u64;
            for y in by..by + bh {
                for x in bx..bx + bw {
                    sum += u64::from(img.get(x, y));
                }
            }
            let mean = (sum as f64 / (bw * bh) as f64).round() as u8;
            for y in by..by + bh {
                for x in bx..bx + bw {
                    out[y * w + x] = mean;
                }
            }
        }
    }
    Ok(Image::new(w, h, out).expect("sized buffer"))
}

/// Keep a centered window of side round(side·sqrt(fraction)) per axis, zero
/// elsewhere.
fn crop_center(img: &Image, fraction: f64) -> Image {
    let retained = |side: usize| -> (usize, usize) {
        let keep = ((side as f64 * fraction.sqrt()).round() as usize).clamp(1, side);
        let start = (side - keep) / 2;
        (start, keep)
    };
    let (x0, kw) = retained(img.width());
    let (y0, kh) = retained(img.height());
    Image::from_fn(img.width(), img.height(), |x, y| {
        if (x0..x0 + kw).contains(&x) && (y0..y0 + kh).contains(&y) {
            img.get(x, y)
        } else {
            0
        }
    })
}

fn flip_vertical(img: &Image) -> Image {
    Image::from_fn(img.width(), img.height(), |x, y| img.get(x, img.height() - 1 - y))
}

fn flip_horizontal(img: &Image) -> Image {
    Image::from_fn(img.width(), img.height(), |x, y| img.get(img.width() - 1 - x, y))
}

/// Unsharp mask over a 3x3 Gaussian base (sigma 1).
fn sharpen(img: &Image, amount: f64) -> Result<Image> {
    let k1 = gaussian_kernel_1d(3, 1.0);
    let (w, h) = (img.width() as isize, img.height() as isize);
    let mut out = Array2::zeros((img.height(), img.width()));
    for y in 0..h {
        for x in 0..w {
            let mut blur = 0.0;
            for (ky, wy) in k1.iter().enumerate() {
                let sy = (y + ky as isize - 1).clamp(0, h - 1) as usize;
                for (kx, wx) in k1.iter().enumerate() {
                    let sx = (x + kx as isize - 1).clamp(0, w - 1) as usize;
                    blur += wy * wx * f64::from(img.get(sx, sy));
                }
            }
            let original = f64::from(img.get(x as usize, y as usize));
            out[(y as usize, x as usize)] = original + amount * (original - blur);
        }
    }
    quantize(&out)
}

/// Center-symmetric radial warp with bilinear sampling: inside the inscribed
/// circle the source radius is r·(1 - strength·(1 - r)) of the destination
/// radius, magnifying the center like a sphere bulge. Strength 0 is the
/// identity.
fn warp_spherical(img: &Image, strength: f64) -> Image {
    let (w, h) = (img.width(), img.height());
    let cx = (w as f64 - 1.0) / 2.0;
    let cy = (h as f64 - 1.0) / 2.0;
    let radius = cx.min(cy);
    Image::from_fn(w, h, |x, y| {
        let dx = x as f64 - cx;
        let dy = y as f64 - cy;
        let r = (dx * dx + dy * dy).sqrt();
        if radius == 0.0 || r >= radius || r == 0.0 {
            return img.get(x, y);
        }
        let rn = r / radius;
        let scale = 1.0 - strength * (1.0 - rn);
        let sx = cx + dx * scale;
        let sy = cy + dy * scale;
        bilinear(img, sx, sy)
    })
}

fn bilinear(img: &Image, x: f64, y: f64) -> u8 {
    let x0 = x.floor().clamp(0.0, (img.width() - 1) as f64) as usize;
    let y0 = y.floor().clamp(0.0, (img.height() - 1) as f64) as usize;
    let x1 = (x0 + 1).min(img.width() - 1);
    let y1 = (y0 + 1).min(img.height() - 1);
    let fx = (x - x0 as f64).clamp(0.0, 1.0);
    let fy = (y - y0 as f64).clamp(0.0, 1.0);
    let top = f64::from(img.get(x0, y0)) * (1.0 - fx) + f64::from(img.get(x1, y0)) * fx;
    let bottom = f64::from(img.get(x0, y1)) * (1.0 - fx) + f64::from(img.get(x1, y1)) * fx;
    (top * (1.0 - fy) + bottom * fy).round().clamp(0.0, 255.0) as u8
}
