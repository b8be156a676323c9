//! Multiresolution Walsh-Hadamard transform.
//!
//! One level is WHT on the current block followed by floor-lifting pair
//! averaging/differencing along rows, then along columns. Deeper levels
//! re-apply the full three-step transform to the current LL block. The
//! lifting identity floor((a+b)/2) + ceil((a-b)/2) = a makes the whole chain
//! exactly invertible on integer-valued canvases.

use ndarray::{s, Array2};

use crate::error::{Error, Result};
use crate::image_io::Image;
use crate::wht::{wht_forward_2d, wht_inverse_2d};

/// Forward lifting of one even pair: (floor((a+b)/2), a-b).
pub fn lift_pair_forward(a: f64, b: f64) -> (f64, f64) {
    (((a + b) / 2.0).floor(), a - b)
}

/// Inverse of `lift_pair_forward` on integer pairs; the mathematical floor
/// is applied as-is to real inputs after embedding.
pub fn lift_pair_inverse(avg: f64, diff: f64) -> (f64, f64) {
    let a = avg + ((diff + 1.0) / 2.0).floor();
    (a, a - diff)
}

fn check_even(m: &Array2<f64>) -> Result<(usize, usize)> {
    let (rows, cols) = m.dim();
    if rows % 2 != 0 {
        return Err(Error::OddDimension(rows));
    }
    if cols % 2 != 0 {
        return Err(Error::OddDimension(cols));
    }
    Ok((rows, cols))
}

/// Pair-average/difference along rows, then along columns: averages land in
/// the left/top half, differences in the right/bottom half.
pub fn lift_forward(m: &Array2<f64>) -> Result<Array2<f64>> {
    let (rows, cols) = check_even(m)?;
    let mut row_pass = Array2::zeros((rows, cols));
    for r in 0..rows {
        for x in 0..cols / 2 {
            let (avg, diff) = lift_pair_forward(m[(r, 2 * x)], m[(r, 2 * x + 1)]);
            row_pass[(r, x)] = avg;
            row_pass[(r, cols / 2 + x)] = diff;
        }
    }
    let mut out = Array2::zeros((rows, cols));
    for c in 0..cols {
        for y in 0..rows / 2 {
            let (avg, diff) = lift_pair_forward(row_pass[(2 * y, c)], row_pass[(2 * y + 1, c)]);
            out[(y, c)] = avg;
            out[(rows / 2 + y, c)] = diff;
        }
    }
    Ok(out)
}

/// Undo the column pass, then the row pass.
pub fn lift_inverse(m: &Array2<f64>) -> Result<Array2<f64>> {
    let (rows, cols) = check_even(m)?;
    let mut col_undone = Array2::zeros((rows, cols));
    for c in 0..cols {
        for y in 0..rows / 2 {
            let (a, b) = lift_pair_inverse(m[(y, c)], m[(rows / 2 + y, c)]);
            col_undone[(2 * y, c)] = a;
            col_undone[(2 * y + 1, c)] = b;
        }
    }
    let mut out = Array2::zeros((rows, cols));
    for r in 0..rows {
        for x in 0..cols / 2 {
            let (a, b) = lift_pair_inverse(col_undone[(r, x)], col_undone[(r, cols / 2 + x)]);
            out[(r, 2 * x)] = a;
            out[(r, 2 * x + 1)] = b;
        }
    }
    Ok(out)
}

/// L-level decomposition held in place: after level l the LL block occupies
/// the top-left (side/2^l)² square and HH_l the bottom-right block of that
/// level's quadrant split.
#[derive(Debug, Clone)]
pub struct Pyramid {
    canvas: Array2<f64>,
    levels: usize,
}

impl Pyramid {
    pub fn side(&self) -> usize {
        self.canvas.nrows()
    }

    pub fn levels(&self) -> usize {
        self.levels
    }

    pub fn canvas(&self) -> &Array2<f64> {
        &self.canvas
    }

    /// Side of the block transformed at `level` (1-based).
    pub fn block_side(&self, level: usize) -> usize {
        debug_assert!((1..=self.levels).contains(&level));
        self.side() >> (level - 1)
    }

    /// Side of one sub-band at `level`.
    pub fn band_side(&self, level: usize) -> usize {
        self.side() >> level
    }

    /// Owned copy of the HH sub-band at `level`.
    pub fn hh(&self, level: usize) -> Array2<f64> {
        let s = self.band_side(level);
        self.canvas.slice(s![s..2 * s, s..2 * s]).to_owned()
    }

    /// Overwrite the HH sub-band at `level`.
    pub fn set_hh(&mut self, level: usize, band: &Array2<f64>) -> Result<()> {
        let s = self.band_side(level);
        if band.dim() != (s, s) {
            return Err(Error::DimensionMismatch(format!(
                "band {:?} into a {s}x{s} HH slot",
                band.dim()
            )));
        }
        self.canvas.slice_mut(s![s..2 * s, s..2 * s]).assign(band);
        Ok(())
    }

    /// Accumulated transform gain of coefficients at `level` relative to the
    /// per-axis-normalized transform convention: the product of (block
    /// side)² over every WHT applied above this level's sub-bands. Exact as
    /// an f64 (a power of two).
    pub fn band_gain(&self, level: usize) -> f64 {
        (1..=level).map(|l| (self.block_side(l) as f64).powi(2)).product()
    }
}

/// Decompose a square power-of-two image: level 1 transforms the whole
/// canvas, each deeper level re-transforms the current LL block.
pub fn decompose(img: &Image, levels: usize) -> Result<Pyramid> {
    let side = img.width();
    if img.height() != side {
        return Err(Error::NotSquare { rows: img.height(), cols: side });
    }
    if !side.is_power_of_two() {
        return Err(Error::NotPowerOfTwo(side));
    }
    if levels == 0 || side < (1 << levels) {
        return Err(Error::TooManyLevels { side, levels });
    }
    let mut canvas = img.to_matrix();
    for level in 1..=levels {
        let s = side >> (level - 1);
        let block = canvas.slice(s![..s, ..s]).to_owned();
        let transformed = lift_forward(&wht_forward_2d(&block)?)?;
        canvas.slice_mut(s![..s, ..s]).assign(&transformed);
    }
    Ok(Pyramid { canvas, levels })
}

/// Invert level L down to 1. Exact on unmodified integer pyramids; real
/// output after embedding, to be quantized by the caller.
pub fn reconstruct(p: &Pyramid) -> Result<Array2<f64>> {
    let side = p.side();
    let mut canvas = p.canvas.clone();
    for level in (1..=p.levels).rev() {
        let s = side >> (level - 1);
        let block = canvas.slice(s![..s, ..s]).to_owned();
        let restored = wht_inverse_2d(&lift_inverse(&block)?)?;
        canvas.slice_mut(s![..s, ..s]).assign(&restored);
    }
    Ok(canvas)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::image_io::quantize;
    use crate::rng::XorShift64Star;
    use ndarray::array;
    use proptest::prelude::*;

    fn random_image(rng: &mut XorShift64Star, side: usize) -> Image {
        Image::from_fn(side, side, |_, _| rng.next_below(256) as u8)
    }

    #[test]
    fn lift_hand_example() {
        let m = array![[5.0, 2.0], [7.0, 4.0]];
        let lifted = lift_forward(&m).unwrap();
        assert_eq!(lifted, array![[4.0, 3.0], [-2.0, 0.0]]);
        assert_eq!(lift_inverse(&lifted).unwrap(), m);
    }

    #[test]
    fn lift_pair_example() {
        // avg = 3, diff = 3 recovers the pair (5, 2).
        assert_eq!(lift_pair_inverse(3.0, 3.0), (5.0, 2.0));
        assert_eq!(lift_pair_forward(5.0, 2.0), (3.0, 3.0));
    }

    #[test]
    fn lift_trivial_inputs() {
        let z = Array2::<f64>::zeros((4, 4));
        assert_eq!(lift_forward(&z).unwrap(), z);
        let a = 9.0;
        let flat = Array2::from_elem((2, 2), a);
        assert_eq!(lift_forward(&flat).unwrap(), array![[a, 0.0], [0.0, 0.0]]);
    }

    #[test]
    fn lift_rejects_odd() {
        let m = Array2::<f64>::zeros((3, 4));
        assert!(matches!(lift_forward(&m), Err(Error::OddDimension(3))));
        let m = Array2::<f64>::zeros((4, 3));
        assert!(matches!(lift_inverse(&m), Err(Error::OddDimension(3))));
    }

    #[test]
    fn band_geometry_two_levels() {
        let mut rng = XorShift64Star::new(21);
        let img = random_image(&mut rng, 512);
        let p = decompose(&img, 2).unwrap();
        assert_eq!(p.hh(1).dim(), (256, 256));
        assert_eq!(p.hh(2).dim(), (128, 128));
        assert_eq!(p.hh(1), p.canvas().slice(s![256..512, 256..512]).to_owned());
        assert_eq!(p.hh(2), p.canvas().slice(s![128..256, 128..256]).to_owned());
        assert_eq!(p.band_gain(1), (512.0f64).powi(2));
        assert_eq!(p.band_gain(2), (512.0f64).powi(2) * (256.0f64).powi(2));
    }

    #[test]
    fn single_level_is_wht_plus_lift() {
        let mut rng = XorShift64Star::new(23);
        let img = random_image(&mut rng, 2);
        let p = decompose(&img, 1).unwrap();
        let expected = lift_forward(&wht_forward_2d(&img.to_matrix()).unwrap()).unwrap();
        assert_eq!(p.canvas(), &expected);
    }

    #[test]
    fn perfect_reconstruction() {
        let mut rng = XorShift64Star::new(25);
        let img = random_image(&mut rng, 16);
        for levels in 1..=3 {
            let p = decompose(&img, levels).unwrap();
            assert_eq!(reconstruct(&p).unwrap(), img.to_matrix());
        }
    }

    #[test]
    fn perturbed_band_survives_quantization_round_trip() {
        let mut rng = XorShift64Star::new(27);
        let img = random_image(&mut rng, 64);
        let mut p = decompose(&img, 2).unwrap();
        // Large against the coefficient-domain noise floor of quantization,
        // which is on the order of sqrt(band gain) here.
        let delta = 500_000.0;
        let mut band = p.hh(2);
        band[(3, 5)] += delta;
        p.set_hh(2, &band).unwrap();
        let spatial = reconstruct(&p).unwrap();
        assert_ne!(quantize(&spatial).unwrap(), img);
        let back = decompose(&quantize(&spatial).unwrap(), 2).unwrap();
        let recovered = back.hh(2)[(3, 5)] - decompose(&img, 2).unwrap().hh(2)[(3, 5)];
        assert!((recovered - delta).abs() < delta * 0.1, "recovered {recovered}");
    }

    #[test]
    fn zero_pyramid_reconstructs_to_zero() {
        let img = Image::new(8, 8, vec![0; 64]).unwrap();
        let p = decompose(&img, 3).unwrap();
        assert_eq!(reconstruct(&p).unwrap(), Array2::zeros((8, 8)));
    }

    #[test]
    fn decompose_shape_errors() {
        let img = Image::new(4, 4, vec![0; 16]).unwrap();
        assert!(matches!(decompose(&img, 3), Err(Error::TooManyLevels { side: 4, levels: 3 })));
        let img = Image::new(6, 6, vec![0; 36]).unwrap();
        assert!(matches!(decompose(&img, 1), Err(Error::NotPowerOfTwo(6))));
        let img = Image::new(4, 2, vec![0; 8]).unwrap();
        assert!(matches!(decompose(&img, 1), Err(Error::NotSquare { .. })));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]
        #[test]
        fn lift_round_trip(seed in 0u64..u64::MAX) {
            let mut rng = XorShift64Star::new(seed);
            let side = 2 << rng.next_below(3); // 2, 4, or 8
            let m = Array2::from_shape_fn((side, side), |_| {
                rng.next_below(20001) as f64 - 10000.0
            });
            prop_assert_eq!(lift_inverse(&lift_forward(&m).unwrap()).unwrap(), m);
        }
    }
}
