//! PSNR and the singular-value correlation coefficient.

use crate::error::{Error, Result};
use crate::image_io::Image;

/// Peak signal-to-noise ratio; identical images get a dedicated sentinel
/// rather than a float infinity so reports can print it explicitly.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Psnr {
    Finite(f64),
    Infinite,
}

impl Psnr {
    pub fn as_db(self) -> f64 {
        match self {
            Psnr::Finite(db) => db,
            Psnr::Infinite => f64::INFINITY,
        }
    }
}

impl std::fmt::Display for Psnr {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Psnr::Finite(db) => write!(f, "{db:.6}"),
            Psnr::Infinite => write!(f, "inf"),
        }
    }
}

/// Pearson correlation between two equal-length sequences of singular
/// values. Undefined when either sequence has zero variance.
pub fn correlation(w: &[f64], v: &[f64]) -> Result<f64> {
    if w.len() != v.len() {
        return Err(Error::DimensionMismatch(format!(
            "correlation of lengths {} and {}",
            w.len(),
            v.len()
        )));
    }
    if w.len() < 2 {
        return Err(Error::InvalidParameter("correlation needs length >= 2".into()));
    }
    let n = w.len() as f64;
    let mean_w = w.iter().sum::<f64>() / n;
    let mean_v = v.iter().sum::<f64>() / n;
    let mut cov = 0.0;
    let mut var_w = 0.0;
    let mut var_v = 0.0;
    for (a, b) in w.iter().zip(v) {
        let (da, db) = (a - mean_w, b - mean_v);
        cov += da * db;
        var_w += da * da;
        var_v += db * db;
    }
    if var_w == 0.0 || var_v == 0.0 {
        return Err(Error::UndefinedCorrelation);
    }
    let rho = cov / (var_w.sqrt() * var_v.sqrt());
    // Rounding may overshoot the unit interval by a hair; clamp it back.
    debug_assert!(rho.abs() <= 1.0 + 1e-12);
    Ok(rho.clamp(-1.0, 1.0))
}

/// 10·log10(255²/MSE) in decibels.
pub fn psnr(a: &Image, b: &Image) -> Result<Psnr> {
    if a.width() != b.width() || a.height() != b.height() {
        return Err(Error::DimensionMismatch(format!(
            "psnr of {}x{} vs {}x{}",
            a.width(),
            a.height(),
            b.width(),
            b.height()
        )));
    }
    let sum_sq: u64 = a
        .pixels()
        .iter()
        .zip(b.pixels())
        .map(|(&x, &y)| {
            let d = i64::from(x) - i64::from(y);
            (d * d) as u64
        })
        .sum();
    if sum_sq == 0 {
        return Ok(Psnr::Infinite);
    }
    let mse = sum_sq as f64 / a.pixels().len() as f64;
    Ok(Psnr::Finite(10.0 * (255.0 * 255.0 / mse).log10()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::XorShift64Star;
    use proptest::prelude::*;

    #[test]
    fn correlation_reference_value() {
        // 9/(2*sqrt(21)) by direct evaluation.
        let rho = correlation(&[1.0, 2.0, 3.0], &[1.0, 2.0, 4.0]).unwrap();
        assert!((rho - 9.0 / (2.0 * 21.0f64.sqrt())).abs() < 1e-12);
    }

    #[test]
    fn correlation_extremes() {
        let w = [3.0, 1.0, 4.0, 1.0, 5.0];
        assert_eq!(correlation(&w, &w).unwrap(), 1.0);
        let neg: Vec<f64> = w.iter().map(|x| -x).collect();
        assert_eq!(correlation(&w, &neg).unwrap(), -1.0);
    }

    #[test]
    fn correlation_errors() {
        assert!(matches!(
            correlation(&[1.0, 2.0], &[1.0]),
            Err(Error::DimensionMismatch(_))
        ));
        assert!(matches!(
            correlation(&[2.0, 2.0], &[2.0, 2.0]),
            Err(Error::UndefinedCorrelation)
        ));
        // One constant sequence leaves a zero denominator too.
        assert!(matches!(
            correlation(&[1.0, 2.0], &[5.0, 5.0]),
            Err(Error::UndefinedCorrelation)
        ));
    }

    #[test]
    fn psnr_reference_values() {
        let zeros = Image::new(4, 4, vec![0; 16]).unwrap();
        let ones = Image::new(4, 4, vec![1; 16]).unwrap();
        let full = Image::new(4, 4, vec![255; 16]).unwrap();
        match psnr(&zeros, &ones).unwrap() {
            Psnr::Finite(db) => assert!((db - 10.0 * 65025.0f64.log10()).abs() < 1e-9),
            Psnr::Infinite => panic!("finite expected"),
        }
        assert_eq!(psnr(&zeros, &full).unwrap(), Psnr::Finite(0.0));
        assert_eq!(psnr(&zeros, &zeros).unwrap(), Psnr::Infinite);
        assert!(psnr(&zeros, &Image::new(2, 2, vec![0; 4]).unwrap()).is_err());
    }

    #[test]
    fn psnr_decreases_with_perturbation() {
        let base = Image::new(8, 8, vec![100; 64]).unwrap();
        let mut last = f64::INFINITY;
        for step in [1u8, 3, 9, 27] {
            let other = Image::new(8, 8, vec![100 + step; 64]).unwrap();
            let db = psnr(&base, &other).unwrap().as_db();
            assert!(db < last);
            last = db;
        }
    }

    #[test]
    fn display_formats() {
        assert_eq!(Psnr::Infinite.to_string(), "inf");
        assert_eq!(Psnr::Finite(48.13080361).to_string(), "48.130804");
    }

    proptest! {
        #[test]
        fn correlation_affine_invariance(seed in 0u64..5000) {
            let mut rng = XorShift64Star::new(seed);
            let n = 4 + rng.next_below(60) as usize;
            let w: Vec<f64> = (0..n).map(|_| rng.next_gaussian()).collect();
            let v: Vec<f64> = (0..n).map(|_| rng.next_gaussian()).collect();
            let scale = 0.1 + rng.next_f64() * 10.0;
            let shift = rng.next_gaussian() * 50.0;
            let rho = correlation(&w, &v).unwrap();
            let pos: Vec<f64> = v.iter().map(|x| scale * x + shift).collect();
            let neg: Vec<f64> = v.iter().map(|x| -scale * x + shift).collect();
            prop_assert!((correlation(&w, &pos).unwrap() - rho).abs() < 1e-9);
            prop_assert!((correlation(&w, &neg).unwrap() + rho).abs() < 1e-9);
        }

        #[test]
        fn psnr_symmetry(seed in 0u64..2000) {
            let mut rng = XorShift64Star::new(seed);
            let a = Image::from_fn(8, 8, |_, _| rng.next_below(256) as u8);
            let b = Image::from_fn(8, 8, |_, _| rng.next_below(256) as u8);
            prop_assert_eq!(psnr(&a, &b).unwrap(), psnr(&b, &a).unwrap());
        }
    }
}
