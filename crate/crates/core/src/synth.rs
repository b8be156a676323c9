//! Seeded synthetic test images.
//!
//! Stand-ins for the usual copyrighted 512x512 test photographs: a smooth
//! multi-tone base, a few soft geometric features, and a mild texture so the
//! high-frequency sub-bands carry realistic energy. Fully determined by the
//! seed.

use crate::image_io::Image;
use crate::rng::XorShift64Star;

/// Natural-looking grayscale host image.
pub fn synthetic_host(side: usize, seed: u64) -> Image {
    let mut rng = XorShift64Star::new(seed);
    let n = side as f64;

    // Low-frequency base: a handful of 2-D cosines.
    let waves: Vec<(f64, f64, f64, f64)> = (0..4)
        .map(|_| {
            let fx = 1.0 + rng.next_below(5) as f64;
            let fy = 1.0 + rng.next_below(5) as f64;
            let amp = 15.0 + rng.next_f64() * 25.0;
            let phase = rng.next_f64() * std::f64::consts::TAU;
            (fx, fy, amp, phase)
        })
        .collect();

    // Soft disks with graded edges.
    let disks: Vec<(f64, f64, f64, f64)> = (0..3)
        .map(|_| {
            let cx = rng.next_f64() * n;
            let cy = rng.next_f64() * n;
            let r = n * (0.08 + rng.next_f64() * 0.2);
            let amp = -40.0 + rng.next_f64() * 80.0;
            (cx, cy, r, amp)
        })
        .collect();

    let texture = 2.0 + rng.next_f64() * 2.0;
    Image::from_fn(side, side, |x, y| {
        let (xf, yf) = (x as f64, y as f64);
        let mut value = 128.0;
        for &(fx, fy, amp, phase) in &waves {
            value +=
                amp * (std::f64::consts::TAU * (fx * xf + fy * yf) / n + phase).cos();
        }
        for &(cx, cy, r, amp) in &disks {
            let d = ((xf - cx).powi(2) + (yf - cy).powi(2)).sqrt();
            // Smooth falloff over a quarter of the radius.
            let edge = ((r - d) / (0.25 * r)).clamp(0.0, 1.0);
            value += amp * edge;
        }
        value += texture * rng.next_gaussian();
        value.round().clamp(0.0, 255.0) as u8
    })
}

/// High-contrast logo-style watermark: concentric rings crossed with
/// quadrant inversion and a solid border.
pub fn synthetic_logo(side: usize, seed: u64) -> Image {
    let mut rng = XorShift64Star::new(seed);
    let period = 2 + rng.next_below(3) as usize;
    let bar = 1 + rng.next_below(2) as usize;
    let center = (side as f64 - 1.0) / 2.0;
    Image::from_fn(side, side, |x, y| {
        let border = side / 16;
        if x < border || y < border || x >= side - border || y >= side - border {
            return 255;
        }
        let d = (((x as f64 - center).powi(2) + (y as f64 - center).powi(2)).sqrt()) as usize;
        let ring = (d / period) % 2 == 0;
        let quadrant = (x * 2 / side + y * 2 / side) % 2 == 0;
        let stripe = (x / (bar * 3)) % 2 == 0;
        if ring ^ quadrant ^ stripe {
            255
        } else {
            0
        }
    })
}
