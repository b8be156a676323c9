//! Grayscale image watermarking in the multiresolution Walsh-Hadamard
//! domain.
//!
//! The toolkit decomposes a host image with a lifting-extended
//! Walsh-Hadamard transform, embeds a watermark into the middle singular
//! values of the diagonal-detail sub-bands at two resolution levels, and
//! recovers it non-blindly from distorted copies. A deterministic attack
//! battery and PSNR/correlation metrics support robustness evaluation.

pub mod attacks;
pub mod error;
pub mod image_io;
pub mod metrics;
pub mod mrwht;
pub mod rng;
pub mod svd;
pub mod synth;
pub mod watermark;
pub mod wht;

pub use error::{Error, Result};
pub use image_io::Image;
