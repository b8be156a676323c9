//! Watermark embedding and extraction, plus the key file codec.
//!
//! The pipeline: decompose the host, then for the coarsest and the finest
//! HH sub-band modify the middle singular values with the watermark's
//! spectrum, recompose with the original singular vectors, inverse-transform
//! and quantize. Extraction is non-blind: it decomposes both the host and
//! the (possibly attacked) marked image and inverts the modification.
//!
//! Sub-bands are rescaled by their accumulated transform gain before the
//! SVD stage. The spectrum update divides by max(sigma) of the sub-band, so
//! without the rescale the deferred-normalization transform convention would
//! shrink the embedded energy by the squared gain and quantization would
//! erase the mark; working at unit gain keeps the strength parameter
//! meaningful.

use ndarray::Array2;

use crate::error::{Error, Result};
use crate::image_io::{pad_to_square_pow2, quantize, Image};
use crate::metrics::correlation;
use crate::mrwht::{decompose, reconstruct, Pyramid};
use crate::svd::{svd, svd_compose};

/// Detection threshold on |rho| used by summary reports.
pub const DETECTION_THRESHOLD: f64 = 0.7;

const KEY_MAGIC: &[u8; 4] = b"HWMK";
const KEY_VERSION: u32 = 1;

/// Embedding parameters. Defaults: strength 0.05, two levels, middle-band
/// offsets 63 (coarsest) and 32 (finest).
#[derive(Debug, Clone, PartialEq)]
pub struct EmbedParams {
    pub alpha: f64,
    pub levels: usize,
    pub p_coarse: usize,
    pub p_fine: usize,
}

impl Default for EmbedParams {
    fn default() -> Self {
        Self { alpha: 0.05, levels: 2, p_coarse: 63, p_fine: 32 }
    }
}

impl EmbedParams {
    fn validate(&self) -> Result<()> {
        if !(self.alpha >= 0.0 && self.alpha.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "alpha {} must be finite and nonnegative",
                self.alpha
            )));
        }
        if self.levels < 2 {
            // The scheme targets two distinct HH bands; with one level the
            // coarsest and finest coincide.
            return Err(Error::InvalidParameter(format!(
                "level count {} must be >= 2",
                self.levels
            )));
        }
        Ok(())
    }
}

/// Which max(sigma) Eq-style extraction divides by. Only the host sub-band
/// policy exists; the tag is stored in the key for format stability.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MaxRefPolicy {
    HostBand,
}

impl MaxRefPolicy {
    fn to_byte(self) -> u8 {
        match self {
            MaxRefPolicy::HostBand => 0,
        }
    }

    fn from_byte(b: u8) -> Result<Self> {
        match b {
            0 => Ok(MaxRefPolicy::HostBand),
            other => Err(Error::InvalidParameter(format!("unknown max-ref policy {other}"))),
        }
    }
}

/// Everything extraction needs beyond the two images.
#[derive(Debug, Clone)]
pub struct WatermarkKey {
    pub u_w: Array2<f64>,
    pub v_w: Array2<f64>,
    /// Reference watermark spectrum, the sequence the correlation verdict
    /// compares against.
    pub sigma_w: Vec<f64>,
    pub wm_width: usize,
    pub wm_height: usize,
    pub alpha: f64,
    pub levels: usize,
    pub p_coarse: usize,
    pub p_fine: usize,
    /// Host dimensions before padding.
    pub host_width: usize,
    pub host_height: usize,
    pub max_ref: MaxRefPolicy,
}

/// Per-level extraction output.
#[derive(Debug, Clone)]
pub struct LevelExtraction {
    /// Estimated watermark spectrum; may go negative after attacks and is
    /// kept signed so the correlation stays unbiased.
    pub sigma: Vec<f64>,
    /// Recomposed watermark matrix; clamp only when rendering.
    pub watermark: Array2<f64>,
    /// Correlation against the reference spectrum; `None` when undefined
    /// (e.g. a zero extracted spectrum).
    pub rho: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct ExtractionResult {
    pub fine: LevelExtraction,
    pub coarse: LevelExtraction,
}

impl ExtractionResult {
    /// Watermark present when |rho| clears the threshold at either level.
    pub fn detected(&self) -> bool {
        [&self.fine, &self.coarse]
            .iter()
            .filter_map(|l| l.rho)
            .any(|rho| rho.abs() >= DETECTION_THRESHOLD)
    }
}

/// The spectrum update: sigma_new(offset+i) = sigma(offset+i) +
/// alpha·sigma_w(i)/max(sigma).
pub fn embedded_spectrum(
    band_sigma: &[f64],
    sigma_w: &[f64],
    alpha: f64,
    offset: usize,
) -> Result<Vec<f64>> {
    if offset + sigma_w.len() > band_sigma.len() {
        return Err(Error::CapacityExceeded {
            band: "HH",
            offset,
            rank: sigma_w.len(),
            available: band_sigma.len(),
        });
    }
    let mut out = band_sigma.to_vec();
    if alpha == 0.0 {
        return Ok(out);
    }
    let max_sigma = band_sigma[0];
    if max_sigma <= 0.0 {
        return Err(Error::InvalidParameter("sub-band has a zero spectrum".into()));
    }
    for (i, &sw) in sigma_w.iter().enumerate() {
        out[offset + i] += alpha * sw / max_sigma;
    }
    Ok(out)
}

/// The inverse update: sigma_w(i) = (sigma_marked(offset+i) -
/// sigma_host(offset+i))·max(sigma_host)/alpha.
pub fn recovered_spectrum(
    host_sigma: &[f64],
    marked_sigma: &[f64],
    alpha: f64,
    offset: usize,
    rank: usize,
) -> Result<Vec<f64>> {
    if alpha == 0.0 {
        return Err(Error::InvalidParameter(
            "cannot extract with alpha = 0 (division by zero)".into(),
        ));
    }
    if host_sigma.len() != marked_sigma.len() {
        return Err(Error::DimensionMismatch(format!(
            "host spectrum {} vs marked spectrum {}",
            host_sigma.len(),
            marked_sigma.len()
        )));
    }
    if offset + rank > host_sigma.len() {
        return Err(Error::CapacityExceeded {
            band: "HH",
            offset,
            rank,
            available: host_sigma.len(),
        });
    }
    let max_sigma = host_sigma[0];
    Ok((0..rank)
        .map(|i| (marked_sigma[offset + i] - host_sigma[offset + i]) * max_sigma / alpha)
        .collect())
}

struct BandTarget {
    level: usize,
    offset: usize,
    name: &'static str,
}

fn band_targets(levels: usize, p_coarse: usize, p_fine: usize) -> [BandTarget; 2] {
    [
        BandTarget { level: levels, offset: p_coarse, name: "coarsest HH" },
        BandTarget { level: 1, offset: p_fine, name: "finest HH" },
    ]
}

fn normalized_hh(pyramid: &Pyramid, level: usize) -> Array2<f64> {
    let gain = pyramid.band_gain(level);
    pyramid.hh(level).mapv(|v| v / gain)
}

/// Embed `wm` into `host`. A non-square or non-power-of-two host is padded
/// first; the key records the original dimensions.
pub fn embed(host: &Image, wm: &Image, params: &EmbedParams) -> Result<(Image, WatermarkKey)> {
    params.validate()?;
    let padded = pad_to_square_pow2(host);
    let mut pyramid = decompose(&padded, params.levels)?;

    let wm_factors = svd(&wm.to_matrix())?;
    let rank = wm.width().min(wm.height());
    let sigma_w = &wm_factors.s[..rank];

    for target in band_targets(params.levels, params.p_coarse, params.p_fine) {
        let band_side = pyramid.band_side(target.level);
        if target.offset + rank > band_side {
            return Err(Error::CapacityExceeded {
                band: target.name,
                offset: target.offset,
                rank,
                available: band_side,
            });
        }
        if params.alpha == 0.0 {
            continue; // the update degenerates to the identity
        }
        let gain = pyramid.band_gain(target.level);
        let band = normalized_hh(&pyramid, target.level);
        let factors = svd(&band)?;
        let new_sigma = embedded_spectrum(&factors.s, sigma_w, params.alpha, target.offset)?;
        let recomposed = svd_compose(&factors.u, &new_sigma, &factors.v)?.mapv(|v| v * gain);
        pyramid.set_hh(target.level, &recomposed)?;
    }

    let marked = quantize(&reconstruct(&pyramid)?)?;
    let key = WatermarkKey {
        u_w: wm_factors.u,
        v_w: wm_factors.v,
        sigma_w: sigma_w.to_vec(),
        wm_width: wm.width(),
        wm_height: wm.height(),
        alpha: params.alpha,
        levels: params.levels,
        p_coarse: params.p_coarse,
        p_fine: params.p_fine,
        host_width: host.width(),
        host_height: host.height(),
        max_ref: MaxRefPolicy::HostBand,
    };
    Ok((marked, key))
}

/// Extract the watermark estimate from `marked` given the original `host`
/// and the key. `host` is padded the same way embedding padded it.
pub fn extract(host: &Image, marked: &Image, key: &WatermarkKey) -> Result<ExtractionResult> {
    let padded = pad_to_square_pow2(host);
    if (padded.width(), padded.height()) != (marked.width(), marked.height()) {
        return Err(Error::DimensionMismatch(format!(
            "padded host {}x{} vs marked {}x{}",
            padded.width(),
            padded.height(),
            marked.width(),
            marked.height()
        )));
    }
    let host_pyramid = decompose(&padded, key.levels)?;
    let marked_pyramid = decompose(marked, key.levels)?;
    let rank = key.wm_width.min(key.wm_height);

    let mut levels_out = Vec::with_capacity(2);
    for target in band_targets(key.levels, key.p_coarse, key.p_fine) {
        let host_band = normalized_hh(&host_pyramid, target.level);
        let marked_band = normalized_hh(&marked_pyramid, target.level);
        let host_sigma = svd(&host_band)?.s;
        let marked_sigma = svd(&marked_band)?.s;
        let sigma = recovered_spectrum(&host_sigma, &marked_sigma, key.alpha, target.offset, rank)?;
        let watermark = svd_compose(&key.u_w, &sigma, &key.v_w)?;
        let rho = correlation(&key.sigma_w, &sigma).ok();
        levels_out.push(LevelExtraction { sigma, watermark, rho });
    }
    let fine = levels_out.pop().expect("two targets");
    let coarse = levels_out.pop().expect("two targets");
    Ok(ExtractionResult { fine, coarse })
}

// --- key file codec -------------------------------------------------------
//
// Layout, all little-endian:
//   magic "HWMK" | version u32 | wm_width u32 | wm_height u32 | levels u32 |
//   p_coarse u32 | p_fine u32 | host_width u32 | host_height u32 |
//   max_ref u8 | pad [u8; 3] | alpha f64 |
//   U_W (wm_height² f64) | V_W (wm_width² f64) | sigma_w (min f64) |
//   crc32 of everything above, u32

pub fn key_save(key: &WatermarkKey) -> Vec<u8> {
    let mut out = Vec::new();
    out.extend_from_slice(KEY_MAGIC);
    for field in [
        KEY_VERSION,
        key.wm_width as u32,
        key.wm_height as u32,
        key.levels as u32,
        key.p_coarse as u32,
        key.p_fine as u32,
        key.host_width as u32,
        key.host_height as u32,
    ] {
        out.extend_from_slice(&field.to_le_bytes());
    }
    out.push(key.max_ref.to_byte());
    out.extend_from_slice(&[0u8; 3]);
    out.extend_from_slice(&key.alpha.to_le_bytes());
    for matrix in [&key.u_w, &key.v_w] {
        for v in matrix.iter() {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    for v in &key.sigma_w {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out.extend_from_slice(&crc32(&out).to_le_bytes());
    out
}

pub fn key_load(bytes: &[u8]) -> Result<WatermarkKey> {
    const HEADER: usize = 4 + 8 * 4 + 4 + 8;
    if bytes.len() < HEADER + 4 {
        return Err(Error::KeyTruncated { expected: HEADER + 4, got: bytes.len() });
    }
    if &bytes[..4] != KEY_MAGIC {
        return Err(Error::BadMagic);
    }
    let u32_at = |offset: usize| {
        u32::from_le_bytes(bytes[offset..offset + 4].try_into().expect("sized"))
    };
    let version = u32_at(4);
    if version != KEY_VERSION {
        return Err(Error::BadVersion(version));
    }
    let wm_width = u32_at(8) as usize;
    let wm_height = u32_at(12) as usize;
    let levels = u32_at(16) as usize;
    let p_coarse = u32_at(20) as usize;
    let p_fine = u32_at(24) as usize;
    let host_width = u32_at(28) as usize;
    let host_height = u32_at(32) as usize;
    let max_ref = MaxRefPolicy::from_byte(bytes[36])?;
    let alpha = f64::from_le_bytes(bytes[40..48].try_into().expect("sized"));

    let rank = wm_width.min(wm_height);
    let floats = wm_height * wm_height + wm_width * wm_width + rank;
    let expected = HEADER + floats * 8 + 4;
    if bytes.len() != expected {
        return Err(Error::KeyTruncated { expected, got: bytes.len() });
    }
    let stored_crc = u32::from_le_bytes(bytes[expected - 4..].try_into().expect("sized"));
    if crc32(&bytes[..expected - 4]) != stored_crc {
        return Err(Error::ChecksumMismatch);
    }

    let mut cursor = HEADER;
    let mut read_f64 = || {
        let v = f64::from_le_bytes(bytes[cursor..cursor + 8].try_into().expect("sized"));
        cursor += 8;
        v
    };
    let u_w = Array2::from_shape_fn((wm_height, wm_height), |_| read_f64());
    let v_w = Array2::from_shape_fn((wm_width, wm_width), |_| read_f64());
    let sigma_w: Vec<f64> = (0..rank).map(|_| read_f64()).collect();

    Ok(WatermarkKey {
        u_w,
        v_w,
        sigma_w,
        wm_width,
        wm_height,
        alpha,
        levels,
        p_coarse,
        p_fine,
        host_width,
        host_height,
        max_ref,
    })
}

/// CRC-32 (IEEE 802.3, reflected, polynomial 0xEDB88320).
fn crc32(bytes: &[u8]) -> u32 {
    let mut crc = !0u32;
    for &byte in bytes {
        crc ^= u32::from(byte);
        for _ in 0..8 {
            let mask = (crc & 1).wrapping_neg();
            crc = (crc >> 1) ^ (0xEDB8_8320 & mask);
        }
    }
    !crc
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::psnr;
    use crate::rng::XorShift64Star;
    use crate::synth::{synthetic_host, synthetic_logo};

    fn small_pair() -> (Image, Image) {
        (synthetic_host(64, 1), synthetic_logo(8, 2))
    }

    fn small_params() -> EmbedParams {
        // 64 host, L=2: coarsest HH is 16x16, finest 32x32.
        EmbedParams { alpha: 0.05, levels: 2, p_coarse: 8, p_fine: 16 }
    }

    #[test]
    fn crc32_known_vector() {
        assert_eq!(crc32(b"123456789"), 0xCBF4_3926);
    }

    #[test]
    fn zero_alpha_is_identity() {
        let (host, wm) = small_pair();
        let params = EmbedParams { alpha: 0.0, ..small_params() };
        let (marked, key) = embed(&host, &wm, &params).unwrap();
        assert_eq!(marked, host);
        assert!(matches!(
            extract(&host, &marked, &key),
            Err(Error::InvalidParameter(_))
        ));
    }

    #[test]
    fn offset_semantics() {
        // With offset 63 and a rank-64 watermark, singular values 64..127
        // (1-based) are the modified ones.
        let band: Vec<f64> = (0..128).map(|i| 1000.0 - i as f64).collect();
        let sigma_w: Vec<f64> = (0..64).map(|i| 640.0 - 10.0 * i as f64).collect();
        let out = embedded_spectrum(&band, &sigma_w, 0.5, 63).unwrap();
        for (i, (a, b)) in band.iter().zip(&out).enumerate() {
            if (63..127).contains(&i) {
                let expected = a + 0.5 * sigma_w[i - 63] / 1000.0;
                assert!((b - expected).abs() < 1e-12);
            } else {
                assert_eq!(a, b);
            }
        }
        assert!(matches!(
            embedded_spectrum(&band, &sigma_w, 0.5, 65),
            Err(Error::CapacityExceeded { .. })
        ));
    }

    #[test]
    fn spectrum_update_round_trip() {
        let host: Vec<f64> = (0..32).map(|i| 500.0 - 12.0 * i as f64).collect();
        let sigma_w = [300.0, 120.0, 44.0, 9.0];
        let marked = embedded_spectrum(&host, &sigma_w, 0.08, 11).unwrap();
        let recovered = recovered_spectrum(&host, &marked, 0.08, 11, 4).unwrap();
        for (a, b) in sigma_w.iter().zip(&recovered) {
            assert!((a - b).abs() <= 1e-9 * a.abs());
        }
    }

    #[test]
    fn capacity_violation_names_band() {
        let (host, _) = small_pair();
        let big = synthetic_logo(64, 3); // rank 64 > coarsest side 16
        let err = embed(&host, &big, &small_params()).unwrap_err();
        match err {
            Error::CapacityExceeded { band, .. } => assert_eq!(band, "coarsest HH"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn embed_extract_no_attack() {
        let (host, wm) = small_pair();
        let (marked, key) = embed(&host, &wm, &small_params()).unwrap();
        assert!(psnr(&host, &marked).unwrap().as_db() > 35.0);
        let result = extract(&host, &marked, &key).unwrap();
        assert!(result.fine.rho.unwrap() > 0.99, "fine {:?}", result.fine.rho);
        assert!(result.coarse.rho.unwrap() > 0.99, "coarse {:?}", result.coarse.rho);
        assert!(result.detected());
    }

    #[test]
    fn extract_against_itself_is_empty() {
        let (host, wm) = small_pair();
        let (_, key) = embed(&host, &wm, &small_params()).unwrap();
        let result = extract(&host, &host, &key).unwrap();
        assert!(result.fine.sigma.iter().all(|&s| s == 0.0));
        assert!(result.fine.rho.is_none());
        assert_eq!(result.fine.watermark, Array2::zeros((8, 8)));
        assert!(!result.detected());
    }

    #[test]
    fn psnr_monotone_in_alpha() {
        let (host, wm) = small_pair();
        let mut last = f64::INFINITY;
        for alpha in [0.01, 0.05, 0.1, 0.5] {
            let params = EmbedParams { alpha, ..small_params() };
            let (marked, _) = embed(&host, &wm, &params).unwrap();
            let db = psnr(&host, &marked).unwrap().as_db();
            assert!(db <= last, "alpha {alpha}: {db} > {last}");
            last = db;
        }
    }

    #[test]
    fn embedding_is_deterministic() {
        let (host, wm) = small_pair();
        let (m1, k1) = embed(&host, &wm, &small_params()).unwrap();
        let (m2, k2) = embed(&host, &wm, &small_params()).unwrap();
        assert_eq!(m1, m2);
        assert_eq!(key_save(&k1), key_save(&k2));
    }

    #[test]
    fn key_round_trip_bit_exact() {
        let (host, wm) = small_pair();
        let (_, key) = embed(&host, &wm, &small_params()).unwrap();
        let bytes = key_save(&key);
        let loaded = key_load(&bytes).unwrap();
        assert_eq!(key_save(&loaded), bytes);
        assert_eq!(loaded.u_w, key.u_w);
        assert_eq!(loaded.v_w, key.v_w);
        assert_eq!(loaded.sigma_w, key.sigma_w);
        assert_eq!(loaded.alpha, key.alpha);
        assert_eq!(
            (loaded.levels, loaded.p_coarse, loaded.p_fine),
            (key.levels, key.p_coarse, key.p_fine)
        );
        assert_eq!((loaded.host_width, loaded.host_height), (64, 64));
        assert_eq!(loaded.max_ref, MaxRefPolicy::HostBand);
    }

    #[test]
    fn key_corruption_is_detected() {
        let (host, wm) = small_pair();
        let (_, key) = embed(&host, &wm, &small_params()).unwrap();
        let bytes = key_save(&key);
        assert!(matches!(key_load(&bytes[..bytes.len() - 9]), Err(Error::KeyTruncated { .. })));
        let mut bad = bytes.clone();
        bad[0] = b'X';
        assert!(matches!(key_load(&bad), Err(Error::BadMagic)));
        let mut bad = bytes.clone();
        bad[4] = 99;
        assert!(matches!(key_load(&bad), Err(Error::BadVersion(99))));
        let mut bad = bytes.clone();
        let flip = 60;
        bad[flip] ^= 0xFF;
        assert!(matches!(key_load(&bad), Err(Error::ChecksumMismatch)));
    }

    #[test]
    fn rejects_single_level() {
        let (host, wm) = small_pair();
        let params = EmbedParams { levels: 1, ..small_params() };
        assert!(matches!(embed(&host, &wm, &params), Err(Error::InvalidParameter(_))));
    }

    #[test]
    fn padded_host_is_handled() {
        let mut rng = XorShift64Star::new(41);
        let host = Image::from_fn(60, 48, |_, _| rng.next_below(256) as u8);
        let wm = synthetic_logo(8, 5);
        let (marked, key) = embed(&host, &wm, &small_params()).unwrap();
        assert_eq!((marked.width(), marked.height()), (64, 64));
        assert_eq!((key.host_width, key.host_height), (60, 48));
        let result = extract(&host, &marked, &key).unwrap();
        assert!(result.fine.rho.unwrap() > 0.9);
    }

    #[test]
    fn dimension_mismatch_on_extract() {
        let (host, wm) = small_pair();
        let (_, key) = embed(&host, &wm, &small_params()).unwrap();
        let wrong = synthetic_host(32, 9);
        assert!(matches!(
            extract(&host, &wrong, &key),
            Err(Error::DimensionMismatch(_))
        ));
    }
}
