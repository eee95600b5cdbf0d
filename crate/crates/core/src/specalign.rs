//! Fourier-domain appearance alignment.
//!
//! Images are taken to spectrum space, split into amplitude and phase, and
//! the low-frequency amplitude of a source image is blended toward a
//! reference while the source phase (scene structure) is kept. Sizes that
//! are not powers of two are zero-padded for the transform and cropped back.

use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::image::Image;

/// Unnormalized 2D DFT of each channel; DC at index (0, 0).
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    /// Transform size (power of two).
    pub width: usize,
    pub height: usize,
    /// Size of the image before padding.
    pub source_width: usize,
    pub source_height: usize,
    /// One row-major plane per channel.
    pub planes: Vec<Vec<Complex64>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AmplitudePhase {
    pub width: usize,
    pub height: usize,
    pub source_width: usize,
    pub source_height: usize,
    pub amplitude: Vec<Vec<f64>>,
    /// Radians in (−π, π]; 0 where the coefficient is 0.
    pub phase: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AlignParams {
    /// 0 keeps the source amplitude, 1 replaces it inside the mask.
    pub beta: f64,
    /// Half-width of the low-frequency square as a fraction of min(W, H)/2.
    pub mask_radius: f64,
}

impl Default for AlignParams {
    fn default() -> Self {
        AlignParams { beta: 1.0, mask_radius: 0.1 }
    }
}

impl AlignParams {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("beta", self.beta), ("mask_radius", self.mask_radius)] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::Config(format!("{name} must lie in [0, 1], got {v}")));
            }
        }
        Ok(())
    }

    pub fn is_identity(&self) -> bool {
        self.beta == 0.0 || self.mask_radius == 0.0
    }
}

fn transform_size(n: usize) -> usize {
    n.next_power_of_two().max(2)
}

/// In-place 2D FFT of a row-major `w`×`h` plane.
fn fft_plane(plane: &mut [Complex64], w: usize, h: usize, inverse: bool) {
    let mut planner = FftPlanner::new();
    let (row_fft, col_fft) = if inverse {
        (planner.plan_fft_inverse(w), planner.plan_fft_inverse(h))
    } else {
        (planner.plan_fft_forward(w), planner.plan_fft_forward(h))
    };
    row_fft.process(plane);
    let mut column = vec![Complex64::default(); h];
    for x in 0..w {
        for y in 0..h {
            column[y] = plane[y * w + x];
        }
        col_fft.process(&mut column);
        for y in 0..h {
            plane[y * w + x] = column[y];
        }
    }
}

pub fn fft2(img: &Image) -> Spectrum {
    let (sw, sh) = (img.width(), img.height());
    let (w, h) = (transform_size(sw), transform_size(sh));
    let planes = (0..img.channels())
        .map(|c| {
            let src = img.plane(c);
            let mut plane = vec![Complex64::default(); w * h];
            for y in 0..sh {
                for x in 0..sw {
                    plane[y * w + x] = Complex64::new(src[y * sw + x], 0.0);
                }
            }
            fft_plane(&mut plane, w, h, false);
            plane
        })
        .collect();
    Spectrum { width: w, height: h, source_width: sw, source_height: sh, planes }
}

/// Inverse transform, keeping the real part and cropping padding away.
/// No clamping is applied.
pub fn ifft2(spec: &Spectrum) -> Result<Image> {
    let (w, h) = (spec.width, spec.height);
    if spec.planes.is_empty() || spec.planes.iter().any(|p| p.len() != w * h) {
        return Err(Error::Format(format!("spectrum planes do not match {w}x{h}")));
    }
    if spec.source_width > w || spec.source_height > h || spec.source_width == 0 || spec.source_height == 0 {
        return Err(Error::Format("source size exceeds transform size".into()));
    }
    let scale = 1.0 / (w * h) as f64;
    let (sw, sh) = (spec.source_width, spec.source_height);
    let mut data = Vec::with_capacity(sw * sh * spec.planes.len());
    for plane in &spec.planes {
        let mut buf = plane.clone();
        fft_plane(&mut buf, w, h, true);
        for y in 0..sh {
            data.extend(buf[y * w..y * w + sw].iter().map(|z| z.re * scale));
        }
    }
    Image::new(sw, sh, spec.planes.len(), data)
}

fn phase_of(z: Complex64) -> f64 {
    if z.re == 0.0 && z.im == 0.0 {
        return 0.0;
    }
    let p = z.im.atan2(z.re);
    if p <= -std::f64::consts::PI {
        std::f64::consts::PI
    } else {
        p
    }
}

pub fn decompose(spec: &Spectrum) -> AmplitudePhase {
    AmplitudePhase {
        width: spec.width,
        height: spec.height,
        source_width: spec.source_width,
        source_height: spec.source_height,
        amplitude: spec.planes.iter().map(|p| p.iter().map(|z| z.norm()).collect()).collect(),
        phase: spec.planes.iter().map(|p| p.iter().map(|&z| phase_of(z)).collect()).collect(),
    }
}

pub fn recompose(ap: &AmplitudePhase) -> Spectrum {
    Spectrum {
        width: ap.width,
        height: ap.height,
        source_width: ap.source_width,
        source_height: ap.source_height,
        planes: ap
            .amplitude
            .iter()
            .zip(&ap.phase)
            .map(|(a, p)| a.iter().zip(p).map(|(&r, &t)| Complex64::from_polar(r, t)).collect())
            .collect(),
    }
}

/// Whether frequency bin `(u, v)` of a `w`×`h` spectrum lies in the
/// wrap-aware low-frequency square of the given radius fraction.
pub fn in_mask(u: usize, v: usize, w: usize, h: usize, mask_radius: f64) -> bool {
    let half = mask_radius * w.min(h) as f64 / 2.0;
    let fu = u.min(w - u) as f64;
    let fv = v.min(h - v) as f64;
    half > 0.0 && fu <= half && fv <= half
}

/// Blend the low-frequency amplitude of `src` toward `reference`, keep the
/// phase of `src`, and return the result clamped to [0, 255].
pub fn align_amplitude(src: &Image, reference: &Image, p: &AlignParams) -> Result<Image> {
    p.validate()?;
    src.check_shape(reference).map_err(|e| Error::Input(e.to_string()))?;
    if p.is_identity() {
        return Ok(src.clamped());
    }
    let s = decompose(&fft2(src));
    let r = decompose(&fft2(reference));
    let (w, h) = (s.width, s.height);
    let mut out = s.clone();
    for (c, amp) in out.amplitude.iter_mut().enumerate() {
        for v in 0..h {
            for u in 0..w {
                if in_mask(u, v, w, h, p.mask_radius) {
                    let i = v * w + u;
                    amp[i] = (1.0 - p.beta) * s.amplitude[c][i] + p.beta * r.amplitude[c][i];
                }
            }
        }
    }
    Ok(ifft2(&recompose(&out))?.clamped())
}

/// L1 distance between normalized histograms of `log(1 + amplitude)` of two
/// images, averaged over channels; lies in [0, 2].
pub fn amplitude_histogram_distance(a: &Image, b: &Image, bins: usize) -> Result<f64> {
    histogram_distance(a, b, bins, |_| true)
}

/// [`amplitude_histogram_distance`] restricted to the low-frequency square
/// of `mask_radius` that [`align_amplitude`] acts on. An empty band gives 0.
pub fn band_histogram_distance(a: &Image, b: &Image, bins: usize, mask_radius: f64) -> Result<f64> {
    let (w, h) = (transform_size(a.width()), transform_size(a.height()));
    histogram_distance(a, b, bins, |i| in_mask(i % w, i / w, w, h, mask_radius))
}

fn histogram_distance(a: &Image, b: &Image, bins: usize, keep: impl Fn(usize) -> bool) -> Result<f64> {
    a.check_shape(b)?;
    let (sa, sb) = (decompose(&fft2(a)), decompose(&fft2(b)));
    let bins = bins.max(1);
    let mut total = 0.0;
    for c in 0..sa.amplitude.len() {
        let pick = |amp: &[f64]| -> Vec<f64> { amp.iter().enumerate().filter(|&(i, _)| keep(i)).map(|(_, x)| x.ln_1p()).collect() };
        let (la, lb) = (pick(&sa.amplitude[c]), pick(&sb.amplitude[c]));
        if la.is_empty() {
            continue;
        }
        let top = la.iter().chain(&lb).cloned().fold(0.0, f64::max).max(f64::MIN_POSITIVE);
        let hist = |vals: &[f64]| {
            let mut hgram = vec![0.0; bins];
            for &v in vals {
                hgram[((v / top * bins as f64) as usize).min(bins - 1)] += 1.0;
            }
            let n = vals.len() as f64;
            hgram.into_iter().map(move |x| x / n)
        };
        total += hist(&la).zip(hist(&lb)).map(|(x, y)| (x - y).abs()).sum::<f64>();
    }
    Ok(total / sa.amplitude.len() as f64)
}

impl Spectrum {
    /// Raw dump: interleaved (re, im) little-endian f64, planes in channel
    /// order, row-major within a plane.
    pub fn to_raw_bytes(&self) -> Vec<u8> {
        self.planes
            .iter()
            .flatten()
            .flat_map(|z| z.re.to_le_bytes().into_iter().chain(z.im.to_le_bytes()))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;
    use std::f64::consts::PI;

    fn random_image(seed: u64, w: usize, h: usize, channels: usize) -> Image {
        let mut rng = crate::rng::stream(seed, &[0x5A]);
        Image::from_fn(w, h, channels, |_, _, _| rng.random_range(0.0..255.0)).unwrap()
    }

    /// Direct O(N⁴) DFT (oracle).
    fn naive_dft(img: &Image) -> Vec<Complex64> {
        let (w, h) = (img.width(), img.height());
        let mut out = vec![Complex64::default(); w * h];
        for v in 0..h {
            for u in 0..w {
                let mut s = Complex64::default();
                for y in 0..h {
                    for x in 0..w {
                        let t = -2.0 * PI * ((u * x) as f64 / w as f64 + (v * y) as f64 / h as f64);
                        s += img.get(0, x, y) * Complex64::from_polar(1.0, t);
                    }
                }
                out[v * w + u] = s;
            }
        }
        out
    }

    #[test]
    fn matches_naive_dft() {
        let img = random_image(1, 8, 4, 1);
        let spec = fft2(&img);
        let oracle = naive_dft(&img);
        for (a, b) in spec.planes[0].iter().zip(&oracle) {
            assert!((a - b).norm() < 1e-9);
        }
    }

    #[test]
    fn constant_image_is_dc_only() {
        let n = 16;
        let img = Image::filled(n, n, 1, 7.5).unwrap();
        let spec = fft2(&img);
        assert!((spec.planes[0][0] - Complex64::new((n * n) as f64 * 7.5, 0.0)).norm() < 1e-9);
        assert!(spec.planes[0][1..].iter().all(|z| z.norm() < 1e-9));
    }

    #[test]
    fn cosine_splits_between_mirror_bins() {
        let (n, u0) = (32, 3);
        let img = Image::from_fn(n, n, 1, |_, x, _| (2.0 * PI * (u0 * x) as f64 / n as f64).cos()).unwrap();
        let spec = fft2(&img);
        let half = (n * n) as f64 / 2.0;
        for (i, z) in spec.planes[0].iter().enumerate() {
            let expect = if i == u0 || i == n - u0 { half } else { 0.0 };
            assert!((z.re - expect).abs() < 1e-9 && z.im.abs() < 1e-9, "bin {i}: {z}");
        }
    }

    #[test]
    fn round_trip_and_parseval() {
        let img = random_image(4, 64, 64, 1);
        let spec = fft2(&img);
        let back = ifft2(&spec).unwrap();
        let err = img.samples().iter().zip(back.samples()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(err < 1e-9);
        let spatial: f64 = img.samples().iter().map(|v| v * v).sum();
        let freq: f64 = spec.planes[0].iter().map(|z| z.norm_sqr()).sum::<f64>() / (64.0 * 64.0);
        assert!((spatial - freq).abs() / spatial < 1e-6);
    }

    #[test]
    fn linearity() {
        let (a, b) = (random_image(5, 16, 16, 1), random_image(6, 16, 16, 1));
        let combo = Image::new(16, 16, 1, a.samples().iter().zip(b.samples()).map(|(x, y)| 2.0 * x - 0.5 * y).collect()).unwrap();
        let (fa, fb, fc) = (fft2(&a), fft2(&b), fft2(&combo));
        for i in 0..256 {
            assert!((fc.planes[0][i] - (2.0 * fa.planes[0][i] - 0.5 * fb.planes[0][i])).norm() < 1e-8);
        }
    }

    #[test]
    fn inverse_edge_cases() {
        let zero = Spectrum { width: 8, height: 8, source_width: 8, source_height: 8, planes: vec![vec![Complex64::default(); 64]] };
        assert!(ifft2(&zero).unwrap().samples().iter().all(|&v| v == 0.0));
        let mut dc = zero.clone();
        dc.planes[0][0] = Complex64::new(64.0 * 3.0, 0.0);
        assert!(ifft2(&dc).unwrap().samples().iter().all(|&v| (v - 3.0).abs() < 1e-12));
        let mut bad = zero;
        bad.planes[0].pop();
        assert!(matches!(ifft2(&bad), Err(Error::Format(_))));
    }

    #[test]
    fn non_power_of_two_pads_and_crops() {
        let img = random_image(8, 20, 12, 3);
        let spec = fft2(&img);
        assert_eq!((spec.width, spec.height), (32, 16));
        let back = ifft2(&spec).unwrap();
        assert!(back.same_shape(&img));
        let err = img.samples().iter().zip(back.samples()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(err < 1e-9);
    }

    #[test]
    fn decompose_examples() {
        let spec = Spectrum {
            width: 2,
            height: 2,
            source_width: 2,
            source_height: 2,
            planes: vec![vec![Complex64::new(3.0, 4.0), Complex64::new(2.5, 0.0), Complex64::default(), Complex64::new(-1.0, -0.0)]],
        };
        let ap = decompose(&spec);
        assert!((ap.amplitude[0][0] - 5.0).abs() < 1e-15);
        assert!((ap.phase[0][0] - 4f64.atan2(3.0)).abs() < 1e-15);
        assert!((ap.phase[0][0] - 0.9273).abs() < 1e-4);
        assert_eq!(ap.phase[0][1], 0.0);
        assert_eq!((ap.amplitude[0][2], ap.phase[0][2]), (0.0, 0.0));
        assert_eq!(ap.phase[0][3], PI);
        let back = recompose(&ap);
        for (a, b) in back.planes[0].iter().zip(&spec.planes[0]) {
            assert!((a - b).norm() <= 1e-12 * b.norm().max(1.0));
        }
    }

    #[test]
    fn mask_geometry() {
        assert!(!in_mask(0, 0, 64, 64, 0.0));
        assert!(in_mask(0, 0, 64, 64, 0.1));
        // half-width 3.2 bins, wrapping on both sides of DC
        assert!(in_mask(3, 63, 64, 64, 0.1));
        assert!(!in_mask(4, 0, 64, 64, 0.1));
        assert!(in_mask(61, 61, 64, 64, 0.1));
        assert!((0..64).all(|u| (0..64).all(|v| in_mask(u, v, 64, 64, 1.0))));
    }

    #[test]
    fn identity_cases() {
        let src = random_image(10, 32, 32, 3);
        let other = random_image(11, 32, 32, 3);
        assert_eq!(align_amplitude(&src, &other, &AlignParams { beta: 0.0, mask_radius: 0.5 }).unwrap(), src);
        assert_eq!(align_amplitude(&src, &other, &AlignParams { beta: 1.0, mask_radius: 0.0 }).unwrap(), src);
        let selfie = align_amplitude(&src, &src, &AlignParams { beta: 0.7, mask_radius: 0.4 }).unwrap();
        let err = src.samples().iter().zip(selfie.samples()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(err < 1e-6);
    }

    #[test]
    fn low_frequency_cast_is_transferred() {
        // reference = source brightened by a constant offset: only DC differs
        let src = random_image(12, 32, 32, 1).map(|v| 40.0 + 0.5 * v);
        let reference = src.map(|v| v + 30.0);
        let out = align_amplitude(&src, &reference, &AlignParams::default()).unwrap();
        let err = reference.samples().iter().zip(out.samples()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(err < 1e-6);
    }

    #[test]
    fn rejects_mismatch_and_bad_params() {
        let a = random_image(1, 16, 16, 1);
        let b = random_image(1, 16, 8, 1);
        assert!(matches!(align_amplitude(&a, &b, &AlignParams::default()), Err(Error::Input(_))));
        assert!(align_amplitude(&a, &a, &AlignParams { beta: 1.5, mask_radius: 0.1 }).is_err());
    }

    #[test]
    fn continuity_in_beta() {
        let src = random_image(20, 32, 32, 1).map(|v| 64.0 + 0.5 * v);
        let reference = random_image(21, 32, 32, 1).map(|v| 64.0 + 0.5 * v);
        let ps = decompose(&fft2(&src));
        let pr = decompose(&fft2(&reference));
        let max_diff = ps.amplitude[0].iter().zip(&pr.amplitude[0]).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        let at = |beta| align_amplitude(&src, &reference, &AlignParams { beta, mask_radius: 0.3 }).unwrap();
        let (a, b) = (at(0.5), at(0.51));
        let step = a.samples().iter().zip(b.samples()).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
        // each masked bin moves by ≤ 0.01·max_diff; the inverse transform
        // divides by W·H and clamping is 1-Lipschitz
        let masked = (0..32).flat_map(|u| (0..32).map(move |v| (u, v))).filter(|&(u, v)| in_mask(u, v, 32, 32, 0.3)).count();
        assert!(step <= 0.01 * max_diff * masked as f64 / (32.0 * 32.0) + 1e-12, "step {step}");
        assert!(step > 0.0);
    }

    #[test]
    fn histogram_distance_properties() {
        let a = random_image(30, 16, 16, 1);
        let b = a.map(|v| 0.3 * v);
        assert_eq!(amplitude_histogram_distance(&a, &a, 32).unwrap(), 0.0);
        let d = amplitude_histogram_distance(&a, &b, 32).unwrap();
        assert!(d > 0.0 && d <= 2.0);
    }

    #[test]
    fn band_distance_tracks_alignment() {
        let src = random_image(31, 32, 32, 3).map(|v| 40.0 + 0.3 * v);
        let reference = random_image(32, 32, 32, 3).map(|v| 120.0 + 0.4 * v);
        let p = AlignParams { beta: 1.0, mask_radius: 0.25 };
        let aligned = align_amplitude(&src, &reference, &p).unwrap();
        let pre = band_histogram_distance(&src, &reference, 16, p.mask_radius).unwrap();
        let post = band_histogram_distance(&aligned, &reference, 16, p.mask_radius).unwrap();
        assert!(pre > 0.3 && post < 0.1 * pre, "{pre} -> {post}");
        assert_eq!(band_histogram_distance(&src, &reference, 16, 0.0).unwrap(), 0.0);
        // full band equals the unrestricted distance on square images
        let full = band_histogram_distance(&src, &reference, 16, 1.0).unwrap();
        assert_eq!(full, amplitude_histogram_distance(&src, &reference, 16).unwrap());
    }
}
