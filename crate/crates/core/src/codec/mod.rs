//! Adaptive block-transform codec.
//!
//! 8×8 orthonormal DCT with a tunable quantization table whose steps scale
//! as `1/rho`, an order-0 entropy rate estimate, a rate-distortion loss with
//! a ratio-dependent multiplier `lambda0 / rho`, and greedy coordinate
//! refinement of the table against a sample of raw frames.

pub mod dct;
mod frame;

use serde::{Deserialize, Serialize};

pub use frame::{rate_bits, EncodedFrame, CODEBOOK_BITS_PER_SYMBOL, HEADER_BYTES};

use crate::error::{Error, Result};
use crate::image::Image;
use dct::Block;
use frame::padded;

/// Baseline luminance table (ITU-T T.81 Annex K), row-major.
pub const JPEG_LUMA: [f64; 64] = [
    16., 11., 10., 16., 24., 40., 51., 61., //
    12., 12., 14., 19., 26., 58., 60., 55., //
    14., 13., 16., 24., 40., 57., 69., 56., //
    14., 17., 22., 29., 51., 87., 80., 62., //
    18., 22., 37., 56., 68., 109., 103., 77., //
    24., 35., 55., 64., 81., 104., 113., 92., //
    49., 64., 78., 87., 103., 121., 120., 101., //
    72., 92., 95., 98., 112., 100., 103., 99., //
];

/// Refinement search factors; 1.0 comes first so ties keep the current entry.
pub const REFINE_FACTORS: [f64; 3] = [1.0, 0.8, 1.25];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CodecParams {
    /// 64 quantization steps, row-major, each ≥ 1.
    pub qtable: Vec<f64>,
    pub lambda0: f64,
}

impl Default for CodecParams {
    fn default() -> Self {
        CodecParams { qtable: JPEG_LUMA.to_vec(), lambda0: 500.0 }
    }
}

impl CodecParams {
    pub fn flat(step: f64, lambda0: f64) -> Self {
        CodecParams { qtable: vec![step; 64], lambda0 }
    }

    pub fn validate(&self) -> Result<()> {
        if self.qtable.len() != 64 {
            return Err(Error::Config(format!("qtable must have 64 entries, got {}", self.qtable.len())));
        }
        if let Some(q) = self.qtable.iter().find(|q| !(q.is_finite() && **q >= 1.0)) {
            return Err(Error::Config(format!("qtable entries must be >= 1, got {q}")));
        }
        if !(self.lambda0.is_finite() && self.lambda0 > 0.0) {
            return Err(Error::Config(format!("lambda0 must be > 0, got {}", self.lambda0)));
        }
        Ok(())
    }

    fn steps(&self, rho: f64) -> [f64; 64] {
        let s = quality_scale(rho);
        std::array::from_fn(|k| self.qtable[k] * s)
    }
}

/// Quantization step multiplier for a retained-bit fraction.
pub fn quality_scale(rho: f64) -> f64 {
    1.0 / rho
}

pub fn check_rho(rho: f64) -> Result<()> {
    if rho > 0.0 && rho <= 1.0 {
        Ok(())
    } else {
        Err(Error::Domain(format!("compression ratio must lie in (0, 1], got {rho}")))
    }
}

/// DCT coefficients of an image, computed once and reusable across
/// quantization settings.
#[derive(Debug, Clone)]
pub struct Transformed {
    width: usize,
    height: usize,
    channels: usize,
    blocks: Vec<Block>,
}

/// Level-shift by −128, replicate edges up to a multiple of 8 and transform
/// every block.
pub fn transform(img: &Image) -> Transformed {
    let (w, h) = (img.width(), img.height());
    let (pw, ph) = (padded(w), padded(h));
    let mut blocks = Vec::with_capacity(img.channels() * pw * ph / 64);
    for c in 0..img.channels() {
        for by in (0..ph).step_by(8) {
            for bx in (0..pw).step_by(8) {
                let block: Block = std::array::from_fn(|k| {
                    let x = (bx + k % 8).min(w - 1);
                    let y = (by + k / 8).min(h - 1);
                    img.get(c, x, y) - 128.0
                });
                blocks.push(dct::forward(&block));
            }
        }
    }
    Transformed { width: w, height: h, channels: img.channels(), blocks }
}

impl Transformed {
    pub fn quantize(&self, params: &CodecParams, rho: f64) -> Result<EncodedFrame> {
        check_rho(rho)?;
        params.validate()?;
        let steps = params.steps(rho);
        let blocks: Vec<[i32; 64]> = self
            .blocks
            .iter()
            .map(|b| std::array::from_fn(|k| (b[k] / steps[k]).round() as i32))
            .collect();
        Ok(EncodedFrame {
            width: self.width,
            height: self.height,
            channels: self.channels,
            rho_used: rho,
            rate_bits: rate_bits(&blocks),
            blocks,
        })
    }
}

pub fn encode(img: &Image, params: &CodecParams, rho: f64) -> Result<EncodedFrame> {
    check_rho(rho)?;
    transform(img).quantize(params, rho)
}

/// Dequantize, inverse transform, undo the level shift, crop, and emit
/// 8-bit samples (rounded, clamped to [0, 255]).
pub fn decode(frame: &EncodedFrame, params: &CodecParams) -> Result<Image> {
    params.validate()?;
    check_rho(frame.rho_used)?;
    let (w, h) = (frame.width, frame.height);
    if w == 0 || h == 0 || frame.blocks.len() != frame::block_count(w, h, frame.channels) {
        return Err(Error::Format(format!(
            "{} blocks do not tile a {w}x{h}x{} image",
            frame.blocks.len(),
            frame.channels
        )));
    }
    let steps = params.steps(frame.rho_used);
    let bw = padded(w) / 8;
    let bh = padded(h) / 8;
    let mut data = vec![0.0; w * h * frame.channels];
    for (index, q) in frame.blocks.iter().enumerate() {
        let c = index / (bw * bh);
        let by = (index / bw) % bh;
        let bx = index % bw;
        let coefs: Block = std::array::from_fn(|k| q[k] as f64 * steps[k]);
        let pixels = dct::inverse(&coefs);
        for (k, v) in pixels.iter().enumerate() {
            let (x, y) = (bx * 8 + k % 8, by * 8 + k / 8);
            if x < w && y < h {
                data[(c * h + y) * w + x] = (v + 128.0).round().clamp(0.0, 255.0);
            }
        }
    }
    Image::new(w, h, frame.channels, data)
}

/// `rate + (lambda0 / rho) · mse`.
pub fn rd_loss(rate_bits: f64, distortion_mse: f64, rho: f64, lambda0: f64) -> f64 {
    rate_bits + lambda0 / rho * distortion_mse
}

/// Peak signal-to-noise ratio in dB; `f64::INFINITY` for identical images.
pub fn psnr(a: &Image, b: &Image) -> Result<f64> {
    let mse = a.mse(b)?;
    Ok(if mse == 0.0 { f64::INFINITY } else { 10.0 * (255.0 * 255.0 / mse).log10() })
}

/// Rate, distortion and loss of one frame at one setting.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RdPoint {
    pub rate_bits: f64,
    pub mse: f64,
    pub loss: f64,
}

pub fn evaluate(img: &Image, params: &CodecParams, rho: f64) -> Result<RdPoint> {
    evaluate_transformed(img, &transform(img), params, rho)
}

fn evaluate_transformed(img: &Image, t: &Transformed, params: &CodecParams, rho: f64) -> Result<RdPoint> {
    let frame = t.quantize(params, rho)?;
    let mse = img.mse(&decode(&frame, params)?)?;
    Ok(RdPoint { rate_bits: frame.rate_bits, mse, loss: rd_loss(frame.rate_bits, mse, rho, params.lambda0) })
}

/// Outcome of [`refine_traced`].
#[derive(Debug, Clone, PartialEq)]
pub struct Refinement {
    pub params: CodecParams,
    /// Mean loss over the sample frames before the first step and after each step.
    pub losses: Vec<f64>,
}

/// Greedy coordinate refinement of the quantization table.
///
/// Step k revisits table entry `zigzag[k mod 64]`, trying each factor in
/// [`REFINE_FACTORS`] (entries clamped to ≥ 1) and keeping the one with the
/// lowest mean loss over `samples`. A change is accepted only on strict
/// improvement, so the mean loss never increases.
pub fn refine_traced(params: &CodecParams, samples: &[Image], rho: f64, steps: usize) -> Result<Refinement> {
    if samples.is_empty() {
        return Err(Error::Input("refinement needs at least one sample frame".into()));
    }
    check_rho(rho)?;
    params.validate()?;
    let transformed: Vec<Transformed> = samples.iter().map(transform).collect();
    let mean_loss = |p: &CodecParams| -> Result<f64> {
        let mut total = 0.0;
        for (img, t) in samples.iter().zip(&transformed) {
            total += evaluate_transformed(img, t, p, rho)?.loss;
        }
        Ok(total / samples.len() as f64)
    };

    let mut current = params.clone();
    let mut current_loss = mean_loss(&current)?;
    let mut losses = vec![current_loss];
    let order = dct::zigzag();
    for k in 0..steps {
        let entry = order[k % 64];
        let base = current.qtable[entry];
        let mut best = (current_loss, base);
        for factor in &REFINE_FACTORS[1..] {
            let candidate_step = (base * factor).max(1.0);
            if candidate_step == base {
                continue;
            }
            let mut candidate = current.clone();
            candidate.qtable[entry] = candidate_step;
            let loss = mean_loss(&candidate)?;
            if loss < best.0 {
                best = (loss, candidate_step);
            }
        }
        current.qtable[entry] = best.1;
        current_loss = best.0;
        losses.push(current_loss);
    }
    Ok(Refinement { params: current, losses })
}

pub fn refine(params: &CodecParams, samples: &[Image], rho: f64, steps: usize) -> Result<CodecParams> {
    Ok(refine_traced(params, samples, rho, steps)?.params)
}
