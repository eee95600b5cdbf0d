//! Quantized frames and their flat binary layout.
//!
//! Layout (little-endian): `u32 width, u32 height, u32 channels, f64 rho`,
//! then every block as 64 `i16` coefficients in row-major order. Blocks are
//! ordered channel-major, then block rows, then block columns.

use std::collections::HashMap;

use crate::error::{Error, Result};

pub const HEADER_BYTES: usize = 4 + 4 + 4 + 8;

/// Bits charged per distinct nonzero symbol for the codebook.
pub const CODEBOOK_BITS_PER_SYMBOL: f64 = 16.0;

#[derive(Debug, Clone, PartialEq)]
pub struct EncodedFrame {
    pub width: usize,
    pub height: usize,
    pub channels: usize,
    pub rho_used: f64,
    pub blocks: Vec<[i32; 64]>,
    pub rate_bits: f64,
}

pub(crate) fn padded(n: usize) -> usize {
    n.div_ceil(8) * 8
}

pub(crate) fn block_count(width: usize, height: usize, channels: usize) -> usize {
    channels * (padded(width) / 8) * (padded(height) / 8)
}

/// Order-0 entropy of the symbol stream times its length, plus a fixed
/// codebook cost per distinct nonzero symbol. Zero iff every symbol is zero.
pub fn rate_bits(blocks: &[[i32; 64]]) -> f64 {
    let mut counts: HashMap<i32, u64> = HashMap::new();
    for b in blocks {
        for &s in b {
            *counts.entry(s).or_default() += 1;
        }
    }
    let total = (blocks.len() * 64) as f64;
    let mut symbols: Vec<(i32, u64)> = counts.into_iter().collect();
    // fixed summation order keeps the result bit-reproducible
    symbols.sort_unstable();
    let entropy_bits: f64 = symbols
        .iter()
        .map(|&(_, c)| {
            let c = c as f64;
            -c * (c / total).log2()
        })
        .sum();
    let codebook = symbols.iter().filter(|(s, _)| *s != 0).count() as f64 * CODEBOOK_BITS_PER_SYMBOL;
    (entropy_bits + codebook).max(0.0)
}

impl EncodedFrame {
    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let mut out = Vec::with_capacity(HEADER_BYTES + self.blocks.len() * 128);
        for dim in [self.width, self.height, self.channels] {
            let v = u32::try_from(dim).map_err(|_| Error::Format(format!("dimension {dim} exceeds u32")))?;
            out.extend(v.to_le_bytes());
        }
        out.extend(self.rho_used.to_le_bytes());
        for b in &self.blocks {
            for &q in b {
                let v = i16::try_from(q).map_err(|_| Error::Format(format!("coefficient {q} exceeds i16")))?;
                out.extend(v.to_le_bytes());
            }
        }
        Ok(out)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        if bytes.len() < HEADER_BYTES {
            return Err(Error::Format("frame shorter than header".into()));
        }
        let u32_at = |i: usize| u32::from_le_bytes(bytes[i..i + 4].try_into().unwrap()) as usize;
        let (width, height, channels) = (u32_at(0), u32_at(4), u32_at(8));
        let rho_used = f64::from_le_bytes(bytes[12..20].try_into().unwrap());
        let n = block_count(width, height, channels);
        let payload = &bytes[HEADER_BYTES..];
        if payload.len() != n * 128 {
            return Err(Error::Format(format!(
                "payload of {} bytes, expected {} for {width}x{height}x{channels}",
                payload.len(),
                n * 128
            )));
        }
        let blocks: Vec<[i32; 64]> = payload
            .chunks_exact(128)
            .map(|chunk| std::array::from_fn(|k| i16::from_le_bytes([chunk[2 * k], chunk[2 * k + 1]]) as i32))
            .collect();
        let rate_bits = rate_bits(&blocks);
        Ok(EncodedFrame { width, height, channels, rho_used, blocks, rate_bits })
    }
}
