//! Planar floating-point images and 8-bit binary PGM (P5) / PPM (P6) I/O.

use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};

/// A 1- or 3-channel image stored plane by plane, row-major within a plane.
///
/// Samples are nominally in [0, 255]; intermediate results (e.g. an inverse
/// transform before clamping) may leave that range but are always finite.
#[derive(Debug, Clone, PartialEq)]
pub struct Image {
    width: usize,
    height: usize,
    channels: usize,
    data: Vec<f64>,
}

impl Image {
    pub fn new(width: usize, height: usize, channels: usize, data: Vec<f64>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::Input(format!("empty image {width}x{height}")));
        }
        if channels != 1 && channels != 3 {
            return Err(Error::Input(format!("unsupported channel count {channels}")));
        }
        if data.len() != width * height * channels {
            return Err(Error::Format(format!(
                "{} samples for a {width}x{height}x{channels} image",
                data.len()
            )));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::Input("image contains non-finite samples".into()));
        }
        Ok(Image { width, height, channels, data })
    }

    pub fn filled(width: usize, height: usize, channels: usize, value: f64) -> Result<Self> {
        Self::new(width, height, channels, vec![value; width * height * channels])
    }

    /// Build from a per-pixel function `f(channel, x, y)`.
    pub fn from_fn(width: usize, height: usize, channels: usize, mut f: impl FnMut(usize, usize, usize) -> f64) -> Result<Self> {
        let mut data = Vec::with_capacity(width * height * channels);
        for c in 0..channels {
            for y in 0..height {
                for x in 0..width {
                    data.push(f(c, x, y));
                }
            }
        }
        Self::new(width, height, channels, data)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn samples(&self) -> &[f64] {
        &self.data
    }

    pub fn plane(&self, c: usize) -> &[f64] {
        let n = self.width * self.height;
        &self.data[c * n..(c + 1) * n]
    }

    pub fn plane_mut(&mut self, c: usize) -> &mut [f64] {
        let n = self.width * self.height;
        &mut self.data[c * n..(c + 1) * n]
    }

    pub fn get(&self, c: usize, x: usize, y: usize) -> f64 {
        self.data[(c * self.height + y) * self.width + x]
    }

    pub fn same_shape(&self, other: &Image) -> bool {
        self.width == other.width && self.height == other.height && self.channels == other.channels
    }

    pub(crate) fn check_shape(&self, other: &Image) -> Result<()> {
        if self.same_shape(other) {
            Ok(())
        } else {
            Err(Error::Format(format!(
                "image shapes differ: {}x{}x{} vs {}x{}x{}",
                self.width, self.height, self.channels, other.width, other.height, other.channels
            )))
        }
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Image {
        Image { data: self.data.iter().map(|&v| f(v)).collect(), ..self.clone() }
    }

    pub fn clamped(&self) -> Image {
        self.map(|v| v.clamp(0.0, 255.0))
    }

    /// Mean squared error over all samples.
    pub fn mse(&self, other: &Image) -> Result<f64> {
        self.check_shape(other)?;
        let sum: f64 = self.data.iter().zip(&other.data).map(|(a, b)| (a - b) * (a - b)).sum();
        Ok(sum / self.data.len() as f64)
    }

    /// Encode as binary PGM (1 channel) or PPM (3 channels); samples are
    /// rounded and clamped to 8 bits.
    pub fn to_pnm(&self) -> Vec<u8> {
        let magic = if self.channels == 1 { "P5" } else { "P6" };
        let mut out = format!("{magic}\n{} {}\n255\n", self.width, self.height).into_bytes();
        let n = self.width * self.height;
        for i in 0..n {
            for c in 0..self.channels {
                out.push(self.data[c * n + i].round().clamp(0.0, 255.0) as u8);
            }
        }
        out
    }

    pub fn from_pnm(bytes: &[u8]) -> Result<Image> {
        let mut pos = 0;
        let mut token = || -> Result<String> {
            loop {
                while pos < bytes.len() && bytes[pos].is_ascii_whitespace() {
                    pos += 1;
                }
                if pos < bytes.len() && bytes[pos] == b'#' {
                    while pos < bytes.len() && bytes[pos] != b'\n' {
                        pos += 1;
                    }
                    continue;
                }
                break;
            }
            let start = pos;
            while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() {
                pos += 1;
            }
            if start == pos {
                return Err(Error::Format("truncated PNM header".into()));
            }
            Ok(String::from_utf8_lossy(&bytes[start..pos]).into_owned())
        };
        let channels = match token()?.as_str() {
            "P5" => 1,
            "P6" => 3,
            other => return Err(Error::Format(format!("unsupported PNM magic {other:?}"))),
        };
        let mut number = |what: &str| -> Result<usize> {
            token()?.parse().map_err(|_| Error::Format(format!("bad PNM {what}")))
        };
        let width = number("width")?;
        let height = number("height")?;
        let maxval = number("maxval")?;
        if maxval != 255 {
            return Err(Error::Format(format!("only 8-bit PNM supported, maxval {maxval}")));
        }
        // exactly one whitespace byte separates the header from the raster
        let raster = &bytes[pos + 1..];
        let n = width * height;
        if raster.len() < n * channels {
            return Err(Error::Format("truncated PNM raster".into()));
        }
        let mut data = vec![0.0; n * channels];
        for i in 0..n {
            for c in 0..channels {
                data[c * n + i] = raster[i * channels + c] as f64;
            }
        }
        Image::new(width, height, channels, data)
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Image> {
        let path = path.as_ref();
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        Image::from_pnm(&bytes)
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::File::create(path)
            .and_then(|mut f| f.write_all(&self.to_pnm()))
            .map_err(|e| Error::io(path, e))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn rejects_bad_shapes() {
        assert!(Image::new(0, 4, 1, vec![]).is_err());
        assert!(Image::new(2, 2, 2, vec![0.0; 8]).is_err());
        assert!(Image::new(2, 2, 1, vec![0.0; 3]).is_err());
        assert!(Image::new(1, 1, 1, vec![f64::NAN]).is_err());
    }

    #[test]
    fn pnm_header_with_comment() {
        let mut bytes = b"P5\n# made by hand\n2 1\n255\n".to_vec();
        bytes.extend([7u8, 200]);
        let img = Image::from_pnm(&bytes).unwrap();
        assert_eq!((img.width(), img.height(), img.channels()), (2, 1, 1));
        assert_eq!(img.samples(), &[7.0, 200.0]);
        assert!(Image::from_pnm(b"P3\n1 1\n255\n0 0 0").is_err());
        assert!(Image::from_pnm(b"P5\n4 4\n255\n\x01").is_err());
    }

    proptest! {
        #[test]
        fn pnm_round_trip(w in 1usize..9, h in 1usize..9, color in any::<bool>(), seed in any::<u64>()) {
            use rand::Rng;
            let channels = if color { 3 } else { 1 };
            let mut rng = crate::rng::stream(seed, &[]);
            let img = Image::from_fn(w, h, channels, |_, _, _| rng.random_range(0..=255) as f64).unwrap();
            prop_assert_eq!(Image::from_pnm(&img.to_pnm()).unwrap(), img);
        }
    }
}
