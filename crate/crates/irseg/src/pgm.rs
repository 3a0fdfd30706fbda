//! Binary PGM (P5) frames, masks and posterior maps.
//!
//! Frames are 16-bit centikelvin (maxval 65535, big-endian samples). Masks
//! are 8-bit with 0 for clear and 255 for cloud.

use std::path::Path;

use irseg_core::{Grid, LabelMask, TemperatureImage};

use crate::atomic::write_atomic;
use crate::error::{Error, Result};

const MAX_PIXELS: u64 = 1 << 28;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Pgm {
    pub width: usize,
    pub height: usize,
    pub maxval: u32,
    pub samples: Vec<u16>,
}

fn header_err(path: &Path, reason: impl Into<String>) -> Error {
    Error::MalformedHeader {
        path: path.into(),
        reason: reason.into(),
    }
}

/// Reads one whitespace-separated header token, skipping `#` comments.
fn token<'a>(bytes: &'a [u8], pos: &mut usize) -> Option<&'a [u8]> {
    loop {
        while *pos < bytes.len() && bytes[*pos].is_ascii_whitespace() {
            *pos += 1;
        }
        if *pos < bytes.len() && bytes[*pos] == b'#' {
            while *pos < bytes.len() && bytes[*pos] != b'\n' {
                *pos += 1;
            }
            continue;
        }
        break;
    }
    let start = *pos;
    while *pos < bytes.len() && !bytes[*pos].is_ascii_whitespace() {
        *pos += 1;
    }
    (start < *pos).then(|| &bytes[start..*pos])
}

fn number(bytes: &[u8], pos: &mut usize, path: &Path, what: &str) -> Result<u64> {
    let t = token(bytes, pos).ok_or_else(|| header_err(path, format!("missing {what}")))?;
    std::str::from_utf8(t)
        .ok()
        .and_then(|s| s.parse::<u64>().ok())
        .ok_or_else(|| header_err(path, format!("bad {what} `{}`", String::from_utf8_lossy(t))))
}

/// Parses a P5 byte stream; `path` only labels errors.
pub fn parse(bytes: &[u8], path: &Path) -> Result<Pgm> {
    let mut pos = 0;
    if token(bytes, &mut pos) != Some(b"P5") {
        return Err(header_err(path, "expected magic P5"));
    }
    let width = number(bytes, &mut pos, path, "width")?;
    let height = number(bytes, &mut pos, path, "height")?;
    let maxval = number(bytes, &mut pos, path, "maxval")?;
    if width == 0 || height == 0 {
        return Err(header_err(path, "zero dimension"));
    }
    if width.checked_mul(height).is_none_or(|n| n > MAX_PIXELS) {
        return Err(Error::DimensionOverflow {
            path: path.into(),
            width,
            height,
        });
    }
    if maxval == 0 || maxval > 65535 {
        return Err(header_err(path, format!("maxval {maxval} out of range")));
    }
    // exactly one whitespace byte separates the header from the raster
    if pos >= bytes.len() || !bytes[pos].is_ascii_whitespace() {
        return Err(header_err(path, "missing raster separator"));
    }
    pos += 1;
    let n = (width * height) as usize;
    let bps = if maxval > 255 { 2 } else { 1 };
    let raster = &bytes[pos..];
    if raster.len() < n * bps {
        return Err(Error::Truncated {
            path: path.into(),
            expected: n * bps,
            actual: raster.len(),
        });
    }
    let samples = if bps == 2 {
        raster[..2 * n].chunks_exact(2).map(|c| u16::from_be_bytes([c[0], c[1]])).collect()
    } else {
        raster[..n].iter().map(|&b| u16::from(b)).collect()
    };
    Ok(Pgm {
        width: width as usize,
        height: height as usize,
        maxval: maxval as u32,
        samples,
    })
}

pub fn encode(pgm: &Pgm) -> Vec<u8> {
    let mut out = format!("P5\n{} {}\n{}\n", pgm.width, pgm.height, pgm.maxval).into_bytes();
    if pgm.maxval > 255 {
        for s in &pgm.samples {
            out.extend_from_slice(&s.to_be_bytes());
        }
    } else {
        out.extend(pgm.samples.iter().map(|&s| s as u8));
    }
    out
}

pub fn read(path: &Path) -> Result<Pgm> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    parse(&bytes, path)
}

/// Loads a 16-bit centikelvin frame.
pub fn load_frame(path: &Path) -> Result<TemperatureImage> {
    let pgm = read(path)?;
    if pgm.maxval != 65535 {
        return Err(Error::UnsupportedDepth {
            path: path.into(),
            maxval: pgm.maxval,
        });
    }
    let data = pgm.samples.iter().map(|&s| f64::from(s)).collect();
    Ok(TemperatureImage::new(Grid::from_vec(pgm.width, pgm.height, data)?)?)
}

pub fn frame_bytes(img: &TemperatureImage, path: &Path) -> Result<Vec<u8>> {
    let samples = img
        .data()
        .iter()
        .map(|&v| {
            if v.fract() == 0.0 && (0.0..=65535.0).contains(&v) {
                Ok(v as u16)
            } else {
                Err(Error::Format {
                    path: path.into(),
                    reason: format!("temperature {v} is not an integer centikelvin in 0..=65535"),
                })
            }
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(encode(&Pgm {
        width: img.width(),
        height: img.height(),
        maxval: 65535,
        samples,
    }))
}

pub fn write_frame(path: &Path, img: &TemperatureImage) -> Result<()> {
    write_atomic(path, &frame_bytes(img, path)?)
}

pub fn load_mask(path: &Path) -> Result<LabelMask> {
    let pgm = read(path)?;
    if pgm.maxval != 255 {
        return Err(Error::UnsupportedDepth {
            path: path.into(),
            maxval: pgm.maxval,
        });
    }
    let data = pgm
        .samples
        .iter()
        .map(|&s| match s {
            0 => Ok(0),
            255 => Ok(1),
            value => Err(Error::InvalidMaskValue {
                path: path.into(),
                value,
            }),
        })
        .collect::<Result<Vec<u8>>>()?;
    Ok(LabelMask::new(Grid::from_vec(pgm.width, pgm.height, data)?)?)
}

pub fn mask_bytes(width: usize, height: usize, labels: &[u8]) -> Vec<u8> {
    encode(&Pgm {
        width,
        height,
        maxval: 255,
        samples: labels.iter().map(|&l| if l != 0 { 255 } else { 0 }).collect(),
    })
}

pub fn write_mask(path: &Path, mask: &LabelMask) -> Result<()> {
    write_atomic(path, &mask_bytes(mask.width(), mask.height(), mask.data()))
}

/// Posterior map scaled so that 0 maps to 0 and 1 to 65535.
pub fn posterior_bytes(width: usize, height: usize, posterior: &[f64]) -> Vec<u8> {
    encode(&Pgm {
        width,
        height,
        maxval: 65535,
        samples: posterior.iter().map(|&p| (p.clamp(0.0, 1.0) * 65535.0).round() as u16).collect(),
    })
}

pub fn load_posterior(path: &Path) -> Result<Vec<f64>> {
    let pgm = read(path)?;
    if pgm.maxval != 65535 {
        return Err(Error::UnsupportedDepth {
            path: path.into(),
            maxval: pgm.maxval,
        });
    }
    Ok(pgm.samples.iter().map(|&s| f64::from(s) / 65535.0).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p() -> &'static Path {
        Path::new("mem.pgm")
    }

    #[test]
    fn constant_frame_round_trip() {
        let img = TemperatureImage::constant(80, 60, 28315.0);
        let bytes = frame_bytes(&img, p()).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let f = dir.path().join("f.pgm");
        std::fs::write(&f, &bytes).unwrap();
        let back = load_frame(&f).unwrap();
        assert_eq!(back, img);
        assert_eq!(frame_bytes(&back, p()).unwrap(), bytes);
    }

    #[test]
    fn header_comments_are_skipped() {
        let mut bytes = b"P5 # frame\n2 1\n# depth\n65535\n".to_vec();
        bytes.extend_from_slice(&[0x6e, 0x9b, 0x00, 0x01]);
        let pgm = parse(&bytes, p()).unwrap();
        assert_eq!(pgm.samples, [28315, 1]);
    }

    #[test]
    fn byte_depth_frame_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let f = dir.path().join("f.pgm");
        std::fs::write(&f, b"P5\n1 1\n255\n\x10").unwrap();
        assert!(matches!(load_frame(&f).unwrap_err(), Error::UnsupportedDepth { maxval: 255, .. }));
        assert!(load_frame(&f).unwrap_err().to_string().contains("unsupported bit depth"));
    }

    #[test]
    fn parse_errors_are_distinct() {
        assert!(matches!(parse(b"P2\n1 1\n255\n", p()), Err(Error::MalformedHeader { .. })));
        assert!(matches!(parse(b"P5\n1 x\n255\n", p()), Err(Error::MalformedHeader { .. })));
        assert!(matches!(
            parse(b"P5\n99999999 99999999\n255\n", p()),
            Err(Error::DimensionOverflow { .. })
        ));
        assert!(matches!(
            parse(b"P5\n2 2\n65535\n\0\0\0", p()),
            Err(Error::Truncated { expected: 8, actual: 3, .. })
        ));
    }

    #[test]
    fn mask_values() {
        let dir = tempfile::tempdir().unwrap();
        let f = dir.path().join("m.pgm");
        std::fs::write(&f, mask_bytes(3, 1, &[0, 1, 1])).unwrap();
        assert_eq!(load_mask(&f).unwrap().data(), [0, 1, 1]);
        std::fs::write(&f, b"P5\n1 1\n255\n\x07").unwrap();
        assert!(matches!(load_mask(&f), Err(Error::InvalidMaskValue { value: 7, .. })));
    }

    #[test]
    fn fractional_temperature_cannot_be_written() {
        let img = TemperatureImage::constant(1, 1, 1.5);
        assert!(frame_bytes(&img, p()).is_err());
    }

    #[test]
    fn posterior_scale() {
        let bytes = posterior_bytes(3, 1, &[0.0, 0.5, 1.0]);
        let pgm = parse(&bytes, p()).unwrap();
        assert_eq!(pgm.samples, [0, 32768, 65535]);
    }
}
