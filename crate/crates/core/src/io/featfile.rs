//! Binary feature-map files.
//!
//! Layout, all little-endian:
//!
//! | offset | size | field                      |
//! |--------|------|----------------------------|
//! | 0      | 4    | magic `VBFM`               |
//! | 4      | 2    | version (`u16`, 1)         |
//! | 6      | 4    | width (`u32`)              |
//! | 10     | 4    | height (`u32`)             |
//! | 14     | 4    | channels (`u32`)           |
//! | 18     | 4·n  | `f32` values, row-major, channel-interleaved |

use std::path::Path;

use super::atomic::write_atomic;
use crate::error::{Error, Result};

pub const MAGIC: &[u8; 4] = b"VBFM";
pub const VERSION: u16 = 1;
pub const HEADER_LEN: usize = 18;

/// Raw contents of a feature-map file.
#[derive(Clone, Debug, PartialEq)]
pub struct FeatureMapFile {
    pub width: usize,
    pub height: usize,
    pub channels: usize,
    pub data: Vec<f32>,
}

impl FeatureMapFile {
    pub fn new(width: usize, height: usize, channels: usize, data: Vec<f32>) -> Result<Self> {
        if width == 0 || height == 0 || channels == 0 {
            return Err(Error::invalid("feature map dimensions must be positive"));
        }
        if data.len() != width * height * channels {
            return Err(Error::DimensionMismatch {
                expected: format!("{} values", width * height * channels),
                actual: format!("{} values", data.len()),
            });
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("feature map contains non-finite values"));
        }
        Ok(Self {
            width,
            height,
            channels,
            data,
        })
    }

    pub fn scalar(width: usize, height: usize, values: &[f64]) -> Result<Self> {
        Self::new(width, height, 1, values.iter().map(|&v| v as f32).collect())
    }

    pub fn flow(width: usize, height: usize, u: &[f64], v: &[f64]) -> Result<Self> {
        let data = u.iter().zip(v).flat_map(|(a, b)| [*a as f32, *b as f32]).collect();
        Self::new(width, height, 2, data)
    }

    pub fn encode(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(HEADER_LEN + 4 * self.data.len());
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&VERSION.to_le_bytes());
        out.extend_from_slice(&(self.width as u32).to_le_bytes());
        out.extend_from_slice(&(self.height as u32).to_le_bytes());
        out.extend_from_slice(&(self.channels as u32).to_le_bytes());
        for v in &self.data {
            out.extend_from_slice(&v.to_le_bytes());
        }
        out
    }

    pub fn decode(bytes: &[u8]) -> Result<Self> {
        let parse = |offset: usize, message: String| Error::Parse {
            offset: offset as u64,
            message,
        };
        if bytes.len() < HEADER_LEN {
            return Err(parse(
                bytes.len(),
                format!("truncated header: expected {HEADER_LEN} bytes, found {}", bytes.len()),
            ));
        }
        if &bytes[0..4] != MAGIC {
            return Err(parse(0, format!("bad magic {:?}", &bytes[0..4])));
        }
        let version = u16::from_le_bytes([bytes[4], bytes[5]]);
        if version != VERSION {
            return Err(parse(4, format!("unsupported version {version}")));
        }
        let word = |at: usize| u32::from_le_bytes(bytes[at..at + 4].try_into().unwrap()) as usize;
        let (width, height, channels) = (word(6), word(10), word(14));
        for (at, name, v) in [(6, "width", width), (10, "height", height), (14, "channels", channels)] {
            if v == 0 {
                return Err(parse(at, format!("{name} must be positive")));
            }
        }
        let count = width
            .checked_mul(height)
            .and_then(|n| n.checked_mul(channels))
            .ok_or_else(|| parse(6, "dimensions overflow".into()))?;
        let expected = count
            .checked_mul(4)
            .and_then(|n| n.checked_add(HEADER_LEN))
            .ok_or_else(|| parse(6, "dimensions overflow".into()))?;
        if bytes.len() != expected {
            return Err(parse(
                bytes.len().min(expected),
                format!("expected {expected} bytes, found {}", bytes.len()),
            ));
        }
        let mut data = Vec::with_capacity(count);
        for (k, chunk) in bytes[HEADER_LEN..].chunks_exact(4).enumerate() {
            let v = f32::from_le_bytes(chunk.try_into().unwrap());
            if !v.is_finite() {
                return Err(parse(HEADER_LEN + 4 * k, format!("non-finite value {v}")));
            }
            data.push(v);
        }
        Ok(Self {
            width,
            height,
            channels,
            data,
        })
    }

    pub fn read(path: &Path) -> Result<Self> {
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        Self::decode(&bytes).map_err(|e| match e {
            Error::Parse { offset, message } => Error::Format {
                path: path.to_path_buf(),
                message: format!("byte {offset}: {message}"),
            },
            e => e,
        })
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        write_atomic(path, &self.encode())
    }
}

/// Typed view of a feature-map file.
#[derive(Clone, Debug, PartialEq)]
pub enum FeaturePayload {
    Scalar { width: usize, height: usize, values: Vec<f32> },
    Flow { width: usize, height: usize, u: Vec<f32>, v: Vec<f32> },
}

impl TryFrom<FeatureMapFile> for FeaturePayload {
    type Error = Error;

    fn try_from(f: FeatureMapFile) -> Result<Self> {
        match f.channels {
            1 => Ok(FeaturePayload::Scalar {
                width: f.width,
                height: f.height,
                values: f.data,
            }),
            2 => {
                let (u, v) = f.data.chunks_exact(2).map(|c| (c[0], c[1])).unzip();
                Ok(FeaturePayload::Flow {
                    width: f.width,
                    height: f.height,
                    u,
                    v,
                })
            }
            c => Err(Error::TypeMismatch {
                expected: "1-channel feature map or 2-channel flow".into(),
                found: format!("{c}-channel data"),
            }),
        }
    }
}

/// Reads and validates a feature-map file.
pub fn read_feature_map(path: &Path) -> Result<FeaturePayload> {
    FeatureMapFile::read(path)?.try_into()
}

/// Reads a file that must hold a 2-channel flow field.
pub fn read_flow(path: &Path) -> Result<(usize, usize, Vec<f32>, Vec<f32>)> {
    let f = FeatureMapFile::read(path)?;
    if f.channels != 2 {
        return Err(Error::TypeMismatch {
            expected: "2-channel flow field".into(),
            found: format!("{}-channel data", f.channels),
        });
    }
    match FeaturePayload::try_from(f)? {
        FeaturePayload::Flow { width, height, u, v } => Ok((width, height, u, v)),
        FeaturePayload::Scalar { .. } => unreachable!(),
    }
}

/// Reads a file that must hold a 1-channel map.
pub fn read_scalar(path: &Path) -> Result<(usize, usize, Vec<f32>)> {
    let f = FeatureMapFile::read(path)?;
    if f.channels != 1 {
        return Err(Error::TypeMismatch {
            expected: "1-channel feature map".into(),
            found: format!("{}-channel data", f.channels),
        });
    }
    Ok((f.width, f.height, f.data))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn header_layout() {
        let f = FeatureMapFile::new(2, 1, 1, vec![1.0, -2.5]).unwrap();
        let b = f.encode();
        assert_eq!(b.len(), HEADER_LEN + 8);
        assert_eq!(&b[..4], b"VBFM");
        assert_eq!(&b[4..6], &[1, 0]);
        assert_eq!(&b[6..10], &[2, 0, 0, 0]);
        assert_eq!(&b[10..14], &[1, 0, 0, 0]);
        assert_eq!(&b[14..18], &[1, 0, 0, 0]);
        assert_eq!(&b[18..22], &1.0f32.to_le_bytes());
    }

    #[test]
    fn truncated_reports_lengths() {
        let mut b = FeatureMapFile::new(3, 3, 1, vec![0.5; 9]).unwrap().encode();
        b.truncate(30);
        let err = FeatureMapFile::decode(&b).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("expected 54 bytes") && msg.contains("found 30"), "{msg}");
        assert!(matches!(err, Error::Parse { offset: 30, .. }));
        assert!(matches!(FeatureMapFile::decode(&b[..7]), Err(Error::Parse { offset: 7, .. })));
    }

    #[test]
    fn bad_magic_and_version() {
        let mut b = FeatureMapFile::new(1, 1, 1, vec![0.0]).unwrap().encode();
        b[4] = 2;
        assert!(matches!(FeatureMapFile::decode(&b), Err(Error::Parse { offset: 4, .. })));
        b[0] = b'X';
        assert!(matches!(FeatureMapFile::decode(&b), Err(Error::Parse { offset: 0, .. })));
    }

    #[test]
    fn non_finite_rejected_with_offset() {
        let mut b = FeatureMapFile::new(2, 1, 1, vec![0.0, 1.0]).unwrap().encode();
        b[22..26].copy_from_slice(&f32::NAN.to_le_bytes());
        assert!(matches!(FeatureMapFile::decode(&b), Err(Error::Parse { offset: 22, .. })));
    }

    #[test]
    fn three_channels_where_flow_expected() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("x.vbfm");
        FeatureMapFile::new(1, 1, 3, vec![0.0; 3]).unwrap().write(&p).unwrap();
        assert!(matches!(read_flow(&p), Err(Error::TypeMismatch { .. })));
        assert!(matches!(read_feature_map(&p), Err(Error::TypeMismatch { .. })));
    }

    #[test]
    fn flow_channels_interleave() {
        let f = FeatureMapFile::flow(2, 1, &[1.0, 2.0], &[3.0, 4.0]).unwrap();
        assert_eq!(f.data, vec![1.0, 3.0, 2.0, 4.0]);
        match FeaturePayload::try_from(f).unwrap() {
            FeaturePayload::Flow { u, v, .. } => {
                assert_eq!(u, vec![1.0, 2.0]);
                assert_eq!(v, vec![3.0, 4.0]);
            }
            _ => panic!("expected flow"),
        }
    }

    proptest! {
        #[test]
        fn round_trip_bit_identical(w in 1usize..6, h in 1usize..6, c in 1usize..4, seed in any::<u32>()) {
            let data: Vec<f32> = (0..w * h * c)
                .map(|i| ((i as u32).wrapping_mul(2654435761) ^ seed) as f32 / 1e6 - 1e3)
                .collect();
            let f = FeatureMapFile::new(w, h, c, data).unwrap();
            let bytes = f.encode();
            prop_assert_eq!(bytes.len(), HEADER_LEN + 4 * w * h * c);
            let back = FeatureMapFile::decode(&bytes).unwrap();
            prop_assert_eq!(back.encode(), bytes);
            prop_assert_eq!(back, f);
        }
    }
}
