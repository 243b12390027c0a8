//! Numbered PNG frame and mask sequences.
//!
//! A video directory holds `frames/frame_000000.png`, `frame_000001.png`, …
//! and optionally `masks/` with the same file names. Mask pixels with luma
//! of at least 128 are augmented.

use std::collections::BTreeSet;
use std::io::Cursor;
use std::path::{Path, PathBuf};

use image::{ImageFormat, RgbImage};

use super::atomic::write_atomic;
use crate::augmentation::AugmentationMask;
use crate::error::{Error, Result};
use crate::pipeline::FrameSource;
use crate::sphere::{EquirectMap, Frame};

pub fn frame_name(index: usize) -> String {
    format!("frame_{index:06}.png")
}

pub fn frame_path(root: &Path, index: usize) -> PathBuf {
    root.join("frames").join(frame_name(index))
}

pub fn mask_path(root: &Path, index: usize) -> PathBuf {
    root.join("masks").join(frame_name(index))
}

fn parse_index(name: &str) -> Option<usize> {
    let digits = name.strip_prefix("frame_")?.strip_suffix(".png")?;
    (digits.len() >= 6 && digits.bytes().all(|b| b.is_ascii_digit()))
        .then(|| digits.parse().ok())
        .flatten()
}

fn open(path: &Path) -> Result<image::DynamicImage> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    image::load_from_memory_with_format(&bytes, ImageFormat::Png).map_err(|e| Error::Format {
        path: path.to_path_buf(),
        message: e.to_string(),
    })
}

pub fn read_frame_png(path: &Path) -> Result<Frame> {
    let img = open(path)?.into_rgb8();
    let (w, h) = img.dimensions();
    Frame::new(w as usize, h as usize, img.into_raw())
}

pub fn read_mask_png(path: &Path) -> Result<AugmentationMask> {
    let img = open(path)?.into_luma8();
    let (w, h) = img.dimensions();
    let values = img.into_raw().into_iter().map(|v| if v >= 128 { 1.0 } else { 0.0 }).collect();
    AugmentationMask::new(EquirectMap::new(w as usize, h as usize, values)?)
}

pub fn encode_rgb_png(width: usize, height: usize, rgb: Vec<u8>) -> Result<Vec<u8>> {
    let img = RgbImage::from_raw(width as u32, height as u32, rgb)
        .ok_or_else(|| Error::invalid("pixel buffer does not match image size"))?;
    let mut out = Cursor::new(Vec::new());
    img.write_to(&mut out, ImageFormat::Png)
        .map_err(|e| Error::invalid(format!("PNG encoding failed: {e}")))?;
    Ok(out.into_inner())
}

pub fn write_frame_png(path: &Path, frame: &Frame) -> Result<()> {
    write_atomic(path, &encode_rgb_png(frame.width(), frame.height(), frame.rgb().to_vec())?)
}

pub fn write_mask_png(path: &Path, mask: &AugmentationMask) -> Result<()> {
    let m = mask.map();
    let rgb = m
        .values()
        .iter()
        .flat_map(|&v| if v != 0.0 { [255u8; 3] } else { [0u8; 3] })
        .collect();
    write_atomic(path, &encode_rgb_png(m.width(), m.height(), rgb)?)
}

/// Frames and masks of a video directory.
#[derive(Clone, Debug)]
pub struct DirectoryFrames {
    root: PathBuf,
}

impl DirectoryFrames {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        Self { root: root.into() }
    }

    pub fn root(&self) -> &Path {
        &self.root
    }
}

impl FrameSource for DirectoryFrames {
    fn frame_indices(&self) -> Result<BTreeSet<usize>> {
        let dir = self.root.join("frames");
        let entries = std::fs::read_dir(&dir).map_err(|e| Error::io(&dir, e))?;
        let mut out = BTreeSet::new();
        for entry in entries {
            let entry = entry.map_err(|e| Error::io(&dir, e))?;
            if let Some(i) = entry.file_name().to_str().and_then(parse_index) {
                out.insert(i);
            }
        }
        Ok(out)
    }

    fn load_frame(&self, index: usize) -> Result<Frame> {
        let p = frame_path(&self.root, index);
        if !p.exists() {
            return Err(Error::MissingFrames(vec![index]));
        }
        read_frame_png(&p)
    }

    fn load_mask(&self, index: usize) -> Result<Option<AugmentationMask>> {
        let p = mask_path(&self.root, index);
        if p.exists() {
            read_mask_png(&p).map(Some)
        } else {
            Ok(None)
        }
    }
}
