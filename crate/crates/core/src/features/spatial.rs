use super::blur::gaussian_blur;
use crate::fusion::normalize_in_place;
use crate::sphere::{BlockFeatureMap, BlockImage};

const LEVELS: usize = 3;
const CENTER_SIGMA: f64 = 1.0;
const SURROUND_SIGMA: f64 = 8.0;

/// Center-surround contrast over a three-level grayscale pyramid,
/// normalized to `[0, 1]`.
///
/// At each level the absolute difference between a narrow and a wide
/// Gaussian blur is taken; levels are upsampled to block resolution and
/// summed.
pub fn spatial_saliency(block: &BlockImage) -> BlockFeatureMap {
    let res = block.spec().resolution();
    let gray: Vec<f64> = block.luma().into_iter().map(|v| v / 255.0).collect();

    let mut acc = vec![0.0; res * res];
    let mut level = gray;
    let mut size = res;
    for depth in 0..LEVELS {
        if depth > 0 {
            if size < 2 {
                break;
            }
            level = downsample(&level, size);
            size = size.div_ceil(2);
        }
        let center = gaussian_blur(&level, size, size, CENTER_SIGMA);
        let surround = gaussian_blur(&level, size, size, SURROUND_SIGMA);
        let contrast: Vec<f64> = center.iter().zip(&surround).map(|(c, s)| (c - s).abs()).collect();
        if size == res {
            acc.iter_mut().zip(&contrast).for_each(|(a, c)| *a += c);
        } else {
            upsample_add(&contrast, size, res, &mut acc);
        }
    }
    normalize_in_place(&mut acc);
    BlockFeatureMap::new(*block.spec(), acc).expect("normalized contrast is finite and nonnegative")
}

/// 2×2 box average; odd sizes repeat the last row/column.
fn downsample(values: &[f64], size: usize) -> Vec<f64> {
    let half = size.div_ceil(2);
    let at = |r: usize, c: usize| values[r.min(size - 1) * size + c.min(size - 1)];
    let mut out = Vec::with_capacity(half * half);
    for r in 0..half {
        for c in 0..half {
            let (r2, c2) = (2 * r, 2 * c);
            out.push(0.25 * (at(r2, c2) + at(r2, c2 + 1) + at(r2 + 1, c2) + at(r2 + 1, c2 + 1)));
        }
    }
    out
}

fn upsample_add(values: &[f64], size: usize, res: usize, acc: &mut [f64]) {
    let scale = size as f64 / res as f64;
    let max = (size - 1) as f64;
    let coord = |i: usize| {
        let s = ((i as f64 + 0.5) * scale - 0.5).clamp(0.0, max);
        let s0 = s.floor();
        let i0 = s0 as usize;
        (i0, (i0 + 1).min(size - 1), s - s0)
    };
    for r in 0..res {
        let (r0, r1, fr) = coord(r);
        for c in 0..res {
            let (c0, c1, fc) = coord(c);
            let top = (1.0 - fc) * values[r0 * size + c0] + fc * values[r0 * size + c1];
            let bottom = (1.0 - fc) * values[r1 * size + c0] + fc * values[r1 * size + c1];
            acc[r * res + c] += (1.0 - fr) * top + fr * bottom;
        }
    }
}
