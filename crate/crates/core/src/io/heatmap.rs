//! Viridis rendering of saliency maps.

use super::frames::encode_rgb_png;
use crate::error::{Error, Result};
use crate::sphere::{EquirectMap, Frame};

fn colour(v: f64) -> [u8; 3] {
    let v = if v.is_finite() { v.clamp(0.0, 1.0) } else { 0.0 };
    let c = colorous::VIRIDIS.eval_continuous(v);
    [c.r, c.g, c.b]
}

/// RGB pixels of the rendered map, optionally blended half and half over
/// `overlay`.
pub fn heatmap_rgb(map: &EquirectMap, overlay: Option<&Frame>) -> Result<Vec<u8>> {
    if let Some(f) = overlay {
        if !f.same_dims(map) {
            return Err(Error::DimensionMismatch {
                expected: format!("{}x{}", map.width(), map.height()),
                actual: format!("{}x{}", f.width(), f.height()),
            });
        }
    }
    let mut rgb = Vec::with_capacity(map.values().len() * 3);
    for (i, &v) in map.values().iter().enumerate() {
        let c = colour(v);
        match overlay {
            None => rgb.extend_from_slice(&c),
            Some(f) => {
                let base = &f.rgb()[3 * i..3 * i + 3];
                rgb.extend(c.iter().zip(base).map(|(&a, &b)| (a as u16 + b as u16).div_ceil(2) as u8));
            }
        }
    }
    Ok(rgb)
}

/// PNG bytes of the rendered map.
pub fn render_heatmap(map: &EquirectMap, overlay: Option<&Frame>) -> Result<Vec<u8>> {
    encode_rgb_png(map.width(), map.height(), heatmap_rgb(map, overlay)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_map_single_colour() {
        let rgb = heatmap_rgb(&EquirectMap::zeros(10, 5), None).unwrap();
        assert!(rgb.chunks(3).all(|c| c == &rgb[..3]));
    }

    #[test]
    fn dims_and_determinism() {
        let m = EquirectMap::from_fn(20, 10, |c| c.phi() / std::f64::consts::PI);
        let a = render_heatmap(&m, None).unwrap();
        assert_eq!(a, render_heatmap(&m, None).unwrap());
        let img = image::load_from_memory(&a).unwrap();
        assert_eq!((img.width(), img.height()), (20, 10));
    }

    #[test]
    fn overlay_blends() {
        let m = EquirectMap::zeros(4, 2);
        let f = Frame::new(4, 2, vec![255; 24]).unwrap();
        let base = colour(0.0);
        let rgb = heatmap_rgb(&m, Some(&f)).unwrap();
        assert_eq!(rgb[0], ((base[0] as u16 + 256) / 2) as u8);
        assert!(heatmap_rgb(&EquirectMap::zeros(3, 2), Some(&f)).is_err());
    }
}
