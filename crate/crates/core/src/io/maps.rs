//! Saliency maps on disk as single-channel feature-map files.

use std::path::Path;

use super::featfile::{read_scalar, FeatureMapFile};
use crate::error::Result;
use crate::sphere::EquirectMap;

pub fn write_map(path: &Path, map: &EquirectMap) -> Result<()> {
    FeatureMapFile::scalar(map.width(), map.height(), map.values())?.write(path)
}

pub fn read_map(path: &Path) -> Result<EquirectMap> {
    let (w, h, values) = read_scalar(path)?;
    EquirectMap::new(w, h, values.into_iter().map(f64::from).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_at_f32_precision() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("m.vbfm");
        let m = EquirectMap::from_fn(12, 6, |c| (c.theta() / 7.0) as f32 as f64);
        write_map(&p, &m).unwrap();
        assert_eq!(read_map(&p).unwrap(), m);
    }
}
