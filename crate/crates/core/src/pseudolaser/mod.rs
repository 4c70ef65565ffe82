//! Depth + traversability fusion and depth slicing into a 1-D pseudo-laser.
//!
//! Pipeline: `apply_semantic_mask` zeroes traversable pixels of the depth
//! image, then `slice_min_pool` takes, per column, the minimum non-zero value
//! in the lower half of the image. Columns with no obstacle read `max_range`.

mod noise;
mod sensing;

use serde::{Deserialize, Serialize};

pub use noise::{augment_noise, augment_noise_seeded, detect_junctions, junction_windows, NoiseParams, MIN_RANGE};
pub use sensing::{sense, SensingConfig, SensingMode};

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum LaserError {
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("invalid value: {0}")]
    Value(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct DepthImage {
    height: usize,
    width: usize,
    max_range: f64,
    values: Vec<f64>,
}

impl DepthImage {
    /// Every value must lie in `(0, max_range]`.
    pub fn new(height: usize, width: usize, max_range: f64, values: Vec<f64>) -> Result<Self, LaserError> {
        if values.len() != height * width {
            return Err(LaserError::Shape(format!("{} values for {height}x{width}", values.len())));
        }
        if let Some(v) = values.iter().find(|&&v| !(v > 0.0 && v <= max_range)) {
            return Err(LaserError::Value(format!("depth {v} outside (0, {max_range}]")));
        }
        Ok(Self { height, width, max_range, values })
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn max_range(&self) -> f64 {
        self.max_range
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.values[row * self.width + col]
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TraversabilityMask {
    height: usize,
    width: usize,
    values: Vec<u8>,
}

impl TraversabilityMask {
    pub fn new(height: usize, width: usize, values: Vec<u8>) -> Result<Self, LaserError> {
        if values.len() != height * width {
            return Err(LaserError::Shape(format!("{} values for {height}x{width}", values.len())));
        }
        if values.iter().any(|&v| v > 1) {
            return Err(LaserError::Value("mask must be binary".into()));
        }
        Ok(Self { height, width, values })
    }

    pub fn filled(height: usize, width: usize, value: u8) -> Self {
        Self { height, width, values: vec![value.min(1); height * width] }
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn values(&self) -> &[u8] {
        &self.values
    }

    pub fn get(&self, row: usize, col: usize) -> u8 {
        self.values[row * self.width + col]
    }

    pub fn set(&mut self, row: usize, col: usize, value: u8) {
        self.values[row * self.width + col] = value.min(1);
    }
}

/// Depth with traversable pixels set to 0.
#[derive(Debug, Clone, PartialEq)]
pub struct MaskedDepth {
    pub height: usize,
    pub width: usize,
    pub max_range: f64,
    pub values: Vec<f64>,
}

impl MaskedDepth {
    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.values[row * self.width + col]
    }

    /// Treat a raw depth image as already masked (nothing removed).
    pub fn unmasked(depth: &DepthImage) -> Self {
        Self { height: depth.height, width: depth.width, max_range: depth.max_range, values: depth.values.clone() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PseudoLaser {
    pub ranges: Vec<f64>,
    pub max_range: f64,
}

impl PseudoLaser {
    pub fn new(ranges: Vec<f64>, max_range: f64) -> Result<Self, LaserError> {
        if let Some(v) = ranges.iter().find(|&&v| !(v > 0.0 && v <= max_range)) {
            return Err(LaserError::Value(format!("range {v} outside (0, {max_range}]")));
        }
        Ok(Self { ranges, max_range })
    }

    pub fn constant(len: usize, value: f64, max_range: f64) -> Self {
        Self { ranges: vec![value; len], max_range }
    }

    pub fn len(&self) -> usize {
        self.ranges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ranges.is_empty()
    }
}

pub fn apply_semantic_mask(depth: &DepthImage, mask: &TraversabilityMask) -> Result<MaskedDepth, LaserError> {
    if depth.height != mask.height || depth.width != mask.width {
        return Err(LaserError::Shape(format!("depth {}x{} vs mask {}x{}", depth.height, depth.width, mask.height, mask.width)));
    }
    let values = depth.values.iter().zip(&mask.values).map(|(&d, &m)| d * f64::from(m)).collect();
    Ok(MaskedDepth { height: depth.height, width: depth.width, max_range: depth.max_range, values })
}

/// Dynamic local minimum pooling over the lower half of the image.
pub fn slice_min_pool(m: &MaskedDepth) -> PseudoLaser {
    let start = m.height / 2;
    let ranges = (0..m.width)
        .map(|j| (start..m.height).map(|i| m.values[i * m.width + j]).filter(|&v| v != 0.0).fold(f64::INFINITY, f64::min))
        .map(|v| if v.is_finite() { v.min(m.max_range) } else { m.max_range })
        .collect();
    PseudoLaser { ranges, max_range: m.max_range }
}

/// Naive horizontal slice: row `row` of the (possibly masked) depth, with
/// masked-out pixels reading `max_range`.
pub fn slice_row(m: &MaskedDepth, row: usize) -> PseudoLaser {
    let ranges = (0..m.width)
        .map(|j| {
            let v = m.values[row * m.width + j];
            if v == 0.0 {
                m.max_range
            } else {
                v.min(m.max_range)
            }
        })
        .collect();
    PseudoLaser { ranges, max_range: m.max_range }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_pair(rng: &mut ChaCha8Rng, h: usize, w: usize) -> (DepthImage, TraversabilityMask) {
        let d: Vec<f64> = (0..h * w).map(|_| rng.random_range(0.01..=6.0)).collect();
        let m: Vec<u8> = (0..h * w).map(|_| rng.random_range(0..2u8)).collect();
        (DepthImage::new(h, w, 6.0, d).unwrap(), TraversabilityMask::new(h, w, m).unwrap())
    }

    #[test]
    fn mask_identity_and_zero() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let (d, _) = random_pair(&mut rng, 8, 8);
        let ones = TraversabilityMask::filled(8, 8, 1);
        assert_eq!(apply_semantic_mask(&d, &ones).unwrap().values, d.values());
        let zeros = TraversabilityMask::filled(8, 8, 0);
        assert!(apply_semantic_mask(&d, &zeros).unwrap().values.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn mask_matches_elementwise_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let (d, m) = random_pair(&mut rng, 6, 10);
        let out = apply_semantic_mask(&d, &m).unwrap();
        for i in 0..6 {
            for j in 0..10 {
                let expect = if m.get(i, j) == 1 { d.get(i, j) } else { 0.0 };
                assert_eq!(out.get(i, j), expect);
            }
        }
    }

    #[test]
    fn mask_shape_mismatch() {
        let d = DepthImage::new(2, 2, 6.0, vec![1.0; 4]).unwrap();
        let m = TraversabilityMask::filled(2, 3, 1);
        assert!(matches!(apply_semantic_mask(&d, &m), Err(LaserError::Shape(_))));
    }

    #[test]
    fn depth_rejects_zero_and_overrange() {
        assert!(DepthImage::new(1, 2, 6.0, vec![0.0, 1.0]).is_err());
        assert!(DepthImage::new(1, 2, 6.0, vec![6.5, 1.0]).is_err());
        assert!(TraversabilityMask::new(1, 2, vec![0, 2]).is_err());
    }

    fn column_image(lower: &[f64]) -> MaskedDepth {
        // upper half filled with small values that must be ignored
        let h = lower.len() * 2;
        let mut values = vec![0.05; lower.len()];
        values.extend_from_slice(lower);
        MaskedDepth { height: h, width: 1, max_range: 6.0, values }
    }

    #[test]
    fn all_traversable_column_reads_max_range() {
        assert_eq!(slice_min_pool(&column_image(&[0.0, 0.0, 0.0])).ranges, vec![6.0]);
    }

    #[test]
    fn zeros_excluded_from_min() {
        assert_eq!(slice_min_pool(&column_image(&[3.2, 0.0, 1.5, 2.0])).ranges, vec![1.5]);
    }

    #[test]
    fn min_pool_matches_brute_force() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let (d, m) = random_pair(&mut rng, 8, 8);
        let md = apply_semantic_mask(&d, &m).unwrap();
        let l = slice_min_pool(&md);
        for j in 0..8 {
            let mut best = None::<f64>;
            for i in 4..8 {
                let v = md.get(i, j);
                if v != 0.0 {
                    best = Some(match best {
                        Some(b) if b <= v => b,
                        _ => v,
                    });
                }
            }
            assert_eq!(l.ranges[j], best.unwrap_or(6.0));
        }
    }

    #[test]
    fn row_slice_reads_max_range_for_masked() {
        let md = MaskedDepth { height: 2, width: 3, max_range: 6.0, values: vec![1.0, 2.0, 3.0, 0.0, 4.0, 0.0] };
        assert_eq!(slice_row(&md, 1).ranges, vec![6.0, 4.0, 6.0]);
    }
}
