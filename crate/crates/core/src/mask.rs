//! Binary segmentation masks and the features computed from them.
//!
//! Pixel convention: `(0, 0)` is the centre of the top-left pixel, `x` grows
//! to the right and `y` grows downward. The rasterizer in [`crate::scene`]
//! and every image-space target use the same convention.
//!
//! Masks are stored densely, one bit per pixel, row-major.

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

/// Default image width of the simulated cameras.
pub const DEFAULT_WIDTH: usize = 640;
/// Default image height of the simulated cameras.
pub const DEFAULT_HEIGHT: usize = 480;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MaskError {
    #[error("mask dimensions must be positive, got {width}x{height}")]
    InvalidDimensions { width: usize, height: usize },
    #[error("expected {expected} labels, got {actual}")]
    LabelCount { expected: usize, actual: usize },
    #[error("label at index {index} is {value}, expected 0 or 1")]
    InvalidLabel { index: usize, value: u8 },
    #[error("mask has no labeled pixels")]
    EmptyMask,
    #[error("mask dimensions differ: {a:?} vs {b:?}")]
    DimensionMismatch { a: (usize, usize), b: (usize, usize) },
    #[error("both masks are empty; overlap is undefined")]
    EmptyUnion,
    #[error("malformed mask text: {0}")]
    Parse(String),
}

/// Sub-pixel image feature: the centroid `(s_x, s_y)` of a mask.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct FeatureVector {
    pub x: f64,
    pub y: f64,
}

impl FeatureVector {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

impl From<[f64; 2]> for FeatureVector {
    fn from(v: [f64; 2]) -> Self {
        Self::new(v[0], v[1])
    }
}

/// Dense binary label grid for a single object.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct BinaryMask {
    width: usize,
    height: usize,
    words: Vec<u64>,
}

impl BinaryMask {
    /// All-zero mask.
    pub fn new(width: usize, height: usize) -> Result<Self, MaskError> {
        if width == 0 || height == 0 {
            return Err(MaskError::InvalidDimensions { width, height });
        }
        let n = width * height;
        Ok(Self { width, height, words: vec![0; n.div_ceil(64)] })
    }

    /// Build a mask by evaluating `f(x, y)` at every pixel.
    pub fn from_fn(
        width: usize,
        height: usize,
        mut f: impl FnMut(usize, usize) -> bool,
    ) -> Result<Self, MaskError> {
        let mut mask = Self::new(width, height)?;
        for y in 0..height {
            for x in 0..width {
                if f(x, y) {
                    mask.set(x, y, true);
                }
            }
        }
        Ok(mask)
    }

    /// Build a mask from row-major labels, each of which must be 0 or 1.
    pub fn from_labels(width: usize, height: usize, labels: &[u8]) -> Result<Self, MaskError> {
        let mut mask = Self::new(width, height)?;
        if labels.len() != width * height {
            return Err(MaskError::LabelCount { expected: width * height, actual: labels.len() });
        }
        for (index, &value) in labels.iter().enumerate() {
            match value {
                0 => {}
                1 => mask.words[index / 64] |= 1 << (index % 64),
                _ => return Err(MaskError::InvalidLabel { index, value }),
            }
        }
        Ok(mask)
    }

    /// Mask with the listed `(x, y)` pixels labeled.
    pub fn from_pixels(
        width: usize,
        height: usize,
        pixels: impl IntoIterator<Item = (usize, usize)>,
    ) -> Result<Self, MaskError> {
        let mut mask = Self::new(width, height)?;
        for (x, y) in pixels {
            mask.set(x, y, true);
        }
        Ok(mask)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn dimensions(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    /// Total pixel count.
    pub fn len(&self) -> usize {
        self.width * self.height
    }

    pub fn is_empty(&self) -> bool {
        self.words.iter().all(|&w| w == 0)
    }

    /// # Panics
    /// If `(x, y)` lies outside the mask.
    pub fn get(&self, x: usize, y: usize) -> bool {
        assert!(x < self.width && y < self.height, "pixel ({x}, {y}) out of bounds");
        let i = y * self.width + x;
        self.words[i / 64] >> (i % 64) & 1 == 1
    }

    /// # Panics
    /// If `(x, y)` lies outside the mask.
    pub fn set(&mut self, x: usize, y: usize, value: bool) {
        assert!(x < self.width && y < self.height, "pixel ({x}, {y}) out of bounds");
        let i = y * self.width + x;
        if value {
            self.words[i / 64] |= 1 << (i % 64);
        } else {
            self.words[i / 64] &= !(1 << (i % 64));
        }
    }

    /// Row-major labels as 0/1 bytes.
    pub fn labels(&self) -> Vec<u8> {
        (0..self.len()).map(|i| (self.words[i / 64] >> (i % 64) & 1) as u8).collect()
    }

    /// Coordinates of every labeled pixel in row-major order.
    pub fn labeled_pixels(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        let width = self.width;
        self.words.iter().enumerate().flat_map(move |(wi, &word)| {
            let mut bits = word;
            std::iter::from_fn(move || {
                if bits == 0 {
                    return None;
                }
                let b = bits.trailing_zeros() as usize;
                bits &= bits - 1;
                let i = wi * 64 + b;
                Some((i % width, i / width))
            })
        })
    }

    /// Segmentation area `s_A`: the number of labeled pixels.
    pub fn area(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    /// Mean pixel coordinate of the labeled set.
    pub fn centroid(&self) -> Result<FeatureVector, MaskError> {
        let (mut sx, mut sy, mut n) = (0u64, 0u64, 0u64);
        for (x, y) in self.labeled_pixels() {
            sx += x as u64;
            sy += y as u64;
            n += 1;
        }
        if n == 0 {
            return Err(MaskError::EmptyMask);
        }
        Ok(FeatureVector::new(sx as f64 / n as f64, sy as f64 / n as f64))
    }

    fn check_same_shape(&self, other: &Self) -> Result<(), MaskError> {
        if self.dimensions() != other.dimensions() {
            return Err(MaskError::DimensionMismatch { a: self.dimensions(), b: other.dimensions() });
        }
        Ok(())
    }

    pub fn intersection_area(&self, other: &Self) -> Result<usize, MaskError> {
        self.check_same_shape(other)?;
        Ok(self.words.iter().zip(&other.words).map(|(a, b)| (a & b).count_ones() as usize).sum())
    }

    pub fn union_area(&self, other: &Self) -> Result<usize, MaskError> {
        self.check_same_shape(other)?;
        Ok(self.words.iter().zip(&other.words).map(|(a, b)| (a | b).count_ones() as usize).sum())
    }

    /// Plain PBM (`P1`) text: header, dimensions, then one row of 0/1 per line.
    pub fn to_pbm(&self) -> String {
        let mut out = String::with_capacity(self.len() * 2 + 32);
        out.push_str(&format!("P1\n{} {}\n", self.width, self.height));
        for y in 0..self.height {
            for x in 0..self.width {
                if x > 0 {
                    out.push(' ');
                }
                out.push(if self.get(x, y) { '1' } else { '0' });
            }
            out.push('\n');
        }
        out
    }

    /// Parse plain PBM text. `#` starts a comment running to end of line.
    pub fn from_pbm(text: &str) -> Result<Self, MaskError> {
        let mut tokens = text
            .lines()
            .map(|line| line.split('#').next().unwrap_or(""))
            .flat_map(str::split_whitespace);
        match tokens.next() {
            Some("P1") => {}
            other => return Err(MaskError::Parse(format!("expected P1 magic, found {other:?}"))),
        }
        let mut dim = |what: &str| -> Result<usize, MaskError> {
            tokens
                .next()
                .ok_or_else(|| MaskError::Parse(format!("missing {what}")))?
                .parse()
                .map_err(|e| MaskError::Parse(format!("bad {what}: {e}")))
        };
        let width = dim("width")?;
        let height = dim("height")?;
        let mut labels = Vec::with_capacity(width * height);
        for tok in tokens {
            // Plain PBM allows digits to run together without whitespace.
            for c in tok.chars() {
                match c {
                    '0' => labels.push(0),
                    '1' => labels.push(1),
                    _ => return Err(MaskError::Parse(format!("unexpected character {c:?}"))),
                }
            }
        }
        Self::from_labels(width, height, &labels)
    }
}

impl fmt::Debug for BinaryMask {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("BinaryMask")
            .field("width", &self.width)
            .field("height", &self.height)
            .field("area", &self.area())
            .finish()
    }
}

impl FromStr for BinaryMask {
    type Err = MaskError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::from_pbm(s)
    }
}

/// Segmentation area `s_A`.
pub fn area(mask: &BinaryMask) -> usize {
    mask.area()
}

/// Centroid features `(s_x, s_y)`; fails on an empty mask.
pub fn centroid(mask: &BinaryMask) -> Result<FeatureVector, MaskError> {
    mask.centroid()
}

/// Intersection over union of the labeled sets of `a` and `b`.
///
/// Two empty masks are an error rather than a perfect overlap.
pub fn jaccard(a: &BinaryMask, b: &BinaryMask) -> Result<f64, MaskError> {
    let inter = a.intersection_area(b)?;
    let union = a.union_area(b)?;
    if union == 0 {
        return Err(MaskError::EmptyUnion);
    }
    Ok(inter as f64 / union as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn full_mask_area() {
        let m = BinaryMask::from_fn(640, 480, |_, _| true).unwrap();
        assert_eq!(area(&m), 307_200);
        assert_eq!(area(&BinaryMask::new(17, 3).unwrap()), 0);
    }

    #[test]
    fn three_pixel_area() {
        let m = BinaryMask::from_pixels(3, 3, [(0, 0), (2, 1), (1, 2)]).unwrap();
        assert_eq!(m.area(), 3);
    }

    #[test]
    fn centroid_examples() {
        let m = BinaryMask::from_pixels(40, 40, [(10, 20)]).unwrap();
        assert_eq!(centroid(&m).unwrap(), FeatureVector::new(10.0, 20.0));
        let m = BinaryMask::from_pixels(2, 2, [(0, 0), (1, 1)]).unwrap();
        assert_eq!(centroid(&m).unwrap(), FeatureVector::new(0.5, 0.5));
        let full = BinaryMask::from_fn(5, 5, |_, _| true).unwrap();
        // brute-force mean over all 25 coordinates
        let (mut sx, mut sy) = (0.0, 0.0);
        for y in 0..5 {
            for x in 0..5 {
                sx += x as f64;
                sy += y as f64;
            }
        }
        assert_eq!(centroid(&full).unwrap(), FeatureVector::new(sx / 25.0, sy / 25.0));
        assert_eq!(centroid(&full).unwrap(), FeatureVector::new(2.0, 2.0));
    }

    #[test]
    fn centroid_of_empty_mask_fails() {
        assert_eq!(centroid(&BinaryMask::new(4, 4).unwrap()), Err(MaskError::EmptyMask));
    }

    #[test]
    fn jaccard_examples() {
        let a = BinaryMask::from_pixels(3, 1, [(0, 0), (1, 0)]).unwrap();
        let b = BinaryMask::from_pixels(3, 1, [(1, 0), (2, 0)]).unwrap();
        assert_eq!(jaccard(&a, &b).unwrap(), 1.0 / 3.0);
        assert_eq!(jaccard(&a, &a).unwrap(), 1.0);
        let c = BinaryMask::from_pixels(3, 1, [(2, 0)]).unwrap();
        assert_eq!(jaccard(&a, &c).unwrap(), 0.0);
    }

    #[test]
    fn jaccard_errors() {
        let e = BinaryMask::new(3, 3).unwrap();
        assert_eq!(jaccard(&e, &e), Err(MaskError::EmptyUnion));
        let other = BinaryMask::new(3, 4).unwrap();
        assert!(matches!(jaccard(&e, &other), Err(MaskError::DimensionMismatch { .. })));
    }

    #[test]
    fn invalid_construction() {
        assert!(matches!(BinaryMask::new(0, 5), Err(MaskError::InvalidDimensions { .. })));
        assert!(matches!(
            BinaryMask::from_labels(2, 2, &[0, 1, 2, 0]),
            Err(MaskError::InvalidLabel { index: 2, value: 2 })
        ));
        assert!(matches!(
            BinaryMask::from_labels(2, 2, &[0, 1]),
            Err(MaskError::LabelCount { expected: 4, actual: 2 })
        ));
    }

    #[test]
    fn pbm_text_layout() {
        let m = BinaryMask::from_pixels(3, 2, [(0, 0), (2, 1)]).unwrap();
        assert_eq!(m.to_pbm(), "P1\n3 2\n1 0 0\n0 0 1\n");
        let parsed: BinaryMask = "P1 # comment\n3 2\n100\n0 0 1\n".parse().unwrap();
        assert_eq!(parsed, m);
        assert!(BinaryMask::from_pbm("P2\n1 1\n0").is_err());
        assert!(BinaryMask::from_pbm("P1\n2 2\n0 1 0").is_err());
    }
}
