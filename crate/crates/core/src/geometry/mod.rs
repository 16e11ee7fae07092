//! Synthetic rectangle images: rendering, the rectangle counter and the
//! sibling-pair dataset builder.

mod count;
mod image;
pub mod pgm;

pub use count::{count_rectangles, RectCount};
pub use image::{BinaryImage, BINARIZE_AT};

use rand::Rng;

use crate::error::{Error, Result};
use crate::rng;

pub const DEFAULT_SIDE: usize = 32;
pub const DEFAULT_RECT: usize = 8;

/// Retry cap for rejection sampling of one base image.
const PLACEMENT_ATTEMPTS: usize = 10_000;

/// Axis-aligned filled rectangle, top-left corner at `(x, y)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct RectSpec {
    pub x: usize,
    pub y: usize,
    pub w: usize,
    pub h: usize,
}

impl RectSpec {
    pub fn square(x: usize, y: usize) -> Self {
        RectSpec { x, y, w: DEFAULT_RECT, h: DEFAULT_RECT }
    }

    fn fits(&self, width: usize, height: usize) -> bool {
        self.w > 0 && self.h > 0 && self.x + self.w <= width && self.y + self.h <= height
    }

    /// True when at least one empty row or column separates the two rectangles.
    pub fn separated_from(&self, other: &RectSpec) -> bool {
        self.x + self.w < other.x
            || other.x + other.w < self.x
            || self.y + self.h < other.y
            || other.y + other.h < self.y
    }

    /// The same rectangle moved by `(dx, dy)`, if it stays in bounds.
    pub fn translated(&self, dx: isize, dy: isize, width: usize, height: usize) -> Option<Self> {
        let x = self.x.checked_add_signed(dx)?;
        let y = self.y.checked_add_signed(dy)?;
        let moved = RectSpec { x, y, ..*self };
        moved.fits(width, height).then_some(moved)
    }
}

/// Rasterize rectangles: 1.0 inside any rectangle, 0.0 elsewhere.
pub fn render(specs: &[RectSpec], width: usize, height: usize) -> Result<BinaryImage> {
    let mut img = BinaryImage::zeros(width, height);
    for r in specs {
        if !r.fits(width, height) {
            return Err(Error::OutOfBounds {
                x: r.x,
                y: r.y,
                w: r.w,
                h: r.h,
                width,
                height,
            });
        }
        for y in r.y..r.y + r.h {
            for x in r.x..r.x + r.w {
                img.set(x, y, 1.0);
            }
        }
    }
    Ok(img)
}

/// Draw `k` mutually separated `rect`×`rect` squares inside a `side`×`side`
/// image by rejection sampling.
pub fn place_separated<R: Rng + ?Sized>(
    rng: &mut R,
    k: usize,
    side: usize,
    rect: usize,
) -> Result<Vec<RectSpec>> {
    if rect == 0 || rect > side {
        return Err(Error::invalid("rect", format!("{rect} does not fit side {side}")));
    }
    let span = side - rect + 1;
    for _ in 0..PLACEMENT_ATTEMPTS {
        let mut placed: Vec<RectSpec> = Vec::with_capacity(k);
        for _ in 0..k {
            let cand = RectSpec {
                x: rng.random_range(0..span),
                y: rng.random_range(0..span),
                w: rect,
                h: rect,
            };
            if placed.iter().all(|p| p.separated_from(&cand)) {
                placed.push(cand);
            } else {
                break;
            }
        }
        if placed.len() == k {
            return Ok(placed);
        }
    }
    Err(Error::PlacementExhausted { attempts: PLACEMENT_ATTEMPTS })
}

/// Images with a declared rectangle count, plus sibling provenance when the
/// set was built by [`generate_paired`].
#[derive(Debug, Clone, PartialEq)]
pub struct GeometryDataset {
    pub images: Vec<BinaryImage>,
    pub target_count: usize,
    /// `(i, j)` index pairs of siblings cut from the same three-rectangle base.
    pub sibling_pairs: Vec<(usize, usize)>,
    /// Base image each entry was derived from, when known.
    pub base_index: Vec<Option<usize>>,
}

impl GeometryDataset {
    pub fn from_images(images: Vec<BinaryImage>, target_count: usize) -> Self {
        let n = images.len();
        GeometryDataset {
            images,
            target_count,
            sibling_pairs: Vec::new(),
            base_index: vec![None; n],
        }
    }

    pub fn len(&self) -> usize {
        self.images.len()
    }

    pub fn is_empty(&self) -> bool {
        self.images.is_empty()
    }

    pub fn pixel_count(&self) -> usize {
        self.images.first().map_or(0, |img| img.len())
    }

    /// Index of the sibling of image `i`, if any.
    pub fn sibling_of(&self, i: usize) -> Option<usize> {
        self.sibling_pairs.iter().find_map(|&(a, b)| {
            if a == i {
                Some(b)
            } else if b == i {
                Some(a)
            } else {
                None
            }
        })
    }
}

/// Build `2·n_base` two-rectangle images on the default 32×32 canvas.
///
/// Each base image holds three separated 8×8 squares. Two distinct squares are
/// removed in turn, giving a sibling pair whose pixel-wise OR has three
/// rectangles and whose AND has one. Base image `b` draws from stream `b` of
/// `seed`.
pub fn generate_paired(n_base: usize, seed: u64) -> Result<GeometryDataset> {
    generate_paired_with(n_base, seed, DEFAULT_SIDE, DEFAULT_RECT)
}

pub fn generate_paired_with(
    n_base: usize,
    seed: u64,
    side: usize,
    rect: usize,
) -> Result<GeometryDataset> {
    if n_base == 0 {
        return Err(Error::invalid("n_base", "must be positive"));
    }
    let mut images = Vec::with_capacity(2 * n_base);
    let mut sibling_pairs = Vec::with_capacity(n_base);
    let mut base_index = Vec::with_capacity(2 * n_base);
    for b in 0..n_base {
        let mut rng = rng::stream(seed, b as u64);
        let rects = place_separated(&mut rng, 3, side, rect)?;
        let first = rng.random_range(0..3);
        let second = (first + rng.random_range(1..3)) % 3;
        for removed in [first, second] {
            let kept: Vec<RectSpec> = rects
                .iter()
                .enumerate()
                .filter(|&(i, _)| i != removed)
                .map(|(_, r)| *r)
                .collect();
            images.push(render(&kept, side, side)?);
            base_index.push(Some(b));
        }
        sibling_pairs.push((2 * b, 2 * b + 1));
    }
    Ok(GeometryDataset {
        images,
        target_count: 2,
        sibling_pairs,
        base_index,
    })
}

/// `n` images each holding exactly `k` separated squares, image `i` drawn from
/// stream `i` of `seed`.
pub fn generate_with_count(n: usize, k: usize, seed: u64) -> Result<GeometryDataset> {
    let images = (0..n)
        .map(|i| {
            let mut rng = rng::stream(seed, i as u64);
            let rects = place_separated(&mut rng, k, DEFAULT_SIDE, DEFAULT_RECT)?;
            render(&rects, DEFAULT_SIDE, DEFAULT_SIDE)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(GeometryDataset::from_images(images, k))
}

/// Two three-rectangle images sharing two rectangles: their AND holds two
/// rectangles and their OR holds four.
pub fn generate_toy_pair(seed: u64) -> Result<GeometryDataset> {
    let mut rng = rng::stream(seed, 0);
    let r = place_separated(&mut rng, 4, DEFAULT_SIDE, DEFAULT_RECT)?;
    let images = vec![
        render(&[r[0], r[1], r[2]], DEFAULT_SIDE, DEFAULT_SIDE)?,
        render(&[r[0], r[1], r[3]], DEFAULT_SIDE, DEFAULT_SIDE)?,
    ];
    Ok(GeometryDataset::from_images(images, 3))
}

/// Closest training image by Euclidean distance over raw pixel values; ties go
/// to the lowest index.
pub fn nearest_neighbor(sample: &BinaryImage, dataset: &[BinaryImage]) -> Result<(usize, f64)> {
    let mut best: Option<(usize, f64)> = None;
    for (i, img) in dataset.iter().enumerate() {
        let d2 = sample.squared_distance(img)?;
        if best.is_none_or(|(_, b)| d2 < b) {
            best = Some((i, d2));
        }
    }
    best.map(|(i, d2)| (i, d2.sqrt())).ok_or(Error::EmptyDataset)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn render_empty_is_blank() {
        let img = render(&[], 32, 32).unwrap();
        assert!(img.pixels().iter().all(|&p| p == 0.0));
    }

    #[test]
    fn render_single_square_has_64_pixels() {
        let img = render(&[RectSpec::square(0, 0)], 32, 32).unwrap();
        assert_eq!(img.pixels().iter().filter(|&&p| p == 1.0).count(), 64);
    }

    #[test]
    fn render_overlap_is_a_union() {
        let img = render(&[RectSpec::square(0, 0), RectSpec::square(4, 4)], 32, 32).unwrap();
        let fg = img.pixels().iter().filter(|&&p| p == 1.0).count();
        assert!(fg < 128);
        assert_eq!(fg, 64 + 64 - 16);
    }

    #[test]
    fn render_rejects_out_of_bounds() {
        assert!(matches!(
            render(&[RectSpec::square(25, 0)], 32, 32),
            Err(Error::OutOfBounds { .. })
        ));
    }

    #[test]
    fn paired_sizes() {
        assert_eq!(generate_paired(32, 3).unwrap().len(), 64);
        let big = generate_paired(12800, 11).unwrap();
        assert_eq!(big.len(), 25600);
        assert_eq!(big.sibling_pairs.len(), 12800);
    }

    #[test]
    fn paired_images_all_have_two_clean_rectangles() {
        let ds = generate_paired(200, 5).unwrap();
        for img in &ds.images {
            assert_eq!(count_rectangles(img, 8, 8), RectCount { count: 2, clean: true });
        }
        for &(a, b) in &ds.sibling_pairs {
            assert_ne!(ds.images[a], ds.images[b]);
            assert_eq!(ds.sibling_of(a), Some(b));
        }
    }

    #[test]
    fn paired_is_deterministic_per_seed() {
        assert_eq!(generate_paired(20, 9).unwrap(), generate_paired(20, 9).unwrap());
        assert_ne!(generate_paired(20, 9).unwrap(), generate_paired(20, 10).unwrap());
    }

    #[test]
    fn toy_pair_shape() {
        let ds = generate_toy_pair(4).unwrap();
        assert_eq!(ds.len(), 2);
        assert_eq!(ds.target_count, 3);
        for img in &ds.images {
            assert!(count_rectangles(img, 8, 8).is_exactly(3));
        }
        assert_ne!(ds.images[0], ds.images[1]);
    }

    #[test]
    fn zero_base_is_rejected() {
        assert!(generate_paired(0, 1).is_err());
    }

    #[test]
    fn impossible_placement_exhausts() {
        let mut rng = rng::stream(1, 0);
        assert!(matches!(
            place_separated(&mut rng, 5, 16, 8),
            Err(Error::PlacementExhausted { .. })
        ));
    }

    #[test]
    fn nearest_neighbor_exact_member() {
        let ds = generate_paired(8, 2).unwrap();
        let (i, d) = nearest_neighbor(&ds.images[5], &ds.images).unwrap();
        assert_eq!((i, d), (5, 0.0));
    }

    #[test]
    fn nearest_neighbor_blank_sample_ties_to_first() {
        let ds = generate_paired(8, 2).unwrap();
        // exhaustive: every image has 128 foreground pixels
        for img in &ds.images {
            assert_eq!(img.pixels().iter().filter(|&&p| p == 1.0).count(), 128);
        }
        let (i, d) = nearest_neighbor(&BinaryImage::zeros(32, 32), &ds.images).unwrap();
        assert_eq!(i, 0);
        assert!((d - 128f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn nearest_neighbor_empty_dataset() {
        assert!(matches!(
            nearest_neighbor(&BinaryImage::zeros(32, 32), &[]),
            Err(Error::EmptyDataset)
        ));
    }
}
