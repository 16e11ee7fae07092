//! Pixel-wise combinations of training images and the Lipschitz margin check.
//!
//! The combination set `D_com` holds `x_i ⊕ x_j` for unordered pairs of
//! training images. For [`CombOp::Average`] the combination is `(x_i + x_j)/2`;
//! the logical operators are applied as-is to binary images, without halving.

mod margin;

pub use margin::{check_margin, lipschitz_upper_bound, MarginReport, Scorer};

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rand::seq::index;

use crate::error::{Error, Result};
use crate::geometry::{pgm, BinaryImage, GeometryDataset};
use crate::rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CombOp {
    Average,
    And,
    Or,
}

impl CombOp {
    pub fn name(self) -> &'static str {
        match self {
            CombOp::Average => "average",
            CombOp::And => "and",
            CombOp::Or => "or",
        }
    }
}

impl fmt::Display for CombOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for CombOp {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "average" | "avg" => Ok(CombOp::Average),
            "and" => Ok(CombOp::And),
            "or" => Ok(CombOp::Or),
            other => Err(Error::invalid("op", format!("unknown combination {other:?}"))),
        }
    }
}

fn require_binary(img: &BinaryImage, op: CombOp) -> Result<()> {
    match img.first_non_binary() {
        Some((index, value)) => Err(Error::NonBinaryPixel { op: op.name(), index, value }),
        None => Ok(()),
    }
}

/// Combine two same-sized images pixel by pixel.
pub fn combine(x1: &BinaryImage, x2: &BinaryImage, op: CombOp) -> Result<BinaryImage> {
    x1.same_shape(x2)?;
    match op {
        CombOp::Average => x1.zip_map(x2, |a, b| 0.5 * (a + b)),
        CombOp::And | CombOp::Or => {
            require_binary(x1, op)?;
            require_binary(x2, op)?;
            if op == CombOp::And {
                x1.zip_map(x2, f64::min)
            } else {
                x1.zip_map(x2, f64::max)
            }
        }
    }
}

/// Pointwise `λ·x1 + (1−λ)·x2`.
pub fn convex_mix(x1: &BinaryImage, x2: &BinaryImage, lambda: f64) -> Result<BinaryImage> {
    if !(0.0..=1.0).contains(&lambda) {
        return Err(Error::invalid("lambda", format!("{lambda} outside [0, 1]")));
    }
    // clamp guards the last ulp when λ·a + (1−λ)·b rounds above 1
    x1.zip_map(x2, |a, b| (lambda * a + (1.0 - lambda) * b).clamp(0.0, 1.0))
}

#[derive(Debug, Clone, PartialEq)]
pub struct CombDataset {
    pub images: Vec<BinaryImage>,
    pub op: CombOp,
    /// `(i, j)` with `i < j`, indices into the origin dataset.
    pub source_pairs: Vec<(usize, usize)>,
}

impl CombDataset {
    pub fn len(&self) -> usize {
        self.images.len()
    }

    pub fn is_empty(&self) -> bool {
        self.images.is_empty()
    }
}

/// Number of unordered pairs of `n` items.
pub fn pair_count(n: usize) -> usize {
    n * n.saturating_sub(1) / 2
}

/// The `k`-th unordered pair `(i, j)`, `i < j`, in row-major order.
fn unrank_pair(n: usize, mut k: usize) -> (usize, usize) {
    let mut i = 0;
    loop {
        let row = n - 1 - i;
        if k < row {
            return (i, i + 1 + k);
        }
        k -= row;
        i += 1;
    }
}

/// Build the combination set over unordered pairs of `images`.
///
/// When more than `max_size` pairs exist, `max_size` of them are drawn
/// uniformly without replacement from stream 0 of `seed`; the chosen pairs are
/// emitted in ascending pair order.
pub fn build_dcom(images: &[BinaryImage], op: CombOp, max_size: usize, seed: u64) -> Result<CombDataset> {
    let n = images.len();
    if n < 2 {
        return Err(Error::invalid("dataset", format!("need at least 2 images, got {n}")));
    }
    if max_size == 0 {
        return Err(Error::invalid("max_size", "must be positive"));
    }
    let total = pair_count(n);
    let ranks: Vec<usize> = if total <= max_size {
        (0..total).collect()
    } else {
        let mut picked = index::sample(&mut rng::stream(seed, 0), total, max_size).into_vec();
        picked.sort_unstable();
        picked
    };
    let source_pairs: Vec<(usize, usize)> = ranks.into_iter().map(|k| unrank_pair(n, k)).collect();
    let images = source_pairs
        .iter()
        .map(|&(i, j)| combine(&images[i], &images[j], op))
        .collect::<Result<Vec<_>>>()?;
    Ok(CombDataset { images, op, source_pairs })
}

/// Combinations of recorded sibling pairs only.
pub fn sibling_dcom(dataset: &GeometryDataset, op: CombOp) -> Result<CombDataset> {
    if dataset.sibling_pairs.is_empty() {
        return Err(Error::invalid("dataset", "no sibling pairs recorded"));
    }
    let source_pairs: Vec<(usize, usize)> =
        dataset.sibling_pairs.iter().map(|&(a, b)| (a.min(b), a.max(b))).collect();
    let images = source_pairs
        .iter()
        .map(|&(i, j)| combine(&dataset.images[i], &dataset.images[j], op))
        .collect::<Result<Vec<_>>>()?;
    Ok(CombDataset { images, op, source_pairs })
}

const COMB_MANIFEST_HEADER: &str = "filename,op,source_pair";

/// Persist like a geometry dataset; the manifest records `op` and the quoted
/// `source_pair` as `"i,j"`.
pub fn save_comb_dataset(dir: &Path, ds: &CombDataset) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut manifest = format!("{COMB_MANIFEST_HEADER}\n");
    let mut written = Vec::with_capacity(ds.len() + 1);
    for (k, (img, &(i, j))) in ds.images.iter().zip(&ds.source_pairs).enumerate() {
        let name = pgm::image_filename(k);
        let path = dir.join(&name);
        pgm::write(&path, img)?;
        written.push(path);
        manifest.push_str(&format!("{name},{},\"{i},{j}\"\n", ds.op));
    }
    let path = dir.join(pgm::MANIFEST);
    fs::write(&path, manifest).map_err(|e| Error::io(&path, e))?;
    written.push(path);
    Ok(written)
}
