//! Generation quality measures: rectangle correctness, DIF, latent probes and
//! the nearest-neighbour coverage check.

use ndarray::{Array1, Array2, ArrayView2, Axis};
use rand::Rng;

use super::net::DenseNet;
use super::prior::LatentPrior;
use crate::error::{ensure_dim, Error, Result};
use crate::geometry::{count_rectangles, BinaryImage, DEFAULT_RECT};

/// Rows of a generator output as images. Generator outputs are squashed into
/// the unit interval, so clamping only absorbs rounding.
pub fn rows_to_images(batch: ArrayView2<f64>) -> Vec<BinaryImage> {
    let side = (batch.ncols() as f64).sqrt().round() as usize;
    assert_eq!(side * side, batch.ncols(), "generator output is not a square image");
    batch
        .rows()
        .into_iter()
        .map(|r| BinaryImage::from_clamped(side, r.as_slice().expect("standard layout")))
        .collect()
}

pub fn images_to_rows(images: &[BinaryImage]) -> Array2<f64> {
    let p = images.first().map_or(0, BinaryImage::len);
    let mut out = Array2::zeros((images.len(), p));
    for (mut row, img) in out.rows_mut().into_iter().zip(images) {
        row.assign(&ndarray::ArrayView1::from(img.pixels()));
    }
    out
}

/// Nearest-neighbour distances against a fixed reference set, computed with
/// one matrix product per query batch.
#[derive(Debug, Clone)]
pub struct DistanceIndex {
    reference: Array2<f64>,
    sq_norms: Array1<f64>,
}

impl DistanceIndex {
    pub fn new(images: &[BinaryImage]) -> Result<Self> {
        if images.is_empty() {
            return Err(Error::EmptyDataset);
        }
        let p = images[0].len();
        for img in images {
            ensure_dim(p, img.len())?;
        }
        let reference = images_to_rows(images);
        let sq_norms = reference.map_axis(Axis(1), |r| r.dot(&r));
        Ok(DistanceIndex { reference, sq_norms })
    }

    pub fn len(&self) -> usize {
        self.reference.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.reference.nrows() == 0
    }

    pub fn pixel_count(&self) -> usize {
        self.reference.ncols()
    }

    /// Squared distances, `(queries, reference)`.
    pub fn squared_distances(&self, queries: ArrayView2<f64>) -> Result<Array2<f64>> {
        ensure_dim(self.pixel_count(), queries.ncols())?;
        let q_norms = queries.map_axis(Axis(1), |r| r.dot(&r));
        let mut d = queries.dot(&self.reference.t());
        d *= -2.0;
        for (mut row, qn) in d.rows_mut().into_iter().zip(&q_norms) {
            for (v, rn) in row.iter_mut().zip(&self.sq_norms) {
                *v = (*v + qn + rn).max(0.0);
            }
        }
        Ok(d)
    }

    /// For each query, the smallest distance to the reference set.
    pub fn nearest(&self, queries: ArrayView2<f64>) -> Result<Vec<f64>> {
        let d = self.squared_distances(queries)?;
        Ok(d.rows().into_iter().map(|r| r.fold(f64::INFINITY, |a, &b| a.min(b)).sqrt()).collect())
    }

    /// Normalized nearest distance (DIF) of each query.
    pub fn dif(&self, queries: ArrayView2<f64>) -> Result<Vec<f64>> {
        let scale = (self.pixel_count() as f64).sqrt();
        Ok(self.nearest(queries)?.into_iter().map(|d| (d / scale).min(1.0)).collect())
    }
}

/// Minimum L2 distance to the training images divided by `√P`, the diameter
/// of the pixel hypercube.
pub fn dif(sample: &BinaryImage, dataset: &[BinaryImage]) -> Result<f64> {
    if dataset.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let mut best = f64::INFINITY;
    for img in dataset {
        best = best.min(sample.squared_distance(img)?);
    }
    Ok((best.sqrt() / (sample.len() as f64).sqrt()).min(1.0))
}

/// Fraction of images with exactly `target_count` clean rectangles.
pub fn fraction_correct(images: &[BinaryImage], target_count: usize) -> f64 {
    if images.is_empty() {
        return 0.0;
    }
    let ok = images
        .iter()
        .filter(|img| count_rectangles(img, DEFAULT_RECT, DEFAULT_RECT).is_exactly(target_count))
        .count();
    ok as f64 / images.len() as f64
}

/// Share of generated samples that hold exactly `target_count` rectangles.
/// A discrete prior no larger than `n_samples` is enumerated once per code.
pub fn prop_correct<R: Rng + ?Sized>(
    gen: &DenseNet,
    prior: &LatentPrior,
    n_samples: usize,
    target_count: usize,
    rng: &mut R,
) -> Result<f64> {
    if n_samples == 0 {
        return Err(Error::invalid("n_samples", "must be positive"));
    }
    let latents = match prior.support() {
        Some(k) if k <= n_samples => prior.enumerate_or_sample(k, rng),
        _ => prior.sample(n_samples, rng),
    };
    let out = gen.predict(latents.view())?;
    Ok(fraction_correct(&rows_to_images(out.view()), target_count))
}

/// Rectangle class of one generated image: the count when the image is clean,
/// `None` when it holds anything other than whole rectangles.
pub type ProbeLabel = Option<usize>;

pub fn probe_latents(gen: &DenseNet, probe_codes: ArrayView2<f64>) -> Result<Vec<ProbeLabel>> {
    let out = gen.predict(probe_codes)?;
    Ok(rows_to_images(out.view())
        .iter()
        .map(|img| {
            let c = count_rectangles(img, DEFAULT_RECT, DEFAULT_RECT);
            c.clean.then_some(c.count)
        })
        .collect())
}

/// Number of probes whose class changed between two consecutive readings.
pub fn count_flips(before: &[ProbeLabel], after: &[ProbeLabel]) -> usize {
    before.iter().zip(after).filter(|(a, b)| a != b).count()
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoverageReport {
    /// Per training image, the distance to its closest generated sample.
    pub nearest: Vec<f64>,
    /// Same, divided by `√P`.
    pub normalized: Vec<f64>,
    /// Share of training images with normalized distance below the radius.
    pub coverage: f64,
    pub radius: f64,
}

pub const COVERAGE_RADIUS: f64 = 0.1;

/// For each training image, the distance to the closest of `n_gen` generated
/// samples (binarized at 0.5, as the counting metrics see them).
pub fn mode_collapse_report<R: Rng + ?Sized>(
    gen: &DenseNet,
    prior: &LatentPrior,
    dataset: &[BinaryImage],
    n_gen: usize,
    rng: &mut R,
) -> Result<CoverageReport> {
    if dataset.is_empty() {
        return Err(Error::EmptyDataset);
    }
    if n_gen < dataset.len() {
        return Err(Error::invalid("n_gen", format!("{n_gen} is smaller than the dataset ({})", dataset.len())));
    }
    const CHUNK: usize = 2048;
    let mut remaining = n_gen;
    let mut batches = Vec::new();
    while remaining > 0 {
        let n = remaining.min(CHUNK);
        let z = prior.sample(n, rng);
        let mut g = gen.predict(z.view())?;
        g.mapv_inplace(|p| if p >= crate::geometry::BINARIZE_AT { 1.0 } else { 0.0 });
        batches.push(g);
        remaining -= n;
    }
    coverage_against(dataset, batches.iter().map(|b| b.view()))
}

/// Coverage of `dataset` by generated sample batches.
pub fn coverage_against<'a>(
    dataset: &[BinaryImage],
    generated: impl IntoIterator<Item = ArrayView2<'a, f64>>,
) -> Result<CoverageReport> {
    let train = DistanceIndex::new(dataset)?;
    let mut best = vec![f64::INFINITY; dataset.len()];
    for g in generated {
        let d = train.squared_distances(g)?;
        for row in d.rows() {
            for (b, &v) in best.iter_mut().zip(row) {
                *b = b.min(v);
            }
        }
    }
    let scale = (train.pixel_count() as f64).sqrt();
    let nearest: Vec<f64> = best.into_iter().map(f64::sqrt).collect();
    let normalized: Vec<f64> = nearest.iter().map(|d| d / scale).collect();
    let covered = normalized.iter().filter(|&&d| d < COVERAGE_RADIUS).count();
    Ok(CoverageReport {
        coverage: covered as f64 / dataset.len() as f64,
        nearest,
        normalized,
        radius: COVERAGE_RADIUS,
    })
}

/// Mean discriminator logits on real images and on combination images.
pub fn score_combos(disc: &DenseNet, real: &[BinaryImage], dcom: &[BinaryImage]) -> Result<(f64, f64)> {
    if real.is_empty() || dcom.is_empty() {
        return Err(Error::invalid("batch", "score_combos needs nonempty batches"));
    }
    let mean = |imgs: &[BinaryImage]| -> Result<f64> {
        let s = disc.predict_pre_output(images_to_rows(imgs).view())?;
        Ok(s.mean().unwrap_or(0.0))
    };
    Ok((mean(real)?, mean(dcom)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::generate_paired;
    use crate::rng;
    use crate::tinygan::net::Activation;
    use rand::Rng;

    #[test]
    fn dif_bounds() {
        let ds = generate_paired(4, 1).unwrap();
        assert_eq!(dif(&ds.images[3], &ds.images).unwrap(), 0.0);
        let white = BinaryImage::filled(32, 32, 1.0);
        assert!((dif(&white, &[BinaryImage::zeros(32, 32)]).unwrap() - 1.0).abs() < 1e-15);
        assert!(matches!(dif(&white, &[]), Err(Error::EmptyDataset)));
    }

    #[test]
    fn dif_matches_brute_force_and_index() {
        let mut r = rng::stream(9, 9);
        let ds = generate_paired(1, 6).unwrap();
        let sample = BinaryImage::new(32, 32, (0..1024).map(|_| if r.random::<bool>() { 1.0 } else { 0.0 }).collect())
            .unwrap();
        let brute = ds
            .images
            .iter()
            .map(|y| sample.pixels().iter().zip(y.pixels()).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt())
            .fold(f64::INFINITY, f64::min)
            / 32.0;
        assert!((dif(&sample, &ds.images).unwrap() - brute).abs() < 1e-12);
        let index = DistanceIndex::new(&ds.images).unwrap();
        let via_index = index.dif(images_to_rows(std::slice::from_ref(&sample)).view()).unwrap();
        assert!((via_index[0] - brute).abs() < 1e-12);
    }

    /// A generator whose last layer bias alone decides the output image.
    fn constant_generator(img: &BinaryImage) -> DenseNet {
        let mut g = DenseNet::zeros(&[4, img.len()], Activation::Relu, Activation::Sigmoid);
        g.layers[0].bias = img.pixels().iter().map(|&p| if p > 0.5 { 30.0 } else { -30.0 }).collect();
        g
    }

    #[test]
    fn prop_correct_extremes() {
        let ds = generate_paired(1, 2).unwrap();
        let mut r = rng::stream(0, 0);
        let prior = LatentPrior::Gaussian { dim: 4 };
        let good = constant_generator(&ds.images[0]);
        assert_eq!(prop_correct(&good, &prior, 10, 2, &mut r).unwrap(), 1.0);
        let blank = constant_generator(&BinaryImage::zeros(32, 32));
        assert_eq!(prop_correct(&blank, &prior, 10, 2, &mut r).unwrap(), 0.0);
    }

    #[test]
    fn fraction_correct_counts_mixed_sets() {
        let two = generate_paired(3, 2).unwrap().images;
        let three = crate::geometry::generate_with_count(2, 3, 4).unwrap().images;
        let mut mixed = two.clone();
        mixed.extend(three);
        mixed.push(BinaryImage::zeros(32, 32));
        assert!((fraction_correct(&mixed, 2) - 6.0 / 9.0).abs() < 1e-15);
        assert!((fraction_correct(&mixed, 3) - 2.0 / 9.0).abs() < 1e-15);
    }

    #[test]
    fn probes_of_a_frozen_generator_never_flip() {
        let mut r = rng::stream(2, 0);
        let g = DenseNet::new(&[4, 8, 1024], Activation::LeakyRelu(0.2), Activation::Sigmoid, &mut r);
        let codes = LatentPrior::Gaussian { dim: 4 }.sample(6, &mut r);
        let a = probe_latents(&g, codes.view()).unwrap();
        let b = probe_latents(&g, codes.view()).unwrap();
        assert_eq!(count_flips(&a, &b), 0);
        assert_eq!(count_flips(&[Some(2), None, Some(1)], &[Some(2), Some(2), None]), 2);
    }

    #[test]
    fn replaying_generator_covers_everything() {
        let ds = generate_paired(3, 2).unwrap();
        let rows = images_to_rows(&ds.images);
        let rep = coverage_against(&ds.images, [rows.view()]).unwrap();
        assert_eq!(rep.coverage, 1.0);
        assert!(rep.nearest.iter().all(|&d| d == 0.0));
    }

    #[test]
    fn constant_generator_covers_one_image() {
        let ds = generate_paired(8, 2).unwrap();
        let g = constant_generator(&ds.images[4]);
        let prior = LatentPrior::Gaussian { dim: 4 };
        let rep = mode_collapse_report(&g, &prior, &ds.images, 16, &mut rng::stream(0, 0)).unwrap();
        assert!((rep.coverage - 1.0 / 16.0).abs() < 1e-15);
        assert_eq!(rep.normalized[4], 0.0);
        assert!(mode_collapse_report(&g, &prior, &ds.images, 15, &mut rng::stream(0, 0)).is_err());
    }

    #[test]
    fn untrained_zero_discriminator_scores_zero() {
        let ds = generate_paired(2, 2).unwrap();
        let d = DenseNet::zeros(&[1024, 8, 1], Activation::LeakyRelu(0.2), Activation::Identity);
        assert_eq!(score_combos(&d, &ds.images, &ds.images[..1]).unwrap(), (0.0, 0.0));
        let mut r = rng::stream(3, 3);
        let d = DenseNet::new(&[1024, 8, 1], Activation::LeakyRelu(0.2), Activation::Identity, &mut r);
        let (a, b) = score_combos(&d, &ds.images, &ds.images).unwrap();
        assert_eq!(a, b);
        assert!(score_combos(&d, &[], &ds.images).is_err());
    }
}
