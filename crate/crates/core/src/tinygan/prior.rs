use ndarray::Array2;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};

/// Latent distribution of the generator.
#[derive(Debug, Clone, PartialEq)]
pub enum LatentPrior {
    /// Uniform over `codes.nrows()` fixed latent vectors.
    DiscreteUniform { codes: Array2<f64> },
    Gaussian { dim: usize },
}

impl LatentPrior {
    /// `n` codes of width `dim`, drawn once from a standard Gaussian.
    pub fn discrete<R: Rng + ?Sized>(n: usize, dim: usize, rng: &mut R) -> Result<Self> {
        if n == 0 || dim == 0 {
            return Err(Error::invalid("prior", "support size and latent width must be positive"));
        }
        let codes = Array2::from_shape_simple_fn((n, dim), || StandardNormal.sample(rng));
        Ok(LatentPrior::DiscreteUniform { codes })
    }

    pub fn dim(&self) -> usize {
        match self {
            LatentPrior::DiscreteUniform { codes } => codes.ncols(),
            LatentPrior::Gaussian { dim } => *dim,
        }
    }

    /// Support size of a discrete prior.
    pub fn support(&self) -> Option<usize> {
        match self {
            LatentPrior::DiscreteUniform { codes } => Some(codes.nrows()),
            LatentPrior::Gaussian { .. } => None,
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Array2<f64> {
        match self {
            LatentPrior::DiscreteUniform { codes } => {
                let k = codes.nrows();
                let picks: Vec<usize> = (0..n).map(|_| rng.random_range(0..k)).collect();
                codes.select(ndarray::Axis(0), &picks)
            }
            LatentPrior::Gaussian { dim } => Array2::from_shape_simple_fn((n, *dim), || StandardNormal.sample(rng)),
        }
    }

    /// Every code of a discrete prior, or `n` fresh draws otherwise.
    pub fn enumerate_or_sample<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Array2<f64> {
        match self {
            LatentPrior::DiscreteUniform { codes } => codes.clone(),
            LatentPrior::Gaussian { .. } => self.sample(n, rng),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;

    #[test]
    fn discrete_samples_come_from_the_code_book() {
        let mut r = rng::stream(1, 0);
        let prior = LatentPrior::discrete(5, 3, &mut r).unwrap();
        let LatentPrior::DiscreteUniform { codes } = &prior else { unreachable!() };
        let draws = prior.sample(40, &mut r);
        for row in draws.rows() {
            assert!(codes.rows().into_iter().any(|c| c == row));
        }
        assert_eq!(prior.support(), Some(5));
        assert_eq!(prior.enumerate_or_sample(99, &mut r), *codes);
    }

    #[test]
    fn empty_support_is_rejected() {
        assert!(LatentPrior::discrete(0, 4, &mut rng::stream(0, 0)).is_err());
    }
}
