use nalgebra::DMatrix;
use ndarray::{Array2, ArrayView2};

use super::convex_mix;
use crate::error::{Error, Result};
use crate::geometry::BinaryImage;
use crate::tinygan::net::DenseNet;

/// Anything that assigns a real-valued score (a logit) to an image.
pub trait Scorer {
    fn score(&self, x: &BinaryImage) -> Result<f64>;
}

impl<F: Fn(&BinaryImage) -> f64> Scorer for F {
    fn score(&self, x: &BinaryImage) -> Result<f64> {
        Ok(self(x))
    }
}

/// Scores are taken before any output squashing.
impl Scorer for DenseNet {
    fn score(&self, x: &BinaryImage) -> Result<f64> {
        let batch = ArrayView2::from_shape((1, x.len()), x.pixels()).expect("one row of pixels");
        let out = self.predict_pre_output(batch)?;
        if out.ncols() != 1 {
            return Err(Error::DimensionMismatch { expected: 1, got: out.ncols() });
        }
        Ok(out[[0, 0]])
    }
}

/// Largest singular value.
pub fn spectral_norm(w: &Array2<f64>) -> f64 {
    if w.is_empty() {
        return 0.0;
    }
    let m = DMatrix::from_row_iterator(w.nrows(), w.ncols(), w.iter().copied());
    // eigenvalues of the smaller Gram matrix
    let gram = if m.nrows() <= m.ncols() { &m * m.transpose() } else { m.transpose() * &m };
    gram.symmetric_eigenvalues().max().max(0.0).sqrt()
}

/// Product of per-layer spectral norms and hidden activation constants: a
/// global Lipschitz bound on the pre-output score.
pub fn lipschitz_upper_bound(net: &DenseNet) -> Result<f64> {
    let act = net.hidden.lipschitz();
    if act > 1.0 {
        return Err(Error::invalid(
            "activation",
            format!("{:?} is not 1-Lipschitz", net.hidden),
        ));
    }
    let hidden_layers = net.layers.len().saturating_sub(1) as i32;
    let product: f64 = net.layers.iter().map(|l| spectral_norm(&l.weight)).product();
    Ok(product * act.powi(hidden_layers))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MarginReport {
    pub f_x1: f64,
    pub f_x2: f64,
    pub lambda: f64,
    /// `‖x1 − x2‖₂`
    pub delta: f64,
    pub lipschitz: f64,
    /// `max(f(x1) − L(1−λ)δ, f(x2) − Lλδ)`
    pub bound: f64,
    pub f_mix: f64,
    pub holds: bool,
    /// `min(f(x1), f(x2))`
    pub margin: f64,
    /// `margin > Lδ·min(λ, 1−λ)`
    pub positivity_condition: bool,
    pub mix_positive: bool,
}

impl MarginReport {
    /// The positivity condition, when met, forces a positive mixture score.
    pub fn positivity_consistent(&self) -> bool {
        !self.positivity_condition || self.mix_positive
    }
}

const MARGIN_SLACK: f64 = 1e-9;

/// Score the pair and their convex mixture and compare with the Lipschitz lower
/// bound on the mixture score.
pub fn check_margin<S: Scorer + ?Sized>(
    disc: &S,
    x1: &BinaryImage,
    x2: &BinaryImage,
    lambda: f64,
    lipschitz: f64,
) -> Result<MarginReport> {
    x1.same_shape(x2)?;
    let mix = convex_mix(x1, x2, lambda)?;
    let (f_x1, f_x2, f_mix) = (disc.score(x1)?, disc.score(x2)?, disc.score(&mix)?);
    let delta = x1.distance(x2)?;
    let bound = (f_x1 - lipschitz * (1.0 - lambda) * delta).max(f_x2 - lipschitz * lambda * delta);
    let margin = f_x1.min(f_x2);
    Ok(MarginReport {
        f_x1,
        f_x2,
        lambda,
        delta,
        lipschitz,
        bound,
        f_mix,
        holds: f_mix >= bound - MARGIN_SLACK,
        margin,
        positivity_condition: margin > lipschitz * delta * lambda.min(1.0 - lambda),
        mix_positive: f_mix > 0.0,
    })
}
