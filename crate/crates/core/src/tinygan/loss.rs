//! Cross-entropy GAN objectives on logits.
//!
//! Discriminator: `−[mean log σ(s_real) + mean log(1 − σ(s_fake))]`. With
//! pixel-wise combination regularization the negative term becomes the average
//! of the fake and combination terms. Generator: non-saturating
//! `−mean log σ(s_fake)`.

use super::net::{log_sigmoid, sigmoid};
use super::Regime;
use crate::error::{Error, Result};

/// Discriminator loss with its gradient for every score.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscLoss {
    pub loss: f64,
    pub grad_real: Vec<f64>,
    pub grad_fake: Vec<f64>,
    pub grad_dcom: Vec<f64>,
}

fn nonempty(name: &'static str, s: &[f64]) -> Result<()> {
    if s.is_empty() {
        Err(Error::invalid(name, "empty batch"))
    } else {
        Ok(())
    }
}

pub fn discriminator_loss(real: &[f64], fake: &[f64], dcom: Option<&[f64]>) -> Result<DiscLoss> {
    nonempty("scores_real", real)?;
    nonempty("scores_fake", fake)?;
    let nr = real.len() as f64;
    let mut loss = -real.iter().map(|&s| log_sigmoid(s)).sum::<f64>() / nr;
    let grad_real = real.iter().map(|&s| -(1.0 - sigmoid(s)) / nr).collect();

    // weight of each negative term: 1 alone, ½ when shared with D_com
    let neg_weight = if dcom.is_some() { 0.5 } else { 1.0 };
    let nf = fake.len() as f64;
    loss -= neg_weight * fake.iter().map(|&s| log_sigmoid(-s)).sum::<f64>() / nf;
    let grad_fake = fake.iter().map(|&s| neg_weight * sigmoid(s) / nf).collect();

    let grad_dcom = match dcom {
        Some(c) => {
            nonempty("scores_dcom", c)?;
            let nc = c.len() as f64;
            loss -= 0.5 * c.iter().map(|&s| log_sigmoid(-s)).sum::<f64>() / nc;
            c.iter().map(|&s| 0.5 * sigmoid(s) / nc).collect()
        }
        None => Vec::new(),
    };
    Ok(DiscLoss { loss, grad_real, grad_fake, grad_dcom })
}

/// Non-saturating generator loss and its gradient with respect to the fake
/// scores.
pub fn generator_loss(fake: &[f64]) -> Result<(f64, Vec<f64>)> {
    nonempty("scores_fake", fake)?;
    let n = fake.len() as f64;
    let loss = -fake.iter().map(|&s| log_sigmoid(s)).sum::<f64>() / n;
    let grad = fake.iter().map(|&s| -(1.0 - sigmoid(s)) / n).collect();
    Ok((loss, grad))
}

/// `(d_loss, g_loss)` for a regime. Combination scores must be given exactly
/// when the regime regularizes with them.
pub fn gan_losses(
    real: &[f64],
    fake: &[f64],
    dcom: Option<&[f64]>,
    regime: Regime,
) -> Result<(f64, f64)> {
    if regime.uses_pcr() != dcom.is_some() {
        return Err(Error::invalid(
            "scores_dcom",
            format!("regime {regime} {} combination scores", if regime.uses_pcr() { "needs" } else { "takes no" }),
        ));
    }
    let d = discriminator_loss(real, fake, dcom)?;
    let (g, _) = generator_loss(fake)?;
    Ok((d.loss, g))
}
