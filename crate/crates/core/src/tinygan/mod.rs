//! A small dense GAN with hand-written backpropagation, trained on geometry
//! datasets under several regimes.

pub mod checkpoint;
pub mod loss;
pub mod metrics;
pub mod net;
pub mod optim;
pub mod prior;
pub mod recipes;
pub mod sc;
pub mod train;

use std::fmt;
use std::str::FromStr;

use crate::error::Error;

pub use loss::{discriminator_loss, gan_losses, generator_loss, DiscLoss};
pub use net::{Activation, DenseNet, Gradients};
pub use optim::{Optimizer, OptimizerKind};
pub use prior::LatentPrior;
pub use sc::{sc_filter, Realism, ScMode, ScOutcome};
pub use train::{
    train, Architecture, BatchSize, DcomSource, EvalSpec, GanConfig, LogRow, PcrSpec, PriorSpec, TrainLog,
    TrainOutcome, TrainedGan, Trainer,
};

/// Training regime. Vanilla with a small batch is the mini-batch baseline.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Regime {
    Vanilla,
    /// Full-batch: the whole dataset against one sample per latent code.
    Fgd,
    /// Sample correction of the negative batch.
    Sc,
    /// Combination images as extra negatives.
    Pcr,
    ScPcr,
}

impl Regime {
    pub const ALL: [Regime; 5] = [Regime::Vanilla, Regime::Fgd, Regime::Sc, Regime::Pcr, Regime::ScPcr];

    pub fn uses_sc(self) -> bool {
        matches!(self, Regime::Sc | Regime::ScPcr)
    }

    pub fn uses_pcr(self) -> bool {
        matches!(self, Regime::Pcr | Regime::ScPcr)
    }

    pub fn name(self) -> &'static str {
        match self {
            Regime::Vanilla => "vanilla",
            Regime::Fgd => "fgd",
            Regime::Sc => "sc",
            Regime::Pcr => "pcr",
            Regime::ScPcr => "sc_pcr",
        }
    }
}

impl fmt::Display for Regime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Regime {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        let norm = s.to_ascii_lowercase().replace(['+', '-'], "_");
        Regime::ALL
            .into_iter()
            .find(|r| r.name() == norm)
            .ok_or_else(|| Error::invalid("regime", format!("unknown regime {s:?}")))
    }
}
