//! Fixed training recipes for the reference experiments. Each takes a seed and
//! returns the dataset and configuration so runs are reproducible from the
//! seed alone.

use super::train::{Architecture, BatchSize, DcomSource, EvalSpec, GanConfig, PcrSpec, PriorSpec};
use super::{OptimizerKind, Regime, ScMode};
use crate::combination::CombOp;
use crate::error::Result;
use crate::geometry::{generate_paired, generate_toy_pair, GeometryDataset};

fn compact_arch() -> Architecture {
    Architecture { gen_hidden: vec![128, 128], disc_hidden: vec![128, 128], ..Architecture::default() }
}

/// Regime comparison on 1024 sibling-pair images (512 bases).
///
/// Discrete prior with one code per image, batch 64, both combination ops
/// over sibling pairs, count-based sample correction.
pub fn regime_comparison(regime: Regime, seed: u64) -> Result<(GeometryDataset, GanConfig)> {
    let ds = generate_paired(512, seed)?;
    let mut cfg = GanConfig::new(regime, seed);
    cfg.batch = BatchSize::Fixed(64);
    cfg.steps = 8000;
    cfg.prior = PriorSpec::DiscreteUniform(ds.len());
    cfg.arch = compact_arch();
    cfg.optimizer = OptimizerKind::adam_default();
    cfg.sc_mode = regime.uses_sc().then_some(ScMode::CountFilter { target: ds.target_count });
    cfg.pcr = regime.uses_pcr().then(|| PcrSpec { ops: vec![CombOp::And, CombOp::Or], source: DcomSource::Siblings });
    cfg.eval = EvalSpec { samples: ds.len(), dif_samples: 64, probes: 16, score_set: 128 };
    cfg.log_stride = 100;
    Ok((ds, cfg))
}

/// Mini-batch (batch 16) versus full-batch training on 64 images with one
/// latent code per image.
pub fn batch_stability(full_batch: bool, seed: u64) -> Result<(GeometryDataset, GanConfig)> {
    let ds = generate_paired(32, seed)?;
    let regime = if full_batch { Regime::Fgd } else { Regime::Vanilla };
    let mut cfg = GanConfig::new(regime, seed);
    cfg.batch = if full_batch { BatchSize::Full } else { BatchSize::Fixed(16) };
    cfg.steps = 2000;
    cfg.prior = PriorSpec::DiscreteUniform(ds.len());
    cfg.arch = compact_arch();
    cfg.eval = EvalSpec { samples: ds.len(), dif_samples: 64, probes: ds.len(), score_set: 64 };
    cfg.log_stride = 5;
    Ok((ds, cfg))
}

/// Two three-rectangle images sharing two rectangles; combinations use the
/// single available pair.
pub fn toy_pair(regime: Regime, seed: u64) -> Result<(GeometryDataset, GanConfig)> {
    let ds = generate_toy_pair(seed)?;
    let mut cfg = GanConfig::new(regime, seed);
    cfg.batch = BatchSize::Fixed(64);
    cfg.steps = 1500;
    cfg.prior = PriorSpec::Gaussian;
    cfg.arch = compact_arch();
    cfg.sc_mode = regime.uses_sc().then_some(ScMode::CountFilter { target: ds.target_count });
    cfg.pcr = regime.uses_pcr().then(|| PcrSpec { ops: vec![CombOp::And, CombOp::Or], source: DcomSource::AllPairs });
    cfg.log_stride = 25;
    Ok((ds, cfg))
}
