use std::fmt::Write as _;

use ganlab::combination::CombOp;
use ganlab::geometry::pgm;
use ganlab::rng;
use ganlab::tinygan::checkpoint;
use ganlab::tinygan::metrics::mode_collapse_report;
use ganlab::tinygan::recipes;
use ganlab::tinygan::{
    Architecture, BatchSize, DcomSource, EvalSpec, GanConfig, OptimizerKind, PcrSpec, PriorSpec, Regime, ScMode,
    Trainer,
};

use super::{dataset_from, dataset_keys, fmt_f, Spec, DATASET_KINDS};
use crate::config::{Key, Layer, Params, Ty};
use crate::error::{CliError, Result};
use crate::run_dir::RunDir;

const RECIPES: &[&str] = &["none", "regime-comparison", "stability-mgd", "stability-fgd", "toy-pair"];
const REGIMES: &[&str] = &["vanilla", "fgd", "sc", "pcr", "sc_pcr"];
const OPS: &[&str] = &["and", "or", "average"];

/// Stream of the coverage samples under the run seed, clear of the trainer's.
const STREAM_COVERAGE: u64 = 16;

const KEYS: &[Key] = &{
    let data = dataset_keys!("512");
    [
        Key::def("recipe", Ty::Choice(RECIPES), "none", "preset supplying defaults for the keys below"),
        Key::def("regime", Ty::Choice(REGIMES), "vanilla", "training regime"),
        data[0],
        data[1],
        data[2],
        data[3],
        Key::def("batch", Ty::UintOrFull, "64", "batchsize, or full"),
        Key::def("steps", Ty::Uint, "1000", "generator updates"),
        Key::def("d_steps_per_g", Ty::Uint, "1", "discriminator updates per generator update"),
        Key::def("optimizer", Ty::Choice(&["adam", "sgd"]), "adam", "optimizer of both networks"),
        Key::def("lr", Ty::Float, "0.0002", "discriminator step size"),
        Key::def("beta1", Ty::Float, "0.5", "Adam first-moment decay"),
        Key::def("beta2", Ty::Float, "0.9", "Adam second-moment decay"),
        Key::def("gen_lr_factor", Ty::Float, "1", "generator step size relative to lr"),
        Key::def("sc_mode", Ty::Choice(&["count", "dif"]), "count", "realism test of sample correction"),
        Key::opt("sc_target", Ty::Uint, "rectangle count judged realistic (defaults to the dataset's)"),
        Key::def("sc_threshold", Ty::Float, "0.3", "DIF threshold of the dif realism test"),
        Key::def("pcr_ops", Ty::ChoiceList(OPS), "and,or", "combinations used as extra negatives"),
        Key::def("pcr_source", Ty::Choice(&["siblings", "all-pairs"]), "siblings", "pairs the combinations come from"),
        Key::def("prior", Ty::Choice(&["gaussian", "discrete"]), "gaussian", "latent prior"),
        Key::opt("prior_support", Ty::Uint, "codes of the discrete prior (defaults to the dataset size)"),
        Key::def("latent_dim", Ty::Uint, "32", "latent width"),
        Key::def("gen_hidden", Ty::UintList, "256,256", "generator hidden widths"),
        Key::def("disc_hidden", Ty::UintList, "256,256", "discriminator hidden widths"),
        Key::def("leak", Ty::Float, "0.2", "leaky ReLU slope"),
        Key::def("gen_output_scale", Ty::Float, "0.1", "scale of the generator's initial output weights"),
        Key::def("gen_output_bias", Ty::Float, "-2", "initial generator output bias"),
        Key::def("eval_samples", Ty::Uint, "256", "generated samples per log point"),
        Key::def("eval_dif_samples", Ty::Uint, "64", "of which scored by DIF"),
        Key::def("eval_probes", Ty::Uint, "16", "fixed probe latents"),
        Key::def("eval_score_set", Ty::Uint, "128", "real and combination images scored per log point"),
        Key::def("log_stride", Ty::Uint, "10", "steps between log rows"),
        Key::def("emit_probes", Ty::Bool, "false", "write probe images at every log point"),
        Key::def("coverage_factor", Ty::Uint, "0", "coverage report with this many samples per training image; 0 skips"),
    ]
};

pub const SPEC: Spec = Spec {
    name: "train-gan",
    about: "Train the dense GAN on a rectangle dataset",
    keys: KEYS,
    preset: Some(preset),
    run,
};

fn list<T: ToString>(v: &[T]) -> String {
    v.iter().map(T::to_string).collect::<Vec<_>>().join(",")
}

/// Every training key of `cfg` as a layer.
fn config_layer(origin: &str, cfg: &GanConfig) -> Layer {
    let mut l = Layer::new(origin)
        .with("regime", cfg.regime.name())
        .with("batch", match cfg.batch {
            BatchSize::Fixed(b) => b.to_string(),
            BatchSize::Full => "full".into(),
        })
        .with("steps", cfg.steps.to_string())
        .with("d_steps_per_g", cfg.d_steps_per_g.to_string())
        .with("gen_lr_factor", cfg.gen_lr_factor.to_string())
        .with("latent_dim", cfg.arch.latent_dim.to_string())
        .with("gen_hidden", list(&cfg.arch.gen_hidden))
        .with("disc_hidden", list(&cfg.arch.disc_hidden))
        .with("leak", cfg.arch.leak.to_string())
        .with("gen_output_scale", cfg.arch.gen_output_scale.to_string())
        .with("gen_output_bias", cfg.arch.gen_output_bias.to_string())
        .with("eval_samples", cfg.eval.samples.to_string())
        .with("eval_dif_samples", cfg.eval.dif_samples.to_string())
        .with("eval_probes", cfg.eval.probes.to_string())
        .with("eval_score_set", cfg.eval.score_set.to_string())
        .with("log_stride", cfg.log_stride.to_string());
    l = match cfg.optimizer {
        OptimizerKind::Sgd { lr } => l.with("optimizer", "sgd").with("lr", lr.to_string()),
        OptimizerKind::Adam { alpha, beta1, beta2 } => l
            .with("optimizer", "adam")
            .with("lr", alpha.to_string())
            .with("beta1", beta1.to_string())
            .with("beta2", beta2.to_string()),
    };
    l = match cfg.sc_mode {
        Some(ScMode::CountFilter { target }) => l.with("sc_mode", "count").with("sc_target", target.to_string()),
        Some(ScMode::DifFilter { threshold }) => l.with("sc_mode", "dif").with("sc_threshold", threshold.to_string()),
        None => l,
    };
    if let Some(pcr) = &cfg.pcr {
        l = l.with("pcr_ops", list(&pcr.ops)).with("pcr_source", match pcr.source {
            DcomSource::Siblings => "siblings",
            DcomSource::AllPairs => "all-pairs",
        });
    }
    match cfg.prior {
        PriorSpec::DiscreteUniform(n) => l.with("prior", "discrete").with("prior_support", n.to_string()),
        PriorSpec::Gaussian => l.with("prior", "gaussian"),
    }
}

fn preset(lookup: &dyn Fn(&str) -> Option<String>) -> Result<Option<Layer>> {
    let recipe = lookup("recipe").unwrap_or_else(|| "none".into());
    let regime = || -> Result<Regime> {
        let name = lookup("regime").unwrap_or_else(|| "vanilla".into());
        name.parse().map_err(|_| CliError::config(format!("key `regime`: unknown regime {name:?}")))
    };
    // the preset only supplies defaults; the dataset seed is irrelevant here
    let (cfg, dataset, n_base) = match recipe.as_str() {
        "regime-comparison" => (recipes::regime_comparison(regime()?, 0)?.1, "paired", 512),
        "stability-mgd" => (recipes::batch_stability(false, 0)?.1, "paired", 32),
        "stability-fgd" => (recipes::batch_stability(true, 0)?.1, "paired", 32),
        "toy-pair" => (recipes::toy_pair(regime()?, 0)?.1, "toy-pair", 0),
        "none" => return Ok(None),
        other => return Err(CliError::config(format!("key `recipe`: unknown recipe {other:?}"))),
    };
    let mut layer = config_layer(&format!("recipe {recipe}"), &cfg).with("dataset", dataset);
    if n_base > 0 {
        layer = layer.with("n_base", n_base.to_string());
    }
    Ok(Some(layer))
}

fn gan_config(p: &Params, target_count: usize, dataset_len: usize) -> Result<GanConfig> {
    let regime: Regime = p.text("regime")?.parse().map_err(|e: ganlab::Error| CliError::config(e.to_string()))?;
    let lr = p.float("lr")?;
    let optimizer = match p.text("optimizer")?.as_str() {
        "sgd" => OptimizerKind::Sgd { lr },
        _ => OptimizerKind::Adam { alpha: lr, beta1: p.float("beta1")?, beta2: p.float("beta2")? },
    };
    let sc_mode = match p.text("sc_mode")?.as_str() {
        "dif" => ScMode::DifFilter { threshold: p.float("sc_threshold")? },
        _ => ScMode::CountFilter { target: p.opt_usize("sc_target")?.unwrap_or(target_count) },
    };
    let ops: Vec<CombOp> = p.list("pcr_ops")?;
    let source = match p.text("pcr_source")?.as_str() {
        "all-pairs" => DcomSource::AllPairs,
        _ => DcomSource::Siblings,
    };
    let prior = match p.text("prior")?.as_str() {
        "discrete" => PriorSpec::DiscreteUniform(p.opt_usize("prior_support")?.unwrap_or(dataset_len)),
        _ => PriorSpec::Gaussian,
    };
    let batch = match p.text("batch")?.as_str() {
        "full" => BatchSize::Full,
        _ => BatchSize::Fixed(p.usize("batch")?),
    };
    Ok(GanConfig {
        regime,
        batch,
        steps: p.usize("steps")?,
        d_steps_per_g: p.usize("d_steps_per_g")?,
        optimizer,
        gen_lr_factor: p.float("gen_lr_factor")?,
        sc_mode: regime.uses_sc().then_some(sc_mode),
        pcr: regime.uses_pcr().then_some(PcrSpec { ops, source }),
        prior,
        arch: Architecture {
            latent_dim: p.usize("latent_dim")?,
            gen_hidden: p.list("gen_hidden")?,
            disc_hidden: p.list("disc_hidden")?,
            leak: p.float("leak")?,
            gen_output_scale: p.float("gen_output_scale")?,
            gen_output_bias: p.float("gen_output_bias")?,
        },
        eval: EvalSpec {
            samples: p.usize("eval_samples")?,
            dif_samples: p.usize("eval_dif_samples")?,
            probes: p.usize("eval_probes")?,
            score_set: p.usize("eval_score_set")?,
        },
        seed: p.uint("seed")?,
        log_stride: p.usize("log_stride")?,
    })
}

fn run(p: &mut Params, dir: &mut RunDir) -> Result<String> {
    let ds = dataset_from(p)?;
    let cfg = gan_config(p, ds.target_count, ds.len())?;
    // make derived values explicit in the resolved config
    if cfg.regime.uses_sc() {
        if let Some(ScMode::CountFilter { target }) = cfg.sc_mode {
            p.set_default("sc_target", target.to_string());
        }
    }
    if let PriorSpec::DiscreteUniform(n) = cfg.prior {
        p.set_default("prior_support", n.to_string());
    }
    let emit = p.flag("emit_probes")?;
    let mut trainer = Trainer::new(cfg, &ds)?;
    let mut probes = Vec::new();
    trainer.run_with(|t| {
        if emit {
            probes.push((t.gan().steps_done, t.probe_images()?));
        }
        Ok(())
    })?;
    for (step, imgs) in &probes {
        for (k, img) in imgs.iter().enumerate() {
            dir.write(&format!("probes/step_{step:06}/probe_{k:03}.pgm"), &pgm::encode(img))?;
        }
    }
    let outcome = trainer.finish();
    dir.write("train_log.csv", outcome.log.to_csv().as_bytes())?;
    dir.write("checkpoint.bin", &checkpoint::encode(&outcome.gan))?;

    let last = outcome.log.last().expect("the log holds the initial row");
    let mut summary = String::from("key,value\n");
    let _ = writeln!(summary, "steps,{}", outcome.gan.steps_done);
    let _ = writeln!(summary, "final_prop_correct,{}", fmt_f(last.prop_correct));
    let _ = writeln!(summary, "final_mean_dif,{}", fmt_f(last.mean_dif));
    let _ = writeln!(summary, "final_score_dcom,{}", fmt_f(last.score_dcom));
    let _ = writeln!(summary, "sc_removed,{}", outcome.log.sc_removed);
    let _ = writeln!(summary, "skipped_d_steps,{}", outcome.log.skipped_d_steps.len());
    let factor = p.usize("coverage_factor")?;
    let mut line = format!("steps={} prop_correct={}", outcome.gan.steps_done, last.prop_correct);
    if factor > 0 {
        let mut r = rng::stream(p.uint("seed")?, STREAM_COVERAGE);
        let report = mode_collapse_report(&outcome.gan.generator, &outcome.gan.prior, &ds.images, factor * ds.len(), &mut r)?;
        let mut csv = String::from("image,nearest,normalized,covered\n");
        for (i, (d, n)) in report.nearest.iter().zip(&report.normalized).enumerate() {
            let _ = writeln!(csv, "{i},{},{},{}", fmt_f(*d), fmt_f(*n), *n < report.radius);
        }
        dir.write("coverage.csv", csv.as_bytes())?;
        let _ = writeln!(summary, "coverage,{}", fmt_f(report.coverage));
        let _ = write!(line, " coverage={}", report.coverage);
    }
    dir.write("summary.csv", summary.as_bytes())?;
    Ok(line)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::resolve;
    use crate::config::GLOBAL_KEYS;

    fn keys() -> Vec<Key> {
        GLOBAL_KEYS.iter().chain(KEYS).copied().collect()
    }

    #[test]
    fn recipe_layer_round_trips_through_params() {
        let (ds, cfg) = recipes::regime_comparison(Regime::ScPcr, 5).unwrap();
        let layer = preset(&|k: &str| match k {
            "recipe" => Some("regime-comparison".into()),
            "regime" => Some("sc_pcr".into()),
            _ => None,
        })
        .unwrap()
        .unwrap();
        let flags = Layer::new("flags").with("out", "x").with("seed", "5");
        let p = resolve(&keys(), &[layer, flags]).unwrap();
        assert_eq!(gan_config(&p, ds.target_count, ds.len()).unwrap(), cfg);
        assert_eq!(p.usize("n_base").unwrap(), 512);
    }

    #[test]
    fn every_recipe_resolves() {
        for recipe in &RECIPES[1..] {
            let layer = preset(&|k: &str| (k == "recipe").then(|| recipe.to_string())).unwrap().unwrap();
            let flags = Layer::new("flags").with("out", "x").with("seed", "1");
            let p = resolve(&keys(), &[layer, flags]).unwrap();
            gan_config(&p, 2, 64).unwrap().validate().unwrap();
        }
    }

    #[test]
    fn flags_beat_the_recipe() {
        let layer = preset(&|k: &str| (k == "recipe").then(|| "stability-fgd".to_string())).unwrap().unwrap();
        let flags = Layer::new("flags").with("out", "x").with("seed", "1").with("steps", "7");
        let p = resolve(&keys(), &[layer, flags]).unwrap();
        assert_eq!(p.usize("steps").unwrap(), 7);
        assert_eq!(p.text("batch").unwrap(), "full");
    }
}
