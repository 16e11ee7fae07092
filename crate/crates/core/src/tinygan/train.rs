//! The training loop: alternating discriminator and generator updates under
//! one of the regimes, with periodic metric logging.

use ndarray::{concatenate, s, Array2, ArrayView2, Axis};
use rand::seq::index;
use rand::Rng;

use super::loss::{discriminator_loss, generator_loss};
use super::metrics::{count_flips, images_to_rows, probe_latents, rows_to_images, fraction_correct, DistanceIndex, ProbeLabel};
use super::net::{Activation, DenseNet, Gradients};
use super::optim::{Optimizer, OptimizerKind};
use super::prior::LatentPrior;
use super::sc::{sc_filter, Realism, ScMode};
use super::Regime;
use crate::combination::{build_dcom, pair_count, sibling_dcom, CombOp};
use crate::error::{Error, Result};
use crate::geometry::{BinaryImage, GeometryDataset};
use crate::rng::{self, StreamRng};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BatchSize {
    Fixed(usize),
    /// Whole dataset as positives; one sample per latent code (or per
    /// training image for a continuous prior) as negatives.
    Full,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PriorSpec {
    DiscreteUniform(usize),
    Gaussian,
}

/// Which pairs feed the combination set.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DcomSource {
    AllPairs,
    /// Only sibling pairs recorded by the dataset builder.
    Siblings,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PcrSpec {
    pub ops: Vec<CombOp>,
    pub source: DcomSource,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Architecture {
    pub latent_dim: usize,
    pub gen_hidden: Vec<usize>,
    pub disc_hidden: Vec<usize>,
    /// Negative slope of the leaky ReLU hidden activation.
    pub leak: f64,
    /// Factor applied to the generator's initial output weights. Small values
    /// keep the output sigmoid out of saturation early on.
    pub gen_output_scale: f64,
    /// Initial generator output bias, a logit; negative favours background.
    pub gen_output_bias: f64,
}

impl Default for Architecture {
    fn default() -> Self {
        Architecture {
            latent_dim: 32,
            gen_hidden: vec![256, 256],
            disc_hidden: vec![256, 256],
            leak: 0.2,
            gen_output_scale: 0.1,
            gen_output_bias: -2.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalSpec {
    /// Generated samples per log point for `prop_correct` and the fake score.
    pub samples: usize,
    /// Of those, how many also get a DIF reading.
    pub dif_samples: usize,
    /// Fixed latent codes whose rectangle class is tracked.
    pub probes: usize,
    /// Size of the fixed real and combination sets used for mean scores.
    pub score_set: usize,
}

impl Default for EvalSpec {
    fn default() -> Self {
        EvalSpec { samples: 256, dif_samples: 64, probes: 16, score_set: 128 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GanConfig {
    pub regime: Regime,
    pub batch: BatchSize,
    /// Generator updates.
    pub steps: usize,
    pub d_steps_per_g: usize,
    pub optimizer: OptimizerKind,
    /// Generator learning rate relative to the discriminator's.
    pub gen_lr_factor: f64,
    pub sc_mode: Option<ScMode>,
    pub pcr: Option<PcrSpec>,
    pub prior: PriorSpec,
    pub arch: Architecture,
    pub eval: EvalSpec,
    pub seed: u64,
    pub log_stride: usize,
}

impl GanConfig {
    /// A configuration with defaults for everything but the regime knobs.
    pub fn new(regime: Regime, seed: u64) -> Self {
        GanConfig {
            regime,
            batch: BatchSize::Fixed(64),
            steps: 1000,
            d_steps_per_g: 1,
            optimizer: OptimizerKind::adam_default(),
            gen_lr_factor: 1.0,
            sc_mode: regime.uses_sc().then_some(ScMode::CountFilter { target: 2 }),
            pcr: regime.uses_pcr().then(|| PcrSpec { ops: vec![CombOp::And, CombOp::Or], source: DcomSource::Siblings }),
            prior: PriorSpec::Gaussian,
            arch: Architecture::default(),
            eval: EvalSpec::default(),
            seed,
            log_stride: 10,
        }
    }

    /// Every violated constraint, or `Ok`.
    pub fn validate(&self) -> Result<()> {
        let mut problems = Vec::new();
        if self.regime.uses_sc() != self.sc_mode.is_some() {
            problems.push(format!("sc_mode must be set iff regime uses sample correction ({})", self.regime));
        }
        if self.regime.uses_pcr() != self.pcr.is_some() {
            problems.push(format!("pcr must be set iff regime uses combination regularization ({})", self.regime));
        }
        if let Some(p) = &self.pcr {
            if p.ops.is_empty() {
                problems.push("pcr.ops is empty".into());
            }
        }
        if self.regime == Regime::Fgd && self.batch != BatchSize::Full {
            problems.push("the FGD regime needs batch = full".into());
        }
        if self.batch == BatchSize::Fixed(0) {
            problems.push("batchsize must be positive".into());
        }
        if self.d_steps_per_g == 0 {
            problems.push("d_steps_per_g must be positive".into());
        }
        if self.log_stride == 0 {
            problems.push("log_stride must be positive".into());
        }
        if self.prior == PriorSpec::DiscreteUniform(0) {
            problems.push("discrete prior needs a positive support".into());
        }
        if self.arch.latent_dim == 0 {
            problems.push("latent_dim must be positive".into());
        }
        if !(self.arch.gen_output_scale > 0.0) || !self.arch.gen_output_bias.is_finite() {
            problems.push("generator output init must be a positive scale and a finite bias".into());
        }
        if !(0.0..=1.0).contains(&self.arch.leak) {
            problems.push("leak must lie in [0, 1]".into());
        }
        if self.eval.samples == 0 || self.eval.score_set == 0 {
            problems.push("eval sizes must be positive".into());
        }
        if !(self.gen_lr_factor > 0.0 && self.gen_lr_factor.is_finite()) {
            problems.push("gen_lr_factor must be positive".into());
        }
        match self.optimizer {
            OptimizerKind::Sgd { lr } if !(lr > 0.0) => problems.push("learning rate must be positive".into()),
            OptimizerKind::Adam { alpha, beta1, beta2 }
                if !(alpha > 0.0) || !(0.0..1.0).contains(&beta1) || !(0.0..1.0).contains(&beta2) =>
            {
                problems.push("adam parameters out of range".into())
            }
            _ => {}
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(Error::invalid("config", problems.join("; ")))
        }
    }
}

/// One logged step.
#[derive(Debug, Clone, PartialEq)]
pub struct LogRow {
    pub step: usize,
    pub d_loss: f64,
    pub g_loss: f64,
    pub grad_d: f64,
    pub grad_g: f64,
    pub score_real: f64,
    pub score_fake: f64,
    pub score_dcom: f64,
    pub prop_correct: f64,
    pub mean_dif: f64,
    /// Probe codes whose class changed since the previous log point.
    pub probe_flips: usize,
}

pub const LOG_HEADER: &str =
    "step,d_loss,g_loss,grad_d,grad_g,score_real,score_fake,score_dcom,prop_correct,mean_dif,probe_flips";

impl LogRow {
    pub fn csv(&self) -> String {
        format!(
            "{},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{}",
            self.step,
            self.d_loss,
            self.g_loss,
            self.grad_d,
            self.grad_g,
            self.score_real,
            self.score_fake,
            self.score_dcom,
            self.prop_correct,
            self.mean_dif,
            self.probe_flips
        )
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct TrainLog {
    pub rows: Vec<LogRow>,
    /// Probe classes at every log point, aligned with `rows`.
    pub probe_labels: Vec<Vec<ProbeLabel>>,
    /// Discriminator steps skipped because sample correction emptied the batch.
    pub skipped_d_steps: Vec<usize>,
    /// Realistic fakes removed by sample correction, summed over the run.
    pub sc_removed: usize,
}

impl TrainLog {
    pub fn to_csv(&self) -> String {
        let mut out = String::from(LOG_HEADER);
        out.push('\n');
        for r in &self.rows {
            out.push_str(&r.csv());
            out.push('\n');
        }
        out
    }

    pub fn last(&self) -> Option<&LogRow> {
        self.rows.last()
    }

    /// Probe class flips summed over log points with `step > from_step`.
    pub fn flips_after(&self, from_step: usize) -> usize {
        self.rows.iter().filter(|r| r.step > from_step).map(|r| r.probe_flips).sum()
    }
}

/// Networks and optimizer state at the end of a run.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainedGan {
    pub generator: DenseNet,
    pub discriminator: DenseNet,
    pub gen_opt: Optimizer,
    pub disc_opt: Optimizer,
    pub prior: LatentPrior,
    pub steps_done: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainOutcome {
    pub log: TrainLog,
    pub gan: TrainedGan,
}

/// Combination images used as extra negatives.
enum DcomPool {
    Fixed(Array2<f64>),
    /// Resampled from all pairs once per epoch.
    Rolling { current: Array2<f64>, epoch: usize, per_epoch: usize, ops: Vec<CombOp>, seed: u64 },
}

/// Pool sizes above this are subsampled per epoch instead of enumerated.
const MAX_FIXED_POOL: usize = 8192;

impl DcomPool {
    fn build(ds: &GeometryDataset, spec: &PcrSpec, batch: usize, seed: u64) -> Result<Self> {
        match spec.source {
            DcomSource::Siblings => {
                let mut imgs = Vec::new();
                for &op in &spec.ops {
                    imgs.extend(sibling_dcom(ds, op)?.images);
                }
                Ok(DcomPool::Fixed(images_to_rows(&imgs)))
            }
            DcomSource::AllPairs => {
                let total = pair_count(ds.len()) * spec.ops.len();
                if total <= MAX_FIXED_POOL {
                    let mut imgs = Vec::new();
                    for &op in &spec.ops {
                        imgs.extend(build_dcom(&ds.images, op, usize::MAX, seed)?.images);
                    }
                    Ok(DcomPool::Fixed(images_to_rows(&imgs)))
                } else {
                    let per_epoch = 8 * batch;
                    let current = Self::epoch_pool(ds, &spec.ops, per_epoch, seed, 0)?;
                    Ok(DcomPool::Rolling { current, epoch: 0, per_epoch, ops: spec.ops.clone(), seed })
                }
            }
        }
    }

    fn epoch_pool(ds: &GeometryDataset, ops: &[CombOp], per_epoch: usize, seed: u64, epoch: usize) -> Result<Array2<f64>> {
        let mut imgs = Vec::new();
        for (k, &op) in ops.iter().enumerate() {
            let s = rng::derive_seed(seed, (epoch * ops.len() + k) as u64);
            imgs.extend(build_dcom(&ds.images, op, per_epoch.div_ceil(ops.len()), s)?.images);
        }
        Ok(images_to_rows(&imgs))
    }

    fn rows(&self) -> &Array2<f64> {
        match self {
            DcomPool::Fixed(r) => r,
            DcomPool::Rolling { current, .. } => current,
        }
    }

    fn advance_to(&mut self, ds: &GeometryDataset, epoch_now: usize) -> Result<()> {
        if let DcomPool::Rolling { current, epoch, per_epoch, ops, seed } = self {
            if *epoch != epoch_now {
                *current = Self::epoch_pool(ds, ops, *per_epoch, *seed, epoch_now)?;
                *epoch = epoch_now;
            }
        }
        Ok(())
    }

    fn sample<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Array2<f64> {
        let rows = self.rows();
        let picks: Vec<usize> = (0..n).map(|_| rng.random_range(0..rows.nrows())).collect();
        rows.select(Axis(0), &picks)
    }
}

/// Fixed evaluation inputs chosen once at the start of a run.
struct EvalSet {
    latents: Array2<f64>,
    dif_rows: usize,
    probes: Array2<f64>,
    real: Array2<f64>,
    dcom: Option<Array2<f64>>,
    index: DistanceIndex,
}

/// Stream indices under the run seed.
const STREAM_INIT: u64 = 0;
const STREAM_BATCH: u64 = 1;
const STREAM_EVAL: u64 = 2;
const STREAM_DCOM: u64 = 3;

pub struct Trainer<'a> {
    config: GanConfig,
    dataset: &'a GeometryDataset,
    train_rows: Array2<f64>,
    gan: TrainedGan,
    rng: StreamRng,
    realism: Option<Realism>,
    pool: Option<DcomPool>,
    eval: EvalSet,
    log: TrainLog,
    last_probe: Option<Vec<ProbeLabel>>,
    d_steps_done: usize,
    last_d: (f64, f64),
    last_g: (f64, f64),
}

impl<'a> Trainer<'a> {
    pub fn new(config: GanConfig, dataset: &'a GeometryDataset) -> Result<Self> {
        config.validate()?;
        if dataset.is_empty() {
            return Err(Error::EmptyDataset);
        }
        let pixels = dataset.pixel_count();
        let arch = &config.arch;
        let hidden = Activation::LeakyRelu(arch.leak);

        let mut init = rng::stream(config.seed, STREAM_INIT);
        let prior = match config.prior {
            PriorSpec::DiscreteUniform(n) => LatentPrior::discrete(n, arch.latent_dim, &mut init)?,
            PriorSpec::Gaussian => LatentPrior::Gaussian { dim: arch.latent_dim },
        };
        let gen_sizes: Vec<usize> =
            std::iter::once(arch.latent_dim).chain(arch.gen_hidden.iter().copied()).chain([pixels]).collect();
        let disc_sizes: Vec<usize> =
            std::iter::once(pixels).chain(arch.disc_hidden.iter().copied()).chain([1]).collect();
        let mut generator = DenseNet::new(&gen_sizes, hidden, Activation::Sigmoid, &mut init);
        if let Some(last) = generator.layers.last_mut() {
            last.weight *= arch.gen_output_scale;
            last.bias.fill(arch.gen_output_bias);
        }
        let discriminator = DenseNet::new(&disc_sizes, hidden, Activation::Identity, &mut init);
        let gen_opt = Optimizer::new(config.optimizer.with_rate_factor(config.gen_lr_factor), &generator);
        let disc_opt = Optimizer::new(config.optimizer, &discriminator);

        let train_rows = images_to_rows(&dataset.images);
        let index = DistanceIndex::new(&dataset.images)?;
        let realism = config.sc_mode.map(|m| Realism::new(m, Some(&index))).transpose()?;
        let batch = match config.batch {
            BatchSize::Fixed(b) => b,
            BatchSize::Full => dataset.len(),
        };
        let dcom_seed = rng::derive_seed(config.seed, STREAM_DCOM);
        let pool = config.pcr.as_ref().map(|p| DcomPool::build(dataset, p, batch, dcom_seed)).transpose()?;

        // evaluation material
        let mut ev = rng::stream(config.seed, STREAM_EVAL);
        let latents = match prior.support() {
            Some(k) if k <= config.eval.samples => prior.enumerate_or_sample(k, &mut ev),
            _ => prior.sample(config.eval.samples, &mut ev),
        };
        let probes = latents.slice(s![..config.eval.probes.min(latents.nrows()), ..]).to_owned();
        let score_n = config.eval.score_set.min(dataset.len());
        let real = train_rows.slice(s![..score_n, ..]).to_owned();
        let diag_spec = config.pcr.clone().unwrap_or(PcrSpec {
            ops: vec![CombOp::And, CombOp::Or],
            source: if dataset.sibling_pairs.is_empty() { DcomSource::AllPairs } else { DcomSource::Siblings },
        });
        let dcom = if dataset.len() >= 2 {
            let diag = DcomPool::build(dataset, &diag_spec, batch, dcom_seed)?;
            let rows = diag.rows();
            Some(rows.slice(s![..config.eval.score_set.min(rows.nrows()), ..]).to_owned())
        } else {
            None
        };
        let eval = EvalSet {
            dif_rows: config.eval.dif_samples.min(latents.nrows()),
            latents,
            probes,
            real,
            dcom,
            index,
        };

        Ok(Trainer {
            rng: rng::stream(config.seed, STREAM_BATCH),
            config,
            dataset,
            train_rows,
            gan: TrainedGan { generator, discriminator, gen_opt, disc_opt, prior, steps_done: 0 },
            realism,
            pool,
            eval,
            log: TrainLog::default(),
            last_probe: None,
            d_steps_done: 0,
            last_d: (f64::NAN, f64::NAN),
            last_g: (f64::NAN, f64::NAN),
        })
    }

    pub fn gan(&self) -> &TrainedGan {
        &self.gan
    }

    /// Direct access to the networks, e.g. to install custom initial weights.
    pub fn gan_mut(&mut self) -> &mut TrainedGan {
        &mut self.gan
    }

    pub fn log(&self) -> &TrainLog {
        &self.log
    }

    pub fn config(&self) -> &GanConfig {
        &self.config
    }

    /// Current generator output at the fixed probe latents, unbinarized.
    pub fn probe_images(&self) -> Result<Vec<BinaryImage>> {
        let out = self.gan.generator.predict(self.eval.probes.view())?;
        Ok(rows_to_images(out.view()))
    }

    fn real_batch(&mut self) -> Array2<f64> {
        let n = self.dataset.len();
        match self.config.batch {
            BatchSize::Full => self.train_rows.clone(),
            BatchSize::Fixed(b) if b >= n => self.train_rows.clone(),
            BatchSize::Fixed(b) => {
                let mut idx = index::sample(&mut self.rng, n, b).into_vec();
                idx.sort_unstable();
                self.train_rows.select(Axis(0), &idx)
            }
        }
    }

    fn latent_batch(&mut self) -> Array2<f64> {
        match self.config.batch {
            BatchSize::Fixed(b) => self.gan.prior.sample(b, &mut self.rng),
            BatchSize::Full => {
                let n = self.dataset.len();
                self.gan.prior.enumerate_or_sample(n, &mut self.rng)
            }
        }
    }

    /// One discriminator update. Returns `None` when sample correction emptied
    /// the negative batch.
    fn d_step(&mut self, apply: bool) -> Result<Option<(f64, f64)>> {
        let reals = self.real_batch();
        let z = self.latent_batch();
        let mut fakes = self.gan.generator.predict(z.view())?;
        if let Some(realism) = &self.realism {
            let (gen, prior, rng) = (&self.gan.generator, &self.gan.prior, &mut self.rng);
            let out = sc_filter(fakes.view(), realism, |n| gen.predict(prior.sample(n, rng).view()))?;
            self.log.sc_removed += out.removed;
            if out.skipped {
                return Ok(None);
            }
            fakes = out.batch;
        }
        let dcom = match &mut self.pool {
            Some(pool) => {
                let per_epoch = match self.config.batch {
                    BatchSize::Fixed(b) => self.dataset.len().div_ceil(b).max(1),
                    BatchSize::Full => 1,
                };
                pool.advance_to(self.dataset, self.d_steps_done / per_epoch)?;
                Some(pool.sample(fakes.nrows(), &mut self.rng))
            }
            None => None,
        };
        let (loss, grads) = disc_loss_and_grads(&self.gan.discriminator, reals.view(), fakes.view(), dcom.as_ref().map(|c| c.view()))?;
        let norm = grads.norm();
        if apply {
            self.gan.disc_opt.apply(&mut self.gan.discriminator, &grads);
        }
        Ok(Some((loss, norm)))
    }

    fn g_step(&mut self, apply: bool) -> Result<(f64, f64)> {
        let z = self.latent_batch();
        let (loss, grads) = gen_loss_and_grads(&self.gan.generator, &self.gan.discriminator, z.view())?;
        let norm = grads.norm();
        if apply {
            self.gan.gen_opt.apply(&mut self.gan.generator, &grads);
        }
        Ok((loss, norm))
    }

    fn guard(&self, what: &'static str, value: f64) -> Result<()> {
        if value.is_finite() {
            Ok(())
        } else {
            Err(Error::Diverged { step: self.gan.steps_done, what, value })
        }
    }

    /// Advance by one generator update (preceded by the discriminator updates).
    pub fn step(&mut self) -> Result<()> {
        self.gan.steps_done += 1;
        for _ in 0..self.config.d_steps_per_g {
            match self.d_step(true)? {
                Some((loss, norm)) => {
                    self.guard("d_loss", loss)?;
                    self.last_d = (loss, norm);
                }
                None => self.log.skipped_d_steps.push(self.gan.steps_done),
            }
            self.d_steps_done += 1;
        }
        let (loss, norm) = self.g_step(true)?;
        self.guard("g_loss", loss)?;
        self.last_g = (loss, norm);
        if !self.gan.discriminator.is_finite() || !self.gan.generator.is_finite() {
            return Err(Error::Diverged { step: self.gan.steps_done, what: "parameters", value: f64::NAN });
        }
        Ok(())
    }

    /// Append a log row for the current state.
    pub fn record(&mut self) -> Result<()> {
        if self.gan.steps_done == 0 {
            // losses of the untouched networks, nothing applied
            if let Some(d) = self.d_step(false)? {
                self.last_d = d;
            }
            self.last_g = self.g_step(false)?;
        }
        let gen = &self.gan.generator;
        let disc = &self.gan.discriminator;
        let out = gen.predict(self.eval.latents.view())?;
        let images = rows_to_images(out.view());
        let target = self.dataset.target_count;
        let prop = fraction_correct(&images, target);
        let difs = self.eval.index.dif(out.slice(s![..self.eval.dif_rows, ..]))?;
        let mean_dif = if difs.is_empty() { 0.0 } else { difs.iter().sum::<f64>() / difs.len() as f64 };
        let mean_logit = |rows: ArrayView2<f64>| -> Result<f64> {
            Ok(disc.predict_pre_output(rows)?.mean().unwrap_or(f64::NAN))
        };
        let score_fake = mean_logit(out.view())?;
        let score_real = mean_logit(self.eval.real.view())?;
        let score_dcom = match &self.eval.dcom {
            Some(c) => mean_logit(c.view())?,
            None => f64::NAN,
        };
        let labels = probe_latents(gen, self.eval.probes.view())?;
        let flips = self.last_probe.as_ref().map_or(0, |prev| count_flips(prev, &labels));
        self.log.rows.push(LogRow {
            step: self.gan.steps_done,
            d_loss: self.last_d.0,
            g_loss: self.last_g.0,
            grad_d: self.last_d.1,
            grad_g: self.last_g.1,
            score_real,
            score_fake,
            score_dcom,
            prop_correct: prop,
            mean_dif: mean_dif.clamp(0.0, 1.0),
            probe_flips: flips,
        });
        self.log.probe_labels.push(labels.clone());
        self.last_probe = Some(labels);
        Ok(())
    }

    /// Run the configured number of steps, logging at step 0, every
    /// `log_stride` steps and at the end.
    pub fn run(&mut self) -> Result<()> {
        self.run_with(|_| Ok(()))
    }

    /// Like [`Trainer::run`], calling `on_record` after every new log row.
    pub fn run_with(&mut self, mut on_record: impl FnMut(&Self) -> Result<()>) -> Result<()> {
        if self.log.rows.is_empty() {
            self.record()?;
            on_record(self)?;
        }
        while self.gan.steps_done < self.config.steps {
            self.step()?;
            let s = self.gan.steps_done;
            if s.is_multiple_of(self.config.log_stride) || s == self.config.steps {
                self.record()?;
                on_record(self)?;
            }
        }
        Ok(())
    }

    pub fn finish(self) -> TrainOutcome {
        TrainOutcome { log: self.log, gan: self.gan }
    }
}

/// Discriminator loss on real, fake and optional combination rows, with its
/// parameter gradient.
pub fn disc_loss_and_grads(
    disc: &DenseNet,
    reals: ArrayView2<f64>,
    fakes: ArrayView2<f64>,
    dcom: Option<ArrayView2<f64>>,
) -> Result<(f64, Gradients)> {
    let (nr, nf) = (reals.nrows(), fakes.nrows());
    let mut parts = vec![reals, fakes];
    parts.extend(dcom);
    let input = concatenate(Axis(0), &parts).map_err(|e| Error::invalid("batch", e.to_string()))?;
    let acts = disc.forward(input.view())?;
    let scores = acts.output.column(0).to_vec();
    let dl = discriminator_loss(&scores[..nr], &scores[nr..nr + nf], dcom.map(|_| &scores[nr + nf..]))?;
    let grad_col: Vec<f64> = dl.grad_real.iter().chain(&dl.grad_fake).chain(&dl.grad_dcom).copied().collect();
    let grad_out = Array2::from_shape_vec((grad_col.len(), 1), grad_col).expect("column");
    let (grads, _) = disc.backward(&acts, &grad_out, true);
    Ok((dl.loss, grads.expect("requested")))
}

/// Non-saturating generator loss on latent rows `z`, with the gradient for
/// the generator's parameters (backpropagated through the discriminator).
pub fn gen_loss_and_grads(gen: &DenseNet, disc: &DenseNet, z: ArrayView2<f64>) -> Result<(f64, Gradients)> {
    let g_acts = gen.forward(z)?;
    let d_acts = disc.forward(g_acts.output.view())?;
    let scores = d_acts.output.column(0).to_vec();
    let (loss, grad) = generator_loss(&scores)?;
    let grad_out = Array2::from_shape_vec((grad.len(), 1), grad).expect("column");
    let (_, grad_images) = disc.backward(&d_acts, &grad_out, false);
    let (grads, _) = gen.backward(&g_acts, &grad_images, true);
    Ok((loss, grads.expect("requested")))
}

/// Train a GAN on `dataset` under `config`.
pub fn train(config: &GanConfig, dataset: &GeometryDataset) -> Result<TrainOutcome> {
    let mut t = Trainer::new(config.clone(), dataset)?;
    t.run()?;
    Ok(t.finish())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{generate_paired, generate_toy_pair};
    use rand_distr::{Distribution, Uniform};

    fn tiny_arch() -> Architecture {
        Architecture { latent_dim: 4, gen_hidden: vec![8], disc_hidden: vec![8], ..Architecture::default() }
    }

    /// Central differences over every parameter of `net`.
    fn fd_check(net: &DenseNet, analytic: &Gradients, loss: impl Fn(&DenseNet) -> f64) {
        assert!(net.parameter_count() <= 500);
        let h = 1e-5;
        let mut probe = net.clone();
        for (k, layer) in net.layers.iter().enumerate() {
            for (idx, &v) in layer.weight.indexed_iter() {
                probe.layers[k].weight[idx] = v + h;
                let up = loss(&probe);
                probe.layers[k].weight[idx] = v - h;
                let down = loss(&probe);
                probe.layers[k].weight[idx] = v;
                let fd = (up - down) / (2.0 * h);
                let an = analytic.layers[k].weight[idx];
                assert!((fd - an).abs() <= 1e-4 * fd.abs().max(an.abs()).max(1e-3), "weight {k}{idx:?}: {fd} vs {an}");
            }
            for (j, &v) in layer.bias.iter().enumerate() {
                probe.layers[k].bias[j] = v + h;
                let up = loss(&probe);
                probe.layers[k].bias[j] = v - h;
                let down = loss(&probe);
                probe.layers[k].bias[j] = v;
                let fd = (up - down) / (2.0 * h);
                let an = analytic.layers[k].bias[j];
                assert!((fd - an).abs() <= 1e-4 * fd.abs().max(an.abs()).max(1e-3), "bias {k}[{j}]: {fd} vs {an}");
            }
        }
    }

    #[test]
    fn training_gradients_match_finite_differences() {
        let mut r = rng::stream(11, 0);
        let u = Uniform::new(0.0, 1.0).unwrap();
        let mut rows = |n: usize, w: usize| Array2::from_shape_simple_fn((n, w), || u.sample(&mut r));
        let (reals, fakes, dcom, z) = (rows(5, 6), rows(4, 6), rows(4, 6), rows(3, 3));
        let mut init = rng::stream(11, 1);
        for hidden in [Activation::LeakyRelu(0.2), Activation::Tanh, Activation::Sigmoid] {
            let disc = DenseNet::new(&[6, 10, 7, 1], hidden, Activation::Identity, &mut init);
            let gen = DenseNet::new(&[3, 9, 6], hidden, Activation::Sigmoid, &mut init);
            // non-PCR and PCR discriminator objectives
            for dc in [None, Some(dcom.view())] {
                let (_, g) = disc_loss_and_grads(&disc, reals.view(), fakes.view(), dc).unwrap();
                fd_check(&disc, &g, |d| disc_loss_and_grads(d, reals.view(), fakes.view(), dc).unwrap().0);
            }
            let (_, g) = gen_loss_and_grads(&gen, &disc, z.view()).unwrap();
            fd_check(&gen, &g, |gn| gen_loss_and_grads(gn, &disc, z.view()).unwrap().0);
        }
    }

    #[test]
    fn runs_are_deterministic_per_seed() {
        let ds = generate_paired(8, 2).unwrap();
        for regime in Regime::ALL {
            let mut cfg = GanConfig::new(regime, 5);
            cfg.arch = tiny_arch();
            cfg.steps = 12;
            cfg.log_stride = 4;
            cfg.prior = PriorSpec::DiscreteUniform(16);
            if regime == Regime::Fgd {
                cfg.batch = BatchSize::Full;
            } else {
                cfg.batch = BatchSize::Fixed(4);
            }
            let a = train(&cfg, &ds).unwrap();
            let b = train(&cfg, &ds).unwrap();
            assert_eq!(a, b, "{regime}");
            assert_eq!(a.log.to_csv(), b.log.to_csv());
            let steps: Vec<usize> = a.log.rows.iter().map(|r| r.step).collect();
            assert_eq!(steps, vec![0, 4, 8, 12]);
            cfg.seed = 6;
            assert_ne!(train(&cfg, &ds).unwrap().log, a.log);
        }
    }

    #[test]
    fn incremental_runs_match_one_shot() {
        let ds = generate_paired(8, 2).unwrap();
        let mut cfg = GanConfig::new(Regime::ScPcr, 1);
        cfg.arch = tiny_arch();
        cfg.steps = 10;
        cfg.log_stride = 5;
        let whole = train(&cfg, &ds).unwrap();
        let mut t = Trainer::new(cfg.clone(), &ds).unwrap();
        t.record().unwrap();
        for _ in 0..10 {
            t.step().unwrap();
        }
        assert_eq!(t.gan(), &whole.gan);
    }

    #[test]
    fn config_validation_lists_every_problem() {
        let mut cfg = GanConfig::new(Regime::Fgd, 1);
        cfg.sc_mode = Some(ScMode::CountFilter { target: 2 });
        cfg.log_stride = 0;
        let Err(Error::InvalidArgument { reason, .. }) = cfg.validate() else { panic!("expected invalid") };
        assert!(reason.contains("sc_mode"));
        assert!(reason.contains("batch = full"));
        assert!(reason.contains("log_stride"));
        assert!(GanConfig::new(Regime::Pcr, 1).validate().is_ok());
    }

    #[test]
    fn toy_pair_uses_all_pairs_for_combinations() {
        let ds = generate_toy_pair(3).unwrap();
        let mut cfg = GanConfig::new(Regime::Pcr, 2);
        cfg.arch = tiny_arch();
        cfg.steps = 3;
        cfg.pcr = Some(PcrSpec { ops: vec![CombOp::And, CombOp::Or], source: DcomSource::AllPairs });
        let out = train(&cfg, &ds).unwrap();
        assert!(out.log.rows.iter().all(|r| r.score_dcom.is_finite()));
        cfg.pcr = Some(PcrSpec { ops: vec![CombOp::And], source: DcomSource::Siblings });
        assert!(train(&cfg, &ds).is_err());
    }

    #[test]
    fn divergence_is_reported() {
        let ds = generate_paired(4, 2).unwrap();
        let mut cfg = GanConfig::new(Regime::Vanilla, 1);
        cfg.arch = tiny_arch();
        cfg.steps = 5;
        cfg.optimizer = OptimizerKind::Sgd { lr: 1e300 };
        assert!(matches!(train(&cfg, &ds), Err(Error::Diverged { .. })));
    }

    #[test]
    fn discriminator_loss_drops_against_a_frozen_generator() {
        let ds = generate_paired(8, 4).unwrap();
        let mut cfg = GanConfig::new(Regime::Vanilla, 3);
        cfg.arch = tiny_arch();
        cfg.batch = BatchSize::Full;
        cfg.prior = PriorSpec::DiscreteUniform(16);
        cfg.optimizer = OptimizerKind::Sgd { lr: 1e-3 };
        cfg.d_steps_per_g = 5;
        let mut t = Trainer::new(cfg, &ds).unwrap();
        let (before, _) = t.d_step(false).unwrap().unwrap();
        for _ in 0..5 {
            t.d_step(true).unwrap();
        }
        let (after, _) = t.d_step(false).unwrap().unwrap();
        assert!(after < before, "{after} !< {before}");
    }

    #[test]
    fn zero_steps_log_initial_metrics_only() {
        let ds = generate_paired(4, 1).unwrap();
        let mut cfg = GanConfig::new(Regime::Vanilla, 3);
        cfg.arch = tiny_arch();
        cfg.steps = 0;
        let out = train(&cfg, &ds).unwrap();
        assert_eq!(out.log.rows.len(), 1);
        let r = &out.log.rows[0];
        assert_eq!(r.step, 0);
        assert!((0.0..=1.0).contains(&r.prop_correct) && (0.0..=1.0).contains(&r.mean_dif));
    }

    #[test]
    fn log_csv_header() {
        let log = TrainLog::default();
        assert_eq!(log.to_csv(), format!("{LOG_HEADER}\n"));
    }
}
