//! The linear WGAN toy model: discriminator `D(x) = wᵀx`, generator
//! `G(z) = z + θ`, trained by (stochastic) gradient flow.
//!
//! With mean real sample `x̄` and mean latent `ȳ` the value function is
//! `F(w, θ) = wᵀ(x̄ − ȳ − θ)`. The discriminator ascends and the generator
//! descends, which with batch noise in `x̄ − ȳ` gives the SDE
//!
//! ```text
//! dw = η_t (ξ − θ) dt,   dθ = μ_t w dt,   ξ dt = √(2/m) dB_t
//! ```
//!
//! The noise-free flow rotates `(w, θ)` around the origin, and the variance of
//! `θ_t` shrinks like `1/m`.

mod oracle;

use std::fmt::Write as _;
use std::path::Path;

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{ensure_dim, Error, Result};
use crate::rng;

pub use oracle::{exact_orbit, variance_oracle, variance_oracle_with, vanishing_variance_closed_form, SigmaReading};

/// Discriminator weights `w` and generator shift `θ`, both of dimension `d`.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamState {
    pub w: Vec<f64>,
    pub theta: Vec<f64>,
}

impl ParamState {
    pub fn new(w: Vec<f64>, theta: Vec<f64>) -> Result<Self> {
        if w.is_empty() {
            return Err(Error::invalid("w", "dimension must be at least 1"));
        }
        ensure_dim(w.len(), theta.len())?;
        if !w.iter().chain(&theta).all(|v| v.is_finite()) {
            return Err(Error::invalid("state", "components must be finite"));
        }
        Ok(ParamState { w, theta })
    }

    /// The equilibrium `w = θ = 0`.
    pub fn origin(d: usize) -> Self {
        ParamState { w: vec![0.0; d], theta: vec![0.0; d] }
    }

    pub fn dim(&self) -> usize {
        self.w.len()
    }

    /// `‖w‖² + ‖θ‖²`, conserved by the noise-free flow.
    pub fn energy(&self) -> f64 {
        self.w.iter().chain(&self.theta).map(|v| v * v).sum()
    }

    /// Largest absolute componentwise difference.
    pub fn max_abs_diff(&self, other: &ParamState) -> Result<f64> {
        ensure_dim(self.dim(), other.dim())?;
        Ok(self
            .w
            .iter()
            .zip(&other.w)
            .chain(self.theta.iter().zip(&other.theta))
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max))
    }

    fn is_finite(&self) -> bool {
        self.w.iter().chain(&self.theta).all(|v| v.is_finite())
    }
}

/// Step sizes `η_t` (discriminator) and `μ_t` (generator).
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StepSchedule {
    /// `η = μ = c`.
    Constant(f64),
    /// `η_t = μ_t = 1/t`, defined for `t ≥ 1`.
    Vanishing,
}

impl StepSchedule {
    pub fn validate(self) -> Result<()> {
        match self {
            StepSchedule::Constant(c) if !(c > 0.0 && c.is_finite()) => {
                Err(Error::invalid("schedule", format!("constant step {c} must be positive")))
            }
            _ => Ok(()),
        }
    }

    /// Natural start time: 0 for constant, 1 for vanishing.
    pub fn t_start(self) -> f64 {
        match self {
            StepSchedule::Constant(_) => 0.0,
            StepSchedule::Vanishing => 1.0,
        }
    }

    /// Shared rate `η_t = μ_t`.
    pub fn rate(self, t: f64) -> Result<f64> {
        match self {
            StepSchedule::Constant(c) => {
                self.validate()?;
                Ok(c)
            }
            StepSchedule::Vanishing if t >= 1.0 => Ok(1.0 / t),
            StepSchedule::Vanishing => Err(Error::invalid("t", format!("vanishing schedule needs t ≥ 1, got {t}"))),
        }
    }
}

/// Batch size of the gradient estimate; `Infinite` is the noise-free flow.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MiniBatch {
    Finite(u64),
    Infinite,
}

impl MiniBatch {
    /// Noise scale `√(2/m)`.
    pub fn noise_scale(self) -> Result<f64> {
        match self {
            MiniBatch::Finite(0) => Err(Error::invalid("m", "batchsize must be positive")),
            MiniBatch::Finite(m) => Ok((2.0 / m as f64).sqrt()),
            MiniBatch::Infinite => Ok(0.0),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub d: usize,
    pub m: MiniBatch,
    pub dt: f64,
    pub t_start: f64,
    pub t_end: f64,
    pub schedule: StepSchedule,
    pub seed: u64,
    pub record_stride: usize,
    /// Starting state; the origin when absent.
    pub initial: Option<ParamState>,
}

impl SimConfig {
    /// Defaults: `d = 1`, start at the schedule's natural time and at the
    /// origin, record every step.
    pub fn new(schedule: StepSchedule, m: MiniBatch, dt: f64, t_end: f64, seed: u64) -> Self {
        SimConfig {
            d: 1,
            m,
            dt,
            t_start: schedule.t_start(),
            t_end,
            schedule,
            seed,
            record_stride: 1,
            initial: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.schedule.validate()?;
        self.m.noise_scale()?;
        if self.d == 0 {
            return Err(Error::invalid("d", "dimension must be at least 1"));
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::invalid("dt", format!("{} must be positive", self.dt)));
        }
        if !(self.t_end > self.t_start) || !self.t_end.is_finite() {
            return Err(Error::invalid("t_end", format!("{} must exceed t_start {}", self.t_end, self.t_start)));
        }
        if self.dt > self.t_end - self.t_start {
            return Err(Error::invalid("dt", "larger than the simulated interval"));
        }
        if self.schedule == StepSchedule::Vanishing && self.t_start != 1.0 {
            return Err(Error::invalid("t_start", "vanishing schedule starts at t = 1"));
        }
        if self.record_stride == 0 {
            return Err(Error::invalid("record_stride", "must be positive"));
        }
        if let Some(s) = &self.initial {
            ensure_dim(self.d, s.dim())?;
        }
        Ok(())
    }

    /// Number of Euler–Maruyama steps; the last one may be shorter than `dt`.
    pub fn step_count(&self) -> usize {
        let span = (self.t_end - self.t_start) / self.dt;
        // tolerate rounding in span so that e.g. π / 1e-3 does not add a sliver step
        let n = span.round();
        if (span - n).abs() < 1e-9 * span.max(1.0) {
            n as usize
        } else {
            span.ceil() as usize
        }
    }

    fn initial_state(&self) -> ParamState {
        self.initial.clone().unwrap_or_else(|| ParamState::origin(self.d))
    }
}

/// Recorded states of one path.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<ParamState>,
}

impl Trajectory {
    pub fn last(&self) -> Option<(f64, &ParamState)> {
        self.times.last().copied().zip(self.states.last())
    }

    /// CSV with header `t,w_1..w_d,theta_1..theta_d`, 17 significant digits.
    pub fn to_csv(&self) -> String {
        let d = self.states.first().map_or(0, ParamState::dim);
        let mut out = String::from("t");
        for i in 1..=d {
            let _ = write!(out, ",w_{i}");
        }
        for i in 1..=d {
            let _ = write!(out, ",theta_{i}");
        }
        out.push('\n');
        for (t, s) in self.times.iter().zip(&self.states) {
            let _ = write!(out, "{t:.16e}");
            for v in s.w.iter().chain(&s.theta) {
                let _ = write!(out, ",{v:.16e}");
            }
            out.push('\n');
        }
        out
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_csv()).map_err(|e| Error::io(path, e))
    }
}

/// `F(w, θ) = wᵀ(x̄ − ȳ − θ)`.
pub fn value_function(state: &ParamState, x_mean: &[f64], y_mean: &[f64]) -> Result<f64> {
    let d = state.dim();
    ensure_dim(d, x_mean.len())?;
    ensure_dim(d, y_mean.len())?;
    Ok((0..d).map(|i| state.w[i] * (x_mean[i] - y_mean[i] - state.theta[i])).sum())
}

/// `(∂F/∂w, ∂F/∂θ) = (x̄ − ȳ − θ, −w)`.
pub fn gradients(state: &ParamState, x_mean: &[f64], y_mean: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
    let d = state.dim();
    ensure_dim(d, x_mean.len())?;
    ensure_dim(d, y_mean.len())?;
    let grad_w = (0..d).map(|i| x_mean[i] - y_mean[i] - state.theta[i]).collect();
    let grad_theta = state.w.iter().map(|w| -w).collect();
    Ok((grad_w, grad_theta))
}

/// One Euler–Maruyama step from time `t`. Rates are taken at the left end.
pub fn em_step<R: Rng + ?Sized>(
    state: &ParamState,
    t: f64,
    dt: f64,
    m: MiniBatch,
    schedule: StepSchedule,
    noise: &mut R,
) -> Result<ParamState> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::invalid("dt", format!("{dt} must be positive")));
    }
    let rate = schedule.rate(t)?;
    let scale = m.noise_scale()? * dt.sqrt();
    let mut next = state.clone();
    for i in 0..state.dim() {
        let xi_dt = if scale > 0.0 {
            let g: f64 = noise.sample(StandardNormal);
            scale * g
        } else {
            0.0
        };
        next.w[i] = state.w[i] + rate * (xi_dt - state.theta[i] * dt);
        next.theta[i] = state.theta[i] + rate * state.w[i] * dt;
    }
    Ok(next)
}

/// Integrate one path on stream `path` of `config.seed`.
pub fn simulate_stream(config: &SimConfig, path: u64) -> Result<Trajectory> {
    config.validate()?;
    let mut noise = rng::stream(config.seed, path);
    let n = config.step_count();
    let mut state = config.initial_state();
    let mut t = config.t_start;
    let mut times = vec![t];
    let mut states = vec![state.clone()];
    for k in 1..=n {
        let h = if k == n { config.t_end - t } else { config.dt };
        state = em_step(&state, t, h, config.m, config.schedule, &mut noise)?;
        t = if k == n { config.t_end } else { config.t_start + k as f64 * config.dt };
        if k % config.record_stride == 0 || k == n {
            if !state.is_finite() {
                return Err(Error::invalid("state", format!("non-finite value at t = {t}")));
            }
            times.push(t);
            states.push(state.clone());
        }
    }
    Ok(Trajectory { times, states })
}

/// Integrate the path on stream 0 of `config.seed`.
pub fn simulate_path(config: &SimConfig) -> Result<Trajectory> {
    simulate_stream(config, 0)
}

/// Final state of stream `path`, without recording intermediate states.
pub fn final_state(config: &SimConfig, path: u64) -> Result<ParamState> {
    let mut cfg = config.clone();
    cfg.record_stride = usize::MAX;
    let traj = simulate_stream(&cfg, path)?;
    Ok(traj.states.into_iter().next_back().expect("at least the initial state"))
}
