//! Monte Carlo variance of the generator parameter across batchsizes, and the
//! log-log fit that checks the `1/m` law.

use std::fmt::Write as _;
use std::path::Path;

use crate::dynamics::{final_state, variance_oracle, MiniBatch, SimConfig};
use crate::error::{Error, Result};
use crate::rng;

#[derive(Debug, Clone, PartialEq)]
pub struct SweepConfig {
    /// Simulation settings; its `m` is ignored and `t_end` is replaced by `t_eval`.
    pub base: SimConfig,
    pub m_values: Vec<u64>,
    pub n_paths: usize,
    pub t_eval: f64,
    /// 1-based component of `θ`.
    pub component: usize,
}

impl SweepConfig {
    pub fn validate(&self) -> Result<()> {
        if self.m_values.is_empty() {
            return Err(Error::invalid("m_values", "empty"));
        }
        if self.m_values.contains(&0) || !self.m_values.windows(2).all(|w| w[0] < w[1]) {
            return Err(Error::invalid("m_values", "must be positive and strictly increasing"));
        }
        if self.n_paths < 2 {
            return Err(Error::invalid("n_paths", format!("{} paths cannot give a variance", self.n_paths)));
        }
        if self.component == 0 || self.component > self.base.d {
            return Err(Error::invalid("component", format!("{} outside 1..={}", self.component, self.base.d)));
        }
        self.sim_config(MiniBatch::Infinite).validate()
    }

    fn sim_config(&self, m: MiniBatch) -> SimConfig {
        SimConfig { m, t_end: self.t_eval, ..self.base.clone() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VarianceEstimate {
    pub m: MiniBatch,
    pub var_hat: f64,
    pub stderr: f64,
    pub n_paths: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScalingFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

/// Seed of the path family for batchsize `m`, so every cell is reproducible on
/// its own.
fn family_seed(master: u64, m: MiniBatch) -> u64 {
    rng::derive_seed(master, match m {
        MiniBatch::Finite(m) => m,
        MiniBatch::Infinite => u64::MAX,
    })
}

/// Unbiased sample variance and its standard error from the fourth central
/// moment: `Var(s²) ≈ (μ₄ − σ⁴(n−3)/(n−1))/n`.
pub fn sample_variance_with_stderr(xs: &[f64]) -> Result<(f64, f64)> {
    let n = xs.len();
    if n < 2 {
        return Err(Error::invalid("n_paths", format!("{n} samples cannot give a variance")));
    }
    let nf = n as f64;
    let mean = xs.iter().sum::<f64>() / nf;
    let m2 = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / nf;
    let m4 = xs.iter().map(|x| (x - mean).powi(4)).sum::<f64>() / nf;
    let var = m2 * nf / (nf - 1.0);
    let var_of_var = ((m4 - var * var * (nf - 3.0) / (nf - 1.0)) / nf).max(0.0);
    Ok((var, var_of_var.sqrt()))
}

pub fn estimate_variance(config: &SweepConfig, m: MiniBatch) -> Result<VarianceEstimate> {
    estimate_variance_threaded(config, m, 1)
}

/// Same as [`estimate_variance`], with paths split into contiguous blocks
/// across `threads` workers. Paths own their random streams, so the result
/// does not depend on `threads`.
pub fn estimate_variance_threaded(config: &SweepConfig, m: MiniBatch, threads: usize) -> Result<VarianceEstimate> {
    if config.n_paths < 2 {
        return Err(Error::invalid("n_paths", format!("{} paths cannot give a variance", config.n_paths)));
    }
    let mut sim = config.sim_config(m);
    sim.seed = family_seed(config.base.seed, m);
    let i = config.component - 1;
    let run = |paths: std::ops::Range<u64>| -> Result<Vec<f64>> {
        paths.map(|p| final_state(&sim, p).map(|s| s.theta[i])).collect()
    };
    let n = config.n_paths as u64;
    let workers = threads.clamp(1, config.n_paths) as u64;
    let samples = if workers == 1 {
        run(0..n)?
    } else {
        let block = n.div_ceil(workers);
        let parts = std::thread::scope(|s| {
            let handles: Vec<_> = (0..workers)
                .map(|k| {
                    let range = (k * block).min(n)..((k + 1) * block).min(n);
                    s.spawn(move || run(range))
                })
                .collect();
            handles.into_iter().map(|h| h.join().expect("path worker panicked")).collect::<Vec<_>>()
        });
        let mut all = Vec::with_capacity(config.n_paths);
        for part in parts {
            all.extend(part?);
        }
        all
    };
    let (var_hat, stderr) = sample_variance_with_stderr(&samples)?;
    Ok(VarianceEstimate { m, var_hat, stderr, n_paths: config.n_paths })
}

pub fn sweep(config: &SweepConfig) -> Result<Vec<VarianceEstimate>> {
    sweep_threaded(config, 1)
}

pub fn sweep_threaded(config: &SweepConfig, threads: usize) -> Result<Vec<VarianceEstimate>> {
    config.validate()?;
    config
        .m_values
        .iter()
        .map(|&m| estimate_variance_threaded(config, MiniBatch::Finite(m), threads))
        .collect()
}

/// Ordinary least squares of `ln var_hat` on `ln m`.
pub fn fit_scaling(estimates: &[VarianceEstimate]) -> Result<ScalingFit> {
    if estimates.len() < 3 {
        return Err(Error::invalid("estimates", format!("need at least 3 points, got {}", estimates.len())));
    }
    let mut pts = Vec::with_capacity(estimates.len());
    for e in estimates {
        let MiniBatch::Finite(m) = e.m else {
            return Err(Error::invalid("estimates", "infinite batchsize has no place on a log axis"));
        };
        if !(e.var_hat > 0.0) {
            return Err(Error::invalid("estimates", format!("nonpositive variance {} at m = {m}", e.var_hat)));
        }
        pts.push(((m as f64).ln(), e.var_hat.ln()));
    }
    // sort so the floating-point sums do not depend on input order
    pts.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let syy: f64 = pts.iter().map(|p| (p.1 - my).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::invalid("estimates", "all batchsizes are equal"));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let r_squared = if syy == 0.0 { 1.0 } else { (sxy * sxy / (sxx * syy)).clamp(0.0, 1.0) };
    Ok(ScalingFit { slope, intercept, r_squared })
}

/// Theoretical variance for each estimate of a sweep.
pub fn oracle_values(config: &SweepConfig, estimates: &[VarianceEstimate]) -> Result<Vec<f64>> {
    estimates
        .iter()
        .map(|e| match e.m {
            MiniBatch::Finite(m) => {
                variance_oracle(config.t_eval, m, config.base.d, config.component, config.base.schedule)
            }
            MiniBatch::Infinite => Ok(0.0),
        })
        .collect()
}

/// CSV `m,n_paths,var_hat,stderr,oracle_value`, with the fit appended as a
/// `# slope=… intercept=… r2=…` comment line when given.
pub fn sweep_csv(estimates: &[VarianceEstimate], oracle: &[f64], fit: Option<&ScalingFit>) -> Result<String> {
    if estimates.len() != oracle.len() {
        return Err(Error::DimensionMismatch { expected: estimates.len(), got: oracle.len() });
    }
    let mut out = String::from("m,n_paths,var_hat,stderr,oracle_value\n");
    for (e, o) in estimates.iter().zip(oracle) {
        let m = match e.m {
            MiniBatch::Finite(m) => m.to_string(),
            MiniBatch::Infinite => "inf".into(),
        };
        let _ = writeln!(out, "{m},{},{:.16e},{:.16e},{o:.16e}", e.n_paths, e.var_hat, e.stderr);
    }
    if let Some(f) = fit {
        let _ = writeln!(out, "# slope={:.16e} intercept={:.16e} r2={:.16e}", f.slope, f.intercept, f.r_squared);
    }
    Ok(out)
}

pub fn write_sweep_csv(path: &Path, estimates: &[VarianceEstimate], oracle: &[f64], fit: Option<&ScalingFit>) -> Result<()> {
    std::fs::write(path, sweep_csv(estimates, oracle, fit)?).map_err(|e| Error::io(path, e))
}
