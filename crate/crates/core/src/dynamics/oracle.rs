//! Closed-form orbits and variance references for the linear model.

use super::{ParamState, StepSchedule};
use crate::error::{Error, Result};

/// Rotation angle of the noise-free flow after time `t`.
fn flow_angle(t: f64, schedule: StepSchedule) -> Result<f64> {
    schedule.validate()?;
    match schedule {
        StepSchedule::Constant(_) if t < 0.0 => Err(Error::invalid("t", format!("{t} is before the start"))),
        StepSchedule::Constant(c) => Ok(c * t),
        StepSchedule::Vanishing if t < 1.0 => Err(Error::invalid("t", format!("vanishing schedule needs t ≥ 1, got {t}"))),
        StepSchedule::Vanishing => Ok(t.ln()),
    }
}

/// Noise-free flow from `initial` (given at the schedule's start time).
///
/// Constant(c): `w = w₀cos(ct) − θ₀sin(ct)`, `θ = θ₀cos(ct) + w₀sin(ct)`.
/// Vanishing: the same rotation with angle `ln t`, starting from `(w₁, θ₁)` at
/// `t = 1`.
pub fn exact_orbit(initial: &ParamState, t: f64, schedule: StepSchedule) -> Result<ParamState> {
    let (sin, cos) = flow_angle(t, schedule)?.sin_cos();
    let w = initial.w.iter().zip(&initial.theta).map(|(w, th)| w * cos - th * sin).collect();
    let theta = initial.w.iter().zip(&initial.theta).map(|(w, th)| th * cos + w * sin).collect();
    Ok(ParamState { w, theta })
}

/// How the vanishing-schedule noise matrix is read.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SigmaReading {
    /// Noise entry `√2/(√m·s)` at time `s`: `Var = (2/m)∫₁ᵗ sin²(ln(t/s))/s² ds`.
    #[default]
    Definition,
    /// Alternative reading with the `1/s` factor on the outer time:
    /// `Var = (2/(m t²))∫₁ᵗ sin²(ln(t/s)) ds`.
    Literal,
}

fn check_component(d: usize, i: usize) -> Result<()> {
    if d == 0 || i == 0 || i > d {
        return Err(Error::invalid("i", format!("component {i} outside 1..={d}")));
    }
    Ok(())
}

/// `Var([θ_t]_i)` from the origin with batchsize `m`.
pub fn variance_oracle(t: f64, m: u64, d: usize, i: usize, schedule: StepSchedule) -> Result<f64> {
    variance_oracle_with(t, m, d, i, schedule, SigmaReading::Definition)
}

pub fn variance_oracle_with(
    t: f64,
    m: u64,
    d: usize,
    i: usize,
    schedule: StepSchedule,
    reading: SigmaReading,
) -> Result<f64> {
    check_component(d, i)?;
    if m == 0 {
        return Err(Error::invalid("m", "batchsize must be positive"));
    }
    let k = 2.0 / m as f64;
    let angle = flow_angle(t, schedule)?;
    match schedule {
        // c²·∫₀ᵗ sin²(c(t−s)) ds = c·(ct/2 − sin(2ct)/4)
        StepSchedule::Constant(c) => Ok(k * c * (angle / 2.0 - (2.0 * angle).sin() / 4.0)),
        StepSchedule::Vanishing => {
            // substitute s = e^u; both integrands are smooth on [0, ln t]
            let l = angle;
            let integral = match reading {
                SigmaReading::Definition => adaptive(|u| (l - u).sin().powi(2) * (-u).exp(), 0.0, l)?,
                SigmaReading::Literal => adaptive(|u| (l - u).sin().powi(2) * u.exp(), 0.0, l)? / (t * t),
            };
            Ok(k * integral)
        }
    }
}

/// Antiderivative-based value of the vanishing-schedule variance
/// (definition reading), independent of the quadrature.
pub fn vanishing_variance_closed_form(t: f64, m: u64) -> Result<f64> {
    if t < 1.0 || m == 0 {
        return Err(Error::invalid("t", format!("need t ≥ 1 and m > 0, got t = {t}, m = {m}")));
    }
    // (1/t)∫₀^{ln t} eᵘ sin²u du with ∫eᵘsin²u = eᵘ/2 − eᵘ(cos 2u + 2 sin 2u)/10
    let f = |u: f64| u.exp() / 2.0 - u.exp() * ((2.0 * u).cos() + 2.0 * (2.0 * u).sin()) / 10.0;
    Ok(2.0 / m as f64 * (f(t.ln()) - f(0.0)) / t)
}

/// Relative tolerance of the vanishing-schedule quadrature.
const QUAD_REL_TOL: f64 = 1e-8;

/// Double-exponential quadrature driven to a relative tolerance.
fn adaptive(f: impl Fn(f64) -> f64 + Copy, a: f64, b: f64) -> Result<f64> {
    if b <= a {
        return Ok(0.0);
    }
    let rough = quadrature::integrate(f, a, b, 1e-6).integral;
    let target = (QUAD_REL_TOL * rough.abs()).max(f64::MIN_POSITIVE);
    let out = quadrature::integrate(f, a, b, target * 1e-2);
    if !out.integral.is_finite() || out.error_estimate > target {
        return Err(Error::invalid(
            "quadrature",
            format!("error estimate {} above target {target}", out.error_estimate),
        ));
    }
    Ok(out.integral)
}
