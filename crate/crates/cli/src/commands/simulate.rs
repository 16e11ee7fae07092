use ganlab::dynamics::{simulate_stream, MiniBatch, ParamState, SimConfig, StepSchedule};

use super::Spec;
use crate::config::{Key, Params, Ty};
use crate::error::{CliError, Result};
use crate::run_dir::RunDir;

pub const SCHEDULES: &[&str] = &["constant", "vanishing"];

pub const SPEC: Spec = Spec {
    name: "simulate",
    about: "Integrate the linear WGAN parameter dynamics along one path",
    keys: &[
        Key::def("schedule", Ty::Choice(SCHEDULES), "constant", "step-size schedule"),
        Key::def("c", Ty::Float, "1", "rate of the constant schedule"),
        Key::def("m", Ty::UintOrInf, "inf", "batchsize; inf is the noise-free flow"),
        Key::def("d", Ty::Uint, "1", "parameter dimension"),
        Key::def("w0", Ty::FloatList, "0", "initial discriminator parameter (one value or d values)"),
        Key::def("theta0", Ty::FloatList, "0", "initial generator parameter (one value or d values)"),
        Key::req("t_end", Ty::Float, "final time"),
        Key::req("dt", Ty::Float, "step size"),
        Key::def("record_stride", Ty::Uint, "1", "keep every n-th step"),
        Key::def("path", Ty::Uint, "0", "random stream index of the path"),
    ],
    preset: None,
    run,
};

pub fn schedule(p: &Params) -> Result<StepSchedule> {
    Ok(match p.text("schedule")?.as_str() {
        "vanishing" => StepSchedule::Vanishing,
        _ => StepSchedule::Constant(p.float("c")?),
    })
}

fn minibatch(p: &Params) -> Result<MiniBatch> {
    Ok(match p.text("m")?.as_str() {
        "inf" => MiniBatch::Infinite,
        _ => MiniBatch::Finite(p.uint("m")?),
    })
}

fn broadcast(p: &Params, key: &str, d: usize) -> Result<Vec<f64>> {
    let v: Vec<f64> = p.list(key)?;
    match v.len() {
        1 => Ok(vec![v[0]; d]),
        n if n == d => Ok(v),
        n => Err(CliError::config(format!("key `{key}`: {n} values for dimension {d}"))),
    }
}

fn run(p: &mut Params, dir: &mut RunDir) -> Result<String> {
    let d = p.usize("d")?;
    let mut cfg = SimConfig::new(schedule(p)?, minibatch(p)?, p.float("dt")?, p.float("t_end")?, p.uint("seed")?);
    cfg.d = d;
    cfg.record_stride = p.usize("record_stride")?;
    if d > 0 {
        let (w, theta) = (broadcast(p, "w0", d)?, broadcast(p, "theta0", d)?);
        cfg.initial = Some(ParamState::new(w, theta)?);
    }
    cfg.validate()?;
    let traj = simulate_stream(&cfg, p.uint("path")?)?;
    dir.write("trajectory.csv", traj.to_csv().as_bytes())?;
    let (t, s) = traj.last().expect("a trajectory holds its start");
    Ok(format!("final t={t} w={:?} theta={:?}", s.w, s.theta))
}
