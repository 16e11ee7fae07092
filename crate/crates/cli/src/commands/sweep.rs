use ganlab::dynamics::{variance_oracle_with, SigmaReading, SimConfig, MiniBatch};
use ganlab::variance_lab::{fit_scaling, sweep_csv, sweep_threaded, SweepConfig};

use super::simulate::{schedule, SCHEDULES};
use super::Spec;
use crate::config::{Key, Params, Ty};
use crate::error::Result;
use crate::run_dir::RunDir;

pub const SPEC: Spec = Spec {
    name: "variance-sweep",
    about: "Monte Carlo variance of the generator parameter across batchsizes, with oracle and log-log fit",
    keys: &[
        Key::def("schedule", Ty::Choice(SCHEDULES), "constant", "step-size schedule"),
        Key::def("c", Ty::Float, "1", "rate of the constant schedule"),
        Key::req("m", Ty::UintList, "strictly increasing batchsizes"),
        Key::req("paths", Ty::Uint, "paths per batchsize"),
        Key::req("t", Ty::Float, "evaluation time"),
        Key::req("dt", Ty::Float, "step size"),
        Key::def("d", Ty::Uint, "1", "parameter dimension"),
        Key::def("component", Ty::Uint, "1", "1-based component of the generator parameter"),
        Key::def("sigma_reading", Ty::Choice(&["definition", "literal"]), "definition", "noise reading used by the vanishing-schedule oracle"),
    ],
    preset: None,
    run,
};

fn run(p: &mut Params, dir: &mut RunDir) -> Result<String> {
    let sched = schedule(p)?;
    let t = p.float("t")?;
    let mut base = SimConfig::new(sched, MiniBatch::Infinite, p.float("dt")?, t, p.uint("seed")?);
    base.d = p.usize("d")?;
    let cfg = SweepConfig { base, m_values: p.list("m")?, n_paths: p.usize("paths")?, t_eval: t, component: p.usize("component")? };
    let reading = match p.text("sigma_reading")?.as_str() {
        "literal" => SigmaReading::Literal,
        _ => SigmaReading::Definition,
    };
    let estimates = sweep_threaded(&cfg, p.usize("threads")?)?;
    let oracle = cfg
        .m_values
        .iter()
        .map(|&m| variance_oracle_with(t, m, cfg.base.d, cfg.component, sched, reading))
        .collect::<ganlab::Result<Vec<_>>>()?;
    let fit = (estimates.len() >= 3).then(|| fit_scaling(&estimates)).transpose()?;
    dir.write("sweep.csv", sweep_csv(&estimates, &oracle, fit.as_ref())?.as_bytes())?;
    Ok(match fit {
        Some(f) => format!("slope={} intercept={} r2={}", f.slope, f.intercept, f.r_squared),
        None => format!("{} batchsizes, too few for a fit", estimates.len()),
    })
}
