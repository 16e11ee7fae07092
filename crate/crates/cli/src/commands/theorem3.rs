use std::fmt::Write as _;

use ganlab::combination::{check_margin, lipschitz_upper_bound};
use ganlab::rng;
use ganlab::tinygan::checkpoint;
use rand::Rng;

use super::{dataset_from, dataset_keys, fmt_f, Spec, DATASET_KINDS};
use crate::config::{Key, Params, Ty};
use crate::error::{CliError, Result};
use crate::run_dir::RunDir;

const KEYS: &[Key] = &{
    let data = dataset_keys!("512");
    [
        Key::req("checkpoint", Ty::Path, "trained run whose discriminator is checked"),
        data[0],
        data[1],
        data[2],
        data[3],
        Key::def("pairs", Ty::Uint, "1000", "training pairs sampled"),
        Key::def("lambdas", Ty::FloatList, "0.25,0.5,0.75", "mixing weights"),
    ]
};

pub const SPEC: Spec = Spec {
    name: "check-theorem3",
    about: "Check the Lipschitz lower bound on discriminator scores of convex mixtures of training pairs",
    keys: KEYS,
    preset: None,
    run,
};

fn run(p: &mut Params, dir: &mut RunDir) -> Result<String> {
    let ds = dataset_from(p)?;
    if ds.len() < 2 {
        return Err(CliError::config("key `data`: need at least two training images"));
    }
    let disc = checkpoint::load(&p.path("checkpoint")?)?.discriminator;
    let lipschitz = lipschitz_upper_bound(&disc)?;
    let lambdas: Vec<f64> = p.list("lambdas")?;
    let mut r = rng::stream(p.uint("seed")?, 0);
    let n = ds.len();
    let mut csv = String::from("pair,i,j,lambda,f_x1,f_x2,f_mix,bound,delta,lipschitz,holds,positivity_condition,mix_positive\n");
    let (mut checked, mut held) = (0usize, 0usize);
    for pair in 0..p.usize("pairs")? {
        let i = r.random_range(0..n);
        let j = (i + r.random_range(1..n)) % n;
        for &lambda in &lambdas {
            let m = check_margin(&disc, &ds.images[i], &ds.images[j], lambda, lipschitz)?;
            checked += 1;
            held += usize::from(m.holds);
            let _ = writeln!(
                csv,
                "{pair},{i},{j},{lambda},{},{},{},{},{},{},{},{},{}",
                fmt_f(m.f_x1),
                fmt_f(m.f_x2),
                fmt_f(m.f_mix),
                fmt_f(m.bound),
                fmt_f(m.delta),
                fmt_f(m.lipschitz),
                m.holds,
                m.positivity_condition,
                m.mix_positive
            );
        }
    }
    dir.write("margin.csv", csv.as_bytes())?;
    let line = format!("held {held}/{checked} lipschitz={lipschitz}");
    if held == checked {
        Ok(line)
    } else {
        Err(CliError::Check(format!("bound violated: {line}")))
    }
}
