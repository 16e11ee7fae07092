//! One module per command.

mod combos;
mod gan;
mod geometry;
mod plot;
mod simulate;
mod sweep;
mod theorem3;

use std::path::Path;

use ganlab::geometry::{generate_paired, generate_toy_pair, pgm, GeometryDataset};

use crate::config::{Key, Layer, Params};
use crate::error::Result;
use crate::run_dir::RunDir;

pub type RunFn = fn(&mut Params, &mut RunDir) -> Result<String>;
/// Builds a layer of values below the config file, given a lookup over the
/// file and the flags.
pub type PresetFn = fn(&dyn Fn(&str) -> Option<String>) -> Result<Option<Layer>>;

pub struct Spec {
    pub name: &'static str,
    pub about: &'static str,
    pub keys: &'static [Key],
    pub preset: Option<PresetFn>,
    pub run: RunFn,
}

pub const ALL: [Spec; 7] = [
    simulate::SPEC,
    sweep::SPEC,
    geometry::SPEC,
    gan::SPEC,
    combos::SPEC,
    theorem3::SPEC,
    plot::SPEC,
];

pub(crate) const DATASET_KINDS: &[&str] = &["paired", "toy-pair"];

/// Where a command's training images come from: a saved directory, or a
/// generated dataset seeded by `data_seed` (the run seed when unset).
macro_rules! dataset_keys {
    ($n_base:literal) => {
        [
            Key::opt("data", Ty::Path, "dataset directory written by gen-geometry"),
            Key::def("dataset", Ty::Choice(DATASET_KINDS), "paired", "dataset to generate when no directory is given"),
            Key::def("n_base", Ty::Uint, $n_base, "base images of a paired dataset (two images each)"),
            Key::opt("data_seed", Ty::Uint, "seed of the generated dataset (defaults to the run seed)"),
        ]
    };
}
pub(crate) use dataset_keys;

pub(crate) fn load_dataset_dir(dir: &Path) -> Result<GeometryDataset> {
    let nested = dir.join(geometry::IMAGES_DIR);
    let dir = if nested.join(pgm::MANIFEST).is_file() { nested } else { dir.to_owned() };
    Ok(pgm::load_dataset(&dir)?)
}

pub(crate) fn dataset_from(p: &mut Params) -> Result<GeometryDataset> {
    if let Some(dir) = p.opt_path("data") {
        return load_dataset_dir(&dir);
    }
    let seed = p.uint("seed")?;
    p.set_default("data_seed", seed.to_string());
    let data_seed = p.uint("data_seed")?;
    Ok(match p.text("dataset")?.as_str() {
        "toy-pair" => generate_toy_pair(data_seed)?,
        _ => generate_paired(p.usize("n_base")?, data_seed)?,
    })
}

pub(crate) fn fmt_f(x: f64) -> String {
    format!("{x:.16e}")
}
