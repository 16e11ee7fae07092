use ganlab::geometry::{generate_paired, generate_toy_pair, generate_with_count, pgm};

use super::Spec;
use crate::config::{Key, Params, Ty};
use crate::error::Result;
use crate::run_dir::RunDir;

/// Subdirectory holding the images and the dataset's own manifest.
pub const IMAGES_DIR: &str = "images";

pub const SPEC: Spec = Spec {
    name: "gen-geometry",
    about: "Generate a rectangle dataset as PGM images",
    keys: &[
        Key::def("dataset", Ty::Choice(&["paired", "toy-pair", "fixed-count"]), "paired", "dataset kind"),
        Key::def("n_base", Ty::Uint, "32", "base images of a paired dataset (two images each)"),
        Key::def("n", Ty::Uint, "64", "images of a fixed-count dataset"),
        Key::def("count", Ty::Uint, "3", "rectangles per image of a fixed-count dataset"),
    ],
    preset: None,
    run,
};

fn run(p: &mut Params, dir: &mut RunDir) -> Result<String> {
    let seed = p.uint("seed")?;
    let ds = match p.text("dataset")?.as_str() {
        "toy-pair" => generate_toy_pair(seed)?,
        "fixed-count" => generate_with_count(p.usize("n")?, p.usize("count")?, seed)?,
        _ => generate_paired(p.usize("n_base")?, seed)?,
    };
    for path in pgm::save_dataset(&dir.path_of(IMAGES_DIR), &ds)? {
        dir.adopt(&path)?;
    }
    Ok(format!("{} images, target count {}", ds.len(), ds.target_count))
}
