use std::fmt::Write as _;

use ganlab::combination::{build_dcom, sibling_dcom, CombDataset, CombOp};
use ganlab::geometry::{count_rectangles, pgm, DEFAULT_RECT};
use ganlab::tinygan::checkpoint;
use ganlab::tinygan::metrics::images_to_rows;

use super::{dataset_from, dataset_keys, fmt_f, Spec, DATASET_KINDS};
use crate::config::{Key, Params, Ty};
use crate::error::Result;
use crate::run_dir::RunDir;

const KEYS: &[Key] = &{
    let data = dataset_keys!("1000");
    [
        data[0],
        data[1],
        data[2],
        data[3],
        Key::def("ops", Ty::ChoiceList(&["and", "or", "average"]), "and,or", "combinations to build"),
        Key::def("source", Ty::Choice(&["siblings", "all-pairs"]), "siblings", "which pairs to combine"),
        Key::def("max_size", Ty::Uint, "1000", "pairs sampled per op when combining all pairs"),
        Key::opt("checkpoint", Ty::Path, "score the combinations with this run's discriminator"),
        Key::def("emit_images", Ty::Bool, "false", "write the combination images"),
    ]
};

pub const SPEC: Spec = Spec {
    name: "eval-combos",
    about: "Build pixel-wise combinations of training pairs, count their rectangles and optionally score them",
    keys: KEYS,
    preset: None,
    run,
};

fn run(p: &mut Params, dir: &mut RunDir) -> Result<String> {
    let ds = dataset_from(p)?;
    let ops: Vec<CombOp> = p.list("ops")?;
    let disc = p.opt_path("checkpoint").map(|c| checkpoint::load(&c)).transpose()?.map(|g| g.discriminator);
    let emit = p.flag("emit_images")?;
    let seed = p.uint("seed")?;
    let mut rows = String::from("op,i,j,count,clean,score\n");
    let mut summary = String::from("op,n,count_min,count_max,share_clean,mean_score\n");
    let mut line = Vec::new();
    for (k, &op) in ops.iter().enumerate() {
        let combos: CombDataset = match p.text("source")?.as_str() {
            "all-pairs" => build_dcom(&ds.images, op, p.usize("max_size")?, ganlab::rng::derive_seed(seed, k as u64))?,
            _ => sibling_dcom(&ds, op)?,
        };
        let scores = match &disc {
            Some(d) => Some(d.predict_pre_output(images_to_rows(&combos.images).view())?.column(0).to_vec()),
            None => None,
        };
        let (mut lo, mut hi, mut clean) = (usize::MAX, 0, 0);
        for (n, (img, &(i, j))) in combos.images.iter().zip(&combos.source_pairs).enumerate() {
            let c = count_rectangles(img, DEFAULT_RECT, DEFAULT_RECT);
            lo = lo.min(c.count);
            hi = hi.max(c.count);
            clean += usize::from(c.clean);
            let score = scores.as_ref().map(|s| fmt_f(s[n])).unwrap_or_default();
            let _ = writeln!(rows, "{op},{i},{j},{},{},{score}", c.count, c.clean);
            if emit {
                dir.write(&format!("combos/{op}/{}", pgm::image_filename(n)), &pgm::encode(img))?;
            }
        }
        let n = combos.len();
        let mean = scores.map(|s| fmt_f(s.iter().sum::<f64>() / n as f64)).unwrap_or_default();
        let share = clean as f64 / n as f64;
        let _ = writeln!(summary, "{op},{n},{lo},{hi},{},{mean}", fmt_f(share));
        line.push(format!("{op}: n={n} count={lo}..{hi} clean={share}"));
    }
    dir.write("combos.csv", rows.as_bytes())?;
    dir.write("summary.csv", summary.as_bytes())?;
    Ok(line.join("; "))
}
