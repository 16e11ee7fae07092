use std::path::Path;

use super::Spec;
use crate::config::{Key, Params, Ty};
use crate::error::{CliError, Result};
use crate::run_dir::RunDir;
use crate::svg::{render, Chart, Series, Style};

pub const SPEC: Spec = Spec {
    name: "plot",
    about: "Render columns of a CSV file as an SVG chart",
    keys: &[
        Key::req("input", Ty::Path, "CSV file with a header row"),
        Key::opt("x", Ty::Text, "x column (defaults to the first)"),
        Key::opt("y", Ty::Text, "comma-separated y columns (defaults to every other column)"),
        Key::def("style", Ty::Choice(&["line", "scatter"]), "line", "chart style"),
        Key::opt("title", Ty::Text, "chart title (defaults to the file name)"),
        Key::def("log_x", Ty::Bool, "false", "log10 x axis"),
        Key::def("log_y", Ty::Bool, "false", "log10 y axis"),
        Key::def("width", Ty::Uint, "800", "pixels"),
        Key::def("height", Ty::Uint, "500", "pixels"),
    ],
    preset: None,
    run,
};

/// Header and numeric columns; unparsable or empty cells become NaN and
/// `#` lines are skipped.
pub fn read_columns(path: &Path) -> Result<(Vec<String>, Vec<Vec<f64>>)> {
    let csv_err = |e: csv::Error| CliError::Csv { path: path.to_owned(), reason: e.to_string() };
    let mut reader = csv::ReaderBuilder::new().comment(Some(b'#')).from_path(path).map_err(csv_err)?;
    let header: Vec<String> = reader.headers().map_err(csv_err)?.iter().map(|h| h.trim().to_owned()).collect();
    let mut cols = vec![Vec::new(); header.len()];
    for rec in reader.records() {
        let rec = rec.map_err(csv_err)?;
        for (c, col) in cols.iter_mut().enumerate() {
            col.push(rec.get(c).and_then(|v| v.trim().parse::<f64>().ok()).unwrap_or(f64::NAN));
        }
    }
    Ok((header, cols))
}

fn run(p: &mut Params, dir: &mut RunDir) -> Result<String> {
    let input = p.path("input")?;
    let (header, cols) = read_columns(&input)?;
    let find = |name: &str| {
        header
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| CliError::config(format!("column {name:?} not in {}", input.display())))
    };
    let xi = match p.opt_text("x") {
        Some(x) => find(&x)?,
        None => 0,
    };
    let ys: Vec<usize> = match p.opt_text("y") {
        Some(_) => p.list::<String>("y")?.iter().map(|y| find(y)).collect::<Result<_>>()?,
        None => (0..header.len()).filter(|&c| c != xi).collect(),
    };
    let series: Vec<Series> = ys
        .iter()
        .map(|&c| Series { name: header[c].clone(), points: cols[xi].iter().copied().zip(cols[c].iter().copied()).collect() })
        .collect();
    let stem = input.file_stem().map_or("plot".into(), |s| s.to_string_lossy().into_owned());
    let chart = Chart {
        title: p.opt_text("title").unwrap_or_else(|| stem.clone()),
        x_label: header[xi].clone(),
        y_label: ys.iter().map(|&c| header[c].as_str()).collect::<Vec<_>>().join(", "),
        series,
        style: if p.text("style")? == "scatter" { Style::Scatter } else { Style::Line },
        log_x: p.flag("log_x")?,
        log_y: p.flag("log_y")?,
        width: p.uint("width")? as u32,
        height: p.uint("height")? as u32,
    };
    let svg = render(&chart).ok_or_else(|| CliError::Check(format!("nothing drawable in {}", input.display())))?;
    let name = format!("{stem}.svg");
    dir.write(&name, svg.as_bytes())?;
    Ok(format!("wrote {name}"))
}
