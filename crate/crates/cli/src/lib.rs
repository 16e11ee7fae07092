//! Command-line front end: each command resolves a typed configuration, runs
//! one pipeline and writes its artifacts plus `resolved-config.txt` and
//! `manifest.csv` into the output directory.

pub mod commands;
pub mod config;
pub mod error;
pub mod run_dir;
pub mod svg;

use std::ffi::OsString;
use std::io::Write;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::parser::ValueSource;
use clap::{Arg, ArgAction, ArgMatches};

use commands::Spec;
use config::{Key, Layer, Ty, GLOBAL_KEYS};
pub use error::{CliError, Result};
use run_dir::RunDir;

fn keys_of(spec: &Spec) -> Vec<Key> {
    GLOBAL_KEYS.iter().chain(spec.keys).copied().collect()
}

fn cli() -> clap::Command {
    let mut app = clap::Command::new("ganlab")
        .about("Reproducible GAN training-dynamics experiments")
        .subcommand_required(true)
        .arg_required_else_help(true)
        .disable_version_flag(true);
    for spec in &commands::ALL {
        let mut sub = clap::Command::new(spec.name).about(spec.about).arg(
            Arg::new("config").long("config").value_name("FILE").help("key = value config file"),
        );
        for key in keys_of(spec) {
            let arg = Arg::new(key.name).long(key.flag()).help(key.help);
            sub = sub.arg(match key.ty {
                Ty::Bool => arg.action(ArgAction::SetTrue),
                ty => arg.value_name(ty_hint(ty)).action(ArgAction::Set),
            });
        }
        app = app.subcommand(sub);
    }
    app
}

fn ty_hint(ty: Ty) -> &'static str {
    match ty {
        Ty::Uint => "N",
        Ty::Float => "X",
        Ty::Bool => "BOOL",
        Ty::Path => "PATH",
        Ty::Text | Ty::Choice(_) => "VALUE",
        Ty::UintList | Ty::FloatList | Ty::ChoiceList(_) => "LIST",
        Ty::UintOrInf | Ty::UintOrFull => "N",
    }
}

fn flag_layer(keys: &[Key], m: &ArgMatches) -> Layer {
    let mut layer = Layer::new("command line");
    for key in keys {
        if m.value_source(key.name) != Some(ValueSource::CommandLine) {
            continue;
        }
        let value = match key.ty {
            Ty::Bool => "true".to_owned(),
            _ => m.get_one::<String>(key.name).cloned().unwrap_or_default(),
        };
        layer.values.insert(key.name.to_owned(), value);
    }
    layer
}

/// Parse `argv` (program name first), run the command and print its summary.
pub fn run<I, T>(argv: I, out: &mut dyn Write) -> Result<()>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let mut app = cli();
    let matches = match app.try_get_matches_from_mut(argv) {
        Ok(m) => m,
        Err(e) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => {
            let _ = write!(out, "{}", e.render());
            return Ok(());
        }
        Err(e) => {
            if matches!(
                e.kind(),
                ErrorKind::InvalidSubcommand | ErrorKind::MissingSubcommand | ErrorKind::DisplayHelpOnMissingArgumentOrSubcommand
            ) {
                eprintln!("{}", app.render_long_help());
            }
            let first = e.render().to_string().lines().next().unwrap_or("bad arguments").trim_start_matches("error: ").to_owned();
            return Err(CliError::Usage(first));
        }
    };
    let (name, sub) = matches.subcommand().expect("subcommand is required");
    let spec = commands::ALL.iter().find(|s| s.name == name).expect("registered command");
    let keys = keys_of(spec);

    let flags = flag_layer(&keys, sub);
    let file = match sub.get_one::<String>("config") {
        Some(path) => config::load_config(path.as_ref())?,
        None => Layer::new("config file"),
    };
    let mut layers = Vec::with_capacity(3);
    if let Some(preset) = spec.preset {
        let lookup = |k: &str| flags.get(k).or_else(|| file.get(k)).map(str::to_owned);
        if let Some(layer) = preset(&lookup)? {
            layers.push(layer);
        }
    }
    layers.push(file);
    layers.push(flags);
    let mut params = config::resolve(&keys, &layers)?;

    let mut dir = RunDir::create(&params.path("out")?)?;
    let outcome = (spec.run)(&mut params, &mut dir);
    match outcome {
        Ok(summary) => {
            dir.finish(&params.to_text(name))?;
            let _ = writeln!(out, "{summary}");
            Ok(())
        }
        Err(CliError::Check(msg)) => {
            dir.finish(&params.to_text(name))?;
            Err(CliError::Check(msg))
        }
        Err(e) => Err(e),
    }
}

/// Process entry point: failures become one `error: <code>: <message>` line
/// on stderr and a nonzero exit status.
pub fn main_with<I, T>(argv: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let stdout = std::io::stdout();
    match run(argv, &mut stdout.lock()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", e.line());
            ExitCode::from(e.exit_code())
        }
    }
}
