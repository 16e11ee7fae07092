use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn ganlab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ganlab")).args(args).output().expect("binary runs")
}

fn ok(args: &[&str]) -> String {
    let out = ganlab(args);
    assert!(out.status.success(), "{args:?} failed: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn stderr_line(out: &Output) -> String {
    let text = String::from_utf8_lossy(&out.stderr);
    let last = text.lines().last().unwrap_or("").to_owned();
    assert!(last.starts_with("error: "), "unexpected stderr {text}");
    last
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

/// `path -> sha256` from a manifest, timestamps dropped.
fn hashes(dir: &Path) -> Vec<(String, String)> {
    fs::read_to_string(dir.join("manifest.csv"))
        .unwrap()
        .lines()
        .skip(1)
        .map(|l| {
            let f: Vec<&str> = l.split(',').collect();
            assert_eq!(f.len(), 4, "{l}");
            (f[0].to_owned(), f[2].to_owned())
        })
        .collect()
}

#[test]
fn variance_sweep_writes_csv_with_fit_line() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("v1");
    ok(&["variance-sweep", "--schedule", "constant", "--m", "1,2,4,8,16", "--paths", "4000", "--t", "3.14159265", "--dt", "1e-3", "--seed", "7", "--out", s(&out)]);
    let csv = fs::read_to_string(out.join("sweep.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "m,n_paths,var_hat,stderr,oracle_value");
    assert_eq!(lines.len(), 7);
    assert!(lines[6].starts_with("# slope="));
    let names: Vec<String> = hashes(&out).into_iter().map(|h| h.0).collect();
    assert_eq!(names, ["sweep.csv", "resolved-config.txt"]);
}

#[test]
fn gen_geometry_writes_64_images_and_manifest() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("geo64");
    ok(&["gen-geometry", "--n-base", "32", "--seed", "3", "--out", s(&out)]);
    let pgms = fs::read_dir(out.join("images")).unwrap().filter(|e| e.as_ref().unwrap().path().extension().is_some_and(|x| x == "pgm")).count();
    assert_eq!(pgms, 64);
    assert!(out.join("images/manifest.csv").is_file());
    assert_eq!(hashes(&out).len(), 64 + 2);
}

#[test]
fn noise_free_orbit_closes_after_one_period() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("sim");
    ok(&["simulate", "--m", "inf", "--d", "1", "--w0", "1", "--theta0", "0", "--t-end", "6.2831853", "--dt", "1e-4", "--seed", "0", "--out", s(&out)]);
    let csv = fs::read_to_string(out.join("trajectory.csv")).unwrap();
    assert_eq!(csv.lines().next().unwrap(), "t,w_1,theta_1");
    let last: Vec<f64> = csv.lines().last().unwrap().split(',').map(|v| v.parse().unwrap()).collect();
    assert!((last[1] - 1.0).abs() < 1e-3 && last[2].abs() < 1e-3, "{last:?}");
}

#[test]
fn flags_override_the_config_file() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("c.txt");
    fs::write(&cfg, "# a comment\nseed = 1\nt_end = 1\ndt = 0.1\n").unwrap();
    let out = tmp.path().join("run");
    ok(&["simulate", "--config", s(&cfg), "--seed", "2", "--out", s(&out)]);
    let resolved = fs::read_to_string(out.join("resolved-config.txt")).unwrap();
    assert!(resolved.lines().any(|l| l == "seed = 2"), "{resolved}");
    assert!(resolved.lines().any(|l| l == "dt = 0.1"));
}

#[test]
fn empty_file_and_complete_flags() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("empty.txt");
    fs::write(&cfg, "").unwrap();
    ok(&["simulate", "--config", s(&cfg), "--t-end", "1", "--dt", "0.5", "--seed", "4", "--out", s(&tmp.path().join("r"))]);
}

#[test]
fn bad_value_in_file_names_the_key() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("c.txt");
    fs::write(&cfg, "dt = banana\nt_end = 1\nseed = 1\n").unwrap();
    let out = ganlab(&["simulate", "--config", s(&cfg), "--out", s(&tmp.path().join("r"))]);
    assert!(!out.status.success());
    let line = stderr_line(&out);
    assert!(line.starts_with("error: config:") && line.contains("`dt`"), "{line}");
}

#[test]
fn unknown_key_and_missing_seed_are_all_reported() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("c.txt");
    fs::write(&cfg, "colour = blue\nt_end = 1\ndt = 0.1\n").unwrap();
    let out = ganlab(&["simulate", "--config", s(&cfg), "--out", s(&tmp.path().join("r"))]);
    assert!(!out.status.success());
    let line = stderr_line(&out);
    assert!(line.contains("`colour`") && line.contains("`seed`"), "{line}");
}

#[test]
fn domain_validation_fails_with_one_line() {
    let tmp = tempfile::tempdir().unwrap();
    let out = ganlab(&["train-gan", "--steps", "1", "--batch", "0", "--log-stride", "0", "--seed", "1", "--out", s(&tmp.path().join("r"))]);
    assert_eq!(out.status.code(), Some(1));
    let line = stderr_line(&out);
    assert!(line.starts_with("error: invalid:") && line.contains("batch") && line.contains("log_stride"), "{line}");
}

#[test]
fn unknown_command_prints_usage() {
    let out = ganlab(&["frobnicate"]);
    assert!(!out.status.success());
    let text = String::from_utf8_lossy(&out.stderr);
    assert!(text.contains("Usage:") && text.contains("variance-sweep"), "{text}");
    assert!(stderr_line(&out).starts_with("error: usage:"));
    assert!(!ganlab(&[]).status.success());
}

#[test]
fn reruns_and_resolved_configs_reproduce_hashes() {
    let tmp = tempfile::tempdir().unwrap();
    let args = |out: &Path| {
        vec!["train-gan".to_owned(), "--recipe".into(), "toy-pair".into(), "--regime".into(), "sc_pcr".into(), "--steps".into(), "30".into(), "--log-stride".into(), "10".into(), "--gen-hidden".into(), "16".into(), "--disc-hidden".into(), "16".into(), "--emit-probes".into(), "--seed".into(), "11".into(), "--out".into(), out.to_str().unwrap().to_owned()]
    };
    let (a, b, c) = (tmp.path().join("a"), tmp.path().join("b"), tmp.path().join("c"));
    let run = |v: Vec<String>| ok(&v.iter().map(String::as_str).collect::<Vec<_>>());
    run(args(&a));
    run(args(&b));
    assert_eq!(hashes(&a), hashes(&b));
    assert_eq!(fs::read(a.join("train_log.csv")).unwrap(), fs::read(b.join("train_log.csv")).unwrap());
    ok(&["train-gan", "--config", s(&a.join("resolved-config.txt")), "--out", s(&c)]);
    assert_eq!(hashes(&a), hashes(&c));
    // probes: 4 log points of 16 probes, capped by the latent count
    assert!(hashes(&a).iter().any(|(p, _)| p == "probes/step_000030/probe_000.pgm"));
}

#[test]
fn combos_and_margin_check_use_a_trained_checkpoint() {
    let tmp = tempfile::tempdir().unwrap();
    let data = tmp.path().join("data");
    ok(&["gen-geometry", "--n-base", "8", "--seed", "2", "--out", s(&data)]);
    let gan = tmp.path().join("gan");
    ok(&["train-gan", "--data", s(&data), "--steps", "20", "--gen-hidden", "16", "--disc-hidden", "16", "--batch", "8", "--seed", "2", "--out", s(&gan)]);
    let ckpt = gan.join("checkpoint.bin");

    let combos = tmp.path().join("combos");
    let line = ok(&["eval-combos", "--data", s(&data), "--checkpoint", s(&ckpt), "--emit-images", "--seed", "2", "--out", s(&combos)]);
    assert!(line.contains("and: n=8 count=1..1 clean=1") && line.contains("or: n=8 count=3..3 clean=1"), "{line}");
    let rows = fs::read_to_string(combos.join("combos.csv")).unwrap();
    assert_eq!(rows.lines().count(), 1 + 16);
    assert!(rows.lines().skip(1).all(|l| !l.ends_with(',')), "scores missing");
    assert!(combos.join("combos/or/00007.pgm").is_file());

    let t3 = tmp.path().join("t3");
    let line = ok(&["check-theorem3", "--checkpoint", s(&ckpt), "--data", s(&data), "--pairs", "40", "--seed", "5", "--out", s(&t3)]);
    assert!(line.starts_with("held 120/120"), "{line}");
    assert_eq!(fs::read_to_string(t3.join("margin.csv")).unwrap().lines().count(), 121);
}

#[test]
fn plot_emits_parseable_svg() {
    let tmp = tempfile::tempdir().unwrap();
    let csv = tmp.path().join("log.csv");
    fs::write(&csv, "step,d_loss,score_dcom\n0,1.3,NaN\n10,0.9,0.5\n20,0.7,-0.25\n# trailing comment\n").unwrap();
    for style in ["line", "scatter"] {
        let out = tmp.path().join(style);
        ok(&["plot", "--input", s(&csv), "--style", style, "--title", "loss & <scores>", "--seed", "0", "--out", s(&out)]);
        let text = fs::read_to_string(out.join("log.svg")).unwrap();
        let doc = roxmltree::Document::parse(&text).expect("well-formed XML");
        let root = doc.root_element();
        assert_eq!(root.tag_name().name(), "svg");
        assert_eq!(root.tag_name().namespace(), Some("http://www.w3.org/2000/svg"));
        assert_eq!(root.attribute("version"), Some("1.1"));
        let shapes = root.descendants().filter(|n| matches!(n.tag_name().name(), "polyline" | "circle")).count();
        assert!(shapes >= 2);
    }
    let out = ganlab(&["plot", "--input", s(&csv), "--y", "missing", "--seed", "0", "--out", s(&tmp.path().join("z"))]);
    assert!(stderr_line(&out).contains("missing"));
}
