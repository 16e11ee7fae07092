use ganlab::geometry::generate_paired;
use ganlab::tinygan::checkpoint;
use ganlab::tinygan::metrics::mode_collapse_report;
use ganlab::tinygan::{
    recipes, train, Architecture, BatchSize, GanConfig, OptimizerKind, PriorSpec, Regime, Trainer, LogRow,
};
use ganlab::{rng, Error};

fn small(regime: Regime, seed: u64) -> GanConfig {
    let mut cfg = GanConfig::new(regime, seed);
    cfg.arch = Architecture { latent_dim: 8, gen_hidden: vec![32], disc_hidden: vec![32], ..Architecture::default() };
    cfg.batch = if regime == Regime::Fgd { BatchSize::Full } else { BatchSize::Fixed(16) };
    cfg.steps = 40;
    cfg.log_stride = 10;
    cfg.eval.samples = 64;
    cfg
}

#[test]
fn every_regime_trains_and_logs_at_the_stride() {
    let ds = generate_paired(16, 4).unwrap();
    for regime in Regime::ALL {
        let out = train(&small(regime, 1), &ds).unwrap();
        let steps: Vec<usize> = out.log.rows.iter().map(|r| r.step).collect();
        assert_eq!(steps, [0, 10, 20, 30, 40], "{regime}");
        assert!(out.log.rows.iter().all(|r: &LogRow| (0.0..=1.0).contains(&r.prop_correct) && r.d_loss.is_finite()));
        let csv = out.log.to_csv();
        assert_eq!(csv.lines().count(), 6);
        assert_eq!(
            csv.lines().next().unwrap(),
            "step,d_loss,g_loss,grad_d,grad_g,score_real,score_fake,score_dcom,prop_correct,mean_dif,probe_flips"
        );
    }
}

#[test]
fn identical_configs_give_identical_logs() {
    let ds = generate_paired(16, 4).unwrap();
    let cfg = small(Regime::ScPcr, 7);
    assert_eq!(train(&cfg, &ds).unwrap().log.to_csv(), train(&cfg, &ds).unwrap().log.to_csv());
    let other = GanConfig { seed: 8, ..cfg.clone() };
    assert_ne!(train(&cfg, &ds).unwrap().log.to_csv(), train(&other, &ds).unwrap().log.to_csv());
}

#[test]
fn checkpoint_file_resumes_the_same_networks() {
    let ds = generate_paired(8, 1).unwrap();
    let out = train(&small(Regime::Pcr, 2), &ds).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("run.ckpt");
    checkpoint::save(&path, &out.gan).unwrap();
    let back = checkpoint::load(&path).unwrap();
    assert_eq!(back, out.gan);
    std::fs::write(&path, b"not a checkpoint").unwrap();
    assert!(matches!(checkpoint::load(&path), Err(Error::Format { .. })));
}

#[test]
fn full_batch_with_discrete_prior_learns_a_small_dataset() {
    let ds = generate_paired(4, 6).unwrap();
    let mut cfg = small(Regime::Fgd, 3);
    cfg.batch = BatchSize::Full;
    cfg.prior = PriorSpec::DiscreteUniform(ds.len());
    cfg.optimizer = OptimizerKind::adam_default();
    cfg.arch.latent_dim = 32;
    cfg.arch.gen_hidden = vec![128, 128];
    cfg.arch.disc_hidden = vec![128, 128];
    cfg.steps = 800;
    cfg.log_stride = 100;
    let out = train(&cfg, &ds).unwrap();
    let last = out.log.last().unwrap();
    assert!(last.prop_correct >= 0.75, "{last:?}");
    // every code reproduces a training image
    let mut r = rng::stream(0, 0);
    let cov = mode_collapse_report(&out.gan.generator, &out.gan.prior, &ds.images, 10 * ds.len(), &mut r).unwrap();
    assert!(cov.coverage > 0.0);
}

#[test]
fn trainer_steps_match_a_one_shot_run() {
    let ds = generate_paired(8, 2).unwrap();
    let cfg = small(Regime::Sc, 5);
    let mut t = Trainer::new(cfg.clone(), &ds).unwrap();
    let mut seen = 0;
    t.run_with(|tr| {
        seen += 1;
        assert_eq!(tr.probe_images().unwrap().len(), cfg.eval.probes);
        Ok(())
    })
    .unwrap();
    assert_eq!(seen, 5);
    assert_eq!(t.finish().log, train(&cfg, &ds).unwrap().log);
}

#[test]
fn recipes_are_valid() {
    for regime in [Regime::Vanilla, Regime::Sc, Regime::Pcr, Regime::ScPcr] {
        let (ds, cfg) = recipes::regime_comparison(regime, 1).unwrap();
        assert_eq!(ds.len(), 1024);
        cfg.validate().unwrap();
    }
}
