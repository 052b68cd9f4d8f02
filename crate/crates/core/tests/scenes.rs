mod common;

use common::brute_force_shift;
use freqcache::harness::compare::compare_domains;
use freqcache::harness::config::RunConfig;
use freqcache::harness::scene::{generate_scene, SceneKind, SceneSpec};
use freqcache::harness::stats::spearman;
use freqcache::{
    dft2, phase_correlation, run_sequence, sim_freq, spectral_entropy, CacheConfig,
    HistogramTokenizer,
};

fn spec(kind: SceneKind, len: usize, seed: u64) -> SceneSpec {
    let mut s = SceneSpec::new(kind, 64, 64, len, seed);
    s.patch_size = 8;
    s
}

fn cfg() -> RunConfig {
    RunConfig {
        cache: CacheConfig::with_patch_size(8),
        ..RunConfig::default()
    }
}

#[test]
fn translate_shift_recovered_every_step() {
    let scene = generate_scene(&spec(SceneKind::Translate, 6, 1)).unwrap();
    for pair in scene.frames.windows(2) {
        assert_eq!(phase_correlation(&pair[0], &pair[1]).unwrap(), (3, 5));
        assert_eq!(brute_force_shift(&pair[0], &pair[1]), (3, 5));
    }
}

#[test]
fn static_scene_has_unit_similarity() {
    let scene = generate_scene(&spec(SceneKind::Static, 4, 2)).unwrap();
    let a = dft2(&scene.frames[0]).amplitude();
    for f in &scene.frames[1..] {
        assert_eq!(sim_freq(&a, &dft2(f).amplitude()).unwrap(), 1.0);
    }
}

#[test]
fn ramp_entropy_rises() {
    let scene = generate_scene(&spec(SceneKind::ComplexityRamp, 12, 3)).unwrap();
    let steps: Vec<f64> = (0..12).map(|t| t as f64).collect();
    let ent: Vec<f64> = scene
        .frames
        .iter()
        .map(|f| spectral_entropy(&dft2(f).amplitude()).unwrap().normalized)
        .collect();
    assert!(spearman(&steps, &ent).unwrap() > 0.9, "{ent:?}");
}

#[test]
fn translate_favours_frequency_policy_over_visual() {
    let scene = generate_scene(&spec(SceneKind::Translate, 6, 4)).unwrap();
    let r = compare_domains(&scene.frames, None, &cfg()).unwrap();
    let fc = r.policy("freqcache").unwrap().reuse_ratio;
    let vis = r.policy("visual").unwrap().reuse_ratio;
    assert!(fc > vis, "freqcache {fc} visual {vis}");
    assert_eq!(r.policy("visual").unwrap().edge_false_reuse, None);
}

#[test]
fn static_scene_policies_hit_budget_cap() {
    let scene = generate_scene(&spec(SceneKind::Static, 5, 5)).unwrap();
    let r = compare_domains(&scene.frames, None, &cfg()).unwrap();
    let seq = run_sequence(
        &scene.frames,
        &cfg().cache,
        Box::new(HistogramTokenizer::default()),
        None,
    )
    .unwrap();
    let caps: Vec<usize> = seq.decisions.iter().map(|d| d.k_reuse).collect();
    for p in &r.policies {
        assert_eq!(p.per_step_reused, caps, "{}", p.policy);
    }
}

#[test]
fn edge_scene_freqcache_never_reuses_edges() {
    let mut s = spec(SceneKind::EdgeInject, 8, 6);
    s.edge_count = 4;
    let scene = generate_scene(&s).unwrap();
    let r = compare_domains(&scene.frames, Some(&scene.edge_labels), &cfg()).unwrap();
    assert_eq!(r.policy("freqcache").unwrap().edge_false_reuse, Some(0));
}

#[test]
fn noise_sequence_stays_below_alpha_max() {
    let scene = generate_scene(&spec(SceneKind::Noise, 6, 7)).unwrap();
    let c = cfg().cache;
    let seq = run_sequence(
        &scene.frames,
        &c,
        Box::new(HistogramTokenizer::default()),
        None,
    )
    .unwrap();
    for d in &seq.decisions {
        assert!(d.sim_freq > 0.9, "noise spectra are flat: {}", d.sim_freq);
        assert!(!d.refresh_set.is_empty());
    }
    assert!(seq.mean_reuse_ratio < c.budget.alpha_max);
}

#[test]
fn identical_frames_reuse_exactly_the_budget() {
    let scene = generate_scene(&spec(SceneKind::Static, 5, 8)).unwrap();
    let mut c = cfg().cache;
    c.lambda = 1e12;
    c.budget.alpha_max = 1.0;
    let seq = run_sequence(
        &scene.frames,
        &c,
        Box::new(HistogramTokenizer::default()),
        None,
    )
    .unwrap();
    for (d, s) in seq.decisions.iter().zip(&seq.steps[1..]) {
        assert_eq!(s.reused, d.k_reuse);
    }
    assert_eq!(seq.steps[0].reused, 0);
}
