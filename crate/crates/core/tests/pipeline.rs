use proptest::prelude::*;
use same_core::estimator::{adjusted_weights, within_weighted_box};
use same_core::harness::{materialize, rate_study, ExperimentConfig, RateSpec};
use same_core::manifold::NoisySample;
use same_core::{run_same, InitKind, PointCloud, SameConfig};

fn small_config(h0: f64, iterations: usize) -> SameConfig {
    SameConfig {
        h0,
        a: 1.25,
        iterations,
        tau: 2.0 * h0,
        gamma: 2.0,
        d: 1,
        min_weight_sum: 1.0,
        init: InitKind::Identity,
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn every_estimate_lies_in_its_weighted_box(
        pts in prop::collection::vec((-2.0f64..2.0, -2.0f64..2.0, -2.0f64..2.0), 8..60),
        h0 in 0.2f64..1.5,
        iterations in 0usize..3,
    ) {
        let rows: Vec<[f64; 3]> = pts.iter().map(|&(a, b, c)| [a, b, c]).collect();
        let y = PointCloud::from_rows(&rows).unwrap();
        let cfg = small_config(h0, iterations);
        let trace = run_same(&y, &cfg, None).unwrap();
        prop_assert_eq!(trace.states.len(), iterations + 1);
        for s in &trace.states {
            for i in 0..y.len() {
                let w = adjusted_weights(&y, i, &s.projectors[i], s.h, cfg.tau);
                prop_assert!(within_weighted_box(&y, &w, s.estimates.point(i), 1e-12));
                prop_assert!(s.weight_sums[i] >= 1.0);
            }
            for p in &s.projectors {
                prop_assert!(p.check().passes());
            }
        }
    }
}

#[test]
fn sample_files_round_trip() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = ExperimentConfig::s_shape(4);
    let data = materialize(&cfg).unwrap();
    let s: &NoisySample = data.sample.as_ref().unwrap();
    s.save(tmp.path(), "s", "s_shape").unwrap();
    let (y, x, side) = NoisySample::load(tmp.path(), "s").unwrap();
    assert_eq!(y, s.y);
    assert_eq!(x, s.x);
    assert_eq!(side.seed, 4);
    assert_eq!(side.model, "s_shape");
}

#[test]
fn identical_seeds_give_identical_rate_rows() {
    let mut base = ExperimentConfig::noiseless_circle(3);
    if let same_core::harness::DatasetSpec::Builtin { n, .. } = &mut base.dataset {
        *n = 200;
    }
    let spec = RateSpec::new(vec![200], 3);
    let a = rate_study(&base, &spec).unwrap();
    let b = rate_study(&base, &spec).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.slope_hausdorff, None);
}
