mod common;

use std::f64::consts::{E, PI};

use common::{median, rel_err, TestRng};
use fishclim::fisher_shannon::{
    estimate_entropy, estimate_fim, estimate_sep, fs_point, fs_point_for_model, QuadratureSpec,
};
use fishclim::kde::{Bandwidth, DensityModel, Samples};
use proptest::prelude::*;

fn quad() -> QuadratureSpec {
    QuadratureSpec::default()
}

fn normal_model(seed: u64, n: usize, sigma: f64) -> DensityModel {
    let x = TestRng::new(seed).normals(n).into_iter().map(|v| sigma * v).collect();
    DensityModel::with_sj_bandwidth(Samples::new(x).unwrap()).unwrap()
}

/// Same samples and bandwidth pushed through `a·x + b`.
fn mapped(model: &DensityModel, a: f64, b: f64) -> DensityModel {
    DensityModel::new(
        model.samples().affine(a, b).unwrap(),
        Bandwidth::new(a * model.bandwidth().get()).unwrap(),
    )
}

fn mixture(seed: u64, n: usize, d: f64) -> Samples {
    let mut rng = TestRng::new(seed);
    let x = (0..n)
        .map(|_| {
            let mu = if rng.uniform() < 0.5 { -0.5 * d } else { 0.5 * d };
            mu + rng.normal()
        })
        .collect();
    Samples::new(x).unwrap()
}

#[test]
fn standard_normal_entropy_sep_fim() {
    let m = normal_model(1, 5000, 1.0);
    let h = estimate_entropy(&m, &quad()).unwrap();
    assert!((h - 0.5 * (2.0 * PI * E).ln()).abs() < 0.05, "{h}");
    assert!((estimate_sep(&m, &quad()).unwrap() - 1.0).abs() < 0.1);
    assert!((estimate_fim(&m, &quad()).unwrap() - 1.0).abs() < 0.1);
    let p = fs_point_for_model(&m, &quad()).unwrap();
    assert!((p.fsc - 1.0).abs() < 0.1);
    assert_eq!(p.fsc, p.sep * p.fim);
    assert_eq!(p.n_used, 5000);
}

#[test]
fn wider_normal_sep() {
    let m = normal_model(2, 5000, 2.0);
    assert!((estimate_sep(&m, &quad()).unwrap() - 4.0).abs() < 0.4);
}

#[test]
fn translation_and_scaling_of_integrals() {
    let m = normal_model(3, 2000, 1.0);
    let q = quad();
    let h = estimate_entropy(&m, &q).unwrap();
    let fim = estimate_fim(&m, &q).unwrap();
    let shifted = mapped(&m, 1.0, 17.5);
    assert!((estimate_entropy(&shifted, &q).unwrap() - h).abs() < 1e-10);
    assert!(rel_err(estimate_fim(&shifted, &q).unwrap(), fim) < 1e-10);
    let doubled = mapped(&m, 2.0, 0.0);
    assert!((estimate_entropy(&doubled, &q).unwrap() - h - 2f64.ln()).abs() < 1e-8);
    let tripled = mapped(&m, 3.0, 0.0);
    assert!(rel_err(estimate_sep(&tripled, &q).unwrap(), 9.0 * estimate_sep(&m, &q).unwrap()) < 1e-6);
    assert!(rel_err(estimate_fim(&tripled, &q).unwrap(), fim / 9.0) < 1e-6);
}

#[test]
fn gaussian_consistency_over_seeds() {
    let fsc: Vec<f64> = (0..50)
        .map(|s| {
            let p = fs_point(Samples::new(TestRng::new(100 + s).normals(5000)).unwrap(), &quad()).unwrap();
            assert!(p.fsc >= 0.98, "seed {s}: {}", p.fsc);
            p.fsc
        })
        .collect();
    let med = median(fsc);
    assert!((0.95..=1.10).contains(&med), "median {med}");
}

#[test]
fn quadrature_converges() {
    let fine = QuadratureSpec {
        num_points: 2 * quad().num_points,
        ..quad()
    };
    for seed in 0..10 {
        let m = normal_model(500 + seed, 5000, 1.0);
        let a = fs_point_for_model(&m, &quad()).unwrap();
        let b = fs_point_for_model(&m, &fine).unwrap();
        assert!(rel_err(a.sep, b.sep) < 1e-4);
        assert!(rel_err(a.fim, b.fim) < 1e-4);
    }
}

#[test]
fn separated_mixture_approaches_four() {
    let p = fs_point(mixture(42, 20_000, 10.0), &quad()).unwrap();
    assert!((3.4..=4.4).contains(&p.fsc), "{}", p.fsc);
}

#[test]
fn mixture_complexity_grows_with_separation() {
    let mut prev = 0.0;
    for d in [0.0, 2.0, 4.0, 6.0, 10.0] {
        let fsc = fs_point(mixture(43, 20_000, d), &quad()).unwrap().fsc;
        assert!(fsc >= prev - 0.15, "d = {d}: {fsc} after {prev}");
        prev = fsc;
    }
}

fn spread_vec() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-20.0f64..20.0, 10..200).prop_filter("needs spread", |v| {
        let m = v.iter().sum::<f64>() / v.len() as f64;
        v.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / v.len() as f64 > 1e-2
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn complexity_bound_holds(x in spread_vec()) {
        let p = fs_point(Samples::new(x).unwrap(), &quad()).unwrap();
        prop_assert!(p.fsc >= 0.98, "{}", p.fsc);
        prop_assert!(p.sep > 0.0 && p.fim > 0.0);
    }

    #[test]
    fn affine_invariance_and_scaling(x in spread_vec(), a in prop::sample::select(vec![0.1, 3.0, 7.0, 100.0]), b in -100.0f64..100.0) {
        let s = Samples::new(x).unwrap();
        let p = fs_point(s.clone(), &quad()).unwrap();
        let q = fs_point(s.affine(a, b).unwrap(), &quad()).unwrap();
        prop_assert!(rel_err(q.fsc, p.fsc) <= 1e-6);
        prop_assert!(rel_err(q.sep, a * a * p.sep) <= 1e-6);
        prop_assert!(rel_err(q.fim, p.fim / (a * a)) <= 1e-6);
    }
}
