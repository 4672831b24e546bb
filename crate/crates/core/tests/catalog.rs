//! Every documented truth of the catalog, re-checked through the library.

use attrforge::builder::{build_e0, measure_attraction};
use attrforge::certifiers::{
    certify_c1, certify_ladyzhenskaya, estimate_holder, estimate_smoothing, PairData, Projector,
};
use attrforge::covering::{fit_certificate, APolicy};
use attrforge::metric::box_counting_dimension;
use attrforge::semigroup::{find_absorbing_ball, omega_limit_sample, orbit, step, uniform_box};
use attrforge::systems::smoothing_split;
use attrforge::{list_systems, make_system, FinitePointSet, MetricTag, ParamValue, Params};
use nalgebra::DMatrix;

fn qs() -> Vec<f64> {
    (1..=9).map(|i| i as f64 / 10.0).collect()
}

fn geom(hi: f64, lo: f64, n: usize) -> Vec<f64> {
    (0..n).map(|i| hi * (lo / hi).powf(i as f64 / (n - 1) as f64)).collect()
}

fn affine_contraction() {
    let sys = make_system("affine_contraction", &Params::new()).unwrap();
    let x = FinitePointSet::from_scalars(&[2.0]).unwrap();
    assert_eq!(step(&sys, &x, 1.0).unwrap(), x);
    let b = FinitePointSet::grid_1d(-3.0, 3.0, 61).unwrap();
    let cert = fit_certificate(&sys, &b, 1.0, 1, 12, &qs(), APolicy::Default).unwrap();
    assert_eq!((cert.h, cert.dim_bound()), (1.0, 0.0));
}

fn diag_linear() {
    let sys = make_system("diag_linear", &Params::new()).unwrap();
    let j = sys.analytic_jacobian(&[1.5, -0.5], 1.0).unwrap().unwrap();
    assert_eq!(j, DMatrix::from_row_slice(2, 2, &[0.9, 0.0, 0.0, 0.3]));
    let b = FinitePointSet::grid_cube(-1.0, 1.0, 9, 2).unwrap();
    let data = PairData::sample(&sys, b.clone(), 1.0, 2000, 4, true).unwrap();
    let lady = certify_ladyzhenskaya(&data, Projector::coordinate(2, &[0]).unwrap()).unwrap();
    assert!((lady.eta - 0.3).abs() <= 1e-12 && (lady.kappa - 0.9).abs() <= 1e-12);
    assert_eq!(certify_c1(&sys, &b, 1.0, 0.1).unwrap().n, 2);
}

fn henon() {
    let sys = make_system("henon", &Params::new()).unwrap();
    let o = FinitePointSet::from_rows(&[[0.0, 0.0]], MetricTag::Euclidean).unwrap();
    assert_eq!(step(&sys, &o, 1.0).unwrap().point(0), &[1.0, 0.0]);
    let probes = uniform_box(&[0.0, 0.0], 2.0, 100, 7).unwrap();
    let ball = find_absorbing_ball(&sys, &probes, 10_000, 1.0).unwrap();
    assert!(ball.radius <= 3.0 && ball.center.iter().all(|c| c.abs() < 0.5), "{ball:?}");
    let seeds = uniform_box(&[0.0, 0.0], 0.5, 10, 3).unwrap();
    let om = omega_limit_sample(&sys, &seeds, 1000, 10_000, 1.0).unwrap();
    let fit = box_counting_dimension(&om, &geom(0.1, 0.005, 8)).unwrap();
    assert!((fit.slope - 1.26).abs() <= 0.1, "slope {}", fit.slope);
}

fn logistic() {
    let sys = make_system("logistic", &Params::new()).unwrap();
    for r in [1.0, 2.5, 3.5, 3.9, 4.0] {
        let s = make_system("logistic", &Params::from([("r".into(), ParamValue::Scalar(r))])).unwrap();
        let g = FinitePointSet::grid_1d(0.0, 1.0, 101).unwrap();
        let img = step(&s, &g, 1.0).unwrap();
        assert!(img.coords().iter().all(|v| (0.0..=1.0).contains(v)), "r = {r}");
    }
    let tail = orbit(&sys, &[0.3], 1.0, 2000).unwrap();
    let last: Vec<f64> = tail.coords()[1900..].to_vec();
    for k in 0..last.len() - 4 {
        assert!((last[k] - last[k + 4]).abs() < 1e-9);
        assert!((last[k] - last[k + 2]).abs() > 1e-3);
    }
    let cycle = FinitePointSet::from_scalars(&last).unwrap();
    let fit = box_counting_dimension(&cycle, &geom(0.05, 0.001, 6)).unwrap();
    assert!(fit.slope.abs() <= 0.1, "slope {}", fit.slope);
}

fn lorenz63_time_t() {
    let sys = make_system("lorenz63_timeT", &Params::new()).unwrap();
    let seeds = uniform_box(&[0.0, 0.0, 25.0], 10.0, 20, 3).unwrap();
    let om = omega_limit_sample(&sys, &seeds, 200, 25_000, 0.1).unwrap();
    let fit = box_counting_dimension(&om, &geom(3.0, 1.0, 6)).unwrap();
    assert!((fit.slope - 2.05).abs() <= 0.15, "slope {}", fit.slope);
}

fn chafee_infante_galerkin() {
    let sys = make_system("chafee_infante_galerkin", &Params::new()).unwrap();
    let zero = FinitePointSet::from_rows(&[[0.0; 4]], MetricTag::Euclidean).unwrap();
    assert_eq!(step(&sys, &zero, 0.1).unwrap(), zero);
    let lambda = 0.5;
    let p = Params::from([("lambda".into(), ParamValue::Scalar(lambda))]);
    let sys = make_system("chafee_infante_galerkin", &p).unwrap();
    let b = uniform_box(&[0.0; 4], 0.5, 40, 2).unwrap();
    let rate = measure_attraction(&sys, &b, &zero, 0.5, 40).unwrap().xi_hat;
    assert!((rate - (1.0 - lambda)).abs() < 0.02, "rate {rate}");
}

fn smoothing_demo() {
    let sys = make_system("smoothing_demo", &Params::new()).unwrap();
    let (split, z) = smoothing_split(&Params::new()).unwrap();
    let b = FinitePointSet::grid_cube(-2.0, 2.0, 9, 2).unwrap();
    let data = PairData::sample(&sys, b, 1.0, 2000, 5, true).unwrap();
    let c = estimate_smoothing(&data, &split, z).unwrap();
    assert!((c.eta - 0.3).abs() <= 1e-12, "η {}", c.eta);
    assert!(c.kappa <= 0.5 && c.kappa > 0.4, "κ {}", c.kappa);
}

fn linear_flow() {
    let sys = make_system("linear_flow", &Params::new()).unwrap();
    let b = FinitePointSet::grid_1d(-1.0, 1.0, 21).unwrap();
    let cert = fit_certificate(&sys, &b, 1.0, 1, 10, &qs(), APolicy::Default).unwrap();
    let e0 = build_e0(&sys, &b, &cert, 10).unwrap().e0;
    assert_eq!(cert.dim_bound(), 0.0);
    let zero = FinitePointSet::from_scalars(&[0.0]).unwrap();
    assert!(measure_attraction(&sys, &b, &zero, 1.0, 10).unwrap().dists[10].1 < 1e-4);
    assert!(!e0.is_empty());
    let times: Vec<f64> = (0..=40).map(|i| 1.0 + i as f64 * 0.025).collect();
    let h = estimate_holder(&sys, &b, &times).unwrap();
    assert!((h.nu - 1.0).abs() <= 0.1, "ν {}", h.nu);
}

#[test]
fn documented_truths_hold() {
    for entry in list_systems() {
        match entry.name.as_str() {
            "affine_contraction" => affine_contraction(),
            "diag_linear" => diag_linear(),
            "henon" => henon(),
            "logistic" => logistic(),
            "lorenz63_timeT" => lorenz63_time_t(),
            "chafee_infante_galerkin" => chafee_infante_galerkin(),
            "smoothing_demo" => smoothing_demo(),
            "linear_flow" => linear_flow(),
            other => panic!("no check for catalog entry {other}"),
        }
    }
}
