use std::f64::consts::PI;

use pck_hdmr::bench::{self, CantileverInputs};
use pck_hdmr::hdmr::ComponentKey;
use pck_hdmr::metrics;
use pck_hdmr::sampling::{self, SortedAxisSamples};
use pck_hdmr::surrogate::{fit_pce, fit_kriging, PolynomialBasis, KrigingOptions};
use pck_hdmr::{build, BudgetedFunction, BuildConfig, CutCenter, DesignSpace, Distribution, RandomStream, SampleSet};

fn close(a: f64, b: f64, rel: f64) -> bool {
    (a - b).abs() <= rel * b.abs().max(1.0)
}

fn random_points(space: &DesignSpace, n: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut s = RandomStream::new(seed);
    (0..n).map(|_| space.sample_uniform(&mut s)).collect()
}

#[test]
fn insertion_examples() {
    let a = SortedAxisSamples::new(vec![0.0, 1.0], vec![0.0, 10.0]).unwrap();
    assert_eq!(sampling::proportional_insert(&a, 0.5).unwrap(), 0.5);
    let b = SortedAxisSamples::new(vec![0.0, 1.0, 2.0], vec![0.0, 5.0, 100.0]).unwrap();
    assert!((sampling::proportional_insert(&b, 0.3).unwrap() - 1.7).abs() < 1e-12);
    let c = SortedAxisSamples::new(vec![0.0, 1.0, 2.0], vec![0.0, 5.0, 10.0]).unwrap();
    let x = sampling::proportional_insert(&c, 0.5).unwrap();
    assert!(x > 0.0 && x < 1.0);
}

#[test]
fn convergence_examples() {
    assert!(sampling::converged(10.0, 10.005, 1e-3));
    assert!(sampling::converged(-3.0, -3.0, 0.0));
    assert!(!sampling::converged(0.0, 1e-6, 1e-3));
}

#[test]
fn candidate_grid_examples() {
    let g = sampling::build_candidate_grid(&[0.0, 1.0], &[0.0, 2.0]).unwrap();
    assert_eq!(g.candidates, vec![vec![0.5, 1.0]]);
    let g = sampling::build_candidate_grid(&[0.0, 1.0, 2.0], &[0.0, 1.0]).unwrap();
    assert_eq!(g.candidates, vec![vec![0.5, 0.5], vec![1.5, 0.5]]);
    let g = sampling::build_candidate_grid(&[0.0, 0.5, 1.0], &[0.0, 0.5, 1.0]).unwrap();
    let mut c = g.candidates.clone();
    c.sort_by(|a, b| a.partial_cmp(b).unwrap());
    assert_eq!(
        c,
        vec![vec![0.25, 0.25], vec![0.25, 0.75], vec![0.75, 0.25], vec![0.75, 0.75]]
    );
}

#[test]
fn entropy_prefers_distant_candidate() {
    let existing = vec![vec![0.0, 0.0]];
    let cands = vec![vec![0.1, 0.1], vec![5.0, 5.0]];
    let pick = sampling::max_entropy_select(&existing, &cands, &[1.0, 1.0], 1.0).unwrap();
    assert_eq!(pick.point, vec![5.0, 5.0]);
    // brute-force 2x2 determinants: 1 - r^2
    let r_near = (-0.02f64).exp();
    let r_far = (-50.0f64).exp();
    assert!(1.0 - r_far * r_far > 1.0 - r_near * r_near);

    let only = vec![vec![0.3, 0.3]];
    assert_eq!(sampling::max_entropy_select(&existing, &only, &[1.0, 1.0], 1.0).unwrap().index, 0);
    let dup = vec![vec![0.0, 0.0], vec![0.2, 0.0]];
    assert_eq!(sampling::max_entropy_select(&existing, &dup, &[1.0, 1.0], 1.0).unwrap().index, 1);
}

#[test]
fn bilinear_plus_linear_couples_one_pair() {
    let space = DesignSpace::uniform(3, 1.0, 2.0).unwrap();
    let center = CutCenter::new(&space, vec![1.5; 3]).unwrap();
    let f = BudgetedFunction::new(3, |x| x[0] * x[1] + x[2]);
    let m = build(&f, &space, Some(&center), &BuildConfig::default()).unwrap();
    assert_eq!(m.pairs(), vec![(0, 1)]);
    assert_eq!(m.total_evals, f.count());
}

#[test]
fn additive_quadratic_is_first_order_exact() {
    let p = 5;
    let space = DesignSpace::uniform(p, -1.0, 1.0).unwrap();
    let center = CutCenter::new(&space, vec![0.0; p]).unwrap();
    let f = BudgetedFunction::new(p, |x| x.iter().map(|v| v * v).sum());
    let m = build(&f, &space, Some(&center), &BuildConfig::default()).unwrap();
    assert!(m.pairs().is_empty());
    for x in random_points(&space, 100, 9) {
        let truth: f64 = x.iter().map(|v| v * v).sum();
        assert!((m.predict(&x).unwrap() - truth).abs() <= 1e-3 * truth.abs().max(1.0));
    }
    let x = vec![0.3, -0.7, 0.1, 0.9, -0.2];
    let truth: f64 = x.iter().map(|v| v * v).sum();
    assert!((m.predict(&x).unwrap() - truth).abs() <= 1e-3 * truth);
    assert_eq!(m.predict(center.coords()).unwrap(), m.f0);
}

#[test]
fn constant_function_has_only_zero_terms() {
    let space = DesignSpace::uniform(4, 0.0, 1.0).unwrap();
    let f = BudgetedFunction::new(4, |_| 7.0);
    let m = build(&f, &space, None, &BuildConfig::default()).unwrap();
    assert_eq!(m.f0, 7.0);
    assert!(m.first.iter().all(|t| t.kind == pck_hdmr::hdmr::TermKind::Zero));
    assert!(m.term(ComponentKey::pair(0, 1)).is_none());
    let xs = random_points(&space, 10, 1);
    assert!(m.predict_batch(&xs).unwrap().iter().all(|&v| v == 7.0));
}

#[test]
fn pce_reproduces_square_on_dense_grid() {
    let space = DesignSpace::uniform(1, -1.0, 1.0).unwrap();
    let xs = [-1.0, -0.4, 0.1, 0.6, 1.0];
    let data = SampleSet::from_parts(xs.iter().map(|&x| vec![x]).collect(), xs.iter().map(|x| x * x).collect()).unwrap();
    let m = fit_pce(&data, &space, 2).unwrap();
    for k in 0..=200 {
        let x = -1.0 + 0.01 * k as f64;
        assert!((m.predict(&[x]).unwrap() - x * x).abs() < 1e-8);
    }
    assert!((m.predict(&[0.5]).unwrap() - 0.25).abs() < 1e-8);
}

#[test]
fn kriging_loo_beats_constant_mean_on_sine() {
    let space = DesignSpace::uniform(1, 0.0, 2.0 * PI).unwrap();
    let xs: Vec<f64> = (0..7).map(|k| 2.0 * PI * k as f64 / 6.0).collect();
    let ys: Vec<f64> = xs.iter().map(|x| x.sin()).collect();
    let data = SampleSet::from_parts(xs.iter().map(|&x| vec![x]).collect(), ys.clone()).unwrap();
    let m = fit_kriging(&data, &space, &PolynomialBasis::constant(space.clone()), &KrigingOptions::default()).unwrap();
    // constant-mean predictor: leave-one-out mean of the other six
    let total: f64 = ys.iter().sum();
    let mse_const: f64 = ys
        .iter()
        .map(|y| {
            let mean = (total - y) / 6.0;
            (y - mean).powi(2)
        })
        .sum::<f64>()
        / 7.0;
    assert!(m.loo_error() < mse_const, "{} vs {}", m.loo_error(), mse_const);
}

#[test]
fn metric_hand_values() {
    let y = [1.0, 2.0, 3.0];
    let yhat = [1.0, 2.0, 4.0];
    assert!((metrics::r_squared(&y, &yhat).unwrap() - 0.5).abs() < 1e-15);
    assert!((metrics::raae(&y, &yhat).unwrap() - 1.0 / 3.0).abs() < 1e-15);
    assert!((metrics::rmae(&y, &yhat).unwrap() - 1.0).abs() < 1e-15);
    assert!((metrics::raae(&y, &[3.0, 4.0, 5.0]).unwrap() - 2.0).abs() < 1e-15);
    let outlier = [1.0, 2.0, 3.0 + 7.5];
    assert!((metrics::rmae(&y, &outlier).unwrap() - 7.5).abs() < 1e-12);
}

#[test]
fn distribution_moments() {
    let mut s = RandomStream::new(11);
    let v = Distribution::normal(5.0, 0.1).unwrap().sample(&mut s, 100_000).unwrap();
    let mean = v.iter().sum::<f64>() / v.len() as f64;
    assert!((mean - 5.0).abs() < 0.01);

    let (loc, scale) = Distribution::gumbel_location_scale(12.0, 1.2);
    assert!((scale - 1.2 * 6f64.sqrt() / PI).abs() < 1e-12);
    assert!((scale - 0.9357).abs() < 1e-4);
    assert!((loc - 11.4599).abs() < 1e-4);
    let g = Distribution::gumbel(12.0, 1.2).unwrap().sample(&mut s, 1_000_000).unwrap();
    let gm = g.iter().sum::<f64>() / g.len() as f64;
    assert!((gm - 12.0).abs() < 0.01);

    let u = Distribution::uniform(119.75, 120.25).unwrap().sample(&mut s, 10_000).unwrap();
    assert!(u.iter().all(|v| (119.75..=120.25).contains(v)));
}

fn rosenbrock_ref(x: &[f64]) -> f64 {
    let mut s = 0.0;
    for i in 0..8 {
        s += 100.0 * (x[i + 1] - x[i] * x[i]) * (x[i + 1] - x[i] * x[i]) + (x[i] - 1.0) * (x[i] - 1.0);
    }
    s
}

fn no1_ref(x: &[f64]) -> f64 {
    let (a, b) = (x[0], x[1]);
    (a + b).sin() + (a - b) * (a - b) - 1.5 * a + 2.5 * b + 1.0
}

fn no2_ref(x: &[f64]) -> f64 {
    let (a, b) = (x[0], x[1]);
    let t = b - 1.275 * (a / PI).powi(2) - 5.0 * a / PI - 6.0;
    t * t + 10.0 * (1.0 - 0.125 / PI) * a.cos()
}

fn no3_ref(x: &[f64]) -> f64 {
    let mut s = 0.0;
    for i in 0..7 {
        let a = x[i + 1] * x[i + 1] - x[i];
        s += a * a + (x[i] - 1.0) * (x[i] - 1.0);
    }
    s
}

fn no4_ref(x: &[f64]) -> f64 {
    x[0].powi(2) + x[1].powi(2) + x[0] * x[1] - 14.0 * x[0] - 16.0 * x[1]
        + (x[2] - 10.0).powi(2)
        + 4.0 * (x[3] - 5.0).powi(2)
        + (x[4] - 3.0).powi(2)
        + 2.0 * (x[5] - 1.0).powi(2)
        + 5.0 * x[6].powi(2)
        + 7.0 * (x[7] - 11.0).powi(2)
        + 2.0 * (x[8] - 10.0).powi(2)
        + (x[9] - 7.0).powi(2)
        + 45.0
}

fn no5_ref(x: &[f64]) -> f64 {
    let c = [-6.089, -17.164, -34.054, -5.914, -24.721, -14.986, -24.1, -10.708, -26.662, -22.179];
    let sum: f64 = x.iter().sum();
    (0..10).map(|i| x[i] * (c[i] + (x[i] / sum).ln())).sum()
}

fn no6_ref(x: &[f64]) -> f64 {
    let mut s = (x[0] - 1.0).powi(2);
    for i in 2..=16 {
        let a = 2.0 * x[i - 1] * x[i - 1] - x[i - 2];
        s += i as f64 * a * a;
    }
    s
}

#[test]
fn registry_matches_transcriptions() {
    let refs: [(&str, fn(&[f64]) -> f64); 7] = [
        ("rosenbrock9", rosenbrock_ref),
        ("table3/1", no1_ref),
        ("table3/2", no2_ref),
        ("table3/3", no3_ref),
        ("table3/4", no4_ref),
        ("table3/5", no5_ref),
        ("table3/6", no6_ref),
    ];
    for (k, (name, oracle)) in refs.iter().enumerate() {
        let f = bench::lookup(name).unwrap();
        for x in random_points(&f.space, 100, 40 + k as u64) {
            let got = f.evaluate(&x).unwrap();
            assert!(close(got, oracle(&x), 1e-12), "{name} at {x:?}: {got} vs {}", oracle(&x));
        }
    }
}

#[test]
fn hand_values_of_test_functions() {
    assert_eq!(bench::rosenbrock9(&[1.0; 9]).unwrap(), 0.0);
    assert_eq!(bench::rosenbrock9(&[0.0; 9]).unwrap(), 8.0);
    assert_eq!(bench::rosenbrock9(&[2.0; 9]).unwrap(), 3208.0);
    let f1 = bench::table3_function(1).unwrap();
    assert!((f1.evaluate(&[0.0, 0.0]).unwrap() - 1.0).abs() < 1e-15);
    let f4 = bench::table3_function(4).unwrap();
    assert_eq!(f4.evaluate(&[0.0; 10]).unwrap(), 1352.0);
    let f6 = bench::table3_function(6).unwrap();
    let mut x = vec![0.0; 16];
    x[0] = 1.0;
    assert_eq!(f6.evaluate(&x).unwrap(), 2.0);
    let c10 = bench::cost_function(10).unwrap();
    assert_eq!(c10.evaluate(&[1.0; 10]).unwrap(), 18.0);
    assert_eq!(c10.evaluate(&[0.0; 10]).unwrap(), 0.0);
    assert_eq!(bench::cost_function(2).unwrap().evaluate(&[1.0, 0.0]).unwrap(), 1.0);
}

#[test]
fn count_formula_values() {
    let expect = [(10, 2276), (15, 5251), (20, 9451), (25, 14876), (30, 21526), (35, 29401)];
    for (p, n) in expect {
        assert_eq!(bench::sample_count_formula(p, 8), n);
    }
    assert_eq!(bench::sample_count_formula(1, 2), 2);
}

/// Straight-line arithmetic at the mean inputs, units N and mm.
fn cantilever_oracle() -> f64 {
    let (t, d, l1, l2) = (5.0, 42.0, 120.0, 60.0);
    let (f1, f2, p, torque) = (3000.0, 3000.0, 12000.0, 90.0e6);
    let (th1, th2, sy) = (0.0f64, -PI / 5.0, 220.0);
    let di = d - 2.0 * t;
    let a = PI / 4.0 * (d * d - di * di);
    let i = PI / 64.0 * (d.powi(4) - di.powi(4));
    let j = 2.0 * i;
    let m = f1 * l1 * th1.cos() + f2 * l2 * th2.cos();
    let sx = (p + f1 * th1.sin() + f2 * th2.sin()) / a + m * d / (2.0 * i);
    let tau = torque * d / (2.0 * j);
    sy - (sx * sx + 3.0 * tau * tau).sqrt()
}

#[test]
fn cantilever_golden_value() {
    let g = bench::cantilever_g(&CantileverInputs::means()).unwrap();
    let oracle = cantilever_oracle();
    assert!((g - oracle).abs() <= 1e-9 * oracle.abs());
    assert!((g - -15942.573542992835).abs() <= 1e-9 * 15942.573542992835);

    let mut unloaded = CantileverInputs::means();
    unloaded.p = 0.0;
    unloaded.f1 = 0.0;
    unloaded.f2 = 0.0;
    unloaded.torque = 0.0;
    assert_eq!(bench::cantilever_g(&unloaded).unwrap(), unloaded.sy);
}

#[test]
fn cantilever_monotone_in_strength_and_torque() {
    let f = bench::cantilever();
    for x in random_points(&f.space, 50, 77) {
        let base = f.evaluate(&x).unwrap();
        let mut up = x.clone();
        up[10] += 1.0;
        assert!((f.evaluate(&up).unwrap() - base - 1.0).abs() < 1e-9 * base.abs().max(1.0));
        let mut more_torque = x.clone();
        more_torque[7] += 1.0;
        assert!(f.evaluate(&more_torque).unwrap() < base);
    }
}
