use iim_core::optimizer::{nelder_mead, try_nelder_mead, NmOptions, NmResult};
use iim_core::Error;
use proptest::prelude::*;

fn boxed(dim: usize, lo: f64, hi: f64, iters: usize) -> NmOptions<f64> {
    NmOptions { max_iterations: iters, initial_step: 0.1, ..NmOptions::with_box(dim, lo, hi) }
}

fn quadratic(x: &[f64]) -> f64 {
    x.iter().enumerate().map(|(k, v)| (k as f64 + 1.0) * (v - 0.3 * k as f64).powi(2)).sum()
}

#[test]
fn quadratic_minimum() {
    let r = nelder_mead(quadratic, &[2.0, -1.0, 1.5, 0.0], &boxed(4, -5.0, 5.0, 5000)).unwrap();
    for (k, v) in r.best_point.iter().enumerate() {
        assert!((v - 0.3 * k as f64).abs() <= 1e-6, "{:?}", r.best_point);
    }
    assert!(r.converged);
}

#[test]
fn rosenbrock_minimum() {
    let f = |x: &[f64]| 100.0 * (x[1] - x[0] * x[0]).powi(2) + (1.0 - x[0]).powi(2);
    let r = nelder_mead(f, &[-1.2, 1.0], &boxed(2, -5.0, 5.0, 5000)).unwrap();
    assert!((r.best_point[0] - 1.0).abs() <= 1e-4 && (r.best_point[1] - 1.0).abs() <= 1e-4);
}

#[test]
fn minimum_on_the_boundary() {
    let f = |x: &[f64]| (x[0] - 3.0).powi(2) + (x[1] + 2.0).powi(2);
    let r = nelder_mead(f, &[0.5, 0.5], &boxed(2, 0.0, 1.0, 1000)).unwrap();
    assert!((r.best_point[0] - 1.0).abs() <= 1e-6 && r.best_point[1].abs() <= 1e-6, "{:?}", r.best_point);
}

#[test]
fn coordinate_permutation_permutes_the_result() {
    // a separable objective with distinct curvatures explores both orderings identically
    let f = |x: &[f64]| 2.0 * (x[0] - 0.4).powi(2) + 5.0 * (x[1] + 0.7).powi(2);
    let g = |x: &[f64]| f(&[x[1], x[0]]);
    let a = nelder_mead(f, &[1.0, 1.0], &boxed(2, -3.0, 3.0, 3000)).unwrap();
    let b = nelder_mead(g, &[1.0, 1.0], &boxed(2, -3.0, 3.0, 3000)).unwrap();
    assert!((a.best_point[0] - b.best_point[1]).abs() <= 1e-6);
    assert!((a.best_point[1] - b.best_point[0]).abs() <= 1e-6);
}

#[test]
fn reruns_are_bit_identical() {
    let f = |x: &[f64]| (x[0] * 3.1).sin() + x[1] * x[1] + 0.1 * x[0] * x[1];
    let opts = boxed(2, -2.0, 2.0, 200);
    let a: NmResult<f64> = nelder_mead(f, &[0.3, 1.1], &opts).unwrap();
    let b = nelder_mead(f, &[0.3, 1.1], &opts).unwrap();
    assert_eq!(a, b);
}

#[test]
fn errors_abort_and_nan_is_worst() {
    let mut calls = 0;
    let r = try_nelder_mead(
        |_: &[f64]| {
            calls += 1;
            if calls > 5 { Err(Error::InvalidInput("boom".into())) } else { Ok(1.0) }
        },
        &[0.0, 0.0],
        &boxed(2, -1.0, 1.0, 100),
    );
    assert!(r.is_err());
    let r = nelder_mead(|x: &[f64]| if x[0] > 0.0 { f64::NAN } else { x[0] * x[0] + x[1] * x[1] }, &[-0.5, 0.5], &boxed(2, -1.0, 1.0, 500)).unwrap();
    assert!(r.best_value.is_finite());
}

#[test]
fn invalid_inputs_rejected() {
    assert!(nelder_mead(quadratic, &[], &boxed(0, 0.0, 1.0, 10)).is_err());
    assert!(nelder_mead(quadratic, &[2.0], &boxed(1, 0.0, 1.0, 10)).is_err());
}

#[test]
fn trace_csv_has_one_row_per_iteration() {
    let r = nelder_mead(quadratic, &[1.0, 1.0], &boxed(2, -5.0, 5.0, 17)).unwrap();
    let mut buf = Vec::new();
    r.write_trace_csv(&mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    assert_eq!(text.lines().count(), 1 + r.iterations);
    assert_eq!(r.trace.len(), r.iterations);
    assert!(text.starts_with("iteration,step,best_value,diameter,x0,x1\n"));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn trace_is_monotone_and_inside_the_box(
        c in prop::collection::vec(-3.0f64..3.0, 3),
        x0 in prop::collection::vec(-1.0f64..1.0, 3),
        iters in 1usize..120,
    ) {
        let f = |x: &[f64]| x.iter().zip(&c).map(|(a, b)| (a - b).powi(2) + 0.3 * (a * b).sin()).sum::<f64>();
        let r = nelder_mead(f, &x0, &boxed(3, -1.0, 1.0, iters)).unwrap();
        prop_assert!(r.iterations <= iters);
        prop_assert!(r.best_value <= r.initial_value);
        prop_assert!(r.trace.windows(2).all(|w| w[1].best_value <= w[0].best_value));
        for t in &r.trace {
            prop_assert!(t.best_point.iter().all(|v| (-1.0..=1.0).contains(v)));
        }
        prop_assert_eq!(r.best_value, f(&r.best_point));
    }
}
