//! Rule numbers (R1..R13) refer to docs/layout.md.

use std::f64::consts::E;

use nalgebra::DMatrix;

use tangentflow::dsl;
use tangentflow::dynamics::{Flow, IntegratorConfig};
use tangentflow::kernel::{structural_map, tangent, StructuralKind, TrivialBundle};
use tangentflow::rig::{
    action, action_sample_dim, action_suite, d_e, e_from_flow, e_map, euler_field, exp_flow,
    exp_flow_closed, exp_flow_matrix, linearity_via_action, multiply, multiply_with, rig_suite,
};
use tangentflow::sampling::{default_points, max_abs_diff, uniform_points};
use tangentflow::vector_fields::matrix_of;
use tangentflow::Error;

fn cfg() -> IntegratorConfig {
    IntegratorConfig::default()
}

fn triples() -> Vec<Vec<f64>> {
    uniform_points(31, 25, 3, -1.0, 1.0)
}

/// R4, R6: Euler field coordinates follow the TA and μ layouts.
#[test]
fn euler_field_examples() {
    let obj = euler_field(TrivialBundle::curve());
    assert_eq!(obj.full().eval_f64(&[1.5]).unwrap(), vec![1.5, 1.5]);
    let b = euler_field(TrivialBundle::new(1, 1));
    assert_eq!(
        b.full().eval_f64(&[2.0, 3.0]).unwrap(),
        vec![2.0, 3.0, 0.0, 3.0]
    );
    assert_eq!(
        b.full().eval_f64(&[2.0, 0.0]).unwrap(),
        vec![2.0, 0.0, 0.0, 0.0]
    );
}

/// Linear with matrix `diag(0ₙ, 1ₘ)`, over the zero field on the base.
#[test]
fn euler_field_is_linear_over_zero() {
    for bundle in [TrivialBundle::new(1, 1), TrivialBundle::new(2, 3)] {
        let t = bundle.total().dim;
        let v = euler_field(bundle);
        let m = matrix_of(&v, &default_points(32, t), 1e-12).unwrap();
        let want = DMatrix::from_fn(t, t, |i, j| {
            if i == j && i >= bundle.base_dim {
                1.0
            } else {
                0.0
            }
        });
        assert_eq!(m, want);
        for p in default_points(33, t) {
            assert!(v.eval(&p).unwrap()[..bundle.base_dim]
                .iter()
                .all(|d| *d == 0.0));
        }
    }
}

#[test]
fn exp_flow_examples() {
    let obj = exp_flow(TrivialBundle::object(2), &cfg());
    let y = obj.eval(1.0, &[1.0, 2.0]).unwrap();
    assert!(max_abs_diff(&y, &[E, 2.0 * E]) < 1e-8);
    assert_eq!(obj.eval(0.0, &[1.0, 2.0]).unwrap(), vec![1.0, 2.0]);

    let bundle = TrivialBundle::new(1, 1);
    let f = exp_flow(bundle, &cfg());
    let closed = exp_flow_closed(bundle);
    let matrix = exp_flow_matrix(bundle);
    for p in uniform_points(33, 20, 2, -2.0, 2.0) {
        for t in [-2.0, -0.5, 1.0, 2.0] {
            let y = f.eval(t, &p).unwrap();
            assert_eq!(y[0], p[0]);
            let want = closed.eval(t, &p).unwrap();
            assert!(max_abs_diff(&y, &want) < 1e-8);
            assert!(max_abs_diff(&matrix.eval(t, &p).unwrap(), &want) < 1e-12);
        }
    }
}

#[test]
fn e_examples() {
    let e = e_map(&cfg());
    assert_eq!(e.eval_f64(&[0.0]).unwrap(), vec![1.0]);
    assert!((e.eval_f64(&[1.0]).unwrap()[0] - 2.718281828).abs() < 1e-8);
    for t in [-1.0, -0.25, 0.0, 0.5, 1.0] {
        for v in [-2.0, 0.5, 3.0] {
            let got = d_e(&e, t, v).unwrap();
            assert!((got - v * f64::exp(t)).abs() <= 1e-7, "t = {t}, v = {v}");
        }
    }
}

/// R13: multiplication reads `D²(e)` at `(0, a, b, 0)`.
#[test]
fn multiply_examples() {
    assert!((multiply(2.0, 3.0, &cfg()).unwrap() - 6.0).abs() <= 1e-7);
    for x in [-1.5, 0.3, 2.0] {
        assert!((multiply(1.0, x, &cfg()).unwrap() - x).abs() <= 1e-7);
        assert!(multiply(0.0, x, &cfg()).unwrap().abs() <= 1e-9);
    }
}

#[test]
fn rig_laws_hold_for_integrated_and_closed_e() {
    for law in rig_suite(&e_map(&cfg()), &triples(), 1e-6).unwrap() {
        assert!(law.passed(), "{law:?}");
    }
    let closed = e_from_flow(&exp_flow_closed(TrivialBundle::curve()));
    for law in rig_suite(&closed, &triples(), 1e-12).unwrap() {
        assert!(law.passed(), "{law:?}");
    }
}

#[test]
fn exp_homomorphism_spot_check() {
    let e = e_map(&cfg());
    let ev = |t: f64| e.eval_f64(&[t]).unwrap()[0];
    let product = multiply_with(&e, ev(0.5), ev(0.25)).unwrap();
    assert!((product - f64::exp(0.75)).abs() <= 1e-7);
    assert!((ev(0.75) - product).abs() <= 1e-7);
}

#[test]
fn mutated_e_breaks_the_derivative_law() {
    let spec = dsl::parse("exp(t)*x1 - t*0.001", 1, true).unwrap();
    let bad = e_from_flow(&Flow::closed_form(&spec).unwrap());
    let laws = rig_suite(&bad, &triples(), 1e-6).unwrap();
    let r2 = laws.iter().find(|l| l.law_id == "rig-de-plus").unwrap();
    assert!(!r2.passed());
    assert!(r2.check.max_residual >= 1e-4);
}

#[test]
fn action_examples() {
    let b = TrivialBundle::new(1, 1);
    let op = action(b, &cfg()).unwrap();
    assert!(max_abs_diff(&op.eval_f64(&[2.0, 1.0, 3.0]).unwrap(), &[1.0, 6.0]) <= 1e-6);
    for p in uniform_points(34, 20, 2, -2.0, 2.0) {
        let unit = op.eval_f64(&[1.0, p[0], p[1]]).unwrap();
        assert!(max_abs_diff(&unit, &p) <= 1e-7);
        let zero = op.eval_f64(&[0.0, p[0], p[1]]).unwrap();
        assert!(max_abs_diff(&zero, &[p[0], 0.0]) <= 1e-8);
    }

    let obj = action(TrivialBundle::object(2), &cfg()).unwrap();
    let y = obj.eval_f64(&[2.0, 1.0, 3.0]).unwrap();
    assert!(max_abs_diff(&y, &[2.0, 6.0]) <= 1e-6);
}

#[test]
fn action_suites_pass() {
    for bundle in [TrivialBundle::object(2), TrivialBundle::new(2, 3)] {
        let pts = uniform_points(35, 20, action_sample_dim(bundle), -1.5, 1.5);
        for law in action_suite(bundle, &pts, 1e-6, &cfg()).unwrap() {
            assert!(law.passed(), "{bundle:?}: {law:?}");
        }
    }
}

/// R5: on the object ℝ, `λ(5) = (0, 5)` (empty base, zero point, direction 5).
#[test]
fn action_derivative_at_zero_is_lambda() {
    let b = TrivialBundle::curve();
    let t_op = tangent(&action(b, &cfg()).unwrap());
    let got = t_op.eval_f64(&[0.0, 5.0, 1.0, 0.0]).unwrap();
    assert!(max_abs_diff(&got, &[0.0, 5.0]) <= 1e-7);
    let lambda = structural_map(StructuralKind::BundleLift, b).unwrap();
    assert_eq!(lambda.eval_f64(&[5.0]).unwrap(), vec![0.0, 5.0]);
}

#[test]
fn linearity_examples() {
    let b = TrivialBundle::new(1, 1);
    let pts = uniform_points(36, 10, 2, -2.0, 2.0);
    let scalars = [-1.0, 0.5, 2.0];

    let double = dsl::map("x1; 2*x2", 2).unwrap();
    let r = linearity_via_action(&double, b, b, &pts, &scalars, 1e-6, &cfg()).unwrap();
    assert!(r.is_bundle_map.passed && r.is_linear.passed);
    assert!(r.preserves_action.passed && r.preserves_exp.passed && r.agreement);

    let square = dsl::map("x1; x2^2", 2).unwrap();
    let r = linearity_via_action(&square, b, b, &pts, &scalars, 1e-6, &cfg()).unwrap();
    assert!(r.is_bundle_map.passed);
    assert!(!r.is_linear.passed && !r.preserves_action.passed && r.agreement);
    let spot =
        linearity_via_action(&square, b, b, &[vec![0.0, 1.0]], &[2.0], 1e-6, &cfg()).unwrap();
    assert!(spot.preserves_action.max_residual >= 0.5);

    assert!(matches!(
        linearity_via_action(
            &square,
            b,
            TrivialBundle::new(1, 2),
            &pts,
            &scalars,
            1e-6,
            &cfg()
        ),
        Err(Error::Shape(_))
    ));
}
