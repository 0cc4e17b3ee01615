use nalgebra::DMatrix;
use proptest::prelude::*;
use tangentflow::dsl;
use tangentflow::kernel::{structural_map, tangent, SmoothMap, Space, StructuralKind};
use tangentflow::sampling::{default_points, max_abs_diff};
use tangentflow::vector_fields::{
    bracket_by_jacobians, commutes, is_vf_morphism, lie_bracket, linear_map, matrix_of, product_vf,
    tangent_lift, LinearVectorField, VectorField,
};
use tangentflow::Error;

fn rotation() -> VectorField {
    VectorField::from_dsl("x2; -x1", 2).unwrap()
}

fn lin(rows: &[f64]) -> VectorField {
    let n = (rows.len() as f64).sqrt() as usize;
    LinearVectorField::new(DMatrix::from_row_slice(n, n, rows))
        .unwrap()
        .field()
}

const SHEAR_A: [f64; 4] = [0.0, 1.0, 0.0, 0.0];
const SHEAR_B: [f64; 4] = [0.0, 0.0, 1.0, 0.0];

#[test]
fn rotation_and_euler_have_zero_bracket() {
    let b = lie_bracket(&rotation(), &VectorField::euler(2)).unwrap();
    for x in default_points(1, 2) {
        assert!(b.eval(&x).unwrap().iter().all(|v| v.abs() < 1e-12));
    }
}

#[test]
fn self_bracket_vanishes() {
    let v = VectorField::from_dsl("sin(x2); x1*x2^2", 2).unwrap();
    let b = lie_bracket(&v, &v).unwrap();
    for x in default_points(2, 2) {
        assert!(b.eval(&x).unwrap().iter().all(|v| v.abs() < 1e-12));
    }
}

#[test]
fn shear_bracket_is_the_commutator() {
    let b = lie_bracket(&lin(&SHEAR_A), &lin(&SHEAR_B)).unwrap();
    let m = matrix_of(&b, &default_points(3, 2), 1e-9).unwrap();
    // BA − AB
    let want = DMatrix::from_row_slice(2, 2, &[-1.0, 0.0, 0.0, 1.0]);
    assert!((m - want).amax() < 1e-12);
}

#[test]
fn commutation_examples() {
    let pts = default_points(4, 2);
    let with_zero = commutes(&rotation(), &VectorField::zero(2), &pts, 1e-12).unwrap();
    assert!(with_zero.passed);
    assert_eq!(with_zero.max_residual, 0.0);
    assert!(
        commutes(&rotation(), &VectorField::euler(2), &pts, 1e-12)
            .unwrap()
            .passed
    );

    let shear = commutes(&lin(&SHEAR_A), &lin(&SHEAR_B), &[vec![1.0, 1.0]], 1e-9).unwrap();
    assert!(!shear.passed);
    assert!(shear.max_residual >= 0.5);
    assert_eq!(shear.witness, vec![1.0, 1.0]);
}

#[test]
fn morphism_examples() {
    let pts = default_points(5, 1);
    let e = VectorField::euler(1);
    assert!(
        is_vf_morphism(&SmoothMap::identity(1), &e, &e, &pts, 1e-12)
            .unwrap()
            .passed
    );
    let double = dsl::map("2*x1", 1).unwrap();
    assert!(is_vf_morphism(&double, &e, &e, &pts, 1e-12).unwrap().passed);
    let square = dsl::map("x1^2", 1).unwrap();
    let c = is_vf_morphism(&square, &e, &e, &[vec![2.0]], 1e-9).unwrap();
    assert!(!c.passed);
    assert_eq!(c.max_residual, 4.0);
}

#[test]
fn tangent_lift_examples() {
    let zero = tangent_lift(&VectorField::zero(2));
    for z in default_points(6, 4) {
        assert_eq!(zero.eval(&z).unwrap(), vec![0.0; 4]);
    }
    let euler = tangent_lift(&VectorField::euler(1));
    assert_eq!(euler.eval(&[3.0, -2.0]).unwrap(), vec![3.0, -2.0]);

    let rot = rotation();
    let section = tangent(&rot.full())
        .then(&structural_map(StructuralKind::Flip, Space::new(2)).unwrap())
        .unwrap()
        .then(&structural_map(StructuralKind::P, Space::new(4)).unwrap())
        .unwrap();
    for z in default_points(7, 4) {
        assert_eq!(section.eval_f64(&z).unwrap(), z);
    }
}

#[test]
fn product_examples() {
    let zz = product_vf(&VectorField::zero(1), &VectorField::zero(2));
    assert_eq!(zz.eval(&[1.0, 2.0, 3.0]).unwrap(), vec![0.0; 3]);
    let er = product_vf(&VectorField::euler(1), &rotation());
    assert_eq!(er.eval(&[1.0, 0.0, 1.0]).unwrap(), vec![1.0, 1.0, 0.0]);
}

#[test]
fn matrix_examples() {
    let pts = default_points(8, 2);
    let id = matrix_of(&VectorField::euler(2), &pts, 1e-9).unwrap();
    assert_eq!(id, DMatrix::identity(2, 2));
    let rot = matrix_of(&rotation(), &pts, 1e-9).unwrap();
    assert_eq!(rot, DMatrix::from_row_slice(2, 2, &[0.0, 1.0, -1.0, 0.0]));
    let sq = VectorField::from_dsl("x1^2", 1).unwrap();
    match matrix_of(&sq, &default_points(9, 1), 1e-9) {
        Err(Error::Linearity {
            max_residual,
            witness,
        }) => {
            assert!(max_residual > 1e-9);
            assert_eq!(witness.len(), 1);
        }
        other => panic!("{other:?}"),
    }
}

fn matrix(n: usize) -> impl Strategy<Value = DMatrix<f64>> {
    proptest::collection::vec(-1.0..1.0f64, n * n)
        .prop_map(move |v| DMatrix::from_row_slice(n, n, &v))
}

fn commute_matrices(a: &DMatrix<f64>, b: &DMatrix<f64>, tol: f64) -> bool {
    (a * b - b * a).amax() <= tol
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    /// Commutation of products splits blockwise.
    #[test]
    fn product_commutation_is_blockwise(
        a1 in matrix(2), b1 in matrix(2), a2 in matrix(1), b2 in matrix(1), c in -1.0..1.0f64
    ) {
        // Alternate between a commuting and a generic second block pair.
        let w1 = if c > 0.0 { &a1 * c + DMatrix::identity(2, 2) } else { b1 };
        let pts = default_points(10, 3);
        let lhs = commutes(
            &product_vf(&LinearVectorField::new(a1.clone()).unwrap().field(),
                        &LinearVectorField::new(a2.clone()).unwrap().field()),
            &product_vf(&LinearVectorField::new(w1.clone()).unwrap().field(),
                        &LinearVectorField::new(b2.clone()).unwrap().field()),
            &pts,
            1e-9,
        ).unwrap();
        let oracle = commute_matrices(&a1, &w1, 1e-9) && commute_matrices(&a2, &b2, 1e-9);
        prop_assert_eq!(lhs.passed, oracle);
    }

    #[test]
    fn linear_fields_are_linear(a in matrix(3), x in proptest::collection::vec(-2.0..2.0f64, 3),
                                y in proptest::collection::vec(-2.0..2.0f64, 3),
                                alpha in -2.0..2.0f64, beta in -2.0..2.0f64) {
        let v = LinearVectorField::new(a).unwrap().field();
        let mix: Vec<f64> = x.iter().zip(&y).map(|(p, q)| alpha * p + beta * q).collect();
        let lhs = v.eval(&mix).unwrap();
        let (vx, vy) = (v.eval(&x).unwrap(), v.eval(&y).unwrap());
        let rhs: Vec<f64> = vx.iter().zip(&vy).map(|(p, q)| alpha * p + beta * q).collect();
        prop_assert!(max_abs_diff(&lhs, &rhs) <= 1e-12);
    }

    /// The bracket pipeline agrees with the Jacobian formula.
    #[test]
    fn bracket_matches_jacobians(x in proptest::collection::vec(-2.0..2.0f64, 2)) {
        let v1 = VectorField::from_dsl("sin(x2); x1*x2", 2).unwrap();
        let v2 = VectorField::from_dsl("exp(x1/2) - x2^2; tanh(x1)", 2).unwrap();
        let pipeline = lie_bracket(&v1, &v2).unwrap().eval(&x).unwrap();
        prop_assert!(max_abs_diff(&pipeline, &bracket_by_jacobians(&v1, &v2, &x).unwrap()) <= 1e-12);
    }

    /// Linear maps relate conjugate linear fields, and then their brackets.
    #[test]
    fn relatedness_preserves_brackets(a1 in matrix(2), a2 in matrix(2), s in matrix(2)) {
        let s = s * 0.5 + DMatrix::identity(2, 2);
        prop_assume!(s.determinant().abs() > 0.2);
        let s_inv = s.clone().try_inverse().unwrap();
        let conj = |a: &DMatrix<f64>| LinearVectorField::new(&s * a * &s_inv).unwrap().field();
        let field = |a: &DMatrix<f64>| LinearVectorField::new(a.clone()).unwrap().field();
        let f = linear_map(&s);
        let pts = default_points(11, 2);
        prop_assert!(is_vf_morphism(&f, &field(&a1), &conj(&a1), &pts, 1e-9).unwrap().passed);
        prop_assert!(is_vf_morphism(&f, &field(&a2), &conj(&a2), &pts, 1e-9).unwrap().passed);
        let lhs = lie_bracket(&field(&a1), &field(&a2)).unwrap();
        let rhs = lie_bracket(&conj(&a1), &conj(&a2)).unwrap();
        prop_assert!(is_vf_morphism(&f, &lhs, &rhs, &pts, 1e-7).unwrap().passed);
    }
}
