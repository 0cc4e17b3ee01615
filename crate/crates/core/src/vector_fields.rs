//! Vector fields on `ℝⁿ`, Lie brackets, commutation and morphisms.

use nalgebra::{DMatrix, DVector};

use crate::dsl;
use crate::error::{Error, Result};
use crate::jet::Jet;
use crate::kernel::{
    fibre_difference, interleave, structural_map, tangent, vertical_bracket, SmoothMap, Space,
    StructuralKind, TrivialBundle,
};
use crate::sampling::{max_abs_diff, Check};

/// A section of `p: TM → M`, stored by its component map `V̂`.
#[derive(Debug, Clone)]
pub struct VectorField {
    space: Space,
    vhat: SmoothMap,
}

impl VectorField {
    pub fn new(vhat: SmoothMap) -> Result<Self> {
        if vhat.dom() != vhat.cod() {
            return Err(Error::Shape(format!(
                "vector field component map must be n -> n, got {} -> {}",
                vhat.dom(),
                vhat.cod()
            )));
        }
        Ok(VectorField {
            space: vhat.domain(),
            vhat,
        })
    }

    pub fn from_dsl(text: &str, dim: usize) -> Result<Self> {
        VectorField::new(dsl::map(text, dim)?)
    }

    pub fn zero(dim: usize) -> Self {
        VectorField::new(SmoothMap::constant(dim, vec![0.0; dim])).expect("square")
    }

    /// `x ↦ x`, the Euler field of `ℝⁿ` as a differential object.
    pub fn euler(dim: usize) -> Self {
        VectorField::new(SmoothMap::identity(dim)).expect("square")
    }

    pub fn space(&self) -> Space {
        self.space
    }

    pub fn dim(&self) -> usize {
        self.space.dim
    }

    pub fn vhat(&self) -> &SmoothMap {
        &self.vhat
    }

    /// The section `V = ⟨1, V̂⟩: M → TM`.
    pub fn full(&self) -> SmoothMap {
        SmoothMap::identity(self.dim())
            .pair(&self.vhat)
            .expect("same domain")
    }

    pub fn eval(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.vhat.eval_f64(x)
    }

    /// Pointwise sum of component maps.
    pub fn add(&self, other: &VectorField) -> Result<VectorField> {
        same_space(self, other)?;
        let n = self.dim();
        let add = SmoothMap::new(2 * n, n, move |z| {
            Ok((0..n).map(|i| &z[i] + &z[n + i]).collect())
        });
        VectorField::new(self.vhat.pair(&other.vhat)?.then(&add)?)
    }

    pub fn negate(&self) -> VectorField {
        let n = self.dim();
        let neg = self
            .vhat
            .then(&SmoothMap::new(n, n, |z| {
                Ok(z.iter().map(|v| -v).collect())
            }))
            .expect("square");
        VectorField::new(neg).expect("square")
    }
}

fn same_space(a: &VectorField, b: &VectorField) -> Result<()> {
    if a.space != b.space {
        return Err(Error::Shape(format!(
            "fields live on spaces of dimension {} and {}",
            a.dim(),
            b.dim()
        )));
    }
    Ok(())
}

/// `V̂(x) = A x`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearVectorField {
    pub matrix: DMatrix<f64>,
}

impl LinearVectorField {
    pub fn new(matrix: DMatrix<f64>) -> Result<Self> {
        if !matrix.is_square() {
            return Err(Error::Shape(format!(
                "linear field needs a square matrix, got {}x{}",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        Ok(LinearVectorField { matrix })
    }

    pub fn field(&self) -> VectorField {
        VectorField::new(linear_map(&self.matrix)).expect("square")
    }
}

/// `x ↦ A x` as a jet-polymorphic map.
pub fn linear_map(a: &DMatrix<f64>) -> SmoothMap {
    let a = a.clone();
    SmoothMap::new(a.ncols(), a.nrows(), move |z| Ok(mat_vec(&a, z)))
}

pub(crate) fn mat_vec(a: &DMatrix<f64>, x: &[Jet]) -> Vec<Jet> {
    (0..a.nrows())
        .map(|i| {
            (0..a.ncols()).fold(Jet::zero(), |acc, j| {
                let c = a[(i, j)];
                if c == 0.0 {
                    acc
                } else {
                    acc + x[j].scale(c)
                }
            })
        })
        .collect()
}

/// `V₁T(V₂): M → T²M`.
fn first_then_tangent(v1: &VectorField, v2: &VectorField) -> Result<SmoothMap> {
    v1.full().then(&tangent(&v2.full()))
}

/// `V₂T(V₁)c: M → T²M`.
fn second_then_tangent_flipped(v1: &VectorField, v2: &VectorField) -> Result<SmoothMap> {
    v2.full()
        .then(&tangent(&v1.full()))?
        .then(&structural_map(StructuralKind::Flip, v1.space())?)
}

/// `[V₁, V₂] = {V₁T(V₂) − V₂T(V₁)c}`, the difference taken in the fibre of
/// `p_{TM}` and the bracket over `TM` as a bundle over `M`.
pub fn lie_bracket(v1: &VectorField, v2: &VectorField) -> Result<VectorField> {
    same_space(v1, v2)?;
    let n = v1.dim();
    let diff = fibre_difference(
        &first_then_tangent(v1, v2)?,
        &second_then_tangent_flipped(v1, v2)?,
    )?;
    let bracket = vertical_bracket(&diff, TrivialBundle::tangent_bundle(n))?;
    VectorField::new(bracket.then(&SmoothMap::block(2 * n, n, n))?)
}

/// Jacobian-formula bracket `DV̂₂·V̂₁ − DV̂₁·V̂₂`, each directional derivative
/// obtained from one tangent evaluation.
pub fn bracket_by_jacobians(v1: &VectorField, v2: &VectorField, x: &[f64]) -> Result<Vec<f64>> {
    let n = v1.dim();
    let a = v1.eval(x)?;
    let b = v2.eval(x)?;
    let d2 = directional(v2.vhat(), x, &a)?;
    let d1 = directional(v1.vhat(), x, &b)?;
    debug_assert_eq!(d1.len(), n);
    Ok(d2.iter().zip(&d1).map(|(p, q)| p - q).collect())
}

/// `Df(x)·v` by one tangent evaluation.
pub fn directional(f: &SmoothMap, x: &[f64], v: &[f64]) -> Result<Vec<f64>> {
    let mut z = x.to_vec();
    z.extend_from_slice(v);
    let out = tangent(f).eval_f64(&z)?;
    Ok(out[f.cod()..].to_vec())
}

/// Checks `V₁T(V₂)c = V₂T(V₁)` at every sample.
pub fn commutes(
    v1: &VectorField,
    v2: &VectorField,
    samples: &[Vec<f64>],
    tol: f64,
) -> Result<Check> {
    same_space(v1, v2)?;
    let lhs =
        first_then_tangent(v1, v2)?.then(&structural_map(StructuralKind::Flip, v1.space())?)?;
    let rhs = v2.full().then(&tangent(&v1.full()))?;
    Check::over(tol, samples.iter().cloned(), |x| {
        Ok(max_abs_diff(&lhs.eval_f64(x)?, &rhs.eval_f64(x)?))
    })
}

/// Checks `V₁T(f) = fV₂` for `f: M₁ → M₂`.
pub fn is_vf_morphism(
    f: &SmoothMap,
    v1: &VectorField,
    v2: &VectorField,
    samples: &[Vec<f64>],
    tol: f64,
) -> Result<Check> {
    if f.dom() != v1.dim() || f.cod() != v2.dim() {
        return Err(Error::Shape(format!(
            "map {} -> {} cannot relate fields on dimensions {} and {}",
            f.dom(),
            f.cod(),
            v1.dim(),
            v2.dim()
        )));
    }
    let lhs = v1.full().then(&tangent(f))?;
    let rhs = f.then(&v2.full())?;
    Check::over(tol, samples.iter().cloned(), |x| {
        Ok(max_abs_diff(&lhs.eval_f64(x)?, &rhs.eval_f64(x)?))
    })
}

/// The field on `TM` with full map `T(V)c`.
pub fn tangent_lift(v: &VectorField) -> VectorField {
    let n = v.dim();
    let full = tangent(&v.full())
        .then(&structural_map(StructuralKind::Flip, v.space()).expect("space"))
        .expect("shapes");
    VectorField::new(
        full.then(&SmoothMap::block(4 * n, 2 * n, 2 * n))
            .expect("shapes"),
    )
    .expect("square")
}

/// `V₁ × V₂` on `M₁ × M₂`, passing through `TM₁ × TM₂ ≅ T(M₁ × M₂)`.
pub fn product_vf(v1: &VectorField, v2: &VectorField) -> VectorField {
    let (a, b) = (v1.dim(), v2.dim());
    let full = v1
        .full()
        .product(&v2.full())
        .and_then(|m| m.then(&interleave(a, b)))
        .expect("shapes");
    VectorField::new(
        full.then(&SmoothMap::block(2 * (a + b), a + b, a + b))
            .expect("shapes"),
    )
    .expect("square")
}

/// Extracts `A` with columns `V̂(eᵢ) − V̂(0)` and verifies `V̂(x) = A x` on the
/// samples.
pub fn matrix_of(v: &VectorField, samples: &[Vec<f64>], tol: f64) -> Result<DMatrix<f64>> {
    let n = v.dim();
    let origin = v.eval(&vec![0.0; n])?;
    let mut a = DMatrix::zeros(n, n);
    for j in 0..n {
        let mut e = vec![0.0; n];
        e[j] = 1.0;
        let col = v.eval(&e)?;
        for i in 0..n {
            a[(i, j)] = col[i] - origin[i];
        }
    }
    let mut probes = vec![vec![0.0; n]];
    probes.extend(samples.iter().cloned());
    let check = Check::over(tol, probes, |x| {
        let ax = &a * DVector::from_column_slice(x);
        Ok(max_abs_diff(&v.eval(x)?, ax.as_slice()))
    })?;
    if !check.passed {
        return Err(Error::Linearity {
            max_residual: check.max_residual,
            witness: check.witness,
        });
    }
    Ok(a)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sampling::default_points;

    fn rotation() -> VectorField {
        VectorField::from_dsl("x2; -x1", 2).unwrap()
    }

    #[test]
    fn rotation_and_euler_commute() {
        let pts = default_points(1, 2);
        let c = commutes(&rotation(), &VectorField::euler(2), &pts, 1e-12).unwrap();
        assert!(c.passed, "{c:?}");
        let b = lie_bracket(&rotation(), &VectorField::euler(2)).unwrap();
        for x in &pts {
            assert!(b.eval(x).unwrap().iter().all(|v| v.abs() < 1e-12));
        }
    }

    #[test]
    fn shear_pair_bracket_is_commutator() {
        let a = LinearVectorField::new(DMatrix::from_row_slice(2, 2, &[0., 1., 0., 0.]))
            .unwrap()
            .field();
        let b = LinearVectorField::new(DMatrix::from_row_slice(2, 2, &[0., 0., 1., 0.]))
            .unwrap()
            .field();
        let br = lie_bracket(&a, &b).unwrap();
        let m = matrix_of(&br, &default_points(2, 2), 1e-12).unwrap();
        assert_eq!(m, DMatrix::from_row_slice(2, 2, &[-1., 0., 0., 1.]));
        let c = commutes(&a, &b, &[vec![1.0, 1.0]], 1e-9).unwrap();
        assert!(!c.passed && c.max_residual >= 0.5);
    }

    #[test]
    fn morphism_examples() {
        let pts = vec![vec![2.0]];
        let e = VectorField::euler(1);
        let double = dsl::map("2*x1", 1).unwrap();
        assert!(is_vf_morphism(&double, &e, &e, &pts, 1e-12).unwrap().passed);
        let sq = dsl::map("x1^2", 1).unwrap();
        let c = is_vf_morphism(&sq, &e, &e, &pts, 1e-12).unwrap();
        assert!(!c.passed);
        assert_eq!(c.max_residual, 4.0);
    }

    #[test]
    fn tangent_lift_of_euler() {
        let lift = tangent_lift(&VectorField::euler(1));
        assert_eq!(lift.eval(&[3.0, -2.0]).unwrap(), vec![3.0, -2.0]);
    }

    #[test]
    fn product_field_concatenates() {
        let p = product_vf(&VectorField::euler(1), &rotation());
        assert_eq!(p.eval(&[1.0, 0.0, 1.0]).unwrap(), vec![1.0, 1.0, 0.0]);
    }

    #[test]
    fn matrix_of_rejects_nonlinear() {
        let v = VectorField::from_dsl("x1^2", 1).unwrap();
        assert!(matches!(
            matrix_of(&v, &default_points(3, 1), 1e-9),
            Err(Error::Linearity { .. })
        ));
        let m = matrix_of(&rotation(), &default_points(3, 2), 1e-12).unwrap();
        assert_eq!(m, DMatrix::from_row_slice(2, 2, &[0., 1., -1., 0.]));
    }
}
