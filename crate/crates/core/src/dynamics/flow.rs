//! Flows, their generators, the curve object and the flow laws.

use nalgebra::DMatrix;
use serde::Serialize;

use super::expm::expm;
use super::integrator::{integrate_field, IntegratorConfig};
use crate::dsl::{self, FieldSpec};
use crate::error::{Error, Result};
use crate::jet::{self, Jet};
use crate::kernel::{tangent, SmoothMap};
use crate::report::LawResult;
use crate::sampling::{max_abs_diff, Check};
use crate::vector_fields::{commutes, mat_vec, tangent_lift, VectorField};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Provenance {
    ClosedForm,
    MatrixExponential,
    Integrator { config: IntegratorConfig },
}

/// `γ: C × M → M`, stored as a map on `(t, x)`.
#[derive(Debug, Clone)]
pub struct Flow {
    dim: usize,
    map: SmoothMap,
    provenance: Provenance,
}

impl Flow {
    pub fn new(map: SmoothMap, provenance: Provenance) -> Result<Self> {
        if map.dom() != map.cod() + 1 {
            return Err(Error::Shape(format!(
                "flow map must be (1 + n) -> n, got {} -> {}",
                map.dom(),
                map.cod()
            )));
        }
        Ok(Flow {
            dim: map.cod(),
            map,
            provenance,
        })
    }

    /// Closed-form flow from a time-dependent spec over `x1..xn` and `t`.
    pub fn closed_form(spec: &FieldSpec) -> Result<Self> {
        if !spec.time_dependent || spec.len() != spec.arity {
            return Err(Error::InvalidSystem(
                "closed-form flow needs a time-dependent spec with one component per coordinate"
                    .into(),
            ));
        }
        let n = spec.arity;
        let mut order: Vec<usize> = (1..=n).collect();
        order.push(0);
        let map = SmoothMap::select(n + 1, order).then(&dsl::compile(spec))?;
        Flow::new(map, Provenance::ClosedForm)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn map(&self) -> &SmoothMap {
        &self.map
    }

    pub fn provenance(&self) -> Provenance {
        self.provenance
    }

    pub fn eval(&self, t: f64, x: &[f64]) -> Result<Vec<f64>> {
        let mut z = vec![t];
        z.extend_from_slice(x);
        self.map.eval_f64(&z)
    }

    pub fn eval_jets(&self, t: &Jet, x: &[Jet]) -> Result<Vec<Jet>> {
        let mut z = vec![t.clone()];
        z.extend_from_slice(x);
        self.map.eval(&z)
    }

    /// `γ(t, −): M → M`.
    pub fn time_map(&self, t: f64) -> SmoothMap {
        let flow = self.clone();
        SmoothMap::new(self.dim, self.dim, move |x| {
            flow.eval_jets(&Jet::constant(t), x)
        })
    }

    /// `(t, x) ↦ γ(h(t), x)` for `h: C → C`.
    pub fn reparameterize(&self, h: &SmoothMap) -> Result<Flow> {
        let n = self.dim;
        let clock = SmoothMap::block(n + 1, 0, 1).then(h)?;
        let map = clock
            .pair(&SmoothMap::block(n + 1, 1, n))?
            .then(&self.map)?;
        Flow::new(map, self.provenance)
    }

    /// `(0 × 1)T(γ)` as a flow on `TM`: `(t, x, v) ↦ (γ(t,x), D_xγ(t,x)·v)`.
    pub fn tangent_flow(&self) -> Flow {
        let n = self.dim;
        let tg = tangent(&self.map);
        let map = SmoothMap::new(1 + 2 * n, 2 * n, move |z| {
            let mut w = Vec::with_capacity(2 * (n + 1));
            w.extend_from_slice(&z[..=n]);
            w.push(Jet::zero());
            w.extend_from_slice(&z[n + 1..]);
            tg.eval(&w)
        });
        Flow {
            dim: 2 * n,
            map,
            provenance: self.provenance,
        }
    }
}

/// The solution of `(M, V, 1_M)`, integrated numerically.
pub fn flow_of(v: &VectorField, cfg: &IntegratorConfig) -> Flow {
    let vhat = v.vhat().clone();
    let cfg_c = *cfg;
    let n = v.dim();
    let map = SmoothMap::new(n + 1, n, move |z| {
        integrate_field(&vhat, &z[0], &z[1..], &cfg_c)
    });
    Flow {
        dim: n,
        map,
        provenance: Provenance::Integrator { config: *cfg },
    }
}

/// `(t, x) ↦ expm(tA)·x`, exact in jets of `t`: with `t = t₀ + ν`,
/// `expm(tA) = expm(t₀A)·Σ_{j ≤ k} νʲAʲ/j!` because `ν^{k+1} = 0`.
pub fn linear_flow(a: &DMatrix<f64>) -> Result<Flow> {
    if !a.is_square() {
        return Err(Error::Shape(format!(
            "linear flow needs a square matrix, got {}x{}",
            a.nrows(),
            a.ncols()
        )));
    }
    let a = a.clone();
    let n = a.nrows();
    let map = SmoothMap::new(n + 1, n, move |z| {
        let t = &z[0];
        let t0 = t.primal();
        let mut nil = t.clone();
        nil = &nil - &Jet::constant(t0);
        let mut term = z[1..].to_vec();
        let mut acc = term.clone();
        for j in 1..=t.level() {
            term = mat_vec(&a, &term)
                .into_iter()
                .map(|v| (&v * &nil).scale(1.0 / j as f64))
                .collect();
            acc = acc.iter().zip(&term).map(|(p, q)| p + q).collect();
        }
        let m = expm(&(&a * t0))?;
        Ok(mat_vec(&m, &acc))
    });
    Flow::new(map, Provenance::MatrixExponential)
}

/// `ι(γ)`: the time derivative of the flow at 0, by one jet evaluation.
pub fn generator(flow: &Flow) -> VectorField {
    let f = flow.clone();
    let n = flow.dim;
    let vhat = SmoothMap::new(n, n, move |x| {
        let level = jet::max_level(x);
        let t = Jet::seed(&Jet::zero(), &Jet::constant(1.0), level);
        let y = f.eval_jets(&t, x)?;
        Ok(y.iter()
            .map(|v| v.truncate(level + 1).split_at(level + 1).1)
            .collect())
    });
    VectorField::new(vhat).expect("square")
}

/// The curve object `(C, c₁, c₀)` with `C = ℝ`.
pub struct CurveObject;

impl CurveObject {
    pub const C0: f64 = 0.0;

    /// `c₁`: the constant unit field on `C`.
    pub fn c1() -> VectorField {
        VectorField::new(SmoothMap::constant(1, vec![1.0])).expect("square")
    }

    /// `c₁` commutes with itself.
    pub fn check_self_commutes(samples: &[Vec<f64>]) -> Result<Check> {
        commutes(&Self::c1(), &Self::c1(), samples, 0.0)
    }
}

/// `σ`, the flow of `c₁`; numerically `(t, s) ↦ t + s`.
pub fn sigma_flow(cfg: &IntegratorConfig) -> Flow {
    flow_of(&CurveObject::c1(), cfg)
}

/// `η = ⟨1, !c₀⟩γ⁻` with `γ⁻` the flow of `−c₁`; numerically `t ↦ −t`.
pub fn eta(cfg: &IntegratorConfig) -> SmoothMap {
    let rev = flow_of(&CurveObject::c1().negate(), cfg);
    SmoothMap::new(1, 1, move |t| {
        rev.eval_jets(&t[0], &[Jet::constant(CurveObject::C0)])
    })
}

/// `(η × 1)γ`, the flow of the negated field.
pub fn reverse(flow: &Flow, cfg: &IntegratorConfig) -> Result<Flow> {
    flow.reparameterize(&eta(cfg))
}

/// `(M, V, g)`: a first-order system with initial-state map `g: X → M`.
#[derive(Debug, Clone)]
pub struct DynamicalSystem {
    pub field: VectorField,
    pub init: SmoothMap,
}

impl DynamicalSystem {
    pub fn new(field: VectorField, init: SmoothMap) -> Result<Self> {
        if init.cod() != field.dim() {
            return Err(Error::Shape(format!(
                "initial map lands in dimension {}, field lives in {}",
                init.cod(),
                field.dim()
            )));
        }
        Ok(DynamicalSystem { field, init })
    }

    /// `(M, V, 1_M)`.
    pub fn autonomous(field: VectorField) -> Self {
        let n = field.dim();
        DynamicalSystem {
            field,
            init: SmoothMap::identity(n),
        }
    }

    /// The solution `C × X → M`, `(t, x) ↦ γ(t, g(x))`.
    pub fn solution(&self, cfg: &IntegratorConfig) -> SmoothMap {
        let vhat = self.field.vhat().clone();
        let g = self.init.clone();
        let cfg = *cfg;
        SmoothMap::new(1 + g.dom(), self.field.dim(), move |z| {
            let y0 = g.eval(&z[1..])?;
            integrate_field(&vhat, &z[0], &y0, &cfg)
        })
    }
}

pub fn integrate(
    sys: &DynamicalSystem,
    t: f64,
    x0: &[f64],
    cfg: &IntegratorConfig,
) -> Result<Vec<f64>> {
    let mut z = vec![t];
    z.extend_from_slice(x0);
    sys.solution(cfg).eval_f64(&z)
}

fn grid_points(samples: &[Vec<f64>], times: &[f64], pairs: bool) -> Vec<Vec<f64>> {
    let mut out = Vec::new();
    for x in samples {
        for &t in times {
            if pairs {
                for &s in times {
                    let mut p = vec![t, s];
                    p.extend_from_slice(x);
                    out.push(p);
                }
            } else {
                let mut p = vec![t];
                p.extend_from_slice(x);
                out.push(p);
            }
        }
    }
    out
}

fn unit_law(flow: &Flow, samples: &[Vec<f64>], tol: f64) -> Result<Check> {
    Check::over(tol, samples.iter().cloned(), |x| {
        Ok(max_abs_diff(&flow.eval(0.0, x)?, x))
    })
}

fn action_law(flow: &Flow, samples: &[Vec<f64>], times: &[f64], tol: f64) -> Result<Check> {
    Check::over(tol, grid_points(samples, times, true), |p| {
        let (t, s, x) = (p[0], p[1], &p[2..]);
        let lhs = flow.eval(t, &flow.eval(s, x)?)?;
        let rhs = flow.eval(t + s, x)?;
        Ok(max_abs_diff(&lhs, &rhs))
    })
}

/// Directional derivative of `γ(t, −)` at `x` along `v`.
fn spatial_derivative(flow: &Flow, t: f64, x: &[f64], v: &[f64]) -> Result<Vec<f64>> {
    let n = flow.dim;
    let mut z = vec![t];
    z.extend_from_slice(x);
    z.push(0.0);
    z.extend_from_slice(v);
    Ok(tangent(&flow.map).eval_f64(&z)?[n..].to_vec())
}

/// Checks L1–L4 on `samples × times`. Laws routed through the tangent flow
/// use the first `times.len().min(5)` grid times to bound cost.
pub fn flow_laws(
    flow: &Flow,
    samples: &[Vec<f64>],
    times: &[f64],
    tol: f64,
) -> Result<Vec<LawResult>> {
    let n = flow.dim;
    let v = generator(flow);
    let mut out = vec![
        LawResult::new("flow-unit", unit_law(flow, samples, tol)?),
        LawResult::new("flow-action", action_law(flow, samples, times, tol)?),
    ];
    let invariance = Check::over(tol, grid_points(samples, times, false), |p| {
        let (t, x) = (p[0], &p[1..]);
        let lhs = spatial_derivative(flow, t, x, &v.eval(x)?)?;
        let rhs = v.eval(&flow.eval(t, x)?)?;
        Ok(max_abs_diff(&lhs, &rhs))
    })?;
    out.push(LawResult::new("flow-own-invariance", invariance));

    let tflow = flow.tangent_flow();
    let lifted = tangent_lift(&v);
    let tangent_samples: Vec<Vec<f64>> = samples
        .iter()
        .enumerate()
        .map(|(i, x)| {
            let mut p = x.clone();
            p.extend(samples[(i + 1) % samples.len()].iter().take(n));
            p
        })
        .collect();
    let short: Vec<f64> = sub_grid(times);
    let variation = unit_law(&tflow, &tangent_samples, tol)?
        .and(&action_law(&tflow, &tangent_samples, &short, tol)?)
        .and(&Check::over(tol, tangent_samples.iter().cloned(), |xv| {
            Ok(max_abs_diff(
                &generator(&tflow).eval(xv)?,
                &lifted.eval(xv)?,
            ))
        })?);
    out.push(LawResult::new("flow-equation-of-variation", variation));
    Ok(out)
}

fn sub_grid(times: &[f64]) -> Vec<f64> {
    if times.len() <= 5 {
        return times.to_vec();
    }
    let step = times.len() as f64 / 5.0;
    (0..5).map(|i| times[(i as f64 * step) as usize]).collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct CommutingReport {
    pub flows_commute: Check,
    pub fields_commute: Check,
    pub v1_invariant_under_flow2: Check,
    pub v2_invariant_under_flow1: Check,
    /// All four predicates agree.
    pub equivalence_holds: bool,
}

impl CommutingReport {
    pub fn all_pass(&self) -> bool {
        self.flows_commute.passed
            && self.fields_commute.passed
            && self.v1_invariant_under_flow2.passed
            && self.v2_invariant_under_flow1.passed
    }
}

/// Invariance of `V` under `γ`: `D_xγ(t, x)·V̂(x) = V̂(γ(t, x))`.
pub fn invariance_check(
    v: &VectorField,
    flow: &Flow,
    samples: &[Vec<f64>],
    times: &[f64],
    tol: f64,
) -> Result<Check> {
    Check::over(tol, grid_points(samples, times, false), |p| {
        let (t, x) = (p[0], &p[1..]);
        let lhs = spatial_derivative(flow, t, x, &v.eval(x)?)?;
        let rhs = v.eval(&flow.eval(t, x)?)?;
        Ok(max_abs_diff(&lhs, &rhs))
    })
}

pub fn commuting_flows_check(
    v1: &VectorField,
    v2: &VectorField,
    samples: &[Vec<f64>],
    times: &[f64],
    tol: f64,
    cfg: &IntegratorConfig,
) -> Result<CommutingReport> {
    let g1 = flow_of(v1, cfg);
    let g2 = flow_of(v2, cfg);
    commuting_flows_check_with(v1, v2, &g1, &g2, samples, times, tol)
}

/// As [`commuting_flows_check`] with caller-supplied flows for both fields.
pub fn commuting_flows_check_with(
    v1: &VectorField,
    v2: &VectorField,
    g1: &Flow,
    g2: &Flow,
    samples: &[Vec<f64>],
    times: &[f64],
    tol: f64,
) -> Result<CommutingReport> {
    let flows_commute = Check::over(tol, grid_points(samples, times, true), |p| {
        let (t, s, x) = (p[0], p[1], &p[2..]);
        let a = g1.eval(t, &g2.eval(s, x)?)?;
        let b = g2.eval(s, &g1.eval(t, x)?)?;
        Ok(max_abs_diff(&a, &b))
    })?;
    let fields_commute = commutes(v1, v2, samples, tol)?;
    let v1_inv = invariance_check(v1, g2, samples, times, tol)?;
    let v2_inv = invariance_check(v2, g1, samples, times, tol)?;
    let flags = [
        flows_commute.passed,
        fields_commute.passed,
        v1_inv.passed,
        v2_inv.passed,
    ];
    Ok(CommutingReport {
        equivalence_holds: flags.iter().all(|f| *f == flags[0]),
        flows_commute,
        fields_commute,
        v1_invariant_under_flow2: v1_inv,
        v2_invariant_under_flow1: v2_inv,
    })
}

/// Flow of `V₁ + V₂` for commuting fields: `(t, x) ↦ γ₂(t, γ₁(t, x))`.
pub fn sum_flow(
    v1: &VectorField,
    v2: &VectorField,
    cfg: &IntegratorConfig,
    samples: &[Vec<f64>],
    tol: f64,
) -> Result<Flow> {
    let g1 = flow_of(v1, cfg);
    let g2 = flow_of(v2, cfg);
    sum_of_flows(v1, v2, &g1, &g2, samples, tol)
}

pub fn sum_of_flows(
    v1: &VectorField,
    v2: &VectorField,
    g1: &Flow,
    g2: &Flow,
    samples: &[Vec<f64>],
    tol: f64,
) -> Result<Flow> {
    let report = commuting_flows_check_with(v1, v2, g1, g2, samples, &[-1.0, 0.5, 1.0], tol)?;
    if !report.all_pass() {
        let worst = [
            &report.flows_commute,
            &report.fields_commute,
            &report.v1_invariant_under_flow2,
            &report.v2_invariant_under_flow1,
        ]
        .iter()
        .map(|c| c.max_residual)
        .fold(0.0, f64::max);
        return Err(Error::NonCommutingFields {
            max_residual: worst,
        });
    }
    let (g1, g2) = (g1.clone(), g2.clone());
    let n = g1.dim;
    let provenance = g1.provenance;
    let map = SmoothMap::new(n + 1, n, move |z| {
        let mid = g1.eval_jets(&z[0], &z[1..])?;
        g2.eval_jets(&z[0], &mid)
    });
    Flow::new(map, provenance)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sampling::default_points;
    use crate::vector_fields::matrix_of;

    #[test]
    fn zero_field_flow_is_identity() {
        let f = flow_of(&VectorField::zero(2), &IntegratorConfig::default());
        assert_eq!(f.eval(1.7, &[0.3, -0.2]).unwrap(), vec![0.3, -0.2]);
    }

    #[test]
    fn rotation_matrix_flow() {
        let a = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, -1.0, 0.0]);
        let y = linear_flow(&a)
            .unwrap()
            .eval(std::f64::consts::FRAC_PI_2, &[1.0, 0.0])
            .unwrap();
        assert!(max_abs_diff(&y, &[0.0, -1.0]) < 1e-12);
    }

    #[test]
    fn generator_of_linear_flow_is_its_matrix() {
        let a = DMatrix::from_row_slice(2, 2, &[0.3, -1.2, 0.7, 0.1]);
        let v = generator(&linear_flow(&a).unwrap());
        let m = matrix_of(&v, &default_points(4, 2), 1e-9).unwrap();
        assert!((m - a).amax() < 1e-12);
    }

    #[test]
    fn sigma_is_addition_and_eta_negates() {
        let cfg = IntegratorConfig::default();
        let sigma = sigma_flow(&cfg);
        assert!((sigma.eval(1.5, &[-0.25]).unwrap()[0] - 1.25).abs() < 1e-12);
        assert_eq!(sigma.eval(0.0, &[0.75]).unwrap()[0], 0.75);
        assert!((eta(&cfg).eval_f64(&[1.5]).unwrap()[0] + 1.5).abs() < 1e-9);
    }

    #[test]
    fn corrupted_flow_breaks_action_law() {
        let bad = Flow::closed_form(&dsl::parse("x1 + t*x1", 1, true).unwrap()).unwrap();
        let laws = flow_laws(&bad, &[vec![1.0]], &[1.0], 1e-9).unwrap();
        let action = laws.iter().find(|l| l.law_id == "flow-action").unwrap();
        assert!(!action.check.passed);
        assert!(action.check.max_residual >= 0.1);
    }

    #[test]
    fn non_commuting_sum_is_rejected() {
        let a = crate::vector_fields::LinearVectorField::new(DMatrix::from_row_slice(
            2,
            2,
            &[0.0, 1.0, 0.0, 0.0],
        ))
        .unwrap()
        .field();
        let b = crate::vector_fields::LinearVectorField::new(DMatrix::from_row_slice(
            2,
            2,
            &[0.0, 0.0, 1.0, 0.0],
        ))
        .unwrap()
        .field();
        let err = sum_flow(
            &a,
            &b,
            &IntegratorConfig::default(),
            &default_points(5, 2)[..5],
            1e-6,
        )
        .unwrap_err();
        assert!(matches!(err, Error::NonCommutingFields { .. }));
    }
}
