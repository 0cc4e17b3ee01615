//! Euler fields, exponential flows, the differential exponential rig of the
//! curve object and the `C`-action on trivial bundles.

use nalgebra::DMatrix;
use serde::Serialize;

use crate::dsl;
use crate::dynamics::{flow_of, linear_flow, Flow, IntegratorConfig};
use crate::error::{Error, Result};
use crate::kernel::{
    interleave, structural_map, tangent, tangent_power, vertical_bracket, SmoothMap,
    StructuralKind, TrivialBundle,
};
use crate::report::LawResult;
use crate::sampling::{max_abs_diff, Check};
use crate::vector_fields::VectorField;

/// `⟨1, 1⟩μ`: `(x, a) ↦ ((x, a), (0, a))`.
pub fn euler_field(b: TrivialBundle) -> VectorField {
    let t = b.total().dim;
    let full = SmoothMap::identity(t)
        .pair(&SmoothMap::block(t, b.base_dim, b.fibre_dim))
        .and_then(|m| m.then(&structural_map(StructuralKind::BundleMu, b)?))
        .expect("shapes");
    VectorField::new(full.then(&SmoothMap::block(2 * t, t, t)).expect("shapes")).expect("square")
}

/// Flow of the Euler field, integrated numerically.
pub fn exp_flow(b: TrivialBundle, cfg: &IntegratorConfig) -> Flow {
    flow_of(&euler_field(b), cfg)
}

/// `(t, x, a) ↦ (x, eᵗa)` in closed form.
pub fn exp_flow_closed(b: TrivialBundle) -> Flow {
    let n = b.base_dim;
    let mut comps: Vec<String> = (1..=n).map(|i| format!("x{i}")).collect();
    comps.extend((n + 1..=n + b.fibre_dim).map(|i| format!("exp(t) * x{i}")));
    let spec = dsl::parse(&comps.join("; "), n + b.fibre_dim, true).expect("generated spec");
    Flow::closed_form(&spec).expect("closed form")
}

/// The Euler field is linear with matrix `diag(0ₙ, 1ₘ)`.
pub fn exp_flow_matrix(b: TrivialBundle) -> Flow {
    let t = b.total().dim;
    let diag = DMatrix::from_fn(
        t,
        t,
        |i, j| if i == j && i >= b.base_dim { 1.0 } else { 0.0 },
    );
    linear_flow(&diag).expect("square")
}

/// `e(t) = exp_C(t, u)` with `u = 1`, through the integrator.
pub fn e_map(cfg: &IntegratorConfig) -> SmoothMap {
    e_from_flow(&exp_flow(TrivialBundle::curve(), cfg))
}

pub fn e_from_flow(flow: &Flow) -> SmoothMap {
    let f = flow.clone();
    SmoothMap::new(1, 1, move |t| {
        f.eval_jets(&t[0], &[crate::jet::Jet::constant(1.0)])
    })
}

/// `D(e)(t, v) = T(e)(t, v) p̂`.
pub fn d_e(e: &SmoothMap, t: f64, v: f64) -> Result<f64> {
    Ok(tangent(e).eval_f64(&[t, v])?[1])
}

/// `D²(e)` at point `(0, a)`, direction `(b, 0)`.
pub fn multiply_with(e: &SmoothMap, a: f64, b: f64) -> Result<f64> {
    Ok(tangent_power(e, 2).eval_f64(&[0.0, a, b, 0.0])?[3])
}

pub fn multiply(a: f64, b: f64, cfg: &IntegratorConfig) -> Result<f64> {
    multiply_with(&e_map(cfg), a, b)
}

/// Rig laws for a candidate `e`, on sample triples `(a, b, c)`.
pub fn rig_suite(e: &SmoothMap, samples: &[Vec<f64>], tol: f64) -> Result<Vec<LawResult>> {
    let ev = |t: f64| -> Result<f64> { Ok(e.eval_f64(&[t])?[0]) };
    let mul = |a: f64, b: f64| multiply_with(e, a, b);
    let pts = samples.iter().cloned();
    let r1 = Check::over(tol, pts.clone(), |p| Ok((d_e(e, 0.0, p[0])? - p[0]).abs()))?;
    let r2 = Check::over(tol, pts.clone(), |p| {
        Ok((d_e(e, p[0], ev(p[1])?)? - ev(p[0] + p[1])?).abs())
    })?;
    let r3 = Check::over(tol, pts.clone(), |p| {
        Ok((ev(p[0] + p[1])? - mul(ev(p[0])?, ev(p[1])?)?).abs())
    })?;
    let comm = Check::over(tol, pts.clone(), |p| {
        Ok((mul(p[0], p[1])? - mul(p[1], p[0])?).abs())
    })?;
    let assoc = Check::over(tol, pts.clone(), |p| {
        Ok((mul(mul(p[0], p[1])?, p[2])? - mul(p[0], mul(p[1], p[2])?)?).abs())
    })?;
    let bilinear = Check::over(tol, pts.clone(), |p| {
        let (a, b, c) = (p[0], p[1], p[2]);
        let left = mul(a + b, c)? - mul(a, c)? - mul(b, c)?;
        let right = mul(a, b + c)? - mul(a, b)? - mul(a, c)?;
        let homog = mul(c * a, b)? - c * mul(a, b)?;
        Ok(left.abs().max(right.abs()).max(homog.abs()))
    })?;
    let u = ev(0.0)?;
    let unit = Check::over(tol, pts, |p| Ok((mul(u, p[0])? - p[0]).abs()))?.and(&Check {
        passed: (u - 1.0).abs() <= tol,
        max_residual: (u - 1.0).abs(),
        witness: vec![0.0],
    });
    Ok(vec![
        LawResult::new("rig-de-identity", r1),
        LawResult::new("rig-de-plus", r2),
        LawResult::new("rig-exp-homomorphism", r3),
        LawResult::new("rig-mult-commutative", comm),
        LawResult::new("rig-mult-associative", assoc),
        LawResult::new("rig-mult-bilinear", bilinear),
        LawResult::new("rig-unit", unit),
    ])
}

/// `⊙ = {(λ × 0)T(exp_A)}` on `C × A`, from the given exponential flow.
pub fn action_from_exp(b: TrivialBundle, exp: &Flow) -> Result<SmoothMap> {
    let t = b.total().dim;
    if exp.dim() != t {
        return Err(Error::Shape(format!(
            "exponential flow has dimension {}, bundle total space {t}",
            exp.dim()
        )));
    }
    let lambda_c = structural_map(StructuralKind::BundleLift, TrivialBundle::curve())?;
    let zero_a = structural_map(StructuralKind::Zero, b)?;
    let lifted = lambda_c
        .product(&zero_a)?
        .then(&interleave(1, t))?
        .then(&tangent(exp.map()))?;
    vertical_bracket(&lifted, b)
}

pub fn action(b: TrivialBundle, cfg: &IntegratorConfig) -> Result<SmoothMap> {
    action_from_exp(b, &exp_flow(b, cfg))
}

fn act(op: &SmoothMap, s: f64, p: &[f64]) -> Result<Vec<f64>> {
    let mut z = vec![s];
    z.extend_from_slice(p);
    op.eval_f64(&z)
}

/// `⟨μ, π₁0⟩: A₂ → T(A₂)` as a component map on `A₂ = (x, a₁, a₂)`.
fn pair_field(b: TrivialBundle) -> Result<VectorField> {
    let (n, m) = (b.base_dim, b.fibre_dim);
    let t = n + m;
    let a2 = n + 2 * m;
    let mu = structural_map(StructuralKind::BundleMu, b)?;
    let mut pi1: Vec<usize> = (0..n).collect();
    pi1.extend(t..a2);
    let pi1_zero = SmoothMap::select(a2, pi1).then(&structural_map(StructuralKind::Zero, b)?)?;
    let both = mu.pair(&pi1_zero)?;
    // (x, a₁, 0, a₂ | x, a₂, 0, 0) ↦ direction (0, a₂, 0) of T(A₂).
    let mut dir: Vec<usize> = (t..t + n).collect();
    dir.extend(t + n..2 * t);
    dir.extend(3 * t + n..4 * t);
    VectorField::new(both.then(&SmoothMap::select(4 * t, dir))?)
}

/// Samples for [`action_suite`]: `(s, r, x, a, a')`.
pub fn action_sample_dim(b: TrivialBundle) -> usize {
    2 + b.total().dim + b.fibre_dim
}

pub fn action_suite(
    b: TrivialBundle,
    samples: &[Vec<f64>],
    tol: f64,
    cfg: &IntegratorConfig,
) -> Result<Vec<LawResult>> {
    let op = action(b, cfg)?;
    let e = e_map(cfg);
    let (n, m) = (b.base_dim, b.fibre_dim);
    let t = n + m;
    let pts = samples.iter().cloned();
    let split = |z: &[f64]| -> (f64, f64, Vec<f64>, Vec<f64>) {
        (
            z[0],
            z[1],
            z[2..2 + t].to_vec(),
            z[2 + t..2 + t + m].to_vec(),
        )
    };
    let fibre_sum = |p: &[f64], q: &[f64]| -> Vec<f64> {
        let mut out = p[..n].to_vec();
        out.extend((n..t).map(|i| p[i] + q[i]));
        out
    };
    let scaling = Check::over(tol, pts.clone(), |z| {
        let (s, _, p, _) = split(z);
        let mut want = p[..n].to_vec();
        want.extend(p[n..].iter().map(|a| s * a));
        Ok(max_abs_diff(&act(&op, s, &p)?, &want))
    })?;
    let unit = Check::over(tol, pts.clone(), |z| {
        let (_, _, p, _) = split(z);
        Ok(max_abs_diff(&act(&op, 1.0, &p)?, &p))
    })?;
    let assoc = Check::over(tol, pts.clone(), |z| {
        let (s, r, p, _) = split(z);
        let lhs = act(&op, s, &act(&op, r, &p)?)?;
        let rhs = act(&op, multiply_with(&e, s, r)?, &p)?;
        Ok(max_abs_diff(&lhs, &rhs))
    })?;
    let additive = Check::over(tol, pts.clone(), |z| {
        let (s, r, p, a2) = split(z);
        let lhs = act(&op, s + r, &p)?;
        let rhs = fibre_sum(&act(&op, s, &p)?, &act(&op, r, &p)?);
        let mut q = p[..n].to_vec();
        q.extend_from_slice(&a2);
        let pq = fibre_sum(&p, &q);
        let lhs2 = act(&op, s, &pq)?;
        let rhs2 = fibre_sum(&act(&op, s, &p)?, &act(&op, s, &q)?);
        Ok(max_abs_diff(&lhs, &rhs).max(max_abs_diff(&lhs2, &rhs2)))
    })?;
    let t_op = tangent(&op);
    let lambda = structural_map(StructuralKind::BundleLift, b)?;
    let derivative = Check::over(tol, pts.clone(), |z| {
        let (_, _, p, _) = split(z);
        let mut w = vec![0.0];
        w.extend_from_slice(&p);
        w.push(1.0);
        w.extend(std::iter::repeat_n(0.0, t));
        Ok(max_abs_diff(&t_op.eval_f64(&w)?, &lambda.eval_f64(&p)?))
    })?;
    // γ = ⟨⊙, π₁⟩ on C × A, solving (A₂, ⟨μ, π₁0⟩, ⟨qζ, 1⟩).
    let field = pair_field(b)?;
    let gamma = op.pair(&SmoothMap::block(1 + t, 1 + n, m))?;
    let t_gamma = tangent(&gamma);
    let solution = Check::over(tol, pts, |z| {
        let (s, _, p, _) = split(z);
        let mut init = p[..n].to_vec();
        init.extend(std::iter::repeat_n(0.0, m));
        init.extend_from_slice(&p[n..]);
        let init_res = max_abs_diff(&act(&gamma, 0.0, &p)?, &init);
        let mut w = vec![s];
        w.extend_from_slice(&p);
        w.push(1.0);
        w.extend(std::iter::repeat_n(0.0, t));
        let tg = t_gamma.eval_f64(&w)?;
        let (point, dir) = tg.split_at(n + 2 * m);
        let diff_res = max_abs_diff(dir, &field.eval(point)?);
        Ok(init_res.max(diff_res))
    })?;
    Ok(vec![
        LawResult::new("action-scaling", scaling),
        LawResult::new("action-unit", unit),
        LawResult::new("action-associative", assoc),
        LawResult::new("action-additive", additive),
        LawResult::new("action-derivative-lift", derivative),
        LawResult::new("action-solution", solution),
    ])
}

#[derive(Debug, Clone, Serialize)]
pub struct LinearityReport {
    pub is_bundle_map: Check,
    pub is_linear: Check,
    pub preserves_action: Check,
    pub preserves_exp: Check,
    /// `is_linear` and `preserves_action` agree.
    pub agreement: bool,
}

/// Linearity of `f: A → B` (`λ_A T(f) = f λ_B`) against preservation of the
/// `C`-actions and of the exponential flows. Samples are points of `A`;
/// `scalars` are the action scalars and flow times.
pub fn linearity_via_action(
    f: &SmoothMap,
    a: TrivialBundle,
    b: TrivialBundle,
    samples: &[Vec<f64>],
    scalars: &[f64],
    tol: f64,
    cfg: &IntegratorConfig,
) -> Result<LinearityReport> {
    let ta = a.total().dim;
    let tb = b.total().dim;
    if f.dom() != ta || f.cod() != tb {
        return Err(Error::Shape(format!(
            "map {} -> {} does not go between total spaces {ta} and {tb}",
            f.dom(),
            f.cod()
        )));
    }
    let (na, nb) = (a.base_dim, b.base_dim);
    let bundle_map = Check::over(tol, samples.iter().cloned(), |p| {
        let mut p0 = p.to_vec();
        p0[na..].iter_mut().for_each(|v| *v = 0.0);
        Ok(max_abs_diff(&f.eval_f64(p)?[..nb], &f.eval_f64(&p0)?[..nb]))
    })?;
    let lhs = structural_map(StructuralKind::BundleLift, a)?.then(&tangent(f))?;
    let rhs = f.then(&structural_map(StructuralKind::BundleLift, b)?)?;
    let linear = Check::over(tol, samples.iter().cloned(), |p| {
        Ok(max_abs_diff(&lhs.eval_f64(p)?, &rhs.eval_f64(p)?))
    })?;
    let op_a = action(a, cfg)?;
    let op_b = action(b, cfg)?;
    let exp_a = exp_flow(a, cfg);
    let exp_b = exp_flow(b, cfg);
    let mut grid = Vec::new();
    for p in samples {
        for s in scalars {
            let mut z = vec![*s];
            z.extend_from_slice(p);
            grid.push(z);
        }
    }
    let preserves_action = Check::over(tol, grid.iter().cloned(), |z| {
        let (s, p) = (z[0], &z[1..]);
        let lhs = f.eval_f64(&act(&op_a, s, p)?)?;
        let rhs = act(&op_b, s, &f.eval_f64(p)?)?;
        Ok(max_abs_diff(&lhs, &rhs))
    })?;
    let preserves_exp = Check::over(tol, grid, |z| {
        let (s, p) = (z[0], &z[1..]);
        let lhs = f.eval_f64(&exp_a.eval(s, p)?)?;
        let rhs = exp_b.eval(s, &f.eval_f64(p)?)?;
        Ok(max_abs_diff(&lhs, &rhs))
    })?;
    Ok(LinearityReport {
        agreement: linear.passed == preserves_action.passed,
        is_bundle_map: bundle_map,
        is_linear: linear,
        preserves_action,
        preserves_exp,
    })
}
