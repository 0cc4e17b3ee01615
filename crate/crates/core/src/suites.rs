//! Law-verification suites. Each suite evaluates a fixed set of registered
//! laws on seeded samples and returns one result per law id.

use std::f64::consts::{E, FRAC_PI_2, PI};
use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::dsl;
use crate::dynamics::{
    acceleration_residual, augment_time, commuting_flows_check_with, eta, flow_laws, flow_of,
    generator, integrate, linear_flow, reverse, sigma_flow, solve_nth_order, sum_flow, Connection,
    CurveObject, DynamicalSystem, Flow, HigherOrderSystem, IntegratorConfig,
};
use crate::error::{Error, Result};
use crate::kernel::{
    reconstruct_vertical, structural_map, tangent, tangent_power, vertical_bracket, SmoothMap,
    Space, StructuralKind, TrivialBundle,
};
use crate::report::{LawResult, Report, REGISTRY};
use crate::rig::{
    action_sample_dim, action_suite, d_e, e_map, euler_field, exp_flow, exp_flow_closed,
    exp_flow_matrix, linearity_via_action, multiply_with, rig_suite,
};
use crate::sampling::{
    self, max_abs_diff, uniform_points, Check, DEFAULT_SAMPLES, DEFAULT_SEED, EXACT_TOL,
    LAW_SAMPLES, NUMERIC_TOL, TIME_GRID,
};
use crate::vector_fields::{
    bracket_by_jacobians, commutes, is_vf_morphism, lie_bracket, linear_map, matrix_of,
    tangent_lift, LinearVectorField, VectorField,
};

/// Tolerance for kernel identities, which hold to rounding.
pub const KERNEL_TOL: f64 = 1e-12;
/// Tolerance for the rig and exponential-flow laws that go through `D²(e)`.
pub const RIG_TOL: f64 = 1e-7;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Suite {
    Kernel,
    Vf,
    Curve,
    Flows,
    Rig,
    Action,
    All,
}

impl Suite {
    pub const NAMES: [&'static str; 7] = ["kernel", "vf", "curve", "flows", "rig", "action", "all"];

    pub fn name(self) -> &'static str {
        match self {
            Suite::Kernel => "kernel",
            Suite::Vf => "vf",
            Suite::Curve => "curve",
            Suite::Flows => "flows",
            Suite::Rig => "rig",
            Suite::Action => "action",
            Suite::All => "all",
        }
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Suite {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        Ok(match s {
            "kernel" => Suite::Kernel,
            "vf" => Suite::Vf,
            "curve" => Suite::Curve,
            "flows" => Suite::Flows,
            "rig" => Suite::Rig,
            "action" => Suite::Action,
            "all" => Suite::All,
            other => {
                return Err(format!(
                    "unknown suite `{other}`, expected one of {}",
                    Suite::NAMES.join(", ")
                ))
            }
        })
    }
}

/// Seeds, sample counts and tolerances shared by every suite.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SuiteConfig {
    pub seed: u64,
    /// Points per identity for kernel and vector-field laws.
    pub samples: usize,
    /// Points per law for flow and action laws.
    pub law_samples: usize,
    pub kernel_tol: f64,
    pub exact_tol: f64,
    pub numeric_tol: f64,
    pub integrator: IntegratorConfig,
}

impl Default for SuiteConfig {
    fn default() -> Self {
        SuiteConfig {
            seed: DEFAULT_SEED,
            samples: DEFAULT_SAMPLES,
            law_samples: LAW_SAMPLES,
            kernel_tol: KERNEL_TOL,
            exact_tol: EXACT_TOL,
            numeric_tol: NUMERIC_TOL,
            integrator: IntegratorConfig::default(),
        }
    }
}

impl SuiteConfig {
    fn points(&self, salt: u64, count: usize, dim: usize) -> Vec<Vec<f64>> {
        uniform_points(self.seed ^ salt, count, dim, -2.0, 2.0)
    }
}

pub fn run_suite(suite: Suite, cfg: &SuiteConfig) -> Result<Vec<LawResult>> {
    match suite {
        Suite::Kernel => kernel_suite(cfg),
        Suite::Vf => vf_suite(cfg),
        Suite::Curve => curve_suite(cfg),
        Suite::Flows => flows_suite(cfg),
        Suite::Rig => rig_laws(cfg),
        Suite::Action => action_laws(cfg),
        Suite::All => {
            let mut out = Vec::new();
            for s in [
                Suite::Kernel,
                Suite::Vf,
                Suite::Curve,
                Suite::Flows,
                Suite::Rig,
                Suite::Action,
            ] {
                out.extend(run_suite(s, cfg)?);
            }
            Ok(out)
        }
    }
}

/// Runs a suite and wraps its results in the JSON report format.
pub fn suite_report(suite: Suite, cfg: &SuiteConfig) -> Result<Report> {
    let results = run_suite(suite, cfg)?;
    let config = serde_json::json!({
        "suite": suite.name(),
        "settings": cfg,
        "uniqueness": "solution uniqueness is not certifiable by sampling; reports rely on integrator determinism and agreement of independent methods",
    });
    Ok(Report::new(cfg.seed, config, &results))
}

/// Joins results with the same id, keeping first-seen order.
fn merge(results: Vec<LawResult>) -> Vec<LawResult> {
    let mut out: Vec<LawResult> = Vec::new();
    for r in results {
        match out.iter_mut().find(|o| o.law_id == r.law_id) {
            Some(o) => o.check = o.check.and(&r.check),
            None => out.push(r),
        }
    }
    out
}

fn all_of(checks: &[Check]) -> Check {
    checks
        .iter()
        .skip(1)
        .fold(checks[0].clone(), |acc, c| acc.and(c))
}

fn random_matrix(rng: &mut impl Rng, n: usize, scale: f64) -> DMatrix<f64> {
    DMatrix::from_fn(n, n, |_, _| rng.random_range(-scale..=scale))
}

/// `c₀I + c₁A + c₂A²`, which commutes with `A`.
fn polynomial_in(rng: &mut impl Rng, a: &DMatrix<f64>) -> DMatrix<f64> {
    let n = a.nrows();
    let c: [f64; 3] = [
        rng.random_range(-1.0..=1.0),
        rng.random_range(-1.0..=1.0),
        rng.random_range(-0.5..=0.5),
    ];
    DMatrix::identity(n, n) * c[0] + a * c[1] + a * a * c[2]
}

fn commutator_norm(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    (a * b - b * a).amax()
}

/// A pair with `‖AB − BA‖∞ > 0.1`.
fn non_commuting_pair(rng: &mut impl Rng, n: usize) -> (DMatrix<f64>, DMatrix<f64>) {
    loop {
        let a = random_matrix(rng, n, 1.0);
        let b = random_matrix(rng, n, 1.0);
        if commutator_norm(&a, &b) > 0.1 {
            return (a, b);
        }
    }
}

/// An invertible matrix with a bounded condition number.
fn well_conditioned(rng: &mut impl Rng, n: usize) -> DMatrix<f64> {
    loop {
        let s = DMatrix::identity(n, n) + random_matrix(rng, n, 0.5);
        if let Some(inv) = s.clone().try_inverse() {
            if inv.amax() < 5.0 {
                return s;
            }
        }
    }
}

fn lin(a: &DMatrix<f64>) -> VectorField {
    LinearVectorField::new(a.clone()).expect("square").field()
}

fn sm(kind: StructuralKind, n: usize) -> SmoothMap {
    structural_map(kind, Space::new(n)).expect("space maps accept any space")
}

fn equal_maps(f: &SmoothMap, g: &SmoothMap, samples: &[Vec<f64>], tol: f64) -> Result<Check> {
    Check::over(tol, samples.iter().cloned(), |x| {
        Ok(max_abs_diff(&f.eval_f64(x)?, &g.eval_f64(x)?))
    })
}

fn kernel_suite(cfg: &SuiteConfig) -> Result<Vec<LawResult>> {
    let tol = cfg.kernel_tol;
    let n = 2;
    let maps = [
        dsl::map("sin(x1)*x2; exp(x1/3) - x2^3", n)?,
        dsl::map("tanh(x1 + x2); x1*cos(x2)", n)?,
    ];
    let m_pts = cfg.points(1, cfg.samples, n);
    let tm_pts = cfg.points(2, cfg.samples, 2 * n);
    let t2m_pts = cfg.points(3, cfg.samples, 4 * n);
    let (p, zero, ell, flip) = (
        sm(StructuralKind::P, n),
        sm(StructuralKind::Zero, n),
        sm(StructuralKind::Ell, n),
        sm(StructuralKind::Flip, n),
    );

    let mut nat_p = Vec::new();
    let mut nat_zero = Vec::new();
    let mut nat_ell = Vec::new();
    let mut nat_flip = Vec::new();
    for f in &maps {
        let tf = tangent(f);
        let t2f = tangent_power(f, 2);
        nat_p.push(equal_maps(&tf.then(&p)?, &p.then(f)?, &tm_pts, tol)?);
        nat_zero.push(equal_maps(&zero.then(&tf)?, &f.then(&zero)?, &m_pts, tol)?);
        nat_ell.push(equal_maps(&ell.then(&t2f)?, &tf.then(&ell)?, &tm_pts, tol)?);
        nat_flip.push(equal_maps(
            &flip.then(&t2f)?,
            &t2f.then(&flip)?,
            &t2m_pts,
            tol,
        )?);
    }

    let involution = equal_maps(
        &flip.then(&flip)?,
        &SmoothMap::identity(4 * n),
        &t2m_pts,
        tol,
    )?;
    let ell_flip = equal_maps(&ell.then(&flip)?, &ell, &tm_pts, tol)?;
    let ell_tp = equal_maps(&ell.then(&tangent(&p))?, &p.then(&zero)?, &tm_pts, tol)?;

    let plus = sm(StructuralKind::Plus, n);
    let neg = sm(StructuralKind::Neg, n);
    let pullback_pts = cfg.points(4, cfg.samples, 4 * n);
    let plus_comm = Check::over(tol, pullback_pts.iter().cloned(), |z| {
        let (x, u, w) = (&z[..n], &z[n..2 * n], &z[2 * n..3 * n]);
        let lhs = plus.eval_f64(&[x, u, w].concat())?;
        let rhs = plus.eval_f64(&[x, w, u].concat())?;
        Ok(max_abs_diff(&lhs, &rhs))
    })?;
    let plus_assoc = Check::over(tol, pullback_pts.iter().cloned(), |z| {
        let (x, u, v, w) = (&z[..n], &z[n..2 * n], &z[2 * n..3 * n], &z[3 * n..]);
        let uv = plus.eval_f64(&[x, u, v].concat())?;
        let lhs = plus.eval_f64(&[x, &uv[n..], w].concat())?;
        let vw = plus.eval_f64(&[x, v, w].concat())?;
        let rhs = plus.eval_f64(&[x, u, &vw[n..]].concat())?;
        Ok(max_abs_diff(&lhs, &rhs))
    })?;
    let neg_inv = Check::over(tol, tm_pts.iter().cloned(), |z| {
        let negated = neg.eval_f64(z)?;
        let sum = plus.eval_f64(&[&z[..], &negated[n..]].concat())?;
        Ok(max_abs_diff(&sum, &p.then(&zero)?.eval_f64(z)?))
    })?;

    // Symbolic oracle for p(x1, x2) = x1³x2 − 2x1x2² + 5.
    let poly = dsl::map("x1^3*x2 - 2*x1*x2^2 + 5", 2)?;
    let t_poly = tangent(&poly);
    let symbolic = Check::over(1e-13, tm_pts.iter().cloned(), |z| {
        let (x1, x2, d1, d2) = (z[0], z[1], z[2], z[3]);
        let value = x1.powi(3) * x2 - 2.0 * x1 * x2 * x2 + 5.0;
        let deriv = (3.0 * x1 * x1 * x2 - 2.0 * x2 * x2) * d1 + (x1.powi(3) - 4.0 * x1 * x2) * d2;
        let got = t_poly.eval_f64(z)?;
        // Relative to the size of the terms so the bound is scale-free.
        let scale = 1.0 + value.abs().max(deriv.abs());
        Ok(max_abs_diff(&got, &[value, deriv]) / scale)
    })?;
    let h = 1e-5;
    let mut fd = Vec::new();
    for f in maps.iter().chain([&poly]) {
        let tf = tangent(f);
        fd.push(Check::over(1e-6, tm_pts.iter().cloned(), |z| {
            let (x, v) = (&z[..n], &z[n..]);
            let fwd: Vec<f64> = x.iter().zip(v).map(|(a, b)| a + h * b).collect();
            let bwd: Vec<f64> = x.iter().zip(v).map(|(a, b)| a - h * b).collect();
            let (fp, fm) = (f.eval_f64(&fwd)?, f.eval_f64(&bwd)?);
            let central: Vec<f64> = fp
                .iter()
                .zip(&fm)
                .map(|(a, b)| (a - b) / (2.0 * h))
                .collect();
            Ok(max_abs_diff(&tf.eval_f64(z)?[f.cod()..], &central))
        })?);
    }

    // A vertical map into T(ℝ × ℝ): z ↦ ((z1, z2²), (0, sin(z1)z2)).
    let bundle = TrivialBundle::new(1, 1);
    let vertical = dsl::map("x1; x2^2; 0; sin(x1)*x2", 2)?;
    let point = vertical.then(&structural_map(StructuralKind::P, bundle)?)?;
    let rebuilt = reconstruct_vertical(&vertical_bracket(&vertical, bundle)?, &point, bundle)?;
    let reconstruction = equal_maps(&rebuilt, &vertical, &m_pts, tol)?;

    Ok(vec![
        LawResult::new("kernel-naturality-p", all_of(&nat_p)),
        LawResult::new("kernel-naturality-zero", all_of(&nat_zero)),
        LawResult::new("kernel-naturality-ell", all_of(&nat_ell)),
        LawResult::new("kernel-naturality-flip", all_of(&nat_flip)),
        LawResult::new("kernel-flip-involution", involution),
        LawResult::new("kernel-ell-flip", ell_flip),
        LawResult::new("kernel-ell-tangent-p", ell_tp),
        LawResult::new("kernel-plus-commutative", plus_comm),
        LawResult::new("kernel-plus-associative", plus_assoc),
        LawResult::new("kernel-neg-inverse", neg_inv),
        LawResult::new("kernel-exact-symbolic", symbolic),
        LawResult::new("kernel-exact-finite-difference", all_of(&fd)),
        LawResult::new("kernel-bracket-reconstruction", reconstruction),
    ])
}

/// Nonlinear fields on ℝ² used across the vector-field laws.
fn sample_fields() -> Result<Vec<VectorField>> {
    Ok(vec![
        VectorField::from_dsl("x2; -x1", 2)?,
        VectorField::euler(2),
        VectorField::from_dsl("sin(x2); x1*x2", 2)?,
        VectorField::from_dsl("exp(x1/2) - x2^2; tanh(x1)", 2)?,
        VectorField::from_dsl("x1^2; x2", 2)?,
        VectorField::zero(2),
    ])
}

fn vf_suite(cfg: &SuiteConfig) -> Result<Vec<LawResult>> {
    let tol = cfg.exact_tol;
    let mut rng = sampling::rng(cfg.seed ^ 0x0f);
    let pts = cfg.points(5, cfg.samples, 2);
    let few = cfg.points(6, 20, 2);

    // Commuting linear pairs pass, pairs with a large commutator fail.
    let mut lin_b = Check::new(tol);
    let mut missed = Vec::new();
    for i in 0..10 {
        let n = 2 + i % 2;
        let pts_n = cfg.points(7 + i as u64, 20, n);
        let a = random_matrix(&mut rng, n, 1.0);
        let b = polynomial_in(&mut rng, &a);
        let c = commutes(&lin(&a), &lin(&b), &pts_n, tol)?;
        lin_b.record(c.max_residual, &[i as f64]);
        let (a, b) = non_commuting_pair(&mut rng, n);
        if commutes(&lin(&a), &lin(&b), &pts_n, tol)?.passed {
            missed.push(i as f64);
        }
    }
    let mut linear_commutation = lin_b.finish();
    if !missed.is_empty() {
        linear_commutation.passed = false;
        linear_commutation.witness = missed;
    }

    let fields = sample_fields()?;
    let mut symmetric = Check::new(tol);
    let mut symmetric_ok = true;
    let mut self_commutes = Vec::new();
    let mut jacobian = Vec::new();
    let mut fd = Vec::new();
    let h = 1e-5;
    for (i, v1) in fields.iter().enumerate() {
        self_commutes.push(commutes(v1, v1, &pts, tol)?);
        for (j, v2) in fields.iter().enumerate() {
            let c12 = commutes(v1, v2, &few, tol)?;
            let c21 = commutes(v2, v1, &few, tol)?;
            symmetric_ok &= c12.passed == c21.passed;
            symmetric.record(
                (c12.max_residual - c21.max_residual).abs(),
                &[i as f64, j as f64],
            );

            let bracket = lie_bracket(v1, v2)?;
            jacobian.push(Check::over(cfg.kernel_tol, few.iter().cloned(), |x| {
                Ok(max_abs_diff(
                    &bracket.eval(x)?,
                    &bracket_by_jacobians(v1, v2, x)?,
                ))
            })?);
            fd.push(Check::over(1e-5, few.iter().cloned(), |x| {
                let along = |f: &VectorField, dir: &[f64]| -> Result<Vec<f64>> {
                    let fwd: Vec<f64> = x.iter().zip(dir).map(|(a, d)| a + h * d).collect();
                    let bwd: Vec<f64> = x.iter().zip(dir).map(|(a, d)| a - h * d).collect();
                    let (p, m) = (f.eval(&fwd)?, f.eval(&bwd)?);
                    Ok(p.iter().zip(&m).map(|(a, b)| (a - b) / (2.0 * h)).collect())
                };
                let d2 = along(v2, &v1.eval(x)?)?;
                let d1 = along(v1, &v2.eval(x)?)?;
                let oracle: Vec<f64> = d2.iter().zip(&d1).map(|(a, b)| a - b).collect();
                Ok(max_abs_diff(&bracket.eval(x)?, &oracle))
            })?);
        }
    }
    let mut symmetric = symmetric.finish();
    symmetric.passed &= symmetric_ok;

    // f = S relates A to SAS⁻¹; it must then relate the brackets.
    let mut related = Check::new(1e-7);
    let mut premise_failures = Vec::new();
    for i in 0..10 {
        let s = well_conditioned(&mut rng, 2);
        let s_inv = s.clone().try_inverse().expect("invertible");
        let a1 = random_matrix(&mut rng, 2, 1.0);
        let a2 = random_matrix(&mut rng, 2, 1.0);
        let (v1, v2) = (lin(&a1), lin(&a2));
        let (w1, w2) = (lin(&(&s * &a1 * &s_inv)), lin(&(&s * &a2 * &s_inv)));
        let f = linear_map(&s);
        let premise =
            is_vf_morphism(&f, &v1, &w1, &few, tol)?.and(&is_vf_morphism(&f, &v2, &w2, &few, tol)?);
        if !premise.passed {
            premise_failures.push(i as f64);
        }
        let conclusion = is_vf_morphism(
            &f,
            &lie_bracket(&v1, &v2)?,
            &lie_bracket(&w1, &w2)?,
            &few,
            1e-7,
        )?;
        related.record(conclusion.max_residual, &[i as f64]);
    }
    let mut relatedness = related.finish();
    if !premise_failures.is_empty() {
        relatedness.passed = false;
        relatedness.witness = premise_failures;
    }

    // V₁, V₂ commute iff V₂ is a morphism (M, V₁) → (TM, T(V₁)c).
    let mut pair_morphism = Check::new(tol);
    let mut pair_ok = true;
    for (i, v1) in fields.iter().enumerate() {
        for (j, v2) in fields.iter().enumerate() {
            let c = commutes(v1, v2, &few, tol)?;
            let m = is_vf_morphism(&v2.full(), v1, &tangent_lift(v1), &few, tol)?;
            pair_ok &= c.passed == m.passed;
            pair_morphism.record(
                (c.max_residual - m.max_residual).abs(),
                &[i as f64, j as f64],
            );
        }
    }
    let mut pair_morphism = pair_morphism.finish();
    pair_morphism.passed &= pair_ok;

    let tm_pts = cfg.points(8, cfg.samples, 4);
    let mut section = Vec::new();
    for v in &fields {
        let tc = tangent(&v.full())
            .then(&sm(StructuralKind::Flip, 2))?
            .then(&sm(StructuralKind::P, 4))?;
        section.push(equal_maps(&tc, &SmoothMap::identity(4), &tm_pts, tol)?);
    }

    Ok(vec![
        LawResult::new("vf-linear-commutation", linear_commutation),
        LawResult::new("vf-commutes-symmetric", symmetric),
        LawResult::new("vf-self-commutes", all_of(&self_commutes)),
        LawResult::new("vf-bracket-relatedness", relatedness),
        LawResult::new("vf-bracket-jacobian", all_of(&jacobian)),
        LawResult::new("vf-bracket-finite-difference", all_of(&fd)),
        LawResult::new("vf-commuting-pair-morphism", pair_morphism),
        LawResult::new("vf-tangent-lift-section", all_of(&section)),
    ])
}

const SIGMA_GRID: [f64; 5] = [-2.0, -1.0, 0.0, 1.0, 2.0];

fn grid2() -> Vec<Vec<f64>> {
    SIGMA_GRID
        .iter()
        .flat_map(|&t| SIGMA_GRID.iter().map(move |&s| vec![t, s]))
        .collect()
}

fn curve_suite(cfg: &SuiteConfig) -> Result<Vec<LawResult>> {
    let tol = cfg.exact_tol;
    let sigma = sigma_flow(&cfg.integrator);
    let s = |t: f64, x: f64| -> Result<f64> { Ok(sigma.eval(t, &[x])?[0]) };
    let pts = cfg.points(9, cfg.samples, 1);
    let c1 = CurveObject::check_self_commutes(&pts)?;
    let addition = Check::over(tol, grid2(), |p| Ok((s(p[0], p[1])? - (p[0] + p[1])).abs()))?;
    let unit = Check::over(tol, SIGMA_GRID.iter().map(|&x| vec![x]), |p| {
        Ok((s(CurveObject::C0, p[0])? - p[0])
            .abs()
            .max((s(p[0], CurveObject::C0)? - p[0]).abs()))
    })?;
    let comm = Check::over(
        tol,
        grid2(),
        |p| Ok((s(p[0], p[1])? - s(p[1], p[0])?).abs()),
    )?;
    let triples = SIGMA_GRID.iter().flat_map(|&a| {
        SIGMA_GRID
            .iter()
            .flat_map(move |&b| SIGMA_GRID.iter().map(move |&c| vec![a, b, c]))
    });
    let assoc = Check::over(tol, triples, |p| {
        Ok((s(p[0], s(p[1], p[2])?)? - s(s(p[0], p[1])?, p[2])?).abs())
    })?;
    let eta = eta(&cfg.integrator);
    let mut inverse_pts: Vec<Vec<f64>> = SIGMA_GRID.iter().map(|&t| vec![t]).collect();
    inverse_pts.push(vec![1.5]);
    let inverse = Check::over(tol, inverse_pts, |p| {
        let et = eta.eval_f64(p)?[0];
        Ok((s(p[0], et)? - CurveObject::C0)
            .abs()
            .max((s(et, p[0])? - CurveObject::C0).abs())
            .max((et + p[0]).abs()))
    })?;
    Ok(vec![
        LawResult::new("curve-c1-self-commutes", c1),
        LawResult::new("sigma-addition", addition),
        LawResult::new("sigma-unit", unit),
        LawResult::new("sigma-commutative", comm),
        LawResult::new("sigma-associative", assoc),
        LawResult::new("sigma-eta-inverse", inverse),
    ])
}

fn rotation() -> VectorField {
    VectorField::from_dsl("x2; -x1", 2).expect("valid field")
}

/// Closed-form flow of `(x2, −x1)`.
fn rotation_closed() -> Result<Flow> {
    Flow::closed_form(&dsl::parse(
        "x1*cos(t) + x2*sin(t); x2*cos(t) - x1*sin(t)",
        2,
        true,
    )?)
}

fn euler_closed() -> Result<Flow> {
    Flow::closed_form(&dsl::parse("exp(t)*x1; exp(t)*x2", 2, true)?)
}

fn flows_equal(f: &Flow, g: &Flow, samples: &[Vec<f64>], times: &[f64], tol: f64) -> Result<Check> {
    let grid = samples
        .iter()
        .flat_map(|x| times.iter().map(move |&t| [&[t][..], x].concat()));
    Check::over(tol, grid, |p| {
        Ok(max_abs_diff(
            &f.eval(p[0], &p[1..])?,
            &g.eval(p[0], &p[1..])?,
        ))
    })
}

fn flows_suite(cfg: &SuiteConfig) -> Result<Vec<LawResult>> {
    let ntol = cfg.numeric_tol;
    let icfg = &cfg.integrator;
    let mut rng = sampling::rng(cfg.seed ^ 0xf1);
    let pts = cfg.points(10, cfg.law_samples, 2);
    let few = cfg.points(11, 5, 2);
    let mut out = Vec::new();

    let euler_sys = DynamicalSystem::autonomous(VectorField::euler(1));
    let y = integrate(&euler_sys, 1.0, &[1.0], icfg)?[0];
    out.push(LawResult::new(
        "flow-euler-solution",
        Check::over(1e-8, [vec![1.0, 1.0]], |_| Ok((y - E).abs()))?,
    ));

    let blow = DynamicalSystem::autonomous(VectorField::from_dsl("x1^2", 1)?);
    let blowup = match integrate(&blow, 1.0, &[1.0], icfg) {
        Err(Error::StepSizeCollapse { t_reached }) => {
            let miss = (0.99 - t_reached).max(t_reached - 1.0).max(0.0);
            Check {
                passed: miss == 0.0,
                max_residual: miss,
                witness: vec![t_reached],
            }
        }
        Err(e) if e.is_numeric() => Check::flag(false, vec![e.t_reached().unwrap_or(f64::NAN)]),
        Err(e) => return Err(e),
        Ok(y) => Check::flag(false, y),
    };
    out.push(LawResult::new("flow-blowup", blowup));

    let a = random_matrix(&mut rng, 2, 1.0);
    let mut laws = flow_laws(&flow_of(&rotation(), icfg), &pts, &TIME_GRID, ntol)?;
    laws.extend(flow_laws(
        &linear_flow(&a)?,
        &pts,
        &TIME_GRID,
        cfg.exact_tol,
    )?);
    out.extend(merge(laws));

    // ι then γ and γ then ι.
    let mut gen_b = Check::new(cfg.exact_tol);
    for i in 0..20 {
        let n = 2 + i % 2;
        let a = random_matrix(&mut rng, n, 1.0);
        let recovered = matrix_of(
            &generator(&linear_flow(&a)?),
            &cfg.points(12, 10, n),
            cfg.exact_tol,
        )?;
        gen_b.record((recovered - &a).amax(), &[i as f64]);
    }
    let mut bijection = vec![gen_b.finish()];
    for closed in [rotation_closed()?, euler_closed()?] {
        let round_trip = flow_of(&generator(&closed), icfg);
        bijection.push(flows_equal(
            &round_trip,
            &closed,
            &few,
            &[-1.0, 0.5, 1.0],
            ntol,
        )?);
    }
    out.push(LawResult::new(
        "flow-generator-bijection",
        all_of(&bijection),
    ));

    // Linear f relates linear fields iff it intertwines their flows.
    let mut morph = Check::new(ntol);
    let mut morph_ok = true;
    for i in 0..6 {
        let s = well_conditioned(&mut rng, 2);
        let a1 = random_matrix(&mut rng, 2, 1.0);
        let a2 = if i % 2 == 0 {
            &s * &a1 * s.clone().try_inverse().expect("invertible")
        } else {
            non_commuting_pair(&mut rng, 2).0
        };
        let (v1, v2) = (lin(&a1), lin(&a2));
        let f = linear_map(&s);
        let is_morphism = is_vf_morphism(&f, &v1, &v2, &few, cfg.exact_tol)?;
        let (g1, g2) = (flow_of(&v1, icfg), flow_of(&v2, icfg));
        let times = [-1.0, 0.5, 1.0];
        let intertwines = Check::over(
            ntol,
            few.iter()
                .flat_map(|x| times.iter().map(move |&t| [&[t][..], x].concat())),
            |p| {
                let lhs = f.eval_f64(&g1.eval(p[0], &p[1..])?)?;
                let rhs = g2.eval(p[0], &f.eval_f64(&p[1..])?)?;
                Ok(max_abs_diff(&lhs, &rhs))
            },
        )?;
        morph_ok &= is_morphism.passed == intertwines.passed;
        if is_morphism.passed {
            morph.record(intertwines.max_residual, &[i as f64]);
        }
    }
    let mut morphism = morph.finish();
    morphism.passed &= morph_ok;
    out.push(LawResult::new("flow-morphism-equivalence", morphism));

    // γV solves (TM, T(V)c, gV) for linear g.
    let pendulum = VectorField::from_dsl("x2; -sin(x1)", 2)?;
    let gamma = flow_of(&pendulum, icfg);
    let g = linear_map(&well_conditioned(&mut rng, 2));
    let candidate = SmoothMap::block(3, 0, 1)
        .pair(&SmoothMap::block(3, 1, 2).then(&g)?)?
        .then(gamma.map())?
        .then(&pendulum.full())?;
    let lifted = tangent_lift(&pendulum);
    let t_candidate = tangent(&candidate);
    let tangent_grid: Vec<Vec<f64>> = few
        .iter()
        .flat_map(|x| [-1.0, 0.0, 0.5, 1.0].map(|t| [&[t][..], x].concat()))
        .collect();
    let tangent_solution = Check::over(ntol, tangent_grid.iter().cloned(), |p| {
        let initial = if p[0] == 0.0 {
            max_abs_diff(
                &candidate.eval_f64(p)?,
                &g.then(&pendulum.full())?.eval_f64(&p[1..])?,
            )
        } else {
            0.0
        };
        let mut w = p.to_vec();
        w.extend([1.0, 0.0, 0.0]);
        let y = t_candidate.eval_f64(&w)?;
        let (point, velocity) = y.split_at(4);
        Ok(initial.max(max_abs_diff(velocity, &lifted.eval(point)?)))
    })?;
    out.push(LawResult::new("flow-tangent-solution", tangent_solution));

    // On a differential object the full square and its p̂-projection agree.
    let corrupted = Flow::closed_form(&dsl::parse("x1 + t*x2; x2 - t*x1", 2, true)?)?;
    let mut criterion = Check::new(cfg.exact_tol);
    let mut criterion_ok = true;
    for (k, flow) in [flow_of(&rotation(), icfg), corrupted].iter().enumerate() {
        let tg = tangent(flow.map());
        let v = rotation();
        let full = Check::over(ntol, tangent_grid.iter().cloned(), |p| {
            let mut w = p.to_vec();
            w.extend([1.0, 0.0, 0.0]);
            let y = tg.eval_f64(&w)?;
            let want = v.full().eval_f64(&y[..2])?;
            Ok(max_abs_diff(&y, &want))
        })?;
        let projected = Check::over(ntol, tangent_grid.iter().cloned(), |p| {
            let mut w = p.to_vec();
            w.extend([1.0, 0.0, 0.0]);
            let y = tg.eval_f64(&w)?;
            Ok(max_abs_diff(&y[2..], &v.eval(&y[..2])?))
        })?;
        criterion_ok &= full.passed == projected.passed;
        criterion.record(
            (full.max_residual - projected.max_residual).abs(),
            &[k as f64],
        );
    }
    let mut criterion = criterion.finish();
    criterion.passed &= criterion_ok;
    out.push(LawResult::new(
        "flow-differential-object-criterion",
        criterion,
    ));

    let det_flow = flow_of(&pendulum, icfg);
    let mut identical = true;
    let mut det_witness = Vec::new();
    for p in &tangent_grid {
        let a = det_flow.eval(p[0], &p[1..])?;
        let b = flow_of(&pendulum, icfg).eval(p[0], &p[1..])?;
        if a.iter().zip(&b).any(|(x, y)| x.to_bits() != y.to_bits()) {
            identical = false;
            det_witness = p.clone();
        }
    }
    out.push(LawResult::new(
        "flow-determinism",
        Check::flag(identical, det_witness),
    ));

    // Commuting pairs: all four predicates hold. Non-commuting pairs: all
    // four fail with a visible interchange residual.
    let times = [-1.0, 0.5, 1.0];
    let mut theorem = Check::new(ntol);
    let mut theorem_failures = Vec::new();
    for i in 0..10 {
        let a = random_matrix(&mut rng, 2, 1.0);
        let b = polynomial_in(&mut rng, &a);
        let (va, vb) = (lin(&a), lin(&b));
        let r = commuting_flows_check_with(
            &va,
            &vb,
            &flow_of(&va, icfg),
            &flow_of(&vb, icfg),
            &few,
            &times,
            ntol,
        )?;
        if !(r.all_pass() && r.equivalence_holds) {
            theorem_failures.push(i as f64);
        }
        theorem.record(r.flows_commute.max_residual, &[i as f64]);

        let (a, b) = non_commuting_pair(&mut rng, 2);
        let (va, vb) = (lin(&a), lin(&b));
        let r = commuting_flows_check_with(
            &va,
            &vb,
            &flow_of(&va, icfg),
            &flow_of(&vb, icfg),
            &few,
            &times,
            ntol,
        )?;
        if r.fields_commute.passed || !r.equivalence_holds || r.flows_commute.max_residual < 1e-3 {
            theorem_failures.push(10.0 + i as f64);
        }
    }
    let mut theorem = theorem.finish();
    if !theorem_failures.is_empty() {
        theorem.passed = false;
        theorem.witness = theorem_failures;
    }
    out.push(LawResult::new("flow-commuting-theorem", theorem));

    let mut sum = Vec::new();
    for _ in 0..5 {
        let a = random_matrix(&mut rng, 2, 1.0);
        let b = polynomial_in(&mut rng, &a);
        let (va, vb) = (lin(&a), lin(&b));
        let summed = sum_flow(&va, &vb, icfg, &few, ntol)?;
        sum.push(flows_equal(
            &summed,
            &linear_flow(&(&a + &b))?,
            &few,
            &[-1.0, 0.5, 1.0],
            ntol,
        )?);
        let swapped = sum_flow(&vb, &va, icfg, &few, ntol)?;
        sum.push(flows_equal(&summed, &swapped, &few, &[1.0], ntol)?);
    }
    out.push(LawResult::new("flow-sum", all_of(&sum)));

    let rot = flow_of(&rotation(), icfg);
    let rev = reverse(&rot, icfg)?;
    let inverse = Check::over(
        ntol,
        few.iter()
            .flat_map(|x| [0.7, -1.3, 2.0].map(|t| [&[t][..], x].concat())),
        |p| {
            let (t, x) = (p[0], &p[1..]);
            let there = rot.eval(t, &rev.eval(t, x)?)?;
            let back = rev.eval(t, &rot.eval(t, x)?)?;
            Ok(max_abs_diff(&there, x).max(max_abs_diff(&back, x)))
        },
    )?;
    let a = random_matrix(&mut rng, 2, 1.0);
    let matrix_reverse = flows_equal(
        &reverse(&linear_flow(&a)?, icfg)?,
        &linear_flow(&(-&a))?,
        &few,
        &TIME_GRID,
        cfg.exact_tol,
    )?;
    let reversal =
        inverse
            .and(&matrix_reverse)
            .and(&Check::over(cfg.exact_tol, [vec![1.5]], |p| {
                Ok((eta(icfg).eval_f64(p)?[0] + 1.5).abs())
            })?);
    out.push(LawResult::new("flow-reversal", reversal));

    let init = SmoothMap::constant(0, vec![0.0, 1.0]);
    let damped = HigherOrderSystem::from_acceleration(1, dsl::map("-x2 - x1", 2)?, init.clone())?;
    let w = 3f64.sqrt() / 2.0;
    let damped_check = Check::over(ntol, [0.5, 1.0, 2.0].map(|t| vec![t]), |p| {
        let want = (-p[0] / 2.0).exp() * (w * p[0]).sin() / w;
        Ok((solve_nth_order(&damped, p[0], &[], icfg)?[0] - want).abs())
    })?;
    let line = HigherOrderSystem::from_acceleration(1, dsl::map("0", 2)?, init.clone())?;
    let line_check = Check::over(ntol, [0.5, 1.0, 3.0].map(|t| vec![t]), |p| {
        Ok((solve_nth_order(&line, p[0], &[], icfg)?[0] - p[0]).abs())
    })?;
    let sine = HigherOrderSystem::from_acceleration(1, dsl::map("-x1", 2)?, init)?;
    let sine_check = Check::over(ntol, [vec![FRAC_PI_2]], |p| {
        Ok((solve_nth_order(&sine, p[0], &[], icfg)?[0] - 1.0).abs())
    })?;
    out.push(LawResult::new(
        "flow-nth-order",
        all_of(&[damped_check, line_check, sine_check]),
    ));

    let flat = Connection::flat(2);
    let flat_flow = crate::dynamics::geodesic_flow(&flat, icfg);
    let flat_pts = cfg.points(13, 5, 4);
    let linear_motion = Check::over(
        1e-8,
        flat_pts
            .iter()
            .flat_map(|z| [-1.0, 0.5, 2.0].map(|t| [&[t][..], z].concat())),
        |p| {
            let (t, z) = (p[0], &p[1..]);
            let want = [z[0] + t * z[2], z[1] + t * z[3], z[2], z[3]];
            Ok(max_abs_diff(&flat_flow.eval(t, z)?, &want))
        },
    )?;
    let half_plane = Connection::from_dsl("-2*u1*u2/x2; (u1^2 - u2^2)/x2", 2)?;
    let hp_flow = crate::dynamics::geodesic_flow(&half_plane, icfg);
    let start = [0.0, 1.0, 1.0, 0.0];
    let semicircle = Check::over(1e-5, (0..=20).map(|k| vec![k as f64 * 0.1]), |p| {
        let y = hp_flow.eval(p[0], &start)?;
        let radius = (y[0] * y[0] + y[1] * y[1] - 1.0).abs();
        let speed = ((y[2] * y[2] + y[3] * y[3]) / (y[1] * y[1]) - 1.0).abs();
        Ok(radius.max(speed))
    })?;
    let acc_flat = acceleration_residual(&flat_flow, &flat, &flat_pts, &[0.5, 1.0], 1e-6)?;
    let acc_hp = acceleration_residual(
        &hp_flow,
        &half_plane,
        &[start.to_vec()],
        &[0.5, 1.0, 2.0],
        1e-6,
    )?;
    out.push(LawResult::new(
        "flow-geodesic",
        all_of(&[linear_motion, semicircle, acc_flat, acc_hp]),
    ));

    let forced = augment_time(&dsl::parse("x1 + cos(t)", 1, true)?)?;
    let y = integrate(&forced, 1.0, &[0.0], icfg)?;
    let forced_check = Check::over(ntol, [vec![1.0]], |_| {
        Ok((y[0] - (E + 1f64.sin() - 1f64.cos()) / 2.0).abs())
    })?;
    let pure = augment_time(&dsl::parse("cos(t)", 1, true)?)?;
    let y = integrate(&pure, PI, &[0.0], icfg)?;
    let pure_check = Check::over(ntol, [vec![PI]], |_| Ok(y[0].abs()))?;
    let clock_check = Check::over(cfg.exact_tol, [0.3, 1.0, 2.5].map(|t| vec![t]), |p| {
        Ok((integrate(&forced, p[0], &[0.0], icfg)?[1] - p[0]).abs())
    })?;
    out.push(LawResult::new(
        "flow-time-augmentation",
        all_of(&[forced_check, pure_check, clock_check]),
    ));
    Ok(out)
}

const RIG_BUNDLES: [TrivialBundle; 3] = [
    TrivialBundle {
        base_dim: 0,
        fibre_dim: 2,
    },
    TrivialBundle {
        base_dim: 1,
        fibre_dim: 1,
    },
    TrivialBundle {
        base_dim: 2,
        fibre_dim: 3,
    },
];

fn rig_laws(cfg: &SuiteConfig) -> Result<Vec<LawResult>> {
    let icfg = &cfg.integrator;
    let e = e_map(icfg);
    let triples = uniform_points(cfg.seed ^ 0x21, cfg.law_samples, 3, -1.5, 1.5);
    let mut out = rig_suite(&e, &triples, cfg.numeric_tol)?;

    // λ_A T(V) = V T(λ_A) c, with V a section lying over the zero field.
    let mut euler_linear = Vec::new();
    let mut closed_form = Vec::new();
    let mut flow_law_checks = Vec::new();
    for b in RIG_BUNDLES {
        let t = b.total().dim;
        let v = euler_field(b).full();
        let lambda = structural_map(StructuralKind::BundleLift, b)?;
        let lhs = lambda.then(&tangent(&v))?;
        let rhs = v
            .then(&tangent(&lambda))?
            .then(&structural_map(StructuralKind::Flip, b.total())?)?;
        let pts = cfg.points(22, cfg.samples, t);
        euler_linear.push(equal_maps(&lhs, &rhs, &pts, cfg.kernel_tol)?);
        euler_linear.push(equal_maps(
            &v.then(&structural_map(StructuralKind::P, b.total())?)?,
            &SmoothMap::identity(t),
            &pts,
            cfg.kernel_tol,
        )?);
        let q = SmoothMap::block(t, 0, b.base_dim);
        let over_zero = v.then(&tangent(&q))?;
        let zero_q = q.then(&structural_map(
            StructuralKind::Zero,
            Space::new(b.base_dim),
        )?)?;
        euler_linear.push(equal_maps(&over_zero, &zero_q, &pts, cfg.kernel_tol)?);

        let law_pts = cfg.points(23, cfg.law_samples, t);
        closed_form.push(flows_equal(
            &exp_flow(b, icfg),
            &exp_flow_closed(b),
            &law_pts,
            &TIME_GRID,
            1e-8,
        )?);
        let laws = flow_laws(&exp_flow_matrix(b), &law_pts, &TIME_GRID, 1e-8)?;
        flow_law_checks.extend(laws.into_iter().map(|l| l.check));
    }
    out.push(LawResult::new("rig-euler-linear", all_of(&euler_linear)));
    out.push(LawResult::new("rig-exp-closed-form", all_of(&closed_form)));
    out.push(LawResult::new(
        "rig-exp-flow-laws",
        all_of(&flow_law_checks),
    ));

    let exp_c = exp_flow(TrivialBundle::curve(), icfg);
    let vs = cfg.points(24, 5, 1);
    let de_grid = vs
        .iter()
        .flat_map(|v| TIME_GRID.iter().map(move |&t| vec![t, v[0]]));
    let de = Check::over(RIG_TOL, de_grid, |p| {
        let got = d_e(&e, p[0], p[1])?;
        let flow = exp_c.eval(p[0], &[p[1]])?[0];
        Ok((got - flow).abs().max((got - p[1] * p[0].exp()).abs()))
    })?;
    out.push(LawResult::new("rig-de-exp-flow", de));

    let pairs = uniform_points(cfg.seed ^ 0x25, cfg.law_samples, 2, -3.0, 3.0);
    let corners = [-3.0, 0.0, 3.0]
        .iter()
        .flat_map(|&a| [-3.0, 1.0, 3.0].map(|b| vec![a, b]));
    let scalar = Check::over(RIG_TOL, pairs.into_iter().chain(corners), |p| {
        Ok((multiply_with(&e, p[0], p[1])? - p[0] * p[1]).abs())
    })?;
    out.push(LawResult::new("rig-mult-scalar", scalar));
    Ok(out)
}

const ACTION_BUNDLES: [TrivialBundle; 4] = [
    TrivialBundle {
        base_dim: 0,
        fibre_dim: 2,
    },
    TrivialBundle {
        base_dim: 1,
        fibre_dim: 1,
    },
    TrivialBundle {
        base_dim: 2,
        fibre_dim: 3,
    },
    TrivialBundle {
        base_dim: 3,
        fibre_dim: 3,
    },
];

/// Fibrewise maps on the bundle `ℝ × ℝ → ℝ`, with whether each is linear.
pub const LINEARITY_FAMILY: [(&str, bool); 8] = [
    ("x1; 2*x2", true),
    ("x1; -3*x2", true),
    ("x1; x2*cos(x1)", true),
    ("x1^2; x2", true),
    ("x1; x2^2", false),
    ("x1; sin(x2)", false),
    ("x1; x2 + x1", false),
    ("x1; x2^3 - x2", false),
];

fn action_laws(cfg: &SuiteConfig) -> Result<Vec<LawResult>> {
    let icfg = &cfg.integrator;
    let mut laws = Vec::new();
    for b in ACTION_BUNDLES {
        let pts = cfg.points(30, cfg.law_samples, action_sample_dim(b));
        laws.extend(action_suite(b, &pts, cfg.numeric_tol, icfg)?);
    }
    let mut out = merge(laws);

    let b = TrivialBundle::new(1, 1);
    let pts = cfg.points(31, 10, 2);
    let scalars = [-2.0, 0.5, 2.0];
    let mut agreement = Check::new(cfg.numeric_tol);
    let mut wrong = Vec::new();
    for (i, (text, linear)) in LINEARITY_FAMILY.iter().enumerate() {
        let f = dsl::map(text, 2)?;
        let r = linearity_via_action(&f, b, b, &pts, &scalars, cfg.numeric_tol, icfg)?;
        let consistent = r.agreement
            && r.is_linear.passed == *linear
            && r.preserves_exp.passed == *linear
            && r.is_bundle_map.passed;
        if !consistent {
            wrong.push(i as f64);
        }
        if *linear {
            agreement.record(
                r.is_linear
                    .max_residual
                    .max(r.preserves_action.max_residual),
                &[i as f64],
            );
        }
    }
    let mut agreement = agreement.finish();
    if !wrong.is_empty() {
        agreement.passed = false;
        agreement.witness = wrong;
    }
    out.push(LawResult::new("action-linearity-equivalence", agreement));
    Ok(out)
}

/// Every registered law id, in registry order.
pub fn registered_ids() -> Vec<&'static str> {
    REGISTRY.iter().map(|l| l.id).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashSet;

    #[test]
    fn suite_names_round_trip() {
        for name in Suite::NAMES {
            assert_eq!(name.parse::<Suite>().unwrap().name(), name);
        }
        assert!("flow".parse::<Suite>().is_err());
    }

    #[test]
    fn all_suite_covers_the_registry_once() {
        let results = run_suite(Suite::All, &SuiteConfig::default()).unwrap();
        let ids: Vec<&str> = results.iter().map(|r| r.law_id).collect();
        let unique: HashSet<&str> = ids.iter().copied().collect();
        assert_eq!(unique.len(), ids.len(), "duplicate law ids");
        let registered: HashSet<&str> = registered_ids().into_iter().collect();
        assert_eq!(unique, registered);
        let failed: Vec<_> = results.iter().filter(|r| !r.passed()).collect();
        assert!(failed.is_empty(), "{failed:#?}");
    }

    #[test]
    fn merge_keeps_order_and_worst_residual() {
        let c = |r: f64| Check {
            passed: r < 1.0,
            max_residual: r,
            witness: vec![r],
        };
        let merged = merge(vec![
            LawResult::new("flow-unit", c(0.1)),
            LawResult::new("flow-action", c(0.2)),
            LawResult::new("flow-unit", c(2.0)),
        ]);
        assert_eq!(merged.len(), 2);
        assert_eq!(merged[0].law_id, "flow-unit");
        assert!(!merged[0].passed());
        assert_eq!(merged[0].check.max_residual, 2.0);
    }
}
