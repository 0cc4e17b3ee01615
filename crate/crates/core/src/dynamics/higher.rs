//! Higher-order systems, geodesics of connections, and time augmentation.

use super::flow::{flow_of, DynamicalSystem, Flow};
use super::integrator::{integrate_field, IntegratorConfig};
use crate::dsl::{self, FieldSpec};
use crate::error::{Error, Result};
use crate::jet::{self, Jet};
use crate::kernel::{structural_map, tangent_power, SmoothMap, Space, StructuralKind};
use crate::sampling::{max_abs_diff, uniform_points, Check, EXACT_TOL, LAW_SAMPLES};
use crate::vector_fields::VectorField;

/// An order-`k` system: `V: T^{k-1}M → T^kM` with `V T^j(p) = 1` for all
/// `j < k`, and `g: X → T^{k-1}M`.
#[derive(Debug, Clone)]
pub struct HigherOrderSystem {
    base_dim: usize,
    order: u32,
    field: SmoothMap,
    init: SmoothMap,
}

impl HigherOrderSystem {
    pub fn new(base_dim: usize, order: u32, field: SmoothMap, init: SmoothMap) -> Result<Self> {
        if order == 0 {
            return Err(Error::InvalidSystem("order must be at least 1".into()));
        }
        let lower = base_dim << (order - 1);
        if field.dom() != lower || field.cod() != 2 * lower {
            return Err(Error::InvalidSystem(format!(
                "order-{order} field on dimension {base_dim} must map {lower} -> {}, got {} -> {}",
                2 * lower,
                field.dom(),
                field.cod()
            )));
        }
        if init.cod() != lower {
            return Err(Error::InvalidSystem(format!(
                "initial map must land in dimension {lower}, got {}",
                init.cod()
            )));
        }
        Ok(HigherOrderSystem {
            base_dim,
            order,
            field,
            init,
        })
    }

    /// Second-order system `y'' = a(y, y')` in the layout
    /// `V(x, v) = (x, v, v, a(x, v))`.
    pub fn from_acceleration(base_dim: usize, accel: SmoothMap, init: SmoothMap) -> Result<Self> {
        if accel.dom() != 2 * base_dim || accel.cod() != base_dim {
            return Err(Error::InvalidSystem(format!(
                "acceleration must map {} -> {base_dim}, got {} -> {}",
                2 * base_dim,
                accel.dom(),
                accel.cod()
            )));
        }
        let n = base_dim;
        let field = SmoothMap::new(2 * n, 4 * n, move |z| {
            let a = accel.eval(z)?;
            let mut out = z.to_vec();
            out.extend_from_slice(&z[n..]);
            out.extend(a);
            Ok(out)
        });
        HigherOrderSystem::new(base_dim, 2, field, init)
    }

    pub fn order(&self) -> u32 {
        self.order
    }

    pub fn base_dim(&self) -> usize {
        self.base_dim
    }

    /// Points of `T^{k-1}M` coming from `(k-1)`-jets of curves: the block at
    /// bit pattern `b` holds the `popcount(b)`-th derivative. For `k ≥ 3` the
    /// section conditions can only hold on these points.
    pub fn holonomic_points(&self, seed: u64, count: usize) -> Vec<Vec<f64>> {
        let n = self.base_dim;
        let k = self.order as usize;
        uniform_points(seed, count, n * k, -2.0, 2.0)
            .into_iter()
            .map(|jet| {
                (0..1usize << (k - 1))
                    .flat_map(|b| {
                        let j = b.count_ones() as usize;
                        jet[j * n..(j + 1) * n].to_vec()
                    })
                    .collect()
            })
            .collect()
    }

    /// `V T^j(p) = 1` for every `j < k`, on the given points of `T^{k-1}M`.
    pub fn section_check(&self, samples: &[Vec<f64>], tol: f64) -> Result<Check> {
        let k = self.order;
        let mut projections = Vec::new();
        for j in 0..k {
            let inner = Space::new(self.base_dim << (k - 1 - j));
            let p = structural_map(StructuralKind::P, inner)?;
            projections.push(self.field.then(&tangent_power(&p, j))?);
        }
        Check::over(tol, samples.iter().cloned(), |z| {
            let mut worst = 0.0_f64;
            for proj in &projections {
                worst = worst.max(max_abs_diff(&proj.eval_f64(z)?, z));
            }
            Ok(worst)
        })
    }

    /// `V` as a first-order field on `T^{k-1}M`.
    pub fn first_order_field(&self) -> VectorField {
        let lower = self.field.dom();
        VectorField::new(
            self.field
                .then(&SmoothMap::block(2 * lower, lower, lower))
                .expect("shapes"),
        )
        .expect("square")
    }
}

/// Integrates the reduced system on `T^{k-1}M` and projects to `M`. The
/// section conditions are verified on seeded holonomic samples first.
pub fn solve_nth_order(
    sys: &HigherOrderSystem,
    t: f64,
    x0: &[f64],
    cfg: &IntegratorConfig,
) -> Result<Vec<f64>> {
    let pts = sys.holonomic_points(0x5ec7, LAW_SAMPLES);
    let check = sys.section_check(&pts, EXACT_TOL)?;
    if !check.passed {
        return Err(Error::InvalidSystem(format!(
            "section conditions fail with residual {:e} at {:?}",
            check.max_residual, check.witness
        )));
    }
    let y0 = sys.init.eval_f64(x0)?;
    let y = integrate_field(
        sys.first_order_field().vhat(),
        &Jet::constant(t),
        &jet::constants(&y0),
        cfg,
    )?;
    // p applied k - 1 times keeps the leading base block.
    Ok(jet::primals(&y[..sys.base_dim]))
}

/// Christoffel map `Γ(x, u)` with values `Γᵏᵢⱼ(x)uⁱuʲ`.
#[derive(Debug, Clone)]
pub struct Connection {
    dim: usize,
    christoffel: SmoothMap,
}

impl Connection {
    pub fn new(dim: usize, christoffel: SmoothMap) -> Result<Self> {
        if christoffel.dom() != 2 * dim || christoffel.cod() != dim {
            return Err(Error::Shape(format!(
                "Christoffel map must be {} -> {dim}, got {} -> {}",
                2 * dim,
                christoffel.dom(),
                christoffel.cod()
            )));
        }
        Ok(Connection { dim, christoffel })
    }

    /// Parses over `x1..xn` (base) and `u1..un` (velocity).
    pub fn from_dsl(text: &str, dim: usize) -> Result<Self> {
        Connection::new(dim, dsl::compile(&dsl::parse_with_velocity(text, dim)?))
    }

    pub fn flat(dim: usize) -> Self {
        Connection::new(dim, SmoothMap::constant(2 * dim, vec![0.0; dim])).expect("shapes")
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn christoffel(&self) -> &SmoothMap {
        &self.christoffel
    }

    /// `Γ(x, αu) = α²Γ(x, u)` for `α ∈ {−1.5, 0.5, 2}` at each sample.
    pub fn check_quadratic(&self, samples: &[Vec<f64>], tol: f64) -> Result<Check> {
        let n = self.dim;
        Check::over(tol, samples.iter().cloned(), |z| {
            let base = self.christoffel.eval_f64(z)?;
            let mut worst = 0.0_f64;
            for alpha in [-1.5, 0.5, 2.0] {
                let mut w = z.to_vec();
                for u in &mut w[n..] {
                    *u *= alpha;
                }
                let scaled: Vec<f64> = base.iter().map(|g| g * alpha * alpha).collect();
                worst = worst.max(max_abs_diff(&self.christoffel.eval_f64(&w)?, &scaled));
            }
            Ok(worst)
        })
    }
}

/// Geodesic spray `(x, u) ↦ (u, −Γ(x, u))` on `TM`.
pub fn geodesic_field(conn: &Connection) -> VectorField {
    let n = conn.dim;
    let gamma = conn.christoffel.clone();
    VectorField::new(SmoothMap::new(2 * n, 2 * n, move |z| {
        let g = gamma.eval(z)?;
        let mut out = z[n..].to_vec();
        out.extend(g.iter().map(|v| -v));
        Ok(out)
    }))
    .expect("square")
}

pub fn geodesic_flow(conn: &Connection, cfg: &IntegratorConfig) -> Flow {
    flow_of(&geodesic_field(conn), cfg)
}

/// `‖β'' + Γ(β, β')‖∞` along the base curves `β(t) = π₀γ(t, (x, u))`, with
/// derivatives taken by level-2 jets in `t`.
pub fn acceleration_residual(
    flow: &Flow,
    conn: &Connection,
    samples: &[Vec<f64>],
    times: &[f64],
    tol: f64,
) -> Result<Check> {
    let n = conn.dim;
    let mut points = Vec::new();
    for s in samples {
        for &t in times {
            let mut p = vec![t];
            p.extend_from_slice(s);
            points.push(p);
        }
    }
    Check::over(tol, points, |p| {
        let t1 = Jet::lift(&Jet::constant(p[0]), &Jet::constant(1.0));
        let t2 = Jet::lift(&t1, &Jet::constant(1.0));
        let y = flow.eval_jets(&t2, &jet::constants(&p[1..]))?;
        let beta: Vec<f64> = y[..n].iter().map(|v| v.coeff(0)).collect();
        let vel: Vec<f64> = y[..n].iter().map(|v| v.coeff(1)).collect();
        let acc: Vec<f64> = y[..n].iter().map(|v| v.coeff(3)).collect();
        let mut z = beta;
        z.extend(vel);
        let g = conn.christoffel.eval_f64(&z)?;
        Ok(acc
            .iter()
            .zip(&g)
            .map(|(a, g)| (a + g).abs())
            .fold(0.0, f64::max))
    })
}

/// `y' = f(y, t)` as the autonomous system on `M × ℝ` with clock `τ' = 1`,
/// started at `(x₀, 0)`.
pub fn augment_time(spec: &FieldSpec) -> Result<DynamicalSystem> {
    if !spec.time_dependent || spec.len() != spec.arity {
        return Err(Error::InvalidSystem(
            "time augmentation needs a time-dependent spec with one component per coordinate"
                .into(),
        ));
    }
    let n = spec.arity;
    let f = dsl::compile(spec);
    let vhat = f.pair(&SmoothMap::constant(n + 1, vec![1.0]))?;
    let init = SmoothMap::identity(n).pair(&SmoothMap::constant(n, vec![0.0]))?;
    DynamicalSystem::new(VectorField::new(vhat)?, init)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::flow::integrate;

    #[test]
    fn damped_oscillator() {
        let accel = dsl::map("-x2 - x1", 2).unwrap();
        let init = SmoothMap::constant(0, vec![0.0, 1.0]);
        let sys = HigherOrderSystem::from_acceleration(1, accel, init).unwrap();
        let y = solve_nth_order(&sys, 1.0, &[], &IntegratorConfig::default()).unwrap();
        let w = 3f64.sqrt() / 2.0;
        let want = (-0.5f64).exp() * w.sin() / w;
        assert!((y[0] - want).abs() < 1e-8);
    }

    #[test]
    fn broken_section_is_rejected() {
        let field = dsl::map("x1; x2; x1; x1", 2).unwrap();
        let sys =
            HigherOrderSystem::new(1, 2, field, SmoothMap::constant(0, vec![0.0, 1.0])).unwrap();
        assert!(matches!(
            solve_nth_order(&sys, 1.0, &[], &IntegratorConfig::default()),
            Err(Error::InvalidSystem(_))
        ));
    }

    #[test]
    fn flat_geodesics_are_lines() {
        let f = geodesic_flow(&Connection::flat(2), &IntegratorConfig::default());
        let y = f.eval(1.5, &[1.0, -1.0, 0.5, 2.0]).unwrap();
        assert!(max_abs_diff(&y, &[1.75, 2.0, 0.5, 2.0]) < 1e-12);
    }

    #[test]
    fn non_quadratic_christoffel_detected() {
        let c = Connection::from_dsl("u1; u2^2", 2).unwrap();
        let pts = uniform_points(1, 10, 4, -2.0, 2.0);
        assert!(!c.check_quadratic(&pts, 1e-9).unwrap().passed);
    }

    #[test]
    fn forced_linear_equation() {
        let spec = dsl::parse("x1 + cos(t)", 1, true).unwrap();
        let sys = augment_time(&spec).unwrap();
        let y = integrate(&sys, 1.0, &[0.0], &IntegratorConfig::default()).unwrap();
        let e = std::f64::consts::E;
        assert!((y[0] - (e + 1f64.sin() - 1f64.cos()) / 2.0).abs() < 1e-8);
        assert!((y[1] - 1.0).abs() < 1e-12);
    }
}
