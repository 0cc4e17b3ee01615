//! Explicit Runge–Kutta integration over jets.
//!
//! Integration from 0 to `t` is carried out in the rescaled time
//! `s ∈ [0, 1]` on `y' = t·V̂(y)`, so that `t` itself may be a jet. Step-size
//! control reads primal values only: the step sequence is a function of the
//! primal inputs, and jet coefficients are the exact derivatives of the
//! numerical map that was computed.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::jet::{self, Jet};
use crate::kernel::SmoothMap;

/// Largest rescaled step. Bounds the step even where the primal error
/// estimate vanishes, which would otherwise leave derivative coefficients
/// under-resolved.
const MAX_STEP: f64 = 1.0 / 32.0;
const MIN_STEP: f64 = 1e-14;
const BLOWUP_NORM: f64 = 1e12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "snake_case")]
pub enum IntegratorConfig {
    /// Dormand–Prince 5(4) with primal error control.
    Rk45 {
        abs_tol: f64,
        rel_tol: f64,
        max_steps: usize,
    },
    /// Classical RK4 with steps of at most `h` in real time.
    Rk4 { h: f64 },
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        IntegratorConfig::Rk45 {
            abs_tol: 1e-10,
            rel_tol: 1e-10,
            max_steps: 1_000_000,
        }
    }
}

impl IntegratorConfig {
    pub fn rk45(tol: f64) -> Self {
        IntegratorConfig::Rk45 {
            abs_tol: tol,
            rel_tol: tol,
            max_steps: 1_000_000,
        }
    }
}

const A: [&[f64]; 7] = [
    &[],
    &[0.2],
    &[3.0 / 40.0, 9.0 / 40.0],
    &[44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0],
    &[
        19372.0 / 6561.0,
        -25360.0 / 2187.0,
        64448.0 / 6561.0,
        -212.0 / 729.0,
    ],
    &[
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
    ],
    &[
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ],
];
/// Fifth-order weights minus embedded fourth-order weights.
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

/// `y + h Σ wᵢ kᵢ`.
fn combo(y: &[Jet], h: f64, weights: &[f64], ks: &[Vec<Jet>]) -> Vec<Jet> {
    y.iter()
        .enumerate()
        .map(|(i, yi)| {
            let mut acc = yi.clone();
            for (w, k) in weights.iter().zip(ks) {
                if *w != 0.0 {
                    acc = acc + k[i].scale(h * w);
                }
            }
            acc
        })
        .collect()
}

struct Rhs<'a> {
    vhat: &'a SmoothMap,
    t: &'a Jet,
}

impl Rhs<'_> {
    fn eval(&self, y: &[Jet]) -> Result<Vec<Jet>> {
        Ok(self
            .vhat
            .eval(y)?
            .into_iter()
            .map(|v| self.t * &v)
            .collect())
    }
}

/// Integrates `y' = V̂(y)` from `y0` for time `t`.
pub fn integrate_field(
    vhat: &SmoothMap,
    t: &Jet,
    y0: &[Jet],
    cfg: &IntegratorConfig,
) -> Result<Vec<Jet>> {
    if y0.len() != vhat.dom() {
        return Err(Error::Shape(format!(
            "initial state has {} coordinates, field expects {}",
            y0.len(),
            vhat.dom()
        )));
    }
    if !t.primal().is_finite() {
        return Err(Error::Shape(format!("non-finite time {}", t.primal())));
    }
    let rhs = Rhs { vhat, t };
    if t.primal() == 0.0 {
        // Zero primal time: the rescaled problem is polynomial in the
        // nilpotent part of t, which one high-order step reproduces exactly.
        return match cfg {
            IntegratorConfig::Rk45 { .. } => Ok(dp_step(&rhs, y0, 1.0, rhs.eval(y0)?)?.0),
            IntegratorConfig::Rk4 { .. } => rk4_step(&rhs, y0, 1.0),
        };
    }
    match *cfg {
        IntegratorConfig::Rk45 {
            abs_tol,
            rel_tol,
            max_steps,
        } => dormand_prince(&rhs, y0, abs_tol, rel_tol, max_steps),
        IntegratorConfig::Rk4 { h } => {
            if !(h > 0.0) {
                return Err(Error::Shape(format!("RK4 step must be positive, got {h}")));
            }
            let steps = (t.primal().abs() / h).ceil().max(1.0) as usize;
            let hs = 1.0 / steps as f64;
            let mut y = y0.to_vec();
            for i in 0..steps {
                y = rk4_step(&rhs, &y, hs)?;
                guard(&y, (i + 1) as f64 * hs, t.primal())?;
            }
            Ok(y)
        }
    }
}

fn guard(y: &[Jet], s: f64, t: f64) -> Result<()> {
    let norm = y.iter().map(|v| v.primal().abs()).fold(0.0, f64::max);
    if !(norm <= BLOWUP_NORM) || !y.iter().all(Jet::is_finite) {
        return Err(Error::StepSizeCollapse { t_reached: s * t });
    }
    Ok(())
}

fn rk4_step(rhs: &Rhs, y: &[Jet], h: f64) -> Result<Vec<Jet>> {
    let k1 = rhs.eval(y)?;
    let k2 = rhs.eval(&combo(y, h, &[0.5], std::slice::from_ref(&k1)))?;
    let k3 = rhs.eval(&combo(y, h, &[0.5], std::slice::from_ref(&k2)))?;
    let k4 = rhs.eval(&combo(y, h, &[1.0], std::slice::from_ref(&k3)))?;
    Ok(combo(
        y,
        h,
        &[1.0 / 6.0, 1.0 / 3.0, 1.0 / 3.0, 1.0 / 6.0],
        &[k1, k2, k3, k4],
    ))
}

/// One Dormand–Prince step. Returns the fifth-order state, the final stage
/// (reused as the next first stage) and the primal error vector.
fn dp_step(rhs: &Rhs, y: &[Jet], h: f64, k1: Vec<Jet>) -> Result<(Vec<Jet>, Vec<Jet>, Vec<f64>)> {
    let mut ks = vec![k1];
    for a in A.iter().skip(1).take(5) {
        let stage = combo(y, h, a, &ks);
        ks.push(rhs.eval(&stage)?);
    }
    let y5 = combo(y, h, A[6], &ks);
    let k7 = rhs.eval(&y5)?;
    ks.push(k7);
    let err = (0..y.len())
        .map(|i| {
            h * E
                .iter()
                .zip(&ks)
                .map(|(e, k)| e * k[i].primal())
                .sum::<f64>()
        })
        .collect();
    let k7 = ks.pop().expect("seven stages");
    Ok((y5, k7, err))
}

fn scaled_norm(v: &[f64], y: &[f64], z: &[f64], abs_tol: f64, rel_tol: f64) -> f64 {
    if v.is_empty() {
        return 0.0;
    }
    let sum: f64 = v
        .iter()
        .zip(y.iter().zip(z))
        .map(|(e, (a, b))| {
            let sc = abs_tol + rel_tol * a.abs().max(b.abs());
            (e / sc).powi(2)
        })
        .sum();
    (sum / v.len() as f64).sqrt()
}

fn initial_step(rhs: &Rhs, y0: &[Jet], f0: &[Jet], abs_tol: f64, rel_tol: f64) -> Result<f64> {
    let yp = jet::primals(y0);
    let fp = jet::primals(f0);
    let d0 = scaled_norm(&yp, &yp, &yp, abs_tol, rel_tol);
    let d1 = scaled_norm(&fp, &yp, &yp, abs_tol, rel_tol);
    let h0 = if d0 < 1e-5 || d1 < 1e-5 {
        1e-6
    } else {
        0.01 * d0 / d1
    };
    let h0 = h0.min(MAX_STEP);
    let y1 = combo(y0, h0, &[1.0], &[f0.to_vec()]);
    let f1 = jet::primals(&rhs.eval(&y1)?);
    let df: Vec<f64> = f1.iter().zip(&fp).map(|(a, b)| (a - b) / h0).collect();
    let d2 = scaled_norm(&df, &yp, &yp, abs_tol, rel_tol);
    let h1 = if d1.max(d2) <= 1e-15 {
        (h0 * 1e-3).max(1e-6)
    } else {
        (0.01 / d1.max(d2)).powf(0.2)
    };
    Ok((100.0 * h0).min(h1).min(MAX_STEP))
}

fn dormand_prince(
    rhs: &Rhs,
    y0: &[Jet],
    abs_tol: f64,
    rel_tol: f64,
    max_steps: usize,
) -> Result<Vec<Jet>> {
    let t = rhs.t.primal();
    let mut y = y0.to_vec();
    let mut k1 = rhs.eval(&y)?;
    guard(&k1, 0.0, t)?;
    let mut h = initial_step(rhs, &y, &k1, abs_tol, rel_tol)?;
    let mut s = 0.0_f64;
    let mut steps = 0usize;
    while s < 1.0 {
        if steps >= max_steps {
            return Err(Error::MaxStepsExceeded {
                t_reached: s * t,
                steps,
            });
        }
        steps += 1;
        let last = h >= 1.0 - s;
        let step = if last { 1.0 - s } else { h };
        let (y5, k7, err) = dp_step(rhs, &y, step, k1.clone())?;
        let yp = jet::primals(&y);
        let y5p = jet::primals(&y5);
        let en = scaled_norm(&err, &yp, &y5p, abs_tol, rel_tol);
        if !en.is_finite() {
            guard(&y5, s, t)?;
            return Err(Error::StepSizeCollapse { t_reached: s * t });
        }
        let factor = if en == 0.0 {
            5.0
        } else {
            (0.9 * en.powf(-0.2)).clamp(0.2, 5.0)
        };
        if en <= 1.0 {
            s = if last { 1.0 } else { s + step };
            y = y5;
            k1 = k7;
            guard(&y, s, t)?;
            h = (step * factor).min(MAX_STEP);
        } else {
            h = step * factor.min(1.0);
        }
        if h < MIN_STEP * s.max(MIN_STEP) || (s < 1.0 && s + h == s) {
            return Err(Error::StepSizeCollapse { t_reached: s * t });
        }
    }
    Ok(y)
}
