//! Scalar tower used to evaluate every smooth map.
//!
//! A level-k jet is a truncated polynomial in k independent nilpotent
//! generators `ε₀ … ε_{k-1}` with `εᵢ² = 0`. Coefficients are indexed by the
//! bitmask of the generators in the monomial, so index 0 is the primal value.
//! Splitting on the top generator exhibits a level-k jet as a pair
//! `(primal, tangent)` of level-(k-1) jets, which is exactly the nested dual
//! number `Dual<Dual<…<f64>>>`; the flat layout avoids the recursion.
//!
//! Mixed-level arithmetic embeds the lower-level operand as a jet that does
//! not depend on the extra generators.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use smallvec::SmallVec;

use crate::error::{Error, Result};

type Coeffs = SmallVec<[f64; 8]>;

#[derive(Clone)]
pub struct Jet {
    coeffs: Coeffs,
}

impl Jet {
    pub fn constant(value: f64) -> Self {
        let mut coeffs = Coeffs::new();
        coeffs.push(value);
        Jet { coeffs }
    }

    pub fn zero() -> Self {
        Self::constant(0.0)
    }

    /// Builds a jet from raw coefficients; `coeffs.len()` must be a power of two.
    pub fn from_coeffs(coeffs: &[f64]) -> Self {
        assert!(
            coeffs.len().is_power_of_two(),
            "jet coefficient count must be a power of two"
        );
        Jet {
            coeffs: Coeffs::from_slice(coeffs),
        }
    }

    /// A level `max(level(primal), level(tangent)) + 1` jet whose top
    /// generator carries `tangent`.
    pub fn lift(primal: &Jet, tangent: &Jet) -> Self {
        let level = primal.level().max(tangent.level());
        let p = primal.promote(level);
        let t = tangent.promote(level);
        let mut coeffs = Coeffs::with_capacity(2 * p.coeffs.len());
        coeffs.extend_from_slice(&p.coeffs);
        coeffs.extend_from_slice(&t.coeffs);
        Jet { coeffs }
    }

    /// Seeds a fresh top generator: `value + ε_top · direction`, placed at
    /// level `above + 1`.
    pub fn seed(value: &Jet, direction: &Jet, above: usize) -> Self {
        let level = above.max(value.level()).max(direction.level());
        Jet::lift(&value.promote(level), &direction.promote(level))
    }

    pub fn level(&self) -> usize {
        self.coeffs.len().trailing_zeros() as usize
    }

    pub fn primal(&self) -> f64 {
        self.coeffs[0]
    }

    pub fn coeff(&self, mask: usize) -> f64 {
        self.coeffs.get(mask).copied().unwrap_or(0.0)
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    /// Re-embeds at a higher level with zero coefficients on the new
    /// generators. Never lowers the level.
    pub fn promote(&self, level: usize) -> Jet {
        let len = 1usize << level;
        if len <= self.coeffs.len() {
            return self.clone();
        }
        let mut coeffs = self.coeffs.clone();
        coeffs.resize(len, 0.0);
        Jet { coeffs }
    }

    /// Splits on the top generator of a level-`level` view of this jet.
    /// Returns `(primal, tangent)` at level `level - 1`.
    pub fn split_at(&self, level: usize) -> (Jet, Jet) {
        assert!(level >= 1, "cannot split a level-0 jet");
        let full = self.promote(level);
        let half = 1usize << (level - 1);
        if full.coeffs.len() > 2 * half {
            // Higher generators are present; project them out of the view.
            panic!("split_at({level}) on a level-{} jet", full.level());
        }
        let p = Jet {
            coeffs: Coeffs::from_slice(&full.coeffs[..half]),
        };
        let t = Jet {
            coeffs: Coeffs::from_slice(&full.coeffs[half..]),
        };
        (p, t)
    }

    /// The part of the jet that does not involve the nilpotent generators
    /// beyond `level`.
    pub fn truncate(&self, level: usize) -> Jet {
        let len = (1usize << level).min(self.coeffs.len());
        Jet {
            coeffs: Coeffs::from_slice(&self.coeffs[..len]),
        }
    }

    pub fn is_finite(&self) -> bool {
        self.coeffs.iter().all(|c| c.is_finite())
    }

    pub fn scale(&self, k: f64) -> Jet {
        Jet {
            coeffs: self.coeffs.iter().map(|c| c * k).collect(),
        }
    }

    fn binary(&self, other: &Jet, f: impl Fn(f64, f64) -> f64) -> Jet {
        let level = self.level().max(other.level());
        let a = self.promote(level);
        let b = other.promote(level);
        Jet {
            coeffs: a
                .coeffs
                .iter()
                .zip(b.coeffs.iter())
                .map(|(x, y)| f(*x, *y))
                .collect(),
        }
    }

    fn product(&self, other: &Jet) -> Jet {
        if self.coeffs.len() == 1 {
            return other.scale(self.coeffs[0]);
        }
        if other.coeffs.len() == 1 {
            return self.scale(other.coeffs[0]);
        }
        let level = self.level().max(other.level());
        let a = self.promote(level);
        let b = other.promote(level);
        let n = a.coeffs.len();
        let mut out = Coeffs::from_elem(0.0, n);
        for s in 0..n {
            let mut acc = 0.0;
            let mut t = s;
            loop {
                acc += a.coeffs[t] * b.coeffs[s ^ t];
                if t == 0 {
                    break;
                }
                t = (t - 1) & s;
            }
            out[s] = acc;
        }
        Jet { coeffs: out }
    }

    /// Evaluates `Σ_j series[j] · (self - primal)^j`, where `series[j]` is the
    /// j-th Taylor coefficient of a primitive at the primal value.
    fn taylor(&self, series: &[f64]) -> Jet {
        let level = self.level();
        debug_assert!(series.len() > level);
        let mut nil = self.clone();
        nil.coeffs[0] = 0.0;
        let mut acc = Jet::constant(series[level]);
        for j in (0..level).rev() {
            acc = acc.product(&nil);
            acc.coeffs[0] += series[j];
        }
        acc.promote(level)
    }

    pub fn exp(&self) -> Jet {
        let e = self.primal().exp();
        let series: Vec<f64> = (0..=self.level())
            .scan(1.0, |fact, j| {
                if j > 0 {
                    *fact *= j as f64;
                }
                Some(e / *fact)
            })
            .collect();
        self.taylor(&series)
    }

    pub fn sin(&self) -> Jet {
        let (s, c) = self.primal().sin_cos();
        self.taylor(&trig_series([s, c, -s, -c], self.level()))
    }

    pub fn cos(&self) -> Jet {
        let (s, c) = self.primal().sin_cos();
        self.taylor(&trig_series([c, -s, -c, s], self.level()))
    }

    pub fn tanh(&self) -> Jet {
        let y = self.primal().tanh();
        // d/dx P(tanh x) = P'(tanh x) (1 - tanh² x)
        let mut poly = vec![0.0, 1.0];
        let mut series = Vec::with_capacity(self.level() + 1);
        let mut fact = 1.0;
        for j in 0..=self.level() {
            if j > 0 {
                fact *= j as f64;
            }
            series.push(eval_poly(&poly, y) / fact);
            poly = tanh_derivative(&poly);
        }
        self.taylor(&series)
    }

    pub fn ln(&self) -> Result<Jet> {
        let a = self.primal();
        if !(a > 0.0) {
            return Err(Error::Domain { op: "ln", value: a });
        }
        let mut series = vec![a.ln()];
        for j in 1..=self.level() {
            let sign = if j % 2 == 1 { 1.0 } else { -1.0 };
            series.push(sign / (j as f64 * a.powi(j as i32)));
        }
        Ok(self.taylor(&series))
    }

    pub fn sqrt(&self) -> Result<Jet> {
        let a = self.primal();
        let has_nil = self.coeffs[1..].iter().any(|c| *c != 0.0);
        if a < 0.0 || (a == 0.0 && has_nil) || a.is_nan() {
            return Err(Error::Domain {
                op: "sqrt",
                value: a,
            });
        }
        let mut series = Vec::with_capacity(self.level() + 1);
        let mut binom = 1.0;
        for j in 0..=self.level() {
            if j > 0 {
                binom *= (0.5 - (j - 1) as f64) / j as f64;
            }
            series.push(binom * a.powf(0.5 - j as f64));
        }
        Ok(self.taylor(&series))
    }

    pub fn recip(&self) -> Result<Jet> {
        let a = self.primal();
        if a == 0.0 || a.is_nan() {
            return Err(Error::Domain {
                op: "div",
                value: a,
            });
        }
        let series: Vec<f64> = (0..=self.level())
            .map(|j| {
                let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
                sign / a.powi(j as i32 + 1)
            })
            .collect();
        Ok(self.taylor(&series))
    }

    pub fn try_div(&self, other: &Jet) -> Result<Jet> {
        Ok(self.product(&other.recip()?))
    }

    /// Integer power by repeated squaring; negative exponents go through
    /// `recip` and fail at zero.
    pub fn powi(&self, k: i32) -> Result<Jet> {
        let base = if k < 0 { self.recip()? } else { self.clone() };
        let mut e = k.unsigned_abs();
        let mut acc = Jet::constant(1.0);
        let mut sq = base;
        while e > 0 {
            if e & 1 == 1 {
                acc = acc.product(&sq);
            }
            e >>= 1;
            if e > 0 {
                sq = sq.product(&sq);
            }
        }
        Ok(acc)
    }

    /// Largest absolute coefficient difference after promotion.
    pub fn distance(&self, other: &Jet) -> f64 {
        self.binary(other, |a, b| (a - b).abs())
            .coeffs
            .iter()
            .fold(0.0, |m, c| f64::max(m, *c))
    }
}

fn trig_series(cycle: [f64; 4], level: usize) -> Vec<f64> {
    let mut fact = 1.0;
    (0..=level)
        .map(|j| {
            if j > 0 {
                fact *= j as f64;
            }
            cycle[j % 4] / fact
        })
        .collect()
}

fn eval_poly(coeffs: &[f64], y: f64) -> f64 {
    coeffs.iter().rev().fold(0.0, |acc, c| acc * y + c)
}

fn tanh_derivative(poly: &[f64]) -> Vec<f64> {
    // P'(y) * (1 - y²)
    let dp: Vec<f64> = poly
        .iter()
        .enumerate()
        .skip(1)
        .map(|(i, c)| c * i as f64)
        .collect();
    let mut out = vec![0.0; dp.len() + 2];
    for (i, c) in dp.iter().enumerate() {
        out[i] += c;
        out[i + 2] -= c;
    }
    out
}

impl PartialEq for Jet {
    fn eq(&self, other: &Jet) -> bool {
        let level = self.level().max(other.level());
        self.promote(level).coeffs == other.promote(level).coeffs
    }
}

impl fmt::Debug for Jet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.coeffs.len() == 1 {
            write!(f, "{:?}", self.coeffs[0])
        } else {
            write!(f, "Jet{:?}", self.coeffs.as_slice())
        }
    }
}

impl From<f64> for Jet {
    fn from(v: f64) -> Self {
        Jet::constant(v)
    }
}

impl<'a> Add<&'a Jet> for &'a Jet {
    type Output = Jet;
    fn add(self, rhs: &Jet) -> Jet {
        self.binary(rhs, |a, b| a + b)
    }
}

impl<'a> Sub<&'a Jet> for &'a Jet {
    type Output = Jet;
    fn sub(self, rhs: &Jet) -> Jet {
        self.binary(rhs, |a, b| a - b)
    }
}

impl<'a> Mul<&'a Jet> for &'a Jet {
    type Output = Jet;
    fn mul(self, rhs: &Jet) -> Jet {
        self.product(rhs)
    }
}

impl Neg for &Jet {
    type Output = Jet;
    fn neg(self) -> Jet {
        self.scale(-1.0)
    }
}

macro_rules! forward_owned {
    ($tr:ident, $m:ident) => {
        impl $tr<Jet> for Jet {
            type Output = Jet;
            fn $m(self, rhs: Jet) -> Jet {
                (&self).$m(&rhs)
            }
        }
        impl<'a> $tr<&'a Jet> for Jet {
            type Output = Jet;
            fn $m(self, rhs: &Jet) -> Jet {
                (&self).$m(rhs)
            }
        }
    };
}

forward_owned!(Add, add);
forward_owned!(Sub, sub);
forward_owned!(Mul, mul);

impl Neg for Jet {
    type Output = Jet;
    fn neg(self) -> Jet {
        (&self).neg()
    }
}

/// Lifts plain values to level-0 jets.
pub fn constants(xs: &[f64]) -> Vec<Jet> {
    xs.iter().map(|x| Jet::constant(*x)).collect()
}

/// Primal parts of a jet vector.
pub fn primals(xs: &[Jet]) -> Vec<f64> {
    xs.iter().map(Jet::primal).collect()
}

/// Highest level present in a jet vector.
pub fn max_level(xs: &[Jet]) -> usize {
    xs.iter().map(Jet::level).max().unwrap_or(0)
}
