//! Tangent functor and structural maps on Euclidean spaces.
//!
//! All coordinate layouts follow `docs/layout.md`. In brief: an element of
//! `TX` is the flat vector `(point, direction)`, so `T²M` is
//! `(x, dx, δx, δdx)`.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::jet::{self, Jet};

/// Default absolute tolerance for the verticality precondition.
pub const VERTICALITY_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Space {
    pub dim: usize,
}

impl Space {
    pub fn new(dim: usize) -> Self {
        Space { dim }
    }

    pub fn tangent(self) -> Space {
        Space { dim: 2 * self.dim }
    }

    pub fn tangent_power(self, k: u32) -> Space {
        Space { dim: self.dim << k }
    }
}

/// Trivial differential bundle `A = ℝⁿ × ℝᵐ → ℝⁿ`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TrivialBundle {
    pub base_dim: usize,
    pub fibre_dim: usize,
}

impl TrivialBundle {
    pub fn new(base_dim: usize, fibre_dim: usize) -> Self {
        TrivialBundle {
            base_dim,
            fibre_dim,
        }
    }

    /// The differential object `ℝᵐ`, a bundle over the point.
    pub fn object(dim: usize) -> Self {
        TrivialBundle::new(0, dim)
    }

    /// The curve object `C = ℝ` as a differential object.
    pub fn curve() -> Self {
        TrivialBundle::object(1)
    }

    /// `TM` viewed as a bundle over `M` with fibre `ℝⁿ`.
    pub fn tangent_bundle(dim: usize) -> Self {
        TrivialBundle::new(dim, dim)
    }

    pub fn total(&self) -> Space {
        Space::new(self.base_dim + self.fibre_dim)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Shape {
    Space(Space),
    Bundle(TrivialBundle),
}

impl From<Space> for Shape {
    fn from(s: Space) -> Self {
        Shape::Space(s)
    }
}

impl From<TrivialBundle> for Shape {
    fn from(b: TrivialBundle) -> Self {
        Shape::Bundle(b)
    }
}

type Evaluator = dyn Fn(&[Jet]) -> Result<Vec<Jet>> + Send + Sync;

/// A smooth map `ℝⁿ → ℝᵐ` whose evaluator accepts jets of any level.
#[derive(Clone)]
pub struct SmoothMap {
    dom: usize,
    cod: usize,
    eval: Arc<Evaluator>,
}

impl fmt::Debug for SmoothMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "SmoothMap({} -> {})", self.dom, self.cod)
    }
}

impl SmoothMap {
    /// Wraps an evaluator. The closure must return exactly `cod` values and
    /// must be built from jet arithmetic only.
    pub fn new<F>(dom: usize, cod: usize, f: F) -> Self
    where
        F: Fn(&[Jet]) -> Result<Vec<Jet>> + Send + Sync + 'static,
    {
        SmoothMap {
            dom,
            cod,
            eval: Arc::new(f),
        }
    }

    pub fn dom(&self) -> usize {
        self.dom
    }

    pub fn cod(&self) -> usize {
        self.cod
    }

    pub fn domain(&self) -> Space {
        Space::new(self.dom)
    }

    pub fn codomain(&self) -> Space {
        Space::new(self.cod)
    }

    pub fn eval(&self, z: &[Jet]) -> Result<Vec<Jet>> {
        if z.len() != self.dom {
            return Err(Error::Shape(format!(
                "map expects {} inputs, got {}",
                self.dom,
                z.len()
            )));
        }
        let out = (self.eval)(z)?;
        if out.len() != self.cod {
            return Err(Error::Shape(format!(
                "map declared {} outputs, produced {}",
                self.cod,
                out.len()
            )));
        }
        Ok(out)
    }

    pub fn eval_f64(&self, z: &[f64]) -> Result<Vec<f64>> {
        Ok(jet::primals(&self.eval(&jet::constants(z))?))
    }

    pub fn identity(n: usize) -> SmoothMap {
        SmoothMap::new(n, n, |z| Ok(z.to_vec()))
    }

    pub fn constant(dom: usize, values: Vec<f64>) -> SmoothMap {
        SmoothMap::new(dom, values.len(), move |_| Ok(jet::constants(&values)))
    }

    /// Coordinate selection `z ↦ (z[i₀], z[i₁], …)`.
    pub fn select(dom: usize, indices: Vec<usize>) -> SmoothMap {
        assert!(indices.iter().all(|i| *i < dom), "selection out of range");
        SmoothMap::new(dom, indices.len(), move |z| {
            Ok(indices.iter().map(|i| z[*i].clone()).collect())
        })
    }

    /// Projection onto the block `start..start + len`.
    pub fn block(dom: usize, start: usize, len: usize) -> SmoothMap {
        SmoothMap::select(dom, (start..start + len).collect())
    }

    /// Diagrammatic composition: `self` first, then `g`.
    pub fn then(&self, g: &SmoothMap) -> Result<SmoothMap> {
        combine(CombineMode::Compose, self, g)
    }

    pub fn pair(&self, g: &SmoothMap) -> Result<SmoothMap> {
        combine(CombineMode::Pair, self, g)
    }

    pub fn product(&self, g: &SmoothMap) -> Result<SmoothMap> {
        combine(CombineMode::Product, self, g)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CombineMode {
    /// `fg`: apply `f`, then `g`.
    Compose,
    /// `⟨f, g⟩`: same input, concatenated outputs.
    Pair,
    /// `f × g`: split input, concatenated outputs.
    Product,
}

pub fn combine(mode: CombineMode, f: &SmoothMap, g: &SmoothMap) -> Result<SmoothMap> {
    let (f, g) = (f.clone(), g.clone());
    match mode {
        CombineMode::Compose => {
            if f.cod != g.dom {
                return Err(Error::Shape(format!(
                    "cannot compose {} -> {} with {} -> {}",
                    f.dom, f.cod, g.dom, g.cod
                )));
            }
            Ok(SmoothMap::new(f.dom, g.cod, move |z| g.eval(&f.eval(z)?)))
        }
        CombineMode::Pair => {
            if f.dom != g.dom {
                return Err(Error::Shape(format!(
                    "cannot pair maps with domains {} and {}",
                    f.dom, g.dom
                )));
            }
            Ok(SmoothMap::new(f.dom, f.cod + g.cod, move |z| {
                let mut out = f.eval(z)?;
                out.extend(g.eval(z)?);
                Ok(out)
            }))
        }
        CombineMode::Product => {
            let split = f.dom;
            Ok(SmoothMap::new(f.dom + g.dom, f.cod + g.cod, move |z| {
                let mut out = f.eval(&z[..split])?;
                out.extend(g.eval(&z[split..])?);
                Ok(out)
            }))
        }
    }
}

/// `T(f)`: evaluates `f` on jets one level above the inputs and splits the
/// result on the new generator.
pub fn tangent(f: &SmoothMap) -> SmoothMap {
    let f = f.clone();
    let n = f.dom;
    let m = f.cod;
    SmoothMap::new(2 * n, 2 * m, move |z| {
        let level = jet::max_level(z);
        let lifted: Vec<Jet> = (0..n).map(|i| Jet::seed(&z[i], &z[n + i], level)).collect();
        let y = f.eval(&lifted)?;
        let mut points = Vec::with_capacity(2 * m);
        let mut dirs = Vec::with_capacity(m);
        for yj in &y {
            let (p, d) = yj.truncate(level + 1).split_at(level + 1);
            points.push(p);
            dirs.push(d);
        }
        points.extend(dirs);
        Ok(points)
    })
}

/// `Tᵏ(f)`.
pub fn tangent_power(f: &SmoothMap, k: u32) -> SmoothMap {
    (0..k).fold(f.clone(), |g, _| tangent(&g))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StructuralKind {
    P,
    Zero,
    Plus,
    Ell,
    Flip,
    Neg,
    HatP,
    BundleLift,
    BundleMu,
}

/// Builds a structural map in the fixed layout. Space kinds applied to a
/// bundle act on its total space.
pub fn structural_map(kind: StructuralKind, shape: impl Into<Shape>) -> Result<SmoothMap> {
    use StructuralKind::*;
    let shape = shape.into();
    let n = match shape {
        Shape::Space(s) => s.dim,
        Shape::Bundle(b) => b.total().dim,
    };
    let map = match kind {
        P => SmoothMap::block(2 * n, 0, n),
        Zero => SmoothMap::new(n, 2 * n, move |z| {
            let mut out = z.to_vec();
            out.extend(std::iter::repeat_n(Jet::zero(), n));
            Ok(out)
        }),
        Plus => SmoothMap::new(3 * n, 2 * n, move |z| {
            let mut out = z[..n].to_vec();
            out.extend((0..n).map(|i| &z[n + i] + &z[2 * n + i]));
            Ok(out)
        }),
        Neg => SmoothMap::new(2 * n, 2 * n, move |z| {
            let mut out = z[..n].to_vec();
            out.extend(z[n..].iter().map(|v| -v));
            Ok(out)
        }),
        Ell => SmoothMap::new(2 * n, 4 * n, move |z| {
            let mut out = z[..n].to_vec();
            out.extend(std::iter::repeat_n(Jet::zero(), 2 * n));
            out.extend_from_slice(&z[n..]);
            Ok(out)
        }),
        Flip => {
            let mut idx: Vec<usize> = (0..n).collect();
            idx.extend(2 * n..3 * n);
            idx.extend(n..2 * n);
            idx.extend(3 * n..4 * n);
            SmoothMap::select(4 * n, idx)
        }
        HatP | BundleLift | BundleMu => {
            let Shape::Bundle(b) = shape else {
                return Err(Error::IncompatibleShape(format!(
                    "{kind:?} requires a trivial bundle"
                )));
            };
            bundle_map(kind, b)?
        }
    };
    Ok(map)
}

fn bundle_map(kind: StructuralKind, b: TrivialBundle) -> Result<SmoothMap> {
    let (n, m) = (b.base_dim, b.fibre_dim);
    let total = n + m;
    Ok(match kind {
        StructuralKind::HatP => {
            if n != 0 {
                return Err(Error::IncompatibleShape(format!(
                    "hat_p needs a differential object, bundle has base dimension {n}"
                )));
            }
            SmoothMap::block(2 * m, m, m)
        }
        StructuralKind::BundleLift => SmoothMap::new(total, 2 * total, move |z| {
            let mut out = z[..n].to_vec();
            out.extend(std::iter::repeat_n(Jet::zero(), m + n));
            out.extend_from_slice(&z[n..]);
            Ok(out)
        }),
        StructuralKind::BundleMu => SmoothMap::new(n + 2 * m, 2 * total, move |z| {
            let mut out = z[..total].to_vec();
            out.extend(std::iter::repeat_n(Jet::zero(), n));
            out.extend_from_slice(&z[total..]);
            Ok(out)
        }),
        _ => unreachable!("not a bundle structural map"),
    })
}

/// `{f}` for `f: X → TA` landing in vertical vectors: `(x, a, 0, w) ↦ (x, w)`.
pub fn vertical_bracket(f: &SmoothMap, bundle: TrivialBundle) -> Result<SmoothMap> {
    vertical_bracket_with_tol(f, bundle, VERTICALITY_TOL)
}

pub fn vertical_bracket_with_tol(
    f: &SmoothMap,
    bundle: TrivialBundle,
    tol: f64,
) -> Result<SmoothMap> {
    let total = bundle.total().dim;
    if f.cod != 2 * total {
        return Err(Error::Shape(format!(
            "vertical bracket over a bundle of total dimension {total} needs {} outputs, map has {}",
            2 * total,
            f.cod
        )));
    }
    let f = f.clone();
    let n = bundle.base_dim;
    Ok(SmoothMap::new(f.dom, total, move |z| {
        let y = f.eval(z)?;
        let residual = y[total..total + n]
            .iter()
            .fold(0.0, |r: f64, v| r.max(v.primal().abs()));
        if residual > tol {
            return Err(Error::Verticality {
                point: jet::primals(z),
                residual,
            });
        }
        let mut out = y[..n].to_vec();
        out.extend_from_slice(&y[total + n..]);
        Ok(out)
    }))
}

/// Rebuilds a vertical `f: X → TA` from its bracket and its point,
/// `⟨f p, {f} π₁⟩ μ`.
pub fn reconstruct_vertical(
    bracket: &SmoothMap,
    point: &SmoothMap,
    bundle: TrivialBundle,
) -> Result<SmoothMap> {
    let n = bundle.base_dim;
    let m = bundle.fibre_dim;
    let fibre = bracket.then(&SmoothMap::block(n + m, n, m))?;
    point
        .pair(&fibre)?
        .then(&structural_map(StructuralKind::BundleMu, bundle)?)
}

/// `TA × TB → T(A × B)`: `(a, da, b, db) ↦ (a, b, da, db)`.
pub fn interleave(a: usize, b: usize) -> SmoothMap {
    let mut idx: Vec<usize> = (0..a).collect();
    idx.extend(2 * a..2 * a + b);
    idx.extend(a..2 * a);
    idx.extend(2 * a + b..2 * a + 2 * b);
    SmoothMap::select(2 * (a + b), idx)
}

/// Inverse of [`interleave`]: `(a, b, da, db) ↦ (a, da, b, db)`.
pub fn deinterleave(a: usize, b: usize) -> SmoothMap {
    let mut idx: Vec<usize> = (0..a).collect();
    idx.extend(a + b..2 * a + b);
    idx.extend(a..a + b);
    idx.extend(2 * a + b..2 * (a + b));
    SmoothMap::select(2 * (a + b), idx)
}

/// Difference in the fibre of `p: T(ℝᵏ) → ℝᵏ` of two maps with the same
/// point: `⟨f, g(−)⟩` then `+`. Only the point of `f` is kept.
pub fn fibre_difference(f: &SmoothMap, g: &SmoothMap) -> Result<SmoothMap> {
    if f.cod != g.cod || f.cod % 2 != 0 {
        return Err(Error::Shape(format!(
            "fibre difference needs equal even codomains, got {} and {}",
            f.cod, g.cod
        )));
    }
    let k = f.cod / 2;
    let neg_g = g.then(&structural_map(StructuralKind::Neg, Space::new(k))?)?;
    let mut idx: Vec<usize> = (0..2 * k).collect();
    idx.extend(3 * k..4 * k);
    f.pair(&neg_g)?
        .then(&SmoothMap::select(4 * k, idx))?
        .then(&structural_map(StructuralKind::Plus, Space::new(k))?)
}
