//! The double-phase energy `∫ |∇u|^p + a(x)|∇u|^q`, its modular and
//! Luxemburg norm, the sandwich class of general integrands, variable-exponent
//! and orthotropic variants, and the parameter-range classifier.

use std::fmt;
use std::sync::Arc;

use num::rational::BigRational;
use num::{BigInt, One};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::domain_grid::pairs::{max_over_pairs, PairPlan};
use crate::domain_grid::{
    dist, gradient, integrate, integrate_singular, ordered_sum, CellVector, Field, GridFunction,
    Mesh, Point, QuadratureRule,
};
use crate::tolerances::{LUXEMBURG_BRACKET, LUXEMBURG_RTOL, PAIR_BUDGET};
use crate::weights::Weight;
use crate::{Error, Result};

/// `M(x, t) = t^p + a(x) t^q`.
#[derive(Debug, Clone)]
pub struct DoublePhaseIntegrand {
    pub p: f64,
    pub q: f64,
    pub a: Weight,
}

impl DoublePhaseIntegrand {
    pub fn new(p: f64, q: f64, a: Weight) -> Result<Self> {
        if !(p > 1.0 && q > p && q.is_finite()) {
            return Err(Error::Parameter(format!(
                "need 1 < p < q < ∞, got p = {p}, q = {q}"
            )));
        }
        Ok(Self { p, q, a })
    }

    pub fn m_eval(&self, x: &Point, t: f64) -> Result<f64> {
        if !(t >= 0.0) {
            return Err(Error::Parameter(format!("M(x, t) needs t ≥ 0, got {t}")));
        }
        Ok(self.m_with(self.a.eval(x), t))
    }

    /// `M` for a known weight value.
    #[inline]
    pub fn m_with(&self, ax: f64, t: f64) -> f64 {
        if t == 0.0 {
            return 0.0;
        }
        let tp = t.powf(self.p);
        if ax == 0.0 {
            tp
        } else {
            tp + ax * t.powf(self.q)
        }
    }

    /// `∫_c a` for every cell.
    pub fn cell_weights(&self, mesh: &Mesh) -> Result<Vec<f64>> {
        cell_weight_integrals(&self.a, mesh, &QuadratureRule::default())
    }
}

/// `∫_c a dx` per cell, in cell order.
pub fn cell_weight_integrals(a: &Weight, mesh: &Mesh, rule: &QuadratureRule) -> Result<Vec<f64>> {
    (0..mesh.num_cells())
        .into_par_iter()
        .map(|c| {
            let tri = mesh.cell_points(c);
            let mut s = 0.0;
            for (x, w) in rule.mapped(&tri) {
                let v = a.eval(&x);
                if !(v >= 0.0 && v.is_finite()) {
                    return Err(Error::InvalidWeight(format!("a({}, {}) = {v}", x[0], x[1])));
                }
                s += w * v;
            }
            Ok(s)
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergyBreakdown {
    pub p_part: f64,
    pub q_part: f64,
    pub total: f64,
}

impl EnergyBreakdown {
    fn from_parts(p_part: f64, q_part: f64) -> Self {
        Self {
            p_part,
            q_part,
            total: p_part + q_part,
        }
    }
}

fn norm2(g: &CellVector) -> f64 {
    g[0].hypot(g[1])
}

/// Energy of a cellwise-constant gradient with precomputed `∫_c a`.
pub fn energy_from_gradients(
    integrand: &DoublePhaseIntegrand,
    mesh: &Mesh,
    grads: &[CellVector],
    cell_weights: &[f64],
) -> Result<EnergyBreakdown> {
    if grads.len() != mesh.num_cells() || cell_weights.len() != mesh.num_cells() {
        return Err(Error::Parameter(
            "gradient or weight array does not match the mesh".into(),
        ));
    }
    let mut pp = Vec::with_capacity(grads.len());
    let mut qq = Vec::with_capacity(grads.len());
    for (c, g) in grads.iter().enumerate() {
        let t = norm2(g);
        if !t.is_finite() {
            let x = mesh.centroid(c);
            return Err(Error::Evaluation {
                x: x[0],
                y: x[1],
                value: t,
            });
        }
        if t == 0.0 {
            pp.push(0.0);
            qq.push(0.0);
            continue;
        }
        pp.push(mesh.geom()[c].area * t.powf(integrand.p));
        qq.push(if cell_weights[c] == 0.0 {
            0.0
        } else {
            cell_weights[c] * t.powf(integrand.q)
        });
    }
    Ok(EnergyBreakdown::from_parts(
        ordered_sum(pp),
        ordered_sum(qq),
    ))
}

/// Energy of a piecewise-linear function.
pub fn energy(integrand: &DoublePhaseIntegrand, u: &GridFunction<'_>) -> Result<EnergyBreakdown> {
    let mesh = u.mesh();
    let grads = gradient(u)?;
    energy_from_gradients(integrand, mesh, &grads, &integrand.cell_weights(mesh)?)
}

/// Point where `|∇u|` may blow up, with the power of `|x − at|` that bounds
/// each part of the integrand.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SingularPoint {
    pub at: Point,
    pub p_exponent: f64,
    pub q_exponent: f64,
}

/// Energy of an analytically given gradient field, integrated at quadrature points.
pub fn energy_of_gradient_field(
    integrand: &DoublePhaseIntegrand,
    mesh: &Mesh,
    grad: &(dyn Fn(&Point) -> [f64; 2] + Sync),
    singular: Option<SingularPoint>,
) -> Result<EnergyBreakdown> {
    let rule = QuadratureRule::default();
    let pf = |x: &Point, _c: usize| {
        let t = grad(x).iter().map(|v| v * v).sum::<f64>().sqrt();
        if t == 0.0 {
            0.0
        } else {
            t.powf(integrand.p)
        }
    };
    let qf = |x: &Point, _c: usize| {
        let ax = integrand.a.eval(x);
        if ax == 0.0 {
            return 0.0;
        }
        let t = grad(x).iter().map(|v| v * v).sum::<f64>().sqrt();
        if t == 0.0 {
            0.0
        } else {
            ax * t.powf(integrand.q)
        }
    };
    let (p_part, q_part) = match singular {
        Some(s) => (
            integrate_singular(&pf, mesh, &rule, s.at, s.p_exponent)?,
            integrate_singular(&qf, mesh, &rule, s.at, s.q_exponent)?,
        ),
        None => (
            integrate(&Field::CellFn(&pf), mesh, &rule)?,
            integrate(&Field::CellFn(&qf), mesh, &rule)?,
        ),
    };
    Ok(EnergyBreakdown::from_parts(p_part, q_part))
}

/// `∫ M(x, |ξ|)` for a cellwise-constant vector field.
pub fn modular(integrand: &DoublePhaseIntegrand, mesh: &Mesh, xi: &[CellVector]) -> Result<f64> {
    Ok(energy_from_gradients(integrand, mesh, xi, &integrand.cell_weights(mesh)?)?.total)
}

/// `∫ M(x, |ξ₁ − ξ₂|)`.
pub fn modular_distance(
    integrand: &DoublePhaseIntegrand,
    mesh: &Mesh,
    xi1: &[CellVector],
    xi2: &[CellVector],
) -> Result<f64> {
    if xi1.len() != xi2.len() {
        return Err(Error::Parameter(
            "vector fields have different lengths".into(),
        ));
    }
    let diff: Vec<CellVector> = xi1
        .iter()
        .zip(xi2)
        .map(|(a, b)| [a[0] - b[0], a[1] - b[1]])
        .collect();
    modular(integrand, mesh, &diff)
}

/// Luxemburg norm `inf{λ > 0 : ∫ M(x, |ξ|/λ) ≤ 1}` by bisection in `log λ`.
pub fn luxemburg_norm(
    integrand: &DoublePhaseIntegrand,
    mesh: &Mesh,
    xi: &[CellVector],
) -> Result<f64> {
    if xi.len() != mesh.num_cells() {
        return Err(Error::Parameter(
            "vector field does not match the mesh".into(),
        ));
    }
    let weights = integrand.cell_weights(mesh)?;
    let mut pp = Vec::with_capacity(xi.len());
    let mut qq = Vec::with_capacity(xi.len());
    for (c, g) in xi.iter().enumerate() {
        let t = norm2(g);
        if !t.is_finite() {
            return Err(Error::Unbounded);
        }
        if t > 0.0 {
            pp.push(mesh.geom()[c].area * t.powf(integrand.p));
            qq.push(weights[c] * t.powf(integrand.q));
        }
    }
    let (pm, qm) = (ordered_sum(pp), ordered_sum(qq));
    if pm == 0.0 && qm == 0.0 {
        return Ok(0.0);
    }
    // ∫ M(x, |ξ|/λ) = pm λ^{-p} + qm λ^{-q}
    let f = |lam: f64| pm * lam.powf(-integrand.p) + qm * lam.powf(-integrand.q);
    let (mut lo, mut hi) = LUXEMBURG_BRACKET;
    let (flo, fhi) = (f(lo), f(hi));
    if !(fhi <= 1.0) {
        return Err(Error::Unbounded);
    }
    if !(flo >= fhi) {
        return Err(Error::Precondition("modular is not decreasing in λ".into()));
    }
    if flo <= 1.0 {
        return Err(Error::Parameter(format!("norm lies below {lo}")));
    }
    while hi / lo - 1.0 > LUXEMBURG_RTOL {
        let mid = (lo * hi).sqrt();
        if f(mid) > 1.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(hi)
}

/// Tail of a family of nonnegative cell fields over small sets.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TailProfile {
    /// `(ε / |Ω|, sup over the family of the largest integral over a set of measure ε)`.
    pub points: Vec<(f64, f64)>,
}

/// Default measure fractions probed by [`uniform_integrability_probe`].
pub const TAIL_FRACTIONS: [f64; 3] = [0.1, 0.05, 0.01];

/// For each `ε`, the largest integral of any member over a set of measure
/// `ε|Ω|`: cells are taken by decreasing value, the last one fractionally.
pub fn uniform_integrability_probe(
    mesh: &Mesh,
    family: &[Vec<f64>],
    fractions: &[f64],
) -> Result<TailProfile> {
    if family.is_empty() {
        return Err(Error::Parameter("family must not be empty".into()));
    }
    let vol = mesh.volume();
    let mut sorted = Vec::with_capacity(family.len());
    for f in family {
        if f.len() != mesh.num_cells() {
            return Err(Error::Parameter("field does not match the mesh".into()));
        }
        if let Some(c) = f.iter().position(|v| !(*v >= 0.0 && v.is_finite())) {
            let x = mesh.centroid(c);
            return Err(Error::Evaluation {
                x: x[0],
                y: x[1],
                value: f[c],
            });
        }
        let mut idx: Vec<usize> = (0..f.len()).collect();
        idx.sort_by(|&i, &j| f[j].total_cmp(&f[i]).then(i.cmp(&j)));
        sorted.push(idx);
    }
    let mut points = Vec::with_capacity(fractions.len());
    for &frac in fractions {
        let budget = frac * vol;
        let mut best: f64 = 0.0;
        for (f, idx) in family.iter().zip(&sorted) {
            let mut left = budget;
            let mut acc = 0.0;
            for &c in idx {
                if left <= 0.0 {
                    break;
                }
                let area = mesh.geom()[c].area;
                let take = area.min(left);
                acc += f[c] * take;
                left -= take;
            }
            best = best.max(acc);
        }
        points.push((frac, best));
    }
    Ok(TailProfile { points })
}

/// Nodal truncation `T_k u = min(k, max(−k, u))`.
pub fn truncate<'m>(u: &GridFunction<'m>, k: f64) -> Result<GridFunction<'m>> {
    if !(k > 0.0) {
        return Err(Error::Parameter(format!(
            "truncation level must be positive, got {k}"
        )));
    }
    Ok(u.map(|v| v.clamp(-k, k)))
}

type SandwichMap = Arc<dyn Fn(&Point, f64, &[f64; 2]) -> f64 + Send + Sync>;

/// General integrand `G(x, z, ξ)` with `ν M ≤ G ≤ L (M + Λ)`.
#[derive(Clone)]
pub struct SandwichIntegrand {
    g: SandwichMap,
    pub nu: f64,
    pub l: f64,
    lambda: Arc<dyn Fn(&Point) -> f64 + Send + Sync>,
}

impl fmt::Debug for SandwichIntegrand {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SandwichIntegrand")
            .field("nu", &self.nu)
            .field("l", &self.l)
            .finish()
    }
}

impl SandwichIntegrand {
    pub fn new(
        g: impl Fn(&Point, f64, &[f64; 2]) -> f64 + Send + Sync + 'static,
        nu: f64,
        l: f64,
        lambda: impl Fn(&Point) -> f64 + Send + Sync + 'static,
    ) -> Result<Self> {
        if !(nu > 0.0 && nu < 1.0 && l > 1.0) {
            return Err(Error::Parameter(format!(
                "need ν ∈ (0, 1) and L > 1, got ν = {nu}, L = {l}"
            )));
        }
        Ok(Self {
            g: Arc::new(g),
            nu,
            l,
            lambda: Arc::new(lambda),
        })
    }

    pub fn eval(&self, x: &Point, z: f64, xi: &[f64; 2]) -> f64 {
        (self.g)(x, z, xi)
    }

    pub fn lambda(&self, x: &Point) -> f64 {
        (self.lambda)(x)
    }
}

/// Sample `(x, z, ξ)`.
pub type Triple = (Point, f64, [f64; 2]);

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SandwichReport {
    pub checked: usize,
    /// `min (G − ν M)`.
    pub lower_margin: f64,
    /// `min (L (M + Λ) − G)`.
    pub upper_margin: f64,
}

/// Deterministic triples: every `stride`-th node, `z ∈ {−3, …, 3}` and `ξ` on a
/// polar grid of magnitudes `{0, 0.1, 1, 10}` and eight directions.
pub fn default_sandwich_samples(mesh: &Mesh, stride: usize) -> Vec<Triple> {
    let mut out = Vec::new();
    for x in mesh.nodes().iter().step_by(stride.max(1)) {
        for zi in -3..=3 {
            for &r in &[0.0, 0.1, 1.0, 10.0] {
                for k in 0..8 {
                    let t = std::f64::consts::PI * k as f64 / 4.0;
                    out.push((*x, zi as f64, [r * t.cos(), r * t.sin()]));
                    if r == 0.0 {
                        break;
                    }
                }
            }
        }
    }
    out
}

/// Checks both sandwich inequalities on the samples; a violation is an error
/// naming the witness triple.
pub fn sandwich_check(
    g: &SandwichIntegrand,
    integrand: &DoublePhaseIntegrand,
    samples: &[Triple],
) -> Result<SandwichReport> {
    let mut lower_margin = f64::INFINITY;
    let mut upper_margin = f64::INFINITY;
    for (x, z, xi) in samples {
        let m = integrand.m_eval(x, xi[0].hypot(xi[1]))?;
        let gv = g.eval(x, *z, xi);
        let lam = g.lambda(x);
        let lo = gv - g.nu * m;
        let up = g.l * (m + lam) - gv;
        // relative slack for rounding in G and M
        let eps = 1e-12 * (gv.abs() + m + lam.abs());
        if !(lo >= -eps) || !(up >= -eps) {
            let side = if !(lo >= -eps) { "lower" } else { "upper" };
            return Err(Error::BoundViolation(format!(
                "{side} sandwich bound fails at x = ({}, {}), z = {z}, ξ = ({}, {}): G = {gv}, M = {m}, Λ = {lam}",
                x[0], x[1], xi[0], xi[1]
            )));
        }
        lower_margin = lower_margin.min(lo);
        upper_margin = upper_margin.min(up);
    }
    Ok(SandwichReport {
        checked: samples.len(),
        lower_margin,
        upper_margin,
    })
}

type ExponentMap = Arc<dyn Fn(&Point) -> f64 + Send + Sync>;
type Coefficient = Arc<dyn Fn(&Point, f64) -> f64 + Send + Sync>;

/// `b(x, u) (|∇u|^{p(x)} + a(x) |∇u|^{q(x)})` with `ν_b ≤ b ≤ L_b`.
#[derive(Clone)]
pub struct VariableExponentIntegrand {
    p: ExponentMap,
    q: ExponentMap,
    pub a: Weight,
    b: Coefficient,
    pub nu_b: f64,
    pub l_b: f64,
}

impl fmt::Debug for VariableExponentIntegrand {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("VariableExponentIntegrand")
            .field("a", &self.a)
            .field("nu_b", &self.nu_b)
            .field("l_b", &self.l_b)
            .finish()
    }
}

impl VariableExponentIntegrand {
    pub fn new(
        p: impl Fn(&Point) -> f64 + Send + Sync + 'static,
        q: impl Fn(&Point) -> f64 + Send + Sync + 'static,
        a: Weight,
        b: impl Fn(&Point, f64) -> f64 + Send + Sync + 'static,
        nu_b: f64,
        l_b: f64,
    ) -> Result<Self> {
        if !(nu_b > 0.0 && l_b >= nu_b) {
            return Err(Error::Parameter(format!(
                "need 0 < ν_b ≤ L_b, got {nu_b}, {l_b}"
            )));
        }
        Ok(Self {
            p: Arc::new(p),
            q: Arc::new(q),
            a,
            b: Arc::new(b),
            nu_b,
            l_b,
        })
    }

    /// Constant exponents and `b ≡ 1`.
    pub fn constant(p: f64, q: f64, a: Weight) -> Result<Self> {
        Self::new(move |_| p, move |_| q, a, |_, _| 1.0, 1.0, 1.0)
    }

    pub fn p(&self, x: &Point) -> f64 {
        (self.p)(x)
    }

    pub fn q(&self, x: &Point) -> f64 {
        (self.q)(x)
    }

    /// Checks `1 < p < q` at every node.
    pub fn validate(&self, mesh: &Mesh) -> Result<()> {
        for x in mesh.nodes() {
            let (p, q) = (self.p(x), self.q(x));
            if !(p > 1.0) {
                return Err(Error::InvalidExponent(format!(
                    "p({}, {}) = {p}",
                    x[0], x[1]
                )));
            }
            if !(q > p) {
                return Err(Error::InvalidExponent(format!(
                    "q({}, {}) = {q} ≤ p = {p}",
                    x[0], x[1]
                )));
            }
        }
        Ok(())
    }
}

/// Quadrature of the variable-exponent energy.
pub fn energy_variable_exponent(
    ve: &VariableExponentIntegrand,
    u: &GridFunction<'_>,
) -> Result<f64> {
    let mesh = u.mesh();
    ve.validate(mesh)?;
    let grads = gradient(u)?;
    let vals = u.values();
    let rule = QuadratureRule::default();
    let parts: Result<Vec<f64>> = (0..mesh.num_cells())
        .into_par_iter()
        .map(|c| {
            let t = norm2(&grads[c]);
            let tri = mesh.cell_points(c);
            let [i, j, k] = mesh.cells()[c];
            let mut s = 0.0;
            for (r, w) in rule.points.iter().zip(&rule.weights) {
                let x = [
                    tri[0][0] + r[0] * (tri[1][0] - tri[0][0]) + r[1] * (tri[2][0] - tri[0][0]),
                    tri[0][1] + r[0] * (tri[1][1] - tri[0][1]) + r[1] * (tri[2][1] - tri[0][1]),
                ];
                let p = ve.p(&x);
                if !(p > 1.0) {
                    return Err(Error::InvalidExponent(format!(
                        "p({}, {}) = {p}",
                        x[0], x[1]
                    )));
                }
                if t == 0.0 {
                    continue;
                }
                let uv = (1.0 - r[0] - r[1]) * vals[i] + r[0] * vals[j] + r[1] * vals[k];
                let ax = ve.a.eval(&x);
                let m = if ax == 0.0 {
                    t.powf(p)
                } else {
                    t.powf(p) + ax * t.powf(ve.q(&x))
                };
                s += w * (ve.b)(&x, uv) * m;
            }
            Ok(s * 2.0 * mesh.geom()[c].area)
        })
        .collect();
    Ok(ordered_sum(parts?))
}

/// `sup |p(x) − p(y)| · log(1/|x − y|)` over sampled node pairs with `|x − y| < 1/2`.
pub fn log_holder_seminorm(p: &(dyn Fn(&Point) -> f64 + Sync), mesh: &Mesh) -> f64 {
    let pts = mesh.nodes();
    let vals: Vec<f64> = pts.iter().map(p).collect();
    let plan = PairPlan::new(pts.len(), 2.0 * mesh.h(), PAIR_BUDGET);
    max_over_pairs(pts, plan, |i, j| {
        let d = dist(&pts[i], &pts[j]);
        if d >= 0.5 {
            return 0.0;
        }
        (vals[i] - vals[j]).abs() * (1.0 / d).ln()
    })
    .map_or(0.0, |(v, _, _)| v.max(0.0))
}

/// One coordinate of an orthotropic integrand.
#[derive(Clone)]
pub struct OrthotropicComponent {
    pub p: f64,
    pub q: f64,
    pub a: Weight,
    b: Coefficient,
}

impl fmt::Debug for OrthotropicComponent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("OrthotropicComponent")
            .field("p", &self.p)
            .field("q", &self.q)
            .field("a", &self.a)
            .finish()
    }
}

impl OrthotropicComponent {
    pub fn new(
        p: f64,
        q: f64,
        a: Weight,
        b: impl Fn(&Point, f64) -> f64 + Send + Sync + 'static,
    ) -> Result<Self> {
        if !(p > 1.0 && q > p) {
            return Err(Error::Parameter(format!(
                "need 1 < p_i < q_i, got {p}, {q}"
            )));
        }
        Ok(Self {
            p,
            q,
            a,
            b: Arc::new(b),
        })
    }
}

/// `Σ_i ∫ b_i(x, u) (|∂_i u|^{p_i} + a_i(x) |∂_i u|^{q_i})`.
#[derive(Debug, Clone)]
pub struct OrthotropicIntegrand {
    pub components: [OrthotropicComponent; 2],
}

pub fn energy_orthotropic(oi: &OrthotropicIntegrand, u: &GridFunction<'_>) -> Result<f64> {
    let mesh = u.mesh();
    let grads = gradient(u)?;
    let vals = u.values();
    let rule = QuadratureRule::default();
    let parts: Result<Vec<f64>> = (0..mesh.num_cells())
        .into_par_iter()
        .map(|c| {
            let tri = mesh.cell_points(c);
            let [i, j, k] = mesh.cells()[c];
            let mut s = 0.0;
            for (r, w) in rule.points.iter().zip(&rule.weights) {
                let x = [
                    tri[0][0] + r[0] * (tri[1][0] - tri[0][0]) + r[1] * (tri[2][0] - tri[0][0]),
                    tri[0][1] + r[0] * (tri[1][1] - tri[0][1]) + r[1] * (tri[2][1] - tri[0][1]),
                ];
                let uv = (1.0 - r[0] - r[1]) * vals[i] + r[0] * vals[j] + r[1] * vals[k];
                for (d, comp) in oi.components.iter().enumerate() {
                    let t = grads[c][d].abs();
                    if t == 0.0 {
                        continue;
                    }
                    let ax = comp.a.eval(&x);
                    let m = if ax == 0.0 {
                        t.powf(comp.p)
                    } else {
                        t.powf(comp.p) + ax * t.powf(comp.q)
                    };
                    s += w * (comp.b)(&x, uv) * m;
                }
            }
            let v = s * 2.0 * mesh.geom()[c].area;
            if v.is_finite() {
                Ok(v)
            } else {
                let x = mesh.centroid(c);
                Err(Error::Evaluation {
                    x: x[0],
                    y: x[1],
                    value: v,
                })
            }
        })
        .collect();
    Ok(ordered_sum(parts?))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Regime {
    #[serde(rename = "NoGap-I")]
    NoGapI,
    #[serde(rename = "NoGap-Hölder")]
    NoGapHolder,
    #[serde(rename = "NoGap-Morrey")]
    NoGapMorrey,
    #[serde(rename = "Gap-Sharpness")]
    GapSharpness,
    #[serde(rename = "Outside-Theorems")]
    OutsideTheorems,
}

impl Regime {
    pub fn as_str(&self) -> &'static str {
        match self {
            Regime::NoGapI => "NoGap-I",
            Regime::NoGapHolder => "NoGap-Hölder",
            Regime::NoGapMorrey => "NoGap-Morrey",
            Regime::GapSharpness => "Gap-Sharpness",
            Regime::OutsideTheorems => "Outside-Theorems",
        }
    }

    /// Condition that produced the verdict.
    pub fn condition(&self) -> &'static str {
        match self {
            Regime::NoGapI => "q <= p + kappa",
            Regime::NoGapHolder => "kappa >= (q - p)(1 - gamma)",
            Regime::NoGapMorrey => "q <= p + kappa * max(p/n, 1)",
            Regime::GapSharpness => "p < n < n + kappa < q",
            Regime::OutsideTheorems => "none",
        }
    }
}

impl fmt::Display for Regime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegimeVerdict {
    pub n: usize,
    pub p: f64,
    pub q: f64,
    pub kappa: f64,
    pub gamma: Option<f64>,
    pub verdict: Regime,
    pub condition: String,
}

fn exact(x: f64) -> BigRational {
    BigRational::from_float(x).expect("finite values were checked")
}

/// Checks the ranges `n ≥ 2`, `1 < p < q`, `κ > 0`, `γ ∈ (0, 1]`.
pub fn validate_parameters(n: usize, p: f64, q: f64, kappa: f64, gamma: Option<f64>) -> Result<()> {
    if n < 2 {
        return Err(Error::Parameter(format!(
            "dimension must be at least 2, got {n}"
        )));
    }
    if !(p > 1.0 && q > p && q.is_finite()) {
        return Err(Error::Parameter(format!(
            "need 1 < p < q < ∞, got p = {p}, q = {q}"
        )));
    }
    if !(kappa > 0.0 && kappa.is_finite()) {
        return Err(Error::Parameter(format!("κ must be positive, got {kappa}")));
    }
    if let Some(g) = gamma {
        if !(g > 0.0 && g <= 1.0) {
            return Err(Error::Parameter(format!("γ must lie in (0, 1], got {g}")));
        }
    }
    Ok(())
}

/// Most specific applicable result for `(n, p, q, κ, γ)`. All inequalities are
/// decided on the exact rational values of the inputs.
pub fn regime_classify(
    n: usize,
    p: f64,
    q: f64,
    kappa: f64,
    gamma: Option<f64>,
) -> Result<RegimeVerdict> {
    validate_parameters(n, p, q, kappa, gamma)?;
    let (pr, qr, kr) = (exact(p), exact(q), exact(kappa));
    let nr = BigRational::from_integer(BigInt::from(n));
    let one = BigRational::one();

    let ratio = &pr / &nr;
    let morrey = if ratio > one { ratio } else { one.clone() };

    let verdict = if qr <= &pr + &kr {
        Regime::NoGapI
    } else if gamma.is_some_and(|g| kr >= (&qr - &pr) * (&one - exact(g))) {
        Regime::NoGapHolder
    } else if qr <= &pr + &kr * morrey {
        Regime::NoGapMorrey
    } else if pr < nr && nr < &nr + &kr && &nr + &kr < qr {
        Regime::GapSharpness
    } else {
        Regime::OutsideTheorems
    };
    Ok(RegimeVerdict {
        n,
        p,
        q,
        kappa,
        gamma,
        verdict,
        condition: verdict.condition().to_string(),
    })
}
