//! Weights `a : Ω → [0, ∞)` and numerical certification of the decay classes
//! `a(x) ≤ C(a(y) + |x − y|^κ)` (and the modulus version with `ω(|x − y|)`).
//!
//! Membership cannot be decided from finitely many samples. The estimates here
//! are suprema over sampled node pairs; [`zk_membership_verdict`] repeats them
//! under mesh refinement and fits the growth exponent `s` in `C(h) ∼ h^{−s}`.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::domain_grid::pairs::{max_over_pairs, PairPlan};
use crate::domain_grid::{build_disk_mesh, dist, norm, Mesh, Point};
use crate::tolerances::{PAIR_BUDGET, STABLE_EXPONENT};
use crate::{Error, Result};

type PointMap = Arc<dyn Fn(&Point) -> f64 + Send + Sync>;
type GradMap = Arc<dyn Fn(&Point) -> [f64; 2] + Send + Sync>;

/// Nonnegative bounded weight with an optional analytic gradient.
#[derive(Clone)]
pub struct Weight {
    eval: PointMap,
    grad: Option<GradMap>,
    pub sup_bound: f64,
    pub label: String,
}

impl fmt::Debug for Weight {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Weight")
            .field("label", &self.label)
            .field("sup_bound", &self.sup_bound)
            .finish()
    }
}

impl Weight {
    pub fn new(
        label: impl Into<String>,
        sup_bound: f64,
        eval: impl Fn(&Point) -> f64 + Send + Sync + 'static,
    ) -> Self {
        Self {
            eval: Arc::new(eval),
            grad: None,
            sup_bound,
            label: label.into(),
        }
    }

    pub fn with_gradient(
        mut self,
        grad: impl Fn(&Point) -> [f64; 2] + Send + Sync + 'static,
    ) -> Self {
        self.grad = Some(Arc::new(grad));
        self
    }

    #[inline]
    pub fn eval(&self, x: &Point) -> f64 {
        (self.eval)(x)
    }

    pub fn gradient(&self, x: &Point) -> Option<[f64; 2]> {
        self.grad.as_ref().map(|g| g(x))
    }

    pub fn has_gradient(&self) -> bool {
        self.grad.is_some()
    }

    pub fn constant(c: f64) -> Self {
        Self::new(format!("const({c})"), c.abs(), move |_| c).with_gradient(|_| [0.0, 0.0])
    }

    pub fn zero() -> Self {
        Self::constant(0.0)
    }

    /// `a^β`, with `sup_bound^β`.
    pub fn powered(&self, beta: f64) -> Self {
        let inner = self.eval.clone();
        let grad = self.grad.clone();
        let mut w = Self::new(
            format!("({})^{beta}", self.label),
            self.sup_bound.powf(beta),
            move |x| inner(x).powf(beta),
        );
        if let Some(g) = grad {
            let inner = self.eval.clone();
            w = w.with_gradient(move |x| {
                let a = inner(x);
                let d = g(x);
                let s = if a > 0.0 {
                    beta * a.powf(beta - 1.0)
                } else {
                    0.0
                };
                [s * d[0], s * d[1]]
            });
        }
        w
    }

    /// `exp(−1/|x|²)` extended by zero at the origin.
    pub fn exp_decay() -> Self {
        Self::new("exp(-1/|x|^2)", (-1.0f64).exp(), |x| {
            let r2 = x[0] * x[0] + x[1] * x[1];
            if r2 == 0.0 {
                0.0
            } else {
                (-1.0 / r2).exp()
            }
        })
        .with_gradient(|x| {
            let r2 = x[0] * x[0] + x[1] * x[1];
            if r2 == 0.0 {
                return [0.0, 0.0];
            }
            let s = 2.0 * (-1.0 / r2).exp() / (r2 * r2);
            [s * x[0], s * x[1]]
        })
    }
}

/// `x ↦ |x − x₀|^κ` on the unit disk.
pub fn power_weight(kappa: f64, x0: Point) -> Result<Weight> {
    if !(kappa > 0.0) {
        return Err(Error::Parameter(format!("κ must be positive, got {kappa}")));
    }
    let sup = (1.0 + norm(&x0)).powf(kappa);
    Ok(Weight::new(format!("|x-x0|^{kappa}"), sup, move |x| {
        dist(x, &x0).powf(kappa)
    })
    .with_gradient(move |x| {
        let d = [x[0] - x0[0], x[1] - x0[1]];
        let r = norm(&d);
        if r == 0.0 {
            return [0.0, 0.0];
        }
        let s = kappa * r.powf(kappa - 2.0);
        [s * d[0], s * d[1]]
    }))
}

/// Increasing modulus `ω` with `ω(0) = 0`.
#[derive(Clone)]
pub struct Modulus {
    omega: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    pub label: String,
}

impl fmt::Debug for Modulus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Modulus")
            .field("label", &self.label)
            .finish()
    }
}

impl Modulus {
    pub fn new(
        label: impl Into<String>,
        omega: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        Self {
            omega: Arc::new(omega),
            label: label.into(),
        }
    }

    pub fn power(kappa: f64) -> Self {
        Self::new(format!("t^{kappa}"), move |t| t.powf(kappa))
    }

    #[inline]
    pub fn eval(&self, t: f64) -> f64 {
        (self.omega)(t)
    }

    /// Checks `ω(0) = 0` and monotonicity on a sample of `[0, 2]`.
    pub fn validate(&self) -> Result<()> {
        let z = self.eval(0.0);
        if z != 0.0 {
            return Err(Error::InvalidModulus(format!("ω(0) = {z}")));
        }
        let mut prev = 0.0;
        for k in 1..=400 {
            let v = self.eval(k as f64 / 200.0);
            if !(v >= prev) || !v.is_finite() {
                return Err(Error::InvalidModulus(format!(
                    "not increasing near t = {}",
                    k as f64 / 200.0
                )));
            }
            prev = v;
        }
        Ok(())
    }
}

/// Sampled supremum of `a(x) / (a(y) + ω(|x − y|))`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ZkEstimate {
    /// Exponent `κ`; `None` for a general modulus.
    pub kappa: Option<f64>,
    pub modulus: String,
    pub constant: f64,
    pub witness: (Point, Point),
    pub grid_h: f64,
    pub pairs_stride: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stability {
    Stable,
    Diverging,
}

/// Refinement study of the constant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MembershipVerdict {
    pub kappa: f64,
    pub weight: String,
    pub constants: Vec<(f64, f64)>,
    pub witnesses: Vec<(Point, Point)>,
    pub fitted_exponent: f64,
    pub threshold: f64,
    pub verdict: Stability,
}

impl MembershipVerdict {
    pub fn is_stable(&self) -> bool {
        self.verdict == Stability::Stable
    }

    /// Largest constant seen in the study.
    pub fn max_constant(&self) -> f64 {
        self.constants.iter().map(|c| c.1).fold(1.0, f64::max)
    }
}

/// Options for the pair sweeps.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairOptions {
    pub budget: usize,
    /// Pairs within `near_factor · h` are always visited.
    pub near_factor: f64,
}

impl Default for PairOptions {
    fn default() -> Self {
        Self {
            budget: PAIR_BUDGET,
            near_factor: 3.0,
        }
    }
}

/// Ratio for one pair with the 0/0 convention: `a(x) = 0` contributes at most 1.
#[inline]
fn pair_ratio(ax: f64, ay: f64, gap: f64) -> f64 {
    if ax == 0.0 {
        return if ay + gap == 0.0 { 1.0 } else { 0.0 };
    }
    let den = ay + gap;
    if den == 0.0 {
        f64::INFINITY
    } else {
        ax / den
    }
}

fn node_values(a: &Weight, mesh: &Mesh) -> Result<Vec<f64>> {
    let vals: Vec<f64> = mesh.nodes().iter().map(|x| a.eval(x)).collect();
    if let Some((i, v)) = vals.iter().enumerate().find(|(_, v)| !(**v >= 0.0)) {
        let p = mesh.nodes()[i];
        return Err(Error::InvalidWeight(format!("a({}, {}) = {v}", p[0], p[1])));
    }
    Ok(vals)
}

fn generic_estimate(
    a: &Weight,
    gap: &(dyn Fn(f64) -> f64 + Sync),
    mesh: &Mesh,
    opts: PairOptions,
) -> Result<(f64, (Point, Point), usize)> {
    let vals = node_values(a, mesh)?;
    let pts = mesh.nodes();
    let plan = PairPlan::new(pts.len(), opts.near_factor * mesh.h(), opts.budget);
    let best = max_over_pairs(pts, plan, |i, j| {
        pair_ratio(vals[i], vals[j], gap(dist(&pts[i], &pts[j])))
    });
    // the ratio tends to 1 as y → x when a(x) > 0, and is ≥ 1 by the 0/0 convention otherwise
    let (c, i, j) = best.map_or((1.0, 0, 0), |(v, i, j)| (v.max(1.0), i, j));
    Ok((c, (pts[i], pts[j]), plan.stride))
}

/// Sampled `Z^κ` constant over mesh node pairs.
pub fn zk_constant_estimate(a: &Weight, kappa: f64, mesh: &Mesh) -> Result<ZkEstimate> {
    zk_constant_estimate_with(a, kappa, mesh, PairOptions::default())
}

pub fn zk_constant_estimate_with(
    a: &Weight,
    kappa: f64,
    mesh: &Mesh,
    opts: PairOptions,
) -> Result<ZkEstimate> {
    if !(kappa > 0.0) {
        return Err(Error::Parameter(format!("κ must be positive, got {kappa}")));
    }
    let (constant, witness, stride) = generic_estimate(a, &|t| t.powf(kappa), mesh, opts)?;
    Ok(ZkEstimate {
        kappa: Some(kappa),
        modulus: format!("t^{kappa}"),
        constant,
        witness,
        grid_h: mesh.h(),
        pairs_stride: stride,
    })
}

/// Sampled `Z^ω` constant.
pub fn zomega_constant_estimate(a: &Weight, omega: &Modulus, mesh: &Mesh) -> Result<ZkEstimate> {
    omega.validate()?;
    let (constant, witness, stride) =
        generic_estimate(a, &|t| omega.eval(t), mesh, PairOptions::default())?;
    Ok(ZkEstimate {
        kappa: None,
        modulus: omega.label.clone(),
        constant,
        witness,
        grid_h: mesh.h(),
        pairs_stride: stride,
    })
}

/// Least-squares slope `s` of `log C` against `−log h`.
pub fn fitted_growth_exponent(constants: &[(f64, f64)]) -> f64 {
    let n = constants.len() as f64;
    let xs: Vec<f64> = constants.iter().map(|c| -c.0.ln()).collect();
    let ys: Vec<f64> = constants.iter().map(|c| c.1.ln()).collect();
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    if sxx == 0.0 {
        0.0
    } else {
        sxy / sxx
    }
}

fn check_h_list(h_list: &[f64]) -> Result<()> {
    if h_list.len() < 3 {
        return Err(Error::Parameter(
            "refinement study needs at least three mesh sizes".into(),
        ));
    }
    if h_list.windows(2).any(|w| !(w[1] < w[0])) || !(h_list[h_list.len() - 1] > 0.0) {
        return Err(Error::Parameter(
            "mesh sizes must be positive and strictly decreasing".into(),
        ));
    }
    Ok(())
}

/// Refinement study on the unit disk: constants per `h`, fitted growth exponent,
/// verdict stable iff the exponent is at most the threshold.
pub fn zk_membership_verdict(a: &Weight, kappa: f64, h_list: &[f64]) -> Result<MembershipVerdict> {
    zk_membership_verdict_with(a, kappa, h_list, STABLE_EXPONENT, PairOptions::default())
}

pub fn zk_membership_verdict_with(
    a: &Weight,
    kappa: f64,
    h_list: &[f64],
    threshold: f64,
    opts: PairOptions,
) -> Result<MembershipVerdict> {
    check_h_list(h_list)?;
    let mut constants = Vec::with_capacity(h_list.len());
    let mut witnesses = Vec::with_capacity(h_list.len());
    for &h in h_list {
        let mesh = build_disk_mesh(1.0, h)?;
        let est = zk_constant_estimate_with(a, kappa, &mesh, opts)?;
        constants.push((h, est.constant));
        witnesses.push(est.witness);
    }
    let fitted_exponent = fitted_growth_exponent(&constants);
    let verdict = if fitted_exponent <= threshold {
        Stability::Stable
    } else {
        Stability::Diverging
    };
    Ok(MembershipVerdict {
        kappa,
        weight: a.label.clone(),
        constants,
        witnesses,
        fitted_exponent,
        threshold,
        verdict,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerRuleReport {
    pub kappa: f64,
    pub beta: f64,
    pub base: MembershipVerdict,
    pub powered: MembershipVerdict,
    pub agree: bool,
}

/// Compares the studies for `(a, κ)` and `(a^β, βκ)`; they must agree.
pub fn power_rule_check(
    a: &Weight,
    kappa: f64,
    beta: f64,
    h_list: &[f64],
) -> Result<PowerRuleReport> {
    if !(kappa > 0.0 && beta > 0.0) {
        return Err(Error::Parameter("κ and β must be positive".into()));
    }
    let base = zk_membership_verdict(a, kappa, h_list)?;
    let powered = zk_membership_verdict(&a.powered(beta), beta * kappa, h_list)?;
    let agree = base.verdict == powered.verdict;
    Ok(PowerRuleReport {
        kappa,
        beta,
        base,
        powered,
        agree,
    })
}

/// Lipschitz seminorm estimate of `a^{1/κ}` over node pairs.
pub fn root_lipschitz_check(a: &Weight, kappa: f64, mesh: &Mesh) -> Result<f64> {
    if !(kappa > 0.0) {
        return Err(Error::Parameter(format!("κ must be positive, got {kappa}")));
    }
    let vals: Vec<f64> = node_values(a, mesh)?
        .into_iter()
        .map(|v| v.powf(1.0 / kappa))
        .collect();
    Ok(crate::domain_grid::node_holder_seminorm(
        mesh,
        &vals,
        1.0,
        PAIR_BUDGET,
    ))
}

/// Number of unit directions used by [`glaeser_check`].
pub const GLAESER_DIRECTIONS: usize = 16;

/// Smallest `C` with `|∂a/∂ν(z)| ≤ C a(z)^{α/(1+α)}` over mesh nodes and the
/// sixteen directions `2πk/16`. Returns `∞` when `a(z) = 0` at a node with a
/// nonzero directional derivative.
pub fn glaeser_check(a: &Weight, alpha: f64, mesh: &Mesh) -> Result<f64> {
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(Error::Parameter(format!(
            "α must lie in (0, 1], got {alpha}"
        )));
    }
    if !a.has_gradient() {
        return Err(Error::Precondition(format!(
            "weight {} has no analytic gradient",
            a.label
        )));
    }
    let dirs: Vec<[f64; 2]> = (0..GLAESER_DIRECTIONS)
        .map(|k| {
            let t = 2.0 * std::f64::consts::PI * k as f64 / GLAESER_DIRECTIONS as f64;
            [t.cos(), t.sin()]
        })
        .collect();
    let power = alpha / (1.0 + alpha);
    let mut best: f64 = 0.0;
    for z in mesh.nodes() {
        let av = a.eval(z);
        if !(av >= 0.0) {
            return Err(Error::InvalidWeight(format!(
                "a({}, {}) = {av}",
                z[0], z[1]
            )));
        }
        let g = a.gradient(z).expect("checked above");
        let dmax = dirs
            .iter()
            .map(|d| (g[0] * d[0] + g[1] * d[1]).abs())
            .fold(0.0, f64::max);
        if dmax == 0.0 {
            continue;
        }
        if av == 0.0 {
            return Ok(f64::INFINITY);
        }
        best = best.max(dmax / av.powf(power));
    }
    Ok(best)
}
