//! The cone counterexample: weight `ℓ^κ` supported in the double cone
//! `V = {x_n² > Σ_{i<n} x_i²}`, the function `u*` that is constant on `V`,
//! the constants `r₁, r₂, r₃, t₀` and the two-sided bound chain separating
//! the energy of `t₀u*` from every smooth competitor.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};

use serde::{Deserialize, Serialize};

use crate::domain_grid::quadrature::PointSingularity;
use crate::domain_grid::{
    adaptive_gauss_kronrod, gauss_legendre, norm, spherical_quadrature, GridFunction, Mesh,
    NeumaierSum, Point, QuadOptions, SingularSpec, SphericalRegion,
};
use crate::energy::{
    energy, energy_of_gradient_field, DoublePhaseIntegrand, EnergyBreakdown, SingularPoint,
};
use crate::tolerances::{CHAIN_SLACK, COMPETITOR_SLACK, SAFETY_FACTOR, STRICT_GAP_RTOL};
use crate::weights::Weight;
use crate::{Error, Result};

fn check_dim(n: usize) -> Result<()> {
    if n == 2 || n == 3 {
        Ok(())
    } else {
        Err(Error::Parameter(format!(
            "dimension must be 2 or 3, got {n}"
        )))
    }
}

/// `ℓ(x) = max(x_n² − Σ_{i<n} x_i², 0) / |x|`, with `ℓ(0) = 0`.
pub fn ell_eval(x: &[f64]) -> f64 {
    let r = norm(x);
    if r == 0.0 {
        return 0.0;
    }
    let (last, rest) = x.split_last().expect("nonempty point");
    let s: f64 = rest.iter().map(|v| v * v).sum();
    (last * last - s).max(0.0) / r
}

/// Gradient of `ℓ`; zero outside the open cone.
pub fn ell_gradient(x: &[f64]) -> Vec<f64> {
    let n = x.len();
    let r = norm(x);
    let xn = x[n - 1];
    let s: f64 = x[..n - 1].iter().map(|v| v * v).sum();
    if r == 0.0 || xn * xn <= s {
        return vec![0.0; n];
    }
    let r3 = r * r * r;
    let mut g: Vec<f64> = x[..n - 1]
        .iter()
        .map(|xi| -xi * (s + 3.0 * xn * xn) / r3)
        .collect();
    g.push(xn * (3.0 * s + xn * xn) / r3);
    g
}

/// Whether `x` lies in the open cone `V` (ignoring the unit-ball restriction).
pub fn in_cone(x: &[f64]) -> bool {
    let (last, rest) = x.split_last().expect("nonempty point");
    last * last > rest.iter().map(|v| v * v).sum::<f64>()
}

/// The weight `a = ℓ^κ` on the plane; `a ≤ |x|^κ`.
pub fn cone_weight(kappa: f64) -> Result<Weight> {
    if !(kappa > 0.0) {
        return Err(Error::Parameter(format!("κ must be positive, got {kappa}")));
    }
    Ok(Weight::new(format!("cone^{kappa}"), 1.0, move |x: &Point| {
        ell_eval(x).powf(kappa)
    })
    .with_gradient(move |x: &Point| {
        let l = ell_eval(x);
        if l == 0.0 {
            return [0.0, 0.0];
        }
        let g = ell_gradient(x);
        let f = kappa * l.powf(kappa - 1.0);
        [f * g[0], f * g[1]]
    }))
}

/// Polar angle in `[0, 2π)` for `n = 2`; angle from the `x_n` axis in `[0, π]` for `n = 3`.
fn profile_angle(x: &[f64]) -> f64 {
    if x.len() == 2 {
        let t = x[1].atan2(x[0]);
        if t < 0.0 {
            t + 2.0 * PI
        } else {
            t
        }
    } else {
        (x[2] / norm(x)).clamp(-1.0, 1.0).acos()
    }
}

/// Angular profile of `u*` and its angle derivative.
fn u_star_profile(n: usize, t: f64) -> (f64, f64) {
    if n == 2 {
        if t <= FRAC_PI_4 {
            ((2.0 * t).sin(), 2.0 * (2.0 * t).cos())
        } else if t <= 3.0 * FRAC_PI_4 {
            (1.0, 0.0)
        } else if t <= 5.0 * FRAC_PI_4 {
            ((2.0 * t - PI).sin(), 2.0 * (2.0 * t - PI).cos())
        } else if t <= 7.0 * FRAC_PI_4 {
            (-1.0, 0.0)
        } else {
            ((2.0 * t).sin(), 2.0 * (2.0 * t).cos())
        }
    } else if t <= FRAC_PI_4 {
        (1.0, 0.0)
    } else if t <= 3.0 * FRAC_PI_4 {
        ((2.0 * t).sin(), 2.0 * (2.0 * t).cos())
    } else {
        (-1.0, 0.0)
    }
}

/// `u*(x)` for `x ∈ ℝ²` or `ℝ³`; `u*(0) = 0`.
pub fn u_star_eval(x: &[f64]) -> f64 {
    if norm(x) == 0.0 {
        return 0.0;
    }
    u_star_profile(x.len(), profile_angle(x)).0
}

/// `∇u*(x)`, which vanishes on the closed cone.
pub fn u_star_gradient(x: &[f64]) -> Vec<f64> {
    let n = x.len();
    let r = norm(x);
    if r == 0.0 {
        return vec![0.0; n];
    }
    let t = profile_angle(x);
    let (_, d) = u_star_profile(n, t);
    if d == 0.0 {
        return vec![0.0; n];
    }
    let f = d / r;
    if n == 2 {
        vec![-f * t.sin(), f * t.cos()]
    } else {
        let rho_xy = x[0].hypot(x[1]);
        let (cp, sp) = if rho_xy == 0.0 {
            (1.0, 0.0)
        } else {
            (x[0] / rho_xy, x[1] / rho_xy)
        };
        vec![f * t.cos() * cp, f * t.cos() * sp, -f * t.sin()]
    }
}

/// `u₀(x) = t₀|x|²u*(x)`.
pub fn u0_eval(x: &[f64], t0: f64) -> f64 {
    t0 * x.iter().map(|v| v * v).sum::<f64>() * u_star_eval(x)
}

pub fn u0_gradient(x: &[f64], t0: f64) -> Vec<f64> {
    let r2: f64 = x.iter().map(|v| v * v).sum();
    let u = u_star_eval(x);
    let g = u_star_gradient(x);
    x.iter()
        .zip(g)
        .map(|(xi, gi)| t0 * (2.0 * xi * u + r2 * gi))
        .collect()
}

/// A constant computed by two independent quadratures.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DualEstimate {
    pub value: f64,
    pub check: f64,
    pub rel_diff: f64,
    pub methods: [String; 2],
}

impl DualEstimate {
    fn new(value: f64, check: f64, methods: [&str; 2]) -> Self {
        Self {
            value,
            check,
            rel_diff: (value - check).abs() / value.abs().max(1e-300),
            methods: methods.map(String::from),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct R1Report {
    pub n: usize,
    pub q: f64,
    pub kappa: f64,
    pub estimate: DualEstimate,
    /// For `n = 3`: the value with the spherical Jacobian replaced by `ρ^{n−1}`,
    /// an upper bound for `r₁`.
    pub jacobian_bound: Option<f64>,
}

const GK_TOL: f64 = 1e-13;
const GK_INTERVALS: usize = 20_000;

fn gk(f: impl Fn(f64) -> f64, a: f64, b: f64) -> Result<f64> {
    Ok(adaptive_gauss_kronrod(f, a, b, GK_TOL, 1e-12, GK_INTERVALS)?.0)
}

/// `r₁ = ∫_V |x|^{−q(n−1)/(q−1)} a^{−1/(q−1)} dx` for `a = ℓ^κ` on the unit ball.
///
/// The product rule in spherical coordinates (with substitutions at the cone
/// edges and the origin) is checked against separable adaptive Gauss–Kronrod.
pub fn compute_r1(n: usize, q: f64, kappa: f64) -> Result<R1Report> {
    check_dim(n)?;
    if !(kappa > 0.0 && q > 1.0) {
        return Err(Error::Parameter(format!(
            "need κ > 0 and q > 1, got κ = {kappa}, q = {q}"
        )));
    }
    let nf = n as f64;
    let beta = kappa / (q - 1.0);
    let radial = nf - 1.0 - (q * (nf - 1.0) + kappa) / (q - 1.0);
    if !(radial > -1.0) {
        return Err(Error::Divergence(format!(
            "radial exponent {radial:.4} ≤ −1 (q ≤ n + κ)"
        )));
    }
    if !(beta < 1.0) {
        return Err(Error::Divergence(format!(
            "angular exponent {:.4} ≤ −1 (q ≤ κ + 1)",
            -beta
        )));
    }
    let opts = QuadOptions {
        rel_tol: 1e-9,
        start_points: 16,
        max_points: 1024,
    };
    let edge = |at: f64| PointSingularity {
        at,
        exponent: -beta,
    };
    let radial_gk = gk(|r| r.powf(radial), 0.0, 1.0)?;
    // angles are measured from the nearest cone edge, so the singular point sits
    // at an exactly representable 0: |cos 2θ| = sin 2φ on each quarter arc
    let ang = |phi: f64| (2.0 * phi).sin().powf(-beta);
    let quarter = |extra: &[(f64, f64)]| {
        let mut angles: Vec<Vec<(f64, f64)>> = extra.iter().map(|&iv| vec![iv]).collect();
        angles.push(vec![(0.0, FRAC_PI_4)]);
        angles
    };
    let mut angular = vec![vec![]; n - 2];
    angular.push(vec![edge(0.0)]);
    let sing = SingularSpec {
        radial_exponent: radial,
        angular,
    };
    match n {
        2 => {
            let region = SphericalRegion {
                radial: (0.0, 1.0),
                angles: quarter(&[]),
            };
            // V ∩ S¹ is four quarter arcs mirrored about the cone edges
            let product = 4.0
                * spherical_quadrature(
                    2,
                    |r, a| r.powf(radial) * ang(a[0]),
                    &region,
                    &sing,
                    &opts,
                )?
                .value;
            let separable = radial_gk * 4.0 * gk(ang, 0.0, FRAC_PI_4)?;
            Ok(R1Report {
                n,
                q,
                kappa,
                estimate: DualEstimate::new(
                    product,
                    separable,
                    ["product Gauss", "adaptive Gauss-Kronrod"],
                ),
                jacobian_bound: None,
            })
        }
        _ => {
            // polar angle t = π/4 − φ on the upper cap; the lower cap mirrors it
            let region = SphericalRegion {
                radial: (0.0, 1.0),
                angles: quarter(&[(0.0, 2.0 * PI)]),
            };
            let product = 2.0
                * spherical_quadrature(
                    3,
                    |r, a| r.powf(radial) * ang(a[1]) * (FRAC_PI_4 - a[1]).sin(),
                    &region,
                    &sing,
                    &opts,
                )?
                .value;
            let cap = gk(|phi| ang(phi) * (FRAC_PI_4 - phi).sin(), 0.0, FRAC_PI_4)?;
            let separable = radial_gk * 2.0 * PI * 2.0 * cap;
            let cap_bound = gk(ang, 0.0, FRAC_PI_4)?;
            Ok(R1Report {
                n,
                q,
                kappa,
                estimate: DualEstimate::new(
                    product,
                    separable,
                    ["product Gauss", "adaptive Gauss-Kronrod"],
                ),
                jacobian_bound: Some(radial_gk * 2.0 * PI * 2.0 * cap_bound),
            })
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct R2Report {
    pub n: usize,
    pub p: f64,
    /// Reduced form: radial power integral times the angular integral.
    pub value: f64,
    /// `∫₀¹ ρ^{n−1−p} dρ`.
    pub radial_factor: f64,
    pub angular_factor: f64,
}

/// `r₂ = ∫_{B₁} |∇u*|^p dx` through its reduced form. `|∇u*| = |u*_θ|/ρ`, so
/// the radial factor is `∫₀¹ ρ^{n−1−p} dρ = 1/(n − p)`.
pub fn compute_r2(n: usize, p: f64) -> Result<R2Report> {
    check_dim(n)?;
    if !(p > 1.0 && p < n as f64) {
        return Err(Error::Parameter(format!("need 1 < p < n, got p = {p}")));
    }
    let radial_factor = 1.0 / (n as f64 - p);
    let d = |t: f64| (2.0 * (2.0 * t).cos()).abs().powf(p);
    let angular_factor = if n == 2 {
        // the three sin branches: θ ∈ [0, π/4] ∪ [3π/4, 5π/4] ∪ [7π/4, 2π]
        gk(d, 0.0, FRAC_PI_4)?
            + gk(
                |t| (2.0 * (2.0 * t - PI).cos()).abs().powf(p),
                3.0 * FRAC_PI_4,
                5.0 * FRAC_PI_4,
            )?
            + gk(d, 7.0 * FRAC_PI_4, 2.0 * PI)?
    } else {
        2.0 * PI * gk(|t| d(t) * t.sin(), FRAC_PI_4, 3.0 * FRAC_PI_4)?
    };
    Ok(R2Report {
        n,
        p,
        value: radial_factor * angular_factor,
        radial_factor,
        angular_factor,
    })
}

/// `∫ |∇u*|^p` by mesh quadrature, collapsed rule at the origin.
pub fn r2_on_mesh(p: f64, mesh: &Mesh) -> Result<f64> {
    let integrand = DoublePhaseIntegrand::new(p, p + 1.0, Weight::zero())?;
    let grad = |x: &Point| {
        let g = u_star_gradient(x);
        [g[0], g[1]]
    };
    let sp = SingularPoint {
        at: [0.0, 0.0],
        p_exponent: -p,
        q_exponent: -p,
    };
    Ok(energy_of_gradient_field(&integrand, mesh, &grad, Some(sp))?.p_part)
}

/// `r₃ = H^{n−1}(V̄ ∩ ∂B₁)`, by quadrature of the surface element over the cone trace.
pub fn compute_r3(n: usize) -> Result<f64> {
    check_dim(n)?;
    if n == 2 {
        let arcs = [
            (FRAC_PI_4, 3.0 * FRAC_PI_4),
            (5.0 * FRAC_PI_4, 7.0 * FRAC_PI_4),
        ];
        let mut s = NeumaierSum::new();
        for (a, b) in arcs {
            s.add(gk(|_| 1.0, a, b)?);
        }
        Ok(s.value())
    } else {
        let cap = gk(f64::sin, 0.0, FRAC_PI_4)? + gk(f64::sin, 3.0 * FRAC_PI_4, PI)?;
        Ok(2.0 * PI * cap)
    }
}

/// Threshold `[r₂ (q/r₃)^q (r₁/(q−1))^{q−1}]^{1/(q−p)}` for `t₀`.
pub fn t0_threshold(r1: f64, r2: f64, r3: f64, p: f64, q: f64) -> Result<f64> {
    if !(r1 > 0.0 && r2 > 0.0 && r3 > 0.0) {
        return Err(Error::Parameter("r₁, r₂, r₃ must be positive".into()));
    }
    if !(q > p) {
        return Err(Error::Parameter(format!(
            "need q > p, got p = {p}, q = {q}"
        )));
    }
    Ok((r2 * (q / r3).powf(q) * (r1 / (q - 1.0)).powf(q - 1.0)).powf(1.0 / (q - p)))
}

/// `t₀ = safety_factor · threshold`. A factor of exactly 1 is accepted and
/// gives coinciding bounds.
pub fn compute_t0(r1: f64, r2: f64, r3: f64, p: f64, q: f64, safety_factor: f64) -> Result<f64> {
    if !(safety_factor >= 1.0) {
        return Err(Error::Parameter(format!(
            "safety factor must be at least 1, got {safety_factor}"
        )));
    }
    Ok(safety_factor * t0_threshold(r1, r2, r3, p, q)?)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SharpnessInstance {
    pub n: usize,
    pub p: f64,
    pub q: f64,
    pub kappa: f64,
    pub r1: f64,
    pub r2: f64,
    pub r3: f64,
    pub t0: f64,
    pub safety_factor: f64,
}

impl SharpnessInstance {
    pub fn new(n: usize, p: f64, q: f64, kappa: f64, safety_factor: f64) -> Result<Self> {
        check_dim(n)?;
        let nf = n as f64;
        if !(1.0 < p && p < nf && nf + kappa < q && kappa > 0.0) {
            return Err(Error::Parameter(format!(
                "need 1 < p < n < n + κ < q, got n = {n}, p = {p}, q = {q}, κ = {kappa}"
            )));
        }
        let r1 = compute_r1(n, q, kappa)?.estimate.value;
        let r2 = compute_r2(n, p)?.value;
        let r3 = compute_r3(n)?;
        let t0 = compute_t0(r1, r2, r3, p, q, safety_factor)?;
        Ok(Self {
            n,
            p,
            q,
            kappa,
            r1,
            r2,
            r3,
            t0,
            safety_factor,
        })
    }

    pub fn default_planar() -> Result<Self> {
        Self::new(2, 1.5, 4.0, 1.0, SAFETY_FACTOR)
    }

    pub fn weight(&self) -> Result<Weight> {
        cone_weight(self.kappa)
    }

    pub fn integrand(&self) -> Result<DoublePhaseIntegrand> {
        DoublePhaseIntegrand::new(self.p, self.q, self.weight()?)
    }

    /// `F[t₀u*] = t₀^p r₂`.
    pub fn upper_bound(&self) -> f64 {
        self.t0.powf(self.p) * self.r2
    }

    /// `(r₃/q)^q ((q−1)/r₁)^{q−1} t₀^q`, below every smooth competitor.
    pub fn lower_bound(&self) -> f64 {
        let q = self.q;
        (self.r3 / q).powf(q) * ((q - 1.0) / self.r1).powf(q - 1.0) * self.t0.powf(q)
    }

    /// The maximizer `((q−1) t₀ r₃ / (q r₁))^{q−1}` of `λ t₀ r₃ − r₁ λ^{q/(q−1)}`.
    pub fn lambda_star(&self) -> f64 {
        ((self.q - 1.0) * self.t0 * self.r3 / (self.q * self.r1)).powf(self.q - 1.0)
    }

    pub fn u0(&self) -> impl Fn(&Point) -> f64 + '_ {
        move |x| u0_eval(x, self.t0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UpperBoundCheck {
    pub analytic: f64,
    pub mesh: EnergyBreakdown,
    pub rel_diff: f64,
    pub h: f64,
}

/// Energy of `t₀u*` by mesh quadrature against `t₀^p r₂`.
pub fn upper_bound_on_mesh(inst: &SharpnessInstance, mesh: &Mesh) -> Result<UpperBoundCheck> {
    if inst.n != 2 {
        return Err(Error::Parameter("mesh checks are planar".into()));
    }
    let integrand = inst.integrand()?;
    let t0 = inst.t0;
    let grad = move |x: &Point| {
        let g = u_star_gradient(x);
        [t0 * g[0], t0 * g[1]]
    };
    // the q-part vanishes identically; its exponent only selects the collapsed rule
    let sp = SingularPoint {
        at: [0.0, 0.0],
        p_exponent: -inst.p,
        q_exponent: -inst.p,
    };
    let mesh_energy = energy_of_gradient_field(&integrand, mesh, &grad, Some(sp))?;
    let analytic = inst.upper_bound();
    Ok(UpperBoundCheck {
        analytic,
        rel_diff: (mesh_energy.total - analytic).abs() / analytic,
        mesh: mesh_energy,
        h: mesh.h(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadialVariationReport {
    /// `t₀ r₃`.
    pub lhs: f64,
    /// `∫_V |x|^{1−n} |⟨x/|x|, ∇w⟩| dx`.
    pub rhs: f64,
    pub tolerance: f64,
    pub passed: bool,
}

/// Exit radius of the ray at angle `t` through the mesh boundary polygon,
/// assuming the mesh is star-shaped about the origin.
fn ray_exit(boundary: &[(f64, Point)], t: f64) -> f64 {
    let k = boundary.partition_point(|(a, _)| *a <= t);
    let m = boundary.len();
    let a = boundary[(k + m - 1) % m].1;
    let b = boundary[k % m].1;
    let d = [t.cos(), t.sin()];
    let e = [b[0] - a[0], b[1] - a[1]];
    let den = d[0] * e[1] - d[1] * e[0];
    if den.abs() < 1e-300 {
        return norm(&a).min(norm(&b));
    }
    (a[0] * e[1] - a[1] * e[0]) / den
}

/// Radial integral `∫_V |x|^{−1} |∂_ρ w| dx` in polar form: for each ray the
/// total variation of `w` along it. Rays are placed by composite Gauss rules on
/// the cone arcs; along a ray `w` is sampled at spacing `h/16`.
pub fn radial_variation_over_cone(w: &GridFunction<'_>) -> Result<f64> {
    let mesh = w.mesh();
    let h = mesh.h();
    let mut boundary: Vec<(f64, Point)> = mesh
        .boundary_nodes()
        .iter()
        .map(|&i| {
            let x = mesh.nodes()[i];
            (profile_angle(&x), x)
        })
        .collect();
    boundary.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    let (gx, gw) = gauss_legendre(4);
    let panels = (FRAC_PI_2 / h).ceil() as usize;
    let mut rays = Vec::new();
    for (a, b) in [
        (FRAC_PI_4, 3.0 * FRAC_PI_4),
        (5.0 * FRAC_PI_4, 7.0 * FRAC_PI_4),
    ] {
        let len = (b - a) / panels as f64;
        for k in 0..panels {
            let l = a + k as f64 * len;
            for (x, wt) in gx.iter().zip(&gw) {
                rays.push((l + 0.5 * len * (x + 1.0), 0.5 * len * wt));
            }
        }
    }
    let steps = (16.0 / h).ceil() as usize;
    let mut acc = NeumaierSum::new();
    for (t, wt) in rays {
        let end = ray_exit(&boundary, t) * (1.0 - 1e-12);
        let d = [t.cos(), t.sin()];
        let mut prev = w
            .eval(&[0.0, 0.0])
            .ok_or_else(|| Error::Precondition("origin is outside the mesh".into()))?;
        let mut tv = 0.0;
        for k in 1..=steps {
            let r = end * k as f64 / steps as f64;
            let cur = w.eval(&[r * d[0], r * d[1]]).ok_or_else(|| {
                Error::Precondition(format!(
                    "ray at angle {t} leaves the mesh before radius {r}"
                ))
            })?;
            tv += (cur - prev).abs();
            prev = cur;
        }
        acc.add(wt * tv);
    }
    Ok(acc.value())
}

/// Checks `t₀ r₃ ≤ ∫_V |x|^{1−n} |⟨x/|x|, ∇w⟩| dx` up to [`CHAIN_SLACK`] for a
/// planar admissible `w` (equal to `u₀` on the boundary).
pub fn radial_variation_check(
    w: &GridFunction<'_>,
    inst: &SharpnessInstance,
) -> Result<RadialVariationReport> {
    if inst.n != 2 {
        return Err(Error::Parameter("mesh checks are planar".into()));
    }
    let lhs = inst.t0 * inst.r3;
    let rhs = radial_variation_over_cone(w)?;
    Ok(RadialVariationReport {
        lhs,
        rhs,
        tolerance: CHAIN_SLACK,
        passed: lhs <= rhs * (1.0 + CHAIN_SLACK),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct YoungRow {
    pub lambda: f64,
    /// `r₃ λ t₀`.
    pub lhs: f64,
    /// `r₁ λ^{q/(q−1)} + F[w]`.
    pub rhs: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct YoungReport {
    pub energy: f64,
    pub rows: Vec<YoungRow>,
    pub passed: bool,
}

/// The multipliers used by default: `0.5, 1, 2` and `λ*`.
pub fn default_lambdas(inst: &SharpnessInstance) -> Vec<f64> {
    vec![0.5, 1.0, 2.0, inst.lambda_star()]
}

/// `r₃ λ t₀ ≤ r₁ λ^{q/(q−1)} + F[w]` for each `λ`, given `F[w]`.
pub fn young_chain_from_energy(
    energy: f64,
    lambdas: &[f64],
    inst: &SharpnessInstance,
) -> Result<YoungReport> {
    let q = inst.q;
    let mut rows = Vec::with_capacity(lambdas.len());
    for &lambda in lambdas {
        if !(lambda > 0.0) {
            return Err(Error::Parameter(format!(
                "λ must be positive, got {lambda}"
            )));
        }
        let lhs = inst.r3 * lambda * inst.t0;
        let rhs = inst.r1 * lambda.powf(q / (q - 1.0)) + energy;
        rows.push(YoungRow {
            lambda,
            lhs,
            rhs,
            passed: lhs <= rhs * (1.0 + CHAIN_SLACK),
        });
    }
    let passed = rows.iter().all(|r| r.passed);
    Ok(YoungReport {
        energy,
        rows,
        passed,
    })
}

pub fn young_chain_check(
    w: &GridFunction<'_>,
    lambdas: &[f64],
    inst: &SharpnessInstance,
) -> Result<YoungReport> {
    let e = energy(&inst.integrand()?, w)?.total;
    young_chain_from_energy(e, lambdas, inst)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompetitorEnergy {
    pub label: String,
    pub delta: Option<f64>,
    pub energy: f64,
    /// `energy / lower`.
    pub ratio_to_lower: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GapReport {
    pub instance: SharpnessInstance,
    pub upper: f64,
    pub lower: f64,
    pub lower_over_upper: f64,
    pub competitor_slack: f64,
    pub competitor_energies: Vec<CompetitorEnergy>,
    /// Competitors below `lower·(1 − slack)`.
    pub undercut: Vec<String>,
    pub verdict: bool,
}

impl GapReport {
    /// Err if a competitor undercuts the proved lower bound.
    pub fn ensure_bound(&self) -> Result<()> {
        if self.undercut.is_empty() {
            Ok(())
        } else {
            Err(Error::BoundViolation(format!(
                "competitors below lower·(1 − {}): {}",
                self.competitor_slack,
                self.undercut.join(", ")
            )))
        }
    }
}

/// Assembles bounds and competitor energies. The verdict requires
/// `lower > upper` beyond rounding ([`STRICT_GAP_RTOL`]) and no competitor below `lower·(1 − COMPETITOR_SLACK)`.
pub fn gap_report(
    inst: &SharpnessInstance,
    competitors: Vec<(String, Option<f64>, f64)>,
) -> GapReport {
    let upper = inst.upper_bound();
    let lower = inst.lower_bound();
    let floor = lower * (1.0 - COMPETITOR_SLACK);
    let competitor_energies: Vec<CompetitorEnergy> = competitors
        .into_iter()
        .map(|(label, delta, energy)| CompetitorEnergy {
            label,
            delta,
            energy,
            ratio_to_lower: energy / lower,
        })
        .collect();
    let undercut: Vec<String> = competitor_energies
        .iter()
        .filter(|c| !(c.energy >= floor))
        .map(|c| c.label.clone())
        .collect();
    GapReport {
        instance: inst.clone(),
        upper,
        lower,
        lower_over_upper: lower / upper,
        competitor_slack: COMPETITOR_SLACK,
        verdict: lower > upper * (1.0 + STRICT_GAP_RTOL) && undercut.is_empty(),
        competitor_energies,
        undercut,
    }
}
