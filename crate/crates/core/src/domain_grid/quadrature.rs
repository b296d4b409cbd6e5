//! Triangle rules, Gauss–Legendre, adaptive Gauss–Kronrod and the product
//! quadrature in spherical coordinates with power-singularity removal.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::sum::NeumaierSum;
use crate::tolerances::QUADRATURE_RTOL;
use crate::{Error, Result};

/// Rule on the reference triangle `{(ξ, η) : ξ, η ≥ 0, ξ + η ≤ 1}`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureRule {
    pub points: Vec<[f64; 2]>,
    pub weights: Vec<f64>,
    pub order: usize,
}

impl QuadratureRule {
    pub fn centroid() -> Self {
        Self {
            points: vec![[1.0 / 3.0, 1.0 / 3.0]],
            weights: vec![0.5],
            order: 1,
        }
    }

    /// Three interior points, exact for quadratics.
    pub fn degree2() -> Self {
        let w = 1.0 / 6.0;
        Self {
            points: vec![
                [1.0 / 6.0, 1.0 / 6.0],
                [2.0 / 3.0, 1.0 / 6.0],
                [1.0 / 6.0, 2.0 / 3.0],
            ],
            weights: vec![w, w, w],
            order: 2,
        }
    }

    /// Seven-point Radon rule, exact for quintics.
    pub fn degree5() -> Self {
        let s15 = 15f64.sqrt();
        let a1 = (6.0 - s15) / 21.0;
        let b1 = (9.0 + 2.0 * s15) / 21.0;
        let a2 = (6.0 + s15) / 21.0;
        let b2 = (9.0 - 2.0 * s15) / 21.0;
        let w0 = 9.0 / 80.0;
        let w1 = (155.0 - s15) / 2400.0;
        let w2 = (155.0 + s15) / 2400.0;
        Self {
            points: vec![
                [1.0 / 3.0, 1.0 / 3.0],
                [a1, a1],
                [b1, a1],
                [a1, b1],
                [a2, a2],
                [b2, a2],
                [a2, b2],
            ],
            weights: vec![w0, w1, w1, w1, w2, w2, w2],
            order: 5,
        }
    }

    /// Maps reference points onto a physical triangle: `(point, weight)` with
    /// weights scaled by the Jacobian `2·area`.
    pub fn mapped(&self, tri: &[[f64; 2]; 3]) -> impl Iterator<Item = ([f64; 2], f64)> + '_ {
        let [p0, p1, p2] = *tri;
        let jac = ((p1[0] - p0[0]) * (p2[1] - p0[1]) - (p2[0] - p0[0]) * (p1[1] - p0[1])).abs();
        self.points.iter().zip(&self.weights).map(move |(r, &w)| {
            let x = p0[0] + r[0] * (p1[0] - p0[0]) + r[1] * (p2[0] - p0[0]);
            let y = p0[1] + r[0] * (p1[1] - p0[1]) + r[1] * (p2[1] - p0[1]);
            ([x, y], w * jac)
        })
    }
}

impl Default for QuadratureRule {
    fn default() -> Self {
        Self::degree5()
    }
}

/// Gauss–Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        let mut z = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, 0.0);
            for j in 0..n {
                let p2 = p1;
                p1 = p0;
                p0 = ((2 * j + 1) as f64 * z * p1 - j as f64 * p2) / (j + 1) as f64;
            }
            dp = n as f64 * (z * p0 - p1) / (z * z - 1.0);
            let dz = p0 / dp;
            z -= dz;
            if dz.abs() < 1e-15 {
                break;
            }
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = 2.0 / ((1.0 - z * z) * dp * dp);
        w[n - 1 - i] = w[i];
    }
    (x, w)
}

const XGK: [f64; 8] = [
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
];
const WGK: [f64; 8] = [
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
];
const WG: [f64; 4] = [
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
];

fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let hl = 0.5 * (b - a);
    let fc = f(c);
    let mut rk = fc * WGK[7];
    let mut rg = fc * WG[3];
    for j in 0..7 {
        let dx = hl * XGK[j];
        let s = f(c - dx) + f(c + dx);
        rk += WGK[j] * s;
        if j % 2 == 1 {
            rg += WG[j / 2] * s;
        }
    }
    (rk * hl, ((rk - rg) * hl).abs())
}

/// Globally adaptive Gauss–Kronrod (7/15) on `[a, b]`: bisects the interval
/// with the largest error estimate until the total estimate is below
/// `max(abs_tol, rel_tol·|I|)`. Endpoints are never evaluated, so integrable
/// endpoint singularities are handled by repeated bisection.
pub fn adaptive_gauss_kronrod<F: Fn(f64) -> f64>(
    f: F,
    a: f64,
    b: f64,
    abs_tol: f64,
    rel_tol: f64,
    max_intervals: usize,
) -> Result<(f64, f64)> {
    let (v, e) = gk15(&f, a, b);
    let mut parts = vec![(a, b, v, e)];
    loop {
        let mut total = NeumaierSum::new();
        let mut err = 0.0;
        let mut worst = 0;
        for (i, p) in parts.iter().enumerate() {
            total.add(p.2);
            err += p.3;
            if p.3 > parts[worst].3 {
                worst = i;
            }
        }
        let val = total.value();
        if !val.is_finite() {
            return Err(Error::Divergence(
                "non-finite value during adaptive quadrature".into(),
            ));
        }
        if err <= abs_tol.max(rel_tol * val.abs()) {
            return Ok((val, err));
        }
        if parts.len() >= max_intervals {
            return Err(Error::Quadrature {
                tol: rel_tol,
                diff: err / val.abs().max(1e-300),
            });
        }
        let (pa, pb, _, _) = parts.swap_remove(worst);
        let m = 0.5 * (pa + pb);
        if !(m > pa && m < pb) {
            return Err(Error::Quadrature {
                tol: rel_tol,
                diff: err / val.abs().max(1e-300),
            });
        }
        let (v1, e1) = gk15(&f, pa, m);
        let (v2, e2) = gk15(&f, m, pb);
        parts.push((pa, m, v1, e1));
        parts.push((m, pb, v2, e2));
        // keep a deterministic order independent of swap_remove history
        parts.sort_by(|x, y| x.0.partial_cmp(&y.0).unwrap());
    }
}

/// Power singularity of a single coordinate: the integrand behaves like
/// `|t − at|^exponent` near `at`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PointSingularity {
    pub at: f64,
    pub exponent: f64,
}

/// Declared singularities: radial behaviour `ρ^radial_exponent` at `ρ = 0`
/// and per-angle point singularities.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SingularSpec {
    pub radial_exponent: f64,
    /// `angular[k]` lists singular points of the `k`-th angle.
    pub angular: Vec<Vec<PointSingularity>>,
}

impl SingularSpec {
    pub fn radial(exponent: f64) -> Self {
        Self {
            radial_exponent: exponent,
            angular: Vec::new(),
        }
    }
}

/// Integration box in `(ρ, angles…)`. For `n = 2` there is one angle, for
/// `n = 3` two (azimuth, polar). Angle ranges may be unions of intervals.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SphericalRegion {
    pub radial: (f64, f64),
    pub angles: Vec<Vec<(f64, f64)>>,
}

impl SphericalRegion {
    pub fn full_ball(n: usize, radius: f64) -> Self {
        let angles = match n {
            2 => vec![vec![(0.0, 2.0 * PI)]],
            _ => vec![vec![(0.0, 2.0 * PI)], vec![(0.0, PI)]],
        };
        Self {
            radial: (0.0, radius),
            angles,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadOptions {
    pub rel_tol: f64,
    pub start_points: usize,
    pub max_points: usize,
}

impl Default for QuadOptions {
    fn default() -> Self {
        Self {
            rel_tol: QUADRATURE_RTOL,
            start_points: 16,
            max_points: 512,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadResult {
    pub value: f64,
    /// `|I_fine − I_coarse| / |I_fine|` of the last two refinement levels.
    pub rel_diff: f64,
    pub points_per_piece: usize,
}

/// Points per unit for substituted pieces: `t = c ± L·s^m` turns
/// `|t − c|^e dt` into `m L^{e+1} s^{m(e+1)−1} ds`; `m` makes that exponent ≥ 3.
fn substitution_power(exponent: f64) -> f64 {
    (4.0 / (1.0 + exponent)).ceil().max(1.0)
}

/// 1D rule on a union of intervals with point singularities removed by substitution.
fn singular_rule(
    intervals: &[(f64, f64)],
    sing: &[PointSingularity],
    n: usize,
) -> Result<Vec<(f64, f64)>> {
    for s in sing {
        if !(s.exponent > -1.0) {
            return Err(Error::Divergence(format!(
                "exponent {} at {} is not integrable",
                s.exponent, s.at
            )));
        }
    }
    let (gx, gw) = gauss_legendre(n);
    let mut out = Vec::new();
    for &(a, b) in intervals {
        let mut cuts = vec![a, b];
        for s in sing {
            if s.at > a && s.at < b {
                cuts.push(s.at);
            }
        }
        cuts.sort_by(|x, y| x.partial_cmp(y).unwrap());
        let exp_at = |t: f64| {
            sing.iter()
                .filter(|s| (s.at - t).abs() <= 1e-14 * (1.0 + t.abs()))
                .map(|s| s.exponent)
                .fold(None, |acc: Option<f64>, e| {
                    Some(acc.map_or(e, |v| v.min(e)))
                })
        };
        for w in cuts.windows(2) {
            let (l, r) = (w[0], w[1]);
            let (el, er) = (exp_at(l), exp_at(r));
            let pieces: Vec<(f64, f64, Option<f64>, bool)> = match (el, er) {
                (Some(x), Some(y)) => {
                    let m = 0.5 * (l + r);
                    vec![(l, m, Some(x), false), (m, r, Some(y), true)]
                }
                (Some(x), None) => vec![(l, r, Some(x), false)],
                (None, Some(y)) => vec![(l, r, Some(y), true)],
                (None, None) => vec![(l, r, None, false)],
            };
            for (pl, pr, e, from_right) in pieces {
                let len = pr - pl;
                match e {
                    None => {
                        for (x, wt) in gx.iter().zip(&gw) {
                            out.push((pl + 0.5 * len * (x + 1.0), 0.5 * len * wt));
                        }
                    }
                    Some(e) => {
                        let m = substitution_power(e);
                        for (x, wt) in gx.iter().zip(&gw) {
                            let s = 0.5 * (x + 1.0);
                            let ds = 0.5 * wt;
                            let off = len * s.powf(m);
                            let jac = len * m * s.powf(m - 1.0);
                            let t = if from_right { pr - off } else { pl + off };
                            // subnormal or sub-ulp offsets carry about ulp^(e+1) of the mass
                            if off < f64::MIN_POSITIVE || t == (if from_right { pr } else { pl }) {
                                continue;
                            }
                            out.push((t, ds * jac));
                        }
                    }
                }
            }
        }
    }
    Ok(out)
}

/// Product quadrature in spherical coordinates. The integrand is given in
/// `(ρ, angles)` coordinates *including* any Jacobian factor; declared power
/// singularities are removed by the substitution `t = c ± L·s^m`. The number of
/// Gauss points per piece doubles until two consecutive levels agree to
/// `opts.rel_tol`.
pub fn spherical_quadrature<F>(
    n: usize,
    f: F,
    region: &SphericalRegion,
    sing: &SingularSpec,
    opts: &QuadOptions,
) -> Result<QuadResult>
where
    F: Fn(f64, &[f64]) -> f64,
{
    if !(n == 2 || n == 3) {
        return Err(Error::Parameter(format!(
            "spherical quadrature supports n = 2, 3; got {n}"
        )));
    }
    if region.angles.len() != n - 1 {
        return Err(Error::Parameter(format!("expected {} angle ranges", n - 1)));
    }
    if !(sing.radial_exponent > -1.0) {
        return Err(Error::Divergence(format!(
            "radial exponent {} ≤ −1 at the origin",
            sing.radial_exponent
        )));
    }
    let radial_sing = if region.radial.0 == 0.0 && sing.radial_exponent != 0.0 {
        vec![PointSingularity {
            at: 0.0,
            exponent: sing.radial_exponent,
        }]
    } else {
        Vec::new()
    };
    if region.radial.0 == 0.0 && sing.radial_exponent == 0.0 {
        probe_radial_divergence(n, &f, region)?;
    }
    let empty = Vec::new();
    let eval = |np: usize| -> Result<f64> {
        let rr = singular_rule(&[region.radial], &radial_sing, np)?;
        let mut angle_rules = Vec::with_capacity(n - 1);
        for (k, iv) in region.angles.iter().enumerate() {
            let s = sing.angular.get(k).unwrap_or(&empty);
            angle_rules.push(singular_rule(iv, s, np)?);
        }
        let mut acc = NeumaierSum::new();
        let mut ang = vec![0.0; n - 1];
        match n {
            2 => {
                for &(r, wr) in &rr {
                    for &(t, wt) in &angle_rules[0] {
                        ang[0] = t;
                        acc.add(wr * wt * f(r, &ang));
                    }
                }
            }
            _ => {
                for &(r, wr) in &rr {
                    for &(t, wt) in &angle_rules[0] {
                        for &(u, wu) in &angle_rules[1] {
                            ang[0] = t;
                            ang[1] = u;
                            acc.add(wr * wt * wu * f(r, &ang));
                        }
                    }
                }
            }
        }
        let v = acc.value();
        if !v.is_finite() {
            return Err(Error::Divergence(
                "integrand produced a non-finite value".into(),
            ));
        }
        Ok(v)
    };
    let max_points = if n == 3 {
        opts.max_points.min(128)
    } else {
        opts.max_points
    };
    let mut np = opts.start_points.max(2);
    let mut prev = eval(np)?;
    let mut last_diff = f64::INFINITY;
    while np * 2 <= max_points {
        np *= 2;
        let cur = eval(np)?;
        let diff = (cur - prev).abs() / cur.abs().max(1e-300);
        if diff <= opts.rel_tol || (cur - prev).abs() < 1e-300 {
            return Ok(QuadResult {
                value: cur,
                rel_diff: diff,
                points_per_piece: np,
            });
        }
        last_diff = diff;
        prev = cur;
    }
    Err(Error::Quadrature {
        tol: opts.rel_tol,
        diff: last_diff,
    })
}

/// Estimates the local radial power of an undeclared integrand and refuses
/// `ρ^e` with `e ≤ −1`.
fn probe_radial_divergence<F: Fn(f64, &[f64]) -> f64>(
    n: usize,
    f: &F,
    region: &SphericalRegion,
) -> Result<()> {
    let ang: Vec<f64> = region
        .angles
        .iter()
        .map(|iv| {
            let (a, b) = iv[0];
            a + 0.381966 * (b - a)
        })
        .collect();
    let _ = n;
    let (r1, r2) = (1e-9, 1e-8);
    let (f1, f2) = (f(r1, &ang).abs(), f(r2, &ang).abs());
    if f1 > 0.0 && f2 > 0.0 && f1.is_finite() && f2.is_finite() {
        let slope = (f2 / f1).ln() / (r2 / r1).ln();
        if slope <= -1.0 + 1e-3 {
            return Err(Error::Divergence(format!(
                "integrand behaves like ρ^{slope:.3} at the origin"
            )));
        }
    } else if !f1.is_finite() || !f2.is_finite() {
        return Err(Error::Divergence(
            "integrand is infinite near the origin".into(),
        ));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn triangle_rules_sum_to_reference_area() {
        for r in [
            QuadratureRule::centroid(),
            QuadratureRule::degree2(),
            QuadratureRule::degree5(),
        ] {
            let s: f64 = r.weights.iter().sum();
            assert!((s - 0.5).abs() < 1e-15);
            assert!(r.weights.iter().all(|&w| w > 0.0));
        }
    }

    #[test]
    fn degree5_rule_is_exact_on_quintic_monomials() {
        // ∫_T ξ^a η^b = a! b! / (a + b + 2)!
        let fact = |k: u32| (1..=k).map(|v| v as f64).product::<f64>();
        let r = QuadratureRule::degree5();
        for a in 0..=5u32 {
            for b in 0..=(5 - a) {
                let q: f64 = r
                    .points
                    .iter()
                    .zip(&r.weights)
                    .map(|(p, w)| w * p[0].powi(a as i32) * p[1].powi(b as i32))
                    .sum();
                let exact = fact(a) * fact(b) / fact(a + b + 2);
                assert!((q - exact).abs() < 1e-15, "{a} {b}");
            }
        }
    }

    #[test]
    fn gauss_legendre_integrates_polynomials() {
        let (x, w) = gauss_legendre(10);
        let s: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(18)).sum();
        assert!((s - 2.0 / 19.0).abs() < 1e-14);
    }

    #[test]
    fn gauss_kronrod_handles_endpoint_singularity() {
        let (v, _) =
            adaptive_gauss_kronrod(|x: f64| x.powf(-2.0 / 3.0), 0.0, 1.0, 1e-12, 1e-9, 4000)
                .unwrap();
        assert!((v - 3.0).abs() < 1e-7, "{v}");
    }

    #[test]
    fn disk_area_in_polar_form() {
        let r = spherical_quadrature(
            2,
            |rho, _| rho,
            &SphericalRegion::full_ball(2, 1.0),
            &SingularSpec::default(),
            &QuadOptions::default(),
        )
        .unwrap();
        assert!((r.value - PI).abs() < 1e-12);
    }

    #[test]
    fn inverse_sqrt_radial() {
        let r = spherical_quadrature(
            2,
            |rho, _| rho.powf(-0.5),
            &SphericalRegion::full_ball(2, 1.0),
            &SingularSpec::radial(-0.5),
            &QuadOptions::default(),
        )
        .unwrap();
        // ∫₀¹ ρ^{-1/2} dρ = 2
        assert!((r.value - 4.0 * PI).abs() < 1e-6 * 4.0 * PI);
    }

    #[test]
    fn log_divergence_is_reported() {
        let region = SphericalRegion::full_ball(2, 1.0);
        let declared = spherical_quadrature(
            2,
            |rho, _| 1.0 / rho,
            &region,
            &SingularSpec::radial(-1.0),
            &QuadOptions::default(),
        );
        assert!(matches!(declared, Err(Error::Divergence(_))));
        let probed = spherical_quadrature(
            2,
            |rho, _| 1.0 / rho,
            &region,
            &SingularSpec::default(),
            &QuadOptions::default(),
        );
        assert!(matches!(probed, Err(Error::Divergence(_))));
    }

    #[test]
    fn angular_singularity_inside_interval() {
        // ∫_0^π |cos θ|^{-1/2} dθ = 2 ∫_0^{π/2} cos^{-1/2} = B(1/4, 1/2) ≈ 5.244115108584239
        let spec = SingularSpec {
            radial_exponent: 0.0,
            angular: vec![vec![PointSingularity {
                at: PI / 2.0,
                exponent: -0.5,
            }]],
        };
        let region = SphericalRegion {
            radial: (0.5, 1.0),
            angles: vec![vec![(0.0, PI)]],
        };
        let opts = QuadOptions {
            rel_tol: 1e-8,
            ..QuadOptions::default()
        };
        let r = spherical_quadrature(
            2,
            |_, a| 2.0 * a[0].cos().abs().powf(-0.5),
            &region,
            &spec,
            &opts,
        )
        .unwrap();
        assert!(
            (r.value - 5.244115108584239).abs() < 1e-7 * 5.25,
            "{}",
            r.value
        );
    }

    #[test]
    fn sphere_volume() {
        let r = spherical_quadrature(
            3,
            |rho, a| rho * rho * a[1].sin(),
            &SphericalRegion::full_ball(3, 1.0),
            &SingularSpec::default(),
            &QuadOptions::default(),
        )
        .unwrap();
        assert!((r.value - 4.0 * PI / 3.0).abs() < 1e-10);
    }
}
