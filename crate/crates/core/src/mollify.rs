//! Convolution with shrinking,
//! `S_δ v(x) = ∫ ρ_δ(x − y) v(x₀ + (y − x₀)/κ_δ) dy` with `κ_δ = 1 − δ/R`,
//! and measurements of its structural bounds.
//!
//! The dilated field `w(y) = v(x₀ + (y − x₀)/κ_δ)` is sampled once on a square
//! lattice of spacing `η = min(h, δ/8)` aligned with `x₀`; every evaluation of
//! `S_δ v(x)` is then a kernel-weighted sum over the lattice points of
//! `B(x, δ)`, with the weights normalized to sum to one. Samples of `v` outside
//! the mesh are zero.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::domain_grid::{
    adaptive_gauss_kronrod, gauss_legendre, gradient, integrate, node_holder_seminorm, CellVector,
    Domain, Field, GridFunction, Mesh, Point, QuadratureRule,
};
use crate::energy::DoublePhaseIntegrand;
use crate::tolerances::{BOUND_SLACK, PAIR_BUDGET};
use crate::weights::MembershipVerdict;
use crate::{Error, Result};

const TABLE_SIZE: usize = 4096;

/// `exp(−1/(1 − s))` for `s = |x|² < 1`, zero otherwise.
#[inline]
fn profile(s: f64) -> f64 {
    if s < 1.0 {
        (-1.0 / (1.0 - s)).exp()
    } else {
        0.0
    }
}

fn sphere_area(n: usize) -> f64 {
    match n {
        2 => 2.0 * std::f64::consts::PI,
        _ => 4.0 * std::f64::consts::PI,
    }
}

/// Radially symmetric bump `c·exp(−1/(1 − |x|²))` on the unit ball with unit integral.
#[derive(Debug, Clone)]
pub struct Kernel {
    pub n: usize,
    /// The constant `c`.
    pub normalization: f64,
    /// `‖∇ρ‖_{L¹}`.
    pub grad_l1: f64,
    table: Vec<f64>,
    dtable: Vec<f64>,
}

impl Kernel {
    pub fn rho(&self, x: &[f64]) -> f64 {
        self.normalization * profile(x.iter().map(|v| v * v).sum())
    }

    /// Tabulated unnormalized profile at `s = |x|²`, linear in `s` between entries.
    #[inline]
    fn profile_fast(&self, s: f64) -> f64 {
        if s >= 1.0 {
            return 0.0;
        }
        let t = s * TABLE_SIZE as f64;
        let k = t as usize;
        let f = t - k as f64;
        self.table[k] * (1.0 - f) + self.table[k + 1] * f
    }

    /// Profile and its derivative in `s`, both tabulated.
    #[inline]
    fn profile_fast_d(&self, s: f64) -> (f64, f64) {
        if s >= 1.0 {
            return (0.0, 0.0);
        }
        let t = s * TABLE_SIZE as f64;
        let k = t as usize;
        let f = t - k as f64;
        (
            self.table[k] * (1.0 - f) + self.table[k + 1] * f,
            self.dtable[k] * (1.0 - f) + self.dtable[k + 1] * f,
        )
    }

    /// `max ρ = c/e`, attained at the origin.
    pub fn max_value(&self) -> f64 {
        self.normalization * (-1.0f64).exp()
    }
}

/// Radial integrals `(∫ profile, ∫ |∇ profile|)` by adaptive Gauss–Kronrod.
fn radial_integrals_adaptive(n: usize) -> Result<(f64, f64)> {
    let k = (n - 1) as i32;
    let (mass, _) =
        adaptive_gauss_kronrod(|r| r.powi(k) * profile(r * r), 0.0, 1.0, 1e-15, 1e-13, 4096)?;
    let (grad, _) = adaptive_gauss_kronrod(
        |r| {
            let s = 1.0 - r * r;
            if s <= 0.0 {
                return 0.0;
            }
            r.powi(k) * profile(r * r) * 2.0 * r / (s * s)
        },
        0.0,
        1.0,
        1e-15,
        1e-13,
        4096,
    )?;
    Ok((sphere_area(n) * mass, sphere_area(n) * grad))
}

/// `‖∇ρ‖_{L¹}` with a fixed `points`-point Gauss–Legendre rule on `[0, 1]`.
pub fn kernel_grad_l1_fixed(n: usize, points: usize) -> Result<f64> {
    if !(n == 2 || n == 3) {
        return Err(Error::Parameter(format!(
            "kernel dimension must be 2 or 3, got {n}"
        )));
    }
    let (x, w) = gauss_legendre(points);
    let k = (n - 1) as i32;
    let (mut mass, mut grad) = (0.0, 0.0);
    for (xi, wi) in x.iter().zip(&w) {
        let r = 0.5 * (xi + 1.0);
        let s = 1.0 - r * r;
        let f = profile(r * r);
        mass += 0.5 * wi * r.powi(k) * f;
        if s > 0.0 {
            grad += 0.5 * wi * r.powi(k) * f * 2.0 * r / (s * s);
        }
    }
    Ok(grad / mass)
}

/// Normalized bump kernel on `Rⁿ`, `n ∈ {2, 3}`.
pub fn make_kernel(n: usize) -> Result<Kernel> {
    if !(n == 2 || n == 3) {
        return Err(Error::Parameter(format!(
            "kernel dimension must be 2 or 3, got {n}"
        )));
    }
    let (mass, grad) = radial_integrals_adaptive(n)?;
    let table = (0..=TABLE_SIZE)
        .map(|k| profile(k as f64 / TABLE_SIZE as f64))
        .collect();
    let dtable = (0..=TABLE_SIZE)
        .map(|k| {
            let s = k as f64 / TABLE_SIZE as f64;
            if s < 1.0 {
                -profile(s) / ((1.0 - s) * (1.0 - s))
            } else {
                0.0
            }
        })
        .collect();
    Ok(Kernel {
        n,
        normalization: 1.0 / mass,
        grad_l1: grad / mass,
        table,
        dtable,
    })
}

/// `S_δ` for a domain star-shaped with respect to `B(x₀, R)`.
#[derive(Debug, Clone)]
pub struct ShrinkMollifier {
    pub delta: f64,
    pub x0: Point,
    pub r: f64,
    pub kappa: f64,
    /// Diameter of the domain, used by the support margin and `τ`.
    pub diameter: f64,
    pub kernel: Kernel,
}

impl ShrinkMollifier {
    pub fn new(delta: f64, x0: Point, r: f64, diameter: f64, kernel: Kernel) -> Result<Self> {
        if !(r > 0.0) {
            return Err(Error::Parameter(format!(
                "star radius must be positive, got {r}"
            )));
        }
        if !(delta > 0.0 && delta < r / 4.0) {
            return Err(Error::Parameter(format!(
                "δ must lie in (0, R/4) = (0, {}), got {delta}",
                r / 4.0
            )));
        }
        if kernel.n != 2 {
            return Err(Error::Parameter(
                "planar meshes need a two-dimensional kernel".into(),
            ));
        }
        Ok(Self {
            delta,
            x0,
            r,
            kappa: 1.0 - delta / r,
            diameter,
            kernel,
        })
    }

    pub fn for_domain(delta: f64, domain: &Domain, kernel: Kernel) -> Result<Self> {
        Self::new(
            delta,
            domain.star_center,
            domain.star_radius,
            domain.diameter(),
            kernel,
        )
    }

    /// Sub-grid spacing on a mesh of size `h`.
    pub fn spacing(&self, h: f64) -> f64 {
        h.min(self.delta / 8.0)
    }

    /// `τ` with `|(x − y)/κ_δ − x| ≤ τδ`: `(1 + diam/(2R))/κ_δ`.
    pub fn tau(&self) -> f64 {
        (1.0 + self.diameter / (2.0 * self.r)) / self.kappa
    }

    /// Distance from `∂Ω` within which `S_δ v` is expected to vanish.
    pub fn support_margin(&self) -> f64 {
        self.delta * (1.0 + self.diameter / (2.0 * self.r))
    }

    pub fn prepare<'a>(&'a self, mesh: &'a Mesh) -> Prepared<'a> {
        Prepared::new(self, mesh)
    }

    pub fn apply<'m>(&self, v: &GridFunction<'m>) -> Result<GridFunction<'m>> {
        self.prepare(v.mesh()).apply(v)
    }
}

/// Lattice samples of the dilated geometry for one mesh.
pub struct Prepared<'a> {
    moll: &'a ShrinkMollifier,
    mesh: &'a Mesh,
    eta: f64,
    i0: i64,
    j0: i64,
    nx: usize,
    ny: usize,
    loc: Vec<Option<(u32, [f64; 3])>>,
}

impl<'a> Prepared<'a> {
    fn new(moll: &'a ShrinkMollifier, mesh: &'a Mesh) -> Self {
        let eta = moll.spacing(mesh.h());
        let (mut lo, mut hi) = ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]);
        for p in mesh.nodes() {
            for d in 0..2 {
                lo[d] = lo[d].min(p[d]);
                hi[d] = hi[d].max(p[d]);
            }
        }
        // lattice points g with x₀ + (g − x₀)/κ inside the mesh bounding box
        let k = moll.kappa;
        let x0 = moll.x0;
        let i0 = ((k * (lo[0] - x0[0])) / eta).floor() as i64;
        let i1 = ((k * (hi[0] - x0[0])) / eta).ceil() as i64;
        let j0 = ((k * (lo[1] - x0[1])) / eta).floor() as i64;
        let j1 = ((k * (hi[1] - x0[1])) / eta).ceil() as i64;
        let nx = (i1 - i0 + 1) as usize;
        let ny = (j1 - j0 + 1) as usize;
        let loc = (0..nx * ny)
            .into_par_iter()
            .map(|idx| {
                let (i, j) = ((idx / ny) as i64 + i0, (idx % ny) as i64 + j0);
                let z = [x0[0] + eta * i as f64 / k, x0[1] + eta * j as f64 / k];
                mesh.locate(&z).map(|(c, l)| (c as u32, l))
            })
            .collect();
        Self {
            moll,
            mesh,
            eta,
            i0,
            j0,
            nx,
            ny,
            loc,
        }
    }

    pub fn spacing(&self) -> f64 {
        self.eta
    }

    pub fn mesh(&self) -> &'a Mesh {
        self.mesh
    }

    /// Dilated field at every lattice point.
    pub fn samples(&self, field: &Field<'_>) -> Vec<f64> {
        let k = self.moll.kappa;
        let x0 = self.moll.x0;
        self.loc
            .par_iter()
            .enumerate()
            .map(|(idx, l)| {
                let Some((c, lam)) = l else { return 0.0 };
                let c = *c as usize;
                match field {
                    Field::Nodal(v) => {
                        let cell = self.mesh.cells()[c];
                        lam[0] * v[cell[0]] + lam[1] * v[cell[1]] + lam[2] * v[cell[2]]
                    }
                    Field::Cell(v) => v[c],
                    _ => {
                        let (i, j) = (
                            (idx / self.ny) as i64 + self.i0,
                            (idx % self.ny) as i64 + self.j0,
                        );
                        let z = [
                            x0[0] + self.eta * i as f64 / k,
                            x0[1] + self.eta * j as f64 / k,
                        ];
                        match field {
                            Field::Fn(f) => f(&z),
                            Field::CellFn(f) => f(&z, c),
                            _ => unreachable!(),
                        }
                    }
                }
            })
            .collect()
    }

    /// `S_δ` of the sampled field at `x`.
    pub fn convolve_at(&self, samples: &[f64], x: &Point) -> f64 {
        let d = self.moll.delta;
        let eta = self.eta;
        let x0 = self.moll.x0;
        let rx = (x[0] - x0[0]) / eta;
        let ry = (x[1] - x0[1]) / eta;
        let reach = d / eta;
        let ia = (rx - reach).ceil() as i64;
        let ib = (rx + reach).floor() as i64;
        let ja = (ry - reach).ceil() as i64;
        let jb = (ry + reach).floor() as i64;
        let inv = 1.0 / (reach * reach);
        let mut wsum = 0.0;
        let mut acc = 0.0;
        for i in ia..=ib {
            let dx = rx - i as f64;
            let li = i - self.i0;
            let col = (0..self.nx as i64).contains(&li);
            for j in ja..=jb {
                let dy = ry - j as f64;
                let w = self.moll.kernel.profile_fast((dx * dx + dy * dy) * inv);
                if w == 0.0 {
                    continue;
                }
                wsum += w;
                let lj = j - self.j0;
                if col && (0..self.ny as i64).contains(&lj) {
                    acc += w * samples[li as usize * self.ny + lj as usize];
                }
            }
        }
        if wsum == 0.0 {
            0.0
        } else {
            acc / wsum
        }
    }

    /// `S_δ` of the sampled field at `x` and its exact gradient in `x`.
    pub fn convolve_with_gradient_at(&self, samples: &[f64], x: &Point) -> (f64, [f64; 2]) {
        let d = self.moll.delta;
        let eta = self.eta;
        let x0 = self.moll.x0;
        let rx = (x[0] - x0[0]) / eta;
        let ry = (x[1] - x0[1]) / eta;
        let reach = d / eta;
        let ia = (rx - reach).ceil() as i64;
        let ib = (rx + reach).floor() as i64;
        let ja = (ry - reach).ceil() as i64;
        let jb = (ry + reach).floor() as i64;
        let inv = 1.0 / (reach * reach);
        // ∂/∂x of the profile at s = |x − g|²/δ² is K'(s)·2(x − g)/δ²; in lattice units 2·(rx − i)·inv/η
        let scale = 2.0 * inv / eta;
        let (mut w, mut a) = (0.0, 0.0);
        let (mut dw, mut da) = ([0.0; 2], [0.0; 2]);
        for i in ia..=ib {
            let dx = rx - i as f64;
            let li = i - self.i0;
            let col = (0..self.nx as i64).contains(&li);
            for j in ja..=jb {
                let dy = ry - j as f64;
                let (k, dk) = self.moll.kernel.profile_fast_d((dx * dx + dy * dy) * inv);
                if k == 0.0 && dk == 0.0 {
                    continue;
                }
                let g = [dk * scale * dx, dk * scale * dy];
                w += k;
                dw[0] += g[0];
                dw[1] += g[1];
                let lj = j - self.j0;
                if col && (0..self.ny as i64).contains(&lj) {
                    let v = samples[li as usize * self.ny + lj as usize];
                    a += k * v;
                    da[0] += g[0] * v;
                    da[1] += g[1] * v;
                }
            }
        }
        if w == 0.0 {
            return (0.0, [0.0, 0.0]);
        }
        let val = a / w;
        (val, [(da[0] - val * dw[0]) / w, (da[1] - val * dw[1]) / w])
    }

    /// Exact gradients of `S_δ` of the sampled field at `points`.
    pub fn convolve_gradient(&self, samples: &[f64], points: &[Point]) -> Vec<[f64; 2]> {
        points
            .par_iter()
            .map(|x| self.convolve_with_gradient_at(samples, x).1)
            .collect()
    }

    pub fn convolve(&self, samples: &[f64], points: &[Point]) -> Vec<f64> {
        points
            .par_iter()
            .map(|x| self.convolve_at(samples, x))
            .collect()
    }

    /// `S_δ v` at the mesh nodes.
    pub fn apply<'m>(&self, v: &GridFunction<'m>) -> Result<GridFunction<'m>> {
        if !std::ptr::eq(v.mesh(), self.mesh) {
            return Err(Error::Parameter("field lives on a different mesh".into()));
        }
        let s = self.samples(&Field::Nodal(v.values()));
        GridFunction::new(v.mesh(), self.convolve(&s, self.mesh.nodes()))
    }

    /// `S_δ` of a cellwise-constant vector field, evaluated at `points`.
    pub fn apply_cell_vectors(&self, field: &[CellVector], points: &[Point]) -> [Vec<f64>; 2] {
        let c0: Vec<f64> = field.iter().map(|g| g[0]).collect();
        let c1: Vec<f64> = field.iter().map(|g| g[1]).collect();
        [
            self.convolve(&self.samples(&Field::Cell(&c0)), points),
            self.convolve(&self.samples(&Field::Cell(&c1)), points),
        ]
    }
}

fn centroids(mesh: &Mesh) -> Vec<Point> {
    (0..mesh.num_cells()).map(|c| mesh.centroid(c)).collect()
}

/// `‖S_δ v − v‖_{L¹}` of the piecewise-linear reconstructions.
pub fn l1_error(m: &ShrinkMollifier, v: &GridFunction<'_>) -> Result<f64> {
    let sv = m.apply(v)?;
    let diff: Vec<f64> = sv
        .values()
        .iter()
        .zip(v.values())
        .map(|(a, b)| a - b)
        .collect();
    let mesh = v.mesh();
    let f = |x: &Point, c: usize| {
        let [i, j, k] = mesh.cells()[c];
        let g = &mesh.geom()[c];
        let p = mesh.nodes()[i];
        let d = [x[0] - p[0], x[1] - p[1]];
        let l1 = g.basis_grad[1][0] * d[0] + g.basis_grad[1][1] * d[1];
        let l2 = g.basis_grad[2][0] * d[0] + g.basis_grad[2][1] * d[1];
        ((1.0 - l1 - l2) * diff[i] + l1 * diff[j] + l2 * diff[k]).abs()
    };
    integrate(&Field::CellFn(&f), mesh, &QuadratureRule::default())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SupportReport {
    pub margin: f64,
    pub nodes_in_margin: usize,
    pub max_abs_in_margin: f64,
    /// Nodes within the margin where the mollified field is not zero.
    pub violations: usize,
}

impl SupportReport {
    pub fn passed(&self) -> bool {
        self.violations == 0
    }
}

/// Flags nonzero values of `sv` at nodes closer than `margin` to `∂Ω`.
pub fn support_check(sv: &GridFunction<'_>, domain: &Domain, margin: f64) -> SupportReport {
    let mesh = sv.mesh();
    let mut report = SupportReport {
        margin,
        nodes_in_margin: 0,
        max_abs_in_margin: 0.0,
        violations: 0,
    };
    for (x, v) in mesh.nodes().iter().zip(sv.values()) {
        if domain.boundary_distance(x) < margin {
            report.nodes_in_margin += 1;
            report.max_abs_in_margin = report.max_abs_in_margin.max(v.abs());
            if *v != 0.0 {
                report.violations += 1;
            }
        }
    }
    report
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IdentityReport {
    pub delta: f64,
    /// Relative max-norm gap between `∇S_δ v` and `κ_δ^{−1} S_δ(∇v)` at cell centroids.
    pub residual: f64,
    /// The same gap with `∇S_δ v` replaced by the cell gradient of its nodal interpolant.
    pub interpolated_residual: f64,
}

/// Compares `∇S_δ v` with `κ_δ^{−1} S_δ(∇v)` at cell centroids. `S_δ v` is
/// smooth, so its gradient is taken exactly from the discrete convolution;
/// the piecewise-linear reconstruction is reported alongside.
pub fn gradient_identity_report(
    m: &ShrinkMollifier,
    v: &GridFunction<'_>,
) -> Result<IdentityReport> {
    let mesh = v.mesh();
    let prep = m.prepare(mesh);
    let pts = centroids(mesh);
    let samples = prep.samples(&Field::Nodal(v.values()));
    let exact = prep.convolve_gradient(&samples, &pts);
    let sv = GridFunction::new(mesh, prep.convolve(&samples, mesh.nodes()))?;
    let interp = gradient(&sv)?;
    let [r0, r1] = prep.apply_cell_vectors(&gradient(v)?, &pts);
    let (mut num, mut num_i, mut den): (f64, f64, f64) = (0.0, 0.0, 0.0);
    for c in 0..mesh.num_cells() {
        let rhs = [r0[c] / m.kappa, r1[c] / m.kappa];
        num = num.max((exact[c][0] - rhs[0]).hypot(exact[c][1] - rhs[1]));
        num_i = num_i.max((interp[c][0] - rhs[0]).hypot(interp[c][1] - rhs[1]));
        den = den.max(rhs[0].hypot(rhs[1]));
    }
    let rel = |x: f64| if den == 0.0 { x } else { x / den };
    Ok(IdentityReport {
        delta: m.delta,
        residual: rel(num),
        interpolated_residual: rel(num_i),
    })
}

pub fn gradient_identity_residual(m: &ShrinkMollifier, v: &GridFunction<'_>) -> Result<f64> {
    Ok(gradient_identity_report(m, v)?.residual)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub delta: f64,
    pub measured: f64,
    pub bound: f64,
    pub passed: bool,
}

/// `max |∇S_δ v|` over nodes and cell centroids.
fn max_mollified_gradient(m: &ShrinkMollifier, v: &GridFunction<'_>) -> f64 {
    let mesh = v.mesh();
    let prep = m.prepare(mesh);
    let samples = prep.samples(&Field::Nodal(v.values()));
    let mut pts = mesh.nodes().to_vec();
    pts.extend(centroids(mesh));
    prep.convolve_gradient(&samples, &pts)
        .iter()
        .map(|g| g[0].hypot(g[1]))
        .fold(0.0, f64::max)
}

/// `‖∇S_δ v‖_∞ ≤ δ^{−1} ‖v‖_∞ ‖∇ρ‖_{L¹}`.
pub fn linf_grad_bound_check(m: &ShrinkMollifier, v: &GridFunction<'_>) -> Result<BoundReport> {
    let measured = max_mollified_gradient(m, v);
    let bound = v.max_abs() * m.kernel.grad_l1 / m.delta;
    Ok(BoundReport {
        delta: m.delta,
        measured,
        bound,
        passed: measured <= bound * (1.0 + BOUND_SLACK),
    })
}

/// `‖∇S_δ v‖_∞ ≤ δ^{γ−1} κ_δ^{−γ} [v]_{0,γ} ‖∇ρ‖_{L¹}` with the seminorm
/// estimated over node pairs.
pub fn holder_grad_bound_check(
    m: &ShrinkMollifier,
    v: &GridFunction<'_>,
    gamma: f64,
) -> Result<BoundReport> {
    if !(gamma > 0.0 && gamma <= 1.0) {
        return Err(Error::Parameter(format!(
            "γ must lie in (0, 1], got {gamma}"
        )));
    }
    let measured = max_mollified_gradient(m, v);
    let mut semi = node_holder_seminorm(v.mesh(), v.values(), gamma, PAIR_BUDGET);
    if gamma == 1.0 {
        // the Lipschitz constant of a piecewise-linear function on a convex mesh
        semi = gradient(v)?
            .iter()
            .map(|g| g[0].hypot(g[1]))
            .fold(semi, f64::max);
    }
    let bound = m.delta.powf(gamma - 1.0) / m.kappa.powf(gamma) * semi * m.kernel.grad_l1;
    Ok(BoundReport {
        delta: m.delta,
        measured,
        bound,
        passed: measured <= bound * (1.0 + BOUND_SLACK),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JensenReport {
    pub delta: f64,
    pub tau: f64,
    pub c_a: f64,
    pub c_s: f64,
    pub c_tau: f64,
    pub cells_checked: usize,
    /// `max M(x, |∇S_δφ|) / (2^q C_τ S_δ(M(·, |∇φ|))(x))` over interior cells.
    pub worst_ratio: f64,
    pub violations: usize,
    /// `∫ M(x, |∇S_δφ|)`.
    pub lhs_integral: f64,
    /// `2^q C_τ ∫ M(x, |∇φ|)`.
    pub rhs_integral: f64,
}

impl JensenReport {
    pub fn passed(&self) -> bool {
        self.violations == 0 && self.lhs_integral <= self.rhs_integral * (1.0 + BOUND_SLACK)
    }
}

/// Pointwise domination `M(x, |∇S_δφ(x)|) ≤ 2^q C_τ S_δ(M(·, |∇φ|))(x)` at the
/// centroids of interior cells, with
/// `C_τ = C_a (1 + C_a max(1, τ^κ) C_S^{q−p})`. `C_a` is the largest constant of
/// a stable membership study at level `κ`; `C_S = ‖φ‖_∞ ‖∇ρ‖_{L¹}`, or
/// `2 [φ]_{0,γ} ‖∇ρ‖_{L¹}` when `γ` is given.
pub fn jensen_domination_check(
    m: &ShrinkMollifier,
    phi: &GridFunction<'_>,
    integrand: &DoublePhaseIntegrand,
    verdict: &MembershipVerdict,
    gamma: Option<f64>,
) -> Result<JensenReport> {
    if !verdict.is_stable() {
        return Err(Error::Precondition(format!(
            "weight {} is not certified at κ = {} (fitted growth {:.3})",
            verdict.weight, verdict.kappa, verdict.fitted_exponent
        )));
    }
    let kappa = verdict.kappa;
    let (p, q) = (integrand.p, integrand.q);
    let g = gamma.unwrap_or(0.0);
    if kappa + (q - p) * (g - 1.0) < 0.0 {
        return Err(Error::Precondition(format!(
            "κ + (q − p)(γ − 1) < 0 for κ = {kappa}, γ = {g}"
        )));
    }
    let mesh = phi.mesh();
    let c_a = verdict.max_constant();
    let c_s = match gamma {
        None => phi.max_abs() * m.kernel.grad_l1,
        Some(gm) => {
            2.0 * node_holder_seminorm(mesh, phi.values(), gm, PAIR_BUDGET) * m.kernel.grad_l1
        }
    };
    let tau = m.tau();
    let c_tau = c_a * (1.0 + c_a * tau.powf(kappa).max(1.0) * c_s.powf(q - p));
    // with a ≡ 0 only the plain Jensen bound 2^p is needed
    let factor = if integrand.a.sup_bound == 0.0 {
        2f64.powf(p)
    } else {
        2f64.powf(q) * c_tau
    };

    let prep = m.prepare(mesh);
    let phi_samples = prep.samples(&Field::Nodal(phi.values()));
    let sphi = GridFunction::new(mesh, prep.convolve(&phi_samples, mesh.nodes()))?;
    let gs = gradient(&sphi)?;
    let gphi = gradient(phi)?;
    let mfield =
        |z: &Point, c: usize| integrand.m_with(integrand.a.eval(z), gphi[c][0].hypot(gphi[c][1]));
    let samples = prep.samples(&Field::CellFn(&mfield));
    let boundary = mesh.is_boundary_mask();
    let interior: Vec<usize> = (0..mesh.num_cells())
        .filter(|&c| mesh.cells()[c].iter().all(|&i| !boundary[i]))
        .collect();
    let pts: Vec<Point> = interior.iter().map(|&c| mesh.centroid(c)).collect();
    let rhs = prep.convolve(&samples, &pts);
    let exact = prep.convolve_gradient(&phi_samples, &pts);
    let mut worst: f64 = 0.0;
    let mut violations = 0;
    for (k, _) in interior.iter().enumerate() {
        let lhs = integrand.m_with(integrand.a.eval(&pts[k]), exact[k][0].hypot(exact[k][1]));
        let r = factor * rhs[k];
        if lhs == 0.0 {
            continue;
        }
        let ratio = if r > 0.0 { lhs / r } else { f64::INFINITY };
        worst = worst.max(ratio);
        if ratio > 1.0 {
            violations += 1;
        }
    }
    let rule = QuadratureRule::default();
    let lf = |z: &Point, c: usize| integrand.m_with(integrand.a.eval(z), gs[c][0].hypot(gs[c][1]));
    let lhs_integral = integrate(&Field::CellFn(&lf), mesh, &rule)?;
    let rhs_integral = factor * integrate(&Field::CellFn(&mfield), mesh, &rule)?;
    Ok(JensenReport {
        delta: m.delta,
        tau,
        c_a,
        c_s,
        c_tau,
        cells_checked: interior.len(),
        worst_ratio: worst,
        violations,
        lhs_integral,
        rhs_integral,
    })
}

/// Tent `max(0, 1 − 2|x|)`.
pub fn tent(x: &Point) -> f64 {
    (1.0 - 2.0 * x[0].hypot(x[1])).max(0.0)
}

/// Smooth bump `exp(1 − 1/(1 − 4|x|²))` supported in `B(0, 1/2)`, with value 1 at the origin.
pub fn smooth_bump(x: &Point) -> f64 {
    let s = 4.0 * (x[0] * x[0] + x[1] * x[1]);
    if s < 1.0 {
        (1.0 - 1.0 / (1.0 - s)).exp()
    } else {
        0.0
    }
}
