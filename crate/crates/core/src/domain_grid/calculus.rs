use rayon::prelude::*;

use super::geometry::{dist, Point};
use super::mesh::Mesh;
use super::pairs::{max_over_pairs, PairPlan};
use super::quadrature::{gauss_legendre, QuadratureRule};
use super::sum::ordered_sum;
use crate::{Error, Result};

/// Constant gradient on one cell.
pub type CellVector = [f64; 2];

/// Nodal values of a continuous piecewise-linear function.
#[derive(Debug, Clone)]
pub struct GridFunction<'m> {
    mesh: &'m Mesh,
    values: Vec<f64>,
}

impl<'m> GridFunction<'m> {
    pub fn new(mesh: &'m Mesh, values: Vec<f64>) -> Result<Self> {
        if values.len() != mesh.num_nodes() {
            return Err(Error::Parameter(format!(
                "field has {} values, mesh has {} nodes",
                values.len(),
                mesh.num_nodes()
            )));
        }
        Ok(Self { mesh, values })
    }

    pub fn zeros(mesh: &'m Mesh) -> Self {
        Self {
            mesh,
            values: vec![0.0; mesh.num_nodes()],
        }
    }

    /// Nodal interpolant of `f`.
    pub fn from_fn(mesh: &'m Mesh, f: impl Fn(&Point) -> f64) -> Self {
        Self {
            mesh,
            values: mesh.nodes().iter().map(f).collect(),
        }
    }

    pub fn mesh(&self) -> &'m Mesh {
        self.mesh
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    /// Value of the piecewise-linear reconstruction; `None` outside the mesh.
    pub fn eval(&self, x: &Point) -> Option<f64> {
        self.mesh.locate(x).map(|(c, lam)| {
            let [a, b, d] = self.mesh.cells()[c];
            lam[0] * self.values[a] + lam[1] * self.values[b] + lam[2] * self.values[d]
        })
    }

    /// Value with the zero extension outside the mesh.
    pub fn eval_or_zero(&self, x: &Point) -> f64 {
        self.eval(x).unwrap_or(0.0)
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self {
            mesh: self.mesh,
            values: self.values.iter().map(|v| s * v).collect(),
        }
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self {
            mesh: self.mesh,
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    /// Pointwise sum; both fields must live on the same mesh.
    pub fn add(&self, other: &GridFunction<'_>) -> Result<Self> {
        if !std::ptr::eq(self.mesh, other.mesh) {
            return Err(Error::Parameter("fields live on different meshes".into()));
        }
        Ok(Self {
            mesh: self.mesh,
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| a + b)
                .collect(),
        })
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// Exact per-cell gradient of the piecewise-linear reconstruction.
pub fn gradient(u: &GridFunction<'_>) -> Result<Vec<CellVector>> {
    let mesh = u.mesh();
    let vals = u.values();
    mesh.cells()
        .iter()
        .zip(mesh.geom())
        .enumerate()
        .map(|(ci, (c, g))| {
            if !(g.area > 0.0) {
                return Err(Error::Geometry {
                    cell: ci,
                    area: g.area,
                });
            }
            // differences keep the gradient of a constant exactly zero
            let (d1, d2) = (vals[c[1]] - vals[c[0]], vals[c[2]] - vals[c[0]]);
            let d = [
                d1 * g.basis_grad[1][0] + d2 * g.basis_grad[2][0],
                d1 * g.basis_grad[1][1] + d2 * g.basis_grad[2][1],
            ];
            if !(d[0].is_finite() && d[1].is_finite()) {
                let p = mesh.centroid(ci);
                return Err(Error::Evaluation {
                    x: p[0],
                    y: p[1],
                    value: f64::NAN,
                });
            }
            Ok(d)
        })
        .collect()
}

/// Integrand accepted by [`integrate`].
pub enum Field<'a> {
    /// Nodal values, integrated through the P1 reconstruction.
    Nodal(&'a [f64]),
    /// One constant per cell.
    Cell(&'a [f64]),
    /// Pointwise map evaluated at quadrature points.
    Fn(&'a (dyn Fn(&Point) -> f64 + Sync)),
    /// Pointwise map that also receives the cell index.
    CellFn(&'a (dyn Fn(&Point, usize) -> f64 + Sync)),
}

fn check(x: &Point, v: f64) -> Result<f64> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::Evaluation {
            x: x[0],
            y: x[1],
            value: v,
        })
    }
}

/// Cell contributions of `f`, in cell order.
pub(crate) fn cell_integrals(
    f: &Field<'_>,
    mesh: &Mesh,
    rule: &QuadratureRule,
) -> Result<Vec<f64>> {
    (0..mesh.num_cells())
        .into_par_iter()
        .map(|c| {
            let tri = mesh.cell_points(c);
            match f {
                Field::Cell(vals) => {
                    let v = vals[c];
                    check(&mesh.centroid(c), v).map(|v| v * mesh.geom()[c].area)
                }
                Field::Nodal(vals) => {
                    let [a, b, d] = mesh.cells()[c];
                    let mut s = 0.0;
                    for (r, w) in rule.points.iter().zip(&rule.weights) {
                        let v = (1.0 - r[0] - r[1]) * vals[a] + r[0] * vals[b] + r[1] * vals[d];
                        s += w * check(&tri[0], v)?;
                    }
                    Ok(s * 2.0 * mesh.geom()[c].area)
                }
                Field::Fn(g) => {
                    let mut s = 0.0;
                    for (x, w) in rule.mapped(&tri) {
                        s += w * check(&x, g(&x))?;
                    }
                    Ok(s)
                }
                Field::CellFn(g) => {
                    let mut s = 0.0;
                    for (x, w) in rule.mapped(&tri) {
                        s += w * check(&x, g(&x, c))?;
                    }
                    Ok(s)
                }
            }
        })
        .collect()
}

/// `∫_Ω f dx` over the mesh. Cell contributions are summed in cell order
/// with compensation, so the result does not depend on thread scheduling.
pub fn integrate(f: &Field<'_>, mesh: &Mesh, rule: &QuadratureRule) -> Result<f64> {
    Ok(ordered_sum(cell_integrals(f, mesh, rule)?))
}

/// Mesh quadrature of an integrand with a power singularity `|x − s|^e`
/// (`e > −2`) at a mesh node `s`. Cells touching `s` use a collapsed (Duffy)
/// product rule with the substitution `u = t^m`; the other cells use `rule`.
pub fn integrate_singular(
    f: &(dyn Fn(&Point, usize) -> f64 + Sync),
    mesh: &Mesh,
    rule: &QuadratureRule,
    singular: Point,
    exponent: f64,
) -> Result<f64> {
    if !(exponent > -2.0) {
        return Err(Error::Divergence(format!(
            "|x|^{exponent} is not integrable in the plane"
        )));
    }
    let m = (4.0 / (exponent + 2.0)).ceil().max(1.0);
    let (gx, gw) = gauss_legendre(16);
    let parts: Result<Vec<f64>> = (0..mesh.num_cells())
        .into_par_iter()
        .map(|c| {
            let tri = mesh.cell_points(c);
            let apex = tri.iter().position(|p| dist(p, &singular) < 1e-12);
            match apex {
                None => {
                    let mut s = 0.0;
                    for (x, w) in rule.mapped(&tri) {
                        s += w * check(&x, f(&x, c))?;
                    }
                    Ok(s)
                }
                Some(k) => {
                    let p0 = tri[k];
                    let p1 = tri[(k + 1) % 3];
                    let p2 = tri[(k + 2) % 3];
                    let jac2 = 2.0 * mesh.geom()[c].area;
                    let mut s = 0.0;
                    for (xi, wi) in gx.iter().zip(&gw) {
                        let t = 0.5 * (xi + 1.0);
                        let u = t.powf(m);
                        let du = m * t.powf(m - 1.0) * 0.5 * wi;
                        for (xj, wj) in gx.iter().zip(&gw) {
                            let v = 0.5 * (xj + 1.0);
                            let e = [
                                (1.0 - v) * (p1[0] - p0[0]) + v * (p2[0] - p0[0]),
                                (1.0 - v) * (p1[1] - p0[1]) + v * (p2[1] - p0[1]),
                            ];
                            let x = [p0[0] + u * e[0], p0[1] + u * e[1]];
                            s += du * 0.5 * wj * u * jac2 * check(&x, f(&x, c))?;
                        }
                    }
                    Ok(s)
                }
            }
        })
        .collect();
    Ok(ordered_sum(parts?))
}

/// Lower estimate of `[f]_{0,γ} = sup |f(x) − f(y)| / |x − y|^γ` over the given pairs.
pub fn holder_seminorm_estimate<P, F>(f: F, gamma: f64, pairs: &[(P, P)]) -> f64
where
    P: AsRef<[f64]>,
    F: Fn(&[f64]) -> f64,
{
    let mut best: f64 = 0.0;
    for (x, y) in pairs {
        let (x, y) = (x.as_ref(), y.as_ref());
        let d = x
            .iter()
            .zip(y)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt();
        if d == 0.0 {
            continue;
        }
        let r = (f(x) - f(y)).abs() / d.powf(gamma);
        if r.is_finite() {
            best = best.max(r);
        }
    }
    best
}

/// Hölder seminorm estimate of nodal values over mesh node pairs.
pub fn node_holder_seminorm(mesh: &Mesh, values: &[f64], gamma: f64, budget: usize) -> f64 {
    let pts = mesh.nodes();
    let plan = PairPlan::new(pts.len(), 2.0 * mesh.h(), budget);
    max_over_pairs(pts, plan, |i, j| {
        (values[i] - values[j]).abs() / dist(&pts[i], &pts[j]).powf(gamma)
    })
    .map_or(0.0, |(v, _, _)| v.max(0.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain_grid::build_disk_mesh;
    use std::f64::consts::PI;

    #[test]
    fn constant_has_zero_gradient() {
        let m = build_disk_mesh(1.0, 0.1).unwrap();
        let u = GridFunction::from_fn(&m, |_| 3.5);
        assert!(gradient(&u)
            .unwrap()
            .iter()
            .all(|g| g[0].abs() < 1e-12 && g[1].abs() < 1e-12));
    }

    #[test]
    fn linear_is_reproduced() {
        let m = build_disk_mesh(1.0, 0.1).unwrap();
        let u = GridFunction::from_fn(&m, |x| x[0]);
        for g in gradient(&u).unwrap() {
            assert!((g[0] - 1.0).abs() < 1e-12 && g[1].abs() < 1e-12);
        }
    }

    fn max_grad_error(h: f64) -> f64 {
        let m = build_disk_mesh(1.0, h).unwrap();
        let u = GridFunction::from_fn(&m, |x| x[0] * x[0] + x[1] * x[1]);
        gradient(&u)
            .unwrap()
            .iter()
            .enumerate()
            .map(|(c, g)| {
                let p = m.centroid(c);
                (g[0] - 2.0 * p[0]).hypot(g[1] - 2.0 * p[1])
            })
            .fold(0.0, f64::max)
    }

    #[test]
    fn quadratic_gradient_error_is_first_order() {
        let e1 = max_grad_error(1.0 / 32.0);
        let e2 = max_grad_error(1.0 / 64.0);
        assert!(e1 < 2.0 / 32.0, "{e1}");
        assert!(e2 < 0.7 * e1, "{e1} {e2}");
    }

    #[test]
    fn integrals_on_unit_disk() {
        let m = build_disk_mesh(1.0, 1.0 / 64.0).unwrap();
        let rule = QuadratureRule::default();
        let one = integrate(&Field::Fn(&|_| 1.0), &m, &rule).unwrap();
        assert!((one - PI).abs() < 0.01);
        let odd = integrate(&Field::Fn(&|x| x[0]), &m, &rule).unwrap();
        assert!(odd.abs() < 0.01);
        let r2 = integrate(&Field::Fn(&|x| x[0] * x[0] + x[1] * x[1]), &m, &rule).unwrap();
        // polar oracle: 2π ∫₀¹ ρ³ dρ
        let oracle = 2.0 * PI * 0.25;
        assert!((r2 - oracle).abs() < 0.01, "{r2}");
    }

    #[test]
    fn non_finite_integrand_is_an_error() {
        let m = build_disk_mesh(1.0, 0.25).unwrap();
        let r = integrate(
            &Field::Fn(&|x| if x[0] > 0.5 { f64::NAN } else { 1.0 }),
            &m,
            &QuadratureRule::default(),
        );
        assert!(matches!(r, Err(Error::Evaluation { .. })));
    }

    #[test]
    fn singular_integral_matches_polar_value() {
        // ∫_{B₁} |x|^{-3/2} dx = 2π ∫₀¹ ρ^{-1/2} dρ = 4π
        let m = build_disk_mesh(1.0, 1.0 / 16.0).unwrap();
        let v = integrate_singular(
            &|x, _| (x[0] * x[0] + x[1] * x[1]).powf(-0.75),
            &m,
            &QuadratureRule::default(),
            [0.0, 0.0],
            -1.5,
        )
        .unwrap();
        // polygonal boundary loses O(h²) of the outer ring
        assert!((v - 4.0 * PI).abs() / (4.0 * PI) < 5e-3, "{v}");
    }

    #[test]
    fn holder_examples() {
        let pairs: Vec<([f64; 1], [f64; 1])> = (0..200)
            .flat_map(|i| (0..200).map(move |j| ([i as f64 / 199.0], [j as f64 / 199.0])))
            .collect();
        assert_eq!(holder_seminorm_estimate(|_| 2.0, 0.5, &pairs), 0.0);
        assert!((holder_seminorm_estimate(|x| x[0], 1.0, &pairs) - 1.0).abs() < 1e-6);
        let s = holder_seminorm_estimate(|x| x[0].sqrt(), 0.5, &pairs);
        assert!((s - 1.0).abs() < 0.01, "{s}");
        let empty: Vec<([f64; 1], [f64; 1])> = Vec::new();
        assert_eq!(holder_seminorm_estimate(|x| x[0], 1.0, &empty), 0.0);
    }
}
