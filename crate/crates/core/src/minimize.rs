//! Minimization of the discrete double-phase energy with fixed boundary
//! values, mollified competitor families, and the density, no-gap and gap
//! experiments built on them.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::counterexample::{
    gap_report, radial_variation_check, u0_eval, u_star_eval, upper_bound_on_mesh,
    young_chain_from_energy, GapReport, RadialVariationReport, SharpnessInstance, UpperBoundCheck,
    YoungReport,
};
use crate::domain_grid::{build_disk_mesh, gradient, Domain, GridFunction, Mesh, Point};
use crate::energy::{
    energy, energy_from_gradients, modular, modular_distance, regime_classify,
    DoublePhaseIntegrand, EnergyBreakdown, Regime,
};
use crate::mollify::{tent, Kernel, ShrinkMollifier};
use crate::tolerances::SOLVER_EPS;
use crate::weights::{MembershipVerdict, Weight};
use crate::{Error, Result};

/// Discrete problem: minimize the energy over P1 functions with prescribed
/// values on the boundary nodes.
#[derive(Debug, Clone)]
pub struct DiscreteProblem<'m> {
    pub mesh: &'m Mesh,
    pub integrand: DoublePhaseIntegrand,
    boundary: Vec<(usize, f64)>,
    cell_weights: Vec<f64>,
    /// Position of each node among the free unknowns.
    free_index: Vec<Option<usize>>,
    free: Vec<usize>,
}

impl<'m> DiscreteProblem<'m> {
    /// Boundary values taken from `g` at the boundary nodes.
    pub fn new(
        mesh: &'m Mesh,
        integrand: DoublePhaseIntegrand,
        g: impl Fn(&Point) -> f64,
    ) -> Result<Self> {
        let values: Vec<f64> = mesh.nodes().iter().map(&g).collect();
        Self::from_values(mesh, integrand, &values)
    }

    /// Boundary values read off a full nodal vector.
    pub fn from_values(
        mesh: &'m Mesh,
        integrand: DoublePhaseIntegrand,
        values: &[f64],
    ) -> Result<Self> {
        if values.len() != mesh.num_nodes() {
            return Err(Error::Parameter(
                "boundary vector does not match the mesh".into(),
            ));
        }
        let boundary: Vec<(usize, f64)> = mesh
            .boundary_nodes()
            .iter()
            .map(|&i| (i, values[i]))
            .collect();
        if boundary.iter().any(|(_, v)| !v.is_finite()) {
            return Err(Error::Parameter("non-finite boundary value".into()));
        }
        let mask = mesh.is_boundary_mask();
        let mut free_index = vec![None; mesh.num_nodes()];
        let mut free = Vec::new();
        for i in 0..mesh.num_nodes() {
            if !mask[i] {
                free_index[i] = Some(free.len());
                free.push(i);
            }
        }
        let cell_weights = integrand.cell_weights(mesh)?;
        Ok(Self {
            mesh,
            integrand,
            boundary,
            cell_weights,
            free_index,
            free,
        })
    }

    pub fn boundary(&self) -> &[(usize, f64)] {
        &self.boundary
    }

    pub fn num_free(&self) -> usize {
        self.free.len()
    }

    pub fn cell_weights(&self) -> &[f64] {
        &self.cell_weights
    }

    /// Largest deviation of `values` from the boundary data.
    pub fn boundary_mismatch(&self, values: &[f64]) -> f64 {
        self.boundary
            .iter()
            .map(|&(i, g)| (values[i] - g).abs())
            .fold(0.0, f64::max)
    }

    pub fn energy(&self, values: &[f64]) -> Result<EnergyBreakdown> {
        let u = GridFunction::new(self.mesh, values.to_vec())?;
        energy_from_gradients(
            &self.integrand,
            self.mesh,
            &gradient(&u)?,
            &self.cell_weights,
        )
    }

    fn cell_gradient(&self, values: &[f64], c: usize) -> [f64; 2] {
        let cell = self.mesh.cells()[c];
        let g = &self.mesh.geom()[c];
        let (d1, d2) = (
            values[cell[1]] - values[cell[0]],
            values[cell[2]] - values[cell[0]],
        );
        [
            d1 * g.basis_grad[1][0] + d2 * g.basis_grad[2][0],
            d1 * g.basis_grad[1][1] + d2 * g.basis_grad[2][1],
        ]
    }

    /// Regularized objective `Σ_c |c| (s^{p/2}) + A_c s^{q/2}` with `s = |∇u|² + ε²`.
    fn objective(&self, values: &[f64], eps: f64) -> f64 {
        let (p, q) = (self.integrand.p, self.integrand.q);
        let parts: Vec<f64> = (0..self.mesh.num_cells())
            .into_par_iter()
            .map(|c| {
                let g = self.cell_gradient(values, c);
                let s = g[0] * g[0] + g[1] * g[1] + eps * eps;
                let area = self.mesh.geom()[c].area;
                let mut e = area * s.powf(0.5 * p);
                if self.cell_weights[c] > 0.0 {
                    e += self.cell_weights[c] * s.powf(0.5 * q);
                }
                e
            })
            .collect();
        crate::domain_grid::ordered_sum(parts)
    }

    /// Per-cell gradient (w.r.t. the three nodal values) and 3×3 Hessian.
    fn cell_derivatives(&self, values: &[f64], eps: f64) -> Vec<([f64; 3], [[f64; 3]; 3])> {
        let (p, q) = (self.integrand.p, self.integrand.q);
        (0..self.mesh.num_cells())
            .into_par_iter()
            .map(|c| {
                let g = self.cell_gradient(values, c);
                let geom = &self.mesh.geom()[c];
                let s = g[0] * g[0] + g[1] * g[1] + eps * eps;
                let (area, wa) = (geom.area, self.cell_weights[c]);
                // f(s) = area s^{p/2} + wa s^{q/2}; ∂_g = 2 f'(s) g, ∂²_g = 2 f' I + 4 f'' g gᵀ
                let d1 = |e: f64| 0.5 * e * s.powf(0.5 * e - 1.0);
                let d2 = |e: f64| {
                    if e == 2.0 {
                        0.0
                    } else {
                        0.5 * e * (0.5 * e - 1.0) * s.powf(0.5 * e - 2.0)
                    }
                };
                let mut f1 = area * d1(p);
                let mut f2 = area * d2(p);
                if wa > 0.0 {
                    f1 += wa * d1(q);
                    f2 += wa * d2(q);
                }
                let dg = [2.0 * f1 * g[0], 2.0 * f1 * g[1]];
                let h = [
                    [2.0 * f1 + 4.0 * f2 * g[0] * g[0], 4.0 * f2 * g[0] * g[1]],
                    [4.0 * f2 * g[0] * g[1], 2.0 * f1 + 4.0 * f2 * g[1] * g[1]],
                ];
                let b = &geom.basis_grad;
                let mut grad = [0.0; 3];
                let mut hess = [[0.0; 3]; 3];
                for i in 0..3 {
                    grad[i] = dg[0] * b[i][0] + dg[1] * b[i][1];
                    let hb = [
                        h[0][0] * b[i][0] + h[0][1] * b[i][1],
                        h[1][0] * b[i][0] + h[1][1] * b[i][1],
                    ];
                    for j in 0..3 {
                        hess[j][i] = hb[0] * b[j][0] + hb[1] * b[j][1];
                    }
                }
                (grad, hess)
            })
            .collect()
    }
}

/// Symmetric sparse matrix on the free unknowns, compressed rows.
struct Csr {
    row_start: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
}

impl Csr {
    fn pattern(problem: &DiscreteProblem<'_>) -> Self {
        let n = problem.num_free();
        let mut rows: Vec<Vec<usize>> = vec![Vec::new(); n];
        for cell in problem.mesh.cells() {
            for &a in cell {
                if let Some(ia) = problem.free_index[a] {
                    for &b in cell {
                        if let Some(ib) = problem.free_index[b] {
                            rows[ia].push(ib);
                        }
                    }
                }
            }
        }
        let mut row_start = Vec::with_capacity(n + 1);
        let mut cols = Vec::new();
        row_start.push(0);
        for mut r in rows {
            r.sort_unstable();
            r.dedup();
            cols.extend(r);
            row_start.push(cols.len());
        }
        let vals = vec![0.0; cols.len()];
        Self {
            row_start,
            cols,
            vals,
        }
    }

    fn slot(&self, i: usize, j: usize) -> usize {
        let r = &self.cols[self.row_start[i]..self.row_start[i + 1]];
        self.row_start[i] + r.binary_search(&j).expect("entry in pattern")
    }

    fn mul(&self, x: &[f64], y: &mut [f64]) {
        y.par_iter_mut().enumerate().for_each(|(i, yi)| {
            let mut s = 0.0;
            for k in self.row_start[i]..self.row_start[i + 1] {
                s += self.vals[k] * x[self.cols[k]];
            }
            *yi = s;
        });
    }

    fn diagonal(&self) -> Vec<f64> {
        (0..self.row_start.len() - 1)
            .map(|i| self.vals[self.slot(i, i)])
            .collect()
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    // fixed-order reduction keeps results independent of thread count
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Jacobi-preconditioned conjugate gradients. Returns the iterate and the
/// iteration count; `None` if a non-positive curvature is met.
fn pcg(a: &Csr, b: &[f64], rtol: f64, max_iter: usize) -> Option<(Vec<f64>, usize, bool)> {
    let n = b.len();
    let diag = a.diagonal();
    let mut x = vec![0.0; n];
    let mut r = b.to_vec();
    let mut z: Vec<f64> = r.iter().zip(&diag).map(|(r, d)| r / d).collect();
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let b_norm = dot(b, b).sqrt();
    if b_norm == 0.0 {
        return Some((x, 0, true));
    }
    let mut ap = vec![0.0; n];
    for it in 0..max_iter {
        a.mul(&p, &mut ap);
        let pap = dot(&p, &ap);
        if !(pap > 0.0) {
            return if it == 0 { None } else { Some((x, it, false)) };
        }
        let alpha = rz / pap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        if dot(&r, &r).sqrt() <= rtol * b_norm {
            return Some((x, it + 1, true));
        }
        for i in 0..n {
            z[i] = r[i] / diag[i];
        }
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    Some((x, max_iter, false))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverOptions {
    /// Stop when the Newton decrement `−⟨∇E, d⟩`, relative to the initial
    /// energy, falls below this.
    pub tol: f64,
    pub max_iter: usize,
    /// Gradient regularization `√(|∇u|² + ε²)`, used inside the solver only.
    pub eps: f64,
    pub cg_max_iter: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            max_iter: 200,
            eps: SOLVER_EPS,
            cg_max_iter: 4000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub iteration: usize,
    /// Unregularized energy after the step.
    pub energy: f64,
    /// Regularized objective after the step.
    pub objective: f64,
    pub residual: f64,
    pub step: f64,
    pub cg_iterations: usize,
    pub direction: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MinimizerResult {
    #[serde(skip)]
    pub values: Vec<f64>,
    pub energy: EnergyBreakdown,
    pub initial_energy: EnergyBreakdown,
    pub iterations: usize,
    pub residual: f64,
    pub converged: bool,
    pub history: Vec<IterationRecord>,
    pub diagnostic: Option<String>,
}

impl MinimizerResult {
    pub fn field<'m>(&self, mesh: &'m Mesh) -> Result<GridFunction<'m>> {
        GridFunction::new(mesh, self.values.clone())
    }
}

/// Damped Newton with Armijo backtracking on the regularized energy. The
/// Newton system is solved inexactly by preconditioned CG; when CG or the
/// line search fails the step falls back to steepest descent.
pub fn minimize_energy(
    problem: &DiscreteProblem<'_>,
    initial: &GridFunction<'_>,
    opts: &SolverOptions,
) -> Result<MinimizerResult> {
    if !std::ptr::eq(initial.mesh(), problem.mesh) {
        return Err(Error::Parameter(
            "initial iterate lives on a different mesh".into(),
        ));
    }
    let mismatch = problem.boundary_mismatch(initial.values());
    if mismatch > 1e-12 * (1.0 + initial.max_abs()) {
        return Err(Error::Precondition(format!(
            "initial iterate misses the boundary data by {mismatch:e}"
        )));
    }
    let mut u = initial.values().to_vec();
    for &(i, g) in problem.boundary() {
        u[i] = g;
    }
    let initial_energy = problem.energy(&u)?;
    if !initial_energy.total.is_finite() {
        return Err(Error::Parameter(
            "energy of the initial iterate is not finite".into(),
        ));
    }
    let eps = opts.eps;
    let mut obj = problem.objective(&u, eps);
    let scale = obj.max(1e-300);
    let mut csr = Csr::pattern(problem);
    let mut history = Vec::new();
    let mut residual = f64::INFINITY;
    let mut converged = false;
    let mut diagnostic = None;
    let mut iterations = 0;
    let free = &problem.free;

    for it in 0..opts.max_iter {
        let derivs = problem.cell_derivatives(&u, eps);
        let mut grad = vec![0.0; free.len()];
        csr.vals.iter_mut().for_each(|v| *v = 0.0);
        for (c, (g, h)) in derivs.iter().enumerate() {
            let cell = problem.mesh.cells()[c];
            for a in 0..3 {
                if let Some(ia) = problem.free_index[cell[a]] {
                    grad[ia] += g[a];
                    for b in 0..3 {
                        if let Some(ib) = problem.free_index[cell[b]] {
                            let k = csr.slot(ia, ib);
                            csr.vals[k] += h[a][b];
                        }
                    }
                }
            }
        }
        let gnorm = dot(&grad, &grad).sqrt();
        if gnorm == 0.0 {
            residual = 0.0;
            converged = true;
            break;
        }
        let neg: Vec<f64> = grad.iter().map(|g| -g).collect();
        let forcing = (gnorm / scale).sqrt().min(1e-2).max(1e-12);
        let newton = pcg(&csr, &neg, forcing, opts.cg_max_iter);
        let mut candidates: Vec<(Vec<f64>, &str, usize)> = Vec::new();
        if let Some((d, cg_it, _)) = newton {
            if dot(&d, &grad) < 0.0 {
                candidates.push((d, "newton", cg_it));
            }
        }
        let diag = csr.diagonal();
        candidates.push((
            neg.iter().zip(&diag).map(|(g, d)| g / d).collect(),
            "gradient",
            0,
        ));

        let mut accepted = false;
        for (d, kind, cg_it) in candidates {
            let slope = dot(&d, &grad);
            residual = -slope / scale;
            if kind == "newton" && residual <= opts.tol {
                converged = true;
                accepted = true;
                break;
            }
            let mut alpha = 1.0;
            let mut trial = u.clone();
            let step_to = |a: f64, trial: &mut Vec<f64>| {
                for (k, &i) in free.iter().enumerate() {
                    trial[i] = u[i] + a * d[k];
                }
                problem.objective(trial, eps)
            };
            while alpha > 1e-12 {
                let mut t_obj = step_to(alpha, &mut trial);
                if t_obj.is_finite() && t_obj <= obj + 1e-4 * alpha * slope {
                    // keep halving while it still pays; p < 2 makes full Newton steps overshoot
                    loop {
                        let half = step_to(0.5 * alpha, &mut trial);
                        if !(half < t_obj) {
                            break;
                        }
                        alpha *= 0.5;
                        t_obj = half;
                    }
                    for (k, &i) in free.iter().enumerate() {
                        u[i] += alpha * d[k];
                    }
                    obj = problem.objective(&u, eps);
                    iterations = it + 1;
                    history.push(IterationRecord {
                        iteration: it + 1,
                        energy: problem.energy(&u)?.total,
                        objective: obj,
                        residual,
                        step: alpha,
                        cg_iterations: cg_it,
                        direction: kind.to_string(),
                    });
                    accepted = true;
                    break;
                }
                alpha *= 0.5;
            }
            if accepted {
                break;
            }
        }
        if converged {
            break;
        }
        if !accepted {
            diagnostic = Some(format!(
                "line search failed at iteration {it}; returning the best iterate"
            ));
            break;
        }
    }
    if !converged && diagnostic.is_none() {
        diagnostic = Some(format!(
            "stopped after {} iterations with residual {residual:e}",
            opts.max_iter
        ));
    }
    Ok(MinimizerResult {
        energy: problem.energy(&u)?,
        values: u,
        initial_energy,
        iterations,
        residual,
        converged,
        history,
        diagnostic,
    })
}

/// Discrete harmonic extension of the boundary data, used as the warm start.
pub fn harmonic_extension<'m>(problem: &DiscreteProblem<'m>) -> Result<GridFunction<'m>> {
    let dirichlet = DoublePhaseIntegrand::new(2.0, 3.0, Weight::zero())?;
    let mut values = vec![0.0; problem.mesh.num_nodes()];
    for &(i, g) in problem.boundary() {
        values[i] = g;
    }
    let lap = DiscreteProblem::from_values(problem.mesh, dirichlet, &values)?;
    let start = GridFunction::new(problem.mesh, values)?;
    let opts = SolverOptions {
        tol: 1e-14,
        max_iter: 4,
        eps: 0.0,
        cg_max_iter: 20_000,
    };
    lap.field_from(minimize_energy(&lap, &start, &opts)?)
}

impl<'m> DiscreteProblem<'m> {
    fn field_from(&self, r: MinimizerResult) -> Result<GridFunction<'m>> {
        GridFunction::new(self.mesh, r.values)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompetitorFamily {
    pub label: String,
    pub deltas: Vec<f64>,
    pub energies: Vec<EnergyBreakdown>,
    /// `max |w_δ − u₀|` over boundary nodes.
    pub boundary_deviation: Vec<f64>,
    #[serde(skip)]
    pub members: Vec<Vec<f64>>,
}

/// Members `w_δ = u₀ + S_δ v` for each `δ`, with their energies.
pub fn mollified_competitor_family(
    label: &str,
    v: &GridFunction<'_>,
    u0: &GridFunction<'_>,
    deltas: &[f64],
    kernel: &Kernel,
    domain: &Domain,
    integrand: &DoublePhaseIntegrand,
) -> Result<CompetitorFamily> {
    let mesh = v.mesh();
    if !std::ptr::eq(mesh, u0.mesh()) {
        return Err(Error::Parameter(
            "perturbation and datum live on different meshes".into(),
        ));
    }
    let scale = 1.0 + v.max_abs();
    if let Some(&i) = mesh
        .boundary_nodes()
        .iter()
        .find(|&&i| v.values()[i].abs() > 1e-12 * scale)
    {
        return Err(Error::Precondition(format!(
            "perturbation is {} at boundary node {i}",
            v.values()[i]
        )));
    }
    let weights = integrand.cell_weights(mesh)?;
    let mut fam = CompetitorFamily {
        label: label.to_string(),
        deltas: deltas.to_vec(),
        energies: Vec::new(),
        boundary_deviation: Vec::new(),
        members: Vec::new(),
    };
    for &d in deltas {
        let m = ShrinkMollifier::for_domain(d, domain, kernel.clone())?;
        let w = u0.add(&m.apply(v)?)?;
        let dev = mesh
            .boundary_nodes()
            .iter()
            .map(|&i| (w.values()[i] - u0.values()[i]).abs())
            .fold(0.0, f64::max);
        fam.energies.push(energy_from_gradients(
            integrand,
            mesh,
            &gradient(&w)?,
            &weights,
        )?);
        fam.boundary_deviation.push(dev);
        fam.members.push(w.into_values());
    }
    Ok(fam)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensityRow {
    pub delta: f64,
    pub modular_distance: f64,
    /// `modular_distance / ∫ M(x, |∇φ|)`.
    pub relative: f64,
    /// `|F[S_δφ] − F[φ]| / F[φ]`.
    pub energy_gap: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensityReport {
    pub p: f64,
    pub q: f64,
    pub kappa: f64,
    pub gamma: Option<f64>,
    pub certified: bool,
    pub warning: Option<String>,
    pub modular_of_phi: f64,
    pub rows: Vec<DensityRow>,
    pub decreasing: bool,
    pub final_relative: f64,
}

/// Modular distance between `∇S_δφ` and `∇φ` along a sequence of `δ`. The
/// run is certified when the weight is stable at level `κ` and either
/// `κ ≥ q − p`, or `γ` is given with `κ ≥ (q − p)(1 − γ)`; otherwise it still
/// runs and carries a warning.
pub fn density_convergence_experiment(
    phi: &GridFunction<'_>,
    integrand: &DoublePhaseIntegrand,
    verdict: &MembershipVerdict,
    gamma: Option<f64>,
    deltas: &[f64],
    kernel: &Kernel,
    domain: &Domain,
) -> Result<DensityReport> {
    let mesh = phi.mesh();
    let (p, q, kappa) = (integrand.p, integrand.q, verdict.kappa);
    let range_ok = match gamma {
        None => kappa >= q - p,
        Some(g) => kappa >= (q - p) * (1.0 - g),
    };
    let certified = verdict.is_stable() && range_ok;
    let warning = if certified {
        None
    } else if !verdict.is_stable() {
        Some(format!("weight is not certified at κ = {kappa}"))
    } else {
        Some(format!(
            "κ = {kappa} is below the required range for p = {p}, q = {q}, γ = {gamma:?}"
        ))
    };
    let gphi = gradient(phi)?;
    let weights = integrand.cell_weights(mesh)?;
    let base = modular(integrand, mesh, &gphi)?;
    let f_phi = energy_from_gradients(integrand, mesh, &gphi, &weights)?.total;
    let mut rows = Vec::new();
    for &d in deltas {
        let m = ShrinkMollifier::for_domain(d, domain, kernel.clone())?;
        let gs = gradient(&m.apply(phi)?)?;
        let dist = modular_distance(integrand, mesh, &gs, &gphi)?;
        let fs = energy_from_gradients(integrand, mesh, &gs, &weights)?.total;
        rows.push(DensityRow {
            delta: d,
            modular_distance: dist,
            relative: if base > 0.0 { dist / base } else { dist },
            energy_gap: if f_phi > 0.0 {
                (fs - f_phi).abs() / f_phi
            } else {
                fs
            },
        });
    }
    let decreasing = rows
        .windows(2)
        .all(|w| w[1].modular_distance < w[0].modular_distance);
    let final_relative = rows.last().map_or(f64::NAN, |r| r.relative);
    Ok(DensityReport {
        p,
        q,
        kappa,
        gamma,
        certified,
        warning,
        modular_of_phi: base,
        rows,
        decreasing,
        final_relative,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverSummary {
    pub energy: f64,
    pub iterations: usize,
    pub residual: f64,
    pub converged: bool,
    pub diagnostic: Option<String>,
}

impl From<&MinimizerResult> for SolverSummary {
    fn from(r: &MinimizerResult) -> Self {
        Self {
            energy: r.energy.total,
            iterations: r.iterations,
            residual: r.residual,
            converged: r.converged,
            diagnostic: r.diagnostic.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoGapRow {
    pub h: f64,
    pub nodes: usize,
    pub discrete_min: f64,
    pub solver: SolverSummary,
    pub competitors: CompetitorFamily,
    pub best_competitor: f64,
    /// `(best competitor − discrete minimum) / discrete minimum`.
    pub relative_agreement: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoGapReport {
    pub regime: Regime,
    pub rows: Vec<NoGapRow>,
    pub final_agreement: f64,
    pub improving: bool,
}

/// Discrete minimum against smooth competitors `I(g) + S_δ(u_h − I(g))` on a
/// sequence of disk meshes. `g` supplies the boundary data and its extension;
/// `kappa` is the level at which the weight is known to lie.
pub fn no_gap_experiment(
    integrand: &DoublePhaseIntegrand,
    kappa: f64,
    g: &(dyn Fn(&Point) -> f64 + Sync),
    h_list: &[f64],
    deltas: &[f64],
    kernel: &Kernel,
    opts: &SolverOptions,
) -> Result<NoGapReport> {
    let regime = regime_classify(2, integrand.p, integrand.q, kappa, None)?.verdict;
    if !matches!(
        regime,
        Regime::NoGapI | Regime::NoGapHolder | Regime::NoGapMorrey
    ) {
        return Err(Error::Precondition(format!(
            "parameters fall in regime {regime}, not a no-gap range"
        )));
    }
    let domain = Domain::unit_disk();
    let mut rows = Vec::new();
    for &h in h_list {
        let mesh = build_disk_mesh(1.0, h)?;
        let problem = DiscreteProblem::new(&mesh, integrand.clone(), g)?;
        let start = harmonic_extension(&problem)?;
        let result = minimize_energy(&problem, &start, opts)?;
        let uh = result.field(&mesh)?;
        let datum = GridFunction::from_fn(&mesh, g);
        let mut v = uh.add(&datum.scaled(-1.0))?;
        for &i in mesh.boundary_nodes() {
            v.values_mut()[i] = 0.0;
        }
        let fam = mollified_competitor_family(
            "mollified minimizer",
            &v,
            &datum,
            deltas,
            kernel,
            &domain,
            integrand,
        )?;
        let best = fam
            .energies
            .iter()
            .map(|e| e.total)
            .fold(f64::INFINITY, f64::min);
        let min = result.energy.total;
        rows.push(NoGapRow {
            h,
            nodes: mesh.num_nodes(),
            discrete_min: min,
            solver: SolverSummary::from(&result),
            best_competitor: best,
            relative_agreement: if min > 0.0 {
                (best - min) / min
            } else {
                best - min
            },
            competitors: fam,
        });
    }
    let final_agreement = rows.last().map_or(f64::NAN, |r| r.relative_agreement);
    let improving = rows
        .windows(2)
        .all(|w| w[1].relative_agreement.abs() <= w[0].relative_agreement.abs());
    Ok(NoGapReport {
        regime,
        rows,
        final_agreement,
        improving,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GapParams {
    pub n: usize,
    pub p: f64,
    pub q: f64,
    pub kappa: f64,
    pub safety_factor: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompetitorRecord {
    pub label: String,
    pub delta: Option<f64>,
    pub energy: EnergyBreakdown,
    pub boundary_deviation: f64,
    pub radial_variation: RadialVariationReport,
    pub young: YoungReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GapLevel {
    pub h: f64,
    pub nodes: usize,
    pub upper_on_mesh: UpperBoundCheck,
    /// Energy of the interpolant of `t₀u*`; it has no smooth counterpart.
    pub interpolated_upper: EnergyBreakdown,
    pub fem: SolverSummary,
    pub competitors: Vec<CompetitorRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GapExperimentReport {
    pub regime: Regime,
    pub levels: Vec<GapLevel>,
    /// Bounds and competitors at the finest level.
    pub gap: GapReport,
    pub radial_variation_passed: bool,
    pub young_passed: bool,
}

impl GapExperimentReport {
    pub fn ensure_bound(&self) -> Result<()> {
        self.gap.ensure_bound()
    }

    pub fn passed(&self) -> bool {
        self.gap.verdict && self.radial_variation_passed && self.young_passed
    }
}

/// The planar counterexample on a sequence of meshes. Smooth competitors are
/// `I(u₀) + S_δ v` for `v` in {`t₀u* − u₀`, `t₀·tent`, `u_h − I(u₀)`} with
/// `u_h` the finite-element minimizer started from `I(u₀)`, plus `I(u₀)`
/// itself. Every competitor is checked against the lower bound, the
/// radial-variation inequality and the Young chain.
pub fn gap_experiment(
    params: &GapParams,
    h_list: &[f64],
    deltas: &[f64],
    kernel: &Kernel,
    opts: &SolverOptions,
) -> Result<GapExperimentReport> {
    if params.n != 2 {
        return Err(Error::Parameter(
            "competitor experiments run in the plane (n = 2)".into(),
        ));
    }
    let regime = regime_classify(params.n, params.p, params.q, params.kappa, None)?.verdict;
    if regime != Regime::GapSharpness {
        return Err(Error::Precondition(format!(
            "parameters fall in regime {regime}, not the gap range"
        )));
    }
    if h_list.is_empty() {
        return Err(Error::Parameter("need at least one mesh size".into()));
    }
    let inst = SharpnessInstance::new(
        params.n,
        params.p,
        params.q,
        params.kappa,
        params.safety_factor,
    )?;
    let integrand = inst.integrand()?;
    let domain = Domain::unit_disk();
    let lambdas = crate::counterexample::default_lambdas(&inst);
    let t0 = inst.t0;
    let mut levels = Vec::new();
    for &h in h_list {
        let mesh = build_disk_mesh(1.0, h)?;
        let u0 = GridFunction::from_fn(&mesh, |x| u0_eval(x, t0));
        let problem = DiscreteProblem::from_values(&mesh, integrand.clone(), u0.values())?;
        let fem = minimize_energy(&problem, &u0, opts)?;
        let mut perturbations: Vec<(&str, GridFunction<'_>)> = vec![
            (
                "toward t0 u*",
                GridFunction::from_fn(&mesh, |x| {
                    t0 * u_star_eval(x) * (1.0 - x[0] * x[0] - x[1] * x[1])
                }),
            ),
            ("tent", GridFunction::from_fn(&mesh, |x| t0 * tent(x))),
            ("fem minimizer", fem.field(&mesh)?.add(&u0.scaled(-1.0))?),
        ];
        for (_, v) in perturbations.iter_mut() {
            for &i in mesh.boundary_nodes() {
                v.values_mut()[i] = 0.0;
            }
        }
        let mut competitors = Vec::new();
        let e0 = energy(&integrand, &u0)?;
        competitors.push(CompetitorRecord {
            label: "u0".into(),
            delta: None,
            energy: e0,
            boundary_deviation: 0.0,
            radial_variation: radial_variation_check(&u0, &inst)?,
            young: young_chain_from_energy(e0.total, &lambdas, &inst)?,
        });
        for (label, v) in &perturbations {
            let fam =
                mollified_competitor_family(label, v, &u0, deltas, kernel, &domain, &integrand)?;
            for (k, &d) in deltas.iter().enumerate() {
                let w = GridFunction::new(&mesh, fam.members[k].clone())?;
                competitors.push(CompetitorRecord {
                    label: format!("{label} δ={d}"),
                    delta: Some(d),
                    energy: fam.energies[k],
                    boundary_deviation: fam.boundary_deviation[k],
                    radial_variation: radial_variation_check(&w, &inst)?,
                    young: young_chain_from_energy(fam.energies[k].total, &lambdas, &inst)?,
                });
            }
        }
        let tu = GridFunction::from_fn(&mesh, |x| t0 * u_star_eval(x));
        levels.push(GapLevel {
            h,
            nodes: mesh.num_nodes(),
            upper_on_mesh: upper_bound_on_mesh(&inst, &mesh)?,
            interpolated_upper: energy(&integrand, &tu)?,
            fem: SolverSummary::from(&fem),
            competitors,
        });
    }
    let finest = levels.last().expect("nonempty");
    let gap = gap_report(
        &inst,
        finest
            .competitors
            .iter()
            .map(|c| (c.label.clone(), c.delta, c.energy.total))
            .collect(),
    );
    let radial_variation_passed = levels
        .iter()
        .all(|l| l.competitors.iter().all(|c| c.radial_variation.passed));
    let young_passed = levels
        .iter()
        .all(|l| l.competitors.iter().all(|c| c.young.passed));
    Ok(GapExperimentReport {
        regime,
        levels,
        gap,
        radial_variation_passed,
        young_passed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::weights::power_weight;

    #[test]
    fn linear_data_gives_linear_minimizer() {
        let mesh = build_disk_mesh(1.0, 0.1).unwrap();
        let integ = DoublePhaseIntegrand::new(2.0, 3.0, Weight::zero()).unwrap();
        let prob = DiscreteProblem::new(&mesh, integ, |x| x[0]).unwrap();
        let start = harmonic_extension(&prob).unwrap();
        let r = minimize_energy(&prob, &start, &SolverOptions::default()).unwrap();
        assert!(r.converged);
        for (x, v) in mesh.nodes().iter().zip(&r.values) {
            assert!((v - x[0]).abs() < 1e-8);
        }
        // the polygon area approaches π
        assert!((r.energy.total - mesh.volume()).abs() < 1e-8);
        assert!((r.energy.total - std::f64::consts::PI).abs() < 0.05);
    }

    #[test]
    fn constant_data_gives_zero_energy() {
        let mesh = build_disk_mesh(1.0, 0.15).unwrap();
        let integ =
            DoublePhaseIntegrand::new(1.5, 3.0, power_weight(1.0, [0.0, 0.0]).unwrap()).unwrap();
        let prob = DiscreteProblem::new(&mesh, integ, |_| 2.0).unwrap();
        let start =
            GridFunction::from_fn(&mesh, |x| if x[0].hypot(x[1]) > 0.999 { 2.0 } else { x[0] });
        let opts = SolverOptions {
            tol: 1e-18,
            ..SolverOptions::default()
        };
        let r = minimize_energy(&prob, &start, &opts).unwrap();
        assert!(r.energy.total < 1e-10, "{:?}", r.energy);
    }

    #[test]
    fn energy_never_increases() {
        let mesh = build_disk_mesh(1.0, 0.1).unwrap();
        let integ =
            DoublePhaseIntegrand::new(1.5, 4.0, power_weight(1.0, [0.0, 0.0]).unwrap()).unwrap();
        let prob =
            DiscreteProblem::new(&mesh, integ, |x| (3.0 * x[0]).sin() + x[1] * x[1]).unwrap();
        let start = harmonic_extension(&prob).unwrap();
        let r = minimize_energy(&prob, &start, &SolverOptions::default()).unwrap();
        assert!(r.converged, "{:?}", r.diagnostic);
        let mut prev = prob.objective(start.values(), SOLVER_EPS);
        for rec in &r.history {
            assert!(rec.objective <= prev);
            prev = rec.objective;
        }
        assert!(r.energy.total <= r.initial_energy.total);
    }
}
