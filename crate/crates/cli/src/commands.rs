//! One function per subcommand. Each resolves its configuration (file, then
//! flags), runs the experiment and returns the checks, tables and plots.

use std::fs::File;
use std::io::BufReader;
use std::path::Path;

use anyhow::{bail, Context, Result};
use lavgap_core::counterexample::{
    compute_r1, compute_r2, compute_r3, r2_on_mesh, t0_threshold, upper_bound_on_mesh,
    SharpnessInstance,
};
use lavgap_core::domain_grid::{
    build_disk_mesh, gradient, read_field_csv, read_mesh_json, write_field_csv, write_mesh_json,
    Domain, GridFunction, Mesh,
};
use lavgap_core::energy::{energy, luxemburg_norm, modular, regime_classify, validate_parameters};
use lavgap_core::minimize::{
    gap_experiment, harmonic_extension, minimize_energy, no_gap_experiment, DiscreteProblem,
    GapParams, SolverOptions,
};
use lavgap_core::mollify::{
    gradient_identity_report, holder_grad_bound_check, l1_error, linf_grad_bound_check,
    make_kernel, ShrinkMollifier,
};
use lavgap_core::tolerances::{R1_AGREEMENT, R2_AGREEMENT, ZERO_Q_PART};
use lavgap_core::weights::{glaeser_check, zk_membership_verdict, Stability};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::config::{
    self, boundary_from_name, load, overlay, test_function, weight_from_name, IntegrandSpec,
};
use crate::report::{num, Check, Outcome, Table};
use crate::svg::{bar_chart, loglog, Bar, Series};
use crate::Command;

/// `(resolved config, experiment outcome)`. Config errors abort before a config exists.
pub type Run = (Value, Result<Outcome>);

pub fn run(cmd: &Command, file: Option<&Path>) -> Result<Run> {
    match cmd {
        Command::Regimes(a) => {
            let mut c: config::RegimesConfig = load(file)?;
            overlay!(c, a; n, p, q, kappa, gamma, table);
            Ok(resolved(&c, regimes(&c)))
        }
        Command::WeightCheck(a) => {
            let mut c: config::WeightCheckConfig = load(file)?;
            overlay!(c, a; weight, power, kappa, h, expect, glaeser_alpha);
            Ok(resolved(&c, weight_check(&c)))
        }
        Command::Mollify(a) => {
            let mut c: config::MollifyConfig = load(file)?;
            overlay!(c, a; delta, test_fn, h, gamma, fields, seed, identity);
            Ok(resolved(&c, mollify(&c)))
        }
        Command::Energy(a) => {
            let mut c: config::EnergyConfig = load(file)?;
            if let Some(path) = &a.integrand {
                let text = std::fs::read_to_string(path)
                    .with_context(|| format!("reading {}", path.display()))?;
                c.integrand = serde_json::from_str(&text)
                    .with_context(|| format!("parsing {}", path.display()))?;
            }
            overlay!(c.integrand, a; p, q, weight);
            overlay!(c, a; field, mesh, h, test_fn);
            Ok(resolved(&c, energy_cmd(&c)))
        }
        Command::Minimize(a) => {
            let mut c: config::MinimizeConfig = load(file)?;
            overlay!(c.integrand, a; p, q, weight);
            overlay!(c, a; h, boundary, initial, tol, max_iter);
            Ok(resolved(&c, minimize(&c)))
        }
        Command::NoGapDemo(a) => {
            let mut c: config::NoGapConfig = load(file)?;
            overlay!(c, a; p, q, kappa, weight, boundary, h, deltas, threshold, tol, max_iter);
            Ok(resolved(&c, no_gap(&c)))
        }
        Command::GapDemo(a) => {
            let mut c: config::GapDemoConfig = load(file)?;
            overlay!(c, a; n, p, q, kappa, safety, h, deltas, tol, max_iter);
            Ok(resolved(&c, gap_demo(&c)))
        }
        Command::CounterexampleConstants(a) => {
            let mut c: config::ConstantsConfig = load(file)?;
            overlay!(c, a; n, p, q, kappa, safety, h);
            Ok(resolved(&c, constants(&c)))
        }
    }
}

fn resolved<C: Serialize>(c: &C, out: Result<Outcome>) -> Run {
    (serde_json::to_value(c).unwrap_or(Value::Null), out)
}

fn solver(tol: f64, max_iter: usize) -> SolverOptions {
    SolverOptions {
        tol,
        max_iter,
        ..SolverOptions::default()
    }
}

fn finest(h: &[f64]) -> Result<f64> {
    h.iter()
        .copied()
        .reduce(f64::min)
        .context("empty mesh size list")
}

#[derive(Debug, Deserialize)]
struct RegimeRow {
    n: usize,
    p: f64,
    q: f64,
    kappa: f64,
    #[serde(default)]
    gamma: Option<f64>,
}

fn regimes(c: &config::RegimesConfig) -> Result<Outcome> {
    let Some(path) = &c.table else {
        let v = regime_classify(c.n, c.p, c.q, c.kappa, c.gamma)?;
        return Ok(Outcome {
            result: serde_json::to_value(&v)?,
            ..Default::default()
        });
    };
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .with_context(|| format!("reading {}", path.display()))?;
    let mut verdicts = Vec::new();
    let mut table = Table::new(
        "table",
        &["n", "p", "q", "kappa", "gamma", "verdict", "condition"],
    );
    for (i, row) in reader.deserialize::<RegimeRow>().enumerate() {
        let r = row.map_err(|e| lavgap_core::Error::Format(format!("row {}: {e}", i + 1)))?;
        let v = regime_classify(r.n, r.p, r.q, r.kappa, r.gamma)
            .with_context(|| format!("row {}", i + 1))?;
        table.push(vec![
            v.n.to_string(),
            num(v.p),
            num(v.q),
            num(v.kappa),
            v.gamma.map(num).unwrap_or_default(),
            v.verdict.to_string(),
            v.condition.clone(),
        ]);
        verdicts.push(v);
    }
    Ok(Outcome {
        result: json!({ "verdicts": verdicts }),
        tables: vec![table],
        ..Default::default()
    })
}

fn weight_check(c: &config::WeightCheckConfig) -> Result<Outcome> {
    let a = weight_from_name(&c.weight, c.power.unwrap_or(c.kappa))?;
    let v = zk_membership_verdict(&a, c.kappa, &c.h)?;
    let mut out = Outcome::default();
    let mut result = json!({ "membership": v });
    if let Some(alpha) = c.glaeser_alpha {
        let mesh = build_disk_mesh(1.0, finest(&c.h)?)?;
        result["glaeser"] = json!({ "alpha": alpha, "constant": glaeser_check(&a, alpha, &mesh)? });
    }
    if let Some(e) = &c.expect {
        let want = match e.as_str() {
            "stable" => Stability::Stable,
            "diverging" => Stability::Diverging,
            _ => bail!(lavgap_core::Error::Parameter(format!(
                "expect must be stable or diverging, got {e:?}"
            ))),
        };
        out.checks.push(Check::new(
            "expected_verdict",
            v.verdict == want,
            format!("verdict {:?}, expected {e}", v.verdict),
        ));
    }
    let mut table = Table::new("constants", &["h", "constant", "x1", "x2", "y1", "y2"]);
    for (&(h, k), (x, y)) in v.constants.iter().zip(&v.witnesses) {
        table.push(vec![
            num(h),
            num(k),
            num(x[0]),
            num(x[1]),
            num(y[0]),
            num(y[1]),
        ]);
    }
    let series = Series {
        label: format!("{} at kappa = {}", v.weight, v.kappa),
        points: v.constants.clone(),
    };
    if let Some(svg) = loglog("Z^kappa constant under refinement", "h", "C(h)", &[series]) {
        out.plots.push(("constants".into(), svg));
    }
    out.tables.push(table);
    out.result = result;
    Ok(out)
}

/// Seeded smooth field vanishing on the unit circle: `(1 − |x|²) Σ c_k sin(ω_k·x + φ_k)`.
fn random_field(mesh: &Mesh, seed: u64) -> GridFunction<'_> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let modes: Vec<(f64, [f64; 2], f64)> = (0..4)
        .map(|_| {
            let c = rng.gen_range(-1.0..1.0);
            let w = [rng.gen_range(-4.0..4.0), rng.gen_range(-4.0..4.0)];
            (c, w, rng.gen_range(0.0..std::f64::consts::TAU))
        })
        .collect();
    GridFunction::from_fn(mesh, |x| {
        let s: f64 = modes
            .iter()
            .map(|(c, w, ph)| c * (w[0] * x[0] + w[1] * x[1] + ph).sin())
            .sum();
        (1.0 - x[0] * x[0] - x[1] * x[1]).max(0.0) * s
    })
}

fn mollify(c: &config::MollifyConfig) -> Result<Outcome> {
    let mesh = build_disk_mesh(1.0, c.h)?;
    let kernel = make_kernel(2)?;
    let domain = Domain::unit_disk();
    let ms = c
        .delta
        .iter()
        .map(|&d| ShrinkMollifier::for_domain(d, &domain, kernel.clone()))
        .collect::<lavgap_core::Result<Vec<_>>>()?;
    let mut out = Outcome::default();
    let header = [
        "field",
        "delta",
        "l1_error",
        "linf_measured",
        "linf_bound",
        "linf_ratio",
        "holder_measured",
        "holder_bound",
        "holder_ratio",
        "identity_residual",
        "identity_interpolated",
    ];
    let mut table = Table::new("bounds", &header);
    let mut rows = Vec::new();
    let mut violations = 0usize;
    let fields: Vec<(String, GridFunction<'_>)> = if c.test_fn == "random" {
        (0..c.fields as u64)
            .map(|k| {
                (
                    format!("random-{}", c.seed + k),
                    random_field(&mesh, c.seed + k),
                )
            })
            .collect()
    } else {
        vec![(
            c.test_fn.clone(),
            GridFunction::from_fn(&mesh, test_function(&c.test_fn)?),
        )]
    };
    let single = fields.len() == 1;
    let (mut l1_pts, mut id_pts) = (Vec::new(), Vec::new());
    for (label, v) in &fields {
        for m in &ms {
            let linf = linf_grad_bound_check(m, v)?;
            let holder = holder_grad_bound_check(m, v, c.gamma)?;
            violations += usize::from(!linf.passed) + usize::from(!holder.passed);
            let l1 = if single { Some(l1_error(m, v)?) } else { None };
            let id = if single && c.identity {
                Some(gradient_identity_report(m, v)?)
            } else {
                None
            };
            if let Some(e) = l1 {
                l1_pts.push((m.delta, e));
            }
            if let Some(r) = id {
                id_pts.push((m.delta, r.residual));
            }
            let opt = |x: Option<f64>| x.map(num).unwrap_or_default();
            table.push(vec![
                label.clone(),
                num(m.delta),
                opt(l1),
                num(linf.measured),
                num(linf.bound),
                num(linf.measured / linf.bound),
                num(holder.measured),
                num(holder.bound),
                num(holder.measured / holder.bound),
                opt(id.map(|r| r.residual)),
                opt(id.map(|r| r.interpolated_residual)),
            ]);
            rows.push(json!({
                "field": label, "delta": m.delta, "l1_error": l1, "linf": linf, "holder": holder, "identity": id,
            }));
        }
    }
    out.checks.push(Check::new(
        "gradient_bounds",
        violations == 0,
        format!(
            "{violations} violations over {} fields and {} deltas",
            fields.len(),
            ms.len()
        ),
    ));
    let series: Vec<Series> = [("L1 error", l1_pts), ("gradient identity residual", id_pts)]
        .into_iter()
        .map(|(l, p)| Series {
            label: l.into(),
            points: p,
        })
        .collect();
    if let Some(svg) = loglog("Shrinking mollifier convergence", "delta", "error", &series) {
        out.plots.push(("convergence".into(), svg));
    }
    out.tables.push(table);
    out.result = json!({ "h": mesh.h(), "nodes": mesh.num_nodes(), "kernel_grad_l1": kernel.grad_l1, "rows": rows });
    Ok(out)
}

fn energy_cmd(c: &config::EnergyConfig) -> Result<Outcome> {
    let integrand = c.integrand.build()?;
    let mesh = match &c.mesh {
        Some(p) => read_mesh_json(BufReader::new(
            File::open(p).with_context(|| format!("reading {}", p.display()))?,
        ))?,
        None => build_disk_mesh(1.0, c.h)?,
    };
    let u = match &c.field {
        Some(p) => {
            let f = File::open(p).with_context(|| format!("reading {}", p.display()))?;
            GridFunction::new(&mesh, read_field_csv(BufReader::new(f), mesh.num_nodes())?)?
        }
        None => GridFunction::from_fn(&mesh, test_function(&c.test_fn)?),
    };
    let e = energy(&integrand, &u)?;
    let xi = gradient(&u)?;
    let result = json!({
        "nodes": mesh.num_nodes(),
        "cells": mesh.num_cells(),
        "energy": e,
        "modular": modular(&integrand, &mesh, &xi)?,
        "luxemburg_norm": luxemburg_norm(&integrand, &mesh, &xi)?,
    });
    Ok(Outcome {
        result,
        ..Default::default()
    })
}

fn iterate_table(history: &[lavgap_core::minimize::IterationRecord]) -> Table {
    let mut t = Table::new(
        "iterations",
        &[
            "iteration",
            "energy",
            "objective",
            "residual",
            "step",
            "cg_iterations",
            "direction",
        ],
    );
    for r in history {
        t.push(vec![
            r.iteration.to_string(),
            num(r.energy),
            num(r.objective),
            num(r.residual),
            num(r.step),
            r.cg_iterations.to_string(),
            r.direction.clone(),
        ]);
    }
    t
}

fn minimize(c: &config::MinimizeConfig) -> Result<Outcome> {
    let integrand = c.integrand.build()?;
    let mesh = build_disk_mesh(1.0, c.h)?;
    let g = boundary_from_name(&c.boundary)?;
    let problem = DiscreteProblem::new(&mesh, integrand, |x| g(x))?;
    let start = match c.initial.as_str() {
        "harmonic" => harmonic_extension(&problem)?,
        "datum" => GridFunction::from_fn(&mesh, |x| g(x)),
        other => bail!(lavgap_core::Error::Parameter(format!(
            "initial must be harmonic or datum, got {other:?}"
        ))),
    };
    let r = minimize_energy(&problem, &start, &solver(c.tol, c.max_iter))?;
    let mut field = Vec::new();
    write_field_csv(&r.values, &mut field)?;
    let mut mesh_json = Vec::new();
    write_mesh_json(&mesh, &mut mesh_json)?;
    let mut out = Outcome {
        result: serde_json::to_value(&r)?,
        ..Default::default()
    };
    out.checks.push(Check::new(
        "converged",
        r.converged,
        format!("{} iterations, residual {:e}", r.iterations, r.residual),
    ));
    out.tables.push(iterate_table(&r.history));
    out.files.push(("field.csv".into(), field));
    out.files.push(("mesh.json".into(), mesh_json));
    Ok(out)
}

fn no_gap(c: &config::NoGapConfig) -> Result<Outcome> {
    let spec = IntegrandSpec {
        p: c.p,
        q: c.q,
        weight: c.weight.clone(),
    };
    validate_parameters(2, c.p, c.q, c.kappa, None)?;
    let integrand = spec.build()?;
    let g = boundary_from_name(&c.boundary)?;
    let kernel = make_kernel(2)?;
    let rep = no_gap_experiment(
        &integrand,
        c.kappa,
        g.as_ref(),
        &c.h,
        &c.deltas,
        &kernel,
        &solver(c.tol, c.max_iter),
    )?;
    let mut table = Table::new(
        "levels",
        &[
            "h",
            "nodes",
            "discrete_min",
            "best_competitor",
            "relative_agreement",
            "converged",
        ],
    );
    for r in &rep.rows {
        table.push(vec![
            num(r.h),
            r.nodes.to_string(),
            num(r.discrete_min),
            num(r.best_competitor),
            num(r.relative_agreement),
            r.solver.converged.to_string(),
        ]);
    }
    let mut out = Outcome {
        result: serde_json::to_value(&rep)?,
        tables: vec![table],
        ..Default::default()
    };
    out.checks.push(Check::new(
        "agreement",
        rep.final_agreement <= c.threshold,
        format!(
            "final relative agreement {:e}, threshold {}",
            rep.final_agreement, c.threshold
        ),
    ));
    let below = rep
        .rows
        .iter()
        .filter(|r| r.relative_agreement < -c.tol.sqrt())
        .count();
    out.checks.push(Check::new(
        "competitors_above_minimum",
        below == 0,
        format!("{below} levels with a smooth competitor below the discrete minimum"),
    ));
    let converged = rep.rows.iter().all(|r| r.solver.converged);
    out.checks
        .push(Check::new("solver_converged", converged, "all levels"));
    let pts = rep
        .rows
        .iter()
        .map(|r| (r.h, r.relative_agreement))
        .collect();
    if let Some(svg) = loglog(
        "Smooth competitors against the discrete minimum",
        "h",
        "relative agreement",
        &[Series {
            label: "best competitor".into(),
            points: pts,
        }],
    ) {
        out.plots.push(("agreement".into(), svg));
    }
    Ok(out)
}

fn gap_demo(c: &config::GapDemoConfig) -> Result<Outcome> {
    validate_parameters(c.n, c.p, c.q, c.kappa, None)?;
    let params = GapParams {
        n: c.n,
        p: c.p,
        q: c.q,
        kappa: c.kappa,
        safety_factor: c.safety,
    };
    let kernel = make_kernel(2)?;
    let rep = gap_experiment(
        &params,
        &c.h,
        &c.deltas,
        &kernel,
        &solver(c.tol, c.max_iter),
    )?;
    let gap = &rep.gap;
    let mut out = Outcome {
        result: serde_json::to_value(&rep)?,
        ..Default::default()
    };
    out.checks.push(Check::new(
        "lower_above_upper",
        gap.verdict,
        format!(
            "lower {} / upper {} = {}",
            gap.lower, gap.upper, gap.lower_over_upper
        ),
    ));
    out.checks.push(Check::new(
        "competitors_above_lower_bound",
        gap.ensure_bound().is_ok(),
        match gap.ensure_bound() {
            Ok(()) => format!("{} competitors", gap.competitor_energies.len()),
            Err(e) => e.to_string(),
        },
    ));
    out.checks.push(Check::new(
        "radial_variation_inequality",
        rep.radial_variation_passed,
        "all competitors",
    ));
    out.checks.push(Check::new(
        "young_chain",
        rep.young_passed,
        "all competitors",
    ));

    let mut table = Table::new(
        "competitors",
        &["label", "delta", "energy", "ratio_to_lower"],
    );
    let mut bars = vec![
        Bar {
            label: "upper".into(),
            value: gap.upper,
            color: "#2ca02c",
        },
        Bar {
            label: "lower".into(),
            value: gap.lower,
            color: "#d62728",
        },
    ];
    for e in &gap.competitor_energies {
        let d = e.delta.map(num).unwrap_or_default();
        table.push(vec![
            e.label.clone(),
            d.clone(),
            num(e.energy),
            num(e.ratio_to_lower),
        ]);
        let label = if d.is_empty() {
            e.label.clone()
        } else {
            format!("{} d={d}", e.label)
        };
        bars.push(Bar {
            label,
            value: e.energy,
            color: "#1f77b4",
        });
    }
    if !gap.competitor_energies.is_empty() {
        if let Some(svg) = bar_chart("Energy bounds and smooth competitors", "energy", &bars) {
            out.plots.push(("energies".into(), svg));
        }
    }
    out.tables.push(table);
    Ok(out)
}

fn constants(c: &config::ConstantsConfig) -> Result<Outcome> {
    let inst = SharpnessInstance::new(c.n, c.p, c.q, c.kappa, c.safety)?;
    let r1 = compute_r1(c.n, c.q, c.kappa)?;
    let r2 = compute_r2(c.n, c.p)?;
    let r3 = compute_r3(c.n)?;
    let threshold = t0_threshold(inst.r1, inst.r2, inst.r3, c.p, c.q)?;
    let (upper, lower) = (inst.upper_bound(), inst.lower_bound());
    let mut out = Outcome::default();
    out.checks.push(Check::new(
        "r1_two_methods",
        r1.estimate.rel_diff <= R1_AGREEMENT,
        format!("relative difference {:e}", r1.estimate.rel_diff),
    ));
    let mut result = json!({
        "r1": r1, "r2": r2, "r3": r3, "t0_threshold": threshold, "t0": inst.t0,
        "upper": upper, "lower": lower, "lower_over_upper": lower / upper, "lambda_star": inst.lambda_star(),
    });
    if let (2, Some(h)) = (c.n, c.h) {
        let mesh = build_disk_mesh(1.0, h)?;
        let r2_mesh = r2_on_mesh(c.p, &mesh)?;
        let rel = (r2_mesh - r2.value).abs() / r2.value;
        out.checks.push(Check::new(
            "r2_two_methods",
            rel <= R2_AGREEMENT,
            format!("mesh {r2_mesh}, relative difference {rel:e}"),
        ));
        let up = upper_bound_on_mesh(&inst, &mesh)?;
        out.checks.push(Check::new(
            "q_part_vanishes",
            up.mesh.q_part <= ZERO_Q_PART,
            format!("q-part of the energy of t0 u* is {:e}", up.mesh.q_part),
        ));
        result["mesh"] = json!({ "h": h, "r2": r2_mesh, "r2_rel_diff": rel, "upper": up });
    }
    out.result = result;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::report::{envelope, Status};

    #[test]
    fn empty_competitor_list_gives_no_chart() {
        let bars: Vec<Bar> = Vec::new();
        assert!(bar_chart("t", "y", &bars).is_none());
        let o = Outcome {
            result: json!({ "competitor_energies": [] }),
            ..Default::default()
        };
        let v = envelope("gap-demo", &json!({}), &Status::Done(&o));
        let text = serde_json::to_string(&v).unwrap();
        assert!(serde_json::from_str::<Value>(&text).is_ok());
        assert!(o.plots.is_empty());
    }

    #[test]
    fn random_fields_are_seeded() {
        let mesh = build_disk_mesh(1.0, 0.1).unwrap();
        assert_eq!(
            random_field(&mesh, 3).values(),
            random_field(&mesh, 3).values()
        );
        assert_ne!(
            random_field(&mesh, 3).values(),
            random_field(&mesh, 4).values()
        );
        for &i in mesh.boundary_nodes() {
            assert!(random_field(&mesh, 3).values()[i].abs() < 1e-12);
        }
    }

    #[test]
    fn regime_table_is_classified_row_by_row() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.csv");
        std::fs::write(&path, "n,p,q,kappa,gamma\n2,2,3,1,\n2,1.5,4,1,\n").unwrap();
        let c = config::RegimesConfig {
            table: Some(path),
            ..Default::default()
        };
        let o = regimes(&c).unwrap();
        assert_eq!(o.tables[0].rows[0][5], "NoGap-I");
        assert_eq!(o.tables[0].rows[1][5], "Gap-Sharpness");
    }
}
