//! Acceptance suite: one PASS/FAIL line per criterion. Exits non-zero when any
//! criterion fails.

use std::f64::consts::PI;
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use lavgap_core::counterexample::{
    compute_r1, compute_r2, compute_r3, cone_weight, gap_report, r2_on_mesh, upper_bound_on_mesh,
    SharpnessInstance,
};
use lavgap_core::domain_grid::{build_disk_mesh, Domain, GridFunction};
use lavgap_core::energy::{regime_classify, DoublePhaseIntegrand, Regime};
use lavgap_core::minimize::{
    density_convergence_experiment, gap_experiment, no_gap_experiment, GapParams, SolverOptions,
};
use lavgap_core::mollify::{gradient_identity_residual, make_kernel, tent, ShrinkMollifier};
use lavgap_core::weights::{
    glaeser_check, power_weight, zk_constant_estimate, zk_membership_verdict, Weight,
};
use lavgap_core::Error;
use serde_json::Value;

const BIN: &str = env!("CARGO_BIN_EXE_lavgap");

struct Verdict {
    passed: bool,
    lines: Vec<String>,
}

impl Verdict {
    fn new() -> Self {
        Self {
            passed: true,
            lines: Vec::new(),
        }
    }

    fn check(&mut self, ok: bool, what: String) {
        self.passed &= ok;
        self.lines
            .push(format!("{} {what}", if ok { "ok  " } else { "FAIL" }));
    }

    fn within(&mut self, started: Instant, limit: Duration) {
        let t = started.elapsed();
        self.check(
            t < limit,
            format!("runtime {:.1} s < {} s", t.as_secs_f64(), limit.as_secs()),
        );
    }
}

fn lavgap(out: &Path, args: &[&str]) -> (i32, Value) {
    let status = Command::new(BIN)
        .args(args)
        .arg("--out")
        .arg(out)
        .output()
        .expect("binary runs");
    let name = args[0];
    let text = std::fs::read_to_string(out.join(format!("{name}.json"))).unwrap_or_default();
    (
        status.status.code().unwrap_or(-1),
        serde_json::from_str(&text).unwrap_or(Value::Null),
    )
}

fn abs_weight() -> Weight {
    power_weight(1.0, [0.0, 0.0]).unwrap()
}

/// Weight-class constants against the brute-force pair maximum.
fn criterion1() -> Verdict {
    let mut v = Verdict::new();
    let t = Instant::now();
    let mesh = build_disk_mesh(1.0, 1.0 / 32.0).unwrap();
    let a = abs_weight();
    let est = zk_constant_estimate(&a, 1.0, &mesh).unwrap().constant;
    let nodes = mesh.nodes();
    let vals: Vec<f64> = nodes.iter().map(|x| a.eval(x)).collect();
    let mut brute = 0.0f64;
    for i in 0..nodes.len() {
        for j in 0..nodes.len() {
            if i != j {
                let d = (nodes[i][0] - nodes[j][0]).hypot(nodes[i][1] - nodes[j][1]);
                brute = brute.max(vals[i] / (vals[j] + d));
            }
        }
    }
    v.check(
        (1.0..=1.05).contains(&est),
        format!("C(|x|, 1) = {est:.6} in [1.0, 1.05]"),
    );
    v.check(
        (est - brute).abs() <= 1e-12 * brute,
        format!("pair oracle {brute:.6}"),
    );
    let sq = power_weight(2.0, [0.0, 0.0]).unwrap();
    let est2 = zk_constant_estimate(&sq, 2.0, &mesh).unwrap().constant;
    v.check(
        (1.9..=2.1).contains(&est2),
        format!("C(|x|^2, 2) = {est2:.6} in [1.9, 2.1]"),
    );
    v.within(t, Duration::from_secs(30));
    v
}

/// Cone weight: stable at its own exponent, growing at a larger one.
fn criterion2() -> Verdict {
    let mut v = Verdict::new();
    let t = Instant::now();
    let hs = [1.0 / 16.0, 1.0 / 32.0, 1.0 / 64.0];
    let a = cone_weight(1.5).unwrap();
    let s = zk_membership_verdict(&a, 1.5, &hs).unwrap();
    let c: Vec<f64> = s.constants.iter().map(|x| x.1).collect();
    let (lo, hi) = c
        .iter()
        .fold((f64::INFINITY, 0.0f64), |(l, h), &x| (l.min(x), h.max(x)));
    v.check(
        hi / lo - 1.0 < 0.10,
        format!(
            "kappa 1.5 constants {c:.4?} vary by {:.2}% < 10%",
            100.0 * (hi / lo - 1.0)
        ),
    );
    let d = zk_membership_verdict(&a, 2.0, &hs).unwrap();
    let g: Vec<f64> = d.constants.windows(2).map(|w| w[1].1 / w[0].1).collect();
    v.check(
        g.iter().all(|&r| r >= 1.2),
        format!("kappa 2 growth per halving {g:.3?} >= 1.2"),
    );
    v.within(t, Duration::from_secs(120));
    v
}

fn criterion3() -> Verdict {
    let mut v = Verdict::new();
    let sq = power_weight(2.0, [0.0, 0.0]).unwrap();
    let mesh = build_disk_mesh(1.0, 1.0 / 32.0).unwrap();
    let c = glaeser_check(&sq, 1.0, &mesh).unwrap();
    v.check(
        (1.99..=2.01).contains(&c),
        format!("gradient constant of |x|^2 at alpha 1 = {c:.6} in [1.99, 2.01]"),
    );
    let hs = [1.0 / 16.0, 1.0 / 32.0, 1.0 / 64.0];
    let s = zk_membership_verdict(&sq, 2.0, &hs).unwrap();
    v.check(
        s.is_stable(),
        format!(
            "|x|^2 at kappa 2: {:?} (exponent {:.3})",
            s.verdict, s.fitted_exponent
        ),
    );
    let d = zk_membership_verdict(&sq, 2.2, &hs).unwrap();
    v.check(
        !d.is_stable(),
        format!(
            "|x|^2 at kappa 2.2: {:?} (exponent {:.3})",
            d.verdict, d.fitted_exponent
        ),
    );
    v
}

fn criterion4(tmp: &Path) -> Verdict {
    let mut v = Verdict::new();
    let m =
        ShrinkMollifier::for_domain(0.1, &Domain::unit_disk(), make_kernel(2).unwrap()).unwrap();
    let res: Vec<f64> = [0.02, 0.01]
        .iter()
        .map(|&h| {
            let mesh = build_disk_mesh(1.0, h).unwrap();
            gradient_identity_residual(&m, &GridFunction::from_fn(&mesh, tent)).unwrap()
        })
        .collect();
    v.check(
        res[1] <= 0.05,
        format!(
            "identity residual at delta 0.1, h 0.01 = {:.4} <= 0.05",
            res[1]
        ),
    );
    v.check(
        res[0] / res[1] >= 1.5,
        format!("h 0.02 -> 0.01 decrease {:.3}x >= 1.5x", res[0] / res[1]),
    );
    let (code, rep) = lavgap(
        &tmp.join("c4"),
        &[
            "mollify",
            "--test-fn",
            "random",
            "--fields",
            "20",
            "--seed",
            "0",
            "--h",
            "0.05",
            "--delta",
            "0.05,0.1",
        ],
    );
    let rows = rep["result"]["rows"].as_array().map(Vec::len).unwrap_or(0);
    let bad = rep["result"]["rows"]
        .as_array()
        .map(|r| {
            r.iter()
                .filter(|x| x["linf"]["passed"] != true || x["holder"]["passed"] != true)
                .count()
        })
        .unwrap_or(usize::MAX);
    v.check(
        code == 0 && rows == 40 && bad == 0,
        format!("20 seeded fields x 2 deltas: {rows} rows, {bad} bound violations, exit {code}"),
    );
    v
}

fn criterion5() -> Verdict {
    let mut v = Verdict::new();
    let t = Instant::now();
    let kernel = make_kernel(2).unwrap();
    let a = abs_weight();
    let integrand = DoublePhaseIntegrand::new(2.0, 3.0, a.clone()).unwrap();
    let membership = zk_membership_verdict(&a, 1.0, &[1.0 / 16.0, 1.0 / 32.0, 1.0 / 64.0]).unwrap();
    let mesh = build_disk_mesh(1.0, 1.0 / 64.0).unwrap();
    let phi = GridFunction::from_fn(&mesh, tent);
    let d = density_convergence_experiment(
        &phi,
        &integrand,
        &membership,
        None,
        &[0.2, 0.1, 0.05, 0.025],
        &kernel,
        &Domain::unit_disk(),
    )
    .unwrap();
    let rel: Vec<f64> = d.rows.iter().map(|r| r.relative).collect();
    v.check(
        d.final_relative <= 0.05,
        format!(
            "modular distance at delta 0.025 = {:.3}% <= 5%",
            100.0 * d.final_relative
        ),
    );
    v.check(
        d.decreasing,
        format!("delta sequence decreasing: {rel:.4?}"),
    );
    let rep = no_gap_experiment(
        &integrand,
        1.0,
        &|x| x[0],
        &[1.0 / 16.0, 1.0 / 32.0, 1.0 / 64.0],
        &[0.2, 0.1, 0.05],
        &kernel,
        &SolverOptions::default(),
    )
    .unwrap();
    v.check(
        rep.final_agreement <= 0.10,
        format!(
            "no-gap relative agreement at h 1/64 = {:.3}% <= 10%",
            100.0 * rep.final_agreement
        ),
    );
    v.within(t, Duration::from_secs(300));
    v
}

fn criterion6() -> Verdict {
    let mut v = Verdict::new();
    let r3 = compute_r3(2).unwrap();
    v.check(
        (r3 - PI).abs() <= 1e-6,
        format!("r3 = {r3:.12} = pi +- 1e-6"),
    );
    let r1 = compute_r1(2, 4.0, 1.0).unwrap();
    v.check(
        r1.estimate.rel_diff <= 1e-4,
        format!(
            "r1 = {:.8} and {:.8}, relative difference {:.1e} <= 1e-4",
            r1.estimate.value, r1.estimate.check, r1.estimate.rel_diff
        ),
    );
    let r2 = compute_r2(2, 1.5).unwrap().value;
    let mesh = build_disk_mesh(1.0, 1.0 / 64.0).unwrap();
    let r2m = r2_on_mesh(1.5, &mesh).unwrap();
    let rel = (r2m - r2).abs() / r2;
    v.check(
        rel <= 1e-2,
        format!("r2 = {r2:.6} reduced, {r2m:.6} on mesh, relative difference {rel:.1e} <= 1%"),
    );
    let inst = SharpnessInstance::default_planar().unwrap();
    let q = upper_bound_on_mesh(&inst, &mesh).unwrap().mesh.q_part;
    v.check(
        q <= 1e-10,
        format!("q-part of energy(t0 u*) = {q:e} <= 1e-10"),
    );
    v
}

fn criterion7(tmp: &Path) -> Verdict {
    let mut v = Verdict::new();
    let t = Instant::now();
    let inst = SharpnessInstance::default_planar().unwrap();
    let ratio = inst.lower_bound() / inst.upper_bound();
    let exact = 1.1f64.powf(2.5);
    v.check(
        (ratio - exact).abs() <= 1e-9,
        format!("lower/upper = {ratio:.12}, 1.1^2.5 = {exact:.12}"),
    );
    let params = GapParams {
        n: 2,
        p: 1.5,
        q: 4.0,
        kappa: 1.0,
        safety_factor: 1.1,
    };
    let rep = gap_experiment(
        &params,
        &[1.0 / 64.0],
        &[0.05, 0.1, 0.2],
        &make_kernel(2).unwrap(),
        &SolverOptions::default(),
    )
    .unwrap();
    let lower = rep.gap.lower;
    let mollified: Vec<f64> = rep
        .gap
        .competitor_energies
        .iter()
        .filter(|c| c.delta.is_some())
        .map(|c| c.energy)
        .collect();
    let worst = rep
        .gap
        .competitor_energies
        .iter()
        .map(|c| c.energy)
        .fold(f64::INFINITY, f64::min);
    v.check(
        mollified.len() >= 3
            && rep
                .gap
                .competitor_energies
                .iter()
                .all(|c| c.energy >= 0.98 * lower),
        format!(
            "{} mollified competitors, smallest energy {worst:.1} >= 0.98 lower = {:.1}",
            mollified.len(),
            0.98 * lower
        ),
    );
    v.check(
        rep.radial_variation_passed,
        "radial variation inequality holds for all competitors".into(),
    );
    v.check(
        rep.young_passed,
        "Young chain holds for all competitors".into(),
    );
    v.check(
        rep.passed() && rep.ensure_bound().is_ok(),
        "gap verdict true".into(),
    );
    let bad = gap_report(&inst, vec![("planted".into(), Some(0.1), 0.5 * lower)]);
    v.check(
        matches!(bad.ensure_bound(), Err(Error::BoundViolation(_))),
        "a competitor planted below the bound is a bound violation".into(),
    );
    let (ok, _) = lavgap(
        &tmp.join("c7"),
        &[
            "gap-demo",
            "--n",
            "2",
            "--p",
            "1.5",
            "--q",
            "4",
            "--kappa",
            "1",
            "--safety",
            "1.1",
            "--h",
            "1/64",
            "--deltas",
            "0.05,0.1,0.2",
        ],
    );
    let (pre, rep3) = lavgap(&tmp.join("c7k3"), &["gap-demo", "--kappa", "3"]);
    let (fail, _) = lavgap(
        &tmp.join("c7f"),
        &[
            "weight-check",
            "--weight",
            "cone",
            "--kappa",
            "1.5",
            "--expect",
            "diverging",
        ],
    );
    v.check(ok == 0, format!("gap-demo exit {ok} (expected 0)"));
    v.check(
        pre == 1 && rep3["error"]["kind"] == "precondition",
        format!("gap-demo with kappa 3 exit {pre} (expected 1)"),
    );
    v.check(fail == 2, format!("failed check exit {fail} (expected 2)"));
    v.within(t, Duration::from_secs(600));
    v
}

fn criterion8() -> Verdict {
    let mut v = Verdict::new();
    let cases = [
        ((2, 2.0, 3.0, 1.0, None), Regime::NoGapI),
        ((2, 1.5, 4.0, 1.0, None), Regime::GapSharpness),
        ((2, 3.0, 4.4, 1.0, None), Regime::NoGapMorrey),
        ((2, 2.0, 4.0, 1.0, Some(0.5)), Regime::NoGapHolder),
        ((2, 1.5, 4.0, 2.5, None), Regime::NoGapI),
        ((2, 1.5, 4.0, 3.0, None), Regime::NoGapI),
    ];
    for ((n, p, q, k, g), want) in cases {
        let got = regime_classify(n, p, q, k, g).unwrap().verdict;
        v.check(
            got == want,
            format!("({n}, {p}, {q}, {k}, {g:?}) -> {got} (expected {want})"),
        );
    }
    v
}

const RUNS: &[&[&str]] = &[
    &[
        "regimes", "--n", "2", "--p", "2", "--q", "3", "--kappa", "1",
    ],
    &["weight-check", "--weight", "cone", "--kappa", "1.5"],
    &[
        "mollify",
        "--test-fn",
        "random",
        "--fields",
        "5",
        "--seed",
        "7",
        "--h",
        "0.05",
        "--delta",
        "0.05,0.1",
    ],
    &["mollify", "--test-fn", "tent", "--h", "1/32"],
    &["energy", "--p", "2", "--q", "3", "--weight", "abs"],
    &["minimize", "--p", "1.8", "--q", "3", "--h", "1/16"],
    &["no-gap-demo", "--h", "1/16,1/32"],
    &["gap-demo", "--h", "1/32"],
    &["counterexample-constants"],
];

fn criterion9(tmp: &Path) -> Verdict {
    let mut v = Verdict::new();
    let mut compared = 0;
    for (i, args) in RUNS.iter().enumerate() {
        let (a, b) = (
            tmp.join(format!("run-a-{i}")),
            tmp.join(format!("run-b-{i}")),
        );
        lavgap(&a, args);
        lavgap(&b, args);
        let mut names: Vec<_> = std::fs::read_dir(&a)
            .unwrap()
            .map(|e| e.unwrap().file_name())
            .collect();
        names.sort();
        for name in &names {
            let s = name.to_string_lossy();
            if s.ends_with(".json") || s.ends_with(".csv") {
                compared += 1;
                let same = std::fs::read(a.join(name)).unwrap()
                    == std::fs::read(b.join(name)).ok().unwrap_or_default();
                v.check(same, format!("{} {s} byte-identical", args[0]));
            }
        }
    }
    v.check(
        compared >= RUNS.len(),
        format!("{compared} JSON/CSV artifacts compared"),
    );
    v
}

fn main() {
    let tmp = std::env::temp_dir().join(format!("lavgap-acceptance-{}", std::process::id()));
    std::fs::create_dir_all(&tmp).unwrap();
    type Criterion<'a> = (&'a str, Box<dyn Fn() -> Verdict + 'a>);
    let criteria: Vec<Criterion> = vec![
        ("weight-class certification", Box::new(criterion1)),
        ("scale sharpness on the cone weight", Box::new(criterion2)),
        (
            "gradient criterion and verdicts for |x|^2",
            Box::new(criterion3),
        ),
        (
            "mollifier identity and gradient bounds",
            Box::new(|| criterion4(&tmp)),
        ),
        ("modular density and no-gap agreement", Box::new(criterion5)),
        ("counterexample constants", Box::new(criterion6)),
        ("gap certification", Box::new(|| criterion7(&tmp))),
        ("regime classifier vectors", Box::new(criterion8)),
        ("determinism", Box::new(|| criterion9(&tmp))),
    ];
    let mut failed = 0;
    for (i, (title, run)) in criteria.iter().enumerate() {
        let v = run();
        println!(
            "criterion {}: {} - {title}",
            i + 1,
            if v.passed { "PASS" } else { "FAIL" }
        );
        for l in &v.lines {
            println!("    {l}");
        }
        failed += usize::from(!v.passed);
    }
    let _ = std::fs::remove_dir_all(&tmp);
    println!(
        "acceptance: {} of {} criteria passed",
        criteria.len() - failed,
        criteria.len()
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
