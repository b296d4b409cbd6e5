//! Command configurations. Each command reads an optional JSON file into its
//! config record and then applies the flags given on the command line.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use lavgap_core::counterexample::cone_weight;
use lavgap_core::energy::DoublePhaseIntegrand;
use lavgap_core::mollify::{smooth_bump, tent};
use lavgap_core::tolerances::SAFETY_FACTOR;
use lavgap_core::weights::{power_weight, Weight};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

/// Parses `0.25`, `1/64` or `1e-2`.
pub fn parse_number(s: &str) -> std::result::Result<f64, String> {
    let s = s.trim();
    let v = match s.split_once('/') {
        Some((a, b)) => {
            let a: f64 = a
                .trim()
                .parse()
                .map_err(|_| format!("bad numerator in {s:?}"))?;
            let b: f64 = b
                .trim()
                .parse()
                .map_err(|_| format!("bad denominator in {s:?}"))?;
            a / b
        }
        None => s.parse().map_err(|_| format!("not a number: {s:?}"))?,
    };
    if v.is_finite() {
        Ok(v)
    } else {
        Err(format!("not a finite number: {s:?}"))
    }
}

/// Comma-separated list of numbers.
pub fn parse_list(s: &str) -> std::result::Result<Vec<f64>, String> {
    s.split(',')
        .filter(|t| !t.trim().is_empty())
        .map(parse_number)
        .collect()
}

pub fn load<T: DeserializeOwned + Default>(path: Option<&Path>) -> Result<T> {
    match path {
        None => Ok(T::default()),
        Some(p) => {
            let text = std::fs::read_to_string(p)
                .with_context(|| format!("reading config {}", p.display()))?;
            serde_json::from_str(&text).with_context(|| format!("parsing config {}", p.display()))
        }
    }
}

/// Copies every flag that was given over the corresponding config field.
macro_rules! overlay {
    ($cfg:expr, $args:expr; $($field:ident),* $(,)?) => {
        $( if let Some(v) = $args.$field.clone() { $cfg.$field = v.into(); } )*
    };
}
pub(crate) use overlay;

/// Weight names accepted on the command line:
/// `zero`, `const:<c>`, `abs` (`|x|`), `square` (`|x|²`), `power:<e>`
/// (`|x|^e`), `cone` or `cone:<e>` (`ℓ^e`), `exp` (`exp(−1/|x|²)`) and
/// `one-plus-abs` (`1 + |x|`). `default_exponent` fills in `cone`.
pub fn weight_from_name(name: &str, default_exponent: f64) -> Result<Weight> {
    let (head, arg) = match name.split_once(':') {
        Some((h, a)) => (h.trim(), Some(parse_number(a).map_err(anyhow::Error::msg)?)),
        None => (name.trim(), None),
    };
    let w = match (head, arg) {
        ("zero", None) => Weight::zero(),
        ("const", Some(c)) => {
            if c < 0.0 {
                bail!(lavgap_core::Error::InvalidWeight(format!(
                    "constant {c} is negative"
                )));
            }
            Weight::constant(c)
        }
        ("abs", None) => power_weight(1.0, [0.0, 0.0])?,
        ("square", None) => power_weight(2.0, [0.0, 0.0])?,
        ("power", Some(e)) => power_weight(e, [0.0, 0.0])?,
        ("cone", e) => cone_weight(e.unwrap_or(default_exponent))?,
        ("exp", None) => Weight::exp_decay(),
        ("one-plus-abs", None) => Weight::new("1+|x|", 2.0, |x| 1.0 + x[0].hypot(x[1])),
        _ => bail!(lavgap_core::Error::Parameter(format!(
            "unknown weight {name:?}"
        ))),
    };
    Ok(w)
}

/// Shipped test functions on the unit disk: `tent`, `bump`, `x1`, `x1x2`.
pub fn test_function(name: &str) -> Result<fn(&[f64; 2]) -> f64> {
    Ok(match name {
        "tent" => tent,
        "bump" => smooth_bump,
        "x1" => |x| x[0],
        "x1x2" => |x| x[0] * x[1],
        _ => bail!(lavgap_core::Error::Parameter(format!(
            "unknown test function {name:?}"
        ))),
    })
}

pub type BoundaryData = Box<dyn Fn(&[f64; 2]) -> f64 + Sync>;

/// Boundary data names: `x1`, `const:<c>`, `linear:<a>,<b>,<c>` (`a x₁ + b x₂ + c`)
/// and `x1x2`.
pub fn boundary_from_name(name: &str) -> Result<BoundaryData> {
    let (head, arg) = name.split_once(':').unwrap_or((name, ""));
    Ok(match head.trim() {
        "x1" => Box::new(|x: &[f64; 2]| x[0]),
        "x1x2" => Box::new(|x: &[f64; 2]| x[0] * x[1]),
        "const" => {
            let c = parse_number(arg).map_err(anyhow::Error::msg)?;
            Box::new(move |_: &[f64; 2]| c)
        }
        "linear" => {
            let v = parse_list(arg).map_err(anyhow::Error::msg)?;
            let [a, b, c] = v[..] else {
                bail!(lavgap_core::Error::Parameter(format!(
                    "linear data needs three coefficients, got {arg:?}"
                )));
            };
            Box::new(move |x: &[f64; 2]| a * x[0] + b * x[1] + c)
        }
        _ => bail!(lavgap_core::Error::Parameter(format!(
            "unknown boundary data {name:?}"
        ))),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IntegrandSpec {
    pub p: f64,
    pub q: f64,
    /// Weight name, see [`weight_from_name`].
    pub weight: String,
}

impl Default for IntegrandSpec {
    fn default() -> Self {
        Self {
            p: 2.0,
            q: 3.0,
            weight: "abs".into(),
        }
    }
}

impl IntegrandSpec {
    pub fn build(&self) -> Result<DoublePhaseIntegrand> {
        Ok(DoublePhaseIntegrand::new(
            self.p,
            self.q,
            weight_from_name(&self.weight, 1.0)?,
        )?)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RegimesConfig {
    pub n: usize,
    pub p: f64,
    pub q: f64,
    pub kappa: f64,
    pub gamma: Option<f64>,
    /// CSV with columns `n,p,q,kappa[,gamma]`; replaces the single tuple.
    pub table: Option<PathBuf>,
}

impl Default for RegimesConfig {
    fn default() -> Self {
        Self {
            n: 2,
            p: 2.0,
            q: 3.0,
            kappa: 1.0,
            gamma: None,
            table: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WeightCheckConfig {
    pub weight: String,
    /// Exponent of `cone` weights; defaults to `kappa`.
    pub power: Option<f64>,
    pub kappa: f64,
    pub h: Vec<f64>,
    /// `stable` or `diverging`; a different verdict fails the run.
    pub expect: Option<String>,
    /// Also run the gradient check `|∂_ν a| ≤ C a^{α/(1+α)}`.
    pub glaeser_alpha: Option<f64>,
}

impl Default for WeightCheckConfig {
    fn default() -> Self {
        Self {
            weight: "abs".into(),
            power: None,
            kappa: 1.0,
            h: vec![1.0 / 16.0, 1.0 / 32.0, 1.0 / 64.0],
            expect: None,
            glaeser_alpha: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MollifyConfig {
    pub delta: Vec<f64>,
    /// A shipped test function or `random` (seeded P1 fields vanishing on the boundary).
    pub test_fn: String,
    pub h: f64,
    /// Hölder exponent of the gradient bound check.
    pub gamma: f64,
    /// Number of random fields.
    pub fields: usize,
    pub seed: u64,
    /// Also measure the gradient identity residual.
    pub identity: bool,
}

impl Default for MollifyConfig {
    fn default() -> Self {
        Self {
            delta: vec![0.2, 0.1, 0.05, 0.025],
            test_fn: "tent".into(),
            h: 1.0 / 32.0,
            gamma: 1.0,
            fields: 20,
            seed: 0,
            identity: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EnergyConfig {
    pub integrand: IntegrandSpec,
    /// Nodal values as CSV `node,value`.
    pub field: Option<PathBuf>,
    /// Mesh JSON; a disk mesh of size `h` otherwise.
    pub mesh: Option<PathBuf>,
    pub h: f64,
    /// Used when no field file is given.
    pub test_fn: String,
}

impl Default for EnergyConfig {
    fn default() -> Self {
        Self {
            integrand: IntegrandSpec::default(),
            field: None,
            mesh: None,
            h: 1.0 / 32.0,
            test_fn: "tent".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MinimizeConfig {
    pub integrand: IntegrandSpec,
    pub h: f64,
    /// Boundary data name, see [`boundary_from_name`].
    pub boundary: String,
    /// `harmonic` (solve with a ≡ 0, p = 2 first) or `datum` (interpolant of the data).
    pub initial: String,
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for MinimizeConfig {
    fn default() -> Self {
        Self {
            integrand: IntegrandSpec::default(),
            h: 1.0 / 32.0,
            boundary: "x1".into(),
            initial: "harmonic".into(),
            tol: 1e-10,
            max_iter: 200,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NoGapConfig {
    pub p: f64,
    pub q: f64,
    pub kappa: f64,
    pub weight: String,
    pub boundary: String,
    pub h: Vec<f64>,
    pub deltas: Vec<f64>,
    /// Largest accepted relative agreement at the finest level.
    pub threshold: f64,
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for NoGapConfig {
    fn default() -> Self {
        Self {
            p: 2.0,
            q: 3.0,
            kappa: 1.0,
            weight: "abs".into(),
            boundary: "x1".into(),
            h: vec![1.0 / 16.0, 1.0 / 32.0, 1.0 / 64.0],
            deltas: vec![0.2, 0.1, 0.05],
            threshold: 0.10,
            tol: 1e-10,
            max_iter: 200,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GapDemoConfig {
    pub n: usize,
    pub p: f64,
    pub q: f64,
    pub kappa: f64,
    pub safety: f64,
    pub h: Vec<f64>,
    pub deltas: Vec<f64>,
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for GapDemoConfig {
    fn default() -> Self {
        Self {
            n: 2,
            p: 1.5,
            q: 4.0,
            kappa: 1.0,
            safety: SAFETY_FACTOR,
            h: vec![1.0 / 64.0],
            deltas: vec![0.05, 0.1, 0.2],
            tol: 1e-10,
            max_iter: 200,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConstantsConfig {
    pub n: usize,
    pub p: f64,
    pub q: f64,
    pub kappa: f64,
    pub safety: f64,
    /// Mesh size of the planar cross-checks; skipped when absent or for n = 3.
    pub h: Option<f64>,
}

impl Default for ConstantsConfig {
    fn default() -> Self {
        Self {
            n: 2,
            p: 1.5,
            q: 4.0,
            kappa: 1.0,
            safety: SAFETY_FACTOR,
            h: Some(1.0 / 64.0),
        }
    }
}
