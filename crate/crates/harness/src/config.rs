//! Run and sweep configuration files (TOML).

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use piezowave_core::blowup::Convention;
use piezowave_core::integrator::{Scheme, StepConfig};
use piezowave_core::{ExponentMode, Exponents, Grid1D, MaterialParams, State};
use serde::{Deserialize, Serialize};

use crate::error::{HarnessError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MaterialSection {
    pub rho: f64,
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub mu: f64,
}

impl Default for MaterialSection {
    fn default() -> Self {
        Self {
            rho: 1.0,
            alpha: 2.0,
            beta: 1.0,
            gamma: 1.0,
            mu: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExponentSection {
    pub m1: f64,
    pub m2: f64,
    pub n1: f64,
    pub n2: f64,
    #[serde(default)]
    pub mode: ExponentMode,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridSection {
    pub length: f64,
    pub nx: usize,
}

impl Default for GridSection {
    fn default() -> Self {
        Self {
            length: 1.0,
            nx: 201,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct IntegratorSection {
    /// Time step; when absent, `0.4 · dx / c_wave`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dt: Option<f64>,
    pub scheme: Scheme,
    pub newton_tol: f64,
    pub newton_max_iter: usize,
    pub blowup_cutoff: f64,
    pub damping: bool,
    pub sources: bool,
}

impl Default for IntegratorSection {
    fn default() -> Self {
        let d = StepConfig::default();
        Self {
            dt: None,
            scheme: d.scheme,
            newton_tol: d.newton_tol,
            newton_max_iter: d.newton_max_iter,
            blowup_cutoff: d.blowup_cutoff,
            damping: d.damping,
            sources: d.sources,
        }
    }
}

/// Initial data as coefficients of `sin((k − ½)πx/L)`, `k = 1, 2, …`, all
/// multiplied by `scale`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct InitialSection {
    pub scale: f64,
    pub v0: Vec<f64>,
    pub p0: Vec<f64>,
    pub v1: Vec<f64>,
    pub p1: Vec<f64>,
}

impl Default for InitialSection {
    fn default() -> Self {
        Self {
            scale: 1.0,
            v0: Vec::new(),
            p0: Vec::new(),
            v1: Vec::new(),
            p1: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FitRequest {
    #[default]
    None,
    Exp,
    Poly,
    Log,
    /// Every applicable model, best by rmse first.
    Auto,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunSection {
    pub t_end: f64,
    pub record_every: usize,
    pub seed: u64,
    pub fit: FitRequest,
    pub fit_c: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fit_tail_start: Option<usize>,
    pub poincare_convention: Convention,
}

impl Default for RunSection {
    fn default() -> Self {
        Self {
            t_end: 10.0,
            record_every: 10,
            seed: 0,
            fit: FitRequest::None,
            fit_c: 1.0,
            fit_tail_start: None,
            poincare_convention: Convention::PoincareConsistent,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputSection {
    pub dir: PathBuf,
}

impl Default for OutputSection {
    fn default() -> Self {
        Self {
            dir: PathBuf::from("out"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub material: MaterialSection,
    pub exponents: ExponentSection,
    #[serde(default)]
    pub grid: GridSection,
    #[serde(default)]
    pub integrator: IntegratorSection,
    #[serde(default)]
    pub initial: InitialSection,
    #[serde(default)]
    pub run: RunSection,
    #[serde(default)]
    pub output: OutputSection,
}

/// Validated core objects built from a [`RunConfig`].
#[derive(Debug, Clone)]
pub struct Setup {
    pub params: MaterialParams,
    pub exps: Exponents,
    pub grid: Grid1D,
    pub step: StepConfig,
    pub state0: State,
}

fn parse_error(path: &str, e: toml::de::Error) -> HarnessError {
    HarnessError::ConfigParse {
        path: path.to_string(),
        message: e.to_string().trim_end().to_string(),
    }
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))
}

impl RunConfig {
    pub fn from_toml_str(text: &str, origin: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| parse_error(origin, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_toml_str(&read(path)?, &path.display().to_string())
    }

    /// Serialized form with every default made explicit.
    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("run configs always serialize")
    }

    pub fn setup(&self) -> Result<Setup> {
        let m = &self.material;
        let params = MaterialParams::new(m.rho, m.alpha, m.beta, m.gamma, m.mu)?;
        let e = &self.exponents;
        let exps = Exponents::validate(e.m1, e.m2, e.n1, e.n2, e.mode)?;
        let grid = Grid1D::new(self.grid.length, self.grid.nx)?;
        let i = &self.integrator;
        let step = StepConfig {
            dt: i
                .dt
                .unwrap_or_else(|| StepConfig::suggested_dt(&grid, &params)),
            scheme: i.scheme,
            newton_tol: i.newton_tol,
            newton_max_iter: i.newton_max_iter,
            blowup_cutoff: i.blowup_cutoff,
            damping: i.damping,
            sources: i.sources,
        };
        step.validate()?;
        if !(self.run.t_end.is_finite() && self.run.t_end >= 0.0) {
            return Err(HarnessError::Invalid(format!(
                "run.t_end = {} must be non-negative",
                self.run.t_end
            )));
        }
        if self.run.record_every == 0 {
            return Err(HarnessError::Invalid(
                "run.record_every must be at least 1".into(),
            ));
        }
        let s = &self.initial;
        let scale = |c: &[f64]| c.iter().map(|x| x * s.scale).collect::<Vec<f64>>();
        let state0 = State::from_modes(
            &grid,
            &scale(&s.v0),
            &scale(&s.p0),
            &scale(&s.v1),
            &scale(&s.p1),
        );
        if !state0.is_finite() {
            return Err(HarnessError::Invalid("initial data is not finite".into()));
        }
        Ok(Setup {
            params,
            exps,
            grid,
            step,
            state0,
        })
    }
}

fn default_max_parallel() -> usize {
    1
}

fn default_max_runs() -> usize {
    10_000
}

fn default_sweep_dir() -> PathBuf {
    PathBuf::from("sweep")
}

/// Cross product of overrides applied to a base run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    #[serde(default = "default_max_parallel")]
    pub max_parallel: usize,
    #[serde(default = "default_max_runs")]
    pub max_runs: usize,
    #[serde(default = "default_sweep_dir")]
    pub output_dir: PathBuf,
    /// Also write the per-run output files under `output_dir/run-XXXX`.
    #[serde(default)]
    pub write_runs: bool,
    pub base: RunConfig,
    /// Dotted config paths (e.g. `"initial.scale"`) mapped to value lists.
    pub axes: BTreeMap<String, Vec<toml::Value>>,
}

impl SweepConfig {
    pub fn from_toml_str(text: &str, origin: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| parse_error(origin, e))?;
        if cfg.max_parallel == 0 {
            return Err(HarnessError::Invalid(
                "max_parallel must be at least 1".into(),
            ));
        }
        for (k, v) in &cfg.axes {
            if v.is_empty() {
                return Err(HarnessError::Invalid(format!("axis `{k}` has no values")));
            }
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_toml_str(&read(path)?, &path.display().to_string())
    }

    pub fn run_count(&self) -> usize {
        self.axes.values().map(Vec::len).product()
    }

    /// All value combinations in row-major order over the sorted axis names.
    pub fn combinations(&self) -> Result<Vec<Vec<toml::Value>>> {
        let n = self.run_count();
        if n > self.max_runs {
            return Err(HarnessError::Invalid(format!(
                "sweep has {n} runs, above the cap of {}",
                self.max_runs
            )));
        }
        let axes: Vec<&Vec<toml::Value>> = self.axes.values().collect();
        let mut out = Vec::with_capacity(n);
        for mut idx in 0..n {
            let mut combo = vec![toml::Value::Boolean(false); axes.len()];
            for (a, values) in axes.iter().enumerate().rev() {
                combo[a] = values[idx % values.len()].clone();
                idx /= values.len();
            }
            out.push(combo);
        }
        Ok(out)
    }

    /// Base config with the given axis values substituted.
    pub fn instantiate(&self, values: &[toml::Value]) -> Result<RunConfig> {
        let mut tree = toml::Value::try_from(&self.base)
            .map_err(|e| HarnessError::Invalid(format!("cannot serialize base config: {e}")))?;
        for (key, value) in self.axes.keys().zip(values) {
            set_path(&mut tree, key, value.clone())?;
        }
        let origin = format!("sweep override {:?}", self.axes.keys().collect::<Vec<_>>());
        tree.try_into::<RunConfig>()
            .map_err(|e| parse_error(&origin, e))
    }
}

fn set_path(tree: &mut toml::Value, key: &str, value: toml::Value) -> Result<()> {
    let mut node = tree;
    let parts: Vec<&str> = key.split('.').collect();
    for (i, part) in parts.iter().enumerate() {
        let table = node.as_table_mut().ok_or_else(|| {
            HarnessError::Invalid(format!("axis `{key}`: `{part}` is not inside a table"))
        })?;
        if i + 1 == parts.len() {
            table.insert(part.to_string(), value);
            return Ok(());
        }
        node = table
            .entry(part.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()));
    }
    Err(HarnessError::Invalid(format!("empty axis name `{key}`")))
}
