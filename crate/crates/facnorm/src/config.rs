//! Experiment configuration, read from TOML or JSON.

use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::ConfigError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    Gamma2Table,
    SymbolGrowth,
    BoundVerify,
    KernelFactor,
    FactorDemo,
    FejerDemo,
    ConsistencySuite,
}

impl ExperimentKind {
    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::Gamma2Table => "gamma2-table",
            ExperimentKind::SymbolGrowth => "symbol-growth",
            ExperimentKind::BoundVerify => "bound-verify",
            ExperimentKind::KernelFactor => "kernel-factor",
            ExperimentKind::FactorDemo => "factor-demo",
            ExperimentKind::FejerDemo => "fejer-demo",
            ExperimentKind::ConsistencySuite => "consistency-suite",
        }
    }
}

impl fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub tolerances: Tolerances,
    /// Start from the built-in catalog before adding the entries below.
    #[serde(default = "default_true")]
    pub builtin_catalog: bool,
    #[serde(default)]
    pub weights: Vec<WeightSpec>,
    #[serde(default)]
    pub symbols: Vec<SymbolSpec>,
    #[serde(default)]
    pub tensors: Vec<TensorSpec>,
    #[serde(default)]
    pub models: Vec<ModelSpec>,
    #[serde(default)]
    pub polynomials: Vec<PolySpec>,
    #[serde(default)]
    pub gamma2_table: Gamma2TableSpec,
    #[serde(default)]
    pub symbol_growth: SymbolGrowthSpec,
    #[serde(default)]
    pub bound_verify: BoundVerifySpec,
    #[serde(default)]
    pub kernel_factor: KernelFactorSpec,
    #[serde(default)]
    pub factor_demo: FactorDemoSpec,
    #[serde(default)]
    pub fejer_demo: FejerDemoSpec,
    #[serde(default)]
    pub consistency_suite: ConsistencySuiteSpec,
    #[serde(default)]
    pub output: OutputSpec,
}

fn default_true() -> bool {
    true
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields, default)]
pub struct Tolerances {
    /// SDP bracket width for γ₂ and γ₂*.
    pub gamma2: f64,
    /// Combined tolerance of the functional-calculus bound.
    pub bound: f64,
    /// Quadrature tolerance of the Hille–Phillips integrals.
    pub calculus: f64,
    /// Quadrature tolerance of L¹ norms in the Fejér experiments.
    pub l1: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            gamma2: 1e-6,
            bound: 1e-4,
            calculus: 1e-10,
            l1: 1e-7,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WeightSpec {
    pub id: String,
    #[serde(default)]
    pub terms: Vec<TermSpec>,
    #[serde(default)]
    pub indicators: Vec<IndicatorSpec>,
}

/// `coeff·(t−shift)^power·e^{−decay·(t−shift)}` on `[shift, ∞)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TermSpec {
    #[serde(default = "one", alias = "coeff")]
    pub coeff_re: f64,
    #[serde(default)]
    pub coeff_im: f64,
    pub decay_re: f64,
    #[serde(default)]
    pub decay_im: f64,
    #[serde(default)]
    pub power: u32,
    #[serde(default)]
    pub shift: f64,
}

/// `coeff·𝟙_{[a, b)}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IndicatorSpec {
    #[serde(default = "one", alias = "coeff")]
    pub coeff_re: f64,
    #[serde(default)]
    pub coeff_im: f64,
    pub a: f64,
    pub b: f64,
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SymbolSpec {
    pub id: String,
    #[serde(flatten)]
    pub kind: SymbolKindSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum SymbolKindSpec {
    /// Laplace transform of a catalog weight.
    Laplace { weight: String },
    /// `u ↦ u^{ir}`.
    PowerImaginary { r: f64 },
    /// `u ↦ base(ε + u)`.
    Shifted { base: String, eps: f64 },
    Constant {
        value_re: f64,
        #[serde(default)]
        value_im: f64,
    },
    /// `u ↦ e^{−rate·u}`.
    Exponential { rate: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TensorSpec {
    pub id: String,
    /// `(c, d)` weight ids.
    pub pairs: Vec<(String, String)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub id: String,
    #[serde(flatten)]
    pub kind: ModelKindSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ModelKindSpec {
    /// Dense generator; `im` defaults to zero.
    Matrix {
        re: Vec<Vec<f64>>,
        #[serde(default)]
        im: Option<Vec<Vec<f64>>>,
    },
    ScaledIdentity {
        dim: usize,
        a: f64,
    },
    /// `a·I + N` with `N` the shift on `dim` coordinates.
    Jordan {
        #[serde(default = "two")]
        dim: usize,
        a: f64,
    },
    /// `ω·[[0, −1], [1, 0]]`.
    Rotation {
        #[serde(default = "one")]
        omega: f64,
    },
    /// `S·diag(λ)·S⁻¹` with `Re λ ∈ [re_min, re_max]` and `cond(S) ≤ cond`.
    RandomStable {
        dim: usize,
        #[serde(default = "default_cond")]
        cond: f64,
        #[serde(default = "default_re_min")]
        re_min: f64,
        #[serde(default = "two_f")]
        re_max: f64,
        seed: u64,
    },
    /// Block-diagonal composition of catalog models.
    Block {
        parts: Vec<String>,
    },
}

fn two() -> usize {
    2
}

fn two_f() -> f64 {
    2.0
}

fn default_cond() -> f64 {
    10.0
}

fn default_re_min() -> f64 {
    0.2
}

/// Circle polynomial as `[re, im]` Taylor coefficients.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PolySpec {
    pub id: String,
    pub coeffs: Vec<[f64; 2]>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GridKindSpec {
    Uniform,
    Geometric,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub kind: GridKindSpec,
    /// Point count; experiments that sweep sizes ignore it.
    #[serde(default)]
    pub n: Option<usize>,
    pub lo: f64,
    pub hi: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields, default)]
pub struct Gamma2TableSpec {
    /// Symbol ids; empty means every catalog symbol.
    pub symbols: Vec<String>,
    pub sizes: Vec<usize>,
    pub grid: GridSpec,
    /// Also write each sampled matrix as CSV with a JSON provenance sidecar.
    pub export_matrices: bool,
}

impl Default for Gamma2TableSpec {
    fn default() -> Self {
        Gamma2TableSpec {
            symbols: Vec::new(),
            sizes: vec![4, 8, 16],
            grid: GridSpec {
                kind: GridKindSpec::Geometric,
                n: None,
                lo: 0.01,
                hi: 10.0,
            },
            export_matrices: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields, default)]
pub struct SymbolGrowthSpec {
    /// Exponent of `t^{ir}`.
    pub r: f64,
    /// Grids are geometric on `[10^{−k}, 10^k]`.
    pub ks: Vec<u32>,
    /// Grid size `points_per_k·k + 1`.
    pub points_per_k: usize,
}

impl Default for SymbolGrowthSpec {
    fn default() -> Self {
        SymbolGrowthSpec {
            r: 1.0,
            ks: vec![1, 2, 3],
            points_per_k: 16,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields, default)]
pub struct BoundVerifySpec {
    /// Model ids; empty means every catalog model.
    pub models: Vec<String>,
    /// Tensor weight ids; empty means every catalog tensor.
    pub tensors: Vec<String>,
    /// Coarse level; the second level refines it once.
    pub grid: GridSpec,
}

impl Default for BoundVerifySpec {
    fn default() -> Self {
        BoundVerifySpec {
            models: Vec::new(),
            tensors: Vec::new(),
            grid: GridSpec {
                kind: GridKindSpec::Uniform,
                n: Some(9),
                lo: 0.02,
                hi: 12.0,
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields, default)]
pub struct KernelFactorSpec {
    pub models: Vec<String>,
    pub pairs_per_model: usize,
    pub grid: GridSpec,
}

impl Default for KernelFactorSpec {
    fn default() -> Self {
        KernelFactorSpec {
            models: Vec::new(),
            pairs_per_model: 50,
            grid: GridSpec {
                kind: GridKindSpec::Geometric,
                n: Some(16),
                lo: 0.01,
                hi: 20.0,
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields, default)]
pub struct FactorDemoSpec {
    pub polynomials: Vec<String>,
    /// Defaults to the size suggested by the root locations.
    pub fft_size: Option<usize>,
    /// Quadrature points for line norms.
    pub samples: usize,
}

impl Default for FactorDemoSpec {
    fn default() -> Self {
        FactorDemoSpec {
            polynomials: Vec::new(),
            fft_size: None,
            samples: 8192,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields, default)]
pub struct FejerDemoSpec {
    pub ns: Vec<u32>,
    /// Spectral densities on `(0, ∞)`; each must vanish at 0.
    pub weights: Vec<String>,
    pub inner: f64,
    pub outer: f64,
}

impl Default for FejerDemoSpec {
    fn default() -> Self {
        FejerDemoSpec {
            ns: vec![1, 2, 4, 8, 16],
            weights: vec!["texp".into()],
            inner: 1.0,
            outer: 2.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields, default)]
pub struct ConsistencySuiteSpec {
    pub models: Vec<String>,
    pub tensors: Vec<String>,
    /// Weights checked by the Plancherel and Poisson rows.
    pub weights: Vec<String>,
    pub eps: f64,
}

impl Default for ConsistencySuiteSpec {
    fn default() -> Self {
        ConsistencySuiteSpec {
            models: Vec::new(),
            tensors: Vec::new(),
            weights: Vec::new(),
            eps: 0.5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    /// Overridden by `--out`.
    #[serde(default)]
    pub dir: Option<PathBuf>,
}

impl ExperimentConfig {
    /// A config for `experiment` with every section at its default.
    pub fn new(experiment: ExperimentKind) -> Self {
        ExperimentConfig {
            experiment,
            seed: 0,
            tolerances: Tolerances::default(),
            builtin_catalog: true,
            weights: Vec::new(),
            symbols: Vec::new(),
            tensors: Vec::new(),
            models: Vec::new(),
            polynomials: Vec::new(),
            gamma2_table: Gamma2TableSpec::default(),
            symbol_growth: SymbolGrowthSpec::default(),
            bound_verify: BoundVerifySpec::default(),
            kernel_factor: KernelFactorSpec::default(),
            factor_demo: FactorDemoSpec::default(),
            fejer_demo: FejerDemoSpec::default(),
            consistency_suite: ConsistencySuiteSpec::default(),
            output: OutputSpec::default(),
        }
    }

    /// Parses TOML, or JSON when the text starts with `{`.
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let cfg: ExperimentConfig = if text.trim_start().starts_with('{') {
            serde_json::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))?
        } else {
            toml::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))?
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Io {
            path: path.to_path_buf(),
            message: e.to_string(),
        })?;
        Self::parse(&text)
    }

    /// Checks tolerances and experiment parameters; catalog references are
    /// checked when the catalog is built.
    pub fn validate(&self) -> Result<(), ConfigError> {
        let t = &self.tolerances;
        for (name, v) in [
            ("gamma2", t.gamma2),
            ("bound", t.bound),
            ("calculus", t.calculus),
            ("l1", t.l1),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(ConfigError::Invalid(format!(
                    "tolerance `{name}` must be positive, got {v}"
                )));
            }
        }
        let g = &self.gamma2_table;
        if g.sizes.iter().any(|&n| n < 2) {
            return Err(ConfigError::Invalid(
                "gamma2-table sizes must be at least 2".into(),
            ));
        }
        check_grid("gamma2-table", &g.grid)?;
        check_grid("bound-verify", &self.bound_verify.grid)?;
        check_grid("kernel-factor", &self.kernel_factor.grid)?;
        if self.bound_verify.grid.n.is_none() || self.kernel_factor.grid.n.is_none() {
            return Err(ConfigError::Invalid(
                "bound-verify and kernel-factor grids need a point count `n`".into(),
            ));
        }
        let s = &self.symbol_growth;
        if s.ks.is_empty() || s.ks.contains(&0) || s.points_per_k == 0 || !s.r.is_finite() {
            return Err(ConfigError::Invalid(
                "symbol-growth needs positive ks, points-per-k ≥ 1 and a finite r".into(),
            ));
        }
        if self.fejer_demo.ns.contains(&0) {
            return Err(ConfigError::Invalid(
                "fejer-demo indices must be at least 1".into(),
            ));
        }
        if let Some(n) = self.factor_demo.fft_size {
            if !n.is_power_of_two() {
                return Err(ConfigError::Invalid(
                    "factor-demo fft-size must be a power of two".into(),
                ));
            }
        }
        if self.factor_demo.samples < 16 {
            return Err(ConfigError::Invalid(
                "factor-demo samples must be at least 16".into(),
            ));
        }
        if !(self.consistency_suite.eps > 0.0 && self.consistency_suite.eps.is_finite()) {
            return Err(ConfigError::Invalid(
                "consistency-suite eps must be positive".into(),
            ));
        }
        Ok(())
    }
}

fn check_grid(section: &str, g: &GridSpec) -> Result<(), ConfigError> {
    if !(g.lo > 0.0 && g.hi > g.lo && g.hi.is_finite()) {
        return Err(ConfigError::Invalid(format!(
            "{section} grid needs 0 < lo < hi < ∞, got [{}, {}]",
            g.lo, g.hi
        )));
    }
    if g.n.is_some_and(|n| n < 2) {
        return Err(ConfigError::Invalid(format!("{section} grid needs n ≥ 2")));
    }
    Ok(())
}
