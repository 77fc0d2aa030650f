//! Named weights, symbols, tensor weights, semigroup models and circle
//! polynomials, built from the defaults plus config entries.

use std::collections::HashMap;

use facnorm_core::hardy::CirclePoly;
use facnorm_core::semigroup::SemigroupModel;
use facnorm_core::symbols::{ExpTerm, Segment, Symbol, TensorWeight, Weight};
use facnorm_core::{CMat, CVec, C64};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::config::{
    ExperimentConfig, ModelKindSpec, ModelSpec, PolySpec, SymbolKindSpec, SymbolSpec, TensorSpec,
    WeightSpec,
};
use crate::ConfigError;

/// Entries in insertion order with lookup by id.
#[derive(Debug, Clone)]
pub struct Registry<T> {
    kind: &'static str,
    items: Vec<(String, T)>,
    index: HashMap<String, usize>,
}

impl<T> Registry<T> {
    fn new(kind: &'static str) -> Self {
        Registry {
            kind,
            items: Vec::new(),
            index: HashMap::new(),
        }
    }

    fn insert(&mut self, id: &str, item: T) -> Result<(), ConfigError> {
        if self.index.contains_key(id) {
            return Err(ConfigError::Catalog(format!(
                "duplicate {} id `{id}`",
                self.kind
            )));
        }
        self.index.insert(id.to_string(), self.items.len());
        self.items.push((id.to_string(), item));
        Ok(())
    }

    pub fn get(&self, id: &str) -> Result<&T, ConfigError> {
        self.index
            .get(id)
            .map(|&i| &self.items[i].1)
            .ok_or_else(|| ConfigError::Catalog(format!("unknown {} id `{id}`", self.kind)))
    }

    pub fn ids(&self) -> impl Iterator<Item = &str> {
        self.items.iter().map(|(id, _)| id.as_str())
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    /// The listed entries in the given order, or all entries when `ids` is
    /// empty.
    pub fn select(&self, ids: &[String]) -> Result<Vec<(&str, &T)>, ConfigError> {
        if ids.is_empty() {
            return Ok(self.items.iter().map(|(id, t)| (id.as_str(), t)).collect());
        }
        ids.iter()
            .map(|id| {
                self.get(id)?;
                let (id, t) = &self.items[self.index[id.as_str()]];
                Ok((id.as_str(), t))
            })
            .collect()
    }
}

#[derive(Debug, Clone)]
pub struct Catalog {
    pub weights: Registry<Weight>,
    pub symbols: Registry<Symbol>,
    pub tensors: Registry<TensorWeight>,
    pub models: Registry<SemigroupModel>,
    pub polynomials: Registry<CirclePoly>,
}

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

fn builtin_weights() -> Vec<WeightSpec> {
    let term = |coeff: C64, decay: C64, power: u32, shift: f64| crate::config::TermSpec {
        coeff_re: coeff.re,
        coeff_im: coeff.im,
        decay_re: decay.re,
        decay_im: decay.im,
        power,
        shift,
    };
    let ind = |coeff: f64, a: f64, b: f64| crate::config::IndicatorSpec {
        coeff_re: coeff,
        coeff_im: 0.0,
        a,
        b,
    };
    let w = |id: &str, terms, indicators| WeightSpec {
        id: id.into(),
        terms,
        indicators,
    };
    vec![
        w("exp", vec![term(c(1.0, 0.0), c(1.0, 0.0), 0, 0.0)], vec![]),
        w("exp2", vec![term(c(1.0, 0.0), c(2.0, 0.0), 0, 0.0)], vec![]),
        w("texp", vec![term(c(1.0, 0.0), c(1.0, 0.0), 1, 0.0)], vec![]),
        w("osc", vec![term(c(1.0, 0.0), c(1.0, 2.0), 0, 0.0)], vec![]),
        w("ind01", vec![], vec![ind(1.0, 0.0, 1.0)]),
        w("ind-half", vec![], vec![ind(1.0, 0.5, 1.5)]),
        w(
            "shifted-exp",
            vec![term(c(0.5, 0.0), c(1.0, 0.0), 0, 1.0)],
            vec![],
        ),
        w(
            "mixed",
            vec![
                term(c(0.3, 0.4), c(1.0, 0.0), 0, 0.0),
                term(c(-0.5, 0.0), c(3.0, -1.0), 1, 0.0),
            ],
            vec![ind(0.25, 0.0, 2.0)],
        ),
    ]
}

fn builtin_symbols() -> Vec<SymbolSpec> {
    let s = |id: &str, kind| SymbolSpec {
        id: id.into(),
        kind,
    };
    let lap = |w: &str| SymbolKindSpec::Laplace { weight: w.into() };
    vec![
        s(
            "const-one",
            SymbolKindSpec::Constant {
                value_re: 1.0,
                value_im: 0.0,
            },
        ),
        s("exp-rate-1", SymbolKindSpec::Exponential { rate: 1.0 }),
        s("exp-rate-0.1", SymbolKindSpec::Exponential { rate: 0.1 }),
        s("lap-exp", lap("exp")),
        s("lap-texp", lap("texp")),
        s("lap-osc", lap("osc")),
        s("lap-ind01", lap("ind01")),
        s("lap-mixed", lap("mixed")),
        s(
            "lap-exp-shifted",
            SymbolKindSpec::Shifted {
                base: "lap-exp".into(),
                eps: 0.5,
            },
        ),
        s("pow-i", SymbolKindSpec::PowerImaginary { r: 1.0 }),
    ]
}

fn builtin_tensors() -> Vec<TensorSpec> {
    let t = |id: &str, pairs: &[(&str, &str)]| TensorSpec {
        id: id.into(),
        pairs: pairs
            .iter()
            .map(|(a, b)| (a.to_string(), b.to_string()))
            .collect(),
    };
    vec![
        t("exp-exp", &[("exp", "exp")]),
        t("exp-ind", &[("exp", "ind01")]),
        t("texp-exp2", &[("texp", "exp2")]),
        t("osc-exp", &[("osc", "exp")]),
        t("sum", &[("exp", "exp"), ("ind-half", "exp2")]),
    ]
}

fn builtin_models() -> Vec<ModelSpec> {
    let m = |id: &str, kind| ModelSpec {
        id: id.into(),
        kind,
    };
    let skew3 = {
        // Skew-Hermitian: A* = −A.
        let re = vec![
            vec![0.0, -0.5, 0.2],
            vec![0.5, 0.0, -1.0],
            vec![-0.2, 1.0, 0.0],
        ];
        let im = vec![
            vec![1.0, 0.3, 0.0],
            vec![0.3, -0.5, 0.4],
            vec![0.0, 0.4, 0.2],
        ];
        ModelKindSpec::Matrix { re, im: Some(im) }
    };
    vec![
        m(
            "identity-half",
            ModelKindSpec::ScaledIdentity { dim: 2, a: 0.5 },
        ),
        m("jordan-1", ModelKindSpec::Jordan { dim: 2, a: 1.0 }),
        m("jordan-quarter", ModelKindSpec::Jordan { dim: 2, a: 0.25 }),
        m("jordan3", ModelKindSpec::Jordan { dim: 3, a: 0.8 }),
        m("rotation", ModelKindSpec::Rotation { omega: 1.0 }),
        m("skew3", skew3),
        m(
            "random-stable-3",
            ModelKindSpec::RandomStable {
                dim: 3,
                cond: 10.0,
                re_min: 0.2,
                re_max: 2.0,
                seed: 11,
            },
        ),
        m(
            "random-stable-4",
            ModelKindSpec::RandomStable {
                dim: 4,
                cond: 50.0,
                re_min: 0.3,
                re_max: 2.0,
                seed: 12,
            },
        ),
        m(
            "rotation+jordan",
            ModelKindSpec::Block {
                parts: vec!["rotation".into(), "jordan-quarter".into()],
            },
        ),
    ]
}

fn builtin_polynomials() -> Vec<PolySpec> {
    let p = |id: &str, coeffs: &[[f64; 2]]| PolySpec {
        id: id.into(),
        coeffs: coeffs.to_vec(),
    };
    vec![
        p("one", &[[1.0, 0.0]]),
        p("z2", &[[0.0, 0.0], [0.0, 0.0], [1.0, 0.0]]),
        p("one-plus-half-z", &[[1.0, 0.0], [0.5, 0.0]]),
        // (z − 0.5)(z + 2i)
        p("inner-outer", &[[0.0, -1.0], [-0.5, 2.0], [1.0, 0.0]]),
        // (1 + z/3)(z − 0.3i)(z + 0.6)
        p(
            "cubic",
            &[[0.0, -0.18], [0.6, -0.36], [1.2, -0.1], [1.0 / 3.0, 0.0]],
        ),
    ]
}

fn build_weight(spec: &WeightSpec) -> Result<Weight, ConfigError> {
    let bad = |e: facnorm_core::Error| ConfigError::Catalog(format!("weight `{}`: {e}", spec.id));
    let terms = spec
        .terms
        .iter()
        .map(|t| {
            ExpTerm::new(
                c(t.coeff_re, t.coeff_im),
                c(t.decay_re, t.decay_im),
                t.power,
                t.shift,
            )
        })
        .collect::<Result<Vec<_>, _>>()
        .map_err(bad)?;
    let segments = spec
        .indicators
        .iter()
        .map(|s| Segment::new(c(s.coeff_re, s.coeff_im), 0, s.a, s.b))
        .collect::<Result<Vec<_>, _>>()
        .map_err(bad)?;
    Weight::new(terms, segments).map_err(bad)
}

fn build_symbol(
    spec: &SymbolSpec,
    weights: &Registry<Weight>,
    symbols: &Registry<Symbol>,
) -> Result<Symbol, ConfigError> {
    let bad = |e: facnorm_core::Error| ConfigError::Catalog(format!("symbol `{}`: {e}", spec.id));
    match &spec.kind {
        SymbolKindSpec::Laplace { weight } => {
            Ok(Symbol::laplace_of(&spec.id, weights.get(weight)?.clone()))
        }
        SymbolKindSpec::PowerImaginary { r } => Symbol::power_imaginary(&spec.id, *r).map_err(bad),
        SymbolKindSpec::Shifted { base, eps } => {
            Symbol::shifted(&spec.id, symbols.get(base)?.clone(), *eps).map_err(bad)
        }
        SymbolKindSpec::Constant { value_re, value_im } => {
            Ok(Symbol::constant(&spec.id, c(*value_re, *value_im)))
        }
        SymbolKindSpec::Exponential { rate } => Symbol::exponential(&spec.id, *rate).map_err(bad),
    }
}

fn dense(rows: &[Vec<f64>], what: &str) -> Result<(usize, Vec<f64>), ConfigError> {
    let d = rows.len();
    if d == 0 || rows.iter().any(|r| r.len() != d) {
        return Err(ConfigError::Catalog(format!(
            "{what} must be a non-empty square matrix"
        )));
    }
    Ok((d, rows.iter().flatten().copied().collect()))
}

/// `S·diag(λ)·S⁻¹` with `S = Q₁ diag(σ) Q₂`, `σ` log-spaced on `[1, cond]`.
fn random_stable(
    dim: usize,
    cond: f64,
    re_min: f64,
    re_max: f64,
    seed: u64,
) -> Result<CMat, ConfigError> {
    if dim == 0 || !(cond >= 1.0 && cond <= 100.0) || !(0.0 < re_min && re_min <= re_max) {
        return Err(ConfigError::Catalog(
            "random-stable needs dim ≥ 1, 1 ≤ cond ≤ 100 and 0 < re-min ≤ re-max".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let gauss = |rng: &mut ChaCha8Rng| {
        CMat::from_fn(dim, dim, |_, _| {
            c(rng.sample(StandardNormal), rng.sample(StandardNormal))
        })
    };
    let q1 = gauss(&mut rng).qr().q();
    let q2 = gauss(&mut rng).qr().q();
    let sigma = CVec::from_fn(dim, |i, _| {
        let x = if dim == 1 {
            0.0
        } else {
            i as f64 / (dim - 1) as f64
        };
        c(cond.powf(x), 0.0)
    });
    let s = &q1 * CMat::from_diagonal(&sigma) * &q2;
    let lam = CVec::from_fn(dim, |_, _| {
        c(
            rng.random_range(re_min..=re_max),
            rng.random_range(-3.0..=3.0),
        )
    });
    let s_inv = s
        .clone()
        .try_inverse()
        .ok_or_else(|| ConfigError::Catalog("random similarity is singular".into()))?;
    Ok(&s * CMat::from_diagonal(&lam) * s_inv)
}

fn build_generator(
    spec: &ModelSpec,
    models: &Registry<SemigroupModel>,
) -> Result<CMat, ConfigError> {
    let what = format!("model `{}`", spec.id);
    Ok(match &spec.kind {
        ModelKindSpec::Matrix { re, im } => {
            let (d, re) = dense(re, &what)?;
            let im = match im {
                Some(rows) => {
                    let (d2, v) = dense(rows, &what)?;
                    if d2 != d {
                        return Err(ConfigError::Catalog(format!(
                            "{what}: re and im shapes differ"
                        )));
                    }
                    v
                }
                None => vec![0.0; d * d],
            };
            CMat::from_row_iterator(d, d, re.iter().zip(&im).map(|(&r, &i)| c(r, i)))
        }
        ModelKindSpec::ScaledIdentity { dim, a } => CMat::identity(*dim, *dim) * c(*a, 0.0),
        ModelKindSpec::Jordan { dim, a } => CMat::from_fn(*dim, *dim, |i, j| {
            if i == j {
                c(*a, 0.0)
            } else if j == i + 1 {
                c(1.0, 0.0)
            } else {
                c(0.0, 0.0)
            }
        }),
        ModelKindSpec::Rotation { omega } => CMat::from_row_slice(
            2,
            2,
            &[c(0.0, 0.0), c(-omega, 0.0), c(*omega, 0.0), c(0.0, 0.0)],
        ),
        ModelKindSpec::RandomStable {
            dim,
            cond,
            re_min,
            re_max,
            seed,
        } => random_stable(*dim, *cond, *re_min, *re_max, *seed)?,
        ModelKindSpec::Block { parts } => {
            let gens: Vec<&CMat> = parts
                .iter()
                .map(|p| models.get(p).map(SemigroupModel::generator))
                .collect::<Result<_, _>>()?;
            let d: usize = gens.iter().map(|g| g.nrows()).sum();
            let mut out = CMat::zeros(d, d);
            let mut at = 0;
            for g in gens {
                let k = g.nrows();
                out.view_mut((at, at), (k, k)).copy_from(g);
                at += k;
            }
            out
        }
    })
}

impl Catalog {
    pub fn from_config(cfg: &ExperimentConfig) -> Result<Self, ConfigError> {
        let mut weights = Registry::new("weight");
        let mut symbols = Registry::new("symbol");
        let mut tensors = Registry::new("tensor");
        let mut models = Registry::new("model");
        let mut polynomials = Registry::new("polynomial");

        fn pick<T: Clone>(use_builtin: bool, builtin: Vec<T>, extra: &[T]) -> Vec<T> {
            let mut all = if use_builtin { builtin } else { Vec::new() };
            all.extend_from_slice(extra);
            all
        }
        let b = cfg.builtin_catalog;
        for spec in pick(b, builtin_weights(), &cfg.weights) {
            weights.insert(&spec.id, build_weight(&spec)?)?;
        }
        for spec in pick(b, builtin_symbols(), &cfg.symbols) {
            let s = build_symbol(&spec, &weights, &symbols)?;
            symbols.insert(&spec.id, s)?;
        }
        for spec in pick(b, builtin_tensors(), &cfg.tensors) {
            let pairs = spec
                .pairs
                .iter()
                .map(|(a, b)| Ok((weights.get(a)?.clone(), weights.get(b)?.clone())))
                .collect::<Result<Vec<_>, ConfigError>>()?;
            let t = TensorWeight::new(&spec.id, pairs)
                .map_err(|e| ConfigError::Catalog(format!("tensor `{}`: {e}", spec.id)))?;
            tensors.insert(&spec.id, t)?;
        }
        for spec in pick(b, builtin_models(), &cfg.models) {
            let g = build_generator(&spec, &models)?;
            let m = SemigroupModel::new(&spec.id, g)
                .map_err(|e| ConfigError::Catalog(format!("model `{}`: {e}", spec.id)))?;
            models.insert(&spec.id, m)?;
        }
        for spec in pick(b, builtin_polynomials(), &cfg.polynomials) {
            let p = CirclePoly::new(spec.coeffs.iter().map(|[re, im]| c(*re, *im)).collect())
                .map_err(|e| ConfigError::Catalog(format!("polynomial `{}`: {e}", spec.id)))?;
            if p.is_zero() {
                return Err(ConfigError::Catalog(format!(
                    "polynomial `{}` is zero",
                    spec.id
                )));
            }
            polynomials.insert(&spec.id, p)?;
        }
        Ok(Catalog {
            weights,
            symbols,
            tensors,
            models,
            polynomials,
        })
    }

    /// The built-in entries alone.
    pub fn builtin() -> Self {
        let cfg = ExperimentConfig::new(crate::config::ExperimentKind::Gamma2Table);
        Catalog::from_config(&cfg).expect("built-in catalog is valid")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtin_catalog_is_consistent() {
        let cat = Catalog::builtin();
        assert!(cat.models.len() * cat.tensors.len() >= 20);
        for (id, m) in cat.models.select(&[]).unwrap() {
            assert!(m.is_bounded(), "{id}");
        }
        let c_a: Vec<f64> = cat
            .models
            .select(&[])
            .unwrap()
            .iter()
            .map(|(_, m)| m.c_a().unwrap())
            .collect();
        assert!(c_a.iter().any(|&v| (v - 1.0).abs() < 1e-9));
        assert!(c_a.iter().any(|&v| v > 1.05));
        let cubic = cat.polynomials.get("cubic").unwrap();
        let mut roots = cubic.roots().unwrap();
        roots.sort_by(|a, b| a.norm().total_cmp(&b.norm()));
        assert!((roots[0] - c(0.0, 0.3)).norm() < 1e-9);
        assert!((roots[2] - c(-3.0, 0.0)).norm() < 1e-9);
    }

    #[test]
    fn random_models_are_reproducible_with_the_requested_spectrum() {
        let g = random_stable(4, 50.0, 0.3, 2.0, 5).unwrap();
        assert_eq!(g, random_stable(4, 50.0, 0.3, 2.0, 5).unwrap());
        let m = SemigroupModel::new("r", g).unwrap();
        assert!(m.spectral_abscissa() >= 0.3 - 1e-9);
        assert!(m
            .eigenvalues()
            .iter()
            .all(|l| l.re <= 2.0 + 1e-9 && l.im.abs() <= 3.0 + 1e-9));
        assert!(random_stable(3, 500.0, 0.3, 2.0, 5).is_err());
    }

    #[test]
    fn config_entries_extend_and_reference_the_builtins() {
        let text = r#"
            experiment = "bound-verify"
            [[weights]]
            id = "w"
            terms = [{ coeff = 2.0, decay_re = 3.0 }]
            [[symbols]]
            id = "s"
            kind = "shifted"
            base = "lap-exp"
            eps = 1.0
            [[models]]
            id = "blk"
            kind = "block"
            parts = ["identity-half", "rotation"]
            [[tensors]]
            id = "t"
            pairs = [["w", "exp"]]
        "#;
        let cfg = ExperimentConfig::parse(text).unwrap();
        let cat = Catalog::from_config(&cfg).unwrap();
        assert_eq!(cat.models.get("blk").unwrap().dim(), 4);
        assert!(cat.tensors.get("t").is_ok());
        let dup = format!("{text}\n[[weights]]\nid = \"exp\"\nterms = []\n");
        let cfg = ExperimentConfig::parse(&dup).unwrap();
        assert!(matches!(
            Catalog::from_config(&cfg),
            Err(ConfigError::Catalog(_))
        ));
        let missing = "experiment = \"bound-verify\"\n[[tensors]]\nid = \"x\"\npairs = [[\"nope\", \"exp\"]]\n";
        assert!(Catalog::from_config(&ExperimentConfig::parse(missing).unwrap()).is_err());
    }
}
