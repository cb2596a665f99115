//! Run configuration. Every number in the TOML file is a decimal string.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use cyclicspec::models::{
    make_bilateral_shift, make_diag_unitary, make_direct_sum, make_exp_selfadjoint, make_scaled_unitary,
};
use cyclicspec::scalar::{c, C};
use cyclicspec::{Kernel, Model};
use serde::Deserialize;

use crate::CliError;

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ModelSpec {
    DiagUnitary {
        /// `[re, im]` pairs on the unit circle.
        phases: Vec<[String; 2]>,
        weights: Vec<String>,
    },
    BilateralShift {
        half_width: String,
    },
    ScaledUnitary {
        q: [String; 2],
        base: Box<ModelSpec>,
    },
    ExpSelfadjoint {
        b_values: Vec<String>,
        #[serde(default)]
        scale: Option<String>,
    },
    DirectSum {
        first: Box<ModelSpec>,
        second: Box<ModelSpec>,
    },
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KernelSpec {
    pub name: String,
    #[serde(default)]
    pub value: Option<[String; 2]>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    preset: Option<String>,
    model: Option<ModelSpec>,
    n: Option<Vec<String>>,
    level: Option<String>,
    levels: Option<Vec<String>>,
    eps: Option<String>,
    kernel: Option<KernelSpec>,
    /// Dirac points as `[re, im]`; the first one is `alpha`.
    points: Option<Vec<[String; 2]>>,
    /// Polynomial terms `[i, j, re, im]` of a density `g`.
    density: Option<Vec<[String; 4]>>,
    tolerances: Option<BTreeMap<String, String>>,
    out: Option<String>,
    seed: Option<String>,
}

/// A fully resolved configuration.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub preset: String,
    pub model: ModelSpec,
    pub n_list: Vec<usize>,
    pub level: usize,
    pub levels: Vec<usize>,
    pub eps: f64,
    pub kernel: KernelSpec,
    pub points: Vec<C<f64>>,
    pub density: Vec<(usize, usize, C<f64>)>,
    pub tolerances: BTreeMap<String, f64>,
    pub out: PathBuf,
    pub seed: u64,
}

fn num<T: FromStr>(field: &str, s: &str) -> Result<T, CliError> {
    s.trim()
        .parse()
        .map_err(|_| CliError::Config(format!("{field}: cannot parse {s:?}")))
}

fn cplx(field: &str, p: &[String; 2]) -> Result<C<f64>, CliError> {
    Ok(c(num(field, &p[0])?, num(field, &p[1])?))
}

fn strs(v: &[&str]) -> Vec<String> {
    v.iter().map(|s| s.to_string()).collect()
}

fn pair(a: &str, b: &str) -> [String; 2] {
    [a.to_string(), b.to_string()]
}

fn preset(name: &str) -> Result<RawConfig, CliError> {
    let third = "0.33333333333333333";
    let raw = match name {
        "diag3" => RawConfig {
            model: Some(ModelSpec::DiagUnitary {
                phases: vec![pair("1", "0"), pair("0", "1"), pair("-1", "0")],
                weights: strs(&[third, third, third]),
            }),
            n: Some(strs(&["1"])),
            level: Some("2".into()),
            kernel: Some(KernelSpec {
                name: "xy_conj".into(),
                value: None,
            }),
            points: Some(vec![pair("1", "0"), pair("0", "1")]),
            ..Default::default()
        },
        "sadj3" => RawConfig {
            model: Some(ModelSpec::ExpSelfadjoint {
                b_values: strs(&["0.1", "-0.05", "0.02"]),
                scale: None,
            }),
            n: Some(strs(&["1"])),
            level: Some("2".into()),
            ..Default::default()
        },
        "shift" => RawConfig {
            model: Some(ModelSpec::BilateralShift {
                half_width: "601".into(),
            }),
            n: Some(strs(&["50", "100", "200", "300"])),
            level: Some("3".into()),
            kernel: Some(KernelSpec {
                name: "exp_re".into(),
                value: None,
            }),
            points: Some(vec![
                pair("1", "0"),
                pair("0.70710678118654752", "0.70710678118654752"),
                pair("0", "1"),
            ]),
            ..Default::default()
        },
        other => return Err(CliError::Config(format!("unknown preset {other:?}"))),
    };
    Ok(RawConfig {
        preset: Some(name.to_string()),
        ..raw
    })
}

/// Fields of `over` win over `base`.
fn merge(base: RawConfig, over: RawConfig) -> RawConfig {
    RawConfig {
        preset: over.preset.or(base.preset),
        model: over.model.or(base.model),
        n: over.n.or(base.n),
        level: over.level.or(base.level),
        levels: over.levels.or(base.levels),
        eps: over.eps.or(base.eps),
        kernel: over.kernel.or(base.kernel),
        points: over.points.or(base.points),
        density: over.density.or(base.density),
        tolerances: over.tolerances.or(base.tolerances),
        out: over.out.or(base.out),
        seed: over.seed.or(base.seed),
    }
}

impl RunConfig {
    pub fn preset(name: &str) -> Result<Self, CliError> {
        Self::resolve(preset(name)?)
    }

    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        let raw: RawConfig = toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        let base = match &raw.preset {
            Some(p) => preset(p)?,
            None if raw.model.is_none() => preset("diag3")?,
            None => RawConfig::default(),
        };
        Self::resolve(merge(base, raw))
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    fn resolve(raw: RawConfig) -> Result<Self, CliError> {
        let model = raw.model.ok_or_else(|| CliError::Config("missing [model]".into()))?;
        let n_list = raw
            .n
            .unwrap_or_default()
            .iter()
            .map(|s| num::<usize>("n", s))
            .collect::<Result<Vec<_>, _>>()?;
        if n_list.windows(2).any(|w| w[0] >= w[1]) {
            return Err(CliError::Config("n must be strictly ascending".into()));
        }
        let level = raw.level.as_deref().map_or(Ok(2), |s| num("level", s))?;
        let levels = match raw.levels {
            Some(v) => v.iter().map(|s| num("levels", s)).collect::<Result<Vec<_>, _>>()?,
            None => (1..=level).collect(),
        };
        let points = raw
            .points
            .unwrap_or_default()
            .iter()
            .map(|p| cplx("points", p))
            .collect::<Result<Vec<_>, _>>()?;
        let density = raw
            .density
            .unwrap_or_default()
            .iter()
            .map(|t| Ok((num("density", &t[0])?, num("density", &t[1])?, c(num("density", &t[2])?, num("density", &t[3])?))))
            .collect::<Result<Vec<_>, CliError>>()?;
        let tolerances = raw
            .tolerances
            .unwrap_or_default()
            .iter()
            .map(|(k, v)| Ok((k.clone(), num(k, v)?)))
            .collect::<Result<BTreeMap<_, _>, CliError>>()?;
        let cfg = Self {
            preset: raw.preset.unwrap_or_else(|| "custom".into()),
            model,
            n_list,
            level,
            levels,
            eps: raw.eps.as_deref().map_or(Ok(1e-3), |s| num("eps", s))?,
            kernel: raw.kernel.unwrap_or(KernelSpec {
                name: "xy_conj".into(),
                value: None,
            }),
            points,
            density,
            tolerances,
            out: PathBuf::from(raw.out.unwrap_or_else(|| "out".into())),
            seed: raw.seed.as_deref().map_or(Ok(0), |s| num("seed", s))?,
        };
        let model = cfg.build_model()?;
        if let Some(h) = model.max_exact_n() {
            if let Some(n) = cfg.n_list.iter().find(|n| **n > h) {
                return Err(CliError::Config(format!("N = {n} exceeds the exact horizon {h} of the model")));
            }
        }
        cfg.build_kernel(&model)?;
        Ok(cfg)
    }

    pub fn tol(&self, key: &str, default: f64) -> f64 {
        self.tolerances.get(key).copied().unwrap_or(default)
    }

    pub fn build_model(&self) -> Result<Model, CliError> {
        build(&self.model)
    }

    /// The configured kernel, with bounds valid on the disc holding every
    /// eigenvalue of `A_N`.
    pub fn build_kernel(&self, model: &Model) -> Result<Kernel, CliError> {
        let radius = model.op_norm().max(model.r_a().unwrap_or(1.0).sqrt());
        let value = match &self.kernel.value {
            Some(v) => cplx("kernel.value", v)?,
            None => c(1.0, 0.0),
        };
        Kernel::by_name(&self.kernel.name, radius, value).map_err(|e| CliError::Config(e.to_string()))
    }
}

fn build(spec: &ModelSpec) -> Result<Model, CliError> {
    let bad = |e: cyclicspec::Error| CliError::Config(e.to_string());
    match spec {
        ModelSpec::DiagUnitary { phases, weights } => {
            let p = phases.iter().map(|x| cplx("phases", x)).collect::<Result<Vec<_>, _>>()?;
            let w = weights.iter().map(|x| num("weights", x)).collect::<Result<Vec<f64>, _>>()?;
            // decimal thirds do not sum to one exactly
            let total: f64 = w.iter().sum();
            let w: Vec<f64> = w.iter().map(|x| x / total).collect();
            make_diag_unitary(&p, &w).map_err(bad)
        }
        ModelSpec::BilateralShift { half_width } => make_bilateral_shift(num("half_width", half_width)?).map_err(bad),
        ModelSpec::ScaledUnitary { q, base } => make_scaled_unitary(cplx("q", q)?, &build(base)?).map_err(bad),
        ModelSpec::ExpSelfadjoint { b_values, scale } => {
            let b = b_values.iter().map(|x| num("b_values", x)).collect::<Result<Vec<f64>, _>>()?;
            let s = scale.as_deref().map_or(Ok(1.0), |x| num("scale", x))?;
            make_exp_selfadjoint(&b, s).map_err(bad)
        }
        ModelSpec::DirectSum { first, second } => make_direct_sum(&build(first)?, &build(second)?).map_err(bad),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_resolve() {
        for p in ["diag3", "sadj3", "shift"] {
            let cfg = RunConfig::preset(p).unwrap();
            assert!(!cfg.n_list.is_empty());
        }
        assert!(RunConfig::preset("nope").is_err());
    }

    #[test]
    fn overrides_and_errors() {
        let cfg = RunConfig::from_toml("preset = \"shift\"\nn = [\"5\", \"9\"]\nseed = \"42\"\n").unwrap();
        assert_eq!(cfg.n_list, vec![5, 9]);
        assert_eq!(cfg.seed, 42);
        assert!(RunConfig::from_toml("n = [\"3\", \"2\"]").is_err());
        assert!(RunConfig::from_toml("preset = \"shift\"\nn = [\"400\"]").is_err());
        assert!(RunConfig::from_toml("level = 3").is_err());
        assert!(RunConfig::from_toml("[kernel]\nname = \"gauss\"").is_err());
        let custom = "[model]\nkind = \"scaled_unitary\"\nq = [\"0\", \"2\"]\n[model.base]\nkind = \"bilateral_shift\"\nhalf_width = \"9\"\n";
        let cfg = RunConfig::from_toml(custom).unwrap();
        assert_eq!(cfg.build_model().unwrap().r_a(), Some(4.0));
    }
}
