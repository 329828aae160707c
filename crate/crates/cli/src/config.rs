//! Config files (TOML) and command-line overrides.

use std::f64::consts::PI;
use std::path::Path;

use anyhow::{bail, Context, Result};
use quasirest::propagator::{KernelConfig, SliceSpec, WINDOW_M};
use quasirest::scaling::{ExperimentSpec, LadderSpec};
use quasirest::symbol::{builtin, SymbolField};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

/// Raw bytes and parsed value of a config file.
pub struct Loaded<T> {
    pub value: T,
    pub sha256: String,
}

pub fn load<T: DeserializeOwned>(path: &Path) -> Result<Loaded<T>> {
    let bytes = std::fs::read(path).with_context(|| format!("reading config {}", path.display()))?;
    let text = String::from_utf8(bytes.clone()).with_context(|| format!("config {} is not UTF-8", path.display()))?;
    // toml reports the line, column and offending field
    let value = toml::from_str(&text).map_err(|e| anyhow::anyhow!("config {}: {e}", path.display()))?;
    Ok(Loaded { value, sha256: crate::store::sha256_hex(&bytes) })
}

/// `doubling:FIRST:COUNT`, `degrees:L1,L2,…`, `dyadic:FIRST:COUNT` or `h:H1,H2,…`.
pub fn parse_ladder(s: &str) -> Result<LadderSpec> {
    let (kind, rest) = s.split_once(':').with_context(|| format!("--ladder {s}: expected KIND:VALUES"))?;
    let pair = |r: &str| -> Result<(u32, usize)> {
        let (a, b) = r.split_once(':').with_context(|| format!("--ladder {s}: expected {kind}:FIRST:COUNT"))?;
        Ok((a.trim().parse().context("--ladder first")?, b.trim().parse().context("--ladder count")?))
    };
    Ok(match kind.trim() {
        "doubling" => {
            let (first, count) = pair(rest)?;
            LadderSpec::DoublingDegrees { first, count }
        }
        "dyadic" => {
            let (first, count) = pair(rest)?;
            LadderSpec::Dyadic { first, count }
        }
        "degrees" => LadderSpec::Degrees {
            values: rest.split(',').map(|t| t.trim().parse().context("--ladder degree")).collect::<Result<_>>()?,
        },
        "h" => LadderSpec::H { values: rest.split(',').map(|t| t.trim().parse().context("--ladder h")).collect::<Result<_>>()? },
        other => bail!("--ladder: unknown kind {other:?} (doubling, degrees, dyadic, h)"),
    })
}

/// Overrides shared by `run` and `kernel`.
#[derive(clap::Args, Clone, Debug, Default)]
pub struct Overrides {
    /// Print the planned rungs and exit without writing anything.
    #[arg(long)]
    pub dry_run: bool,
    /// Replace the tolerance of the config.
    #[arg(long)]
    pub tol: Option<f64>,
    /// Replace the ladder: doubling:FIRST:COUNT, degrees:L,…, dyadic:FIRST:COUNT or h:H,…
    #[arg(long)]
    pub ladder: Option<String>,
    /// Replace the sample or grid-point budget.
    #[arg(long)]
    pub budget: Option<usize>,
}

pub fn apply_experiment(spec: &mut ExperimentSpec, o: &Overrides) -> Result<()> {
    if let Some(t) = o.tol {
        spec.tolerance = t;
    }
    if let Some(l) = &o.ladder {
        spec.ladder = parse_ladder(l)?;
    }
    if let Some(b) = o.budget {
        spec.budget = b;
    }
    Ok(())
}

/// Separations `max, max·ratio, …` paired as `(t, s) = (τ, 0)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Separations {
    pub max: f64,
    pub count: usize,
    pub ratio: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridOptions {
    pub period: Option<f64>,
    pub cutoff_inner: Option<f64>,
    pub cutoff_outer: Option<f64>,
    pub frequency_margin: Option<f64>,
    pub budget_points: Option<usize>,
    pub dt_max: Option<f64>,
}

/// Predicted exponents; each given one is judged within `relative_tolerance`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Expect {
    pub sigma_inf: Option<f64>,
    pub mu_inf: Option<f64>,
    pub sigma_2: Option<f64>,
    pub mu_2: Option<f64>,
    #[serde(default = "default_relative")]
    pub relative_tolerance: f64,
}

fn default_relative() -> f64 {
    0.1
}

fn default_dim() -> usize {
    1
}

fn default_window() -> f64 {
    WINDOW_M
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KernelSpec {
    pub name: String,
    /// Built-in symbol name.
    pub symbol: String,
    #[serde(default = "default_dim")]
    pub dim: usize,
    pub slice: SliceSpec,
    /// `h` ladder (`dyadic` or `h`).
    pub h: LadderSpec,
    #[serde(default)]
    pub pairs: Vec<(f64, f64)>,
    #[serde(default)]
    pub separations: Option<Separations>,
    /// Fit window `M`: only `|t − s| ≥ M h` enters the fit.
    #[serde(default = "default_window")]
    pub window: f64,
    /// Largest separation fitted; defaults to the largest one sampled.
    #[serde(default)]
    pub t_max: Option<f64>,
    #[serde(default)]
    pub grid: GridOptions,
    #[serde(default)]
    pub expect: Option<Expect>,
}

impl KernelSpec {
    pub fn symbol(&self) -> Result<SymbolField> {
        let s = builtin::by_name(&self.symbol, self.dim)
            .with_context(|| format!("symbol: unknown name {:?} (known: {})", self.symbol, builtin::NAMES.join(", ")))?;
        if s.dim() != self.dim {
            bail!("dim: symbol {} lives in dimension {}, config says {}", self.symbol, s.dim(), self.dim);
        }
        Ok(s)
    }

    pub fn h_list(&self) -> Result<Vec<f64>> {
        let hs: Vec<f64> = match &self.h {
            LadderSpec::H { values } => values.clone(),
            LadderSpec::Dyadic { first, count } => (0..*count).map(|j| 0.5f64.powi((*first as usize + j) as i32)).collect(),
            _ => bail!("h: kernel sweeps take a dyadic or explicit h ladder"),
        };
        if hs.is_empty() || hs.iter().any(|h| !(*h > 0.0 && *h < 1.0)) {
            bail!("h: values must lie in (0, 1)");
        }
        Ok(hs)
    }

    pub fn all_pairs(&self) -> Result<Vec<(f64, f64)>> {
        let mut pairs = self.pairs.clone();
        if let Some(s) = &self.separations {
            if !(s.max > 0.0) || !(s.ratio > 0.0 && s.ratio < 1.0) || s.count == 0 {
                bail!("separations: need max > 0, 0 < ratio < 1 and count >= 1");
            }
            pairs.extend((0..s.count).map(|j| (s.max * s.ratio.powi(j as i32), 0.0)));
        }
        if pairs.is_empty() {
            bail!("pairs: give pairs or separations");
        }
        Ok(pairs)
    }

    pub fn t_max(&self) -> Result<f64> {
        Ok(match self.t_max {
            Some(t) => t,
            None => self.all_pairs()?.iter().map(|(t, s)| (t - s).abs()).fold(0.0, f64::max),
        })
    }

    pub fn kernel_config(&self) -> Result<KernelConfig> {
        let g = &self.grid;
        let mut cfg = KernelConfig::new(self.dim, g.period.unwrap_or(2.0 * PI), self.slice.clone(), self.h_list()?, self.all_pairs()?);
        if let Some(v) = g.cutoff_inner {
            cfg.cutoff_inner = v;
        }
        if let Some(v) = g.cutoff_outer {
            cfg.cutoff_outer = v;
        }
        if let Some(v) = g.frequency_margin {
            cfg.frequency_margin = v;
        }
        if let Some(v) = g.budget_points {
            cfg.budget_points = v;
        }
        if let Some(v) = g.dt_max {
            cfg.dt_max = v;
        }
        if !(cfg.cutoff_inner > 0.0 && cfg.cutoff_inner < cfg.cutoff_outer) {
            bail!("grid.cutoff_inner: need 0 < cutoff_inner < cutoff_outer");
        }
        Ok(cfg)
    }

    pub fn apply(&mut self, o: &Overrides) -> Result<()> {
        if let (Some(t), Some(e)) = (o.tol, self.expect.as_mut()) {
            e.relative_tolerance = t;
        }
        if let Some(l) = &o.ladder {
            self.h = parse_ladder(l)?;
        }
        if let Some(b) = o.budget {
            self.grid.budget_points = Some(b);
        }
        Ok(())
    }

    pub fn hash(&self) -> String {
        crate::store::sha256_hex(&serde_json::to_vec(self).expect("spec serialises"))
    }
}
