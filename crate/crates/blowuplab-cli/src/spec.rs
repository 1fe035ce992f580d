//! Experiment spec files: a TOML (or JSON) document with `[solver]`,
//! `[bounds]`, `[checks]`, and `[output]` sections. Everything is
//! defaulted, so a minimal spec is just the fields being varied.

use anyhow::{bail, Context, Result};
use blowuplab_core::verify::{default_tolerance, CheckSettings, CHECK_NAMES};
use blowuplab_core::{BoundParams, SolverConfig};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

#[derive(Debug, Clone, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
pub struct ChecksSpec {
    /// Check names to run; empty means every registered check.
    pub enabled: Vec<String>,
    /// Per-check tolerance overrides.
    pub tolerances: BTreeMap<String, f64>,
    pub settings: CheckSettings,
}

impl ChecksSpec {
    pub fn effective_names(&self) -> Vec<String> {
        if self.enabled.is_empty() {
            CHECK_NAMES.iter().map(|s| s.to_string()).collect()
        } else {
            self.enabled.clone()
        }
    }

    pub fn tolerance_for(&self, name: &str) -> f64 {
        self.tolerances
            .get(name)
            .copied()
            .unwrap_or_else(|| default_tolerance(name))
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputSpec {
    pub dir: PathBuf,
}

impl Default for OutputSpec {
    fn default() -> Self {
        OutputSpec {
            dir: PathBuf::from("out"),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentSpec {
    pub solver: SolverConfig,
    pub bounds: BoundParams,
    pub checks: ChecksSpec,
    pub output: OutputSpec,
}

impl ExperimentSpec {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("cannot read spec file {}", path.display()))?;
        let spec: ExperimentSpec = if path.extension().and_then(|e| e.to_str()) == Some("json") {
            serde_json::from_str(&text)
                .with_context(|| format!("invalid JSON spec {}", path.display()))?
        } else {
            toml::from_str(&text)
                .with_context(|| format!("invalid TOML spec {}", path.display()))?
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        self.solver
            .validate()
            .context("solver section is invalid")?;
        self.bounds
            .validate()
            .context("bounds section is invalid")?;
        for name in &self.checks.enabled {
            if !CHECK_NAMES.contains(&name.as_str()) {
                bail!(
                    "unknown check {name:?}; known checks: {}",
                    CHECK_NAMES.join(", ")
                );
            }
        }
        for name in self.checks.tolerances.keys() {
            if !CHECK_NAMES.contains(&name.as_str()) {
                bail!("tolerance override for unknown check {name:?}");
            }
        }
        Ok(())
    }
}

/// A sweep spec enumerates value grids for a fixed set of axes; the cell
/// set is their cartesian product.
#[derive(Debug, Clone, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
pub struct SweepSpec {
    pub sweep: SweepAxes,
}

#[derive(Debug, Clone, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
pub struct SweepAxes {
    /// Weight constant of the bounds section.
    pub bounds_a: Vec<f64>,
    pub m_stop: Vec<f64>,
    pub delta_m: Vec<f64>,
    pub h_min: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepCell {
    pub bounds_a: Option<f64>,
    pub m_stop: Option<f64>,
    pub delta_m: Option<f64>,
    pub h_min: Option<f64>,
}

impl SweepCell {
    /// Stable directory/report key, e.g. `a=3_mstop=20`.
    pub fn key(&self) -> String {
        let mut parts = Vec::new();
        if let Some(a) = self.bounds_a {
            parts.push(format!("a={a}"));
        }
        if let Some(m) = self.m_stop {
            parts.push(format!("mstop={m}"));
        }
        if let Some(d) = self.delta_m {
            parts.push(format!("dm={d}"));
        }
        if let Some(h) = self.h_min {
            parts.push(format!("hmin={h}"));
        }
        if parts.is_empty() {
            "base".into()
        } else {
            parts.join("_")
        }
    }

    pub fn apply(&self, spec: &ExperimentSpec) -> ExperimentSpec {
        let mut out = spec.clone();
        if let Some(a) = self.bounds_a {
            out.bounds.a = a;
            out.bounds.c_lemma = 2.0 * (a + 1.0);
        }
        if let Some(m) = self.m_stop {
            out.solver.m_stop = m;
        }
        if let Some(d) = self.delta_m {
            out.solver.delta_m = d;
        }
        if let Some(h) = self.h_min {
            out.solver.grid.h_min = h;
        }
        out
    }
}

impl SweepSpec {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("cannot read sweep file {}", path.display()))?;
        let spec: SweepSpec = if path.extension().and_then(|e| e.to_str()) == Some("json") {
            serde_json::from_str(&text)?
        } else {
            toml::from_str(&text)?
        };
        Ok(spec)
    }

    pub fn cells(&self) -> Vec<SweepCell> {
        fn axis(v: &[f64]) -> Vec<Option<f64>> {
            if v.is_empty() {
                vec![None]
            } else {
                v.iter().map(|&x| Some(x)).collect()
            }
        }
        let mut out = Vec::new();
        for &a in &axis(&self.sweep.bounds_a) {
            for &m in &axis(&self.sweep.m_stop) {
                for &d in &axis(&self.sweep.delta_m) {
                    for &h in &axis(&self.sweep.h_min) {
                        out.push(SweepCell {
                            bounds_a: a,
                            m_stop: m,
                            delta_m: d,
                            h_min: h,
                        });
                    }
                }
            }
        }
        out
    }
}
