//! Run configuration, read from TOML or JSON.

use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

use crate::collocation::{build_grid, Discretization};
use crate::error::{Error, Result};
use crate::kernels::{KernelOptions, Physics};
use crate::soe::SoeParams;
use crate::sources::Wavepacket;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
#[derive(Default)]
pub struct RunConfig {
    pub physics: Physics,
    pub discretization: DiscretizationConfig,
    pub scenario: ScenarioConfig,
    pub soe: SoeParams,
    pub kernels: KernelConfig,
    pub outputs: OutputConfig,
    pub converge: ConvergeConfig,
    pub bench: BenchConfig,
    pub p_search: PSearchConfig,
}


#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DiscretizationConfig {
    #[serde(alias = "T")]
    pub t_final: f64,
    #[serde(alias = "N")]
    pub n_steps: usize,
    pub q: usize,
}

impl Default for DiscretizationConfig {
    fn default() -> Self {
        Self {
            t_final: 500.0,
            n_steps: 1000,
            q: 4,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScenarioKind {
    #[default]
    ExcitedAtom,
    Wavepacket,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    pub kind: ScenarioKind,
    pub wavepacket: Wavepacket,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct KernelConfig {
    pub table_tol: f64,
    pub initial_intervals: usize,
}

impl Default for KernelConfig {
    fn default() -> Self {
        let k = KernelOptions::default();
        Self {
            table_tol: k.table_tol,
            initial_intervals: k.initial_intervals,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    pub trajectory: String,
    pub manifest: String,
    pub field: Option<FieldSpec>,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            trajectory: "trajectory.csv".into(),
            manifest: "manifest.json".into(),
            field: None,
        }
    }
}

/// Photon field output grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FieldSpec {
    pub path: String,
    pub probability: String,
    /// Half-width of the symmetric `x` grid.
    pub radius: f64,
    pub points: usize,
    /// Output times; the final time when empty.
    pub times: Vec<f64>,
}

impl Default for FieldSpec {
    fn default() -> Self {
        Self {
            path: "field.csv".into(),
            probability: "probability.csv".into(),
            radius: 200.0,
            points: 8001,
            times: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConvergeConfig {
    /// Measurement time; the final time when absent.
    pub t_star: Option<f64>,
    pub n_list: Vec<usize>,
    pub reference_n: usize,
    /// Errors at or below this are treated as the accuracy floor and left out of the fit.
    pub floor: f64,
}

impl Default for ConvergeConfig {
    fn default() -> Self {
        Self {
            t_star: None,
            n_list: vec![125, 250, 500, 1000, 2000],
            reference_n: 8000,
            floor: 1e-10,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BenchConfig {
    pub n_list: Vec<usize>,
    pub repeats: usize,
    /// Keep the base step `T/N` and let the horizon grow as `N dt`, so the local window
    /// stays the same size across the list. Otherwise `T` is held and `dt` shrinks.
    pub fixed_step: bool,
}

impl Default for BenchConfig {
    fn default() -> Self {
        Self {
            n_list: vec![250, 500, 1000, 2000],
            repeats: 3,
            fixed_step: true,
        }
    }
}

/// Doubling of `p` until `P_a(T)` settles.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PSearchConfig {
    pub enabled: bool,
    pub threshold: f64,
    pub p_max: usize,
}

impl Default for PSearchConfig {
    fn default() -> Self {
        Self {
            enabled: false,
            threshold: 1e-8,
            p_max: 64,
        }
    }
}

fn positive(path: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::config(path, format!("must be positive and finite, got {v}")))
    }
}

impl RunConfig {
    /// Parse by extension (`.toml` or `.json`). A run manifest is accepted too: its
    /// `config` member is read.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::config(path.display().to_string(), format!("cannot read: {e}")))?;
        let is_json = path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json"));
        let cfg = if is_json {
            Self::from_json(&text)?
        } else {
            Self::from_toml(&text)?
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let de = toml::Deserializer::new(text);
        serde_path_to_error::deserialize(de).map_err(|e| Error::config(e.path().to_string(), e.inner().message()))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let value: serde_json::Value =
            serde_json::from_str(text).map_err(|e| Error::config("<root>", e.to_string()))?;
        let inner = match value.get("config") {
            Some(c) if value.get("manifest_version").is_some() => c.clone(),
            _ => value,
        };
        serde_path_to_error::deserialize(inner).map_err(|e| Error::config(e.path().to_string(), e.inner().to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        let ph = &self.physics;
        positive("physics.c", ph.c)?;
        positive("physics.sigma", ph.sigma)?;
        if !ph.omega.is_finite() {
            return Err(Error::config("physics.omega", "must be finite"));
        }
        if !(ph.g >= 0.0 && ph.g.is_finite()) {
            return Err(Error::config("physics.g", format!("must be non-negative, got {}", ph.g)));
        }
        if ph.p == 0 {
            return Err(Error::config("physics.p", "must be at least 1"));
        }
        let d = &self.discretization;
        positive("discretization.t_final", d.t_final)?;
        if d.n_steps == 0 {
            return Err(Error::config("discretization.n_steps", "must be at least 1"));
        }
        if d.q == 0 || d.q > 32 {
            return Err(Error::config("discretization.q", format!("must be in 1..=32, got {}", d.q)));
        }
        let limit = ph.sigma * self.soe.t_max / (std::f64::consts::SQRT_2 * ph.c);
        if d.t_final > limit {
            return Err(Error::config(
                "discretization.t_final",
                format!("exceeds sigma t_max / (sqrt 2 c) = {limit}; raise soe.t_max"),
            ));
        }
        positive("soe.t_max", self.soe.t_max)?;
        positive("soe.tol", self.soe.tol)?;
        if self.soe.delta >= self.soe.t_max {
            return Err(Error::config("soe.delta", "must be below soe.t_max"));
        }
        if self.scenario.kind == ScenarioKind::Wavepacket {
            self.scenario
                .wavepacket
                .validate()
                .map_err(|e| Error::config("scenario.wavepacket", e.to_string()))?;
        }
        if let Some(f) = &self.outputs.field {
            positive("outputs.field.radius", f.radius)?;
            if f.points < 2 {
                return Err(Error::config("outputs.field.points", "need at least 2 points"));
            }
            if let Some(t) = f.times.iter().find(|t| !(**t >= 0.0 && **t <= d.t_final)) {
                return Err(Error::config("outputs.field.times", format!("{t} lies outside [0, T]")));
            }
        }
        let c = &self.converge;
        if let Some(t) = c.t_star {
            positive("converge.t_star", t)?;
        }
        if let Some(&n) = c.n_list.iter().find(|&&n| n == 0 || n >= c.reference_n) {
            return Err(Error::config(
                "converge.n_list",
                format!("entry {n} must be positive and below reference_n = {}", c.reference_n),
            ));
        }
        if self.bench.n_list.contains(&0) {
            return Err(Error::config("bench.n_list", "step counts must be positive"));
        }
        if self.p_search.enabled && self.p_search.p_max < ph.p {
            return Err(Error::config("p_search.p_max", "must be at least physics.p"));
        }
        Ok(())
    }

    pub fn grid(&self) -> Result<Discretization> {
        let d = &self.discretization;
        build_grid(d.t_final, d.n_steps, d.q)
    }

    pub fn kernel_options(&self, cache: Option<PathBuf>) -> KernelOptions {
        KernelOptions {
            delta: self.soe.delta,
            soe: self.soe,
            table_tol: self.kernels.table_tol,
            initial_intervals: self.kernels.initial_intervals,
            cache_dir: cache,
        }
    }

    /// The pulse with the translation check relaxed as configured.
    pub fn wavepacket(&self) -> Option<Wavepacket> {
        (self.scenario.kind == ScenarioKind::Wavepacket).then_some(self.scenario.wavepacket)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_the_example_parameters() {
        let c = RunConfig::default();
        assert_eq!((c.physics.c, c.physics.omega, c.physics.sigma), (1.0, 1.0, 0.1));
        assert_eq!(c.physics.g, 0.2);
        assert_eq!(c.scenario.wavepacket, Wavepacket::new(-80.0, 12.0, 1.0));
        assert_eq!(c.soe.t_max, 1e7);
        c.validate().unwrap();
    }

    #[test]
    fn toml_with_aliases() {
        let c = RunConfig::from_toml(
            r#"
            [physics]
            g = 0.3
            p = 3
            [discretization]
            T = 50.0
            N = 120
            [scenario]
            kind = "wavepacket"
            wavepacket = { xi0 = 1.6 }
            "#,
        )
        .unwrap();
        assert_eq!(c.physics.g, 0.3);
        let e = RunConfig::from_toml("[physics]\ng = \"x\"").unwrap_err();
        assert!(matches!(&e, Error::Config { path, .. } if path == "physics.g"), "{e}");
        assert_eq!(c.physics.sigma, 0.1);
        assert_eq!(c.discretization.n_steps, 120);
        assert_eq!(c.scenario.wavepacket.x0, -80.0);
        assert_eq!(c.scenario.wavepacket.xi0, 1.6);
        c.validate().unwrap();
    }

    #[test]
    fn errors_name_the_field() {
        let e = RunConfig::from_json(r#"{"physics": {"g": "big"}}"#).unwrap_err();
        assert!(matches!(&e, Error::Config { path, .. } if path == "physics.g"), "{e}");
        let e = RunConfig::from_json(r#"{"physics": {"gee": 1}}"#).unwrap_err();
        assert!(e.is_config());
        let mut c = RunConfig::default();
        c.discretization.q = 0;
        assert!(matches!(c.validate(), Err(Error::Config { path, .. }) if path == "discretization.q"));
        let mut c = RunConfig::default();
        c.scenario.kind = ScenarioKind::Wavepacket;
        c.scenario.wavepacket.xi0 = 0.4;
        assert!(matches!(c.validate(), Err(Error::Config { path, .. }) if path == "scenario.wavepacket"));
        c.scenario.wavepacket.translation_tolerance = Some(1e-4);
        c.validate().unwrap();
        let mut c = RunConfig::default();
        c.discretization.t_final = 1e7;
        assert!(c.validate().is_err());
    }

    #[test]
    fn manifest_wrapper_is_unwrapped() {
        let mut c = RunConfig::default();
        c.physics.p = 5;
        let text = serde_json::json!({"manifest_version": 1, "config": c}).to_string();
        assert_eq!(RunConfig::from_json(&text).unwrap(), c);
        let round = RunConfig::from_json(&serde_json::to_string(&c).unwrap()).unwrap();
        assert_eq!(round, c);
    }
}
