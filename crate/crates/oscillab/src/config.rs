//! Experiment configuration: a single TOML file with key = value sections.
//! Validation reports the offending key path so the driver can exit with a
//! schema error naming it.

use crate::dynamics::Scheme;
use crate::geometry::{
    validate_epsilons, BoundaryProfile, DomainFamily, PowerLaw, ProfileKind, ProfileSign,
    CHART_BOTTOM, CHART_LEFT, CHART_RIGHT, CHART_TOP,
};
use crate::nonlinear::Nonlinearity;
use crate::sweeps::{GammaMode, SweepConfig};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("config parse error: {0}")]
    Parse(String),
    #[error("{path}: {reason}")]
    Invalid { path: String, reason: String },
}

fn invalid(path: &str, reason: impl Into<String>) -> ConfigError {
    ConfigError::Invalid {
        path: path.to_string(),
        reason: reason.into(),
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub domain: DomainSection,
    pub profile: ProfileSection,
    pub epsilons: Vec<f64>,
    #[serde(default)]
    pub mesh: MeshSection,
    #[serde(default)]
    pub nonlinearity: NonlinearitySection,
    #[serde(default)]
    pub time: TimeSection,
    #[serde(default)]
    pub gamma: GammaSection,
    #[serde(default)]
    pub sweeps: SweepsSection,
    #[serde(default)]
    pub thresholds: ThresholdsSection,
    #[serde(default)]
    pub output: OutputSection,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DomainSection {
    pub oscillating_edges: Vec<String>,
    pub core_margin: f64,
}

impl Default for DomainSection {
    fn default() -> Self {
        DomainSection {
            oscillating_edges: vec!["top".into()],
            core_margin: 0.5,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProfileSection {
    pub kind: String,
    #[serde(default)]
    pub slope: Option<f64>,
    #[serde(default)]
    pub amplitude_coeff: Option<f64>,
    #[serde(default)]
    pub wavenumber: Option<f64>,
    #[serde(default)]
    pub samples: Option<Vec<(f64, f64)>>,
    #[serde(default = "default_sign")]
    pub sign: String,
    #[serde(default = "PowerLaw::of_epsilon")]
    pub amplitude_law: PowerLaw,
    #[serde(default = "PowerLaw::of_epsilon")]
    pub period_law: PowerLaw,
}

fn default_sign() -> String {
    "exterior".into()
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeshSection {
    pub h: f64,
    pub refine_check: bool,
    pub curve_quadrature: bool,
}

impl Default for MeshSection {
    fn default() -> Self {
        MeshSection {
            h: 1.0 / 32.0,
            refine_check: true,
            curve_quadrature: true,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NonlinearitySpec {
    pub name: String,
    #[serde(default)]
    pub params: Vec<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NonlinearitySection {
    pub f: NonlinearitySpec,
    pub g: NonlinearitySpec,
    #[serde(default)]
    pub cutoff: Option<f64>,
}

impl Default for NonlinearitySection {
    fn default() -> Self {
        NonlinearitySection {
            f: NonlinearitySpec {
                name: "zero".into(),
                params: vec![],
            },
            g: NonlinearitySpec {
                name: "zero".into(),
                params: vec![],
            },
            cutoff: None,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeSection {
    pub dt: f64,
    pub t_end: f64,
    pub scheme: Scheme,
}

impl Default for TimeSection {
    fn default() -> Self {
        TimeSection {
            dt: 1e-3,
            t_end: 1.0,
            scheme: Scheme::ImexEuler,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GammaSection {
    pub mode: GammaMode,
    pub windows: usize,
}

impl Default for GammaSection {
    fn default() -> Self {
        GammaSection {
            mode: GammaMode::ClosedForm,
            windows: 8,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepsSection {
    pub run: Vec<String>,
    /// constant initial state for the trajectory sweep
    pub initial_condition: f64,
}

impl Default for SweepsSection {
    fn default() -> Self {
        SweepsSection {
            run: vec!["resolvent".into(), "nonlinearity".into()],
            initial_condition: 1.0,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ThresholdsSection {
    pub delta_hyp: f64,
    pub merge_radius: f64,
    pub noise_floor: f64,
    pub decay_ratio: f64,
    pub attractor_threshold: f64,
}

impl Default for ThresholdsSection {
    fn default() -> Self {
        ThresholdsSection {
            delta_hyp: 1e-3,
            merge_radius: 1e-4,
            noise_floor: 1e-8,
            decay_ratio: 0.25,
            attractor_threshold: 0.1,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    pub dir: String,
    pub seed: u64,
    /// 0 = available parallelism
    pub threads: usize,
}

impl Default for OutputSection {
    fn default() -> Self {
        OutputSection {
            dir: "out".into(),
            seed: 42,
            threads: 0,
        }
    }
}

pub const KNOWN_SWEEPS: [&str; 6] = [
    "resolvent",
    "nonlinearity",
    "spectral",
    "equilibria",
    "trajectory",
    "attractor",
];

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        let cfg: ExperimentConfig =
            toml::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        validate_epsilons(&self.epsilons)
            .map_err(|_| invalid("epsilons", "must be strictly decreasing values in (0, 1)"))?;
        if !(self.mesh.h > 0.0 && self.mesh.h < 0.5) {
            return Err(invalid("mesh.h", "must lie in (0, 0.5)"));
        }
        if !(self.time.dt > 0.0) {
            return Err(invalid("time.dt", "must be positive"));
        }
        if self.time.t_end < self.time.dt {
            return Err(invalid("time.t_end", "must be at least one time step"));
        }
        if !(self.domain.core_margin > 0.0 && self.domain.core_margin < 1.0) {
            return Err(invalid("domain.core_margin", "must lie in (0, 1)"));
        }
        for e in &self.domain.oscillating_edges {
            edge_index(e).ok_or_else(|| {
                invalid(
                    "domain.oscillating_edges",
                    format!("unknown edge '{e}' (expected bottom/right/top/left)"),
                )
            })?;
        }
        match self.profile.kind.as_str() {
            "flat" => {}
            "sawtooth" => {
                if self.profile.slope.is_none() {
                    return Err(invalid("profile.slope", "required for kind = sawtooth"));
                }
            }
            "sine" => {}
            "table" => {
                let s = self
                    .profile
                    .samples
                    .as_ref()
                    .ok_or_else(|| invalid("profile.samples", "required for kind = table"))?;
                if s.len() < 2 {
                    return Err(invalid("profile.samples", "need at least two samples"));
                }
            }
            other => {
                return Err(invalid(
                    "profile.kind",
                    format!("unknown kind '{other}' (expected flat/sawtooth/sine/table)"),
                ))
            }
        }
        match self.profile.sign.as_str() {
            "exterior" | "signed" => {}
            other => {
                return Err(invalid(
                    "profile.sign",
                    format!("unknown sign '{other}' (expected exterior/signed)"),
                ))
            }
        }
        Nonlinearity::from_registry(&self.nonlinearity.f.name, &self.nonlinearity.f.params)
            .map_err(|e| invalid("nonlinearity.f", e.to_string()))?;
        Nonlinearity::from_registry(&self.nonlinearity.g.name, &self.nonlinearity.g.params)
            .map_err(|e| invalid("nonlinearity.g", e.to_string()))?;
        if let Some(u) = self.nonlinearity.cutoff {
            if !(u > 0.0) {
                return Err(invalid("nonlinearity.cutoff", "must be positive"));
            }
        }
        if self.gamma.windows == 0 {
            return Err(invalid("gamma.windows", "must be at least 1"));
        }
        for s in &self.sweeps.run {
            if !KNOWN_SWEEPS.contains(&s.as_str()) {
                return Err(invalid(
                    "sweeps.run",
                    format!("unknown sweep '{s}' (expected one of {KNOWN_SWEEPS:?})"),
                ));
            }
        }
        Ok(())
    }

    pub fn profile(&self) -> BoundaryProfile {
        let kind = match self.profile.kind.as_str() {
            "flat" => ProfileKind::Flat,
            "sawtooth" => ProfileKind::Sawtooth {
                slope: self.profile.slope.unwrap_or(1.0),
            },
            "sine" => ProfileKind::Sine {
                amplitude_coeff: self.profile.amplitude_coeff.unwrap_or(1.0),
                wavenumber: self.profile.wavenumber.unwrap_or(1.0),
            },
            "table" => ProfileKind::Table {
                samples: self.profile.samples.clone().unwrap_or_default(),
            },
            _ => unreachable!("validated"),
        };
        BoundaryProfile {
            kind,
            amplitude_law: self.profile.amplitude_law,
            period_law: self.profile.period_law,
            sign: if self.profile.sign == "signed" {
                ProfileSign::Signed
            } else {
                ProfileSign::Exterior
            },
        }
    }

    pub fn family(&self) -> Result<DomainFamily, ConfigError> {
        let edges: Vec<usize> = self
            .domain
            .oscillating_edges
            .iter()
            .map(|e| edge_index(e).unwrap())
            .collect();
        DomainFamily::unit_square(
            &edges,
            self.profile(),
            self.epsilons.clone(),
            self.domain.core_margin,
        )
        .map_err(|e| invalid("domain", e.to_string()))
    }

    pub fn nonlinearities(&self) -> Result<(Nonlinearity, Nonlinearity), ConfigError> {
        let mut f =
            Nonlinearity::from_registry(&self.nonlinearity.f.name, &self.nonlinearity.f.params)
                .map_err(|e| invalid("nonlinearity.f", e.to_string()))?;
        let mut g =
            Nonlinearity::from_registry(&self.nonlinearity.g.name, &self.nonlinearity.g.params)
                .map_err(|e| invalid("nonlinearity.g", e.to_string()))?;
        if let Some(u) = self.nonlinearity.cutoff {
            f = f
                .with_cutoff(u)
                .map_err(|e| invalid("nonlinearity.cutoff", e.to_string()))?;
            g = g
                .with_cutoff(u)
                .map_err(|e| invalid("nonlinearity.cutoff", e.to_string()))?;
        }
        Ok((f, g))
    }

    pub fn sweep_config(&self) -> Result<SweepConfig, ConfigError> {
        let family = self.family()?;
        let (f, g) = self.nonlinearities()?;
        let mut cfg = SweepConfig::new(family, f, g);
        cfg.h = self.mesh.h;
        cfg.refine_check = self.mesh.refine_check;
        cfg.curve_quadrature = self.mesh.curve_quadrature;
        cfg.gamma_mode = self.gamma.mode;
        cfg.gamma_windows = self.gamma.windows;
        cfg.dt = self.time.dt;
        cfg.t_end = self.time.t_end;
        cfg.scheme = self.time.scheme;
        cfg.seed = self.output.seed;
        cfg.delta_hyp = self.thresholds.delta_hyp;
        cfg.merge_radius = self.thresholds.merge_radius;
        cfg.noise_floor = self.thresholds.noise_floor;
        cfg.decay_ratio = self.thresholds.decay_ratio;
        cfg.attractor_threshold = self.thresholds.attractor_threshold;
        Ok(cfg)
    }
}

fn edge_index(name: &str) -> Option<usize> {
    match name {
        "bottom" => Some(CHART_BOTTOM),
        "right" => Some(CHART_RIGHT),
        "top" => Some(CHART_TOP),
        "left" => Some(CHART_LEFT),
        _ => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
        epsilons = [0.2, 0.1, 0.05]
        [profile]
        kind = "sawtooth"
        slope = 1.0
    "#;

    #[test]
    fn minimal_config_parses_with_defaults() {
        let cfg = ExperimentConfig::from_toml(MINIMAL).unwrap();
        assert_eq!(cfg.mesh.h, 1.0 / 32.0);
        assert_eq!(cfg.output.seed, 42);
        let fam = cfg.family().unwrap();
        assert_eq!(fam.oscillating_charts(), vec![CHART_TOP]);
        let sc = cfg.sweep_config().unwrap();
        assert_eq!(sc.gamma_windows, 8);
    }

    #[test]
    fn increasing_epsilons_name_the_key() {
        let text = MINIMAL.replace("[0.2, 0.1, 0.05]", "[0.05, 0.1, 0.2]");
        match ExperimentConfig::from_toml(&text) {
            Err(ConfigError::Invalid { path, .. }) => assert_eq!(path, "epsilons"),
            other => panic!("expected invalid epsilons, got {other:?}"),
        }
    }

    #[test]
    fn unknown_sweep_and_edge_are_rejected() {
        let text = format!("{MINIMAL}\n[sweeps]\nrun = [\"warp\"]\ninitial_condition = 1.0\n");
        match ExperimentConfig::from_toml(&text) {
            Err(ConfigError::Invalid { path, .. }) => assert_eq!(path, "sweeps.run"),
            other => panic!("{other:?}"),
        }
        let text = format!(
            "{}\n[domain]\noscillating_edges = [\"north\"]\ncore_margin = 0.5\n",
            MINIMAL
        );
        match ExperimentConfig::from_toml(&text) {
            Err(ConfigError::Invalid { path, .. }) => {
                assert_eq!(path, "domain.oscillating_edges")
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn nonlinearity_registry_is_checked() {
        let text = format!(
            "{MINIMAL}\n[nonlinearity]\nf = {{ name = \"mystery\" }}\ng = {{ name = \"zero\" }}\n"
        );
        match ExperimentConfig::from_toml(&text) {
            Err(ConfigError::Invalid { path, .. }) => assert_eq!(path, "nonlinearity.f"),
            other => panic!("{other:?}"),
        }
    }
}
