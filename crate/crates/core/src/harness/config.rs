//! TOML-loadable experiment configuration.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::acquisition::AcquisitionConfig;
use crate::certificates::CertificateConfig;
use crate::downstream::TaskConfig;
use crate::error::{Error, Result};
use crate::systems::{Dynamics, SystemId, SystemSpec};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DuffingConfig {
    pub delta: f64,
    pub alpha: f64,
    pub beta: f64,
    pub input_bound: f64,
    pub init_box: Vec<(f64, f64)>,
    pub degree: usize,
}

impl Default for DuffingConfig {
    fn default() -> Self {
        Self {
            delta: 0.5,
            alpha: -1.0,
            beta: 1.0,
            input_bound: 2.0,
            init_box: vec![(-2.0, 2.0), (-2.0, 2.0)],
            degree: 3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VdpConfig {
    pub mu: f64,
    pub input_bound: f64,
    pub init_box: Vec<(f64, f64)>,
    pub degree: usize,
}

impl Default for VdpConfig {
    fn default() -> Self {
        Self {
            mu: 1.0,
            input_bound: 2.0,
            init_box: vec![(-2.0, 2.0), (-2.0, 2.0)],
            degree: 3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LorenzConfig {
    pub sigma: f64,
    pub rho: f64,
    pub beta: f64,
    pub input_bound: f64,
    pub init_box: Vec<(f64, f64)>,
    pub degree: usize,
}

impl Default for LorenzConfig {
    fn default() -> Self {
        Self {
            sigma: 10.0,
            rho: 28.0,
            beta: 8.0 / 3.0,
            input_bound: 20.0,
            init_box: vec![(-20.0, 20.0), (-25.0, 25.0), (5.0, 45.0)],
            degree: 2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SystemsConfig {
    pub duffing: DuffingConfig,
    pub vdp: VdpConfig,
    pub lorenz: LorenzConfig,
}

impl SystemsConfig {
    pub fn spec(&self, id: SystemId) -> Result<SystemSpec> {
        let (dynamics, bound, init_box) = match id {
            SystemId::Duffing => {
                let c = &self.duffing;
                let d = Dynamics::Duffing {
                    delta: c.delta,
                    alpha: c.alpha,
                    beta: c.beta,
                };
                (d, c.input_bound, c.init_box.clone())
            }
            SystemId::Vdp => (
                Dynamics::VanDerPol { mu: self.vdp.mu },
                self.vdp.input_bound,
                self.vdp.init_box.clone(),
            ),
            SystemId::Lorenz => {
                let c = &self.lorenz;
                let d = Dynamics::Lorenz {
                    sigma: c.sigma,
                    rho: c.rho,
                    beta: c.beta,
                };
                (d, c.input_bound, c.init_box.clone())
            }
            SystemId::Linear => {
                return Err(Error::Config(
                    "the linear test system is not configurable".into(),
                ))
            }
        };
        SystemSpec::from_dynamics(id, dynamics, bound, init_box)
            .map_err(|e| Error::Config(e.to_string()))
    }

    pub fn degree(&self, id: SystemId) -> usize {
        match id {
            SystemId::Duffing => self.duffing.degree,
            SystemId::Vdp => self.vdp.degree,
            SystemId::Lorenz => self.lorenz.degree,
            SystemId::Linear => 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BootstrapConfig {
    pub n_boot: usize,
    pub seed: u64,
    /// Two-sided coverage of the percentile interval.
    pub level: f64,
}

impl Default for BootstrapConfig {
    fn default() -> Self {
        Self {
            n_boot: 10_000,
            seed: 12345,
            level: 0.95,
        }
    }
}

/// Per-preset grid overrides; unset fields keep the preset defaults.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PresetOverride {
    pub systems: Option<Vec<String>>,
    pub methods: Option<Vec<String>>,
    pub seeds: Option<Vec<u64>>,
    pub budgets: Option<Vec<usize>>,
    pub degrees: Option<Vec<usize>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HarnessConfig {
    /// Ridge parameter of the identification fit; 0 is plain least squares.
    pub ridge_lambda: f64,
    pub systems: SystemsConfig,
    pub certificates: CertificateConfig,
    pub acquisition: AcquisitionConfig,
    pub tasks: TaskConfig,
    pub bootstrap: BootstrapConfig,
    pub presets: BTreeMap<String, PresetOverride>,
}

impl Default for HarnessConfig {
    fn default() -> Self {
        Self {
            ridge_lambda: 0.0,
            systems: SystemsConfig::default(),
            certificates: CertificateConfig::default(),
            acquisition: AcquisitionConfig::default(),
            tasks: TaskConfig::default(),
            bootstrap: BootstrapConfig::default(),
            presets: BTreeMap::new(),
        }
    }
}

impl HarnessConfig {
    pub fn from_toml_str(s: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(s).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_toml_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.ridge_lambda >= 0.0) || !self.ridge_lambda.is_finite() {
            return Err(Error::Config(
                "ridge_lambda must be finite and nonnegative".into(),
            ));
        }
        for id in SystemId::BENCHMARKS {
            self.systems.spec(id)?;
            if self.systems.degree(id) == 0 {
                return Err(Error::Config(format!(
                    "{id}: dictionary degree must be at least 1"
                )));
            }
        }
        self.certificates
            .validate()
            .map_err(|e| Error::Config(e.to_string()))?;
        self.acquisition.validate()?;
        self.tasks.validate()?;
        let b = &self.bootstrap;
        if b.n_boot == 0 || !(b.level > 0.0 && b.level < 1.0) {
            return Err(Error::Config(
                "bootstrap needs n_boot >= 1 and level in (0, 1)".into(),
            ));
        }
        Ok(())
    }
}
