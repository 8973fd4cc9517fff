use std::f64::consts::PI;

use duetherm_core::model::{RawParams, Topology};
use duetherm_core::pareto::OptimizerSettings;
use serde::{Deserialize, Serialize};

use crate::Profile;

/// Top-level configuration document. Every section is optional; `{}` runs
/// each command with the profile defaults.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    #[serde(default)]
    pub params: RawParams,
    pub response: Option<ResponseConfig>,
    pub poles: Option<PolesConfig>,
    pub power_map: Option<PowerMapConfig>,
    pub power_max: Option<PowerMaxConfig>,
    pub pareto: Option<ParetoConfig>,
    pub entangle: Option<EntangleConfig>,
}

impl Config {
    pub const KEYS: [&'static str; 7] = [
        "params",
        "response",
        "poles",
        "power_map",
        "power_max",
        "pareto",
        "entangle",
    ];
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Range {
    pub min: f64,
    pub max: f64,
    pub points: usize,
}

impl Range {
    pub fn linear(&self) -> Vec<f64> {
        if self.points <= 1 {
            return vec![self.min];
        }
        (0..self.points)
            .map(|i| self.min + (self.max - self.min) * i as f64 / (self.points - 1) as f64)
            .collect()
    }

    pub fn log(&self) -> Vec<f64> {
        if self.points <= 1 {
            return vec![self.min];
        }
        let (lo, hi) = (self.min.ln(), self.max.ln());
        (0..self.points)
            .map(|i| (lo + (hi - lo) * i as f64 / (self.points - 1) as f64).exp())
            .collect()
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ResponseConfig {
    pub omega: Range,
    pub gamma2: Vec<f64>,
}

impl Default for ResponseConfig {
    fn default() -> Self {
        ResponseConfig {
            omega: Range {
                min: 0.0,
                max: 2.0,
                points: 2001,
            },
            gamma2: vec![0.01, 0.1, 1.0, 10.0, 100.0],
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PolesConfig {
    /// Log-spaced damping sweep.
    pub gamma2: Range,
}

impl Default for PolesConfig {
    fn default() -> Self {
        PolesConfig {
            gamma2: Range {
                min: 1e-2,
                max: 1e3,
                points: 101,
            },
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PowerMapConfig {
    pub omega_max: f64,
    pub omega1_max: f64,
    /// `(n_Ω, n_ω₁)`; defaults to the profile grid.
    pub resolution: Option<(usize, usize)>,
    pub phis: Vec<f64>,
}

impl Default for PowerMapConfig {
    fn default() -> Self {
        PowerMapConfig {
            omega_max: 1.2,
            omega1_max: 2.0,
            resolution: None,
            phis: vec![0.0, PI],
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PowerMaxConfig {
    pub gamma2: Range,
    pub omega_b: Vec<f64>,
    pub topologies: Vec<Topology>,
    pub omega_max: f64,
    pub omega1_max: f64,
    pub resolution: Option<(usize, usize)>,
    pub phis: Vec<f64>,
}

impl Default for PowerMaxConfig {
    fn default() -> Self {
        PowerMaxConfig {
            gamma2: Range {
                min: 1e-2,
                max: 1e2,
                points: 17,
            },
            omega_b: vec![0.3, 0.6, 0.9],
            topologies: vec![Topology::Joint, Topology::Independent],
            omega_max: 1.2,
            omega1_max: 2.0,
            resolution: None,
            phis: vec![0.0, PI],
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ParetoConfig {
    pub topologies: Vec<Topology>,
    /// Driven-bath center; the monochromatic max-power `ω₁` when absent.
    pub omega1: Option<f64>,
    pub fundamental: Option<f64>,
    pub n_max: Option<usize>,
    pub norms: (f64, f64),
    pub ladder_points: usize,
    pub ladder_lo_fraction: f64,
    pub ladder_floor_margin: f64,
    pub support_mass: f64,
    pub optimizer: Option<OptimizerSettings>,
}

impl Default for ParetoConfig {
    fn default() -> Self {
        ParetoConfig {
            topologies: vec![Topology::Joint, Topology::Independent],
            omega1: None,
            fundamental: None,
            n_max: None,
            norms: (
                std::f64::consts::FRAC_1_SQRT_2,
                std::f64::consts::FRAC_1_SQRT_2,
            ),
            ladder_points: 24,
            ladder_lo_fraction: 0.02,
            ladder_floor_margin: 1.1,
            support_mass: 0.99,
            optimizer: None,
        }
    }
}

impl ParetoConfig {
    pub fn resolved(&self, profile: Profile) -> (f64, usize, OptimizerSettings) {
        let (fundamental, n_max, opt) = match profile {
            Profile::Desk => (1e-3, 500, OptimizerSettings::desk()),
            Profile::Paper => (1e-4, 5000, OptimizerSettings::default()),
        };
        (
            self.fundamental.unwrap_or(fundamental),
            self.n_max.unwrap_or(n_max),
            self.optimizer.unwrap_or(opt),
        )
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EntangleConfig {
    pub t2: Range,
    pub omega_b: Vec<f64>,
    pub gamma2: Vec<f64>,
    /// `ω_B` sweep for the critical-temperature curves.
    pub critical_omega_b: Range,
    pub critical_gamma2: Vec<f64>,
    pub works: WorksConfig,
}

impl Default for EntangleConfig {
    fn default() -> Self {
        EntangleConfig {
            t2: Range {
                min: 0.01,
                max: 1.0,
                points: 100,
            },
            omega_b: vec![0.6, 0.8],
            gamma2: vec![0.1, 5.0, 100.0],
            critical_omega_b: Range {
                min: 0.1,
                max: 0.95,
                points: 18,
            },
            critical_gamma2: vec![5.0, 20.0, 100.0],
            works: WorksConfig::default(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct WorksConfig {
    pub gamma2: f64,
    pub gamma1: f64,
    pub omega1_star: f64,
}

impl Default for WorksConfig {
    fn default() -> Self {
        WorksConfig {
            gamma2: 1e4,
            gamma1: 1e-3,
            omega1_star: 0.4,
        }
    }
}
