//! Physical parameters, bath spectral densities and thermal factors.
//!
//! Units: ω_A = 1, m = 1, ħ = k_B = 1. Powers are reported as
//! `P̃ = P ω_A² / d₁` and entropy rates as `σ̃ = σ / ω_A`.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Half-width below which `coth` switches to its Laurent series.
const COTH_SERIES_CUTOFF: f64 = 1e-3;

/// Bath connection pattern of the two oscillators.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Topology {
    /// Both oscillators share the driven bath and the static bath.
    Joint,
    /// Each oscillator has private copies of both baths.
    Independent,
}

impl fmt::Display for Topology {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Topology::Joint => write!(f, "joint"),
            Topology::Independent => write!(f, "independent"),
        }
    }
}

/// Full physical configuration of the engine.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EngineParams {
    pub omega_a: f64,
    pub omega_b: f64,
    pub mass: f64,
    /// Ohmic damping strength of the static bath.
    pub gamma2: f64,
    /// Drude cutoff of the static bath; may be `f64::INFINITY`.
    pub omega_c: f64,
    pub t1: f64,
    pub t2: f64,
    /// Lorentzian amplitude, width and center of the driven bath.
    pub d1: f64,
    pub gamma1: f64,
    pub omega1: f64,
    pub topology: Topology,
}

impl Default for EngineParams {
    fn default() -> Self {
        Self {
            omega_a: 1.0,
            omega_b: 0.6,
            mass: 1.0,
            gamma2: 0.1,
            omega_c: 1e3,
            t1: 0.6,
            t2: 0.4,
            d1: 1.0,
            gamma1: 0.01,
            omega1: 1.2,
            topology: Topology::Joint,
        }
    }
}

/// One violated parameter invariant.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Violation {
    Resonant {
        omega_a: f64,
        omega_b: f64,
    },
    NonPositive {
        field: &'static str,
        value: f64,
    },
    NotFinite {
        field: &'static str,
    },
    /// The off-resonant ordering `0 < ω_B < ω_A` is required.
    Ordering {
        omega_a: f64,
        omega_b: f64,
    },
    CutoffTooLow {
        omega_c: f64,
        required: f64,
    },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::Resonant { omega_a, omega_b } => {
                write!(
                    f,
                    "resonant oscillators (omega_a = {omega_a}, omega_b = {omega_b})"
                )
            }
            Violation::NonPositive { field, value } => {
                write!(f, "{field} must be strictly positive (got {value})")
            }
            Violation::NotFinite { field } => write!(f, "{field} must be finite"),
            Violation::Ordering { omega_a, omega_b } => {
                write!(f, "omega_b = {omega_b} must be below omega_a = {omega_a}")
            }
            Violation::CutoffTooLow { omega_c, required } => {
                write!(f, "omega_c = {omega_c} must be at least {required}")
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ParamError {
    #[error("invalid engine parameters: {}", join_violations(.0))]
    Invalid(Vec<Violation>),
}

impl ParamError {
    pub fn violations(&self) -> &[Violation] {
        match self {
            ParamError::Invalid(v) => v,
        }
    }
}

fn join_violations(v: &[Violation]) -> String {
    v.iter()
        .map(|x| x.to_string())
        .collect::<Vec<_>>()
        .join("; ")
}

/// Parameter record as read from a configuration document. Missing keys
/// fall back to the moderate-damping reference configuration.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawParams {
    pub omega_b: Option<f64>,
    pub gamma2: Option<f64>,
    pub omega_c: Option<f64>,
    pub t1: Option<f64>,
    pub t2: Option<f64>,
    pub d1: Option<f64>,
    pub gamma1: Option<f64>,
    pub omega1: Option<f64>,
    pub topology: Option<Topology>,
}

impl RawParams {
    pub const KEYS: [&'static str; 9] = [
        "omega_b", "gamma2", "omega_c", "t1", "t2", "d1", "gamma1", "omega1", "topology",
    ];
}

/// Resolve defaults and check every invariant, reporting all violations at once.
pub fn validate_params(raw: &RawParams) -> Result<EngineParams, ParamError> {
    let d = EngineParams::default();
    let gamma2 = raw.gamma2.unwrap_or(d.gamma2);
    // The default cutoff follows the damping so that it stays the largest scale.
    let omega_c = raw
        .omega_c
        .unwrap_or_else(|| d.omega_c.max(100.0 * gamma2.abs()));
    EngineParams {
        omega_b: raw.omega_b.unwrap_or(d.omega_b),
        gamma2,
        omega_c,
        t1: raw.t1.unwrap_or(d.t1),
        t2: raw.t2.unwrap_or(d.t2),
        d1: raw.d1.unwrap_or(d.d1),
        gamma1: raw.gamma1.unwrap_or(d.gamma1),
        omega1: raw.omega1.unwrap_or(d.omega1),
        topology: raw.topology.unwrap_or(d.topology),
        ..d
    }
    .validate()
}

impl EngineParams {
    pub fn validate(self) -> Result<Self, ParamError> {
        let mut violations = Vec::new();
        let positive: [(&'static str, f64); 10] = [
            ("omega_a", self.omega_a),
            ("omega_b", self.omega_b),
            ("mass", self.mass),
            ("gamma2", self.gamma2),
            ("omega_c", self.omega_c),
            ("t1", self.t1),
            ("t2", self.t2),
            ("d1", self.d1),
            ("gamma1", self.gamma1),
            ("omega1", self.omega1),
        ];
        for (field, value) in positive {
            if value.is_nan() || (value.is_infinite() && field != "omega_c") {
                violations.push(Violation::NotFinite { field });
            } else if value <= 0.0 {
                violations.push(Violation::NonPositive { field, value });
            }
        }
        if (self.omega_a - self.omega_b).abs() <= 1e-9 {
            violations.push(Violation::Resonant {
                omega_a: self.omega_a,
                omega_b: self.omega_b,
            });
        } else if self.omega_b > self.omega_a {
            violations.push(Violation::Ordering {
                omega_a: self.omega_a,
                omega_b: self.omega_b,
            });
        }
        if self.omega_c.is_finite() {
            let required = 100.0 * self.omega_a.max(self.gamma2);
            if self.omega_c < required {
                violations.push(Violation::CutoffTooLow {
                    omega_c: self.omega_c,
                    required,
                });
            }
        }
        if violations.is_empty() {
            Ok(self)
        } else {
            Err(ParamError::Invalid(violations))
        }
    }

    /// Lorentzian spectral density of the driven bath.
    pub fn bath1(&self) -> SpectralDensity {
        SpectralDensity::Lorentzian {
            amplitude: self.d1,
            mass: self.mass,
            width: self.gamma1,
            center: self.omega1,
        }
    }

    /// Ohmic–Drude spectral density of the static bath.
    pub fn bath2(&self) -> SpectralDensity {
        SpectralDensity::OhmicDrude {
            mass: self.mass,
            gamma: self.gamma2,
            cutoff: self.omega_c,
        }
    }

    /// Carnot efficiency `1 − T₂/T₁`.
    pub fn carnot(&self) -> f64 {
        1.0 - self.t2 / self.t1
    }

    /// Power in the dimensionless units used for reporting.
    pub fn power_tilde(&self, power: f64) -> f64 {
        power * self.omega_a * self.omega_a / self.d1
    }

    pub fn sigma_tilde(&self, sigma: f64) -> f64 {
        sigma / self.omega_a
    }

    pub fn with_topology(self, topology: Topology) -> Self {
        Self { topology, ..self }
    }
}

/// Bath spectral density `J(ω)`, extended as an odd function of ω.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SpectralDensity {
    /// `J(ω) = m ω γ / (1 + ω²/ω_c²)`.
    OhmicDrude { mass: f64, gamma: f64, cutoff: f64 },
    /// `J(ω) = d m γ ω / ((ω² − ω₀²)² + γ² ω²)`.
    Lorentzian {
        amplitude: f64,
        mass: f64,
        width: f64,
        center: f64,
    },
}

impl SpectralDensity {
    /// `J(ω) / ω`, an even function that stays finite at ω = 0.
    pub fn over_omega(&self, omega: f64) -> f64 {
        match *self {
            SpectralDensity::OhmicDrude {
                mass,
                gamma,
                cutoff,
            } => {
                let r = omega / cutoff;
                mass * gamma / (1.0 + r * r)
            }
            SpectralDensity::Lorentzian {
                amplitude,
                mass,
                width,
                center,
            } => {
                let w2 = omega * omega;
                let det = w2 - center * center;
                amplitude * mass * width / (det * det + width * width * w2)
            }
        }
    }

    pub fn value(&self, omega: f64) -> f64 {
        omega * self.over_omega(omega)
    }
}

/// `J(ω)` for any real ω.
pub fn spectral_density(sd: &SpectralDensity, omega: f64) -> f64 {
    sd.value(omega)
}

/// Hyperbolic cotangent with the Laurent series near the pole.
pub fn coth(x: f64) -> f64 {
    if x.abs() < COTH_SERIES_CUTOFF {
        let x2 = x * x;
        1.0 / x + x / 3.0 - x * x2 / 45.0
    } else {
        1.0 / x.tanh()
    }
}

/// `ω coth(ω / 2T)`, even in ω and equal to `2T` at ω = 0.
pub fn x_coth(omega: f64, t: f64) -> f64 {
    let x = omega / (2.0 * t);
    if x.abs() < COTH_SERIES_CUTOFF {
        let x2 = x * x;
        2.0 * t * (1.0 + x2 / 3.0 - x2 * x2 / 45.0)
    } else {
        omega / x.tanh()
    }
}

/// `N(ω, Ω) = coth((ω+Ω)/2T₁) − coth(ω/2T₂)`.
///
/// Diverges like `−2T₂/ω` at ω → 0 when T₁ and Ω leave the first term
/// finite; integrands must supply a factor vanishing linearly there (see
/// [`omega_thermal_factor`]).
pub fn thermal_factor(omega: f64, shift: f64, t1: f64, t2: f64) -> f64 {
    coth((omega + shift) / (2.0 * t1)) - coth(omega / (2.0 * t2))
}

/// `ω · N(ω, Ω)`, finite and continuous across ω = 0.
pub fn omega_thermal_factor(omega: f64, shift: f64, t1: f64, t2: f64) -> f64 {
    let first = if shift == 0.0 {
        x_coth(omega, t1)
    } else {
        omega * coth((omega + shift) / (2.0 * t1))
    };
    first - x_coth(omega, t2)
}
