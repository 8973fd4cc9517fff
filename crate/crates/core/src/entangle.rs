//! Steady-state Gaussian correlations of the two oscillators under the static
//! bath, and the entanglement measures built on them.
//!
//! Position and momentum sectors decouple, so each is described by a 2×2
//! block. Both are integrated in the rotated combinations
//!
//! ```text
//! s = AA + BB + 2AB    d = AA + BB − 2AB    e = AA − BB
//! ```
//!
//! whose integrands carry the factors `(2ω² − a − b)²`, `(a − b)²` and
//! `(a − b)(2ω² − a − b)` explicitly. Under strong damping `d` is tiny next
//! to `s`, and forming determinants from `AA`, `BB`, `AB` directly would lose
//! it to cancellation.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::integrate::{
    dedup_breakpoints, integrate_line, Breakpoint, IntegrationError, Tolerance,
};
use crate::model::{coth, x_coth, EngineParams, Topology};
use crate::response::{detuning, hybrid_frequency, normal_modes};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EntangleError {
    #[error(transparent)]
    Integration(#[from] IntegrationError),
    #[error("momentum correlators need a finite Drude cutoff")]
    InfiniteCutoff,
    #[error("covariance is not physical: discriminant {discriminant}")]
    NonPhysical { discriminant: f64 },
    #[error("nu_tilde(T) does not cross 1/2 in ({lo}, {hi}]")]
    NoRoot { lo: f64, hi: f64 },
    #[error("work differences must be positive (got {delta_w_0}, {delta_w_pi})")]
    NonPositiveWork { delta_w_0: f64, delta_w_pi: f64 },
}

/// Sector moments `[s, d, e]` for positions and momenta.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SectorMoments {
    pub x: [f64; 3],
    pub p: [f64; 3],
}

impl SectorMoments {
    /// Rotates `[AA, AB, BB]` entries into `[s, d, e]`.
    pub fn from_entries(x: [f64; 3], p: [f64; 3]) -> Self {
        let rot = |[aa, ab, bb]: [f64; 3]| [aa + bb + 2.0 * ab, aa + bb - 2.0 * ab, aa - bb];
        SectorMoments {
            x: rot(x),
            p: rot(p),
        }
    }

    /// Back to `[AA, AB, BB]`.
    pub fn entries(v: [f64; 3]) -> [f64; 3] {
        let [s, d, e] = v;
        [
            (s + d) / 4.0 + e / 2.0,
            (s - d) / 4.0,
            (s + d) / 4.0 - e / 2.0,
        ]
    }
}

fn sector_det([s, d, e]: [f64; 3]) -> f64 {
    (s * d - e * e) / 4.0
}

/// Two-mode Gaussian state with vanishing position–momentum correlations.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GaussianState {
    /// Covariance in the order `(x_A, p_A, x_B, p_B)`.
    pub cov: [[f64; 4]; 4],
    pub moments: SectorMoments,
    pub nu_tilde: f64,
    pub log_negativity: f64,
    pub cutoff: f64,
}

impl GaussianState {
    fn from_moments(moments: SectorMoments, cutoff: f64) -> Self {
        let [xa, xab, xb] = SectorMoments::entries(moments.x);
        let [pa, pab, pb] = SectorMoments::entries(moments.p);
        let cov = [
            [xa, 0.0, xab, 0.0],
            [0.0, pa, 0.0, pab],
            [xab, 0.0, xb, 0.0],
            [0.0, pab, 0.0, pb],
        ];
        GaussianState {
            cov,
            moments,
            nu_tilde: f64::NAN,
            log_negativity: f64::NAN,
            cutoff,
        }
    }

    /// State from a covariance in the `(x_A, p_A, x_B, p_B)` order; the x–p
    /// entries are ignored.
    pub fn from_cov(cov: [[f64; 4]; 4], cutoff: f64) -> Self {
        let moments = SectorMoments::from_entries(
            [cov[0][0], cov[0][2], cov[2][2]],
            [cov[1][1], cov[1][3], cov[3][3]],
        );
        GaussianState {
            cov,
            ..Self::from_moments(moments, cutoff)
        }
    }

    /// `det Σ`, the product of the two sector determinants.
    pub fn det(&self) -> f64 {
        sector_det(self.moments.x) * sector_det(self.moments.p)
    }

    /// `det α + det β − 2 det γ` for the blocks of `Σ`.
    pub fn seralian(&self) -> f64 {
        let (x, p) = (self.moments.x, self.moments.p);
        (x[0] * p[1] + x[1] * p[0]) / 4.0 + x[2] * p[2] / 2.0
    }
}

/// `E_n = max(0, −ln 2ν̃)`.
pub fn log_negativity(nu_tilde: f64) -> f64 {
    (-(2.0 * nu_tilde).ln()).max(0.0)
}

/// Integrands of the sector moments per unit `γ′/|D|² · ω coth(ω/2T₂)`.
fn weights(p: &EngineParams, omega: f64) -> [f64; 6] {
    let a = p.omega_a * p.omega_a;
    let b = p.omega_b * p.omega_b;
    let r = omega / p.omega_c;
    let g_re = p.gamma2 / (1.0 + r * r);
    let g_im = g_re * r;
    let w2 = omega * omega;
    let xa = w2 - a;
    let xb = w2 - b;
    let thermal = x_coth(omega, p.t2);
    let [s, d, e] = match p.topology {
        Topology::Joint => {
            let sum = 2.0 * w2 - a - b;
            let k = omega * sum;
            let dr = xa * xb - k * g_im;
            let di = k * g_re;
            let f = g_re / (dr * dr + di * di) * thermal;
            if !f.is_finite() {
                return [0.0; 6];
            }
            [f * sum * sum, f * (a - b) * (a - b), f * (a - b) * sum]
        }
        Topology::Independent => {
            let wi = omega * g_re;
            let ra = xa - omega * g_im;
            let rb = xb - omega * g_im;
            let aa = g_re / (ra * ra + wi * wi) * thermal;
            let bb = g_re / (rb * rb + wi * wi) * thermal;
            [aa + bb, aa + bb, aa - bb]
        }
    };
    let cx = 1.0 / (2.0 * PI * p.mass);
    let cp = p.mass * w2 / (2.0 * PI);
    [cx * s, cx * d, cx * e, cp * s, cp * d, cp * e]
}

fn covariance_breakpoints(p: &EngineParams) -> Vec<Breakpoint> {
    let mut bps: Vec<Breakpoint> = normal_modes(p)
        .zeros
        .iter()
        .map(|z| Breakpoint::new(z.re, z.im.abs()))
        .collect();
    bps.push(Breakpoint::new(0.0, p.t2));
    bps.push(Breakpoint::new(0.0, p.omega_c));
    dedup_breakpoints(bps)
}

/// Symmetrized steady-state correlators under the Drude-regularized static
/// bath. `nu_tilde` and `log_negativity` are left unset.
pub fn covariance(p: &EngineParams) -> Result<GaussianState, EntangleError> {
    if !p.omega_c.is_finite() {
        return Err(EntangleError::InfiniteCutoff);
    }
    let f = |w: f64| weights(p, w);
    let r = integrate_line(&f, &covariance_breakpoints(p), Tolerance::default())?;
    let v = r.value;
    Ok(GaussianState::from_moments(
        SectorMoments {
            x: [v[0], v[1], v[2]],
            p: [v[3], v[4], v[5]],
        },
        p.omega_c,
    ))
}

/// Smallest symplectic eigenvalue of the partial transpose and the
/// logarithmic negativity.
pub fn symplectic_nu(state: &GaussianState) -> Result<(f64, f64), EntangleError> {
    let delta = state.seralian();
    let det = state.det();
    let disc = delta * delta - 4.0 * det;
    if disc < -1e-10 * (delta * delta).max(1.0) {
        return Err(EntangleError::NonPhysical { discriminant: disc });
    }
    // below the rounding level of Δ² the root would only amplify noise
    let root = if disc <= 16.0 * f64::EPSILON * delta * delta {
        0.0
    } else {
        disc.sqrt()
    };
    // 2ν̃² = Δ − √(Δ² − 4 det Σ), rationalized
    let nu2 = 2.0 * det / (delta + root);
    let nu = nu2.sqrt();
    Ok((nu, log_negativity(nu)))
}

/// Covariance followed by [`symplectic_nu`], with the results stored.
pub fn gaussian_state(p: &EngineParams) -> Result<GaussianState, EntangleError> {
    let mut s = covariance(p)?;
    let (nu, en) = symplectic_nu(&s)?;
    s.nu_tilde = nu;
    s.log_negativity = en;
    Ok(s)
}

/// Strong-damping closed form for `ν̃`.
pub fn nu_strong_closed(p: &EngineParams) -> f64 {
    let h = hybrid_frequency(p);
    let d4 = detuning(p).powi(4);
    let ab = h.powi(4) - d4;
    let c = coth(h / (2.0 * p.t2));
    let num = h.powi(3) * p.t2 * c * c / (2.0 * ab);
    let den = c + 2.0 * p.t2 * d4 / (h * ab);
    (num / den).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CriticalMode {
    Exact,
    StrongLimit,
}

pub const T_LOW: f64 = 1e-4;
pub const T_TOL: f64 = 1e-6;

/// Temperature `T₂` at which `ν̃ = 1/2`, by bisection on `(T_LOW, 2ω_A]`.
pub fn critical_temperature(p: &EngineParams, mode: CriticalMode) -> Result<f64, EntangleError> {
    let nu = |t: f64| -> Result<f64, EntangleError> {
        let q = EngineParams { t2: t, ..*p };
        match mode {
            CriticalMode::Exact => Ok(gaussian_state(&q)?.nu_tilde),
            CriticalMode::StrongLimit => Ok(nu_strong_closed(&q)),
        }
    };
    let (mut lo, mut hi) = (T_LOW, 2.0 * p.omega_a);
    if nu(lo)? >= 0.5 || nu(hi)? < 0.5 {
        return Err(EntangleError::NoRoot { lo, hi });
    }
    while hi - lo > T_TOL {
        let mid = 0.5 * (lo + hi);
        if nu(mid)? < 0.5 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Critical temperatures for each parameter set, in parallel.
pub fn critical_temperatures(
    ps: &[EngineParams],
    mode: CriticalMode,
) -> Vec<Result<f64, EntangleError>> {
    ps.par_iter()
        .map(|p| critical_temperature(p, mode))
        .collect()
}

/// `ν̃²` from the two work differences.
pub fn nu_from_works(
    delta_w_0: f64,
    delta_w_pi: f64,
    t2: f64,
    hybrid: f64,
) -> Result<f64, EntangleError> {
    if !(delta_w_0 > 0.0 && delta_w_pi > 0.0) {
        return Err(EntangleError::NonPositiveWork {
            delta_w_0,
            delta_w_pi,
        });
    }
    let c = coth(hybrid / (2.0 * t2));
    Ok(c * c / 4.0 * delta_w_0 / delta_w_pi)
}
