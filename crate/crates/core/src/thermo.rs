//! Average power, heat currents and entropy production of the driven machine.
//!
//! For a drive with Fourier coefficients `g_n` every flow is a sum over
//! harmonics of a frequency integral of
//!
//! ```text
//! J₁(ω + nΩ) N(ω, nΩ) gₙ† χ″(ω) gₙ
//! ```
//!
//! weighted by `−nΩ` (power), `ω + nΩ` (hot current) or `−ω` (cold current).
//! The `±n` terms are equal, so only `n ≥ 1` is integrated and doubled.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::integrate::{breakpoints_with_modes, integrate_line, IntegrationError, Tolerance};
use crate::model::{x_coth, EngineParams, SpectralDensity, Topology};
use crate::response::{
    chi_im_over_omega, detuning, hybrid_frequency, normal_modes, DampingKernel, NormalModes,
};

/// Real Fourier coefficients of the two couplings, `g_{−n} = g_n`, `g₀ = 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DriveSpectrum {
    pub fundamental: f64,
    /// `coeffs[l][k]` is `g_{k+1}^(l)` for `l ∈ {A, B}`.
    pub coeffs: [Vec<f64>; 2],
    /// Relative phase of oscillator B: `g_n^(B) → g_n^(B) e^{−inφ}`.
    #[serde(default)]
    pub phase: f64,
}

impl DriveSpectrum {
    pub fn new(fundamental: f64, a: Vec<f64>, b: Vec<f64>) -> Self {
        let n = a.len().max(b.len());
        let mut a = a;
        let mut b = b;
        a.resize(n, 0.0);
        b.resize(n, 0.0);
        DriveSpectrum {
            fundamental,
            coeffs: [a, b],
            phase: 0.0,
        }
    }

    pub fn zero(fundamental: f64, n_max: usize) -> Self {
        Self::new(fundamental, vec![0.0; n_max], vec![0.0; n_max])
    }

    /// `g_{±1}^(A) = 1/2`, `g_{±1}^(B) = e^{∓iφ}/2`.
    pub fn monochromatic(omega: f64, phi: f64) -> Self {
        DriveSpectrum {
            phase: phi,
            ..Self::new(omega, vec![0.5], vec![0.5])
        }
    }

    pub fn n_max(&self) -> usize {
        self.coeffs[0].len()
    }

    /// Squared norm of oscillator `l`, counting both `±n`.
    pub fn norm_squared(&self, l: usize) -> f64 {
        2.0 * self.coeffs[l].iter().map(|g| g * g).sum::<f64>()
    }

    /// `[|g^A|², Re(g^A* g^B), |g^B|²]` for harmonic `n ≥ 1`.
    pub fn weights(&self, n: usize) -> [f64; 3] {
        let a = self.coeffs[0][n - 1];
        let b = self.coeffs[1][n - 1];
        [a * a, a * b * (n as f64 * self.phase).cos(), b * b]
    }

    pub fn scaled(&self, c: f64) -> Self {
        DriveSpectrum {
            fundamental: self.fundamental,
            coeffs: [
                self.coeffs[0].iter().map(|g| c * g).collect(),
                self.coeffs[1].iter().map(|g| c * g).collect(),
            ],
            phase: self.phase,
        }
    }
}

/// `ω · J₁(ω + shift) · N(ω, shift)`, finite at both removable poles.
#[inline]
pub(crate) fn filtered_kernel(
    p: &EngineParams,
    bath1: &SpectralDensity,
    w: f64,
    shift: f64,
) -> f64 {
    let u = w + shift;
    bath1.over_omega(u) * x_coth(u, p.t1) * w - bath1.value(u) * x_coth(w, p.t2)
}

#[inline]
fn contract(c: [f64; 3], wts: [f64; 3]) -> f64 {
    wts[0] * c[0] + 2.0 * wts[1] * c[1] + wts[2] * c[2]
}

/// Power, both heat currents and the entropy production rate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Flows {
    pub power: f64,
    pub j1: f64,
    pub j2: f64,
    /// From its own pointwise non-negative integrand.
    pub sigma: f64,
    pub panels: usize,
}

fn harmonic_flows(
    p: &EngineParams,
    modes: &NormalModes,
    bath1: &SpectralDensity,
    shift: f64,
    wts: [f64; 3],
    tol: Tolerance,
) -> Result<Flows, IntegrationError> {
    let bps = breakpoints_with_modes(p, modes, shift);
    let (it1, it2) = (1.0 / p.t1, 1.0 / p.t2);
    let f = |w: f64| {
        let c = chi_im_over_omega(p, w, DampingKernel::Ohmic);
        let base = contract(c, wts) * filtered_kernel(p, bath1, w, shift);
        let u = w + shift;
        [base, u * base, base * (w * it2 - u * it1)]
    };
    let main = integrate_line(&f, &bps, tol)?;
    let g = |w: f64| {
        let c = chi_im_over_omega(p, w, DampingKernel::Ohmic);
        [-w * contract(c, wts) * filtered_kernel(p, bath1, w, shift)]
    };
    let cold = integrate_line(&g, &bps, tol)?;
    let pre = 1.0 / (PI * p.mass);
    Ok(Flows {
        power: -shift * pre * main.value[0],
        j1: pre * main.value[1],
        j2: pre * cold.value[0],
        sigma: pre * main.value[2],
        panels: main.panels + cold.panels,
    })
}

/// All flows for a general drive, summed over harmonics.
pub fn flows(p: &EngineParams, drive: &DriveSpectrum) -> Result<Flows, IntegrationError> {
    flows_with_tolerance(p, drive, Tolerance::default())
}

pub fn flows_with_tolerance(
    p: &EngineParams,
    drive: &DriveSpectrum,
    tol: Tolerance,
) -> Result<Flows, IntegrationError> {
    let modes = normal_modes(p);
    let bath1 = p.bath1();
    let parts: Vec<Flows> = (1..=drive.n_max())
        .into_par_iter()
        .filter_map(|n| {
            let wts = drive.weights(n);
            if wts[0] == 0.0 && wts[2] == 0.0 {
                return None;
            }
            let shift = n as f64 * drive.fundamental;
            Some(harmonic_flows(p, &modes, &bath1, shift, wts, tol))
        })
        .collect::<Result<_, _>>()?;
    let mut total = Flows {
        power: 0.0,
        j1: 0.0,
        j2: 0.0,
        sigma: 0.0,
        panels: 0,
    };
    for f in parts {
        total.power += f.power;
        total.j1 += f.j1;
        total.j2 += f.j2;
        total.sigma += f.sigma;
        total.panels += f.panels;
    }
    Ok(total)
}

pub fn average_power(p: &EngineParams, drive: &DriveSpectrum) -> Result<f64, IntegrationError> {
    Ok(flows(p, drive)?.power)
}

pub fn heat_currents(
    p: &EngineParams,
    drive: &DriveSpectrum,
) -> Result<(f64, f64), IntegrationError> {
    let f = flows(p, drive)?;
    Ok((f.j1, f.j2))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum OperatingRegime {
    Engine,
    NotEngine,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ThermoReport {
    pub power: f64,
    pub j1: f64,
    pub j2: f64,
    pub sigma: f64,
    pub efficiency: Option<f64>,
    pub efficiency_ratio: Option<f64>,
    pub regime: OperatingRegime,
}

pub fn report(p: &EngineParams, drive: &DriveSpectrum) -> Result<ThermoReport, IntegrationError> {
    Ok(report_from_flows(p, &flows(p, drive)?))
}

pub fn report_from_flows(p: &EngineParams, f: &Flows) -> ThermoReport {
    let carnot = p.carnot();
    let engine = f.power < 0.0 && f.j1 > 0.0;
    // η_C − η = σT₂/J₁, which keeps the Carnot bound exact under rounding
    let efficiency = engine.then(|| carnot - f.sigma * p.t2 / f.j1);
    ThermoReport {
        power: f.power,
        j1: f.j1,
        j2: f.j2,
        sigma: f.sigma,
        efficiency,
        efficiency_ratio: efficiency.map(|e| e / carnot),
        regime: if engine {
            OperatingRegime::Engine
        } else {
            OperatingRegime::NotEngine
        },
    }
}

/// Monochromatic power split as `P(φ) = X + Y cos φ`.
///
/// Returns `(X, Y, panels)`.
pub fn monochromatic_components(
    p: &EngineParams,
    modes: &NormalModes,
    omega: f64,
) -> Result<(f64, f64, usize), IntegrationError> {
    let bath1 = p.bath1();
    let bps = breakpoints_with_modes(p, modes, omega);
    let f = |w: f64| {
        let [aa, ab, bb] = chi_im_over_omega(p, w, DampingKernel::Ohmic);
        let k = filtered_kernel(p, &bath1, w, omega);
        [(aa + bb) * k, 2.0 * ab * k]
    };
    let r = integrate_line(&f, &bps, Tolerance::default())?;
    let pre = -omega / (4.0 * PI * p.mass);
    Ok((pre * r.value[0], pre * r.value[1], r.panels))
}

/// Power under the monochromatic drive with relative phase φ.
pub fn power_monochromatic(
    p: &EngineParams,
    omega: f64,
    phi: f64,
) -> Result<f64, IntegrationError> {
    let bath1 = p.bath1();
    let modes = normal_modes(p);
    let bps = breakpoints_with_modes(p, &modes, omega);
    let cos_phi = match p.topology {
        Topology::Joint => phi.cos(),
        Topology::Independent => 0.0,
    };
    let f = |w: f64| {
        let [aa, ab, bb] = chi_im_over_omega(p, w, DampingKernel::Ohmic);
        [(aa + bb + 2.0 * cos_phi * ab) * filtered_kernel(p, &bath1, w, omega)]
    };
    let r = integrate_line(&f, &bps, Tolerance::default())?;
    Ok(-omega / (4.0 * PI * p.mass) * r.value[0])
}

fn filter_sum(p: &EngineParams, bath1: &SpectralDensity, center: f64, omega: f64) -> f64 {
    // Σ_p p J₁(p·c + Ω) N(p·c, Ω)
    [1.0, -1.0]
        .iter()
        .map(|s| {
            let w = s * center;
            s * filtered_kernel(p, bath1, w, omega) / w
        })
        .sum()
}

/// Closed-form power in the γ₂ → 0 limit; phase independent.
pub fn power_weak_limit(p: &EngineParams, omega: f64) -> f64 {
    let bath1 = p.bath1();
    let sum: f64 = [p.omega_a, p.omega_b]
        .iter()
        .map(|wl| filter_sum(p, &bath1, *wl, omega) / wl)
        .sum();
    -omega / (8.0 * p.mass) * sum
}

/// Closed-form power in the γ₂ → ∞ limit at φ = π.
pub fn power_strong_pi(p: &EngineParams, omega: f64) -> f64 {
    let bath1 = p.bath1();
    let a = p.omega_a * p.omega_a;
    let b = p.omega_b * p.omega_b;
    let h = hybrid_frequency(p);
    let slow = p.t2 * (b - a).powi(2) / (h * a * b) * bath1.value(omega);
    omega / (4.0 * p.mass * h) * (slow - filter_sum(p, &bath1, h, omega))
}

/// Closed-form power in the γ₂ → ∞ limit at φ = 0; also the strong limit of
/// the independent topology.
pub fn power_strong_zero(p: &EngineParams, omega: f64) -> f64 {
    let a = p.omega_a * p.omega_a;
    let b = p.omega_b * p.omega_b;
    omega / (2.0 * p.mass) * p.t2 * p.bath1().value(omega) * (1.0 / a + 1.0 / b)
}

/// Average works at the three working points around `ω₁*` and their
/// combination `ΔW = W² + W³ − W¹`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Works {
    pub w: [f64; 3],
    pub delta: f64,
    /// Strong-damping closed form, available for φ ∈ {0, π}.
    pub closed_form: Option<f64>,
}

pub fn works_and_delta(
    p: &EngineParams,
    omega1_star: f64,
    phi: f64,
) -> Result<Works, IntegrationError> {
    let h = hybrid_frequency(p);
    let q = EngineParams {
        omega1: omega1_star,
        ..*p
    };
    let omegas = [h - omega1_star, omega1_star, h + omega1_star];
    let mut w = [0.0; 3];
    for (wi, om) in w.iter_mut().zip(omegas) {
        *wi = 2.0 * PI / om * power_monochromatic(&q, om, phi)?;
    }
    Ok(Works {
        w,
        delta: w[1] + w[2] - w[0],
        closed_form: delta_work_closed(&q, omega1_star, phi),
    })
}

/// Closed-form `ΔW_φ` in the strong-damping, sharp-filter limit.
pub fn delta_work_closed(p: &EngineParams, omega1_star: f64, phi: f64) -> Option<f64> {
    let q = EngineParams {
        omega1: omega1_star,
        ..*p
    };
    let a = p.omega_a * p.omega_a;
    let b = p.omega_b * p.omega_b;
    let h = hybrid_frequency(p);
    let j = q.bath1().value(omega1_star);
    let c = phi.cos();
    if (c - 1.0).abs() < 1e-12 {
        Some(2.0 * PI * p.t2 / p.mass * h * h / (a * b) * j)
    } else if (c + 1.0).abs() < 1e-12 {
        let d4 = detuning(p).powi(4);
        let coth = 1.0 / (h / (2.0 * p.t2)).tanh();
        Some(PI / (p.mass * h) * (coth + 2.0 * p.t2 * d4 / (h * a * b)) * j)
    } else {
        None
    }
}

/// Rectangular grid over `(Ω, ω₁)`; each range is open at its lower end.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub omega: (f64, f64),
    pub omega1: (f64, f64),
    pub resolution: (usize, usize),
}

impl GridSpec {
    pub fn omega_values(&self) -> Vec<f64> {
        open_linspace(self.omega, self.resolution.0)
    }

    pub fn omega1_values(&self) -> Vec<f64> {
        open_linspace(self.omega1, self.resolution.1)
    }
}

fn open_linspace((lo, hi): (f64, f64), n: usize) -> Vec<f64> {
    (1..=n)
        .map(|i| lo + (hi - lo) * i as f64 / n as f64)
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MapCell {
    pub omega1: f64,
    pub omega: f64,
    pub p_tilde: f64,
    pub phi: f64,
}

/// Dimensionless power over the grid, taking at each cell the phase that
/// delivers the most output (most negative `P̃`). Rows are ordered by ω₁,
/// then Ω.
pub fn power_map(
    p: &EngineParams,
    grid: &GridSpec,
    phis: &[f64],
) -> Result<(Vec<MapCell>, usize), IntegrationError> {
    let modes = normal_modes(p);
    let omegas = grid.omega_values();
    let cells: Vec<(f64, f64)> = grid
        .omega1_values()
        .into_iter()
        .flat_map(|w1| omegas.iter().map(move |om| (w1, *om)))
        .collect();
    let out: Vec<(MapCell, usize)> = cells
        .par_iter()
        .map(|&(w1, om)| {
            let q = EngineParams { omega1: w1, ..*p };
            let (x, y, panels) = monochromatic_components(&q, &modes, om)?;
            let (phi, val) = best_phase(x, y, phis);
            Ok((
                MapCell {
                    omega1: w1,
                    omega: om,
                    p_tilde: p.power_tilde(val),
                    phi,
                },
                panels,
            ))
        })
        .collect::<Result<_, IntegrationError>>()?;
    let panels = out.iter().map(|c| c.1).sum();
    Ok((out.into_iter().map(|c| c.0).collect(), panels))
}

fn best_phase(x: f64, y: f64, phis: &[f64]) -> (f64, f64) {
    phis.iter()
        .map(|&phi| (phi, x + y * phi.cos()))
        .fold((f64::NAN, f64::INFINITY), |best, c| {
            if c.1 < best.1 {
                c
            } else {
                best
            }
        })
}

/// Best operating point of a power surface.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PowerMax {
    /// Most negative `P̃`, clamped at 0 when no cell works as an engine.
    pub p_tilde: f64,
    pub omega1: f64,
    pub omega: f64,
    pub phi: f64,
}

/// Maximizes the output power over `(ω₁, Ω, φ)`: grid scan followed by a
/// compass search around the best cell.
pub fn max_power(
    p: &EngineParams,
    grid: &GridSpec,
    phis: &[f64],
) -> Result<PowerMax, IntegrationError> {
    let modes = normal_modes(p);
    let eval = |w1: f64, om: f64| -> Result<(f64, f64), IntegrationError> {
        let q = EngineParams { omega1: w1, ..*p };
        let (x, y, _) = monochromatic_components(&q, &modes, om)?;
        Ok(best_phase(x, y, phis))
    };
    let (cells, _) = power_map(p, grid, phis)?;
    let best = cells
        .iter()
        .min_by(|a, b| a.p_tilde.total_cmp(&b.p_tilde))
        .copied()
        .expect("non-empty grid");
    let steps = (
        (grid.omega1.1 - grid.omega1.0) / grid.resolution.1 as f64,
        (grid.omega.1 - grid.omega.0) / grid.resolution.0 as f64,
    );
    let (w1, om, phi, val) = compass_search(
        eval,
        (best.omega1, best.omega),
        steps,
        (grid.omega1, grid.omega),
    )?;
    Ok(PowerMax {
        p_tilde: p.power_tilde(val).min(0.0),
        omega1: w1,
        omega: om,
        phi,
    })
}

fn compass_search<F>(
    f: F,
    start: (f64, f64),
    steps: (f64, f64),
    bounds: ((f64, f64), (f64, f64)),
) -> Result<(f64, f64, f64, f64), IntegrationError>
where
    F: Fn(f64, f64) -> Result<(f64, f64), IntegrationError>,
{
    let (mut x, mut y) = start;
    let (mut phi, mut val) = f(x, y)?;
    let (mut sx, mut sy) = steps;
    let inside = |a: f64, (lo, hi): (f64, f64)| a > lo && a <= hi;
    while sx > 1e-7 * steps.0 || sy > 1e-7 * steps.1 {
        let mut moved = false;
        for (dx, dy) in [
            (sx, 0.0),
            (-sx, 0.0),
            (0.0, sy),
            (0.0, -sy),
            (sx, sy),
            (-sx, -sy),
            (sx, -sy),
            (-sx, sy),
        ] {
            let (nx, ny) = (x + dx, y + dy);
            if !inside(nx, bounds.0) || !inside(ny, bounds.1) {
                continue;
            }
            let (nphi, nval) = f(nx, ny)?;
            if nval < val {
                (x, y, phi, val) = (nx, ny, nphi, nval);
                moved = true;
                break;
            }
        }
        if !moved {
            sx *= 0.5;
            sy *= 0.5;
        }
    }
    Ok((x, y, phi, val))
}

/// Closed-form limit used by [`max_power_closed`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Limit {
    Weak,
    StrongPi,
}

/// Maximizes a closed-form limit over `(ω₁, Ω)` by grid scan and compass
/// refinement.
pub fn max_power_closed(p: &EngineParams, limit: Limit, grid: &GridSpec) -> PowerMax {
    let eval = |w1: f64, om: f64| -> Result<(f64, f64), IntegrationError> {
        let q = EngineParams { omega1: w1, ..*p };
        Ok(match limit {
            Limit::Weak => (0.0, power_weak_limit(&q, om)),
            Limit::StrongPi => (PI, power_strong_pi(&q, om)),
        })
    };
    let mut best = (f64::INFINITY, 0.0, 0.0);
    for w1 in grid.omega1_values() {
        for om in grid.omega_values() {
            let v = eval(w1, om).expect("closed forms are infallible").1;
            if v < best.0 {
                best = (v, w1, om);
            }
        }
    }
    let steps = (
        (grid.omega1.1 - grid.omega1.0) / grid.resolution.1 as f64,
        (grid.omega.1 - grid.omega.0) / grid.resolution.0 as f64,
    );
    let (w1, om, phi, val) =
        compass_search(eval, (best.1, best.2), steps, (grid.omega1, grid.omega))
            .expect("closed forms are infallible");
    PowerMax {
        p_tilde: p.power_tilde(val).min(0.0),
        omega1: w1,
        omega: om,
        phi,
    }
}
