//! Power and entropy production as quadratic forms over drive coefficients,
//! and the constrained optimization that traces the Pareto front.
//!
//! For real coefficients both flows are block diagonal in the harmonic index:
//!
//! ```text
//! P(g) = Σₙ gₙᵀ I⁽ᴾ⁾ₙ gₙ        σ(g) = Σₙ gₙᵀ I⁽σ⁾ₙ gₙ
//! ```
//!
//! with one real symmetric 2×2 block per harmonic.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::integrate::{breakpoints_with_modes, integrate_line, IntegrationError, Tolerance};
use crate::model::EngineParams;
use crate::response::{chi_im_over_omega, normal_modes, DampingKernel};
use crate::thermo::{filtered_kernel, DriveSpectrum};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ParetoError {
    #[error("block {block}: {source}")]
    Block {
        block: usize,
        #[source]
        source: IntegrationError,
    },
    #[error("drive fundamental {drive} does not match forms fundamental {forms}")]
    FundamentalMismatch { drive: f64, forms: f64 },
    #[error("drive has {drive} harmonics but the forms have {forms}")]
    HarmonicMismatch { drive: usize, forms: usize },
}

/// Per-harmonic blocks stored as `[AA, AB, BB]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuadraticForms {
    pub fundamental: f64,
    pub n_max: usize,
    pub ip_blocks: Vec<[f64; 3]>,
    pub isigma_blocks: Vec<[f64; 3]>,
    pub carnot: f64,
    pub t2: f64,
    pub panels: usize,
}

/// Integrates every block of `I⁽ᴾ⁾` and `I⁽σ⁾` for harmonics `1..=n_max`.
pub fn build_forms(
    p: &EngineParams,
    omega: f64,
    n_max: usize,
) -> Result<QuadraticForms, ParetoError> {
    let modes = normal_modes(p);
    let bath1 = p.bath1();
    let pre = 1.0 / (PI * p.mass);
    let bias = 1.0 / p.t2 - 1.0 / p.t1;
    let blocks: Vec<([f64; 3], [f64; 3], usize)> = (1..=n_max)
        .into_par_iter()
        .map(|n| {
            let shift = n as f64 * omega;
            let bps = breakpoints_with_modes(p, &modes, shift);
            let f = |w: f64| {
                let c = chi_im_over_omega(p, w, DampingKernel::Ohmic);
                let k = filtered_kernel(p, &bath1, w, shift);
                [
                    c[0] * k,
                    c[1] * k,
                    c[2] * k,
                    w * c[0] * k,
                    w * c[1] * k,
                    w * c[2] * k,
                ]
            };
            let r = integrate_line(&f, &bps, Tolerance::default())
                .map_err(|source| ParetoError::Block { block: n, source })?;
            let mut ip = [0.0; 3];
            let mut is = [0.0; 3];
            for c in 0..3 {
                ip[c] = -shift * pre * r.value[c];
                is[c] = ip[c] / p.t1 + bias * pre * r.value[3 + c];
            }
            Ok((ip, is, r.panels))
        })
        .collect::<Result<_, ParetoError>>()?;
    Ok(QuadraticForms {
        fundamental: omega,
        n_max,
        ip_blocks: blocks.iter().map(|b| b.0).collect(),
        isigma_blocks: blocks.iter().map(|b| b.1).collect(),
        carnot: p.carnot(),
        t2: p.t2,
        panels: blocks.iter().map(|b| b.2).sum(),
    })
}

#[inline]
fn quad(block: [f64; 3], a: f64, b: f64) -> f64 {
    block[0] * a * a + 2.0 * block[1] * a * b + block[2] * b * b
}

impl QuadraticForms {
    /// `(P, σ)` for coefficient vectors indexed by harmonic − 1.
    fn contract(&self, a: &[f64], b: &[f64]) -> (f64, f64) {
        let mut power = 0.0;
        let mut sigma = 0.0;
        for n in 0..self.n_max {
            power += quad(self.ip_blocks[n], a[n], b[n]);
            sigma += quad(self.isigma_blocks[n], a[n], b[n]);
        }
        (power, sigma)
    }

    /// Efficiency from the entropy production: `η = η_C / (1 − σT₂/P)`.
    pub fn efficiency(&self, power: f64, sigma: f64) -> f64 {
        self.carnot / (1.0 - sigma * self.t2 / power)
    }
}

/// `(P, σ)` of a drive through the quadratic forms.
pub fn evaluate(forms: &QuadraticForms, g: &DriveSpectrum) -> Result<(f64, f64), ParetoError> {
    if (g.fundamental - forms.fundamental).abs() > 1e-12 * forms.fundamental.abs() {
        return Err(ParetoError::FundamentalMismatch {
            drive: g.fundamental,
            forms: forms.fundamental,
        });
    }
    if g.n_max() > forms.n_max {
        return Err(ParetoError::HarmonicMismatch {
            drive: g.n_max(),
            forms: forms.n_max,
        });
    }
    let mut power = 0.0;
    let mut sigma = 0.0;
    for n in 1..=g.n_max() {
        let [aa, ab, bb] = g.weights(n);
        let ip = forms.ip_blocks[n - 1];
        let is = forms.isigma_blocks[n - 1];
        power += ip[0] * aa + 2.0 * ip[1] * ab + ip[2] * bb;
        sigma += is[0] * aa + 2.0 * is[1] * ab + is[2] * bb;
    }
    Ok((power, sigma))
}

/// Gradient-method settings. `Default` carries the published values;
/// [`OptimizerSettings::desk`] is tuned for the 500-harmonic desk grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OptimizerSettings {
    pub iterations: usize,
    pub learning_rate: f64,
    pub multiplier_rate: f64,
    pub penalty: f64,
    pub restarts: usize,
}

impl Default for OptimizerSettings {
    fn default() -> Self {
        OptimizerSettings {
            iterations: 16_000,
            learning_rate: 0.01,
            multiplier_rate: 0.003,
            penalty: 1.0,
            restarts: 3,
        }
    }
}

impl OptimizerSettings {
    pub fn desk() -> Self {
        OptimizerSettings {
            iterations: 64_000,
            multiplier_rate: 0.01,
            ..Default::default()
        }
    }
}

/// Target norms `g^(l)`, with `(g^(l))² = Σ_{n≠0} |g_n^(l)|²`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Norms {
    pub a: f64,
    pub b: f64,
}

impl Default for Norms {
    fn default() -> Self {
        Norms {
            a: std::f64::consts::FRAC_1_SQRT_2,
            b: std::f64::consts::FRAC_1_SQRT_2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OptimizedPoint {
    pub drive: DriveSpectrum,
    pub power: f64,
    pub sigma: f64,
    pub converged: bool,
}

struct Adam {
    m: Vec<f64>,
    v: Vec<f64>,
    t: i32,
    rate: f64,
}

impl Adam {
    const B1: f64 = 0.9;
    const B2: f64 = 0.999;
    const EPS: f64 = 1e-8;

    fn new(len: usize, rate: f64) -> Self {
        Adam {
            m: vec![0.0; len],
            v: vec![0.0; len],
            t: 0,
            rate,
        }
    }

    fn step(&mut self, x: &mut [f64], grad: &[f64]) {
        self.t += 1;
        let c1 = 1.0 - Self::B1.powi(self.t);
        let c2 = 1.0 - Self::B2.powi(self.t);
        for i in 0..x.len() {
            self.m[i] = Self::B1 * self.m[i] + (1.0 - Self::B1) * grad[i];
            self.v[i] = Self::B2 * self.v[i] + (1.0 - Self::B2) * grad[i] * grad[i];
            x[i] -= self.rate * (self.m[i] / c1) / ((self.v[i] / c2).sqrt() + Self::EPS);
        }
    }
}

/// Norm-exact reparametrization `g = (g^(l)/√2) x / ‖x‖` for both
/// oscillators, with `x` laid out as `[A₁..A_N, B₁..B_N]`.
struct Projection {
    n: usize,
    scale: [f64; 2],
}

impl Projection {
    fn new(n: usize, norms: Norms) -> Self {
        Projection {
            n,
            scale: [norms.a / 2f64.sqrt(), norms.b / 2f64.sqrt()],
        }
    }

    fn apply(&self, x: &[f64], g: &mut [f64]) {
        for l in 0..2 {
            let xs = &x[l * self.n..(l + 1) * self.n];
            let r = xs.iter().map(|v| v * v).sum::<f64>().sqrt();
            let c = if r > 0.0 { self.scale[l] / r } else { 0.0 };
            for (gi, xi) in g[l * self.n..(l + 1) * self.n].iter_mut().zip(xs) {
                *gi = c * xi;
            }
        }
    }

    /// Pulls a gradient with respect to `g` back to `x`.
    fn pull_back(&self, x: &[f64], grad_g: &[f64], grad_x: &mut [f64]) {
        for l in 0..2 {
            let range = l * self.n..(l + 1) * self.n;
            let xs = &x[range.clone()];
            let gs = &grad_g[range.clone()];
            let r2: f64 = xs.iter().map(|v| v * v).sum();
            if r2 == 0.0 || self.scale[l] == 0.0 {
                grad_x[range].iter_mut().for_each(|v| *v = 0.0);
                continue;
            }
            let r = r2.sqrt();
            let dot: f64 = xs.iter().zip(gs).map(|(a, b)| a * b).sum();
            let c = self.scale[l] / r;
            for ((gx, xi), gi) in grad_x[range].iter_mut().zip(xs).zip(gs) {
                *gx = c * (gi - xi * dot / r2);
            }
        }
    }
}

/// Gradients of `P` and `σ` with respect to `g` in the `[A.., B..]` layout.
fn flow_gradients(forms: &QuadraticForms, g: &[f64], dp: &mut [f64], ds: &mut [f64]) -> (f64, f64) {
    let n = forms.n_max;
    let (a, b) = g.split_at(n);
    let mut power = 0.0;
    let mut sigma = 0.0;
    for k in 0..n {
        let ip = forms.ip_blocks[k];
        let is = forms.isigma_blocks[k];
        let (pa, pb) = (ip[0] * a[k] + ip[1] * b[k], ip[1] * a[k] + ip[2] * b[k]);
        let (sa, sb) = (is[0] * a[k] + is[1] * b[k], is[1] * a[k] + is[2] * b[k]);
        power += a[k] * pa + b[k] * pb;
        sigma += a[k] * sa + b[k] * sb;
        dp[k] = 2.0 * pa;
        dp[n + k] = 2.0 * pb;
        ds[k] = 2.0 * sa;
        ds[n + k] = 2.0 * sb;
    }
    (power, sigma)
}

fn to_drive(forms: &QuadraticForms, g: &[f64]) -> DriveSpectrum {
    let (a, b) = g.split_at(forms.n_max);
    DriveSpectrum::new(forms.fundamental, a.to_vec(), b.to_vec())
}

/// Sign-flip-free start `x ~ U[0, 1)`.
fn initial_point(n: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    (0..2 * n).map(|_| rng.gen::<f64>()).collect()
}

const BETA_LIMIT: f64 = 60.0;

/// Augmented Lagrangian `P + e^β c + μ c²` in the relative constraint
/// `c = σ/σ_i − 1`. The multiplier ascends in log space, `β += rate · c`.
fn run_constrained(
    forms: &QuadraticForms,
    sigma_target: f64,
    norms: Norms,
    settings: &OptimizerSettings,
    rng: &mut ChaCha8Rng,
) -> OptimizedPoint {
    let n = forms.n_max;
    let proj = Projection::new(n, norms);
    let mut x = initial_point(n, rng);
    let mut g = vec![0.0; 2 * n];
    let mut dp = vec![0.0; 2 * n];
    let mut ds = vec![0.0; 2 * n];
    let mut grad_g = vec![0.0; 2 * n];
    let mut grad_x = vec![0.0; 2 * n];
    let mut adam = Adam::new(2 * n, settings.learning_rate);
    let mut beta = 0.0f64;
    for _ in 0..settings.iterations {
        proj.apply(&x, &mut g);
        let (_, sigma) = flow_gradients(forms, &g, &mut dp, &mut ds);
        let alpha = beta.exp();
        let gap = sigma / sigma_target - 1.0;
        let weight = (alpha + 2.0 * settings.penalty * gap) / sigma_target;
        for i in 0..2 * n {
            grad_g[i] = dp[i] + weight * ds[i];
        }
        proj.pull_back(&x, &grad_g, &mut grad_x);
        adam.step(&mut x, &grad_x);
        beta = (beta + settings.multiplier_rate * gap).clamp(-BETA_LIMIT, BETA_LIMIT);
    }
    proj.apply(&x, &mut g);
    let (power, sigma) = forms.contract(&g[..n], &g[n..]);
    OptimizedPoint {
        drive: to_drive(forms, &g),
        power,
        sigma,
        converged: ((sigma - sigma_target) / sigma_target).abs() <= 1e-3,
    }
}

/// Maximizes `−P` at fixed `σ = sigma_target` and fixed norms, keeping the
/// best of `settings.restarts` random starts.
pub fn optimize_point(
    forms: &QuadraticForms,
    sigma_target: f64,
    norms: Norms,
    seed: u64,
    settings: &OptimizerSettings,
) -> OptimizedPoint {
    let runs: Vec<OptimizedPoint> = (0..settings.restarts.max(1))
        .into_par_iter()
        .map(|k| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(k as u64);
            run_constrained(forms, sigma_target, norms, settings, &mut rng)
        })
        .collect();
    best_of(runs)
}

fn best_of(runs: Vec<OptimizedPoint>) -> OptimizedPoint {
    runs.into_iter()
        .reduce(|best, r| {
            let better = match (r.converged, best.converged) {
                (true, false) => true,
                (false, true) => false,
                _ => r.power < best.power,
            };
            if better {
                r
            } else {
                best
            }
        })
        .expect("at least one run")
}

/// Maximum-power drive under the norms alone.
pub fn max_power_point(
    forms: &QuadraticForms,
    norms: Norms,
    seed: u64,
    settings: &OptimizerSettings,
) -> OptimizedPoint {
    extremum(forms, norms, seed, settings, Objective::Power)
}

/// Minimum-entropy drive under the norms alone. Fixed norms keep σ away from
/// zero, so this bounds the attainable targets from below.
pub fn min_entropy_point(
    forms: &QuadraticForms,
    norms: Norms,
    seed: u64,
    settings: &OptimizerSettings,
) -> OptimizedPoint {
    extremum(forms, norms, seed, settings, Objective::Entropy)
}

#[derive(Clone, Copy)]
enum Objective {
    Power,
    Entropy,
}

fn extremum(
    forms: &QuadraticForms,
    norms: Norms,
    seed: u64,
    settings: &OptimizerSettings,
    objective: Objective,
) -> OptimizedPoint {
    let n = forms.n_max;
    let runs: Vec<OptimizedPoint> = (0..settings.restarts.max(1))
        .into_par_iter()
        .map(|k| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(k as u64);
            let proj = Projection::new(n, norms);
            let mut x = initial_point(n, &mut rng);
            let mut g = vec![0.0; 2 * n];
            let mut dp = vec![0.0; 2 * n];
            let mut ds = vec![0.0; 2 * n];
            let mut grad_x = vec![0.0; 2 * n];
            let mut adam = Adam::new(2 * n, settings.learning_rate);
            for _ in 0..settings.iterations {
                proj.apply(&x, &mut g);
                flow_gradients(forms, &g, &mut dp, &mut ds);
                let grad = match objective {
                    Objective::Power => &dp,
                    Objective::Entropy => &ds,
                };
                proj.pull_back(&x, grad, &mut grad_x);
                adam.step(&mut x, &grad_x);
            }
            proj.apply(&x, &mut g);
            let (power, sigma) = forms.contract(&g[..n], &g[n..]);
            OptimizedPoint {
                drive: to_drive(forms, &g),
                power,
                sigma,
                converged: true,
            }
        })
        .collect();
    match objective {
        Objective::Power => best_of(runs),
        Objective::Entropy => runs
            .into_iter()
            .reduce(|a, b| if b.sigma < a.sigma { b } else { a })
            .expect("at least one run"),
    }
}

/// `count` log-spaced entropy targets from `lo_fraction · σ_max` to `σ_max`.
pub fn sigma_ladder(sigma_max: f64, lo_fraction: f64, count: usize) -> Vec<f64> {
    log_ladder(lo_fraction * sigma_max, sigma_max, count)
}

/// Ladder clipped to the attainable range: the lower end is raised to
/// `floor_margin · σ_min` when that exceeds `lo_fraction · σ_max`.
pub fn attainable_ladder(
    sigma_min: f64,
    sigma_max: f64,
    lo_fraction: f64,
    floor_margin: f64,
    count: usize,
) -> Vec<f64> {
    let lo = (lo_fraction * sigma_max)
        .max(floor_margin * sigma_min)
        .min(sigma_max);
    log_ladder(lo, sigma_max, count)
}

fn log_ladder(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    if count == 1 {
        return vec![hi];
    }
    let (lo, hi) = (lo.ln(), hi.ln());
    (0..count)
        .map(|i| (lo + (hi - lo) * i as f64 / (count - 1) as f64).exp())
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FrontPoint {
    pub sigma: f64,
    pub neg_power: f64,
    pub eta: f64,
    pub converged: bool,
    pub drive: DriveSpectrum,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ParetoFront {
    /// Non-dominated points in `(σ, −P)`, sorted by σ.
    pub points: Vec<FrontPoint>,
    /// Indices into `points` that stay non-dominated in `(η, −P)`.
    pub eta_front: Vec<usize>,
    /// Every optimized point, including unconverged and dominated ones.
    pub candidates: Vec<FrontPoint>,
}

/// Optimizes each ladder target and filters the results into fronts.
pub fn pareto_front(
    forms: &QuadraticForms,
    ladder: &[f64],
    norms: Norms,
    seed: u64,
    settings: &OptimizerSettings,
) -> ParetoFront {
    let candidates: Vec<FrontPoint> = ladder
        .par_iter()
        .enumerate()
        .map(|(i, &target)| {
            let pt = optimize_point(forms, target, norms, seed.wrapping_add(i as u64), settings);
            FrontPoint {
                sigma: pt.sigma,
                neg_power: -pt.power,
                eta: forms.efficiency(pt.power, pt.sigma),
                converged: pt.converged,
                drive: pt.drive,
            }
        })
        .collect();
    assemble_front(candidates)
}

/// Dominance filtering: first in `(σ, −P)` (small σ, large −P), then in
/// `(η, −P)` among engine points.
pub fn assemble_front(candidates: Vec<FrontPoint>) -> ParetoFront {
    let usable: Vec<&FrontPoint> = candidates.iter().filter(|p| p.converged).collect();
    let mut points: Vec<FrontPoint> = usable
        .iter()
        .filter(|p| {
            !usable.iter().any(|q| {
                q.sigma <= p.sigma
                    && q.neg_power >= p.neg_power
                    && (q.sigma < p.sigma || q.neg_power > p.neg_power)
            })
        })
        .map(|p| (*p).clone())
        .collect();
    points.sort_by(|a, b| a.sigma.total_cmp(&b.sigma));
    points.dedup_by(|a, b| a.sigma == b.sigma && a.neg_power == b.neg_power);
    let eta_front = (0..points.len())
        .filter(|&i| {
            let p = &points[i];
            p.neg_power > 0.0
                && !points.iter().any(|q| {
                    q.neg_power > 0.0
                        && q.eta >= p.eta
                        && q.neg_power >= p.neg_power
                        && (q.eta > p.eta || q.neg_power > p.neg_power)
                })
        })
        .collect();
    ParetoFront {
        points,
        eta_front,
        candidates,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Support {
    pub count: usize,
    /// Mass-weighted center frequency of each cluster, ascending.
    pub frequencies: Vec<f64>,
}

/// Smallest set of harmonics carrying `mass_fraction` of the squared norm,
/// counted after merging harmonics within three grid steps.
pub fn spectral_support(g: &DriveSpectrum, mass_fraction: f64) -> Support {
    let mass: Vec<f64> = (0..g.n_max())
        .map(|k| g.coeffs[0][k].powi(2) + g.coeffs[1][k].powi(2))
        .collect();
    let total: f64 = mass.iter().sum();
    if total == 0.0 {
        return Support {
            count: 0,
            frequencies: Vec::new(),
        };
    }
    let mut order: Vec<usize> = (0..mass.len()).collect();
    order.sort_by(|&i, &j| mass[j].total_cmp(&mass[i]).then(i.cmp(&j)));
    let mut chosen = Vec::new();
    let mut acc = 0.0;
    for i in order {
        chosen.push(i);
        acc += mass[i];
        if acc >= mass_fraction * total {
            break;
        }
    }
    chosen.sort_unstable();
    let mut clusters: Vec<Vec<usize>> = Vec::new();
    for i in chosen {
        match clusters.last_mut() {
            Some(c) if i - c[c.len() - 1] <= 3 => c.push(i),
            _ => clusters.push(vec![i]),
        }
    }
    let frequencies = clusters
        .iter()
        .map(|c| {
            let m: f64 = c.iter().map(|&i| mass[i]).sum();
            c.iter().map(|&i| mass[i] * (i + 1) as f64).sum::<f64>() / m * g.fundamental
        })
        .collect();
    Support {
        count: clusters.len(),
        frequencies,
    }
}
