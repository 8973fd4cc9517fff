//! Adaptive Gauss–Kronrod quadrature over the real line.
//!
//! Integrands are vector valued so that several quantities sharing the same
//! peaks are integrated on a single panel set. The line is cut at every
//! breakpoint `c` and at `c ± 5w`; both semi-infinite tails are mapped onto
//! `[0, 1)` with `ω = a ± L t / (1 − t²)`. Panels are bisected in order of
//! their error until the global tolerance is met.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use thiserror::Error;

use crate::model::EngineParams;
use crate::response::{normal_modes, NormalModes};

/// Hard ceiling on the number of panels.
pub const MAX_PANELS: usize = 100_000;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum IntegrationError {
    #[error(
        "quadrature did not converge: {panels} panels, error {error:e} > tolerance {tolerance:e}"
    )]
    NoConvergence {
        panels: usize,
        error: f64,
        tolerance: f64,
    },
    #[error("integrand is not finite at omega = {omega}")]
    NonFinite { omega: f64 },
}

/// A known sharp feature of the integrand.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Breakpoint {
    pub center: f64,
    pub width: f64,
}

impl Breakpoint {
    pub fn new(center: f64, width: f64) -> Self {
        Breakpoint {
            center,
            width: width.abs(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerance {
    pub rel: f64,
    pub abs: f64,
}

impl Default for Tolerance {
    fn default() -> Self {
        Tolerance {
            rel: 1e-8,
            abs: 1e-12,
        }
    }
}

/// Result of a vector-valued integral.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VecEstimate<const K: usize> {
    pub value: [f64; K],
    pub error: [f64; K],
    pub panels: usize,
}

/// Result of a scalar integral.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub error: f64,
    pub panels: usize,
}

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

#[derive(Debug, Clone, Copy)]
enum Map {
    Finite,
    /// `ω = origin + dir · scale · t / (1 − t²)`
    Tail {
        origin: f64,
        scale: f64,
        dir: f64,
    },
}

impl Map {
    #[inline]
    fn apply(self, t: f64) -> (f64, f64) {
        match self {
            Map::Finite => (t, 1.0),
            Map::Tail { origin, scale, dir } => {
                let d = 1.0 - t * t;
                let w = origin + dir * scale * t / d;
                let jac = scale * (1.0 + t * t) / (d * d);
                (w, jac)
            }
        }
    }
}

struct Panel<const K: usize> {
    map: Map,
    lo: f64,
    hi: f64,
    value: [f64; K],
    error: [f64; K],
    at_floor: bool,
    priority: f64,
}

impl<const K: usize> PartialEq for Panel<K> {
    fn eq(&self, other: &Self) -> bool {
        self.priority == other.priority
    }
}
impl<const K: usize> Eq for Panel<K> {}
impl<const K: usize> PartialOrd for Panel<K> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl<const K: usize> Ord for Panel<K> {
    fn cmp(&self, other: &Self) -> Ordering {
        self.priority.total_cmp(&other.priority)
    }
}

fn gk15<const K: usize, F>(
    f: &F,
    map: Map,
    lo: f64,
    hi: f64,
) -> Result<([f64; K], [f64; K], bool), IntegrationError>
where
    F: Fn(f64) -> [f64; K],
{
    let center = 0.5 * (lo + hi);
    let half = 0.5 * (hi - lo);
    let eval = |t: f64| -> Result<[f64; K], IntegrationError> {
        let (w, jac) = map.apply(t);
        if !w.is_finite() || !jac.is_finite() || w.abs() > 1e150 {
            return Ok([0.0; K]);
        }
        let mut v = f(w);
        for x in v.iter_mut() {
            if !x.is_finite() {
                return Err(IntegrationError::NonFinite { omega: w });
            }
            *x *= jac;
        }
        Ok(v)
    };

    let fc = eval(center)?;
    let mut kron = [0.0; K];
    let mut gauss = [0.0; K];
    let mut resabs = [0.0; K];
    let mut samples = [[0.0; K]; 15];
    samples[14] = fc;
    for k in 0..K {
        kron[k] = WGK[7] * fc[k];
        gauss[k] = WG[3] * fc[k];
        resabs[k] = (WGK[7] * fc[k]).abs();
    }
    for j in 0..7 {
        let dx = half * XGK[j];
        let f1 = eval(center - dx)?;
        let f2 = eval(center + dx)?;
        samples[2 * j] = f1;
        samples[2 * j + 1] = f2;
        for k in 0..K {
            kron[k] += WGK[j] * (f1[k] + f2[k]);
            resabs[k] += WGK[j] * (f1[k].abs() + f2[k].abs());
            if j % 2 == 1 {
                gauss[k] += WG[j / 2] * (f1[k] + f2[k]);
            }
        }
    }

    let mut value = [0.0; K];
    let mut error = [0.0; K];
    let mut at_floor = true;
    for k in 0..K {
        let mean = 0.5 * kron[k];
        let mut resasc = WGK[7] * (fc[k] - mean).abs();
        for j in 0..7 {
            resasc +=
                WGK[j] * ((samples[2 * j][k] - mean).abs() + (samples[2 * j + 1][k] - mean).abs());
        }
        let resasc = resasc * half.abs();
        let mut err = ((kron[k] - gauss[k]) * half).abs();
        if resasc != 0.0 && err != 0.0 {
            err = resasc * (200.0 * err / resasc).powf(1.5).min(1.0);
        }
        let rabs = resabs[k] * half.abs();
        let floor = 50.0 * f64::EPSILON * rabs;
        if rabs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) && err <= floor {
            err = floor;
        } else if err > 0.0 {
            at_floor = false;
        }
        value[k] = kron[k] * half;
        error[k] = err;
    }
    Ok((value, error, at_floor))
}

fn cut_points(lo: f64, hi: f64, breakpoints: &[Breakpoint]) -> Vec<f64> {
    let mut pts = vec![lo, hi];
    for b in breakpoints {
        for x in [b.center - 5.0 * b.width, b.center, b.center + 5.0 * b.width] {
            if x.is_finite() && x > lo && x < hi {
                pts.push(x);
            }
        }
    }
    pts.sort_by(f64::total_cmp);
    let scale = pts.iter().fold(0.0f64, |a, x| a.max(x.abs())).max(1.0);
    pts.dedup_by(|a, b| (*a - *b).abs() <= 1e-13 * scale);
    pts
}

fn adapt<const K: usize, F>(
    f: &F,
    initial: Vec<(Map, f64, f64)>,
    tol: Tolerance,
) -> Result<VecEstimate<K>, IntegrationError>
where
    F: Fn(f64) -> [f64; K],
{
    let mut raw = Vec::with_capacity(initial.len());
    let mut total = [0.0; K];
    let mut total_err = [0.0; K];
    for (map, lo, hi) in initial {
        let (v, e, fl) = gk15(f, map, lo, hi)?;
        for k in 0..K {
            total[k] += v[k];
            total_err[k] += e[k];
        }
        raw.push((map, lo, hi, v, e, fl));
    }
    // per-component weights fixed from the first pass
    let mut weight = [0.0; K];
    for k in 0..K {
        weight[k] = 1.0
            / (tol.rel * total[k].abs())
                .max(tol.abs)
                .max(f64::MIN_POSITIVE);
    }
    let priority = |e: &[f64; K]| -> f64 { (0..K).map(|k| e[k] * weight[k]).fold(0.0, f64::max) };

    let mut heap = BinaryHeap::with_capacity(raw.len() * 4);
    for (map, lo, hi, value, error, at_floor) in raw {
        let pr = priority(&error);
        heap.push(Panel {
            map,
            lo,
            hi,
            value,
            error,
            at_floor,
            priority: pr,
        });
    }
    let mut frozen: Vec<Panel<K>> = Vec::new();

    let converged = |total: &[f64; K], err: &[f64; K]| -> bool {
        (0..K).all(|k| err[k] <= (tol.rel * total[k].abs()).max(tol.abs))
    };

    loop {
        if converged(&total, &total_err) {
            break;
        }
        let panels = heap.len() + frozen.len();
        if panels >= MAX_PANELS {
            let (error, tolerance) = (0..K)
                .map(|k| (total_err[k], (tol.rel * total[k].abs()).max(tol.abs)))
                .max_by(|a, b| (a.0 / a.1).total_cmp(&(b.0 / b.1)))
                .unwrap_or((0.0, 0.0));
            return Err(IntegrationError::NoConvergence {
                panels,
                error,
                tolerance,
            });
        }
        let Some(worst) = heap.pop() else { break };
        let mid = 0.5 * (worst.lo + worst.hi);
        let tiny =
            (worst.hi - worst.lo).abs() <= 1e-14 * worst.lo.abs().max(worst.hi.abs()).max(1e-300);
        // bisecting a panel whose error is pure rounding cannot help
        if tiny || worst.at_floor || mid <= worst.lo || mid >= worst.hi || worst.priority == 0.0 {
            frozen.push(worst);
            continue;
        }
        let (v1, e1, f1) = gk15(f, worst.map, worst.lo, mid)?;
        let (v2, e2, f2) = gk15(f, worst.map, mid, worst.hi)?;
        for k in 0..K {
            total[k] += v1[k] + v2[k] - worst.value[k];
            total_err[k] += e1[k] + e2[k] - worst.error[k];
        }
        heap.push(Panel {
            map: worst.map,
            lo: worst.lo,
            hi: mid,
            value: v1,
            error: e1,
            at_floor: f1,
            priority: priority(&e1),
        });
        heap.push(Panel {
            map: worst.map,
            lo: mid,
            hi: worst.hi,
            value: v2,
            error: e2,
            at_floor: f2,
            priority: priority(&e2),
        });
    }

    // re-sum to shed the drift of incremental updates
    let mut value = [0.0; K];
    let mut error = [0.0; K];
    let panels = heap.len() + frozen.len();
    for p in heap.iter().chain(frozen.iter()) {
        for k in 0..K {
            value[k] += p.value[k];
            error[k] += p.error[k];
        }
    }
    Ok(VecEstimate {
        value,
        error,
        panels,
    })
}

/// Integrates a vector-valued `f` over `(−∞, ∞)`.
pub fn integrate_line<const K: usize, F>(
    f: &F,
    breakpoints: &[Breakpoint],
    tol: Tolerance,
) -> Result<VecEstimate<K>, IntegrationError>
where
    F: Fn(f64) -> [f64; K],
{
    line_with_tail_scale(f, breakpoints, tol, 10.0)
}

fn line_with_tail_scale<const K: usize, F>(
    f: &F,
    breakpoints: &[Breakpoint],
    tol: Tolerance,
    tail_factor: f64,
) -> Result<VecEstimate<K>, IntegrationError>
where
    F: Fn(f64) -> [f64; K],
{
    let outer = breakpoints
        .iter()
        .map(|b| b.center.abs() + 5.0 * b.width)
        .filter(|x| x.is_finite())
        .fold(1.0f64, f64::max);
    let pts = cut_points(-outer, outer, breakpoints);
    let scale = tail_factor * outer;
    let mut initial = vec![
        (
            Map::Tail {
                origin: -outer,
                scale,
                dir: -1.0,
            },
            0.0,
            1.0,
        ),
        (
            Map::Tail {
                origin: outer,
                scale,
                dir: 1.0,
            },
            0.0,
            1.0,
        ),
    ];
    initial.extend(pts.windows(2).map(|w| (Map::Finite, w[0], w[1])));
    adapt(f, initial, tol)
}

/// Integrates a vector-valued `f` over the finite interval `[a, b]`.
pub fn integrate_range<const K: usize, F>(
    f: &F,
    a: f64,
    b: f64,
    breakpoints: &[Breakpoint],
    tol: Tolerance,
) -> Result<VecEstimate<K>, IntegrationError>
where
    F: Fn(f64) -> [f64; K],
{
    if a == b {
        return Ok(VecEstimate {
            value: [0.0; K],
            error: [0.0; K],
            panels: 0,
        });
    }
    let (lo, hi, sign) = if a < b { (a, b, 1.0) } else { (b, a, -1.0) };
    let pts = cut_points(lo, hi, breakpoints);
    let initial = pts.windows(2).map(|w| (Map::Finite, w[0], w[1])).collect();
    let mut out = adapt(f, initial, tol)?;
    for v in out.value.iter_mut() {
        *v *= sign;
    }
    Ok(out)
}

/// Scalar integral over `[a, b]`.
pub fn integrate_interval<F>(
    f: &F,
    a: f64,
    b: f64,
    breakpoints: &[Breakpoint],
    rel_tol: f64,
    abs_tol: f64,
) -> Result<Estimate, IntegrationError>
where
    F: Fn(f64) -> f64,
{
    let g = |w: f64| [f(w)];
    let r = integrate_range(
        &g,
        a,
        b,
        breakpoints,
        Tolerance {
            rel: rel_tol,
            abs: abs_tol,
        },
    )?;
    Ok(Estimate {
        value: r.value[0],
        error: r.error[0],
        panels: r.panels,
    })
}

/// Scalar integral over the real line.
pub fn integrate_real_line<F>(
    f: &F,
    breakpoints: &[Breakpoint],
    rel_tol: f64,
    abs_tol: f64,
) -> Result<Estimate, IntegrationError>
where
    F: Fn(f64) -> f64,
{
    let g = |w: f64| [f(w)];
    let r = integrate_line(
        &g,
        breakpoints,
        Tolerance {
            rel: rel_tol,
            abs: abs_tol,
        },
    )?;
    Ok(Estimate {
        value: r.value[0],
        error: r.error[0],
        panels: r.panels,
    })
}

/// Peaks of the thermodynamic integrands for a drive harmonic at `shift`:
/// the filter centers `±ω₁ − shift`, the normal modes and the thermal scale
/// at ω = 0.
pub fn peak_breakpoints(p: &EngineParams, shift: f64) -> Vec<Breakpoint> {
    breakpoints_with_modes(p, &normal_modes(p), shift)
}

pub fn breakpoints_with_modes(
    p: &EngineParams,
    modes: &NormalModes,
    shift: f64,
) -> Vec<Breakpoint> {
    let mut out = Vec::with_capacity(7);
    out.push(Breakpoint::new(p.omega1 - shift, p.gamma1 / 2.0));
    out.push(Breakpoint::new(-p.omega1 - shift, p.gamma1 / 2.0));
    for z in modes.zeros {
        out.push(Breakpoint::new(z.re, z.im.abs()));
    }
    out.push(Breakpoint::new(0.0, p.t1.min(p.t2)));
    dedup_breakpoints(out)
}

/// Sorts by center and drops any breakpoint lying within the half-width of a
/// narrower one.
pub fn dedup_breakpoints(mut bps: Vec<Breakpoint>) -> Vec<Breakpoint> {
    bps.retain(|b| b.center.is_finite() && b.width.is_finite() && b.width > 0.0);
    bps.sort_by(|a, b| a.width.total_cmp(&b.width));
    let mut kept: Vec<Breakpoint> = Vec::with_capacity(bps.len());
    for b in bps {
        if !kept.iter().any(|k| (k.center - b.center).abs() <= k.width) {
            kept.push(b);
        }
    }
    kept.sort_by(|a, b| a.center.total_cmp(&b.center));
    kept
}
