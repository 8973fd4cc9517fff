//! Retarded response of the two oscillators dressed by the static bath.
//!
//! The joint response matrix is
//!
//! ```text
//! χ^(ll)(ω)  = −[ω² − ω_l̄² + iωγ(ω)] / D(ω)
//! χ^(ll̄)(ω)  =  iωγ(ω) / D(ω)
//! D(ω)       = (ω² − ω_A²)(ω² − ω_B²) + iω(2ω² − ω_A² − ω_B²)γ(ω)
//! ```
//!
//! and its imaginary part has a null eigenvalue at every frequency. The
//! independent topology replaces it with two uncoupled damped oscillators.

use nalgebra::Matrix4;
use num_complex::Complex64;
use thiserror::Error;

use crate::model::{EngineParams, Topology};

#[derive(Debug, Clone, Copy, PartialEq, Error)]
pub enum ResponseError {
    #[error("response denominator vanishes at omega = {omega}")]
    PoleHit { omega: f64 },
}

/// Static-bath damping kernel used inside the response.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DampingKernel {
    /// Constant real `γ₂` (cutoff sent to infinity).
    Ohmic,
    /// `γ₂(ω) = γ₂ / (1 − iω/ω_c)`.
    Drude { cutoff: f64 },
}

impl DampingKernel {
    /// Real and imaginary parts of `γ₂(ω)`.
    fn eval(self, gamma2: f64, omega: f64) -> (f64, f64) {
        match self {
            DampingKernel::Ohmic => (gamma2, 0.0),
            DampingKernel::Drude { cutoff } => {
                if cutoff.is_infinite() {
                    return (gamma2, 0.0);
                }
                let r = omega / cutoff;
                let re = gamma2 / (1.0 + r * r);
                (re, re * r)
            }
        }
    }
}

/// Hybrid frequency `ω̄ = sqrt((ω_A² + ω_B²)/2)`.
pub fn hybrid_frequency(p: &EngineParams) -> f64 {
    ((p.omega_a * p.omega_a + p.omega_b * p.omega_b) / 2.0).sqrt()
}

/// Detuning `Δ = sqrt((ω_A² − ω_B²)/2)`.
pub fn detuning(p: &EngineParams) -> f64 {
    ((p.omega_a * p.omega_a - p.omega_b * p.omega_b) / 2.0).sqrt()
}

/// Response matrix at one frequency, indexed `[A, B] × [A, B]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResponseMatrix {
    pub value: [[Complex64; 2]; 2],
    pub hybrid_freq: f64,
    pub delta: f64,
}

impl ResponseMatrix {
    /// Imaginary part χ″.
    pub fn imag(&self) -> [[f64; 2]; 2] {
        let v = &self.value;
        [[v[0][0].im, v[0][1].im], [v[1][0].im, v[1][1].im]]
    }

    pub fn real(&self) -> [[f64; 2]; 2] {
        let v = &self.value;
        [[v[0][0].re, v[0][1].re], [v[1][0].re, v[1][1].re]]
    }
}

/// `D(z)` for the constant-γ₂ kernel at a complex frequency.
pub fn denominator(p: &EngineParams, omega: Complex64) -> Complex64 {
    let a = p.omega_a * p.omega_a;
    let b = p.omega_b * p.omega_b;
    let w2 = omega * omega;
    let i = Complex64::i();
    (w2 - a) * (w2 - b) + i * omega * (2.0 * w2 - a - b) * p.gamma2
}

/// Full complex response at real ω with the constant-γ₂ kernel.
pub fn chi2(p: &EngineParams, omega: f64) -> Result<ResponseMatrix, ResponseError> {
    chi2_with_kernel(p, omega, DampingKernel::Ohmic)
}

pub fn chi2_with_kernel(
    p: &EngineParams,
    omega: f64,
    kernel: DampingKernel,
) -> Result<ResponseMatrix, ResponseError> {
    let a = p.omega_a * p.omega_a;
    let b = p.omega_b * p.omega_b;
    let (g_re, g_im) = kernel.eval(p.gamma2, omega);
    let i_w_gamma = Complex64::new(-omega * g_im, omega * g_re);
    let w2 = omega * omega;
    let zero = Complex64::new(0.0, 0.0);
    let value = match p.topology {
        Topology::Joint => {
            let d = (w2 - a) * (w2 - b) + i_w_gamma * (2.0 * w2 - a - b);
            if d.norm_sqr() == 0.0 || !d.norm_sqr().is_finite() {
                return Err(ResponseError::PoleHit { omega });
            }
            let aa = -(i_w_gamma + (w2 - b)) / d;
            let bb = -(i_w_gamma + (w2 - a)) / d;
            let ab = i_w_gamma / d;
            [[aa, ab], [ab, bb]]
        }
        Topology::Independent => {
            let da = i_w_gamma + (w2 - a);
            let db = i_w_gamma + (w2 - b);
            if da.norm_sqr() == 0.0 || db.norm_sqr() == 0.0 {
                return Err(ResponseError::PoleHit { omega });
            }
            [[-1.0 / da, zero], [zero, -1.0 / db]]
        }
    };
    Ok(ResponseMatrix {
        value,
        hybrid_freq: hybrid_frequency(p),
        delta: detuning(p),
    })
}

/// `χ″(ω)/ω` as `[AA, AB, BB]`; even in ω and finite at ω = 0.
///
/// This is the form every frequency integral consumes, since the thermal
/// factors carry the matching `1/ω` pole.
#[inline]
pub fn chi_im_over_omega(p: &EngineParams, omega: f64, kernel: DampingKernel) -> [f64; 3] {
    let a = p.omega_a * p.omega_a;
    let b = p.omega_b * p.omega_b;
    let (g_re, g_im) = kernel.eval(p.gamma2, omega);
    let w2 = omega * omega;
    let xa = w2 - a;
    let xb = w2 - b;
    match p.topology {
        Topology::Joint => {
            let s = omega * (2.0 * w2 - a - b);
            let dr = xa * xb - s * g_im;
            let di = s * g_re;
            let den = dr * dr + di * di;
            let f = g_re / den;
            [f * xb * xb, f * xa * xb, f * xa * xa]
        }
        Topology::Independent => {
            let wi = omega * g_re;
            let ra = xa - omega * g_im;
            let rb = xb - omega * g_im;
            [g_re / (ra * ra + wi * wi), 0.0, g_re / (rb * rb + wi * wi)]
        }
    }
}

/// Nonzero eigenvalue of χ″(ω) (equal to its trace); joint topology.
pub fn finite_eigenvalue(p: &EngineParams, omega: f64) -> f64 {
    let a = p.omega_a * p.omega_a;
    let b = p.omega_b * p.omega_b;
    let w2 = omega * omega;
    let d = denominator(p, Complex64::new(omega, 0.0)).norm_sqr();
    p.gamma2 * omega * (2.0 * w2 * w2 - 2.0 * (a + b) * w2 + a * a + b * b) / d
}

/// Effective response seen by a monochromatic drive with relative phase φ.
pub fn chi_eff(p: &EngineParams, omega: f64, phi: f64) -> Result<Complex64, ResponseError> {
    let m = chi2(p, omega)?;
    let v = m.value;
    Ok(match p.topology {
        Topology::Joint => v[0][0] + v[1][1] + 2.0 * phi.cos() * v[0][1],
        Topology::Independent => v[0][0] + v[1][1],
    })
}

/// `Im χ_eff(ω; φ) / ω`, finite at ω = 0.
#[inline]
pub fn chi_eff_im_over_omega(p: &EngineParams, omega: f64, cos_phi: f64) -> f64 {
    let [aa, ab, bb] = chi_im_over_omega(p, omega, DampingKernel::Ohmic);
    aa + bb + 2.0 * cos_phi * ab
}

/// Zeros of `D(z)` sorted by descending real part, then descending
/// imaginary part.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormalModes {
    pub zeros: [Complex64; 4],
}

/// Normal-mode frequencies for the constant-γ₂ kernel.
///
/// For the joint topology, substituting `z = iy` turns `D` into the real quartic
/// `y⁴ + 2γy³ + (a+b)y² + γ(a+b)y + ab`; its roots are the eigenvalues of the
/// companion matrix, polished by Newton iterations.
pub fn normal_modes(p: &EngineParams) -> NormalModes {
    let a = p.omega_a * p.omega_a;
    let b = p.omega_b * p.omega_b;
    let g = p.gamma2;
    let mut zeros = match p.topology {
        Topology::Joint => {
            // monic: y⁴ + c3 y³ + c2 y² + c1 y + c0
            let c = [a * b, g * (a + b), a + b, 2.0 * g];
            let companion = Matrix4::new(
                0.0, 0.0, 0.0, -c[0], //
                1.0, 0.0, 0.0, -c[1], //
                0.0, 1.0, 0.0, -c[2], //
                0.0, 0.0, 1.0, -c[3],
            );
            let eig = companion.complex_eigenvalues();
            let mut out = [Complex64::new(0.0, 0.0); 4];
            for (k, y) in eig.iter().enumerate() {
                let y = polish_quartic_root(&c, *y);
                out[k] = Complex64::i() * y;
            }
            out
        }
        Topology::Independent => {
            let [z1, z2] = damped_oscillator_roots(p.omega_a, g);
            let [z3, z4] = damped_oscillator_roots(p.omega_b, g);
            [z1, z2, z3, z4]
        }
    };
    sort_modes(&mut zeros);
    NormalModes { zeros }
}

fn polish_quartic_root(c: &[f64; 4], mut y: Complex64) -> Complex64 {
    let real_root = y.im == 0.0;
    for _ in 0..8 {
        let f = (((y + c[3]) * y + c[2]) * y + c[1]) * y + c[0];
        let df = ((4.0 * y + 3.0 * c[3]) * y + 2.0 * c[2]) * y + c[1];
        if df.norm_sqr() == 0.0 {
            break;
        }
        let step = f / df;
        if !step.re.is_finite() || !step.im.is_finite() {
            break;
        }
        y -= step;
        if step.norm() <= 1e-16 * y.norm() {
            break;
        }
    }
    if real_root {
        y.im = 0.0;
    }
    y
}

/// Roots of `z² + iγz − ω₀² = 0`, i.e. zeros of `ω₀² − z² − iγz`.
fn damped_oscillator_roots(omega0: f64, gamma: f64) -> [Complex64; 2] {
    let disc = 4.0 * omega0 * omega0 - gamma * gamma;
    if disc >= 0.0 {
        let r = disc.sqrt() / 2.0;
        [
            Complex64::new(r, -gamma / 2.0),
            Complex64::new(-r, -gamma / 2.0),
        ]
    } else {
        let s = (-disc).sqrt();
        // small root without cancellation: (γ − s)/2 = 2ω₀²/(γ + s)
        let slow = 2.0 * omega0 * omega0 / (gamma + s);
        let fast = (gamma + s) / 2.0;
        [Complex64::new(0.0, -slow), Complex64::new(0.0, -fast)]
    }
}

fn sort_modes(zeros: &mut [Complex64; 4]) {
    let scale = zeros.iter().map(|z| z.norm()).fold(0.0, f64::max).max(1.0);
    let tol = 1e-12 * scale;
    zeros.sort_by(|x, y| {
        if (x.re - y.re).abs() <= tol {
            y.im.total_cmp(&x.im)
        } else {
            y.re.total_cmp(&x.re)
        }
    });
}

/// Asymptotic damping regime.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Regime {
    Weak,
    Strong,
}

/// Closed-form χ″ in the weak- or strong-damping limit (joint topology).
///
/// Weak: two independent Lorentzian oscillators of width γ₂. Strong: locked
/// Lorentzians of width `|z₁″| = Δ⁴/(4γ₂ω̄²)` at ±ω̄ plus the overdamped term
/// of width `|z₂″| = (ω̄⁴ − Δ⁴)/(2γ₂ω̄²)` at ω = 0.
pub fn chi_asymptotic(p: &EngineParams, omega: f64, regime: Regime) -> [[f64; 2]; 2] {
    let g = p.gamma2;
    let w = omega;
    match regime {
        Regime::Weak => {
            let lor = |w0: f64| {
                let x = w * w - w0 * w0;
                w * g / (x * x + w * w * g * g)
            };
            [[lor(p.omega_a), 0.0], [0.0, lor(p.omega_b)]]
        }
        Regime::Strong => {
            let a = p.omega_a * p.omega_a;
            let b = p.omega_b * p.omega_b;
            let hybrid = hybrid_frequency(p);
            let d4 = detuning(p).powi(4);
            let h2 = hybrid * hybrid;
            let z1 = d4 / (4.0 * g * h2);
            let z2 = (h2 * h2 - d4) / (2.0 * g * h2);
            let slow = w / (a + b) * z2 / (w * w + z2 * z2);
            let locked = w / (2.0 * (a + b))
                * [1.0, -1.0]
                    .iter()
                    .map(|s| z1 / ((w + s * hybrid).powi(2) + z1 * z1))
                    .sum::<f64>();
            let aa = b / a * slow + locked;
            let bb = a / b * slow + locked;
            let ab = slow - locked;
            [[aa, ab], [ab, bb]]
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn params(gamma2: f64) -> EngineParams {
        EngineParams {
            gamma2,
            omega_c: f64::INFINITY,
            ..Default::default()
        }
    }

    fn close(a: f64, b: f64, rel: f64) -> bool {
        (a - b).abs() <= rel * a.abs().max(b.abs())
    }

    #[test]
    fn hybrid_frequency_reference() {
        let p = params(0.1);
        assert!((hybrid_frequency(&p) - 0.8246).abs() < 1e-4);
        assert!((detuning(&p).powi(4) - 0.1024).abs() < 1e-15);
    }

    #[test]
    fn denominator_examples() {
        let p = params(0.1);
        let d0 = denominator(&p, Complex64::new(0.0, 0.0));
        assert_eq!(d0, Complex64::new(0.36, 0.0));
        // polynomial-coefficient form: z⁴ + 2iγz³ − (a+b)z² − iγ(a+b)z + ab
        let z = Complex64::new(1.0, 0.0);
        let (a, b, g) = (1.0, 0.36, 0.1);
        let i = Complex64::i();
        let poly =
            z.powi(4) + 2.0 * i * g * z.powi(3) - (a + b) * z * z - i * g * (a + b) * z + a * b;
        let d = denominator(&p, z);
        assert!((d - Complex64::new(0.0, 0.064)).norm() < 1e-15);
        assert!((d - poly).norm() < 1e-15);
        for &w in &[0.3, 0.9, 2.5] {
            let dp = denominator(&p, Complex64::new(w, 0.0));
            let dm = denominator(&p, Complex64::new(-w, 0.0));
            assert!((dm - dp.conj()).norm() < 1e-15);
        }
    }

    #[test]
    fn chi_at_oscillator_frequency_is_localized() {
        let p = params(0.1);
        let m = chi2(&p, 1.0).unwrap().imag();
        assert!(close(m[0][0], 1.0 / 0.1, 1e-12));
        assert!(m[0][1].abs() < 1e-14 && m[1][1].abs() < 1e-14);
        let m = chi2(&p, 0.6).unwrap().imag();
        assert!(close(m[1][1], 1.0 / (0.1 * 0.6), 1e-12));
        assert!(m[0][0].abs() < 1e-12);
    }

    #[test]
    fn chi_at_hybrid_frequency_is_antisymmetric() {
        for &g in &[0.1, 3.0, 100.0] {
            let p = params(g);
            let h = hybrid_frequency(&p);
            let d4 = detuning(&p).powi(4);
            let m = chi2(&p, h).unwrap().imag();
            let v = g * h / d4;
            assert!(close(m[0][0], v, 1e-12));
            assert!(close(m[1][1], v, 1e-12));
            assert!(close(m[0][1], -v, 1e-12));
        }
    }

    #[test]
    fn finite_eigenvalue_examples() {
        let p = params(0.1);
        assert!(close(finite_eigenvalue(&p, 1.0), 1.0 / 0.1, 1e-12));
        let h = hybrid_frequency(&p);
        let d4 = detuning(&p).powi(4);
        assert!(close(finite_eigenvalue(&p, h), 2.0 * 0.1 * h / d4, 1e-12));
        assert_eq!(finite_eigenvalue(&p, 0.0), 0.0);
    }

    #[test]
    fn imaginary_part_over_omega_matches_complex_form() {
        for topology in [Topology::Joint, Topology::Independent] {
            for kernel in [DampingKernel::Ohmic, DampingKernel::Drude { cutoff: 50.0 }] {
                let p = EngineParams {
                    topology,
                    ..params(0.7)
                };
                for &w in &[-2.0, -0.3, 0.05, 0.8, 4.0] {
                    let m = chi2_with_kernel(&p, w, kernel).unwrap().imag();
                    let r = chi_im_over_omega(&p, w, kernel);
                    assert!(close(m[0][0], w * r[0], 1e-12));
                    assert!(close(m[1][1], w * r[2], 1e-12));
                    assert!((m[0][1] - w * r[1]).abs() <= 1e-12 * m[0][0].abs());
                }
            }
        }
    }

    #[test]
    fn weak_damping_poles() {
        let p = params(1e-3);
        let z = normal_modes(&p).zeros;
        let expected = [(1.0, -5e-4), (0.6, -5e-4), (-0.6, -5e-4), (-1.0, -5e-4)];
        for (zj, (re, im)) in z.iter().zip(expected) {
            assert!((zj.re - re).abs() < 1e-4, "{zj}");
            assert!((zj.im - im).abs() < 1e-6, "{zj}");
        }
    }

    #[test]
    fn strong_damping_poles() {
        let p = params(100.0);
        let z = normal_modes(&p).zeros;
        let h = hybrid_frequency(&p);
        let d4 = 0.1024;
        assert!(((z[0].re - h) / h).abs() < 1e-3);
        let z1_im = -d4 / (4.0 * 100.0 * h * h);
        assert!(((z[0].im - z1_im) / z1_im).abs() < 0.02);
        assert!((z1_im + 3.76e-4).abs() < 1e-6);
        let z2_im = -(h.powi(4) - d4) / (2.0 * 100.0 * h * h);
        assert!(z[1].re.abs() < 1e-12 && ((z[1].im - z2_im) / z2_im).abs() < 0.02);
        assert!((z2_im + 0.00265).abs() < 1e-5);
        assert!(z[2].re.abs() < 1e-12 && ((z[2].im + 200.0) / 200.0).abs() < 0.01);
    }

    #[test]
    fn vieta_product_and_residuals() {
        for &g in &[1e-3, 0.1, 1.0, 0.4, 10.0, 100.0, 1e4] {
            let p = params(g);
            let z = normal_modes(&p).zeros;
            let prod = z.iter().fold(Complex64::new(1.0, 0.0), |acc, x| acc * x);
            assert!(
                (prod - Complex64::new(0.36, 0.0)).norm() < 1e-9 * 0.36,
                "g={g} {prod}"
            );
            for zj in z {
                let r = denominator(&p, zj).norm();
                assert!(r <= 1e-9 * zj.norm().max(1.0).powi(4), "g={g} {zj} {r}");
                assert!(zj.im < 0.0);
            }
            // {z, −z*} pairing
            for zj in z {
                let partner = -zj.conj();
                assert!(z
                    .iter()
                    .any(|w| (w - partner).norm() < 1e-9 * zj.norm().max(1.0)));
            }
        }
    }

    #[test]
    fn independent_modes_strong_limit() {
        let p = EngineParams {
            topology: Topology::Independent,
            ..params(100.0)
        };
        let z = normal_modes(&p).zeros;
        for zj in z {
            assert_eq!(zj.re, 0.0);
        }
        let mut ims: Vec<f64> = z.iter().map(|x| -x.im).collect();
        ims.sort_by(f64::total_cmp);
        let expected = [0.36 / 100.0, 1.0 / 100.0, 100.0, 100.0];
        for (got, want) in ims.iter().zip(expected) {
            assert!(close(*got, want, 2e-3), "{got} vs {want}");
        }
    }

    #[test]
    fn weak_asymptote_peak_and_uniform_error() {
        let p = params(1e-3);
        let weak = chi_asymptotic(&p, 1.0, Regime::Weak);
        assert!(close(weak[0][0], 1000.0, 1e-9));
        let exact = chi2(&p, 1.0).unwrap().imag();
        assert!(close(exact[0][0], 1000.0, 5e-3));

        let mut max_exact: f64 = 0.0;
        let mut max_diff: f64 = 0.0;
        let n = 200_000;
        for k in 0..=n {
            let w = 0.3 + k as f64 / n as f64;
            let e = chi2(&p, w).unwrap().imag();
            let a = chi_asymptotic(&p, w, Regime::Weak);
            for i in 0..2 {
                for j in 0..2 {
                    max_exact = max_exact.max(e[i][j].abs());
                    max_diff = max_diff.max((e[i][j] - a[i][j]).abs());
                }
            }
        }
        assert!(max_diff / max_exact <= 5e-3, "{}", max_diff / max_exact);
    }

    #[test]
    fn strong_asymptote_peak() {
        let p = params(100.0);
        let h = hybrid_frequency(&p);
        // golden-section search for the exact χ^(AA)″ maximum near ω̄
        let f = |w: f64| chi2(&p, w).unwrap().imag()[0][0];
        let (mut lo, mut hi) = (h - 0.01, h + 0.01);
        let r = (5f64.sqrt() - 1.0) / 2.0;
        for _ in 0..200 {
            let x1 = hi - r * (hi - lo);
            let x2 = lo + r * (hi - lo);
            if f(x1) < f(x2) {
                lo = x1;
            } else {
                hi = x2;
            }
        }
        let peak = 0.5 * (lo + hi);
        assert!((peak - h).abs() < 1e-3);
        let strong = chi_asymptotic(&p, peak, Regime::Strong)[0][0];
        assert!(close(f(peak), strong, 0.02));
        // phase locking: the cross response mirrors the diagonal at ω̄
        let s = chi_asymptotic(&p, h, Regime::Strong);
        assert!(close(s[0][1], -s[0][0], 0.01));
        let e = chi2(&p, h).unwrap().imag();
        assert!(close(e[0][1], -e[0][0], 1e-12));
        for regime in [Regime::Weak, Regime::Strong] {
            let z = chi_asymptotic(&p, 0.0, regime);
            assert!(z.iter().flatten().all(|x| *x == 0.0));
        }
    }

    #[test]
    fn effective_response_phases() {
        let p = params(100.0);
        let h = hybrid_frequency(&p);
        let d4 = detuning(&p).powi(4);
        let m = chi2(&p, 0.7).unwrap().value;
        let half = chi_eff(&p, 0.7, std::f64::consts::FRAC_PI_2).unwrap();
        assert!((half - (m[0][0] + m[1][1])).norm() < 1e-12 * half.norm());
        let anti = chi_eff(&p, h, std::f64::consts::PI).unwrap();
        assert!(close(anti.im, 4.0 * 100.0 * h / d4, 1e-12));
        let same = chi_eff(&p, h, 0.0).unwrap();
        assert!(same.im.abs() < 1e-9 * anti.im);
        let ind = EngineParams {
            topology: Topology::Independent,
            ..p
        };
        let a = chi_eff(&ind, 0.5, 0.0).unwrap();
        let b = chi_eff(&ind, 0.5, 2.0).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn kramers_kronig_static_response() {
        // χ′(0) = (2/π) ∫₀^∞ χ″(ω)/ω dω, truncated at 50ω̄ plus the γ/(3X³) tail
        for &g in &[0.1, 1.0, 10.0] {
            let p = params(g);
            let cutoff = 50.0 * hybrid_frequency(&p);
            let f = |w: f64| chi_im_over_omega(&p, w, DampingKernel::Ohmic)[0];
            let q = crate::integrate::integrate_interval(&f, 0.0, cutoff, &peaks(&p), 1e-12, 1e-14)
                .unwrap();
            let tail = g / (3.0 * cutoff.powi(3));
            let kk = 2.0 / std::f64::consts::PI * (q.value + tail);
            let direct = chi2(&p, 0.0).unwrap().real()[0][0];
            assert!(close(kk, direct, 1e-4), "g={g} kk={kk} direct={direct}");
        }
    }

    fn peaks(p: &EngineParams) -> Vec<crate::integrate::Breakpoint> {
        normal_modes(p)
            .zeros
            .iter()
            .map(|z| crate::integrate::Breakpoint::new(z.re, z.im.abs()))
            .collect()
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn null_eigenvalue_symmetry_and_passivity(w in 1e-3f64..5.0, gi in 0usize..5) {
            let g = [0.01, 0.1, 1.0, 10.0, 100.0][gi];
            let p = params(g);
            let m = chi2(&p, w).unwrap().imag();
            let max = m.iter().flatten().fold(0.0f64, |a, x| a.max(x.abs()));
            let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
            prop_assert!(det.abs() <= 1e-12 * max * max);
            prop_assert!(close(m[0][0] + m[1][1], finite_eigenvalue(&p, w), 1e-12));
            prop_assert_eq!(m[0][1], m[1][0]);
            prop_assert!(w * m[0][0] >= 0.0 && w * m[1][1] >= 0.0);
            let n = chi2(&p, -w).unwrap().imag();
            for i in 0..2 { for j in 0..2 { prop_assert!((n[i][j] + m[i][j]).abs() <= 1e-15 * max); } }
        }
    }
}
