//! Drude bath: memory kernels, spectral weights, the thermal factor and the
//! fluctuation–dissipation residual.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::params::SystemParams;
use crate::quadrature::{
    breakpoints, expint_e1_scaled, expint_ei_scaled, integrate_vector, QuadratureSpec, TailMoments,
};

/// Below this value of `ω/2T` the thermal factor switches to its Laurent series.
pub const COTH_SERIES_THRESHOLD: f64 = 1e-4;

const TAIL_TERMS: usize = 40;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Axis {
    X,
    Y,
}

impl Axis {
    pub const BOTH: [Axis; 2] = [Axis::X, Axis::Y];

    /// `m_k λ_k`, the Markovian friction strength of the axis.
    pub fn coupling(self, p: &SystemParams) -> f64 {
        match self {
            Axis::X => p.mass_x * p.lambda_x,
            Axis::Y => p.mass_y * p.lambda_y,
        }
    }
}

/// `K_kk(τ) = m_k λ_k γ e^{−γ|τ|}`.
pub fn kernel(p: &SystemParams, axis: Axis, tau: f64) -> f64 {
    axis.coupling(p) * p.gamma * (-p.gamma * tau.abs()).exp()
}

/// `w_k(ω) = m_k λ_k γ² ω / (π(γ² + ω²))`.
pub fn spectral_weight(p: &SystemParams, axis: Axis, omega: f64) -> f64 {
    let g2 = p.gamma * p.gamma;
    axis.coupling(p) * g2 * omega / (PI * (g2 + omega * omega))
}

/// `coth(ω/2T)`, exactly 1 at `T = 0`.
pub fn coth_kernel(omega: f64, temperature: f64) -> f64 {
    if temperature == 0.0 {
        return 1.0;
    }
    let x = omega / (2.0 * temperature);
    if x < COTH_SERIES_THRESHOLD {
        1.0 / x + x / 3.0
    } else {
        1.0 / x.tanh()
    }
}

/// `ω·coth(ω/2T)`, finite (→ 2T) at `ω = 0`.
pub fn omega_coth(omega: f64, temperature: f64) -> f64 {
    if temperature == 0.0 {
        return omega;
    }
    let x = omega / (2.0 * temperature);
    if x < COTH_SERIES_THRESHOLD {
        2.0 * temperature * (1.0 + x * x / 3.0)
    } else {
        omega / x.tanh()
    }
}

/// `tanh(ω/2T)`, exactly 1 at `T = 0`.
pub fn tanh_kernel(omega: f64, temperature: f64) -> f64 {
    if temperature == 0.0 {
        1.0
    } else {
        (omega / (2.0 * temperature)).tanh()
    }
}

/// `∫₀^∞ g(ω)·cos(ωτ) dω` for each `τ`, where `g` is smooth and, beyond `cut`, equals
/// `Σ_n tail[n]·(cut/ω)^n` with `tail[0] = 0`.
fn cosine_transform<G>(g: G, taus: &[f64], cut: f64, tail: &[f64], spec: &QuadratureSpec) -> Result<Vec<f64>>
where
    G: Fn(f64) -> f64,
{
    let mut out = Vec::with_capacity(taus.len());
    let breaks = breakpoints(spec, cut);
    for &tau in taus {
        let width = if tau > 0.0 { PI / tau } else { f64::INFINITY };
        let body = integrate_vector(|w, o| o[0] = g(w) * (w * tau).cos(), 1, &breaks, width, spec)?[0].value;
        let tm = TailMoments::new(cut, tau, tail.len() - 1);
        let rest = if tau > 0.0 {
            let d: Vec<Complex64> = tail.iter().map(|&c| Complex64::new(c, 0.0)).collect();
            tm.integrate_osc(&d)
        } else {
            if tail.get(1).copied().unwrap_or(0.0) != 0.0 {
                return Err(Error::InvalidArgument("cosine transform diverges at tau = 0".into()));
            }
            tm.integrate_plain(tail)
        };
        out.push(body + rest);
    }
    Ok(out)
}

/// Laurent coefficients in `x = cut/ω` of `scale·ω/(γ² + ω²)` (`odd`) or `scale/(γ² + ω²)`.
fn lorentz_tail(scale: f64, gamma: f64, cut: f64, odd: bool) -> Vec<f64> {
    let mut c = vec![0.0; TAIL_TERMS + 1];
    let shift = if odd { 1 } else { 2 };
    let mut m = 0;
    while 2 * m + shift <= TAIL_TERMS {
        let n = 2 * m + shift;
        c[n] = scale * (-gamma * gamma).powi(m as i32) * cut.powi(-(n as i32));
        m += 1;
    }
    c
}

fn check_grid(p: &SystemParams, taus: &[f64]) -> Result<()> {
    let hi = 10.0 / p.gamma * (1.0 + 1e-12);
    if taus.iter().any(|&t| !(0.0..=hi).contains(&t)) {
        return Err(Error::InvalidArgument("tau grid must lie in [0, 10/gamma]".into()));
    }
    Ok(())
}

fn split_spec(p: &SystemParams, spec: &QuadratureSpec) -> QuadratureSpec {
    spec.with_split_points([p.gamma, 2.0 * p.temperature])
}

/// Largest `|∫₀^∞ 2w_k(ω)·coth·tanh/ω·cos(ωτ) dω − K_kk(τ)| / K_kk(0)` over both axes and `τ`.
pub fn fdr_residual(p: &SystemParams, taus: &[f64], spec: &QuadratureSpec) -> Result<f64> {
    check_grid(p, taus)?;
    let g = p.gamma;
    let cut = 4.0 * g;
    let spec = split_spec(p, spec);
    let mut worst: f64 = 0.0;
    for axis in Axis::BOTH {
        let a = 2.0 * axis.coupling(p) * g * g / PI;
        let t = p.temperature;
        let integrand = |w: f64| a / (g * g + w * w) * coth_kernel(w, t) * tanh_kernel(w, t);
        let tail = lorentz_tail(a, g, cut, false);
        let vals = cosine_transform(integrand, taus, cut, &tail, &spec)?;
        let k0 = kernel(p, axis, 0.0);
        for (&tau, v) in taus.iter().zip(vals) {
            worst = worst.max((v - kernel(p, axis, tau)).abs() / k0);
        }
    }
    Ok(worst)
}

/// Classical counterpart of [`fdr_residual`]: `tanh(ω/2T)/ω` is replaced by `1/(2T)`.
///
/// The integrand then decays as `1/ω`, so `τ = 0` is not admissible.
pub fn classical_fdr_residual(p: &SystemParams, taus: &[f64], spec: &QuadratureSpec) -> Result<f64> {
    check_grid(p, taus)?;
    if p.temperature <= 0.0 {
        return Err(Error::InvalidArgument("classical residual needs T > 0".into()));
    }
    if taus.iter().any(|&t| t <= 0.0) {
        return Err(Error::InvalidArgument("classical residual needs tau > 0".into()));
    }
    let g = p.gamma;
    let t = p.temperature;
    let cut = (4.0 * g).max(40.0 * t);
    let spec = split_spec(p, spec);
    let mut worst: f64 = 0.0;
    for axis in Axis::BOTH {
        let a = axis.coupling(p) * g * g / (PI * t);
        let integrand = |w: f64| a * omega_coth(w, t) / (g * g + w * w);
        let tail = lorentz_tail(a, g, cut, true);
        let vals = cosine_transform(integrand, taus, cut, &tail, &spec)?;
        let k0 = kernel(p, axis, 0.0);
        for (&tau, v) in taus.iter().zip(vals) {
            worst = worst.max((v - kernel(p, axis, tau)).abs() / k0);
        }
    }
    Ok(worst)
}

/// Symmetrized noise correlation per unit coupling,
/// `c(u) = (γ²/π) ∫₀^∞ ω coth(ω/2T) cos(ωu)/(ω² + γ²) dω`, for `u ≠ 0`.
///
/// The zero-temperature part is closed form; the thermal excess is integrated directly.
pub fn unit_noise_correlation(gamma: f64, temperature: f64, u: f64, spec: &QuadratureSpec) -> Result<f64> {
    let x = gamma * u.abs();
    if x == 0.0 {
        return Err(Error::InvalidArgument("noise correlation is singular at u = 0".into()));
    }
    let cold = -(gamma * gamma / (2.0 * PI)) * (expint_ei_scaled(x) - expint_e1_scaled(x));
    if temperature == 0.0 {
        return Ok(cold);
    }
    // ω(coth − 1) = 2ω/(e^{ω/T} − 1)
    let t = temperature;
    let excess = |w: f64| {
        let bose = if w < 1e-8 * t { 2.0 * t - w } else { 2.0 * w / (w / t).exp_m1() };
        bose / (w * w + gamma * gamma)
    };
    let cut = 50.0 * t;
    let s = spec.with_split_points([gamma, 2.0 * t, t]);
    let width = PI / u.abs();
    let r = integrate_vector(|w, o| o[0] = excess(w) * (w * u).cos(), 1, &breakpoints(&s, cut), width, &s)?;
    Ok(cold + gamma * gamma / PI * r[0].value)
}
