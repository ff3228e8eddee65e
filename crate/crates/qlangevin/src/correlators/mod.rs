//! Noise correlators `J_{q_i q_j}(t)` and their time derivatives, asymptotic variances.
//!
//! Every correlator is a single frequency integral
//! `J_qr(t) = ∫₀^∞ ρ(ω) Σ_k w_k Re[F̄_qk(ω,t) F_rk(ω,t)] dω`,
//! with `ρ(ω) = (γ²/π)·ω coth(ω/2T)/(ω² + γ²)`, axis weights `w_k = m_k λ_k`, and
//! `F(ω,t) = ∫₀ᵗ f(τ) e^{iωτ} dτ` in closed form for each exponential-sum kernel `f`.
//! The range `[Ω, ∞)` is integrated analytically from the large-`ω` expansion of `F`.

mod asymptotic;
mod brute;
mod low_temperature;

pub use asymptotic::{
    asymptotic_variances_quadrature, high_temperature_variances, AsymptoticVariances, VarianceForm,
};
pub use brute::brute_force_correlator;
pub use low_temperature::{low_temperature_variances, LowTemperatureForm};
pub(crate) use low_temperature::{check_resonance, lnr, real};

use std::f64::consts::PI;

use nalgebra::Matrix4;
use num_complex::Complex64;

use crate::bath::{omega_coth, Axis};
use crate::charpoly::RootSet;
use crate::error::{Error, Result};
use crate::params::SystemParams;
use crate::propagator::{PropagatorSet, IMAG_TOL};
use crate::quadrature::{breakpoints, integrate_vector, QuadratureSpec, TailMoments};

/// Highest power of `Ω/ω` kept in the analytic tail.
const TAIL_ORDER: usize = 30;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Component {
    X = 0,
    Y = 1,
    PiX = 2,
    PiY = 3,
}

/// The ten independent pairs, in storage order.
pub const PAIRS: [(usize, usize); 10] =
    [(0, 0), (1, 1), (0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 2), (3, 3), (2, 3)];

pub const PAIR_NAMES: [&str; 10] =
    ["xx", "yy", "xy", "xpix", "xpiy", "ypix", "ypiy", "pixpix", "piypiy", "pixpiy"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Pair {
    XX = 0,
    YY = 1,
    XY = 2,
    XPix = 3,
    XPiy = 4,
    YPix = 5,
    YPiy = 6,
    PixPix = 7,
    PiyPiy = 8,
    PixPiy = 9,
}

/// Storage index of the unordered pair `(q, r)`.
pub fn pair_index(q: Component, r: Component) -> usize {
    let (a, b) = ((q as usize).min(r as usize), (q as usize).max(r as usize));
    PAIRS.iter().position(|&p| p == (a, b)).expect("every pair is stored")
}

/// Symmetric 4×4 matrix from the ten stored entries.
pub fn pairs_to_matrix(v: &[f64; 10]) -> Matrix4<f64> {
    let mut m = Matrix4::zeros();
    for (k, &(i, j)) in PAIRS.iter().enumerate() {
        m[(i, j)] = v[k];
        m[(j, i)] = v[k];
    }
    m
}

pub fn matrix_to_pairs(m: &Matrix4<f64>) -> [f64; 10] {
    std::array::from_fn(|k| {
        let (i, j) = PAIRS[k];
        0.5 * (m[(i, j)] + m[(j, i)])
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CorrelatorSet {
    pub t: f64,
    pub j: [f64; 10],
    pub j_dot: [f64; 10],
    /// Quadrature error estimates for `j`.
    pub error: [f64; 10],
}

impl CorrelatorSet {
    pub fn zero(t: f64) -> Self {
        Self { t, j: [0.0; 10], j_dot: [0.0; 10], error: [0.0; 10] }
    }

    pub fn get(&self, pair: Pair) -> f64 {
        self.j[pair as usize]
    }

    pub fn get_dot(&self, pair: Pair) -> f64 {
        self.j_dot[pair as usize]
    }

    pub fn matrix(&self) -> Matrix4<f64> {
        pairs_to_matrix(&self.j)
    }

    pub fn dot_matrix(&self) -> Matrix4<f64> {
        pairs_to_matrix(&self.j_dot)
    }
}

/// One noise kernel `c0 + Σ a_i e^{s_i t}` in a shared rate basis.
#[derive(Debug, Clone, Copy)]
struct Kernel {
    c0: f64,
    a: [Complex64; 4],
}

impl Kernel {
    fn value(&self, e: &[Complex64; 4]) -> f64 {
        self.c0 + (0..4).map(|i| self.a[i] * e[i]).sum::<Complex64>().re
    }
}

/// `(e^{zt} − 1)/z` with `z = a + ib`, computed without cancellation.
fn phi(a: f64, b: f64, t: f64) -> Complex64 {
    let (at, bt) = (a * t, b * t);
    let z = Complex64::new(a, b);
    let zt = z * t;
    if zt.norm() < 1e-3 {
        let mut term = Complex64::new(t, 0.0);
        let mut sum = term;
        for k in 2..8 {
            term *= zt / k as f64;
            sum += term;
        }
        return sum;
    }
    let em = at.exp_m1();
    let (sb, cb) = bt.sin_cos();
    let half = (0.5 * bt).sin();
    let num = Complex64::new(em * cb - 2.0 * half * half, (em + 1.0) * sb);
    num / z
}

/// Precomputed kernels for repeated evaluation of all ten correlators.
#[derive(Debug, Clone)]
pub struct CorrelatorEngine {
    rates: [Complex64; 4],
    kernels: [[Kernel; 2]; 4],
    weights: [f64; 2],
    gamma: f64,
    temperature: f64,
    splits: Vec<f64>,
    cut: f64,
}

impl CorrelatorEngine {
    pub fn new(p: &SystemParams, props: &PropagatorSet, roots: &RootSet) -> Result<Self> {
        let nk = props.noise_kernels();
        let mut kernels = [[Kernel { c0: 0.0, a: [Complex64::new(0.0, 0.0); 4] }; 2]; 4];
        for (c, pair) in nk.iter().enumerate() {
            for (k, f) in pair.iter().enumerate() {
                if f.c1.norm() != 0.0 || f.terms.len() != 4 {
                    return Err(Error::InvalidArgument("noise kernel outside the shared rate basis".into()));
                }
                if f.c0.im.abs() > IMAG_TOL * (1.0 + f.c0.re.abs()) {
                    return Err(Error::ImaginaryResidue { context: "noise kernel constant", imag: f.c0.im });
                }
                let mut a = [Complex64::new(0.0, 0.0); 4];
                for (i, &(ai, si)) in f.terms.iter().enumerate() {
                    if si != roots.roots[i] {
                        return Err(Error::InvalidArgument("noise kernel rates out of root order".into()));
                    }
                    a[i] = ai;
                }
                kernels[c][k] = Kernel { c0: f.c0.re, a };
            }
        }
        let mut splits = vec![p.gamma, 2.0 * p.temperature];
        for s in &roots.roots {
            splits.push(s.norm());
            splits.push(s.im.abs());
        }
        let cut = (4.0 * roots.max_modulus().max(p.gamma)).max(40.0 * p.temperature);
        Ok(Self {
            rates: roots.roots,
            kernels,
            weights: [Axis::X.coupling(p), Axis::Y.coupling(p)],
            gamma: p.gamma,
            temperature: p.temperature,
            splits,
            cut,
        })
    }

    pub fn from_params(p: &SystemParams) -> Result<Self> {
        let (roots, props) = crate::propagator::build_from_params(p)?;
        Self::new(p, &props, &roots)
    }

    /// Start of the analytic tail.
    pub fn cutoff(&self) -> f64 {
        self.cut
    }

    /// Bath density `ρ(ω)`.
    fn rho(&self, w: f64) -> f64 {
        let g2 = self.gamma * self.gamma;
        g2 / PI * omega_coth(w, self.temperature) / (w * w + g2)
    }

    /// Kernel values `f_ck(t)`.
    fn values_at(&self, t: f64) -> [[f64; 2]; 4] {
        let e: [Complex64; 4] = std::array::from_fn(|i| (self.rates[i] * t).exp());
        std::array::from_fn(|c| std::array::from_fn(|k| self.kernels[c][k].value(&e)))
    }

    /// All ten `J` and `J̇` at time `t`.
    pub fn at(&self, t: f64, spec: &QuadratureSpec) -> Result<CorrelatorSet> {
        if !(t >= 0.0) || !t.is_finite() {
            return Err(Error::InvalidArgument(format!("time must be finite and nonnegative, got {t}")));
        }
        if t == 0.0 {
            return Ok(CorrelatorSet::zero(0.0));
        }
        let fvals = self.values_at(t);
        let e: [Complex64; 4] = std::array::from_fn(|i| (self.rates[i] * t).exp());
        let integrand = |w: f64, out: &mut [f64]| {
            let (sw, cw) = (w * t).sin_cos();
            let eiw = Complex64::new(cw, sw);
            let p0 = phi(0.0, w, t);
            let ph: [Complex64; 4] = std::array::from_fn(|i| phi(self.rates[i].re, self.rates[i].im + w, t));
            let mut f = [[Complex64::new(0.0, 0.0); 2]; 4];
            let mut g = [[Complex64::new(0.0, 0.0); 2]; 4];
            for c in 0..4 {
                for k in 0..2 {
                    let kern = &self.kernels[c][k];
                    let mut v = p0 * kern.c0;
                    for i in 0..4 {
                        v += kern.a[i] * ph[i];
                    }
                    f[c][k] = v;
                    g[c][k] = eiw * fvals[c][k];
                }
            }
            let r = self.rho(w);
            for (n, &(q, s)) in PAIRS.iter().enumerate() {
                let mut jv = 0.0;
                let mut jd = 0.0;
                for k in 0..2 {
                    let wk = self.weights[k];
                    jv += wk * (f[q][k].conj() * f[s][k]).re;
                    jd += wk * ((g[q][k].conj() * f[s][k]).re + (f[q][k].conj() * g[s][k]).re);
                }
                out[n] = r * jv;
                out[10 + n] = r * jd;
            }
        };
        let qspec = spec.with_split_points(self.splits.iter().copied());
        let breaks = breakpoints(&qspec, self.cut);
        let width = 2.0 * PI / t;
        let body = integrate_vector(integrand, 20, &breaks, width, &qspec)?;
        let tail = self.tail(t, &fvals, &e);
        let mut out = CorrelatorSet::zero(t);
        for n in 0..10 {
            out.j[n] = body[n].value + tail[n];
            out.j_dot[n] = body[10 + n].value + tail[10 + n];
            out.error[n] = body[n].error;
        }
        Ok(out)
    }

    /// `∫_Ω^∞` of every integrand, from exact expansions in `x = Ω/ω`.
    fn tail(&self, t: f64, fvals: &[[f64; 2]; 4], e: &[Complex64; 4]) -> [f64; 20] {
        let om = self.cut;
        let n = TAIL_ORDER;
        let zero = Complex64::new(0.0, 0.0);
        let i = Complex64::new(0.0, 1.0);
        // F = e^{iωt}·P + Q with P_{k+1} = −i·i^k·f^{(k)}(t)/Ω^{k+1}, Q_{k+1} = i·i^k·f^{(k)}(0)/Ω^{k+1}
        let mut pc = [[vec![zero; n + 1], vec![zero; n + 1]], [vec![zero; n + 1], vec![zero; n + 1]], [vec![zero; n + 1], vec![zero; n + 1]], [vec![zero; n + 1], vec![zero; n + 1]]];
        let mut qc = pc.clone();
        for c in 0..4 {
            for k in 0..2 {
                let kern = &self.kernels[c][k];
                let mut at_t: [Complex64; 4] = std::array::from_fn(|j| kern.a[j] * e[j] / om);
                let mut at_0: [Complex64; 4] = std::array::from_fn(|j| kern.a[j] / om);
                let mut ik = Complex64::new(1.0, 0.0);
                for d in 0..n {
                    let mut ft: Complex64 = at_t.iter().sum();
                    let mut f0: Complex64 = at_0.iter().sum();
                    if d == 0 {
                        ft += kern.c0 / om;
                        f0 += kern.c0 / om;
                    }
                    pc[c][k][d + 1] = -i * ik * ft.re;
                    qc[c][k][d + 1] = i * ik * f0.re;
                    ik *= i;
                    for j in 0..4 {
                        at_t[j] *= self.rates[j] / om;
                        at_0[j] *= self.rates[j] / om;
                    }
                }
            }
        }
        // ρ beyond Ω: (γ²/π) Σ_m (−γ²)^m ω^{−(2m+1)}
        let g2 = self.gamma * self.gamma;
        let mut rho = vec![0.0; n + 1];
        let mut m = 0;
        while 2 * m + 1 <= n {
            rho[2 * m + 1] = g2 / PI * (-g2).powi(m as i32) * om.powi(-(2 * m as i32 + 1));
            m += 1;
        }
        let tm = TailMoments::new(om, t, n);
        let mut out = [0.0; 20];
        for (idx, &(q, r)) in PAIRS.iter().enumerate() {
            let mut nsum = vec![0.0; n + 1];
            let mut zsum = vec![zero; n + 1];
            let mut ndot = vec![0.0; n + 1];
            let mut zdot = vec![zero; n + 1];
            for k in 0..2 {
                let wk = self.weights[k];
                let (pq, pr, qq, qr) = (&pc[q][k], &pc[r][k], &qc[q][k], &qc[r][k]);
                for a in 1..=n {
                    for b in 1..=n - a {
                        let nn = pq[a].conj() * pr[b] + qq[a].conj() * qr[b];
                        let zz = qq[a].conj() * pr[b] + pq[a] * qr[b].conj();
                        nsum[a + b] += wk * nn.re;
                        zsum[a + b] += wk * zz;
                    }
                    let (fq, fr) = (fvals[q][k], fvals[r][k]);
                    ndot[a] += wk * (fq * pr[a] + fr * pq[a].conj()).re;
                    zdot[a] += wk * (fq * qr[a].conj() + fr * qq[a].conj());
                }
            }
            let (mut cj, mut dj) = (vec![0.0; n + 1], vec![zero; n + 1]);
            let (mut cd, mut dd) = (vec![0.0; n + 1], vec![zero; n + 1]);
            for a in 1..=n {
                if rho[a] == 0.0 {
                    continue;
                }
                for b in 1..=n - a {
                    cj[a + b] += rho[a] * nsum[b];
                    dj[a + b] += zsum[b] * rho[a];
                    cd[a + b] += rho[a] * ndot[b];
                    dd[a + b] += zdot[b] * rho[a];
                }
            }
            out[idx] = tm.integrate_plain(&cj) + tm.integrate_osc(&dj);
            out[10 + idx] = tm.integrate_plain(&cd) + tm.integrate_osc(&dd);
        }
        out
    }
}

/// All ten correlators at `t`.
pub fn correlators_at(
    p: &SystemParams,
    props: &PropagatorSet,
    roots: &RootSet,
    t: f64,
    spec: &QuadratureSpec,
) -> Result<CorrelatorSet> {
    CorrelatorEngine::new(p, props, roots)?.at(t, spec)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::propagator::build_from_params;

    fn demo(t: f64) -> (SystemParams, CorrelatorEngine) {
        let p = SystemParams { lambda_y: 2.0, omega_cx: 2.0, omega_cy: 2.0, temperature: t, ..SystemParams::default() };
        let e = CorrelatorEngine::from_params(&p).unwrap();
        (p, e)
    }

    #[test]
    fn phi_is_stable() {
        let exact = |a: f64, b: f64, t: f64| {
            let z = Complex64::new(a, b);
            ((z * t).exp() - 1.0) / z
        };
        for (a, b, t) in [(-1.0, 3.0, 2.0), (0.0, 1e-7, 1.0), (-3e-4, 2e-4, 1.5), (-12.0, 0.0, 0.01)] {
            let d = phi(a, b, t) - exact(a, b, t);
            assert!(d.norm() < 1e-9 * exact(a, b, t).norm(), "{a} {b} {t}");
        }
        assert!((phi(0.0, 1e-12, 2.0) - Complex64::new(2.0, 0.0)).norm() < 1e-11);
    }

    #[test]
    fn vanishes_at_time_zero() {
        let (_, e) = demo(0.5);
        let c = e.at(0.0, &QuadratureSpec::default()).unwrap();
        assert!(c.j.iter().chain(&c.j_dot).all(|v| *v == 0.0));
    }

    #[test]
    fn reference_values() {
        // time-domain reference at t = 2, T = 0.5
        let (_, e) = demo(0.5);
        let c = e.at(2.0, &QuadratureSpec::with_tol(1e-10)).unwrap();
        assert!((c.get(Pair::PixPix) - 1.4279694).abs() < 2e-7, "{}", c.get(Pair::PixPix));
        assert!((c.get(Pair::XPiy) + 0.3840667).abs() < 2e-7, "{}", c.get(Pair::XPiy));
        assert!((c.get(Pair::XPix) - 0.1524105).abs() < 2e-7, "{}", c.get(Pair::XPix));
    }

    #[test]
    fn derivative_matches_finite_difference() {
        let (_, e) = demo(0.3);
        let spec = QuadratureSpec::with_tol(1e-12);
        let (t, h) = (1.3, 1e-4);
        let c = e.at(t, &spec).unwrap();
        let up = e.at(t + h, &spec).unwrap();
        let dn = e.at(t - h, &spec).unwrap();
        for n in 0..10 {
            let fd = (up.j[n] - dn.j[n]) / (2.0 * h);
            assert!((fd - c.j_dot[n]).abs() < 1e-6 * (1.0 + c.j_dot[n].abs()), "{}: {fd} vs {}", PAIR_NAMES[n], c.j_dot[n]);
        }
    }

    #[test]
    fn field_free_cross_terms_vanish() {
        let p = SystemParams { lambda_y: 2.0, temperature: 0.2, ..SystemParams::default() };
        let e = CorrelatorEngine::from_params(&p).unwrap();
        let c = e.at(1.5, &QuadratureSpec::default()).unwrap();
        for pair in [Pair::XPiy, Pair::YPix, Pair::XY, Pair::PixPiy] {
            assert!(c.get(pair).abs() < 1e-11, "{pair:?}");
        }
    }

    #[test]
    fn swap_maps_components() {
        let p = SystemParams {
            mass_y: 2.0,
            lambda_y: 3.0,
            omega_cx: 1.0,
            omega_cy: 0.5,
            temperature: 0.4,
            ..SystemParams::default()
        };
        let spec = QuadratureSpec::with_tol(1e-10);
        let a = CorrelatorEngine::from_params(&p).unwrap().at(1.1, &spec).unwrap();
        let b = CorrelatorEngine::from_params(&p.swap_xy()).unwrap().at(1.1, &spec).unwrap();
        // under x↔y the field reverses sense: ω_c → −ω_c in the swapped frame, so odd pairs flip sign
        let map = [(Pair::XX, Pair::YY, 1.0), (Pair::PixPix, Pair::PiyPiy, 1.0), (Pair::XPix, Pair::YPiy, 1.0), (Pair::XPiy, Pair::YPix, -1.0)];
        for (u, v, sign) in map {
            assert!((a.get(u) - sign * b.get(v)).abs() < 1e-8 * (1.0 + a.get(u).abs()), "{u:?}: {} vs {}", a.get(u), b.get(v));
        }
    }

    #[test]
    fn long_time_momentum_variance_converges() {
        let p = SystemParams { lambda_y: 2.0, omega_cx: 2.0, omega_cy: 2.0, temperature: 0.5, ..SystemParams::default() };
        let (roots, props) = build_from_params(&p).unwrap();
        let e = CorrelatorEngine::new(&p, &props, &roots).unwrap();
        let c = e.at(40.0, &QuadratureSpec::with_tol(1e-10)).unwrap();
        assert!((c.get(Pair::PixPix) - 1.42879412937).abs() < 1e-6, "{}", c.get(Pair::PixPix));
        assert!((c.get(Pair::XPiy) + 0.36283372129).abs() < 1e-4, "{}", c.get(Pair::XPiy));
    }
}
