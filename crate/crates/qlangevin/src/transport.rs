//! Time-dependent friction coefficients and renormalized cyclotron frequencies.

use num_complex::Complex64;

use crate::charpoly::RootSet;
use crate::error::{Error, Result};
use crate::params::SystemParams;
use crate::propagator::{ExpSum, PropagatorSet};

/// Relative size below which `C1·D1 + C2·D2` counts as vanished.
pub const DENOMINATOR_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransportSample {
    pub t: f64,
    pub lambda_pi_x: f64,
    pub lambda_pi_y: f64,
    pub omega_tilde_cx: f64,
    pub omega_tilde_cy: f64,
}

impl TransportSample {
    /// `sqrt(ω̃_cx·ω̃_cy)`; NaN if the product is negative.
    pub fn omega_tilde_c(&self) -> f64 {
        (self.omega_tilde_cx * self.omega_tilde_cy).sqrt()
    }
}

/// Products of two momentum propagators, kept as sums over root pairs `e^{(s_i+s_j)t}`.
///
/// Same-root terms cancel identically and are dropped, so ratios stay accurate long after
/// the individual products have lost all relative precision.
#[derive(Debug, Clone)]
struct PairSum {
    terms: Vec<(Complex64, Complex64)>,
}

impl PairSum {
    fn new(products: &[(&ExpSum, &ExpSum, f64)]) -> Self {
        let roots: Vec<Complex64> = products[0].0.terms.iter().map(|&(_, s)| s).collect();
        let n = roots.len();
        let mut terms = Vec::with_capacity(n * (n - 1) / 2);
        for i in 0..n {
            for j in i + 1..n {
                let a: Complex64 = products
                    .iter()
                    .map(|(f, g, k)| *k * (f.terms[i].0 * g.terms[j].0 + f.terms[j].0 * g.terms[i].0))
                    .sum();
                terms.push((a, roots[i] + roots[j]));
            }
        }
        Self { terms }
    }

    fn eval_scaled(&self, t: f64, kappa: f64) -> Result<f64> {
        ExpSum { c0: Complex64::new(0.0, 0.0), c1: Complex64::new(0.0, 0.0), terms: self.terms.clone() }
            .eval_scaled(t, kappa)
    }

    fn slowest(&self) -> f64 {
        self.terms.iter().map(|(_, s)| s.re).fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Momentum propagators and their derivatives, prepared for repeated sampling.
#[derive(Debug, Clone)]
pub struct TransportModel {
    den: PairSum,
    lx: PairSum,
    ly: PairSum,
    wx: PairSum,
    wy: PairSum,
    kappa: f64,
}

impl TransportModel {
    pub fn new(props: &PropagatorSet) -> Self {
        let (c1, c2, d1, d2) = (&props.c1, &props.c2, &props.d1, &props.d2);
        let (c1d, c2d, d1d, d2d) = (c1.derivative(), c2.derivative(), d1.derivative(), d2.derivative());
        let den = PairSum::new(&[(c1, d1, 1.0), (c2, d2, 1.0)]);
        let kappa = den.slowest();
        Self {
            lx: PairSum::new(&[(d1, &c1d, -1.0), (d2, &c2d, -1.0)]),
            ly: PairSum::new(&[(c1, &d1d, -1.0), (c2, &d2d, -1.0)]),
            wx: PairSum::new(&[(d1, &d2d, 1.0), (d2, &d1d, -1.0)]),
            wy: PairSum::new(&[(c1, &c2d, 1.0), (c2, &c1d, -1.0)]),
            den,
            kappa: if kappa.is_finite() { kappa } else { 0.0 },
        }
    }

    /// `C1·D1 + C2·D2` relative to the sum of magnitudes of its terms; a sign change marks a pole.
    pub fn denominator_ratio(&self, t: f64) -> Result<f64> {
        let k = self.kappa;
        let den = self.den.eval_scaled(t, k)?;
        let size: f64 = self.den.terms.iter().map(|(a, s)| a.norm() * ((s.re - k) * t).exp()).sum();
        Ok(den / size)
    }

    /// The four coefficients at `t`, all evaluated with the slowest decay divided out.
    pub fn at(&self, t: f64) -> Result<TransportSample> {
        let k = self.kappa;
        let den = self.den.eval_scaled(t, k)?;
        if !(self.denominator_ratio(t)?.abs() > DENOMINATOR_TOL) {
            return Err(Error::DenominatorVanished { t });
        }
        Ok(TransportSample {
            t,
            lambda_pi_x: self.lx.eval_scaled(t, k)? / den,
            lambda_pi_y: self.ly.eval_scaled(t, k)? / den,
            omega_tilde_cx: self.wx.eval_scaled(t, k)? / den,
            omega_tilde_cy: self.wy.eval_scaled(t, k)? / den,
        })
    }
}

pub fn transport_at(props: &PropagatorSet, t: f64) -> Result<TransportSample> {
    TransportModel::new(props).at(t)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AsymptoticTransport {
    pub lambda_pi_x: f64,
    pub lambda_pi_y: f64,
    pub omega_tilde_cx: f64,
    pub omega_tilde_cy: f64,
    pub omega_tilde_c: f64,
}

/// Long-time limits from the two slowest roots.
///
/// A limit exists only when `s_1, s_2` are a conjugate pair or both real.
pub fn asymptotic_transport(p: &SystemParams, roots: &RootSet) -> Result<AsymptoticTransport> {
    let (s1, s2) = (roots.roots[0], roots.roots[1]);
    let scale = s1.norm().max(s2.norm()).max(1e-300);
    let conjugate = (s1 - s2.conj()).norm() <= 1e-9 * scale && s1.im != 0.0;
    let real = s1.im.abs() <= 1e-12 * scale && s2.im.abs() <= 1e-12 * scale;
    if !(conjugate || real) {
        return Err(Error::NoAsymptoticLimit);
    }
    let g = Complex64::new(p.gamma, 0.0);
    let w2 = p.omega_c2();
    let sum = g + s1 + s2;
    let den = sum * sum + w2;
    let common = w2 + (s1 + g) * (s1 + s2) + s2 * s2;
    let lx = -(sum * (g * p.lambda_y + common)) / den;
    let ly = -(sum * (g * p.lambda_x + common)) / den;
    let prod = (s1 + g) * (s2 + g);
    let wx = p.omega_cx * (prod - g * p.lambda_x) / den;
    let wy = p.omega_cy * (prod - g * p.lambda_y) / den;
    let (lx, ly, wx, wy) = (lx.re, ly.re, wx.re, wy.re);
    Ok(AsymptoticTransport {
        lambda_pi_x: lx,
        lambda_pi_y: ly,
        omega_tilde_cx: wx,
        omega_tilde_cy: wy,
        omega_tilde_c: (wx * wy).sqrt(),
    })
}
