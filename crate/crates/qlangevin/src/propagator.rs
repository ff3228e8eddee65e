//! Exponential-sum propagators `c0 + c1·t + Σ a_i e^{s_i t}`.

use num_complex::Complex64;

use crate::charpoly::RootSet;
use crate::error::{Error, Result};
use crate::params::SystemParams;

/// Imaginary residue tolerated when evaluating a real coefficient function.
pub const IMAG_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct ExpSum {
    pub c0: Complex64,
    pub c1: Complex64,
    /// `(a_i, s_i)` pairs.
    pub terms: Vec<(Complex64, Complex64)>,
}

fn cr(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

impl ExpSum {
    pub fn constant(c0: f64) -> Self {
        Self { c0: cr(c0), c1: cr(0.0), terms: Vec::new() }
    }

    pub fn exp(a: Complex64, s: Complex64) -> Self {
        Self { c0: cr(0.0), c1: cr(0.0), terms: vec![(a, s)] }
    }

    pub fn eval_complex(&self, t: f64) -> Complex64 {
        self.c0 + self.c1 * t + self.terms.iter().map(|(a, s)| a * (s * t).exp()).sum::<Complex64>()
    }

    /// `e^{−κt}·f(t)`; keeps ratios of decaying sums representable at large `t`.
    pub fn eval_scaled_complex(&self, t: f64, kappa: f64) -> Complex64 {
        let lin = self.c0 + self.c1 * t;
        let head = if lin == cr(0.0) { lin } else { lin * (-kappa * t).exp() };
        head + self.terms.iter().map(|(a, s)| a * ((s - kappa) * t).exp()).sum::<Complex64>()
    }

    pub fn eval(&self, t: f64) -> Result<f64> {
        real_part(self.eval_complex(t), "ExpSum::eval")
    }

    pub fn eval_scaled(&self, t: f64, kappa: f64) -> Result<f64> {
        real_part(self.eval_scaled_complex(t, kappa), "ExpSum::eval_scaled")
    }

    pub fn derivative(&self) -> Self {
        Self {
            c0: self.c1,
            c1: cr(0.0),
            terms: self.terms.iter().map(|&(a, s)| (a * s, s)).collect(),
        }
    }

    pub fn derivative_n(&self, order: usize) -> Self {
        (0..order).fold(self.clone(), |f, _| f.derivative())
    }

    pub fn eval_derivative(&self, t: f64, order: usize) -> Result<f64> {
        self.derivative_n(order).eval(t)
    }

    /// k-th derivative at `t` without building intermediate sums; may carry rounding residue.
    pub fn derivative_at_complex(&self, t: f64, order: u32) -> Complex64 {
        let base = match order {
            0 => self.c0 + self.c1 * t,
            1 => self.c1,
            _ => cr(0.0),
        };
        base + self
            .terms
            .iter()
            .map(|(a, s)| a * s.powu(order) * (s * t).exp())
            .sum::<Complex64>()
    }

    pub fn scale(&self, k: f64) -> Self {
        Self {
            c0: self.c0 * k,
            c1: self.c1 * k,
            terms: self.terms.iter().map(|&(a, s)| (a * k, s)).collect(),
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut terms = self.terms.clone();
        for &(a, s) in &other.terms {
            match terms.iter_mut().find(|(_, r)| *r == s) {
                Some(slot) => slot.0 += a,
                None => terms.push((a, s)),
            }
        }
        Self { c0: self.c0 + other.c0, c1: self.c1 + other.c1, terms }
    }

    /// `∫₀ᵗ k e^{−r(t−τ)} f(τ) dτ` as an exponential sum.
    pub fn convolve_exp(&self, k: f64, r: f64) -> Self {
        let mut out = Self::constant(0.0);
        let mut decay = cr(0.0);
        out.c0 += k * self.c0 / r;
        decay -= k * self.c0 / r;
        out.c1 += k * self.c1 / r;
        out.c0 -= k * self.c1 / (r * r);
        decay += k * self.c1 / (r * r);
        for &(a, s) in &self.terms {
            let d = s + r;
            out.terms.push((k * a / d, s));
            decay -= k * a / d;
        }
        out.terms.push((decay, cr(-r)));
        out
    }
}

fn real_part(z: Complex64, context: &'static str) -> Result<f64> {
    if z.im.abs() > IMAG_TOL * (1.0 + z.re.abs()) {
        return Err(Error::ImaginaryResidue { context, imag: z.im });
    }
    Ok(z.re)
}

/// The twelve coefficient functions of the explicit solution.
#[derive(Debug, Clone, PartialEq)]
pub struct PropagatorSet {
    pub a1: ExpSum,
    pub a2: ExpSum,
    pub a3: ExpSum,
    pub b1: ExpSum,
    pub b2: ExpSum,
    pub b3: ExpSum,
    pub c1: ExpSum,
    pub c2: ExpSum,
    pub c3: ExpSum,
    pub d1: ExpSum,
    pub d2: ExpSum,
    pub d3: ExpSum,
}

fn a3_sum(p: &SystemParams, r: &RootSet) -> ExpSum {
    let (g, lx, ly, mx) = (p.gamma, p.lambda_x, p.lambda_y, p.mass_x);
    let w2 = p.omega_c2();
    let q = p.q();
    let terms = r
        .roots
        .iter()
        .zip(&r.weights)
        .map(|(&s, &b)| (b * (g + s) * (g * ly + s * (g + s)) / (s * s * mx), s))
        .collect();
    ExpSum {
        c0: cr((w2 * (g - ly) - ly * ly * (g - lx)) / (g * q * q * mx)),
        c1: cr(ly / (q * mx)),
        terms,
    }
}

fn b3_sum(p: &SystemParams, r: &RootSet) -> ExpSum {
    let (g, lx, ly) = (p.gamma, p.lambda_x, p.lambda_y);
    let k = p.omega_cx / p.mass_y;
    let q = p.q();
    let terms = r
        .roots
        .iter()
        .zip(&r.weights)
        .map(|(&s, &b)| (k * b * (g + s) * (g + s) / (s * s), s))
        .collect();
    ExpSum {
        c0: cr(k * (2.0 * lx * ly - g * (lx + ly)) / (g * q * q)),
        c1: cr(k / q),
        terms,
    }
}

/// Builds all twelve coefficient functions; swapped members come from `p.swap_xy()`.
pub fn build(p: &SystemParams, roots: &RootSet) -> PropagatorSet {
    let sw = p.swap_xy();
    let a3 = a3_sum(p, roots);
    let b3 = b3_sum(p, roots);
    let a3s = a3_sum(&sw, roots);
    let b3s = b3_sum(&sw, roots);
    PropagatorSet {
        a1: a3.derivative(),
        a2: b3s.derivative(),
        b1: a3s.derivative(),
        b2: b3.derivative(),
        c1: a3.derivative_n(2).scale(p.mass_x),
        c2: b3.derivative_n(2).scale(p.mass_x),
        c3: a3.derivative().scale(p.mass_x),
        d1: a3s.derivative_n(2).scale(p.mass_y),
        d2: b3.derivative_n(2).scale(p.mass_y),
        d3: b3.derivative().scale(p.mass_y),
        a3,
        b3,
    }
}

/// Convenience: validated roots plus propagators.
pub fn build_from_params(p: &SystemParams) -> Result<(RootSet, PropagatorSet)> {
    let roots = crate::charpoly::solve_roots(p)?;
    let props = build(p, &roots);
    Ok((roots, props))
}

impl PropagatorSet {
    pub fn named(&self) -> [(&'static str, &ExpSum); 12] {
        [
            ("A1", &self.a1),
            ("A2", &self.a2),
            ("A3", &self.a3),
            ("B1", &self.b1),
            ("B2", &self.b2),
            ("B3", &self.b3),
            ("C1", &self.c1),
            ("C2", &self.c2),
            ("C3", &self.c3),
            ("D1", &self.d1),
            ("D2", &self.d2),
            ("D3", &self.d3),
        ]
    }

    /// Noise kernels `(F_x, F_y)` for x, y, π_x, π_y, signs included.
    pub fn noise_kernels(&self) -> [[ExpSum; 2]; 4] {
        [
            [self.a1.clone(), self.a2.clone()],
            [self.b2.scale(-1.0), self.b1.clone()],
            [self.c1.clone(), self.c2.clone()],
            [self.d2.scale(-1.0), self.d1.clone()],
        ]
    }

    /// Fundamental matrix over `(x, y, π_x, π_y)`.
    pub fn fundamental_matrix(&self, t: f64) -> Result<[[f64; 4]; 4]> {
        let (a1, a2) = (self.a1.eval(t)?, self.a2.eval(t)?);
        let (b1, b2) = (self.b1.eval(t)?, self.b2.eval(t)?);
        let (c1, c2) = (self.c1.eval(t)?, self.c2.eval(t)?);
        let (d1, d2) = (self.d1.eval(t)?, self.d2.eval(t)?);
        Ok([
            [1.0, 0.0, a1, a2],
            [0.0, 1.0, -b2, b1],
            [0.0, 0.0, c1, c2],
            [0.0, 0.0, -d2, d1],
        ])
    }

    /// Residuals of the integro-differential equations of motion at `t`.
    ///
    /// Returns `[ẋ − π_x/m_x, ẏ − π_y/m_y, π̇_x − (...), π̇_y − (...)]` for the unit initial
    /// momenta `π_x(0) = 1` and `π_y(0) = 1` separately (eight numbers).
    pub fn motion_residuals(&self, p: &SystemParams, t: f64) -> Result<[f64; 8]> {
        let g = p.gamma;
        let kx = p.mass_x * p.lambda_x * g;
        let ky = p.mass_y * p.lambda_y * g;
        let mut out = [0.0; 8];
        // columns: initial π_x (x=A1, y=−B2, πx=C1, πy=−D2); initial π_y (A2, B1, C2, D1)
        let cols = [
            [self.a1.clone(), self.b2.scale(-1.0), self.c1.clone(), self.d2.scale(-1.0)],
            [self.a2.clone(), self.b1.clone(), self.c2.clone(), self.d1.clone()],
        ];
        for (k, [x, y, px, py]) in cols.iter().enumerate() {
            let xd = x.derivative();
            let yd = y.derivative();
            let r0 = xd.eval(t)? - px.eval(t)? / p.mass_x;
            let r1 = yd.eval(t)? - py.eval(t)? / p.mass_y;
            let fx = xd.convolve_exp(kx, g);
            let fy = yd.convolve_exp(ky, g);
            let r2 = px.derivative().eval(t)? - (p.omega_cy * py.eval(t)? - fx.eval(t)?);
            let r3 = py.derivative().eval(t)? - (-p.omega_cx * px.eval(t)? - fy.eval(t)?);
            out[4 * k..4 * k + 4].copy_from_slice(&[r0, r1, r2, r3]);
        }
        Ok(out)
    }
}
