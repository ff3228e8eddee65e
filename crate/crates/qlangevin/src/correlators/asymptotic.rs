//! Long-time variances by frequency quadrature, and their high-temperature limit.

use std::f64::consts::PI;

use crate::bath::omega_coth;
use crate::charpoly::{characteristic_coefficients, RootSet};
use crate::error::Result;
use crate::params::SystemParams;
use crate::quadrature::{integrate, QuadratureSpec};

/// Which integrands to use for the `x–π` variances.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum VarianceForm {
    /// Long-time limit of the correlator integrals.
    #[default]
    Derived,
    /// Integrands with an extra `1/(ω² + γ²)` factor.
    Printed,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AsymptoticVariances {
    pub pixpix: f64,
    pub piypiy: f64,
    pub pixpiy: f64,
    pub xpix: f64,
    pub xpiy: f64,
    pub ypix: f64,
    pub ypiy: f64,
}

impl AsymptoticVariances {
    /// The ten stored pairs with the unbounded position block set to zero.
    pub fn as_pairs(&self) -> [f64; 10] {
        [0.0, 0.0, 0.0, self.xpix, self.xpiy, self.ypix, self.ypiy, self.pixpix, self.piypiy, self.pixpiy]
    }

    pub fn named(&self) -> [(&'static str, f64); 7] {
        [
            ("pixpix", self.pixpix),
            ("piypiy", self.piypiy),
            ("pixpiy", self.pixpiy),
            ("xpix", self.xpix),
            ("xpiy", self.xpiy),
            ("ypix", self.ypix),
            ("ypiy", self.ypiy),
        ]
    }
}

/// `|P(iω)|² = Π_i(ω² + s_i²)` from the real polynomial coefficients.
pub(crate) fn den_abs2(c: &[f64; 5], w: f64) -> f64 {
    let w2 = w * w;
    let re = w2 * w2 - c[2] * w2 + c[4];
    let im = c[1] * w2 * w - c[3] * w;
    re * re + im * im
}

fn quad_spec(p: &SystemParams, roots: &RootSet, spec: &QuadratureSpec) -> QuadratureSpec {
    let mut pts = vec![p.gamma, 2.0 * p.temperature];
    for s in &roots.roots {
        pts.push(s.norm());
        pts.push(s.im.abs());
    }
    let mut out = spec.with_split_points(pts);
    if out.tail_start.is_none() {
        out.tail_start = Some(4.0 * roots.max_modulus().max(p.gamma).max(2.0 * p.temperature));
    }
    out
}

/// `∫₀^∞ ω coth(ω/2T)·g(ω) dω`.
fn coth_integral<G: Fn(f64) -> f64>(g: G, t: f64, spec: &QuadratureSpec) -> Result<f64> {
    Ok(integrate(|w| omega_coth(w, t) * g(w), spec)?.value)
}

fn pixpix(p: &SystemParams, c: &[f64; 5], spec: &QuadratureSpec) -> Result<f64> {
    let (g, lx, ly) = (p.gamma, p.lambda_x, p.lambda_y);
    let (w2c, q) = (p.omega_c2(), p.q());
    let k1 = ly * g * g * q;
    let k3 = lx * g * (g - 2.0 * ly) + ly * w2c;
    let v = coth_integral(
        |w| {
            let w2 = w * w;
            (k1 + k3 * w2 + lx * w2 * w2) / den_abs2(c, w)
        },
        p.temperature,
        spec,
    )?;
    Ok(g * g * p.mass_x / PI * v)
}

fn xpiy_derived(p: &SystemParams, c: &[f64; 5], spec: &QuadratureSpec) -> Result<f64> {
    let (g, lx, ly) = (p.gamma, p.lambda_x, p.lambda_y);
    let k1 = g * g * (lx + ly) - 2.0 * g * lx * ly;
    let v = coth_integral(|w| ((lx + ly) * w * w + k1) / den_abs2(c, w), p.temperature, spec)?;
    Ok(-g * g * p.omega_cx / PI * v)
}

fn xpix_printed(p: &SystemParams, c: &[f64; 5], spec: &QuadratureSpec) -> Result<f64> {
    let (g, lx, ly) = (p.gamma, p.lambda_x, p.lambda_y);
    let (w2c, q) = (p.omega_c2(), p.q());
    let a1 = g.powi(3) * ly * ly * (lx - g) * q;
    let a3 = -g * ly * (g * lx * (ly * (ly + 2.0 * lx) - g * (2.0 * ly + lx) + g * g) + w2c * (ly * lx + g * (ly - lx)));
    let a5 = lx * ly * ((lx + 2.0 * (ly - g)) * g + w2c);
    let a7 = -lx * ly;
    let v = coth_integral(
        |w| {
            let w2 = w * w;
            (a1 + w2 * (a3 + w2 * (a5 + w2 * a7))) / ((w2 + g * g) * den_abs2(c, w))
        },
        p.temperature,
        spec,
    )?;
    Ok(g * g / (PI * q) * v)
}

fn xpiy_printed(p: &SystemParams, c: &[f64; 5], spec: &QuadratureSpec) -> Result<f64> {
    let (g, lx, ly) = (p.gamma, p.lambda_x, p.lambda_y);
    let (w2c, q) = (p.omega_c2(), p.q());
    let a1 = g.powi(3) * lx * (g - ly) * q;
    let a3 = g * (w2c * lx * (2.0 * g + ly) - ly * (2.0 * lx * q - lx * g * (3.0 * ly + 2.0 * (lx - g)) - g * g * (g - ly)));
    let a5 = lx * w2c + ly * (lx * (lx + ly) + 2.0 * g * (g - lx) - ly * g);
    let a7 = ly;
    let v = coth_integral(
        |w| {
            let w2 = w * w;
            (a1 + w2 * (a3 + w2 * (a5 + w2 * a7))) / ((w2 + g * g) * den_abs2(c, w))
        },
        p.temperature,
        spec,
    )?;
    Ok(-g * g * p.omega_cx / (PI * q) * v)
}

fn x_block(p: &SystemParams, c: &[f64; 5], form: VarianceForm, spec: &QuadratureSpec) -> Result<(f64, f64, f64)> {
    let pp = pixpix(p, c, spec)?;
    let (xpx, xpy) = match form {
        VarianceForm::Derived => (p.lambda_y * p.temperature / p.q(), xpiy_derived(p, c, spec)?),
        VarianceForm::Printed => (xpix_printed(p, c, spec)?, xpiy_printed(p, c, spec)?),
    };
    Ok((pp, xpx, xpy))
}

/// Long-time variances by adaptive quadrature; y-entries follow from the x↔y swap.
pub fn asymptotic_variances_quadrature(
    p: &SystemParams,
    roots: &RootSet,
    spec: &QuadratureSpec,
    form: VarianceForm,
) -> Result<AsymptoticVariances> {
    let spec = quad_spec(p, roots, spec);
    let c = characteristic_coefficients(p);
    let (pixpix, xpix, xpiy) = x_block(p, &c, form, &spec)?;
    let (piypiy, ypiy, ypix_sw) = x_block(&p.swap_xy(), &c, form, &spec)?;
    Ok(AsymptoticVariances { pixpix, piypiy, pixpiy: 0.0, xpix, xpiy, ypix: -ypix_sw, ypiy })
}

/// Classical limit: equipartition for the momenta, `T/(λ_xλ_y + ω_c²)` scaling for `x–π`.
pub fn high_temperature_variances(p: &SystemParams) -> AsymptoticVariances {
    let (t, q) = (p.temperature, p.q());
    AsymptoticVariances {
        pixpix: p.mass_x * t,
        piypiy: p.mass_y * t,
        pixpiy: 0.0,
        xpix: p.lambda_y * t / q,
        xpiy: -p.omega_cx * t / q,
        ypix: p.omega_cy * t / q,
        ypiy: p.lambda_x * t / q,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::charpoly::solve_roots;

    fn demo(t: f64) -> (SystemParams, RootSet) {
        let p = SystemParams { lambda_y: 2.0, omega_cx: 2.0, omega_cy: 2.0, temperature: t, ..SystemParams::default() };
        let r = solve_roots(&p).unwrap();
        (p, r)
    }

    #[test]
    fn reference_values() {
        let spec = QuadratureSpec::with_tol(1e-11);
        for (t, pxpx, xpy) in [
            (0.0, 1.33671859362, -0.32371826411),
            (0.5, 1.42879412937, -0.36283372129),
            (50.0, 50.0261232035, -16.669999),
        ] {
            let (p, r) = demo(t);
            let v = asymptotic_variances_quadrature(&p, &r, &spec, VarianceForm::Derived).unwrap();
            assert!((v.pixpix - pxpx).abs() < 1e-9 * pxpx, "T={t}: {}", v.pixpix);
            assert!((v.xpiy - xpy).abs() < 1e-6 * xpy.abs(), "T={t}: {}", v.xpiy);
        }
        let (p, r) = demo(0.0);
        let v = asymptotic_variances_quadrature(&p, &r, &spec, VarianceForm::Derived).unwrap();
        assert!((v.piypiy - 1.82764795811).abs() < 1e-9);
        assert_eq!(v.xpix, 0.0);
    }

    #[test]
    fn high_temperature_agreement() {
        let (p, r) = demo(50.0);
        let v = asymptotic_variances_quadrature(&p, &r, &QuadratureSpec::default(), VarianceForm::Derived).unwrap();
        let h = high_temperature_variances(&p);
        assert!((v.pixpix / h.pixpix - 1.0).abs() < 0.02);
        assert!((v.xpiy / h.xpiy - 1.0).abs() < 0.02);
        assert!((v.ypix / h.ypix - 1.0).abs() < 0.02);
    }

    #[test]
    fn axial_symmetry() {
        let p = SystemParams::axial(1.0, 1.0, 12.0, 1.5, 0.3).nudged();
        let r = solve_roots(&p).unwrap();
        let v = asymptotic_variances_quadrature(&p, &r, &QuadratureSpec::default(), VarianceForm::Derived).unwrap();
        assert!((v.pixpix - v.piypiy).abs() < 1e-5 * v.pixpix);
        assert!((v.xpiy + v.ypix).abs() < 1e-5 * v.xpiy.abs());
        assert_eq!(v.pixpiy, 0.0);
    }

    #[test]
    fn printed_integrands_differ() {
        let (p, r) = demo(0.5);
        let v = asymptotic_variances_quadrature(&p, &r, &QuadratureSpec::default(), VarianceForm::Printed).unwrap();
        assert!((v.xpiy + 0.5537).abs() < 1e-3, "{}", v.xpiy);
        assert!((v.pixpix - 1.42879412937).abs() < 1e-7);
    }

    #[test]
    fn high_temperature_closed_form() {
        let p = SystemParams { temperature: 1.0, ..SystemParams::default() };
        let h = high_temperature_variances(&p);
        assert!((h.xpix - 1.0).abs() < 1e-15);
        assert_eq!(h.pixpiy, 0.0);
    }
}
