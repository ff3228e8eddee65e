//! Diffusion coefficients: time-dependent, from correlators and transport, and asymptotic.

use nalgebra::Matrix4;

use crate::correlators::{AsymptoticVariances, CorrelatorSet, Pair};
use crate::error::{Error, Result};
use crate::params::SystemParams;
use crate::transport::{AsymptoticTransport, TransportSample};

/// The seven nonvanishing coefficients; the position block is identically zero.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct DiffusionSet {
    pub pixpix: f64,
    pub piypiy: f64,
    pub pixpiy: f64,
    pub xpix: f64,
    pub xpiy: f64,
    pub ypix: f64,
    pub ypiy: f64,
}

impl DiffusionSet {
    /// Symmetric 4×4 matrix over `(x, y, π_x, π_y)`.
    pub fn matrix(&self) -> Matrix4<f64> {
        let mut m = Matrix4::zeros();
        let set = |m: &mut Matrix4<f64>, i: usize, j: usize, v: f64| {
            m[(i, j)] = v;
            m[(j, i)] = v;
        };
        set(&mut m, 2, 2, self.pixpix);
        set(&mut m, 3, 3, self.piypiy);
        set(&mut m, 2, 3, self.pixpiy);
        set(&mut m, 0, 2, self.xpix);
        set(&mut m, 0, 3, self.xpiy);
        set(&mut m, 1, 2, self.ypix);
        set(&mut m, 1, 3, self.ypiy);
        m
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

/// Time-dependent coefficients from transport and correlator samples at the same `t`.
pub fn diffusion_at(p: &SystemParams, tr: &TransportSample, c: &CorrelatorSet) -> Result<DiffusionSet> {
    if (tr.t - c.t).abs() > 1e-12 * tr.t.abs().max(1.0) {
        return Err(Error::InvalidArgument(format!("samples at different times {} and {}", tr.t, c.t)));
    }
    let (lx, ly) = (tr.lambda_pi_x, tr.lambda_pi_y);
    let (wx, wy) = (tr.omega_tilde_cx, tr.omega_tilde_cy);
    let (mx, my) = (p.mass_x, p.mass_y);
    let j = |q: Pair| c.get(q);
    let jd = |q: Pair| c.get_dot(q);
    use Pair::*;
    Ok(DiffusionSet {
        pixpix: lx * j(PixPix) - wy * j(PixPiy) + 0.5 * jd(PixPix),
        piypiy: ly * j(PiyPiy) + wx * j(PixPiy) + 0.5 * jd(PiyPiy),
        pixpiy: -0.5 * (-(lx + ly) * j(PixPiy) + wy * j(PiyPiy) - wx * j(PixPix) - jd(PixPiy)),
        xpiy: -0.5 * (-ly * j(XPiy) - wx * j(XPix) + j(PixPiy) / mx - jd(XPiy)),
        ypix: -0.5 * (-lx * j(YPix) + wy * j(YPiy) + j(PixPiy) / my - jd(YPix)),
        xpix: -0.5 * (-lx * j(XPix) + wy * j(XPiy) + j(PixPix) / mx - jd(XPix)),
        ypiy: -0.5 * (-ly * j(YPiy) - wx * j(YPix) + j(PiyPiy) / my - jd(YPiy)),
    })
}

/// Which stationary relations to use.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum StationaryForm {
    /// Exact fixed point of the covariance equations.
    #[default]
    Exact,
    /// Reduced relations that drop the `Σ_xπx`, `Σ_yπy` terms.
    Printed,
}

/// Asymptotic coefficients from asymptotic transport and variances.
pub fn asymptotic_diffusion(
    p: &SystemParams,
    tr: &AsymptoticTransport,
    v: &AsymptoticVariances,
    form: StationaryForm,
) -> DiffusionSet {
    let (lx, ly) = (tr.lambda_pi_x, tr.lambda_pi_y);
    let (wx, wy) = (tr.omega_tilde_cx, tr.omega_tilde_cy);
    let (mx, my) = (p.mass_x, p.mass_y);
    let base = DiffusionSet {
        pixpix: lx * v.pixpix,
        piypiy: ly * v.piypiy,
        pixpiy: 0.5 * (wx * v.pixpix - wy * v.piypiy),
        ..DiffusionSet::default()
    };
    match form {
        StationaryForm::Exact => DiffusionSet {
            xpix: 0.5 * (lx * v.xpix - wy * v.xpiy - v.pixpix / mx),
            xpiy: 0.5 * (ly * v.xpiy + wx * v.xpix),
            ypix: 0.5 * (lx * v.ypix - wy * v.ypiy),
            ypiy: 0.5 * (ly * v.ypiy + wx * v.ypix - v.piypiy / my),
            ..base
        },
        StationaryForm::Printed => DiffusionSet {
            xpix: -0.5 * (wy * v.xpiy + v.pixpix / mx),
            xpiy: 0.5 * ly * v.xpiy,
            ypix: 0.5 * lx * v.ypix,
            ypiy: 0.5 * (wx * v.ypix - v.piypiy / my),
            ..base
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::correlators::{asymptotic_variances_quadrature, CorrelatorEngine, VarianceForm};
    use crate::propagator::build_from_params;
    use crate::quadrature::QuadratureSpec;
    use crate::transport::{asymptotic_transport, TransportModel};

    fn drift(tr: &AsymptoticTransport, p: &SystemParams) -> Matrix4<f64> {
        let mut m = Matrix4::zeros();
        m[(0, 2)] = 1.0 / p.mass_x;
        m[(1, 3)] = 1.0 / p.mass_y;
        m[(2, 2)] = -tr.lambda_pi_x;
        m[(2, 3)] = tr.omega_tilde_cy;
        m[(3, 2)] = -tr.omega_tilde_cx;
        m[(3, 3)] = -tr.lambda_pi_y;
        m
    }

    #[test]
    fn vanishes_at_time_zero() {
        let p = SystemParams { lambda_y: 2.0, omega_cx: 1.0, omega_cy: 1.0, temperature: 0.3, ..SystemParams::default() };
        let (_, props) = build_from_params(&p).unwrap();
        let tr = TransportModel::new(&props).at(0.0).unwrap();
        let d = diffusion_at(&p, &tr, &crate::correlators::CorrelatorSet::zero(0.0)).unwrap();
        assert!(d.named().iter().all(|(_, v)| *v == 0.0));
    }

    #[test]
    fn matrix_form_identity() {
        // D = ½(J̇ − MJ − JMᵀ) restricted to the nonzero block
        let p = SystemParams { mass_y: 2.0, lambda_y: 2.0, omega_cx: 1.0, omega_cy: 0.5, temperature: 0.3, ..SystemParams::default() };
        let (roots, props) = build_from_params(&p).unwrap();
        let e = CorrelatorEngine::new(&p, &props, &roots).unwrap();
        let t = 0.8;
        let c = e.at(t, &QuadratureSpec::default()).unwrap();
        let tr = TransportModel::new(&props).at(t).unwrap();
        let d = diffusion_at(&p, &tr, &c).unwrap().matrix();
        let at = AsymptoticTransport {
            lambda_pi_x: tr.lambda_pi_x,
            lambda_pi_y: tr.lambda_pi_y,
            omega_tilde_cx: tr.omega_tilde_cx,
            omega_tilde_cy: tr.omega_tilde_cy,
            omega_tilde_c: 0.0,
        };
        let m = drift(&at, &p);
        let j = c.matrix();
        let want = 0.5 * (c.dot_matrix() - m * j - j * m.transpose());
        for (a, b) in [(2, 2), (3, 3), (2, 3), (0, 2), (0, 3), (1, 2), (1, 3)] {
            assert!((d[(a, b)] - want[(a, b)]).abs() < 1e-12 * (1.0 + want[(a, b)].abs()), "{a}{b}");
        }
    }

    #[test]
    fn exact_form_is_a_fixed_point() {
        let p = SystemParams { lambda_y: 2.0, omega_cx: 2.0, omega_cy: 2.0, temperature: 0.5, ..SystemParams::default() };
        let (roots, _) = build_from_params(&p).unwrap();
        let tr = asymptotic_transport(&p, &roots).unwrap();
        let v = asymptotic_variances_quadrature(&p, &roots, &QuadratureSpec::default(), VarianceForm::Derived).unwrap();
        let d = asymptotic_diffusion(&p, &tr, &v, StationaryForm::Exact).matrix();
        let s = crate::correlators::pairs_to_matrix(&v.as_pairs());
        let m = drift(&tr, &p);
        let rate = m * s + s * m.transpose() + 2.0 * d;
        for (a, b) in [(2, 2), (3, 3), (2, 3), (0, 2), (0, 3), (1, 2), (1, 3)] {
            assert!(rate[(a, b)].abs() < 1e-12, "{a}{b}: {}", rate[(a, b)]);
        }
        let printed = asymptotic_diffusion(&p, &tr, &v, StationaryForm::Printed);
        assert!((printed.xpiy - d[(0, 3)]).abs() > 1e-3);
    }

    #[test]
    fn axial_symmetry_of_asymptotics() {
        let p = SystemParams::axial(1.0, 1.0, 12.0, 2.0, 0.5).nudged();
        let (roots, _) = build_from_params(&p).unwrap();
        let tr = asymptotic_transport(&p, &roots).unwrap();
        let v = asymptotic_variances_quadrature(&p, &roots, &QuadratureSpec::default(), VarianceForm::Derived).unwrap();
        let d = asymptotic_diffusion(&p, &tr, &v, StationaryForm::Exact);
        assert!(d.pixpiy.abs() < 1e-5 * d.pixpix);
        assert!((d.xpiy + d.ypix).abs() < 1e-5 * d.xpiy.abs().max(1e-3));
    }

    #[test]
    fn cross_momentum_sign_follows_friction_ordering() {
        let spec = QuadratureSpec::default();
        let d = |ly: f64| {
            let p = SystemParams { lambda_y: ly, omega_cx: 2.0, omega_cy: 2.0, temperature: 0.1, ..SystemParams::default() };
            let (roots, _) = build_from_params(&p).unwrap();
            let tr = asymptotic_transport(&p, &roots).unwrap();
            let v = asymptotic_variances_quadrature(&p, &roots, &spec, VarianceForm::Derived).unwrap();
            (asymptotic_diffusion(&p, &tr, &v, StationaryForm::Exact), v)
        };
        let (weak, vw) = d(0.5);
        let (strong, vs) = d(2.0);
        assert!(vw.pixpix > vw.piypiy && vs.pixpix < vs.piypiy);
        assert!(weak.pixpiy > 0.0, "{}", weak.pixpiy);
        assert!(strong.pixpiy < 0.0, "{}", strong.pixpiy);
    }
}
