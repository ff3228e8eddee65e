//! Orbital angular momentum and magnetization in the axial case.
//!
//! `L_z(t) = ⟨xπ_y − yπ_x⟩ = J_xπy(t) − J_yπx(t)` and `M = n e L_z/(2m)`, in units of `ħ` and
//! `n e ħ/m`. A second route expands `M(t)` over pairs of roots and is kept as a cross-check.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::bath::omega_coth;
use crate::charpoly::{RootSet, DEGENERACY_THRESHOLD};
use crate::correlators::{
    asymptotic_variances_quadrature, check_resonance, lnr, real, CorrelatorEngine, Pair, VarianceForm,
};
use crate::error::{Error, Result};
use crate::params::SystemParams;
use crate::propagator::PropagatorSet;
use crate::quadrature::{breakpoints, integrate_vector, inverse_product_laurent, QuadratureSpec, TailMoments};

type C = Complex64;

const TAIL_ORDER: usize = 36;

/// Agreement required between the two magnetization routes, in units of the quadrature `rel_tol`.
pub const CROSS_CHECK_FACTOR: f64 = 1e3;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MagnetizationResult {
    /// `None` for the long-time limit.
    pub t: Option<f64>,
    pub angular_momentum: f64,
    pub magnetization: f64,
}

/// Which normalization of the root-pair expansion of `M(t)` to use.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PairExpansionForm {
    /// Halved prefactors; equals `n e L_z/(2m)`.
    #[default]
    Halved,
    /// Full prefactors, which give twice the magnetization.
    Printed,
}

/// Variant of the zero-temperature log sum.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ZeroTemperatureForm {
    /// `+2λ_xλ_yγ` in the pair sum and an overall factor ¼.
    #[default]
    Corrected,
    /// `+2λ_xλ_yγ` with the full prefactors.
    PrintedGamma,
    /// Uncorrected expression (`+2λ_xλ_y`).
    Printed,
}

fn require_axial(p: &SystemParams) -> Result<()> {
    if p.is_axial() {
        Ok(())
    } else {
        Err(Error::NotAxial)
    }
}

/// `n e/(2m)`: converts `L_z` into `M`.
pub fn magneton(p: &SystemParams) -> f64 {
    p.carrier_density * p.charge / (2.0 * p.mass_x)
}

/// `L_z(t)` for a particle starting from zero variance.
pub fn angular_momentum_at(
    p: &SystemParams,
    props: &PropagatorSet,
    roots: &RootSet,
    t: f64,
    spec: &QuadratureSpec,
) -> Result<f64> {
    require_axial(p)?;
    MagnetismEngine::new(p, props, roots)?.angular_momentum(t, spec)
}

/// `M(t)` by both routes; fails with [`Error::CrossCheckFailure`] if they disagree.
pub fn magnetization_at(
    p: &SystemParams,
    props: &PropagatorSet,
    roots: &RootSet,
    t: f64,
    spec: &QuadratureSpec,
    form: PairExpansionForm,
) -> Result<MagnetizationResult> {
    MagnetismEngine::new(p, props, roots)?.magnetization(t, spec, form)
}

/// Reusable state for repeated `L_z(t)`, `M(t)` evaluation.
#[derive(Debug, Clone)]
pub struct MagnetismEngine {
    params: SystemParams,
    roots: RootSet,
    correlators: CorrelatorEngine,
}

impl MagnetismEngine {
    pub fn new(p: &SystemParams, props: &PropagatorSet, roots: &RootSet) -> Result<Self> {
        require_axial(p)?;
        Ok(Self { params: *p, roots: roots.clone(), correlators: CorrelatorEngine::new(p, props, roots)? })
    }

    pub fn from_params(p: &SystemParams) -> Result<Self> {
        let (roots, props) = crate::propagator::build_from_params(p)?;
        Self::new(p, &props, &roots)
    }

    pub fn angular_momentum(&self, t: f64, spec: &QuadratureSpec) -> Result<f64> {
        let c = self.correlators.at(t, spec)?;
        Ok(c.get(Pair::XPiy) - c.get(Pair::YPix))
    }

    /// `M(t)` from the root-pair expansion alone.
    pub fn pair_expansion(&self, t: f64, spec: &QuadratureSpec, form: PairExpansionForm) -> Result<PairTerms> {
        let mut terms = pair_expansion_terms(&self.params, &self.roots, t, spec)?;
        if form == PairExpansionForm::Halved {
            terms.single *= 0.5;
            terms.double *= 0.5;
        }
        Ok(terms)
    }

    pub fn magnetization(&self, t: f64, spec: &QuadratureSpec, form: PairExpansionForm) -> Result<MagnetizationResult> {
        let lz = self.angular_momentum(t, spec)?;
        let m = magneton(&self.params) * lz;
        let terms = self.pair_expansion(t, spec, form)?;
        let other = terms.total();
        let scale = terms.single.abs() + terms.double.abs() + m.abs();
        let tol = CROSS_CHECK_FACTOR * (spec.rel_tol * scale + spec.abs_tol);
        if !((m - other).abs() <= tol) {
            return Err(Error::CrossCheckFailure(format!(
                "magnetization at t = {t}: {m} from L_z but {other} from the root-pair expansion"
            )));
        }
        Ok(MagnetizationResult { t: Some(t), angular_momentum: lz, magnetization: m })
    }
}

/// The two sums of the root-pair expansion, already multiplied by their prefactors.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairTerms {
    pub single: f64,
    pub double: f64,
}

impl PairTerms {
    pub fn total(&self) -> f64 {
        self.single + self.double
    }
}

/// `e^z − 1` without cancellation for small `|z|`.
fn exp_m1(z: C) -> C {
    if z.norm() < 1e-3 {
        let mut term = z;
        let mut sum = z;
        for k in 2..8 {
            term *= z / k as f64;
            sum += term;
        }
        return sum;
    }
    let half = (0.5 * z.im).sin();
    C::new(z.re.exp_m1() * z.im.cos() - 2.0 * half * half, z.re.exp() * z.im.sin())
}

fn single_prefactor(p: &SystemParams, s: C, b: C) -> C {
    let (g, lx, ly) = (p.gamma, p.lambda_x, p.lambda_y);
    b * s * (g + s) * ((lx + ly) * (g + s) - 2.0 * lx * ly)
}

fn double_prefactor(p: &SystemParams, si: C, sj: C, bi: C, bj: C, with_gamma: bool) -> C {
    let (g, lx, ly) = (p.gamma, p.lambda_x, p.lambda_y);
    let k = 2.0 * lx * ly * if with_gamma { g } else { 1.0 };
    bi * bj * (g + si) * (g + sj) * (g + sj) * (si - sj) * (si * (lx + ly) * (g + si) + k) / (si * sj)
}

const OFF_DIAGONAL: [(usize, usize); 12] =
    [(0, 1), (0, 2), (0, 3), (1, 0), (1, 2), (1, 3), (2, 0), (2, 1), (2, 3), (3, 0), (3, 1), (3, 2)];

/// Root-pair expansion of `M(t)` (units `n e ħ/m`).
fn pair_expansion_terms(p: &SystemParams, roots: &RootSet, t: f64, spec: &QuadratureSpec) -> Result<PairTerms> {
    if !(t >= 0.0) || !t.is_finite() {
        return Err(Error::InvalidArgument(format!("time must be finite and nonnegative, got {t}")));
    }
    if t == 0.0 {
        return Ok(PairTerms { single: 0.0, double: 0.0 });
    }
    let s = roots.roots;
    let b = roots.weights;
    let g2 = p.gamma * p.gamma;
    let temp = p.temperature;
    let em1: [C; 4] = std::array::from_fn(|i| exp_m1(s[i] * t));
    let e: [C; 4] = std::array::from_fn(|i| em1[i] + 1.0);
    let s2 = s.map(|z| z * z);
    let integrand = |w: f64, out: &mut [f64]| {
        let oc = omega_coth(w, temp);
        let w2 = w * w;
        let wt = w * t;
        let sinc = if wt.abs() < 1e-4 { t * (1.0 - wt * wt / 6.0) } else { wt.sin() / w };
        let half = (0.5 * wt).sin();
        let one_m_cos = 2.0 * half * half;
        let sin = wt.sin();
        for i in 0..4 {
            let v = oc * (0.5 * s[i] * em1[i] * sinc + 0.5 * (e[i] + 1.0) * one_m_cos) / ((w2 + g2) * (w2 + s2[i]));
            out[2 * i] = v.re;
            out[2 * i + 1] = v.im;
        }
        for (n, &(i, j)) in OFF_DIAGONAL.iter().enumerate() {
            let pij = s[i] * s[j];
            let brace = (w2 + pij) * (em1[i] * em1[j] + (e[i] + e[j]) * one_m_cos) + w * (s[i] - s[j]) * (e[i] - e[j]) * sin;
            let v = oc * brace / ((w2 + g2) * (w2 + s2[i]) * (w2 + s2[j]));
            out[8 + 2 * n] = v.re;
            out[8 + 2 * n + 1] = v.im;
        }
    };
    let mut splits = vec![p.gamma, 2.0 * temp];
    for z in &s {
        splits.push(z.norm());
        splits.push(z.im.abs());
    }
    let cut = (4.0 * roots.max_modulus().max(p.gamma)).max(40.0 * temp);
    let qspec = spec.with_split_points(splits);
    let breaks = breakpoints(&qspec, cut);
    let body = integrate_vector(integrand, 32, &breaks, 2.0 * PI / t, &qspec)?;
    let at = |k: usize| C::new(body[k].value, body[k + 1].value);

    let tm = TailMoments::new(cut, t, TAIL_ORDER);
    let zero = C::new(0.0, 0.0);
    let gc = C::new(g2, 0.0);
    // Σ plain_n ∫x^n + cos_n ∫x^n cos ωt + sin_n ∫x^n sin ωt
    let tail = |plain: &[C], cos: &[C], sin: &[C]| -> C {
        let mut acc = zero;
        for n in 2..=TAIL_ORDER {
            acc += plain[n] * tm.plain[n] + cos[n] * tm.osc[n].re + sin[n] * tm.osc[n].im;
        }
        acc
    };
    let mut single = zero;
    for i in 0..4 {
        let l = inverse_product_laurent(&[gc, s2[i]], cut, TAIL_ORDER + 1);
        let (mut pl, mut co, mut si) = (vec![zero; TAIL_ORDER + 1], vec![zero; TAIL_ORDER + 1], vec![zero; TAIL_ORDER + 1]);
        for n in 1..=TAIL_ORDER + 1 {
            let k = 0.5 * (e[i] + 1.0) * cut * l[n];
            pl[n - 1] += k;
            co[n - 1] -= k;
            if n <= TAIL_ORDER {
                si[n] += 0.5 * s[i] * em1[i] * l[n];
            }
        }
        let integral = at(2 * i) + tail(&pl, &co, &si);
        single += single_prefactor(p, s[i], b[i]) * integral;
    }
    let mut double = zero;
    for (n, &(i, j)) in OFF_DIAGONAL.iter().enumerate() {
        let l = inverse_product_laurent(&[gc, s2[i], s2[j]], cut, TAIL_ORDER + 3);
        let (mut pl, mut co, mut si) = (vec![zero; TAIL_ORDER + 1], vec![zero; TAIL_ORDER + 1], vec![zero; TAIL_ORDER + 1]);
        let pij = s[i] * s[j];
        let k = 1.0 + e[i] * e[j];
        let kc = -(e[i] + e[j]);
        let ks = (s[i] - s[j]) * (e[i] - e[j]);
        let c3 = cut * cut * cut;
        for m in 0..=TAIL_ORDER + 3 {
            if l[m] == zero {
                continue;
            }
            if m >= 3 && m - 3 <= TAIL_ORDER {
                pl[m - 3] += k * c3 * l[m];
                co[m - 3] += kc * c3 * l[m];
            }
            if m >= 1 && m - 1 <= TAIL_ORDER {
                pl[m - 1] += k * pij * cut * l[m];
                co[m - 1] += kc * pij * cut * l[m];
            }
            if m >= 2 && m - 2 <= TAIL_ORDER {
                si[m - 2] += ks * cut * cut * l[m];
            }
        }
        let integral = at(8 + 2 * n) + tail(&pl, &co, &si);
        double += double_prefactor(p, s[i], s[j], b[i], b[j], true) * integral;
    }
    let wc = p.omega_c();
    let ne = p.carrier_density * p.charge / p.mass_x;
    let single = single * 2.0 * ne * wc * g2 / (PI * p.q());
    let double = double * ne * wc * g2 / PI;
    let scale = single.norm() + double.norm();
    Ok(PairTerms {
        single: real(single, scale, "root-pair expansion, single sum")?,
        double: real(double, scale, "root-pair expansion, double sum")?,
    })
}

/// `L_z(∞)` from the long-time variances: `Σ_xπy(∞) − Σ_yπx(∞)`.
pub fn asymptotic_angular_momentum(p: &SystemParams, roots: &RootSet, spec: &QuadratureSpec) -> Result<f64> {
    require_axial(p)?;
    let v = asymptotic_variances_quadrature(p, roots, spec, VarianceForm::Derived)?;
    Ok(v.xpiy - v.ypix)
}

pub fn asymptotic_magnetization(p: &SystemParams, roots: &RootSet, spec: &QuadratureSpec) -> Result<MagnetizationResult> {
    let lz = asymptotic_angular_momentum(p, roots, spec)?;
    Ok(MagnetizationResult { t: None, angular_momentum: lz, magnetization: magneton(p) * lz })
}

/// High-temperature limit `−(n e/m)·ω_c T/(λ_xλ_y + ω_c²)`.
pub fn markovian_magnetization(p: &SystemParams) -> f64 {
    -p.carrier_density * p.charge / p.mass_x * p.omega_c() * p.temperature / p.q()
}

/// `M(∞)` at `T = 0` from logarithms of the roots.
pub fn zero_temperature_magnetization(p: &SystemParams, roots: &RootSet, form: ZeroTemperatureForm) -> Result<f64> {
    require_axial(p)?;
    let margin = roots.degeneracy_margin;
    if !(margin >= DEGENERACY_THRESHOLD) {
        return Err(Error::DegenerateRoots { margin });
    }
    let s = roots.roots;
    let b = roots.weights;
    check_resonance(p, &s)?;
    let g = C::new(p.gamma, 0.0);
    let g2 = g * g;
    let mut single = C::new(0.0, 0.0);
    for i in 0..4 {
        single += single_prefactor(p, s[i], b[i]) * 2.0 * lnr(g, s[i]) / (g2 - s[i] * s[i]);
    }
    let with_gamma = form != ZeroTemperatureForm::Printed;
    let mut double = C::new(0.0, 0.0);
    for &(i, j) in &OFF_DIAGONAL {
        let (si, sj) = (s[i], s[j]);
        let num = si * (g2 - sj * sj) * 2.0 * lnr(g, si) + sj * (g2 - si * si) * 2.0 * lnr(g, sj);
        double += double_prefactor(p, si, sj, b[i], b[j], with_gamma) * num
            / ((si + sj) * (g2 - si * si) * (g2 - sj * sj));
    }
    let wc = p.omega_c();
    let ne = p.carrier_density * p.charge / p.mass_x;
    let single = single * ne * wc * p.gamma * p.gamma / (PI * p.q());
    let double = double * ne * wc * p.gamma * p.gamma / PI;
    let scale = single.norm() + double.norm();
    let total = real(single + double, scale, "zero-temperature magnetization")?;
    Ok(match form {
        ZeroTemperatureForm::Corrected => 0.25 * total,
        _ => total,
    })
}

/// Asymptotic resistance tensor up to a common factor: `[[m_xλ_x, m_xω_cx], [−m_yω_cy, m_yλ_y]]`.
pub fn resistance_tensor(p: &SystemParams) -> [[f64; 2]; 2] {
    [[p.mass_x * p.lambda_x, p.mass_x * p.omega_cx], [-p.mass_y * p.omega_cy, p.mass_y * p.lambda_y]]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::charpoly::solve_roots;
    use crate::propagator::build_from_params;

    fn axial(ly: f64, g: f64, wc: f64, t: f64) -> SystemParams {
        SystemParams { lambda_y: ly, gamma: g, omega_cx: wc, omega_cy: wc, temperature: t, ..SystemParams::default() }
    }

    #[test]
    fn exp_m1_matches_direct() {
        for z in [C::new(1e-5, 2e-5), C::new(-0.3, 2.0), C::new(-40.0, 1.0)] {
            assert!((exp_m1(z) - (z.exp() - 1.0)).norm() < 1e-14 * (1.0 + z.exp().norm()));
        }
    }

    #[test]
    fn routes_agree_with_halved_prefactors() {
        for p in [axial(2.0, 12.0, 2.0, 0.0), axial(2.0, 12.0, 2.0, 0.5), axial(6.0, 5.0, 3.0, 0.3)] {
            let e = MagnetismEngine::from_params(&p).unwrap();
            let spec = QuadratureSpec::default();
            for t in [0.3, 2.0, 7.0] {
                let r = e.magnetization(t, &spec, PairExpansionForm::Halved).unwrap();
                assert!(r.magnetization < 0.0);
                assert!(matches!(
                    e.magnetization(t, &spec, PairExpansionForm::Printed),
                    Err(Error::CrossCheckFailure(_))
                ));
            }
        }
    }

    #[test]
    fn prototype_reference_value() {
        // M(∞) at T = 0 for λ_y = 2, γ = 12, ω_c = 2
        let p = axial(2.0, 12.0, 2.0, 0.0);
        let r = solve_roots(&p).unwrap();
        let m = asymptotic_magnetization(&p, &r, &QuadratureSpec::with_tol(1e-11)).unwrap();
        assert!((m.magnetization + 0.32371826411427834).abs() < 1e-9, "{}", m.magnetization);
    }

    #[test]
    fn zero_temperature_forms() {
        for p in [axial(2.0, 12.0, 2.0, 0.0), axial(1.0, 12.0, 1.0, 0.0).nudged(), axial(6.0, 5.0, 3.0, 0.0)] {
            let r = solve_roots(&p).unwrap();
            let q = asymptotic_magnetization(&p, &r, &QuadratureSpec::with_tol(1e-11)).unwrap().magnetization;
            let c = zero_temperature_magnetization(&p, &r, ZeroTemperatureForm::Corrected).unwrap();
            assert!((c - q).abs() < 1e-8 * q.abs(), "{c} vs {q}");
            let pg = zero_temperature_magnetization(&p, &r, ZeroTemperatureForm::PrintedGamma).unwrap();
            assert!((pg - 4.0 * q).abs() < 1e-8 * q.abs());
            let pr = zero_temperature_magnetization(&p, &r, ZeroTemperatureForm::Printed).unwrap();
            assert!((pr / q - 4.0).abs() > 0.1 && (pr / q - 1.0).abs() > 0.1);
        }
    }

    #[test]
    fn field_free_and_initial_values_vanish() {
        let p = axial(1.5, 12.0, 0.0, 0.4);
        let e = MagnetismEngine::from_params(&p).unwrap();
        assert!(e.angular_momentum(3.0, &QuadratureSpec::default()).unwrap().abs() < 1e-14);
        let p = axial(1.5, 12.0, 2.0, 0.4);
        let e = MagnetismEngine::from_params(&p).unwrap();
        let r = e.magnetization(0.0, &QuadratureSpec::default(), PairExpansionForm::Halved).unwrap();
        assert_eq!(r.magnetization, 0.0);
    }

    #[test]
    fn not_axial_is_rejected() {
        let p = SystemParams::axial(2.0, 1.0, 12.0, 1.0, 0.0);
        let (roots, props) = build_from_params(&p).unwrap();
        assert_eq!(angular_momentum_at(&p, &props, &roots, 1.0, &QuadratureSpec::default()), Err(Error::NotAxial));
        assert_eq!(zero_temperature_magnetization(&p, &roots, ZeroTemperatureForm::Corrected), Err(Error::NotAxial));
    }

    #[test]
    fn markovian_and_resistance() {
        let p = axial(1.0, 12.0, 1.0, 1.0);
        assert!((markovian_magnetization(&p) + 0.5).abs() < 1e-15);
        assert_eq!(markovian_magnetization(&axial(1.0, 12.0, 0.0, 1.0)), 0.0);
        let r = resistance_tensor(&p);
        assert_eq!(r[0][1], -r[1][0]);
        let r0 = resistance_tensor(&axial(1.0, 12.0, 0.0, 1.0));
        assert_eq!(r0[0][1], 0.0);
        assert_eq!(r0[0][0], r[0][0]);
    }

    #[test]
    fn quantization_limit() {
        let p = axial(1.0, 1000.0, 100.0, 0.0).nudged();
        let r = solve_roots(&p).unwrap();
        let lz = asymptotic_angular_momentum(&p, &r, &QuadratureSpec::default()).unwrap();
        assert!((lz + 0.99438).abs() < 1e-4, "{lz}");
    }

    #[test]
    fn classical_field_scaling_needs_temperature_above_field() {
        // M·ω_c → −n e T/m once T ≫ ω_c; at moderate T the ground-state part dominates
        let spec = QuadratureSpec::default();
        let hot = axial(1.0, 1000.0, 100.0, 1e4).nudged();
        let m = asymptotic_magnetization(&hot, &solve_roots(&hot).unwrap(), &spec).unwrap().magnetization;
        assert!((m * hot.omega_c() / -hot.temperature - 1.0).abs() < 0.02, "{}", m * hot.omega_c());
        let warm = axial(1.0, 1000.0, 100.0, 1.0).nudged();
        let lz = asymptotic_angular_momentum(&warm, &solve_roots(&warm).unwrap(), &spec).unwrap();
        assert!((lz + 1.0).abs() < 0.02, "{lz}");
    }
}
