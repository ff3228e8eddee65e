//! Zero-temperature variances in closed form (logarithms of the squared roots).

use std::f64::consts::PI;

use num_complex::Complex64;

use super::AsymptoticVariances;
use crate::charpoly::RootSet;
use crate::error::{Error, Result};
use crate::params::SystemParams;

/// Relative imaginary residue tolerated after conjugate-pair cancellation.
pub const LOG_SUM_IMAG_TOL: f64 = 1e-9;

/// Minimum `|γ² − s_i²|/γ²` required by the forms that divide by `Δ`.
pub const GAMMA_RESONANCE_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum LowTemperatureForm {
    /// Momentum variance from the corrected `ϖ` sums; `x–π` entries from the long-time limit
    /// (`Σ_xπx = 0`, `Σ_xπy` from `ϖ_1, ϖ_2`).
    #[default]
    Derived,
    /// Closed forms with corrected `ϖ_1, ϖ_2, ζ_1..ζ_4`.
    Corrected,
    /// Closed forms without the corrections.
    Printed,
}

type C = Complex64;

fn sq(z: C) -> C {
    z * z
}

/// `ln(a/b) := ½[Ln(a²) − Ln(b²)]`.
pub(crate) fn lnr(a: C, b: C) -> C {
    0.5 * (sq(a).ln() - sq(b).ln())
}

/// Pair order shared by the `ϖ` sums: `((i, j), (k, l))` with `ln(s_i/s_j)`.
const PAIRS: [((usize, usize), (usize, usize)); 6] =
    [((0, 1), (2, 3)), ((0, 2), (3, 1)), ((0, 3), (1, 2)), ((1, 2), (0, 3)), ((1, 3), (2, 0)), ((2, 3), (0, 1))];

fn delta(s: &[C; 4]) -> C {
    let mut d = C::new(1.0, 0.0);
    for i in 0..4 {
        for j in i + 1..4 {
            d *= sq(s[i]) - sq(s[j]);
        }
    }
    d
}

fn varpi(s: &[C; 4], printed: bool) -> [C; 3] {
    let s2 = s.map(sq);
    let s4 = s2.map(sq);
    let mut w1 = C::new(0.0, 0.0);
    let mut w2 = C::new(0.0, 0.0);
    let mut w3 = C::new(0.0, 0.0);
    for (n, &((i, j), (k, l))) in PAIRS.iter().enumerate() {
        let lg = lnr(s[i], s[j]);
        let pij = s2[i] * s2[j];
        w3 += pij * pij * (s2[k] - s2[l]) * lg;
        let t2 = if printed && n == 2 { s2[3] - s4[2] } else { s4[k] - s4[l] };
        w2 += pij * t2 * lg;
        w1 += s2[k] * s2[l] * (s2[k] - s2[l]) * lg;
    }
    if printed {
        // (s_i s_j)^4 (s_i² − s_j²) ln(s_i/s_j) with the uncorrected orientation of each term
        let terms = [(0, 1, 0, 1), (0, 2, 2, 0), (0, 3, 0, 3), (1, 2, 1, 2), (1, 3, 3, 1), (2, 3, 2, 3)];
        w1 = terms
            .iter()
            .map(|&(i, j, a, b)| sq(s2[i] * s2[j]) * (s2[a] - s2[b]) * lnr(s[a], s[b]))
            .sum();
    }
    [w1, w2, w3]
}

/// `ζ_1..ζ_4` over the five squared values `{s_1², .., s_4², γ²}`.
fn zeta(s: &[C; 4], g: f64, printed: bool) -> [C; 4] {
    let gc = C::new(g, 0.0);
    let s2 = s.map(sq);
    let g2 = gc * gc;
    let sign: [f64; 10] = if printed { [1.0; 10] } else { [1.0, -1.0, 1.0, -1.0, 1.0, -1.0, 1.0, 1.0, -1.0, 1.0] };
    // (x, y, z) triples in the uncorrected product structure, with log argument
    let quad_terms: [([usize; 3], usize); 4] = [([1, 2, 3], 0), ([0, 2, 3], 1), ([0, 1, 3], 2), ([0, 1, 2], 3)];
    let vander = |a: C, b: C, c: C| (a - b) * (a - c) * (b - c);
    let mut out = [C::new(0.0, 0.0); 4];
    for (n, &(o, i)) in quad_terms.iter().enumerate() {
        let (a, b, c) = (s2[o[0]], s2[o[1]], s2[o[2]]);
        let v = match n {
            2 => (a - b) * (b - c) * (a - c),
            3 => (b - c) * (a - b) * (a - c),
            _ => vander(a, b, c),
        };
        let lg = lnr(gc, s[i]);
        let base = sign[n] * v * lg;
        let x = g2 * s2[i];
        out[0] += a * b * c * base;
        out[1] += x * (a * b + a * c + b * c) * base;
        out[2] += x * x * (a + b + c) * base;
        out[3] += x * x * x * base;
    }
    let pair_terms: [((usize, usize), (usize, usize)); 6] =
        [((0, 1), (2, 3)), ((0, 2), (1, 3)), ((0, 3), (1, 2)), ((1, 2), (0, 3)), ((1, 3), (0, 2)), ((2, 3), (0, 1))];
    for (m, &((i, j), (k, l))) in pair_terms.iter().enumerate() {
        let n = 4 + m;
        let (a, b) = (s2[k], s2[l]);
        let v = (g2 - a) * (g2 - b) * (a - b);
        let lg = lnr(s[i], s[j]);
        let base = sign[n] * v * lg;
        let x = s2[i] * s2[j];
        out[0] += g2 * a * b * base;
        let second = if printed && m == 4 { g2 * a + b + a * b } else { g2 * a + g2 * b + a * b };
        out[1] += x * second * base;
        out[2] += x * x * (g2 + a + b) * base;
        out[3] += x * x * x * base;
    }
    out
}

pub(crate) fn real(z: C, scale: f64, context: &'static str) -> Result<f64> {
    if z.im.abs() > LOG_SUM_IMAG_TOL * scale.max(z.re.abs()).max(f64::MIN_POSITIVE) {
        return Err(Error::ImaginaryResidue { context, imag: z.im });
    }
    Ok(z.re)
}

pub(crate) fn check_resonance(p: &SystemParams, s: &[C; 4]) -> Result<C> {
    let g2 = p.gamma * p.gamma;
    let gap = s.iter().map(|z| (g2 - z * z).norm()).fold(f64::INFINITY, f64::min);
    if !(gap > GAMMA_RESONANCE_TOL * g2) {
        return Err(Error::GammaResonance { gap });
    }
    Ok(s.iter().map(|z| g2 - z * z).product())
}

fn x_block(p: &SystemParams, s: &[C; 4], form: LowTemperatureForm) -> Result<(f64, f64, f64)> {
    let (g, lx, ly) = (p.gamma, p.lambda_x, p.lambda_y);
    let (w2c, q) = (p.omega_c2(), p.q());
    let d = delta(s);
    let w = varpi(s, form == LowTemperatureForm::Printed);
    let pp = g * g * p.mass_x / (PI * d) * (ly * g * g * w[0] * q + w[1] * (lx * g * (g - 2.0 * ly) + ly * w2c) + w[2] * lx);
    let pp_scale = (g * g * p.mass_x / PI * (ly * g * g * w[0] * q / d).norm()).max(pp.norm());
    let pixpix = real(pp, pp_scale, "low-temperature momentum variance")?;
    match form {
        LowTemperatureForm::Derived => {
            let k1 = g * g * (lx + ly) - 2.0 * g * lx * ly;
            let v = -g * g * p.omega_cx / (PI * d) * ((lx + ly) * w[1] + k1 * w[0]);
            let scale = (g * g * p.omega_cx / PI * (k1 * w[0] / d).norm()).max(v.norm());
            Ok((pixpix, 0.0, real(v, scale, "low-temperature x-pi variance")?))
        }
        LowTemperatureForm::Corrected | LowTemperatureForm::Printed => {
            let big = check_resonance(p, s)? * d;
            let z = zeta(s, g, form == LowTemperatureForm::Printed);
            let xpx = g * g / (PI * q * big)
                * (g.powi(3) * ly * ly * z[0] * (lx - g) * q
                    - g * ly * z[1] * (g * lx * (ly * (ly + 2.0 * lx) - g * (2.0 * ly + lx) + g * g) + w2c * (ly * lx + g * (ly - lx)))
                    + lx * ly * z[2] * ((lx + 2.0 * (ly - g)) * g + w2c)
                    - lx * z[3] * ly);
            let xpy = -g * g * p.omega_cx / (PI * q * big)
                * (g.powi(3) * lx * z[0] * (g - ly) * q
                    + g * z[1] * (w2c * lx * (2.0 * g + ly) - ly * (2.0 * lx * q - lx * g * (3.0 * ly + 2.0 * (lx - g)) - g * g * (g - ly)))
                    + z[2] * (lx * w2c + ly * (lx * (lx + ly) + 2.0 * g * (g - lx) - ly * g))
                    + z[3] * ly);
            let sx = (g.powi(5) * ly * ly / (PI * q) * (z[0] * (lx - g) * q / big).norm()).max(xpx.norm());
            let sy = (g.powi(5) * p.omega_cx * lx / (PI * q) * (z[0] * (g - ly) * q / big).norm()).max(xpy.norm());
            Ok((pixpix, real(xpx, sx, "low-temperature x-pix variance")?, real(xpy, sy, "low-temperature x-piy variance")?))
        }
    }
}

/// Zero-temperature long-time variances from the root logarithms.
pub fn low_temperature_variances(
    p: &SystemParams,
    roots: &RootSet,
    form: LowTemperatureForm,
) -> Result<AsymptoticVariances> {
    let margin = roots.degeneracy_margin;
    if !(margin >= crate::charpoly::DEGENERACY_THRESHOLD) {
        return Err(Error::DegenerateRoots { margin });
    }
    let s = roots.roots;
    let (pixpix, xpix, xpiy) = x_block(p, &s, form)?;
    let (piypiy, ypiy, ypix_sw) = x_block(&p.swap_xy(), &s, form)?;
    Ok(AsymptoticVariances { pixpix, piypiy, pixpiy: 0.0, xpix, xpiy, ypix: -ypix_sw, ypiy })
}

/// `∫₀^∞ ω^{2k−1}/Π_j(ω² + r_j) dω` by partial fractions; an independent oracle for the log sums.
#[cfg(test)]
fn partial_fraction_moment(r: &[C], k: i32) -> C {
    let mut tot = C::new(0.0, 0.0);
    for (j, &rj) in r.iter().enumerate() {
        let mut den = C::new(1.0, 0.0);
        for (l, &rl) in r.iter().enumerate() {
            if l != j {
                den *= rl - rj;
            }
        }
        tot += (-rj).powi(k - 1) / den * rj.ln();
    }
    -0.5 * tot
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::charpoly::solve_roots;

    fn draws() -> Vec<SystemParams> {
        vec![
            SystemParams { lambda_y: 2.0, omega_cx: 2.0, omega_cy: 2.0, ..SystemParams::default() },
            SystemParams { lambda_y: 3.0, gamma: 5.0, omega_cx: 1.5, omega_cy: 1.5, ..SystemParams::default() },
            SystemParams { lambda_y: 0.4 / 0.7, gamma: 20.0 / 0.7, omega_cx: 4.0 / 0.7, omega_cy: 4.0 / 0.7, ..SystemParams::default() },
        ]
    }

    #[test]
    fn log_sums_match_partial_fractions() {
        for p in draws() {
            let r = solve_roots(&p).unwrap();
            let s = r.roots;
            let d = delta(&s);
            let w = varpi(&s, false);
            let s2: Vec<C> = s.iter().map(|z| z * z).collect();
            for k in 0..3 {
                let want = partial_fraction_moment(&s2, k as i32 + 1);
                assert!((w[k] / d - want).norm() < 1e-10 * want.norm(), "varpi{}", k + 1);
            }
            let mut s5 = s2.clone();
            s5.push(C::new(p.gamma * p.gamma, 0.0));
            let big = check_resonance(&p, &s).unwrap() * d;
            let z = zeta(&s, p.gamma, false);
            for k in 0..4 {
                let want = partial_fraction_moment(&s5, k as i32 + 1);
                assert!((z[k] / big - want).norm() < 1e-10 * want.norm(), "zeta{}", k + 1);
            }
        }
    }

    #[test]
    fn printed_log_sums_are_wrong() {
        let p = draws().remove(0);
        let r = solve_roots(&p).unwrap();
        let s = r.roots;
        let d = delta(&s);
        let s2: Vec<C> = s.iter().map(|z| z * z).collect();
        let w = varpi(&s, true);
        assert!((w[0] / d - partial_fraction_moment(&s2, 1)).norm() > 1e-3);
        assert!((w[1] / d - partial_fraction_moment(&s2, 2)).norm() > 1e-3 * partial_fraction_moment(&s2, 2).norm());
        assert!((w[2] / d - partial_fraction_moment(&s2, 3)).norm() < 1e-10 * partial_fraction_moment(&s2, 3).norm());
    }

    #[test]
    fn reference_values_at_zero_temperature() {
        let p = draws().remove(0);
        let r = solve_roots(&p).unwrap();
        let v = low_temperature_variances(&p, &r, LowTemperatureForm::Derived).unwrap();
        assert!((v.pixpix - 1.33671859362).abs() < 1e-9);
        assert!((v.piypiy - 1.82764795811).abs() < 1e-9);
        assert!((v.xpiy + 0.32371826411).abs() < 1e-9);
        assert_eq!(v.pixpiy, 0.0);
    }

    #[test]
    fn resonance_is_reported() {
        let p = draws().remove(0);
        let mut r = solve_roots(&p).unwrap();
        r.roots[3] = C::new(-p.gamma, 0.0);
        assert!(matches!(
            low_temperature_variances(&p, &r, LowTemperatureForm::Corrected),
            Err(Error::GammaResonance { .. })
        ));
    }
}
