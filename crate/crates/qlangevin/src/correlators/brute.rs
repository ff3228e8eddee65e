//! Time-domain oracle for the correlators.
//!
//! `J_qr(t) = Σ_k w_k ∫_{−t}^{t} c(u) R_k(u) du` with the lag overlap
//! `R_k(u) = ∫ f_qk(τ) f_rk(τ + u) dτ` and the noise correlation `c(u)` from the bath module.
//! The logarithmic singularity of `c` at `u = 0` is removed by `u = t·v³`.

use super::{CorrelatorSet, PAIRS};
use crate::bath::{unit_noise_correlation, Axis};
use crate::error::{Error, Result};
use crate::params::SystemParams;
use crate::propagator::{ExpSum, PropagatorSet};
use crate::quadrature::{integrate_vector, QuadratureSpec};

fn eval_all(kernels: &[[ExpSum; 2]; 4], tau: f64) -> [[f64; 2]; 4] {
    std::array::from_fn(|c| std::array::from_fn(|k| kernels[c][k].eval_complex(tau).re))
}

/// `R(u)` and `R(−u)` for every pair and axis, `u ≥ 0`, as 40 values.
fn lag_overlaps(kernels: &[[ExpSum; 2]; 4], t: f64, u: f64, spec: &QuadratureSpec) -> Result<Vec<f64>> {
    let len = t - u;
    if len <= 0.0 {
        return Ok(vec![0.0; 40]);
    }
    let r = integrate_vector(
        |tau, out| {
            let a = eval_all(kernels, tau);
            let b = eval_all(kernels, tau + u);
            for (n, &(q, s)) in PAIRS.iter().enumerate() {
                for k in 0..2 {
                    out[4 * n + 2 * k] = a[q][k] * b[s][k];
                    out[4 * n + 2 * k + 1] = b[q][k] * a[s][k];
                }
            }
        },
        40,
        &[0.0, len],
        f64::INFINITY,
        spec,
    )?;
    Ok(r.into_iter().map(|v| v.value).collect())
}

/// Oracle values of all ten `J` and `J̇` at `t`, with adaptive error estimates for `J`.
pub fn brute_force_correlator(
    p: &SystemParams,
    props: &PropagatorSet,
    t: f64,
    spec: &QuadratureSpec,
) -> Result<CorrelatorSet> {
    if !(t >= 0.0) || !t.is_finite() {
        return Err(Error::InvalidArgument(format!("time must be finite and nonnegative, got {t}")));
    }
    if t == 0.0 {
        return Ok(CorrelatorSet::zero(0.0));
    }
    let kernels = props.noise_kernels();
    let w = [Axis::X.coupling(p), Axis::Y.coupling(p)];
    let inner = QuadratureSpec { rel_tol: spec.rel_tol * 1e-2, abs_tol: spec.abs_tol * 1e-2, ..spec.clone() };
    let corr_spec = inner.clone();
    let ft = eval_all(&kernels, t);
    let mut failure = None;
    let r = integrate_vector(
        |v, out| {
            let u = t * v * v * v;
            let jac = 3.0 * t * v * v;
            if u <= 0.0 || failure.is_some() {
                out.iter_mut().for_each(|o| *o = 0.0);
                return;
            }
            let c = match unit_noise_correlation(p.gamma, p.temperature, u, &corr_spec) {
                Ok(c) => c * jac,
                Err(e) => {
                    failure = Some(e);
                    out.iter_mut().for_each(|o| *o = 0.0);
                    return;
                }
            };
            let rr = match lag_overlaps(&kernels, t, u, &inner) {
                Ok(r) => r,
                Err(e) => {
                    failure = Some(e);
                    out.iter_mut().for_each(|o| *o = 0.0);
                    return;
                }
            };
            for n in 0..10 {
                out[n] = c * (0..2).map(|k| w[k] * (rr[4 * n + 2 * k] + rr[4 * n + 2 * k + 1])).sum::<f64>();
            }
            // S_ck = ∫₀ᵗ c(u) f_ck(t − u) du
            let back = eval_all(&kernels, t - u);
            for ci in 0..4 {
                for k in 0..2 {
                    out[10 + 2 * ci + k] = c * back[ci][k];
                }
            }
        },
        18,
        &[0.0, 1.0],
        f64::INFINITY,
        spec,
    )?;
    if let Some(e) = failure {
        return Err(e);
    }
    let mut out = CorrelatorSet::zero(t);
    for (n, &(q, s)) in PAIRS.iter().enumerate() {
        out.j[n] = r[n].value;
        out.error[n] = r[n].error;
        out.j_dot[n] = (0..2)
            .map(|k| w[k] * (ft[q][k] * r[10 + 2 * s + k].value + ft[s][k] * r[10 + 2 * q + k].value))
            .sum();
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::correlators::{CorrelatorEngine, Pair};
    use crate::propagator::build_from_params;

    #[test]
    fn reference_values() {
        let p = SystemParams { lambda_y: 2.0, omega_cx: 2.0, omega_cy: 2.0, temperature: 0.5, ..SystemParams::default() };
        let (_, props) = build_from_params(&p).unwrap();
        let b = brute_force_correlator(&p, &props, 2.0, &QuadratureSpec::with_tol(1e-9)).unwrap();
        assert!((b.get(Pair::PixPix) - 1.4279694).abs() < 2e-7, "{}", b.get(Pair::PixPix));
        assert!((b.get(Pair::XPiy) + 0.3840667).abs() < 2e-7, "{}", b.get(Pair::XPiy));
    }

    #[test]
    fn agrees_with_frequency_route() {
        let p = SystemParams { mass_y: 1.5, lambda_y: 0.7, gamma: 6.0, omega_cx: 1.5, omega_cy: 1.0, temperature: 0.0, ..SystemParams::default() };
        let (roots, props) = build_from_params(&p).unwrap();
        let spec = QuadratureSpec::with_tol(1e-10);
        let b = brute_force_correlator(&p, &props, 1.2, &spec).unwrap();
        let c = CorrelatorEngine::new(&p, &props, &roots).unwrap().at(1.2, &spec).unwrap();
        for n in 0..10 {
            let scale = c.j[n].abs().max(1e-3);
            assert!((b.j[n] - c.j[n]).abs() < 1e-7 * scale, "J {n}: {} vs {}", b.j[n], c.j[n]);
            let sd = c.j_dot[n].abs().max(1e-3);
            assert!((b.j_dot[n] - c.j_dot[n]).abs() < 1e-7 * sd, "Jdot {n}: {} vs {}", b.j_dot[n], c.j_dot[n]);
        }
    }
}
