//! First and second moments: ODE integration with time-dependent coefficients, and the
//! explicit propagator-based solution used as an oracle.

use nalgebra::Matrix4;

use crate::correlators::{matrix_to_pairs, pairs_to_matrix, CorrelatorEngine, CorrelatorSet, PAIRS};
use crate::diffusion::{diffusion_at, DiffusionSet};
use crate::error::{Error, Result};
use crate::params::SystemParams;
use crate::propagator::PropagatorSet;
use crate::quadrature::QuadratureSpec;
use crate::transport::{AsymptoticTransport, TransportModel, TransportSample};

#[derive(Debug, Clone, PartialEq)]
pub struct OdeOptions {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_steps: usize,
    /// Smallest step relative to the current time scale before giving up.
    pub min_step: f64,
}

impl Default for OdeOptions {
    fn default() -> Self {
        Self { rel_tol: 1e-9, abs_tol: 1e-12, max_steps: 200_000, min_step: 1e-14 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CovarianceState {
    pub t: f64,
    /// `⟨x⟩, ⟨y⟩, ⟨π_x⟩, ⟨π_y⟩`.
    pub mean: [f64; 4],
    pub sigma: Matrix4<f64>,
}

impl CovarianceState {
    pub fn new(t: f64, mean: [f64; 4], sigma: Matrix4<f64>) -> Self {
        Self { t, mean, sigma }
    }

    /// The ten independent entries in storage order.
    pub fn pairs(&self) -> [f64; 10] {
        matrix_to_pairs(&self.sigma)
    }

    pub fn max_asymmetry(&self) -> f64 {
        (self.sigma - self.sigma.transpose()).abs().max()
    }
}

/// Drift matrix `M` of `d⟨q⟩/dt = M⟨q⟩` over `(x, y, π_x, π_y)`.
pub fn drift_matrix(p: &SystemParams, lambda_pi: (f64, f64), omega_tilde: (f64, f64)) -> Matrix4<f64> {
    let mut m = Matrix4::zeros();
    m[(0, 2)] = 1.0 / p.mass_x;
    m[(1, 3)] = 1.0 / p.mass_y;
    m[(2, 2)] = -lambda_pi.0;
    m[(2, 3)] = omega_tilde.1;
    m[(3, 2)] = -omega_tilde.0;
    m[(3, 3)] = -lambda_pi.1;
    m
}

impl TransportSample {
    pub fn drift_matrix(&self, p: &SystemParams) -> Matrix4<f64> {
        drift_matrix(p, (self.lambda_pi_x, self.lambda_pi_y), (self.omega_tilde_cx, self.omega_tilde_cy))
    }
}

impl AsymptoticTransport {
    pub fn drift_matrix(&self, p: &SystemParams) -> Matrix4<f64> {
        drift_matrix(p, (self.lambda_pi_x, self.lambda_pi_y), (self.omega_tilde_cx, self.omega_tilde_cy))
    }
}

/// Source of the drift and diffusion matrices along a trajectory.
pub trait Coefficients {
    fn drift(&self, t: f64) -> Result<Matrix4<f64>>;
    /// Drift and diffusion at the same time.
    fn drift_and_diffusion(&self, t: f64) -> Result<(Matrix4<f64>, Matrix4<f64>)>;
}

/// Coefficients sampled exactly from the propagators and correlators.
#[derive(Debug, Clone)]
pub struct TimeDependentCoefficients {
    pub params: SystemParams,
    pub transport: TransportModel,
    pub correlators: CorrelatorEngine,
    pub spec: QuadratureSpec,
}

impl TimeDependentCoefficients {
    pub fn new(p: &SystemParams, transport: TransportModel, correlators: CorrelatorEngine, spec: QuadratureSpec) -> Self {
        Self { params: *p, transport, correlators, spec }
    }

    pub fn diffusion(&self, t: f64) -> Result<DiffusionSet> {
        let tr = self.transport.at(t)?;
        let c = self.correlators.at(t, &self.spec)?;
        diffusion_at(&self.params, &tr, &c)
    }
}

impl Coefficients for TimeDependentCoefficients {
    fn drift(&self, t: f64) -> Result<Matrix4<f64>> {
        Ok(self.transport.at(t)?.drift_matrix(&self.params))
    }

    fn drift_and_diffusion(&self, t: f64) -> Result<(Matrix4<f64>, Matrix4<f64>)> {
        let tr = self.transport.at(t)?;
        let c = self.correlators.at(t, &self.spec)?;
        Ok((tr.drift_matrix(&self.params), diffusion_at(&self.params, &tr, &c)?.matrix()))
    }
}

/// Time-independent coefficients, e.g. the asymptotic ones.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConstantCoefficients {
    pub drift: Matrix4<f64>,
    pub diffusion: Matrix4<f64>,
}

impl Coefficients for ConstantCoefficients {
    fn drift(&self, _t: f64) -> Result<Matrix4<f64>> {
        Ok(self.drift)
    }

    fn drift_and_diffusion(&self, _t: f64) -> Result<(Matrix4<f64>, Matrix4<f64>)> {
        Ok((self.drift, self.diffusion))
    }
}

// Dormand–Prince 5(4) tableau
const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

/// Adaptive Dormand–Prince integration reporting the state at every grid time.
///
/// Steps are shortened to land exactly on grid points. `accept` sees every accepted state.
pub fn dopri45<F, A>(mut f: F, y0: &[f64], grid: &[f64], opts: &OdeOptions, mut accept: A) -> Result<Vec<Vec<f64>>>
where
    F: FnMut(f64, &[f64], &mut [f64]) -> Result<()>,
    A: FnMut(f64, &[f64]) -> Result<()>,
{
    check_grid(grid)?;
    let n = y0.len();
    let mut out = Vec::with_capacity(grid.len());
    let mut t = grid[0];
    let mut y = y0.to_vec();
    out.push(y.clone());
    if grid.len() == 1 {
        return Ok(out);
    }
    let mut k: [Vec<f64>; 7] = std::array::from_fn(|_| vec![0.0; n]);
    let mut tmp = vec![0.0; n];
    let mut ynew = vec![0.0; n];
    f(t, &y, &mut k[0])?;
    let span = grid[grid.len() - 1] - grid[0];
    let mut h = initial_step(&y, &k[0], opts, span);
    let mut err_old: f64 = 1e-4;
    let mut steps = 0usize;
    for &target in &grid[1..] {
        while t < target {
            steps += 1;
            if steps > opts.max_steps {
                return Err(Error::StepSizeUnderflow { t });
            }
            let last = t + h >= target - 1e-12 * target.abs().max(1.0);
            let hh = if last { target - t } else { h };
            if hh <= opts.min_step * t.abs().max(1.0) {
                return Err(Error::StepSizeUnderflow { t });
            }
            let stage = |tmp: &mut [f64], k: &[Vec<f64>; 7], coef: &[(usize, f64)]| {
                for i in 0..n {
                    tmp[i] = y[i] + hh * coef.iter().map(|&(j, a)| a * k[j][i]).sum::<f64>();
                }
            };
            stage(&mut tmp, &k, &[(0, A21)]);
            f(t + C2 * hh, &tmp, &mut k[1])?;
            stage(&mut tmp, &k, &[(0, A31), (1, A32)]);
            f(t + C3 * hh, &tmp, &mut k[2])?;
            stage(&mut tmp, &k, &[(0, A41), (1, A42), (2, A43)]);
            f(t + C4 * hh, &tmp, &mut k[3])?;
            stage(&mut tmp, &k, &[(0, A51), (1, A52), (2, A53), (3, A54)]);
            f(t + C5 * hh, &tmp, &mut k[4])?;
            stage(&mut tmp, &k, &[(0, A61), (1, A62), (2, A63), (3, A64), (4, A65)]);
            let t_new = if last { target } else { t + hh };
            f(t_new, &tmp, &mut k[5])?;
            for i in 0..n {
                ynew[i] = y[i] + hh * (B1 * k[0][i] + B3 * k[2][i] + B4 * k[3][i] + B5 * k[4][i] + B6 * k[5][i]);
            }
            f(t_new, &ynew, &mut k[6])?;
            let mut err = 0.0;
            for i in 0..n {
                let e = hh
                    * (E1 * k[0][i] + E3 * k[2][i] + E4 * k[3][i] + E5 * k[4][i] + E6 * k[5][i] + E7 * k[6][i]);
                let sc = opts.abs_tol + opts.rel_tol * y[i].abs().max(ynew[i].abs());
                err += (e / sc) * (e / sc);
            }
            let err = (err / n as f64).sqrt();
            if err <= 1.0 {
                let fac = 0.9 * err.max(1e-10).powf(-0.17) * err_old.powf(0.04);
                t = t_new;
                y.copy_from_slice(&ynew);
                k.swap(0, 6);
                accept(t, &y)?;
                err_old = err.max(1e-4);
                let grown = hh * fac.clamp(0.2, 10.0);
                h = if last { h.max(grown) } else { grown };
            } else {
                h = hh * (0.9 * err.powf(-0.2)).clamp(0.2, 1.0);
            }
        }
        out.push(y.clone());
    }
    Ok(out)
}

fn initial_step(y: &[f64], dy: &[f64], opts: &OdeOptions, span: f64) -> f64 {
    let mut d0: f64 = 0.0;
    let mut d1: f64 = 0.0;
    for i in 0..y.len() {
        let sc = opts.abs_tol + opts.rel_tol * y[i].abs();
        d0 += (y[i] / sc).powi(2);
        d1 += (dy[i] / sc).powi(2);
    }
    let (d0, d1) = (d0.sqrt(), d1.sqrt());
    let h = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
    h.min(0.01 * span.max(1e-300)).max(1e-10 * span)
}

fn check_grid(grid: &[f64]) -> Result<()> {
    if grid.is_empty() {
        return Err(Error::InvalidArgument("empty time grid".into()));
    }
    if grid[0] != 0.0 {
        return Err(Error::InvalidArgument("time grid must start at 0".into()));
    }
    if grid.windows(2).any(|w| !(w[1] > w[0])) || grid.iter().any(|t| !t.is_finite()) {
        return Err(Error::InvalidArgument("time grid must be strictly increasing and finite".into()));
    }
    Ok(())
}

/// Mean trajectory `d⟨q⟩/dt = M(t)⟨q⟩`.
pub fn evolve_means<C: Coefficients>(
    coeffs: &C,
    initial_mean: [f64; 4],
    grid: &[f64],
    opts: &OdeOptions,
) -> Result<Vec<[f64; 4]>> {
    let rhs = |t: f64, y: &[f64], dy: &mut [f64]| {
        let m = coeffs.drift(t)?;
        for i in 0..4 {
            dy[i] = (0..4).map(|j| m[(i, j)] * y[j]).sum();
        }
        Ok(())
    };
    let ys = dopri45(rhs, &initial_mean, grid, opts, |_, _| Ok(()))?;
    Ok(ys.into_iter().map(|y| [y[0], y[1], y[2], y[3]]).collect())
}

const DIAGONAL: [(usize, &str); 4] = [(0, "xx"), (1, "yy"), (7, "pixpix"), (8, "piypiy")];

/// Means and covariance `Σ̇ = MΣ + ΣMᵀ + 2D`, integrating the ten upper-triangle entries.
pub fn evolve_covariance<C: Coefficients>(
    coeffs: &C,
    initial_mean: [f64; 4],
    initial_sigma: &Matrix4<f64>,
    grid: &[f64],
    opts: &OdeOptions,
) -> Result<Vec<CovarianceState>> {
    if (initial_sigma - initial_sigma.transpose()).abs().max() > 1e-12 * (1.0 + initial_sigma.abs().max()) {
        return Err(Error::InvalidArgument("initial covariance is not symmetric".into()));
    }
    let lowest = initial_sigma.symmetric_eigen().eigenvalues.min();
    if lowest < -1e-12 * (1.0 + initial_sigma.abs().max()) {
        return Err(Error::InvalidArgument(format!("initial covariance has negative eigenvalue {lowest:.3e}")));
    }
    let mut y0 = vec![0.0; 14];
    y0[..4].copy_from_slice(&initial_mean);
    y0[4..].copy_from_slice(&matrix_to_pairs(initial_sigma));
    let rhs = |t: f64, y: &[f64], dy: &mut [f64]| {
        let (m, d) = coeffs.drift_and_diffusion(t)?;
        for i in 0..4 {
            dy[i] = (0..4).map(|j| m[(i, j)] * y[j]).sum();
        }
        let mut pv = [0.0; 10];
        pv.copy_from_slice(&y[4..]);
        let s = pairs_to_matrix(&pv);
        let ms = m * s;
        for (k, &(i, j)) in PAIRS.iter().enumerate() {
            dy[4 + k] = ms[(i, j)] + ms[(j, i)] + 2.0 * d[(i, j)];
        }
        Ok(())
    };
    let floor = 10.0 * opts.abs_tol;
    let accept = |t: f64, y: &[f64]| {
        let scale = y[4..].iter().fold(1.0f64, |a, v| a.max(v.abs()));
        for (k, name) in DIAGONAL {
            let v = y[4 + k];
            if v < -floor * scale {
                return Err(Error::NegativeVariance { entry: name, value: v, t });
            }
        }
        Ok(())
    };
    let ys = dopri45(rhs, &y0, grid, opts, accept)?;
    Ok(grid
        .iter()
        .zip(ys)
        .map(|(&t, y)| {
            let mut pv = [0.0; 10];
            pv.copy_from_slice(&y[4..]);
            CovarianceState::new(t, [y[0], y[1], y[2], y[3]], pairs_to_matrix(&pv))
        })
        .collect())
}

/// Explicit solution `⟨q(t)⟩ = Φ⟨q(0)⟩`, `Σ(t) = ΦΣ(0)Φᵀ + J(t)`.
pub fn covariance_oracle(
    props: &PropagatorSet,
    correlators: &CorrelatorSet,
    initial_mean: [f64; 4],
    initial_sigma: &Matrix4<f64>,
) -> Result<CovarianceState> {
    let t = correlators.t;
    let f = props.fundamental_matrix(t)?;
    let phi = Matrix4::from_fn(|i, j| f[i][j]);
    let mean_v = phi * nalgebra::Vector4::from_column_slice(&initial_mean);
    let sigma = phi * initial_sigma * phi.transpose() + correlators.matrix();
    Ok(CovarianceState::new(t, [mean_v[0], mean_v[1], mean_v[2], mean_v[3]], sigma))
}
