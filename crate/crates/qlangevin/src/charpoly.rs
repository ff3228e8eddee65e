//! The quartic characteristic polynomial and its roots.

use nalgebra::Matrix4;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::params::SystemParams;

/// Minimum relative pairwise root separation accepted by [`solve_roots`].
pub const DEGENERACY_THRESHOLD: f64 = 1e-8;

const NEWTON_POLISH_STEPS: usize = 2;

#[derive(Debug, Clone, PartialEq)]
pub struct RootSet {
    /// Sorted by ascending `|Re|`, ties by descending `Im`.
    pub roots: [Complex64; 4],
    /// `b_i = 1 / Π_{j≠i}(s_i − s_j)`.
    pub weights: [Complex64; 4],
    /// `min |s_i − s_j| / max |s_i|`.
    pub degeneracy_margin: f64,
}

/// Monic coefficients `[1, c3, c2, c1, c0]`, highest degree first.
pub fn characteristic_coefficients(p: &SystemParams) -> [f64; 5] {
    let g = p.gamma;
    let w2 = p.omega_c2();
    let ls = p.lambda_x + p.lambda_y;
    [
        1.0,
        2.0 * g,
        g * g + w2 + g * ls,
        2.0 * g * w2 + g * g * ls,
        g * g * (w2 + p.lambda_x * p.lambda_y),
    ]
}

/// Evaluates the polynomial and its derivative at `z`.
pub fn eval_poly(c: &[f64; 5], z: Complex64) -> (Complex64, Complex64) {
    let mut v = Complex64::new(c[0], 0.0);
    let mut d = Complex64::new(0.0, 0.0);
    for &ck in &c[1..] {
        d = d * z + v;
        v = v * z + ck;
    }
    (v, d)
}

fn companion_eigenvalues(c: &[f64; 5]) -> [Complex64; 4] {
    let m = Matrix4::new(
        0.0, 0.0, 0.0, -c[4], //
        1.0, 0.0, 0.0, -c[3], //
        0.0, 1.0, 0.0, -c[2], //
        0.0, 0.0, 1.0, -c[1],
    );
    let ev = m.complex_eigenvalues();
    [ev[0], ev[1], ev[2], ev[3]]
}

/// Double-double number `hi + lo`.
#[derive(Clone, Copy)]
struct Dd {
    hi: f64,
    lo: f64,
}

fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    (s, (a - (s - bb)) + (b - bb))
}

impl Dd {
    fn new(x: f64) -> Self {
        Self { hi: x, lo: 0.0 }
    }

    fn add(self, o: Dd) -> Dd {
        let (s, e) = two_sum(self.hi, o.hi);
        let (hi, lo) = two_sum(s, e + self.lo + o.lo);
        Dd { hi, lo }
    }

    fn mul_f(self, x: f64) -> Dd {
        let p = self.hi * x;
        let e = self.hi.mul_add(x, -p);
        let (hi, lo) = two_sum(p, e + self.lo * x);
        Dd { hi, lo }
    }

    fn neg(self) -> Dd {
        Dd { hi: -self.hi, lo: -self.lo }
    }
}

/// Compensated Horner evaluation; accurate even next to multiple roots.
fn eval_poly_dd(c: &[f64; 5], z: Complex64) -> Complex64 {
    let (mut re, mut im) = (Dd::new(c[0]), Dd::new(0.0));
    for &ck in &c[1..] {
        let nre = re.mul_f(z.re).add(im.mul_f(z.im).neg()).add(Dd::new(ck));
        let nim = re.mul_f(z.im).add(im.mul_f(z.re));
        re = nre;
        im = nim;
    }
    Complex64::new(re.hi + re.lo, im.hi + im.lo)
}

/// First three derivatives at `z`.
fn derivatives(c: &[f64; 5], z: Complex64) -> [Complex64; 3] {
    let d1 = 4.0 * z.powu(3) + 3.0 * c[1] * z * z + 2.0 * c[2] * z + c[3];
    let d2 = 12.0 * z * z + 6.0 * c[1] * z + 2.0 * c[2];
    let d3 = 24.0 * z + 6.0 * c[1];
    [d1, d2, d3]
}

fn polish(c: &[f64; 5], mut z: Complex64) -> Complex64 {
    for _ in 0..NEWTON_POLISH_STEPS {
        let v = eval_poly_dd(c, z);
        let d = derivatives(c, z)[0];
        if d.norm() == 0.0 {
            break;
        }
        let step = v / d;
        if !step.is_finite() {
            break;
        }
        z -= step;
    }
    z
}

/// Re-seeds a close pair from the local quadratic model around the nearby zero of `P'`.
fn split_cluster(c: &[f64; 5], a: Complex64, b: Complex64) -> (Complex64, Complex64) {
    let mut r = 0.5 * (a + b);
    for _ in 0..8 {
        let [d1, d2, _] = derivatives(c, r);
        if d2.norm() == 0.0 {
            break;
        }
        let step = d1 / d2;
        if !step.is_finite() {
            break;
        }
        r -= step;
    }
    let p = eval_poly_dd(c, r);
    let [_, d2, d3] = derivatives(c, r);
    if d2.norm() == 0.0 {
        return (a, b);
    }
    let d = (-2.0 * p / d2).sqrt();
    if d.norm() == 0.0 {
        return (r, r);
    }
    // cubic term of the Taylor model
    let corr = -d3 * d / (6.0 * d2);
    let ra = polish(c, r + d * (1.0 + corr));
    let rb = polish(c, r - d * (1.0 - corr));
    (ra, rb)
}

/// Treats root pairs closer than `1e-4·scale` as clusters.
fn refine_clusters(c: &[f64; 5], roots: &mut [Complex64; 4]) {
    let scale = roots.iter().map(|z| z.norm()).fold(0.0, f64::max);
    for i in 0..4 {
        for j in i + 1..4 {
            if (roots[i] - roots[j]).norm() < 1e-4 * scale {
                let (a, b) = split_cluster(c, roots[i], roots[j]);
                roots[i] = a;
                roots[j] = b;
            }
        }
    }
}

/// Makes conjugate partners exact conjugates and real roots exactly real.
fn pair_conjugates(roots: &mut [Complex64; 4]) {
    let scale = roots.iter().map(|z| z.norm()).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
    let mut done = [false; 4];
    for i in 0..4 {
        if done[i] {
            continue;
        }
        if roots[i].im.abs() <= 1e-13 * scale {
            roots[i].im = 0.0;
            done[i] = true;
            continue;
        }
        let target = roots[i].conj();
        let partner = (0..4)
            .filter(|&j| j != i && !done[j])
            .min_by(|&a, &b| (roots[a] - target).norm().total_cmp(&(roots[b] - target).norm()));
        if let Some(j) = partner {
            let re = 0.5 * (roots[i].re + roots[j].re);
            let im = 0.5 * (roots[i].im.abs() + roots[j].im.abs());
            roots[i] = Complex64::new(re, im);
            roots[j] = Complex64::new(re, -im);
            done[j] = true;
        }
        done[i] = true;
    }
}

/// Orders roots by ascending `|Re|`, ties broken by descending `Im`.
pub fn sort_roots(roots: &mut [Complex64; 4]) {
    roots.sort_by(|a, b| {
        a.re.abs()
            .total_cmp(&b.re.abs())
            .then_with(|| b.im.total_cmp(&a.im))
    });
}

pub fn degeneracy_margin(roots: &[Complex64; 4]) -> f64 {
    let scale = roots.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let mut gap = f64::INFINITY;
    for i in 0..4 {
        for j in i + 1..4 {
            gap = gap.min((roots[i] - roots[j]).norm());
        }
    }
    if scale == 0.0 {
        0.0
    } else {
        gap / scale
    }
}

/// Partial-fraction weights `b_i = [Π_{j≠i}(s_i − s_j)]⁻¹`.
pub fn weights(roots: &[Complex64; 4]) -> Result<[Complex64; 4]> {
    let margin = degeneracy_margin(roots);
    if !(margin >= DEGENERACY_THRESHOLD) {
        return Err(Error::DegenerateRoots { margin });
    }
    let mut b = [Complex64::new(0.0, 0.0); 4];
    for i in 0..4 {
        let mut prod = Complex64::new(1.0, 0.0);
        for j in 0..4 {
            if j != i {
                prod *= roots[i] - roots[j];
            }
        }
        b[i] = prod.inv();
    }
    Ok(b)
}

pub fn solve_roots(p: &SystemParams) -> Result<RootSet> {
    let c = characteristic_coefficients(p);
    let mut roots = companion_eigenvalues(&c).map(|z| polish(&c, z));
    refine_clusters(&c, &mut roots);
    pair_conjugates(&mut roots);
    sort_roots(&mut roots);
    let weights = weights(&roots)?;
    Ok(RootSet { roots, weights, degeneracy_margin: degeneracy_margin(&roots) })
}

impl RootSet {
    /// Largest real part, i.e. the slowest decay rate.
    pub fn slowest_rate(&self) -> f64 {
        self.roots.iter().map(|z| z.re).fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn max_modulus(&self) -> f64 {
        self.roots.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// `Σ b_i s_i^k`.
    pub fn moment(&self, k: i32) -> Complex64 {
        self.roots.iter().zip(&self.weights).map(|(s, b)| b * s.powi(k)).sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn params(lx: f64, ly: f64, g: f64, wc: f64) -> SystemParams {
        SystemParams {
            lambda_x: lx,
            lambda_y: ly,
            gamma: g,
            omega_cx: wc,
            omega_cy: wc,
            ..SystemParams::default()
        }
    }

    fn polymul(a: &[f64], b: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; a.len() + b.len() - 1];
        for (i, x) in a.iter().enumerate() {
            for (j, y) in b.iter().enumerate() {
                out[i + j] += x * y;
            }
        }
        out
    }

    #[test]
    fn zero_coupling_factorization() {
        let (g, wc) = (2.0, 1.5);
        let p = params(0.0, 0.0, g, wc);
        let want = polymul(&[1.0, 2.0 * g, g * g], &[1.0, 0.0, wc * wc]);
        assert_eq!(characteristic_coefficients(&p).to_vec(), want);
    }

    #[test]
    fn zero_field_factorization() {
        let (lx, ly, g) = (1.3, 0.7, 5.0);
        let p = params(lx, ly, g, 0.0);
        let want = polymul(&[1.0, g, g * lx], &[1.0, g, g * ly]);
        for (a, b) in characteristic_coefficients(&p).iter().zip(&want) {
            assert!((a - b).abs() <= 1e-14 * b.abs().max(1.0));
        }
    }

    #[test]
    fn constant_term_example() {
        let p = params(1.0, 3.0, 2.0, 2.0);
        assert_eq!(characteristic_coefficients(&p)[4], 28.0);
    }

    #[test]
    fn synthetic_weights() {
        let b = weights(&[c(1.0, 0.0), c(2.0, 0.0), c(3.0, 0.0), c(4.0, 0.0)]).unwrap();
        let want = [-1.0 / 6.0, 0.5, -0.5, 1.0 / 6.0];
        for (x, w) in b.iter().zip(want) {
            assert!((x - w).norm() < 1e-15);
        }
    }

    #[test]
    fn double_root_is_degenerate() {
        let p = params(0.0, 0.0, 2.0, 1.0);
        assert!(matches!(solve_roots(&p), Err(Error::DegenerateRoots { .. })));
    }

    #[test]
    fn axial_zero_field_needs_nudge() {
        let p = params(1.0, 1.0, 12.0, 0.0);
        assert!(solve_roots(&p).is_err());
        assert!(solve_roots(&p.nudged()).is_ok());
    }

    #[test]
    fn ordering_contract() {
        let r = solve_roots(&params(1.0, 2.0, 12.0, 2.0)).unwrap();
        for w in r.roots.windows(2) {
            assert!(w[0].re.abs() <= w[1].re.abs());
            if w[0].re == w[1].re {
                assert!(w[0].im >= w[1].im);
            }
        }
        assert_eq!(r.roots[0], r.roots[1].conj());
        assert!(r.roots[0].im > 0.0);
    }
}
