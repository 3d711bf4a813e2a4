//! Real orthonormal spherical harmonics and sphere quadrature.
//!
//! The basis is indexed by (l, m) with -l <= m <= l, packed as
//! idx = l*l + l + m. Values are computed with the fully normalized
//! associated Legendre recurrence, which is stable at the degrees used
//! here. Quadrature pairs Gauss-Legendre nodes in cos(theta) with a
//! uniform midpoint rule in phi; products of basis functions up to the
//! configured degree are integrated exactly up to rounding.

use crate::exec::map_indexed;
use crate::{Error, Result, Vec3};

/// Packed size of a basis truncated at degree `lmax`.
pub fn basis_len(lmax: usize) -> usize {
    (lmax + 1) * (lmax + 1)
}

/// Packed index of the (l, m) basis function.
pub fn pack(l: usize, m: i64) -> usize {
    (l * l) as usize + (l as i64 + m) as usize
}

/// Evaluate every basis function up to `lmax` at a unit direction.
///
/// Convention: no Condon-Shortley phase; m > 0 carries cos(m phi), m < 0
/// carries sin(|m| phi), both scaled by sqrt(2) so the basis is orthonormal
/// for the standard sphere measure.
pub fn eval_basis(dir: &Vec3, lmax: usize) -> Vec<f64> {
    let x = dir.z.clamp(-1.0, 1.0);
    let sin_theta = (1.0 - x * x).max(0.0).sqrt();
    let (cos_phi, sin_phi) = if sin_theta > 1e-300 {
        (dir.x / sin_theta, dir.y / sin_theta)
    } else {
        (1.0, 0.0)
    };

    let mut out = vec![0.0; basis_len(lmax)];

    // pmm holds the normalized sectoral value for the current m.
    let mut pmm = (1.0 / (4.0 * std::f64::consts::PI)).sqrt();
    let mut cos_m = 1.0; // cos(m phi)
    let mut sin_m = 0.0; // sin(m phi)
    for m in 0..=lmax {
        if m > 0 {
            pmm *= sin_theta * ((2.0 * m as f64 + 1.0) / (2.0 * m as f64)).sqrt();
            let c = cos_m * cos_phi - sin_m * sin_phi;
            let s = sin_m * cos_phi + cos_m * sin_phi;
            cos_m = c;
            sin_m = s;
        }
        let azim_scale = if m == 0 { 1.0 } else { std::f64::consts::SQRT_2 };
        let mut p_prev = 0.0;
        let mut p_curr = pmm;
        for l in m..=lmax {
            if l > m {
                let lf = l as f64;
                let mf = m as f64;
                let a = ((4.0 * lf * lf - 1.0) / (lf * lf - mf * mf)).sqrt();
                let b = if l == m + 1 {
                    0.0
                } else {
                    (((lf - 1.0) * (lf - 1.0) - mf * mf) / (4.0 * (lf - 1.0) * (lf - 1.0) - 1.0))
                        .sqrt()
                };
                let p_next = a * (x * p_curr - b * p_prev);
                p_prev = p_curr;
                p_curr = p_next;
            }
            let val = azim_scale * p_curr;
            out[pack(l, m as i64)] = val * cos_m;
            if m > 0 {
                out[pack(l, -(m as i64))] = val * sin_m;
            }
        }
    }
    out
}

/// Evaluate a coefficient vector at a unit direction.
pub fn evaluate(coeffs: &[f64], dir: &Vec3) -> f64 {
    let lmax = (coeffs.len() as f64).sqrt() as usize - 1;
    debug_assert_eq!(basis_len(lmax), coeffs.len());
    let basis = eval_basis(dir, lmax);
    let mut acc = 0.0;
    for (c, y) in coeffs.iter().zip(&basis) {
        acc += c * y;
    }
    acc
}

/// Quadrature nodes and weights on the unit sphere. Weights sum to 4 pi.
#[derive(Clone, Debug)]
pub struct QuadratureGrid {
    pub nodes: Vec<Vec3>,
    pub weights: Vec<f64>,
    n_theta: usize,
}

impl QuadratureGrid {
    /// Gauss-Legendre x uniform-phi grid with `n_theta` polar nodes and
    /// 2 * n_theta azimuthal nodes.
    pub fn new(n_theta: usize) -> QuadratureGrid {
        let (xs, ws) = gauss_legendre(n_theta);
        let n_phi = 2 * n_theta;
        let dphi = 2.0 * std::f64::consts::PI / n_phi as f64;
        let mut nodes = Vec::with_capacity(n_theta * n_phi);
        let mut weights = Vec::with_capacity(n_theta * n_phi);
        for (x, w) in xs.iter().zip(&ws) {
            let sin_theta = (1.0 - x * x).max(0.0).sqrt();
            for j in 0..n_phi {
                let phi = dphi * (j as f64 + 0.5);
                nodes.push(Vec3::new(
                    sin_theta * phi.cos(),
                    sin_theta * phi.sin(),
                    *x,
                ));
                weights.push(w * dphi);
            }
        }
        QuadratureGrid {
            nodes,
            weights,
            n_theta,
        }
    }

    pub fn n_theta(&self) -> usize {
        self.n_theta
    }

    /// The same weights attached to rotated node directions.
    pub fn rotated(&self, rot: &nalgebra::Matrix3<f64>) -> QuadratureGrid {
        QuadratureGrid {
            nodes: self.nodes.iter().map(|n| rot * n).collect(),
            weights: self.weights.clone(),
            n_theta: self.n_theta,
        }
    }

    /// Ensure products of two degree-`lmax` expansions are integrated
    /// exactly: needs n_theta > lmax in the polar factor and
    /// n_phi > 2 lmax in the azimuthal factor.
    pub fn check_degree(&self, lmax: usize) -> Result<()> {
        if self.n_theta <= lmax || 2 * self.n_theta <= 2 * lmax {
            return Err(Error::QuadratureTooCoarse {
                nodes: self.n_theta,
                degree: lmax,
            });
        }
        Ok(())
    }

    /// Integrate a scalar field over the sphere.
    pub fn integrate(&self, values: &[f64]) -> f64 {
        debug_assert_eq!(values.len(), self.nodes.len());
        let mut acc = 0.0;
        for (v, w) in values.iter().zip(&self.weights) {
            acc += v * w;
        }
        acc
    }
}

/// Project point samples of a field on the grid onto the basis:
/// c_lm = sum_q w_q f(x_q) Y_lm(x_q).
///
/// Basis evaluation fans out across nodes; the weighted reduction runs in
/// fixed node order so results are identical for any thread count.
pub fn project(grid: &QuadratureGrid, samples: &[f64], lmax: usize) -> Result<Vec<f64>> {
    grid.check_degree(lmax)?;
    debug_assert_eq!(samples.len(), grid.nodes.len());
    let per_node: Vec<Vec<f64>> = map_indexed(grid.nodes.len(), |q| {
        let basis = eval_basis(&grid.nodes[q], lmax);
        let scale = samples[q] * grid.weights[q];
        basis.into_iter().map(|y| scale * y).collect()
    });
    let mut coeffs = vec![0.0; basis_len(lmax)];
    for contrib in &per_node {
        for (c, v) in coeffs.iter_mut().zip(contrib) {
            *c += v;
        }
    }
    Ok(coeffs)
}

/// Evaluate a coefficient vector at many directions at once.
pub fn evaluate_many(coeffs: &[f64], dirs: &[Vec3]) -> Vec<f64> {
    map_indexed(dirs.len(), |i| evaluate(coeffs, &dirs[i]))
}

/// Gauss-Legendre nodes and weights on [-1, 1] by Newton iteration on the
/// Legendre recurrence.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut xs = vec![0.0; n];
    let mut ws = vec![0.0; n];
    for i in 0..(n + 1) / 2 {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        for _ in 0..100 {
            let (p, dp) = legendre_with_derivative(n, x);
            let dx = p / dp;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        let (_, dp) = legendre_with_derivative(n, x);
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        xs[i] = -x.abs(); // ascending order, symmetric pair below
        ws[i] = w;
        xs[n - 1 - i] = x.abs();
        ws[n - 1 - i] = w;
    }
    (xs, ws)
}

/// Legendre polynomial P_n and its derivative at x.
pub fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    if n == 0 {
        return (1.0, 0.0);
    }
    let mut p_prev = 1.0;
    let mut p = x;
    for k in 2..=n {
        let kf = k as f64;
        let p_next = ((2.0 * kf - 1.0) * x * p - (kf - 1.0) * p_prev) / kf;
        p_prev = p;
        p = p_next;
    }
    let dp = n as f64 * (x * p - p_prev) / (x * x - 1.0);
    (p, dp)
}
