//! Smooth-surface metric data recovered from radial samples.
//!
//! A convex surface parametrized over the sphere as the radial graph
//! x(d) = rho(d) d carries the metric g = rho^2 I + grad rho (x) grad rho
//! and second fundamental form (rho^2 I + 2 grad rho (x) grad rho
//! - rho Hess rho) / sqrt(rho^2 + |grad rho|^2), with derivatives taken
//! covariantly in the round metric. Derivatives at a mesh vertex come from
//! a weighted quadratic least-squares fit over the vertex's 2-ring in
//! geodesic normal coordinates, where covariant and coordinate derivatives
//! agree at the center. This route is the cross-check companion to the
//! angle-defect curvature of the intrinsic mesh.

use crate::exec::map_indexed;
use crate::intrinsic::RadialField;
use crate::mesh::SphereMesh;
use crate::num::tangent_frame;
use crate::{Error, Result};
use nalgebra::{Matrix2, SMatrix, SVector};

/// Condition-number ceiling for the normalized local fit.
pub const STENCIL_CONDITION_LIMIT: f64 = 1e8;

#[derive(Clone, Copy, Debug)]
pub struct SmoothMetricSample {
    /// Pullback metric in the orthonormal tangent frame at the vertex.
    pub g: Matrix2<f64>,
    /// Second fundamental form in the same frame.
    pub second_form: Matrix2<f64>,
    /// Gauss curvature det(second_form) / det(g).
    pub curvature: f64,
}

/// Value, gradient, and Hessian of per-vertex samples at one vertex, in
/// the round metric's orthonormal frame (geodesic normal coordinates).
#[derive(Clone, Copy, Debug)]
pub struct LocalFit {
    pub value: f64,
    pub grad: [f64; 2],
    pub hess: [[f64; 2]; 2],
    pub condition: f64,
}

/// Weighted quadratic least-squares over the 2-ring of `vertex`.
pub fn local_fit(samples: &[f64], mesh: &SphereMesh, vertex: usize) -> Result<LocalFit> {
    let center = mesh.directions[vertex];
    let (e1, e2) = tangent_frame(&center);

    // 2-ring in deterministic order: the vertex, its neighbors, then
    // neighbors-of-neighbors, each added on first encounter.
    let mut ring: Vec<u32> = vec![vertex as u32];
    let mut seen = vec![false; mesh.directions.len()];
    seen[vertex] = true;
    for &n in &mesh.vertex_neighbors[vertex] {
        if !seen[n as usize] {
            seen[n as usize] = true;
            ring.push(n);
        }
    }
    let first_ring_end = ring.len();
    for idx in 1..first_ring_end {
        let v = ring[idx] as usize;
        for &n in &mesh.vertex_neighbors[v] {
            if !seen[n as usize] {
                seen[n as usize] = true;
                ring.push(n);
            }
        }
    }

    // Geodesic normal coordinates: radius = angle to the center, azimuth
    // from the tangent projection. Scale by the ring radius so the normal
    // matrix conditioning reflects stencil geometry, not mesh size.
    let mut coords: Vec<(f64, f64, f64)> = Vec::with_capacity(ring.len());
    let mut radius_scale = 0.0f64;
    for &j in &ring {
        let d = mesh.directions[j as usize];
        let theta = crate::num::unit_angle(&center, &d);
        let px = d.dot(&e1);
        let py = d.dot(&e2);
        let plane = (px * px + py * py).sqrt();
        let (x, y) = if plane < 1e-300 {
            (0.0, 0.0)
        } else {
            (theta * px / plane, theta * py / plane)
        };
        radius_scale = radius_scale.max(theta);
        coords.push((x, y, samples[j as usize]));
    }
    if radius_scale <= 0.0 {
        return Err(Error::IllConditionedStencil {
            vertex,
            condition: f64::INFINITY,
        });
    }

    let mut normal = SMatrix::<f64, 6, 6>::zeros();
    let mut rhs = SVector::<f64, 6>::zeros();
    for &(x, y, value) in &coords {
        let xs = x / radius_scale;
        let ys = y / radius_scale;
        let r2 = xs * xs + ys * ys;
        let w = (-r2).exp();
        let basis = [1.0, xs, ys, 0.5 * xs * xs, xs * ys, 0.5 * ys * ys];
        for a in 0..6 {
            for b in 0..6 {
                normal[(a, b)] += w * basis[a] * basis[b];
            }
            rhs[a] += w * basis[a] * value;
        }
    }

    let eig = normal.symmetric_eigenvalues();
    let max_eig = eig.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let min_eig = eig.iter().cloned().fold(f64::INFINITY, f64::min);
    let condition = if min_eig > 0.0 {
        max_eig / min_eig
    } else {
        f64::INFINITY
    };
    if condition > STENCIL_CONDITION_LIMIT {
        return Err(Error::IllConditionedStencil { vertex, condition });
    }
    let chol = normal.cholesky().ok_or(Error::IllConditionedStencil {
        vertex,
        condition: f64::INFINITY,
    })?;
    let c = chol.solve(&rhs);

    let s = radius_scale;
    Ok(LocalFit {
        value: c[0],
        grad: [c[1] / s, c[2] / s],
        hess: [
            [c[3] / (s * s), c[4] / (s * s)],
            [c[4] / (s * s), c[5] / (s * s)],
        ],
        condition,
    })
}

/// Metric, second fundamental form, and Gauss curvature of the radial
/// graph at one vertex.
pub fn smooth_metric_at(
    field: &RadialField,
    mesh: &SphereMesh,
    vertex: usize,
) -> Result<SmoothMetricSample> {
    let fit = local_fit(&field.rho, mesh, vertex)?;
    let rho = fit.value;
    let [r1, r2] = fit.grad;
    let grad_sq = r1 * r1 + r2 * r2;
    let g = Matrix2::new(
        rho * rho + r1 * r1,
        r1 * r2,
        r1 * r2,
        rho * rho + r2 * r2,
    );
    let norm = (rho * rho + grad_sq).sqrt();
    let h = fit.hess;
    let second_form = Matrix2::new(
        (rho * rho + 2.0 * r1 * r1 - rho * h[0][0]) / norm,
        (2.0 * r1 * r2 - rho * h[0][1]) / norm,
        (2.0 * r1 * r2 - rho * h[1][0]) / norm,
        (rho * rho + 2.0 * r2 * r2 - rho * h[1][1]) / norm,
    );
    let curvature = second_form.determinant() / g.determinant();
    Ok(SmoothMetricSample {
        g,
        second_form,
        curvature,
    })
}

/// Gauss curvature of the radial graph at every vertex.
pub fn smooth_curvature_all(field: &RadialField, mesh: &SphereMesh) -> Result<Vec<f64>> {
    let results: Vec<Result<f64>> = map_indexed(mesh.directions.len(), |v| {
        smooth_metric_at(field, mesh, v).map(|s| s.curvature)
    });
    results.into_iter().collect()
}

/// Gradient bound for the reciprocal gauge v = 1/rho: returns
/// (max over vertices of |grad v|^2 + v^2, max of v^2). For a convex body
/// the first never exceeds the second; the discrete gap measures stencil
/// error only.
pub fn reciprocal_gradient_bound(field: &RadialField, mesh: &SphereMesh) -> Result<(f64, f64)> {
    let v: Vec<f64> = field.reciprocal();
    let combined: Vec<Result<f64>> = map_indexed(mesh.directions.len(), |i| {
        let fit = local_fit(&v, mesh, i)?;
        let [g1, g2] = fit.grad;
        // Use the exact sample for the zeroth-order part; the fit's
        // constant term differs from it by smoothing residual only.
        Ok(g1 * g1 + g2 * g2 + v[i] * v[i])
    });
    let mut max_combined = f64::NEG_INFINITY;
    for c in combined {
        max_combined = max_combined.max(c?);
    }
    let max_vsq = v.iter().map(|x| x * x).fold(f64::NEG_INFINITY, f64::max);
    Ok((max_combined, max_vsq))
}
