//! Smooth support functions: harmonic projection, heat damping, convexity
//! margin, and radial recovery.
//!
//! A body's support function is sampled on the quadrature grid, expanded in
//! the harmonic basis, and damped per degree. The damped field is certified
//! convex by measuring the smallest tangential eigenvalue of
//! (Hess h + h I) over the grid; a deficit is repaired by adding a constant
//! (a small ball in the Minkowski sense), which shifts only the degree-0
//! coefficient.

use crate::exec::map_indexed;
use crate::harmonics::{self, QuadratureGrid};
use crate::hull::ConvexBody;
use crate::io::{check_config_hash, config_header, data_lines, fmt_f64};
use crate::num::{tangent_frame, SplitMix64};
use crate::{Error, Result, Vec3};
use std::fmt::Write as _;
use std::path::Path;

/// Finite-difference step (radians) for the tangential Hessian.
const HESSIAN_STEP: f64 = 1e-4;

/// Pattern-search shrink floor (radians) for radial recovery. The gauge
/// minimum is quadratic, so a 1e-7 step pins the value to ~1e-14 relative.
const RADIAL_STEP_FLOOR: f64 = 1e-7;

#[derive(Clone, Debug)]
pub struct SupportField {
    pub lmax: usize,
    pub coeffs: Vec<f64>,
}

impl SupportField {
    pub fn evaluate(&self, dir: &Vec3) -> f64 {
        harmonics::evaluate(&self.coeffs, dir)
    }

    /// Mean support: the degree-0 part.
    pub fn mean(&self) -> f64 {
        self.coeffs[0] / (2.0 * std::f64::consts::PI.sqrt())
    }
}

/// Expand the body's support function on the grid.
pub fn project_support(
    body: &ConvexBody,
    lmax: usize,
    grid: &QuadratureGrid,
) -> Result<SupportField> {
    let samples: Vec<f64> = map_indexed(grid.nodes.len(), |q| body.support(&grid.nodes[q]));
    let coeffs = harmonics::project(grid, &samples, lmax)?;
    Ok(SupportField { lmax, coeffs })
}

/// Damp degree l by exp(-l(l+1) epsilon).
pub fn heat_mollify(field: &SupportField, epsilon: f64) -> SupportField {
    let mut coeffs = field.coeffs.clone();
    for l in 0..=field.lmax {
        let damp = (-(l as f64) * (l as f64 + 1.0) * epsilon).exp();
        for m in -(l as i64)..=(l as i64) {
            coeffs[harmonics::pack(l, m)] *= damp;
        }
    }
    SupportField {
        lmax: field.lmax,
        coeffs,
    }
}

/// Smallest tangential eigenvalue of (Hess h + h I) at one direction, by
/// central differences along great circles.
pub fn convexity_eig_min(field: &SupportField, dir: &Vec3) -> f64 {
    let (e1, e2) = tangent_frame(dir);
    let d1 = (e1 + e2) / std::f64::consts::SQRT_2;
    let d2 = (e1 - e2) / std::f64::consts::SQRT_2;
    let h0 = field.evaluate(dir);
    let quad = |v: &Vec3| {
        let s = HESSIAN_STEP;
        let plus = field.evaluate(&(s.cos() * dir + s.sin() * v));
        let minus = field.evaluate(&(s.cos() * dir - s.sin() * v));
        (plus + minus - 2.0 * h0) / (s * s) + h0
    };
    let q11 = quad(&e1);
    let q22 = quad(&e2);
    let q12 = (quad(&d1) - quad(&d2)) / 2.0;
    let mean = 0.5 * (q11 + q22);
    let dev = (0.25 * (q11 - q22) * (q11 - q22) + q12 * q12).sqrt();
    mean - dev
}

/// Convexity margin: min of the tangential eigenvalue over the grid.
pub fn measure_margin(field: &SupportField, grid: &QuadratureGrid) -> f64 {
    let eigs: Vec<f64> = map_indexed(grid.nodes.len(), |q| {
        convexity_eig_min(field, &grid.nodes[q])
    });
    let mut min = f64::INFINITY;
    for e in eigs {
        if e < min {
            min = e;
        }
    }
    min
}

/// Minkowski-add a ball so the measured margin reaches at least `mu_min`.
/// Returns the repaired field and the radius added (0 when none needed).
pub fn margin_repair(field: &SupportField, margin: f64, mu_min: f64) -> (SupportField, f64) {
    if margin >= mu_min {
        return (field.clone(), 0.0);
    }
    let shift = mu_min - margin;
    let mut coeffs = field.coeffs.clone();
    coeffs[0] += shift * 2.0 * std::f64::consts::PI.sqrt();
    (
        SupportField {
            lmax: field.lmax,
            coeffs,
        },
        shift,
    )
}

/// Sup-norm of the support difference over a direction grid; for convex
/// bodies this is the Hausdorff distance.
pub fn hausdorff_distance(a: &SupportField, b: &SupportField, grid: &QuadratureGrid) -> f64 {
    let diffs: Vec<f64> = map_indexed(grid.nodes.len(), |q| {
        (a.evaluate(&grid.nodes[q]) - b.evaluate(&grid.nodes[q])).abs()
    });
    diffs.into_iter().fold(0.0, f64::max)
}

/// Sup-norm distance between a smooth field and a polytope's exact support.
pub fn hausdorff_to_body(field: &SupportField, body: &ConvexBody, grid: &QuadratureGrid) -> f64 {
    let diffs: Vec<f64> = map_indexed(grid.nodes.len(), |q| {
        (field.evaluate(&grid.nodes[q]) - body.support(&grid.nodes[q])).abs()
    });
    diffs.into_iter().fold(0.0, f64::max)
}

/// Sup reconstruction error against the body over seeded random directions.
pub fn reconstruction_error(
    field: &SupportField,
    body: &ConvexBody,
    n_dirs: usize,
    seed: u64,
) -> f64 {
    let mut rng = SplitMix64::new(seed);
    let dirs: Vec<Vec3> = (0..n_dirs).map(|_| rng.next_unit()).collect();
    let errs: Vec<f64> = map_indexed(dirs.len(), |i| {
        (field.evaluate(&dirs[i]) - body.support(&dirs[i])).abs()
    });
    errs.into_iter().fold(0.0, f64::max)
}

/// Radial gauge of the convex body with support h: the largest rho with
/// rho * <x, dir> <= h(x) for every direction x, i.e. the minimum of
/// f(x) = h(x) / <x, dir> over the open hemisphere around dir.
///
/// The grid argmin seeds a shrinking four-direction pattern search on the
/// sphere; the iteration budget is fixed so the result is a deterministic
/// function of (field, grid, dir).
pub fn radial_from_support(field: &SupportField, grid: &QuadratureGrid, dir: &Vec3) -> Result<f64> {
    let mut best_x: Option<Vec3> = None;
    let mut best = f64::INFINITY;
    for x in &grid.nodes {
        let denom = x.dot(dir);
        if denom > 1e-6 {
            let f = field.evaluate(x) / denom;
            if f < best {
                best = f;
                best_x = Some(*x);
            }
        }
    }
    let mut x = best_x.ok_or(Error::NoIntersection(dir.x, dir.y, dir.z))?;
    if best <= 0.0 {
        return Err(Error::NoIntersection(dir.x, dir.y, dir.z));
    }

    let gauge = |p: &Vec3| -> f64 {
        let denom = p.dot(dir);
        if denom <= 1e-12 {
            f64::INFINITY
        } else {
            field.evaluate(p) / denom
        }
    };
    // Initial step: one grid spacing.
    let mut step = std::f64::consts::PI / grid.n_theta() as f64;
    for _ in 0..64 {
        if step < RADIAL_STEP_FLOOR {
            break;
        }
        let (e1, e2) = tangent_frame(&x);
        let mut moved = false;
        for cand_dir in [e1, -e1, e2, -e2] {
            let cand = (step.cos() * x + step.sin() * cand_dir).normalize();
            let f = gauge(&cand);
            if f < best {
                best = f;
                x = cand;
                moved = true;
            }
        }
        if !moved {
            step *= 0.5;
        }
    }
    Ok(best)
}

/// Radial gauge at many directions.
pub fn radial_many(field: &SupportField, grid: &QuadratureGrid, dirs: &[Vec3]) -> Result<Vec<f64>> {
    let results: Vec<Result<f64>> =
        map_indexed(dirs.len(), |i| radial_from_support(field, grid, &dirs[i]));
    results.into_iter().collect()
}

/// Serialize: config-hash header, "lmax N", then "l m value" lines.
pub fn write_field(path: &Path, field: &SupportField, hash: &str) -> Result<()> {
    let mut out = config_header(hash);
    let _ = writeln!(out, "lmax {}", field.lmax);
    for l in 0..=field.lmax {
        for m in -(l as i64)..=(l as i64) {
            let c = field.coeffs[harmonics::pack(l, m)];
            let _ = writeln!(out, "{l} {m} {}", fmt_f64(c));
        }
    }
    std::fs::write(path, out)?;
    Ok(())
}

pub fn read_field(path: &Path, expected_hash: Option<&str>) -> Result<SupportField> {
    let text = std::fs::read_to_string(path)?;
    if let Some(h) = expected_hash {
        check_config_hash(path, &text, h)?;
    }
    let mut lmax: Option<usize> = None;
    let mut coeffs: Vec<f64> = Vec::new();
    for (line_no, line) in data_lines(&text) {
        let toks: Vec<&str> = line.split_whitespace().collect();
        let bad = |msg: &str| Error::parse(path.display().to_string(), format!("line {line_no}: {msg}"));
        match (lmax, toks.as_slice()) {
            (None, ["lmax", n]) => {
                let n: usize = n.parse().map_err(|_| bad("bad lmax"))?;
                lmax = Some(n);
                coeffs = vec![0.0; harmonics::basis_len(n)];
            }
            (Some(n), [l, m, v]) => {
                let l: usize = l.parse().map_err(|_| bad("bad degree"))?;
                let m: i64 = m.parse().map_err(|_| bad("bad order"))?;
                let v: f64 = v.parse().map_err(|_| bad("bad value"))?;
                if l > n || m.unsigned_abs() as usize > l {
                    return Err(bad("degree/order out of range"));
                }
                coeffs[harmonics::pack(l, m)] = v;
            }
            _ => return Err(bad("unexpected record")),
        }
    }
    let lmax = lmax.ok_or_else(|| {
        Error::parse(path.display().to_string(), "missing lmax header".to_string())
    })?;
    Ok(SupportField { lmax, coeffs })
}
