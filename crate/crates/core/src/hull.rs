//! Convex hulls of finite point clouds, with support and radial evaluation.
//!
//! The hull is built incrementally with points inserted in lexicographic
//! order, so the facet list (including the triangulation of non-simplicial
//! faces) is a pure function of the input set. Support queries are taken
//! relative to the vertex centroid, which is strictly interior for any
//! nondegenerate body.

use crate::io::{check_config_hash, config_header, data_lines, fmt_f64};
use crate::{Error, Result, Vec3};
use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::Path;

/// Relative inradius floor: bodies thinner than this fraction of their
/// circumradius are rejected as degenerate.
pub const DEFAULT_MIN_INRADIUS_REL: f64 = 1e-6;

/// Relative visibility threshold for the incremental insertion step.
const VISIBILITY_EPS_REL: f64 = 1e-12;

#[derive(Clone, Debug)]
pub struct ConvexBody {
    vertices: Vec<Vec3>,
    facets: Vec<[usize; 3]>,
    normals: Vec<Vec3>,
    /// Distance from `center` to each facet plane (positive).
    offsets: Vec<f64>,
    center: Vec3,
    inradius: f64,
    circumradius: f64,
}

impl ConvexBody {
    /// Build the hull of a point cloud and run the nondegeneracy gate.
    pub fn from_points(points: &[Vec3]) -> Result<ConvexBody> {
        Self::from_points_with_floor(points, DEFAULT_MIN_INRADIUS_REL)
    }

    pub fn from_points_with_floor(points: &[Vec3], min_inradius_rel: f64) -> Result<ConvexBody> {
        let (vertices, facets) = incremental_hull(points)?;
        let center = vertices.iter().sum::<Vec3>() / vertices.len() as f64;

        let mut normals = Vec::with_capacity(facets.len());
        let mut offsets = Vec::with_capacity(facets.len());
        let mut circumradius: f64 = 0.0;
        for v in &vertices {
            circumradius = circumradius.max((v - center).norm());
        }
        for f in &facets {
            let (a, b, c) = (vertices[f[0]], vertices[f[1]], vertices[f[2]]);
            let n = (b - a).cross(&(c - a));
            let norm = n.norm();
            if norm <= 1e-30 {
                return Err(Error::DegenerateInput("zero-area hull facet".into()));
            }
            let n = n / norm;
            let off = n.dot(&(a - center));
            if off <= 0.0 {
                return Err(Error::DegenerateInput(
                    "hull center not strictly interior".into(),
                ));
            }
            normals.push(n);
            offsets.push(off);
        }

        let mut body = ConvexBody {
            vertices,
            facets,
            normals,
            offsets,
            center,
            inradius: 0.0,
            circumradius,
        };
        body.inradius = body.chebyshev_inradius();
        let threshold = min_inradius_rel * body.circumradius;
        if !(body.inradius > threshold) {
            return Err(Error::Degenerate {
                inradius: body.inradius,
                threshold,
            });
        }
        Ok(body)
    }

    pub fn vertices(&self) -> &[Vec3] {
        &self.vertices
    }

    pub fn facets(&self) -> &[[usize; 3]] {
        &self.facets
    }

    pub fn facet_normals(&self) -> &[Vec3] {
        &self.normals
    }

    pub fn center(&self) -> Vec3 {
        self.center
    }

    pub fn inradius(&self) -> f64 {
        self.inradius
    }

    pub fn circumradius(&self) -> f64 {
        self.circumradius
    }

    /// Support function relative to the center: max over vertices of
    /// <v - center, dir>.
    pub fn support(&self, dir: &Vec3) -> f64 {
        let mut best = f64::NEG_INFINITY;
        for v in &self.vertices {
            let d = (v - self.center).dot(dir);
            if d > best {
                best = d;
            }
        }
        best
    }

    /// Radial gauge: distance from the center to the boundary along `dir`
    /// (unit). Equals the smallest positive ray-plane intersection over the
    /// facet planes; for an interior center the exit facet realizes it.
    pub fn radial(&self, dir: &Vec3) -> Result<f64> {
        let mut best = f64::INFINITY;
        for (n, off) in self.normals.iter().zip(&self.offsets) {
            let denom = n.dot(dir);
            if denom > 1e-14 {
                let rho = off / denom;
                if rho < best {
                    best = rho;
                }
            }
        }
        if best.is_finite() {
            Ok(best)
        } else {
            Err(Error::NoIntersection(dir.x, dir.y, dir.z))
        }
    }

    /// Surface point hit by the ray from the center along `dir`.
    pub fn surface_point(&self, dir: &Vec3) -> Result<Vec3> {
        Ok(self.center + self.radial(dir)? * dir)
    }

    /// Signed distance deficit: min over facet planes of (offset - <x -
    /// center, n>), positive strictly inside.
    pub fn plane_clearance(&self, x: &Vec3) -> f64 {
        let rel = x - self.center;
        let mut best = f64::INFINITY;
        for (n, off) in self.normals.iter().zip(&self.offsets) {
            let d = off - n.dot(&rel);
            if d < best {
                best = d;
            }
        }
        best
    }

    /// Chebyshev center search: best of a coarse candidate grid refined by a
    /// shrinking axis-aligned pattern search. Exact enough for the
    /// degeneracy gate and for reporting.
    fn chebyshev_inradius(&self) -> f64 {
        let mut best_x = self.center;
        let mut best = self.plane_clearance(&best_x);
        for v in &self.vertices {
            let cand = self.center + 0.5 * (v - self.center);
            let f = self.plane_clearance(&cand);
            if f > best {
                best = f;
                best_x = cand;
            }
        }
        let mut step = 0.25 * self.circumradius;
        let axes = [
            Vec3::new(1.0, 0.0, 0.0),
            Vec3::new(0.0, 1.0, 0.0),
            Vec3::new(0.0, 0.0, 1.0),
        ];
        while step > 1e-9 * self.circumradius {
            let mut improved = false;
            for ax in &axes {
                for sign in [-1.0, 1.0] {
                    let cand = best_x + sign * step * ax;
                    let f = self.plane_clearance(&cand);
                    if f > best {
                        best = f;
                        best_x = cand;
                        improved = true;
                    }
                }
            }
            if !improved {
                step *= 0.5;
            }
        }
        best
    }
}

fn lex_less(a: &Vec3, b: &Vec3) -> bool {
    (a.x, a.y, a.z) < (b.x, b.y, b.z)
}

/// Incremental hull core: returns compacted vertices (in lexicographic
/// order) and outward-oriented facets.
fn incremental_hull(points: &[Vec3]) -> Result<(Vec<Vec3>, Vec<[usize; 3]>)> {
    if points.len() < 4 {
        return Err(Error::DegenerateInput(format!(
            "{} points cannot span a solid",
            points.len()
        )));
    }
    for p in points {
        if !(p.x.is_finite() && p.y.is_finite() && p.z.is_finite()) {
            return Err(Error::DegenerateInput("non-finite coordinate".into()));
        }
    }

    // Deterministic processing order: lexicographic, exact duplicates removed.
    let mut pts: Vec<Vec3> = points.to_vec();
    pts.sort_by(|a, b| {
        (a.x, a.y, a.z)
            .partial_cmp(&(b.x, b.y, b.z))
            .expect("finite coordinates")
    });
    pts.dedup_by(|a, b| a == b);

    let centroid = pts.iter().sum::<Vec3>() / pts.len() as f64;
    let scale = pts
        .iter()
        .map(|p| (p - centroid).norm())
        .fold(0.0_f64, f64::max)
        .max(1e-300);

    // Initial simplex: earliest points in order that are affinely independent.
    let i0 = 0usize;
    let i1 = pts
        .iter()
        .position(|p| (p - pts[i0]).norm() > 1e-12 * scale)
        .ok_or_else(|| Error::DegenerateInput("all points coincide".into()))?;
    let i2 = pts
        .iter()
        .position(|p| {
            (pts[i1] - pts[i0]).cross(&(p - pts[i0])).norm() > 1e-12 * scale * scale
        })
        .ok_or_else(|| Error::DegenerateInput("points are collinear".into()))?;
    let base_n = (pts[i1] - pts[i0]).cross(&(pts[i2] - pts[i0]));
    let i3 = pts
        .iter()
        .position(|p| base_n.dot(&(p - pts[i0])).abs() > 1e-12 * scale * scale * scale)
        .ok_or_else(|| Error::DegenerateInput("points are coplanar".into()))?;

    // Orient the seed tetrahedron outward.
    let mut facets: Vec<Option<[usize; 3]>> = Vec::new();
    let tetra_center = (pts[i0] + pts[i1] + pts[i2] + pts[i3]) / 4.0;
    for f in [[i0, i1, i2], [i0, i1, i3], [i0, i2, i3], [i1, i2, i3]] {
        let (a, b, c) = (pts[f[0]], pts[f[1]], pts[f[2]]);
        let n = (b - a).cross(&(c - a));
        if n.dot(&(a - tetra_center)) >= 0.0 {
            facets.push(Some(f));
        } else {
            facets.push(Some([f[0], f[2], f[1]]));
        }
    }

    let eps = VISIBILITY_EPS_REL * scale;
    let in_simplex = |i: usize| i == i0 || i == i1 || i == i2 || i == i3;

    for (idx, p) in pts.iter().enumerate() {
        if in_simplex(idx) {
            continue;
        }
        // Signed clearance of p over each live facet plane.
        let mut dist: Vec<f64> = Vec::with_capacity(facets.len());
        let mut strict: Vec<usize> = Vec::new();
        for (fi, f) in facets.iter().enumerate() {
            match f {
                Some(f) => {
                    let (a, b, c) = (pts[f[0]], pts[f[1]], pts[f[2]]);
                    let n = (b - a).cross(&(c - a));
                    let d = n.dot(&(p - a)) / n.norm();
                    dist.push(d);
                    if d > eps {
                        strict.push(fi);
                    }
                }
                None => dist.push(f64::NEG_INFINITY),
            }
        }
        if strict.is_empty() {
            continue;
        }
        let mut edge_owner: HashMap<(usize, usize), usize> = HashMap::new();
        for (fi, f) in facets.iter().enumerate() {
            if let Some(f) = f {
                for k in 0..3 {
                    edge_owner.insert((f[k], f[(k + 1) % 3]), fi);
                }
            }
        }
        // Grow the strictly visible region across edges into facets that are
        // coplanar with p, so boundary points lying inside a face get
        // retriangulated away instead of retained as flat vertices.
        let mut in_visible = vec![false; facets.len()];
        let mut queue: Vec<usize> = strict.clone();
        for &fi in &strict {
            in_visible[fi] = true;
        }
        while let Some(fi) = queue.pop() {
            let f = facets[fi].expect("queued facet is live");
            for k in 0..3 {
                let a = f[k];
                let b = f[(k + 1) % 3];
                if let Some(&twin) = edge_owner.get(&(b, a)) {
                    if !in_visible[twin] && dist[twin] > -eps {
                        in_visible[twin] = true;
                        queue.push(twin);
                    }
                }
            }
        }
        let visible: Vec<usize> = (0..facets.len()).filter(|&fi| in_visible[fi]).collect();
        let is_visible = |fi: usize, _v: &[usize]| in_visible[fi];
        let mut new_facets: Vec<[usize; 3]> = Vec::new();
        for &fi in &visible {
            let f = facets[fi].expect("visible facet is live");
            for k in 0..3 {
                let a = f[k];
                let b = f[(k + 1) % 3];
                match edge_owner.get(&(b, a)) {
                    Some(&twin) if is_visible(twin, &visible) => {}
                    _ => new_facets.push([a, b, idx]),
                }
            }
        }
        for &fi in &visible {
            facets[fi] = None;
        }
        facets.extend(new_facets.into_iter().map(Some));
    }

    // Compact: keep referenced vertices in their sorted order.
    let live: Vec<[usize; 3]> = facets.into_iter().flatten().collect();
    let mut used = vec![false; pts.len()];
    for f in &live {
        for &v in f {
            used[v] = true;
        }
    }
    let mut remap = vec![usize::MAX; pts.len()];
    let mut vertices = Vec::new();
    for (i, p) in pts.iter().enumerate() {
        if used[i] {
            remap[i] = vertices.len();
            vertices.push(*p);
        }
    }
    let facets: Vec<[usize; 3]> = live
        .into_iter()
        .map(|f| [remap[f[0]], remap[f[1]], remap[f[2]]])
        .collect();

    // Closed orientable surface: V - E + F = 2 with E = 3F/2.
    if facets.len() % 2 != 0 || vertices.len() as i64 - (3 * facets.len() as i64) / 2 + facets.len() as i64 != 2 {
        return Err(Error::DegenerateInput(
            "hull facet complex is not a closed surface".into(),
        ));
    }
    Ok((vertices, facets))
}

/// Write a hull: vertex lines then 0-based facet index lines.
pub fn write_body(path: &Path, body: &ConvexBody, hash: &str) -> Result<()> {
    let mut out = config_header(hash);
    for v in body.vertices() {
        let _ = writeln!(out, "v {} {} {}", fmt_f64(v.x), fmt_f64(v.y), fmt_f64(v.z));
    }
    for f in body.facets() {
        let _ = writeln!(out, "f {} {} {}", f[0], f[1], f[2]);
    }
    std::fs::write(path, out)?;
    Ok(())
}

/// Read a hull written by `write_body`. The body is rebuilt from the stored
/// vertex set, which reproduces the same facets by determinism of the
/// construction.
pub fn read_body(path: &Path, expected_hash: Option<&str>) -> Result<ConvexBody> {
    let text = std::fs::read_to_string(path)?;
    if let Some(h) = expected_hash {
        check_config_hash(path, &text, h)?;
    }
    let mut verts = Vec::new();
    for (line_no, line) in data_lines(&text) {
        let mut toks = line.split_whitespace();
        match toks.next() {
            Some("v") => {
                let coords: Vec<f64> = toks
                    .map(|t| {
                        t.parse::<f64>().map_err(|_| {
                            Error::parse(
                                path.display().to_string(),
                                format!("line {line_no}: bad float {t:?}"),
                            )
                        })
                    })
                    .collect::<Result<_>>()?;
                if coords.len() != 3 {
                    return Err(Error::parse(
                        path.display().to_string(),
                        format!("line {line_no}: vertex needs 3 coordinates"),
                    ));
                }
                verts.push(Vec3::new(coords[0], coords[1], coords[2]));
            }
            Some("f") => {}
            Some(other) => {
                return Err(Error::parse(
                    path.display().to_string(),
                    format!("line {line_no}: unknown record {other:?}"),
                ));
            }
            None => {}
        }
    }
    ConvexBody::from_points(&verts)
}

/// Reference containment oracle used by tests: every point lies within
/// `tol` of the inner side of every facet plane.
pub fn contains_all(body: &ConvexBody, points: &[Vec3], tol: f64) -> bool {
    points.iter().all(|p| body.plane_clearance(p) >= -tol)
}

/// Canonical facet fingerprint (sorted coordinate triples), used to compare
/// hulls built from different orderings of the same set.
pub fn facet_fingerprint(body: &ConvexBody) -> Vec<String> {
    let mut out: Vec<String> = body
        .facets()
        .iter()
        .map(|f| {
            let mut tri: Vec<String> = f
                .iter()
                .map(|&v| {
                    let p = body.vertices()[v];
                    format!("{} {} {}", fmt_f64(p.x), fmt_f64(p.y), fmt_f64(p.z))
                })
                .collect();
            tri.sort();
            tri.join(" | ")
        })
        .collect();
    out.sort();
    out
}

pub fn lex_sorted(points: &[Vec3]) -> Vec<Vec3> {
    let mut pts = points.to_vec();
    pts.sort_by(|a, b| if lex_less(a, b) {
        std::cmp::Ordering::Less
    } else if lex_less(b, a) {
        std::cmp::Ordering::Greater
    } else {
        std::cmp::Ordering::Equal
    });
    pts
}

/// The eight corners of the axis-aligned cube with the given half width.
pub fn cube_corners(half: f64) -> Vec<Vec3> {
    let mut out = Vec::new();
    for &x in &[-half, half] {
        for &y in &[-half, half] {
            for &z in &[-half, half] {
                out.push(Vec3::new(x, y, z));
            }
        }
    }
    out
}
