//! Intrinsic triangulated surfaces: edge lengths, conformal factors, and
//! curvature data.
//!
//! The metric is carried purely as edge lengths. A per-vertex potential u
//! rescales them as l_ij = exp((u_i + u_j)/2) * l0_ij, so uniform u = 2v
//! scales every length by exp(v) and the whole construction is isometry
//! invariant. Curvature is angle defect over the circumcentric vertex
//! area; that pairing makes the total-area evolution under the flow match
//! the defect sum exactly, and keeps pointwise curvature second-order
//! accurate at the twelve valence-5 vertices of an icosphere, where the
//! barycentric lumping has a persistent O(1) bias.

use crate::exec::map_indexed;
use crate::harmonics::QuadratureGrid;
use crate::hull::ConvexBody;
use crate::io::{check_config_hash, config_header, data_lines, fmt_f64};
use crate::mesh::SphereMesh;
use crate::num::{triangle_angle, triangle_area, triangle_margin};
use crate::support_field::{radial_from_support, SupportField};
use crate::{Error, Result, Vec3};
use std::fmt::Write as _;
use std::path::Path;
use std::sync::Arc;

/// Relative triangle-inequality floor below which an embedding is rejected.
pub const EMBED_MARGIN_FLOOR: f64 = 1e-12;

/// How per-vertex areas are lumped from triangle areas.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum VertexAreaMode {
    /// Circumcentric (Voronoi) corner areas: (b^2 cot B + c^2 cot C) / 8.
    /// Matches the derivative of triangle area with respect to the corner
    /// potential, which makes the flow's area law spatially exact.
    Circumcentric,
    /// One third of each incident triangle. Kept for cross-checks; biased
    /// at irregular vertices.
    Barycentric,
}

#[derive(Clone, Debug)]
pub struct RadialField {
    pub rho: Vec<f64>,
}

impl RadialField {
    pub fn reciprocal(&self) -> Vec<f64> {
        self.rho.iter().map(|r| 1.0 / r).collect()
    }

    pub fn scaled(&self, lambda: f64) -> RadialField {
        RadialField {
            rho: self.rho.iter().map(|r| lambda * r).collect(),
        }
    }
}

/// Radial samples of a polytope at mesh vertex directions.
pub fn sample_radial_body(body: &ConvexBody, mesh: &SphereMesh) -> Result<RadialField> {
    let results: Vec<Result<f64>> = map_indexed(mesh.directions.len(), |i| {
        body.radial(&mesh.directions[i])
    });
    let rho = results.into_iter().collect::<Result<Vec<f64>>>()?;
    Ok(RadialField { rho })
}

/// Radial samples of a smooth support field at mesh vertex directions.
pub fn sample_radial_field(
    field: &SupportField,
    grid: &QuadratureGrid,
    mesh: &SphereMesh,
) -> Result<RadialField> {
    let results: Vec<Result<f64>> = map_indexed(mesh.directions.len(), |i| {
        radial_from_support(field, grid, &mesh.directions[i])
    });
    let rho = results.into_iter().collect::<Result<Vec<f64>>>()?;
    Ok(RadialField { rho })
}

#[derive(Clone, Debug)]
pub struct IntrinsicMesh {
    pub topology: Arc<SphereMesh>,
    /// Embedded vertex positions at u = 0 (center at the origin).
    pub positions: Vec<Vec3>,
    pub base_lengths: Vec<f64>,
    pub u: Vec<f64>,
    pub area_mode: VertexAreaMode,
    // Derived per refresh:
    pub current_lengths: Vec<f64>,
    pub tri_areas: Vec<f64>,
    pub tri_angles: Vec<[f64; 3]>,
    pub vertex_areas: Vec<f64>,
    pub angle_defects: Vec<f64>,
    pub curvature: Vec<f64>,
    /// Sum over neighbors of |w_ij| with w the interior cotangent weights;
    /// A_i / this bounds the stable explicit step.
    pub stiffness: Vec<f64>,
    pub min_tri_margin: f64,
    pub total_area: f64,
}

impl IntrinsicMesh {
    /// Build from radial samples over a sphere mesh: positions rho * dir,
    /// base lengths the embedded chord lengths, u = 0.
    pub fn from_radial(
        field: &RadialField,
        mesh: Arc<SphereMesh>,
        area_mode: VertexAreaMode,
    ) -> Result<IntrinsicMesh> {
        let positions: Vec<Vec3> = mesh
            .directions
            .iter()
            .zip(&field.rho)
            .map(|(d, r)| *r * d)
            .collect();
        Self::from_positions(mesh, positions, area_mode)
    }

    /// Build from explicit positions sharing the mesh connectivity.
    pub fn from_positions(
        mesh: Arc<SphereMesh>,
        positions: Vec<Vec3>,
        area_mode: VertexAreaMode,
    ) -> Result<IntrinsicMesh> {
        let base_lengths: Vec<f64> = mesh
            .edges
            .iter()
            .map(|e| (positions[e[0] as usize] - positions[e[1] as usize]).norm())
            .collect();
        let nv = mesh.directions.len();
        let mut out = IntrinsicMesh {
            topology: mesh,
            positions,
            base_lengths,
            u: vec![0.0; nv],
            area_mode,
            current_lengths: Vec::new(),
            tri_areas: Vec::new(),
            tri_angles: Vec::new(),
            vertex_areas: Vec::new(),
            angle_defects: Vec::new(),
            curvature: Vec::new(),
            stiffness: Vec::new(),
            min_tri_margin: 0.0,
            total_area: 0.0,
        };
        out.refresh();
        if out.min_tri_margin < EMBED_MARGIN_FLOOR {
            let worst = out.worst_triangle();
            return Err(Error::DegenerateTriangle {
                tri: worst,
                margin: out.min_tri_margin,
            });
        }
        if out.vertex_areas.iter().any(|&a| a <= 0.0) {
            return Err(Error::DegenerateInput(
                "nonpositive lumped vertex area in embedding".into(),
            ));
        }
        Ok(out)
    }

    fn worst_triangle(&self) -> usize {
        let mut worst = 0;
        let mut min = f64::INFINITY;
        for (ti, tri) in self.topology.triangles.iter().enumerate() {
            let _ = tri;
            let [s0, s1, s2] = self.tri_sides(ti);
            let m = triangle_margin(s0, s1, s2);
            if m < min {
                min = m;
                worst = ti;
            }
        }
        worst
    }

    fn tri_sides(&self, ti: usize) -> [f64; 3] {
        let te = self.topology.tri_edges[ti];
        [
            self.current_lengths[te[0] as usize],
            self.current_lengths[te[1] as usize],
            self.current_lengths[te[2] as usize],
        ]
    }

    /// Recompute lengths, angles, areas, defects, curvature from (base, u).
    pub fn refresh(&mut self) {
        let topo = self.topology.clone();
        let nv = topo.directions.len();
        let scale: Vec<f64> = self.u.iter().map(|ui| (0.5 * ui).exp()).collect();
        self.current_lengths = map_indexed(topo.edges.len(), |e| {
            let [a, b] = topo.edges[e];
            scale[a as usize] * scale[b as usize] * self.base_lengths[e]
        });

        // Per-triangle pass: sides s0 (corners 0-1), s1 (1-2), s2 (2-0);
        // the side opposite corner k is s_{k+1}.
        struct TriData {
            area: f64,
            angles: [f64; 3],
            cots: [f64; 3], // cot of angle at corner k
            margin: f64,
        }
        let lengths = &self.current_lengths;
        let tri_data: Vec<TriData> = map_indexed(topo.triangles.len(), |ti| {
            let te = topo.tri_edges[ti];
            let s0 = lengths[te[0] as usize];
            let s1 = lengths[te[1] as usize];
            let s2 = lengths[te[2] as usize];
            let area = triangle_area(s0, s1, s2);
            let a0 = triangle_angle(s1, s2, s0, area);
            let a1 = triangle_angle(s2, s0, s1, area);
            let a2 = std::f64::consts::PI - a0 - a1;
            let cot = |opp: f64, b: f64, c: f64| (b * b + c * c - opp * opp) / (4.0 * area);
            TriData {
                area,
                angles: [a0, a1, a2],
                cots: [cot(s1, s2, s0), cot(s2, s0, s1), cot(s0, s1, s2)],
                margin: triangle_margin(s0, s1, s2),
            }
        });

        self.tri_areas = tri_data.iter().map(|t| t.area).collect();
        self.tri_angles = tri_data.iter().map(|t| t.angles).collect();
        self.min_tri_margin = tri_data.iter().map(|t| t.margin).fold(f64::INFINITY, f64::min);
        let mut total = 0.0;
        for t in &tri_data {
            total += t.area;
        }
        self.total_area = total;

        // Per-vertex accumulation in fixed incident-triangle order.
        let defects: Vec<f64> = map_indexed(nv, |v| {
            let mut angle_sum = 0.0;
            for &ti in &topo.vertex_tris[v] {
                let tri = topo.triangles[ti as usize];
                let k = corner_of(tri, v as u32);
                angle_sum += tri_data[ti as usize].angles[k];
            }
            2.0 * std::f64::consts::PI - angle_sum
        });
        let areas: Vec<f64> = map_indexed(nv, |v| {
            let mut acc = 0.0;
            for &ti in &topo.vertex_tris[v] {
                let t = &tri_data[ti as usize];
                let tri = topo.triangles[ti as usize];
                let k = corner_of(tri, v as u32);
                acc += match self.area_mode {
                    VertexAreaMode::Barycentric => t.area / 3.0,
                    VertexAreaMode::Circumcentric => {
                        // Corner k has adjacent sides s_k (to corner k+1)
                        // and s_{k+2} (to corner k+2); their opposite
                        // angles sit at the other two corners.
                        let te = topo.tri_edges[ti as usize];
                        let sk = lengths[te[k] as usize];
                        let sk2 = lengths[te[(k + 2) % 3] as usize];
                        0.125
                            * (sk * sk * t.cots[(k + 2) % 3]
                                + sk2 * sk2 * t.cots[(k + 1) % 3])
                    }
                };
            }
            acc
        });
        let stiffness: Vec<f64> = map_indexed(nv, |v| {
            let mut acc = 0.0;
            for &ti in &topo.vertex_tris[v] {
                let t = &tri_data[ti as usize];
                let tri = topo.triangles[ti as usize];
                let k = corner_of(tri, v as u32);
                acc += 0.5 * (t.cots[(k + 1) % 3].abs() + t.cots[(k + 2) % 3].abs());
            }
            acc
        });
        self.curvature = defects
            .iter()
            .zip(&areas)
            .map(|(d, a)| d / a)
            .collect();
        self.angle_defects = defects;
        self.vertex_areas = areas;
        self.stiffness = stiffness;
    }

    pub fn defect_sum(&self) -> f64 {
        let mut acc = 0.0;
        for d in &self.angle_defects {
            acc += d;
        }
        acc
    }

    pub fn min_curvature(&self) -> f64 {
        self.curvature.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max_curvature(&self) -> f64 {
        self.curvature
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

fn corner_of(tri: [u32; 3], v: u32) -> usize {
    if tri[0] == v {
        0
    } else if tri[1] == v {
        1
    } else {
        debug_assert_eq!(tri[2], v);
        2
    }
}

/// Checkpoint: config hash, "t <time> steps <n>", positions, facets, u.
pub fn write_checkpoint(
    path: &Path,
    mesh: &IntrinsicMesh,
    time: f64,
    steps: u64,
    hash: &str,
) -> Result<()> {
    let mut out = config_header(hash);
    let _ = writeln!(out, "t {} steps {}", fmt_f64(time), steps);
    for p in &mesh.positions {
        let _ = writeln!(out, "v {} {} {}", fmt_f64(p.x), fmt_f64(p.y), fmt_f64(p.z));
    }
    for t in &mesh.topology.triangles {
        let _ = writeln!(out, "f {} {} {}", t[0], t[1], t[2]);
    }
    for (i, ui) in mesh.u.iter().enumerate() {
        let _ = writeln!(out, "u {} {}", i, fmt_f64(*ui));
    }
    std::fs::write(path, out)?;
    Ok(())
}

pub struct Checkpoint {
    pub mesh: IntrinsicMesh,
    pub time: f64,
    pub steps: u64,
}

pub fn read_checkpoint(
    path: &Path,
    expected_hash: Option<&str>,
    area_mode: VertexAreaMode,
) -> Result<Checkpoint> {
    let text = std::fs::read_to_string(path)?;
    if let Some(h) = expected_hash {
        check_config_hash(path, &text, h)?;
    }
    let mut time: Option<f64> = None;
    let mut steps: u64 = 0;
    let mut positions: Vec<Vec3> = Vec::new();
    let mut triangles: Vec<[u32; 3]> = Vec::new();
    let mut u_entries: Vec<(usize, f64)> = Vec::new();
    for (line_no, line) in data_lines(&text) {
        let toks: Vec<&str> = line.split_whitespace().collect();
        let bad = |msg: String| Error::parse(path.display().to_string(), format!("line {line_no}: {msg}"));
        match toks.as_slice() {
            ["t", tv, "steps", sv] => {
                time = Some(tv.parse().map_err(|_| bad("bad time".into()))?);
                steps = sv.parse().map_err(|_| bad("bad step count".into()))?;
            }
            ["v", x, y, z] => {
                let p = Vec3::new(
                    x.parse().map_err(|_| bad("bad x".into()))?,
                    y.parse().map_err(|_| bad("bad y".into()))?,
                    z.parse().map_err(|_| bad("bad z".into()))?,
                );
                positions.push(p);
            }
            ["f", a, b, c] => {
                triangles.push([
                    a.parse().map_err(|_| bad("bad index".into()))?,
                    b.parse().map_err(|_| bad("bad index".into()))?,
                    c.parse().map_err(|_| bad("bad index".into()))?,
                ]);
            }
            ["u", i, v] => {
                u_entries.push((
                    i.parse().map_err(|_| bad("bad vertex".into()))?,
                    v.parse().map_err(|_| bad("bad potential".into()))?,
                ));
            }
            other => return Err(bad(format!("unexpected record {other:?}"))),
        }
    }
    let time = time.ok_or_else(|| {
        Error::parse(path.display().to_string(), "missing time header".to_string())
    })?;
    let topo = Arc::new(SphereMesh::from_triangles(positions.clone(), triangles)?);
    let mut mesh = IntrinsicMesh::from_positions(topo, positions, area_mode)?;
    let mut u = vec![0.0; mesh.u.len()];
    for (i, v) in u_entries {
        if i >= u.len() {
            return Err(Error::parse(
                path.display().to_string(),
                format!("potential index {i} out of range"),
            ));
        }
        u[i] = v;
    }
    mesh.u = u;
    mesh.refresh();
    Ok(Checkpoint { mesh, time, steps })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::SphereMesh;

    const GAUSS_BONNET_TOL: f64 = 1e-9;

    fn unit_sphere_mesh(level: usize) -> IntrinsicMesh {
        let topo = Arc::new(SphereMesh::icosphere(level).unwrap());
        let rho = RadialField {
            rho: vec![1.0; topo.directions.len()],
        };
        IntrinsicMesh::from_radial(&rho, topo, VertexAreaMode::Circumcentric).unwrap()
    }

    #[test]
    fn defect_sum_is_four_pi() {
        for level in [2, 4] {
            let mesh = unit_sphere_mesh(level);
            let sum = mesh.defect_sum();
            assert!(
                (sum - 4.0 * std::f64::consts::PI).abs() < GAUSS_BONNET_TOL,
                "level {level}: {sum}"
            );
        }
    }

    #[test]
    fn vertex_areas_tile_the_surface() {
        let mesh = unit_sphere_mesh(3);
        let from_vertices: f64 = mesh.vertex_areas.iter().sum();
        assert!((from_vertices - mesh.total_area).abs() < 1e-11 * mesh.total_area);
        let topo = mesh.topology.clone();
        let bary = {
            let rho = RadialField {
                rho: vec![1.0; topo.directions.len()],
            };
            IntrinsicMesh::from_radial(&rho, topo, VertexAreaMode::Barycentric).unwrap()
        };
        let from_bary: f64 = bary.vertex_areas.iter().sum();
        assert!((from_bary - bary.total_area).abs() < 1e-11 * bary.total_area);
    }

    #[test]
    fn round_sphere_curvature_is_accurate() {
        let mesh = unit_sphere_mesh(4);
        let max_err = mesh
            .curvature
            .iter()
            .map(|k| (k - 1.0).abs())
            .fold(0.0, f64::max);
        assert!(max_err < 0.01, "max curvature error {max_err}");
    }

    #[test]
    fn barycentric_lumping_is_biased_at_coarse_vertices() {
        // The twelve valence-5 vertices keep an O(1) curvature bias under
        // barycentric areas at any refinement; circumcentric areas fix it.
        let topo = Arc::new(SphereMesh::icosphere(4).unwrap());
        let rho = RadialField {
            rho: vec![1.0; topo.directions.len()],
        };
        let bary =
            IntrinsicMesh::from_radial(&rho, topo, VertexAreaMode::Barycentric).unwrap();
        let pentagon_err = (0..12)
            .map(|v| (bary.curvature[v] - 1.0).abs())
            .fold(0.0, f64::max);
        assert!(
            pentagon_err > 0.10,
            "expected persistent bias, got {pentagon_err}"
        );
    }

    #[test]
    fn scaling_is_exact() {
        let topo = Arc::new(SphereMesh::icosphere(2).unwrap());
        let rho = RadialField {
            rho: vec![1.0; topo.directions.len()],
        };
        let unit = IntrinsicMesh::from_radial(&rho, topo.clone(), VertexAreaMode::Circumcentric)
            .unwrap();
        let lam = 2.5;
        let scaled =
            IntrinsicMesh::from_radial(&rho.scaled(lam), topo, VertexAreaMode::Circumcentric)
                .unwrap();
        for (a, b) in unit.base_lengths.iter().zip(&scaled.base_lengths) {
            assert!((lam * a - b).abs() < 1e-14 * b.abs());
        }
        for (a, b) in unit.curvature.iter().zip(&scaled.curvature) {
            assert!((a / (lam * lam) - b).abs() < 1e-12 * a.abs());
        }
        for (a, b) in unit.angle_defects.iter().zip(&scaled.angle_defects) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn conformal_lengths_follow_potentials() {
        let mut mesh = unit_sphere_mesh(2);
        let mut rng = crate::num::SplitMix64::new(3);
        for ui in mesh.u.iter_mut() {
            *ui = 0.2 * (rng.next_f64() - 0.5);
        }
        mesh.refresh();
        for (e, edge) in mesh.topology.edges.iter().enumerate() {
            let want = (0.5 * (mesh.u[edge[0] as usize] + mesh.u[edge[1] as usize])).exp()
                * mesh.base_lengths[e];
            assert!((mesh.current_lengths[e] - want).abs() <= 1e-15 * want);
        }
    }

    /// Cube surface meshed directly: interior and edge vertices are flat,
    /// the eight corners carry defect pi/2 each.
    #[test]
    fn direct_cube_mesh_has_corner_defects() {
        let (positions, triangles) = cube_surface_mesh(4);
        let topo = Arc::new(SphereMesh::from_triangles(positions.clone(), triangles).unwrap());
        let mesh =
            IntrinsicMesh::from_positions(topo, positions, VertexAreaMode::Circumcentric)
                .unwrap();
        let mut corner_count = 0;
        for (v, d) in mesh.angle_defects.iter().enumerate() {
            let p = mesh.positions[v];
            let is_corner =
                p.x.abs() > 0.49 && p.y.abs() > 0.49 && p.z.abs() > 0.49;
            if is_corner {
                corner_count += 1;
                assert!(
                    (d - std::f64::consts::FRAC_PI_2).abs() < 1e-10,
                    "corner defect {d}"
                );
            } else {
                assert!(d.abs() < 1e-10, "flat vertex defect {d}");
            }
        }
        assert_eq!(corner_count, 8);
        assert!(
            (mesh.defect_sum() - 4.0 * std::f64::consts::PI).abs() < GAUSS_BONNET_TOL
        );
    }

    #[test]
    fn checkpoint_round_trips_bit_exactly() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("state.txt");
        let mut mesh = unit_sphere_mesh(2);
        let mut rng = crate::num::SplitMix64::new(8);
        for ui in mesh.u.iter_mut() {
            *ui = -0.1 * rng.next_f64();
        }
        mesh.refresh();
        write_checkpoint(&path, &mesh, 0.125, 42, "feed").unwrap();
        let back = read_checkpoint(&path, Some("feed"), VertexAreaMode::Circumcentric).unwrap();
        assert_eq!(back.time, 0.125);
        assert_eq!(back.steps, 42);
        assert_eq!(back.mesh.u, mesh.u);
        assert_eq!(back.mesh.base_lengths, mesh.base_lengths);
        assert_eq!(back.mesh.current_lengths, mesh.current_lengths);
        // Re-writing reproduces the same bytes.
        let path2 = dir.path().join("state2.txt");
        write_checkpoint(&path2, &back.mesh, back.time, back.steps, "feed").unwrap();
        assert_eq!(
            std::fs::read(&path).unwrap(),
            std::fs::read(&path2).unwrap()
        );
    }

}

/// Test fixture: the unit cube boundary as a closed triangle mesh with n
/// by n quads per face, shared vertices along edges and corners.
#[cfg(test)]
pub(crate) fn cube_surface_mesh(n: usize) -> (Vec<Vec3>, Vec<[u32; 3]>) {
    let mut positions: Vec<Vec3> = Vec::new();
    let mut lookup: std::collections::HashMap<(i64, i64, i64), u32> =
        std::collections::HashMap::new();
    let mut triangles: Vec<[u32; 3]> = Vec::new();
    let quant = |p: Vec3| {
        (
            (p.x * 1e9).round() as i64,
            (p.y * 1e9).round() as i64,
            (p.z * 1e9).round() as i64,
        )
    };
    let mut vertex = |p: Vec3, positions: &mut Vec<Vec3>| -> u32 {
        *lookup.entry(quant(p)).or_insert_with(|| {
            positions.push(p);
            (positions.len() - 1) as u32
        })
    };
    let axes = [
        Vec3::new(1.0, 0.0, 0.0),
        Vec3::new(0.0, 1.0, 0.0),
        Vec3::new(0.0, 0.0, 1.0),
    ];
    let h = 1.0 / n as f64;
    for a in 0..3 {
        let bu = axes[(a + 1) % 3];
        let bv = axes[(a + 2) % 3];
        for sign in [1.0f64, -1.0] {
            let nrm = sign * axes[a];
            for i in 0..n {
                for j in 0..n {
                    let base = 0.5 * nrm - 0.5 * bu - 0.5 * bv;
                    let q00 = base + (i as f64) * h * bu + (j as f64) * h * bv;
                    let q10 = q00 + h * bu;
                    let q01 = q00 + h * bv;
                    let q11 = q10 + h * bv;
                    let (v00, v10, v01, v11) = (
                        vertex(q00, &mut positions),
                        vertex(q10, &mut positions),
                        vertex(q01, &mut positions),
                        vertex(q11, &mut positions),
                    );
                    if sign > 0.0 {
                        triangles.push([v00, v10, v11]);
                        triangles.push([v00, v11, v01]);
                    } else {
                        triangles.push([v00, v11, v10]);
                        triangles.push([v00, v01, v11]);
                    }
                }
            }
        }
    }
    (positions, triangles)
}
