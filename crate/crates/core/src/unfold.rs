//! Exact geodesic distances on convex polyhedra by planar unfolding.
//!
//! Coplanar hull triangles are merged into polygonal facets, facet
//! sequences between the two query points are enumerated up to a length
//! budget, each sequence is developed isometrically into the plane, and
//! the straight segment is kept when it threads every unfolded gate edge
//! in order. On a convex body shortest paths cross each facet at most
//! once and avoid vertices, so the minimum over valid sequences is the
//! exact distance once the budget covers the true crossing count.

use crate::hull::ConvexBody;
use crate::{Error, Result, Vec3};

/// Coplanarity tolerances for merging hull triangles into facets.
const COPLANAR_NORMAL_TOL: f64 = 1e-9;
const COPLANAR_OFFSET_TOL: f64 = 1e-9;
/// Relative tolerance for point-on-facet tests and gate crossings.
const ON_FACET_TOL: f64 = 1e-9;
/// Cap on DFS expansions before giving up.
const MAX_EXPANSIONS: usize = 200_000;

/// Affine map from one facet plane into the development plane.
#[derive(Clone, Copy)]
struct Map2 {
    r1: Vec3,
    r2: Vec3,
    o3: Vec3,
    shift: [f64; 2],
}

impl Map2 {
    fn apply(&self, x: &Vec3) -> [f64; 2] {
        let d = x - self.o3;
        [
            self.r1.dot(&d) + self.shift[0],
            self.r2.dot(&d) + self.shift[1],
        ]
    }
}

struct Facets {
    /// Triangle ids per planar facet group.
    groups: Vec<Vec<usize>>,
    normals: Vec<Vec3>,
    /// Neighbors of each group with the 3D endpoints of the shared edge.
    adjacency: Vec<Vec<(usize, Vec3, Vec3)>>,
}

fn build_facets(body: &ConvexBody) -> Facets {
    let tris = body.facets();
    let normals = body.facet_normals();
    let verts = body.vertices();
    let nt = tris.len();

    let mut edge_map: std::collections::HashMap<(usize, usize), Vec<usize>> =
        std::collections::HashMap::new();
    for (t, f) in tris.iter().enumerate() {
        for k in 0..3 {
            let (a, b) = (f[k], f[(k + 1) % 3]);
            let key = (a.min(b), a.max(b));
            edge_map.entry(key).or_default().push(t);
        }
    }

    // Merge coplanar edge-connected triangles into facet groups.
    let scale = body.circumradius();
    let mut group_of = vec![usize::MAX; nt];
    let mut groups: Vec<Vec<usize>> = Vec::new();
    for t0 in 0..nt {
        if group_of[t0] != usize::MAX {
            continue;
        }
        let g = groups.len();
        let mut stack = vec![t0];
        let mut members = Vec::new();
        group_of[t0] = g;
        while let Some(t) = stack.pop() {
            members.push(t);
            for k in 0..3 {
                let (a, b) = (tris[t][k], tris[t][(k + 1) % 3]);
                let key = (a.min(b), a.max(b));
                for &s in &edge_map[&key] {
                    if s == t || group_of[s] != usize::MAX {
                        continue;
                    }
                    let coplanar = normals[t].dot(&normals[s]) > 1.0 - COPLANAR_NORMAL_TOL
                        && (normals[t].dot(&(verts[tris[s][0]] - verts[tris[t][0]]))).abs()
                            < COPLANAR_OFFSET_TOL * scale;
                    if coplanar {
                        group_of[s] = g;
                        stack.push(s);
                    }
                }
            }
        }
        members.sort_unstable();
        groups.push(members);
    }

    let group_normals: Vec<Vec3> = groups.iter().map(|g| normals[g[0]]).collect();

    // Shared boundary between adjacent groups: the union of their shared
    // triangle edges, collinear on a convex body.
    let mut seg_map: std::collections::HashMap<(usize, usize), Vec<(Vec3, Vec3)>> =
        std::collections::HashMap::new();
    for (key, owners) in &edge_map {
        if owners.len() != 2 {
            continue;
        }
        let (ga, gb) = (group_of[owners[0]], group_of[owners[1]]);
        if ga == gb {
            continue;
        }
        let gk = (ga.min(gb), ga.max(gb));
        seg_map
            .entry(gk)
            .or_default()
            .push((verts[key.0], verts[key.1]));
    }
    let mut adjacency: Vec<Vec<(usize, Vec3, Vec3)>> = vec![Vec::new(); groups.len()];
    for ((ga, gb), segs) in seg_map {
        let origin = segs[0].0;
        let mut dir = segs[0].1 - segs[0].0;
        dir /= dir.norm();
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        let mut plo = origin;
        let mut phi = origin;
        for (p, q) in &segs {
            for x in [p, q] {
                let t = (x - origin).dot(&dir);
                if t < lo {
                    lo = t;
                    plo = *x;
                }
                if t > hi {
                    hi = t;
                    phi = *x;
                }
            }
        }
        adjacency[ga].push((gb, plo, phi));
        adjacency[gb].push((ga, plo, phi));
    }
    for adj in &mut adjacency {
        adj.sort_by(|x, y| x.0.cmp(&y.0));
    }

    Facets {
        groups,
        normals: group_normals,
        adjacency,
    }
}

/// Point-in-triangle with a relative tolerance, tested in the plane.
fn in_triangle(p: &Vec3, a: &Vec3, b: &Vec3, c: &Vec3, tol: f64) -> bool {
    let n = (b - a).cross(&(c - a));
    let n2 = n.norm_squared();
    if n2 <= 0.0 {
        return false;
    }
    for (u, v) in [(a, b), (b, c), (c, a)] {
        let s = (v - u).cross(&(p - u)).dot(&n) / n2;
        if s < -tol {
            return false;
        }
    }
    true
}

fn groups_containing(body: &ConvexBody, facets: &Facets, p: &Vec3) -> Vec<usize> {
    let verts = body.vertices();
    let tris = body.facets();
    let scale = body.circumradius();
    let mut out = Vec::new();
    for (g, members) in facets.groups.iter().enumerate() {
        let n = facets.normals[g];
        let anchor = verts[tris[members[0]][0]];
        if n.dot(&(p - anchor)).abs() > ON_FACET_TOL * scale {
            continue;
        }
        let inside = members.iter().any(|&t| {
            in_triangle(
                p,
                &verts[tris[t][0]],
                &verts[tris[t][1]],
                &verts[tris[t][2]],
                ON_FACET_TOL,
            )
        });
        if inside {
            out.push(g);
        }
    }
    out
}

fn base_map(normal: &Vec3, anchor: &Vec3) -> Map2 {
    let (e1, e2) = crate::num::tangent_frame(normal);
    Map2 {
        r1: e1,
        r2: e2,
        o3: *anchor,
        shift: [0.0, 0.0],
    }
}

/// Rigid map of the next facet into the development plane: matches the
/// two gate points and places the facet on the opposite side of the gate
/// line from `prev_side_point`.
fn unfold_map(
    next_normal: &Vec3,
    gate_a3: &Vec3,
    gate_b3: &Vec3,
    interior3: &Vec3,
    gate_a2: [f64; 2],
    gate_b2: [f64; 2],
    prev_side_point: [f64; 2],
) -> Map2 {
    let local = base_map(next_normal, gate_a3);
    let la = local.apply(gate_a3);
    let lb = local.apply(gate_b3);
    let vfx = lb[0] - la[0];
    let vfy = lb[1] - la[1];
    let lf = (vfx * vfx + vfy * vfy).sqrt();
    let vtx = gate_b2[0] - gate_a2[0];
    let vty = gate_b2[1] - gate_a2[1];
    let lt = (vtx * vtx + vty * vty).sqrt();
    let (ufx, ufy) = (vfx / lf, vfy / lf);
    let (utx, uty) = (vtx / lt, vty / lt);

    let build = |flip: bool| -> Map2 {
        let (fx, fy) = if flip { (ufx, -ufy) } else { (ufx, ufy) };
        let c = fx * utx + fy * uty;
        let s = fx * uty - fy * utx;
        let (r1, r2) = if flip {
            (c * local.r1 + s * local.r2, s * local.r1 - c * local.r2)
        } else {
            (c * local.r1 - s * local.r2, s * local.r1 + c * local.r2)
        };
        let d = gate_a3 - local.o3;
        let ra = [r1.dot(&d), r2.dot(&d)];
        Map2 {
            r1,
            r2,
            o3: local.o3,
            shift: [gate_a2[0] - ra[0], gate_a2[1] - ra[1]],
        }
    };

    let side = |p: [f64; 2]| -> f64 {
        (gate_b2[0] - gate_a2[0]) * (p[1] - gate_a2[1])
            - (gate_b2[1] - gate_a2[1]) * (p[0] - gate_a2[0])
    };
    let prev = side(prev_side_point);
    let m = build(false);
    let placed = side(m.apply(interior3));
    if placed * prev < 0.0 || placed == 0.0 {
        m
    } else {
        build(true)
    }
}

fn cross2(ax: f64, ay: f64, bx: f64, by: f64) -> f64 {
    ax * by - ay * bx
}

/// Does the straight segment thread every gate segment in order?
fn threads(a2: [f64; 2], b2: [f64; 2], gates: &[([f64; 2], [f64; 2])], tol: f64) -> bool {
    let dx = b2[0] - a2[0];
    let dy = b2[1] - a2[1];
    let seg_len = (dx * dx + dy * dy).sqrt();
    if seg_len <= tol {
        return gates.is_empty();
    }
    let mut t_prev = -1e-9;
    for (ga, gb) in gates {
        let ex = gb[0] - ga[0];
        let ey = gb[1] - ga[1];
        let gate_len = (ex * ex + ey * ey).sqrt();
        let denom = cross2(dx, dy, ex, ey);
        if denom.abs() <= 1e-14 * seg_len * gate_len {
            // Path parallel to the gate: accept only if it runs along it.
            let off = cross2(ex, ey, a2[0] - ga[0], a2[1] - ga[1]).abs() / gate_len;
            if off > tol {
                return false;
            }
            continue;
        }
        let rx = ga[0] - a2[0];
        let ry = ga[1] - a2[1];
        let t = cross2(rx, ry, ex, ey) / denom;
        let lam = cross2(rx, ry, dx, dy) / denom;
        if !(t >= -1e-9 && t <= 1.0 + 1e-9) {
            return false;
        }
        if t < t_prev - 1e-9 {
            return false;
        }
        let along = lam * gate_len;
        if !(along >= -tol && along <= gate_len + tol) {
            return false;
        }
        t_prev = t;
    }
    true
}

/// Number of maximal planar facets after merging coplanar hull triangles.
/// Distinguishes genuinely polyhedral bodies (few facets, exact unfolding
/// feasible) from smooth bodies triangulated finely by the hull.
pub fn facet_group_count(body: &ConvexBody) -> usize {
    build_facets(body).groups.len()
}

/// Geodesic distance between two boundary points of a convex body, by
/// exhaustive unfolding of facet sequences of length at most `max_faces`.
pub fn unfold_polyhedron(
    body: &ConvexBody,
    a: &Vec3,
    b: &Vec3,
    max_faces: usize,
) -> Result<f64> {
    if max_faces == 0 {
        return Err(Error::BudgetExceeded(
            "max_faces must be at least 1".to_string(),
        ));
    }
    let facets = build_facets(body);
    let start_groups = groups_containing(body, &facets, a);
    let end_groups = groups_containing(body, &facets, b);
    if start_groups.is_empty() || end_groups.is_empty() {
        return Err(Error::DegenerateInput(
            "query point does not lie on the boundary".to_string(),
        ));
    }
    let scale = body.circumradius();
    let gate_tol = ON_FACET_TOL * scale;
    let verts = body.vertices();
    let tris = body.facets();
    let centroid3 = |g: usize| -> Vec3 {
        let t = facets.groups[g][0];
        (verts[tris[t][0]] + verts[tris[t][1]] + verts[tris[t][2]]) / 3.0
    };

    struct Frame {
        group: usize,
        map: Map2,
        visited: Vec<usize>,
        gates: Vec<([f64; 2], [f64; 2])>,
        a2: [f64; 2],
        interior2: [f64; 2],
    }

    let mut best = f64::INFINITY;
    let mut expansions = 0usize;
    let mut stack: Vec<Frame> = Vec::new();
    for &g0 in &start_groups {
        let anchor = verts[tris[facets.groups[g0][0]][0]];
        let map = base_map(&facets.normals[g0], &anchor);
        stack.push(Frame {
            group: g0,
            map,
            visited: vec![g0],
            gates: Vec::new(),
            a2: map.apply(a),
            interior2: map.apply(&centroid3(g0)),
        });
    }

    while let Some(frame) = stack.pop() {
        expansions += 1;
        if expansions > MAX_EXPANSIONS {
            return Err(Error::BudgetExceeded(format!(
                "facet sequence search exceeded {MAX_EXPANSIONS} expansions"
            )));
        }
        if end_groups.contains(&frame.group) {
            let b2 = frame.map.apply(b);
            if threads(frame.a2, b2, &frame.gates, gate_tol) {
                let d = ((b2[0] - frame.a2[0]).powi(2) + (b2[1] - frame.a2[1]).powi(2))
                    .sqrt();
                if d < best {
                    best = d;
                }
            }
        }
        if frame.visited.len() >= max_faces {
            continue;
        }
        for (next, p3, q3) in &facets.adjacency[frame.group] {
            if frame.visited.contains(next) {
                continue;
            }
            let ga2 = frame.map.apply(p3);
            let gb2 = frame.map.apply(q3);
            let next_map = unfold_map(
                &facets.normals[*next],
                p3,
                q3,
                &centroid3(*next),
                ga2,
                gb2,
                frame.interior2,
            );
            let mut visited = frame.visited.clone();
            visited.push(*next);
            let mut gates = frame.gates.clone();
            gates.push((ga2, gb2));
            stack.push(Frame {
                group: *next,
                map: next_map,
                visited,
                gates,
                a2: frame.a2,
                interior2: next_map.apply(&centroid3(*next)),
            });
        }
    }

    if best.is_finite() {
        Ok(best)
    } else {
        Err(Error::BudgetExceeded(format!(
            "no valid facet sequence within {max_faces} faces"
        )))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hull::ConvexBody;

    fn cube(half: f64) -> ConvexBody {
        let mut pts = Vec::new();
        for sx in [-1.0, 1.0] {
            for sy in [-1.0, 1.0] {
                for sz in [-1.0, 1.0] {
                    pts.push(Vec3::new(sx * half, sy * half, sz * half));
                }
            }
        }
        ConvexBody::from_points(&pts).unwrap()
    }

    #[test]
    fn cube_merges_into_six_facets() {
        let body = cube(0.5);
        let facets = build_facets(&body);
        assert_eq!(facets.groups.len(), 6);
        for adj in &facets.adjacency {
            assert_eq!(adj.len(), 4);
        }
    }

    #[test]
    fn same_facet_distance_is_euclidean() {
        let body = cube(0.5);
        let a = Vec3::new(0.5, 0.2, 0.1);
        let b = Vec3::new(0.5, -0.3, 0.2);
        let d = unfold_polyhedron(&body, &a, &b, 6).unwrap();
        let want = (a - b).norm();
        assert!((d - want).abs() < 1e-12);
    }

    #[test]
    fn cube_adjacent_face_centers() {
        let body = cube(0.5);
        let a = Vec3::new(0.5, 0.0, 0.0);
        let b = Vec3::new(0.0, 0.5, 0.0);
        let d = unfold_polyhedron(&body, &a, &b, 6).unwrap();
        assert!((d - 1.0).abs() < 1e-12, "{d}");
    }

    #[test]
    fn cube_opposite_corners() {
        let body = cube(0.5);
        let a = Vec3::new(0.5, 0.5, 0.5);
        let b = Vec3::new(-0.5, -0.5, -0.5);
        let d = unfold_polyhedron(&body, &a, &b, 6).unwrap();
        assert!((d - 5.0f64.sqrt()).abs() < 1e-12, "{d}");
    }

    #[test]
    fn cube_opposite_face_centers() {
        let body = cube(0.5);
        let a = Vec3::new(0.5, 0.0, 0.0);
        let b = Vec3::new(-0.5, 0.0, 0.0);
        let d = unfold_polyhedron(&body, &a, &b, 6).unwrap();
        assert!((d - 2.0).abs() < 1e-12, "{d}");
    }

    #[test]
    fn distance_is_symmetric() {
        let body = cube(0.5);
        let a = Vec3::new(0.5, 0.31, -0.12);
        let b = Vec3::new(-0.2, -0.5, 0.4);
        let dab = unfold_polyhedron(&body, &a, &b, 6).unwrap();
        let dba = unfold_polyhedron(&body, &b, &a, 6).unwrap();
        assert!((dab - dba).abs() < 1e-12 * dab);
    }

    #[test]
    fn tight_budget_is_reported() {
        let body = cube(0.5);
        let a = Vec3::new(0.5, 0.0, 0.0);
        let b = Vec3::new(-0.5, 0.0, 0.0);
        let err = unfold_polyhedron(&body, &a, &b, 1).unwrap_err();
        assert!(matches!(err, Error::BudgetExceeded(_)));
    }

    #[test]
    fn vertex_to_vertex_along_an_edge() {
        let body = cube(0.5);
        let a = Vec3::new(0.5, 0.5, 0.5);
        let b = Vec3::new(0.5, 0.5, -0.5);
        let d = unfold_polyhedron(&body, &a, &b, 6).unwrap();
        assert!((d - 1.0).abs() < 1e-12, "{d}");
    }

    #[test]
    fn matches_front_marching_on_a_meshed_cube() {
        use crate::intrinsic::{cube_surface_mesh, IntrinsicMesh, VertexAreaMode};
        use crate::mesh::SphereMesh;
        use std::sync::Arc;
        let body = cube(0.5);
        let (positions, triangles) = cube_surface_mesh(8);
        let topo = Arc::new(SphereMesh::from_triangles(positions.clone(), triangles).unwrap());
        let mesh =
            IntrinsicMesh::from_positions(topo, positions, VertexAreaMode::Circumcentric)
                .unwrap();
        let src = mesh
            .positions
            .iter()
            .position(|p| (p - Vec3::new(0.0, 0.0, 0.5)).norm() < 1e-12)
            .unwrap();
        let field = crate::geodesic::fast_march(&mesh, src);
        let a = Vec3::new(0.0, 0.0, 0.5);
        for (target, tol) in [
            (Vec3::new(0.5, 0.0, 0.0), 0.01),
            (Vec3::new(0.0, 0.5, 0.0), 0.01),
            (Vec3::new(0.25, -0.25, 0.5), 1e-6),
        ] {
            let v = mesh
                .positions
                .iter()
                .position(|p| (p - target).norm() < 1e-12)
                .unwrap();
            let exact = unfold_polyhedron(&body, &a, &target, 6).unwrap();
            let got = field.dist[v];
            assert!(
                (got - exact).abs() <= tol * exact,
                "target {target:?}: marched {got} vs exact {exact}"
            );
        }
    }

    #[test]
    fn octahedron_equatorial_vertices() {
        // Two adjacent equatorial vertices of the unit octahedron: the
        // edge itself is a shortest path of length sqrt(2).
        let pts = vec![
            Vec3::new(1.0, 0.0, 0.0),
            Vec3::new(-1.0, 0.0, 0.0),
            Vec3::new(0.0, 1.0, 0.0),
            Vec3::new(0.0, -1.0, 0.0),
            Vec3::new(0.0, 0.0, 1.0),
            Vec3::new(0.0, 0.0, -1.0),
        ];
        let body = ConvexBody::from_points(&pts).unwrap();
        let a = Vec3::new(1.0, 0.0, 0.0);
        let b = Vec3::new(0.0, 1.0, 0.0);
        let d = unfold_polyhedron(&body, &a, &b, 6).unwrap();
        assert!((d - 2.0f64.sqrt()).abs() < 1e-12, "{d}");
    }
}
