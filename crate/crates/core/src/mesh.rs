//! Icosphere parametrization meshes.
//!
//! Subdivision starts from the icosahedron and inserts edge midpoints,
//! reprojected to the unit sphere. Midpoint indices are assigned in
//! triangle-scan order, so the mesh for a given level is a pure function of
//! the level, and the vertex list of level L-1 is a prefix of level L —
//! probe vertices chosen at a coarse level stay valid on finer meshes.

use crate::{Error, Result, Vec3};
use std::collections::HashMap;

pub const MAX_LEVEL: usize = 8;

#[derive(Clone, Debug)]
pub struct SphereMesh {
    pub level: usize,
    /// Unit direction per vertex.
    pub directions: Vec<Vec3>,
    /// Oriented triangles (counterclockwise from outside).
    pub triangles: Vec<[u32; 3]>,
    /// Undirected edges as (low, high) vertex pairs, in first-encounter order.
    pub edges: Vec<[u32; 2]>,
    /// The two triangles flanking each edge.
    pub edge_tris: Vec<[u32; 2]>,
    /// Edge index for each triangle side; side k joins corners k and k+1.
    pub tri_edges: Vec<[u32; 3]>,
    /// Incident triangles per vertex, in triangle-scan order.
    pub vertex_tris: Vec<Vec<u32>>,
    /// Neighbor vertices per vertex, in edge-scan order.
    pub vertex_neighbors: Vec<Vec<u32>>,
}

impl SphereMesh {
    pub fn icosphere(level: usize) -> Result<SphereMesh> {
        if level > MAX_LEVEL {
            return Err(Error::LevelTooLarge(level, MAX_LEVEL));
        }
        let t = (1.0 + 5f64.sqrt()) / 2.0;
        let raw = [
            (-1.0, t, 0.0),
            (1.0, t, 0.0),
            (-1.0, -t, 0.0),
            (1.0, -t, 0.0),
            (0.0, -1.0, t),
            (0.0, 1.0, t),
            (0.0, -1.0, -t),
            (0.0, 1.0, -t),
            (t, 0.0, -1.0),
            (t, 0.0, 1.0),
            (-t, 0.0, -1.0),
            (-t, 0.0, 1.0),
        ];
        let mut directions: Vec<Vec3> = raw
            .iter()
            .map(|&(x, y, z)| Vec3::new(x, y, z).normalize())
            .collect();
        let mut triangles: Vec<[u32; 3]> = vec![
            [0, 11, 5],
            [0, 5, 1],
            [0, 1, 7],
            [0, 7, 10],
            [0, 10, 11],
            [1, 5, 9],
            [5, 11, 4],
            [11, 10, 2],
            [10, 7, 6],
            [7, 1, 8],
            [3, 9, 4],
            [3, 4, 2],
            [3, 2, 6],
            [3, 6, 8],
            [3, 8, 9],
            [4, 9, 5],
            [2, 4, 11],
            [6, 2, 10],
            [8, 6, 7],
            [9, 8, 1],
        ];

        for _ in 0..level {
            let mut midpoint: HashMap<(u32, u32), u32> = HashMap::new();
            let mut next: Vec<[u32; 3]> = Vec::with_capacity(triangles.len() * 4);
            for tri in &triangles {
                let mut mids = [0u32; 3];
                for k in 0..3 {
                    let a = tri[k];
                    let b = tri[(k + 1) % 3];
                    let key = (a.min(b), a.max(b));
                    mids[k] = *midpoint.entry(key).or_insert_with(|| {
                        let p = (directions[a as usize] + directions[b as usize]).normalize();
                        directions.push(p);
                        (directions.len() - 1) as u32
                    });
                }
                let [a, b, c] = *tri;
                let [mab, mbc, mca] = mids;
                next.push([a, mab, mca]);
                next.push([b, mbc, mab]);
                next.push([c, mca, mbc]);
                next.push([mab, mbc, mca]);
            }
            triangles = next;
        }

        Self::assemble(level, directions, triangles)
    }

    /// Connectivity for an arbitrary closed oriented triangle mesh. The
    /// points are stored in `directions` as given and need not be unit;
    /// `round_edge_length` is only meaningful for icosphere meshes.
    pub fn from_triangles(points: Vec<Vec3>, triangles: Vec<[u32; 3]>) -> Result<SphereMesh> {
        Self::assemble(0, points, triangles)
    }

    fn assemble(
        level: usize,
        directions: Vec<Vec3>,
        triangles: Vec<[u32; 3]>,
    ) -> Result<SphereMesh> {
        let nv = directions.len();
        let mut edge_index: HashMap<(u32, u32), u32> = HashMap::new();
        let mut edges: Vec<[u32; 2]> = Vec::new();
        let mut edge_tris: Vec<Vec<u32>> = Vec::new();
        let mut tri_edges: Vec<[u32; 3]> = Vec::with_capacity(triangles.len());
        let mut vertex_tris: Vec<Vec<u32>> = vec![Vec::new(); nv];
        for (ti, tri) in triangles.iter().enumerate() {
            let mut te = [0u32; 3];
            for k in 0..3 {
                let a = tri[k];
                let b = tri[(k + 1) % 3];
                let key = (a.min(b), a.max(b));
                let ei = *edge_index.entry(key).or_insert_with(|| {
                    edges.push([key.0, key.1]);
                    edge_tris.push(Vec::new());
                    (edges.len() - 1) as u32
                });
                edge_tris[ei as usize].push(ti as u32);
                te[k] = ei;
            }
            tri_edges.push(te);
            for &v in tri {
                vertex_tris[v as usize].push(ti as u32);
            }
        }
        let mut flanks: Vec<[u32; 2]> = Vec::with_capacity(edges.len());
        for (ei, ts) in edge_tris.iter().enumerate() {
            if ts.len() != 2 {
                return Err(Error::DegenerateInput(format!(
                    "edge {ei} flanked by {} triangles",
                    ts.len()
                )));
            }
            flanks.push([ts[0], ts[1]]);
        }
        let mut vertex_neighbors: Vec<Vec<u32>> = vec![Vec::new(); nv];
        for e in &edges {
            vertex_neighbors[e[0] as usize].push(e[1]);
            vertex_neighbors[e[1] as usize].push(e[0]);
        }
        Ok(SphereMesh {
            level,
            directions,
            triangles,
            edges,
            edge_tris: flanks,
            tri_edges,
            vertex_tris,
            vertex_neighbors,
        })
    }

    pub fn vertex_count(&self) -> usize {
        self.directions.len()
    }

    /// Great-circle edge length of edge `ei` on the unit sphere.
    pub fn round_edge_length(&self, ei: usize) -> f64 {
        let [a, b] = self.edges[ei];
        crate::num::unit_angle(&self.directions[a as usize], &self.directions[b as usize])
    }

    /// Mesh with every direction rotated; connectivity unchanged.
    pub fn rotated(&self, rot: &nalgebra::Matrix3<f64>) -> SphereMesh {
        SphereMesh {
            level: self.level,
            directions: self.directions.iter().map(|d| rot * d).collect(),
            triangles: self.triangles.clone(),
            edges: self.edges.clone(),
            edge_tris: self.edge_tris.clone(),
            tri_edges: self.tri_edges.clone(),
            vertex_tris: self.vertex_tris.clone(),
            vertex_neighbors: self.vertex_neighbors.clone(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn icosahedron_counts() {
        let m = SphereMesh::icosphere(0).unwrap();
        assert_eq!(m.vertex_count(), 12);
        assert_eq!(m.triangles.len(), 20);
        assert_eq!(m.edges.len(), 30);
    }

    #[test]
    fn level_three_counts_and_euler() {
        let m = SphereMesh::icosphere(3).unwrap();
        assert_eq!(m.vertex_count(), 10 * 4usize.pow(3) + 2);
        assert_eq!(m.triangles.len(), 20 * 4usize.pow(3));
        assert_eq!(m.edges.len(), 30 * 4usize.pow(3));
        let euler =
            m.vertex_count() as i64 - m.edges.len() as i64 + m.triangles.len() as i64;
        assert_eq!(euler, 2);
    }

    #[test]
    fn directions_are_unit() {
        let m = SphereMesh::icosphere(2).unwrap();
        for d in &m.directions {
            assert!((d.norm() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn orientation_is_outward_and_consistent() {
        let m = SphereMesh::icosphere(2).unwrap();
        // Outward: triangle normal has positive dot with its centroid ray.
        for tri in &m.triangles {
            let (a, b, c) = (
                m.directions[tri[0] as usize],
                m.directions[tri[1] as usize],
                m.directions[tri[2] as usize],
            );
            let n = (b - a).cross(&(c - a));
            assert!(n.dot(&(a + b + c)) > 0.0);
        }
        // Consistent: every directed edge appears exactly once.
        let mut seen = std::collections::HashSet::new();
        for tri in &m.triangles {
            for k in 0..3 {
                assert!(seen.insert((tri[k], tri[(k + 1) % 3])));
            }
        }
    }

    #[test]
    fn coarse_vertices_are_prefix_of_fine() {
        let coarse = SphereMesh::icosphere(3).unwrap();
        let fine = SphereMesh::icosphere(4).unwrap();
        for (i, d) in coarse.directions.iter().enumerate() {
            assert!((d - fine.directions[i]).norm() < 1e-15, "vertex {i} moved");
        }
    }

    #[test]
    fn level_guard() {
        assert!(matches!(
            SphereMesh::icosphere(9),
            Err(Error::LevelTooLarge(9, 8))
        ));
    }

    #[test]
    fn tri_edges_match_sides() {
        let m = SphereMesh::icosphere(1).unwrap();
        for (ti, tri) in m.triangles.iter().enumerate() {
            for k in 0..3 {
                let e = m.edges[m.tri_edges[ti][k] as usize];
                let a = tri[k].min(tri[(k + 1) % 3]);
                let b = tri[k].max(tri[(k + 1) % 3]);
                assert_eq!([a, b], e);
            }
        }
    }
}
