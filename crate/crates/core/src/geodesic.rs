//! Intrinsic shortest-path distances on a triangulated surface.
//!
//! The primary method is triangle-based front marching: each vertex is
//! finalized in distance order, and a vertex is updated from a triangle by
//! reconstructing the virtual planar source consistent with its two base
//! distances. Triangles that are obtuse at the updated corner are handled
//! by unfolding neighboring triangles into the plane until the obtuse
//! wedge is split into acute pieces by real mesh vertices (the standard
//! wavefront treatment). Graph shortest paths along edges are kept as an
//! upper-bound cross-check.

use crate::exec::map_indexed;
use crate::intrinsic::IntrinsicMesh;
use crate::io::{check_config_hash, config_header, data_lines, fmt_f64};
use crate::mesh::SphereMesh;
use crate::num::SplitMix64;
use crate::{Error, Result};
use std::collections::BinaryHeap;
use std::fmt::Write as _;
use std::path::Path;

/// Unfolding work budget per obtuse corner before falling back to edge
/// updates at that corner.
pub const UNFOLD_BUDGET: usize = 24;
/// Minimum round-sphere separation angle for drawn probe pairs.
pub const PANEL_MIN_ANGLE: f64 = std::f64::consts::PI / 6.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DistanceMethod {
    FastMarching,
    Dijkstra,
    Unfolding,
}

impl DistanceMethod {
    pub fn label(&self) -> &'static str {
        match self {
            DistanceMethod::FastMarching => "fast_marching",
            DistanceMethod::Dijkstra => "dijkstra",
            DistanceMethod::Unfolding => "unfolding",
        }
    }

    pub fn from_label(s: &str) -> Option<DistanceMethod> {
        match s {
            "fast_marching" => Some(DistanceMethod::FastMarching),
            "dijkstra" => Some(DistanceMethod::Dijkstra),
            "unfolding" => Some(DistanceMethod::Unfolding),
            _ => None,
        }
    }
}

/// A fixed probe set of vertex pairs with measured distances.
#[derive(Clone, Debug)]
pub struct DistancePanel {
    pub pairs: Vec<(u32, u32)>,
    pub values: Vec<f64>,
    pub method: DistanceMethod,
}

/// Per-vertex distances from one source.
#[derive(Clone, Debug)]
pub struct DistanceField {
    pub dist: Vec<f64>,
    /// Number of obtuse corners whose unfolding exceeded the budget and
    /// fell back to edge updates (a mesh property, same for any source).
    pub fallbacks: usize,
}

struct HeapEntry {
    dist: f64,
    vertex: u32,
}

impl PartialEq for HeapEntry {
    fn eq(&self, other: &Self) -> bool {
        self.dist == other.dist && self.vertex == other.vertex
    }
}
impl Eq for HeapEntry {}
impl PartialOrd for HeapEntry {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for HeapEntry {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        // Inverted: BinaryHeap is a max-heap, we want smallest distance
        // first, ties broken by vertex index for determinism.
        other
            .dist
            .total_cmp(&self.dist)
            .then_with(|| other.vertex.cmp(&self.vertex))
    }
}

/// Two-base wavefront update. Bases A and B carry distances d_a, d_b;
/// the target C sits at side lengths ca = |CA|, cb = |CB| with base
/// separation ab = |AB|. Returns the distance consistent with a straight
/// front crossing the base segment, or None when the crossing falls
/// outside (edge updates cover that case).
fn plane_update(d_a: f64, d_b: f64, ca: f64, cb: f64, ab: f64) -> Option<f64> {
    if !(d_a.is_finite() && d_b.is_finite()) {
        return None;
    }
    let xc = (ca * ca + ab * ab - cb * cb) / (2.0 * ab);
    let yc2 = ca * ca - xc * xc;
    if yc2 <= 0.0 {
        return None;
    }
    let yc = yc2.sqrt();
    let xs = (d_a * d_a - d_b * d_b + ab * ab) / (2.0 * ab);
    let ys2 = d_a * d_a - xs * xs;
    if ys2 < 0.0 {
        return None;
    }
    let ys = -ys2.sqrt();
    let denom = yc - ys;
    if denom <= 0.0 {
        return None;
    }
    let xcross = xs + (xc - xs) * (-ys) / denom;
    if !(0.0..=ab).contains(&xcross) {
        return None;
    }
    let dx = xc - xs;
    let dy = yc - ys;
    let cand = (dx * dx + dy * dy).sqrt();
    if cand + 1e-12 * (1.0 + cand) < d_a.max(d_b) {
        return None;
    }
    Some(cand)
}

#[derive(Clone, Copy)]
struct Support {
    vertex: u32,
    pos: [f64; 2],
}

#[derive(Clone, Copy)]
struct VirtualPair {
    other: u32,
    target: u32,
    len_self: f64,
    len_other: f64,
    sep: f64,
}

fn cross2(a: [f64; 2], b: [f64; 2]) -> f64 {
    a[0] * b[1] - a[1] * b[0]
}

fn dot2(a: [f64; 2], b: [f64; 2]) -> f64 {
    a[0] * b[0] + a[1] * b[1]
}

fn norm2(a: [f64; 2]) -> f64 {
    dot2(a, a).sqrt()
}

fn acute(a: [f64; 2], b: [f64; 2]) -> bool {
    dot2(a, b) >= -1e-12 * norm2(a) * norm2(b)
}

/// Reusable per-mesh marching context: triangle sides, acuteness table,
/// and virtual update triangles for obtuse corners.
pub struct Marcher<'m> {
    mesh: &'m IntrinsicMesh,
    adjacency: Vec<Vec<(u32, f64)>>,
    sides: Vec<[f64; 3]>,
    acute_corner: Vec<[bool; 3]>,
    virtual_pairs: Vec<Vec<VirtualPair>>,
    virtual_edges: Vec<Vec<(u32, f64)>>,
    pub unfold_fallbacks: usize,
}

impl<'m> Marcher<'m> {
    pub fn new(mesh: &'m IntrinsicMesh) -> Marcher<'m> {
        let topo = &mesh.topology;
        let nv = topo.directions.len();
        let mut adjacency: Vec<Vec<(u32, f64)>> = vec![Vec::new(); nv];
        for (e, edge) in topo.edges.iter().enumerate() {
            let l = mesh.current_lengths[e];
            adjacency[edge[0] as usize].push((edge[1], l));
            adjacency[edge[1] as usize].push((edge[0], l));
        }
        let sides: Vec<[f64; 3]> = topo
            .tri_edges
            .iter()
            .map(|te| {
                [
                    mesh.current_lengths[te[0] as usize],
                    mesh.current_lengths[te[1] as usize],
                    mesh.current_lengths[te[2] as usize],
                ]
            })
            .collect();
        let acute_corner: Vec<[bool; 3]> = sides
            .iter()
            .map(|s| {
                let sq = [s[0] * s[0], s[1] * s[1], s[2] * s[2]];
                // Corner k: adjacent sides k and k+2, opposite side k+1.
                [
                    sq[0] + sq[2] >= sq[1],
                    sq[1] + sq[0] >= sq[2],
                    sq[2] + sq[1] >= sq[0],
                ]
            })
            .collect();

        let mut m = Marcher {
            mesh,
            adjacency,
            sides,
            acute_corner,
            virtual_pairs: vec![Vec::new(); nv],
            virtual_edges: vec![Vec::new(); nv],
            unfold_fallbacks: 0,
        };
        for ti in 0..topo.triangles.len() {
            for k in 0..3 {
                if !m.acute_corner[ti][k] {
                    m.attach_virtuals(ti, k);
                }
            }
        }
        m
    }

    /// Split the obtuse wedge at corner k of triangle ti by unfolding, and
    /// register the resulting acute virtual update triangles.
    fn attach_virtuals(&mut self, ti: usize, k: usize) {
        let topo = &self.mesh.topology;
        let tri = topo.triangles[ti];
        let target = tri[k];
        let a_vertex = tri[(k + 1) % 3];
        let b_vertex = tri[(k + 2) % 3];
        let s = self.sides[ti];
        let ca = s[k]; // |C A|
        let cb = s[(k + 2) % 3]; // |C B|
        let ab = s[(k + 1) % 3];
        // C at the origin, A on the x axis, B above it.
        let cos_g = (ca * ca + cb * cb - ab * ab) / (2.0 * ca * cb);
        let gamma = cos_g.clamp(-1.0, 1.0).acos();
        let a = Support {
            vertex: a_vertex,
            pos: [ca, 0.0],
        };
        let b = Support {
            vertex: b_vertex,
            pos: [cb * gamma.cos(), cb * gamma.sin()],
        };
        let mut fan = Vec::new();
        let mut budget = UNFOLD_BUDGET;
        let ok = self.resolve_wedge(
            &a,
            &b,
            a,
            b,
            ti as u32,
            [0.0, 0.0],
            &mut budget,
            &mut fan,
        );
        if ok.is_err() {
            self.unfold_fallbacks += 1;
            return;
        }
        let mut supports = vec![a];
        supports.extend(fan.iter().copied());
        supports.push(b);
        for w in supports.windows(2) {
            let (u, v) = (w[0], w[1]);
            let pair_uv = VirtualPair {
                other: v.vertex,
                target,
                len_self: norm2(u.pos),
                len_other: norm2(v.pos),
                sep: norm2([u.pos[0] - v.pos[0], u.pos[1] - v.pos[1]]),
            };
            let pair_vu = VirtualPair {
                other: u.vertex,
                target,
                len_self: norm2(v.pos),
                len_other: norm2(u.pos),
                sep: pair_uv.sep,
            };
            self.virtual_pairs[u.vertex as usize].push(pair_uv);
            self.virtual_pairs[v.vertex as usize].push(pair_vu);
        }
        for f in &fan {
            self.virtual_edges[f.vertex as usize].push((target, norm2(f.pos)));
        }
    }

    /// Recursively split the non-acute wedge (u, v) seen from the origin,
    /// whose rays all cross the gate edge (gate_p, gate_q), into acute
    /// sub-wedges separated by unfolded mesh vertices (appended to `fan`
    /// in angular order).
    #[allow(clippy::too_many_arguments)]
    fn resolve_wedge(
        &self,
        u: &Support,
        v: &Support,
        gate_p: Support,
        gate_q: Support,
        from_tri: u32,
        prev_apex: [f64; 2],
        budget: &mut usize,
        fan: &mut Vec<Support>,
    ) -> Result<()> {
        if *budget == 0 {
            return Err(Error::UnfoldingDepthExceeded(UNFOLD_BUDGET));
        }
        *budget -= 1;
        let topo = &self.mesh.topology;
        // Mesh edge of the gate and the triangle on its far side.
        let key = [
            gate_p.vertex.min(gate_q.vertex),
            gate_p.vertex.max(gate_q.vertex),
        ];
        let te = topo.tri_edges[from_tri as usize];
        let mut edge_id = None;
        for &e in &te {
            if topo.edges[e as usize] == key {
                edge_id = Some(e);
                break;
            }
        }
        let edge_id = edge_id.expect("gate edge borders the triangle it came from");
        let [t0, t1] = topo.edge_tris[edge_id as usize];
        let next_tri = if t0 == from_tri { t1 } else { t0 };
        let next = topo.triangles[next_tri as usize];
        let d_vertex = *next
            .iter()
            .find(|w| **w != gate_p.vertex && **w != gate_q.vertex)
            .expect("closed mesh triangle has a third corner");
        // Place D by developing the far triangle into this plane, on the
        // opposite side of the gate line from the previous apex.
        let sides = self.sides[next_tri as usize];
        let kd = next.iter().position(|w| *w == d_vertex).unwrap();
        let kp = next.iter().position(|w| *w == gate_p.vertex).unwrap();
        // Side j joins corners j and j+1.
        let len_pd = if (kd + 1) % 3 == kp {
            sides[kd]
        } else {
            sides[(kd + 2) % 3]
        };
        let len_qd = if (kd + 1) % 3 == kp {
            sides[(kd + 2) % 3]
        } else {
            sides[kd]
        };
        let gate_vec = [
            gate_q.pos[0] - gate_p.pos[0],
            gate_q.pos[1] - gate_p.pos[1],
        ];
        let gl = norm2(gate_vec);
        let ux = [gate_vec[0] / gl, gate_vec[1] / gl];
        let x = (len_pd * len_pd - len_qd * len_qd + gl * gl) / (2.0 * gl);
        let y2 = (len_pd * len_pd - x * x).max(0.0);
        let y = y2.sqrt();
        let nrm = [-ux[1], ux[0]];
        let prev_side = (prev_apex[0] - gate_p.pos[0]) * nrm[0]
            + (prev_apex[1] - gate_p.pos[1]) * nrm[1];
        let sign = if prev_side > 0.0 { -1.0 } else { 1.0 };
        let d = Support {
            vertex: d_vertex,
            pos: [
                gate_p.pos[0] + x * ux[0] + sign * y * nrm[0],
                gate_p.pos[1] + x * ux[1] + sign * y * nrm[1],
            ],
        };

        // Wedge orientation: u to v is counterclockwise by construction.
        let cu = cross2(u.pos, d.pos);
        let cv = cross2(d.pos, v.pos);
        if cu > 0.0 && cv > 0.0 {
            if !acute(u.pos, d.pos) {
                self.resolve_wedge(
                    u,
                    &d,
                    gate_p,
                    d,
                    next_tri,
                    gate_q.pos,
                    budget,
                    fan,
                )?;
            }
            fan.push(d);
            if !acute(d.pos, v.pos) {
                self.resolve_wedge(
                    &d,
                    v,
                    d,
                    gate_q,
                    next_tri,
                    gate_p.pos,
                    budget,
                    fan,
                )?;
            }
            Ok(())
        } else if cu <= 0.0 {
            // D outside on the u side: the whole wedge exits through (D, q).
            self.resolve_wedge(u, v, d, gate_q, next_tri, gate_p.pos, budget, fan)
        } else {
            self.resolve_wedge(u, v, gate_p, d, next_tri, gate_q.pos, budget, fan)
        }
    }

    /// Single-source distances.
    pub fn distances(&self, source: usize) -> DistanceField {
        let topo = &self.mesh.topology;
        let nv = topo.directions.len();
        let mut dist = vec![f64::INFINITY; nv];
        let mut accepted = vec![false; nv];
        let mut heap = BinaryHeap::new();
        dist[source] = 0.0;
        heap.push(HeapEntry {
            dist: 0.0,
            vertex: source as u32,
        });
        while let Some(HeapEntry { dist: dv, vertex }) = heap.pop() {
            let v = vertex as usize;
            if accepted[v] {
                continue;
            }
            accepted[v] = true;

            // Edge updates to neighbors.
            for &(w, l) in &self.adjacency[v] {
                let wi = w as usize;
                if !accepted[wi] && dv + l < dist[wi] {
                    dist[wi] = dv + l;
                    heap.push(HeapEntry {
                        dist: dist[wi],
                        vertex: w,
                    });
                }
            }

            // Two-base updates inside real acute triangles: the newly
            // accepted vertex is one base, the other corner must already
            // be accepted.
            for &tiu in &topo.vertex_tris[v] {
                let ti = tiu as usize;
                let tri = topo.triangles[ti];
                let kv = if tri[0] == vertex {
                    0
                } else if tri[1] == vertex {
                    1
                } else {
                    2
                };
                let s = self.sides[ti];
                for off in [1usize, 2] {
                    let kw = (kv + off) % 3;
                    let w = tri[kw] as usize;
                    if accepted[w] || !self.acute_corner[ti][kw] {
                        continue;
                    }
                    let kx = (kv + 3 - off) % 3;
                    let x = tri[kx] as usize;
                    if !accepted[x] {
                        continue;
                    }
                    // Sides around the updated corner kw: |W tri[kw+1]| is
                    // s[kw], |W tri[kw+2]| is s[(kw+2)%3], opposite s[(kw+1)%3].
                    let (wa, wb) = ((kw + 1) % 3, (kw + 2) % 3);
                    let (da, db, cwa, cwb) = if tri[wa] as usize == v {
                        (dv, dist[x], s[kw], s[(kw + 2) % 3])
                    } else {
                        debug_assert_eq!(tri[wb] as usize, v);
                        (dist[x], dv, s[kw], s[(kw + 2) % 3])
                    };
                    let _ = wb;
                    if let Some(cand) = plane_update(da, db, cwa, cwb, s[(kw + 1) % 3]) {
                        if cand < dist[w] {
                            dist[w] = cand;
                            heap.push(HeapEntry {
                                dist: cand,
                                vertex: w as u32,
                            });
                        }
                    }
                }
            }

            // Virtual updates from unfolded obtuse corners.
            for vp in &self.virtual_pairs[v] {
                let t = vp.target as usize;
                let o = vp.other as usize;
                if accepted[t] || !accepted[o] {
                    continue;
                }
                if let Some(cand) =
                    plane_update(dv, dist[o], vp.len_self, vp.len_other, vp.sep)
                {
                    if cand < dist[t] {
                        dist[t] = cand;
                        heap.push(HeapEntry {
                            dist: cand,
                            vertex: vp.target,
                        });
                    }
                }
            }
            for &(t, l) in &self.virtual_edges[v] {
                let ti = t as usize;
                if !accepted[ti] && dv + l < dist[ti] {
                    dist[ti] = dv + l;
                    heap.push(HeapEntry {
                        dist: dist[ti],
                        vertex: t,
                    });
                }
            }
        }
        DistanceField {
            dist,
            fallbacks: self.unfold_fallbacks,
        }
    }
}

/// Wavefront distances from one source (builds a fresh context; use
/// `Marcher` directly to amortize it over many sources).
pub fn fast_march(mesh: &IntrinsicMesh, source: usize) -> DistanceField {
    Marcher::new(mesh).distances(source)
}

/// Exact shortest paths along mesh edges.
pub fn dijkstra(mesh: &IntrinsicMesh, source: usize) -> Vec<f64> {
    let topo = &mesh.topology;
    let nv = topo.directions.len();
    let mut adjacency: Vec<Vec<(u32, f64)>> = vec![Vec::new(); nv];
    for (e, edge) in topo.edges.iter().enumerate() {
        let l = mesh.current_lengths[e];
        adjacency[edge[0] as usize].push((edge[1], l));
        adjacency[edge[1] as usize].push((edge[0], l));
    }
    let mut dist = vec![f64::INFINITY; nv];
    let mut done = vec![false; nv];
    let mut heap = BinaryHeap::new();
    dist[source] = 0.0;
    heap.push(HeapEntry {
        dist: 0.0,
        vertex: source as u32,
    });
    while let Some(HeapEntry { dist: dv, vertex }) = heap.pop() {
        let v = vertex as usize;
        if done[v] {
            continue;
        }
        done[v] = true;
        for &(w, l) in &adjacency[v] {
            let wi = w as usize;
            if !done[wi] && dv + l < dist[wi] {
                dist[wi] = dv + l;
                heap.push(HeapEntry {
                    dist: dist[wi],
                    vertex: w,
                });
            }
        }
    }
    dist
}

/// Draw `count` vertices pairwise separated by at least `min_angle` on
/// the round sphere, by seeded rejection sampling.
pub fn draw_anchors(
    mesh: &SphereMesh,
    count: usize,
    seed: u64,
    min_angle: f64,
) -> Result<Vec<u32>> {
    let nv = mesh.directions.len();
    let mut rng = SplitMix64::new(seed);
    let mut anchor_list: Vec<u32> = Vec::new();
    let mut attempts = 0usize;
    while anchor_list.len() < count {
        attempts += 1;
        if attempts > 100_000 {
            return Err(Error::Config(format!(
                "could not place {count} separated anchors on level {}",
                mesh.level
            )));
        }
        let cand = rng.next_index(nv) as u32;
        let ok = anchor_list.iter().all(|a| {
            crate::num::unit_angle(
                &mesh.directions[*a as usize],
                &mesh.directions[cand as usize],
            ) >= min_angle
        });
        if ok {
            anchor_list.push(cand);
        }
    }
    Ok(anchor_list)
}

/// Draw a reproducible probe panel on a sphere mesh: `anchors` distinct
/// source vertices, then `pairs` pairs cycling through the anchors, every
/// pair separated by at least `PANEL_MIN_ANGLE` on the round sphere.
pub fn draw_panel(
    mesh: &SphereMesh,
    pairs: usize,
    anchors: usize,
    seed: u64,
) -> Result<DistancePanel> {
    let nv = mesh.directions.len();
    if anchors == 0 || pairs == 0 {
        return Err(Error::Config("empty panel".into()));
    }
    let anchor_list = draw_anchors(mesh, anchors, seed, PANEL_MIN_ANGLE)?;
    // Continue the anchor stream deterministically for the targets.
    let mut rng = SplitMix64::new(seed ^ 0x9e37_79b9_7f4a_7c15);
    let mut pair_list = Vec::with_capacity(pairs);
    let mut attempts = 0usize;
    for k in 0..pairs {
        let src = anchor_list[k % anchors];
        loop {
            attempts += 1;
            if attempts > 200_000 {
                return Err(Error::Config(
                    "could not place separated panel pairs".into(),
                ));
            }
            let dst = rng.next_index(nv) as u32;
            let sep = crate::num::unit_angle(
                &mesh.directions[src as usize],
                &mesh.directions[dst as usize],
            );
            if sep >= PANEL_MIN_ANGLE {
                pair_list.push((src, dst));
                break;
            }
        }
    }
    Ok(DistancePanel {
        pairs: pair_list,
        values: Vec::new(),
        method: DistanceMethod::FastMarching,
    })
}

/// Fill panel values by front marching from each distinct source.
pub fn panel_eval(mesh: &IntrinsicMesh, panel: &DistancePanel) -> DistancePanel {
    let marcher = Marcher::new(mesh);
    let mut sources: Vec<u32> = Vec::new();
    for (s, _) in &panel.pairs {
        if !sources.contains(s) {
            sources.push(*s);
        }
    }
    let fields: Vec<DistanceField> =
        map_indexed(sources.len(), |i| marcher.distances(sources[i] as usize));
    let values: Vec<f64> = panel
        .pairs
        .iter()
        .map(|(s, d)| {
            let si = sources.iter().position(|x| x == s).unwrap();
            fields[si].dist[*d as usize]
        })
        .collect();
    DistancePanel {
        pairs: panel.pairs.clone(),
        values,
        method: DistanceMethod::FastMarching,
    }
}

/// Vertex closest to the midpoint of a shortest path between the sources
/// of the two distance fields: minimizes detour plus imbalance.
pub fn midpoint_vertex(from_b: &[f64], from_c: &[f64], bc: f64) -> usize {
    let mut best = 0usize;
    let mut best_score = f64::INFINITY;
    for v in 0..from_b.len() {
        let detour = from_b[v] + from_c[v] - bc;
        let imbalance = (from_b[v] - from_c[v]).abs();
        let score = detour + imbalance;
        if score < best_score {
            best_score = score;
            best = v;
        }
    }
    best
}

/// Euclidean comparison value: the median length from a to the midpoint
/// of bc in the flat triangle with the given side lengths.
pub fn comparison_median(ab: f64, ac: f64, bc: f64) -> f64 {
    (0.5 * ab * ab + 0.5 * ac * ac - 0.25 * bc * bc)
        .max(0.0)
        .sqrt()
}

pub fn write_panel(path: &Path, panel: &DistancePanel, hash: &str) -> Result<()> {
    let mut out = config_header(hash);
    out.push_str("src,dst,value,method\n");
    for (i, (s, d)) in panel.pairs.iter().enumerate() {
        let value = panel.values.get(i).copied().unwrap_or(f64::NAN);
        let _ = writeln!(out, "{s},{d},{},{}", fmt_f64(value), panel.method.label());
    }
    std::fs::write(path, out)?;
    Ok(())
}

pub fn read_panel(path: &Path, expected_hash: Option<&str>) -> Result<DistancePanel> {
    let text = std::fs::read_to_string(path)?;
    if let Some(h) = expected_hash {
        check_config_hash(path, &text, h)?;
    }
    let mut pairs = Vec::new();
    let mut values = Vec::new();
    let mut method = DistanceMethod::FastMarching;
    let mut saw_header = false;
    for (line_no, line) in data_lines(&text) {
        if !saw_header {
            saw_header = true;
            if line != "src,dst,value,method" {
                return Err(Error::parse(
                    path.display().to_string(),
                    format!("line {line_no}: unexpected header {line:?}"),
                ));
            }
            continue;
        }
        let toks: Vec<&str> = line.split(',').collect();
        if toks.len() != 4 {
            return Err(Error::parse(
                path.display().to_string(),
                format!("line {line_no}: expected 4 fields"),
            ));
        }
        let bad = |what: &str| {
            Error::parse(
                path.display().to_string(),
                format!("line {line_no}: bad {what}"),
            )
        };
        pairs.push((
            toks[0].parse().map_err(|_| bad("source"))?,
            toks[1].parse().map_err(|_| bad("target"))?,
        ));
        values.push(toks[2].parse().map_err(|_| bad("value"))?);
        method = DistanceMethod::from_label(toks[3]).ok_or_else(|| bad("method"))?;
    }
    if !saw_header {
        return Err(Error::parse(
            path.display().to_string(),
            "missing header".to_string(),
        ));
    }
    Ok(DistancePanel {
        pairs,
        values,
        method,
    })
}
