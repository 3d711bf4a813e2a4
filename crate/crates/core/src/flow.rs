//! Conformal curvature flow on an intrinsic mesh.
//!
//! The per-vertex potential evolves as du/dt = -K with K the discrete
//! Gauss curvature of the current metric, which is the conformal-gauge
//! form of the two-dimensional flow. Explicit Euler stepping with a step
//! bounded by both the curvature scale and the cotangent-Laplacian
//! stability limit; steps that would push a triangle-inequality margin
//! below threshold are rejected and retried at half the step.
//!
//! Since the discrete curvature integrates exactly to 4 pi against the
//! circumcentric vertex areas, the total area decreases at exactly 8 pi
//! per unit time up to time-integration error, and that error scales
//! linearly with the step-control parameter.

use crate::exec::map_indexed;
use crate::intrinsic::IntrinsicMesh;
use crate::io::fmt_f64;
use crate::num::triangle_margin;
use crate::{Error, Result};
use std::fmt::Write as _;
use std::path::Path;

/// Relative triangle-inequality margin below which a step is rejected.
pub const REJECT_MARGIN: f64 = 1e-6;
/// Maximum consecutive step halvings before the run is declared stalled.
pub const MAX_HALVINGS: u32 = 20;
/// Default number of recorded trace rows per run.
pub const DEFAULT_RECORD_ROWS: usize = 24;
/// Ratio between the flow horizon and the earliest recorded positive time.
const RECORD_SPAN: f64 = 256.0;

#[derive(Clone, Debug)]
pub struct FlowState {
    pub mesh: IntrinsicMesh,
    pub time: f64,
    pub step_count: u64,
    pub last_dt: f64,
}

/// One recorded diagnostic row.
#[derive(Clone, Debug, PartialEq)]
pub struct TraceRow {
    pub time: f64,
    pub min_k: f64,
    pub max_k: f64,
    pub area: f64,
    /// Sum of angle defects (must stay at 4 pi on a closed mesh).
    pub defect_sum: f64,
    pub min_u: f64,
    pub max_u: f64,
    pub min_margin: f64,
    /// Max over edges and over steps since the previous row of current
    /// length / base length; 1 on the starting row.
    pub edge_ratio: f64,
    /// Max over vertices and over steps since the previous row of the
    /// per-step u change; 0 on the starting row.
    pub u_increase: f64,
    pub panel: Vec<f64>,
}

#[derive(Clone, Debug, Default)]
pub struct FlowTrace {
    pub rows: Vec<TraceRow>,
    /// Potential field at each recorded row, for after-the-fact metric
    /// reconstruction.
    pub snapshots: Vec<(f64, Vec<f64>)>,
    /// Max over accepted steps and edges of current/base length.
    pub max_edge_ratio: f64,
    /// Max over accepted steps and vertices of the per-step u increase.
    pub max_u_increase: f64,
    pub panel_len: usize,
}

pub fn init_flow(mesh: IntrinsicMesh) -> FlowState {
    FlowState {
        mesh,
        time: 0.0,
        step_count: 0,
        last_dt: 0.0,
    }
}

/// Extinction bound: the flow exists up to initial area / 8 pi.
pub fn extinction_time(initial_area: f64) -> f64 {
    initial_area / (8.0 * std::f64::consts::PI)
}

pub struct StepStats {
    pub max_edge_ratio: f64,
    pub max_u_increase: f64,
}

/// One explicit Euler step. On rejection the state is left untouched.
pub fn try_step(state: &mut FlowState, dt: f64) -> Result<StepStats> {
    let mesh = &state.mesh;
    let topo = mesh.topology.clone();
    let u_new: Vec<f64> = map_indexed(mesh.u.len(), |i| mesh.u[i] - dt * mesh.curvature[i]);

    // Margin screen on candidate lengths before committing.
    let scale: Vec<f64> = u_new.iter().map(|ui| (0.5 * ui).exp()).collect();
    let cand: Vec<f64> = map_indexed(topo.edges.len(), |e| {
        let [a, b] = topo.edges[e];
        scale[a as usize] * scale[b as usize] * mesh.base_lengths[e]
    });
    let margins: Vec<f64> = map_indexed(topo.triangles.len(), |ti| {
        let te = topo.tri_edges[ti];
        triangle_margin(
            cand[te[0] as usize],
            cand[te[1] as usize],
            cand[te[2] as usize],
        )
    });
    let mut min_margin = f64::INFINITY;
    for m in &margins {
        min_margin = min_margin.min(*m);
    }
    if !(min_margin >= REJECT_MARGIN) {
        return Err(Error::StepRejected {
            time: state.time,
            margin: min_margin,
        });
    }

    let mut max_edge_ratio = f64::NEG_INFINITY;
    for (c, b) in cand.iter().zip(&state.mesh.base_lengths) {
        max_edge_ratio = max_edge_ratio.max(c / b);
    }
    let mut max_u_increase = f64::NEG_INFINITY;
    for (n, o) in u_new.iter().zip(&state.mesh.u) {
        max_u_increase = max_u_increase.max(n - o);
    }

    state.mesh.u = u_new;
    state.mesh.refresh();
    if state.mesh.total_area <= 0.0 {
        return Err(Error::ExtinctionReached(state.time));
    }
    state.time += dt;
    state.step_count += 1;
    state.last_dt = dt;
    Ok(StepStats {
        max_edge_ratio,
        max_u_increase,
    })
}

/// Stable step for the current state: the curvature time scale capped by
/// the explicit-Euler limit of the cotangent Laplacian, both scaled by
/// the step-control factor.
pub fn stable_dt(mesh: &IntrinsicMesh, cfl: f64) -> f64 {
    let mut max_abs_k = 0.0f64;
    for k in &mesh.curvature {
        max_abs_k = max_abs_k.max(k.abs());
    }
    let mut diffusion = f64::INFINITY;
    for (a, s) in mesh.vertex_areas.iter().zip(&mesh.stiffness) {
        if *s > 0.0 {
            diffusion = diffusion.min(a / s);
        }
    }
    let curvature_scale = if max_abs_k > 0.0 {
        1.0 / max_abs_k
    } else {
        f64::INFINITY
    };
    cfl * curvature_scale.min(2.0 * diffusion)
}

/// Recording schedule: time 0, then a geometric ladder up to the horizon.
/// A pure function of (t_target, rows) so a resumed run regenerates the
/// identical schedule.
pub fn record_times(t_target: f64, rows: usize) -> Vec<f64> {
    assert!(rows >= 2, "need at least start and end rows");
    let mut times = vec![0.0];
    let inner = rows - 1;
    if inner == 1 {
        times.push(t_target);
        return times;
    }
    let ratio = RECORD_SPAN.powf(1.0 / (inner as f64 - 1.0));
    let mut t = t_target / RECORD_SPAN;
    for _ in 0..inner - 1 {
        times.push(t);
        t *= ratio;
    }
    times.push(t_target);
    times
}

/// Optional measurement evaluated at every recorded row.
pub type TraceProbe<'a> = &'a mut dyn FnMut(&IntrinsicMesh) -> Result<Vec<f64>>;

pub struct RunConfig<'a> {
    pub t_target: f64,
    pub cfl: f64,
    pub record_rows: usize,
    /// Stop once this recorded time is reached (must be one of the
    /// schedule's entries); the horizon still shapes the schedule, so a
    /// resumed run reproduces the remaining rows bit for bit.
    pub stop_at: Option<f64>,
    pub probe: Option<TraceProbe<'a>>,
}

/// Advance the flow to the horizon (or the stop point), recording
/// diagnostics on the schedule. Appends to `trace` so resumed runs can
/// share one record.
pub fn adaptive_run(
    state: &mut FlowState,
    config: RunConfig<'_>,
    trace: &mut FlowTrace,
) -> Result<()> {
    let RunConfig {
        t_target,
        cfl,
        record_rows,
        stop_at,
        mut probe,
    } = config;
    if !(cfl > 0.0 && cfl <= 1.0) {
        return Err(Error::Config(format!(
            "step-control factor {cfl} outside (0, 1]"
        )));
    }
    let area_now = state.mesh.total_area;
    // Extinction bound referenced to t = 0 of this flow.
    let horizon = state.time + extinction_time(area_now);
    if t_target >= horizon {
        return Err(Error::ExtinctionReached(horizon));
    }
    if t_target <= state.time {
        return Err(Error::Config(format!(
            "horizon {t_target} not ahead of current time {}",
            state.time
        )));
    }

    let schedule = record_times(t_target, record_rows);
    let snap_tol = 1e-12 * t_target;
    let stop_time = match stop_at {
        None => t_target,
        Some(s) => {
            let hit = schedule.iter().find(|t| (*t - s).abs() <= snap_tol);
            match hit {
                Some(t) => *t,
                None => {
                    return Err(Error::Config(format!(
                        "stop time {s} is not on the recording schedule"
                    )))
                }
            }
        }
    };
    let mut next_record = schedule
        .iter()
        .position(|t| *t > state.time + snap_tol)
        .unwrap_or(schedule.len());

    if trace.rows.is_empty() {
        trace.max_edge_ratio = f64::NEG_INFINITY;
        trace.max_u_increase = f64::NEG_INFINITY;
        record_row(state, &mut probe, trace, f64::NEG_INFINITY, f64::NEG_INFINITY)?;
    }

    // Monotonicity extrema accumulated since the last recorded row.
    let mut interval_ratio = f64::NEG_INFINITY;
    let mut interval_increase = f64::NEG_INFINITY;
    while state.time < stop_time - snap_tol {
        let mut dt = stable_dt(&state.mesh, cfl);
        let next_event = if next_record < schedule.len() {
            schedule[next_record]
        } else {
            t_target
        };
        if state.time + dt > next_event {
            dt = next_event - state.time;
        }
        let mut halvings: u32 = 0;
        loop {
            match try_step(state, dt) {
                Ok(stats) => {
                    trace.max_edge_ratio = trace.max_edge_ratio.max(stats.max_edge_ratio);
                    trace.max_u_increase = trace.max_u_increase.max(stats.max_u_increase);
                    interval_ratio = interval_ratio.max(stats.max_edge_ratio);
                    interval_increase = interval_increase.max(stats.max_u_increase);
                    break;
                }
                Err(Error::StepRejected { .. }) => {
                    halvings += 1;
                    if halvings > MAX_HALVINGS {
                        return Err(Error::StallDetected {
                            time: state.time,
                            halvings,
                        });
                    }
                    dt *= 0.5;
                }
                Err(other) => return Err(other),
            }
        }
        if next_record < schedule.len()
            && (state.time - schedule[next_record]).abs() <= snap_tol
        {
            state.time = schedule[next_record];
            record_row(state, &mut probe, trace, interval_ratio, interval_increase)?;
            interval_ratio = f64::NEG_INFINITY;
            interval_increase = f64::NEG_INFINITY;
            next_record += 1;
        }
    }
    Ok(())
}

fn record_row(
    state: &FlowState,
    probe: &mut Option<TraceProbe<'_>>,
    trace: &mut FlowTrace,
    interval_ratio: f64,
    interval_increase: f64,
) -> Result<()> {
    let mesh = &state.mesh;
    let mut min_u = f64::INFINITY;
    let mut max_u = f64::NEG_INFINITY;
    for u in &mesh.u {
        min_u = min_u.min(*u);
        max_u = max_u.max(*u);
    }
    let panel = match probe {
        Some(p) => p(mesh)?,
        None => Vec::new(),
    };
    if trace.rows.is_empty() {
        trace.panel_len = panel.len();
    } else if panel.len() != trace.panel_len {
        return Err(Error::ScheduleMismatch(format!(
            "probe returned {} values, trace carries {}",
            panel.len(),
            trace.panel_len
        )));
    }
    // Neutral values when no step landed in the interval (the start row).
    let edge_ratio = if interval_ratio == f64::NEG_INFINITY {
        1.0
    } else {
        interval_ratio
    };
    let u_increase = if interval_increase == f64::NEG_INFINITY {
        0.0
    } else {
        interval_increase
    };
    trace.rows.push(TraceRow {
        time: state.time,
        min_k: mesh.min_curvature(),
        max_k: mesh.max_curvature(),
        area: mesh.total_area,
        defect_sum: mesh.defect_sum(),
        min_u,
        max_u,
        min_margin: mesh.min_tri_margin,
        edge_ratio,
        u_increase,
        panel,
    });
    trace.snapshots.push((state.time, mesh.u.clone()));
    Ok(())
}

/// Max over rows of |A(t) - (A(t0) - 8 pi (t - t0))| / A(t0).
pub fn area_law_check(trace: &FlowTrace) -> f64 {
    if trace.rows.len() < 2 {
        return 0.0;
    }
    let t0 = trace.rows[0].time;
    let a0 = trace.rows[0].area;
    trace
        .rows
        .iter()
        .map(|r| (r.area - (a0 - 8.0 * std::f64::consts::PI * (r.time - t0))).abs() / a0)
        .fold(0.0, f64::max)
    }

/// Max over positive-time rows of (max K) * t: the flow's curvature decay
/// certificate. Stable across resolutions when the flow behaves.
pub fn curvature_bound_fit(trace: &FlowTrace) -> f64 {
    trace
        .rows
        .iter()
        .filter(|r| r.time > 0.0)
        .map(|r| r.max_k * r.time)
        .fold(0.0, f64::max)
}

const TRACE_COLUMNS: [&str; 10] = [
    "time",
    "minK",
    "maxK",
    "area",
    "defectSum",
    "minU",
    "maxU",
    "minMargin",
    "edgeRatio",
    "uIncrease",
];

pub fn trace_header(panel_len: usize) -> String {
    let mut h = TRACE_COLUMNS.join(",");
    for i in 0..panel_len {
        let _ = write!(h, ",d_{i}");
    }
    h
}

pub fn trace_to_csv(trace: &FlowTrace, hash: &str) -> String {
    let mut out = crate::io::config_header(hash);
    out.push_str(&trace_header(trace.panel_len));
    out.push('\n');
    for r in &trace.rows {
        let mut fields = vec![
            fmt_f64(r.time),
            fmt_f64(r.min_k),
            fmt_f64(r.max_k),
            fmt_f64(r.area),
            fmt_f64(r.defect_sum),
            fmt_f64(r.min_u),
            fmt_f64(r.max_u),
            fmt_f64(r.min_margin),
            fmt_f64(r.edge_ratio),
            fmt_f64(r.u_increase),
        ];
        for d in &r.panel {
            fields.push(fmt_f64(*d));
        }
        out.push_str(&fields.join(","));
        out.push('\n');
    }
    out
}

pub fn write_trace(path: &Path, trace: &FlowTrace, hash: &str) -> Result<()> {
    std::fs::write(path, trace_to_csv(trace, hash))?;
    Ok(())
}

/// Read rows back from CSV. Snapshots and per-step monotonicity extrema
/// are not part of the CSV; they stay at their defaults.
pub fn read_trace(path: &Path, expected_hash: Option<&str>) -> Result<FlowTrace> {
    let text = std::fs::read_to_string(path)?;
    if let Some(h) = expected_hash {
        crate::io::check_config_hash(path, &text, h)?;
    }
    let mut rows = Vec::new();
    let mut panel_len: Option<usize> = None;
    let mut saw_header = false;
    for (line_no, line) in crate::io::data_lines(&text) {
        if !saw_header {
            saw_header = true;
            let cols: Vec<&str> = line.split(',').collect();
            if cols.len() < TRACE_COLUMNS.len() || cols[..TRACE_COLUMNS.len()] != TRACE_COLUMNS {
                return Err(Error::parse(
                    path.display().to_string(),
                    format!("line {line_no}: unexpected header {line:?}"),
                ));
            }
            panel_len = Some(cols.len() - TRACE_COLUMNS.len());
            continue;
        }
        let vals: Vec<f64> = line
            .split(',')
            .map(|tok| {
                tok.trim().parse::<f64>().map_err(|_| {
                    Error::parse(
                        path.display().to_string(),
                        format!("line {line_no}: bad number {tok:?}"),
                    )
                })
            })
            .collect::<Result<Vec<f64>>>()?;
        let expect = TRACE_COLUMNS.len() + panel_len.unwrap_or(0);
        if vals.len() != expect {
            return Err(Error::parse(
                path.display().to_string(),
                format!("line {line_no}: {} fields, expected {expect}", vals.len()),
            ));
        }
        rows.push(TraceRow {
            time: vals[0],
            min_k: vals[1],
            max_k: vals[2],
            area: vals[3],
            defect_sum: vals[4],
            min_u: vals[5],
            max_u: vals[6],
            min_margin: vals[7],
            edge_ratio: vals[8],
            u_increase: vals[9],
            panel: vals[10..].to_vec(),
        });
    }
    if !saw_header {
        return Err(Error::parse(
            path.display().to_string(),
            "missing header".to_string(),
        ));
    }
    Ok(FlowTrace {
        rows,
        snapshots: Vec::new(),
        max_edge_ratio: f64::NEG_INFINITY,
        max_u_increase: f64::NEG_INFINITY,
        panel_len: panel_len.unwrap_or(0),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::intrinsic::{IntrinsicMesh, RadialField, VertexAreaMode};
    use crate::mesh::SphereMesh;
    use std::sync::Arc;

    // Spatial mesh error dominates at this coarse level (about 1% at
    // level 3); the resolution used by the acceptance suite drives the
    // deviation well under 1e-3.
    const ROUND_K_TOL: f64 = 0.025;
    const AREA_LAW_TOL: f64 = 1e-3;
    const EXACT_REL: f64 = 1e-12;

    fn unit_sphere_state(level: usize) -> FlowState {
        let topo = Arc::new(SphereMesh::icosphere(level).unwrap());
        let rho = RadialField {
            rho: vec![1.0; topo.directions.len()],
        };
        init_flow(
            IntrinsicMesh::from_radial(&rho, topo, VertexAreaMode::Circumcentric).unwrap(),
        )
    }

    fn run(state: &mut FlowState, t_target: f64, cfl: f64) -> FlowTrace {
        let mut trace = FlowTrace::default();
        adaptive_run(
            state,
            RunConfig {
                t_target,
                cfl,
                record_rows: DEFAULT_RECORD_ROWS,
                stop_at: None,
                probe: None,
            },
            &mut trace,
        )
        .unwrap();
        trace
    }

    #[test]
    fn zero_step_is_identity() {
        let mut state = unit_sphere_state(2);
        let u_before = state.mesh.u.clone();
        let lengths = state.mesh.current_lengths.clone();
        try_step(&mut state, 0.0).unwrap();
        assert_eq!(state.mesh.u, u_before);
        assert_eq!(state.mesh.current_lengths, lengths);
        assert_eq!(state.time, 0.0);
    }

    #[test]
    fn round_sphere_follows_closed_form() {
        let mut state = unit_sphere_state(3);
        let trace = run(&mut state, 0.3, 0.1);
        let want = 1.0 / (1.0 - 2.0 * 0.3);
        let max_dev = state
            .mesh
            .curvature
            .iter()
            .map(|k| (k - want).abs() / want)
            .fold(0.0, f64::max);
        assert!(max_dev < ROUND_K_TOL, "final K deviation {max_dev}");
        assert!(area_law_check(&trace) < AREA_LAW_TOL);
        // (max K) * t peaks at the horizon: 0.3 / 0.4.
        let kb = curvature_bound_fit(&trace);
        assert!((kb - 0.75).abs() < 0.02, "curvature bound {kb}");
        for w in trace.rows.windows(2) {
            assert!(w[1].time > w[0].time);
            assert!(w[1].area < w[0].area);
        }
    }

    #[test]
    fn area_residual_halves_with_the_step_factor() {
        let mut coarse = unit_sphere_state(3);
        let r1 = area_law_check(&run(&mut coarse, 0.3, 0.1));
        let mut fine = unit_sphere_state(3);
        let r2 = area_law_check(&run(&mut fine, 0.3, 0.05));
        assert!(r2 < 0.65 * r1, "no first-order gain: {r1} vs {r2}");
    }

    #[test]
    fn potentials_converge_first_order_in_the_step() {
        let mut a = unit_sphere_state(2);
        run(&mut a, 0.2, 0.1);
        let mut b = unit_sphere_state(2);
        run(&mut b, 0.2, 0.05);
        let sup = a
            .mesh
            .u
            .iter()
            .zip(&b.mesh.u)
            .map(|(x, y)| (x - y).abs())
            .fold(0.0, f64::max);
        assert!(sup < 0.05, "potential gap {sup}");
        assert!(sup > 0.0, "runs should differ at different steps");
    }

    #[test]
    fn monotonicity_is_exact() {
        let mut state = unit_sphere_state(3);
        let trace = run(&mut state, 0.25, 0.1);
        assert!(trace.max_edge_ratio <= 1.0 + EXACT_REL);
        assert!(trace.max_u_increase <= 0.0);
        for row in &trace.rows {
            assert!(row.edge_ratio <= 1.0 + EXACT_REL);
            assert!(row.u_increase <= 0.0);
        }
        for (l, b) in state
            .mesh
            .current_lengths
            .iter()
            .zip(&state.mesh.base_lengths)
        {
            assert!(*l <= b * (1.0 + EXACT_REL));
        }
    }

    #[test]
    fn gauss_bonnet_holds_at_every_recorded_time() {
        let mut state = unit_sphere_state(3);
        let trace = run(&mut state, 0.3, 0.1);
        for row in &trace.rows {
            assert!((row.defect_sum - 4.0 * std::f64::consts::PI).abs() < 1e-9);
        }
        // The recorded column matches a recomputation from the snapshot.
        for ((_, u), row) in trace.snapshots.iter().zip(&trace.rows) {
            let mut probe = state.clone();
            probe.mesh.u = u.clone();
            probe.mesh.refresh();
            assert_eq!(probe.mesh.defect_sum(), row.defect_sum);
        }
    }

    #[test]
    fn horizon_past_extinction_is_rejected() {
        let mut state = unit_sphere_state(2);
        let bound = extinction_time(state.mesh.total_area);
        let mut trace = FlowTrace::default();
        let err = adaptive_run(
            &mut state,
            RunConfig {
                t_target: bound * 1.01,
                cfl: 0.1,
                record_rows: 4,
                stop_at: None,
                probe: None,
            },
            &mut trace,
        )
        .unwrap_err();
        assert!(matches!(err, Error::ExtinctionReached(_)));
    }

    #[test]
    fn sliver_triangle_stalls_cleanly() {
        // A base mesh whose margin is already below the rejection
        // threshold can never accept a step.
        let topo = Arc::new(SphereMesh::icosphere(1).unwrap());
        let mut positions: Vec<crate::Vec3> =
            topo.directions.iter().map(|d| 1.0 * d).collect();
        // Slide one vertex almost onto the segment joining two of its
        // neighbors to create a sliver.
        let v = 12usize;
        let n = topo.vertex_neighbors[v].clone();
        let (a, b) = (n[0] as usize, n[1] as usize);
        // Find the triangle containing v, a, b to make the sliver exact.
        let mid = 0.5 * (positions[a] + positions[b]);
        let dirv = (positions[v] - mid).normalize();
        positions[v] = mid + 1e-8 * dirv;
        let mesh =
            IntrinsicMesh::from_positions(topo, positions, VertexAreaMode::Circumcentric);
        let mesh = match mesh {
            Ok(m) => m,
            // Depending on adjacency the sliver may already be degenerate
            // at embed time, which is also a correct outcome.
            Err(Error::DegenerateTriangle { .. }) => return,
            Err(e) => panic!("unexpected error {e}"),
        };
        let mut state = init_flow(mesh);
        let mut trace = FlowTrace::default();
        let err = adaptive_run(
            &mut state,
            RunConfig {
                t_target: 0.05,
                cfl: 0.1,
                record_rows: 4,
                stop_at: None,
                probe: None,
            },
            &mut trace,
        )
        .unwrap_err();
        assert!(matches!(err, Error::StallDetected { .. }), "got {err}");
    }

    #[test]
    fn reruns_are_bit_identical() {
        let mut a = unit_sphere_state(2);
        let ta = run(&mut a, 0.2, 0.1);
        let mut b = unit_sphere_state(2);
        let tb = run(&mut b, 0.2, 0.1);
        assert_eq!(trace_to_csv(&ta, "h"), trace_to_csv(&tb, "h"));
        assert_eq!(a.mesh.u, b.mesh.u);
        assert_eq!(a.step_count, b.step_count);
    }

    #[test]
    fn stop_and_resume_matches_straight_run() {
        let t_target = 0.2;
        let rows = 8;
        let schedule = record_times(t_target, rows);
        let stop = schedule[4];

        let mut full = unit_sphere_state(2);
        let mut full_trace = FlowTrace::default();
        adaptive_run(
            &mut full,
            RunConfig {
                t_target,
                cfl: 0.1,
                record_rows: rows,
                stop_at: None,
                probe: None,
            },
            &mut full_trace,
        )
        .unwrap();

        let mut part = unit_sphere_state(2);
        let mut part_trace = FlowTrace::default();
        adaptive_run(
            &mut part,
            RunConfig {
                t_target,
                cfl: 0.1,
                record_rows: rows,
                stop_at: Some(stop),
                probe: None,
            },
            &mut part_trace,
        )
        .unwrap();
        assert_eq!(part.time, stop);
        adaptive_run(
            &mut part,
            RunConfig {
                t_target,
                cfl: 0.1,
                record_rows: rows,
                stop_at: None,
                probe: None,
            },
            &mut part_trace,
        )
        .unwrap();

        assert_eq!(full.step_count, part.step_count);
        assert_eq!(full.mesh.u, part.mesh.u);
        assert_eq!(full_trace.rows.len(), part_trace.rows.len());
        for (ra, rb) in full_trace.rows.iter().zip(&part_trace.rows) {
            assert_eq!(ra, rb);
        }
    }

    #[test]
    fn probe_values_land_in_rows_and_csv() {
        let mut state = unit_sphere_state(1);
        let mut calls = 0usize;
        let mut probe = |mesh: &IntrinsicMesh| {
            calls += 1;
            Ok(vec![mesh.total_area, 42.0])
        };
        let mut trace = FlowTrace::default();
        adaptive_run(
            &mut state,
            RunConfig {
                t_target: 0.05,
                cfl: 0.1,
                record_rows: 4,
                stop_at: None,
                probe: Some(&mut probe),
            },
            &mut trace,
        )
        .unwrap();
        assert_eq!(calls, 4);
        assert_eq!(trace.panel_len, 2);
        let csv = trace_to_csv(&trace, "h");
        assert!(csv.contains("uIncrease,d_0,d_1"));
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("trace.csv");
        write_trace(&path, &trace, "h").unwrap();
        let back = read_trace(&path, Some("h")).unwrap();
        assert_eq!(back.rows.len(), trace.rows.len());
        for (ra, rb) in back.rows.iter().zip(&trace.rows) {
            assert_eq!(ra, rb);
        }
    }

    #[test]
    fn trace_header_is_pinned() {
        assert_eq!(
            trace_header(3),
            "time,minK,maxK,area,defectSum,minU,maxU,minMargin,edgeRatio,uIncrease,d_0,d_1,d_2"
        );
    }
}
