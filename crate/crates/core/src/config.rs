//! Run configuration: key = value text, defaults, and the content hash
//! that stamps every artifact.
//!
//! The hash covers every setting that can change a computed number, so
//! artifacts from different runs never silently mix. Output location and
//! worker count are excluded: they cannot affect results.

use crate::intrinsic::VertexAreaMode;
use crate::io::fmt_f64;
use crate::{Error, Result};
use sha2::{Digest, Sha256};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

pub const DEFAULT_LEVEL: usize = 5;
pub const DEFAULT_LMAX: usize = 24;
pub const DEFAULT_CFL: f64 = 0.1;
pub const DEFAULT_T_TARGET_FRAC: f64 = 0.25;
pub const DEFAULT_EPSILONS: [f64; 3] = [0.2, 0.1, 0.05];
pub const DEFAULT_MU_MIN_REL: f64 = 1e-3;
pub const DEFAULT_MIN_INRADIUS_REL: f64 = 1e-6;
pub const DEFAULT_PANEL_PAIRS: usize = 20;
pub const DEFAULT_PANEL_ANCHORS: usize = 8;
pub const DEFAULT_PANEL_SEED: u64 = 2026;
pub const DEFAULT_MAX_FACES: usize = 6;

#[derive(Clone, Debug, PartialEq)]
pub struct Config {
    /// Input point cloud path, as written in the config.
    pub input: String,
    /// Icosphere subdivision level of the flow mesh.
    pub level: usize,
    /// Spherical-harmonic band limit of the support expansion.
    pub lmax: usize,
    /// Polar quadrature nodes; 0 means the degree-exact default.
    pub n_theta: usize,
    /// Mollification scales, strictly decreasing.
    pub epsilons: Vec<f64>,
    /// Step-control factor in (0, 1].
    pub cfl: f64,
    /// Flow horizon as a fraction of the extinction time.
    pub t_target_frac: f64,
    /// Convexity-margin floor relative to the body inradius.
    pub mu_min_rel: f64,
    /// Hull nondegeneracy floor relative to the circumradius.
    pub min_inradius_rel: f64,
    pub panel_pairs: usize,
    pub panel_anchors: usize,
    pub panel_seed: u64,
    /// Facet-sequence budget of the exact polyhedral distance.
    pub max_faces: usize,
    pub record_rows: usize,
    pub vertex_area: VertexAreaMode,
    /// Area-law residual budget override.
    pub area_tol: f64,
    /// Finest-point distance budget override.
    pub distance_budget: f64,
    /// Output directory (not hashed).
    pub out_dir: PathBuf,
    /// Worker cap, 0 = all cores (not hashed).
    pub jobs: usize,
}

impl Default for Config {
    fn default() -> Config {
        Config {
            input: String::new(),
            level: DEFAULT_LEVEL,
            lmax: DEFAULT_LMAX,
            n_theta: 0,
            epsilons: DEFAULT_EPSILONS.to_vec(),
            cfl: DEFAULT_CFL,
            t_target_frac: DEFAULT_T_TARGET_FRAC,
            mu_min_rel: DEFAULT_MU_MIN_REL,
            min_inradius_rel: DEFAULT_MIN_INRADIUS_REL,
            panel_pairs: DEFAULT_PANEL_PAIRS,
            panel_anchors: DEFAULT_PANEL_ANCHORS,
            panel_seed: DEFAULT_PANEL_SEED,
            max_faces: DEFAULT_MAX_FACES,
            record_rows: crate::flow::DEFAULT_RECORD_ROWS,
            vertex_area: VertexAreaMode::Circumcentric,
            area_tol: crate::verify::AREA_LAW_TOL,
            distance_budget: crate::verify::DISTANCE_BUDGET,
            out_dir: PathBuf::from("out"),
            jobs: 0,
        }
    }
}

fn area_mode_label(mode: VertexAreaMode) -> &'static str {
    match mode {
        VertexAreaMode::Circumcentric => "circumcentric",
        VertexAreaMode::Barycentric => "barycentric",
    }
}

fn parse_area_mode(s: &str) -> Result<VertexAreaMode> {
    match s {
        "circumcentric" => Ok(VertexAreaMode::Circumcentric),
        "barycentric" => Ok(VertexAreaMode::Barycentric),
        other => Err(Error::Config(format!("unknown vertex_area {other:?}"))),
    }
}

impl Config {
    /// Effective polar node count: degree-exact for products of two
    /// band-limited expansions unless overridden.
    pub fn quadrature_nodes(&self) -> usize {
        if self.n_theta > 0 {
            self.n_theta
        } else {
            2 * (self.lmax + 1)
        }
    }

    /// Apply one `key = value` assignment.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        fn num<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
            value
                .parse::<T>()
                .map_err(|_| Error::Config(format!("bad value {value:?} for {key}")))
        }
        match key {
            "input" => self.input = value.to_string(),
            "level" => self.level = num(key, value)?,
            "lmax" => self.lmax = num(key, value)?,
            "n_theta" => self.n_theta = num(key, value)?,
            "epsilons" => {
                let mut eps = Vec::new();
                for tok in value.split(',') {
                    eps.push(num::<f64>(key, tok.trim())?);
                }
                self.epsilons = eps;
            }
            "cfl" => self.cfl = num(key, value)?,
            "t_target_frac" => self.t_target_frac = num(key, value)?,
            "mu_min_rel" => self.mu_min_rel = num(key, value)?,
            "min_inradius_rel" => self.min_inradius_rel = num(key, value)?,
            "panel_pairs" => self.panel_pairs = num(key, value)?,
            "panel_anchors" => self.panel_anchors = num(key, value)?,
            "panel_seed" => self.panel_seed = num(key, value)?,
            "max_faces" => self.max_faces = num(key, value)?,
            "record_rows" => self.record_rows = num(key, value)?,
            "vertex_area" => self.vertex_area = parse_area_mode(value)?,
            "area_tol" => self.area_tol = num(key, value)?,
            "distance_budget" => self.distance_budget = num(key, value)?,
            "out_dir" => self.out_dir = PathBuf::from(value),
            "jobs" => self.jobs = num(key, value)?,
            other => return Err(Error::Config(format!("unknown key {other:?}"))),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        if self.input.is_empty() {
            return Err(Error::Config("input path is required".into()));
        }
        if self.level == 0 {
            return Err(Error::Config("level must be at least 1".into()));
        }
        if self.epsilons.is_empty() {
            return Err(Error::Config("epsilon list is empty".into()));
        }
        for e in &self.epsilons {
            if !(*e >= 0.0) {
                return Err(Error::Config(format!("negative epsilon {e}")));
            }
        }
        for w in self.epsilons.windows(2) {
            if !(w[1] < w[0]) {
                return Err(Error::Config(
                    "epsilons must be strictly decreasing".into(),
                ));
            }
        }
        if !(self.cfl > 0.0 && self.cfl <= 1.0) {
            return Err(Error::Config(format!(
                "step-control factor {} outside (0, 1]",
                self.cfl
            )));
        }
        if !(self.t_target_frac > 0.0 && self.t_target_frac < 1.0) {
            return Err(Error::Config(format!(
                "t_target_frac {} outside (0, 1)",
                self.t_target_frac
            )));
        }
        if self.panel_pairs < 2 {
            return Err(Error::Config("panel needs at least 2 pairs".into()));
        }
        if self.panel_anchors == 0 {
            return Err(Error::Config("panel needs at least 1 anchor".into()));
        }
        if self.record_rows < 2 {
            return Err(Error::Config("need at least 2 recorded rows".into()));
        }
        Ok(())
    }

    /// Canonical text of the result-affecting settings, in fixed order.
    pub fn canonical(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "input = {}", self.input);
        let _ = writeln!(s, "level = {}", self.level);
        let _ = writeln!(s, "lmax = {}", self.lmax);
        let _ = writeln!(s, "n_theta = {}", self.quadrature_nodes());
        let eps: Vec<String> = self.epsilons.iter().map(|e| fmt_f64(*e)).collect();
        let _ = writeln!(s, "epsilons = {}", eps.join(","));
        let _ = writeln!(s, "cfl = {}", fmt_f64(self.cfl));
        let _ = writeln!(s, "t_target_frac = {}", fmt_f64(self.t_target_frac));
        let _ = writeln!(s, "mu_min_rel = {}", fmt_f64(self.mu_min_rel));
        let _ = writeln!(s, "min_inradius_rel = {}", fmt_f64(self.min_inradius_rel));
        let _ = writeln!(s, "panel_pairs = {}", self.panel_pairs);
        let _ = writeln!(s, "panel_anchors = {}", self.panel_anchors);
        let _ = writeln!(s, "panel_seed = {}", self.panel_seed);
        let _ = writeln!(s, "max_faces = {}", self.max_faces);
        let _ = writeln!(s, "record_rows = {}", self.record_rows);
        let _ = writeln!(s, "vertex_area = {}", area_mode_label(self.vertex_area));
        let _ = writeln!(s, "area_tol = {}", fmt_f64(self.area_tol));
        let _ = writeln!(s, "distance_budget = {}", fmt_f64(self.distance_budget));
        s
    }

    /// Hex digest of the canonical text, truncated for readable headers.
    pub fn hash(&self) -> String {
        let digest = Sha256::digest(self.canonical().as_bytes());
        let mut hex = String::with_capacity(16);
        for b in &digest[..8] {
            let _ = write!(hex, "{b:02x}");
        }
        hex
    }

    /// Full round-trippable text, including unhashed settings. Unlike
    /// `canonical`, raw values are kept (a zero n_theta stays zero).
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "input = {}", self.input);
        let _ = writeln!(s, "level = {}", self.level);
        let _ = writeln!(s, "lmax = {}", self.lmax);
        let _ = writeln!(s, "n_theta = {}", self.n_theta);
        let eps: Vec<String> = self.epsilons.iter().map(|e| fmt_f64(*e)).collect();
        let _ = writeln!(s, "epsilons = {}", eps.join(","));
        let _ = writeln!(s, "cfl = {}", fmt_f64(self.cfl));
        let _ = writeln!(s, "t_target_frac = {}", fmt_f64(self.t_target_frac));
        let _ = writeln!(s, "mu_min_rel = {}", fmt_f64(self.mu_min_rel));
        let _ = writeln!(s, "min_inradius_rel = {}", fmt_f64(self.min_inradius_rel));
        let _ = writeln!(s, "panel_pairs = {}", self.panel_pairs);
        let _ = writeln!(s, "panel_anchors = {}", self.panel_anchors);
        let _ = writeln!(s, "panel_seed = {}", self.panel_seed);
        let _ = writeln!(s, "max_faces = {}", self.max_faces);
        let _ = writeln!(s, "record_rows = {}", self.record_rows);
        let _ = writeln!(s, "vertex_area = {}", area_mode_label(self.vertex_area));
        let _ = writeln!(s, "area_tol = {}", fmt_f64(self.area_tol));
        let _ = writeln!(s, "distance_budget = {}", fmt_f64(self.distance_budget));
        let _ = writeln!(s, "out_dir = {}", self.out_dir.display());
        let _ = writeln!(s, "jobs = {}", self.jobs);
        s
    }
}

/// Parse `key = value` lines; `#` starts a comment, blank lines allowed.
pub fn parse_config(text: &str, origin: &str) -> Result<Config> {
    let mut cfg = Config::default();
    for (line_no, line) in crate::io::data_lines(text) {
        let Some((key, value)) = line.split_once('=') else {
            return Err(Error::parse(
                origin,
                format!("line {line_no}: expected key = value, got {line:?}"),
            ));
        };
        cfg.set(key.trim(), value.trim())?;
    }
    Ok(cfg)
}

pub fn read_config(path: &Path) -> Result<Config> {
    let text = std::fs::read_to_string(path)?;
    parse_config(&text, &path.display().to_string())
}

pub fn write_config(path: &Path, cfg: &Config) -> Result<()> {
    std::fs::write(path, cfg.to_text())?;
    Ok(())
}
