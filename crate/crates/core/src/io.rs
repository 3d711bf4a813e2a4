//! Text artifact conventions shared by every stage.
//!
//! All artifacts are line-oriented text. Lines starting with `#` are
//! comments; the first comment of a generated file is `# config <hash>` so
//! that downstream stages can refuse mixed-configuration inputs. Floats are
//! printed with 17 significant digits, which round-trips f64 exactly.

use crate::{Error, Result, Vec3};
use std::fmt::Write as _;
use std::path::Path;

/// Format a float with 17 significant digits.
pub fn fmt_f64(x: f64) -> String {
    format!("{:.16e}", x)
}

/// Leading comment carrying the configuration hash.
pub fn config_header(hash: &str) -> String {
    format!("# config {hash}\n")
}

/// Extract the config hash from artifact text, if present.
pub fn read_config_hash(text: &str) -> Option<&str> {
    for line in text.lines() {
        let line = line.trim();
        if let Some(rest) = line.strip_prefix("# config ") {
            return Some(rest.trim());
        }
        if !line.is_empty() && !line.starts_with('#') {
            break;
        }
    }
    None
}

/// Fail with `ArtifactMismatch` when `text` carries a different config hash.
/// Artifacts without a hash line are accepted (hand-written inputs).
pub fn check_config_hash(path: &Path, text: &str, expected: &str) -> Result<()> {
    if let Some(found) = read_config_hash(text) {
        if found != expected {
            return Err(Error::ArtifactMismatch {
                path: path.display().to_string(),
                found: found.to_string(),
                expected: expected.to_string(),
            });
        }
    }
    Ok(())
}

/// Iterate over non-comment, non-empty lines.
pub fn data_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines().enumerate().filter_map(|(i, line)| {
        let t = line.trim();
        if t.is_empty() || t.starts_with('#') {
            None
        } else {
            Some((i + 1, t))
        }
    })
}

fn parse_f64(path: &Path, line_no: usize, tok: &str) -> Result<f64> {
    tok.parse::<f64>().map_err(|_| {
        Error::parse(
            path.display().to_string(),
            format!("line {line_no}: bad float {tok:?}"),
        )
    })
}

/// Read a point cloud: one `x y z` triple per line, `#` comments allowed.
pub fn read_point_cloud(path: &Path) -> Result<Vec<Vec3>> {
    let text = std::fs::read_to_string(path)?;
    let mut points = Vec::new();
    for (line_no, line) in data_lines(&text) {
        let toks: Vec<&str> = line.split_whitespace().collect();
        if toks.len() != 3 {
            return Err(Error::parse(
                path.display().to_string(),
                format!("line {line_no}: expected 3 coordinates, found {}", toks.len()),
            ));
        }
        points.push(Vec3::new(
            parse_f64(path, line_no, toks[0])?,
            parse_f64(path, line_no, toks[1])?,
            parse_f64(path, line_no, toks[2])?,
        ));
    }
    if points.is_empty() {
        return Err(Error::parse(path.display().to_string(), "no points"));
    }
    Ok(points)
}

/// Write a point cloud in the same format.
pub fn write_point_cloud(path: &Path, points: &[Vec3], hash: &str) -> Result<()> {
    let mut out = config_header(hash);
    for p in points {
        let _ = writeln!(out, "{} {} {}", fmt_f64(p.x), fmt_f64(p.y), fmt_f64(p.z));
    }
    std::fs::write(path, out)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_round_trip() {
        for x in [
            std::f64::consts::PI,
            -1.0 / 3.0,
            1e-300,
            6.02e23,
            -0.0,
            1.0 + f64::EPSILON,
        ] {
            let s = fmt_f64(x);
            let back: f64 = s.parse().unwrap();
            assert_eq!(back.to_bits(), x.to_bits(), "{s}");
        }
    }

    #[test]
    fn hash_header_round_trips() {
        let text = format!("{}1 2 3\n", config_header("abcd1234"));
        assert_eq!(read_config_hash(&text), Some("abcd1234"));
        assert_eq!(read_config_hash("1 2 3\n"), None);
    }

    #[test]
    fn point_cloud_round_trips() {
        let dir = std::env::temp_dir().join("convexflow_io_test");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("cloud.txt");
        let pts = vec![Vec3::new(0.1, -0.2, 0.3), Vec3::new(1.0, 2.0, -3.0)];
        write_point_cloud(&path, &pts, "deadbeef").unwrap();
        let back = read_point_cloud(&path).unwrap();
        assert_eq!(back.len(), 2);
        for (a, b) in pts.iter().zip(&back) {
            assert_eq!(a, b);
        }
    }

    #[test]
    fn mismatched_hash_is_rejected() {
        let text = format!("{}1 2 3\n", config_header("aaaa"));
        let err = check_config_hash(Path::new("x"), &text, "bbbb").unwrap_err();
        assert!(matches!(err, Error::ArtifactMismatch { .. }));
    }
}
