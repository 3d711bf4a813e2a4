//! Small numerical utilities: a deterministic PRNG, stable triangle formulas,
//! and orthonormal tangent frames.

use crate::Vec3;

/// SplitMix64: tiny deterministic generator for panel sampling and test data.
/// Hand-rolled so that artifacts never depend on an external crate's stream.
#[derive(Clone, Debug)]
pub struct SplitMix64 {
    state: u64,
}

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        SplitMix64 { state: seed }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(0x9e37_79b9_7f4a_7c15);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
        z ^ (z >> 31)
    }

    /// Uniform in [0, 1).
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform in 0..n.
    pub fn next_index(&mut self, n: usize) -> usize {
        (self.next_f64() * n as f64) as usize % n
    }

    /// Uniform direction on the unit sphere.
    pub fn next_unit(&mut self) -> Vec3 {
        let z = 2.0 * self.next_f64() - 1.0;
        let phi = 2.0 * std::f64::consts::PI * self.next_f64();
        let r = (1.0 - z * z).max(0.0).sqrt();
        Vec3::new(r * phi.cos(), r * phi.sin(), z)
    }

    /// Uniform rotation matrix (Shoemake quaternion method).
    pub fn next_rotation(&mut self) -> nalgebra::Matrix3<f64> {
        let u1 = self.next_f64();
        let u2 = self.next_f64();
        let u3 = self.next_f64();
        let tau = 2.0 * std::f64::consts::PI;
        let q = nalgebra::Quaternion::new(
            (1.0 - u1).sqrt() * (tau * u2).sin(),
            (1.0 - u1).sqrt() * (tau * u2).cos(),
            u1.sqrt() * (tau * u3).sin(),
            u1.sqrt() * (tau * u3).cos(),
        );
        nalgebra::UnitQuaternion::from_quaternion(q).to_rotation_matrix().into_inner()
    }
}

/// Stable triangle area from side lengths (Kahan's ordering of Heron's rule).
/// Returns NaN-free 0.0 for inputs violating the triangle inequality by
/// rounding only; genuinely invalid triangles are caught by margin checks.
pub fn triangle_area(a: f64, b: f64, c: f64) -> f64 {
    // Sort so x >= y >= z.
    let (mut x, mut y, mut z) = (a, b, c);
    if x < y {
        std::mem::swap(&mut x, &mut y);
    }
    if y < z {
        std::mem::swap(&mut y, &mut z);
    }
    if x < y {
        std::mem::swap(&mut x, &mut y);
    }
    let t = (x + (y + z)) * (z - (x - y)) * (z + (x - y)) * (x + (y - z));
    0.25 * t.max(0.0).sqrt()
}

/// Relative triangle-inequality margin: min over sides of (sum of others -
/// side) / longest side. Negative when the inequality fails.
pub fn triangle_margin(a: f64, b: f64, c: f64) -> f64 {
    let longest = a.max(b).max(c);
    let m = (b + c - a).min(a + c - b).min(a + b - c);
    m / longest
}

/// Interior angle opposite side `a` in a triangle with sides (a, b, c),
/// computed through atan2 so that obtuse angles lose no precision.
pub fn triangle_angle(a: f64, b: f64, c: f64, area: f64) -> f64 {
    let cos_scaled = b * b + c * c - a * a;
    (4.0 * area).atan2(cos_scaled)
}

/// Cotangent of the angle opposite side `a`.
pub fn triangle_cot(a: f64, b: f64, c: f64, area: f64) -> f64 {
    (b * b + c * c - a * a) / (4.0 * area)
}

/// Deterministic orthonormal tangent frame at a unit direction.
/// The seed axis is the coordinate axis least aligned with `n`.
pub fn tangent_frame(n: &Vec3) -> (Vec3, Vec3) {
    let ax = n.x.abs();
    let ay = n.y.abs();
    let az = n.z.abs();
    let seed = if ax <= ay && ax <= az {
        Vec3::new(1.0, 0.0, 0.0)
    } else if ay <= az {
        Vec3::new(0.0, 1.0, 0.0)
    } else {
        Vec3::new(0.0, 0.0, 1.0)
    };
    let e1 = n.cross(&seed).normalize();
    let e2 = n.cross(&e1);
    (e1, e2)
}

/// Angle between two unit directions, stable near 0 and pi.
pub fn unit_angle(a: &Vec3, b: &Vec3) -> f64 {
    let cross = a.cross(b).norm();
    let dot = a.dot(b);
    cross.atan2(dot)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn splitmix_is_reproducible() {
        let mut a = SplitMix64::new(42);
        let mut b = SplitMix64::new(42);
        for _ in 0..100 {
            assert_eq!(a.next_u64(), b.next_u64());
        }
    }

    #[test]
    fn rotation_is_orthogonal() {
        let mut rng = SplitMix64::new(7);
        for _ in 0..10 {
            let r = rng.next_rotation();
            let err = (r.transpose() * r - nalgebra::Matrix3::identity()).norm();
            assert!(err < 1e-12, "orthogonality error {err}");
        }
    }

    #[test]
    fn area_matches_right_triangle() {
        let area = triangle_area(5.0, 4.0, 3.0);
        assert!((area - 6.0).abs() < 1e-12);
    }

    #[test]
    fn angles_sum_to_pi() {
        let (a, b, c) = (0.9, 1.3, 0.7);
        let area = triangle_area(a, b, c);
        let s = triangle_angle(a, b, c, area)
            + triangle_angle(b, c, a, area)
            + triangle_angle(c, a, b, area);
        assert!((s - std::f64::consts::PI).abs() < 1e-14);
    }

    #[test]
    fn frame_is_orthonormal() {
        let mut rng = SplitMix64::new(3);
        for _ in 0..50 {
            let n = rng.next_unit();
            let (e1, e2) = tangent_frame(&n);
            assert!(e1.dot(&n).abs() < 1e-14);
            assert!(e2.dot(&n).abs() < 1e-14);
            assert!(e1.dot(&e2).abs() < 1e-14);
            assert!((e1.norm() - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn margin_detects_violation() {
        assert!(triangle_margin(1.0, 1.0, 2.5) < 0.0);
        assert!(triangle_margin(1.0, 1.0, 1.0) > 0.99);
    }
}
