//! Scene model: three control points on the unit circle in the `z = 0` plane
//! and an optical center anywhere in space.

use std::f64::consts::TAU;

use nalgebra::{Matrix2, Vector2, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tolerance::Tolerances;

/// Optical center in scene units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Viewpoint {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Viewpoint {
    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    /// Point on the danger cylinder at azimuth `theta` and height `z`.
    pub fn on_cylinder(theta: f64, z: f64) -> Self {
        Self::new(theta.cos(), theta.sin(), z)
    }

    pub fn to_vector(self) -> Vector3<f64> {
        Vector3::new(self.x, self.y, self.z)
    }

    pub fn from_vector(v: &Vector3<f64>) -> Self {
        Self::new(v.x, v.y, v.z)
    }

    pub fn mirrored(self) -> Self {
        Self::new(self.x, self.y, -self.z)
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }

    pub fn distance(self, other: Viewpoint) -> f64 {
        (self.to_vector() - other.to_vector()).norm()
    }

    /// Affine interpolation `self + t (other - self)`.
    pub fn lerp(self, other: Viewpoint, t: f64) -> Self {
        Self::new(
            self.x + t * (other.x - self.x),
            self.y + t * (other.y - self.y),
            self.z + t * (other.z - self.z),
        )
    }
}

impl From<[f64; 3]> for Viewpoint {
    fn from(v: [f64; 3]) -> Self {
        Self::new(v[0], v[1], v[2])
    }
}

/// Cosines of the angles subtended at the optical center.
///
/// `cos_alpha` is the angle between the rays to B and C (opposite side `a`),
/// `cos_beta` between A and C, `cos_gamma` between A and B.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AngleTriple {
    pub cos_alpha: f64,
    pub cos_beta: f64,
    pub cos_gamma: f64,
}

impl AngleTriple {
    pub const fn new(cos_alpha: f64, cos_beta: f64, cos_gamma: f64) -> Self {
        Self {
            cos_alpha,
            cos_beta,
            cos_gamma,
        }
    }

    pub fn as_array(self) -> [f64; 3] {
        [self.cos_alpha, self.cos_beta, self.cos_gamma]
    }

    /// True when every cosine lies strictly inside (-1, 1).
    pub fn is_open_interval(self) -> bool {
        self.as_array()
            .iter()
            .all(|c| c.is_finite() && *c > -1.0 && *c < 1.0)
    }
}

/// Three control points on the unit circle with canonical angles summing to 0.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ControlTriangle {
    /// Canonical angles `(phi_a, phi_b, phi_c)`.
    pub phi: [f64; 3],
    /// Planar coordinates of A, B, C.
    pub points: [[f64; 2]; 3],
    /// Side lengths `a = |BC|`, `b = |AC|`, `c = |AB|`.
    pub sides: [f64; 3],
}

impl ControlTriangle {
    /// Builds a triangle from raw control angles, rotating them so they sum to zero.
    pub fn new(phi_a: f64, phi_b: f64, phi_c: f64) -> Result<Self> {
        Self::with_tolerances(phi_a, phi_b, phi_c, &Tolerances::default())
    }

    pub fn with_tolerances(phi_a: f64, phi_b: f64, phi_c: f64, tol: &Tolerances) -> Result<Self> {
        if !(phi_a.is_finite() && phi_b.is_finite() && phi_c.is_finite()) {
            return Err(Error::NonFinite("control angle"));
        }
        let shift = (phi_a + phi_b + phi_c) / 3.0;
        let phi = [phi_a - shift, phi_b - shift, phi_c - shift];
        for (i, j) in [(0, 1), (1, 2), (0, 2)] {
            let gap = wrapped_gap(phi[i], phi[j]);
            if gap < tol.angle_distinct {
                return Err(Error::DegenerateTriangle(i, j, gap));
            }
        }
        let points = phi.map(|p| [p.cos(), p.sin()]);
        let chord = |p: f64, q: f64| 2.0 * ((p - q) / 2.0).sin().abs();
        let sides = [
            chord(phi[1], phi[2]),
            chord(phi[0], phi[2]),
            chord(phi[0], phi[1]),
        ];
        Ok(Self {
            phi,
            points,
            sides,
        })
    }

    /// The equilateral triangle with A at `(1, 0)`.
    pub fn equilateral() -> Self {
        Self::new(0.0, TAU / 3.0, -TAU / 3.0).expect("equilateral triangle is nondegenerate")
    }

    pub fn point(&self, i: usize) -> Vector3<f64> {
        Vector3::new(self.points[i][0], self.points[i][1], 0.0)
    }

    pub fn a(&self) -> f64 {
        self.sides[0]
    }

    pub fn b(&self) -> f64 {
        self.sides[1]
    }

    pub fn c(&self) -> f64 {
        self.sides[2]
    }

    /// Distances `(|OA|, |OB|, |OC|)`.
    pub fn distances(&self, o: Viewpoint) -> [f64; 3] {
        let ov = o.to_vector();
        [0, 1, 2].map(|i| (ov - self.point(i)).norm())
    }

    /// Cyclic relabelling `(A, B, C) -> (B, C, A)`.
    pub fn rotated_labels(&self) -> Result<Self> {
        Self::new(self.phi[1], self.phi[2], self.phi[0])
    }

    /// Cosines of the subtended angles seen from `o`.
    pub fn angles_from_viewpoint(&self, o: Viewpoint) -> Result<AngleTriple> {
        self.angles_with_tolerances(o, &Tolerances::default())
    }

    pub fn angles_with_tolerances(&self, o: Viewpoint, tol: &Tolerances) -> Result<AngleTriple> {
        if !o.is_finite() {
            return Err(Error::NonFinite("viewpoint"));
        }
        let ov = o.to_vector();
        let rays = [0, 1, 2].map(|i| ov - self.point(i));
        for (i, r) in rays.iter().enumerate() {
            if r.norm() < tol.control_point_clearance {
                return Err(Error::ViewpointOnControlPoint(i));
            }
        }
        let cos = |p: &Vector3<f64>, q: &Vector3<f64>| {
            (p.dot(q) / (p.norm() * q.norm())).clamp(-1.0, 1.0)
        };
        Ok(AngleTriple::new(
            cos(&rays[1], &rays[2]),
            cos(&rays[0], &rays[2]),
            cos(&rays[0], &rays[1]),
        ))
    }

    /// Optical centers reproducing the distances `(s1, s2, s3)` to `(A, B, C)`.
    ///
    /// Returns the mirror pair `(x, y, ±z)` with the `z >= 0` member first, a
    /// single tangent point when `z² ≈ 0`, or nothing when the spheres miss.
    pub fn centers_from_distances(&self, s: [f64; 3]) -> Vec<Viewpoint> {
        self.centers_with_tolerances(s, &Tolerances::default())
    }

    pub fn centers_with_tolerances(&self, s: [f64; 3], tol: &Tolerances) -> Vec<Viewpoint> {
        if s.iter().any(|v| !v.is_finite() || *v <= 0.0) {
            return Vec::new();
        }
        let [pa, pb, pc] = self.points.map(|p| Vector2::new(p[0], p[1]));
        // |P-A|² - |P-B|² = s1² - s2², with |A| = |B| = |C| = 1.
        let m = Matrix2::new(
            2.0 * (pb.x - pa.x),
            2.0 * (pb.y - pa.y),
            2.0 * (pc.x - pa.x),
            2.0 * (pc.y - pa.y),
        );
        let rhs = Vector2::new(s[0] * s[0] - s[1] * s[1], s[0] * s[0] - s[2] * s[2]);
        let Some(p) = m.lu().solve(&rhs) else {
            return Vec::new();
        };
        let z2 = s[0] * s[0] - (p - pa).norm_squared();
        let scale = s.iter().fold(1.0_f64, |acc, v| acc.max(v * v));
        if z2.abs() <= tol.tangent_z2 * scale {
            vec![Viewpoint::new(p.x, p.y, 0.0)]
        } else if z2 > 0.0 {
            let z = z2.sqrt();
            vec![Viewpoint::new(p.x, p.y, z), Viewpoint::new(p.x, p.y, -z)]
        } else {
            Vec::new()
        }
    }
}

/// `x² + y² - 1`: zero exactly on the danger cylinder.
pub fn dc_value(o: Viewpoint) -> f64 {
    o.x * o.x + o.y * o.y - 1.0
}

fn wrapped_gap(p: f64, q: f64) -> f64 {
    let d = (p - q).rem_euclid(TAU);
    d.min(TAU - d)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn equilateral_sides() {
        let t = ControlTriangle::equilateral();
        for s in t.sides {
            assert!((s - 3f64.sqrt()).abs() < 1e-12);
        }
        assert!(t.phi.iter().sum::<f64>().abs() < 1e-12);
        for p in t.points {
            assert!((p[0] * p[0] + p[1] * p[1] - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn canonicalization_removes_common_rotation() {
        let t = ControlTriangle::new(0.1, 2.0 * PI / 3.0 + 0.1, -2.0 * PI / 3.0 + 0.1).unwrap();
        let e = ControlTriangle::equilateral();
        for i in 0..3 {
            assert!((t.phi[i] - e.phi[i]).abs() < 1e-12);
            assert!((t.sides[i] - e.sides[i]).abs() < 1e-12);
        }
    }

    #[test]
    fn coincident_angles_are_rejected() {
        assert!(matches!(
            ControlTriangle::new(0.0, 0.0, 0.0),
            Err(Error::DegenerateTriangle(..))
        ));
        // Angles equal modulo 2π are the same point.
        assert!(matches!(
            ControlTriangle::new(0.3, 0.3 + TAU, 2.0),
            Err(Error::DegenerateTriangle(..))
        ));
        assert!(ControlTriangle::new(f64::NAN, 0.0, 1.0).is_err());
    }

    #[test]
    fn cosines_from_symmetry_axis() {
        let t = ControlTriangle::equilateral();
        let ang = t.angles_from_viewpoint(Viewpoint::new(0.0, 0.0, 1.0)).unwrap();
        for c in ang.as_array() {
            assert!((c - 0.25).abs() < 1e-14);
        }
        let mut last = 0.25;
        for h in [2.0, 5.0, 20.0, 100.0] {
            let c = t
                .angles_from_viewpoint(Viewpoint::new(0.0, 0.0, h))
                .unwrap()
                .cos_alpha;
            assert!(c > last && c < 1.0);
            last = c;
        }
    }

    #[test]
    fn viewpoint_on_control_point() {
        let t = ControlTriangle::equilateral();
        assert!(matches!(
            t.angles_from_viewpoint(Viewpoint::new(1.0, 0.0, 0.0)),
            Err(Error::ViewpointOnControlPoint(0))
        ));
    }

    #[test]
    fn trilateration_examples() {
        let t = ControlTriangle::equilateral();
        let r2 = 2f64.sqrt();
        let c = t.centers_from_distances([r2, r2, r2]);
        assert_eq!(c.len(), 2);
        assert!(c[0].distance(Viewpoint::new(0.0, 0.0, 1.0)) < 1e-12);
        assert!(c[1].distance(Viewpoint::new(0.0, 0.0, -1.0)) < 1e-12);

        // |OA| = 1 and |OB| = |OC| = 2 at (1, 0, ±1).
        let c = t.centers_from_distances([1.0, 2.0, 2.0]);
        assert!(c.iter().any(|o| o.distance(Viewpoint::new(1.0, 0.0, 1.0)) < 1e-12));
        assert!(c.iter().any(|o| o.distance(Viewpoint::new(1.0, 0.0, -1.0)) < 1e-12));

        assert!(t.centers_from_distances([0.1, 0.1, 0.1]).is_empty());
        assert!(t.centers_from_distances([-1.0, 1.0, 1.0]).is_empty());
    }

    #[test]
    fn tangent_point_is_single() {
        let t = ControlTriangle::new(0.2, 2.0, 4.1).unwrap();
        let o = Viewpoint::new(0.3, -0.4, 0.0);
        let c = t.centers_from_distances(t.distances(o));
        assert_eq!(c.len(), 1);
        assert!(c[0].distance(o) < 1e-9);
    }

    #[test]
    fn cylinder_value() {
        assert_eq!(dc_value(Viewpoint::new(1.0, 0.0, 5.3)), 0.0);
        assert_eq!(dc_value(Viewpoint::new(0.0, 0.0, 1.0)), -1.0);
        assert!(dc_value(Viewpoint::on_cylinder(0.3, -2.0)).abs() < 1e-15);
    }
}
