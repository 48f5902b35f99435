use serde::{Deserialize, Serialize};

/// Every numerical threshold used by the laboratory, in scene units where the
/// control points sit on the unit circle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Tolerances {
    /// Minimum wrapped gap between canonical control angles.
    pub angle_distinct: f64,
    /// Minimum distance between a viewpoint and any control point.
    pub control_point_clearance: f64,
    /// `|z²|` below which trilateration reports a single tangent point.
    pub tangent_z2: f64,
    /// Relative residual of a triplet substituted into the cosine system.
    pub triplet_residual: f64,
    /// Imaginary part below which a component counts as real.
    pub imag: f64,
    /// Real part above which a component counts as positive.
    pub positive: f64,
    /// Root clustering radius factor: roots within `cluster * (1 + |r|)` merge.
    pub cluster: f64,
    /// Relative residual targeted by Newton polishing of quartic roots.
    pub newton_residual: f64,
    /// `|z|` below which the Rieck `C_*` terms are undefined.
    pub min_height: f64,
    /// `|c4| / ||c||` below which the quartic is declared degenerate.
    pub leading_coefficient: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            angle_distinct: 1e-6,
            control_point_clearance: 1e-9,
            tangent_z2: 1e-12,
            triplet_residual: 1e-8,
            imag: 1e-8,
            positive: 1e-8,
            cluster: 1e-9,
            newton_residual: 1e-12,
            min_height: 1e-9,
            leading_coefficient: 1e-13,
        }
    }
}
