//! Experiment configuration as read from JSON.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{ControlTriangle, Viewpoint};
use crate::partition::{default_epsilons, FoldCase, Slice, MAX_GRID};
use crate::tolerance::Tolerances;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Control angles `φ_A, φ_B, φ_C` in radians.
    pub triangle: [f64; 3],
    #[serde(default)]
    pub tolerances: Tolerances,
    /// Required by every randomized experiment.
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
    #[serde(default)]
    pub sweep: SweepConfig,
    #[serde(default)]
    pub fit: FitConfig,
    #[serde(default)]
    pub member: MemberConfig,
    #[serde(default)]
    pub cross: CrossConfig,
    #[serde(default)]
    pub map: MapConfig,
    #[serde(default)]
    pub fold: FoldConfig,
    #[serde(default)]
    pub rank: RankConfig,
    #[serde(default)]
    pub rieck: RieckConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepConfig {
    pub theta_count: usize,
    pub z_min: f64,
    pub z_max: f64,
    /// Heights are log-spaced.
    pub z_count: usize,
    /// Shift each `θ` by a seeded uniform fraction of its cell.
    pub jitter: bool,
    /// Heights of the deltoid-limit table; empty skips it.
    pub deltoid_z0: Vec<f64>,
    pub deltoid_theta_count: usize,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            theta_count: 120,
            z_min: 0.05,
            z_max: 20.0,
            z_count: 40,
            jitter: false,
            deltoid_z0: vec![10.0, 100.0, 1000.0],
            deltoid_theta_count: 72,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FitConfig {
    /// Degrees fitted in order; each gets its own report and polynomial file.
    pub degrees: Vec<u32>,
    pub even_in_z: bool,
    pub nondivisibility_count: usize,
    /// Nondivisibility probes keep this distance from every sample.
    pub clearance: f64,
    /// Marching-tetrahedra resolution of the OBJ mesh; 0 skips the mesh.
    pub mesh_resolution: usize,
}

impl Default for FitConfig {
    fn default() -> Self {
        Self {
            degrees: vec![10, 12],
            even_in_z: true,
            nondivisibility_count: 2000,
            clearance: 1e-2,
            mesh_resolution: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MemberConfig {
    pub points: Vec<Viewpoint>,
    pub tol: f64,
}

impl Default for MemberConfig {
    fn default() -> Self {
        Self {
            points: Vec::new(),
            tol: 1e-9,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PathEnds {
    pub start: Viewpoint,
    pub end: Viewpoint,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CrossConfig {
    pub paths: Vec<PathEnds>,
    /// Additional seeded paths through sampled companion points.
    pub random_paths: usize,
    pub half_length: f64,
    pub z_min: f64,
    pub z_max: f64,
    pub samples: usize,
    pub tolerance: f64,
}

impl Default for CrossConfig {
    fn default() -> Self {
        Self {
            paths: Vec::new(),
            random_paths: 0,
            half_length: 0.02,
            z_min: 0.3,
            z_max: 3.0,
            samples: 64,
            tolerance: 1e-10,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MapConfig {
    pub slice: Slice,
    /// Seeded boundary nodes checked against the boundary fields.
    pub boundary_probes: usize,
    pub boundary_radius: usize,
}

impl Default for MapConfig {
    fn default() -> Self {
        Self {
            slice: Slice::horizontal(1.0, 2.0, 256),
            boundary_probes: 100,
            boundary_radius: 2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FoldConfig {
    pub cases: Vec<FoldCase>,
    /// Additional seeded cases.
    pub random_cases: usize,
    pub z_min: f64,
    pub z_max: f64,
    pub min_fold_component: f64,
    pub eps: Vec<f64>,
}

impl Default for FoldConfig {
    fn default() -> Self {
        Self {
            cases: Vec::new(),
            random_cases: 0,
            z_min: 0.3,
            z_max: 3.0,
            min_fold_component: 0.5,
            eps: default_epsilons(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RankConfig {
    pub on_dc: usize,
    pub off_dc: usize,
    pub off_clearance: f64,
}

impl Default for RankConfig {
    fn default() -> Self {
        Self {
            on_dc: 100,
            off_dc: 100,
            off_clearance: 0.1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RieckConfig {
    pub count: usize,
}

impl Default for RieckConfig {
    fn default() -> Self {
        Self { count: 1000 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Sweep,
    Fit,
    Member,
    Cross,
    Map,
    Fold,
    Rank,
    RieckReport,
}

fn invalid(field: &str, message: impl Into<String>) -> Error {
    Error::ConfigInvalid {
        field: field.into(),
        message: message.into(),
    }
}

fn positive(field: &str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(invalid(field, format!("must be finite and positive, got {v}")))
    }
}

fn at_least(field: &str, v: usize, min: usize) -> Result<()> {
    if v >= min {
        Ok(())
    } else {
        Err(invalid(field, format!("must be at least {min}, got {v}")))
    }
}

fn finite_point(field: &str, o: &Viewpoint) -> Result<()> {
    if o.is_finite() {
        Ok(())
    } else {
        Err(invalid(field, "non-finite coordinate"))
    }
}

impl ExperimentConfig {
    /// Parses and validates the structural part. Syntax errors and unknown
    /// keys are reported with their line and column.
    pub fn from_json_str(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| {
            invalid(&format!("line {} column {}", e.line(), e.column()), e.to_string())
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn control_triangle(&self) -> Result<ControlTriangle> {
        let [a, b, c] = self.triangle;
        ControlTriangle::with_tolerances(a, b, c, &self.tolerances)
            .map_err(|e| invalid("triangle", e.to_string()))
    }

    /// Checks every field regardless of the command.
    pub fn validate(&self) -> Result<()> {
        if self.triangle.iter().any(|v| !v.is_finite()) {
            return Err(invalid("triangle", "non-finite angle"));
        }
        self.control_triangle()?;
        let t = &self.tolerances;
        for (name, v) in [
            ("tolerances.angle_distinct", t.angle_distinct),
            ("tolerances.control_point_clearance", t.control_point_clearance),
            ("tolerances.tangent_z2", t.tangent_z2),
            ("tolerances.triplet_residual", t.triplet_residual),
            ("tolerances.imag", t.imag),
            ("tolerances.positive", t.positive),
            ("tolerances.cluster", t.cluster),
            ("tolerances.newton_residual", t.newton_residual),
            ("tolerances.min_height", t.min_height),
            ("tolerances.leading_coefficient", t.leading_coefficient),
        ] {
            positive(name, v)?;
        }

        let s = &self.sweep;
        at_least("sweep.theta_count", s.theta_count, 1)?;
        at_least("sweep.z_count", s.z_count, 1)?;
        positive("sweep.z_min", s.z_min)?;
        positive("sweep.z_max", s.z_max)?;
        if s.z_max < s.z_min {
            return Err(invalid("sweep.z_max", "smaller than sweep.z_min"));
        }
        for v in &s.deltoid_z0 {
            positive("sweep.deltoid_z0", *v)?;
        }
        if !s.deltoid_z0.is_empty() {
            at_least("sweep.deltoid_theta_count", s.deltoid_theta_count, 1)?;
        }

        let f = &self.fit;
        if f.degrees.is_empty() {
            return Err(invalid("fit.degrees", "empty"));
        }
        if let Some(d) = f.degrees.iter().find(|d| **d == 0 || **d > 16) {
            return Err(invalid("fit.degrees", format!("degree {d} outside 1..=16")));
        }
        positive("fit.clearance", f.clearance)?;

        positive("member.tol", self.member.tol)?;
        for p in &self.member.points {
            finite_point("member.points", p)?;
        }

        let c = &self.cross;
        at_least("cross.samples", c.samples, 2)?;
        if !(c.tolerance > 0.0 && c.tolerance < 1e-3) {
            return Err(invalid("cross.tolerance", format!("must lie in (0, 1e-3), got {}", c.tolerance)));
        }
        positive("cross.half_length", c.half_length)?;
        positive("cross.z_min", c.z_min)?;
        if !(c.z_max > c.z_min) {
            return Err(invalid("cross.z_max", "not above cross.z_min"));
        }
        for p in &c.paths {
            finite_point("cross.paths.start", &p.start)?;
            finite_point("cross.paths.end", &p.end)?;
            if p.start.distance(p.end) == 0.0 {
                return Err(invalid("cross.paths", "start and end coincide"));
            }
        }

        let m = &self.map.slice;
        if m.nu == 0 || m.nv == 0 || m.nu > MAX_GRID || m.nv > MAX_GRID {
            return Err(invalid("map.slice", format!("grid {}x{} outside 1..={MAX_GRID}", m.nu, m.nv)));
        }
        if m.origin.iter().chain(&m.u).chain(&m.v).any(|v| !v.is_finite()) {
            return Err(invalid("map.slice", "non-finite coordinate"));
        }

        let fo = &self.fold;
        if fo.eps.len() < 2 {
            return Err(invalid("fold.eps", "need at least two values"));
        }
        if fo.eps.iter().any(|e| !(e.is_finite() && *e > 0.0)) || fo.eps.windows(2).any(|w| w[1] >= w[0]) {
            return Err(invalid("fold.eps", "must be positive and strictly decreasing"));
        }
        let ratio = fo.eps[1] / fo.eps[0];
        if fo.eps.windows(2).any(|w| ((w[1] / w[0]) / ratio - 1.0).abs() > 1e-9) {
            return Err(invalid("fold.eps", "must be a geometric sequence"));
        }
        positive("fold.z_min", fo.z_min)?;
        if !(fo.z_max > fo.z_min) {
            return Err(invalid("fold.z_max", "not above fold.z_min"));
        }
        if !(0.0..=1.0).contains(&fo.min_fold_component) {
            return Err(invalid("fold.min_fold_component", "must lie in [0, 1]"));
        }
        for case in &fo.cases {
            if !(case.theta.is_finite() && case.z0.is_finite() && case.direction.iter().all(|v| v.is_finite())) {
                return Err(invalid("fold.cases", "non-finite value"));
            }
        }

        positive("rank.off_clearance", self.rank.off_clearance)?;
        Ok(())
    }

    /// Whether `command` draws random numbers under this config.
    pub fn is_randomized(&self, command: Command) -> bool {
        match command {
            Command::Sweep => self.sweep.jitter,
            Command::Fit => self.sweep.jitter || self.fit.nondivisibility_count > 0,
            Command::Member => false,
            Command::Cross => self.cross.random_paths > 0,
            Command::Map => self.map.boundary_probes > 0,
            Command::Fold => self.fold.random_cases > 0,
            Command::Rank => true,
            Command::RieckReport => true,
        }
    }

    /// The seed, or `ConfigInvalid` if `command` needs one and none is set.
    pub fn seed_for(&self, command: Command) -> Result<u64> {
        match (self.seed, self.is_randomized(command)) {
            (Some(s), _) => Ok(s),
            (None, false) => Ok(0),
            (None, true) => Err(invalid("seed", "required by this randomized experiment")),
        }
    }

    /// Command-specific requirements beyond [`validate`](Self::validate).
    pub fn check_command(&self, command: Command) -> Result<()> {
        self.seed_for(command)?;
        match command {
            Command::Member if self.member.points.is_empty() => Err(invalid("member.points", "empty")),
            Command::Cross if self.cross.paths.is_empty() && self.cross.random_paths == 0 => {
                Err(invalid("cross.paths", "no explicit or random paths"))
            }
            Command::Fold if self.fold.cases.is_empty() && self.fold.random_cases == 0 => {
                Err(invalid("fold.cases", "no explicit or random cases"))
            }
            Command::Rank if self.rank.on_dc == 0 && self.rank.off_dc == 0 => {
                Err(invalid("rank", "no points requested"))
            }
            Command::RieckReport if self.rieck.count == 0 => Err(invalid("rieck.count", "must be positive")),
            _ => Ok(()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"{ "triangle": [0.0, 2.0943951023931953, 4.1887902047863905] }"#;

    #[test]
    fn minimal_config_takes_defaults() {
        let c = ExperimentConfig::from_json_str(MINIMAL).unwrap();
        assert_eq!(c.sweep, SweepConfig::default());
        assert_eq!(c.seed, None);
        assert!(c.seed_for(Command::Sweep).is_ok());
        assert!(c.seed_for(Command::Rank).is_err());
    }

    #[test]
    fn unknown_key_reports_position() {
        let text = "{\n  \"triangle\": [0, 2, 4],\n  \"bogus\": 1\n}";
        match ExperimentConfig::from_json_str(text) {
            Err(Error::ConfigInvalid { field, message }) => {
                assert!(field.starts_with("line 3"), "{field}");
                assert!(message.contains("bogus"));
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn jitter_needs_seed() {
        let text = r#"{ "triangle": [0, 2, 4], "sweep": { "jitter": true } }"#;
        let c = ExperimentConfig::from_json_str(text).unwrap();
        assert!(matches!(c.check_command(Command::Sweep), Err(Error::ConfigInvalid { .. })));
    }

    #[test]
    fn degenerate_triangle_rejected() {
        let text = r#"{ "triangle": [0, 0, 4] }"#;
        assert!(ExperimentConfig::from_json_str(text).is_err());
    }

    #[test]
    fn eps_must_be_geometric() {
        let text = r#"{ "triangle": [0, 2, 4], "fold": { "eps": [1e-2, 1e-3, 5e-4] } }"#;
        assert!(ExperimentConfig::from_json_str(text).is_err());
    }

    #[test]
    fn round_trip() {
        let c = ExperimentConfig::from_json_str(MINIMAL).unwrap();
        let back = ExperimentConfig::from_json_str(&c.to_json()).unwrap();
        assert_eq!(c, back);
    }
}
