//! The companion surface of the danger cylinder, built geometrically.
//!
//! A viewpoint on the cylinder has a double solution; the other P3P solutions
//! of the same instance trilaterate to its companions. Sweeping the cylinder
//! traces the surface, which is then fitted by an implicit polynomial.

use std::collections::HashMap;
use std::f64::consts::TAU;
use std::fmt::Write as _;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{dc_value, AngleTriple, ControlTriangle, Viewpoint};
use crate::poly::{ScaleBox, TrivariatePoly};
use crate::rieck::deltoid_value;
use crate::solver::{self, DoubleSplit, SolutionSet};
use crate::stats::Quantiles;
use crate::tolerance::Tolerances;

/// Sources closer than this to the control plane are skipped.
pub const MIN_SOURCE_HEIGHT: f64 = 0.05;
/// Trilaterated double solution must land this close to the source.
pub const SOURCE_MATCH: f64 = 1e-6;
/// Companions closer than this (in `|dc_value|`) to the cylinder are dropped.
pub const COMPANION_DC_FLOOR: f64 = 1e-4;
/// Minimum pairwise distance kept by fitting.
pub const DEDUP_DISTANCE: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SurfaceSample {
    pub theta: f64,
    pub z0: f64,
    pub source: Viewpoint,
    /// Canonical representative with `z > 0`.
    pub companion: Viewpoint,
    /// Max difference between the companion's cosines and the source's.
    pub residual: f64,
    pub dc_value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Exclusion {
    pub theta: f64,
    pub z0: f64,
    pub reason: String,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Sweep {
    pub samples: Vec<SurfaceSample>,
    pub exclusions: Vec<Exclusion>,
}

fn max_cosine_gap(a: &AngleTriple, b: &AngleTriple) -> f64 {
    a.as_array()
        .iter()
        .zip(b.as_array())
        .map(|(p, q)| (p - q).abs())
        .fold(0.0, f64::max)
}

/// The double solution seen from `(cos θ, sin θ, z0)` and the other two
/// solutions of that instance.
///
/// The double solution must trilaterate back to the source.
pub fn cylinder_double(tri: &ControlTriangle, theta: f64, z0: f64) -> Result<DoubleSplit> {
    let source = Viewpoint::on_cylinder(theta, z0);
    let split = solver::split_on_cylinder(tri, theta, z0, &Tolerances::default())?;
    let back = tri.centers_from_distances(split.double.real_parts());
    if !back
        .iter()
        .any(|c| c.distance(source) <= SOURCE_MATCH || c.distance(source.mirrored()) <= SOURCE_MATCH)
    {
        return Err(Error::NoDoubleSolution);
    }
    Ok(split)
}

/// Companions of one cylinder viewpoint `(cos θ, sin θ, z0)`.
pub fn sweep_point(
    tri: &ControlTriangle,
    theta: f64,
    z0: f64,
) -> std::result::Result<Vec<SurfaceSample>, Vec<Exclusion>> {
    let excl = |reason: String| Exclusion { theta, z0, reason };
    if z0.abs() < MIN_SOURCE_HEIGHT {
        return Err(vec![excl(format!(
            "|z0| below {MIN_SOURCE_HEIGHT}: near-plane source skipped"
        ))]);
    }
    let source = Viewpoint::on_cylinder(theta, z0);
    let ang = match tri.angles_from_viewpoint(source) {
        Ok(a) => a,
        Err(e) => return Err(vec![excl(e.to_string())]),
    };
    let split = match cylinder_double(tri, theta, z0) {
        Ok(v) => v,
        Err(e) => return Err(vec![excl(e.to_string())]),
    };
    let mut samples = Vec::new();
    let mut dropped = Vec::new();
    for t in split.companions.iter().filter(|t| t.is_p3p()) {
        if t.distance(&split.double) <= 1e-9 {
            continue;
        }
        let Some(&companion) = tri.centers_from_distances(t.real_parts()).first() else {
            dropped.push(excl("companion triplet does not trilaterate".into()));
            continue;
        };
        let companion = if companion.z < 0.0 { companion.mirrored() } else { companion };
        let residual = match tri.angles_from_viewpoint(companion) {
            Ok(a) => max_cosine_gap(&a, &ang),
            Err(e) => {
                dropped.push(excl(e.to_string()));
                continue;
            }
        };
        let dc = dc_value(companion);
        if dc.abs() <= COMPANION_DC_FLOOR {
            dropped.push(excl(format!("companion on the cylinder (|dc| = {:.3e})", dc.abs())));
            continue;
        }
        samples.push(SurfaceSample {
            theta,
            z0,
            source,
            companion,
            residual,
            dc_value: dc,
        });
    }
    if samples.is_empty() && !dropped.is_empty() {
        return Err(dropped);
    }
    Ok(samples)
}

/// Sweeps the cylinder over the grid. Output order follows `(θ index, z index)`.
pub fn sweep_dc(tri: &ControlTriangle, thetas: &[f64], z0s: &[f64]) -> Sweep {
    let grid: Vec<(f64, f64)> = thetas
        .iter()
        .flat_map(|&t| z0s.iter().map(move |&z| (t, z)))
        .collect();
    let results: Vec<_> = grid
        .par_iter()
        .map(|&(t, z)| sweep_point(tri, t, z))
        .collect();
    let mut out = Sweep::default();
    for r in results {
        match r {
            Ok(s) => out.samples.extend(s),
            Err(e) => out.exclusions.extend(e),
        }
    }
    out
}

/// Uniform `θ` in `[0, 2π)`.
pub fn theta_grid(count: usize) -> Vec<f64> {
    (0..count).map(|i| TAU * i as f64 / count as f64).collect()
}

/// One `θ` per uniform cell, placed at a seeded uniform offset inside it.
pub fn jittered_theta_grid(count: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|i| TAU * (i as f64 + rng.gen_range(0.0..1.0)) / count as f64)
        .collect()
}

/// Log-uniform heights in `[lo, hi]`.
pub fn log_grid(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    if count == 1 {
        return vec![lo];
    }
    let (a, b) = (lo.ln(), hi.ln());
    (0..count)
        .map(|i| (a + (b - a) * i as f64 / (count - 1) as f64).exp())
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum MembershipLabel {
    OnDC,
    OnCSDC,
    NearBoth,
    Off,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MembershipVerdict {
    pub label: MembershipLabel,
    /// `|dc_value(O)|`.
    pub dc_distance: f64,
    /// Min `|dc_value|` over the companion centers, if any exist.
    pub csdc_evidence: Option<f64>,
    pub discriminant: f64,
    pub tol: f64,
    /// `|Im|` allowed for a companion triplet, relative to `1 + |s|`.
    pub near_real: f64,
    pub companions: Vec<Viewpoint>,
}

/// Real positive triplets other than the one reproducing `o`, trilaterated.
pub fn companion_centers(
    tri: &ControlTriangle,
    o: Viewpoint,
    set: &SolutionSet,
    near_real: f64,
) -> Vec<Viewpoint> {
    let own = set.closest(tri.distances(o));
    let mut out = Vec::new();
    for t in &set.triplets {
        if own.is_some_and(|own| std::ptr::eq(own, t)) && t.multiplicity < 2 {
            continue;
        }
        if t.max_imag() > near_real * (1.0 + t.norm()) {
            continue;
        }
        let s = t.real_parts();
        if s.iter().any(|v| *v <= 0.0) {
            continue;
        }
        for c in tri.centers_from_distances(s) {
            let c = if c.z < 0.0 { c.mirrored() } else { c };
            let own_point = c.distance(o) <= SOURCE_MATCH || c.distance(o.mirrored()) <= SOURCE_MATCH;
            if !own_point {
                out.push(c);
            }
            break;
        }
    }
    out
}

pub fn membership(tri: &ControlTriangle, o: Viewpoint, tol: f64) -> Result<MembershipVerdict> {
    let near_real = tol.sqrt().max(1e-6);
    // A pair split by `sqrt(tol)` sits within `tol` of a double root.
    let cluster = Tolerances {
        cluster: near_real,
        ..Tolerances::default()
    };
    let set = solver::solve_viewpoint_with(tri, o, &cluster)?;
    let companions = companion_centers(tri, o, &set, near_real);
    let dc_distance = dc_value(o).abs();
    let csdc_evidence = companions
        .iter()
        .map(|c| dc_value(*c).abs())
        .min_by(f64::total_cmp);
    let on_dc = dc_distance <= tol;
    let on_csdc = csdc_evidence.is_some_and(|e| e <= tol);
    let label = match (on_dc, on_csdc) {
        (true, true) => MembershipLabel::NearBoth,
        (true, false) => MembershipLabel::OnDC,
        (false, true) => MembershipLabel::OnCSDC,
        (false, false) => MembershipLabel::Off,
    };
    Ok(MembershipVerdict {
        label,
        dc_distance,
        csdc_evidence,
        discriminant: set.discriminant,
        tol,
        near_real,
        companions,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub degree: u32,
    pub even_in_z: bool,
    pub basis_size: usize,
    pub samples_in: usize,
    pub duplicates_dropped: usize,
    pub train: usize,
    pub held_out: usize,
    /// The five smallest singular values, ascending.
    pub smallest_singular_values: Vec<f64>,
    /// Second-smallest over smallest singular value.
    pub singular_gap: f64,
    pub rank_deficient: bool,
    pub train_rms: f64,
    pub held_out_rms: f64,
    pub held_out_max: f64,
    pub held_out_abs: Option<Quantiles>,
    /// Held-out RMS of the unit polynomial from the second-smallest direction.
    pub second_direction_rms: f64,
    /// Held-out RMS of `|p| / |grad p|` in scaled coordinates.
    pub sampson_rms: f64,
    pub scale: ScaleBox,
}

/// Ratio below which the two smallest singular values are considered unresolved.
pub const RANK_GAP: f64 = 10.0;
/// Singular values below this fraction of the largest count as zero.
pub const RANK_TOL: f64 = 1e-10;

/// Exponents of total degree `<= degree`, optionally with even `z` powers only.
pub fn monomial_basis(degree: u32, even_in_z: bool) -> Vec<[u32; 3]> {
    let mut out = Vec::new();
    for d in 0..=degree {
        for i in (0..=d).rev() {
            for j in (0..=d - i).rev() {
                let k = d - i - j;
                if !even_in_z || k % 2 == 0 {
                    out.push([i, j, k]);
                }
            }
        }
    }
    out
}

/// Drops points closer than [`DEDUP_DISTANCE`] to an earlier kept point.
pub fn deduplicate(points: &[[f64; 3]]) -> Vec<[f64; 3]> {
    let cell = DEDUP_DISTANCE;
    let key = |p: &[f64; 3]| p.map(|v| (v / cell).floor() as i64);
    let mut grid: HashMap<[i64; 3], Vec<usize>> = HashMap::new();
    let mut kept: Vec<[f64; 3]> = Vec::new();
    for p in points {
        let k = key(p);
        let mut clash = false;
        'n: for dx in -1..=1 {
            for dy in -1..=1 {
                for dz in -1..=1 {
                    if let Some(ids) = grid.get(&[k[0] + dx, k[1] + dy, k[2] + dz]) {
                        for &id in ids {
                            let q = kept[id];
                            let d2: f64 = (0..3).map(|a| (p[a] - q[a]).powi(2)).sum();
                            if d2 < cell * cell {
                                clash = true;
                                break 'n;
                            }
                        }
                    }
                }
            }
        }
        if !clash {
            grid.entry(k).or_default().push(kept.len());
            kept.push(*p);
        }
    }
    kept
}

fn fit_box(points: &[[f64; 3]], even_in_z: bool) -> ScaleBox {
    let mut b = ScaleBox::bounding(points);
    if even_in_z {
        let zmax = points.iter().map(|p| p[2].abs()).fold(0.0, f64::max);
        b.center[2] = 0.0;
        b.half_width[2] = if zmax > 1e-12 { zmax } else { 1.0 };
    }
    b
}

fn design_row(basis: &[[u32; 3]], u: [f64; 3], degree: u32) -> Vec<f64> {
    let d = degree as usize;
    let pw = u.map(|ua| {
        std::iter::successors(Some(1.0), |v| Some(v * ua))
            .take(d + 1)
            .collect::<Vec<f64>>()
    });
    basis
        .iter()
        .map(|e| pw[0][e[0] as usize] * pw[1][e[1] as usize] * pw[2][e[2] as usize])
        .collect()
}

pub fn fit_poly(
    samples: &[SurfaceSample],
    degree: u32,
    even_in_z: bool,
) -> Result<(TrivariatePoly, FitReport)> {
    let pts: Vec<[f64; 3]> = samples
        .iter()
        .map(|s| [s.companion.x, s.companion.y, s.companion.z])
        .collect();
    fit_points(&pts, degree, even_in_z)
}

/// Fits an implicit polynomial through a point cloud. Every fifth point is
/// held out for validation.
pub fn fit_points(
    points: &[[f64; 3]],
    degree: u32,
    even_in_z: bool,
) -> Result<(TrivariatePoly, FitReport)> {
    let basis = monomial_basis(degree, even_in_z);
    let pts = deduplicate(points);
    let need = 4 * basis.len();
    if pts.len() < need {
        return Err(Error::InsufficientSamples {
            have: pts.len(),
            need,
        });
    }
    let scale = fit_box(&pts, even_in_z);
    let (train, held): (Vec<(usize, &[f64; 3])>, Vec<(usize, &[f64; 3])>) =
        pts.iter().enumerate().partition(|(i, _)| i % 5 != 4);
    let rows: Vec<Vec<f64>> = train
        .par_iter()
        .map(|(_, p)| design_row(&basis, scale.to_scaled(**p), degree))
        .collect();
    let m = basis.len();
    let a = DMatrix::from_fn(rows.len(), m, |r, c| rows[r][c]);
    let r = a.qr().r();
    let svd = r.svd(false, true);
    let v_t = svd.v_t.expect("right singular vectors requested");
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&i, &j| svd.singular_values[i].total_cmp(&svd.singular_values[j]));
    let direction = |k: usize| -> TrivariatePoly {
        let row = v_t.row(order[k]);
        TrivariatePoly::from_terms(scale, basis.iter().enumerate().map(|(i, e)| (*e, row[i])))
            .normalized()
    };
    let poly = direction(0);
    let second = direction(1);
    let sigma: Vec<f64> = order.iter().take(5).map(|&i| svd.singular_values[i]).collect();
    // Values under the rounding floor are indistinguishable from zero.
    let sigma_max = svd.singular_values.max();
    let floor = f64::EPSILON * sigma_max;
    let singular_gap = if sigma[1] <= floor {
        1.0
    } else {
        sigma[1] / sigma[0].max(floor)
    };

    let rank_deficient = singular_gap < RANK_GAP || sigma[1] <= RANK_TOL * sigma_max;

    let rms = |p: &TrivariatePoly, set: &[(usize, &[f64; 3])]| {
        (set.iter().map(|(_, q)| p.eval(**q).powi(2)).sum::<f64>() / set.len().max(1) as f64).sqrt()
    };
    let held_abs: Vec<f64> = held.iter().map(|(_, q)| poly.eval(**q).abs()).collect();
    let sampson: Vec<f64> = held
        .iter()
        .map(|(_, q)| {
            let u = scale.to_scaled(**q);
            let g = poly.gradient_scaled(u);
            let gn = (g[0] * g[0] + g[1] * g[1] + g[2] * g[2]).sqrt();
            poly.eval_scaled(u).abs() / gn.max(1e-300)
        })
        .collect();
    let report = FitReport {
        degree,
        even_in_z,
        basis_size: m,
        samples_in: points.len(),
        duplicates_dropped: points.len() - pts.len(),
        train: train.len(),
        held_out: held.len(),
        smallest_singular_values: sigma,
        singular_gap,
        rank_deficient,
        train_rms: rms(&poly, &train),
        held_out_rms: rms(&poly, &held),
        held_out_max: held_abs.iter().copied().fold(0.0, f64::max),
        held_out_abs: Quantiles::of(held_abs.iter().copied()),
        second_direction_rms: rms(&second, &held),
        sampson_rms: (sampson.iter().map(|v| v * v).sum::<f64>() / sampson.len().max(1) as f64)
            .sqrt(),
        scale,
    };
    Ok((poly, report))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Nondivisibility {
    pub min_abs: f64,
    pub at: Viewpoint,
    pub evaluated: usize,
}

/// Smallest `|poly|` over random cylinder points inside the polynomial's box,
/// each at least `clearance` away from every point of `avoid`.
pub fn dc_nondivisibility(
    poly: &TrivariatePoly,
    avoid: &[[f64; 3]],
    clearance: f64,
    count: usize,
    seed: u64,
) -> Nondivisibility {
    let b = poly.scale_box();
    let (zlo, zhi) = (b.center[2] - b.half_width[2], b.center[2] + b.half_width[2]);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best = Nondivisibility {
        min_abs: f64::INFINITY,
        at: Viewpoint::new(1.0, 0.0, 0.0),
        evaluated: 0,
    };
    let mut attempts = 0;
    while best.evaluated < count && attempts < 1000 * count {
        attempts += 1;
        let o = Viewpoint::on_cylinder(rng.gen_range(0.0..TAU), rng.gen_range(zlo..=zhi));
        let p = [o.x, o.y, o.z];
        let clear = avoid
            .iter()
            .all(|q| (0..3).map(|a| (p[a] - q[a]).powi(2)).sum::<f64>() >= clearance * clearance);
        if !clear {
            continue;
        }
        best.evaluated += 1;
        let v = poly.eval(p).abs();
        if v < best.min_abs {
            best.min_abs = v;
            best.at = o;
        }
    }
    best
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeltoidRow {
    pub z0: f64,
    pub companions: usize,
    pub max_abs_q: f64,
    /// Largest radial distance from a companion `(x, y)` to the curve.
    pub max_distance: f64,
    pub points: Vec<[f64; 2]>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeltoidTable {
    pub rows: Vec<DeltoidRow>,
    /// `max|q|` strictly decreases along the rows.
    pub monotone: bool,
    /// First row's `max|q|` over the last row's.
    pub reduction: f64,
}

/// Distance from `(x, y)` to the zero set of the limit quartic along the ray
/// from the origin, by Newton iteration in the radius.
pub fn radial_distance_to_deltoid(x: f64, y: f64) -> f64 {
    let r0 = x.hypot(y);
    if r0 == 0.0 {
        return f64::INFINITY;
    }
    let (c, s) = (x / r0, y / r0);
    let g = |r: f64| deltoid_value(r * c, r * s);
    let dg = |r: f64| {
        let (px, py) = (r * c, r * s);
        let gx = 4.0 * px.powi(3) - 24.0 * px * px + 4.0 * px * py * py + 36.0 * px + 24.0 * py * py;
        let gy = 4.0 * px * px * py + 48.0 * px * py + 4.0 * py.powi(3) + 36.0 * py;
        gx * c + gy * s
    };
    let mut r = r0;
    for _ in 0..100 {
        let d = dg(r);
        if d == 0.0 {
            break;
        }
        let step = g(r) / d;
        r -= step;
        if step.abs() <= 1e-15 * (1.0 + r.abs()) {
            break;
        }
    }
    if g(r).abs() > 1e-9 {
        return f64::INFINITY;
    }
    (r - r0).abs()
}

pub fn deltoid_limit_check(
    tri: &ControlTriangle,
    z0_values: &[f64],
    theta_count: usize,
) -> Result<DeltoidTable> {
    if z0_values.is_empty() {
        return Err(Error::EmptyInput("z0 values"));
    }
    if let Some(z) = z0_values.iter().find(|z| !(**z >= 10.0)) {
        return Err(Error::ConfigInvalid {
            field: "z0_values".into(),
            message: format!("heights must be at least 10, got {z}"),
        });
    }
    let thetas = theta_grid(theta_count);
    let mut rows = Vec::new();
    for &z0 in z0_values {
        let sweep = sweep_dc(tri, &thetas, &[z0]);
        let points: Vec<[f64; 2]> = sweep
            .samples
            .iter()
            .map(|s| [s.companion.x, s.companion.y])
            .collect();
        let max_abs_q = points
            .iter()
            .map(|p| deltoid_value(p[0], p[1]).abs())
            .fold(0.0, f64::max);
        let max_distance = points
            .par_iter()
            .map(|p| radial_distance_to_deltoid(p[0], p[1]))
            .reduce(|| 0.0, f64::max);
        rows.push(DeltoidRow {
            z0,
            companions: points.len(),
            max_abs_q,
            max_distance,
            points,
        });
    }
    let monotone = rows.windows(2).all(|w| w[1].max_abs_q < w[0].max_abs_q);
    let reduction = rows[0].max_abs_q / rows[rows.len() - 1].max_abs_q;
    Ok(DeltoidTable {
        rows,
        monotone,
        reduction,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ExportFormat {
    Csv,
    Obj,
}

impl std::str::FromStr for ExportFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(Self::Csv),
            "obj" => Ok(Self::Obj),
            other => Err(Error::UnsupportedFormat(other.to_string())),
        }
    }
}

/// Mesh extraction region for OBJ export.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeshBox {
    pub lo: [f64; 3],
    pub hi: [f64; 3],
    pub resolution: usize,
}

pub enum SurfaceData<'a> {
    Samples(&'a [SurfaceSample]),
    Poly(&'a TrivariatePoly, MeshBox),
}

pub fn export_surface(data: SurfaceData<'_>, format: ExportFormat) -> Result<String> {
    match (data, format) {
        (SurfaceData::Samples(s), ExportFormat::Csv) => samples_csv(s),
        (SurfaceData::Poly(p, b), ExportFormat::Obj) => poly_obj(p, b),
        (SurfaceData::Samples(_), ExportFormat::Obj) => {
            Err(Error::UnsupportedFormat("obj from a point cloud".into()))
        }
        (SurfaceData::Poly(..), ExportFormat::Csv) => {
            Err(Error::UnsupportedFormat("csv from a polynomial".into()))
        }
    }
}

pub const CSV_HEADER: &str = "theta,z0,x,y,z,dc_value,residual";

pub fn samples_csv(samples: &[SurfaceSample]) -> Result<String> {
    if samples.is_empty() {
        return Err(Error::EmptyInput("surface samples"));
    }
    let mut out = String::with_capacity(samples.len() * 120);
    out.push_str(CSV_HEADER);
    out.push('\n');
    for s in samples {
        let c = s.companion;
        writeln!(
            out,
            "{},{},{},{},{},{},{}",
            s.theta, s.z0, c.x, c.y, c.z, s.dc_value, s.residual
        )
        .expect("writing to a string");
    }
    Ok(out)
}

// Six tetrahedra sharing the cube diagonal 0-6.
const CUBE_CORNERS: [[usize; 3]; 8] = [
    [0, 0, 0],
    [1, 0, 0],
    [1, 1, 0],
    [0, 1, 0],
    [0, 0, 1],
    [1, 0, 1],
    [1, 1, 1],
    [0, 1, 1],
];
const TETS: [[usize; 4]; 6] = [
    [0, 6, 1, 2],
    [0, 6, 2, 3],
    [0, 6, 3, 7],
    [0, 6, 7, 4],
    [0, 6, 4, 5],
    [0, 6, 5, 1],
];

/// Triangle mesh of the zero set by marching tetrahedra on a regular grid.
pub fn poly_obj(poly: &TrivariatePoly, b: MeshBox) -> Result<String> {
    if poly.is_empty() {
        return Err(Error::EmptyInput("polynomial"));
    }
    let n = b.resolution.max(1);
    let np = n + 1;
    let coord = |a: usize, i: usize| b.lo[a] + (b.hi[a] - b.lo[a]) * i as f64 / n as f64;
    let idx = |i: usize, j: usize, k: usize| (k * np + j) * np + i;
    let values: Vec<f64> = (0..np * np * np)
        .into_par_iter()
        .map(|g| {
            let (i, j, k) = (g % np, (g / np) % np, g / (np * np));
            poly.eval([coord(0, i), coord(1, j), coord(2, k)])
        })
        .collect();
    let pos = |g: usize| {
        let (i, j, k) = (g % np, (g / np) % np, g / (np * np));
        [coord(0, i), coord(1, j), coord(2, k)]
    };

    let mut vertex_of: HashMap<(usize, usize), usize> = HashMap::new();
    let mut vertices: Vec<[f64; 3]> = Vec::new();
    let mut faces: Vec<[usize; 3]> = Vec::new();
    let mut edge_vertex = |a: usize, b: usize, vertices: &mut Vec<[f64; 3]>| -> usize {
        let key = (a.min(b), a.max(b));
        *vertex_of.entry(key).or_insert_with(|| {
            let (va, vb) = (values[key.0], values[key.1]);
            let t = va / (va - vb);
            let (pa, pb) = (pos(key.0), pos(key.1));
            vertices.push([0, 1, 2].map(|c| pa[c] + t * (pb[c] - pa[c])));
            vertices.len() - 1
        })
    };
    for k in 0..n {
        for j in 0..n {
            for i in 0..n {
                let corners = CUBE_CORNERS.map(|c| idx(i + c[0], j + c[1], k + c[2]));
                for tet in TETS {
                    let g = tet.map(|t| corners[t]);
                    let inside: Vec<usize> = g.iter().copied().filter(|&v| values[v] < 0.0).collect();
                    let outside: Vec<usize> = g.iter().copied().filter(|&v| values[v] >= 0.0).collect();
                    let tris: Vec<[usize; 3]> = match inside.len() {
                        1 | 3 => {
                            let (lone, rest) = if inside.len() == 1 {
                                (inside[0], outside.clone())
                            } else {
                                (outside[0], inside.clone())
                            };
                            vec![[
                                edge_vertex(lone, rest[0], &mut vertices),
                                edge_vertex(lone, rest[1], &mut vertices),
                                edge_vertex(lone, rest[2], &mut vertices),
                            ]]
                        }
                        2 => {
                            let (p, q) = (inside[0], inside[1]);
                            let (r, s) = (outside[0], outside[1]);
                            let a = edge_vertex(p, r, &mut vertices);
                            let b2 = edge_vertex(p, s, &mut vertices);
                            let c = edge_vertex(q, s, &mut vertices);
                            let d = edge_vertex(q, r, &mut vertices);
                            vec![[a, b2, c], [a, c, d]]
                        }
                        _ => Vec::new(),
                    };
                    let neg = g.iter().copied().find(|&v| values[v] < 0.0);
                    for mut t in tris {
                        // Normals point towards increasing values.
                        if let Some(nv) = neg {
                            let [p0, p1, p2] = t.map(|v| vertices[v]);
                            let e1 = [0, 1, 2].map(|c| p1[c] - p0[c]);
                            let e2 = [0, 1, 2].map(|c| p2[c] - p0[c]);
                            let nrm = [
                                e1[1] * e2[2] - e1[2] * e2[1],
                                e1[2] * e2[0] - e1[0] * e2[2],
                                e1[0] * e2[1] - e1[1] * e2[0],
                            ];
                            let pn = pos(nv);
                            let to_neg: f64 = (0..3).map(|c| (pn[c] - p0[c]) * nrm[c]).sum();
                            if to_neg > 0.0 {
                                t.swap(1, 2);
                            }
                        }
                        if t[0] != t[1] && t[1] != t[2] && t[0] != t[2] {
                            faces.push(t);
                        }
                    }
                }
            }
        }
    }
    let mut out = String::with_capacity(vertices.len() * 40 + faces.len() * 24);
    writeln!(out, "# vertices {} faces {}", vertices.len(), faces.len()).expect("string");
    for v in &vertices {
        writeln!(out, "v {:.9} {:.9} {:.9}", v[0], v[1], v[2]).expect("string");
    }
    for f in &faces {
        writeln!(out, "f {} {} {}", f[0] + 1, f[1] + 1, f[2] + 1).expect("string");
    }
    Ok(out)
}
