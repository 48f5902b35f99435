//! Partition experiments: how the P3P count changes across the danger
//! cylinder and its companion surface, the rank drop of the distance-to-cosine
//! Jacobian on the cylinder, and the square-root separation law near it.

use std::fmt::Write as _;

use nalgebra::Matrix3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::dd::{dd, to_f64};
use crate::error::{Error, Result};
use crate::geometry::{dc_value, ControlTriangle, Viewpoint};
use crate::solver::{self, triplet_distance, SolutionSet, TripletSolution};
use crate::stats::{log_log_fit, LineFit};
use crate::surface::{membership, MembershipLabel};
use crate::tolerance::Tolerances;

/// `|dc_value|` below which a crossing point is labeled as on the cylinder.
pub const DC_LABEL_TOL: f64 = 1e-6;
/// Membership tolerance used to confirm that probes are off both surfaces.
pub const PROBE_MEMBERSHIP_TOL: f64 = 1e-9;
/// Root clustering radius used when counting at probes. Double-double roots
/// are accurate far below the default radius, which lets probes sit close to
/// the crossing and away from neighbouring surfaces.
pub const PROBE_CLUSTER: f64 = 1e-10;
/// Probes need the roots separated by this much (relative) to count reliably.
pub const PROBE_ROOT_GAP: f64 = 100.0 * PROBE_CLUSTER;
/// Largest probe offset tried before giving up on a crossing.
pub const MAX_PROBE_OFFSET: f64 = 1e-2;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PathSpec {
    pub start: Viewpoint,
    pub end: Viewpoint,
    /// Uniform samples of the discriminant before refinement.
    pub samples: usize,
    /// Bisection stops once the bracket is this narrow in `t`.
    pub tolerance: f64,
}

impl PathSpec {
    pub fn new(start: Viewpoint, end: Viewpoint, samples: usize, tolerance: f64) -> Result<Self> {
        let p = Self {
            start,
            end,
            samples,
            tolerance,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.start.is_finite() && self.end.is_finite()) {
            return Err(Error::NonFinite("path endpoint"));
        }
        if self.start.distance(self.end) == 0.0 {
            return Err(Error::ConfigInvalid {
                field: "path".into(),
                message: "start and end coincide".into(),
            });
        }
        if self.samples < 2 {
            return Err(Error::InsufficientSamples {
                have: self.samples,
                need: 2,
            });
        }
        if !(self.tolerance > 0.0 && self.tolerance < 1.0) {
            return Err(Error::ConfigInvalid {
                field: "path.tolerance".into(),
                message: format!("must lie in (0, 1), got {}", self.tolerance),
            });
        }
        Ok(())
    }

    pub fn at(&self, t: f64) -> Viewpoint {
        self.start.lerp(self.end, t)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SurfaceHit {
    DC,
    CSDC,
    Both,
    /// Two non-P3P solutions merge; neither surface is involved.
    Other,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Counts {
    /// Distinct P3P solutions.
    pub collapsed: usize,
    pub with_multiplicity: usize,
    pub real_roots: usize,
    /// Real triplets, positive or not, with multiplicity.
    pub real_triplets: usize,
}

impl Counts {
    fn of(set: &SolutionSet, tol: &Tolerances) -> Self {
        Self {
            collapsed: set.p3p_count,
            with_multiplicity: set.p3p_count_with_multiplicity,
            real_roots: set.real_root_count,
            real_triplets: set
                .triplets
                .iter()
                .filter(|t| t.max_imag() <= tol.imag * (1.0 + t.norm()))
                .map(|t| t.multiplicity)
                .sum(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TracePoint {
    pub t: f64,
    pub discriminant: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrossingReport {
    pub t: f64,
    pub point: Viewpoint,
    pub hit: SurfaceHit,
    /// The discriminant touches zero without changing sign.
    pub tangential: bool,
    pub dc_value: f64,
    /// Real parts of the merging pair's mean triplet at the crossing.
    pub merging_triplet: Option<[f64; 3]>,
    pub before: Option<Counts>,
    pub after: Option<Counts>,
    /// `after.collapsed - before.collapsed`.
    pub delta: Option<i64>,
    pub delta_with_multiplicity: Option<i64>,
    /// Conjugate pairs that turn real or complex across the crossing.
    pub pair_transitions: Option<usize>,
    /// Probe offset in `t`; `None` when no offset up to the cap cleared the surface.
    pub probe_offset: Option<f64>,
    /// Bracketing samples and bisection iterates.
    pub trace: Vec<TracePoint>,
}

fn discriminant_at(tri: &ControlTriangle, o: Viewpoint) -> Result<f64> {
    Ok(solver::solve_viewpoint(tri, o)?.discriminant)
}

/// Discriminant sampled uniformly along the path.
pub fn discriminant_trace(tri: &ControlTriangle, path: &PathSpec) -> Result<Vec<TracePoint>> {
    path.validate()?;
    let n = path.samples;
    (0..n)
        .into_par_iter()
        .map(|i| {
            let t = i as f64 / (n - 1) as f64;
            Ok(TracePoint {
                t,
                discriminant: discriminant_at(tri, path.at(t))?,
            })
        })
        .collect()
}

/// Narrowest interval the adaptive trace will split.
pub const MIN_TRACE_STEP: f64 = 1e-7;

#[derive(Clone)]
struct Node {
    t: f64,
    disc: f64,
    roots: [Complex64; 4],
}

fn node(tri: &ControlTriangle, path: &PathSpec, t: f64) -> Result<Node> {
    let set = solver::solve_viewpoint(tri, path.at(t))?;
    Ok(Node {
        t,
        disc: set.discriminant,
        roots: set.raw_roots,
    })
}

/// Matching of `b` to `a` minimizing the largest displacement.
fn match_roots(a: &[Complex64; 4], b: &[Complex64; 4]) -> [Complex64; 4] {
    let mut best = (f64::INFINITY, *b);
    let mut perm = [0usize, 1, 2, 3];
    loop {
        let m = (0..4).map(|i| (a[i] - b[perm[i]]).norm()).fold(0.0, f64::max);
        if m < best.0 {
            best = (m, perm.map(|k| b[k]));
        }
        let Some(i) = (0..3).rev().find(|&i| perm[i] < perm[i + 1]) else {
            return best.1;
        };
        let j = (i + 1..4).rev().find(|&j| perm[j] > perm[i]).expect("exists");
        perm.swap(i, j);
        perm[i + 1..].reverse();
    }
}

/// Whether two roots could meet between `a` and `b`: some pair difference
/// moves by more than its distance from zero along the segment.
fn may_collide(a: &[Complex64; 4], b: &[Complex64; 4]) -> bool {
    let b = match_roots(a, b);
    (0..4).any(|i| {
        (i + 1..4).any(|j| {
            let (p, q) = (a[i] - a[j], b[i] - b[j]);
            let d = q - p;
            let len2 = d.norm_sqr();
            let s = if len2 > 0.0 { (-(p.re * d.re + p.im * d.im) / len2).clamp(0.0, 1.0) } else { 0.0 };
            (p + d * s).norm() < 2.0 * len2.sqrt()
        })
    })
}

/// Refinement budget per initial interval.
const MAX_REFINE: usize = 4096;

fn refine(
    tri: &ControlTriangle,
    path: &PathSpec,
    a: Node,
    b: Node,
    out: &mut Vec<TracePoint>,
    budget: &mut usize,
) -> Result<()> {
    if *budget == 0 || b.t - a.t <= MIN_TRACE_STEP || !may_collide(&a.roots, &b.roots) {
        out.push(TracePoint {
            t: a.t,
            discriminant: a.disc,
        });
        return Ok(());
    }
    *budget -= 1;
    let mid = node(tri, path, 0.5 * (a.t + b.t))?;
    refine(tri, path, a, mid.clone(), out, budget)?;
    refine(tri, path, mid, b, out, budget)
}

/// Discriminant along the path, with intervals split while two roots could
/// meet inside them. Thin regions between two close crossings are resolved
/// down to [`MIN_TRACE_STEP`].
pub fn adaptive_trace(tri: &ControlTriangle, path: &PathSpec) -> Result<Vec<TracePoint>> {
    path.validate()?;
    let n = path.samples;
    let pieces: Vec<Vec<TracePoint>> = (0..n - 1)
        .into_par_iter()
        .map(|i| {
            let (t0, t1) = (i as f64 / (n - 1) as f64, (i + 1) as f64 / (n - 1) as f64);
            let mut out = Vec::new();
            let mut budget = MAX_REFINE;
            refine(tri, path, node(tri, path, t0)?, node(tri, path, t1)?, &mut out, &mut budget)?;
            Ok(out)
        })
        .collect::<Result<_>>()?;
    let mut trace: Vec<TracePoint> = pieces.into_iter().flatten().collect();
    trace.push(TracePoint {
        t: 1.0,
        discriminant: discriminant_at(tri, path.end)?,
    });
    Ok(trace)
}

fn bisect(
    mut lo: f64,
    mut hi: f64,
    tol: f64,
    f: impl Fn(f64) -> Result<f64>,
    trace: &mut Vec<TracePoint>,
) -> Result<f64> {
    let s_lo = f(lo)?.signum();
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        let v = f(mid)?;
        trace.push(TracePoint {
            t: mid,
            discriminant: v,
        });
        if v == 0.0 {
            return Ok(mid);
        }
        if v.signum() == s_lo {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Golden-section minimization of `|f|` on `[lo, hi]`.
fn minimize_abs(mut lo: f64, mut hi: f64, tol: f64, f: impl Fn(f64) -> Result<f64>) -> Result<(f64, f64)> {
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let mut a = hi - g * (hi - lo);
    let mut b = lo + g * (hi - lo);
    let mut fa = f(a)?.abs();
    let mut fb = f(b)?.abs();
    while hi - lo > tol {
        if fa < fb {
            hi = b;
            b = a;
            fb = fa;
            a = hi - g * (hi - lo);
            fa = f(a)?.abs();
        } else {
            lo = a;
            a = b;
            fa = fb;
            b = lo + g * (hi - lo);
            fb = f(b)?.abs();
        }
    }
    let t = 0.5 * (lo + hi);
    Ok((t, f(t)?))
}

/// Smallest gap between raw quartic roots, relative to `1 + |r|`.
fn min_root_gap(set: &SolutionSet) -> f64 {
    let r = &set.raw_roots;
    let mut gap = f64::INFINITY;
    for i in 0..4 {
        for j in i + 1..4 {
            let scale = 1.0 + r[i].norm().max(r[j].norm());
            gap = gap.min((r[i] - r[j]).norm() / scale);
        }
    }
    gap
}

/// Real parts of the mean triplet of the closest root pair, if that mean is
/// (nearly) real.
fn merging_triplet(tri: &ControlTriangle, o: Viewpoint) -> Result<Option<[f64; 3]>> {
    let set = solver::solve_viewpoint(tri, o)?;
    let ang = tri.angles_from_viewpoint(o)?;
    let r = &set.raw_roots;
    let mut best = (f64::INFINITY, 0, 1);
    for i in 0..4 {
        for j in i + 1..4 {
            let d = (r[i] - r[j]).norm();
            if d < best.0 {
                best = (d, i, j);
            }
        }
    }
    let mean = 0.5 * (r[best.1] + r[best.2]);
    if mean.im.abs() > 1e-4 * (1.0 + mean.norm()) {
        return Ok(None);
    }
    let mean = Complex64::new(mean.re, 0.0);
    let Some(s) = solver::back_substitute(tri, &ang, mean).into_iter().next() else {
        return Ok(None);
    };
    let scale = s.iter().map(|v| v.norm()).fold(1.0, f64::max);
    if s.iter().any(|v| v.im.abs() > 1e-4 * scale) {
        return Ok(None);
    }
    Ok(Some(s.map(|v| v.re)))
}

fn label(tri: &ControlTriangle, o: Viewpoint, on_dc: bool) -> Result<(SurfaceHit, Option<[f64; 3]>)> {
    let pair = merging_triplet(tri, o)?;
    let positive = pair.is_some_and(|s| s.iter().all(|v| *v > 0.0));
    // On the cylinder the merging pair is the viewpoint's own solution, so it
    // only signals the companion surface when it trilaterates elsewhere.
    let companion = positive
        && pair.is_some_and(|s| {
            tri.centers_from_distances(s)
                .iter()
                .all(|c| c.distance(o) > 1e-4 && c.distance(o.mirrored()) > 1e-4)
        });
    let hit = match (on_dc, positive, companion) {
        (true, _, true) => SurfaceHit::Both,
        (true, _, false) => SurfaceHit::DC,
        (false, true, _) => SurfaceHit::CSDC,
        (false, false, _) => SurfaceHit::Other,
    };
    Ok((hit, pair))
}

struct Probe {
    offset: f64,
    before: Counts,
    after: Counts,
}

fn probe(tri: &ControlTriangle, path: &PathSpec, t: f64) -> Result<Option<Probe>> {
    let tol = Tolerances {
        cluster: PROBE_CLUSTER,
        ..Tolerances::default()
    };
    let mut offset = 10.0 * path.tolerance;
    while offset <= MAX_PROBE_OFFSET {
        let (t0, t1) = (t - offset, t + offset);
        if t0 < 0.0 || t1 > 1.0 {
            return Ok(None);
        }
        let sides = [path.at(t0), path.at(t1)];
        let mut ok = true;
        let mut counts = Vec::with_capacity(2);
        for o in sides {
            let set = solver::solve_viewpoint_with(tri, o, &tol)?;
            let off = membership(tri, o, PROBE_MEMBERSHIP_TOL)?.label == MembershipLabel::Off;
            if !off || min_root_gap(&set) < PROBE_ROOT_GAP {
                ok = false;
                break;
            }
            counts.push(Counts::of(&set, &tol));
        }
        if ok {
            return Ok(Some(Probe {
                offset,
                before: counts[0],
                after: counts[1],
            }));
        }
        offset *= 4.0;
    }
    Ok(None)
}

fn report(
    tri: &ControlTriangle,
    path: &PathSpec,
    t: f64,
    tangential: bool,
    on_dc: bool,
    trace: Vec<TracePoint>,
) -> Result<CrossingReport> {
    let point = path.at(t);
    let (hit, merging) = label(tri, point, on_dc)?;
    let pr = probe(tri, path, t)?;
    let diff = |a: usize, b: usize| b as i64 - a as i64;
    Ok(CrossingReport {
        t,
        point,
        hit,
        tangential,
        dc_value: dc_value(point),
        merging_triplet: merging,
        before: pr.as_ref().map(|p| p.before),
        after: pr.as_ref().map(|p| p.after),
        delta: pr.as_ref().map(|p| diff(p.before.collapsed, p.after.collapsed)),
        delta_with_multiplicity: pr
            .as_ref()
            .map(|p| diff(p.before.with_multiplicity, p.after.with_multiplicity)),
        pair_transitions: pr
            .as_ref()
            .map(|p| p.before.real_triplets.abs_diff(p.after.real_triplets) / 2),
        probe_offset: pr.map(|p| p.offset),
        trace,
    })
}

/// Every crossing of the partition surfaces along `path`, in order of `t`.
///
/// Discriminant sign changes are bisected and labeled by `dc_value` and by the
/// merging pair. Cylinder crossings leave the discriminant's sign unchanged,
/// so they are bracketed on `dc_value`, which is explicit along the path.
/// Other near-zero minima of the discriminant are reported as tangential.
pub fn detect_crossings(tri: &ControlTriangle, path: &PathSpec) -> Result<Vec<CrossingReport>> {
    path.validate()?;
    for (i, o) in [path.start, path.end].into_iter().enumerate() {
        if membership(tri, o, PROBE_MEMBERSHIP_TOL)?.label != MembershipLabel::Off {
            return Err(Error::EndpointOnSurface(i));
        }
    }
    let trace = adaptive_trace(tri, path)?;
    let disc = |t: f64| discriminant_at(tri, path.at(t));
    let dcf = |t: f64| Ok(dc_value(path.at(t)));
    let mut out = Vec::new();

    for w in trace.windows(2) {
        let (a, b) = (w[0], w[1]);
        if a.discriminant.signum() == b.discriminant.signum() || a.discriminant == 0.0 {
            continue;
        }
        let mut local = vec![a, b];
        let t = bisect(a.t, b.t, path.tolerance, disc, &mut local)?;
        let on_dc = dc_value(path.at(t)).abs() <= DC_LABEL_TOL;
        out.push(report(tri, path, t, false, on_dc, local)?);
    }

    let n = path.samples;
    for i in 0..n - 1 {
        let (t0, t1) = (i as f64 / (n - 1) as f64, (i + 1) as f64 / (n - 1) as f64);
        let (d0, d1) = (dc_value(path.at(t0)), dc_value(path.at(t1)));
        if d0.signum() == d1.signum() || d0 == 0.0 {
            continue;
        }
        let mut local = Vec::new();
        let t = bisect(t0, t1, path.tolerance, dcf, &mut local)?;
        let local = local
            .iter()
            .map(|p| Ok(TracePoint {
                t: p.t,
                discriminant: disc(p.t)?,
            }))
            .collect::<Result<Vec<_>>>()?;
        if out.iter().any(|r| (r.t - t).abs() <= 10.0 * path.tolerance) {
            continue;
        }
        out.push(report(tri, path, t, true, true, local)?);
    }

    for i in 1..trace.len() - 1 {
        let (a, b, c) = (trace[i - 1], trace[i], trace[i + 1]);
        let same = a.discriminant.signum() == b.discriminant.signum()
            && b.discriminant.signum() == c.discriminant.signum();
        let dip = b.discriminant.abs() < a.discriminant.abs() && b.discriminant.abs() <= c.discriminant.abs();
        if !(same && dip) {
            continue;
        }
        let (t, v) = minimize_abs(a.t, c.t, path.tolerance, disc)?;
        if v != 0.0 && v.signum() != b.discriminant.signum() {
            // Two sign changes between neighbouring samples.
            for (lo, hi) in [(a.t, t), (t, c.t)] {
                let mut local = vec![a, b, c];
                let tc = bisect(lo, hi, path.tolerance, disc, &mut local)?;
                if out.iter().any(|r| (r.t - tc).abs() <= 10.0 * path.tolerance) {
                    continue;
                }
                let on_dc = dc_value(path.at(tc)).abs() <= DC_LABEL_TOL;
                out.push(report(tri, path, tc, false, on_dc, local)?);
            }
            continue;
        }
        let reference = a.discriminant.abs().max(c.discriminant.abs());
        if v.abs() > 1e-12 * reference {
            continue;
        }
        if out.iter().any(|r| (r.t - t).abs() <= 1e3 * path.tolerance) {
            continue;
        }
        let on_dc = dc_value(path.at(t)).abs() <= DC_LABEL_TOL;
        out.push(report(tri, path, t, true, on_dc, vec![a, b, c])?);
    }

    out.sort_by(|p, q| p.t.total_cmp(&q.t));
    Ok(out)
}

/// A planar grid `origin + i/(nu-1) u + j/(nv-1) v`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Slice {
    pub origin: [f64; 3],
    pub u: [f64; 3],
    pub v: [f64; 3],
    pub nu: usize,
    pub nv: usize,
}

/// Largest grid side accepted by [`count_map`].
pub const MAX_GRID: usize = 2048;

impl Slice {
    /// Square `[-h, h]²` at height `z`.
    pub fn horizontal(z: f64, half_width: f64, n: usize) -> Self {
        Self {
            origin: [-half_width, -half_width, z],
            u: [2.0 * half_width, 0.0, 0.0],
            v: [0.0, 2.0 * half_width, 0.0],
            nu: n,
            nv: n,
        }
    }

    pub fn node(&self, i: usize, j: usize) -> Viewpoint {
        let f = |k: usize, n: usize| if n > 1 { k as f64 / (n - 1) as f64 } else { 0.0 };
        let (a, b) = (f(i, self.nu), f(j, self.nv));
        Viewpoint::new(
            self.origin[0] + a * self.u[0] + b * self.v[0],
            self.origin[1] + a * self.u[1] + b * self.v[1],
            self.origin[2] + a * self.u[2] + b * self.v[2],
        )
    }
}

/// Gray level of an unsolvable node.
pub const ERROR_GRAY: u8 = 32;
/// Gray level per P3P count `0..=4`.
pub const COUNT_GRAY: [u8; 5] = [0, 64, 128, 192, 255];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CountMap {
    pub slice: Slice,
    /// Row-major in `j`, `None` where the instance could not be solved.
    pub counts: Vec<Option<u8>>,
}

impl CountMap {
    pub fn get(&self, i: usize, j: usize) -> Option<u8> {
        self.counts[j * self.slice.nu + i]
    }

    pub fn csv(&self) -> String {
        let mut s = String::from("i,j,x,y,z,count\n");
        for j in 0..self.slice.nv {
            for i in 0..self.slice.nu {
                let o = self.slice.node(i, j);
                let c = self.get(i, j).map_or(String::from("-1"), |c| c.to_string());
                let _ = writeln!(s, "{i},{j},{},{},{},{c}", o.x, o.y, o.z);
            }
        }
        s
    }

    /// Binary P5, one byte per node, rows in increasing `j`.
    pub fn pgm(&self) -> Vec<u8> {
        let mut out = format!("P5\n{} {}\n255\n", self.slice.nu, self.slice.nv).into_bytes();
        out.extend(self.counts.iter().map(|c| match c {
            Some(k) => COUNT_GRAY[(*k as usize).min(4)],
            None => ERROR_GRAY,
        }));
        out
    }

    /// Nodes whose count differs from a 4-neighbour.
    pub fn boundary_nodes(&self) -> Vec<(usize, usize)> {
        let (nu, nv) = (self.slice.nu, self.slice.nv);
        let mut out = Vec::new();
        for j in 0..nv {
            for i in 0..nu {
                let Some(c) = self.get(i, j) else { continue };
                let differs = [(1i64, 0i64), (0, 1), (-1, 0), (0, -1)].iter().any(|(di, dj)| {
                    let (a, b) = (i as i64 + di, j as i64 + dj);
                    a >= 0
                        && b >= 0
                        && (a as usize) < nu
                        && (b as usize) < nv
                        && self.get(a as usize, b as usize).is_some_and(|d| d != c)
                });
                if differs {
                    out.push((i, j));
                }
            }
        }
        out
    }
}

pub fn count_map(tri: &ControlTriangle, slice: Slice) -> Result<CountMap> {
    if slice.nu == 0 || slice.nv == 0 || slice.nu > MAX_GRID || slice.nv > MAX_GRID {
        return Err(Error::ConfigInvalid {
            field: "slice".into(),
            message: format!("grid {}x{} outside 1..={MAX_GRID}", slice.nu, slice.nv),
        });
    }
    let counts = (0..slice.nu * slice.nv)
        .into_par_iter()
        .map(|k| {
            let o = slice.node(k % slice.nu, k / slice.nu);
            solver::count_p3p(tri, o).ok().map(|c| c as u8)
        })
        .collect();
    Ok(CountMap { slice, counts })
}

/// Scalar fields whose sign changes can move the P3P count: the
/// discriminant, the cylinder, and the three tori on which one solution
/// passes through a control point (`cos α(O) = cos A` and so on).
fn boundary_fields(tri: &ControlTriangle, o: Viewpoint) -> Option<[f64; 5]> {
    let ang = tri.angles_from_viewpoint(o).ok()?;
    let set = solver::solve_viewpoint(tri, o).ok()?;
    let [a, b, c] = tri.sides;
    let corner = |p: f64, q: f64, opp: f64| (p * p + q * q - opp * opp) / (2.0 * p * q);
    Some([
        set.discriminant,
        dc_value(o),
        ang.cos_alpha - corner(b, c, a),
        ang.cos_beta - corner(a, c, b),
        ang.cos_gamma - corner(a, b, c),
    ])
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundaryCheck {
    pub boundary_nodes: usize,
    pub probes: usize,
    pub explained: usize,
    pub radius_cells: usize,
    pub unexplained: Vec<(usize, usize)>,
}

/// Checks that count boundaries sit within `radius` cells of a sign change of
/// one of the boundary fields, on `probes` seeded boundary nodes.
pub fn boundary_check(
    tri: &ControlTriangle,
    map: &CountMap,
    probes: usize,
    radius: usize,
    seed: u64,
) -> BoundaryCheck {
    let nodes = map.boundary_nodes();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let picks: Vec<(usize, usize)> = if nodes.len() <= probes {
        nodes.clone()
    } else {
        rand::seq::index::sample(&mut rng, nodes.len(), probes)
            .into_iter()
            .map(|k| nodes[k])
            .collect()
    };
    let (nu, nv) = (map.slice.nu, map.slice.nv);
    let explained: Vec<bool> = picks
        .par_iter()
        .map(|&(i, j)| {
            let (i0, i1) = (i.saturating_sub(radius), (i + radius).min(nu - 1));
            let (j0, j1) = (j.saturating_sub(radius), (j + radius).min(nv - 1));
            let w = i1 - i0 + 1;
            let fields: Vec<Option<[f64; 5]>> = (j0..=j1)
                .flat_map(|b| (i0..=i1).map(move |a| (a, b)))
                .map(|(a, b)| boundary_fields(tri, map.slice.node(a, b)))
                .collect();
            let flips = |p: &Option<[f64; 5]>, q: &Option<[f64; 5]>| match (p, q) {
                (Some(p), Some(q)) => (0..5).any(|k| p[k].signum() != q[k].signum()),
                _ => true,
            };
            (0..fields.len()).any(|k| {
                let right = (k % w + 1 < w) && flips(&fields[k], &fields[k + 1]);
                let down = k + w < fields.len() && flips(&fields[k], &fields[k + w]);
                right || down
            })
        })
        .collect();
    BoundaryCheck {
        boundary_nodes: nodes.len(),
        probes: picks.len(),
        explained: explained.iter().filter(|e| **e).count(),
        radius_cells: radius,
        unexplained: picks
            .iter()
            .zip(&explained)
            .filter(|(_, e)| !**e)
            .map(|(p, _)| *p)
            .collect(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JacobianAnalysis {
    /// Distances the matrix was built from.
    pub s: [f64; 3],
    /// `cos α, cos β, cos γ`.
    pub cos: [f64; 3],
    /// Rows `∂(cos α, cos β, cos γ) / ∂(s1, s2, s3)`.
    pub j: [[f64; 3]; 3],
    /// `λ11 ≥ λ21 ≥ λ31`.
    pub singular_values: [f64; 3],
    /// `λ31 / λ11`.
    pub ratio: f64,
    /// Left singular vector of `λ31`, in cosine space.
    pub u31: [f64; 3],
    /// Right singular vector of `λ31`, in distance space.
    pub v31: [f64; 3],
}

/// Derivatives of the three cosines with respect to the distances.
pub fn jacobian_from(s: [f64; 3], cos: [f64; 3]) -> JacobianAnalysis {
    let [s1, s2, s3] = s;
    let [ca, cb, cg] = cos;
    let rows = [
        [0.0, (s2 - s3 * ca) / (s2 * s3), (s3 - s2 * ca) / (s2 * s3)],
        [(s1 - s3 * cb) / (s1 * s3), 0.0, (s3 - s1 * cb) / (s1 * s3)],
        [(s1 - s2 * cg) / (s1 * s2), (s2 - s1 * cg) / (s1 * s2), 0.0],
    ];
    let m = Matrix3::from_fn(|r, c| rows[r][c]);
    let svd = m.svd(true, true);
    let u = svd.u.expect("requested");
    let vt = svd.v_t.expect("requested");
    let mut order = [0usize, 1, 2];
    order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));
    let sv = order.map(|k| svd.singular_values[k]);
    let k = order[2];
    JacobianAnalysis {
        s,
        cos,
        j: rows,
        singular_values: sv,
        ratio: if sv[0] > 0.0 { sv[2] / sv[0] } else { f64::NAN },
        u31: [u[(0, k)], u[(1, k)], u[(2, k)]],
        v31: [vt[(k, 0)], vt[(k, 1)], vt[(k, 2)]],
    }
}

/// Jacobian at the solver's triplet for `o`.
pub fn jacobian_analysis(tri: &ControlTriangle, o: Viewpoint) -> Result<JacobianAnalysis> {
    let ang = tri.angles_from_viewpoint(o)?;
    let set = solver::solve_viewpoint(tri, o)?;
    let own = set
        .closest(tri.distances(o))
        .ok_or(Error::EmptyInput("solution set"))?;
    Ok(jacobian_from(own.real_parts(), ang.as_array()))
}

/// Perturbation magnitudes `1e-2, 1e-3, ..., 1e-7`.
pub fn default_epsilons() -> Vec<f64> {
    (2..=7).map(|k| 10f64.powi(-k)).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldReport {
    pub viewpoint: Viewpoint,
    /// Unit perturbation direction in cosine space.
    pub direction: [f64; 3],
    /// Component of `direction` along `u31`.
    pub fold_component: f64,
    pub eps: Vec<f64>,
    /// Distance in C³ between the two solutions that merge at `eps = 0`.
    pub separation: Vec<f64>,
    /// Largest `|Im|` over the pair.
    pub imag: Vec<f64>,
    pub pair_real: bool,
    pub fit: Option<LineFit>,
    /// Slope of `log |Im|` against `log eps` when the pair is complex.
    pub imag_fit: Option<LineFit>,
}

impl FoldReport {
    pub fn exponent(&self) -> Option<f64> {
        self.fit.map(|f| f.slope)
    }

    pub fn imag_exponent(&self) -> Option<f64> {
        self.imag_fit.map(|f| f.slope)
    }
}

fn nearest_pair(set: &SolutionSet, s0: [f64; 3]) -> Option<(TripletSolution, TripletSolution)> {
    let target = s0.map(|v| Complex64::new(v, 0.0));
    let mut ts: Vec<&TripletSolution> = set.triplets.iter().collect();
    ts.sort_by(|a, b| triplet_distance(&a.s, &target).total_cmp(&triplet_distance(&b.s, &target)));
    match ts.as_slice() {
        [a, ..] if a.multiplicity >= 2 => Some(((*a).clone(), (*a).clone())),
        [a, b, ..] => Some(((*a).clone(), (*b).clone())),
        _ => None,
    }
}

/// Separation of the merging pair under `cos(O_d) + eps * direction`.
///
/// `Err(PairNotReal)` carries the report for a direction that sends the pair
/// into the complex plane; the opposite direction gives the real branch.
pub fn fold_scaling(
    tri: &ControlTriangle,
    o_d: Viewpoint,
    direction: [f64; 3],
    eps: &[f64],
) -> Result<FoldReport> {
    let dcv = dc_value(o_d);
    if !(dcv.abs() <= 1e-10) {
        return Err(Error::NotOnDangerCylinder(dcv));
    }
    if eps.len() < 2 || eps.windows(2).any(|w| !(w[1] < w[0] && w[1] > 0.0)) {
        return Err(Error::ConfigInvalid {
            field: "eps".into(),
            message: "need at least two strictly decreasing positive values".into(),
        });
    }
    let norm = direction.iter().map(|v| v * v).sum::<f64>().sqrt();
    if !(norm.is_finite() && norm > 0.0) {
        return Err(Error::NonFinite("fold direction"));
    }
    let dir = direction.map(|v| v / norm);
    let tol = Tolerances::default();
    let theta = o_d.y.atan2(o_d.x);
    let p = solver::precise_cylinder_point(theta, o_d.z);
    let cos0 = solver::precise_angles_at(tri, p, &tol)?;
    let s0 = solver::precise_distances(tri, p).map(to_f64);
    let jac = jacobian_from(s0, cos0.map(to_f64));
    let fold_component = (0..3).map(|k| dir[k] * jac.u31[k]).sum::<f64>();

    let mut separation = Vec::with_capacity(eps.len());
    let mut imag = Vec::with_capacity(eps.len());
    for &e in eps {
        let cos = [0, 1, 2].map(|k| cos0[k] + dd(e) * dir[k]);
        let set = solver::solve_precise(tri, cos, &tol)?;
        let (a, b) = nearest_pair(&set, s0).ok_or(Error::NoDoubleSolution)?;
        separation.push(triplet_distance(&a.s, &b.s));
        imag.push(a.max_imag().max(b.max_imag()));
    }
    let scale = s0.iter().map(|v| v * v).sum::<f64>().sqrt();
    let complex = |v: &f64| *v > 1e-9 * (1.0 + scale);
    // The branch is decided at the smallest eps. Far from the fold the real
    // pair can meet a third solution and leave the real line.
    let pair_real = !complex(imag.last().expect("at least two eps"));
    let (ce, ci): (Vec<f64>, Vec<f64>) = eps.iter().zip(&imag).filter(|(_, v)| complex(v)).unzip();
    let report = FoldReport {
        viewpoint: o_d,
        direction: dir,
        fold_component,
        eps: eps.to_vec(),
        fit: log_log_fit(eps, &separation),
        imag_fit: if pair_real { None } else { log_log_fit(&ce, &ci) },
        separation,
        imag,
        pair_real,
    };
    if pair_real {
        Ok(report)
    } else {
        Err(Error::PairNotReal(Box::new(report)))
    }
}

/// Runs `direction`, and on a complex pair also its negation.
///
/// Returns `(real branch, complex branch)`.
pub fn fold_both_branches(
    tri: &ControlTriangle,
    o_d: Viewpoint,
    direction: [f64; 3],
    eps: &[f64],
) -> Result<(FoldReport, Option<FoldReport>)> {
    match fold_scaling(tri, o_d, direction, eps) {
        Ok(real) => match fold_scaling(tri, o_d, direction.map(|v| -v), eps) {
            Ok(_) => Ok((real, None)),
            Err(Error::PairNotReal(c)) => Ok((real, Some(*c))),
            Err(e) => Err(e),
        },
        Err(Error::PairNotReal(c)) => {
            let real = fold_scaling(tri, o_d, direction.map(|v| -v), eps)?;
            Ok((real, Some(*c)))
        }
        Err(e) => Err(e),
    }
}

/// A direction orthogonal to `u31`: the first-order response stays on the
/// fold, so the separation grows linearly instead of as a square root.
pub fn regular_direction(tri: &ControlTriangle, o_d: Viewpoint, seed: [f64; 3]) -> Result<[f64; 3]> {
    let jac = jacobian_analysis(tri, o_d)?;
    let along = (0..3).map(|k| seed[k] * jac.u31[k]).sum::<f64>();
    Ok([0, 1, 2].map(|k| seed[k] - along * jac.u31[k]))
}

/// A path through a sampled companion point, which sits at `t = 0.5`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CsdcPath {
    pub path: PathSpec,
    pub source: Viewpoint,
    pub companion: Viewpoint,
}

fn unit_vector(rng: &mut ChaCha8Rng) -> [f64; 3] {
    loop {
        let v: [f64; 3] = [0, 1, 2].map(|_| rng.gen_range(-1.0..1.0));
        let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if n > 1e-3 && n <= 1.0 {
            return v.map(|x| x / n);
        }
    }
}

/// Straight paths of length `2 * half_length` in random directions through
/// companion points of random cylinder sources with `z0` in `z_range`.
pub fn random_csdc_paths(
    tri: &ControlTriangle,
    count: usize,
    half_length: f64,
    z_range: (f64, f64),
    seed: u64,
) -> Result<Vec<CsdcPath>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(count);
    let mut attempts = 0usize;
    while out.len() < count {
        attempts += 1;
        if attempts > 100 * count + 1000 {
            return Err(Error::InsufficientSamples {
                have: out.len(),
                need: count,
            });
        }
        let theta = rng.gen_range(0.0..std::f64::consts::TAU);
        let z0 = rng.gen_range(z_range.0..z_range.1);
        let pick = rng.gen_range(0..2usize);
        let d = unit_vector(&mut rng);
        let Ok(samples) = crate::surface::sweep_point(tri, theta, z0) else {
            continue;
        };
        let Some(sample) = samples.get(pick.min(samples.len().saturating_sub(1))) else {
            continue;
        };
        let c = sample.companion;
        let end = |s: f64| Viewpoint::new(c.x + s * d[0], c.y + s * d[1], c.z + s * d[2]);
        let Ok(path) = PathSpec::new(end(-half_length), end(half_length), 64, 1e-10) else {
            continue;
        };
        let clear = [path.start, path.end].iter().all(|o| {
            membership(tri, *o, PROBE_MEMBERSHIP_TOL).is_ok_and(|m| m.label == MembershipLabel::Off)
        });
        if clear {
            out.push(CsdcPath {
                path,
                source: sample.source,
                companion: c,
            });
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FoldCase {
    pub theta: f64,
    pub z0: f64,
    pub direction: [f64; 3],
}

impl FoldCase {
    pub fn viewpoint(&self) -> Viewpoint {
        Viewpoint::on_cylinder(self.theta, self.z0)
    }
}

/// Random cylinder points with unit directions whose component along `u31`
/// is at least `min_fold_component` in magnitude.
pub fn random_fold_cases(
    tri: &ControlTriangle,
    count: usize,
    z_range: (f64, f64),
    min_fold_component: f64,
    seed: u64,
) -> Result<Vec<FoldCase>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let theta = rng.gen_range(0.0..std::f64::consts::TAU);
        let z0 = rng.gen_range(z_range.0..z_range.1);
        let jac = jacobian_analysis(tri, Viewpoint::on_cylinder(theta, z0))?;
        let direction = loop {
            let d = unit_vector(&mut rng);
            if (0..3).map(|k| d[k] * jac.u31[k]).sum::<f64>().abs() >= min_fold_component {
                break d;
            }
        };
        out.push(FoldCase { theta, z0, direction });
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankSample {
    pub viewpoint: Viewpoint,
    pub dc_value: f64,
    pub analysis: JacobianAnalysis,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankSurvey {
    pub on_dc: Vec<RankSample>,
    pub off_dc: Vec<RankSample>,
    pub max_ratio_on_dc: f64,
    pub min_ratio_off_dc: f64,
}

/// `λ31/λ11` at random cylinder points and at random points with
/// `|dc_value| >= off_clearance`.
pub fn rank_survey(
    tri: &ControlTriangle,
    on_count: usize,
    off_count: usize,
    off_clearance: f64,
    seed: u64,
) -> Result<RankSurvey> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let on: Vec<Viewpoint> = (0..on_count)
        .map(|_| Viewpoint::on_cylinder(rng.gen_range(0.0..std::f64::consts::TAU), rng.gen_range(0.2..3.0)))
        .collect();
    let mut off = Vec::with_capacity(off_count);
    while off.len() < off_count {
        let o = Viewpoint::new(rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0), rng.gen_range(0.2..3.0));
        if dc_value(o).abs() >= off_clearance {
            off.push(o);
        }
    }
    let run = |pts: &[Viewpoint]| -> Result<Vec<RankSample>> {
        pts.par_iter()
            .map(|&o| {
                Ok(RankSample {
                    viewpoint: o,
                    dc_value: dc_value(o),
                    analysis: jacobian_analysis(tri, o)?,
                })
            })
            .collect()
    };
    let on_dc = run(&on)?;
    let off_dc = run(&off)?;
    Ok(RankSurvey {
        max_ratio_on_dc: on_dc.iter().map(|r| r.analysis.ratio).fold(0.0, f64::max),
        min_ratio_off_dc: off_dc.iter().map(|r| r.analysis.ratio).fold(f64::INFINITY, f64::min),
        on_dc,
        off_dc,
    })
}

/// `λ31/λ11` at `((1 + d) cos θ, (1 + d) sin θ, z)` for each offset `d`, with
/// the log-log slope against `d`.
pub fn radial_rank_profile(
    tri: &ControlTriangle,
    theta: f64,
    z: f64,
    offsets: &[f64],
) -> Result<(Vec<f64>, Option<LineFit>)> {
    let ratios = offsets
        .iter()
        .map(|d| {
            let r = 1.0 + d;
            Ok(jacobian_analysis(tri, Viewpoint::new(r * theta.cos(), r * theta.sin(), z))?.ratio)
        })
        .collect::<Result<Vec<_>>>()?;
    let fit = log_log_fit(offsets, &ratios);
    Ok((ratios, fit))
}
