//! Exact solution of the law-of-cosines system
//!
//! ```text
//! s1² + s2² - 2 cosγ s1 s2 = c²
//! s1² + s3² - 2 cosβ s1 s3 = b²
//! s2² + s3² - 2 cosα s2 s3 = a²
//! ```
//!
//! through Grunert's substitution `s2 = u s1`, `s3 = v s1`. Equating the three
//! expressions for `s1²` gives two quadrics in `u`; their sum is linear in `u`,
//! so `u` is eliminated and a quartic in `v` remains.

use num_complex::Complex64;
use num_traits::{Float, Zero};
use serde::{Deserialize, Serialize};

use crate::dd::{self, c_from, c_to_f64, cabs, dd, real, to_f64, Cdd, Dd};
use crate::error::{Error, Result};
use crate::geometry::{AngleTriple, ControlTriangle, Viewpoint};
use crate::poly::univariate;
use crate::tolerance::Tolerances;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Classification {
    P3P,
    NonP3P,
}

/// One solution of the cosine system, stored with `Re(s1) >= 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TripletSolution {
    pub s: [Complex64; 3],
    pub multiplicity: usize,
    pub classification: Classification,
    /// The quartic root `v = s3 / s1` this triplet came from.
    pub v: Complex64,
    /// Max relative residual of the three equations.
    pub residual: f64,
}

impl TripletSolution {
    pub fn is_p3p(&self) -> bool {
        self.classification == Classification::P3P
    }

    pub fn real_parts(&self) -> [f64; 3] {
        self.s.map(|c| c.re)
    }

    pub fn max_imag(&self) -> f64 {
        self.s.iter().map(|c| c.im.abs()).fold(0.0, f64::max)
    }

    pub fn norm(&self) -> f64 {
        self.s.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Distance to another triplet in C³.
    pub fn distance(&self, other: &TripletSolution) -> f64 {
        triplet_distance(&self.s, &other.s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuarticRoot {
    pub value: Complex64,
    pub multiplicity: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolutionSet {
    /// Grunert quartic, ascending powers of `v`.
    pub coefficients: [f64; 5],
    /// Root clusters with multiplicity.
    pub roots: Vec<QuarticRoot>,
    /// The four polished roots before clustering.
    pub raw_roots: [Complex64; 4],
    pub triplets: Vec<TripletSolution>,
    /// Discriminant of the unit-norm quartic.
    pub discriminant: f64,
    /// Distinct P3P triplets; a double P3P solution counts once.
    pub p3p_count: usize,
    /// P3P triplets counted with multiplicity.
    pub p3p_count_with_multiplicity: usize,
    /// Number of real raw roots.
    pub real_root_count: usize,
}

impl SolutionSet {
    pub fn p3p(&self) -> impl Iterator<Item = &TripletSolution> {
        self.triplets.iter().filter(|t| t.is_p3p())
    }

    /// Triplet closest to the given distance vector.
    pub fn closest(&self, s: [f64; 3]) -> Option<&TripletSolution> {
        let target = s.map(|v| Complex64::new(v, 0.0));
        self.triplets.iter().min_by(|a, b| {
            triplet_distance(&a.s, &target).total_cmp(&triplet_distance(&b.s, &target))
        })
    }

    pub fn double(&self) -> Option<&TripletSolution> {
        self.triplets.iter().find(|t| t.multiplicity >= 2)
    }
}

/// Distance in C³ between two triplets, modulo the global sign.
pub fn triplet_distance(a: &[Complex64; 3], b: &[Complex64; 3]) -> f64 {
    let d = |sign: f64| {
        (0..3)
            .map(|i| (a[i] - b[i] * sign).norm_sqr())
            .sum::<f64>()
            .sqrt()
    };
    d(1.0).min(d(-1.0))
}

/// Instance data carried in double-double.
#[derive(Debug, Clone, Copy)]
struct Instance {
    /// `a, b, c`.
    sides: [Dd; 3],
    /// `cos α, cos β, cos γ`.
    cos: [Dd; 3],
}

impl Instance {
    fn new(tri: &ControlTriangle, cos: [Dd; 3]) -> Self {
        let p = unit_points(tri);
        let side = |j: usize, k: usize| {
            let dx = p[j][0] - p[k][0];
            let dy = p[j][1] - p[k][1];
            (dx * dx + dy * dy).sqrt()
        };
        Self {
            sides: [side(1, 2), side(0, 2), side(0, 1)],
            cos,
        }
    }

    fn from_angles(tri: &ControlTriangle, ang: &AngleTriple) -> Self {
        Self::new(tri, ang.as_array().map(dd))
    }
}

/// Cosines of the view angles from `o`, computed in double-double.
///
/// Validates like [`ControlTriangle::angles_with_tolerances`].
pub fn precise_angles(tri: &ControlTriangle, o: Viewpoint, tol: &Tolerances) -> Result<[Dd; 3]> {
    tri.angles_with_tolerances(o, tol)?;
    Ok(angles_at(tri, [o.x, o.y, o.z].map(dd)))
}

/// `(cos θ, sin θ, z0)` renormalized so that `x² + y² = 1` holds in double-double.
pub fn precise_cylinder_point(theta: f64, z0: f64) -> [Dd; 3] {
    let (x, y) = (dd(theta.cos()), dd(theta.sin()));
    let r = (x * x + y * y).sqrt();
    [dd::div(x, r), dd::div(y, r), dd(z0)]
}

/// Cosines from a viewpoint given in double-double.
pub fn precise_angles_at(tri: &ControlTriangle, p: [Dd; 3], tol: &Tolerances) -> Result<[Dd; 3]> {
    tri.angles_with_tolerances(Viewpoint::new(to_f64(p[0]), to_f64(p[1]), to_f64(p[2])), tol)?;
    Ok(angles_at(tri, p))
}

/// Control points pushed onto the unit circle in double-double.
fn unit_points(tri: &ControlTriangle) -> [[Dd; 2]; 3] {
    tri.points.map(|q| {
        let (x, y) = (dd(q[0]), dd(q[1]));
        let r = (x * x + y * y).sqrt();
        [dd::div(x, r), dd::div(y, r)]
    })
}

fn angles_at(tri: &ControlTriangle, p: [Dd; 3]) -> [Dd; 3] {
    let pts = unit_points(tri);
    let rays = [0, 1, 2].map(|i| {
        let q = pts[i];
        [p[0] - q[0], p[1] - q[1], p[2]]
    });
    let dot = |p: &[Dd; 3], q: &[Dd; 3]| p[0] * q[0] + p[1] * q[1] + p[2] * q[2];
    let cos = |i: usize, j: usize| {
        let c = dd::div(
            dot(&rays[i], &rays[j]),
            (dot(&rays[i], &rays[i]) * dot(&rays[j], &rays[j])).sqrt(),
        );
        c.max(dd(-1.0)).min(dd(1.0))
    };
    [cos(1, 2), cos(0, 2), cos(0, 1)]
}

/// Coefficients `[c0, c1, c2, c3, c4]` of the Grunert quartic in `v = s3 / s1`.
pub fn grunert_quartic(tri: &ControlTriangle, ang: &AngleTriple) -> Result<[f64; 5]> {
    grunert_quartic_with(tri, ang, &Tolerances::default())
}

pub fn grunert_quartic_with(
    tri: &ControlTriangle,
    ang: &AngleTriple,
    tol: &Tolerances,
) -> Result<[f64; 5]> {
    if !ang.is_open_interval() {
        return Err(Error::CosineOutOfRange);
    }
    Ok(checked_quartic(&Instance::from_angles(tri, ang), tol)?.map(to_f64))
}

fn checked_quartic(inst: &Instance, tol: &Tolerances) -> Result<[Dd; 5]> {
    let c = raw_quartic(inst);
    let cf = c.map(to_f64);
    let norm = cf.iter().map(|v| v * v).sum::<f64>().sqrt();
    if !(norm.is_finite() && norm > 0.0) || cf[4].abs() <= tol.leading_coefficient * norm {
        return Err(Error::LeadingCoefficientVanishes(cf[4]));
    }
    Ok(c)
}

struct Branches {
    // quadric (I): b² u² + p1 u + p0(v) = 0
    p1: Dd,
    p0: [Dd; 3],
    // sum of (I) and (II): s1(v) u + s0(v) = 0
    s1: [Dd; 2],
    s0: [Dd; 3],
    q0: [Dd; 3],
}

fn branches(inst: &Instance) -> Branches {
    let [a, b, c] = inst.sides;
    let (a2, b2, c2) = (a * a, b * b, c * c);
    let [ca, cb, cg] = inst.cos;
    let p0 = [b2 - c2, c2 * cb * 2.0, -c2];
    let q0 = [a2, -(a2 * cb * 2.0), a2 - b2];
    let s0 = [p0[0] + q0[0], p0[1] + q0[1], p0[2] + q0[2]];
    Branches {
        p1: -(b2 * cg * 2.0),
        p0,
        s1: [-(b2 * cg * 2.0), b2 * ca * 2.0],
        s0,
        q0,
    }
}

fn raw_quartic(inst: &Instance) -> [Dd; 5] {
    let b2 = inst.sides[1] * inst.sides[1];
    let br = branches(inst);
    // b² S0² - p1 S0 S1 + p0 S1²
    let q = dd::add(
        &dd::add(
            &dd::scale(&dd::mul(&br.s0, &br.s0), b2),
            &dd::scale(&dd::mul(&br.s0, &br.s1), -br.p1),
        ),
        &dd::mul(&br.p0, &dd::mul(&br.s1, &br.s1)),
    );
    let mut out = [Dd::default(); 5];
    for (i, v) in q.into_iter().take(5).enumerate() {
        out[i] = v;
    }
    out
}

/// Relative residuals of the three cosine equations.
pub fn system_residual(tri: &ControlTriangle, ang: &AngleTriple, s: &[Complex64; 3]) -> f64 {
    residual_dd(&Instance::from_angles(tri, ang), &s.map(c_from))
}

fn residual_dd(inst: &Instance, s: &[Cdd; 3]) -> f64 {
    let f = system_values(inst, s);
    let scale = s.iter().map(|v| to_f64(v.norm_sqr())).fold(1.0_f64, f64::max);
    f.iter().map(|v| to_f64(cabs(*v))).fold(0.0, f64::max) / scale
}

fn system_values(inst: &Instance, s: &[Cdd; 3]) -> [Cdd; 3] {
    let [a, b, c] = inst.sides;
    let [ca, cb, cg] = inst.cos;
    let [s1, s2, s3] = *s;
    let law = |p: Cdd, q: Cdd, cos: Dd, side: Dd| p * p + q * q - p * q * (cos * 2.0) - real(side * side);
    [law(s1, s2, cg, c), law(s1, s3, cb, b), law(s2, s3, ca, a)]
}

fn det3(m: &[[Cdd; 3]; 3]) -> Cdd {
    m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
        + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
}

/// Newton step `J^{-1} f` by Cramer's rule; `None` when `J` is singular.
fn newton_step(inst: &Instance, s: &[Cdd; 3]) -> Option<[Cdd; 3]> {
    let [ca, cb, cg] = inst.cos;
    let [s1, s2, s3] = *s;
    let z = Cdd::zero();
    let d = |p: Cdd, q: Cdd, cos: Dd| (p - q * cos) * dd(2.0);
    let j = [
        [d(s1, s2, cg), d(s2, s1, cg), z],
        [d(s1, s3, cb), z, d(s3, s1, cb)],
        [z, d(s2, s3, ca), d(s3, s2, ca)],
    ];
    let f = system_values(inst, s);
    let det = det3(&j);
    if to_f64(cabs(det)) == 0.0 {
        return None;
    }
    let step = [0, 1, 2].map(|col| {
        let mut m = j;
        for r in 0..3 {
            m[r][col] = f[r];
        }
        dd::cdiv(det3(&m), det)
    });
    step.iter().all(|v| dd::finite(*v)).then_some(step)
}

/// Guarded Newton refinement of a triplet on the cosine system.
pub fn polish_triplet(tri: &ControlTriangle, ang: &AngleTriple, s: [Complex64; 3]) -> [Complex64; 3] {
    polish_dd(&Instance::from_angles(tri, ang), s.map(c_from)).map(c_to_f64)
}

fn polish_dd(inst: &Instance, s: [Cdd; 3]) -> [Cdd; 3] {
    let mut cur = s;
    let mut res = residual_dd(inst, &cur);
    for _ in 0..8 {
        if res < 1e-30 {
            break;
        }
        let Some(step) = newton_step(inst, &cur) else {
            break;
        };
        let next = [cur[0] - step[0], cur[1] - step[1], cur[2] - step[2]];
        let nres = residual_dd(inst, &next);
        if !(nres < res) {
            break;
        }
        cur = next;
        res = nres;
    }
    cur
}

fn canonical_sign(mut s: [Cdd; 3]) -> [Cdd; 3] {
    let lead = s[0];
    if lead.re < 0.0 || (lead.re == 0.0 && lead.im < 0.0) {
        s = s.map(|v| -v);
    }
    s
}

/// Every triplet consistent with the quartic root `v`, one per valid `u` branch.
///
/// Normally a single `u` satisfies both quadrics; when two distinct solutions
/// share the same ratio `v` (the linear combination degenerates) both roots of
/// the first quadric are valid and both are returned.
pub fn back_substitute(tri: &ControlTriangle, ang: &AngleTriple, v: Complex64) -> Vec<[Complex64; 3]> {
    back_substitute_dd(&Instance::from_angles(tri, ang), c_from(v))
        .into_iter()
        .map(|s| s.map(c_to_f64))
        .collect()
}

fn back_substitute_dd(inst: &Instance, v: Cdd) -> Vec<[Cdd; 3]> {
    let [a, b, c] = inst.sides;
    let [ca, cb, cg] = inst.cos;
    let b2 = b * b;
    let br = branches(inst);
    let p0 = dd::eval(&br.p0, v);
    let q0 = dd::eval(&br.q0, v);
    let s0 = dd::eval(&br.s0, v);
    let s1 = dd::eval(&br.s1, v);
    let one = real(dd(1.0));

    let rel = |val: Cdd, u: Cdd, k: Cdd| {
        to_f64(cabs(val)) / (to_f64(b2) * (1.0 + to_f64(u.norm_sqr())) + to_f64(cabs(k))).max(1e-300)
    };
    // Residual of quadric (II): -b² u² + 2 b² cosα v u + q0(v), relative.
    let second = |u: Cdd| rel(u * u * (-b2) + v * u * (b2 * ca * 2.0) + q0, u, q0);
    let first = |u: Cdd| rel(u * u * b2 + u * br.p1 + p0, u, p0);

    let mut candidates: Vec<Cdd> = Vec::with_capacity(3);
    if to_f64(cabs(s1)) > 1e-300 {
        candidates.push(-dd::cdiv(s0, s1));
    }
    let disc = dd::csqrt(real(br.p1 * br.p1) - p0 * (b2 * 4.0));
    candidates.push(dd::cdiv_real(real(-br.p1) + disc, b2 * 2.0));
    candidates.push(dd::cdiv_real(real(-br.p1) - disc, b2 * 2.0));

    let score = |u: &Cdd| first(*u).max(second(*u));
    let best = candidates
        .iter()
        .copied()
        .min_by(|x, y| score(x).total_cmp(&score(y)))
        .expect("at least two candidates");
    let mut us = vec![best];
    // A second, distinct branch that also satisfies both quadrics.
    let valid = 1e-7;
    for u in &candidates[candidates.len() - 2..] {
        if score(u) <= valid
            && us
                .iter()
                .all(|w| to_f64(cabs(*w - *u)) > 1e-6 * (1.0 + to_f64(cabs(*u))))
        {
            us.push(*u);
        }
    }

    us.into_iter()
        .map(|u| {
            let dens = [
                (b2, one + v * v - v * (cb * 2.0)),
                (c * c, one + u * u - u * (cg * 2.0)),
                (a * a, u * u + v * v - u * v * (ca * 2.0)),
            ];
            let weight = |d: &(Dd, Cdd)| to_f64(cabs(d.1)) / to_f64(d.0);
            let (num, den) = dens
                .iter()
                .copied()
                .max_by(|x, y| weight(x).total_cmp(&weight(y)))
                .expect("three candidates");
            let s1 = dd::csqrt(dd::cdiv(real(num), den));
            canonical_sign([s1, u * s1, v * s1])
        })
        .collect()
}

fn classify(s: &[Complex64; 3], tol: &Tolerances) -> Classification {
    let scale = s.iter().map(|v| v.norm()).fold(1.0_f64, f64::max);
    let real = s.iter().all(|v| v.im.abs() <= tol.imag * scale);
    let positive = s.iter().all(|v| v.re > tol.positive);
    if real && positive {
        Classification::P3P
    } else {
        Classification::NonP3P
    }
}

/// Single-link clustering of roots within `radius * (1 + |r|)`.
fn cluster_roots(roots: &[Cdd], radius: f64) -> Vec<Vec<usize>> {
    let n = roots.len();
    let mut label: Vec<usize> = (0..n).collect();
    for i in 0..n {
        for j in i + 1..n {
            let big = to_f64(cabs(roots[i])).max(to_f64(cabs(roots[j])));
            if to_f64(cabs(roots[i] - roots[j])) <= radius * (1.0 + big) {
                let (from, to) = (label[j], label[i]);
                for l in label.iter_mut() {
                    if *l == from {
                        *l = to;
                    }
                }
            }
        }
    }
    let mut groups: Vec<Vec<usize>> = Vec::new();
    for i in 0..n {
        if let Some(g) = groups.iter_mut().find(|g| label[g[0]] == label[i]) {
            g.push(i);
        } else {
            groups.push(vec![i]);
        }
    }
    groups
}

/// Roots of a quartic: companion eigenvalues refined jointly in double-double.
fn quartic_roots_dd(c: &[Dd; 5]) -> [Cdd; 4] {
    let seeds = univariate::quartic_companion_roots(&c.map(to_f64));
    let r = dd::aberth(c, &seeds);
    [r[0], r[1], r[2], r[3]]
}

/// Roots of an ascending quartic, refined in double-double and rounded.
pub fn quartic_roots(c: &[f64; 5]) -> [Complex64; 4] {
    quartic_roots_dd(&c.map(dd)).map(c_to_f64)
}

pub fn solve(tri: &ControlTriangle, ang: &AngleTriple) -> Result<SolutionSet> {
    solve_with(tri, ang, &Tolerances::default())
}

/// Solves with the cosines taken as exact binary values.
pub fn solve_with(tri: &ControlTriangle, ang: &AngleTriple, tol: &Tolerances) -> Result<SolutionSet> {
    if !ang.is_open_interval() {
        return Err(Error::CosineOutOfRange);
    }
    solve_instance(&Instance::from_angles(tri, ang), tol)
}

/// Solves with double-double cosines, e.g. from [`precise_angles`].
pub fn solve_precise(tri: &ControlTriangle, cos: [Dd; 3], tol: &Tolerances) -> Result<SolutionSet> {
    if !cos.iter().all(|c| c.is_finite() && *c > -1.0 && *c < 1.0) {
        return Err(Error::CosineOutOfRange);
    }
    solve_instance(&Instance::new(tri, cos), tol)
}

fn solve_instance(inst: &Instance, tol: &Tolerances) -> Result<SolutionSet> {
    let raw = checked_quartic(inst, tol)?;
    let norm = raw.iter().map(|v| *v * *v).fold(Dd::default(), |a, b| a + b).sqrt();
    let unit = raw.map(|v| dd::div(v, norm));
    let roots_dd = quartic_roots_dd(&unit);
    let raw_roots = roots_dd.map(c_to_f64);

    let mut disc = real(unit[4].powi(6));
    for i in 0..4 {
        for j in i + 1..4 {
            let d = roots_dd[i] - roots_dd[j];
            disc = disc * d * d;
        }
    }
    let discriminant = to_f64(disc.re);
    let real_root_count = raw_roots
        .iter()
        .filter(|r| r.im.abs() <= tol.imag * (1.0 + r.norm()))
        .count();

    let mut roots = Vec::new();
    let mut triplets = Vec::new();
    for group in cluster_roots(&roots_dd, tol.cluster) {
        let m = group.len();
        let sum = group.iter().fold(Cdd::zero(), |acc, &i| acc + roots_dd[i]);
        let mut mean = dd::cdiv_real(sum, dd(m as f64));
        if m > 1 && to_f64(mean.im).abs() <= tol.cluster * (1.0 + to_f64(cabs(mean))) {
            mean.im = Dd::default();
        }
        roots.push(QuarticRoot {
            value: c_to_f64(mean),
            multiplicity: m,
        });
        let mut reps = back_substitute_dd(inst, mean);
        reps.truncate(m);
        // Refinement only; a representative that Newton drags elsewhere is kept as is.
        let mut polished: Vec<[Cdd; 3]> = reps
            .iter()
            .map(|s| {
                let p = canonical_sign(polish_dd(inst, *s));
                let (a, b) = (s.map(c_to_f64), p.map(c_to_f64));
                let norm = a.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
                if triplet_distance(&a, &b) <= tol.cluster * (1.0 + norm) {
                    p
                } else {
                    *s
                }
            })
            .collect();
        // Branches that polish onto the same triplet were one repeated solution.
        if polished.len() > 1 {
            let a = polished[0].map(c_to_f64);
            let b = polished[1].map(c_to_f64);
            let norm = a.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
            if triplet_distance(&a, &b) <= tol.cluster * (1.0 + norm) {
                reps.truncate(1);
                polished.truncate(1);
            }
        }
        // Distinct solutions sharing one ratio each carry multiplicity one;
        // a lone representative of a cluster is a genuine repeated solution.
        let k = reps.len();
        for (idx, (s, p)) in reps.into_iter().zip(polished).enumerate() {
            let mult = if idx == 0 { m - (k - 1) } else { 1 };
            let s = if mult == 1 { p } else { s };
            let residual = residual_dd(inst, &s);
            let sf = s.map(c_to_f64);
            triplets.push(TripletSolution {
                s: sf,
                multiplicity: mult,
                classification: classify(&sf, tol),
                v: if sf[0].norm() > 0.0 { c_to_f64(dd::cdiv(s[2], s[0])) } else { c_to_f64(mean) },
                residual,
            });
        }
    }
    let p3p_count = triplets.iter().filter(|t| t.is_p3p()).count();
    let p3p_count_with_multiplicity = triplets
        .iter()
        .filter(|t| t.is_p3p())
        .map(|t| t.multiplicity)
        .sum();
    Ok(SolutionSet {
        coefficients: raw.map(to_f64),
        roots,
        raw_roots,
        triplets,
        discriminant,
        p3p_count,
        p3p_count_with_multiplicity,
        real_root_count,
    })
}

/// Instance generated by a real viewpoint, with cosines in double-double.
pub fn solve_viewpoint(tri: &ControlTriangle, o: Viewpoint) -> Result<SolutionSet> {
    solve_viewpoint_with(tri, o, &Tolerances::default())
}

pub fn solve_viewpoint_with(tri: &ControlTriangle, o: Viewpoint, tol: &Tolerances) -> Result<SolutionSet> {
    let cos = precise_angles(tri, o, tol)?;
    solve_precise(tri, cos, tol)
}

/// A known double solution and the two remaining solutions of its instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DoubleSplit {
    pub double: TripletSolution,
    pub companions: Vec<TripletSolution>,
    /// Max of `|p(v0)|` and `|p'(v0)|` over the coefficient 1-norm.
    pub remainder: f64,
}

/// Distances from a double-double viewpoint to the control points.
pub fn precise_distances(tri: &ControlTriangle, p: [Dd; 3]) -> [Dd; 3] {
    let pts = unit_points(tri);
    [0, 1, 2].map(|i| {
        let dx = p[0] - pts[i][0];
        let dy = p[1] - pts[i][1];
        (dx * dx + dy * dy + p[2] * p[2]).sqrt()
    })
}

/// Divides by `(v - r)`, returning the quotient and the remainder.
fn deflate(c: &[Cdd], r: Cdd) -> (Vec<Cdd>, Cdd) {
    let n = c.len() - 1;
    let mut q = vec![Cdd::zero(); n];
    let mut acc = c[n];
    for k in (0..n).rev() {
        q[k] = acc;
        acc = c[k] + acc * r;
    }
    (q, acc)
}

/// Splits off the double solution `s0` of the instance with cosines `cos`.
///
/// The quartic is divided twice by `(v - v0)` with `v0 = s3 / s1`; the
/// quotient quadratic gives the companions without any root clustering, which
/// stays reliable when every root crowds `v = 1` at large heights.
pub fn split_double(
    tri: &ControlTriangle,
    cos: [Dd; 3],
    s0: [Dd; 3],
    tol: &Tolerances,
) -> Result<DoubleSplit> {
    let inst = Instance::new(tri, cos);
    let raw = checked_quartic(&inst, tol)?;
    let scale = raw.iter().map(|v| v.abs()).fold(Dd::default(), |a, b| a + b);
    let unit: Vec<Cdd> = raw.iter().map(|v| real(dd::div(*v, scale))).collect();
    let v0 = real(dd::div(s0[2], s0[0]));
    let (cubic, r1) = deflate(&unit, v0);
    let (quad, r2) = deflate(&cubic, v0);
    let remainder = to_f64(cabs(r1)).max(to_f64(cabs(r2)));
    if !(remainder <= tol.triplet_residual) {
        return Err(Error::NoDoubleSolution);
    }
    let [c0, c1, c2] = [quad[0], quad[1], quad[2]];
    let disc = dd::csqrt(c1 * c1 - c0 * c2 * dd(4.0));
    let big = if to_f64(cabs(c1 + disc)) >= to_f64(cabs(c1 - disc)) {
        c1 + disc
    } else {
        c1 - disc
    };
    let q = -big * dd(0.5);
    let roots = [dd::cdiv(q, c2), dd::cdiv(c0, q)];

    let s0c = s0.map(real);
    let make = |s: [Cdd; 3], multiplicity: usize, v: Cdd| {
        let sf = s.map(c_to_f64);
        TripletSolution {
            s: sf,
            multiplicity,
            classification: classify(&sf, tol),
            v: c_to_f64(v),
            residual: residual_dd(&inst, &s),
        }
    };
    let companions = roots
        .iter()
        .filter_map(|v| {
            let s = back_substitute_dd(&inst, *v).into_iter().next()?;
            Some(make(canonical_sign(polish_dd(&inst, s)), 1, *v))
        })
        .collect();
    Ok(DoubleSplit {
        double: make(s0c, 2, v0),
        companions,
        remainder,
    })
}

/// [`split_double`] for the cylinder point at angle `theta` and height `z0`.
pub fn split_on_cylinder(
    tri: &ControlTriangle,
    theta: f64,
    z0: f64,
    tol: &Tolerances,
) -> Result<DoubleSplit> {
    let p = precise_cylinder_point(theta, z0);
    let cos = precise_angles_at(tri, p, tol)?;
    split_double(tri, cos, precise_distances(tri, p), tol)
}

/// Instance seen from the cylinder point at angle `theta` and height `z0`.
pub fn solve_on_cylinder(
    tri: &ControlTriangle,
    theta: f64,
    z0: f64,
    tol: &Tolerances,
) -> Result<SolutionSet> {
    let cos = precise_angles_at(tri, precise_cylinder_point(theta, z0), tol)?;
    solve_precise(tri, cos, tol)
}

/// Number of distinct P3P solutions for the instance seen from `o`.
pub fn count_p3p(tri: &ControlTriangle, o: Viewpoint) -> Result<usize> {
    Ok(solve_viewpoint(tri, o)?.p3p_count)
}
