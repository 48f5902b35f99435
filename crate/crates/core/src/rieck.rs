//! Rieck's entities for a viewpoint and the polynomial machinery built on them.
//!
//! Labels are indexed `0, 1, 2` for `A, B, C`; every entity of label `i` is
//! built from label `i` and the two labels following it cyclically.

use std::f64::consts::TAU;

use nalgebra::Matrix2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{dc_value, ControlTriangle, Viewpoint};
use crate::poly::BivariatePoly;
use crate::stats::{log_log_fit, Quantiles};
use crate::tolerance::Tolerances;

/// Below this `eta²` the F quotients are treated as `0/0`.
pub const ETA_SQUARED_FLOOR: f64 = 1e-12;
/// Numerator magnitude under which a vanishing `eta` still yields `F = 0`.
pub const F_NUMERATOR_FLOOR: f64 = 1e-9;
/// Largest condition number accepted for the `(A_B, A_C)` inversion.
pub const MAX_CONDITION: f64 = 1e8;

#[derive(Debug, Clone, Copy)]
struct HalfAngle {
    sin: f64,
    cos: f64,
    csc: f64,
}

fn half_angle(tri: &ControlTriangle, i: usize) -> HalfAngle {
    let (j, k) = ((i + 1) % 3, (i + 2) % 3);
    let h = tri.phi[i] / 2.0;
    HalfAngle {
        sin: h.sin(),
        cos: h.cos(),
        csc: 1.0 / ((tri.phi[j] - tri.phi[k]) / 2.0).sin(),
    }
}

fn rotated_quadratic(h: HalfAngle, dx: f64, dy: f64) -> f64 {
    h.sin * (dx * dx - dy * dy) + 2.0 * h.cos * dx * dy
}

/// `A_i` in its shifted form around `-P_i`.
pub fn a_entity(tri: &ControlTriangle, i: usize, x: f64, y: f64) -> f64 {
    let h = half_angle(tri, i);
    let [xi, yi] = tri.points[i];
    h.csc * rotated_quadratic(h, x + xi, y + yi)
}

/// `B_i`, centred on the midpoint of the two other control points.
pub fn b_entity(tri: &ControlTriangle, i: usize, x: f64, y: f64) -> f64 {
    let (j, k) = ((i + 1) % 3, (i + 2) % 3);
    let h = half_angle(tri, i);
    let mx = 0.5 * (tri.points[j][0] + tri.points[k][0]);
    let my = 0.5 * (tri.points[j][1] + tri.points[k][1]);
    let sides = tri.sides;
    (sides[j] * sides[j] - sides[k] * sides[k]) / 4.0 - h.csc * rotated_quadratic(h, x - mx, y - my)
}

/// `A_i` in the form written over the quadratic basis of [`basis_e1`],
/// [`basis_e2`] and `1`.
pub fn a_basis_form(tri: &ControlTriangle, i: usize, x: f64, y: f64) -> f64 {
    let h = half_angle(tri, i);
    let [xi, yi] = tri.points[i];
    h.csc
        * (h.sin * (y * y - x * x + 2.0 * x - 1.0)
            + 2.0 * h.cos * (x * y + y)
            + h.sin
            + h.sin * (yi * yi - xi * xi)
            + 2.0 * h.cos * xi * yi)
}

pub fn basis_e1(x: f64, y: f64) -> f64 {
    (x * x - y * y - 2.0 * x + 1.0) / 2.0
}

pub fn basis_e2(x: f64, y: f64) -> f64 {
    x * y + y
}

/// `(1 - x² - y²) / z²`, the factor turning `B_i` into `C_i`.
fn height_factor(o: Viewpoint) -> f64 {
    -dc_value(o) / (o.z * o.z)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RieckEntities {
    /// `sqrt(max(0, eta²))`.
    pub eta: f64,
    /// The radicand `1 - Σcos²φ + 2Πcosφ` before clamping.
    pub eta_squared: f64,
    pub a: [f64; 3],
    pub b: [f64; 3],
    pub c: [f64; 3],
    pub f_numerator: [f64; 3],
    /// `None` where `eta² ≈ 0` with a nonzero numerator.
    pub f: [Option<f64>; 3],
    pub f_sum: Option<f64>,
}

pub fn entities(tri: &ControlTriangle, o: Viewpoint) -> Result<RieckEntities> {
    entities_with(tri, o, &Tolerances::default())
}

pub fn entities_with(tri: &ControlTriangle, o: Viewpoint, tol: &Tolerances) -> Result<RieckEntities> {
    if !o.is_finite() {
        return Err(Error::NonFinite("viewpoint"));
    }
    if o.z.abs() < tol.min_height {
        return Err(Error::ZeroHeight(o.z));
    }
    let cosines = tri.phi.map(f64::cos);
    let eta_squared = 1.0 - cosines.iter().map(|c| c * c).sum::<f64>()
        + 2.0 * cosines[0] * cosines[1] * cosines[2];
    let sin2 = tri.phi.map(|p| p.sin().powi(2));
    let sq = tri.sides.map(|s| s * s);
    let mut out = RieckEntities {
        eta: eta_squared.max(0.0).sqrt(),
        eta_squared,
        a: [0.0; 3],
        b: [0.0; 3],
        c: [0.0; 3],
        f_numerator: [0.0; 3],
        f: [None; 3],
        f_sum: None,
    };
    let hf = height_factor(o);
    for i in 0..3 {
        let (j, k) = ((i + 1) % 3, (i + 2) % 3);
        out.a[i] = a_entity(tri, i, o.x, o.y);
        out.b[i] = b_entity(tri, i, o.x, o.y);
        out.c[i] = out.b[i] * hf;
        let num = sq[j] * sin2[k] - sq[k] * sin2[j];
        out.f_numerator[i] = num;
        out.f[i] = if eta_squared.abs() > ETA_SQUARED_FLOOR {
            Some(num / eta_squared)
        } else if num.abs() <= F_NUMERATOR_FLOOR {
            Some(0.0)
        } else {
            None
        };
    }
    out.f_sum = match out.f {
        [Some(p), Some(q), Some(r)] => Some(p + q + r),
        _ => None,
    };
    Ok(out)
}

/// `F_i - A_i - C_i` for each label; `None` where `F_i` is undefined.
pub fn identity_residuals(tri: &ControlTriangle, o: Viewpoint) -> Result<[Option<f64>; 3]> {
    let e = entities(tri, o)?;
    Ok([0, 1, 2].map(|i| e.f[i].map(|f| f - e.a[i] - e.c[i])))
}

/// Coefficients of `A_i = k_i1 E1 + k_i2 E2 + k_i3` and of the inverse map
/// `E1 = e_11 A_B + e_12 A_C + e_13`, `E2 = e_21 A_B + e_22 A_C + e_23`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuadraticBasisCoeffs {
    pub k: [[f64; 3]; 3],
    pub e: [[f64; 3]; 2],
    /// Condition number of `[[k21, k22], [k31, k32]]`.
    pub condition: f64,
    /// Norm of the `x`, `y` coefficients left over when the shifted form of
    /// `A_i` is expanded over `{E1, E2, 1, x, y}`.
    pub transcription_gap: [f64; 3],
}

impl QuadraticBasisCoeffs {
    pub fn reconstruct(&self, i: usize, x: f64, y: f64) -> f64 {
        let k = self.k[i];
        k[0] * basis_e1(x, y) + k[1] * basis_e2(x, y) + k[2]
    }

    /// `(E1, E2)` recovered from `(A_B, A_C)`.
    pub fn basis_from(&self, a_b: f64, a_c: f64) -> (f64, f64) {
        let [r1, r2] = self.e;
        (
            r1[0] * a_b + r1[1] * a_c + r1[2],
            r2[0] * a_b + r2[1] * a_c + r2[2],
        )
    }
}

pub fn basis_coeffs(tri: &ControlTriangle) -> Result<QuadraticBasisCoeffs> {
    let mut k = [[0.0; 3]; 3];
    let mut gap = [0.0; 3];
    for (i, row) in k.iter_mut().enumerate() {
        let h = half_angle(tri, i);
        let [xi, yi] = tri.points[i];
        *row = [
            -2.0 * h.sin * h.csc,
            2.0 * h.cos * h.csc,
            h.csc * (h.sin + h.sin * (yi * yi - xi * xi) + 2.0 * h.cos * xi * yi),
        ];
        let gx = h.csc * (2.0 * h.sin + 2.0 * h.sin * xi + 2.0 * h.cos * yi);
        let gy = h.csc * (-2.0 * h.cos - 2.0 * h.sin * yi + 2.0 * h.cos * xi);
        gap[i] = gx.hypot(gy);
    }
    let m = Matrix2::new(k[1][0], k[1][1], k[2][0], k[2][1]);
    let sv = m.singular_values();
    let condition = if sv[1] > 0.0 { sv[0] / sv[1] } else { f64::INFINITY };
    if !(condition <= MAX_CONDITION) {
        return Err(Error::SingularEliminationSystem(condition));
    }
    let inv = m
        .try_inverse()
        .ok_or(Error::SingularEliminationSystem(condition))?;
    let row = |r: usize| {
        let (p, q) = (inv[(r, 0)], inv[(r, 1)]);
        [p, q, -(p * k[1][2] + q * k[2][2])]
    };
    Ok(QuadraticBasisCoeffs {
        k,
        e: [row(0), row(1)],
        condition,
        transcription_gap: gap,
    })
}

/// Implicit equation of the image of the unit circle under `(x, y) -> (E1, E2)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DCImplicit {
    /// Unit-norm polynomial in `(E1, E2)`.
    pub poly: BivariatePoly,
    /// The resultant before normalization.
    pub raw: BivariatePoly,
    pub method: String,
}

impl DCImplicit {
    pub fn eval(&self, e1: f64, e2: f64) -> f64 {
        self.poly.eval(e1, e2)
    }
}

/// Eliminates `x` from `E1 = x² - x` and `E2² = (1 - x)(1 + x)³` by a
/// Sylvester resultant.
pub fn derive_dc_implicit() -> DCImplicit {
    let c = BivariatePoly::constant;
    // Descending powers of x.
    let f = [c(1.0), c(-1.0), BivariatePoly::monomial(1, 0, -1.0)];
    let g = [
        c(-1.0),
        c(-2.0),
        BivariatePoly::zero(),
        c(2.0),
        c(1.0).add(&BivariatePoly::monomial(0, 2, -1.0)),
    ];
    let raw = sylvester_resultant(&f, &g);
    DCImplicit {
        poly: raw.normalized(),
        raw,
        method: "sylvester resultant in x of E1 - (x^2 - x) and E2^2 - (1 - x)(1 + x)^3".into(),
    }
}

/// Resultant of two polynomials in an eliminated variable whose coefficients
/// (descending) are bivariate polynomials.
pub fn sylvester_resultant(f: &[BivariatePoly], g: &[BivariatePoly]) -> BivariatePoly {
    let m = f.len() - 1;
    let n = g.len() - 1;
    let size = m + n;
    let mut mat = vec![vec![BivariatePoly::zero(); size]; size];
    for r in 0..n {
        for (j, fj) in f.iter().enumerate() {
            mat[r][r + j] = fj.clone();
        }
    }
    for r in 0..m {
        for (j, gj) in g.iter().enumerate() {
            mat[n + r][r + j] = gj.clone();
        }
    }
    let cols: Vec<usize> = (0..size).collect();
    cofactor_det(&mat, 0, &cols)
}

fn cofactor_det(mat: &[Vec<BivariatePoly>], row: usize, cols: &[usize]) -> BivariatePoly {
    if cols.len() == 1 {
        return mat[row][cols[0]].clone();
    }
    let mut acc = BivariatePoly::zero();
    for (pos, &col) in cols.iter().enumerate() {
        let entry = &mat[row][col];
        if entry.is_zero() {
            continue;
        }
        let rest: Vec<usize> = cols.iter().copied().filter(|&c| c != col).collect();
        let minor = cofactor_det(mat, row + 1, &rest);
        let term = entry.mul(&minor);
        acc = if pos % 2 == 0 { acc.add(&term) } else { acc.sub(&term) };
    }
    acc
}

/// The two readings of the printed circle constraint in `(E1, E2)`: the cube
/// and square factors multiplied, and added.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PrintedReadings {
    pub product: f64,
    pub sum: f64,
}

pub fn printed_readings(e1: f64, e2: f64) -> PrintedReadings {
    let cube = (4.0 * e1 - 1.0).powi(3);
    let square = (2.0 * e1 * e1 + 2.0 * e2 * e2 - 10.0 * e1 - 1.0).powi(2);
    PrintedReadings {
        product: cube * square,
        sum: cube + square,
    }
}

/// The circle constraint transported to `(x, y, z)` through `F = A + C`.
#[derive(Debug, Clone)]
pub struct PConstraint {
    tri: ControlTriangle,
    basis: QuadraticBasisCoeffs,
    implicit: DCImplicit,
    height_power: i32,
}

impl PConstraint {
    pub fn new(tri: &ControlTriangle) -> Result<Self> {
        let implicit = derive_dc_implicit();
        let height_power = 2 * implicit.poly.total_degree() as i32;
        Ok(Self {
            tri: *tri,
            basis: basis_coeffs(tri)?,
            implicit,
            height_power,
        })
    }

    pub fn basis(&self) -> &QuadraticBasisCoeffs {
        &self.basis
    }

    pub fn implicit(&self) -> &DCImplicit {
        &self.implicit
    }

    /// Power of `z` multiplied in to clear the `1/z²` of every `C` term.
    pub fn height_power(&self) -> i32 {
        self.height_power
    }

    pub fn eval(&self, o: Viewpoint) -> Result<f64> {
        if !o.is_finite() {
            return Err(Error::NonFinite("viewpoint"));
        }
        if o.z.abs() < Tolerances::default().min_height {
            return Err(Error::ZeroHeight(o.z));
        }
        let hf = height_factor(o);
        let f = |i: usize| {
            a_basis_form(&self.tri, i, o.x, o.y) + b_entity(&self.tri, i, o.x, o.y) * hf
        };
        let (e1, e2) = self.basis.basis_from(f(1), f(2));
        Ok(self.implicit.eval(e1, e2) * o.z.powi(self.height_power))
    }
}

pub fn p_constraint_diagnostic(tri: &ControlTriangle, o: Viewpoint) -> Result<f64> {
    PConstraint::new(tri)?.eval(o)
}

/// One sample of a scalar along a path, with the cylinder value there.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PathValue {
    pub t: f64,
    pub dc: f64,
    pub value: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VanishingOrder {
    /// Slope of `log|value|` against `log|dc|` near the crossing.
    pub order: f64,
    pub regression_error: f64,
    pub samples_used: usize,
    /// `|dc|` at the sample where the value is smallest.
    pub dc_at_value_minimum: f64,
}

/// Window of `|dc|` used by the regression.
pub const ORDER_WINDOW: (f64, f64) = (1e-7, 1e-2);

/// Estimates the order to which `value` vanishes with `dc` along a path.
///
/// The path must cross the cylinder (a `dc` sign change), or cross a zero of
/// `value` where `dc` stays bounded away; the latter reports order 0.
pub fn dc_factor_division(samples: &[PathValue]) -> Result<VanishingOrder> {
    let finite: Vec<&PathValue> = samples
        .iter()
        .filter(|s| s.dc.is_finite() && s.value.is_finite())
        .collect();
    if finite.len() < 2 {
        return Err(Error::PathNotTransversal);
    }
    let changes = |f: fn(&PathValue) -> f64| {
        finite
            .windows(2)
            .any(|w| f(w[0]) * f(w[1]) < 0.0 || (f(w[0]) == 0.0) != (f(w[1]) == 0.0))
    };
    let dc_scale = finite.iter().map(|s| s.dc.abs()).fold(0.0, f64::max);
    let at_min = finite
        .iter()
        .min_by(|a, b| a.value.abs().total_cmp(&b.value.abs()))
        .expect("nonempty");
    if dc_scale <= 1e-12 {
        return Err(Error::PathNotTransversal);
    }
    if changes(|s| s.dc) {
        let (xs, ys): (Vec<f64>, Vec<f64>) = finite
            .iter()
            .filter(|s| (ORDER_WINDOW.0..=ORDER_WINDOW.1).contains(&s.dc.abs()))
            .map(|s| (s.dc, s.value))
            .unzip();
        let fit = log_log_fit(&xs, &ys).ok_or(Error::PathNotTransversal)?;
        return Ok(VanishingOrder {
            order: fit.slope,
            regression_error: fit.rms_error,
            samples_used: fit.points,
            dc_at_value_minimum: at_min.dc.abs(),
        });
    }
    if changes(|s| s.value) {
        return Ok(VanishingOrder {
            order: 0.0,
            regression_error: 0.0,
            samples_used: finite.len(),
            dc_at_value_minimum: at_min.dc.abs(),
        });
    }
    Err(Error::PathNotTransversal)
}

/// Samples `f` along the segment, uniformly and then geometrically around the
/// first sign change of the cylinder value (or of `f` when the segment stays
/// off the cylinder).
pub fn sample_path(
    start: Viewpoint,
    end: Viewpoint,
    uniform: usize,
    f: impl Fn(Viewpoint) -> Result<f64>,
) -> Result<Vec<PathValue>> {
    let at = |t: f64| -> Result<PathValue> {
        let o = start.lerp(end, t);
        Ok(PathValue {
            t,
            dc: dc_value(o),
            value: f(o)?,
        })
    };
    let n = uniform.max(2);
    let mut out = Vec::with_capacity(n + 32);
    for i in 0..=n {
        out.push(at(i as f64 / n as f64)?);
    }
    let bracket = |g: &dyn Fn(&PathValue) -> f64| {
        out.windows(2)
            .find(|w| g(&w[0]) * g(&w[1]) < 0.0)
            .map(|w| (w[0].t, w[1].t))
    };
    let by_dc = bracket(&|s| s.dc);
    let target: Option<(f64, bool)> = match by_dc {
        Some(b) => Some((bisect(b, |t| dc_value(start.lerp(end, t))), true)),
        None => match bracket(&|s| s.value) {
            Some(b) => Some((bisect(b, |t| f(start.lerp(end, t)).unwrap_or(f64::NAN)), false)),
            None => None,
        },
    };
    if let Some((t0, _)) = target {
        for k in 1..=14 {
            let h = 0.5 * 10f64.powf(-(k as f64) / 2.0) / n as f64;
            for t in [t0 - h, t0 + h] {
                if (0.0..=1.0).contains(&t) {
                    out.push(at(t)?);
                }
            }
        }
        out.sort_by(|a, b| a.t.total_cmp(&b.t));
    }
    Ok(out)
}

fn bisect((mut lo, mut hi): (f64, f64), g: impl Fn(f64) -> f64) -> f64 {
    let mut glo = g(lo);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let gm = g(mid);
        if gm == 0.0 || hi - lo < 1e-15 {
            return mid;
        }
        if glo * gm < 0.0 {
            hi = mid;
        } else {
            lo = mid;
            glo = gm;
        }
    }
    0.5 * (lo + hi)
}

/// The large-height limit curve of the companion surface.
pub fn deltoid_value(x: f64, y: f64) -> f64 {
    let (x2, y2) = (x * x, y * y);
    x2 * x2 - 8.0 * x2 * x + 2.0 * x2 * y2 + 18.0 * x2 + 24.0 * x * y2 + y2 * y2 + 18.0 * y2
        - 27.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurveyRecord {
    pub viewpoint: Viewpoint,
    pub dc_value: f64,
    pub residuals: [Option<f64>; 3],
    pub f: [Option<f64>; 3],
    pub p_constraint: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReferenceCase {
    pub triangle: ControlTriangle,
    pub viewpoint: Viewpoint,
    pub entities: RieckEntities,
    pub residuals: [Option<f64>; 3],
}

/// Per-viewpoint check of `F_i = A_i + C_i` with a summary verdict.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IdentitySurvey {
    pub triangle: ControlTriangle,
    pub seed: u64,
    pub eta_squared: f64,
    pub basis: QuadraticBasisCoeffs,
    pub dc_implicit: DCImplicit,
    /// Viewpoints where all three residuals are within `hold_tolerance`.
    pub holding: usize,
    pub holding_on_dc: usize,
    pub on_dc: usize,
    pub undefined_f: usize,
    pub hold_tolerance: f64,
    pub abs_residual: Option<Quantiles>,
    pub abs_residual_on_dc: Option<Quantiles>,
    pub p_constraint_on_dc: Option<Quantiles>,
    pub p_constraint_off_dc: Option<Quantiles>,
    pub reference: ReferenceCase,
    pub verdict: String,
    pub records: Vec<SurveyRecord>,
}

/// Every fifth survey viewpoint is placed on the cylinder.
pub fn identity_survey(tri: &ControlTriangle, count: usize, seed: u64) -> Result<IdentitySurvey> {
    let hold_tolerance = 1e-8;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut points = Vec::with_capacity(count);
    while points.len() < count {
        let z = rng.gen_range(0.2..3.0) * if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
        let o = if points.len() % 5 == 4 {
            Viewpoint::on_cylinder(rng.gen_range(0.0..TAU), z)
        } else {
            Viewpoint::new(rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0), z)
        };
        if (0..3).all(|i| (o.to_vector() - tri.point(i)).norm() > 1e-3) {
            points.push(o);
        }
    }
    let pc = PConstraint::new(tri)?;
    let records = points
        .par_iter()
        .map(|&o| -> Result<SurveyRecord> {
            let e = entities(tri, o)?;
            Ok(SurveyRecord {
                viewpoint: o,
                dc_value: dc_value(o),
                residuals: [0, 1, 2].map(|i| e.f[i].map(|f| f - e.a[i] - e.c[i])),
                f: e.f,
                p_constraint: pc.eval(o)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let on_dc = |r: &SurveyRecord| r.dc_value.abs() <= 1e-12;
    let holds = |r: &SurveyRecord| {
        r.residuals
            .iter()
            .all(|v| v.is_some_and(|v| v.abs() <= hold_tolerance))
    };
    let abs_res = |keep: &dyn Fn(&SurveyRecord) -> bool| {
        Quantiles::of(
            records
                .iter()
                .filter(|r| keep(r))
                .flat_map(|r| r.residuals.iter().flatten().map(|v| v.abs())),
        )
    };
    let holding = records.iter().filter(|r| holds(r)).count();
    let holding_on_dc = records.iter().filter(|r| on_dc(r) && holds(r)).count();
    let n_on_dc = records.iter().filter(|r| on_dc(r)).count();
    let undefined_f = records
        .iter()
        .filter(|r| r.f.iter().any(Option::is_none))
        .count();

    let eq = ControlTriangle::equilateral();
    let ref_o = Viewpoint::new(0.3, 0.2, 1.0);
    let reference = ReferenceCase {
        triangle: eq,
        viewpoint: ref_o,
        entities: entities(&eq, ref_o)?,
        residuals: identity_residuals(&eq, ref_o)?,
    };
    let eta_squared = entities(tri, points[0])?.eta_squared;
    let abs_residual = abs_res(&|_| true);
    let verdict = survey_verdict(
        records.len(),
        holding,
        n_on_dc,
        holding_on_dc,
        undefined_f,
        eta_squared,
        abs_residual.as_ref(),
    );
    Ok(IdentitySurvey {
        triangle: *tri,
        seed,
        eta_squared,
        basis: pc.basis().clone(),
        dc_implicit: pc.implicit().clone(),
        holding,
        holding_on_dc,
        on_dc: n_on_dc,
        undefined_f,
        hold_tolerance,
        abs_residual,
        abs_residual_on_dc: abs_res(&on_dc),
        p_constraint_on_dc: Quantiles::of(
            records.iter().filter(|r| on_dc(r)).map(|r| r.p_constraint.abs()),
        ),
        p_constraint_off_dc: Quantiles::of(
            records.iter().filter(|r| !on_dc(r)).map(|r| r.p_constraint.abs()),
        ),
        reference,
        verdict,
        records,
    })
}

fn survey_verdict(
    n: usize,
    holding: usize,
    on_dc: usize,
    holding_on_dc: usize,
    undefined: usize,
    eta_squared: f64,
    q: Option<&Quantiles>,
) -> String {
    let mut s = format!(
        "identities hold at {holding} of {n} viewpoints ({holding_on_dc} of {on_dc} on the cylinder)"
    );
    if undefined > 0 {
        s.push_str(&format!(
            "; F undefined at {undefined} viewpoints because eta^2 = {eta_squared:.3e} vanishes for angles summing to zero while the numerators do not"
        ));
    }
    if let Some(q) = q {
        s.push_str(&format!(
            "; median |residual| {:.3e}, max {:.3e}",
            q.p50, q.max
        ));
    }
    if holding == n {
        s.push_str("; validity domain: all sampled viewpoints");
    } else if holding == 0 {
        s.push_str("; validity domain: empty among sampled viewpoints");
    } else {
        s.push_str("; validity domain: a measure-zero subset of the sampled viewpoints");
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    fn eq() -> ControlTriangle {
        ControlTriangle::equilateral()
    }

    #[test]
    fn equilateral_f() {
        let e = entities(&eq(), Viewpoint::new(0.4, -0.7, 1.3)).unwrap();
        assert!(e.eta_squared.abs() < 1e-12);
        // sin(phi_A) = 0 clears the A numerator only; B and C divide 9/4 by zero.
        assert_eq!(e.f[0], Some(0.0));
        assert_eq!(e.f[1], None);
        assert_eq!(e.f[2], None);
        assert!((e.f_numerator[1] + 2.25).abs() < 1e-12);
        assert!((e.f_numerator[2] - 2.25).abs() < 1e-12);
    }

    #[test]
    fn hand_expanded_a_entity() {
        let o = Viewpoint::new(0.3, 0.2, 1.0);
        let e = entities(&eq(), o).unwrap();
        let expected = 4.0 / 3f64.sqrt() * 1.3 * 0.2;
        assert!((e.a[0] - expected).abs() < 1e-12);
        assert!((e.a[0] - 0.60044).abs() < 1e-5);
        let r = identity_residuals(&eq(), o).unwrap();
        assert!((r[0].unwrap() + 0.27897).abs() < 1e-5);
    }

    #[test]
    fn zero_height_rejected() {
        assert!(matches!(
            entities(&eq(), Viewpoint::new(0.3, 0.2, 0.0)),
            Err(Error::ZeroHeight(_))
        ));
    }

    #[test]
    fn residuals_on_cylinder_drop_c() {
        let o = Viewpoint::on_cylinder(0.8, 1.5);
        let e = entities(&eq(), o).unwrap();
        let r = identity_residuals(&eq(), o).unwrap();
        for i in 0..3 {
            assert!(e.c[i].abs() < 1e-12);
        }
        assert!((r[0].unwrap() + e.a[0]).abs() < 1e-12);
    }

    #[test]
    fn equilateral_basis() {
        let k = basis_coeffs(&eq()).unwrap().k;
        assert!(k[0][0].abs() < 1e-15);
        assert!((k[0][1] - 4.0 / 3f64.sqrt()).abs() < 1e-12);
        assert!(k[0][2].abs() < 1e-15);
    }

    #[test]
    fn deltoid_roots() {
        assert_eq!(deltoid_value(3.0, 0.0), 0.0);
        assert_eq!(deltoid_value(-1.0, 0.0), 0.0);
        assert_eq!(deltoid_value(0.0, 0.0), -27.0);
    }

    #[test]
    fn printed_readings_on_circle() {
        let r = printed_readings(0.0, 0.0);
        assert_eq!(r.product, -1.0);
        assert_eq!(r.sum, 0.0);
        let r = printed_readings(0.75, 0.1875f64.sqrt());
        assert!((r.product - 392.0).abs() < 1e-9);
        assert!((r.sum - 57.0).abs() < 1e-9);
    }

    #[test]
    fn path_along_cylinder_is_not_transversal() {
        let samples: Vec<PathValue> = (0..10)
            .map(|i| PathValue {
                t: i as f64 / 9.0,
                dc: 0.0,
                value: 1.0,
            })
            .collect();
        assert!(matches!(
            dc_factor_division(&samples),
            Err(Error::PathNotTransversal)
        ));
    }

    #[test]
    fn synthetic_square_order() {
        let samples: Vec<PathValue> = (-40..=40)
            .map(|i| {
                let d = i as f64 * 1e-3;
                PathValue {
                    t: 0.5 + d,
                    dc: d,
                    value: 3.0 * d * d,
                }
            })
            .collect();
        let o = dc_factor_division(&samples).unwrap();
        assert!((o.order - 2.0).abs() < 1e-9);
    }
}
