//! Double-double scalars and the few complex helpers the solver needs.
//!
//! Near the danger cylinder two quartic roots coalesce and an `O(eps)`
//! coefficient error moves them by `O(sqrt(eps))`. Carrying the instance in
//! double-double keeps that split below `1e-15` instead of `1e-8`.

use num_complex::{Complex, Complex64};
use num_traits::{Float, Zero};
use twofloat::TwoFloat;

pub type Dd = TwoFloat;
pub type Cdd = Complex<TwoFloat>;

pub fn dd(x: f64) -> Dd {
    Dd::from(x)
}

pub fn to_f64(x: Dd) -> f64 {
    x.hi() + x.lo()
}

pub fn c_to_f64(z: Cdd) -> Complex64 {
    Complex64::new(to_f64(z.re), to_f64(z.im))
}

pub fn c_from(z: Complex64) -> Cdd {
    Cdd::new(dd(z.re), dd(z.im))
}

pub fn real(x: Dd) -> Cdd {
    Cdd::new(x, Dd::zero())
}

/// Quotient by long division; the library operator loses the low word.
pub fn div(a: Dd, b: Dd) -> Dd {
    let q1 = a.hi() / b.hi();
    let r = a - b * q1;
    let q2 = r.hi() / b.hi();
    let r = r - b * q2;
    let q3 = r.hi() / b.hi();
    Dd::new_add(q1, q2) + q3
}

pub fn cdiv(a: Cdd, b: Cdd) -> Cdd {
    let n = b.re * b.re + b.im * b.im;
    Cdd::new(div(a.re * b.re + a.im * b.im, n), div(a.im * b.re - a.re * b.im, n))
}

pub fn cdiv_real(a: Cdd, b: Dd) -> Cdd {
    Cdd::new(div(a.re, b), div(a.im, b))
}

pub fn cabs(z: Cdd) -> Dd {
    (z.re * z.re + z.im * z.im).sqrt()
}

/// Principal square root without cancellation on either half-plane.
pub fn csqrt(z: Cdd) -> Cdd {
    let r = cabs(z);
    if r == 0.0 {
        return Cdd::zero();
    }
    if z.re >= 0.0 {
        let t = ((r + z.re) * 0.5).sqrt();
        Cdd::new(t, div(z.im, t * 2.0))
    } else {
        let t = ((r - z.re) * 0.5).sqrt();
        let im = if z.im < 0.0 { -t } else { t };
        Cdd::new(div(z.im.abs(), t * 2.0), im)
    }
}

pub fn finite(z: Cdd) -> bool {
    z.re.is_finite() && z.im.is_finite()
}

/// Value and derivative of an ascending polynomial.
pub fn eval_with_derivative(c: &[Dd], z: Cdd) -> (Cdd, Cdd) {
    let mut p = Cdd::zero();
    let mut dp = Cdd::zero();
    for &ck in c.iter().rev() {
        dp = dp * z + p;
        p = p * z + real(ck);
    }
    (p, dp)
}

pub fn eval(c: &[Dd], z: Cdd) -> Cdd {
    c.iter().rev().fold(Cdd::zero(), |acc, &ck| acc * z + real(ck))
}

pub fn mul(a: &[Dd], b: &[Dd]) -> Vec<Dd> {
    let mut out = vec![Dd::zero(); a.len() + b.len() - 1];
    for (i, ai) in a.iter().enumerate() {
        for (j, bj) in b.iter().enumerate() {
            out[i + j] += *ai * *bj;
        }
    }
    out
}

pub fn add(a: &[Dd], b: &[Dd]) -> Vec<Dd> {
    let n = a.len().max(b.len());
    (0..n)
        .map(|i| a.get(i).copied().unwrap_or_default() + b.get(i).copied().unwrap_or_default())
        .collect()
}

pub fn scale(a: &[Dd], s: Dd) -> Vec<Dd> {
    a.iter().map(|v| *v * s).collect()
}

/// Aberth-Ehrlich refinement of all roots at once, seeded from `seeds`.
///
/// Clustered roots are handled jointly, which plain Newton cannot do.
pub fn aberth(c: &[Dd], seeds: &[Complex64]) -> Vec<Cdd> {
    let n = seeds.len();
    // Coincident seeds would make the repulsion term blow up.
    let mut z: Vec<Cdd> = seeds
        .iter()
        .enumerate()
        .map(|(i, s)| {
            let angle = 0.7 + 1.9 * i as f64;
            let jitter = 1e-9 * (1.0 + s.norm());
            c_from(*s + Complex64::from_polar(jitter, angle))
        })
        .collect();
    let bound = |x: Cdd| {
        let r = to_f64(cabs(x));
        c.iter().rev().fold(0.0, |acc, ck| acc * r + to_f64(ck.abs()))
    };
    for _ in 0..200 {
        let mut done = true;
        for i in 0..n {
            let (p, dp) = eval_with_derivative(c, z[i]);
            if to_f64(cabs(p)) <= 1e-30 * bound(z[i]) {
                continue;
            }
            done = false;
            let w = cdiv(p, dp);
            let mut rep = Cdd::zero();
            for j in 0..n {
                if j != i {
                    rep = rep + cdiv(real(dd(1.0)), z[i] - z[j]);
                }
            }
            let step = cdiv(w, real(dd(1.0)) - w * rep);
            if finite(step) {
                z[i] = z[i] - step;
            }
        }
        if done {
            break;
        }
    }
    z
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn division_keeps_low_word() {
        let third = div(dd(1.0), dd(3.0));
        assert!(to_f64((third * 3.0 - 1.0).abs()) < 1e-31);
        let z = cdiv(Cdd::new(dd(1.0), dd(2.0)), Cdd::new(dd(3.0), dd(-7.0)));
        let back = z * Cdd::new(dd(3.0), dd(-7.0)) - Cdd::new(dd(1.0), dd(2.0));
        assert!(to_f64(cabs(back)) < 1e-30);
    }

    #[test]
    fn sqrt_branches() {
        for z in [
            Complex64::new(4.0, 0.0),
            Complex64::new(-4.0, 0.0),
            Complex64::new(-1e-20, 3.0),
            Complex64::new(-2.0, -1e-30),
        ] {
            let r = c_to_f64(csqrt(c_from(z)));
            assert!((r - z.sqrt()).norm() < 1e-15 * (1.0 + r.norm()), "{z}");
        }
    }

    #[test]
    fn aberth_separates_close_pair() {
        // (x - 1)(x - 1 - 1e-12)(x + 2)(x - 3), clustered seeds.
        let e = dd(1e-12);
        let one = dd(1.0);
        let f = mul(&mul(&[-one, one], &[-(one + e), one]), &mul(&[dd(2.0), one], &[dd(-3.0), one]));
        let seeds = [1.0, 1.0, -2.0, 3.0].map(|v| Complex64::new(v, 0.0));
        let mut roots: Vec<Cdd> = aberth(&f, &seeds);
        roots.sort_by(|a, b| to_f64(a.re).total_cmp(&to_f64(b.re)));
        let d = roots[2] - roots[1];
        assert!((to_f64(d.re) - 1e-12).abs() < 1e-16);
        assert!(to_f64(d.im).abs() < 1e-16);
    }
}
