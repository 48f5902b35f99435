//! Dense univariate helpers. Coefficients are stored in ascending order:
//! `c[k]` multiplies `x^k`.

use nalgebra::{Matrix4, Schur};
use num_complex::Complex64;

pub fn eval_complex(c: &[f64], x: Complex64) -> Complex64 {
    c.iter()
        .rev()
        .fold(Complex64::new(0.0, 0.0), |acc, &ck| acc * x + ck)
}

/// Value and first derivative by Horner's scheme.
pub fn eval_with_derivative(c: &[f64], x: Complex64) -> (Complex64, Complex64) {
    let mut p = Complex64::new(0.0, 0.0);
    let mut dp = Complex64::new(0.0, 0.0);
    for &ck in c.iter().rev() {
        dp = dp * x + p;
        p = p * x + ck;
    }
    (p, dp)
}

/// `sum |c_k| |x|^k`, the natural scale of rounding error in `p(x)`.
pub fn magnitude_bound(c: &[f64], x: Complex64) -> f64 {
    let r = x.norm();
    c.iter().rev().fold(0.0, |acc, ck| acc * r + ck.abs())
}

pub fn mul(a: &[f64], b: &[f64]) -> Vec<f64> {
    if a.is_empty() || b.is_empty() {
        return Vec::new();
    }
    let mut out = vec![0.0; a.len() + b.len() - 1];
    for (i, ai) in a.iter().enumerate() {
        for (j, bj) in b.iter().enumerate() {
            out[i + j] += ai * bj;
        }
    }
    out
}

pub fn add(a: &[f64], b: &[f64]) -> Vec<f64> {
    let n = a.len().max(b.len());
    (0..n)
        .map(|i| a.get(i).copied().unwrap_or(0.0) + b.get(i).copied().unwrap_or(0.0))
        .collect()
}

pub fn scale(a: &[f64], s: f64) -> Vec<f64> {
    a.iter().map(|v| v * s).collect()
}

/// Eigenvalues of the companion matrix of a quartic with nonzero leading term.
pub fn quartic_companion_roots(c: &[f64; 5]) -> [Complex64; 4] {
    let lead = c[4];
    let mut m = Matrix4::<f64>::zeros();
    for i in 1..4 {
        m[(i, i - 1)] = 1.0;
    }
    for i in 0..4 {
        m[(i, 3)] = -c[i] / lead;
    }
    match Schur::try_new(m, f64::EPSILON, 2000) {
        Some(schur) => {
            let ev = schur.complex_eigenvalues();
            [ev[0], ev[1], ev[2], ev[3]]
        }
        None => weierstrass_roots(c),
    }
}

/// Simultaneous (Weierstrass / Durand-Kerner) iteration, used when the Schur
/// iteration stalls.
fn weierstrass_roots(c: &[f64; 5]) -> [Complex64; 4] {
    let monic: Vec<f64> = c.iter().map(|v| v / c[4]).collect();
    let radius = 1.0 + monic[..4].iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let seed = Complex64::from_polar(0.5 * radius, 0.4);
    let mut z = [0, 1, 2, 3].map(|k| seed * Complex64::from_polar(1.0, k as f64 * 1.5));
    for _ in 0..500 {
        let mut moved = 0.0f64;
        for i in 0..4 {
            let mut den = Complex64::new(1.0, 0.0);
            for j in 0..4 {
                if j != i {
                    den *= z[i] - z[j];
                }
            }
            if den.norm() == 0.0 {
                continue;
            }
            let step = eval_complex(&monic, z[i]) / den;
            z[i] -= step;
            moved = moved.max(step.norm() / (1.0 + z[i].norm()));
        }
        if moved < 1e-15 {
            break;
        }
    }
    z
}

/// Newton refinement of every root in `roots`, guarded so a step is accepted
/// only if it lowers `|p|` and does not jump past half the distance to the
/// nearest other root.
pub fn polish_roots(c: &[f64], roots: &mut [Complex64], rel_residual: f64) {
    for k in 0..roots.len() {
        let mut x = roots[k];
        let others: Vec<Complex64> = roots
            .iter()
            .enumerate()
            .filter(|(j, _)| *j != k)
            .map(|(_, r)| *r)
            .collect();
        let (mut p, _) = eval_with_derivative(c, x);
        for _ in 0..60 {
            if p.norm() <= rel_residual * magnitude_bound(c, x) {
                break;
            }
            let (_, dp) = eval_with_derivative(c, x);
            if dp.norm() == 0.0 {
                break;
            }
            let step = p / dp;
            let gap = others
                .iter()
                .map(|o| (o - x).norm())
                .fold(f64::INFINITY, f64::min);
            if step.norm() > 0.5 * gap {
                break;
            }
            let xn = x - step;
            let (pn, _) = eval_with_derivative(c, xn);
            if pn.norm() >= p.norm() {
                break;
            }
            x = xn;
            p = pn;
        }
        roots[k] = x;
    }
}

/// Discriminant of a polynomial from its leading coefficient and roots:
/// `lead^(2n-2) * prod_{i<j} (r_i - r_j)^2`.
///
/// The real part is returned; for real coefficients the imaginary part is
/// rounding noise. Its sign is `(-1)^k` with `k` the number of conjugate pairs.
pub fn discriminant_from_roots(lead: f64, roots: &[Complex64]) -> f64 {
    let n = roots.len() as i32;
    let mut d = Complex64::new(lead.powi(2 * n - 2), 0.0);
    for i in 0..roots.len() {
        for j in i + 1..roots.len() {
            let diff = roots[i] - roots[j];
            d *= diff * diff;
        }
    }
    d.re
}

/// Classical coefficient formula for the discriminant of
/// `c4 x^4 + c3 x^3 + c2 x^2 + c1 x + c0`.
pub fn quartic_discriminant(c: &[f64; 5]) -> f64 {
    let [e, d, cc, b, a] = *c;
    256.0 * a.powi(3) * e.powi(3) - 192.0 * a * a * b * d * e * e - 128.0 * a * a * cc * cc * e * e
        + 144.0 * a * a * cc * d * d * e
        - 27.0 * a * a * d.powi(4)
        + 144.0 * a * b * b * cc * e * e
        - 6.0 * a * b * b * d * d * e
        - 80.0 * a * b * cc * cc * d * e
        + 18.0 * a * b * cc * d.powi(3)
        + 16.0 * a * cc.powi(4) * e
        - 4.0 * a * cc.powi(3) * d * d
        - 27.0 * b.powi(4) * e * e
        + 18.0 * b.powi(3) * cc * d * e
        - 4.0 * b.powi(3) * d.powi(3)
        - 4.0 * b * b * cc.powi(3) * e
        + b * b * cc * cc * d * d
}

/// Real roots of `p` inside `[lo, hi]` found by sign changes on a uniform
/// grid followed by bisection.
pub fn real_roots_in(c: &[f64], lo: f64, hi: f64, grid: usize) -> Vec<f64> {
    let f = |x: f64| c.iter().rev().fold(0.0, |acc, ck| acc * x + ck);
    let mut out = Vec::new();
    let h = (hi - lo) / grid as f64;
    let mut x0 = lo;
    let mut f0 = f(x0);
    for i in 1..=grid {
        let x1 = lo + h * i as f64;
        let f1 = f(x1);
        if f0 == 0.0 {
            out.push(x0);
        } else if f0 * f1 < 0.0 {
            let (mut a, mut b, mut fa) = (x0, x1, f0);
            for _ in 0..200 {
                let m = 0.5 * (a + b);
                let fm = f(m);
                if fm == 0.0 || (b - a).abs() < 1e-15 * (1.0 + m.abs()) {
                    a = m;
                    b = m;
                    break;
                }
                if fa * fm < 0.0 {
                    b = m;
                } else {
                    a = m;
                    fa = fm;
                }
            }
            out.push(0.5 * (a + b));
        }
        x0 = x1;
        f0 = f1;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn companion_roots_of_known_quartic() {
        // (x-1)(x-2)(x^2+1) = x^4 - 3x^3 + 3x^2 - 3x + 2
        let c = [2.0, -3.0, 3.0, -3.0, 1.0];
        let mut r = quartic_companion_roots(&c);
        polish_roots(&c, &mut r, 1e-14);
        let expected = [
            Complex64::new(1.0, 0.0),
            Complex64::new(2.0, 0.0),
            Complex64::new(0.0, 1.0),
            Complex64::new(0.0, -1.0),
        ];
        for e in expected {
            assert!(r.iter().any(|x| (x - e).norm() < 1e-12), "missing {e}");
        }
    }

    #[test]
    fn discriminant_routes_agree() {
        for c in [
            [2.0, -3.0, 3.0, -3.0, 1.0],
            [24.0, -50.0, 35.0, -10.0, 1.0],
            [1.0, 0.0, 0.5, 0.0, 1.0],
            [-0.3, 1.1, 0.7, -2.0, 0.9],
        ] {
            let r = quartic_companion_roots(&c);
            let d1 = discriminant_from_roots(c[4], &r);
            let d2 = quartic_discriminant(&c);
            assert!((d1 - d2).abs() <= 1e-9 * d2.abs().max(1.0), "{d1} vs {d2}");
        }
    }

    #[test]
    fn double_root_discriminant_vanishes() {
        // (x-1)^2 (x+2)(x-3)
        let c = [-6.0, 11.0, -3.0, -3.0, 1.0];
        assert!(quartic_discriminant(&c).abs() < 1e-9);
    }

    #[test]
    fn real_roots_by_bisection() {
        let c = [2.0, -3.0, 1.0]; // (x-1)(x-2)
        let r = real_roots_in(&c, 0.0, 3.0, 64);
        assert_eq!(r.len(), 2);
        assert!((r[0] - 1.0).abs() < 1e-12 && (r[1] - 2.0).abs() < 1e-12);
    }
}
