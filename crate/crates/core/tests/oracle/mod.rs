//! Reference solver for the law-of-cosines system, working on the three
//! equations directly with no elimination: total-degree homotopy
//! continuation, backed by multi-start complex Newton.

#![allow(dead_code)]

use num_complex::Complex64 as C;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn residual(sides: [f64; 3], cos: [f64; 3], s: [C; 3]) -> [C; 3] {
    let [a, b, c] = sides;
    let [ca, cb, cg] = cos;
    let [s1, s2, s3] = s;
    [
        s2 * s2 + s3 * s3 - 2.0 * ca * s2 * s3 - a * a,
        s1 * s1 + s3 * s3 - 2.0 * cb * s1 * s3 - b * b,
        s1 * s1 + s2 * s2 - 2.0 * cg * s1 * s2 - c * c,
    ]
}

fn jacobian(cos: [f64; 3], s: [C; 3]) -> [[C; 3]; 3] {
    let [ca, cb, cg] = cos;
    let [s1, s2, s3] = s;
    let z = C::new(0.0, 0.0);
    [
        [z, 2.0 * (s2 - ca * s3), 2.0 * (s3 - ca * s2)],
        [2.0 * (s1 - cb * s3), z, 2.0 * (s3 - cb * s1)],
        [2.0 * (s1 - cg * s2), 2.0 * (s2 - cg * s1), z],
    ]
}

fn det(m: &[[C; 3]; 3]) -> C {
    m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
        + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
}

fn solve3(m: &[[C; 3]; 3], r: [C; 3]) -> Option<[C; 3]> {
    let d = det(m);
    if d.norm() == 0.0 {
        return None;
    }
    let mut out = [C::new(0.0, 0.0); 3];
    for (k, o) in out.iter_mut().enumerate() {
        let mut mk = *m;
        for row in 0..3 {
            mk[row][k] = r[row];
        }
        *o = det(&mk) / d;
    }
    Some(out)
}

fn norm(v: &[C; 3]) -> f64 {
    v.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
}

/// Distance modulo the global sign `s -> -s`.
pub fn signed_distance(a: &[C; 3], b: &[C; 3]) -> f64 {
    let p = norm(&[a[0] - b[0], a[1] - b[1], a[2] - b[2]]);
    let m = norm(&[a[0] + b[0], a[1] + b[1], a[2] + b[2]]);
    p.min(m)
}

fn newton(sides: [f64; 3], cos: [f64; 3], mut s: [C; 3]) -> Option<[C; 3]> {
    let scale = sides.iter().fold(0.0f64, |m, v| m.max(v * v));
    for _ in 0..200 {
        let f = residual(sides, cos, s);
        if norm(&f) <= 1e-14 * (scale + norm(&s).powi(2)) {
            // A few extra steps to reach the attainable accuracy.
            for _ in 0..3 {
                let f = residual(sides, cos, s);
                if let Some(d) = solve3(&jacobian(cos, s), f) {
                    s = [s[0] - d[0], s[1] - d[1], s[2] - d[2]];
                }
            }
            return Some(s);
        }
        let d = solve3(&jacobian(cos, s), f)?;
        s = [s[0] - d[0], s[1] - d[1], s[2] - d[2]];
        if !s.iter().all(|v| v.re.is_finite() && v.im.is_finite()) || norm(&s) > 1e8 {
            return None;
        }
    }
    None
}

fn add(a: [C; 3], b: [C; 3], k: C) -> [C; 3] {
    [a[0] + k * b[0], a[1] + k * b[1], a[2] + k * b[2]]
}

/// `H(s, t) = (1 - t) γ G(s) + t F(s)` with `G_i = s_i² - 1`.
struct Homotopy {
    sides: [f64; 3],
    cos: [f64; 3],
    gamma: C,
}

impl Homotopy {
    fn value(&self, s: [C; 3], t: f64) -> [C; 3] {
        let f = residual(self.sides, self.cos, s);
        let g = s.map(|v| v * v - 1.0);
        [0, 1, 2].map(|i| (1.0 - t) * self.gamma * g[i] + t * f[i])
    }

    fn jacobian(&self, s: [C; 3], t: f64) -> [[C; 3]; 3] {
        let mut j = jacobian(self.cos, s);
        for (i, row) in j.iter_mut().enumerate() {
            for v in row.iter_mut() {
                *v *= t;
            }
            row[i] += (1.0 - t) * self.gamma * 2.0 * s[i];
        }
        j
    }

    fn velocity(&self, s: [C; 3], t: f64) -> Option<[C; 3]> {
        let f = residual(self.sides, self.cos, s);
        let g = s.map(|v| v * v - 1.0);
        let ht = [0, 1, 2].map(|i| f[i] - self.gamma * g[i]);
        solve3(&self.jacobian(s, t), ht).map(|d| d.map(|v| -v))
    }

    /// Newton at fixed `t`; `None` unless the steps contract.
    fn correct(&self, mut s: [C; 3], t: f64) -> Option<[C; 3]> {
        let mut last = f64::INFINITY;
        for _ in 0..4 {
            let d = solve3(&self.jacobian(s, t), self.value(s, t))?;
            let n = norm(&d);
            if n > 0.5 * last && n > 1e-13 * (1.0 + norm(&s)) {
                return None;
            }
            s = add(s, d, C::new(-1.0, 0.0));
            last = n;
            if n <= 1e-11 * (1.0 + norm(&s)) {
                return Some(s);
            }
        }
        (last <= 1e-8 * (1.0 + norm(&s))).then_some(s)
    }

    /// Tracks one start root from `t = 0` to `t = 1` with RK4 prediction.
    fn track(&self, mut s: [C; 3]) -> Option<[C; 3]> {
        let (mut t, mut dt) = (0.0f64, 1e-2f64);
        let mut steps = 0;
        while t < 1.0 {
            steps += 1;
            if steps > 20_000 || dt < 1e-14 || norm(&s) > 1e8 {
                return None;
            }
            let h = dt.min(1.0 - t);
            let k1 = self.velocity(s, t)?;
            let k2 = self.velocity(add(s, k1, C::new(h / 2.0, 0.0)), t + h / 2.0)?;
            let k3 = self.velocity(add(s, k2, C::new(h / 2.0, 0.0)), t + h / 2.0)?;
            let k4 = self.velocity(add(s, k3, C::new(h, 0.0)), t + h)?;
            let mut p = s;
            for (k, w) in [(k1, 1.0), (k2, 2.0), (k3, 2.0), (k4, 1.0)] {
                p = add(p, k, C::new(h * w / 6.0, 0.0));
            }
            match self.correct(p, t + h) {
                Some(next) => {
                    s = next;
                    t += h;
                    dt = (dt * 2.0).min(5e-2);
                }
                None => dt /= 2.0,
            }
        }
        Some(s)
    }
}

/// The eight endpoints of the total-degree homotopy, polished.
pub fn homotopy_solutions(sides: [f64; 3], cos: [f64; 3]) -> Vec<[C; 3]> {
    let h = Homotopy {
        sides,
        cos,
        gamma: C::from_polar(1.0, 0.8),
    };
    let one = C::new(1.0, 0.0);
    let mut out = Vec::new();
    for mask in 0..8 {
        let start = [0, 1, 2].map(|i| if mask >> i & 1 == 1 { -one } else { one });
        if let Some(s) = h.track(start).and_then(|s| newton(sides, cos, s)) {
            out.push(s);
        }
    }
    out
}

/// Distinct solutions modulo sign: homotopy endpoints first, then up to
/// `starts` random Newton starts until four are found.
pub fn solve_all(sides: [f64; 3], cos: [f64; 3], starts: usize, seed: u64) -> Vec<[C; 3]> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let scale = sides.iter().fold(0.0f64, |m, v| m.max(*v));
    let mut found: Vec<[C; 3]> = Vec::new();
    for s in homotopy_solutions(sides, cos) {
        if found.iter().all(|f| signed_distance(f, &s) > 1e-8 * (1.0 + norm(&s))) {
            found.push(s);
        }
    }
    if found.len() == 4 {
        return found;
    }
    for k in 0..starts {
        // Odd starts share one modulus and phase: far solutions have nearly
        // equal components and independent phases rarely land near them.
        let common = C::from_polar(
            scale * 10f64.powf(rng.gen_range(-1.0..2.0)),
            rng.gen_range(0.0..std::f64::consts::TAU),
        );
        let s0 = [0, 1, 2].map(|_| {
            if k % 2 == 1 {
                common * C::new(1.0 + rng.gen_range(-0.3..0.3), rng.gen_range(-0.3..0.3))
            } else {
                let r = scale * 10f64.powf(rng.gen_range(-1.0..2.0));
                C::from_polar(r, rng.gen_range(0.0..std::f64::consts::TAU))
            }
        });
        let Some(s) = newton(sides, cos, s0) else { continue };
        // Real coefficients: the conjugate is a solution too, and a good start.
        let conj = newton(sides, cos, s.map(|v| v.conj()));
        for s in std::iter::once(s).chain(conj) {
            if found.iter().all(|f| signed_distance(f, &s) > 1e-8 * (1.0 + norm(&s))) {
                found.push(s);
            }
        }
        if found.len() == 4 {
            break;
        }
    }
    found
}
