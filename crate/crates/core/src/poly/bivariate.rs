use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

/// Sparse polynomial in two variables, keyed by exponent pairs.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(into = "Vec<BivariateTerm>", from = "Vec<BivariateTerm>")]
pub struct BivariatePoly {
    terms: BTreeMap<(u32, u32), f64>,
}

/// Serialized form of one term, `c u^i v^j`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BivariateTerm {
    pub i: u32,
    pub j: u32,
    pub c: f64,
}

impl From<BivariatePoly> for Vec<BivariateTerm> {
    fn from(p: BivariatePoly) -> Self {
        p.terms.into_iter().map(|((i, j), c)| BivariateTerm { i, j, c }).collect()
    }
}

impl From<Vec<BivariateTerm>> for BivariatePoly {
    fn from(v: Vec<BivariateTerm>) -> Self {
        let mut p = Self::zero();
        for t in v {
            p.add_term(t.i, t.j, t.c);
        }
        p
    }
}

impl BivariatePoly {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn constant(c: f64) -> Self {
        Self::monomial(0, 0, c)
    }

    pub fn monomial(i: u32, j: u32, c: f64) -> Self {
        let mut p = Self::zero();
        p.add_term(i, j, c);
        p
    }

    pub fn add_term(&mut self, i: u32, j: u32, c: f64) {
        if c == 0.0 {
            return;
        }
        let e = self.terms.entry((i, j)).or_insert(0.0);
        *e += c;
        if *e == 0.0 {
            self.terms.remove(&(i, j));
        }
    }

    pub fn terms(&self) -> impl Iterator<Item = ((u32, u32), f64)> + '_ {
        self.terms.iter().map(|(k, v)| (*k, *v))
    }

    pub fn coefficient(&self, i: u32, j: u32) -> f64 {
        self.terms.get(&(i, j)).copied().unwrap_or(0.0)
    }

    pub fn total_degree(&self) -> u32 {
        self.terms.keys().map(|(i, j)| i + j).max().unwrap_or(0)
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn eval(&self, u: f64, v: f64) -> f64 {
        self.terms
            .iter()
            .map(|((i, j), c)| c * u.powi(*i as i32) * v.powi(*j as i32))
            .sum()
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut out = self.clone();
        for ((i, j), c) in other.terms() {
            out.add_term(i, j, c);
        }
        out
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.scale(-1.0))
    }

    pub fn scale(&self, s: f64) -> Self {
        let mut out = Self::zero();
        for ((i, j), c) in self.terms() {
            out.add_term(i, j, c * s);
        }
        out
    }

    pub fn mul(&self, other: &Self) -> Self {
        let mut out = Self::zero();
        for ((i1, j1), c1) in self.terms() {
            for ((i2, j2), c2) in other.terms() {
                out.add_term(i1 + i2, j1 + j2, c1 * c2);
            }
        }
        out
    }

    pub fn coefficient_norm(&self) -> f64 {
        self.terms.values().map(|c| c * c).sum::<f64>().sqrt()
    }

    /// Unit Euclidean coefficient norm, sign fixed so the first nonzero
    /// coefficient in lexicographic exponent order is positive.
    pub fn normalized(&self) -> Self {
        let n = self.coefficient_norm();
        if n == 0.0 {
            return self.clone();
        }
        let sign = self
            .terms
            .values()
            .next()
            .map_or(1.0, |c| c.signum());
        self.scale(sign / n)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn arithmetic() {
        // (u + v)(u - v) = u^2 - v^2
        let p = BivariatePoly::monomial(1, 0, 1.0).add(&BivariatePoly::monomial(0, 1, 1.0));
        let q = BivariatePoly::monomial(1, 0, 1.0).sub(&BivariatePoly::monomial(0, 1, 1.0));
        let r = p.mul(&q);
        assert_eq!(r.coefficient(2, 0), 1.0);
        assert_eq!(r.coefficient(0, 2), -1.0);
        assert_eq!(r.coefficient(1, 1), 0.0);
        assert_eq!(r.total_degree(), 2);
        assert!((r.eval(3.0, 2.0) - 5.0).abs() < 1e-15);
    }

    #[test]
    fn normalization_fixes_sign_and_norm() {
        let p = BivariatePoly::monomial(0, 0, -3.0).add(&BivariatePoly::monomial(2, 0, 4.0));
        let n = p.normalized();
        assert!((n.coefficient_norm() - 1.0).abs() < 1e-15);
        assert!(n.coefficient(0, 0) > 0.0);
    }
}
