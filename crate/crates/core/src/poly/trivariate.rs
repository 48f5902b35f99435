use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Affine map from scene coordinates to the fitting cube `[-1, 1]^3`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScaleBox {
    pub center: [f64; 3],
    pub half_width: [f64; 3],
}

impl ScaleBox {
    pub fn identity() -> Self {
        Self {
            center: [0.0; 3],
            half_width: [1.0; 3],
        }
    }

    /// Smallest box containing `points`; flat axes get unit half-width.
    pub fn bounding(points: &[[f64; 3]]) -> Self {
        let mut lo = [f64::INFINITY; 3];
        let mut hi = [f64::NEG_INFINITY; 3];
        for p in points {
            for a in 0..3 {
                lo[a] = lo[a].min(p[a]);
                hi[a] = hi[a].max(p[a]);
            }
        }
        let mut center = [0.0; 3];
        let mut half_width = [1.0; 3];
        for a in 0..3 {
            center[a] = 0.5 * (lo[a] + hi[a]);
            let h = 0.5 * (hi[a] - lo[a]);
            if h > 1e-12 {
                half_width[a] = h;
            }
        }
        Self { center, half_width }
    }

    pub fn to_scaled(&self, p: [f64; 3]) -> [f64; 3] {
        [0, 1, 2].map(|a| (p[a] - self.center[a]) / self.half_width[a])
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TermRecord {
    e: [u32; 3],
    c: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PolyRecord {
    degree: u32,
    scale: ScaleBox,
    terms: Vec<TermRecord>,
}

/// Sparse trivariate polynomial whose monomials are in the scaled coordinates
/// of an attached [`ScaleBox`].
#[derive(Debug, Clone, PartialEq)]
pub struct TrivariatePoly {
    terms: BTreeMap<[u32; 3], f64>,
    scale: ScaleBox,
}

/// Largest exponent accepted when parsing polynomial files.
pub const MAX_EXPONENT: u32 = 64;

impl TrivariatePoly {
    pub fn new(scale: ScaleBox) -> Self {
        Self {
            terms: BTreeMap::new(),
            scale,
        }
    }

    pub fn from_terms(scale: ScaleBox, terms: impl IntoIterator<Item = ([u32; 3], f64)>) -> Self {
        let mut p = Self::new(scale);
        for (e, c) in terms {
            p.add_term(e, c);
        }
        p
    }

    /// `x² + y² - 1` in unscaled coordinates.
    pub fn danger_cylinder() -> Self {
        Self::from_terms(
            ScaleBox::identity(),
            [([2, 0, 0], 1.0), ([0, 2, 0], 1.0), ([0, 0, 0], -1.0)],
        )
    }

    pub fn add_term(&mut self, e: [u32; 3], c: f64) {
        if c == 0.0 {
            return;
        }
        let v = self.terms.entry(e).or_insert(0.0);
        *v += c;
        if *v == 0.0 {
            self.terms.remove(&e);
        }
    }

    pub fn scale_box(&self) -> ScaleBox {
        self.scale
    }

    pub fn terms(&self) -> impl Iterator<Item = ([u32; 3], f64)> + '_ {
        self.terms.iter().map(|(e, c)| (*e, *c))
    }

    pub fn coefficient(&self, e: [u32; 3]) -> f64 {
        self.terms.get(&e).copied().unwrap_or(0.0)
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn total_degree(&self) -> u32 {
        self.terms.keys().map(|e| e[0] + e[1] + e[2]).max().unwrap_or(0)
    }

    pub fn coefficient_norm(&self) -> f64 {
        self.terms.values().map(|c| c * c).sum::<f64>().sqrt()
    }

    /// Evaluates at scaled coordinates.
    pub fn eval_scaled(&self, u: [f64; 3]) -> f64 {
        let d = self.total_degree() as usize;
        let pw = u.map(|ua| {
            std::iter::successors(Some(1.0), |v| Some(v * ua))
                .take(d + 1)
                .collect::<Vec<f64>>()
        });
        self.terms
            .iter()
            .map(|(e, c)| c * pw[0][e[0] as usize] * pw[1][e[1] as usize] * pw[2][e[2] as usize])
            .sum()
    }

    /// Evaluates at scene coordinates.
    pub fn eval(&self, p: [f64; 3]) -> f64 {
        self.eval_scaled(self.scale.to_scaled(p))
    }

    /// Gradient with respect to the scaled coordinates.
    pub fn gradient_scaled(&self, u: [f64; 3]) -> [f64; 3] {
        let mut g = [0.0; 3];
        for (e, c) in &self.terms {
            for a in 0..3 {
                if e[a] == 0 {
                    continue;
                }
                let mut term = c * e[a] as f64;
                for b in 0..3 {
                    let k = if a == b { e[b] - 1 } else { e[b] };
                    term *= u[b].powi(k as i32);
                }
                g[a] += term;
            }
        }
        g
    }

    pub fn mul(&self, other: &Self) -> Self {
        let mut out = Self::new(self.scale);
        for (e1, c1) in &self.terms {
            for (e2, c2) in &other.terms {
                out.add_term([e1[0] + e2[0], e1[1] + e2[1], e1[2] + e2[2]], c1 * c2);
            }
        }
        out
    }

    /// Unit coefficient norm with the first nonzero coefficient (lexicographic
    /// exponent order) positive.
    pub fn normalized(&self) -> Self {
        let n = self.coefficient_norm();
        if n == 0.0 {
            return self.clone();
        }
        let sign = self.terms.values().next().map_or(1.0, |c| c.signum());
        let mut out = Self::new(self.scale);
        for (e, c) in &self.terms {
            out.add_term(*e, c * sign / n);
        }
        out
    }

    pub fn to_json(&self) -> String {
        let rec = PolyRecord {
            degree: self.total_degree(),
            scale: self.scale,
            terms: self.terms().map(|(e, c)| TermRecord { e, c }).collect(),
        };
        serde_json::to_string_pretty(&rec).expect("polynomial record serializes")
    }

    /// Parses the JSON produced by [`TrivariatePoly::to_json`], validating it.
    pub fn from_json(text: &str) -> Result<Self> {
        let rec: PolyRecord = serde_json::from_str(text)?;
        let invalid = |m: String| Err(Error::InvalidPolynomial(m));
        for a in 0..3 {
            let h = rec.scale.half_width[a];
            if !(h.is_finite() && h > 0.0) || !rec.scale.center[a].is_finite() {
                return invalid(format!("scale axis {a} is not a finite positive box"));
            }
        }
        if rec.terms.is_empty() {
            return invalid("no terms".into());
        }
        let mut p = Self::new(rec.scale);
        for t in &rec.terms {
            if t.e.iter().any(|k| *k > MAX_EXPONENT) {
                return invalid(format!("exponent {:?} exceeds {MAX_EXPONENT}", t.e));
            }
            if !t.c.is_finite() {
                return invalid(format!("coefficient of {:?} is not finite", t.e));
            }
            if p.terms.contains_key(&t.e) {
                return invalid(format!("duplicate monomial {:?}", t.e));
            }
            p.add_term(t.e, t.c);
        }
        if p.total_degree() != rec.degree && !p.is_empty() {
            return invalid(format!(
                "declared degree {} but terms reach {}",
                rec.degree,
                p.total_degree()
            ));
        }
        Ok(p)
    }
}
