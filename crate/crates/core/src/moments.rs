//! Exact moments of multivariate polynomials under a diagonal Gaussian.
//!
//! Polynomials live in centered variables `u_i = theta_i - mu_i` with
//! `u_i ~ N(0, sigma_i^2)` independent, so the expectation of a monomial
//! factorizes into per-variable scaled moments of the standard normal. This
//! module is the brute-force oracle that every closed-form variance in
//! [`crate::variance`] is checked against; its only approximation is f64
//! coefficient arithmetic.
//!
//! The supported envelope is total degree 8: the highest moment any delta
//! function needs is the 8th (the squared phi-block of the score estimator).

use std::collections::BTreeMap;

use crate::error::{Error, Result};

/// Largest total degree a polynomial may reach.
pub const MAX_DEGREE: usize = 8;
/// Largest single-variable standard-normal moment served.
pub const MAX_MOMENT: usize = 16;

/// Exponent pattern of one monomial: `(variable index, power)` pairs, sorted
/// by variable index, no zero powers.
pub type Exponents = Vec<(usize, u32)>;

/// One term of a [`SparsePolynomial`].
#[derive(Debug, Clone, PartialEq)]
pub struct Monomial {
    pub coefficient: f64,
    pub exponents: Exponents,
}

/// `E[z^n]` for `z ~ N(0, 1)`: `(n - 1)!!` for even `n`, zero for odd.
pub fn std_normal_moment(n: usize) -> Result<f64> {
    if n > MAX_MOMENT {
        return Err(Error::UnsupportedMoment {
            order: n,
            max: MAX_MOMENT,
        });
    }
    if n % 2 == 1 {
        return Ok(0.0);
    }
    let mut m = 1.0;
    let mut k = n as i64 - 1;
    while k > 1 {
        m *= k as f64;
        k -= 2;
    }
    Ok(m)
}

/// A multivariate polynomial in canonical form: at most one term per exponent
/// pattern, no zero coefficients stored.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SparsePolynomial {
    terms: BTreeMap<Exponents, f64>,
}

fn degree_of(exponents: &[(usize, u32)]) -> usize {
    exponents.iter().map(|&(_, p)| p as usize).sum()
}

impl SparsePolynomial {
    /// The zero polynomial.
    pub fn zero() -> Self {
        Self::default()
    }

    /// The constant polynomial `c`.
    pub fn constant(c: f64) -> Self {
        let mut p = Self::zero();
        p.insert(Vec::new(), c);
        p
    }

    /// The polynomial `u_i`.
    pub fn variable(i: usize) -> Self {
        let mut p = Self::zero();
        p.insert(vec![(i, 1)], 1.0);
        p
    }

    /// A single monomial `c * prod u_i^{p_i}`. Powers for repeated indices
    /// accumulate; zero powers are dropped.
    pub fn monomial(coefficient: f64, powers: &[(usize, u32)]) -> Self {
        let mut acc: BTreeMap<usize, u32> = BTreeMap::new();
        for &(i, p) in powers {
            if p > 0 {
                *acc.entry(i).or_insert(0) += p;
            }
        }
        let mut poly = Self::zero();
        poly.insert(acc.into_iter().collect(), coefficient);
        poly
    }

    fn insert(&mut self, exponents: Exponents, coefficient: f64) {
        if coefficient == 0.0 {
            return;
        }
        let entry = self.terms.entry(exponents);
        match entry {
            std::collections::btree_map::Entry::Vacant(v) => {
                v.insert(coefficient);
            }
            std::collections::btree_map::Entry::Occupied(mut o) => {
                let c = o.get() + coefficient;
                if c == 0.0 {
                    o.remove();
                } else {
                    *o.get_mut() = c;
                }
            }
        }
    }

    /// Terms in canonical order.
    pub fn terms(&self) -> impl Iterator<Item = Monomial> + '_ {
        self.terms.iter().map(|(e, &c)| Monomial {
            coefficient: c,
            exponents: e.clone(),
        })
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// Total degree; zero polynomial has degree 0.
    pub fn total_degree(&self) -> usize {
        self.terms.keys().map(|e| degree_of(e)).max().unwrap_or(0)
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut out = self.clone();
        for (e, &c) in &other.terms {
            out.insert(e.clone(), c);
        }
        out
    }

    pub fn scale(&self, c: f64) -> Self {
        let mut out = Self::zero();
        for (e, &a) in &self.terms {
            out.insert(e.clone(), a * c);
        }
        out
    }

    /// Exact term-by-term convolution. Errors if the degree bound
    /// `deg(self) + deg(other)` exceeds [`MAX_DEGREE`].
    pub fn mul(&self, other: &Self) -> Result<Self> {
        let degree = self.total_degree() + other.total_degree();
        if !self.is_zero() && !other.is_zero() && degree > MAX_DEGREE {
            return Err(Error::DegreeOverflow {
                degree,
                max: MAX_DEGREE,
            });
        }
        let mut out = Self::zero();
        for (ea, &ca) in &self.terms {
            for (eb, &cb) in &other.terms {
                let mut exps: BTreeMap<usize, u32> = ea.iter().copied().collect();
                for &(i, p) in eb {
                    *exps.entry(i).or_insert(0) += p;
                }
                out.insert(exps.into_iter().collect(), ca * cb);
            }
        }
        Ok(out)
    }

    /// Evaluate at the point `u`.
    pub fn eval(&self, u: &[f64]) -> f64 {
        self.terms
            .iter()
            .map(|(e, &c)| c * e.iter().map(|&(i, p)| u[i].powi(p as i32)).product::<f64>())
            .sum()
    }

    /// `E[p(u)]` for `u_i ~ N(0, sigma_i^2)` independent.
    pub fn expect(&self, sigma: &[f64]) -> Result<f64> {
        let mut total = 0.0;
        for (exponents, &coefficient) in &self.terms {
            if degree_of(exponents) > MAX_DEGREE {
                return Err(Error::DegreeOverflow {
                    degree: degree_of(exponents),
                    max: MAX_DEGREE,
                });
            }
            let mut term = coefficient;
            for &(i, p) in exponents {
                if i >= sigma.len() {
                    return Err(Error::IndexOutOfRange {
                        index: i,
                        len: sigma.len(),
                    });
                }
                term *= sigma[i].powi(p as i32) * std_normal_moment(p as usize)?;
                if term == 0.0 {
                    break;
                }
            }
            total += term;
        }
        Ok(total)
    }

    /// `Var[p(u)] = E[p^2] - E[p]^2`. Requires `deg(p) <= 4` so the square
    /// stays inside the envelope.
    pub fn variance(&self, sigma: &[f64]) -> Result<f64> {
        let mean = self.expect(sigma)?;
        let second = self.mul(self)?.expect(sigma)?;
        Ok(second - mean * mean)
    }
}
