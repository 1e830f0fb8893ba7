//! Marginal variances of the gradient estimators.
//!
//! Three independent routes produce per-element variances of the
//! single-sample delta functions under a quadratic log joint:
//!
//! - closed forms ([`analytic_var_rp_mu`], [`analytic_var_rp_phi`],
//!   [`analytic_var_rb_mu`], [`analytic_var_rb_phi`]);
//! - exact moment computation ([`exact_var`]): the delta function is built
//!   as a polynomial in `u = theta - mu` and its variance is evaluated with
//!   [`crate::moments`]. This is the only exact route for the score
//!   estimator, whose full closed form is not tractable term-by-term here;
//! - Monte Carlo ([`mc_variance`]) on any model, quadratic or not.
//!
//! All variances are of the single-sample delta; averaging `S` samples
//! divides every entry by `S`, so comparisons between estimators are free of
//! the sample count.

use std::cmp::Ordering;
use std::io::{self, Write};

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimators::{delta_at_sample, expansion_for, map_chunks, EstimatorKind};
use crate::models::{Model, QuadraticExpansion};
use crate::moments::SparsePolynomial;
use crate::rng::RngStream;
use crate::variational::MeanFieldGaussian;

/// Which half of the `(mu, phi)` layout an element belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Block {
    Mu,
    Phi,
}

impl Block {
    pub fn name(self) -> &'static str {
        match self {
            Block::Mu => "mu",
            Block::Phi => "phi",
        }
    }
}

/// How a [`VarianceReport`] was produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "method")]
pub enum VarianceMethod {
    ClosedForm,
    ExactMoment,
    MonteCarlo { samples: usize, replications: usize },
}

impl VarianceMethod {
    pub fn name(self) -> &'static str {
        match self {
            VarianceMethod::ClosedForm => "closed_form",
            VarianceMethod::ExactMoment => "exact_moment",
            VarianceMethod::MonteCarlo { .. } => "monte_carlo",
        }
    }
}

/// Per-element marginal variances of one estimator's delta function, in the
/// `(mu, phi)` layout.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VarianceReport {
    pub kind: EstimatorKind,
    pub per_element: Vec<f64>,
    pub method: VarianceMethod,
}

impl VarianceReport {
    pub fn dim(&self) -> usize {
        self.per_element.len() / 2
    }

    /// The trace metric: the sum of the per-element variances.
    pub fn trace(&self) -> f64 {
        self.per_element.iter().sum()
    }

    /// Variance of one element.
    pub fn element(&self, block: Block, i: usize) -> f64 {
        match block {
            Block::Mu => self.per_element[i],
            Block::Phi => self.per_element[self.dim() + i],
        }
    }

    /// Sum over one block only.
    pub fn block_trace(&self, block: Block) -> f64 {
        let k = self.dim();
        match block {
            Block::Mu => self.per_element[..k].iter().sum(),
            Block::Phi => self.per_element[k..].iter().sum(),
        }
    }

    /// Write `param_index, block, kind, method, variance` rows.
    pub fn write_csv(&self, out: &mut impl Write) -> io::Result<()> {
        writeln!(out, "param_index,block,kind,method,variance")?;
        let k = self.dim();
        for (j, v) in self.per_element.iter().enumerate() {
            let (block, idx) = if j < k {
                (Block::Mu, j)
            } else {
                (Block::Phi, j - k)
            };
            writeln!(
                out,
                "{idx},{},{},{},{:.16e}",
                block.name(),
                self.kind.name(),
                self.method.name(),
                v
            )?;
        }
        Ok(())
    }
}

/// The trace metric of a report.
pub fn trace_metric(report: &VarianceReport) -> f64 {
    report.trace()
}

/// Compare two traces over the same parameter layout.
/// `Ordering::Less` means the first report has the smaller trace.
pub fn compare_traces(a: &VarianceReport, b: &VarianceReport) -> Result<Ordering> {
    if a.per_element.len() != b.per_element.len() {
        return Err(Error::DimensionMismatch {
            expected: a.per_element.len(),
            got: b.per_element.len(),
        });
    }
    Ok(a.trace().total_cmp(&b.trace()))
}

fn check_element(expansion: &QuadraticExpansion, sigma: &DVector<f64>, i: usize) -> Result<()> {
    let k = expansion.dim();
    if sigma.len() != k {
        return Err(Error::DimensionMismatch {
            expected: k,
            got: sigma.len(),
        });
    }
    if i >= k {
        return Err(Error::IndexOutOfRange { index: i, len: k });
    }
    Ok(())
}

/// RP mu-element variance: `sum_m H_im^2 sigma_m^2`.
pub fn analytic_var_rp_mu(expansion: &QuadraticExpansion, sigma: &DVector<f64>, i: usize) -> f64 {
    expansion.hessian_row_sq_dot(sigma, i)
}

/// RP phi-element variance:
/// `sigma_i^2 (sum_m H_im^2 sigma_m^2 + H_ii^2 sigma_i^2 + G_i^2)`.
pub fn analytic_var_rp_phi(expansion: &QuadraticExpansion, sigma: &DVector<f64>, i: usize) -> f64 {
    let row = expansion.hessian_row_sq_dot(sigma, i);
    let hii = expansion.h[(i, i)];
    let si2 = sigma[i] * sigma[i];
    si2 * (row + hii * hii * si2 + expansion.g[i] * expansion.g[i])
}

/// RB mu-element variance:
/// `3 sum_m H_im^2 sigma_m^2 + (3/4) H_ii^2 sigma_i^2 + 2 G_i^2`.
pub fn analytic_var_rb_mu(expansion: &QuadraticExpansion, sigma: &DVector<f64>, i: usize) -> f64 {
    let row = expansion.hessian_row_sq_dot(sigma, i);
    let hii = expansion.h[(i, i)];
    let si2 = sigma[i] * sigma[i];
    3.0 * row + 0.75 * hii * hii * si2 + 2.0 * expansion.g[i] * expansion.g[i]
}

/// RB phi-element variance:
/// `sigma_i^2 (10 sum_{m != i} H_im^2 sigma_m^2 + (37/2) H_ii^2 sigma_i^2 + 10 G_i^2)`.
/// The row sum excludes the diagonal; including it double-counts against the
/// `h_{-i}` convention of [`crate::estimators::h_minus_i`], as the moment
/// oracle confirms.
pub fn analytic_var_rb_phi(expansion: &QuadraticExpansion, sigma: &DVector<f64>, i: usize) -> f64 {
    let hii = expansion.h[(i, i)];
    let si2 = sigma[i] * sigma[i];
    let off_row = expansion.hessian_row_sq_dot(sigma, i) - hii * hii * si2;
    si2 * (10.0 * off_row + 18.5 * hii * hii * si2 + 10.0 * expansion.g[i] * expansion.g[i])
}

/// The expanded log joint as a polynomial in `u = theta - mu`.
fn h_polynomial(expansion: &QuadraticExpansion) -> SparsePolynomial {
    let k = expansion.dim();
    let mut p = SparsePolynomial::constant(expansion.c);
    for m in 0..k {
        p = p.add(&SparsePolynomial::monomial(expansion.g[m], &[(m, 1)]));
        for n in 0..k {
            p = p.add(&SparsePolynomial::monomial(
                0.5 * expansion.h[(m, n)],
                &[(m, 1), (n, 1)],
            ));
        }
    }
    p
}

/// `h_{-i}` as a polynomial in `u`.
fn h_minus_i_polynomial(expansion: &QuadraticExpansion, i: usize) -> SparsePolynomial {
    let k = expansion.dim();
    let mut p = SparsePolynomial::monomial(expansion.g[i], &[(i, 1)]);
    for m in 0..k {
        if m != i {
            p = p.add(&SparsePolynomial::monomial(
                expansion.h[(i, m)],
                &[(i, 1), (m, 1)],
            ));
        }
    }
    p.add(&SparsePolynomial::monomial(
        0.5 * expansion.h[(i, i)],
        &[(i, 2)],
    ))
}

/// One element of a delta function as a polynomial in `u = theta - mu` with
/// `u_m ~ N(0, sigma_m^2)`. For RP elements the base noise enters through
/// `u = sigma o z`, so the same distribution applies.
pub fn delta_polynomial(
    kind: EstimatorKind,
    expansion: &QuadraticExpansion,
    sigma: &DVector<f64>,
    i: usize,
    block: Block,
) -> Result<SparsePolynomial> {
    check_element(expansion, sigma, i)?;
    let inv_var = 1.0 / (sigma[i] * sigma[i]);
    // grad log q factors: mu-block u_i / sigma_i^2, phi-block -1 + u_i^2 / sigma_i^2.
    let score_factor = match block {
        Block::Mu => SparsePolynomial::monomial(inv_var, &[(i, 1)]),
        Block::Phi => {
            SparsePolynomial::constant(-1.0).add(&SparsePolynomial::monomial(inv_var, &[(i, 2)]))
        }
    };
    match kind {
        EstimatorKind::Score => h_polynomial(expansion).mul(&score_factor),
        EstimatorKind::Rb => h_minus_i_polynomial(expansion, i).mul(&score_factor),
        EstimatorKind::Rp => {
            // grad h(theta)_i = G_i + sum_m H_im u_m.
            let mut g = SparsePolynomial::constant(expansion.g[i]);
            for m in 0..expansion.dim() {
                g = g.add(&SparsePolynomial::monomial(expansion.h[(i, m)], &[(m, 1)]));
            }
            match block {
                Block::Mu => Ok(g),
                Block::Phi => g.mul(&SparsePolynomial::variable(i)),
            }
        }
    }
}

/// Exact variance of one delta element under the expansion, via the moment
/// engine.
pub fn exact_var(
    kind: EstimatorKind,
    expansion: &QuadraticExpansion,
    sigma: &DVector<f64>,
    i: usize,
    block: Block,
) -> Result<f64> {
    let poly = delta_polynomial(kind, expansion, sigma, i, block)?;
    poly.variance(sigma.as_slice())
}

/// Exact variance of one score-function delta element. The closed form for
/// this estimator has no complete tractable expression, so the exact-moment
/// route is authoritative.
pub fn exact_var_score(
    expansion: &QuadraticExpansion,
    sigma: &DVector<f64>,
    i: usize,
    block: Block,
) -> Result<f64> {
    exact_var(EstimatorKind::Score, expansion, sigma, i, block)
}

/// All `2k` closed-form elements for RP or RB. Errors for the score kind,
/// which has no closed form here.
pub fn closed_form_report(
    kind: EstimatorKind,
    expansion: &QuadraticExpansion,
    sigma: &DVector<f64>,
) -> Result<VarianceReport> {
    let k = expansion.dim();
    check_element(expansion, sigma, 0)?;
    let per = |f: fn(&QuadraticExpansion, &DVector<f64>, usize) -> f64,
               g: fn(&QuadraticExpansion, &DVector<f64>, usize) -> f64| {
        (0..k)
            .map(|i| f(expansion, sigma, i))
            .chain((0..k).map(|i| g(expansion, sigma, i)))
            .collect()
    };
    let per_element: Vec<f64> = match kind {
        EstimatorKind::Rp => per(analytic_var_rp_mu, analytic_var_rp_phi),
        EstimatorKind::Rb => per(analytic_var_rb_mu, analytic_var_rb_phi),
        EstimatorKind::Score => return Err(Error::HessianUnavailable),
    };
    Ok(VarianceReport {
        kind,
        per_element,
        method: VarianceMethod::ClosedForm,
    })
}

/// All `2k` exact-moment elements for any estimator kind.
pub fn exact_moment_report(
    kind: EstimatorKind,
    expansion: &QuadraticExpansion,
    sigma: &DVector<f64>,
) -> Result<VarianceReport> {
    let k = expansion.dim();
    let mut per_element = Vec::with_capacity(2 * k);
    for i in 0..k {
        per_element.push(exact_var(kind, expansion, sigma, i, Block::Mu)?);
    }
    for i in 0..k {
        per_element.push(exact_var(kind, expansion, sigma, i, Block::Phi)?);
    }
    Ok(VarianceReport {
        kind,
        per_element,
        method: VarianceMethod::ExactMoment,
    })
}

#[derive(Clone, Default)]
struct PowerSums {
    count: usize,
    s1: Vec<f64>,
    s2: Vec<f64>,
    s3: Vec<f64>,
    s4: Vec<f64>,
    err: Option<Error>,
}

impl PowerSums {
    fn accumulate(&mut self, x: &DVector<f64>) {
        if self.s1.is_empty() {
            self.s1 = vec![0.0; x.len()];
            self.s2 = vec![0.0; x.len()];
            self.s3 = vec![0.0; x.len()];
            self.s4 = vec![0.0; x.len()];
        }
        self.count += 1;
        for (j, &v) in x.iter().enumerate() {
            let v2 = v * v;
            self.s1[j] += v;
            self.s2[j] += v2;
            self.s3[j] += v2 * v;
            self.s4[j] += v2 * v2;
        }
    }

    fn merge(&mut self, other: &PowerSums) {
        if other.count == 0 {
            if self.err.is_none() {
                self.err = other.err.clone();
            }
            return;
        }
        if self.s1.is_empty() {
            *self = other.clone();
            return;
        }
        self.count += other.count;
        for j in 0..self.s1.len() {
            self.s1[j] += other.s1[j];
            self.s2[j] += other.s2[j];
            self.s3[j] += other.s3[j];
            self.s4[j] += other.s4[j];
        }
        if self.err.is_none() {
            self.err = other.err.clone();
        }
    }
}

/// Monte Carlo per-element variance of the single-sample delta over
/// `samples * replications` draws (unbiased `n - 1` divisor). Draw `t` uses
/// substream `t % samples` of replication substream `t / samples`, so the
/// report is bit-identical for any worker count.
pub fn mc_variance(
    kind: EstimatorKind,
    lambda: &MeanFieldGaussian,
    model: &dyn Model,
    samples: usize,
    replications: usize,
    rng: &RngStream,
) -> Result<VarianceReport> {
    mc_variance_with_se(kind, lambda, model, samples, replications, rng, 1).map(|(r, _)| r)
}

/// [`mc_variance`] with an explicit worker count plus the standard error of
/// each variance estimate (from the empirical fourth central moment).
pub fn mc_variance_with_se(
    kind: EstimatorKind,
    lambda: &MeanFieldGaussian,
    model: &dyn Model,
    samples: usize,
    replications: usize,
    rng: &RngStream,
    workers: usize,
) -> Result<(VarianceReport, Vec<f64>)> {
    let total = samples * replications;
    if total < 2 {
        return Err(Error::InvalidCount {
            what: "total draws",
        });
    }
    let expansion = expansion_for(kind, lambda, model)?;
    let rep_streams: Vec<RngStream> = rng.split_substreams(replications);

    let partials = map_chunks(total, workers, |range| {
        let mut acc = PowerSums::default();
        for t in range {
            let rep = (t / samples as u64) as usize;
            let s = t % samples as u64;
            match delta_at_sample(
                kind,
                lambda,
                model,
                expansion.as_ref(),
                &rep_streams[rep],
                s,
            ) {
                Ok(delta) => acc.accumulate(&delta),
                Err(e) => {
                    acc.err.get_or_insert(e);
                    break;
                }
            }
        }
        acc
    });

    let mut acc = PowerSums::default();
    for p in &partials {
        acc.merge(p);
    }
    if let Some(e) = acc.err {
        return Err(e);
    }

    let n = acc.count as f64;
    let dim = acc.s1.len();
    let mut per_element = Vec::with_capacity(dim);
    let mut se = Vec::with_capacity(dim);
    for j in 0..dim {
        let mean = acc.s1[j] / n;
        // Clamp away the tiny negatives raw power sums can round to.
        let var = ((acc.s2[j] - n * mean * mean) / (n - 1.0)).max(0.0);
        // Fourth central moment from raw power sums.
        let m4 = (acc.s4[j] - 4.0 * mean * acc.s3[j] + 6.0 * mean * mean * acc.s2[j]
            - 3.0 * n * mean.powi(4))
            / n;
        per_element.push(var);
        se.push(((m4 - var * var).max(0.0) / n).sqrt());
    }
    Ok((
        VarianceReport {
            kind,
            per_element,
            method: VarianceMethod::MonteCarlo {
                samples,
                replications,
            },
        },
        se,
    ))
}
