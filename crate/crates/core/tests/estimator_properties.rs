//! Statistical properties that tie the exact machinery to sampling paths.

use nalgebra::{DMatrix, DVector};
use vigrad::estimators::EstimatorKind;
use vigrad::models::ExactQuadratic;
use vigrad::moments::SparsePolynomial;
use vigrad::optimizer::{run_vi_with, Schedule, ViConfig};
use vigrad::rng::{make_rng, RngStream};
use vigrad::variational::MeanFieldGaussian;

fn random_polynomial(rng: &mut RngStream, dim: usize, max_degree: u32) -> SparsePolynomial {
    let n_terms = 2 + (rng.uniform() * 6.0) as usize;
    let mut p = SparsePolynomial::zero();
    for _ in 0..n_terms {
        let coeff = 4.0 * rng.uniform() - 2.0;
        let mut degree_left = max_degree;
        let mut powers = Vec::new();
        while degree_left > 0 && rng.uniform() < 0.7 {
            let var = (rng.uniform() * dim as f64) as usize;
            let pw = 1 + (rng.uniform() * degree_left as f64) as u32;
            powers.push((var, pw.min(degree_left)));
            degree_left -= pw.min(degree_left);
        }
        p = p.add(&SparsePolynomial::monomial(coeff, &powers));
    }
    p
}

// variance() agrees with a Monte Carlo estimate within 5 standard errors on
// 1000 random polynomials of degree <= 3 in up to 4 variables.
#[test]
fn polynomial_variance_matches_monte_carlo() {
    let n_polys = 1000;
    let draws = 100_000usize;
    let root = make_rng(5150);

    let check_range = |range: std::ops::Range<u64>| {
        for poly_idx in range {
            let mut setup = root.substream(poly_idx);
            let dim = 1 + (setup.uniform() * 4.0) as usize;
            let poly = random_polynomial(&mut setup, dim, 3);
            let sigma: Vec<f64> = (0..dim).map(|_| 0.3 + 1.2 * setup.uniform()).collect();
            let exact = poly.variance(&sigma).unwrap();

            let mut sample_rng = root.substream(poly_idx ^ 0xDEAD_BEEF);
            let mut s1 = 0.0;
            let mut s2 = 0.0;
            let mut s3 = 0.0;
            let mut s4 = 0.0;
            let mut u = vec![0.0; dim];
            for _ in 0..draws {
                for (j, slot) in u.iter_mut().enumerate() {
                    *slot = sigma[j] * sample_rng.normal();
                }
                let v = poly.eval(&u);
                let v2 = v * v;
                s1 += v;
                s2 += v2;
                s3 += v2 * v;
                s4 += v2 * v2;
            }
            let n = draws as f64;
            let mean = s1 / n;
            let var = (s2 - n * mean * mean) / (n - 1.0);
            let m4 = (s4 - 4.0 * mean * s3 + 6.0 * mean * mean * s2 - 3.0 * n * mean.powi(4)) / n;
            let se = ((m4 - var * var).max(0.0) / n).sqrt();
            // Roundoff floor: the raw power sums cancel to ~eps * E[p^2].
            let band = 5.0 * se + 1e-7 * (exact.abs() + s2.abs() / n + 1.0);
            assert!(
                (var - exact).abs() <= band,
                "polynomial {poly_idx}: mc {var} vs exact {exact} (se {se})"
            );
        }
    };

    let mid = n_polys / 2;
    std::thread::scope(|scope| {
        scope.spawn(|| check_range(0..mid));
        check_range(mid..n_polys);
    });
}

// On a matched quadratic benchmark the RP-driven run reaches the optimum
// (within 0.1 of the exact peak ELBO, smoothed) at least as fast as the
// score-driven run on >= 8 of 10 seeds.
#[test]
fn rp_reaches_the_optimum_no_slower_than_score() {
    // Diagonal precision, so the mean-field family contains the posterior
    // and the peak ELBO is exactly zero.
    let model = ExactQuadratic::gaussian_posterior(
        DVector::from_column_slice(&[1.0, -1.0, 0.5]),
        DMatrix::from_diagonal(&DVector::from_column_slice(&[1.0, 2.0, 0.5])),
    )
    .unwrap();
    let init =
        MeanFieldGaussian::new(DVector::zeros(3), DVector::from_element(3, 0.1f64.ln())).unwrap();
    let optimum = 0.0;
    let eps = 0.1;
    let window = 20;

    let hitting_iter = |kind: EstimatorKind, seed: u64| -> Option<usize> {
        let mut config = ViConfig::new(10, 1500, Schedule::adam_default());
        config.elbo_samples = 200;
        let trace = run_vi_with(&model, &init, kind, &config, &make_rng(seed)).unwrap();
        let elbos: Vec<f64> = trace.records.iter().map(|r| r.elbo).collect();
        (window..=elbos.len()).find(|&t| {
            let avg: f64 = elbos[t - window..t].iter().sum::<f64>() / window as f64;
            avg >= optimum - eps
        })
    };

    let mut rp_wins = 0;
    for seed in 0..10u64 {
        let rp = hitting_iter(EstimatorKind::Rp, seed);
        let score = hitting_iter(EstimatorKind::Score, seed);
        let rp_iter = rp.expect("rp run must reach the optimum");
        if score.is_none_or(|s| rp_iter <= s) {
            rp_wins += 1;
        }
    }
    assert!(rp_wins >= 8, "rp won only {rp_wins}/10 seeds");
}
