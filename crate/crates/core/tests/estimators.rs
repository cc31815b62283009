//! Least squares against an exact rational solve, plus algebraic identities.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use indset_core::estimate::{self, Estimand, Observations};
use indset_core::Error;

/// Solves the normal equations exactly over the rationals by Gauss-Jordan elimination.
fn exact_least_squares(cols: &[Vec<f64>], y: &[f64]) -> Vec<f64> {
    let q = |x: f64| BigRational::from_float(x).expect("finite");
    let p = cols.len();
    let cols: Vec<Vec<BigRational>> = cols
        .iter()
        .map(|c| c.iter().map(|&x| q(x)).collect())
        .collect();
    let y: Vec<BigRational> = y.iter().map(|&x| q(x)).collect();
    let dot = |a: &[BigRational], b: &[BigRational]| {
        a.iter()
            .zip(b)
            .fold(BigRational::zero(), |s, (x, y)| s + x * y)
    };
    let mut m: Vec<Vec<BigRational>> = (0..p)
        .map(|i| {
            let mut row: Vec<BigRational> = (0..p).map(|j| dot(&cols[i], &cols[j])).collect();
            row.push(dot(&cols[i], &y));
            row
        })
        .collect();
    for c in 0..p {
        let pivot = (c..p).find(|&r| !m[r][c].is_zero()).expect("full rank");
        m.swap(c, pivot);
        let inv = BigRational::one() / m[c][c].clone();
        for x in m[c].iter_mut() {
            *x = &*x * &inv;
        }
        for r in 0..p {
            if r != c && !m[r][c].is_zero() {
                let f = m[r][c].clone();
                let pivot_row = m[c].clone();
                for (x, pv) in m[r].iter_mut().zip(&pivot_row) {
                    *x = &*x - &f * pv;
                }
            }
        }
    }
    m.iter().map(|row| row[p].to_f64().unwrap()).collect()
}

fn random_instance(n: usize, seed: u64) -> (Vec<bool>, Vec<f64>, Vec<f64>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let z: Vec<bool> = (0..n).map(|_| rng.random_bool(0.5)).collect();
    let rho: Vec<f64> = (0..n)
        .map(|_| rng.random_range(0..=6) as f64 / 6.0)
        .collect();
    let y: Vec<f64> = (0..n)
        .map(|i| {
            1.0 + 20.0 * f64::from(u8::from(z[i])) + 10.0 * rho[i] + rng.random_range(-1.0..1.0)
        })
        .collect();
    (z, rho, y)
}

fn as_f64(z: &[bool]) -> Vec<f64> {
    z.iter().map(|&b| f64::from(u8::from(b))).collect()
}

#[test]
fn ols_matches_exact_rational_solution() {
    for seed in 0..20 {
        let (z, rho, y) = random_instance(50, seed);
        let fit = estimate::ols_fit(&z, &rho, &y).unwrap();
        let exact = exact_least_squares(&[vec![1.0; 50], as_f64(&z), rho.clone()], &y);
        let got = [fit.alpha_hat, fit.beta_hat.unwrap(), fit.gamma_hat];
        for (g, e) in got.iter().zip(&exact) {
            assert!((g - e).abs() <= 1e-10 * e.abs().max(1.0), "{g} vs {e}");
        }
    }
}

#[test]
fn ols_with_constant_treatment_matches_exact_solution() {
    let (_, rho, y) = random_instance(40, 99);
    let fit = estimate::ols_fit(&[true; 40], &rho, &y).unwrap();
    assert!(fit.beta_hat.is_none());
    let exact = exact_least_squares(&[vec![1.0; 40], rho.clone()], &y);
    assert!((fit.alpha_hat - exact[0]).abs() < 1e-10 * exact[0].abs());
    assert!((fit.gamma_hat - exact[1]).abs() < 1e-10 * exact[1].abs());
    assert!(matches!(
        estimate::total_estimate(&fit),
        Err(Error::MissingCoefficient(_))
    ));
}

#[test]
fn collinear_designs_are_rejected() {
    let z = [true, false, true, false];
    let err = estimate::ols_fit(&z, &[0.5; 4], &[1.0, 2.0, 3.0, 4.0]).unwrap_err();
    assert!(matches!(err, Error::SingularDesign { .. }));
    let rho: Vec<f64> = as_f64(&z);
    assert!(estimate::ols_fit(&z, &rho, &[1.0, 2.0, 3.0, 4.0]).is_err());
}

proptest! {
    #[test]
    fn residuals_are_orthogonal_to_the_design(seed: u64, n in 6usize..60) {
        let (z, rho, y) = random_instance(n, seed);
        let fit = match estimate::ols_fit(&z, &rho, &y) {
            Ok(f) => f,
            Err(Error::SingularDesign { .. }) => return Ok(()),
            Err(e) => panic!("{e}"),
        };
        let zf = as_f64(&z);
        let beta = fit.beta_hat.unwrap_or(0.0);
        let resid: Vec<f64> = (0..n).map(|i| y[i] - fit.alpha_hat - beta * zf[i] - fit.gamma_hat * rho[i]).collect();
        let ynorm = y.iter().map(|v| v * v).sum::<f64>().sqrt();
        for col in [vec![1.0; n], zf, rho] {
            let ip: f64 = col.iter().zip(&resid).map(|(a, b)| a * b).sum();
            prop_assert!(ip.abs() < 1e-8 * ynorm);
        }
        prop_assert!(fit.residual_variance >= 0.0);
    }

    #[test]
    fn diff_in_means_is_the_regression_slope(seed: u64, half in 1usize..30) {
        let n = 2 * half;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut z: Vec<bool> = (0..n).map(|i| i < half).collect();
        for i in (1..n).rev() {
            z.swap(i, rng.random_range(0..=i));
        }
        let y: Vec<f64> = (0..n).map(|_| rng.random_range(-5.0..5.0)).collect();
        let slope = exact_least_squares(&[vec![1.0; n], as_f64(&z)], &y)[1];
        let dim = estimate::diff_in_means(&y, &z).unwrap();
        prop_assert!((dim - slope).abs() < 1e-10);
    }

    #[test]
    fn total_variance_never_below_its_floor(seed: u64, n in 4usize..80, sigma in 0.0..3.0f64) {
        let (z, rho, _) = random_instance(n, seed);
        if let Ok(t) = estimate::predicted_var_total(sigma, &z, &rho) {
            prop_assert!(t.variance >= t.floor - 1e-12);
            let spill = estimate::predicted_var_spillover(sigma, &rho).unwrap();
            prop_assert!((t.floor - spill).abs() <= 1e-12 * spill.max(1.0));
        }
    }
}

#[test]
fn rational_oracle_is_exact_on_integers() {
    let x = BigRational::new(BigInt::from(1), BigInt::from(3));
    assert!((x.to_f64().unwrap() - 1.0 / 3.0).abs() < 1e-16);
    assert!(BigRational::from_float(-0.25).unwrap().is_negative());
    let b = exact_least_squares(&[vec![1.0; 3], vec![0.0, 1.0, 2.0]], &[1.0, 3.0, 5.0]);
    assert_eq!(b, vec![1.0, 2.0]);
}

#[test]
fn summary_of_a_noiseless_spillover_design() {
    let rho = [0.0, 0.25, 0.5, 1.0, 1.0, 0.0];
    let z = [true; 6];
    let y: Vec<f64> = rho.iter().map(|r| 21.0 + 10.0 * r).collect();
    let obs = Observations {
        z: &z,
        rho: &rho,
        y: &y,
        isolated: &[false; 6],
    };
    let s = estimate::summarize(Estimand::Spillover { z: true }, obs, Some(0.5), None).unwrap();
    assert!((s.point - 10.0).abs() < 1e-12);
    let expect = 0.25 / (6.0 * indset_core::stats::variance(&rho));
    assert!((s.predicted_variance.unwrap() - expect).abs() < 1e-15);
}
