//! Effect estimators on the independent set and their closed-form diagnostics.
//!
//! All variances and covariances here use divisor `n` (population moments).

use alloc::format;
use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};

use crate::error::{invalid, Error, Result};
use crate::stats;

/// Relative pivot size below which a design column counts as linearly dependent.
const RANK_TOL: f64 = 1e-10;

/// The causal quantity a design targets.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Estimand {
    /// Direct effect at exposure level `rho`.
    Direct {
        rho: f64,
    },
    /// Spillover effect (full vs. zero exposure) with own treatment held at `z`.
    Spillover {
        z: bool,
    },
    Total,
}

impl Estimand {
    pub fn name(&self) -> &'static str {
        match self {
            Estimand::Direct { .. } => "direct",
            Estimand::Spillover { .. } => "spillover",
            Estimand::Total => "total",
        }
    }
}

impl core::fmt::Display for Estimand {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            Estimand::Direct { rho } => write!(f, "direct({rho})"),
            Estimand::Spillover { z } => write!(f, "spillover(z={})", u8::from(*z)),
            Estimand::Total => f.write_str("total"),
        }
    }
}

fn check_len(expected: usize, found: usize) -> Result<()> {
    if expected != found {
        return Err(Error::Dimension { expected, found });
    }
    Ok(())
}

/// Difference in means for a balanced completely randomized assignment:
/// `(2/n) sum y_i z_i - (2/n) sum y_i (1 - z_i)`.
pub fn diff_in_means(y: &[f64], z: &[bool]) -> Result<f64> {
    check_len(y.len(), z.len())?;
    let n = y.len();
    if n < 2 || n % 2 == 1 {
        return Err(Error::Precondition(format!(
            "difference in means needs an even number of units (at least 2), got {n}"
        )));
    }
    let treated = z.iter().filter(|&&b| b).count();
    if treated != n / 2 {
        return Err(Error::Precondition(format!(
            "assignment is unbalanced: {treated} of {n} treated"
        )));
    }
    let scale = 2.0 / n as f64;
    let (t, c) = y.iter().zip(z).fold(
        (0.0, 0.0),
        |(t, c), (&yi, &zi)| {
            if zi {
                (t + yi, c)
            } else {
                (t, c + yi)
            }
        },
    );
    Ok(scale * t - scale * c)
}

/// Mean outcome of treated units minus mean outcome of controls, for arms of any size.
pub fn mean_difference(y: &[f64], z: &[bool]) -> Result<f64> {
    check_len(y.len(), z.len())?;
    let (mut t, mut nt, mut c, mut nc) = (0.0, 0usize, 0.0, 0usize);
    for (&yi, &zi) in y.iter().zip(z) {
        if zi {
            t += yi;
            nt += 1;
        } else {
            c += yi;
            nc += 1;
        }
    }
    if nt == 0 || nc == 0 {
        return Err(Error::DegenerateDesign(format!(
            "one arm is empty ({nt} treated, {nc} control)"
        )));
    }
    Ok(t / nt as f64 - c / nc as f64)
}

/// Least-squares fit of `y = alpha + beta z + gamma rho`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OlsFit {
    pub alpha_hat: f64,
    /// Absent when `z` was constant and its column was dropped.
    pub beta_hat: Option<f64>,
    pub gamma_hat: f64,
    /// `RSS / (n_used - columns)`.
    pub residual_variance: f64,
    pub n_used: usize,
}

/// Fits `y` on `[1, z, rho]` through a Householder QR factorization.
///
/// A constant `z` column is dropped (the fit then has no `beta_hat`). Any
/// remaining rank deficiency is reported as [`Error::SingularDesign`].
pub fn ols_fit(z: &[bool], rho: &[f64], y: &[f64]) -> Result<OlsFit> {
    check_len(y.len(), z.len())?;
    check_len(y.len(), rho.len())?;
    let n = y.len();
    let z_varies = z.iter().any(|&b| b != z[0]);
    let mut names: Vec<&'static str> = Vec::with_capacity(3);
    let mut columns: Vec<Vec<f64>> = Vec::with_capacity(3);
    names.push("intercept");
    columns.push(alloc::vec![1.0; n]);
    if z_varies {
        names.push("z");
        columns.push(z.iter().map(|&b| if b { 1.0 } else { 0.0 }).collect());
    }
    names.push("rho");
    columns.push(rho.to_vec());
    let p = columns.len();
    if n <= p {
        return Err(Error::Precondition(format!(
            "{n} observations cannot identify {p} coefficients with a residual variance"
        )));
    }

    let x = DMatrix::from_fn(n, p, |i, j| columns[j][i]);
    let qr = x.clone().qr();
    let r = qr.r();
    for k in 0..p {
        let norm = x.column(k).norm();
        if norm == 0.0 || libm::fabs(r[(k, k)]) <= RANK_TOL * norm {
            return Err(Error::SingularDesign {
                column: names[k],
                collinear_with: names[..k].to_vec(),
            });
        }
    }
    let yv = DVector::from_column_slice(y);
    let qty = qr.q().transpose() * &yv;
    let coef = r
        .solve_upper_triangular(&qty)
        .ok_or_else(|| invalid!("triangular solve failed"))?;
    let residuals = &yv - &x * &coef;
    let rss = residuals.norm_squared();
    Ok(OlsFit {
        alpha_hat: coef[0],
        beta_hat: z_varies.then(|| coef[1]),
        gamma_hat: coef[p - 1],
        residual_variance: rss / (n - p) as f64,
        n_used: n,
    })
}

/// Spillover effect estimate: the exposure coefficient.
pub fn spillover_estimate(fit: &OlsFit) -> f64 {
    fit.gamma_hat
}

/// Total effect estimate: own-treatment plus exposure coefficients.
pub fn total_estimate(fit: &OlsFit) -> Result<f64> {
    fit.beta_hat
        .map(|b| b + fit.gamma_hat)
        .ok_or(Error::MissingCoefficient("beta_hat"))
}

/// `rho_I - target 1`.
pub fn exposure_deviation(rho: &[f64], target: f64) -> Vec<f64> {
    rho.iter().map(|&r| r - target).collect()
}

pub fn l1_norm(x: &[f64]) -> f64 {
    x.iter().map(|v| libm::fabs(*v)).sum()
}

/// Bias bound `(2L / n_I) ||Delta||_1` for the direct-effect difference in means.
pub fn bias_bound_direct(lipschitz: f64, norm_delta: f64, n_independent: usize) -> Result<f64> {
    if lipschitz.is_nan() || lipschitz < 0.0 {
        return Err(invalid!(
            "Lipschitz constant {lipschitz} must be non-negative"
        ));
    }
    if n_independent == 0 {
        return Err(invalid!("independent set is empty"));
    }
    Ok(2.0 * lipschitz / n_independent as f64 * norm_delta)
}

/// Conditional variance `sigma^2 / (n_I Var[rho])` of the spillover estimate
/// when every independent unit shares the same treatment.
pub fn predicted_var_spillover(sigma: f64, rho: &[f64]) -> Result<f64> {
    let var = stats::variance(rho);
    if rho.is_empty() || var <= 0.0 {
        return Err(Error::DegenerateDesign(
            "exposures are constant; the spillover coefficient is not identified".into(),
        ));
    }
    Ok(sigma * sigma / (rho.len() as f64 * var))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TotalVariance {
    /// `sigma^2/n_I * Var[z - rho] / (Var[z] Var[rho] - Cov[z, rho]^2)`.
    pub variance: f64,
    /// `sigma^2 / (n_I Var[rho])`, never above `variance`.
    pub floor: f64,
}

/// Conditional variance of the total-effect estimate `beta_hat + gamma_hat`.
pub fn predicted_var_total(sigma: f64, z: &[bool], rho: &[f64]) -> Result<TotalVariance> {
    check_len(z.len(), rho.len())?;
    let zf: Vec<f64> = z.iter().map(|&b| if b { 1.0 } else { 0.0 }).collect();
    let (vz, vr) = (stats::variance(&zf), stats::variance(rho));
    if vz <= 0.0 || vr <= 0.0 {
        return Err(Error::DegenerateDesign(
            "treatment or exposure is constant on the independent set".into(),
        ));
    }
    let cov = stats::covariance(&zf, rho);
    let det = vz * vr - cov * cov;
    if det <= 1e-12 * vz * vr {
        return Err(Error::DegenerateDesign(
            "treatment and exposure are perfectly correlated".into(),
        ));
    }
    let diff: Vec<f64> = zf.iter().zip(rho).map(|(a, b)| a - b).collect();
    let n = rho.len() as f64;
    let s2 = sigma * sigma;
    Ok(TotalVariance {
        variance: s2 / n * stats::variance(&diff) / det,
        floor: s2 / (n * vr),
    })
}

/// Point estimate plus the design diagnostics that accompany it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EstimateSummary {
    pub estimand: Estimand,
    pub point: f64,
    pub predicted_variance: Option<f64>,
    pub bias_bound: Option<f64>,
    /// `||rho_I - target||_1`, direct designs only.
    pub norm_delta: Option<f64>,
    /// Population variance of the exposures used by the estimator.
    pub var_rho: f64,
    pub corr_z_rho: Option<f64>,
    pub n_used: usize,
}

/// Observed data on the independent set.
#[derive(Debug, Clone, Copy)]
pub struct Observations<'a> {
    pub z: &'a [bool],
    pub rho: &'a [f64],
    pub y: &'a [f64],
    /// Units with no neighbors; dropped from the regression estimators.
    pub isolated: &'a [bool],
}

/// Design diagnostics that do not depend on the outcomes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Diagnostics {
    pub predicted_variance: Option<f64>,
    pub bias_bound: Option<f64>,
    pub norm_delta: Option<f64>,
    pub var_rho: f64,
    pub corr_z_rho: Option<f64>,
    /// Units entering the estimator (isolated units are dropped for regressions).
    pub n_used: usize,
}

/// Computes the diagnostics of a realized design on the independent set.
///
/// `sigma` enables predicted variances, `lipschitz` the direct-effect bias bound.
pub fn diagnose(
    estimand: Estimand,
    z: &[bool],
    rho: &[f64],
    isolated: &[bool],
    sigma: Option<f64>,
    lipschitz: Option<f64>,
) -> Result<Diagnostics> {
    let n = z.len();
    check_len(n, rho.len())?;
    check_len(n, isolated.len())?;
    match estimand {
        Estimand::Direct { rho: target } => {
            let norm_delta = l1_norm(&exposure_deviation(rho, target));
            let bias_bound = lipschitz
                .map(|l| bias_bound_direct(l, norm_delta, n))
                .transpose()?;
            Ok(Diagnostics {
                predicted_variance: None,
                bias_bound,
                norm_delta: Some(norm_delta),
                var_rho: stats::variance(rho),
                corr_z_rho: None,
                n_used: n,
            })
        }
        Estimand::Spillover { .. } | Estimand::Total => {
            let keep: Vec<usize> = (0..n).filter(|&i| !isolated[i]).collect();
            let z: Vec<bool> = keep.iter().map(|&i| z[i]).collect();
            let rho: Vec<f64> = keep.iter().map(|&i| rho[i]).collect();
            let zf: Vec<f64> = z.iter().map(|&b| if b { 1.0 } else { 0.0 }).collect();
            let z_varies = z.iter().any(|&b| b != z[0]);
            let predicted_variance = match (sigma, estimand) {
                (None, _) => None,
                (Some(s), Estimand::Total) => Some(predicted_var_total(s, &z, &rho)?.variance),
                (Some(s), _) if z_varies => Some(exposure_coef_variance(s, &zf, &rho)?),
                (Some(s), _) => Some(predicted_var_spillover(s, &rho)?),
            };
            Ok(Diagnostics {
                predicted_variance,
                bias_bound: None,
                norm_delta: None,
                var_rho: stats::variance(&rho),
                corr_z_rho: stats::correlation(&zf, &rho),
                n_used: keep.len(),
            })
        }
    }
}

/// Runs the estimator matching `estimand` and attaches the design diagnostics.
pub fn summarize(
    estimand: Estimand,
    obs: Observations<'_>,
    sigma: Option<f64>,
    lipschitz: Option<f64>,
) -> Result<EstimateSummary> {
    let n = obs.y.len();
    check_len(n, obs.z.len())?;
    check_len(n, obs.rho.len())?;
    check_len(n, obs.isolated.len())?;
    let point = match estimand {
        Estimand::Direct { .. } => diff_in_means(obs.y, obs.z)?,
        Estimand::Spillover { .. } | Estimand::Total => {
            let keep: Vec<usize> = (0..n).filter(|&i| !obs.isolated[i]).collect();
            let z: Vec<bool> = keep.iter().map(|&i| obs.z[i]).collect();
            let rho: Vec<f64> = keep.iter().map(|&i| obs.rho[i]).collect();
            let y: Vec<f64> = keep.iter().map(|&i| obs.y[i]).collect();
            let fit = ols_fit(&z, &rho, &y)?;
            match estimand {
                Estimand::Total => total_estimate(&fit)?,
                _ => spillover_estimate(&fit),
            }
        }
    };
    let d = diagnose(estimand, obs.z, obs.rho, obs.isolated, sigma, lipschitz)?;
    Ok(EstimateSummary {
        estimand,
        point,
        predicted_variance: d.predicted_variance,
        bias_bound: d.bias_bound,
        norm_delta: d.norm_delta,
        var_rho: d.var_rho,
        corr_z_rho: d.corr_z_rho,
        n_used: d.n_used,
    })
}

/// `sigma^2 Var[z] / (n (Var[z] Var[rho] - Cov^2))`: variance of the exposure
/// coefficient in a regression on `[1, z, rho]`.
fn exposure_coef_variance(sigma: f64, z: &[f64], rho: &[f64]) -> Result<f64> {
    let (vz, vr) = (stats::variance(z), stats::variance(rho));
    let cov = stats::covariance(z, rho);
    let det = vz * vr - cov * cov;
    if det <= 1e-12 * vz * vr || vr <= 0.0 {
        return Err(Error::DegenerateDesign(
            "treatment and exposure are perfectly correlated".into(),
        ));
    }
    Ok(sigma * sigma * vz / (rho.len() as f64 * det))
}
