//! Least squares with heteroskedasticity-robust (HC1) standard errors.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;
use statrs::distribution::{ContinuousCDF, Normal};

use super::data::DesignMatrix;
use crate::error::{Error, Result};

/// Relative size of `|R_jj|` below which column `j` counts as collinear.
pub const RANK_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegressionResult {
    pub response: String,
    pub names: Vec<String>,
    pub coefficients: Vec<f64>,
    pub robust_se: Vec<f64>,
    pub classical_se: Vec<f64>,
    pub p_values: Vec<f64>,
    pub r_squared: f64,
    pub n_obs: usize,
    pub n_dropped: usize,
    pub covariance_type: &'static str,
    #[serde(skip)]
    pub covariance: DMatrix<f64>,
}

impl RegressionResult {
    fn index(&self, name: &str) -> Result<usize> {
        self.names.iter().position(|n| n == name).ok_or_else(|| Error::MissingColumn(name.to_string()))
    }

    pub fn coef(&self, name: &str) -> Result<f64> {
        Ok(self.coefficients[self.index(name)?])
    }

    pub fn se(&self, name: &str) -> Result<f64> {
        Ok(self.robust_se[self.index(name)?])
    }

    pub fn p_value(&self, name: &str) -> Result<f64> {
        Ok(self.p_values[self.index(name)?])
    }

    pub fn t_stat(&self, name: &str) -> Result<f64> {
        let i = self.index(name)?;
        Ok(self.coefficients[i] / self.robust_se[i])
    }
}

/// Two-sided p-value from the standard normal.
pub fn normal_p_value(estimate: f64, se: f64) -> f64 {
    if se == 0.0 || !se.is_finite() {
        return if estimate == 0.0 { 1.0 } else { 0.0 };
    }
    let z = (estimate / se).abs();
    2.0 * (1.0 - Normal::standard().cdf(z))
}

/// Significance stars: `***` p < 0.01, `**` p < 0.05, `*` p < 0.1.
pub fn stars(p: f64) -> &'static str {
    if p < 0.01 {
        "***"
    } else if p < 0.05 {
        "**"
    } else if p < 0.1 {
        "*"
    } else {
        ""
    }
}

/// OLS through a Householder QR of `X`; HC1 covariance
/// `n/(n-k) (X'X)^-1 (sum e_i^2 x_i x_i') (X'X)^-1`.
pub fn ols_hc1(d: &DesignMatrix) -> Result<RegressionResult> {
    let (n, k) = d.x.shape();
    if n <= k {
        return Err(Error::invalid(format!("{n} observations cannot identify {k} coefficients")));
    }
    let qr = d.x.clone().qr();
    let r = qr.r();
    let offending: Vec<String> = (0..k)
        .filter(|&j| {
            let norm = d.x.column(j).norm();
            norm == 0.0 || r[(j, j)].abs() <= RANK_TOLERANCE * norm
        })
        .map(|j| d.names[j].clone())
        .collect();
    if !offending.is_empty() {
        return Err(Error::RankDeficient { columns: offending });
    }
    let qty = qr.q().transpose() * &d.y;
    let beta = r.solve_upper_triangular(&qty).ok_or_else(|| Error::Numerical("triangular solve failed".into()))?;
    let r_inv = r.clone().try_inverse().ok_or_else(|| Error::Numerical("R is singular".into()))?;
    let bread = &r_inv * r_inv.transpose();
    let resid: DVector<f64> = &d.y - &d.x * &beta;

    let mut xe = d.x.clone();
    for (i, mut row) in xe.row_iter_mut().enumerate() {
        row *= resid[i];
    }
    let meat = xe.transpose() * &xe;
    let dof = (n - k) as f64;
    let mut cov = (&bread * meat * &bread) * (n as f64 / dof);
    cov = (&cov + cov.transpose()) * 0.5;
    let ssr = resid.norm_squared();
    let classical = &bread * (ssr / dof);

    let mean_y = d.y.mean();
    let sst: f64 = d.y.iter().map(|v| (v - mean_y).powi(2)).sum();
    let r_squared = if sst > 0.0 { (1.0 - ssr / sst).clamp(0.0, 1.0) } else { 1.0 };

    let coefficients: Vec<f64> = beta.iter().copied().collect();
    let robust_se: Vec<f64> = (0..k).map(|j| cov[(j, j)].max(0.0).sqrt()).collect();
    let classical_se = (0..k).map(|j| classical[(j, j)].max(0.0).sqrt()).collect();
    let p_values = coefficients.iter().zip(&robust_se).map(|(b, s)| normal_p_value(*b, *s)).collect();
    Ok(RegressionResult {
        response: d.response.clone(),
        names: d.names.clone(),
        coefficients,
        robust_se,
        classical_se,
        p_values,
        r_squared,
        n_obs: n,
        n_dropped: d.dropped,
        covariance_type: "HC1",
        covariance: cov,
    })
}

/// Residuals `y - X b` for a fitted model on the same design.
pub fn residuals(d: &DesignMatrix, fit: &RegressionResult) -> DVector<f64> {
    let beta = DVector::from_column_slice(&fit.coefficients);
    &d.y - &d.x * beta
}

#[cfg(test)]
mod tests {
    use super::*;

    fn design(x: &[f64], y: &[f64]) -> DesignMatrix {
        let n = x.len();
        let m = DMatrix::from_fn(n, 2, |i, j| if j == 0 { 1.0 } else { x[i] });
        DesignMatrix::from_parts("y", vec!["constant".into(), "x".into()], m, DVector::from_column_slice(y)).unwrap()
    }

    #[test]
    fn noiseless_line() {
        let x = [0.0, 1.0, 2.0, 3.0, 7.0];
        let y: Vec<f64> = x.iter().map(|v| 2.0 + 3.0 * v).collect();
        let fit = ols_hc1(&design(&x, &y)).unwrap();
        assert!((fit.coefficients[0] - 2.0).abs() < 1e-12);
        assert!((fit.coefficients[1] - 3.0).abs() < 1e-12);
        assert!(fit.robust_se.iter().all(|s| *s < 1e-12));
        assert!((fit.r_squared - 1.0).abs() < 1e-12);
    }

    #[test]
    fn collinear_column_is_named() {
        let n = 6;
        let x = DMatrix::from_fn(n, 3, |i, j| match j {
            0 => 1.0,
            1 => i as f64,
            _ => 2.0 * i as f64,
        });
        let y = DVector::from_fn(n, |i, _| i as f64);
        let d = DesignMatrix::from_parts("y", vec!["constant".into(), "a".into(), "b".into()], x, y).unwrap();
        match ols_hc1(&d) {
            Err(Error::RankDeficient { columns }) => assert_eq!(columns, vec!["b".to_string()]),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn stars_thresholds() {
        assert_eq!(stars(0.005), "***");
        assert_eq!(stars(0.03), "**");
        assert_eq!(stars(0.07), "*");
        assert_eq!(stars(0.2), "");
        assert!((normal_p_value(1.959963984540054, 1.0) - 0.05).abs() < 1e-9);
    }
}
