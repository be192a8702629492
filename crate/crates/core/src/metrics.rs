//! Reconstruction error, group disparity and the squared-disparity fairness
//! measure of a projection `U` with orthonormal columns.

use serde::{Deserialize, Serialize};

use crate::dataset::{Group, GroupedData};
use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::linalg::{frobenius_norm_sq, matmul, scaled_gram_with, Matrix};

pub const ORTHONORMAL_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GroupMetrics {
    pub overall_err: f64,
    /// Average error of the privileged group.
    pub err_a: f64,
    /// Average error of the harmed group.
    pub err_b: f64,
    /// `err_b - err_a`.
    pub disparity: f64,
    pub fairness: f64,
}

impl GroupMetrics {
    pub fn from_errors(overall_err: f64, err_a: f64, err_b: f64) -> Self {
        let disparity = err_b - err_a;
        GroupMetrics {
            overall_err,
            err_a,
            err_b,
            disparity,
            fairness: disparity * disparity,
        }
    }
}

fn check_projection(x: &Matrix, u: &Matrix) -> Result<()> {
    if x.cols() != u.rows() {
        return Err(Error::DimensionMismatch(format!(
            "data has {} columns but projection has {} rows",
            x.cols(),
            u.rows()
        )));
    }
    if x.rows() == 0 {
        return Err(Error::DimensionMismatch("data has no rows".into()));
    }
    let deviation = u.orthonormality_deviation();
    if deviation > ORTHONORMAL_TOL {
        return Err(Error::NotOrthonormal { deviation });
    }
    Ok(())
}

/// `‖X − XUUᵀ‖²_F / n`, computed as `(‖X‖²_F − ‖XU‖²_F) / n`.
pub fn avg_reconstruction_error(x: &Matrix, u: &Matrix) -> Result<f64> {
    check_projection(x, u)?;
    let kept = frobenius_norm_sq(&matmul(x, u)?);
    let total = frobenius_norm_sq(x);
    Ok(((total - kept) / x.rows() as f64).max(0.0))
}

/// Same quantity through the explicit residual `X − XUUᵀ`.
pub fn avg_reconstruction_error_direct(x: &Matrix, u: &Matrix) -> Result<f64> {
    check_projection(x, u)?;
    let recon = matmul(&matmul(x, u)?, &u.transpose())?;
    Ok(frobenius_norm_sq(&x.sub(&recon)?) / x.rows() as f64)
}

fn group_error(x: &Matrix, n: usize, u: &Matrix) -> Result<f64> {
    if x.rows() != n {
        return Err(Error::DimensionMismatch(format!(
            "group count {n} does not match {} rows",
            x.rows()
        )));
    }
    avg_reconstruction_error(x, u)
}

/// `R̄_B(U) − R̄_A(U)`; positive when group A is better represented.
pub fn disparity(x_a: &Matrix, x_b: &Matrix, n_a: usize, n_b: usize, u: &Matrix) -> Result<f64> {
    Ok(group_error(x_b, n_b, u)? - group_error(x_a, n_a, u)?)
}

pub fn fairness_measure(
    x_a: &Matrix,
    x_b: &Matrix,
    n_a: usize,
    n_b: usize,
    u: &Matrix,
) -> Result<f64> {
    Ok(disparity(x_a, x_b, n_a, n_b, u)?.powi(2))
}

/// Privileged/harmed roles fixed from the classical PCA projection.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Roles {
    pub privileged: Group,
    pub harmed: Group,
    /// Harmed group's average error under classical PCA.
    pub budget: f64,
}

/// The group with the lower classical-PCA error is privileged; ties go to
/// the first group.
pub fn identify_privileged(g: &GroupedData, u_pca: &Matrix) -> Result<Roles> {
    let e1 = avg_reconstruction_error(&g.x_a, u_pca)?;
    let e2 = avg_reconstruction_error(&g.x_b, u_pca)?;
    Ok(roles_from_errors(e1, e2))
}

pub fn roles_from_errors(first: f64, second: f64) -> Roles {
    if first <= second {
        Roles {
            privileged: Group::First,
            harmed: Group::Second,
            budget: second,
        }
    } else {
        Roles {
            privileged: Group::Second,
            harmed: Group::First,
            budget: first,
        }
    }
}

/// All metrics for `u`, evaluated on the raw rows.
pub fn evaluate(g: &GroupedData, roles: &Roles, u: &Matrix) -> Result<GroupMetrics> {
    let overall = avg_reconstruction_error(&g.x, u)?;
    let a = avg_reconstruction_error(g.rows_of(roles.privileged), u)?;
    let b = avg_reconstruction_error(g.rows_of(roles.harmed), u)?;
    Ok(GroupMetrics::from_errors(overall, a, b))
}

/// Precomputed second moments of the whole data set and of each group.
/// Errors then cost `O(d² r)` per projection instead of `O(n d r)`.
#[derive(Debug, Clone)]
pub struct Moments {
    /// `XᵀX / n`
    pub cov: Matrix,
    /// `X_AᵀX_A / n_A` for the first group.
    pub cov_first: Matrix,
    /// `X_BᵀX_B / n_B` for the second group.
    pub cov_second: Matrix,
}

impl Moments {
    pub fn new(g: &GroupedData) -> Result<Self> {
        Self::with_exec(g, Exec::default())
    }

    pub fn with_exec(g: &GroupedData, exec: Exec) -> Result<Self> {
        Ok(Moments {
            cov: scaled_gram_with(&g.x, g.n, exec)?,
            cov_first: scaled_gram_with(&g.x_a, g.n_a, exec)?,
            cov_second: scaled_gram_with(&g.x_b, g.n_b, exec)?,
        })
    }

    pub fn cov_of(&self, group: Group) -> &Matrix {
        match group {
            Group::First => &self.cov_first,
            Group::Second => &self.cov_second,
        }
    }

    /// `(overall, first group, second group)` average errors.
    pub fn errors(&self, u: &Matrix) -> Result<(f64, f64, f64)> {
        if u.rows() != self.cov.rows() {
            return Err(Error::DimensionMismatch(format!(
                "projection has {} rows, data has {} columns",
                u.rows(),
                self.cov.rows()
            )));
        }
        let deviation = u.orthonormality_deviation();
        if deviation > ORTHONORMAL_TOL {
            return Err(Error::NotOrthonormal { deviation });
        }
        Ok((
            residual(&self.cov, u),
            residual(&self.cov_first, u),
            residual(&self.cov_second, u),
        ))
    }

    pub fn metrics(&self, roles: &Roles, u: &Matrix) -> Result<GroupMetrics> {
        let (overall, first, second) = self.errors(u)?;
        let (a, b) = match roles.privileged {
            Group::First => (first, second),
            Group::Second => (second, first),
        };
        Ok(GroupMetrics::from_errors(overall, a, b))
    }
}

/// `tr(C) − tr(UᵀCU)`, clamped at zero.
fn residual(cov: &Matrix, u: &Matrix) -> f64 {
    let d = cov.rows();
    let mut kept = 0.0;
    for j in 0..u.cols() {
        for p in 0..d {
            let up = u.get(p, j);
            if up == 0.0 {
                continue;
            }
            let row = cov.row(p);
            let cu: f64 = (0..d).map(|q| row[q] * u.get(q, j)).sum();
            kept += up * cu;
        }
    }
    (cov.trace() - kept).max(0.0)
}
