use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::backends::Embedding;
use crate::error::{Error, Result};

const RIDGE: f64 = 1e-6;

fn moments(set: &[Embedding], name: &str) -> Result<(DVector<f64>, DMatrix<f64>)> {
    if set.len() < 2 {
        return Err(Error::Precondition(format!(
            "fid: set {name} needs at least 2 vectors, got {}",
            set.len()
        )));
    }
    let d = set[0].dim();
    if set.iter().any(|e| e.dim() != d) {
        return Err(Error::Precondition(format!(
            "fid: set {name} mixes embedding dimensions"
        )));
    }
    let x = DMatrix::from_fn(set.len(), d, |i, j| set[i].values()[j]);
    let mean = DVector::from_fn(d, |j, _| x.column(j).mean());
    let centered = DMatrix::from_fn(set.len(), d, |i, j| x[(i, j)] - mean[j]);
    let cov = centered.transpose() * &centered / (set.len() - 1) as f64;
    Ok((mean, cov))
}

/// Adds a small ridge when the covariance is rank deficient so the matrix
/// square root stays well defined. Full-rank inputs are left exact.
fn regularize(cov: DMatrix<f64>, n: usize) -> DMatrix<f64> {
    let d = cov.nrows();
    let scale = cov.diagonal().amax().max(1.0);
    let singular = n <= d || SymmetricEigen::new(cov.clone()).eigenvalues.min() <= 1e-12 * scale;
    if singular {
        cov + DMatrix::identity(d, d) * RIDGE
    } else {
        cov
    }
}

fn sym_sqrt(m: &DMatrix<f64>) -> DMatrix<f64> {
    let eig = SymmetricEigen::new((m + m.transpose()) * 0.5);
    let root = eig.eigenvalues.map(|l| l.max(0.0).sqrt());
    &eig.eigenvectors * DMatrix::from_diagonal(&root) * eig.eigenvectors.transpose()
}

/// Frechet distance between Gaussian fits of two embedding sets.
pub fn fid(a: &[Embedding], b: &[Embedding]) -> Result<f64> {
    let (mu_a, cov_a) = moments(a, "a")?;
    let (mu_b, cov_b) = moments(b, "b")?;
    if mu_a.len() != mu_b.len() {
        return Err(Error::Precondition(
            "fid: sets have different embedding dimensions".into(),
        ));
    }
    let cov_a = regularize(cov_a, a.len());
    let cov_b = regularize(cov_b, b.len());
    let root_a = sym_sqrt(&cov_a);
    let inner = &root_a * &cov_b * &root_a;
    let eig = SymmetricEigen::new((&inner + inner.transpose()) * 0.5);
    let tr_cross: f64 = eig.eigenvalues.iter().map(|l| l.max(0.0).sqrt()).sum();
    let dist = (mu_a - mu_b).norm_squared() + cov_a.trace() + cov_b.trace() - 2.0 * tr_cross;
    Ok(dist.max(0.0))
}
