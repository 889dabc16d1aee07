use nalgebra::{DMatrix, DVector, SymmetricEigen};

use super::FeatureSet;
use crate::error::{Error, Result};

/// Results above this (negative) value are treated as roundoff and reported as 0.
pub const NEGATIVE_ROUNDOFF: f64 = -1e-8;
/// Diagonal ridge added to both covariances when the eigensolver fails.
pub const FALLBACK_RIDGE: f64 = 1e-6;

const EIGEN_EPS: f64 = f64::EPSILON;
const EIGEN_MAX_ITER: usize = 10_000;

/// Multivariate Gaussian fitted to a feature set.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianFit {
    pub mu: DVector<f64>,
    pub sigma: DMatrix<f64>,
}

impl GaussianFit {
    pub fn new(mu: DVector<f64>, sigma: DMatrix<f64>) -> Result<Self> {
        let d = mu.len();
        if d == 0 || sigma.nrows() != d || sigma.ncols() != d {
            return Err(Error::DimensionMismatch(format!(
                "mean of length {d} with {}x{} covariance",
                sigma.nrows(),
                sigma.ncols()
            )));
        }
        if mu.iter().chain(sigma.iter()).any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("Gaussian parameters".into()));
        }
        Ok(Self { mu, sigma })
    }

    pub fn dim(&self) -> usize {
        self.mu.len()
    }
}

/// Column means and unbiased (`n - 1`) covariance, symmetrized as `(S + Sᵀ) / 2`.
pub fn fit_gaussian(fs: &FeatureSet) -> Result<GaussianFit> {
    let (n, d) = (fs.n(), fs.d());
    if n < 2 {
        return Err(Error::InvalidInput(format!(
            "covariance needs at least 2 samples, got {n}"
        )));
    }
    let x = DMatrix::from_row_iterator(n, d, fs.data().iter().map(|&v| f64::from(v)));
    let mu = DVector::from_iterator(d, x.column_iter().map(|c| c.sum() / n as f64));
    let mut centered = x;
    for (mut col, m) in centered.column_iter_mut().zip(mu.iter()) {
        col.add_scalar_mut(-m);
    }
    let s = centered.tr_mul(&centered) / (n - 1) as f64;
    let sigma = (&s + s.transpose()) * 0.5;
    GaussianFit::new(mu, sigma)
}

fn eigen(m: DMatrix<f64>) -> Option<SymmetricEigen<f64, nalgebra::Dyn>> {
    SymmetricEigen::try_new(m, EIGEN_EPS, EIGEN_MAX_ITER)
}

/// Square roots of a PSD spectrum. Eigenvalues within the solver's relative
/// precision of zero (`d·ε·λmax`) are roundoff and count as 0, as do negative
/// ones; otherwise their roots (~1e-8 each) add up in rank-deficient covariances.
fn spectrum_roots(eigenvalues: &DVector<f64>) -> DVector<f64> {
    let largest = eigenvalues.iter().fold(0.0f64, |m, l| m.max(l.abs()));
    let cutoff = eigenvalues.len() as f64 * f64::EPSILON * largest;
    eigenvalues.map(|l| if l > cutoff { l.sqrt() } else { 0.0 })
}

/// `V diag(sqrt(λ)) Vᵀ` over the clamped spectrum.
fn psd_sqrt(m: &DMatrix<f64>) -> Option<DMatrix<f64>> {
    let e = eigen(m.clone())?;
    let roots = spectrum_roots(&e.eigenvalues);
    let scaled = &e.eigenvectors * DMatrix::from_diagonal(&roots);
    Some(&scaled * e.eigenvectors.transpose())
}

/// `tr((A^{1/2} B A^{1/2})^{1/2})`, which equals `tr((AB)^{1/2})` for PSD `A`, `B`.
fn trace_sqrt_product(a: &DMatrix<f64>, b: &DMatrix<f64>) -> Option<f64> {
    let ra = psd_sqrt(a)?;
    let inner = &ra * b * &ra;
    let inner = (&inner + inner.transpose()) * 0.5;
    let e = eigen(inner)?;
    let t = spectrum_roots(&e.eigenvalues).sum();
    t.is_finite().then_some(t)
}

/// Fréchet distance `‖μx − μy‖² + tr(Σx + Σy − 2(ΣxΣy)^{1/2})` between two Gaussians.
///
/// The matrix square root is taken on the symmetric product
/// `Σx^{1/2} Σy Σx^{1/2}` with negative eigenvalues clamped to 0. If the
/// eigensolver does not converge, a ridge of `1e-6·I` is added to both
/// covariances and the computation retried once.
pub fn frechet_distance(x: &GaussianFit, y: &GaussianFit) -> Result<f64> {
    if x.dim() != y.dim() {
        return Err(Error::DimensionMismatch(format!(
            "feature dimensions differ: {} vs {}",
            x.dim(),
            y.dim()
        )));
    }
    let diff = &x.mu - &y.mu;
    let mean_term = diff.dot(&diff);

    let trace_term = match trace_sqrt_product(&x.sigma, &y.sigma) {
        Some(t) => x.sigma.trace() + y.sigma.trace() - 2.0 * t,
        None => {
            let ridge = DMatrix::<f64>::identity(x.dim(), x.dim()) * FALLBACK_RIDGE;
            let sx = &x.sigma + &ridge;
            let sy = &y.sigma + &ridge;
            let t = trace_sqrt_product(&sx, &sy).ok_or_else(|| {
                Error::Numerical(format!(
                    "eigendecomposition of the {d}x{d} covariance product did not converge, even with a {FALLBACK_RIDGE:e} ridge",
                    d = x.dim()
                ))
            })?;
            sx.trace() + sy.trace() - 2.0 * t
        }
    };

    let fd = mean_term + trace_term;
    if !fd.is_finite() {
        return Err(Error::Numerical("Fréchet distance is not finite".into()));
    }
    if fd < NEGATIVE_ROUNDOFF {
        return Err(Error::Numerical(format!(
            "Fréchet distance {fd:e} is negative beyond roundoff"
        )));
    }
    Ok(fd.max(0.0))
}

pub fn frechet_between_sets(a: &FeatureSet, b: &FeatureSet) -> Result<f64> {
    if a.d() != b.d() {
        return Err(Error::DimensionMismatch(format!(
            "feature dimensions differ: {} vs {}",
            a.d(),
            b.d()
        )));
    }
    frechet_distance(&fit_gaussian(a)?, &fit_gaussian(b)?)
}
