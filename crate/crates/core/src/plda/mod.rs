//! Two-covariance PLDA: model, Gaussian scoring and EM training.
//!
//! A trained model stores a mean `m`, a transform `W` and a vector `psi`.
//! Projecting `u = W (z - m)` maps raw embeddings into a space where the
//! within-speaker covariance is the identity and the between-speaker
//! covariance is `diag(psi)`, so every likelihood factorizes into scalar
//! Gaussians per dimension.

mod embedding;
mod train;

pub use embedding::{length_normalize, Embedding};
pub use train::{train_plda, LabeledEmbeddingSet, TrainedPlda, WITHIN_FLOOR_FACTOR};

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::scalar::{ln_two_pi, Real};

/// An embedding expressed in the model's diagonalized space.
#[derive(Debug, Clone, PartialEq)]
pub struct Projected<T: Real>(DVector<T>);

impl<T: Real> Projected<T> {
    pub fn new(values: Vec<T>) -> Self {
        Projected(DVector::from_vec(values))
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[T] {
        self.0.as_slice()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PldaModel<T: Real> {
    mean: DVector<T>,
    transform: DMatrix<T>,
    psi: DVector<T>,
}

impl<T: Real> PldaModel<T> {
    /// Validates and assembles a model. The transform must be square,
    /// finite and numerically invertible; `psi` must be nonnegative.
    pub fn new(mean: DVector<T>, transform: DMatrix<T>, psi: DVector<T>) -> Result<Self> {
        let d = mean.len();
        if d == 0 {
            return Err(Error::InvalidModel("zero dimension".into()));
        }
        if transform.nrows() != d || transform.ncols() != d || psi.len() != d {
            return Err(Error::InvalidModel(format!(
                "inconsistent shapes: mean {d}, transform {}x{}, psi {}",
                transform.nrows(),
                transform.ncols(),
                psi.len()
            )));
        }
        if mean.iter().chain(transform.iter()).chain(psi.iter()).any(|v| !v.is_finite()) {
            return Err(Error::InvalidModel("non-finite parameter".into()));
        }
        if psi.iter().any(|&p| p < T::zero()) {
            return Err(Error::InvalidModel("negative between-class variance".into()));
        }
        check_invertible(&transform)?;
        Ok(Self { mean, transform, psi })
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn mean(&self) -> &DVector<T> {
        &self.mean
    }

    pub fn transform(&self) -> &DMatrix<T> {
        &self.transform
    }

    pub fn psi(&self) -> &DVector<T> {
        &self.psi
    }

    pub fn cast<U: Real>(&self) -> PldaModel<U> {
        let c = |v: &T| U::lit(v.as_f64());
        PldaModel {
            mean: self.mean.map(|v| c(&v)),
            transform: self.transform.map(|v| c(&v)),
            psi: self.psi.map(|v| c(&v)),
        }
    }

    fn check_dim(&self, got: usize) -> Result<()> {
        if got != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got,
            });
        }
        Ok(())
    }

    /// Centers and transforms a raw embedding.
    pub fn project(&self, z: &Embedding<T>) -> Result<Projected<T>> {
        self.check_dim(z.dim())?;
        Ok(Projected(&self.transform * (z.vector() - &self.mean)))
    }

    /// `log P(u | model)`: sum over dimensions of `log N(u_j; 0, psi_j + 1)`.
    pub fn log_marginal(&self, u: &Projected<T>) -> Result<T> {
        self.check_dim(u.dim())?;
        let half = T::lit(0.5);
        let c = ln_two_pi::<T>();
        Ok(self
            .psi
            .iter()
            .zip(u.0.iter())
            .fold(T::zero(), |acc, (&psi, &x)| {
                let var = psi + T::one();
                acc - half * (c + var.ln() + x * x / var)
            }))
    }

    /// Log joint density of two observations under the same-speaker
    /// hypothesis; per dimension the pair is bivariate normal with
    /// covariance `[[psi+1, psi], [psi, psi+1]]`.
    pub fn log_joint_same(&self, u1: &Projected<T>, u2: &Projected<T>) -> Result<T> {
        self.check_dim(u1.dim())?;
        self.check_dim(u2.dim())?;
        let half = T::lit(0.5);
        let two = T::lit(2.0);
        let c = ln_two_pi::<T>();
        let mut acc = T::zero();
        for ((&psi, &a), &b) in self.psi.iter().zip(u1.0.iter()).zip(u2.0.iter()) {
            let det = two * psi + T::one();
            let quad = ((psi + T::one()) * (a * a + b * b) - two * psi * a * b) / det;
            acc -= c + half * det.ln() + half * quad;
        }
        Ok(acc)
    }

    /// Log likelihood ratio of same-speaker vs different-speaker for two
    /// projected embeddings.
    pub fn log_lr_projected(&self, u1: &Projected<T>, u2: &Projected<T>) -> Result<T> {
        let joint = self.log_joint_same(u1, u2)?;
        let m1 = self.log_marginal(u1)?;
        let m2 = self.log_marginal(u2)?;
        Ok(joint - (m1 + m2))
    }

    /// Log likelihood ratio for two raw-space embeddings. Length
    /// normalization, when wanted, is applied by the caller beforehand.
    pub fn log_lr(&self, z1: &Embedding<T>, z2: &Embedding<T>) -> Result<T> {
        self.log_lr_projected(&self.project(z1)?, &self.project(z2)?)
    }
}

/// Free-function form of [`PldaModel::log_lr`].
pub fn log_lr_single<T: Real>(model: &PldaModel<T>, z1: &Embedding<T>, z2: &Embedding<T>) -> Result<T> {
    model.log_lr(z1, z2)
}

fn check_invertible<T: Real>(m: &DMatrix<T>) -> Result<()> {
    let sv = m.clone().singular_values();
    let max = sv.iter().copied().fold(T::zero(), |a, b| if b > a { b } else { a });
    let min = sv.iter().copied().fold(max, |a, b| if b < a { b } else { a });
    // condition number bounded by 1 / (1e3 * eps)
    if min <= T::zero() || min < max * T::epsilon() * T::lit(1e3) {
        return Err(Error::InvalidModel("transform is numerically singular".into()));
    }
    Ok(())
}
