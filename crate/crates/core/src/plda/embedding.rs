use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Fixed-dimension speaker embedding in the raw (extractor) space.
#[derive(Debug, Clone, PartialEq)]
pub struct Embedding<T: Real> {
    values: DVector<T>,
}

impl<T: Real> Embedding<T> {
    pub fn new(values: Vec<T>) -> Result<Self> {
        Self::from_vector(DVector::from_vec(values))
    }

    pub fn from_vector(values: DVector<T>) -> Result<Self> {
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFiniteEmbedding);
        }
        Ok(Self { values })
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn as_slice(&self) -> &[T] {
        self.values.as_slice()
    }

    pub fn vector(&self) -> &DVector<T> {
        &self.values
    }

    pub fn into_vector(self) -> DVector<T> {
        self.values
    }

    pub fn cast<U: Real>(&self) -> Embedding<U> {
        Embedding {
            values: self.values.map(|v| U::lit(v.as_f64())),
        }
    }

    /// See [`length_normalize`].
    pub fn length_normalized(&self) -> Result<Self> {
        length_normalize(self)
    }
}

/// Rescales `e` so that its Euclidean norm equals `sqrt(d)`.
pub fn length_normalize<T: Real>(e: &Embedding<T>) -> Result<Embedding<T>> {
    let norm = e.values.norm();
    if norm == T::zero() {
        return Err(Error::DegenerateEmbedding);
    }
    let target = T::from_usize(e.dim()).expect("dimension fits scalar").sqrt();
    Ok(Embedding {
        values: &e.values * (target / norm),
    })
}
