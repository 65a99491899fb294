use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Dense row-major table with an explicit shape.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Real", deserialize = "T: Real"))]
pub struct Table<T> {
    shape: Vec<usize>,
    data: Vec<T>,
}

impl<T: Real> Table<T> {
    pub fn new(shape: Vec<usize>, data: Vec<T>) -> Result<Self> {
        let expected: usize = shape.iter().product();
        if expected != data.len() {
            return Err(Error::ModelInvalid(format!(
                "table of shape {shape:?} needs {expected} entries, got {}",
                data.len()
            )));
        }
        Ok(Self { shape, data })
    }

    pub fn from_fn(shape: Vec<usize>, mut f: impl FnMut() -> T) -> Self {
        let len = shape.iter().product();
        let data = (0..len).map(|_| f()).collect();
        Self { shape, data }
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn data(&self) -> &[T] {
        &self.data
    }

    /// Unchecked in release builds; callers validate indices up front.
    #[inline]
    pub fn at(&self, idx: &[usize]) -> T {
        debug_assert_eq!(idx.len(), self.shape.len());
        let mut flat = 0;
        for (i, (&k, &dim)) in idx.iter().zip(&self.shape).enumerate() {
            debug_assert!(k < dim, "axis {i}: {k} >= {dim}");
            flat = flat * dim + k;
        }
        self.data[flat]
    }

    pub(crate) fn expect_shape(&self, what: &str, shape: &[usize]) -> Result<()> {
        if self.shape == shape {
            Ok(())
        } else {
            Err(Error::ModelInvalid(format!("{what} has shape {:?}, expected {shape:?}", self.shape)))
        }
    }

    pub(crate) fn expect_bounded(&self, what: &str) -> Result<()> {
        match self.data.iter().find(|v| v.is_nan() || v.abs() > T::one()) {
            None => Ok(()),
            Some(v) => Err(Error::ModelInvalid(format!("{what} entry {v} outside [-1, 1]"))),
        }
    }

    pub(crate) fn expect_nonnegative(&self, what: &str) -> Result<()> {
        match self.data.iter().find(|v| !v.is_finite() || **v < T::zero()) {
            None => Ok(()),
            Some(v) => Err(Error::ModelInvalid(format!("{what} entry {v} is negative or non-finite"))),
        }
    }
}

/// Checks a probability vector: entries non-negative and summing to one.
pub(crate) fn check_weights<T: Real>(what: &str, w: &[T], tol: T) -> Result<()> {
    if w.is_empty() {
        return Err(Error::ModelInvalid(format!("{what} is empty")));
    }
    if let Some(v) = w.iter().find(|v| !v.is_finite() || **v < T::zero()) {
        return Err(Error::ModelInvalid(format!("{what} has invalid weight {v}")));
    }
    let total = w.iter().fold(T::zero(), |acc, &v| acc + v);
    if (total - T::one()).abs() > tol {
        return Err(Error::ModelInvalid(format!("{what} sums to {total}, not 1")));
    }
    Ok(())
}
