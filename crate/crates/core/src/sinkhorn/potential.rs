use crate::error::{Error, Result};

/// Real function on the support of a discrete measure.
///
/// `base_index` marks the point pinned to zero by [`Potential::normalize`].
#[derive(Clone, Debug, PartialEq)]
pub struct Potential {
    values: Vec<f64>,
    base_index: usize,
    k: f64,
}

impl Potential {
    pub fn new(values: Vec<f64>, k: f64) -> Result<Self> {
        Self::with_base(values, 0, k)
    }

    pub fn with_base(values: Vec<f64>, base_index: usize, k: f64) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidArgument("empty potential".into()));
        }
        if base_index >= values.len() {
            return Err(Error::InvalidArgument(format!(
                "base index {base_index} out of range for {} values",
                values.len()
            )));
        }
        if !(k.is_finite() && k > 0.0) {
            return Err(Error::InvalidArgument(format!("k = {k} must be positive")));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!("potential value at index {i}")));
        }
        Ok(Potential { values, base_index, k })
    }

    pub fn zeros(len: usize, k: f64) -> Result<Self> {
        Self::new(vec![0.0; len], k)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn base_index(&self) -> usize {
        self.base_index
    }

    pub fn k(&self) -> f64 {
        self.k
    }

    /// Subtract the value at the base point, so that `u(base) = 0`.
    pub fn normalize(&mut self) {
        let c = self.values[self.base_index];
        for v in &mut self.values {
            *v -= c;
        }
    }

    pub fn normalized(&self) -> Self {
        let mut out = self.clone();
        out.normalize();
        out
    }

    /// The potential `u + c`.
    pub fn shifted(&self, c: f64) -> Self {
        Potential {
            values: self.values.iter().map(|v| v + c).collect(),
            base_index: self.base_index,
            k: self.k,
        }
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// `sup |self - other|`.
    pub fn sup_distance(&self, other: &Potential) -> Result<f64> {
        if self.len() != other.len() {
            return Err(Error::SupportMismatch { left: self.len(), right: other.len() });
        }
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max))
    }
}
