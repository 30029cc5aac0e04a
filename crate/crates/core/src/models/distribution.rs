use crate::{Error, Result};

/// `M` classes with positive, strictly increasing attributes (degrees or
/// activity rates) and probability weights summing to one.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassDistribution {
    values: Vec<f64>,
    weights: Vec<f64>,
}

impl ClassDistribution {
    /// Weights are renormalized to sum to one.
    pub fn new(values: Vec<f64>, weights: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidInput("need at least one class".into()));
        }
        if values.len() != weights.len() {
            return Err(Error::InvalidInput(format!(
                "{} class values but {} weights",
                values.len(),
                weights.len()
            )));
        }
        if values.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
            return Err(Error::InvalidInput("class values must be positive".into()));
        }
        if values.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidInput("class values must be strictly increasing".into()));
        }
        if weights.iter().any(|w| !(w.is_finite() && *w > 0.0)) {
            return Err(Error::InvalidInput("class weights must be positive".into()));
        }
        let total: f64 = weights.iter().sum();
        let weights = weights.into_iter().map(|w| w / total).collect();
        Ok(Self { values, weights })
    }

    /// Weights `p_i ~ values_i^-gamma`.
    pub fn power_law(values: Vec<f64>, gamma: f64) -> Result<Self> {
        let weights = power_law_weights(&values, gamma)?;
        Self::new(values, weights)
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Mean attribute `<k>` (or `<a>`).
    pub fn mean(&self) -> f64 {
        self.values.iter().zip(&self.weights).map(|(v, w)| v * w).sum()
    }
}

/// Normalized power-law weights `v_i^-gamma / sum_j v_j^-gamma`.
pub fn power_law_weights(values: &[f64], gamma: f64) -> Result<Vec<f64>> {
    if values.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
        return Err(Error::InvalidInput("power-law values must be positive".into()));
    }
    if !gamma.is_finite() {
        return Err(Error::InvalidInput("exponent must be finite".into()));
    }
    let raw: Vec<f64> = values.iter().map(|v| v.powf(-gamma)).collect();
    let total: f64 = raw.iter().sum();
    Ok(raw.into_iter().map(|r| r / total).collect())
}
