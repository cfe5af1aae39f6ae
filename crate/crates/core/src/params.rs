use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Order `k` and rate `lambda` of the distribution.
///
/// `lambda = 0` is accepted as the degenerate point mass at zero.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OrderKParams {
    k: u32,
    lambda: f64,
}

impl OrderKParams {
    pub fn new(k: u32, lambda: f64) -> Result<Self> {
        if k == 0 {
            return Err(Error::invalid("order k must be at least 1"));
        }
        if !lambda.is_finite() || lambda < 0.0 {
            return Err(Error::invalid(format!(
                "lambda must be finite and non-negative, got {lambda}"
            )));
        }
        Ok(Self { k, lambda })
    }

    pub fn k(&self) -> u32 {
        self.k
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    /// `k * lambda`, the exponent of the normalising factor.
    pub fn k_lambda(&self) -> f64 {
        self.k as f64 * self.lambda
    }

    pub fn kappa(&self) -> u64 {
        kappa(self.k)
    }

    /// `floor(kappa * lambda)`, the floor of the mean.
    pub fn floor_mean(&self) -> usize {
        (self.kappa() as f64 * self.lambda).floor() as usize
    }

    pub fn derived(&self) -> DerivedParams {
        DerivedParams::of(self)
    }
}

/// `k(k+1)/2`.
pub fn kappa(k: u32) -> u64 {
    let k = k as u64;
    k * (k + 1) / 2
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DerivedParams {
    pub kappa: u64,
    pub mean: f64,
    pub variance: f64,
}

impl DerivedParams {
    pub fn of(params: &OrderKParams) -> Self {
        let k = params.k() as u64;
        let kappa = kappa(params.k());
        let lambda = params.lambda();
        Self {
            kappa,
            mean: kappa as f64 * lambda,
            variance: (k * (k + 1) * (2 * k + 1)) as f64 * lambda / 6.0,
        }
    }

    pub fn std_dev(&self) -> f64 {
        self.variance.sqrt()
    }
}
