//! Shared domain types: panels, shock targets, impulse response paths.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::scalar::Scalar;

/// Observed multivariate series, `T` rows (time) by `k` columns (variables).
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeriesPanel<S> {
    values: Matrix<S>,
}

impl<S: Scalar> TimeSeriesPanel<S> {
    pub fn new(values: Matrix<S>) -> Result<Self> {
        if values.nrows() == 0 || values.ncols() == 0 {
            return Err(Error::InvalidSpec("panel must have T >= 1 and k >= 1".into()));
        }
        if !values.all_finite() {
            return Err(Error::InvalidSpec("panel contains non-finite values".into()));
        }
        Ok(Self { values })
    }

    /// Number of time periods `T`.
    #[inline]
    pub fn len(&self) -> usize {
        self.values.nrows()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.values.nrows() == 0
    }

    /// Number of variables `k`.
    #[inline]
    pub fn vars(&self) -> usize {
        self.values.ncols()
    }

    #[inline]
    pub fn values(&self) -> &Matrix<S> {
        &self.values
    }

    #[inline]
    pub fn obs(&self, t: usize) -> &[S] {
        self.values.row(t)
    }

    #[inline]
    pub fn at(&self, t: usize, var: usize) -> S {
        self.values[(t, var)]
    }

    pub fn series(&self, var: usize) -> Vec<S> {
        self.values.column(var)
    }

    /// Sample covariance with divisor `T`.
    pub fn sample_covariance(&self) -> Matrix<S> {
        self.autocovariance(0)
    }

    /// `(1/T) sum_t (y_t - m)(y_{t-lag} - m)'`.
    pub fn autocovariance(&self, lag: usize) -> Matrix<S> {
        let (t_len, k) = (self.len(), self.vars());
        let n = S::from_usize_lossy(t_len);
        let mean: Vec<S> = (0..k)
            .map(|j| (0..t_len).map(|t| self.at(t, j)).sum::<S>() / n)
            .collect();
        let mut c = Matrix::zeros(k, k);
        for t in lag..t_len {
            for a in 0..k {
                for b in 0..k {
                    c[(a, b)] += (self.at(t, a) - mean[a]) * (self.at(t - lag, b) - mean[b]);
                }
            }
        }
        c.scale(n.recip())
    }
}

/// Response variable `i`, shock `j` (both 1-based) and the last horizon.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ShockTarget {
    pub response: usize,
    pub shock: usize,
    pub h_max: usize,
}

impl ShockTarget {
    pub fn new(response: usize, shock: usize, h_max: usize) -> Self {
        Self { response, shock, h_max }
    }

    pub fn validate(&self, k: usize) -> Result<()> {
        if self.response == 0 || self.response > k || self.shock == 0 || self.shock > k {
            return Err(Error::InvalidSpec(format!(
                "response/shock indices must lie in 1..={k}, got ({}, {})",
                self.response, self.shock
            )));
        }
        Ok(())
    }

    /// 0-based response column.
    #[inline]
    pub fn i(&self) -> usize {
        self.response - 1
    }

    /// 0-based shock column.
    #[inline]
    pub fn j(&self) -> usize {
        self.shock - 1
    }

    #[inline]
    pub fn horizons(&self) -> usize {
        self.h_max + 1
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Method {
    #[serde(rename = "LP")]
    Lp,
    #[serde(rename = "VAR")]
    Var,
    #[serde(rename = "SLP")]
    Slp,
    #[serde(rename = "TLP")]
    Tlp,
}

impl Method {
    pub const ALL: [Method; 4] = [Method::Lp, Method::Var, Method::Slp, Method::Tlp];

    pub fn as_str(&self) -> &'static str {
        match self {
            Method::Lp => "LP",
            Method::Var => "VAR",
            Method::Slp => "SLP",
            Method::Tlp => "TLP",
        }
    }

    pub fn index(&self) -> usize {
        match self {
            Method::Lp => 0,
            Method::Var => 1,
            Method::Slp => 2,
            Method::Tlp => 3,
        }
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Method {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "LP" => Ok(Method::Lp),
            "VAR" => Ok(Method::Var),
            "SLP" => Ok(Method::Slp),
            "TLP" => Ok(Method::Tlp),
            other => Err(Error::InvalidSpec(format!("unknown method {other:?}"))),
        }
    }
}

/// Scalar impulse responses at horizons `0..=h_max` for one method.
#[derive(Debug, Clone, PartialEq)]
pub struct IrfPath<S> {
    pub method: Method,
    pub target: ShockTarget,
    pub beta: Vec<S>,
}

impl<S: Scalar> IrfPath<S> {
    pub fn new(method: Method, target: ShockTarget, beta: Vec<S>) -> Result<Self> {
        if beta.len() != target.horizons() {
            return Err(Error::ShapeMismatch(format!(
                "path has {} horizons, target expects {}",
                beta.len(),
                target.horizons()
            )));
        }
        if beta.iter().any(|b| !b.is_finite()) {
            return Err(Error::InvalidSpec("impulse response is not finite".into()));
        }
        Ok(Self { method, target, beta })
    }

    #[inline]
    pub fn h_max(&self) -> usize {
        self.target.h_max
    }
}
