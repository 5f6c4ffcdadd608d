//! Targeted local projections and smooth local projections.
//!
//! TLP shrinks the LP coefficient at each horizon toward the VAR response:
//! `beta_TLP = v * beta_LP + (1 - v) * beta_VAR`, with `v` minimizing the
//! feasible risk
//! `T (1-v)^2 delta^2 + 2 (v^2 S_LP + (1-v)^2 S_VAR + 2 v (1-v) S_COV)`.
//! SLP instead penalizes second differences of the whole response path.

use crate::error::{Error, Result};
use crate::estimators::{lp_moments, LpMoments};
use crate::linalg::{cholesky_lower, cholesky_solve_in_place, Matrix};
use crate::scalar::Scalar;
use crate::types::{IrfPath, Method, ShockTarget, TimeSeriesPanel};

/// Per-horizon variances of `sqrt(T) beta_LP`, `sqrt(T) beta_VAR` and their covariance.
#[derive(Debug, Clone, PartialEq)]
pub struct VarianceTriple<S> {
    pub sigma_lp: Vec<S>,
    pub sigma_var: Vec<S>,
    pub sigma_cov: Vec<S>,
}

/// One horizon of a [`VarianceTriple`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TripleAt<S> {
    pub lp: S,
    pub var: S,
    pub cov: S,
}

impl<S: Scalar> TripleAt<S> {
    pub fn new(lp: S, var: S, cov: S) -> Self {
        Self { lp, var, cov }
    }

    pub fn scaled(&self, c: S) -> Self {
        Self::new(self.lp * c, self.var * c, self.cov * c)
    }
}

impl<S: Scalar> VarianceTriple<S> {
    pub fn new(sigma_lp: Vec<S>, sigma_var: Vec<S>, sigma_cov: Vec<S>) -> Result<Self> {
        let triple = Self {
            sigma_lp,
            sigma_var,
            sigma_cov,
        };
        triple.validate()?;
        Ok(triple)
    }

    pub fn horizons(&self) -> usize {
        self.sigma_lp.len()
    }

    pub fn at(&self, h: usize) -> TripleAt<S> {
        TripleAt::new(self.sigma_lp[h], self.sigma_var[h], self.sigma_cov[h])
    }

    pub fn scaled(&self, c: S) -> Self {
        let s = |v: &[S]| v.iter().map(|&x| x * c).collect();
        Self {
            sigma_lp: s(&self.sigma_lp),
            sigma_var: s(&self.sigma_var),
            sigma_cov: s(&self.sigma_cov),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.sigma_lp.len();
        if self.sigma_var.len() != n || self.sigma_cov.len() != n {
            return Err(Error::ShapeMismatch(
                "variance triple components differ in length".into(),
            ));
        }
        for h in 0..n {
            let t = self.at(h);
            if !(t.lp > S::zero() && t.var > S::zero()) {
                return Err(Error::InvalidSpec(format!(
                    "LP and VAR variances must be positive at horizon {h}"
                )));
            }
            if t.cov.abs() > (t.lp * t.var).sqrt() + S::lit(1e-9) {
                return Err(Error::InvalidSpec(format!(
                    "covariance violates Cauchy-Schwarz at horizon {h}"
                )));
            }
        }
        Ok(())
    }
}

/// Feasible risk of the TLP combination with weight `v` on LP.
pub fn tlp_risk<S: Scalar>(v: S, delta: S, t: usize, triple: &TripleAt<S>) -> S {
    let two = S::lit(2.0);
    let w = S::one() - v;
    S::from_usize_lossy(t) * w * w * delta * delta
        + two * (v * v * triple.lp + w * w * triple.var + two * v * w * triple.cov)
}

/// Risk-minimizing weight, with flags for the boundary cases.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeightChoice<S> {
    pub v: S,
    /// The unconstrained minimizer fell outside `[0, 1]`.
    pub clipped: bool,
    /// Denominator below `1e-14`; `v` falls back to 1 (pure LP).
    pub degenerate: bool,
}

fn ratio_weight<S: Scalar>(bias_sq: S, triple: &TripleAt<S>) -> WeightChoice<S> {
    let two = S::lit(2.0);
    let num = bias_sq + two * (triple.var - triple.cov);
    let den = bias_sq + two * (triple.lp + triple.var - two * triple.cov);
    if !(den.abs() >= S::lit(1e-14)) {
        return WeightChoice {
            v: S::one(),
            clipped: false,
            degenerate: true,
        };
    }
    let raw = num / den;
    // A negative denominator makes the risk concave in v; its minimum over
    // [0, 1] is then at whichever end is lower.
    let (v, clipped) = if den < S::zero() {
        let at_one = two * triple.lp;
        let at_zero = bias_sq + two * triple.var;
        (if at_one <= at_zero { S::one() } else { S::zero() }, true)
    } else if raw < S::zero() {
        (S::zero(), true)
    } else if raw > S::one() {
        (S::one(), true)
    } else {
        (raw, false)
    };
    WeightChoice {
        v,
        clipped,
        degenerate: false,
    }
}

/// Closed-form minimizer of [`tlp_risk`] over `[0, 1]`.
pub fn optimal_weight<S: Scalar>(delta: S, t: usize, triple: &TripleAt<S>) -> WeightChoice<S> {
    ratio_weight(S::from_usize_lossy(t) * delta * delta, triple)
}

/// Probability limit of the optimal weight given the asymptotic bias of the
/// VAR response and the limiting variances.
pub fn limit_weight<S: Scalar>(abias: S, triple: &TripleAt<S>) -> WeightChoice<S> {
    ratio_weight(abias * abias, triple)
}

/// Horizon-uniform model-averaging weight `M^2 / (M^2 + 1)`.
pub fn uniform_ma_weight<S: Scalar>(m: S) -> S {
    let m2 = m * m;
    m2 / (m2 + S::one())
}

/// Per-horizon weights on LP and the implied ridge penalties
/// `lambda_h = X'X (1 - v) / v` (infinite when `v = 0`).
#[derive(Debug, Clone, PartialEq)]
pub struct TlpWeights<S> {
    pub v: Vec<S>,
    pub lambda_implied: Vec<S>,
    pub clipped: Vec<bool>,
}

impl<S: Scalar> TlpWeights<S> {
    pub fn from_weights(v: Vec<S>, xtx: &[S]) -> Result<Self> {
        if v.len() != xtx.len() {
            return Err(Error::ShapeMismatch("weights and X'X differ in length".into()));
        }
        let lambda_implied = v
            .iter()
            .zip(xtx)
            .map(|(&w, &x)| {
                if w == S::zero() {
                    S::infinity()
                } else {
                    x * (S::one() - w) / w
                }
            })
            .collect();
        let clipped = vec![false; v.len()];
        Ok(Self {
            v,
            lambda_implied,
            clipped,
        })
    }

    /// Weights from [`optimal_weight`] at each horizon.
    pub fn optimal(delta: &[S], t: usize, triple: &VarianceTriple<S>, xtx: &[S]) -> Result<Self> {
        if delta.len() != triple.horizons() {
            return Err(Error::ShapeMismatch(
                "delta and variance triple differ in length".into(),
            ));
        }
        let choices: Vec<_> = delta
            .iter()
            .enumerate()
            .map(|(h, &d)| optimal_weight(d, t, &triple.at(h)))
            .collect();
        let mut w = Self::from_weights(choices.iter().map(|c| c.v).collect(), xtx)?;
        w.clipped = choices.iter().map(|c| c.clipped || c.degenerate).collect();
        Ok(w)
    }

    pub fn uniform(v: S, horizons: usize) -> Self {
        Self {
            v: vec![v; horizons],
            lambda_implied: vec![S::nan(); horizons],
            clipped: vec![false; horizons],
        }
    }
}

/// `v_h * lp_h + (1 - v_h) * var_h` at every horizon.
pub fn tlp_combine<S: Scalar>(lp: &IrfPath<S>, var: &IrfPath<S>, weights: &TlpWeights<S>) -> Result<IrfPath<S>> {
    if lp.target != var.target || lp.beta.len() != weights.v.len() {
        return Err(Error::ShapeMismatch(
            "LP path, VAR path and weights must share target and horizons".into(),
        ));
    }
    let beta = combine(&lp.beta, &var.beta, &weights.v);
    IrfPath::new(Method::Tlp, lp.target, beta)
}

pub(crate) fn combine<S: Scalar>(lp: &[S], var: &[S], v: &[S]) -> Vec<S> {
    lp.iter()
        .zip(var)
        .zip(v)
        .map(|((&l, &r), &w)| w * l + (S::one() - w) * r)
        .collect()
}

/// Variance of the combination at fixed weights:
/// `v^2 S_LP + (1-v)^2 S_VAR + 2 v (1-v) S_COV`.
pub fn tlp_variance<S: Scalar>(weights: &TlpWeights<S>, triple: &VarianceTriple<S>) -> Vec<S> {
    weights
        .v
        .iter()
        .enumerate()
        .map(|(h, &v)| combination_variance(v, &triple.at(h)))
        .collect()
}

pub(crate) fn combination_variance<S: Scalar>(v: S, t: &TripleAt<S>) -> S {
    let w = S::one() - v;
    v * v * t.lp + w * w * t.var + S::lit(2.0) * v * w * t.cov
}

/// Second-difference matrix `L` ((H-2) x H) and `P = L'L`.
pub fn slp_build_penalty<S: Scalar>(horizons: usize) -> Result<(Matrix<S>, Matrix<S>)> {
    if horizons < 3 {
        return Err(Error::TooFewHorizons(horizons));
    }
    let mut l = Matrix::zeros(horizons - 2, horizons);
    for r in 0..horizons - 2 {
        l[(r, r)] = S::one();
        l[(r, r + 1)] = S::lit(-2.0);
        l[(r, r + 2)] = S::one();
    }
    let p = l.transpose().matmul(&l);
    Ok((l, p))
}

/// Smooth-LP fit with its smoothing parameter.
#[derive(Debug, Clone, PartialEq)]
pub struct SlpFit<S> {
    pub lambda_tilde: S,
    pub beta: IrfPath<S>,
}

impl<S> SlpFit<S> {
    pub const PENALTY_ORDER: usize = 2;
}

fn slp_system<S: Scalar>(moments: &LpMoments<S>, lambda: S) -> Result<Matrix<S>> {
    let h = moments.horizons();
    if lambda < S::zero() || !lambda.is_finite() {
        return Err(Error::InvalidSpec("smoothing parameter must be finite and >= 0".into()));
    }
    let mut a = if lambda == S::zero() {
        Matrix::zeros(h, h)
    } else {
        slp_build_penalty::<S>(h)?.1.scale(lambda)
    };
    for (i, &x) in moments.xtx.iter().enumerate() {
        a[(i, i)] += x;
    }
    Ok(a)
}

/// Solves `(diag(X'X) + lambda P) beta = X'Y` with each horizon's block
/// collapsed to its scalar moments.
pub fn slp_from_moments<S: Scalar>(moments: &LpMoments<S>, lambda: S) -> Result<Vec<S>> {
    let a = slp_system(moments, lambda)?;
    let l = cholesky_lower(&a).map_err(|_| Error::SingularSystem)?;
    let mut beta = moments.xty.clone();
    cholesky_solve_in_place(&l, &mut beta);
    Ok(beta)
}

/// Smoother matrix `psi = (X'X + lambda P)^{-1} X'X`.
pub fn slp_smoother<S: Scalar>(moments: &LpMoments<S>, lambda: S) -> Result<Matrix<S>> {
    let a = slp_system(moments, lambda)?;
    let l = cholesky_lower(&a).map_err(|_| Error::SingularSystem)?;
    let h = moments.horizons();
    let mut psi = Matrix::zeros(h, h);
    let mut col = vec![S::zero(); h];
    for c in 0..h {
        col.iter_mut().for_each(|x| *x = S::zero());
        col[c] = moments.xtx[c];
        cholesky_solve_in_place(&l, &mut col);
        for r in 0..h {
            psi[(r, c)] = col[r];
        }
    }
    Ok(psi)
}

/// Diagonal of the sandwich `psi diag(omega) psi'`, the SLP variance implied
/// by per-horizon LP variances `omega`.
pub fn slp_variance<S: Scalar>(moments: &LpMoments<S>, lambda: S, omega: &[S]) -> Result<Vec<S>> {
    let psi = slp_smoother(moments, lambda)?;
    Ok((0..psi.nrows())
        .map(|r| psi.row(r).iter().zip(omega).map(|(&p, &o)| p * p * o).sum())
        .collect())
}

pub fn estimate_slp<S: Scalar>(
    panel: &TimeSeriesPanel<S>,
    target: &ShockTarget,
    p: usize,
    lambda_tilde: S,
) -> Result<SlpFit<S>> {
    let moments = lp_moments(panel, target, p)?;
    let beta = IrfPath::new(Method::Slp, *target, slp_from_moments(&moments, lambda_tilde)?)?;
    Ok(SlpFit { lambda_tilde, beta })
}

/// Zero plus 50 log-spaced points from `1e-4` to `1e4` times `tr(X'X)`.
pub fn default_lambda_grid<S: Scalar>(moments: &LpMoments<S>) -> Vec<S> {
    let tr: S = moments.xtx.iter().copied().sum();
    let (lo, hi) = (S::lit(1e-4).ln(), S::lit(1e4).ln());
    let mut grid = vec![S::zero()];
    let n = 50;
    for g in 0..n {
        let frac = S::from_usize_lossy(g) / S::from_usize_lossy(n - 1);
        grid.push(tr * (lo + (hi - lo) * frac).exp());
    }
    grid
}

/// Unbiased risk estimate `T ||beta_SLP - beta_LP||^2 + 2 tr(psi Sigma)` with
/// `Sigma = diag(sigma_lp)` (variances of `sqrt(T) beta_LP`).
pub fn slp_ure<S: Scalar>(lp: &[S], moments: &LpMoments<S>, sigma_lp: &[S], t: usize, lambda: S) -> Result<S> {
    let beta = slp_from_moments(moments, lambda)?;
    let psi = slp_smoother(moments, lambda)?;
    let dist: S = beta.iter().zip(lp).map(|(&a, &b)| (a - b) * (a - b)).sum();
    let trace: S = sigma_lp.iter().enumerate().map(|(h, &s)| psi[(h, h)] * s).sum();
    Ok(S::from_usize_lossy(t) * dist + S::lit(2.0) * trace)
}

/// URE-minimizing smoothing parameter over `grid`; ties go to the earliest
/// grid point.
pub fn slp_select_lambda<S: Scalar>(
    lp: &[S],
    moments: &LpMoments<S>,
    sigma_lp: &[S],
    t: usize,
    grid: &[S],
) -> Result<(S, S)> {
    if grid.is_empty() {
        return Err(Error::InvalidSpec("smoothing grid must be non-empty".into()));
    }
    if lp.len() != moments.horizons() || sigma_lp.len() != moments.horizons() {
        return Err(Error::ShapeMismatch("URE inputs differ in horizon count".into()));
    }
    let mut best: Option<(S, S)> = None;
    for &lambda in grid {
        let risk = slp_ure(lp, moments, sigma_lp, t, lambda)?;
        if best.is_none_or(|(_, r)| risk < r) {
            best = Some((lambda, risk));
        }
    }
    Ok(best.expect("non-empty grid"))
}
