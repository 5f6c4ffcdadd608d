//! Local-to-VARMA data generating processes and their ground-truth responses.
//!
//! The process is
//! `y_t = A y_{t-1} + Gamma (eps_t + eta * sum_l alpha_l eps_{t-l})`
//! with `Gamma` unit lower triangular and `eta` a (possibly `T`-dependent)
//! misspecification scale.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::linalg::{inverse, spectral_radius, Matrix};
use crate::lyapunov::lyapunov_solve;
use crate::rng::RngStream;
use crate::scalar::Scalar;
use crate::types::{ShockTarget, TimeSeriesPanel};

/// Scale `eta` multiplying the MA lag polynomial.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MisScale<S> {
    /// `eta` independent of the sample size.
    Fixed(S),
    /// `eta = factor * T^(-zeta)`.
    Power { factor: S, zeta: S },
}

impl<S: Scalar> MisScale<S> {
    pub fn eta(&self, t: usize) -> S {
        match *self {
            MisScale::Fixed(eta) => eta,
            MisScale::Power { factor, zeta } => factor * S::from_usize_lossy(t).powf(-zeta),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum InnovationLaw<S> {
    GaussianIid,
    /// Independent GARCH(1,1) per shock: `s2_t = omega + alpha e_{t-1}^2 + beta s2_{t-1}`.
    Garch11 {
        omega: S,
        alpha: S,
        beta: S,
    },
}

impl<S: Scalar> InnovationLaw<S> {
    /// Unconditional variance of each structural shock.
    pub fn shock_variance(&self) -> S {
        match *self {
            InnovationLaw::GaussianIid => S::one(),
            InnovationLaw::Garch11 { omega, alpha, beta } => omega / (S::one() - alpha - beta),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DgpSpec<S> {
    pub a: Matrix<S>,
    pub gamma: Matrix<S>,
    /// `alpha_1 .. alpha_L`; may be empty.
    pub ma_coeffs: Vec<Matrix<S>>,
    pub mis_scale: MisScale<S>,
    pub innovations: InnovationLaw<S>,
    pub burn_in: usize,
}

pub const DEFAULT_BURN_IN: usize = 500;

impl<S: Scalar> DgpSpec<S> {
    pub fn new(
        a: Matrix<S>,
        gamma: Matrix<S>,
        ma_coeffs: Vec<Matrix<S>>,
        mis_scale: MisScale<S>,
        innovations: InnovationLaw<S>,
        burn_in: usize,
    ) -> Result<Self> {
        let spec = Self {
            a,
            gamma,
            ma_coeffs,
            mis_scale,
            innovations,
            burn_in,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn vars(&self) -> usize {
        self.a.nrows()
    }

    pub fn ma_order(&self) -> usize {
        self.ma_coeffs.len()
    }

    pub fn validate(&self) -> Result<()> {
        let k = self.a.nrows();
        if k == 0 || !self.a.is_square() {
            return Err(Error::InvalidSpec("A must be a non-empty square matrix".into()));
        }
        if self.gamma.nrows() != k || self.gamma.ncols() != k {
            return Err(Error::InvalidSpec("Gamma must be k x k".into()));
        }
        if !self.a.all_finite() || !self.gamma.all_finite() {
            return Err(Error::InvalidSpec("A and Gamma must be finite".into()));
        }
        let radius = spectral_radius(&self.a);
        if !(radius < S::one()) {
            return Err(Error::InvalidSpec(format!(
                "spectral radius of A must be below 1 (got {radius})"
            )));
        }
        if !self.gamma.is_lower_triangular() {
            return Err(Error::InvalidSpec("Gamma must be lower triangular".into()));
        }
        if self.gamma.diagonal().iter().any(|&d| d != S::one()) {
            return Err(Error::InvalidSpec("Gamma diagonal must be 1".into()));
        }
        for (l, m) in self.ma_coeffs.iter().enumerate() {
            if m.nrows() != k || m.ncols() != k || !m.all_finite() {
                return Err(Error::InvalidSpec(format!(
                    "MA coefficient {} must be a finite k x k matrix",
                    l + 1
                )));
            }
        }
        match self.mis_scale {
            MisScale::Fixed(eta) if !(eta >= S::zero() && eta.is_finite()) => {
                return Err(Error::InvalidSpec("misspecification scale must be >= 0".into()));
            }
            MisScale::Power { factor, zeta } if !(factor >= S::zero() && factor.is_finite() && zeta.is_finite()) => {
                return Err(Error::InvalidSpec(
                    "misspecification factor must be >= 0 and zeta finite".into(),
                ));
            }
            _ => {}
        }
        if let InnovationLaw::Garch11 { omega, alpha, beta } = self.innovations {
            if !(omega > S::zero()) {
                return Err(Error::InvalidSpec("GARCH omega must be positive".into()));
            }
            if !(alpha >= S::zero() && beta >= S::zero()) {
                return Err(Error::InvalidSpec("GARCH alpha and beta must be non-negative".into()));
            }
            if !(alpha + beta < S::one()) {
                return Err(Error::InvalidSpec(
                    "GARCH alpha + beta must be below 1 (finite unconditional variance)".into(),
                ));
            }
        }
        if self.burn_in == 0 {
            return Err(Error::InvalidSpec("burn_in must be positive".into()));
        }
        Ok(())
    }

    /// Copy with every MA coefficient multiplied by `c`.
    pub fn with_scaled_ma(&self, c: S) -> Self {
        Self {
            ma_coeffs: self.ma_coeffs.iter().map(|m| m.scale(c)).collect(),
            ..self.clone()
        }
    }
}

/// Conditional-variance recursion and MA shock history.
#[derive(Debug, Clone)]
pub struct InnovationState<S> {
    pub sigma2: Vec<S>,
    prev_eps: Vec<S>,
    /// Ring buffer of the last `L` shock vectors; `head` is the most recent.
    history: Vec<Vec<S>>,
    head: usize,
}

impl<S: Scalar> InnovationState<S> {
    fn new(k: usize, lags: usize, law: &InnovationLaw<S>) -> Self {
        let v = law.shock_variance();
        Self {
            sigma2: vec![v; k],
            prev_eps: vec![S::zero(); k],
            history: vec![vec![S::zero(); k]; lags],
            head: 0,
        }
    }

    fn draw<R: Rng>(&mut self, law: &InnovationLaw<S>, rng: &mut R, first: bool) -> Vec<S> {
        let k = self.sigma2.len();
        let mut eps = Vec::with_capacity(k);
        for c in 0..k {
            let z = S::lit(rng.sample::<f64, _>(StandardNormal));
            match *law {
                InnovationLaw::GaussianIid => eps.push(z),
                InnovationLaw::Garch11 { omega, alpha, beta } => {
                    if !first {
                        let e = self.prev_eps[c];
                        self.sigma2[c] = omega + alpha * e * e + beta * self.sigma2[c];
                    }
                    eps.push(self.sigma2[c].sqrt() * z);
                }
            }
        }
        self.prev_eps.clone_from(&eps);
        eps
    }

    fn push(&mut self, eps: Vec<S>) {
        if self.history.is_empty() {
            return;
        }
        self.head = (self.head + self.history.len() - 1) % self.history.len();
        self.history[self.head] = eps;
    }

    /// Shock vector `l` periods back (`l >= 1`).
    fn lagged(&self, l: usize) -> &[S] {
        &self.history[(self.head + l - 1) % self.history.len()]
    }
}

/// Draws a `T x k` panel. Shocks are drawn for `L` pre-sample periods, then
/// `burn_in + T` periods from `y = 0`; the burn-in is discarded.
pub fn simulate<S: Scalar>(spec: &DgpSpec<S>, t: usize, stream: &RngStream) -> Result<TimeSeriesPanel<S>> {
    spec.validate()?;
    if t == 0 {
        return Err(Error::InvalidSpec("sample size must be positive".into()));
    }
    let k = spec.vars();
    let lags = spec.ma_order();
    let eta = spec.mis_scale.eta(t);
    let use_ma = lags > 0 && eta != S::zero();
    let mut rng = stream.rng();
    let mut state = InnovationState::new(k, lags, &spec.innovations);

    let mut first = true;
    for _ in 0..lags {
        let eps = state.draw(&spec.innovations, &mut rng, first);
        first = false;
        state.push(eps);
    }

    let mut y = vec![S::zero(); k];
    let mut out = Vec::with_capacity(t * k);
    let mut shock = vec![S::zero(); k];
    for step in 0..spec.burn_in + t {
        let eps = state.draw(&spec.innovations, &mut rng, first);
        first = false;
        shock.copy_from_slice(&eps);
        if use_ma {
            for l in 1..=lags {
                let past = state.lagged(l);
                let alpha = &spec.ma_coeffs[l - 1];
                for (r, s) in shock.iter_mut().enumerate() {
                    let row = alpha.row(r);
                    let mut acc = S::zero();
                    for c in 0..k {
                        acc += row[c] * past[c];
                    }
                    *s += eta * acc;
                }
            }
        }
        let u = spec.gamma.mat_vec(&shock);
        let ay = spec.a.mat_vec(&y);
        for r in 0..k {
            y[r] = ay[r] + u[r];
        }
        if step >= spec.burn_in {
            out.extend_from_slice(&y);
        }
        state.push(eps);
    }
    TimeSeriesPanel::new(Matrix::from_vec(t, k, out)?)
}

/// True impulse responses `J_i'(A^h Gamma + eta sum_{l<=h} A^{h-l} Gamma alpha_l) J_j`
/// for `h = 0..=h_max`, with `eta` evaluated at sample size `t`.
pub fn true_irf<S: Scalar>(spec: &DgpSpec<S>, target: &ShockTarget, t: usize) -> Result<Vec<S>> {
    spec.validate()?;
    target.validate(spec.vars())?;
    let eta = spec.mis_scale.eta(t);
    let (i, j) = (target.i(), target.j());
    // M_h = A M_{h-1} + eta Gamma alpha_h, M_0 = Gamma
    let mut m = spec.gamma.clone();
    let mut beta = Vec::with_capacity(target.horizons());
    beta.push(m[(i, j)]);
    for h in 1..=target.h_max {
        m = spec.a.matmul(&m);
        if let Some(alpha) = spec.ma_coeffs.get(h - 1) {
            if eta != S::zero() {
                m = m.add(&spec.gamma.matmul(alpha).scale(eta));
            }
        }
        beta.push(m[(i, j)]);
    }
    Ok(beta)
}

/// First-order asymptotic bias of the VAR(1) impulse response per unit of
/// misspecification scale: `E(beta_VAR - beta*) ~ eta * abias[h]`.
pub fn theoretical_abias<S: Scalar>(spec: &DgpSpec<S>, target: &ShockTarget) -> Result<Vec<S>> {
    spec.validate()?;
    target.validate(spec.vars())?;
    let k = spec.vars();
    let (i, j) = (target.i(), target.j());
    let d = Matrix::from_diag(&vec![spec.innovations.shock_variance(); k]);
    let gamma = &spec.gamma;
    let s = lyapunov_solve(&spec.a, &gamma.matmul(&d).matmul(&gamma.transpose()))?;
    let s_inv = inverse(&s)?;

    // C = sum_l alpha_l D Gamma' (A')^{l-1}
    let at = spec.a.transpose();
    let dg = d.matmul(&gamma.transpose());
    let mut c = Matrix::zeros(k, k);
    let mut at_pow = Matrix::identity(k);
    for alpha in &spec.ma_coeffs {
        c = c.add(&alpha.matmul(&dg).matmul(&at_pow));
        at_pow = at_pow.matmul(&at);
    }
    let gc = gamma.matmul(&c);

    let h_max = target.h_max;
    let mut powers = Vec::with_capacity(h_max + 1);
    powers.push(Matrix::identity(k));
    for h in 1..=h_max {
        powers.push(powers[h - 1].matmul(&spec.a));
    }
    let gamma_j = gamma.column(j);

    let mut out = Vec::with_capacity(h_max + 1);
    for h in 0..=h_max {
        let mut psi = Matrix::zeros(k, k);
        let mut direct = S::zero();
        for l in 1..=h {
            let left = powers[h - l].mat_vec(&gamma_j);
            let right = powers[l - 1].row(i);
            for r in 0..k {
                for cc in 0..k {
                    psi[(r, cc)] += left[r] * right[cc];
                }
            }
            if let Some(alpha) = spec.ma_coeffs.get(l - 1) {
                direct += powers[h - l].matmul(gamma).matmul(alpha)[(i, j)];
            }
        }
        out.push(s_inv.matmul(&psi).matmul(&gc).trace() - direct);
    }
    Ok(out)
}

/// Designs used by the shipped experiment configurations.
pub mod designs {
    use super::*;

    fn m<S: Scalar>(rows: &[[f64; 2]; 2]) -> Matrix<S> {
        Matrix::from_fn(2, 2, |i, j| S::lit(rows[i][j]))
    }

    /// Bivariate VARMA(1,1) with `alpha_1 = I` and `eta = T^(-1/2)`.
    pub fn varma11<S: Scalar>() -> DgpSpec<S> {
        DgpSpec::new(
            m(&[[0.7, 0.1], [0.4, 0.6]]),
            m(&[[1.0, 0.0], [-0.5, 1.0]]),
            vec![Matrix::identity(2)],
            MisScale::Power {
                factor: S::one(),
                zeta: S::lit(0.5),
            },
            InnovationLaw::GaussianIid,
            DEFAULT_BURN_IN,
        )
        .expect("valid design")
    }

    /// MA polynomial `alpha_l = 0.9^l * [[0.2, 0.1], [-0.1, 0.3]]`, `l = 1..=100`.
    pub fn persistent_ma<S: Scalar>() -> Vec<Matrix<S>> {
        let base = m::<S>(&[[0.2, 0.1], [-0.1, 0.3]]);
        (1..=100).map(|l| base.scale(S::lit(0.9f64.powi(l)))).collect()
    }

    /// Bivariate VARMA(1,100) with near-unit-root `A` and `eta = factor * T^(-1/2)`.
    pub fn varma1_100<S: Scalar>(factor: f64, innovations: InnovationLaw<S>) -> DgpSpec<S> {
        DgpSpec::new(
            m(&[[0.2, 0.0], [-0.764, 0.985]]),
            // inverse of [[1, 0], [-1.07, 1]]
            m(&[[1.0, 0.0], [1.07, 1.0]]),
            persistent_ma(),
            MisScale::Power {
                factor: S::lit(factor),
                zeta: S::lit(0.5),
            },
            innovations,
            DEFAULT_BURN_IN,
        )
        .expect("valid design")
    }

    pub fn benchmark_garch<S: Scalar>() -> InnovationLaw<S> {
        InnovationLaw::Garch11 {
            omega: S::lit(0.05),
            alpha: S::lit(0.10),
            beta: S::lit(0.85),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn noise_spec(k: usize) -> DgpSpec<f64> {
        DgpSpec::new(
            Matrix::zeros(k, k),
            Matrix::identity(k),
            vec![],
            MisScale::Fixed(0.0),
            InnovationLaw::GaussianIid,
            10,
        )
        .unwrap()
    }

    #[test]
    fn pure_noise_has_identity_covariance() {
        let panel = simulate(&noise_spec(2), 100_000, &RngStream::new(1, 0)).unwrap();
        let cov = panel.sample_covariance();
        assert!(cov.sub(&Matrix::identity(2)).max_abs() < 0.02);
    }

    #[test]
    fn varma11_lag_one_autocovariance_matches_lyapunov() {
        let spec = designs::varma11::<f64>();
        let t = 100_000;
        let panel = simulate(&spec, t, &RngStream::new(2, 0)).unwrap();
        let q = spec.gamma.matmul(&spec.gamma.transpose());
        let s = lyapunov_solve(&spec.a, &q).unwrap();
        let expected = spec.a.matmul(&s);
        let got = panel.autocovariance(1);
        for r in 0..2 {
            for c in 0..2 {
                let e = expected[(r, c)];
                assert!(
                    (got[(r, c)] - e).abs() <= 0.05 * e.abs(),
                    "({r},{c}): {} vs {e}",
                    got[(r, c)]
                );
            }
        }
    }

    #[test]
    fn garch_unconditional_variance() {
        let spec = DgpSpec {
            innovations: designs::benchmark_garch(),
            ..noise_spec(2)
        };
        let panel = simulate(&spec, 100_000, &RngStream::new(3, 0)).unwrap();
        let cov = panel.sample_covariance();
        for c in 0..2 {
            assert!((cov[(c, c)] - 1.0).abs() < 0.05, "{}", cov[(c, c)]);
        }
    }

    #[test]
    fn simulate_is_deterministic() {
        let spec = designs::varma1_100::<f64>(1.0, InnovationLaw::GaussianIid);
        let s = RngStream::new(9, 4);
        assert_eq!(simulate(&spec, 200, &s).unwrap(), simulate(&spec, 200, &s).unwrap());
    }

    #[test]
    fn geometric_irf_without_misspecification() {
        let spec = DgpSpec::new(
            Matrix::from_diag(&[0.5, 0.5]),
            Matrix::identity(2),
            vec![],
            MisScale::Fixed(0.0),
            InnovationLaw::GaussianIid,
            10,
        )
        .unwrap();
        let beta = true_irf(&spec, &ShockTarget::new(1, 1, 4), 100).unwrap();
        assert_eq!(beta, vec![1.0, 0.5, 0.25, 0.125, 0.0625]);
    }

    #[test]
    fn varma11_impact_and_first_horizon() {
        let spec = designs::varma11::<f64>();
        let beta = true_irf(&spec, &ShockTarget::new(2, 1, 1), 400).unwrap();
        assert_eq!(beta[0], -0.5);
        // J_2'(A Gamma + 0.05 Gamma alpha_1) J_1 with alpha_1 = I
        let a_gamma_21 = 0.4 * 1.0 + 0.6 * -0.5;
        let expected = a_gamma_21 + 0.05 * -0.5;
        assert!((beta[1] - expected).abs() < 1e-15);
    }

    #[test]
    fn irf_with_zero_horizon_is_gamma_entry() {
        let spec = designs::varma1_100::<f64>(1.0, InnovationLaw::GaussianIid);
        for i in 1..=2 {
            for j in 1..=2 {
                let beta = true_irf(&spec, &ShockTarget::new(i, j, 0), 200).unwrap();
                assert_eq!(beta, vec![spec.gamma[(i - 1, j - 1)]]);
            }
        }
    }

    #[test]
    fn correctly_specified_irf_decays_geometrically() {
        for spec in [
            designs::varma11::<f64>(),
            designs::varma1_100(1.0, InnovationLaw::GaussianIid),
        ] {
            let spec = DgpSpec {
                mis_scale: MisScale::Fixed(0.0),
                ..spec
            };
            let rho = spectral_radius(&spec.a);
            let target = ShockTarget::new(2, 1, 60);
            let beta = true_irf(&spec, &target, 200).unwrap();
            // C bounds ||A^h|| / rho^h times ||Gamma||; take the observed max ratio
            // on the first half and check it still bounds the second half.
            let ratio = |h: usize| beta[h].abs() / rho.powi(h as i32);
            let c = (0..=30).map(ratio).fold(0.0, f64::max) * 1.5 + 1e-12;
            assert!((31..=60).all(|h| ratio(h) <= c));
        }
    }

    #[test]
    fn abias_vanishes_without_ma() {
        let spec = DgpSpec {
            ma_coeffs: vec![],
            ..designs::varma11::<f64>()
        };
        let ab = theoretical_abias(&spec, &ShockTarget::new(2, 1, 6)).unwrap();
        assert!(ab.iter().all(|&b| b == 0.0));
    }

    #[test]
    fn abias_zero_at_impact_and_linear_in_alpha() {
        let spec = designs::varma11::<f64>();
        let target = ShockTarget::new(2, 1, 8);
        let ab = theoretical_abias(&spec, &target).unwrap();
        assert_eq!(ab[0], 0.0);
        assert!(ab.iter().skip(1).any(|&b| b.abs() > 1e-3));
        let doubled = theoretical_abias(&spec.with_scaled_ma(2.0), &target).unwrap();
        for (a, b) in ab.iter().zip(&doubled) {
            assert!((2.0 * a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn validation_errors() {
        let mut spec = designs::varma11::<f64>();
        spec.gamma[(1, 1)] = 0.9;
        assert_eq!(
            spec.validate().unwrap_err(),
            Error::InvalidSpec("Gamma diagonal must be 1".into())
        );
        let spec = DgpSpec {
            innovations: InnovationLaw::Garch11 {
                omega: 0.05,
                alpha: 0.15,
                beta: 0.85,
            },
            ..designs::varma11::<f64>()
        };
        assert!(spec.validate().is_err());
    }
}
