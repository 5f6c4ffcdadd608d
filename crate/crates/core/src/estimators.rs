//! Baseline impulse response estimators: lag-augmented local projections with
//! the controls projected out, and recursively identified VAR(q) responses.

use crate::error::{Error, Result};
use crate::linalg::{cholesky_lower, cholesky_solve_in_place, dot, forward_substitute_in_place, HouseholderQr, Matrix};
use crate::scalar::Scalar;
use crate::types::{IrfPath, Method, ShockTarget, TimeSeriesPanel};

/// Outcome and shock regressor after partialling out an intercept and `p`
/// lags of every variable.
#[derive(Debug, Clone, PartialEq)]
pub struct ProjectedRegression<S> {
    pub yh: Vec<S>,
    pub x: Vec<S>,
    pub xtx: S,
    pub horizon: usize,
    pub lags: usize,
}

impl<S: Scalar> ProjectedRegression<S> {
    pub fn xty(&self) -> S {
        dot(&self.x, &self.yh)
    }

    pub fn beta(&self) -> S {
        self.xty() / self.xtx
    }
}

pub fn check_lp_sample(t_len: usize, k: usize, h: usize, p: usize) -> Result<()> {
    let needed = h + p + k * p + 3;
    if t_len < needed {
        return Err(Error::SampleTooShort {
            needed,
            available: t_len,
        });
    }
    Ok(())
}

/// Control matrix `W` (intercept then lags `1..=p` of all variables) for rows
/// `t = p .. p + rows` (0-based).
pub fn lp_controls<S: Scalar>(panel: &TimeSeriesPanel<S>, p: usize, rows: usize) -> Matrix<S> {
    let k = panel.vars();
    Matrix::from_fn(rows, 1 + k * p, |r, c| {
        if c == 0 {
            S::one()
        } else {
            let lag = (c - 1) / k + 1;
            let var = (c - 1) % k;
            panel.at(p + r - lag, var)
        }
    })
}

/// Projects the controls out of `y_{i,t+h}` and `y_{j,t}` by Householder QR of
/// the control matrix, over rows `t = p+1 .. T-h` (1-based).
pub fn build_projected<S: Scalar>(
    panel: &TimeSeriesPanel<S>,
    target: &ShockTarget,
    h: usize,
    p: usize,
) -> Result<ProjectedRegression<S>> {
    let (t_len, k) = (panel.len(), panel.vars());
    target.validate(k)?;
    check_lp_sample(t_len, k, h, p)?;
    let rows = t_len - h - p;
    let w = lp_controls(panel, p, rows);
    let qr = HouseholderQr::new(&w)?;
    let outcome: Vec<S> = (0..rows).map(|r| panel.at(p + r + h, target.i())).collect();
    let shock: Vec<S> = (0..rows).map(|r| panel.at(p + r, target.j())).collect();
    let yh = qr.project_out(&outcome);
    let x = qr.project_out(&shock);
    let xtx = dot(&x, &x);
    if !(xtx > S::lit(1e-12) * S::from_usize_lossy(rows)) {
        return Err(Error::DegenerateRegressor { horizon: h });
    }
    Ok(ProjectedRegression {
        yh,
        x,
        xtx,
        horizon: h,
        lags: p,
    })
}

/// Per-horizon scalar moments `X'X` and `X'Y_h` of the projected regressions.
///
/// These are all that LP, SLP and the TLP weights need from the data.
#[derive(Debug, Clone, PartialEq)]
pub struct LpMoments<S> {
    pub xtx: Vec<S>,
    pub xty: Vec<S>,
    pub n_obs: Vec<usize>,
}

impl<S: Scalar> LpMoments<S> {
    pub fn horizons(&self) -> usize {
        self.xtx.len()
    }

    pub fn beta(&self) -> Vec<S> {
        self.xty.iter().zip(&self.xtx).map(|(&y, &x)| y / x).collect()
    }
}

/// Computes [`LpMoments`] for every horizon from centered cross-product
/// matrices updated one row at a time, instead of one QR per horizon.
///
/// Partialling out an intercept equals centering over the horizon's own
/// sample, and partialling out the lags is a Schur complement of the centered
/// Gram matrix. The result agrees with [`build_projected`] to rounding.
pub fn lp_moments<S: Scalar>(panel: &TimeSeriesPanel<S>, target: &ShockTarget, p: usize) -> Result<LpMoments<S>> {
    let (t_len, k) = (panel.len(), panel.vars());
    target.validate(k)?;
    let h_max = target.h_max;
    check_lp_sample(t_len, k, h_max, p)?;
    let (i, j) = (target.i(), target.j());

    // Shift by full-sample means; centered moments are shift invariant and
    // this keeps the raw sums well scaled.
    let n_all = S::from_usize_lossy(t_len);
    let means: Vec<S> = (0..k)
        .map(|v| (0..t_len).map(|t| panel.at(t, v)).sum::<S>() / n_all)
        .collect();
    let val = |t: usize, v: usize| panel.at(t, v) - means[v];

    let m = k * p;
    let d = m + 1;
    let rows = t_len - p;
    // f_t = (lags of all variables, y_{j,t}) for t = p .. T-1
    let mut f = vec![S::zero(); rows * d];
    for r in 0..rows {
        let t = p + r;
        let row = &mut f[r * d..(r + 1) * d];
        for lag in 1..=p {
            for v in 0..k {
                row[(lag - 1) * k + v] = val(t - lag, v);
            }
        }
        row[m] = val(t, j);
    }
    let outcome: Vec<S> = (0..t_len).map(|t| val(t, i)).collect();

    let mut s1 = vec![S::zero(); d];
    let mut s2 = vec![S::zero(); d * d];
    let add_row = |r: usize, s1: &mut [S], s2: &mut [S]| {
        let row = &f[r * d..(r + 1) * d];
        for a in 0..d {
            s1[a] += row[a];
            let ra = row[a];
            let dst = &mut s2[a * d..a * d + a + 1];
            for (b, o) in dst.iter_mut().enumerate() {
                *o += ra * row[b];
            }
        }
    };

    let mut xtx = vec![S::zero(); h_max + 1];
    let mut xty = vec![S::zero(); h_max + 1];
    let mut n_obs = vec![0usize; h_max + 1];
    let mut included = 0usize;
    let mut g = Matrix::zeros(m, m);
    let mut gx = vec![S::zero(); m];
    let mut cz = vec![S::zero(); m];
    for h in (0..=h_max).rev() {
        let n_h = rows - h;
        while included < n_h {
            add_row(included, &mut s1, &mut s2);
            included += 1;
        }
        let n = S::from_usize_lossy(n_h);
        let mut c = vec![S::zero(); d];
        let mut sy = S::zero();
        for r in 0..n_h {
            let yv = outcome[p + r + h];
            sy += yv;
            let row = &f[r * d..(r + 1) * d];
            for (ca, &fa) in c.iter_mut().zip(row) {
                *ca += fa * yv;
            }
        }
        let centered = |a: usize, b: usize| {
            let (a, b) = if a >= b { (a, b) } else { (b, a) };
            s2[a * d + b] - s1[a] * s1[b] / n
        };
        for a in 0..m {
            for b in 0..=a {
                let v = centered(a, b);
                g[(a, b)] = v;
                g[(b, a)] = v;
            }
            gx[a] = centered(m, a);
            cz[a] = c[a] - s1[a] * sy / n;
        }
        let gxx = centered(m, m);
        let cx = c[m] - s1[m] * sy / n;
        let (proj_xx, proj_xy) = if m == 0 {
            (gxx, cx)
        } else {
            let l = cholesky_lower(&g).map_err(|_| Error::SingularDesign)?;
            forward_substitute_in_place(&l, &mut gx);
            forward_substitute_in_place(&l, &mut cz);
            (gxx - dot(&gx, &gx), cx - dot(&gx, &cz))
        };
        if !(proj_xx > S::lit(1e-12) * n) {
            return Err(Error::DegenerateRegressor { horizon: h });
        }
        xtx[h] = proj_xx;
        xty[h] = proj_xy;
        n_obs[h] = n_h;
    }
    Ok(LpMoments { xtx, xty, n_obs })
}

/// Local projection impulse responses, each horizon on its maximal sample.
pub fn estimate_lp<S: Scalar>(panel: &TimeSeriesPanel<S>, target: &ShockTarget, p: usize) -> Result<IrfPath<S>> {
    IrfPath::new(Method::Lp, *target, lp_moments(panel, target, p)?.beta())
}

/// Reduced-form VAR(q) fitted by OLS with an intercept.
#[derive(Debug, Clone, PartialEq)]
pub struct VarFit<S> {
    pub lags: usize,
    /// `kq x kq` companion matrix; the first `k` rows hold `[A_1 .. A_q]`.
    pub companion: Matrix<S>,
    pub intercept: Vec<S>,
    /// Residual covariance with divisor `T - q`.
    pub sigma: Matrix<S>,
    /// Unit lower-triangular impact matrix.
    pub gamma: Matrix<S>,
    /// `(T - q) x k` residuals for `t = q+1 .. T`.
    pub residuals: Matrix<S>,
    /// The first `q` observations of the fitted panel.
    pub presample: Matrix<S>,
}

impl<S: Scalar> VarFit<S> {
    pub fn vars(&self) -> usize {
        self.intercept.len()
    }

    /// Lag-`l` coefficient block `A_l` (`l` is 1-based).
    pub fn lag_matrix(&self, l: usize) -> Matrix<S> {
        let k = self.vars();
        Matrix::from_fn(k, k, |r, c| self.companion[(r, (l - 1) * k + c)])
    }

    /// `c + sum_l A_l y_{t-l}` given the `q` preceding observations, most recent first.
    pub fn conditional_mean(&self, recent: &[&[S]], out: &mut [S]) {
        let k = self.vars();
        out.copy_from_slice(&self.intercept);
        for (l, y) in recent.iter().enumerate().take(self.lags) {
            for (r, o) in out.iter_mut().enumerate() {
                let coef = &self.companion.row(r)[l * k..(l + 1) * k];
                *o += dot(coef, y);
            }
        }
    }
}

/// Equation-by-equation OLS of `y_t` on an intercept and `q` lags, Cholesky
/// identification, and unit-diagonal normalization of the impact matrix.
pub fn fit_var<S: Scalar>(panel: &TimeSeriesPanel<S>, q: usize) -> Result<VarFit<S>> {
    let (t_len, k) = (panel.len(), panel.vars());
    if q == 0 {
        return Err(Error::InvalidSpec("VAR lag count must be at least 1".into()));
    }
    let m = k * q;
    let needed = q + m + 3;
    if t_len < needed {
        return Err(Error::SampleTooShort {
            needed,
            available: t_len,
        });
    }
    let n_obs = t_len - q;
    let n = S::from_usize_lossy(n_obs);
    let regressor = |t: usize, c: usize| panel.at(t - (c / k + 1), c % k);

    let mut xbar = vec![S::zero(); m];
    let mut ybar = vec![S::zero(); k];
    for t in q..t_len {
        for (c, xb) in xbar.iter_mut().enumerate() {
            *xb += regressor(t, c);
        }
        for (v, yb) in ybar.iter_mut().enumerate() {
            *yb += panel.at(t, v);
        }
    }
    xbar.iter_mut().for_each(|x| *x /= n);
    ybar.iter_mut().for_each(|y| *y /= n);

    let mut gram = Matrix::zeros(m, m);
    let mut cross = Matrix::zeros(m, k);
    let mut xc = vec![S::zero(); m];
    for t in q..t_len {
        for (c, x) in xc.iter_mut().enumerate() {
            *x = regressor(t, c) - xbar[c];
        }
        for a in 0..m {
            let xa = xc[a];
            for b in 0..=a {
                gram[(a, b)] += xa * xc[b];
            }
            for v in 0..k {
                cross[(a, v)] += xa * (panel.at(t, v) - ybar[v]);
            }
        }
    }
    for a in 0..m {
        for b in 0..a {
            gram[(b, a)] = gram[(a, b)];
        }
    }
    let l = cholesky_lower(&gram).map_err(|_| Error::SingularDesign)?;
    let mut companion = Matrix::zeros(m, m);
    let mut intercept = ybar.clone();
    let mut rhs = vec![S::zero(); m];
    for v in 0..k {
        for a in 0..m {
            rhs[a] = cross[(a, v)];
        }
        cholesky_solve_in_place(&l, &mut rhs);
        for a in 0..m {
            companion[(v, a)] = rhs[a];
        }
        intercept[v] -= dot(&rhs, &xbar);
    }
    for r in k..m {
        companion[(r, r - k)] = S::one();
    }

    let mut residuals = Matrix::zeros(n_obs, k);
    let mut sigma = Matrix::zeros(k, k);
    for t in q..t_len {
        for v in 0..k {
            let mut fitted = intercept[v];
            let coef = companion.row(v);
            for c in 0..m {
                fitted += coef[c] * regressor(t, c);
            }
            residuals[(t - q, v)] = panel.at(t, v) - fitted;
        }
        let u = residuals.row(t - q);
        for a in 0..k {
            for b in 0..=a {
                sigma[(a, b)] += u[a] * u[b];
            }
        }
    }
    for a in 0..k {
        for b in 0..=a {
            let v = sigma[(a, b)] / n;
            sigma[(a, b)] = v;
            sigma[(b, a)] = v;
        }
    }
    let chol = cholesky_lower(&sigma)?;
    let gamma = Matrix::from_fn(k, k, |r, c| chol[(r, c)] / chol[(c, c)]);
    Ok(VarFit {
        lags: q,
        companion,
        intercept,
        sigma,
        gamma,
        residuals,
        presample: Matrix::from_fn(q, k, |t, v| panel.at(t, v)),
    })
}

/// Structural VAR responses: the impact column `Gamma_j` embedded in the
/// companion space and propagated one companion multiplication per horizon.
pub fn var_irf<S: Scalar>(fit: &VarFit<S>, target: &ShockTarget) -> Result<IrfPath<S>> {
    let k = fit.vars();
    target.validate(k)?;
    let dim = fit.companion.nrows();
    let mut state = vec![S::zero(); dim];
    for r in 0..k {
        state[r] = fit.gamma[(r, target.j())];
    }
    let mut beta = Vec::with_capacity(target.horizons());
    beta.push(state[target.i()]);
    for _ in 1..=target.h_max {
        state = fit.companion.mat_vec(&state);
        beta.push(state[target.i()]);
    }
    IrfPath::new(Method::Var, *target, beta)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dgp::{designs, simulate, true_irf, DgpSpec, InnovationLaw, MisScale};
    use crate::rng::RngStream;

    fn noise_panel(t: usize, k: usize, seed: u64) -> TimeSeriesPanel<f64> {
        let spec = DgpSpec::new(
            Matrix::zeros(k, k),
            Matrix::identity(k),
            vec![],
            MisScale::Fixed(0.0),
            InnovationLaw::GaussianIid,
            10,
        )
        .unwrap();
        simulate(&spec, t, &RngStream::new(seed, 0)).unwrap()
    }

    #[test]
    fn no_lags_means_demeaning() {
        let panel = noise_panel(40, 2, 1);
        let target = ShockTarget::new(2, 1, 3);
        let pr = build_projected(&panel, &target, 3, 0).unwrap();
        let shock = panel.series(0);
        let xs = &shock[..37];
        let mean = xs.iter().sum::<f64>() / 37.0;
        for (x, s) in pr.x.iter().zip(xs) {
            assert!((x - (s - mean)).abs() < 1e-12);
        }
    }

    #[test]
    fn projected_regressor_orthogonal_to_controls() {
        let panel = noise_panel(150, 2, 2);
        let target = ShockTarget::new(2, 1, 5);
        let pr = build_projected(&panel, &target, 5, 4).unwrap();
        let w = lp_controls(&panel, 4, pr.x.len());
        for c in 0..w.ncols() {
            assert!(dot(&w.column(c), &pr.x).abs() < 1e-8);
        }
    }

    #[test]
    fn gram_route_matches_qr_route() {
        let spec = designs::varma1_100::<f64>(1.0, InnovationLaw::GaussianIid);
        let panel = simulate(&spec, 200, &RngStream::new(3, 0)).unwrap();
        let target = ShockTarget::new(2, 1, 20);
        let mom = lp_moments(&panel, &target, 10).unwrap();
        for h in 0..=20 {
            let pr = build_projected(&panel, &target, h, 10).unwrap();
            assert!((mom.xtx[h] - pr.xtx).abs() < 1e-8 * pr.xtx);
            assert!((mom.beta()[h] - pr.beta()).abs() < 1e-8 * (1.0 + pr.beta().abs()));
            assert_eq!(mom.n_obs[h], 200 - 10 - h);
        }
    }

    #[test]
    fn short_sample_rejected() {
        let panel = noise_panel(30, 2, 4);
        let target = ShockTarget::new(1, 1, 5);
        assert!(matches!(
            build_projected(&panel, &target, 5, 10),
            Err(Error::SampleTooShort { .. })
        ));
        assert!(matches!(fit_var(&panel, 12), Err(Error::SampleTooShort { .. })));
    }

    #[test]
    fn degenerate_shock_rejected() {
        let vals = Matrix::from_fn(60, 2, |t, v| if v == 0 { 1.0 } else { (t as f64).sin() });
        let panel = TimeSeriesPanel::new(vals).unwrap();
        let target = ShockTarget::new(2, 1, 2);
        assert!(matches!(
            build_projected(&panel, &target, 0, 0),
            Err(Error::DegenerateRegressor { horizon: 0 })
        ));
    }

    #[test]
    fn white_noise_lp_limit() {
        let spec = DgpSpec::<f64>::new(
            Matrix::zeros(2, 2),
            Matrix::from_rows(&[[1.0, 0.0], [0.5, 1.0]]).unwrap(),
            vec![],
            MisScale::Fixed(0.0),
            InnovationLaw::GaussianIid,
            10,
        )
        .unwrap();
        let panel = simulate(&spec, 50_000, &RngStream::new(5, 0)).unwrap();
        let lp = estimate_lp(&panel, &ShockTarget::new(2, 1, 4), 2).unwrap();
        assert!((lp.beta[0] - 0.5).abs() < 0.02);
        assert!(lp.beta[1..].iter().all(|b| b.abs() < 0.02));
        let own = estimate_lp(&panel, &ShockTarget::new(1, 1, 0), 2).unwrap();
        assert!((own.beta[0] - 1.0).abs() < 0.02);
    }

    #[test]
    fn var_on_noise_has_no_dynamics() {
        let panel = noise_panel(50_000, 2, 6);
        let fit = fit_var(&panel, 1).unwrap();
        assert!(fit.companion.max_abs() < 0.03);
        assert!(fit.gamma.sub(&Matrix::identity(2)).max_abs() < 0.03);
        assert!(fit.gamma.is_lower_triangular());
        assert_eq!(fit.gamma.diagonal(), vec![1.0, 1.0]);
    }

    fn pure_var1_panel(t: usize, seed: u64) -> (DgpSpec<f64>, TimeSeriesPanel<f64>) {
        let spec = DgpSpec {
            mis_scale: MisScale::Fixed(0.0),
            ..designs::varma11::<f64>()
        };
        let panel = simulate(&spec, t, &RngStream::new(seed, 0)).unwrap();
        (spec, panel)
    }

    #[test]
    fn var_recovers_var1_design() {
        let (spec, panel) = pure_var1_panel(50_000, 7);
        let fit = fit_var(&panel, 1).unwrap();
        assert!(fit.companion.sub(&spec.a).max_abs() < 0.02);
        assert!(fit.gamma.sub(&spec.gamma).max_abs() < 0.02);
        let fit2 = fit_var(&panel, 2).unwrap();
        assert!(fit2.lag_matrix(2).max_abs() < 0.03);
        assert!(fit2.lag_matrix(1).sub(&spec.a).max_abs() < 0.03);
    }

    #[test]
    fn residuals_have_zero_mean() {
        let (_, panel) = pure_var1_panel(500, 8);
        let fit = fit_var(&panel, 3).unwrap();
        for v in 0..2 {
            let mean = fit.residuals.column(v).iter().sum::<f64>() / fit.residuals.nrows() as f64;
            assert!(mean.abs() < 1e-10);
        }
    }

    #[test]
    fn var_irf_impact_only_and_scalar_ar() {
        let mut fit = fit_var(&noise_panel(100, 2, 9), 1).unwrap();
        fit.companion = Matrix::zeros(2, 2);
        let target = ShockTarget::new(2, 1, 3);
        let path = var_irf(&fit, &target).unwrap();
        assert_eq!(path.beta, vec![fit.gamma[(1, 0)], 0.0, 0.0, 0.0]);

        let mut fit1 = fit_var(&noise_panel(100, 1, 10), 1).unwrap();
        fit1.companion = Matrix::from_rows(&[[0.5]]).unwrap();
        fit1.gamma = Matrix::identity(1);
        let path = var_irf(&fit1, &ShockTarget::new(1, 1, 4)).unwrap();
        assert_eq!(path.beta, vec![1.0, 0.5, 0.25, 0.125, 0.0625]);
    }

    #[test]
    fn var_irf_matches_recursion_simulation() {
        let (_, panel) = pure_var1_panel(400, 11);
        let fit = fit_var(&panel, 2).unwrap();
        let target = ShockTarget::new(2, 1, 40);
        let path = var_irf(&fit, &target).unwrap();
        // deterministic recursion y_h = A1 y_{h-1} + A2 y_{h-2}, y_0 = Gamma_j
        let (a1, a2) = (fit.lag_matrix(1), fit.lag_matrix(2));
        let mut prev2 = vec![0.0; 2];
        let mut prev1 = fit.gamma.column(0);
        assert_eq!(path.beta[0], prev1[1]);
        for h in 1..=40 {
            let y: Vec<f64> = a1
                .mat_vec(&prev1)
                .iter()
                .zip(a2.mat_vec(&prev2))
                .map(|(a, b)| a + b)
                .collect();
            assert!((path.beta[h] - y[1]).abs() < 1e-10);
            prev2 = prev1;
            prev1 = y;
        }
    }

    #[test]
    fn var_irf_linear_in_impact_column() {
        let (_, panel) = pure_var1_panel(300, 12);
        let mut fit = fit_var(&panel, 2).unwrap();
        let target = ShockTarget::new(2, 1, 12);
        let base = var_irf(&fit, &target).unwrap();
        for r in 0..2 {
            fit.gamma[(r, 0)] *= -2.5;
        }
        let scaled = var_irf(&fit, &target).unwrap();
        for (a, b) in base.beta.iter().zip(&scaled.beta) {
            assert!((-2.5 * a - b).abs() < 1e-12 * (1.0 + b.abs()));
        }
    }

    #[test]
    fn lp_and_var_agree_on_correct_specification() {
        let (spec, panel) = pure_var1_panel(50_000, 13);
        let target = ShockTarget::new(2, 1, 10);
        let lp = estimate_lp(&panel, &target, 2).unwrap();
        let var = var_irf(&fit_var(&panel, 1).unwrap(), &target).unwrap();
        let truth = true_irf(&spec, &target, 50_000).unwrap();
        for h in 0..=10 {
            assert!((lp.beta[h] - var.beta[h]).abs() < 0.05);
            assert!((var.beta[h] - truth[h]).abs() < 0.05);
        }
        let own = ShockTarget::new(1, 1, 0);
        assert!((estimate_lp(&panel, &own, 2).unwrap().beta[0] - 1.0).abs() < 0.03);
        assert!((var_irf(&fit_var(&panel, 1).unwrap(), &own).unwrap().beta[0] - 1.0).abs() < 0.03);
    }
}
