//! Mean-centered symmetric double bootstrap.
//!
//! First level: the original panel plus `B1 - 1` recursive moving-block
//! resamples from its VAR(q) fit. Second level: each first-level panel is
//! refitted and resampled `B2` times to estimate the variances of its LP and
//! VAR responses. t statistics are centered at the mean over the first level
//! and studentized with the second-level variances; bands are symmetric
//! around the original-sample estimate.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimators::{fit_var, lp_moments, var_irf, LpMoments, VarFit};
use crate::linalg::Matrix;
use crate::rng::RngStream;
use crate::scalar::Scalar;
use crate::shrinkage::{
    combination_variance, default_lambda_grid, slp_from_moments, slp_select_lambda, slp_variance, TlpWeights, TripleAt,
    VarianceTriple,
};
use crate::types::{Method, ShockTarget, TimeSeriesPanel};

/// Redraws allowed for a failing bootstrap replication.
pub const MAX_RETRIES: usize = 5;
/// Minimum number of valid t statistics for a band.
pub const MIN_T_VALUES: usize = 20;
/// Variances below this are treated as zero when studentizing.
pub const VARIANCE_FLOOR: f64 = 1e-14;
const EXPLOSION_BOUND: f64 = 1e12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Centering {
    BootstrapMean,
    PseudoTruth,
}

impl Centering {
    pub const ALL: [Centering; 2] = [Centering::BootstrapMean, Centering::PseudoTruth];

    pub fn as_str(&self) -> &'static str {
        match self {
            Centering::BootstrapMean => "bootstrap_mean",
            Centering::PseudoTruth => "pseudo_truth",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BlockLength {
    /// Smallest integer `l` with `l^3 >= T`.
    CubeRoot,
    Fixed(usize),
}

/// Smallest `l >= 1` with `l^3 >= t`.
pub fn block_length_rule(t: usize) -> usize {
    let mut l = ((t as f64).cbrt().floor() as usize).max(1);
    while l.pow(3) < t {
        l += 1;
    }
    while l > 1 && (l - 1).pow(3) >= t {
        l -= 1;
    }
    l
}

#[derive(Debug, Clone, PartialEq)]
pub struct BootstrapConfig {
    /// First-level count, the original sample included.
    pub b1: usize,
    pub b2: usize,
    pub block_length: BlockLength,
    pub alpha: f64,
    pub centering: Centering,
    pub p: usize,
    pub q: usize,
    pub master_seed: u64,
    /// Use each replication's own variance triple in the TLP weights instead
    /// of the first-level average.
    pub per_replication_weights: bool,
}

impl BootstrapConfig {
    pub fn new(b1: usize, b2: usize, alpha: f64, p: usize, q: usize, master_seed: u64) -> Self {
        Self {
            b1,
            b2,
            block_length: BlockLength::CubeRoot,
            alpha,
            centering: Centering::BootstrapMean,
            p,
            q,
            master_seed,
            per_replication_weights: false,
        }
    }

    pub fn block_length_for(&self, t: usize) -> usize {
        match self.block_length {
            BlockLength::CubeRoot => block_length_rule(t),
            BlockLength::Fixed(l) => l,
        }
    }

    pub fn validate(&self, t: usize) -> Result<()> {
        if self.b1 < 2 || self.b2 < 2 {
            return Err(Error::InvalidSpec("B1 and B2 must both be at least 2".into()));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::InvalidSpec("alpha must lie strictly between 0 and 1".into()));
        }
        if self.q == 0 {
            return Err(Error::InvalidSpec("VAR lag count q must be at least 1".into()));
        }
        let l = self.block_length_for(t);
        if l == 0 || l > t {
            return Err(Error::InvalidBlockLength { block: l, rows: t });
        }
        Ok(())
    }
}

/// One value per estimation method, indexed by [`Method::index`].
#[derive(Debug, Clone, PartialEq)]
pub struct PerMethod<T> {
    items: [T; 4],
}

impl<T> PerMethod<T> {
    pub fn from_fn(mut f: impl FnMut(Method) -> T) -> Self {
        Self {
            items: Method::ALL.map(&mut f),
        }
    }

    pub fn get(&self, m: Method) -> &T {
        &self.items[m.index()]
    }

    pub fn get_mut(&mut self, m: Method) -> &mut T {
        &mut self.items[m.index()]
    }

    pub fn iter(&self) -> impl Iterator<Item = (Method, &T)> {
        Method::ALL.into_iter().zip(self.items.iter())
    }
}

/// Overlapping-block resample of `residuals`, recentered slot by slot so
/// that every output row has mean zero under the resampling measure.
pub fn block_resample_residuals<S: Scalar>(
    residuals: &Matrix<S>,
    block: usize,
    stream: &RngStream,
) -> Result<Matrix<S>> {
    let mut rng = stream.rng();
    resample_with(residuals, block, true, |starts| rng.random_range(0..starts))
}

fn resample_with<S: Scalar>(
    residuals: &Matrix<S>,
    block: usize,
    recenter: bool,
    mut draw_start: impl FnMut(usize) -> usize,
) -> Result<Matrix<S>> {
    let (n, k) = (residuals.nrows(), residuals.ncols());
    if block == 0 || block > n {
        return Err(Error::InvalidBlockLength { block, rows: n });
    }
    let starts = n - block + 1;
    let mut centers = Matrix::zeros(block, k);
    if recenter {
        let denom = S::from_usize_lossy(starts);
        for slot in 0..block {
            let c = centers.row_mut(slot);
            for s in 0..starts {
                for (cv, &u) in c.iter_mut().zip(residuals.row(s + slot)) {
                    *cv += u;
                }
            }
            c.iter_mut().for_each(|x| *x /= denom);
        }
    }
    let mut out = Matrix::zeros(n, k);
    let mut t = 0;
    while t < n {
        let s = draw_start(starts);
        for slot in 0..block.min(n - t) {
            let src = residuals.row(s + slot);
            let c = centers.row(slot);
            for (v, o) in out.row_mut(t).iter_mut().enumerate() {
                *o = src[v] - c[v];
            }
            t += 1;
        }
    }
    Ok(out)
}

/// Rebuilds a panel from the fitted VAR, its presample and new residuals.
pub fn rebuild_recursive<S: Scalar>(fit: &VarFit<S>, resampled_u: &Matrix<S>) -> Result<TimeSeriesPanel<S>> {
    let (q, k) = (fit.lags, fit.vars());
    if resampled_u.ncols() != k {
        return Err(Error::ShapeMismatch(
            "residual columns differ from VAR dimension".into(),
        ));
    }
    let t_len = q + resampled_u.nrows();
    let mut y = Matrix::zeros(t_len, k);
    for t in 0..q {
        y.row_mut(t).copy_from_slice(fit.presample.row(t));
    }
    let bound = S::lit(EXPLOSION_BOUND);
    let mut mean = vec![S::zero(); k];
    for t in q..t_len {
        {
            let recent: Vec<&[S]> = (1..=q).map(|l| y.row(t - l)).collect();
            fit.conditional_mean(&recent, &mut mean);
        }
        let u = resampled_u.row(t - q);
        for v in 0..k {
            let value = mean[v] + u[v];
            if !(value.abs() <= bound) {
                return Err(Error::ExplosiveFit { t });
            }
            y[(t, v)] = value;
        }
    }
    TimeSeriesPanel::new(y)
}

/// `rebuild_recursive` fed with the fit's own residuals in their original
/// order (no resampling, no recentering).
pub fn rebuild_in_order<S: Scalar>(fit: &VarFit<S>) -> Result<TimeSeriesPanel<S>> {
    let u = resample_with(&fit.residuals, fit.residuals.nrows(), false, |_| 0)?;
    rebuild_recursive(fit, &u)
}

struct Estimates<S> {
    moments: LpMoments<S>,
    lp: Vec<S>,
    var: Vec<S>,
    fit: VarFit<S>,
}

fn estimate<S: Scalar>(panel: &TimeSeriesPanel<S>, target: &ShockTarget, p: usize, q: usize) -> Result<Estimates<S>> {
    let moments = lp_moments(panel, target, p)?;
    let lp = moments.beta();
    let fit = fit_var(panel, q)?;
    let var = var_irf(&fit, target)?.beta;
    if !lp.iter().chain(&var).all(|x| x.is_finite()) {
        return Err(Error::SingularDesign);
    }
    Ok(Estimates { moments, lp, var, fit })
}

fn resampled_panel<S: Scalar>(fit: &VarFit<S>, block: usize, stream: &RngStream) -> Result<TimeSeriesPanel<S>> {
    let u = block_resample_residuals(&fit.residuals, block, stream)?;
    rebuild_recursive(fit, &u)
}

struct FirstLevel<S> {
    est: Estimates<S>,
    sigma_lp: Vec<S>,
    sigma_var: Vec<S>,
    sigma_cov: Vec<S>,
    redraws: usize,
}

struct Setup<'a> {
    target: &'a ShockTarget,
    p: usize,
    q: usize,
    b2: usize,
    block: usize,
}

fn second_level<S: Scalar>(est: Estimates<S>, setup: &Setup<'_>, stream: &RngStream) -> Result<FirstLevel<S>> {
    let horizons = setup.target.horizons();
    let mut draws_lp = Vec::with_capacity(setup.b2);
    let mut draws_var = Vec::with_capacity(setup.b2);
    let mut redraws = 0;
    for b2 in 0..setup.b2 {
        let base = stream.child(b2 as u64);
        let mut last_err = None;
        for attempt in 0..=MAX_RETRIES {
            let draw = resampled_panel(&est.fit, setup.block, &base.child(attempt as u64))
                .and_then(|panel| estimate(&panel, setup.target, setup.p, setup.q));
            match draw {
                Ok(e) => {
                    draws_lp.push(e.lp);
                    draws_var.push(e.var);
                    last_err = None;
                    break;
                }
                Err(e) => {
                    redraws += 1;
                    last_err = Some(e);
                }
            }
        }
        if let Some(e) = last_err {
            return Err(Error::ReplicationFailure {
                index: b2,
                attempts: MAX_RETRIES + 1,
                reason: e.to_string(),
            });
        }
    }
    let n = S::from_usize_lossy(setup.b2);
    let dof = S::from_usize_lossy(setup.b2 - 1);
    let mut sigma_lp = vec![S::zero(); horizons];
    let mut sigma_var = vec![S::zero(); horizons];
    let mut sigma_cov = vec![S::zero(); horizons];
    for h in 0..horizons {
        let ml = draws_lp.iter().map(|d| d[h]).sum::<S>() / n;
        let mv = draws_var.iter().map(|d| d[h]).sum::<S>() / n;
        let (mut sl, mut sv, mut sc) = (S::zero(), S::zero(), S::zero());
        for (dl, dv) in draws_lp.iter().zip(&draws_var) {
            let (a, b) = (dl[h] - ml, dv[h] - mv);
            sl += a * a;
            sv += b * b;
            sc += a * b;
        }
        let (sl, sv) = (sl / dof, sv / dof);
        // Rounding can push a sample covariance a hair past the bound.
        let bound = (sl * sv).sqrt();
        sigma_lp[h] = sl;
        sigma_var[h] = sv;
        sigma_cov[h] = (sc / dof).max(-bound).min(bound);
    }
    Ok(FirstLevel {
        est,
        sigma_lp,
        sigma_var,
        sigma_cov,
        redraws,
    })
}

fn first_level<S: Scalar>(
    b1: usize,
    original: &Estimates<S>,
    panel: &TimeSeriesPanel<S>,
    setup: &Setup<'_>,
    root: &RngStream,
) -> Result<FirstLevel<S>> {
    let base = root.child(b1 as u64);
    if b1 == 0 {
        let est = estimate(panel, setup.target, setup.p, setup.q)?;
        return second_level(est, setup, &base.fork("second"));
    }
    let mut last_err = None;
    for attempt in 0..=MAX_RETRIES {
        let stream = base.child(attempt as u64);
        let result = resampled_panel(&original.fit, setup.block, &stream.fork("resample"))
            .and_then(|p| estimate(&p, setup.target, setup.p, setup.q))
            .and_then(|est| second_level(est, setup, &stream.fork("second")));
        match result {
            Ok(mut level) => {
                level.redraws += attempt;
                return Ok(level);
            }
            Err(e) => last_err = Some(e),
        }
    }
    Err(Error::ReplicationFailure {
        index: b1,
        attempts: MAX_RETRIES + 1,
        reason: last_err.map(|e| e.to_string()).unwrap_or_default(),
    })
}

/// Band around the original-sample estimate for one method and horizon.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Band<S> {
    pub lower: S,
    pub upper: S,
    pub tcrit: S,
}

impl<S: Scalar> Band<S> {
    pub fn length(&self) -> S {
        self.upper - self.lower
    }

    pub fn contains(&self, x: S) -> bool {
        self.lower <= x && x <= self.upper
    }
}

/// Bands for every method under one centering rule.
#[derive(Debug, Clone, PartialEq)]
pub struct BandSet<S> {
    pub centering: Centering,
    pub bands: PerMethod<Vec<Band<S>>>,
    /// t statistics dropped for a near-zero variance, summed over horizons.
    pub excluded: PerMethod<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BootstrapEnsemble<S> {
    pub target: ShockTarget,
    pub t_len: usize,
    pub block_length: usize,
    pub alpha: f64,
    /// `B1 x H` estimates per method; row 0 is the original sample.
    pub beta_first: PerMethod<Matrix<S>>,
    /// `B1 x H` variances of the estimates (not scaled by `T`).
    pub sigma_first: PerMethod<Matrix<S>>,
    pub cov_first: Matrix<S>,
    pub tlp_weights_first: Vec<TlpWeights<S>>,
    /// First-level average of the LP/VAR variance triple (not scaled by `T`).
    pub averaged_triple: VarianceTriple<S>,
    pub slp_lambda: S,
    pub bar_beta: PerMethod<Vec<S>>,
    /// Bands under the configured centering.
    pub bands: BandSet<S>,
    /// Valid t statistics required per band; below [`MIN_T_VALUES`] only when `B1` is.
    pub min_t_values: usize,
    /// Total redraws of failed replications at either level.
    pub redraws: usize,
}

impl<S: Scalar> BootstrapEnsemble<S> {
    pub fn b1(&self) -> usize {
        self.cov_first.nrows()
    }

    /// Original-sample estimates.
    pub fn point(&self, method: Method) -> Vec<S> {
        self.beta_first.get(method).row(0).to_vec()
    }

    /// The VAR response of the original-sample fit, the truth of the
    /// resampling process.
    pub fn pseudo_truth(&self) -> Vec<S> {
        self.point(Method::Var)
    }

    pub fn tcrit(&self, method: Method) -> Vec<S> {
        self.bands.bands.get(method).iter().map(|b| b.tcrit).collect()
    }

    /// Bands under either centering rule from the same first-level draws.
    ///
    /// The width always comes from the mean-centered t statistics. Under
    /// [`Centering::PseudoTruth`] the band is relocated by the bootstrap bias
    /// `bar_beta - pseudo_truth`, the correction implied by reading the
    /// resampling process's own VAR response as its truth. Only the location
    /// differs between the two rules.
    pub fn band_set(&self, centering: Centering) -> Result<BandSet<S>> {
        let horizons = self.target.horizons();
        let pseudo_truth = self.pseudo_truth();
        let mut excluded = PerMethod::from_fn(|_| 0usize);
        let mut out = PerMethod::from_fn(|_| Vec::with_capacity(horizons));
        for method in Method::ALL {
            let t = t_statistics(self, method, Centering::BootstrapMean);
            let sigma = self.sigma_first.get(method);
            let point = self.beta_first.get(method);
            let bar = self.bar_beta.get(method);
            for (h, th) in t.iter().enumerate() {
                let valid: Vec<S> = th.iter().flatten().copied().collect();
                let location = match centering {
                    Centering::BootstrapMean => point[(0, h)],
                    Centering::PseudoTruth => point[(0, h)] - (bar[h] - pseudo_truth[h]),
                };
                // No draw has sampling noise (own response on impact): the
                // response is known exactly, so the band is the point itself.
                let band = if valid.is_empty() && sigma[(0, h)] < S::lit(VARIANCE_FLOOR) {
                    Band {
                        lower: location,
                        upper: location,
                        tcrit: S::zero(),
                    }
                } else {
                    *excluded.get_mut(method) += th.len() - valid.len();
                    interval_with_min(location, &valid, sigma[(0, h)], self.alpha, self.min_t_values)?
                };
                out.get_mut(method).push(band);
            }
        }
        Ok(BandSet {
            centering,
            bands: out,
            excluded,
        })
    }
}

/// `(beta_{h,b1} - center_h) / sqrt(sigma_{h,b1})` for every horizon (outer)
/// and first-level replication (inner); `None` where the variance is below
/// [`VARIANCE_FLOOR`].
pub fn t_statistics<S: Scalar>(
    ensemble: &BootstrapEnsemble<S>,
    method: Method,
    centering: Centering,
) -> Vec<Vec<Option<S>>> {
    let beta = ensemble.beta_first.get(method);
    let sigma = ensemble.sigma_first.get(method);
    let center = match centering {
        Centering::BootstrapMean => ensemble.bar_beta.get(method).clone(),
        Centering::PseudoTruth => ensemble.pseudo_truth(),
    };
    let floor = S::lit(VARIANCE_FLOOR);
    (0..beta.ncols())
        .map(|h| {
            (0..beta.nrows())
                .map(|b| {
                    let s = sigma[(b, h)];
                    (s >= floor).then(|| (beta[(b, h)] - center[h]) / s.sqrt())
                })
                .collect()
        })
        .collect()
}

/// Empirical `(1 - alpha)` quantile of `|t|` (order statistic
/// `ceil((1 - alpha) n)`), and the band `point +- tcrit sqrt(sigma_1)`.
pub fn symmetric_interval<S: Scalar>(point: S, t_values: &[S], sigma_1: S, alpha: f64) -> Result<Band<S>> {
    interval_with_min(point, t_values, sigma_1, alpha, MIN_T_VALUES)
}

fn interval_with_min<S: Scalar>(point: S, t_values: &[S], sigma_1: S, alpha: f64, min: usize) -> Result<Band<S>> {
    if t_values.len() < min.max(1) {
        return Err(Error::TooFewReplications {
            valid: t_values.len(),
            needed: min.max(1),
        });
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidSpec("alpha must lie strictly between 0 and 1".into()));
    }
    let mut abs: Vec<S> = t_values.iter().map(|t| t.abs()).collect();
    abs.sort_by(|a, b| a.partial_cmp(b).expect("finite t statistics"));
    let n = abs.len();
    let rank = (((1.0 - alpha) * n as f64) - 1e-9).ceil() as usize;
    let tcrit = abs[rank.clamp(1, n) - 1];
    let half = tcrit * sigma_1.max(S::zero()).sqrt();
    Ok(Band {
        lower: point - half,
        upper: point + half,
        tcrit,
    })
}

/// Runs the double bootstrap with streams derived from the config seed.
pub fn run_msdb<S: Scalar>(
    panel: &TimeSeriesPanel<S>,
    target: &ShockTarget,
    config: &BootstrapConfig,
) -> Result<BootstrapEnsemble<S>> {
    run_msdb_with_stream(
        panel,
        target,
        config,
        &RngStream::new(config.master_seed, 0).fork("msdb"),
    )
}

/// Runs the double bootstrap with all randomness derived from `root`.
pub fn run_msdb_with_stream<S: Scalar>(
    panel: &TimeSeriesPanel<S>,
    target: &ShockTarget,
    config: &BootstrapConfig,
    root: &RngStream,
) -> Result<BootstrapEnsemble<S>> {
    let t_len = panel.len();
    config.validate(t_len)?;
    target.validate(panel.vars())?;
    let block = config.block_length_for(t_len);
    let original = estimate(panel, target, config.p, config.q)?;
    if block > original.fit.residuals.nrows() {
        return Err(Error::InvalidBlockLength {
            block,
            rows: original.fit.residuals.nrows(),
        });
    }
    let setup = Setup {
        target,
        p: config.p,
        q: config.q,
        b2: config.b2,
        block,
    };
    let levels: Vec<Result<FirstLevel<S>>> = (0..config.b1)
        .into_par_iter()
        .map(|b1| first_level(b1, &original, panel, &setup, root))
        .collect();
    let levels: Vec<FirstLevel<S>> = levels.into_iter().collect::<Result<_>>()?;
    assemble(levels, target, t_len, block, config)
}

fn assemble<S: Scalar>(
    levels: Vec<FirstLevel<S>>,
    target: &ShockTarget,
    t_len: usize,
    block: usize,
    config: &BootstrapConfig,
) -> Result<BootstrapEnsemble<S>> {
    let (b1, horizons) = (levels.len(), target.horizons());
    let nb = S::from_usize_lossy(b1);
    let t_scale = S::from_usize_lossy(t_len);
    let average = |f: &dyn Fn(&FirstLevel<S>) -> &Vec<S>| -> Vec<S> {
        (0..horizons)
            .map(|h| levels.iter().map(|l| f(l)[h]).sum::<S>() / nb)
            .collect()
    };
    let averaged_triple = VarianceTriple {
        sigma_lp: average(&|l| &l.sigma_lp),
        sigma_var: average(&|l| &l.sigma_var),
        sigma_cov: average(&|l| &l.sigma_cov),
    };
    let scaled_avg = averaged_triple.scaled(t_scale);

    let original = &levels[0];
    let grid = default_lambda_grid(&original.est.moments);
    let (slp_lambda, _) = slp_select_lambda(
        &original.est.lp,
        &original.est.moments,
        &scaled_avg.sigma_lp,
        t_len,
        &grid,
    )?;

    let mut beta_first = PerMethod::from_fn(|_| Matrix::zeros(b1, horizons));
    let mut sigma_first = PerMethod::from_fn(|_| Matrix::zeros(b1, horizons));
    let mut cov_first = Matrix::zeros(b1, horizons);
    let mut tlp_weights_first = Vec::with_capacity(b1);
    let mut redraws = 0;
    for (b, level) in levels.iter().enumerate() {
        redraws += level.redraws;
        let own = VarianceTriple {
            sigma_lp: level.sigma_lp.clone(),
            sigma_var: level.sigma_var.clone(),
            sigma_cov: level.sigma_cov.clone(),
        };
        let delta: Vec<S> = level.est.lp.iter().zip(&level.est.var).map(|(&l, &v)| l - v).collect();
        let weight_triple = if config.per_replication_weights {
            own.scaled(t_scale)
        } else {
            scaled_avg.clone()
        };
        let weights = TlpWeights::optimal(&delta, t_len, &weight_triple, &level.est.moments.xtx)?;
        let slp = slp_from_moments(&level.est.moments, slp_lambda)?;
        let slp_var = slp_variance(&level.est.moments, slp_lambda, &level.sigma_lp)?;
        for h in 0..horizons {
            let v = weights.v[h];
            let (lp, var) = (level.est.lp[h], level.est.var[h]);
            let tri = TripleAt::new(own.sigma_lp[h], own.sigma_var[h], own.sigma_cov[h]);
            beta_first.get_mut(Method::Lp)[(b, h)] = lp;
            beta_first.get_mut(Method::Var)[(b, h)] = var;
            beta_first.get_mut(Method::Slp)[(b, h)] = slp[h];
            beta_first.get_mut(Method::Tlp)[(b, h)] = v * lp + (S::one() - v) * var;
            sigma_first.get_mut(Method::Lp)[(b, h)] = tri.lp;
            sigma_first.get_mut(Method::Var)[(b, h)] = tri.var;
            sigma_first.get_mut(Method::Slp)[(b, h)] = slp_var[h];
            sigma_first.get_mut(Method::Tlp)[(b, h)] = combination_variance(v, &tri).max(S::zero());
            cov_first[(b, h)] = tri.cov;
        }
        tlp_weights_first.push(weights);
    }
    let bar_beta = PerMethod::from_fn(|m| {
        let beta = beta_first.get(m);
        (0..horizons)
            .map(|h| (0..b1).map(|b| beta[(b, h)]).sum::<S>() / nb)
            .collect()
    });
    let mut ensemble = BootstrapEnsemble {
        target: *target,
        t_len,
        block_length: block,
        alpha: config.alpha,
        beta_first,
        sigma_first,
        cov_first,
        tlp_weights_first,
        averaged_triple,
        slp_lambda,
        bar_beta,
        bands: BandSet {
            centering: config.centering,
            bands: PerMethod::from_fn(|_| Vec::new()),
            excluded: PerMethod::from_fn(|_| 0),
        },
        min_t_values: MIN_T_VALUES.min(b1),
        redraws,
    };
    ensemble.bands = ensemble.band_set(config.centering)?;
    Ok(ensemble)
}
