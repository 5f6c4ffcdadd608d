//! Monte Carlo coverage experiments.

use rayon::prelude::*;

use crate::bootstrap::{run_msdb_with_stream, BandSet, BootstrapConfig, Centering, MAX_RETRIES};
use crate::dgp::{simulate, true_irf, DgpSpec};
use crate::error::{Error, Result};
use crate::estimators::check_lp_sample;
use crate::rng::RngStream;
use crate::scalar::Scalar;
use crate::types::{Method, ShockTarget};

/// Replications may fail (after redraws) in at most this share of the design.
pub const MAX_FAILURE_SHARE: f64 = 0.02;

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentDesign<S> {
    pub name: String,
    pub dgp: DgpSpec<S>,
    pub t_len: usize,
    pub n_reps: usize,
    /// Also carries the LP and VAR lag counts.
    pub bootstrap: BootstrapConfig,
    pub target: ShockTarget,
    pub methods: Vec<Method>,
    pub master_seed: u64,
}

impl<S: Scalar> ExperimentDesign<S> {
    pub fn p(&self) -> usize {
        self.bootstrap.p
    }

    pub fn q(&self) -> usize {
        self.bootstrap.q
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_reps == 0 {
            return Err(Error::InvalidSpec("n_reps must be at least 1".into()));
        }
        if self.methods.is_empty() {
            return Err(Error::InvalidSpec("methods must be non-empty".into()));
        }
        self.dgp.validate()?;
        self.target.validate(self.dgp.vars())?;
        self.bootstrap.validate(self.t_len)?;
        check_lp_sample(self.t_len, self.dgp.vars(), self.target.h_max, self.p())?;
        let k = self.dgp.vars();
        let needed = self.q() + k * self.q() + 3;
        if self.t_len < needed {
            return Err(Error::SampleTooShort {
                needed,
                available: self.t_len,
            });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricsRow {
    pub method: Method,
    pub horizon: usize,
    pub coverage: f64,
    pub avg_length: f64,
    pub bias: f64,
    pub sd: f64,
    pub rmse: f64,
    pub n_effective: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricsTable {
    pub centering: Centering,
    pub nominal: f64,
    /// Method-major, then horizon.
    pub rows: Vec<MetricsRow>,
    pub failed: usize,
}

impl MetricsTable {
    pub fn row(&self, method: Method, horizon: usize) -> Option<&MetricsRow> {
        self.rows.iter().find(|r| r.method == method && r.horizon == horizon)
    }

    pub fn column(&self, method: Method, f: impl Fn(&MetricsRow) -> f64) -> Vec<f64> {
        self.rows.iter().filter(|r| r.method == method).map(f).collect()
    }

    pub fn methods(&self) -> Vec<Method> {
        let mut out: Vec<Method> = Vec::new();
        for r in &self.rows {
            if !out.contains(&r.method) {
                out.push(r.method);
            }
        }
        out
    }
}

/// Bootstrap-mean and pseudo-truth tables from the same replications.
#[derive(Debug, Clone, PartialEq)]
pub struct CenteringComparison {
    pub bootstrap_mean: MetricsTable,
    pub pseudo_truth: MetricsTable,
}

struct Outcome {
    /// `[method][h]` original-sample estimates.
    points: Vec<Vec<f64>>,
    /// `[centering][method][h]` as (lower, upper).
    bands: Vec<Vec<Vec<(f64, f64)>>>,
}

fn replication<S: Scalar>(design: &ExperimentDesign<S>, r: usize, centerings: &[Centering]) -> Result<Outcome> {
    let base = RngStream::new(design.master_seed, r as u64);
    let mut last_err = None;
    for attempt in 0..=MAX_RETRIES {
        let stream = if attempt == 0 { base } else { base.child(attempt as u64) };
        let run = simulate(&design.dgp, design.t_len, &stream.fork("panel"))
            .and_then(|panel| run_msdb_with_stream(&panel, &design.target, &design.bootstrap, &stream.fork("msdb")));
        let ens = match run {
            Ok(e) => e,
            Err(e) => {
                last_err = Some(e);
                continue;
            }
        };
        let sets: Result<Vec<BandSet<S>>> = centerings
            .iter()
            .map(|&c| {
                if c == ens.bands.centering {
                    Ok(ens.bands.clone())
                } else {
                    ens.band_set(c)
                }
            })
            .collect();
        let sets = match sets {
            Ok(s) => s,
            Err(e) => {
                last_err = Some(e);
                continue;
            }
        };
        let points = design
            .methods
            .iter()
            .map(|&m| ens.point(m).iter().map(|x| x.to_f64_lossy()).collect())
            .collect();
        let bands = sets
            .iter()
            .map(|set| {
                design
                    .methods
                    .iter()
                    .map(|&m| {
                        set.bands
                            .get(m)
                            .iter()
                            .map(|b| (b.lower.to_f64_lossy(), b.upper.to_f64_lossy()))
                            .collect()
                    })
                    .collect()
            })
            .collect();
        return Ok(Outcome { points, bands });
    }
    Err(Error::ReplicationFailure {
        index: r,
        attempts: MAX_RETRIES + 1,
        reason: last_err.map(|e| e.to_string()).unwrap_or_default(),
    })
}

fn run_centerings<S: Scalar>(design: &ExperimentDesign<S>, centerings: &[Centering]) -> Result<Vec<MetricsTable>> {
    design.validate()?;
    let truth: Vec<f64> = true_irf(&design.dgp, &design.target, design.t_len)?
        .iter()
        .map(|x| x.to_f64_lossy())
        .collect();
    let outcomes: Vec<Result<Outcome>> = (0..design.n_reps)
        .into_par_iter()
        .map(|r| replication(design, r, centerings))
        .collect();
    let failed = outcomes.iter().filter(|o| o.is_err()).count();
    if failed as f64 > MAX_FAILURE_SHARE * design.n_reps as f64 {
        return Err(Error::TooManyFailures {
            failed,
            total: design.n_reps,
        });
    }
    let ok: Vec<Outcome> = outcomes.into_iter().flatten().collect();
    let nominal = 1.0 - design.bootstrap.alpha;
    Ok(centerings
        .iter()
        .enumerate()
        .map(|(ci, &centering)| MetricsTable {
            centering,
            nominal,
            rows: aggregate(design, &truth, &ok, ci),
            failed,
        })
        .collect())
}

fn aggregate<S: Scalar>(design: &ExperimentDesign<S>, truth: &[f64], ok: &[Outcome], ci: usize) -> Vec<MetricsRow> {
    let n = ok.len();
    let nf = n as f64;
    let mut rows = Vec::with_capacity(design.methods.len() * truth.len());
    for (mi, &method) in design.methods.iter().enumerate() {
        for (h, &beta_star) in truth.iter().enumerate() {
            let est: Vec<f64> = ok.iter().map(|o| o.points[mi][h]).collect();
            let bands: Vec<(f64, f64)> = ok.iter().map(|o| o.bands[ci][mi][h]).collect();
            let covered = bands
                .iter()
                .filter(|(lo, hi)| *lo <= beta_star && beta_star <= *hi)
                .count();
            let mean = est.iter().sum::<f64>() / nf;
            let var = est.iter().map(|e| (e - mean).powi(2)).sum::<f64>() / nf;
            let mse = est.iter().map(|e| (e - beta_star).powi(2)).sum::<f64>() / nf;
            rows.push(MetricsRow {
                method,
                horizon: h,
                coverage: covered as f64 / nf,
                avg_length: bands.iter().map(|(lo, hi)| hi - lo).sum::<f64>() / nf,
                bias: mean - beta_star,
                sd: var.sqrt(),
                rmse: mse.sqrt(),
                n_effective: n,
            });
        }
    }
    rows
}

/// Coverage and accuracy metrics under the design's configured centering.
pub fn run_experiment<S: Scalar>(design: &ExperimentDesign<S>) -> Result<MetricsTable> {
    Ok(run_centerings(design, &[design.bootstrap.centering])?.remove(0))
}

/// Both centering rules evaluated on identical panels and resamples.
pub fn compare_centering<S: Scalar>(design: &ExperimentDesign<S>) -> Result<CenteringComparison> {
    let mut tables = run_centerings(design, &Centering::ALL)?;
    let pseudo_truth = tables.pop().expect("two tables");
    let bootstrap_mean = tables.pop().expect("two tables");
    Ok(CenteringComparison {
        bootstrap_mean,
        pseudo_truth,
    })
}

/// Runs `f` on a dedicated pool of `workers` threads, or on the global pool
/// when `workers` is `None`. Results do not depend on the choice.
pub fn with_workers<R: Send>(workers: Option<usize>, f: impl FnOnce() -> R + Send) -> Result<R> {
    match workers {
        None => Ok(f()),
        Some(0) => Err(Error::InvalidSpec("worker count must be at least 1".into())),
        Some(w) => rayon::ThreadPoolBuilder::new()
            .num_threads(w)
            .build()
            .map(|pool| pool.install(f))
            .map_err(|e| Error::InvalidSpec(format!("cannot start worker pool: {e}"))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dgp::designs;

    fn smoke() -> ExperimentDesign<f64> {
        ExperimentDesign {
            name: "smoke".into(),
            dgp: designs::varma11(),
            t_len: 120,
            n_reps: 3,
            bootstrap: BootstrapConfig::new(4, 3, 0.1, 2, 1, 0),
            target: ShockTarget::new(2, 1, 5),
            methods: Method::ALL.to_vec(),
            master_seed: 17,
        }
    }

    #[test]
    fn smoke_table_is_well_formed() {
        let table = run_experiment(&smoke()).unwrap();
        assert_eq!(table.rows.len(), 4 * 6);
        for r in &table.rows {
            assert!((0.0..=1.0).contains(&r.coverage));
            assert!(r.avg_length >= 0.0);
            assert_eq!(r.n_effective, 3);
            let lhs = r.rmse * r.rmse;
            let rhs = r.bias * r.bias + r.sd * r.sd;
            assert!((lhs - rhs).abs() <= 1e-9 * lhs.max(1e-300));
        }
    }

    #[test]
    fn worker_count_does_not_change_results() {
        let design = smoke();
        let one = with_workers(Some(1), || run_experiment(&design)).unwrap().unwrap();
        let three = with_workers(Some(3), || run_experiment(&design)).unwrap().unwrap();
        assert_eq!(one, three);
    }

    #[test]
    fn paired_centerings_share_lengths() {
        let cmp = compare_centering(&smoke()).unwrap();
        for (a, b) in cmp.bootstrap_mean.rows.iter().zip(&cmp.pseudo_truth.rows) {
            assert!((a.avg_length - b.avg_length).abs() < 1e-9);
            assert_eq!(a.bias, b.bias);
        }
    }

    #[test]
    fn invalid_designs_rejected() {
        let mut d = smoke();
        d.n_reps = 0;
        assert!(d.validate().is_err());
        let mut d = smoke();
        d.methods.clear();
        assert!(d.validate().is_err());
        let mut d = smoke();
        d.bootstrap.b1 = 1;
        assert!(d.validate().is_err());
    }
}
