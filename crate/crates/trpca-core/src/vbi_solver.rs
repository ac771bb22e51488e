//! Coordinate-ascent solver for the three-way decomposition
//! `X = L + S + E` with a low-tubal-rank `L`, sparse `S`, and Gaussian `E`,
//! inferring the three precision hyperparameters from Gamma posteriors.
//!
//! A run has two kinds of sweeps:
//!
//! * **Separation sweeps** bootstrap the split with robust, data-driven
//!   thresholds: a hard entrywise threshold at three robust standard
//!   deviations picks up outliers, and a debiased spectral shrinkage floored
//!   at the noise spectral edge keeps the low-rank side clean. The
//!   hyperparameter updates run throughout, so the Gamma means calibrate
//!   against the evolving split. Starting from the `E_L = X` initialization,
//!   plain model sweeps provably lock onto the degenerate exact fit; the
//!   decaying exposure schedule is what lets the sparse component ever see
//!   the data.
//! * **Refinement sweeps** are the model updates themselves: entrywise soft
//!   thresholding at `theta_2/theta_1`, singular value thresholding at
//!   `theta_3/theta_1`, then the Gamma scale updates. Once the iterates
//!   stabilize, one final refinement sweep replaces the robust split with
//!   the model-consistent posterior means, which is what gets reported.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::laplace_approx::{abs_posterior, nuclear_posterior_trace_terms};
use crate::metrics::rmse_step;
use crate::tensor_algebra::{dft_mode3, half_slices, Tensor3};
use crate::tsvd::{pstnn_weights, t_shrink, t_svd, Shrink, TSvdFactors, WeightMatrix};
use crate::{lapack, tsvd};

/// Upper bound on any Gamma mean; beyond this the scale has collapsed below
/// what f64 can meaningfully resolve (exact fits with no noise).
const THETA_CAP: f64 = 1e12;

/// Low-rank prior flavor.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    /// Plain tensor nuclear norm.
    Tnn,
    /// Weighted tensor nuclear norm (needs [`SolverConfig::weights`]).
    Weighted,
}

/// Which variance surrogate the sparse factor uses; see the module docs of
/// [`crate::laplace_approx`]. `Derivation` is the curvature of the
/// majorization bound under likelihood precision `theta_1`; `Algorithm1`
/// reproduces the dimensionless form some implementations use.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SigmaSConvention {
    Derivation,
    Algorithm1,
}

/// Weight source for the weighted method.
#[derive(Debug, Clone)]
pub enum WeightSpec {
    Matrix(WeightMatrix),
    /// Partial-sum preset: zero weight on the leading `k` values per slice.
    PstnnK(usize),
}

/// Run controls.
#[derive(Debug, Clone)]
pub struct SolverConfig {
    pub method: Method,
    pub weights: Option<WeightSpec>,
    pub theta_init: (f64, f64, f64),
    pub max_iters: usize,
    pub rmse_tol: f64,
    pub sigma_s_convention: SigmaSConvention,
    pub trace_enabled: bool,
    /// Cap on separation sweeps; 0 runs plain model sweeps from the start.
    pub separation_iters: usize,
    /// Geometric decay of the separation exposure schedule, in (0, 1).
    pub separation_decay: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            method: Method::Tnn,
            weights: None,
            theta_init: (1.0, 1.0, 1.0),
            max_iters: 50,
            rmse_tol: 1e-4,
            sigma_s_convention: SigmaSConvention::Derivation,
            trace_enabled: true,
            separation_iters: 25,
            separation_decay: 0.5,
        }
    }
}

/// Variational means, variance summaries and Gamma parameters at one
/// iteration.
#[derive(Debug, Clone)]
pub struct PosteriorState {
    pub e_l: Tensor3,
    pub e_s: Tensor3,
    /// Post-shrinkage factors of `e_l`; the covariance of the low-rank
    /// factor is never materialized, only its spectral traces.
    pub l_factors: TSvdFactors,
    /// Elementwise variance surrogate of the sparse factor.
    pub sigma_s: Tensor3,
    pub e_theta: [f64; 3],
    pub a_theta: [f64; 3],
    pub b_theta: [f64; 3],
    pub iter: usize,
}

/// Per-iteration diagnostics.
#[derive(Debug, Clone, Serialize)]
pub struct TraceRecord {
    pub iter: usize,
    pub objective: f64,
    pub rmse_l: f64,
    pub rmse_s: f64,
    pub theta: [f64; 3],
    /// Nuclear-norm term of the objective (weighted when method = weighted).
    pub tnn_of_l: f64,
    pub l1_of_s: f64,
    pub residual_fro: f64,
}

/// How a run ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Termination {
    /// Both relative changes fell below the tolerance.
    Converged,
    /// Iteration budget exhausted.
    MaxIters,
    /// A Gamma scale collapsed; the run aborted with a partial trace.
    DegenerateScale { param: usize },
}

/// Decomposition result.
#[derive(Debug, Clone)]
pub struct SolverOutput {
    pub l: Tensor3,
    pub s: Tensor3,
    pub state: PosteriorState,
    pub trace: Vec<TraceRecord>,
    pub termination: Termination,
    pub iters: usize,
}

/// Solver bound to one observation tensor and one configuration.
pub struct Solver<'a> {
    x: &'a Tensor3,
    cfg: SolverConfig,
    weights: Option<WeightMatrix>,
    n: f64,
}

impl<'a> Solver<'a> {
    pub fn new(x: &'a Tensor3, cfg: SolverConfig) -> Result<Self> {
        let (t1, t2, t3) = cfg.theta_init;
        if !(t1 > 0.0 && t2 > 0.0 && t3 > 0.0) {
            return Err(Error::BadConfig(format!(
                "theta_init must be positive, got {:?}",
                cfg.theta_init
            )));
        }
        if cfg.max_iters < 1 {
            return Err(Error::BadConfig("max_iters must be at least 1".into()));
        }
        if !(cfg.rmse_tol > 0.0) {
            return Err(Error::BadConfig("rmse_tol must be positive".into()));
        }
        if cfg.separation_iters > 0 && !(cfg.separation_decay > 0.0 && cfg.separation_decay < 1.0)
        {
            return Err(Error::BadConfig(format!(
                "separation_decay must lie in (0, 1), got {}",
                cfg.separation_decay
            )));
        }
        let (n1, n2, n3) = x.dims();
        let weights = match (cfg.method, &cfg.weights) {
            (Method::Tnn, None) => None,
            (Method::Tnn, Some(_)) => {
                return Err(Error::BadConfig(
                    "weights given but method is tnn; use method weighted".into(),
                ))
            }
            (Method::Weighted, None) => {
                return Err(Error::BadConfig(
                    "method weighted requires a weight matrix or pstnn preset".into(),
                ))
            }
            (Method::Weighted, Some(WeightSpec::Matrix(w))) => {
                if w.rows() != n1.min(n2) || w.cols() != n3 {
                    return Err(Error::DimMismatch(format!(
                        "weights are {}x{}, tensor needs {}x{}",
                        w.rows(),
                        w.cols(),
                        n1.min(n2),
                        n3
                    )));
                }
                Some(w.clone())
            }
            (Method::Weighted, Some(WeightSpec::PstnnK(k))) => {
                Some(pstnn_weights(n1, n2, n3, *k)?)
            }
        };
        Ok(Self {
            x,
            cfg,
            weights,
            n: (n1 * n2 * n3) as f64,
        })
    }

    pub fn config(&self) -> &SolverConfig {
        &self.cfg
    }

    /// Initial posterior: `E_L = X`, `E_S = 0`, Gamma means at their
    /// configured starting values.
    pub fn init(&self) -> Result<PosteriorState> {
        let (n1, n2, n3) = self.x.dims();
        let a_theta = [self.n / 2.0 + 1.0, self.n + 1.0, self.n + 1.0];
        let e_theta = [
            self.cfg.theta_init.0,
            self.cfg.theta_init.1,
            self.cfg.theta_init.2,
        ];
        let b_theta = [
            a_theta[0] / e_theta[0],
            a_theta[1] / e_theta[1],
            a_theta[2] / e_theta[2],
        ];
        Ok(PosteriorState {
            e_l: self.x.clone(),
            e_s: Tensor3::zeros(n1, n2, n3),
            l_factors: t_svd(self.x)?,
            sigma_s: Tensor3::zeros(n1, n2, n3),
            e_theta,
            a_theta,
            b_theta,
            iter: 0,
        })
    }

    /// Sparse-factor update: entrywise soft threshold of `X - E_L` at
    /// `theta_2/theta_1`, plus the variance surrogate.
    pub fn update_s(&self, state: &mut PosteriorState) -> Result<()> {
        let [th1, th2, _] = state.e_theta;
        let x = self.x.values();
        let l = state.e_l.values();
        let s = state.e_s.values_mut();
        let sig = state.sigma_s.values_mut();
        for i in 0..x.len() {
            let p = abs_posterior(x[i] - l[i], th1, th2)?;
            s[i] = p.mean;
            sig[i] = match self.cfg.sigma_s_convention {
                SigmaSConvention::Derivation => p.variance,
                SigmaSConvention::Algorithm1 => th1 * p.variance,
            };
        }
        Ok(())
    }

    /// Low-rank update: (weighted) singular value thresholding of
    /// `X - E_S` at `theta_3/theta_1`.
    pub fn update_l(&self, state: &mut PosteriorState) -> Result<()> {
        let [th1, _, th3] = state.e_theta;
        let a = self.x - &state.e_s;
        let tau = th3 / th1;
        let (l, factors) = match &self.weights {
            None => tsvd::t_svt(&a, tau)?,
            Some(w) => tsvd::weighted_t_svt(&a, tau, w)?,
        };
        state.e_l = l;
        state.l_factors = factors;
        Ok(())
    }

    /// Gamma scale updates; all expectations are evaluated with the
    /// pre-update Gamma means, then `E_theta_i = a_i / b_i`.
    pub fn update_theta(&self, state: &mut PosteriorState) -> Result<()> {
        let [th1, th2, th3] = state.e_theta;
        let (_, n2, n3) = self.x.dims();

        let res2 = {
            let x = self.x.values();
            let l = state.e_l.values();
            let s = state.e_s.values();
            (0..x.len())
                .map(|i| {
                    let r = x[i] - l[i] - s[i];
                    r * r
                })
                .sum::<f64>()
        };
        let sum_sigma_s: f64 = state.sigma_s.values().iter().sum();

        let ones;
        let w = match &self.weights {
            Some(w) => w,
            None => {
                ones = WeightMatrix::ones(state.l_factors.rank().max(1), n3);
                &ones
            }
        };
        let mut cov_sum = 0.0;
        let mut inv_sum = 0.0;
        for k in 0..n3 {
            let svals = state.l_factors.svals_col(k);
            let wc: Vec<f64> = if self.weights.is_some() {
                w.symmetrized_column(k)[..svals.len().min(w.rows())].to_vec()
            } else {
                vec![1.0; svals.len()]
            };
            let (c, i) = nuclear_posterior_trace_terms(svals, th1, th3, &wc)?;
            cov_sum += c;
            inv_sum += i;
        }

        let b1 = 0.5 * res2 + n2 as f64 / (2.0 * n3 as f64) * cov_sum + 0.5 * sum_sigma_s;

        let l1 = state.e_s.l1_norm();
        let correction: f64 = state
            .e_s
            .values()
            .iter()
            .map(|m| 1.0 / (th1 * m.abs() + th2))
            .sum();
        let b2 = l1 + 0.5 * correction;

        let b3 = self.nuclear_term(&state.l_factors)? + n2 as f64 / 2.0 * inv_sum;

        for (index, b) in [b1, b2, b3].into_iter().enumerate() {
            if !(b > 0.0) || !b.is_finite() {
                return Err(Error::DegenerateScale {
                    index: index + 1,
                    value: b,
                });
            }
        }
        // Cap on b rather than on the mean keeps E * b = a exact.
        state.b_theta = [
            b1.max(state.a_theta[0] / THETA_CAP),
            b2.max(state.a_theta[1] / THETA_CAP),
            b3.max(state.a_theta[2] / THETA_CAP),
        ];
        for i in 0..3 {
            state.e_theta[i] = state.a_theta[i] / state.b_theta[i];
        }
        Ok(())
    }

    /// Negative log joint density at the variational means, the quantity
    /// traced per iteration.
    pub fn objective(&self, state: &PosteriorState) -> f64 {
        let [th1, th2, th3] = state.e_theta;
        let res = &(self.x - &state.e_l) - &state.e_s;
        let res2 = res.fro_norm().powi(2);
        let nuclear = self
            .nuclear_term(&state.l_factors)
            .expect("weight dims fixed at construction");
        0.5 * th1 * res2 + th2 * state.e_s.l1_norm() + th3 * nuclear
            - 0.5 * self.n * th1.ln()
            - self.n * th2.ln()
            - self.n * th3.ln()
    }

    /// Nuclear-norm term of the objective, read off the retained spectrum.
    fn nuclear_term(&self, factors: &TSvdFactors) -> Result<f64> {
        match &self.weights {
            None => Ok(factors.nuclear_norm()),
            Some(w) => {
                if factors.rank() == 0 {
                    return Ok(0.0);
                }
                let (_, _, n3) = factors.dims();
                let mut acc = 0.0;
                for k in 0..n3 {
                    let wc = w.symmetrized_column(k);
                    acc += factors
                        .svals_col(k)
                        .iter()
                        .zip(&wc)
                        .map(|(d, wi)| d * wi)
                        .sum::<f64>();
                }
                Ok(acc / n3 as f64)
            }
        }
    }

    /// One robust separation sweep: hard entrywise threshold, debiased
    /// spectral shrinkage floored at the estimated noise spectral edge.
    fn separation_sweep(
        &self,
        state: &mut PosteriorState,
        it: usize,
        scales: &SeparationScales,
    ) -> Result<()> {
        let (n1, n2, n3) = self.x.dims();
        let decay = self.cfg.separation_decay.powi(it as i32 - 1);

        // Robust spread of the pre-threshold residual X - E_L; the median of
        // absolute values tolerates the sparse outliers.
        let sigma_hat = {
            let x = self.x.values();
            let l = state.e_l.values();
            let mut abs: Vec<f64> = (0..x.len()).map(|i| (x[i] - l[i]).abs()).collect();
            let mid = abs.len() / 2;
            let (_, med, _) = abs.select_nth_unstable_by(mid, f64::total_cmp);
            1.4826 * *med
        };

        let thr = (scales.entry * decay).max(3.0 * sigma_hat);
        {
            let x = self.x.values();
            let l = state.e_l.values();
            let th1 = state.e_theta[0];
            let th2 = state.e_theta[1];
            let s = state.e_s.values_mut();
            let sig = state.sigma_s.values_mut();
            for i in 0..x.len() {
                let b = x[i] - l[i];
                let kept = if b.abs() > thr { b } else { 0.0 };
                s[i] = kept;
                sig[i] = if kept == 0.0 {
                    0.0
                } else {
                    let v = kept.abs() / (th1 * kept.abs() + th2);
                    match self.cfg.sigma_s_convention {
                        SigmaSConvention::Derivation => v,
                        SigmaSConvention::Algorithm1 => th1 * v,
                    }
                };
            }
        }

        let edge = ((n1 as f64).sqrt() + (n2 as f64).sqrt()) * sigma_hat * (n3 as f64).sqrt();
        let tau = (scales.spectral * decay).max(edge);
        let a = self.x - &state.e_s;
        let (l, factors) = t_shrink(&a, Shrink::Debias { tau })?;
        state.e_l = l;
        state.l_factors = factors;
        Ok(())
    }

    /// Run to convergence or the iteration budget.
    pub fn run(&self) -> Result<SolverOutput> {
        let (n1, n2, n3) = self.x.dims();
        // Exact-zero input: the relative-change denominators vanish.
        if self.x.fro_norm() == 0.0 {
            let state = self.init()?;
            return Ok(SolverOutput {
                l: Tensor3::zeros(n1, n2, n3),
                s: Tensor3::zeros(n1, n2, n3),
                state,
                trace: Vec::new(),
                termination: Termination::Converged,
                iters: 0,
            });
        }

        let mut state = self.init()?;
        let scales = if self.cfg.separation_iters > 0 {
            Some(self.separation_scales()?)
        } else {
            None
        };

        let mut prev_l = state.e_l.clone();
        let mut prev_s = state.e_s.clone();
        let mut trace = Vec::new();
        let mut termination = Termination::MaxIters;
        let mut separating = self.cfg.separation_iters > 0;
        let mut final_sweep = false;
        let mut iters = 0;

        for it in 1..=self.cfg.max_iters {
            iters = it;
            state.iter = it;
            if separating && it > self.cfg.separation_iters {
                separating = false;
            }

            let step = if separating {
                self.separation_sweep(&mut state, it, scales.as_ref().unwrap())
            } else {
                self.update_s(&mut state).and_then(|()| self.update_l(&mut state))
            };
            let step = step.and_then(|()| self.update_theta(&mut state));
            if let Err(Error::DegenerateScale { index, value: _ }) = step {
                termination = Termination::DegenerateScale { param: index };
                break;
            }
            step?;

            let rmse_l = rmse_step(&prev_l, &state.e_l)?;
            let rmse_s = rmse_step(&prev_s, &state.e_s)?;
            prev_l = state.e_l.clone();
            prev_s = state.e_s.clone();

            if self.cfg.trace_enabled {
                let res = &(self.x - &state.e_l) - &state.e_s;
                trace.push(TraceRecord {
                    iter: it,
                    objective: self.objective(&state),
                    rmse_l,
                    rmse_s,
                    theta: state.e_theta,
                    tnn_of_l: self.nuclear_term(&state.l_factors)?,
                    l1_of_s: state.e_s.l1_norm(),
                    residual_fro: res.fro_norm(),
                });
            }

            if final_sweep {
                termination = Termination::Converged;
                break;
            }
            if rmse_l.max(rmse_s) < self.cfg.rmse_tol {
                if separating {
                    // Stable split; one model sweep replaces the robust
                    // estimates with the posterior means, then stop.
                    separating = false;
                    final_sweep = true;
                } else {
                    termination = Termination::Converged;
                    break;
                }
            }
        }

        Ok(SolverOutput {
            l: state.e_l.clone(),
            s: state.e_s.clone(),
            state,
            trace,
            termination,
            iters,
        })
    }

    fn separation_scales(&self) -> Result<SeparationScales> {
        let (n1, n2, n3) = self.x.dims();
        let xh = dft_mode3(self.x);
        let mut smax = 0.0f64;
        for k in 0..half_slices(n3) {
            let s = lapack::singular_values(xh.slice(k), n1, n2)?;
            if let Some(&top) = s.first() {
                smax = smax.max(top);
            }
        }
        Ok(SeparationScales {
            spectral: 0.5 * smax,
            entry: 0.5 * self.x.max_abs(),
        })
    }
}

/// Starting magnitudes of the separation schedules, taken from the data.
struct SeparationScales {
    spectral: f64,
    entry: f64,
}

/// Decompose `x` under `cfg`.
pub fn run(x: &Tensor3, cfg: SolverConfig) -> Result<SolverOutput> {
    Solver::new(x, cfg)?.run()
}
