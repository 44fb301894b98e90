//! True estimand values.
//!
//! Study I parameters are collapsible, so its truth is a constant. Study II
//! truth has no closed form: it is recovered by an oracle that simulates every
//! deterministic regime under intervention and fits the unweighted Aalen-MSM
//! to the pooled counterfactual samples.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::estimators::{always_treated, fit_aalen_each, never_treated, survival_logit, AalenSource, GForm};
use crate::genmodel_one::DEFAULT_GAMMA;
use crate::genmodel_two::{simulate_dataset_two, simulate_subject, StudyTwoParams, DEFAULT_ALPHA};
use crate::numeric::percentiles;
use crate::stochastic::{StreamKey, StreamLabel};

pub const STUDY_ONE_VISITS: usize = 40;
pub const STUDY_TWO_VISITS: usize = 4;
pub const DEFAULT_N_ORACLE: usize = 100_000;
/// Largest tolerated gap between the plug-in and empirical oracle survival.
pub const ORACLE_SURVIVAL_TOLERANCE: f64 = 0.01;
pub const CANONICAL_TAU_GRID_TWO: [f64; 6] = [1.0, 1.5, 2.0, 3.0, 7.0, 10.0];

#[derive(Debug, Clone, PartialEq)]
pub struct TruthSetOne {
    pub gamma: [f64; 4],
    /// `always[t]` is `S^always(t)` for `t = 0..=K+1`.
    pub always: Vec<f64>,
    pub never: Vec<f64>,
}

pub fn true_params_one() -> TruthSetOne {
    let visits = STUDY_ONE_VISITS;
    let curve = |regime: &[u8]| {
        (0..=visits + 1)
            .map(|t| survival_logit(&DEFAULT_GAMMA, GForm::HavercroftD1AD3, regime, t))
            .collect()
    };
    TruthSetOne {
        gamma: DEFAULT_GAMMA,
        always: curve(&always_treated(visits)),
        never: curve(&never_treated(visits)),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TruthSetTwo {
    /// Subjects simulated per regime.
    pub n_oracle: usize,
    pub seed: u64,
    pub alpha: [f64; 4],
    /// Evaluation grid, `t = 1..=K+1`.
    pub grid: Vec<f64>,
    pub c0: Vec<f64>,
    /// `c_lag[j][g]`: `C_Aj` at `grid[g]` (zero where `grid[g] <= j`).
    pub c_lag: Vec<Vec<f64>>,
    /// Monte Carlo standard errors of `c0` and `c_lag` from the
    /// optional-variation estimate of the oracle fit.
    pub c0_se: Vec<f64>,
    pub c_lag_se: Vec<Vec<f64>>,
    /// Plug-in survival from the oracle fit.
    pub survival_always: Vec<f64>,
    pub survival_never: Vec<f64>,
    /// Fraction of the intervened sample still event-free at each grid time.
    pub empirical_always: Vec<f64>,
    pub empirical_never: Vec<f64>,
}

impl TruthSetTwo {
    pub fn visits(&self) -> usize {
        self.c_lag.len() - 1
    }

    /// `C_Aj(t)` at grid time `t` (an integer in `1..=K+1`).
    pub fn c_lag_at(&self, lag: usize, t: usize) -> f64 {
        self.c_lag[lag][t - 1]
    }
}

/// Regime number `r` as `(a_0, ..., a_K)` with `a_k` the k-th bit.
pub fn regime_from_index(r: usize, visits: usize) -> Vec<u8> {
    (0..=visits).map(|k| ((r >> k) & 1) as u8).collect()
}

struct OracleSample {
    visits: usize,
    exit: Vec<f64>,
    event: Vec<bool>,
    regime: Vec<u8>,
}

impl AalenSource for OracleSample {
    fn subjects(&self) -> usize {
        self.exit.len()
    }

    fn columns(&self) -> usize {
        self.visits + 2
    }

    fn exit_time(&self, i: usize) -> f64 {
        self.exit[i]
    }

    fn is_event(&self, i: usize) -> bool {
        self.event[i]
    }

    fn interval_row(&self, i: usize, k: usize, row: &mut [f64]) -> f64 {
        let r = self.regime[i] as usize;
        row[0] = 1.0;
        for j in 0..=self.visits {
            row[1 + j] = if j <= k { ((r >> (k - j)) & 1) as f64 } else { 0.0 };
        }
        1.0
    }

    fn active_columns(&self, k: usize, active: &mut [bool]) {
        active[0] = true;
        for j in 0..=self.visits {
            active[1 + j] = j <= k;
        }
    }
}

fn oracle_key(seed: u64, regime: usize, id: usize) -> StreamKey {
    StreamKey::new(seed)
        .child(StreamLabel::Study, 2)
        .child(StreamLabel::Regime, regime as u64)
        .child(StreamLabel::Subject, id as u64)
}

/// Simulation-based truth for study II with the default hazard parameters.
pub fn compute_truth_two(n_oracle: usize, seed: u64) -> Result<TruthSetTwo> {
    compute_truth_two_with(n_oracle, seed, DEFAULT_ALPHA)
}

/// Simulates all `2^(K+1)` deterministic regimes with `n_oracle` subjects
/// each, fits the unweighted Aalen-MSM to the pooled sample and reads the
/// cumulative coefficients off at `t = 1..=K+1`.
///
/// Fails with [`Error::Oracle`] if plug-in and empirical survival of the
/// always- or never-treated regime differ by more than
/// [`ORACLE_SURVIVAL_TOLERANCE`].
pub fn compute_truth_two_with(n_oracle: usize, seed: u64, alpha: [f64; 4]) -> Result<TruthSetTwo> {
    if n_oracle == 0 {
        return Err(Error::InvalidParameter("n_oracle must be positive".into()));
    }
    let visits = STUDY_TWO_VISITS;
    let regimes = 1usize << (visits + 1);
    let base = StudyTwoParams {
        alpha,
        ..StudyTwoParams::benchmark(n_oracle)
    };
    base.validate()?;

    let per_regime: Vec<Vec<(f64, bool)>> = (0..regimes)
        .into_par_iter()
        .map(|r| {
            let params = StudyTwoParams {
                intervention: Some(regime_from_index(r, visits)),
                ..base.clone()
            };
            (0..n_oracle)
                .map(|id| simulate_subject(&params, &oracle_key(seed, r, id)).map(|o| (o.exit_time, o.event)))
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<_>>()?;

    let grid: Vec<f64> = (1..=visits + 1).map(|t| t as f64).collect();
    let empirical = |r: usize| -> Vec<f64> {
        grid.iter()
            .map(|&t| {
                let alive = per_regime[r].iter().filter(|(x, ev)| !(*ev && *x <= t)).count();
                alive as f64 / n_oracle as f64
            })
            .collect()
    };
    let empirical_always = empirical(regimes - 1);
    let empirical_never = empirical(0);

    let mut sample = OracleSample {
        visits,
        exit: Vec::with_capacity(regimes * n_oracle),
        event: Vec::with_capacity(regimes * n_oracle),
        regime: Vec::with_capacity(regimes * n_oracle),
    };
    for (r, subjects) in per_regime.into_iter().enumerate() {
        for (x, ev) in subjects {
            sample.exit.push(x);
            sample.event.push(ev);
            sample.regime.push(r as u8);
        }
    }

    let p = visits + 2;
    let mut cum = vec![0.0; p];
    let mut var = vec![0.0; p];
    let mut at_grid = vec![vec![0.0; grid.len()]; p];
    let mut var_at_grid = vec![vec![0.0; grid.len()]; p];
    let mut log_always = vec![0.0; grid.len()];
    let mut log_never = vec![0.0; grid.len()];
    let (mut hz_always, mut hz_never) = (0.0, 0.0);
    let mut g = 0;
    let mut flush = |upto: f64, cum: &[f64], var: &[f64], ha: f64, hn: f64, g: &mut usize| {
        while *g < grid.len() && grid[*g] < upto {
            for c in 0..p {
                at_grid[c][*g] = cum[c];
                var_at_grid[c][*g] = var[c];
            }
            log_always[*g] = -ha;
            log_never[*g] = -hn;
            *g += 1;
        }
    };
    fit_aalen_each(&sample, visits, |s| {
        flush(s.time, &cum, &var, hz_always, hz_never, &mut g);
        let k = s.time.floor() as usize;
        for c in 0..p {
            cum[c] += s.increment[c];
            var[c] += s.variation[c];
        }
        hz_never += s.increment[0];
        hz_always += s.increment[..=k + 1].iter().sum::<f64>();
    })?;
    flush(f64::INFINITY, &cum, &var, hz_always, hz_never, &mut g);

    let truth = TruthSetTwo {
        n_oracle,
        seed,
        alpha,
        c0: at_grid[0].clone(),
        c0_se: var_at_grid[0].iter().map(|v| v.sqrt()).collect(),
        c_lag: at_grid[1..].to_vec(),
        c_lag_se: var_at_grid[1..].iter().map(|v| v.iter().map(|x| x.sqrt()).collect()).collect(),
        survival_always: log_always.iter().map(|x| x.exp()).collect(),
        survival_never: log_never.iter().map(|x| x.exp()).collect(),
        empirical_always,
        empirical_never,
        grid,
    };
    check_oracle(&truth)?;
    Ok(truth)
}

fn check_oracle(truth: &TruthSetTwo) -> Result<()> {
    let pairs = [
        ("always", &truth.survival_always, &truth.empirical_always),
        ("never", &truth.survival_never, &truth.empirical_never),
    ];
    for (name, plug_in, empirical) in pairs {
        for (g, (a, b)) in plug_in.iter().zip(empirical.iter()).enumerate() {
            if (a - b).abs() > ORACLE_SURVIVAL_TOLERANCE {
                return Err(Error::Oracle(format!(
                    "{name}-treated survival at t = {}: plug-in {a} vs empirical {b}",
                    truth.grid[g]
                )));
            }
        }
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct TauGridReport {
    pub canonical: Vec<f64>,
    /// `(percentile, value)` of the pooled biomarker history.
    pub percentiles: Vec<(f64, f64)>,
}

pub const TAU_GRID_PERCENTILES: [f64; 5] = [0.80, 0.90, 0.95, 0.99, 1.0];

/// Pools the biomarker history of one large study II benchmark dataset and
/// reports the percentiles behind the canonical τ grid.
pub fn derive_tau_grid_two(n: usize, seed: u64) -> Result<TauGridReport> {
    let data = simulate_dataset_two(&StudyTwoParams::benchmark(n), 0, seed)?;
    let values = percentiles(&data.biomarker_history(), &TAU_GRID_PERCENTILES);
    Ok(TauGridReport {
        canonical: CANONICAL_TAU_GRID_TWO.to_vec(),
        percentiles: TAU_GRID_PERCENTILES.iter().copied().zip(values).collect(),
    })
}
