//! Study II generator: continuous-time event data from a conditional additive
//! hazard that is constant within each visit interval, with optional forced
//! exposure of high-biomarker subjects and optional intervened (fixed-regime)
//! generation.
//!
//! `N(m, v)` below always means mean `m` and *variance* `v`.
//!
//! Per-subject draw order:
//!
//! 1. propensity `P_i` (uniform)
//! 2. frailty `U_i` (standard normal, scaled)
//! 3. for each visit `k = 0..=K` while at risk: biomarker noise (standard
//!    normal), treatment uniform (skipped entirely under an intervention),
//!    event uniform (open).

use crate::data::{StudyTwoData, VisitRecordTwo};
use crate::error::{Error, Result};
use crate::numeric::logistic;
use crate::posviol::{HealthRegion, PositivityPolicy};
use crate::stochastic::{derive_stream, StreamKey, StreamLabel};

pub const DEFAULT_ALPHA: [f64; 4] = [0.7, -0.2, 0.05, 0.05];
pub const DEFAULT_FRAILTY_VARIANCE: f64 = 0.1;

#[derive(Debug, Clone, PartialEq)]
pub struct StudyTwoParams {
    pub n: usize,
    /// Last visit index `K`; administrative censoring at `K + 1`.
    pub visits: usize,
    /// `(α0, αA, αL, αU)` of the conditional additive hazard.
    pub alpha: [f64; 4],
    /// Variance of the frailty `U_i`.
    pub frailty_variance: f64,
    /// `None` runs the original (benchmark) mechanism.
    pub policy: Option<PositivityPolicy>,
    /// Fixed treatment regime `(a_0, ..., a_K)`. Overrides the policy and all
    /// treatment draws.
    pub intervention: Option<Vec<u8>>,
}

impl StudyTwoParams {
    pub fn benchmark(n: usize) -> Self {
        Self {
            n,
            visits: 4,
            alpha: DEFAULT_ALPHA,
            frailty_variance: DEFAULT_FRAILTY_VARIANCE,
            policy: None,
            intervention: None,
        }
    }

    pub fn with_violation(n: usize, pi: f64, tau: f64) -> Result<Self> {
        Ok(Self {
            policy: Some(PositivityPolicy::new(pi, tau, HealthRegion::AboveTau)?),
            ..Self::benchmark(n)
        })
    }

    pub fn intervened(n: usize, regime: Vec<u8>) -> Self {
        Self {
            intervention: Some(regime),
            ..Self::benchmark(n)
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::InvalidParameter("sample size must be positive".into()));
        }
        if self.alpha.iter().any(|a| !a.is_finite()) {
            return Err(Error::InvalidParameter("alpha must be finite".into()));
        }
        if !(self.frailty_variance >= 0.0 && self.frailty_variance.is_finite()) {
            return Err(Error::InvalidParameter("frailty variance must be >= 0".into()));
        }
        if let Some(p) = &self.policy {
            if p.region() != HealthRegion::AboveTau {
                return Err(Error::InvalidParameter(
                    "study II uses the above-tau poor-health region".into(),
                ));
            }
        }
        if let Some(regime) = &self.intervention {
            if regime.len() != self.visits + 1 || regime.iter().any(|&a| a > 1) {
                return Err(Error::InvalidParameter(format!(
                    "intervention regime must hold {} binary entries",
                    self.visits + 1
                )));
            }
        }
        Ok(())
    }
}

/// `α0 + αA a + αL l + αU u`; may be negative.
pub fn conditional_hazard_two(alpha: &[f64; 4], a_k: u8, l_k: f64, u: f64) -> f64 {
    alpha[0] + alpha[1] * f64::from(a_k) + alpha[2] * l_k + alpha[3] * u
}

/// Probability of treatment at visit `k` given the biomarker and previous
/// treatment (`a_prev = 0` at baseline).
pub fn treatment_prob_two(k: usize, l: f64, a_prev: u8) -> f64 {
    debug_assert!(k > 0 || a_prev == 0);
    logistic(-2.0 + 0.5 * l + f64::from(a_prev))
}

/// Time from the start of an interval to the event under a constant hazard,
/// or `None` when the subject survives the unit interval. A non-positive
/// hazard never produces an event.
pub fn interval_event_offset(upsilon: f64, hazard: f64) -> Option<f64> {
    if hazard <= 0.0 {
        return None;
    }
    let delta = -upsilon.ln() / hazard;
    (delta < 1.0).then_some(delta)
}

pub(crate) fn subject_key(master_seed: u64, rep: u64, id: usize) -> StreamKey {
    StreamKey::new(master_seed)
        .child(StreamLabel::Study, 2)
        .child(StreamLabel::Replication, rep)
        .child(StreamLabel::Subject, id as u64)
}

pub fn simulate_dataset_two(params: &StudyTwoParams, rep: u64, master_seed: u64) -> Result<StudyTwoData> {
    params.validate()?;
    let mut records = Vec::with_capacity(params.n * 3);
    let mut nonpositive = 0;
    for id in 0..params.n {
        let outcome = simulate_subject(params, &subject_key(master_seed, rep, id))?;
        nonpositive += outcome.nonpositive_hazards;
        records.extend(outcome.visits.iter().enumerate().map(|(k, v)| VisitRecordTwo {
            id,
            k,
            a: v.a,
            l: v.l,
            u: outcome.frailty,
            y_next: u8::from(outcome.event && k + 1 == outcome.visits.len()),
            t: (k + 1 == outcome.visits.len()).then_some(outcome.exit_time),
            forced: v.forced,
        }));
    }
    Ok(StudyTwoData {
        n: params.n,
        visits: params.visits,
        records,
        nonpositive_hazards: nonpositive,
    })
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct SubjectVisit {
    pub a: u8,
    pub l: f64,
    pub forced: bool,
}

#[derive(Debug, Clone)]
pub(crate) struct SubjectOutcome {
    pub frailty: f64,
    pub visits: Vec<SubjectVisit>,
    pub exit_time: f64,
    pub event: bool,
    pub nonpositive_hazards: usize,
}

pub(crate) fn simulate_subject(params: &StudyTwoParams, key: &StreamKey) -> Result<SubjectOutcome> {
    let mut s = derive_stream(key);
    let p_i = s.uniform();
    let frailty = s.normal(0.0, params.frailty_variance.sqrt())?;

    let mut visits = Vec::with_capacity(params.visits + 1);
    let mut nonpositive = 0;
    let mut a_prev = 0u8;
    let mut l_prev = 0.0;
    for k in 0..=params.visits {
        let mean = if k == 0 {
            frailty
        } else {
            0.8 * l_prev - f64::from(a_prev) + 0.1 * k as f64 + frailty
        };
        let l = s.normal(mean, 1.0)?;

        let (a, forced) = match &params.intervention {
            Some(regime) => (regime[k], false),
            None => {
                let u_treat = s.uniform();
                let forced = params.policy.is_some_and(|p| p.is_forced(p_i, l));
                let a = forced || u_treat < treatment_prob_two(k, l, a_prev);
                (u8::from(a), forced)
            }
        };
        visits.push(SubjectVisit { a, l, forced });

        let hazard = conditional_hazard_two(&params.alpha, a, l, frailty);
        if hazard <= 0.0 {
            nonpositive += 1;
        }
        let upsilon = s.open_uniform();
        if let Some(delta) = interval_event_offset(upsilon, hazard) {
            return Ok(SubjectOutcome {
                frailty,
                visits,
                exit_time: k as f64 + delta,
                event: true,
                nonpositive_hazards: nonpositive,
            });
        }
        a_prev = a;
        l_prev = l;
    }
    Ok(SubjectOutcome {
        frailty,
        visits,
        exit_time: (params.visits + 1) as f64,
        event: false,
        nonpositive_hazards: nonpositive,
    })
}
