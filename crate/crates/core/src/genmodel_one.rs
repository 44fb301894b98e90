//! Study I generator: discrete-time data whose marginal hazard follows a
//! logistic MSM in time before and after treatment initiation, with optional
//! forced exposure of low-CD4 subjects.
//!
//! Per-subject draw order (every draw is consumed whether or not it is used,
//! so a policy that never fires reproduces the benchmark bit for bit):
//!
//! 1. propensity `P_i` (uniform)
//! 2. baseline latent health `U_0` (open uniform)
//! 3. baseline CD4 noise (standard normal)
//! 4. baseline treatment uniform
//! 5. then for each visit `k >= 1`: latent increment (standard normal),
//!    CD4 drift noise (standard normal), treatment uniform.

use crate::data::{StudyOneData, VisitRecordOne};
use crate::error::{Error, Result};
use crate::numeric::logistic;
use crate::posviol::{HealthRegion, PositivityPolicy};
use crate::stochastic::{derive_stream, gamma_inverse_cdf, StreamKey, StreamLabel};

pub const DEFAULT_GAMMA: [f64; 4] = [-3.0, 0.05, -1.5, 0.1];

const BASELINE_SHAPE: f64 = 3.0;
const BASELINE_SCALE: f64 = 154.0;
const BASELINE_NOISE_VAR: f64 = 20.0;
const LATENT_STEP_VAR: f64 = 0.05;
const TREATMENT_CD4_GAIN: f64 = 150.0;
const DRIFT_VAR: f64 = 50.0;

#[derive(Debug, Clone, PartialEq)]
pub struct StudyOneParams {
    pub n: usize,
    /// Last visit index `K`; visits run `0..=K`.
    pub visits: usize,
    /// Check-up spacing `κ`: CD4 and treatment update when `k % κ == 0`.
    pub checkup_spacing: usize,
    /// `(γ0, γA1, γA2, γA3)` of the conditional hazard.
    pub gamma: [f64; 4],
    /// `None` runs the original (benchmark) mechanism.
    pub policy: Option<PositivityPolicy>,
}

impl StudyOneParams {
    pub fn benchmark(n: usize) -> Self {
        Self {
            n,
            visits: 40,
            checkup_spacing: 5,
            gamma: DEFAULT_GAMMA,
            policy: None,
        }
    }

    pub fn with_violation(n: usize, pi: f64, tau: f64) -> Result<Self> {
        Ok(Self {
            policy: Some(PositivityPolicy::new(pi, tau, HealthRegion::BelowTau)?),
            ..Self::benchmark(n)
        })
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::InvalidParameter("sample size must be positive".into()));
        }
        if self.checkup_spacing == 0 {
            return Err(Error::InvalidParameter("check-up spacing must be positive".into()));
        }
        if self.gamma.iter().any(|g| !g.is_finite()) {
            return Err(Error::InvalidParameter("gamma must be finite".into()));
        }
        if let Some(p) = &self.policy {
            if p.region() != HealthRegion::BelowTau {
                return Err(Error::InvalidParameter(
                    "study I uses the below-tau poor-health region".into(),
                ));
            }
        }
        Ok(())
    }
}

/// Probability of failure in `(k, k + 1]` given survival to `k`.
///
/// Panics if `a_k == 1` without an initiation visit, or if the initiation
/// visit lies after `k`.
pub fn conditional_hazard_one(gamma: &[f64; 4], k: usize, a_k: u8, k_star: Option<usize>) -> f64 {
    let k = k as f64;
    let eta = if a_k == 1 {
        let ks = k_star.expect("treated visit without an initiation time") as f64;
        assert!(ks <= k, "initiation after the current visit");
        gamma[0] + gamma[1] * ks + gamma[2] + gamma[3] * (k - ks)
    } else {
        gamma[0] + gamma[1] * k
    };
    logistic(eta)
}

/// Probability of starting treatment at a check-up with CD4 count `l`.
pub fn treatment_prob_one(k: usize, l: f64) -> f64 {
    logistic(-0.405 + 0.0205 * k as f64 - 0.00405 * (l - 500.0))
}

pub(crate) fn subject_key(master_seed: u64, rep: u64, id: usize) -> StreamKey {
    StreamKey::new(master_seed)
        .child(StreamLabel::Study, 1)
        .child(StreamLabel::Replication, rep)
        .child(StreamLabel::Subject, id as u64)
}

pub fn simulate_dataset_one(params: &StudyOneParams, rep: u64, master_seed: u64) -> Result<StudyOneData> {
    params.validate()?;
    let mut records = Vec::with_capacity(params.n * 8);
    for id in 0..params.n {
        simulate_subject(params, id, &subject_key(master_seed, rep, id), &mut records)?;
    }
    Ok(StudyOneData {
        n: params.n,
        visits: params.visits,
        checkup_spacing: params.checkup_spacing,
        records,
    })
}

fn simulate_subject(
    params: &StudyOneParams,
    id: usize,
    key: &StreamKey,
    out: &mut Vec<VisitRecordOne>,
) -> Result<()> {
    let mut s = derive_stream(key);
    let forced_by = |p_i: f64, l: f64| params.policy.is_some_and(|p| p.is_forced(p_i, l));

    let p_i = s.uniform();
    let u0 = s.open_uniform();
    let noise = s.normal(0.0, BASELINE_NOISE_VAR.sqrt())?;
    // CD4 counts are non-negative; the baseline noise can only push the
    // extreme lower tail below zero.
    let mut l = (gamma_inverse_cdf(u0, BASELINE_SHAPE, BASELINE_SCALE)? + noise).max(0.0);
    let u_treat = s.uniform();

    let forced = forced_by(p_i, l);
    let mut a: u8 = u8::from(forced || u_treat < treatment_prob_one(0, l));
    let mut k_star = (a == 1).then_some(0);

    let hazard = conditional_hazard_one(&params.gamma, 0, a, k_star);
    let mut survival = 1.0 - hazard;
    let mut failed = hazard >= u0;
    out.push(VisitRecordOne {
        id,
        k: 0,
        a,
        l,
        k_star,
        y_next: u8::from(failed),
        forced,
    });

    let mut latent = u0;
    let mut k = 1;
    while !failed && k <= params.visits {
        latent = (latent + s.normal(0.0, LATENT_STEP_VAR.sqrt())?).clamp(0.0, 1.0);
        let drift_z = s.standard_normal();
        let u_treat = s.uniform();

        let mut forced = false;
        if k % params.checkup_spacing == 0 {
            let drift = 100.0 * (latent - 2.0) + DRIFT_VAR.sqrt() * drift_z;
            l = (l + TREATMENT_CD4_GAIN * f64::from(a) + drift).max(0.0);
            if a == 0 {
                forced = forced_by(p_i, l);
                if forced || u_treat < treatment_prob_one(k, l) {
                    a = 1;
                    k_star = Some(k);
                }
            }
        }

        let hazard = conditional_hazard_one(&params.gamma, k, a, k_star);
        survival *= 1.0 - hazard;
        failed = survival <= 1.0 - u0;
        out.push(VisitRecordOne {
            id,
            k,
            a,
            l,
            k_star,
            y_next: u8::from(failed),
            forced,
        });
        k += 1;
    }
    Ok(())
}
