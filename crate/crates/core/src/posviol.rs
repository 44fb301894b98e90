//! The positivity-violation rule shared by both generators.
//!
//! A subject whose latent propensity `p_i` is at least the exposure cut-off
//! `pi`, and whose confounder falls in the poor-health region, is exposed
//! deterministically at that visit.

use crate::error::{Error, Result};

/// Which side of `tau` counts as poor health.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HealthRegion {
    /// `[0, tau)`: low CD4 counts (study I).
    BelowTau,
    /// `(tau, inf)`: high biomarker values (study II).
    AboveTau,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PositivityPolicy {
    pi: f64,
    tau: f64,
    region: HealthRegion,
}

impl PositivityPolicy {
    pub fn new(pi: f64, tau: f64, region: HealthRegion) -> Result<Self> {
        if !(0.0..=1.0).contains(&pi) {
            return Err(Error::InvalidParameter(format!(
                "exposure cut-off pi must lie in [0, 1], got {pi}"
            )));
        }
        if tau.is_nan() {
            return Err(Error::InvalidParameter("tau is NaN".into()));
        }
        if region == HealthRegion::BelowTau && tau < 0.0 {
            return Err(Error::InvalidParameter(format!(
                "tau must be >= 0 for the below-tau region, got {tau}"
            )));
        }
        Ok(Self { pi, tau, region })
    }

    pub fn pi(&self) -> f64 {
        self.pi
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn region(&self) -> HealthRegion {
        self.region
    }

    /// Whether `l` lies in the poor-health region. Both boundaries are strict.
    pub fn in_region(&self, l: f64) -> bool {
        match self.region {
            HealthRegion::BelowTau => l < self.tau,
            HealthRegion::AboveTau => l > self.tau,
        }
    }

    /// `p_i >= pi` and `l` in the poor-health region.
    pub fn is_forced(&self, p_i: f64, l: f64) -> bool {
        p_i >= self.pi && self.in_region(l)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn compliant_everyone_at_pi_one() {
        let p = PositivityPolicy::new(1.0, 500.0, HealthRegion::BelowTau).unwrap();
        assert!(!p.is_forced(0.999_999, 10.0));
        assert!(!p.is_forced(0.0, 10.0));
    }

    #[test]
    fn direct_rule_application() {
        let p = PositivityPolicy::new(0.5, 300.0, HealthRegion::BelowTau).unwrap();
        assert!(p.is_forced(0.7, 200.0));
        let p = PositivityPolicy::new(0.5, 2.0, HealthRegion::AboveTau).unwrap();
        assert!(!p.is_forced(0.7, 1.5));
        assert!(p.is_forced(0.7, 2.5));
    }

    #[test]
    fn boundaries() {
        let p = PositivityPolicy::new(0.5, 300.0, HealthRegion::BelowTau).unwrap();
        // p_i == pi is forced; l == tau is outside the region
        assert!(p.is_forced(0.5, 299.0));
        assert!(!p.is_forced(0.5, 300.0));
        let p = PositivityPolicy::new(0.5, 2.0, HealthRegion::AboveTau).unwrap();
        assert!(!p.is_forced(0.9, 2.0));
    }

    #[test]
    fn strict_violation_at_pi_zero() {
        let p = PositivityPolicy::new(0.0, 500.0, HealthRegion::BelowTau).unwrap();
        assert!(p.is_forced(0.0, 499.0));
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(PositivityPolicy::new(1.5, 1.0, HealthRegion::AboveTau).is_err());
        assert!(PositivityPolicy::new(-0.1, 1.0, HealthRegion::AboveTau).is_err());
        assert!(PositivityPolicy::new(0.5, -1.0, HealthRegion::BelowTau).is_err());
        assert!(PositivityPolicy::new(0.5, -1.0, HealthRegion::AboveTau).is_ok());
    }

    proptest! {
        #[test]
        fn monotone_in_pi(p_i in 0.0f64..1.0, l in 0.0f64..1000.0, pi1 in 0.0f64..=1.0, pi2 in 0.0f64..=1.0) {
            let (lo, hi) = if pi1 <= pi2 { (pi1, pi2) } else { (pi2, pi1) };
            let strict = PositivityPolicy::new(hi, 400.0, HealthRegion::BelowTau).unwrap();
            let loose = PositivityPolicy::new(lo, 400.0, HealthRegion::BelowTau).unwrap();
            if strict.is_forced(p_i, l) {
                prop_assert!(loose.is_forced(p_i, l));
            }
        }

        #[test]
        fn monotone_in_region_width(p_i in 0.0f64..1.0, l in -5.0f64..10.0, t1 in -5.0f64..10.0, t2 in -5.0f64..10.0) {
            // AboveTau widens as tau decreases; BelowTau widens as tau increases.
            let (narrow, wide) = if t1 >= t2 { (t1, t2) } else { (t2, t1) };
            let a = PositivityPolicy::new(0.3, narrow, HealthRegion::AboveTau).unwrap();
            let b = PositivityPolicy::new(0.3, wide, HealthRegion::AboveTau).unwrap();
            if a.is_forced(p_i, l) { prop_assert!(b.is_forced(p_i, l)); }

            let (narrow, wide) = (narrow.abs().min(wide.abs()), narrow.abs().max(wide.abs()));
            let a = PositivityPolicy::new(0.3, narrow, HealthRegion::BelowTau).unwrap();
            let b = PositivityPolicy::new(0.3, wide, HealthRegion::BelowTau).unwrap();
            let l = l.abs();
            if a.is_forced(p_i, l) { prop_assert!(b.is_forced(p_i, l)); }
        }

        #[test]
        fn pi_zero_forces_whole_region(p_i in 0.0f64..1.0, l in 0.0f64..499.0) {
            let p = PositivityPolicy::new(0.0, 500.0, HealthRegion::BelowTau).unwrap();
            prop_assert!(p.is_forced(p_i, l));
        }
    }
}
