//! Reproducible random streams and the handful of distributions the
//! generators need.
//!
//! Every stream is addressed by a [`StreamKey`]: a master seed plus an
//! ordered path such as `(replication, 3) / (subject, 17)`. The key is hashed
//! with SHA-256 into the 256-bit key of a ChaCha8 block cipher, so a stream is
//! a pure function of its key. Two workers that derive the same key see the
//! same draws no matter which runs first, and sibling keys give unrelated
//! sequences.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Open01, StandardNormal};
use sha2::{Digest, Sha256};
use statrs::function::gamma::{gamma_lr, ln_gamma};

use crate::error::{Error, Result};

/// What a path component indexes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum StreamLabel {
    Study,
    Scenario,
    Replication,
    Subject,
    Regime,
    Visit,
    DrawKind,
}

impl StreamLabel {
    fn tag(self) -> u8 {
        match self {
            StreamLabel::Study => 1,
            StreamLabel::Scenario => 2,
            StreamLabel::Replication => 3,
            StreamLabel::Subject => 4,
            StreamLabel::Regime => 5,
            StreamLabel::Visit => 6,
            StreamLabel::DrawKind => 7,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct StreamKey {
    pub master_seed: u64,
    pub path: Vec<(StreamLabel, u64)>,
}

impl StreamKey {
    pub fn new(master_seed: u64) -> Self {
        Self {
            master_seed,
            path: Vec::new(),
        }
    }

    /// Returns a new key with one more path component.
    pub fn child(&self, label: StreamLabel, index: u64) -> Self {
        let mut path = Vec::with_capacity(self.path.len() + 1);
        path.extend_from_slice(&self.path);
        path.push((label, index));
        Self {
            master_seed: self.master_seed,
            path,
        }
    }

    fn digest(&self) -> [u8; 32] {
        let mut hasher = Sha256::new();
        hasher.update(b"posim-stream-v1");
        hasher.update(self.master_seed.to_le_bytes());
        for (label, index) in &self.path {
            hasher.update([label.tag()]);
            hasher.update(index.to_le_bytes());
        }
        let mut out = [0u8; 32];
        out.copy_from_slice(&hasher.finalize());
        out
    }

    /// Collapses the key into a 64-bit seed, for use as the master seed of a
    /// nested keyspace.
    pub fn derive_seed(&self) -> u64 {
        let d = self.digest();
        u64::from_le_bytes(d[..8].try_into().expect("8 bytes"))
    }
}

/// A random stream positioned at some draw.
#[derive(Debug, Clone)]
pub struct RngStream {
    rng: ChaCha8Rng,
}

/// Returns the stream for `key`, positioned at draw 0.
pub fn derive_stream(key: &StreamKey) -> RngStream {
    RngStream {
        rng: ChaCha8Rng::from_seed(key.digest()),
    }
}

impl RngStream {
    /// Uniform on `[0, 1)`.
    pub fn uniform(&mut self) -> f64 {
        self.rng.random::<f64>()
    }

    /// Uniform on the open interval `(0, 1)`; used wherever the draw feeds a
    /// logarithm or an inverse CDF.
    pub fn open_uniform(&mut self) -> f64 {
        Open01.sample(&mut self.rng)
    }

    /// One standard normal draw.
    pub fn standard_normal(&mut self) -> f64 {
        StandardNormal.sample(&mut self.rng)
    }

    /// Normal with the given standard deviation. `sd == 0` still consumes one
    /// draw so the stream position does not depend on parameter values.
    pub fn normal(&mut self, mean: f64, sd: f64) -> Result<f64> {
        if !(sd >= 0.0) || !sd.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "normal standard deviation must be finite and >= 0, got {sd}"
            )));
        }
        let z = self.standard_normal();
        if sd == 0.0 {
            return Ok(mean);
        }
        Ok(mean + sd * z)
    }

    /// Bernoulli(p) through one uniform draw: success iff `u < p`.
    pub fn bernoulli(&mut self, p: f64) -> Result<bool> {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::InvalidParameter(format!(
                "bernoulli probability must lie in [0, 1], got {p}"
            )));
        }
        Ok(self.uniform() < p)
    }
}

/// CDF of the gamma distribution with the given shape and scale.
pub fn gamma_cdf(x: f64, shape: f64, scale: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    gamma_lr(shape, x / scale)
}

fn gamma_pdf(x: f64, shape: f64, scale: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    let y = x / scale;
    ((shape - 1.0) * y.ln() - y - ln_gamma(shape)).exp() / scale
}

/// Quantile function of the gamma distribution.
///
/// Brackets the root, bisects until the bracket is narrow, then polishes with
/// safeguarded Newton steps. The result satisfies `|cdf(x) - u| <= 1e-12`.
pub fn gamma_inverse_cdf(u: f64, shape: f64, scale: f64) -> Result<f64> {
    if !(u > 0.0 && u < 1.0) {
        return Err(Error::Domain(format!(
            "gamma quantile needs u strictly inside (0, 1), got {u}"
        )));
    }
    if !(shape > 0.0 && shape.is_finite()) || !(scale > 0.0 && scale.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "gamma shape and scale must be positive, got shape={shape} scale={scale}"
        )));
    }
    const CDF_TOL: f64 = 1e-12;

    let mut lo = 0.0;
    let mut hi = shape * scale;
    while gamma_cdf(hi, shape, scale) < u {
        lo = hi;
        hi *= 2.0;
    }

    for _ in 0..200 {
        if hi - lo <= 1e-6 * hi.max(1e-300) {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if gamma_cdf(mid, shape, scale) < u {
            lo = mid;
        } else {
            hi = mid;
        }
    }

    let mut x = 0.5 * (lo + hi);
    for _ in 0..50 {
        let err = gamma_cdf(x, shape, scale) - u;
        if err.abs() <= CDF_TOL {
            break;
        }
        if err < 0.0 {
            lo = x;
        } else {
            hi = x;
        }
        let density = gamma_pdf(x, shape, scale);
        let newton = if density > 0.0 { x - err / density } else { f64::NAN };
        x = if newton > lo && newton < hi {
            newton
        } else {
            0.5 * (lo + hi)
        };
    }
    Ok(x)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn key(seed: u64, rep: u64) -> StreamKey {
        StreamKey::new(seed).child(StreamLabel::Replication, rep)
    }

    // Closed-form CDF of the shape-3 gamma distribution.
    fn shape3_cdf(x: f64, scale: f64) -> f64 {
        let y = x / scale;
        1.0 - (-y).exp() * (1.0 + y + y * y / 2.0)
    }

    fn bisect_shape3(u: f64, scale: f64) -> f64 {
        let (mut lo, mut hi) = (0.0, 100.0 * scale);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if shape3_cdf(mid, scale) < u {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }

    #[test]
    fn same_key_same_draws() {
        let mut a = derive_stream(&key(1, 0));
        let mut b = derive_stream(&key(1, 0));
        for _ in 0..100 {
            assert_eq!(a.uniform().to_bits(), b.uniform().to_bits());
        }
    }

    #[test]
    fn sibling_keys_differ() {
        let mut a = derive_stream(&key(1, 0));
        let mut b = derive_stream(&key(1, 1));
        assert_ne!(a.uniform(), b.uniform());
    }

    #[test]
    fn uniform_mean_is_one_half() {
        let mut s = derive_stream(&key(7, 0));
        let n = 1_000_000;
        let mean = (0..n).map(|_| s.uniform()).sum::<f64>() / n as f64;
        assert!((mean - 0.5).abs() < 0.002, "mean {mean}");
    }

    #[test]
    fn sibling_streams_uncorrelated() {
        let mut a = derive_stream(&key(11, 0));
        let mut b = derive_stream(&key(11, 1));
        let n = 100_000;
        let (xs, ys): (Vec<f64>, Vec<f64>) = (0..n).map(|_| (a.uniform(), b.uniform())).unzip();
        let mx = xs.iter().sum::<f64>() / n as f64;
        let my = ys.iter().sum::<f64>() / n as f64;
        let mut sxy = 0.0;
        let mut sxx = 0.0;
        let mut syy = 0.0;
        for (x, y) in xs.iter().zip(&ys) {
            sxy += (x - mx) * (y - my);
            sxx += (x - mx) * (x - mx);
            syy += (y - my) * (y - my);
        }
        let r = sxy / (sxx * syy).sqrt();
        assert!(r.abs() < 0.01, "r = {r}");
    }

    #[test]
    fn degenerate_distributions() {
        let mut s = derive_stream(&key(3, 0));
        for _ in 0..1000 {
            assert!(!s.bernoulli(0.0).unwrap());
            assert!(s.bernoulli(1.0).unwrap());
        }
        assert_eq!(s.normal(5.0, 0.0).unwrap(), 5.0);
    }

    #[test]
    fn parameter_errors() {
        let mut s = derive_stream(&key(3, 0));
        assert!(s.bernoulli(-0.1).is_err());
        assert!(s.bernoulli(1.1).is_err());
        assert!(s.normal(0.0, -1.0).is_err());
        assert!(gamma_inverse_cdf(0.0, 3.0, 154.0).is_err());
        assert!(gamma_inverse_cdf(1.0, 3.0, 154.0).is_err());
        assert!(gamma_inverse_cdf(0.5, 0.0, 154.0).is_err());
    }

    #[test]
    fn gamma_median_matches_bisection_oracle() {
        let oracle = bisect_shape3(0.5, 154.0);
        let x = gamma_inverse_cdf(0.5, 3.0, 154.0).unwrap();
        assert!((x - oracle).abs() < 1e-6, "{x} vs {oracle}");
        assert!((x - 411.8).abs() < 0.1);
    }

    #[test]
    fn gamma_round_trip_against_closed_form() {
        for &u in &[0.01, 0.25, 0.9, 0.999] {
            let x = gamma_inverse_cdf(u, 3.0, 154.0).unwrap();
            assert!((shape3_cdf(x, 154.0) - u).abs() < 1e-10, "u = {u}");
        }
    }

    #[test]
    fn gamma_quantile_extreme_tails() {
        for &u in &[1e-12, 1e-6, 1.0 - 1e-9] {
            let x = gamma_inverse_cdf(u, 3.0, 154.0).unwrap();
            assert!((gamma_cdf(x, 3.0, 154.0) - u).abs() <= 1e-12);
        }
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn quantile_increasing_in_u(u1 in 1e-6f64..0.999, du in 1e-4f64..0.5) {
                let u2 = (u1 + du).min(0.999_999);
                prop_assume!(u2 > u1);
                let x1 = gamma_inverse_cdf(u1, 3.0, 154.0).unwrap();
                let x2 = gamma_inverse_cdf(u2, 3.0, 154.0).unwrap();
                prop_assert!(x1 < x2);
            }

            #[test]
            fn quantile_increasing_in_scale(u in 1e-6f64..0.999_999, s1 in 1.0f64..500.0, ds in 0.5f64..100.0) {
                let x1 = gamma_inverse_cdf(u, 3.0, s1).unwrap();
                let x2 = gamma_inverse_cdf(u, 3.0, s1 + ds).unwrap();
                prop_assert!(x1 < x2);
            }

            #[test]
            fn quantile_hits_cdf_tolerance(u in 1e-9f64..(1.0 - 1e-9), shape in 0.5f64..10.0) {
                let x = gamma_inverse_cdf(u, shape, 2.0).unwrap();
                prop_assert!((gamma_cdf(x, shape, 2.0) - u).abs() <= 1e-12);
            }
        }
    }
}
