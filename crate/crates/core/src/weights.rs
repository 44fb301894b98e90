//! Stabilised inverse-probability-of-treatment weights and percentile
//! truncation.
//!
//! For subject `i` at visit `k`,
//!
//! ```text
//! sw_i(k) = Π_{j<=k} P̂(A_j = a_j | Ā_{j-1}) / P̂(A_j = a_j | Ā_{j-1}, L̄_j)
//! ```
//!
//! where both probabilities come from pooled logistic regressions. Visits at
//! which treatment is determined by the past contribute a factor of 1.

use std::fmt;
use std::str::FromStr;

use crate::data::{StudyOneData, StudyTwoData};
use crate::error::{Error, Result};
use crate::glm::{fit_weighted_logistic, Design, LogisticFit};
use crate::numeric::{logistic, percentiles};

/// Probabilities below this are flagged as extreme.
pub const EXTREME_PROBABILITY: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum TruncationStrategy {
    NoWT,
    P1_99,
    P2_5_97_5,
    P5_95,
    P10_90,
}

impl TruncationStrategy {
    pub const ALL: [TruncationStrategy; 5] = [
        TruncationStrategy::NoWT,
        TruncationStrategy::P1_99,
        TruncationStrategy::P2_5_97_5,
        TruncationStrategy::P5_95,
        TruncationStrategy::P10_90,
    ];

    /// Lower and upper percentile as fractions, or `None` for no truncation.
    pub fn percentiles(self) -> Option<(f64, f64)> {
        match self {
            TruncationStrategy::NoWT => None,
            TruncationStrategy::P1_99 => Some((0.01, 0.99)),
            TruncationStrategy::P2_5_97_5 => Some((0.025, 0.975)),
            TruncationStrategy::P5_95 => Some((0.05, 0.95)),
            TruncationStrategy::P10_90 => Some((0.10, 0.90)),
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            TruncationStrategy::NoWT => "NoWT",
            TruncationStrategy::P1_99 => "1-99",
            TruncationStrategy::P2_5_97_5 => "2.5-97.5",
            TruncationStrategy::P5_95 => "5-95",
            TruncationStrategy::P10_90 => "10-90",
        }
    }
}

impl fmt::Display for TruncationStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for TruncationStrategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let norm = s.trim().to_ascii_lowercase().replace('_', "-");
        Ok(match norm.as_str() {
            "nowt" | "none" => TruncationStrategy::NoWT,
            "1-99" | "p1-99" => TruncationStrategy::P1_99,
            "2.5-97.5" | "p2-5-97-5" | "p2.5-97.5" => TruncationStrategy::P2_5_97_5,
            "5-95" | "p5-95" => TruncationStrategy::P5_95,
            "10-90" | "p10-90" => TruncationStrategy::P10_90,
            _ => {
                return Err(Error::InvalidParameter(format!(
                    "unknown truncation strategy {s:?}"
                )))
            }
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WeightRow {
    pub id: usize,
    pub k: usize,
    /// Numerator probability of the observed treatment at this visit.
    pub numerator_prob: f64,
    /// Denominator probability of the observed treatment at this visit.
    pub denominator_prob: f64,
    pub sw: f64,
    pub sw_truncated: f64,
    /// A fitted probability of the observed treatment fell below
    /// [`EXTREME_PROBABILITY`].
    pub extreme: bool,
}

/// Weights aligned one-to-one (same order) with a dataset's records.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightTable {
    pub rows: Vec<WeightRow>,
    pub numerator_fit: LogisticFit,
    pub denominator_fit: LogisticFit,
    pub truncation: TruncationStrategy,
    /// Clamp bounds actually applied; `None` under [`TruncationStrategy::NoWT`].
    pub bounds: Option<(f64, f64)>,
}

impl WeightTable {
    pub fn truncated(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.sw_truncated).collect()
    }

    pub fn extreme_count(&self) -> usize {
        self.rows.iter().filter(|r| r.extreme).count()
    }
}

/// A visit at which treatment is modelled, with both design rows.
struct ModelledVisit {
    record: usize,
    a: u8,
    numerator_x: Vec<f64>,
    denominator_x: Vec<f64>,
}

/// Probability of the observed treatment computed on the logit scale, so a
/// probability that underflows reports exactly zero.
fn observed_prob_from_fit(fit: &LogisticFit, x: &[f64], a: u8) -> f64 {
    let eta = fit.linear_predictor(x);
    if a == 1 {
        logistic(eta)
    } else {
        logistic(-eta)
    }
}

/// Fits the model; when columns are aliased (e.g. `A_{k-1}` never varies)
/// they are dropped and given a zero coefficient, and the rest refitted.
fn fit_dropping_aliased(x: &Design, y: &[u8], w: &[f64]) -> Result<LogisticFit> {
    match fit_weighted_logistic(x, y, w) {
        Err(Error::SingularDesign { columns }) if columns.len() < x.cols() => {
            let keep: Vec<usize> = (0..x.cols()).filter(|c| !columns.contains(c)).collect();
            let mut reduced = Design::with_capacity(keep.len(), x.rows());
            let mut buf = vec![0.0; keep.len()];
            for i in 0..x.rows() {
                let row = x.row(i);
                for (b, &c) in buf.iter_mut().zip(&keep) {
                    *b = row[c];
                }
                reduced.push_row(&buf);
            }
            let fit = fit_weighted_logistic(&reduced, y, w)?;
            let mut coefficients = vec![0.0; x.cols()];
            for (&c, &b) in keep.iter().zip(&fit.coefficients) {
                coefficients[c] = b;
            }
            Ok(LogisticFit { coefficients, ..fit })
        }
        other => other,
    }
}

fn build_table(
    n_records: usize,
    ids: impl Fn(usize) -> (usize, usize),
    modelled: Vec<ModelledVisit>,
    numerator_cols: usize,
    denominator_cols: usize,
) -> Result<WeightTable> {
    if modelled.is_empty() {
        return Err(Error::EmptyData("no visits with a modelled treatment decision".into()));
    }
    let mut xn = Design::with_capacity(numerator_cols, modelled.len());
    let mut xd = Design::with_capacity(denominator_cols, modelled.len());
    let mut a = Vec::with_capacity(modelled.len());
    for m in &modelled {
        xn.push_row(&m.numerator_x);
        xd.push_row(&m.denominator_x);
        a.push(m.a);
    }
    let unit = vec![1.0; modelled.len()];
    let numerator_fit = fit_dropping_aliased(&xn, &a, &unit)?;
    let denominator_fit = fit_dropping_aliased(&xd, &a, &unit)?;

    let mut num = vec![1.0; n_records];
    let mut den = vec![1.0; n_records];
    for m in &modelled {
        num[m.record] = observed_prob_from_fit(&numerator_fit, &m.numerator_x, m.a);
        den[m.record] = observed_prob_from_fit(&denominator_fit, &m.denominator_x, m.a);
        if den[m.record] == 0.0 {
            let (id, visit) = ids(m.record);
            return Err(Error::ZeroProbability { id, visit });
        }
    }

    let mut rows = Vec::with_capacity(n_records);
    let mut running = 1.0;
    let mut prev_id = None;
    for r in 0..n_records {
        let (id, k) = ids(r);
        if prev_id != Some(id) {
            running = 1.0;
            prev_id = Some(id);
        }
        running *= num[r] / den[r];
        rows.push(WeightRow {
            id,
            k,
            numerator_prob: num[r],
            denominator_prob: den[r],
            sw: running,
            sw_truncated: running,
            extreme: num[r] < EXTREME_PROBABILITY || den[r] < EXTREME_PROBABILITY,
        });
    }
    Ok(WeightTable {
        rows,
        numerator_fit,
        denominator_fit,
        truncation: TruncationStrategy::NoWT,
        bounds: None,
    })
}

/// Study I weights. Treatment initiation is modelled on check-up visits of
/// subjects still untreated entering the visit: numerator `logit⁻¹(θ0 + θ1 k)`,
/// denominator `logit⁻¹(θ0 + θ1 k + θ2 (L - 500))`.
pub fn estimate_weights_one(data: &StudyOneData) -> Result<WeightTable> {
    let spacing = data.checkup_spacing;
    if spacing == 0 {
        return Err(Error::Shape("check-up spacing must be positive".into()));
    }
    let recs = &data.records;
    let mut modelled = Vec::new();
    for (i, r) in recs.iter().enumerate() {
        let first_of_subject = i == 0 || recs[i - 1].id != r.id;
        let prev_a = if first_of_subject { 0 } else { recs[i - 1].a };
        if !first_of_subject && (recs[i - 1].k + 1 != r.k || r.a < prev_a) {
            return Err(Error::Shape(format!(
                "subject {} breaks visit order or treatment continuation at visit {}",
                r.id, r.k
            )));
        }
        if r.k % spacing != 0 {
            if r.a != prev_a && !first_of_subject {
                return Err(Error::Shape(format!(
                    "subject {} changes treatment between check-ups at visit {}",
                    r.id, r.k
                )));
            }
            continue;
        }
        if prev_a == 1 {
            continue;
        }
        let k = r.k as f64;
        modelled.push(ModelledVisit {
            record: i,
            a: r.a,
            numerator_x: vec![1.0, k],
            denominator_x: vec![1.0, k, r.l - 500.0],
        });
    }
    build_table(recs.len(), |i| (recs[i].id, recs[i].k), modelled, 2, 3)
}

/// Study II weights over every at-risk visit: numerator
/// `logit⁻¹(θ0 + θ1 A_{k-1})`, denominator `logit⁻¹(θ0 + θ1 A_{k-1} + θ2 L_k)`,
/// with `A_{-1} = 0`.
pub fn estimate_weights_two(data: &StudyTwoData) -> Result<WeightTable> {
    let recs = &data.records;
    let mut modelled = Vec::with_capacity(recs.len());
    for (i, r) in recs.iter().enumerate() {
        let first_of_subject = i == 0 || recs[i - 1].id != r.id;
        let prev_a = if first_of_subject { 0.0 } else { f64::from(recs[i - 1].a) };
        modelled.push(ModelledVisit {
            record: i,
            a: r.a,
            numerator_x: vec![1.0, prev_a],
            denominator_x: vec![1.0, prev_a, r.l],
        });
    }
    build_table(recs.len(), |i| (recs[i].id, recs[i].k), modelled, 2, 3)
}

/// Clamp bounds for `strategy` computed from the pooled values.
pub fn truncation_bounds(values: &[f64], strategy: TruncationStrategy) -> Option<(f64, f64)> {
    let (lo, hi) = strategy.percentiles()?;
    if values.is_empty() {
        return None;
    }
    let q = percentiles(values, &[lo, hi]);
    Some((q[0], q[1]))
}

/// Clamps every untruncated weight into the strategy's percentile bounds,
/// computed over all person-visits of the table. Always starts from the raw
/// `sw`, so re-truncating is idempotent.
pub fn truncate_weights(table: &WeightTable, strategy: TruncationStrategy) -> WeightTable {
    let raw: Vec<f64> = table.rows.iter().map(|r| r.sw).collect();
    let bounds = truncation_bounds(&raw, strategy);
    let mut out = table.clone();
    out.truncation = strategy;
    out.bounds = bounds;
    for row in &mut out.rows {
        row.sw_truncated = match bounds {
            Some((lo, hi)) => row.sw.clamp(lo, hi),
            None => row.sw,
        };
    }
    out
}
