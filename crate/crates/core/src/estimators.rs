//! IPTW fits of the two marginal structural models and their marginal
//! survival curves.
//!
//! * Logit-MSM: pooled weighted logistic regression of `Y_{k+1}` on an
//!   intercept plus a g-form summary of the treatment history.
//! * Aalen-MSM: weighted Aalen least squares with main-effect terms for each
//!   lag of treatment; the fit is a set of cumulative-coefficient step
//!   functions with jumps at the observed event times.

use crate::data::{subject_runs, StudyOneData, StudyTwoData};
use crate::error::{Error, Result};
use crate::glm::{fit_weighted_logistic, Design, LogisticFit};
use crate::numeric::{logistic, solve_psd};
use crate::weights::WeightTable;

/// How a treatment history `ā_k = (a_0, ..., a_k)` enters the hazard.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GForm {
    /// `a_k`
    CurrentLevel,
    /// `Σ_{j<=k} a_j`
    Duration,
    /// `(a_k, a_{k-1}, ..., a_0)`, padded with zeros to `lags` columns.
    MainEffectTerms { lags: usize },
    /// `(d1, a_k, d3)` with `d1 = min(k, k*)`, `d3 = max(k - k*, 0)` and `k*`
    /// the first treated visit (infinite if never treated).
    HavercroftD1AD3,
}

impl GForm {
    pub fn columns(&self) -> usize {
        match self {
            GForm::CurrentLevel | GForm::Duration => 1,
            GForm::MainEffectTerms { lags } => *lags,
            GForm::HavercroftD1AD3 => 3,
        }
    }

    /// Expands the history `a_0..=a_k` (so `k = history.len() - 1`).
    pub fn expand(&self, history: &[u8], out: &mut Vec<f64>) {
        out.clear();
        let k = history.len() - 1;
        match self {
            GForm::CurrentLevel => out.push(f64::from(history[k])),
            GForm::Duration => out.push(history.iter().map(|&a| f64::from(a)).sum()),
            GForm::MainEffectTerms { lags } => {
                for j in 0..*lags {
                    out.push(if j <= k { f64::from(history[k - j]) } else { 0.0 });
                }
            }
            GForm::HavercroftD1AD3 => {
                let k_star = history.iter().position(|&a| a == 1);
                let (d1, d3) = match k_star {
                    Some(ks) => (ks.min(k), k.saturating_sub(ks)),
                    None => (k, 0),
                };
                out.push(d1 as f64);
                out.push(f64::from(history[k]));
                out.push(d3 as f64);
            }
        }
    }

    pub fn name(&self) -> String {
        match self {
            GForm::CurrentLevel => "current-level".into(),
            GForm::Duration => "duration".into(),
            GForm::MainEffectTerms { lags } => format!("main-effects-{lags}"),
            GForm::HavercroftD1AD3 => "d1-a-d3".into(),
        }
    }
}

pub fn always_treated(visits: usize) -> Vec<u8> {
    vec![1; visits + 1]
}

pub fn never_treated(visits: usize) -> Vec<u8> {
    vec![0; visits + 1]
}

fn check_alignment(weights: &WeightTable, keys: impl ExactSizeIterator<Item = (usize, usize)>) -> Result<()> {
    if weights.rows.len() != keys.len() {
        return Err(Error::Shape(format!(
            "weight table has {} rows, dataset has {}",
            weights.rows.len(),
            keys.len()
        )));
    }
    for (w, (id, k)) in weights.rows.iter().zip(keys) {
        if w.id != id || w.k != k {
            return Err(Error::Shape(format!(
                "weight row ({}, {}) does not match record ({id}, {k})",
                w.id, w.k
            )));
        }
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct LogitMsmFit {
    pub gform: GForm,
    /// Intercept followed by the g-form coefficients.
    pub coefficients: Vec<f64>,
    pub fit: LogisticFit,
}

/// Weighted pooled logistic regression of `Y_{k+1}` on the g-form, with case
/// weights `sw_truncated`.
pub fn fit_logit_msm(data: &StudyOneData, weights: &WeightTable, gform: GForm) -> Result<LogitMsmFit> {
    check_alignment(weights, data.records.iter().map(|r| (r.id, r.k)))?;
    let p = 1 + gform.columns();
    let mut x = Design::with_capacity(p, data.records.len());
    let mut y = Vec::with_capacity(data.records.len());
    let mut history: Vec<u8> = Vec::new();
    let mut cols = Vec::with_capacity(p);
    let mut row = Vec::with_capacity(p);
    for (i, r) in data.records.iter().enumerate() {
        if i == 0 || data.records[i - 1].id != r.id {
            history.clear();
        }
        history.push(r.a);
        gform.expand(&history, &mut cols);
        row.clear();
        row.push(1.0);
        row.extend_from_slice(&cols);
        x.push_row(&row);
        y.push(r.y_next);
    }
    let w = weights.truncated();
    let fit = fit_weighted_logistic(&x, &y, &w)?;
    Ok(LogitMsmFit {
        gform,
        coefficients: fit.coefficients.clone(),
        fit,
    })
}

/// Discrete-time hazard at visit `k` under `regime`.
pub fn logit_hazard(coefficients: &[f64], gform: GForm, regime: &[u8], k: usize) -> f64 {
    let mut cols = Vec::new();
    gform.expand(&regime[..=k], &mut cols);
    let eta = coefficients[0] + cols.iter().zip(&coefficients[1..]).map(|(x, b)| x * b).sum::<f64>();
    logistic(eta)
}

/// `S(t) = Π_{k<t} (1 - λ_k)` for integer `t <= regime.len()`.
pub fn survival_logit(coefficients: &[f64], gform: GForm, regime: &[u8], t: usize) -> f64 {
    assert!(t <= regime.len(), "horizon {t} beyond the regime length {}", regime.len());
    (0..t)
        .map(|k| 1.0 - logit_hazard(coefficients, gform, regime, k))
        .product()
}

/// Subject-level input to the Aalen least-squares fit.
///
/// Subject `i` is at risk on `[0, exit_time(i)]`, and in interval
/// `[k, k + 1)` carries the design row and case weight produced by
/// [`AalenSource::interval_row`].
pub trait AalenSource {
    fn subjects(&self) -> usize;
    /// Number of design columns, intercept included.
    fn columns(&self) -> usize;
    fn exit_time(&self, i: usize) -> f64;
    fn is_event(&self, i: usize) -> bool;
    /// Writes the interval-`k` row of subject `i` and returns its weight.
    fn interval_row(&self, i: usize, k: usize, row: &mut [f64]) -> f64;
    /// Columns that can be non-zero in interval `k`.
    fn active_columns(&self, k: usize, active: &mut [bool]);
}

#[derive(Debug, Clone, PartialEq)]
pub struct AalenMsmFit {
    /// Last visit index `K`; the model has `K + 2` columns (intercept and
    /// lags `0..=K`).
    pub visits: usize,
    /// Distinct event times, ascending.
    pub event_times: Vec<f64>,
    /// `increments[e][c]`: jump of cumulative coefficient `c` at
    /// `event_times[e]`. Column 0 is the intercept `C0`, column `1 + j` is
    /// `C_Aj`.
    pub increments: Vec<Vec<f64>>,
    /// `identified[e][c]`: whether column `c` was estimable at event `e`.
    /// Structurally inactive lags (`j > ⌊t⌋`) are `false`.
    pub identified: Vec<Vec<bool>>,
}

impl AalenMsmFit {
    pub fn columns(&self) -> usize {
        self.visits + 2
    }

    /// `Ĉ_c(t)`: sum of jumps of column `c` at event times `<= t`.
    pub fn cumulative(&self, column: usize, t: f64) -> f64 {
        self.event_times
            .iter()
            .zip(&self.increments)
            .take_while(|(s, _)| **s <= t)
            .map(|(_, inc)| inc[column])
            .sum()
    }

    /// Cumulative intercept `Ĉ0(t)`.
    pub fn c0(&self, t: f64) -> f64 {
        self.cumulative(0, t)
    }

    /// Cumulative coefficient of treatment lag `j`, `Ĉ_Aj(t)`.
    pub fn c_lag(&self, lag: usize, t: f64) -> f64 {
        self.cumulative(1 + lag, t)
    }

    /// Hazard increment for `regime` at event `e`.
    fn regime_increment(&self, e: usize, regime: &[u8]) -> f64 {
        let s = self.event_times[e];
        let k = (s.floor() as usize).min(regime.len() - 1);
        let inc = &self.increments[e];
        let mut d = inc[0];
        for j in 0..=k {
            d += f64::from(regime[k - j]) * inc[1 + j];
        }
        d
    }

    /// Number of event times at which the regime's hazard increment is
    /// negative (the additive model does not constrain the hazard).
    pub fn negative_increments(&self, regime: &[u8]) -> usize {
        (0..self.event_times.len())
            .filter(|&e| self.regime_increment(e, regime) < 0.0)
            .count()
    }
}

/// `S(t) = exp(-Σ_{s<=t} [dĈ0(s) + Σ_j ā_{⌊s⌋-j} dĈ_Aj(s)])`.
pub fn survival_aalen(fit: &AalenMsmFit, regime: &[u8], t: f64) -> f64 {
    let total: f64 = (0..fit.event_times.len())
        .take_while(|&e| fit.event_times[e] <= t)
        .map(|e| fit.regime_increment(e, regime))
        .sum();
    (-total).exp()
}

struct RiskSet<'a, S: AalenSource> {
    src: &'a S,
    p: usize,
    sum: Vec<f64>,
    row: Vec<f64>,
    size: usize,
    size_at_rebuild: usize,
}

impl<'a, S: AalenSource> RiskSet<'a, S> {
    fn add(&mut self, i: usize, k: usize, sign: f64) {
        let w = sign * self.src.interval_row(i, k, &mut self.row);
        let p = self.p;
        for a in 0..p {
            let wa = w * self.row[a];
            if wa == 0.0 {
                continue;
            }
            for b in 0..p {
                self.sum[a * p + b] += wa * self.row[b];
            }
        }
    }

    fn rebuild(&mut self, members: &[usize], k: usize) {
        self.sum.iter_mut().for_each(|v| *v = 0.0);
        for &i in members {
            self.add(i, k, 1.0);
        }
        self.size = members.len();
        self.size_at_rebuild = members.len();
    }
}

/// One jump of the Aalen step functions, as produced by [`fit_aalen_each`].
#[derive(Debug)]
pub struct AalenStep<'a> {
    pub time: f64,
    pub increment: &'a [f64],
    pub identified: &'a [bool],
    /// Optional-variation contribution `Σ_i ((S⁻¹ w_i x_i)_c)²` over the
    /// events at this time. Summed over steps it estimates the sampling
    /// variance of each cumulative coefficient; the oracle uses it for its
    /// Monte Carlo error.
    pub variation: &'a [f64],
}

/// Weighted Aalen least-squares fit of a source with `visits + 1` intervals,
/// handing each jump to `step` in time order.
///
/// At each distinct event time `t` with risk set `{i : T_i >= t}`, solves
/// `(Xᵀ W X) dC = Xᵀ W dN` over the columns active in interval `⌊t⌋`. Columns
/// found collinear at `t` get a zero jump and are marked unidentified. Ties
/// share one risk set and one jump.
pub fn fit_aalen_each<S, F>(src: &S, visits: usize, mut step: F) -> Result<()>
where
    S: AalenSource,
    F: FnMut(&AalenStep<'_>),
{
    let n = src.subjects();
    let p = src.columns();
    if n == 0 {
        return Err(Error::EmptyData("no subjects for the Aalen fit".into()));
    }
    for i in 0..n {
        let t = src.exit_time(i);
        if !(t > 0.0 && t.is_finite()) {
            return Err(Error::Shape(format!("subject {i} has invalid exit time {t}")));
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| src.exit_time(a).total_cmp(&src.exit_time(b)).then(a.cmp(&b)));

    let mut risk = RiskSet {
        src,
        p,
        sum: vec![0.0; p * p],
        row: vec![0.0; p],
        size: 0,
        size_at_rebuild: 0,
    };
    let mut active = vec![false; p];
    let mut rhs = vec![0.0; p];
    let mut row = vec![0.0; p];
    let mut variation = vec![0.0; p];
    // `head` indexes the first subject in `order` not yet removed
    let mut head = 0;
    let mut pos = 0;
    for k in 0..=visits {
        let lo = k as f64;
        let hi = (k + 1) as f64;
        while head < n && src.exit_time(order[head]) < lo {
            head += 1;
        }
        risk.rebuild(&order[head..], k);
        src.active_columns(k, &mut active);

        pos = pos.max(head);
        while pos < n && src.exit_time(order[pos]) < hi {
            let t = src.exit_time(order[pos]);
            let tie_end = (pos..n).find(|&q| src.exit_time(order[q]) != t).unwrap_or(n);
            let events = (pos..tie_end).filter(|&q| src.is_event(order[q])).count();
            if events == 0 {
                pos = tie_end;
                continue;
            }
            // drop everyone who left strictly before t
            while head < pos {
                risk.add(order[head], k, -1.0);
                risk.size -= 1;
                head += 1;
            }
            if risk.size * 2 < risk.size_at_rebuild {
                risk.rebuild(&order[head..], k);
            }

            rhs.iter_mut().for_each(|v| *v = 0.0);
            variation.iter_mut().for_each(|v| *v = 0.0);
            for &i in &order[pos..tie_end] {
                if !src.is_event(i) {
                    continue;
                }
                let w = src.interval_row(i, k, &mut row);
                for c in 0..p {
                    row[c] *= w;
                    rhs[c] += row[c];
                }
                if events > 1 {
                    let own = solve_psd(&risk.sum, p, &row, &active);
                    for c in 0..p {
                        variation[c] += own.x[c] * own.x[c];
                    }
                }
            }
            let sol = solve_psd(&risk.sum, p, &rhs, &active);
            if events == 1 {
                for c in 0..p {
                    variation[c] = sol.x[c] * sol.x[c];
                }
            }
            let mut identified = active.clone();
            for &c in &sol.dependent {
                identified[c] = false;
            }
            step(&AalenStep {
                time: t,
                increment: &sol.x,
                identified: &identified,
                variation: &variation,
            });
            pos = tie_end;
        }
    }
    Ok(())
}

/// [`fit_aalen_each`], collected into an [`AalenMsmFit`].
pub fn fit_aalen<S: AalenSource>(src: &S, visits: usize) -> Result<AalenMsmFit> {
    let mut fit = AalenMsmFit {
        visits,
        event_times: Vec::new(),
        increments: Vec::new(),
        identified: Vec::new(),
    };
    fit_aalen_each(src, visits, |s| {
        fit.event_times.push(s.time);
        fit.increments.push(s.increment.to_vec());
        fit.identified.push(s.identified.to_vec());
    })?;
    Ok(fit)
}

/// Flattened study II data for the Aalen fit.
struct StudyTwoSource {
    visits: usize,
    exit: Vec<f64>,
    event: Vec<bool>,
    first_record: Vec<usize>,
    a: Vec<u8>,
    w: Vec<f64>,
}

impl AalenSource for StudyTwoSource {
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
        let base = self.first_record[i];
        row[0] = 1.0;
        for j in 0..=self.visits {
            row[1 + j] = if j <= k { f64::from(self.a[base + k - j]) } else { 0.0 };
        }
        self.w[base + k]
    }

    fn active_columns(&self, k: usize, active: &mut [bool]) {
        active[0] = true;
        for j in 0..=self.visits {
            active[1 + j] = j <= k;
        }
    }
}

/// Weighted Aalen-MSM with main effects of every treatment lag, case weights
/// `sw_truncated` held constant within each visit interval.
pub fn fit_aalen_msm(data: &StudyTwoData, weights: &WeightTable) -> Result<AalenMsmFit> {
    check_alignment(weights, data.records.iter().map(|r| (r.id, r.k)))?;
    let mut src = StudyTwoSource {
        visits: data.visits,
        exit: Vec::new(),
        event: Vec::new(),
        first_record: Vec::new(),
        a: data.records.iter().map(|r| r.a).collect(),
        w: weights.truncated(),
    };
    for run in subject_runs(&data.records, |r| r.id) {
        let start = run.start;
        let subj = &data.records[run];
        let last = subj[subj.len() - 1];
        let t = last
            .t
            .ok_or_else(|| Error::Shape(format!("subject {} lacks an exit time", last.id)))?;
        for (k, r) in subj.iter().enumerate() {
            if r.k != k {
                return Err(Error::Shape(format!("subject {} skips visit {k}", r.id)));
            }
        }
        if t < last.k as f64 || t > (last.k + 1) as f64 {
            return Err(Error::Shape(format!(
                "subject {} exits at {t} outside its last interval",
                last.id
            )));
        }
        src.first_record.push(start);
        src.exit.push(t);
        src.event.push(last.y_next == 1);
    }
    fit_aalen(&src, data.visits)
}
