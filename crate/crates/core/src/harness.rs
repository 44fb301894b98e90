//! Monte Carlo driver for the factorial simulation studies.
//!
//! Each scenario fixes a study, sample size, positivity policy and truncation
//! strategy. Replication `b` of a scenario draws its subjects from a stream
//! keyed by a hash of the data-generating parameters (sample size, hazard
//! coefficients, follow-up) and `b`, but not by π, τ or the truncation. All
//! scenarios that differ only in those knobs therefore share random numbers,
//! and scenarios with identical data (same π and τ) generate it once.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::estimators::{
    always_treated, fit_aalen_msm, fit_logit_msm, never_treated, survival_aalen, survival_logit, GForm,
};
use crate::genmodel_one::{simulate_dataset_one, StudyOneParams};
use crate::genmodel_two::{simulate_dataset_two, StudyTwoParams};
use crate::stochastic::{StreamKey, StreamLabel};
use crate::truth::{TruthSetOne, TruthSetTwo};
use crate::weights::{estimate_weights_one, estimate_weights_two, truncate_weights, TruncationStrategy, WeightTable};

pub const DEFAULT_REPLICATIONS: usize = 1000;
pub const DEFAULT_SAMPLE_SIZES: [usize; 5] = [50, 100, 250, 500, 1000];
pub const DEFAULT_PI: [f64; 6] = [0.05, 0.1, 0.3, 0.5, 0.8, 1.0];
pub const DEFAULT_TAU_ONE: [f64; 6] = [0.0, 100.0, 200.0, 300.0, 400.0, 500.0];
pub const DEFAULT_TAU_TWO: [f64; 6] = [1.0, 1.5, 2.0, 3.0, 7.0, 10.0];
pub const DEFAULT_TRUNCATIONS: [TruncationStrategy; 4] = [
    TruncationStrategy::NoWT,
    TruncationStrategy::P1_99,
    TruncationStrategy::P5_95,
    TruncationStrategy::P10_90,
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Study {
    One,
    Two,
}

impl Study {
    pub fn numeral(self) -> &'static str {
        match self {
            Study::One => "I",
            Study::Two => "II",
        }
    }
}

impl fmt::Display for Study {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Study::One => "1",
            Study::Two => "2",
        })
    }
}

impl FromStr for Study {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "1" | "I" | "one" => Ok(Study::One),
            "2" | "II" | "two" => Ok(Study::Two),
            other => Err(Error::InvalidParameter(format!("unknown study '{other}' (expected 1 or 2)"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ModelParams {
    One(StudyOneParams),
    Two(StudyTwoParams),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub model: ModelParams,
    pub pi: f64,
    pub tau: f64,
    pub truncation: TruncationStrategy,
    pub replications: usize,
    pub master_seed: u64,
}

impl ScenarioConfig {
    pub fn new(
        study: Study,
        n: usize,
        pi: f64,
        tau: f64,
        truncation: TruncationStrategy,
        replications: usize,
        master_seed: u64,
    ) -> Result<Self> {
        let model = match study {
            Study::One => ModelParams::One(StudyOneParams::with_violation(n, pi, tau)?),
            Study::Two => ModelParams::Two(StudyTwoParams::with_violation(n, pi, tau)?),
        };
        if replications == 0 {
            return Err(Error::InvalidParameter("replications must be at least 1".into()));
        }
        Ok(Self {
            model,
            pi,
            tau,
            truncation,
            replications,
            master_seed,
        })
    }

    pub fn study(&self) -> Study {
        self.model.study()
    }

    pub fn n(&self) -> usize {
        match &self.model {
            ModelParams::One(p) => p.n,
            ModelParams::Two(p) => p.n,
        }
    }

    /// Identifier such as `I-n1000-pi0.05-tau500-NoWT`.
    pub fn id(&self) -> String {
        format!(
            "{}-n{}-pi{}-tau{}-{}",
            self.study().numeral(),
            self.n(),
            self.pi,
            self.tau,
            self.truncation
        )
    }

    /// Identifier without τ, such as `I-n1000-pi0.05-NoWT`; the scenarios of
    /// one panel differ only in τ.
    pub fn panel_id(&self) -> String {
        format!("{}-n{}-pi{}-{}", self.study().numeral(), self.n(), self.pi, self.truncation)
    }

    /// Seed handed to the generator for every replication of this scenario.
    pub fn data_seed(&self) -> u64 {
        data_seed(self.master_seed, &self.model)
    }
}

impl ModelParams {
    pub fn study(&self) -> Study {
        match self {
            ModelParams::One(_) => Study::One,
            ModelParams::Two(_) => Study::Two,
        }
    }

    /// Hash of the parameters that shape the random draws, excluding the
    /// positivity policy.
    pub fn stream_hash(&self) -> u64 {
        let mut h = Sha256::new();
        h.update(b"posim-scenario-v1");
        match self {
            ModelParams::One(p) => {
                h.update([1u8]);
                h.update((p.n as u64).to_le_bytes());
                h.update((p.visits as u64).to_le_bytes());
                h.update((p.checkup_spacing as u64).to_le_bytes());
                for g in p.gamma {
                    h.update(g.to_bits().to_le_bytes());
                }
            }
            ModelParams::Two(p) => {
                h.update([2u8]);
                h.update((p.n as u64).to_le_bytes());
                h.update((p.visits as u64).to_le_bytes());
                for a in p.alpha {
                    h.update(a.to_bits().to_le_bytes());
                }
                h.update(p.frailty_variance.to_bits().to_le_bytes());
            }
        }
        let digest = h.finalize();
        u64::from_le_bytes(digest[..8].try_into().expect("digest has 32 bytes"))
    }
}

/// Generator seed for a model under `master_seed`. Models that differ only
/// in their positivity policy get the same seed.
pub fn data_seed(master_seed: u64, model: &ModelParams) -> u64 {
    StreamKey::new(master_seed)
        .child(StreamLabel::Scenario, model.stream_hash())
        .derive_seed()
}

/// Full factorial grid over sample sizes, π, τ and truncation strategies.
pub fn factorial_grid(
    study: Study,
    sizes: &[usize],
    pis: &[f64],
    taus: &[f64],
    truncations: &[TruncationStrategy],
    replications: usize,
    master_seed: u64,
) -> Result<Vec<ScenarioConfig>> {
    let mut grid = Vec::new();
    for &n in sizes {
        for &pi in pis {
            for &tau in taus {
                for &wt in truncations {
                    grid.push(ScenarioConfig::new(study, n, pi, tau, wt, replications, master_seed)?);
                }
            }
        }
    }
    Ok(grid)
}

pub fn default_grid(study: Study, replications: usize, master_seed: u64) -> Result<Vec<ScenarioConfig>> {
    let taus: &[f64] = match study {
        Study::One => &DEFAULT_TAU_ONE,
        Study::Two => &DEFAULT_TAU_TWO,
    };
    factorial_grid(
        study,
        &DEFAULT_SAMPLE_SIZES,
        &DEFAULT_PI,
        taus,
        &DEFAULT_TRUNCATIONS,
        replications,
        master_seed,
    )
}

// --- metrics ------------------------------------------------------------

fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

/// `mean(estimates) - truth`; `None` for an empty slice.
pub fn bias(estimates: &[f64], truth: f64) -> Option<f64> {
    (!estimates.is_empty()).then(|| mean(estimates) - truth)
}

/// Sample standard deviation with denominator `B - 1`; `None` when `B < 2`.
pub fn emp_se(estimates: &[f64]) -> Option<f64> {
    if estimates.len() < 2 {
        return None;
    }
    let m = mean(estimates);
    let ss: f64 = estimates.iter().map(|x| (x - m) * (x - m)).sum();
    Some((ss / (estimates.len() - 1) as f64).sqrt())
}

pub fn rmse(estimates: &[f64], truth: f64) -> Option<f64> {
    (!estimates.is_empty()).then(|| {
        let ms = estimates.iter().map(|x| (x - truth) * (x - truth)).sum::<f64>() / estimates.len() as f64;
        ms.sqrt()
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct EstimandSummary {
    pub name: String,
    pub truth: f64,
    /// Replications with a finite estimate.
    pub count: usize,
    /// Replications whose estimate was not finite (excluded).
    pub nonfinite: usize,
    pub mean: Option<f64>,
    pub bias: Option<f64>,
    pub emp_se: Option<f64>,
    pub rmse: Option<f64>,
    /// `emp_se / √count`.
    pub mc_se: Option<f64>,
}

impl EstimandSummary {
    pub fn from_estimates(name: impl Into<String>, estimates: &[f64], truth: f64) -> Self {
        let finite: Vec<f64> = estimates.iter().copied().filter(|x| x.is_finite()).collect();
        let emp = emp_se(&finite);
        Self {
            name: name.into(),
            truth,
            count: finite.len(),
            nonfinite: estimates.len() - finite.len(),
            mean: (!finite.is_empty()).then(|| mean(&finite)),
            bias: bias(&finite, truth),
            emp_se: emp,
            rmse: rmse(&finite, truth),
            mc_se: emp.map(|s| s / (finite.len() as f64).sqrt()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CurvePoint {
    pub regime: Regime,
    pub t: f64,
    /// Mean over successful replications.
    pub mean: f64,
    pub truth: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Regime {
    Always,
    Never,
}

impl Regime {
    pub fn label(self) -> &'static str {
        match self {
            Regime::Always => "always",
            Regime::Never => "never",
        }
    }
}

impl FromStr for Regime {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "always" => Ok(Regime::Always),
            "never" => Ok(Regime::Never),
            other => Err(Error::InvalidParameter(format!("unknown regime '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioResult {
    pub config: ScenarioConfig,
    /// Failed replications by reason; these are excluded from every summary.
    pub failures: BTreeMap<String, usize>,
    pub estimands: Vec<EstimandSummary>,
    pub curves: Vec<CurvePoint>,
}

impl ScenarioResult {
    pub fn id(&self) -> String {
        self.config.id()
    }

    pub fn failed(&self) -> usize {
        self.failures.values().sum()
    }

    pub fn estimand(&self, name: &str) -> Option<&EstimandSummary> {
        self.estimands.iter().find(|e| e.name == name)
    }
}

/// Truth for the studies present in a grid.
#[derive(Debug, Clone, Default)]
pub struct Truths {
    pub one: Option<TruthSetOne>,
    pub two: Option<TruthSetTwo>,
}

/// One estimand: its name, true value and where to read it from a
/// replication's estimate vector.
struct Estimand {
    name: String,
    truth: f64,
}

struct Layout {
    estimands: Vec<Estimand>,
    /// Time points of the survival curves (same for both regimes).
    curve_times: Vec<f64>,
    curve_truth: Vec<(Regime, Vec<Option<f64>>)>,
}

fn layout_one(truth: &TruthSetOne, visits: usize) -> Layout {
    let mut estimands: Vec<Estimand> = ["gamma0", "gammaA1", "gammaA2", "gammaA3"]
        .iter()
        .zip(truth.gamma)
        .map(|(n, t)| Estimand {
            name: n.to_string(),
            truth: t,
        })
        .collect();
    for (regime, curve) in [(Regime::Always, &truth.always), (Regime::Never, &truth.never)] {
        for t in 1..=visits + 1 {
            estimands.push(Estimand {
                name: format!("S_{}({t})", regime.label()),
                truth: curve[t],
            });
        }
    }
    let curve_times = (0..=visits + 1).map(|t| t as f64).collect();
    let curve_truth = vec![
        (Regime::Always, truth.always.iter().map(|&v| Some(v)).collect()),
        (Regime::Never, truth.never.iter().map(|&v| Some(v)).collect()),
    ];
    Layout {
        estimands,
        curve_times,
        curve_truth,
    }
}

fn layout_two(truth: &TruthSetTwo) -> Layout {
    let mut estimands = Vec::new();
    for (g, &t) in truth.grid.iter().enumerate() {
        estimands.push(Estimand {
            name: format!("C0({t})"),
            truth: truth.c0[g],
        });
    }
    for j in 0..truth.c_lag.len() {
        for (g, &t) in truth.grid.iter().enumerate() {
            if t > j as f64 {
                estimands.push(Estimand {
                    name: format!("CA{j}({t})"),
                    truth: truth.c_lag[j][g],
                });
            }
        }
    }
    for (regime, curve) in [(Regime::Always, &truth.survival_always), (Regime::Never, &truth.survival_never)] {
        for (g, &t) in truth.grid.iter().enumerate() {
            estimands.push(Estimand {
                name: format!("S_{}({t})", regime.label()),
                truth: curve[g],
            });
        }
    }
    let mut curve_times = vec![0.0];
    curve_times.extend(&truth.grid);
    let with_origin = |c: &[f64]| std::iter::once(Some(1.0)).chain(c.iter().map(|&v| Some(v))).collect();
    let curve_truth = vec![
        (Regime::Always, with_origin(&truth.survival_always)),
        (Regime::Never, with_origin(&truth.survival_never)),
    ];
    Layout {
        estimands,
        curve_times,
        curve_truth,
    }
}

/// Estimates of one replication: estimand values, then the always and never
/// curves at `Layout::curve_times`.
type Replicate = std::result::Result<(Vec<f64>, Vec<f64>, Vec<f64>), String>;

fn failure_reason(e: &Error) -> String {
    match e {
        Error::SingularDesign { .. } => "singular-design".into(),
        Error::ZeroProbability { .. } => "zero-probability".into(),
        Error::EmptyData(_) => "empty-data".into(),
        _ => "fit-error".into(),
    }
}

fn check_weight_fits(w: &WeightTable) -> std::result::Result<(), String> {
    if w.numerator_fit.converged && w.denominator_fit.converged {
        Ok(())
    } else {
        Err("weights-nonconvergence".into())
    }
}

fn replicate_one(data: &crate::data::StudyOneData, weights: &WeightTable, wt: TruncationStrategy, layout: &Layout) -> Replicate {
    let truncated = truncate_weights(weights, wt);
    let fit = fit_logit_msm(data, &truncated, GForm::HavercroftD1AD3).map_err(|e| failure_reason(&e))?;
    if !fit.fit.converged {
        return Err("msm-nonconvergence".into());
    }
    let visits = data.visits;
    let (always, never) = (always_treated(visits), never_treated(visits));
    let curve = |regime: &[u8]| -> Vec<f64> {
        layout
            .curve_times
            .iter()
            .map(|&t| survival_logit(&fit.coefficients, GForm::HavercroftD1AD3, regime, t as usize))
            .collect()
    };
    let sa = curve(&always);
    let sn = curve(&never);
    let mut est = fit.coefficients.clone();
    est.extend(&sa[1..]);
    est.extend(&sn[1..]);
    Ok((est, sa, sn))
}

fn replicate_two(
    data: &crate::data::StudyTwoData,
    weights: &WeightTable,
    wt: TruncationStrategy,
    truth: &TruthSetTwo,
    layout: &Layout,
) -> Replicate {
    let truncated = truncate_weights(weights, wt);
    let fit = fit_aalen_msm(data, &truncated).map_err(|e| failure_reason(&e))?;
    let mut est = Vec::with_capacity(layout.estimands.len());
    est.extend(truth.grid.iter().map(|&t| fit.c0(t)));
    for j in 0..truth.c_lag.len() {
        est.extend(truth.grid.iter().filter(|&&t| t > j as f64).map(|&t| fit.c_lag(j, t)));
    }
    let (always, never) = (always_treated(data.visits), never_treated(data.visits));
    let sa: Vec<f64> = layout.curve_times.iter().map(|&t| survival_aalen(&fit, &always, t)).collect();
    let sn: Vec<f64> = layout.curve_times.iter().map(|&t| survival_aalen(&fit, &never, t)).collect();
    est.extend(&sa[1..]);
    est.extend(&sn[1..]);
    Ok((est, sa, sn))
}

/// Scenarios that see identical datasets: same model (π and τ included) and
/// master seed.
struct DataGroup {
    members: Vec<usize>,
    replications: usize,
}

fn group_scenarios(grid: &[ScenarioConfig]) -> Vec<DataGroup> {
    let mut groups: Vec<DataGroup> = Vec::new();
    for (i, s) in grid.iter().enumerate() {
        let found = groups.iter_mut().find(|g| {
            let first = &grid[g.members[0]];
            first.model == s.model && first.master_seed == s.master_seed
        });
        match found {
            Some(g) => {
                g.members.push(i);
                g.replications = g.replications.max(s.replications);
            }
            None => groups.push(DataGroup {
                members: vec![i],
                replications: s.replications,
            }),
        }
    }
    groups
}

fn run_group_replication(
    grid: &[ScenarioConfig],
    group: &DataGroup,
    rep: usize,
    truths: &Truths,
    layouts: &[Layout],
) -> Vec<Replicate> {
    let first = &grid[group.members[0]];
    let seed = first.data_seed();
    let members = group.members.iter().filter(|&&m| grid[m].replications > rep);
    match &first.model {
        ModelParams::One(params) => {
            let prepared = simulate_dataset_one(params, rep as u64, seed)
                .and_then(|d| estimate_weights_one(&d).map(|w| (d, w)))
                .map_err(|e| failure_reason(&e))
                .and_then(|(d, w)| check_weight_fits(&w).map(|_| (d, w)));
            members
                .map(|&m| match &prepared {
                    Ok((d, w)) => replicate_one(d, w, grid[m].truncation, &layouts[m]),
                    Err(e) => Err(e.clone()),
                })
                .collect()
        }
        ModelParams::Two(params) => {
            let truth = truths.two.as_ref().expect("checked before the run");
            let prepared = simulate_dataset_two(params, rep as u64, seed)
                .and_then(|d| estimate_weights_two(&d).map(|w| (d, w)))
                .map_err(|e| failure_reason(&e))
                .and_then(|(d, w)| check_weight_fits(&w).map(|_| (d, w)));
            members
                .map(|&m| match &prepared {
                    Ok((d, w)) => replicate_two(d, w, grid[m].truncation, truth, &layouts[m]),
                    Err(e) => Err(e.clone()),
                })
                .collect()
        }
    }
}

/// Runs every scenario of `grid` and summarises it against `truths`.
///
/// Work is spread over the current rayon pool by (data group, replication);
/// results are reduced in scenario and replication order, so the output does
/// not depend on the number of workers. Failed replications are excluded and
/// counted per reason.
pub fn run_study(grid: &[ScenarioConfig], truths: &Truths) -> Result<Vec<ScenarioResult>> {
    let mut layouts = Vec::with_capacity(grid.len());
    for s in grid {
        layouts.push(match &s.model {
            ModelParams::One(p) => {
                let truth = truths
                    .one
                    .as_ref()
                    .ok_or_else(|| Error::InvalidParameter("study I truth is missing".into()))?;
                if truth.always.len() != p.visits + 2 {
                    return Err(Error::Shape("study I truth does not match the follow-up length".into()));
                }
                layout_one(truth, p.visits)
            }
            ModelParams::Two(p) => {
                let truth = truths
                    .two
                    .as_ref()
                    .ok_or_else(|| Error::InvalidParameter("study II truth is missing".into()))?;
                if truth.visits() != p.visits || truth.alpha != p.alpha {
                    return Err(Error::Shape("study II truth was computed for other model parameters".into()));
                }
                layout_two(truth)
            }
        });
    }

    let groups = group_scenarios(grid);
    let tasks: Vec<(usize, usize)> = groups
        .iter()
        .enumerate()
        .flat_map(|(g, group)| (0..group.replications).map(move |b| (g, b)))
        .collect();
    let outcomes: Vec<Vec<Replicate>> = tasks
        .par_iter()
        .map(|&(g, b)| run_group_replication(grid, &groups[g], b, truths, &layouts))
        .collect();

    // regroup per scenario, replications in order
    let mut per_scenario: Vec<Vec<Replicate>> = grid.iter().map(|s| Vec::with_capacity(s.replications)).collect();
    for (&(g, b), reps) in tasks.iter().zip(outcomes) {
        let members = groups[g].members.iter().filter(|&&m| grid[m].replications > b);
        for (&m, r) in members.zip(reps) {
            per_scenario[m].push(r);
        }
    }

    Ok(grid
        .iter()
        .zip(per_scenario)
        .zip(&layouts)
        .map(|((config, reps), layout)| summarise(config, reps, layout))
        .collect())
}

fn summarise(config: &ScenarioConfig, reps: Vec<Replicate>, layout: &Layout) -> ScenarioResult {
    let mut failures = BTreeMap::new();
    let mut ok = Vec::new();
    for r in reps {
        match r {
            Ok(v) => ok.push(v),
            Err(reason) => *failures.entry(reason).or_insert(0) += 1,
        }
    }
    let estimands = layout
        .estimands
        .iter()
        .enumerate()
        .map(|(e, est)| {
            let values: Vec<f64> = ok.iter().map(|(v, _, _)| v[e]).collect();
            EstimandSummary::from_estimates(est.name.clone(), &values, est.truth)
        })
        .collect();
    let mut curves = Vec::new();
    for (regime, truth) in &layout.curve_truth {
        for (i, &t) in layout.curve_times.iter().enumerate() {
            let values: Vec<f64> = ok
                .iter()
                .map(|(_, a, n)| if *regime == Regime::Always { a[i] } else { n[i] })
                .filter(|v| v.is_finite())
                .collect();
            let m = if values.is_empty() { f64::NAN } else { mean(&values) };
            curves.push(CurvePoint {
                regime: *regime,
                t,
                mean: m,
                truth: truth[i],
            });
        }
    }
    ScenarioResult {
        config: config.clone(),
        failures,
        estimands,
        curves,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::truth::true_params_one;
    use proptest::prelude::*;

    #[test]
    fn metric_examples() {
        assert_eq!(bias(&[2.0, 4.0], 3.0), Some(0.0));
        assert_eq!(bias(&[3.0, 3.0, 3.0], 3.0), Some(0.0));
        assert_eq!(bias(&[0.0, 0.0, 3.0], 1.0), Some(0.0));
        assert!((emp_se(&[2.0, 4.0]).unwrap() - 2f64.sqrt()).abs() < 1e-15);
        assert_eq!(emp_se(&[5.0; 4]), Some(0.0));
        assert_eq!(emp_se(&[5.0]), None);
        assert_eq!(rmse(&[3.0, 3.0], 3.0), Some(0.0));
        assert_eq!(rmse(&[2.0, 4.0], 3.0), Some(1.0));
        assert_eq!(bias(&[], 1.0), None);
    }

    #[test]
    fn nonfinite_estimates_excluded() {
        let s = EstimandSummary::from_estimates("x", &[1.0, f64::NAN, 3.0, f64::INFINITY], 2.0);
        assert_eq!(s.count, 2);
        assert_eq!(s.nonfinite, 2);
        assert_eq!(s.bias, Some(0.0));
    }

    proptest! {
        #[test]
        fn rmse_decomposition(v in prop::collection::vec(-50.0f64..50.0, 2..40), truth in -10.0f64..10.0, c in -5.0f64..5.0) {
            let s = EstimandSummary::from_estimates("x", &v, truth);
            let b = s.bias.unwrap();
            let e = s.emp_se.unwrap();
            let r = s.rmse.unwrap();
            let n = v.len() as f64;
            prop_assert!((r * r - (b * b + e * e * (n - 1.0) / n)).abs() < 1e-10 * (1.0 + r * r));
            prop_assert!(r + 1e-12 >= b.abs());
            let scaled: Vec<f64> = v.iter().map(|x| c * x).collect();
            prop_assert!((emp_se(&scaled).unwrap() - c.abs() * e).abs() < 1e-9 * (1.0 + e));
        }
    }

    #[test]
    fn scenario_ids_and_stream_sharing() {
        let a = ScenarioConfig::new(Study::One, 1000, 0.05, 500.0, TruncationStrategy::NoWT, 10, 1).unwrap();
        assert_eq!(a.id(), "I-n1000-pi0.05-tau500-NoWT");
        let b = ScenarioConfig::new(Study::One, 1000, 1.0, 0.0, TruncationStrategy::P1_99, 10, 1).unwrap();
        assert_eq!(a.data_seed(), b.data_seed());
        assert_eq!(a.panel_id(), "I-n1000-pi0.05-NoWT");
        let c = ScenarioConfig::new(Study::One, 500, 0.05, 500.0, TruncationStrategy::NoWT, 10, 1).unwrap();
        assert_ne!(a.data_seed(), c.data_seed());
        let d = ScenarioConfig::new(Study::Two, 1000, 0.3, 1.5, TruncationStrategy::P2_5_97_5, 10, 1).unwrap();
        assert_eq!(d.id(), "II-n1000-pi0.3-tau1.5-2.5-97.5");
    }

    #[test]
    fn default_grids_have_paper_sizes() {
        assert_eq!(default_grid(Study::One, 1, 0).unwrap().len(), 5 * 6 * 6 * 4);
        assert_eq!(default_grid(Study::Two, 1, 0).unwrap().len(), 5 * 6 * 6 * 4);
    }

    #[test]
    fn small_study_one_run_is_deterministic() {
        let grid = factorial_grid(
            Study::One,
            &[200],
            &[1.0, 0.3],
            &[500.0],
            &[TruncationStrategy::NoWT, TruncationStrategy::P5_95],
            6,
            11,
        )
        .unwrap();
        let truths = Truths {
            one: Some(true_params_one()),
            two: None,
        };
        let a = run_study(&grid, &truths).unwrap();
        let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let b = pool.install(|| run_study(&grid, &truths)).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.len(), 4);
        for r in &a {
            let g = r.estimand("gammaA2").unwrap();
            assert_eq!(g.count + r.failed(), 6);
            assert_eq!(r.curves[0].mean, 1.0);
        }
        // same data, different truncation: NoWT and 5-95 differ only through weights
        assert_ne!(a[0].estimand("gamma0"), a[1].estimand("gamma0"));
    }

    #[test]
    fn missing_truth_is_an_error() {
        let grid = vec![ScenarioConfig::new(Study::Two, 50, 1.0, 1.0, TruncationStrategy::NoWT, 2, 0).unwrap()];
        assert!(run_study(&grid, &Truths::default()).is_err());
    }
}
