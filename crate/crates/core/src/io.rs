//! Versioned delimited file formats.
//!
//! Every file starts with `# posim-<kind> v<N>`, followed by optional
//! `# key: value` metadata lines, then a comma-separated body with a header
//! row. Readers reject other kinds and versions. Floats are written in their
//! shortest round-trip decimal form, so reading a file back gives the exact
//! bits that were written.

use std::io::Write;

use crate::data::{LongDataset, StudyOneData, StudyTwoData, VisitRecordOne, VisitRecordTwo};
use crate::error::{Error, Result};
use crate::estimators::{AalenMsmFit, LogitMsmFit};
use crate::harness::{Regime, ScenarioResult};
use crate::truth::{TruthSetOne, TruthSetTwo};
use crate::weights::WeightTable;

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Metadata {
    pub entries: Vec<(String, String)>,
}

impl Metadata {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with(mut self, key: &str, value: impl ToString) -> Self {
        self.entries.push((key.to_string(), value.to_string()));
        self
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    fn require(&self, key: &str) -> Result<&str> {
        self.get(key).ok_or_else(|| Error::Format {
            line: 1,
            message: format!("missing metadata '{key}'"),
        })
    }

    fn parse<T: std::str::FromStr>(&self, key: &str) -> Result<T> {
        let raw = self.require(key)?;
        raw.parse().map_err(|_| Error::Format {
            line: 1,
            message: format!("metadata '{key}' has invalid value '{raw}'"),
        })
    }
}

fn write_header(w: &mut impl Write, kind: &str, meta: &Metadata) -> Result<()> {
    writeln!(w, "# posim-{kind} v{FORMAT_VERSION}")?;
    for (k, v) in &meta.entries {
        writeln!(w, "# {k}: {v}")?;
    }
    Ok(())
}

/// Splits `text` into metadata and the CSV body; `body_line` is the 1-based
/// line number of the body's header row.
struct Parsed<'a> {
    meta: Metadata,
    body: &'a str,
    body_line: usize,
}

fn read_header<'a>(text: &'a str, kind: &str) -> Result<Parsed<'a>> {
    let mut lines = text.split_inclusive('\n');
    let first_raw = lines.next().unwrap_or("");
    let first = first_raw.trim_end();
    let prefix = format!("# posim-{kind} v");
    let found = first.strip_prefix(&prefix).ok_or_else(|| Error::Format {
        line: 1,
        message: format!("expected a '# posim-{kind} v{FORMAT_VERSION}' header, found '{first}'"),
    })?;
    if found != FORMAT_VERSION.to_string() {
        return Err(Error::Version {
            found: format!("{kind} v{found}"),
            expected: format!("{kind} v{FORMAT_VERSION}"),
        });
    }
    let mut meta = Metadata::new();
    let mut offset = first_raw.len();
    let mut line_no = 1;
    for line in lines {
        let Some(rest) = line.strip_prefix("# ") else { break };
        line_no += 1;
        let (k, v) = rest.trim_end().split_once(": ").ok_or_else(|| Error::Format {
            line: line_no,
            message: "metadata lines must read '# key: value'".into(),
        })?;
        meta.entries.push((k.to_string(), v.to_string()));
        offset += line.len();
    }
    Ok(Parsed {
        meta,
        body: text.get(offset..).unwrap_or(""),
        body_line: line_no + 1,
    })
}

fn csv_writer<W: Write>(w: W) -> csv::Writer<W> {
    csv::WriterBuilder::new().has_headers(false).from_writer(w)
}

struct Body<'a> {
    header: Vec<String>,
    rows: Vec<(usize, csv::StringRecord)>,
    kind: &'a str,
}

impl Body<'_> {
    fn parse<'b>(parsed: &Parsed<'b>, kind: &'b str, expected: &[&str]) -> Result<Body<'b>> {
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(true)
            .from_reader(parsed.body.as_bytes());
        let header: Vec<String> = reader.headers()?.iter().map(str::to_string).collect();
        if header != expected {
            return Err(Error::Format {
                line: parsed.body_line,
                message: format!("{kind} columns must be {}", expected.join(",")),
            });
        }
        let mut rows = Vec::new();
        for (i, rec) in reader.records().enumerate() {
            rows.push((parsed.body_line + 1 + i, rec?));
        }
        Ok(Body { header, rows, kind })
    }

    fn col(&self, name: &str) -> usize {
        self.header.iter().position(|h| h == name).expect("column checked against the schema")
    }
}

fn field<T: std::str::FromStr>(rec: &(usize, csv::StringRecord), idx: usize, name: &str) -> Result<T> {
    let raw = rec.1.get(idx).unwrap_or("");
    raw.parse().map_err(|_| Error::Format {
        line: rec.0,
        message: format!("column '{name}' has invalid value '{raw}'"),
    })
}

fn optional<T: std::str::FromStr>(rec: &(usize, csv::StringRecord), idx: usize, name: &str) -> Result<Option<T>> {
    match rec.1.get(idx).unwrap_or("") {
        "" => Ok(None),
        _ => field(rec, idx, name).map(Some),
    }
}

fn flag(rec: &(usize, csv::StringRecord), idx: usize, name: &str) -> Result<bool> {
    match rec.1.get(idx).unwrap_or("") {
        "true" => Ok(true),
        "false" => Ok(false),
        raw => Err(Error::Format {
            line: rec.0,
            message: format!("column '{name}' must be true or false, found '{raw}'"),
        }),
    }
}

fn opt_string<T: ToString>(v: Option<T>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

// --- datasets -------------------------------------------------------------

const DATASET_ONE_COLUMNS: [&str; 7] = ["id", "k", "A", "L", "k_star", "Y_next", "forced"];
const DATASET_TWO_COLUMNS: [&str; 9] = ["id", "k", "A", "L", "k_star", "Y_next", "forced", "U", "T"];

/// Writes a long-format dataset. For study II `k_star` is the first treated
/// visit so far (treatment may stop again).
pub fn write_dataset(w: &mut impl Write, data: &LongDataset, meta: &Metadata) -> Result<()> {
    let meta = match data {
        LongDataset::One(d) => meta
            .clone()
            .with("study", 1)
            .with("n", d.n)
            .with("visits", d.visits)
            .with("checkup_spacing", d.checkup_spacing),
        LongDataset::Two(d) => meta
            .clone()
            .with("study", 2)
            .with("n", d.n)
            .with("visits", d.visits)
            .with("nonpositive_hazards", d.nonpositive_hazards),
    };
    write_header(w, "dataset", &meta)?;
    let mut out = csv_writer(w);
    match data {
        LongDataset::One(d) => {
            out.write_record(DATASET_ONE_COLUMNS)?;
            for r in &d.records {
                out.write_record([
                    r.id.to_string(),
                    r.k.to_string(),
                    r.a.to_string(),
                    r.l.to_string(),
                    opt_string(r.k_star),
                    r.y_next.to_string(),
                    r.forced.to_string(),
                ])?;
            }
        }
        LongDataset::Two(d) => {
            out.write_record(DATASET_TWO_COLUMNS)?;
            let mut k_star = None;
            for (i, r) in d.records.iter().enumerate() {
                if i == 0 || d.records[i - 1].id != r.id {
                    k_star = None;
                }
                if r.a == 1 && k_star.is_none() {
                    k_star = Some(r.k);
                }
                out.write_record([
                    r.id.to_string(),
                    r.k.to_string(),
                    r.a.to_string(),
                    r.l.to_string(),
                    opt_string(k_star),
                    r.y_next.to_string(),
                    r.forced.to_string(),
                    r.u.to_string(),
                    opt_string(r.t),
                ])?;
            }
        }
    }
    out.flush()?;
    Ok(())
}

pub fn read_dataset(text: &str) -> Result<(Metadata, LongDataset)> {
    let parsed = read_header(text, "dataset")?;
    let meta = parsed.meta.clone();
    let study: u8 = meta.parse("study")?;
    let n: usize = meta.parse("n")?;
    let visits: usize = meta.parse("visits")?;
    let data = match study {
        1 => {
            let body = Body::parse(&parsed, "dataset", &DATASET_ONE_COLUMNS)?;
            let c = |name| body.col(name);
            let mut records = Vec::with_capacity(body.rows.len());
            for rec in &body.rows {
                records.push(VisitRecordOne {
                    id: field(rec, c("id"), "id")?,
                    k: field(rec, c("k"), "k")?,
                    a: field(rec, c("A"), "A")?,
                    l: field(rec, c("L"), "L")?,
                    k_star: optional(rec, c("k_star"), "k_star")?,
                    y_next: field(rec, c("Y_next"), "Y_next")?,
                    forced: flag(rec, c("forced"), "forced")?,
                });
            }
            LongDataset::One(StudyOneData {
                n,
                visits,
                checkup_spacing: meta.parse("checkup_spacing")?,
                records,
            })
        }
        2 => {
            let body = Body::parse(&parsed, "dataset", &DATASET_TWO_COLUMNS)?;
            let c = |name| body.col(name);
            let mut records = Vec::with_capacity(body.rows.len());
            for rec in &body.rows {
                records.push(VisitRecordTwo {
                    id: field(rec, c("id"), "id")?,
                    k: field(rec, c("k"), "k")?,
                    a: field(rec, c("A"), "A")?,
                    l: field(rec, c("L"), "L")?,
                    u: field(rec, c("U"), "U")?,
                    y_next: field(rec, c("Y_next"), "Y_next")?,
                    t: optional(rec, c("T"), "T")?,
                    forced: flag(rec, c("forced"), "forced")?,
                });
            }
            LongDataset::Two(StudyTwoData {
                n,
                visits,
                records,
                nonpositive_hazards: meta.parse("nonpositive_hazards")?,
            })
        }
        other => {
            return Err(Error::Format {
                line: 1,
                message: format!("unknown study {other}"),
            })
        }
    };
    Ok((meta, data))
}

// --- weights and fits ----------------------------------------------------

pub fn write_weights(w: &mut impl Write, table: &WeightTable) -> Result<()> {
    let meta = Metadata::new().with("truncation", table.truncation).with(
        "bounds",
        table.bounds.map(|(lo, hi)| format!("{lo} {hi}")).unwrap_or_else(|| "none".into()),
    );
    write_header(w, "weights", &meta)?;
    let mut out = csv_writer(w);
    out.write_record(["id", "k", "numerator_prob", "denominator_prob", "sw", "sw_truncated", "extreme"])?;
    for r in &table.rows {
        out.write_record([
            r.id.to_string(),
            r.k.to_string(),
            r.numerator_prob.to_string(),
            r.denominator_prob.to_string(),
            r.sw.to_string(),
            r.sw_truncated.to_string(),
            r.extreme.to_string(),
        ])?;
    }
    out.flush()?;
    Ok(())
}

/// One row per coefficient.
pub fn write_logit_fit(w: &mut impl Write, fit: &LogitMsmFit) -> Result<()> {
    let meta = Metadata::new()
        .with("gform", fit.gform.name())
        .with("converged", fit.fit.converged)
        .with("iterations", fit.fit.iterations)
        .with("separation", fit.fit.separation_flag);
    write_header(w, "logit-fit", &meta)?;
    let mut out = csv_writer(w);
    out.write_record(["coefficient", "estimate"])?;
    for (i, c) in fit.coefficients.iter().enumerate() {
        out.write_record([i.to_string(), c.to_string()])?;
    }
    out.flush()?;
    Ok(())
}

/// One row per event time per cumulative coefficient; `C0` is the intercept
/// and `CA<j>` the lag-`j` treatment coefficient.
pub fn write_aalen_fit(w: &mut impl Write, fit: &AalenMsmFit) -> Result<()> {
    write_header(w, "aalen-fit", &Metadata::new().with("visits", fit.visits))?;
    let mut out = csv_writer(w);
    out.write_record(["t", "coefficient", "increment", "cumulative", "identified"])?;
    let mut cum = vec![0.0; fit.columns()];
    for (e, &t) in fit.event_times.iter().enumerate() {
        for c in 0..fit.columns() {
            cum[c] += fit.increments[e][c];
            let name = if c == 0 { "C0".to_string() } else { format!("CA{}", c - 1) };
            out.write_record([
                t.to_string(),
                name,
                fit.increments[e][c].to_string(),
                cum[c].to_string(),
                fit.identified[e][c].to_string(),
            ])?;
        }
    }
    out.flush()?;
    Ok(())
}

// --- truth ----------------------------------------------------------------

const TRUTH_COLUMNS: [&str; 4] = ["quantity", "t", "value", "mc_se"];

#[derive(Debug, Clone, PartialEq)]
pub enum TruthFile {
    One(TruthSetOne),
    Two(TruthSetTwo),
}

pub fn write_truth_one(w: &mut impl Write, truth: &TruthSetOne) -> Result<()> {
    write_header(w, "truth", &Metadata::new().with("study", 1))?;
    let mut out = csv_writer(w);
    out.write_record(TRUTH_COLUMNS)?;
    for (name, g) in ["gamma0", "gammaA1", "gammaA2", "gammaA3"].iter().zip(truth.gamma) {
        out.write_record([name.to_string(), String::new(), g.to_string(), String::new()])?;
    }
    for (name, curve) in [("S_always", &truth.always), ("S_never", &truth.never)] {
        for (t, s) in curve.iter().enumerate() {
            out.write_record([name.to_string(), t.to_string(), s.to_string(), String::new()])?;
        }
    }
    out.flush()?;
    Ok(())
}

pub fn write_truth_two(w: &mut impl Write, truth: &TruthSetTwo) -> Result<()> {
    let alpha = truth.alpha.iter().map(f64::to_string).collect::<Vec<_>>().join(" ");
    let meta = Metadata::new()
        .with("study", 2)
        .with("n_oracle", truth.n_oracle)
        .with("seed", truth.seed)
        .with("alpha", alpha);
    write_header(w, "truth", &meta)?;
    let mut out = csv_writer(w);
    out.write_record(TRUTH_COLUMNS)?;
    let mut row = |q: &str, t: f64, v: f64, se: Option<f64>| {
        out.write_record([q.to_string(), t.to_string(), v.to_string(), opt_string(se)])
    };
    for (g, &t) in truth.grid.iter().enumerate() {
        row("C0", t, truth.c0[g], Some(truth.c0_se[g]))?;
    }
    for j in 0..truth.c_lag.len() {
        for (g, &t) in truth.grid.iter().enumerate() {
            row(&format!("CA{j}"), t, truth.c_lag[j][g], Some(truth.c_lag_se[j][g]))?;
        }
    }
    for (g, &t) in truth.grid.iter().enumerate() {
        row("S_always", t, truth.survival_always[g], None)?;
        row("S_never", t, truth.survival_never[g], None)?;
        row("S_always_empirical", t, truth.empirical_always[g], None)?;
        row("S_never_empirical", t, truth.empirical_never[g], None)?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_truth(text: &str) -> Result<TruthFile> {
    let parsed = read_header(text, "truth")?;
    let body = Body::parse(&parsed, "truth", &TRUTH_COLUMNS)?;
    let study: u8 = parsed.meta.parse("study")?;
    let mut rows = Vec::with_capacity(body.rows.len());
    for rec in &body.rows {
        let q: String = field(rec, 0, "quantity")?;
        let t: Option<f64> = optional(rec, 1, "t")?;
        let v: f64 = field(rec, 2, "value")?;
        let se: Option<f64> = optional(rec, 3, "mc_se")?;
        rows.push((rec.0, q, t, v, se));
    }
    let missing = |what: &str| Error::Format {
        line: parsed.body_line,
        message: format!("{} file lacks {what}", body.kind),
    };
    match study {
        1 => {
            let mut gamma = [f64::NAN; 4];
            let mut always = Vec::new();
            let mut never = Vec::new();
            for (line, q, _, v, _) in &rows {
                match q.as_str() {
                    "gamma0" => gamma[0] = *v,
                    "gammaA1" => gamma[1] = *v,
                    "gammaA2" => gamma[2] = *v,
                    "gammaA3" => gamma[3] = *v,
                    "S_always" => always.push(*v),
                    "S_never" => never.push(*v),
                    other => {
                        return Err(Error::Format {
                            line: *line,
                            message: format!("unknown quantity '{other}'"),
                        })
                    }
                }
            }
            if gamma.iter().any(|g| g.is_nan()) || always.is_empty() || always.len() != never.len() {
                return Err(missing("gamma or survival rows"));
            }
            Ok(TruthFile::One(TruthSetOne { gamma, always, never }))
        }
        2 => {
            let alpha: Vec<f64> = parsed
                .meta
                .require("alpha")?
                .split_whitespace()
                .map(|s| s.parse())
                .collect::<std::result::Result<_, _>>()
                .map_err(|_| missing("a valid alpha"))?;
            let alpha: [f64; 4] = alpha.try_into().map_err(|_| missing("four alpha values"))?;
            let grid: Vec<f64> = rows.iter().filter(|r| r.1 == "C0").filter_map(|r| r.2).collect();
            if grid.is_empty() {
                return Err(missing("C0 rows"));
            }
            let series = |name: &str, se: bool| -> Result<Vec<f64>> {
                let v: Vec<f64> = rows
                    .iter()
                    .filter(|r| r.1 == name)
                    .map(|r| if se { r.4.unwrap_or(f64::NAN) } else { r.3 })
                    .collect();
                if v.len() == grid.len() {
                    Ok(v)
                } else {
                    Err(missing(&format!("{} {name} rows", grid.len())))
                }
            };
            let lags = rows.iter().filter(|r| r.1.starts_with("CA")).count() / grid.len();
            let mut c_lag = Vec::with_capacity(lags);
            let mut c_lag_se = Vec::with_capacity(lags);
            for j in 0..lags {
                c_lag.push(series(&format!("CA{j}"), false)?);
                c_lag_se.push(series(&format!("CA{j}"), true)?);
            }
            Ok(TruthFile::Two(TruthSetTwo {
                n_oracle: parsed.meta.parse("n_oracle")?,
                seed: parsed.meta.parse("seed")?,
                alpha,
                c0: series("C0", false)?,
                c0_se: series("C0", true)?,
                c_lag,
                c_lag_se,
                survival_always: series("S_always", false)?,
                survival_never: series("S_never", false)?,
                empirical_always: series("S_always_empirical", false)?,
                empirical_never: series("S_never_empirical", false)?,
                grid,
            }))
        }
        other => Err(Error::Format {
            line: 1,
            message: format!("unknown study {other}"),
        }),
    }
}

// --- results and curves ---------------------------------------------------

const RESULTS_COLUMNS: [&str; 19] = [
    "scenario",
    "study",
    "n",
    "pi",
    "tau",
    "truncation",
    "replications",
    "successes",
    "failed",
    "failure_reasons",
    "estimand",
    "truth",
    "count",
    "nonfinite",
    "mean",
    "bias",
    "emp_se",
    "rmse",
    "mc_se",
];

pub fn write_results(w: &mut impl Write, results: &[ScenarioResult], meta: &Metadata) -> Result<()> {
    write_header(w, "results", meta)?;
    let mut out = csv_writer(w);
    out.write_record(RESULTS_COLUMNS)?;
    for r in results {
        let c = &r.config;
        let reasons = r
            .failures
            .iter()
            .map(|(k, v)| format!("{k}:{v}"))
            .collect::<Vec<_>>()
            .join(";");
        let successes = c.replications - r.failed();
        for e in &r.estimands {
            out.write_record([
                c.id(),
                c.study().to_string(),
                c.n().to_string(),
                c.pi.to_string(),
                c.tau.to_string(),
                c.truncation.to_string(),
                c.replications.to_string(),
                successes.to_string(),
                r.failed().to_string(),
                reasons.clone(),
                e.name.clone(),
                e.truth.to_string(),
                e.count.to_string(),
                e.nonfinite.to_string(),
                opt_string(e.mean),
                opt_string(e.bias),
                opt_string(e.emp_se),
                opt_string(e.rmse),
                opt_string(e.mc_se),
            ])?;
        }
    }
    out.flush()?;
    Ok(())
}

const CURVES_COLUMNS: [&str; 8] = ["scenario", "panel", "tau", "truncation", "regime", "t", "mean_survival", "true_survival"];

#[derive(Debug, Clone, PartialEq)]
pub struct CurveRow {
    pub scenario: String,
    pub panel: String,
    pub tau: f64,
    pub truncation: String,
    pub regime: Regime,
    pub t: f64,
    pub mean: f64,
    pub truth: Option<f64>,
}

pub fn curve_rows(results: &[ScenarioResult]) -> Vec<CurveRow> {
    let mut rows = Vec::new();
    for r in results {
        for p in &r.curves {
            rows.push(CurveRow {
                scenario: r.config.id(),
                panel: r.config.panel_id(),
                tau: r.config.tau,
                truncation: r.config.truncation.to_string(),
                regime: p.regime,
                t: p.t,
                mean: p.mean,
                truth: p.truth,
            });
        }
    }
    rows
}

pub fn write_curves(w: &mut impl Write, rows: &[CurveRow], meta: &Metadata) -> Result<()> {
    write_header(w, "curves", meta)?;
    let mut out = csv_writer(w);
    out.write_record(CURVES_COLUMNS)?;
    for r in rows {
        out.write_record([
            r.scenario.clone(),
            r.panel.clone(),
            r.tau.to_string(),
            r.truncation.clone(),
            r.regime.label().to_string(),
            r.t.to_string(),
            r.mean.to_string(),
            opt_string(r.truth),
        ])?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_curves(text: &str) -> Result<(Metadata, Vec<CurveRow>)> {
    let parsed = read_header(text, "curves")?;
    let body = Body::parse(&parsed, "curves", &CURVES_COLUMNS)?;
    let mut rows = Vec::with_capacity(body.rows.len());
    for rec in &body.rows {
        let regime: String = field(rec, 4, "regime")?;
        rows.push(CurveRow {
            scenario: field(rec, 0, "scenario")?,
            panel: field(rec, 1, "panel")?,
            tau: field(rec, 2, "tau")?,
            truncation: field(rec, 3, "truncation")?,
            regime: regime.parse().map_err(|_| Error::Format {
                line: rec.0,
                message: format!("unknown regime '{regime}'"),
            })?,
            t: field(rec, 5, "t")?,
            mean: field(rec, 6, "mean_survival")?,
            truth: optional(rec, 7, "true_survival")?,
        });
    }
    Ok((parsed.meta, rows))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::genmodel_one::{simulate_dataset_one, StudyOneParams};
    use crate::genmodel_two::{simulate_dataset_two, StudyTwoParams};
    use crate::truth::{compute_truth_two, true_params_one};

    fn round_trip(data: LongDataset) {
        let mut buf = Vec::new();
        write_dataset(&mut buf, &data, &Metadata::new().with("seed", 3)).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let (meta, back) = read_dataset(&text).unwrap();
        assert_eq!(meta.get("seed"), Some("3"));
        assert_eq!(back, data);
    }

    #[test]
    fn datasets_round_trip_bit_exact() {
        round_trip(LongDataset::One(simulate_dataset_one(&StudyOneParams::benchmark(30), 0, 3).unwrap()));
        round_trip(LongDataset::Two(simulate_dataset_two(&StudyTwoParams::benchmark(30), 0, 3).unwrap()));
    }

    #[test]
    fn truth_round_trips() {
        let one = true_params_one();
        let mut buf = Vec::new();
        write_truth_one(&mut buf, &one).unwrap();
        assert_eq!(read_truth(std::str::from_utf8(&buf).unwrap()).unwrap(), TruthFile::One(one));

        let two = compute_truth_two(4_000, 5).unwrap();
        let mut buf = Vec::new();
        write_truth_two(&mut buf, &two).unwrap();
        assert_eq!(read_truth(std::str::from_utf8(&buf).unwrap()).unwrap(), TruthFile::Two(two));
    }

    #[test]
    fn rejects_unknown_versions_and_kinds() {
        let err = read_truth("# posim-truth v2\nquantity,t,value,mc_se\n").unwrap_err();
        assert!(matches!(err, Error::Version { .. }));
        let err = read_truth("# posim-curves v1\n").unwrap_err();
        assert!(matches!(err, Error::Format { line: 1, .. }));
        let err = read_curves("id,k\n1,2\n").unwrap_err();
        assert!(matches!(err, Error::Format { line: 1, .. }));
    }

    #[test]
    fn bad_field_reports_line() {
        let text = "# posim-dataset v1\n# study: 1\n# n: 1\n# visits: 40\n# checkup_spacing: 5\n\
                    id,k,A,L,k_star,Y_next,forced\n0,0,0,500,,0,false\n0,1,x,500,,0,false\n";
        match read_dataset(text).unwrap_err() {
            Error::Format { line, message } => {
                assert_eq!(line, 8);
                assert!(message.contains("'A'"));
            }
            e => panic!("unexpected {e}"),
        }
    }
}
