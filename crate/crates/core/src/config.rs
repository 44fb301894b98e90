//! Run configuration: flat `key = value[, value...]` text.
//!
//! ```text
//! # study I, benchmark and one violation level
//! study = 1
//! n = 1000
//! pi = 1, 0.05
//! tau = 500
//! truncation = NoWT, 1-99
//! replications = 200
//! seed = 7
//! ```
//!
//! `#` starts a comment. Omitted grid keys take the default factorial grid of
//! the study. `truth` names the study II truth file, relative to the config
//! file. Every problem is reported with its line number.

use std::fmt::Write as _;
use std::str::FromStr;

use crate::error::{ConfigIssue, Error, Result};
use crate::harness::{
    factorial_grid, ScenarioConfig, Study, DEFAULT_PI, DEFAULT_REPLICATIONS, DEFAULT_SAMPLE_SIZES, DEFAULT_TAU_ONE,
    DEFAULT_TAU_TWO, DEFAULT_TRUNCATIONS,
};
use crate::weights::TruncationStrategy;

const KEYS: [&str; 8] = ["study", "n", "pi", "tau", "truncation", "replications", "seed", "truth"];

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub study: Study,
    pub sizes: Vec<usize>,
    pub pis: Vec<f64>,
    pub taus: Vec<f64>,
    pub truncations: Vec<TruncationStrategy>,
    pub replications: usize,
    /// `None` leaves the choice to the caller (environment fallback).
    pub seed: Option<u64>,
    pub truth: Option<String>,
}

impl RunConfig {
    pub fn grid(&self, master_seed: u64) -> Result<Vec<ScenarioConfig>> {
        factorial_grid(
            self.study,
            &self.sizes,
            &self.pis,
            &self.taus,
            &self.truncations,
            self.replications,
            master_seed,
        )
    }

    /// Renders the configuration in the syntax accepted by [`parse_config`].
    pub fn render(&self) -> String {
        fn list<T: ToString>(v: &[T]) -> String {
            v.iter().map(T::to_string).collect::<Vec<_>>().join(", ")
        }
        let mut s = String::new();
        let _ = writeln!(s, "study = {}", self.study);
        let _ = writeln!(s, "n = {}", list(&self.sizes));
        let _ = writeln!(s, "pi = {}", list(&self.pis));
        let _ = writeln!(s, "tau = {}", list(&self.taus));
        let _ = writeln!(s, "truncation = {}", list(&self.truncations));
        let _ = writeln!(s, "replications = {}", self.replications);
        if let Some(seed) = self.seed {
            let _ = writeln!(s, "seed = {seed}");
        }
        if let Some(t) = &self.truth {
            let _ = writeln!(s, "truth = {t}");
        }
        s
    }
}

fn parse_list<T: FromStr>(
    raw: &str,
    line: usize,
    key: &str,
    check: impl Fn(&T) -> Option<String>,
    issues: &mut Vec<ConfigIssue>,
) -> Option<Vec<T>> {
    let mut out = Vec::new();
    for item in raw.split(',').map(str::trim) {
        if item.is_empty() {
            issues.push(ConfigIssue {
                line,
                message: format!("'{key}' has an empty list entry"),
            });
            return None;
        }
        match item.parse::<T>() {
            Ok(v) => {
                if let Some(problem) = check(&v) {
                    issues.push(ConfigIssue {
                        line,
                        message: format!("'{key}' value {item}: {problem}"),
                    });
                    return None;
                }
                out.push(v)
            }
            Err(_) => {
                issues.push(ConfigIssue {
                    line,
                    message: format!("'{key}' has invalid value '{item}'"),
                });
                return None;
            }
        }
    }
    Some(out)
}

fn single<T>(v: Option<Vec<T>>, line: usize, key: &str, issues: &mut Vec<ConfigIssue>) -> Option<T> {
    let mut v = v?;
    if v.len() != 1 {
        issues.push(ConfigIssue {
            line,
            message: format!("'{key}' takes a single value"),
        });
        return None;
    }
    v.pop()
}

pub fn parse_config(text: &str) -> Result<RunConfig> {
    let mut issues = Vec::new();
    let mut seen: Vec<(&str, usize)> = Vec::new();
    let mut study = None;
    let mut sizes = None;
    let mut pis = None;
    let mut taus = None;
    let mut truncations = None;
    let mut replications = None;
    let mut seed = None;
    let mut truth = None;

    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let Some((key, value)) = content.split_once('=') else {
            issues.push(ConfigIssue {
                line,
                message: format!("expected 'key = value', found '{content}'"),
            });
            continue;
        };
        let (key, value) = (key.trim(), value.trim());
        let Some(&key) = KEYS.iter().find(|k| **k == key) else {
            issues.push(ConfigIssue {
                line,
                message: format!("unknown key '{key}' (expected one of {})", KEYS.join(", ")),
            });
            continue;
        };
        if let Some((_, first)) = seen.iter().find(|(k, _)| *k == key) {
            issues.push(ConfigIssue {
                line,
                message: format!("'{key}' already set on line {first}"),
            });
            continue;
        }
        seen.push((key, line));
        match key {
            "study" => {
                let v = parse_list::<Study>(value, line, key, |_| None, &mut issues);
                study = single(v, line, key, &mut issues);
            }
            "n" => {
                sizes = parse_list::<usize>(value, line, key, |&n| (n == 0).then(|| "must be positive".into()), &mut issues)
            }
            "pi" => {
                pis = parse_list::<f64>(
                    value,
                    line,
                    key,
                    |p| (!(0.0..=1.0).contains(p)).then(|| "must lie in [0, 1]".into()),
                    &mut issues,
                )
            }
            "tau" => {
                taus = parse_list::<f64>(value, line, key, |t| (!t.is_finite()).then(|| "must be finite".into()), &mut issues)
            }
            "truncation" => truncations = parse_list::<TruncationStrategy>(value, line, key, |_| None, &mut issues),
            "replications" => {
                let v = parse_list::<usize>(value, line, key, |&b| (b == 0).then(|| "must be positive".into()), &mut issues);
                replications = single(v, line, key, &mut issues);
            }
            "seed" => {
                let v = parse_list::<u64>(value, line, key, |_| None, &mut issues);
                seed = single(v, line, key, &mut issues);
            }
            "truth" => {
                if value.is_empty() {
                    issues.push(ConfigIssue {
                        line,
                        message: "'truth' needs a file path".into(),
                    });
                } else {
                    truth = Some(value.to_string());
                }
            }
            _ => unreachable!("key list is exhaustive"),
        }
    }

    let study = match study {
        Some(s) => Some(s),
        None => {
            if !seen.iter().any(|(k, _)| *k == "study") {
                issues.push(ConfigIssue {
                    line: 0,
                    message: "missing required key 'study'".into(),
                });
            }
            None
        }
    };
    if let Some(Study::One) = study {
        if let Some(&(_, line)) = seen.iter().find(|(k, _)| *k == "truth") {
            issues.push(ConfigIssue {
                line,
                message: "'truth' applies to study 2 only; study 1 truth is built in".into(),
            });
        }
    }
    if !issues.is_empty() {
        return Err(Error::Config(issues));
    }
    let study = study.expect("missing study reported above");
    let default_taus: &[f64] = match study {
        Study::One => &DEFAULT_TAU_ONE,
        Study::Two => &DEFAULT_TAU_TWO,
    };
    Ok(RunConfig {
        study,
        sizes: sizes.unwrap_or_else(|| DEFAULT_SAMPLE_SIZES.to_vec()),
        pis: pis.unwrap_or_else(|| DEFAULT_PI.to_vec()),
        taus: taus.unwrap_or_else(|| default_taus.to_vec()),
        truncations: truncations.unwrap_or_else(|| DEFAULT_TRUNCATIONS.to_vec()),
        replications: replications.unwrap_or(DEFAULT_REPLICATIONS),
        seed,
        truth,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_example() {
        let cfg = parse_config(
            "# demo\nstudy = 1\nn = 1000\npi = 1, 0.05  # two levels\ntau = 500\n\
             truncation = NoWT, 1-99\nreplications = 200\nseed = 7\n",
        )
        .unwrap();
        assert_eq!(cfg.study, Study::One);
        assert_eq!(cfg.pis, vec![1.0, 0.05]);
        assert_eq!(cfg.truncations, vec![TruncationStrategy::NoWT, TruncationStrategy::P1_99]);
        assert_eq!(cfg.seed, Some(7));
        assert_eq!(cfg.grid(7).unwrap().len(), 4);
        assert_eq!(parse_config(&cfg.render()).unwrap(), cfg);
    }

    #[test]
    fn defaults_fill_the_paper_grid() {
        let cfg = parse_config("study = 2\ntruth = t.csv\n").unwrap();
        assert_eq!(cfg.taus, DEFAULT_TAU_TWO.to_vec());
        assert_eq!(cfg.replications, 1000);
        assert_eq!(cfg.seed, None);
        assert_eq!(cfg.grid(0).unwrap().len(), 720);
    }

    #[test]
    fn every_problem_reported_with_its_line() {
        let err = parse_config("n = 10, x\nbogus = 1\npi = 1.5\nn = 5\nreplications = 1, 2\nnonsense\n").unwrap_err();
        let Error::Config(issues) = err else { panic!("expected config error") };
        let lines: Vec<usize> = issues.iter().map(|i| i.line).collect();
        assert_eq!(lines, vec![1, 2, 3, 4, 5, 6, 0]);
        assert!(issues[6].message.contains("study"));
        let text = Error::Config(issues).to_string();
        assert!(text.contains("line 3: 'pi' value 1.5"));
    }

    #[test]
    fn truth_rejected_for_study_one() {
        assert!(parse_config("study = 1\ntruth = x\n").is_err());
    }
}
