//! Long-format person-visit records: one row per subject per visit at which
//! the subject is still at risk.

/// One person-visit of study I.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VisitRecordOne {
    pub id: usize,
    pub k: usize,
    pub a: u8,
    /// CD4 count (cells/µL).
    pub l: f64,
    /// Treatment initiation visit, once treatment has started.
    pub k_star: Option<usize>,
    /// Failure in `(k, k + 1]`.
    pub y_next: u8,
    /// Exposure at this visit was set by the positivity-violation rule.
    pub forced: bool,
}

/// One person-visit of study II.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VisitRecordTwo {
    pub id: usize,
    pub k: usize,
    pub a: u8,
    pub l: f64,
    /// Subject frailty, constant across the subject's records.
    pub u: f64,
    pub y_next: u8,
    /// Event or censoring time; only on the subject's last record.
    pub t: Option<f64>,
    pub forced: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StudyOneData {
    pub n: usize,
    pub visits: usize,
    pub checkup_spacing: usize,
    pub records: Vec<VisitRecordOne>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StudyTwoData {
    pub n: usize,
    pub visits: usize,
    pub records: Vec<VisitRecordTwo>,
    /// Intervals whose conditional hazard was non-positive and were treated
    /// as event-free.
    pub nonpositive_hazards: usize,
}

/// Either study's dataset; the on-disk exchange unit.
#[derive(Debug, Clone, PartialEq)]
pub enum LongDataset {
    One(StudyOneData),
    Two(StudyTwoData),
}

/// Splits records (sorted by id, then k) into contiguous per-subject runs.
pub(crate) fn subject_runs<T>(records: &[T], id_of: impl Fn(&T) -> usize) -> Vec<std::ops::Range<usize>> {
    let mut runs = Vec::new();
    let mut start = 0;
    for i in 1..=records.len() {
        if i == records.len() || id_of(&records[i]) != id_of(&records[start]) {
            if start < i {
                runs.push(start..i);
            }
            start = i;
        }
    }
    runs
}

impl StudyOneData {
    pub fn subjects(&self) -> Vec<&[VisitRecordOne]> {
        subject_runs(&self.records, |r| r.id)
            .into_iter()
            .map(|r| &self.records[r])
            .collect()
    }
}

impl StudyTwoData {
    pub fn subjects(&self) -> Vec<&[VisitRecordTwo]> {
        subject_runs(&self.records, |r| r.id)
            .into_iter()
            .map(|r| &self.records[r])
            .collect()
    }

    /// Pooled biomarker history across all emitted records.
    pub fn biomarker_history(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.l).collect()
    }
}
