use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt::{self, Write};

use crate::error::{Error, Result};

/// Grade on the five-step impairment scale, 0 (imperceptible) to -4 (very
/// annoying).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Odg(i8);

impl Odg {
    pub const SCALE: [i8; 5] = [0, -1, -2, -3, -4];

    pub fn new(grade: i32) -> Result<Self> {
        if (-4..=0).contains(&grade) {
            Ok(Self(grade as i8))
        } else {
            Err(Error::GradeOutOfScale(grade))
        }
    }

    pub fn value(self) -> i8 {
        self.0
    }

    /// Index into a count array ordered 0, -1, ..., -4.
    pub fn index(self) -> usize {
        (-self.0) as usize
    }

    pub fn label(self) -> &'static str {
        match self.0 {
            0 => "Imperceptible",
            -1 => "Perceptible, but not annoying",
            -2 => "Slightly annoying",
            -3 => "Annoying",
            _ => "Very annoying",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GradeRecord {
    pub grader_id: String,
    pub presentation_id: String,
    pub odg: Odg,
    /// Milliseconds since the Unix epoch.
    pub timestamp_ms: u64,
}

/// A grade joined with the (unblinded) labels of its presentation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabeledGrade {
    pub record: GradeRecord,
    pub model: String,
    pub dataset: String,
}

/// Count, mean and spread of a set of grades.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OdgStats {
    /// Counts for grades 0, -1, -2, -3, -4.
    pub counts: [u64; 5],
    pub n: u64,
    pub mean: f64,
    /// Square root of the unbiased (n - 1) variance; 0 when n < 2.
    pub std_sample: f64,
    /// Square root of the population (n) variance.
    pub std_population: f64,
}

impl OdgStats {
    pub fn from_counts(counts: [u64; 5]) -> Result<Self> {
        let n: u64 = counts.iter().sum();
        if n == 0 {
            return Err(Error::Empty("grades"));
        }
        let nf = n as f64;
        let sum: f64 = counts
            .iter()
            .enumerate()
            .map(|(k, &c)| -(k as f64) * c as f64)
            .sum();
        let mean = sum / nf;
        let ss: f64 = counts
            .iter()
            .enumerate()
            .map(|(k, &c)| {
                let d = -(k as f64) - mean;
                c as f64 * d * d
            })
            .sum();
        Ok(Self {
            counts,
            n,
            mean,
            std_sample: if n > 1 {
                libm::sqrt(ss / (nf - 1.0))
            } else {
                0.0
            },
            std_population: libm::sqrt(ss / nf),
        })
    }

    pub fn from_grades(grades: impl IntoIterator<Item = Odg>) -> Result<Self> {
        let mut counts = [0u64; 5];
        for g in grades {
            counts[g.index()] += 1;
        }
        Self::from_counts(counts)
    }

    /// Pool several groups as if all grades were one sample.
    pub fn pooled<'a>(groups: impl IntoIterator<Item = &'a OdgStats>) -> Result<Self> {
        let mut counts = [0u64; 5];
        for g in groups {
            for (c, gc) in counts.iter_mut().zip(g.counts) {
                *c += gc;
            }
        }
        Self::from_counts(counts)
    }

    /// Default spread statistic (sample convention).
    pub fn std(&self) -> f64 {
        self.std_sample
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Grouping {
    Model,
    Dataset,
    ModelDataset,
}

impl Grouping {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "model" => Some(Self::Model),
            "dataset" => Some(Self::Dataset),
            "model,dataset" | "dataset,model" => Some(Self::ModelDataset),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::Model => "model",
            Self::Dataset => "dataset",
            Self::ModelDataset => "model,dataset",
        }
    }
}

/// Group key; a field is `None` when the grouping does not split on it.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct GroupKey {
    pub model: Option<String>,
    pub dataset: Option<String>,
}

impl GroupKey {
    pub fn label(&self) -> String {
        match (&self.model, &self.dataset) {
            (Some(m), Some(d)) => alloc::format!("{m} {d}"),
            (Some(m), None) => m.clone(),
            (None, Some(d)) => d.clone(),
            (None, None) => "all".to_string(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OdgTable {
    pub grouping: Grouping,
    pub rows: Vec<(GroupKey, OdgStats)>,
    /// All grades of each model pooled across datasets.
    pub overall: Vec<(String, OdgStats)>,
}

impl OdgTable {
    /// Assemble a table from per-group counts.
    pub fn from_counts(grouping: Grouping, groups: Vec<(GroupKey, [u64; 5])>) -> Result<Self> {
        let mut rows = Vec::with_capacity(groups.len());
        for (k, c) in groups {
            rows.push((k, OdgStats::from_counts(c)?));
        }
        let mut models: BTreeMap<String, Vec<OdgStats>> = BTreeMap::new();
        for (k, s) in &rows {
            if let Some(m) = &k.model {
                models.entry(m.clone()).or_default().push(*s);
            }
        }
        let overall = models
            .into_iter()
            .map(|(m, s)| Ok((m, OdgStats::pooled(&s)?)))
            .collect::<Result<_>>()?;
        Ok(Self {
            grouping,
            rows,
            overall,
        })
    }

    pub fn row(&self, model: Option<&str>, dataset: Option<&str>) -> Option<&OdgStats> {
        self.rows
            .iter()
            .find(|(k, _)| k.model.as_deref() == model && k.dataset.as_deref() == dataset)
            .map(|(_, s)| s)
    }

    pub fn overall(&self, model: &str) -> Option<&OdgStats> {
        self.overall
            .iter()
            .find(|(m, _)| m == model)
            .map(|(_, s)| s)
    }

    /// Plain-text rendering: one column per group, rows for each grade's
    /// count followed by mean and standard deviation.
    pub fn render_text(&self) -> String {
        let mut out = String::new();
        self.write_text(&mut out)
            .expect("writing to a String cannot fail");
        out
    }

    fn write_text(&self, out: &mut String) -> fmt::Result {
        let labels: Vec<String> = self.rows.iter().map(|(k, _)| k.label()).collect();
        let w = labels.iter().map(String::len).max().unwrap_or(0).max(8) + 2;
        write!(out, "{:<10}", "ODG")?;
        for l in &labels {
            write!(out, "{l:>w$}")?;
        }
        writeln!(out)?;
        for (k, g) in Odg::SCALE.iter().enumerate() {
            write!(out, "{g:<10}")?;
            for (_, s) in &self.rows {
                write!(out, "{:>w$}", s.counts[k])?;
            }
            writeln!(out)?;
        }
        write!(out, "{:<10}", "Mean")?;
        for (_, s) in &self.rows {
            write!(out, "{:>w$.2}", s.mean)?;
        }
        writeln!(out)?;
        write!(out, "{:<10}", "Std")?;
        for (_, s) in &self.rows {
            write!(out, "{:>w$.2}", s.std())?;
        }
        writeln!(out)?;
        for (m, s) in &self.overall {
            writeln!(
                out,
                "Overall {m}: mean {:.2}, std {:.2}, n {}",
                s.mean,
                s.std(),
                s.n
            )?;
        }
        Ok(())
    }
}

/// Group grades and compute their statistics. Duplicate (grader,
/// presentation) pairs are rejected.
pub fn odg_aggregate(grades: &[LabeledGrade], grouping: Grouping) -> Result<OdgTable> {
    if grades.is_empty() {
        return Err(Error::Empty("grades"));
    }
    let mut seen = BTreeSet::new();
    let mut groups: BTreeMap<GroupKey, [u64; 5]> = BTreeMap::new();
    for g in grades {
        let r = &g.record;
        if !seen.insert((r.grader_id.as_str(), r.presentation_id.as_str())) {
            return Err(Error::DuplicateGrade {
                grader_id: r.grader_id.clone(),
                presentation_id: r.presentation_id.clone(),
            });
        }
        let key = GroupKey {
            model: (grouping != Grouping::Dataset).then(|| g.model.clone()),
            dataset: (grouping != Grouping::Model).then(|| g.dataset.clone()),
        };
        groups.entry(key).or_default()[r.odg.index()] += 1;
    }
    let mut table = OdgTable::from_counts(grouping, groups.into_iter().collect())?;
    if grouping == Grouping::Dataset {
        // the per-model pool is not derivable from dataset rows
        let mut per_model: BTreeMap<&str, [u64; 5]> = BTreeMap::new();
        for g in grades {
            per_model.entry(g.model.as_str()).or_default()[g.record.odg.index()] += 1;
        }
        table.overall = per_model
            .into_iter()
            .map(|(m, c)| Ok((m.to_string(), OdgStats::from_counts(c)?)))
            .collect::<Result<_>>()?;
    }
    Ok(table)
}
