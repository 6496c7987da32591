//! Type IV: P, the proportion of identical pairwise system ranks.
//!
//! For every unordered pair of experiments and every unordered pair of
//! systems, the signs of the two score differences are compared. Counting
//! unordered pairs gives the same proportion as the ordered-pair sum since
//! flipping either orientation flips both signs.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Sign {
    #[serde(rename = "-1")]
    Negative,
    #[serde(rename = "0")]
    Zero,
    #[serde(rename = "+1")]
    Positive,
}

impl Sign {
    pub fn of_difference(a: f64, b: f64) -> Sign {
        if a > b {
            Sign::Positive
        } else if a < b {
            Sign::Negative
        } else {
            Sign::Zero
        }
    }

    pub fn flip(self) -> Sign {
        match self {
            Sign::Negative => Sign::Positive,
            Sign::Zero => Sign::Zero,
            Sign::Positive => Sign::Negative,
        }
    }

    pub fn as_i8(self) -> i8 {
        match self {
            Sign::Negative => -1,
            Sign::Zero => 0,
            Sign::Positive => 1,
        }
    }

    pub fn parse(s: &str) -> Option<Sign> {
        match s.trim() {
            "-1" | "-" => Some(Sign::Negative),
            "0" => Some(Sign::Zero),
            "+1" | "1" | "+" => Some(Sign::Positive),
            _ => None,
        }
    }
}

impl fmt::Display for Sign {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Sign::Negative => "-1",
            Sign::Zero => "0",
            Sign::Positive => "+1",
        })
    }
}

/// Signs of `M(a) - M(b)` for every system pair `(a, b)` with `a < b`
/// lexicographically.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PairwiseSignTable {
    pub experiment: String,
    pub systems: Vec<String>,
    signs: BTreeMap<(String, String), Sign>,
}

impl PairwiseSignTable {
    /// Builds a table from explicit `(a, b, sign of a - b)` entries, as
    /// published findings state them. Every pair must be given exactly once.
    pub fn from_entries(
        experiment: impl Into<String>,
        entries: impl IntoIterator<Item = (String, String, Sign)>,
    ) -> Result<Self> {
        let experiment = experiment.into();
        let mut systems = BTreeSet::new();
        let mut signs = BTreeMap::new();
        for (a, b, sign) in entries {
            if a == b {
                return Err(Error::InvalidArgument(format!(
                    "{experiment}: system {a} compared with itself"
                )));
            }
            systems.insert(a.clone());
            systems.insert(b.clone());
            let (key, sign) = if a < b { ((a, b), sign) } else { ((b, a), sign.flip()) };
            if signs.insert(key.clone(), sign).is_some() {
                return Err(Error::InvalidArgument(format!(
                    "{experiment}: pair ({}, {}) given twice",
                    key.0, key.1
                )));
            }
        }
        let table = PairwiseSignTable {
            experiment,
            systems: systems.into_iter().collect(),
            signs,
        };
        if let Some(problem) = table.violations().into_iter().next() {
            return Err(Error::InvalidArgument(problem));
        }
        if table.systems.len() < 2 {
            return Err(Error::SampleTooSmall {
                needed: 2,
                got: table.systems.len(),
            });
        }
        Ok(table)
    }

    /// Sign of `M(a) - M(b)`, in either orientation.
    pub fn sign(&self, a: &str, b: &str) -> Option<Sign> {
        if a < b {
            self.signs.get(&(a.to_string(), b.to_string())).copied()
        } else {
            self.signs.get(&(b.to_string(), a.to_string())).map(|s| s.flip())
        }
    }

    pub fn len(&self) -> usize {
        self.signs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.signs.is_empty()
    }

    pub fn entries(&self) -> impl Iterator<Item = (&str, &str, Sign)> {
        self.signs.iter().map(|((a, b), s)| (a.as_str(), b.as_str(), *s))
    }

    /// Problems with completeness: one entry per missing system pair.
    pub fn violations(&self) -> Vec<String> {
        let m = self.systems.len();
        let mut out = Vec::new();
        if self.signs.len() != m * m.saturating_sub(1) / 2 {
            for (i, a) in self.systems.iter().enumerate() {
                for b in &self.systems[i + 1..] {
                    if !self.signs.contains_key(&(a.clone(), b.clone())) {
                        out.push(format!("missing sign for pair ({a}, {b})"));
                    }
                }
            }
        }
        out
    }
}

/// Signs of all pairwise score differences in one experiment.
pub fn sign_table(experiment: impl Into<String>, scores: &BTreeMap<String, f64>) -> Result<PairwiseSignTable> {
    if scores.len() < 2 {
        return Err(Error::SampleTooSmall {
            needed: 2,
            got: scores.len(),
        });
    }
    let systems: Vec<String> = scores.keys().cloned().collect();
    let mut signs = BTreeMap::new();
    for (i, a) in systems.iter().enumerate() {
        for b in &systems[i + 1..] {
            signs.insert((a.clone(), b.clone()), Sign::of_difference(scores[a], scores[b]));
        }
    }
    Ok(PairwiseSignTable {
        experiment: experiment.into(),
        systems,
        signs,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TiePolicy {
    /// Equal signs match, including two ties (0 = 0).
    #[default]
    Literal,
    /// System pairs tied in either experiment are left out of the count.
    ExcludeTied,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PResult {
    pub p: f64,
    pub matches: usize,
    pub comparisons: usize,
}

/// P over score mappings sharing one system set.
pub fn p_measure(experiments: &[BTreeMap<String, f64>]) -> Result<PResult> {
    p_measure_with(experiments, TiePolicy::Literal)
}

pub fn p_measure_with(experiments: &[BTreeMap<String, f64>], ties: TiePolicy) -> Result<PResult> {
    let tables = experiments
        .iter()
        .enumerate()
        .map(|(i, scores)| sign_table(format!("E{}", i + 1), scores))
        .collect::<Result<Vec<_>>>()?;
    p_from_tables(&tables, ties)
}

/// P over sign tables (computed or ingested as published findings).
pub fn p_from_tables(tables: &[PairwiseSignTable], ties: TiePolicy) -> Result<PResult> {
    if tables.len() < 2 {
        return Err(Error::SampleTooSmall {
            needed: 2,
            got: tables.len(),
        });
    }
    let systems: BTreeSet<&String> = tables.iter().flat_map(|t| &t.systems).collect();
    for table in tables {
        if let Some(missing) = systems.iter().find(|s| !table.systems.contains(s)) {
            return Err(Error::IncompleteCoverage(format!(
                "experiment {} has no score for system {missing}",
                table.experiment
            )));
        }
        if let Some(problem) = table.violations().into_iter().next() {
            return Err(Error::IncompleteCoverage(format!(
                "experiment {}: {problem}",
                table.experiment
            )));
        }
    }
    let mut matches = 0;
    let mut comparisons = 0;
    for (i, ti) in tables.iter().enumerate() {
        for tj in &tables[i + 1..] {
            for (key, si) in &ti.signs {
                let sj = tj.signs[key];
                if ties == TiePolicy::ExcludeTied && (*si == Sign::Zero || sj == Sign::Zero) {
                    continue;
                }
                comparisons += 1;
                if *si == sj {
                    matches += 1;
                }
            }
        }
    }
    if comparisons == 0 {
        return Err(Error::Empty("no system-pair comparisons left"));
    }
    Ok(PResult {
        p: matches as f64 / comparisons as f64,
        matches,
        comparisons,
    })
}

/// Study-level P: total matches over total comparisons.
pub fn pooled_p(per_qc: &[(usize, usize)]) -> Result<f64> {
    if per_qc.is_empty() {
        return Err(Error::Empty("no quality-criterion P counts"));
    }
    let (m, c) = per_qc.iter().fold((0, 0), |(m, c), (mi, ci)| (m + mi, c + ci));
    if c == 0 {
        return Err(Error::Empty("zero comparisons"));
    }
    Ok(m as f64 / c as f64)
}

/// Study-level P as the unweighted mean of per-QC proportions.
pub fn averaged_p(per_qc: &[(usize, usize)]) -> Result<f64> {
    if per_qc.is_empty() {
        return Err(Error::Empty("no quality-criterion P counts"));
    }
    if per_qc.iter().any(|(_, c)| *c == 0) {
        return Err(Error::Empty("zero comparisons"));
    }
    Ok(per_qc.iter().map(|(m, c)| *m as f64 / *c as f64).sum::<f64>() / per_qc.len() as f64)
}
