//! Type III agreement over raw labels. Each experiment acts as one rater;
//! units are aligned on (system, item, span).

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::AnnotationSet;

/// Caveat attached to every study-level mean of agreement values.
pub const STUDY_MEAN_CAVEAT: &str =
    "study-level agreement is a mean over quality criteria and only provides a point of reference";

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct UnitKey {
    pub system: String,
    pub item_id: String,
    pub span: Option<(i64, i64)>,
}

/// Units × raters grid of category indices into `label_set`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabelGrid {
    units: Vec<UnitKey>,
    raters: Vec<String>,
    label_set: Vec<String>,
    cells: Vec<Vec<Option<usize>>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DistanceMetric {
    #[default]
    Nominal,
}

impl LabelGrid {
    pub fn new(
        units: Vec<UnitKey>,
        raters: Vec<String>,
        label_set: Vec<String>,
        labels: Vec<Vec<Option<String>>>,
    ) -> Result<Self> {
        if raters.len() < 2 {
            return Err(Error::SampleTooSmall {
                needed: 2,
                got: raters.len(),
            });
        }
        if labels.len() != units.len() {
            return Err(Error::InvalidArgument(format!(
                "{} label rows for {} units",
                labels.len(),
                units.len()
            )));
        }
        let index: BTreeMap<&str, usize> = label_set.iter().enumerate().map(|(i, l)| (l.as_str(), i)).collect();
        let mut cells = Vec::with_capacity(units.len());
        for (unit, row) in units.iter().zip(labels) {
            if row.len() != raters.len() {
                return Err(Error::InvalidArgument(format!(
                    "unit {}/{} has {} cells for {} raters",
                    unit.system,
                    unit.item_id,
                    row.len(),
                    raters.len()
                )));
            }
            let mut out = Vec::with_capacity(row.len());
            for label in row {
                out.push(match label {
                    None => None,
                    Some(l) => Some(*index.get(l.as_str()).ok_or_else(|| {
                        Error::Agreement(format!(
                            "label {l:?} on unit {}/{} is not in the label set",
                            unit.system, unit.item_id
                        ))
                    })?),
                });
            }
            cells.push(out);
        }
        let grid = LabelGrid {
            units,
            raters,
            label_set,
            cells,
        };
        if !grid.cells.iter().any(|row| row.iter().flatten().count() >= 2) {
            return Err(Error::Agreement("no unit carries two or more labels".into()));
        }
        Ok(grid)
    }

    /// Aligns the annotation sets of several experiments. Units are ordered
    /// by (system, item, span).
    pub fn from_annotations(raters: &[(&str, &[AnnotationSet])], label_set: Vec<String>) -> Result<Self> {
        let mut grid: BTreeMap<UnitKey, Vec<Option<String>>> = BTreeMap::new();
        for (r, (_, sets)) in raters.iter().enumerate() {
            for set in *sets {
                for item in &set.items {
                    let key = UnitKey {
                        system: set.system.clone(),
                        item_id: item.item_id.clone(),
                        span: item.span,
                    };
                    let row = grid.entry(key).or_insert_with(|| vec![None; raters.len()]);
                    if row[r].is_some() {
                        return Err(Error::Agreement(format!(
                            "rater {} labels unit {}/{} twice",
                            raters[r].0, set.system, item.item_id
                        )));
                    }
                    row[r] = Some(item.label.clone());
                }
            }
        }
        let (units, labels): (Vec<_>, Vec<_>) = grid.into_iter().unzip();
        LabelGrid::new(
            units,
            raters.iter().map(|(id, _)| id.to_string()).collect(),
            label_set,
            labels,
        )
    }

    /// The sub-grid of one system's units.
    pub fn for_system(&self, system: &str) -> Result<LabelGrid> {
        let (units, labels): (Vec<_>, Vec<_>) = self
            .units
            .iter()
            .zip(&self.cells)
            .filter(|(u, _)| u.system == system)
            .map(|(u, row)| {
                (
                    u.clone(),
                    row.iter().map(|c| c.map(|i| self.label_set[i].clone())).collect(),
                )
            })
            .unzip();
        LabelGrid::new(units, self.raters.clone(), self.label_set.clone(), labels)
    }

    pub fn units(&self) -> &[UnitKey] {
        &self.units
    }

    pub fn raters(&self) -> &[String] {
        &self.raters
    }

    pub fn label_set(&self) -> &[String] {
        &self.label_set
    }

    pub fn systems(&self) -> Vec<String> {
        self.units
            .iter()
            .map(|u| u.system.clone())
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect()
    }

    pub fn is_complete(&self) -> bool {
        self.cells.iter().all(|row| row.iter().all(Option::is_some))
    }

    pub fn cell(&self, unit: usize, rater: usize) -> Option<&str> {
        self.cells[unit][rater].map(|i| self.label_set[i].as_str())
    }
}

/// Cohen's kappa for exactly two raters over fully aligned units.
pub fn cohen_kappa(grid: &LabelGrid) -> Result<f64> {
    if grid.raters.len() != 2 {
        return Err(Error::Agreement(format!(
            "Cohen's κ takes exactly 2 raters, got {}",
            grid.raters.len()
        )));
    }
    if !grid.is_complete() {
        return Err(Error::Agreement("Cohen's κ requires complete alignment".into()));
    }
    let k = grid.label_set.len();
    let n = grid.cells.len() as f64;
    let mut a = vec![0.0; k];
    let mut b = vec![0.0; k];
    let mut agree = 0.0;
    for row in &grid.cells {
        let (x, y) = (row[0].unwrap(), row[1].unwrap());
        a[x] += 1.0;
        b[y] += 1.0;
        if x == y {
            agree += 1.0;
        }
    }
    let p_o = agree / n;
    let p_e: f64 = a.iter().zip(&b).map(|(x, y)| (x / n) * (y / n)).sum();
    if p_e >= 1.0 {
        return Err(Error::Agreement("degenerate marginals".into()));
    }
    Ok((p_o - p_e) / (1.0 - p_e))
}

/// Fleiss's kappa. Every unit must carry the same number of labels.
pub fn fleiss_kappa(grid: &LabelGrid) -> Result<f64> {
    let k = grid.label_set.len();
    let per_unit: Vec<Vec<f64>> = grid
        .cells
        .iter()
        .map(|row| {
            let mut counts = vec![0.0; k];
            for c in row.iter().flatten() {
                counts[*c] += 1.0;
            }
            counts
        })
        .collect();
    let raters_per_unit: BTreeSet<usize> = grid.cells.iter().map(|row| row.iter().flatten().count()).collect();
    if raters_per_unit.len() != 1 {
        return Err(Error::Agreement(
            "Fleiss's κ needs the same number of labels on every unit; use Krippendorff's α for ragged coverage".into(),
        ));
    }
    let r = *raters_per_unit.iter().next().unwrap() as f64;
    if r < 2.0 {
        return Err(Error::Agreement("Fleiss's κ needs at least 2 labels per unit".into()));
    }
    let units = per_unit.len() as f64;
    let p_bar = per_unit
        .iter()
        .map(|counts| (counts.iter().map(|c| c * c).sum::<f64>() - r) / (r * (r - 1.0)))
        .sum::<f64>()
        / units;
    let p_e: f64 = (0..k)
        .map(|j| {
            let p = per_unit.iter().map(|c| c[j]).sum::<f64>() / (units * r);
            p * p
        })
        .sum();
    if p_e >= 1.0 {
        return Err(Error::Agreement("degenerate marginals".into()));
    }
    Ok((p_bar - p_e) / (1.0 - p_e))
}

/// Krippendorff's alpha via the coincidence matrix. Units with fewer than
/// two labels are not pairable and are dropped.
pub fn kripp_alpha(grid: &LabelGrid, metric: DistanceMetric) -> Result<f64> {
    let DistanceMetric::Nominal = metric;
    let k = grid.label_set.len();
    let mut coincidence = vec![vec![0.0; k]; k];
    for row in &grid.cells {
        let values: Vec<usize> = row.iter().flatten().copied().collect();
        let m = values.len();
        if m < 2 {
            continue;
        }
        let w = 1.0 / (m - 1) as f64;
        for (i, &a) in values.iter().enumerate() {
            for (j, &b) in values.iter().enumerate() {
                if i != j {
                    coincidence[a][b] += w;
                }
            }
        }
    }
    let marginals: Vec<f64> = coincidence.iter().map(|row| row.iter().sum()).collect();
    let n: f64 = marginals.iter().sum();
    if n < 2.0 {
        return Err(Error::Agreement("fewer than 2 pairable values".into()));
    }
    let mut observed = 0.0;
    let mut expected = 0.0;
    for c in 0..k {
        for d in 0..k {
            if c != d {
                observed += coincidence[c][d];
                expected += marginals[c] * marginals[d];
            }
        }
    }
    if expected == 0.0 {
        return Err(Error::Agreement(
            "α undefined: all pairable values share one category".into(),
        ));
    }
    Ok(1.0 - (n - 1.0) * observed / expected)
}

/// Study-level mean of quality-criterion agreement values.
#[derive(Debug, Clone, PartialEq)]
pub struct StudyMean {
    pub value: f64,
    pub caveats: Vec<String>,
}

pub fn aggregate_type3(per_qc: &[(String, f64)]) -> Result<StudyMean> {
    if per_qc.is_empty() {
        return Err(Error::Empty("no quality-criterion agreement values"));
    }
    let value = per_qc.iter().map(|(_, v)| v).sum::<f64>() / per_qc.len() as f64;
    Ok(StudyMean {
        value,
        caveats: vec![STUDY_MEAN_CAVEAT.to_string()],
    })
}
