//! Type II measures over aligned per-system score vectors.
//!
//! Ties are handled with mid-ranks for Spearman's rho and Kendall's W, and
//! with the tau-b variant for Kendall's tau.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Scores of every experiment (rows) for every system (columns).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlignedScoreMatrix {
    systems: Vec<String>,
    experiments: Vec<String>,
    scores: Vec<Vec<f64>>,
}

impl AlignedScoreMatrix {
    pub fn new(systems: Vec<String>, experiments: Vec<String>, scores: Vec<Vec<f64>>) -> Result<Self> {
        if systems.len() < 2 {
            return Err(Error::SampleTooSmall {
                needed: 2,
                got: systems.len(),
            });
        }
        if experiments.len() < 2 {
            return Err(Error::SampleTooSmall {
                needed: 2,
                got: experiments.len(),
            });
        }
        if scores.len() != experiments.len() {
            return Err(Error::InvalidArgument(format!(
                "{} score rows for {} experiments",
                scores.len(),
                experiments.len()
            )));
        }
        for (row, exp) in scores.iter().zip(&experiments) {
            if row.len() != systems.len() {
                return Err(Error::InvalidArgument(format!(
                    "experiment {exp} has {} scores for {} systems",
                    row.len(),
                    systems.len()
                )));
            }
            if row.iter().any(|v| !v.is_finite()) {
                return Err(Error::InvalidArgument(format!(
                    "experiment {exp} has a non-finite score"
                )));
            }
        }
        Ok(AlignedScoreMatrix {
            systems,
            experiments,
            scores,
        })
    }

    /// Builds a matrix from rows given as lists of values, naming experiments
    /// `E1..` and systems `S1..`.
    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        let m = rows.first().map_or(0, Vec::len);
        let systems = (1..=m).map(|i| format!("S{i}")).collect();
        let experiments = (1..=rows.len()).map(|i| format!("E{i}")).collect();
        AlignedScoreMatrix::new(systems, experiments, rows)
    }

    pub fn systems(&self) -> &[String] {
        &self.systems
    }

    pub fn experiments(&self) -> &[String] {
        &self.experiments
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.scores
    }
}

fn check_pair(x: &[f64], y: &[f64]) -> Result<()> {
    if x.len() != y.len() {
        return Err(Error::InvalidArgument(format!(
            "vector lengths differ ({} vs {})",
            x.len(),
            y.len()
        )));
    }
    if x.len() < 2 {
        return Err(Error::SampleTooSmall {
            needed: 2,
            got: x.len(),
        });
    }
    Ok(())
}

/// Product-moment correlation.
pub fn pearson_r(x: &[f64], y: &[f64]) -> Result<f64> {
    check_pair(x, y)?;
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (dx, dy) = (a - mx, b - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(Error::CorrelationUndefined("zero variance".into()));
    }
    let product = sxx * syy;
    let den = if product.is_normal() {
        product.sqrt()
    } else {
        sxx.sqrt() * syy.sqrt()
    };
    Ok((sxy / den).clamp(-1.0, 1.0))
}

/// Average ranks (1-based); tied values share the mean of their positions.
pub fn mid_ranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].partial_cmp(&values[b]).unwrap_or(Ordering::Equal));
    let mut ranks = vec![0.0; values.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        // positions i..=j (0-based) share rank mean((i+1)..=(j+1))
        let rank = (i + j) as f64 / 2.0 + 1.0;
        for &k in &order[i..=j] {
            ranks[k] = rank;
        }
        i = j + 1;
    }
    ranks
}

/// Pearson's r on mid-ranks.
pub fn spearman_rho(x: &[f64], y: &[f64]) -> Result<f64> {
    check_pair(x, y)?;
    pearson_r(&mid_ranks(x), &mid_ranks(y)).map_err(|_| Error::CorrelationUndefined("all values tied".into()))
}

/// Kendall's tau-b: `(C - D) / sqrt((n0 - n1)(n0 - n2))`.
pub fn kendall_tau_b(x: &[f64], y: &[f64]) -> Result<f64> {
    check_pair(x, y)?;
    let n = x.len();
    let (mut concordant, mut discordant, mut tied_x, mut tied_y) = (0i64, 0i64, 0i64, 0i64);
    for i in 0..n {
        for j in (i + 1)..n {
            let dx = x[i].partial_cmp(&x[j]).unwrap_or(Ordering::Equal);
            let dy = y[i].partial_cmp(&y[j]).unwrap_or(Ordering::Equal);
            match (dx, dy) {
                (Ordering::Equal, Ordering::Equal) => {
                    tied_x += 1;
                    tied_y += 1;
                }
                (Ordering::Equal, _) => tied_x += 1,
                (_, Ordering::Equal) => tied_y += 1,
                (a, b) if a == b => concordant += 1,
                _ => discordant += 1,
            }
        }
    }
    let pairs = (n * (n - 1) / 2) as i64;
    let denom = ((pairs - tied_x) as f64) * ((pairs - tied_y) as f64);
    if denom == 0.0 {
        return Err(Error::CorrelationUndefined("all pairs tied".into()));
    }
    Ok(((concordant - discordant) as f64 / denom.sqrt()).clamp(-1.0, 1.0))
}

/// Kendall's coefficient of concordance with tie correction:
/// `W = 12 S / (n²(m³ - m) - n T)`.
pub fn kendall_w(matrix: &AlignedScoreMatrix) -> Result<f64> {
    let n = matrix.scores.len() as f64;
    let m = matrix.systems.len();
    if m < 2 {
        return Err(Error::SampleTooSmall { needed: 2, got: m });
    }
    let mut rank_sums = vec![0.0; m];
    let mut ties = 0.0;
    for row in &matrix.scores {
        let ranks = mid_ranks(row);
        for (sum, r) in rank_sums.iter_mut().zip(&ranks) {
            *sum += r;
        }
        ties += tie_term(row);
    }
    let mean = rank_sums.iter().sum::<f64>() / m as f64;
    let s: f64 = rank_sums.iter().map(|r| (r - mean).powi(2)).sum();
    let mf = m as f64;
    let denom = n * n * (mf.powi(3) - mf) - n * ties;
    if denom == 0.0 {
        return Err(Error::CorrelationUndefined("every ranking is fully tied".into()));
    }
    Ok((12.0 * s / denom).clamp(0.0, 1.0))
}

// Σ (t³ - t) over groups of tied values in one row.
fn tie_term(row: &[f64]) -> f64 {
    let mut sorted = row.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap_or(Ordering::Equal));
    let mut total = 0.0;
    let mut i = 0;
    while i < sorted.len() {
        let mut j = i;
        while j + 1 < sorted.len() && sorted[j + 1] == sorted[i] {
            j += 1;
        }
        let t = (j - i + 1) as f64;
        total += t.powi(3) - t;
        i = j + 1;
    }
    total
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PairwiseStatistic {
    Pearson,
    Spearman,
}

/// Mean of a pairwise statistic over all unordered experiment pairs.
#[derive(Debug, Clone, PartialEq)]
pub struct PairwiseMean {
    pub value: f64,
    pub pairs_used: usize,
    pub pairs_total: usize,
    /// One entry per excluded (undefined) pair.
    pub caveats: Vec<String>,
}

pub fn pairwise_mean(matrix: &AlignedScoreMatrix, which: PairwiseStatistic) -> Result<PairwiseMean> {
    let rows = &matrix.scores;
    let mut sum = 0.0;
    let mut used = 0;
    let mut total = 0;
    let mut caveats = Vec::new();
    // Fixed (i, j) order keeps the reduction deterministic.
    for i in 0..rows.len() {
        for j in (i + 1)..rows.len() {
            total += 1;
            let stat = match which {
                PairwiseStatistic::Pearson => pearson_r(&rows[i], &rows[j]),
                PairwiseStatistic::Spearman => spearman_rho(&rows[i], &rows[j]),
            };
            match stat {
                Ok(v) => {
                    sum += v;
                    used += 1;
                }
                Err(e) => caveats.push(format!(
                    "pair ({}, {}) excluded: {e}",
                    matrix.experiments[i], matrix.experiments[j]
                )),
            }
        }
    }
    if used == 0 {
        return Err(Error::CorrelationUndefined(
            "undefined for every experiment pair".into(),
        ));
    }
    Ok(PairwiseMean {
        value: sum / used as f64,
        pairs_used: used,
        pairs_total: total,
        caveats,
    })
}
