//! Naive reference implementations, written directly from the definitions
//! and sharing no code with the library.

use statrs::function::gamma::gamma;

pub fn mean(x: &[f64]) -> f64 {
    x.iter().sum::<f64>() / x.len() as f64
}

pub fn sample_sd(x: &[f64]) -> f64 {
    let m = mean(x);
    (x.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (x.len() - 1) as f64).sqrt()
}

pub fn c4_direct(n: usize) -> f64 {
    let n = n as f64;
    (2.0 / (n - 1.0)).sqrt() * gamma(n / 2.0) / gamma((n - 1.0) / 2.0)
}

/// Corrected CV in percent, with Γ evaluated directly.
pub fn cv_star(x: &[f64]) -> f64 {
    let n = x.len();
    let s_star = sample_sd(x) / c4_direct(n);
    (1.0 + 1.0 / (4.0 * n as f64)) * s_star / mean(x).abs() * 100.0
}

/// Pearson r from raw sums; `None` when either side is constant.
pub fn pearson(x: &[f64], y: &[f64]) -> Option<f64> {
    let n = x.len() as f64;
    let (sx, sy) = (x.iter().sum::<f64>(), y.iter().sum::<f64>());
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| a * b).sum();
    let sxx: f64 = x.iter().map(|a| a * a).sum();
    let syy: f64 = y.iter().map(|b| b * b).sum();
    let num = n * sxy - sx * sy;
    let den = ((n * sxx - sx * sx) * (n * syy - sy * sy)).sqrt();
    if den.abs() < 1e-12 {
        None
    } else {
        Some(num / den)
    }
}

/// Rank by counting: 1 + number below + half the number of other equal values.
pub fn ranks(x: &[f64]) -> Vec<f64> {
    x.iter()
        .map(|&v| {
            let below = x.iter().filter(|&&w| w < v).count() as f64;
            let equal = x.iter().filter(|&&w| w == v).count() as f64;
            1.0 + below + (equal - 1.0) / 2.0
        })
        .collect()
}

pub fn spearman(x: &[f64], y: &[f64]) -> Option<f64> {
    pearson(&ranks(x), &ranks(y))
}

/// Kendall tau-b by enumerating every pair.
pub fn tau_b(x: &[f64], y: &[f64]) -> Option<f64> {
    let (mut concordant, mut discordant, mut x_only, mut y_only) = (0.0f64, 0.0, 0.0, 0.0);
    for i in 0..x.len() {
        for j in i + 1..x.len() {
            let dx = x[i] - x[j];
            let dy = y[i] - y[j];
            if dx == 0.0 && dy == 0.0 {
                continue;
            } else if dx == 0.0 {
                x_only += 1.0;
            } else if dy == 0.0 {
                y_only += 1.0;
            } else if (dx > 0.0) == (dy > 0.0) {
                concordant += 1.0;
            } else {
                discordant += 1.0;
            }
        }
    }
    // Pairs untied on x are concordant, discordant or tied on y only.
    let den = ((concordant + discordant + y_only) * (concordant + discordant + x_only)).sqrt();
    if den == 0.0 {
        None
    } else {
        Some((concordant - discordant) / den)
    }
}

/// Kendall's W over rows of judges ranking the columns, tie-corrected.
pub fn kendall_w(rows: &[Vec<f64>]) -> Option<f64> {
    let m = rows.len() as f64;
    let n = rows[0].len();
    let ranked: Vec<Vec<f64>> = rows.iter().map(|r| ranks(r)).collect();
    let totals: Vec<f64> = (0..n).map(|j| ranked.iter().map(|r| r[j]).sum()).collect();
    let mean_total = mean(&totals);
    let s: f64 = totals.iter().map(|t| (t - mean_total).powi(2)).sum();
    let mut ties = 0.0;
    for row in rows {
        let mut seen: Vec<f64> = Vec::new();
        for &v in row {
            if !seen.contains(&v) {
                seen.push(v);
                let t = row.iter().filter(|&&w| w == v).count() as f64;
                ties += t * t * t - t;
            }
        }
    }
    let n = n as f64;
    let den = m * m * (n * n * n - n) - m * ties;
    if den == 0.0 {
        None
    } else {
        Some(12.0 * s / den)
    }
}

/// Nominal Krippendorff's alpha by enumerating pairable values: observed
/// disagreement within units against expected disagreement over all pairs
/// of pairable values.
pub fn alpha(units: &[Vec<Option<usize>>]) -> Option<f64> {
    let pairable: Vec<Vec<usize>> = units
        .iter()
        .map(|u| u.iter().flatten().copied().collect::<Vec<_>>())
        .filter(|u| u.len() >= 2)
        .collect();
    let all: Vec<usize> = pairable.iter().flatten().copied().collect();
    let n = all.len() as f64;
    if n < 2.0 {
        return None;
    }
    let mut d_o = 0.0;
    for u in &pairable {
        let mut mismatches = 0.0;
        for i in 0..u.len() {
            for j in 0..u.len() {
                if i != j && u[i] != u[j] {
                    mismatches += 1.0;
                }
            }
        }
        d_o += mismatches / (u.len() - 1) as f64;
    }
    d_o /= n;
    let mut mismatches = 0.0;
    for i in 0..all.len() {
        for j in 0..all.len() {
            if i != j && all[i] != all[j] {
                mismatches += 1.0;
            }
        }
    }
    let d_e = mismatches / (n * (n - 1.0));
    if d_e == 0.0 {
        None
    } else {
        Some(1.0 - d_o / d_e)
    }
}

/// Cohen's kappa for two complete raters.
pub fn cohen(a: &[usize], b: &[usize], k: usize) -> Option<f64> {
    let n = a.len() as f64;
    let p_o = a.iter().zip(b).filter(|(x, y)| x == y).count() as f64 / n;
    let p_e: f64 = (0..k)
        .map(|c| {
            let pa = a.iter().filter(|&&x| x == c).count() as f64 / n;
            let pb = b.iter().filter(|&&x| x == c).count() as f64 / n;
            pa * pb
        })
        .sum();
    if (1.0 - p_e).abs() < 1e-15 {
        None
    } else {
        Some((p_o - p_e) / (1.0 - p_e))
    }
}

fn sgn(d: f64) -> i8 {
    if d > 0.0 {
        1
    } else if d < 0.0 {
        -1
    } else {
        0
    }
}

/// P over ordered experiment pairs and ordered system pairs, as literally
/// defined; returns (matches, comparisons).
pub fn p_ordered(experiments: &[Vec<f64>]) -> (usize, usize) {
    let (mut matches, mut total) = (0, 0);
    let m = experiments[0].len();
    for (i, e) in experiments.iter().enumerate() {
        for (j, f) in experiments.iter().enumerate() {
            if i == j {
                continue;
            }
            for a in 0..m {
                for b in 0..m {
                    if a == b {
                        continue;
                    }
                    total += 1;
                    if sgn(e[a] - e[b]) == sgn(f[a] - f[b]) {
                        matches += 1;
                    }
                }
            }
        }
    }
    (matches, total)
}
