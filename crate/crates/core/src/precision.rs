//! Type I precision: the small-sample unbiased coefficient of variation.
//!
//! ```text
//! CV* = (1 + 1/(4n)) * s* / |m|        s* = s / c4(n)
//! c4(n) = sqrt(2/(n-1)) * Γ(n/2) / Γ((n-1)/2)
//! ```
//!
//! `s` is the Bessel-corrected sample standard deviation. Values must be
//! shifted onto a 0-based scale first (see [`shift_to_zero`]); CV* is scaled
//! by 100 when reported as a percentage.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};
use crate::model::PrecisionStats;

/// CV* values below this are read as good system-level reproducibility for
/// human evaluations of a fixed set of outputs.
pub const GOOD_HUMAN_CV: f64 = 12.0;
/// Same, for metric-based evaluations.
pub const GOOD_METRIC_CV: f64 = 1.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CvOptions {
    pub confidence_level: f64,
    pub report_as_percent: bool,
}

impl Default for CvOptions {
    fn default() -> Self {
        CvOptions {
            confidence_level: 0.95,
            report_as_percent: true,
        }
    }
}

impl CvOptions {
    pub fn validate(&self) -> Result<()> {
        if self.confidence_level > 0.0 && self.confidence_level < 1.0 {
            Ok(())
        } else {
            Err(Error::InvalidArgument(format!(
                "confidence level must lie in (0, 1), got {}",
                self.confidence_level
            )))
        }
    }
}

/// Normal-theory bias correction factor for the sample standard deviation.
pub fn c4(n: usize) -> Result<f64> {
    if n < 2 {
        return Err(Error::SampleTooSmall { needed: 2, got: n });
    }
    let n = n as f64;
    // ln Γ keeps large n finite.
    let ratio = (ln_gamma(n / 2.0) - ln_gamma((n - 1.0) / 2.0)).exp();
    Ok((2.0 / (n - 1.0)).sqrt() * ratio)
}

/// Returns `(s, s*)`.
pub fn unbiased_std(values: &[f64]) -> Result<(f64, f64)> {
    let n = values.len();
    if n < 2 {
        return Err(Error::SampleTooSmall { needed: 2, got: n });
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    let ss: f64 = values.iter().map(|v| (v - mean).powi(2)).sum();
    let s = (ss / (n - 1) as f64).sqrt();
    Ok((s, s / c4(n)?))
}

/// Subtracts the scale minimum from every value.
pub fn shift_to_zero(values: &[f64], scale_min: f64) -> Result<Vec<f64>> {
    values
        .iter()
        .map(|&v| {
            if v < scale_min {
                Err(Error::BelowScale { value: v, scale_min })
            } else {
                Ok(v - scale_min)
            }
        })
        .collect()
}

/// Confidence interval on `s*`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    pub low: f64,
    pub high: f64,
    /// Zero-variance sample: the interval is (0, 0).
    pub degenerate: bool,
}

/// t-based interval on `s*` with standard error `s*/sqrt(2(n-1))`, obtained
/// from `se(s²) = sqrt(2σ⁴/(n-1))` and `se(s*) ≈ se(s²)/(2σ)`, σ estimated
/// by `s*`. The lower bound is clipped at 0.
pub fn ci_for_s_star(s_star: f64, n: usize, confidence_level: f64) -> Result<Interval> {
    if n < 2 {
        return Err(Error::SampleTooSmall { needed: 2, got: n });
    }
    if s_star.is_nan() || s_star < 0.0 {
        return Err(Error::InvalidArgument(format!("s* must be non-negative, got {s_star}")));
    }
    CvOptions {
        confidence_level,
        report_as_percent: true,
    }
    .validate()?;
    if s_star == 0.0 {
        return Ok(Interval {
            low: 0.0,
            high: 0.0,
            degenerate: true,
        });
    }
    let se = s_star / (2.0 * (n - 1) as f64).sqrt();
    let t = students_t_quantile(n - 1, (1.0 + confidence_level) / 2.0)?;
    Ok(Interval {
        low: (s_star - t * se).max(0.0),
        high: s_star + t * se,
        degenerate: false,
    })
}

pub(crate) fn students_t_quantile(df: usize, p: f64) -> Result<f64> {
    let dist = StudentsT::new(0.0, 1.0, df as f64)
        .map_err(|e| Error::InvalidArgument(format!("t distribution with {df} df: {e}")))?;
    Ok(dist.inverse_cdf(p))
}

/// CV* of a sample already shifted onto a 0-based scale.
pub fn cv_star(values: &[f64], opts: &CvOptions) -> Result<PrecisionStats> {
    opts.validate()?;
    let n = values.len();
    let (s, s_star) = unbiased_std(values)?;
    let mean = values.iter().sum::<f64>() / n as f64;
    if mean == 0.0 {
        return Err(Error::ZeroMean);
    }
    let correction = 1.0 + 1.0 / (4.0 * n as f64);
    let scale = if opts.report_as_percent { 100.0 } else { 1.0 };
    let cv = correction * s_star / mean.abs() * scale;
    let ci = ci_for_s_star(s_star, n, opts.confidence_level)?;
    Ok(PrecisionStats {
        n,
        mean,
        s,
        s_star,
        cv_star: cv,
        ci_low: ci.low,
        ci_high: ci.high,
        confidence_level: opts.confidence_level,
        ci_degenerate: ci.degenerate,
    })
}

/// Advisory reading of a CV* percentage.
pub fn interpretation(cv_percent: f64, human_evaluation: bool) -> String {
    let (threshold, kind) = if human_evaluation {
        (GOOD_HUMAN_CV, "human")
    } else {
        (GOOD_METRIC_CV, "metric-based")
    };
    if cv_percent < threshold {
        format!("advisory: CV* below {threshold} indicates good reproducibility for {kind} evaluation of identical outputs under identical properties")
    } else {
        format!("advisory: CV* at or above {threshold}; not in the good-reproducibility band for {kind} evaluation")
    }
}
