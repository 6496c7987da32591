//! Domain types: measurements, experiments, study bundles and measure
//! results, plus structural validation of ingested bundles.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::findings::PairwiseSignTable;
use crate::properties::PropertySheet;

/// Bounds of the instrument scale a score was measured on.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Scale {
    pub min: f64,
    /// `None` for open-ended metrics (error counts and the like).
    pub max: Option<f64>,
}

impl Scale {
    pub const OPEN: Scale = Scale { min: 0.0, max: None };

    pub fn bounded(min: f64, max: f64) -> Scale {
        Scale { min, max: Some(max) }
    }

    pub fn is_valid(&self) -> bool {
        self.min.is_finite() && self.max.is_none_or(|max| max.is_finite() && self.min < max)
    }

    pub fn contains(&self, value: f64) -> bool {
        value >= self.min && self.max.is_none_or(|max| value <= max)
    }
}

/// A measured quantity value together with the scale it lives on.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuantityValue {
    pub value: f64,
    pub scale_min: f64,
    pub scale_max: Option<f64>,
}

impl QuantityValue {
    pub fn new(value: f64, scale: Scale) -> Self {
        QuantityValue {
            value,
            scale_min: scale.min,
            scale_max: scale.max,
        }
    }

    pub fn scale(&self) -> Scale {
        Scale {
            min: self.scale_min,
            max: self.scale_max,
        }
    }
}

/// One measurement: measurand and object measured under given conditions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Measurement {
    /// Evaluation measure / quality criterion.
    pub measurand: String,
    /// The system measured.
    pub object: String,
    pub time: Option<String>,
    /// Id of the experiment whose property sheet holds the conditions.
    pub conditions: String,
    pub value: QuantityValue,
}

/// One categorical label on an item (optionally a span within it).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Annotation {
    pub item_id: String,
    pub span: Option<(i64, i64)>,
    pub label: String,
}

/// All labels one experiment attached to one system's outputs.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnnotationSet {
    pub system: String,
    pub items: Vec<Annotation>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ResultKind {
    Scores,
    Labels,
    /// Published findings only, ingested as a pairwise sign table.
    Signs,
}

impl fmt::Display for ResultKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ResultKind::Scores => "scores",
            ResultKind::Labels => "labels",
            ResultKind::Signs => "signs",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum ExperimentData {
    Scores(Vec<Measurement>),
    Labels {
        label_set: Vec<String>,
        sets: Vec<AnnotationSet>,
    },
    Signs(PairwiseSignTable),
}

impl ExperimentData {
    pub fn kind(&self) -> ResultKind {
        match self {
            ExperimentData::Scores(_) => ResultKind::Scores,
            ExperimentData::Labels { .. } => ResultKind::Labels,
            ExperimentData::Signs(_) => ResultKind::Signs,
        }
    }
}

/// One set of systems assessed on one evaluation measure.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Experiment {
    pub id: String,
    pub quality_criterion: String,
    /// Declared instrument scale; `None` when the bundle left it implicit.
    pub scale: Option<Scale>,
    pub data: ExperimentData,
    pub properties: PropertySheet,
}

impl Experiment {
    pub fn kind(&self) -> ResultKind {
        self.data.kind()
    }

    pub fn measurements(&self) -> &[Measurement] {
        match &self.data {
            ExperimentData::Scores(m) => m,
            _ => &[],
        }
    }

    /// System scores on the original (unshifted) scale, in measurement order.
    pub fn scores(&self) -> Vec<(&str, f64)> {
        self.measurements()
            .iter()
            .map(|m| (m.object.as_str(), m.value.value))
            .collect()
    }

    pub fn score_of(&self, system: &str) -> Option<&Measurement> {
        self.measurements().iter().find(|m| m.object == system)
    }
}

/// The unit of assessment: comparable experiments grouped by quality
/// criterion over a declared system set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyBundle {
    pub study_id: String,
    pub declared_systems: Vec<String>,
    pub experiments: Vec<Experiment>,
}

impl StudyBundle {
    /// Quality criteria in order of first appearance.
    pub fn quality_criteria(&self) -> Vec<&str> {
        let mut seen = BTreeSet::new();
        self.experiments
            .iter()
            .map(|e| e.quality_criterion.as_str())
            .filter(|qc| seen.insert(*qc))
            .collect()
    }

    pub fn experiments_for<'a>(&'a self, qc: &'a str) -> impl Iterator<Item = &'a Experiment> + 'a {
        self.experiments.iter().filter(move |e| e.quality_criterion == qc)
    }

    /// A bundle restricted to the given experiments, keeping bundle order.
    pub fn subset(&self, study_id: impl Into<String>, experiment_ids: &[String]) -> StudyBundle {
        StudyBundle {
            study_id: study_id.into(),
            declared_systems: self.declared_systems.clone(),
            experiments: self
                .experiments
                .iter()
                .filter(|e| experiment_ids.contains(&e.id))
                .cloned()
                .collect(),
        }
    }

    /// Position of a system in the declared order (undeclared systems last).
    pub fn system_rank(&self, system: &str) -> usize {
        self.declared_systems
            .iter()
            .position(|s| s == system)
            .unwrap_or(self.declared_systems.len())
    }
}

/// Sample statistics behind one CV* value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PrecisionStats {
    pub n: usize,
    pub mean: f64,
    /// Bessel-corrected sample standard deviation.
    pub s: f64,
    /// Bias-corrected standard deviation, `s / c4(n)`.
    pub s_star: f64,
    pub cv_star: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub confidence_level: f64,
    /// True when `s_star` is zero and the interval collapses to (0, 0).
    pub ci_degenerate: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Measure {
    CvStar,
    PearsonR,
    SpearmanRho,
    KendallTauB,
    KendallW,
    CohenKappa,
    FleissKappa,
    KrippAlpha,
    PMeasure,
}

impl Measure {
    pub const ALL: [Measure; 9] = [
        Measure::CvStar,
        Measure::PearsonR,
        Measure::SpearmanRho,
        Measure::KendallTauB,
        Measure::KendallW,
        Measure::CohenKappa,
        Measure::FleissKappa,
        Measure::KrippAlpha,
        Measure::PMeasure,
    ];

    pub fn result_type(self) -> ResultType {
        match self {
            Measure::CvStar => ResultType::I,
            Measure::PearsonR | Measure::SpearmanRho | Measure::KendallTauB | Measure::KendallW => ResultType::II,
            Measure::CohenKappa | Measure::FleissKappa | Measure::KrippAlpha => ResultType::III,
            Measure::PMeasure => ResultType::IV,
        }
    }

    pub fn symbol(self) -> &'static str {
        match self {
            Measure::CvStar => "CV*",
            Measure::PearsonR => "r",
            Measure::SpearmanRho => "ρ",
            Measure::KendallTauB => "τ",
            Measure::KendallW => "W",
            Measure::CohenKappa => "κ (Cohen)",
            Measure::FleissKappa => "κ (Fleiss)",
            Measure::KrippAlpha => "α",
            Measure::PMeasure => "P",
        }
    }

    /// Whether `level` is a permitted cell for this measure, and if so
    /// whether it is the measure's native level.
    pub fn availability(self, level: Level) -> Availability {
        use Availability::*;
        match (self.result_type(), level) {
            (ResultType::I, Level::System) => Native,
            (ResultType::I, Level::Qc | Level::Study) => Derived,
            (ResultType::II, Level::Qc) => Native,
            (ResultType::II, Level::System | Level::Study) => NotApplicable,
            (ResultType::III, Level::Qc) => Native,
            (ResultType::III, Level::System | Level::Study) => Derived,
            (ResultType::IV, Level::System) => NotApplicable,
            (ResultType::IV, Level::Qc) => Derived,
            (ResultType::IV, Level::Study) => Native,
        }
    }
}

impl fmt::Display for Measure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.symbol())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum ResultType {
    I,
    II,
    III,
    IV,
}

impl fmt::Display for ResultType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ResultType::I => "Type I",
            ResultType::II => "Type II",
            ResultType::III => "Type III",
            ResultType::IV => "Type IV",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Level {
    System,
    Qc,
    Study,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Availability {
    Native,
    Derived,
    NotApplicable,
}

/// How a value was obtained from the underlying statistic.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Aggregation {
    Direct,
    MeanPairwise,
    Mean,
    Pooled,
}

/// One computed degree-of-reproducibility value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeasureResult {
    pub measure: Measure,
    pub level: Level,
    pub native: bool,
    pub aggregation: Aggregation,
    pub value: f64,
    /// Number of comparable experiments contributing.
    pub n: usize,
    /// Systems or quality criteria covered.
    pub scope: Vec<String>,
    pub inputs_digest: String,
    /// Sample statistics, for system-level CV* only.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stats: Option<PrecisionStats>,
    pub caveats: Vec<String>,
}

impl MeasureResult {
    /// Fails on cells that are not applicable at `level`.
    pub fn new(measure: Measure, level: Level, value: f64, n: usize) -> Result<Self> {
        let native = match measure.availability(level) {
            Availability::Native => true,
            Availability::Derived => false,
            Availability::NotApplicable => {
                return Err(Error::InvalidArgument(format!(
                    "{measure} does not apply at {level:?} level"
                )))
            }
        };
        Ok(MeasureResult {
            measure,
            level,
            native,
            aggregation: Aggregation::Direct,
            value,
            n,
            scope: Vec::new(),
            inputs_digest: String::new(),
            stats: None,
            caveats: Vec::new(),
        })
    }

    pub fn with_scope(mut self, scope: impl IntoIterator<Item = impl Into<String>>) -> Self {
        self.scope = scope.into_iter().map(Into::into).collect();
        self
    }

    pub fn with_aggregation(mut self, aggregation: Aggregation) -> Self {
        self.aggregation = aggregation;
        self
    }

    pub fn with_digest(mut self, inputs: &[f64]) -> Self {
        self.inputs_digest = digest_values(inputs);
        self
    }

    pub fn caveat(mut self, caveat: impl Into<String>) -> Self {
        self.caveats.push(caveat.into());
        self
    }

    /// Row label: "mean r" for mean-pairwise values and so on.
    pub fn label(&self) -> String {
        match self.aggregation {
            Aggregation::MeanPairwise => format!("mean {}", self.measure.symbol()),
            _ => self.measure.symbol().to_string(),
        }
    }
}

/// Hex SHA-256 over the IEEE bit patterns of `values`.
pub fn digest_values(values: &[f64]) -> String {
    let mut hasher = Sha256::new();
    for v in values {
        hasher.update(v.to_bits().to_le_bytes());
    }
    hex::encode(hasher.finalize())
}

/// One structural problem found in a bundle.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Finding {
    pub path: String,
    pub message: String,
}

impl Finding {
    fn new(path: impl Into<String>, message: impl Into<String>) -> Self {
        Finding {
            path: path.into(),
            message: message.into(),
        }
    }
}

impl fmt::Display for Finding {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.path, self.message)
    }
}

/// Checks every structural invariant of a bundle. Findings are sorted, so
/// the result does not depend on experiment or measurement order.
pub fn validate_bundle(bundle: &StudyBundle) -> Vec<Finding> {
    let mut findings = Vec::new();
    if bundle.study_id.trim().is_empty() {
        findings.push(Finding::new("study_id", "empty study id"));
    }
    let declared: BTreeSet<&str> = bundle.declared_systems.iter().map(String::as_str).collect();
    if declared.len() != bundle.declared_systems.len() {
        findings.push(Finding::new("systems", "duplicate declared system"));
    }

    let mut ids: BTreeMap<&str, usize> = BTreeMap::new();
    for exp in &bundle.experiments {
        *ids.entry(exp.id.as_str()).or_default() += 1;
    }
    for (id, count) in &ids {
        if *count > 1 {
            findings.push(Finding::new(format!("experiments[{id}]"), "duplicate experiment id"));
        }
    }

    for qc in bundle.quality_criteria() {
        let n = bundle.experiments_for(qc).count();
        if n < 2 {
            findings.push(Finding::new(
                format!("qc[{qc}]"),
                format!("fewer than 2 comparable experiments ({n})"),
            ));
        }
    }

    for exp in &bundle.experiments {
        let base = format!("experiments[{}]", exp.id);
        if exp.id.trim().is_empty() {
            findings.push(Finding::new(&base, "empty experiment id"));
        }
        if exp.quality_criterion.trim().is_empty() {
            findings.push(Finding::new(format!("{base}.qc"), "empty quality criterion"));
        }
        if let Some(scale) = exp.scale {
            if !scale.is_valid() {
                findings.push(Finding::new(
                    format!("{base}.scale"),
                    "scale minimum must be below maximum",
                ));
            }
        }
        for (key, message) in exp.properties.violations() {
            findings.push(Finding::new(format!("{base}.properties.{key}"), message));
        }
        match &exp.data {
            ExperimentData::Scores(measurements) => validate_scores(exp, measurements, &declared, &base, &mut findings),
            ExperimentData::Labels { label_set, sets } => {
                validate_labels(label_set, sets, &declared, &base, &mut findings)
            }
            ExperimentData::Signs(table) => {
                for finding in table.violations() {
                    findings.push(Finding::new(format!("{base}.signs"), finding));
                }
                for system in &table.systems {
                    if !declared.contains(system.as_str()) {
                        findings.push(Finding::new(format!("{base}.signs[{system}]"), "system not declared"));
                    }
                }
            }
        }
    }

    findings.sort();
    findings
}

fn validate_scores(
    exp: &Experiment,
    measurements: &[Measurement],
    declared: &BTreeSet<&str>,
    base: &str,
    findings: &mut Vec<Finding>,
) {
    let mut seen: BTreeMap<&str, usize> = BTreeMap::new();
    for m in measurements {
        let path = format!("{base}.scores[{}]", m.object);
        *seen.entry(m.object.as_str()).or_default() += 1;
        if m.object.trim().is_empty() {
            findings.push(Finding::new(&path, "empty object"));
        } else if !declared.contains(m.object.as_str()) {
            findings.push(Finding::new(&path, "system not declared"));
        }
        if m.measurand != exp.quality_criterion {
            findings.push(Finding::new(&path, "measurand differs from the quality criterion"));
        }
        if m.conditions.trim().is_empty() {
            findings.push(Finding::new(&path, "empty conditions reference"));
        }
        if !m.value.value.is_finite() {
            findings.push(Finding::new(&path, "non-finite value"));
        } else if !m.value.scale().is_valid() {
            findings.push(Finding::new(&path, "invalid scale"));
        } else if !m.value.scale().contains(m.value.value) {
            findings.push(Finding::new(&path, "value outside scale"));
        }
    }
    for (system, count) in seen {
        if count > 1 {
            findings.push(Finding::new(
                format!("{base}.scores[{system}]"),
                "duplicate system score",
            ));
        }
    }
}

type ItemKey<'a> = (&'a str, Option<(i64, i64)>);

fn validate_labels(
    label_set: &[String],
    sets: &[AnnotationSet],
    declared: &BTreeSet<&str>,
    base: &str,
    findings: &mut Vec<Finding>,
) {
    let labels: BTreeSet<&str> = label_set.iter().map(String::as_str).collect();
    if labels.is_empty() {
        findings.push(Finding::new(format!("{base}.label_set"), "empty label set"));
    }
    let mut systems: BTreeMap<&str, usize> = BTreeMap::new();
    for set in sets {
        *systems.entry(set.system.as_str()).or_default() += 1;
        let path = format!("{base}.labels[{}]", set.system);
        if !declared.contains(set.system.as_str()) {
            findings.push(Finding::new(&path, "system not declared"));
        }
        let mut keys: BTreeMap<ItemKey<'_>, usize> = BTreeMap::new();
        for item in &set.items {
            *keys.entry((item.item_id.as_str(), item.span)).or_default() += 1;
            let item_path = format!("{path}.items[{}]", item_key(&item.item_id, item.span));
            if !labels.contains(item.label.as_str()) {
                findings.push(Finding::new(
                    &item_path,
                    format!("label {:?} not in the label set", item.label),
                ));
            }
            if let Some((start, end)) = item.span {
                if start > end {
                    findings.push(Finding::new(&item_path, "span start after end"));
                }
            }
        }
        for ((item, span), count) in keys {
            if count > 1 {
                findings.push(Finding::new(
                    format!("{path}.items[{}]", item_key(item, span)),
                    "duplicate (item, span) label",
                ));
            }
        }
    }
    for (system, count) in systems {
        if count > 1 {
            findings.push(Finding::new(
                format!("{base}.labels[{system}]"),
                "duplicate annotation set",
            ));
        }
    }
}

fn item_key(item: &str, span: Option<(i64, i64)>) -> String {
    match span {
        Some((s, e)) => format!("{item}@{s}:{e}"),
        None => item.to_string(),
    }
}
