//! Full assessment of a study bundle: comparability gating from experiment
//! properties, routing of result kinds to measures, and aggregation across
//! system, quality-criterion and study levels.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::agreement::{self, DistanceMetric, LabelGrid};
use crate::correlation::{self, AlignedScoreMatrix, PairwiseStatistic};
use crate::error::{Error, Result};
use crate::findings::{self, PResult, PairwiseSignTable, TiePolicy};
use crate::model::{
    validate_bundle, Aggregation, Experiment, ExperimentData, Level, Measure, MeasureResult, ResultKind, StudyBundle,
};
use crate::precision::{self, CvOptions};
use crate::properties::{PropertyKey, PropertySheet};

const CV_MEAN_CAVEAT: &str = "mean of system-level CV*; a point of reference that hides differences between systems";
const FINDINGS_ONLY_CAVEAT: &str = "includes findings-only experiments ingested as sign tables";
const LABEL_SETS_DIFFER: &str = "label sets differ across QCs";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PropertyDifference {
    pub key: String,
    /// Normalized value per experiment, in experiment order.
    pub values: Vec<String>,
}

/// Which properties are the same, which differ and which are not covered by
/// every sheet.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SimilarityProfile {
    pub same: Vec<String>,
    pub different: Vec<PropertyDifference>,
    pub coverage: Vec<String>,
}

pub fn similarity_profile(sheets: &[&PropertySheet]) -> SimilarityProfile {
    let entries: Vec<BTreeMap<String, String>> = sheets
        .iter()
        .map(|s| s.normalized_entries().into_iter().collect())
        .collect();
    // Schema order first, then extensions alphabetically.
    let mut keys: Vec<String> = PropertyKey::ALL
        .iter()
        .map(|k| k.slug().to_string())
        .filter(|k| entries.iter().any(|e| e.contains_key(k)))
        .collect();
    let extensions: BTreeSet<&String> = sheets.iter().flat_map(|s| s.extensions.keys()).collect();
    keys.extend(extensions.into_iter().cloned());

    let mut profile = SimilarityProfile::default();
    for key in keys {
        let values: Vec<Option<&String>> = entries.iter().map(|e| e.get(&key)).collect();
        if values.iter().any(Option::is_none) {
            profile.coverage.push(key);
        } else if values.windows(2).all(|w| w[0] == w[1]) {
            profile.same.push(key);
        } else {
            profile.different.push(PropertyDifference {
                key,
                values: values.into_iter().map(|v| v.unwrap().clone()).collect(),
            });
        }
    }
    profile
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GateMode {
    Strict,
    #[default]
    Lenient,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GateDecision {
    pub comparable: bool,
    pub reasons: Vec<String>,
    pub caveats: Vec<String>,
}

pub fn gate(profile: &SimilarityProfile, mode: GateMode) -> GateDecision {
    let differing: Vec<String> = profile
        .different
        .iter()
        .map(|d| format!("{} differs ({})", d.key, d.values.join(" | ")))
        .collect();
    let mut caveats: Vec<String> = profile
        .coverage
        .iter()
        .map(|k| format!("property {k} is not recorded for every experiment"))
        .collect();
    match mode {
        GateMode::Strict => GateDecision {
            comparable: differing.is_empty(),
            reasons: differing,
            caveats,
        },
        GateMode::Lenient => {
            caveats.extend(
                differing
                    .into_iter()
                    .map(|d| format!("{d}: differences in outcomes are expected")),
            );
            GateDecision {
                comparable: true,
                reasons: Vec::new(),
                caveats,
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PartitionGroup {
    /// Normalized value per partition key (`None` when unrecorded).
    pub values: Vec<Option<String>>,
    pub experiments: Vec<String>,
    /// Set on the pooled group of experiments that matched no other.
    #[serde(default)]
    pub residual: bool,
}

/// Groups experiments by their normalized values on `keys`. Groups are
/// ordered by value tuple; experiments keep bundle order within a group.
pub fn partition(experiments: &[Experiment], keys: &[String]) -> Result<Vec<PartitionGroup>> {
    for key in keys {
        let known = PropertyKey::lookup(key).is_some()
            || experiments
                .iter()
                .any(|e| e.properties.extensions.contains_key(key.trim()));
        if !known {
            return Err(Error::InvalidArgument(format!("unknown property key {key:?}")));
        }
    }
    let mut groups: BTreeMap<Vec<Option<String>>, Vec<String>> = BTreeMap::new();
    for exp in experiments {
        let tuple = keys.iter().map(|k| exp.properties.normalized(k)).collect();
        groups.entry(tuple).or_default().push(exp.id.clone());
    }
    Ok(groups
        .into_iter()
        .map(|(values, experiments)| PartitionGroup {
            values,
            experiments,
            residual: false,
        })
        .collect())
}

/// Merges all singleton groups into one residual group of experiments that
/// differ from each other and from every other group on the keys.
pub fn pool_singletons(groups: Vec<PartitionGroup>) -> Vec<PartitionGroup> {
    let (singles, mut out): (Vec<_>, Vec<_>) = groups.into_iter().partition(|g| g.experiments.len() == 1);
    match singles.len() {
        0 => {}
        1 => out.extend(singles),
        _ => out.push(PartitionGroup {
            values: Vec::new(),
            experiments: singles.into_iter().flat_map(|g| g.experiments).collect(),
            residual: true,
        }),
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StudyPAggregation {
    #[default]
    Pooled,
    Mean,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KappaVariant {
    #[default]
    Cohen,
    Fleiss,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct AssessOptions {
    pub mode: GateMode,
    pub cv: CvOptions,
    pub ties: TiePolicy,
    pub study_p: StudyPAggregation,
    /// κ variant used when exactly two label experiments are compared.
    pub two_rater_kappa: KappaVariant,
}

fn experiments_of<'a>(bundle: &'a StudyBundle, qc: &'a str, kinds: &'a [ResultKind]) -> Vec<&'a Experiment> {
    bundle
        .experiments_for(qc)
        .filter(|e| kinds.contains(&e.kind()))
        .collect()
}

fn ordered_systems<'a>(bundle: &StudyBundle, names: impl IntoIterator<Item = &'a str>) -> Vec<String> {
    let mut systems: Vec<&str> = names.into_iter().collect::<BTreeSet<_>>().into_iter().collect();
    systems.sort_by_key(|s| (bundle.system_rank(s), *s));
    systems.into_iter().map(str::to_string).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct Type1Outcome {
    pub system: Vec<(String, MeasureResult)>,
    pub qc: Option<MeasureResult>,
    pub caveats: Vec<String>,
}

/// Per-system CV* over the experiments scoring each system, plus their QC
/// mean. Systems whose CV* is not computable are reported as caveats.
pub fn assess_type1(bundle: &StudyBundle, qc: &str, opts: &AssessOptions) -> Result<Type1Outcome> {
    let exps = experiments_of(bundle, qc, &[ResultKind::Scores]);
    if exps.len() < 2 {
        return Err(Error::SampleTooSmall {
            needed: 2,
            got: exps.len(),
        });
    }
    let human = exps.iter().any(|e| e.properties.is_human_evaluation());
    let systems = ordered_systems(
        bundle,
        exps.iter()
            .flat_map(|e| e.measurements().iter().map(|m| m.object.as_str())),
    );
    let mut outcome = Type1Outcome {
        system: Vec::new(),
        qc: None,
        caveats: Vec::new(),
    };
    for system in systems {
        let measurements: Vec<_> = exps.iter().filter_map(|e| e.score_of(&system)).collect();
        let shifted: Result<Vec<f64>> = measurements
            .iter()
            .map(|m| precision::shift_to_zero(&[m.value.value], m.value.scale_min).map(|v| v[0]))
            .collect();
        let stats = shifted.and_then(|values| precision::cv_star(&values, &opts.cv).map(|s| (values, s)));
        match stats {
            Ok((values, stats)) => {
                let mut result = MeasureResult::new(Measure::CvStar, Level::System, stats.cv_star, stats.n)?
                    .with_scope([system.clone()])
                    .with_digest(&values)
                    .caveat(format!(
                        "s* = {:.4}, {}% CI [{:.4}, {:.4}] (confidence level is a chosen default unless set)",
                        stats.s_star,
                        stats.confidence_level * 100.0,
                        stats.ci_low,
                        stats.ci_high
                    ));
                if stats.ci_degenerate {
                    result = result.caveat("degenerate zero-variance CI");
                }
                result = result.caveat(precision::interpretation(stats.cv_star, human));
                result.stats = Some(stats);
                outcome.system.push((system, result));
            }
            Err(e) => outcome.caveats.push(format!("{qc}/{system}: CV* not computed: {e}")),
        }
    }
    if !outcome.system.is_empty() {
        let results: Vec<&MeasureResult> = outcome.system.iter().map(|(_, r)| r).collect();
        outcome.qc = Some(aggregate_cv(&results, Level::Qc)?);
    }
    Ok(outcome)
}

/// Unweighted mean of system-level CV* results at the QC or study level.
pub fn aggregate_cv(system_results: &[&MeasureResult], level: Level) -> Result<MeasureResult> {
    if system_results.is_empty() {
        return Err(Error::Empty("no system-level CV* values"));
    }
    if let Some(bad) = system_results
        .iter()
        .find(|r| r.measure != Measure::CvStar || r.level != Level::System)
    {
        return Err(Error::InvalidArgument(format!(
            "expected system-level CV*, got {} at {:?}",
            bad.measure, bad.level
        )));
    }
    let values: Vec<f64> = system_results.iter().map(|r| r.value).collect();
    let mean = values.iter().sum::<f64>() / values.len() as f64;
    let n = system_results.iter().map(|r| r.n).max().unwrap_or(0);
    Ok(MeasureResult::new(Measure::CvStar, level, mean, n)?
        .with_aggregation(Aggregation::Mean)
        .with_scope(system_results.iter().flat_map(|r| r.scope.iter().cloned()))
        .with_digest(&values)
        .caveat(CV_MEAN_CAVEAT))
}

#[derive(Debug, Clone, PartialEq)]
pub struct Type2Outcome {
    pub results: Vec<MeasureResult>,
    pub caveats: Vec<String>,
}

/// Aligned score matrix for a QC; fails listing every missing cell.
pub fn score_matrix(bundle: &StudyBundle, qc: &str) -> Result<AlignedScoreMatrix> {
    let exps = experiments_of(bundle, qc, &[ResultKind::Scores]);
    let systems = ordered_systems(
        bundle,
        exps.iter()
            .flat_map(|e| e.measurements().iter().map(|m| m.object.as_str())),
    );
    let mut missing = Vec::new();
    let mut rows = Vec::new();
    for exp in &exps {
        let mut row = Vec::new();
        for system in &systems {
            match exp.score_of(system) {
                Some(m) => row.push(m.value.value),
                None => missing.push(format!("({}, {system})", exp.id)),
            }
        }
        rows.push(row);
    }
    if !missing.is_empty() {
        return Err(Error::IncompleteCoverage(format!(
            "missing cells {}",
            missing.join(", ")
        )));
    }
    AlignedScoreMatrix::new(systems, exps.iter().map(|e| e.id.clone()).collect(), rows)
}

/// QC-level correlations: r, ρ, τ-b for two experiments; mean pairwise r, ρ
/// and W for more.
pub fn assess_type2(bundle: &StudyBundle, qc: &str) -> Result<Type2Outcome> {
    let matrix = score_matrix(bundle, qc)?;
    let n = matrix.experiments().len();
    let scope = matrix.systems().to_vec();
    let flat: Vec<f64> = matrix.rows().iter().flatten().copied().collect();
    let mut outcome = Type2Outcome {
        results: Vec::new(),
        caveats: Vec::new(),
    };
    let mut push = |measure: Measure, value: Result<(f64, Aggregation, Vec<String>)>| match value {
        Ok((v, aggregation, caveats)) => {
            let mut r = MeasureResult::new(measure, Level::Qc, v, n)
                .expect("QC level is native for Type II")
                .with_aggregation(aggregation)
                .with_scope(scope.iter().cloned())
                .with_digest(&flat);
            r.caveats = caveats;
            outcome.results.push(r);
        }
        Err(e) => outcome.caveats.push(format!("{qc}: {measure} not computed: {e}")),
    };
    if n == 2 {
        let (x, y) = (&matrix.rows()[0], &matrix.rows()[1]);
        push(
            Measure::PearsonR,
            correlation::pearson_r(x, y).map(|v| (v, Aggregation::Direct, vec![])),
        );
        push(
            Measure::SpearmanRho,
            correlation::spearman_rho(x, y).map(|v| (v, Aggregation::Direct, vec![])),
        );
        push(
            Measure::KendallTauB,
            correlation::kendall_tau_b(x, y).map(|v| (v, Aggregation::Direct, vec![])),
        );
    } else {
        for (measure, which) in [
            (Measure::PearsonR, PairwiseStatistic::Pearson),
            (Measure::SpearmanRho, PairwiseStatistic::Spearman),
        ] {
            push(
                measure,
                correlation::pairwise_mean(&matrix, which).map(|m| (m.value, Aggregation::MeanPairwise, m.caveats)),
            );
        }
        push(
            Measure::KendallW,
            correlation::kendall_w(&matrix).map(|v| (v, Aggregation::Direct, vec![])),
        );
    }
    Ok(outcome)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Type3Outcome {
    pub system: Vec<(String, Vec<MeasureResult>)>,
    pub qc: Vec<MeasureResult>,
    pub label_set: Vec<String>,
    pub caveats: Vec<String>,
}

fn agreement_measures(
    grid: &LabelGrid,
    level: Level,
    scope: &[String],
    opts: &AssessOptions,
    caveats: &mut Vec<String>,
    context: &str,
) -> Vec<MeasureResult> {
    let n = grid.raters().len();
    let mut wanted = Vec::new();
    if n == 2 {
        wanted.push(match opts.two_rater_kappa {
            KappaVariant::Cohen => Measure::CohenKappa,
            KappaVariant::Fleiss => Measure::FleissKappa,
        });
    } else {
        wanted.push(Measure::FleissKappa);
    }
    wanted.push(Measure::KrippAlpha);
    let mut out = Vec::new();
    for measure in wanted {
        let value = match measure {
            Measure::CohenKappa => agreement::cohen_kappa(grid),
            Measure::FleissKappa => agreement::fleiss_kappa(grid),
            _ => agreement::kripp_alpha(grid, DistanceMetric::Nominal),
        };
        match value {
            Ok(v) => {
                let mut r = MeasureResult::new(measure, level, v, n)
                    .expect("Type III applies at system and QC level")
                    .with_scope(scope.iter().cloned());
                r.inputs_digest = grid_digest(grid);
                if measure == Measure::FleissKappa && n == 2 {
                    r = r.caveat("Fleiss's κ selected for two experiments; Cohen's κ is the two-experiment default");
                }
                if measure == Measure::CohenKappa {
                    r = r.caveat("Cohen's κ for two experiments; Fleiss's κ is available as an option");
                }
                out.push(r);
            }
            Err(e) => caveats.push(format!("{context}: {measure} not computed: {e}")),
        }
    }
    out
}

fn grid_digest(grid: &LabelGrid) -> String {
    let mut codes = Vec::new();
    for u in 0..grid.units().len() {
        for r in 0..grid.raters().len() {
            let code = grid
                .cell(u, r)
                .and_then(|l| grid.label_set().iter().position(|x| x == l))
                .map_or(-1.0, |i| i as f64);
            codes.push(code);
        }
    }
    crate::model::digest_values(&codes)
}

/// Agreement over the label experiments of a QC, per system and overall.
pub fn assess_type3(bundle: &StudyBundle, qc: &str, opts: &AssessOptions) -> Result<Type3Outcome> {
    let exps = experiments_of(bundle, qc, &[ResultKind::Labels]);
    if exps.len() < 2 {
        return Err(Error::SampleTooSmall {
            needed: 2,
            got: exps.len(),
        });
    }
    let mut label_set: Vec<String> = Vec::new();
    let mut raters = Vec::new();
    let mut declared_sets = BTreeSet::new();
    for exp in &exps {
        if let ExperimentData::Labels { label_set: ls, sets } = &exp.data {
            for l in ls {
                if !label_set.contains(l) {
                    label_set.push(l.clone());
                }
            }
            declared_sets.insert(ls.iter().cloned().collect::<BTreeSet<_>>());
            raters.push((exp.id.as_str(), sets.as_slice()));
        }
    }
    let mut caveats = Vec::new();
    if declared_sets.len() > 1 {
        caveats.push(format!(
            "{qc}: experiments declare different label sets; their union is used"
        ));
    }
    let grid = LabelGrid::from_annotations(&raters, label_set.clone())?;
    let mut system = Vec::new();
    for name in ordered_systems(bundle, grid.systems().iter().map(String::as_str)) {
        match grid.for_system(&name) {
            Ok(sub) => {
                let results = agreement_measures(
                    &sub,
                    Level::System,
                    std::slice::from_ref(&name),
                    opts,
                    &mut caveats,
                    &format!("{qc}/{name}"),
                );
                if !results.is_empty() {
                    system.push((name, results));
                }
            }
            Err(e) => caveats.push(format!("{qc}/{name}: agreement not computed: {e}")),
        }
    }
    let qc_results = agreement_measures(&grid, Level::Qc, &grid.systems(), opts, &mut caveats, qc);
    Ok(Type3Outcome {
        system,
        qc: qc_results,
        label_set,
        caveats,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct Type4Outcome {
    pub per_qc: Vec<(String, MeasureResult, PResult)>,
    pub study: Option<MeasureResult>,
    pub caveats: Vec<String>,
}

fn sign_tables(exps: &[&Experiment]) -> Result<Vec<PairwiseSignTable>> {
    exps.iter()
        .map(|e| match &e.data {
            ExperimentData::Signs(t) => Ok(t.clone()),
            _ => findings::sign_table(
                e.id.clone(),
                &e.scores().into_iter().map(|(s, v)| (s.to_string(), v)).collect(),
            ),
        })
        .collect()
}

/// P per QC and pooled (or averaged) over the study.
pub fn assess_type4(bundle: &StudyBundle, opts: &AssessOptions) -> Result<Type4Outcome> {
    let mut outcome = Type4Outcome {
        per_qc: Vec::new(),
        study: None,
        caveats: Vec::new(),
    };
    let mut findings_only = false;
    for qc in bundle.quality_criteria() {
        let exps = experiments_of(bundle, qc, &[ResultKind::Scores, ResultKind::Signs]);
        if exps.len() < 2 {
            continue;
        }
        let computed = sign_tables(&exps).and_then(|t| findings::p_from_tables(&t, opts.ties));
        match computed {
            Ok(p) => {
                let has_signs = exps.iter().any(|e| e.kind() == ResultKind::Signs);
                findings_only |= has_signs;
                let systems: BTreeSet<String> = exps
                    .iter()
                    .flat_map(|e| match &e.data {
                        ExperimentData::Signs(t) => t.systems.clone(),
                        _ => e.measurements().iter().map(|m| m.object.clone()).collect(),
                    })
                    .collect();
                let mut r = MeasureResult::new(Measure::PMeasure, Level::Qc, p.p, exps.len())?
                    .with_scope(ordered_systems(bundle, systems.iter().map(String::as_str)))
                    .with_digest(&[p.matches as f64, p.comparisons as f64]);
                if has_signs {
                    r = r.caveat(FINDINGS_ONLY_CAVEAT);
                }
                if opts.ties == TiePolicy::ExcludeTied {
                    r = r.caveat("tied system pairs excluded");
                }
                outcome.per_qc.push((qc.to_string(), r, p));
            }
            Err(e) => outcome.caveats.push(format!("{qc}: P not computed, QC skipped: {e}")),
        }
    }
    if !outcome.per_qc.is_empty() {
        let counts: Vec<(usize, usize)> = outcome
            .per_qc
            .iter()
            .map(|(_, _, p)| (p.matches, p.comparisons))
            .collect();
        let pooled = findings::pooled_p(&counts)?;
        let averaged = findings::averaged_p(&counts)?;
        let (value, aggregation, other) = match opts.study_p {
            StudyPAggregation::Pooled => (pooled, Aggregation::Pooled, ("averaging", averaged)),
            StudyPAggregation::Mean => (averaged, Aggregation::Mean, ("pooling", pooled)),
        };
        let n = outcome.per_qc.iter().map(|(_, r, _)| r.n).max().unwrap_or(0);
        let flat: Vec<f64> = counts.iter().flat_map(|(m, c)| [*m as f64, *c as f64]).collect();
        let mut r = MeasureResult::new(Measure::PMeasure, Level::Study, value, n)?
            .with_aggregation(aggregation)
            .with_scope(outcome.per_qc.iter().map(|(qc, _, _)| qc.clone()))
            .with_digest(&flat);
        if (pooled - averaged).abs() > 1e-12 {
            r = r.caveat(format!("{} per-QC values would give {:.4}", other.0, other.1));
        }
        if findings_only {
            r = r.caveat(FINDINGS_ONLY_CAVEAT);
        }
        outcome.study = Some(r);
    }
    Ok(outcome)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemResults {
    pub system: String,
    pub results: Vec<MeasureResult>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QcAssessment {
    pub qc: String,
    /// Number of comparable experiments for this QC.
    pub n: usize,
    pub systems: Vec<SystemResults>,
    pub results: Vec<MeasureResult>,
    pub similarity: SimilarityProfile,
    pub caveats: Vec<String>,
}

impl QcAssessment {
    pub fn result(&self, measure: Measure) -> Option<&MeasureResult> {
        self.results.iter().find(|r| r.measure == measure)
    }

    pub fn system_result(&self, system: &str, measure: Measure) -> Option<&MeasureResult> {
        self.systems
            .iter()
            .find(|s| s.system == system)
            .and_then(|s| s.results.iter().find(|r| r.measure == measure))
    }
}

/// Results at all three levels for one study.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelledAssessment {
    pub study_id: String,
    pub qcs: Vec<QcAssessment>,
    pub study_level: Vec<MeasureResult>,
    pub caveats: Vec<String>,
}

impl LevelledAssessment {
    pub fn qc(&self, qc: &str) -> Option<&QcAssessment> {
        self.qcs.iter().find(|q| q.qc == qc)
    }

    pub fn study_result(&self, measure: Measure) -> Option<&MeasureResult> {
        self.study_level.iter().find(|r| r.measure == measure)
    }

    pub fn all_results(&self) -> impl Iterator<Item = &MeasureResult> {
        self.qcs
            .iter()
            .flat_map(|q| q.systems.iter().flat_map(|s| s.results.iter()).chain(q.results.iter()))
            .chain(self.study_level.iter())
    }
}

/// Runs every applicable assessment over a validated, comparable bundle.
pub fn assess_study(bundle: &StudyBundle, opts: &AssessOptions) -> Result<LevelledAssessment> {
    opts.cv.validate()?;
    let findings = validate_bundle(bundle);
    if !findings.is_empty() {
        return Err(Error::Validation(findings));
    }

    let qcs = bundle.quality_criteria();
    let mut profiles = Vec::new();
    let mut refused = false;
    let mut assessments = Vec::new();
    for qc in &qcs {
        let sheets: Vec<&PropertySheet> = bundle.experiments_for(qc).map(|e| &e.properties).collect();
        let profile = similarity_profile(&sheets);
        let decision = gate(&profile, opts.mode);
        refused |= !decision.comparable;
        profiles.push((qc.to_string(), profile.clone()));
        assessments.push(QcAssessment {
            qc: qc.to_string(),
            n: sheets.len(),
            systems: Vec::new(),
            results: Vec::new(),
            similarity: profile,
            caveats: decision.caveats,
        });
    }
    if refused {
        return Err(Error::GateRefused(profiles));
    }

    let mut study_caveats = Vec::new();
    let mut all_system_cv: Vec<MeasureResult> = Vec::new();
    let mut qc_agreement: BTreeMap<Measure, Vec<(String, f64)>> = BTreeMap::new();
    let mut qc_label_sets = BTreeSet::new();

    for qa in assessments.iter_mut() {
        let qc = qa.qc.as_str();
        let mut system_map: BTreeMap<String, Vec<MeasureResult>> = BTreeMap::new();
        let score_count = experiments_of(bundle, qc, &[ResultKind::Scores]).len();
        if score_count >= 2 {
            let t1 = assess_type1(bundle, qc, opts)?;
            qa.caveats.extend(t1.caveats);
            for (system, r) in t1.system {
                all_system_cv.push(r.clone());
                system_map.entry(system).or_default().push(r);
            }
            qa.results.extend(t1.qc);
            match assess_type2(bundle, qc) {
                Ok(t2) => {
                    qa.caveats.extend(t2.caveats);
                    qa.results.extend(t2.results);
                }
                Err(e) => qa.caveats.push(format!("{qc}: Type II not computed: {e}")),
            }
        }
        if experiments_of(bundle, qc, &[ResultKind::Labels]).len() >= 2 {
            match assess_type3(bundle, qc, opts) {
                Ok(t3) => {
                    qa.caveats.extend(t3.caveats);
                    for (system, results) in t3.system {
                        system_map.entry(system).or_default().extend(results);
                    }
                    for r in &t3.qc {
                        qc_agreement
                            .entry(r.measure)
                            .or_default()
                            .push((qc.to_string(), r.value));
                    }
                    qc_label_sets.insert(t3.label_set.iter().cloned().collect::<BTreeSet<_>>());
                    qa.results.extend(t3.qc);
                }
                Err(e) => qa.caveats.push(format!("{qc}: Type III not computed: {e}")),
            }
        }
        let mut systems: Vec<SystemResults> = system_map
            .into_iter()
            .map(|(system, results)| SystemResults { system, results })
            .collect();
        systems.sort_by_key(|s| (bundle.system_rank(&s.system), s.system.clone()));
        qa.systems = systems;
    }

    let t4 = assess_type4(bundle, opts)?;
    study_caveats.extend(t4.caveats);
    for (qc, r, _) in t4.per_qc {
        if let Some(qa) = assessments.iter_mut().find(|q| q.qc == qc) {
            qa.results.push(r);
        }
    }

    let mut study_level = Vec::new();
    if !all_system_cv.is_empty() {
        let refs: Vec<&MeasureResult> = all_system_cv.iter().collect();
        study_level.push(aggregate_cv(&refs, Level::Study)?);
    }
    for (measure, values) in qc_agreement {
        let mean = agreement::aggregate_type3(&values)?;
        let n = assessments
            .iter()
            .flat_map(|q| q.result(measure))
            .map(|r| r.n)
            .max()
            .unwrap_or(0);
        let mut r = MeasureResult::new(measure, Level::Study, mean.value, n)?
            .with_aggregation(Aggregation::Mean)
            .with_scope(values.iter().map(|(qc, _)| qc.clone()))
            .with_digest(&values.iter().map(|(_, v)| *v).collect::<Vec<_>>());
        r.caveats = mean.caveats;
        if qc_label_sets.len() > 1 {
            r = r.caveat(LABEL_SETS_DIFFER);
        }
        study_level.push(r);
    }
    study_level.extend(t4.study);

    Ok(LevelledAssessment {
        study_id: bundle.study_id.clone(),
        qcs: assessments,
        study_level,
        caveats: study_caveats,
    })
}
