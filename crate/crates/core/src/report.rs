//! Assessment reports: a grid of result types by level, emitted as canonical
//! JSON, a tab-separated table or a markdown table.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::assessment::{LevelledAssessment, QcAssessment, SimilarityProfile};
use crate::error::{Error, Result};
use crate::model::{Availability, Level, Measure, MeasureResult, ResultType};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReportFormat {
    Json,
    Tsv,
    Markdown,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RowKind {
    TypeHeader,
    QcHeader,
    System,
    Measure,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "cell")]
pub enum Cell {
    Blank,
    NotApplicable,
    Value { value: f64, native: bool },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Row {
    pub kind: RowKind,
    pub label: String,
    pub measure: Option<Measure>,
    /// Measure as printed, e.g. "mean r".
    pub measure_label: String,
    /// System, QC and study level.
    pub cells: [Cell; 3],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Section {
    pub result_type: ResultType,
    pub rows: Vec<Row>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub study_id: String,
    /// Sample size printed in the level header.
    pub n: usize,
    pub sections: Vec<Section>,
    pub results: Vec<MeasureResult>,
    pub similarity: BTreeMap<String, SimilarityProfile>,
    pub caveats: Vec<String>,
}

/// Decimal places used when values are displayed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct DisplayRules {
    /// Overrides the per-measure default when set.
    pub precision: Option<usize>,
}

impl DisplayRules {
    pub fn decimals(&self, measure: Measure) -> usize {
        self.precision.unwrap_or(match measure {
            Measure::CvStar => 2,
            _ => 3,
        })
    }
}

/// Fixed decimals with trailing zeros trimmed, so 29.90 prints as 29.9 and
/// 1.000 as 1.
pub fn format_value(value: f64, decimals: usize) -> String {
    let text = format!("{value:.decimals$}");
    let text = if text.contains('.') {
        text.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        text
    };
    if text == "-0" {
        "0".to_string()
    } else {
        text
    }
}

/// Rounds to the fixed internal precision of canonical reports.
pub fn round4(value: f64) -> f64 {
    let r = (value * 1e4).round() / 1e4;
    if r == 0.0 {
        0.0
    } else {
        r
    }
}

fn rounded(result: &MeasureResult) -> MeasureResult {
    let mut r = result.clone();
    r.value = round4(r.value);
    if let Some(stats) = r.stats.as_mut() {
        for v in [
            &mut stats.mean,
            &mut stats.s,
            &mut stats.s_star,
            &mut stats.cv_star,
            &mut stats.ci_low,
            &mut stats.ci_high,
        ] {
            *v = round4(*v);
        }
    }
    r
}

fn value_cell(result: Option<&MeasureResult>) -> Cell {
    result.map_or(Cell::Blank, |r| Cell::Value {
        value: r.value,
        native: r.native,
    })
}

fn level_cell(measure: Measure, level: Level, result: Option<&MeasureResult>, first: bool) -> Cell {
    if measure.availability(level) == Availability::NotApplicable {
        Cell::NotApplicable
    } else if first {
        value_cell(result)
    } else {
        Cell::Blank
    }
}

fn type_header(result_type: ResultType) -> Row {
    Row {
        kind: RowKind::TypeHeader,
        label: result_type.to_string(),
        measure: None,
        measure_label: String::new(),
        cells: [Cell::Blank; 3],
    }
}

fn qc_header(qc: &str) -> Row {
    Row {
        kind: RowKind::QcHeader,
        label: format!("QC {qc}:"),
        measure: None,
        measure_label: String::new(),
        cells: [Cell::Blank; 3],
    }
}

fn type1_rows(assessment: &LevelledAssessment, multi: bool) -> Vec<Row> {
    let study = assessment.study_result(Measure::CvStar);
    let mut rows = Vec::new();
    let mut first_in_section = true;
    for qa in &assessment.qcs {
        let systems: Vec<(&str, &MeasureResult)> = qa
            .systems
            .iter()
            .filter_map(|s| {
                s.results
                    .iter()
                    .find(|r| r.measure == Measure::CvStar)
                    .map(|r| (s.system.as_str(), r))
            })
            .collect();
        if systems.is_empty() {
            continue;
        }
        if multi {
            rows.push(qc_header(&qa.qc));
        }
        let qc_result = qa.result(Measure::CvStar);
        for (i, (system, r)) in systems.into_iter().enumerate() {
            rows.push(Row {
                kind: RowKind::System,
                label: system.to_string(),
                measure: Some(Measure::CvStar),
                measure_label: "(mean) CV*".into(),
                cells: [
                    value_cell(Some(r)),
                    level_cell(Measure::CvStar, Level::Qc, qc_result, i == 0),
                    level_cell(Measure::CvStar, Level::Study, study, first_in_section),
                ],
            });
            first_in_section = false;
        }
    }
    rows
}

fn type2_rows(assessment: &LevelledAssessment, multi: bool) -> Vec<Row> {
    let mut rows = Vec::new();
    for qa in &assessment.qcs {
        let results: Vec<&MeasureResult> = qa
            .results
            .iter()
            .filter(|r| r.measure.result_type() == ResultType::II)
            .collect();
        if results.is_empty() {
            continue;
        }
        if multi {
            rows.push(qc_header(&qa.qc));
        }
        for r in results {
            rows.push(Row {
                kind: RowKind::Measure,
                label: String::new(),
                measure: Some(r.measure),
                measure_label: r.label(),
                cells: [
                    level_cell(r.measure, Level::System, None, true),
                    value_cell(Some(r)),
                    level_cell(r.measure, Level::Study, None, true),
                ],
            });
        }
    }
    rows
}

fn type3_rows(assessment: &LevelledAssessment, multi: bool) -> Vec<Row> {
    let mut rows = Vec::new();
    let mut study_shown: Vec<Measure> = Vec::new();
    for qa in &assessment.qcs {
        let measures: Vec<Measure> = Measure::ALL
            .iter()
            .copied()
            .filter(|m| m.result_type() == ResultType::III)
            .filter(|m| qa.result(*m).is_some() || qa.systems.iter().any(|s| s.results.iter().any(|r| r.measure == *m)))
            .collect();
        if measures.is_empty() {
            continue;
        }
        if multi {
            rows.push(qc_header(&qa.qc));
        }
        for measure in measures {
            let study_first = !study_shown.contains(&measure);
            study_shown.push(measure);
            let study = assessment.study_result(measure);
            let qc_result = qa.result(measure);
            let systems = system_rows_for(qa, measure);
            if systems.is_empty() {
                rows.push(Row {
                    kind: RowKind::Measure,
                    label: String::new(),
                    measure: Some(measure),
                    measure_label: measure.symbol().into(),
                    cells: [
                        Cell::Blank,
                        value_cell(qc_result),
                        level_cell(measure, Level::Study, study, study_first),
                    ],
                });
                continue;
            }
            for (i, (system, r)) in systems.into_iter().enumerate() {
                rows.push(Row {
                    kind: RowKind::System,
                    label: system.to_string(),
                    measure: Some(measure),
                    measure_label: measure.symbol().into(),
                    cells: [
                        value_cell(Some(r)),
                        level_cell(measure, Level::Qc, qc_result, i == 0),
                        level_cell(measure, Level::Study, study, study_first && i == 0),
                    ],
                });
            }
        }
    }
    rows
}

fn system_rows_for(qa: &QcAssessment, measure: Measure) -> Vec<(&str, &MeasureResult)> {
    qa.systems
        .iter()
        .filter_map(|s| {
            s.results
                .iter()
                .find(|r| r.measure == measure)
                .map(|r| (s.system.as_str(), r))
        })
        .collect()
}

fn type4_rows(assessment: &LevelledAssessment, multi: bool) -> Vec<Row> {
    let study = assessment.study_result(Measure::PMeasure);
    let mut rows = Vec::new();
    for qa in &assessment.qcs {
        let Some(r) = qa.result(Measure::PMeasure) else {
            continue;
        };
        rows.push(Row {
            kind: RowKind::Measure,
            label: if multi { format!("QC {}:", qa.qc) } else { String::new() },
            measure: Some(Measure::PMeasure),
            measure_label: Measure::PMeasure.symbol().into(),
            cells: [
                Cell::NotApplicable,
                value_cell(Some(r)),
                level_cell(Measure::PMeasure, Level::Study, study, rows.is_empty()),
            ],
        });
    }
    rows
}

/// Lays an assessment out as the result-type by level grid.
type RowBuilder = fn(&LevelledAssessment, bool) -> Vec<Row>;

pub fn build_report(assessment: &LevelledAssessment) -> Report {
    let multi = assessment.qcs.len() > 1;
    let builders: [(ResultType, RowBuilder); 4] = [
        (ResultType::I, type1_rows),
        (ResultType::II, type2_rows),
        (ResultType::III, type3_rows),
        (ResultType::IV, type4_rows),
    ];
    let mut sections = Vec::new();
    for (result_type, build) in builders {
        let body = build(assessment, multi);
        if body.is_empty() {
            continue;
        }
        let mut rows = vec![type_header(result_type)];
        rows.extend(body);
        sections.push(Section { result_type, rows });
    }

    let n = assessment.qcs.iter().map(|q| q.n).max().unwrap_or(0);
    let mut caveats = assessment.caveats.clone();
    if assessment.qcs.iter().any(|q| q.n != n) {
        caveats.push(format!(
            "number of experiments differs across QCs; header shows the largest (n={n})"
        ));
    }
    for qa in &assessment.qcs {
        caveats.extend(qa.caveats.iter().cloned());
    }
    let mut attached = Vec::new();
    for qa in &assessment.qcs {
        for sr in &qa.systems {
            attached.extend(
                sr.results
                    .iter()
                    .map(|r| (format!("{}/{} {}", qa.qc, sr.system, r.label()), r)),
            );
        }
        attached.extend(qa.results.iter().map(|r| (format!("{} {}", qa.qc, r.label()), r)));
    }
    attached.extend(
        assessment
            .study_level
            .iter()
            .map(|r| (format!("study {}", r.label()), r)),
    );
    for (context, r) in attached {
        for c in &r.caveats {
            let line = format!("{context}: {c}");
            if !caveats.contains(&line) {
                caveats.push(line);
            }
        }
    }
    Report {
        study_id: assessment.study_id.clone(),
        n,
        sections,
        results: assessment.all_results().cloned().collect(),
        similarity: assessment
            .qcs
            .iter()
            .map(|q| (q.qc.clone(), q.similarity.clone()))
            .collect(),
        caveats,
    }
}

/// The report with every value at the fixed four-decimal precision.
pub fn canonical(report: &Report) -> Report {
    let mut r = report.clone();
    for row in r.sections.iter_mut().flat_map(|s| s.rows.iter_mut()) {
        for cell in row.cells.iter_mut() {
            if let Cell::Value { value, .. } = cell {
                *value = round4(*value);
            }
        }
    }
    r.results = r.results.iter().map(rounded).collect();
    r
}

fn canonical_json(report: &Report) -> String {
    // serde_json::Value keeps object keys sorted.
    let value = serde_json::to_value(canonical(report)).expect("report is serializable");
    let mut text = serde_json::to_string_pretty(&value).expect("value is serializable");
    text.push('\n');
    text
}

/// Reads a canonical JSON report.
pub fn read_canonical(text: &str) -> Result<Report> {
    serde_json::from_str(text).map_err(|e| Error::Report(e.to_string()))
}

fn render_cell(cell: &Cell, measure: Option<Measure>, rules: &DisplayRules) -> (String, bool) {
    match cell {
        Cell::Blank => (String::new(), false),
        Cell::NotApplicable => ("n/a".into(), false),
        Cell::Value { value, native } => {
            let decimals = measure.map_or(3, |m| rules.decimals(m));
            (format_value(*value, decimals), *native)
        }
    }
}

fn header(report: &Report) -> String {
    format!("Degree of reproducibility (n={})", report.n)
}

fn tsv(report: &Report, rules: &DisplayRules) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "# {}: {}", report.study_id, header(report));
    out.push_str("type of result\tmeasure applied\tsystem level\tQC level\tstudy level\n");
    for section in &report.sections {
        for row in &section.rows {
            let cells: Vec<String> = row
                .cells
                .iter()
                .map(|c| match render_cell(c, row.measure, rules) {
                    (text, true) => format!("{text}*"),
                    (text, false) => text,
                })
                .collect();
            let _ = writeln!(out, "{}\t{}\t{}", row.label, row.measure_label, cells.join("\t"));
        }
    }
    out
}

fn markdown(report: &Report, rules: &DisplayRules) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "## Study {}\n", report.study_id);
    let _ = writeln!(out, "**{}**\n", header(report));
    out.push_str("| Type of result | Measure applied | System level | QC level | Study level |\n");
    out.push_str("|---|---|---|---|---|\n");
    for section in &report.sections {
        for row in &section.rows {
            let label = match row.kind {
                RowKind::TypeHeader => format!("**{}**", row.label),
                RowKind::QcHeader => format!("*{}*", row.label),
                _ => row.label.clone(),
            };
            let cells: Vec<String> = row
                .cells
                .iter()
                .map(|c| match render_cell(c, row.measure, rules) {
                    (text, true) => format!("**{text}**"),
                    (text, false) => text,
                })
                .collect();
            let _ = writeln!(out, "| {label} | {} | {} |", row.measure_label, cells.join(" | "));
        }
    }
    out.push_str("\nBold values are at the level where the measure applies natively; n/a = measure does not apply at this level.\n");
    let differing: Vec<(&String, &SimilarityProfile)> = report
        .similarity
        .iter()
        .filter(|(_, p)| !p.different.is_empty())
        .collect();
    if !differing.is_empty() {
        out.push_str("\n### Differing experiment properties\n\n");
        for (qc, profile) in differing {
            for d in &profile.different {
                let _ = writeln!(out, "- {qc}: {} ({})", d.key, d.values.join(" | "));
            }
        }
    }
    if !report.caveats.is_empty() {
        out.push_str("\n### Caveats\n\n");
        for c in &report.caveats {
            let _ = writeln!(out, "- {c}");
        }
    }
    out
}

/// Renders a report. Canonical JSON ignores display rules; it always carries
/// values at four decimals.
pub fn render(report: &Report, format: ReportFormat, rules: &DisplayRules) -> String {
    match format {
        ReportFormat::Json => canonical_json(report),
        ReportFormat::Tsv => tsv(report, rules),
        ReportFormat::Markdown => markdown(report, rules),
    }
}

pub fn emit_report(assessment: &LevelledAssessment, format: ReportFormat, rules: &DisplayRules) -> String {
    render(&build_report(assessment), format, rules)
}

/// Plain-text listing of which properties are shared and which differ.
pub fn render_similarity(profiles: &[(String, SimilarityProfile)]) -> String {
    let mut out = String::new();
    for (qc, profile) in profiles {
        let _ = writeln!(out, "QC {qc}");
        let _ = writeln!(
            out,
            "  same: {}",
            if profile.same.is_empty() {
                "-".into()
            } else {
                profile.same.join(", ")
            }
        );
        if profile.different.is_empty() {
            out.push_str("  different: -\n");
        } else {
            out.push_str("  different:\n");
            for d in &profile.different {
                let _ = writeln!(out, "    {}: {}", d.key, d.values.join(" | "));
            }
        }
        if !profile.coverage.is_empty() {
            let _ = writeln!(out, "  not recorded everywhere: {}", profile.coverage.join(", "));
        }
    }
    out
}
