//! Acceptance runner: one PASS/FAIL line per criterion.

mod support;

use std::f64::consts::PI;
use std::process::{Command, ExitCode};

use reprometer::assessment::{aggregate_cv, assess_study, AssessOptions};
use reprometer::bundle::parse_bundle;
use reprometer::correlation::{
    kendall_tau_b, kendall_w, pairwise_mean, spearman_rho, AlignedScoreMatrix, PairwiseStatistic,
};
use reprometer::findings::{p_measure, pooled_p};
use reprometer::model::{Availability, Level, Measure, MeasureResult};
use reprometer::precision::{c4, cv_star, CvOptions};
use reprometer::report::{build_report, Cell};
use support::{check, display, suites};

type Outcome = Result<String, String>;
type Suite = fn() -> Result<(), String>;
type Criterion = fn() -> Outcome;

fn system_cvs(values: &[f64]) -> Result<Vec<MeasureResult>, String> {
    values
        .iter()
        .map(|&v| MeasureResult::new(Measure::CvStar, Level::System, v, 2).map_err(|e| e.to_string()))
        .collect()
}

fn mean_at(values: &[f64], level: Level) -> Result<f64, String> {
    let results = system_cvs(values)?;
    let refs: Vec<&MeasureResult> = results.iter().collect();
    aggregate_cv(&refs, level).map(|r| r.value).map_err(|e| e.to_string())
}

fn expect_display(name: &str, got: f64, decimals: i32, printed: f64) -> Result<(), String> {
    check(display(got, decimals) == printed, || {
        format!(
            "{name}: {got} displays as {}, expected {printed}",
            display(got, decimals)
        )
    })
}

fn table3_aggregation() -> Outcome {
    let qc = mean_at(&[19.96, 29.9, 30.76], Level::Qc)?;
    expect_display("QC mean", qc, 2, 26.87)?;
    Ok(format!("QC mean {qc:.4}"))
}

const QUALITY: [f64; 3] = [47.25, 54.72, 32.53];
const ACCEPTABILITY: [f64; 3] = [9.18, 8.86, 13.34];

fn table4_aggregation() -> Outcome {
    let q1 = mean_at(&QUALITY, Level::Qc)?;
    let q2 = mean_at(&ACCEPTABILITY, Level::Qc)?;
    let all: Vec<f64> = QUALITY.iter().chain(&ACCEPTABILITY).copied().collect();
    let study = mean_at(&all, Level::Study)?;
    expect_display("QC 1 mean", q1, 2, 44.83)?;
    expect_display("QC 2 mean", q2, 2, 10.46)?;
    expect_display("study mean", study, 2, 27.65)?;
    Ok(format!("{q1:.4}, {q2:.4}, study {study:.4}"))
}

fn table5_aggregation() -> Outcome {
    let systems = [14.34, 10.33, 9.91, 3.88, 3.88, 4.5, 4.64, 17.42, 18.29, 17.05, 16.25];
    let study = mean_at(&systems, Level::Study)?;
    expect_display("study mean", study, 2, 10.95)?;
    Ok(format!("study {study:.4}"))
}

fn pooled_p_table4() -> Outcome {
    let p = pooled_p(&[(0, 3), (2, 3)]).map_err(|e| e.to_string())?;
    expect_display("pooled P", p, 3, 0.333)?;
    check(p == 2.0 / 6.0, || format!("pooled P {p} is not 2/6"))?;
    Ok(format!("P {p:.4}"))
}

fn perfect_concordance() -> Outcome {
    let rows = vec![vec![3.1, 2.2, 4.0], vec![3.4, 2.9, 4.6], vec![2.8, 1.5, 3.9]];
    let matrix = AlignedScoreMatrix::from_rows(rows.clone()).map_err(|e| e.to_string())?;
    let rho = pairwise_mean(&matrix, PairwiseStatistic::Spearman)
        .map_err(|e| e.to_string())?
        .value;
    let w = kendall_w(&matrix).map_err(|e| e.to_string())?;
    let maps: Vec<_> = rows
        .iter()
        .map(|r| r.iter().enumerate().map(|(i, v)| (format!("s{i}"), *v)).collect())
        .collect();
    let p = p_measure(&maps).map_err(|e| e.to_string())?.p;
    check(rho == 1.0 && w == 1.0 && p == 1.0, || {
        format!("mean rho {rho}, W {w}, P {p}")
    })?;
    Ok("mean ρ = W = P = 1".into())
}

fn tie_signature() -> Outcome {
    let x = [1.0, 2.0, 3.0];
    let y = [1.0, 2.0, 2.0];
    let rho = spearman_rho(&x, &y).map_err(|e| e.to_string())?;
    let tau = kendall_tau_b(&x, &y).map_err(|e| e.to_string())?;
    expect_display("rho", rho, 3, 0.866)?;
    expect_display("tau-b", tau, 3, 0.816)?;
    Ok(format!("ρ {rho:.4}, τ-b {tau:.4}"))
}

fn cv_star_oracle() -> Outcome {
    let derivation = (1.0 + 1.0 / 8.0) * (PI.sqrt() / 2.0) / 3.5 * 100.0;
    let got = cv_star(&[3.0, 4.0], &CvOptions::default())
        .map_err(|e| e.to_string())?
        .cv_star;
    check((got - derivation).abs() < 1e-4, || {
        format!("CV* {got} vs derivation {derivation}")
    })?;
    let closed = [
        (2, (2.0 / PI).sqrt()),
        (3, PI.sqrt() / 2.0),
        (4, 2.0 * (2.0 / (3.0 * PI)).sqrt()),
    ];
    for (n, want) in closed {
        let got = c4(n).map_err(|e| e.to_string())?;
        check((got - want).abs() < 1e-9, || {
            format!("c4({n}) = {got}, closed form {want}")
        })?;
    }
    Ok(format!("CV*([3,4]) {got:.6} vs derivation {derivation:.6}"))
}

fn run_suites(list: &[(&str, Suite)]) -> Outcome {
    for (name, suite) in list {
        suite().map_err(|e| format!("{name}: {e}"))?;
    }
    Ok(list.iter().map(|(n, _)| *n).collect::<Vec<_>>().join(", "))
}

fn brute_force_suites() -> Outcome {
    run_suites(&[
        ("CV*", suites::cv_star_vs_direct_gamma),
        ("r/ρ/τ-b/W", suites::correlations_vs_naive),
        ("α and κ", suites::alpha_vs_pairable_values),
        ("P", suites::p_vs_enumeration),
    ])
}

fn property_suites() -> Outcome {
    run_suites(&[
        ("CV* scale", suites::cv_scale_invariance),
        ("P monotone", suites::p_monotone_invariance),
        ("P/τ-b", suites::p_tau_coherence),
        ("identical inputs", suites::perfect_agreement_is_one),
        ("label renaming", suites::label_renaming_invariance),
        ("report determinism", suites::report_determinism),
        ("bundle round trip", suites::bundle_round_trip),
    ])
}

const LABELS_BUNDLE: &str = "study labels
systems A B

experiment e1
  qc errors
  kind labels
  scale 0 1
  labelset ok bad
  label A i1 ok
  label A i2 bad
  label A i3 ok
  label B i1 bad
  label B i2 bad
  label B i3 ok
end

experiment e2
  qc errors
  kind labels
  scale 0 1
  labelset ok bad
  label A i1 ok
  label A i2 bad
  label A i3 bad
  label B i1 bad
  label B i2 ok
  label B i3 ok
end
";

/// Expected availability per measure at system, QC and study level.
fn expected_cells(measure: Measure) -> [Availability; 3] {
    use Availability::*;
    match measure {
        Measure::CvStar => [Native, Derived, Derived],
        Measure::PearsonR | Measure::SpearmanRho | Measure::KendallTauB | Measure::KendallW => {
            [NotApplicable, Native, NotApplicable]
        }
        Measure::CohenKappa | Measure::FleissKappa | Measure::KrippAlpha => [Derived, Native, Derived],
        Measure::PMeasure => [NotApplicable, Derived, Native],
    }
}

const ALL_MEASURES: [Measure; 9] = [
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

const LEVELS: [Level; 3] = [Level::System, Level::Qc, Level::Study];

fn availability_matrix() -> Outcome {
    for measure in ALL_MEASURES {
        let want = expected_cells(measure);
        for (level, want) in LEVELS.iter().zip(want) {
            let got = measure.availability(*level);
            check(got == want, || {
                format!("{measure} at {level:?}: {got:?}, expected {want:?}")
            })?;
            let result = MeasureResult::new(measure, *level, 0.5, 2);
            check(result.is_ok() == (want != Availability::NotApplicable), || {
                format!("{measure} at {level:?}: construction {result:?}")
            })?;
            if let Ok(r) = result {
                check(r.native == (want == Availability::Native), || {
                    format!("{measure} at {level:?}: native flag")
                })?;
            }
        }
    }
    let mut bundles: Vec<_> = suites::FIXTURES.iter().map(|f| support::load(f)).collect();
    bundles.push(parse_bundle(LABELS_BUNDLE).map_err(|e| e.to_string())?);
    let mut cells = 0;
    for bundle in &bundles {
        let assessment = assess_study(bundle, &AssessOptions::default()).map_err(|e| e.to_string())?;
        let report = build_report(&assessment);
        for row in report.sections.iter().flat_map(|s| &s.rows) {
            let Some(measure) = row.measure else { continue };
            for (cell, want) in row.cells.iter().zip(expected_cells(measure)) {
                let ok = match cell {
                    Cell::NotApplicable => want == Availability::NotApplicable,
                    Cell::Value { native, .. } => {
                        want != Availability::NotApplicable && *native == (want == Availability::Native)
                    }
                    Cell::Blank => want != Availability::NotApplicable,
                };
                check(ok, || {
                    format!(
                        "{}: {} row {:?}: {cell:?} where {want:?}",
                        report.study_id, row.measure_label, row.label
                    )
                })?;
                cells += 1;
            }
        }
    }
    Ok(format!(
        "{} measure/level cells, {cells} report cells",
        ALL_MEASURES.len() * 3
    ))
}

fn cli(args: &[&str]) -> Result<String, String> {
    let output = Command::new(env!("CARGO_BIN_EXE_reprometer"))
        .args(args)
        .output()
        .map_err(|e| e.to_string())?;
    check(output.status.code() == Some(0), || {
        format!(
            "{args:?} exited {:?}: {}",
            output.status.code(),
            String::from_utf8_lossy(&output.stderr)
        )
    })?;
    Ok(String::from_utf8_lossy(&output.stdout).into_owned())
}

/// Row shapes: label, measure, then one of "v*", "v", "n/a" or "" per level.
fn shape(tsv: &str) -> Vec<String> {
    tsv.lines()
        .filter(|l| !l.starts_with('#') && !l.is_empty())
        .skip(1)
        .map(|line| {
            let cols: Vec<&str> = line.split('\t').collect();
            let cells: Vec<&str> = cols[2..]
                .iter()
                .map(|c| match *c {
                    "" => "",
                    "n/a" => "n/a",
                    c if c.ends_with('*') => "v*",
                    _ => "v",
                })
                .collect();
            format!("{}|{}|{}", cols[0], cols[1], cells.join("|"))
        })
        .collect()
}

fn type1_block(systems: &[&str], first: &str) -> Vec<String> {
    systems
        .iter()
        .enumerate()
        .map(|(i, s)| format!("{s}|(mean) CV*|v*|{}", if i == 0 { first } else { "|" }))
        .collect()
}

fn end_to_end_cli() -> Outcome {
    let path = |name: &str| support::data_path(name).to_string_lossy().into_owned();
    let header = "Type I||||";
    let mut table3 = vec![header.to_string()];
    table3.extend(type1_block(&["SVM", "GeDi", "DExpert"], "v|v"));
    table3.extend(
        [
            "Type II||||",
            "|mean r|n/a|v*|n/a",
            "|mean ρ|n/a|v*|n/a",
            "|W|n/a|v*|n/a",
            "Type IV||||",
            "|P|n/a|v|v*",
        ]
        .map(String::from),
    );
    let got = shape(&cli(&[
        "assess",
        &path("fluency_three_runs.bundle"),
        "--format",
        "tsv",
    ])?);
    check(got == table3, || format!("three-run layout {got:?}"))?;

    let t4 = ["T5-base", "T5-large", "GPT2-large"];
    let mut table4 = vec![header.to_string(), "QC overall-quality:||||".into()];
    table4.extend(type1_block(&t4, "v|v"));
    table4.push("QC acceptability:||||".into());
    table4.extend(type1_block(&t4, "v|"));
    table4.push("Type II||||".into());
    for qc in ["overall-quality", "acceptability"] {
        table4.push(format!("QC {qc}:||||"));
        table4.extend(["|r|n/a|v*|n/a", "|ρ|n/a|v*|n/a", "|τ|n/a|v*|n/a"].map(String::from));
    }
    table4.extend(
        [
            "Type IV||||",
            "QC overall-quality:|P|n/a|v|v*",
            "QC acceptability:|P|n/a|v|",
        ]
        .map(String::from),
    );
    let got = shape(&cli(&["assess", &path("two_criteria_pair.bundle"), "--format", "tsv"])?);
    check(got == table4, || format!("two-criteria layout {got:?}"))?;

    let t5 = [
        "mult-base",
        "mult-word-L-",
        "mult-word-L+",
        "mult-pos-L-",
        "mult-pos-L+",
        "mult-dep-L-",
        "mult-dep-L+",
        "mult-dom-L-",
        "mult-dom-L+",
        "mult-emb-L-",
        "mult-emb-L+",
    ];
    let mut table5 = vec![header.to_string()];
    table5.extend(type1_block(&t5, "v|v"));
    table5.extend(
        [
            "Type II||||",
            "|mean r|n/a|v*|n/a",
            "|mean ρ|n/a|v*|n/a",
            "|W|n/a|v*|n/a",
            "Type IV||||",
            "|P|n/a|v|v*",
        ]
        .map(String::from),
    );
    let essay = path("essay_scoring_eight_runs.bundle");
    let out = cli(&["assess", &essay, "--format", "tsv"])?;
    check(
        out.starts_with("# essay-scoring-eight-runs: Degree of reproducibility (n=8)\n"),
        || "n=8 header".into(),
    )?;
    let got = shape(&out);
    check(got == table5, || format!("eight-run layout {got:?}"))?;

    let out = cli(&[
        "partition",
        &essay,
        "--by",
        "test_dataset,random_seed",
        "--assess",
        "--format",
        "tsv",
    ])?;
    let reports = out
        .lines()
        .filter(|l| l.starts_with("# ") && l.contains("Degree of reproducibility"))
        .count();
    check(reports == 2, || format!("{reports} group reports"))?;
    Ok("three assessments and a two-group partition".into())
}

fn main() -> ExitCode {
    let criteria: [(&str, Criterion); 11] = [
        ("aggregation over three-run system CV*", table3_aggregation),
        ("aggregation over two-criteria system CV*", table4_aggregation),
        ("aggregation over eleven-system CV*", table5_aggregation),
        ("pooled study P", pooled_p_table4),
        ("perfect concordance", perfect_concordance),
        ("tie signature", tie_signature),
        ("CV* and c4 closed forms", cv_star_oracle),
        ("brute-force equivalence suites", brute_force_suites),
        ("property suites", property_suites),
        ("measure/level availability matrix", availability_matrix),
        ("end-to-end CLI", end_to_end_cli),
    ];
    let mut failed = 0;
    for (i, (name, criterion)) in criteria.iter().enumerate() {
        match criterion() {
            Ok(detail) => println!("PASS {:>2}. {name}: {detail}", i + 1),
            Err(reason) => {
                failed += 1;
                println!("FAIL {:>2}. {name}: {reason}", i + 1);
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
