//! Seeded suites shared by the integration tests and the acceptance runner.
//! Each returns the first failing instance as an error.

use std::collections::BTreeMap;

use rand::rngs::StdRng;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};

use reprometer::agreement::{cohen_kappa, fleiss_kappa, kripp_alpha, DistanceMetric};
use reprometer::assessment::{assess_study, AssessOptions};
use reprometer::bundle::{parse_bundle, serialize_bundle};
use reprometer::correlation::{kendall_tau_b, kendall_w, pearson_r, spearman_rho, AlignedScoreMatrix};
use reprometer::findings::p_measure;
use reprometer::precision::{cv_star, CvOptions};
use reprometer::report::{emit_report, read_canonical, render, DisplayRules, ReportFormat};

use super::{check, close, gen, load, oracle, TOL};

pub const INSTANCES: usize = 1000;

type GridMeasure = fn(&reprometer::agreement::LabelGrid) -> reprometer::Result<f64>;

fn scores_map(values: &[f64]) -> BTreeMap<String, f64> {
    values
        .iter()
        .enumerate()
        .map(|(i, v)| (format!("s{i:02}"), *v))
        .collect()
}

fn agree(
    name: &str,
    got: reprometer::Result<f64>,
    want: Option<f64>,
    case: &dyn std::fmt::Debug,
) -> Result<(), String> {
    match (got, want) {
        (Ok(g), Some(w)) => check(close(g, w, TOL), || format!("{name}: {g} vs oracle {w} on {case:?}")),
        (Err(_), None) => Ok(()),
        (g, w) => Err(format!("{name}: definedness differs ({g:?} vs {w:?}) on {case:?}")),
    }
}

pub fn cv_star_vs_direct_gamma() -> Result<(), String> {
    let mut rng = StdRng::seed_from_u64(11);
    let opts = CvOptions::default();
    for _ in 0..INSTANCES {
        let n = rng.gen_range(2..=6);
        let values: Vec<f64> = (0..n).map(|_| 100.0 - rng.gen_range(0.0..100.0)).collect();
        let got = cv_star(&values, &opts).map_err(|e| e.to_string())?.cv_star;
        let want = oracle::cv_star(&values);
        check(close(got, want, TOL), || format!("CV* {got} vs {want} on {values:?}"))?;
    }
    Ok(())
}

pub fn correlations_vs_naive() -> Result<(), String> {
    let mut rng = StdRng::seed_from_u64(12);
    for _ in 0..INSTANCES {
        let systems = rng.gen_range(2..=6);
        let experiments = rng.gen_range(2..=5);
        let rows: Vec<Vec<f64>> = (0..experiments)
            .map(|_| gen::ties_or_continuous(&mut rng, systems))
            .collect();
        let (x, y) = (&rows[0], &rows[1]);
        agree("r", pearson_r(x, y), oracle::pearson(x, y), &rows)?;
        agree("rho", spearman_rho(x, y), oracle::spearman(x, y), &rows)?;
        agree("tau-b", kendall_tau_b(x, y), oracle::tau_b(x, y), &rows)?;
        let matrix = AlignedScoreMatrix::from_rows(rows.clone()).map_err(|e| e.to_string())?;
        agree("W", kendall_w(&matrix), oracle::kendall_w(&rows), &rows)?;
    }
    Ok(())
}

pub fn alpha_vs_pairable_values() -> Result<(), String> {
    let mut rng = StdRng::seed_from_u64(13);
    let mut done = 0;
    while done < INSTANCES {
        let units = rng.gen_range(1..=6);
        let raters = rng.gen_range(2..=4);
        let k = rng.gen_range(2..=3);
        let cells = gen::label_cells(&mut rng, units, raters, k, 0.1);
        let Ok(grid) = gen::grid(units, &cells, &gen::LABELS[..k]) else {
            // No unit carries two labels; nothing to compare.
            continue;
        };
        agree(
            "alpha",
            kripp_alpha(&grid, DistanceMetric::Nominal),
            oracle::alpha(&cells),
            &cells,
        )?;
        if raters == 2 && grid.is_complete() {
            let a: Vec<usize> = cells.iter().map(|r| r[0].unwrap()).collect();
            let b: Vec<usize> = cells.iter().map(|r| r[1].unwrap()).collect();
            agree("cohen", cohen_kappa(&grid), oracle::cohen(&a, &b, k), &cells)?;
        }
        done += 1;
    }
    Ok(())
}

pub fn p_vs_enumeration() -> Result<(), String> {
    let mut rng = StdRng::seed_from_u64(14);
    for _ in 0..INSTANCES {
        let systems = rng.gen_range(2..=6);
        let experiments = rng.gen_range(2..=5);
        let rows: Vec<Vec<f64>> = (0..experiments)
            .map(|_| (0..systems).map(|_| rng.gen_range(1..=4) as f64).collect())
            .collect();
        let maps: Vec<_> = rows.iter().map(|r| scores_map(r)).collect();
        let got = p_measure(&maps).map_err(|e| e.to_string())?;
        let (matches, total) = oracle::p_ordered(&rows);
        check(close(got.p, matches as f64 / total as f64, TOL), || {
            format!("P {} vs {matches}/{total} on {rows:?}", got.p)
        })?;
        check(got.matches * 4 == matches && got.comparisons * 4 == total, || {
            format!(
                "unordered counts {}/{} vs ordered {matches}/{total}",
                got.matches, got.comparisons
            )
        })?;
    }
    Ok(())
}

pub fn cv_scale_invariance() -> Result<(), String> {
    let mut rng = StdRng::seed_from_u64(21);
    let opts = CvOptions::default();
    for _ in 0..INSTANCES {
        let n = rng.gen_range(2..=8);
        let values: Vec<f64> = (0..n).map(|_| rng.gen_range(0.01..100.0)).collect();
        let k = rng.gen_range(0.001..1000.0);
        let scaled: Vec<f64> = values.iter().map(|v| v * k).collect();
        let a = cv_star(&values, &opts).unwrap().cv_star;
        let b = cv_star(&scaled, &opts).unwrap().cv_star;
        check(close(a, b, TOL * a.max(1.0)), || {
            format!("CV* {a} vs {b} after scaling by {k}")
        })?;
    }
    Ok(())
}

fn monotone(kind: usize, v: f64) -> f64 {
    match kind {
        0 => v.exp(),
        1 => v * v * v + v,
        2 => 3.0 * v - 7.0,
        _ => v.atan(),
    }
}

pub fn p_monotone_invariance() -> Result<(), String> {
    let mut rng = StdRng::seed_from_u64(22);
    for _ in 0..INSTANCES {
        let systems = rng.gen_range(2..=6);
        let rows: Vec<Vec<f64>> = (0..rng.gen_range(2..=4))
            .map(|_| (0..systems).map(|_| rng.gen_range(1..=4) as f64 / 2.0).collect())
            .collect();
        let before = p_measure(&rows.iter().map(|r| scores_map(r)).collect::<Vec<_>>()).unwrap();
        let mut transformed = rows.clone();
        let which = rng.gen_range(0..rows.len());
        let kind = rng.gen_range(0..4);
        transformed[which] = transformed[which].iter().map(|v| monotone(kind, *v)).collect();
        let after = p_measure(&transformed.iter().map(|r| scores_map(r)).collect::<Vec<_>>()).unwrap();
        check(before == after, || {
            format!("P changed under transform {kind} on {rows:?}")
        })?;
    }
    Ok(())
}

pub fn p_tau_coherence() -> Result<(), String> {
    let mut rng = StdRng::seed_from_u64(23);
    for _ in 0..INSTANCES {
        let systems = rng.gen_range(2..=5);
        let x = gen::distinct(&mut rng, systems);
        let y = if rng.gen_bool(0.3) {
            x.clone()
        } else if rng.gen_bool(0.3) {
            x.iter().map(|v| -v).collect()
        } else {
            gen::distinct(&mut rng, systems)
        };
        let p = p_measure(&[scores_map(&x), scores_map(&y)]).unwrap().p;
        let tau = kendall_tau_b(&x, &y).unwrap();
        check((p == 1.0) == (tau == 1.0), || {
            format!("p={p}, tau={tau} on {x:?} / {y:?}")
        })?;
        check((p == 0.0) == (tau == -1.0), || {
            format!("p={p}, tau={tau} on {x:?} / {y:?}")
        })?;
    }
    Ok(())
}

pub fn perfect_agreement_is_one() -> Result<(), String> {
    let mut rng = StdRng::seed_from_u64(24);
    for _ in 0..INSTANCES {
        let units = rng.gen_range(2..=8);
        let raters = rng.gen_range(2..=4);
        let k = rng.gen_range(2..=4);
        let mut column: Vec<usize> = (0..units).map(|_| rng.gen_range(0..k)).collect();
        // At least two categories in use.
        column[0] = 0;
        column[1] = 1;
        let cells: Vec<Vec<Option<usize>>> = column.iter().map(|&c| vec![Some(c); raters]).collect();
        let grid = gen::grid(units, &cells, &gen::LABELS[..k]).unwrap();
        let alpha = kripp_alpha(&grid, DistanceMetric::Nominal).unwrap();
        let fleiss = fleiss_kappa(&grid).unwrap();
        check(alpha == 1.0 && fleiss == 1.0, || {
            format!("alpha {alpha}, fleiss {fleiss} on {cells:?}")
        })?;
        if raters == 2 {
            let cohen = cohen_kappa(&grid).unwrap();
            check(cohen == 1.0, || format!("cohen {cohen} on {cells:?}"))?;
        }

        let systems = rng.gen_range(2..=6);
        let row = gen::distinct(&mut rng, systems);
        let rows = vec![row; raters];
        let w = kendall_w(&AlignedScoreMatrix::from_rows(rows.clone()).unwrap()).unwrap();
        check(w == 1.0, || format!("W {w} on {rows:?}"))?;
    }
    Ok(())
}

pub fn label_renaming_invariance() -> Result<(), String> {
    let mut rng = StdRng::seed_from_u64(25);
    for _ in 0..INSTANCES {
        let units = rng.gen_range(2..=6);
        let raters = rng.gen_range(2..=4);
        let k = rng.gen_range(2..=4);
        let cells = gen::label_cells(&mut rng, units, raters, k, 0.0);
        let mut perm: Vec<usize> = (0..k).collect();
        perm.shuffle(&mut rng);
        let renamed: Vec<Vec<Option<usize>>> = cells
            .iter()
            .map(|r| r.iter().map(|c| c.map(|i| perm[i])).collect())
            .collect();
        let a = gen::grid(units, &cells, &gen::LABELS[..k]).unwrap();
        let b = gen::grid(units, &renamed, &gen::LABELS[..k]).unwrap();
        let pairs: [(&str, GridMeasure); 3] = [
            ("alpha", |g| kripp_alpha(g, DistanceMetric::Nominal)),
            ("fleiss", fleiss_kappa),
            ("cohen", cohen_kappa),
        ];
        for (name, f) in pairs {
            if name == "cohen" && raters != 2 {
                continue;
            }
            match (f(&a), f(&b)) {
                (Ok(x), Ok(y)) => check(close(x, y, 1e-12), || format!("{name} {x} vs {y} after renaming"))?,
                (Err(_), Err(_)) => {}
                (x, y) => return Err(format!("{name}: {x:?} vs {y:?} after renaming")),
            }
        }
    }
    Ok(())
}

pub const FIXTURES: [&str; 3] = [
    "fluency_three_runs.bundle",
    "two_criteria_pair.bundle",
    "essay_scoring_eight_runs.bundle",
];

pub fn report_determinism() -> Result<(), String> {
    let rules = DisplayRules::default();
    for name in FIXTURES {
        let bundle = load(name);
        let first = assess_study(&bundle, &AssessOptions::default()).map_err(|e| e.to_string())?;
        let second = assess_study(&bundle.clone(), &AssessOptions::default()).map_err(|e| e.to_string())?;
        for format in [ReportFormat::Json, ReportFormat::Tsv, ReportFormat::Markdown] {
            let a = emit_report(&first, format, &rules);
            let b = emit_report(&second, format, &rules);
            check(a == b, || format!("{name}: {format:?} report differs between runs"))?;
        }
        let json = emit_report(&first, ReportFormat::Json, &rules);
        let reread = read_canonical(&json).map_err(|e| e.to_string())?;
        check(render(&reread, ReportFormat::Json, &rules) == json, || {
            format!("{name}: canonical report does not round-trip")
        })?;
    }
    Ok(())
}

pub fn bundle_round_trip() -> Result<(), String> {
    let mut documents: Vec<String> = FIXTURES
        .iter()
        .map(|n| std::fs::read_to_string(super::data_path(n)).unwrap())
        .collect();
    let mut rng = StdRng::seed_from_u64(26);
    documents.extend((0..200).map(|_| gen::bundle_document(&mut rng)));
    for doc in documents {
        let parsed = parse_bundle(&doc).map_err(|e| format!("{e} in\n{doc}"))?;
        let text = serialize_bundle(&parsed);
        let again = parse_bundle(&text).map_err(|e| format!("{e} in\n{text}"))?;
        check(again == parsed, || format!("round trip changed the bundle:\n{doc}"))?;
    }
    Ok(())
}
