//! Seeded random inputs.

use rand::rngs::StdRng;
use rand::seq::SliceRandom;
use rand::Rng;

use reprometer::agreement::{LabelGrid, UnitKey};

pub fn ties_or_continuous(rng: &mut StdRng, len: usize) -> Vec<f64> {
    if rng.gen_bool(0.5) {
        (0..len).map(|_| rng.gen_range(1..=5) as f64).collect()
    } else {
        (0..len).map(|_| rng.gen_range(-50.0..50.0)).collect()
    }
}

pub fn distinct(rng: &mut StdRng, len: usize) -> Vec<f64> {
    let mut v: Vec<f64> = (0..len).map(|i| i as f64 + rng.gen_range(0.0..0.9)).collect();
    v.shuffle(rng);
    v
}

pub fn unit_keys(count: usize) -> Vec<UnitKey> {
    (0..count)
        .map(|i| UnitKey {
            system: format!("S{}", i % 2),
            item_id: format!("i{i}"),
            span: None,
        })
        .collect()
}

pub fn grid(units: usize, labels: &[Vec<Option<usize>>], label_set: &[&str]) -> reprometer::Result<LabelGrid> {
    let raters = labels.first().map_or(0, Vec::len);
    LabelGrid::new(
        unit_keys(units),
        (0..raters).map(|r| format!("R{r}")).collect(),
        label_set.iter().map(|s| s.to_string()).collect(),
        labels
            .iter()
            .map(|row| row.iter().map(|c| c.map(|i| label_set[i].to_string())).collect())
            .collect(),
    )
}

/// Random units x raters cells; roughly one cell in ten is missing.
pub fn label_cells(rng: &mut StdRng, units: usize, raters: usize, k: usize, absence: f64) -> Vec<Vec<Option<usize>>> {
    (0..units)
        .map(|_| {
            (0..raters)
                .map(|_| (!rng.gen_bool(absence)).then(|| rng.gen_range(0..k)))
                .collect()
        })
        .collect()
}

pub const LABELS: [&str; 4] = ["a", "b", "c", "d"];

/// A random valid bundle document mixing score, label and sign experiments.
pub fn bundle_document(rng: &mut StdRng) -> String {
    let systems: Vec<String> = (0..rng.gen_range(2..=5)).map(|i| format!("sys{i}")).collect();
    let mut doc = format!("study gen{}\nsystems {}\n", rng.gen_range(0..1000), systems.join(" "));
    let qcs = rng.gen_range(1..=3);
    for q in 0..qcs {
        let kind = ["scores", "labels", "signs"][rng.gen_range(0..3)];
        for e in 0..rng.gen_range(2..=4) {
            doc.push_str(&format!("\nexperiment q{q}e{e}\n  qc qc{q}\n  kind {kind}\n"));
            if kind != "signs" {
                doc.push_str("  scale 1 5\n");
            }
            if rng.gen_bool(0.5) {
                doc.push_str(&format!("  time 2024-0{}-01\n", rng.gen_range(1..=9)));
            }
            doc.push_str(&format!("  prop test_dataset = set {}\n", rng.gen_range(0..2)));
            if rng.gen_bool(0.5) {
                doc.push_str(&format!("  prop H3.2.1 = {}\n", rng.gen_range(1..6)));
                doc.push_str("  prop rating_instrument_type = Slider\n");
            }
            if rng.gen_bool(0.5) {
                doc.push_str(&format!("  ext random_seed = {}\n", rng.gen_range(0..100)));
            }
            match kind {
                "scores" => {
                    for s in &systems {
                        let v = rng.gen_range(1.0..5.0f64);
                        doc.push_str(&format!("  score {s} {v}\n"));
                    }
                }
                "labels" => {
                    doc.push_str("  labelset a b c\n");
                    for s in &systems {
                        for item in 0..rng.gen_range(1..=3) {
                            let label = LABELS[rng.gen_range(0..3)];
                            if rng.gen_bool(0.5) {
                                doc.push_str(&format!("  label {s} it{item} {}:{} {label}\n", item * 4, item * 4 + 3));
                            } else {
                                doc.push_str(&format!("  label {s} it{item} {label}\n"));
                            }
                        }
                    }
                }
                _ => {
                    let order = distinct(rng, systems.len());
                    for i in 0..systems.len() {
                        for j in i + 1..systems.len() {
                            let sign = if order[i] > order[j] { "+1" } else { "-1" };
                            doc.push_str(&format!("  sign {} {} {sign}\n", systems[i], systems[j]));
                        }
                    }
                }
            }
            doc.push_str("end\n");
        }
    }
    doc
}
