//! Line-oriented text format for study bundles.
//!
//! ```text
//! # comment
//! study toxicity
//! systems SVM GeDi DExpert
//!
//! experiment e1
//!   qc toxicity
//!   kind scores            # scores | labels | signs
//!   scale 0 1              # min, then max or `unbounded`
//!   time 2022-05-01
//!   prop test_dataset = RealToxicityPrompts
//!   # keys are slugs or HEDS codes; values run to the end of the line
//!   prop H3.2.1 = 3
//!   ext random_seed = 42
//!   score SVM 0.12
//! end
//! ```
//!
//! Label experiments declare `labelset a b c` and give
//! `label <system> <item> [<start>:<end>] <label>` lines; sign experiments give
//! `sign <a> <b> <+1|0|-1>` lines, the sign of `M(a) - M(b)`. Comments start a
//! line with `#`; a `#` after a directive's arguments also starts a comment,
//! except inside `prop`/`ext` values.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::findings::{PairwiseSignTable, Sign};
use crate::model::{
    Annotation, AnnotationSet, Experiment, ExperimentData, Measurement, QuantityValue, ResultKind, Scale, StudyBundle,
};
use crate::properties::{PropertyKey, PropertySheet};

struct Token<'a> {
    text: &'a str,
    column: usize,
}

struct Line<'a> {
    number: usize,
    raw: &'a str,
    tokens: Vec<Token<'a>>,
}

impl<'a> Line<'a> {
    fn split(number: usize, raw: &'a str) -> Line<'a> {
        let mut tokens = Vec::new();
        let mut start: Option<usize> = None;
        for (i, c) in raw.char_indices().chain(std::iter::once((raw.len(), ' '))) {
            if c.is_whitespace() {
                if let Some(s) = start.take() {
                    tokens.push(Token {
                        text: &raw[s..i],
                        column: raw[..s].chars().count() + 1,
                    });
                }
            } else if start.is_none() {
                if c == '#' {
                    break;
                }
                start = Some(i);
            }
        }
        Line { number, raw, tokens }
    }

    fn syntax(&self, token: usize, message: impl Into<String>) -> Error {
        let column = self
            .tokens
            .get(token)
            .map_or_else(|| self.raw.trim_end().chars().count() + 1, |t| t.column);
        Error::Syntax {
            line: self.number,
            column,
            message: message.into(),
        }
    }

    fn arity(&self, expected: usize) -> Result<()> {
        match self.tokens.len().cmp(&(expected + 1)) {
            std::cmp::Ordering::Less => Err(self.syntax(
                self.tokens.len(),
                format!("{} expects {expected} argument(s)", self.tokens[0].text),
            )),
            std::cmp::Ordering::Greater => Err(self.syntax(expected + 1, "unexpected token")),
            std::cmp::Ordering::Equal => Ok(()),
        }
    }

    fn number(&self, token: usize) -> Result<f64> {
        let text = self.tokens[token].text;
        match text.parse::<f64>() {
            Ok(v) if v.is_finite() => Ok(v),
            _ => Err(self.syntax(token, format!("expected a finite number, got {text:?}"))),
        }
    }

    /// `key = value` where the value runs to the end of the line.
    fn assignment(&self) -> Result<(&'a str, &'a str)> {
        if self.tokens.len() < 2 {
            return Err(self.syntax(1, "expected `<key> = <value>`"));
        }
        let after_directive = self.tokens[0].text.len() + self.raw.find(self.tokens[0].text).unwrap_or(0);
        let rest = &self.raw[after_directive..];
        let Some(eq) = rest.find('=') else {
            return Err(self.syntax(2, "expected `=`"));
        };
        let key = rest[..eq].trim();
        if key.is_empty() || key.chars().any(char::is_whitespace) {
            return Err(self.syntax(1, "property key must be a single token"));
        }
        Ok((key, rest[eq + 1..].trim()))
    }
}

#[derive(Default)]
struct ExperimentDraft {
    id: String,
    line: usize,
    qc: Option<String>,
    kind: Option<ResultKind>,
    scale: Option<Scale>,
    time: Option<String>,
    properties: PropertySheet,
    label_set: Option<Vec<String>>,
    scores: Vec<(String, f64)>,
    labels: Vec<AnnotationSet>,
    signs: Vec<(String, String, Sign)>,
}

impl ExperimentDraft {
    fn path(&self) -> String {
        format!("experiments[{}]", self.id)
    }

    fn expect_kind(&self, line: &Line, kind: ResultKind) -> Result<()> {
        match self.kind {
            Some(k) if k == kind => Ok(()),
            Some(k) => Err(Error::Schema {
                path: self.path(),
                message: format!("line {}: `{}` in a {k} experiment", line.number, line.tokens[0].text),
            }),
            None => Err(line.syntax(0, format!("`kind` must precede `{}`", line.tokens[0].text))),
        }
    }

    fn finish(self) -> Result<Experiment> {
        let path = self.path();
        let qc = self.qc.ok_or_else(|| Error::Schema {
            path: path.clone(),
            message: "missing `qc`".into(),
        })?;
        let kind = self.kind.ok_or_else(|| Error::Schema {
            path: path.clone(),
            message: "missing `kind`".into(),
        })?;
        let rating = self.properties.is_human_evaluation()
            || self.properties.normalized("objective_subjective").as_deref() == Some("subjective")
            || kind == ResultKind::Labels;
        if rating && self.scale.is_none() && kind != ResultKind::Signs {
            return Err(Error::Schema {
                path,
                message: format!("experiment {} rates a quality criterion but declares no scale", self.id),
            });
        }
        let data = match kind {
            ResultKind::Scores => {
                let scale = self.scale.unwrap_or(Scale::OPEN);
                ExperimentData::Scores(
                    self.scores
                        .into_iter()
                        .map(|(system, value)| Measurement {
                            measurand: qc.clone(),
                            object: system,
                            time: self.time.clone(),
                            conditions: self.id.clone(),
                            value: QuantityValue::new(value, scale),
                        })
                        .collect(),
                )
            }
            ResultKind::Labels => ExperimentData::Labels {
                label_set: self.label_set.ok_or_else(|| Error::Schema {
                    path: path.clone(),
                    message: "label experiment without `labelset`".into(),
                })?,
                sets: self.labels,
            },
            ResultKind::Signs => ExperimentData::Signs(
                PairwiseSignTable::from_entries(self.id.clone(), self.signs).map_err(|e| Error::Schema {
                    path: path.clone(),
                    message: e.to_string(),
                })?,
            ),
        };
        Ok(Experiment {
            id: self.id,
            quality_criterion: qc,
            scale: self.scale,
            data,
            properties: self.properties,
        })
    }
}

fn parse_span(line: &Line, token: usize) -> Result<Option<(i64, i64)>> {
    let text = line.tokens[token].text;
    let Some((a, b)) = text.split_once(':') else {
        return Ok(None);
    };
    match (a.parse::<i64>(), b.parse::<i64>()) {
        (Ok(a), Ok(b)) => Ok(Some((a, b))),
        _ => Err(line.syntax(token, format!("malformed span {text:?}"))),
    }
}

/// Parses a bundle document. Structural problems are syntax errors with a
/// line and column; problems with content are schema errors with a path.
pub fn parse_bundle(document: &str) -> Result<StudyBundle> {
    let mut study_id: Option<String> = None;
    let mut systems: Option<Vec<String>> = None;
    let mut experiments = Vec::new();
    let mut current: Option<ExperimentDraft> = None;

    for (index, raw) in document.lines().enumerate() {
        let line = Line::split(index + 1, raw);
        let Some(head) = line.tokens.first() else { continue };
        let directive = head.text;

        let Some(exp) = current.as_mut() else {
            match directive {
                "study" => {
                    line.arity(1)?;
                    if study_id.is_some() {
                        return Err(line.syntax(0, "duplicate `study`"));
                    }
                    study_id = Some(line.tokens[1].text.to_string());
                }
                "systems" => {
                    if systems.is_some() {
                        return Err(line.syntax(0, "duplicate `systems`"));
                    }
                    systems = Some(line.tokens[1..].iter().map(|t| t.text.to_string()).collect());
                }
                "experiment" => {
                    line.arity(1)?;
                    current = Some(ExperimentDraft {
                        id: line.tokens[1].text.to_string(),
                        line: line.number,
                        ..Default::default()
                    });
                }
                "end" => return Err(line.syntax(0, "`end` outside an experiment block")),
                other => return Err(line.syntax(0, format!("unknown directive {other:?}"))),
            }
            continue;
        };

        match directive {
            "end" => {
                line.arity(0)?;
                experiments.push(current.take().unwrap().finish()?);
            }
            "qc" => {
                line.arity(1)?;
                exp.qc = Some(line.tokens[1].text.to_string());
            }
            "kind" => {
                line.arity(1)?;
                exp.kind = Some(match line.tokens[1].text {
                    "scores" => ResultKind::Scores,
                    "labels" => ResultKind::Labels,
                    "signs" => ResultKind::Signs,
                    other => return Err(line.syntax(1, format!("unknown kind {other:?}"))),
                });
            }
            "scale" => {
                line.arity(2)?;
                let min = line.number(1)?;
                let max = match line.tokens[2].text {
                    "unbounded" => None,
                    _ => Some(line.number(2)?),
                };
                exp.scale = Some(Scale { min, max });
            }
            "time" => {
                line.arity(1)?;
                exp.time = Some(line.tokens[1].text.to_string());
            }
            "prop" => {
                let (key, value) = line.assignment()?;
                let path = format!("{}.properties.{key}", exp.path());
                let Some(k) = PropertyKey::lookup(key) else {
                    return Err(Error::Schema {
                        path,
                        message: format!("unknown property key {key:?}; use `ext` for extensions"),
                    });
                };
                exp.properties
                    .set(k, value)
                    .map_err(|message| Error::Schema { path, message })?;
            }
            "ext" => {
                let (key, value) = line.assignment()?;
                let path = format!("{}.extensions.{key}", exp.path());
                exp.properties
                    .set_extension(key, value)
                    .map_err(|message| Error::Schema { path, message })?;
            }
            "labelset" => {
                exp.expect_kind(&line, ResultKind::Labels)?;
                if line.tokens.len() < 2 {
                    return Err(line.syntax(1, "`labelset` needs at least one label"));
                }
                exp.label_set = Some(line.tokens[1..].iter().map(|t| t.text.to_string()).collect());
            }
            "score" => {
                exp.expect_kind(&line, ResultKind::Scores)?;
                line.arity(2)?;
                let value = line.number(2)?;
                exp.scores.push((line.tokens[1].text.to_string(), value));
            }
            "label" => {
                exp.expect_kind(&line, ResultKind::Labels)?;
                let (span, label_token) = match line.tokens.len() {
                    4 => (None, 3),
                    5 => match parse_span(&line, 3)? {
                        Some(span) => (Some(span), 4),
                        None => return Err(line.syntax(3, "expected a `<start>:<end>` span")),
                    },
                    n if n < 4 => {
                        return Err(line.syntax(n, "expected `label <system> <item> [<start>:<end>] <label>`"))
                    }
                    _ => return Err(line.syntax(5, "unexpected token")),
                };
                let system = line.tokens[1].text;
                let annotation = Annotation {
                    item_id: line.tokens[2].text.to_string(),
                    span,
                    label: line.tokens[label_token].text.to_string(),
                };
                match exp.labels.iter_mut().find(|s| s.system == system) {
                    Some(set) => set.items.push(annotation),
                    None => exp.labels.push(AnnotationSet {
                        system: system.to_string(),
                        items: vec![annotation],
                    }),
                }
            }
            "sign" => {
                exp.expect_kind(&line, ResultKind::Signs)?;
                line.arity(3)?;
                let sign = Sign::parse(line.tokens[3].text)
                    .ok_or_else(|| line.syntax(3, format!("expected +1, 0 or -1, got {:?}", line.tokens[3].text)))?;
                exp.signs
                    .push((line.tokens[1].text.to_string(), line.tokens[2].text.to_string(), sign));
            }
            "experiment" => return Err(line.syntax(0, format!("experiment {} is missing `end`", exp.id))),
            other => return Err(line.syntax(0, format!("unknown directive {other:?}"))),
        }
    }

    if let Some(exp) = current {
        return Err(Error::Syntax {
            line: exp.line,
            column: 1,
            message: format!("experiment {} is missing `end`", exp.id),
        });
    }
    let study_id = study_id.ok_or_else(|| Error::Schema {
        path: "study".into(),
        message: "missing `study`".into(),
    })?;
    let declared_systems = systems.ok_or_else(|| Error::Schema {
        path: "systems".into(),
        message: "missing `systems`".into(),
    })?;
    Ok(StudyBundle {
        study_id,
        declared_systems,
        experiments,
    })
}

fn write_properties(out: &mut String, sheet: &PropertySheet) {
    let blocks = std::iter::once(&sheet.general).chain(sheet.human_eval.as_ref());
    for block in blocks {
        for (key, value) in block {
            let _ = writeln!(out, "  prop {} = {value}", key.slug());
        }
    }
    for (key, value) in &sheet.extensions {
        let _ = writeln!(out, "  ext {key} = {value}");
    }
}

/// Writes a bundle in the text format. Parsing the output gives back the
/// same bundle.
pub fn serialize_bundle(bundle: &StudyBundle) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "study {}", bundle.study_id);
    let _ = writeln!(out, "systems {}", bundle.declared_systems.join(" "));
    for exp in &bundle.experiments {
        let _ = writeln!(out, "\nexperiment {}", exp.id);
        let _ = writeln!(out, "  qc {}", exp.quality_criterion);
        let _ = writeln!(out, "  kind {}", exp.kind());
        if let Some(scale) = exp.scale {
            let max = scale.max.map_or_else(|| "unbounded".to_string(), |m| m.to_string());
            let _ = writeln!(out, "  scale {} {max}", scale.min);
        }
        if let Some(time) = exp.measurements().iter().find_map(|m| m.time.as_ref()) {
            let _ = writeln!(out, "  time {time}");
        }
        write_properties(&mut out, &exp.properties);
        match &exp.data {
            ExperimentData::Scores(ms) => {
                for m in ms {
                    let _ = writeln!(out, "  score {} {}", m.object, m.value.value);
                }
            }
            ExperimentData::Labels { label_set, sets } => {
                let _ = writeln!(out, "  labelset {}", label_set.join(" "));
                for set in sets {
                    for a in &set.items {
                        match a.span {
                            Some((s, e)) => {
                                let _ = writeln!(out, "  label {} {} {s}:{e} {}", set.system, a.item_id, a.label);
                            }
                            None => {
                                let _ = writeln!(out, "  label {} {} {}", set.system, a.item_id, a.label);
                            }
                        }
                    }
                }
            }
            ExperimentData::Signs(table) => {
                for (a, b, sign) in table.entries() {
                    let _ = writeln!(out, "  sign {a} {b} {sign}");
                }
            }
        }
        out.push_str("end\n");
    }
    out
}
