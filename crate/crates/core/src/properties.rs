//! Experiment properties: the measurement conditions attached to every
//! experiment, drawn from a fixed set of HEDS 3.0 questions plus free-form
//! extension keys.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

/// Which block of the property sheet a key belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PropertyGroup {
    General,
    HumanEvaluation,
}

/// The value domain of a property.
#[derive(Debug, Clone, Copy)]
pub enum ValueDomain {
    FreeText,
    Integer,
    /// Exactly one of the listed options.
    OneOf(&'static [&'static str]),
    /// One or more of the listed options, separated by `;`.
    AnyOf(&'static [&'static str]),
}

const TEXT_TYPES: &[&str] = &[
    "raw/structured data",
    "deep linguistic representation",
    "shallow linguistic representation",
    "text: subsentential unit of text",
    "text: sentence",
    "text: multiple sentences",
    "text: document",
    "text: dialogue",
    "text: other",
    "speech",
    "visual",
    "multi-modal",
    "control feature",
    "no input",
    "other",
];

const OUTPUT_TYPES: &[&str] = &[
    "raw/structured data",
    "deep linguistic representation",
    "shallow linguistic representation",
    "text: subsentential unit of text",
    "text: sentence",
    "text: multiple sentences",
    "text: document",
    "text: dialogue",
    "text: other",
    "speech",
    "visual",
    "multi-modal",
    "no input",
    "other",
];

const TASKS: &[&str] = &[
    "content selection/determination",
    "content ordering/structuring",
    "aggregation",
    "referring expression generation",
    "lexicalisation",
    "deep generation",
    "surface realisation",
    "feature-controlled text generation",
    "data-to-text generation",
    "dialogue turn generation",
    "question generation",
    "question answering",
    "paraphrasing/lossless simplification",
    "compression/lossy simplification",
    "machine translation",
    "summarisation",
    "end-to-end text generation",
    "image/video description",
    "post-editing/correction",
    "other",
];

const YES_NO_NA: &[&str] = &["yes", "no", "n/a"];

const QUALITY_ASSURANCE: &[&str] = &[
    "native speakers",
    "automatic quality checking",
    "manual quality checking",
    "evaluators excluded",
    "some evaluations excluded",
    "other",
    "none",
];

const RATING_INSTRUMENTS: &[&str] = &["multiple-choice options", "check-boxes", "slider", "n/a", "other"];

const RESPONSE_ELICITATION: &[&str] = &[
    "(dis)agreement with quality statement",
    "direct quality estimation",
    "relative quality estimation",
    "counting occurrences in text",
    "qualitative feedback",
    "evaluation through post-editing/annotation",
    "output classification or labelling",
    "user-text interaction measurements",
    "task performance measurements",
    "user-system interaction measurements",
    "other",
];

macro_rules! property_keys {
    ($( $variant:ident => ($slug:literal, $code:expr, $group:ident, $domain:expr) ),* $(,)?) => {
        /// A property key from the fixed schema.
        #[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
        #[serde(rename_all = "snake_case")]
        pub enum PropertyKey {
            $($variant),*
        }

        impl PropertyKey {
            pub const ALL: &'static [PropertyKey] = &[$(PropertyKey::$variant),*];

            pub fn slug(self) -> &'static str {
                match self { $(PropertyKey::$variant => $slug),* }
            }

            /// HEDS question code, if the property comes from HEDS.
            pub fn heds_code(self) -> Option<&'static str> {
                match self { $(PropertyKey::$variant => $code),* }
            }

            pub fn group(self) -> PropertyGroup {
                match self { $(PropertyKey::$variant => PropertyGroup::$group),* }
            }

            pub fn domain(self) -> ValueDomain {
                match self { $(PropertyKey::$variant => $domain),* }
            }
        }
    };
}

property_keys! {
    TestDataset => ("test_dataset", None, General, ValueDomain::FreeText),
    Metric => ("metric", None, General, ValueDomain::FreeText),
    MetricImplementation => ("metric_implementation", None, General, ValueDomain::FreeText),
    RunTimeEnvironment => ("run_time_environment", None, General, ValueDomain::FreeText),
    InputType => ("input_type", Some("H2.1"), General, ValueDomain::AnyOf(TEXT_TYPES)),
    OutputType => ("output_type", Some("H2.2"), General, ValueDomain::AnyOf(OUTPUT_TYPES)),
    Task => ("task", Some("H2.3"), General, ValueDomain::AnyOf(TASKS)),
    TotalEvaluatedItems => ("total_evaluated_items", Some("H3.1.1"), General, ValueDomain::FreeText),
    ObjectiveSubjective => ("objective_subjective", Some("H4.2.1"), General, ValueDomain::OneOf(&["objective", "subjective"])),
    AbsoluteRelative => ("absolute_relative", Some("H4.2.2"), General, ValueDomain::OneOf(&["absolute", "relative"])),
    IntrinsicExtrinsic => ("intrinsic_extrinsic", Some("H4.2.3"), General, ValueDomain::OneOf(&["intrinsic", "extrinsic"])),
    NumberOfEvaluators => ("number_of_evaluators", Some("H3.2.1"), HumanEvaluation, ValueDomain::Integer),
    EvaluatorDomainExpertise => ("evaluator_domain_expertise", Some("H3.2.2.1"), HumanEvaluation, ValueDomain::OneOf(YES_NO_NA)),
    AuthorsAmongEvaluators => ("authors_among_evaluators", Some("H3.2.2.4"), HumanEvaluation, ValueDomain::OneOf(YES_NO_NA)),
    EvaluatorTraining => ("evaluator_training", Some("H3.2.4"), HumanEvaluation, ValueDomain::FreeText),
    EvaluatorType => ("evaluator_type", Some("H3.2.5"), HumanEvaluation, ValueDomain::FreeText),
    ResponseCollectionTool => ("response_collection_tool", Some("H3.3.2"), HumanEvaluation, ValueDomain::FreeText),
    QualityAssurance => ("quality_assurance", Some("H3.3.3.1"), HumanEvaluation, ValueDomain::AnyOf(QUALITY_ASSURANCE)),
    StandardisedQualityCriterion => ("standardised_quality_criterion", Some("H4.3.1.2"), HumanEvaluation, ValueDomain::FreeText),
    RatingInstrumentType => ("rating_instrument_type", Some("H4.3.5"), HumanEvaluation, ValueDomain::OneOf(RATING_INSTRUMENTS)),
    VerbatimPrompt => ("verbatim_prompt", Some("H4.3.7"), HumanEvaluation, ValueDomain::FreeText),
    ResponseElicitation => ("response_elicitation", Some("H4.3.8"), HumanEvaluation, ValueDomain::OneOf(RESPONSE_ELICITATION)),
}

impl PropertyKey {
    /// Looks a key up by slug or HEDS code (`H4.2.1`), case-insensitively.
    pub fn lookup(name: &str) -> Option<PropertyKey> {
        let name = name.trim();
        PropertyKey::ALL.iter().copied().find(|k| {
            k.slug().eq_ignore_ascii_case(name) || k.heds_code().is_some_and(|c| c.eq_ignore_ascii_case(name))
        })
    }

    /// Checks a raw value against the key's domain.
    pub fn check_value(self, raw: &str) -> Result<(), String> {
        let value = normalize(raw);
        if value.is_empty() {
            return Err(format!("empty value for {}", self.slug()));
        }
        match self.domain() {
            ValueDomain::FreeText => Ok(()),
            ValueDomain::Integer => value
                .parse::<u64>()
                .map(|_| ())
                .map_err(|_| format!("{} takes a non-negative integer, got {raw:?}", self.slug())),
            ValueDomain::OneOf(options) => {
                if matches_option(&value, options) {
                    Ok(())
                } else {
                    Err(format!(
                        "{} takes one of [{}], got {raw:?}",
                        self.slug(),
                        options.join(", ")
                    ))
                }
            }
            ValueDomain::AnyOf(options) => {
                for part in value.split(';').map(str::trim) {
                    if part.is_empty() || !matches_option(part, options) {
                        return Err(format!(
                            "{} takes `;`-separated options from [{}], got {part:?}",
                            self.slug(),
                            options.join(", ")
                        ));
                    }
                }
                Ok(())
            }
        }
    }

    /// The comparison form of a value: trimmed and case-folded; multi-select
    /// values are additionally sorted and de-duplicated.
    pub fn normalize_value(self, raw: &str) -> String {
        match self.domain() {
            ValueDomain::AnyOf(_) => {
                let mut parts: Vec<String> = normalize(raw)
                    .split(';')
                    .map(|p| p.trim().to_string())
                    .filter(|p| !p.is_empty())
                    .collect();
                parts.sort();
                parts.dedup();
                parts.join("; ")
            }
            _ => normalize(raw),
        }
    }
}

impl fmt::Display for PropertyKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.slug())
    }
}

/// Trim and case-fold.
pub fn normalize(raw: &str) -> String {
    raw.trim().to_lowercase()
}

// An option matches exactly, or followed by an explanation in parentheses or
// after a colon ("other: hand-written rubric").
fn matches_option(value: &str, options: &[&str]) -> bool {
    options.iter().any(|opt| {
        value == *opt
            || value
                .strip_prefix(opt)
                .is_some_and(|rest| rest.starts_with(':') || rest.starts_with(" (") || rest.starts_with(" :"))
    })
}

/// Measurement conditions of one experiment.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct PropertySheet {
    pub general: BTreeMap<PropertyKey, String>,
    /// Present only for human evaluations.
    pub human_eval: Option<BTreeMap<PropertyKey, String>>,
    pub extensions: BTreeMap<String, String>,
}

impl PropertySheet {
    /// Sets a schema property, routing it to the general or human-evaluation
    /// block.
    pub fn set(&mut self, key: PropertyKey, value: impl Into<String>) -> Result<(), String> {
        let value = value.into().trim().to_string();
        key.check_value(&value)?;
        match key.group() {
            PropertyGroup::General => {
                self.general.insert(key, value);
            }
            PropertyGroup::HumanEvaluation => {
                self.human_eval.get_or_insert_with(BTreeMap::new).insert(key, value);
            }
        }
        Ok(())
    }

    pub fn set_extension(&mut self, key: &str, value: impl Into<String>) -> Result<(), String> {
        let key = key.trim();
        if key.is_empty() || key.chars().any(char::is_whitespace) {
            return Err(format!("invalid extension key {key:?}"));
        }
        if PropertyKey::lookup(key).is_some() {
            return Err(format!("extension key {key:?} shadows a schema property"));
        }
        self.extensions.insert(key.to_string(), value.into().trim().to_string());
        Ok(())
    }

    pub fn is_human_evaluation(&self) -> bool {
        self.human_eval.as_ref().is_some_and(|h| !h.is_empty())
    }

    pub fn get(&self, key: PropertyKey) -> Option<&str> {
        self.general
            .get(&key)
            .or_else(|| self.human_eval.as_ref().and_then(|h| h.get(&key)))
            .map(String::as_str)
    }

    /// Normalized value for a key given by slug, HEDS code or extension name.
    pub fn normalized(&self, name: &str) -> Option<String> {
        match PropertyKey::lookup(name) {
            Some(key) => self.get(key).map(|v| key.normalize_value(v)),
            None => self.extensions.get(name.trim()).map(|v| normalize(v)),
        }
    }

    /// All entries in comparison form, schema keys first (in schema order),
    /// then extensions by name.
    pub fn normalized_entries(&self) -> Vec<(String, String)> {
        let mut out = Vec::new();
        for key in PropertyKey::ALL {
            if let Some(v) = self.get(*key) {
                out.push((key.slug().to_string(), key.normalize_value(v)));
            }
        }
        for (k, v) in &self.extensions {
            out.push((k.clone(), normalize(v)));
        }
        out
    }

    /// Schema violations: keys in the wrong block and out-of-domain values.
    pub fn violations(&self) -> Vec<(String, String)> {
        let mut out = Vec::new();
        for (key, value) in &self.general {
            if key.group() != PropertyGroup::General {
                out.push((
                    key.slug().to_string(),
                    "human-evaluation key in the general block".to_string(),
                ));
            }
            if let Err(e) = key.check_value(value) {
                out.push((key.slug().to_string(), e));
            }
        }
        if let Some(human) = &self.human_eval {
            for (key, value) in human {
                if key.group() != PropertyGroup::HumanEvaluation {
                    out.push((
                        key.slug().to_string(),
                        "general key in the human-evaluation block".to_string(),
                    ));
                }
                if let Err(e) = key.check_value(value) {
                    out.push((key.slug().to_string(), e));
                }
            }
        }
        for key in self.extensions.keys() {
            if PropertyKey::lookup(key).is_some() {
                out.push((key.clone(), "extension key shadows a schema property".to_string()));
            }
        }
        out
    }
}
