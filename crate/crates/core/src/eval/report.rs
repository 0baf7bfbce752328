use std::collections::{BTreeMap, BTreeSet};
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::EvalError;

/// Named metric values for one task, emitted as JSON or as `metric,value` CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub task: String,
    pub metrics: BTreeMap<String, f64>,
}

impl MetricReport {
    pub fn new(task: impl Into<String>) -> Self {
        MetricReport { task: task.into(), metrics: BTreeMap::new() }
    }

    pub fn insert(&mut self, name: impl Into<String>, value: f64) -> &mut Self {
        self.metrics.insert(name.into(), value);
        self
    }

    pub fn to_json(&self) -> String {
        crate::json::to_canonical_string(self).expect("metric report serializes")
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<(), EvalError> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["task", "metric", "value"])?;
        for (k, v) in &self.metrics {
            w.write_record([self.task.as_str(), k.as_str(), &v.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// One human judgement: did `model`'s answer to `question_id` match, according
/// to `evaluator`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScoreRow {
    pub question_id: String,
    pub model: String,
    pub evaluator: String,
    pub correct: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelScores {
    pub n_questions: usize,
    pub accuracy_by_evaluator: BTreeMap<String, f64>,
    pub mean_accuracy: f64,
    /// Fraction of questions on which every evaluator gave the same verdict.
    pub agreement: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreSheetSummary {
    pub models: BTreeMap<String, ModelScores>,
}

fn parse_bool(s: &str) -> Option<bool> {
    match s.trim().to_ascii_lowercase().as_str() {
        "1" | "true" | "yes" | "y" | "correct" => Some(true),
        "0" | "false" | "no" | "n" | "incorrect" => Some(false),
        _ => None,
    }
}

/// CSV with header `question_id,model,evaluator,correct`; `correct` accepts
/// 1/0, true/false, yes/no.
pub fn read_scoresheet<R: Read>(input: R) -> Result<Vec<ScoreRow>, EvalError> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(input);
    let headers = rdr.headers()?.clone();
    let col = |name: &str| {
        headers.iter().position(|h| h.eq_ignore_ascii_case(name)).ok_or_else(|| EvalError::ScoreSheet {
            line: 1,
            message: format!("missing column {name}"),
        })
    };
    let (q, m, e, c) = (col("question_id")?, col("model")?, col("evaluator")?, col("correct")?);
    let mut rows = Vec::new();
    let mut seen = BTreeSet::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let line = i + 2;
        let field = |j: usize| rec.get(j).unwrap_or("").to_string();
        let correct = parse_bool(&field(c))
            .ok_or_else(|| EvalError::ScoreSheet { line, message: format!("bad verdict {:?}", field(c)) })?;
        let row = ScoreRow { question_id: field(q), model: field(m), evaluator: field(e), correct };
        if !seen.insert((row.question_id.clone(), row.model.clone(), row.evaluator.clone())) {
            return Err(EvalError::ScoreSheet { line, message: "duplicate judgement".into() });
        }
        rows.push(row);
    }
    Ok(rows)
}

pub fn read_scoresheet_file(path: &Path) -> Result<Vec<ScoreRow>, EvalError> {
    read_scoresheet(std::fs::File::open(path)?)
}

/// Per-model accuracy for each evaluator, their mean, and the agreement rate.
/// Every evaluator of a model must have judged the same question set.
pub fn aggregate_scoresheet(rows: &[ScoreRow]) -> Result<ScoreSheetSummary, EvalError> {
    let mut by_model: BTreeMap<&str, BTreeMap<&str, BTreeMap<&str, bool>>> = BTreeMap::new();
    for r in rows {
        by_model
            .entry(&r.model)
            .or_default()
            .entry(&r.evaluator)
            .or_default()
            .insert(&r.question_id, r.correct);
    }
    let mut models = BTreeMap::new();
    for (model, evaluators) in by_model {
        let questions: BTreeSet<&str> = evaluators.values().next().map(|q| q.keys().copied().collect()).unwrap_or_default();
        for (ev, qs) in &evaluators {
            if qs.keys().copied().collect::<BTreeSet<_>>() != questions {
                return Err(EvalError::ScoreSheet {
                    line: 0,
                    message: format!("evaluator {ev} judged a different question set for {model}"),
                });
            }
        }
        let n = questions.len();
        let accuracy_by_evaluator: BTreeMap<String, f64> = evaluators
            .iter()
            .map(|(ev, qs)| (ev.to_string(), qs.values().filter(|c| **c).count() as f64 / n as f64))
            .collect();
        let mean_accuracy = accuracy_by_evaluator.values().sum::<f64>() / accuracy_by_evaluator.len() as f64;
        let agreed = questions
            .iter()
            .filter(|q| {
                let verdicts: BTreeSet<bool> = evaluators.values().map(|qs| qs[*q]).collect();
                verdicts.len() == 1
            })
            .count();
        models.insert(
            model.to_string(),
            ModelScores { n_questions: n, accuracy_by_evaluator, mean_accuracy, agreement: agreed as f64 / n as f64 },
        );
    }
    Ok(ScoreSheetSummary { models })
}
