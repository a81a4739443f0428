use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// One measure evaluated on one model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeasureValue {
    pub model_id: String,
    pub measure: String,
    pub value: f64,
    /// Reason the value is degenerate (e.g. a zero-norm layer), if any.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub flag: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub aux: Option<serde_json::Value>,
}

impl MeasureValue {
    pub fn new(model_id: impl Into<String>, measure: impl Into<String>, value: f64) -> Self {
        Self { model_id: model_id.into(), measure: measure.into(), value, flag: None, aux: None }
    }

    pub fn flagged(mut self, reason: impl Into<String>) -> Self {
        self.flag = Some(reason.into());
        self
    }

    pub fn with_aux(mut self, aux: serde_json::Value) -> Self {
        self.aux = Some(aux);
        self
    }
}

/// A measure that could not be computed for a model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeasureFailure {
    pub model_id: String,
    pub measure: String,
    pub reason: String,
}

/// Append-only table of measure values, unique per `(model_id, measure)`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct MeasureTable {
    rows: Vec<MeasureValue>,
    index: BTreeMap<(String, String), usize>,
    failures: Vec<MeasureFailure>,
}

pub const CSV_HEADER: &str = "model_id,measure,value";

fn check_field(kind: &str, s: &str) -> Result<()> {
    if s.is_empty() || s.contains([',', '\n', '\r', '"']) {
        return Err(Error::Config(format!("{kind} {s:?} must be nonempty and free of CSV metacharacters")));
    }
    Ok(())
}

impl MeasureTable {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, value: MeasureValue) -> Result<()> {
        check_field("model id", &value.model_id)?;
        check_field("measure name", &value.measure)?;
        if !value.value.is_finite() {
            return Err(Error::Config(format!(
                "measure {} of {} is not finite",
                value.measure, value.model_id
            )));
        }
        let key = (value.model_id.clone(), value.measure.clone());
        if self.index.contains_key(&key) {
            return Err(Error::Config(format!("duplicate entry for {} / {}", key.0, key.1)));
        }
        self.index.insert(key, self.rows.len());
        self.rows.push(value);
        Ok(())
    }

    pub fn record_failure(&mut self, model_id: &str, measure: &str, reason: impl Into<String>) {
        self.failures.push(MeasureFailure {
            model_id: model_id.to_string(),
            measure: measure.to_string(),
            reason: reason.into(),
        });
    }

    pub fn extend(&mut self, other: MeasureTable) -> Result<()> {
        for row in other.rows {
            self.insert(row)?;
        }
        self.failures.extend(other.failures);
        Ok(())
    }

    pub fn rows(&self) -> &[MeasureValue] {
        &self.rows
    }

    pub fn failures(&self) -> &[MeasureFailure] {
        &self.failures
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn get(&self, model_id: &str, measure: &str) -> Option<&MeasureValue> {
        self.index.get(&(model_id.to_string(), measure.to_string())).map(|&i| &self.rows[i])
    }

    pub fn value(&self, model_id: &str, measure: &str) -> Option<f64> {
        self.get(model_id, measure).map(|v| v.value)
    }

    /// Distinct measure names, sorted.
    pub fn measures(&self) -> Vec<String> {
        self.rows.iter().map(|r| r.measure.clone()).collect::<BTreeSet<_>>().into_iter().collect()
    }

    /// Distinct model ids in first-appearance order.
    pub fn model_ids(&self) -> Vec<String> {
        let mut seen = BTreeSet::new();
        self.rows
            .iter()
            .filter(|r| seen.insert(r.model_id.clone()))
            .map(|r| r.model_id.clone())
            .collect()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from(CSV_HEADER);
        out.push('\n');
        for r in &self.rows {
            out.push_str(&format!("{},{},{}\n", r.model_id, r.measure, r.value));
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate();
        match lines.next() {
            Some((_, h)) if h.trim_end() == CSV_HEADER => {}
            Some((_, h)) => {
                return Err(Error::Schema { location: "row 1".into(), message: format!("bad header {h:?}") })
            }
            None => return Err(Error::Schema { location: "row 1".into(), message: "empty measure file".into() }),
        }
        let mut table = MeasureTable::new();
        for (i, line) in lines {
            if line.trim().is_empty() {
                continue;
            }
            let row = i + 1;
            let fields: Vec<&str> = line.trim_end().split(',').collect();
            if fields.len() != 3 {
                return Err(Error::Schema {
                    location: format!("row {row}"),
                    message: format!("expected 3 columns, found {}", fields.len()),
                });
            }
            let value: f64 = fields[2].parse().map_err(|_| Error::Schema {
                location: format!("row {row} column value"),
                message: format!("not a number: {:?}", fields[2]),
            })?;
            table
                .insert(MeasureValue::new(fields[0], fields[1], value))
                .map_err(|e| Error::Schema { location: format!("row {row}"), message: e.to_string() })?;
        }
        if table.is_empty() {
            return Err(Error::Schema { location: "row 2".into(), message: "no measure rows".into() });
        }
        Ok(table)
    }

    /// Sidecar JSON: aux payloads and flags keyed by `model_id/measure`, plus failures.
    pub fn aux_json(&self) -> String {
        let mut entries = BTreeMap::new();
        for r in &self.rows {
            if r.aux.is_some() || r.flag.is_some() {
                entries.insert(
                    format!("{}/{}", r.model_id, r.measure),
                    serde_json::json!({ "flag": r.flag, "aux": r.aux }),
                );
            }
        }
        let doc = serde_json::json!({ "entries": entries, "failures": self.failures });
        serde_json::to_string_pretty(&doc).expect("json values serialize")
    }
}
