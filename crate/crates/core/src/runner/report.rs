//! Experiment reports with a content hash, and their JSON / CSV forms.
//!
//! JSON numbers are written as decimal strings (`"0.1"`, `"1e-300"`, `"inf"`) so a
//! round-trip reproduces every `f64` bit for bit.

use crate::error::{Error, Result};
use serde_json::{json, Map, Value};
use sha2::{Digest, Sha256};
use std::collections::BTreeMap;
use std::io::Write;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// One row: an item id, an optional `p`, and one value per report column.
#[derive(Clone, Debug, PartialEq)]
pub struct Record {
    pub id: String,
    pub p: Option<f64>,
    pub values: Vec<f64>,
}

/// `(x, y)` plot data.
#[derive(Clone, Debug, PartialEq)]
pub struct Series {
    pub name: String,
    pub points: Vec<(f64, f64)>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentReport {
    pub version: String,
    pub experiment: String,
    /// Effective configuration, defaults included.
    pub config: BTreeMap<String, String>,
    pub columns: Vec<String>,
    pub records: Vec<Record>,
    pub summary: BTreeMap<String, f64>,
    pub series: Vec<Series>,
    /// SHA-256 of the report with this field empty.
    pub content_hash: String,
}

/// Shortest decimal that parses back to the same `f64`.
pub fn num(v: f64) -> String {
    format!("{v:?}")
}

fn parse_num(v: &Value, what: &str) -> Result<f64> {
    v.as_str()
        .and_then(|s| s.parse::<f64>().ok())
        .ok_or_else(|| Error::Serialization(format!("{what}: expected a decimal string, got {v}")))
}

fn field<'a>(obj: &'a Map<String, Value>, key: &str) -> Result<&'a Value> {
    obj.get(key).ok_or_else(|| Error::Serialization(format!("missing field `{key}`")))
}

fn as_array<'a>(v: &'a Value, what: &str) -> Result<&'a Vec<Value>> {
    v.as_array().ok_or_else(|| Error::Serialization(format!("{what}: expected an array")))
}

fn as_str<'a>(v: &'a Value, what: &str) -> Result<&'a str> {
    v.as_str().ok_or_else(|| Error::Serialization(format!("{what}: expected a string")))
}

impl ExperimentReport {
    pub fn new(experiment: &str, config: BTreeMap<String, String>, columns: &[&str]) -> Self {
        ExperimentReport {
            version: VERSION.to_string(),
            experiment: experiment.to_string(),
            config,
            columns: columns.iter().map(|c| c.to_string()).collect(),
            records: Vec::new(),
            summary: BTreeMap::new(),
            series: Vec::new(),
            content_hash: String::new(),
        }
    }

    pub fn push(&mut self, id: impl Into<String>, p: Option<f64>, values: Vec<f64>) {
        debug_assert_eq!(values.len(), self.columns.len());
        self.records.push(Record { id: id.into(), p, values });
    }

    pub fn summary_value(&self, key: &str) -> Option<f64> {
        self.summary.get(key).copied()
    }

    fn to_value(&self) -> Value {
        let records: Vec<Value> = self
            .records
            .iter()
            .map(|r| {
                json!({
                    "id": r.id,
                    "p": r.p.map(num),
                    "values": r.values.iter().map(|v| num(*v)).collect::<Vec<_>>(),
                })
            })
            .collect();
        let series: Vec<Value> = self
            .series
            .iter()
            .map(|s| json!({ "name": s.name, "points": s.points.iter().map(|(x, y)| [num(*x), num(*y)]).collect::<Vec<_>>() }))
            .collect();
        json!({
            "version": self.version,
            "experiment": self.experiment,
            "config": self.config,
            "columns": self.columns,
            "records": records,
            "summary": self.summary.iter().map(|(k, v)| (k.clone(), Value::String(num(*v)))).collect::<Map<_, _>>(),
            "series": series,
            "content_hash": self.content_hash,
        })
    }

    pub fn compute_hash(&self) -> String {
        let mut unsealed = self.clone();
        unsealed.content_hash.clear();
        let text = serde_json::to_string(&unsealed.to_value()).expect("report values serialize");
        Sha256::digest(text.as_bytes()).iter().map(|b| format!("{b:02x}")).collect()
    }

    /// Fills in [`ExperimentReport::content_hash`].
    pub fn seal(&mut self) {
        self.content_hash = self.compute_hash();
    }

    pub fn hash_matches(&self) -> bool {
        self.content_hash == self.compute_hash()
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&self.to_value())?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let v: Value = serde_json::from_str(text)?;
        let obj = v.as_object().ok_or_else(|| Error::Serialization("report must be a JSON object".into()))?;
        let config = field(obj, "config")?
            .as_object()
            .ok_or_else(|| Error::Serialization("config: expected an object".into()))?
            .iter()
            .map(|(k, v)| Ok((k.clone(), as_str(v, "config value")?.to_string())))
            .collect::<Result<_>>()?;
        let columns = as_array(field(obj, "columns")?, "columns")?
            .iter()
            .map(|c| Ok(as_str(c, "column")?.to_string()))
            .collect::<Result<_>>()?;
        let records = as_array(field(obj, "records")?, "records")?
            .iter()
            .map(|r| {
                let r = r.as_object().ok_or_else(|| Error::Serialization("record: expected an object".into()))?;
                let p = match field(r, "p")? {
                    Value::Null => None,
                    other => Some(parse_num(other, "p")?),
                };
                let values = as_array(field(r, "values")?, "values")?
                    .iter()
                    .map(|x| parse_num(x, "value"))
                    .collect::<Result<_>>()?;
                Ok(Record { id: as_str(field(r, "id")?, "id")?.to_string(), p, values })
            })
            .collect::<Result<_>>()?;
        let summary = field(obj, "summary")?
            .as_object()
            .ok_or_else(|| Error::Serialization("summary: expected an object".into()))?
            .iter()
            .map(|(k, v)| Ok((k.clone(), parse_num(v, k)?)))
            .collect::<Result<_>>()?;
        let series = as_array(field(obj, "series")?, "series")?
            .iter()
            .map(|s| {
                let s = s.as_object().ok_or_else(|| Error::Serialization("series: expected an object".into()))?;
                let points = as_array(field(s, "points")?, "points")?
                    .iter()
                    .map(|pt| {
                        let pair = as_array(pt, "point")?;
                        if pair.len() != 2 {
                            return Err(Error::Serialization("point: expected [x, y]".into()));
                        }
                        Ok((parse_num(&pair[0], "x")?, parse_num(&pair[1], "y")?))
                    })
                    .collect::<Result<_>>()?;
                Ok(Series { name: as_str(field(s, "name")?, "name")?.to_string(), points })
            })
            .collect::<Result<_>>()?;
        Ok(ExperimentReport {
            version: as_str(field(obj, "version")?, "version")?.to_string(),
            experiment: as_str(field(obj, "experiment")?, "experiment")?.to_string(),
            config,
            columns,
            records,
            summary,
            series,
            content_hash: as_str(field(obj, "content_hash")?, "content_hash")?.to_string(),
        })
    }

    /// `id,p,<columns…>`, one row per record; header only when there are no records.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        let mut header = vec!["id".to_string(), "p".to_string()];
        header.extend(self.columns.iter().cloned());
        out.write_record(&header)?;
        for r in &self.records {
            let mut row = vec![r.id.clone(), r.p.map(num).unwrap_or_default()];
            row.extend(r.values.iter().map(|v| num(*v)));
            out.write_record(&row)?;
        }
        out.flush()?;
        Ok(())
    }

    /// `x,y` rows of one series.
    pub fn write_series_csv<W: Write>(&self, series: &Series, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["x", "y"])?;
        for (x, y) in &series.points {
            out.write_record([num(*x), num(*y)])?;
        }
        out.flush()?;
        Ok(())
    }
}
