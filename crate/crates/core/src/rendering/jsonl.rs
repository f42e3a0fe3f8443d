//! One JSON object per line, UTF-8, `\n` endings. Writes go through a
//! temporary file in the destination directory and are renamed into place.

use std::collections::BTreeMap;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use super::TrainingExample;
use crate::chaining::ChainingStrategy;
use crate::generator::Instance;
use crate::lang::{parse_question, parse_trace, Numeral};
use crate::semantics;

#[derive(Debug, thiserror::Error)]
pub enum DatasetError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: field `{field}`: {message}")]
    Schema {
        line: usize,
        field: String,
        message: String,
    },
}

/// A problem with one field of an otherwise well-formed JSON object.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FieldError {
    pub field: String,
    pub message: String,
}

impl FieldError {
    pub fn new(field: impl Into<String>, message: impl ToString) -> Self {
        Self {
            field: field.into(),
            message: message.to_string(),
        }
    }
}

/// A type stored as JSONL. `Raw` is the on-disk shape.
pub trait Record: Sized {
    type Raw: Serialize + DeserializeOwned;

    fn to_raw(&self) -> Self::Raw;
    fn from_raw(raw: Self::Raw) -> Result<Self, FieldError>;
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GoldRecord {
    pub shortest: String,
    pub exhaustive: String,
    pub backward: String,
    pub none: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct InstanceRecord {
    pub id: String,
    pub depth: usize,
    pub question: String,
    pub answer: Numeral,
    pub gold: GoldRecord,
}

impl Record for Instance {
    type Raw = InstanceRecord;

    fn to_raw(&self) -> InstanceRecord {
        let text = |s| self.gold(s).to_string();
        InstanceRecord {
            id: self.id.clone(),
            depth: self.depth,
            question: self.question.to_string(),
            answer: self.answer,
            gold: GoldRecord {
                shortest: text(ChainingStrategy::Shortest),
                exhaustive: text(ChainingStrategy::Exhaustive),
                backward: text(ChainingStrategy::Backward),
                none: text(ChainingStrategy::None),
            },
        }
    }

    fn from_raw(raw: InstanceRecord) -> Result<Self, FieldError> {
        let question = parse_question(&raw.question).map_err(|e| FieldError::new("question", e))?;
        let mut gold = BTreeMap::new();
        for (strategy, text) in [
            (ChainingStrategy::Shortest, &raw.gold.shortest),
            (ChainingStrategy::Exhaustive, &raw.gold.exhaustive),
            (ChainingStrategy::Backward, &raw.gold.backward),
            (ChainingStrategy::None, &raw.gold.none),
        ] {
            let trace = parse_trace(text)
                .map_err(|e| FieldError::new(format!("gold.{strategy}"), e))?;
            gold.insert(strategy, trace);
        }
        let solved = semantics::answer(&question).map_err(|e| FieldError::new("question", e))?;
        if solved != raw.answer {
            return Err(FieldError::new(
                "answer",
                format!("{} does not match the solved value {solved}", raw.answer),
            ));
        }
        Ok(Instance {
            id: raw.id,
            question,
            answer: raw.answer,
            depth: raw.depth,
            gold,
        })
    }
}

impl Record for TrainingExample {
    type Raw = TrainingExample;

    fn to_raw(&self) -> TrainingExample {
        self.clone()
    }

    fn from_raw(raw: TrainingExample) -> Result<Self, FieldError> {
        Ok(raw)
    }
}

/// Implements [`Record`] for a type that is stored as itself.
#[macro_export]
macro_rules! plain_record {
    ($ty:ty) => {
        impl $crate::rendering::Record for $ty {
            type Raw = $ty;

            fn to_raw(&self) -> $ty {
                self.clone()
            }

            fn from_raw(raw: $ty) -> Result<Self, $crate::rendering::FieldError> {
                Ok(raw)
            }
        }
    };
}

pub fn to_jsonl_string<T: Record>(items: &[T]) -> String {
    let mut out = String::new();
    for item in items {
        out.push_str(&serde_json::to_string(&item.to_raw()).expect("records serialize"));
        out.push('\n');
    }
    out
}

/// serde reports missing fields as "missing field `name`"; recover the name.
fn field_of(err: &serde_json::Error) -> String {
    let msg = err.to_string();
    for marker in ["missing field `", "unknown field `"] {
        if let Some(rest) = msg.split(marker).nth(1) {
            if let Some(name) = rest.split('`').next() {
                return name.to_string();
            }
        }
    }
    if err.is_syntax() || err.is_eof() {
        "<json>".to_string()
    } else {
        "<record>".to_string()
    }
}

pub fn from_jsonl_str<T: Record>(text: &str) -> Result<Vec<T>, DatasetError> {
    let mut items = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let raw: T::Raw = serde_json::from_str(line).map_err(|e| DatasetError::Schema {
            line: i + 1,
            field: field_of(&e),
            message: e.to_string(),
        })?;
        items.push(T::from_raw(raw).map_err(|e| DatasetError::Schema {
            line: i + 1,
            field: e.field,
            message: e.message,
        })?);
    }
    Ok(items)
}

pub fn read_jsonl<T: Record>(path: impl AsRef<Path>) -> Result<Vec<T>, DatasetError> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|source| DatasetError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    from_jsonl_str(&text)
}

/// Writes atomically: the file either keeps its old contents or has all of `items`.
pub fn write_jsonl<T: Record>(path: impl AsRef<Path>, items: &[T]) -> Result<(), DatasetError> {
    let path = path.as_ref();
    let io_err = |source| DatasetError::Io {
        path: path.to_path_buf(),
        source,
    };
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let tmp = tempfile::NamedTempFile::new_in(dir).map_err(io_err)?;
    {
        let mut out = BufWriter::new(tmp.as_file());
        for item in items {
            serde_json::to_writer(&mut out, &item.to_raw())
                .map_err(|e| io_err(std::io::Error::other(e)))?;
            out.write_all(b"\n").map_err(io_err)?;
        }
        out.flush().map_err(io_err)?;
    }
    tmp.persist(path).map_err(|e| io_err(e.error))?;
    Ok(())
}
