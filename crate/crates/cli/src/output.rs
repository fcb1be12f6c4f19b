use std::fs;
use std::io::Write;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::{Map, Value};

use crate::args::Format;
use crate::CliError;

/// The result of one subcommand, in both output shapes.
pub struct Report {
    /// Fields placed next to `command`/`config` in the JSON document.
    pub fields: Map<String, Value>,
    pub csv_header: Vec<String>,
    pub csv_rows: Vec<Vec<String>>,
    /// Set when a checked property failed; reported after the output is written.
    pub failure: Option<String>,
}

impl Report {
    pub fn new(result: Value) -> Self {
        let mut fields = Map::new();
        fields.insert("result".into(), result);
        Report {
            fields,
            csv_header: Vec::new(),
            csv_rows: Vec::new(),
            failure: None,
        }
    }

    pub fn csv<S: Into<String>>(mut self, header: impl IntoIterator<Item = S>, rows: Vec<Vec<String>>) -> Self {
        self.csv_header = header.into_iter().map(Into::into).collect();
        self.csv_rows = rows;
        self
    }
}

pub fn to_value<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("output types serialise")
}

/// Reads a JSON file, reporting the path of the offending field on error.
pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T, CliError> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::validation(format!("cannot read {}: {e}", path.display())))?;
    let de = &mut serde_json::Deserializer::from_str(&text);
    serde_path_to_error::deserialize(de).map_err(|e| {
        let field = e.path().to_string();
        if field == "." {
            CliError::validation(format!("{}: {}", path.display(), e.inner()))
        } else {
            CliError::validation(format!("{}: field `{field}`: {}", path.display(), e.inner()))
        }
    })
}

/// Renders the report and writes it to `dest` (or standard output).
pub fn emit(
    report: &Report,
    command: &str,
    config: &Value,
    format: Format,
    dest: Option<&Path>,
) -> Result<(), CliError> {
    let bytes = match format {
        Format::Json => {
            let mut doc = Map::new();
            doc.insert("command".into(), Value::String(command.into()));
            doc.insert("config".into(), config.clone());
            doc.insert("version".into(), Value::String(env!("CARGO_PKG_VERSION").into()));
            for (k, v) in &report.fields {
                doc.insert(k.clone(), v.clone());
            }
            let mut text = serde_json::to_string_pretty(&Value::Object(doc)).expect("json");
            text.push('\n');
            text.into_bytes()
        }
        Format::Csv => {
            let config = serde_json::to_string(config).expect("json");
            let mut w = csv::Writer::from_writer(Vec::new());
            let io = |e: csv::Error| CliError::internal(format!("csv: {e}"));
            w.write_record(report.csv_header.iter().map(String::as_str).chain(["config"]))
                .map_err(io)?;
            for row in &report.csv_rows {
                w.write_record(row.iter().map(String::as_str).chain([config.as_str()]))
                    .map_err(io)?;
            }
            w.into_inner().map_err(|e| CliError::internal(format!("csv: {e}")))?
        }
    };
    match dest {
        Some(path) => fs::write(path, bytes)
            .map_err(|e| CliError::validation(format!("cannot write {}: {e}", path.display()))),
        None => std::io::stdout()
            .write_all(&bytes)
            .map_err(|e| CliError::internal(format!("stdout: {e}"))),
    }
}
