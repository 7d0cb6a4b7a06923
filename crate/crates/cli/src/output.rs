use std::fs;
use std::io::Write;
use std::path::Path;

use serde::Serialize;
use serde_json::Value;

use crate::config::RunConfig;
use crate::fail::CliError;

/// Where the human-readable report and the JSON document go.
pub struct Sink<'a> {
    json: Option<&'a Path>,
}

impl<'a> Sink<'a> {
    pub fn new(json: Option<&'a Path>) -> Self {
        Self { json }
    }

    fn json_to_stdout(&self) -> bool {
        self.json.is_some_and(|p| p == Path::new("-"))
    }

    /// Prints the text report unless JSON was sent to stdout.
    pub fn text(&self, report: &str) {
        if !self.json_to_stdout() {
            // Ignored so that `| head` does not abort the run.
            let _ = std::io::stdout().write_all(report.as_bytes());
        }
    }

    /// Writes `{"config": ..., <body fields>}` when `--json` was given.
    pub fn json(&self, cfg: &RunConfig, body: &impl Serialize) -> Result<(), CliError> {
        let Some(path) = self.json else { return Ok(()) };
        let text = render(cfg, body);
        if self.json_to_stdout() {
            std::io::stdout().write_all(text.as_bytes()).map_err(CliError::file("<stdout>"))
        } else {
            fs::write(path, text).map_err(CliError::file(path))
        }
    }
}

pub fn render(cfg: &RunConfig, body: &impl Serialize) -> String {
    let mut doc = serde_json::Map::new();
    doc.insert("config".into(), serde_json::to_value(cfg).expect("config serializes"));
    match serde_json::to_value(body).expect("outputs serialize") {
        Value::Object(fields) => doc.extend(fields),
        other => {
            doc.insert("result".into(), other);
        }
    }
    let mut text = serde_json::to_string_pretty(&Value::Object(doc)).expect("JSON values serialize");
    text.push('\n');
    text
}

/// Writes to `out`, or stdout when absent.
pub fn write_artifact(out: Option<&Path>, write: impl FnOnce(&mut dyn Write) -> hexgap::Result<()>) -> Result<(), CliError> {
    match out {
        Some(path) => {
            let file = fs::File::create(path).map_err(CliError::file(path))?;
            let mut w = std::io::BufWriter::new(file);
            write(&mut w)?;
            w.flush().map_err(CliError::file(path))
        }
        None => {
            let stdout = std::io::stdout();
            let mut w = stdout.lock();
            match write(&mut w) {
                // A closed pipe (`| head`) is not an error for the producer.
                Err(hexgap::Error::Io(e)) if e.kind() == std::io::ErrorKind::BrokenPipe => Ok(()),
                Err(e) => Err(e.into()),
                Ok(()) => w
                    .flush()
                    .or_else(|e| if e.kind() == std::io::ErrorKind::BrokenPipe { Ok(()) } else { Err(e) })
                    .map_err(CliError::file("<stdout>")),
            }
        }
    }
}
