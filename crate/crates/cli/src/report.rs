//! Report envelope and rendering. JSON output is deterministic (sorted map
//! keys, fixed field order) so identical invocations are byte-identical.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

use serde::Serialize;
use serde_json::Value;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Table,
    Json,
}

#[derive(Debug, Serialize)]
pub struct Report {
    pub command: String,
    pub inputs: BTreeMap<String, Value>,
    pub results: BTreeMap<String, Value>,
    pub witnesses: BTreeMap<String, Value>,
    pub constants: BTreeMap<String, Value>,
    pub version: String,
}

impl Report {
    pub fn new(command: &str) -> Self {
        Report {
            command: command.to_string(),
            inputs: BTreeMap::new(),
            results: BTreeMap::new(),
            witnesses: BTreeMap::new(),
            constants: BTreeMap::new(),
            version: env!("CARGO_PKG_VERSION").to_string(),
        }
    }

    pub fn render(&self, format: Format) -> String {
        match format {
            Format::Json => {
                let mut s = serde_json::to_string_pretty(self).expect("report serializes");
                s.push('\n');
                s
            }
            Format::Table => {
                let mut out = String::new();
                out.push_str(&format!("command  {}\n", self.command));
                for (section, map) in [
                    ("input", &self.inputs),
                    ("result", &self.results),
                    ("witness", &self.witnesses),
                    ("constant", &self.constants),
                ] {
                    for (k, v) in map {
                        out.push_str(&format!("{section:<9}{k} = {}\n", render_value(v)));
                    }
                }
                out.push_str(&format!("version  {}\n", self.version));
                out
            }
        }
    }

    /// Print to stdout or write atomically to `out`.
    pub fn emit(&self, format: Format, out: Option<&Path>) -> std::io::Result<()> {
        let text = self.render(format);
        match out {
            None => {
                print!("{text}");
                Ok(())
            }
            Some(path) => {
                let tmp = path.with_extension("tmp-write");
                {
                    let mut f = std::fs::File::create(&tmp)?;
                    f.write_all(text.as_bytes())?;
                    f.sync_all()?;
                }
                std::fs::rename(&tmp, path)
            }
        }
    }
}

fn render_value(v: &Value) -> String {
    match v {
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

pub fn val<T: Serialize>(t: T) -> Value {
    serde_json::to_value(t).expect("serializable")
}
