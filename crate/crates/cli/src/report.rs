use serde::Serialize;
use serde_json::{Map, Value};

/// Result of one subcommand. With `--json` it is printed as a single line;
/// otherwise `text` is printed as-is.
#[derive(Debug, Serialize)]
pub struct RunReport {
    #[serde(flatten)]
    pub outputs: Map<String, Value>,
    pub subcommand: &'static str,
    pub params: Value,
    #[serde(skip_serializing_if = "Map::is_empty")]
    pub stats: Map<String, Value>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pass: Option<bool>,
    #[serde(skip)]
    pub text: String,
}

impl RunReport {
    pub fn new(subcommand: &'static str, params: Value) -> Self {
        Self {
            outputs: Map::new(),
            subcommand,
            params,
            stats: Map::new(),
            pass: None,
            text: String::new(),
        }
    }

    pub fn output(&mut self, key: &str, value: impl Serialize) -> &mut Self {
        self.outputs.insert(key.into(), to_value(value));
        self
    }

    /// Merges the fields of a serializable struct into the outputs.
    pub fn outputs_from(&mut self, value: impl Serialize) -> &mut Self {
        if let Value::Object(map) = to_value(value) {
            self.outputs.extend(map);
        }
        self
    }

    pub fn stat(&mut self, key: &str, value: impl Serialize) -> &mut Self {
        self.stats.insert(key.into(), to_value(value));
        self
    }

    pub fn line(&mut self, line: impl AsRef<str>) -> &mut Self {
        self.text.push_str(line.as_ref());
        self.text.push('\n');
        self
    }

    pub fn verdict(&mut self, pass: bool) -> &mut Self {
        self.pass = Some(pass);
        self
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("report serializes")
    }
}

fn to_value(v: impl Serialize) -> Value {
    serde_json::to_value(v).expect("value serializes")
}

pub fn pass_fail(ok: bool) -> &'static str {
    if ok {
        "PASS"
    } else {
        "FAIL"
    }
}
