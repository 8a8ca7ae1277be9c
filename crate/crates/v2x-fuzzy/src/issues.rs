use std::fmt;
use std::ops::Range;

use serde::Serialize;

/// One configuration problem, naming the offending key and where it was
/// set.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ConfigIssue {
    pub key: String,
    /// `file:line:column`, a command-line flag, or the preset a default
    /// came from.
    pub location: String,
    pub message: String,
}

impl fmt::Display for ConfigIssue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {} ({})", self.location, self.message, self.key)
    }
}

/// Every problem found while assembling a configuration.
#[derive(Debug, Clone, PartialEq, Eq, Default, thiserror::Error)]
#[error("{} configuration error(s); first: {}", .0.len(), .0.first().map(ToString::to_string).unwrap_or_default())]
pub struct ConfigErrors(pub Vec<ConfigIssue>);

impl ConfigErrors {
    pub fn single(key: impl Into<String>, location: impl Into<String>, message: impl Into<String>) -> Self {
        ConfigErrors(vec![ConfigIssue { key: key.into(), location: location.into(), message: message.into() }])
    }

    /// Machine-readable form written to stderr on exit code 2.
    pub fn to_json(&self) -> String {
        #[derive(Serialize)]
        struct Doc<'a> {
            errors: &'a [ConfigIssue],
        }
        serde_json::to_string_pretty(&Doc { errors: &self.0 }).expect("plain strings serialize")
    }
}

/// Maps byte offsets of a source text to `path:line:column`.
#[derive(Debug, Clone)]
pub struct SourceMap<'a> {
    pub path: &'a str,
    pub text: &'a str,
}

impl SourceMap<'_> {
    pub fn locate(&self, span: Range<usize>) -> String {
        let upto = &self.text[..span.start.min(self.text.len())];
        let line = upto.matches('\n').count() + 1;
        let column = upto.len() - upto.rfind('\n').map_or(0, |i| i + 1) + 1;
        format!("{}:{}:{}", self.path, line, column)
    }

    /// Converts a TOML parse failure, recovering the key from the message
    /// where the parser names one.
    pub fn parse_issue(&self, err: &toml::de::Error) -> ConfigIssue {
        let message = err.message().to_string();
        let key = ["unknown field `", "missing field `", "duplicate key `"]
            .iter()
            .find_map(|p| message.split_once(p).and_then(|(_, rest)| rest.split_once('`')).map(|(k, _)| k))
            .unwrap_or("toml")
            .to_string();
        let location = err.span().map_or_else(|| self.path.to_string(), |s| self.locate(s));
        ConfigIssue { key, location, message }
    }
}
