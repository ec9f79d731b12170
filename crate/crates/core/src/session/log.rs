//! JSON-lines session logs: a header line carrying the engine config hash,
//! then one command per line.

use serde::{Deserialize, Serialize};

use super::{EngineConfig, ErrorKind, LoggedCommand, SessionError};

pub const LOG_FORMAT: &str = "sketchmesh-session";
pub const LOG_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LogHeader {
    pub format: String,
    pub version: u32,
    pub config_hash: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionLog {
    pub header: LogHeader,
    pub commands: Vec<LoggedCommand>,
}

impl SessionLog {
    pub fn new(config: &EngineConfig) -> Self {
        Self {
            header: LogHeader { format: LOG_FORMAT.into(), version: LOG_VERSION, config_hash: config.hash() },
            commands: Vec::new(),
        }
    }

    pub fn to_jsonl(&self) -> String {
        let mut out = serde_json::to_string(&self.header).expect("header serializes");
        out.push('\n');
        for c in &self.commands {
            out.push_str(&serde_json::to_string(c).expect("command serializes"));
            out.push('\n');
        }
        out
    }

    /// Parses a log; blank lines are skipped. Errors name the 1-based line.
    pub fn from_jsonl(text: &str) -> Result<Self, SessionError> {
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
        let (_, first) = lines.next().ok_or_else(|| log_error(1, "empty log"))?;
        let header: LogHeader = serde_json::from_str(first).map_err(|e| log_error(1, &e.to_string()))?;
        if header.format != LOG_FORMAT || header.version != LOG_VERSION {
            return Err(log_error(1, &format!("unsupported log {} v{}", header.format, header.version)));
        }
        let commands = lines
            .map(|(i, l)| serde_json::from_str(l).map_err(|e| log_error(i + 1, &e.to_string())))
            .collect::<Result<_, _>>()?;
        Ok(Self { header, commands })
    }

    pub fn load(path: impl AsRef<std::path::Path>) -> Result<Self, SessionError> {
        let text = std::fs::read_to_string(path).map_err(|e| SessionError::new(None, ErrorKind::Log(e.to_string())))?;
        Self::from_jsonl(&text)
    }

    pub fn save(&self, path: impl AsRef<std::path::Path>) -> Result<(), SessionError> {
        std::fs::write(path, self.to_jsonl()).map_err(|e| SessionError::new(None, ErrorKind::Log(e.to_string())))
    }
}

fn log_error(line: usize, message: &str) -> SessionError {
    SessionError::new(None, ErrorKind::Log(format!("line {line}: {message}")))
}
