use std::fmt::Display;

use preassess_core::ErrorCode;
use serde_json::{json, Value};

/// A command's result in both renderings.
#[derive(Debug)]
pub struct Report {
    pub human: String,
    pub json: Value,
    /// False turns a completed run into exit code 1 (reproduce-paper mismatches).
    pub success: bool,
}

impl Report {
    pub fn ok(human: String, json: Value) -> Self {
        Report { human, json, success: true }
    }

    pub fn print(&self, json: bool) {
        if json {
            println!("{}", serde_json::to_string_pretty(&self.json).expect("json value"));
        } else {
            print!("{}", self.human);
            if !self.human.ends_with('\n') {
                println!();
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CliError {
    pub code: String,
    pub message: String,
}

impl CliError {
    pub fn new(code: &str, message: impl Into<String>) -> Self {
        CliError { code: code.to_string(), message: message.into() }
    }

    pub fn print(&self, json: bool) {
        if json {
            println!("{}", json!({ "error": { "code": self.code, "message": self.message } }));
        }
        eprintln!("error[{}]: {}", self.code, self.message);
    }
}

impl<E: ErrorCode + Display> From<E> for CliError {
    fn from(e: E) -> Self {
        CliError { code: e.code().to_string(), message: e.to_string() }
    }
}

pub fn dec4(x: f64) -> String {
    format!("{x:.4}")
}
