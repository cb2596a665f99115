//! In-memory output tree, written to disk by a single collector.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use cyclicspec::scalar::{fmt17, C};
use serde::Serialize;

use crate::CliError;

#[derive(Debug, Default, Clone, PartialEq)]
pub struct Tree {
    pub files: BTreeMap<PathBuf, Vec<u8>>,
}

impl Tree {
    pub fn put(&mut self, path: impl Into<PathBuf>, body: impl Into<Vec<u8>>) {
        self.files.insert(path.into(), body.into());
    }

    pub fn put_json<S: Serialize>(&mut self, path: impl Into<PathBuf>, value: &S) {
        let mut s = serde_json::to_string_pretty(value).expect("serializable");
        s.push('\n');
        self.put(path, s);
    }

    /// Moves every file under `prefix`.
    pub fn nest(&mut self, prefix: &str, other: Tree) {
        for (p, b) in other.files {
            self.files.insert(Path::new(prefix).join(p), b);
        }
    }

    pub fn write_to(&self, dir: &Path) -> Result<(), CliError> {
        for (rel, body) in &self.files {
            let path = dir.join(rel);
            if let Some(parent) = path.parent() {
                std::fs::create_dir_all(parent).map_err(|e| CliError::Io(format!("{}: {e}", parent.display())))?;
            }
            std::fs::write(&path, body).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        }
        Ok(())
    }
}

/// CSV builder; every float goes through `fmt17`.
pub struct Csv {
    body: String,
}

impl Csv {
    pub fn new(header: &[&str]) -> Self {
        Self {
            body: format!("{}\n", header.join(",")),
        }
    }

    pub fn row(&mut self, cells: &[Cell]) {
        let line: Vec<String> = cells.iter().map(Cell::render).collect();
        writeln!(self.body, "{}", line.join(",")).unwrap();
    }

    pub fn finish(self) -> String {
        self.body
    }
}

pub enum Cell {
    F(f64),
    I(usize),
    S(String),
    B(bool),
}

impl Cell {
    fn render(&self) -> String {
        match self {
            Cell::F(x) => fmt17(*x),
            Cell::I(n) => n.to_string(),
            Cell::S(s) => s.clone(),
            Cell::B(b) => b.to_string(),
        }
    }
}

pub fn re_im(z: C<f64>) -> [Cell; 2] {
    [Cell::F(z.re), Cell::F(z.im)]
}

/// One pass/fail line of a summary.
#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub threshold: f64,
    pub passed: bool,
}

impl Check {
    /// Passes when `value <= threshold`.
    pub fn at_most(name: impl Into<String>, value: f64, threshold: f64) -> Self {
        Self {
            name: name.into(),
            value,
            threshold,
            passed: value <= threshold,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Summary {
    pub command: String,
    pub model: serde_json::Value,
    pub seed: u64,
    pub passed: bool,
    pub checks: Vec<Check>,
}

impl Summary {
    pub fn new(command: &str, model: serde_json::Value, seed: u64, checks: Vec<Check>) -> Self {
        Self {
            command: command.into(),
            model,
            seed,
            passed: checks.iter().all(|c| c.passed),
            checks,
        }
    }
}
