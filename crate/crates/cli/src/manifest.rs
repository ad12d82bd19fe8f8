use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{Context, Result};
use cake_core::io::to_pretty;
use cake_core::rational::{approx, format_rational, Rational};
use serde::{Deserialize, Serialize};

/// One named number. `value` is authoritative; `approx` is for display.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ResultEntry {
    pub name: String,
    pub value: String,
    pub approx: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub instance_label: String,
    pub options: BTreeMap<String, String>,
    pub results: Vec<ResultEntry>,
    /// Short outcome such as `envy-free` or `budget-exceeded`.
    pub verdict: String,
    pub elapsed_secs: f64,
}

pub struct Recorder {
    started: Instant,
    pub manifest: RunManifest,
}

impl Recorder {
    pub fn new(command: &str) -> Self {
        Self {
            started: Instant::now(),
            manifest: RunManifest {
                command: command.to_string(),
                instance_label: String::new(),
                options: BTreeMap::new(),
                results: Vec::new(),
                verdict: String::new(),
                elapsed_secs: 0.0,
            },
        }
    }

    pub fn label(&mut self, label: &str) {
        self.manifest.instance_label = label.to_string();
    }

    pub fn option(&mut self, key: &str, value: impl ToString) {
        self.manifest.options.insert(key.to_string(), value.to_string());
    }

    /// Records and prints a result line.
    pub fn result(&mut self, name: &str, value: &Rational) {
        println!("{name:<32} {:>16}  ~ {}", format_rational(value), approx(value));
        self.manifest.results.push(ResultEntry {
            name: name.to_string(),
            value: format_rational(value),
            approx: approx(value),
        });
    }

    pub fn verdict(&mut self, verdict: &str) {
        self.manifest.verdict = verdict.to_string();
    }

    pub fn write(mut self, out: &Path) -> Result<PathBuf> {
        self.manifest.elapsed_secs = self.started.elapsed().as_secs_f64();
        let path = out.join(format!("{}.manifest.json", self.manifest.command));
        write_file(&path, &to_pretty(&self.manifest))?;
        Ok(path)
    }
}

pub fn write_file(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        }
    }
    std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}
