//! Writers for the per-command CSV, JSON and SVG files. Every file carries
//! the config hash: a trailing `config_hash` column in CSV, a top-level key
//! in JSON, a comment in SVG.

use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::config::{Config, Format};
use crate::svg::{self, Plot, Provenance};

pub struct OutputSink {
    dir: PathBuf,
    formats: Vec<Format>,
    provenance: Provenance,
    written: Vec<PathBuf>,
}

/// JSON envelope shared by every command.
#[derive(Serialize)]
struct Envelope<'a, T: Serialize> {
    command: &'a str,
    config_hash: &'a str,
    seed: u64,
    result: &'a T,
}

impl OutputSink {
    pub fn new(config: &Config) -> std::io::Result<Self> {
        let dir = PathBuf::from(&config.output.dir);
        fs::create_dir_all(&dir)?;
        Ok(Self {
            dir,
            formats: config.output.formats.clone(),
            provenance: Provenance {
                config_hash: config.hash(),
                seed: config.seed(),
            },
            written: Vec::new(),
        })
    }

    pub fn config_hash(&self) -> &str {
        &self.provenance.config_hash
    }

    pub fn written(&self) -> &[PathBuf] {
        &self.written
    }

    fn wants(&self, f: Format) -> bool {
        self.formats.contains(&f)
    }

    /// `<dir>/<name>.csv` with the hash appended to every row.
    pub fn csv(&mut self, name: &str, header: &[&str], rows: &[Vec<String>]) -> anyhow::Result<()> {
        if !self.wants(Format::Csv) {
            return Ok(());
        }
        self.csv_file(name, header, rows)
    }

    /// Like [`OutputSink::csv`] but written whatever the configured formats.
    pub fn csv_file(&mut self, name: &str, header: &[&str], rows: &[Vec<String>]) -> anyhow::Result<()> {
        let path = self.dir.join(format!("{name}.csv"));
        let mut w = csv::Writer::from_path(&path)?;
        let mut head: Vec<&str> = header.to_vec();
        head.push("config_hash");
        w.write_record(&head)?;
        for row in rows {
            debug_assert_eq!(row.len(), header.len());
            let mut r: Vec<&str> = row.iter().map(String::as_str).collect();
            r.push(&self.provenance.config_hash);
            w.write_record(&r)?;
        }
        w.flush()?;
        self.written.push(path);
        Ok(())
    }

    pub fn json<T: Serialize>(&mut self, command: &str, result: &T) -> anyhow::Result<()> {
        if !self.wants(Format::Json) {
            return Ok(());
        }
        let path = self.dir.join(format!("{command}.json"));
        let env = Envelope {
            command,
            config_hash: &self.provenance.config_hash,
            seed: self.provenance.seed,
            result,
        };
        let mut text = serde_json::to_string_pretty(&env)?;
        text.push('\n');
        fs::write(&path, text)?;
        self.written.push(path);
        Ok(())
    }

    pub fn svg(&mut self, name: &str, plot: &Plot) -> anyhow::Result<()> {
        // a plot with nothing finite to draw is skipped rather than failing the run
        let drawable = plot.series.iter().flat_map(|s| &s.points).any(|(x, y)| x.is_finite() && y.is_finite());
        if !self.wants(Format::Svg) || !drawable {
            return Ok(());
        }
        let path = self.dir.join(format!("{name}.svg"));
        svg::emit_plot(plot, &self.provenance, &path)?;
        self.written.push(path);
        Ok(())
    }
}

/// Shortest round-trip decimal form.
pub fn num(x: f64) -> String {
    format!("{x}")
}

pub fn opt_num(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

/// Config hash embedded in a written file, if any.
pub fn embedded_hash(path: &Path) -> anyhow::Result<Option<String>> {
    let text = fs::read_to_string(path)?;
    let hash = match path.extension().and_then(|e| e.to_str()) {
        Some("csv") => {
            let mut r = csv::Reader::from_reader(text.as_bytes());
            let col = r.headers()?.iter().position(|h| h == "config_hash");
            let mut seen = BTreeSet::new();
            if let Some(c) = col {
                for rec in r.records() {
                    seen.insert(rec?.get(c).unwrap_or_default().to_string());
                }
            }
            if seen.len() > 1 {
                anyhow::bail!("{} mixes several config hashes", path.display());
            }
            seen.into_iter().next()
        }
        Some("json") => {
            let v: serde_json::Value = serde_json::from_str(&text)?;
            v.get("config_hash").and_then(|h| h.as_str()).map(str::to_string)
        }
        Some("svg") => text
            .split("config_hash=")
            .nth(1)
            .and_then(|rest| rest.split_whitespace().next())
            .map(str::to_string),
        _ => None,
    };
    Ok(hash)
}
