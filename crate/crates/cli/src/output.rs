//! CSV tables with JSON metadata sidecars and optional gnuplot stubs.

use std::fs;
use std::path::{Path, PathBuf};

use serde_json::{json, Map, Value};

use crate::error::CliError;

/// Fixed column contracts.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Schema {
    /// `k,psi`
    Distribution,
    /// `sweep_value,metric,value`
    Sweep,
    /// `event,k`
    Trajectory,
    /// `k,prob_absorb_at_0,prob_absorb_at_n,expected_steps`
    Absorption,
    /// `x0,time,share_primary`
    Replicator,
}

impl Schema {
    pub fn columns(self) -> &'static [&'static str] {
        match self {
            Self::Distribution => &["k", "psi"],
            Self::Sweep => &["sweep_value", "metric", "value"],
            Self::Trajectory => &["event", "k"],
            Self::Absorption => &[
                "k",
                "prob_absorb_at_0",
                "prob_absorb_at_n",
                "expected_steps",
            ],
            Self::Replicator => &["x0", "time", "share_primary"],
        }
    }
}

#[derive(Debug, Clone)]
pub struct OutputDir {
    root: PathBuf,
    gnuplot: bool,
    written: Vec<PathBuf>,
}

impl OutputDir {
    pub fn create(root: impl Into<PathBuf>, gnuplot: bool) -> Result<Self, CliError> {
        let root = root.into();
        fs::create_dir_all(&root).map_err(|e| CliError::output(&root, e))?;
        Ok(Self {
            root,
            gnuplot,
            written: Vec::new(),
        })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    /// Every file written so far, in order.
    pub fn written(&self) -> &[PathBuf] {
        &self.written
    }

    /// Writes `<stem>.csv` and `<stem>.meta.json`. `metadata` must be a JSON
    /// object; the column list is added to it.
    pub fn write_table(
        &mut self,
        stem: &str,
        schema: Schema,
        rows: &[Vec<String>],
        metadata: Value,
    ) -> Result<PathBuf, CliError> {
        let path = self.root.join(format!("{stem}.csv"));
        let mut writer = csv::Writer::from_path(&path).map_err(|e| CliError::output(&path, e))?;
        writer
            .write_record(schema.columns())
            .map_err(|e| CliError::output(&path, e))?;
        for row in rows {
            debug_assert_eq!(row.len(), schema.columns().len());
            writer
                .write_record(row)
                .map_err(|e| CliError::output(&path, e))?;
        }
        writer.flush().map_err(|e| CliError::output(&path, e))?;
        self.written.push(path.clone());

        let mut meta = match metadata {
            Value::Object(map) => map,
            other => {
                let mut map = Map::new();
                map.insert("details".into(), other);
                map
            }
        };
        meta.insert("file".into(), json!(format!("{stem}.csv")));
        meta.insert("columns".into(), json!(schema.columns()));
        self.write_json(&format!("{stem}.meta.json"), &Value::Object(meta))?;

        if self.gnuplot {
            let script = gnuplot_stub(stem, schema, rows);
            self.write_text(&format!("{stem}.gp"), &script)?;
        }
        Ok(path)
    }

    pub fn write_json(&mut self, name: &str, value: &Value) -> Result<PathBuf, CliError> {
        let text = serde_json::to_string_pretty(value).map_err(|e| CliError::output(name, e))?;
        self.write_text(name, &(text + "\n"))
    }

    fn write_text(&mut self, name: &str, text: &str) -> Result<PathBuf, CliError> {
        let path = self.root.join(name);
        fs::write(&path, text).map_err(|e| CliError::output(&path, e))?;
        self.written.push(path.clone());
        Ok(path)
    }
}

/// Shortest round-trip decimal form.
pub fn num(x: f64) -> String {
    format!("{x}")
}

pub fn distribution_rows(psi: &[f64]) -> Vec<Vec<String>> {
    psi.iter()
        .enumerate()
        .map(|(k, p)| vec![k.to_string(), num(*p)])
        .collect()
}

fn gnuplot_stub(stem: &str, schema: Schema, rows: &[Vec<String>]) -> String {
    let data = format!("{stem}.csv");
    let mut out = format!(
        "# gnuplot -p {stem}.gp\nset datafile separator ','\nset key autotitle columnhead\nset title '{stem}'\n"
    );
    let body = match schema {
        Schema::Distribution => {
            format!("set xlabel 'k'\nset ylabel 'psi'\nset style fill solid 0.5\nplot '{data}' using 1:2 with boxes\n")
        }
        Schema::Trajectory => {
            format!("set xlabel 'event'\nset ylabel 'k'\nplot '{data}' using 1:2 with steps\n")
        }
        Schema::Absorption => format!(
            "set xlabel 'initial k'\nplot '{data}' using 1:2 with linespoints, '' using 1:3 with linespoints\n"
        ),
        Schema::Replicator => {
            format!("set xlabel 't'\nset ylabel 'x_P'\nset logscale x\nplot '{data}' using 2:3 with lines\n")
        }
        Schema::Sweep => {
            let mut metrics: Vec<&str> = Vec::new();
            for row in rows {
                if !metrics.contains(&row[1].as_str()) {
                    metrics.push(&row[1]);
                }
            }
            let series: Vec<String> = metrics
                .iter()
                .map(|m| {
                    format!("\"< awk -F, '$2 == \\\"{m}\\\"' {data}\" using 1:3 with linespoints title '{m}'")
                })
                .collect();
            format!("set xlabel 'sweep value'\nplot {}\n", series.join(", \\\n     "))
        }
    };
    out.push_str(&body);
    out
}
