use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::run::{Coord, Coords, RunRecord};
use crate::error::{contract, Error, Result};
use crate::geometry::csv_escape;

/// Mean and spread of one metric at one sweep point.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub coords: Coords,
    pub activation: String,
    pub metric: String,
    pub mean: f64,
    /// Sample standard deviation over seeds (0 for a single seed).
    pub std: f64,
    pub n: usize,
}

/// Aggregated sweep results, sorted canonically.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResultsTable {
    pub experiment: String,
    /// Coordinate names present in every row, in column order.
    pub coord_keys: Vec<String>,
    pub rows: Vec<ResultRow>,
}

fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

type RowKey = (Vec<(String, CoordKey)>, String, String);

/// Total order on coordinates for grouping.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
enum CoordKey {
    Num(u64),
    Text(String),
}

fn order_bits(v: f64) -> u64 {
    // Monotone map from f64 to u64 for sorting.
    let b = v.to_bits();
    if b >> 63 == 1 {
        !b
    } else {
        b | (1 << 63)
    }
}

fn key_of(c: &Coord) -> CoordKey {
    match c {
        Coord::Num(v) => CoordKey::Num(order_bits(*v)),
        Coord::Text(s) => CoordKey::Text(s.clone()),
    }
}

impl ResultsTable {
    /// Groups successful runs' samples by (coordinates, activation, metric).
    /// Activations keep their order of first appearance.
    pub fn aggregate(experiment: &str, records: &[RunRecord]) -> Self {
        let mut activation_rank: Vec<String> = Vec::new();
        for r in records {
            if !activation_rank.contains(&r.activation) {
                activation_rank.push(r.activation.clone());
            }
        }
        let mut groups: BTreeMap<(usize, RowKey), (Coords, Vec<f64>)> = BTreeMap::new();
        let mut keys = BTreeSet::new();
        for r in records.iter().filter(|r| r.error.is_none()) {
            let rank = activation_rank.iter().position(|a| a == &r.activation).unwrap_or(0);
            for s in &r.samples {
                keys.extend(s.coords.keys().cloned());
                let ck: Vec<(String, CoordKey)> = s.coords.iter().map(|(k, v)| (k.clone(), key_of(v))).collect();
                let entry = groups
                    .entry((rank, (ck, r.activation.clone(), s.metric.clone())))
                    .or_insert_with(|| (s.coords.clone(), Vec::new()));
                entry.1.push(s.value);
            }
        }
        let mut rows: Vec<(Vec<(String, CoordKey)>, usize, String, ResultRow)> = groups
            .into_iter()
            .map(|((rank, (ck, activation, metric)), (coords, values))| {
                let (mean, std) = mean_std(&values);
                (ck, rank, metric.clone(), ResultRow { coords, activation, metric, mean, std, n: values.len() })
            })
            .collect();
        rows.sort_by(|a, b| (&a.0, a.1, &a.2).cmp(&(&b.0, b.1, &b.2)));
        Self { experiment: experiment.to_string(), coord_keys: keys.into_iter().collect(), rows: rows.into_iter().map(|r| r.3).collect() }
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn metric_names(&self) -> Vec<String> {
        let mut out: Vec<String> = Vec::new();
        for r in &self.rows {
            if !out.contains(&r.metric) {
                out.push(r.metric.clone());
            }
        }
        out
    }

    /// Rows of one metric, or an error listing the metrics available.
    pub fn metric(&self, name: &str) -> Result<Vec<&ResultRow>> {
        let rows: Vec<&ResultRow> = self.rows.iter().filter(|r| r.metric == name).collect();
        if rows.is_empty() {
            return Err(Error::UnknownMetric { name: name.to_string(), available: self.metric_names().join(", ") });
        }
        Ok(rows)
    }

    /// First row matching the activation, metric and every given coordinate.
    pub fn find(&self, activation: &str, metric: &str, coords: &[(&str, Coord)]) -> Option<&ResultRow> {
        self.rows.iter().find(|r| {
            r.activation == activation
                && r.metric == metric
                && coords.iter().all(|(k, v)| r.coords.get(*k) == Some(v))
        })
    }

    pub fn csv_header(&self) -> String {
        let mut cols = vec!["experiment".to_string(), "activation".to_string()];
        cols.extend(self.coord_keys.iter().cloned());
        cols.extend(["metric", "mean", "std", "n"].map(String::from));
        cols.join(",")
    }

    /// Header plus one line per row; numbers use the shortest round-trip form.
    pub fn to_csv(&self) -> String {
        let mut out = self.csv_header();
        out.push('\n');
        for r in &self.rows {
            let mut cells = vec![csv_escape(&self.experiment), csv_escape(&r.activation)];
            for k in &self.coord_keys {
                cells.push(r.coords.get(k).map(|c| csv_escape(&c.to_string())).unwrap_or_default());
            }
            cells.push(csv_escape(&r.metric));
            cells.push(r.mean.to_string());
            cells.push(r.std.to_string());
            cells.push(r.n.to_string());
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        out
    }

    /// Parses [`Self::to_csv`] output back into rows.
    pub fn from_csv(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        let header: Vec<&str> = lines.next().ok_or_else(|| contract("empty results CSV"))?.split(',').collect();
        if header.len() < 6 || header[0] != "experiment" || header[1] != "activation" {
            return Err(contract("unexpected results CSV header"));
        }
        let coord_keys: Vec<String> = header[2..header.len() - 4].iter().map(|s| s.to_string()).collect();
        let mut rows = Vec::new();
        let mut experiment = String::new();
        for (i, line) in lines.enumerate() {
            let cells = split_csv_line(line);
            if cells.len() != header.len() {
                return Err(contract(format!("results CSV line {} has {} cells", i + 2, cells.len())));
            }
            experiment = cells[0].clone();
            let mut coords = Coords::new();
            for (k, v) in coord_keys.iter().zip(&cells[2..]) {
                if v.is_empty() {
                    continue;
                }
                let c = v.parse::<f64>().map(Coord::Num).unwrap_or_else(|_| Coord::Text(v.clone()));
                coords.insert(k.clone(), c);
            }
            let n = cells.len();
            let num = |s: &str| s.parse::<f64>().map_err(|e| contract(format!("line {}: {e}", i + 2)));
            rows.push(ResultRow {
                coords,
                activation: cells[1].clone(),
                metric: cells[n - 4].clone(),
                mean: num(&cells[n - 3])?,
                std: num(&cells[n - 2])?,
                n: cells[n - 1].parse().map_err(|e| contract(format!("line {}: {e}", i + 2)))?,
            });
        }
        Ok(Self { experiment, coord_keys, rows })
    }
}

fn split_csv_line(line: &str) -> Vec<String> {
    let mut out = Vec::new();
    let mut cur = String::new();
    let mut quoted = false;
    let mut chars = line.chars().peekable();
    while let Some(c) = chars.next() {
        match (c, quoted) {
            ('"', true) if chars.peek() == Some(&'"') => {
                cur.push('"');
                chars.next();
            }
            ('"', _) => quoted = !quoted,
            (',', false) => out.push(std::mem::take(&mut cur)),
            _ => cur.push(c),
        }
    }
    out.push(cur);
    out
}

/// Contents of `results.json`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResultsFile {
    pub config: super::config::ExperimentConfig,
    pub table: ResultsTable,
    pub runs: Vec<RunRecord>,
}

impl ResultsFile {
    pub fn failures(&self) -> impl Iterator<Item = &RunRecord> {
        self.runs.iter().filter(|r| r.error.is_some())
    }
}
