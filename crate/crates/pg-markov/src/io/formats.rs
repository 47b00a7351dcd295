//! CSV ingestion and writing, with structured validation.

use crate::gibbs::{FitData, Segment};
use crate::imputation::{ClassificationProbs, ImputationSet};
use crate::io::config::RunConfig;
use crate::model::{DesignLayout, StateAlphabet};
use crate::sim::{time_of_day, SimData, SimScenario};
use crate::{Error, Result};
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use std::path::Path;

/// Label observations: either fixed labels or classification probabilities,
/// both aligned to the global fix order of the design matrix.
#[derive(Debug, Clone, PartialEq)]
pub enum Observations {
    Labels(Vec<usize>),
    Probs(ClassificationProbs),
}

/// Ingestion summary written alongside every run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub n_individuals: usize,
    pub n_fixes: usize,
    pub n_segments: usize,
    pub n_transitions: usize,
    pub individuals: Vec<IndividualReport>,
    pub habitat_frequencies: Vec<(String, u64)>,
    /// Mean and standard deviation used to standardize each quantitative
    /// column; empty when standardization is disabled.
    pub standardization: Vec<(String, f64, f64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IndividualReport {
    pub individual_id: String,
    pub n_fixes: usize,
    pub n_segments: usize,
}

impl std::fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        writeln!(
            f,
            "{} individuals, {} fixes, {} segments, {} transitions",
            self.n_individuals, self.n_fixes, self.n_segments, self.n_transitions
        )?;
        for ind in &self.individuals {
            writeln!(
                f,
                "  {}: {} fixes in {} segments",
                ind.individual_id, ind.n_fixes, ind.n_segments
            )?;
        }
        writeln!(f, "habitat frequencies:")?;
        for (name, count) in &self.habitat_frequencies {
            writeln!(f, "  {name}: {count}")?;
        }
        for (name, mean, sd) in &self.standardization {
            writeln!(f, "standardized {name}: mean {mean:.6}, sd {sd:.6}")?;
        }
        Ok(())
    }
}

/// Fully validated model inputs.
#[derive(Debug, Clone)]
pub struct LoadedInputs {
    pub data: FitData,
    pub observations: Observations,
    pub report: ValidationReport,
}

struct CsvTable {
    file: String,
    headers: Vec<String>,
    records: Vec<Vec<String>>,
}

impl CsvTable {
    fn read(path: &Path) -> Result<Self> {
        let mut reader = csv::Reader::from_path(path)?;
        let headers: Vec<String> = reader.headers()?.iter().map(str::to_string).collect();
        let mut records = Vec::new();
        for rec in reader.records() {
            records.push(rec?.iter().map(str::to_string).collect());
        }
        Ok(Self {
            file: path.display().to_string(),
            headers,
            records,
        })
    }

    fn col(&self, name: &str) -> Result<usize> {
        self.headers.iter().position(|h| h == name).ok_or_else(|| Error::Validation {
            file: self.file.clone(),
            row: 0,
            message: format!("missing column '{name}'"),
        })
    }

    fn error(&self, row: usize, message: String) -> Error {
        Error::Validation {
            file: self.file.clone(),
            // 1-based data row, header excluded
            row: row + 1,
            message,
        }
    }
}

fn parse_timestamp(table: &CsvTable, row: usize, raw: &str) -> Result<i64> {
    raw.trim()
        .parse::<i64>()
        .map_err(|_| table.error(row, format!("invalid timestamp '{raw}'")))
}

/// Load and validate every input the fit pipeline needs.
pub fn load_inputs(cfg: &RunConfig) -> Result<LoadedInputs> {
    cfg.validate()?;
    let alphabet =
        StateAlphabet::with_reference_label(cfg.model.states.clone(), cfg.model.reference.as_deref())?;
    let cov = CsvTable::read(&cfg.data.covariates)?;
    let id_col = cov.col("individual_id")?;
    let ts_col = cov.col("timestamp")?;
    let hab_col = cov.col("habitat")?;
    let quant_cols: Vec<usize> = cfg
        .model
        .quantitative
        .iter()
        .map(|name| cov.col(name))
        .collect::<Result<_>>()?;

    // individuals in first-appearance order
    let mut ids: Vec<String> = Vec::new();
    for rec in &cov.records {
        if !ids.contains(&rec[id_col]) {
            ids.push(rec[id_col].clone());
        }
    }
    let id_index: HashMap<&str, usize> =
        ids.iter().enumerate().map(|(k, id)| (id.as_str(), k)).collect();

    // per-fix raw values keyed for alignment checks
    struct Fix {
        individual: usize,
        t: i64,
        habitat: usize,
        quants: Vec<f64>,
        cov_row: usize,
    }
    let mut fixes: Vec<Fix> = Vec::with_capacity(cov.records.len());
    let mut seen: HashMap<(usize, i64), usize> = HashMap::new();
    for (r, rec) in cov.records.iter().enumerate() {
        let individual = id_index[rec[id_col].as_str()];
        let t = parse_timestamp(&cov, r, &rec[ts_col])?;
        if seen.insert((individual, t), r).is_some() {
            return Err(cov.error(r, format!("duplicate fix for '{}' at {t}", rec[id_col])));
        }
        // raw habitat labels may be regrouped into model habitats first
        let hab_label = cfg
            .model
            .habitat_map
            .get(rec[hab_col].as_str())
            .map(String::as_str)
            .unwrap_or(rec[hab_col].as_str());
        let habitat = cfg
            .model
            .habitats
            .iter()
            .position(|h| h == hab_label)
            .ok_or_else(|| cov.error(r, format!("unknown habitat '{}'", rec[hab_col])))?;
        let quants = quant_cols
            .iter()
            .map(|&c| {
                rec[c]
                    .trim()
                    .parse::<f64>()
                    .map_err(|_| cov.error(r, format!("invalid number '{}' in '{}'", rec[c], cov.headers[c])))
            })
            .collect::<Result<Vec<f64>>>()?;
        fixes.push(Fix {
            individual,
            t,
            habitat,
            quants,
            cov_row: r,
        });
    }

    // sort within individual by timestamp; global order is individual-major
    let mut order: Vec<usize> = (0..fixes.len()).collect();
    order.sort_by_key(|&k| (fixes[k].individual, fixes[k].t));

    // read the label or probability file and align it by (individual, timestamp)
    let (obs_path, probs_mode) = match (&cfg.data.labels, &cfg.data.probabilities) {
        (Some(p), None) => (p, false),
        (None, Some(p)) => (p, true),
        _ => unreachable!("validated"),
    };
    let obs = CsvTable::read(obs_path)?;
    let obs_id = obs.col("individual_id")?;
    let obs_ts = obs.col("timestamp")?;
    let mut obs_by_key: HashMap<(usize, i64), usize> = HashMap::new();
    for (r, rec) in obs.records.iter().enumerate() {
        let Some(&individual) = id_index.get(rec[obs_id].as_str()) else {
            return Err(obs.error(r, format!("individual '{}' has no covariate rows", rec[obs_id])));
        };
        let t = parse_timestamp(&obs, r, &rec[obs_ts])?;
        if obs_by_key.insert((individual, t), r).is_some() {
            return Err(obs.error(r, format!("duplicate fix for '{}' at {t}", rec[obs_id])));
        }
    }
    if obs.records.len() != fixes.len() {
        return Err(Error::Validation {
            file: obs.file.clone(),
            row: 0,
            message: format!(
                "{} rows do not align with {} covariate rows",
                obs.records.len(),
                fixes.len()
            ),
        });
    }
    for fix in &fixes {
        if !obs_by_key.contains_key(&(fix.individual, fix.t)) {
            return Err(cov.error(
                fix.cov_row,
                format!("fix for '{}' at {} has no matching observation row", ids[fix.individual], fix.t),
            ));
        }
    }

    let observations = if probs_mode {
        let p_cols: Vec<usize> = alphabet
            .labels()
            .iter()
            .map(|l| obs.col(&format!("p_{l}")))
            .collect::<Result<_>>()?;
        let mut rows = Vec::with_capacity(fixes.len());
        for &k in &order {
            let fix = &fixes[k];
            let r = obs_by_key[&(fix.individual, fix.t)];
            let rec = &obs.records[r];
            let row = p_cols
                .iter()
                .map(|&c| {
                    rec[c]
                        .trim()
                        .parse::<f64>()
                        .map_err(|_| obs.error(r, format!("invalid probability '{}'", rec[c])))
                })
                .collect::<Result<Vec<f64>>>()?;
            let sum: f64 = row.iter().sum();
            if (sum - 1.0).abs() > crate::imputation::ROW_SUM_TOL || row.iter().any(|&p| !(0.0..=1.0).contains(&p)) {
                return Err(obs.error(r, format!("probability row sums to {sum}, not 1")));
            }
            rows.push(row);
        }
        Observations::Probs(ClassificationProbs {
            n_states: alphabet.n_states(),
            rows,
        })
    } else {
        let state_col = obs.col("state")?;
        let mut labels = Vec::with_capacity(fixes.len());
        for &k in &order {
            let fix = &fixes[k];
            let r = obs_by_key[&(fix.individual, fix.t)];
            let raw = &obs.records[r][state_col];
            let state = alphabet
                .index_of(raw)
                .ok_or_else(|| obs.error(r, format!("unknown state label '{raw}'")))?;
            labels.push(state);
        }
        Observations::Labels(labels)
    };

    // quantitative columns, then the computed time-of-day pair
    let mut quant_names = cfg.model.quantitative.clone();
    if cfg.model.time_of_day {
        quant_names.push("cos_time".into());
        quant_names.push("sin_time".into());
    }
    let layout = DesignLayout::new(ids.len(), cfg.model.habitats.clone(), quant_names)?;

    let n_declared = cfg.model.quantitative.len();
    let mut standardization = Vec::new();
    let mut means = vec![0.0; n_declared];
    let mut sds = vec![1.0; n_declared];
    if cfg.model.standardize && n_declared > 0 {
        let n = fixes.len() as f64;
        for q in 0..n_declared {
            let mean = fixes.iter().map(|f| f.quants[q]).sum::<f64>() / n;
            let var = fixes.iter().map(|f| (f.quants[q] - mean).powi(2)).sum::<f64>() / (n - 1.0);
            if var <= 0.0 {
                return Err(Error::Validation {
                    file: cov.file.clone(),
                    row: 0,
                    message: format!(
                        "column '{}' is constant; cannot standardize",
                        cfg.model.quantitative[q]
                    ),
                });
            }
            means[q] = mean;
            sds[q] = var.sqrt();
            standardization.push((cfg.model.quantitative[q].clone(), mean, sds[q]));
        }
    }

    let mut x = DMatrix::zeros(fixes.len(), layout.width());
    let mut times = Vec::with_capacity(fixes.len());
    for (g, &k) in order.iter().enumerate() {
        let fix = &fixes[k];
        let mut quants: Vec<f64> = fix
            .quants
            .iter()
            .enumerate()
            .map(|(q, &v)| (v - means[q]) / sds[q])
            .collect();
        if cfg.model.time_of_day {
            let (c, s) = time_of_day(fix.t as f64);
            quants.push(c);
            quants.push(s);
        }
        let row = layout.encode_row(fix.individual, fix.habitat, &quants)?;
        x.row_mut(g).copy_from(&row.transpose());
        times.push(fix.t);
    }

    // split into segments at irregular gaps (> 1.5x nominal step)
    let max_gap = (cfg.model.step_seconds as f64 * 1.5).floor() as i64;
    let mut segments: Vec<Segment> = Vec::new();
    let mut g = 0usize;
    while g < order.len() {
        let individual = fixes[order[g]].individual;
        let mut rows = vec![g];
        while g + 1 < order.len() && fixes[order[g + 1]].individual == individual {
            let dt = fixes[order[g + 1]].t - fixes[order[g]].t;
            if dt > max_gap {
                break;
            }
            g += 1;
            rows.push(g);
        }
        g += 1;
        if rows.len() >= 2 {
            segments.push(Segment {
                individual_id: ids[individual].clone(),
                individual,
                rows,
            });
        }
    }
    if segments.is_empty() {
        return Err(Error::Config("no segment contains more than one fix".into()));
    }

    let mut habitat_counts = vec![0u64; cfg.model.habitats.len()];
    for fix in &fixes {
        habitat_counts[fix.habitat] += 1;
    }
    let individuals = ids
        .iter()
        .enumerate()
        .map(|(n, id)| IndividualReport {
            individual_id: id.clone(),
            n_fixes: fixes.iter().filter(|f| f.individual == n).count(),
            n_segments: segments.iter().filter(|s| s.individual == n).count(),
        })
        .collect();
    let report = ValidationReport {
        n_individuals: ids.len(),
        n_fixes: fixes.len(),
        n_segments: segments.len(),
        n_transitions: segments.iter().map(|s| s.rows.len() - 1).sum(),
        individuals,
        habitat_frequencies: cfg
            .model
            .habitats
            .iter()
            .cloned()
            .zip(habitat_counts)
            .collect(),
        standardization,
    };

    let data = FitData {
        alphabet,
        layout,
        x,
        times,
        segments,
    };
    data.validate()?;
    Ok(LoadedInputs {
        data,
        observations,
        report,
    })
}

/// Write a simulated study as the same CSV formats the loader reads. The
/// covariates are written on the model scale, so a config with
/// `standardize = false` loads them back bit-identically.
pub fn write_simulated(dir: &Path, scenario: &SimScenario, sim: &SimData) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    let layout = &scenario.layout;
    let h_cols: Vec<usize> = layout.habitat_cols().collect();
    let q_cols: Vec<usize> = layout.quantitative_cols().collect();

    let mut cov = csv::Writer::from_path(dir.join("covariates.csv"))?;
    let mut header = vec!["individual_id".to_string(), "timestamp".to_string(), "habitat".to_string()];
    header.extend(layout.quantitative_names.iter().cloned());
    cov.write_record(&header)?;
    let mut lab = csv::Writer::from_path(dir.join("labels.csv"))?;
    lab.write_record(["individual_id", "timestamp", "state"])?;

    for seg in &sim.data.segments {
        for &r in &seg.rows {
            let habitat = h_cols
                .iter()
                .position(|&c| sim.data.x[(r, c)] == 1.0)
                .ok_or_else(|| Error::Numeric("no habitat indicator set".into()))?;
            let mut rec = vec![
                seg.individual_id.clone(),
                sim.data.times[r].to_string(),
                layout.habitat_names[habitat].clone(),
            ];
            rec.extend(q_cols.iter().map(|&c| sim.data.x[(r, c)].to_string()));
            cov.write_record(&rec)?;
            lab.write_record([
                seg.individual_id.as_str(),
                &sim.data.times[r].to_string(),
                scenario.alphabet.label(sim.labels[r]),
            ])?;
        }
    }
    cov.flush()?;
    lab.flush()?;
    Ok(())
}

/// Write soft classification probabilities derived from the true labels:
/// mass `accuracy` on the truth, the rest spread uniformly.
pub fn write_probabilities(dir: &Path, scenario: &SimScenario, sim: &SimData, accuracy: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&accuracy) {
        return Err(Error::Parameter("accuracy must be in [0, 1]".into()));
    }
    std::fs::create_dir_all(dir)?;
    let j = scenario.alphabet.n_states();
    let mut w = csv::Writer::from_path(dir.join("probabilities.csv"))?;
    let mut header = vec!["individual_id".to_string(), "timestamp".to_string()];
    header.extend(scenario.alphabet.labels().iter().map(|l| format!("p_{l}")));
    w.write_record(&header)?;
    let off = (1.0 - accuracy) / (j - 1) as f64;
    for seg in &sim.data.segments {
        for &r in &seg.rows {
            let mut rec = vec![seg.individual_id.clone(), sim.data.times[r].to_string()];
            for k in 0..j {
                rec.push(if k == sim.labels[r] { accuracy.to_string() } else { off.to_string() });
            }
            w.write_record(&rec)?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Persist an imputation set aligned to the fix schedule of `data`.
pub fn write_imputations(path: &Path, data: &FitData, set: &ImputationSet) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    let mut header = vec!["individual_id".to_string(), "timestamp".to_string()];
    header.extend((1..=set.m()).map(|m| format!("m{m}")));
    w.write_record(&header)?;
    for seg in &data.segments {
        for &r in &seg.rows {
            let mut rec = vec![seg.individual_id.clone(), data.times[r].to_string()];
            rec.extend(set.datasets.iter().map(|ds| data.alphabet.label(ds[r]).to_string()));
            w.write_record(&rec)?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Reload a persisted imputation set, checking alignment against `data`.
pub fn read_imputations(path: &Path, data: &FitData) -> Result<ImputationSet> {
    let table = CsvTable::read(path)?;
    let id_col = table.col("individual_id")?;
    let ts_col = table.col("timestamp")?;
    let m = table.headers.len() - 2;
    if m < 1 {
        return Err(Error::Validation {
            file: table.file.clone(),
            row: 0,
            message: "no imputation columns".into(),
        });
    }
    let mut datasets = vec![vec![0usize; data.x.nrows()]; m];
    let mut filled = vec![true; data.x.nrows()];
    let mut key_to_row: HashMap<(&str, i64), usize> = HashMap::new();
    for seg in &data.segments {
        for &r in &seg.rows {
            key_to_row.insert((seg.individual_id.as_str(), data.times[r]), r);
            // only rows that belong to a segment contribute transitions
            filled[r] = false;
        }
    }
    for (rec_idx, rec) in table.records.iter().enumerate() {
        let t = parse_timestamp(&table, rec_idx, &rec[ts_col])?;
        let Some(&r) = key_to_row.get(&(rec[id_col].as_str(), t)) else {
            return Err(table.error(rec_idx, format!("fix '{}' at {t} not present in the loaded data", rec[id_col])));
        };
        for (mi, ds) in datasets.iter_mut().enumerate() {
            let raw = &rec[2 + mi];
            ds[r] = data
                .alphabet
                .index_of(raw)
                .ok_or_else(|| table.error(rec_idx, format!("unknown state label '{raw}'")))?;
        }
        filled[r] = true;
    }
    if filled.iter().any(|&f| !f) {
        return Err(Error::Validation {
            file: table.file,
            row: 0,
            message: "imputation file does not cover every fix".into(),
        });
    }
    Ok(ImputationSet {
        n_states: data.alphabet.n_states(),
        datasets,
    })
}
