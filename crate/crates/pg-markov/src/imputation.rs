//! Multiple imputation over uncertain state labels.
//!
//! Upstream classification produces, for every fix, a probability vector over
//! the behavior alphabet. Labels are treated as conditionally independent in
//! time given that classifier output, so each candidate dataset is drawn by
//! independent categorical sampling per fix. The M datasets are drawn once up
//! front and stored; the chain loop then mixes over them by selecting one
//! uniformly at every iteration.

use crate::{Error, Result};
use rand::Rng;
use serde::{Deserialize, Serialize};

/// Tolerance on each probability row summing to one.
pub const ROW_SUM_TOL: f64 = 1e-6;

/// Classification probabilities aligned to the global fix schedule.
///
/// `rows[r]` is the probability vector over the alphabet for fix `r`; the
/// fix-to-(individual, timestamp) correspondence is owned by the ingestion
/// layer, which guarantees alignment with the design rows.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassificationProbs {
    pub n_states: usize,
    pub rows: Vec<Vec<f64>>,
}

impl ClassificationProbs {
    pub fn new(n_states: usize, rows: Vec<Vec<f64>>) -> Result<Self> {
        let probs = Self { n_states, rows };
        probs.validate()?;
        Ok(probs)
    }

    pub fn validate(&self) -> Result<()> {
        for (r, row) in self.rows.iter().enumerate() {
            if row.len() != self.n_states {
                return Err(Error::Dimension(format!(
                    "probability row {r} has {} entries, expected {}",
                    row.len(),
                    self.n_states
                )));
            }
            if row.iter().any(|&p| !(0.0..=1.0).contains(&p)) {
                return Err(Error::Validation {
                    file: "<probabilities>".into(),
                    row: r,
                    message: "probability outside [0, 1]".into(),
                });
            }
            let sum: f64 = row.iter().sum();
            if (sum - 1.0).abs() > ROW_SUM_TOL {
                return Err(Error::Validation {
                    file: "<probabilities>".into(),
                    row: r,
                    message: format!("row sums to {sum}, not 1"),
                });
            }
        }
        Ok(())
    }

    pub fn n_fixes(&self) -> usize {
        self.rows.len()
    }

    /// Point-mass rows reproducing a known label sequence.
    pub fn degenerate(n_states: usize, labels: &[usize]) -> Self {
        let rows = labels
            .iter()
            .map(|&s| {
                let mut row = vec![0.0; n_states];
                row[s] = 1.0;
                row
            })
            .collect();
        Self { n_states, rows }
    }
}

/// M complete candidate label datasets aligned to the fix schedule.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImputationSet {
    pub n_states: usize,
    /// `datasets[m][r]` is the label of fix `r` in candidate dataset `m`.
    pub datasets: Vec<Vec<usize>>,
}

impl ImputationSet {
    /// A single fixed dataset; fitting against it reduces to a fixed-data fit.
    pub fn fixed(n_states: usize, labels: Vec<usize>) -> Self {
        Self {
            n_states,
            datasets: vec![labels],
        }
    }

    pub fn m(&self) -> usize {
        self.datasets.len()
    }

    pub fn n_fixes(&self) -> usize {
        self.datasets.first().map_or(0, Vec::len)
    }
}

/// Draw M candidate datasets by independent categorical sampling per fix.
pub fn draw_imputations<R: Rng + ?Sized>(
    probs: &ClassificationProbs,
    m: usize,
    rng: &mut R,
) -> Result<ImputationSet> {
    if m < 1 {
        return Err(Error::Parameter("imputation count M must be >= 1".into()));
    }
    probs.validate()?;
    let datasets = (0..m)
        .map(|_| {
            probs
                .rows
                .iter()
                .map(|row| categorical(row, rng))
                .collect::<Vec<usize>>()
        })
        .collect();
    Ok(ImputationSet {
        n_states: probs.n_states,
        datasets,
    })
}

/// Uniform dataset index in 0..M.
///
/// Always consumes exactly one uniform variate, so a fixed-data (M = 1) run
/// and a degenerate M-dataset run walk identical random streams.
pub fn select_dataset<R: Rng + ?Sized>(set: &ImputationSet, rng: &mut R) -> usize {
    let u: f64 = rng.gen();
    ((u * set.m() as f64) as usize).min(set.m() - 1)
}

/// Per-fix argmax labels, ties broken by the lowest label index.
pub fn argmax_labels(probs: &ClassificationProbs) -> Vec<usize> {
    probs
        .rows
        .iter()
        .map(|row| {
            let mut best = 0usize;
            for (k, &p) in row.iter().enumerate() {
                if p > row[best] {
                    best = k;
                }
            }
            best
        })
        .collect()
}

fn categorical<R: Rng + ?Sized>(row: &[f64], rng: &mut R) -> usize {
    let u: f64 = rng.gen::<f64>() * row.iter().sum::<f64>();
    let mut acc = 0.0;
    for (k, &p) in row.iter().enumerate() {
        acc += p;
        if u < acc {
            return k;
        }
    }
    row.len() - 1
}
