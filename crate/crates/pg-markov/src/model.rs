//! Domain types and deterministic model mathematics.
//!
//! A first-order Markov chain over a categorical state alphabet, with the
//! transition matrix row for from-state `i` given by a multinomial logistic
//! link on a covariate vector. Coefficients for transitions into the
//! reference category are pinned to zero for identifiability; the covariate
//! vector is partitioned into individual, habitat and quantitative blocks.

use crate::{Error, Result};
use nalgebra::{DVector, DVectorView};
use serde::{Deserialize, Serialize};

/// Ordered set of behavior categories plus the reference category whose
/// coefficients are identically zero.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StateAlphabet {
    labels: Vec<String>,
    reference: usize,
}

impl StateAlphabet {
    pub fn new(labels: Vec<String>, reference: usize) -> Result<Self> {
        if labels.len() < 2 {
            return Err(Error::Parameter(format!(
                "alphabet needs at least 2 states, got {}",
                labels.len()
            )));
        }
        for (a, la) in labels.iter().enumerate() {
            if labels[a + 1..].contains(la) {
                return Err(Error::Parameter(format!("duplicate state label '{la}'")));
            }
        }
        if reference >= labels.len() {
            return Err(Error::Parameter(format!(
                "reference index {reference} out of range for {} states",
                labels.len()
            )));
        }
        Ok(Self { labels, reference })
    }

    /// Reference defaults to the last label when not named.
    pub fn with_reference_label(labels: Vec<String>, reference: Option<&str>) -> Result<Self> {
        let idx = match reference {
            None => labels.len().saturating_sub(1),
            Some(name) => labels
                .iter()
                .position(|l| l == name)
                .ok_or_else(|| Error::Parameter(format!("unknown reference state '{name}'")))?,
        };
        Self::new(labels, idx)
    }

    pub fn n_states(&self) -> usize {
        self.labels.len()
    }

    pub fn reference(&self) -> usize {
        self.reference
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn label(&self, state: usize) -> &str {
        &self.labels[state]
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.labels.iter().position(|l| l == label)
    }

    /// Non-reference destination states in alphabet order. Coefficient
    /// vectors are stored per slot in this order.
    pub fn dest_states(&self) -> Vec<usize> {
        (0..self.labels.len()).filter(|&j| j != self.reference).collect()
    }

    /// Storage slot for a non-reference destination state.
    pub fn slot_of(&self, state: usize) -> Option<usize> {
        if state == self.reference || state >= self.labels.len() {
            None
        } else if state < self.reference {
            Some(state)
        } else {
            Some(state - 1)
        }
    }

    /// Destination state for a storage slot.
    pub fn state_of_slot(&self, slot: usize) -> usize {
        if slot < self.reference {
            slot
        } else {
            slot + 1
        }
    }
}

/// One individual's regularly spaced categorical state series.
///
/// Ingestion splits a series at any inter-fix gap exceeding 1.5x the nominal
/// step, so a single animal may contribute several sequences; each sequence
/// conditions on its own first state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BehaviorSequence {
    pub individual_id: String,
    /// Timestamp of the first fix, in seconds.
    pub t0: i64,
    /// Nominal inter-fix interval, in seconds.
    pub step: i64,
    pub states: Vec<usize>,
}

impl BehaviorSequence {
    pub fn validate(&self, n_states: usize) -> Result<()> {
        if self.states.len() < 2 {
            return Err(Error::Parameter(format!(
                "sequence for '{}' has fewer than 2 fixes",
                self.individual_id
            )));
        }
        if let Some(&s) = self.states.iter().find(|&&s| s >= n_states) {
            return Err(Error::Parameter(format!(
                "sequence for '{}' contains state index {s} outside the alphabet",
                self.individual_id
            )));
        }
        Ok(())
    }

    pub fn n_transitions(&self) -> usize {
        self.states.len() - 1
    }
}

/// Declared block structure of the covariate vector: (N-1) sum-to-zero
/// individual columns, H one-hot habitat columns, then quantitative columns.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DesignLayout {
    pub n_individuals: usize,
    pub habitat_names: Vec<String>,
    pub quantitative_names: Vec<String>,
}

impl DesignLayout {
    pub fn new(
        n_individuals: usize,
        habitat_names: Vec<String>,
        quantitative_names: Vec<String>,
    ) -> Result<Self> {
        if n_individuals == 0 {
            return Err(Error::Parameter("need at least one individual".into()));
        }
        if habitat_names.is_empty() && quantitative_names.is_empty() && n_individuals == 1 {
            return Err(Error::Parameter("design has zero columns".into()));
        }
        Ok(Self {
            n_individuals,
            habitat_names,
            quantitative_names,
        })
    }

    pub fn n_habitats(&self) -> usize {
        self.habitat_names.len()
    }

    pub fn n_quantitative(&self) -> usize {
        self.quantitative_names.len()
    }

    /// Total design width B = (N-1) + H + Q.
    pub fn width(&self) -> usize {
        self.n_individuals - 1 + self.n_habitats() + self.n_quantitative()
    }

    /// Column range of the individual block.
    pub fn individual_cols(&self) -> std::ops::Range<usize> {
        0..self.n_individuals - 1
    }

    /// Column range of the habitat block.
    pub fn habitat_cols(&self) -> std::ops::Range<usize> {
        let start = self.n_individuals - 1;
        start..start + self.n_habitats()
    }

    /// Column range of the quantitative block.
    pub fn quantitative_cols(&self) -> std::ops::Range<usize> {
        let start = self.n_individuals - 1 + self.n_habitats();
        start..self.width()
    }

    /// Assemble one design row. Individual n < N-1 gets indicator column n;
    /// the last individual gets -1 in every individual column, which encodes
    /// the sum-to-zero constraint by construction.
    pub fn encode_row(&self, individual: usize, habitat: usize, quantitative: &[f64]) -> Result<DVector<f64>> {
        if individual >= self.n_individuals {
            return Err(Error::Dimension(format!(
                "individual index {individual} out of range ({})",
                self.n_individuals
            )));
        }
        if habitat >= self.n_habitats() {
            return Err(Error::Dimension(format!(
                "habitat index {habitat} out of range ({})",
                self.n_habitats()
            )));
        }
        if quantitative.len() != self.n_quantitative() {
            return Err(Error::Dimension(format!(
                "expected {} quantitative values, got {}",
                self.n_quantitative(),
                quantitative.len()
            )));
        }
        let mut x = DVector::zeros(self.width());
        if individual == self.n_individuals - 1 {
            for c in self.individual_cols() {
                x[c] = -1.0;
            }
        } else {
            x[individual] = 1.0;
        }
        x[self.habitat_cols().start + habitat] = 1.0;
        let q0 = self.quantitative_cols().start;
        for (k, &v) in quantitative.iter().enumerate() {
            x[q0 + k] = v;
        }
        Ok(x)
    }

    /// Names for every design column, in layout order.
    pub fn column_names(&self) -> Vec<String> {
        let mut names = Vec::with_capacity(self.width());
        for n in 0..self.n_individuals - 1 {
            names.push(format!("individual_{}", n + 1));
        }
        names.extend(self.habitat_names.iter().cloned());
        names.extend(self.quantitative_names.iter().cloned());
        names
    }
}

/// One covariate vector aligned to a fix.
#[derive(Debug, Clone, PartialEq)]
pub struct DesignRow {
    pub individual: usize,
    pub t: i64,
    pub x: DVector<f64>,
}

/// One MCMC state: every β_{ij} vector plus the habitat common means μ_{ij}.
///
/// `beta[i][slot]` is the width-B coefficient vector for transitions from
/// state `i` into the non-reference destination at `slot` (see
/// [`StateAlphabet::state_of_slot`]); coefficients for the reference
/// destination are identically zero and not stored.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoefficientState {
    pub beta: Vec<Vec<DVector<f64>>>,
    pub mu: Vec<Vec<f64>>,
}

impl CoefficientState {
    pub fn zeros(n_states: usize, width: usize) -> Self {
        let beta = (0..n_states)
            .map(|_| (0..n_states - 1).map(|_| DVector::zeros(width)).collect())
            .collect();
        let mu = vec![vec![0.0; n_states - 1]; n_states];
        Self { beta, mu }
    }

    pub fn n_states(&self) -> usize {
        self.beta.len()
    }

    pub fn width(&self) -> usize {
        self.beta[0][0].len()
    }
}

/// Linear predictors ψ_{i·} for one design row: ψ_{ik} = x'β_{ik} for the
/// non-reference destinations, ψ = 0 for the reference.
pub fn linear_predictors(
    x: DVectorView<f64>,
    coeffs: &CoefficientState,
    from: usize,
    alphabet: &StateAlphabet,
) -> Result<DVector<f64>> {
    let j = alphabet.n_states();
    if from >= j {
        return Err(Error::Dimension(format!("from-state {from} out of range")));
    }
    let mut psi = DVector::zeros(j);
    for slot in 0..j - 1 {
        let beta = &coeffs.beta[from][slot];
        if beta.len() != x.len() {
            return Err(Error::Dimension(format!(
                "design width {} does not match coefficient width {}",
                x.len(),
                beta.len()
            )));
        }
        psi[alphabet.state_of_slot(slot)] = x.dot(beta);
    }
    Ok(psi)
}

/// Softmax of ψ with max-subtraction. The reference entry of ψ must be zero;
/// entries are positive and sum to one.
pub fn transition_row(psi: &DVector<f64>) -> Result<DVector<f64>> {
    if psi.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numeric("nonfinite linear predictor".into()));
    }
    let max = psi.max();
    let mut p: DVector<f64> = psi.map(|v| (v - max).exp());
    let total = p.sum();
    p /= total;
    Ok(p)
}

/// Offset C = log Σ_{k ≠ j} exp(ψ_k), computed by shifted log-sum-exp.
///
/// With η = ψ_j - C, logistic(η) equals the softmax probability of j.
pub fn offset_c(psi: &DVector<f64>, target: usize) -> Result<f64> {
    if psi.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numeric("nonfinite linear predictor".into()));
    }
    if target >= psi.len() {
        return Err(Error::Dimension(format!("target {target} out of range")));
    }
    let max = psi
        .iter()
        .enumerate()
        .filter(|&(k, _)| k != target)
        .map(|(_, &v)| v)
        .fold(f64::NEG_INFINITY, f64::max);
    let sum: f64 = psi
        .iter()
        .enumerate()
        .filter(|&(k, _)| k != target)
        .map(|(_, &v)| (v - max).exp())
        .sum();
    Ok(max + sum.ln())
}

/// Standard logistic function.
pub fn logistic(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// Per-individual and pooled transition count matrices.
#[derive(Debug, Clone, PartialEq)]
pub struct TransitionCounts {
    pub per_individual: Vec<(String, Vec<Vec<u64>>)>,
    pub pooled: Vec<Vec<u64>>,
}

/// Tally (t-1, t) state pairs for each sequence and pooled over all of them.
/// Sequences from the same individual id are merged into one per-individual
/// matrix.
pub fn transition_counts(seqs: &[BehaviorSequence], n_states: usize) -> Result<TransitionCounts> {
    let mut per: Vec<(String, Vec<Vec<u64>>)> = Vec::new();
    let mut pooled = vec![vec![0u64; n_states]; n_states];
    for seq in seqs {
        seq.validate(n_states)?;
        let entry = match per.iter_mut().find(|(id, _)| *id == seq.individual_id) {
            Some((_, m)) => m,
            None => {
                per.push((seq.individual_id.clone(), vec![vec![0; n_states]; n_states]));
                &mut per.last_mut().unwrap().1
            }
        };
        for w in seq.states.windows(2) {
            entry[w[0]][w[1]] += 1;
            pooled[w[0]][w[1]] += 1;
        }
    }
    Ok(TransitionCounts {
        per_individual: per,
        pooled,
    })
}
