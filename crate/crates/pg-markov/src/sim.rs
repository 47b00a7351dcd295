//! Synthetic scenarios for validating the sampler by parameter recovery.
//!
//! Covariates are generated to resemble the ingested data: a sticky
//! categorical habitat path, standardized Gaussian noise columns, and an
//! optional diurnal cos/sin pair of the time of day. Sequences are forward
//! simulations of the Markov chain under a known coefficient truth, so fits
//! on the output can be checked for credible-interval coverage.

use crate::gibbs::{chain_seed, FitData, Segment};
use crate::model::{linear_predictors, transition_row, CoefficientState, DesignLayout, StateAlphabet};
use crate::{Error, Result};
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};

pub const SECONDS_PER_DAY: f64 = 86_400.0;

/// Per-step probability that the simulated habitat path stays put.
const HABITAT_STICKINESS: f64 = 0.95;

/// Declarative description of a synthetic study.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioSpec {
    pub n_individuals: usize,
    pub state_labels: Vec<String>,
    /// Reference category label; defaults to the last state.
    pub reference: Option<String>,
    pub habitat_names: Vec<String>,
    /// Number of standardized noise covariates.
    pub n_noise_covariates: usize,
    /// Add the cos/sin time-of-day pair.
    pub diurnal: bool,
    pub t_per_individual: usize,
    pub step_seconds: i64,
    /// Truth coefficients are drawn uniformly from this range unless given
    /// explicitly.
    pub coefficient_range: (f64, f64),
    pub truth: Option<CoefficientState>,
    pub seed: u64,
}

impl Default for ScenarioSpec {
    fn default() -> Self {
        Self {
            n_individuals: 2,
            state_labels: vec!["feeding".into(), "stationary".into(), "walking".into()],
            reference: None,
            habitat_names: vec!["corn".into(), "open_water".into()],
            n_noise_covariates: 1,
            diurnal: true,
            t_per_individual: 4_000,
            step_seconds: 360,
            coefficient_range: (-1.0, 1.0),
            truth: None,
            seed: 0,
        }
    }
}

/// A materialized scenario: layout, alphabet and the true coefficients.
#[derive(Debug, Clone, PartialEq)]
pub struct SimScenario {
    pub spec: ScenarioSpec,
    pub alphabet: StateAlphabet,
    pub layout: DesignLayout,
    pub truth: CoefficientState,
}

/// Simulated study data ready for the fit pipeline.
#[derive(Debug, Clone, PartialEq)]
pub struct SimData {
    pub data: FitData,
    /// True label per fix, aligned to the design rows.
    pub labels: Vec<usize>,
}

/// Diurnal covariate pair at `seconds` past local midnight.
pub fn time_of_day(seconds: f64) -> (f64, f64) {
    let angle = 2.0 * std::f64::consts::PI * seconds / SECONDS_PER_DAY;
    (angle.cos(), angle.sin())
}

/// Effective individual effect of individual `n` implied by the sum-to-zero
/// encoding: the matching column coefficient for n < N-1, minus the sum of
/// all columns for the last individual.
pub fn individual_effect(beta: &nalgebra::DVector<f64>, layout: &DesignLayout, n: usize) -> f64 {
    let cols = layout.individual_cols();
    if n + 1 < layout.n_individuals {
        beta[cols.start + n]
    } else {
        -cols.map(|c| beta[c]).sum::<f64>()
    }
}

/// Materialize a scenario: build the layout and draw (or adopt) the truth.
pub fn make_scenario(spec: ScenarioSpec) -> Result<SimScenario> {
    let alphabet = StateAlphabet::with_reference_label(spec.state_labels.clone(), spec.reference.as_deref())?;
    let mut quant_names: Vec<String> =
        (0..spec.n_noise_covariates).map(|k| format!("noise_{}", k + 1)).collect();
    if spec.diurnal {
        quant_names.push("cos_time".into());
        quant_names.push("sin_time".into());
    }
    let layout = DesignLayout::new(spec.n_individuals, spec.habitat_names.clone(), quant_names)?;
    if spec.t_per_individual < 2 {
        return Err(Error::Parameter("need at least 2 fixes per individual".into()));
    }
    let j = alphabet.n_states();
    let truth = match &spec.truth {
        Some(t) => {
            if t.n_states() != j || t.width() != layout.width() {
                return Err(Error::Dimension("explicit truth does not match the scenario layout".into()));
            }
            t.clone()
        }
        None => {
            let (lo, hi) = spec.coefficient_range;
            if lo.is_nan() || hi.is_nan() || lo >= hi {
                return Err(Error::Parameter("empty coefficient range".into()));
            }
            let mut rng = ChaCha12Rng::seed_from_u64(chain_seed(spec.seed, 0xC0EF));
            let mut t = CoefficientState::zeros(j, layout.width());
            let h_cols: Vec<usize> = layout.habitat_cols().collect();
            for i in 0..j {
                for slot in 0..j - 1 {
                    for c in 0..layout.width() {
                        t.beta[i][slot][c] = rng.gen_range(lo..hi);
                    }
                    t.mu[i][slot] =
                        h_cols.iter().map(|&c| t.beta[i][slot][c]).sum::<f64>() / h_cols.len().max(1) as f64;
                }
            }
            t
        }
    };
    Ok(SimScenario {
        spec,
        alphabet,
        layout,
        truth,
    })
}

/// Forward-simulate covariate paths and state sequences for every
/// individual. Deterministic in the scenario seed.
pub fn simulate_sequences(scenario: &SimScenario) -> Result<SimData> {
    let spec = &scenario.spec;
    let j = scenario.alphabet.n_states();
    let t_len = spec.t_per_individual;
    let n_fixes = spec.n_individuals * t_len;
    let width = scenario.layout.width();
    let mut x = DMatrix::zeros(n_fixes, width);
    let mut times = Vec::with_capacity(n_fixes);
    let mut labels = Vec::with_capacity(n_fixes);
    let mut segments = Vec::with_capacity(spec.n_individuals);

    for n in 0..spec.n_individuals {
        let mut rng = ChaCha12Rng::seed_from_u64(chain_seed(spec.seed, 1 + n as u64));
        let mut habitat = rng.gen_range(0..scenario.layout.n_habitats());
        let mut state = rng.gen_range(0..j);
        let base_row = n * t_len;
        let mut rows = Vec::with_capacity(t_len);
        for t in 0..t_len {
            let ts = t as i64 * spec.step_seconds;
            if t > 0 && rng.gen::<f64>() > HABITAT_STICKINESS && scenario.layout.n_habitats() > 1 {
                let mut next = rng.gen_range(0..scenario.layout.n_habitats() - 1);
                if next >= habitat {
                    next += 1;
                }
                habitat = next;
            }
            let mut quants = Vec::with_capacity(scenario.layout.n_quantitative());
            for _ in 0..spec.n_noise_covariates {
                quants.push(rng.sample::<f64, _>(rand_distr::StandardNormal));
            }
            if spec.diurnal {
                let (c, s) = time_of_day(ts as f64);
                quants.push(c);
                quants.push(s);
            }
            let row = scenario.layout.encode_row(n, habitat, &quants)?;
            let r = base_row + t;
            x.row_mut(r).copy_from(&row.transpose());
            times.push(ts);
            if t > 0 {
                let psi = linear_predictors(x.row(r).transpose().as_view(), &scenario.truth, state, &scenario.alphabet)?;
                let p = transition_row(&psi)?;
                let u: f64 = rng.gen();
                let mut acc = 0.0;
                let mut next = j - 1;
                for (k, &pk) in p.iter().enumerate() {
                    acc += pk;
                    if u < acc {
                        next = k;
                        break;
                    }
                }
                state = next;
            }
            labels.push(state);
            rows.push(r);
        }
        segments.push(Segment {
            individual_id: format!("ind_{}", n + 1),
            individual: n,
            rows,
        });
    }

    let data = FitData {
        alphabet: scenario.alphabet.clone(),
        layout: scenario.layout.clone(),
        x,
        times,
        segments,
    };
    data.validate()?;
    Ok(SimData { data, labels })
}
