//! Posterior summaries: odds ratios, credible intervals, significance calls,
//! pairwise habitat comparisons and posterior-predictive sequences.
//!
//! Odds ratios are computed by exponentiating the coefficients draw by draw;
//! all summaries are taken over the transformed draws, so the reported mean
//! odds ratio is the mean of exp(β), not exp(mean β). Credible intervals are
//! equal-tailed 2.5/97.5 quantile intervals.

use crate::gibbs::PosteriorChain;
use crate::model::{linear_predictors, transition_row, CoefficientState, StateAlphabet};
use crate::{Error, Result};
use nalgebra::DMatrix;
use rand::Rng;
use serde::{Deserialize, Serialize};

/// Direction of a significant covariate effect.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Significance {
    Positive,
    Negative,
}

/// Summary of one (from, to, covariate) coefficient.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub from: String,
    pub to: String,
    pub covariate: String,
    pub beta_mean: f64,
    pub or_mean: f64,
    pub or_lower: f64,
    pub or_upper: f64,
    pub prop_or_gt_one: f64,
    pub significance: Option<Significance>,
}

/// Per-coefficient posterior summary table. Rows for the reference
/// destination are absent because its coefficients are pinned to zero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryTable {
    pub rows: Vec<SummaryRow>,
}

/// H x H matrix of proportions of iterations with ζ_a > ζ_b for one
/// transition. Off-diagonal entries (a, b) and (b, a) sum to one; the
/// diagonal is 0.5 by convention and reported blank.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairwiseMatrix {
    pub from: String,
    pub to: String,
    pub habitat_names: Vec<String>,
    pub proportions: Vec<Vec<f64>>,
}

impl PairwiseMatrix {
    /// Significance call for a pair: proportion > 0.95 or < 0.05.
    pub fn significant(&self, a: usize, b: usize) -> bool {
        let p = self.proportions[a][b];
        a != b && !(0.05..=0.95).contains(&p)
    }
}

/// Quantile of a sample by linear interpolation between order statistics.
pub fn quantile(draws: &[f64], q: f64) -> f64 {
    assert!(!draws.is_empty() && (0.0..=1.0).contains(&q));
    let mut sorted = draws.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    if lo == hi {
        sorted[lo]
    } else {
        sorted[lo] + (pos - lo as f64) * (sorted[hi] - sorted[lo])
    }
}

fn mean(draws: &[f64]) -> f64 {
    draws.iter().sum::<f64>() / draws.len() as f64
}

/// Per-draw exponentiated coefficient for one (from, slot, column).
pub fn odds_ratio_draws(
    chain: &PosteriorChain,
    from: usize,
    slot: usize,
    col: usize,
) -> Result<Vec<f64>> {
    if chain.draws.is_empty() {
        return Err(Error::Parameter("empty posterior chain".into()));
    }
    Ok(chain
        .draws
        .iter()
        .map(|s| s.beta[from][slot][col].exp())
        .collect())
}

/// Every stored coefficient draw exponentiated elementwise.
pub fn odds_ratios(chain: &PosteriorChain) -> Result<Vec<CoefficientState>> {
    if chain.draws.is_empty() {
        return Err(Error::Parameter("empty posterior chain".into()));
    }
    Ok(chain
        .draws
        .iter()
        .map(|s| CoefficientState {
            beta: s
                .beta
                .iter()
                .map(|slots| slots.iter().map(|v| v.map(f64::exp)).collect())
                .collect(),
            mu: s.mu.clone(),
        })
        .collect())
}

/// Significance call on a set of odds-ratio draws: the 95% interval must
/// exclude one, and the proportion of draws above one must exceed 0.95
/// (positive) or fall below 0.05 (negative). Returns the call and the
/// proportion.
pub fn significance(or_draws: &[f64]) -> (Option<Significance>, f64) {
    let lower = quantile(or_draws, 0.025);
    let upper = quantile(or_draws, 0.975);
    let prop = or_draws.iter().filter(|&&v| v > 1.0).count() as f64 / or_draws.len() as f64;
    let excludes_one = lower > 1.0 || upper < 1.0;
    let call = if excludes_one && prop > 0.95 {
        Some(Significance::Positive)
    } else if excludes_one && prop < 0.05 {
        Some(Significance::Negative)
    } else {
        None
    };
    (call, prop)
}

/// Full coefficient summary over every non-reference transition and design
/// column.
pub fn summary_table(chain: &PosteriorChain) -> Result<SummaryTable> {
    if chain.draws.is_empty() {
        return Err(Error::Parameter("empty posterior chain".into()));
    }
    let names = chain.layout.column_names();
    let j = chain.alphabet.n_states();
    let mut rows = Vec::new();
    for from in 0..j {
        for slot in 0..j - 1 {
            let to = chain.alphabet.state_of_slot(slot);
            for (col, name) in names.iter().enumerate() {
                let beta: Vec<f64> = chain.coefficient_draws(from, slot, col);
                let or: Vec<f64> = beta.iter().map(|b| b.exp()).collect();
                let (call, prop) = significance(&or);
                rows.push(SummaryRow {
                    from: chain.alphabet.label(from).to_string(),
                    to: chain.alphabet.label(to).to_string(),
                    covariate: name.clone(),
                    beta_mean: mean(&beta),
                    or_mean: mean(&or),
                    or_lower: quantile(&or, 0.025),
                    or_upper: quantile(&or, 0.975),
                    prop_or_gt_one: prop,
                    significance: call,
                });
            }
        }
    }
    Ok(SummaryTable { rows })
}

/// Pairwise habitat-comparison matrix for one transition: entry (a, b) is the
/// fraction of draws with ζ_a > ζ_b. No multiplicity adjustment is applied;
/// the hierarchical centering pools the habitat coefficients.
pub fn pairwise_habitat(chain: &PosteriorChain, from: usize, slot: usize) -> Result<PairwiseMatrix> {
    let h = chain.layout.n_habitats();
    if h < 2 {
        return Err(Error::Parameter("pairwise comparison needs at least 2 habitats".into()));
    }
    if chain.draws.is_empty() {
        return Err(Error::Parameter("empty posterior chain".into()));
    }
    let h0 = chain.layout.habitat_cols().start;
    let n = chain.draws.len() as f64;
    let mut p = vec![vec![0.5; h]; h];
    // pairwise matrix indexing is clearer than iterator gymnastics here
    #[allow(clippy::needless_range_loop)]
    for a in 0..h {
        for b in a + 1..h {
            let count = chain
                .draws
                .iter()
                .filter(|s| s.beta[from][slot][h0 + a] > s.beta[from][slot][h0 + b])
                .count();
            let frac = count as f64 / n;
            // complementary by construction: entry(a,b) + entry(b,a) = 1
            p[a][b] = frac;
            p[b][a] = 1.0 - frac;
        }
    }
    Ok(PairwiseMatrix {
        from: chain.alphabet.label(from).to_string(),
        to: chain.alphabet.label(chain.alphabet.state_of_slot(slot)).to_string(),
        habitat_names: chain.layout.habitat_names.clone(),
        proportions: p,
    })
}

/// Forward-simulate a state sequence under one coefficient draw.
///
/// `rows` are the design-matrix rows covering the horizon, one per step; the
/// state after step k is drawn from the transition row at `rows[k]`.
pub fn simulate_sequence<R: Rng + ?Sized>(
    state: &CoefficientState,
    alphabet: &StateAlphabet,
    x: &DMatrix<f64>,
    rows: &[usize],
    initial: usize,
    rng: &mut R,
) -> Result<Vec<usize>> {
    if initial >= alphabet.n_states() {
        return Err(Error::Parameter(format!("initial state {initial} out of range")));
    }
    if let Some(&bad) = rows.iter().find(|&&r| r >= x.nrows()) {
        return Err(Error::Parameter(format!(
            "missing covariates for prediction horizon (row {bad})"
        )));
    }
    let mut seq = Vec::with_capacity(rows.len() + 1);
    seq.push(initial);
    let mut current = initial;
    for &r in rows {
        let psi = linear_predictors(x.row(r).transpose().as_view(), state, current, alphabet)?;
        let p = transition_row(&psi)?;
        let u: f64 = rng.gen();
        let mut acc = 0.0;
        let mut next = alphabet.n_states() - 1;
        for (k, &pk) in p.iter().enumerate() {
            acc += pk;
            if u < acc {
                next = k;
                break;
            }
        }
        seq.push(next);
        current = next;
    }
    Ok(seq)
}

/// Discrepancy statistics of one label assignment: pooled per-cell transition
/// frequencies and state occupancy fractions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GofStats {
    pub transition_freq: Vec<Vec<f64>>,
    pub occupancy: Vec<f64>,
}

impl GofStats {
    /// Compute over per-segment label sequences.
    pub fn from_sequences(seqs: &[Vec<usize>], n_states: usize) -> Self {
        let mut counts = vec![vec![0u64; n_states]; n_states];
        let mut occ = vec![0u64; n_states];
        for seq in seqs {
            for w in seq.windows(2) {
                counts[w[0]][w[1]] += 1;
            }
            for &s in seq {
                occ[s] += 1;
            }
        }
        let total_trans: u64 = counts.iter().flatten().sum();
        let total_occ: u64 = occ.iter().sum();
        GofStats {
            transition_freq: counts
                .iter()
                .map(|row| row.iter().map(|&c| c as f64 / total_trans.max(1) as f64).collect())
                .collect(),
            occupancy: occ.iter().map(|&c| c as f64 / total_occ.max(1) as f64).collect(),
        }
    }

    /// Scalar discrepancy used for the calibration band: the fraction of
    /// transitions that stay in the same state.
    pub fn self_transition_fraction(&self) -> f64 {
        (0..self.transition_freq.len()).map(|i| self.transition_freq[i][i]).sum()
    }
}

/// Observed discrepancy statistics next to replicate statistics simulated
/// from posterior draws.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GofReport {
    pub observed: GofStats,
    pub replicates: Vec<GofStats>,
}

impl GofReport {
    /// Whether the observed scalar statistic falls inside the central 95%
    /// band of the replicates.
    pub fn observed_in_band(&self) -> bool {
        let stats: Vec<f64> = self.replicates.iter().map(GofStats::self_transition_fraction).collect();
        let lo = quantile(&stats, 0.025);
        let hi = quantile(&stats, 0.975);
        let obs = self.observed.self_transition_fraction();
        obs >= lo && obs <= hi
    }
}

/// Posterior-predictive goodness of fit: for up to `n_replicates` evenly
/// spaced posterior draws, regenerate every observed segment (same initial
/// state, same covariate rows) and collect discrepancy statistics.
pub fn posterior_predictive<R: Rng + ?Sized>(
    chain: &PosteriorChain,
    data: &crate::gibbs::FitData,
    labels: &[usize],
    n_replicates: usize,
    rng: &mut R,
) -> Result<GofReport> {
    if chain.draws.is_empty() {
        return Err(Error::Parameter("empty posterior chain".into()));
    }
    let n_states = chain.alphabet.n_states();
    let observed_seqs: Vec<Vec<usize>> = data
        .segments
        .iter()
        .map(|seg| seg.rows.iter().map(|&r| labels[r]).collect())
        .collect();
    let observed = GofStats::from_sequences(&observed_seqs, n_states);

    let n_rep = n_replicates.min(chain.draws.len());
    let stride = chain.draws.len() as f64 / n_rep as f64;
    let mut replicates = Vec::with_capacity(n_rep);
    for k in 0..n_rep {
        let draw = &chain.draws[(k as f64 * stride) as usize];
        let mut rep_seqs = Vec::with_capacity(data.segments.len());
        for (seg, obs) in data.segments.iter().zip(&observed_seqs) {
            let horizon: Vec<usize> = seg.rows[1..].to_vec();
            rep_seqs.push(simulate_sequence(draw, &chain.alphabet, &data.x, &horizon, obs[0], rng)?);
        }
        replicates.push(GofStats::from_sequences(&rep_seqs, n_states));
    }
    Ok(GofReport { observed, replicates })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gibbs::SamplerConfig;
    use crate::model::DesignLayout;
    use nalgebra::DVector;
    use rand::SeedableRng;
    use rand_chacha::ChaCha12Rng;

    fn stub_chain(beta_draws: &[f64]) -> PosteriorChain {
        let alphabet = StateAlphabet::new(vec!["feeding".into(), "walking".into()], 1).unwrap();
        let layout = DesignLayout::new(1, vec!["corn".into()], vec![]).unwrap();
        let draws = beta_draws
            .iter()
            .map(|&b| {
                let mut s = CoefficientState::zeros(2, 1);
                s.beta[0][0][0] = b;
                s
            })
            .collect();
        PosteriorChain {
            alphabet,
            layout,
            config: SamplerConfig::default(),
            draws,
        }
    }

    #[test]
    fn degenerate_chain_odds_ratio() {
        // mean coefficient 0.42 corresponds to mean odds ratio 1.52
        let chain = stub_chain(&[0.42; 100]);
        let or = odds_ratio_draws(&chain, 0, 0, 0).unwrap();
        let m = or.iter().sum::<f64>() / or.len() as f64;
        assert!((m - 1.52).abs() < 0.005, "{m}");
    }

    #[test]
    fn zero_coefficients_give_unit_odds() {
        let chain = stub_chain(&[0.0; 10]);
        let or = odds_ratio_draws(&chain, 0, 0, 0).unwrap();
        assert!(or.iter().all(|&v| v == 1.0));
    }

    #[test]
    fn or_mean_is_mean_of_exp_not_exp_of_mean() {
        let chain = stub_chain(&[(2.0f64).ln(), (8.0f64).ln()]);
        let table = summary_table(&chain).unwrap();
        let row = table.rows.iter().find(|r| r.from == "feeding" && r.to == "feeding").unwrap();
        assert!((row.or_mean - 5.0).abs() < 1e-12, "{}", row.or_mean);
        assert!((row.or_mean - 4.0).abs() > 0.5);
    }

    #[test]
    fn empty_chain_is_an_error() {
        let chain = stub_chain(&[]);
        assert!(odds_ratios(&chain).is_err());
        assert!(summary_table(&chain).is_err());
    }

    #[test]
    fn significance_calls() {
        // all draws above one
        let (call, prop) = significance(&vec![1.5; 100]);
        assert_eq!(call, Some(Significance::Positive));
        assert_eq!(prop, 1.0);
        // symmetric about one: not significant
        let draws: Vec<f64> = (0..1000).map(|k| if k % 2 == 0 { 0.8 } else { 1.25 }).collect();
        let (call, prop) = significance(&draws);
        assert_eq!(call, None);
        assert!((prop - 0.5).abs() < 0.01);
    }

    #[test]
    fn lognormal_draw_summary_fixed_point() {
        // stub draws with a known odds-ratio summary:
        // mean OR 1.26, CI inside (1.1, 1.45), proportion above one ~ 1.00
        let mut rng = ChaCha12Rng::seed_from_u64(1);
        let target_mean = (1.26f64).ln() - 0.0018; // offset the Jensen gap of this sd
        let draws: Vec<f64> = (0..20_000)
            .map(|_| (target_mean + 0.05 * rng.sample::<f64, _>(rand_distr::StandardNormal)).exp())
            .collect();
        let m = draws.iter().sum::<f64>() / draws.len() as f64;
        let (call, prop) = significance(&draws);
        assert!((m - 1.26).abs() < 0.01, "{m}");
        assert!(quantile(&draws, 0.025) > 1.1 && quantile(&draws, 0.975) < 1.45);
        assert_eq!(call, Some(Significance::Positive));
        assert!(prop > 0.999);
    }

    fn habitat_chain(zeta_draws: Vec<[f64; 2]>) -> PosteriorChain {
        let alphabet = StateAlphabet::new(vec!["feeding".into(), "walking".into()], 1).unwrap();
        let layout = DesignLayout::new(1, vec!["corn".into(), "open_water".into()], vec![]).unwrap();
        let draws = zeta_draws
            .into_iter()
            .map(|z| {
                let mut s = CoefficientState::zeros(2, 2);
                s.beta[0][0] = DVector::from_vec(vec![z[0], z[1]]);
                s
            })
            .collect();
        PosteriorChain {
            alphabet,
            layout,
            config: SamplerConfig::default(),
            draws,
        }
    }

    #[test]
    fn pairwise_dominant_habitat() {
        let chain = habitat_chain((0..100).map(|_| [1.0, -1.0]).collect());
        let m = pairwise_habitat(&chain, 0, 0).unwrap();
        assert_eq!(m.proportions[0][1], 1.0);
        assert_eq!(m.proportions[1][0], 0.0);
        assert!(m.significant(0, 1));
    }

    #[test]
    fn pairwise_complementarity_and_jitter() {
        let mut rng = ChaCha12Rng::seed_from_u64(2);
        let chain = habitat_chain(
            (0..5000)
                .map(|_| {
                    [
                        rng.sample::<f64, _>(rand_distr::StandardNormal),
                        rng.sample::<f64, _>(rand_distr::StandardNormal),
                    ]
                })
                .collect(),
        );
        let m = pairwise_habitat(&chain, 0, 0).unwrap();
        assert_eq!(m.proportions[0][1] + m.proportions[1][0], 1.0);
        assert!((m.proportions[0][1] - 0.5).abs() < 0.03);
        assert!(!m.significant(0, 1));
    }

    #[test]
    fn absorbing_chain_simulates_constant_sequences() {
        let alphabet = StateAlphabet::new(vec!["a".into(), "b".into()], 1).unwrap();
        let mut state = CoefficientState::zeros(2, 1);
        state.beta[0][0][0] = 50.0; // from a, overwhelmingly stay in a
        let x = DMatrix::from_element(100, 1, 1.0);
        let rows: Vec<usize> = (0..100).collect();
        let mut rng = ChaCha12Rng::seed_from_u64(3);
        let seq = simulate_sequence(&state, &alphabet, &x, &rows, 0, &mut rng).unwrap();
        assert!(seq.iter().all(|&s| s == 0));
    }

    #[test]
    fn known_transition_matrix_recovered_empirically() {
        // no covariates beyond an intercept-like habitat column; fixed P
        let alphabet = StateAlphabet::new(vec!["a".into(), "b".into()], 1).unwrap();
        let mut state = CoefficientState::zeros(2, 1);
        state.beta[0][0][0] = 0.8; // P(a|a) = logistic(0.8)
        state.beta[1][0][0] = -0.4; // P(a|b) = logistic(-0.4)
        let n = 100_000;
        let x = DMatrix::from_element(n, 1, 1.0);
        let rows: Vec<usize> = (0..n).collect();
        let mut rng = ChaCha12Rng::seed_from_u64(4);
        let seq = simulate_sequence(&state, &alphabet, &x, &rows, 0, &mut rng).unwrap();
        let mut counts = [[0u64; 2]; 2];
        for w in seq.windows(2) {
            counts[w[0]][w[1]] += 1;
        }
        for (i, &beta) in [0.8, -0.4].iter().enumerate() {
            let p = crate::model::logistic(beta);
            let total = (counts[i][0] + counts[i][1]) as f64;
            let freq = counts[i][0] as f64 / total;
            let se = (p * (1.0 - p) / total).sqrt();
            assert!((freq - p).abs() < 3.0 * se, "row {i}: {freq} vs {p}");
        }
    }

    #[test]
    fn missing_horizon_covariates_error() {
        let alphabet = StateAlphabet::new(vec!["a".into(), "b".into()], 1).unwrap();
        let state = CoefficientState::zeros(2, 1);
        let x = DMatrix::from_element(5, 1, 1.0);
        let mut rng = ChaCha12Rng::seed_from_u64(5);
        assert!(simulate_sequence(&state, &alphabet, &x, &[3, 4, 5], 0, &mut rng).is_err());
    }

    #[test]
    fn quantiles_are_monotone_and_bounded() {
        let draws: Vec<f64> = (0..101).map(|k| k as f64).collect();
        let mut prev = f64::NEG_INFINITY;
        for q in [0.0, 0.025, 0.5, 0.975, 1.0] {
            let v = quantile(&draws, q);
            assert!(v >= prev);
            assert!((0.0..=100.0).contains(&v));
            prev = v;
        }
        assert_eq!(quantile(&draws, 0.5), 50.0);
    }

    #[test]
    fn gof_stats_from_sequences() {
        let stats = GofStats::from_sequences(&[vec![0, 0, 1, 1, 0]], 2);
        assert!((stats.transition_freq[0][0] - 0.25).abs() < 1e-12);
        assert!((stats.self_transition_fraction() - 0.5).abs() < 1e-12);
        assert!((stats.occupancy[0] - 0.6).abs() < 1e-12);
    }
}
