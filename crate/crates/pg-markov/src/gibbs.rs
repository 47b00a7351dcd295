//! Polya-Gamma augmented Gibbs sampler over [`CoefficientState`].
//!
//! The multinomial likelihood is collapsed to binary logistic factors per
//! destination: for a transition row with linear predictors ψ, the factor for
//! destination j depends on η = ψ_j - C where C = log Σ_{k≠j} exp(ψ_k).
//! Augmenting each factor with ω ~ PG(1, η) makes the full conditional of
//! β_{ij} Gaussian with precision X'ΩX + Σ0⁻¹ and mean
//! P⁻¹(X'(κ + ΩC) + Σ0⁻¹ m0), κ = y - 1/2.
//!
//! One iteration sweeps from-states i = 1..J; within i the destinations are
//! updated sequentially (C couples them through the other current β_{ik}),
//! then every habitat common mean μ_{ij} is refreshed from its flat-prior
//! conjugate conditional. From-state blocks touch disjoint parameters and
//! disjoint likelihood factors, so they run in parallel on deterministically
//! derived substreams; output is bit-identical for any thread count.

use crate::imputation::{select_dataset, ImputationSet};
use crate::model::{offset_c, CoefficientState, DesignLayout, StateAlphabet};
use crate::pg::draw_pg1;
use crate::{Error, Result};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::sync::Arc;

/// Normal prior with fixed variance shared across coefficient blocks. The
/// prior mean is zero except for habitat entries, which are centered at the
/// common mean μ_{ij}; μ_{ij} itself carries a flat prior.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PriorSpec {
    pub variance: f64,
}

impl Default for PriorSpec {
    fn default() -> Self {
        Self { variance: 100.0 }
    }
}

impl PriorSpec {
    pub fn validate(&self) -> Result<()> {
        if self.variance.is_nan() || self.variance <= 0.0 {
            return Err(Error::Parameter(format!(
                "prior variance must be positive, got {}",
                self.variance
            )));
        }
        Ok(())
    }
}

/// Chain length, burn-in, thinning and seeding.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SamplerConfig {
    pub iterations: usize,
    pub burn_in: usize,
    pub thin: usize,
    pub seed: u64,
    pub n_chains: usize,
    /// Standard deviation for random initial values; 0 starts every
    /// coefficient at zero.
    pub init_sd: f64,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        Self {
            iterations: 15_000,
            burn_in: 5_000,
            thin: 1,
            seed: 0,
            n_chains: 1,
            init_sd: 0.0,
        }
    }
}

impl SamplerConfig {
    pub fn validate(&self) -> Result<()> {
        if self.burn_in > self.iterations {
            return Err(Error::Config(format!(
                "burn-in {} exceeds total iterations {}",
                self.burn_in, self.iterations
            )));
        }
        if self.thin < 1 {
            return Err(Error::Config("thin must be >= 1".into()));
        }
        if self.n_chains < 1 {
            return Err(Error::Config("need at least one chain".into()));
        }
        Ok(())
    }
}

/// One maximal run of regularly spaced fixes for one individual; global row
/// indices into the design matrix, in time order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub individual_id: String,
    pub individual: usize,
    pub rows: Vec<usize>,
}

/// Everything the sampler needs besides the labels: the design matrix over
/// all fixes and the segment structure that defines which consecutive fix
/// pairs are transitions.
#[derive(Debug, Clone, PartialEq)]
pub struct FitData {
    pub alphabet: StateAlphabet,
    pub layout: DesignLayout,
    /// n_fixes x B design matrix, row r aligned to fix r.
    pub x: DMatrix<f64>,
    /// Timestamp per fix, seconds.
    pub times: Vec<i64>,
    pub segments: Vec<Segment>,
}

impl FitData {
    pub fn validate(&self) -> Result<()> {
        if self.x.ncols() != self.layout.width() {
            return Err(Error::Dimension(format!(
                "design matrix width {} does not match layout width {}",
                self.x.ncols(),
                self.layout.width()
            )));
        }
        if self.times.len() != self.x.nrows() {
            return Err(Error::Dimension("times not aligned to design rows".into()));
        }
        if self.segments.is_empty() {
            return Err(Error::Config("no data segments".into()));
        }
        for seg in &self.segments {
            if seg.rows.len() < 2 {
                return Err(Error::Config(format!(
                    "segment for '{}' has fewer than 2 fixes",
                    seg.individual_id
                )));
            }
            if seg.rows.iter().any(|&r| r >= self.x.nrows()) {
                return Err(Error::Dimension(format!(
                    "segment for '{}' references a row outside the design matrix",
                    seg.individual_id
                )));
            }
        }
        Ok(())
    }

    pub fn n_transitions(&self) -> usize {
        self.segments.iter().map(|s| s.rows.len() - 1).sum()
    }
}

/// All transitions out of one from-state: design row indices and the observed
/// destination per row. Each row's destination indicators are one-hot by
/// construction.
#[derive(Debug, Clone, PartialEq)]
pub struct FromStateBlock {
    pub from_state: usize,
    /// Indices into the global design matrix (the covariate row at the
    /// destination time of each transition).
    pub rows: Vec<usize>,
    /// Destination state per row.
    pub dests: Vec<usize>,
}

/// Group the transitions of a label assignment into per-from-state blocks.
pub fn build_blocks(data: &FitData, labels: &[usize]) -> Result<Vec<FromStateBlock>> {
    let j = data.alphabet.n_states();
    if labels.len() != data.x.nrows() {
        return Err(Error::Dimension(format!(
            "labels length {} does not match {} fixes",
            labels.len(),
            data.x.nrows()
        )));
    }
    if let Some(&bad) = labels.iter().find(|&&s| s >= j) {
        return Err(Error::Parameter(format!("label {bad} outside the alphabet")));
    }
    let mut blocks: Vec<FromStateBlock> = (0..j)
        .map(|i| FromStateBlock {
            from_state: i,
            rows: Vec::new(),
            dests: Vec::new(),
        })
        .collect();
    for seg in &data.segments {
        for w in seg.rows.windows(2) {
            let from = labels[w[0]];
            blocks[from].rows.push(w[1]);
            blocks[from].dests.push(labels[w[1]]);
        }
    }
    Ok(blocks)
}

/// Prior mean vector for β_{ij}: zero everywhere except the habitat block,
/// which is centered at μ_{ij}.
pub fn prior_mean(layout: &DesignLayout, mu_ij: f64) -> DVector<f64> {
    let mut m0 = DVector::zeros(layout.width());
    for c in layout.habitat_cols() {
        m0[c] = mu_ij;
    }
    m0
}

/// Precision and mean of the Gaussian full conditional of β_{ij} given fixed
/// augmentation variables. Exposed separately so the Gaussian shape can be
/// checked with ω stubbed.
pub fn beta_conditional(
    x: &DMatrix<f64>,
    rows: &[usize],
    kappa: &[f64],
    omega: &[f64],
    c_offsets: &[f64],
    m0: &DVector<f64>,
    sigma2: f64,
) -> Result<(DMatrix<f64>, DVector<f64>)> {
    let b = x.ncols();
    if m0.len() != b {
        return Err(Error::Dimension("prior mean width mismatch".into()));
    }
    if rows.len() != kappa.len() || rows.len() != omega.len() || rows.len() != c_offsets.len() {
        return Err(Error::Dimension("augmentation vectors not aligned to rows".into()));
    }
    let mut precision = DMatrix::zeros(b, b);
    let mut linear = m0 / sigma2;
    for a in 0..b {
        precision[(a, a)] = 1.0 / sigma2;
    }
    for (k, &r) in rows.iter().enumerate() {
        let xr = x.row(r);
        let w = omega[k];
        let lin_w = kappa[k] + w * c_offsets[k];
        for a in 0..b {
            let xa = xr[a];
            linear[a] += lin_w * xa;
            let wxa = w * xa;
            for c in a..b {
                precision[(a, c)] += wxa * xr[c];
            }
        }
    }
    for a in 0..b {
        for c in 0..a {
            precision[(a, c)] = precision[(c, a)];
        }
    }
    Ok((precision, linear))
}

fn draw_gaussian_from_canonical<R: Rng + ?Sized>(
    precision: DMatrix<f64>,
    linear: &DVector<f64>,
    rng: &mut R,
) -> Result<DVector<f64>> {
    let chol = precision
        .cholesky()
        .ok_or_else(|| Error::Numeric("conditional precision not positive definite".into()))?;
    let mean = chol.solve(linear);
    let z = DVector::from_fn(mean.len(), |_, _| rng.sample::<f64, _>(rand_distr::StandardNormal));
    // solve L' u = z so that u has covariance P^{-1}
    let u = chol
        .l()
        .transpose()
        .solve_upper_triangular(&z)
        .ok_or_else(|| Error::Numeric("triangular solve failed".into()))?;
    Ok(mean + u)
}

/// Draw β_{ij} from its exact full conditional, refreshing ψ, C and the PG
/// augmentation variables for every row of the block. With no rows this is a
/// draw from the prior.
#[allow(clippy::too_many_arguments)]
pub fn update_beta<R: Rng + ?Sized>(
    x: &DMatrix<f64>,
    block: &FromStateBlock,
    beta_from: &mut [DVector<f64>],
    mu_from: &[f64],
    slot: usize,
    alphabet: &StateAlphabet,
    layout: &DesignLayout,
    priors: &PriorSpec,
    rng: &mut R,
) -> Result<()> {
    let target = alphabet.state_of_slot(slot);
    let n_slots = alphabet.n_states() - 1;
    let mu_ij = if layout.n_habitats() > 0 { mu_from[slot] } else { 0.0 };
    let m0 = prior_mean(layout, mu_ij);

    let n = block.rows.len();
    let mut kappa = Vec::with_capacity(n);
    let mut omega = Vec::with_capacity(n);
    let mut c_off = Vec::with_capacity(n);
    let mut psi = DVector::zeros(alphabet.n_states());
    let width = x.ncols();
    for (k, &r) in block.rows.iter().enumerate() {
        let xr = x.row(r);
        for s in 0..n_slots {
            let beta = &beta_from[s];
            let mut acc = 0.0;
            for c in 0..width {
                acc += xr[c] * beta[c];
            }
            psi[alphabet.state_of_slot(s)] = acc;
        }
        psi[alphabet.reference()] = 0.0;
        let c = offset_c(&psi, target)?;
        let eta = psi[target] - c;
        let y = if block.dests[k] == target { 1.0 } else { 0.0 };
        kappa.push(y - 0.5);
        omega.push(draw_pg1(eta, rng));
        c_off.push(c);
    }
    let (precision, linear) = beta_conditional(x, &block.rows, &kappa, &omega, &c_off, &m0, priors.variance)?;
    beta_from[slot] = draw_gaussian_from_canonical(precision, &linear, rng)?;
    Ok(())
}

/// Draw the habitat common mean from its flat-prior conjugate conditional,
/// N(mean(ζ), σ²/H).
pub fn update_mu<R: Rng + ?Sized>(zeta: &[f64], sigma2: f64, rng: &mut R) -> f64 {
    let h = zeta.len() as f64;
    let mean = zeta.iter().sum::<f64>() / h;
    mean + rng.sample::<f64, _>(rand_distr::StandardNormal) * (sigma2 / h).sqrt()
}

/// Stored post-burn-in, thinned draws plus the metadata needed to interpret
/// them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PosteriorChain {
    pub alphabet: StateAlphabet,
    pub layout: DesignLayout,
    pub config: SamplerConfig,
    pub draws: Vec<CoefficientState>,
}

impl PosteriorChain {
    pub fn n_draws(&self) -> usize {
        self.draws.len()
    }

    /// Draws of a single scalar coefficient.
    pub fn coefficient_draws(&self, from: usize, slot: usize, col: usize) -> Vec<f64> {
        self.draws.iter().map(|s| s.beta[from][slot][col]).collect()
    }

    pub fn mu_draws(&self, from: usize, slot: usize) -> Vec<f64> {
        self.draws.iter().map(|s| s.mu[from][slot]).collect()
    }
}

/// Run one chain, mixing over the imputation datasets.
///
/// Per iteration: select one of the M datasets uniformly and rebuild the
/// from-state blocks for it (cached per dataset), sweep every from-state's
/// destination updates on independent derived substreams, then refresh all
/// μ_{ij}. Fixed-label data is the M = 1 case ([`ImputationSet::fixed`]).
pub fn run_chain(
    data: &FitData,
    imputations: &ImputationSet,
    priors: &PriorSpec,
    config: &SamplerConfig,
) -> Result<PosteriorChain> {
    data.validate()?;
    priors.validate()?;
    config.validate()?;
    if imputations.n_fixes() != data.x.nrows() {
        return Err(Error::Dimension(format!(
            "imputation datasets cover {} fixes, design has {}",
            imputations.n_fixes(),
            data.x.nrows()
        )));
    }
    let j = data.alphabet.n_states();
    let n_slots = j - 1;
    let width = data.layout.width();
    let h_cols: Vec<usize> = data.layout.habitat_cols().collect();

    let mut master = ChaCha12Rng::seed_from_u64(config.seed);
    let mut state = CoefficientState::zeros(j, width);
    if config.init_sd > 0.0 {
        for i in 0..j {
            for s in 0..n_slots {
                for c in 0..width {
                    state.beta[i][s][c] =
                        master.sample::<f64, _>(rand_distr::StandardNormal) * config.init_sd;
                }
                state.mu[i][s] = master.sample::<f64, _>(rand_distr::StandardNormal) * config.init_sd;
            }
        }
    }

    let mut block_cache: Vec<Option<Arc<Vec<FromStateBlock>>>> = vec![None; imputations.m()];
    let mut draws = Vec::new();
    let keep = |iter: usize| iter >= config.burn_in && (iter - config.burn_in).is_multiple_of(config.thin);

    for iter in 0..config.iterations {
        let m = select_dataset(imputations, &mut master);
        if block_cache[m].is_none() {
            block_cache[m] = Some(Arc::new(build_blocks(data, &imputations.datasets[m])?));
        }
        let blocks = Arc::clone(block_cache[m].as_ref().unwrap());

        // derive one substream seed per from-state before the parallel
        // section; this keeps the chain bit-identical for any thread count
        let child_seeds: Vec<u64> = (0..j).map(|_| master.next_u64()).collect();
        let results: Vec<Result<Vec<DVector<f64>>>> = state
            .beta
            .par_iter()
            .zip(state.mu.par_iter())
            .enumerate()
            .map(|(i, (beta_i, mu_i))| {
                let mut rng = ChaCha12Rng::seed_from_u64(child_seeds[i]);
                let mut beta_i = beta_i.clone();
                for slot in 0..n_slots {
                    update_beta(
                        &data.x,
                        &blocks[i],
                        &mut beta_i,
                        mu_i,
                        slot,
                        &data.alphabet,
                        &data.layout,
                        priors,
                        &mut rng,
                    )?;
                }
                Ok(beta_i)
            })
            .collect();
        for (i, r) in results.into_iter().enumerate() {
            state.beta[i] = r?;
        }

        if !h_cols.is_empty() {
            for i in 0..j {
                for slot in 0..n_slots {
                    let zeta: Vec<f64> = h_cols.iter().map(|&c| state.beta[i][slot][c]).collect();
                    state.mu[i][slot] = update_mu(&zeta, priors.variance, &mut master);
                }
            }
        }

        if keep(iter) {
            draws.push(state.clone());
        }
    }

    Ok(PosteriorChain {
        alphabet: data.alphabet.clone(),
        layout: data.layout.clone(),
        config: *config,
        draws,
    })
}

/// Run `config.n_chains` chains with per-chain derived seeds.
pub fn run_chains(
    data: &FitData,
    imputations: &ImputationSet,
    priors: &PriorSpec,
    config: &SamplerConfig,
) -> Result<Vec<PosteriorChain>> {
    (0..config.n_chains)
        .map(|c| {
            let mut cfg = *config;
            cfg.seed = chain_seed(config.seed, c as u64);
            run_chain(data, imputations, priors, &cfg)
        })
        .collect()
}

/// Seed for chain `c` derived from the run seed (splitmix64 step).
pub fn chain_seed(seed: u64, chain: u64) -> u64 {
    if chain == 0 {
        return seed;
    }
    let mut z = seed.wrapping_add(chain.wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Split-chain potential scale reduction over one scalar parameter.
pub fn potential_scale_reduction(chains: &[Vec<f64>]) -> f64 {
    let halves: Vec<&[f64]> = chains
        .iter()
        .flat_map(|c| {
            let mid = c.len() / 2;
            [&c[..mid], &c[mid..]]
        })
        .filter(|h| h.len() > 1)
        .collect();
    let m = halves.len() as f64;
    if m < 2.0 {
        return f64::NAN;
    }
    let n = halves[0].len() as f64;
    let means: Vec<f64> = halves.iter().map(|h| h.iter().sum::<f64>() / h.len() as f64).collect();
    let grand = means.iter().sum::<f64>() / m;
    let b = n / (m - 1.0) * means.iter().map(|mu| (mu - grand).powi(2)).sum::<f64>();
    let w = halves
        .iter()
        .zip(&means)
        .map(|(h, mu)| h.iter().map(|v| (v - mu).powi(2)).sum::<f64>() / (h.len() as f64 - 1.0))
        .sum::<f64>()
        / m;
    (((n - 1.0) / n * w + b / n) / w).sqrt()
}
