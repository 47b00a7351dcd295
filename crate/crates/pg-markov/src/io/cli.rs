//! Thin command-line surface over the library pipeline:
//! `simulate | validate | impute | fit | summarize | gof`.
//!
//! Every run writes a `manifest.json` (config hash, effective seed, version,
//! thread count) into the output directory, so any output can be reproduced
//! exactly from the manifest plus the inputs. The default worker-thread
//! count can be set with the `PG_MARKOV_THREADS` environment variable.

use crate::gibbs::{chain_seed, run_chains, FitData, PosteriorChain};
use crate::imputation::{argmax_labels, draw_imputations, ImputationSet};
use crate::io::chain_export::{parameter_names, read_chain_binary, write_chain_binary, write_chain_csv};
use crate::io::config::RunConfig;
use crate::io::formats::{
    load_inputs, read_imputations, write_imputations, write_probabilities, write_simulated, Observations,
};
use crate::sim::{make_scenario, simulate_sequences, ScenarioSpec};
use crate::summary::{pairwise_habitat, posterior_predictive, quantile, summary_table, GofStats};
use crate::{Error, Result};
use clap::{Args, Parser, Subcommand};
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use sha2::{Digest, Sha256};
use std::path::{Path, PathBuf};

/// Classifier accuracy used when `simulate` derives soft probabilities from
/// the true labels.
const SIM_PROB_ACCURACY: f64 = 0.9;

#[derive(Parser)]
#[command(name = "pg-markov", version, about = "Bayesian Markov behavior-transition models with Polya-Gamma Gibbs sampling")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Run configuration (TOML).
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    chains: Option<usize>,
    #[arg(long)]
    iterations: Option<usize>,
    #[arg(long)]
    burn_in: Option<usize>,
    #[arg(long)]
    thin: Option<usize>,
    #[arg(long)]
    m_imputations: Option<usize>,
    #[arg(long)]
    reference_state: Option<String>,
    /// Output directory, overriding the config.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic study (covariates, labels, probabilities, truth).
    Simulate(Common),
    /// Load and validate the configured inputs, writing a report.
    Validate(Common),
    /// Draw the M candidate label datasets from classification probabilities.
    Impute(Common),
    /// Run the Gibbs sampler and export the posterior chain(s).
    Fit(Common),
    /// Summarize an exported chain: coefficient table, pairwise habitat
    /// comparisons, plot-ready interval data.
    Summarize {
        #[command(flatten)]
        common: Common,
        /// Chain export to summarize; defaults to chain_0.bin in the output
        /// directory.
        #[arg(long)]
        chain: Option<PathBuf>,
    },
    /// Posterior-predictive goodness of fit against the observed sequences.
    Gof {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        chain: Option<PathBuf>,
        /// Number of posterior draws used to generate replicates.
        #[arg(long, default_value_t = 200)]
        replicates: usize,
    },
}

/// Entry point for the binary; returns the process exit status.
pub fn run() -> i32 {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    init_thread_pool();
    let result = match cli.command {
        Command::Simulate(c) => with_config(&c, cmd_simulate),
        Command::Validate(c) => with_config(&c, cmd_validate),
        Command::Impute(c) => with_config(&c, cmd_impute),
        Command::Fit(c) => with_config(&c, cmd_fit),
        Command::Summarize { common, chain } => {
            with_config(&common, |cfg, ctx| cmd_summarize(cfg, ctx, chain.as_deref()))
        }
        Command::Gof {
            common,
            chain,
            replicates,
        } => with_config(&common, |cfg, ctx| cmd_gof(cfg, ctx, chain.as_deref(), replicates)),
    };
    match result {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}

fn init_thread_pool() {
    if let Ok(raw) = std::env::var("PG_MARKOV_THREADS") {
        if let Ok(n) = raw.parse::<usize>() {
            let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
        }
    }
}

struct Ctx {
    config_sha256: String,
}

fn with_config<F>(common: &Common, f: F) -> Result<()>
where
    F: FnOnce(RunConfig, &Ctx) -> Result<()>,
{
    let raw = std::fs::read(&common.config)?;
    let mut cfg = RunConfig::from_path(&common.config)?;
    let base = common.config.parent().unwrap_or_else(|| Path::new(".")).to_path_buf();
    resolve_paths(&mut cfg, &base);
    apply_overrides(&mut cfg, common, &base)?;
    cfg.validate()?;
    let ctx = Ctx {
        config_sha256: hex_digest(&raw),
    };
    f(cfg, &ctx)
}

fn hex_digest(bytes: &[u8]) -> String {
    let digest = Sha256::digest(bytes);
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

fn resolve_paths(cfg: &mut RunConfig, base: &Path) {
    let join = |p: &mut PathBuf| {
        if p.is_relative() {
            *p = base.join(&p);
        }
    };
    if let Some(p) = cfg.data.labels.as_mut() {
        join(p);
    }
    if let Some(p) = cfg.data.probabilities.as_mut() {
        join(p);
    }
    join(&mut cfg.data.covariates);
    join(&mut cfg.data.out_dir);
}

fn apply_overrides(cfg: &mut RunConfig, common: &Common, base: &Path) -> Result<()> {
    if let Some(seed) = common.seed {
        cfg.sampler.seed = seed;
    }
    if let Some(chains) = common.chains {
        cfg.sampler.n_chains = chains;
    }
    if let Some(iters) = common.iterations {
        cfg.sampler.iterations = iters;
    }
    if let Some(burn) = common.burn_in {
        cfg.sampler.burn_in = burn;
    }
    if let Some(thin) = common.thin {
        cfg.sampler.thin = thin;
    }
    if let Some(m) = common.m_imputations {
        cfg.imputation.m = m;
    }
    if let Some(reference) = &common.reference_state {
        if !cfg.model.states.contains(reference) {
            return Err(Error::Config(format!("--reference-state '{reference}' is not a model state")));
        }
        cfg.model.reference = Some(reference.clone());
    }
    if let Some(out) = &common.out {
        cfg.data.out_dir = if out.is_relative() { base.join(out) } else { out.clone() };
    }
    Ok(())
}

fn write_manifest(cfg: &RunConfig, ctx: &Ctx, command: &str) -> Result<()> {
    std::fs::create_dir_all(&cfg.data.out_dir)?;
    let manifest = serde_json::json!({
        "command": command,
        "version": env!("CARGO_PKG_VERSION"),
        "seed": cfg.sampler.seed,
        "m_imputations": cfg.imputation.m,
        "config_sha256": ctx.config_sha256,
        "threads": rayon::current_num_threads(),
        "config": cfg,
    });
    std::fs::write(
        cfg.data.out_dir.join("manifest.json"),
        serde_json::to_string_pretty(&manifest)?,
    )?;
    Ok(())
}

fn cmd_simulate(cfg: RunConfig, ctx: &Ctx) -> Result<()> {
    let sim_cfg = cfg.simulate.clone().unwrap_or_default();
    let spec = ScenarioSpec {
        n_individuals: sim_cfg.n_individuals,
        state_labels: cfg.model.states.clone(),
        reference: cfg.model.reference.clone(),
        habitat_names: cfg.model.habitats.clone(),
        n_noise_covariates: sim_cfg.n_noise_covariates,
        diurnal: sim_cfg.diurnal,
        t_per_individual: sim_cfg.t_per_individual,
        step_seconds: cfg.model.step_seconds,
        coefficient_range: sim_cfg.coefficient_range,
        truth: None,
        seed: cfg.sampler.seed,
    };
    let scenario = make_scenario(spec)?;
    let sim = simulate_sequences(&scenario)?;
    let dir = &cfg.data.out_dir;
    write_simulated(dir, &scenario, &sim)?;
    write_probabilities(dir, &scenario, &sim, SIM_PROB_ACCURACY)?;
    std::fs::write(dir.join("truth.json"), serde_json::to_string_pretty(&scenario.truth)?)?;
    write_manifest(&cfg, ctx, "simulate")?;
    println!(
        "simulated {} individuals x {} fixes into {}",
        scenario.spec.n_individuals,
        scenario.spec.t_per_individual,
        dir.display()
    );
    Ok(())
}

fn cmd_validate(cfg: RunConfig, ctx: &Ctx) -> Result<()> {
    let loaded = load_inputs(&cfg)?;
    print!("{}", loaded.report);
    std::fs::create_dir_all(&cfg.data.out_dir)?;
    std::fs::write(
        cfg.data.out_dir.join("validation_report.json"),
        serde_json::to_string_pretty(&loaded.report)?,
    )?;
    write_manifest(&cfg, ctx, "validate")?;
    Ok(())
}

fn imputation_seed(seed: u64) -> u64 {
    chain_seed(seed, 0x1A9B)
}

fn cmd_impute(cfg: RunConfig, ctx: &Ctx) -> Result<()> {
    let loaded = load_inputs(&cfg)?;
    let Observations::Probs(probs) = &loaded.observations else {
        return Err(Error::Config("impute requires data.probabilities".into()));
    };
    let mut rng = ChaCha12Rng::seed_from_u64(imputation_seed(cfg.sampler.seed));
    let set = draw_imputations(probs, cfg.imputation.m, &mut rng)?;
    std::fs::create_dir_all(&cfg.data.out_dir)?;
    let path = cfg.data.out_dir.join("imputations.csv");
    write_imputations(&path, &loaded.data, &set)?;
    write_manifest(&cfg, ctx, "impute")?;
    println!("wrote {} imputation datasets to {}", set.m(), path.display());
    Ok(())
}

fn imputation_set_for_fit(cfg: &RunConfig, data: &FitData, observations: &Observations) -> Result<ImputationSet> {
    match observations {
        Observations::Labels(labels) => Ok(ImputationSet::fixed(data.alphabet.n_states(), labels.clone())),
        Observations::Probs(probs) => {
            let stored = cfg.data.out_dir.join("imputations.csv");
            if stored.exists() {
                println!("reusing {}", stored.display());
                read_imputations(&stored, data)
            } else {
                let mut rng = ChaCha12Rng::seed_from_u64(imputation_seed(cfg.sampler.seed));
                let set = draw_imputations(probs, cfg.imputation.m, &mut rng)?;
                std::fs::create_dir_all(&cfg.data.out_dir)?;
                write_imputations(&stored, data, &set)?;
                Ok(set)
            }
        }
    }
}

fn cmd_fit(cfg: RunConfig, ctx: &Ctx) -> Result<()> {
    let loaded = load_inputs(&cfg)?;
    let set = imputation_set_for_fit(&cfg, &loaded.data, &loaded.observations)?;
    println!(
        "fitting: {} transitions, {} states, design width {}, M = {}",
        loaded.data.n_transitions(),
        loaded.data.alphabet.n_states(),
        loaded.data.layout.width(),
        set.m()
    );
    let chains = run_chains(&loaded.data, &set, &cfg.prior, &cfg.sampler)?;
    std::fs::create_dir_all(&cfg.data.out_dir)?;
    for (k, chain) in chains.iter().enumerate() {
        write_chain_binary(&cfg.data.out_dir.join(format!("chain_{k}.bin")), chain)?;
        write_chain_csv(&cfg.data.out_dir.join(format!("chain_{k}.csv")), chain)?;
    }
    if chains.len() > 1 {
        write_rhat(&cfg.data.out_dir.join("rhat.csv"), &chains)?;
    }
    std::fs::write(
        cfg.data.out_dir.join("validation_report.json"),
        serde_json::to_string_pretty(&loaded.report)?,
    )?;
    write_manifest(&cfg, ctx, "fit")?;
    println!(
        "stored {} draws per chain across {} chain(s) in {}",
        chains[0].n_draws(),
        chains.len(),
        cfg.data.out_dir.display()
    );
    Ok(())
}

fn write_rhat(path: &Path, chains: &[PosteriorChain]) -> Result<()> {
    let first = &chains[0];
    let names = parameter_names(&first.alphabet, &first.layout);
    let j = first.alphabet.n_states();
    let b = first.layout.width();
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["parameter", "rhat"])?;
    let mut idx = 0usize;
    for i in 0..j {
        for slot in 0..j - 1 {
            for c in 0..b {
                let series: Vec<Vec<f64>> =
                    chains.iter().map(|ch| ch.coefficient_draws(i, slot, c)).collect();
                w.write_record([&names[idx], &format!("{:.4}", crate::gibbs::potential_scale_reduction(&series))])?;
                idx += 1;
            }
            let series: Vec<Vec<f64>> = chains.iter().map(|ch| ch.mu_draws(i, slot)).collect();
            w.write_record([&names[idx], &format!("{:.4}", crate::gibbs::potential_scale_reduction(&series))])?;
            idx += 1;
        }
    }
    w.flush()?;
    Ok(())
}

fn default_chain_path(cfg: &RunConfig) -> PathBuf {
    cfg.data.out_dir.join("chain_0.bin")
}

fn cmd_summarize(cfg: RunConfig, ctx: &Ctx, chain: Option<&Path>) -> Result<()> {
    let path = chain.map(Path::to_path_buf).unwrap_or_else(|| default_chain_path(&cfg));
    let chain = read_chain_binary(&path)?;
    let table = summary_table(&chain)?;
    std::fs::create_dir_all(&cfg.data.out_dir)?;

    let mut w = csv::Writer::from_path(cfg.data.out_dir.join("summary.csv"))?;
    w.write_record([
        "from",
        "to",
        "covariate",
        "beta_mean",
        "or_mean",
        "or_lower",
        "or_upper",
        "prop_or_gt_one",
        "significance",
    ])?;
    for row in &table.rows {
        w.write_record([
            row.from.as_str(),
            row.to.as_str(),
            row.covariate.as_str(),
            &format!("{:.6}", row.beta_mean),
            &format!("{:.6}", row.or_mean),
            &format!("{:.6}", row.or_lower),
            &format!("{:.6}", row.or_upper),
            &format!("{:.4}", row.prop_or_gt_one),
            match row.significance {
                Some(crate::summary::Significance::Positive) => "positive",
                Some(crate::summary::Significance::Negative) => "negative",
                None => "",
            },
        ])?;
    }
    w.flush()?;

    // plot-ready long format for credible-interval figures
    let mut w = csv::Writer::from_path(cfg.data.out_dir.join("ci_long.csv"))?;
    w.write_record(["transition", "covariate", "or_mean", "or_lower", "or_upper"])?;
    for row in &table.rows {
        w.write_record([
            &format!("{} -> {}", row.from, row.to),
            &row.covariate,
            &format!("{:.6}", row.or_mean),
            &format!("{:.6}", row.or_lower),
            &format!("{:.6}", row.or_upper),
        ])?;
    }
    w.flush()?;

    if chain.layout.n_habitats() >= 2 {
        let mut w = csv::Writer::from_path(cfg.data.out_dir.join("pairwise.csv"))?;
        w.write_record(["from", "to", "habitat_a", "habitat_b", "proportion", "significant"])?;
        let j = chain.alphabet.n_states();
        for i in 0..j {
            for slot in 0..j - 1 {
                let m = pairwise_habitat(&chain, i, slot)?;
                for a in 0..m.habitat_names.len() {
                    for b in 0..m.habitat_names.len() {
                        if a == b {
                            continue;
                        }
                        w.write_record([
                            m.from.as_str(),
                            m.to.as_str(),
                            m.habitat_names[a].as_str(),
                            m.habitat_names[b].as_str(),
                            &format!("{:.4}", m.proportions[a][b]),
                            if m.significant(a, b) { "yes" } else { "no" },
                        ])?;
                    }
                }
            }
        }
        w.flush()?;
    }
    write_manifest(&cfg, ctx, "summarize")?;
    println!("wrote summary tables for {} draws to {}", chain.n_draws(), cfg.data.out_dir.display());
    Ok(())
}

fn cmd_gof(cfg: RunConfig, ctx: &Ctx, chain: Option<&Path>, replicates: usize) -> Result<()> {
    let loaded = load_inputs(&cfg)?;
    let path = chain.map(Path::to_path_buf).unwrap_or_else(|| default_chain_path(&cfg));
    let chain = read_chain_binary(&path)?;
    let labels = match &loaded.observations {
        Observations::Labels(l) => l.clone(),
        Observations::Probs(p) => argmax_labels(p),
    };
    let mut rng = ChaCha12Rng::seed_from_u64(chain_seed(cfg.sampler.seed, 0x60F));
    let report = posterior_predictive(&chain, &loaded.data, &labels, replicates, &mut rng)?;

    let n_states = chain.alphabet.n_states();
    let mut w = csv::Writer::from_path(cfg.data.out_dir.join("gof.csv"))?;
    w.write_record(["statistic", "from", "to", "observed", "rep_q025", "rep_mean", "rep_q975"])?;
    for i in 0..n_states {
        for jj in 0..n_states {
            let reps: Vec<f64> = report.replicates.iter().map(|s| s.transition_freq[i][jj]).collect();
            w.write_record([
                "transition_freq",
                chain.alphabet.label(i),
                chain.alphabet.label(jj),
                &format!("{:.6}", report.observed.transition_freq[i][jj]),
                &format!("{:.6}", quantile(&reps, 0.025)),
                &format!("{:.6}", reps.iter().sum::<f64>() / reps.len() as f64),
                &format!("{:.6}", quantile(&reps, 0.975)),
            ])?;
        }
    }
    for i in 0..n_states {
        let reps: Vec<f64> = report.replicates.iter().map(|s| s.occupancy[i]).collect();
        w.write_record([
            "occupancy",
            chain.alphabet.label(i),
            "",
            &format!("{:.6}", report.observed.occupancy[i]),
            &format!("{:.6}", quantile(&reps, 0.025)),
            &format!("{:.6}", reps.iter().sum::<f64>() / reps.len() as f64),
            &format!("{:.6}", quantile(&reps, 0.975)),
        ])?;
    }
    let reps: Vec<f64> = report.replicates.iter().map(GofStats::self_transition_fraction).collect();
    w.write_record([
        "self_transition_fraction",
        "",
        "",
        &format!("{:.6}", report.observed.self_transition_fraction()),
        &format!("{:.6}", quantile(&reps, 0.025)),
        &format!("{:.6}", reps.iter().sum::<f64>() / reps.len() as f64),
        &format!("{:.6}", quantile(&reps, 0.975)),
    ])?;
    w.flush()?;
    write_manifest(&cfg, ctx, "gof")?;
    println!(
        "goodness of fit: observed self-transition fraction {} the central 95% replicate band",
        if report.observed_in_band() { "inside" } else { "OUTSIDE" }
    );
    Ok(())
}
