//! Posterior-predictive goodness of fit: replicate sequences from posterior
//! draws and compare observed transition statistics to the replicate band.
//!
//! Run with: `cargo run --example goodness_of_fit`

use pg_markov::gibbs::{run_chain, PriorSpec, SamplerConfig};
use pg_markov::imputation::ImputationSet;
use pg_markov::sim::{make_scenario, simulate_sequences, ScenarioSpec};
use pg_markov::summary::{posterior_predictive, quantile, GofStats};
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;

fn main() -> pg_markov::Result<()> {
    let scenario = make_scenario(ScenarioSpec {
        t_per_individual: 3_000,
        seed: 99,
        ..ScenarioSpec::default()
    })?;
    let sim = simulate_sequences(&scenario)?;
    let chain = run_chain(
        &sim.data,
        &ImputationSet::fixed(scenario.alphabet.n_states(), sim.labels.clone()),
        &PriorSpec::default(),
        &SamplerConfig {
            iterations: 2_000,
            burn_in: 500,
            seed: 99,
            ..SamplerConfig::default()
        },
    )?;

    let mut rng = ChaCha12Rng::seed_from_u64(99);
    let report = posterior_predictive(&chain, &sim.data, &sim.labels, 200, &mut rng)?;

    println!("occupancy: observed vs central 95% replicate band");
    for (i, label) in (0..scenario.alphabet.n_states()).map(|i| (i, scenario.alphabet.label(i))) {
        let reps: Vec<f64> = report.replicates.iter().map(|s| s.occupancy[i]).collect();
        println!(
            "{:>12}: {:.4} in [{:.4}, {:.4}]",
            label,
            report.observed.occupancy[i],
            quantile(&reps, 0.025),
            quantile(&reps, 0.975)
        );
    }

    let reps: Vec<f64> = report.replicates.iter().map(GofStats::self_transition_fraction).collect();
    println!(
        "\nself-transition fraction: observed {:.4}, replicate band [{:.4}, {:.4}] -> {}",
        report.observed.self_transition_fraction(),
        quantile(&reps, 0.025),
        quantile(&reps, 0.975),
        if report.observed_in_band() { "consistent" } else { "misfit" }
    );
    Ok(())
}
