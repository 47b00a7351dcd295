//! Simulate behavior sequences from known coefficients, run the Gibbs
//! sampler on the exact labels, and print posterior means next to the truth.
//!
//! Run with: `cargo run --example simulate_and_fit`

use pg_markov::gibbs::{run_chain, PriorSpec, SamplerConfig};
use pg_markov::imputation::ImputationSet;
use pg_markov::sim::{make_scenario, simulate_sequences, ScenarioSpec};

fn main() -> pg_markov::Result<()> {
    let scenario = make_scenario(ScenarioSpec {
        n_individuals: 2,
        t_per_individual: 4_000,
        seed: 21,
        ..ScenarioSpec::default()
    })?;
    let sim = simulate_sequences(&scenario)?;
    println!(
        "simulated {} transitions over {} states, design width {}",
        sim.data.n_transitions(),
        scenario.alphabet.n_states(),
        scenario.layout.width()
    );

    let config = SamplerConfig {
        iterations: 3_000,
        burn_in: 1_000,
        seed: 21,
        ..SamplerConfig::default()
    };
    let set = ImputationSet::fixed(scenario.alphabet.n_states(), sim.labels.clone());
    let chain = run_chain(&sim.data, &set, &PriorSpec::default(), &config)?;

    let cols = scenario.layout.column_names();
    println!("{:>28} {:>10} {:>10}", "coefficient", "truth", "post mean");
    for i in 0..scenario.alphabet.n_states() {
        for slot in 0..scenario.alphabet.n_states() - 1 {
            let from = scenario.alphabet.label(i);
            let to = scenario.alphabet.label(scenario.alphabet.state_of_slot(slot));
            for (c, col) in cols.iter().enumerate() {
                let draws = chain.coefficient_draws(i, slot, c);
                let mean = draws.iter().sum::<f64>() / draws.len() as f64;
                println!(
                    "{:>28} {:>10.3} {:>10.3}",
                    format!("{from}->{to}.{col}"),
                    scenario.truth.beta[i][slot][c],
                    mean
                );
            }
        }
    }
    Ok(())
}
