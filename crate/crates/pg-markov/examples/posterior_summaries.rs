//! Posterior summaries: odds-ratio table with credible intervals and
//! significance calls, plus pairwise habitat comparisons.
//!
//! Run with: `cargo run --example posterior_summaries`

use pg_markov::gibbs::{run_chain, PriorSpec, SamplerConfig};
use pg_markov::imputation::ImputationSet;
use pg_markov::sim::{make_scenario, simulate_sequences, ScenarioSpec};
use pg_markov::summary::{pairwise_habitat, summary_table, Significance};

fn main() -> pg_markov::Result<()> {
    let scenario = make_scenario(ScenarioSpec {
        t_per_individual: 3_000,
        seed: 5,
        ..ScenarioSpec::default()
    })?;
    let sim = simulate_sequences(&scenario)?;
    let chain = run_chain(
        &sim.data,
        &ImputationSet::fixed(scenario.alphabet.n_states(), sim.labels.clone()),
        &PriorSpec::default(),
        &SamplerConfig {
            iterations: 3_000,
            burn_in: 1_000,
            seed: 5,
            ..SamplerConfig::default()
        },
    )?;

    let table = summary_table(&chain)?;
    println!(
        "{:>10} {:>10} {:>14} {:>8} {:>16} {:>9}",
        "from", "to", "covariate", "OR", "95% CI", "call"
    );
    for row in &table.rows {
        println!(
            "{:>10} {:>10} {:>14} {:>8.3} [{:>6.3},{:>6.3}] {:>9}",
            row.from,
            row.to,
            row.covariate,
            row.or_mean,
            row.or_lower,
            row.or_upper,
            match row.significance {
                Some(Significance::Positive) => "positive",
                Some(Significance::Negative) => "negative",
                None => "-",
            }
        );
    }

    println!("\npairwise habitat dominance (fraction of draws where row > column):");
    let m = pairwise_habitat(&chain, 0, 0)?;
    println!("transition {} -> {}", m.from, m.to);
    for (a, name) in m.habitat_names.iter().enumerate() {
        let cells: Vec<String> = m.proportions[a].iter().map(|p| format!("{p:>6.2}")).collect();
        println!("{:>12} {}", name, cells.join(" "));
    }
    Ok(())
}
