//! Draw Polya-Gamma variates and compare the sample mean against the
//! analytic value (b / 2c) tanh(c / 2).
//!
//! Run with: `cargo run --example pg_sampling`

use pg_markov::pg::{draw_pg, pg_mean, PgParams};
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;

fn main() -> pg_markov::Result<()> {
    let mut rng = ChaCha12Rng::seed_from_u64(7);
    let n = 200_000;
    println!("{:>5} {:>8} {:>12} {:>12}", "b", "c", "sample", "analytic");
    for &(b, c) in &[(1u32, 0.0), (1, 0.5), (1, 2.0), (1, -2.0), (3, 1.5), (10, 4.0)] {
        let params = PgParams::new(b, c)?;
        let sum: f64 = (0..n).map(|_| draw_pg(params, &mut rng)).sum();
        println!(
            "{:>5} {:>8.2} {:>12.6} {:>12.6}",
            b,
            c,
            sum / n as f64,
            pg_mean(params)
        );
    }
    Ok(())
}
