//! Simulated certainty-equivalence control against the analytic cost.
//!
//!     cargo run --release --example monte_carlo

use schedopt::matops::{solve_dare, DEFAULT_MAX_ITER, DEFAULT_TOL};
use schedopt::simulate::{estimation_error_covariance, monte_carlo_j2};
use schedopt::table::triple_integrator;
use schedopt::{BetaTable, Schedule};

fn main() -> schedopt::Result<()> {
    let model = triple_integrator();
    let ric = solve_dare(&model, DEFAULT_TOL, DEFAULT_MAX_ITER)?;
    let table = BetaTable::new(&model, &ric);
    for text in ["1", "3,3", "2,4"] {
        let s: Schedule = text.parse()?;
        let rep = monte_carlo_j2(&model, &ric, &s, 10_000 * s.period(), 50, 0)?;
        let exact = table.j2(&s)?;
        println!(
            "{text:<4} simulated {:.2} +- {:.2}, analytic {exact:.2}",
            rep.empirical_mean, rep.std_error
        );
    }

    let cov = estimation_error_covariance(&model, &"3".parse()?, 2000, 8, 1)?;
    println!("\nprediction error trace by phase: {:?}", cov.iter().map(|c| format!("{:.2}", c.trace())).collect::<Vec<_>>());
    Ok(())
}
