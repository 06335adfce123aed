//! Balancing a lopsided schedule and checking the result against
//! exhaustive search.
//!
//!     cargo run --example optimize_h2

use schedopt::h2::optimal_schedule;
use schedopt::matops::{solve_dare, DEFAULT_MAX_ITER, DEFAULT_TOL};
use schedopt::table::triple_integrator;
use schedopt::{BetaTable, Schedule};

fn main() -> schedopt::Result<()> {
    let model = triple_integrator();
    let table = BetaTable::new(&model, &solve_dare(&model, DEFAULT_TOL, DEFAULT_MAX_ITER)?);

    let start: Schedule = "7,1,1,1".parse()?;
    println!("greedy balancing from {start}:");
    for step in table.greedy_trace(&start)? {
        println!("  {:<10} J2 = {:.3}", step.schedule.to_string(), step.j2);
    }

    let (h, m) = (10, 4);
    let best = optimal_schedule(h, m)?;
    let bf = table.brute_force(h, m)?;
    println!(
        "\nh = {h}, m = {m}: balanced {best} ({}) costs {:.3}; exhaustive minimum over {} classes is {:.3}",
        best.to_bit_string(),
        table.j2(&best)?,
        bf.evaluated,
        bf.min_cost
    );
    Ok(())
}
