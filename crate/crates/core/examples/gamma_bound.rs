//! Attenuation bounds by bisection, with the M-iteration certificate and
//! the block-matrix cross-check.
//!
//!     cargo run --example gamma_bound

use schedopt::hinf::{gamma_block_oracle, gamma_h_bracket, gamma_schedule, m_iteration};
use schedopt::table::triple_integrator;
use schedopt::{BisectionOptions, Schedule};

fn main() -> schedopt::Result<()> {
    let model = triple_integrator();
    let opts = BisectionOptions::default();
    for h in 1..=4 {
        let b = gamma_h_bracket(&model, h, &opts)?;
        let oracle = if h <= 3 { format!("{:.6}", gamma_block_oracle(&model, h, &opts)?) } else { "-".into() };
        println!("h = {h}: gamma = {:.6} in [{:.6}, {:.6}] after {} probes, block oracle {oracle}", b.gamma, b.lower, b.upper, b.probes);
    }

    for gamma in [8.0, 20.0] {
        let cert = m_iteration(&model, gamma, 3, &opts)?;
        println!("gamma = {gamma}, h = 3: feasible {}, first failure {:?}", cert.feasible, cert.failure_index);
    }

    // only the longest gap matters
    let s: Schedule = "1,1,1,1,1,1,3".parse()?;
    println!("schedule {s} (rate {}): gamma = {:.4}", s.average_rate(), gamma_schedule(&model, &s, &opts)?);
    Ok(())
}
