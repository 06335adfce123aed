//! LQ Riccati solution and the interval costs it induces.
//!
//!     cargo run --example riccati

use schedopt::matops::{solve_dare, DEFAULT_MAX_ITER, DEFAULT_TOL};
use schedopt::table::{scalar_golden, triple_integrator};
use schedopt::BetaTable;

fn main() -> schedopt::Result<()> {
    for (name, model) in [("scalar", scalar_golden()), ("triple integrator", triple_integrator())] {
        let ric = solve_dare(&model, DEFAULT_TOL, DEFAULT_MAX_ITER)?;
        println!("{name}: converged in {} iterations, residual {:.1e}", ric.iterations, ric.residual(&model)?);
        println!("P = {:.4}K = {:.4}tr(PW) = {:.4}", ric.p, ric.k, ric.tr_pw);
        let beta = BetaTable::new(&model, &ric).values(6)?;
        println!("beta(1..=6) = {beta:.2?}\n");
    }
    Ok(())
}
