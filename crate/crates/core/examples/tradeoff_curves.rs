//! Cost versus sampling rate: the piecewise affine h2 curve and the
//! staircase h-infinity curve.
//!
//!     cargo run --example tradeoff_curves

use schedopt::hinf::hinf_curve;
use schedopt::matops::{solve_dare, DEFAULT_MAX_ITER, DEFAULT_TOL};
use schedopt::table::triple_integrator;
use schedopt::{format_ratio, BetaTable, BisectionOptions, Rational};

fn main() -> schedopt::Result<()> {
    let model = triple_integrator();
    let table = BetaTable::new(&model, &solve_dare(&model, DEFAULT_TOL, DEFAULT_MAX_ITER)?);

    let rates: Vec<Rational> = (4..=12).map(|k| Rational::new(k, 12)).collect();
    println!("rate   J2");
    for p in table.h2_curve(3, &rates)? {
        println!("{:<6} {:.3}", format_ratio(&p.rate), p.value);
    }

    println!("\naverage interval   gamma");
    for s in hinf_curve(&model, 5, &BisectionOptions::with_tol(1e-5))? {
        let open = if s.lower_closed { "[" } else { "(" };
        println!("{open}{}, {}]   {:.3}", s.lower, s.upper, s.gamma);
    }
    Ok(())
}
