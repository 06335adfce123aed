//! Recomputes the triple-integrator reference table and the algebraic
//! cross-checks behind the attenuation bounds.
//!
//!     cargo run --release --example reference_table

use schedopt::simulate::{g_iteration, completion_of_squares, Vector};
use schedopt::table::{triple_integrator, verify_table};
use schedopt::{BisectionOptions, Matrix};

fn main() -> schedopt::Result<()> {
    let model = triple_integrator();
    let report = verify_table(&model, &BisectionOptions::default())?;
    for e in &report.entries {
        let mark = if e.pass { "ok" } else { "MISMATCH" };
        println!("{:<6} h={} computed {:>10.4} reference {:>8} {mark}", e.quantity, e.h, e.computed, e.reference);
    }
    println!("all within 1%: {}", report.all_pass);

    // value iteration from the LQ solution climbs to the game solution
    let it = g_iteration(&model, 5.0, 1e-6, 1000)?;
    println!("\nG-iteration at gamma = 5: {} steps, final gap {:.1e}", it.len() - 1, it.last().unwrap().gap);

    // completion of squares for arbitrary inputs and disturbances
    let tau = 4;
    let x0 = Vector::from_vec(vec![1.0, -0.5, 0.2]);
    let us: Vec<Vector> = (0..tau).map(|k| Vector::from_element(1, 0.3 * k as f64)).collect();
    let ws: Vec<Vector> = (0..tau).map(|k| Vector::from_element(3, 0.1 / (1 + k) as f64)).collect();
    let check = completion_of_squares(&model, 20.0, tau, &Matrix::zeros(3, 3), &x0, &us, &ws)?;
    println!("identity: lhs {:.6} rhs {:.6} residual {:.1e}", check.lhs, check.rhs, check.residual);
    Ok(())
}
