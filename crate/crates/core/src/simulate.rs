//! Independent checks of the analytic results: closed-loop Monte Carlo
//! estimates of the average cost, the finite-horizon completion-of-squares
//! identity of the game Riccati recursion, and the value iteration that
//! climbs from the LQ solution to the game Riccati fixed point.

use nalgebra::{DVector, SymmetricEigen};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::matops::{
    controlled_map, disturbance_map, disturbance_map_indefinite, gamma_margin, max_abs,
    solve_dare, solve_p_gamma, GameRiccati, Matrix, RiccatiData, SystemModel, DEFAULT_MAX_ITER,
    DEFAULT_TOL,
};
use crate::schedule::Schedule;

pub type Vector = DVector<f64>;

/// Outcome of a Monte Carlo run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimReport {
    #[serde(serialize_with = "crate::serialize_schedule")]
    pub schedule: Schedule,
    pub horizon: usize,
    pub trials: usize,
    pub seed: u64,
    /// `(1 / (N T)) * sum ||z_t||^2`
    pub empirical_mean: f64,
    /// Standard error of the mean over trials (zero for a single trial).
    pub std_error: f64,
}

/// Symmetric square root with negative eigenvalues clipped to zero.
pub fn psd_sqrt(w: &Matrix) -> Matrix {
    let eig = SymmetricEigen::new(w.clone());
    let roots = eig.eigenvalues.map(|l| l.max(0.0).sqrt());
    &eig.eigenvectors * Matrix::from_diagonal(&roots) * eig.eigenvectors.transpose()
}

fn trial_rng(seed: u64, trial: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial as u64);
    rng
}

fn draw_noise(rng: &mut ChaCha8Rng, sqrt_w: &Matrix, xi: &mut Vector, out: &mut Vector) {
    for v in xi.iter_mut() {
        *v = StandardNormal.sample(rng);
    }
    out.gemv(1.0, sqrt_w, xi, 0.0);
}

/// Simulates the certainty-equivalence controller `u = K xhat` for
/// `trials` independent runs of `horizon` steps from `x_0 = 0`.
///
/// The estimate resets to the measured state at sampling instants and is
/// propagated with the model in between. Each trial draws from its own
/// ChaCha stream keyed by `(seed, trial)`, so the report does not depend on
/// how trials are scheduled across threads.
pub fn monte_carlo_j2(
    model: &SystemModel,
    riccati: &RiccatiData,
    schedule: &Schedule,
    horizon: usize,
    trials: usize,
    seed: u64,
) -> Result<SimReport> {
    let h = schedule.period();
    if horizon == 0 || !horizon.is_multiple_of(h) {
        return Err(Error::InvalidHorizon(format!(
            "horizon {horizon} must be a positive multiple of the period {h}"
        )));
    }
    if trials == 0 {
        return Err(Error::InvalidHorizon("at least one trial is required".into()));
    }
    let sigma = schedule.to_sigma();
    let sqrt_w = psd_sqrt(model.w());
    let means: Vec<f64> = (0..trials)
        .into_par_iter()
        .map(|trial| run_trial(model, &riccati.k, &sigma, &sqrt_w, horizon, trial_rng(seed, trial)))
        .collect();
    let mean = means.iter().sum::<f64>() / trials as f64;
    let std_error = if trials > 1 {
        let var = means.iter().map(|m| (m - mean).powi(2)).sum::<f64>() / (trials - 1) as f64;
        (var / trials as f64).sqrt()
    } else {
        0.0
    };
    Ok(SimReport {
        schedule: schedule.clone(),
        horizon,
        trials,
        seed,
        empirical_mean: mean,
        std_error,
    })
}

fn run_trial(
    model: &SystemModel,
    gain: &Matrix,
    sigma: &[bool],
    sqrt_w: &Matrix,
    horizon: usize,
    mut rng: ChaCha8Rng,
) -> f64 {
    let (n, m) = (model.states(), model.inputs());
    let (a, b, q, r) = (model.a(), model.b(), model.q(), model.r());
    let mut x = Vector::zeros(n);
    let mut predicted = Vector::zeros(n);
    let mut estimate = Vector::zeros(n);
    let mut u = Vector::zeros(m);
    let mut next = Vector::zeros(n);
    let mut w = Vector::zeros(n);
    let mut xi = Vector::zeros(n);
    let mut total = 0.0;
    for t in 0..horizon {
        if sigma[t % sigma.len()] {
            estimate.copy_from(&x);
        } else {
            estimate.copy_from(&predicted);
        }
        u.gemv(1.0, gain, &estimate, 0.0);
        total += x.dot(&(q * &x)) + u.dot(&(r * &u));
        draw_noise(&mut rng, sqrt_w, &mut xi, &mut w);
        next.gemv(1.0, a, &x, 0.0);
        next.gemv(1.0, b, &u, 1.0);
        next += &w;
        std::mem::swap(&mut x, &mut next);
        predicted.gemv(1.0, a, &estimate, 0.0);
        predicted.gemv(1.0, b, &u, 1.0);
    }
    total / horizon as f64
}

/// Empirical covariance of `x_t - xhat_{t|t}` at each phase of the period,
/// averaged over `periods` periods and `trials` trials.
///
/// The error evolves as `e+ = A e + w` between samples and is zero at
/// sampling instants regardless of the control law, so no controller is
/// simulated.
pub fn estimation_error_covariance(
    model: &SystemModel,
    schedule: &Schedule,
    periods: usize,
    trials: usize,
    seed: u64,
) -> Result<Vec<Matrix>> {
    if periods == 0 || trials == 0 {
        return Err(Error::InvalidHorizon("need at least one period and one trial".into()));
    }
    let sigma = schedule.to_sigma();
    let h = sigma.len();
    let n = model.states();
    let sqrt_w = psd_sqrt(model.w());
    let per_trial: Vec<Vec<Matrix>> = (0..trials)
        .into_par_iter()
        .map(|trial| {
            let mut rng = trial_rng(seed, trial);
            let mut sums = vec![Matrix::zeros(n, n); h];
            let mut e = Vector::zeros(n);
            let mut w = Vector::zeros(n);
            let mut xi = Vector::zeros(n);
            for t in 0..periods * h {
                let phase = t % h;
                if sigma[phase] {
                    e.fill(0.0);
                }
                sums[phase] += &e * e.transpose();
                draw_noise(&mut rng, &sqrt_w, &mut xi, &mut w);
                e = model.a() * &e + &w;
            }
            sums
        })
        .collect();
    let count = (periods * trials) as f64;
    let mut out = vec![Matrix::zeros(n, n); h];
    for sums in per_trial {
        for (acc, s) in out.iter_mut().zip(sums) {
            *acc += s;
        }
    }
    Ok(out.into_iter().map(|m| m / count).collect())
}

/// Both sides of the finite-horizon completion-of-squares identity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IdentityCheck {
    /// `sum (z'z - g^2 w'w) + x_tau' P_tau x_tau` from forward simulation.
    pub lhs: f64,
    /// `x_0' P_0 x_0 + sum (u - K x)' S (u - K x) - sum (w - L v)' (g^2 I - P) (w - L v)`
    pub rhs: f64,
    /// `|lhs - rhs| / (1 + |lhs|)`
    pub residual: f64,
}

/// Per-step data of the backward game recursion `P_{k-1} = Fc(Fa(P_k))`.
#[derive(Debug, Clone)]
pub struct BackwardRecursion {
    /// `P_0..=P_tau`
    pub p: Vec<Matrix>,
    /// Control gains `K_0..K_{tau-1}`.
    pub control_gains: Vec<Matrix>,
    /// Disturbance gains `L_0..L_{tau-1}`, applied to `A x_k + B u_k`.
    pub disturbance_gains: Vec<Matrix>,
    /// `R + B' Fa(P_{k+1}) B`
    pub control_weights: Vec<Matrix>,
}

fn check_invertible(margin: &Matrix, index: usize) -> Result<()> {
    let eig = SymmetricEigen::new(crate::matops::symmetrize(margin));
    let smallest = eig.eigenvalues.iter().fold(f64::INFINITY, |acc, l| acc.min(l.abs()));
    // negated so NaN is rejected
    #[allow(clippy::neg_cmp_op_on_partial_ord)]
    if !(smallest > 1e-12 * (1.0 + max_abs(margin))) {
        return Err(Error::SingularIterate { index });
    }
    Ok(())
}

/// Backward recursion from `P_tau = y0`, checking that every `g^2 I - P_k`
/// is invertible.
pub fn backward_recursion(model: &SystemModel, gamma: f64, tau: usize, y0: &Matrix) -> Result<BackwardRecursion> {
    let n = model.states();
    if y0.nrows() != n || y0.ncols() != n {
        return Err(Error::DimensionMismatch(format!("terminal weight must be {n}x{n}")));
    }
    let mut p = vec![Matrix::zeros(n, n); tau + 1];
    p[tau] = crate::matops::symmetrize(y0);
    for k in (1..=tau).rev() {
        check_invertible(&gamma_margin(&p[k], gamma), k)?;
        let fa = disturbance_map_indefinite(&p[k], gamma).ok_or(Error::SingularIterate { index: k })?;
        p[k - 1] = controlled_map(model, &fa)?;
    }
    check_invertible(&gamma_margin(&p[0], gamma), 0)?;
    let mut control_gains = Vec::with_capacity(tau);
    let mut disturbance_gains = Vec::with_capacity(tau);
    let mut control_weights = Vec::with_capacity(tau);
    for k in 0..tau {
        let next = &p[k + 1];
        let fa = disturbance_map_indefinite(next, gamma).ok_or(Error::SingularIterate { index: k + 1 })?;
        let bt_fa = model.b().transpose() * &fa;
        let s = &bt_fa * model.b() + model.r();
        let gain = s
            .clone()
            .lu()
            .solve(&(bt_fa * model.a()))
            .ok_or_else(|| Error::InvalidModel("R + B'Fa(P)B is singular".into()))?;
        let l = gamma_margin(next, gamma)
            .lu()
            .solve(next)
            .ok_or(Error::SingularIterate { index: k + 1 })?;
        control_gains.push(-gain);
        disturbance_gains.push(l);
        control_weights.push(s);
    }
    Ok(BackwardRecursion { p, control_gains, disturbance_gains, control_weights })
}

fn check_sequences(model: &SystemModel, tau: usize, x0: &Vector, u: &[Vector], w: &[Vector]) -> Result<()> {
    let (n, m) = (model.states(), model.inputs());
    if x0.len() != n {
        return Err(Error::DimensionMismatch(format!("x0 must have length {n}")));
    }
    if u.len() != tau || w.len() != tau {
        return Err(Error::InvalidArgs(format!("need {tau} inputs and disturbances")));
    }
    if u.iter().any(|v| v.len() != m) || w.iter().any(|v| v.len() != n) {
        return Err(Error::DimensionMismatch("input or disturbance vector has the wrong length".into()));
    }
    Ok(())
}

/// Evaluates both sides of the completion-of-squares identity for given
/// input and disturbance sequences over `tau` steps.
pub fn completion_of_squares(
    model: &SystemModel,
    gamma: f64,
    tau: usize,
    y0: &Matrix,
    x0: &Vector,
    u_seq: &[Vector],
    w_seq: &[Vector],
) -> Result<IdentityCheck> {
    check_sequences(model, tau, x0, u_seq, w_seq)?;
    let rec = backward_recursion(model, gamma, tau, y0)?;
    let g2 = gamma * gamma;
    let (a, b, q, r) = (model.a(), model.b(), model.q(), model.r());
    let mut x = x0.clone();
    let mut lhs = 0.0;
    let mut rhs = x0.dot(&(&rec.p[0] * x0));
    for k in 0..tau {
        let (u, w) = (&u_seq[k], &w_seq[k]);
        lhs += x.dot(&(q * &x)) + u.dot(&(r * u)) - g2 * w.dot(w);
        let v = a * &x + b * u;
        let du = u - &rec.control_gains[k] * &x;
        let dw = w - &rec.disturbance_gains[k] * &v;
        rhs += du.dot(&(&rec.control_weights[k] * &du));
        rhs -= dw.dot(&(gamma_margin(&rec.p[k + 1], gamma) * &dw));
        x = v + w;
    }
    lhs += x.dot(&(&rec.p[tau] * &x));
    Ok(IdentityCheck { lhs, rhs, residual: (lhs - rhs).abs() / (1.0 + lhs.abs()) })
}

/// Input and disturbance sequences of the saddle-point policies
/// `u_k = K_k x_k`, `w_k = L_k (A x_k + B u_k)` from `x0`.
pub fn saddle_sequences(
    model: &SystemModel,
    gamma: f64,
    tau: usize,
    y0: &Matrix,
    x0: &Vector,
) -> Result<(Vec<Vector>, Vec<Vector>)> {
    let rec = backward_recursion(model, gamma, tau, y0)?;
    let mut x = x0.clone();
    let mut us = Vec::with_capacity(tau);
    let mut ws = Vec::with_capacity(tau);
    for k in 0..tau {
        let u = &rec.control_gains[k] * &x;
        let v = model.a() * &x + model.b() * &u;
        let w = &rec.disturbance_gains[k] * &v;
        x = &v + &w;
        us.push(u);
        ws.push(w);
    }
    Ok((us, ws))
}

/// One iterate of the value iteration started at the LQ solution.
#[derive(Debug, Clone, PartialEq)]
pub struct GIterate {
    pub q: usize,
    pub g: Matrix,
    /// `max |G_q - P_bar|` entrywise.
    pub gap: f64,
}

/// `G_0 = P_LQ`, `G_{q+1} = Fc(Fa(G_q))`, run until `max |G_q - P_bar| < alpha`.
pub fn g_iteration(model: &SystemModel, gamma: f64, alpha: f64, q_max: usize) -> Result<Vec<GIterate>> {
    let p_bar = match solve_p_gamma(model, gamma, DEFAULT_TOL, DEFAULT_MAX_ITER)? {
        GameRiccati::Feasible { p_bar, .. } => p_bar,
        GameRiccati::Infeasible { .. } => return Err(Error::InfeasibleGamma { gamma }),
    };
    let mut g = solve_dare(model, DEFAULT_TOL, DEFAULT_MAX_ITER)?.p;
    let mut out = Vec::new();
    for q in 0..=q_max {
        let gap = max_abs(&(&g - &p_bar));
        out.push(GIterate { q, g: g.clone(), gap });
        if gap < alpha {
            return Ok(out);
        }
        g = controlled_map(model, &disturbance_map(&g, gamma)?)?;
    }
    Err(Error::NonConvergence { what: "value iteration from the LQ solution", iterations: q_max })
}
