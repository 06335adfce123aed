//! h-infinity attenuation bounds for periodic sampling.
//!
//! For evenly spaced sampling with period `h`, `gamma` is achievable iff the
//! game Riccati fixed point `P_bar` exists with `g^2 I - P_bar > 0` and the
//! open-loop propagation `M_1 = P_bar`, `M_{k+1} = A' Fa(M_k) A + Q` keeps
//! `g^2 I - M_k > 0` for `k = 1..=h`. The attenuation bound of a general
//! schedule equals the bound of its longest interval.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::matops::{
    disturbance_map, gamma_margin, is_pd_default, open_loop_map, solve_p_gamma, symmetrize,
    GameRiccati, Matrix, SystemModel, DEFAULT_MAX_ITER, DEFAULT_TOL,
};
use crate::schedule::{Rational, Schedule};

/// Largest `h * n` accepted by [`gamma_block_oracle`].
pub const BLOCK_ORACLE_MAX_DIM: usize = 60;

/// Knobs for the gamma bisection.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BisectionOptions {
    /// Relative bracket width at which bisection stops.
    pub tol: f64,
    /// Convergence threshold of the game Riccati iteration.
    pub riccati_tol: f64,
    pub riccati_max_iter: usize,
    pub max_steps: usize,
    pub initial_lo: f64,
    pub initial_hi: f64,
    /// Bracket expansion gives up past this value.
    pub hi_limit: f64,
}

impl Default for BisectionOptions {
    fn default() -> Self {
        Self {
            tol: 1e-6,
            riccati_tol: DEFAULT_TOL,
            riccati_max_iter: DEFAULT_MAX_ITER,
            max_steps: 200,
            initial_lo: 1e-6,
            initial_hi: 1.0,
            hi_limit: 2f64.powi(60),
        }
    }
}

impl BisectionOptions {
    pub fn with_tol(tol: f64) -> Self {
        Self { tol, ..Self::default() }
    }
}

/// Feasibility witness for one `gamma`.
#[derive(Debug, Clone, PartialEq)]
pub struct GammaCertificate {
    pub gamma: f64,
    pub feasible: bool,
    pub p_bar: Option<Matrix>,
    /// `M_1..M_k` up to the first failure (or all `h` of them).
    pub m_iterates: Vec<Matrix>,
    /// First `k` with `g^2 I - M_k` not positive definite. `Some(0)` means
    /// the game Riccati iteration itself left the feasible set.
    pub failure_index: Option<usize>,
}

/// Result of a gamma bisection.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GammaBracket {
    /// Midpoint of the final bracket.
    pub gamma: f64,
    /// Largest probe found infeasible.
    pub lower: f64,
    /// Smallest probe found feasible.
    pub upper: f64,
    pub probes: usize,
}

fn game_riccati(model: &SystemModel, gamma: f64, opts: &BisectionOptions) -> Result<GameRiccati> {
    solve_p_gamma(model, gamma, opts.riccati_tol, opts.riccati_max_iter)
}

/// Runs the M-iteration for `h` steps at `gamma`.
pub fn m_iteration(
    model: &SystemModel,
    gamma: f64,
    h: usize,
    opts: &BisectionOptions,
) -> Result<GammaCertificate> {
    if h == 0 {
        return Err(Error::InvalidArgs("h must be at least 1".into()));
    }
    let p_bar = match game_riccati(model, gamma, opts)? {
        GameRiccati::Feasible { p_bar, .. } => p_bar,
        GameRiccati::Infeasible { .. } => {
            return Ok(GammaCertificate {
                gamma,
                feasible: false,
                p_bar: None,
                m_iterates: Vec::new(),
                failure_index: Some(0),
            })
        }
    };
    let (m_iterates, failure_index) = propagate(model, gamma, &p_bar, h)?;
    Ok(GammaCertificate {
        gamma,
        feasible: failure_index.is_none(),
        p_bar: Some(p_bar),
        m_iterates,
        failure_index,
    })
}

fn propagate(
    model: &SystemModel,
    gamma: f64,
    p_bar: &Matrix,
    h: usize,
) -> Result<(Vec<Matrix>, Option<usize>)> {
    let mut iterates = vec![p_bar.clone()];
    for k in 1..=h {
        let current = &iterates[k - 1];
        if !is_pd_default(&gamma_margin(current, gamma))? {
            return Ok((iterates, Some(k)));
        }
        if k < h {
            let next = open_loop_map(model, &disturbance_map(current, gamma)?)?;
            iterates.push(next);
        }
    }
    Ok((iterates, None))
}

/// Feasibility predicate used by the bisection. Non-convergence of the
/// game Riccati iteration counts as infeasible.
fn feasible_for_period(model: &SystemModel, gamma: f64, h: usize, opts: &BisectionOptions) -> Result<bool> {
    match m_iteration(model, gamma, h, opts) {
        Ok(cert) => Ok(cert.feasible),
        Err(Error::NonConvergence { .. }) => Ok(false),
        Err(e) => Err(e),
    }
}

/// Bisection on a monotone feasibility predicate.
pub fn bisect_gamma<F>(opts: &BisectionOptions, mut feasible: F) -> Result<GammaBracket>
where
    F: FnMut(f64) -> Result<bool>,
{
    let mut probes = 0;
    let mut lo = opts.initial_lo;
    let mut hi = opts.initial_hi.max(lo);
    probes += 1;
    if feasible(lo)? {
        return Ok(GammaBracket { gamma: lo, lower: 0.0, upper: lo, probes });
    }
    loop {
        probes += 1;
        if feasible(hi)? {
            break;
        }
        lo = hi;
        hi *= 2.0;
        if hi > opts.hi_limit {
            return Err(Error::NoFeasibleGammaFound { limit: opts.hi_limit });
        }
    }
    for _ in 0..opts.max_steps {
        if (hi - lo) / hi <= opts.tol {
            break;
        }
        let mid = 0.5 * (lo + hi);
        probes += 1;
        if feasible(mid)? {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(GammaBracket { gamma: 0.5 * (lo + hi), lower: lo, upper: hi, probes })
}

/// Bisection bracket for the attenuation bound of period-`h` sampling.
pub fn gamma_h_bracket(model: &SystemModel, h: usize, opts: &BisectionOptions) -> Result<GammaBracket> {
    if h == 0 {
        return Err(Error::InvalidArgs("h must be at least 1".into()));
    }
    bisect_gamma(opts, |g| feasible_for_period(model, g, h, opts))
}

/// Attenuation bound of evenly spaced sampling with period `h`.
pub fn gamma_h(model: &SystemModel, h: usize, opts: &BisectionOptions) -> Result<f64> {
    Ok(gamma_h_bracket(model, h, opts)?.gamma)
}

/// Attenuation bound of an arbitrary periodic schedule: the bound of its
/// longest interval.
pub fn gamma_schedule(model: &SystemModel, schedule: &Schedule, opts: &BisectionOptions) -> Result<f64> {
    gamma_h(model, schedule.max_interval(), opts)
}

/// Runs the M-iteration over every interval of `schedule` at `gamma` and
/// reports whether all of them stay feasible.
pub fn schedule_feasible(
    model: &SystemModel,
    gamma: f64,
    schedule: &Schedule,
    opts: &BisectionOptions,
) -> Result<bool> {
    let p_bar = match game_riccati(model, gamma, opts)? {
        GameRiccati::Feasible { p_bar, .. } => p_bar,
        GameRiccati::Infeasible { .. } => return Ok(false),
    };
    for &tau in schedule.intervals() {
        if propagate(model, gamma, &p_bar, tau)?.1.is_some() {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Lower block-triangular map from `(w_0..w_{h-1})` to `(x_1..x_h)` for
/// `x_{k+1} = A x_k + w_k`, `x_0 = 0`.
pub fn disturbance_to_state_map(a: &Matrix, h: usize) -> Matrix {
    let n = a.nrows();
    let mut powers = vec![Matrix::identity(n, n)];
    for k in 1..h {
        let next = a * &powers[k - 1];
        powers.push(next);
    }
    let mut d = Matrix::zeros(n * h, n * h);
    for row in 0..h {
        for col in 0..=row {
            d.view_mut((row * n, col * n), (n, n)).copy_from(&powers[row - col]);
        }
    }
    d
}

/// Concavity test of the `h`-step game cost in the disturbances:
/// `g^2 I - D' diag(Q, .., Q, P_bar) D > 0`.
pub fn block_condition(model: &SystemModel, gamma: f64, p_bar: &Matrix, h: usize) -> Result<bool> {
    let n = model.states();
    let d = disturbance_to_state_map(model.a(), h);
    let mut weights = Matrix::zeros(n * h, n * h);
    for k in 0..h {
        let block = if k + 1 == h { p_bar } else { model.q() };
        weights.view_mut((k * n, k * n), (n, n)).copy_from(block);
    }
    let quad = symmetrize(&(d.transpose() * weights * &d));
    is_pd_default(&gamma_margin(&quad, gamma))
}

/// Attenuation bound of period-`h` sampling from the stacked block
/// condition; an independent route to [`gamma_h`].
pub fn gamma_block_oracle(model: &SystemModel, h: usize, opts: &BisectionOptions) -> Result<f64> {
    if h == 0 {
        return Err(Error::InvalidArgs("h must be at least 1".into()));
    }
    if h * model.states() > BLOCK_ORACLE_MAX_DIM {
        return Err(Error::TooLarge(format!(
            "block oracle dimension {} exceeds {BLOCK_ORACLE_MAX_DIM}",
            h * model.states()
        )));
    }
    let bracket = bisect_gamma(opts, |g| match game_riccati(model, g, opts) {
        Ok(GameRiccati::Feasible { p_bar, .. }) => block_condition(model, g, &p_bar, h),
        Ok(GameRiccati::Infeasible { .. }) | Err(Error::NonConvergence { .. }) => Ok(false),
        Err(e) => Err(e),
    })?;
    Ok(bracket.gamma)
}

/// State-feedback gain `-(R + B'Fa(P_bar)B)^-1 B'Fa(P_bar)A` achieving
/// `gamma` when sampling at every step.
pub fn k_gamma(model: &SystemModel, gamma: f64, opts: &BisectionOptions) -> Result<Matrix> {
    let p_bar = match game_riccati(model, gamma, opts)? {
        GameRiccati::Feasible { p_bar, .. } => p_bar,
        GameRiccati::Infeasible { .. } => return Err(Error::InfeasibleGamma { gamma }),
    };
    let fa = disturbance_map(&p_bar, gamma)?;
    let bt_fa = model.b().transpose() * &fa;
    let s = &bt_fa * model.b() + model.r();
    let rhs = bt_fa * model.a();
    let x = s.lu().solve(&rhs).ok_or(Error::InfeasibleGamma { gamma })?;
    Ok(-x)
}

/// One step of the optimal attenuation versus average interval curve:
/// every average interval in `(lower, upper]` (or exactly `upper` when
/// `lower_closed`) achieves `gamma` at best.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HinfStep {
    #[serde(serialize_with = "crate::serialize_ratio")]
    pub lower: Rational,
    #[serde(serialize_with = "crate::serialize_ratio")]
    pub upper: Rational,
    pub lower_closed: bool,
    pub gamma: f64,
}

/// Piecewise constant curve for average intervals in `[1, h_max]`.
pub fn hinf_curve(model: &SystemModel, h_max: usize, opts: &BisectionOptions) -> Result<Vec<HinfStep>> {
    if h_max == 0 {
        return Err(Error::InvalidArgs("h_max must be at least 1".into()));
    }
    (1..=h_max)
        .map(|h| {
            let gamma = gamma_h(model, h, opts)?;
            let upper = Rational::from_integer(h as u64);
            let (lower, lower_closed) = if h == 1 {
                (upper, true)
            } else {
                (Rational::from_integer(h as u64 - 1), false)
            };
            Ok(HinfStep { lower, upper, lower_closed, gamma })
        })
        .collect()
}

/// Best attenuation for average interval `a`: the step containing `a`.
pub fn optimal_gamma_at(steps: &[HinfStep], a: Rational) -> Option<f64> {
    steps
        .iter()
        .find(|s| a <= s.upper && (a > s.lower || (s.lower_closed && a == s.lower)))
        .map(|s| s.gamma)
}
