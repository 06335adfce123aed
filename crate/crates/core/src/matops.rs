//! Dense symmetric-matrix kernel.
//!
//! Holds the plant description, the LQ Riccati solver, the positive
//! definiteness test used by every feasibility check, and the three
//! Riccati-type maps used by the h-infinity machinery:
//!
//! * disturbance map   `P + P (g^2 I - P)^-1 P`
//! * controlled map    `A'PA + Q - A'PB (B'PB + R)^-1 B'PA`
//! * open-loop map     `A'PA + Q`

use nalgebra::{Cholesky, DMatrix};

use crate::error::{Error, Result};

pub type Matrix = DMatrix<f64>;

/// Default convergence threshold for fixed-point iterations (max-abs metric).
pub const DEFAULT_TOL: f64 = 1e-10;
/// Default iteration cap for fixed-point iterations.
pub const DEFAULT_MAX_ITER: usize = 100_000;

const SYMMETRY_TOL: f64 = 1e-9;
const PSD_Q_SHIFT: f64 = 1e-9;

/// Largest absolute entry.
pub fn max_abs(m: &Matrix) -> f64 {
    m.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()))
}

/// `(M + M') / 2`
pub fn symmetrize(m: &Matrix) -> Matrix {
    (m + m.transpose()) * 0.5
}

fn asymmetry(m: &Matrix) -> f64 {
    max_abs(&(m - m.transpose()))
}

fn check_symmetric(m: &Matrix) -> Result<()> {
    let asym = asymmetry(m);
    if asym > SYMMETRY_TOL * (1.0 + max_abs(m)) {
        return Err(Error::NotSymmetric(asym));
    }
    Ok(())
}

/// Default shift used by [`is_pd`]: `1e-9 * (1 + max|M_ij|)`.
pub fn default_pd_tol(m: &Matrix) -> f64 {
    1e-9 * (1.0 + max_abs(m))
}

/// True iff `M - tol I` admits a Cholesky factorization.
pub fn is_pd(m: &Matrix, tol: f64) -> Result<bool> {
    if !m.is_square() {
        return Err(Error::DimensionMismatch(format!(
            "expected a square matrix, got {}x{}",
            m.nrows(),
            m.ncols()
        )));
    }
    check_symmetric(m)?;
    if m.iter().any(|v| !v.is_finite()) {
        return Ok(false);
    }
    let n = m.nrows();
    let shifted = symmetrize(m) - Matrix::identity(n, n) * tol;
    Ok(Cholesky::new(shifted).is_some())
}

/// [`is_pd`] with the default shift.
pub fn is_pd_default(m: &Matrix) -> Result<bool> {
    is_pd(m, default_pd_tol(m))
}

/// `gamma^2 I - P`
pub fn gamma_margin(p: &Matrix, gamma: f64) -> Matrix {
    let n = p.nrows();
    Matrix::identity(n, n) * (gamma * gamma) - p
}

/// Discrete-time plant `x+ = A x + B u + w` with stage cost `x'Qx + u'Ru`
/// and disturbance covariance `W`.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemModel {
    a: Matrix,
    b: Matrix,
    q: Matrix,
    r: Matrix,
    w: Matrix,
}

impl SystemModel {
    pub fn new(a: Matrix, b: Matrix, q: Matrix, r: Matrix, w: Matrix) -> Result<Self> {
        let n = a.nrows();
        if n == 0 || !a.is_square() {
            return Err(Error::DimensionMismatch(format!(
                "A must be square and nonempty, got {}x{}",
                a.nrows(),
                a.ncols()
            )));
        }
        if b.nrows() != n || b.ncols() == 0 {
            return Err(Error::DimensionMismatch(format!(
                "B must be {n}xm with m >= 1, got {}x{}",
                b.nrows(),
                b.ncols()
            )));
        }
        let m = b.ncols();
        for (name, mat, dim) in [("Q", &q, n), ("R", &r, m), ("W", &w, n)] {
            if mat.nrows() != dim || mat.ncols() != dim {
                return Err(Error::DimensionMismatch(format!(
                    "{name} must be {dim}x{dim}, got {}x{}",
                    mat.nrows(),
                    mat.ncols()
                )));
            }
        }
        for (name, mat) in [("A", &a), ("B", &b), ("Q", &q), ("R", &r), ("W", &w)] {
            if mat.iter().any(|v| !v.is_finite()) {
                return Err(Error::InvalidModel(format!("{name} has non-finite entries")));
            }
        }
        for (name, mat) in [("Q", &q), ("R", &r), ("W", &w)] {
            if asymmetry(mat) > SYMMETRY_TOL * (1.0 + max_abs(mat)) {
                return Err(Error::InvalidModel(format!("{name} is not symmetric")));
            }
        }
        let (q, r, w) = (symmetrize(&q), symmetrize(&r), symmetrize(&w));
        // PSD check: Q + tol I and W + tol I must factor.
        for (name, mat) in [("Q", &q), ("W", &w)] {
            if !is_pd(mat, -default_pd_tol(mat))? {
                return Err(Error::InvalidModel(format!("{name} is not positive semidefinite")));
            }
        }
        if !is_pd(&r, 0.0)? {
            return Err(Error::InvalidModel("R is not positive definite".into()));
        }
        if !is_pd(&q, 0.0)? {
            log::warn!("Q is only positive semidefinite; the LQ iteration starts from Q + {PSD_Q_SHIFT:e} I");
        }
        Ok(Self { a, b, q, r, w })
    }

    /// Scalar plant, handy for closed-form checks.
    pub fn scalar(a: f64, b: f64, q: f64, r: f64, w: f64) -> Result<Self> {
        let s = |v: f64| Matrix::from_element(1, 1, v);
        Self::new(s(a), s(b), s(q), s(r), s(w))
    }

    /// Same plant with a different disturbance covariance.
    pub fn with_w(&self, w: Matrix) -> Result<Self> {
        Self::new(self.a.clone(), self.b.clone(), self.q.clone(), self.r.clone(), w)
    }

    pub fn a(&self) -> &Matrix {
        &self.a
    }
    pub fn b(&self) -> &Matrix {
        &self.b
    }
    pub fn q(&self) -> &Matrix {
        &self.q
    }
    pub fn r(&self) -> &Matrix {
        &self.r
    }
    pub fn w(&self) -> &Matrix {
        &self.w
    }
    pub fn states(&self) -> usize {
        self.a.nrows()
    }
    pub fn inputs(&self) -> usize {
        self.b.ncols()
    }

    fn check_square(&self, p: &Matrix) -> Result<()> {
        let n = self.states();
        if p.nrows() != n || p.ncols() != n {
            return Err(Error::DimensionMismatch(format!(
                "expected {n}x{n} matrix, got {}x{}",
                p.nrows(),
                p.ncols()
            )));
        }
        Ok(())
    }

    /// Returns `(S, B'PA)` with `S = B'PB + R`.
    fn input_terms(&self, p: &Matrix) -> (Matrix, Matrix) {
        let bt_p = self.b.transpose() * p;
        let s = symmetrize(&(&bt_p * &self.b + &self.r));
        (s, bt_p * &self.a)
    }
}

fn solve_spd(s: &Matrix, rhs: &Matrix) -> Option<Matrix> {
    match Cholesky::new(s.clone()) {
        Some(ch) => Some(ch.solve(rhs)),
        None => s.clone().lu().solve(rhs),
    }
}

/// Returns `(K, Z)` for a given `P`: `K = -(B'PB+R)^-1 B'PA`,
/// `Z = A'PB (B'PB+R)^-1 B'PA`.
pub fn lq_gain_terms(model: &SystemModel, p: &Matrix) -> Result<(Matrix, Matrix)> {
    model.check_square(p)?;
    let (s, bt_pa) = model.input_terms(p);
    let x = solve_spd(&s, &bt_pa).ok_or(Error::InvalidModel("B'PB + R is singular".into()))?;
    let z = symmetrize(&(bt_pa.transpose() * &x));
    Ok((-x, z))
}

/// Solution of the LQ Riccati equation with its derived quantities.
#[derive(Debug, Clone, PartialEq)]
pub struct RiccatiData {
    pub p: Matrix,
    pub k: Matrix,
    pub z: Matrix,
    /// `tr(P W)`
    pub tr_pw: f64,
    pub iterations: usize,
}

impl RiccatiData {
    /// Derives `K`, `Z` and `tr(PW)` from a Riccati solution `P`.
    pub fn from_p(model: &SystemModel, p: Matrix, iterations: usize) -> Result<Self> {
        let (k, z) = lq_gain_terms(model, &p)?;
        let tr_pw = (&p * model.w()).trace();
        Ok(Self { p, k, z, tr_pw, iterations })
    }

    /// Max-abs residual of the Riccati fixed-point relation.
    pub fn residual(&self, model: &SystemModel) -> Result<f64> {
        Ok(max_abs(&(controlled_map(model, &self.p)? - &self.p)))
    }
}

/// Solves `P = A'PA + Q - A'PB(R+B'PB)^-1 B'PA` by fixed-point iteration
/// from `P0 = Q` (shifted by `1e-9 I` when `Q` is singular).
pub fn solve_dare(model: &SystemModel, tol: f64, max_iter: usize) -> Result<RiccatiData> {
    let n = model.states();
    let mut p = model.q.clone();
    if !is_pd(&p, 0.0)? {
        p += Matrix::identity(n, n) * PSD_Q_SHIFT;
    }
    for it in 1..=max_iter {
        let next = controlled_map(model, &p)?;
        if next.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonConvergence { what: "LQ Riccati iteration", iterations: it });
        }
        let delta = max_abs(&(&next - &p));
        p = next;
        if delta < tol {
            return RiccatiData::from_p(model, p, it);
        }
    }
    Err(Error::NonConvergence { what: "LQ Riccati iteration", iterations: max_iter })
}

/// The three Riccati-type maps.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Operator {
    /// `P + P (g^2 I - P)^-1 P`; needs `gamma`.
    Disturbance,
    /// `A'PA + Q - A'PB (B'PB + R)^-1 B'PA`
    Controlled,
    /// `A'PA + Q`
    OpenLoop,
}

/// Applies one of the maps; the result is symmetrized.
pub fn apply_operator(
    kind: Operator,
    model: &SystemModel,
    p: &Matrix,
    gamma: Option<f64>,
) -> Result<Matrix> {
    model.check_square(p)?;
    check_symmetric(p)?;
    match kind {
        Operator::Disturbance => {
            let gamma = gamma.ok_or_else(|| {
                Error::InvalidArgs("the disturbance map needs a gamma value".into())
            })?;
            disturbance_map(p, gamma)
        }
        Operator::Controlled => controlled_map(model, p),
        Operator::OpenLoop => open_loop_map(model, p),
    }
}

/// `P + P (g^2 I - P)^-1 P`, defined only where `g^2 I - P` is positive definite.
pub fn disturbance_map(p: &Matrix, gamma: f64) -> Result<Matrix> {
    let p = symmetrize(p);
    let margin = symmetrize(&gamma_margin(&p, gamma));
    if !is_pd_default(&margin)? {
        return Err(Error::SingularOrIndefinite { gamma });
    }
    let ch = Cholesky::new(margin).ok_or(Error::SingularOrIndefinite { gamma })?;
    let x = ch.solve(&p);
    Ok(symmetrize(&(&p + &p * x)))
}

/// Disturbance map needing only invertibility of `g^2 I - P`.
pub(crate) fn disturbance_map_indefinite(p: &Matrix, gamma: f64) -> Option<Matrix> {
    let margin = gamma_margin(p, gamma);
    let x = margin.lu().solve(p)?;
    Some(symmetrize(&(p + p * x)))
}

/// `A'PA + Q - A'PB (B'PB + R)^-1 B'PA`
pub fn controlled_map(model: &SystemModel, p: &Matrix) -> Result<Matrix> {
    let (_, z) = lq_gain_terms(model, p)?;
    Ok(symmetrize(&(model.a.transpose() * p * &model.a + &model.q - z)))
}

/// `A'PA + Q`
pub fn open_loop_map(model: &SystemModel, p: &Matrix) -> Result<Matrix> {
    model.check_square(p)?;
    Ok(symmetrize(&(model.a.transpose() * p * &model.a + &model.q)))
}

/// Outcome of the game Riccati iteration `P <- Fc(Fa(P))` from `P0 = 0`.
#[derive(Debug, Clone, PartialEq)]
pub enum GameRiccati {
    /// Converged with `g^2 I - P` positive definite along the whole run.
    Feasible { p_bar: Matrix, iterations: usize },
    /// `g^2 I - P_t` lost positive definiteness at iterate `t`.
    Infeasible { iterate: usize },
}

impl GameRiccati {
    pub fn p_bar(&self) -> Option<&Matrix> {
        match self {
            GameRiccati::Feasible { p_bar, .. } => Some(p_bar),
            GameRiccati::Infeasible { .. } => None,
        }
    }
}

/// Fixed point of `P <- Fc(Fa(P))` started at zero.
pub fn solve_p_gamma(
    model: &SystemModel,
    gamma: f64,
    tol: f64,
    max_iter: usize,
) -> Result<GameRiccati> {
    // negated so NaN is rejected
    #[allow(clippy::neg_cmp_op_on_partial_ord)]
    if !(gamma > 0.0) || !gamma.is_finite() {
        return Err(Error::InvalidArgs(format!("gamma must be positive, got {gamma}")));
    }
    let n = model.states();
    let mut p = Matrix::zeros(n, n);
    for it in 0..max_iter {
        if !is_pd_default(&gamma_margin(&p, gamma))? {
            return Ok(GameRiccati::Infeasible { iterate: it });
        }
        let next = controlled_map(model, &disturbance_map(&p, gamma)?)?;
        let delta = max_abs(&(&next - &p));
        p = next;
        if delta < tol {
            if !is_pd_default(&gamma_margin(&p, gamma))? {
                return Ok(GameRiccati::Infeasible { iterate: it + 1 });
            }
            return Ok(GameRiccati::Feasible { p_bar: p, iterations: it + 1 });
        }
    }
    Err(Error::NonConvergence { what: "game Riccati iteration", iterations: max_iter })
}

/// First `steps + 1` iterates of `P <- Fc(Fa(P))` from zero, stopping early
/// when `g^2 I - P_t` stops being positive definite.
pub fn p_gamma_iterates(model: &SystemModel, gamma: f64, steps: usize) -> Result<Vec<Matrix>> {
    let n = model.states();
    let mut out = vec![Matrix::zeros(n, n)];
    for _ in 0..steps {
        let last = out.last().expect("nonempty");
        if !is_pd_default(&gamma_margin(last, gamma))? {
            break;
        }
        let next = controlled_map(model, &disturbance_map(last, gamma)?)?;
        out.push(next);
    }
    Ok(out)
}
