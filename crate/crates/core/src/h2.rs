//! Average quadratic (h2) cost of periodic sampling schedules.
//!
//! The cost of a schedule is `tr(PW) + (1/h) * sum_l beta(tau_l)` where the
//! interval cost `beta(p) = tr(Z * sum_{s=1}^{p-1} Y(s))` and
//! `Y(s) = sum_{r=0}^{s-1} A^r W A'^r` is the covariance of the open-loop
//! prediction error `s` steps after a sample. `beta` is convex in `p`, which
//! is what makes balanced interval lists optimal.

use std::collections::BTreeSet;
use std::sync::RwLock;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::matops::{Matrix, RiccatiData, SystemModel};
use crate::schedule::{Rational, Schedule};

/// Largest interval length the cost table will grow to.
pub const MAX_INTERVAL: usize = 1_000_000;
/// Largest period accepted by the brute-force oracle.
pub const BRUTE_FORCE_MAX_PERIOD: usize = 12;

#[derive(Debug, Clone)]
struct BetaCache {
    /// `values[p - 1] = beta(p)`
    values: Vec<f64>,
    /// `Y(p)` for `p = values.len()`
    y: Matrix,
    /// `A^p W A'^p` for `p = values.len()`
    term: Matrix,
}

/// Interval cost table for one model, grown on demand.
///
/// Readers share the cache through an `RwLock`; an extension recomputes from
/// the current end of the table, so values never depend on call order.
#[derive(Debug)]
pub struct BetaTable {
    a: Matrix,
    z: Matrix,
    tr_pw: f64,
    cache: RwLock<BetaCache>,
}

impl BetaTable {
    pub fn new(model: &SystemModel, riccati: &RiccatiData) -> Self {
        let a = model.a().clone();
        let w = model.w().clone();
        let term = &a * &w * a.transpose();
        Self {
            a,
            z: riccati.z.clone(),
            tr_pw: riccati.tr_pw,
            cache: RwLock::new(BetaCache { values: vec![0.0], y: w, term }),
        }
    }

    /// `tr(PW)`, the cost of sampling at every step.
    pub fn tr_pw(&self) -> f64 {
        self.tr_pw
    }

    /// `beta(p)` for `p >= 1`.
    pub fn beta(&self, p: usize) -> Result<f64> {
        if p == 0 {
            return Err(Error::InvalidArgs("interval length must be at least 1".into()));
        }
        if let Some(v) = self.cache.read().expect("beta cache poisoned").values.get(p - 1) {
            return Ok(*v);
        }
        if p > MAX_INTERVAL {
            return Err(Error::TooLarge(format!("interval {p} exceeds {MAX_INTERVAL}")));
        }
        let mut cache = self.cache.write().expect("beta cache poisoned");
        while cache.values.len() < p {
            let len = cache.values.len();
            // beta(len + 1) = beta(len) + tr(Z Y(len))
            let next = cache.values[len - 1] + (&self.z * &cache.y).trace();
            if !next.is_finite() {
                return Err(Error::Overflow { p: len + 1 });
            }
            cache.values.push(next);
            let y = &cache.y + &cache.term;
            let term = &self.a * &cache.term * self.a.transpose();
            cache.y = y;
            cache.term = term;
        }
        Ok(cache.values[p - 1])
    }

    /// `beta(1..=p_max)`
    pub fn values(&self, p_max: usize) -> Result<Vec<f64>> {
        self.beta(p_max.max(1))?;
        let cache = self.cache.read().expect("beta cache poisoned");
        Ok(cache.values[..p_max].to_vec())
    }

    /// Average cost of a schedule.
    ///
    /// Intervals are summed in sorted order so the value depends only on the
    /// interval multiset, bit for bit.
    pub fn j2(&self, schedule: &Schedule) -> Result<f64> {
        let sorted = schedule.canonicalize();
        let mut total = 0.0;
        for &tau in sorted.intervals().iter().rev() {
            total += self.beta(tau)?;
        }
        Ok(self.tr_pw + total / schedule.period() as f64)
    }

    /// Greedy balancing with the cost after every step; the first entry is
    /// the starting schedule.
    pub fn greedy_trace(&self, schedule: &Schedule) -> Result<Vec<GreedyStep>> {
        let mut steps = vec![GreedyStep { schedule: schedule.clone(), j2: self.j2(schedule)? }];
        let mut current = schedule.clone();
        while let Some(next) = greedy_step(&current)? {
            let j2 = self.j2(&next)?;
            steps.push(GreedyStep { schedule: next.clone(), j2 });
            current = next;
        }
        Ok(steps)
    }

    /// Optimal cost at each rate `m/h`, via the piecewise affine formula.
    pub fn h2_curve(&self, h_max: usize, rates: &[Rational]) -> Result<Vec<CurvePoint>> {
        if h_max == 0 {
            return Err(Error::InvalidArgs("h_max must be at least 1".into()));
        }
        let lowest = Rational::new(1, h_max as u64);
        rates
            .iter()
            .map(|&rate| {
                if rate < lowest || rate > Rational::from_integer(1) {
                    return Err(Error::RateOutOfRange(format!("{}/{}", rate.numer(), rate.denom())));
                }
                let h1 = rate.recip().to_integer();
                let left = rate * (h1 + 1) - 1;
                let right = Rational::from_integer(1) - rate * h1;
                let value = self.tr_pw
                    + self.beta(h1 as usize)? * ratio_to_f64(left)
                    + self.beta(h1 as usize + 1)? * ratio_to_f64(right);
                Ok(CurvePoint { rate, value })
            })
            .collect()
    }

    /// The curve's breakpoints: rates `1/h` for `h = 1..=h_max`.
    pub fn h2_breakpoints(&self, h_max: usize) -> Result<Vec<CurvePoint>> {
        let rates: Vec<Rational> = (1..=h_max as u64).map(|h| Rational::new(1, h)).collect();
        self.h2_curve(h_max, &rates)
    }

    /// Exhaustive search over compositions of `h` into `m` parts, one per
    /// rotation class.
    pub fn brute_force(&self, h: usize, m: usize) -> Result<BruteForce> {
        if h > BRUTE_FORCE_MAX_PERIOD {
            return Err(Error::TooLarge(format!(
                "period {h} exceeds the enumeration limit {BRUTE_FORCE_MAX_PERIOD}"
            )));
        }
        check_h_m(h, m)?;
        let mut classes = BTreeSet::new();
        for comp in compositions(h, m) {
            classes.insert(min_rotation(&comp));
        }
        let mut scored = Vec::with_capacity(classes.len());
        for comp in classes {
            let s = Schedule::new(comp)?;
            let cost = self.j2(&s)?;
            scored.push((s, cost));
        }
        let min_cost = scored.iter().map(|(_, c)| *c).fold(f64::INFINITY, f64::min);
        let slack = 1e-12 * min_cost.abs();
        let evaluated = scored.len();
        let argmins = scored
            .into_iter()
            .filter(|(_, c)| *c <= min_cost + slack)
            .map(|(s, _)| s)
            .collect();
        Ok(BruteForce { min_cost, argmins, evaluated })
    }
}

fn ratio_to_f64(r: Rational) -> f64 {
    *r.numer() as f64 / *r.denom() as f64
}

/// `beta(p)` for a single model (builds a throwaway table).
pub fn beta(model: &SystemModel, riccati: &RiccatiData, p: usize) -> Result<f64> {
    BetaTable::new(model, riccati).beta(p)
}

/// Average cost of `schedule` under the optimal controller.
pub fn j2(model: &SystemModel, riccati: &RiccatiData, schedule: &Schedule) -> Result<f64> {
    BetaTable::new(model, riccati).j2(schedule)
}

/// One point of the optimal cost versus average rate curve.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CurvePoint {
    #[serde(serialize_with = "crate::serialize_ratio")]
    pub rate: Rational,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GreedyStep {
    pub schedule: Schedule,
    pub j2: f64,
}

#[derive(Debug, Clone)]
pub struct BruteForce {
    pub min_cost: f64,
    /// Every minimizing composition, one representative per rotation.
    pub argmins: Vec<Schedule>,
    /// Number of rotation classes evaluated.
    pub evaluated: usize,
}

/// Moves `p` steps from interval `i` to interval `l` (requires
/// `tau_i > tau_l` and `p <= (tau_i - tau_l) / 2`). Never raises the cost.
pub fn improve_step(schedule: &Schedule, i: usize, l: usize, p: usize) -> Result<Schedule> {
    let iv = schedule.intervals();
    if i >= iv.len() || l >= iv.len() {
        return Err(Error::InvalidArgs(format!(
            "indices ({i}, {l}) out of range for {} intervals",
            iv.len()
        )));
    }
    let (tau_i, tau_l) = (iv[i], iv[l]);
    if i == l || tau_i <= tau_l {
        return Err(Error::InvalidPair { tau_i, tau_l });
    }
    let max = (tau_i - tau_l) / 2;
    if p > max {
        return Err(Error::POutOfRange { p, max });
    }
    let mut next = iv.to_vec();
    next[i] -= p;
    next[l] += p;
    Schedule::new(next)
}

/// One greedy move (largest interval gives the maximal admissible amount to
/// the smallest; lowest index wins ties), or `None` once balanced.
fn greedy_step(schedule: &Schedule) -> Result<Option<Schedule>> {
    let iv = schedule.intervals();
    let (mut imax, mut imin) = (0, 0);
    for (idx, &t) in iv.iter().enumerate() {
        if t > iv[imax] {
            imax = idx;
        }
        if t < iv[imin] {
            imin = idx;
        }
    }
    if iv[imax] - iv[imin] <= 1 {
        return Ok(None);
    }
    let p = (iv[imax] - iv[imin]) / 2;
    improve_step(schedule, imax, imin, p).map(Some)
}

/// Repeated greedy balancing until every interval is `floor(h/m)` or
/// `ceil(h/m)`.
pub fn greedy_optimize(schedule: &Schedule) -> Result<Schedule> {
    let mut current = schedule.clone();
    while let Some(next) = greedy_step(&current)? {
        current = next;
    }
    Ok(current)
}

fn check_h_m(h: usize, m: usize) -> Result<()> {
    if m == 0 || m > h {
        return Err(Error::InvalidArgs(format!("need 1 <= m <= h, got h = {h}, m = {m}")));
    }
    Ok(())
}

/// The balanced interval multiset: `m1` copies of `floor(h/m)` followed by
/// `m2` copies of `ceil(h/m)`.
pub fn optimal_schedule(h: usize, m: usize) -> Result<Schedule> {
    check_h_m(h, m)?;
    let short = h / m;
    let long_count = h - m * short;
    let mut intervals = vec![short; m - long_count];
    intervals.extend(std::iter::repeat_n(short + 1, long_count));
    Schedule::new(intervals)
}

/// All ordered lists of `m` positive integers summing to `h`.
pub fn compositions(h: usize, m: usize) -> Vec<Vec<usize>> {
    fn rec(rest: usize, parts: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if parts == 1 {
            cur.push(rest);
            out.push(cur.clone());
            cur.pop();
            return;
        }
        for first in 1..=rest - (parts - 1) {
            cur.push(first);
            rec(rest - first, parts - 1, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    if m >= 1 && m <= h {
        rec(h, m, &mut Vec::with_capacity(m), &mut out);
    }
    out
}

fn min_rotation(v: &[usize]) -> Vec<usize> {
    (0..v.len())
        .map(|k| {
            let mut r = v.to_vec();
            r.rotate_left(k);
            r
        })
        .min()
        .expect("nonempty composition")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matops::{solve_dare, DEFAULT_MAX_ITER, DEFAULT_TOL};

    fn golden() -> (SystemModel, RiccatiData) {
        let m = SystemModel::scalar(1.0, 1.0, 1.0, 1.0, 1.0).unwrap();
        let r = solve_dare(&m, DEFAULT_TOL, DEFAULT_MAX_ITER).unwrap();
        (m, r)
    }

    fn sched(v: &[usize]) -> Schedule {
        Schedule::new(v.to_vec()).unwrap()
    }

    #[test]
    fn beta_scalar_closed_form() {
        let (m, r) = golden();
        let t = BetaTable::new(&m, &r);
        assert_eq!(t.beta(1).unwrap(), 0.0);
        assert!((t.beta(4).unwrap() - 6.0).abs() < 1e-9);
        assert_eq!(t.beta(0).unwrap_err().kind(), "InvalidArgs");
    }

    #[test]
    fn j2_scalar() {
        let (m, r) = golden();
        let phi = (1.0 + 5f64.sqrt()) / 2.0;
        let v = j2(&m, &r, &sched(&[5, 1])).unwrap();
        assert!((v - (phi + 10.0 / 6.0)).abs() < 1e-9);
    }

    #[test]
    fn j2_without_disturbance_is_zero() {
        let m = SystemModel::scalar(1.0, 1.0, 1.0, 1.0, 0.0).unwrap();
        let r = solve_dare(&m, DEFAULT_TOL, DEFAULT_MAX_ITER).unwrap();
        assert_eq!(j2(&m, &r, &sched(&[4, 2, 7])).unwrap(), 0.0);
    }

    #[test]
    fn overflow_is_reported() {
        let m = SystemModel::scalar(50.0, 1.0, 1.0, 1.0, 1.0).unwrap();
        let r = solve_dare(&m, DEFAULT_TOL, DEFAULT_MAX_ITER).unwrap();
        let err = beta(&m, &r, 400).unwrap_err();
        assert_eq!(err.kind(), "Overflow");
    }

    #[test]
    fn improve_step_examples() {
        let (m, r) = golden();
        let t = BetaTable::new(&m, &r);
        let s = sched(&[5, 1]);
        let better = improve_step(&s, 0, 1, 2).unwrap();
        assert_eq!(better.intervals(), &[3, 3]);
        let drop = t.j2(&s).unwrap() - t.j2(&better).unwrap();
        assert!((drop - 2.0 / 3.0).abs() < 1e-9);

        let even = sched(&[3, 3]);
        assert_eq!(improve_step(&even, 0, 1, 0).unwrap_err().kind(), "InvalidPair");
        assert_eq!(greedy_optimize(&even).unwrap().intervals(), &[3, 3]);

        let s = sched(&[2, 2, 3, 3]);
        assert_eq!(improve_step(&s, 2, 0, 0).unwrap().intervals(), &[2, 2, 3, 3]);
        assert_eq!(improve_step(&s, 2, 0, 1).unwrap_err().kind(), "POutOfRange");
    }

    #[test]
    fn greedy_examples() {
        assert_eq!(greedy_optimize(&sched(&[5, 1])).unwrap().intervals(), &[3, 3]);
        assert_eq!(greedy_optimize(&sched(&[1, 1])).unwrap().intervals(), &[1, 1]);

        let (m, r) = golden();
        let trace = BetaTable::new(&m, &r).greedy_trace(&sched(&[6, 1, 2])).unwrap();
        let lists: Vec<Vec<usize>> = trace.iter().map(|s| s.schedule.intervals().to_vec()).collect();
        assert_eq!(lists, vec![vec![6, 1, 2], vec![4, 3, 2], vec![3, 3, 3]]);
        assert!(trace.windows(2).all(|w| w[1].j2 <= w[0].j2));
    }

    #[test]
    fn optimal_schedule_examples() {
        assert_eq!(optimal_schedule(10, 4).unwrap().intervals(), &[2, 2, 3, 3]);
        assert_eq!(optimal_schedule(6, 2).unwrap().intervals(), &[3, 3]);
        assert_eq!(optimal_schedule(7, 3).unwrap().intervals(), &[2, 2, 3]);
        assert_eq!(optimal_schedule(3, 4).unwrap_err().kind(), "InvalidArgs");
        assert_eq!(optimal_schedule(3, 0).unwrap_err().kind(), "InvalidArgs");
    }

    #[test]
    fn curve_examples() {
        let (m, r) = golden();
        let t = BetaTable::new(&m, &r);
        let phi = (1.0 + 5f64.sqrt()) / 2.0;
        let pts = t.h2_curve(3, &[Rational::new(1, 1), Rational::new(2, 3)]).unwrap();
        assert_eq!(pts[0].value, r.tr_pw);
        assert!((pts[1].value - (phi + 1.0 / 3.0)).abs() < 1e-9);
        assert_eq!(t.h2_curve(3, &[Rational::new(1, 4)]).unwrap_err().kind(), "RateOutOfRange");
    }

    #[test]
    fn compositions_count() {
        // C(h-1, m-1)
        assert_eq!(compositions(10, 4).len(), 84);
        assert_eq!(compositions(3, 3), vec![vec![1, 1, 1]]);
        assert!(compositions(2, 3).is_empty());
    }

    #[test]
    fn brute_force_examples() {
        let (m, r) = golden();
        let t = BetaTable::new(&m, &r);
        let bf = t.brute_force(4, 2).unwrap();
        assert_eq!(bf.argmins, vec![sched(&[2, 2])]);
        assert_eq!(bf.evaluated, 2);
        let bf = t.brute_force(3, 3).unwrap();
        assert_eq!(bf.argmins, vec![sched(&[1, 1, 1])]);
        assert_eq!(t.brute_force(13, 2).unwrap_err().kind(), "TooLarge");
    }

    #[test]
    fn brute_force_keeps_rotation_distinct_optima() {
        let (m, r) = golden();
        let bf = BetaTable::new(&m, &r).brute_force(10, 4).unwrap();
        assert!(bf.argmins.iter().all(|s| *s == sched(&[2, 2, 3, 3])));
        // 2233 and 2323 are not rotations of each other
        assert_eq!(bf.argmins.len(), 2);
    }
}
