//! Optimal periodic state-sampling schedules for discrete-time linear
//! systems under LQ (h2) and worst-case (h-infinity) performance.
//!
//! * [`matops`]: plant model, Riccati solvers, positive definiteness tests.
//! * [`schedule`]: periodic schedules as interval lists or indicator strings.
//! * [`h2`]: interval costs, schedule cost, balancing and optimal schedules.
//! * [`hinf`]: attenuation bounds by bisection, block-matrix cross-check.
//! * [`simulate`]: Monte Carlo and algebraic cross-checks.
//! * [`cli`]: the `schedopt` command-line front end.

pub mod cli;
pub mod error;
pub mod h2;
pub mod hinf;
pub mod matops;
pub mod model_file;
pub mod schedule;
pub mod simulate;
pub mod table;

pub use error::{Error, Result};
pub use h2::{BetaTable, CurvePoint};
pub use hinf::{BisectionOptions, GammaCertificate};
pub use matops::{Matrix, RiccatiData, SystemModel};
pub use model_file::ModelFile;
pub use schedule::{Rational, Schedule};
pub use simulate::SimReport;

/// Rationals serialize as `"n/d"`.
pub(crate) fn serialize_ratio<S: serde::Serializer>(r: &Rational, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(&format_ratio(r))
}

pub(crate) fn serialize_schedule<S: serde::Serializer>(
    sched: &Schedule,
    s: S,
) -> std::result::Result<S::Ok, S::Error> {
    use serde::Serialize;
    sched.intervals().serialize(s)
}

pub fn format_ratio(r: &Rational) -> String {
    format!("{}/{}", r.numer(), r.denom())
}
