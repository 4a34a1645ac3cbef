//! Moments, asymptotic expansions and limit laws of the time needed to
//! collect `m` complete sets of `N` coupons drawn with unequal probabilities.

pub mod asymptotics;
pub mod error;
pub mod limitdist;
pub mod moments;
pub mod quadrature;
pub mod seqmodel;
pub mod simulate;
pub mod special;

pub use error::{Error, Result};
pub use limitdist::{Law, Normalization};
pub use moments::{Method, MomentEstimate};
pub use seqmodel::{build_model, classify, Case, CaseLabel, CouponModel, SequenceFamily, TailHint};
pub use simulate::{EmpiricalDistribution, KsResult};
