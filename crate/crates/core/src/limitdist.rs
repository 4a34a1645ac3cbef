//! Limit laws of the normalized collection time.
//!
//! Growing sequences: `T_m(N) / A_N` converges to the law with CDF
//! `F(s) = prod_{j>=1} P(m, a_j s)`. Decaying sequences: `(T_m(N) - b_N) / k_N`
//! converges to a Gumbel law, shifted for slowly decaying weights.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::moments::growing_tail_envelope;
use crate::seqmodel::{build_model, compensated_sum, require_case, Case, CouponModel, SequenceFamily};
use crate::special::{ln_factorial, ErlangKernel};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "law", rename_all = "kebab-case")]
pub enum Law {
    /// `exp(-e^{-y} / (m-1)!)`
    Gumbel { m: u32 },
    /// `exp(-e^{-(y-p)} / ((p+1) (m-1)!))`
    SlowDecayGumbel { m: u32, p: f64 },
    /// `prod_j P(m, a_j s)`; see [`case1_limit_cdf`].
    #[serde(rename = "case1-fixed-point")]
    CaseIFixedPoint { m: u32 },
}

/// Location `b` and scale `k` with the limit law of `(T - b) / k`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Normalization {
    pub b: f64,
    pub k: f64,
    #[serde(flatten)]
    pub law: Law,
}

/// CDF of a Gumbel-type limit law.
pub fn limit_cdf(law: &Law, y: f64) -> Result<f64> {
    match *law {
        Law::Gumbel { m } => {
            check_m(m)?;
            Ok((-(-y - ln_factorial(m - 1)).exp()).exp())
        }
        Law::SlowDecayGumbel { m, p } => {
            check_m(m)?;
            if !(p.is_finite() && p >= 0.0) {
                return invalid(format!("slow-decay shift p must be nonnegative, got {p}"));
            }
            Ok((-(-(y - p) - (p + 1.0).ln() - ln_factorial(m - 1)).exp()).exp())
        }
        Law::CaseIFixedPoint { .. } => Err(Error::Unsupported(
            "the growing-sequence limit law depends on the sequence; use case1_limit_cdf".into(),
        )),
    }
}

fn check_m(m: u32) -> Result<()> {
    if m == 0 {
        invalid("the number of sets m must be at least 1")
    } else {
        Ok(())
    }
}

/// Centering and scaling under which `T_m(N)` has a Gumbel limit.
pub fn gumbel_normalization(family: &SequenceFamily, m: u32, n: usize) -> Result<Normalization> {
    check_m(m)?;
    if let Ok(label) = crate::seqmodel::classify(family) {
        if label.value == Case::CaseI {
            return Err(Error::Unsupported(format!(
                "{} is Case I: T/A_N has a non-Gumbel limit, use case1_limit_cdf",
                family.name()
            )));
        }
    }
    require_case(family, Case::CaseII)?;
    if n < 2 {
        return invalid(format!("the Gumbel normalization needs n >= 2, got {n}"));
    }
    let nf = n as f64;
    let mm = m as f64;
    match family {
        SequenceFamily::Zipf { p } => {
            let k = build_model(family, n)?.a_sum() * nf.powf(*p);
            let b = k * (nf.ln() + (mm - 2.0) * nf.ln().ln() - p.ln());
            Ok(Normalization { b, k, law: Law::Gumbel { m } })
        }
        SequenceFamily::Constant | SequenceFamily::LogPower { .. } => {
            let b = nf * nf.ln() + (mm - 1.0) * nf * nf.ln().ln();
            let law = match family {
                SequenceFamily::LogPower { p } => Law::SlowDecayGumbel { m, p: *p },
                _ => Law::Gumbel { m },
            };
            Ok(Normalization { b, k: nf, law })
        }
        other => Err(Error::Unsupported(format!(
            "no Gumbel normalization is available for the {} family",
            other.name()
        ))),
    }
}

/// `b = 0, k = A_N` for a growing sequence.
pub fn case1_normalization(family: &SequenceFamily, m: u32, n: usize) -> Result<Normalization> {
    check_m(m)?;
    require_case(family, Case::CaseI)?;
    Ok(Normalization {
        b: 0.0,
        k: build_model(family, n)?.a_sum(),
        law: Law::CaseIFixedPoint { m },
    })
}

/// `(b^{m-1} / (m-1)!) sum_j p_j^{m-1} exp(-p_j (b + y k))`.
///
/// Tends to `e^{-y} / (m-1)!` exactly when the normalization yields the
/// Gumbel limit of the `m`-set collector.
pub fn lambda_functional(model: &CouponModel, m: u32, b: f64, k: f64, y: f64) -> Result<f64> {
    check_m(m)?;
    let x = b + y * k;
    if !(x > 0.0 && x.is_finite()) {
        return invalid(format!("b + y k must be positive, got {x}"));
    }
    let e = (m - 1) as f64;
    let lead = if m == 1 { 0.0 } else { e * b.ln() } - ln_factorial(m - 1);
    Ok(compensated_sum(
        model.probs().iter().map(|&p| (lead + e * p.ln() - p * x).exp()),
    ))
}

const MAX_TERMS: usize = 1 << 26;

/// `F(s) = prod_{j>=1} P(m, a_j s)` for a growing sequence, within `tol`.
///
/// The product is truncated at `J` weights with `J` doubled until the bound
/// on `sum_{j>J} Q(m, a_j s)`, which controls the omitted factors, is at
/// most `tol`.
pub fn case1_limit_cdf(family: &SequenceFamily, m: u32, s: f64, tol: f64) -> Result<f64> {
    require_case(family, Case::CaseI)?;
    if !matches!(family, SequenceFamily::Power { .. } | SequenceFamily::ExpGrowth { .. }) {
        return Err(Error::Unsupported(format!(
            "{} has no known infinite tail; the limit law needs a parametric growing family",
            family.name()
        )));
    }
    if !(tol.is_finite() && tol > 0.0) {
        return invalid(format!("tolerance must be positive and finite, got {tol}"));
    }
    if s.is_nan() || s < 0.0 {
        return invalid(format!("s must be nonnegative, got {s}"));
    }
    if s == 0.0 {
        return Ok(0.0);
    }
    let kernel = ErlangKernel::new(m)?;
    let mut terms = 16usize;
    while growing_tail_envelope(family, m, terms, s) > tol {
        terms *= 2;
        if terms > MAX_TERMS {
            return Err(Error::Budget(format!(
                "more than {MAX_TERMS} factors needed at s = {s}"
            )));
        }
    }
    let ln: f64 = (1..=terms).map(|j| kernel.ln_cdf(family.weight(j) * s)).sum();
    Ok(ln.exp())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::special::gumbel_cdf;

    #[test]
    fn limit_cdf_examples() {
        let g = limit_cdf(&Law::Gumbel { m: 1 }, 0.0).unwrap();
        assert!((g - (-1.0f64).exp()).abs() < 1e-15);
        let s = limit_cdf(&Law::SlowDecayGumbel { m: 1, p: 1.0 }, 1.0).unwrap();
        assert!((s - (-0.5f64).exp()).abs() < 1e-15);
        for m in 1..=5 {
            for y in [-2.0, 0.0, 0.7, 3.0] {
                let a = limit_cdf(&Law::Gumbel { m }, y).unwrap();
                let b = limit_cdf(&Law::SlowDecayGumbel { m, p: 0.0 }, y).unwrap();
                assert!((a - b).abs() < 1e-15);
            }
        }
        assert!(limit_cdf(&Law::CaseIFixedPoint { m: 1 }, 0.0).is_err());
    }

    #[test]
    fn limit_cdfs_are_cdfs() {
        for m in 1..=6 {
            for law in [
                Law::Gumbel { m },
                Law::SlowDecayGumbel { m, p: 0.5 },
                Law::SlowDecayGumbel { m, p: 1.0 },
                Law::SlowDecayGumbel { m, p: 2.0 },
            ] {
                let mut prev = 0.0;
                for i in -200..=200 {
                    let v = limit_cdf(&law, i as f64 * 0.1).unwrap();
                    assert!(v >= prev);
                    prev = v;
                }
                assert!(limit_cdf(&law, -50.0).unwrap() < 1e-12);
                assert!(limit_cdf(&law, 60.0).unwrap() > 1.0 - 1e-12);
            }
        }
    }

    #[test]
    fn gumbel_location_identity() {
        for m in 1..=6 {
            for y in [-3.0, -0.5, 0.0, 1.0, 4.0] {
                let a = limit_cdf(&Law::Gumbel { m }, y).unwrap();
                let shifted = gumbel_cdf(y + ln_factorial(m - 1), 1);
                assert!((a - shifted).abs() < 1e-15);
                assert!((a - gumbel_cdf(y, m)).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn normalization_examples() {
        let z = gumbel_normalization(&SequenceFamily::Zipf { p: 0.5 }, 1, 100).unwrap();
        let a = build_model(&SequenceFamily::Zipf { p: 0.5 }, 100).unwrap().a_sum();
        assert!((z.k - a * 10.0).abs() < 1e-10);
        let b = a * 10.0 * (100f64.ln() - 100f64.ln().ln() - 0.5f64.ln());
        assert!((z.b - b).abs() < 1e-9);
        let c = gumbel_normalization(&SequenceFamily::Constant, 2, 10_000).unwrap();
        let want = 1e4 * 1e4f64.ln() + 1e4 * 1e4f64.ln().ln();
        assert!((c.b - want).abs() < 1e-8);
        assert_eq!(c.k, 1e4);
        let lp = gumbel_normalization(&SequenceFamily::LogPower { p: 1.0 }, 1, 1000).unwrap();
        assert_eq!(lp.law, Law::SlowDecayGumbel { m: 1, p: 1.0 });
        assert!(matches!(
            gumbel_normalization(&SequenceFamily::Power { p: 2.0 }, 1, 10),
            Err(Error::Unsupported(_))
        ));
    }

    #[test]
    fn scale_is_small_against_location() {
        let fam = SequenceFamily::Zipf { p: 0.5 };
        let mut prev = f64::INFINITY;
        for n in [100, 1000, 10_000, 100_000] {
            let z = gumbel_normalization(&fam, 2, n).unwrap();
            assert!(z.k > 0.0);
            let r = z.k / z.b;
            assert!(r < prev);
            prev = r;
        }
    }

    #[test]
    fn normalization_json_shape() {
        let z = gumbel_normalization(&SequenceFamily::Constant, 2, 100).unwrap();
        let v = serde_json::to_value(z).unwrap();
        assert_eq!(v["law"], "gumbel");
        assert_eq!(v["m"], 2);
        assert!(v["b"].is_number() && v["k"].is_number());
        let back: Normalization = serde_json::from_value(v).unwrap();
        assert_eq!(back, z);
    }

    #[test]
    fn lambda_examples() {
        let n = 500;
        let model = build_model(&SequenceFamily::Constant, n).unwrap();
        let nf = n as f64;
        for y in [-1.0, 0.0, 2.5] {
            let l = lambda_functional(&model, 1, nf * nf.ln(), nf, y).unwrap();
            assert!((l - (-y).exp()).abs() < 1e-12);
        }
        let big = lambda_functional(&model, 2, nf * nf.ln(), nf, 500.0).unwrap();
        assert!(big < 1e-100);
        assert!(lambda_functional(&model, 1, -10.0, 1.0, 0.0).is_err());
    }

    #[test]
    fn lambda_decreases_in_y() {
        let fam = SequenceFamily::Zipf { p: 0.5 };
        let model = build_model(&fam, 300).unwrap();
        let z = gumbel_normalization(&fam, 2, 300).unwrap();
        let mut prev = f64::INFINITY;
        for i in -20..40 {
            let v = lambda_functional(&model, 2, z.b, z.k, i as f64 * 0.25).unwrap();
            assert!(v < prev);
            prev = v;
        }
    }

    #[test]
    fn lambda_near_one_for_zipf() {
        let fam = SequenceFamily::Zipf { p: 0.5 };
        let n = 10_000;
        let model = build_model(&fam, n).unwrap();
        let z = gumbel_normalization(&fam, 1, n).unwrap();
        let v = lambda_functional(&model, 1, z.b, z.k, 0.0).unwrap();
        assert!((v - 1.0).abs() < 0.15);
        let model3 = build_model(&fam, 1000).unwrap();
        let z3 = gumbel_normalization(&fam, 1, 1000).unwrap();
        let v3 = lambda_functional(&model3, 1, z3.b, z3.k, 0.0).unwrap();
        assert!((v - 1.0).abs() < (v3 - 1.0).abs());
    }

    #[test]
    fn case1_cdf_examples() {
        let fam = SequenceFamily::Power { p: 2.0 };
        assert_eq!(case1_limit_cdf(&fam, 1, 0.0, 1e-10).unwrap(), 0.0);
        assert!(case1_limit_cdf(&fam, 1, 40.0, 1e-10).unwrap() > 1.0 - 1e-12);
        let mut prev = 0.0;
        for i in 1..60 {
            let v = case1_limit_cdf(&fam, 2, i as f64 * 0.1, 1e-10).unwrap();
            assert!(v >= prev && v <= 1.0);
            prev = v;
        }
        assert!(matches!(
            case1_limit_cdf(&SequenceFamily::Zipf { p: 1.0 }, 1, 1.0, 1e-8),
            Err(Error::Dichotomy(_))
        ));
    }

    #[test]
    fn case1_cdf_is_stable_under_more_factors() {
        let fam = SequenceFamily::Power { p: 2.0 };
        let tol = 1e-10;
        let v = case1_limit_cdf(&fam, 1, 1.0, tol).unwrap();
        let kernel = ErlangKernel::new(1).unwrap();
        let mut terms = 16;
        while growing_tail_envelope(&fam, 1, terms, 1.0) > tol {
            terms *= 2;
        }
        let doubled: f64 = (1..=2 * terms).map(|j| kernel.ln_cdf(fam.weight(j))).sum::<f64>().exp();
        assert!((v - doubled).abs() <= 2.0 * tol);
    }
}
