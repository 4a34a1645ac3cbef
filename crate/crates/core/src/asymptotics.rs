//! Closed-form asymptotic expansions of the moments of `T_m(N)`.
//!
//! Growing (Case I) sequences scale like `A_N^r L_r(alpha; m)`. Decaying
//! (Case II) sequences `a_j = 1 / f(j)` expand in the small parameter
//! `delta = 1 / ln(f(N) / f'(N))`; each term is reported separately.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::moments::{case1_truncation_bound, limit_constant, variance, Method, MomentEstimate};
use crate::seqmodel::{build_model, compensated_sum, f_derivatives, require_case, Case, SequenceFamily};
use crate::special::{ln_factorial, EULER_GAMMA, PI_SQUARED_OVER_6};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Term {
    pub label: String,
    pub value: f64,
}

/// Labelled expansion terms with their sum and the order of the remainder.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExpansionReport {
    pub n: usize,
    pub m: u32,
    pub terms: Vec<Term>,
    pub total: f64,
    pub remainder: String,
    /// Related leading-order forms that are not part of `total`.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub displays: Vec<Term>,
}

impl ExpansionReport {
    fn new(n: usize, m: u32, terms: Vec<(String, f64)>, remainder: impl Into<String>) -> Self {
        let terms: Vec<Term> = terms.into_iter().map(|(label, value)| Term { label, value }).collect();
        Self {
            n,
            m,
            total: compensated_sum(terms.iter().map(|t| t.value)),
            terms,
            remainder: remainder.into(),
            displays: Vec::new(),
        }
    }

    /// Value of the term with the given label.
    pub fn term(&self, label: &str) -> Option<f64> {
        self.terms.iter().find(|t| t.label == label).map(|t| t.value)
    }
}

/// Scale functions of a decaying sequence `a_j = 1 / f(j)` at `x`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CaseTwoScales {
    pub f: f64,
    pub f_prime: f64,
    pub f_second: f64,
    /// `F = f ln(f / f')`
    pub big_f: f64,
    /// `f / F = 1 / ln(f / f')`
    pub delta: f64,
    /// `-2 + (f''/f') / (f'/f)`
    pub omega: f64,
    /// Set when the family does not meet the growth conditions behind the
    /// Case II expansions.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub warning: Option<String>,
}

const LOGPOWER_WARNING: &str =
    "growth conditions violated: f = (ln x)^p grows slower than every power of x, so x f'(x)/f(x) -> 0";

/// `(f, F, delta, omega)` for a Case II family at interpolant argument `x`.
pub fn case2_scales(family: &SequenceFamily, x: f64) -> Result<CaseTwoScales> {
    require_case(family, Case::CaseII)?;
    let warning = match family {
        SequenceFamily::Constant => {
            return Err(Error::Unsupported(
                "constant weights have f' = 0, so ln(f/f') is undefined; use the equal-probability expansion".into(),
            ))
        }
        SequenceFamily::ExpDecay { .. } => {
            return Err(Error::Unsupported(
                "exponentially decaying weights have constant f/f', so delta does not tend to 0".into(),
            ))
        }
        SequenceFamily::LogPower { .. } => Some(LOGPOWER_WARNING.to_string()),
        _ => None,
    };
    let (f, f1, f2) = f_derivatives(family, x)?;
    let log_ratio = (f / f1).ln();
    if log_ratio.is_nan() || log_ratio <= 0.0 {
        return invalid(format!("ln(f/f') = {log_ratio} is not positive at x = {x}"));
    }
    Ok(CaseTwoScales {
        f,
        f_prime: f1,
        f_second: f2,
        big_f: f * log_ratio,
        delta: 1.0 / log_ratio,
        omega: -2.0 + (f2 / f1) / (f1 / f),
        warning,
    })
}

/// Interpolant argument of the `n`-th coupon.
fn last_index(family: &SequenceFamily, n: usize) -> f64 {
    (family.first_index() + n - 1) as f64
}

// Only Zipf-type families satisfy the growth conditions of the expansions.
fn require_smooth_case2(family: &SequenceFamily) -> Result<()> {
    require_case(family, Case::CaseII)?;
    match family {
        SequenceFamily::Zipf { .. } => Ok(()),
        SequenceFamily::LogPower { .. } => Err(Error::Unsupported(format!(
            "{LOGPOWER_WARNING}; only the slow-decay displays are available"
        ))),
        SequenceFamily::Constant => Err(Error::Unsupported(
            "constant weights violate f' > 0; use the equal-probability expansion".into(),
        )),
        SequenceFamily::ExpDecay { .. } => Err(Error::Unsupported(
            "growth condition violated: ln(f/f') stays bounded for exponentially decaying weights".into(),
        )),
        _ => Err(Error::Unsupported(format!(
            "{} carries no smooth interpolant satisfying the growth conditions",
            family.name()
        ))),
    }
}

/// Expansion of `E[T_m(N)]` for a smooth decaying sequence.
pub fn expectation_expansion_case2(family: &SequenceFamily, m: u32, n: usize) -> Result<ExpansionReport> {
    check_m(m)?;
    require_smooth_case2(family)?;
    let a_sum = build_model(family, n)?.a_sum();
    let s = case2_scales(family, last_index(family, n))?;
    let scale = a_sum * s.f;
    let (d, ld) = (s.delta, s.delta.ln());
    let mm2 = m as f64 - 2.0;
    let lf = ln_factorial(m - 1);
    let fact = lf.exp();
    let terms = vec![
        ("1/delta".to_string(), scale / d),
        ("-(m-2) ln delta".to_string(), -scale * mm2 * ld),
        ("gamma - ln (m-1)!".to_string(), scale * (EULER_GAMMA - lf)),
        ("-(m-2)^2 delta ln delta".to_string(), -scale * mm2 * mm2 * d * ld),
        (
            "((m-1) + omega (m-1)! - (m-2) ln (m-1)! + (m-2) gamma) delta".to_string(),
            scale * ((m as f64 - 1.0) + s.omega * fact - mm2 * lf + mm2 * EULER_GAMMA) * d,
        ),
    ];
    Ok(ExpansionReport::new(n, m, terms, "A_N f(N) O(delta^2 ln^2 delta)"))
}

/// Expansion of `E[T_m(N) (T_m(N) + 1)]` for a smooth decaying sequence.
pub fn second_rising_expansion_case2(family: &SequenceFamily, m: u32, n: usize) -> Result<ExpansionReport> {
    check_m(m)?;
    require_smooth_case2(family)?;
    let a_sum = build_model(family, n)?.a_sum();
    let s = case2_scales(family, last_index(family, n))?;
    let scale = (a_sum * s.f).powi(2);
    let (d, ld) = (s.delta, s.delta.ln());
    let mm2 = m as f64 - 2.0;
    let lf = ln_factorial(m - 1);
    let g = EULER_GAMMA;
    let constant = 2.0 * mm2 * g - 2.0 * mm2 * lf + 2.0 * s.omega * lf.exp() + 2.0 * (m as f64 - 1.0) + lf * lf + g * g
        + PI_SQUARED_OVER_6
        - 2.0 * g * lf;
    let terms = vec![
        ("1/delta^2".to_string(), scale / (d * d)),
        ("-2(m-2) ln delta / delta".to_string(), -2.0 * scale * mm2 * ld / d),
        ("-2(ln (m-1)! - gamma) / delta".to_string(), -2.0 * scale * (lf - g) / d),
        ("(m-2)^2 ln^2 delta".to_string(), scale * mm2 * mm2 * ld * ld),
        (
            "2(m-2)(ln (m-1)! - gamma - (m-2)) ln delta".to_string(),
            2.0 * scale * mm2 * (lf - g - mm2) * ld,
        ),
        ("constant".to_string(), scale * constant),
    ];
    Ok(ExpansionReport::new(n, m, terms, "A_N^2 f(N)^2 O(delta ln^2 delta)"))
}

/// Leading variance `(pi^2/6) A_N^2 f(N)^2 = (pi^2/6) / p_N^2` of a decaying
/// sequence; the same for every `m`.
pub fn variance_leading_case2(family: &SequenceFamily, m: u32, n: usize) -> Result<MomentEstimate> {
    check_m(m)?;
    require_case(family, Case::CaseII)?;
    let nf = n as f64;
    let (value, detail) = match family {
        SequenceFamily::Zipf { p } => {
            let a_sum = build_model(family, n)?.a_sum();
            let mut detail = "(pi^2/6) A_N^2 N^{2p}".to_string();
            if *p < 1.0 {
                let d = PI_SQUARED_OVER_6 * nf * nf / (1.0 - p).powi(2);
                detail.push_str(&format!("; leading display (pi^2/6) N^2/(1-p)^2 = {d:.6e}"));
            }
            (PI_SQUARED_OVER_6 * (a_sum * nf.powf(*p)).powi(2), detail)
        }
        SequenceFamily::Constant => (
            PI_SQUARED_OVER_6 * nf * nf,
            "(pi^2/6) N^2 (proved for m = 1, conjectured for m >= 2)".to_string(),
        ),
        SequenceFamily::LogPower { .. } => (
            PI_SQUARED_OVER_6 * nf * nf,
            format!("(pi^2/6) N^2, suggested by the slow-decay limit law; {LOGPOWER_WARNING}"),
        ),
        other => {
            require_smooth_case2(other)?;
            unreachable!("only Zipf passes the smoothness check")
        }
    };
    Ok(MomentEstimate {
        value,
        abs_error: f64::NAN,
        method: Method::Asymptotic,
        detail: format!("{detail}; relative error o(1), not quantified"),
    })
}

/// Equal probabilities: `E[T] = N ln N + (m-1) N ln ln N + N (gamma - ln (m-1)!) + o(N)`.
pub fn equal_case_expansion(m: u32, n: usize) -> Result<ExpansionReport> {
    check_m(m)?;
    if n < 3 {
        return invalid(format!("the equal-probability expansion needs n >= 3 (ln ln n > 0), got {n}"));
    }
    let nf = n as f64;
    let c_m = EULER_GAMMA - ln_factorial(m - 1);
    let terms = vec![
        ("N ln N".to_string(), nf * nf.ln()),
        ("(m-1) N ln ln N".to_string(), (m as f64 - 1.0) * nf * nf.ln().ln()),
        ("N (gamma - ln (m-1)!)".to_string(), nf * c_m),
    ];
    let mut report = ExpansionReport::new(n, m, terms, "o(N)");
    report.displays = vec![
        Term {
            label: "C_m".into(),
            value: c_m,
        },
        Term {
            label: if m == 1 {
                "variance (pi^2/6) N^2".into()
            } else {
                "variance (pi^2/6) N^2 (conjectured for m >= 2)".into()
            },
            value: PI_SQUARED_OVER_6 * nf * nf,
        },
    ];
    Ok(report)
}

/// Suggested mean of the slowly decaying `a_j = (ln j)^{-p}`:
/// `N ln N + (m-1) N ln ln N + N (gamma + p - ln(p+1) - ln (m-1)!) + o(N)`.
pub fn logpower_expansion(p: f64, m: u32, n: usize) -> Result<ExpansionReport> {
    check_m(m)?;
    SequenceFamily::LogPower { p }.validate()?;
    if n < 3 {
        return invalid(format!("the slow-decay display needs n >= 3, got {n}"));
    }
    let nf = n as f64;
    let c = EULER_GAMMA + p - (p + 1.0).ln() - ln_factorial(m - 1);
    let terms = vec![
        ("N ln N".to_string(), nf * nf.ln()),
        ("(m-1) N ln ln N".to_string(), (m as f64 - 1.0) * nf * nf.ln().ln()),
        ("N (gamma + p - ln(p+1) - ln (m-1)!)".to_string(), nf * c),
    ];
    let mut report = ExpansionReport::new(n, m, terms, "o(N) (suggested, not proved)");
    report.displays = vec![Term {
        label: "variance (pi^2/6) N^2".into(),
        value: PI_SQUARED_OVER_6 * nf * nf,
    }];
    Ok(report)
}

/// Two-term approximation of `J_kappa(N) = int_1^N f(x)^kappa e^{-F(N) s / f(x)} dx`.
pub fn j_kappa(family: &SequenceFamily, n: usize, s: f64, kappa: f64) -> Result<f64> {
    if !(s.is_finite() && s >= 0.1) {
        return invalid(format!("J_kappa needs s >= 0.1, got {s}"));
    }
    if !kappa.is_finite() {
        return invalid("kappa must be finite");
    }
    let sc = case2_scales(family, n as f64)?;
    let e = (-sc.big_f * s / sc.f).exp();
    let first = sc.f.powf(kappa + 2.0) / (s * sc.big_f * sc.f_prime) * e;
    let second = sc.omega * sc.f.powf(kappa + 3.0) / (s * s * sc.big_f * sc.big_f * sc.f_prime) * e;
    Ok(first + second)
}

fn check_m(m: u32) -> Result<()> {
    if m == 0 {
        invalid("the number of sets m must be at least 1")
    } else {
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// Growing sequences

/// `E[T_m(N)] ~ A_N L_1(alpha; m)` for a growing sequence.
///
/// `abs_error` bounds the distance to the exact expectation: the error of
/// `L_1` plus the bound on `L_1 - E[T]/A_N` from the omitted weights.
pub fn expectation_expansion_case1(family: &SequenceFamily, m: u32, n: usize, tol: f64) -> Result<MomentEstimate> {
    check_m(m)?;
    require_case(family, Case::CaseI)?;
    let a_sum = build_model(family, n)?.a_sum();
    let l1 = limit_constant(family, m, 1, tol)?;
    let gap = case1_truncation_bound(family, m, 1, n, tol)?;
    Ok(MomentEstimate {
        value: a_sum * l1.value,
        abs_error: a_sum * (l1.abs_error + gap),
        method: Method::Asymptotic,
        detail: format!(
            "A_N L_1 with A_N = {a_sum}, L_1 = {} (+/- {:.3e}); omitted-weight bound {gap:.3e}",
            l1.value, l1.abs_error
        ),
    })
}

/// `V[T_m(N)] ~ A_N^2 (L_2 - L_1^2)` for a growing sequence.
pub fn variance_case1(family: &SequenceFamily, m: u32, n: usize, tol: f64) -> Result<MomentEstimate> {
    check_m(m)?;
    require_case(family, Case::CaseI)?;
    let a = build_model(family, n)?.a_sum();
    let l1 = limit_constant(family, m, 1, tol)?;
    let l2 = limit_constant(family, m, 2, tol)?;
    let d1 = case1_truncation_bound(family, m, 1, n, tol)?;
    let d2 = case1_truncation_bound(family, m, 2, n, tol)?;
    // V = A^2 (E_2 - E_1^2) - A E_1 with 0 <= L_r - E_r <= d_r
    let l1_hi = l1.value + l1.abs_error;
    let quad = a * a * (l2.abs_error + 2.0 * l1_hi * l1.abs_error + l1.abs_error * l1.abs_error);
    let truncation = a * a * (d2 + 2.0 * l1_hi * d1) + a * l1_hi;
    Ok(MomentEstimate {
        value: a * a * (l2.value - l1.value * l1.value),
        abs_error: quad + truncation,
        method: Method::Asymptotic,
        detail: format!(
            "A_N^2 (L_2 - L_1^2) with A_N = {a}, L_1 = {}, L_2 = {}",
            l1.value, l2.value
        ),
    })
}

// ---------------------------------------------------------------------------
// Informational probes of open questions

/// Ratio of the equal-probability variance to `(pi^2/6) N^2`.
pub fn equal_variance_ratio(m: u32, n: usize, tol: f64) -> Result<MomentEstimate> {
    let model = build_model(&SequenceFamily::Constant, n)?;
    let v = variance(&model, m, tol)?;
    let denom = PI_SQUARED_OVER_6 * (n as f64).powi(2);
    Ok(MomentEstimate {
        value: v.value / denom,
        abs_error: v.abs_error / denom,
        method: Method::Quadrature,
        detail: format!("V = {} over (pi^2/6) N^2 = {denom}", v.value),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VarianceComparison {
    pub n: usize,
    pub m: u32,
    pub equal: f64,
    /// `(label, variance)` for each competing model.
    pub others: Vec<(String, f64)>,
    /// Whether the equal model had the smallest variance.
    pub equal_is_smallest: bool,
}

/// Compare the equal-probability variance with a few unequal models of the
/// same size. Informational only.
pub fn smallest_variance_probe(m: u32, n: usize, tol: f64) -> Result<VarianceComparison> {
    let equal = variance(&build_model(&SequenceFamily::Constant, n)?, m, tol)?.value;
    let mut others = Vec::new();
    let zipf = SequenceFamily::Zipf { p: 0.5 };
    others.push(("zipf p=0.5".to_string(), variance(&build_model(&zipf, n)?, m, tol)?.value));
    for eps in [0.01, 0.1] {
        let a: Vec<f64> = (0..n).map(|j| if j % 2 == 0 { 1.0 + eps } else { 1.0 - eps }).collect();
        let fam = SequenceFamily::Explicit { a, tail: None };
        let v = variance(&build_model(&fam, n)?, m, tol)?.value;
        others.push((format!("alternating 1 +/- {eps}"), v));
    }
    Ok(VarianceComparison {
        n,
        m,
        equal,
        equal_is_smallest: others.iter().all(|(_, v)| equal <= *v),
        others,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::moments::{expectation, second_rising};

    fn zipf(p: f64) -> SequenceFamily {
        SequenceFamily::Zipf { p }
    }

    #[test]
    fn scale_examples() {
        let s = case2_scales(&zipf(1.0), std::f64::consts::E).unwrap();
        assert!((s.big_f - std::f64::consts::E).abs() < 1e-14);
        assert!((s.delta - 1.0).abs() < 1e-15);
        assert!((s.omega + 2.0).abs() < 1e-15);
        for (p, n) in [(0.5, 100.0), (2.0, 1e4), (1.3, 57.0)] {
            let s = case2_scales(&zipf(p), n).unwrap();
            let want = 1.0 / (f64::ln(n) - f64::ln(p));
            assert!((s.delta - want).abs() < 1e-14 * want);
        }
        let s = case2_scales(&zipf(2.0), 100.0).unwrap();
        assert!((s.omega + 1.5).abs() < 1e-12);
    }

    #[test]
    fn scale_errors_and_flags() {
        assert!(matches!(case2_scales(&SequenceFamily::Constant, 10.0), Err(Error::Unsupported(_))));
        assert!(matches!(case2_scales(&SequenceFamily::Power { p: 1.0 }, 10.0), Err(Error::Dichotomy(_))));
        let lp = case2_scales(&SequenceFamily::LogPower { p: 1.0 }, 100.0).unwrap();
        assert!(lp.warning.unwrap().contains("growth conditions violated"));
    }

    #[test]
    fn delta_decreases_and_omega_is_constant_for_zipf() {
        for fam in [zipf(0.5), zipf(1.0), zipf(2.0), SequenceFamily::LogPower { p: 1.0 }] {
            let mut prev = f64::INFINITY;
            for k in 1..40 {
                let x = 3.0 * 1.5f64.powi(k);
                let s = case2_scales(&fam, x).unwrap();
                assert!(s.delta < prev && s.delta > 0.0);
                prev = s.delta;
                if let SequenceFamily::Zipf { p } = fam {
                    assert!((s.omega - (-2.0 + (p - 1.0) / p)).abs() < 1e-9);
                }
            }
        }
    }

    #[test]
    fn zipf_expectation_leading_terms() {
        for (p, m, n) in [(0.5, 1, 1000), (1.0, 3, 500), (2.0, 2, 200)] {
            let r = expectation_expansion_case2(&zipf(p), m, n).unwrap();
            let a = build_model(&zipf(p), n).unwrap().a_sum();
            let nf = n as f64;
            let head = a * nf.powf(p)
                * (nf.ln() - p.ln()
                    + (m as f64 - 2.0) * (nf.ln() - p.ln()).ln()
                    + EULER_GAMMA
                    - ln_factorial(m - 1));
            let first_three: f64 = r.terms[..3].iter().map(|t| t.value).sum();
            assert!((first_three - head).abs() < 1e-9 * head.abs());
            assert_eq!(r.terms.len(), 5);
            let sum: f64 = r.terms.iter().map(|t| t.value).sum();
            assert!((r.total - sum).abs() < 1e-9 * sum.abs());
        }
    }

    #[test]
    fn zipf_expectation_close_to_quadrature() {
        let fam = zipf(0.5);
        let n = 10_000;
        let r = expectation_expansion_case2(&fam, 1, n).unwrap();
        let e = expectation(&build_model(&fam, n).unwrap(), 1, 1e-3).unwrap();
        assert!((r.total / e.value - 1.0).abs() < 0.05);
    }

    #[test]
    fn second_rising_structure() {
        let fam = zipf(0.5);
        let n = 1000;
        let r = second_rising_expansion_case2(&fam, 2, n).unwrap();
        let s = case2_scales(&fam, n as f64).unwrap();
        let a = build_model(&fam, n).unwrap().a_sum();
        let scale = (a * s.f).powi(2);
        let t = r.term("-2(ln (m-1)! - gamma) / delta").unwrap();
        assert!((t - 2.0 * EULER_GAMMA / s.delta * scale).abs() < 1e-9 * t.abs());
        let lead = r.term("1/delta^2").unwrap();
        let nf = n as f64;
        assert!((lead - a * a * nf * (nf.ln() - 0.5f64.ln()).powi(2)).abs() < 1e-9 * lead);
    }

    #[test]
    fn second_rising_close_to_quadrature() {
        let fam = zipf(0.5);
        let n = 10_000;
        let r = second_rising_expansion_case2(&fam, 1, n).unwrap();
        let q = second_rising(&build_model(&fam, n).unwrap(), 1, 1e3).unwrap();
        assert!((r.total / q.value - 1.0).abs() < 0.10, "{} vs {}", r.total, q.value);
    }

    #[test]
    fn case2_rejections_name_the_condition() {
        let e = expectation_expansion_case2(&SequenceFamily::LogPower { p: 1.0 }, 1, 100).unwrap_err();
        assert!(e.to_string().contains("growth conditions violated"));
        assert!(matches!(
            expectation_expansion_case2(&SequenceFamily::Constant, 1, 100),
            Err(Error::Unsupported(_))
        ));
        assert!(matches!(
            second_rising_expansion_case2(&SequenceFamily::Power { p: 2.0 }, 1, 100),
            Err(Error::Dichotomy(_))
        ));
    }

    #[test]
    fn leading_variance_is_independent_of_m() {
        let fam = zipf(0.5);
        let v1 = variance_leading_case2(&fam, 1, 1000).unwrap();
        let v5 = variance_leading_case2(&fam, 5, 1000).unwrap();
        assert_eq!(v1.value, v5.value);
        let model = build_model(&fam, 1000).unwrap();
        let pn = model.probs()[999];
        assert!((v1.value - PI_SQUARED_OVER_6 / (pn * pn)).abs() < 1e-9 * v1.value);
        assert!(v1.detail.contains("N^2/(1-p)^2"));
    }

    #[test]
    fn equal_case_examples() {
        let r = equal_case_expansion(1, 100).unwrap();
        assert_eq!(r.displays[0].value, EULER_GAMMA);
        let r = equal_case_expansion(3, 100).unwrap();
        assert!((r.terms[2].value - 100.0 * (EULER_GAMMA - 2f64.ln())).abs() < 1e-12);
        assert!(equal_case_expansion(1, 2).is_err());
    }

    #[test]
    fn equal_case_close_to_quadrature() {
        let n = 100_000;
        let r = equal_case_expansion(2, n).unwrap();
        let e = expectation(&build_model(&SequenceFamily::Constant, n).unwrap(), 2, 1e-4).unwrap();
        assert!((r.total / e.value - 1.0).abs() < 0.05);
    }

    #[test]
    fn logpower_display_exceeds_equal_case() {
        let lp = logpower_expansion(1.0, 2, 1000).unwrap();
        let eq = equal_case_expansion(2, 1000).unwrap();
        assert!(lp.total > eq.total);
        assert!((lp.terms[2].value - eq.terms[2].value - 1000.0 * (1.0 - 2f64.ln())).abs() < 1e-9);
    }

    // Composite Simpson in u = ln x; an independent route to J_kappa.
    fn j_direct(p: f64, n: usize, s: f64, kappa: f64) -> f64 {
        let big_f = (n as f64).powf(p) * ((n as f64).ln() - p.ln());
        let g = |u: f64| {
            let x = u.exp();
            let f = x.powf(p);
            f.powf(kappa) * (-big_f * s / f).exp() * x
        };
        let upper = (n as f64).ln();
        let steps = 200_000;
        let h = upper / steps as f64;
        let mut sum = g(0.0) + g(upper);
        for i in 1..steps {
            sum += if i % 2 == 1 { 4.0 } else { 2.0 } * g(i as f64 * h);
        }
        sum * h / 3.0
    }

    #[test]
    fn j_kappa_tracks_direct_integral() {
        let fam = zipf(1.0);
        let gap = |n: usize| {
            let approx = j_kappa(&fam, n, 1.0, 0.0).unwrap();
            (approx / j_direct(1.0, n, 1.0, 0.0) - 1.0).abs()
        };
        let g3 = gap(1000);
        let g4 = gap(10_000);
        assert!(g3 < 0.15, "gap {g3}");
        assert!(g4 < g3);
        assert!(j_kappa(&fam, 1000, 2.0, -1.0).unwrap() > 0.0);
        assert!(j_kappa(&fam, 1000, 0.05, 0.0).is_err());
    }

    #[test]
    fn case1_expectation_examples() {
        let fam = SequenceFamily::Power { p: 2.0 };
        let e = expectation_expansion_case1(&fam, 1, 100, 1e-9).unwrap();
        assert!(e.abs_error / e.value < 0.01);
        let lin = SequenceFamily::Power { p: 1.0 };
        let e = expectation_expansion_case1(&lin, 1, 50, 1e-9).unwrap();
        let q = expectation(&build_model(&lin, 50).unwrap(), 1, 1e-9).unwrap();
        assert!((e.value - q.value).abs() <= e.abs_error + q.abs_error);
        let g = expectation_expansion_case1(&SequenceFamily::ExpGrowth { p: 1.0 }, 2, 30, 1e-9).unwrap();
        let a = build_model(&SequenceFamily::ExpGrowth { p: 1.0 }, 30).unwrap().a_sum();
        // omitted-weight share decays like e^{-pN}
        assert!(g.abs_error / a < 1e-8);
        assert!(matches!(expectation_expansion_case1(&zipf(1.0), 1, 10, 1e-8), Err(Error::Dichotomy(_))));
    }

    #[test]
    fn case1_variance_examples() {
        let fam = SequenceFamily::Power { p: 2.0 };
        let v100 = variance_case1(&fam, 1, 100, 1e-9).unwrap();
        assert!(v100.value > 0.0);
        let v200 = variance_case1(&fam, 1, 200, 1e-9).unwrap();
        let a100 = build_model(&fam, 100).unwrap().a_sum();
        let a200 = build_model(&fam, 200).unwrap().a_sum();
        assert!((v200.value / v100.value - (a200 / a100).powi(2)).abs() < 1e-9);
        let v = variance_case1(&fam, 2, 100, 1e-9).unwrap();
        let q = variance(&build_model(&fam, 100).unwrap(), 2, 1e-3).unwrap();
        assert!((v.value / q.value - 1.0).abs() <= 0.05);
        assert!((v.value - q.value).abs() <= v.abs_error + q.abs_error);
    }

    #[test]
    fn probes_run() {
        let r = equal_variance_ratio(2, 50, 1e-8).unwrap();
        assert!(r.value > 0.0);
        let c = smallest_variance_probe(1, 4, 1e-9).unwrap();
        assert_eq!(c.others.len(), 3);
    }

    #[test]
    fn report_json_shape() {
        let r = expectation_expansion_case2(&zipf(1.0), 1, 100).unwrap();
        let v: serde_json::Value = serde_json::to_value(&r).unwrap();
        let keys: Vec<&str> = v.as_object().unwrap().keys().map(|k| k.as_str()).collect();
        for k in ["n", "m", "terms", "total", "remainder"] {
            assert!(keys.contains(&k));
        }
        assert!(v["terms"][0]["label"].is_string());
    }
}
