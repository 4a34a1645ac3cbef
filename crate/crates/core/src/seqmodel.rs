//! Coupon-weight sequences, the finite models they generate, and the
//! finite/infinite limit-constant dichotomy.
//!
//! A sequence `a_1, a_2, ...` of positive weights induces, for every `n`,
//! the coupon probabilities `p_j = a_j / A_n` with `A_n = sum_{j<=n} a_j`.
//! Sequences whose limit constants `L_r` are finite (growing weights) are
//! [`Case::CaseI`]; the rest are [`Case::CaseII`].

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::moments::{Method, MomentEstimate};
use crate::special::{zeta, EULER_GAMMA};

/// Declared tail behaviour of an explicit weight list.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TailHint {
    Grows,
    DecaysSubexponential,
    DecaysExponential,
}

/// Parametric generator of coupon weights `a_j`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum SequenceFamily {
    /// `a_j = 1`
    Constant,
    /// `a_j = j^p`
    Power { p: f64 },
    /// `a_j = j^{-p}`
    Zipf { p: f64 },
    /// `a_j = e^{p j}`
    ExpGrowth { p: f64 },
    /// `a_j = e^{-p j}`
    ExpDecay { p: f64 },
    /// `a_j = (ln j)^{-p}`, indexed from `j = 2`
    #[serde(rename = "logpower")]
    LogPower { p: f64 },
    /// Explicit finite list of weights.
    Explicit {
        a: Vec<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        tail: Option<TailHint>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Monotonicity {
    Nondecreasing,
    Nonincreasing,
    Unknown,
}

impl SequenceFamily {
    /// Short name used in reports and CLI flags.
    pub fn name(&self) -> &'static str {
        match self {
            Self::Constant => "constant",
            Self::Power { .. } => "power",
            Self::Zipf { .. } => "zipf",
            Self::ExpGrowth { .. } => "exp-growth",
            Self::ExpDecay { .. } => "exp-decay",
            Self::LogPower { .. } => "logpower",
            Self::Explicit { .. } => "explicit",
        }
    }

    /// Family parameter `p`, when the family has one.
    pub fn parameter(&self) -> Option<f64> {
        match self {
            Self::Power { p }
            | Self::Zipf { p }
            | Self::ExpGrowth { p }
            | Self::ExpDecay { p }
            | Self::LogPower { p } => Some(*p),
            Self::Constant | Self::Explicit { .. } => None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            Self::Explicit { a, .. } => {
                if a.is_empty() {
                    return invalid("explicit weight list is empty");
                }
                if let Some(bad) = a.iter().find(|x| !(x.is_finite() && **x > 0.0)) {
                    return invalid(format!("explicit weights must be positive and finite, got {bad}"));
                }
                Ok(())
            }
            Self::Constant => Ok(()),
            other => {
                let p = other.parameter().unwrap_or(f64::NAN);
                if p.is_finite() && p > 0.0 {
                    Ok(())
                } else {
                    invalid(format!("{} requires a parameter p > 0, got {p}", other.name()))
                }
            }
        }
    }

    /// Sequence index of the first coupon (2 for the log-power family).
    pub fn first_index(&self) -> usize {
        match self {
            Self::LogPower { .. } => 2,
            _ => 1,
        }
    }

    /// Weight `a_j` at sequence index `j >= first_index()`.
    ///
    /// For explicit lists, `j` past the end yields `NaN`.
    pub fn weight(&self, j: usize) -> f64 {
        let x = j as f64;
        match self {
            Self::Constant => 1.0,
            Self::Power { p } => x.powf(*p),
            Self::Zipf { p } => x.powf(-*p),
            Self::ExpGrowth { p } => (p * x).exp(),
            Self::ExpDecay { p } => (-p * x).exp(),
            Self::LogPower { p } => x.ln().powf(-*p),
            Self::Explicit { a, .. } => a.get(j.wrapping_sub(1)).copied().unwrap_or(f64::NAN),
        }
    }

    /// The first `n` weights of the sequence.
    pub fn weights(&self, n: usize) -> Result<Vec<f64>> {
        self.validate()?;
        if n == 0 {
            return invalid("the number of coupon types n must be at least 1");
        }
        if let Self::Explicit { a, .. } = self {
            if a.len() < n {
                return invalid(format!("explicit list has {} weights, fewer than n = {n}", a.len()));
            }
            return Ok(a[..n].to_vec());
        }
        let start = self.first_index();
        let w: Vec<f64> = (start..start + n).map(|j| self.weight(j)).collect();
        if let Some(bad) = w.iter().find(|x| !(x.is_finite() && **x > 0.0)) {
            return invalid(format!(
                "{} weights leave the positive finite range at n = {n} (got {bad})",
                self.name()
            ));
        }
        Ok(w)
    }

    pub fn monotonicity(&self) -> Monotonicity {
        match self {
            Self::Constant | Self::Power { .. } | Self::ExpGrowth { .. } => Monotonicity::Nondecreasing,
            Self::Zipf { .. } | Self::ExpDecay { .. } | Self::LogPower { .. } => Monotonicity::Nonincreasing,
            Self::Explicit { a, .. } => {
                if a.windows(2).all(|w| w[0] <= w[1]) {
                    Monotonicity::Nondecreasing
                } else if a.windows(2).all(|w| w[0] >= w[1]) {
                    Monotonicity::Nonincreasing
                } else {
                    Monotonicity::Unknown
                }
            }
        }
    }

    /// Upper bound on `sum_{j > last} a_j^{-r}` where `last` is a sequence
    /// index, or `None` when the sum diverges or is unknown.
    pub fn inverse_power_tail(&self, last: usize, r: u32) -> Option<f64> {
        let r = r as f64;
        match self {
            Self::Power { p } => {
                let s = p * r;
                (s > 1.0).then(|| (last as f64).powf(1.0 - s) / (s - 1.0))
            }
            Self::ExpGrowth { p } => {
                let s = p * r;
                Some((-s * (last as f64 + 1.0)).exp() / -(-s).exp_m1())
            }
            _ => None,
        }
    }
}

/// Which side of the dichotomy a sequence falls on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Case {
    /// `L_r(alpha; m) < infinity`
    CaseI,
    /// `L_r(alpha; m) = infinity`
    CaseII,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CaseLabel {
    pub value: Case,
    pub justification: String,
}

const XI_GRID: [f64; 4] = [0.1, 0.5, 0.9, 0.99];

/// Partial sums of `xi^{a_j}` over an explicit list, one per grid point.
fn xi_partial_sums(a: &[f64]) -> Vec<(f64, f64, f64)> {
    XI_GRID
        .iter()
        .map(|&xi| {
            let ln_xi = f64::ln(xi);
            let total: f64 = a.iter().map(|&w| (w * ln_xi).exp()).sum();
            let last = a.last().map(|&w| (w * ln_xi).exp()).unwrap_or(0.0);
            (xi, total, last)
        })
        .collect()
}

/// Classify a sequence into Case I (finite limit constants) or Case II.
pub fn classify(family: &SequenceFamily) -> Result<CaseLabel> {
    family.validate()?;
    let label = |value, why: &str| CaseLabel {
        value,
        justification: why.to_string(),
    };
    match family {
        SequenceFamily::Power { .. } => Ok(label(
            Case::CaseI,
            "a_j = j^p grows polynomially; sum xi^{j^p} converges for every xi in (0,1)",
        )),
        SequenceFamily::ExpGrowth { .. } => Ok(label(
            Case::CaseI,
            "a_j = e^{pj} grows exponentially; sum xi^{a_j} converges for every xi in (0,1)",
        )),
        SequenceFamily::Constant => Ok(label(
            Case::CaseII,
            "a_j = 1; xi^{a_j} = xi does not vanish, so the series diverges",
        )),
        SequenceFamily::Zipf { .. } => Ok(label(
            Case::CaseII,
            "a_j = j^{-p} -> 0; xi^{a_j} -> 1, so the series diverges for every xi",
        )),
        SequenceFamily::ExpDecay { .. } => Ok(label(
            Case::CaseII,
            "a_j = e^{-pj} -> 0; xi^{a_j} -> 1 (same probabilities as e^{pj}, opposite label)",
        )),
        SequenceFamily::LogPower { .. } => Ok(label(
            Case::CaseII,
            "a_j = (ln j)^{-p} -> 0; xi^{a_j} -> 1, so the series diverges for every xi",
        )),
        SequenceFamily::Explicit { a, tail } => {
            let sums = xi_partial_sums(a);
            let evidence = sums
                .iter()
                .map(|(xi, total, last)| format!("xi={xi}: partial sum {total:.6e}, last term {last:.3e}"))
                .collect::<Vec<_>>()
                .join("; ");
            match tail {
                Some(TailHint::Grows) => Ok(label(
                    Case::CaseI,
                    &format!("declared tail: grows; advisory numeric check [{evidence}]"),
                )),
                Some(TailHint::DecaysSubexponential) | Some(TailHint::DecaysExponential) => Ok(label(
                    Case::CaseII,
                    &format!("declared tail: decays; advisory numeric check [{evidence}]"),
                )),
                None => classify_explicit_numeric(a, &sums, &evidence),
            }
        }
    }
}

// Without a declared tail only two clear-cut prefix patterns are accepted:
// terms already negligible at xi = 0.5 along a nondecreasing tail, or weights
// bounded by 1 along a nonincreasing tail (then xi^{a_j} >= xi never vanishes).
fn classify_explicit_numeric(a: &[f64], sums: &[(f64, f64, f64)], evidence: &str) -> Result<CaseLabel> {
    let tail = &a[a.len() - a.len().div_ceil(4)..];
    let rising = a.len() >= 8 && tail.windows(2).all(|w| w[0] <= w[1]);
    let falling = a.len() >= 8 && tail.windows(2).all(|w| w[0] >= w[1]);
    let half_last = sums.iter().find(|s| s.0 == 0.5).map(|s| s.2).unwrap_or(1.0);
    if rising && half_last < 1e-12 {
        return Ok(CaseLabel {
            value: Case::CaseI,
            justification: format!("inferred from a finite prefix (advisory, no tail hint) [{evidence}]"),
        });
    }
    if falling && tail.iter().all(|&w| w <= 1.0) {
        return Ok(CaseLabel {
            value: Case::CaseII,
            justification: format!("inferred from a finite prefix (advisory, no tail hint) [{evidence}]"),
        });
    }
    Err(Error::Unclassified(format!(
        "explicit sequence without a tail hint and ambiguous numeric evidence [{evidence}]"
    )))
}

pub(crate) fn require_case(family: &SequenceFamily, want: Case) -> Result<CaseLabel> {
    let label = classify(family)?;
    if label.value != want {
        let msg = match label.value {
            Case::CaseII => format!(
                "{} is Case II: L_r(alpha; m) = infinity ({})",
                family.name(),
                label.justification
            ),
            Case::CaseI => format!(
                "{} is Case I: L_r(alpha; m) is finite, use the Case I machinery ({})",
                family.name(),
                label.justification
            ),
        };
        return Err(Error::Dichotomy(msg));
    }
    Ok(label)
}

/// Interpolant derivatives `(f, f', f'')` at `x`, where `1 / a_j = f(j)`.
pub fn f_derivatives(family: &SequenceFamily, x: f64) -> Result<(f64, f64, f64)> {
    family.validate()?;
    match family {
        SequenceFamily::Constant => Ok((1.0, 0.0, 0.0)),
        SequenceFamily::Zipf { p } => {
            if x < 1.0 {
                return invalid(format!("f_derivatives needs x >= 1, got {x}"));
            }
            let p = *p;
            Ok((x.powf(p), p * x.powf(p - 1.0), p * (p - 1.0) * x.powf(p - 2.0)))
        }
        SequenceFamily::LogPower { p } => {
            if x <= 1.0 {
                return invalid(format!("log-power interpolant needs x > 1, got {x}"));
            }
            let p = *p;
            let l = x.ln();
            Ok((
                l.powf(p),
                p * l.powf(p - 1.0) / x,
                p * l.powf(p - 2.0) * ((p - 1.0) - l) / (x * x),
            ))
        }
        SequenceFamily::ExpDecay { p } => {
            let e = (p * x).exp();
            Ok((e, p * e, p * p * e))
        }
        SequenceFamily::Power { .. } | SequenceFamily::ExpGrowth { .. } => Err(Error::Unsupported(format!(
            "{} is a Case I sequence; the decaying-weight interpolant f is not defined",
            family.name()
        ))),
        SequenceFamily::Explicit { .. } => Err(Error::Unsupported(
            "explicit lists carry no smooth interpolant".into(),
        )),
    }
}

/// Neumaier-compensated sum.
pub fn compensated_sum<I: IntoIterator<Item = f64>>(values: I) -> f64 {
    let mut sum = 0.0f64;
    let mut comp = 0.0f64;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

/// Finite coupon model: `n` probabilities `p_j = a_j / A_n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ModelRecord", into = "ModelRecord")]
pub struct CouponModel {
    n: usize,
    probs: Vec<f64>,
    a_sum: f64,
    source: SequenceFamily,
}

#[derive(Serialize, Deserialize)]
struct ModelRecord {
    n: usize,
    probs: Vec<f64>,
    a_sum: f64,
}

impl From<CouponModel> for ModelRecord {
    fn from(m: CouponModel) -> Self {
        Self {
            n: m.n,
            probs: m.probs,
            a_sum: m.a_sum,
        }
    }
}

impl TryFrom<ModelRecord> for CouponModel {
    type Error = Error;

    fn try_from(r: ModelRecord) -> Result<Self> {
        if r.n != r.probs.len() {
            return invalid(format!("model declares n = {} but lists {} probabilities", r.n, r.probs.len()));
        }
        let mut model = CouponModel::from_probs(&r.probs)?;
        if r.a_sum.is_finite() && r.a_sum > 0.0 {
            model.a_sum = r.a_sum;
        }
        Ok(model)
    }
}

impl CouponModel {
    /// Model from a probability (or weight) vector; weights are normalized.
    pub fn from_probs(weights: &[f64]) -> Result<Self> {
        build_model(
            &SequenceFamily::Explicit {
                a: weights.to_vec(),
                tail: None,
            },
            weights.len(),
        )
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    /// `A_n`, the unnormalized weight total.
    pub fn a_sum(&self) -> f64 {
        self.a_sum
    }

    pub fn source(&self) -> &SequenceFamily {
        &self.source
    }

    pub fn min_prob(&self) -> f64 {
        self.probs.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// `Some(n)` when every probability is exactly `1/n`-equal.
    pub fn equal_count(&self) -> Option<usize> {
        let first = self.probs[0];
        self.probs.iter().all(|&p| p == first).then_some(self.n)
    }
}

/// Build the `n`-coupon model of a family.
pub fn build_model(family: &SequenceFamily, n: usize) -> Result<CouponModel> {
    let weights = family.weights(n)?;
    let a_sum = compensated_sum(weights.iter().copied());
    let probs: Vec<f64> = weights.iter().map(|w| w / a_sum).collect();
    let total = compensated_sum(probs.iter().copied());
    if (total - 1.0).abs() > 1e-12 {
        return invalid(format!("probabilities sum to {total}, outside 1 +/- 1e-12"));
    }
    Ok(CouponModel {
        n,
        probs,
        a_sum,
        source: family.clone(),
    })
}

/// Leading asymptotic form of `A_n` next to its exact direct sum.
///
/// The returned value is the asymptotic form and `abs_error` its distance
/// from the exact sum, which is reported in `detail`. Families without an
/// asymptotic form fall back to the exact sum.
pub fn a_sum_asymptotic(family: &SequenceFamily, n: usize) -> Result<MomentEstimate> {
    let exact = build_model(family, n)?.a_sum();
    let nf = n as f64;
    let (value, form) = match family {
        SequenceFamily::Constant => (nf, "n".to_string()),
        SequenceFamily::Power { p } => (nf.powf(p + 1.0) / (p + 1.0), "n^{p+1}/(p+1)".to_string()),
        SequenceFamily::Zipf { p } => {
            let p = *p;
            if (p - 1.0).abs() < 1e-15 {
                (nf.ln() + EULER_GAMMA, "ln n + gamma".to_string())
            } else if p < 1.0 {
                (
                    nf.powf(1.0 - p) / (1.0 - p) + zeta(p),
                    format!("n^{{1-p}}/(1-p) + zeta(p), zeta({p}) = {:.12}", zeta(p)),
                )
            } else {
                (
                    zeta(p) - 1.0 / ((p - 1.0) * nf.powf(p - 1.0)),
                    format!("zeta(p) - 1/((p-1) n^{{p-1}}), zeta({p}) = {:.12}", zeta(p)),
                )
            }
        }
        SequenceFamily::ExpGrowth { p } => (
            ((p * (nf + 1.0)).exp() - p.exp()) / p.exp_m1(),
            "(e^{p(n+1)} - e^p)/(e^p - 1)".to_string(),
        ),
        SequenceFamily::ExpDecay { p } => (
            (-p).exp() * -(-p * nf).exp_m1() / -(-p).exp_m1(),
            "e^{-p}(1 - e^{-pn})/(1 - e^{-p})".to_string(),
        ),
        SequenceFamily::LogPower { .. } | SequenceFamily::Explicit { .. } => {
            return Ok(MomentEstimate {
                value: exact,
                abs_error: 0.0,
                method: Method::Oracle,
                detail: format!("no asymptotic form; exact direct sum A_n = {exact}"),
            });
        }
    };
    Ok(MomentEstimate {
        value,
        abs_error: (value - exact).abs(),
        method: Method::Asymptotic,
        detail: format!("{form}; exact direct sum A_n = {exact}"),
    })
}
