//! Rising moments, variance and generating function of the collection time,
//! plus the finite limit constants `L_r(alpha; m)` of growing sequences.
//!
//! Everything here is a one-dimensional integral over the Poissonized
//! completion time `X = max_j X_j`, where `X_j` is Erlang(m) with rate `p_j`:
//!
//! ```text
//! E[T^(r)] = r * int_0^inf (1 - prod_j P(m, p_j t)) t^{r-1} dt
//! ```
//!
//! The integral is split at a cutoff `T*`. On `[0, T*]` it is computed by
//! adaptive Gauss-Kronrod quadrature; beyond `T*` the integrand is bounded
//! by `sum_j Q(m, p_j t)`, whose moments are closed-form incomplete gamma
//! ratios. `T*` is doubled until that tail bound clears half the tolerance.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::quadrature::{integrate, QuadOptions, QuadOutcome};
use crate::seqmodel::{compensated_sum, require_case, Case, CouponModel, SequenceFamily};
use crate::special::{erlang_survival, ln_factorial, ErlangKernel};

/// How a [`MomentEstimate`] was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Quadrature,
    Asymptotic,
    MonteCarlo,
    Oracle,
}

/// A value with its error bound and provenance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentEstimate {
    pub value: f64,
    pub abs_error: f64,
    pub method: Method,
    pub detail: String,
}

// exp() of anything below this is subnormal or zero.
const LN_UNDERFLOW: f64 = -745.0;

const PARALLEL_THRESHOLD: usize = 4096;

/// Independent Erlang(m) clocks with the given rates.
struct Clocks<'a> {
    rates: &'a [f64],
    equal: Option<(f64, f64)>,
    kernel: ErlangKernel,
}

impl<'a> Clocks<'a> {
    fn new(rates: &'a [f64], m: u32) -> Result<Self> {
        if rates.is_empty() {
            return invalid("at least one coupon type is required");
        }
        if let Some(bad) = rates.iter().find(|r| !(r.is_finite() && **r > 0.0)) {
            return invalid(format!("rates must be positive and finite, got {bad}"));
        }
        let first = rates[0];
        let equal = rates.iter().all(|&r| r == first).then_some((first, rates.len() as f64));
        Ok(Self {
            rates,
            equal,
            kernel: ErlangKernel::new(m)?,
        })
    }

    fn m(&self) -> u32 {
        self.kernel.m()
    }

    fn min_rate(&self) -> f64 {
        self.rates.iter().copied().fold(f64::INFINITY, f64::min)
    }

    fn quad_options(&self) -> QuadOptions {
        QuadOptions {
            parallel_nodes: self.equal.is_none() && self.rates.len() >= PARALLEL_THRESHOLD,
            ..QuadOptions::default()
        }
    }

    /// `ln P{X <= t}`, or `-inf` once it drops below the exp underflow point.
    fn ln_all_rung(&self, t: f64) -> f64 {
        if t <= 0.0 {
            return f64::NEG_INFINITY;
        }
        let s = match self.equal {
            Some((rate, count)) => count * self.kernel.ln_cdf(rate * t),
            None => {
                let mut s = 0.0;
                for &rate in self.rates {
                    s += self.kernel.ln_cdf(rate * t);
                    if s < LN_UNDERFLOW {
                        break;
                    }
                }
                s
            }
        };
        if s < LN_UNDERFLOW {
            f64::NEG_INFINITY
        } else {
            s
        }
    }

    /// `1 - P{X <= t}` without cancellation near 1.
    fn not_all_rung(&self, t: f64) -> f64 {
        -self.ln_all_rung(t).exp_m1()
    }

    fn sum_over_rates(&self, term: impl Fn(f64) -> f64) -> f64 {
        match self.equal {
            Some((rate, count)) => count * term(rate),
            None => compensated_sum(self.rates.iter().map(|&r| term(r))),
        }
    }

    /// Upper bound on `r * int_T^inf (1 - P{X <= t}) t^{r-1} dt`.
    fn rising_tail(&self, r: u32, cut: f64) -> f64 {
        let m = self.m();
        self.sum_over_rates(|rate| single_rising_tail(rate, m, r, cut))
    }

    /// Upper bound on `int_T^inf (1 - P{X <= t}) e^{-ct} dt`.
    fn laplace_tail(&self, c: f64, cut: f64) -> f64 {
        let m = self.m();
        let trivial = (-c * cut).exp() / c;
        let per_clock = self.sum_over_rates(|rate| {
            let s = rate + c;
            (0..m)
                .map(|l| {
                    let ln = l as f64 * (rate / s).ln() - s.ln();
                    ln.exp() * erlang_survival(l + 1, s * cut)
                })
                .sum::<f64>()
        });
        trivial.min(per_clock)
    }
}

/// `r * int_T^inf Q(m, rate t) t^{r-1} dt`
/// `= r rate^{-r} sum_{l<m} (l+r-1)!/l! Q(l+r, rate T)`.
fn single_rising_tail(rate: f64, m: u32, r: u32, cut: f64) -> f64 {
    let ln_r = (r as f64).ln();
    let ln_rate = rate.ln();
    (0..m)
        .map(|l| {
            let q = erlang_survival(l + r, rate * cut);
            if q == 0.0 {
                return 0.0;
            }
            let ln_coef = ln_factorial(l + r - 1) - ln_factorial(l);
            (ln_r - r as f64 * ln_rate + ln_coef + q.ln()).exp()
        })
        .sum()
}

/// `r * sum_{l<m} (l+r-1)!/l!`: the factor in `int_0^inf r t^{r-1} Q(m, a t) dt = c / a^r`.
fn rising_tail_constant(m: u32, r: u32) -> f64 {
    (0..m)
        .map(|l| (r as f64).ln() + ln_factorial(l + r - 1) - ln_factorial(l))
        .map(f64::exp)
        .sum()
}

fn check_tol(tol: f64) -> Result<()> {
    if tol.is_finite() && tol > 0.0 {
        Ok(())
    } else {
        invalid(format!("tolerance must be positive and finite, got {tol}"))
    }
}

fn tolerance_error(q: QuadOutcome, extra: f64, requested: f64) -> Error {
    Error::Tolerance {
        best: q.value,
        achieved: q.error + extra,
        requested,
    }
}

/// Smallest doubling of `start` at which `bound(cut) <= target`.
fn find_cutoff(start: f64, target: f64, bound: impl Fn(f64) -> f64) -> Result<(f64, f64)> {
    let mut cut = start;
    for _ in 0..2000 {
        let b = bound(cut);
        if b <= target {
            return Ok((cut, b));
        }
        cut *= 2.0;
        if !cut.is_finite() {
            break;
        }
    }
    Err(Error::Tolerance {
        best: f64::NAN,
        achieved: f64::INFINITY,
        requested: target,
    })
}

fn rising_integral_with(clocks: &Clocks<'_>, r: u32, tol: f64) -> Result<MomentEstimate> {
    if r == 0 {
        return invalid("rising moment order r must be at least 1");
    }
    check_tol(tol)?;
    let n = clocks.rates.len() as f64;
    let start = (clocks.m() as f64 + n.ln() + 1.0) / clocks.min_rate();
    let (cut, tail) = find_cutoff(start, 0.5 * tol, |t| clocks.rising_tail(r, t))?;
    let rf = r as f64;
    let integrand = |t: f64| {
        let w = if r == 1 { 1.0 } else { rf * t.powi(r as i32 - 1) };
        w * clocks.not_all_rung(t)
    };
    let q = integrate(integrand, 0.0, cut, 0.5 * tol, clocks.quad_options())
        .map_err(|q| tolerance_error(q, tail, tol))?;
    Ok(MomentEstimate {
        value: q.value,
        abs_error: q.error + tail,
        method: Method::Quadrature,
        detail: format!(
            "adaptive Gauss-Kronrod on [0, {cut:.6e}] with {} evaluations; quadrature error {:.3e}, tail bound {tail:.3e}",
            q.evals, q.error
        ),
    })
}

/// `r * int_0^inf (1 - prod_j P(m, a_j t)) t^{r-1} dt` for raw weights `a_j`.
///
/// With `r = 1` this is `E_m(N; alpha)` and with `r = 2` the second rising
/// integral; scaling every weight by `s` scales the result by `s^{-r}`.
pub fn normalized_rising_integral(weights: &[f64], m: u32, r: u32, tol: f64) -> Result<MomentEstimate> {
    let clocks = Clocks::new(weights, m)?;
    rising_integral_with(&clocks, r, tol)
}

/// `P{X <= t} = prod_j (1 - Q(m, p_j t))`.
pub fn survival_product(model: &CouponModel, m: u32, t: f64) -> f64 {
    match Clocks::new(model.probs(), m) {
        Ok(c) => c.ln_all_rung(t).exp(),
        Err(_) => f64::NAN,
    }
}

/// `E[T (T+1) ... (T+r-1)]` within `tol`.
pub fn rising_moment(model: &CouponModel, m: u32, r: u32, tol: f64) -> Result<MomentEstimate> {
    normalized_rising_integral(model.probs(), m, r, tol)
}

/// `E[T_m(N)]`.
pub fn expectation(model: &CouponModel, m: u32, tol: f64) -> Result<MomentEstimate> {
    rising_moment(model, m, 1, tol)
}

/// `E[T_m(N) (T_m(N) + 1)]`.
pub fn second_rising(model: &CouponModel, m: u32, tol: f64) -> Result<MomentEstimate> {
    rising_moment(model, m, 2, tol)
}

/// `V[T] = E[T(T+1)] - E[T] - E[T]^2`.
///
/// The expectation is recomputed at a tighter tolerance when its error,
/// amplified by `1 + 2E`, would dominate the budget.
pub fn variance(model: &CouponModel, m: u32, tol: f64) -> Result<MomentEstimate> {
    check_tol(tol)?;
    let mut e = expectation(model, m, 0.5 * tol)?;
    let gain = 1.0 + 2.0 * e.value.abs();
    if e.abs_error * gain > 0.5 * tol {
        e = expectation(model, m, 0.25 * tol / gain)?;
    }
    let s = second_rising(model, m, 0.5 * tol)?;
    let value = s.value - e.value - e.value * e.value;
    let abs_error = s.abs_error + e.abs_error * (1.0 + 2.0 * e.value.abs()) + e.abs_error * e.abs_error;
    Ok(MomentEstimate {
        value,
        abs_error,
        method: Method::Quadrature,
        detail: format!(
            "E[T(T+1)] - E[T] - E[T]^2 with E[T] = {} (+/- {:.3e}), E[T(T+1)] = {} (+/- {:.3e})",
            e.value, e.abs_error, s.value, s.abs_error
        ),
    })
}

/// `G(z) = E[z^{-T}]` for real `z > 1`.
pub fn mgf(model: &CouponModel, m: u32, z: f64, tol: f64) -> Result<MomentEstimate> {
    check_tol(tol)?;
    if !(z.is_finite() && z > 1.0) {
        return invalid(format!("the generating function needs real z > 1, got {z}"));
    }
    let clocks = Clocks::new(model.probs(), m)?;
    let c = z - 1.0;
    let n = model.n() as f64;
    let start = (m as f64 + n.ln() + 1.0) / clocks.min_rate().max(c);
    let (cut, tail) = find_cutoff(start, 0.5 * tol / c, |t| clocks.laplace_tail(c, t))?;
    let integrand = |t: f64| clocks.not_all_rung(t) * (-c * t).exp();
    let q = integrate(integrand, 0.0, cut, 0.5 * tol / c, clocks.quad_options())
        .map_err(|q| tolerance_error(q, tail, tol))?;
    Ok(MomentEstimate {
        value: 1.0 - c * q.value,
        abs_error: c * (q.error + tail),
        method: Method::Quadrature,
        detail: format!("1 - (z-1) * Laplace integral on [0, {cut:.6e}], tail bound {tail:.3e}"),
    })
}

// ---------------------------------------------------------------------------
// Case I limit constants

fn growing_family_check(family: &SequenceFamily) -> Result<()> {
    require_case(family, Case::CaseI)?;
    match family {
        SequenceFamily::Power { .. } | SequenceFamily::ExpGrowth { .. } => Ok(()),
        _ => Err(Error::Unsupported(format!(
            "{} has no known infinite tail; limit constants need a parametric growing family",
            family.name()
        ))),
    }
}

/// Upper bound on `sum_{j > terms} Q(m, a_j t)` for a growing family.
///
/// Uses `Q(m, y) <= 2^{m-1} e^{-y/2}` past the first omitted term and bounds
/// the remaining sum by an integral with a closed form.
pub(crate) fn growing_tail_envelope(family: &SequenceFamily, m: u32, terms: usize, t: f64) -> f64 {
    if t <= 0.0 {
        return f64::INFINITY;
    }
    let next = (terms + 1) as f64;
    let first = erlang_survival(m, family.weight(terms + 1) * t);
    let scale = 2f64.powi(m as i32 - 1);
    let rest = match family {
        SequenceFamily::Power { p } if *p >= 1.0 => {
            2.0 * (-next.powf(*p) * t / 2.0).exp() / (next.powf(p - 1.0) * t)
        }
        SequenceFamily::Power { p } => {
            // int_{u0}^inf u^{1/p-1} e^{-ut/2} du / p with u^{1/p-1} <= u^K
            let k = (1.0 / p - 1.0).ceil().max(0.0) as u32;
            let u0 = next.powf(*p);
            let ln = ln_factorial(k) + (k + 1) as f64 * (2.0 / t).ln() - p.ln();
            ln.exp() * erlang_survival(k + 1, t * u0 / 2.0)
        }
        SequenceFamily::ExpGrowth { p } => {
            let a = (p * next).exp();
            let x = -(-a * p * t / 2.0).exp_m1();
            (-a * t / 2.0).exp() * (1.0 - x) / x
        }
        _ => f64::INFINITY,
    };
    first + scale * rest
}

/// `int_T^inf r t^{r-1} U(t) dt` for the envelope `U` of [`growing_tail_envelope`].
fn growing_envelope_tail(family: &SequenceFamily, m: u32, r: u32, terms: usize, cut: f64) -> f64 {
    let next = (terms + 1) as f64;
    let first = single_rising_tail(family.weight(terms + 1), m, r, cut);
    let scale = 2f64.powi(m as i32 - 1);
    // rest(t) <= C e^{-lambda t} for t >= cut
    let (c, lambda) = match family {
        SequenceFamily::Power { p } if *p >= 1.0 => (2.0 / (next.powf(p - 1.0) * cut), next.powf(*p) / 2.0),
        SequenceFamily::Power { p } => {
            let k = (1.0 / p - 1.0).ceil().max(0.0) as u32;
            let ln = ln_factorial(k) + (k + 1) as f64 * (2.0 / cut).ln() + k as f64 * 2f64.ln() - p.ln();
            (ln.exp(), next.powf(*p) / 4.0)
        }
        SequenceFamily::ExpGrowth { p } => {
            let a = (p * next).exp();
            (1.0 / -(-a * p * cut / 2.0).exp_m1(), a / 2.0)
        }
        _ => return f64::INFINITY,
    };
    let ln = ln_factorial(r) - r as f64 * lambda.ln();
    first + scale * c * ln.exp() * erlang_survival(r, lambda * cut)
}

/// Bound on `L_r(alpha; m) - L_r` of the sequence truncated to `terms` weights.
///
/// The smaller of the closed-form `c(m,r) sum_{j>J} a_j^{-r}` bound (which
/// diverges for slowly growing sequences) and a sharper bound that keeps the
/// retained product: `r int t^{r-1} P_J(t) min(1, U_J(t)) dt`.
pub fn case1_truncation_bound(family: &SequenceFamily, m: u32, r: u32, terms: usize, tol: f64) -> Result<f64> {
    growing_family_check(family)?;
    check_tol(tol)?;
    if r == 0 {
        return invalid("rising moment order r must be at least 1");
    }
    let head = family.weights(terms)?;
    let clocks = Clocks::new(&head, m)?;
    let closed = family
        .inverse_power_tail(terms, r)
        .map(|s| rising_tail_constant(m, r) * s)
        .unwrap_or(f64::INFINITY);
    let start = (m as f64 + (terms as f64).ln() + 1.0) / clocks.min_rate();
    let (cut, beyond) = find_cutoff(start, 0.25 * tol, |t| growing_envelope_tail(family, m, r, terms, t))?;
    let rf = r as f64;
    let integrand = |t: f64| {
        let env = growing_tail_envelope(family, m, terms, t).min(1.0);
        if env == 0.0 {
            return 0.0;
        }
        let w = if r == 1 { 1.0 } else { rf * t.powi(r as i32 - 1) };
        w * clocks.ln_all_rung(t).exp() * env
    };
    let refined = match integrate(integrand, 0.0, cut, 0.25 * tol, clocks.quad_options()) {
        Ok(q) => q.value + q.error + beyond,
        Err(q) => q.value.max(0.0) + q.error + beyond,
    };
    Ok(closed.min(refined))
}

/// `L_r(alpha; m) = r int_0^inf (1 - prod_{j>=1} P(m, a_j t)) t^{r-1} dt`
/// for a growing (Case I) family.
///
/// The product is truncated at `J` weights, doubling `J` until the
/// truncation bound is at most `tol / 2`.
pub fn limit_constant(family: &SequenceFamily, m: u32, r: u32, tol: f64) -> Result<MomentEstimate> {
    growing_family_check(family)?;
    check_tol(tol)?;
    if r == 0 {
        return invalid("rising moment order r must be at least 1");
    }
    let mut terms = 16usize;
    loop {
        let trunc = case1_truncation_bound(family, m, r, terms, 0.25 * tol)?;
        if trunc <= 0.5 * tol {
            let head = family.weights(terms)?;
            let clocks = Clocks::new(&head, m)?;
            let est = rising_integral_with(&clocks, r, 0.5 * tol)?;
            return Ok(MomentEstimate {
                value: est.value,
                abs_error: est.abs_error + trunc,
                method: Method::Quadrature,
                detail: format!(
                    "product truncated at J = {terms} weights (truncation bound {trunc:.3e}); {}",
                    est.detail
                ),
            });
        }
        terms *= 2;
        if terms > 1 << 20 {
            return Err(Error::Tolerance {
                best: f64::NAN,
                achieved: trunc,
                requested: tol,
            });
        }
    }
}

/// `E_m(N; alpha)` for the first `n` weights of a family: `E[T] / A_N`.
pub fn normalized_expectation(family: &SequenceFamily, m: u32, n: usize, tol: f64) -> Result<MomentEstimate> {
    let w = family.weights(n)?;
    normalized_rising_integral(&w, m, 1, tol)
}
