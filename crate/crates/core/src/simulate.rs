//! Monte-Carlo sampling of `T_m(N)`, an exact Markov-chain oracle for small
//! models, and the Kolmogorov-Smirnov distance.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::weighted::WeightedAliasIndex;
use rand_distr::Distribution;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::limitdist::Normalization;
use crate::seqmodel::CouponModel;

/// Categorical sampler for the coupon types of a model.
#[derive(Debug, Clone)]
pub struct Sampler {
    table: WeightedAliasIndex<f64>,
    n: usize,
}

impl Sampler {
    pub fn new(model: &CouponModel) -> Result<Self> {
        let table = WeightedAliasIndex::new(model.probs().to_vec())
            .map_err(|e| Error::InvalidInput(format!("cannot build alias table: {e}")))?;
        Ok(Self { table, n: model.n() })
    }

    /// Draw coupons until every type has been seen `m` times; returns the
    /// number of draws.
    pub fn sample_t<R: Rng + ?Sized>(&self, m: u32, rng: &mut R, counts: &mut Vec<u32>) -> u64 {
        counts.clear();
        counts.resize(self.n, 0);
        let mut missing = self.n;
        let mut t = 0u64;
        loop {
            let j = self.table.sample(rng);
            t += 1;
            let c = &mut counts[j];
            *c += 1;
            if *c == m {
                missing -= 1;
                if missing == 0 {
                    return t;
                }
            }
        }
    }
}

/// One draw of `T_m(N)`.
pub fn sample_t<R: Rng + ?Sized>(model: &CouponModel, m: u32, rng: &mut R) -> Result<u64> {
    if m == 0 {
        return invalid("the number of sets m must be at least 1");
    }
    let sampler = Sampler::new(model)?;
    Ok(sampler.sample_t(m, rng, &mut Vec::new()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmpiricalDistribution {
    pub count: usize,
    pub mean: f64,
    /// Unbiased sample variance.
    pub variance: f64,
    pub sorted_samples: Vec<f64>,
    pub seed: u64,
    pub shards: usize,
    /// Samples in draw order.
    #[serde(skip)]
    pub raw: Vec<u64>,
}

impl EmpiricalDistribution {
    fn from_raw(raw: Vec<u64>, seed: u64, shards: usize) -> Self {
        let count = raw.len();
        let sum: u128 = raw.iter().map(|&t| t as u128).sum();
        let sum_sq: u128 = raw.iter().map(|&t| (t as u128) * (t as u128)).sum();
        let c = count as u128;
        let mean = sum as f64 / count as f64;
        let variance = if count > 1 {
            // exact integer numerator
            (c * sum_sq - sum * sum) as f64 / (count as f64 * (count - 1) as f64)
        } else {
            0.0
        };
        let mut sorted = raw.clone();
        sorted.sort_unstable();
        Self {
            count,
            mean,
            variance,
            sorted_samples: sorted.into_iter().map(|t| t as f64).collect(),
            seed,
            shards,
            raw,
        }
    }

    /// Raw samples as text, one integer per line.
    pub fn raw_dump(&self) -> String {
        let mut s = String::with_capacity(self.raw.len() * 8);
        for t in &self.raw {
            s.push_str(&t.to_string());
            s.push('\n');
        }
        s
    }
}

/// Predicted number of draws per sample, from the leading growth
/// `(1/p_min)(ln N + (m-1) ln ln N)`, and never below `m N`.
pub fn predicted_draws(model: &CouponModel, m: u32) -> f64 {
    let n = model.n() as f64;
    let lead = (n.ln() + (m as f64 - 1.0) * n.ln().max(1.0).ln() + 1.0) / model.min_prob();
    lead.max(m as f64 * n)
}

pub const DEFAULT_DRAW_BUDGET: f64 = 1e10;

/// [`run_mc_with_budget`] with [`DEFAULT_DRAW_BUDGET`].
pub fn run_mc(model: &CouponModel, m: u32, samples: usize, seed: u64, shards: usize) -> Result<EmpiricalDistribution> {
    run_mc_with_budget(model, m, samples, seed, shards, DEFAULT_DRAW_BUDGET)
}

/// Draw `samples` realizations of `T_m(N)`.
///
/// Sample `i` uses ChaCha8 keyed by `seed` on stream `i` and is computed by
/// shard `i mod shards`, so the sample multiset depends only on
/// `(model, m, samples, seed)`.
pub fn run_mc_with_budget(
    model: &CouponModel,
    m: u32,
    samples: usize,
    seed: u64,
    shards: usize,
    max_draws: f64,
) -> Result<EmpiricalDistribution> {
    if m == 0 {
        return invalid("the number of sets m must be at least 1");
    }
    if samples == 0 {
        return invalid("at least one sample is required");
    }
    if shards == 0 {
        return invalid("at least one shard is required");
    }
    let cost = predicted_draws(model, m) * samples as f64;
    if cost > max_draws {
        return Err(Error::Budget(format!(
            "about {cost:.3e} draws predicted, above the budget of {max_draws:.3e} draws"
        )));
    }
    let sampler = Sampler::new(model)?;
    let base = ChaCha8Rng::seed_from_u64(seed);
    let parts: Vec<Vec<(usize, u64)>> = (0..shards)
        .into_par_iter()
        .map(|shard| {
            let mut counts = Vec::new();
            (shard..samples)
                .step_by(shards)
                .map(|i| {
                    let mut rng = base.clone();
                    rng.set_stream(i as u64);
                    (i, sampler.sample_t(m, &mut rng, &mut counts))
                })
                .collect()
        })
        .collect();
    let mut raw = vec![0u64; samples];
    for (i, t) in parts.into_iter().flatten() {
        raw[i] = t;
    }
    Ok(EmpiricalDistribution::from_raw(raw, seed, shards))
}

// ---------------------------------------------------------------------------
// Exact oracle

pub const MAX_STATES: usize = 1_000_000;

/// Exact moments of `T_m(N)` from the absorbing chain on capped counts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExactMoments {
    pub expectation: f64,
    pub second_rising: f64,
    pub variance: f64,
    #[serde(skip)]
    chain: Chain,
}

#[derive(Debug, Clone, PartialEq, Default)]
struct Chain {
    probs: Vec<f64>,
    m: u32,
    states: usize,
}

impl Chain {
    // States are counts (c_1, ..., c_N) with c_j <= m, in mixed radix m+1.
    // Every transition raises the index, so a reverse sweep visits each
    // successor before its predecessors. `step(q, w, successors)` combines
    // the geometric wait with success probability q and the successor mix.
    fn sweep<T: Copy>(&self, absorbed: T, step: impl Fn(f64, T) -> T, mix: impl Fn(&[(f64, T)]) -> T) -> T {
        let radix = self.m as usize + 1;
        let n = self.probs.len();
        let mut values = vec![absorbed; self.states];
        let mut digits = vec![0usize; n];
        let mut succ = Vec::with_capacity(n);
        for idx in (0..self.states - 1).rev() {
            let mut rest = idx;
            for d in digits.iter_mut() {
                *d = rest % radix;
                rest /= radix;
            }
            succ.clear();
            let mut q = 0.0;
            let mut place = 1usize;
            for (j, &d) in digits.iter().enumerate() {
                if d < self.m as usize {
                    q += self.probs[j];
                    succ.push((self.probs[j], values[idx + place]));
                }
                place *= radix;
            }
            let scaled: Vec<(f64, T)> = succ.iter().map(|&(p, v)| (p / q, v)).collect();
            values[idx] = step(q, mix(&scaled));
        }
        values[0]
    }
}

impl ExactMoments {
    /// `E[z^{-T}]` for real `z > 1`.
    pub fn pgf_at(&self, z: f64) -> Result<f64> {
        if !(z.is_finite() && z > 1.0) {
            return invalid(format!("the generating function needs real z > 1, got {z}"));
        }
        let w = 1.0 / z;
        Ok(self.chain.sweep(
            1.0,
            |q, v| q * w / (1.0 - (1.0 - q) * w) * v,
            |s| s.iter().map(|(p, v)| p * v).sum(),
        ))
    }
}

/// Exact `E[T]`, `E[T(T+1)]` and `V[T]` for a model with at most
/// [`MAX_STATES`] capped-count states.
pub fn exact_small(model: &CouponModel, m: u32) -> Result<ExactMoments> {
    if m == 0 {
        return invalid("the number of sets m must be at least 1");
    }
    let radix = m as usize + 1;
    let states = (0..model.n()).try_fold(1usize, |acc, _| acc.checked_mul(radix).filter(|&s| s <= MAX_STATES));
    let Some(states) = states else {
        return Err(Error::Budget(format!(
            "(m+1)^N = {radix}^{} states exceeds the limit of {MAX_STATES}",
            model.n()
        )));
    };
    let chain = Chain {
        probs: model.probs().to_vec(),
        m,
        states,
    };
    // (E[T], E[T^2]) from T = W + T' with W geometric and independent of T'
    let (e, e2) = chain.sweep(
        (0.0, 0.0),
        |q, (e1, e2)| {
            let w1 = 1.0 / q;
            let w2 = (2.0 - q) / (q * q);
            (w1 + e1, w2 + 2.0 * w1 * e1 + e2)
        },
        |s| {
            s.iter()
                .fold((0.0, 0.0), |(a, b), (p, (x, y))| (a + p * x, b + p * y))
        },
    );
    Ok(ExactMoments {
        expectation: e,
        second_rising: e2 + e,
        variance: e2 - e * e,
        chain,
    })
}

// ---------------------------------------------------------------------------
// Goodness of fit

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KsResult {
    pub statistic: f64,
    pub n: usize,
    pub reference: String,
}

/// `max_i max(|i/n - F(x_i)|, |(i-1)/n - F(x_i)|)` over sorted samples.
///
/// Tied samples are handled correctly by this form: within a run of ties
/// the extreme values of `i/n` and `(i-1)/n` bracket the empirical jump.
pub fn ks_statistic(samples: &[f64], cdf: impl Fn(f64) -> f64, reference: &str) -> Result<KsResult> {
    if samples.is_empty() {
        return invalid("KS statistic needs at least one sample");
    }
    if samples.iter().any(|x| x.is_nan()) {
        return invalid("samples contain NaN");
    }
    if samples.windows(2).any(|w| w[0] > w[1]) {
        return invalid("samples must be sorted in nondecreasing order");
    }
    let n = samples.len() as f64;
    let mut d: f64 = 0.0;
    for (i, &x) in samples.iter().enumerate() {
        let f = cdf(x);
        let hi = (i + 1) as f64 / n;
        let lo = i as f64 / n;
        d = d.max((hi - f).abs()).max((lo - f).abs());
    }
    Ok(KsResult {
        statistic: d,
        n: samples.len(),
        reference: reference.to_string(),
    })
}

/// Sorted `(t - b) / k`.
pub fn normalized_samples(dist: &EmpiricalDistribution, norm: &Normalization) -> Result<Vec<f64>> {
    if !(norm.k > 0.0 && norm.k.is_finite()) {
        return invalid(format!("scale k must be positive, got {}", norm.k));
    }
    // sorted_samples is already sorted and k > 0
    Ok(dist.sorted_samples.iter().map(|t| (t - norm.b) / norm.k).collect())
}
