//! Globally adaptive Gauss-Kronrod (7/15) quadrature on finite intervals.
//!
//! The local error estimate is the raw `|K15 - G7|` difference, which is
//! pessimistic for smooth integrands; the reported error is the sum of the
//! local estimates.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use rayon::prelude::*;

use crate::seqmodel::compensated_sum;

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];

const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_18,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_83,
];

// Gauss weights for XGK[1], XGK[3], XGK[5], XGK[7].
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

#[derive(Debug, Clone, Copy)]
pub struct QuadOptions {
    pub max_intervals: usize,
    pub initial_pieces: usize,
    /// Evaluate the 15 nodes of a panel on the rayon pool. Node values are
    /// collected in order, so the result does not depend on scheduling.
    pub parallel_nodes: bool,
}

impl Default for QuadOptions {
    fn default() -> Self {
        Self {
            max_intervals: 20_000,
            initial_pieces: 8,
            parallel_nodes: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadOutcome {
    pub value: f64,
    pub error: f64,
    pub evals: usize,
}

#[derive(Debug, Clone, Copy)]
struct Panel {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Panel {}
impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Panel {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

fn nodes(a: f64, b: f64) -> [f64; 15] {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let mut x = [c; 15];
    for i in 0..7 {
        x[2 * i] = c - h * XGK[i];
        x[2 * i + 1] = c + h * XGK[i];
    }
    x
}

fn kronrod<F>(f: &F, a: f64, b: f64, parallel: bool) -> Panel
where
    F: Fn(f64) -> f64 + Sync,
{
    let x = nodes(a, b);
    let fx: Vec<f64> = if parallel {
        x.par_iter().map(|&t| f(t)).collect()
    } else {
        x.iter().map(|&t| f(t)).collect()
    };
    let h = 0.5 * (b - a);
    let mut k = WGK[7] * fx[14];
    let mut g = WG[3] * fx[14];
    for i in 0..7 {
        let pair = fx[2 * i] + fx[2 * i + 1];
        k += WGK[i] * pair;
        if i % 2 == 1 {
            g += WG[i / 2] * pair;
        }
    }
    Panel {
        a,
        b,
        value: k * h,
        error: ((k - g) * h).abs(),
    }
}

/// Integrate `f` over `[a, b]` to absolute tolerance `tol`.
///
/// Returns `Err` with the best available estimate when the interval budget
/// runs out or panels can no longer be split.
pub fn integrate<F>(f: F, a: f64, b: f64, tol: f64, opts: QuadOptions) -> Result<QuadOutcome, QuadOutcome>
where
    F: Fn(f64) -> f64 + Sync,
{
    if b <= a {
        return Ok(QuadOutcome {
            value: 0.0,
            error: 0.0,
            evals: 0,
        });
    }
    let pieces = opts.initial_pieces.max(1);
    let width = (b - a) / pieces as f64;
    let mut heap = BinaryHeap::new();
    let mut frozen: Vec<Panel> = Vec::new();
    let mut evals = 0usize;
    for i in 0..pieces {
        let lo = a + width * i as f64;
        let hi = if i + 1 == pieces { b } else { lo + width };
        heap.push(kronrod(&f, lo, hi, opts.parallel_nodes));
        evals += 15;
    }
    let total_error = |heap: &BinaryHeap<Panel>, frozen: &[Panel]| -> f64 {
        heap.iter().map(|p| p.error).sum::<f64>() + frozen.iter().map(|p| p.error).sum::<f64>()
    };
    let mut err = total_error(&heap, &frozen);
    let mut count = pieces;
    while err > tol && count < opts.max_intervals {
        let Some(worst) = heap.pop() else { break };
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a || mid >= worst.b || (worst.b - worst.a) < 1e-13 * (b - a) {
            frozen.push(worst);
            continue;
        }
        let left = kronrod(&f, worst.a, mid, opts.parallel_nodes);
        let right = kronrod(&f, mid, worst.b, opts.parallel_nodes);
        evals += 30;
        err += left.error + right.error - worst.error;
        heap.push(left);
        heap.push(right);
        count += 1;
        if count.is_multiple_of(256) {
            err = total_error(&heap, &frozen);
        }
    }
    let all: Vec<Panel> = heap.into_iter().chain(frozen).collect();
    let out = QuadOutcome {
        value: compensated_sum(all.iter().map(|p| p.value)),
        error: all.iter().map(|p| p.error).sum(),
        evals,
    };
    if out.error <= tol {
        Ok(out)
    } else {
        Err(out)
    }
}
