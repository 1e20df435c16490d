//! Globally adaptive Gauss-Kronrod (7/15) quadrature on finite intervals.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

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
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

#[derive(Clone, Copy, Debug)]
pub struct QuadResult {
    pub value: f64,
    pub error: f64,
    pub converged: bool,
}

struct Piece {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Piece {
    fn eq(&self, o: &Self) -> bool {
        self.error == o.error
    }
}
impl Eq for Piece {}
impl PartialOrd for Piece {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}
impl Ord for Piece {
    fn cmp(&self, o: &Self) -> Ordering {
        self.error.total_cmp(&o.error)
    }
}

fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> Piece {
    let c = 0.5 * (a + b);
    let hl = 0.5 * (b - a);
    let fc = f(c);
    let mut k = fc * WGK[7];
    let mut g = fc * WG[3];
    for j in 0..7 {
        let dx = hl * XGK[j];
        let s = f(c - dx) + f(c + dx);
        k += WGK[j] * s;
        if j % 2 == 1 {
            g += WG[j / 2] * s;
        }
    }
    Piece {
        a,
        b,
        value: k * hl,
        error: ((k - g) * hl).abs(),
    }
}

/// Integrate `f` over `[a, b]` to absolute tolerance `tol`.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> QuadResult {
    integrate_breaks(f, &[a, b], tol)
}

/// Integrate over `[pts[0], pts[last]]`, starting with the given breakpoints.
pub fn integrate_breaks<F: Fn(f64) -> f64>(f: F, pts: &[f64], tol: f64) -> QuadResult {
    let mut pts: Vec<f64> = pts.iter().copied().filter(|x| x.is_finite()).collect();
    pts.sort_by(f64::total_cmp);
    pts.dedup();
    if pts.len() < 2 {
        return QuadResult { value: 0.0, error: 0.0, converged: true };
    }
    let mut heap = BinaryHeap::new();
    let mut error = 0.0;
    for w in pts.windows(2) {
        let p = gk15(&f, w[0], w[1]);
        error += p.error;
        heap.push(p);
    }
    let max_pieces = 20_000;
    while error > tol && heap.len() < max_pieces {
        let worst = heap.pop().unwrap();
        let m = 0.5 * (worst.a + worst.b);
        if m <= worst.a || m >= worst.b {
            heap.push(worst);
            break;
        }
        let l = gk15(&f, worst.a, m);
        let r = gk15(&f, m, worst.b);
        error += l.error + r.error - worst.error;
        heap.push(l);
        heap.push(r);
    }
    let value: f64 = heap.iter().map(|p| p.value).sum();
    let error: f64 = heap.iter().map(|p| p.error).sum();
    QuadResult {
        value,
        error,
        converged: error <= tol,
    }
}

/// Iterated integral of `f(x, y)` over `x` in `[outer[0], outer[last]]` and
/// `y` in `[inner(x)[0], inner(x)[last]]`, both with breakpoints.
pub fn dblquad<F, B>(f: F, outer: &[f64], inner: B, tol: f64) -> QuadResult
where
    F: Fn(f64, f64) -> f64,
    B: Fn(f64) -> Vec<f64>,
{
    let width = outer.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1.0);
    let inner_tol = 0.1 * tol / width;
    let converged = std::cell::Cell::new(true);
    let r = integrate_breaks(
        |x| {
            let r = integrate_breaks(|y| f(x, y), &inner(x), inner_tol);
            if !r.converged {
                converged.set(false);
            }
            r.value
        },
        outer,
        tol,
    );
    QuadResult {
        converged: r.converged && converged.get(),
        ..r
    }
}

fn cell_nodes(lo: f64, hi: f64, n: usize, extra: &[f64]) -> Vec<f64> {
    let mut nodes: Vec<f64> = (0..=n).map(|i| lo + (hi - lo) * i as f64 / n as f64).collect();
    nodes.extend(extra.iter().copied().filter(|x| *x > lo && *x < hi));
    nodes.sort_by(f64::total_cmp);
    nodes.dedup();
    nodes
}

fn cumulate(masses: impl IntoIterator<Item = f64>) -> Vec<f64> {
    let mut acc = 0.0;
    std::iter::once(0.0)
        .chain(masses.into_iter().map(|m| {
            acc += m;
            acc
        }))
        .collect()
}

/// Piecewise-linear CDF through the exact cumulative masses at its nodes.
#[derive(Clone, Debug)]
pub struct TabulatedCdf {
    nodes: Vec<f64>,
    cum: Vec<f64>,
}

impl TabulatedCdf {
    /// `n` uniform cells on `[lo, hi]` plus `extra` nodes; each cell mass is
    /// one 15-point Kronrod rule, cells in parallel.
    pub fn new<F: Fn(f64) -> f64 + Sync>(density: F, lo: f64, hi: f64, n: usize, extra: &[f64]) -> Self {
        use rayon::prelude::*;
        let nodes = cell_nodes(lo, hi, n, extra);
        let masses: Vec<f64> = nodes.par_windows(2).map(|w| gk15(&density, w[0], w[1]).value).collect();
        Self { cum: cumulate(masses), nodes }
    }

    pub fn total(&self) -> f64 {
        *self.cum.last().unwrap()
    }

    /// Mass of `(-inf, x]` captured by the table, interpolated linearly.
    pub fn cdf(&self, x: f64) -> f64 {
        let i = match self.cell(x) {
            Ok(i) => i,
            Err(v) => return v,
        };
        let w = (x - self.nodes[i]) / (self.nodes[i + 1] - self.nodes[i]);
        self.cum[i] + w * (self.cum[i + 1] - self.cum[i])
    }

    /// Cell containing `x`, or the CDF value outside the table.
    fn cell(&self, x: f64) -> Result<usize, f64> {
        if x <= self.nodes[0] {
            Err(0.0)
        } else if x >= *self.nodes.last().unwrap() {
            Err(self.total())
        } else {
            Ok(self.nodes.partition_point(|&v| v <= x) - 1)
        }
    }
}

/// Tabulated cumulative distribution built from a density on `[lo, hi]`,
/// exact inside each cell.
pub struct CdfTable<F: Fn(f64) -> f64> {
    density: F,
    table: TabulatedCdf,
}

impl<F: Fn(f64) -> f64> CdfTable<F> {
    /// `n` uniform cells on `[lo, hi]`, refined at `extra` nodes (kinks, jumps).
    pub fn new(density: F, lo: f64, hi: f64, n: usize, extra: &[f64]) -> Self {
        let nodes = cell_nodes(lo, hi, n, extra);
        let cum = cumulate(nodes.windows(2).map(|w| gk15(&density, w[0], w[1]).value));
        Self { density, table: TabulatedCdf { nodes, cum } }
    }

    /// Mass captured on `[lo, hi]`.
    pub fn total(&self) -> f64 {
        self.table.total()
    }

    pub fn lo(&self) -> f64 {
        self.table.nodes[0]
    }

    pub fn hi(&self) -> f64 {
        *self.table.nodes.last().unwrap()
    }

    /// Unnormalized CDF: integral of the density from `lo` to `x`.
    pub fn cdf(&self, x: f64) -> f64 {
        match self.table.cell(x) {
            Ok(i) => self.table.cum[i] + gk15(&self.density, self.table.nodes[i], x).value,
            Err(v) => v,
        }
    }

    /// Quantile of the normalized law at `u` in (0, 1).
    pub fn quantile(&self, u: f64) -> f64 {
        let (nodes, cum) = (&self.table.nodes, &self.table.cum);
        let target = u * self.total();
        let i = cum.partition_point(|&c| c < target).clamp(1, cum.len() - 1) - 1;
        let (a, b) = (nodes[i], nodes[i + 1]);
        let m = cum[i + 1] - cum[i];
        let mut x = if m > 0.0 { a + (b - a) * (target - cum[i]) / m } else { a };
        for _ in 0..2 {
            let f = (self.density)(x);
            if f <= 0.0 {
                break;
            }
            let nx = x - (self.cdf(x) - target) / f;
            if !(nx > a && nx < b) {
                break;
            }
            x = nx;
        }
        x
    }
}
