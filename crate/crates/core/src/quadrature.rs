//! Quadrature rules: fixed Gauss–Legendre, globally adaptive Gauss–Kronrod
//! (G7/K15), adaptive Simpson, and frozen composite rules that can be reused
//! across many integrands sharing a partition.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::scalar::{lit, Real};

/// n-point Gauss–Legendre rule on [-1, 1].
#[derive(Debug, Clone)]
pub struct GaussLegendre<T> {
    nodes: Vec<T>,
    weights: Vec<T>,
}

impl<T: Real> GaussLegendre<T> {
    /// Builds the rule by Newton iteration on the Legendre polynomial (in `f64`).
    pub fn new(order: usize) -> Self {
        assert!(order >= 1, "Gauss-Legendre order must be positive");
        let n = order;
        let mut nodes = vec![0.0f64; n];
        let mut weights = vec![0.0f64; n];
        for i in 0..n.div_ceil(2) {
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre_with_derivative(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre_with_derivative(n, x);
            if d != 0.0 {
                dp = d;
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        if n % 2 == 1 {
            nodes[n / 2] = 0.0;
        }
        Self {
            nodes: nodes.into_iter().map(T::lit).collect(),
            weights: weights.into_iter().map(T::lit).collect(),
        }
    }

    pub fn order(&self) -> usize {
        self.nodes.len()
    }

    pub fn nodes(&self) -> &[T] {
        &self.nodes
    }

    pub fn weights(&self) -> &[T] {
        &self.weights
    }

    /// Integral of `f` over [a, b].
    pub fn integrate<F: Fn(T) -> T>(&self, f: F, a: T, b: T) -> T {
        let half = (b - a) * lit(0.5);
        let mid = (a + b) * lit(0.5);
        let mut acc = T::zero();
        for (x, w) in self.nodes.iter().zip(&self.weights) {
            acc = acc + *w * f(mid + half * *x);
        }
        acc * half
    }
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

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
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

/// Kronrod-15 estimate and |K15 - G7| error estimate on [a, b].
fn gk15<T: Real, F: Fn(T) -> T>(f: &F, a: T, b: T) -> (T, T) {
    let half = (b - a) * lit(0.5);
    let mid = (a + b) * lit(0.5);
    let fc = f(mid);
    let mut kron = fc * lit(WGK[7]);
    let mut gauss = fc * lit(WG[3]);
    for j in 0..7 {
        let dx = half * lit(XGK[j]);
        let s = f(mid - dx) + f(mid + dx);
        kron = kron + s * lit(WGK[j]);
        if j % 2 == 1 {
            gauss = gauss + s * lit(WG[j / 2]);
        }
    }
    let value = kron * half;
    let err = ((kron - gauss) * half).abs();
    (value, err)
}

/// Stopping rule for the adaptive integrators.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdaptiveOptions {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_intervals: usize,
}

impl Default for AdaptiveOptions {
    fn default() -> Self {
        Self {
            abs_tol: 1e-12,
            rel_tol: 1e-10,
            max_intervals: 20_000,
        }
    }
}

/// Result of an adaptive integration.
#[derive(Debug, Clone, Copy)]
pub struct Integral<T> {
    pub value: T,
    pub error: T,
    pub converged: bool,
    pub intervals: usize,
}

#[derive(Debug)]
struct Panel<T> {
    a: T,
    b: T,
    value: T,
    error: T,
    seq: usize,
}

impl<T: Real> PartialEq for Panel<T> {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl<T: Real> Eq for Panel<T> {}
impl<T: Real> PartialOrd for Panel<T> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl<T: Real> Ord for Panel<T> {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error
            .as_f64()
            .total_cmp(&other.error.as_f64())
            .then_with(|| other.seq.cmp(&self.seq))
    }
}

/// Globally adaptive G7/K15 integration over the partition `points`
/// (sorted, first and last entries are the integration limits). The worst
/// panel is bisected until the summed error estimate meets the tolerance.
/// Returns the integral and the final partition.
pub fn gauss_kronrod<T: Real, F: Fn(T) -> T>(
    f: F,
    points: &[T],
    opts: AdaptiveOptions,
) -> (Integral<T>, Vec<(T, T)>) {
    let mut heap = BinaryHeap::new();
    let mut seq = 0usize;
    let mut total = T::zero();
    let mut total_err = T::zero();
    for w in points.windows(2) {
        let (a, b) = (w[0], w[1]);
        if b <= a {
            continue;
        }
        let (value, error) = gk15(&f, a, b);
        total = total + value;
        total_err = total_err + error;
        heap.push(Panel {
            a,
            b,
            value,
            error,
            seq,
        });
        seq += 1;
    }
    let tol_of = |v: T| -> T { lit::<T>(opts.abs_tol).max(lit::<T>(opts.rel_tol) * v.abs()) };
    let mut converged = true;
    loop {
        if !total.is_finite() || !total_err.is_finite() {
            converged = false;
            break;
        }
        if total_err <= tol_of(total) {
            break;
        }
        if heap.len() >= opts.max_intervals {
            converged = false;
            break;
        }
        let worst = match heap.pop() {
            Some(p) => p,
            None => break,
        };
        let mid = (worst.a + worst.b) * lit(0.5);
        if mid <= worst.a || mid >= worst.b {
            // Interval cannot be split further in this precision.
            heap.push(worst);
            converged = false;
            break;
        }
        let (v1, e1) = gk15(&f, worst.a, mid);
        let (v2, e2) = gk15(&f, mid, worst.b);
        total = total - worst.value + v1 + v2;
        total_err = total_err - worst.error + e1 + e2;
        heap.push(Panel {
            a: worst.a,
            b: mid,
            value: v1,
            error: e1,
            seq,
        });
        heap.push(Panel {
            a: mid,
            b: worst.b,
            value: v2,
            error: e2,
            seq: seq + 1,
        });
        seq += 2;
    }
    // Re-sum from the panels to shed accumulated cancellation error.
    let mut panels: Vec<Panel<T>> = heap.into_vec();
    panels.sort_by(|p, q| p.a.as_f64().total_cmp(&q.a.as_f64()));
    if total.is_finite() {
        total = panels.iter().map(|p| p.value).sum();
        total_err = panels.iter().map(|p| p.error).sum();
    }
    let intervals = panels.len();
    let partition = panels.iter().map(|p| (p.a, p.b)).collect();
    (
        Integral {
            value: total,
            error: total_err,
            converged,
            intervals,
        },
        partition,
    )
}

/// Adaptive Simpson quadrature on [a, b] with absolute tolerance `tol`.
pub fn adaptive_simpson<T: Real, F: Fn(T) -> T>(f: &F, a: T, b: T, tol: T, max_depth: u32) -> T {
    let fa = f(a);
    let fb = f(b);
    let m = (a + b) * lit(0.5);
    let fm = f(m);
    let whole = (b - a) / lit(6.0) * (fa + lit::<T>(4.0) * fm + fb);
    simpson_step(f, a, b, fa, fm, fb, whole, tol, max_depth)
}

#[allow(clippy::too_many_arguments)]
fn simpson_step<T: Real, F: Fn(T) -> T>(
    f: &F,
    a: T,
    b: T,
    fa: T,
    fm: T,
    fb: T,
    whole: T,
    tol: T,
    depth: u32,
) -> T {
    let m = (a + b) * lit(0.5);
    let lm = (a + m) * lit(0.5);
    let rm = (m + b) * lit(0.5);
    let flm = f(lm);
    let frm = f(rm);
    let left = (m - a) / lit(6.0) * (fa + lit::<T>(4.0) * flm + fm);
    let right = (b - m) / lit(6.0) * (fm + lit::<T>(4.0) * frm + fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= lit::<T>(15.0) * tol {
        return left + right + delta / lit(15.0);
    }
    let half_tol = tol * lit(0.5);
    simpson_step(f, a, m, fa, flm, fm, left, half_tol, depth - 1)
        + simpson_step(f, m, b, fm, frm, fb, right, half_tol, depth - 1)
}

/// A composite rule (nodes and weights) frozen from an adaptive partition.
/// Integrating a different function against it costs one pass over the nodes.
#[derive(Debug, Clone, Default)]
pub struct FrozenRule<T> {
    pub nodes: Vec<T>,
    pub weights: Vec<T>,
}

impl<T: Real> FrozenRule<T> {
    /// Kronrod-15 nodes on every panel of `partition`.
    pub fn from_partition(partition: &[(T, T)]) -> Self {
        let mut nodes = Vec::with_capacity(partition.len() * 15);
        let mut weights = Vec::with_capacity(partition.len() * 15);
        for &(a, b) in partition {
            let half = (b - a) * lit(0.5);
            let mid = (a + b) * lit(0.5);
            for j in 0..7 {
                let dx = half * lit(XGK[j]);
                nodes.push(mid - dx);
                weights.push(half * lit(WGK[j]));
                nodes.push(mid + dx);
                weights.push(half * lit(WGK[j]));
            }
            nodes.push(mid);
            weights.push(half * lit(WGK[7]));
        }
        Self { nodes, weights }
    }

    /// Adapts a partition to `f` and freezes it.
    pub fn adapted<F: Fn(T) -> T>(
        f: F,
        points: &[T],
        opts: AdaptiveOptions,
    ) -> (Self, Integral<T>) {
        let (integral, partition) = gauss_kronrod(f, points, opts);
        (Self::from_partition(&partition), integral)
    }

    pub fn integrate<F: Fn(T) -> T>(&self, f: F) -> T {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(x, w)| *w * f(*x))
            .sum()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn gauss_legendre_is_exact_for_polynomials() {
        let rule = GaussLegendre::<f64>::new(16);
        // degree 31 is the highest exactly integrated
        let v = rule.integrate(|x| x.powi(30) + x.powi(31), -1.0, 1.0);
        assert_abs_diff_eq!(v, 2.0 / 31.0, epsilon = 1e-14);
        let w: f64 = rule.weights().iter().sum();
        assert_abs_diff_eq!(w, 2.0, epsilon = 1e-14);
    }

    #[test]
    fn odd_order_has_center_node() {
        let rule = GaussLegendre::<f64>::new(5);
        assert_eq!(rule.nodes()[2], 0.0);
        assert_abs_diff_eq!(rule.integrate(|x| x * x, 0.0, 3.0), 9.0, epsilon = 1e-13);
    }

    #[test]
    fn kronrod_handles_kinks_with_refinement() {
        let (res, part) = gauss_kronrod(
            |x: f64| (x - 0.3).abs(),
            &[0.0, 1.0],
            AdaptiveOptions::default(),
        );
        assert!(res.converged);
        assert_abs_diff_eq!(res.value, 0.045 + 0.245, epsilon = 1e-11);
        assert!(part.len() > 1);
    }

    #[test]
    fn kronrod_reports_infinite_integrands() {
        let (res, _) = gauss_kronrod(
            |_x: f64| f64::INFINITY,
            &[0.0, 1.0],
            AdaptiveOptions::default(),
        );
        assert!(res.value.is_infinite());
        assert!(!res.converged);
    }

    #[test]
    fn simpson_matches_sine_integral() {
        let v = adaptive_simpson(&|x: f64| x.sin(), 0.0, std::f64::consts::PI, 1e-12, 40);
        assert_abs_diff_eq!(v, 2.0, epsilon = 1e-10);
    }

    #[test]
    fn frozen_rule_reproduces_adaptive_value() {
        let f = |x: f64| (5.0 * x).exp() * (x - 0.5).abs();
        let (rule, res) = FrozenRule::adapted(f, &[0.0, 1.0], AdaptiveOptions::default());
        assert_abs_diff_eq!(rule.integrate(f), res.value, epsilon = 1e-12);
    }

    #[test]
    fn works_in_single_precision() {
        let rule = GaussLegendre::<f32>::new(8);
        assert!((rule.integrate(|x| x * x, 0.0, 1.0) - 1.0 / 3.0).abs() < 1e-6);
    }
}
