//! Exact `W_p` between finitely supported measures in coefficient space.
//!
//! Masses are scaled to integers and the transportation problem is solved as
//! a minimum-cost flow with successive shortest paths (Dijkstra on reduced
//! costs). Uniform measures of sizes `n` and `m` scale by `lcm(n, m)` and give
//! plans whose marginals are exact.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{check_dims, Error, Result};
use crate::hilbert::{check_order, norm_pow, DiscreteMeasure, Weights};

/// Default cap on either support size.
pub const DEFAULT_SUPPORT_CAP: usize = 512;

/// Integer scale used when weights are not small-denominator rationals.
const FALLBACK_SCALE: i64 = 1 << 40;
const MAX_DENOMINATOR: i64 = 1_000_000;
const MAX_EXACT_SCALE: i64 = 1 << 40;

/// Coupling matrix `π_{ij}` between source atom `i` and target atom `j`.
#[derive(Debug, Clone, PartialEq)]
pub struct TransportPlan {
    rows: usize,
    cols: usize,
    mass: Vec<f64>,
}

impl TransportPlan {
    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn mass(&self, i: usize, j: usize) -> f64 {
        self.mass[i * self.cols + j]
    }

    pub fn row_sums(&self) -> Vec<f64> {
        self.mass.chunks_exact(self.cols).map(|r| r.iter().sum()).collect()
    }

    pub fn col_sums(&self) -> Vec<f64> {
        (0..self.cols)
            .map(|j| (0..self.rows).map(|i| self.mass(i, j)).sum())
            .collect()
    }

    /// Largest deviation of the plan's marginals from the given weights.
    pub fn marginal_residual(&self, mu: &DiscreteMeasure, nu: &DiscreteMeasure) -> f64 {
        let r = self
            .row_sums()
            .iter()
            .enumerate()
            .map(|(i, s)| (s - mu.weight(i)).abs())
            .fold(0.0, f64::max);
        let c = self
            .col_sums()
            .iter()
            .enumerate()
            .map(|(j, s)| (s - nu.weight(j)).abs())
            .fold(0.0, f64::max);
        r.max(c)
    }
}

/// `(W_p(μ, ν), optimal plan)` with the default support cap.
pub fn wasserstein_exact(
    mu: &DiscreteMeasure,
    nu: &DiscreteMeasure,
    p: f64,
) -> Result<(f64, TransportPlan)> {
    wasserstein_exact_capped(mu, nu, p, DEFAULT_SUPPORT_CAP)
}

pub fn wasserstein_exact_capped(
    mu: &DiscreteMeasure,
    nu: &DiscreteMeasure,
    p: f64,
    cap: usize,
) -> Result<(f64, TransportPlan)> {
    check_order(p)?;
    check_dims(mu.dim(), nu.dim())?;
    for size in [mu.len(), nu.len()] {
        if size > cap {
            return Err(Error::SupportCap { size, cap });
        }
    }
    let (n, m) = (mu.len(), nu.len());
    let (supply, demand, scale) = integer_masses(mu.weights(), nu.weights());

    let mut cost = vec![0.0; n * m];
    for (i, x) in mu.points().enumerate() {
        for (j, y) in nu.points().enumerate() {
            let d2: f64 = x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum();
            cost[i * m + j] = norm_pow(d2, p);
        }
    }

    let flow = transport_flow(&supply, &demand, &cost, m);
    let inv = 1.0 / scale as f64;
    let mass: Vec<f64> = flow.iter().map(|&f| f as f64 * inv).collect();
    let total: f64 = flow
        .iter()
        .zip(&cost)
        .filter(|(f, _)| **f > 0)
        .map(|(f, c)| *f as f64 * c)
        .sum::<f64>()
        * inv;
    Ok((
        total.max(0.0).powf(1.0 / p),
        TransportPlan {
            rows: n,
            cols: m,
            mass,
        },
    ))
}

fn gcd(mut a: i64, mut b: i64) -> i64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a.abs()
}

fn lcm(a: i64, b: i64) -> Option<i64> {
    (a / gcd(a, b)).checked_mul(b)
}

/// Best rational approximation with denominator ≤ `MAX_DENOMINATOR`, if it is
/// within `1e-13` of `x`.
fn rationalize(x: f64) -> Option<(i64, i64)> {
    let (mut h0, mut h1, mut k0, mut k1) = (0i64, 1i64, 1i64, 0i64);
    let mut r = x;
    for _ in 0..64 {
        let a = r.floor();
        let ai = a as i64;
        let h2 = ai.checked_mul(h1)?.checked_add(h0)?;
        let k2 = ai.checked_mul(k1)?.checked_add(k0)?;
        if k2 > MAX_DENOMINATOR {
            break;
        }
        (h0, h1, k0, k1) = (h1, h2, k1, k2);
        if (h1 as f64 / k1 as f64 - x).abs() <= 1e-13 {
            return Some((h1, k1));
        }
        let frac = r - a;
        if frac <= 0.0 {
            break;
        }
        r = 1.0 / frac;
    }
    None
}

fn integer_masses(a: &Weights, b: &Weights) -> (Vec<i64>, Vec<i64>, i64) {
    if let (Weights::Uniform(n), Weights::Uniform(m)) = (a, b) {
        let (n, m) = (*n as i64, *m as i64);
        if let Some(l) = lcm(n, m) {
            return (vec![l / n; n as usize], vec![l / m; m as usize], l);
        }
    }
    let wa = a.to_vec();
    let wb = b.to_vec();
    let exact = || -> Option<(Vec<i64>, Vec<i64>, i64)> {
        let ra: Vec<(i64, i64)> = wa.iter().map(|&w| rationalize(w)).collect::<Option<_>>()?;
        let rb: Vec<(i64, i64)> = wb.iter().map(|&w| rationalize(w)).collect::<Option<_>>()?;
        let mut l = 1i64;
        for &(_, den) in ra.iter().chain(&rb) {
            l = lcm(l, den)?;
            if l > MAX_EXACT_SCALE {
                return None;
            }
        }
        let sa: Vec<i64> = ra.iter().map(|&(num, den)| num * (l / den)).collect();
        let sb: Vec<i64> = rb.iter().map(|&(num, den)| num * (l / den)).collect();
        (sa.iter().sum::<i64>() == l && sb.iter().sum::<i64>() == l).then_some((sa, sb, l))
    };
    exact().unwrap_or_else(|| {
        (
            scaled_masses(&wa, FALLBACK_SCALE),
            scaled_masses(&wb, FALLBACK_SCALE),
            FALLBACK_SCALE,
        )
    })
}

/// Rounds `w · scale` and moves the rounding surplus onto the heaviest atom.
fn scaled_masses(w: &[f64], scale: i64) -> Vec<i64> {
    let mut out: Vec<i64> = w.iter().map(|x| (x * scale as f64).round() as i64).collect();
    let diff = scale - out.iter().sum::<i64>();
    let heaviest = (0..out.len()).max_by_key(|&i| out[i]).expect("nonempty");
    out[heaviest] += diff;
    out
}

struct Edge {
    to: usize,
    cap: i64,
    cost: f64,
}

struct FlowGraph {
    adj: Vec<Vec<usize>>,
    edges: Vec<Edge>,
}

impl FlowGraph {
    fn new(nodes: usize) -> Self {
        Self {
            adj: vec![Vec::new(); nodes],
            edges: Vec::new(),
        }
    }

    fn add_edge(&mut self, from: usize, to: usize, cap: i64, cost: f64) -> usize {
        let id = self.edges.len();
        self.edges.push(Edge { to, cap, cost });
        self.edges.push(Edge {
            to: from,
            cap: 0,
            cost: -cost,
        });
        self.adj[from].push(id);
        self.adj[to].push(id + 1);
        id
    }
}

#[derive(PartialEq)]
struct HeapItem(f64, usize);
impl Eq for HeapItem {}
impl PartialOrd for HeapItem {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for HeapItem {
    fn cmp(&self, other: &Self) -> Ordering {
        other.0.total_cmp(&self.0).then_with(|| other.1.cmp(&self.1))
    }
}

/// Successive shortest augmenting paths; returns the flow on each `(i, j)`.
fn transport_flow(supply: &[i64], demand: &[i64], cost: &[f64], cols: usize) -> Vec<i64> {
    let (n, m) = (supply.len(), demand.len());
    let source = 0;
    let sink = n + m + 1;
    let mut g = FlowGraph::new(n + m + 2);
    for (i, &s) in supply.iter().enumerate() {
        g.add_edge(source, 1 + i, s, 0.0);
    }
    let total: i64 = supply.iter().sum();
    let mut pair_edges = Vec::with_capacity(n * m);
    for i in 0..n {
        for j in 0..m {
            pair_edges.push(g.add_edge(1 + i, 1 + n + j, total, cost[i * cols + j]));
        }
    }
    for (j, &d) in demand.iter().enumerate() {
        g.add_edge(1 + n + j, sink, d, 0.0);
    }

    let nodes = n + m + 2;
    let mut potential = vec![0.0f64; nodes];
    let mut dist = vec![f64::INFINITY; nodes];
    let mut prev_edge = vec![usize::MAX; nodes];
    let mut remaining = total;
    while remaining > 0 {
        dist.fill(f64::INFINITY);
        prev_edge.fill(usize::MAX);
        dist[source] = 0.0;
        let mut heap = BinaryHeap::new();
        heap.push(HeapItem(0.0, source));
        while let Some(HeapItem(d, u)) = heap.pop() {
            if d > dist[u] {
                continue;
            }
            for &e in &g.adj[u] {
                let edge = &g.edges[e];
                if edge.cap <= 0 {
                    continue;
                }
                let reduced = (edge.cost + potential[u] - potential[edge.to]).max(0.0);
                let nd = d + reduced;
                if nd < dist[edge.to] {
                    dist[edge.to] = nd;
                    prev_edge[edge.to] = e;
                    heap.push(HeapItem(nd, edge.to));
                }
            }
        }
        if !dist[sink].is_finite() {
            // Balanced supplies always admit a path; reaching here means the
            // masses were inconsistent.
            unreachable!("no augmenting path with {remaining} units left");
        }
        for (h, d) in potential.iter_mut().zip(&dist) {
            if d.is_finite() {
                *h += d;
            }
        }
        let mut bottleneck = remaining;
        let mut v = sink;
        while v != source {
            let e = prev_edge[v];
            bottleneck = bottleneck.min(g.edges[e].cap);
            v = g.edges[e ^ 1].to;
        }
        let mut v = sink;
        while v != source {
            let e = prev_edge[v];
            g.edges[e].cap -= bottleneck;
            g.edges[e ^ 1].cap += bottleneck;
            v = g.edges[e ^ 1].to;
        }
        remaining -= bottleneck;
    }
    pair_edges.iter().map(|&e| g.edges[e ^ 1].cap).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hilbert::{CoefficientVector, MeasureSpec};

    fn measure(points: &[&[f64]]) -> DiscreteMeasure {
        DiscreteMeasure::uniform(
            points
                .iter()
                .map(|p| CoefficientVector::new(p.to_vec()).unwrap())
                .collect(),
        )
        .unwrap()
    }

    fn permutation_oracle(mu: &DiscreteMeasure, nu: &DiscreteMeasure, p: f64) -> f64 {
        fn rec(k: usize, perm: &mut Vec<usize>, f: &dyn Fn(&[usize]) -> f64, best: &mut f64) {
            if k == perm.len() {
                *best = best.min(f(perm));
                return;
            }
            for i in k..perm.len() {
                perm.swap(k, i);
                rec(k + 1, perm, f, best);
                perm.swap(k, i);
            }
        }
        let n = mu.len();
        let cost = |perm: &[usize]| -> f64 {
            perm.iter()
                .enumerate()
                .map(|(i, &j)| {
                    let d2: f64 = mu
                        .point(i)
                        .iter()
                        .zip(nu.point(j))
                        .map(|(a, b)| (a - b) * (a - b))
                        .sum();
                    d2.sqrt().powf(p)
                })
                .sum::<f64>()
                / n as f64
        };
        let mut best = f64::INFINITY;
        rec(0, &mut (0..n).collect(), &cost, &mut best);
        best.powf(1.0 / p)
    }

    #[test]
    fn identical_measures_give_identity_plan() {
        let mu = measure(&[&[0.0, 0.0], &[1.0, 2.0], &[-1.0, 0.5]]);
        let (w, plan) = wasserstein_exact(&mu, &mu, 2.0).unwrap();
        assert_eq!(w, 0.0);
        for i in 0..3 {
            for j in 0..3 {
                let expected = if i == j { 1.0 / 3.0 } else { 0.0 };
                assert!((plan.mass(i, j) - expected).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn unit_square_example() {
        let mu = measure(&[&[0.0, 0.0], &[1.0, 0.0]]);
        let nu = measure(&[&[0.0, 1.0], &[1.0, 1.0]]);
        for p in [1.0, 2.0, 3.0] {
            assert!((permutation_oracle(&mu, &nu, p) - 1.0).abs() < 1e-14);
            let (w, _) = wasserstein_exact(&mu, &nu, p).unwrap();
            assert!((w - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn matches_permutation_enumeration() {
        let spec = MeasureSpec::GaussianKl {
            eigenvalues: vec![1.0, 1.0, 1.0],
        };
        for trial in 0..30u64 {
            let mu = spec.sample(4, 2 * trial).unwrap();
            let nu = spec.sample(4, 2 * trial + 1).unwrap();
            for p in [1.0, 2.0] {
                let oracle = permutation_oracle(&mu, &nu, p);
                let (w, plan) = wasserstein_exact(&mu, &nu, p).unwrap();
                assert!((w - oracle).abs() < 1e-10, "trial {trial}: {w} vs {oracle}");
                assert!(plan.marginal_residual(&mu, &nu) < 1e-12);
            }
        }
    }

    #[test]
    fn unequal_supports_and_weights() {
        let mu = DiscreteMeasure::weighted(
            vec![
                CoefficientVector::new(vec![0.0]).unwrap(),
                CoefficientVector::new(vec![1.0]).unwrap(),
            ],
            vec![0.3, 0.7],
        )
        .unwrap();
        let nu = measure(&[&[0.0], &[2.0], &[5.0]]);
        let (w, plan) = wasserstein_exact(&mu, &nu, 1.0).unwrap();
        assert!(plan.marginal_residual(&mu, &nu) < 1e-12);
        // Same answer as the quantile coupling on the line.
        let a = crate::ot1d::Projected1DMeasure::new(vec![0.0, 1.0], mu.weights().clone()).unwrap();
        let b = crate::ot1d::Projected1DMeasure::new(vec![0.0, 2.0, 5.0], Weights::Uniform(3))
            .unwrap();
        let w1 = crate::ot1d::w1d(&a, &b, 1.0).unwrap();
        assert!((w - w1).abs() < 1e-12, "{w} vs {w1}");
    }

    #[test]
    fn irrational_weights_fall_back_to_fine_scale() {
        let third = 1.0 / std::f64::consts::PI;
        let mu = DiscreteMeasure::weighted(
            vec![
                CoefficientVector::new(vec![0.0, 0.0]).unwrap(),
                CoefficientVector::new(vec![1.0, 1.0]).unwrap(),
            ],
            vec![third, 1.0 - third],
        )
        .unwrap();
        let nu = measure(&[&[0.5, 0.0], &[0.0, 3.0], &[2.0, 2.0]]);
        let (_, plan) = wasserstein_exact(&mu, &nu, 2.0).unwrap();
        assert!(plan.marginal_residual(&mu, &nu) < 1e-12);
    }

    #[test]
    fn symmetric_value() {
        let spec = MeasureSpec::UniformBall {
            dimension: 3,
            radius: 1.0,
        };
        let mu = spec.sample(5, 1).unwrap();
        let nu = spec.sample(7, 2).unwrap();
        let (a, _) = wasserstein_exact(&mu, &nu, 2.0).unwrap();
        let (b, _) = wasserstein_exact(&nu, &mu, 2.0).unwrap();
        assert!((a - b).abs() <= 1e-12 * a.max(1.0));
    }

    #[test]
    fn cap_and_dimension_errors() {
        let mu = measure(&[&[0.0], &[1.0], &[2.0]]);
        assert!(matches!(
            wasserstein_exact_capped(&mu, &mu, 1.0, 2),
            Err(Error::SupportCap { size: 3, cap: 2 })
        ));
        let nu = measure(&[&[0.0, 1.0]]);
        assert!(matches!(
            wasserstein_exact(&mu, &nu, 1.0),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn rationalize_small_denominators() {
        assert_eq!(rationalize(0.25), Some((1, 4)));
        assert_eq!(rationalize(1.0 / 7.0), Some((1, 7)));
        assert_eq!(rationalize(1.0), Some((1, 1)));
        assert!(rationalize(std::f64::consts::PI / 10.0).is_none());
    }
}
