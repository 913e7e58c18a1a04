//! Brute-force oracles shared by the integration tests. None of these reuse
//! the library's traversal or counting code.
#![allow(dead_code, clippy::needless_range_loop)]

use finnet_core::{AssetSlice, BinaryNetwork, Country};
use rand::seq::SliceRandom;
use rand::Rng;

pub fn adjacency(net: &BinaryNetwork) -> Vec<Vec<bool>> {
    net.to_adjacency()
}

/// Shortest path lengths by enumerating every simple path.
pub fn brute_spl(adj: &[Vec<bool>]) -> Vec<Vec<Option<usize>>> {
    let n = adj.len();
    let mut best = vec![vec![None; n]; n];
    fn walk(
        adj: &[Vec<bool>],
        src: usize,
        at: usize,
        len: usize,
        seen: &mut Vec<bool>,
        best: &mut [Vec<Option<usize>>],
    ) {
        for next in 0..adj.len() {
            if adj[at][next] && !seen[next] {
                let slot = &mut best[src][next];
                if slot.is_none_or(|b| len + 1 < b) {
                    *slot = Some(len + 1);
                }
                seen[next] = true;
                walk(adj, src, next, len + 1, seen, best);
                seen[next] = false;
            }
        }
    }
    for s in 0..n {
        let mut seen = vec![false; n];
        seen[s] = true;
        walk(adj, s, s, 0, &mut seen, &mut best);
        best[s][s] = Some(0);
    }
    best
}

pub fn brute_aspl(adj: &[Vec<bool>]) -> f64 {
    let n = adj.len();
    if n < 2 {
        return 4.0;
    }
    let spl = brute_spl(adj);
    let mut total = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                total += match spl[i][j] {
                    Some(d) if d <= 3 => d as f64,
                    _ => 4.0,
                };
            }
        }
    }
    total / (n * (n - 1)) as f64
}

pub fn brute_frac_le(adj: &[Vec<bool>], k: usize) -> f64 {
    let n = adj.len();
    let spl = brute_spl(adj);
    let hits = (0..n)
        .flat_map(|i| (0..n).map(move |j| (i, j)))
        .filter(|&(i, j)| i != j && spl[i][j].is_some_and(|d| d <= k))
        .count();
    hits as f64 / (n * (n - 1)) as f64
}

pub fn brute_transitivity(adj: &[Vec<bool>]) -> Option<f64> {
    let n = adj.len();
    let (mut open, mut closed) = (0, 0);
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                if i == j || j == k || i == k {
                    continue;
                }
                if adj[i][j] && adj[j][k] {
                    open += 1;
                    if adj[i][k] {
                        closed += 1;
                    }
                }
            }
        }
    }
    (open > 0).then(|| closed as f64 / open as f64)
}

fn matmul(a: &[Vec<f64>], b: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let n = a.len();
    (0..n).map(|i| (0..n).map(|j| (0..n).map(|k| a[i][k] * b[k][j]).sum()).collect()).collect()
}

/// Directed clustering from matrix powers: cyc3 = diag((A+A')^3)/2 over
/// K(K-1) - 2 diag(A^2), as in the Brain Connectivity Toolbox.
pub fn matrix_clustering(adj: &[Vec<bool>]) -> f64 {
    let n = adj.len();
    let a: Vec<Vec<f64>> = adj.iter().map(|r| r.iter().map(|&b| b as u8 as f64).collect()).collect();
    let s: Vec<Vec<f64>> = (0..n).map(|i| (0..n).map(|j| a[i][j] + a[j][i]).collect()).collect();
    let s3 = matmul(&matmul(&s, &s), &s);
    let a2 = matmul(&a, &a);
    let mut total = 0.0;
    for i in 0..n {
        let cyc = s3[i][i] / 2.0;
        if cyc == 0.0 {
            continue;
        }
        let k: f64 = s[i].iter().sum();
        total += cyc / (k * (k - 1.0) - 2.0 * a2[i][i]);
    }
    total / n as f64
}

pub fn random_network<R: Rng>(n: usize, p: f64, rng: &mut R) -> BinaryNetwork {
    let mut net = BinaryNetwork::unlabeled(n);
    for i in 0..n {
        for j in 0..n {
            if i != j && rng.random_bool(p) {
                net.add_edge(i, j);
            }
        }
    }
    net
}

/// Random sparse asset slice with log-uniform holdings and GDPs.
pub fn random_slice<R: Rng>(n: usize, density: f64, rng: &mut R) -> AssetSlice {
    let mut m = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            if i != j && rng.random_bool(density) {
                m[i * n + j] = 10f64.powf(rng.random_range(-1.0..3.0));
            }
        }
    }
    let gdp = (0..n).map(|_| 10f64.powf(rng.random_range(2.0..4.0))).collect();
    let countries = (0..n).map(|i| Country(format!("C{i:02}"))).collect();
    AssetSlice::new(2007, countries, m, gdp).unwrap()
}

/// Loss-given-default fixed point computed one country at a time in a random
/// order until nothing changes.
pub fn sequential_cascade<R: Rng>(
    slice: &AssetSlice,
    initial: &[usize],
    d1: f64,
    d2: f64,
    haircut: f64,
    rng: &mut R,
) -> Vec<bool> {
    let n = slice.n();
    let mut dead = vec![false; n];
    for &i in initial {
        dead[i] = true;
    }
    loop {
        let mut order: Vec<usize> = (0..n).collect();
        order.shuffle(rng);
        let mut changed = false;
        for i in order {
            if dead[i] {
                continue;
            }
            let loss: f64 = (0..n).filter(|&j| dead[j]).map(|j| slice.holding(i, j)).sum();
            let portfolio: f64 = (0..n).map(|j| slice.holding(i, j)).sum();
            if haircut * loss > d1 * portfolio && haircut * loss > d2 * slice.gdp()[i] {
                dead[i] = true;
                changed = true;
            }
        }
        if !changed {
            return dead;
        }
    }
}
