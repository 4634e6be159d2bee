//! Independent reference computations shared by the integration targets.
//!
//! Nothing here calls into the crate's graph, net or hyperbolicity code; the
//! oracles work from raw distance tables and edge lists only.

#![allow(dead_code, clippy::needless_range_loop)]

use std::collections::{BTreeSet, VecDeque};

/// Vertices `(center, height)` and edges `{i, j}` (as `i < j`) of the filling
/// rules applied by direct enumeration.
pub struct BruteFilling {
    pub vertices: Vec<(usize, i32)>,
    pub edges: BTreeSet<(usize, usize)>,
}

pub fn brute_filling(d: &[Vec<f64>], alpha: f64, tau: f64, n_min: i32, n_max: i32) -> BruteFilling {
    let n = d.len();
    let mut vertices = Vec::new();
    for h in n_min..=n_max {
        let r = alpha.powi(-h);
        let mut net: Vec<usize> = Vec::new();
        for x in 0..n {
            if net.iter().all(|&c| d[x][c] >= r) {
                net.push(x);
            }
        }
        vertices.extend(net.into_iter().map(|c| (c, h)));
    }
    let mut edges = BTreeSet::new();
    for i in 0..vertices.len() {
        for j in i + 1..vertices.len() {
            let (ci, hi) = vertices[i];
            let (cj, hj) = vertices[j];
            if (hi - hj).abs() > 1 {
                continue;
            }
            let ri = tau * alpha.powi(-hi);
            let rj = tau * alpha.powi(-hj);
            if (0..n).any(|y| d[y][ci] < ri && d[y][cj] < rj) {
                edges.insert((i, j));
            }
        }
    }
    BruteFilling { vertices, edges }
}

/// Unweighted all-pairs distances; `None` for unreachable pairs.
pub fn bfs_all_pairs(n: usize, edges: &[(usize, usize)]) -> Vec<Vec<Option<u32>>> {
    let mut adj = vec![Vec::new(); n];
    for &(a, b) in edges {
        adj[a].push(b);
        adj[b].push(a);
    }
    (0..n)
        .map(|s| {
            let mut dist = vec![None; n];
            dist[s] = Some(0);
            let mut q = VecDeque::from([s]);
            while let Some(v) = q.pop_front() {
                let dv = dist[v].unwrap();
                for &w in &adj[v] {
                    if dist[w].is_none() {
                        dist[w] = Some(dv + 1);
                        q.push_back(w);
                    }
                }
            }
            dist
        })
        .collect()
}

/// Shortest path length by meeting breadth-first frontiers from both ends.
pub fn bidirectional_distance(n: usize, edges: &[(usize, usize)], s: usize, t: usize) -> Option<u32> {
    if s == t {
        return Some(0);
    }
    let mut adj = vec![Vec::new(); n];
    for &(a, b) in edges {
        adj[a].push(b);
        adj[b].push(a);
    }
    let mut ds = vec![u32::MAX; n];
    let mut dt = vec![u32::MAX; n];
    ds[s] = 0;
    dt[t] = 0;
    let (mut fs, mut ft) = (vec![s], vec![t]);
    let mut best = u32::MAX;
    while !fs.is_empty() && !ft.is_empty() {
        let (front, mine, other) = if fs.len() <= ft.len() { (&mut fs, &mut ds, &dt) } else { (&mut ft, &mut dt, &ds) };
        let mut next = Vec::new();
        for &v in front.iter() {
            for &w in &adj[v] {
                if other[w] != u32::MAX {
                    best = best.min(mine[v] + 1 + other[w]);
                }
                if mine[w] == u32::MAX {
                    mine[w] = mine[v] + 1;
                    next.push(w);
                }
            }
        }
        *front = next;
        if best != u32::MAX {
            return Some(best);
        }
    }
    None
}

/// Four-point δ: for every quadruple, half the gap between the largest and
/// the middle of the three pair sums.
pub fn delta_oracle(d: &[Vec<f64>]) -> f64 {
    let n = d.len();
    let mut delta = 0.0f64;
    for x in 0..n {
        for y in 0..n {
            for z in 0..n {
                for w in 0..n {
                    let mut sums = [d[x][y] + d[z][w], d[x][z] + d[y][w], d[x][w] + d[y][z]];
                    sums.sort_by(f64::total_cmp);
                    delta = delta.max((sums[2] - sums[1]) / 2.0);
                }
            }
        }
    }
    delta
}

pub fn line_table(positions: &[f64]) -> Vec<Vec<f64>> {
    positions.iter().map(|a| positions.iter().map(|b| (a - b).abs()).collect()).collect()
}
