//! Shared generators for integration tests.
#![allow(dead_code)]

use std::collections::VecDeque;

use nalgebra::DMatrix;
use num_rational::Ratio;
use netvax::assimilation::{AssimilationProblem, Covariance, ObservationOperator};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Symmetric, strictly diagonally dominant (hence SPD) matrix.
pub fn spd_matrix(rng: &mut ChaCha8Rng, dim: usize, offdiag_density: f64) -> DMatrix<f64> {
    let mut a = DMatrix::zeros(dim, dim);
    for i in 0..dim {
        for j in i + 1..dim {
            if rng.gen_bool(offdiag_density) {
                let v = rng.gen_range(-0.5..0.5);
                a[(i, j)] = v;
                a[(j, i)] = v;
            }
        }
    }
    for i in 0..dim {
        let row: f64 = (0..dim).filter(|&j| j != i).map(|j| f64::abs(a[(i, j)])).sum();
        a[(i, i)] = row + rng.gen_range(0.5..2.0);
    }
    a
}

/// Random linear-Gaussian problem with state and observation sizes up to `max_dim`.
pub fn random_problem(seed: u64, max_dim: usize) -> AssimilationProblem {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let m = rng.gen_range(1..=max_dim);
    let d = rng.gen_range(1..=max_dim);
    let h_density = rng.gen_range(0.02..0.5);
    let mut triplets = Vec::new();
    for i in 0..d {
        for j in 0..m {
            if rng.gen_bool(h_density) {
                triplets.push((i, j, rng.gen_range(-1.0..1.0)));
            }
        }
    }
    let h = ObservationOperator::from_triplets(d, m, triplets).unwrap();
    let cov = |rng: &mut ChaCha8Rng, dim: usize| {
        if rng.gen_bool(0.3) {
            Covariance::Diagonal((0..dim).map(|_| rng.gen_range(0.2..3.0)).collect())
        } else {
            let density = (4.0 / dim as f64).min(0.5);
            Covariance::Dense(spd_matrix(rng, dim, density))
        }
    };
    let b = cov(&mut rng, m);
    let o = cov(&mut rng, d);
    let xb = (0..m).map(|_| rng.gen_range(-5.0..5.0)).collect();
    let y = (0..d).map(|_| rng.gen_range(-5.0..5.0)).collect();
    AssimilationProblem::new(xb, y, h, b, o).unwrap()
}

pub fn inf_norm_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// Central-difference gradient of `f` with per-coordinate step `h·max(1, |x_i|)`.
pub fn finite_difference<F: Fn(&[f64]) -> f64>(f: F, x: &[f64], h: f64) -> Vec<f64> {
    let mut probe = x.to_vec();
    (0..x.len())
        .map(|i| {
            let step = h * x[i].abs().max(1.0);
            probe[i] = x[i] + step;
            let up = f(&probe);
            probe[i] = x[i] - step;
            let down = f(&probe);
            probe[i] = x[i];
            (up - down) / (2.0 * step)
        })
        .collect()
}

pub type Q = Ratio<i128>;

fn adjacency(n: usize, directed: bool, edges: &[(usize, usize)]) -> Vec<Vec<usize>> {
    let mut adj = vec![Vec::new(); n];
    for &(i, j) in edges {
        if !adj[i].contains(&j) {
            adj[i].push(j);
        }
        if !directed && !adj[j].contains(&i) {
            adj[j].push(i);
        }
    }
    adj
}

fn hop_distances(adj: &[Vec<usize>], s: usize) -> Vec<Option<usize>> {
    let mut d = vec![None; adj.len()];
    d[s] = Some(0);
    let mut q = VecDeque::from([s]);
    while let Some(v) = q.pop_front() {
        for &w in &adj[v] {
            if d[w].is_none() {
                d[w] = Some(d[v].unwrap() + 1);
                q.push_back(w);
            }
        }
    }
    d
}

/// Walks every path from `v` that stays on a shortest route to `t`.
fn walk(adj: &[Vec<usize>], to_t: &[Option<usize>], v: usize, t: usize, path: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
    if v == t {
        out.push(path.clone());
        return;
    }
    let here = to_t[v].unwrap();
    for &w in &adj[v] {
        if to_t[w] == Some(here - 1) {
            path.push(w);
            walk(adj, to_t, w, t, path, out);
            path.pop();
        }
    }
}

/// Brute force: list every shortest s-t path and credit interior nodes with
/// 1/(number of paths). Undirected graphs count each unordered pair once.
pub fn enumerate_betweenness(n: usize, directed: bool, edges: &[(usize, usize)]) -> Vec<Q> {
    let adj = adjacency(n, directed, edges);
    let mut rev = vec![Vec::new(); n];
    for (v, out) in adj.iter().enumerate() {
        for &w in out {
            rev[w].push(v);
        }
    }
    let mut bc = vec![Q::from_integer(0); n];
    for t in 0..n {
        let to_t = hop_distances(&rev, t);
        for s in 0..n {
            if s == t || (!directed && s > t) || to_t[s].is_none() {
                continue;
            }
            let mut paths = Vec::new();
            walk(&adj, &to_t, s, t, &mut vec![s], &mut paths);
            let share = Q::new(1, paths.len() as i128);
            for p in &paths {
                for &v in &p[1..p.len() - 1] {
                    bc[v] += share;
                }
            }
        }
    }
    bc
}

pub fn ratio_to_f64(q: &Q) -> f64 {
    *q.numer() as f64 / *q.denom() as f64
}
