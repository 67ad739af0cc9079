// Licensed under the Apache License, Version 2.0 (the "License"); you may
// not use this file except in compliance with the License. You may obtain
// a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS, WITHOUT
// WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied. See the
// License for the specific language governing permissions and limitations
// under the License.

//! Independent reference implementations used as test oracles. Nothing here
//! calls into the library's algorithms; graphs are handled as raw edge lists
//! and matrices.

#![allow(dead_code, clippy::needless_range_loop)]

use std::collections::BTreeMap;

use citynet_core::econometrics::PanelDataset;
use citynet_core::netbuild::{FlowGraph, FlowGraphBuilder};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// A raw weighted digraph on nodes `0..n`, plus internal volumes.
#[derive(Debug, Clone)]
pub struct RawGraph {
    pub n: usize,
    pub w: Vec<Vec<u64>>,
    pub internal: Vec<u64>,
}

pub fn node_name(i: usize) -> String {
    format!("n{i}")
}

impl RawGraph {
    pub fn random(rng: &mut ChaCha8Rng, max_nodes: usize) -> RawGraph {
        let n = rng.random_range(2..=max_nodes);
        let p: f64 = rng.random_range(0.2..0.8);
        let mut w = vec![vec![0; n]; n];
        for (u, row) in w.iter_mut().enumerate() {
            for (v, cell) in row.iter_mut().enumerate() {
                if u != v && rng.random::<f64>() < p {
                    *cell = rng.random_range(1..1000);
                }
            }
        }
        let internal = (0..n).map(|_| if rng.random::<bool>() { rng.random_range(1..500) } else { 0 }).collect();
        RawGraph { n, w, internal }
    }

    pub fn to_flow_graph(&self, period: i32) -> FlowGraph {
        let mut b = FlowGraphBuilder::new(period);
        for u in 0..self.n {
            b.add_node(node_name(u).as_str().into());
            for v in 0..self.n {
                if self.w[u][v] > 0 {
                    b.add_flow(node_name(u).as_str().into(), node_name(v).as_str().into(), self.w[u][v]);
                }
            }
            if self.internal[u] > 0 {
                b.add_flow(node_name(u).as_str().into(), node_name(u).as_str().into(), self.internal[u]);
            }
        }
        b.build()
    }

    /// Position of raw node `i` in the library graph, which sorts names.
    pub fn index_map(&self, g: &FlowGraph) -> Vec<usize> {
        (0..self.n).map(|i| g.index_of(&node_name(i).as_str().into()).unwrap()).collect()
    }

    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut e = Vec::new();
        for u in 0..self.n {
            for v in 0..self.n {
                if u != v && self.w[u][v] > 0 {
                    e.push((u, v));
                }
            }
        }
        e
    }

    pub fn density(&self) -> f64 {
        self.edges().len() as f64 / (self.n * (self.n - 1)) as f64
    }

    pub fn in_degree(&self, v: usize) -> usize {
        (0..self.n).filter(|&u| u != v && self.w[u][v] > 0).count()
    }

    pub fn out_degree(&self, u: usize) -> usize {
        (0..self.n).filter(|&v| u != v && self.w[u][v] > 0).count()
    }

    pub fn in_strength(&self, v: usize) -> u64 {
        (0..self.n).filter(|&u| u != v).map(|u| self.w[u][v]).sum()
    }

    pub fn out_strength(&self, u: usize) -> u64 {
        (0..self.n).filter(|&v| u != v).map(|v| self.w[u][v]).sum()
    }

    /// Pearson correlation over edges of source out-degree and target
    /// in-degree, from the textbook moment formula.
    pub fn out_in_assortativity(&self) -> Option<f64> {
        let pairs: Vec<(f64, f64)> = self
            .edges()
            .into_iter()
            .map(|(u, v)| (self.out_degree(u) as f64, self.in_degree(v) as f64))
            .collect();
        pearson(&pairs)
    }

    /// All-pairs shortest paths on the undirected projection by
    /// Floyd-Warshall; diameter of the largest component (lowest index wins
    /// ties).
    pub fn diameter(&self) -> usize {
        let n = self.n;
        let inf = usize::MAX / 4;
        let mut d = vec![vec![inf; n]; n];
        for (i, row) in d.iter_mut().enumerate() {
            row[i] = 0;
        }
        for (u, v) in self.edges() {
            d[u][v] = 1;
            d[v][u] = 1;
        }
        for k in 0..n {
            for i in 0..n {
                for j in 0..n {
                    if d[i][k] + d[k][j] < d[i][j] {
                        d[i][j] = d[i][k] + d[k][j];
                    }
                }
            }
        }
        let mut best: Vec<usize> = Vec::new();
        for i in 0..n {
            let comp: Vec<usize> = (0..n).filter(|&j| d[i][j] < inf).collect();
            if comp.len() > best.len() {
                best = comp;
            }
        }
        let mut diam = 0;
        for &i in &best {
            for &j in &best {
                diam = diam.max(d[i][j]);
            }
        }
        diam
    }

    /// Dense power iteration for a fixed number of steps: builds the full
    /// Google matrix and multiplies.
    pub fn pagerank_dense(&self, damping: f64, steps: usize, reversed: bool) -> Vec<f64> {
        let n = self.n;
        let weight = |u: usize, v: usize| if u == v { 0.0 } else if reversed { self.w[v][u] as f64 } else { self.w[u][v] as f64 };
        let mut g = vec![vec![0.0; n]; n];
        for (u, row) in g.iter_mut().enumerate() {
            let s: f64 = (0..n).map(|v| weight(u, v)).sum();
            for (v, cell) in row.iter_mut().enumerate() {
                let p = if s > 0.0 { weight(u, v) / s } else { 1.0 / n as f64 };
                *cell = damping * p + (1.0 - damping) / n as f64;
            }
        }
        let mut x = vec![1.0 / n as f64; n];
        for _ in 0..steps {
            let mut next = vec![0.0; n];
            for u in 0..n {
                for v in 0..n {
                    next[v] += x[u] * g[u][v];
                }
            }
            x = next;
        }
        x
    }

    pub fn doec(&self, i: usize) -> Option<f64> {
        let ext = self.in_strength(i) as f64;
        let total = ext + self.internal[i] as f64;
        (total > 0.0).then(|| ext / total)
    }

    pub fn does(&self, i: usize) -> Option<f64> {
        let ext = self.out_strength(i) as f64;
        let total = ext + self.internal[i] as f64;
        (total > 0.0).then(|| ext / total)
    }
}

pub fn pearson(pairs: &[(f64, f64)]) -> Option<f64> {
    let m = pairs.len() as f64;
    if pairs.len() < 2 {
        return None;
    }
    let sx: f64 = pairs.iter().map(|p| p.0).sum();
    let sy: f64 = pairs.iter().map(|p| p.1).sum();
    let sxx: f64 = pairs.iter().map(|p| p.0 * p.0).sum();
    let syy: f64 = pairs.iter().map(|p| p.1 * p.1).sum();
    let sxy: f64 = pairs.iter().map(|p| p.0 * p.1).sum();
    let cov = sxy / m - sx * sy / (m * m);
    let vx = sxx / m - sx * sx / (m * m);
    let vy = syy / m - sy * sy / (m * m);
    if vx.abs() < 1e-12 || vy.abs() < 1e-12 {
        return None;
    }
    Some(cov / (vx.sqrt() * vy.sqrt()))
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Solves `a x = b` by Gaussian elimination with partial pivoting.
pub fn solve_dense(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[piv][col].abs() < 1e-12 {
            return None;
        }
        a.swap(col, piv);
        b.swap(col, piv);
        for r in col + 1..n {
            let f = a[r][col] / a[col][col];
            if f != 0.0 {
                for c in col..n {
                    a[r][c] -= f * a[col][c];
                }
                b[r] -= f * b[col];
            }
        }
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let s: f64 = (i + 1..n).map(|j| a[i][j] * x[j]).sum();
        x[i] = (b[i] - s) / a[i][i];
    }
    Some(x)
}

pub fn invert_dense(a: &[Vec<f64>]) -> Option<Vec<Vec<f64>>> {
    let n = a.len();
    let mut cols = Vec::with_capacity(n);
    for k in 0..n {
        let e: Vec<f64> = (0..n).map(|i| if i == k { 1.0 } else { 0.0 }).collect();
        cols.push(solve_dense(a.to_vec(), e)?);
    }
    Some((0..n).map(|i| (0..n).map(|j| cols[j][i]).collect()).collect())
}

/// Output-oriented DEA by brute-force vertex enumeration.
///
/// Variables `z = (phi, lambda_1..lambda_n)`. Every constraint is written as
/// `a . z <= b`; each choice of `n + 1` of them held tight gives a candidate
/// vertex, and the best feasible one is the optimum.
pub fn dea_vertex_enumeration(inputs: &[Vec<f64>], outputs: &[Vec<f64>], o: usize, nirs: bool) -> f64 {
    let n = inputs.len();
    let dim = n + 1;
    let mut rows: Vec<(Vec<f64>, f64)> = Vec::new();
    for i in 0..inputs[0].len() {
        let mut a = vec![0.0; dim];
        for j in 0..n {
            a[j + 1] = inputs[j][i];
        }
        rows.push((a, inputs[o][i]));
    }
    for r in 0..outputs[0].len() {
        // phi * y_ro - sum lambda_j y_rj <= 0
        let mut a = vec![0.0; dim];
        a[0] = outputs[o][r];
        for j in 0..n {
            a[j + 1] = -outputs[j][r];
        }
        rows.push((a, 0.0));
    }
    if nirs {
        let mut a = vec![1.0; dim];
        a[0] = 0.0;
        rows.push((a, 1.0));
    }
    for j in 0..n {
        let mut a = vec![0.0; dim];
        a[j + 1] = -1.0;
        rows.push((a, 0.0));
    }
    let mut best = f64::NEG_INFINITY;
    let m = rows.len();
    let mut pick: Vec<usize> = (0..dim).collect();
    loop {
        let a: Vec<Vec<f64>> = pick.iter().map(|&k| rows[k].0.clone()).collect();
        let b: Vec<f64> = pick.iter().map(|&k| rows[k].1).collect();
        if let Some(z) = solve_dense(a, b) {
            let feasible = rows.iter().all(|(a, b)| a.iter().zip(&z).map(|(x, y)| x * y).sum::<f64>() <= b + 1e-9);
            if feasible && z[0] > best {
                best = z[0];
            }
        }
        // next combination
        let mut k = dim;
        loop {
            if k == 0 {
                return best;
            }
            k -= 1;
            if pick[k] < m - dim + k {
                pick[k] += 1;
                for t in k + 1..dim {
                    pick[t] = pick[t - 1] + 1;
                }
                break;
            }
        }
    }
}

/// Fixed-effects regression by brute force: one dummy column per
/// region-year group appended to the regressors, normal equations solved
/// densely, and the CR1 cluster sandwich formed from the full design.
pub struct DummyFit {
    pub beta: Vec<f64>,
    pub se_cluster: Vec<f64>,
}

pub fn dummies_fit(panel: &PanelDataset, outcome: &str) -> DummyFit {
    let y = panel.outcome(outcome).unwrap();
    let rows = panel.rows();
    let p = panel.regressor_names().len();
    let mut group_of: BTreeMap<(String, i32), usize> = BTreeMap::new();
    for r in rows {
        let next = group_of.len();
        group_of.entry((r.region.as_str().to_owned(), r.year)).or_insert(next);
    }
    let k = p + group_of.len();
    let x: Vec<Vec<f64>> = rows
        .iter()
        .map(|r| {
            let mut v = r.regressors.clone();
            v.extend(std::iter::repeat_n(0.0, group_of.len()));
            v[p + group_of[&(r.region.as_str().to_owned(), r.year)]] = 1.0;
            v
        })
        .collect();
    let mut xtx = vec![vec![0.0; k]; k];
    let mut xty = vec![0.0; k];
    for (xi, yi) in x.iter().zip(&y) {
        for a in 0..k {
            xty[a] += xi[a] * yi;
            for b in 0..k {
                xtx[a][b] += xi[a] * xi[b];
            }
        }
    }
    let coef = solve_dense(xtx.clone(), xty).expect("full rank design");
    let resid: Vec<f64> = x.iter().zip(&y).map(|(xi, yi)| yi - xi.iter().zip(&coef).map(|(a, b)| a * b).sum::<f64>()).collect();
    let inv = invert_dense(&xtx).unwrap();
    let mut clusters: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
    for (i, r) in rows.iter().enumerate() {
        clusters.entry(r.city.as_str()).or_default().push(i);
    }
    let mut meat = vec![vec![0.0; k]; k];
    for members in clusters.values() {
        let mut s = vec![0.0; k];
        for &i in members {
            for a in 0..k {
                s[a] += x[i][a] * resid[i];
            }
        }
        for a in 0..k {
            for b in 0..k {
                meat[a][b] += s[a] * s[b];
            }
        }
    }
    let n = rows.len() as f64;
    let g = clusters.len() as f64;
    let factor = g / (g - 1.0) * (n - 1.0) / (n - k as f64);
    let mut se = Vec::new();
    for a in 0..p {
        let mut v = 0.0;
        for c in 0..k {
            for d in 0..k {
                v += inv[a][c] * meat[c][d] * inv[d][a];
            }
        }
        se.push((factor * v).sqrt());
    }
    DummyFit { beta: coef[..p].to_vec(), se_cluster: se }
}
