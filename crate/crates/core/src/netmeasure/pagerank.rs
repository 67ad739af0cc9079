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

//! Weighted PageRank by power iteration.
//!
//! The recurrence is
//!
//! > x(v) = (1 − α)/N + α ( Σ_{u → v} x(u) · w(u, v) / s(u) + D/N )
//!
//! where `s(u)` is the out-strength of `u` (its out-degree in the unweighted
//! variant) and `D` is the mass currently sitting on dangling nodes, which
//! is spread uniformly. After every step the vector is renormalized to sum
//! to one so rounding drift cannot accumulate. Iteration stops once the L1
//! change falls below the tolerance.
//!
//! Downstream centrality is PageRank on the money-flow graph; upstream
//! centrality is PageRank on its reversal.

use super::MeasureError;
use crate::netbuild::{reverse, FlowGraph};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Weighting {
    /// Transition probabilities proportional to transferred volume.
    #[default]
    Volume,
    /// Every out-link equally likely.
    Uniform,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PageRankConfig {
    pub damping: f64,
    pub tol: f64,
    pub max_iter: usize,
    pub weighting: Weighting,
}

impl Default for PageRankConfig {
    fn default() -> Self {
        PageRankConfig { damping: 0.85, tol: 1e-12, max_iter: 10_000, weighting: Weighting::Volume }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PageRank {
    /// Indexed like [`FlowGraph::nodes`].
    pub scores: Vec<f64>,
    pub iterations: usize,
    /// L1 change of the last step.
    pub residual: f64,
    pub converged: bool,
}

pub fn pagerank(g: &FlowGraph, cfg: &PageRankConfig) -> Result<PageRank, MeasureError> {
    let n = g.node_count();
    if n == 0 {
        return Err(MeasureError::EmptyGraph);
    }
    if !(cfg.damping > 0.0 && cfg.damping < 1.0) {
        return Err(MeasureError::InvalidParameter(format!("damping {} outside (0, 1)", cfg.damping)));
    }
    if !(cfg.tol > 0.0) {
        return Err(MeasureError::InvalidParameter(format!("tolerance {} must be positive", cfg.tol)));
    }

    let edge_weight = |w: u64| match cfg.weighting {
        Weighting::Volume => w as f64,
        Weighting::Uniform => 1.0,
    };
    let mut out_strength = vec![0.0; n];
    for (u, _, w) in g.edges() {
        out_strength[u] += edge_weight(w);
    }
    // Predecessor lists with transition probabilities, ordered by source.
    let mut incoming: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
    for (u, v, w) in g.edges() {
        incoming[v].push((u, edge_weight(w) / out_strength[u]));
    }
    let dangling: Vec<usize> = (0..n).filter(|&u| out_strength[u] == 0.0).collect();

    let alpha = cfg.damping;
    let nf = n as f64;
    let mut x = vec![1.0 / nf; n];
    let mut next = vec![0.0; n];
    let mut residual = f64::INFINITY;
    let mut iterations = 0;
    while iterations < cfg.max_iter {
        iterations += 1;
        let dangling_mass: f64 = dangling.iter().map(|&u| x[u]).sum();
        let base = (1.0 - alpha) / nf + alpha * dangling_mass / nf;
        for (v, preds) in incoming.iter().enumerate() {
            let flow: f64 = preds.iter().map(|&(u, p)| x[u] * p).sum();
            next[v] = base + alpha * flow;
        }
        let total: f64 = next.iter().sum();
        for value in &mut next {
            *value /= total;
        }
        residual = x.iter().zip(&next).map(|(a, b)| (a - b).abs()).sum();
        std::mem::swap(&mut x, &mut next);
        if residual < cfg.tol {
            break;
        }
    }
    Ok(PageRank { scores: x, iterations, residual, converged: residual < cfg.tol })
}

/// `(downstream, upstream)`: PageRank on `g` and on its reversal.
pub fn centrality_both(g: &FlowGraph, cfg: &PageRankConfig) -> Result<(PageRank, PageRank), MeasureError> {
    let down = pagerank(g, cfg)?;
    let up = pagerank(&reverse(g), cfg)?;
    Ok((down, up))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::netbuild::FlowGraphBuilder;

    #[test]
    fn two_cycle_is_uniform() {
        let g = FlowGraphBuilder::new(0).flow("1", "2", 10).flow("2", "1", 10).build();
        let pr = pagerank(&g, &PageRankConfig::default()).unwrap();
        assert!(pr.converged);
        for s in pr.scores {
            assert!((s - 0.5).abs() < 1e-12);
        }
    }

    #[test]
    fn complete_symmetric_graph_is_uniform() {
        let mut b = FlowGraphBuilder::new(0);
        for u in 0..7 {
            for v in 0..7 {
                if u != v {
                    b.add_flow(u.to_string().as_str().into(), v.to_string().as_str().into(), 3);
                }
            }
        }
        let pr = pagerank(&b.build(), &PageRankConfig::default()).unwrap();
        for s in pr.scores {
            assert!((s - 1.0 / 7.0).abs() < 1e-12);
        }
    }

    #[test]
    fn sink_and_source() {
        let g = FlowGraphBuilder::new(0).flow("src", "sink", 500).build();
        let (down, up) = centrality_both(&g, &PageRankConfig::default()).unwrap();
        let (sink, src) = (g.index_of(&"sink".into()).unwrap(), g.index_of(&"src".into()).unwrap());
        assert!(down.scores[sink] > down.scores[src]);
        assert!(down.scores[sink] > up.scores[sink]);
    }

    #[test]
    fn non_convergence_is_flagged() {
        let g = FlowGraphBuilder::new(0).flow("a", "b", 1).flow("a", "c", 5).flow("b", "c", 2).flow("c", "a", 2).build();
        let cfg = PageRankConfig { max_iter: 2, ..Default::default() };
        let pr = pagerank(&g, &cfg).unwrap();
        assert!(!pr.converged);
        assert_eq!(pr.iterations, 2);
        assert!((pr.scores.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_parameters() {
        let g = FlowGraphBuilder::new(0).flow("a", "b", 1).build();
        for damping in [0.0, 1.0, -0.5, f64::NAN] {
            let cfg = PageRankConfig { damping, ..Default::default() };
            assert!(matches!(pagerank(&g, &cfg), Err(MeasureError::InvalidParameter(_))));
        }
        let cfg = PageRankConfig { tol: 0.0, ..Default::default() };
        assert!(pagerank(&g, &cfg).is_err());
        assert!(matches!(
            pagerank(&FlowGraphBuilder::new(0).build(), &PageRankConfig::default()),
            Err(MeasureError::EmptyGraph)
        ));
    }

    #[test]
    fn uniform_weighting_ignores_volumes() {
        let g = FlowGraphBuilder::new(0).flow("a", "b", 1).flow("a", "c", 1000).flow("b", "a", 1).flow("c", "a", 1).build();
        let cfg = PageRankConfig { weighting: Weighting::Uniform, ..Default::default() };
        let pr = pagerank(&g, &cfg).unwrap();
        assert!((pr.scores[1] - pr.scores[2]).abs() < 1e-12);
        let weighted = pagerank(&g, &PageRankConfig::default()).unwrap();
        assert!(weighted.scores[2] > weighted.scores[1]);
    }
}
