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

//! Dense two-phase primal simplex with Bland's anti-cycling rule.
//!
//! Problems are stated as
//!
//! ```text
//! max (or min)  c·x
//! subject to    a_i·x  (<= | >= | =)  b_i
//!               x >= 0
//! ```
//!
//! Rows are flipped so every right-hand side is non-negative, then slack,
//! surplus and artificial columns are appended. Phase one minimizes the sum
//! of artificials; phase two optimizes the real objective with artificial
//! columns barred from entering. Entering column: lowest index with a
//! positive reduced cost. Leaving row: minimum ratio, ties to the lowest
//! basic variable index.

use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    Maximize,
    Minimize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Relation {
    Le,
    Ge,
    Eq,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Constraint {
    pub coeffs: Vec<f64>,
    pub relation: Relation,
    pub rhs: f64,
}

/// A linear program over non-negative variables.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearProgram {
    pub sense: Sense,
    pub objective: Vec<f64>,
    pub constraints: Vec<Constraint>,
}

impl LinearProgram {
    pub fn new(sense: Sense, objective: Vec<f64>) -> Self {
        LinearProgram { sense, objective, constraints: Vec::new() }
    }

    pub fn constrain(mut self, coeffs: Vec<f64>, relation: Relation, rhs: f64) -> Self {
        self.constraints.push(Constraint { coeffs, relation, rhs });
        self
    }

    pub fn num_vars(&self) -> usize {
        self.objective.len()
    }

    fn validate(&self) -> Result<(), LpError> {
        let n = self.objective.len();
        if n == 0 {
            return Err(LpError::Malformed("no variables".into()));
        }
        if self.objective.iter().any(|c| !c.is_finite()) {
            return Err(LpError::Malformed("non-finite objective coefficient".into()));
        }
        for (i, c) in self.constraints.iter().enumerate() {
            if c.coeffs.len() != n {
                return Err(LpError::Malformed(format!(
                    "constraint {i} has {} coefficients, expected {n}",
                    c.coeffs.len()
                )));
            }
            if !c.rhs.is_finite() || c.coeffs.iter().any(|a| !a.is_finite()) {
                return Err(LpError::Malformed(format!("constraint {i} has a non-finite entry")));
            }
        }
        Ok(())
    }

    /// Largest violation of any constraint or bound at `x`.
    pub fn max_violation(&self, x: &[f64]) -> f64 {
        let mut worst = x.iter().map(|&v| (-v).max(0.0)).fold(0.0, f64::max);
        for c in &self.constraints {
            let lhs: f64 = c.coeffs.iter().zip(x).map(|(a, v)| a * v).sum();
            let gap = match c.relation {
                Relation::Le => (lhs - c.rhs).max(0.0),
                Relation::Ge => (c.rhs - lhs).max(0.0),
                Relation::Eq => (lhs - c.rhs).abs(),
            };
            worst = worst.max(gap);
        }
        worst
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LpError {
    #[error("malformed linear program: {0}")]
    Malformed(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
    /// The pivot budget ran out before optimality was proven.
    IterationLimit,
    /// The final basis violates the constraints by more than the tolerance.
    NumericalFailure,
}

impl LpStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            LpStatus::Optimal => "optimal",
            LpStatus::Infeasible => "infeasible",
            LpStatus::Unbounded => "unbounded",
            LpStatus::IterationLimit => "iteration_limit",
            LpStatus::NumericalFailure => "numerical_failure",
        }
    }

    pub const ALL: [LpStatus; 5] = [
        LpStatus::Optimal,
        LpStatus::Infeasible,
        LpStatus::Unbounded,
        LpStatus::IterationLimit,
        LpStatus::NumericalFailure,
    ];
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution {
    pub status: LpStatus,
    /// Objective value in the problem's own sense; meaningful when optimal.
    pub objective: f64,
    pub x: Vec<f64>,
    pub iterations: usize,
    pub max_violation: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    /// Pivot, optimality and feasibility tolerance.
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions { tol: 1e-9, max_iter: 50_000 }
    }
}

struct Tableau {
    /// `rows` constraint rows followed by the objective row; the last
    /// column holds the right-hand side.
    cells: Vec<Vec<f64>>,
    basis: Vec<usize>,
    /// Columns allowed to enter the basis.
    allowed: Vec<bool>,
    tol: f64,
}

enum Outcome {
    Optimal,
    Unbounded,
    IterationLimit,
}

impl Tableau {
    fn rows(&self) -> usize {
        self.basis.len()
    }

    fn rhs_col(&self) -> usize {
        self.cells[0].len() - 1
    }

    fn pivot(&mut self, row: usize, col: usize) {
        let p = self.cells[row][col];
        for v in self.cells[row].iter_mut() {
            *v /= p;
        }
        let pivot_row = self.cells[row].clone();
        for (i, r) in self.cells.iter_mut().enumerate() {
            if i == row {
                continue;
            }
            let f = r[col];
            if f != 0.0 {
                for (v, pv) in r.iter_mut().zip(&pivot_row) {
                    *v -= f * pv;
                }
                r[col] = 0.0;
            }
        }
        self.basis[row] = col;
    }

    /// Installs `costs` (maximization) as the objective row, expressed in
    /// terms of the current basis.
    fn set_objective(&mut self, costs: &[f64]) {
        let m = self.rows();
        let width = self.cells[0].len();
        let mut obj = vec![0.0; width];
        obj[..costs.len()].copy_from_slice(costs);
        for i in 0..m {
            let cb = obj[self.basis[i]];
            if cb != 0.0 {
                for (o, v) in obj.iter_mut().zip(&self.cells[i]) {
                    *o -= cb * v;
                }
            }
        }
        self.cells[m] = obj;
    }

    fn run(&mut self, iterations: &mut usize, max_iter: usize) -> Outcome {
        let m = self.rows();
        let rhs = self.rhs_col();
        loop {
            let entering = (0..rhs).find(|&j| self.allowed[j] && self.cells[m][j] > self.tol);
            let Some(col) = entering else {
                return Outcome::Optimal;
            };
            if *iterations >= max_iter {
                return Outcome::IterationLimit;
            }
            let mut leave: Option<(usize, f64)> = None;
            for i in 0..m {
                let a = self.cells[i][col];
                if a <= self.tol {
                    continue;
                }
                let ratio = self.cells[i][rhs].max(0.0) / a;
                leave = match leave {
                    None => Some((i, ratio)),
                    Some((best, r)) => {
                        let tie = (ratio - r).abs() <= self.tol * (1.0 + r.abs());
                        if ratio < r && !tie || tie && self.basis[i] < self.basis[best] {
                            Some((i, ratio))
                        } else {
                            Some((best, r))
                        }
                    }
                };
            }
            let Some((row, _)) = leave else {
                return Outcome::Unbounded;
            };
            self.pivot(row, col);
            *iterations += 1;
        }
    }
}

pub fn solve_lp(lp: &LinearProgram, opts: &SolverOptions) -> Result<LpSolution, LpError> {
    lp.validate()?;
    let n = lp.num_vars();
    let m = lp.constraints.len();
    let tol = opts.tol;

    // Normalize to non-negative right-hand sides.
    let rows: Vec<(Vec<f64>, Relation, f64)> = lp
        .constraints
        .iter()
        .map(|c| {
            if c.rhs < 0.0 {
                let flipped = match c.relation {
                    Relation::Le => Relation::Ge,
                    Relation::Ge => Relation::Le,
                    Relation::Eq => Relation::Eq,
                };
                (c.coeffs.iter().map(|a| -a).collect(), flipped, -c.rhs)
            } else {
                (c.coeffs.clone(), c.relation, c.rhs)
            }
        })
        .collect();

    let n_slack = rows.iter().filter(|r| r.1 != Relation::Eq).count();
    let n_art = rows.iter().filter(|r| r.1 != Relation::Le).count();
    let width = n + n_slack + n_art + 1;
    let rhs_col = width - 1;
    let first_art = n + n_slack;

    let mut cells = vec![vec![0.0; width]; m + 1];
    let mut basis = vec![0; m];
    let (mut next_slack, mut next_art) = (n, first_art);
    for (i, (coeffs, rel, b)) in rows.iter().enumerate() {
        cells[i][..n].copy_from_slice(coeffs);
        cells[i][rhs_col] = *b;
        match rel {
            Relation::Le => {
                cells[i][next_slack] = 1.0;
                basis[i] = next_slack;
                next_slack += 1;
            }
            Relation::Ge => {
                cells[i][next_slack] = -1.0;
                next_slack += 1;
                cells[i][next_art] = 1.0;
                basis[i] = next_art;
                next_art += 1;
            }
            Relation::Eq => {
                cells[i][next_art] = 1.0;
                basis[i] = next_art;
                next_art += 1;
            }
        }
    }
    let mut tab = Tableau { cells, basis, allowed: vec![true; width - 1], tol };
    let mut iterations = 0;

    if n_art > 0 {
        let mut phase_one = vec![0.0; width - 1];
        for c in phase_one.iter_mut().skip(first_art) {
            *c = -1.0;
        }
        tab.set_objective(&phase_one);
        match tab.run(&mut iterations, opts.max_iter) {
            Outcome::Optimal => {}
            Outcome::IterationLimit => return Ok(failed(LpStatus::IterationLimit, n, iterations)),
            // Phase one is bounded by construction.
            Outcome::Unbounded => return Ok(failed(LpStatus::NumericalFailure, n, iterations)),
        }
        let scale = 1.0 + rows.iter().map(|r| r.2).fold(0.0, f64::max);
        let infeasibility: f64 = (0..m)
            .filter(|&i| tab.basis[i] >= first_art)
            .map(|i| tab.cells[i][rhs_col])
            .sum();
        if infeasibility > tol * scale {
            return Ok(failed(LpStatus::Infeasible, n, iterations));
        }
        // Pivot zero-level artificials out where a structural column can
        // replace them; rows where none can are redundant and stay inert.
        for i in 0..m {
            if tab.basis[i] >= first_art {
                if let Some(j) = (0..first_art).find(|&j| tab.cells[i][j].abs() > tol) {
                    tab.pivot(i, j);
                    iterations += 1;
                }
            }
        }
        for a in tab.allowed.iter_mut().skip(first_art) {
            *a = false;
        }
    }

    let sign = match lp.sense {
        Sense::Maximize => 1.0,
        Sense::Minimize => -1.0,
    };
    let costs: Vec<f64> = lp.objective.iter().map(|c| sign * c).collect();
    tab.set_objective(&costs);
    let outcome = tab.run(&mut iterations, opts.max_iter);

    let mut x = vec![0.0; n];
    for (i, &b) in tab.basis.iter().enumerate() {
        if b < n {
            x[b] = tab.cells[i][rhs_col].max(0.0);
        }
    }
    let objective: f64 = lp.objective.iter().zip(&x).map(|(c, v)| c * v).sum();
    let max_violation = lp.max_violation(&x);
    let status = match outcome {
        Outcome::Unbounded => LpStatus::Unbounded,
        Outcome::IterationLimit => LpStatus::IterationLimit,
        Outcome::Optimal => {
            let scale = 1.0 + lp.constraints.iter().map(|c| c.rhs.abs()).fold(0.0, f64::max);
            if max_violation <= tol * scale * 10.0 {
                LpStatus::Optimal
            } else {
                LpStatus::NumericalFailure
            }
        }
    };
    Ok(LpSolution { status, objective, x, iterations, max_violation })
}

fn failed(status: LpStatus, n: usize, iterations: usize) -> LpSolution {
    LpSolution { status, objective: f64::NAN, x: vec![0.0; n], iterations, max_violation: f64::NAN }
}
