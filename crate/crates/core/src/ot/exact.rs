//! Network simplex for the dense transportation problem.
//!
//! Minimizes `Σ c_ij x_ij` over the transportation polytope with row sums
//! `a` and column sums `b`. The basis is a spanning tree over the bipartite
//! node set; the initial basis comes from the northwest-corner rule and
//! pivots use Bland's rule (entering arc = first improving arc in row-major
//! order, leaving arc = lexicographically smallest blocking arc), which makes
//! every solve deterministic and cycling-free. Ties among equal-cost optima
//! therefore resolve lexicographically by `(i, j)`.

use super::{reduce_problem, CostMatrix, Orientation, SolverMeta, TransportPlan, EXACT_SIZE_CAP};
use crate::error::{Error, Result};
use crate::measures::DiscreteMeasure;

/// Globally optimal plan for the transportation LP. Deterministic given its
/// inputs: fixed initial basis and pivoting rule, no randomization. The
/// maximize orientation is solved as minimization of the negated costs and
/// returns the identical coupling.
pub fn solve_exact(
    mu: &DiscreteMeasure,
    nu: &DiscreteMeasure,
    cost: &CostMatrix,
) -> Result<TransportPlan> {
    if cost.n * cost.m > EXACT_SIZE_CAP {
        return Err(Error::SizeCap {
            n: cost.n,
            m: cost.m,
            cap: EXACT_SIZE_CAP,
        });
    }
    let red = reduce_problem(mu, nu, cost)?;
    let flip = cost.orientation == Orientation::Maximize;
    let sign = if flip { -1.0 } else { 1.0 };

    let n = red.rows.len();
    let m = red.cols.len();
    // Cost of the reduced minimization problem.
    let cij = |i: usize, j: usize| sign * cost.get(red.rows[i], red.cols[j]);

    let mut simplex = Simplex::new(n, m, &red.a, &red.b, &cij);
    simplex.run(&cij)?;

    // Scatter back to the full index set.
    let mut entries: Vec<(usize, usize, f64)> = simplex
        .basis
        .iter()
        .filter(|arc| arc.flow != 0.0)
        .map(|arc| (red.rows[arc.row], red.cols[arc.col], arc.flow))
        .collect();
    entries.sort_unstable_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
    // Objective in the original orientation (fixed row-major summation order).
    let mut objective = 0.0;
    for &(i, j, x) in &entries {
        objective += x * cost.get(i, j);
    }
    // Duals satisfy u_i + v_j = c_ij on basic arcs of the minimization; the
    // sign flip restores the identity on the original costs.
    let mut u = vec![f64::NAN; cost.n];
    let mut v = vec![f64::NAN; cost.m];
    for (k, &i) in red.rows.iter().enumerate() {
        u[i] = sign * simplex.u[k];
    }
    for (k, &j) in red.cols.iter().enumerate() {
        v[j] = sign * simplex.v[k];
    }
    // Dropped zero-weight points get the tight-dual convention.
    for i in 0..cost.n {
        if u[i].is_nan() {
            let fold = (0..cost.m)
                .filter(|&j| !v[j].is_nan())
                .map(|j| cost.get(i, j) - v[j]);
            u[i] = if flip {
                fold.fold(f64::NEG_INFINITY, f64::max)
            } else {
                fold.fold(f64::INFINITY, f64::min)
            };
        }
    }
    for j in 0..cost.m {
        if v[j].is_nan() {
            let fold = (0..cost.n).map(|i| cost.get(i, j) - u[i]);
            v[j] = if flip {
                fold.fold(f64::NEG_INFINITY, f64::max)
            } else {
                fold.fold(f64::INFINITY, f64::min)
            };
        }
    }

    let mut plan = TransportPlan::from_entries(
        cost.n,
        cost.m,
        entries,
        objective,
        u,
        v,
        SolverMeta {
            solver: "network-simplex".into(),
            iterations: simplex.pivots,
            marginal_residual: 0.0,
            residual_trace: Vec::new(),
        },
    );
    plan.meta.marginal_residual = plan.marginal_residual(mu.weights(), nu.weights());
    Ok(plan)
}

#[derive(Debug, Clone, Copy)]
struct Arc {
    row: usize,
    col: usize,
    flow: f64,
}

struct Simplex {
    n: usize,
    m: usize,
    basis: Vec<Arc>,
    /// Basic-arc costs, kept in step with `basis`.
    basis_cost: Vec<f64>,
    /// Node adjacency over basic arcs; nodes `0..n` are rows, `n..n+m` columns.
    adj: Vec<Vec<usize>>,
    u: Vec<f64>,
    v: Vec<f64>,
    pivots: usize,
    tol: f64,
}

impl Simplex {
    fn new(n: usize, m: usize, a: &[f64], b: &[f64], cost: &dyn Fn(usize, usize) -> f64) -> Self {
        // Northwest-corner initial basis: exactly n + m − 1 arcs forming a tree.
        let mut basis = Vec::with_capacity(n + m - 1);
        let mut arem = a.to_vec();
        let mut brem = b.to_vec();
        let (mut i, mut j) = (0usize, 0usize);
        loop {
            let x = arem[i].min(brem[j]).max(0.0);
            basis.push(Arc {
                row: i,
                col: j,
                flow: x,
            });
            arem[i] -= x;
            brem[j] -= x;
            if i + 1 == n && j + 1 == m {
                break;
            }
            if (arem[i] <= brem[j] && i + 1 < n) || j + 1 == m {
                i += 1;
            } else {
                j += 1;
            }
        }
        let mut adj = vec![Vec::new(); n + m];
        let mut basis_cost = Vec::with_capacity(basis.len());
        for (id, arc) in basis.iter().enumerate() {
            adj[arc.row].push(id);
            adj[n + arc.col].push(id);
            basis_cost.push(cost(arc.row, arc.col));
        }
        let mut scale = 0.0f64;
        for ii in 0..n {
            for jj in 0..m {
                scale = scale.max(cost(ii, jj).abs());
            }
        }
        let mut s = Self {
            n,
            m,
            basis,
            basis_cost,
            adj,
            u: vec![0.0; n],
            v: vec![0.0; m],
            pivots: 0,
            tol: 1e-12 * scale.max(1.0),
        };
        s.recompute_potentials();
        s
    }

    /// Tree traversal from row node 0 with the gauge u[0] = 0.
    fn recompute_potentials(&mut self) {
        let n = self.n;
        let mut seen = vec![false; n + self.m];
        let mut stack = vec![0usize];
        seen[0] = true;
        self.u[0] = 0.0;
        while let Some(node) = stack.pop() {
            for &aid in &self.adj[node] {
                let arc = self.basis[aid];
                let (rn, cn) = (arc.row, n + arc.col);
                let other = if rn == node { cn } else { rn };
                if seen[other] {
                    continue;
                }
                seen[other] = true;
                let c = self.basis_cost[aid];
                if other == cn {
                    self.v[arc.col] = c - self.u[arc.row];
                } else {
                    self.u[arc.row] = c - self.v[arc.col];
                }
                stack.push(other);
            }
        }
    }

    fn run(&mut self, cost: &dyn Fn(usize, usize) -> f64) -> Result<()> {
        let max_pivots = (50 * self.n * self.m).max(100_000);
        loop {
            // Bland: first arc in row-major order with negative reduced cost.
            let mut entering = None;
            'scan: for i in 0..self.n {
                for j in 0..self.m {
                    if cost(i, j) - self.u[i] - self.v[j] < -self.tol {
                        entering = Some((i, j));
                        break 'scan;
                    }
                }
            }
            let Some((ei, ej)) = entering else {
                return Ok(());
            };
            self.pivot(ei, ej, cost);
            self.pivots += 1;
            if self.pivots > max_pivots {
                return Err(Error::Invalid(format!(
                    "network simplex exceeded {max_pivots} pivots"
                )));
            }
        }
    }

    /// Basic-arc path from node `from` to node `to` (arc ids ordered from
    /// `to` back to `from`).
    fn tree_path(&self, from: usize, to: usize) -> Vec<usize> {
        let total = self.n + self.m;
        let mut prev: Vec<Option<(usize, usize)>> = vec![None; total];
        let mut seen = vec![false; total];
        let mut queue = std::collections::VecDeque::new();
        queue.push_back(from);
        seen[from] = true;
        while let Some(node) = queue.pop_front() {
            if node == to {
                break;
            }
            for &aid in &self.adj[node] {
                let arc = self.basis[aid];
                let (rn, cn) = (arc.row, self.n + arc.col);
                let other = if rn == node { cn } else { rn };
                if !seen[other] {
                    seen[other] = true;
                    prev[other] = Some((node, aid));
                    queue.push_back(other);
                }
            }
        }
        let mut arcs = Vec::new();
        let mut node = to;
        while node != from {
            let (p, aid) = prev[node].expect("basis tree is connected");
            arcs.push(aid);
            node = p;
        }
        arcs
    }

    fn pivot(&mut self, ei: usize, ej: usize, cost: &dyn Fn(usize, usize) -> f64) {
        // Cycle = entering arc (ei, ej) plus the tree path ei → n+ej. Walking
        // the path from ei, arcs at even positions lose θ, odd positions gain
        // (the path between a row node and a column node has odd length, so
        // the arcs adjacent to both endpoints of the entering arc lose).
        let mut path = self.tree_path(ei, self.n + ej);
        path.reverse(); // now ordered ei → n+ej

        let mut theta = f64::INFINITY;
        for (pos, &aid) in path.iter().enumerate() {
            if pos % 2 == 0 {
                theta = theta.min(self.basis[aid].flow);
            }
        }
        // Leaving arc: lexicographically smallest among the blocking arcs.
        let mut leaving: Option<usize> = None;
        for (pos, &aid) in path.iter().enumerate() {
            if pos % 2 == 0 && self.basis[aid].flow <= theta {
                let cand = self.basis[aid];
                leaving = match leaving {
                    None => Some(aid),
                    Some(l) => {
                        let cur = self.basis[l];
                        if (cand.row, cand.col) < (cur.row, cur.col) {
                            Some(aid)
                        } else {
                            Some(l)
                        }
                    }
                };
            }
        }
        let leaving = leaving.expect("cycle has a blocking arc");

        for (pos, &aid) in path.iter().enumerate() {
            if pos % 2 == 0 {
                self.basis[aid].flow -= theta;
            } else {
                self.basis[aid].flow += theta;
            }
        }
        // Replace the leaving arc by the entering arc, in place.
        let old = self.basis[leaving];
        self.adj[old.row].retain(|&x| x != leaving);
        self.adj[self.n + old.col].retain(|&x| x != leaving);
        self.basis[leaving] = Arc {
            row: ei,
            col: ej,
            flow: theta,
        };
        self.basis_cost[leaving] = cost(ei, ej);
        self.adj[ei].push(leaving);
        self.adj[self.n + ej].push(leaving);
        self.recompute_potentials();
    }
}
