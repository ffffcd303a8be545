//! Dense bounded-variable primal simplex.
//!
//! Solves `max c'x  s.t.  A x (<=|=|>=) b,  l <= x <= u` with finite lower
//! bounds. Two phases with artificial variables; Dantzig pricing with a
//! switch to Bland's rule while the iteration stalls on degenerate pivots.
//! Pivoting is fully deterministic.

/// Feasibility tolerance on the final primal residuals.
pub const FEAS_TOL: f64 = 1e-9;
const PIVOT_TOL: f64 = 1e-11;
const COST_TOL: f64 = 1e-10;
const PHASE1_TOL: f64 = 1e-8;
const DEGENERATE_STREAK: usize = 40;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    Le,
    Eq,
    Ge,
}

#[derive(Debug, Clone)]
pub struct Row {
    pub coeffs: Vec<(usize, f64)>,
    pub sense: Sense,
    pub rhs: f64,
}

#[derive(Debug, Clone, Default)]
pub struct LinearProgram {
    pub objective: Vec<f64>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub rows: Vec<Row>,
}

#[derive(Debug, Clone)]
pub struct LpSolution {
    pub x: Vec<f64>,
    pub objective: f64,
    pub iterations: usize,
}

#[derive(Debug, Clone)]
pub enum LpOutcome {
    Optimal(LpSolution),
    Infeasible,
    Unbounded,
    /// Iteration limit or residual check failed.
    Numerical(String),
}

impl LinearProgram {
    pub fn num_vars(&self) -> usize {
        self.objective.len()
    }

    pub fn add_var(&mut self, objective: f64, lower: f64, upper: f64) -> usize {
        self.objective.push(objective);
        self.lower.push(lower);
        self.upper.push(upper);
        self.objective.len() - 1
    }

    pub fn add_row(&mut self, coeffs: Vec<(usize, f64)>, sense: Sense, rhs: f64) {
        self.rows.push(Row { coeffs, sense, rhs });
    }

    /// Largest violation of any row or bound at `x`.
    pub fn max_violation(&self, x: &[f64]) -> f64 {
        let mut worst: f64 = 0.0;
        for (j, &v) in x.iter().enumerate() {
            worst = worst.max(self.lower[j] - v).max(v - self.upper[j]);
        }
        for row in &self.rows {
            let lhs: f64 = row.coeffs.iter().map(|&(j, a)| a * x[j]).sum();
            let viol = match row.sense {
                Sense::Le => lhs - row.rhs,
                Sense::Ge => row.rhs - lhs,
                Sense::Eq => (lhs - row.rhs).abs(),
            };
            worst = worst.max(viol);
        }
        worst
    }

    pub fn objective_value(&self, x: &[f64]) -> f64 {
        self.objective.iter().zip(x).map(|(c, v)| c * v).sum()
    }

    pub fn solve(&self) -> LpOutcome {
        match Tableau::build(self) {
            Ok(mut t) => t.run(self),
            Err(msg) => LpOutcome::Numerical(msg),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum State {
    Basic,
    Lower,
    Upper,
}

struct Tableau {
    m: usize,
    n_struct: usize,
    n_total: usize,
    first_artificial: usize,
    tab: Vec<f64>,
    reduced: Vec<f64>,
    beta: Vec<f64>,
    basis: Vec<usize>,
    state: Vec<State>,
    upper: Vec<f64>,
    cost: Vec<f64>,
    iterations: usize,
}

enum Step {
    Optimal,
    Unbounded,
}

impl Tableau {
    fn build(lp: &LinearProgram) -> Result<Self, String> {
        let n = lp.num_vars();
        if lp.lower.len() != n || lp.upper.len() != n {
            return Err("bound vectors do not match the objective length".into());
        }
        for j in 0..n {
            if !lp.lower[j].is_finite() {
                return Err(format!("variable {j} has no finite lower bound"));
            }
            if lp.upper[j] < lp.lower[j] {
                return Err(format!("variable {j} has empty bounds"));
            }
        }
        let m = lp.rows.len();
        let n_slack = lp.rows.iter().filter(|r| r.sense != Sense::Eq).count();

        // Shift to zero lower bounds and make every rhs non-negative.
        let mut dense = vec![0.0; m * n];
        let mut rhs = vec![0.0; m];
        let mut slack_sign = vec![0.0; m];
        for (i, row) in lp.rows.iter().enumerate() {
            let mut b = row.rhs;
            for &(j, a) in &row.coeffs {
                if j >= n {
                    return Err(format!("row {i} references unknown variable {j}"));
                }
                dense[i * n + j] += a;
                b -= a * lp.lower[j];
            }
            let mut sign = match row.sense {
                Sense::Le => 1.0,
                Sense::Ge => -1.0,
                Sense::Eq => 0.0,
            };
            if b < 0.0 {
                b = -b;
                sign = -sign;
                for v in &mut dense[i * n..(i + 1) * n] {
                    *v = -*v;
                }
            }
            rhs[i] = b;
            slack_sign[i] = sign;
        }
        let needs_artificial: Vec<bool> = slack_sign.iter().map(|s| *s <= 0.0).collect();
        let n_art = needs_artificial.iter().filter(|b| **b).count();
        let first_artificial = n + n_slack;
        let n_total = first_artificial + n_art;

        let mut tab = vec![0.0; m * n_total];
        let mut upper = vec![f64::INFINITY; n_total];
        for j in 0..n {
            upper[j] = lp.upper[j] - lp.lower[j];
        }
        let mut basis = vec![0; m];
        let mut state = vec![State::Lower; n_total];
        let mut slack = n;
        let mut art = first_artificial;
        for i in 0..m {
            let row = &mut tab[i * n_total..(i + 1) * n_total];
            row[..n].copy_from_slice(&dense[i * n..(i + 1) * n]);
            if slack_sign[i] != 0.0 {
                row[slack] = slack_sign[i];
                if slack_sign[i] > 0.0 {
                    basis[i] = slack;
                }
                slack += 1;
            }
            if needs_artificial[i] {
                row[art] = 1.0;
                basis[i] = art;
                art += 1;
            }
            state[basis[i]] = State::Basic;
        }

        Ok(Tableau {
            m,
            n_struct: n,
            n_total,
            first_artificial,
            tab,
            reduced: vec![0.0; n_total],
            beta: rhs,
            basis,
            state,
            upper,
            cost: vec![0.0; n_total],
            iterations: 0,
        })
    }

    fn run(&mut self, lp: &LinearProgram) -> LpOutcome {
        let limit = 50 * (self.m + self.n_total) + 1000;

        if self.first_artificial < self.n_total {
            for j in 0..self.n_total {
                self.cost[j] = if j >= self.first_artificial { -1.0 } else { 0.0 };
            }
            self.price_all();
            match self.iterate(limit, self.n_total) {
                Ok(Step::Unbounded) => {
                    return LpOutcome::Numerical("phase 1 reported unbounded".into())
                }
                Err(msg) => return LpOutcome::Numerical(msg),
                _ => {}
            }
            let infeasibility: f64 = (0..self.m)
                .filter(|&i| self.basis[i] >= self.first_artificial)
                .map(|i| self.beta[i])
                .sum();
            let scale = 1.0 + lp.rows.iter().map(|r| r.rhs.abs()).fold(0.0, f64::max);
            if infeasibility > PHASE1_TOL * scale {
                return LpOutcome::Infeasible;
            }
            self.drive_out_artificials();
            for j in self.first_artificial..self.n_total {
                self.upper[j] = 0.0;
            }
        }

        for j in 0..self.n_total {
            self.cost[j] = if j < self.n_struct { lp.objective[j] } else { 0.0 };
        }
        self.price_all();
        match self.iterate(limit, self.first_artificial) {
            Ok(Step::Unbounded) => LpOutcome::Unbounded,
            Err(msg) => LpOutcome::Numerical(msg),
            _ => {
                let x = self.primal(lp);
                let violation = lp.max_violation(&x);
                let scale = 1.0 + lp.rows.iter().map(|r| r.rhs.abs()).fold(0.0, f64::max);
                if violation > 1e-6 * scale {
                    return LpOutcome::Numerical(format!(
                        "residual {violation:.3e} after {} iterations",
                        self.iterations
                    ));
                }
                LpOutcome::Optimal(LpSolution {
                    objective: lp.objective_value(&x),
                    x,
                    iterations: self.iterations,
                })
            }
        }
    }

    fn primal(&self, lp: &LinearProgram) -> Vec<f64> {
        let mut value = vec![0.0; self.n_total];
        for j in 0..self.n_total {
            if self.state[j] == State::Upper {
                value[j] = self.upper[j];
            }
        }
        for (i, &b) in self.basis.iter().enumerate() {
            value[b] = self.beta[i];
        }
        (0..self.n_struct)
            .map(|j| {
                let v = (lp.lower[j] + value[j]).max(lp.lower[j]);
                v.min(lp.upper[j])
            })
            .collect()
    }

    fn price_all(&mut self) {
        let nt = self.n_total;
        self.reduced.copy_from_slice(&self.cost);
        for i in 0..self.m {
            let cb = self.cost[self.basis[i]];
            if cb != 0.0 {
                let row = &self.tab[i * nt..(i + 1) * nt];
                for (d, a) in self.reduced.iter_mut().zip(row) {
                    *d -= cb * a;
                }
            }
        }
        for &b in &self.basis {
            self.reduced[b] = 0.0;
        }
    }

    fn choose_entering(&self, eligible_end: usize, bland: bool) -> Option<usize> {
        let mut best: Option<(usize, f64)> = None;
        for j in 0..eligible_end {
            let d = self.reduced[j];
            let score = match self.state[j] {
                State::Lower if d > COST_TOL && self.upper[j] > 0.0 => d,
                State::Upper if d < -COST_TOL => -d,
                _ => continue,
            };
            if bland {
                return Some(j);
            }
            if best.is_none_or(|(_, s)| score > s) {
                best = Some((j, score));
            }
        }
        best.map(|(j, _)| j)
    }

    fn iterate(&mut self, limit: usize, eligible_end: usize) -> Result<Step, String> {
        let nt = self.n_total;
        let mut degenerate = 0usize;
        loop {
            if self.iterations >= limit {
                return Err(format!("iteration limit {limit} reached"));
            }
            let bland = degenerate >= DEGENERATE_STREAK;
            let Some(j) = self.choose_entering(eligible_end, bland) else {
                return Ok(Step::Optimal);
            };
            self.iterations += 1;
            let dir = if self.state[j] == State::Lower { 1.0 } else { -1.0 };

            // Ratio test. Basic i moves by -alpha_i * dir * theta.
            let mut theta = self.upper[j];
            let mut leave: Option<(usize, bool)> = None;
            let mut leave_pivot = 0.0;
            for i in 0..self.m {
                let alpha = self.tab[i * nt + j];
                if alpha.abs() <= PIVOT_TOL {
                    continue;
                }
                let delta = -alpha * dir;
                let b = self.basis[i];
                let (limit_i, to_upper) = if delta < 0.0 {
                    (self.beta[i].max(0.0) / -delta, false)
                } else {
                    let ub = self.upper[b];
                    if !ub.is_finite() {
                        continue;
                    }
                    ((ub - self.beta[i]).max(0.0) / delta, true)
                };
                // ties prefer the larger pivot element
                let take = match leave {
                    None => limit_i <= theta,
                    Some(_) => {
                        limit_i < theta - 1e-12
                            || (limit_i <= theta + 1e-12 && alpha.abs() > leave_pivot)
                    }
                };
                if take {
                    theta = limit_i.min(theta);
                    leave = Some((i, to_upper));
                    leave_pivot = alpha.abs();
                }
            }
            if !theta.is_finite() {
                return Ok(Step::Unbounded);
            }
            if theta <= 1e-12 {
                degenerate += 1;
            } else {
                degenerate = 0;
            }

            for i in 0..self.m {
                let alpha = self.tab[i * nt + j];
                if alpha != 0.0 {
                    self.beta[i] -= alpha * dir * theta;
                }
            }

            match leave {
                None => {
                    // bound flip
                    self.state[j] = if dir > 0.0 { State::Upper } else { State::Lower };
                }
                Some((r, to_upper)) => {
                    let leaving = self.basis[r];
                    let entering_value = if dir > 0.0 { theta } else { self.upper[j] - theta };
                    self.state[leaving] = if to_upper { State::Upper } else { State::Lower };
                    self.pivot(r, j);
                    self.beta[r] = entering_value;
                }
            }
        }
    }

    /// Makes column `j` basic in row `r`. Does not touch `beta`.
    fn pivot(&mut self, r: usize, j: usize) {
        let nt = self.n_total;
        let p = self.tab[r * nt + j];
        {
            let row = &mut self.tab[r * nt..(r + 1) * nt];
            for v in row.iter_mut() {
                *v /= p;
            }
            row[j] = 1.0;
        }
        let (before, rest) = self.tab.split_at_mut(r * nt);
        let (pivot_row, after) = rest.split_at_mut(nt);
        let nz: Vec<usize> = (0..nt).filter(|&k| pivot_row[k] != 0.0).collect();
        for chunk in before.chunks_exact_mut(nt).chain(after.chunks_exact_mut(nt)) {
            let f = chunk[j];
            if f != 0.0 {
                for &k in &nz {
                    chunk[k] -= f * pivot_row[k];
                }
                chunk[j] = 0.0;
            }
        }
        let f = self.reduced[j];
        if f != 0.0 {
            for &k in &nz {
                self.reduced[k] -= f * pivot_row[k];
            }
            self.reduced[j] = 0.0;
        }
        self.basis[r] = j;
        self.state[j] = State::Basic;
    }

    fn drive_out_artificials(&mut self) {
        let nt = self.n_total;
        for r in 0..self.m {
            if self.basis[r] < self.first_artificial {
                continue;
            }
            let candidate = (0..self.first_artificial)
                .filter(|&k| self.state[k] != State::Basic)
                .max_by(|&a, &b| {
                    let (va, vb) = (self.tab[r * nt + a].abs(), self.tab[r * nt + b].abs());
                    va.partial_cmp(&vb).unwrap().then(b.cmp(&a))
                });
            if let Some(k) = candidate {
                if self.tab[r * nt + k].abs() > 1e-9 {
                    let value = if self.state[k] == State::Upper { self.upper[k] } else { 0.0 };
                    let leaving = self.basis[r];
                    self.pivot(r, k);
                    self.state[leaving] = State::Lower;
                    self.beta[r] = value;
                }
            }
        }
    }
}
