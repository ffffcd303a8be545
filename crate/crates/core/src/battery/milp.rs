//! Single-window battery arbitrage MILP.
//!
//! Per step `t` the model has continuous `c_t, d_t, s_t, g_in_t, g_out_t` and
//! binaries `z_t` (charge mode) and `y_t` (import mode):
//!
//! ```text
//! max  sum_t (sell_t g_out_t - buy_t g_in_t) * dt
//! s.t. g_in_t + d_t = g_out_t + c_t
//!      s_t = s_{t-1} + (eta c_t - d_t) * dt,      s_{-1} = soc_start
//!      0 <= c_t <= P_c z_t,       0 <= d_t <= P_d (1 - z_t)
//!      0 <= g_in_t <= G_in y_t,   0 <= g_out_t <= G_out (1 - y_t)
//!      0 <= s_t <= C
//! ```
//!
//! Every integral point has `g_in = c` and `g_out = d` (mixed modes force all
//! four flows to zero), so the relaxation substitutes the grid flows and uses
//! the per-step convex hull `c/P_c' + d/P_d' <= 1` with `P_c' = min(P_c, G_in)`,
//! `P_d' = min(P_d, G_out)`. Branching on `z_t` fixes one of `c_t, d_t` to zero.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::fmt::Write as _;
use std::io::Write;
use std::time::{Duration, Instant};

use serde::Serialize;

use super::{BatterySpec, MarketParams};
use crate::error::{Error, Result};
use crate::lp::{LinearProgram, LpOutcome, LpSolution, Sense};
use crate::series::{format_number, Series};

/// A pair member above this is considered active.
pub const INTEGRALITY_TOL: f64 = 1e-7;
const SNAP_TOL: f64 = 1e-9;
const MAX_NODES: usize = 200_000;

const VARS_PER_STEP: usize = 3;
const C: usize = 0;
const D: usize = 1;
const S: usize = 2;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ScheduleStep {
    /// MW
    pub charge: f64,
    /// MW
    pub discharge: f64,
    /// MWh at the end of the step.
    pub soc: f64,
    pub grid_in: f64,
    pub grid_out: f64,
    pub charge_mode: bool,
    pub trade_mode: bool,
}

impl ScheduleStep {
    pub const IDLE: ScheduleStep = ScheduleStep {
        charge: 0.0,
        discharge: 0.0,
        soc: 0.0,
        grid_in: 0.0,
        grid_out: 0.0,
        charge_mode: false,
        trade_mode: false,
    };

    /// Revenue of this step at the given prices.
    pub fn revenue(&self, buy: f64, sell: f64, step_hours: f64) -> f64 {
        (sell * self.grid_out - buy * self.grid_in) * step_hours
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct SolverStats {
    pub lp_iterations: usize,
    pub nodes: usize,
    pub wall_time: Duration,
}

#[derive(Debug, Clone)]
pub struct Schedule {
    pub steps: Vec<ScheduleStep>,
    /// EUR
    pub objective: f64,
    pub step_hours: f64,
    pub stats: SolverStats,
}

impl PartialEq for Schedule {
    /// Solver statistics (wall time) are not part of the schedule identity.
    fn eq(&self, other: &Self) -> bool {
        self.steps == other.steps
            && self.objective == other.objective
            && self.step_hours == other.step_hours
    }
}

impl Schedule {
    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    /// Revenue of the schedule priced at `buy`/`sell`.
    pub fn revenue_at(&self, buy: &[f64], sell: &[f64]) -> Result<f64> {
        if buy.len() != self.steps.len() || sell.len() != self.steps.len() {
            return Err(Error::LengthMismatch {
                expected: self.steps.len(),
                actual: buy.len().min(sell.len()),
            });
        }
        Ok(self
            .steps
            .iter()
            .zip(buy.iter().zip(sell))
            .map(|(s, (b, p))| s.revenue(*b, *p, self.step_hours))
            .sum())
    }

    /// Writes `t,charge_mw,discharge_mw,soc_mwh,grid_in_mw,grid_out_mw`.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record([
            "t",
            "charge_mw",
            "discharge_mw",
            "soc_mwh",
            "grid_in_mw",
            "grid_out_mw",
        ])?;
        for (t, s) in self.steps.iter().enumerate() {
            w.write_record([
                t.to_string(),
                format_number(s.charge),
                format_number(s.discharge),
                format_number(s.soc),
                format_number(s.grid_in),
                format_number(s.grid_out),
            ])?;
        }
        w.flush().map_err(|e| Error::io("<csv writer>", e))?;
        Ok(())
    }
}

/// Fractional optimum of the relaxation, per-step vectors.
#[derive(Debug, Clone)]
pub struct RelaxedSolution {
    pub charge: Vec<f64>,
    pub discharge: Vec<f64>,
    pub grid_in: Vec<f64>,
    pub grid_out: Vec<f64>,
    pub soc: Vec<f64>,
    pub objective: f64,
    pub iterations: usize,
}

impl RelaxedSolution {
    fn from_lp(sol: &LpSolution, steps: usize) -> Self {
        let pick = |k: usize| (0..steps).map(|t| sol.x[t * VARS_PER_STEP + k]).collect();
        Self {
            charge: pick(C),
            discharge: pick(D),
            grid_in: pick(C),
            grid_out: pick(D),
            soc: pick(S),
            objective: sol.objective,
            iterations: sol.iterations,
        }
    }

    /// First step whose exclusive pair is simultaneously active, and whether
    /// the violated pair is the battery (`true`) or the grid (`false`) one.
    pub fn first_violation(&self) -> Option<(usize, bool)> {
        (0..self.charge.len()).find_map(|t| {
            if self.charge[t] > INTEGRALITY_TOL && self.discharge[t] > INTEGRALITY_TOL {
                Some((t, true))
            } else if self.grid_in[t] > INTEGRALITY_TOL && self.grid_out[t] > INTEGRALITY_TOL {
                Some((t, false))
            } else {
                None
            }
        })
    }

    pub fn is_integral(&self) -> bool {
        self.first_violation().is_none()
    }
}

/// Fixed binary values along a branch.
#[derive(Debug, Clone, Default)]
struct Fixings {
    charge_mode: Vec<Option<bool>>,
}

/// Inputs of one window, validated.
#[derive(Debug, Clone)]
pub struct WindowModel {
    buy: Vec<f64>,
    sell: Vec<f64>,
    battery: BatterySpec,
    grid_in_cap: f64,
    grid_out_cap: f64,
    soc_start: f64,
    step_hours: f64,
}

impl WindowModel {
    pub fn new(
        buy: &Series,
        sell: &Series,
        battery: &BatterySpec,
        market: &MarketParams,
        soc_start: f64,
    ) -> Result<Self> {
        battery.validate()?;
        market.validate()?;
        if buy.len() != sell.len() {
            return Err(Error::LengthMismatch {
                expected: buy.len(),
                actual: sell.len(),
            });
        }
        if !(soc_start.is_finite() && (0.0..=battery.capacity).contains(&soc_start)) {
            return Err(Error::invalid(format!(
                "soc_start {soc_start} outside [0, {}]",
                battery.capacity
            )));
        }
        let (grid_in_cap, grid_out_cap) = market.grid_caps(battery);
        Ok(Self {
            buy: buy.values().to_vec(),
            sell: sell.values().to_vec(),
            battery: *battery,
            grid_in_cap,
            grid_out_cap,
            soc_start,
            step_hours: buy.step_hours(),
        })
    }

    pub fn steps(&self) -> usize {
        self.buy.len()
    }

    /// Charge and discharge limits including the grid caps.
    fn flow_caps(&self) -> (f64, f64) {
        let b = &self.battery;
        (b.p_charge_max.min(self.grid_in_cap), b.p_discharge_max.min(self.grid_out_cap))
    }

    fn to_lp(&self, fix: &Fixings) -> LinearProgram {
        let b = &self.battery;
        let dt = self.step_hours;
        let (c_cap, d_cap) = self.flow_caps();
        let mut lp = LinearProgram::default();
        for t in 0..self.steps() {
            let mode = fix.charge_mode.get(t).copied().flatten();
            let c_ub = if mode == Some(false) { 0.0 } else { c_cap };
            let d_ub = if mode == Some(true) { 0.0 } else { d_cap };
            lp.add_var(-self.buy[t] * dt, 0.0, c_ub);
            lp.add_var(self.sell[t] * dt, 0.0, d_ub);
            lp.add_var(0.0, 0.0, b.capacity);
        }
        for t in 0..self.steps() {
            let v = |k: usize| t * VARS_PER_STEP + k;
            let mut soc = vec![(v(S), 1.0), (v(C), -b.efficiency * dt), (v(D), dt)];
            let rhs = if t == 0 {
                self.soc_start
            } else {
                soc.push(((t - 1) * VARS_PER_STEP + S, -1.0));
                0.0
            };
            lp.add_row(soc, Sense::Eq, rhs);
            lp.add_row(vec![(v(C), 1.0 / c_cap), (v(D), 1.0 / d_cap)], Sense::Le, 1.0);
        }
        lp
    }

    fn solve_node(&self, fix: &Fixings) -> Result<Option<RelaxedSolution>> {
        match self.to_lp(fix).solve() {
            LpOutcome::Optimal(sol) => Ok(Some(RelaxedSolution::from_lp(&sol, self.steps()))),
            LpOutcome::Infeasible => Ok(None),
            LpOutcome::Unbounded => Err(Error::Solver("relaxation unbounded".into())),
            LpOutcome::Numerical(msg) => Err(Error::Solver(format!(
                "relaxation failed on a {}-step window: {msg}",
                self.steps()
            ))),
        }
    }

    /// Feasible schedule nearest to a relaxed solution. Steps with both
    /// members of a pair active keep their net state-of-charge change, realized
    /// by a single charge or discharge flow.
    fn finalize(&self, sol: &RelaxedSolution) -> Vec<ScheduleStep> {
        let b = &self.battery;
        let dt = self.step_hours;
        let (charge_ub, discharge_ub) = self.flow_caps();
        let snap = |v: f64| if v <= SNAP_TOL { 0.0 } else { v };
        let mut prev = self.soc_start;
        let mut steps = Vec::with_capacity(self.steps());
        for t in 0..self.steps() {
            let mut charge = snap(sol.charge[t]);
            let mut discharge = snap(sol.discharge[t]);
            if charge > 0.0 && discharge > 0.0 {
                let net = b.efficiency * charge - discharge;
                if net >= 0.0 {
                    charge = net / b.efficiency;
                    discharge = 0.0;
                } else {
                    charge = 0.0;
                    discharge = -net;
                }
            }
            charge = snap(charge).min(charge_ub);
            discharge = snap(discharge).min(discharge_ub);
            let mut soc = prev + (b.efficiency * charge - discharge) * dt;
            if soc > b.capacity {
                charge = (b.capacity - prev) / (b.efficiency * dt);
                soc = b.capacity;
            } else if soc < 0.0 {
                discharge = prev / dt;
                soc = 0.0;
            }
            let net = charge - discharge;
            let (grid_in, grid_out) = if net >= 0.0 { (net, 0.0) } else { (0.0, -net) };
            steps.push(ScheduleStep {
                charge,
                discharge,
                soc,
                grid_in,
                grid_out,
                charge_mode: charge > 0.0,
                trade_mode: grid_in > 0.0,
            });
            prev = soc;
        }
        steps
    }

    fn value_of(&self, steps: &[ScheduleStep]) -> f64 {
        steps
            .iter()
            .enumerate()
            .map(|(t, s)| s.revenue(self.buy[t], self.sell[t], self.step_hours))
            .sum()
    }

    /// Step whose charge/discharge pair is most violated, relative to the caps.
    fn branching_step(&self, sol: &RelaxedSolution) -> Option<usize> {
        let (c_cap, d_cap) = self.flow_caps();
        let mut best: Option<(f64, usize)> = None;
        for t in 0..self.steps() {
            if sol.charge[t] > INTEGRALITY_TOL && sol.discharge[t] > INTEGRALITY_TOL {
                let score = (sol.charge[t] / c_cap).min(sol.discharge[t] / d_cap);
                if best.is_none_or(|(s, _)| score > s) {
                    best = Some((score, t));
                }
            }
        }
        best.map(|(_, t)| t)
    }

    /// CPLEX-LP style listing of the full MILP, binaries included.
    pub fn lp_listing(&self) -> String {
        let b = &self.battery;
        let dt = self.step_hours;
        let mut out = String::new();
        let n = self.steps();
        let _ = writeln!(out, "\\ battery arbitrage window: {n} steps, dt = {dt} h");
        let _ = writeln!(out, "Maximize");
        let mut obj = String::from(" obj:");
        for t in 0..n {
            let _ = write!(
                obj,
                " {} gout_{t} {} gin_{t}",
                signed(self.sell[t] * dt),
                signed(-self.buy[t] * dt)
            );
        }
        let _ = writeln!(out, "{obj}");
        let _ = writeln!(out, "Subject To");
        for t in 0..n {
            let _ = writeln!(out, " balance_{t}: gin_{t} + d_{t} - gout_{t} - c_{t} = 0");
            if t == 0 {
                let _ = writeln!(
                    out,
                    " soc_{t}: s_{t} {} c_{t} {} d_{t} = {}",
                    signed(-b.efficiency * dt),
                    signed(dt),
                    self.soc_start
                );
            } else {
                let _ = writeln!(
                    out,
                    " soc_{t}: s_{t} - s_{} {} c_{t} {} d_{t} = 0",
                    t - 1,
                    signed(-b.efficiency * dt),
                    signed(dt)
                );
            }
            let _ = writeln!(out, " charge_{t}: c_{t} - {} z_{t} <= 0", b.p_charge_max);
            let _ = writeln!(
                out,
                " discharge_{t}: d_{t} + {} z_{t} <= {}",
                b.p_discharge_max, b.p_discharge_max
            );
            let _ = writeln!(out, " import_{t}: gin_{t} - {} y_{t} <= 0", self.grid_in_cap);
            let _ = writeln!(
                out,
                " export_{t}: gout_{t} + {} y_{t} <= {}",
                self.grid_out_cap, self.grid_out_cap
            );
        }
        let _ = writeln!(out, "Bounds");
        for t in 0..n {
            let _ = writeln!(out, " 0 <= s_{t} <= {}", b.capacity);
        }
        let _ = writeln!(out, "Binaries");
        for t in 0..n {
            let _ = writeln!(out, " z_{t} y_{t}");
        }
        let _ = writeln!(out, "End");
        out
    }
}

fn signed(v: f64) -> String {
    if v < 0.0 {
        format!("- {}", -v)
    } else {
        format!("+ {v}")
    }
}

/// The LP relaxation of `model` with all binaries free in `[0, 1]`.
pub fn lp_relaxation_solve(model: &WindowModel) -> Result<RelaxedSolution> {
    model
        .solve_node(&Fixings::default())?
        .ok_or_else(|| Error::Solver("relaxation infeasible".into()))
}

struct Node {
    bound: f64,
    depth: usize,
    seq: usize,
    fix: Fixings,
    solution: RelaxedSolution,
}

impl PartialEq for Node {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Node {}

impl PartialOrd for Node {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Node {
    /// Max-heap order: best bound, then deeper, then earlier created.
    fn cmp(&self, other: &Self) -> Ordering {
        self.bound
            .total_cmp(&other.bound)
            .then(self.depth.cmp(&other.depth))
            .then(other.seq.cmp(&self.seq))
    }
}

/// Solves the window MILP exactly by branch and bound on the mode binaries.
pub fn solve_window(
    buy: &Series,
    sell: &Series,
    battery: &BatterySpec,
    market: &MarketParams,
    soc_start: f64,
) -> Result<Schedule> {
    let model = WindowModel::new(buy, sell, battery, market, soc_start)?;
    solve_model(&model)
}

/// Bound slack below which a node cannot improve the incumbent.
fn prune_tol(incumbent: f64) -> f64 {
    1e-9 * incumbent.abs().max(1.0)
}

pub(crate) fn solve_model(model: &WindowModel) -> Result<Schedule> {
    let started = Instant::now();
    let n = model.steps();
    let mut stats = SolverStats::default();

    // The idle schedule is always feasible.
    let idle: Vec<ScheduleStep> = (0..n)
        .map(|_| ScheduleStep {
            soc: model.soc_start,
            ..ScheduleStep::IDLE
        })
        .collect();
    let mut incumbent: (f64, Vec<ScheduleStep>) = (0.0, idle);

    let root_fix = Fixings {
        charge_mode: vec![None; n],
    };
    let mut heap = BinaryHeap::new();
    let mut seq = 0usize;
    if let Some(root) = model.solve_node(&root_fix)? {
        stats.lp_iterations += root.iterations;
        heap.push(Node {
            bound: root.objective,
            depth: 0,
            seq,
            fix: root_fix,
            solution: root,
        });
    }

    while let Some(node) = heap.pop() {
        if node.bound <= incumbent.0 + prune_tol(incumbent.0) {
            continue;
        }
        stats.nodes += 1;
        if stats.nodes > MAX_NODES {
            return Err(Error::Solver(format!(
                "node limit {MAX_NODES} reached on a {n}-step window (best bound {:.6}, incumbent {:.6})",
                node.bound, incumbent.0
            )));
        }
        let steps = model.finalize(&node.solution);
        let value = model.value_of(&steps);
        if value > incumbent.0 {
            incumbent = (value, steps);
        }
        let Some(t) = model.branching_step(&node.solution) else {
            continue;
        };
        for choice in [true, false] {
            let mut fix = node.fix.clone();
            fix.charge_mode[t] = Some(choice);
            if let Some(sol) = model.solve_node(&fix)? {
                stats.lp_iterations += sol.iterations;
                if sol.objective > incumbent.0 + prune_tol(incumbent.0) {
                    seq += 1;
                    heap.push(Node {
                        bound: sol.objective,
                        depth: node.depth + 1,
                        seq,
                        fix,
                        solution: sol,
                    });
                }
            }
        }
    }

    stats.wall_time = started.elapsed();
    let (objective, steps) = incumbent;
    Ok(Schedule {
        steps,
        objective,
        step_hours: model.step_hours,
        stats,
    })
}
