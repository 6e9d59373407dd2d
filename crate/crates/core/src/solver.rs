//! Numerical solution of conic programs with an interior-point method, and
//! polishing of the resulting dual points into the strict interior.

use clarabel::algebra::CscMatrix;
use clarabel::solver::{
    DefaultSettings, DefaultSettingsBuilder, DefaultSolver, IPSolver, SolverStatus, SupportedConeT,
};
use serde::{Deserialize, Serialize};

use crate::certify::fl_error_bound;
use crate::dual::{CheckKind, DualPoint, DualProgram};
use crate::error::{Error, Result};
use crate::programs::{ConeKind, ConicProgram};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolveOptions {
    pub max_iter: u32,
    pub tol_gap_abs: f64,
    pub tol_gap_rel: f64,
    pub tol_feas: f64,
    #[serde(skip)]
    pub verbose: bool,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            max_iter: 400,
            tol_gap_abs: 1e-10,
            tol_gap_rel: 1e-10,
            tol_feas: 1e-10,
            verbose: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolveStatus {
    Optimal,
    /// Converged to the relaxed tolerances only.
    ReducedAccuracy,
    MaxIter,
    Infeasible,
    Failed,
}

impl SolveStatus {
    pub fn is_usable(self) -> bool {
        matches!(self, SolveStatus::Optimal | SolveStatus::ReducedAccuracy)
    }
}

#[derive(Debug, Clone)]
pub struct Solution {
    pub status: SolveStatus,
    pub primal: Vec<f64>,
    /// One multiplier per primal row, in row order (`(y, z)` per cone).
    pub multipliers: Vec<f64>,
    pub primal_objective: f64,
    pub dual_objective: f64,
    pub gap: f64,
    pub iterations: u32,
}

impl Solution {
    pub fn dual_point(&self, dual: &DualProgram) -> Result<DualPoint> {
        dual.restrict(&self.multipliers)
    }
}

/// Solver input `A x + s = b`, `s` in the product cone. A row `c^T x + d`
/// becomes `A = -c`, `b = d`.
fn assemble(prog: &ConicProgram) -> (CscMatrix<f64>, Vec<f64>, Vec<SupportedConeT<f64>>) {
    let m = prog.num_rows();
    let n = prog.num_vars;
    let mut cols: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
    let mut b = Vec::with_capacity(m);
    let mut cones: Vec<SupportedConeT<f64>> = Vec::new();
    let mut row = 0;
    for con in &prog.constraints {
        match (con.kind, cones.last_mut()) {
            (ConeKind::Linear, Some(SupportedConeT::NonnegativeConeT(k))) => *k += 1,
            (ConeKind::Linear, _) => cones.push(SupportedConeT::NonnegativeConeT(1)),
            (ConeKind::SecondOrder, _) => cones.push(SupportedConeT::SecondOrderConeT(con.rows.len())),
        }
        for r in &con.rows {
            for &(j, c) in &r.terms {
                cols[j].push((row, -c));
            }
            b.push(r.constant);
            row += 1;
        }
    }
    let mut colptr = Vec::with_capacity(n + 1);
    let mut rowval = Vec::new();
    let mut nzval = Vec::new();
    colptr.push(0);
    for col in cols {
        for (r, v) in col {
            rowval.push(r);
            nzval.push(v);
        }
        colptr.push(rowval.len());
    }
    (CscMatrix::new(m, n, colptr, rowval, nzval), b, cones)
}

fn settings(opts: &SolveOptions) -> Result<DefaultSettings<f64>> {
    DefaultSettingsBuilder::default()
        .max_iter(opts.max_iter)
        .tol_gap_abs(opts.tol_gap_abs)
        .tol_gap_rel(opts.tol_gap_rel)
        .tol_feas(opts.tol_feas)
        .verbose(opts.verbose)
        .presolve_enable(false)
        .max_threads(1)
        .build()
        .map_err(|e| Error::Solver(e.to_string()))
}

/// Solves `prog`; a non-optimal status is reported in the result, not as an error.
pub fn solve(prog: &ConicProgram, opts: &SolveOptions) -> Result<Solution> {
    let (a, b, cones) = assemble(prog);
    let n = prog.num_vars;
    let p = CscMatrix::zeros((n, n));
    let mut q = vec![0.0; n];
    for &(j, c) in &prog.objective {
        q[j] = c;
    }
    let mut solver =
        DefaultSolver::new(&p, &q, &a, &b, &cones, settings(opts)?).map_err(|e| Error::Solver(e.to_string()))?;
    solver.solve();
    let sol = &solver.solution;
    let status = match sol.status {
        SolverStatus::Solved => SolveStatus::Optimal,
        SolverStatus::AlmostSolved => SolveStatus::ReducedAccuracy,
        SolverStatus::MaxIterations | SolverStatus::MaxTime => SolveStatus::MaxIter,
        SolverStatus::PrimalInfeasible
        | SolverStatus::DualInfeasible
        | SolverStatus::AlmostPrimalInfeasible
        | SolverStatus::AlmostDualInfeasible => SolveStatus::Infeasible,
        _ => SolveStatus::Failed,
    };
    Ok(Solution {
        status,
        primal: sol.x.clone(),
        multipliers: sol.z.clone(),
        primal_objective: sol.obj_val,
        dual_objective: sol.obj_val_dual,
        gap: (sol.obj_val - sol.obj_val_dual).abs(),
        iterations: sol.iterations,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PolishOptions {
    /// Minimum margin demanded of every derived multiplier, on top of eight
    /// times its rounding-error bound.
    pub target_margin: f64,
    /// Cone points are pulled to `||z|| <= (1 - theta) y`.
    pub theta: f64,
    /// Free linear multipliers are raised to at least this value.
    pub floor: f64,
    /// Free multipliers below `-negative_tolerance` are rejected.
    pub negative_tolerance: f64,
    pub max_rounds: usize,
}

impl Default for PolishOptions {
    fn default() -> Self {
        Self {
            target_margin: 1e-13,
            theta: 1e-9,
            floor: 1e-15,
            negative_tolerance: 1e-6,
            max_rounds: 50,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Polished {
    pub point: DualPoint,
    pub objective_before: f64,
    pub objective_after: f64,
    pub rounds: usize,
}

impl Polished {
    pub fn objective_loss(&self) -> f64 {
        self.objective_before - self.objective_after
    }
}

/// For each primal variable, the free linear multiplier that raises its
/// derived multiplier at the least objective cost without lowering any other
/// derived multiplier, as `(free position, gain)`.
fn repair_partners(dual: &DualProgram) -> Result<Vec<Option<(usize, f64)>>> {
    let el = dual.elimination()?;
    let piv_coef: Vec<f64> = el.pivots.iter().map(|p| p.coef).collect();
    let piv_const: Vec<f64> = el.pivots.iter().map(|p| dual.constants[p.mult]).collect();
    let mut best: Vec<Option<(usize, f64, f64)>> = vec![None; el.pivots.len()];
    for block in &dual.blocks {
        let Some(pos) = el.free_pos[block.start] else {
            continue;
        };
        if block.kind != ConeKind::Linear {
            continue;
        }
        let row = &dual.primal.constraints[block.constraint].rows[0];
        let gains: Vec<(usize, f64)> = row.terms.iter().map(|&(j, c)| (j, -c / piv_coef[j])).collect();
        if gains.iter().any(|&(_, g)| g < 0.0) {
            continue;
        }
        let cost = dual.constants[block.start] + gains.iter().map(|&(j, g)| piv_const[j] * g).sum::<f64>();
        for &(j, g) in &gains {
            if g <= 0.0 {
                continue;
            }
            let rate = cost / g;
            if best[j].is_none_or(|(_, _, r)| rate < r) {
                best[j] = Some((pos, g, rate));
            }
        }
    }
    Ok(best.into_iter().map(|b| b.map(|(p, g, _)| (p, g))).collect())
}

/// Moves an approximately feasible point into the strict interior so that
/// every check clears its rounding-error bound with room to spare.
pub fn polish(dual: &DualProgram, pt: &DualPoint, opts: &PolishOptions) -> Result<Polished> {
    let el = dual.elimination()?;
    let objective_before = dual.eval(pt, None)?.objective;
    let scale = pt.values.iter().fold(1.0f64, |a, v| a.max(v.abs()));
    let mut values = pt.values.clone();

    for block in &dual.blocks {
        let Some(pos) = el.free_pos[block.start] else {
            continue;
        };
        let y = values[pos];
        if y < -opts.negative_tolerance * scale {
            return Err(Error::Polish(format!(
                "multiplier of {:?} is {y}, too negative to repair",
                dual.primal.constraints[block.constraint].tag
            )));
        }
        match block.kind {
            ConeKind::Linear => values[pos] = y.max(opts.floor),
            ConeKind::SecondOrder => {
                let zs = pos + 1..pos + block.len;
                let norm = values[zs.clone()].iter().map(|z| z * z).sum::<f64>().sqrt();
                if y <= 0.0 {
                    values[pos] = opts.floor.max(norm / (1.0 - opts.theta));
                } else if norm > (1.0 - opts.theta) * y {
                    let shrink = (1.0 - opts.theta) * y / norm;
                    for z in &mut values[zs] {
                        *z *= shrink;
                    }
                }
            }
        }
    }

    let partners = repair_partners(dual)?;
    let mut point = DualPoint { values };
    for round in 0..=opts.max_rounds {
        let ev = dual.eval(&point, None)?;
        let mut raise: Vec<(usize, f64)> = Vec::new();
        let mut stuck = None;
        for check in &ev.checks {
            let CheckKind::Derived { var } = check.kind else {
                continue;
            };
            let target = opts.target_margin + 8.0 * fl_error_bound(check.n_terms, check.abs_sum)?;
            if check.margin >= target {
                continue;
            }
            let Some((pos, gain)) = partners[var] else {
                stuck = Some(var);
                continue;
            };
            let p = el.pivots[var].coef.abs();
            let step = (target - check.margin) / (p * gain) * 1.01 + opts.floor;
            raise.push((pos, step));
        }
        if let Some(var) = stuck {
            return Err(Error::Polish(format!(
                "derived multiplier of variable {var} is below target and has no repair row"
            )));
        }
        if raise.is_empty() {
            return Ok(Polished {
                objective_after: ev.objective,
                point,
                objective_before,
                rounds: round,
            });
        }
        // one raise per row, large enough for every column it serves
        raise.sort_by(|a, b| a.0.cmp(&b.0).then(b.1.total_cmp(&a.1)));
        raise.dedup_by_key(|r| r.0);
        for (pos, step) in raise {
            point.values[pos] += step;
        }
    }
    Err(Error::Polish(format!(
        "margins still short of target after {} rounds",
        opts.max_rounds
    )))
}
