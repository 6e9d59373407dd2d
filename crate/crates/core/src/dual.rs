//! Dual of a `ConicProgram` and elimination of its equality constraints.
//!
//! Each primal row gets one multiplier: a linear row gets `y >= 0`, a cone
//! gets `(y, z)` with `||z|| <= y`, `y` paired with the bound row. The dual is
//! `max -sum (b^T z + d y)` subject to `sum (A^T z + c y) = Phi`. Every
//! primal variable `j` owns a linear row whose coefficient vector is zero
//! outside `j`; its multiplier is solved for from equation `j`, which leaves
//! an inequality-only dual over the remaining free multipliers.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::programs::{ConeKind, ConicProgram, Family, ProgramInput};

/// Multipliers of one primal constraint, stored contiguously.
#[derive(Debug, Clone, PartialEq)]
pub struct MultBlock {
    pub constraint: usize,
    pub kind: ConeKind,
    pub start: usize,
    pub len: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Pivot {
    pub var: usize,
    pub constraint: usize,
    pub mult: usize,
    pub coef: f64,
}

#[derive(Debug, Clone)]
pub struct Elimination {
    /// `pivots[j]` is the multiplier solved for from equation `j`.
    pub pivots: Vec<Pivot>,
    /// Multiplier indices that stay free, in increasing order.
    pub free: Vec<usize>,
    /// Position of each multiplier in `free`, or `None` if derived.
    pub free_pos: Vec<Option<usize>>,
}

#[derive(Debug, Clone)]
pub struct DualProgram {
    pub primal: Arc<ConicProgram>,
    pub blocks: Vec<MultBlock>,
    pub num_mult: usize,
    /// Dense `Phi`.
    pub phi: Vec<f64>,
    /// Equation `j` as `(multiplier, coefficient)` pairs in multiplier order.
    pub columns: Vec<Vec<(usize, f64)>>,
    /// Row constants: the objective is `-sum constants[i] * u[i]`.
    pub constants: Vec<f64>,
    pub elimination: Option<Elimination>,
}

/// Values of the free multipliers of an eliminated dual.
#[derive(Debug, Clone, PartialEq)]
pub struct DualPoint {
    pub values: Vec<f64>,
}

/// A single scalar inequality `margin > 0` of the eliminated dual, together
/// with what the rounding-error model needs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Check {
    pub kind: CheckKind,
    pub margin: f64,
    pub n_terms: usize,
    pub abs_sum: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CheckKind {
    /// `y >= 0` on a free linear multiplier.
    Free { mult: usize },
    /// `y^2 - sum z^2 >= 0` with `y > 0`; `bound_positive` records the latter.
    Cone { constraint: usize, bound_positive: bool },
    /// Sign-adjusted numerator of a derived multiplier.
    Derived { var: usize },
}

#[derive(Debug, Clone)]
pub struct Evaluation {
    pub objective: f64,
    /// Terms and absolute sum of the objective accumulation.
    pub objective_terms: usize,
    pub objective_abs_sum: f64,
    /// Derived multiplier value per primal variable.
    pub derived: Vec<f64>,
    pub checks: Vec<Check>,
}

impl Evaluation {
    pub fn min_margin(&self) -> f64 {
        self.checks.iter().map(|c| c.margin).fold(f64::INFINITY, f64::min)
    }
}

/// Dual of `primal`, with its equality system recorded column by column.
pub fn dualize(primal: Arc<ConicProgram>) -> DualProgram {
    let mut blocks = Vec::with_capacity(primal.constraints.len());
    let mut columns: Vec<Vec<(usize, f64)>> = vec![Vec::new(); primal.num_vars];
    let mut constants = Vec::with_capacity(primal.num_rows());
    let mut next = 0;
    for (ci, con) in primal.constraints.iter().enumerate() {
        blocks.push(MultBlock {
            constraint: ci,
            kind: con.kind,
            start: next,
            len: con.rows.len(),
        });
        for row in &con.rows {
            for &(j, c) in &row.terms {
                columns[j].push((next, c));
            }
            constants.push(row.constant);
            next += 1;
        }
    }
    let mut phi = vec![0.0; primal.num_vars];
    for &(j, c) in &primal.objective {
        phi[j] = c;
    }
    DualProgram {
        primal,
        blocks,
        num_mult: next,
        phi,
        columns,
        constants,
        elimination: None,
    }
}

/// Preference among single-entry rows when choosing the pivot of a variable:
/// the `Omega` bound, the lower `w`/`v` rows, and the upper rows of the
/// `c`, `d`, `eps`, `delta` boxes.
fn pivot_rank(family: Family) -> u8 {
    match family {
        Family::OmegaUpper
        | Family::WLower
        | Family::VLower
        | Family::CUpper
        | Family::DUpper
        | Family::EpsUpper
        | Family::DeltaUpper => 0,
        Family::CLower | Family::DLower | Family::EpsLower | Family::DeltaLower => 1,
        _ => 2,
    }
}

/// Solves every equation for one multiplier of a single-entry linear row.
pub fn eliminate(mut dual: DualProgram) -> Result<DualProgram> {
    let prog = Arc::clone(&dual.primal);
    let mut best: Vec<Option<(u8, usize)>> = vec![None; prog.num_vars];
    for (ci, con) in prog.constraints.iter().enumerate() {
        if con.kind != ConeKind::Linear || con.rows[0].terms.len() != 1 {
            continue;
        }
        let j = con.rows[0].terms[0].0;
        let rank = pivot_rank(con.tag.family);
        if best[j].is_none_or(|(r, _)| rank < r) {
            best[j] = Some((rank, ci));
        }
    }
    let mut pivots = Vec::with_capacity(prog.num_vars);
    let mut is_pivot = vec![false; dual.num_mult];
    for (j, choice) in best.iter().enumerate() {
        let (_, ci) = choice.ok_or(Error::MissingPivot(j))?;
        let mult = dual.blocks[ci].start;
        is_pivot[mult] = true;
        pivots.push(Pivot {
            var: j,
            constraint: ci,
            mult,
            coef: prog.constraints[ci].rows[0].terms[0].1,
        });
    }
    let mut free = Vec::with_capacity(dual.num_mult - pivots.len());
    let mut free_pos = vec![None; dual.num_mult];
    for (i, piv) in is_pivot.iter().enumerate() {
        if !piv {
            free_pos[i] = Some(free.len());
            free.push(i);
        }
    }
    dual.elimination = Some(Elimination { pivots, free, free_pos });
    Ok(dual)
}

impl DualProgram {
    pub fn elimination(&self) -> Result<&Elimination> {
        self.elimination
            .as_ref()
            .ok_or_else(|| Error::InvalidArgument("dual has not been eliminated".into()))
    }

    pub fn num_free(&self) -> usize {
        self.elimination.as_ref().map_or(self.num_mult, |e| e.free.len())
    }

    /// Row constants for another box of the same structure.
    pub fn constants_for(&self, input: &ProgramInput) -> Result<Vec<f64>> {
        self.primal.constants_for(input)
    }

    /// Index of the first multiplier of the constraint with this tag.
    pub fn multiplier(&self, family: Family, index: usize) -> Option<usize> {
        self.primal.find(family, index).map(|ci| self.blocks[ci].start)
    }

    /// Full multiplier vector: free values in place, derived ones solved.
    pub fn expand(&self, pt: &DualPoint) -> Result<Vec<f64>> {
        let ev = self.eval(pt, None)?;
        let el = self.elimination()?;
        let mut full = vec![0.0; self.num_mult];
        for (&m, &v) in el.free.iter().zip(&pt.values) {
            full[m] = v;
        }
        for (piv, &v) in el.pivots.iter().zip(&ev.derived) {
            full[piv.mult] = v;
        }
        Ok(full)
    }

    /// Free part of a full multiplier vector.
    pub fn restrict(&self, full: &[f64]) -> Result<DualPoint> {
        if full.len() != self.num_mult {
            return Err(Error::DimensionMismatch {
                expected: self.num_mult,
                got: full.len(),
            });
        }
        let el = self.elimination()?;
        Ok(DualPoint {
            values: el.free.iter().map(|&m| full[m]).collect(),
        })
    }

    /// Objective and margins of a free point. `constants` overrides the row
    /// constants (see [`DualProgram::constants_for`]); margins never depend on them.
    pub fn eval(&self, pt: &DualPoint, constants: Option<&[f64]>) -> Result<Evaluation> {
        let el = self.elimination()?;
        if pt.values.len() != el.free.len() {
            return Err(Error::DimensionMismatch {
                expected: el.free.len(),
                got: pt.values.len(),
            });
        }
        let constants = constants.unwrap_or(&self.constants);
        if constants.len() != self.num_mult {
            return Err(Error::DimensionMismatch {
                expected: self.num_mult,
                got: constants.len(),
            });
        }
        let value = |m: usize| -> f64 { el.free_pos[m].map_or(0.0, |p| pt.values[p]) };

        let mut checks = Vec::with_capacity(el.free.len() + el.pivots.len());
        for block in &self.blocks {
            match block.kind {
                ConeKind::Linear => {
                    if let Some(p) = el.free_pos[block.start] {
                        let y = pt.values[p];
                        checks.push(Check {
                            kind: CheckKind::Free { mult: block.start },
                            margin: y,
                            n_terms: 1,
                            abs_sum: y.abs(),
                        });
                    }
                }
                ConeKind::SecondOrder => {
                    let y = value(block.start);
                    let mut acc = y * y;
                    let mut abs = y * y;
                    for m in block.start + 1..block.start + block.len {
                        let z = value(m);
                        acc -= z * z;
                        abs += z * z;
                    }
                    checks.push(Check {
                        kind: CheckKind::Cone {
                            constraint: block.constraint,
                            bound_positive: y > 0.0,
                        },
                        margin: acc,
                        n_terms: block.len,
                        abs_sum: abs,
                    });
                }
            }
        }

        let mut derived = Vec::with_capacity(el.pivots.len());
        for piv in &el.pivots {
            let j = piv.var;
            let mut acc = self.phi[j];
            let mut abs = self.phi[j].abs();
            let mut n = 1;
            for &(m, c) in &self.columns[j] {
                if m == piv.mult {
                    continue;
                }
                let term = c * value(m);
                acc -= term;
                abs += term.abs();
                n += 1;
            }
            derived.push(acc / piv.coef);
            checks.push(Check {
                kind: CheckKind::Derived { var: j },
                margin: if piv.coef > 0.0 { acc } else { -acc },
                n_terms: n,
                abs_sum: abs,
            });
        }

        let mut obj = 0.0;
        let mut abs = 0.0;
        let mut n = 0;
        let mut derived_of = vec![None; self.num_mult];
        for (piv, d) in el.pivots.iter().zip(&derived) {
            derived_of[piv.mult] = Some(*d);
        }
        for (m, &k) in constants.iter().enumerate() {
            if k == 0.0 {
                continue;
            }
            let u = derived_of[m].unwrap_or_else(|| value(m));
            let term = k * u;
            obj -= term;
            abs += term.abs();
            n += 1;
        }
        Ok(Evaluation {
            objective: obj,
            objective_terms: n,
            objective_abs_sum: abs,
            derived,
            checks,
        })
    }

    /// Largest violation of the pre-elimination dual at a full multiplier
    /// vector: negative linear multipliers, cone excess and equation residuals.
    pub fn full_violation(&self, full: &[f64]) -> Result<f64> {
        if full.len() != self.num_mult {
            return Err(Error::DimensionMismatch {
                expected: self.num_mult,
                got: full.len(),
            });
        }
        let mut worst: f64 = 0.0;
        for block in &self.blocks {
            let y = full[block.start];
            match block.kind {
                ConeKind::Linear => worst = worst.max(-y),
                ConeKind::SecondOrder => {
                    let z: f64 = full[block.start + 1..block.start + block.len]
                        .iter()
                        .map(|z| z * z)
                        .sum::<f64>()
                        .sqrt();
                    worst = worst.max(z - y);
                }
            }
        }
        for (j, col) in self.columns.iter().enumerate() {
            let lhs: f64 = col.iter().map(|&(m, c)| c * full[m]).sum();
            worst = worst.max((lhs - self.phi[j]).abs());
        }
        Ok(worst)
    }

    /// Dual objective of a full multiplier vector.
    pub fn full_objective(&self, full: &[f64]) -> f64 {
        -self.constants.iter().zip(full).map(|(k, u)| k * u).sum::<f64>()
    }

    /// Free multipliers grouped by constraint family, in constraint order.
    pub fn labeled(&self, pt: &DualPoint) -> Result<Vec<LabeledBlock>> {
        let el = self.elimination()?;
        let mut out: Vec<LabeledBlock> = Vec::new();
        for block in &self.blocks {
            if el.free_pos[block.start].is_none() {
                continue;
            }
            let family = self.primal.constraints[block.constraint].tag.family;
            let vals = (block.start..block.start + block.len)
                .map(|m| pt.values[el.free_pos[m].expect("cone multipliers are free")]);
            match out.last_mut() {
                Some(last) if last.family == family && last.width == block.len => last.values.extend(vals),
                _ => out.push(LabeledBlock {
                    family,
                    width: block.len,
                    values: vals.collect(),
                }),
            }
        }
        Ok(out)
    }

    pub fn from_labeled(&self, blocks: &[LabeledBlock]) -> Result<DualPoint> {
        let el = self.elimination()?;
        let mut values = Vec::with_capacity(el.free.len());
        let mut src = blocks.iter();
        let mut current: Option<(&LabeledBlock, usize)> = None;
        for block in &self.blocks {
            if el.free_pos[block.start].is_none() {
                continue;
            }
            let family = self.primal.constraints[block.constraint].tag.family;
            let (lb, pos) = match current {
                Some((lb, pos)) if pos < lb.values.len() => (lb, pos),
                _ => {
                    let lb = src
                        .next()
                        .ok_or_else(|| Error::Format("point has too few blocks".into()))?;
                    (lb, 0)
                }
            };
            if lb.family != family || lb.width != block.len || pos + block.len > lb.values.len() {
                return Err(Error::Format(format!(
                    "point block {:?} does not match constraint family {:?}",
                    lb.family, family
                )));
            }
            values.extend_from_slice(&lb.values[pos..pos + block.len]);
            current = Some((lb, pos + block.len));
        }
        if current.is_some_and(|(lb, pos)| pos != lb.values.len()) || src.next().is_some() {
            return Err(Error::Format("point has extra values".into()));
        }
        Ok(DualPoint { values })
    }
}

/// Free multipliers of consecutive constraints of one family; `width` is the
/// number of multipliers per constraint.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledBlock {
    pub family: Family,
    pub width: usize,
    pub values: Vec<f64>,
}
