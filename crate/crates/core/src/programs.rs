//! Construction of the simplified even LP and the full convex program as
//! second-order cone programs `min Phi^T x` s.t. `||A_i x + b_i|| <= c_i^T x + d_i`.
//!
//! Every constraint is stored as a list of affine forms. A linear constraint
//! has a single row meaning `row(x) >= 0`; a cone constraint has the bound row
//! first and the rows under the norm after it.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fourier::{self, SineCoefficient};
use crate::interval::{build_envelopes, Discretization, EnvelopeArrays};

/// Parameters of the full program: discretization sizes and the box on
/// `(E(M), c_1, d_1)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProgramInput {
    pub n: usize,
    pub t: usize,
    pub r: usize,
    pub h1: f64,
    pub h2: f64,
    pub p1: f64,
    pub p2: f64,
    pub q1: f64,
    pub q2: f64,
    #[serde(default)]
    pub sine: SineCoefficient,
}

impl ProgramInput {
    /// The widest box any admissible `f` can occupy.
    pub fn valid_ranges(n: usize, t: usize, r: usize) -> Self {
        Self {
            n,
            t,
            r,
            h1: 0.0,
            h2: 2.0,
            p1: 0.0,
            p2: 1.0,
            q1: -1.0,
            q2: 1.0,
            sine: SineCoefficient::Derived,
        }
    }

    pub fn with_box(mut self, h: (f64, f64), p: (f64, f64), q: (f64, f64)) -> Self {
        (self.h1, self.h2) = h;
        (self.p1, self.p2) = p;
        (self.q1, self.q2) = q;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 || self.t == 0 {
            return Err(Error::InvalidArgument("N and T must be positive".into()));
        }
        if self.t <= self.r {
            return Err(Error::InvalidArgument(format!(
                "need T > R, got T = {}, R = {}",
                self.t, self.r
            )));
        }
        let vals = [self.h1, self.h2, self.p1, self.p2, self.q1, self.q2];
        if vals.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidArgument("box bounds must be finite".into()));
        }
        for (name, lo, hi) in [
            ("h", self.h1, self.h2),
            ("p", self.p1, self.p2),
            ("q", self.q1, self.q2),
        ] {
            if lo > hi {
                return Err(Error::InvalidArgument(format!("{name}1 = {lo} exceeds {name}2 = {hi}")));
            }
        }
        Ok(())
    }

    pub fn width(&self) -> f64 {
        2.0 / self.n as f64
    }

    pub fn discretization(&self) -> Result<Discretization> {
        Discretization::new(self.n)
    }

    pub fn layout(&self) -> Layout {
        Layout {
            n: self.n,
            t: self.t,
            r: self.r,
        }
    }

    /// Same sizes and flag, so the two programs differ only in constants.
    pub fn same_structure(&self, other: &ProgramInput) -> bool {
        (self.n, self.t, self.r, self.sine) == (other.n, other.t, other.r, other.sine)
    }
}

/// Variable indices of the full program: `Omega`, then the `w`, `v`, `c`,
/// `d`, `eps`, `delta` blocks. All block indices are 1-based.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Layout {
    pub n: usize,
    pub t: usize,
    pub r: usize,
}

impl Layout {
    pub const OMEGA: usize = 0;

    pub fn w(&self, j: usize) -> usize {
        j
    }
    pub fn v(&self, j: usize) -> usize {
        self.n + j
    }
    pub fn c(&self, k: usize) -> usize {
        2 * self.n + k
    }
    pub fn d(&self, k: usize) -> usize {
        2 * self.n + self.t + k
    }
    pub fn eps(&self, i: usize) -> usize {
        2 * self.n + 2 * self.t + i
    }
    pub fn delta(&self, i: usize) -> usize {
        2 * self.n + 2 * self.t + self.r + i
    }
    /// `E + 1 = 2N + 2T + 2R + 1`.
    pub fn num_vars(&self) -> usize {
        2 * self.n + 2 * self.t + 2 * self.r + 1
    }

    pub fn blocks(&self) -> Vec<VarBlock> {
        let (n, t, r) = (self.n, self.t, self.r);
        vec![
            VarBlock::new("omega", 0, 1),
            VarBlock::new("w", 1, n),
            VarBlock::new("v", n + 1, n),
            VarBlock::new("c", 2 * n + 1, t),
            VarBlock::new("d", 2 * n + t + 1, t),
            VarBlock::new("eps", 2 * n + 2 * t + 1, r),
            VarBlock::new("delta", 2 * n + 2 * t + r + 1, r),
        ]
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VarBlock {
    pub name: String,
    pub start: usize,
    pub len: usize,
}

impl VarBlock {
    fn new(name: &str, start: usize, len: usize) -> Self {
        Self {
            name: name.into(),
            start,
            len,
        }
    }
}

/// `sum coef * x[index] + constant`, terms sorted by index without repeats.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct AffineForm {
    pub terms: Vec<(usize, f64)>,
    pub constant: f64,
}

impl AffineForm {
    pub fn constant(constant: f64) -> Self {
        Self {
            terms: Vec::new(),
            constant,
        }
    }

    pub fn from_terms(mut terms: Vec<(usize, f64)>, constant: f64) -> Self {
        terms.sort_by_key(|t| t.0);
        let mut merged: Vec<(usize, f64)> = Vec::with_capacity(terms.len());
        for (i, c) in terms {
            match merged.last_mut() {
                Some(last) if last.0 == i => last.1 += c,
                _ => merged.push((i, c)),
            }
        }
        merged.retain(|t| t.1 != 0.0);
        Self {
            terms: merged,
            constant,
        }
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.terms.iter().fold(self.constant, |acc, &(i, c)| acc + c * x[i])
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self {
            terms: self.terms.iter().map(|&(i, c)| (i, s * c)).collect(),
            constant: s * self.constant,
        }
    }

    /// `self + other`, with the constant replaced.
    fn plus(&self, other: &AffineForm, constant: f64) -> Self {
        let mut terms = self.terms.clone();
        terms.extend_from_slice(&other.terms);
        Self::from_terms(terms, constant)
    }

    pub fn max_index(&self) -> Option<usize> {
        self.terms.last().map(|t| t.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ConeKind {
    Linear,
    SecondOrder,
}

/// Constraint families, used as labels for pivots and for reading named
/// multipliers out of dual points.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    OmegaUpper,
    WUpper,
    WLower,
    VUpper,
    VLower,
    MassLower,
    MassUpper,
    Mean,
    Moment,
    CosCone,
    SinLower,
    SinUpper,
    EpsUpper,
    EpsLower,
    DeltaUpper,
    DeltaLower,
    CUpper,
    CLower,
    DUpper,
    DLower,
    Parseval,
    C1Lower,
    C1Upper,
    D1Lower,
    D1Upper,
    CosUpper,
    /// Even-harmonic sign rows of the simplified LP.
    EvenCos,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Tag {
    pub family: Family,
    pub index: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConeConstraint {
    pub tag: Tag,
    pub kind: ConeKind,
    pub rows: Vec<AffineForm>,
}

impl ConeConstraint {
    pub fn linear(family: Family, index: usize, row: AffineForm) -> Self {
        Self {
            tag: Tag { family, index },
            kind: ConeKind::Linear,
            rows: vec![row],
        }
    }

    pub fn second_order(family: Family, index: usize, bound: AffineForm, norm: Vec<AffineForm>) -> Self {
        let mut rows = Vec::with_capacity(norm.len() + 1);
        rows.push(bound);
        rows.extend(norm);
        Self {
            tag: Tag { family, index },
            kind: ConeKind::SecondOrder,
            rows,
        }
    }

    /// Bound row minus the norm of the remaining rows (the row itself when linear).
    pub fn slack(&self, x: &[f64]) -> f64 {
        let bound = self.rows[0].eval(x);
        match self.kind {
            ConeKind::Linear => bound,
            ConeKind::SecondOrder => {
                let sq: f64 = self.rows[1..].iter().map(|r| r.eval(x).powi(2)).sum();
                bound - sq.sqrt()
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum ProgramSource {
    Lp { n: usize, r: usize },
    Full(ProgramInput),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConicProgram {
    pub source: ProgramSource,
    pub num_vars: usize,
    pub objective: Vec<(usize, f64)>,
    pub blocks: Vec<VarBlock>,
    pub constraints: Vec<ConeConstraint>,
}

impl ConicProgram {
    fn new(source: ProgramSource, num_vars: usize, blocks: Vec<VarBlock>, constraints: Vec<ConeConstraint>) -> Self {
        Self {
            source,
            num_vars,
            objective: vec![(Layout::OMEGA, 1.0)],
            blocks,
            constraints,
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let prog: ConicProgram = serde_json::from_str(text)?;
        prog.check()?;
        Ok(prog)
    }

    /// Structural checks for programs read from outside.
    pub fn check(&self) -> Result<()> {
        if self.blocks.iter().map(|b| b.len).sum::<usize>() != self.num_vars {
            return Err(Error::Format("variable blocks do not cover all variables".into()));
        }
        if self.objective != [(0, 1.0)] {
            return Err(Error::Format("objective must be the single variable Omega".into()));
        }
        for con in &self.constraints {
            let ok_rows = match con.kind {
                ConeKind::Linear => con.rows.len() == 1,
                ConeKind::SecondOrder => con.rows.len() >= 2,
            };
            if !ok_rows {
                return Err(Error::Format(format!("bad row count in {:?}", con.tag)));
            }
            if con
                .rows
                .iter()
                .filter_map(AffineForm::max_index)
                .any(|i| i >= self.num_vars)
            {
                return Err(Error::Format(format!("variable index out of range in {:?}", con.tag)));
            }
        }
        Ok(())
    }

    pub fn find(&self, family: Family, index: usize) -> Option<usize> {
        self.constraints.iter().position(|c| c.tag == Tag { family, index })
    }

    pub fn num_rows(&self) -> usize {
        self.constraints.iter().map(|c| c.rows.len()).sum()
    }

    /// Constant terms of every row, in row order, as they would be for
    /// `input`. Only the box bounds enter constants, so the coefficient data
    /// is shared between any two inputs of the same structure.
    pub fn constants_for(&self, input: &ProgramInput) -> Result<Vec<f64>> {
        let own = match &self.source {
            ProgramSource::Full(own) => own,
            ProgramSource::Lp { .. } => {
                return Err(Error::InvalidArgument("the LP has no box parameters".into()));
            }
        };
        input.validate()?;
        if !own.same_structure(input) {
            return Err(Error::InvalidArgument("input sizes differ from the program's".into()));
        }
        let mut out = Vec::with_capacity(self.num_rows());
        for con in &self.constraints {
            let first = match con.tag.family {
                Family::Mean => -input.h1,
                Family::Moment => fourier::second_moment_rhs(input.h2),
                Family::C1Lower => -input.p1,
                Family::C1Upper => input.p2,
                Family::D1Lower => -input.q1,
                Family::D1Upper => input.q2,
                Family::CosUpper => cos_upper_constant(input),
                _ => con.rows[0].constant,
            };
            out.push(first);
            out.extend(con.rows[1..].iter().map(|r| r.constant));
        }
        Ok(out)
    }
}

fn cos_upper_constant(input: &ProgramInput) -> f64 {
    (input.p2 * input.p2 + (input.q1 * input.q1).max(input.q2 * input.q2)) / 2.0
}

/// Per-slack values: the affine value for linear rows, bound minus norm for cones.
pub fn quadratic_residuals(prog: &ConicProgram, x: &[f64]) -> Result<Vec<f64>> {
    if x.len() != prog.num_vars {
        return Err(Error::DimensionMismatch {
            expected: prog.num_vars,
            got: x.len(),
        });
    }
    Ok(prog.constraints.iter().map(|c| c.slack(x)).collect())
}

fn var(i: usize, coef: f64) -> AffineForm {
    AffineForm::from_terms(vec![(i, coef)], 0.0)
}

/// Simplified program for even `M`: variables `Omega, w_1..w_N`.
pub fn build_lp(n: usize, r: usize) -> Result<ConicProgram> {
    let disc = Discretization::new(n)?;
    let l = disc.width();
    let env = build_envelopes(disc, r);
    let mut cons = Vec::with_capacity(2 * n + r + 4);
    cons.push(ConeConstraint::linear(
        Family::OmegaUpper,
        0,
        AffineForm::from_terms(vec![(0, -1.0)], 1.0),
    ));
    for j in 1..=n {
        cons.push(ConeConstraint::linear(
            Family::WUpper,
            j,
            AffineForm::from_terms(vec![(0, 1.0), (j, -1.0)], 0.0),
        ));
        cons.push(ConeConstraint::linear(Family::WLower, j, var(j, 1.0)));
    }
    let quarter = n as f64 / 4.0;
    let sum: Vec<(usize, f64)> = (1..=n).map(|j| (j, 1.0)).collect();
    cons.push(ConeConstraint::linear(
        Family::MassLower,
        0,
        AffineForm::from_terms(sum.clone(), -quarter),
    ));
    cons.push(ConeConstraint::linear(
        Family::MassUpper,
        0,
        AffineForm::from_terms(sum, 0.0)
            .scaled(-1.0)
            .plus(&AffineForm::default(), quarter),
    ));
    for m in 1..=r {
        let alpha = env.alpha_minus(2 * m);
        let terms = (1..=n).map(|j| (j, -alpha[j - 1])).collect();
        cons.push(ConeConstraint::linear(
            Family::EvenCos,
            m,
            AffineForm::from_terms(terms, 0.0),
        ));
    }
    let l3 = l * l * l;
    let terms = (1..=n).map(|j| (j, -l3 * ((j - 1) as f64).powi(2))).collect();
    cons.push(ConeConstraint::linear(
        Family::Moment,
        0,
        AffineForm::from_terms(terms, 1.0 / 3.0),
    ));
    let blocks = vec![VarBlock::new("omega", 0, 1), VarBlock::new("w", 1, n)];
    Ok(ConicProgram::new(ProgramSource::Lp { n, r }, n + 1, blocks, cons))
}

/// `(1/N) sum env[j] (w_j + v_j)`.
fn envelope_form(lay: &Layout, env: &[f64]) -> AffineForm {
    let half_l = 1.0 / lay.n as f64;
    let mut terms = Vec::with_capacity(2 * lay.n);
    for j in 1..=lay.n {
        let c = half_l * env[j - 1];
        terms.push((lay.w(j), c));
        terms.push((lay.v(j), c));
    }
    AffineForm::from_terms(terms, 0.0)
}

/// Lower or upper bracket of `B_m` as an affine form in `w, v`.
fn sin_bracket_form(lay: &Layout, env: &EnvelopeArrays, m: usize, upper: bool) -> AffineForm {
    let half_l = 1.0 / lay.n as f64;
    let (bm, bp) = (env.beta_minus(m), env.beta_plus(m));
    let mut terms = Vec::with_capacity(2 * lay.n);
    for j in 1..=lay.n {
        let (cw, cv) = if upper {
            (bp[j - 1], -bm[j - 1])
        } else {
            (bm[j - 1], -bp[j - 1])
        };
        terms.push((lay.w(j), half_l * cw));
        terms.push((lay.v(j), half_l * cv));
    }
    AffineForm::from_terms(terms, 0.0)
}

/// `a_m` as an affine form; for odd `m` this includes the constant from `c_0`.
fn half_period_cos_form(lay: &Layout, m: usize) -> AffineForm {
    if m.is_multiple_of(2) {
        return var(lay.c(m / 2), 0.5);
    }
    let (constant, weights) = fourier::half_period_cos_weights(m as u32, lay.t);
    let mut terms: Vec<_> = weights.iter().enumerate().map(|(k, w)| (lay.c(k + 1), *w)).collect();
    terms.push((lay.eps(m.div_ceil(2)), 1.0));
    AffineForm::from_terms(terms, constant)
}

fn half_period_sin_form(lay: &Layout, m: usize) -> AffineForm {
    if m.is_multiple_of(2) {
        return var(lay.d(m / 2), 0.5);
    }
    let weights = fourier::half_period_sin_weights(m as u32, lay.t);
    let mut terms: Vec<_> = weights.iter().enumerate().map(|(k, w)| (lay.d(k + 1), *w)).collect();
    terms.push((lay.delta(m.div_ceil(2)), 1.0));
    AffineForm::from_terms(terms, 0.0)
}

/// Cone equivalent of `F_m <= s a_m - 2(a_m^2 + b_m^2)` with `s = 4 sin(m pi/2)/(m pi)`.
///
/// With `t = s^2/16 - F_m/2` the inequality reads `(a_m - s/4)^2 + b_m^2 <= t`,
/// i.e. `||(a_m - s/4, b_m, (t-1)/2)|| <= (t+1)/2`.
fn cos_cone(lay: &Layout, env: &EnvelopeArrays, m: usize) -> ConeConstraint {
    let f_lo = envelope_form(lay, env.alpha_minus(m));
    let sf = f64::from(fourier::sine_factor(m as u32));
    let s = 4.0 * sf / (m as f64 * PI);
    let s2 = s * s / 16.0;
    let bound = f_lo.scaled(-0.25).plus(&AffineForm::default(), (1.0 + s2) / 2.0);
    // a_m - s/4: the constant of a_m is exactly s/4 for odd m
    let mut centred = half_period_cos_form(lay, m);
    centred.constant = 0.0;
    let b = half_period_sin_form(lay, m);
    let third = f_lo.scaled(-0.25).plus(&AffineForm::default(), (s2 - 1.0) / 2.0);
    ConeConstraint::second_order(Family::CosCone, m, bound, vec![centred, b, third])
}

/// Full program for the box in `input`, constraints in a fixed order.
pub fn build_full(input: &ProgramInput) -> Result<ConicProgram> {
    input.validate()?;
    let lay = input.layout();
    let (n, t, r) = (input.n, input.t, input.r);
    let l = input.width();
    let env = build_envelopes(input.discretization()?, r);
    let mut cons = Vec::new();

    cons.push(ConeConstraint::linear(
        Family::OmegaUpper,
        0,
        AffineForm::from_terms(vec![(0, -1.0)], 1.0),
    ));
    for j in 1..=n {
        cons.push(ConeConstraint::linear(
            Family::WUpper,
            j,
            AffineForm::from_terms(vec![(0, 1.0), (lay.w(j), -1.0)], 0.0),
        ));
        cons.push(ConeConstraint::linear(Family::WLower, j, var(lay.w(j), 1.0)));
    }
    for j in 1..=n {
        cons.push(ConeConstraint::linear(
            Family::VUpper,
            j,
            AffineForm::from_terms(vec![(0, 1.0), (lay.v(j), -1.0)], 0.0),
        ));
        cons.push(ConeConstraint::linear(Family::VLower, j, var(lay.v(j), 1.0)));
    }

    let mass: Vec<_> = (1..=n).flat_map(|j| [(lay.w(j), l), (lay.v(j), l)]).collect();
    let mass = AffineForm::from_terms(mass, 0.0);
    cons.push(ConeConstraint::linear(
        Family::MassLower,
        0,
        mass.plus(&AffineForm::default(), -1.0),
    ));
    cons.push(ConeConstraint::linear(
        Family::MassUpper,
        0,
        mass.scaled(-1.0).plus(&AffineForm::default(), 1.0),
    ));

    let l2 = l * l;
    let mean: Vec<_> = (1..=n)
        .flat_map(|j| [(lay.w(j), l2 * j as f64), (lay.v(j), -l2 * (j - 1) as f64)])
        .collect();
    cons.push(ConeConstraint::linear(
        Family::Mean,
        0,
        AffineForm::from_terms(mean, -input.h1),
    ));
    let l3 = l2 * l;
    let moment: Vec<_> = (1..=n)
        .flat_map(|j| {
            let c = -l3 * ((j - 1) as f64).powi(2);
            [(lay.w(j), c), (lay.v(j), c)]
        })
        .collect();
    cons.push(ConeConstraint::linear(
        Family::Moment,
        0,
        AffineForm::from_terms(moment, fourier::second_moment_rhs(input.h2)),
    ));

    for m in 1..=2 * r {
        cons.push(cos_cone(&lay, &env, m));
    }
    for m in 1..=2 * r {
        let sf = f64::from(fourier::sine_factor(m as u32));
        let k = input.sine.numerator() * sf / (m as f64 * PI);
        let b = half_period_sin_form(&lay, m);
        let lo = sin_bracket_form(&lay, &env, m, false);
        let hi = sin_bracket_form(&lay, &env, m, true);
        cons.push(ConeConstraint::linear(
            Family::SinLower,
            m,
            b.scaled(-k).plus(&lo.scaled(-1.0), 0.0),
        ));
        cons.push(ConeConstraint::linear(Family::SinUpper, m, b.scaled(k).plus(&hi, 0.0)));
    }

    for i in 1..=r {
        let bound = fourier::tail_bound_cos((2 * i - 1) as u32, t)?;
        cons.push(ConeConstraint::linear(
            Family::EpsLower,
            i,
            AffineForm::from_terms(vec![(lay.eps(i), 1.0)], bound),
        ));
        cons.push(ConeConstraint::linear(
            Family::EpsUpper,
            i,
            AffineForm::from_terms(vec![(lay.eps(i), -1.0)], bound),
        ));
    }
    for i in 1..=r {
        let bound = fourier::tail_bound_sin((2 * i - 1) as u32, t)?;
        cons.push(ConeConstraint::linear(
            Family::DeltaLower,
            i,
            AffineForm::from_terms(vec![(lay.delta(i), 1.0)], bound),
        ));
        cons.push(ConeConstraint::linear(
            Family::DeltaUpper,
            i,
            AffineForm::from_terms(vec![(lay.delta(i), -1.0)], bound),
        ));
    }

    let coef_box = 2.0 / PI;
    for k in 1..=t {
        cons.push(ConeConstraint::linear(
            Family::CLower,
            k,
            AffineForm::from_terms(vec![(lay.c(k), 1.0)], coef_box),
        ));
        cons.push(ConeConstraint::linear(
            Family::CUpper,
            k,
            AffineForm::from_terms(vec![(lay.c(k), -1.0)], coef_box),
        ));
    }
    for k in 1..=t {
        cons.push(ConeConstraint::linear(
            Family::DLower,
            k,
            AffineForm::from_terms(vec![(lay.d(k), 1.0)], coef_box),
        ));
        cons.push(ConeConstraint::linear(
            Family::DUpper,
            k,
            AffineForm::from_terms(vec![(lay.d(k), -1.0)], coef_box),
        ));
    }

    let norm = (1..=t)
        .map(|k| var(lay.c(k), 1.0))
        .chain((1..=t).map(|k| var(lay.d(k), 1.0)))
        .collect();
    cons.push(ConeConstraint::second_order(
        Family::Parseval,
        0,
        AffineForm::constant(std::f64::consts::FRAC_1_SQRT_2),
        norm,
    ));

    cons.push(ConeConstraint::linear(
        Family::C1Lower,
        0,
        AffineForm::from_terms(vec![(lay.c(1), 1.0)], -input.p1),
    ));
    cons.push(ConeConstraint::linear(
        Family::C1Upper,
        0,
        AffineForm::from_terms(vec![(lay.c(1), -1.0)], input.p2),
    ));
    cons.push(ConeConstraint::linear(
        Family::D1Lower,
        0,
        AffineForm::from_terms(vec![(lay.d(1), 1.0)], -input.q1),
    ));
    cons.push(ConeConstraint::linear(
        Family::D1Upper,
        0,
        AffineForm::from_terms(vec![(lay.d(1), -1.0)], input.q2),
    ));

    if r >= 1 {
        let upper = envelope_form(&lay, env.alpha_plus(2));
        cons.push(ConeConstraint::linear(
            Family::CosUpper,
            0,
            upper.plus(&AffineForm::default(), cos_upper_constant(input)),
        ));
    }

    Ok(ConicProgram::new(
        ProgramSource::Full(*input),
        lay.num_vars(),
        lay.blocks(),
        cons,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn small_input() -> ProgramInput {
        ProgramInput::valid_ranges(8, 6, 2)
    }

    #[test]
    fn lp_structure() {
        let prog = build_lp(4, 0).unwrap();
        assert_eq!(prog.num_vars, 5);
        assert!(prog.constraints.iter().all(|c| c.kind == ConeKind::Linear));
        assert_eq!(prog.objective, vec![(0, 1.0)]);
        let third = 1.0 / 3.0;
        let x = [third, third, third, third, 0.0];
        let slack = quadratic_residuals(&prog, &x).unwrap();
        assert!(slack.iter().all(|s| *s >= -1e-15));
        // the flat profile has mass N/4 but too much second moment
        let slack = quadratic_residuals(&prog, &[0.25; 5]).unwrap();
        assert!(slack[prog.find(Family::Moment, 0).unwrap()] < 0.0);
    }

    #[test]
    fn full_structure() {
        let input = small_input();
        let prog = build_full(&input).unwrap();
        let lay = input.layout();
        assert_eq!(prog.num_vars, 2 * 8 + 2 * 6 + 2 * 2 + 1);
        let cones = prog
            .constraints
            .iter()
            .filter(|c| c.kind == ConeKind::SecondOrder)
            .count();
        assert_eq!(cones, 2 * 2 + 1);
        assert_eq!(prog.constraints[0].tag.family, Family::OmegaUpper);
        assert_eq!(prog.constraints.last().unwrap().tag.family, Family::CosUpper);
        assert_eq!(lay.delta(2), prog.num_vars - 1);
        prog.check().unwrap();
    }

    #[test]
    fn degenerate_r_has_no_fourier_rows() {
        let prog = build_full(&ProgramInput::valid_ranges(6, 3, 0)).unwrap();
        assert!(prog
            .constraints
            .iter()
            .all(|c| !matches!(c.tag.family, Family::CosCone | Family::SinLower | Family::CosUpper)));
    }

    #[test]
    fn input_validation() {
        let bad = small_input().with_box((1.0, 0.5), (0.0, 1.0), (-1.0, 1.0));
        assert!(build_full(&bad).is_err());
        let mut bad = small_input();
        bad.r = bad.t;
        assert!(build_full(&bad).is_err());
    }

    #[test]
    fn mass_violation_shows_as_unit_slack() {
        let prog = build_full(&small_input()).unwrap();
        let x = vec![0.0; prog.num_vars];
        let slack = quadratic_residuals(&prog, &x).unwrap();
        let i = prog.find(Family::MassLower, 0).unwrap();
        assert_eq!(slack[i], -1.0);
        assert!(quadratic_residuals(&prog, &x[1..]).is_err());
    }

    #[test]
    fn json_round_trip_is_bit_exact() {
        let prog = build_full(&small_input().with_box((0.01, 0.3), (0.1, 0.7), (-0.2, 0.3))).unwrap();
        let back = ConicProgram::from_json(&prog.to_json().unwrap()).unwrap();
        assert_eq!(prog, back);
    }

    #[test]
    fn constants_for_matches_rebuild() {
        let a = small_input();
        let b = a.with_box((0.02, 0.5), (0.3, 0.41), (-0.1, 0.05));
        let pa = build_full(&a).unwrap();
        let pb = build_full(&b).unwrap();
        let rebound = pa.constants_for(&b).unwrap();
        let direct: Vec<f64> = pb
            .constraints
            .iter()
            .flat_map(|c| c.rows.iter().map(|r| r.constant))
            .collect();
        assert_eq!(rebound, direct);
        for (ca, cb) in pa.constraints.iter().zip(&pb.constraints) {
            for (ra, rb) in ca.rows.iter().zip(&cb.rows) {
                assert_eq!(ra.terms, rb.terms);
            }
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn cone_matches_quadratic(seed in 0u64..1_000_000) {
            use rand::{Rng, SeedableRng};
            let input = small_input();
            let lay = input.layout();
            let prog = build_full(&input).unwrap();
            let env = build_envelopes(input.discretization().unwrap(), input.r);
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            for _ in 0..1_600 {
                let x: Vec<f64> = (0..prog.num_vars).map(|_| rng.gen_range(-0.6..0.6)).collect();
                for m in 1..=2 * input.r {
                    let a = half_period_cos_form(&lay, m).eval(&x);
                    let b = half_period_sin_form(&lay, m).eval(&x);
                    let f = envelope_form(&lay, env.alpha_minus(m)).eval(&x);
                    let quad = fourier::overlap_cos(m as u32, a, b) - f;
                    let idx = prog.find(Family::CosCone, m).unwrap();
                    let cone = prog.constraints[idx].slack(&x);
                    if quad.abs() > 1e-12 && cone.abs() > 1e-12 {
                        prop_assert_eq!(quad >= 0.0, cone >= 0.0, "m = {}", m);
                    }
                }
            }
        }
    }
}
