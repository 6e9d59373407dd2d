//! Verification of dual points under a worst-case rounding model, the
//! certificate file, reuse of a certificate across `(h, p)` boxes, the
//! resulting ellipse regions and the covering check.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::dual::{dualize, eliminate, CheckKind, DualPoint, DualProgram, LabeledBlock};
use crate::error::{Error, Result};
use crate::fourier::SineCoefficient;
use crate::programs::{build_full, build_lp, ConicProgram, Family, ProgramInput, ProgramSource, Tag};
use crate::solver::{polish, solve, PolishOptions, SolveOptions, SolveStatus};

pub const UNIT_ROUNDOFF: f64 = 1.0 / 9_007_199_254_740_992.0;

/// Worst-case error of an `n`-term sum of products with absolute sum
/// `abs_sum`: `(n-1) u (1+u) / (1 - (n-1) u) * abs_sum`, rounded up.
pub fn fl_error_bound(n: usize, abs_sum: f64) -> Result<f64> {
    if n <= 1 {
        return Ok(0.0);
    }
    let r = (n - 1) as f64 * UNIT_ROUNDOFF;
    if r >= 1.0 {
        return Err(Error::InvalidArgument(format!("{n} terms exceed the error model")));
    }
    // 1 + u rounds to 1, so the next float above r dominates r (1 + u)
    let num = r.next_up();
    let den = (1.0 - r).next_down();
    let gamma = (num / den).next_up();
    Ok((gamma * abs_sum).next_up())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CheckResult {
    pub kind: CheckKind,
    pub tag: Tag,
    pub margin: f64,
    pub error_bound: f64,
    pub n_terms: usize,
    pub abs_sum: f64,
    pub pass: bool,
}

#[derive(Debug, Clone)]
pub struct VerificationReport {
    pub unit_roundoff: f64,
    pub checks: Vec<CheckResult>,
    pub pass: bool,
    /// Dual objective as evaluated in floating point.
    pub objective: f64,
    /// Bound on the distance between `objective` and the exact objective of
    /// the point (free values exact, derived values solved exactly).
    pub objective_error: f64,
    /// `objective - objective_error`, rounded down.
    pub certified_bound: f64,
}

impl VerificationReport {
    pub fn failures(&self) -> impl Iterator<Item = &CheckResult> {
        self.checks.iter().filter(|c| !c.pass)
    }

    /// Smallest `margin - error_bound`.
    pub fn min_slack(&self) -> f64 {
        self.checks
            .iter()
            .map(|c| c.margin - c.error_bound)
            .fold(f64::INFINITY, f64::min)
    }

    pub fn summary(&self) -> ReportSummary {
        let worst = self
            .checks
            .iter()
            .min_by(|a, b| (a.margin - a.error_bound).total_cmp(&(b.margin - b.error_bound)));
        ReportSummary {
            pass: self.pass,
            checks: self.checks.len(),
            failed: self.failures().count(),
            min_slack: self.min_slack(),
            worst: worst.map(|c| format!("{:?}[{}] {}", c.tag.family, c.tag.index, kind_name(c.kind))),
            unit_roundoff: self.unit_roundoff,
            objective: self.objective,
            objective_error: self.objective_error,
            certified_bound: self.certified_bound,
        }
    }
}

fn kind_name(kind: CheckKind) -> &'static str {
    match kind {
        CheckKind::Free { .. } => "multiplier",
        CheckKind::Cone { .. } => "cone",
        CheckKind::Derived { .. } => "derived",
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportSummary {
    pub pass: bool,
    pub checks: usize,
    pub failed: usize,
    pub min_slack: f64,
    pub worst: Option<String>,
    pub unit_roundoff: f64,
    pub objective: f64,
    pub objective_error: f64,
    pub certified_bound: f64,
}

/// Checks every inequality of the eliminated dual at `pt`. With `input`
/// given, the objective uses that box's constants (same structure required).
pub fn verify(dual: &DualProgram, pt: &DualPoint, input: Option<&ProgramInput>) -> Result<VerificationReport> {
    let constants = input.map(|i| dual.constants_for(i)).transpose()?;
    let ev = dual.eval(pt, constants.as_deref())?;
    let el = dual.elimination()?;
    let consts = constants.as_deref().unwrap_or(&dual.constants);

    let mut checks = Vec::with_capacity(ev.checks.len());
    let mut derived_error = 0.0;
    for c in &ev.checks {
        let bound = fl_error_bound(c.n_terms, c.abs_sum)?;
        let (tag, extra_ok) = match c.kind {
            CheckKind::Free { mult } => (tag_of_mult(dual, mult), true),
            CheckKind::Cone {
                constraint,
                bound_positive,
            } => (dual.primal.constraints[constraint].tag, bound_positive),
            CheckKind::Derived { var } => {
                let piv = &el.pivots[var];
                let ye = ev.derived[var];
                let err = bound / piv.coef.abs() + UNIT_ROUNDOFF * ye.abs();
                derived_error += (consts[piv.mult].abs() * err).next_up();
                (dual.primal.constraints[piv.constraint].tag, true)
            }
        };
        checks.push(CheckResult {
            kind: c.kind,
            tag,
            margin: c.margin,
            error_bound: bound,
            n_terms: c.n_terms,
            abs_sum: c.abs_sum,
            pass: extra_ok && c.margin > bound,
        });
    }
    let sum_error = fl_error_bound(ev.objective_terms, ev.objective_abs_sum)?;
    let objective_error = ((sum_error + derived_error) * (1.0 + 4.0 * UNIT_ROUNDOFF)).next_up();
    Ok(VerificationReport {
        unit_roundoff: UNIT_ROUNDOFF,
        pass: checks.iter().all(|c| c.pass),
        checks,
        objective: ev.objective,
        objective_error,
        certified_bound: (ev.objective - objective_error).next_down(),
    })
}

fn tag_of_mult(dual: &DualProgram, mult: usize) -> Tag {
    let b = dual.blocks.partition_point(|b| b.start <= mult) - 1;
    dual.primal.constraints[dual.blocks[b].constraint].tag
}

/// The four multipliers that carry the box parameters into the objective.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NamedMultipliers {
    pub mean: f64,
    pub moment: f64,
    pub cos_upper: f64,
    /// `(lower, upper)` bound rows on `c_1`.
    pub c1: (f64, f64),
}

impl NamedMultipliers {
    fn read(dual: &DualProgram, pt: &DualPoint) -> Result<Self> {
        let el = dual.elimination()?;
        let get = |family: Family| -> f64 {
            dual.multiplier(family, 0)
                .and_then(|m| el.free_pos[m])
                .map_or(0.0, |p| pt.values[p])
        };
        Ok(Self {
            mean: get(Family::Mean),
            moment: get(Family::Moment),
            cos_upper: get(Family::CosUpper),
            c1: (get(Family::C1Lower), get(Family::C1Upper)),
        })
    }
}

/// Multipliers of the mean, moment and cosine-upper rows relative to the
/// section-scaled rows (`1` each for programs built here).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RowScales {
    pub mean: f64,
    pub moment: f64,
    pub cos_upper: f64,
}

impl RowScales {
    pub const UNIT: RowScales = RowScales {
        mean: 1.0,
        moment: 1.0,
        cos_upper: 1.0,
    };

    /// Scaling of the published SOCP data: `N/2` on the mean and moment rows,
    /// `N` on the cosine-upper row.
    pub fn published(n: usize) -> Self {
        let n = n as f64;
        Self {
            mean: n / 2.0,
            moment: n / 2.0,
            cos_upper: n,
        }
    }
}

impl Default for RowScales {
    fn default() -> Self {
        Self::UNIT
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Flags {
    pub paper_compat: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverMeta {
    pub solver: String,
    pub version: String,
    pub solve: SolveOptions,
    pub polish: PolishOptions,
    pub status: SolveStatus,
    pub iterations: u32,
    pub primal_objective: f64,
    pub gap: f64,
    pub polish_loss: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Certificate {
    pub input: ProgramSource,
    pub flags: Flags,
    pub point: Vec<LabeledBlock>,
    pub multipliers: Option<NamedMultipliers>,
    #[serde(default = "RowScales::default")]
    pub scales: RowScales,
    /// Certified lower bound on the primal optimum.
    pub objective: f64,
    pub report: ReportSummary,
    pub solver_meta: SolverMeta,
}

impl Certificate {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn program_input(&self) -> Option<&ProgramInput> {
        match &self.input {
            ProgramSource::Full(input) => Some(input),
            ProgramSource::Lp { .. } => None,
        }
    }

    pub fn build_program(&self) -> Result<ConicProgram> {
        match &self.input {
            ProgramSource::Lp { n, r } => build_lp(*n, *r),
            ProgramSource::Full(input) => build_full(input),
        }
    }

    /// Rebuilds the program from the recorded input and verifies the stored point.
    pub fn reverify(&self) -> Result<VerificationReport> {
        let expected = self
            .program_input()
            .is_some_and(|i| i.sine == SineCoefficient::PaperCompat);
        if expected != self.flags.paper_compat {
            return Err(Error::Format("compatibility flag disagrees with the input".into()));
        }
        let dual = eliminate(dualize(Arc::new(self.build_program()?)))?;
        let pt = dual.from_labeled(&self.point)?;
        verify(&dual, &pt, None)
    }
}

/// Known bounds on the constant: the trivial mass bound and the best
/// published upper bound.
pub const TRIVIAL_LOWER: f64 = 0.25;
pub const KNOWN_UPPER: f64 = 0.380926853433087;
/// Slack allowed below the trivial bound: programs whose optimum is the
/// trivial bound certify slightly under it after polishing.
pub const ENVELOPE_TOL: f64 = 1e-8;

/// Whether `bound` is consistent with the known bounds. Bounds over a
/// strict sub-box of the parameter ranges only bound the constant on that
/// box, so only the lower end applies to them.
pub fn within_envelope(source: &ProgramSource, bound: f64) -> bool {
    let global = match source {
        ProgramSource::Lp { .. } => true,
        ProgramSource::Full(i) => {
            let v = ProgramInput::valid_ranges(i.n, i.t, i.r);
            i.h1 <= v.h1 && i.h2 >= v.h2 && i.p1 <= v.p1 && i.p2 >= v.p2 && i.q1 <= v.q1 && i.q2 >= v.q2
        }
    };
    bound >= TRIVIAL_LOWER - ENVELOPE_TOL && (!global || bound <= KNOWN_UPPER)
}

impl Certificate {
    pub fn within_envelope(&self) -> bool {
        within_envelope(&self.input, self.objective)
    }
}

/// Everything one certification run produces.
#[derive(Debug, Clone)]
pub struct Outcome {
    pub certificate: Certificate,
    pub report: VerificationReport,
    pub dual: DualProgram,
    pub point: DualPoint,
}

#[derive(Debug, Clone, Copy, Default)]
pub struct PipelineOptions {
    pub solve: SolveOptions,
    pub polish: PolishOptions,
}

/// Solve, polish and verify. A failed verification is returned as data;
/// an unusable solver status is an error.
pub fn certify_program(prog: ConicProgram, opts: &PipelineOptions) -> Result<Outcome> {
    let sol = solve(&prog, &opts.solve)?;
    if !sol.status.is_usable() {
        return Err(Error::Solver(format!("solver stopped with status {:?}", sol.status)));
    }
    let source = prog.source.clone();
    let dual = eliminate(dualize(Arc::new(prog)))?;
    let raw = sol.dual_point(&dual)?;
    let polished = polish(&dual, &raw, &opts.polish)?;
    let report = verify(&dual, &polished.point, None)?;
    let paper_compat = matches!(&source, ProgramSource::Full(i) if i.sine == SineCoefficient::PaperCompat);
    let multipliers = match source {
        ProgramSource::Full(_) => Some(NamedMultipliers::read(&dual, &polished.point)?),
        ProgramSource::Lp { .. } => None,
    };
    let certificate = Certificate {
        input: source,
        flags: Flags { paper_compat },
        point: dual.labeled(&polished.point)?,
        multipliers,
        scales: RowScales::UNIT,
        objective: report.certified_bound,
        report: report.summary(),
        solver_meta: SolverMeta {
            solver: "clarabel".into(),
            version: env!("CARGO_PKG_VERSION").into(),
            solve: opts.solve,
            polish: opts.polish,
            status: sol.status,
            iterations: sol.iterations,
            primal_objective: sol.primal_objective,
            gap: sol.gap,
            polish_loss: polished.objective_loss(),
        },
    };
    Ok(Outcome {
        certificate,
        report,
        dual,
        point: polished.point,
    })
}

/// Anchor data a reuse computation needs: the certified objective, the box
/// it was certified on, and the multipliers of the box-dependent rows.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReuseData {
    pub objective: f64,
    pub h: (f64, f64),
    pub p: (f64, f64),
    pub q: (f64, f64),
    pub y: NamedMultipliers,
    pub scales: RowScales,
}

impl ReuseData {
    pub fn from_certificate(cert: &Certificate) -> Result<Self> {
        let input = cert
            .program_input()
            .ok_or_else(|| Error::InvalidArgument("LP certificates have no box to reuse".into()))?;
        let y = cert
            .multipliers
            .ok_or_else(|| Error::Format("certificate lacks named multipliers".into()))?;
        if !cert.report.pass {
            return Err(Error::InvalidArgument("certificate did not verify".into()));
        }
        Ok(Self {
            objective: cert.objective,
            h: (input.h1, input.h2),
            p: (input.p1, input.p2),
            q: (input.q1, input.q2),
            y,
            scales: cert.scales,
        })
    }

    /// Lower bound on the optimum over the primed box (same `q` range).
    pub fn reuse_objective(&self, h1p: f64, h2p: f64, p1p: f64, p2p: f64) -> f64 {
        let (h1, h2) = self.h;
        let (p1, p2) = self.p;
        let s = self.scales;
        let y = self.y;
        self.objective
            + s.mean * (h1p - h1) * y.mean
            + s.moment * (h2 * h2 - h2p * h2p) / 2.0 * y.moment
            + s.cos_upper * (p2 * p2 - p2p * p2p) / 2.0 * y.cos_upper
            + (p1p - p1) * y.c1.0
            + (p2 - p2p) * y.c1.1
    }

    pub fn ellipse(&self, threshold: f64) -> EllipseRegion {
        let s = self.scales;
        let y = self.y;
        let (h1, h2) = self.h;
        let (p1, p2) = self.p;
        let coeffs = Quadratic {
            constant: self.objective - threshold - s.mean * h1 * y.mean
                + s.moment * h2 * h2 * y.moment / 2.0
                + s.cos_upper * p2 * p2 * y.cos_upper / 2.0
                - p1 * y.c1.0
                + p2 * y.c1.1,
            h: s.mean * y.mean,
            p: y.c1.0 - y.c1.1,
            hh: s.moment * y.moment / 2.0,
            pp: s.cos_upper * y.cos_upper / 2.0,
        };
        EllipseRegion {
            coeffs,
            threshold,
            anchor: ((h1 + h2) / 2.0, (p1 + p2) / 2.0, self.objective),
            q: self.q,
        }
    }
}

/// Reuse bound of a verified certificate at the primed box.
pub fn reuse_objective(cert: &Certificate, h1p: f64, h2p: f64, p1p: f64, p2p: f64) -> Result<f64> {
    Ok(ReuseData::from_certificate(cert)?.reuse_objective(h1p, h2p, p1p, p2p))
}

/// Region of `(h, p)` where the reuse bound at `(h, h, p, p)` reaches `threshold`.
pub fn ellipse(cert: &Certificate, threshold: f64) -> Result<EllipseRegion> {
    Ok(ReuseData::from_certificate(cert)?.ellipse(threshold))
}

/// `constant + h x + p y - hh x^2 - pp y^2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Quadratic {
    pub constant: f64,
    pub h: f64,
    pub p: f64,
    pub hh: f64,
    pub pp: f64,
}

impl Quadratic {
    pub fn eval(&self, h: f64, p: f64) -> f64 {
        self.constant + self.h * h + self.p * p - self.hh * h * h - self.pp * p * p
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Shape {
    Empty,
    WholePlane,
    Ellipse {
        center: (f64, f64),
        semi_axes: (f64, f64),
    },
    /// A quadratic coefficient vanishes but the linear part does not: a
    /// half-plane, strip or parabolic region.
    Unbounded,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EllipseRegion {
    pub coeffs: Quadratic,
    pub threshold: f64,
    /// `(h, p, objective)` of the certificate.
    pub anchor: (f64, f64, f64),
    pub q: (f64, f64),
}

impl EllipseRegion {
    pub fn value(&self, h: f64, p: f64) -> f64 {
        self.coeffs.eval(h, p)
    }

    pub fn contains(&self, h: f64, p: f64) -> bool {
        self.value(h, p) >= 0.0
    }

    pub fn shape(&self) -> Shape {
        let c = self.coeffs;
        if c.hh > 0.0 && c.pp > 0.0 {
            let center = (c.h / (2.0 * c.hh), c.p / (2.0 * c.pp));
            let peak = c.constant + c.h * c.h / (4.0 * c.hh) + c.p * c.p / (4.0 * c.pp);
            if peak < 0.0 {
                return Shape::Empty;
            }
            return Shape::Ellipse {
                center,
                semi_axes: ((peak / c.hh).sqrt(), (peak / c.pp).sqrt()),
            };
        }
        let flat_h = c.hh == 0.0 && c.h == 0.0;
        let flat_p = c.pp == 0.0 && c.p == 0.0;
        if flat_h && flat_p {
            if c.constant >= 0.0 {
                Shape::WholePlane
            } else {
                Shape::Empty
            }
        } else if (flat_h || c.hh > 0.0) && (flat_p || c.pp > 0.0) {
            // bounded in the curved direction, constant in the other
            let peak = c.constant
                + if c.hh > 0.0 { c.h * c.h / (4.0 * c.hh) } else { 0.0 }
                + if c.pp > 0.0 { c.p * c.p / (4.0 * c.pp) } else { 0.0 };
            if peak < 0.0 {
                Shape::Empty
            } else {
                Shape::Unbounded
            }
        } else {
            Shape::Unbounded
        }
    }
}

/// Axis-aligned box in the `(h, p)` plane.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rect {
    pub h: (f64, f64),
    pub p: (f64, f64),
}

impl Rect {
    pub fn new(h: (f64, f64), p: (f64, f64)) -> Result<Self> {
        if !(h.0 <= h.1 && p.0 <= p.1) || [h.0, h.1, p.0, p.1].iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidArgument("box corners must be finite and ordered".into()));
        }
        Ok(Self { h, p })
    }

    fn probes(&self) -> [(f64, f64); 5] {
        let (h0, h1) = self.h;
        let (p0, p1) = self.p;
        [
            (h0, p0),
            (h1, p0),
            (h0, p1),
            (h1, p1),
            ((h0 + h1) / 2.0, (p0 + p1) / 2.0),
        ]
    }

    fn split(&self) -> [Rect; 4] {
        let hm = (self.h.0 + self.h.1) / 2.0;
        let pm = (self.p.0 + self.p.1) / 2.0;
        [
            Rect {
                h: (self.h.0, hm),
                p: (self.p.0, pm),
            },
            Rect {
                h: (hm, self.h.1),
                p: (self.p.0, pm),
            },
            Rect {
                h: (self.h.0, hm),
                p: (pm, self.p.1),
            },
            Rect {
                h: (hm, self.h.1),
                p: (pm, self.p.1),
            },
        ]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Coverage {
    pub covered: bool,
    /// A point of the box no region certifies, when coverage fails.
    pub witness: Option<(f64, f64)>,
    pub cells: usize,
}

/// Maximum subdivision depth of the covering quadtree.
pub const COVER_DEPTH: usize = 16;

/// Whether every point of `rect` lies in some region with quadratic value at
/// least `guard`. Each cell is accepted when a single region clears `guard`
/// at its corners and centre; since region quadratics are concave, the
/// corners bound the whole cell.
pub fn covers(regions: &[EllipseRegion], rect: Rect, guard: f64) -> Coverage {
    let mut cells = 0;
    let mut stack = vec![(rect, 0usize)];
    while let Some((cell, depth)) = stack.pop() {
        cells += 1;
        let probes = cell.probes();
        let accepted = regions
            .iter()
            .any(|r| r.coeffs.hh >= 0.0 && r.coeffs.pp >= 0.0 && probes.iter().all(|&(h, p)| r.value(h, p) >= guard));
        if accepted {
            continue;
        }
        let bare = probes
            .iter()
            .find(|&&(h, p)| regions.iter().all(|r| r.value(h, p) < guard));
        if let Some(&w) = bare {
            return Coverage {
                covered: false,
                witness: Some(w),
                cells,
            };
        }
        if depth >= COVER_DEPTH {
            return Coverage {
                covered: false,
                witness: Some(probes[4]),
                cells,
            };
        }
        stack.extend(cell.split().into_iter().map(|c| (c, depth + 1)));
    }
    Coverage {
        covered: true,
        witness: None,
        cells,
    }
}
