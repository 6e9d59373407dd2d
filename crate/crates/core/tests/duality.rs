//! Dual construction, solver output, polishing and verification checked
//! against oracle primal points and against each other.

mod common;

use std::sync::Arc;

use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use minoverlap::certify::{certify_program, fl_error_bound, verify, PipelineOptions};
use minoverlap::dual::{dualize, eliminate, CheckKind, DualPoint, DualProgram};
use minoverlap::oracle::{self, assignment, convolve, fourier_f, StepFunction};
use minoverlap::programs::{build_full, build_lp, ConeKind, ConicProgram, ProgramInput};
use minoverlap::solver::{polish, solve, PolishOptions, SolveOptions};
use minoverlap::Error;

fn eliminated(prog: &ConicProgram) -> DualProgram {
    eliminate(dualize(Arc::new(prog.clone()))).unwrap()
}

fn small_full() -> ProgramInput {
    ProgramInput::valid_ranges(60, 24, 4).with_box((0.0, 0.1), (0.3, 0.4), (-0.05, 0.05))
}

fn raw_point(prog: &ConicProgram) -> (DualProgram, DualPoint) {
    let sol = solve(prog, &SolveOptions::default()).unwrap();
    assert!(sol.status.is_usable(), "{:?}", sol.status);
    let dual = eliminated(prog);
    let pt = sol.dual_point(&dual).unwrap();
    (dual, pt)
}

fn admissible(f: StepFunction) -> StepFunction {
    let f = if fourier_f(&f.to_piecewise(), 1).0 < 0.0 {
        f.complement()
    } else {
        f
    };
    if oracle::mean(&convolve(&f)) < 0.0 {
        f.reflected()
    } else {
        f
    }
}

#[test]
fn solver_is_deterministic() {
    for prog in [build_lp(300, 6).unwrap(), build_full(&small_full()).unwrap()] {
        let a = solve(&prog, &SolveOptions::default()).unwrap();
        let b = solve(&prog, &SolveOptions::default()).unwrap();
        assert_eq!(a.status, b.status);
        assert_eq!(a.iterations, b.iterations);
        assert_eq!(a.primal_objective.to_bits(), b.primal_objective.to_bits());
        assert!(a.primal.iter().zip(&b.primal).all(|(x, y)| x.to_bits() == y.to_bits()));
        assert!(a
            .multipliers
            .iter()
            .zip(&b.multipliers)
            .all(|(x, y)| x.to_bits() == y.to_bits()));
    }
}

#[test]
fn solver_outputs_satisfy_weak_duality() {
    for prog in [build_lp(2000, 20).unwrap(), build_full(&small_full()).unwrap()] {
        let sol = solve(&prog, &SolveOptions::default()).unwrap();
        let dual = eliminated(&prog);
        let d = dual.full_objective(&sol.multipliers);
        assert!(
            d <= sol.primal_objective + sol.gap + 1e-9,
            "dual {d} primal {}",
            sol.primal_objective
        );
        assert!(
            (d - sol.primal_objective).abs() <= 1e-8,
            "dual {d} primal {}",
            sol.primal_objective
        );
        let x = &sol.primal;
        let worst = prog
            .constraints
            .iter()
            .map(|c| c.slack(x))
            .fold(f64::INFINITY, f64::min);
        assert!(worst >= -1e-8, "primal slack {worst}");
    }
}

#[test]
fn margins_do_not_depend_on_the_box() {
    let input = small_full();
    let prog = build_full(&input).unwrap();
    let (dual, pt) = raw_point(&prog);
    let other = input.with_box((0.02, 0.05), (0.33, 0.38), (-0.01, 0.02));
    let consts = dual.constants_for(&other).unwrap();
    let a = dual.eval(&pt, None).unwrap();
    let b = dual.eval(&pt, Some(&consts)).unwrap();
    assert_eq!(a.checks, b.checks);
    assert_eq!(a.derived, b.derived);
    assert_ne!(a.objective, b.objective);
    assert_eq!(consts, eliminated(&build_full(&other).unwrap()).constants);
}

#[test]
fn elimination_is_a_faithful_projection() {
    let prog = build_full(&small_full()).unwrap();
    let (dual, pt) = raw_point(&prog);
    let pt = polish(&dual, &pt, &PolishOptions::default()).unwrap().point;
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let (mut feasible, mut infeasible) = (0, 0);
    for round in 0..400 {
        let mut p = pt.clone();
        // polished margins sit just above zero, so only the smallest sizes stay feasible
        let size = match round % 10 {
            0 => 0.0,
            k @ 1..=2 => 10f64.powi(-15 - k),
            k => 10f64.powi(-k),
        };
        for v in &mut p.values {
            *v += size * rng.gen_range(-1.0..1.0);
        }
        let ev = dual.eval(&p, None).unwrap();
        let margin = ev
            .checks
            .iter()
            .map(|c| match c.kind {
                CheckKind::Cone {
                    bound_positive: false, ..
                } => -1.0,
                _ => c.margin,
            })
            .fold(f64::INFINITY, f64::min);
        let full = dual.expand(&p).unwrap();
        let violation = dual.full_violation(&full).unwrap();
        if margin > 0.0 {
            assert!(
                violation <= 1e-10,
                "eliminated-feasible point violates the full dual by {violation}"
            );
            feasible += 1;
        } else if margin < -1e-9 {
            assert!(violation > 0.0, "eliminated-infeasible point has a feasible expansion");
            infeasible += 1;
        }
        assert_eq!(dual.restrict(&full).unwrap(), p);
        assert!((dual.full_objective(&full) - ev.objective).abs() <= 1e-12);
    }
    assert!(
        feasible > 10 && infeasible > 10,
        "{feasible} feasible, {infeasible} infeasible"
    );
}

#[test]
fn polish_only_repairs() {
    for prog in [build_lp(400, 8).unwrap(), build_full(&small_full()).unwrap()] {
        let (dual, raw) = raw_point(&prog);
        let before = verify(&dual, &raw, None).unwrap();
        let polished = polish(&dual, &raw, &PolishOptions::default()).unwrap();
        let after = verify(&dual, &polished.point, None).unwrap();
        assert!(after.pass);
        for (b, a) in before.checks.iter().zip(&after.checks) {
            assert!((-a.margin).max(0.0) <= (-b.margin).max(0.0), "{:?}", a.tag);
            assert!(!b.pass || a.pass);
        }
        assert!(polished.objective_loss() >= -1e-12 && polished.objective_loss() < 1e-6);

        let again = polish(&dual, &polished.point, &PolishOptions::default()).unwrap();
        assert!(again.objective_loss().abs() <= 1e-12);
        assert!(verify(&dual, &again.point, None).unwrap().pass);
    }
}

#[test]
fn polish_rejects_clearly_negative_multipliers() {
    let prog = build_lp(50, 2).unwrap();
    let (dual, mut pt) = raw_point(&prog);
    let el = dual.elimination().unwrap();
    let linear = dual
        .blocks
        .iter()
        .find_map(|b| (b.kind == ConeKind::Linear).then(|| el.free_pos[b.start]).flatten())
        .unwrap();
    pt.values[linear] = -1.0;
    assert!(matches!(
        polish(&dual, &pt, &PolishOptions::default()),
        Err(Error::Polish(_))
    ));
}

/// Recomputes each passing check with its terms summed in random orders.
/// The reordered values must stay within the error bound and keep the sign.
#[test]
fn error_bounds_survive_reordering() {
    for prog in [build_lp(2000, 20).unwrap(), build_full(&small_full()).unwrap()] {
        let out = certify_program(prog, &PipelineOptions::default()).unwrap();
        let (dual, pt) = (&out.dual, &out.point);
        let el = dual.elimination().unwrap();
        let value = |m: usize| el.free_pos[m].map_or(0.0, |p| pt.values[p]);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut reordered = 0;
        for check in out.report.checks.iter().filter(|c| c.pass) {
            let terms: Vec<f64> = match check.kind {
                CheckKind::Free { mult } => vec![value(mult)],
                CheckKind::Cone { constraint, .. } => {
                    let b = &dual.blocks[constraint];
                    (b.start..b.start + b.len)
                        .map(|m| {
                            if m == b.start {
                                value(m) * value(m)
                            } else {
                                -value(m) * value(m)
                            }
                        })
                        .collect()
                }
                CheckKind::Derived { var } => {
                    let piv = &el.pivots[var];
                    let sign = piv.coef.signum();
                    std::iter::once(sign * dual.phi[var])
                        .chain(
                            dual.columns[var]
                                .iter()
                                .filter(|&&(m, _)| m != piv.mult)
                                .map(|&(m, c)| -sign * c * value(m)),
                        )
                        .collect()
                }
            };
            assert_eq!(terms.len(), check.n_terms);
            let bound = fl_error_bound(check.n_terms, check.abs_sum).unwrap();
            for _ in 0..10 {
                let mut t = terms.clone();
                t.shuffle(&mut rng);
                let s: f64 = t.iter().sum();
                assert!(s > 0.0, "{:?}: reordered sum {s}", check.tag);
                assert!(
                    (s - check.margin).abs() <= 2.0 * bound,
                    "{:?}: {s} vs {}",
                    check.tag,
                    check.margin
                );
            }
            reordered += 1;
        }
        assert!(reordered > 100);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    /// Certified bounds never exceed the objective of an oracle assignment,
    /// which is primal feasible for the same box.
    #[test]
    fn certified_bounds_respect_oracle_points(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let pieces = 2 * rng.gen_range(1..=6);
        let f = admissible(common::random_step(&mut rng, pieces, 10));
        let e = oracle::mean(&convolve(&f));
        let (c1, d1) = fourier_f(&f.to_piecewise(), 1);
        let input = ProgramInput::valid_ranges(80, 30, 5).with_box(
            ((e - 0.03).max(0.0), e + 0.03),
            ((c1 - 0.03).max(0.0), c1 + 0.03),
            (d1 - 0.03, d1 + 0.03),
        );
        let a = assignment(&f, &input, 20 * input.t).unwrap();
        let out = certify_program(build_full(&input).unwrap(), &PipelineOptions::default()).unwrap();
        prop_assert!(out.report.pass);
        prop_assert!(out.report.certified_bound <= a.omega + 1e-9, "{} > {}", out.report.certified_bound, a.omega);
        prop_assert!(out.report.objective <= a.omega + 1e-9);
    }
}
