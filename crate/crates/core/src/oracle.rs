//! Exact reference computations for step functions `f` on `[-1, 1]`.
//!
//! For piecewise-constant `f` the correlation `M(x) = int f(t) g(x + t) dt`
//! with `g = 1 - f` is piecewise linear with kinks only at differences of
//! breakpoints, so `M` and all of its moments, averages and Fourier
//! coefficients are available in closed form.

use std::f64::consts::PI;

use num_rational::Ratio;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fourier::{self, FourierTruncation};
use crate::interval::{AverageVector, Discretization};
use crate::programs::{Layout, ProgramInput};

pub type Rational = Ratio<i64>;

/// Slack allowed when checking the box hypotheses against computed moments.
const HYPOTHESIS_TOL: f64 = 1e-12;

/// Piecewise polynomial of degree at most one. Piece `i` lives on
/// `[breaks[i], breaks[i+1]]` and equals `start[i] + slope[i] * (x - breaks[i])`.
#[derive(Debug, Clone, PartialEq)]
pub struct PiecewiseFn {
    breaks: Vec<f64>,
    start: Vec<f64>,
    slope: Vec<f64>,
}

impl PiecewiseFn {
    pub fn new(breaks: Vec<f64>, start: Vec<f64>, slope: Vec<f64>) -> Result<Self> {
        if breaks.len() < 2 || start.len() + 1 != breaks.len() || slope.len() != start.len() {
            return Err(Error::InvalidArgument("piece count does not match breakpoints".into()));
        }
        if breaks.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidArgument("breakpoints must be strictly increasing".into()));
        }
        Ok(Self { breaks, start, slope })
    }

    /// Continuous piecewise-linear interpolant through `(xs[i], ys[i])`.
    pub fn linear_through(xs: Vec<f64>, ys: &[f64]) -> Result<Self> {
        let slope = xs
            .windows(2)
            .zip(ys.windows(2))
            .map(|(x, y)| (y[1] - y[0]) / (x[1] - x[0]))
            .collect();
        let start = ys[..ys.len() - 1].to_vec();
        Self::new(xs, start, slope)
    }

    pub fn domain(&self) -> (f64, f64) {
        (self.breaks[0], *self.breaks.last().unwrap())
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breaks
    }

    pub fn pieces(&self) -> usize {
        self.start.len()
    }

    /// Value at `x`; zero outside the domain, right-continuous at breakpoints.
    pub fn eval(&self, x: f64) -> f64 {
        let (lo, hi) = self.domain();
        if x < lo || x > hi {
            return 0.0;
        }
        let i = match self.breaks.partition_point(|b| *b <= x) {
            0 => 0,
            p => (p - 1).min(self.pieces() - 1),
        };
        self.start[i] + self.slope[i] * (x - self.breaks[i])
    }

    fn piece_end_value(&self, i: usize) -> f64 {
        self.start[i] + self.slope[i] * (self.breaks[i + 1] - self.breaks[i])
    }

    /// Maximum of `|phi|`, attained at a piece endpoint.
    pub fn sup_norm(&self) -> f64 {
        (0..self.pieces())
            .flat_map(|i| [self.start[i].abs(), self.piece_end_value(i).abs()])
            .fold(0.0, f64::max)
    }

    /// `int_a^b phi(x) dx` for any `a <= b`.
    pub fn integral_over(&self, a: f64, b: f64) -> f64 {
        let first = self.breaks.partition_point(|x| *x <= a).saturating_sub(1);
        let mut total = 0.0;
        for i in first..self.pieces() {
            let (x0, x1) = (self.breaks[i], self.breaks[i + 1]);
            if x0 >= b {
                break;
            }
            let lo = a.max(x0);
            let hi = b.min(x1);
            if hi <= lo {
                continue;
            }
            let (u0, u1) = (lo - x0, hi - x0);
            total += self.start[i] * (hi - lo) + self.slope[i] * (u1 * u1 - u0 * u0) / 2.0;
        }
        total
    }

    pub fn integral(&self) -> f64 {
        let (a, b) = self.domain();
        self.integral_over(a, b)
    }

    /// `int x^k phi(x) dx` for `k <= 2`.
    pub fn moment(&self, k: u32) -> f64 {
        assert!(k <= 2);
        let mut total = 0.0;
        for i in 0..self.pieces() {
            let (x0, x1) = (self.breaks[i], self.breaks[i + 1]);
            // phi = alpha + beta x on this piece
            let beta = self.slope[i];
            let alpha = self.start[i] - beta * x0;
            let p = |e: i32| (x1.powi(e) - x0.powi(e)) / e as f64;
            total += match k {
                0 => alpha * p(1) + beta * p(2),
                1 => alpha * p(2) + beta * p(3),
                _ => alpha * p(3) + beta * p(4),
            };
        }
        total
    }

    /// `(int cos(omega x) phi, int sin(omega x) phi)` in closed form.
    pub fn trig_integrals(&self, omega: f64) -> (f64, f64) {
        let (mut ci, mut si) = (0.0, 0.0);
        for i in 0..self.pieces() {
            let (x0, x1) = (self.breaks[i], self.breaks[i + 1]);
            let (y0, s) = (self.start[i], self.slope[i]);
            let (s0, c0) = (omega * x0).sin_cos();
            let (s1, c1) = (omega * x1).sin_cos();
            let h = x1 - x0;
            // antiderivatives of (y0 + s (x - x0)) cos / sin
            ci += y0 * (s1 - s0) / omega + s * (h * s1 / omega + (c1 - c0) / (omega * omega));
            si += y0 * (c0 - c1) / omega + s * (-h * c1 / omega + (s1 - s0) / (omega * omega));
        }
        (ci, si)
    }
}

/// Piecewise-constant `f : [-1, 1] -> [0, 1]` with rational data and `int f = 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "StepFixture", into = "StepFixture")]
pub struct StepFunction {
    name: String,
    breaks: Vec<Rational>,
    values: Vec<Rational>,
}

/// On-disk form of a step function: rationals written as `"p/q"`, integers or
/// finite decimals.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StepFixture {
    #[serde(default)]
    pub name: String,
    pub breakpoints: Vec<String>,
    pub values: Vec<String>,
}

pub fn parse_rational(s: &str) -> Result<Rational> {
    let s = s.trim();
    let bad = || Error::Format(format!("not a rational number: {s:?}"));
    if let Some((p, q)) = s.split_once('/') {
        let p: i64 = p.trim().parse().map_err(|_| bad())?;
        let q: i64 = q.trim().parse().map_err(|_| bad())?;
        if q == 0 {
            return Err(bad());
        }
        return Ok(Rational::new(p, q));
    }
    if let Some((int, frac)) = s.split_once('.') {
        if frac.is_empty() || frac.len() > 15 || !frac.bytes().all(|b| b.is_ascii_digit()) {
            return Err(bad());
        }
        let neg = int.starts_with('-');
        let int_part: i64 = match int.trim_start_matches(['-', '+']) {
            "" => 0,
            digits => digits.parse().map_err(|_| bad())?,
        };
        let den = 10i64.pow(frac.len() as u32);
        let num = int_part * den + frac.parse::<i64>().map_err(|_| bad())?;
        return Ok(Rational::new(if neg { -num } else { num }, den));
    }
    s.parse::<i64>().map(Rational::from_integer).map_err(|_| bad())
}

fn format_rational(r: &Rational) -> String {
    if *r.denom() == 1 {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

fn to_f64(r: &Rational) -> f64 {
    *r.numer() as f64 / *r.denom() as f64
}

impl TryFrom<StepFixture> for StepFunction {
    type Error = Error;

    fn try_from(fx: StepFixture) -> Result<Self> {
        let breaks = fx
            .breakpoints
            .iter()
            .map(|s| parse_rational(s))
            .collect::<Result<Vec<_>>>()?;
        let values = fx
            .values
            .iter()
            .map(|s| parse_rational(s))
            .collect::<Result<Vec<_>>>()?;
        StepFunction::new(fx.name, breaks, values)
    }
}

impl From<StepFunction> for StepFixture {
    fn from(f: StepFunction) -> Self {
        StepFixture {
            name: f.name,
            breakpoints: f.breaks.iter().map(format_rational).collect(),
            values: f.values.iter().map(format_rational).collect(),
        }
    }
}

impl StepFunction {
    pub fn new(name: impl Into<String>, breaks: Vec<Rational>, values: Vec<Rational>) -> Result<Self> {
        let one = Rational::from_integer(1);
        let zero = Rational::from_integer(0);
        if breaks.len() != values.len() + 1 || values.is_empty() {
            return Err(Error::InvalidArgument("need one value per piece".into()));
        }
        if breaks[0] != -one || *breaks.last().unwrap() != one {
            return Err(Error::InvalidArgument(
                "breakpoints must start at -1 and end at 1".into(),
            ));
        }
        if breaks.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidArgument("breakpoints must be strictly increasing".into()));
        }
        if let Some(v) = values.iter().find(|v| **v < zero || **v > one) {
            return Err(Error::InvalidArgument(format!("value {v} outside [0, 1]")));
        }
        let mass: Rational = breaks.windows(2).zip(&values).map(|(w, v)| (w[1] - w[0]) * v).sum();
        if mass != one {
            return Err(Error::InvalidArgument(format!("int f = {mass}, expected 1")));
        }
        Ok(Self {
            name: name.into(),
            breaks,
            values,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// `x -> f(-x)`.
    pub fn reflected(&self) -> Self {
        let breaks = self.breaks.iter().rev().map(|b| -b).collect();
        let values = self.values.iter().rev().cloned().collect();
        Self {
            name: format!("{}-reflected", self.name),
            breaks,
            values,
        }
    }

    /// `1 - f`, which also has unit mass on `[-1, 1]`.
    pub fn complement(&self) -> Self {
        let one = Rational::from_integer(1);
        Self {
            name: format!("{}-complement", self.name),
            breaks: self.breaks.clone(),
            values: self.values.iter().map(|v| one - v).collect(),
        }
    }

    pub fn to_piecewise(&self) -> PiecewiseFn {
        let breaks = self.breaks.iter().map(to_f64).collect();
        let start: Vec<f64> = self.values.iter().map(to_f64).collect();
        let slope = vec![0.0; start.len()];
        PiecewiseFn::new(breaks, start, slope).expect("validated on construction")
    }

    fn pieces_f64(&self) -> Vec<(f64, f64, f64)> {
        self.breaks
            .windows(2)
            .zip(&self.values)
            .map(|(w, v)| (to_f64(&w[0]), to_f64(&w[1]), to_f64(v)))
            .collect()
    }
}

/// `M(x) = int f(t) (1 - f(x + t)) dt` on `[-2, 2]`.
pub fn convolve(f: &StepFunction) -> PiecewiseFn {
    let fp = f.pieces_f64();
    let gp: Vec<_> = fp
        .iter()
        .filter(|(_, _, v)| *v < 1.0)
        .map(|&(a, b, v)| (a, b, 1.0 - v))
        .collect();
    let fp: Vec<_> = fp.into_iter().filter(|(_, _, v)| *v > 0.0).collect();

    let mut xs = vec![-2.0, 2.0];
    for &(a, b, _) in &fp {
        for &(c, d, _) in &gp {
            xs.extend([c - a, c - b, d - a, d - b]);
        }
    }
    xs.retain(|x| (-2.0..=2.0).contains(x));
    xs.sort_by(f64::total_cmp);
    xs.dedup_by(|a, b| (*a - *b).abs() <= 1e-14);

    // overlap of [a, b] with [c - x, d - x], weighted
    let eval = |x: f64| -> f64 {
        let mut total = 0.0;
        for &(a, b, fv) in &fp {
            for &(c, d, gv) in &gp {
                let len = b.min(d - x) - a.max(c - x);
                if len > 0.0 {
                    total += fv * gv * len;
                }
            }
        }
        total
    };
    let ys: Vec<f64> = xs.iter().map(|&x| eval(x)).collect();
    PiecewiseFn::linear_through(xs, &ys).expect("sorted distinct nodes")
}

/// `E(M) = int x M(x) dx`.
pub fn mean(m: &PiecewiseFn) -> f64 {
    m.moment(1)
}

pub fn second_moment(m: &PiecewiseFn) -> f64 {
    m.moment(2)
}

/// `(c_k, d_k) = (int cos(pi k x) f, int sin(pi k x) f)` over `[-1, 1]`.
pub fn fourier_f(f: &PiecewiseFn, k: usize) -> (f64, f64) {
    f.trig_integrals(PI * k as f64)
}

/// `(1/2) (int cos(pi m x / 2) phi, int sin(pi m x / 2) phi)`: the half-period
/// coefficients (`a_m, b_m` for `f`, `A_m, B_m` for `M`).
pub fn half_period_coeffs(phi: &PiecewiseFn, m: u32) -> (f64, f64) {
    let (c, s) = phi.trig_integrals(PI * f64::from(m) / 2.0);
    (c / 2.0, s / 2.0)
}

/// Interval averages of `M` on the `N` positive and `N` negative cells.
pub fn averages(m: &PiecewiseFn, disc: Discretization) -> AverageVector {
    let n = disc.n();
    let l = disc.width();
    let mut w = Vec::with_capacity(n);
    let mut v = Vec::with_capacity(n);
    for j in 1..=n {
        let (lo, hi) = ((j - 1) as f64 * l, j as f64 * l);
        w.push(m.integral_over(lo, hi) / l);
        v.push(m.integral_over(-hi, -lo) / l);
    }
    AverageVector { w, v }
}

/// Variable assignment produced by a concrete `f`, feasible for the full
/// program whenever `f` satisfies the box hypotheses of the input.
#[derive(Debug, Clone)]
pub struct FeasibleAssignment {
    pub omega: f64,
    pub averages: AverageVector,
    pub coeffs: FourierTruncation,
    /// `eps[i]` is the cosine tail for odd index `2i + 1`.
    pub eps: Vec<f64>,
    pub delta: Vec<f64>,
    /// Largest gap between the exact tails and their partial sums up to
    /// `K_ext`; bounded by the tail estimate evaluated at `K_ext`.
    pub truncation_residual: f64,
    pub mean: f64,
}

impl FeasibleAssignment {
    /// Primal point in the variable layout of the full program for `input`.
    pub fn to_point(&self, input: &ProgramInput) -> Result<Vec<f64>> {
        let lay = input.layout();
        if self.averages.n() != input.n || self.coeffs.t() != input.t || self.eps.len() != input.r {
            return Err(Error::InvalidArgument("assignment sizes differ from the input".into()));
        }
        let mut x = vec![0.0; lay.num_vars()];
        x[Layout::OMEGA] = self.omega;
        for j in 1..=input.n {
            x[lay.w(j)] = self.averages.w[j - 1];
            x[lay.v(j)] = self.averages.v[j - 1];
        }
        for k in 1..=input.t {
            x[lay.c(k)] = self.coeffs.c(k);
            x[lay.d(k)] = self.coeffs.d(k);
        }
        for i in 1..=input.r {
            x[lay.eps(i)] = self.eps[i - 1];
            x[lay.delta(i)] = self.delta[i - 1];
        }
        Ok(x)
    }
}

/// Builds the assignment for `f` and checks it lies in the input box.
pub fn assignment(f: &StepFunction, input: &ProgramInput, k_ext: usize) -> Result<FeasibleAssignment> {
    input.validate()?;
    if k_ext < 10 * input.t {
        return Err(Error::InvalidArgument(format!(
            "K_ext = {k_ext} must be at least 10 T = {}",
            10 * input.t
        )));
    }
    let fp = f.to_piecewise();
    let m = convolve(f);
    let em = mean(&m);
    let (c1, d1) = fourier_f(&fp, 1);
    let tol = HYPOTHESIS_TOL;
    if !(input.h1 >= 0.0 && input.h1 <= em + tol && em <= input.h2 + tol) {
        return Err(Error::Hypothesis(format!(
            "(i) needs 0 <= h1 <= E(M) <= h2; E(M) = {em}, h = [{}, {}]",
            input.h1, input.h2
        )));
    }
    if !(input.p1 >= 0.0 && input.p1 <= c1 + tol && c1 <= input.p2 + tol) {
        return Err(Error::Hypothesis(format!(
            "(ii) needs 0 <= p1 <= c_1 <= p2; c_1 = {c1}, p = [{}, {}]",
            input.p1, input.p2
        )));
    }
    if !(input.q1 <= d1 + tol && d1 <= input.q2 + tol) {
        return Err(Error::Hypothesis(format!(
            "(iii) needs q1 <= d_1 <= q2; d_1 = {d1}, q = [{}, {}]",
            input.q1, input.q2
        )));
    }

    let all: Vec<(f64, f64)> = (1..=k_ext).map(|k| fourier_f(&fp, k)).collect();
    let (c, d): (Vec<f64>, Vec<f64>) = all[..input.t].iter().copied().unzip();
    let coeffs = FourierTruncation::new(c, d)?;

    let mut eps = Vec::with_capacity(input.r);
    let mut delta = Vec::with_capacity(input.r);
    let mut residual: f64 = 0.0;
    for i in 0..input.r {
        let mo = (2 * i + 1) as u32;
        let (a_exact, b_exact) = half_period_coeffs(&fp, mo);
        let e = a_exact - fourier::half_period_cos(mo, &coeffs, 0.0)?;
        let dl = b_exact - fourier::half_period_sin(mo, &coeffs, 0.0)?;
        // partial tails from T+1 to K_ext as a cross-check
        let sf = f64::from(fourier::sine_factor(mo));
        let (mut tc, mut ts) = (0.0, 0.0);
        for k in input.t + 1..=k_ext {
            let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
            let den = (i64::from(mo) * i64::from(mo) - 4 * (k as i64) * (k as i64)) as f64;
            tc += sign * all[k - 1].0 / den;
            ts += k as f64 * sign * all[k - 1].1 / den;
        }
        tc *= 2.0 * f64::from(mo) * sf / PI;
        ts *= 4.0 * sf / PI;
        residual = residual.max((e - tc).abs()).max((dl - ts).abs());
        eps.push(e);
        delta.push(dl);
    }

    Ok(FeasibleAssignment {
        omega: m.sup_norm(),
        averages: averages(&m, input.discretization()?),
        coeffs,
        eps,
        delta,
        truncation_residual: residual,
        mean: em,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn r(p: i64, q: i64) -> Rational {
        Rational::new(p, q)
    }

    fn indicator_0_1() -> StepFunction {
        StepFunction::new("step", vec![r(-1, 1), r(0, 1), r(1, 1)], vec![r(0, 1), r(1, 1)]).unwrap()
    }

    fn constant_half() -> StepFunction {
        StepFunction::new("half", vec![r(-1, 1), r(1, 1)], vec![r(1, 2)]).unwrap()
    }

    #[test]
    fn rational_parsing() {
        assert_eq!(parse_rational("3/4").unwrap(), r(3, 4));
        assert_eq!(parse_rational("-0.25").unwrap(), r(-1, 4));
        assert_eq!(parse_rational("1").unwrap(), r(1, 1));
        assert_eq!(parse_rational(".5").unwrap(), r(1, 2));
        assert!(parse_rational("abc").is_err());
        assert!(parse_rational("1/0").is_err());
    }

    #[test]
    fn step_function_validation() {
        assert!(StepFunction::new("x", vec![r(-1, 1), r(1, 1)], vec![r(1, 3)]).is_err());
        assert!(StepFunction::new("x", vec![r(-1, 1), r(1, 1)], vec![r(3, 2)]).is_err());
        assert!(StepFunction::new("x", vec![r(0, 1), r(1, 1)], vec![r(1, 1)]).is_err());
        assert!(StepFunction::new(
            "x",
            vec![r(-1, 1), r(0, 1), r(0, 1), r(1, 1)],
            vec![r(1, 2), r(1, 2), r(1, 2)]
        )
        .is_err());
    }

    #[test]
    fn triangle_from_complementary_indicators() {
        let m = convolve(&indicator_0_1());
        assert_abs_diff_eq!(m.sup_norm(), 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(m.eval(-1.0), 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(m.eval(-0.5), 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(m.eval(0.5), 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(m.integral(), 1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(mean(&m), -1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(second_moment(&m), 7.0 / 6.0, epsilon = 1e-14);
    }

    #[test]
    fn centered_indicator_has_half_peak() {
        let f = StepFunction::new(
            "mid",
            vec![r(-1, 1), r(-1, 2), r(1, 2), r(1, 1)],
            vec![r(0, 1), r(1, 1), r(0, 1)],
        )
        .unwrap();
        let m = convolve(&f);
        assert_abs_diff_eq!(m.sup_norm(), 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(m.eval(1.0), 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(m.eval(-1.0), 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(mean(&m), 0.0, epsilon = 1e-15);
    }

    #[test]
    fn constant_gives_tent() {
        let m = convolve(&constant_half());
        for x in [-2.0, -1.3, 0.0, 0.7, 2.0] {
            assert_abs_diff_eq!(m.eval(x), (2.0 - f64::abs(x)) / 4.0, epsilon = 1e-15);
        }
        assert_abs_diff_eq!(second_moment(&m), 2.0 / 3.0, epsilon = 1e-14);
    }

    #[test]
    fn closed_form_trig_matches_simpson() {
        let m = convolve(&indicator_0_1());
        let n = 20_000;
        let h = 4.0 / n as f64;
        for omega in [PI / 2.0, PI, 3.0 * PI / 2.0] {
            let mut sc = 0.0;
            let mut ss = 0.0;
            for i in 0..=n {
                let x = -2.0 + i as f64 * h;
                let wgt = if i == 0 || i == n {
                    1.0
                } else if i % 2 == 1 {
                    4.0
                } else {
                    2.0
                };
                sc += wgt * (omega * x).cos() * m.eval(x);
                ss += wgt * (omega * x).sin() * m.eval(x);
            }
            let (c, s) = m.trig_integrals(omega);
            assert_abs_diff_eq!(c, sc * h / 3.0, epsilon = 1e-9);
            assert_abs_diff_eq!(s, ss * h / 3.0, epsilon = 1e-9);
        }
    }

    #[test]
    fn averages_have_unit_mass() {
        let m = convolve(&indicator_0_1());
        let disc = Discretization::new(100).unwrap();
        let avg = averages(&m, disc);
        assert_abs_diff_eq!(avg.mass(disc.width()), 1.0, epsilon = 1e-13);
        assert!(avg.v.iter().all(|x| (0.0..=1.0).contains(x)));
        assert!(avg.w.iter().all(|x| x.abs() < 1e-15));
    }

    #[test]
    fn symmetry_triple_preserves_sup_norm() {
        let f = StepFunction::new(
            "odd",
            vec![r(-1, 1), r(-3, 5), r(1, 5), r(2, 5), r(1, 1)],
            vec![r(1, 2), r(3, 4), r(0, 1), r(1, 3)],
        )
        .unwrap();
        let base = convolve(&f).sup_norm();
        assert_abs_diff_eq!(convolve(&f.reflected()).sup_norm(), base, epsilon = 1e-14);
        assert_abs_diff_eq!(convolve(&f.complement()).sup_norm(), base, epsilon = 1e-14);
    }

    #[test]
    fn fixture_json_round_trip() {
        let f = indicator_0_1();
        let back = StepFunction::from_json(&f.to_json().unwrap()).unwrap();
        assert_eq!(f, back);
        assert!(StepFunction::from_json(r#"{"breakpoints":["-1","1"],"values":["1"]}"#).is_err());
    }
}
