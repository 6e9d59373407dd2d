//! Relations between the Fourier coefficients of `f` on `[-1, 1]` and the
//! half-period coefficients of `f` and `M` on `[-2, 2]`.
//!
//! Notation follows the series
//! `f(x) = 1/2 + sum c_k cos(k pi x) + sum d_k sin(k pi x)` on `[-1, 1]` and
//! `f(x) = 1/4 + sum a_m cos(m pi x / 2) + sum b_m sin(m pi x / 2)` on `[-2, 2]`
//! (likewise `A_m`, `B_m` for `M`).

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Exact value of `sin(pi m / 2)` for integer `m`, read off `m mod 4`.
pub fn sine_factor(m: u32) -> i32 {
    match m % 4 {
        1 => 1,
        3 => -1,
        _ => 0,
    }
}

/// Coefficient multiplying `sin(m pi / 2) b_m` in the sine relation for `B_m`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
pub enum SineCoefficient {
    /// `4 / (m pi)`, the value obtained from the exponential-series identity.
    #[default]
    Derived,
    /// `8 / (m pi)`, as printed in the published sine constraints.
    PaperCompat,
}

impl SineCoefficient {
    pub fn numerator(self) -> f64 {
        match self {
            SineCoefficient::Derived => 4.0,
            SineCoefficient::PaperCompat => 8.0,
        }
    }
}

/// Truncated cosine/sine coefficients `c_1..c_T`, `d_1..d_T` of `f` on `[-1, 1]`.
/// The constant term `c_0 = 1/2` is implicit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FourierTruncation {
    c: Vec<f64>,
    d: Vec<f64>,
}

impl FourierTruncation {
    pub const C0: f64 = 0.5;

    pub fn new(c: Vec<f64>, d: Vec<f64>) -> Result<Self> {
        if c.len() != d.len() {
            return Err(Error::DimensionMismatch {
                expected: c.len(),
                got: d.len(),
            });
        }
        if c.is_empty() {
            return Err(Error::InvalidArgument("truncation index T must be positive".into()));
        }
        Ok(Self { c, d })
    }

    pub fn zeros(t: usize) -> Self {
        Self {
            c: vec![0.0; t],
            d: vec![0.0; t],
        }
    }

    pub fn t(&self) -> usize {
        self.c.len()
    }

    /// `c_k` for `1 <= k <= T`.
    pub fn c(&self, k: usize) -> f64 {
        self.c[k - 1]
    }

    pub fn d(&self, k: usize) -> f64 {
        self.d[k - 1]
    }

    pub fn cos_coeffs(&self) -> &[f64] {
        &self.c
    }

    pub fn sin_coeffs(&self) -> &[f64] {
        &self.d
    }

    pub fn parseval_sum(&self) -> f64 {
        self.c.iter().zip(&self.d).map(|(c, d)| c * c + d * d).sum()
    }

    /// Coefficient box `|c_k|, |d_k| <= 2/pi` and the truncated Parseval bound.
    pub fn satisfies_invariants(&self) -> bool {
        let cap = 2.0 / PI;
        self.c.iter().chain(&self.d).all(|x| x.abs() <= cap) && self.parseval_sum() <= 0.5
    }
}

fn check_even_index(m: u32, t: usize) -> Result<()> {
    if m == 0 {
        return Err(Error::InvalidArgument("m must be positive".into()));
    }
    if m.is_multiple_of(2) && (m / 2) as usize > t {
        return Err(Error::IndexOutOfRange(format!(
            "m/2 = {} exceeds truncation T = {t}",
            m / 2
        )));
    }
    Ok(())
}

/// `m^2 - 4k^2` evaluated in integer arithmetic; never zero for odd `m`.
fn denominator(m: u32, k: usize) -> f64 {
    let m = i64::from(m);
    let k = k as i64;
    (m * m - 4 * k * k) as f64
}

/// Affine form of `a_m` (odd `m`, without the tail `eps_m`) as
/// `(constant, weights)` with `weights[k-1]` multiplying `c_k`.
pub fn half_period_cos_weights(m: u32, t: usize) -> (f64, Vec<f64>) {
    debug_assert!(m % 2 == 1);
    let sf = f64::from(sine_factor(m));
    let scale = 2.0 * f64::from(m) * sf / PI;
    let constant = sf / (f64::from(m) * PI);
    let weights = (1..=t)
        .map(|k| {
            let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
            scale * sign / denominator(m, k)
        })
        .collect();
    (constant, weights)
}

/// Affine form of `b_m` (odd `m`, without the tail `delta_m`); `weights[k-1]`
/// multiplies `d_k`.
pub fn half_period_sin_weights(m: u32, t: usize) -> Vec<f64> {
    debug_assert!(m % 2 == 1);
    let scale = 4.0 * f64::from(sine_factor(m)) / PI;
    (1..=t)
        .map(|k| {
            let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
            scale * k as f64 * sign / denominator(m, k)
        })
        .collect()
}

/// Half-period cosine coefficient `a_m` of `f` from its truncated series.
/// `eps` is the tail remainder and is ignored for even `m`.
pub fn half_period_cos(m: u32, ft: &FourierTruncation, eps: f64) -> Result<f64> {
    check_even_index(m, ft.t())?;
    if m.is_multiple_of(2) {
        return Ok(ft.c((m / 2) as usize) / 2.0);
    }
    let mf = f64::from(m);
    let mut inner = FourierTruncation::C0 / (mf * mf);
    for k in 1..=ft.t() {
        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
        inner += sign * ft.c(k) / denominator(m, k);
    }
    Ok(eps + 2.0 * mf * f64::from(sine_factor(m)) / PI * inner)
}

/// Half-period sine coefficient `b_m` of `f`; `delta` is ignored for even `m`.
pub fn half_period_sin(m: u32, ft: &FourierTruncation, delta: f64) -> Result<f64> {
    check_even_index(m, ft.t())?;
    if m.is_multiple_of(2) {
        return Ok(ft.d((m / 2) as usize) / 2.0);
    }
    let mut inner = 0.0;
    for k in 1..=ft.t() {
        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
        inner += k as f64 * sign * ft.d(k) / denominator(m, k);
    }
    Ok(delta + 4.0 * f64::from(sine_factor(m)) / PI * inner)
}

/// Cosine coefficient `A_m` of `M` on `[-2, 2]`.
pub fn overlap_cos(m: u32, a: f64, b: f64) -> f64 {
    let lin = 4.0 * f64::from(sine_factor(m)) / (f64::from(m) * PI);
    lin * a - 2.0 * (a * a + b * b)
}

/// Sine coefficient `B_m` of `M` on `[-2, 2]`; exactly zero for even `m`.
pub fn overlap_sin(m: u32, b: f64) -> f64 {
    overlap_sin_with(m, b, SineCoefficient::Derived)
}

pub fn overlap_sin_with(m: u32, b: f64, coeff: SineCoefficient) -> f64 {
    match sine_factor(m) {
        0 => 0.0,
        sf => -(coeff.numerator() * f64::from(sf) / (f64::from(m) * PI)) * b,
    }
}

fn check_tail_args(m: u32, t: usize) -> Result<()> {
    if t == 0 {
        return Err(Error::InvalidArgument("T must be positive".into()));
    }
    if m.is_multiple_of(2) {
        return Err(Error::InvalidArgument(format!("tail bound needs odd m, got {m}")));
    }
    if m as usize >= 2 * t {
        return Err(Error::InvalidArgument(format!(
            "tail bound needs m < 2T, got m = {m}, T = {t}"
        )));
    }
    Ok(())
}

fn tail_prefactor(m: u32, t: usize) -> f64 {
    let ratio = f64::from(m) / t as f64;
    1.0 / (4.0 - ratio * ratio)
}

/// Upper bound on `|eps_m|`, the cosine-series tail beyond `T`.
/// Rounded up by one ulp so the stored value dominates the real bound.
pub fn tail_bound_cos(m: u32, t: usize) -> Result<f64> {
    check_tail_args(m, t)?;
    let tf = t as f64;
    let bound = tail_prefactor(m, t) * (2.0 * f64::from(m) / (PI * (6.0 * tf * tf * tf).sqrt()));
    Ok(bound.next_up())
}

/// Upper bound on `|delta_m|`, the sine-series tail beyond `T`.
pub fn tail_bound_sin(m: u32, t: usize) -> Result<f64> {
    check_tail_args(m, t)?;
    let bound = tail_prefactor(m, t) * (4.0 / (PI * (2.0 * t as f64).sqrt()));
    Ok(bound.next_up())
}

/// `int x^2 M(x) dx` as a function of the mean `E(M)`.
pub fn second_moment_rhs(mean: f64) -> f64 {
    2.0 / 3.0 + mean * mean / 2.0
}
