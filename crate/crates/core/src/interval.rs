//! Envelopes of `cos(pi m x / 2)` and `sin(pi m x / 2)` on the subintervals
//! `[(j-1)L, jL]`, and brackets on the Fourier coefficients, mean and second
//! moment of `M` in terms of its interval averages `w_j`, `v_j`.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// `N` subintervals of `[0, 2]`, each of width `L = 2/N`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Discretization {
    n: usize,
}

impl Discretization {
    pub fn new(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidArgument("N must be positive".into()));
        }
        Ok(Self { n })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn width(&self) -> f64 {
        2.0 / self.n as f64
    }
}

/// Envelope arrays indexed by `(j, m)` with `1 <= j <= N`, `1 <= m <= 2R`.
/// Stored per `m` so each row is a contiguous vector over `j`.
#[derive(Debug, Clone)]
pub struct EnvelopeArrays {
    n: usize,
    max_m: usize,
    alpha_minus: Vec<Vec<f64>>,
    alpha_plus: Vec<Vec<f64>>,
    beta_minus: Vec<Vec<f64>>,
    beta_plus: Vec<Vec<f64>>,
}

impl EnvelopeArrays {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn max_m(&self) -> usize {
        self.max_m
    }

    pub fn alpha_minus(&self, m: usize) -> &[f64] {
        &self.alpha_minus[m - 1]
    }

    pub fn alpha_plus(&self, m: usize) -> &[f64] {
        &self.alpha_plus[m - 1]
    }

    pub fn beta_minus(&self, m: usize) -> &[f64] {
        &self.beta_minus[m - 1]
    }

    pub fn beta_plus(&self, m: usize) -> &[f64] {
        &self.beta_plus[m - 1]
    }

    fn check_m(&self, m: usize) -> Result<()> {
        if m == 0 || m > self.max_m {
            return Err(Error::IndexOutOfRange(format!(
                "harmonic {m} outside 1..={}",
                self.max_m
            )));
        }
        Ok(())
    }
}

/// Midpoint value plus or minus `pi m L / 4` (half-width times derivative bound).
pub fn build_envelopes(disc: Discretization, r: usize) -> EnvelopeArrays {
    let n = disc.n();
    let l = disc.width();
    let max_m = 2 * r;
    let rows: Vec<_> = (1..=max_m)
        .into_par_iter()
        .map(|m| {
            let mf = m as f64;
            let slack = PI * mf * l / 4.0;
            let mut am = Vec::with_capacity(n);
            let mut ap = Vec::with_capacity(n);
            let mut bm = Vec::with_capacity(n);
            let mut bp = Vec::with_capacity(n);
            for j in 1..=n {
                let arg = PI * mf * l * (j as f64 - 0.5) / 2.0;
                let (s, c) = arg.sin_cos();
                am.push(c - slack);
                ap.push(c + slack);
                bm.push(s - slack);
                bp.push(s + slack);
            }
            (am, ap, bm, bp)
        })
        .collect();
    let mut env = EnvelopeArrays {
        n,
        max_m,
        alpha_minus: Vec::with_capacity(max_m),
        alpha_plus: Vec::with_capacity(max_m),
        beta_minus: Vec::with_capacity(max_m),
        beta_plus: Vec::with_capacity(max_m),
    };
    for (am, ap, bm, bp) in rows {
        env.alpha_minus.push(am);
        env.alpha_plus.push(ap);
        env.beta_minus.push(bm);
        env.beta_plus.push(bp);
    }
    env
}

/// Averages of `M` on `[(j-1)L, jL]` (`w`) and on `[-jL, -(j-1)L]` (`v`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AverageVector {
    pub w: Vec<f64>,
    pub v: Vec<f64>,
}

impl AverageVector {
    pub fn new(w: Vec<f64>, v: Vec<f64>) -> Result<Self> {
        if w.len() != v.len() {
            return Err(Error::DimensionMismatch {
                expected: w.len(),
                got: v.len(),
            });
        }
        Ok(Self { w, v })
    }

    pub fn zeros(n: usize) -> Self {
        Self {
            w: vec![0.0; n],
            v: vec![0.0; n],
        }
    }

    pub fn n(&self) -> usize {
        self.w.len()
    }

    /// `L * sum (w_j + v_j)`, which is 1 for averages of a true `M`.
    pub fn mass(&self, l: f64) -> f64 {
        l * self.w.iter().zip(&self.v).map(|(w, v)| w + v).sum::<f64>()
    }
}

fn check_dims(avg: &AverageVector, n: usize) -> Result<()> {
    if avg.n() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: avg.n(),
        });
    }
    Ok(())
}

/// Bracket on `A_m`.
pub fn cos_bracket(avg: &AverageVector, env: &EnvelopeArrays, m: usize) -> Result<(f64, f64)> {
    check_dims(avg, env.n())?;
    env.check_m(m)?;
    let half_l = 1.0 / env.n() as f64;
    let (mut lo, mut hi) = (0.0, 0.0);
    for j in 0..env.n() {
        let s = avg.w[j] + avg.v[j];
        lo += env.alpha_minus(m)[j] * s;
        hi += env.alpha_plus(m)[j] * s;
    }
    Ok((half_l * lo, half_l * hi))
}

/// Bracket on `B_m`.
pub fn sin_bracket(avg: &AverageVector, env: &EnvelopeArrays, m: usize) -> Result<(f64, f64)> {
    check_dims(avg, env.n())?;
    env.check_m(m)?;
    let half_l = 1.0 / env.n() as f64;
    let (bm, bp) = (env.beta_minus(m), env.beta_plus(m));
    let (mut lo, mut hi) = (0.0, 0.0);
    for j in 0..env.n() {
        lo += bm[j] * avg.w[j] - bp[j] * avg.v[j];
        hi += bp[j] * avg.w[j] - bm[j] * avg.v[j];
    }
    Ok((half_l * lo, half_l * hi))
}

/// Bracket on the mean `E(M)`.
pub fn mean_bracket(avg: &AverageVector, disc: Discretization) -> Result<(f64, f64)> {
    check_dims(avg, disc.n())?;
    let l = disc.width();
    let (mut lo, mut hi) = (0.0, 0.0);
    for (i, (w, v)) in avg.w.iter().zip(&avg.v).enumerate() {
        let j = (i + 1) as f64;
        lo += (j - 1.0) * w - j * v;
        hi += j * w - (j - 1.0) * v;
    }
    Ok((l * l * lo, l * l * hi))
}

/// Bracket on the second moment `int x^2 M(x) dx`.
pub fn moment_bracket(avg: &AverageVector, disc: Discretization) -> Result<(f64, f64)> {
    check_dims(avg, disc.n())?;
    let l = disc.width();
    let (mut lo, mut hi) = (0.0, 0.0);
    for (i, (w, v)) in avg.w.iter().zip(&avg.v).enumerate() {
        let j = (i + 1) as f64;
        lo += (j - 1.0) * (j - 1.0) * (w + v);
        hi += j * j * (w + v);
    }
    let l3 = l * l * l;
    Ok((l3 * lo, l3 * hi))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn envelope_examples() {
        let env = build_envelopes(Discretization::new(2).unwrap(), 1);
        assert_abs_diff_eq!(env.alpha_minus(2)[0], -PI / 2.0, epsilon = 1e-15);
        assert_abs_diff_eq!(env.alpha_minus(1)[0], -0.07829, epsilon = 1e-5);
        assert_abs_diff_eq!(env.beta_plus(1)[0], 1.49250, epsilon = 1e-5);
    }

    #[test]
    fn envelopes_contain_sampled_trig() {
        for n in [2usize, 7, 40] {
            let disc = Discretization::new(n).unwrap();
            let env = build_envelopes(disc, 3);
            let l = disc.width();
            for m in 1..=6 {
                for j in 1..=n {
                    for s in 0..=10_000 {
                        let x = (j as f64 - 1.0) * l + l * s as f64 / 10_000.0;
                        let arg = PI * m as f64 * x / 2.0;
                        assert!(env.alpha_minus(m)[j - 1] <= arg.cos() + 1e-15);
                        assert!(env.alpha_plus(m)[j - 1] >= arg.cos() - 1e-15);
                        assert!(env.beta_minus(m)[j - 1] <= arg.sin() + 1e-15);
                        assert!(env.beta_plus(m)[j - 1] >= arg.sin() - 1e-15);
                    }
                    let width = env.alpha_plus(m)[j - 1] - env.alpha_minus(m)[j - 1];
                    assert_abs_diff_eq!(width, PI * m as f64 * l / 2.0, epsilon = 1e-14);
                }
            }
        }
    }

    #[test]
    fn zero_averages_give_zero_brackets() {
        let disc = Discretization::new(10).unwrap();
        let env = build_envelopes(disc, 2);
        let avg = AverageVector::zeros(10);
        assert_eq!(cos_bracket(&avg, &env, 3).unwrap(), (0.0, 0.0));
        assert_eq!(sin_bracket(&avg, &env, 3).unwrap(), (0.0, 0.0));
        assert_eq!(mean_bracket(&avg, disc).unwrap(), (0.0, 0.0));
        assert_eq!(moment_bracket(&avg, disc).unwrap(), (0.0, 0.0));
    }

    #[test]
    fn uniform_averages() {
        let disc = Discretization::new(2000).unwrap();
        let env = build_envelopes(disc, 1);
        let avg = AverageVector::new(vec![0.25; 2000], vec![0.25; 2000]).unwrap();
        let (lo, hi) = cos_bracket(&avg, &env, 2).unwrap();
        assert!(lo <= 0.0 && 0.0 <= hi);
        assert!(hi - lo <= PI * disc.width() + 1e-12);
        let (lo, hi) = sin_bracket(&avg, &env, 1).unwrap();
        assert_abs_diff_eq!(lo, -hi, epsilon = 1e-12);
        let (lo, hi) = mean_bracket(&avg, disc).unwrap();
        assert_abs_diff_eq!(lo, -hi, epsilon = 1e-12);
        assert_abs_diff_eq!(hi - lo, disc.width(), epsilon = 1e-12);
    }

    #[test]
    fn dimension_mismatch_and_bad_harmonic() {
        let disc = Discretization::new(4).unwrap();
        let env = build_envelopes(disc, 1);
        let avg = AverageVector::zeros(5);
        assert!(matches!(
            cos_bracket(&avg, &env, 1),
            Err(Error::DimensionMismatch { .. })
        ));
        assert!(mean_bracket(&avg, disc).is_err());
        let avg = AverageVector::zeros(4);
        assert!(cos_bracket(&avg, &env, 3).is_err());
        assert!(AverageVector::new(vec![0.0], vec![]).is_err());
    }
}
