#![allow(dead_code)]

use std::path::PathBuf;

use num_rational::Ratio;

use minoverlap::oracle::{PiecewiseFn, StepFunction};

pub const FIXTURES: [&str; 4] = ["constant", "shifted_step", "cosine_perturbed", "indicator_0_1"];

pub fn fixture_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures")
}

pub fn fixture(name: &str) -> StepFunction {
    let path = fixture_dir().join("functions").join(format!("{name}.json"));
    StepFunction::from_json(&std::fs::read_to_string(path).unwrap()).unwrap()
}

/// Every fixture plus its reflection and complement.
pub fn fixture_family() -> Vec<StepFunction> {
    FIXTURES
        .iter()
        .flat_map(|n| {
            let f = fixture(n);
            [f.reflected(), f.complement(), f]
        })
        .collect()
}

/// Composite five-point Gauss-Legendre rule applied separately between
/// consecutive breakpoints with about `density` panels per unit length.
/// Nodes are interior, so jumps at the breakpoints are harmless.
pub fn gauss(g: impl Fn(f64) -> f64, breaks: &[f64], density: usize) -> f64 {
    const X: [f64; 5] = [
        -0.906_179_845_938_664,
        -0.538_469_310_105_683_1,
        0.0,
        0.538_469_310_105_683_1,
        0.906_179_845_938_664,
    ];
    const W: [f64; 5] = [
        0.236_926_885_056_189_1,
        0.478_628_670_499_366_5,
        0.568_888_888_888_888_9,
        0.478_628_670_499_366_5,
        0.236_926_885_056_189_1,
    ];
    let mut total = 0.0;
    for w in breaks.windows(2) {
        let (a, b) = (w[0], w[1]);
        let n = ((b - a) * density as f64).ceil().max(1.0) as usize;
        let h = (b - a) / n as f64;
        for i in 0..n {
            let mid = a + (i as f64 + 0.5) * h;
            total += X.iter().zip(W).map(|(x, w)| w * g(mid + x * h / 2.0)).sum::<f64>() * h / 2.0;
        }
    }
    total
}

/// Breakpoints of a piecewise function on `[lo, hi]` merged with the ends.
pub fn breaks_on(pw: &PiecewiseFn, lo: f64, hi: f64) -> Vec<f64> {
    let mut b: Vec<f64> = pw
        .breakpoints()
        .iter()
        .copied()
        .filter(|x| *x > lo && *x < hi)
        .collect();
    b.push(lo);
    b.push(hi);
    b.sort_by(f64::total_cmp);
    b.dedup();
    b
}

/// Exact optimum of the even linear program without cosine rows: the
/// smallest cap `Omega` such that `N/4` units of mass fit in `N` cells of
/// capacity `Omega` with `sum (j-1)^2 w_j <= N^3 / 24`. The cheapest
/// placement fills the cells nearest the origin first.
pub fn lp_floor_optimum(n: i64) -> Ratio<i128> {
    let n = i128::from(n);
    let s = Ratio::new(n, 4);
    let b = Ratio::new(n * n * n, 24);
    // moment of the greedy fill at cap s/k is (s/k) * sum_{j<k} j^2
    let p = |k: i128| (k - 1) * k * (2 * k - 1) / 6;
    let mut k = 1;
    while k < n && s / (k + 1) * p(k + 1) <= b {
        k += 1;
    }
    if k == n {
        return s / n;
    }
    // on [s/(k+1), s/k]: k full cells plus the remainder in cell k+1
    (s * k * k - b) / (k * k * k - p(k))
}

pub fn bin() -> PathBuf {
    PathBuf::from(env!("CARGO_BIN_EXE_minoverlap"))
}

/// Random step function on a uniform grid of `pieces` cells (even) with
/// values in multiples of `1/denom`, adjusted to unit mass.
pub fn random_step(rng: &mut impl rand::Rng, pieces: usize, denom: i64) -> StepFunction {
    assert!(pieces.is_multiple_of(2) && pieces > 0);
    let p = pieces as i64;
    let mut k: Vec<i64> = (0..pieces).map(|_| rng.gen_range(0..=denom)).collect();
    let target = p * denom / 2;
    let mut sum: i64 = k.iter().sum();
    while sum != target {
        let i = rng.gen_range(0..pieces);
        if sum > target && k[i] > 0 {
            k[i] -= 1;
            sum -= 1;
        } else if sum < target && k[i] < denom {
            k[i] += 1;
            sum += 1;
        }
    }
    let breaks = (0..=p).map(|i| Ratio::new(2 * i - p, p)).collect();
    let values = k.into_iter().map(|x| Ratio::new(x, denom)).collect();
    StepFunction::new("random", breaks, values).unwrap()
}
