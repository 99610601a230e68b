//! Shared oracles for integration tests.

#![allow(dead_code)]

/// 8-point Gauss-Legendre nodes and weights on [-1, 1]; exact for
/// polynomials of degree 15 and below.
const GL8: [(f64, f64); 8] = [
    (-0.960_289_856_497_536_3, 0.101_228_536_290_376_3),
    (-0.796_666_477_413_626_7, 0.222_381_034_453_374_5),
    (-0.525_532_409_916_329_0, 0.313_706_645_877_887_3),
    (-0.183_434_642_495_649_8, 0.362_683_783_378_362_0),
    (0.183_434_642_495_649_8, 0.362_683_783_378_362_0),
    (0.525_532_409_916_329_0, 0.313_706_645_877_887_3),
    (0.796_666_477_413_626_7, 0.222_381_034_453_374_5),
    (0.960_289_856_497_536_3, 0.101_228_536_290_376_3),
];

/// Single-panel 8-point Gauss-Legendre quadrature of `f` over [a, b].
pub fn gl8<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> f64 {
    let mid = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    GL8.iter().map(|&(x, w)| w * f(mid + half * x)).sum::<f64>() * half
}

/// Composite quadrature over the positive-width spans between `breaks`;
/// machine-exact for piecewise polynomials up to degree 15 on those spans.
pub fn integrate_piecewise<F: Fn(f64) -> f64>(f: &F, breaks: &[f64]) -> f64 {
    breaks
        .windows(2)
        .filter(|w| w[1] > w[0])
        .map(|w| gl8(f, w[0], w[1]))
        .sum()
}

/// Composite quadrature of `f` over [a, b] split into `panels` equal panels.
pub fn integrate_uniform<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, panels: usize) -> f64 {
    let width = (b - a) / panels as f64;
    (0..panels)
        .map(|i| gl8(f, a + i as f64 * width, a + (i + 1) as f64 * width))
        .sum()
}

/// Kolmogorov-Smirnov statistic of `draws` against the cdf values produced
/// by `cdf`; `draws` need not be sorted.
pub fn ks_statistic<F: Fn(f64) -> f64>(draws: &[f64], cdf: F) -> f64 {
    let mut sorted = draws.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = sorted.len() as f64;
    let mut worst: f64 = 0.0;
    for (i, &x) in sorted.iter().enumerate() {
        let c = cdf(x);
        let above = (i as f64 + 1.0) / n - c;
        let below = c - i as f64 / n;
        worst = worst.max(above).max(below);
    }
    worst
}
