//! Fitting growth exponents to timing sweeps.

/// Ordinary least-squares slope of `ys` against `xs`.
///
/// Returns NaN with fewer than two points or no spread in `xs`.
pub fn least_squares_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len().min(ys.len());
    if n < 2 {
        return f64::NAN;
    }
    let mx = xs[..n].iter().sum::<f64>() / n as f64;
    let my = ys[..n].iter().sum::<f64>() / n as f64;
    let sxy: f64 = xs[..n].iter().zip(&ys[..n]).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs[..n].iter().map(|x| (x - mx) * (x - mx)).sum();
    if sxx == 0.0 {
        return f64::NAN;
    }
    sxy / sxx
}

/// Slope of `log2 T` against `log2 n`: the polynomial degree.
pub fn loglog_slope(ns: &[usize], times: &[f64]) -> f64 {
    let xs: Vec<f64> = ns.iter().map(|&n| (n as f64).log2()).collect();
    let ys: Vec<f64> = times.iter().map(|t| t.log2()).collect();
    least_squares_slope(&xs, &ys)
}

/// Slope of `log2 T` against `n`: the base-2 exponential rate.
pub fn semilog_slope(ns: &[usize], times: &[f64]) -> f64 {
    let xs: Vec<f64> = ns.iter().map(|&n| n as f64).collect();
    let ys: Vec<f64> = times.iter().map(|t| t.log2()).collect();
    least_squares_slope(&xs, &ys)
}
