//! Small numerical helpers shared across modules.

use crate::error::{Error, Result};

/// Deterministic pairwise (cascade) summation.
pub fn pairwise_sum(values: &[f64]) -> f64 {
    const BLOCK: usize = 32;
    if values.len() <= BLOCK {
        return values.iter().sum();
    }
    let mid = values.len() / 2;
    pairwise_sum(&values[..mid]) + pairwise_sum(&values[mid..])
}

/// Pairwise sum of `a[i] * b[i]`.
pub fn pairwise_dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let products: Vec<f64> = a.iter().zip(b).map(|(x, y)| x * y).collect();
    pairwise_sum(&products)
}

/// `log Σ exp(terms)` with a running-max shift. Entries equal to `-inf` are skipped.
pub fn log_sum_exp(terms: &[f64]) -> f64 {
    let max = terms.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    let sum: f64 = terms.iter().map(|&t| (t - max).exp()).sum();
    max + sum.ln()
}

/// Ordinary least-squares line fit; returns `(slope, intercept)`.
pub fn linear_fit(xs: &[f64], ys: &[f64]) -> Result<(f64, f64)> {
    if xs.len() != ys.len() {
        return Err(Error::LengthMismatch { expected: xs.len(), actual: ys.len() });
    }
    if xs.len() < 2 {
        return Err(Error::InsufficientData(format!("{} points for a line fit", xs.len())));
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    if sxx == 0.0 {
        return Err(Error::InsufficientData("all abscissae coincide".into()));
    }
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    Ok((slope, my - slope * mx))
}

/// Gauss–Legendre nodes and weights on [-1, 1], by Newton iteration on Pₙ.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let nf = n as f64;
    for i in 0..n.div_ceil(2) {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, x);
            dp = d;
            let step = p / d;
            x -= step;
            if step.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, x);
        if d != 0.0 {
            dp = d;
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

/// Legendre polynomial Pₙ(x) and its derivative.
pub(crate) fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    if n == 0 {
        return (1.0, 0.0);
    }
    let mut p_prev = 1.0;
    let mut p = x;
    for l in 1..n {
        let lf = l as f64;
        let next = ((2.0 * lf + 1.0) * x * p - lf * p_prev) / (lf + 1.0);
        p_prev = p;
        p = next;
    }
    let nf = n as f64;
    let d = nf * (x * p - p_prev) / (x * x - 1.0);
    (p, d)
}

/// Legendre polynomials P₀(x) ..= P_degree(x).
pub fn legendre_polynomials(degree: usize, x: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(degree + 1);
    out.push(1.0);
    if degree >= 1 {
        out.push(x);
    }
    for l in 1..degree {
        let lf = l as f64;
        out.push(((2.0 * lf + 1.0) * x * out[l] - lf * out[l - 1]) / (lf + 1.0));
    }
    out
}
