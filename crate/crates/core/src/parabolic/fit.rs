use crate::error::{Error, Result};
use crate::numeric::linear_fit;

/// Errors inside this window enter the fit; smaller ones are roundoff, larger
/// ones are still in the transient.
pub const FIT_WINDOW: (f64, f64) = (1e-8, 1e-2);

const MIN_POINTS: usize = 5;

/// Model `err(t) ≈ a_fit · e^{-rate · t}`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ExpFit {
    pub a_fit: f64,
    pub rate: f64,
    /// Number of samples inside the window.
    pub points: usize,
}

/// Least-squares fit of `ln err` against `t`, using the samples with
/// `err ∈ FIT_WINDOW`.
pub fn exp_fit_series(ts: &[f64], errs: &[f64]) -> Result<ExpFit> {
    if ts.len() != errs.len() {
        return Err(Error::LengthMismatch { expected: ts.len(), actual: errs.len() });
    }
    let (xs, ys): (Vec<f64>, Vec<f64>) = ts
        .iter()
        .zip(errs)
        .filter(|(_, e)| **e >= FIT_WINDOW.0 && **e <= FIT_WINDOW.1)
        .map(|(t, e)| (*t, e.ln()))
        .unzip();
    if xs.len() < MIN_POINTS {
        return Err(Error::InsufficientData(format!(
            "{} samples inside [{:e}, {:e}], need {MIN_POINTS}",
            xs.len(),
            FIT_WINDOW.0,
            FIT_WINDOW.1
        )));
    }
    let (slope, intercept) = linear_fit(&xs, &ys)?;
    Ok(ExpFit { a_fit: intercept.exp(), rate: -slope, points: xs.len() })
}

/// Fit the decay of `sup |u_t - u_last|` along a trajectory of `(t, u_t)`
/// samples; the last sample stands in for the limit. Potentials are compared
/// modulo constants, each pinned to zero at its first node.
pub fn exp_convergence_fit(trajectory: &[(f64, Vec<f64>)]) -> Result<ExpFit> {
    let Some((_, last)) = trajectory.last() else {
        return Err(Error::InsufficientData("empty trajectory".into()));
    };
    let mut ts = Vec::with_capacity(trajectory.len());
    let mut errs = Vec::with_capacity(trajectory.len());
    for (t, u) in &trajectory[..trajectory.len() - 1] {
        if u.len() != last.len() {
            return Err(Error::LengthMismatch { expected: last.len(), actual: u.len() });
        }
        ts.push(*t);
        let shift = u[0] - last[0];
        errs.push(u.iter().zip(last).fold(0.0f64, |m, (a, b)| m.max((a - b - shift).abs())));
    }
    exp_fit_series(&ts, &errs)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn recovers_pure_exponential() {
        let ts: Vec<f64> = (0..200).map(|i| i as f64 * 0.05).collect();
        let errs: Vec<f64> = ts.iter().map(|t| 0.5 * (-2.0 * t).exp()).collect();
        let fit = exp_fit_series(&ts, &errs).unwrap();
        assert!((fit.rate - 2.0).abs() < 1e-6);
        assert!((fit.a_fit - 0.5).abs() < 1e-6);
    }

    #[test]
    fn trajectory_fit_uses_last_state_as_limit() {
        let traj: Vec<(f64, Vec<f64>)> =
            (0..=400).map(|i| (i as f64 * 0.05, vec![2.0 + 0.1 * i as f64, 1.0 + (-1.5 * i as f64 * 0.05).exp() + 0.1 * i as f64])).collect();
        let fit = exp_convergence_fit(&traj).unwrap();
        assert!((fit.rate - 1.5).abs() < 1e-4);
    }

    #[test]
    fn constant_series_is_insufficient() {
        let ts: Vec<f64> = (0..10).map(f64::from).collect();
        assert!(matches!(exp_fit_series(&ts, &[0.5; 10]), Err(Error::InsufficientData(_))));
    }
}
