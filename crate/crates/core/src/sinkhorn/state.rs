use std::time::Instant;

use super::diagnostics::m_max;
use super::kernel::{softmin_update, Direction, KernelApplicator};
use super::Potential;
use crate::error::{Error, Result};
use crate::numeric::pairwise_dot;

/// Sup-change below which a step counts as stagnant.
pub const STAGNATION_THRESHOLD: f64 = 1e-15;

/// Consecutive stagnant steps that end a run.
pub const STAGNATION_WINDOW: usize = 5;

/// Diagnostics recorded after each step, evaluated at the new iterate.
#[derive(Clone, Debug, PartialEq)]
pub struct TraceRecord {
    pub m: usize,
    /// `F = I_μ - L_ν`.
    pub f: f64,
    /// `I_μ = Σ pᵢ uᵢ`.
    pub i_mu: f64,
    /// `L_ν = -Σ qⱼ v[u]ⱼ`.
    pub l_nu: f64,
    /// L¹ error of the plan's row sums against `p`.
    pub e_row: f64,
    /// L¹ error of the plan's column sums against `q`.
    pub e_col: f64,
    /// `sup |u_m - u_{m-1}|`.
    pub sup_change: f64,
    pub wall_time_ms: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StopReason {
    /// Marginal error reached the tolerance.
    Converged,
    /// The step budget `⌈A k log k⌉` ran out.
    ScheduleExhausted,
    /// Sup-change stayed below the stagnation threshold without reaching the tolerance.
    Stagnated,
}

impl StopReason {
    pub fn as_str(self) -> &'static str {
        match self {
            StopReason::Converged => "converged",
            StopReason::ScheduleExhausted => "schedule_exhausted",
            StopReason::Stagnated => "stagnated",
        }
    }
}

/// One trajectory `u_0, u_1, …` of the scaled iteration.
///
/// `v` always holds `v[u]` for the current `u`, so the induced plan
/// `γ = e^{-k(c + u + v)} p ⊗ q` has exact column sums `q`. The next
/// iterate `u[v]` is cached, which also yields the row error for free.
#[derive(Clone, Debug)]
pub struct SinkhornState {
    k: f64,
    m: usize,
    u: Potential,
    v: Potential,
    next_u: Potential,
    trace: Vec<TraceRecord>,
    stop_reason: Option<StopReason>,
    stagnant_steps: usize,
}

impl SinkhornState {
    pub fn new(u0: Potential, kern: &dyn KernelApplicator) -> Result<Self> {
        if u0.len() != kern.source().len() {
            return Err(Error::LengthMismatch { expected: kern.source().len(), actual: u0.len() });
        }
        let v = softmin_update(&u0, Direction::XToY, kern)?;
        let next_u = softmin_update(&v, Direction::YToX, kern)?;
        Ok(SinkhornState {
            k: kern.k(),
            m: 0,
            u: u0,
            v,
            next_u,
            trace: Vec::new(),
            stop_reason: None,
            stagnant_steps: 0,
        })
    }

    /// Start from `u ≡ 0`.
    pub fn zero(kern: &dyn KernelApplicator) -> Result<Self> {
        Self::new(Potential::zeros(kern.source().len(), kern.k())?, kern)
    }

    pub fn k(&self) -> f64 {
        self.k
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn u(&self) -> &Potential {
        &self.u
    }

    /// `v[u]` for the current `u`.
    pub fn v(&self) -> &Potential {
        &self.v
    }

    /// The next iterate `u[v[u]]`.
    pub fn next_u(&self) -> &Potential {
        &self.next_u
    }

    pub fn trace(&self) -> &[TraceRecord] {
        &self.trace
    }

    pub fn stop_reason(&self) -> Option<StopReason> {
        self.stop_reason
    }

    /// Row and column L¹ marginal errors of the current plan, from cached potentials.
    pub fn cached_marginal_errors(&self, kern: &dyn KernelApplicator) -> (f64, f64) {
        let k = self.k;
        let p = kern.source().weights();
        let terms: Vec<f64> = self
            .u
            .values()
            .iter()
            .zip(self.next_u.values())
            .zip(p)
            .map(|((u, un), p)| p * (k * (un - u)).exp_m1().abs())
            .collect();
        // The column sums are exact because v = v[u] by construction.
        (crate::numeric::pairwise_sum(&terms), 0.0)
    }

    /// One step `u ← u[v[u]]`. On error the state is left unchanged.
    pub fn step(&mut self, kern: &dyn KernelApplicator) -> Result<()> {
        let start = Instant::now();
        let u_new = self.next_u.clone();
        let v_new = softmin_update(&u_new, Direction::XToY, kern)?;
        let next = softmin_update(&v_new, Direction::YToX, kern)?;
        let sup_change = u_new.sup_distance(&self.u)?;
        let i_mu = pairwise_dot(kern.source().weights(), u_new.values());
        let l_nu = -pairwise_dot(kern.target().weights(), v_new.values());
        let f = i_mu - l_nu;
        if !f.is_finite() {
            return Err(Error::NonFinite(format!("energy at step {}", self.m + 1)));
        }
        self.u = u_new;
        self.v = v_new;
        self.next_u = next;
        self.m += 1;
        let (e_row, e_col) = self.cached_marginal_errors(kern);
        if sup_change < STAGNATION_THRESHOLD {
            self.stagnant_steps += 1;
        } else {
            self.stagnant_steps = 0;
        }
        self.trace.push(TraceRecord {
            m: self.m,
            f,
            i_mu,
            l_nu,
            e_row,
            e_col,
            sup_change,
            wall_time_ms: start.elapsed().as_secs_f64() * 1e3,
        });
        Ok(())
    }

    /// Take exactly `steps` steps.
    pub fn run_steps(&mut self, kern: &dyn KernelApplicator, steps: usize) -> Result<()> {
        for _ in 0..steps {
            self.step(kern)?;
        }
        Ok(())
    }

    /// Step until the marginal L¹ error is at most `tol`, the schedule
    /// `m_max = ⌈A k log k⌉` is exhausted, or the iteration stagnates.
    /// At least one step is always taken.
    pub fn run_until(&mut self, kern: &dyn KernelApplicator, tol: f64, a: f64) -> Result<StopReason> {
        let budget = m_max(self.k, a)?;
        self.run_with_budget(kern, tol, budget)
    }

    /// As [`SinkhornState::run_until`] with an explicit bound on the total step count `m`.
    pub fn run_with_budget(&mut self, kern: &dyn KernelApplicator, tol: f64, budget: usize) -> Result<StopReason> {
        if !(tol > 0.0) {
            return Err(Error::InvalidArgument(format!("tolerance {tol} must be positive")));
        }
        loop {
            self.step(kern)?;
            let record = self.trace.last().expect("step recorded");
            let reason = if record.e_row.max(record.e_col) <= tol {
                Some(StopReason::Converged)
            } else if self.m >= budget {
                Some(StopReason::ScheduleExhausted)
            } else if self.stagnant_steps >= STAGNATION_WINDOW {
                Some(StopReason::Stagnated)
            } else {
                None
            };
            if let Some(reason) = reason {
                self.stop_reason = Some(reason);
                return Ok(reason);
            }
        }
    }
}

/// Functional form of [`SinkhornState::step`].
pub fn sinkhorn_step(mut state: SinkhornState, kern: &dyn KernelApplicator) -> Result<SinkhornState> {
    state.step(kern)?;
    Ok(state)
}
