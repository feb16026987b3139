//! Split-step time integration.
//!
//! In the transformed frame the equation is
//! `i v_t + Δv = λ (1-bt)^{-1} |v|^{α} v` with `α = 2/N`; in the physical
//! frame the gauge factor is 1. Strang splitting alternates exact free
//! propagation with an exact pointwise substep: with
//! `G = ∫_{t0}^{t1} g(s) ds` (`g = (1-bs)^{-1}` or `1`), the substep maps
//! each value by `|z₁|^{-α} = |z₀|^{-α} + α|Im λ| G` and the phase advance
//! `-Re λ ∫ g |z|^α ds` in closed form, so the gauge singularity at `t = 1/b`
//! never limits accuracy — only the splitting error does. The step schedule
//! shrinks `dt` proportionally to `(1-bt)` toward the horizon, which is
//! uniform resolution in `-log(1-bt)`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::grid::{Field, Frame};
use crate::spectral::free_propagate;
use crate::{Error, Result};

/// Physical configuration: dimension, critical exponent, coefficient, and
/// the quadratic-phase parameter.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhysParams {
    pub dimension: usize,
    /// Critical exponent α = 2/N.
    pub alpha: f64,
    /// Complex coefficient with Im λ ≤ 0.
    pub lambda: Complex64,
    /// Quadratic-phase parameter b > 0.
    pub b: f64,
}

impl PhysParams {
    pub fn new(dimension: usize, lambda: Complex64, b: f64) -> Result<Self> {
        if !(1..=3).contains(&dimension) {
            return Err(Error::InvalidParameter(format!(
                "dimension must be 1, 2 or 3, got {dimension}"
            )));
        }
        if lambda.im > 0.0 {
            return Err(Error::InvalidParameter(format!(
                "Im lambda must be <= 0, got {}",
                lambda.im
            )));
        }
        if !(b > 0.0) || !b.is_finite() {
            return Err(Error::InvalidParameter(format!("b must be positive, got {b}")));
        }
        Ok(Self { dimension, alpha: 2.0 / dimension as f64, lambda, b })
    }

    /// Horizon of the transformed frame.
    pub fn horizon(&self) -> f64 {
        1.0 / self.b
    }
}

/// Step-size policy and snapshot request list.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepSchedule {
    /// Hard cap on the step size.
    pub dt_max: f64,
    /// Endpoint clustering factor c ∈ (0, 1]: in the transformed frame the
    /// step at time τ never exceeds c·(1-bτ)/b.
    pub endpoint_factor: f64,
    /// Final integration time (strictly below the horizon in the
    /// transformed frame).
    pub tau_end: f64,
    /// Sorted snapshot times in [0, tau_end].
    pub snapshot_times: Vec<f64>,
}

impl StepSchedule {
    pub fn new(
        dt_max: f64,
        endpoint_factor: f64,
        tau_end: f64,
        mut snapshot_times: Vec<f64>,
    ) -> Result<Self> {
        if !(dt_max > 0.0) {
            return Err(Error::InvalidParameter(format!("dt_max must be positive, got {dt_max}")));
        }
        if !(endpoint_factor > 0.0 && endpoint_factor <= 1.0) {
            return Err(Error::InvalidParameter(format!(
                "endpoint_factor must lie in (0, 1], got {endpoint_factor}"
            )));
        }
        if !(tau_end > 0.0) {
            return Err(Error::InvalidParameter(format!("tau_end must be positive, got {tau_end}")));
        }
        snapshot_times.sort_by(f64::total_cmp);
        snapshot_times.dedup();
        if snapshot_times.iter().any(|&t| t < 0.0 || t > tau_end) {
            return Err(Error::InvalidParameter(
                "snapshot times must lie in [0, tau_end]".into(),
            ));
        }
        Ok(Self { dt_max, endpoint_factor, tau_end, snapshot_times })
    }

    /// Geometric snapshot levels for a transformed-frame run: `1-bτ` sweeps
    /// from 1 down to `eps_end` with `per_decade` snapshots per decade, plus
    /// τ = 0 and the endpoint itself.
    pub fn for_horizon(
        b: f64,
        eps_end: f64,
        dt_max: f64,
        endpoint_factor: f64,
        per_decade: usize,
    ) -> Result<Self> {
        if !(eps_end > 0.0 && eps_end < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "eps_end must lie in (0, 1), got {eps_end}"
            )));
        }
        let tau_end = (1.0 - eps_end) / b;
        let decades = -eps_end.log10();
        let count = (decades * per_decade as f64).ceil() as usize;
        let mut snaps = vec![0.0];
        for i in 1..=count {
            let level = 10f64.powf(-(i as f64) / per_decade as f64);
            if level <= eps_end {
                break;
            }
            snaps.push((1.0 - level) / b);
        }
        snaps.push(tau_end);
        Self::new(dt_max, endpoint_factor, tau_end, snaps)
    }

    /// Largest admissible step at time `t`.
    pub fn max_step(&self, t: f64, b: f64, frame: Frame) -> f64 {
        match frame {
            Frame::U => self.dt_max,
            Frame::V => self.dt_max.min(self.endpoint_factor * (1.0 - b * t) / b),
        }
    }

    /// Transformed-frame schedules must stop strictly before the horizon.
    pub fn validate_for(&self, params: &PhysParams, frame: Frame) -> Result<()> {
        if frame == Frame::V && self.tau_end >= params.horizon() {
            return Err(Error::TimeRange {
                t: self.tau_end,
                range: format!("[0, 1/b) with b = {}", params.b),
            });
        }
        Ok(())
    }
}

/// Run provenance carried by trajectories and echoed into reports.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub config_hash: String,
    /// Static tag asserting the integration uses no randomness or wall-clock.
    pub determinism: String,
}

impl Default for Provenance {
    fn default() -> Self {
        Self { config_hash: String::new(), determinism: "seedless-deterministic".into() }
    }
}

/// An evolved solution curve: ordered snapshots on one grid in one frame.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub params: PhysParams,
    pub schedule: StepSchedule,
    pub snapshots: Vec<Field>,
    pub provenance: Provenance,
}

impl Trajectory {
    pub fn times(&self) -> Vec<f64> {
        self.snapshots.iter().map(|f| f.time()).collect()
    }

    pub fn frame(&self) -> Frame {
        self.snapshots[0].frame()
    }
}

/// Exact solution of the pointwise gauge ODE on `[t0, t1]`, applied at every
/// grid point. Values with `|z| = 0` map to 0 (continuity).
pub fn substep_nonlinear(field: &Field, t0: f64, t1: f64, params: &PhysParams) -> Result<Field> {
    if t1 < t0 {
        return Err(Error::TimeRange { t: t1, range: format!("[{t0}, ∞)") });
    }
    let g_int = match field.frame() {
        Frame::U => t1 - t0,
        Frame::V => {
            if t0 < 0.0 || params.b * t1 >= 1.0 {
                return Err(Error::TimeRange {
                    t: t1,
                    range: format!("[0, 1/b) with b = {}", params.b),
                });
            }
            ((1.0 - params.b * t0) / (1.0 - params.b * t1)).ln() / params.b
        }
    };
    let alpha = params.alpha;
    let lam = params.lambda;
    let im_abs = -lam.im;
    let mut out = field.clone();
    out.set_time(t1);
    if lam == Complex64::default() || g_int == 0.0 {
        return Ok(out);
    }
    for z in out.values_mut().iter_mut() {
        let r = z.norm();
        if r == 0.0 {
            continue;
        }
        let ra = r.powf(alpha);
        if im_abs == 0.0 {
            let dphi = -lam.re * ra * g_int;
            *z *= Complex64::from_polar(1.0, dphi);
        } else {
            let q = alpha * im_abs * ra * g_int; // growth - 1 ≥ 0
            let shrink = (1.0 + q).powf(-1.0 / alpha);
            let dphi = -lam.re / (alpha * im_abs) * q.ln_1p();
            *z *= Complex64::from_polar(shrink, dphi);
        }
    }
    Ok(out)
}

/// One symmetric split step: half nonlinear substep, full free propagation,
/// half nonlinear substep. Second-order accurate in `dt`.
pub fn strang_step(field: &Field, t: f64, dt: f64, params: &PhysParams) -> Result<Field> {
    let mid = t + 0.5 * dt;
    let end = t + dt;
    let s1 = substep_nonlinear(field, t, mid, params)?;
    let prop = free_propagate(&s1, dt)?;
    let mut out = substep_nonlinear(&prop, mid, end, params)?;
    out.set_time(end);
    Ok(out)
}

/// March the schedule, invoking `on_snapshot(index, field)` at every
/// requested time at or after `start_index`. `state` must already sit at the
/// appropriate time (the initial datum, or a checkpointed snapshot).
pub fn evolve_with<F>(
    mut state: Field,
    params: &PhysParams,
    schedule: &StepSchedule,
    start_index: usize,
    mut on_snapshot: F,
) -> Result<Field>
where
    F: FnMut(usize, &Field) -> Result<()>,
{
    state.check_finite("evolve initial state")?;
    let frame = state.frame();
    schedule.validate_for(params, frame)?;
    let targets = &schedule.snapshot_times;
    let mut emitted = start_index;
    let mut t = state.time();
    for (idx, &target) in targets.iter().enumerate().skip(start_index) {
        while t < target {
            let dt = schedule.max_step(t, params.b, frame).min(target - t);
            let stepped = strang_step(&state, t, dt, params)?;
            if let Err(Error::NonFinite { index, .. }) = stepped.check_finite("evolve state") {
                return Err(Error::EvolutionAborted {
                    t,
                    reason: format!("non-finite value at flat index {index} after a step"),
                    last_snapshot: emitted.saturating_sub(1),
                });
            }
            state = stepped;
            t = if target - (state.time()) <= f64::EPSILON * target.abs().max(1.0) {
                target
            } else {
                state.time()
            };
            state.set_time(t);
        }
        on_snapshot(idx, &state)?;
        emitted = idx + 1;
    }
    Ok(state)
}

/// Evolve and collect the requested snapshots into a [`Trajectory`].
/// An empty request list yields the initial snapshot only.
pub fn evolve(initial: &Field, params: &PhysParams, schedule: &StepSchedule) -> Result<Trajectory> {
    initial.check_finite("initial datum")?;
    let mut snapshots: Vec<Field> = Vec::with_capacity(schedule.snapshot_times.len().max(1));
    if schedule.snapshot_times.is_empty() {
        snapshots.push(initial.clone());
    } else {
        evolve_with(initial.clone(), params, schedule, 0, |_, f| {
            snapshots.push(f.clone());
            Ok(())
        })?;
    }
    Ok(Trajectory {
        params: *params,
        schedule: schedule.clone(),
        snapshots,
        provenance: Provenance::default(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::GridSpec;
    use crate::oracles::{gauge_ode_rk4, gaussian_free_solution, ode_closed_form};
    use std::sync::Arc;

    fn uniform(m: usize, value: Complex64, frame: Frame) -> Field {
        let g = Arc::new(GridSpec::new(1, 10.0, m).unwrap());
        Field::from_fn(g, frame, 0.0, |_| value)
    }

    fn gaussian(l: f64, m: usize, frame: Frame) -> Field {
        let g = Arc::new(GridSpec::new(1, l, m).unwrap());
        Field::from_fn(g, frame, 0.0, |x| Complex64::new((-x[0] * x[0]).exp(), 0.0))
    }

    #[test]
    fn substep_conservative_keeps_modulus_everywhere() {
        let p = PhysParams::new(1, Complex64::new(2.0, 0.0), 1.0).unwrap();
        let f = gaussian(10.0, 128, Frame::V);
        let out = substep_nonlinear(&f, 0.0, 0.4, &p).unwrap();
        for (a, b) in out.values().iter().zip(f.values()) {
            assert!((a.norm() - b.norm()).abs() < 1e-15);
        }
    }

    #[test]
    fn substep_closed_form_examples() {
        let t1 = 1.0 - (-1.0f64).exp(); // G = 1 at b = 1
        // real λ: uniform 1 → e^{-i}
        let p = PhysParams::new(1, Complex64::new(1.0, 0.0), 1.0).unwrap();
        let f = uniform(32, Complex64::new(1.0, 0.0), Frame::V);
        let out = substep_nonlinear(&f, 0.0, t1, &p).unwrap();
        let expect = Complex64::from_polar(1.0, -1.0);
        for z in out.values() {
            assert!((z - expect).norm() < 1e-14);
        }
        // λ = -i: uniform 1 → modulus 3^{-1/2}
        let p = PhysParams::new(1, Complex64::new(0.0, -1.0), 1.0).unwrap();
        let out = substep_nonlinear(&f, 0.0, t1, &p).unwrap();
        for z in out.values() {
            assert!((z.norm() - 3.0f64.powf(-0.5)).abs() < 1e-14);
            assert!(z.arg().abs() < 1e-14);
        }
    }

    #[test]
    fn substep_is_additive_in_time() {
        let p = PhysParams::new(1, Complex64::new(0.7, -0.4), 2.0).unwrap();
        let f = gaussian(10.0, 64, Frame::V);
        let ab = substep_nonlinear(&substep_nonlinear(&f, 0.0, 0.2, &p).unwrap(), 0.2, 0.4, &p).unwrap();
        let direct = substep_nonlinear(&f, 0.0, 0.4, &p).unwrap();
        let sup = ab
            .values()
            .iter()
            .zip(direct.values())
            .map(|(x, y)| (x - y).norm())
            .fold(0.0f64, f64::max);
        assert!(sup < 1e-12, "additivity defect {sup}");
    }

    #[test]
    fn substep_matches_independent_rk4() {
        let p = PhysParams::new(1, Complex64::new(0.8, -0.6), 2.0).unwrap();
        let z0 = Complex64::new(0.9, -0.2);
        let f = uniform(16, z0, Frame::V);
        let out = substep_nonlinear(&f, 0.05, 0.45, &p).unwrap();
        let rk = gauge_ode_rk4(0.05, 0.45, 60000, z0, &p);
        assert!((out.values()[0] - rk).norm() < 1e-10, "{} vs {}", out.values()[0], rk);
    }

    #[test]
    fn substep_zero_maps_to_zero_and_horizon_rejected() {
        let p = PhysParams::new(1, Complex64::new(0.0, -1.0), 2.0).unwrap();
        let f = uniform(16, Complex64::default(), Frame::V);
        let out = substep_nonlinear(&f, 0.0, 0.25, &p).unwrap();
        assert!(out.values().iter().all(|z| z.norm() == 0.0));
        assert!(substep_nonlinear(&f, 0.0, 0.5, &p).is_err());
    }

    #[test]
    fn strang_with_lambda_zero_is_free_propagation() {
        let p = PhysParams::new(1, Complex64::default(), 1.0).unwrap();
        let f = gaussian(20.0, 256, Frame::V);
        let a = strang_step(&f, 0.0, 0.05, &p).unwrap();
        let b = free_propagate(&f, 0.05).unwrap();
        assert!(a.rel_l2_distance(&b) < 1e-13);
        // zero field stays zero
        let z = Field::zeros(f.grid().clone(), Frame::V, 0.0);
        let out = strang_step(&z, 0.0, 0.05, &p).unwrap();
        assert!(out.values().iter().all(|v| v.norm() == 0.0));
    }

    #[test]
    fn strang_second_order_self_convergence() {
        // error(dt)/error(dt/2) → 4 ± 0.5 against a dt/16 reference
        let p = PhysParams::new(1, Complex64::new(0.5, -1.0), 1.0).unwrap();
        let f = gaussian(15.0, 256, Frame::V);
        let t_end = 0.3;
        let run = |dt: f64| -> Field {
            let mut state = f.clone();
            let mut t = 0.0;
            while t < t_end - 1e-12 {
                let step = dt.min(t_end - t);
                state = strang_step(&state, t, step, &p).unwrap();
                t += step;
                state.set_time(t);
            }
            state
        };
        let reference = run(0.005 / 16.0);
        let e1 = run(0.005).rel_l2_distance(&reference);
        let e2 = run(0.0025).rel_l2_distance(&reference);
        let ratio = e1 / e2;
        assert!((3.5..=4.5).contains(&ratio), "ratio {ratio}, e1 {e1}, e2 {e2}");
    }

    #[test]
    fn evolve_free_gaussian_matches_closed_form() {
        let p = PhysParams::new(1, Complex64::default(), 1.0).unwrap();
        let f = gaussian(40.0, 512, Frame::U);
        let schedule =
            StepSchedule::new(0.01, 0.1, 0.5, vec![0.25, 0.5]).unwrap();
        let traj = evolve(&f, &p, &schedule).unwrap();
        for snap in &traj.snapshots {
            let exact = gaussian_free_solution(snap.time(), snap.grid(), 1.0).unwrap();
            assert!(snap.rel_l2_distance(&exact) < 1e-8, "t = {}", snap.time());
        }
    }

    #[test]
    fn evolve_uniform_matches_ode_closed_form() {
        let p = PhysParams::new(1, Complex64::new(0.0, -1.0), 1.0).unwrap();
        let z0 = Complex64::new(1.0, 0.0);
        let f = uniform(64, z0, Frame::V);
        let schedule = StepSchedule::for_horizon(1.0, 1e-6, 1e-3, 0.1, 4).unwrap();
        let traj = evolve(&f, &p, &schedule).unwrap();
        for snap in &traj.snapshots {
            let exact = ode_closed_form(snap.time(), z0, &p).unwrap();
            for z in snap.values() {
                assert!((z - exact).norm() < 1e-10, "t = {}", snap.time());
            }
        }
    }

    #[test]
    fn evolve_empty_snapshot_list_returns_initial_only() {
        let p = PhysParams::new(1, Complex64::new(0.0, -1.0), 1.0).unwrap();
        let f = gaussian(10.0, 64, Frame::V);
        let schedule = StepSchedule::new(1e-3, 0.1, 0.5, vec![]).unwrap();
        let traj = evolve(&f, &p, &schedule).unwrap();
        assert_eq!(traj.snapshots.len(), 1);
        assert_eq!(traj.snapshots[0].time(), 0.0);
    }

    #[test]
    fn mass_monotone_for_dissipative_constant_for_conservative() {
        let f = gaussian(15.0, 256, Frame::V);
        let schedule = StepSchedule::for_horizon(1.0, 1e-3, 5e-4, 0.1, 6).unwrap();
        let p = PhysParams::new(1, Complex64::new(0.0, -1.0), 1.0).unwrap();
        let traj = evolve(&f, &p, &schedule).unwrap();
        let masses: Vec<f64> = traj.snapshots.iter().map(|s| s.l2_norm()).collect();
        for w in masses.windows(2) {
            assert!(w[1] <= w[0] + 1e-12, "mass increased: {:?}", w);
        }
        assert!(masses.last().unwrap() < &masses[0]);
        let p = PhysParams::new(1, Complex64::new(1.0, 0.0), 1.0).unwrap();
        let traj = evolve(&f, &p, &schedule).unwrap();
        let m0 = traj.snapshots[0].l2_norm();
        for s in &traj.snapshots {
            assert!((s.l2_norm() - m0).abs() / m0 < 1e-8);
        }
    }

    #[test]
    fn schedule_respects_endpoint_clustering() {
        let s = StepSchedule::new(1.0, 0.25, 0.99, vec![]).unwrap();
        let b = 1.0;
        for tau in [0.0, 0.5, 0.9, 0.99] {
            let dt = s.max_step(tau, b, Frame::V);
            assert!(dt <= 0.25 * (1.0 - b * tau) / b + 1e-18, "tau = {tau}");
        }
        assert_eq!(s.max_step(0.5, b, Frame::U), 1.0);
    }

    #[test]
    fn schedule_rejects_horizon_overrun() {
        let p = PhysParams::new(1, Complex64::new(0.0, -1.0), 2.0).unwrap();
        let s = StepSchedule::new(1e-3, 0.1, 0.6, vec![]).unwrap();
        assert!(s.validate_for(&p, Frame::V).is_err());
        assert!(s.validate_for(&p, Frame::U).is_ok());
    }

    #[test]
    fn params_reject_bad_inputs() {
        assert!(PhysParams::new(1, Complex64::new(0.0, 0.1), 1.0).is_err());
        assert!(PhysParams::new(1, Complex64::new(0.0, -1.0), 0.0).is_err());
        assert!(PhysParams::new(4, Complex64::new(0.0, -1.0), 1.0).is_err());
        let p = PhysParams::new(2, Complex64::new(0.0, -1.0), 3.0).unwrap();
        assert_eq!(p.alpha, 1.0);
        assert_eq!(p.alpha * p.dimension as f64, 2.0);
    }
}
