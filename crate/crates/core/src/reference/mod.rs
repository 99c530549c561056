//! Event-driven reference solvers: the switching method for the 1-DoF
//! rigid-contact oscillator and the root-shooting method for the 2-DoF
//! spring-contact system.
//!
//! Each motion regime (stick, slip with a fixed sliding direction,
//! separation) is integrated as a smooth ODE with an adaptive
//! Dormand-Prince pair; regime boundaries are located by bisecting the event
//! function over the last accepted step, restarting the integration from the
//! event state. These trajectories are the ground truth the time-stepping
//! and PINN methods are judged against.

pub mod rk45;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::contact::{MechModel, Regime, SystemState};
use crate::error::{FricdynError, Result};
use crate::stepping::Trajectory;
use rk45::Dopri5;

/// Regime transition taxonomy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EventKind {
    StickToSlip,
    SlipToStick,
    Separation,
    Reattachment,
}

impl EventKind {
    pub fn label(&self) -> &'static str {
        match self {
            EventKind::StickToSlip => "stick_to_slip",
            EventKind::SlipToStick => "slip_to_stick",
            EventKind::Separation => "separation",
            EventKind::Reattachment => "reattachment",
        }
    }
}

/// A located regime transition.
#[derive(Debug, Clone, Copy)]
pub struct EventRecord {
    pub t: f64,
    pub kind: EventKind,
    /// Width of the final bisection bracket.
    pub bracket: f64,
}

/// Writes the events CSV (`t_event,kind`).
pub fn write_events_csv(events: &[EventRecord], path: &std::path::Path) -> Result<()> {
    use std::io::Write as _;
    let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(out, "t_event,kind")?;
    for e in events {
        writeln!(out, "{:.12e},{}", e.t, e.kind.label())?;
    }
    Ok(())
}

struct BranchEnd {
    t: f64,
    y: DVector<f64>,
    /// (event index, bracket width); `None` when `t_stop` was reached.
    event: Option<(usize, f64)>,
}

/// Integrates one smooth branch until an event function crosses from
/// positive to nonpositive, recording samples at the uniform grid points.
#[allow(clippy::too_many_arguments)]
fn integrate_branch(
    solver: &Dopri5,
    rhs: &dyn Fn(f64, &DVector<f64>) -> DVector<f64>,
    events: &[&dyn Fn(f64, &DVector<f64>) -> f64],
    t0: f64,
    y0: DVector<f64>,
    t_stop: f64,
    event_tol: f64,
    sample_dt: f64,
    next_sample: &mut f64,
    samples: &mut Vec<(f64, DVector<f64>)>,
) -> Result<BranchEnd> {
    let mut t = t0;
    let mut y = y0;
    let mut h = sample_dt.min(1e-3);
    let tiny = 1e-13 * (1.0 + t_stop.abs());

    // An event only fires after it has been seen strictly positive: regime
    // handoffs legitimately start exactly on their own boundary (a fresh slip
    // branch begins at zero relative velocity).
    let mut armed: Vec<bool> = events.iter().map(|ev| ev(t, &y) > 0.0).collect();

    let mut rejected_in_a_row = 0;
    loop {
        if t >= t_stop - tiny {
            return Ok(BranchEnd { t, y, event: None });
        }
        let mut h_clip = h.min(t_stop - t);
        if *next_sample - t > tiny {
            h_clip = h_clip.min(*next_sample - t);
        }
        let (y_new, err) = solver.step(rhs, t, &y, h_clip);
        if err > 1.0 {
            h = h_clip * Dopri5::scale(err);
            rejected_in_a_row += 1;
            if rejected_in_a_row > 60 {
                return Err(FricdynError::EventBracketing(t));
            }
            continue;
        }
        rejected_in_a_row = 0;

        // earliest event over the accepted interval, located by bisection
        let mut hit: Option<(usize, f64, f64)> = None; // (idx, lo, hi)
        for (idx, ev) in events.iter().enumerate() {
            let e_end = ev(t + h_clip, &y_new);
            if !armed[idx] {
                if e_end > 0.0 {
                    armed[idx] = true;
                }
                continue;
            }
            if e_end <= 0.0 {
                let mut lo = 0.0_f64;
                let mut hi = h_clip;
                for _ in 0..200 {
                    if hi - lo <= event_tol {
                        break;
                    }
                    let mid = 0.5 * (lo + hi);
                    let (ym, _) = solver.step(rhs, t, &y, mid);
                    if ev(t + mid, &ym) > 0.0 {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                if hit.as_ref().map_or(true, |(_, _, best_hi)| hi < *best_hi) {
                    hit = Some((idx, lo, hi));
                }
            }
        }
        if let Some((idx, lo, hi)) = hit {
            let (y_star, _) = solver.step(rhs, t, &y, hi);
            return Ok(BranchEnd {
                t: t + hi,
                y: y_star,
                event: Some((idx, hi - lo)),
            });
        }

        t += h_clip;
        y = y_new;
        if (t - *next_sample).abs() <= 1e-9 * (1.0 + t.abs()) {
            samples.push((t, y.clone()));
            *next_sample += sample_dt;
        }
        h = (h_clip * Dopri5::scale(err)).min(0.5);
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Mode {
    Stick,
    Slip(f64),
    Separated,
}

impl Mode {
    fn regime(&self) -> Regime {
        match self {
            Mode::Stick => Regime::Stick,
            Mode::Slip(_) => Regime::Slip,
            Mode::Separated => Regime::Separated,
        }
    }
}

/// Ground truth for the 1-DoF slider-belt model with prescribed compression.
///
/// Stick-to-slip fires when the balancing friction force reaches the static
/// cone; slip-to-stick when the relative velocity crosses zero with a
/// sustainable stick force (an unsustainable crossing reverses the sliding
/// direction instead). Trajectory samples lie on the uniform `sample_dt`
/// grid; event times are located to `event_tol`.
pub fn switching_simulate_1dof(
    model: &MechModel,
    initial: &SystemState,
    t_end: f64,
    event_tol: f64,
    sample_dt: f64,
) -> Result<(Trajectory, Vec<EventRecord>)> {
    let Some(prescribed) = model.prescribed_normal() else {
        return Err(FricdynError::InvalidModel(
            "switching oracle requires the prescribed-normal 1-DoF model".into(),
        ));
    };
    if model.n_dof() != 1 || model.n_contacts() != 1 {
        return Err(FricdynError::InvalidModel(
            "switching oracle requires 1 DoF and 1 contact".into(),
        ));
    }
    let k = model.stiffness()[(0, 0)];
    let c = model.damping()[(0, 0)];
    let m = model.mass()[(0, 0)];
    let f_n = prescribed[0];
    let v0 = model.belt_speed(0);
    let law = model.friction()[0];
    let mu_s = law.static_coefficient();
    let stick_budget = mu_s * f_n;
    let margin = 1e-12 * (1.0 + stick_budget);

    let stick_force = |x: f64| k * x + c * v0;
    let sustainable = |x: f64| stick_force(x).abs() <= stick_budget - margin;

    let solver = Dopri5 {
        rtol: 1e-10,
        atol: 1e-12,
    };

    let mut t = initial.t;
    let mut y = DVector::from_column_slice(&[initial.q[0], initial.u[0]]);
    let gamma0 = initial.u[0] - v0;
    let mut mode = if gamma0.abs() <= 1e-12 * (1.0 + v0.abs()) && sustainable(y[0]) {
        y[1] = v0;
        Mode::Stick
    } else if gamma0.abs() > 1e-12 * (1.0 + v0.abs()) {
        Mode::Slip(gamma0.signum())
    } else {
        Mode::Slip(-stick_force(y[0]).signum())
    };

    let make_state = |t: f64, y: &DVector<f64>, mode: Mode| -> SystemState {
        let gamma = y[1] - v0;
        let lambda_t = match mode {
            Mode::Stick => stick_force(y[0]),
            Mode::Slip(dir) => -dir * law.coefficient(gamma) * f_n,
            Mode::Separated => 0.0,
        };
        SystemState {
            t,
            q: DVector::from_element(1, y[0]),
            u: DVector::from_element(1, y[1]),
            lambda_n: DVector::from_element(1, f_n),
            lambda_t: DVector::from_element(1, lambda_t),
            g_n: DVector::zeros(1),
            gamma_t: DVector::from_element(1, gamma),
            regime: vec![mode.regime()],
        }
    };

    let mut events_out = Vec::new();
    let mut raw: Vec<(f64, DVector<f64>, Mode)> = vec![(t, y.clone(), mode)];
    let mut next_sample = t + sample_dt;
    let mut guard = 0usize;

    while t < t_end - 1e-12 {
        guard += 1;
        if guard > 1_000_000 {
            return Err(FricdynError::EventBracketing(t));
        }
        let mut buf = Vec::new();
        let end = match mode {
            Mode::Stick => {
                let rhs = |_t: f64, y: &DVector<f64>| DVector::from_column_slice(&[y[1], 0.0]);
                let ev_break =
                    |_t: f64, y: &DVector<f64>| stick_budget - stick_force(y[0]).abs();
                integrate_branch(
                    &solver,
                    &rhs,
                    &[&ev_break],
                    t,
                    y.clone(),
                    t_end,
                    event_tol,
                    sample_dt,
                    &mut next_sample,
                    &mut buf,
                )?
            }
            Mode::Slip(dir) => {
                let rhs = |_t: f64, y: &DVector<f64>| {
                    let gamma = y[1] - v0;
                    let lambda_t = -dir * law.coefficient(gamma) * f_n;
                    DVector::from_column_slice(&[y[1], (-k * y[0] - c * y[1] + lambda_t) / m])
                };
                let ev_cross = |_t: f64, y: &DVector<f64>| dir * (y[1] - v0);
                integrate_branch(
                    &solver,
                    &rhs,
                    &[&ev_cross],
                    t,
                    y.clone(),
                    t_end,
                    event_tol,
                    sample_dt,
                    &mut next_sample,
                    &mut buf,
                )?
            }
            Mode::Separated => unreachable!("rigid 1-DoF contact never separates"),
        };
        for (ts, ys) in buf {
            raw.push((ts, ys, mode));
        }
        t = end.t;
        y = end.y;
        if let Some((_, bracket)) = end.event {
            match mode {
                Mode::Stick => {
                    let dir = -stick_force(y[0]).signum();
                    events_out.push(EventRecord {
                        t,
                        kind: EventKind::StickToSlip,
                        bracket,
                    });
                    mode = Mode::Slip(dir);
                }
                Mode::Slip(dir) => {
                    if sustainable(y[0]) {
                        y[1] = v0; // snap onto the constraint
                        events_out.push(EventRecord {
                            t,
                            kind: EventKind::SlipToStick,
                            bracket,
                        });
                        mode = Mode::Stick;
                    } else {
                        mode = Mode::Slip(-dir);
                    }
                }
                Mode::Separated => unreachable!(),
            }
        }
    }

    let states: Vec<SystemState> = raw
        .iter()
        .map(|(ts, ys, ms)| make_state(*ts, ys, *ms))
        .collect();
    let times: Vec<f64> = raw.iter().map(|(ts, _, _)| *ts).collect();
    let n = states.len();
    Ok((
        Trajectory {
            times,
            states,
            method_tag: "switching".to_string(),
            dt: sample_dt,
            comp_residuals: vec![0.0; n.saturating_sub(1)],
        },
        events_out,
    ))
}

/// Ground truth for the 2-DoF spring-contact model: three regimes (stick,
/// slip, separated) with separation at vanishing contact force and
/// velocity-continuous reattachment when the gap closes.
pub fn root_shooting_simulate_2dof(
    model: &MechModel,
    initial: &SystemState,
    t_end: f64,
    event_tol: f64,
    sample_dt: f64,
) -> Result<(Trajectory, Vec<EventRecord>)> {
    use crate::contact::ContactKind;
    if model.contact_kind() != ContactKind::Spring || model.n_dof() != 2 || model.n_contacts() != 1
    {
        return Err(FricdynError::InvalidModel(
            "root-shooting oracle requires the 2-DoF spring-contact model".into(),
        ));
    }
    let kc = model.k_contact()[0];
    let v0 = model.belt_speed(0);
    let law = model.friction()[0];
    let mu_s = law.static_coefficient();
    let w_n = DVector::from(model.w_n().column(0));
    let w_t = DVector::from(model.w_t().column(0));
    let g_tt = (w_t.transpose() * model.mass_inv() * &w_t)[(0, 0)];

    // y = [q1, q2, u1, u2]
    let split = |y: &DVector<f64>| -> (DVector<f64>, DVector<f64>) {
        (
            DVector::from_column_slice(&[y[0], y[1]]),
            DVector::from_column_slice(&[y[2], y[3]]),
        )
    };
    let gap_of = |y: &DVector<f64>| w_n[0] * y[0] + w_n[1] * y[1];
    let gamma_of = |y: &DVector<f64>| w_t[0] * y[2] + w_t[1] * y[3] - v0;
    let lambda_n_of = |y: &DVector<f64>| (-kc * gap_of(y)).max(0.0);

    // balancing tangential force that nulls the relative tangential
    // acceleration under contact force lam_n
    let stick_force = |y: &DVector<f64>, lam_n: f64| -> f64 {
        let (q, u) = split(y);
        let h = model.h_vector(&q, &u);
        let rhs = model.mass_inv() * (h + &w_n * lam_n);
        -(w_t[0] * rhs[0] + w_t[1] * rhs[1]) / g_tt
    };

    let accel = |y: &DVector<f64>, lam_n: f64, lam_t: f64| -> DVector<f64> {
        let (q, u) = split(y);
        let h = model.h_vector(&q, &u);
        model.mass_inv() * (h + &w_n * lam_n + &w_t * lam_t)
    };

    let solver = Dopri5 {
        rtol: 1e-10,
        atol: 1e-12,
    };

    let mut t = initial.t;
    let mut y =
        DVector::from_column_slice(&[initial.q[0], initial.q[1], initial.u[0], initial.u[1]]);

    let enter_contact_mode = |y: &mut DVector<f64>| -> Mode {
        let lam_n = lambda_n_of(y);
        let gamma = gamma_of(y);
        let margin = 1e-12 * (1.0 + mu_s * lam_n);
        if gamma.abs() <= 1e-12 * (1.0 + v0.abs())
            && stick_force(y, lam_n).abs() <= mu_s * lam_n - margin
        {
            y[2] = v0;
            Mode::Stick
        } else if gamma.abs() > 1e-12 * (1.0 + v0.abs()) {
            Mode::Slip(gamma.signum())
        } else {
            Mode::Slip(-stick_force(y, lam_n).signum())
        }
    };

    let mut mode = if gap_of(&y) > 0.0 {
        Mode::Separated
    } else {
        enter_contact_mode(&mut y)
    };

    let make_state = |t: f64, y: &DVector<f64>, mode: Mode| -> SystemState {
        let (q, u) = split(y);
        let gamma = gamma_of(y);
        let (lam_n, lam_t) = match mode {
            Mode::Separated => (0.0, 0.0),
            Mode::Slip(dir) => {
                let ln = lambda_n_of(y);
                (ln, -dir * law.coefficient(gamma) * ln)
            }
            Mode::Stick => {
                let ln = lambda_n_of(y);
                (ln, stick_force(y, ln))
            }
        };
        SystemState {
            t,
            g_n: DVector::from_element(1, gap_of(y)),
            gamma_t: DVector::from_element(1, gamma),
            lambda_n: DVector::from_element(1, lam_n),
            lambda_t: DVector::from_element(1, lam_t),
            regime: vec![mode.regime()],
            q,
            u,
        }
    };

    let mut events_out = Vec::new();
    let mut raw: Vec<(f64, DVector<f64>, Mode)> = vec![(t, y.clone(), mode)];
    let mut next_sample = t + sample_dt;
    let mut guard = 0usize;

    while t < t_end - 1e-12 {
        guard += 1;
        if guard > 1_000_000 {
            return Err(FricdynError::EventBracketing(t));
        }
        let mut buf = Vec::new();
        let end = match mode {
            Mode::Separated => {
                let rhs = |_t: f64, y: &DVector<f64>| {
                    let a = accel(y, 0.0, 0.0);
                    DVector::from_column_slice(&[y[2], y[3], a[0], a[1]])
                };
                let ev_touch = |_t: f64, y: &DVector<f64>| gap_of(y);
                integrate_branch(
                    &solver,
                    &rhs,
                    &[&ev_touch],
                    t,
                    y.clone(),
                    t_end,
                    event_tol,
                    sample_dt,
                    &mut next_sample,
                    &mut buf,
                )?
            }
            Mode::Slip(dir) => {
                let rhs = |_t: f64, y: &DVector<f64>| {
                    let ln = lambda_n_of(y);
                    let lt = -dir * law.coefficient(gamma_of(y)) * ln;
                    let a = accel(y, ln, lt);
                    DVector::from_column_slice(&[y[2], y[3], a[0], a[1]])
                };
                let ev_sep = |_t: f64, y: &DVector<f64>| -gap_of(y);
                let ev_cross = |_t: f64, y: &DVector<f64>| dir * gamma_of(y);
                integrate_branch(
                    &solver,
                    &rhs,
                    &[&ev_sep, &ev_cross],
                    t,
                    y.clone(),
                    t_end,
                    event_tol,
                    sample_dt,
                    &mut next_sample,
                    &mut buf,
                )?
            }
            Mode::Stick => {
                let rhs = |_t: f64, y: &DVector<f64>| {
                    let ln = lambda_n_of(y);
                    let lt = stick_force(y, ln);
                    let a = accel(y, ln, lt);
                    DVector::from_column_slice(&[y[2], y[3], a[0], a[1]])
                };
                let ev_sep = |_t: f64, y: &DVector<f64>| -gap_of(y);
                let ev_break = |_t: f64, y: &DVector<f64>| {
                    let ln = lambda_n_of(y);
                    mu_s * ln - stick_force(y, ln).abs()
                };
                integrate_branch(
                    &solver,
                    &rhs,
                    &[&ev_sep, &ev_break],
                    t,
                    y.clone(),
                    t_end,
                    event_tol,
                    sample_dt,
                    &mut next_sample,
                    &mut buf,
                )?
            }
        };
        for (ts, ys) in buf {
            raw.push((ts, ys, mode));
        }
        t = end.t;
        y = end.y;
        if let Some((idx, bracket)) = end.event {
            match mode {
                Mode::Separated => {
                    events_out.push(EventRecord {
                        t,
                        kind: EventKind::Reattachment,
                        bracket,
                    });
                    mode = enter_contact_mode(&mut y);
                }
                Mode::Slip(dir) => {
                    if idx == 0 {
                        events_out.push(EventRecord {
                            t,
                            kind: EventKind::Separation,
                            bracket,
                        });
                        mode = Mode::Separated;
                    } else {
                        let lam_n = lambda_n_of(&y);
                        let margin = 1e-12 * (1.0 + mu_s * lam_n);
                        if stick_force(&y, lam_n).abs() <= mu_s * lam_n - margin {
                            y[2] = v0;
                            events_out.push(EventRecord {
                                t,
                                kind: EventKind::SlipToStick,
                                bracket,
                            });
                            mode = Mode::Stick;
                        } else {
                            mode = Mode::Slip(-dir);
                        }
                    }
                }
                Mode::Stick => {
                    if idx == 0 {
                        events_out.push(EventRecord {
                            t,
                            kind: EventKind::Separation,
                            bracket,
                        });
                        mode = Mode::Separated;
                    } else {
                        let lam_n = lambda_n_of(&y);
                        let dir = -stick_force(&y, lam_n).signum();
                        events_out.push(EventRecord {
                            t,
                            kind: EventKind::StickToSlip,
                            bracket,
                        });
                        mode = Mode::Slip(dir);
                    }
                }
            }
        }
    }

    let states: Vec<SystemState> = raw
        .iter()
        .map(|(ts, ys, ms)| make_state(*ts, ys, *ms))
        .collect();
    let times: Vec<f64> = raw.iter().map(|(ts, _, _)| *ts).collect();
    let n = states.len();
    Ok((
        Trajectory {
            times,
            states,
            method_tag: "root_shooting".to_string(),
            dt: sample_dt,
            comp_residuals: vec![0.0; n.saturating_sub(1)],
        },
        events_out,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::contact::{model_i, model_ii, FrictionLaw, ModelIParams, ModelIiParams};

    fn model1(delta: f64) -> MechModel {
        // fat stick segments: see the acceptance experiments
        model_i(&ModelIParams {
            friction: FrictionLaw::rational(0.1, delta),
            normal_force: 5.0,
            belt_speed: 0.5,
            ..ModelIParams::default()
        })
        .unwrap()
    }

    fn start1(m: &MechModel) -> SystemState {
        SystemState::initial(
            m,
            DVector::from_element(1, 0.0),
            DVector::from_element(1, 0.5),
        )
        .unwrap()
    }

    #[test]
    fn starts_in_stick_until_the_cone_is_reached() {
        let m = model1(1.0);
        let (traj, events) = switching_simulate_1dof(&m, &start1(&m), 2.0, 1e-10, 0.01).unwrap();
        // stick until k x = mu_s F_n = 0.5, i.e. t = 0.5 / v0 = 1.0
        assert_eq!(events[0].kind, EventKind::StickToSlip);
        assert!((events[0].t - 1.0).abs() < 1e-8, "t = {}", events[0].t);
        for s in &traj.states {
            if s.t < 0.999 {
                assert_eq!(s.regime[0], Regime::Stick);
                assert!((s.u[0] - 0.5).abs() <= 1e-10);
            }
        }
    }

    #[test]
    fn slow_law_settles_into_a_stick_slip_cycle() {
        let m = model1(1.0);
        let (traj, events) = switching_simulate_1dof(&m, &start1(&m), 40.0, 1e-10, 0.01).unwrap();
        let kinds: Vec<EventKind> = events.iter().map(|e| e.kind).collect();
        assert!(kinds.contains(&EventKind::StickToSlip));
        assert!(kinds.contains(&EventKind::SlipToStick));
        for w in events.windows(2) {
            assert!(w[1].t > w[0].t);
            assert_ne!(w[1].kind, w[0].kind);
        }
        for s in &traj.states {
            if s.regime[0] == Regime::Stick {
                assert!((s.u[0] - 0.5).abs() <= 1e-10);
            }
        }
        for e in &events {
            assert!(e.bracket <= 1e-10);
        }
    }

    #[test]
    fn oracle_self_convergence() {
        let m = model1(1.0);
        let run = |etol: f64| {
            let (traj, _) = switching_simulate_1dof(&m, &start1(&m), 15.0, etol, 0.01).unwrap();
            traj
        };
        let a = run(1e-10);
        let b = run(5e-11);
        assert_eq!(a.len(), b.len());
        let mut num = 0.0;
        let mut den = 0.0;
        for (sa, sb) in a.states.iter().zip(b.states.iter()) {
            num += (sa.q[0] - sb.q[0]).powi(2);
            den += sb.q[0].powi(2);
        }
        assert!((num / den).sqrt() < 1e-6);
    }

    #[test]
    fn two_dof_low_friction_bounces_without_stick() {
        let m = model_ii(&ModelIiParams {
            friction: FrictionLaw::Constant { mu: 0.4 },
            ..ModelIiParams::default()
        })
        .unwrap();
        let init = SystemState::initial(
            &m,
            DVector::from_column_slice(&[-10.0, -10.0]),
            DVector::from_column_slice(&[1.0, 1.0]),
        )
        .unwrap();
        let (traj, events) = root_shooting_simulate_2dof(&m, &init, 10.0, 1e-10, 1e-3).unwrap();
        let kinds: Vec<EventKind> = events.iter().map(|e| e.kind).collect();
        assert!(kinds.contains(&EventKind::Separation));
        assert!(kinds.contains(&EventKind::Reattachment));
        let any_contact = traj.states.iter().any(|s| s.lambda_n[0] > 1.0);
        let any_free = traj.states.iter().any(|s| s.lambda_n[0] == 0.0);
        assert!(any_contact && any_free);
        // slip and separation dominate; stick is a minority incident here
        let n_stick = traj
            .states
            .iter()
            .filter(|s| s.regime[0] == Regime::Stick)
            .count();
        assert!(n_stick * 4 < traj.len(), "stick fraction too high: {n_stick}");
        for s in &traj.states {
            if s.regime[0] == Regime::Separated {
                assert!(s.g_n[0] > -1e-9);
                assert_eq!(s.lambda_n[0], 0.0);
            }
        }
    }

    #[test]
    fn two_dof_high_friction_shows_stick_and_separation() {
        let m = model_ii(&ModelIiParams {
            friction: FrictionLaw::Constant { mu: 1.2 },
            ..ModelIiParams::default()
        })
        .unwrap();
        let init = SystemState::initial(
            &m,
            DVector::from_column_slice(&[-1.0, -1.0]),
            DVector::from_column_slice(&[1.0, 1.0]),
        )
        .unwrap();
        let (traj, events) = root_shooting_simulate_2dof(&m, &init, 10.0, 1e-10, 1e-3).unwrap();
        let kinds: Vec<EventKind> = events.iter().map(|e| e.kind).collect();
        assert!(kinds.contains(&EventKind::Separation), "{kinds:?}");
        assert!(kinds.contains(&EventKind::SlipToStick), "{kinds:?}");
        for s in &traj.states {
            if s.regime[0] == Regime::Stick {
                assert!((s.u[0] - 1.0).abs() <= 1e-10);
            }
        }
    }
}
