//! Five hand-checked steps with five users and comfort level three.
//!
//! Decisions are forced so the revision stage can be replayed exactly. The
//! fixture reproduces the situations of the classic worked example: a user
//! who ignores a good GO gains trust, a near-zero user who ignores a STAY is
//! clamped at zero, and a user who goes against a STAY into an uncrowded bar
//! loses trust. Attendance never equals the comfort level, so both engine
//! rule sets must agree.

use trustdyn::engine::SimulationState;
use trustdyn::model::{Action, Dynamics, Quality, SimParams};

use Action::{Go as G, Stay as S};

/// Recommendations, decisions, attendance and trust after the step.
type Step = ([Action; 5], [Action; 5], usize, [f64; 5]);

const STEPS: [Step; 5] = [
    ([G, G, S, S, G], [S, G, G, S, S], 2, [0.45, 0.75, 0.00, 0.50, 0.15]),
    ([S, G, G, S, G], [S, G, S, S, S], 1, [0.40, 0.80, 0.05, 0.45, 0.20]),
    ([G, S, S, G, G], [G, S, G, S, S], 2, [0.45, 0.75, 0.00, 0.50, 0.25]),
    ([G, G, G, S, S], [G, S, S, S, G], 2, [0.50, 0.80, 0.05, 0.45, 0.20]),
    ([G, G, S, G, S], [G, G, S, S, S], 2, [0.55, 0.85, 0.00, 0.50, 0.15]),
];

const INITIAL: [f64; 5] = [0.40, 0.70, 0.02, 0.55, 0.10];

fn replay(dynamics: Dynamics) {
    let params = SimParams::new(5, 3, 0.05, 0.05).with_dynamics(dynamics);
    let mut state = SimulationState::from_trusts(&params, &INITIAL).unwrap();
    let mut avg = state.avg_trust();
    for (t, (recs, decs, attendance, expected)) in STEPS.iter().enumerate() {
        let d = state.step_with_decisions(recs, decs).unwrap();
        assert_eq!(d.stats.t, t + 1);
        assert_eq!(d.stats.attendance, *attendance, "t={}", t + 1);
        for (i, (got, want)) in state.trusts().iter().zip(expected).enumerate() {
            assert!((got - want).abs() < 1e-12, "t={} a_{}: {got} != {want}", t + 1, i + 1);
        }
        assert!(d.stats.avg_trust > avg, "average trust must rise at t={}", t + 1);
        avg = d.stats.avg_trust;
    }
    let a5 = &state.users[4];
    assert_eq!(a5.last_recommendation, Some(S));
    assert_eq!(a5.last_decision, Some(S));
}

#[test]
fn replay_with_default_dynamics() {
    replay(Dynamics::default());
}

#[test]
fn replay_with_strict_dynamics() {
    replay(Dynamics::STRICT);
}

#[test]
fn first_step_details() {
    let params = SimParams::new(5, 3, 0.05, 0.05);
    let mut state = SimulationState::from_trusts(&params, &INITIAL).unwrap();
    let d = state.step_with_decisions(&STEPS[0].0, &STEPS[0].1).unwrap();
    // a_1: told GO, stayed home, bar not crowded: good.
    assert_eq!(d.qualities[0], Quality::Good);
    assert!((state.users[0].trust() - 0.45).abs() < 1e-12);
    // a_3: told STAY, went anyway, bar not crowded: bad, clamped at zero.
    assert_eq!(d.qualities[2], Quality::Bad);
    assert_eq!(state.users[2].trust(), 0.0);
}

#[test]
fn crowded_step_flips_the_groups() {
    let params = SimParams::new(5, 3, 0.05, 0.05);
    let mut state = SimulationState::from_trusts(&params, &[0.55, 0.85, 0.0, 0.5, 0.15]).unwrap();
    let d = state
        .step_with_decisions(&[S, G, S, G, G], &[G, G, G, G, S])
        .unwrap();
    assert_eq!(d.stats.attendance, 4);
    assert_eq!(
        d.qualities,
        vec![Quality::Good, Quality::Bad, Quality::Good, Quality::Bad, Quality::Bad]
    );
    let want = [0.60, 0.80, 0.05, 0.45, 0.10];
    for (got, want) in state.trusts().iter().zip(want) {
        assert!((got - want).abs() < 1e-12);
    }
}

#[test]
fn step_with_draws_applies_the_decision_rule() {
    let params = SimParams::new(5, 3, 0.05, 0.05);
    let mut state = SimulationState::from_trusts(&params, &INITIAL).unwrap();
    // Draw 0.5 accepts iff trust > 0.5: only a_2 (0.70) and a_4 (0.55) follow.
    let d = state.step_with_draws(&[G, G, S, S, G], &[0.5; 5]).unwrap();
    assert_eq!(d.decisions, vec![S, G, G, S, S]);
    assert_eq!(d.stats.attendance, 2);
}
