//! The three-stage loop: recommend, decide, revise.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{
    compute_attendance, decide, issue_recommendations_into, Action, InitialTrust, Quality,
    SimParams, TrustCap, UserState,
};

#[derive(Clone, Debug, PartialEq)]
pub struct SimulationState {
    pub params: SimParams,
    pub users: Vec<UserState>,
    /// Number of steps executed so far.
    pub t: usize,
}

/// Measures recorded after one step.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepStats {
    pub t: usize,
    pub attendance: usize,
    pub avg_trust: f64,
}

/// Everything that happened in one step, for inspection and replay.
#[derive(Clone, Debug, PartialEq)]
pub struct StepDetail {
    pub stats: StepStats,
    pub recommendations: Vec<Action>,
    pub decisions: Vec<Action>,
    pub qualities: Vec<Quality>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunResult {
    pub converged: bool,
    /// Steps needed to reach full trust; `Some(0)` if the population started there.
    pub t_star: Option<usize>,
    pub trajectory: Vec<StepStats>,
    pub final_trusts: Vec<f64>,
}

impl RunResult {
    /// Average trust when the run stopped.
    pub fn final_avg_trust(&self) -> f64 {
        self.final_trusts.iter().sum::<f64>() / self.final_trusts.len() as f64
    }
}

/// Draws the initial population. Under [`InitialTrust::UniformRandom`] each
/// user consumes one `f64` from `rng`, in index order.
pub fn init_population<R: Rng + ?Sized>(params: &SimParams, rng: &mut R) -> Result<SimulationState> {
    params.validate()?;
    let users = (0..params.n_users)
        .map(|_| {
            UserState::new(match params.initial_trust {
                InitialTrust::UniformRandom => rng.gen::<f64>(),
                InitialTrust::Constant(v) => v,
            })
        })
        .collect();
    Ok(SimulationState {
        params: params.clone(),
        users,
        t: 0,
    })
}

impl SimulationState {
    /// Builds a state from explicit trust values.
    pub fn from_trusts(params: &SimParams, trusts: &[f64]) -> Result<SimulationState> {
        params.validate()?;
        if trusts.len() != params.n_users {
            return Err(Error::config(format!(
                "{} trust values for {} users",
                trusts.len(),
                params.n_users
            )));
        }
        if let Some(bad) = trusts.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(Error::domain(format!("trust {bad} outside [0, 1]")));
        }
        Ok(SimulationState {
            params: params.clone(),
            users: trusts.iter().copied().map(UserState::new).collect(),
            t: 0,
        })
    }

    pub fn trusts(&self) -> Vec<f64> {
        self.users.iter().map(UserState::trust).collect()
    }

    pub fn avg_trust(&self) -> f64 {
        self.users.iter().map(UserState::trust).sum::<f64>() / self.users.len() as f64
    }

    /// True iff every user fully trusts the recommender.
    pub fn is_converged(&self) -> bool {
        match self.params.dynamics.trust_cap {
            TrustCap::Clamp => self.users.iter().all(|u| u.level == 1.0),
            TrustCap::Accumulate => self.users.iter().all(|u| u.level >= 1.0),
        }
    }

    /// One full step drawn from `rng`: the recommender first samples its GO
    /// set, then each user consumes one uniform draw in index order.
    pub fn step<R: Rng + ?Sized>(&mut self, rng: &mut R) -> StepStats {
        let n = self.params.n_users;
        let mut recs = Vec::with_capacity(n);
        issue_recommendations_into(n, self.params.comfort_level, rng, &mut recs)
            .expect("comfort level validated at construction");
        let decisions: Vec<Action> = self
            .users
            .iter()
            .zip(&recs)
            .map(|(u, &rec)| if rng.gen::<f64>() < u.trust() { rec } else { rec.opposite() })
            .collect();
        self.revise(&recs, &decisions, None)
    }

    /// A step with caller-supplied recommendations and uniform draws.
    pub fn step_with_draws(&mut self, recs: &[Action], draws: &[f64]) -> Result<StepDetail> {
        self.check_len(recs.len())?;
        self.check_len(draws.len())?;
        let decisions = self
            .users
            .iter()
            .zip(recs.iter().zip(draws))
            .map(|(u, (&rec, &draw))| decide(u.trust(), rec, draw))
            .collect::<Result<Vec<_>>>()?;
        self.step_with_decisions(recs, &decisions)
    }

    /// Runs the revision stage on forced decisions, bypassing the decision
    /// rule. Used to replay recorded histories.
    pub fn step_with_decisions(&mut self, recs: &[Action], decisions: &[Action]) -> Result<StepDetail> {
        self.check_len(recs.len())?;
        self.check_len(decisions.len())?;
        let mut qualities = Vec::with_capacity(recs.len());
        let stats = self.revise(recs, decisions, Some(&mut qualities));
        Ok(StepDetail {
            stats,
            recommendations: recs.to_vec(),
            decisions: decisions.to_vec(),
            qualities,
        })
    }

    fn check_len(&self, len: usize) -> Result<()> {
        if len == self.users.len() {
            Ok(())
        } else {
            Err(Error::domain(format!(
                "expected {} entries, got {len}",
                self.users.len()
            )))
        }
    }

    // Attendance is computed once; every user is judged against that same
    // value, so revisions within a step are simultaneous.
    fn revise(
        &mut self,
        recs: &[Action],
        decisions: &[Action],
        mut qualities: Option<&mut Vec<Quality>>,
    ) -> StepStats {
        let attendance = compute_attendance(decisions);
        let SimParams {
            comfort_level,
            beta,
            gamma,
            dynamics,
            ..
        } = self.params;
        for ((user, &rec), &dec) in self.users.iter_mut().zip(recs).zip(decisions) {
            let q = dynamics.stay_rule.classify(rec, attendance, comfort_level);
            user.level = dynamics.trust_cap.revise(user.level, q, beta, gamma);
            user.last_recommendation = Some(rec);
            user.last_decision = Some(dec);
            if let Some(qs) = qualities.as_deref_mut() {
                qs.push(q);
            }
        }
        self.t += 1;
        StepStats {
            t: self.t,
            attendance,
            avg_trust: self.avg_trust(),
        }
    }
}

/// Initializes a population and steps it until every user fully trusts the
/// recommender or `max_iterations` steps have run.
///
/// Convergence is checked before the first step and after every step; the
/// run stops at the first hit.
pub fn run<R: Rng + ?Sized>(params: &SimParams, rng: &mut R) -> Result<RunResult> {
    simulate(params, rng, true)
}

pub(crate) fn simulate<R: Rng + ?Sized>(
    params: &SimParams,
    rng: &mut R,
    keep_trajectory: bool,
) -> Result<RunResult> {
    let mut state = init_population(params, rng)?;
    let mut trajectory = Vec::new();
    let mut t_star = state.is_converged().then_some(0);
    while t_star.is_none() && state.t < params.max_iterations {
        let stats = state.step(rng);
        if keep_trajectory {
            trajectory.push(stats);
        }
        if state.is_converged() {
            t_star = Some(state.t);
        }
    }
    Ok(RunResult {
        converged: t_star.is_some(),
        t_star,
        trajectory,
        final_trusts: state.trusts(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Dynamics, StayRule};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn rng(seed: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed)
    }

    #[test]
    fn constant_init() {
        let p = SimParams::new(3, 1, 0.05, 0.05).with_initial_trust(InitialTrust::Constant(0.5));
        let s = init_population(&p, &mut rng(1)).unwrap();
        assert_eq!(s.trusts(), vec![0.5; 3]);
        assert_eq!(s.t, 0);
        assert!(s.users.iter().all(|u| u.last_decision.is_none()));

        let p = SimParams::new(2, 1, 0.05, 0.05).with_initial_trust(InitialTrust::Constant(1.0));
        assert!(init_population(&p, &mut rng(1)).unwrap().is_converged());
    }

    #[test]
    fn uniform_init_mean() {
        let p = SimParams::new(100_000, 60_000, 0.05, 0.05);
        let s = init_population(&p, &mut rng(3)).unwrap();
        let m = s.avg_trust();
        assert!((0.497..=0.503).contains(&m), "mean {m}");
    }

    #[test]
    fn init_rejects_bad_params() {
        let p = SimParams::new(3, 3, 0.05, 0.05);
        assert!(matches!(init_population(&p, &mut rng(0)), Err(Error::Config(_))));
    }

    #[test]
    fn converged_requires_exact_one() {
        let p = SimParams::new(2, 1, 0.05, 0.05).with_dynamics(Dynamics::STRICT);
        assert!(!SimulationState::from_trusts(&p, &[1.0, 0.999_999]).unwrap().is_converged());
        assert!(SimulationState::from_trusts(&p, &[1.0, 1.0]).unwrap().is_converged());
    }

    #[test]
    fn full_trust_step_judges_groups() {
        for (rule, stay_q) in [
            (StayRule::Overcrowded, Quality::Bad),
            (StayRule::WouldOverfill, Quality::Good),
        ] {
            let p = SimParams::new(5, 3, 0.05, 0.05).with_dynamics(Dynamics {
                stay_rule: rule,
                trust_cap: TrustCap::Clamp,
            });
            let mut s = SimulationState::from_trusts(&p, &[1.0; 5]).unwrap();
            let recs = issue_recommendations_into_vec(5, 3, 11);
            let d = s.step_with_draws(&recs, &[0.5; 5]).unwrap();
            assert_eq!(d.stats.attendance, 3);
            for (r, q) in recs.iter().zip(&d.qualities) {
                let expect = if *r == Action::Go { Quality::Good } else { stay_q };
                assert_eq!(*q, expect);
            }
        }
    }

    fn issue_recommendations_into_vec(n: usize, l: usize, seed: u64) -> Vec<Action> {
        crate::model::issue_recommendations(n, l, &mut rng(seed)).unwrap()
    }

    #[test]
    fn zero_trust_everyone_inverts() {
        let p = SimParams::new(5, 3, 0.05, 0.05);
        let mut s = SimulationState::from_trusts(&p, &[0.0; 5]).unwrap();
        let stats = s.step(&mut rng(5));
        assert_eq!(stats.attendance, 2);
        assert_eq!(stats.t, 1);
    }

    #[test]
    fn step_with_mismatched_lengths_fails() {
        let p = SimParams::new(5, 3, 0.05, 0.05);
        let mut s = SimulationState::from_trusts(&p, &[0.5; 5]).unwrap();
        assert!(s.step_with_draws(&[Action::Go; 4], &[0.1; 5]).is_err());
        assert!(s.step_with_decisions(&[Action::Go; 5], &[Action::Go; 6]).is_err());
    }

    #[test]
    fn run_edge_cases() {
        let p = SimParams::new(10, 6, 0.05, 0.05).with_max_iterations(0);
        let r = run(&p, &mut rng(1)).unwrap();
        assert!(!r.converged);
        assert!(r.t_star.is_none());
        assert!(r.trajectory.is_empty());

        let p = SimParams::new(10, 6, 0.05, 0.05).with_initial_trust(InitialTrust::Constant(1.0));
        let r = run(&p, &mut rng(1)).unwrap();
        assert_eq!(r.t_star, Some(0));
        assert!(r.trajectory.is_empty());
    }

    #[test]
    fn run_is_deterministic() {
        let p = SimParams::new(30, 18, 0.05, 0.05);
        let a = run(&p, &mut rng(9)).unwrap();
        let b = run(&p, &mut rng(9)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn strict_dynamics_never_converge_after_a_step() {
        let p = SimParams::new(20, 12, 0.05, 0.05).with_dynamics(Dynamics::STRICT);
        for seed in 0..5 {
            let r = run(&p, &mut rng(seed)).unwrap();
            assert!(!r.converged);
            assert_eq!(r.trajectory.len(), 250);
        }
    }
}
