//! Model vocabulary and the single-step rules every agent follows.
//!
//! Everything here is a pure function of its arguments. Randomness enters
//! only through an explicit `draw` or an explicit RNG handle, so a step can
//! be replayed exactly.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Values this close to 0 or 1 are snapped onto the boundary. Repeated
/// additions of `beta` otherwise leave a user at `0.9999999999999999`.
const SNAP: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Action {
    Go,
    Stay,
}

impl Action {
    pub fn opposite(self) -> Action {
        match self {
            Action::Go => Action::Stay,
            Action::Stay => Action::Go,
        }
    }
}

impl fmt::Display for Action {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Action::Go => "G",
            Action::Stay => "S",
        })
    }
}

/// Free-function form of [`Action::opposite`].
pub fn opposite(a: Action) -> Action {
    a.opposite()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Quality {
    Good,
    Bad,
}

impl Quality {
    pub fn complement(self) -> Quality {
        match self {
            Quality::Good => Quality::Bad,
            Quality::Bad => Quality::Good,
        }
    }
}

/// How a STAY recommendation is judged against the attendance.
///
/// A GO recommendation is always good iff `attendance <= comfort`. The two
/// rules only disagree when attendance lands exactly on the comfort level.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StayRule {
    /// STAY is good iff `attendance > comfort`. Under this rule one of the
    /// two recommendation groups is judged bad on every step.
    Overcrowded,
    /// STAY is good iff `attendance >= comfort`: one more visitor would have
    /// overfilled the bar. A step where everybody follows the recommendation
    /// is then good for every user.
    #[default]
    WouldOverfill,
}

impl StayRule {
    pub fn classify(self, rec: Action, attendance: usize, comfort_level: usize) -> Quality {
        let good = match (rec, self) {
            (Action::Go, _) => attendance <= comfort_level,
            (Action::Stay, StayRule::Overcrowded) => attendance > comfort_level,
            (Action::Stay, StayRule::WouldOverfill) => attendance >= comfort_level,
        };
        if good {
            Quality::Good
        } else {
            Quality::Bad
        }
    }
}

impl FromStr for StayRule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "overcrowded" => Ok(StayRule::Overcrowded),
            "would-overfill" => Ok(StayRule::WouldOverfill),
            other => Err(Error::Parse(format!(
                "unknown stay rule `{other}` (expected overcrowded|would-overfill)"
            ))),
        }
    }
}

impl fmt::Display for StayRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            StayRule::Overcrowded => "overcrowded",
            StayRule::WouldOverfill => "would-overfill",
        })
    }
}

/// What happens to trust above 1.
///
/// With [`TrustCap::Clamp`] a good recommendation can never lift trust past 1.
/// With [`TrustCap::Accumulate`] the internal level keeps growing. The excess
/// acts as a reserve that absorbs later bad recommendations, while the
/// observable trust (acceptance probability) is still `min(level, 1)`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TrustCap {
    Clamp,
    #[default]
    Accumulate,
}

impl TrustCap {
    /// Applies one revision to an internal trust level.
    pub fn revise(self, level: f64, q: Quality, beta: f64, gamma: f64) -> f64 {
        match (self, q) {
            (TrustCap::Clamp, _) => clamped_update(level.min(1.0), q, beta, gamma),
            (TrustCap::Accumulate, Quality::Good) => snap(level + beta),
            (TrustCap::Accumulate, Quality::Bad) => snap((level - gamma).max(0.0)),
        }
    }
}

impl FromStr for TrustCap {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "clamp" => Ok(TrustCap::Clamp),
            "accumulate" => Ok(TrustCap::Accumulate),
            other => Err(Error::Parse(format!(
                "unknown trust cap `{other}` (expected clamp|accumulate)"
            ))),
        }
    }
}

impl fmt::Display for TrustCap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TrustCap::Clamp => "clamp",
            TrustCap::Accumulate => "accumulate",
        })
    }
}

/// The pair of rule choices that decide how trust evolves.
///
/// The default, [`Dynamics::REPLICATION`], lets a population that follows
/// every recommendation stay at full trust. Under [`Dynamics::STRICT`] some
/// user is judged bad on every step, so full trust is never reached after
/// the first step.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Dynamics {
    pub stay_rule: StayRule,
    pub trust_cap: TrustCap,
}

impl Dynamics {
    pub const REPLICATION: Dynamics = Dynamics {
        stay_rule: StayRule::WouldOverfill,
        trust_cap: TrustCap::Accumulate,
    };

    /// Strict reading: STAY is good only for an overcrowded bar and trust is
    /// clamped to `[0, 1]`.
    pub const STRICT: Dynamics = Dynamics {
        stay_rule: StayRule::Overcrowded,
        trust_cap: TrustCap::Clamp,
    };
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "value", rename_all = "kebab-case")]
pub enum InitialTrust {
    /// Independent uniform draw from `[0, 1)` per user.
    #[default]
    UniformRandom,
    Constant(f64),
}

impl FromStr for InitialTrust {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s == "uniform" {
            return Ok(InitialTrust::UniformRandom);
        }
        let v = s
            .strip_prefix("constant:")
            .ok_or_else(|| {
                Error::Parse(format!(
                    "unknown initial trust `{s}` (expected uniform|constant:<v>)"
                ))
            })?
            .parse::<f64>()
            .map_err(|e| Error::Parse(format!("initial trust `{s}`: {e}")))?;
        if !(0.0..=1.0).contains(&v) {
            return Err(Error::domain(format!("constant initial trust {v} outside [0, 1]")));
        }
        Ok(InitialTrust::Constant(v))
    }
}

impl fmt::Display for InitialTrust {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            InitialTrust::UniformRandom => f.write_str("uniform"),
            InitialTrust::Constant(v) => write!(f, "constant:{v}"),
        }
    }
}

/// All constants for one simulation run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimParams {
    pub n_users: usize,
    /// Maximum attendance at which the bar is not crowded. Also the number of
    /// GO recommendations issued per step.
    pub comfort_level: usize,
    /// Physical capacity of the resource. Carried for reporting only; no rule
    /// reads it.
    pub capacity: Option<usize>,
    pub beta: f64,
    pub gamma: f64,
    pub max_iterations: usize,
    pub initial_trust: InitialTrust,
    pub seed: u64,
    pub dynamics: Dynamics,
}

impl SimParams {
    /// Parameters with a 250-step cap, uniform initial trust and seed 0.
    pub fn new(n_users: usize, comfort_level: usize, beta: f64, gamma: f64) -> Self {
        SimParams {
            n_users,
            comfort_level,
            capacity: None,
            beta,
            gamma,
            max_iterations: 250,
            initial_trust: InitialTrust::UniformRandom,
            seed: 0,
            dynamics: Dynamics::default(),
        }
    }

    /// Sets `gamma = phi * beta`.
    pub fn with_phi(mut self, phi: f64) -> Self {
        self.gamma = phi * self.beta;
        self
    }

    pub fn with_max_iterations(mut self, max_iterations: usize) -> Self {
        self.max_iterations = max_iterations;
        self
    }

    pub fn with_initial_trust(mut self, initial_trust: InitialTrust) -> Self {
        self.initial_trust = initial_trust;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_dynamics(mut self, dynamics: Dynamics) -> Self {
        self.dynamics = dynamics;
        self
    }

    /// Ratio of negative to positive feedback.
    pub fn phi(&self) -> f64 {
        self.gamma / self.beta
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_users == 0 {
            return Err(Error::config("n_users must be positive"));
        }
        if self.comfort_level >= self.n_users {
            return Err(Error::config(format!(
                "comfort level {} must be below the number of users {}",
                self.comfort_level, self.n_users
            )));
        }
        if let Some(c) = self.capacity {
            if c == 0 || c < self.comfort_level {
                return Err(Error::config(format!(
                    "capacity {c} must be positive and at least the comfort level {}",
                    self.comfort_level
                )));
            }
        }
        if !(self.beta > 0.0 && self.beta <= 1.0) {
            return Err(Error::config(format!("beta {} outside (0, 1]", self.beta)));
        }
        if !(0.0..=1.0).contains(&self.gamma) {
            return Err(Error::config(format!("gamma {} outside [0, 1]", self.gamma)));
        }
        if let InitialTrust::Constant(v) = self.initial_trust {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::config(format!("constant initial trust {v} outside [0, 1]")));
            }
        }
        Ok(())
    }
}

/// One agent.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct UserState {
    /// Internal trust level. Equal to the trust itself under
    /// [`TrustCap::Clamp`]; may exceed 1 under [`TrustCap::Accumulate`].
    pub level: f64,
    pub last_recommendation: Option<Action>,
    pub last_decision: Option<Action>,
}

impl UserState {
    pub fn new(trust: f64) -> Self {
        UserState {
            level: trust,
            last_recommendation: None,
            last_decision: None,
        }
    }

    /// Probability of accepting the next recommendation, always in `[0, 1]`.
    pub fn trust(&self) -> f64 {
        self.level.min(1.0)
    }
}

fn check_unit(name: &str, v: f64) -> Result<()> {
    if (0.0..=1.0).contains(&v) {
        Ok(())
    } else {
        Err(Error::domain(format!("{name} = {v} outside [0, 1]")))
    }
}

fn snap(v: f64) -> f64 {
    if (v - 1.0).abs() < SNAP {
        1.0
    } else if v.abs() < SNAP {
        0.0
    } else {
        v
    }
}

fn clamped_update(trust: f64, q: Quality, beta: f64, gamma: f64) -> f64 {
    match q {
        Quality::Good => snap((trust + beta).min(1.0)),
        Quality::Bad => snap((trust - gamma).max(0.0)),
    }
}

/// Applies the decision rule: the recommendation is accepted iff
/// `draw < trust`, so the acceptance probability for a uniform `draw` is
/// exactly `trust`. A rejected recommendation means doing the other action.
pub fn decide(trust: f64, rec: Action, draw: f64) -> Result<Action> {
    check_unit("trust", trust)?;
    if !(0.0..1.0).contains(&draw) {
        return Err(Error::domain(format!("draw = {draw} outside [0, 1)")));
    }
    Ok(if draw < trust { rec } else { rec.opposite() })
}

/// Judges a recommendation with the strict rule ([`StayRule::Overcrowded`]).
pub fn classify_recommendation(rec: Action, attendance: usize, comfort_level: usize) -> Quality {
    StayRule::Overcrowded.classify(rec, attendance, comfort_level)
}

/// Trust revision clamped to `[0, 1]`: `+beta` after a good recommendation,
/// `-gamma` after a bad one.
pub fn update_trust(trust: f64, q: Quality, beta: f64, gamma: f64) -> Result<f64> {
    check_unit("trust", trust)?;
    check_unit("beta", beta)?;
    check_unit("gamma", gamma)?;
    Ok(clamped_update(trust, q, beta, gamma))
}

/// Picks a uniformly random set of `comfort_level` users (without
/// replacement) to receive GO; everybody else receives STAY.
pub fn issue_recommendations<R: Rng + ?Sized>(
    n_users: usize,
    comfort_level: usize,
    rng: &mut R,
) -> Result<Vec<Action>> {
    let mut recs = Vec::with_capacity(n_users);
    issue_recommendations_into(n_users, comfort_level, rng, &mut recs)?;
    Ok(recs)
}

pub(crate) fn issue_recommendations_into<R: Rng + ?Sized>(
    n_users: usize,
    comfort_level: usize,
    rng: &mut R,
    recs: &mut Vec<Action>,
) -> Result<()> {
    if comfort_level > n_users {
        return Err(Error::domain(format!(
            "cannot pick {comfort_level} GO users out of {n_users}"
        )));
    }
    recs.clear();
    recs.resize(n_users, Action::Stay);
    for i in rand::seq::index::sample(rng, n_users, comfort_level) {
        recs[i] = Action::Go;
    }
    Ok(())
}

pub fn compute_attendance(decisions: &[Action]) -> usize {
    decisions.iter().filter(|&&d| d == Action::Go).count()
}

pub fn average_trust(trusts: &[f64]) -> Result<f64> {
    if trusts.is_empty() {
        return Err(Error::domain("average of an empty trust vector"));
    }
    Ok(trusts.iter().sum::<f64>() / trusts.len() as f64)
}
