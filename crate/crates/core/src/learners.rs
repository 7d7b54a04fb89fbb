//! The seven per-transition update rules behind one step interface: TD,
//! GTD2, TDC, TDRC, GTD2-MP, BA-TDC and BA-TDRC.
//!
//! All learners share the TD error `delta = r - theta^T (phi - gamma phi')`
//! and, where applicable, the TDC primary correction direction
//! `rho (delta phi - gamma phi' (phi^T w))`. They differ in the auxiliary
//! recursion:
//!
//! * TDC / GTD2 drive `w` by the covariance residual
//!   `(rho delta - phi^T w) phi`,
//! * TDRC adds the ridge term `- eta w` to that residual,
//! * the behavior-aware variants replace the instantaneous projection
//!   `phi^T w` by the temporal-difference projection
//!   `(phi - gamma phi')^T w`, with `- beta w` regularization for BA-TDRC.
//!
//! Steps are pure: they take a state by reference and return the updated
//! state, or [`Error::Diverged`] when a component leaves the guard range.

use crate::mdp::Transition;
use crate::{Error, Result};

/// Any parameter component beyond this magnitude (or non-finite) marks the
/// run as diverged. Runs are not clipped; the guard only stops arithmetic
/// overflow and records the event.
pub const DIVERGENCE_GUARD: f64 = 1e100;

/// Algorithm tag.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Algo {
    Td,
    Gtd2,
    Tdc,
    Tdrc,
    Gtd2Mp,
    BaTdc,
    BaTdrc,
}

impl Algo {
    /// All algorithms, in canonical order.
    pub fn all() -> [Algo; 7] {
        [Algo::Td, Algo::Gtd2, Algo::Tdc, Algo::Tdrc, Algo::Gtd2Mp, Algo::BaTdc, Algo::BaTdrc]
    }

    /// Stable identifier used in files and CLI flags.
    pub fn name(self) -> &'static str {
        match self {
            Algo::Td => "td",
            Algo::Gtd2 => "gtd2",
            Algo::Tdc => "tdc",
            Algo::Tdrc => "tdrc",
            Algo::Gtd2Mp => "gtd2_mp",
            Algo::BaTdc => "ba_tdc",
            Algo::BaTdrc => "ba_tdrc",
        }
    }

    /// Display label.
    pub fn label(self) -> &'static str {
        match self {
            Algo::Td => "TD",
            Algo::Gtd2 => "GTD2",
            Algo::Tdc => "TDC",
            Algo::Tdrc => "TDRC",
            Algo::Gtd2Mp => "GTD2-MP",
            Algo::BaTdc => "BA-TDC",
            Algo::BaTdrc => "BA-TDRC",
        }
    }

    pub fn from_name(name: &str) -> Result<Algo> {
        Algo::all()
            .into_iter()
            .find(|a| a.name() == name)
            .ok_or_else(|| Error::Invalid(format!("unknown algorithm `{name}`")))
    }
}

impl std::fmt::Display for Algo {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.label())
    }
}

/// Hyperparameters; each algorithm reads the fields it tunes and ignores the
/// rest (`alpha_w` doubles as the GTD2/TDC auxiliary step `beta_w`).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Hyper {
    pub alpha: f64,
    pub alpha_w: f64,
    pub eta: f64,
    pub beta: f64,
}

impl Hyper {
    pub fn alpha_only(alpha: f64) -> Hyper {
        Hyper { alpha, alpha_w: 0.0, eta: 0.0, beta: 0.0 }
    }
}

/// Primary and auxiliary parameter vectors of one learner.
#[derive(Clone, Debug, PartialEq)]
pub struct LearnerState {
    pub theta: Vec<f64>,
    pub w: Vec<f64>,
}

impl LearnerState {
    pub fn new(theta0: &[f64], w0: &[f64]) -> LearnerState {
        LearnerState { theta: theta0.to_vec(), w: w0.to_vec() }
    }
}

#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// TD error `r - theta^T (phi - gamma phi')`.
#[inline]
fn td_error(theta: &[f64], t: &Transition, gamma: f64) -> f64 {
    let mut proj = 0.0;
    for i in 0..theta.len() {
        proj += theta[i] * (t.phi_s[i] - gamma * t.phi_next[i]);
    }
    t.r - proj
}

fn guard(state: LearnerState) -> Result<LearnerState> {
    let ok = |v: &f64| v.is_finite() && v.abs() <= DIVERGENCE_GUARD;
    if state.theta.iter().all(ok) && state.w.iter().all(ok) {
        Ok(state)
    } else {
        Err(Error::Diverged)
    }
}

/// Apply one transition to the learner state under the given algorithm.
///
/// `gamma` must match the environment the transition came from.
pub fn step(
    algo: Algo,
    state: &LearnerState,
    hyper: &Hyper,
    t: &Transition,
    gamma: f64,
) -> Result<LearnerState> {
    debug_assert_eq!(state.theta.len(), t.phi_s.len());
    match algo {
        Algo::Td => step_td(state, hyper, t, gamma),
        Algo::Gtd2 => step_gtd2(state, hyper, t, gamma),
        Algo::Tdc => step_correction(state, hyper, t, gamma, AuxKind::Covariance { eta: 0.0 }),
        Algo::Tdrc => {
            step_correction(state, hyper, t, gamma, AuxKind::Covariance { eta: hyper.eta })
        }
        Algo::Gtd2Mp => step_gtd2_mp(state, hyper, t, gamma),
        Algo::BaTdc => step_correction(state, hyper, t, gamma, AuxKind::Behavior { beta: 0.0 }),
        Algo::BaTdrc => {
            step_correction(state, hyper, t, gamma, AuxKind::Behavior { beta: hyper.beta })
        }
    }
}

/// Off-policy semi-gradient TD: `theta += alpha rho delta phi`; `w` unused.
fn step_td(
    state: &LearnerState,
    hyper: &Hyper,
    t: &Transition,
    gamma: f64,
) -> Result<LearnerState> {
    let delta = td_error(&state.theta, t, gamma);
    let mut next = state.clone();
    let scale = hyper.alpha * t.rho * delta;
    for i in 0..next.theta.len() {
        next.theta[i] += scale * t.phi_s[i];
    }
    guard(next)
}

/// GTD2: `theta += alpha rho (phi - gamma phi') (phi^T w)`,
/// `w += beta_w (rho delta - phi^T w) phi`.
fn step_gtd2(
    state: &LearnerState,
    hyper: &Hyper,
    t: &Transition,
    gamma: f64,
) -> Result<LearnerState> {
    let delta = td_error(&state.theta, t, gamma);
    let phi_w = dot(t.phi_s, &state.w);
    let mut next = state.clone();
    let theta_scale = hyper.alpha * t.rho * phi_w;
    let w_scale = hyper.alpha_w * (t.rho * delta - phi_w);
    for i in 0..next.theta.len() {
        next.theta[i] += theta_scale * (t.phi_s[i] - gamma * t.phi_next[i]);
        next.w[i] += w_scale * t.phi_s[i];
    }
    guard(next)
}

/// Which auxiliary equation the corrected update samples.
enum AuxKind {
    /// `(rho delta - phi^T w) phi - eta w` (TDC at `eta = 0`, TDRC otherwise).
    Covariance { eta: f64 },
    /// `(rho delta - (phi - gamma phi')^T w) phi - beta w`
    /// (BA-TDC at `beta = 0`, BA-TDRC otherwise).
    Behavior { beta: f64 },
}

/// Shared TDC primary direction with one of the auxiliary residuals.
fn step_correction(
    state: &LearnerState,
    hyper: &Hyper,
    t: &Transition,
    gamma: f64,
    kind: AuxKind,
) -> Result<LearnerState> {
    let delta = td_error(&state.theta, t, gamma);
    let phi_w = dot(t.phi_s, &state.w);
    let mut next = state.clone();
    let d = next.theta.len();
    // theta += alpha rho (delta phi - gamma phi' (phi^T w))
    for i in 0..d {
        next.theta[i] +=
            hyper.alpha * t.rho * (delta * t.phi_s[i] - gamma * t.phi_next[i] * phi_w);
    }
    match kind {
        AuxKind::Covariance { eta } => {
            let resid = t.rho * delta - phi_w;
            for i in 0..d {
                next.w[i] += hyper.alpha_w * (resid * t.phi_s[i] - eta * state.w[i]);
            }
        }
        AuxKind::Behavior { beta } => {
            let mut diff_w = 0.0;
            for i in 0..d {
                diff_w += (t.phi_s[i] - gamma * t.phi_next[i]) * state.w[i];
            }
            let resid = t.rho * delta - diff_w;
            for i in 0..d {
                next.w[i] += hyper.alpha_w * (resid * t.phi_s[i] - beta * state.w[i]);
            }
        }
    }
    guard(next)
}

/// Extragradient GTD2 with a single shared step size: a half step from the
/// current iterate, then a full step from the original iterate using the
/// half-step auxiliary and the re-evaluated TD error.
fn step_gtd2_mp(
    state: &LearnerState,
    hyper: &Hyper,
    t: &Transition,
    gamma: f64,
) -> Result<LearnerState> {
    let d = state.theta.len();
    let alpha = hyper.alpha;
    let delta = td_error(&state.theta, t, gamma);
    let phi_w = dot(t.phi_s, &state.w);

    // Half step.
    let mut theta_half = state.theta.clone();
    let mut w_half = state.w.clone();
    let half_scale = alpha * t.rho * phi_w;
    let half_resid = alpha * (t.rho * delta - phi_w);
    for i in 0..d {
        theta_half[i] += half_scale * (t.phi_s[i] - gamma * t.phi_next[i]);
        w_half[i] += half_resid * t.phi_s[i];
    }

    // Full step from the original iterate at the half-step point.
    let delta_half = td_error(&theta_half, t, gamma);
    let phi_w_half = dot(t.phi_s, &w_half);
    let mut next = state.clone();
    let full_scale = alpha * t.rho * phi_w_half;
    let full_resid = alpha * (t.rho * delta_half - phi_w_half);
    for i in 0..d {
        next.theta[i] += full_scale * (t.phi_s[i] - gamma * t.phi_next[i]);
        next.w[i] += full_resid * t.phi_s[i];
    }
    guard(next)
}
