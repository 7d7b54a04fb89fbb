//! Finite MDP representation, policy-induced chains, exact operator
//! extraction, RMSPBE, and transition sampling under the behavior policy.
//!
//! Operator conventions, with `D` the diagonal of the behavior stationary
//! distribution and `P_nu` the chain induced by policy `nu`:
//!
//! ```text
//! C     = Phi^T D Phi                          feature covariance
//! A_nu  = Phi^T D (I - gamma P_nu) Phi         Bellman matrix of nu
//! D_pi  = gamma Phi^T P_pi^T D Phi             target next-feature coupling
//! b     = Phi^T D rbar_pi                      reward vector
//! ```
//!
//! `theta_star` solves `A_pi theta = b`.

use rand::Rng;

use crate::numkit::{
    self, lu_factor, smallest_singular_value, solve_linear, symmetric_eigen, Matrix,
};
use crate::{Error, Result};

/// Row-sum / probability validation slack.
const STOCHASTIC_TOL: f64 = 1e-12;

/// Smallest singular value a feature matrix must clear to count as full
/// column rank.
pub const FULL_RANK_TOL: f64 = 1e-10;

/// Transitions discarded before Monte-Carlo operator estimation starts, to
/// approximate sampling from the stationary behavior trajectory.
pub const MC_BURN_IN: usize = 1000;

/// A finite MDP with dense transition and reward tensors indexed `[s][a][s']`.
#[derive(Clone, Debug)]
pub struct FiniteMdp {
    n_states: usize,
    n_actions: usize,
    transition: Vec<f64>,
    reward: Vec<f64>,
    gamma: f64,
}

impl FiniteMdp {
    pub fn new(
        n_states: usize,
        n_actions: usize,
        transition: Vec<f64>,
        reward: Vec<f64>,
        gamma: f64,
    ) -> Result<FiniteMdp> {
        if n_states == 0 || n_actions == 0 {
            return Err(Error::invalid("MDP needs at least one state and action"));
        }
        let len = n_states * n_actions * n_states;
        if transition.len() != len || reward.len() != len {
            return Err(Error::DimensionMismatch(format!(
                "tensors must have {} entries, got P: {}, R: {}",
                len,
                transition.len(),
                reward.len()
            )));
        }
        if !(0.0 < gamma && gamma < 1.0) {
            return Err(Error::invalid(format!("gamma must lie in (0,1), got {gamma}")));
        }
        if reward.iter().any(|r| !r.is_finite()) {
            return Err(Error::invalid("rewards must be finite"));
        }
        let mdp = FiniteMdp { n_states, n_actions, transition, reward, gamma };
        for s in 0..n_states {
            for a in 0..n_actions {
                let mut sum = 0.0;
                for s2 in 0..n_states {
                    let p = mdp.prob(s, a, s2);
                    if !(-STOCHASTIC_TOL..=1.0 + STOCHASTIC_TOL).contains(&p) {
                        return Err(Error::invalid(format!(
                            "P[{s}][{a}][{s2}] = {p} is not a probability"
                        )));
                    }
                    sum += p;
                }
                if (sum - 1.0).abs() > STOCHASTIC_TOL {
                    return Err(Error::invalid(format!("P[{s}][{a}] sums to {sum}, expected 1")));
                }
            }
        }
        Ok(mdp)
    }

    pub fn n_states(&self) -> usize {
        self.n_states
    }

    pub fn n_actions(&self) -> usize {
        self.n_actions
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    #[inline]
    fn idx(&self, s: usize, a: usize, s2: usize) -> usize {
        (s * self.n_actions + a) * self.n_states + s2
    }

    #[inline]
    pub fn prob(&self, s: usize, a: usize, s2: usize) -> f64 {
        self.transition[self.idx(s, a, s2)]
    }

    #[inline]
    pub fn reward(&self, s: usize, a: usize, s2: usize) -> f64 {
        self.reward[self.idx(s, a, s2)]
    }
}

/// Target policy `pi` and behavior policy `mu`, both `[s][a]` row-stochastic,
/// with `mu` covering `pi` so importance ratios stay finite.
#[derive(Clone, Debug)]
pub struct PolicyPair {
    pub pi: Matrix,
    pub mu: Matrix,
}

impl PolicyPair {
    pub fn new(pi: Matrix, mu: Matrix) -> Result<PolicyPair> {
        if pi.rows() != mu.rows() || pi.cols() != mu.cols() {
            return Err(Error::DimensionMismatch(format!(
                "pi is {}x{}, mu is {}x{}",
                pi.rows(),
                pi.cols(),
                mu.rows(),
                mu.cols()
            )));
        }
        for (name, m) in [("pi", &pi), ("mu", &mu)] {
            for s in 0..m.rows() {
                let row = m.row(s);
                if row.iter().any(|p| !(-STOCHASTIC_TOL..=1.0 + STOCHASTIC_TOL).contains(p)) {
                    return Err(Error::invalid(format!("{name}[{s}] has an entry outside [0,1]")));
                }
                let sum: f64 = row.iter().sum();
                if (sum - 1.0).abs() > STOCHASTIC_TOL {
                    return Err(Error::invalid(format!("{name}[{s}] sums to {sum}")));
                }
            }
        }
        for s in 0..pi.rows() {
            for a in 0..pi.cols() {
                if pi[(s, a)] > 0.0 && mu[(s, a)] <= 0.0 {
                    return Err(Error::invalid(format!(
                        "coverage violated at state {s}, action {a}: pi > 0 but mu = 0"
                    )));
                }
            }
        }
        Ok(PolicyPair { pi, mu })
    }

    pub fn n_states(&self) -> usize {
        self.pi.rows()
    }

    /// Importance ratio `pi(a|s) / mu(a|s)`.
    #[inline]
    pub fn rho(&self, s: usize, a: usize) -> f64 {
        self.pi[(s, a)] / self.mu[(s, a)]
    }
}

/// Linear feature map: one row of `phi` per state.
#[derive(Clone, Debug)]
pub struct FeatureMap {
    phi: Matrix,
}

impl FeatureMap {
    /// Standard constructor: requires full column rank (smallest singular
    /// value above [`FULL_RANK_TOL`]).
    pub fn new(phi: Matrix) -> Result<FeatureMap> {
        let fm = FeatureMap::aliased(phi)?;
        if !fm.full_column_rank() {
            return Err(Error::invalid(
                "feature matrix is column-rank deficient; use FeatureMap::aliased \
                 for deliberately aliased representations",
            ));
        }
        Ok(fm)
    }

    /// Constructor for deliberately rank-deficient feature maps (Baird's
    /// aliased representation). Only finiteness is checked.
    pub fn aliased(phi: Matrix) -> Result<FeatureMap> {
        if !phi.all_finite() {
            return Err(Error::invalid("feature matrix has non-finite entries"));
        }
        Ok(FeatureMap { phi })
    }

    pub fn n_states(&self) -> usize {
        self.phi.rows()
    }

    /// Feature dimensionality `d`.
    pub fn dim(&self) -> usize {
        self.phi.cols()
    }

    pub fn row(&self, s: usize) -> &[f64] {
        self.phi.row(s)
    }

    pub fn matrix(&self) -> &Matrix {
        &self.phi
    }

    pub fn full_column_rank(&self) -> bool {
        smallest_singular_value(&self.phi).map(|s| s > FULL_RANK_TOL).unwrap_or(false)
    }
}

/// One sampled behavior transition with its importance ratio and feature
/// views.
#[derive(Clone, Debug)]
pub struct Transition<'a> {
    pub s: usize,
    pub a: usize,
    pub s_next: usize,
    pub r: f64,
    pub rho: f64,
    pub phi_s: &'a [f64],
    pub phi_next: &'a [f64],
}

/// Exact stationary expectation matrices for one environment, plus the
/// projected fixed point.
#[derive(Clone, Debug)]
pub struct OperatorBundle {
    pub d_mu: Vec<f64>,
    pub c: Matrix,
    pub a_pi: Matrix,
    pub a_mu: Matrix,
    pub d_pi: Matrix,
    pub b: Vec<f64>,
    pub theta_star: Vec<f64>,
    // Eigendecomposition of C backing the (pseudo-)inverse metric in rmspbe.
    c_eigvals: Vec<f64>,
    c_eigvecs: Matrix,
    c_rank_tol: f64,
}

impl OperatorBundle {
    pub fn dim(&self) -> usize {
        self.c.rows()
    }

    /// Root mean-squared projected Bellman error at `theta`:
    /// `sqrt(v^T C^+ v)` with `v = b - A_pi theta`.
    ///
    /// `C` can be rank deficient when the feature map is aliased (Baird); the
    /// residual `v` always lies in the feature row space, so the
    /// pseudo-inverse metric is well defined and null-space components of `C`
    /// are discarded.
    pub fn rmspbe(&self, theta: &[f64]) -> f64 {
        let d = self.dim();
        assert_eq!(theta.len(), d, "theta length mismatch");
        let mut v = self.a_pi.matvec(theta);
        for i in 0..d {
            v[i] = self.b[i] - v[i];
        }
        let mut acc = 0.0;
        for j in 0..d {
            if self.c_eigvals[j] > self.c_rank_tol {
                let mut u = 0.0;
                for i in 0..d {
                    u += self.c_eigvecs[(i, j)] * v[i];
                }
                acc += u * u / self.c_eigvals[j];
            }
        }
        acc.sqrt()
    }
}

/// State-transition matrix of the chain induced by a policy:
/// `P_nu[s][s'] = sum_a policy[s][a] P[s][a][s']`.
pub fn induced_chain(mdp: &FiniteMdp, policy: &Matrix) -> Result<Matrix> {
    if policy.rows() != mdp.n_states() || policy.cols() != mdp.n_actions() {
        return Err(Error::DimensionMismatch(format!(
            "policy is {}x{}, MDP has {} states and {} actions",
            policy.rows(),
            policy.cols(),
            mdp.n_states(),
            mdp.n_actions()
        )));
    }
    let n = mdp.n_states();
    Ok(Matrix::from_fn(n, n, |s, s2| {
        (0..mdp.n_actions()).map(|a| policy[(s, a)] * mdp.prob(s, a, s2)).sum()
    }))
}

/// Stationary distribution of a row-stochastic irreducible matrix, solved as
/// the one-dimensional null space of `P^T - I` with a normalization row
/// appended (through the normal equations of the stacked system).
pub fn stationary_distribution(p: &Matrix) -> Result<Vec<f64>> {
    assert!(p.is_square(), "transition matrix must be square");
    let n = p.rows();
    let mut m = p.transpose();
    for i in 0..n {
        m[(i, i)] -= 1.0;
    }
    // A second near-zero singular value means the null space has dimension
    // greater than one, i.e. the chain is not irreducible.
    let svs = numkit::singular_values(&m)?;
    let scale = m.norm_inf().max(1.0);
    let near_null = svs.iter().filter(|s| **s <= 1e-10 * scale).count();
    if near_null != 1 {
        return Err(Error::NotIrreducible);
    }
    // Normal equations of [[P^T - I], [1 .. 1]] d = (0, .., 0, 1).
    let mt_m = m.transpose().matmul(&m);
    let gram = Matrix::from_fn(n, n, |i, j| mt_m[(i, j)] + 1.0);
    let rhs = vec![1.0; n];
    let mut d = solve_linear(&gram, &rhs)?;
    let sum: f64 = d.iter().sum();
    for v in &mut d {
        *v /= sum;
    }
    if d.iter().any(|v| *v <= 1e-12) {
        return Err(Error::NotIrreducible);
    }
    Ok(d)
}

/// Compute the exact operator bundle for an environment.
pub fn operator_bundle(
    mdp: &FiniteMdp,
    phi: &FeatureMap,
    policies: &PolicyPair,
) -> Result<OperatorBundle> {
    let n = mdp.n_states();
    if phi.n_states() != n || policies.n_states() != n {
        return Err(Error::DimensionMismatch(format!(
            "MDP has {n} states, phi has {}, policies have {}",
            phi.n_states(),
            policies.n_states()
        )));
    }
    let p_mu = induced_chain(mdp, &policies.mu)?;
    let p_pi = induced_chain(mdp, &policies.pi)?;
    let d_mu = stationary_distribution(&p_mu)?;
    let gamma = mdp.gamma();

    let phi_m = phi.matrix();
    let d_phi = Matrix::from_fn(n, phi.dim(), |s, j| d_mu[s] * phi_m[(s, j)]);
    let phi_t = phi_m.transpose();

    let c = phi_t.matmul(&d_phi);
    let bellman = |p_nu: &Matrix| {
        let shifted = Matrix::from_fn(n, phi.dim(), |s, j| {
            let next: f64 = (0..n).map(|s2| p_nu[(s, s2)] * phi_m[(s2, j)]).sum();
            d_mu[s] * (phi_m[(s, j)] - gamma * next)
        });
        phi_t.matmul(&shifted)
    };
    let a_pi = bellman(&p_pi);
    let a_mu = bellman(&p_mu);
    let d_pi = phi_t.matmul(&p_pi.transpose()).matmul(&d_phi).scale(gamma);

    // b = Phi^T D rbar_pi with rbar_pi(s) = sum_a pi(a|s) sum_s' P R.
    let rbar: Vec<f64> = (0..n)
        .map(|s| {
            (0..mdp.n_actions())
                .map(|a| {
                    let ex: f64 = (0..n).map(|s2| mdp.prob(s, a, s2) * mdp.reward(s, a, s2)).sum();
                    policies.pi[(s, a)] * ex
                })
                .sum()
        })
        .collect();
    let b: Vec<f64> = (0..phi.dim())
        .map(|j| (0..n).map(|s| phi_m[(s, j)] * d_mu[s] * rbar[s]).sum())
        .collect();

    // Projected fixed point. A singular A_pi with b = 0 (Baird) still has the
    // canonical solution theta* = 0; a singular A_pi with b != 0 genuinely
    // has no usable fixed point.
    let theta_star = match solve_linear(&a_pi, &b) {
        Ok(t) => t,
        Err(Error::SingularMatrix) if b.iter().all(|v| *v == 0.0) => vec![0.0; phi.dim()],
        Err(e) => return Err(e),
    };

    let (c_eigvals, c_eigvecs) = symmetric_eigen(&c)?;
    let c_max = c_eigvals.iter().cloned().fold(0.0, f64::max);
    if c_max <= 0.0 {
        return Err(Error::SingularMatrix);
    }
    Ok(OperatorBundle {
        d_mu,
        c,
        a_pi,
        a_mu,
        d_pi,
        b,
        theta_star,
        c_eigvals,
        c_eigvecs,
        c_rank_tol: 1e-12 * c_max,
    })
}

/// Draw a category from a probability row using one uniform variate;
/// zero-probability entries can never be drawn.
#[inline]
fn draw_categorical(probs: impl Iterator<Item = f64>, u: f64) -> usize {
    let mut acc = 0.0;
    let mut last_positive = 0;
    for (i, p) in probs.enumerate() {
        if p > 0.0 {
            last_positive = i;
            acc += p;
            if u < acc {
                return i;
            }
        }
    }
    last_positive
}

/// Sample one behavior transition from state `s`.
pub fn sample_transition<'a>(
    mdp: &FiniteMdp,
    policies: &PolicyPair,
    phi: &'a FeatureMap,
    s: usize,
    rng: &mut impl Rng,
) -> Transition<'a> {
    debug_assert!(s < mdp.n_states());
    let a = draw_categorical((0..mdp.n_actions()).map(|a| policies.mu[(s, a)]), rng.random());
    let s_next =
        draw_categorical((0..mdp.n_states()).map(|s2| mdp.prob(s, a, s2)), rng.random());
    Transition {
        s,
        a,
        s_next,
        r: mdp.reward(s, a, s_next),
        rho: policies.rho(s, a),
        phi_s: phi.row(s),
        phi_next: phi.row(s_next),
    }
}

/// Monte-Carlo estimate of the operator bundle along one stationary behavior
/// trajectory, with per-entry standard errors.
#[derive(Clone, Debug)]
pub struct BundleEstimate {
    pub c: Matrix,
    pub a_pi: Matrix,
    pub a_mu: Matrix,
    pub d_pi: Matrix,
    pub b: Vec<f64>,
    pub c_se: Matrix,
    pub a_pi_se: Matrix,
    pub a_mu_se: Matrix,
    pub d_pi_se: Matrix,
    pub b_se: Vec<f64>,
    pub n_samples: usize,
}

/// Welford accumulator over a fixed-shape block of sample means.
struct Welford {
    n: f64,
    mean: Vec<f64>,
    m2: Vec<f64>,
}

impl Welford {
    fn new(len: usize) -> Welford {
        Welford { n: 0.0, mean: vec![0.0; len], m2: vec![0.0; len] }
    }

    fn push(&mut self, idx: usize, x: f64) {
        let delta = x - self.mean[idx];
        self.mean[idx] += delta / self.n;
        self.m2[idx] += delta * (x - self.mean[idx]);
    }

    fn stderr(&self, idx: usize) -> f64 {
        if self.n < 2.0 {
            return f64::INFINITY;
        }
        (self.m2[idx] / (self.n * (self.n - 1.0))).sqrt()
    }
}

/// Estimate `C`, `A_pi`, `A_mu`, `D_pi`, `b` by averaging their sample
/// counterparts over `n_samples` transitions after [`MC_BURN_IN`] discarded
/// steps. Serves as the independent oracle for [`operator_bundle`].
pub fn monte_carlo_bundle(
    mdp: &FiniteMdp,
    policies: &PolicyPair,
    phi: &FeatureMap,
    n_samples: usize,
    rng: &mut impl Rng,
) -> BundleEstimate {
    assert!(n_samples >= 1, "need at least one sample");
    let d = phi.dim();
    let gamma = mdp.gamma();
    let mut s = 0usize;
    for _ in 0..MC_BURN_IN {
        s = sample_transition(mdp, policies, phi, s, rng).s_next;
    }
    let mut c_acc = Welford::new(d * d);
    let mut a_pi_acc = Welford::new(d * d);
    let mut a_mu_acc = Welford::new(d * d);
    let mut d_pi_acc = Welford::new(d * d);
    let mut b_acc = Welford::new(d);
    for _ in 0..n_samples {
        let t = sample_transition(mdp, policies, phi, s, rng);
        c_acc.n += 1.0;
        a_pi_acc.n += 1.0;
        a_mu_acc.n += 1.0;
        d_pi_acc.n += 1.0;
        b_acc.n += 1.0;
        for i in 0..d {
            let phi_i = t.phi_s[i];
            b_acc.push(i, t.rho * t.r * phi_i);
            for j in 0..d {
                let diff_j = t.phi_s[j] - gamma * t.phi_next[j];
                let k = i * d + j;
                c_acc.push(k, phi_i * t.phi_s[j]);
                a_pi_acc.push(k, t.rho * phi_i * diff_j);
                a_mu_acc.push(k, phi_i * diff_j);
                d_pi_acc.push(k, t.rho * gamma * t.phi_next[i] * t.phi_s[j]);
            }
        }
        s = t.s_next;
    }
    let as_matrix = |w: &Welford| Matrix::from_fn(d, d, |i, j| w.mean[i * d + j]);
    let se_matrix = |w: &Welford| Matrix::from_fn(d, d, |i, j| w.stderr(i * d + j));
    BundleEstimate {
        c: as_matrix(&c_acc),
        a_pi: as_matrix(&a_pi_acc),
        a_mu: as_matrix(&a_mu_acc),
        d_pi: as_matrix(&d_pi_acc),
        b: b_acc.mean.clone(),
        c_se: se_matrix(&c_acc),
        a_pi_se: se_matrix(&a_pi_acc),
        a_mu_se: se_matrix(&a_mu_acc),
        d_pi_se: se_matrix(&d_pi_acc),
        b_se: (0..d).map(|i| b_acc.stderr(i)).collect(),
        n_samples,
    }
}

/// Check `lhs = rhs` entrywise within `tol`.
pub fn matrices_close(lhs: &Matrix, rhs: &Matrix, tol: f64) -> bool {
    lhs.rows() == rhs.rows()
        && lhs.cols() == rhs.cols()
        && (0..lhs.rows())
            .all(|i| (0..lhs.cols()).all(|j| (lhs[(i, j)] - rhs[(i, j)]).abs() <= tol))
}

/// Solve `G x = rhs`, falling back to the zero (minimum-norm) solution when
/// `G` is singular but the right-hand side is exactly zero.
pub(crate) fn solve_or_zero_rhs(g: &Matrix, rhs: &[f64]) -> Result<Vec<f64>> {
    match lu_factor(g) {
        Ok(f) => Ok(f.solve(rhs)),
        Err(Error::SingularMatrix) if rhs.iter().all(|v| *v == 0.0) => Ok(vec![0.0; rhs.len()]),
        Err(e) => Err(e),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn two_state() -> (FiniteMdp, FeatureMap, PolicyPair) {
        let (s, a) = (2usize, 2usize);
        let mut p = vec![0.0; s * a * s];
        for st in 0..s {
            p[(st * a) * s] = 1.0; // action 0 -> state 0
            p[(st * a + 1) * s + 1] = 1.0; // action 1 -> state 1
        }
        let mdp = FiniteMdp::new(s, a, p, vec![0.0; s * a * s], 0.9).unwrap();
        let phi = FeatureMap::new(Matrix::from_rows(&[vec![1.0], vec![2.0]])).unwrap();
        let pi = Matrix::from_rows(&[vec![0.0, 1.0], vec![0.0, 1.0]]);
        let mu = Matrix::from_rows(&[vec![0.5, 0.5], vec![0.5, 0.5]]);
        (mdp, phi, PolicyPair::new(pi, mu).unwrap())
    }

    #[test]
    fn induced_chains_two_state() {
        let (mdp, _, pol) = two_state();
        let pm = induced_chain(&mdp, &pol.mu).unwrap();
        assert!(matrices_close(&pm, &Matrix::from_rows(&[vec![0.5, 0.5], vec![0.5, 0.5]]), 1e-15));
        let pp = induced_chain(&mdp, &pol.pi).unwrap();
        assert!(matrices_close(&pp, &Matrix::from_rows(&[vec![0.0, 1.0], vec![0.0, 1.0]]), 1e-15));
    }

    #[test]
    fn induced_chain_self_loop() {
        let mdp = FiniteMdp::new(1, 1, vec![1.0], vec![0.0], 0.5).unwrap();
        let p = induced_chain(&mdp, &Matrix::from_rows(&[vec![1.0]])).unwrap();
        assert_eq!(p[(0, 0)], 1.0);
    }

    #[test]
    fn stationary_simple_cases() {
        let p = Matrix::from_rows(&[vec![0.5, 0.5], vec![0.5, 0.5]]);
        let d = stationary_distribution(&p).unwrap();
        assert!((d[0] - 0.5).abs() < 1e-12 && (d[1] - 0.5).abs() < 1e-12);

        let swap = Matrix::from_rows(&[vec![0.0, 1.0], vec![1.0, 0.0]]);
        let d = stationary_distribution(&swap).unwrap();
        assert!((d[0] - 0.5).abs() < 1e-12 && (d[1] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn stationary_rejects_reducible() {
        let block = Matrix::from_rows(&[
            vec![1.0, 0.0, 0.0],
            vec![0.0, 0.5, 0.5],
            vec![0.0, 0.5, 0.5],
        ]);
        assert_eq!(stationary_distribution(&block).unwrap_err(), Error::NotIrreducible);
    }

    #[test]
    fn two_state_bundle_hand_values() {
        let (mdp, phi, pol) = two_state();
        let bundle = operator_bundle(&mdp, &phi, &pol).unwrap();
        assert!((bundle.c[(0, 0)] - 2.5).abs() < 1e-12);
        assert!((bundle.a_pi[(0, 0)] + 0.2).abs() < 1e-12);
        assert!((bundle.a_mu[(0, 0)] - 0.475).abs() < 1e-12);
        assert!((bundle.d_pi[(0, 0)] - 2.7).abs() < 1e-12);
        assert_eq!(bundle.b, vec![0.0]);
        assert_eq!(bundle.theta_star, vec![0.0]);
    }

    #[test]
    fn a_pi_plus_d_pi_transpose_equals_c() {
        let (mdp, phi, pol) = two_state();
        let bundle = operator_bundle(&mdp, &phi, &pol).unwrap();
        let sum = bundle.a_pi.add(&bundle.d_pi.transpose());
        assert!(matrices_close(&sum, &bundle.c, 1e-12));
    }

    #[test]
    fn rmspbe_two_state() {
        let (mdp, phi, pol) = two_state();
        let bundle = operator_bundle(&mdp, &phi, &pol).unwrap();
        let star = bundle.theta_star.clone();
        assert_eq!(bundle.rmspbe(&star), 0.0);
        // theta = 1: v = -A_pi = 0.2, rmspbe = sqrt(0.04 / 2.5).
        let r = bundle.rmspbe(&[1.0]);
        assert!((r - (0.04f64 / 2.5).sqrt()).abs() < 1e-12);
        assert!((r - 0.12649).abs() < 1e-5);
        // Homogeneity: doubling v doubles the metric.
        let r2 = bundle.rmspbe(&[2.0]);
        assert!((r2 - 2.0 * r).abs() < 1e-12);
    }

    #[test]
    fn sampled_ratios_two_state() {
        let (mdp, phi, pol) = two_state();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let mut seen = [false; 2];
        for _ in 0..200 {
            let t = sample_transition(&mdp, &pol, &phi, 0, &mut rng);
            if t.a == 1 {
                assert_eq!(t.s_next, 1);
                assert_eq!(t.rho, 2.0);
                seen[1] = true;
            } else {
                assert_eq!(t.s_next, 0);
                assert_eq!(t.rho, 0.0);
                seen[0] = true;
            }
            assert_eq!(t.phi_s, phi.row(0));
        }
        assert!(seen[0] && seen[1]);
    }

    #[test]
    fn on_policy_ratio_is_one() {
        let (mdp, phi, _) = two_state();
        let uniform = Matrix::from_rows(&[vec![0.5, 0.5], vec![0.5, 0.5]]);
        let pol = PolicyPair::new(uniform.clone(), uniform).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..50 {
            let t = sample_transition(&mdp, &pol, &phi, 1, &mut rng);
            assert_eq!(t.rho, 1.0);
        }
    }

    #[test]
    fn sampling_is_deterministic_per_seed() {
        let (mdp, phi, pol) = two_state();
        let run = |seed: u64| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut s = 0;
            let mut trace = Vec::new();
            for _ in 0..32 {
                let t = sample_transition(&mdp, &pol, &phi, s, &mut rng);
                trace.push((t.a, t.s_next));
                s = t.s_next;
            }
            trace
        };
        assert_eq!(run(11), run(11));
        assert_ne!(run(11), run(12));
    }

    #[test]
    fn monte_carlo_matches_exact_on_two_state() {
        let (mdp, phi, pol) = two_state();
        let bundle = operator_bundle(&mdp, &phi, &pol).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let est = monte_carlo_bundle(&mdp, &pol, &phi, 200_000, &mut rng);
        for (exact, got, se) in [
            (bundle.c[(0, 0)], est.c[(0, 0)], est.c_se[(0, 0)]),
            (bundle.a_pi[(0, 0)], est.a_pi[(0, 0)], est.a_pi_se[(0, 0)]),
            (bundle.a_mu[(0, 0)], est.a_mu[(0, 0)], est.a_mu_se[(0, 0)]),
            (bundle.d_pi[(0, 0)], est.d_pi[(0, 0)], est.d_pi_se[(0, 0)]),
        ] {
            assert!(
                (exact - got).abs() <= 5.0 * se.max(1e-12),
                "exact {exact} vs estimate {got} (se {se})"
            );
        }
        // Zero rewards make the b estimate exactly zero.
        assert_eq!(est.b, vec![0.0]);
    }

    #[test]
    fn monte_carlo_on_policy_a_pi_equals_a_mu() {
        let (mdp, phi, _) = two_state();
        let uniform = Matrix::from_rows(&[vec![0.5, 0.5], vec![0.5, 0.5]]);
        let pol = PolicyPair::new(uniform.clone(), uniform).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let est = monte_carlo_bundle(&mdp, &pol, &phi, 5_000, &mut rng);
        assert!(matrices_close(&est.a_pi, &est.a_mu, 0.0));
    }

    #[test]
    fn coverage_violation_rejected() {
        let pi = Matrix::from_rows(&[vec![0.0, 1.0]]);
        let mu = Matrix::from_rows(&[vec![1.0, 0.0]]);
        assert!(PolicyPair::new(pi, mu).is_err());
    }

    #[test]
    fn feature_map_rank_check() {
        let fine = Matrix::from_rows(&[vec![1.0, 0.0], vec![0.0, 1.0], vec![1.0, 1.0]]);
        assert!(FeatureMap::new(fine).is_ok());
        let deficient = Matrix::from_rows(&[vec![1.0, 2.0], vec![2.0, 4.0]]);
        assert!(FeatureMap::new(deficient.clone()).is_err());
        let fm = FeatureMap::aliased(deficient).unwrap();
        assert!(!fm.full_column_rank());
    }
}
