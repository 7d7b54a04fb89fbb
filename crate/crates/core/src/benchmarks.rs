//! The four off-policy prediction benchmarks, fully instantiated: MDP,
//! feature map, policy pair, initial parameters and default horizon.
//!
//! | name        | chain states | d | gamma | rho values      |
//! |-------------|--------------|---|-------|-----------------|
//! | two_state   | 2            | 1 | 0.9   | {0, 2}          |
//! | baird       | 7            | 8 | 0.99  | {0, 7}          |
//! | random_walk | 5 (+2 aux)   | 5 | 0.99  | {0.8, 1.2} (+1) |
//! | boyan       | 13           | 4 | 0.9   | {0.8, 1.2} (+1) |
//!
//! `random_walk` models its two terminals as explicit zero-feature states
//! that reset to the center, and `boyan`'s tail states 11 and 12 transition
//! deterministically; those reset transitions carry importance ratio 1
//! (there is no action choice), which is why 1 shows up alongside the
//! published ratio range.

use std::collections::BTreeMap;
use std::path::Path;

use crate::mdp::{FeatureMap, FiniteMdp, PolicyPair};
use crate::numkit::Matrix;
use crate::{Error, Result};

/// A fully instantiated benchmark environment.
#[derive(Clone, Debug)]
pub struct BenchmarkSpec {
    pub name: String,
    pub mdp: FiniteMdp,
    pub phi: FeatureMap,
    pub policies: PolicyPair,
    pub theta0: Vec<f64>,
    pub w0: Vec<f64>,
    pub start_state: usize,
    pub default_horizon: usize,
    /// Every importance ratio a behavior trajectory can realize.
    pub rho_support: Vec<f64>,
}

/// Names of the built-in benchmarks, in canonical order.
pub fn list() -> Vec<&'static str> {
    vec!["two_state", "baird", "random_walk", "boyan"]
}

/// Build a benchmark by name.
pub fn build(name: &str) -> Result<BenchmarkSpec> {
    match name {
        "two_state" => two_state(),
        "baird" => baird(),
        "random_walk" => random_walk(),
        "boyan" => boyan(),
        other => Err(Error::UnknownBenchmark(other.to_string())),
    }
}

/// Dense tensor filler for `[s][a][s']` layouts.
struct Tensor {
    n_states: usize,
    n_actions: usize,
    data: Vec<f64>,
}

impl Tensor {
    fn zeros(n_states: usize, n_actions: usize) -> Tensor {
        Tensor { n_states, n_actions, data: vec![0.0; n_states * n_actions * n_states] }
    }

    fn set(&mut self, s: usize, a: usize, s2: usize, v: f64) {
        self.data[(s * self.n_actions + a) * self.n_states + s2] = v;
    }
}

/// Two states with scalar features 1 and 2, zero reward, gamma 0.9.
/// Action 0 leads to state 0 and action 1 to state 1 from anywhere; the
/// behavior policy is uniform while the target policy always takes action 1,
/// so rho is 0 or 2. theta starts at 1 because theta* = 0 -- starting at the
/// solution would hide the transient entirely.
fn two_state() -> Result<BenchmarkSpec> {
    let (ns, na) = (2, 2);
    let mut p = Tensor::zeros(ns, na);
    for s in 0..ns {
        p.set(s, 0, 0, 1.0);
        p.set(s, 1, 1, 1.0);
    }
    let mdp = FiniteMdp::new(ns, na, p.data, vec![0.0; ns * na * ns], 0.9)?;
    let phi = FeatureMap::new(Matrix::from_rows(&[vec![1.0], vec![2.0]]))?;
    let pi = Matrix::from_rows(&[vec![0.0, 1.0], vec![0.0, 1.0]]);
    let mu = Matrix::from_rows(&[vec![0.5, 0.5], vec![0.5, 0.5]]);
    Ok(BenchmarkSpec {
        name: "two_state".into(),
        mdp,
        phi,
        policies: PolicyPair::new(pi, mu)?,
        theta0: vec![1.0],
        w0: vec![0.0],
        start_state: 0,
        default_horizon: 3000,
        rho_support: vec![0.0, 2.0],
    })
}

/// Baird's counterexample: six upper states plus one lower state, eight
/// deliberately aliased features. Action 0 is the dashed meta-action (lands
/// uniformly on an upper state, behavior probability 6/7), action 1 is the
/// solid action into the lower state (behavior probability 1/7, always taken
/// by the target policy), so rho is 0 or 7.
fn baird() -> Result<BenchmarkSpec> {
    let (ns, na) = (7, 2);
    let mut p = Tensor::zeros(ns, na);
    for s in 0..ns {
        for upper in 0..6 {
            p.set(s, 0, upper, 1.0 / 6.0);
        }
        p.set(s, 1, 6, 1.0);
    }
    let mdp = FiniteMdp::new(ns, na, p.data, vec![0.0; ns * na * ns], 0.99)?;
    let mut phi = Matrix::zeros(7, 8);
    for i in 0..6 {
        phi[(i, i)] = 2.0;
        phi[(i, 7)] = 1.0;
    }
    phi[(6, 6)] = 1.0;
    phi[(6, 7)] = 2.0;
    // 7 states cannot span 8 feature columns: this representation is
    // rank-deficient on purpose.
    let phi = FeatureMap::aliased(phi)?;
    let pi = Matrix::from_fn(ns, na, |_, a| if a == 1 { 1.0 } else { 0.0 });
    let mu = Matrix::from_fn(ns, na, |_, a| if a == 0 { 6.0 / 7.0 } else { 1.0 / 7.0 });
    Ok(BenchmarkSpec {
        name: "baird".into(),
        mdp,
        phi,
        policies: PolicyPair::new(pi, mu)?,
        theta0: vec![1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 10.0, 1.0],
        w0: vec![0.0; 8],
        start_state: 0,
        default_horizon: 5000,
        rho_support: vec![0.0, 7.0],
    })
}

/// Five-state random walk with one-hot features and two explicit zero-feature
/// terminals (states 5 and 6) that reset deterministically to the center.
/// Reaching the right terminal pays +1. Behavior is uniform, the target
/// policy is biased right (0.6), so interior ratios are 0.8 and 1.2.
fn random_walk() -> Result<BenchmarkSpec> {
    let (ns, na) = (7, 2);
    let (left_term, right_term, center) = (5, 6, 2);
    let mut p = Tensor::zeros(ns, na);
    let mut r = Tensor::zeros(ns, na);
    for s in 0..5 {
        if s == 0 {
            p.set(s, 0, left_term, 1.0);
        } else {
            p.set(s, 0, s - 1, 1.0);
        }
        if s == 4 {
            p.set(s, 1, right_term, 1.0);
            r.set(s, 1, right_term, 1.0);
        } else {
            p.set(s, 1, s + 1, 1.0);
        }
    }
    for term in [left_term, right_term] {
        p.set(term, 0, center, 1.0);
        p.set(term, 1, center, 1.0);
    }
    let mdp = FiniteMdp::new(ns, na, p.data, r.data, 0.99)?;
    let phi = FeatureMap::new(Matrix::from_fn(ns, 5, |s, j| {
        if s < 5 && s == j {
            1.0
        } else {
            0.0
        }
    }))?;
    let pi = Matrix::from_fn(ns, na, |s, a| match (s < 5, a) {
        (true, 0) => 0.4,
        (true, 1) => 0.6,
        _ => 0.5,
    });
    let mu = Matrix::from_fn(ns, na, |_, _| 0.5);
    Ok(BenchmarkSpec {
        name: "random_walk".into(),
        mdp,
        phi,
        policies: PolicyPair::new(pi, mu)?,
        theta0: vec![0.0; 5],
        w0: vec![0.0; 5],
        start_state: center,
        default_horizon: 3000,
        rho_support: vec![0.8, 1.0, 1.2],
    })
}

/// Boyan chain: thirteen states with four-dimensional interpolated features
/// anchored at states 0, 4, 8 and 12. Interior states advance one or two
/// steps (-3 reward per transition out of states 0..=11); state 11 moves
/// deterministically to 12 and state 12 resets to 0 with zero reward as a
/// continuing transition. The target policy favors the two-step action (0.6).
fn boyan() -> Result<BenchmarkSpec> {
    let (ns, na) = (13, 2);
    let mut p = Tensor::zeros(ns, na);
    let mut r = Tensor::zeros(ns, na);
    for s in 0..11 {
        p.set(s, 0, s + 1, 1.0);
        r.set(s, 0, s + 1, -3.0);
        let two = (s + 2).min(12);
        p.set(s, 1, two, 1.0);
        r.set(s, 1, two, -3.0);
    }
    for a in 0..na {
        p.set(11, a, 12, 1.0);
        r.set(11, a, 12, -3.0);
        p.set(12, a, 0, 1.0);
    }
    let mdp = FiniteMdp::new(ns, na, p.data, r.data, 0.9)?;
    let anchors = [0usize, 4, 8, 12];
    let phi = FeatureMap::new(Matrix::from_fn(ns, 4, |s, j| {
        let a = anchors[j];
        if s == a {
            1.0
        } else if a < s && s < a + 4 {
            (a + 4 - s) as f64 / 4.0
        } else if a >= 4 && a - 4 < s && s < a {
            (s - (a - 4)) as f64 / 4.0
        } else {
            0.0
        }
    }))?;
    let pi = Matrix::from_fn(ns, na, |s, a| match (s < 11, a) {
        (true, 0) => 0.4,
        (true, 1) => 0.6,
        _ => 0.5,
    });
    let mu = Matrix::from_fn(ns, na, |_, _| 0.5);
    Ok(BenchmarkSpec {
        name: "boyan".into(),
        mdp,
        phi,
        policies: PolicyPair::new(pi, mu)?,
        theta0: vec![0.0; 4],
        w0: vec![0.0; 4],
        start_state: 0,
        // 10k steps leave the tuned regularized learners mid-transient in
        // the last-50% window; 20k stabilizes the steady-state average.
        default_horizon: 20000,
        rho_support: vec![0.8, 1.0, 1.2],
    })
}

/// Built-in benchmarks plus any environments loaded from files, preserving a
/// deterministic order.
#[derive(Default)]
pub struct Registry {
    extras: Vec<BenchmarkSpec>,
}

impl Registry {
    pub fn new() -> Registry {
        Registry::default()
    }

    /// Register an extra environment loaded from a file.
    pub fn register(&mut self, spec: BenchmarkSpec) -> Result<()> {
        if list().contains(&spec.name.as_str()) || self.extras.iter().any(|e| e.name == spec.name)
        {
            return Err(Error::invalid(format!("environment `{}` already exists", spec.name)));
        }
        self.extras.push(spec);
        Ok(())
    }

    pub fn load_file(&mut self, path: &Path) -> Result<()> {
        self.register(load_env_file(path)?)
    }

    /// Built-in names followed by loaded extras, in registration order.
    pub fn names(&self) -> Vec<String> {
        let mut out: Vec<String> = list().iter().map(|s| s.to_string()).collect();
        out.extend(self.extras.iter().map(|e| e.name.clone()));
        out
    }

    pub fn get(&self, name: &str) -> Result<BenchmarkSpec> {
        if let Some(spec) = self.extras.iter().find(|e| e.name == name) {
            return Ok(spec.clone());
        }
        build(name)
    }
}

/// Load a custom environment from the key-value text format.
///
/// The format is line based; `#` starts a comment. Scalar keys take
/// `key value` or `key : value`; row keys carry indices before the colon and
/// whitespace-separated numbers after it:
///
/// ```text
/// name my_env
/// states 2
/// actions 2
/// gamma 0.9
/// P 0 0 : 1.0 0.0        # P[s][a] row over s'
/// R 0 0 : 0.0 0.0        # optional, defaults to zero
/// pi 0   : 0.0 1.0       # target policy row for state 0
/// mu 0   : 0.5 0.5       # behavior policy row for state 0
/// phi 0  : 1.0           # feature row for state 0
/// theta0 : 1.0           # optional, defaults to zero
/// start 0                # optional, defaults to 0
/// horizon 3000           # optional, defaults to 3000
/// ```
pub fn load_env_file(path: &Path) -> Result<BenchmarkSpec> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::invalid(format!("cannot read {}: {e}", path.display())))?;
    parse_env_text(&text)
}

/// Parse the env text format; see [`load_env_file`].
pub fn parse_env_text(text: &str) -> Result<BenchmarkSpec> {
    let mut name = None;
    let mut n_states = None;
    let mut n_actions = None;
    let mut gamma = None;
    let mut start = 0usize;
    let mut horizon = 3000usize;
    let mut theta0: Option<Vec<f64>> = None;
    let mut p_rows: BTreeMap<(usize, usize), Vec<f64>> = BTreeMap::new();
    let mut r_rows: BTreeMap<(usize, usize), Vec<f64>> = BTreeMap::new();
    let mut pi_rows: BTreeMap<usize, Vec<f64>> = BTreeMap::new();
    let mut mu_rows: BTreeMap<usize, Vec<f64>> = BTreeMap::new();
    let mut phi_rows: BTreeMap<usize, Vec<f64>> = BTreeMap::new();

    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let fail = |msg: &str| Error::invalid(format!("env file line {}: {msg}", lineno + 1));
        let (head, values) = match line.split_once(':') {
            Some((h, v)) => (h.trim(), Some(v.trim())),
            None => (line, None),
        };
        let mut head_parts = head.split_whitespace();
        let key = head_parts.next().ok_or_else(|| fail("empty key"))?;
        let trailing: Vec<&str> = head_parts.collect();
        // Scalar keys accept `key value` or `key : value`.
        let scalar = |what: &str| -> Result<String> {
            if let Some(v) = values {
                if let Some(first) = v.split_whitespace().next() {
                    return Ok(first.to_string());
                }
            }
            trailing
                .first()
                .map(|s| s.to_string())
                .ok_or_else(|| fail(&format!("`{what}` expects a value")))
        };
        let parse_row = |v: Option<&str>| -> Result<Vec<f64>> {
            v.ok_or_else(|| fail("expected `: v1 v2 ...`"))?
                .split_whitespace()
                .map(|t| t.parse::<f64>().map_err(|_| fail(&format!("bad number `{t}`"))))
                .collect()
        };
        let parse_indices = |trailing: &[&str]| -> Result<Vec<usize>> {
            trailing
                .iter()
                .map(|t| t.parse().map_err(|_| fail(&format!("bad index `{t}`"))))
                .collect()
        };
        match key {
            "name" => name = Some(scalar("name")?),
            "states" => {
                n_states = Some(scalar("states")?.parse().map_err(|_| fail("bad state count"))?)
            }
            "actions" => {
                n_actions =
                    Some(scalar("actions")?.parse().map_err(|_| fail("bad action count"))?)
            }
            "gamma" => gamma = Some(scalar("gamma")?.parse().map_err(|_| fail("bad gamma"))?),
            "start" => start = scalar("start")?.parse().map_err(|_| fail("bad start"))?,
            "horizon" => horizon = scalar("horizon")?.parse().map_err(|_| fail("bad horizon"))?,
            "theta0" => theta0 = Some(parse_row(values)?),
            "P" | "R" => {
                let idx = parse_indices(&trailing)?;
                if idx.len() != 2 {
                    return Err(fail("usage: P <s> <a> : <row over s'>"));
                }
                let row = parse_row(values)?;
                if key == "P" {
                    p_rows.insert((idx[0], idx[1]), row);
                } else {
                    r_rows.insert((idx[0], idx[1]), row);
                }
            }
            "pi" | "mu" | "phi" => {
                let idx = parse_indices(&trailing)?;
                if idx.len() != 1 {
                    return Err(fail(&format!("usage: {key} <s> : <row>")));
                }
                let row = parse_row(values)?;
                match key {
                    "pi" => pi_rows.insert(idx[0], row),
                    "mu" => mu_rows.insert(idx[0], row),
                    _ => phi_rows.insert(idx[0], row),
                };
            }
            other => return Err(fail(&format!("unrecognized key `{other}`"))),
        }
    }

    let name = name.ok_or_else(|| Error::invalid("env file: missing `name`"))?;
    let ns: usize = n_states.ok_or_else(|| Error::invalid("env file: missing `states`"))?;
    let na: usize = n_actions.ok_or_else(|| Error::invalid("env file: missing `actions`"))?;
    let gamma: f64 = gamma.ok_or_else(|| Error::invalid("env file: missing `gamma`"))?;

    let collect_rows = |rows: &BTreeMap<usize, Vec<f64>>, what: &str, cols: usize| {
        let mut out = Vec::with_capacity(ns);
        for s in 0..ns {
            let row = rows
                .get(&s)
                .ok_or_else(|| Error::invalid(format!("env file: missing `{what} {s}`")))?;
            if cols > 0 && row.len() != cols {
                return Err(Error::invalid(format!(
                    "env file: `{what} {s}` has {} entries, expected {cols}",
                    row.len()
                )));
            }
            out.push(row.clone());
        }
        Ok(out)
    };

    let mut p = vec![0.0; ns * na * ns];
    let mut r = vec![0.0; ns * na * ns];
    for s in 0..ns {
        for a in 0..na {
            let row = p_rows
                .get(&(s, a))
                .ok_or_else(|| Error::invalid(format!("env file: missing `P {s} {a}`")))?;
            if row.len() != ns {
                return Err(Error::invalid(format!(
                    "env file: `P {s} {a}` has {} entries, expected {ns}",
                    row.len()
                )));
            }
            for (s2, v) in row.iter().enumerate() {
                p[(s * na + a) * ns + s2] = *v;
            }
            if let Some(rrow) = r_rows.get(&(s, a)) {
                if rrow.len() != ns {
                    return Err(Error::invalid(format!(
                        "env file: `R {s} {a}` has {} entries, expected {ns}",
                        rrow.len()
                    )));
                }
                for (s2, v) in rrow.iter().enumerate() {
                    r[(s * na + a) * ns + s2] = *v;
                }
            }
        }
    }
    let mdp = FiniteMdp::new(ns, na, p, r, gamma)?;
    let pi = Matrix::from_rows(&collect_rows(&pi_rows, "pi", na)?);
    let mu = Matrix::from_rows(&collect_rows(&mu_rows, "mu", na)?);
    let policies = PolicyPair::new(pi, mu)?;
    let phi_vecs = collect_rows(&phi_rows, "phi", 0)?;
    let d = phi_vecs[0].len();
    if phi_vecs.iter().any(|row| row.len() != d) {
        return Err(Error::invalid("env file: phi rows have inconsistent lengths"));
    }
    let phi = FeatureMap::aliased(Matrix::from_rows(&phi_vecs))?;
    let theta0 = theta0.unwrap_or_else(|| vec![0.0; d]);
    if theta0.len() != d {
        return Err(Error::invalid(format!(
            "env file: theta0 has {} entries, expected {d}",
            theta0.len()
        )));
    }
    if start >= ns {
        return Err(Error::invalid(format!("env file: start state {start} out of range")));
    }
    let mut support: Vec<f64> = Vec::new();
    for s in 0..ns {
        for a in 0..na {
            if policies.mu[(s, a)] > 0.0 {
                let rho = policies.rho(s, a);
                if !support.iter().any(|v| (*v - rho).abs() < 1e-12) {
                    support.push(rho);
                }
            }
        }
    }
    support.sort_by(|x, y| x.partial_cmp(y).unwrap());
    Ok(BenchmarkSpec {
        name,
        mdp,
        phi,
        policies,
        theta0,
        w0: vec![0.0; d],
        start_state: start,
        default_horizon: horizon,
        rho_support: support,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mdp::{operator_bundle, sample_transition};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn list_is_stable() {
        assert_eq!(list(), vec!["two_state", "baird", "random_walk", "boyan"]);
        assert_eq!(list(), list());
    }

    #[test]
    fn unknown_name_rejected() {
        assert!(matches!(build("nope"), Err(Error::UnknownBenchmark(_))));
    }

    #[test]
    fn two_state_shape() {
        let spec = build("two_state").unwrap();
        assert_eq!(spec.mdp.n_states(), 2);
        assert_eq!(spec.phi.dim(), 1);
        assert_eq!(spec.mdp.gamma(), 0.9);
        assert_eq!(spec.phi.row(0), &[1.0]);
        assert_eq!(spec.phi.row(1), &[2.0]);
        assert_eq!(spec.theta0, vec![1.0]);
    }

    #[test]
    fn table_shapes_match() {
        // (feature-bearing states, d, gamma) per the published configuration;
        // the random walk carries two auxiliary zero-feature terminals on top
        // of its five feature-bearing states.
        let expect = [
            ("two_state", 2usize, 1usize, 0.9),
            ("baird", 7, 8, 0.99),
            ("random_walk", 5, 5, 0.99),
            ("boyan", 13, 4, 0.9),
        ];
        for (name, feature_states, d, gamma) in expect {
            let spec = build(name).unwrap();
            let nonzero_rows = (0..spec.mdp.n_states())
                .filter(|s| spec.phi.row(*s).iter().any(|v| *v != 0.0))
                .count();
            assert_eq!(nonzero_rows, feature_states, "{name}");
            assert_eq!(spec.phi.dim(), d, "{name}");
            assert_eq!(spec.mdp.gamma(), gamma, "{name}");
            assert_eq!(spec.theta0.len(), d, "{name}");
            assert_eq!(spec.w0, vec![0.0; d], "{name}");
        }
    }

    #[test]
    fn sampled_ratios_stay_in_support() {
        for name in list() {
            let spec = build(name).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(123);
            let mut s = spec.start_state;
            for _ in 0..100_000 {
                let t = sample_transition(&spec.mdp, &spec.policies, &spec.phi, s, &mut rng);
                assert!(
                    spec.rho_support.iter().any(|v| (*v - t.rho).abs() < 1e-12),
                    "{name}: rho {} outside {:?}",
                    t.rho,
                    spec.rho_support
                );
                s = t.s_next;
            }
        }
    }

    #[test]
    fn baird_ratios_include_seven() {
        let spec = build("baird").unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let mut seen_seven = false;
        let mut s = 0;
        for _ in 0..1000 {
            let t = sample_transition(&spec.mdp, &spec.policies, &spec.phi, s, &mut rng);
            if t.rho == 7.0 {
                assert_eq!(t.s_next, 6, "solid action must land in the lower state");
                seen_seven = true;
            }
            s = t.s_next;
        }
        assert!(seen_seven);
    }

    #[test]
    fn boyan_feature_interpolation() {
        let spec = build("boyan").unwrap();
        assert_eq!(spec.phi.row(0), &[1.0, 0.0, 0.0, 0.0]);
        assert_eq!(spec.phi.row(2), &[0.5, 0.5, 0.0, 0.0]);
        assert_eq!(spec.phi.row(1), &[0.75, 0.25, 0.0, 0.0]);
        assert_eq!(spec.phi.row(4), &[0.0, 1.0, 0.0, 0.0]);
        assert_eq!(spec.phi.row(11), &[0.0, 0.0, 0.25, 0.75]);
        assert_eq!(spec.phi.row(12), &[0.0, 0.0, 0.0, 1.0]);
    }

    #[test]
    fn feature_rank_status() {
        // Baird's representation is aliased by construction; the rest are
        // full column rank.
        for name in list() {
            let spec = build(name).unwrap();
            assert_eq!(spec.phi.full_column_rank(), name != "baird", "{name}");
        }
    }

    #[test]
    fn zero_reward_fixed_points() {
        for name in ["two_state", "baird"] {
            let spec = build(name).unwrap();
            let bundle = operator_bundle(&spec.mdp, &spec.phi, &spec.policies).unwrap();
            assert!(bundle.b.iter().all(|v| *v == 0.0), "{name}");
            assert!(bundle.theta_star.iter().all(|v| *v == 0.0), "{name}");
        }
    }

    #[test]
    fn registry_lists_extras_after_builtins() {
        let mut reg = Registry::new();
        assert_eq!(reg.names(), vec!["two_state", "baird", "random_walk", "boyan"]);
        let custom = parse_env_text(
            "name custom\nstates 1\nactions 1\ngamma 0.5\nP 0 0 : 1\npi 0 : 1\nmu 0 : 1\nphi 0 : 1\n",
        )
        .unwrap();
        reg.register(custom).unwrap();
        assert_eq!(reg.names().last().unwrap(), "custom");
        assert!(reg.get("custom").is_ok());
        assert!(reg.get("missing").is_err());
    }

    #[test]
    fn env_text_round_trip_two_state() {
        let text = "\
name twin
states 2
actions 2
gamma 0.9
P 0 0 : 1 0
P 0 1 : 0 1
P 1 0 : 1 0
P 1 1 : 0 1
pi 0 : 0 1
pi 1 : 0 1
mu 0 : 0.5 0.5
mu 1 : 0.5 0.5
phi 0 : 1
phi 1 : 2
theta0 : 1
horizon 500
";
        let spec = parse_env_text(text).unwrap();
        assert_eq!(spec.name, "twin");
        assert_eq!(spec.default_horizon, 500);
        assert_eq!(spec.rho_support, vec![0.0, 2.0]);
        let bundle = operator_bundle(&spec.mdp, &spec.phi, &spec.policies).unwrap();
        assert!((bundle.c[(0, 0)] - 2.5).abs() < 1e-12);
    }

    #[test]
    fn env_text_errors_are_descriptive() {
        let err = parse_env_text("states 1\n").unwrap_err();
        assert!(matches!(err, Error::Invalid(_)));
        let err =
            parse_env_text("name x\nstates 1\nactions 1\ngamma 0.5\nP 0 0 : 0.5 0.5\n").unwrap_err();
        assert!(matches!(err, Error::Invalid(_) | Error::DimensionMismatch(_)));
    }
}
