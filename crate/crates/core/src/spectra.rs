//! Exact mean-system construction for the corrected learners and the three
//! numerical checks connecting theory to experiment: fixed-point
//! preservation, Hurwitz stability margins, and deterministic speed factors.
//!
//! For auxiliary matrix `M` and gain ratio `lambda`, the coupled mean
//! recursion of (theta, w) is `z' = z + alpha (G z + h)` with
//!
//! ```text
//! G = [ -A_pi        -D_pi     ]        h = ( b )
//!     [ -lambda A_pi -lambda M ]            ( lambda b )
//! ```
//!
//! `M = C + eta I` covers TDC/TDRC and `M = A_mu + beta I` covers the
//! behavior-aware variants. The asymptotic per-step factor of the
//! deterministic error recursion `e' = (I + alpha G) e` is
//! `q(alpha) = rho(I + alpha G)`.

use crate::mdp::OperatorBundle;
use crate::numkit::{hurwitz_margin, operator_norm_2, smallest_singular_value, Matrix};
use crate::{Error, Result};

/// Which family the auxiliary matrix comes from.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CorrectionFamily {
    /// `M = C + reg I` (TDC, TDRC).
    Covariance,
    /// `M = A_mu + reg I` (BA-TDC, BA-TDRC).
    Behavior,
}

/// Fixed-point preservation holds when `sigma_min(M_A - D_pi)` clears this.
pub const PRESERVATION_TOL: f64 = 1e-10;

/// Two best-q values closer than this are treated as equal when deciding the
/// speed flag; the comparison is otherwise pure eigenvalue noise on systems
/// whose exact factors coincide (a singular `A_pi` pins both at exactly 1).
pub const SPEED_NOISE_GUARD: f64 = 1e-9;

/// Auxiliary matrix `C + reg I` or `A_mu + reg I`.
pub fn auxiliary_matrix(bundle: &OperatorBundle, family: CorrectionFamily, reg: f64) -> Matrix {
    assert!(reg >= 0.0, "regularizer must be nonnegative");
    match family {
        CorrectionFamily::Covariance => bundle.c.add_scaled_identity(reg),
        CorrectionFamily::Behavior => bundle.a_mu.add_scaled_identity(reg),
    }
}

/// The coupled mean system for one auxiliary matrix and gain ratio.
#[derive(Clone, Debug)]
pub struct MeanSystem {
    pub m: Matrix,
    pub lambda: f64,
    pub g: Matrix,
    pub h: Vec<f64>,
}

/// Assemble the block system for auxiliary matrix `m` and gain ratio
/// `lambda > 0`.
pub fn mean_system(bundle: &OperatorBundle, m: &Matrix, lambda: f64) -> MeanSystem {
    assert!(lambda > 0.0, "gain ratio must be positive");
    let d = bundle.dim();
    assert_eq!((m.rows(), m.cols()), (d, d), "auxiliary matrix shape mismatch");
    let mut g = Matrix::zeros(2 * d, 2 * d);
    for i in 0..d {
        for j in 0..d {
            g[(i, j)] = -bundle.a_pi[(i, j)];
            g[(i, d + j)] = -bundle.d_pi[(i, j)];
            g[(d + i, j)] = -lambda * bundle.a_pi[(i, j)];
            g[(d + i, d + j)] = -lambda * m[(i, j)];
        }
    }
    let mut h = vec![0.0; 2 * d];
    for i in 0..d {
        h[i] = bundle.b[i];
        h[d + i] = lambda * bundle.b[i];
    }
    MeanSystem { m: m.clone(), lambda, g, h }
}

/// Outcome of the fixed-point preservation check for the behavior-aware
/// auxiliary equation at regularizer `beta`.
#[derive(Clone, Copy, Debug)]
pub struct FixedPointCheck {
    /// `sigma_min(A_mu + beta I - D_pi)`: positive means the equilibrium
    /// forces `w = 0` and therefore preserves the TD fixed point.
    pub sigma_min: f64,
    /// Weyl lower bound `beta - ||D_pi - A_mu||_2`; sufficient, not
    /// necessary.
    pub weyl_lower: f64,
    pub preserved: bool,
}

pub fn fixed_point_check(bundle: &OperatorBundle, beta: f64) -> Result<FixedPointCheck> {
    let m_a = auxiliary_matrix(bundle, CorrectionFamily::Behavior, beta);
    let diff = m_a.sub(&bundle.d_pi);
    let sigma_min = smallest_singular_value(&diff)?;
    let weyl_lower = beta - operator_norm_2(&bundle.d_pi.sub(&bundle.a_mu))?;
    Ok(FixedPointCheck { sigma_min, weyl_lower, preserved: sigma_min > PRESERVATION_TOL })
}

/// Equilibrium of the mean system: solves `G z + h = 0`.
///
/// When `G` is singular with `h = 0` (zero-reward environments with singular
/// `A_pi`), the zero vector is returned as the minimum-norm equilibrium.
pub fn equilibrium(ms: &MeanSystem) -> Result<Vec<f64>> {
    let neg_h: Vec<f64> = ms.h.iter().map(|v| -v).collect();
    crate::mdp::solve_or_zero_rhs(&ms.g, &neg_h)
}

/// Exact asymptotic linear factor `rho(I + alpha G)` of the deterministic
/// mean error recursion.
pub fn q_factor(ms: &MeanSystem, alpha: f64) -> Result<f64> {
    assert!(alpha > 0.0, "step size must be positive");
    let r = Matrix::identity(ms.g.rows()).add(&ms.g.scale(alpha));
    crate::numkit::spectral_radius(&r)
}

/// Best factor over a step-size grid.
#[derive(Clone, Copy, Debug)]
pub struct BestQ {
    pub q: f64,
    pub alpha: f64,
    /// True when some grid step achieved `q < 1`.
    pub admissible: bool,
}

/// Minimize `q_factor` over the grid, preferring admissible (`q < 1`)
/// entries; without any, the overall minimum is reported with
/// `admissible = false`.
pub fn best_q(ms: &MeanSystem, grid: &[f64]) -> Result<BestQ> {
    assert!(!grid.is_empty(), "step-size grid must be nonempty");
    let mut best: Option<BestQ> = None;
    for &alpha in grid {
        let q = q_factor(ms, alpha)?;
        let better = match &best {
            None => true,
            Some(b) => q < b.q,
        };
        if better {
            best = Some(BestQ { q, alpha, admissible: q < 1.0 });
        }
    }
    Ok(best.unwrap())
}

/// Log-spaced analysis grid `10^(k/8)` for `k = -32..=0`, i.e. 1e-4 up to
/// exactly 1.0. The cap at 1.0 matters: the strongest observed factors sit
/// right at the boundary.
pub fn default_alpha_grid() -> Vec<f64> {
    (-32..=0).map(|k| 10f64.powf(k as f64 / 8.0)).collect()
}

/// Error-norm trace of the deterministic recursion
/// `e_{t+1} = (I + alpha G) e_t` started from `z0 - equilibrium`.
pub fn mean_recursion_trace(
    ms: &MeanSystem,
    alpha: f64,
    z0: &[f64],
    steps: usize,
) -> Result<Vec<f64>> {
    assert!(steps >= 1, "need at least one step");
    assert_eq!(z0.len(), ms.g.rows(), "z0 length mismatch");
    let star = equilibrium(ms)?;
    let mut e: Vec<f64> = z0.iter().zip(&star).map(|(z, s)| z - s).collect();
    let norm = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>().sqrt();
    let mut out = Vec::with_capacity(steps + 1);
    out.push(norm(&e));
    for _ in 0..steps {
        let ge = ms.g.matvec(&e);
        for i in 0..e.len() {
            e[i] += alpha * ge[i];
        }
        out.push(norm(&e));
    }
    Ok(out)
}

/// Tuned analysis parameters for one environment: the covariance-family pair
/// `(eta, lambda_c)` and the behavior-family pair `(beta, lambda_a)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TunedParams {
    pub eta: f64,
    pub lambda_c: f64,
    pub beta: f64,
    pub lambda_a: f64,
}

/// One row of the mean-operator verification table.
#[derive(Clone, Debug)]
pub struct AnalysisRow {
    pub env: String,
    pub sigma_min_fp: f64,
    pub margin_tdrc: f64,
    pub margin_ba: f64,
    pub best_q_c: f64,
    pub best_q_a: f64,
    pub best_alpha_c: f64,
    pub best_alpha_a: f64,
    pub speed_holds: bool,
    pub interpretation: String,
}

/// Compute the verification row for one environment under tuned parameters.
pub fn analysis_row(
    env: &str,
    bundle: &OperatorBundle,
    tuned: &TunedParams,
    grid: &[f64],
) -> Result<AnalysisRow> {
    let fp = fixed_point_check(bundle, tuned.beta)?;
    let m_c = auxiliary_matrix(bundle, CorrectionFamily::Covariance, tuned.eta);
    let m_a = auxiliary_matrix(bundle, CorrectionFamily::Behavior, tuned.beta);
    let sys_c = mean_system(bundle, &m_c, tuned.lambda_c);
    let sys_a = mean_system(bundle, &m_a, tuned.lambda_a);
    let margin_tdrc = hurwitz_margin(&sys_c.g)?;
    let margin_ba = hurwitz_margin(&sys_a.g)?;
    let qc = best_q(&sys_c, grid)?;
    let qa = best_q(&sys_a, grid)?;
    let speed_holds = qa.q + SPEED_NOISE_GUARD < qc.q;
    let interpretation = if margin_ba <= 1e-12 {
        "BA near-critical"
    } else if speed_holds {
        "BA speed advantage"
    } else {
        "speed condition not verified"
    };
    Ok(AnalysisRow {
        env: env.to_string(),
        sigma_min_fp: fp.sigma_min,
        margin_tdrc,
        margin_ba,
        best_q_c: qc.q,
        best_q_a: qa.q,
        best_alpha_c: qc.alpha,
        best_alpha_a: qa.alpha,
        speed_holds,
        interpretation: interpretation.to_string(),
    })
}

/// Rows for several environments; `tuned` pairs environment bundles with
/// their tuned parameters.
pub fn analysis_table(
    tuned: &[(&str, &OperatorBundle, TunedParams)],
    grid: &[f64],
) -> Result<Vec<AnalysisRow>> {
    tuned.iter().map(|(env, bundle, params)| analysis_row(env, bundle, params, grid)).collect()
}

/// Pinned tuned parameters per environment.
///
/// The two-state pair reproduces the reference verification row to four
/// decimals and is kept as a regression fixture; the other rows are
/// representative tuned settings from the same search space (sweep output
/// replaces them when available).
pub fn pinned_fixture() -> Vec<(&'static str, TunedParams)> {
    vec![
        ("two_state", TunedParams { eta: 0.03, lambda_c: 0.1, beta: 0.7, lambda_a: 1.0 }),
        ("baird", TunedParams { eta: 1.0, lambda_c: 1.0, beta: 2.0, lambda_a: 1.0 }),
        (
            "random_walk",
            TunedParams { eta: 0.03, lambda_c: 1.0 / 3.0, beta: 10.0, lambda_a: 5.0 / 3.0 },
        ),
        ("boyan", TunedParams { eta: 0.3, lambda_c: 1.0, beta: 10.0, lambda_a: 1.0 / 3.0 }),
    ]
}

/// Fixture lookup by environment name.
pub fn pinned_params(env: &str) -> Result<TunedParams> {
    pinned_fixture()
        .into_iter()
        .find(|(name, _)| *name == env)
        .map(|(_, p)| p)
        .ok_or_else(|| Error::Invalid(format!("no pinned analysis parameters for `{env}`")))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::benchmarks;
    use crate::mdp::operator_bundle;

    fn bundle_for(name: &str) -> OperatorBundle {
        let spec = benchmarks::build(name).unwrap();
        operator_bundle(&spec.mdp, &spec.phi, &spec.policies).unwrap()
    }

    #[test]
    fn auxiliary_matrix_two_state() {
        let b = bundle_for("two_state");
        let c0 = auxiliary_matrix(&b, CorrectionFamily::Covariance, 0.0);
        assert!((c0[(0, 0)] - 2.5).abs() < 1e-12);
        let a07 = auxiliary_matrix(&b, CorrectionFamily::Behavior, 0.7);
        assert!((a07[(0, 0)] - 1.175).abs() < 1e-12);
        let a0 = auxiliary_matrix(&b, CorrectionFamily::Behavior, 0.0);
        assert_eq!(a0, b.a_mu);
    }

    #[test]
    fn mean_system_two_state_ba_blocks() {
        let b = bundle_for("two_state");
        let m = auxiliary_matrix(&b, CorrectionFamily::Behavior, 0.7);
        let ms = mean_system(&b, &m, 1.0);
        let expect = Matrix::from_rows(&[vec![0.2, -2.7], vec![0.2, -1.175]]);
        assert!(crate::mdp::matrices_close(&ms.g, &expect, 1e-12));
        assert_eq!(ms.h, vec![0.0, 0.0]);

        // Doubling lambda doubles exactly the bottom block row.
        let ms2 = mean_system(&b, &m, 2.0);
        assert_eq!(ms2.g[(1, 0)], 2.0 * ms.g[(1, 0)]);
        assert_eq!(ms2.g[(1, 1)], 2.0 * ms.g[(1, 1)]);
        assert_eq!(ms2.g[(0, 0)], ms.g[(0, 0)]);
        assert_eq!(ms2.g[(0, 1)], ms.g[(0, 1)]);
    }

    #[test]
    fn fixed_point_check_two_state() {
        let b = bundle_for("two_state");
        let fp = fixed_point_check(&b, 0.7).unwrap();
        assert!((fp.sigma_min - 1.525).abs() < 1e-10);
        // The Weyl bound is vacuous here (0.7 - 2.225) while the exact check
        // still passes: the bound is sufficient, not necessary.
        assert!((fp.weyl_lower + 1.525).abs() < 1e-10);
        assert!(fp.preserved);
    }

    #[test]
    fn weyl_bound_forces_preservation_everywhere() {
        for name in benchmarks::list() {
            let b = bundle_for(name);
            let norm = operator_norm_2(&b.d_pi.sub(&b.a_mu)).unwrap();
            let fp = fixed_point_check(&b, norm + 0.1).unwrap();
            assert!(fp.weyl_lower > 0.0, "{name}");
            assert!(fp.preserved, "{name}");
            assert!(fp.sigma_min >= fp.weyl_lower - 1e-9, "{name}: Weyl must lower-bound sigma");
        }
    }

    #[test]
    fn equilibrium_cases() {
        // Zero rewards: equilibrium at the origin.
        let b = bundle_for("two_state");
        let m = auxiliary_matrix(&b, CorrectionFamily::Behavior, 0.7);
        let ms = mean_system(&b, &m, 1.0);
        assert_eq!(equilibrium(&ms).unwrap(), vec![0.0, 0.0]);

        // Random walk at beta = 10: equilibrium equals (theta*, 0).
        let b = bundle_for("random_walk");
        let m = auxiliary_matrix(&b, CorrectionFamily::Behavior, 10.0);
        let ms = mean_system(&b, &m, 1.0);
        let z = equilibrium(&ms).unwrap();
        for i in 0..b.dim() {
            assert!((z[i] - b.theta_star[i]).abs() < 1e-9, "theta block");
            assert!(z[b.dim() + i].abs() < 1e-9, "w block");
        }
    }

    #[test]
    fn q_factor_two_state_values() {
        let b = bundle_for("two_state");
        let ba = mean_system(&b, &auxiliary_matrix(&b, CorrectionFamily::Behavior, 0.7), 1.0);
        let q = q_factor(&ba, 1.0).unwrap();
        assert!((q - 0.33f64.sqrt()).abs() < 1e-10);
        assert!((q - 0.5745).abs() < 5e-4);

        let tdrc = mean_system(&b, &auxiliary_matrix(&b, CorrectionFamily::Covariance, 0.03), 0.1);
        let q = q_factor(&tdrc, 1.0).unwrap();
        assert!((q - 0.9749).abs() < 5e-4);

        // q -> 1 from below as alpha -> 0+ for a Hurwitz system.
        let q_small = q_factor(&ba, 1e-6).unwrap();
        assert!(q_small < 1.0 && q_small > 1.0 - 1e-5);
    }

    #[test]
    fn best_q_two_state_and_singleton() {
        let b = bundle_for("two_state");
        let ba = mean_system(&b, &auxiliary_matrix(&b, CorrectionFamily::Behavior, 0.7), 1.0);
        let grid = default_alpha_grid();
        assert_eq!(grid.len(), 33);
        assert_eq!(*grid.last().unwrap(), 1.0);
        let best = best_q(&ba, &grid).unwrap();
        assert!((best.q - 0.5745).abs() < 5e-4);
        assert_eq!(best.alpha, 1.0);
        assert!(best.admissible);

        let single = best_q(&ba, &[0.25]).unwrap();
        assert_eq!(single.q, q_factor(&ba, 0.25).unwrap());
        assert_eq!(single.alpha, 0.25);
    }

    #[test]
    fn baird_best_q_pinned_at_one() {
        // The singular A_pi plants an exact zero eigenvalue in G, so no step
        // size contracts the full mean system.
        let b = bundle_for("baird");
        let ba = mean_system(&b, &auxiliary_matrix(&b, CorrectionFamily::Behavior, 2.0), 1.0);
        let best = best_q(&ba, &default_alpha_grid()).unwrap();
        assert!((best.q - 1.0).abs() < 1e-6, "q = {}", best.q);
        assert!(!best.admissible);
    }

    #[test]
    fn mean_recursion_trace_matches_q() {
        let b = bundle_for("two_state");
        let ba = mean_system(&b, &auxiliary_matrix(&b, CorrectionFamily::Behavior, 0.7), 1.0);
        let alpha = 0.5;
        let q = q_factor(&ba, alpha).unwrap();
        let trace = mean_recursion_trace(&ba, alpha, &[1.0, 0.0], 1200).unwrap();
        let measured = fit_rate(&trace, 200, 1200);
        assert!((measured - q).abs() < 1e-3, "measured {measured} vs q {q}");

        // Zero start stays at zero.
        let zeros = mean_recursion_trace(&ba, alpha, &[0.0, 0.0], 10).unwrap();
        assert!(zeros.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn contraction_below_margin_step_bound() {
        // For alpha < 2 margin / rho(G)^2 every eigenvalue of I + alpha G
        // lies inside the unit disk, so the trace must decay. Checked on all
        // Hurwitz tuned benchmark systems at three fractions of the bound.
        for (env, tuned) in pinned_fixture() {
            let b = bundle_for(env);
            for (family, reg, lambda) in [
                (CorrectionFamily::Covariance, tuned.eta, tuned.lambda_c),
                (CorrectionFamily::Behavior, tuned.beta, tuned.lambda_a),
            ] {
                let ms = mean_system(&b, &auxiliary_matrix(&b, family, reg), lambda);
                let margin = hurwitz_margin(&ms.g).unwrap();
                if margin <= 0.0 {
                    continue; // baird systems sit at or past the boundary
                }
                let rho = crate::numkit::spectral_radius(&ms.g).unwrap();
                let bound = 2.0 * margin / (rho * rho);
                for frac in [0.25, 0.5, 0.95] {
                    let alpha = frac * bound;
                    assert!(q_factor(&ms, alpha).unwrap() < 1.0, "{env} {family:?} a={alpha}");
                    let z0 = vec![1.0; ms.g.rows()];
                    let trace = mean_recursion_trace(&ms, alpha, &z0, 20_000).unwrap();
                    assert!(
                        trace.last().unwrap() < &(0.99 * trace[0]),
                        "{env} {family:?} alpha {alpha}: no decay"
                    );
                }
            }
        }
    }

    #[test]
    fn mean_recursion_grows_on_unstable_system() {
        let b = bundle_for("baird");
        // Unregularized behavior-aware system on Baird at a large step.
        let ba = mean_system(&b, &auxiliary_matrix(&b, CorrectionFamily::Behavior, 0.0), 1.0);
        let q = q_factor(&ba, 1.0).unwrap();
        assert!(q > 1.0);
        let trace = mean_recursion_trace(&ba, 1.0, &[1.0; 16], 200).unwrap();
        let tail = &trace[trace.len() - 50..];
        assert!(tail.windows(2).all(|w| w[1] >= w[0]), "norms must grow after the transient");
    }

    /// Geometric per-step rate via least squares on log norms over
    /// `[from, to]`.
    pub(crate) fn fit_rate(trace: &[f64], from: usize, to: usize) -> f64 {
        let pts: Vec<(f64, f64)> = (from..=to.min(trace.len() - 1))
            .filter(|t| trace[*t] > 0.0)
            .map(|t| (t as f64, trace[t].ln()))
            .collect();
        let n = pts.len() as f64;
        let sx: f64 = pts.iter().map(|p| p.0).sum();
        let sy: f64 = pts.iter().map(|p| p.1).sum();
        let sxx: f64 = pts.iter().map(|p| p.0 * p.0).sum();
        let sxy: f64 = pts.iter().map(|p| p.0 * p.1).sum();
        ((n * sxy - sx * sy) / (n * sxx - sx * sx)).exp()
    }

    #[test]
    fn analysis_row_two_state_reference_values() {
        let b = bundle_for("two_state");
        let tuned = pinned_params("two_state").unwrap();
        let row = analysis_row("two_state", &b, &tuned, &default_alpha_grid()).unwrap();
        assert!((row.sigma_min_fp - 1.525).abs() < 5e-4);
        assert!((row.margin_tdrc - 0.0265).abs() < 5e-4);
        assert!((row.margin_ba - 0.4875).abs() < 5e-4);
        assert!((row.best_q_c - 0.9749).abs() < 5e-4);
        assert!((row.best_q_a - 0.5745).abs() < 5e-4);
        assert!(row.speed_holds);
        assert_eq!(row.interpretation, "BA speed advantage");
    }

    #[test]
    fn analysis_random_walk_speed_does_not_hold() {
        let b = bundle_for("random_walk");
        let tuned = pinned_params("random_walk").unwrap();
        let row = analysis_row("random_walk", &b, &tuned, &default_alpha_grid()).unwrap();
        assert!(!row.speed_holds);
        assert!(row.margin_tdrc > 0.0 && row.margin_ba > 0.0);
    }

    #[test]
    fn analysis_baird_near_critical() {
        let b = bundle_for("baird");
        let tuned = pinned_params("baird").unwrap();
        let row = analysis_row("baird", &b, &tuned, &default_alpha_grid()).unwrap();
        assert!((row.sigma_min_fp - 0.224).abs() < 5e-3, "sigma {}", row.sigma_min_fp);
        assert!(row.margin_tdrc.abs() < 1e-9, "tdrc margin {}", row.margin_tdrc);
        assert!(row.margin_ba < 0.0 && row.margin_ba > -1e-2, "ba margin {}", row.margin_ba);
        assert!((row.margin_ba + 3.92e-4).abs() < 5e-5, "ba margin {}", row.margin_ba);
        assert!(!row.speed_holds);
        assert_eq!(row.interpretation, "BA near-critical");
    }

    #[test]
    fn equilibrium_matches_fixed_point_for_all_envs_and_betas() {
        for name in benchmarks::list() {
            let b = bundle_for(name);
            let weyl = operator_norm_2(&b.d_pi.sub(&b.a_mu)).unwrap();
            for beta in [weyl + 0.1, 10.0] {
                let fp = fixed_point_check(&b, beta).unwrap();
                assert!(fp.preserved, "{name} at beta {beta}");
                let ms =
                    mean_system(&b, &auxiliary_matrix(&b, CorrectionFamily::Behavior, beta), 1.0);
                let z = equilibrium(&ms).unwrap();
                for i in 0..b.dim() {
                    assert!(
                        (z[i] - b.theta_star[i]).abs() < 1e-8,
                        "{name} beta {beta} theta block"
                    );
                    assert!(z[b.dim() + i].abs() < 1e-8, "{name} beta {beta} w block");
                }
            }
        }
    }
}
