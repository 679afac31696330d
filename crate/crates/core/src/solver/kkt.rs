//! Closed-form KKT reconstruction, power-dual search and power projection.

use nalgebra::DMatrix;
use num_complex::Complex64;

use super::{AdmissionVector, SnapshotProblem, SolverDiagnostics, WmmseScalars, EPS_P, EPS_PI};
use crate::linalg::CMatrix;

/// Regularization used in place of ν = 0, relative to the problem scale.
const NU_FLOOR: f64 = 1e-12;
/// Diagonal loading that keeps the Gram regularizer positive definite.
const GRAM_LOADING: f64 = 1e-12;
const MAX_DOUBLINGS: usize = 60;
/// Lower edge of the accepted power band, as a fraction of P_max.
const POWER_BAND: f64 = 0.99;

/// `π_k = γ_k·σ² / (‖h_eff,k‖² + ε_π)` with `γ_k = 2^{r_min,k/B} − 1`.
pub fn required_power_proxy(problem: &SnapshotProblem, k: usize) -> f64 {
    let gamma = (problem.r_min[k] / problem.bandwidth).exp2() - 1.0;
    if gamma == 0.0 {
        return 0.0;
    }
    gamma * problem.noise_power / (problem.h_eff.row(k).norm_squared() + EPS_PI)
}

pub fn required_power_proxies(problem: &SnapshotProblem) -> Vec<f64> {
    (0..problem.num_users()).map(|k| required_power_proxy(problem, k)).collect()
}

/// Natural scale of ν for this admission set: `tr(Σ α w|u|² h hᴴ) / tr(G)`.
fn nu_scale(problem: &SnapshotProblem, alpha: &AdmissionVector, s: &WmmseScalars) -> f64 {
    let signal: f64 = alpha
        .indices()
        .map(|k| s.w[k] * s.u[k].norm_sqr() * problem.h_eff.row(k).norm_squared())
        .sum();
    let gram = problem.gram.trace().re;
    let scale = signal / gram.max(f64::MIN_POSITIVE);
    if scale > 0.0 && scale.is_finite() {
        scale
    } else {
        1.0
    }
}

/// `d_k = C(ν)⁻¹·(α_k w_k u_k* h_eff,k)` with
/// `C(ν) = Σ_k α_k w_k |u_k|² h_eff,k h_eff,kᴴ + ν·G`.
///
/// The power dual weighs the analog Gram `G = AᴴA` rather than the identity,
/// which makes `‖A·D(ν)‖_F²` provably non-increasing in ν; the two coincide
/// when the analog beams are orthonormal. At ν = 0 the limit ν → 0⁺ is
/// taken, i.e. the minimum-power solution of a rank-deficient system.
///
/// When the active users fit in the RF chains the solve runs in user space,
/// `D = G⁻¹H·(νΛ⁻¹ + HᴴG⁻¹H)⁻¹·diag(1/u)`, which stays well conditioned as
/// ν → 0; otherwise `C(ν)` itself is factored once for all right-hand sides.
pub fn kkt_reconstruct(problem: &SnapshotProblem, alpha: &AdmissionVector, s: &WmmseScalars, nu: f64) -> CMatrix {
    let n = problem.num_rf();
    let mut d = CMatrix::zeros(n, problem.num_users());
    // Users with a zero weight or receive scalar have a zero right-hand side.
    let active: Vec<usize> = alpha
        .indices()
        .filter(|&k| s.w[k] * s.u[k].norm_sqr() > 0.0)
        .collect();
    if active.is_empty() {
        return d;
    }
    let scale = nu_scale(problem, alpha, s);
    let loading = GRAM_LOADING * problem.gram.trace().re / n as f64;
    let gram = &problem.gram + DMatrix::identity(n, n) * Complex64::from(loading);
    let h = CMatrix::from_fn(n, active.len(), |r, c| problem.h_eff[(active[c], r)].conj());
    let lambda: Vec<f64> = active.iter().map(|&k| s.w[k] * s.u[k].norm_sqr()).collect();

    if active.len() <= n {
        if let Some(g_chol) = hermitian(&gram).cholesky() {
            let g_inv_h = g_chol.solve(&h);
            let core = h.adjoint() * &g_inv_h;
            let rhs = CMatrix::from_fn(active.len(), active.len(), |r, c| {
                if r == c {
                    Complex64::from(1.0) / s.u[active[c]]
                } else {
                    Complex64::from(0.0)
                }
            });
            for floor in [0.0, NU_FLOOR * scale] {
                let nu_eff = nu.max(floor);
                let mut m = core.clone();
                for (i, l) in lambda.iter().enumerate() {
                    m[(i, i)] += Complex64::from(nu_eff / l);
                }
                if let Some(x) = solve_hpd(&m, &rhs) {
                    let cols = &g_inv_h * x;
                    for (c, &k) in active.iter().enumerate() {
                        d.set_column(k, &cols.column(c));
                    }
                    return d;
                }
            }
        }
    }

    let mut c = gram * Complex64::from(nu.max(NU_FLOOR * scale));
    let mut rhs = CMatrix::zeros(n, active.len());
    for (i, &k) in active.iter().enumerate() {
        let hk = h.column(i);
        c += hk * hk.adjoint() * Complex64::from(lambda[i]);
        rhs.set_column(i, &(hk * (s.u[k].conj() * s.w[k])));
    }
    let mut jitter = 0.0;
    for _ in 0..8 {
        let attempt = &c + DMatrix::identity(n, n) * Complex64::from(jitter);
        if let Some(x) = solve_hpd(&attempt, &rhs) {
            for (i, &k) in active.iter().enumerate() {
                d.set_column(k, &x.column(i));
            }
            return d;
        }
        jitter = if jitter == 0.0 { 1e-10 * scale.max(loading) } else { jitter * 100.0 };
    }
    d
}

/// Averages out rounding asymmetry of a matrix that is Hermitian in exact arithmetic.
fn hermitian(m: &CMatrix) -> CMatrix {
    (m + m.adjoint()) * Complex64::from(0.5)
}

/// Cholesky solve of a Hermitian positive-definite system; `None` if the
/// factorization fails or the solution is not finite.
fn solve_hpd(m: &CMatrix, rhs: &CMatrix) -> Option<CMatrix> {
    let x = hermitian(m).cholesky()?.solve(rhs);
    x.iter().all(|z| z.re.is_finite() && z.im.is_finite()).then_some(x)
}

/// Finds ν with `‖A·D(ν)‖² ∈ [0.99, 1]·P_max`, starting at `nu_min`.
///
/// Returns `nu_min` directly when it already satisfies the budget. The
/// upper bracket is doubled from the problem's natural ν scale (at most 60
/// times), then at most `max_steps` bisection steps are taken, geometric once
/// the lower end is positive. The returned precoder is always from the
/// feasible side of the bracket.
pub fn power_dual_bisection(
    problem: &SnapshotProblem,
    alpha: &AdmissionVector,
    s: &WmmseScalars,
    nu_min: f64,
    max_steps: usize,
    diag: &mut SolverDiagnostics,
) -> (f64, CMatrix) {
    diag.bisection_calls += 1;
    let p_max = problem.p_max;
    let mut trajectory = Vec::new();
    let mut eval = |nu: f64| {
        let d = kkt_reconstruct(problem, alpha, s, nu);
        let p = problem.power(&d);
        trajectory.push((nu, p));
        (d, p)
    };
    let (d0, p0) = eval(nu_min);
    if p0 <= p_max || alpha.count() == 0 {
        return (nu_min, d0);
    }
    let scale = nu_scale(problem, alpha, s);
    let mut lo = nu_min;
    let mut hi = if nu_min > 0.0 { 2.0 * nu_min } else { scale };
    let (mut d_hi, mut p_hi) = eval(hi);
    for _ in 0..MAX_DOUBLINGS {
        if p_hi <= p_max {
            break;
        }
        lo = hi;
        hi *= 2.0;
        (d_hi, p_hi) = eval(hi);
    }
    let mut steps = 0;
    while steps < max_steps && p_hi <= p_max && p_hi < POWER_BAND * p_max {
        let mid = if lo > 0.0 { (lo * hi).sqrt() } else { 0.5 * (lo + hi) };
        if mid <= lo || mid >= hi {
            break;
        }
        steps += 1;
        let (d_mid, p_mid) = eval(mid);
        if p_mid > p_max {
            lo = mid;
        } else {
            hi = mid;
            d_hi = d_mid;
            p_hi = p_mid;
        }
    }
    diag.bisection_steps += steps;
    diag.max_bisection_steps = diag.max_bisection_steps.max(steps);

    trajectory.sort_by(|a, b| a.0.total_cmp(&b.0));
    let violated = trajectory
        .windows(2)
        .any(|w| w[1].1 > w[0].1 * (1.0 + 1e-9) + 1e-300);
    if violated {
        diag.nu_monotonicity_violations += 1;
    }
    debug_assert!(!violated, "transmit power increased with the power dual: {trajectory:?}");
    (hi, d_hi)
}

/// `D·min{1, √(P_max / (‖A·D‖² + ε_p))}`.
pub fn project_power(problem: &SnapshotProblem, d: &CMatrix) -> CMatrix {
    let p = problem.power(d);
    let factor = (problem.p_max / (p + EPS_P)).sqrt();
    if factor >= 1.0 {
        return d.clone();
    }
    // Shave a few ulps so rounding in the power evaluation cannot overshoot.
    d * Complex64::from(factor * (1.0 - 4.0 * f64::EPSILON))
}
