//! Feasibility-driven admission, worst-first strict repair and add-back.

use super::kkt::{power_dual_bisection, project_power, required_power_proxies};
use super::{ascending, AdmissionVector, BeamSolution, SnapshotProblem, SolverConfig, SolverDiagnostics, WmmseScalars};
use super::{EPS_PI, RATE_MARGIN};
use crate::error::{Error, Result};

/// Reconstruct, bisect on the power dual from `nu_min`, project, and score.
pub fn reconstruct_for(
    problem: &SnapshotProblem,
    alpha: &AdmissionVector,
    scalars: &WmmseScalars,
    nu_min: f64,
    cfg: &SolverConfig,
    diag: &mut SolverDiagnostics,
) -> BeamSolution {
    let (_, d) = power_dual_bisection(problem, alpha, scalars, nu_min, cfg.max_bisection, diag);
    BeamSolution::evaluate(problem, alpha.clone(), project_power(problem, &d))
}

/// Starts from the certified set and removes the admitted user with the
/// largest required-power proxy until the reconstruction is feasible.
pub fn admit_feasibility_driven(
    problem: &SnapshotProblem,
    scalars: &WmmseScalars,
    cfg: &SolverConfig,
    diag: &mut SolverDiagnostics,
) -> AdmissionVector {
    let pi = required_power_proxies(problem);
    let mut alpha = AdmissionVector(problem.certified.clone());
    loop {
        if reconstruct_for(problem, &alpha, scalars, 0.0, cfg, diag).meets_qos(problem) {
            return alpha;
        }
        // max_by keeps the last maximum; iterate in reverse so ties go to the lowest index.
        let worst = alpha
            .indices()
            .collect::<Vec<_>>()
            .into_iter()
            .rev()
            .max_by(|&a, &b| pi[a].total_cmp(&pi[b]))
            .expect("an infeasible set is non-empty");
        alpha.0[worst] = false;
        diag.drops += 1;
    }
}

/// Drops the user with the largest normalized QoS violation until every
/// admitted user meets its target, then offers dropped users back in
/// ascending required-power order.
pub fn strict_repair(
    problem: &SnapshotProblem,
    alpha: &AdmissionVector,
    scalars: &WmmseScalars,
    cfg: &SolverConfig,
    diag: &mut SolverDiagnostics,
) -> BeamSolution {
    let pi = required_power_proxies(problem);
    let mut alpha = AdmissionVector(
        alpha
            .0
            .iter()
            .zip(&problem.certified)
            .map(|(a, c)| *a && *c)
            .collect(),
    );
    let mut removed = Vec::new();
    let solution = loop {
        let sol = reconstruct_for(problem, &alpha, scalars, 0.0, cfg, diag);
        if sol.meets_qos(problem) {
            break sol;
        }
        let mut worst: Option<(usize, f64)> = None;
        for k in alpha.indices() {
            let g = (problem.r_min[k] * (1.0 + RATE_MARGIN) - sol.rates[k]).max(0.0);
            let metric = g / (pi[k] + EPS_PI);
            if g > 0.0 && worst.is_none_or(|(_, m)| metric > m) {
                worst = Some((k, metric));
            }
        }
        match worst {
            Some((k, _)) => {
                alpha.0[k] = false;
                removed.push(k);
                diag.drops += 1;
            }
            None => break BeamSolution::empty(problem),
        }
    };
    add_back(problem, solution, &removed, &pi, scalars, cfg, diag)
}

/// Tries each candidate in ascending `costs` order (ties by index) and keeps
/// it only if the enlarged set remains fully feasible.
pub fn add_back(
    problem: &SnapshotProblem,
    base: BeamSolution,
    candidates: &[usize],
    costs: &[f64],
    scalars: &WmmseScalars,
    cfg: &SolverConfig,
    diag: &mut SolverDiagnostics,
) -> BeamSolution {
    let mut current = base;
    for k in ascending(costs, candidates.iter().copied()) {
        if current.admitted.0[k] || !problem.certified[k] {
            continue;
        }
        let mut alpha = current.admitted.clone();
        alpha.0[k] = true;
        let trial = reconstruct_for(problem, &alpha, scalars, 0.0, cfg, diag);
        if trial.meets_qos(problem) {
            current = trial;
            diag.add_backs += 1;
        }
    }
    current
}

/// Largest feasible certified subset under the same fixed-scalar
/// reconstruction, by enumeration. Ties keep the first subset in
/// lexicographic bitmask order.
pub fn exhaustive_best_admission(
    problem: &SnapshotProblem,
    scalars: &WmmseScalars,
    cfg: &SolverConfig,
) -> Result<BeamSolution> {
    let certified: Vec<usize> = (0..problem.num_users()).filter(|&k| problem.certified[k]).collect();
    if certified.len() > 20 {
        return Err(Error::InvalidArgument(format!(
            "exhaustive admission over {} users is too large",
            certified.len()
        )));
    }
    let mut diag = SolverDiagnostics::default();
    let mut best = BeamSolution::empty(problem);
    for mask in 1u32..(1 << certified.len()) {
        if mask.count_ones() as usize <= best.admitted.count() {
            continue;
        }
        let mut alpha = AdmissionVector::none(problem.num_users());
        for (bit, &k) in certified.iter().enumerate() {
            alpha.0[k] = mask & (1 << bit) != 0;
        }
        let sol = reconstruct_for(problem, &alpha, scalars, 0.0, cfg, &mut diag);
        if sol.meets_qos(problem) {
            best = sol;
        }
    }
    Ok(best)
}
