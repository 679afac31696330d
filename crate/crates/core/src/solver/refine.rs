//! QoS-safe WMMSE refinement over a fixed admission set.

use std::f64::consts::LN_2;

use super::repair::reconstruct_for;
use super::{mmse_scalars, BeamSolution, Objective, SnapshotProblem, SolverConfig, SolverDiagnostics};

fn objective_value(objective: Objective, s: &BeamSolution) -> f64 {
    match objective {
        Objective::SumRate => s.sum_rate,
        Objective::Ee => s.ee,
    }
}

/// Runs up to `cfg.max_refine` WMMSE iterations on the admitted users.
///
/// Each iteration recomputes MMSE scalars from the latest iterate and
/// reconstructs with power-dual bisection and projection. An iterate is
/// accepted only if every admitted user still meets its rate target and the
/// objective does not drop; rejected iterates still seed the next scalar
/// update. In energy-efficiency mode the power dual is floored at
/// `η·ln2/B`, where η is the Dinkelbach ratio of the accepted solution.
pub fn refine_qos_safe(
    problem: &SnapshotProblem,
    solution: &BeamSolution,
    cfg: &SolverConfig,
    diag: &mut SolverDiagnostics,
) -> BeamSolution {
    let alpha = &solution.admitted;
    if cfg.max_refine == 0 || alpha.count() == 0 || !solution.meets_qos(problem) {
        return solution.clone();
    }
    let mut current = solution.clone();
    let mut trial_d = solution.d.clone();
    for _ in 0..cfg.max_refine {
        diag.refine_iterations += 1;
        let scalars = mmse_scalars(problem, &alpha.0, &trial_d);
        let nu_min = match cfg.objective {
            Objective::SumRate => 0.0,
            Objective::Ee => current.ee * LN_2 / problem.bandwidth,
        };
        let candidate = reconstruct_for(problem, alpha, &scalars, nu_min, cfg, diag);
        trial_d = candidate.d.clone();
        let before = objective_value(cfg.objective, &current);
        let after = objective_value(cfg.objective, &candidate);
        if candidate.meets_qos(problem) && after >= before {
            diag.refine_accepted += 1;
            current = candidate;
        }
    }
    current
}
