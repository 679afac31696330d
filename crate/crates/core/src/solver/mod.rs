//! Per-slot admission and digital beamforming.
//!
//! The pipeline for one snapshot is
//!
//! 1. a cheap predictor scores every certified user and produces WMMSE
//!    scalars from one MMSE pass ([`predict_admission_and_scalars`]);
//! 2. the thresholded scores seed [`strict_repair`], which alternates the
//!    closed-form KKT reconstruction, power-dual bisection and a scaling
//!    projection, dropping the worst violator until every admitted user
//!    meets its rate target;
//! 3. rejected users are offered back in ascending required-power order;
//! 4. [`refine_qos_safe`] runs a few WMMSE iterations and keeps only
//!    iterates that stay feasible and do not lower the objective.
//!
//! Feasibility of the output never depends on predictor quality.

mod fixture;
mod kkt;
mod refine;
mod repair;

use nalgebra::DVector;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use serde::{Deserialize, Serialize};

use crate::channel::sinr_and_rates;
use crate::error::{Error, Result};
use crate::linalg::{gram_power, CMatrix};

pub use fixture::{read_json, write_json};
pub use kkt::{
    kkt_reconstruct, power_dual_bisection, project_power, required_power_proxies, required_power_proxy,
};
pub use refine::refine_qos_safe;
pub use repair::{add_back, admit_feasibility_driven, exhaustive_best_admission, reconstruct_for, strict_repair};

/// Added to the matched-filter gain in the required-power proxy.
pub const EPS_PI: f64 = 1e-12;
/// Added to the measured power in the scaling projection.
pub const EPS_P: f64 = 1e-12;
/// Upper clamp on MMSE weights.
pub const W_MAX: f64 = 1e6;
/// Relative margin on rate targets used by every internal feasibility test,
/// so reported solutions clear `r_min` despite rounding.
pub const RATE_MARGIN: f64 = 1e-9;

/// One slot's digital beamforming problem.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SnapshotProblem {
    /// Effective channel `H_eff = Hᴴ·A`, `K × N_RF`.
    #[serde(with = "fixture::cmatrix")]
    pub h_eff: CMatrix,
    /// Analog Gram matrix `AᴴA`, `N_RF × N_RF`; transmit power is `tr(DᴴGD)`.
    #[serde(with = "fixture::cmatrix")]
    pub gram: CMatrix,
    /// Per-user rate target, bit/s.
    pub r_min: Vec<f64>,
    pub p_max: f64,
    pub noise_power: f64,
    pub bandwidth: f64,
    pub circuit_power: f64,
    /// Users that passed the pointing certificate.
    pub certified: Vec<bool>,
    /// Scalar detuning-uncertainty proxy per user.
    pub sigma_xi: Vec<f64>,
}

impl SnapshotProblem {
    /// Builds a problem from the effective channel and the analog beamformer.
    pub fn new(
        h_eff: CMatrix,
        analog: &CMatrix,
        r_min: Vec<f64>,
        p_max: f64,
        noise_power: f64,
        bandwidth: f64,
        circuit_power: f64,
    ) -> Result<Self> {
        let k = h_eff.nrows();
        let problem = Self {
            gram: analog.adjoint() * analog,
            h_eff,
            r_min,
            p_max,
            noise_power,
            bandwidth,
            circuit_power,
            certified: vec![true; k],
            sigma_xi: vec![0.0; k],
        };
        problem.validate()?;
        Ok(problem)
    }

    pub fn with_certified(mut self, certified: Vec<bool>) -> Result<Self> {
        self.certified = certified;
        self.validate()?;
        Ok(self)
    }

    pub fn with_uncertainty(mut self, sigma_xi: Vec<f64>) -> Result<Self> {
        self.sigma_xi = sigma_xi;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        let k = self.num_users();
        let n = self.num_rf();
        if self.gram.nrows() != n || self.gram.ncols() != n {
            return Err(Error::InvalidArgument(format!("Gram matrix must be {n}×{n}")));
        }
        if self.r_min.len() != k || self.certified.len() != k || self.sigma_xi.len() != k {
            return Err(Error::InvalidArgument(format!("per-user vectors must have length K = {k}")));
        }
        if !(self.p_max > 0.0 && self.p_max.is_finite()) {
            return Err(Error::InvalidArgument(format!("P_max = {} must be positive", self.p_max)));
        }
        if !(self.noise_power > 0.0) || !(self.bandwidth > 0.0) || !(self.circuit_power >= 0.0) {
            return Err(Error::InvalidArgument("noise power and bandwidth must be positive, P_c non-negative".into()));
        }
        if self.r_min.iter().any(|r| !(*r >= 0.0 && r.is_finite())) {
            return Err(Error::InvalidArgument("rate targets must be finite and non-negative".into()));
        }
        if self.h_eff.iter().chain(self.gram.iter()).any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::InvalidArgument("channel or Gram matrix has non-finite entries".into()));
        }
        Ok(())
    }

    pub fn num_users(&self) -> usize {
        self.h_eff.nrows()
    }

    pub fn num_rf(&self) -> usize {
        self.h_eff.ncols()
    }

    /// `h_eff,k` as a column, so that user k receives `h_eff,kᴴ·d_j` from stream j.
    pub fn user_channel(&self, k: usize) -> DVector<Complex64> {
        self.h_eff.row(k).adjoint()
    }

    /// Radiated power `‖A·D‖_F²`.
    pub fn power(&self, d: &CMatrix) -> f64 {
        gram_power(&self.gram, d)
    }
}

/// Binary admission indicators.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AdmissionVector(pub Vec<bool>);

impl AdmissionVector {
    pub fn none(k: usize) -> Self {
        Self(vec![false; k])
    }

    pub fn count(&self) -> usize {
        self.0.iter().filter(|a| **a).count()
    }

    pub fn is_admitted(&self, k: usize) -> bool {
        self.0[k]
    }

    pub fn indices(&self) -> impl Iterator<Item = usize> + '_ {
        self.0.iter().enumerate().filter(|(_, a)| **a).map(|(k, _)| k)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// Per-user WMMSE receive scalars and weights plus the power dual.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WmmseScalars {
    #[serde(with = "fixture::cvec")]
    pub u: Vec<Complex64>,
    pub w: Vec<f64>,
    pub nu: f64,
}

/// Admission decision, digital precoder and the metrics derived from them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BeamSolution {
    pub admitted: AdmissionVector,
    /// Digital precoder, `N_RF × K`; columns of rejected users are zero.
    #[serde(with = "fixture::cmatrix")]
    pub d: CMatrix,
    /// Rates in bit/s; zero for rejected users.
    pub rates: Vec<f64>,
    pub power: f64,
    pub feasible: bool,
    pub qar: f64,
    pub sum_rate: f64,
    pub ee: f64,
}

impl BeamSolution {
    /// Scores a precoder for a given admission set.
    pub fn evaluate(problem: &SnapshotProblem, admitted: AdmissionVector, d: CMatrix) -> Self {
        let k = problem.num_users();
        let links = sinr_and_rates(&problem.h_eff, &d, problem.noise_power, problem.bandwidth);
        let rates: Vec<f64> = (0..k).map(|i| if admitted.0[i] { links[i].rate } else { 0.0 }).collect();
        let power = problem.power(&d);
        let sum_rate: f64 = rates.iter().sum();
        let feasible = power <= problem.p_max && admitted.indices().all(|i| rates[i] >= problem.r_min[i]);
        Self {
            qar: admitted.count() as f64 / k.max(1) as f64,
            ee: sum_rate / (power + problem.circuit_power).max(f64::MIN_POSITIVE),
            admitted,
            d,
            rates,
            power,
            feasible,
            sum_rate,
        }
    }

    /// Zero precoder with nobody admitted.
    pub fn empty(problem: &SnapshotProblem) -> Self {
        let d = CMatrix::zeros(problem.num_rf(), problem.num_users());
        Self::evaluate(problem, AdmissionVector::none(problem.num_users()), d)
    }

    /// Feasibility with the internal rate margin.
    pub(crate) fn meets_qos(&self, problem: &SnapshotProblem) -> bool {
        self.power <= problem.p_max
            && self
                .admitted
                .indices()
                .all(|k| self.rates[k] >= problem.r_min[k] * (1.0 + RATE_MARGIN))
    }
}

/// What the refinement stage maximizes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Objective {
    #[default]
    SumRate,
    /// Energy efficiency via Dinkelbach updates.
    Ee,
}

/// Ordering used by the admission predictor.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Priority {
    /// Ascending required-power proxy.
    #[default]
    QosDifficulty,
    /// Descending effective-channel gain.
    ChannelGain,
    /// Seeded random order.
    Random,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverConfig {
    /// Soft scores at or above this value are admitted before repair.
    pub eta_thresh: f64,
    /// Users always scored 1 by the predictor.
    pub k_min: usize,
    /// Bisection steps per power-dual search.
    pub max_bisection: usize,
    /// Refinement iterations.
    pub max_refine: usize,
    pub objective: Objective,
    pub priority: Priority,
    /// Weight of the detuning-uncertainty proxy in the priority cost.
    pub c_omega: f64,
    /// Seed for [`Priority::Random`].
    pub priority_seed: u64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            eta_thresh: 0.5,
            k_min: 8,
            max_bisection: 40,
            max_refine: 10,
            objective: Objective::SumRate,
            priority: Priority::QosDifficulty,
            c_omega: 0.0,
            priority_seed: 0,
        }
    }
}

/// Counters gathered during one solve.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct SolverDiagnostics {
    pub bisection_calls: usize,
    pub bisection_steps: usize,
    /// Largest number of bisection steps in a single search.
    pub max_bisection_steps: usize,
    pub drops: usize,
    pub add_backs: usize,
    pub refine_iterations: usize,
    pub refine_accepted: usize,
    /// Bisection trajectories along which power increased with ν.
    pub nu_monotonicity_violations: usize,
}

/// Soft admission scores and starting scalars.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub scores: Vec<f64>,
    pub scalars: WmmseScalars,
}

#[derive(Debug, Clone)]
pub struct SolveOutcome {
    pub solution: BeamSolution,
    pub diagnostics: SolverDiagnostics,
}

/// MMSE receive scalars and weights for precoder `d`, restricted to `mask`.
pub fn mmse_scalars(problem: &SnapshotProblem, mask: &[bool], d: &CMatrix) -> WmmseScalars {
    let g = &problem.h_eff * d;
    let k = problem.num_users();
    let mut u = vec![Complex64::new(0.0, 0.0); k];
    let mut w = vec![1.0; k];
    for i in (0..k).filter(|&i| mask[i]) {
        let total: f64 = (0..k).map(|j| g[(i, j)].norm_sqr()).sum::<f64>() + problem.noise_power;
        u[i] = g[(i, i)] / total;
        let mse = 1.0 - (u[i].conj() * g[(i, i)]).re;
        w[i] = if mse > 0.0 { (1.0 / mse).clamp(1.0, W_MAX) } else { W_MAX };
    }
    WmmseScalars { u, w, nu: 0.0 }
}

/// Matched-filter precoder with equal radiated power per masked user.
pub fn matched_filter(problem: &SnapshotProblem, mask: &[bool]) -> CMatrix {
    let n = mask.iter().filter(|m| **m).count();
    let mut d = CMatrix::zeros(problem.num_rf(), problem.num_users());
    if n == 0 {
        return d;
    }
    let per_user = problem.p_max / n as f64;
    for k in (0..problem.num_users()).filter(|&k| mask[k]) {
        let h = problem.user_channel(k);
        let norm_sq = (h.adjoint() * &problem.gram * &h)[(0, 0)].re;
        if norm_sq > 0.0 {
            d.set_column(k, &(h * Complex64::from((per_user / norm_sq).sqrt())));
        }
    }
    d
}

/// Priority cost per user; lower means admitted first. Non-certified users
/// get `+∞`.
pub fn priority_costs(problem: &SnapshotProblem, cfg: &SolverConfig) -> Vec<f64> {
    let pi = required_power_proxies(problem);
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(cfg.priority_seed);
    (0..problem.num_users())
        .map(|k| {
            let base = match cfg.priority {
                Priority::QosDifficulty => pi[k],
                Priority::ChannelGain => 1.0 / (problem.h_eff.row(k).norm_squared() + EPS_PI),
                Priority::Random => rng.random::<f64>(),
            };
            if problem.certified[k] {
                base * (1.0 + cfg.c_omega * problem.sigma_xi[k])
            } else {
                f64::INFINITY
            }
        })
        .collect()
}

/// Indices sorted by ascending cost, ties by lowest index.
pub(crate) fn ascending(costs: &[f64], candidates: impl IntoIterator<Item = usize>) -> Vec<usize> {
    let mut order: Vec<usize> = candidates.into_iter().collect();
    order.sort_by(|&a, &b| costs[a].total_cmp(&costs[b]).then(a.cmp(&b)));
    order
}

/// Deterministic stand-in for a learned admission/scalar predictor.
///
/// The `k_min` cheapest certified users, and any tied with the most
/// expensive of them, score 1; every other certified user scores
/// `c_ref/c_k`, where `c_ref` is the largest cost inside that floor. Scalars come from one MMSE pass at a matched-filter, equal-power
/// start over all certified users.
pub fn predict_admission_and_scalars(problem: &SnapshotProblem, cfg: &SolverConfig) -> Prediction {
    let k = problem.num_users();
    let costs = priority_costs(problem, cfg);
    let order = ascending(&costs, (0..k).filter(|&i| problem.certified[i]));
    let mut scores = vec![0.0; k];
    let floor = cfg.k_min.min(order.len());
    let c_ref = order[..floor].last().map_or(0.0, |&i| costs[i]);
    for (rank, &i) in order.iter().enumerate() {
        scores[i] = if rank < floor || costs[i] <= c_ref {
            1.0
        } else {
            c_ref / costs[i]
        };
    }
    let d0 = matched_filter(problem, &problem.certified);
    let scalars = mmse_scalars(problem, &problem.certified, &d0);
    Prediction { scores, scalars }
}

/// Full per-snapshot pipeline with the built-in predictor.
pub fn solve_snapshot(problem: &SnapshotProblem, cfg: &SolverConfig) -> Result<SolveOutcome> {
    problem.validate()?;
    let prediction = predict_admission_and_scalars(problem, cfg);
    solve_with_prediction(problem, &prediction, cfg)
}

/// Pipeline driven by an externally supplied prediction.
pub fn solve_with_prediction(problem: &SnapshotProblem, prediction: &Prediction, cfg: &SolverConfig) -> Result<SolveOutcome> {
    problem.validate()?;
    let k = problem.num_users();
    if prediction.scores.len() != k || prediction.scalars.u.len() != k || prediction.scalars.w.len() != k {
        return Err(Error::InvalidArgument(format!("prediction must cover K = {k} users")));
    }
    let mut diag = SolverDiagnostics::default();
    let gate = AdmissionVector(
        (0..k)
            .map(|i| problem.certified[i] && prediction.scores[i] >= cfg.eta_thresh)
            .collect(),
    );
    let repaired = strict_repair(problem, &gate, &prediction.scalars, cfg, &mut diag);
    let costs = required_power_proxies(problem);
    let rest: Vec<usize> = (0..k)
        .filter(|&i| problem.certified[i] && !repaired.admitted.0[i])
        .collect();
    let widened = add_back(problem, repaired, &rest, &costs, &prediction.scalars, cfg, &mut diag);
    let solution = refine_qos_safe(problem, &widened, cfg, &mut diag);
    check_solution(problem, &solution)?;
    Ok(SolveOutcome {
        solution,
        diagnostics: diag,
    })
}

/// Hard post-conditions of every returned solution.
pub fn check_solution(problem: &SnapshotProblem, s: &BeamSolution) -> Result<()> {
    if s.power > problem.p_max {
        return Err(Error::Invariant(format!("power {} exceeds P_max {}", s.power, problem.p_max)));
    }
    for k in 0..problem.num_users() {
        if s.admitted.0[k] {
            if !problem.certified[k] {
                return Err(Error::Invariant(format!("user {k} admitted without a pointing certificate")));
            }
            if s.rates[k] < problem.r_min[k] {
                return Err(Error::Invariant(format!("user {k} rate {} below target {}", s.rates[k], problem.r_min[k])));
            }
        } else if s.d.column(k).iter().any(|z| z.norm_sqr() > 0.0) {
            return Err(Error::Invariant(format!("rejected user {k} has a non-zero beam")));
        }
    }
    if !s.feasible {
        return Err(Error::Invariant("solution not flagged feasible".into()));
    }
    Ok(())
}
