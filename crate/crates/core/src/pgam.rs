//! Projected gradient ascent over the surface phases and amplitudes with
//! backtracking, plus multi-start.
//!
//! For fixed radar beams the sum SE depends on the surface only through the
//! traces `T_w = φ_w^H G φ_w` (`φ_w = β^w ⊙ θ^w`, `G = |R_RIS|²`) and the
//! quartic terms `Q_ab = tr(Y_a R_RIS Y_b R_RIS)`, `Y_w = Φ_w R_RIS Φ_w^H`.
//!
//! Gradient convention: `∇_θ` is the Wirtinger gradient `∂SE/∂θ*`, so that
//! `dSE = 2 Re(∇_θ^H dθ) + ∇_β^T dβ`. The ascent step is `θ + μ∇_θ`.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, c, CMat};
use crate::metrics::{region_index, surface_gram, Moments};
use crate::model::{Region, Scenario};
use crate::radar::RadarBeams;
use crate::star_ris::{
    canonicalize, project_beta, project_theta, random_phases, PassiveBeamformer, Protocol,
};

/// Line-search trial cap per iteration.
pub const MAX_TRIALS: usize = 100;
/// Step-size floor.
pub const MU_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PgamOptions {
    pub mu_init: f64,
    pub kappa: f64,
    pub tol: f64,
    pub max_iters: usize,
    pub n_starts: usize,
    pub seed: u64,
    /// Keep amplitudes fixed and move only the phases.
    pub phase_only: bool,
}

impl Default for PgamOptions {
    fn default() -> Self {
        Self {
            mu_init: 1e4,
            kappa: 0.5,
            tol: 1e-5,
            max_iters: 200,
            n_starts: 5,
            seed: 0,
            phase_only: false,
        }
    }
}

impl PgamOptions {
    pub fn validate(&self) -> Result<()> {
        if !(self.mu_init > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "mu_init must be positive, got {}",
                self.mu_init
            )));
        }
        if !(self.kappa > 0.0 && self.kappa < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "kappa must lie in (0, 1), got {}",
                self.kappa
            )));
        }
        if !(self.tol > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "tol must be positive, got {}",
                self.tol
            )));
        }
        if self.max_iters == 0 || self.n_starts == 0 {
            return Err(Error::InvalidParameter(
                "max_iters and n_starts must be at least 1".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Termination {
    /// Objective increase fell below the tolerance.
    Tolerance,
    IterationCap,
    /// The projected step did not move the point.
    Stationary,
    /// Backtracking hit the trial cap or the step-size floor.
    LineSearchStalled,
}

impl Termination {
    pub fn label(self) -> &'static str {
        match self {
            Termination::Tolerance => "tolerance",
            Termination::IterationCap => "iteration-cap",
            Termination::Stationary => "stationary",
            Termination::LineSearchStalled => "line-search-stalled",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimizationTrace {
    /// Objective at the initial point, then after every accepted step.
    pub objective: Vec<f64>,
    /// Accepted step size per iteration.
    pub step: Vec<f64>,
    /// Line-search trials per iteration.
    pub trials: Vec<usize>,
    pub termination: Termination,
}

impl OptimizationTrace {
    pub fn final_objective(&self) -> f64 {
        *self
            .objective
            .last()
            .expect("trace holds the initial objective")
    }

    pub fn iterations(&self) -> usize {
        self.step.len()
    }
}

#[derive(Debug, Clone, Copy)]
struct UeConst {
    region: usize,
    gain_bs: f64,
    gain_bs_ris: f64,
    gain_radar: f64,
    gain_radar_ris: f64,
}

/// Sum-SE objective for fixed radar beams.
#[derive(Debug, Clone)]
pub struct SeObjective<'a> {
    scenario: &'a Scenario,
    moments: Moments,
    ues: Vec<UeConst>,
    s1: f64,
    s2: f64,
    /// `Σ_z ū_z^H R_R ū_z / (Z L)`.
    radar: f64,
}

/// Value and gradients at one point.
#[derive(Debug, Clone)]
pub struct Gradients {
    pub value: f64,
    /// `[∂SE/∂θ^t*; ∂SE/∂θ^r*]`.
    pub theta: Vec<Complex64>,
    /// `[∂SE/∂β^t; ∂SE/∂β^r]`.
    pub beta: Vec<f64>,
}

struct Eval {
    value: f64,
    /// `∂SE/∂T_w`.
    d_t: [f64; 2],
    /// `∂SE/∂Q_ab`, treating `Q_ab` and `Q_ba` as separate arguments.
    d_q: [[f64; 2]; 2],
}

/// Surface-dependent quantities at one point.
struct Surface {
    phis: [Vec<Complex64>; 2],
    /// `G φ_w`.
    g_phis: [Vec<Complex64>; 2],
    t: [f64; 2],
    /// `R_RIS Y_w R_RIS`; empty under Gaussian moments.
    w: Vec<CMat>,
    q: [[f64; 2]; 2],
}

impl<'a> SeObjective<'a> {
    pub fn new(scenario: &'a Scenario, beams: &RadarBeams) -> Self {
        Self::with_moments(scenario, beams, Moments::Exact)
    }

    pub fn with_moments(scenario: &'a Scenario, beams: &RadarBeams, moments: Moments) -> Self {
        let p = scenario.params();
        let ues = (0..scenario.k())
            .map(|k| {
                let ue = scenario.ue(k);
                UeConst {
                    region: region_index(ue.region),
                    gain_bs: ue.gain_bs,
                    gain_bs_ris: scenario.gain_bs_ris_ue(k),
                    gain_radar: ue.gain_radar,
                    gain_radar_ris: scenario.gain_radar_ris_ue(k),
                }
            })
            .collect();
        let leak = crate::metrics::radar_leakage(&p.r_radar, beams);
        Self {
            scenario,
            moments,
            ues,
            s1: scenario.trace_r_bs(),
            s2: scenario.trace_r_bs_sq(),
            radar: leak / (scenario.z() * p.pri) as f64,
        }
    }

    pub fn scenario(&self) -> &Scenario {
        self.scenario
    }

    /// `G φ_w` for one region.
    fn kernel_times(&self, phi: &[Complex64]) -> Vec<Complex64> {
        let g = self.scenario.ris_kernel();
        let n = phi.len();
        let mut out = vec![c(0.0, 0.0); n];
        for j in 0..n {
            let pj = phi[j];
            if pj == c(0.0, 0.0) {
                continue;
            }
            for (i, o) in out.iter_mut().enumerate() {
                *o += pj * g[(i, j)];
            }
        }
        out
    }

    fn surface(&self, pb: &PassiveBeamformer) -> Surface {
        let phis = [
            pb.coefficients(Region::Transmit),
            pb.coefficients(Region::Reflect),
        ];
        let g_phis = [
            self.kernel_times(phis[0].as_slice()),
            self.kernel_times(phis[1].as_slice()),
        ];
        let t = [0, 1].map(|w| {
            phis[w]
                .iter()
                .zip(&g_phis[w])
                .map(|(a, b)| (a.conj() * b).re)
                .sum()
        });
        let mut q = [[0.0; 2]; 2];
        let mut w = Vec::new();
        if self.moments == Moments::Exact {
            let r = &self.scenario.params().r_ris;
            let y: Vec<CMat> = phis.iter().map(|phi| surface_gram(r, phi)).collect();
            w = y.iter().map(|y| r * y * r).collect();
            for a in 0..2 {
                for b in 0..2 {
                    q[a][b] = linalg::trace_prod(&y[a], &w[b]).re;
                }
            }
        }
        Surface {
            phis: phis.map(|v| v.iter().copied().collect()),
            g_phis,
            t,
            w,
            q,
        }
    }

    fn eval(&self, t: [f64; 2], q: [[f64; 2]; 2]) -> Eval {
        let p = self.scenario.params();
        let kk = self.ues.len() as f64;
        let (s1, s2) = (self.s1, self.s2);
        let ck: Vec<f64> = self
            .ues
            .iter()
            .map(|u| u.gain_bs + u.gain_bs_ris * t[u.region])
            .collect();
        let total: f64 = ck.iter().sum();
        let noise_scale = kk * s1 / p.rho;
        let mut d_total = [0.0; 2];
        for u in &self.ues {
            d_total[u.region] += u.gain_bs_ris;
        }
        let mut value = 0.0;
        let mut d_t = [0.0; 2];
        let mut d_q = [[0.0; 2]; 2];
        for (k, u) in self.ues.iter().enumerate() {
            let w = u.region;
            let rk = u.gain_radar + u.gain_radar_ris * t[w];
            let inner = ck[k] * s2 + noise_scale * (rk * self.radar + p.sigma_c2);
            // coefficient of Q_{w, w_i} in the interference
            let mut fourth_coef = [0.0; 2];
            for (i, v) in self.ues.iter().enumerate() {
                let scale = if i == k { s1 * s1 + s2 } else { s1 * s1 };
                fourth_coef[v.region] += u.gain_bs_ris * v.gain_bs_ris * scale;
            }
            let fourth = fourth_coef[0] * q[w][0] + fourth_coef[1] * q[w][1];
            let sig = ck[k] * ck[k] * s1 * s1;
            let intf = total * inner + fourth;
            let gamma = sig / intf;
            value += gamma.ln_1p();
            let outer = 1.0 / (1.0 + gamma);
            for (v, d_t) in d_t.iter_mut().enumerate() {
                let own = if v == w { 1.0 } else { 0.0 };
                let dck = own * u.gain_bs_ris;
                let drk = own * u.gain_radar_ris;
                let dsig = 2.0 * ck[k] * s1 * s1 * dck;
                let dintf =
                    d_total[v] * inner + total * (dck * s2 + noise_scale * drk * self.radar);
                let dgamma = (dsig * intf - sig * dintf) / (intf * intf);
                *d_t += dgamma * outer;
            }
            let dgamma_dintf = -sig / (intf * intf) * outer;
            for b in 0..2 {
                d_q[w][b] += dgamma_dintf * fourth_coef[b];
            }
        }
        let scale = p.se_prefactor / std::f64::consts::LN_2;
        Eval {
            value: value * scale,
            d_t: d_t.map(|d| d * scale),
            d_q: d_q.map(|row| row.map(|d| d * scale)),
        }
    }

    pub fn value(&self, pb: &PassiveBeamformer) -> f64 {
        let s = self.surface(pb);
        self.eval(s.t, s.q).value
    }

    pub fn gradients(&self, pb: &PassiveBeamformer) -> Gradients {
        let s = self.surface(pb);
        let ev = self.eval(s.t, s.q);
        let n = pb.n();
        let r = &self.scenario.params().r_ris;
        // ∂SE/∂φ_w*
        let mut d_phi: [Vec<Complex64>; 2] =
            [0, 1].map(|w| s.g_phis[w].iter().map(|g| g * ev.d_t[w]).collect());
        if !s.w.is_empty() {
            for (w, d) in d_phi.iter_mut().enumerate() {
                for b in 0..2 {
                    // ∂Q_wb/∂φ_w* = ((R Y_b R) ⊙ R^T) φ_w, and the same for Q_bw
                    let coef = ev.d_q[w][b] + ev.d_q[b][w];
                    if coef == 0.0 {
                        continue;
                    }
                    let wb = &s.w[b];
                    for (i, di) in d.iter_mut().enumerate() {
                        let mut acc = c(0.0, 0.0);
                        for j in 0..n {
                            acc += wb[(i, j)] * r[(j, i)] * s.phis[w][j];
                        }
                        *di += acc * coef;
                    }
                }
            }
        }
        let mut theta = Vec::with_capacity(2 * n);
        let mut beta = Vec::with_capacity(2 * n);
        for (w, region) in [Region::Transmit, Region::Reflect].into_iter().enumerate() {
            let b = pb.beta(region);
            theta.extend((0..n).map(|i| d_phi[w][i] * b[i]));
        }
        for (w, region) in [Region::Transmit, Region::Reflect].into_iter().enumerate() {
            let th = pb.theta(region);
            beta.extend((0..n).map(|i| 2.0 * (th[i].conj() * d_phi[w][i]).re));
        }
        Gradients {
            value: ev.value,
            theta,
            beta,
        }
    }
}

/// `∂SE/∂θ*` for both regions.
pub fn grad_theta(
    scenario: &Scenario,
    beams: &RadarBeams,
    pb: &PassiveBeamformer,
) -> Vec<Complex64> {
    SeObjective::new(scenario, beams).gradients(pb).theta
}

/// `∂SE/∂β` for both regions.
pub fn grad_beta(scenario: &Scenario, beams: &RadarBeams, pb: &PassiveBeamformer) -> Vec<f64> {
    SeObjective::new(scenario, beams).gradients(pb).beta
}

/// `diag(R_RIS Φ_w R_RIS diag(β^w))`: the phase direction of the trace term,
/// written with explicit matrices.
pub fn trace_direction_matrix_form(
    scenario: &Scenario,
    pb: &PassiveBeamformer,
    region: Region,
) -> Vec<Complex64> {
    let r = &scenario.params().r_ris;
    let phi = crate::star_ris::pb_matrix(pb, region);
    let beta = CMat::from_diagonal(&pb.coefficients(region).map(|_| c(0.0, 0.0)))
        + CMat::from_fn(pb.n(), pb.n(), |i, j| {
            if i == j {
                c(pb.beta(region)[i], 0.0)
            } else {
                c(0.0, 0.0)
            }
        });
    let m = r * phi * r * beta;
    (0..pb.n()).map(|i| m[(i, i)]).collect()
}

/// Local quadratic model of the objective around `pb`:
/// `SE + 2Re⟨∇_θ, x − θ⟩ + ⟨∇_β, y − β⟩ − (‖x − θ‖² + ‖y − β‖²)/μ`.
pub fn quadratic_model(
    pb: &PassiveBeamformer,
    grads: &Gradients,
    candidate: &PassiveBeamformer,
    mu: f64,
) -> f64 {
    let th0 = pb.stacked_theta();
    let th1 = candidate.stacked_theta();
    let b0 = pb.stacked_beta();
    let b1 = candidate.stacked_beta();
    let mut lin = 0.0;
    let mut dist = 0.0;
    for i in 0..th0.len() {
        let d = th1[i] - th0[i];
        lin += 2.0 * (grads.theta[i].conj() * d).re;
        dist += d.norm_sqr();
        let e = b1[i] - b0[i];
        lin += grads.beta[i] * e;
        dist += e * e;
    }
    grads.value + lin - dist / mu
}

/// One projected step `θ' = P_Θ(θ + μ∇_θ)`, `β' = P_B(β + μ∇_β)`.
pub fn pgam_step(
    pb: &PassiveBeamformer,
    grads: &Gradients,
    mu: f64,
    phase_only: bool,
) -> PassiveBeamformer {
    let th: Vec<Complex64> = pb
        .stacked_theta()
        .iter()
        .zip(&grads.theta)
        .map(|(t, g)| t + g * mu)
        .collect();
    let theta = project_theta(&th);
    let beta = if phase_only {
        pb.stacked_beta()
    } else {
        let b: Vec<f64> = pb
            .stacked_beta()
            .iter()
            .zip(&grads.beta)
            .map(|(b, g)| b + g * mu)
            .collect();
        project_beta(&b)
    };
    PassiveBeamformer::from_stacked(&theta, &beta, pb.protocol)
        .expect("stacked blocks keep their length")
}

fn check_finite(g: &Gradients) -> Result<()> {
    if !g.value.is_finite()
        || g.theta
            .iter()
            .any(|z| !z.re.is_finite() || !z.im.is_finite())
        || g.beta.iter().any(|b| !b.is_finite())
    {
        return Err(Error::Numerical("non-finite objective or gradient".into()));
    }
    Ok(())
}

/// Backtracking projected gradient ascent from `init`.
///
/// Mode-switching and surface-free points keep their amplitudes; only the
/// phases move.
pub fn pgam_optimize(
    scenario: &Scenario,
    beams: &RadarBeams,
    init: &PassiveBeamformer,
    opts: &PgamOptions,
) -> Result<(PassiveBeamformer, OptimizationTrace)> {
    opts.validate()?;
    if init.n() != scenario.n() {
        return Err(Error::Dimension(format!(
            "beamformer has {} elements, surface has {}",
            init.n(),
            scenario.n()
        )));
    }
    init.check_feasible()?;
    let objective = SeObjective::new(scenario, beams);
    let phase_only = opts.phase_only || init.protocol != Protocol::Es;
    let mut cur = init.clone();
    let mut grads = objective.gradients(&cur);
    check_finite(&grads)?;
    let mut trace = OptimizationTrace {
        objective: vec![grads.value],
        step: Vec::new(),
        trials: Vec::new(),
        termination: Termination::IterationCap,
    };
    if init.protocol == Protocol::Off {
        trace.termination = Termination::Stationary;
        return Ok((cur, trace));
    }
    let mut mu = opts.mu_init;
    for _ in 0..opts.max_iters {
        let mut accepted = None;
        let mut trials = 0;
        while trials < MAX_TRIALS && mu >= MU_FLOOR {
            trials += 1;
            let cand = pgam_step(&cur, &grads, mu, phase_only);
            if cand == cur {
                accepted = Some((cand, grads.value));
                break;
            }
            let val = objective.value(&cand);
            if !val.is_finite() {
                return Err(Error::Numerical(
                    "non-finite objective at a candidate".into(),
                ));
            }
            if val > quadratic_model(&cur, &grads, &cand, mu) && val >= grads.value {
                accepted = Some((cand, val));
                break;
            }
            mu *= opts.kappa;
        }
        let Some((cand, val)) = accepted else {
            trace.termination = Termination::LineSearchStalled;
            break;
        };
        let moved = cand != cur;
        let gain = val - grads.value;
        trace.trials.push(trials);
        trace.step.push(mu);
        trace.objective.push(val);
        if !moved {
            trace.termination = Termination::Stationary;
            break;
        }
        cur = cand;
        grads = objective.gradients(&cur);
        check_finite(&grads)?;
        if gain < opts.tol {
            trace.termination = Termination::Tolerance;
            break;
        }
    }
    Ok((canonicalize(&cur), trace))
}

#[derive(Debug, Clone)]
pub struct MultiStartResult {
    pub best: PassiveBeamformer,
    pub best_index: usize,
    pub runs: Vec<(PassiveBeamformer, OptimizationTrace)>,
}

impl MultiStartResult {
    pub fn best_trace(&self) -> &OptimizationTrace {
        &self.runs[self.best_index].1
    }

    pub fn best_objective(&self) -> f64 {
        self.best_trace().final_objective()
    }
}

/// Runs `n_starts` optimizations from random ES points (phases uniform,
/// `β = √0.5`) and keeps the best. Start `i` draws from stream `i` of `opts.seed`.
pub fn multi_start(
    scenario: &Scenario,
    beams: &RadarBeams,
    opts: &PgamOptions,
) -> Result<MultiStartResult> {
    let inits: Vec<PassiveBeamformer> = (0..opts.n_starts)
        .map(|i| random_phases(scenario.n(), &mut crate::stream_rng(opts.seed, i as u64)))
        .collect();
    multi_start_from(scenario, beams, &inits, opts)
}

/// Multi-start over explicit initial points, run in parallel.
pub fn multi_start_from(
    scenario: &Scenario,
    beams: &RadarBeams,
    inits: &[PassiveBeamformer],
    opts: &PgamOptions,
) -> Result<MultiStartResult> {
    if inits.is_empty() {
        return Err(Error::InvalidParameter(
            "multi-start needs at least one initial point".into(),
        ));
    }
    let runs: Vec<(PassiveBeamformer, OptimizationTrace)> = inits
        .par_iter()
        .map(|init| pgam_optimize(scenario, beams, init, opts))
        .collect::<Result<_>>()?;
    let mut best_index = 0;
    for (i, r) in runs.iter().enumerate() {
        if r.1.final_objective() > runs[best_index].1.final_objective() {
            best_index = i;
        }
    }
    Ok(MultiStartResult {
        best: runs[best_index].0.clone(),
        best_index,
        runs,
    })
}
