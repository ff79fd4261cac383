//! Closed-form radar transmit/receive beam design under the per-direction
//! SINR threshold and the total power budget.
//!
//! Transmit beams take the form `ū_z = η₁ â_z + η₂ e_z` with `â_z = a*(θ̄_z)/√Q`
//! and `e_z ⊥ â_z`. `η₁` makes the SINR constraint tight; `η₂` trades power
//! for lower leakage into the UEs through `R̄ = Σ_k R_RSk`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, c, CMat, CVec};
use crate::metrics::{self, EffectiveCovariances};
use crate::model::Scenario;
use crate::star_ris::PassiveBeamformer;

/// Residual norms below this leave `e_z` undefined.
pub const RESIDUAL_TOL: f64 = 1e-10;
const NULL_REL_TOL: f64 = 1e-10;
const BISECT_REL_TOL: f64 = 1e-9;

/// Radar beams for every detection direction.
#[derive(Debug, Clone, PartialEq)]
pub struct RadarBeams {
    /// Transmit beams `ū_z`.
    pub u: Vec<CVec>,
    /// Receive beams `w_z`; empty until [`RadarBeams::attach_receive`] runs.
    pub w: Vec<CVec>,
    pub lambda_star: f64,
    pub eta1: Vec<f64>,
    pub eta2: Vec<Complex64>,
    pub e: Vec<Option<CVec>>,
}

impl RadarBeams {
    pub fn from_transmit(u: Vec<CVec>) -> Self {
        let z = u.len();
        Self {
            u,
            w: Vec::new(),
            lambda_star: 0.0,
            eta1: vec![0.0; z],
            eta2: vec![c(0.0, 0.0); z],
            e: vec![None; z],
        }
    }

    /// All-zero transmit beams.
    pub fn silent(scenario: &Scenario) -> Self {
        Self::from_transmit(vec![CVec::zeros(scenario.q()); scenario.z()])
    }

    /// `ū_z = √(P_max/Z) a*(θ̄_z)/√Q`, spending the budget evenly.
    pub fn initial(scenario: &Scenario) -> Self {
        let z = scenario.z();
        let scale = (scenario.params().p_max / z as f64 / scenario.q() as f64).sqrt();
        Self::from_transmit(
            (0..z)
                .map(|i| scenario.steering(i).map(|v| v.conj() * scale))
                .collect(),
        )
    }

    /// Fills `w` with the SINR-maximizing receive beams for the current `ū`.
    pub fn attach_receive(&mut self, scenario: &Scenario, a_interf: &CMat) -> Result<()> {
        self.w = (0..self.u.len())
            .map(|z| optimal_receive_beam(scenario, a_interf, &self.u[z], z))
            .collect::<Result<_>>()?;
        Ok(())
    }

    pub fn total_power(&self) -> f64 {
        self.u.iter().map(|u| u.norm_squared()).sum()
    }

    /// Per-direction radar SINRs; requires receive beams.
    pub fn sinrs(&self, scenario: &Scenario, covs: &EffectiveCovariances) -> Result<Vec<f64>> {
        if self.w.len() != self.u.len() {
            return Err(Error::InvalidParameter("receive beams not computed".into()));
        }
        (0..self.u.len())
            .map(|z| metrics::radar_sinr(scenario, covs, &self.w[z], &self.u[z], z))
            .collect()
    }
}

/// BS-to-radar interference matrix `A` for a surface state.
pub fn interference_matrix_a(
    scenario: &Scenario,
    covs: &EffectiveCovariances,
    pb: &PassiveBeamformer,
) -> CMat {
    metrics::interference_matrix(scenario, pb, &covs.r_bsk, covs.lambda_bar, &covs.quartic)
}

fn noisy(scenario: &Scenario, a_interf: &CMat) -> CMat {
    let q = scenario.q();
    a_interf + CMat::identity(q, q) * c(scenario.params().sigma_r2, 0.0)
}

/// `w_z = (σ_r² I + A)^{-1} α_z a(θ̄_z) a^T(θ̄_z) ū_z`.
pub fn optimal_receive_beam(
    scenario: &Scenario,
    a_interf: &CMat,
    u: &CVec,
    z: usize,
) -> Result<CVec> {
    let a = scenario.steering(z);
    let rhs = a * (scenario.params().alpha[z] * a.dot(u));
    linalg::hpd_solve(&noisy(scenario, a_interf), &rhs)
}

/// Smallest `|a^T ū|²` that meets the SINR threshold with the optimal receive
/// beam: `γ^r / (|α_z|² a^H (σ_r² I + A)^{-1} a)`.
pub fn gamma_bar(scenario: &Scenario, a_interf: &CMat, z: usize) -> Result<f64> {
    let p = scenario.params();
    let a = scenario.steering(z);
    let x = linalg::hpd_solve(&noisy(scenario, a_interf), a)?;
    let q = a.dotc(&x).re;
    let alpha2 = p.alpha[z].norm_sqr();
    if !(q > 0.0) || alpha2 == 0.0 {
        return Err(Error::Numerical(format!(
            "direction {z} cannot reach any SINR"
        )));
    }
    Ok(p.gamma_r / (alpha2 * q))
}

/// Unit transmit direction `â_z = a*(θ̄_z)/√Q`.
pub fn unit_direction(scenario: &Scenario, z: usize) -> CVec {
    let a = scenario.steering(z);
    a.map(|v| v.conj()) / c((a.len() as f64).sqrt(), 0.0)
}

fn orthogonalize(v: &CVec, dir: &CVec) -> Option<CVec> {
    let r = v - dir * dir.dotc(v);
    let n = r.norm();
    if n < RESIDUAL_TOL * v.norm().max(1.0) || n < RESIDUAL_TOL {
        None
    } else {
        Some(r / c(n, 0.0))
    }
}

/// Principal eigenvector of `cov`, Gram-Schmidt-orthogonalized against
/// `a*(θ̄_z)` and normalized. `None` when the residual vanishes.
pub fn residual_direction(scenario: &Scenario, cov: &CMat, z: usize) -> Option<CVec> {
    let (_, v) = linalg::principal_eigenpair(cov);
    orthogonalize(&v, &unit_direction(scenario, z))
}

/// Residual direction through the null space of `cov`: `P⊥_â P_null â`,
/// normalized. With it the leakage `e^H R̄ e` lines up with `â^H R̄ â`, so the
/// leakage can be driven to zero as power grows. `None` when `â` has no
/// null-space component outside its own span.
pub fn null_residual_direction(scenario: &Scenario, cov: &CMat, z: usize) -> Option<CVec> {
    let dir = unit_direction(scenario, z);
    let p_null = linalg::null_space_projector(cov, NULL_REL_TOL);
    orthogonalize(&(&p_null * &dir), &dir)
}

/// How `e_z` is constructed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ResidualMode {
    /// Null-space residual ([`null_residual_direction`]).
    #[default]
    NullSpace,
    /// Principal-eigenvector residual ([`residual_direction`]).
    PrincipalEigenvector,
}

#[derive(Debug, Clone, Copy)]
struct DirectionTerms {
    eta1: f64,
    /// `e^H R̄ â`.
    b: Complex64,
    /// `e^H R̄ e`.
    d: f64,
}

impl DirectionTerms {
    fn eta2(&self, lambda: f64) -> Complex64 {
        if self.b == c(0.0, 0.0) {
            c(0.0, 0.0)
        } else {
            -self.b * (self.eta1 / (self.d + lambda))
        }
    }

    fn power(&self, lambda: f64) -> f64 {
        self.eta1 * self.eta1 + self.eta2(lambda).norm_sqr()
    }
}

/// Transmit beams minimizing `Σ_z ū_z^H R̄ ū_z` under the SINR and power
/// constraints, with `R̄ = Σ_k R_RSk`.
pub fn optimal_transmit_beams(
    scenario: &Scenario,
    covs: &EffectiveCovariances,
    mode: ResidualMode,
) -> Result<RadarBeams> {
    optimal_transmit_beams_for(scenario, &covs.a_interf, &covs.aggregate_radar_cov(), mode)
}

/// As [`optimal_transmit_beams`] with an explicit leakage covariance, e.g.
/// `h h^H` for a sampled radar-to-UE channel `h`.
pub fn optimal_transmit_beams_for(
    scenario: &Scenario,
    a_interf: &CMat,
    aggregate: &CMat,
    mode: ResidualMode,
) -> Result<RadarBeams> {
    let p_max = scenario.params().p_max;
    let zc = scenario.z();
    let q = scenario.q() as f64;
    let mut dirs = Vec::with_capacity(zc);
    let mut es = Vec::with_capacity(zc);
    let mut terms = Vec::with_capacity(zc);
    for z in 0..zc {
        let gb = gamma_bar(scenario, a_interf, z)?;
        let dir = unit_direction(scenario, z);
        let e = match mode {
            ResidualMode::NullSpace => null_residual_direction(scenario, aggregate, z),
            ResidualMode::PrincipalEigenvector => residual_direction(scenario, aggregate, z),
        };
        let (b, d) = match &e {
            Some(e) => {
                let re = aggregate * e;
                (re.dotc(&dir).conj(), e.dotc(&re).re.max(0.0))
            }
            None => (c(0.0, 0.0), 0.0),
        };
        terms.push(DirectionTerms {
            eta1: (gb / q).sqrt(),
            b,
            d,
        });
        dirs.push(dir);
        es.push(e);
    }

    let floor: f64 = terms.iter().map(|t| t.eta1 * t.eta1).sum();
    // a budget equal to the minimum up to round-off is accepted
    if floor > p_max * (1.0 + 1e-12) {
        return Err(Error::RadarInfeasible {
            p_max,
            min_required: floor,
        });
    }
    let total = |lambda: f64| terms.iter().map(|t| t.power(lambda)).sum::<f64>();
    // d = 0 with b ≠ 0 cannot happen for PSD R̄, so total(0) is finite
    let lambda_star = if total(0.0) <= p_max {
        0.0
    } else {
        let mut hi = terms.iter().map(|t| t.d).fold(0.0, f64::max).max(1e-300);
        let mut guard = 0;
        while total(hi) > p_max {
            hi *= 2.0;
            guard += 1;
            if guard > 4000 {
                return Err(Error::Numerical(
                    "could not bracket the power multiplier".into(),
                ));
            }
        }
        let mut lo = 0.0;
        for _ in 0..400 {
            if p_max - total(hi) <= BISECT_REL_TOL * p_max || hi - lo <= f64::EPSILON * hi {
                break;
            }
            let mid = 0.5 * (lo + hi);
            if total(mid) > p_max {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        hi
    };

    let mut u = Vec::with_capacity(zc);
    for z in 0..zc {
        let mut uz = &dirs[z] * c(terms[z].eta1, 0.0);
        if let Some(e) = &es[z] {
            uz += e * terms[z].eta2(lambda_star);
        }
        u.push(uz);
    }
    Ok(RadarBeams {
        u,
        w: Vec::new(),
        lambda_star,
        eta1: terms.iter().map(|t| t.eta1).collect(),
        eta2: terms.iter().map(|t| t.eta2(lambda_star)).collect(),
        e: es,
    })
}

/// Full radar step for a fixed surface: transmit beams, then receive beams.
pub fn design(
    scenario: &Scenario,
    covs: &EffectiveCovariances,
    mode: ResidualMode,
) -> Result<RadarBeams> {
    let mut beams = optimal_transmit_beams(scenario, covs, mode)?;
    beams.attach_receive(scenario, &covs.a_interf)?;
    Ok(beams)
}

/// Smallest budget for which the SINR constraints can be met.
pub fn minimum_budget(scenario: &Scenario, covs: &EffectiveCovariances) -> Result<f64> {
    let q = scenario.q() as f64;
    (0..scenario.z())
        .map(|z| gamma_bar(scenario, &covs.a_interf, z).map(|g| (g / q).sqrt().powi(2)))
        .sum()
}

/// Per-direction leakage `ū_z^H R̄ ū_z` predicted from the multiplier:
/// `(γ̄/Q²) a^T R̄ a* |1 − d/(d + λ)|²`, the factor taken as 1 when `e_z` is
/// undefined or `d = 0`.
pub fn predicted_leakage(
    scenario: &Scenario,
    a_interf: &CMat,
    aggregate: &CMat,
    beams: &RadarBeams,
    z: usize,
) -> Result<f64> {
    let q = scenario.q() as f64;
    let gb = gamma_bar(scenario, a_interf, z)?;
    let a = scenario.steering(z);
    let a_conj = a.map(|v| v.conj());
    let ara = linalg::quad_form(aggregate, &a_conj);
    let factor = match &beams.e[z] {
        Some(e) => {
            let d = linalg::quad_form(aggregate, e);
            if d + beams.lambda_star == 0.0 {
                1.0
            } else {
                (beams.lambda_star / (d + beams.lambda_star)).powi(2)
            }
        }
        None => 1.0,
    };
    Ok(gb / (q * q) * ara * factor)
}

/// Total radar-to-UE leakage `Σ_z ū_z^H R̄ ū_z` for each budget.
pub fn interference_vs_budget(
    scenario: &Scenario,
    covs: &EffectiveCovariances,
    budgets: &[f64],
    mode: ResidualMode,
) -> Result<Vec<(f64, f64)>> {
    let agg = covs.aggregate_radar_cov();
    budgets
        .iter()
        .map(|&b| {
            let s = scenario.with(|p| p.p_max = b)?;
            let beams = optimal_transmit_beams_for(&s, &covs.a_interf, &agg, mode)?;
            Ok((b, metrics::radar_leakage(&agg, &beams)))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Deployment;
    use crate::star_ris::random_phases;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Radar-friendly small scenario: radar noise well above BS leakage.
    fn small() -> Scenario {
        Deployment {
            m: 8,
            n_h: 3,
            n_v: 2,
            q: 6,
            k_t: 2,
            k_r: 2,
            detection_angles: vec![-0.9, -0.35, 0.45, 0.8],
            p_max: 100.0,
            ..Deployment::default()
        }
        .build()
        .unwrap()
    }

    fn random_psd(q: usize, rng: &mut ChaCha8Rng) -> CMat {
        let b = CMat::from_fn(q, q, |_, _| {
            c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
        });
        &b * b.adjoint()
    }

    #[test]
    fn receive_beam_without_interference() {
        let s = small();
        let q = s.q();
        let zero = CMat::zeros(q, q);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let u = CVec::from_fn(q, |_, _| {
            c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
        });
        let w = optimal_receive_beam(&s, &zero, &u, 1).unwrap();
        let a = s.steering(1);
        // w is parallel to a
        let proj = a * (a.dotc(&w) / c(q as f64, 0.0));
        assert!((&w - proj).norm() < 1e-12 * w.norm());
        let p = s.params();
        let covs = EffectiveCovariances {
            a_interf: zero,
            ..EffectiveCovariances::new(&s, &PassiveBeamformer::uniform(s.n())).unwrap()
        };
        let g = metrics::radar_sinr(&s, &covs, &w, &u, 1).unwrap();
        let want = p.alpha[1].norm_sqr() * q as f64 * a.dot(&u).norm_sqr() / p.sigma_r2;
        assert!((g - want).abs() < 1e-9 * want);
        let scaled = &w * c(-2.5, 4.0);
        let g2 = metrics::radar_sinr(&s, &covs, &scaled, &u, 1).unwrap();
        assert!((g - g2).abs() < 1e-12 * g);
    }

    #[test]
    fn receive_beam_beats_random_beams() {
        let s = small();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let q = s.q();
        let base = EffectiveCovariances::new(&s, &PassiveBeamformer::uniform(s.n())).unwrap();
        let covs = EffectiveCovariances {
            a_interf: random_psd(q, &mut rng) * c(s.params().sigma_r2, 0.0),
            ..base
        };
        let u = CVec::from_fn(q, |_, _| {
            c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
        });
        let w = optimal_receive_beam(&s, &covs.a_interf, &u, 2).unwrap();
        let best = metrics::radar_sinr(&s, &covs, &w, &u, 2).unwrap();
        for _ in 0..100 {
            let v = CVec::from_fn(q, |_, _| {
                c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
            });
            assert!(metrics::radar_sinr(&s, &covs, &v, &u, 2).unwrap() <= best * (1.0 + 1e-10));
        }
    }

    #[test]
    fn gamma_bar_examples() {
        let s = small();
        let q = s.q();
        let zero = CMat::zeros(q, q);
        let p = s.params();
        let g = gamma_bar(&s, &zero, 0).unwrap();
        let want = p.gamma_r * p.sigma_r2 / (p.alpha[0].norm_sqr() * q as f64);
        assert!((g - want).abs() < 1e-12 * want);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let a1 = random_psd(q, &mut rng) * c(p.sigma_r2, 0.0);
        let a2 = &a1 + random_psd(q, &mut rng) * c(p.sigma_r2, 0.0);
        let g1 = gamma_bar(&s, &a1, 0).unwrap();
        let g2 = gamma_bar(&s, &a2, 0).unwrap();
        assert!(g > 0.0 && g <= g1 * (1.0 + 1e-12) && g1 <= g2 * (1.0 + 1e-12));
    }

    #[test]
    fn residual_direction_examples() {
        let s = small();
        let dir = unit_direction(&s, 0);
        let aligned = &dir * dir.adjoint();
        assert!(residual_direction(&s, &aligned, 0).is_none());
        // v orthogonal to â: residual is v itself up to phase
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let raw = CVec::from_fn(s.q(), |_, _| {
            c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
        });
        let v = &raw - &dir * dir.dotc(&raw);
        let e = residual_direction(&s, &(&v * v.adjoint()), 0).unwrap();
        let vn = &v / c(v.norm(), 0.0);
        assert!((e.dotc(&vn).norm() - 1.0).abs() < 1e-10);
        let cov = random_psd(s.q(), &mut rng);
        let e = residual_direction(&s, &cov, 0).unwrap();
        assert!((e.norm() - 1.0).abs() < 1e-12);
        assert!(s.steering(0).dot(&e).norm() < 1e-10);
    }

    #[test]
    fn null_residual_matches_gram_schmidt_for_rank_one() {
        let s = small();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let h = CVec::from_fn(s.q(), |_, _| {
            c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
        });
        let cov = &h * h.adjoint();
        let a = null_residual_direction(&s, &cov, 1).unwrap();
        let b = residual_direction(&s, &cov, 1).unwrap();
        assert!((a.dotc(&b).norm() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn all_undefined_gives_pure_steering() {
        let s = small();
        let q = s.q();
        let covs = EffectiveCovariances::new(&s, &PassiveBeamformer::uniform(s.n())).unwrap();
        // full-rank leakage covariance: no null space, every e_z undefined
        let eye = CMat::identity(q, q);
        let beams =
            optimal_transmit_beams_for(&s, &covs.a_interf, &eye, ResidualMode::NullSpace).unwrap();
        for z in 0..s.z() {
            assert!(beams.e[z].is_none());
            let gb = gamma_bar(&s, &covs.a_interf, z).unwrap();
            let want = s.steering(z).map(|v| v.conj()) * c((gb / (q * q) as f64).sqrt(), 0.0);
            assert!((&beams.u[z] - want).norm() < 1e-12 * beams.u[z].norm());
        }
    }

    #[test]
    fn infeasible_budget_reports_minimum() {
        let s = small();
        let covs = EffectiveCovariances::new(&s, &PassiveBeamformer::uniform(s.n())).unwrap();
        let need = minimum_budget(&s, &covs).unwrap();
        let tight = s.with(|p| p.p_max = need * 0.5).unwrap();
        match optimal_transmit_beams(&tight, &covs, ResidualMode::NullSpace) {
            Err(Error::RadarInfeasible { min_required, .. }) => {
                assert!((min_required - need).abs() < 1e-12 * need)
            }
            other => panic!("expected infeasible, got {other:?}"),
        }
        // exactly at the boundary nothing is left for η₂
        let edge = s.with(|p| p.p_max = need * (1.0 + 1e-12)).unwrap();
        let beams = optimal_transmit_beams(&edge, &covs, ResidualMode::NullSpace).unwrap();
        for e2 in &beams.eta2 {
            assert!(e2.norm() < 1e-4 * beams.eta1[0]);
        }
    }

    fn check_solution(s: &Scenario, pb: &PassiveBeamformer) {
        let covs = EffectiveCovariances::new(s, pb).unwrap();
        let beams = design(s, &covs, ResidualMode::NullSpace).unwrap();
        let p = s.params();
        for g in beams.sinrs(s, &covs).unwrap() {
            assert!(g >= p.gamma_r - 1e-9 * p.gamma_r, "{g}");
        }
        let power = beams.total_power();
        assert!(power <= p.p_max * (1.0 + 1e-12));
        assert!((beams.lambda_star * (power - p.p_max)).abs() <= 1e-6 * p.gamma_r * p.p_max);
        let agg = covs.aggregate_radar_cov();
        for z in 0..s.z() {
            if let Some(e) = &beams.e[z] {
                assert!((e.norm() - 1.0).abs() < 1e-12);
                assert!(s.steering(z).dot(e).norm() < 1e-10);
            }
            let got = linalg::quad_form(&agg, &beams.u[z]);
            let want = predicted_leakage(s, &covs.a_interf, &agg, &beams, z).unwrap();
            let undamped = beams.eta1[z].powi(2) * linalg::quad_form(&agg, &unit_direction(s, z));
            assert!((got - want).abs() <= 1e-9 * undamped, "{got} vs {want}");
        }
        // receive beam is a fixed point
        let mut again = beams.clone();
        again.attach_receive(s, &covs.a_interf).unwrap();
        for (x, y) in again
            .sinrs(s, &covs)
            .unwrap()
            .iter()
            .zip(beams.sinrs(s, &covs).unwrap())
        {
            assert!((x - y).abs() < 1e-12 * y);
        }
    }

    #[test]
    fn constraints_hold_across_budgets() {
        let s = small();
        let pb = random_phases(s.n(), &mut ChaCha8Rng::seed_from_u64(8));
        let covs = EffectiveCovariances::new(&s, &pb).unwrap();
        let need = minimum_budget(&s, &covs).unwrap();
        for f in [1.01, 1.5, 3.0, 10.0, 1e4] {
            let sb = s.with(|p| p.p_max = need * f).unwrap();
            check_solution(&sb, &pb);
        }
    }

    #[test]
    fn huge_budget_leaves_multiplier_zero() {
        let s = small().with(|p| p.p_max = 1e30).unwrap();
        let covs = EffectiveCovariances::new(&s, &PassiveBeamformer::uniform(s.n())).unwrap();
        let beams = optimal_transmit_beams(&s, &covs, ResidualMode::NullSpace).unwrap();
        assert_eq!(beams.lambda_star, 0.0);
        let leak = metrics::radar_leakage(&covs.aggregate_radar_cov(), &beams);
        let silent = metrics::radar_leakage(&covs.aggregate_radar_cov(), &RadarBeams::initial(&s));
        assert!(leak < 1e-12 * silent);
    }

    #[test]
    fn angle_zero_keeps_a_leakage_floor() {
        // with Q = 8 the correlation grid has an angle at 0, so a(0) lies in
        // the range of R_R and no budget nulls it
        let s = Deployment {
            m: 8,
            n_h: 3,
            n_v: 2,
            q: 8,
            detection_angles: vec![-0.9, 0.0, 0.8],
            p_max: 1e30,
            ..Deployment::default()
        }
        .build()
        .unwrap();
        let covs = EffectiveCovariances::new(&s, &PassiveBeamformer::uniform(s.n())).unwrap();
        let beams = optimal_transmit_beams(&s, &covs, ResidualMode::NullSpace).unwrap();
        let agg = covs.aggregate_radar_cov();
        let floor = beams.eta1[1].powi(2) * linalg::quad_form(&agg, &unit_direction(&s, 1));
        let got = linalg::quad_form(&agg, &beams.u[1]);
        assert!(floor > 0.0);
        assert!((got - floor).abs() < 1e-9 * floor, "{got} vs {floor}");
        for z in [0, 2] {
            assert!(linalg::quad_form(&agg, &beams.u[z]) < 1e-12 * floor);
        }
    }

    #[test]
    fn a_matrix_examples() {
        let s = small();
        let pb = random_phases(s.n(), &mut ChaCha8Rng::seed_from_u64(9));
        let covs = EffectiveCovariances::new(&s, &pb).unwrap();
        assert!(linalg::check_hermitian_psd("A", &covs.a_interf, 1e-10).is_ok());
        let quiet = s.with(|p| p.rho = 0.0).unwrap();
        let qc = EffectiveCovariances::new(&quiet, &pb).unwrap();
        assert_eq!(interference_matrix_a(&quiet, &qc, &pb).norm(), 0.0);
        let off = PassiveBeamformer::off(s.n());
        let oc = EffectiveCovariances::new(&s, &off).unwrap();
        let a = interference_matrix_a(&s, &oc, &off);
        let r = &s.params().r_radar;
        let ratio = a[(0, 0)].re / r[(0, 0)].re;
        assert!((a - r * c(ratio, 0.0)).norm() < 1e-12 * ratio * r.norm());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]
        #[test]
        fn leakage_non_increasing_in_budget(seed in 0u64..10_000) {
            let s = small();
            let pb = random_phases(s.n(), &mut ChaCha8Rng::seed_from_u64(seed));
            let covs = EffectiveCovariances::new(&s, &pb).unwrap();
            let need = minimum_budget(&s, &covs).unwrap();
            let budgets: Vec<f64> = (0..8).map(|i| need * (1.0 + 0.4 * i as f64)).collect();
            let curve = interference_vs_budget(&s, &covs, &budgets, ResidualMode::NullSpace).unwrap();
            for w in curve.windows(2) {
                prop_assert!(w[1].1 <= w[0].1 * (1.0 + 1e-9));
            }
        }
    }
}
