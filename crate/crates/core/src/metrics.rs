//! Closed-form statistical-CSI quantities: effective covariances, the MRT
//! normalization, radar and UE SINRs and the sum SE.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, c, CMat, CVec};
use crate::model::{Region, Scenario};
use crate::radar::RadarBeams;
use crate::star_ris::{pb_matrix, PassiveBeamformer};

/// `tr(R_RIS Φ_w R_RIS Φ_w^H)` evaluated with explicit matrices.
pub fn ris_trace(scenario: &Scenario, pb: &PassiveBeamformer, region: Region) -> f64 {
    let phi = pb_matrix(pb, region);
    let r = &scenario.params().r_ris;
    let left = r * &phi;
    let right = r * phi.adjoint();
    linalg::trace_prod(&left, &right).re
}

/// `tr(R_RIS Φ_w R_RIS Φ_w^H)` as the quadratic form `φ^H G φ`, with
/// `G = |R_RIS|²` entrywise.
pub fn ris_trace_fast(scenario: &Scenario, pb: &PassiveBeamformer, region: Region) -> f64 {
    let phi = pb.coefficients(region);
    let g = scenario.ris_kernel();
    let n = phi.len();
    let mut acc = 0.0;
    for j in 0..n {
        let mut col = c(0.0, 0.0);
        for i in 0..n {
            col += phi[i].conj() * g[(i, j)];
        }
        acc += (col * phi[j]).re;
    }
    acc
}

/// `R_BSk = (β̃_Bk + β̃_BSk tr(R_RIS Φ R_RIS Φ^H)) R_BS`.
pub fn effective_cov_bs(scenario: &Scenario, pb: &PassiveBeamformer, k: usize) -> CMat {
    let ue = scenario.ue(k);
    let t = ris_trace(scenario, pb, ue.region);
    &scenario.params().r_bs * c(ue.gain_bs + scenario.gain_bs_ris_ue(k) * t, 0.0)
}

/// `R_RSk = (β̃_Rk + β̃_RSk tr(R_RIS Φ R_RIS Φ^H)) R_R`.
pub fn effective_cov_radar(scenario: &Scenario, pb: &PassiveBeamformer, k: usize) -> CMat {
    let ue = scenario.ue(k);
    let t = ris_trace(scenario, pb, ue.region);
    &scenario.params().r_radar * c(ue.gain_radar + scenario.gain_radar_ris_ue(k) * t, 0.0)
}

/// `λ̄ = 1/Σ_i tr(R_BSi)`.
pub fn normalization_lambda(r_bsk: &[CMat]) -> Result<f64> {
    let mut total = 0.0;
    for (i, r) in r_bsk.iter().enumerate() {
        let t = linalg::trace_re(r);
        if !(t > 0.0) {
            return Err(Error::Numerical(format!(
                "tr(R_BS{i}) = {t} is not positive"
            )));
        }
        total += t;
    }
    if total == 0.0 {
        return Err(Error::InvalidParameter("no UEs".into()));
    }
    Ok(1.0 / total)
}

/// `Y_w = (φ_w φ_w^H) ⊙ R_RIS`, i.e. `Φ_w R_RIS Φ_w^H`.
pub fn surface_gram(r_ris: &CMat, phi: &CVec) -> CMat {
    CMat::from_fn(r_ris.nrows(), r_ris.ncols(), |i, j| {
        phi[i] * r_ris[(i, j)] * phi[j].conj()
    })
}

/// `tr(Y_a R_RIS Y_b R_RIS)` with explicit matrices: the fourth moment
/// `E|v_a^H v_b|²` of two independent cascaded surface outputs.
pub fn ris_quartic(scenario: &Scenario, pb: &PassiveBeamformer, a: Region, b: Region) -> f64 {
    let r = &scenario.params().r_ris;
    let left = pb_matrix(pb, a) * r * pb_matrix(pb, a).adjoint() * r;
    let right = pb_matrix(pb, b) * r * pb_matrix(pb, b).adjoint() * r;
    linalg::trace_prod(&left, &right).re
}

pub(crate) fn region_index(r: Region) -> usize {
    match r {
        Region::Transmit => 0,
        Region::Reflect => 1,
    }
}

/// Which moments of the effective channels the closed forms use.
///
/// The cascaded channel `H_BS Φ h_Sk` is a Gaussian scale mixture, and every
/// UE shares `H_BS`, so the fourth moments pick up terms in
/// `tr(Y_a R_RIS Y_b R_RIS)`. [`Moments::Gaussian`] drops them, which is
/// accurate only when the cascaded path is weak next to the direct links.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Moments {
    #[default]
    Exact,
    Gaussian,
}

/// Everything derived from the surface state that the SINRs need.
#[derive(Debug, Clone)]
pub struct EffectiveCovariances {
    pub r_bsk: Vec<CMat>,
    pub r_rsk: Vec<CMat>,
    pub lambda_bar: f64,
    /// `tr(Y_a R_RIS Y_b R_RIS)` indexed by region (t = 0, r = 1); zero
    /// under [`Moments::Gaussian`].
    pub quartic: [[f64; 2]; 2],
    /// BS-to-radar interference matrix, including the `λ̄ρ/K` factor.
    pub a_interf: CMat,
}

impl EffectiveCovariances {
    pub fn new(scenario: &Scenario, pb: &PassiveBeamformer) -> Result<Self> {
        Self::with_moments(scenario, pb, Moments::Exact)
    }

    pub fn with_moments(
        scenario: &Scenario,
        pb: &PassiveBeamformer,
        moments: Moments,
    ) -> Result<Self> {
        let k = scenario.k();
        let r_bsk: Vec<CMat> = (0..k).map(|i| effective_cov_bs(scenario, pb, i)).collect();
        let r_rsk: Vec<CMat> = (0..k)
            .map(|i| effective_cov_radar(scenario, pb, i))
            .collect();
        let lambda_bar = normalization_lambda(&r_bsk)?;
        let mut quartic = [[0.0; 2]; 2];
        if moments == Moments::Exact {
            let r = &scenario.params().r_ris;
            let y =
                [Region::Transmit, Region::Reflect].map(|w| surface_gram(r, &pb.coefficients(w)));
            let w = [&y[0] * r, &y[1] * r];
            for a in 0..2 {
                for b in 0..2 {
                    quartic[a][b] = linalg::trace_prod(&w[a], &w[b]).re;
                }
            }
        }
        let a_interf = interference_matrix(scenario, pb, &r_bsk, lambda_bar, &quartic);
        Ok(Self {
            r_bsk,
            r_rsk,
            lambda_bar,
            quartic,
            a_interf,
        })
    }

    /// `R̄ = Σ_k R_RSk`, the aggregate radar-to-UE interference covariance.
    pub fn aggregate_radar_cov(&self) -> CMat {
        let q = self.r_rsk[0].nrows();
        self.r_rsk.iter().fold(CMat::zeros(q, q), |acc, r| acc + r)
    }
}

/// `A = (λ̄ρ/K) R_R [Σ_i tr(R_BSi R_BS) (β̃_BR + β̃_BSR T_R) + β̃_BSR tr²(R_BS) Σ_i β̃_BSi Q_{R,i}]`,
/// where `T_R` and `Q_{R,i}` are the trace and quartic terms of the radar's
/// region. The last sum comes from the BS-surface channel appearing in both
/// the precoders and the interference path.
pub fn interference_matrix(
    scenario: &Scenario,
    pb: &PassiveBeamformer,
    r_bsk: &[CMat],
    lambda_bar: f64,
    quartic: &[[f64; 2]; 2],
) -> CMat {
    let p = scenario.params();
    let cross: f64 = r_bsk
        .iter()
        .map(|r| linalg::trace_prod(r, &p.r_bs).re)
        .sum();
    let t = ris_trace(scenario, pb, p.radar_region);
    let path = p.gain_bs_radar + scenario.gain_bs_ris_radar() * t;
    let wr = region_index(p.radar_region);
    let s1 = scenario.trace_r_bs();
    let fourth: f64 = (0..scenario.k())
        .map(|i| scenario.gain_bs_ris_ue(i) * quartic[wr][region_index(scenario.ue(i).region)])
        .sum::<f64>()
        * scenario.gain_bs_ris_radar()
        * s1
        * s1;
    let scale = lambda_bar * p.rho / scenario.k() as f64 * (cross * path + fourth);
    &p.r_radar * c(scale, 0.0)
}

/// Radar SINR of direction `z` for receive beam `w` and transmit beam `u`.
pub fn radar_sinr(
    scenario: &Scenario,
    covs: &EffectiveCovariances,
    w: &CVec,
    u: &CVec,
    z: usize,
) -> Result<f64> {
    let wn = w.norm_squared();
    if wn == 0.0 {
        return Err(Error::InvalidParameter("receive beam is zero".into()));
    }
    let p = scenario.params();
    let a = scenario.steering(z);
    // w^H α a (a^T u)
    let num = (w.dotc(a) * p.alpha[z] * a.dot(u)).norm_sqr();
    let den = linalg::quad_form(&covs.a_interf, w) + p.sigma_r2 * wn;
    Ok(num / den)
}

/// Which variance term the UE SINR denominator uses. Only
/// [`VarianceTerm::FourthMoment`] is correct; the other variant reproduces a
/// sign slip that makes the term nonpositive and exists so checks can be
/// shown to catch it.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VarianceTerm {
    /// `tr(R_BSk²)`.
    FourthMoment,
    /// `tr(R_BSk²) − tr²(R_BSk)`.
    Subtracted,
}

/// Numerator and denominator of the UE SINR.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SinrParts {
    pub signal: f64,
    pub interference: f64,
}

impl SinrParts {
    pub fn sinr(&self) -> f64 {
        self.signal / self.interference
    }
}

/// `Σ_z ū_z^H R ū_z`.
pub fn radar_leakage(r: &CMat, beams: &RadarBeams) -> f64 {
    beams.u.iter().map(|u| linalg::quad_form(r, u)).sum()
}

pub fn ue_sinr_parts(
    scenario: &Scenario,
    covs: &EffectiveCovariances,
    beams: &RadarBeams,
    k: usize,
    variance: VarianceTerm,
) -> SinrParts {
    let leakage = radar_leakage(&covs.r_rsk[k], beams);
    ue_sinr_parts_with_leakage(scenario, covs, leakage, k, variance)
}

/// UE SINR parts with the radar leakage `Σ_z ū^H R_RSk ū` supplied directly.
pub fn ue_sinr_parts_with_leakage(
    scenario: &Scenario,
    covs: &EffectiveCovariances,
    leakage: f64,
    k: usize,
    variance: VarianceTerm,
) -> SinrParts {
    let p = scenario.params();
    let kk = scenario.k() as f64;
    let rk = &covs.r_bsk[k];
    let tr = linalg::trace_re(rk);
    let mut interference = linalg::trace_prod(rk, rk).re;
    if variance == VarianceTerm::Subtracted {
        interference -= tr * tr;
    }
    for (i, ri) in covs.r_bsk.iter().enumerate() {
        if i != k {
            interference += linalg::trace_prod(rk, ri).re;
        }
    }
    let (s1, s2) = (scenario.trace_r_bs(), scenario.trace_r_bs_sq());
    let wk = region_index(scenario.ue(k).region);
    let kappa_k = scenario.gain_bs_ris_ue(k);
    for i in 0..scenario.k() {
        let q = kappa_k
            * scenario.gain_bs_ris_ue(i)
            * covs.quartic[wk][region_index(scenario.ue(i).region)];
        interference += if i == k {
            q * (s1 * s1 + s2)
        } else {
            q * s1 * s1
        };
    }
    let lr = covs.lambda_bar * p.rho;
    interference += kk / (lr * scenario.z() as f64 * p.pri as f64) * leakage;
    interference += p.sigma_c2 * kk / lr;
    SinrParts {
        signal: tr * tr,
        interference,
    }
}

pub fn ue_sinr(
    scenario: &Scenario,
    covs: &EffectiveCovariances,
    beams: &RadarBeams,
    k: usize,
) -> f64 {
    ue_sinr_parts(scenario, covs, beams, k, VarianceTerm::FourthMoment).sinr()
}

/// UE SINR with the radar silent.
pub fn ue_sinr_radar_free(scenario: &Scenario, covs: &EffectiveCovariances, k: usize) -> f64 {
    ue_sinr_parts_with_leakage(scenario, covs, 0.0, k, VarianceTerm::FourthMoment).sinr()
}

pub fn se_from_sinrs(scenario: &Scenario, sinrs: impl IntoIterator<Item = f64>) -> f64 {
    scenario.params().se_prefactor * sinrs.into_iter().map(|g| (1.0 + g).log2()).sum::<f64>()
}

pub fn sum_se(scenario: &Scenario, covs: &EffectiveCovariances, beams: &RadarBeams) -> f64 {
    se_from_sinrs(
        scenario,
        (0..scenario.k()).map(|k| ue_sinr(scenario, covs, beams, k)),
    )
}

/// Convenience: builds the covariances for `pb` and evaluates the sum SE.
pub fn sum_se_at(scenario: &Scenario, pb: &PassiveBeamformer, beams: &RadarBeams) -> Result<f64> {
    let covs = EffectiveCovariances::new(scenario, pb)?;
    Ok(sum_se(scenario, &covs, beams))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Deployment;
    use crate::star_ris::{canonicalize, random_phases, Protocol};
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn small() -> Scenario {
        Deployment {
            m: 8,
            n_h: 3,
            n_v: 2,
            q: 4,
            k_t: 2,
            k_r: 1,
            detection_angles: vec![-0.4, 0.1, 0.7],
            reference_gain_db: 0.0,
            ..Deployment::default()
        }
        .build()
        .unwrap()
    }

    fn beams(s: &Scenario, seed: u64) -> RadarBeams {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let u = (0..s.z())
            .map(|_| {
                CVec::from_fn(s.q(), |_, _| {
                    c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
                })
            })
            .collect();
        RadarBeams::from_transmit(u)
    }

    /// Scenario whose correlation matrices are all identity and gains are 1.
    fn white(m: usize, n: usize, k: usize, q: usize, sigma: f64, rho: f64) -> Scenario {
        let base = small();
        base.with(|p| {
            p.m = m;
            p.n_h = n;
            p.n_v = 1;
            p.q = q;
            p.r_bs = CMat::identity(m, m);
            p.r_radar = CMat::identity(q, q);
            p.r_ris = CMat::identity(n, n);
            p.sigma_c2 = sigma;
            p.sigma_r2 = 1.0;
            p.rho = rho;
            p.alpha = vec![c(1.0, 0.0); p.detection_angles.len()];
            p.gain_bs_ris = 1.0;
            p.gain_bs_radar = 1.0;
            p.gain_ris_radar = 1.0;
            p.ues.truncate(k);
            for ue in &mut p.ues {
                ue.gain_bs = 1.0;
                ue.gain_ris = 1.0;
                ue.gain_radar = 1.0;
            }
        })
        .unwrap()
    }

    #[test]
    fn ris_trace_fast_matches_matrix_form() {
        let s = small();
        let pb = random_phases(s.n(), &mut ChaCha8Rng::seed_from_u64(3));
        for region in [Region::Transmit, Region::Reflect] {
            let a = ris_trace(&s, &pb, region);
            let b = ris_trace_fast(&s, &pb, region);
            assert!((a - b).abs() < 1e-12 * a.abs().max(1.0), "{a} vs {b}");
        }
    }

    #[test]
    fn no_ris_covariances() {
        let s = small();
        let off = PassiveBeamformer::off(s.n());
        for k in 0..s.k() {
            let want = &s.params().r_bs * c(s.ue(k).gain_bs, 0.0);
            assert!((effective_cov_bs(&s, &off, k) - want).norm() < 1e-14);
            let want = &s.params().r_radar * c(s.ue(k).gain_radar, 0.0);
            assert!((effective_cov_radar(&s, &off, k) - want).norm() < 1e-14);
        }
    }

    #[test]
    fn identity_ris_correlation_gives_half_n() {
        let s = small().with(|p| p.r_ris = CMat::identity(6, 6)).unwrap();
        let pb = random_phases(6, &mut ChaCha8Rng::seed_from_u64(1));
        let k = 0;
        let ue = *s.ue(k);
        let want = &s.params().r_bs * c(ue.gain_bs + s.gain_bs_ris_ue(k) * 3.0, 0.0);
        let got = effective_cov_bs(&s, &pb, k);
        assert!((got - &want).norm() < 1e-12 * want.norm());
        let want = &s.params().r_radar * c(ue.gain_radar + s.gain_radar_ris_ue(k) * 3.0, 0.0);
        assert!((effective_cov_radar(&s, &pb, k) - &want).norm() < 1e-12 * want.norm());
    }

    #[test]
    fn lambda_examples() {
        let eye = vec![CMat::identity(5, 5); 3];
        assert!((normalization_lambda(&eye).unwrap() - 1.0 / 15.0).abs() < 1e-15);
        let ten = vec![CMat::identity(10, 10)];
        assert!((normalization_lambda(&ten).unwrap() - 0.1).abs() < 1e-15);
        assert!(normalization_lambda(&[CMat::zeros(2, 2)]).is_err());
    }

    #[test]
    fn radar_sinr_rank_one_example() {
        let s = white(4, 2, 1, 2, 1.0, 0.0)
            .with(|p| {
                p.detection_angles = vec![0.3];
                p.alpha = vec![c(1.0, 0.0)];
            })
            .unwrap();
        let covs = EffectiveCovariances::new(&s, &PassiveBeamformer::uniform(2)).unwrap();
        assert_eq!(covs.a_interf.norm(), 0.0);
        let a = s.steering(0).clone();
        let u = a.map(|z| z.conj());
        let w = &a * a.dot(&u);
        let g = radar_sinr(&s, &covs, &w, &u, 0).unwrap();
        assert!((g - 8.0).abs() < 1e-12, "{g}");
        let zero = CVec::zeros(2);
        assert_eq!(radar_sinr(&s, &covs, &w, &zero, 0).unwrap(), 0.0);
        assert!(radar_sinr(&s, &covs, &zero, &u, 0).is_err());
    }

    #[test]
    fn ue_sinr_white_example() {
        // K=1, R_BS1 = I_M (no surface), σ² = ρ, no radar: γ = M/2.
        let m = 16;
        let s = white(m, 2, 1, 2, 0.1, 0.1);
        let covs = EffectiveCovariances::new(&s, &PassiveBeamformer::off(2)).unwrap();
        assert!((covs.lambda_bar - 1.0 / m as f64).abs() < 1e-15);
        let silent = RadarBeams::silent(&s);
        let g = ue_sinr(&s, &covs, &silent, 0);
        assert!((g - m as f64 / 2.0).abs() < 1e-12, "{g}");
        let se = sum_se(&s, &covs, &silent);
        assert!((se - 9f64.log2()).abs() < 1e-12);
    }

    #[test]
    fn ue_sinr_high_power_limit() {
        let s = small();
        let pb = random_phases(s.n(), &mut ChaCha8Rng::seed_from_u64(2));
        let silent = RadarBeams::silent(&s);
        let loud = s.with(|p| p.rho = 1e12).unwrap();
        let covs = EffectiveCovariances::with_moments(&loud, &pb, Moments::Gaussian).unwrap();
        for k in 0..s.k() {
            let rk = &covs.r_bsk[k];
            let mut den = linalg::trace_prod(rk, rk).re;
            for (i, ri) in covs.r_bsk.iter().enumerate() {
                if i != k {
                    den += linalg::trace_prod(rk, ri).re;
                }
            }
            let lim = linalg::trace_re(rk).powi(2) / den;
            let g = ue_sinr(&loud, &covs, &silent, k);
            assert!((g - lim).abs() < 1e-6 * lim);
        }
    }

    #[test]
    fn quartic_terms_match_explicit_matrices() {
        let s = small();
        let pb = random_phases(s.n(), &mut ChaCha8Rng::seed_from_u64(4));
        let covs = EffectiveCovariances::new(&s, &pb).unwrap();
        let regions = [Region::Transmit, Region::Reflect];
        for (a, ra) in regions.iter().enumerate() {
            for (b, rb) in regions.iter().enumerate() {
                let want = ris_quartic(&s, &pb, *ra, *rb);
                assert!((covs.quartic[a][b] - want).abs() < 1e-12 * want, "{a}{b}");
                assert!(want > 0.0);
            }
        }
        // Cauchy-Schwarz on the Gram inner product
        let q = covs.quartic;
        assert!(q[0][1] * q[0][1] <= q[0][0] * q[1][1] * (1.0 + 1e-12));
    }

    #[test]
    fn gaussian_moments_drop_quartic_terms() {
        let s = small();
        let pb = random_phases(s.n(), &mut ChaCha8Rng::seed_from_u64(5));
        let g = EffectiveCovariances::with_moments(&s, &pb, Moments::Gaussian).unwrap();
        let e = EffectiveCovariances::new(&s, &pb).unwrap();
        assert_eq!(g.quartic, [[0.0; 2]; 2]);
        let silent = RadarBeams::silent(&s);
        for k in 0..s.k() {
            // extra interference can only lower the SINR
            assert!(ue_sinr(&s, &e, &silent, k) < ue_sinr(&s, &g, &silent, k));
        }
        assert!(linalg::trace_re(&e.a_interf) >= linalg::trace_re(&g.a_interf));
    }

    #[test]
    fn weak_cascade_makes_moments_agree() {
        let s = small().with(|p| p.gain_bs_ris *= 1e-6).unwrap();
        let pb = random_phases(s.n(), &mut ChaCha8Rng::seed_from_u64(6));
        let g = EffectiveCovariances::with_moments(&s, &pb, Moments::Gaussian).unwrap();
        let e = EffectiveCovariances::new(&s, &pb).unwrap();
        let silent = RadarBeams::silent(&s);
        for k in 0..s.k() {
            let (a, b) = (ue_sinr(&s, &e, &silent, k), ue_sinr(&s, &g, &silent, k));
            assert!((a - b).abs() < 1e-6 * b);
        }
    }

    #[test]
    fn printed_variance_term_goes_negative() {
        let s = small();
        let covs = EffectiveCovariances::new(&s, &PassiveBeamformer::uniform(s.n())).unwrap();
        let silent = RadarBeams::silent(&s);
        let good = ue_sinr_parts(&s, &covs, &silent, 0, VarianceTerm::FourthMoment);
        let bad = ue_sinr_parts(&s, &covs, &silent, 0, VarianceTerm::Subtracted);
        assert!(good.sinr() > 0.0);
        assert!(bad.interference < good.interference);
    }

    #[test]
    fn sum_se_simple_cases() {
        let s = white(4, 2, 1, 2, 1.0, 1.0).with(|p| {
            let ue = p.ues[0];
            p.ues = vec![ue; 4];
        });
        let s = s.unwrap();
        assert!((se_from_sinrs(&s, [1.0; 4]) - 4.0).abs() < 1e-15);
        assert!(se_from_sinrs(&s, [1.0, 1.0, 1.0, 1.5]) > 4.0);
    }

    #[test]
    fn identity_ris_correlation_makes_phases_irrelevant() {
        let s = small().with(|p| p.r_ris = CMat::identity(6, 6)).unwrap();
        let b = beams(&s, 4);
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let pb = random_phases(6, &mut rng);
        let base = sum_se_at(&s, &pb, &b).unwrap();
        for _ in 0..5 {
            let other = crate::star_ris::redraw_phases(&pb, &mut rng);
            let v = sum_se_at(&s, &other, &b).unwrap();
            assert!((v - base).abs() < 1e-12 * base);
        }
    }

    proptest! {
        #[test]
        fn sign_flips_leave_se_unchanged(seed in 0u64..1000, mask in 0u64..4096) {
            let s = small();
            let b = beams(&s, seed);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let pb = random_phases(s.n(), &mut rng);
            let mut flipped = pb.clone();
            for i in 0..2 * s.n() {
                if mask >> i & 1 == 1 {
                    let n = s.n();
                    if i < n {
                        flipped.beta_t[i] = -flipped.beta_t[i];
                        flipped.theta_t[i] = -flipped.theta_t[i];
                    } else {
                        flipped.beta_r[i - n] = -flipped.beta_r[i - n];
                        flipped.theta_r[i - n] = -flipped.theta_r[i - n];
                    }
                }
            }
            let a = sum_se_at(&s, &pb, &b).unwrap();
            let f = sum_se_at(&s, &flipped, &b).unwrap();
            let cf = sum_se_at(&s, &canonicalize(&flipped), &b).unwrap();
            prop_assert!((a - f).abs() <= 1e-12 * a.max(1.0));
            prop_assert!((a - cf).abs() <= 1e-12 * a.max(1.0));
        }

        #[test]
        fn ue_sinr_decreases_with_radar_leakage(seed in 0u64..1000, extra in 1e-9f64..1.0) {
            let s = small();
            let pb = random_phases(s.n(), &mut ChaCha8Rng::seed_from_u64(seed));
            let covs = EffectiveCovariances::new(&s, &pb).unwrap();
            let k = (seed % s.k() as u64) as usize;
            let b = beams(&s, seed);
            let leak = radar_leakage(&covs.r_rsk[k], &b);
            let scale = linalg::trace_re(&covs.r_rsk[k]);
            let g0 = ue_sinr_parts_with_leakage(&s, &covs, leak, k, VarianceTerm::FourthMoment).sinr();
            let g1 = ue_sinr_parts_with_leakage(&s, &covs, leak + extra * scale, k, VarianceTerm::FourthMoment).sinr();
            prop_assert!(g1 < g0);
        }

        #[test]
        fn covariances_are_psd(seed in 0u64..1000) {
            let s = small();
            let mut pb = random_phases(s.n(), &mut ChaCha8Rng::seed_from_u64(seed));
            if seed % 3 == 0 {
                pb.protocol = Protocol::Es;
            }
            let covs = EffectiveCovariances::new(&s, &pb).unwrap();
            for r in covs.r_bsk.iter().chain(&covs.r_rsk).chain(std::iter::once(&covs.a_interf)) {
                prop_assert!(linalg::check_hermitian_psd("cov", r, 1e-10).is_ok());
            }
            prop_assert!(covs.lambda_bar > 0.0);
        }
    }
}
