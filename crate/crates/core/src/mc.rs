//! Monte-Carlo oracle for the closed-form expectations, and a finite-difference
//! gradient checker.
//!
//! Realization `i` draws from stream `i` of the master seed and the per-run
//! statistics are reduced in index order with compensated summation, so the
//! results do not depend on the thread count.

use std::io::Write;

use num_complex::Complex64;
use rand::Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::linalg::{c, CMat, CVec, KahanSum};
use crate::model::{sample_channels, ChannelRealization, Region, Scenario};
use crate::pgam::SeObjective;
use crate::radar::RadarBeams;
use crate::star_ris::{pb_matrix, PassiveBeamformer, Protocol};

pub const MIN_RUNS: usize = 100;

/// A Monte-Carlo estimate with its standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub mean: f64,
    pub std_err: f64,
}

impl Estimate {
    /// `|x − mean|` in standard errors.
    pub fn z_score(&self, x: f64) -> f64 {
        (x - self.mean).abs() / self.std_err
    }
}

fn check_runs(runs: usize) -> Result<()> {
    if runs < MIN_RUNS {
        return Err(Error::InvalidParameter(format!(
            "need at least {MIN_RUNS} runs, got {runs}"
        )));
    }
    Ok(())
}

fn draws(
    scenario: &Scenario,
    runs: usize,
    seed: u64,
) -> impl IndexedParallelIterator<Item = ChannelRealization> + '_ {
    (0..runs)
        .into_par_iter()
        .map(move |i| sample_channels(scenario, &mut crate::stream_rng(seed, i as u64)))
}

/// `h_BSk = h_Bk + H_BS Φ_{w_k} h_Sk`.
pub fn effective_bs_channel(ch: &ChannelRealization, phi: &CMat, k: usize) -> CVec {
    &ch.h_bk[k] + &ch.h_bs * (phi * &ch.h_sk[k])
}

/// `h_RSk = h_Rk + H_SR^H Φ_{w_k} h_Sk`.
pub fn effective_radar_channel(ch: &ChannelRealization, phi: &CMat, k: usize) -> CVec {
    &ch.h_rk[k] + ch.h_sr.adjoint() * (phi * &ch.h_sk[k])
}

fn region_phis(pb: &PassiveBeamformer) -> [CMat; 2] {
    [
        pb_matrix(pb, Region::Transmit),
        pb_matrix(pb, Region::Reflect),
    ]
}

fn phi_for(phis: &[CMat; 2], region: Region) -> &CMat {
    match region {
        Region::Transmit => &phis[0],
        Region::Reflect => &phis[1],
    }
}

/// Per-realization moments entering the UaTF SINR of one UE.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UeSample {
    /// `h_k^H h_k` (real).
    pub gain: f64,
    /// `Σ_{i≠k} |h_k^H h_i|²`.
    pub cross: f64,
    /// `Σ_z |h_RSk^H ū_z|²`.
    pub radar: f64,
    /// `Σ_i ‖h_i‖²`.
    pub norm: f64,
}

pub fn ue_samples(
    scenario: &Scenario,
    pb: &PassiveBeamformer,
    beams: &RadarBeams,
    k: usize,
    runs: usize,
    seed: u64,
) -> Vec<UeSample> {
    let phis = region_phis(pb);
    draws(scenario, runs, seed)
        .map(|ch| {
            let h: Vec<CVec> = (0..scenario.k())
                .map(|i| effective_bs_channel(&ch, phi_for(&phis, scenario.ue(i).region), i))
                .collect();
            let hk = &h[k];
            let cross = (0..h.len())
                .filter(|&i| i != k)
                .map(|i| hk.dotc(&h[i]).norm_sqr())
                .sum();
            let hr = effective_radar_channel(&ch, phi_for(&phis, scenario.ue(k).region), k);
            UeSample {
                gain: hk.norm_squared(),
                cross,
                radar: beams.u.iter().map(|u| hr.dotc(u).norm_sqr()).sum(),
                norm: h.iter().map(|v| v.norm_squared()).sum(),
            }
        })
        .collect()
}

/// Sums of the statistics the SINR estimator needs.
#[derive(Debug, Clone, Copy, Default)]
struct Totals {
    gain: f64,
    gain2: f64,
    cross: f64,
    radar: f64,
    norm: f64,
}

impl Totals {
    fn of(samples: &[UeSample]) -> Self {
        let sum =
            |f: &dyn Fn(&UeSample) -> f64| samples.iter().map(f).collect::<KahanSum>().value();
        Self {
            gain: sum(&|s| s.gain),
            gain2: sum(&|s| s.gain * s.gain),
            cross: sum(&|s| s.cross),
            radar: sum(&|s| s.radar),
            norm: sum(&|s| s.norm),
        }
    }

    fn without(&self, s: &UeSample) -> Self {
        Self {
            gain: self.gain - s.gain,
            gain2: self.gain2 - s.gain * s.gain,
            cross: self.cross - s.cross,
            radar: self.radar - s.radar,
            norm: self.norm - s.norm,
        }
    }

    fn sinr(&self, n: f64, scenario: &Scenario) -> f64 {
        let p = scenario.params();
        let kk = scenario.k() as f64;
        let mean = self.gain / n;
        let var = self.gain2 / n - mean * mean;
        let lambda = n / self.norm;
        let zl = (scenario.z() * p.pri) as f64;
        let den = var + self.cross / n + kk / (lambda * p.rho) * (self.radar / n / zl + p.sigma_c2);
        mean * mean / den
    }
}

/// UaTF SINR of UE `k` assembled from sample moments, with a delete-one
/// jackknife standard error.
pub fn estimate_ue_sinr(
    scenario: &Scenario,
    pb: &PassiveBeamformer,
    beams: &RadarBeams,
    k: usize,
    runs: usize,
    seed: u64,
) -> Result<Estimate> {
    check_runs(runs)?;
    let samples = ue_samples(scenario, pb, beams, k, runs, seed);
    Ok(jackknife_sinr(scenario, &samples))
}

fn jackknife_sinr(scenario: &Scenario, samples: &[UeSample]) -> Estimate {
    let n = samples.len() as f64;
    let tot = Totals::of(samples);
    let full = tot.sinr(n, scenario);
    let loo: Vec<f64> = samples
        .iter()
        .map(|s| tot.without(s).sinr(n - 1.0, scenario))
        .collect();
    let loo_mean = loo.iter().copied().collect::<KahanSum>().value() / n;
    let ss = loo
        .iter()
        .map(|x| (x - loo_mean).powi(2))
        .collect::<KahanSum>()
        .value();
    Estimate {
        mean: full,
        std_err: ((n - 1.0) / n * ss).sqrt(),
    }
}

/// Writes per-realization UE statistics as CSV.
pub fn write_ue_samples_csv<W: Write>(out: W, samples: &[UeSample]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["run", "gain", "cross", "radar", "norm"])?;
    for (i, s) in samples.iter().enumerate() {
        w.write_record([
            i.to_string(),
            s.gain.to_string(),
            s.cross.to_string(),
            s.radar.to_string(),
            s.norm.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Sample estimate of the BS-to-radar interference matrix
/// `(λ̄ρ/K) E{G F F^H G^H}` with `G = H_BR^H + H_SR^H Φ^H H_BS^H` and MRT
/// precoders `F = [h_BS1, …, h_BSK]`; `λ̄` is itself estimated from the draws.
pub fn estimate_radar_interference(
    scenario: &Scenario,
    pb: &PassiveBeamformer,
    runs: usize,
    seed: u64,
) -> Result<CMat> {
    check_runs(runs)?;
    let p = scenario.params();
    let q = scenario.q();
    let phis = region_phis(pb);
    let phi_radar = phi_for(&phis, p.radar_region);
    let per_run: Vec<(CMat, f64)> = draws(scenario, runs, seed)
        .map(|ch| {
            let g = ch.h_br.adjoint() + ch.h_sr.adjoint() * phi_radar.adjoint() * ch.h_bs.adjoint();
            let mut acc = CMat::zeros(q, q);
            let mut norm = 0.0;
            for i in 0..scenario.k() {
                let f = effective_bs_channel(&ch, phi_for(&phis, scenario.ue(i).region), i);
                let gf = &g * &f;
                acc += &gf * gf.adjoint();
                norm += f.norm_squared();
            }
            (acc, norm)
        })
        .collect();
    let mut sum = vec![KahanSum::default(); 2 * q * q];
    let mut norm = KahanSum::default();
    for (m, n) in &per_run {
        for (idx, z) in m.iter().enumerate() {
            sum[2 * idx].add(z.re);
            sum[2 * idx + 1].add(z.im);
        }
        norm.add(*n);
    }
    let nr = runs as f64;
    let lambda = nr / norm.value();
    let scale = lambda * p.rho / scenario.k() as f64 / nr;
    Ok(CMat::from_iterator(
        q,
        q,
        (0..q * q).map(|idx| c(sum[2 * idx].value(), sum[2 * idx + 1].value()) * scale),
    ))
}

/// Sample covariance `E{h h^H}` of a channel picked from each draw.
pub fn sample_covariance(
    scenario: &Scenario,
    runs: usize,
    seed: u64,
    pick: impl Fn(&ChannelRealization) -> CVec + Sync + Send,
) -> CMat {
    let per_run: Vec<CMat> = draws(scenario, runs, seed)
        .map(|ch| {
            let h = pick(&ch);
            &h * h.adjoint()
        })
        .collect();
    let dim = per_run[0].nrows();
    let mut sum = vec![KahanSum::default(); 2 * dim * dim];
    for m in &per_run {
        for (idx, z) in m.iter().enumerate() {
            sum[2 * idx].add(z.re);
            sum[2 * idx + 1].add(z.im);
        }
    }
    let nr = runs as f64;
    CMat::from_iterator(
        dim,
        dim,
        (0..dim * dim).map(|idx| c(sum[2 * idx].value(), sum[2 * idx + 1].value()) / nr),
    )
}

/// Relative Frobenius error `‖a − b‖/‖b‖`.
pub fn rel_frobenius(a: &CMat, b: &CMat) -> f64 {
    (a - b).norm() / b.norm()
}

/// Worst relative error between central differences of the sum SE and the
/// closed-form gradients along random feasible tangent directions.
///
/// Phase directions are `j θ_n δ_n`; amplitude directions follow the
/// `(β^t_n, β^r_n)` circle. Mode-switching points only get phase directions.
pub fn fd_gradient_check(
    scenario: &Scenario,
    pb: &PassiveBeamformer,
    beams: &RadarBeams,
    directions: usize,
    epsilon: f64,
    seed: u64,
) -> Result<f64> {
    if !(1e-8..=1e-4).contains(&epsilon) {
        return Err(Error::InvalidParameter(format!(
            "epsilon {epsilon} outside [1e-8, 1e-4]"
        )));
    }
    let mut rng = crate::stream_rng(seed, 0);
    let dirs: Vec<(Vec<Complex64>, Vec<f64>)> = (0..directions)
        .map(|_| random_tangent(pb, &mut rng))
        .collect();
    Ok(fd_errors(scenario, pb, beams, &dirs, epsilon)
        .into_iter()
        .fold(0.0, f64::max))
}

/// Random unit-scale tangent direction at `pb`.
pub fn random_tangent<R: Rng + ?Sized>(
    pb: &PassiveBeamformer,
    rng: &mut R,
) -> (Vec<Complex64>, Vec<f64>) {
    let n = pb.n();
    let theta: Vec<Complex64> = pb
        .stacked_theta()
        .iter()
        .map(|t| t * c(0.0, rng.random_range(-1.0..1.0)))
        .collect();
    let mut beta = vec![0.0; 2 * n];
    if pb.protocol == Protocol::Es {
        for i in 0..n {
            let d: f64 = rng.random_range(-1.0..1.0);
            beta[i] = -pb.beta_r[i] * d;
            beta[i + n] = pb.beta_t[i] * d;
        }
    }
    (theta, beta)
}

/// Relative error per direction; a zero direction yields zero.
pub fn fd_errors(
    scenario: &Scenario,
    pb: &PassiveBeamformer,
    beams: &RadarBeams,
    dirs: &[(Vec<Complex64>, Vec<f64>)],
    epsilon: f64,
) -> Vec<f64> {
    let obj = SeObjective::new(scenario, beams);
    let g = obj.gradients(pb);
    let th0 = pb.stacked_theta();
    let b0 = pb.stacked_beta();
    dirs.iter()
        .map(|(dt, db)| {
            let at = |s: f64| {
                let th: Vec<Complex64> = th0.iter().zip(dt).map(|(t, d)| t + d * s).collect();
                let be: Vec<f64> = b0.iter().zip(db).map(|(b, d)| b + d * s).collect();
                let pb =
                    PassiveBeamformer::from_stacked(&th, &be, Protocol::Es).expect("same lengths");
                obj.value(&pb)
            };
            let fd = (at(epsilon) - at(-epsilon)) / (2.0 * epsilon);
            let an: f64 = g
                .theta
                .iter()
                .zip(dt)
                .map(|(a, d)| 2.0 * (a.conj() * d).re)
                .sum::<f64>()
                + g.beta.iter().zip(db).map(|(a, d)| a * d).sum::<f64>();
            if an == 0.0 && fd == 0.0 {
                0.0
            } else {
                (fd - an).abs() / an.abs().max(fd.abs())
            }
        })
        .collect()
}
