//! Scenario construction: correlation matrices, path losses, steering vectors
//! and random channel draws.
//!
//! All correlation matrices are checked Hermitian PSD at construction; the
//! square roots needed to color Gaussian draws are cached on the [`Scenario`].

use std::f64::consts::PI;
use std::fmt::Write as _;
use std::io::{BufRead, Write};

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, c, cis, CMat, CVec};

const PSD_REL_TOL: f64 = 1e-10;

/// Side of the surface a UE is served from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Region {
    /// Transmission region, behind the surface as seen from the BS.
    #[serde(rename = "t")]
    Transmit,
    /// Reflection region, same side as the BS.
    #[serde(rename = "r")]
    Reflect,
}

impl Region {
    pub fn label(self) -> &'static str {
        match self {
            Region::Transmit => "t",
            Region::Reflect => "r",
        }
    }
}

/// Per-UE large-scale link gains.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UeLinks {
    pub region: Region,
    /// BS -> UE direct link.
    pub gain_bs: f64,
    /// surface -> UE link.
    pub gain_ris: f64,
    /// radar -> UE link.
    pub gain_radar: f64,
}

/// Static inputs of a scenario. Converted into a validated [`Scenario`] by
/// [`Scenario::new`].
#[derive(Debug, Clone)]
pub struct ScenarioParams {
    pub m: usize,
    pub n_h: usize,
    pub n_v: usize,
    pub q: usize,
    /// Pulse repetition interval in time indices.
    pub pri: usize,
    pub detection_angles: Vec<f64>,
    /// Echo coefficients, one per detection angle.
    pub alpha: Vec<Complex64>,
    pub rho: f64,
    pub sigma_r2: f64,
    pub sigma_c2: f64,
    pub gamma_r: f64,
    pub p_max: f64,
    pub tau_c: f64,
    pub se_prefactor: f64,
    pub gain_bs_ris: f64,
    pub gain_bs_radar: f64,
    pub gain_ris_radar: f64,
    pub ues: Vec<UeLinks>,
    /// Surface coefficient set the BS -> surface -> radar path goes through.
    pub radar_region: Region,
    pub r_bs: CMat,
    pub r_radar: CMat,
    pub r_ris: CMat,
    pub delta_radar: f64,
    pub wavelength: f64,
    pub element_size: f64,
}

#[derive(Debug, Clone)]
struct Cache {
    sqrt_bs: CMat,
    sqrt_radar: CMat,
    sqrt_ris: CMat,
    /// `|[R_RIS]_{mn}|^2`, so that `tr(R Φ R Φ^H) = φ^H G φ`.
    ris_kernel: DMatrix<f64>,
    steering: Vec<CVec>,
    tr_bs: f64,
    tr_bs2: f64,
}

/// A validated, immutable scenario.
#[derive(Debug, Clone)]
pub struct Scenario {
    params: ScenarioParams,
    cache: Cache,
}

impl Scenario {
    pub fn new(params: ScenarioParams) -> Result<Self> {
        validate(&params)?;
        let sqrt_bs = linalg::psd_sqrt(&params.r_bs);
        let sqrt_radar = linalg::psd_sqrt(&params.r_radar);
        let sqrt_ris = linalg::psd_sqrt(&params.r_ris);
        let n = params.r_ris.nrows();
        let ris_kernel = DMatrix::from_fn(n, n, |i, j| {
            (params.r_ris[(i, j)] * params.r_ris[(j, i)]).re
        });
        let steering = params
            .detection_angles
            .iter()
            .map(|&a| steering_vector(a, params.q, params.delta_radar, params.wavelength))
            .collect();
        let tr_bs = linalg::trace_re(&params.r_bs);
        let tr_bs2 = linalg::trace_prod(&params.r_bs, &params.r_bs).re;
        Ok(Self {
            params,
            cache: Cache {
                sqrt_bs,
                sqrt_radar,
                sqrt_ris,
                ris_kernel,
                steering,
                tr_bs,
                tr_bs2,
            },
        })
    }

    pub fn params(&self) -> &ScenarioParams {
        &self.params
    }

    pub fn into_params(self) -> ScenarioParams {
        self.params
    }

    pub fn m(&self) -> usize {
        self.params.m
    }

    pub fn n(&self) -> usize {
        self.params.n_h * self.params.n_v
    }

    pub fn k(&self) -> usize {
        self.params.ues.len()
    }

    pub fn k_t(&self) -> usize {
        self.count_region(Region::Transmit)
    }

    pub fn k_r(&self) -> usize {
        self.count_region(Region::Reflect)
    }

    fn count_region(&self, region: Region) -> usize {
        self.params
            .ues
            .iter()
            .filter(|u| u.region == region)
            .count()
    }

    pub fn q(&self) -> usize {
        self.params.q
    }

    pub fn z(&self) -> usize {
        self.params.detection_angles.len()
    }

    pub fn ue(&self, k: usize) -> &UeLinks {
        &self.params.ues[k]
    }

    /// Cascaded BS -> surface -> UE gain `β̃_BS β̃_Sk`.
    pub fn gain_bs_ris_ue(&self, k: usize) -> f64 {
        self.params.gain_bs_ris * self.params.ues[k].gain_ris
    }

    /// Cascaded radar -> surface -> UE gain `β̃_SR β̃_Sk`.
    pub fn gain_radar_ris_ue(&self, k: usize) -> f64 {
        self.params.gain_ris_radar * self.params.ues[k].gain_ris
    }

    /// Cascaded BS -> surface -> radar gain `β̃_BS β̃_SR`.
    pub fn gain_bs_ris_radar(&self) -> f64 {
        self.params.gain_bs_ris * self.params.gain_ris_radar
    }

    /// Radar steering vector `a(θ̄_z)`.
    pub fn steering(&self, z: usize) -> &CVec {
        &self.cache.steering[z]
    }

    pub fn ris_kernel(&self) -> &DMatrix<f64> {
        &self.cache.ris_kernel
    }

    pub fn trace_r_bs(&self) -> f64 {
        self.cache.tr_bs
    }

    pub fn trace_r_bs_sq(&self) -> f64 {
        self.cache.tr_bs2
    }

    pub fn sqrt_r_bs(&self) -> &CMat {
        &self.cache.sqrt_bs
    }

    pub fn sqrt_r_radar(&self) -> &CMat {
        &self.cache.sqrt_radar
    }

    pub fn sqrt_r_ris(&self) -> &CMat {
        &self.cache.sqrt_ris
    }

    /// Copy of the parameters with a modification applied, re-validated.
    pub fn with(&self, edit: impl FnOnce(&mut ScenarioParams)) -> Result<Self> {
        let mut p = self.params.clone();
        edit(&mut p);
        Scenario::new(p)
    }
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!(
            "{name} must be positive and finite, got {v}"
        )))
    }
}

fn validate(p: &ScenarioParams) -> Result<()> {
    for (name, v) in [
        ("m", p.m),
        ("n_h", p.n_h),
        ("n_v", p.n_v),
        ("q", p.q),
        ("pri", p.pri),
    ] {
        if v == 0 {
            return Err(Error::InvalidParameter(format!(
                "{name} must be at least 1"
            )));
        }
    }
    if p.ues.is_empty() {
        return Err(Error::InvalidParameter(
            "at least one UE is required".into(),
        ));
    }
    if p.detection_angles.is_empty() {
        return Err(Error::InvalidParameter(
            "at least one detection angle is required".into(),
        ));
    }
    if p.alpha.len() != p.detection_angles.len() {
        return Err(Error::Dimension(format!(
            "{} echo coefficients for {} detection angles",
            p.alpha.len(),
            p.detection_angles.len()
        )));
    }
    // ρ = 0 (BS silent) is accepted so radar-only limit cases can be built.
    if !(p.rho >= 0.0 && p.rho.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "rho must be nonnegative and finite, got {}",
            p.rho
        )));
    }
    positive("sigma_r2", p.sigma_r2)?;
    positive("sigma_c2", p.sigma_c2)?;
    positive("gamma_r", p.gamma_r)?;
    positive("p_max", p.p_max)?;
    positive("tau_c", p.tau_c)?;
    positive("se_prefactor", p.se_prefactor)?;
    positive("delta_radar", p.delta_radar)?;
    positive("wavelength", p.wavelength)?;
    positive("element_size", p.element_size)?;
    positive("gain_bs_ris", p.gain_bs_ris)?;
    positive("gain_bs_radar", p.gain_bs_radar)?;
    positive("gain_ris_radar", p.gain_ris_radar)?;
    for (k, ue) in p.ues.iter().enumerate() {
        positive(&format!("ue[{k}].gain_bs"), ue.gain_bs)?;
        positive(&format!("ue[{k}].gain_ris"), ue.gain_ris)?;
        positive(&format!("ue[{k}].gain_radar"), ue.gain_radar)?;
    }
    for (name, mat, dim) in [
        ("R_BS", &p.r_bs, p.m),
        ("R_R", &p.r_radar, p.q),
        ("R_RIS", &p.r_ris, p.n_h * p.n_v),
    ] {
        if mat.nrows() != dim || mat.ncols() != dim {
            return Err(Error::Dimension(format!(
                "{name} must be {dim}x{dim}, got {}x{}",
                mat.nrows(),
                mat.ncols()
            )));
        }
        linalg::check_hermitian_psd(name, mat, PSD_REL_TOL)?;
    }
    Ok(())
}

/// Finite-dimensional correlation model `R = A A^H`, where the columns of `A`
/// are `(1/√P)[1, e^{-j2πω sin φ_p}, …]^T` for `P` uniformly spread angles
/// `φ_p = -π/2 + (p-1)π/P`.
pub fn build_steering_correlation(dim: usize, p: usize, omega: f64) -> Result<CMat> {
    if dim == 0 || p == 0 {
        return Err(Error::InvalidParameter(
            "dimension and P must be at least 1".into(),
        ));
    }
    if p > dim {
        return Err(Error::InvalidParameter(format!(
            "P = {p} exceeds dimension {dim}"
        )));
    }
    positive("omega", omega)?;
    let norm = 1.0 / (p as f64).sqrt();
    let a = CMat::from_fn(dim, p, |row, col| {
        let phi = -PI / 2.0 + col as f64 * PI / p as f64;
        cis(-2.0 * PI * omega * row as f64 * phi.sin()) * norm
    });
    Ok(&a * a.adjoint())
}

/// Normalized sinc, `sin(πx)/(πx)`.
pub fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-12 {
        1.0
    } else {
        (PI * x).sin() / (PI * x)
    }
}

/// Spatial correlation of a planar surface with `n_h x n_v` elements:
/// `[R]_{lm} = sinc(2‖u_l - u_m‖/λ)`.
pub fn build_ris_correlation(
    n_h: usize,
    n_v: usize,
    d_h: f64,
    d_v: f64,
    wavelength: f64,
) -> Result<CMat> {
    if n_h == 0 || n_v == 0 {
        return Err(Error::InvalidParameter(
            "surface needs at least one element".into(),
        ));
    }
    positive("d_h", d_h)?;
    positive("d_v", d_v)?;
    positive("wavelength", wavelength)?;
    let n = n_h * n_v;
    // element n sits at column n % n_h, row n / n_h
    let pos = |idx: usize| ((idx % n_h) as f64 * d_h, (idx / n_h) as f64 * d_v);
    Ok(CMat::from_fn(n, n, |l, m| {
        let (xl, yl) = pos(l);
        let (xm, ym) = pos(m);
        let dist = ((xl - xm).powi(2) + (yl - ym).powi(2)).sqrt();
        c(sinc(2.0 * dist / wavelength), 0.0)
    }))
}

/// Large-scale gain `area · d^{-exponent} · 10^{-penetration/10}`.
pub fn path_loss_gain(
    distance: f64,
    exponent: f64,
    element_area: f64,
    penetration_db: f64,
) -> Result<f64> {
    if !(distance > 0.0) || !distance.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "distance must be positive, got {distance}"
        )));
    }
    Ok(element_area * distance.powf(-exponent) * 10f64.powf(-penetration_db / 10.0))
}

/// ULA response `a(θ)_q = e^{j 2π Δ/λ (q-1) sin θ}`.
pub fn steering_vector(angle: f64, q: usize, delta: f64, wavelength: f64) -> CVec {
    let k = 2.0 * PI * delta / wavelength * angle.sin();
    CVec::from_fn(q, |i, _| cis(k * i as f64))
}

/// One draw of every small-scale channel in the system.
#[derive(Debug, Clone)]
pub struct ChannelRealization {
    /// BS <-> surface, M x N.
    pub h_bs: CMat,
    /// BS <-> radar, M x Q.
    pub h_br: CMat,
    /// radar <-> UE k, Q-vectors.
    pub h_rk: Vec<CVec>,
    /// surface <-> radar, N x Q.
    pub h_sr: CMat,
    /// surface <-> UE k, N-vectors.
    pub h_sk: Vec<CVec>,
    /// BS <-> UE k, M-vectors.
    pub h_bk: Vec<CVec>,
}

fn cn_matrix<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> CMat {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    CMat::from_fn(rows, cols, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        c(re * s, im * s)
    })
}

fn cn_vector<R: Rng + ?Sized>(len: usize, rng: &mut R) -> CVec {
    let m = cn_matrix(len, 1, rng);
    m.column(0).into_owned()
}

/// Draws correlated Rayleigh channels, e.g. `H_BS = √β̃_BS R_BS^{1/2} Z R_RIS^{1/2}`.
///
/// The draw order is fixed, so a seeded generator reproduces the realization.
pub fn sample_channels<R: Rng + ?Sized>(scenario: &Scenario, rng: &mut R) -> ChannelRealization {
    let p = scenario.params();
    let (m, n, q, k) = (scenario.m(), scenario.n(), scenario.q(), scenario.k());
    let sb = scenario.sqrt_r_bs();
    let sr = scenario.sqrt_r_radar();
    let ss = scenario.sqrt_r_ris();

    let h_bs = sb * cn_matrix(m, n, rng) * ss * c(p.gain_bs_ris.sqrt(), 0.0);
    let h_br = sb * cn_matrix(m, q, rng) * sr * c(p.gain_bs_radar.sqrt(), 0.0);
    let h_sr = ss * cn_matrix(n, q, rng) * sr * c(p.gain_ris_radar.sqrt(), 0.0);
    let mut h_rk = Vec::with_capacity(k);
    let mut h_sk = Vec::with_capacity(k);
    let mut h_bk = Vec::with_capacity(k);
    for ue in &p.ues {
        h_rk.push(sr * cn_vector(q, rng) * c(ue.gain_radar.sqrt(), 0.0));
        h_sk.push(ss * cn_vector(n, rng) * c(ue.gain_ris.sqrt(), 0.0));
        h_bk.push(sb * cn_vector(m, rng) * c(ue.gain_bs.sqrt(), 0.0));
    }
    ChannelRealization {
        h_bs,
        h_br,
        h_rk,
        h_sr,
        h_sk,
        h_bk,
    }
}

/// Planar position in meters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn dist(&self, other: &Point) -> f64 {
        ((self.x - other.x).powi(2) + (self.y - other.y).powi(2)).sqrt()
    }
}

/// Physical deployment from which a [`Scenario`] is derived.
///
/// Powers are in watts, angles in radians, gains linear unless the field
/// name ends in `_db`/`_dbm`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Deployment {
    pub m: usize,
    pub n_h: usize,
    pub n_v: usize,
    pub k_t: usize,
    pub k_r: usize,
    pub q: usize,
    pub pri: usize,
    pub detection_angles: Vec<f64>,
    pub carrier_hz: f64,
    /// Element size `d_H = d_V` in wavelengths.
    pub element_size_wavelengths: f64,
    /// Radar antenna spacing `Δ` in wavelengths.
    pub radar_spacing_wavelengths: f64,
    /// Antenna spacing `ω` of the BS/radar correlation model, in wavelengths.
    pub correlation_spacing: f64,
    pub rho: f64,
    pub noise_dbm: f64,
    /// Radar receiver noise plus clutter.
    pub radar_noise_dbm: f64,
    /// `|α_z|^2 / σ_r^2`.
    pub echo_to_noise_db: f64,
    pub gamma_r_db: f64,
    pub p_max: f64,
    pub tau_c: f64,
    pub se_prefactor: f64,
    pub bs: Point,
    pub ris: Point,
    pub radar: Point,
    /// Length `d_0` of each UE line.
    pub ue_line_length: f64,
    /// Gain at 1 m applied to every link (`A` in `A d^{-α}`).
    pub reference_gain_db: f64,
    pub exponent_direct: f64,
    pub exponent_ris: f64,
    pub exponent_radar: f64,
    /// Extra loss on the direct BS link of transmission-region UEs.
    pub penetration_db: f64,
    pub radar_region: Region,
}

impl Default for Deployment {
    fn default() -> Self {
        let detection_angles = (0..8).map(|i| -PI / 3.0 + i as f64 * PI / 12.0).collect();
        Self {
            m: 64,
            n_h: 8,
            n_v: 8,
            k_t: 2,
            k_r: 2,
            q: 12,
            pri: 10,
            detection_angles,
            carrier_hz: 6e9,
            element_size_wavelengths: 0.25,
            radar_spacing_wavelengths: 0.5,
            correlation_spacing: 0.3,
            rho: 0.1,
            noise_dbm: -174.0 + 10.0 * (200e3f64).log10(),
            radar_noise_dbm: DEFAULT_RADAR_NOISE_DBM,
            echo_to_noise_db: -12.0,
            gamma_r_db: 10.0,
            p_max: 10.0,
            tau_c: 1.0,
            se_prefactor: 1.0,
            bs: Point::new(0.0, 0.0),
            ris: Point::new(50.0, 10.0),
            radar: Point::new(30.0, 20.0),
            ue_line_length: 20.0,
            reference_gain_db: DEFAULT_REFERENCE_GAIN_DB,
            exponent_direct: 2.8,
            exponent_ris: 2.2,
            exponent_radar: 2.2,
            penetration_db: 15.0,
            radar_region: Region::Transmit,
        }
    }
}

/// Reference gain at 1 m used by the default deployment.
pub const DEFAULT_REFERENCE_GAIN_DB: f64 = 0.0;
/// Radar noise-plus-clutter level used by the default deployment.
pub const DEFAULT_RADAR_NOISE_DBM: f64 = -5.0;

pub fn dbm_to_watts(dbm: f64) -> f64 {
    10f64.powf((dbm - 30.0) / 10.0)
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

impl Deployment {
    pub fn wavelength(&self) -> f64 {
        299_792_458.0 / self.carrier_hz
    }

    pub fn n(&self) -> usize {
        self.n_h * self.n_v
    }

    /// UE positions: reflection-region UEs first, then transmission-region UEs.
    ///
    /// Each group sits on a line of length `d_0` centred below (r) or above (t)
    /// the surface; two or more UEs are spread evenly from end to end, a single
    /// UE sits at the middle.
    pub fn ue_positions(&self) -> Vec<(Region, Point)> {
        let half = self.ue_line_length / 2.0;
        let line = |count: usize, y: f64, region: Region| -> Vec<(Region, Point)> {
            (0..count)
                .map(|i| {
                    let x = if count == 1 {
                        self.ris.x
                    } else {
                        self.ris.x - half + i as f64 * self.ue_line_length / (count - 1) as f64
                    };
                    (region, Point::new(x, y))
                })
                .collect()
        };
        let mut out = line(self.k_r, self.ris.y - half, Region::Reflect);
        out.extend(line(self.k_t, self.ris.y + half, Region::Transmit));
        out
    }

    pub fn to_params(&self) -> Result<ScenarioParams> {
        let lambda = self.wavelength();
        let area = db_to_linear(self.reference_gain_db);
        let gain = |a: &Point, b: &Point, exponent: f64, pen: f64| {
            path_loss_gain(a.dist(b), exponent, area, pen)
        };
        let mut ues = Vec::new();
        for (region, pos) in self.ue_positions() {
            let pen = if region == Region::Transmit {
                self.penetration_db
            } else {
                0.0
            };
            ues.push(UeLinks {
                region,
                gain_bs: gain(&self.bs, &pos, self.exponent_direct, pen)?,
                gain_ris: gain(&self.ris, &pos, self.exponent_ris, 0.0)?,
                gain_radar: gain(&self.radar, &pos, self.exponent_radar, 0.0)?,
            });
        }
        let sigma_r2 = dbm_to_watts(self.radar_noise_dbm);
        let alpha_mag = (sigma_r2 * db_to_linear(self.echo_to_noise_db)).sqrt();
        let element = self.element_size_wavelengths * lambda;
        Ok(ScenarioParams {
            m: self.m,
            n_h: self.n_h,
            n_v: self.n_v,
            q: self.q,
            pri: self.pri,
            alpha: vec![c(alpha_mag, 0.0); self.detection_angles.len()],
            detection_angles: self.detection_angles.clone(),
            rho: self.rho,
            sigma_r2,
            sigma_c2: dbm_to_watts(self.noise_dbm),
            gamma_r: db_to_linear(self.gamma_r_db),
            p_max: self.p_max,
            tau_c: self.tau_c,
            se_prefactor: self.se_prefactor,
            gain_bs_ris: gain(&self.bs, &self.ris, self.exponent_ris, 0.0)?,
            gain_bs_radar: gain(&self.bs, &self.radar, self.exponent_radar, 0.0)?,
            gain_ris_radar: gain(&self.ris, &self.radar, self.exponent_radar, 0.0)?,
            ues,
            radar_region: self.radar_region,
            r_bs: build_steering_correlation(
                self.m,
                (self.m / 2).max(1),
                self.correlation_spacing,
            )?,
            r_radar: build_steering_correlation(
                self.q,
                (self.q / 2).max(1),
                self.correlation_spacing,
            )?,
            r_ris: build_ris_correlation(self.n_h, self.n_v, element, element, lambda)?,
            delta_radar: self.radar_spacing_wavelengths * lambda,
            wavelength: lambda,
            element_size: element,
        })
    }

    pub fn build(&self) -> Result<Scenario> {
        if self.k_t + self.k_r == 0 {
            return Err(Error::InvalidParameter(
                "k_t + k_r must be at least 1".into(),
            ));
        }
        Scenario::new(self.to_params()?)
    }
}

/// Writes a complex matrix as text: a `rows cols` header, then one line per
/// row with `re im` pairs.
pub fn write_matrix<W: Write>(mut out: W, m: &CMat) -> Result<()> {
    writeln!(out, "{} {}", m.nrows(), m.ncols())?;
    for i in 0..m.nrows() {
        let mut line = String::new();
        for j in 0..m.ncols() {
            if j > 0 {
                line.push(' ');
            }
            let z = m[(i, j)];
            write!(line, "{:e} {:e}", z.re, z.im).expect("write to string");
        }
        writeln!(out, "{line}")?;
    }
    Ok(())
}

/// Reads the format produced by [`write_matrix`].
pub fn read_matrix<R: BufRead>(input: R) -> Result<CMat> {
    let mut tokens = Vec::new();
    for line in input.lines() {
        let line = line?;
        let line = line.split('#').next().unwrap_or("");
        tokens.extend(line.split_whitespace().map(str::to_owned));
    }
    let parse_usize = |s: &str| {
        s.parse::<usize>()
            .map_err(|e| Error::Format(format!("bad dimension {s:?}: {e}")))
    };
    if tokens.len() < 2 {
        return Err(Error::Format("missing matrix header".into()));
    }
    let rows = parse_usize(&tokens[0])?;
    let cols = parse_usize(&tokens[1])?;
    let body = &tokens[2..];
    if body.len() != 2 * rows * cols {
        return Err(Error::Format(format!(
            "expected {} numbers for a {rows}x{cols} complex matrix, found {}",
            2 * rows * cols,
            body.len()
        )));
    }
    let vals: Vec<f64> = body
        .iter()
        .map(|s| {
            s.parse::<f64>()
                .map_err(|e| Error::Format(format!("bad number {s:?}: {e}")))
        })
        .collect::<Result<_>>()?;
    Ok(CMat::from_fn(rows, cols, |i, j| {
        let at = 2 * (i * cols + j);
        c(vals[at], vals[at + 1])
    }))
}
