//! STAR-RIS state, feasible-set projections and phase quantization.

use std::f64::consts::{FRAC_1_SQRT_2, PI};
use std::fmt::Write as _;
use std::io::{BufRead, Write};

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{cis, CMat, CVec, ONE};
use crate::model::Region;

const FEAS_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Protocol {
    /// Energy splitting: every element serves both regions.
    #[serde(rename = "es")]
    Es,
    /// Mode switching: every element serves exactly one region.
    #[serde(rename = "ms")]
    Ms,
    /// No surface at all, `Φ_t = Φ_r = 0`.
    #[serde(rename = "off")]
    Off,
}

impl Protocol {
    pub fn label(self) -> &'static str {
        match self {
            Protocol::Es => "es",
            Protocol::Ms => "ms",
            Protocol::Off => "off",
        }
    }
}

/// Per-element transmission and reflection coefficients `β_n^w θ_n^w`.
///
/// Amplitudes may go negative inside the optimizer; [`canonicalize`] folds
/// the sign into the phase.
#[derive(Debug, Clone, PartialEq)]
pub struct PassiveBeamformer {
    pub theta_t: Vec<Complex64>,
    pub theta_r: Vec<Complex64>,
    pub beta_t: Vec<f64>,
    pub beta_r: Vec<f64>,
    pub protocol: Protocol,
}

impl PassiveBeamformer {
    /// ES point with all phases zero and `β = 1/√2`.
    pub fn uniform(n: usize) -> Self {
        Self {
            theta_t: vec![ONE; n],
            theta_r: vec![ONE; n],
            beta_t: vec![FRAC_1_SQRT_2; n],
            beta_r: vec![FRAC_1_SQRT_2; n],
            protocol: Protocol::Es,
        }
    }

    pub fn off(n: usize) -> Self {
        Self {
            theta_t: vec![ONE; n],
            theta_r: vec![ONE; n],
            beta_t: vec![0.0; n],
            beta_r: vec![0.0; n],
            protocol: Protocol::Off,
        }
    }

    /// MS point where the first `n_t` elements transmit and the rest reflect.
    pub fn split(n: usize, n_t: usize) -> Self {
        let beta_t: Vec<f64> = (0..n).map(|i| if i < n_t { 1.0 } else { 0.0 }).collect();
        Self {
            theta_t: vec![ONE; n],
            theta_r: vec![ONE; n],
            beta_r: beta_t.iter().map(|b| 1.0 - b).collect(),
            beta_t,
            protocol: Protocol::Ms,
        }
    }

    pub fn n(&self) -> usize {
        self.theta_t.len()
    }

    pub fn theta(&self, region: Region) -> &[Complex64] {
        match region {
            Region::Transmit => &self.theta_t,
            Region::Reflect => &self.theta_r,
        }
    }

    pub fn beta(&self, region: Region) -> &[f64] {
        match region {
            Region::Transmit => &self.beta_t,
            Region::Reflect => &self.beta_r,
        }
    }

    /// Diagonal of `Φ_w`, i.e. `β^w ⊙ θ^w`.
    pub fn coefficients(&self, region: Region) -> CVec {
        let (th, be) = (self.theta(region), self.beta(region));
        CVec::from_fn(self.n(), |i, _| th[i] * be[i])
    }

    /// Stacked phases `[θ^t; θ^r]`.
    pub fn stacked_theta(&self) -> Vec<Complex64> {
        self.theta_t.iter().chain(&self.theta_r).copied().collect()
    }

    /// Stacked amplitudes `[β^t; β^r]`.
    pub fn stacked_beta(&self) -> Vec<f64> {
        self.beta_t.iter().chain(&self.beta_r).copied().collect()
    }

    pub fn from_stacked(theta: &[Complex64], beta: &[f64], protocol: Protocol) -> Result<Self> {
        if theta.len() != beta.len() || !theta.len().is_multiple_of(2) {
            return Err(Error::Dimension(format!(
                "stacked phases ({}) and amplitudes ({}) must have equal even length",
                theta.len(),
                beta.len()
            )));
        }
        let n = theta.len() / 2;
        Ok(Self {
            theta_t: theta[..n].to_vec(),
            theta_r: theta[n..].to_vec(),
            beta_t: beta[..n].to_vec(),
            beta_r: beta[n..].to_vec(),
            protocol,
        })
    }

    /// Checks the unit-modulus, energy-conservation and protocol constraints.
    pub fn check_feasible(&self) -> Result<()> {
        let n = self.n();
        if self.theta_r.len() != n || self.beta_t.len() != n || self.beta_r.len() != n {
            return Err(Error::Dimension(
                "beamformer blocks have different lengths".into(),
            ));
        }
        for (i, z) in self.theta_t.iter().chain(&self.theta_r).enumerate() {
            if (z.norm() - 1.0).abs() > FEAS_TOL {
                return Err(Error::InvalidParameter(format!(
                    "phase {i} has modulus {}",
                    z.norm()
                )));
            }
        }
        for i in 0..n {
            let (bt, br) = (self.beta_t[i], self.beta_r[i]);
            match self.protocol {
                Protocol::Off => {
                    if bt != 0.0 || br != 0.0 {
                        return Err(Error::InvalidParameter(format!(
                            "element {i} active without a surface"
                        )));
                    }
                }
                Protocol::Es | Protocol::Ms => {
                    if (bt * bt + br * br - 1.0).abs() > FEAS_TOL {
                        return Err(Error::InvalidParameter(format!(
                            "element {i} violates energy conservation: {bt}^2 + {br}^2"
                        )));
                    }
                    if self.protocol == Protocol::Ms
                        && !((bt == 0.0 && br == 1.0) || (bt == 1.0 && br == 0.0))
                    {
                        return Err(Error::InvalidParameter(format!(
                            "element {i} is not in a single mode: ({bt}, {br})"
                        )));
                    }
                }
            }
        }
        Ok(())
    }

    /// Writes the text form: a header line, then one line per element with
    /// `angle_t beta_t angle_r beta_r`.
    pub fn write_text<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "{} {}", self.protocol.label(), self.n())?;
        for i in 0..self.n() {
            let mut line = String::new();
            write!(
                line,
                "{} {} {} {}",
                self.theta_t[i].arg(),
                self.beta_t[i],
                self.theta_r[i].arg(),
                self.beta_r[i]
            )
            .expect("write to string");
            writeln!(out, "{line}")?;
        }
        Ok(())
    }

    pub fn read_text<R: BufRead>(input: R) -> Result<Self> {
        let mut lines = input.lines();
        let header = lines
            .next()
            .ok_or_else(|| Error::Format("empty beamformer file".into()))??;
        let mut head = header.split_whitespace();
        let protocol = match head.next() {
            Some("es") => Protocol::Es,
            Some("ms") => Protocol::Ms,
            Some("off") => Protocol::Off,
            other => return Err(Error::Format(format!("unknown protocol {other:?}"))),
        };
        let n: usize = head
            .next()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| Error::Format("missing element count".into()))?;
        let mut pb = PassiveBeamformer {
            theta_t: Vec::with_capacity(n),
            theta_r: Vec::with_capacity(n),
            beta_t: Vec::with_capacity(n),
            beta_r: Vec::with_capacity(n),
            protocol,
        };
        for (row, line) in lines.enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let vals: Vec<f64> = line
                .split_whitespace()
                .map(|s| s.parse::<f64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| Error::Format(format!("line {}: {e}", row + 2)))?;
            if vals.len() != 4 {
                return Err(Error::Format(format!(
                    "line {}: expected 4 values",
                    row + 2
                )));
            }
            pb.theta_t.push(cis(vals[0]));
            pb.beta_t.push(vals[1]);
            pb.theta_r.push(cis(vals[2]));
            pb.beta_r.push(vals[3]);
        }
        if pb.n() != n {
            return Err(Error::Format(format!(
                "header says {n} elements, found {}",
                pb.n()
            )));
        }
        Ok(pb)
    }
}

/// `diag(β^w ⊙ θ^w)`.
pub fn pb_matrix(pb: &PassiveBeamformer, region: Region) -> CMat {
    CMat::from_diagonal(&pb.coefficients(region))
}

/// Entrywise `v/|v|`; a zero entry maps to 1.
pub fn project_theta(v: &[Complex64]) -> Vec<Complex64> {
    v.iter()
        .map(|z| {
            let r = z.norm();
            if r == 0.0 {
                ONE
            } else {
                z / r
            }
        })
        .collect()
}

/// Scales each pair `(v_i, v_{i+N})` onto the unit circle; `(0, 0)` maps to
/// `(1/√2, 1/√2)`.
pub fn project_beta(v: &[f64]) -> Vec<f64> {
    assert!(
        v.len().is_multiple_of(2),
        "project_beta needs an even-length vector"
    );
    let n = v.len() / 2;
    let mut out = v.to_vec();
    for i in 0..n {
        let r = v[i].hypot(v[i + n]);
        if r == 0.0 {
            out[i] = FRAC_1_SQRT_2;
            out[i + n] = FRAC_1_SQRT_2;
        } else {
            out[i] = v[i] / r;
            out[i + n] = v[i + n] / r;
        }
    }
    out
}

/// Makes every amplitude nonnegative by flipping the sign of both the
/// amplitude and its phase.
pub fn canonicalize(pb: &PassiveBeamformer) -> PassiveBeamformer {
    let mut out = pb.clone();
    for (b, t) in out
        .beta_t
        .iter_mut()
        .zip(out.theta_t.iter_mut())
        .chain(out.beta_r.iter_mut().zip(out.theta_r.iter_mut()))
    {
        if *b < 0.0 {
            *b = -*b;
            *t = -*t;
        }
    }
    out
}

fn wrap_angle(a: f64) -> f64 {
    a.rem_euclid(2.0 * PI)
}

/// Nearest point of the `2^bits`-level grid on `[0, 2π)`, with wraparound.
pub fn quantize_angle(angle: f64, bits: u32) -> f64 {
    let levels = 1u64 << bits.min(52);
    let step = 2.0 * PI / levels as f64;
    let idx = (wrap_angle(angle) / step).round() as u64 % levels;
    idx as f64 * step
}

pub fn quantize_phases(pb: &PassiveBeamformer, bits: u32) -> Result<PassiveBeamformer> {
    if bits == 0 {
        return Err(Error::InvalidParameter(
            "quantization needs at least 1 bit".into(),
        ));
    }
    let q = |v: &[Complex64]| {
        v.iter()
            .map(|z| cis(quantize_angle(z.arg(), bits)))
            .collect()
    };
    Ok(PassiveBeamformer {
        theta_t: q(&pb.theta_t),
        theta_r: q(&pb.theta_r),
        ..pb.clone()
    })
}

/// Rounds an ES point to mode switching: an element transmits when
/// `(β^t)² ≥ 1/2`, otherwise it reflects.
pub fn ms_round(pb: &PassiveBeamformer) -> PassiveBeamformer {
    let pb = canonicalize(pb);
    let beta_t: Vec<f64> = pb
        .beta_t
        .iter()
        .map(|b| if b * b >= 0.5 - 1e-15 { 1.0 } else { 0.0 })
        .collect();
    PassiveBeamformer {
        beta_r: beta_t.iter().map(|b| 1.0 - b).collect(),
        beta_t,
        protocol: Protocol::Ms,
        ..pb
    }
}

/// ES point with phases uniform on `[0, 2π)` and `β = 1/√2`.
pub fn random_phases<R: Rng + ?Sized>(n: usize, rng: &mut R) -> PassiveBeamformer {
    let mut draw = |_| cis(rng.random_range(0.0..2.0 * PI));
    let theta_t = (0..n).map(&mut draw).collect();
    let theta_r = (0..n).map(&mut draw).collect();
    PassiveBeamformer {
        theta_t,
        theta_r,
        ..PassiveBeamformer::uniform(n)
    }
}

/// Keeps the amplitudes of `pb` but redraws every phase uniformly.
pub fn redraw_phases<R: Rng + ?Sized>(pb: &PassiveBeamformer, rng: &mut R) -> PassiveBeamformer {
    let fresh = random_phases(pb.n(), rng);
    PassiveBeamformer {
        theta_t: fresh.theta_t,
        theta_r: fresh.theta_r,
        ..pb.clone()
    }
}
