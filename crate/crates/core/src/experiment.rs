//! Sweep runner: one scenario per sweep point, every requested scheme at each
//! point, CSV output.

use std::fmt;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;
use std::str::FromStr;
use std::time::Instant;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::ao::{self, AoOptions, AoResult, AoRow};
use crate::error::{Error, Result};
use crate::linalg::KahanSum;
use crate::mc;
use crate::metrics::{self, EffectiveCovariances, VarianceTerm};
use crate::model::{db_to_linear, dbm_to_watts, Deployment, Scenario};
use crate::pgam::{OptimizationTrace, PgamOptions};
use crate::radar::{RadarBeams, ResidualMode};
use crate::star_ris::{self, PassiveBeamformer};

/// Stream offset for the random-phase draws, clear of the multi-start streams.
const RANDOM_DRAW_STREAM: u64 = 1 << 32;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Scheme {
    StarEs,
    /// ES optimum rounded to mode switching, then re-optimized over phases.
    StarMs,
    /// ES optimum with phases quantized to `b` bits.
    StarQuantized(u32),
    /// Reflect-only and transmit-only halves; `None` splits `N` in two.
    ConventionalRis(Option<(usize, usize)>),
    RandomPhases,
    NoRis,
}

impl Scheme {
    pub fn all() -> Vec<Scheme> {
        vec![
            Scheme::StarEs,
            Scheme::StarMs,
            Scheme::StarQuantized(4),
            Scheme::ConventionalRis(None),
            Scheme::RandomPhases,
            Scheme::NoRis,
        ]
    }

    /// File-name stem, e.g. `star-quantized-4`.
    pub fn file_stem(&self) -> String {
        self.to_string()
            .chars()
            .filter_map(|ch| match ch {
                '(' | ',' => Some('-'),
                ')' | ' ' => None,
                other => Some(other),
            })
            .collect()
    }

    fn needs_es(&self) -> bool {
        matches!(
            self,
            Scheme::StarEs | Scheme::StarMs | Scheme::StarQuantized(_)
        )
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Scheme::StarEs => write!(f, "star-es"),
            Scheme::StarMs => write!(f, "star-ms"),
            Scheme::StarQuantized(b) => write!(f, "star-quantized({b})"),
            Scheme::ConventionalRis(None) => write!(f, "conventional-ris"),
            Scheme::ConventionalRis(Some((t, r))) => write!(f, "conventional-ris({t},{r})"),
            Scheme::RandomPhases => write!(f, "random-phases"),
            Scheme::NoRis => write!(f, "no-ris"),
        }
    }
}

impl FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s: String = s.chars().filter(|c| !c.is_whitespace()).collect();
        let bad = || Error::Config(format!("unknown scheme {s:?}"));
        let (name, args) = match s.find('(') {
            Some(open) => {
                let args = s[open + 1..].strip_suffix(')').ok_or_else(bad)?;
                (&s[..open], Some(args))
            }
            None => (s.as_str(), None),
        };
        let parse = |v: &str| v.parse::<usize>().map_err(|_| bad());
        match (name, args) {
            ("star-es", None) => Ok(Scheme::StarEs),
            ("star-ms", None) => Ok(Scheme::StarMs),
            ("star-quantized", Some(b)) => {
                let bits = parse(b)?;
                if bits == 0 || bits > 16 {
                    return Err(Error::Config(format!(
                        "quantization bits must lie in 1..=16, got {bits}"
                    )));
                }
                Ok(Scheme::StarQuantized(bits as u32))
            }
            ("conventional-ris", None) => Ok(Scheme::ConventionalRis(None)),
            ("conventional-ris", Some(a)) => {
                let (t, r) = a.split_once(',').ok_or_else(bad)?;
                Ok(Scheme::ConventionalRis(Some((parse(t)?, parse(r)?))))
            }
            ("random-phases", None) => Ok(Scheme::RandomPhases),
            ("no-ris", None) => Ok(Scheme::NoRis),
            _ => Err(bad()),
        }
    }
}

impl Serialize for Scheme {
    fn serialize<S: serde::Serializer>(&self, ser: S) -> std::result::Result<S::Ok, S::Error> {
        ser.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for Scheme {
    fn deserialize<D: serde::Deserializer<'de>>(de: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(de)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepVariable {
    /// Surface size; `n_h` stays fixed and `n_v = N / n_h`.
    N,
    M,
    /// `ρ/σ_c²` in dB, varied through `ρ`.
    SnrDb,
    GammaRDb,
    PMax,
    /// Element size in wavelengths.
    ElementSize,
}

impl SweepVariable {
    pub fn label(self) -> &'static str {
        match self {
            SweepVariable::N => "n",
            SweepVariable::M => "m",
            SweepVariable::SnrDb => "snr_db",
            SweepVariable::GammaRDb => "gamma_r_db",
            SweepVariable::PMax => "p_max",
            SweepVariable::ElementSize => "element_size",
        }
    }
}

impl FromStr for SweepVariable {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "n" => Ok(SweepVariable::N),
            "m" => Ok(SweepVariable::M),
            "snr_db" => Ok(SweepVariable::SnrDb),
            "gamma_r_db" => Ok(SweepVariable::GammaRDb),
            "p_max" => Ok(SweepVariable::PMax),
            "element_size" => Ok(SweepVariable::ElementSize),
            _ => Err(Error::Config(format!("unknown sweep variable {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Sweep {
    pub variable: SweepVariable,
    pub values: Vec<f64>,
}

impl FromStr for Sweep {
    type Err = Error;

    /// `variable=v1,v2,...`
    fn from_str(s: &str) -> Result<Self> {
        let (var, vals) = s.split_once('=').ok_or_else(|| {
            Error::Config(format!(
                "sweep override {s:?} is not of the form variable=v1,v2"
            ))
        })?;
        let values = vals
            .split(',')
            .map(|v| {
                v.trim()
                    .parse::<f64>()
                    .map_err(|e| Error::Config(format!("bad sweep value {v:?}: {e}")))
            })
            .collect::<Result<Vec<f64>>>()?;
        Ok(Sweep {
            variable: var.trim().parse()?,
            values,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SchemeConfig {
    pub run: Vec<Scheme>,
    /// Draws averaged by `random-phases`.
    pub random_draws: usize,
}

impl Default for SchemeConfig {
    fn default() -> Self {
        Self {
            run: Scheme::all(),
            random_draws: 20,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RadarConfig {
    pub residual: ResidualMode,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct McConfig {
    pub runs: usize,
    /// Random surface states checked by `validate`.
    pub draws: usize,
    pub fd_directions: usize,
    pub fd_epsilon: f64,
}

impl Default for McConfig {
    fn default() -> Self {
        Self {
            runs: 1000,
            draws: 2,
            fd_directions: 20,
            fd_epsilon: 1e-6,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub scenario: Deployment,
    pub sweep: Sweep,
    #[serde(default)]
    pub schemes: SchemeConfig,
    #[serde(default)]
    pub optimizer: PgamOptions,
    #[serde(default)]
    pub ao: AoOptions,
    #[serde(default)]
    pub radar: RadarConfig,
    #[serde(default)]
    pub mc: McConfig,
}

impl Config {
    pub fn parse(text: &str) -> Result<Self> {
        let cfg: Config = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.check()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)?;
        Self::parse(&text).map_err(|e| match e {
            Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn check(&self) -> Result<()> {
        if self.sweep.values.is_empty() {
            return Err(Error::Config("sweep.values is empty".into()));
        }
        if self.schemes.run.is_empty() {
            return Err(Error::Config("schemes.run is empty".into()));
        }
        if self.schemes.random_draws == 0 {
            return Err(Error::Config(
                "schemes.random_draws must be at least 1".into(),
            ));
        }
        self.optimizer.validate()?;
        self.ao.validate()?;
        for &v in &self.sweep.values {
            self.point_deployment(v)?;
        }
        Ok(())
    }

    /// Deployment at one sweep value.
    pub fn point_deployment(&self, value: f64) -> Result<Deployment> {
        let mut d = self.scenario.clone();
        let count = |v: f64| -> Result<usize> {
            if v >= 1.0 && v.fract() == 0.0 {
                Ok(v as usize)
            } else {
                Err(Error::Config(format!(
                    "sweep value {v} must be a positive integer"
                )))
            }
        };
        match self.sweep.variable {
            SweepVariable::N => {
                let n = count(value)?;
                if d.n_h == 0 || n % d.n_h != 0 {
                    return Err(Error::Config(format!(
                        "N = {n} is not a multiple of n_h = {}",
                        d.n_h
                    )));
                }
                d.n_v = n / d.n_h;
            }
            SweepVariable::M => d.m = count(value)?,
            SweepVariable::SnrDb => d.rho = dbm_to_watts(d.noise_dbm) * db_to_linear(value),
            SweepVariable::GammaRDb => d.gamma_r_db = value,
            SweepVariable::PMax => d.p_max = value,
            SweepVariable::ElementSize => d.element_size_wavelengths = value,
        }
        Ok(d)
    }
}

/// Sweep-point seed derived from the master seed.
pub fn point_seed(master: u64, index: usize) -> u64 {
    crate::stream_rng(master, index as u64).random()
}

/// A solved scheme at one sweep point.
#[derive(Debug, Clone)]
pub struct Solved {
    pub sum_se: f64,
    pub min_radar_sinr: f64,
    pub radar_power: f64,
    /// Final surface states; several for `random-phases`.
    pub pbs: Vec<PassiveBeamformer>,
    pub ao_rows: Vec<AoRow>,
    pub inner: Vec<OptimizationTrace>,
}

#[derive(Debug, Clone)]
pub enum Outcome {
    Solved(Solved),
    /// Radar budget infeasible at this point.
    Skipped(String),
}

#[derive(Debug, Clone)]
pub struct SchemeRun {
    pub scheme: Scheme,
    pub outcome: Outcome,
    pub wall_seconds: f64,
}

#[derive(Debug, Clone)]
pub struct PointResult {
    pub index: usize,
    pub value: f64,
    pub seed: u64,
    pub runs: Vec<SchemeRun>,
}

impl PointResult {
    pub fn solved(&self, scheme: Scheme) -> Option<&Solved> {
        self.runs
            .iter()
            .find(|r| r.scheme == scheme)
            .and_then(|r| match &r.outcome {
                Outcome::Solved(s) => Some(s),
                Outcome::Skipped(_) => None,
            })
    }
}

fn is_infeasible(e: &Error) -> bool {
    match e {
        Error::RadarInfeasible { .. } => true,
        Error::AoRadarStep { source, .. } => is_infeasible(source),
        _ => false,
    }
}

fn from_ao(res: AoResult) -> Solved {
    let best = *res.best_row();
    Solved {
        sum_se: res.sum_se,
        min_radar_sinr: best.min_radar_sinr,
        radar_power: best.radar_power,
        pbs: vec![res.pb],
        ao_rows: res.rows,
        inner: res.inner,
    }
}

/// Radar design for a fixed surface, reported as a one-row trace.
fn fixed_surface(scenario: &Scenario, pb: PassiveBeamformer, mode: ResidualMode) -> Result<Solved> {
    let (beams, covs, se) = ao::radar_step(scenario, &pb, mode)?;
    let row = AoRow {
        outer: 1,
        sum_se: se,
        min_radar_sinr: min_sinr(scenario, &covs, &beams)?,
        radar_power: beams.total_power(),
    };
    Ok(Solved {
        sum_se: se,
        min_radar_sinr: row.min_radar_sinr,
        radar_power: row.radar_power,
        pbs: vec![pb],
        ao_rows: vec![row],
        inner: Vec::new(),
    })
}

fn min_sinr(scenario: &Scenario, covs: &EffectiveCovariances, beams: &RadarBeams) -> Result<f64> {
    Ok(beams
        .sinrs(scenario, covs)?
        .into_iter()
        .fold(f64::INFINITY, f64::min))
}

fn solve(
    cfg: &Config,
    scenario: &Scenario,
    scheme: Scheme,
    seed: u64,
    es: &mut Option<Solved>,
) -> Result<Solved> {
    let mode = cfg.radar.residual;
    let opts = PgamOptions {
        seed,
        ..cfg.optimizer
    };
    let n = scenario.n();
    if scheme.needs_es() && es.is_none() {
        *es = Some(from_ao(ao::alternating_optimize_multi(
            scenario, &opts, &cfg.ao, mode,
        )?));
    }
    let es_pb = || {
        es.as_ref()
            .map(|s| s.pbs[0].clone())
            .expect("ES solved above")
    };
    match scheme {
        Scheme::StarEs => Ok(es.clone().expect("ES solved above")),
        Scheme::StarMs => {
            let init = star_ris::ms_round(&es_pb());
            Ok(from_ao(ao::alternating_optimize(
                scenario, &init, &opts, &cfg.ao, mode,
            )?))
        }
        Scheme::StarQuantized(bits) => {
            fixed_surface(scenario, star_ris::quantize_phases(&es_pb(), bits)?, mode)
        }
        Scheme::ConventionalRis(split) => {
            let (n_t, n_r) = split.unwrap_or((n / 2, n - n / 2));
            if n_t + n_r != n {
                return Err(Error::Config(format!(
                    "conventional-ris({n_t},{n_r}) does not match N = {n}"
                )));
            }
            let base = PassiveBeamformer::split(n, n_t);
            let inits: Vec<PassiveBeamformer> = (0..opts.n_starts)
                .map(|i| star_ris::redraw_phases(&base, &mut crate::stream_rng(seed, i as u64)))
                .collect();
            Ok(from_ao(ao::alternating_optimize_starts(
                scenario, &inits, &opts, &cfg.ao, mode,
            )?))
        }
        Scheme::RandomPhases => {
            let draws = (0..cfg.schemes.random_draws)
                .map(|j| {
                    let pb = star_ris::random_phases(
                        n,
                        &mut crate::stream_rng(seed, RANDOM_DRAW_STREAM + j as u64),
                    );
                    fixed_surface(scenario, pb, mode)
                })
                .collect::<Result<Vec<Solved>>>()?;
            let mean = |f: fn(&Solved) -> f64| {
                draws.iter().map(f).collect::<KahanSum>().value() / draws.len() as f64
            };
            Ok(Solved {
                sum_se: mean(|s| s.sum_se),
                min_radar_sinr: mean(|s| s.min_radar_sinr),
                radar_power: mean(|s| s.radar_power),
                pbs: draws.iter().map(|s| s.pbs[0].clone()).collect(),
                ao_rows: Vec::new(),
                inner: Vec::new(),
            })
        }
        Scheme::NoRis => fixed_surface(scenario, PassiveBeamformer::off(n), mode),
    }
}

/// Runs every scheme at one sweep point.
pub fn run_point(cfg: &Config, index: usize) -> Result<PointResult> {
    let value = cfg.sweep.values[index];
    let seed = point_seed(cfg.seed, index);
    let scenario = cfg.point_deployment(value)?.build()?;
    let mut es = None;
    let mut runs = Vec::new();
    for &scheme in &cfg.schemes.run {
        let start = Instant::now();
        let outcome = match solve(cfg, &scenario, scheme, seed, &mut es) {
            Ok(s) => Outcome::Solved(s),
            Err(e) if is_infeasible(&e) => Outcome::Skipped(e.to_string()),
            Err(e) => return Err(e),
        };
        runs.push(SchemeRun {
            scheme,
            outcome,
            wall_seconds: start.elapsed().as_secs_f64(),
        });
    }
    Ok(PointResult {
        index,
        value,
        seed,
        runs,
    })
}

/// Runs the whole sweep; points run concurrently, results come back in order.
pub fn run_sweep(cfg: &Config) -> Result<Vec<PointResult>> {
    cfg.check()?;
    (0..cfg.sweep.values.len())
        .into_par_iter()
        .map(|i| run_point(cfg, i))
        .collect()
}

fn create(path: &Path) -> Result<BufWriter<fs::File>> {
    Ok(BufWriter::new(fs::File::create(path)?))
}

/// Writes per-scheme CSVs, `timing.csv`, convergence traces, serialized
/// surface states and the effective config into `dir`.
///
/// Wall times live only in `timing.csv`, so the other files are identical
/// for identical inputs.
pub fn write_outputs(cfg: &Config, results: &[PointResult], dir: &Path) -> Result<()> {
    fs::create_dir_all(dir.join("convergence"))?;
    fs::create_dir_all(dir.join("beamformers"))?;
    fs::write(dir.join("config.toml"), cfg.to_toml()?)?;
    let var = cfg.sweep.variable.label();
    let mut timing = csv::Writer::from_writer(create(&dir.join("timing.csv"))?);
    timing.write_record(["scheme", var, "wall_seconds"])?;
    for &scheme in &cfg.schemes.run {
        let stem = scheme.file_stem();
        let mut w = csv::Writer::from_writer(create(&dir.join(format!("{stem}.csv")))?);
        w.write_record([
            var,
            "status",
            "sum_se",
            "min_radar_sinr",
            "radar_power",
            "seed",
        ])?;
        for point in results {
            let Some(run) = point.runs.iter().find(|r| r.scheme == scheme) else {
                continue;
            };
            timing.write_record([
                scheme.to_string(),
                point.value.to_string(),
                format!("{:.3}", run.wall_seconds),
            ])?;
            match &run.outcome {
                Outcome::Skipped(_) => {
                    w.write_record([
                        point.value.to_string(),
                        "skipped".into(),
                        String::new(),
                        String::new(),
                        String::new(),
                        point.seed.to_string(),
                    ])?;
                }
                Outcome::Solved(s) => {
                    w.write_record([
                        point.value.to_string(),
                        "ok".into(),
                        s.sum_se.to_string(),
                        s.min_radar_sinr.to_string(),
                        s.radar_power.to_string(),
                        point.seed.to_string(),
                    ])?;
                    write_convergence(&dir.join("convergence"), &stem, point.index, s)?;
                    for (j, pb) in s.pbs.iter().enumerate() {
                        let name = if s.pbs.len() == 1 {
                            format!("{stem}_{}.txt", point.index)
                        } else {
                            format!("{stem}_{}_{j}.txt", point.index)
                        };
                        let mut f = create(&dir.join("beamformers").join(name))?;
                        pb.write_text(&mut f)?;
                        f.flush()?;
                    }
                }
            }
        }
        w.flush()?;
    }
    timing.flush()?;
    Ok(())
}

fn write_convergence(dir: &Path, stem: &str, index: usize, s: &Solved) -> Result<()> {
    if !s.ao_rows.is_empty() {
        let mut w = csv::Writer::from_writer(create(&dir.join(format!("{stem}_{index}_ao.csv")))?);
        w.write_record(["outer", "sum_se", "min_radar_sinr", "radar_power"])?;
        for r in &s.ao_rows {
            w.write_record([
                r.outer.to_string(),
                r.sum_se.to_string(),
                r.min_radar_sinr.to_string(),
                r.radar_power.to_string(),
            ])?;
        }
        w.flush()?;
    }
    if !s.inner.is_empty() {
        let mut w =
            csv::Writer::from_writer(create(&dir.join(format!("{stem}_{index}_pgam.csv")))?);
        w.write_record([
            "outer",
            "iteration",
            "objective",
            "step",
            "trials",
            "termination",
        ])?;
        for (o, t) in s.inner.iter().enumerate() {
            for (i, obj) in t.objective.iter().enumerate() {
                let (step, trials) = if i == 0 {
                    (String::new(), String::new())
                } else {
                    (t.step[i - 1].to_string(), t.trials[i - 1].to_string())
                };
                w.write_record([
                    (o + 1).to_string(),
                    i.to_string(),
                    obj.to_string(),
                    step,
                    trials,
                    t.termination.label().to_string(),
                ])?;
            }
        }
        w.flush()?;
    }
    Ok(())
}

/// Sum SE of a stored surface state, with the radar redesigned for it.
pub fn reevaluate(scenario: &Scenario, pb: &PassiveBeamformer, mode: ResidualMode) -> Result<f64> {
    Ok(ao::radar_step(scenario, pb, mode)?.2)
}

/// Outcome of one oracle check.
#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

/// UE SINR agreement bound in standard errors.
pub const UE_SINR_MAX_Z: f64 = 3.0;
/// Radar interference relative Frobenius bound.
pub const INTERFERENCE_MAX_REL: f64 = 0.05;
/// Finite-difference relative bound.
pub const FD_MAX_REL: f64 = 1e-5;

/// Reduced deployment used by [`validate`]: 16 antennas, a 4x4 surface and
/// at most four radar antennas and directions.
pub fn reduced(d: &Deployment) -> Deployment {
    let mut d = d.clone();
    d.m = d.m.min(16);
    d.n_h = d.n_h.min(4);
    d.n_v = d.n_v.min(4);
    d.q = d.q.min(4);
    d.detection_angles.truncate(4);
    d
}

/// Monte-Carlo and finite-difference checks on the reduced scenario. The
/// closed-form UE SINR uses `variance`, so a wrong variance term shows up as
/// failed UE checks.
pub fn validate(cfg: &Config, variance: VarianceTerm) -> Result<Vec<Check>> {
    let scenario = reduced(&cfg.scenario).build()?;
    let mc_cfg = cfg.mc;
    let mut checks = Vec::new();
    for d in 0..mc_cfg.draws {
        let seed = point_seed(cfg.seed, d);
        let pb = star_ris::random_phases(scenario.n(), &mut crate::stream_rng(seed, 0));
        let covs = EffectiveCovariances::new(&scenario, &pb)?;
        for (label, beams) in [
            ("silent", RadarBeams::silent(&scenario)),
            ("initial", RadarBeams::initial(&scenario)),
        ] {
            for k in 0..scenario.k() {
                let est = mc::estimate_ue_sinr(&scenario, &pb, &beams, k, mc_cfg.runs, seed)?;
                let closed = metrics::ue_sinr_parts(&scenario, &covs, &beams, k, variance).sinr();
                let z = est.z_score(closed);
                checks.push(Check {
                    name: format!("ue-sinr draw {d} radar {label} ue {k}"),
                    passed: z <= UE_SINR_MAX_Z,
                    detail: format!(
                        "closed {closed:.6e} mc {:.6e} se {:.3e} z {z:.2}",
                        est.mean, est.std_err
                    ),
                });
            }
        }
        let est = mc::estimate_radar_interference(&scenario, &pb, mc_cfg.runs, seed)?;
        let rel = mc::rel_frobenius(&est, &covs.a_interf);
        checks.push(Check {
            name: format!("radar-interference draw {d}"),
            passed: rel <= INTERFERENCE_MAX_REL,
            detail: format!("relative Frobenius error {rel:.4}"),
        });
        let err = mc::fd_gradient_check(
            &scenario,
            &pb,
            &RadarBeams::initial(&scenario),
            mc_cfg.fd_directions,
            mc_cfg.fd_epsilon,
            seed,
        )?;
        checks.push(Check {
            name: format!("gradient draw {d}"),
            passed: err <= FD_MAX_REL,
            detail: format!("worst relative error {err:.3e}"),
        });
    }
    Ok(checks)
}
