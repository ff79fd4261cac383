//! Alternating optimization: surface by projected gradient ascent with the
//! radar beams fixed, then the closed-form radar design with the surface
//! fixed.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::{self, EffectiveCovariances};
use crate::model::Scenario;
use crate::pgam::{self, OptimizationTrace, PgamOptions};
use crate::radar::{self, RadarBeams, ResidualMode};
use crate::star_ris::PassiveBeamformer;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AoOptions {
    /// Stop when the relative sum-SE change between outer iterations drops below this.
    pub outer_tol: f64,
    pub max_outer: usize,
}

impl Default for AoOptions {
    fn default() -> Self {
        Self {
            outer_tol: 1e-4,
            max_outer: 20,
        }
    }
}

impl AoOptions {
    pub fn validate(&self) -> Result<()> {
        if !(self.outer_tol > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "outer_tol must be positive, got {}",
                self.outer_tol
            )));
        }
        if self.max_outer == 0 {
            return Err(Error::InvalidParameter(
                "max_outer must be at least 1".into(),
            ));
        }
        Ok(())
    }
}

/// One row of the outer-loop trace.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AoRow {
    pub outer: usize,
    pub sum_se: f64,
    pub min_radar_sinr: f64,
    pub radar_power: f64,
}

#[derive(Debug, Clone)]
pub struct AoResult {
    pub pb: PassiveBeamformer,
    pub beams: RadarBeams,
    pub sum_se: f64,
    pub rows: Vec<AoRow>,
    /// Inner traces, one per outer iteration (the best start for multi-start passes).
    pub inner: Vec<OptimizationTrace>,
}

impl AoResult {
    pub fn best_row(&self) -> &AoRow {
        self.rows
            .iter()
            .max_by(|a, b| a.sum_se.total_cmp(&b.sum_se))
            .expect("at least one outer iteration")
    }
}

/// Radar step for a fixed surface, returning the beams with the matching
/// covariances and sum SE.
pub fn radar_step(
    scenario: &Scenario,
    pb: &PassiveBeamformer,
    mode: ResidualMode,
) -> Result<(RadarBeams, EffectiveCovariances, f64)> {
    let covs = EffectiveCovariances::new(scenario, pb)?;
    let beams = radar::design(scenario, &covs, mode)?;
    let se = metrics::sum_se(scenario, &covs, &beams);
    Ok((beams, covs, se))
}

fn min_sinr(scenario: &Scenario, covs: &EffectiveCovariances, beams: &RadarBeams) -> Result<f64> {
    Ok(beams
        .sinrs(scenario, covs)?
        .into_iter()
        .fold(f64::INFINITY, f64::min))
}

fn run(
    scenario: &Scenario,
    mut first_pass: impl FnMut(&RadarBeams) -> Result<(PassiveBeamformer, OptimizationTrace)>,
    pgam_opts: &PgamOptions,
    opts: &AoOptions,
    mode: ResidualMode,
) -> Result<AoResult> {
    opts.validate()?;
    let mut beams = RadarBeams::initial(scenario);
    let mut pb: Option<PassiveBeamformer> = None;
    let mut rows = Vec::new();
    let mut inner = Vec::new();
    let mut best: Option<(PassiveBeamformer, RadarBeams, f64)> = None;
    let mut prev = f64::NAN;
    for outer in 1..=opts.max_outer {
        let (next, trace) = match &pb {
            None => first_pass(&beams)?,
            Some(cur) => pgam::pgam_optimize(scenario, &beams, cur, pgam_opts)?,
        };
        inner.push(trace);
        let (new_beams, covs, se) =
            radar_step(scenario, &next, mode).map_err(|e| Error::AoRadarStep {
                iteration: outer,
                source: Box::new(e),
            })?;
        rows.push(AoRow {
            outer,
            sum_se: se,
            min_radar_sinr: min_sinr(scenario, &covs, &new_beams)?,
            radar_power: new_beams.total_power(),
        });
        if best.as_ref().is_none_or(|b| se > b.2) {
            best = Some((next.clone(), new_beams.clone(), se));
        }
        beams = new_beams;
        pb = Some(next);
        if outer > 1 && ((se - prev) / prev).abs() < opts.outer_tol {
            break;
        }
        prev = se;
    }
    let (pb, beams, sum_se) = best.expect("max_outer >= 1");
    Ok(AoResult {
        pb,
        beams,
        sum_se,
        rows,
        inner,
    })
}

/// Alternating optimization from a given surface state. Radar beams start at
/// `ū_z = √(P_max/Z) a*(θ̄_z)/√Q`.
pub fn alternating_optimize(
    scenario: &Scenario,
    init: &PassiveBeamformer,
    pgam_opts: &PgamOptions,
    opts: &AoOptions,
    mode: ResidualMode,
) -> Result<AoResult> {
    run(
        scenario,
        |beams| pgam::pgam_optimize(scenario, beams, init, pgam_opts),
        pgam_opts,
        opts,
        mode,
    )
}

/// As [`alternating_optimize`], but the first surface pass is a multi-start
/// from `pgam_opts.n_starts` random points.
pub fn alternating_optimize_multi(
    scenario: &Scenario,
    pgam_opts: &PgamOptions,
    opts: &AoOptions,
    mode: ResidualMode,
) -> Result<AoResult> {
    run(
        scenario,
        |beams| {
            let res = pgam::multi_start(scenario, beams, pgam_opts)?;
            let trace = res.best_trace().clone();
            Ok((res.best, trace))
        },
        pgam_opts,
        opts,
        mode,
    )
}

/// As [`alternating_optimize`], but the first surface pass is a multi-start
/// over the given initial points.
pub fn alternating_optimize_starts(
    scenario: &Scenario,
    inits: &[PassiveBeamformer],
    pgam_opts: &PgamOptions,
    opts: &AoOptions,
    mode: ResidualMode,
) -> Result<AoResult> {
    run(
        scenario,
        |beams| {
            let res = pgam::multi_start_from(scenario, beams, inits, pgam_opts)?;
            let trace = res.best_trace().clone();
            Ok((res.best, trace))
        },
        pgam_opts,
        opts,
        mode,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Deployment;
    use crate::star_ris::random_phases;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn scenario(p_max: f64) -> Scenario {
        Deployment {
            m: 8,
            n_h: 4,
            n_v: 2,
            q: 6,
            k_t: 2,
            k_r: 2,
            detection_angles: vec![-0.9, -0.35, 0.45, 0.8],
            p_max,
            ..Deployment::default()
        }
        .build()
        .unwrap()
    }

    fn check_constraints(s: &Scenario, res: &AoResult) {
        res.pb.check_feasible().unwrap();
        let covs = EffectiveCovariances::new(s, &res.pb).unwrap();
        let p = s.params();
        for g in res.beams.sinrs(s, &covs).unwrap() {
            assert!(g >= p.gamma_r * (1.0 - 1e-9));
        }
        assert!(res.beams.total_power() <= p.p_max * (1.0 + 1e-12));
        let se = metrics::sum_se(s, &covs, &res.beams);
        assert!((se - res.sum_se).abs() < 1e-12 * se);
    }

    #[test]
    fn single_outer_iteration() {
        let s = scenario(100.0);
        let init = random_phases(s.n(), &mut ChaCha8Rng::seed_from_u64(1));
        let opts = AoOptions {
            max_outer: 1,
            ..AoOptions::default()
        };
        let res = alternating_optimize(
            &s,
            &init,
            &PgamOptions::default(),
            &opts,
            ResidualMode::NullSpace,
        )
        .unwrap();
        assert_eq!(res.rows.len(), 1);
        assert_eq!(res.inner.len(), 1);
        check_constraints(&s, &res);
        // same as one PGAM pass followed by one radar pass
        let (pb, _) =
            pgam::pgam_optimize(&s, &RadarBeams::initial(&s), &init, &PgamOptions::default())
                .unwrap();
        assert_eq!(pb, res.pb);
    }

    #[test]
    fn large_budget_trace_is_monotone() {
        let s = scenario(1e6);
        let res = alternating_optimize_multi(
            &s,
            &PgamOptions::default(),
            &AoOptions::default(),
            ResidualMode::NullSpace,
        )
        .unwrap();
        check_constraints(&s, &res);
        for w in res.rows.windows(2) {
            assert!(w[1].sum_se >= w[0].sum_se * (1.0 - 1e-9), "{:?}", res.rows);
        }
    }

    #[test]
    fn deterministic() {
        let s = scenario(100.0);
        let a = alternating_optimize_multi(
            &s,
            &PgamOptions::default(),
            &AoOptions::default(),
            ResidualMode::NullSpace,
        )
        .unwrap();
        let b = alternating_optimize_multi(
            &s,
            &PgamOptions::default(),
            &AoOptions::default(),
            ResidualMode::NullSpace,
        )
        .unwrap();
        assert_eq!(a.pb, b.pb);
        assert_eq!(a.rows, b.rows);
    }

    #[test]
    fn infeasible_radar_reports_iteration() {
        let s = scenario(1e-9);
        let init = random_phases(s.n(), &mut ChaCha8Rng::seed_from_u64(1));
        match alternating_optimize(
            &s,
            &init,
            &PgamOptions::default(),
            &AoOptions::default(),
            ResidualMode::NullSpace,
        ) {
            Err(Error::AoRadarStep { iteration, source }) => {
                assert_eq!(iteration, 1);
                assert!(matches!(*source, Error::RadarInfeasible { .. }));
            }
            other => panic!("expected radar failure, got {other:?}"),
        }
    }
}
