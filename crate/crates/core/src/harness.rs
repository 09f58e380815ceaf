//! Scenario configuration, single runs, seed/horizon sweeps with slope fits,
//! and the lemma-check runner behind the command-line tool.

use std::fs::{self, OpenOptions};
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::algorithm::{self, HyperParams, Variant};
use crate::error::{Error, Result};
use crate::geometry::{BaseSet, Domain, Geometry, GeometryKind, MirrorDomain};
use crate::metrics::{self, Fingerprint, MetricsReport, RunTrace};
use crate::problem::{
    self, ConstraintBlock, ConstraintConstants, ConstraintFn, LossConstants, LossFamily,
    LossSequence, Objective, Problem,
};
use crate::theory_checks::{self, CheckReport};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ConstraintSpec {
    Linear { a: Vec<f64>, b: f64 },
    Quadratic { center: Vec<f64>, radius: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlaterSpec {
    pub point: Vec<f64>,
    pub margin: f64,
}

/// Drift period: `period` if set, else T^`period_exponent` if set, else T.
/// Phase: `phase` if set, else drawn from the seed when `random_phase`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum LossSpec {
    FixedLinear {
        c: Vec<f64>,
    },
    FixedQuadratic {
        matrix: Vec<Vec<f64>>,
        center: Vec<f64>,
    },
    LinearDrift {
        c: Vec<f64>,
        u: Vec<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        period: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        period_exponent: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        phase: Option<f64>,
        #[serde(default)]
        random_phase: bool,
    },
    Alternating {
        first: Vec<f64>,
        second: Vec<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        phase: Option<usize>,
        #[serde(default)]
        random_phase: bool,
    },
    QuadraticDrift {
        matrix: Vec<Vec<f64>>,
        matrix_drift: Vec<Vec<f64>>,
        center: Vec<f64>,
        center_drift: Vec<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        period: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        period_exponent: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        phase: Option<f64>,
        #[serde(default)]
        random_phase: bool,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "kebab-case")]
pub enum VCapSpec {
    Exact,
    Supplied { value: f64 },
}

/// Optional overrides of derived constants.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct ConstantsSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub l_f: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub f: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub g: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub h: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub l_g: Option<f64>,
}

fn default_v_cap() -> VCapSpec {
    VCapSpec::Exact
}

fn default_budget() -> usize {
    64
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioConfig {
    pub scenario_id: String,
    pub horizon: usize,
    #[serde(default)]
    pub seed: u64,
    pub variant: Variant,
    pub geometry: GeometryKind,
    #[serde(default = "default_v_cap")]
    pub v_cap: VCapSpec,
    /// Uniform samples used by the empirical variation estimate.
    #[serde(default = "default_budget")]
    pub variation_samples: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
    pub base: BaseSet,
    pub loss: LossSpec,
    #[serde(default)]
    pub constraints: Vec<ConstraintSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub slater: Option<SlaterSpec>,
    #[serde(default)]
    pub constants: ConstantsSpec,
}

impl ScenarioConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Parse(e.to_string()))
    }

    pub fn with_run(&self, horizon: usize, seed: u64) -> Self {
        Self {
            horizon,
            seed,
            ..self.clone()
        }
    }

    /// Every field-level problem, not just the first.
    pub fn validate(&self) -> Result<()> {
        let mut errs = Vec::new();
        if self.scenario_id.trim().is_empty() {
            errs.push("scenario_id: must be nonempty".to_string());
        }
        if self.horizon == 0 {
            errs.push("horizon: must be at least 1".to_string());
        }
        if let Err(e) = self.base.validate() {
            errs.push(format!("base: {e}"));
        }
        let simplex = matches!(self.base, BaseSet::Simplex { .. });
        match (self.variant, simplex) {
            (Variant::OmpdSimplex, false) => {
                errs.push("variant: ompd-simplex requires a simplex base".to_string())
            }
            (Variant::Ompd, true) => {
                errs.push("variant: a simplex base requires ompd-simplex".to_string())
            }
            _ => {}
        }
        match (self.geometry, simplex) {
            (GeometryKind::Entropic, false) => {
                errs.push("geometry: entropic requires a simplex base".to_string())
            }
            (GeometryKind::Euclidean, true) => {
                errs.push("geometry: a simplex base requires the entropic geometry".to_string())
            }
            _ => {}
        }
        let d = self.base.dim();
        for (k, c) in self.constraints.iter().enumerate() {
            let n = match c {
                ConstraintSpec::Linear { a, .. } => a.len(),
                ConstraintSpec::Quadratic { center, .. } => center.len(),
            };
            if n != d {
                errs.push(format!("constraints[{k}]: dimension {n}, expected {d}"));
            }
        }
        if let Some(s) = &self.slater {
            if s.point.len() != d {
                errs.push(format!(
                    "slater.point: dimension {}, expected {d}",
                    s.point.len()
                ));
            }
        }
        if let VCapSpec::Supplied { value } = self.v_cap {
            if !(value >= 0.0 && value.is_finite()) {
                errs.push(format!(
                    "v_cap.value: must be finite and nonnegative, got {value}"
                ));
            }
        }
        if let Some(l) = self.constants.l_f {
            if !(l > 0.0) {
                errs.push(format!("constants.l_f: must be positive, got {l}"));
            }
        }
        if errs.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(errs))
        }
    }

    /// SHA-256 of the canonical TOML form (which includes the seed).
    pub fn fingerprint(&self) -> Result<Fingerprint> {
        let canon = Self {
            output: None,
            ..self.clone()
        };
        let digest = Sha256::digest(canon.to_toml()?.as_bytes());
        Ok(Fingerprint {
            config_hash: hex::encode(digest),
            seed: self.seed,
        })
    }

    fn loss_family(&self) -> LossFamily {
        let t = self.horizon as f64;
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let period_of = |p: Option<f64>, e: Option<f64>| match (p, e) {
            (Some(p), _) => p,
            (None, Some(e)) => t.powf(e),
            (None, None) => t,
        };
        match &self.loss {
            LossSpec::FixedLinear { c } => LossFamily::Fixed(Objective::Linear { c: c.clone() }),
            LossSpec::FixedQuadratic { matrix, center } => {
                LossFamily::Fixed(Objective::Quadratic {
                    matrix: matrix.clone(),
                    center: center.clone(),
                })
            }
            LossSpec::LinearDrift {
                c,
                u,
                period,
                period_exponent,
                phase,
                random_phase,
            } => {
                let period = period_of(*period, *period_exponent);
                LossFamily::LinearDrift {
                    c: c.clone(),
                    u: u.clone(),
                    period,
                    phase: resolve_phase(*phase, *random_phase, period, &mut rng),
                }
            }
            LossSpec::Alternating {
                first,
                second,
                phase,
                random_phase,
            } => LossFamily::Alternating {
                first: first.clone(),
                second: second.clone(),
                phase: phase.unwrap_or(if *random_phase {
                    rng.random_range(0..2)
                } else {
                    0
                }),
            },
            LossSpec::QuadraticDrift {
                matrix,
                matrix_drift,
                center,
                center_drift,
                period,
                period_exponent,
                phase,
                random_phase,
            } => {
                let period = period_of(*period, *period_exponent);
                LossFamily::QuadraticDrift {
                    matrix: matrix.clone(),
                    matrix_drift: matrix_drift.clone(),
                    center: center.clone(),
                    center_drift: center_drift.clone(),
                    period,
                    phase: resolve_phase(*phase, *random_phase, period, &mut rng),
                }
            }
        }
    }

    /// Builds the instance: domain, losses with constants, constraint block.
    pub fn build_problem(&self) -> Result<Problem> {
        self.validate()?;
        let geometry = Geometry::new(self.geometry, self.base.dim())?;
        let domain = Domain::new(geometry, self.base.clone())?;
        let fns: Vec<ConstraintFn> = self
            .constraints
            .iter()
            .map(|c| match c {
                ConstraintSpec::Linear { a, b } => ConstraintFn::Linear {
                    a: a.clone(),
                    b: *b,
                },
                ConstraintSpec::Quadratic { center, radius } => ConstraintFn::Quadratic {
                    center: center.clone(),
                    radius: *radius,
                },
            })
            .collect();
        let derived = problem::builtin_constants(&fns, domain.base(), domain.geometry().norm())?;
        let ov = self.constants;
        let cc = ConstraintConstants {
            g: ov.g.unwrap_or(derived.g),
            h: ov.h.unwrap_or(derived.h),
            l_g: ov.l_g.unwrap_or(derived.l_g),
        };
        let mut block = ConstraintBlock::with_constants(domain.dim(), fns, cc)?;
        if let Some(s) = &self.slater {
            block = block.with_slater(s.point.clone(), s.margin)?;
        }
        let mut losses = LossSequence::new(&domain, self.loss_family(), self.horizon)?;
        let lc = losses.constants();
        losses = losses.override_constants(LossConstants {
            f: ov.f.unwrap_or(lc.f),
            l_f: ov.l_f.unwrap_or(lc.l_f),
        });
        Problem::new(domain, losses, block)
    }
}

fn resolve_phase(phase: Option<f64>, random: bool, period: f64, rng: &mut ChaCha8Rng) -> f64 {
    match phase {
        Some(p) => p,
        None if random => rng.random_range(0.0..2.0 * period),
        None => 0.0,
    }
}

/// Result of one scenario run.
#[derive(Debug, Clone)]
pub struct ScenarioOutcome {
    pub trace: RunTrace,
    pub report: MetricsReport,
    pub comparator: Vec<f64>,
    pub hyper: HyperParams,
}

/// Runs a scenario and computes its metrics, without writing files.
pub fn execute(config: &ScenarioConfig) -> Result<ScenarioOutcome> {
    let problem = config.build_problem()?;
    let v_cap = match config.v_cap {
        VCapSpec::Exact => problem::gradient_variation(&problem.losses, &problem.domain)?,
        VCapSpec::Supplied { value } => value,
    };
    let sched = problem.schedule_constants();
    let hyper = HyperParams::from_variation(v_cap, sched.l_f, config.horizon, config.variant)?;
    let mut trace = algorithm::run(config.variant, &problem, &hyper, config.horizon)?;
    trace.fingerprint = config.fingerprint()?;
    let comparator =
        problem::hindsight_comparator(&problem.losses, &problem.constraints, &problem.domain)?;
    let regret = metrics::regret(&trace, &comparator, &problem)?;
    // separate stream from the phase draw
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    rng.set_stream(1);
    let v_empirical = metrics::empirical_variation(
        &trace,
        &problem.losses,
        &problem.domain,
        config.variation_samples,
        &mut rng,
    );
    let report = MetricsReport {
        scenario_id: config.scenario_id.clone(),
        horizon: config.horizon,
        regret,
        violation: metrics::violations(&trace),
        clipped_violation: metrics::clipped_violations(&trace),
        max_violation: metrics::max_violation(&trace),
        queue_bound: trace.queue_bound(),
        v_cap,
        v_empirical,
    };
    Ok(ScenarioOutcome {
        trace,
        report,
        comparator,
        hyper,
    })
}

fn cell_stem(config: &ScenarioConfig) -> String {
    format!(
        "{}_T{}_s{}",
        config.scenario_id, config.horizon, config.seed
    )
}

fn create(path: &Path) -> Result<BufWriter<fs::File>> {
    fs::File::create(path)
        .map(BufWriter::new)
        .map_err(|e| Error::io(path, e))
}

/// Writes `<stem>_rounds.csv` and `<stem>_violations.csv` into `dir`.
pub fn write_cell(
    dir: &Path,
    config: &ScenarioConfig,
    outcome: &ScenarioOutcome,
) -> Result<PathBuf> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let stem = cell_stem(config);
    let rounds = dir.join(format!("{stem}_rounds.csv"));
    metrics::write_rounds_csv(&outcome.trace, create(&rounds)?)?;
    let viol = dir.join(format!("{stem}_violations.csv"));
    metrics::write_violations_csv(&outcome.report, create(&viol)?)?;
    Ok(rounds)
}

fn append_summary(path: &Path, rows: &[Vec<String>], header: &[&str]) -> Result<()> {
    let fresh = !path.exists();
    let file = OpenOptions::new()
        .create(true)
        .append(true)
        .open(path)
        .map_err(|e| Error::io(path, e))?;
    let mut w = csv::Writer::from_writer(file);
    if fresh {
        w.write_record(header)?;
    }
    for r in rows {
        w.write_record(r)?;
    }
    w.flush().map_err(|e| Error::io(path, e))?;
    Ok(())
}

/// Runs a scenario; with an output directory, writes the per-round CSV and
/// appends a row to `summary.csv`.
pub fn run_scenario(config: &ScenarioConfig, out: Option<&Path>) -> Result<ScenarioOutcome> {
    let outcome = execute(config)?;
    if let Some(dir) = out.or(config.output.as_deref()) {
        write_cell(dir, config, &outcome)?;
        append_summary(
            &dir.join("summary.csv"),
            &[metrics::summary_row(&outcome.report)],
            &metrics::SUMMARY_HEADER,
        )?;
    }
    Ok(outcome)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub base: ScenarioConfig,
    pub horizons: Vec<usize>,
    pub seeds: Vec<u64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub seed: u64,
    pub report: MetricsReport,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSummary {
    pub rows: Vec<SweepRow>,
    /// Seed-averaged metrics per distinct T, ascending.
    pub mean_regret: Vec<(usize, f64)>,
    pub mean_max_violation: Vec<(usize, f64)>,
    /// None with fewer than two distinct T or a nonpositive mean regret.
    pub regret_slope: Option<f64>,
    pub violation_slope: Option<f64>,
    /// c in log(violation + c), c = 1 + |min mean violation|.
    pub violation_offset: f64,
}

/// Least-squares slope of log y on log x; None with < 2 distinct x or any
/// nonpositive value.
pub fn loglog_slope(points: &[(f64, f64)]) -> Option<f64> {
    let mut xs: Vec<f64> = points.iter().map(|p| p.0).collect();
    xs.sort_by(f64::total_cmp);
    xs.dedup();
    if xs.len() < 2 || points.iter().any(|(x, y)| !(*x > 0.0 && *y > 0.0)) {
        return None;
    }
    let n = points.len() as f64;
    let lx: Vec<f64> = points.iter().map(|p| p.0.ln()).collect();
    let ly: Vec<f64> = points.iter().map(|p| p.1.ln()).collect();
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = lx.iter().map(|x| (x - mx) * (x - mx)).sum();
    Some(sxy / sxx)
}

fn thread_cap() -> Option<usize> {
    std::env::var("OPMP_THREADS")
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|n| *n > 0)
}

/// Runs every (T, seed) cell in parallel, optionally writing per-cell CSVs
/// and `sweep_summary.csv` into `out`.
pub fn sweep(spec: &SweepSpec, out: Option<&Path>) -> Result<SweepSummary> {
    if spec.horizons.is_empty() || spec.seeds.is_empty() {
        return Err(Error::Config(vec![
            "sweep: horizon and seed lists must be nonempty".into(),
        ]));
    }
    let cells: Vec<ScenarioConfig> = spec
        .horizons
        .iter()
        .flat_map(|t| spec.seeds.iter().map(move |s| (*t, *s)))
        .map(|(t, s)| spec.base.with_run(t, s))
        .collect();
    for c in &cells {
        c.validate()?;
    }
    let work = || -> Result<Vec<(ScenarioConfig, ScenarioOutcome)>> {
        cells
            .par_iter()
            .map(|c| {
                let o = execute(c)?;
                if let Some(dir) = out {
                    write_cell(dir, c, &o)?;
                }
                Ok((c.clone(), o))
            })
            .collect()
    };
    let results = match thread_cap() {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Error::Internal(e.to_string()))?
            .install(work)?,
        None => work()?,
    };

    let rows: Vec<SweepRow> = results
        .into_iter()
        .map(|(c, o)| SweepRow {
            seed: c.seed,
            report: o.report,
        })
        .collect();
    let mut ts: Vec<usize> = spec.horizons.clone();
    ts.sort_unstable();
    ts.dedup();
    let mean = |t: usize, f: &dyn Fn(&MetricsReport) -> f64| {
        let v: Vec<f64> = rows
            .iter()
            .filter(|r| r.report.horizon == t)
            .map(|r| f(&r.report))
            .collect();
        v.iter().sum::<f64>() / v.len() as f64
    };
    let mean_regret: Vec<(usize, f64)> = ts.iter().map(|t| (*t, mean(*t, &|r| r.regret))).collect();
    let mean_max_violation: Vec<(usize, f64)> = ts
        .iter()
        .map(|t| (*t, mean(*t, &|r| r.max_violation)))
        .collect();
    let min_v = mean_max_violation
        .iter()
        .map(|p| p.1)
        .fold(f64::INFINITY, f64::min);
    let violation_offset = 1.0 + min_v.abs();
    let to_f = |v: &[(usize, f64)], off: f64| -> Vec<(f64, f64)> {
        v.iter().map(|(t, y)| (*t as f64, y + off)).collect()
    };
    let summary = SweepSummary {
        regret_slope: loglog_slope(&to_f(&mean_regret, 0.0)),
        violation_slope: loglog_slope(&to_f(&mean_max_violation, violation_offset)),
        violation_offset,
        mean_regret,
        mean_max_violation,
        rows,
    };
    if let Some(dir) = out {
        write_sweep_summary(dir, &summary)?;
    }
    Ok(summary)
}

fn opt_num(v: Option<f64>) -> String {
    v.map(metrics::fmt_num).unwrap_or_default()
}

fn write_sweep_summary(dir: &Path, s: &SweepSummary) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let path = dir.join("sweep_summary.csv");
    let mut w = csv::Writer::from_writer(create(&path)?);
    let mut header: Vec<&str> = metrics::SUMMARY_HEADER.to_vec();
    header.insert(2, "seed");
    w.write_record(&header)?;
    for r in &s.rows {
        let mut row = metrics::summary_row(&r.report);
        row.insert(2, r.seed.to_string());
        w.write_record(&row)?;
    }
    w.flush().map_err(|e| Error::io(&path, e))?;

    let path = dir.join("sweep_slopes.csv");
    let mut w = csv::Writer::from_writer(create(&path)?);
    w.write_record(["metric", "slope", "offset"])?;
    w.write_record(["regret".to_string(), opt_num(s.regret_slope), "0.0".into()])?;
    w.write_record([
        "max_violation".to_string(),
        opt_num(s.violation_slope),
        metrics::fmt_num(s.violation_offset),
    ])?;
    w.flush().map_err(|e| Error::io(&path, e))?;
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Lemma {
    Queue,
    Dpp,
    Pushback,
    Mixing,
    Descent,
}

impl Lemma {
    pub const ALL: [Lemma; 5] = [
        Lemma::Queue,
        Lemma::Dpp,
        Lemma::Pushback,
        Lemma::Mixing,
        Lemma::Descent,
    ];

    /// Parses `all` or a comma-separated list.
    pub fn parse_list(s: &str) -> Result<Vec<Lemma>> {
        if s.trim() == "all" {
            return Ok(Self::ALL.to_vec());
        }
        s.split(',')
            .map(|p| match p.trim() {
                "queue" => Ok(Lemma::Queue),
                "dpp" => Ok(Lemma::Dpp),
                "pushback" => Ok(Lemma::Pushback),
                "mixing" => Ok(Lemma::Mixing),
                "descent" => Ok(Lemma::Descent),
                other => Err(Error::Argument(format!("unknown lemma check '{other}'"))),
            })
            .collect()
    }
}

/// Runs the requested checks on a scenario; checks that do not apply to the
/// scenario's variant are left out.
pub fn run_checks(config: &ScenarioConfig, lemmas: &[Lemma]) -> Result<Vec<CheckReport>> {
    let problem = config.build_problem()?;
    let outcome = execute(config)?;
    let trace = &outcome.trace;
    let hp = outcome.hyper;
    let dom = &problem.domain;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    rng.set_stream(2);
    let prox = config.variant != Variant::PdBaseline;
    let mut out = Vec::new();
    for lemma in lemmas {
        match lemma {
            Lemma::Queue if prox => out.extend(theory_checks::check_queue_lemma(trace)?),
            Lemma::Dpp if prox => {
                let snaps =
                    theory_checks::snapshots(&problem, &hp, config.variant, config.horizon)?;
                let picks = pick_rounds(snaps.len(), 100, &mut rng);
                let mut dpp = CheckReport::new("dpp_bound", 1e-8);
                let mut push = CheckReport::new("round_pushback", 1e-8);
                for i in picks {
                    let s = &snaps[i];
                    let mut zs: Vec<Vec<f64>> = (0..20).map(|_| dom.sample(&mut rng)).collect();
                    zs.push(s.x.clone());
                    merge_into(
                        &mut dpp,
                        &theory_checks::check_dpp_bound(s, dom, &problem.constraints, &zs)?,
                    );
                    merge_into(
                        &mut push,
                        &theory_checks::check_round_pushback(s, dom, &zs)?,
                    );
                }
                out.push(dpp);
                out.push(push);
            }
            Lemma::Pushback => out.push(theory_checks::check_pushback(dom, 50, 20, &mut rng)?),
            Lemma::Mixing if config.variant == Variant::OmpdSimplex => {
                out.extend(theory_checks::check_trace_mixing(trace, 5, &mut rng, dom)?)
            }
            Lemma::Descent => out.extend(theory_checks::check_descent_for_problem(
                &problem, 1000, 1.0, &mut rng,
            )),
            _ => {}
        }
    }
    Ok(out)
}

fn merge_into(acc: &mut CheckReport, r: &CheckReport) {
    acc.rounds += r.rounds;
    acc.samples += r.samples;
    acc.skipped += r.skipped;
    if r.max_residual > acc.max_residual || r.max_residual.is_nan() {
        acc.max_residual = r.max_residual;
    }
    acc.pass = acc.max_residual <= acc.tolerance;
}

/// Up to `n` distinct round indices in ascending order.
fn pick_rounds(total: usize, n: usize, rng: &mut ChaCha8Rng) -> Vec<usize> {
    if total <= n {
        return (0..total).collect();
    }
    let mut v = rand::seq::index::sample(rng, total, n).into_vec();
    v.sort_unstable();
    v
}

pub fn write_checks(dir: &Path, name: &str, reports: &[CheckReport]) -> Result<PathBuf> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let path = dir.join(format!("{name}_checks.csv"));
    theory_checks::write_checks_csv(reports, create(&path)?)?;
    Ok(path)
}
