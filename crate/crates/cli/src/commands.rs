use std::fmt::Write as _;
use std::io::Write as _;

use cachecoder::analysis::audit::{inject_key_reuse, security_audit, AuditInput, AuditReport};
use cachecoder::analysis::formulas::{formula_point, to_f64, CacheInput, FormulaPoint};
use cachecoder::combinatorics::{min_valid_f, Profile};
use cachecoder::run::{run, RunArtifacts, RunReport};
use cachecoder::schemes::{
    centralized, DecentralizedScheme, PlacementMode, Scheme, SchemeKind, SystemParams,
};
use cachecoder::Field;
use num_traits::ToPrimitive;
use rayon::prelude::*;

use crate::config::{grid, Axis, CacheSpec, FileLen, RunConfig, SchemeChoice, Settings};
use crate::error::CliError;
use crate::render::{exact, value};

pub const CSV_HEADER: &str =
    "scheme,K,L,N,M,t_or_q,delay_secure,delay_insecure,m_d,m_k,dof,region_ok,measured_delay";

/// File length used for Bernoulli placement when `f` is `auto`.
pub const BERNOULLI_AUTO_LEN: usize = 1 << 14;

fn cache_input(cache: &CacheSpec) -> CacheInput {
    match cache {
        CacheSpec::T(t) => CacheInput::T(t.clone()),
        CacheSpec::M(m) => CacheInput::M(m.clone()),
        CacheSpec::Prob(p) => CacheInput::Prob(p.clone()),
    }
}

pub fn formula(kind: SchemeKind, cfg: &RunConfig) -> Result<FormulaPoint, cachecoder::Error> {
    formula_point(
        kind,
        cfg.users,
        cfg.streams,
        cfg.files,
        &cache_input(&cfg.cache),
    )
}

/// Instantiates the simulator for a point whose formula already evaluated.
pub fn build_scheme(
    kind: SchemeKind,
    cfg: &RunConfig,
    point: &FormulaPoint,
) -> Result<Box<dyn Scheme>, CliError> {
    let field = Field::with_bits(cfg.field_bits)?;
    if point.numeric {
        return Err(CliError::Invalid(format!(
            "M={} needs a numerically solved cache parameter; give it exactly instead",
            exact(&point.memory)
        )));
    }
    let with_len = |f: usize| {
        SystemParams::new(
            cfg.users,
            cfg.streams,
            cfg.files,
            f,
            field.clone(),
            cfg.seed,
        )
    };
    if kind == SchemeKind::Decentralized {
        let prob = point.param.clone();
        let profile = Profile::Decentralized {
            cache_prob: prob.clone(),
        };
        let f = match (&cfg.file_len, cfg.placement) {
            (FileLen::Fixed(f), _) => *f,
            (FileLen::Auto, PlacementMode::Bernoulli) => BERNOULLI_AUTO_LEN,
            (FileLen::Auto, PlacementMode::Ideal) => {
                to_len(min_valid_f(&profile, cfg.users, cfg.streams)?)?
            }
        };
        return Ok(Box::new(DecentralizedScheme::new(
            with_len(f)?,
            prob,
            cfg.placement,
        )?));
    }
    if !point.param.is_integer() {
        return Err(CliError::Invalid(format!(
            "M={} gives t={}, which is not an integer",
            exact(&point.memory),
            exact(&point.param)
        )));
    }
    let t = point.param.to_integer().to_usize().unwrap_or(usize::MAX);
    let f = match cfg.file_len {
        FileLen::Fixed(f) => f,
        FileLen::Auto => {
            let profile = match kind {
                SchemeKind::Mt => Profile::Mt { t },
                SchemeKind::Grouped => Profile::Grouped { t },
                _ => Profile::Feedback { t },
            };
            to_len(min_valid_f(&profile, cfg.users, cfg.streams)?)?
        }
    };
    Ok(centralized(kind, with_len(f)?, t)?)
}

fn to_len(f: u64) -> Result<usize, CliError> {
    usize::try_from(f)
        .map_err(|_| CliError::Invalid(format!("minimum file length {f} does not fit in memory")))
}

fn single_kind(cfg: &RunConfig) -> Result<SchemeKind, CliError> {
    match cfg.scheme {
        SchemeChoice::Kind(k) => Ok(k),
        SchemeChoice::FormulasOnly => Err(CliError::Invalid(
            "formulas-only has no simulation to run".into(),
        )),
    }
}

pub struct Simulation {
    pub point: FormulaPoint,
    pub report: RunReport,
    pub artifacts: RunArtifacts,
    pub scheme: Box<dyn Scheme>,
}

pub fn simulate(kind: SchemeKind, cfg: &RunConfig) -> Result<Simulation, CliError> {
    let point = formula(kind, cfg)?;
    let scheme = build_scheme(kind, cfg, &point)?;
    let demand = cfg.demand.build(cfg.users, cfg.files, cfg.seed)?;
    let (report, artifacts) = run(scheme.as_ref(), &demand)?;
    Ok(Simulation {
        point,
        report,
        artifacts,
        scheme,
    })
}

fn audit_of(sim: &Simulation, trials: usize, cfg: &RunConfig) -> Result<AuditReport, CliError> {
    let mut log = sim.artifacts.log.clone();
    if cfg.inject_key_reuse && !inject_key_reuse(&mut log) {
        return Err(CliError::Invalid(
            "the log has fewer than two keyed blocks to doctor".into(),
        ));
    }
    let input = AuditInput {
        log: &log,
        channel: &sim.artifacts.channel,
        library: &sim.artifacts.library,
        layout: &sim.artifacts.placement.layout,
        keys: &sim.artifacts.placement.keys,
    };
    Ok(security_audit(&input, trials, cfg.seed, cfg.ablate_keys)?)
}

fn formula_lines(out: &mut String, p: &FormulaPoint) {
    let v = |x| value(x, p.numeric);
    let param = if p.kind == SchemeKind::Decentralized {
        "q"
    } else {
        "t"
    };
    let _ = writeln!(out, "scheme: {}", p.kind);
    let _ = writeln!(
        out,
        "M: {}  {param}: {}{}",
        v(&p.memory),
        v(&p.param),
        if p.numeric { " (numerical)" } else { "" }
    );
    let _ = writeln!(
        out,
        "delay: {}  insecure: {}",
        v(&p.delay),
        v(&p.delay_insecure)
    );
    let _ = writeln!(
        out,
        "m_d: {}  m_k: {}  dof: {}  region_ok: {}",
        v(&p.m_d),
        v(&p.m_k),
        p.dof,
        p.region_ok
    );
}

fn audit_lines(out: &mut String, a: &AuditReport) {
    let _ = writeln!(
        out,
        "audit: structural {}  mask {}  reused keys {}  unkeyed blocks {}",
        if a.structural_ok { "ok" } else { "FAILED" },
        if a.mask_present { "ok" } else { "FAILED" },
        a.reused_keys.len(),
        a.unkeyed_blocks.len()
    );
    if let Some(p) = a.uniformity_pvalue {
        let _ = writeln!(
            out,
            "audit: uniformity p={p:.6}  min position p={:.6}  chi2={:.3}  dof={}  positions={}  trials={}",
            a.min_position_pvalue.unwrap_or(f64::NAN),
            a.chi_square,
            a.dof,
            a.positions,
            a.trials
        );
    }
}

pub fn cmd_run(cfg: &RunConfig) -> Result<String, CliError> {
    let mut out = String::new();
    if cfg.scheme == SchemeChoice::FormulasOnly {
        for kind in SchemeKind::ALL {
            match formula(kind, cfg) {
                Ok(p) => formula_lines(&mut out, &p),
                Err(e) => {
                    let _ = writeln!(out, "scheme: {kind}\nerror: {e}");
                }
            }
        }
        return Ok(out);
    }
    let sim = simulate(single_kind(cfg)?, cfg)?;
    let r = &sim.report;
    let _ = writeln!(
        out,
        "K: {}  L: {}  N: {}  f: {}  field: GF(2^{})  seed: {}",
        r.users, r.streams, r.files, r.file_len, cfg.field_bits, cfg.seed
    );
    formula_lines(&mut out, &sim.point);
    let _ = writeln!(out, "blocks: {}", r.blocks);
    let _ = writeln!(
        out,
        "measured delay: {}  formula: {}",
        exact(&r.measured_delay),
        exact(&sim.point.delay)
    );
    let _ = writeln!(
        out,
        "measured m_d: {}  formula: {}",
        exact(&r.measured_m_d),
        exact(&sim.point.m_d)
    );
    let _ = writeln!(
        out,
        "measured m_k: {}  formula: {}",
        exact(&r.measured_m_k),
        exact(&sim.point.m_k)
    );
    if r.matches_formula() {
        let _ = writeln!(out, "formula match: exact");
    } else {
        let rel = (to_f64(&r.measured_delay) - to_f64(&sim.point.delay)) / to_f64(&sim.point.delay);
        let _ = writeln!(out, "formula match: no (relative delay error {rel:.6})");
    }
    for v in &r.verdicts {
        let verdict = v
            .error
            .as_ref()
            .map_or_else(|| "OK".to_string(), |e| format!("FAILED ({e})"));
        let _ = writeln!(out, "user {} file {}: {verdict}", v.user + 1, v.file + 1);
    }
    let audit = audit_of(&sim, cfg.trials.unwrap_or(0), cfg)?;
    audit_lines(&mut out, &audit);
    match r.first_failure() {
        Some(e) => Err(CliError::Decode(format!("{e}\n{}", out.trim_end()))),
        None => Ok(out),
    }
}

pub fn cmd_audit(cfg: &RunConfig) -> Result<String, CliError> {
    let sim = simulate(single_kind(cfg)?, cfg)?;
    if let Some(e) = sim.report.first_failure() {
        return Err(CliError::Decode(e.to_string()));
    }
    let order = sim.scheme.system().field.order();
    let trials = cfg.trials.unwrap_or(20 * order);
    let a = audit_of(&sim, trials, cfg)?;
    let mut out = String::new();
    let _ = writeln!(
        out,
        "scheme: {}  K: {}  L: {}  field: GF(2^{})",
        sim.point.kind, cfg.users, cfg.streams, cfg.field_bits
    );
    audit_lines(&mut out, &a);
    let mut reasons = Vec::new();
    if !a.structural_ok {
        reasons.push(if a.reused_keys.is_empty() {
            "unkeyed block"
        } else {
            "key reuse"
        });
    }
    if !a.mask_present {
        reasons.push("mask missing");
    }
    if a.structural_ok && a.uniformity_pvalue.is_some_and(|p| p <= cfg.p_threshold) {
        reasons.push("uniformity rejected");
    }
    if reasons.is_empty() {
        let _ = writeln!(out, "audit: PASS (threshold {})", cfg.p_threshold);
        Ok(out)
    } else {
        Err(CliError::Audit(format!(
            "{}\n{}",
            reasons.join(", "),
            out.trim_end()
        )))
    }
}

fn csv_row(p: &FormulaPoint, measured: Option<&str>) -> String {
    let v = |x| value(x, p.numeric);
    format!(
        "{},{},{},{},{},{},{},{},{},{},{},{},{}",
        p.kind,
        p.users,
        p.streams,
        p.files,
        v(&p.memory),
        v(&p.param),
        v(&p.delay),
        v(&p.delay_insecure),
        v(&p.m_d),
        v(&p.m_k),
        p.dof,
        p.region_ok,
        measured.unwrap_or("")
    )
}

fn invalid_row(kind: &str, s: &Settings) -> String {
    let g = |k| s.get(k).unwrap_or("");
    let n = s.get("N").unwrap_or(g("K"));
    format!("{kind},{},{},{n},{},,,,,,,invalid,", g("K"), g("L"), g("M"))
}

struct Row {
    text: String,
    decode_failure: Option<String>,
}

fn evaluate(settings: &Settings, simulate_points: bool, env_seed: Option<&str>) -> Vec<Row> {
    let cfg = match RunConfig::from_settings(settings, env_seed) {
        Ok(c) => c,
        Err(_) => {
            let kind = settings.get("scheme").unwrap_or("");
            return vec![Row {
                text: invalid_row(kind, settings),
                decode_failure: None,
            }];
        }
    };
    cfg.scheme
        .kinds()
        .into_iter()
        .map(|kind| match formula(kind, &cfg) {
            Err(_) => Row {
                text: invalid_row(kind.name(), settings),
                decode_failure: None,
            },
            Ok(p) => {
                let mut failure = None;
                let measured = if simulate_points && cfg.scheme != SchemeChoice::FormulasOnly {
                    build_scheme(kind, &cfg, &p).ok().and_then(|scheme| {
                        let demand = cfg.demand.build(cfg.users, cfg.files, cfg.seed).ok()?;
                        let (report, _) = run(scheme.as_ref(), &demand).ok()?;
                        failure = report.first_failure().map(|e| format!("{e}"));
                        Some(exact(&report.measured_delay))
                    })
                } else {
                    None
                };
                Row {
                    text: csv_row(&p, measured.as_deref()),
                    decode_failure: failure,
                }
            }
        })
        .collect()
}

/// Evaluates every grid point and renders the CSV in grid order.
pub fn sweep_csv(
    base: &Settings,
    simulate_points: bool,
    env_seed: Option<&str>,
) -> Result<(String, Option<String>), CliError> {
    if base.get("scheme").is_none() {
        return Err(CliError::Invalid("missing required setting scheme".into()));
    }
    let axes = base
        .axes
        .iter()
        .map(|a| Axis::parse(a))
        .collect::<Result<Vec<_>, _>>()?;
    let points = grid(base, &axes)?;
    let jobs: usize = match base.get("jobs") {
        None => 1,
        Some(j) => j
            .parse()
            .ok()
            .filter(|&j| j > 0)
            .ok_or_else(|| CliError::Invalid(format!("jobs={j:?}")))?,
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| CliError::Invalid(format!("cannot start {jobs} workers: {e}")))?;
    let rows: Vec<Vec<Row>> = pool.install(|| {
        points
            .par_iter()
            .map(|p| evaluate(p, simulate_points, env_seed))
            .collect()
    });
    let mut csv = String::from(CSV_HEADER);
    csv.push('\n');
    let mut failure = None;
    for row in rows.into_iter().flatten() {
        csv.push_str(&row.text);
        csv.push('\n');
        failure = failure.or(row.decode_failure);
    }
    Ok((csv, failure))
}

pub fn write_output(text: &str, out: Option<&str>) -> Result<(), CliError> {
    match out {
        Some(path) => std::fs::write(path, text)?,
        None => std::io::stdout().lock().write_all(text.as_bytes())?,
    }
    Ok(())
}
