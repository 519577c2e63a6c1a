//! The eight experiment kinds.

use rayon::prelude::*;
use serde_json::json;

use super::config::{ExperimentConfig, ExperimentKind, FrameChoice, SystemSpec};
use crate::phase::PhasePoint;
use super::{f, Outcome, Table};
use crate::classical::{OpenMapSystem, TrappedPool};
use crate::error::{LabError, Result};
use crate::fup::{fit_fup_exponent, FupExperiment};
use crate::quantum::{eigen_summary, model_open_map, model_power, open_baker_operator, power_norms, DenseOperator};
use crate::splitting::{FrameField, SplitCutoff, SplitGrid, SplittingProblem, DEFAULT_GRID};
use crate::thermo::{
    box_dimension, check_porosity, least_squares, monte_carlo_escape, numerology, unstable_trace, BoxInput,
    IntervalSet, PorosityOutcome, PorosityScan, PressureSolver, TraceConfig,
};

pub(crate) fn execute(kind: ExperimentKind, cfg: &ExperimentConfig) -> Result<Outcome> {
    match kind {
        ExperimentKind::Classical => classical(cfg),
        ExperimentKind::Splitting => splitting(cfg),
        ExperimentKind::Pressure => pressure(cfg),
        ExperimentKind::Dimension => dimension(cfg),
        ExperimentKind::Porosity => porosity(cfg),
        ExperimentKind::Spectrum => spectrum(cfg),
        ExperimentKind::Fup => fup(cfg),
        ExperimentKind::Numerology => numerology_run(cfg),
    }
}

fn system(cfg: &ExperimentConfig) -> Result<(OpenMapSystem, &SystemSpec)> {
    let spec = cfg
        .system
        .as_ref()
        .ok_or_else(|| LabError::Config("missing section `system`".into()))?;
    Ok((spec.build()?, spec))
}

fn classical(cfg: &ExperimentConfig) -> Result<Outcome> {
    let (sys, _) = system(cfg)?;
    let depth = cfg.sweep.depth.unwrap_or(8);
    let mut out = Outcome::default();
    let mut pool_rows = Table::new("pool", &["index", "x", "xi", "depth", "log_ju"]);
    let mut pool_len = 0;
    if sys.meta.has_hole {
        let pool = TrappedPool::build(&sys, depth)?;
        pool_len = pool.len();
        for (i, p) in pool.points.iter().enumerate() {
            let lj = pool.log_ju[i].last().copied().unwrap_or(0.0);
            pool_rows.push(vec![i.to_string(), f(p.x), f(p.xi), (pool.log_ju[i].len() - 1).to_string(), f(lj)]);
        }
    } else {
        out.warnings.push("closed system: trapped set is the whole phase space, pool skipped".into());
    }
    let samples = cfg.sweep.samples.unwrap_or(100_000);
    let m_max = cfg.sweep.n_max.unwrap_or(12);
    let esc = monte_carlo_escape(&sys, samples, m_max, cfg.seed)?;
    let mut esc_rows = Table::new("escape", &["m", "surviving_fraction"]);
    for (m, fr) in &esc.fractions {
        esc_rows.push(vec![m.to_string(), f(*fr)]);
    }
    out.reports.push((
        "summary".into(),
        json!({
            "system": sys.meta.kind,
            "lambda_bounds": [sys.lambda_bounds.0, sys.lambda_bounds.1],
            "pool_depth": depth,
            "pool_points": pool_len,
            "escape_rate": esc.rate,
            "escape_samples": esc.samples,
            "warnings": sys.meta.warnings,
        }),
    ));
    out.tables.push(pool_rows);
    out.tables.push(esc_rows);
    Ok(out)
}

fn splitting(cfg: &ExperimentConfig) -> Result<Outcome> {
    let (sys, _) = system(cfg)?;
    let n = cfg.sweep.grid.unwrap_or(DEFAULT_GRID);
    let samples = if sys.meta.has_hole {
        TrappedPool::build(&sys, cfg.sweep.depth.unwrap_or(6))?.points
    } else {
        Vec::new()
    };
    let cutoff = SplitCutoff::default_for(&sys, &samples);
    let spec = cfg.splitting.clone().unwrap_or_default();
    let grid = SplitGrid::for_system(&sys, n);
    let frames = match spec.frames {
        FrameChoice::Canonical => FrameField::canonical(),
        FrameChoice::PowerIteration => {
            let anchor = samples.first().copied().unwrap_or(PhasePoint::new(0.0, 0.0));
            FrameField::power_iteration(&sys, &anchor, spec.frame_depth)?
        }
        FrameChoice::Trapped => FrameField::from_trapped_samples(&sys, grid.clone(), &samples, spec.frame_depth)?,
    };
    let prob = SplittingProblem::new(
        &sys,
        grid,
        frames,
        cutoff,
        crate::splitting::Direction::Unstable,
    )?;
    let (lam, report) = prob.solve_slope(cfg.tolerance.slope, cfg.tolerance.max_iter)?;
    let mut field = Table::new("slope", &["x", "xi", "lambda", "chi"]);
    for (k, (v, c)) in lam.values.iter().zip(&lam.cutoff).enumerate() {
        let p = lam.grid.node(k);
        field.push(vec![f(p.x), f(p.xi), f(*v), f(*c)]);
    }
    let mut iters = Table::new("iterations", &["iteration", "factor"]);
    for (i, fac) in report.factors.iter().enumerate() {
        iters.push(vec![(i + 1).to_string(), f(*fac)]);
    }
    Ok(Outcome {
        tables: vec![field, iters],
        reports: vec![(
            "summary".into(),
            json!({ "solve": report, "eta": prob.eta, "grid": n }),
        )],
        warnings: Vec::new(),
    })
}

fn pressure(cfg: &ExperimentConfig) -> Result<Outcome> {
    let (sys, _) = system(cfg)?;
    let n_max = cfg.sweep.n_max.unwrap_or(10);
    let s_values = cfg
        .sweep
        .s
        .clone()
        .unwrap_or_else(|| (0..=10).map(|i| i as f64 / 10.0).collect());
    let solver = PressureSolver::new(&sys, n_max)?;
    let curve = solver.curve(&s_values)?;
    let mut seq = Table::new("sequence", &["s", "n", "estimate", "ratio"]);
    let mut lim = Table::new("pressure", &["s", "extrapolated", "two_point"]);
    for e in &curve.entries {
        for (n, est) in &e.estimates {
            let ratio = e.ratios.iter().find(|r| r.0 == *n).map_or(String::new(), |r| f(r.1));
            seq.push(vec![f(e.s), n.to_string(), f(*est), ratio]);
        }
        lim.push(vec![f(e.s), f(e.extrapolated), f(e.two_point)]);
    }
    let mut out = Outcome::default();
    let root = match solver.bowen_root(cfg.tolerance.root) {
        Ok(r) => Some(r),
        Err(e @ LabError::NoGapRegime { .. }) => {
            out.warnings.push(format!("{e}; (Fractal) fails"));
            None
        }
        Err(e) => return Err(e),
    };
    out.reports.push((
        "summary".into(),
        json!({
            "n_max": n_max,
            "classical_decay_rate": solver.classical_decay_rate(),
            "bowen_root": root,
        }),
    ));
    out.tables.push(seq);
    out.tables.push(lim);
    Ok(out)
}

/// Interval set carrying the fractal structure of a baker or disk system.
fn system_set(sys: &OpenMapSystem, spec: &SystemSpec, depth: Option<usize>) -> Result<IntervalSet> {
    match spec {
        SystemSpec::Baker { .. } => {
            let (base, kept) = sys.baker_branches()?;
            Ok(IntervalSet::cantor(base, &kept, depth.unwrap_or(10)))
        }
        _ if spec.is_disks() => {
            let mut tc = TraceConfig::default();
            if let Some(d) = depth {
                tc.depth = d;
            }
            unstable_trace(sys, &tc)
        }
        _ => Err(LabError::Config("needs a baker or a disk system".into())),
    }
}

fn dimension(cfg: &ExperimentConfig) -> Result<Outcome> {
    let (sys, spec) = system(cfg)?;
    let set = system_set(&sys, spec, cfg.sweep.depth)?;
    let [lo, hi] = cfg.sweep.scales.unwrap_or([1e-4, 1e-1]);
    let rep = box_dimension(&BoxInput::Intervals(&set), lo, hi)?;
    let mut boxes = Table::new("boxes", &["eps", "count"]);
    for (e, c) in rep.scales.iter().zip(&rep.counts) {
        boxes.push(vec![f(*e), c.to_string()]);
    }
    let root = match cfg.sweep.n_max {
        Some(n) => Some(PressureSolver::new(&sys, n)?.bowen_root(cfg.tolerance.root)?),
        None => None,
    };
    Ok(Outcome {
        tables: vec![boxes],
        reports: vec![(
            "summary".into(),
            json!({ "box_count": rep, "pressure_root": root, "intervals": set.len() }),
        )],
        warnings: Vec::new(),
    })
}

fn porosity(cfg: &ExperimentConfig) -> Result<Outcome> {
    let p = cfg
        .porosity
        .as_ref()
        .ok_or_else(|| LabError::Config("missing section `porosity`".into()))?;
    let set = match &p.set {
        Some(s) => s.interval_set()?,
        None => {
            let (sys, spec) = system(cfg)?;
            system_set(&sys, spec, cfg.sweep.depth)?
        }
    };
    let [lo, hi] = cfg
        .sweep
        .scales
        .ok_or_else(|| LabError::Config("missing key `sweep.scales`".into()))?;
    let scan = PorosityScan::new(p.nu, lo, hi).with_ratio(p.scale_ratio);
    let outcome = check_porosity(&set, &scan)?;
    let mut wit = Table::new("witnesses", &["scale", "lo", "hi", "gap_lo", "gap_hi"]);
    if let PorosityOutcome::Certified(c) = &outcome {
        for w in &c.witness_gaps {
            wit.push(vec![f(w.scale), f(w.interval.0), f(w.interval.1), f(w.gap.0), f(w.gap.1)]);
        }
    }
    let mut out = Outcome::default();
    if let PorosityOutcome::Refuted(r) = &outcome {
        out.warnings.push(format!(
            "not {}-porous at scale {} on [{}, {}]",
            r.nu, r.scale, r.interval.0, r.interval.1
        ));
    }
    out.tables.push(wit);
    out.reports.push(("outcome".into(), serde_json::to_value(&outcome)?));
    Ok(out)
}

struct SpectrumPoint {
    h: f64,
    n: usize,
    rho: f64,
    norms: Vec<(usize, f64)>,
    defect: Option<f64>,
}

fn spectrum_point(op: &DenseOperator, h: f64, powers: &[usize], closed: bool) -> Result<SpectrumPoint> {
    let sigma = op.domain.reflection();
    let (rho, _, _, _) = eigen_summary(&op.entries, Some(&sigma))?;
    let norms = power_norms(&op.entries, powers, Some(&sigma))?;
    let defect = if closed {
        Some(crate::linalg::unitarity_defect(&op.entries)?)
    } else {
        None
    };
    Ok(SpectrumPoint {
        h,
        n: op.domain.n,
        rho,
        norms,
        defect,
    })
}

fn spectrum(cfg: &ExperimentConfig) -> Result<Outcome> {
    let spec = cfg
        .system
        .as_ref()
        .ok_or_else(|| LabError::Config("missing section `system`".into()))?;
    let points: Vec<SpectrumPoint> = match spec {
        SystemSpec::Model { cutoff } => {
            let cutoff = cutoff.unwrap_or_default();
            let hs = cfg.sweep.h.clone().unwrap_or_default();
            hs.par_iter()
                .map(|&h| {
                    let op = model_open_map(h, &cutoff)?;
                    let powers = cfg.sweep.powers.clone().unwrap_or_else(|| vec![model_power(h)]);
                    spectrum_point(&op, h, &powers, false)
                })
                .collect::<Result<_>>()?
        }
        SystemSpec::Baker { base, kept, shear } => {
            if *shear != 0.0 {
                return Err(LabError::Config("only the unsheared baker is quantized".into()));
            }
            let ns: Vec<usize> = match (&cfg.sweep.n, &cfg.sweep.k) {
                (Some(n), _) => n.clone(),
                (None, Some(k)) => k.iter().map(|&k| base.pow(k as u32)).collect(),
                (None, None) => return Err(LabError::Config("missing key `sweep.n`".into())),
            };
            let mut distinct = kept.clone();
            distinct.sort_unstable();
            distinct.dedup();
            let closed = distinct.len() == *base;
            let powers = cfg.sweep.powers.clone().unwrap_or_else(|| vec![1]);
            ns.par_iter()
                .map(|&n| {
                    let op = open_baker_operator(n, *base, kept)?;
                    let h = 1.0 / (2.0 * std::f64::consts::PI * n as f64);
                    spectrum_point(&op, h, &powers, closed)
                })
                .collect::<Result<_>>()?
        }
        _ => return Err(LabError::Config("spectrum needs the model or a baker".into())),
    };
    let fit_pts: Vec<(f64, f64)> = points
        .iter()
        .filter_map(|p| p.norms.first().filter(|v| v.1 > 0.0).map(|v| (p.h.ln(), v.1.ln())))
        .collect();
    let slope = (fit_pts.len() >= 2).then(|| least_squares(&fit_pts).0);
    let mut table = Table::new(
        "spectrum",
        &["h", "n", "spectral_radius", "power", "power_norm", "unitarity_defect", "fitted_slope"],
    );
    for p in &points {
        for (k, v) in &p.norms {
            table.push(vec![
                f(p.h),
                p.n.to_string(),
                f(p.rho),
                k.to_string(),
                f(*v),
                p.defect.map_or(String::new(), f),
                slope.map_or(String::new(), f),
            ]);
        }
    }
    let radii: Vec<f64> = points.iter().map(|p| p.rho).collect();
    Ok(Outcome {
        tables: vec![table],
        reports: vec![(
            "summary".into(),
            json!({ "spectral_radii": radii, "fitted_slope": slope }),
        )],
        warnings: Vec::new(),
    })
}

fn fup(cfg: &ExperimentConfig) -> Result<Outcome> {
    let spec = cfg
        .fup
        .as_ref()
        .ok_or_else(|| LabError::Config("missing section `fup`".into()))?;
    let ks = cfg
        .sweep
        .k
        .clone()
        .ok_or_else(|| LabError::Config("missing key `sweep.k`".into()))?;
    let points = ks
        .par_iter()
        .map(|&k| {
            let n = spec.base.pow(k as u32);
            let exp = FupExperiment::run(spec.minus.at_depth(k), spec.plus.at_depth(k), &[(k, n)])?;
            Ok(exp.points[0])
        })
        .collect::<Result<Vec<_>>>()?;
    let mut out = Outcome::default();
    let fit = match fit_fup_exponent(&points) {
        Ok(fit) => Some(fit),
        Err(e @ LabError::InsufficientScales { .. }) => {
            out.warnings.push(format!("no exponent fit: {e}"));
            None
        }
        Err(e) => return Err(e),
    };
    let mut table = Table::new(
        "fup",
        &["k", "n", "h", "size_minus", "size_plus", "norm", "trivial_bound", "beta", "beta_band"],
    );
    for p in &points {
        table.push(vec![
            p.k.to_string(),
            p.n.to_string(),
            f(p.h),
            p.size_minus.to_string(),
            p.size_plus.to_string(),
            f(p.norm),
            f(p.trivial_bound),
            fit.map_or(String::new(), |v| f(v.beta)),
            fit.map_or(String::new(), |v| f(v.band)),
        ]);
    }
    out.tables.push(table);
    out.reports.push(("summary".into(), json!({ "fit": fit, "points": points })));
    Ok(out)
}

fn numerology_run(cfg: &ExperimentConfig) -> Result<Outcome> {
    let spec = cfg
        .numerology
        .as_ref()
        .ok_or_else(|| LabError::Config("missing section `numerology`".into()))?;
    let prof = numerology(spec.lambda0, spec.lambda1, spec.beta)?;
    let mut table = Table::new(
        "numerology",
        &["lambda0", "lambda1", "beta", "frak_b", "delta0", "tau", "delta2", "check_1", "check_2", "check_3"],
    );
    table.push(vec![
        f(prof.lambda0),
        f(prof.lambda1),
        f(prof.beta),
        f(prof.frak_b),
        f(prof.delta0),
        f(prof.tau),
        f(prof.delta2),
        prof.checks[0].to_string(),
        prof.checks[1].to_string(),
        prof.checks[2].to_string(),
    ]);
    let mut times = Table::new("times", &["h", "n0", "n1"]);
    for &h in &spec.h {
        times.push(vec![f(h), prof.n0(h).to_string(), prof.n1(h).to_string()]);
    }
    let mut out = Outcome::default();
    if !prof.all_hold() {
        out.warnings.push(format!("numerology constraints fail: {:?}", prof.checks));
    }
    let mut report = serde_json::to_value(&prof)?;
    if let serde_json::Value::Object(m) = &mut report {
        m.insert("all_hold".into(), prof.all_hold().into());
    }
    out.reports.push(("profile".into(), report));
    out.tables.push(table);
    if !spec.h.is_empty() {
        out.tables.push(times);
    }
    Ok(out)
}
