//! Acceptance criteria; prints one PASS/FAIL line each and exits non-zero on any failure.

use std::f64::consts::PI;
use std::process::ExitCode;
use std::time::Instant;

use openqmap::classical::words::{admissible_words, comparability_ratio};
use openqmap::classical::{equilateral_centers, local_word_jacobian, OpenMapSystem, SymbolicWord, TrappedPool};
use openqmap::fup::{cantor_fup_experiment, fit_fup_exponent};
use openqmap::linalg::unitarity_defect;
use openqmap::quantum::{
    box_uncertainty_norm, eigen_summary, model_open_map, model_power, open_baker_operator, power_norms,
    semiclassical_fourier, GridSpec, ModelCutoff,
};
use openqmap::runner::{run, ExperimentConfig, RunOptions};
use openqmap::splitting::{Direction, FrameField, SplitCutoff, SplitGrid, SplittingProblem};
use openqmap::thermo::dimension::box_dimension_base;
use openqmap::thermo::{
    box_dimension, check_porosity, dimension_from_porosity, least_squares, monte_carlo_escape, numerology,
    porosity_from_dimension, unstable_trace, BoxInput, IntervalSet, PorosityScan, PressureSolver, TraceConfig,
};
use openqmap::PhasePoint;

struct Report {
    lines: Vec<(usize, bool, String)>,
}

impl Report {
    fn record(&mut self, id: usize, pass: bool, detail: String) {
        println!("criterion {id:>2}: {} | {detail}", if pass { "PASS" } else { "FAIL" });
        self.lines.push((id, pass, detail));
    }

    fn error(&mut self, id: usize, err: impl std::fmt::Display) {
        self.record(id, false, format!("error: {err}"));
    }
}

type R<T> = Result<T, Box<dyn std::error::Error>>;

fn model_sweep(rep: &mut Report) -> R<()> {
    let t0 = Instant::now();
    let mut pts = Vec::new();
    let mut radii = Vec::new();
    let mut norms = Vec::new();
    for k in 8..=14 {
        let h = 2f64.powi(-k);
        let m = model_open_map(h, &ModelCutoff::default())?;
        let p = model_power(h);
        let sigma = m.domain.reflection();
        let v = power_norms(&m.entries, &[p], Some(&sigma))?[0].1;
        pts.push((h.ln(), v.ln()));
        norms.push(format!("{v:.4}"));
        if k >= 10 {
            radii.push(eigen_summary(&m.entries, Some(&sigma))?.0);
        }
    }
    let slope = least_squares(&pts).0;
    let secs = t0.elapsed().as_secs_f64();
    rep.record(
        1,
        slope >= 0.20 && secs <= 600.0,
        format!("slope {slope:.4} >= 0.20, norms [{}], {secs:.0} s <= 600 s", norms.join(", ")),
    );
    let hi = radii.iter().cloned().fold(f64::MIN, f64::max);
    let lo = radii.iter().cloned().fold(f64::MAX, f64::min);
    let shown: Vec<String> = radii.iter().map(|r| format!("{r:.4}")).collect();
    rep.record(
        2,
        hi <= 0.95 && hi - lo <= 0.05,
        format!("rho [{}] <= 0.95, variation {:.4} <= 0.05", shown.join(", "), hi - lo),
    );
    Ok(())
}

fn uncertainty_boxes(rep: &mut Report) -> R<()> {
    let mut pts = Vec::new();
    for k in 8..=14 {
        let h = 2f64.powi(-k);
        pts.push((h.ln(), box_uncertainty_norm(h, 32)?.ln()));
    }
    let slope = least_squares(&pts).0;
    rep.record(3, (0.24..=0.30).contains(&slope), format!("slope {slope:.5} in [0.24, 0.30]"));
    Ok(())
}

fn baker_gap(rep: &mut Report) -> R<()> {
    let t0 = Instant::now();
    let mut radii = Vec::new();
    for k in 3..=7 {
        let b = open_baker_operator(3usize.pow(k), 3, &[0, 2])?;
        radii.push(eigen_summary(&b.entries, Some(&b.domain.reflection()))?.0);
    }
    let worst = radii.iter().cloned().fold(0.0, f64::max);
    let margin = 1.0 - worst;
    let secs = t0.elapsed().as_secs_f64();
    let shown: Vec<String> = radii.iter().map(|r| format!("{r:.4}")).collect();
    rep.record(
        4,
        margin >= 0.02 && secs <= 300.0,
        format!("rho [{}], margin {margin:.4} >= 0.02, {secs:.0} s <= 300 s", shown.join(", ")),
    );
    Ok(())
}

fn cantor_fup(rep: &mut Report) -> R<()> {
    let exp = cantor_fup_experiment(3, &[0, 2], &[3, 4, 5, 6, 7])?;
    let fit = fit_fup_exponent(&exp.points)?;
    let below = exp.points.iter().filter(|p| p.k >= 4).all(|p| p.norm < p.trivial_bound);
    let shown: Vec<String> = exp.points.iter().map(|p| format!("{:.4}", p.norm)).collect();
    rep.record(
        5,
        fit.beta > 0.01 && below,
        format!(
            "beta {:.4} (band {:.4}) > 0.01, norms [{}] below trivial bound for k >= 4: {below}",
            fit.beta,
            fit.band,
            shown.join(", ")
        ),
    );
    Ok(())
}

fn bowen_roots(rep: &mut Report) -> R<()> {
    let baker = OpenMapSystem::open_baker(3, &[0, 2])?;
    let s0 = PressureSolver::new(&baker, 12)?.bowen_root(1e-12)?.delta;
    let exact = 2f64.ln() / 3f64.ln();
    let sys = OpenMapSystem::three_disk(equilateral_centers(6.0), vec![1.0; 3])?;
    let root = PressureSolver::new(&sys, 10)?.bowen_root(1e-10)?.delta;
    let trace = unstable_trace(&sys, &TraceConfig { depth: 10, ..Default::default() })?;
    let boxes = box_dimension(&BoxInput::Intervals(&trace), 10.0 * trace.max_width(), 0.1)?.delta;
    rep.record(
        6,
        (s0 - exact).abs() <= 1e-3 && (root - boxes).abs() <= 5e-2,
        format!(
            "baker s0 {s0:.6} vs {exact:.6} (err {:.1e} <= 1e-3); 3-disk root {root:.4} vs box {boxes:.4} (diff {:.4} <= 5e-2)",
            (s0 - exact).abs(),
            (root - boxes).abs()
        ),
    );
    Ok(())
}

fn escape_rate(rep: &mut Report) -> R<()> {
    let baker = OpenMapSystem::open_baker(3, &[0, 2])?;
    let gamma = PressureSolver::new(&baker, 12)?.classical_decay_rate();
    let exact = 1.5f64.ln();
    let mc = monte_carlo_escape(&baker, 1_000_000, 12, 7)?.rate;
    let rel = (mc - gamma).abs() / gamma;
    rep.record(
        7,
        (gamma - exact).abs() <= 1e-3 && rel <= 0.10,
        format!("-P(1) {gamma:.6} vs log 3/2 {exact:.6}; Monte-Carlo {mc:.4} (rel {rel:.3} <= 0.10)"),
    );
    Ok(())
}

fn graph_transform(rep: &mut Report) -> R<()> {
    let sys = OpenMapSystem::cat_map([[2, 1], [1, 1]])?;
    let golden = (5f64.sqrt() - 1.0) / 2.0;
    let frames = FrameField::power_iteration(&sys, &PhasePoint::new(0.0, 0.0), 3)?;
    let prob = SplittingProblem::new(&sys, SplitGrid::for_system(&sys, 32), frames, SplitCutoff::One, Direction::Unstable)?;
    let (lam, solve) = prob.solve_slope(1e-14, 60)?;
    let mut slope_err = 0.0f64;
    for k in 0..prob.grid.len() {
        let p = prob.grid.node(k);
        let v = prob.direction_at(lam.values[k], &p).ok_or("direction undefined")?;
        slope_err = slope_err.max((v[1] / v[0] - golden).abs());
    }
    let worst_factor = solve.factors.iter().cloned().fold(0.0, f64::max);

    let n = 64;
    let frames = FrameField::power_iteration(&sys, &PhasePoint::new(0.0, 0.0), 3)?;
    let fine = SplittingProblem::new(&sys, SplitGrid::for_system(&sys, n), frames, SplitCutoff::One, Direction::Unstable)?;
    let field = |p: &PhasePoint| 0.05 * (2.0 * PI * p.x).sin() * (2.0 * PI * p.xi).cos() + 0.01;
    let dfield = |p: &PhasePoint| {
        [
            0.1 * PI * (2.0 * PI * p.x).cos() * (2.0 * PI * p.xi).cos(),
            -0.1 * PI * (2.0 * PI * p.x).sin() * (2.0 * PI * p.xi).sin(),
        ]
    };
    let g = 1.0 / n as f64;
    let mut fiber_err = 0.0f64;
    for k in 0..fine.grid.len() {
        let p = fine.grid.node(k);
        let lhs = fine.fiber_at(&field, &dfield, &p);
        let t = |q: PhasePoint| fine.transform_at(&field, &q);
        let mut d = [0.0; 2];
        for (a, slot) in d.iter_mut().enumerate() {
            let mut e = [0.0; 2];
            e[a] = g;
            let f = |s: f64| t(p.add([s * e[0], s * e[1]]));
            *slot = (-f(2.0) + 8.0 * f(1.0) - 8.0 * f(-1.0) + f(-2.0)) / (12.0 * g);
        }
        fiber_err = fiber_err.max((lhs[0] - d[0]).hypot(lhs[1] - d[1]));
    }
    let bound = 10.0 * g * g;
    rep.record(
        8,
        slope_err <= 1e-8 && solve.iterations <= 60 && worst_factor <= solve.kappa + 0.02 && fiber_err <= bound,
        format!(
            "slope err {slope_err:.1e} <= 1e-8 in {} iterations; factor {worst_factor:.4} <= kappa {:.4} + 0.02; fiber {fiber_err:.2e} <= {bound:.2e}",
            solve.iterations, solve.kappa
        ),
    );
    Ok(())
}

fn hyperbolicity(rep: &mut Report) -> R<()> {
    let sys = OpenMapSystem::three_disk(equilateral_centers(6.0), vec![1.0; 3])?;
    let pool = TrappedPool::build(&sys, 9)?;
    let mut worst = 1.0f64;
    for n in 1..=8 {
        for w in admissible_words(&sys, n) {
            if let Some(c) = comparability_ratio(&pool, &w) {
                worst = worst.max(c);
            }
        }
    }
    let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
    for n1 in 1..=4 {
        for n2 in 1..=4 {
            for w in admissible_words(&sys, n1 + n2) {
                let a = SymbolicWord(w.0[..n1].to_vec());
                let b = SymbolicWord(w.0[n1..].to_vec());
                let j = |x: &SymbolicWord| local_word_jacobian(&sys, &pool, x).map(|p| p.j_minus);
                let r = j(&w)? / (j(&a)? * j(&b)?);
                lo = lo.min(r);
                hi = hi.max(r);
            }
        }
    }
    rep.record(
        9,
        worst <= 10.0 && lo >= 0.1 && hi <= 10.0,
        format!("comparability {worst:.3} <= 10; multiplicativity [{lo:.3}, {hi:.3}] in [0.1, 10]"),
    );
    Ok(())
}

fn porosity_round_trips(rep: &mut Report) -> R<()> {
    let cantor = IntervalSet::cantor(3, &[0, 2], 10);
    let scan = PorosityScan::new(1.0 / 3.0, 3f64.powi(-8), 1.0).with_ratio(3.0);
    let certified = check_porosity(&cantor, &scan)?.is_certified();
    let (_, delta) = dimension_from_porosity(1.0 / 3.0, 1.0, 1.0)?;
    let target = 5f64.ln() / 6f64.ln();
    let fine = IntervalSet::cantor(3, &[0, 2], 12);
    let boxes = box_dimension_base(&BoxInput::Intervals(&fine), 3f64.powi(-10), 1.0 / 3.0, 3.0)?;
    let nu = porosity_from_dimension(boxes.constant_c, boxes.delta, boxes.epsilon0)?;
    let again = check_porosity(&cantor, &PorosityScan::new(nu, 3f64.powi(-8), 1.0))?.is_certified();
    rep.record(
        10,
        certified
            && (delta - target).abs() <= 1e-12
            && (boxes.delta - 0.631).abs() <= 0.02
            && boxes.delta <= delta
            && again,
        format!(
            "1/3-porous on 3^-8..1: {certified}; delta(1/3) {delta:.12} vs log5/log6; box slope {:.4} (0.631 +- 0.02, <= bound); nu {nu:.3e} re-certified: {again}",
            boxes.delta
        ),
    );
    Ok(())
}

fn numerology_grid(rep: &mut Report) -> R<()> {
    let mut failures = 0;
    let mut total = 0;
    for i in 0..10 {
        let l0 = 0.1 * 1.5f64.powi(i);
        for j in 0..10 {
            let l1 = l0 * (1.0 + 0.8 * j as f64);
            for k in 0..10 {
                let beta = 0.05 * 1.8f64.powi(k);
                total += 1;
                if !numerology(l0, l1, beta)?.all_hold() {
                    failures += 1;
                }
            }
        }
    }
    rep.record(11, failures == 0 && total == 1000, format!("{failures} failures over {total} samples"));
    Ok(())
}

fn unitarity_and_determinism(rep: &mut Report) -> R<()> {
    let mut worst = 0.0f64;
    for n in [64usize, 256, 1024] {
        worst = worst.max(unitarity_defect(&semiclassical_fourier(&GridSpec::torus(n)?)?.entries)?);
        let h = 1.0 / (2.0 * PI * n as f64);
        worst = worst.max(unitarity_defect(&semiclassical_fourier(&GridSpec::interval(n, h)?)?.entries)?);
    }
    for k in 2..=6 {
        let b = open_baker_operator(3usize.pow(k), 3, &[0, 1, 2])?;
        worst = worst.max(unitarity_defect(&b.entries)?);
    }
    let cfg = ExperimentConfig::from_toml(
        r#"
kind = "classical"
seed = 2024
[system]
type = "three_disk"
separation = 6.0
radius = 1.0
[sweep]
depth = 6
samples = 50000
n_max = 6
"#,
    )?;
    let mut identical = true;
    let dirs = [tempfile::tempdir()?, tempfile::tempdir()?];
    let mut outputs = Vec::new();
    for (i, d) in dirs.iter().enumerate() {
        let opts = RunOptions {
            out_dir: Some(d.path().to_path_buf()),
            workers: Some(i + 1),
            ..Default::default()
        };
        outputs = run(&cfg, &opts)?.outputs;
    }
    let mut compared = 0;
    for name in outputs.iter().filter(|n| n.ends_with(".csv")) {
        let a = std::fs::read(dirs[0].path().join(name))?;
        let b = std::fs::read(dirs[1].path().join(name))?;
        identical &= a == b;
        compared += 1;
    }
    rep.record(
        12,
        worst <= 1e-8 && identical && compared > 0,
        format!("max unitarity defect {worst:.2e} <= 1e-8; {compared} CSVs bit-identical across reruns: {identical}"),
    );
    Ok(())
}

fn main() -> ExitCode {
    let mut rep = Report { lines: Vec::new() };
    let t0 = Instant::now();
    if let Err(e) = model_sweep(&mut rep) {
        rep.error(1, &e);
        rep.error(2, &e);
    }
    let steps: [(usize, fn(&mut Report) -> R<()>); 10] = [
        (3, uncertainty_boxes),
        (4, baker_gap),
        (5, cantor_fup),
        (6, bowen_roots),
        (7, escape_rate),
        (8, graph_transform),
        (9, hyperbolicity),
        (10, porosity_round_trips),
        (11, numerology_grid),
        (12, unitarity_and_determinism),
    ];
    for (id, step) in steps {
        if let Err(e) = step(&mut rep) {
            rep.error(id, e);
        }
    }
    let failed: Vec<usize> = rep.lines.iter().filter(|l| !l.1).map(|l| l.0).collect();
    println!(
        "acceptance: {} of {} criteria passed in {:.0} s",
        rep.lines.len() - failed.len(),
        rep.lines.len(),
        t0.elapsed().as_secs_f64()
    );
    if failed.is_empty() {
        ExitCode::SUCCESS
    } else {
        println!("failed criteria: {failed:?}");
        ExitCode::FAILURE
    }
}
