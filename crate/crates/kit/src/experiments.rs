//! Scenario-driven experiments. Each experiment computes a report first and
//! writes it afterwards, so tests can inspect results without touching disk.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use richards_core::jacobian::assemble;
use richards_core::newton::{run_simulation, solve_timestep, NewtonError, NewtonState, NewtonStats, Observation};
use richards_core::precond::{PrecondKind, PrecondOptions, PrecondTarget, PreconditionerFactory};
use richards_core::spectral::{
    distribution_distance, eigenvalues_tridiagonal, matched_quantiles, sample_symbol, zero_distribution_check,
    EigDistribution, ZeroDistribution,
};
use richards_core::{AverageKind, RichardsProblem, SparseMatrix};

use crate::config::{parse_average, ExperimentKind, Scenario};
use crate::output::{num, Table};
use crate::KitError;

/// Outcome of one simulation run.
#[derive(Debug, Clone)]
pub struct SimulationReport {
    pub stats: NewtonStats,
    pub final_state: Vec<f64>,
    /// `None` if every time step converged.
    pub failure: Option<String>,
    pub seconds: f64,
}

impl SimulationReport {
    pub fn converged(&self) -> bool {
        self.failure.is_none()
    }
}

/// Runs every time step of `problem`; solver failures are recorded, not
/// propagated.
pub fn simulate(scenario: &Scenario, problem: &RichardsProblem, options: PrecondOptions) -> SimulationReport {
    simulate_observed(scenario, problem, options, &mut |_: &Observation<'_>| {})
}

pub fn simulate_observed<O>(
    scenario: &Scenario,
    problem: &RichardsProblem,
    options: PrecondOptions,
    observer: &mut O,
) -> SimulationReport
where
    O: FnMut(&Observation<'_>) + ?Sized,
{
    let start = Instant::now();
    let p0 = scenario.initial_field(problem);
    let cfg = scenario.newton_config(problem.n());
    let mut factory = PreconditionerFactory::new(options, problem.grid.interior());
    let (stats, final_state, failure) = match run_simulation(problem, &p0, &cfg, &mut factory, observer) {
        Ok((traj, stats)) => {
            let last = traj.last().map_or(p0, |f| f.0.clone());
            (stats, last, None)
        }
        Err(NewtonError::NoConvergence { time_step, stats }) => {
            (*stats, Vec::new(), Some(format!("no convergence in time step {time_step}")))
        }
        Err(e) => (NewtonStats::default(), Vec::new(), Some(e.to_string())),
    };
    SimulationReport { stats, final_state, failure, seconds: start.elapsed().as_secs_f64() }
}

pub fn iteration_table(stats: &NewtonStats) -> Table {
    let mut t = Table::new(&[
        "time_step",
        "iterate",
        "r",
        "rebuilt",
        "linear_iterations",
        "lambda",
        "backtracks",
        "goldstein",
        "residual_norm",
        "step_norm",
        "linear_residual",
    ]);
    for r in &stats.records {
        t.push([
            r.time_step.to_string(),
            r.iterate.to_string(),
            r.r.to_string(),
            r.rebuilt.map_or("", |x| x.name()).to_string(),
            r.linear_iterations.to_string(),
            num(r.lambda),
            r.backtracks.to_string(),
            r.goldstein.to_string(),
            num(r.residual_norm),
            num(r.step_norm),
            num(r.linear_residual),
        ]);
    }
    t
}

pub fn step_table(stats: &NewtonStats) -> Table {
    let mut t = Table::new(&["time_step", "nonlinear_iterations", "linear_iterations", "jacobians"]);
    for (i, s) in stats.steps.iter().enumerate() {
        t.push([i + 1, s.nonlinear_iterations, s.linear_iterations, s.jacobians]);
    }
    t
}

/// One recorded Jacobian and its comparison with the symbol.
#[derive(Debug, Clone)]
pub struct SpectrumRecord {
    pub average: AverageKind,
    pub time_step: usize,
    pub iterate: usize,
    pub n: usize,
    pub eigs: EigDistribution,
    pub symbol_quantiles: Vec<f64>,
    pub distance: f64,
    pub zero: ZeroDistribution,
}

#[derive(Debug, Clone)]
pub struct SpectrumReport {
    pub records: Vec<SpectrumRecord>,
    /// Requested pairs that the run never reached, per average.
    pub missing: Vec<(AverageKind, usize, usize)>,
    pub simulations: Vec<(AverageKind, SimulationReport)>,
}

/// Eigenvalues of `h_z^2 J` and the symbol at the same state.
pub fn analyse_state(problem: &RichardsProblem, p: &[f64], n_theta: usize) -> Result<(EigDistribution, Vec<f64>, f64), KitError> {
    let core = |e: richards_core::spectral::SpectralError| KitError::Core(e.to_string());
    let mut j = assemble(problem, p).map_err(|e| KitError::Core(e.to_string()))?.matrix;
    let hz = problem.grid.h[2];
    j.scale(hz * hz);
    let eigs = eigenvalues_tridiagonal(&j).map_err(core)?;
    let sym = sample_symbol(problem, p, n_theta).map_err(core)?;
    let distance = distribution_distance(&eigs, &sym).map_err(core)?;
    Ok((eigs, matched_quantiles(&sym, problem.n()), distance))
}

pub fn spectrum_1d(scenario: &Scenario, threads: usize) -> Result<SpectrumReport, KitError> {
    let sp = &scenario.spectrum;
    let averages: Vec<AverageKind> = sp.averages.iter().map(|a| parse_average(a).expect("validated")).collect();
    let per_average = parallel_map(&averages, threads, |&avg| -> Result<_, KitError> {
        let problem = scenario.problem_with(None, avg)?;
        let mut snaps: Vec<(usize, usize, Vec<f64>)> = Vec::new();
        let report = simulate_observed(scenario, &problem, scenario.precond_options(), &mut |o: &Observation<'_>| {
            if sp.pairs.contains(&[o.time_step, o.iterate]) {
                snaps.push((o.time_step, o.iterate, o.p.to_vec()));
            }
        });
        let mut records = Vec::new();
        let mut missing = Vec::new();
        for &[l, r] in &sp.pairs {
            let Some((_, _, p)) = snaps.iter().find(|s| s.0 == l && s.1 == r) else {
                missing.push((avg, l, r));
                continue;
            };
            let (eigs, symbol_quantiles, distance) = analyse_state(&problem, p, sp.n_theta)?;
            let zero = zero_distribution_check(&problem, p).map_err(|e| KitError::Core(e.to_string()))?;
            records.push(SpectrumRecord { average: avg, time_step: l, iterate: r, n: problem.grid.n[2], eigs, symbol_quantiles, distance, zero });
        }
        Ok((records, missing, (avg, report)))
    });
    let mut out = SpectrumReport { records: Vec::new(), missing: Vec::new(), simulations: Vec::new() };
    for item in per_average {
        let (records, missing, sim) = item?;
        out.records.extend(records);
        out.missing.extend(missing);
        out.simulations.push(sim);
    }
    Ok(out)
}

/// One row of a preconditioner sweep.
#[derive(Debug, Clone)]
pub struct SweepRow {
    pub precond: PrecondKind,
    pub nodes: [usize; 3],
    pub unknowns: usize,
    pub report: SimulationReport,
}

impl SweepRow {
    pub fn average_linear(&self) -> f64 {
        self.report.stats.average_linear_per_newton()
    }
}

pub fn precond_label(kind: PrecondKind) -> &'static str {
    match kind {
        PrecondKind::AmgMatching => "matching (approx.)",
        k => k.name(),
    }
}

pub fn precond_sweep(scenario: &Scenario, threads: usize) -> Result<Vec<SweepRow>, KitError> {
    let sizes: Vec<Option<usize>> =
        if scenario.sweep.sizes.is_empty() { vec![None] } else { scenario.sweep.sizes.iter().map(|&m| Some(m)).collect() };
    let kinds: Vec<PrecondKind> =
        scenario.sweep.preconds.iter().map(|k| PrecondKind::from_name(k).expect("validated")).collect();
    let jobs: Vec<(Option<usize>, PrecondKind)> =
        sizes.iter().flat_map(|&s| kinds.iter().map(move |&k| (s, k))).collect();
    parallel_map(&jobs, threads, |&(size, kind)| {
        let problem = scenario.problem_with(size, scenario.average())?;
        let mut options = scenario.precond_options_for(kind);
        if let (Some(_), Some(m)) = (size, scenario.sweep.subdomain_nodes) {
            let per_axis = |n: usize| ((n as f64 / m as f64).round() as usize).max(1);
            options.blocks = per_axis(problem.grid.n[0]) * per_axis(problem.grid.n[1]);
        }
        let report = simulate(scenario, &problem, options);
        Ok(SweepRow { precond: kind, nodes: problem.grid.n, unknowns: problem.n(), report })
    })
    .into_iter()
    .collect()
}

pub fn sweep_table(rows: &[SweepRow]) -> Table {
    let mut t = Table::new(&[
        "precond",
        "label",
        "nx",
        "ny",
        "nz",
        "unknowns",
        "nonlinear_iterations",
        "jacobians",
        "linear_iterations",
        "avg_linear_per_newton",
        "max_linear_residual",
        "converged",
    ]);
    for r in rows {
        let s = &r.report.stats;
        t.push([
            r.precond.name().to_string(),
            precond_label(r.precond).to_string(),
            r.nodes[0].to_string(),
            r.nodes[1].to_string(),
            r.nodes[2].to_string(),
            r.unknowns.to_string(),
            s.nonlinear_iterations.to_string(),
            s.jacobians.to_string(),
            s.linear_iterations.to_string(),
            format!("{:.3}", r.average_linear()),
            num(s.max_linear_residual()),
            r.report.converged().to_string(),
        ]);
    }
    t
}

/// AS on the diffusion matrix, AS on the full Jacobian, and no
/// preconditioner as a control.
#[derive(Debug, Clone)]
pub struct AsEquivalenceReport {
    pub diffusion: SimulationReport,
    pub jacobian: SimulationReport,
    pub identity: SimulationReport,
}

impl AsEquivalenceReport {
    pub fn table(&self) -> Table {
        let mut t = Table::new(&["time_step", "as_diffusion", "as_jacobian", "identity"]);
        let per_step = |r: &SimulationReport, i: usize| {
            r.stats.steps.get(i).filter(|s| s.nonlinear_iterations > 0).map_or(String::new(), |s| {
                format!("{:.3}", s.linear_iterations as f64 / s.nonlinear_iterations as f64)
            })
        };
        let steps = self.diffusion.stats.steps.len().max(self.jacobian.stats.steps.len());
        for i in 0..steps {
            t.push([(i + 1).to_string(), per_step(&self.diffusion, i), per_step(&self.jacobian, i), per_step(&self.identity, i)]);
        }
        t
    }
}

pub fn as_equivalence(scenario: &Scenario, threads: usize) -> Result<AsEquivalenceReport, KitError> {
    let problem = scenario.problem()?;
    let base = scenario.precond_options_for(PrecondKind::AdditiveSchwarz);
    let variants = [
        PrecondOptions { target: PrecondTarget::Diffusion, ..base },
        PrecondOptions { target: PrecondTarget::Jacobian, ..base },
        PrecondOptions { kind: PrecondKind::None, ..base },
    ];
    let mut runs = parallel_map(&variants, threads, |&o| simulate(scenario, &problem, o)).into_iter();
    let mut next = || runs.next().expect("three runs");
    Ok(AsEquivalenceReport { diffusion: next(), jacobian: next(), identity: next() })
}

/// Jacobian at Newton iterate `iterate` of time step `step`.
pub fn jacobian_at(scenario: &Scenario, step: usize, iterate: usize) -> Result<SparseMatrix, KitError> {
    let problem = scenario.problem()?;
    if step == 0 || step > problem.grid.nt {
        return Err(KitError::Range { key: "--step".into(), value: step.to_string() });
    }
    let cfg = scenario.newton_config(problem.n());
    let mut factory = PreconditionerFactory::new(scenario.precond_options(), problem.grid.interior());
    let mut state = NewtonState::new();
    let mut p = scenario.initial_field(&problem);
    let mut found = None;
    for l in 1..=step {
        let mut observer = |o: &Observation<'_>| {
            if o.time_step == step && o.iterate == iterate {
                found = Some(o.p.to_vec());
            }
        };
        let (next, _) = solve_timestep(&problem, &p, l, &cfg, &mut factory, &mut state, &mut observer)
            .map_err(|e| KitError::Solver(e.to_string()))?;
        p = next.0;
    }
    let p = found.ok_or_else(|| KitError::Range { key: "--iter".into(), value: format!("{iterate} not reached in step {step}") })?;
    Ok(assemble(&problem, &p).map_err(|e| KitError::Core(e.to_string()))?.matrix)
}

/// Files written by a scenario run and whether every solver converged.
#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub files: Vec<PathBuf>,
    pub converged: bool,
    pub summary: String,
}

pub fn run_scenario(scenario: &Scenario, out: &Path, threads: usize) -> Result<RunOutcome, KitError> {
    fs::create_dir_all(out).map_err(|e| KitError::Io(format!("{}: {e}", out.display())))?;
    let hash = scenario.hash();
    let mut files = Vec::new();
    let mut timing = Table::new(&["run", "seconds"]);
    let mut summary = format!("experiment {}\nconfig {hash}\n", scenario.experiment.kind);
    let converged = match scenario.experiment.kind {
        ExperimentKind::Simulate1d | ExperimentKind::Simulate3d => {
            let problem = scenario.problem()?;
            let r = simulate(scenario, &problem, scenario.precond_options());
            files.push(iteration_table(&r.stats).write(out, "newton_iterations.csv", &hash)?);
            files.push(step_table(&r.stats).write(out, "time_steps.csv", &hash)?);
            let mut state = Table::new(&["unknown", "p"]);
            for (i, v) in r.final_state.iter().enumerate() {
                state.push([i.to_string(), num(*v)]);
            }
            files.push(state.write(out, "final_state.csv", &hash)?);
            timing.push(["simulation".to_string(), format!("{:.3}", r.seconds)]);
            summary += &stats_summary(&r);
            r.converged()
        }
        ExperimentKind::Spectrum1d => {
            let rep = spectrum_1d(scenario, threads)?;
            let mut table = Table::new(&[
                "average",
                "time_step",
                "iterate",
                "n",
                "distance",
                "max_imag",
                "max_real",
                "transport_norm",
                "transport_bound",
                "transport_pass",
            ]);
            for rec in &rep.records {
                table.push([
                    rec.average.name().to_string(),
                    rec.time_step.to_string(),
                    rec.iterate.to_string(),
                    rec.n.to_string(),
                    num(rec.distance),
                    num(rec.eigs.max_imag),
                    num(rec.eigs.real.last().copied().unwrap_or(0.0)),
                    num(rec.zero.norm),
                    num(rec.zero.bound),
                    rec.zero.pass.to_string(),
                ]);
            }
            files.push(table.write(out, "spectrum_summary.csv", &hash)?);
            let mut pairs: Vec<(usize, usize)> = rep.records.iter().map(|r| (r.time_step, r.iterate)).collect();
            pairs.sort_unstable();
            pairs.dedup();
            for (l, r) in pairs {
                let mut t = Table::new(&["average", "index", "eigenvalue", "eigenvalue_imag_max", "symbol_quantile"]);
                for rec in rep.records.iter().filter(|x| x.time_step == l && x.iterate == r) {
                    for (i, (e, s)) in rec.eigs.real.iter().zip(&rec.symbol_quantiles).enumerate() {
                        t.push([rec.average.name().to_string(), i.to_string(), num(*e), num(rec.eigs.max_imag), num(*s)]);
                    }
                }
                files.push(t.write(out, &format!("eigs_symbol_step{l}_iter{r}.csv"), &hash)?);
            }
            for (avg, l, r) in &rep.missing {
                summary += &format!("pair ({l}, {r}) not reached with {} average\n", avg.name());
            }
            for (avg, sim) in &rep.simulations {
                timing.push([avg.name().to_string(), format!("{:.3}", sim.seconds)]);
                summary += &format!("{}: {}", avg.name(), stats_summary(sim));
            }
            rep.simulations.iter().all(|(_, s)| s.converged())
        }
        ExperimentKind::PrecondSweep => {
            let rows = precond_sweep(scenario, threads)?;
            files.push(sweep_table(&rows).write(out, "precond_sweep.csv", &hash)?);
            for r in &rows {
                let label = format!("{} {}x{}x{}", precond_label(r.precond), r.nodes[0], r.nodes[1], r.nodes[2]);
                timing.push([label.clone(), format!("{:.3}", r.report.seconds)]);
                summary += &format!("{label}: {}", stats_summary(&r.report));
            }
            rows.iter().all(|r| r.report.converged())
        }
        ExperimentKind::AsEquivalence => {
            let rep = as_equivalence(scenario, threads)?;
            files.push(rep.table().write(out, "as_equivalence.csv", &hash)?);
            for (name, r) in [("as_diffusion", &rep.diffusion), ("as_jacobian", &rep.jacobian), ("identity", &rep.identity)] {
                timing.push([name.to_string(), format!("{:.3}", r.seconds)]);
                summary += &format!("{name}: {}", stats_summary(r));
            }
            rep.diffusion.converged() && rep.jacobian.converged() && rep.identity.converged()
        }
    };
    files.push(timing.write(out, "timing.csv", &hash)?);
    summary += &format!("converged {converged}\n");
    let path = out.join("summary.txt");
    fs::write(&path, &summary).map_err(|e| KitError::Io(format!("{}: {e}", path.display())))?;
    files.push(path);
    Ok(RunOutcome { files, converged, summary })
}

fn stats_summary(r: &SimulationReport) -> String {
    let s = &r.stats;
    let mut line = format!(
        "nonlinear {} jacobians {} linear {} avg_linear_per_newton {:.3} max_linear_residual {:e}",
        s.nonlinear_iterations,
        s.jacobians,
        s.linear_iterations,
        s.average_linear_per_newton(),
        s.max_linear_residual()
    );
    if let Some(f) = &r.failure {
        line += &format!(" FAILED: {f}");
    }
    line + "\n"
}

/// Applies `f` to every item using up to `threads` worker threads; results
/// keep the input order.
pub fn parallel_map<T, R, F>(items: &[T], threads: usize, f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync,
{
    let threads = threads.max(1).min(items.len().max(1));
    if threads == 1 {
        return items.iter().map(&f).collect();
    }
    let chunk = items.len().div_ceil(threads);
    std::thread::scope(|scope| {
        let handles: Vec<_> = items.chunks(chunk).map(|c| scope.spawn(|| c.iter().map(&f).collect::<Vec<R>>())).collect();
        handles.into_iter().flat_map(|h| h.join().expect("worker panicked")).collect()
    })
}
