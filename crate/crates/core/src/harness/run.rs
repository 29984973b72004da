use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;

use super::config::{Scenario, ScenarioKind};
use crate::buffer::{buffer_output_state, efficiency_surface, green_function_unchecked, BufferConfig, ControlPulse, SurfaceSetup};
use crate::emitters::{apply_inhomogeneous, sample_ensemble, EmitterSpec, DEFAULT_QUADRATURE_POINTS};
use crate::error::{Error, Result};
use crate::filters::{apply_passband, filter_sweep, Frontier};
use crate::modespace::{eigendecompose, make_grid, purity, to_frequency, ModeState, TimeGrid};
use crate::optimize::{ideal_buffer_filter, optimize_single, optimize_unification, Objective, OptimizationProblem};

/// Inputs at or above this purity bypass filtering.
pub const PURE_INPUT: f64 = 1.0 - 1e-9;
/// Eigenmodes reported per stage in the mode-fraction table.
pub const REPORTED_MODES: usize = 5;

/// One CSV table held in memory.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub name: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(name: &str, header: &[&str]) -> Self {
        Self {
            name: name.into(),
            header: header.iter().map(|h| h.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    fn push(&mut self, row: Vec<String>) {
        self.rows.push(row);
    }
}

pub(crate) fn num(x: f64) -> String {
    format!("{x}")
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Point {
    pub b_ratio: f64,
    pub indist: f64,
}

/// Per-emitter summary of a trade-off or single run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FilterReport {
    pub source_id: usize,
    pub input_purity: f64,
    pub alpha0: f64,
    pub schmidt_number: f64,
    pub gaussian: Point,
    pub gaussian_center: f64,
    pub optimized: Point,
    pub optimized_converged: bool,
    pub evaluations: usize,
    pub ideal: Point,
    pub parameterization: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct UnificationReport {
    pub pair_id: usize,
    pub i2_before: f64,
    pub i2_after: f64,
    pub b_a: f64,
    pub b_b: f64,
    pub purity_a: f64,
    pub purity_b: f64,
    pub converged: bool,
    pub parameterization: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FileEntry {
    pub file: String,
    pub rows: usize,
    pub sha256: String,
}

/// Everything a run produced; tables are written by
/// [`super::emit_plotdata`].
#[derive(Debug, Clone, Serialize)]
pub struct RunRecord {
    pub scenario: String,
    pub kind: ScenarioKind,
    pub scenario_hash: String,
    pub version: String,
    pub seed: u64,
    pub wall_clock_s: f64,
    pub threads: usize,
    pub items: Vec<FilterReport>,
    pub unification: Option<UnificationReport>,
    pub files: Vec<FileEntry>,
    pub failure: Option<String>,
    #[serde(skip)]
    pub tables: Vec<Table>,
    #[serde(skip)]
    pub canonical_config: String,
}

impl RunRecord {
    /// A record with no results.
    pub fn empty(scenario: &Scenario) -> Result<Self> {
        Ok(Self {
            scenario: scenario.name.clone(),
            kind: scenario.kind,
            scenario_hash: scenario.hash()?,
            version: env!("CARGO_PKG_VERSION").into(),
            seed: scenario.seed,
            wall_clock_s: 0.0,
            threads: rayon::current_num_threads(),
            items: Vec::new(),
            unification: None,
            files: Vec::new(),
            failure: None,
            tables: Vec::new(),
            canonical_config: scenario.to_canonical_toml()?,
        })
    }

    pub fn table(&self, name: &str) -> Option<&Table> {
        self.tables.iter().find(|t| t.name == name)
    }
}

/// Runs a scenario; on failure the error carries the scenario name.
pub fn run_scenario(scenario: &Scenario) -> Result<RunRecord> {
    let (record, err) = execute(scenario)?;
    match err {
        Some(e) => Err(e),
        None => Ok(record),
    }
}

/// Runs a scenario and keeps whatever finished; the error, if any, is
/// returned next to the partial record.
pub fn execute(scenario: &Scenario) -> Result<(RunRecord, Option<Error>)> {
    let scenario = scenario.clone().canonicalize()?;
    let start = Instant::now();
    let mut record = RunRecord::empty(&scenario)?;
    let outcome = match scenario.kind {
        ScenarioKind::EfficiencySurface => run_surface(&scenario, &mut record),
        ScenarioKind::TradeoffSweep | ScenarioKind::SingleRun => run_tradeoff(&scenario, &mut record),
        ScenarioKind::Unification => run_unification(&scenario, &mut record),
    };
    record.wall_clock_s = start.elapsed().as_secs_f64();
    let err = outcome.err().map(|e| Error::Scenario {
        scenario: scenario.name.clone(),
        source: Box::new(e),
    });
    record.failure = err.as_ref().map(|e| e.to_string());
    Ok((record, err))
}

fn scenario_grid(s: &Scenario) -> Result<TimeGrid> {
    let t0 = s.grid.t_start.unwrap_or(0.0);
    let t1 = s.grid.t_end.ok_or_else(|| Error::validation("grid.t_end", "missing"))?;
    make_grid(s.grid.n_points, t0, t1)
}

fn buffer_of(s: &Scenario) -> BufferConfig {
    s.buffer.expect("canonical scenario has a buffer")
}

fn run_surface(s: &Scenario, record: &mut RunRecord) -> Result<()> {
    let setup = SurfaceSetup::on_grid(scenario_grid(s)?);
    let energies = s.surface.as_ref().expect("canonical surface settings");
    let rows = efficiency_surface(
        &buffer_of(s),
        &setup.read_in,
        &setup.read_out,
        &energies.read_in_energies,
        &energies.read_out_energies,
        &setup.grid,
        &setup.probe,
    )?;
    let mut table = Table::new("efficiency_surface", &["read_in_pj", "read_out_pj", "efficiency"]);
    for (ein, row) in energies.read_in_energies.iter().zip(&rows) {
        for (eout, eta) in energies.read_out_energies.iter().zip(row) {
            table.push(vec![num(*ein), num(*eout), num(*eta)]);
        }
    }
    record.tables.push(table);
    Ok(())
}

struct EmitterOutput {
    report: FilterReport,
    tradeoff: Vec<Vec<String>>,
    frontier: Vec<Vec<String>>,
    modes: Vec<Vec<String>>,
    trace: Vec<Vec<String>>,
}

fn mode_rows(source_id: usize, stage: &str, state: &ModeState) -> Result<Vec<Vec<String>>> {
    let d = eigendecompose(state)?;
    let k = d.schmidt_number();
    Ok(d
        .weights
        .iter()
        .take(REPORTED_MODES)
        .enumerate()
        .map(|(i, w)| vec![num(source_id as f64), stage.into(), num(i as f64), num(w.max(0.0)), num(k)])
        .collect())
}

fn point_row(source_id: usize, method: &str, p: Point) -> Vec<String> {
    vec![num(source_id as f64), method.into(), num(p.b_ratio), num(p.indist)]
}

fn frontier_rows(id: usize, f: &Frontier) -> Vec<Vec<String>> {
    f.points
        .iter()
        .filter(|p| p.center.is_finite() && p.width.is_finite())
        .map(|p| {
            vec![
                num(id as f64),
                p.shape.name().into(),
                num(p.center),
                num(p.width),
                num(p.b_mult),
                num(p.purity),
                if p.pareto { "1".into() } else { "0".into() },
            ]
        })
        .collect()
}

/// Gaussian control with the brightest centre among `centers`; the same
/// pulse reads in and out.
pub(crate) fn gaussian_baseline(
    config: &BufferConfig,
    states: &[&ModeState],
    grid: &TimeGrid,
    centers: &[f64],
    width: f64,
    energy_pj: f64,
) -> Result<(ControlPulse, Vec<Point>)> {
    let evaluated: Vec<(f64, Vec<Point>)> = centers
        .par_iter()
        .map(|&c| {
            let p = ControlPulse::gaussian(c, width, energy_pj);
            let g = green_function_unchecked(config, &p, &p, grid)?;
            let points = states
                .iter()
                .map(|s| {
                    let (w, pu) = g.weight_and_purity(&s.weighted());
                    Point { b_ratio: w, indist: pu }
                })
                .collect();
            Ok((c, points))
        })
        .collect::<Result<_>>()?;
    let mut best = 0;
    let total = |k: usize| evaluated[k].1.iter().map(|p| p.b_ratio).sum::<f64>();
    for k in 1..evaluated.len() {
        if total(k) > total(best) {
            best = k;
        }
    }
    let (c, points) = evaluated[best].clone();
    Ok((ControlPulse::gaussian(c, width, energy_pj), points))
}

fn process_emitter(s: &Scenario, id: usize, state: &ModeState, grid: &TimeGrid) -> Result<EmitterOutput> {
    let config = buffer_of(s);
    let control = s.control.expect("canonical control settings");
    let settings = s.optimization.expect("canonical optimization settings");
    let family = s.filter.clone().expect("canonical filter family");
    let decomposition = eigendecompose(state)?;
    let input_purity = purity(state);
    let alpha0 = decomposition.dominant_weight();
    let mut out = EmitterOutput {
        report: FilterReport {
            source_id: id,
            input_purity,
            alpha0,
            schmidt_number: decomposition.schmidt_number(),
            gaussian: Point { b_ratio: 1.0, indist: 1.0 },
            gaussian_center: f64::NAN,
            optimized: Point { b_ratio: 1.0, indist: 1.0 },
            optimized_converged: true,
            evaluations: 0,
            ideal: Point { b_ratio: 1.0, indist: 1.0 },
            parameterization: "bypass".into(),
        },
        tradeoff: Vec::new(),
        frontier: Vec::new(),
        modes: mode_rows(id, "input", state)?,
        trace: Vec::new(),
    };
    let pure = input_purity >= PURE_INPUT;
    let frontier = filter_sweep(state, &family)?;
    for &(b, p) in &frontier.frontier {
        out.tradeoff.push(point_row(id, "intensity", Point { b_ratio: b, indist: p }));
    }
    out.frontier = frontier_rows(id, &frontier);
    if let Some(band) = &s.passband {
        let point = if pure {
            Point { b_ratio: 1.0, indist: 1.0 }
        } else {
            let (filtered, b) = apply_passband(&to_frequency(&state.zero_pad(state.len() * family.padding)?)?, band)?;
            Point {
                b_ratio: b,
                indist: purity(&filtered),
            }
        };
        out.tradeoff.push(point_row(id, "passband", point));
    }
    if pure {
        for method in ["buffer-gaussian", "buffer-optimized", "ideal"] {
            out.tradeoff.push(point_row(id, method, out.report.ideal));
            out.modes.push(vec![num(id as f64), method.into(), num(0.0), num(1.0), num(1.0)]);
        }
        return Ok(out);
    }

    let (baseline, points) = gaussian_baseline(&config, &[state], grid, &control.centers(), control.width, control.energy_pj)?;
    out.report.gaussian = points[0];
    if let crate::buffer::PulseShape::Gaussian { center, .. } = baseline.shape {
        out.report.gaussian_center = center;
    }
    let floor = settings.purity_floor.unwrap_or(points[0].indist);
    let mut problem = OptimizationProblem::new(
        Objective::BrightnessAtPurityFloor { purity_floor: floor },
        baseline.clone(),
        baseline.clone(),
        settings.budget,
        s.seed.wrapping_add(id as u64),
    );
    problem.basis = settings.basis;
    let result = optimize_single(&problem, &config, state)?;
    let m = result.metrics[0];
    out.report.optimized = Point {
        b_ratio: m.b_ratio,
        indist: m.purity,
    };
    out.report.optimized_converged = result.converged;
    out.report.evaluations = result.trace.len();
    out.report.parameterization = result.parameterization.clone();
    out.report.ideal = Point {
        b_ratio: alpha0,
        indist: 1.0,
    };
    out.tradeoff.push(point_row(id, "buffer-gaussian", out.report.gaussian));
    out.tradeoff.push(point_row(id, "buffer-optimized", out.report.optimized));
    out.tradeoff.push(point_row(id, "ideal", out.report.ideal));

    let g_gauss = green_function_unchecked(&config, &baseline, &baseline, grid)?;
    out.modes.extend(mode_rows(id, "buffer-gaussian", &buffer_output_state(&g_gauss, state)?.0)?);
    let g_opt = green_function_unchecked(&config, &result.read_in[0], &result.read_out[0], grid)?;
    out.modes.extend(mode_rows(id, "buffer-optimized", &buffer_output_state(&g_opt, state)?.0)?);
    out.modes.extend(mode_rows(id, "ideal", &ideal_buffer_filter(state, None)?.0)?);
    out.trace = result
        .trace
        .iter()
        .map(|t| vec![num(id as f64), num(t.evaluation as f64), num(t.value), num(t.best)])
        .collect();
    Ok(out)
}

fn emitter_states(s: &Scenario, grid: &TimeGrid) -> Result<Vec<(EmitterSpec, ModeState)>> {
    if !s.emitters.is_empty() {
        return s
            .emitters
            .par_iter()
            .enumerate()
            .map(|(index, e)| {
                apply_inhomogeneous(e, grid, DEFAULT_QUADRATURE_POINTS)
                    .map(|st| (*e, st))
                    .map_err(|source| Error::Ensemble {
                        index,
                        source: Box::new(source),
                    })
            })
            .collect();
    }
    let spec = s.ensemble.as_ref().expect("validated scenario has an ensemble");
    Ok(sample_ensemble(spec, grid)?.into_iter().map(|m| (m.spec, m.state)).collect())
}

fn run_tradeoff(s: &Scenario, record: &mut RunRecord) -> Result<()> {
    let grid = scenario_grid(s)?;
    let states = emitter_states(s, &grid)?;
    let results: Vec<Result<EmitterOutput>> = states
        .par_iter()
        .enumerate()
        .map(|(id, (_, st))| process_emitter(s, id, st, &grid))
        .collect();
    let mut tradeoff = Table::new("tradeoff", &["source_id", "method", "b_ratio", "indist"]);
    let mut frontier = Table::new(
        "frontier",
        &["state_id", "shape", "center", "width", "b_mult", "purity", "pareto_flag"],
    );
    let mut modes = Table::new("mode_fractions", &["source_id", "stage", "k", "fraction", "K"]);
    let mut trace = Table::new("trace", &["source_id", "evaluation", "value", "best"]);
    let mut first_error = None;
    for (id, r) in results.into_iter().enumerate() {
        match r {
            Ok(o) => {
                tradeoff.rows.extend(o.tradeoff);
                frontier.rows.extend(o.frontier);
                modes.rows.extend(o.modes);
                trace.rows.extend(o.trace);
                record.items.push(o.report);
            }
            Err(e) if first_error.is_none() => {
                first_error = Some(Error::Ensemble {
                    index: id,
                    source: Box::new(e),
                })
            }
            Err(_) => {}
        }
    }
    record.tables.extend([tradeoff, frontier, modes]);
    if s.kind == ScenarioKind::SingleRun {
        record.tables.push(trace);
    }
    match first_error {
        Some(e) => Err(e),
        None => Ok(()),
    }
}

fn run_unification(s: &Scenario, record: &mut RunRecord) -> Result<()> {
    let grid = scenario_grid(s)?;
    let config = buffer_of(s);
    let control = s.control.expect("canonical control settings");
    let settings = s.optimization.expect("canonical optimization settings");
    let states = emitter_states(s, &grid)?;
    let (a, b) = (&states[0].1, &states[1].1);
    let (start, _) = gaussian_baseline(&config, &[a, b], &grid, &control.centers(), control.width, control.energy_pj)?;
    let mut problem = OptimizationProblem::new(
        Objective::Unification {
            purity_floor: settings.purity_floor.unwrap_or(0.95),
            brightness_floor: settings.brightness_floor,
        },
        start.clone(),
        start,
        settings.budget,
        s.seed,
    );
    problem.basis = settings.basis;
    let r = optimize_unification(&problem, &config, &config, a, b)?;
    let report = UnificationReport {
        pair_id: 0,
        i2_before: r.i2_before.unwrap_or(f64::NAN),
        i2_after: r.i2_after.unwrap_or(f64::NAN),
        b_a: r.metrics[0].b_ratio,
        b_b: r.metrics[1].b_ratio,
        purity_a: r.metrics[0].purity,
        purity_b: r.metrics[1].purity,
        converged: r.converged,
        parameterization: r.parameterization.clone(),
    };
    let mut table = Table::new("unification", &["pair_id", "I2_before", "I2_after", "b_a", "b_b"]);
    table.push(vec![
        num(0.0),
        num(report.i2_before),
        num(report.i2_after),
        num(report.b_a),
        num(report.b_b),
    ]);
    let mut modes = Table::new("mode_fractions", &["source_id", "stage", "k", "fraction", "K"]);
    for (x, st) in [a, b].into_iter().enumerate() {
        modes.rows.extend(mode_rows(x, "input", st)?);
        let g = green_function_unchecked(&config, &r.read_in[x], &r.read_out[x], &grid)?;
        modes.rows.extend(mode_rows(x, "buffer-unified", &buffer_output_state(&g, st)?.0)?);
    }
    let mut trace = Table::new("trace", &["source_id", "evaluation", "value", "best"]);
    for t in &r.trace {
        trace.push(vec![num(0.0), num(t.evaluation as f64), num(t.value), num(t.best)]);
    }
    record.unification = Some(report);
    record.tables.extend([table, modes, trace]);
    Ok(())
}
