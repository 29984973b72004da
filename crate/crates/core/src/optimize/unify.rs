use std::cmp::Ordering;

use super::model::{BufferModel, EomBuffer};
use super::nelder_mead::{maximize, TraceEntry};
use super::problem::{Objective, OptimizationProblem, PulseMap, PENALTY_WEIGHT};
use super::single::{describe, optimize_single_with, stored, weight_and_purity, BufferMetrics, OptimizationResult, INFEASIBLE};
use crate::buffer::{BufferConfig, ControlPulse};
use crate::error::{Error, Result};
use crate::linalg::CMatrix;
use crate::modespace::{inter_indistinguishability, ModeState};

/// Unifies the outputs of two buffers on identical grids.
pub fn optimize_unification(
    problem: &OptimizationProblem,
    config_a: &BufferConfig,
    config_b: &BufferConfig,
    rho_a: &ModeState,
    rho_b: &ModeState,
) -> Result<OptimizationResult> {
    let a = EomBuffer::new(*config_a, *rho_a.grid());
    let b = EomBuffer::new(*config_b, *rho_b.grid());
    optimize_unification_with(problem, &a, &b, rho_a, rho_b)
}

fn compare_states(a: &ModeState, b: &ModeState) -> Ordering {
    for (x, y) in a.rho().iter().zip(b.rho().iter()) {
        let o = x.re.total_cmp(&y.re).then(x.im.total_cmp(&y.im));
        if o != Ordering::Equal {
            return o;
        }
    }
    a.len().cmp(&b.len())
}

/// [`optimize_unification`] against any pair of buffer models.
///
/// A quarter of the budget goes to each read-in search (brightness at the
/// purity floor, read-out held at the starting control); the rest
/// co-optimizes both read-out controls for `I⁽²⁾`. The pair is processed in a
/// canonical order so that swapping the labels swaps the result exactly,
/// and identical pairs share one set of controls.
pub fn optimize_unification_with(
    problem: &OptimizationProblem,
    model_a: &dyn BufferModel,
    model_b: &dyn BufferModel,
    rho_a: &ModeState,
    rho_b: &ModeState,
) -> Result<OptimizationResult> {
    problem.validate()?;
    let Objective::Unification {
        purity_floor,
        brightness_floor,
    } = problem.objective
    else {
        return Err(Error::InvalidArgument("optimize_unification needs the unification objective".into()));
    };
    if !rho_a.grid().matches(rho_b.grid()) || rho_a.domain() != rho_b.domain() {
        return Err(Error::GridMismatch);
    }
    let order = model_a
        .fingerprint()
        .cmp(&model_b.fingerprint())
        .then_with(|| compare_states(rho_a, rho_b));
    let swapped = order == Ordering::Greater;
    let identical = order == Ordering::Equal;
    let (models, states) = if swapped {
        ([model_b, model_a], [rho_b, rho_a])
    } else {
        ([model_a, model_b], [rho_a, rho_b])
    };

    // read-in selection
    let stage_budget = (problem.budget / 4).max(1);
    let mut selection = problem.clone();
    selection.objective = Objective::BrightnessAtPurityFloor { purity_floor };
    selection.optimize_read_out = false;
    selection.budget = stage_budget;
    let mut trace: Vec<TraceEntry> = Vec::new();
    let mut read_in: Vec<ControlPulse> = Vec::new();
    for x in 0..2 {
        if x == 1 && identical {
            read_in.push(read_in[0].clone());
            continue;
        }
        selection.seed = problem.seed.wrapping_add(x as u64);
        let r = optimize_single_with(&selection, models[x], states[x])?;
        append(&mut trace, &r.trace);
        read_in.push(r.read_in[0].clone());
    }
    let m: Vec<CMatrix> = (0..2)
        .map(|x| Ok(stored(&models[x].read_in(&read_in[x])?, &states[x].weighted())))
        .collect::<Result<_>>()?;

    // read-out co-optimization
    let out_map = PulseMap {
        basis: problem.basis,
        bounds: problem.read_out_bounds,
    };
    let dim = out_map.dimension();
    let decode = |x: &[f64]| -> [ControlPulse; 2] {
        let a = out_map.decode(&x[..dim]);
        let b = if identical { a.clone() } else { out_map.decode(&x[dim..]) };
        [a, b]
    };
    let outputs = |pout: &[ControlPulse; 2]| -> Result<([BufferMetrics; 2], f64)> {
        let mut r = Vec::with_capacity(2);
        for x in 0..2 {
            models[x].check_pair(&read_in[x], &pout[x])?;
            r.push(models[x].read_out(&pout[x])?);
        }
        let metrics = [0, 1].map(|x| weight_and_purity(&m[x], &(r[x].adjoint() * &r[x])));
        let c = r[1].adjoint() * &r[0];
        let cross = crate::linalg::real_trace(&(&c * &m[0] * c.adjoint() * &m[1]));
        let w = metrics[0].b_ratio * metrics[1].b_ratio;
        Ok((metrics, if w > 0.0 { cross / w } else { 0.0 }))
    };
    let start = [problem.read_out.clone(), problem.read_out.clone()];
    let (start_metrics, _) = outputs(&start)?;
    let floors = start_metrics.map(|s| brightness_floor * s.b_ratio);
    let value = |metrics: &[BufferMetrics; 2], i2: f64| {
        i2 - PENALTY_WEIGHT * (0..2).map(|x| (floors[x] - metrics[x].b_ratio).max(0.0).powi(2)).sum::<f64>()
    };
    let f = |x: &[f64]| outputs(&decode(x)).map_or(INFEASIBLE, |(metrics, i2)| value(&metrics, i2));
    let mut x0 = out_map.encode(&problem.read_out);
    if !identical {
        x0.extend(out_map.encode(&problem.read_out));
    }
    let remaining = problem.budget.saturating_sub(trace.len()).max(1);
    let search = maximize(&f, &x0, remaining, problem.seed.wrapping_add(2));
    let baseline_objective = search.trace.first().map_or(INFEASIBLE, |t| t.value);
    append(&mut trace, &search.trace);
    let [out_a, out_b] = decode(&search.best_x);
    let read_out = vec![out_a, out_b];
    let (metrics, i2) = outputs(&[read_out[0].clone(), read_out[1].clone()])?;
    let mut result = OptimizationResult {
        read_in,
        read_out,
        metrics: metrics.to_vec(),
        i2_before: Some(inter_indistinguishability(states[0], states[1])?),
        i2_after: Some(i2),
        overlap: None,
        objective: search.best_value,
        baseline_objective,
        trace,
        converged: search.converged,
        parameterization: describe(problem, true),
    };
    if swapped {
        result.read_in.swap(0, 1);
        result.read_out.swap(0, 1);
        result.metrics.swap(0, 1);
    }
    Ok(result)
}

fn append(trace: &mut Vec<TraceEntry>, part: &[TraceEntry]) {
    let offset = trace.len();
    trace.extend(part.iter().map(|t| TraceEntry {
        evaluation: t.evaluation + offset,
        ..*t
    }));
}
