use num_complex::Complex64;

use super::model::{BufferModel, EomBuffer};
use super::nelder_mead::{maximize, TraceEntry};
use super::problem::{Objective, OptimizationProblem, PulseMap, PENALTY_WEIGHT};
use crate::buffer::{BufferConfig, ControlPulse, GreenFactors, GreenOperator};
use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix};
use crate::modespace::{eigendecompose, inner, normalize_mode, Domain, ModeState};

/// Objective value assigned to infeasible controls.
pub(crate) const INFEASIBLE: f64 = -1e9;

/// Brightness and self-indistinguishability of one buffered output.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BufferMetrics {
    /// `B/B₀`.
    pub b_ratio: f64,
    /// `I⁽¹⁾` of the output.
    pub purity: f64,
}

#[derive(Debug, Clone)]
pub struct OptimizationResult {
    /// Best read-in control per buffer.
    pub read_in: Vec<ControlPulse>,
    /// Best read-out control per buffer.
    pub read_out: Vec<ControlPulse>,
    pub metrics: Vec<BufferMetrics>,
    /// `I⁽²⁾` of the inputs and of the outputs, for unification.
    pub i2_before: Option<f64>,
    pub i2_after: Option<f64>,
    /// `|⟨u₀|ψ₀⟩|²` at the best controls, for mode matching.
    pub overlap: Option<f64>,
    pub objective: f64,
    /// Objective at the starting controls.
    pub baseline_objective: f64,
    pub trace: Vec<TraceEntry>,
    pub converged: bool,
    pub parameterization: String,
}

/// Analytic ideal buffer: keeps the dominant eigenmode (or `target_mode`)
/// with unit efficiency.
pub fn ideal_buffer_filter(rho_in: &ModeState, target_mode: Option<&[Complex64]>) -> Result<(ModeState, f64)> {
    let step = rho_in.step();
    match target_mode {
        Some(t) => {
            if t.len() != rho_in.len() {
                return Err(Error::GridMismatch);
            }
            let t = normalize_mode(t, step)?;
            let rho_t: Vec<Complex64> = (0..t.len())
                .map(|i| (0..t.len()).map(|j| rho_in.rho()[(i, j)] * t[j]).sum::<Complex64>() * step)
                .collect();
            let weight = inner(&t, &rho_t, step).re;
            Ok((ModeState::pure(*rho_in.grid(), rho_in.domain(), &t)?, weight))
        }
        None => {
            if crate::modespace::purity(rho_in) >= 1.0 - 1e-12 {
                let d = eigendecompose(rho_in)?;
                return Ok((rho_in.clone(), d.dominant_weight()));
            }
            let d = eigendecompose(rho_in)?;
            Ok((ModeState::pure(*rho_in.grid(), rho_in.domain(), &d.mode(0))?, d.dominant_weight()))
        }
    }
}

/// `W` and output purity from the stored-state matrix `M = T K T†` and the
/// read-out Gram matrix `N = R†R`.
pub(crate) fn weight_and_purity(m: &CMatrix, n: &CMatrix) -> BufferMetrics {
    let nm = n * m;
    let w = linalg::real_trace(&nm);
    let p = linalg::hermitian_overlap(&nm, &nm.adjoint());
    BufferMetrics {
        b_ratio: w,
        purity: if w > 0.0 { p / (w * w) } else { 0.0 },
    }
}

pub(crate) fn stored(t: &CMatrix, k: &CMatrix) -> CMatrix {
    t * k * t.adjoint()
}

pub(crate) fn brightness_objective(m: BufferMetrics, floor: f64) -> f64 {
    m.b_ratio - PENALTY_WEIGHT * (floor - m.purity).max(0.0).powi(2)
}

fn check_input(model: &dyn BufferModel, rho_in: &ModeState) -> Result<CMatrix> {
    if rho_in.domain() != Domain::Time {
        return Err(Error::WrongDomain { expected: "time" });
    }
    if !rho_in.grid().matches(model.grid()) {
        return Err(Error::GridMismatch);
    }
    rho_in.validate()?;
    Ok(rho_in.weighted())
}

/// Optimizes one buffer's controls for `rho_in` on its own grid.
pub fn optimize_single(problem: &OptimizationProblem, config: &BufferConfig, rho_in: &ModeState) -> Result<OptimizationResult> {
    optimize_single_with(problem, &EomBuffer::new(*config, *rho_in.grid()), rho_in)
}

/// [`optimize_single`] against any buffer model.
pub fn optimize_single_with(problem: &OptimizationProblem, model: &dyn BufferModel, rho_in: &ModeState) -> Result<OptimizationResult> {
    problem.validate()?;
    let k = check_input(model, rho_in)?;
    let in_map = PulseMap {
        basis: problem.basis,
        bounds: problem.read_in_bounds,
    };
    let out_map = PulseMap {
        basis: problem.basis,
        bounds: problem.read_out_bounds,
    };
    let joint = problem.optimize_read_out && !matches!(problem.objective, Objective::ModeOverlap);
    let fixed_out = if joint { None } else { Some(model.read_out(&problem.read_out)?) };
    let dim = in_map.dimension();
    let decode = |x: &[f64]| -> (ControlPulse, ControlPulse) {
        let pin = in_map.decode(&x[..dim]);
        let pout = if joint { out_map.decode(&x[dim..]) } else { problem.read_out.clone() };
        (pin, pout)
    };
    let psi0 = match problem.objective {
        Objective::ModeOverlap => Some(eigendecompose(rho_in)?.mode(0)),
        _ => None,
    };
    let floor = match problem.objective {
        Objective::BrightnessAtPurityFloor { purity_floor } => purity_floor,
        Objective::ModeOverlap => 0.0,
        Objective::Unification { .. } => {
            return Err(Error::InvalidArgument("use optimize_unification for the unification objective".into()))
        }
    };

    struct Eval {
        metrics: BufferMetrics,
        overlap: Option<f64>,
        value: f64,
    }
    let evaluate = |pin: &ControlPulse, pout: &ControlPulse| -> Result<Eval> {
        model.check_pair(pin, pout)?;
        let t = model.read_in(pin)?;
        let r = match &fixed_out {
            Some(r) => r.clone(),
            None => model.read_out(pout)?,
        };
        let metrics = weight_and_purity(&stored(&t, &k), &(r.adjoint() * &r));
        match &psi0 {
            Some(psi0) => {
                let g = GreenOperator::from_factors(*model.grid(), GreenFactors { read_in: t, read_out: r })?;
                let u0: Vec<Complex64> = g.input_modes().column(0).iter().copied().collect();
                let overlap = inner(&u0, psi0, model.grid().dt()).norm_sqr();
                Ok(Eval {
                    metrics,
                    overlap: Some(overlap),
                    value: overlap,
                })
            }
            None => Ok(Eval {
                metrics,
                overlap: None,
                value: brightness_objective(metrics, floor),
            }),
        }
    };
    let f = |x: &[f64]| {
        let (pin, pout) = decode(x);
        evaluate(&pin, &pout).map_or(INFEASIBLE, |e| e.value)
    };
    let mut x0 = in_map.encode(&problem.read_in);
    if joint {
        x0.extend(out_map.encode(&problem.read_out));
    }
    let search = maximize(&f, &x0, problem.budget, problem.seed);
    let (pin, pout) = decode(&search.best_x);
    let best = evaluate(&pin, &pout)?;
    Ok(OptimizationResult {
        read_in: vec![pin],
        read_out: vec![pout],
        metrics: vec![best.metrics],
        i2_before: None,
        i2_after: None,
        overlap: best.overlap,
        objective: search.best_value,
        baseline_objective: search.trace.first().map_or(INFEASIBLE, |t| t.value),
        trace: search.trace,
        converged: search.converged,
        parameterization: describe(problem, joint),
    })
}

pub(crate) fn describe(problem: &OptimizationProblem, joint: bool) -> String {
    let what = if joint { "read-in+read-out" } else { "read-in" };
    format!("{} over {what}", problem.basis.describe())
}
