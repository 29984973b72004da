use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::config::{BufferConfig, ControlPulse};
use super::eom::{read_in_operator, read_out_operator, solve_eom, validate_inputs, Stage};
use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix};
use crate::modespace::state::project_weighted;
use crate::modespace::{Domain, ModeState, TimeGrid};

/// Largest singular value accepted before an operator is called active.
pub const PASSIVITY_TOL: f64 = 1e-6;
const ZERO_W: f64 = 1e-12;

/// Inputs that produced a Green operator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GreenMetadata {
    pub config: BufferConfig,
    pub read_in: ControlPulse,
    pub read_out: ControlPulse,
    /// Carrier offset applied to the retrieved field, rad/ns.
    pub delta_omega: f64,
}

/// Low-rank factorization `G = R·T` kept for fast repeated evaluation.
#[derive(Debug, Clone, PartialEq)]
pub struct GreenFactors {
    /// `n_z × n`: stored spin wave per unit input amplitude, decay included.
    pub read_in: CMatrix,
    /// `n × n_z`: output amplitude per unit spin wave.
    pub read_out: CMatrix,
}

/// Linear map from input to retrieved signal amplitudes on a time grid.
///
/// `matrix` acts on quadrature-weighted amplitudes `√dt·s(t)`, so it equals
/// `G(t,t′)·dt` and its singular values are amplitude efficiencies `λ_k`.
/// Modes are stored as time-domain envelopes normalized under the grid
/// quadrature.
#[derive(Debug, Clone)]
pub struct GreenOperator {
    grid: TimeGrid,
    matrix: CMatrix,
    singular_values: Vec<f64>,
    input_modes: CMatrix,
    output_modes: CMatrix,
    factors: Option<GreenFactors>,
    metadata: Option<GreenMetadata>,
    linearity_residual: Option<f64>,
}

impl GreenOperator {
    /// Wraps an arbitrary amplitude-space matrix and computes its SVD.
    pub fn from_matrix(grid: TimeGrid, matrix: CMatrix) -> Result<Self> {
        let n = grid.len();
        if matrix.nrows() != n || matrix.ncols() != n {
            return Err(Error::InvalidArgument(format!(
                "Green matrix is {}x{}, grid has {n} points",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        let (s, u, v) = linalg::svd(&matrix);
        Self::assemble(grid, matrix, s, u, v, None)
    }

    /// Builds the operator from `G = R·T` with an SVD of the small core.
    pub fn from_factors(grid: TimeGrid, factors: GreenFactors) -> Result<Self> {
        let n = grid.len();
        let (t, r) = (&factors.read_in, &factors.read_out);
        if t.ncols() != n || r.nrows() != n || t.nrows() != r.ncols() {
            return Err(Error::InvalidArgument("factor shapes do not match the grid".into()));
        }
        let matrix = r * t;
        let (qr, rr) = linalg::thin_qr(r);
        let (qt, rt) = linalg::thin_qr(&t.adjoint());
        let core = &rr * rt.adjoint();
        let (s, cu, cv) = linalg::svd(&core);
        let u = qr * cu;
        let v = qt * cv;
        Self::assemble(grid, matrix, s, u, v, Some(factors))
    }

    fn assemble(
        grid: TimeGrid,
        matrix: CMatrix,
        s: Vec<f64>,
        mut u: CMatrix,
        mut v: CMatrix,
        factors: Option<GreenFactors>,
    ) -> Result<Self> {
        // fix each input mode's phase, carrying it to the output mode
        for k in 0..v.ncols() {
            let col = v.column(k);
            let (mut best, mut mag) = (0usize, -1.0f64);
            for (i, z) in col.iter().enumerate() {
                if z.norm() > mag {
                    best = i;
                    mag = z.norm();
                }
            }
            if mag > 0.0 {
                let phase = v[(best, k)].conj() / mag;
                v.column_mut(k).scale_mut_c(phase);
                u.column_mut(k).scale_mut_c(phase);
            }
        }
        let scale = 1.0 / grid.dt().sqrt();
        u.scale_mut(scale);
        v.scale_mut(scale);
        let top = s.first().copied().unwrap_or(0.0);
        if top > 1.0 + PASSIVITY_TOL {
            return Err(Error::NotPassive(top));
        }
        Ok(Self {
            grid,
            matrix,
            singular_values: s,
            input_modes: v,
            output_modes: u,
            factors,
            metadata: None,
            linearity_residual: None,
        })
    }

    pub(crate) fn from_stored(
        grid: TimeGrid,
        matrix: CMatrix,
        singular_values: Vec<f64>,
        input_modes: CMatrix,
        output_modes: CMatrix,
        factors: Option<GreenFactors>,
    ) -> Self {
        Self {
            grid,
            matrix,
            singular_values,
            input_modes,
            output_modes,
            factors,
            metadata: None,
            linearity_residual: None,
        }
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    /// Amplitude-space matrix `G(t,t′)·dt`.
    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    /// Kernel values `G(t_i, t_j)`.
    pub fn kernel(&self) -> CMatrix {
        self.matrix.unscale(self.grid.dt())
    }

    /// `λ_k`, descending.
    pub fn singular_values(&self) -> &[f64] {
        &self.singular_values
    }

    /// `λ_k²`, the efficiency of each singular mode.
    pub fn efficiencies(&self) -> Vec<f64> {
        self.singular_values.iter().map(|s| s * s).collect()
    }

    /// Accepted input shapes `u_k` as columns.
    pub fn input_modes(&self) -> &CMatrix {
        &self.input_modes
    }

    /// Retrieved output shapes `φ_k` as columns.
    pub fn output_modes(&self) -> &CMatrix {
        &self.output_modes
    }

    pub fn factors(&self) -> Option<&GreenFactors> {
        self.factors.as_ref()
    }

    pub fn metadata(&self) -> Option<&GreenMetadata> {
        self.metadata.as_ref()
    }

    /// Mismatch between direct integration and the assembled matrix on a
    /// random superposition, when checked at build time.
    pub fn linearity_residual(&self) -> Option<f64> {
        self.linearity_residual
    }

    /// Applies `G` to a sampled envelope.
    pub fn apply(&self, s_in: &[Complex64]) -> Vec<Complex64> {
        let v = nalgebra::DVector::from_column_slice(s_in);
        (&self.matrix * v).iter().copied().collect()
    }

    /// Largest deviation from orthonormality among input and output modes.
    pub fn orthonormality_residual(&self) -> f64 {
        let dt = self.grid.dt();
        let r = self.singular_values.iter().filter(|&&s| s > 1e-9 * self.singular_values[0].max(1e-300)).count();
        let check = |m: &CMatrix| {
            let m = m.columns(0, r);
            let gram = m.adjoint() * m * Complex64::new(dt, 0.0);
            linalg::max_abs(&(gram - CMatrix::identity(r, r)))
        };
        check(&self.input_modes).max(check(&self.output_modes))
    }

    /// `‖G − Σ λ_k φ_k u_k†‖_max` in amplitude space.
    pub fn reconstruction_residual(&self) -> f64 {
        let dt = self.grid.dt();
        let mut acc = CMatrix::zeros(self.matrix.nrows(), self.matrix.ncols());
        for (k, &s) in self.singular_values.iter().enumerate() {
            acc += self.output_modes.column(k) * self.input_modes.column(k).adjoint() * Complex64::new(s * dt, 0.0);
        }
        linalg::max_abs(&(acc - &self.matrix))
    }

    /// Retrieved weight `W = Tr[G K G†]` and output purity for a folded input
    /// state `K = ρ·dt`, using the low-rank factors when available.
    pub fn weight_and_purity(&self, k: &CMatrix) -> (f64, f64) {
        match &self.factors {
            Some(f) => {
                let m = &f.read_in * k * f.read_in.adjoint();
                let nm = f.read_out.adjoint() * &f.read_out * m;
                let w = linalg::real_trace(&nm);
                let p = linalg::hermitian_overlap(&nm, &nm.adjoint());
                (w, if w > 0.0 { p / (w * w) } else { 0.0 })
            }
            None => {
                let out = &self.matrix * k * self.matrix.adjoint();
                let w = linalg::real_trace(&out);
                let p = linalg::hermitian_overlap(&out, &out);
                (w, if w > 0.0 { p / (w * w) } else { 0.0 })
            }
        }
    }
}

/// Builds the Green operator for a read-in/read-out pulse pair, computes
/// its SVD and verifies linearity against direct integration.
pub fn green_function(config: &BufferConfig, read_in: &ControlPulse, read_out: &ControlPulse, grid: &TimeGrid) -> Result<GreenOperator> {
    let mut g = green_function_unchecked(config, read_in, read_out, grid)?;
    g.linearity_residual = Some(linearity_check(&g, config, read_in, read_out)?);
    Ok(g)
}

/// [`green_function`] without the build-time linearity spot-check.
pub fn green_function_unchecked(
    config: &BufferConfig,
    read_in: &ControlPulse,
    read_out: &ControlPulse,
    grid: &TimeGrid,
) -> Result<GreenOperator> {
    let factors = green_factors(config, read_in, read_out, grid)?;
    let mut g = GreenOperator::from_factors(*grid, factors)?;
    g.metadata = Some(GreenMetadata {
        config: *config,
        read_in: read_in.clone(),
        read_out: read_out.clone(),
        delta_omega: 0.0,
    });
    Ok(g)
}

/// Validates a configuration and control pair, including window overlap.
pub fn green_factors_check(config: &BufferConfig, read_in: &ControlPulse, read_out: &ControlPulse) -> Result<()> {
    validate_inputs(config, read_in, read_out)
}

/// Read-in and read-out factors without forming or decomposing `G`.
pub fn green_factors(config: &BufferConfig, read_in: &ControlPulse, read_out: &ControlPulse, grid: &TimeGrid) -> Result<GreenFactors> {
    green_factors_check(config, read_in, read_out)?;
    Ok(GreenFactors {
        read_in: read_in_factor(config, read_in, grid)?,
        read_out: read_out_factor(config, read_out, grid)?,
    })
}

/// `n_z × n` stored spin wave per unit input amplitude, storage decay
/// included.
pub fn read_in_factor(config: &BufferConfig, read_in: &ControlPulse, grid: &TimeGrid) -> Result<CMatrix> {
    config.validate()?;
    read_in.validate("read_in")?;
    let stage = Stage::new(config, read_in, grid)?;
    let mut t = read_in_operator(&stage, grid.len(), grid.dt())?;
    t.scale_mut(config.storage_factor());
    Ok(t)
}

/// `n × n_z` output amplitude per unit stored spin wave.
pub fn read_out_factor(config: &BufferConfig, read_out: &ControlPulse, grid: &TimeGrid) -> Result<CMatrix> {
    config.validate()?;
    read_out.validate("read_out")?;
    let stage = Stage::new(config, read_out, grid)?;
    read_out_operator(&stage, grid.len(), grid.dt())
}

fn linearity_check(g: &GreenOperator, config: &BufferConfig, read_in: &ControlPulse, read_out: &ControlPulse) -> Result<f64> {
    let n = g.grid.len();
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let draw = |rng: &mut ChaCha8Rng| Complex64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5);
    let a = draw(&mut rng);
    let b = draw(&mut rng);
    let x: Vec<Complex64> = (0..n).map(|_| draw(&mut rng)).collect();
    let y: Vec<Complex64> = (0..n).map(|_| draw(&mut rng)).collect();
    let mix: Vec<Complex64> = x.iter().zip(&y).map(|(x, y)| a * x + b * y).collect();
    let direct = solve_eom(config, read_in, read_out, &g.grid, &mix)?.s_out;
    let ax = g.apply(&x);
    let by = g.apply(&y);
    let residual = direct
        .iter()
        .zip(ax.iter().zip(&by))
        .map(|(d, (gx, gy))| (d - a * gx - b * gy).norm())
        .fold(0.0, f64::max);
    let scale = direct.iter().map(|d| d.norm()).fold(0.0, f64::max).max(1.0);
    let rel = residual / scale;
    if rel > 1e-8 {
        log::warn!("Green operator linearity residual {rel:.2e}");
    }
    Ok(rel)
}

/// Output state and retrieved weight `W` for input `rho_in`.
///
/// The output is `G ρ G† / W`, which equals the normalized sum over the
/// input eigenmodes `ψ_k` of `α_k |Gψ_k⟩⟨Gψ_k|`.
pub fn buffer_output_state(g: &GreenOperator, rho_in: &ModeState) -> Result<(ModeState, f64)> {
    if rho_in.domain() != Domain::Time {
        return Err(Error::WrongDomain { expected: "time" });
    }
    if !rho_in.grid().matches(g.grid()) {
        return Err(Error::GridMismatch);
    }
    let raw = &g.matrix * rho_in.weighted() * g.matrix.adjoint();
    let w = linalg::real_trace(&raw);
    if w <= ZERO_W {
        return Err(Error::ZeroTrace(w.max(0.0)));
    }
    let state = project_weighted(raw.unscale(w), g.grid(), Domain::Time)?;
    Ok((state, w))
}

/// Green operator with the retrieved carrier shifted by `delta_omega`.
#[derive(Debug, Clone)]
pub struct ShiftedReadout {
    pub green: GreenOperator,
    /// Total efficiency relative to the unshifted read-out.
    pub efficiency_ratio: f64,
}

/// Read-out with the control carrier detuned by `delta_omega`.
///
/// The retrieved envelope picks up `e^{−iδω t}`; phase mismatch across the
/// medium is taken as unity, so efficiencies are unchanged.
pub fn shifted_readout(
    config: &BufferConfig,
    read_in: &ControlPulse,
    read_out: &ControlPulse,
    grid: &TimeGrid,
    delta_omega: f64,
) -> Result<ShiftedReadout> {
    let limit = grid.nyquist();
    if !delta_omega.is_finite() || delta_omega.abs() > limit {
        return Err(Error::NyquistExceeded {
            shift: delta_omega,
            limit,
        });
    }
    let base = green_function(config, read_in, read_out, grid)?;
    let green = shift_output(&base, delta_omega)?;
    let total = |g: &GreenOperator| g.efficiencies().iter().sum::<f64>();
    let reference = total(&base);
    let efficiency_ratio = if reference > 0.0 { total(&green) / reference } else { 1.0 };
    Ok(ShiftedReadout { green, efficiency_ratio })
}

fn shift_output(g: &GreenOperator, delta_omega: f64) -> Result<GreenOperator> {
    if delta_omega == 0.0 {
        return Ok(g.clone());
    }
    let phases: Vec<Complex64> = g.grid.points().iter().map(|&t| Complex64::from_polar(1.0, -delta_omega * t)).collect();
    let mut out = g.clone();
    for (i, p) in phases.iter().enumerate() {
        out.matrix.row_mut(i).scale_mut_c(*p);
        out.output_modes.row_mut(i).scale_mut_c(*p);
        if let Some(f) = out.factors.as_mut() {
            f.read_out.row_mut(i).scale_mut_c(*p);
        }
    }
    if let Some(m) = out.metadata.as_mut() {
        m.delta_omega = delta_omega;
    }
    Ok(out)
}

trait ScaleC {
    fn scale_mut_c(&mut self, c: Complex64);
}

impl<R: nalgebra::Dim, C: nalgebra::Dim, S: nalgebra::StorageMut<Complex64, R, C>> ScaleC for nalgebra::Matrix<Complex64, R, C, S> {
    fn scale_mut_c(&mut self, c: Complex64) {
        self.iter_mut().for_each(|z| *z *= c);
    }
}

pub(crate) fn set_metadata(g: &mut GreenOperator, metadata: Option<GreenMetadata>, residual: Option<f64>) {
    g.metadata = metadata;
    g.linearity_residual = residual;
}
