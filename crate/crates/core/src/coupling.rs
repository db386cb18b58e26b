//! Orchestration of the full operator splitting. Per hyperbolic step:
//! recompute the nonlocal velocity from the start-of-step prey density,
//! advance the predators by Lax–Friedrichs sweeps (alternating order) plus
//! the RK2 source, advance the preys by `⌈Δt_H/Δt_P⌉` diffusion+source
//! substeps against the post-transport predators, then pin the boundary
//! ring back to the initial data.

use crate::error::SimError;
use crate::grid::Field;
use crate::hyperbolic::{cfl_dt, lax_friedrichs_sweep, source_rk2, Axis, HyperbolicStepConfig};
use crate::kernel::KernelTable;
use crate::parabolic::{diffusion_step, parabolic_dt, source_euler, ParabolicStepConfig};
use crate::velocity::{nonlocal_velocity, Extension};

/// Model rates and kernel parameters: predator growth α and mortality β,
/// prey growth γ and mortality δ, prey diffusivity μ, maximal predator
/// speed κ and kernel radius ℓ.
#[derive(Debug, Clone, Copy)]
pub struct ModelParams {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub delta: f64,
    pub mu: f64,
    pub kappa: f64,
    pub ell: f64,
}

impl ModelParams {
    pub fn validate(&self) -> Result<(), SimError> {
        for (name, v) in [
            ("alpha", self.alpha),
            ("beta", self.beta),
            ("gamma", self.gamma),
            ("delta", self.delta),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(SimError::InvalidParameter(format!("{name} must be >= 0, got {v}")));
            }
        }
        if !(self.mu > 0.0 && self.mu.is_finite()) {
            return Err(SimError::InvalidParameter(format!("mu must be > 0, got {}", self.mu)));
        }
        if !(self.kappa > 0.0 && self.kappa.is_finite()) {
            return Err(SimError::InvalidParameter(format!(
                "kappa must be > 0, got {}",
                self.kappa
            )));
        }
        if !(self.ell > 0.0 && self.ell.is_finite()) {
            return Err(SimError::InvalidParameter(format!("ell must be > 0, got {}", self.ell)));
        }
        Ok(())
    }
}

/// The evolving pair (u, w) plus the frozen initial data used by the
/// boundary policy and the bound audits.
#[derive(Debug, Clone)]
pub struct SimState {
    pub t: f64,
    pub u: Field,
    pub w: Field,
    pub u0: Field,
    pub w0: Field,
    pub step_index: u64,
}

impl SimState {
    pub fn new(u0: Field, w0: Field) -> Result<Self, SimError> {
        if u0.grid != w0.grid {
            return Err(SimError::InvalidParameter(
                "predator and prey fields live on different grids".into(),
            ));
        }
        if u0.min() < 0.0 || w0.min() < 0.0 {
            return Err(SimError::InvalidParameter("initial data must be nonnegative".into()));
        }
        Ok(SimState { t: 0.0, u: u0.clone(), w: w0.clone(), u0, w0, step_index: 0 })
    }
}

/// Overwrite the outermost cell ring of `f` with the values of `f0`.
pub fn apply_boundary(f: &Field, f0: &Field) -> Field {
    debug_assert_eq!(f.grid, f0.grid);
    let g = f.grid;
    let mut out = f.clone();
    for ix in 0..g.nx {
        out.set(ix, 0, f0.get(ix, 0));
        out.set(ix, g.ny - 1, f0.get(ix, g.ny - 1));
    }
    for iy in 0..g.ny {
        out.set(0, iy, f0.get(0, iy));
        out.set(g.nx - 1, iy, f0.get(g.nx - 1, iy));
    }
    out
}

/// True when the outermost cell ring of `f` equals that of `f0` bit-for-bit.
pub fn boundary_matches(f: &Field, f0: &Field) -> bool {
    let g = f.grid;
    (0..g.nx).all(|ix| {
        f.get(ix, 0) == f0.get(ix, 0) && f.get(ix, g.ny - 1) == f0.get(ix, g.ny - 1)
    }) && (0..g.ny).all(|iy| {
        f.get(0, iy) == f0.get(0, iy) && f.get(g.nx - 1, iy) == f0.get(g.nx - 1, iy)
    })
}

#[derive(Debug, Clone, Copy)]
pub struct StepInfo {
    /// Hyperbolic step actually taken.
    pub dt: f64,
    /// Number of parabolic substeps inside it.
    pub n_sub: u32,
}

/// Advance the state by one hyperbolic step (capped at `dt_cap` when given).
pub fn step(
    s: &mut SimState,
    p: &ModelParams,
    table: &KernelTable,
    hcfg: &HyperbolicStepConfig,
    pcfg: &ParabolicStepConfig,
    dt_cap: Option<f64>,
) -> Result<StepInfo, SimError> {
    // (i) velocity from the start-of-step prey density, frozen over the step
    let c = nonlocal_velocity(&s.w, table, p.kappa, Extension::Frozen(&s.w0));

    // (ii) transport step from the CFL condition
    let mut dt = cfl_dt(&c, &s.u.grid, hcfg);
    if let Some(cap) = dt_cap {
        dt = dt.min(cap);
    }

    // (iii) predators: two LF sweeps in alternating order, then the source
    let (first, second) = if s.step_index % 2 == 0 {
        (Axis::X, Axis::Y)
    } else {
        (Axis::Y, Axis::X)
    };
    let comp = |axis: Axis| match axis {
        Axis::X => &c.vx,
        Axis::Y => &c.vy,
    };
    let u = lax_friedrichs_sweep(&s.u, comp(first), first, dt)?;
    let u = lax_friedrichs_sweep(&u, comp(second), second, dt)?;
    let u = source_rk2(&u, &s.w, p.alpha, p.beta, dt);

    // (iv) preys: substeps sized to land exactly on the hyperbolic clock,
    // with the post-transport predators frozen
    let dt_p = parabolic_dt(p.mu, &s.w.grid, pcfg);
    let n_sub = ((dt / dt_p).ceil() as u32).max(1);
    let dt_sub = dt / n_sub as f64;
    let mut w = s.w.clone();
    for _ in 0..n_sub {
        w = diffusion_step(&w, p.mu, dt_sub)?;
        w = source_euler(&w, &u, p.gamma, p.delta, dt_sub);
    }

    // (v) boundary policy: both densities stay equal to the initial datum
    let u = apply_boundary(&u, &s.u0);
    let w = apply_boundary(&w, &s.w0);

    // fail fast on non-finite values instead of clamping
    if !u.all_finite() {
        return Err(SimError::Diverged { field: "u", step: s.step_index, t: s.t });
    }
    if !w.all_finite() {
        return Err(SimError::Diverged { field: "w", step: s.step_index, t: s.t });
    }

    s.u = u;
    s.w = w;
    s.t += dt;
    s.step_index += 1;
    Ok(StepInfo { dt, n_sub })
}

/// Step repeatedly until `t_end`, shortening the final step to land on it
/// exactly. The observer runs after every step.
pub fn run(
    s: &mut SimState,
    p: &ModelParams,
    table: &KernelTable,
    hcfg: &HyperbolicStepConfig,
    pcfg: &ParabolicStepConfig,
    t_end: f64,
    mut observe: impl FnMut(&SimState, &StepInfo),
) -> Result<(), SimError> {
    if !(t_end > s.t) {
        return Err(SimError::InvalidParameter(format!(
            "t_end = {t_end} does not lie ahead of t = {}",
            s.t
        )));
    }
    while s.t < t_end {
        let remaining = t_end - s.t;
        let info = step(s, p, table, hcfg, pcfg, Some(remaining))?;
        if info.dt >= remaining * (1.0 - 1e-12) {
            s.t = t_end;
        }
        observe(s, &info);
    }
    Ok(())
}
