//! One time step of the prey equation `∂t w − μΔw = a w`: explicit 5-point
//! finite differences for the diffusion and a forward Euler update for the
//! source.

use crate::error::SimError;
use crate::grid::{Field, GridSpec};

#[derive(Debug, Clone, Copy)]
pub struct ParabolicStepConfig {
    /// Multiplier under the explicit stability limit, in (0, 1].
    pub safety: f64,
}

impl Default for ParabolicStepConfig {
    fn default() -> Self {
        ParabolicStepConfig { safety: 0.9 }
    }
}

impl ParabolicStepConfig {
    pub fn new(safety: f64) -> Result<Self, SimError> {
        if !(safety > 0.0 && safety <= 1.0) {
            return Err(SimError::InvalidParameter(format!(
                "parabolic safety factor must lie in (0, 1], got {safety}"
            )));
        }
        Ok(ParabolicStepConfig { safety })
    }
}

/// Diffusion time step `Δt = safety / (2μ(1/dx² + 1/dy²))`, the explicit
/// 5-point stability bound scaled by the safety factor.
pub fn parabolic_dt(mu: f64, g: &GridSpec, cfg: &ParabolicStepConfig) -> f64 {
    cfg.safety / (2.0 * mu * (1.0 / (g.dx * g.dx) + 1.0 / (g.dy * g.dy)))
}

/// `w' = w + μ·dt·(D²x w + D²y w)` with the standard 5-point Laplacian on
/// interior cells; the boundary ring is copied through for the driver's
/// boundary policy to overwrite.
pub fn diffusion_step(w: &Field, mu: f64, dt: f64) -> Result<Field, SimError> {
    let g = w.grid;
    let limit = 1.0 / (2.0 * mu * (1.0 / (g.dx * g.dx) + 1.0 / (g.dy * g.dy)));
    if dt > limit * (1.0 + 1e-12) {
        return Err(SimError::StepRejected(format!(
            "diffusion stability violation: dt = {dt} > {limit}"
        )));
    }
    let cx = mu * dt / (g.dx * g.dx);
    let cy = mu * dt / (g.dy * g.dy);
    let mut out = w.clone();
    let nx = g.nx;
    for iy in 1..g.ny - 1 {
        let (below, mid, above) = (w.row(iy - 1), w.row(iy), w.row(iy + 1));
        let or = &mut out.as_mut_slice()[iy * nx..(iy + 1) * nx];
        for ix in 1..nx - 1 {
            let lap_x = mid[ix - 1] + mid[ix + 1] - 2.0 * mid[ix];
            let lap_y = below[ix] + above[ix] - 2.0 * mid[ix];
            or[ix] = mid[ix] + (cx * lap_x + cy * lap_y);
        }
    }
    Ok(out)
}

/// Forward Euler update of `∂t w = (γ − δu)w` with u frozen:
/// `w' = w·(1 + dt·(γ − δ·u))` per cell.
pub fn source_euler(w: &Field, u: &Field, gamma: f64, delta: f64, dt: f64) -> Field {
    debug_assert_eq!(w.grid, u.grid, "source fields live on different grids");
    let mut out = w.clone();
    for (o, u) in out.as_mut_slice().iter_mut().zip(u.as_slice()) {
        *o *= 1.0 + dt * (gamma - delta * u);
    }
    out
}
