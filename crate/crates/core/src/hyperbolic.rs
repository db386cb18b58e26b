//! One time step of the predator balance law `∂t u + div(c u) = b u`:
//! Lax–Friedrichs sweeps with dimensional splitting for the transport part
//! and a second-order Runge–Kutta update for the source.

use crate::error::SimError;
use crate::grid::{Field, GridSpec};
use crate::velocity::VelocityField;

#[derive(Debug, Clone, Copy)]
pub struct HyperbolicStepConfig {
    /// Courant number in (0, 1]; 0.45 leaves headroom under the per-sweep
    /// stability limit of the splitting.
    pub cfl_number: f64,
}

impl Default for HyperbolicStepConfig {
    fn default() -> Self {
        HyperbolicStepConfig { cfl_number: 0.45 }
    }
}

impl HyperbolicStepConfig {
    pub fn new(cfl_number: f64) -> Result<Self, SimError> {
        if !(cfl_number > 0.0 && cfl_number <= 1.0) {
            return Err(SimError::InvalidParameter(format!(
                "cfl number must lie in (0, 1], got {cfl_number}"
            )));
        }
        Ok(HyperbolicStepConfig { cfl_number })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    X,
    Y,
}

/// Transport time step from the CFL condition:
/// `Δt = cfl · min(dx, dy) / max(max|vx|, max|vy|, κ·1e−6)`, additionally
/// capped by `cfl · min(dx, dy) / κ`. Since cell speeds never exceed κ, the
/// cap is the binding a-priori bound.
pub fn cfl_dt(c: &VelocityField, g: &GridSpec, cfg: &HyperbolicStepConfig) -> f64 {
    let h = g.dx.min(g.dy);
    let speed = c.max_component().max(c.kappa * 1e-6);
    (cfg.cfl_number * h / speed).min(cfg.cfl_number * h / c.kappa)
}

/// One Lax–Friedrichs sweep along the given axis:
/// `u'_j = ½(u_{j−1} + u_{j+1}) − (dt/2h)·(c_{j+1} u_{j+1} − c_{j−1} u_{j−1})`.
///
/// The first and last cells along the axis are copied through; the driver's
/// boundary policy overwrites the full ring afterwards.
pub fn lax_friedrichs_sweep(
    u: &Field,
    c_component: &Field,
    axis: Axis,
    dt: f64,
) -> Result<Field, SimError> {
    let g = u.grid;
    let h = match axis {
        Axis::X => g.dx,
        Axis::Y => g.dy,
    };
    let cmax = c_component.linf_norm();
    if dt * cmax > h * (1.0 + 1e-12) {
        return Err(SimError::StepRejected(format!(
            "CFL violation on {axis:?} sweep: dt·max|c| = {} > h = {h}",
            dt * cmax
        )));
    }
    let nu = dt / (2.0 * h);
    let mut out = u.clone();
    match axis {
        Axis::X => {
            for iy in 0..g.ny {
                let ur = u.row(iy);
                let cr = c_component.row(iy);
                let or = &mut out.as_mut_slice()[iy * g.nx..(iy + 1) * g.nx];
                for ix in 1..g.nx - 1 {
                    or[ix] = 0.5 * (ur[ix - 1] + ur[ix + 1])
                        - nu * (cr[ix + 1] * ur[ix + 1] - cr[ix - 1] * ur[ix - 1]);
                }
            }
        }
        Axis::Y => {
            let nx = g.nx;
            for iy in 1..g.ny - 1 {
                let (below, above) = (u.row(iy - 1), u.row(iy + 1));
                let (cb, ca) = (c_component.row(iy - 1), c_component.row(iy + 1));
                let or = &mut out.as_mut_slice()[iy * nx..(iy + 1) * nx];
                for ix in 0..nx {
                    or[ix] = 0.5 * (below[ix] + above[ix])
                        - nu * (ca[ix] * above[ix] - cb[ix] * below[ix]);
                }
            }
        }
    }
    Ok(out)
}

/// Second-order Runge–Kutta update of `∂t u = (αw − β)u` with w frozen over
/// the substep. For this linear right-hand side both Heun and midpoint
/// collapse to the factor `1 + r·dt + ½(r·dt)²`, the second-order truncation
/// of the exact `e^{r·dt}`; the factor is nonnegative for every real r.
pub fn source_rk2(u: &Field, w: &Field, alpha: f64, beta: f64, dt: f64) -> Field {
    debug_assert_eq!(u.grid, w.grid, "source fields live on different grids");
    let mut out = u.clone();
    for (o, w) in out.as_mut_slice().iter_mut().zip(w.as_slice()) {
        let r = alpha * w - beta;
        let rdt = r * dt;
        *o *= 1.0 + rdt + 0.5 * rdt * rdt;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::GridSpec;
    use approx::assert_relative_eq;

    fn grid(h: f64) -> GridSpec {
        GridSpec::from_cell_size(-1.0, 1.0, -1.0, 1.0, h).unwrap()
    }

    #[test]
    fn cfl_dt_uses_the_kappa_cap_for_slow_velocities() {
        let g = grid(0.01);
        let cfg = HyperbolicStepConfig::default();
        let zero = VelocityField::constant(g, 0.0, 0.0, 1.0);
        assert_relative_eq!(cfl_dt(&zero, &g, &cfg), 0.45 * 0.01, max_relative = 1e-12);
    }

    #[test]
    fn cfl_dt_formula_at_unit_speed() {
        let g = GridSpec::from_cell_size(-1.0, 1.0, -2.0, 2.0, 0.005).unwrap();
        let cfg = HyperbolicStepConfig::default();
        let c = VelocityField::constant(g, 1.0, 0.0, 1.0);
        assert_relative_eq!(cfl_dt(&c, &g, &cfg), 0.00225, max_relative = 1e-12);
    }

    #[test]
    fn cfl_dt_is_linear_in_the_courant_number() {
        let g = grid(0.02);
        let c = VelocityField::constant(g, 0.7, 0.2, 1.0);
        let dt1 = cfl_dt(&c, &g, &HyperbolicStepConfig::new(0.3).unwrap());
        let dt2 = cfl_dt(&c, &g, &HyperbolicStepConfig::new(0.6).unwrap());
        assert_relative_eq!(dt2, 2.0 * dt1, max_relative = 1e-12);
    }

    #[test]
    fn config_rejects_bad_courant_numbers() {
        assert!(HyperbolicStepConfig::new(0.0).is_err());
        assert!(HyperbolicStepConfig::new(1.5).is_err());
    }

    #[test]
    fn sweep_of_zero_is_zero() {
        let g = grid(0.1);
        let u = Field::zeros(g);
        let c = Field::constant(g, 0.5);
        let out = lax_friedrichs_sweep(&u, &c, Axis::X, 0.01).unwrap();
        assert!(out.as_slice().iter().all(|v| *v == 0.0));
    }

    #[test]
    fn sweep_rejects_cfl_violations() {
        let g = grid(0.1);
        let u = Field::zeros(g);
        let c = Field::constant(g, 2.0);
        assert!(matches!(
            lax_friedrichs_sweep(&u, &c, Axis::X, 0.1),
            Err(SimError::StepRejected(_))
        ));
    }

    #[test]
    fn delta_splits_with_the_stencil_weights() {
        // c ≡ 1: one sweep moves a discrete delta to its neighbors with
        // weights ½ ∓ dt/(2h).
        let g = grid(0.1);
        let mut u = Field::zeros(g);
        u.set(10, 10, 1.0);
        let c = Field::constant(g, 1.0);
        let dt = 0.04;
        let out = lax_friedrichs_sweep(&u, &c, Axis::X, dt).unwrap();
        let nu = dt / (2.0 * g.dx);
        assert_relative_eq!(out.get(9, 10), 0.5 + nu, max_relative = 1e-14);
        assert_relative_eq!(out.get(11, 10), 0.5 - nu, max_relative = 1e-14);
        assert_eq!(out.get(10, 10), 0.0);
    }

    #[test]
    fn sweeps_conserve_interior_mass() {
        let g = grid(0.05);
        let u = Field::from_fn(g, |x, y| {
            let s = 1.0 - (x * x + y * y) / 0.09;
            if s > 0.0 {
                s * s
            } else {
                0.0
            }
        });
        let c = Field::from_fn(g, |x, y| 0.4 * (x + 0.3 * y).sin());
        let dt = 0.45 * g.dx / 0.4;
        let mass0 = u.l1_norm();
        let out = lax_friedrichs_sweep(&u, &c, Axis::X, dt).unwrap();
        let out = lax_friedrichs_sweep(&out, &c, Axis::Y, dt).unwrap();
        assert!((out.l1_norm() - mass0).abs() <= 1e-12 * mass0);
    }

    #[test]
    fn sweep_keeps_nonnegative_data_nonnegative() {
        let g = grid(0.05);
        let u = Field::from_fn(g, |x, y| (1.0 - x * x - y * y).max(0.0));
        let c = Field::from_fn(g, |x, _| x.cos());
        let dt = 0.45 * g.dx; // max|c| <= 1
        let out = lax_friedrichs_sweep(&u, &c, Axis::X, dt).unwrap();
        assert!(out.min() >= 0.0);
    }

    #[test]
    fn rk2_source_examples() {
        let g = grid(0.1);
        let u = Field::constant(g, 2.0);
        let w = Field::constant(g, 3.0);
        // α = β = 0: unchanged
        let out = source_rk2(&u, &w, 0.0, 0.0, 0.3);
        assert_eq!(out.get(4, 4), 2.0);
        // w = 0, β = 1, dt = 0.1: factor 1 − 0.1 + 0.005 = 0.905
        let out = source_rk2(&u, &Field::zeros(g), 0.0, 1.0, 0.1);
        assert_relative_eq!(out.get(4, 4), 2.0 * 0.905, max_relative = 1e-14);
    }

    #[test]
    fn rk2_truncation_error_is_third_order() {
        // against the exact factor e^{r·dt}: halving dt shrinks the per-step
        // error by about 8x
        let g = GridSpec::new(0.0, 1.0, 0.0, 1.0, 3, 3).unwrap();
        let u = Field::constant(g, 1.0);
        let w = Field::constant(g, 1.0);
        let (alpha, beta) = (0.8, 0.3);
        let r = alpha - beta;
        let err = |dt: f64| {
            let out = source_rk2(&u, &w, alpha, beta, dt);
            (out.get(1, 1) - (r * dt).exp()).abs()
        };
        let (e1, e2) = (err(0.1), err(0.05));
        let shrink = e1 / e2;
        assert!(
            (6.0..10.0).contains(&shrink),
            "expected ~8x error reduction, got {shrink} ({e1} -> {e2})"
        );
    }
}
