//! Audits of the discrete solution against the analytical growth and
//! propagation-speed bounds, plus the qualitative observables (mass series,
//! peak structure). Bounds are computed only from the initial-datum norms,
//! the model rates and the kernel constant K, never from the evolving
//! solution.

use crate::coupling::{ModelParams, SimState};
use crate::grid::Field;

/// Default multiplicative slack on the growth audits: discrete schemes are
/// not exactly dominated by the continuum bounds.
pub const AUDIT_TOL: f64 = 0.10;

/// Default relative height threshold for peak detection.
pub const PEAK_REL_THRESHOLD: f64 = 0.25;

/// `(e^{γt} − 1)/γ`, continued by its limit `t` at γ = 0.
fn expm1_over(gamma: f64, t: f64) -> f64 {
    if gamma == 0.0 {
        t
    } else {
        (gamma * t).exp_m1() / gamma
    }
}

/// Norm growth bounds at time t, from the initial norms:
/// `‖u(t)‖₁   ≤ ‖u₀‖₁ · exp(α (e^{γt}−1)/γ · ‖w₀‖_∞)`,
/// `‖u(t)‖_∞ ≤ ‖u₀‖_∞ · exp((α+K)(e^{γt}−1)/γ · ‖w₀‖_∞)`,
/// `‖w(t)‖₁   ≤ ‖w₀‖₁ · e^{γt}`,  `‖w(t)‖_∞ ≤ ‖w₀‖_∞ · e^{γt}`.
#[derive(Debug, Clone, Copy)]
pub struct GrowthBounds {
    pub l1_u: f64,
    pub linf_u: f64,
    pub l1_w: f64,
    pub linf_w: f64,
}

pub fn growth_bounds(p: &ModelParams, k: f64, u0: &Field, w0: &Field, t: f64) -> GrowthBounds {
    let w0_inf = w0.linf_norm();
    let e = expm1_over(p.gamma, t);
    let egt = (p.gamma * t).exp();
    GrowthBounds {
        l1_u: u0.l1_norm() * (p.alpha * e * w0_inf).exp(),
        linf_u: u0.linf_norm() * ((p.alpha + k) * e * w0_inf).exp(),
        l1_w: w0.l1_norm() * egt,
        linf_w: w0.linf_norm() * egt,
    }
}

/// Support bound `ρ(t) = ρ₀ + K·t·e^{γt}·‖w₀‖₁`.
pub fn support_bound(rho0: f64, k: f64, gamma: f64, l1_w0: f64, t: f64) -> f64 {
    rho0 + k * t * (gamma * t).exp() * l1_w0
}

/// One audited observation of the running solution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AuditRecord {
    pub t: f64,
    pub l1_u: f64,
    pub linf_u: f64,
    pub l1_w: f64,
    pub linf_w: f64,
    pub tv_u: f64,
    pub support_u: f64,
    pub bound_l1_u: f64,
    pub bound_linf_u: f64,
    pub bound_l1_w: f64,
    pub bound_linf_w: f64,
    pub bound_support: f64,
    pub growth_ok: bool,
    pub support_ok: bool,
}

/// Evaluates audit records against bounds frozen from the initial data.
#[derive(Debug, Clone)]
pub struct BoundAuditor {
    params: ModelParams,
    k: f64,
    u0: Field,
    w0: Field,
    rho0: f64,
    l1_w0: f64,
    /// Slack on the growth bounds (default [`AUDIT_TOL`]).
    pub tol: f64,
}

impl BoundAuditor {
    pub fn new(params: ModelParams, k: f64, u0: &Field, w0: &Field) -> Self {
        BoundAuditor {
            params,
            k,
            u0: u0.clone(),
            w0: w0.clone(),
            rho0: u0.support_radius_auto(),
            l1_w0: w0.l1_norm(),
            tol: AUDIT_TOL,
        }
    }

    pub fn k(&self) -> f64 {
        self.k
    }

    pub fn evaluate(&self, t: f64, u: &Field, w: &Field) -> AuditRecord {
        let b = growth_bounds(&self.params, self.k, &self.u0, &self.w0, t);
        let bound_support = support_bound(self.rho0, self.k, self.params.gamma, self.l1_w0, t);
        let (l1_u, linf_u) = (u.l1_norm(), u.linf_norm());
        let (l1_w, linf_w) = (w.l1_norm(), w.linf_norm());
        let support_u = u.support_radius_auto();
        let slack = 1.0 + self.tol;
        let growth_ok = l1_u <= b.l1_u * slack
            && linf_u <= b.linf_u * slack
            && l1_w <= b.l1_w * slack
            && linf_w <= b.linf_w * slack;
        // one kernel radius of slack: the discrete velocity support widens
        // by at most ℓ per step relative to the continuum estimate
        let support_ok = support_u <= bound_support + self.params.ell;
        AuditRecord {
            t,
            l1_u,
            linf_u,
            l1_w,
            linf_w,
            tv_u: u.total_variation(),
            support_u,
            bound_l1_u: b.l1_u,
            bound_linf_u: b.linf_u,
            bound_l1_w: b.l1_w,
            bound_linf_w: b.linf_w,
            bound_support,
            growth_ok,
            support_ok,
        }
    }

    pub fn evaluate_state(&self, s: &SimState) -> AuditRecord {
        self.evaluate(s.t, &s.u, &s.w)
    }
}

/// A strict local maximum of the predator density.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Peak {
    pub x: f64,
    pub y: f64,
    pub height: f64,
}

#[derive(Debug, Clone)]
pub struct PeakSet {
    pub peaks: Vec<Peak>,
    /// Mean over peaks of the distance to the closest other peak; absent
    /// with fewer than two peaks.
    pub mean_nn_spacing: Option<f64>,
}

/// Cells strictly greater than all 8 neighbors and at least
/// `rel_threshold · ‖u‖_∞` high.
pub fn detect_peaks(u: &Field, rel_threshold: f64) -> PeakSet {
    let g = u.grid;
    let floor = rel_threshold * u.linf_norm();
    let mut peaks = Vec::new();
    for iy in 1..g.ny - 1 {
        for ix in 1..g.nx - 1 {
            let v = u.get(ix, iy);
            if v < floor || v == 0.0 {
                continue;
            }
            let mut strict_max = true;
            'scan: for dy in -1i64..=1 {
                for dx in -1i64..=1 {
                    if dx == 0 && dy == 0 {
                        continue;
                    }
                    let n = u.get((ix as i64 + dx) as usize, (iy as i64 + dy) as usize);
                    if n >= v {
                        strict_max = false;
                        break 'scan;
                    }
                }
            }
            if strict_max {
                peaks.push(Peak { x: g.x_center(ix), y: g.y_center(iy), height: v });
            }
        }
    }
    let mean_nn_spacing = if peaks.len() < 2 {
        None
    } else {
        let mut total = 0.0;
        for (i, p) in peaks.iter().enumerate() {
            let nearest = peaks
                .iter()
                .enumerate()
                .filter(|(j, _)| *j != i)
                .map(|(_, q)| ((p.x - q.x).powi(2) + (p.y - q.y).powi(2)).sqrt())
                .fold(f64::INFINITY, f64::min);
            total += nearest;
        }
        Some(total / peaks.len() as f64)
    };
    PeakSet { peaks, mean_nn_spacing }
}

/// Time-ordered `(t, ∫u, ∫w)` table extracted from recorded diagnostics
/// (densities are nonnegative, so the L¹ columns are the domain integrals).
pub fn mass_series(records: &[AuditRecord]) -> Vec<(f64, f64, f64)> {
    records.iter().map(|r| (r.t, r.l1_u, r.l1_w)).collect()
}

/// Locate a strict interior minimum of the `∫u` series followed by a rise of
/// at least `rise_frac` relative to the minimum; returns the minimum time
/// and the observed relative rise.
pub fn dip_and_rise(series: &[(f64, f64, f64)], rise_frac: f64) -> Option<(f64, f64)> {
    if series.len() < 3 {
        return None;
    }
    let (mut i_min, mut v_min) = (0, f64::INFINITY);
    for (i, (_, u, _)) in series.iter().enumerate() {
        if *u < v_min {
            v_min = *u;
            i_min = i;
        }
    }
    if i_min == 0 || i_min == series.len() - 1 || v_min <= 0.0 {
        return None;
    }
    let later_max = series[i_min + 1..].iter().map(|(_, u, _)| *u).fold(0.0f64, f64::max);
    let rise = later_max / v_min - 1.0;
    (rise >= rise_frac).then_some((series[i_min].0, rise))
}
