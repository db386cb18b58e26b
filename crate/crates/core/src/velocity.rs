//! The nonlocal drift `v(w) = κ ∇(w*η) / √(1 + ‖∇(w*η)‖²)`.
//!
//! The gradient of the averaged prey density is computed as `w * ∇η` with the
//! analytic gradient stencils (never by differencing `w*η`), so the identity
//! `∇(w*η) = w*∇η` is exact and the resulting speed is strictly below κ at
//! every cell.
//!
//! Convolution sums are accumulated in mirrored pairs `(+p, −p)` and
//! `(+q, −q)`, which makes reflection and translation equivariance of the
//! velocity bit-exact away from the boundary and keeps results independent of
//! any evaluation schedule.

use crate::error::SimError;
use crate::grid::{Field, GridSpec};
use crate::kernel::{KernelNorms, KernelTable, Stencil};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// How convolution samples outside the computational domain are supplied.
#[derive(Clone, Copy)]
pub enum Extension<'a> {
    /// Outside samples are zero (free-space convolution of compact data).
    Zero,
    /// Outside samples are taken from a frozen field (the initial prey
    /// datum in scenario runs), clamped to its nearest boundary cell.
    Frozen(&'a Field),
}

#[derive(Debug, Clone)]
pub struct VelocityField {
    pub vx: Field,
    pub vy: Field,
    /// Maximal speed; `√(vx² + vy²) < kappa` holds cell-wise by construction.
    pub kappa: f64,
}

impl VelocityField {
    pub fn constant(grid: GridSpec, cx: f64, cy: f64, kappa: f64) -> Self {
        VelocityField {
            vx: Field::constant(grid, cx),
            vy: Field::constant(grid, cy),
            kappa,
        }
    }

    /// max(max|vx|, max|vy|) over all cells.
    pub fn max_component(&self) -> f64 {
        self.vx.linf_norm().max(self.vy.linf_norm())
    }

    pub fn max_speed(&self) -> f64 {
        self.vx
            .as_slice()
            .iter()
            .zip(self.vy.as_slice())
            .fold(0.0f64, |m, (x, y)| m.max((x * x + y * y).sqrt()))
    }
}

#[inline]
fn convolve_cell_interior(w: &Field, st: &Stencil, ix: usize, iy: usize) -> f64 {
    let rx = st.radius_x;
    let row_sum = |q: i64| -> f64 {
        let wrow = w.row((iy as i64 - q) as usize);
        let srow = st.row(q);
        let mut s = srow[rx] * wrow[ix];
        for p in 1..=rx {
            s += srow[rx + p] * wrow[ix - p] + srow[rx - p] * wrow[ix + p];
        }
        s
    };
    let mut total = row_sum(0);
    for q in 1..=st.radius_y as i64 {
        total += row_sum(q) + row_sum(-q);
    }
    total
}

#[inline]
fn convolve_cell_edge(
    w: &Field,
    st: &Stencil,
    ix: i64,
    iy: i64,
    ext: &Extension<'_>,
) -> f64 {
    let (nx, ny) = (w.grid.nx as i64, w.grid.ny as i64);
    let sample = |jx: i64, jy: i64| -> f64 {
        if jx >= 0 && jx < nx && jy >= 0 && jy < ny {
            w.get(jx as usize, jy as usize)
        } else {
            match ext {
                Extension::Zero => 0.0,
                Extension::Frozen(f0) => {
                    f0.get(jx.clamp(0, nx - 1) as usize, jy.clamp(0, ny - 1) as usize)
                }
            }
        }
    };
    let rx = st.radius_x as i64;
    let row_sum = |q: i64| -> f64 {
        let jy = iy - q;
        let mut s = st.weight(0, q) * sample(ix, jy);
        for p in 1..=rx {
            s += st.weight(p, q) * sample(ix - p, jy) + st.weight(-p, q) * sample(ix + p, jy);
        }
        s
    };
    let mut total = row_sum(0);
    for q in 1..=st.radius_y as i64 {
        total += row_sum(q) + row_sum(-q);
    }
    total
}

/// Discrete convolution `(w * stencil)` at every cell; samples falling
/// outside the domain are supplied by the extension policy.
pub fn convolve(w: &Field, st: &Stencil, ext: Extension<'_>) -> Field {
    let g = w.grid;
    let (nx, ny) = (g.nx, g.ny);
    let (rx, ry) = (st.radius_x, st.radius_y);
    let mut out = Field::zeros(g);
    for iy in 0..ny {
        let y_inside = iy >= ry && iy + ry < ny;
        let x_lo = if y_inside { rx.min(nx) } else { nx };
        let x_hi = if y_inside { nx.saturating_sub(rx) } else { nx };
        for ix in 0..x_lo.min(x_hi) {
            out.set(ix, iy, convolve_cell_edge(w, st, ix as i64, iy as i64, &ext));
        }
        for ix in x_lo..x_hi {
            out.set(ix, iy, convolve_cell_interior(w, st, ix, iy));
        }
        for ix in x_hi.max(x_lo)..nx {
            out.set(ix, iy, convolve_cell_edge(w, st, ix as i64, iy as i64, &ext));
        }
    }
    out
}

/// `v(w) = κ (w*∇η) / √(1 + ‖w*∇η‖²)` component-wise on the grid.
pub fn nonlocal_velocity(
    w: &Field,
    table: &KernelTable,
    kappa: f64,
    ext: Extension<'_>,
) -> VelocityField {
    let gx = convolve(w, &table.grad_x, ext);
    let gy = convolve(w, &table.grad_y, ext);
    let mut vx = Field::zeros(w.grid);
    let mut vy = Field::zeros(w.grid);
    for (i, (gx, gy)) in gx.as_slice().iter().zip(gy.as_slice()).enumerate() {
        let denom = (1.0 + gx * gx + gy * gy).sqrt();
        vx.as_mut_slice()[i] = kappa * gx / denom;
        vy.as_mut_slice()[i] = kappa * gy / denom;
    }
    let v = VelocityField { vx, vy, kappa };
    debug_assert!(v.max_speed() <= kappa, "speed cap violated");
    v
}

/// Worst observed `lhs/rhs` ratios for the five boundedness and Lipschitz
/// inequalities the nonlocal velocity must satisfy.
#[derive(Debug, Clone)]
pub struct VAuditReport {
    pub trials: usize,
    pub tol: f64,
    pub k: f64,
    pub ratios: [f64; 5],
}

pub const V_AUDIT_LABELS: [&str; 5] = [
    "|v(w)|_inf        <= K |w|_1",
    "|grad v(w)|_inf   <= K |w|_inf",
    "|v(w1)-v(w2)|_inf <= K |w1-w2|_1",
    "|grad div v(w)|_1 <= C(|w|_1) |w|_1",
    "|div(v1-v2)|_1    <= C(|w2|_inf) |w1-w2|_1",
];

impl VAuditReport {
    pub fn pass(&self) -> bool {
        self.ratios.iter().all(|r| *r <= 1.0 + self.tol)
    }
}

impl std::fmt::Display for VAuditReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        writeln!(f, "condition (v) audit: {} trials, K = {:.6e}", self.trials, self.k)?;
        for (label, r) in V_AUDIT_LABELS.iter().zip(&self.ratios) {
            writeln!(f, "  {label}   worst ratio {r:.4}")?;
        }
        write!(f, "  verdict: {}", if self.pass() { "PASS" } else { "FAIL" })
    }
}

/// Default slack on the audit ratios, absorbing the O(dx) error of the
/// central differences used for ∇v and div v.
pub const V_AUDIT_TOL: f64 = 0.05;

fn ratio(lhs: f64, rhs: f64) -> f64 {
    if lhs == 0.0 {
        0.0
    } else {
        lhs / rhs
    }
}

/// Largest operator norm over interior cells of the central-difference
/// Jacobian of v.
fn jacobian_opnorm_max(v: &VelocityField) -> f64 {
    let g = v.vx.grid;
    let mut worst = 0.0f64;
    for iy in 1..g.ny - 1 {
        for ix in 1..g.nx - 1 {
            let dxvx = (v.vx.get(ix + 1, iy) - v.vx.get(ix - 1, iy)) / (2.0 * g.dx);
            let dyvx = (v.vx.get(ix, iy + 1) - v.vx.get(ix, iy - 1)) / (2.0 * g.dy);
            let dxvy = (v.vy.get(ix + 1, iy) - v.vy.get(ix - 1, iy)) / (2.0 * g.dx);
            let dyvy = (v.vy.get(ix, iy + 1) - v.vy.get(ix, iy - 1)) / (2.0 * g.dy);
            // largest singular value of the 2x2 Jacobian
            let f2 = dxvx * dxvx + dyvx * dyvx + dxvy * dxvy + dyvy * dyvy;
            let det = dxvx * dyvy - dyvx * dxvy;
            let s = ((f2 + (f2 * f2 - 4.0 * det * det).max(0.0).sqrt()) / 2.0).sqrt();
            worst = worst.max(s);
        }
    }
    worst
}

/// Central-difference divergence; the outermost ring is left at zero
/// (audit fields vanish there by construction).
fn divergence(v: &VelocityField) -> Field {
    let g = v.vx.grid;
    let mut d = Field::zeros(g);
    for iy in 1..g.ny - 1 {
        for ix in 1..g.nx - 1 {
            let dxvx = (v.vx.get(ix + 1, iy) - v.vx.get(ix - 1, iy)) / (2.0 * g.dx);
            let dyvy = (v.vy.get(ix, iy + 1) - v.vy.get(ix, iy - 1)) / (2.0 * g.dy);
            d.set(ix, iy, dxvx + dyvy);
        }
    }
    d
}

/// L¹ norm of the central-difference gradient of a scalar field.
fn grad_l1(f: &Field) -> f64 {
    let g = f.grid;
    let mut s = 0.0;
    for iy in 1..g.ny - 1 {
        for ix in 1..g.nx - 1 {
            let gx = (f.get(ix + 1, iy) - f.get(ix - 1, iy)) / (2.0 * g.dx);
            let gy = (f.get(ix, iy + 1) - f.get(ix, iy - 1)) / (2.0 * g.dy);
            s += (gx * gx + gy * gy).sqrt();
        }
    }
    s * g.cell_area()
}

fn l1_diff(a: &Field, b: &Field) -> f64 {
    let s: f64 = a
        .as_slice()
        .iter()
        .zip(b.as_slice())
        .map(|(x, y)| (x - y).abs())
        .sum();
    s * a.grid.cell_area()
}

/// Audit the five inequalities over an explicit list of prey fields.
/// Single-field inequalities are checked on every field, difference
/// inequalities on consecutive pairs.
pub fn audit_fields(table: &KernelTable, norms: &KernelNorms, fields: &[Field]) -> VAuditReport {
    let k = norms.k;
    let mut ratios = [0.0f64; 5];
    let mut prev: Option<(Field, VelocityField, Field)> = None;

    for w in fields {
        let v = nonlocal_velocity(w, table, norms.kappa, Extension::Zero);
        let div = divergence(&v);
        let l1 = w.l1_norm();
        let linf = w.linf_norm();

        ratios[0] = ratios[0].max(ratio(v.max_speed(), k * l1));
        ratios[1] = ratios[1].max(ratio(jacobian_opnorm_max(&v), k * linf));
        ratios[2] = ratios[2].max(0.0);
        ratios[3] = ratios[3].max(ratio(grad_l1(&div), norms.c_of(l1) * l1));

        if let Some((w2, v2, div2)) = &prev {
            let dl1 = l1_diff(w, w2);
            let mut dv_max = 0.0f64;
            for ((x1, y1), (x2, y2)) in v
                .vx
                .as_slice()
                .iter()
                .zip(v.vy.as_slice())
                .zip(v2.vx.as_slice().iter().zip(v2.vy.as_slice()))
            {
                let (ex, ey) = (x1 - x2, y1 - y2);
                dv_max = dv_max.max((ex * ex + ey * ey).sqrt());
            }
            ratios[2] = ratios[2].max(ratio(dv_max, k * dl1));
            ratios[4] =
                ratios[4].max(ratio(l1_diff(&div, div2), norms.c_of(w2.linf_norm()) * dl1));
        }
        prev = Some((w.clone(), v, div));
    }

    VAuditReport { trials: fields.len(), tol: V_AUDIT_TOL, k, ratios }
}

/// Generate a random nonnegative prey field supported away from the boundary
/// by `margin` cells on each side (so the zero extension is exact and the
/// difference inequalities see no boundary effect).
fn random_prey_field(g: &GridSpec, margin: usize, rng: &mut ChaCha8Rng) -> Field {
    let mut f = Field::zeros(*g);
    if rng.gen_bool(0.1) {
        // a unit-mass single-cell spike
        let ix = rng.gen_range(margin..g.nx - margin);
        let iy = rng.gen_range(margin..g.ny - margin);
        f.set(ix, iy, 1.0 / g.cell_area());
        return f;
    }
    let x_lo = g.x_center(margin);
    let x_hi = g.x_center(g.nx - 1 - margin);
    let y_lo = g.y_center(margin);
    let y_hi = g.y_center(g.ny - 1 - margin);
    let max_rad = 0.25 * (x_hi - x_lo).min(y_hi - y_lo);
    for _ in 0..rng.gen_range(1..=3usize) {
        let rad = rng.gen_range(3.0 * g.dx.max(g.dy)..max_rad.max(4.0 * g.dx));
        let cx = rng.gen_range(x_lo + rad..x_hi - rad);
        let cy = rng.gen_range(y_lo + rad..y_hi - rad);
        let amp = rng.gen_range(0.05..2.0);
        for iy in margin..g.ny - margin {
            for ix in margin..g.nx - margin {
                let (x, y) = (g.x_center(ix) - cx, g.y_center(iy) - cy);
                let s = 1.0 - (x * x + y * y) / (rad * rad);
                if s > 0.0 {
                    let v = f.get(ix, iy) + amp * s * s;
                    f.set(ix, iy, v);
                }
            }
        }
    }
    f
}

/// Randomized consistency check of the five velocity inequalities on
/// `trials` nonnegative fields. ∇v and div v are central differences of the
/// computed velocity; near-boundary support is excluded by construction.
pub fn audit_v_condition(
    table: &KernelTable,
    norms: &KernelNorms,
    grid: &GridSpec,
    trials: usize,
    rng_seed: u64,
) -> Result<VAuditReport, SimError> {
    if trials < 1 {
        return Err(SimError::InvalidParameter("audit needs at least one trial".into()));
    }
    let margin = table.radius_x.max(table.radius_y) + 2;
    if 2 * (margin + 1) >= grid.nx.min(grid.ny) {
        return Err(SimError::InvalidParameter(format!(
            "grid too small for audit margin of {margin} cells"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let fields: Vec<Field> =
        (0..trials).map(|_| random_prey_field(grid, margin, &mut rng)).collect();
    Ok(audit_fields(table, norms, &fields))
}
