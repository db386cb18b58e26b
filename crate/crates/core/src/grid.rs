//! Uniform cell-centered rectangular grid, scalar fields on it, and the
//! discrete norms (L¹, L∞, TV) and support measures used by the audits.

use crate::error::SimError;

/// A uniform rectangular grid. Cells are centered: the center of cell
/// `(ix, iy)` is `(x_min + (ix + ½)·dx, y_min + (iy + ½)·dy)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub x_min: f64,
    pub x_max: f64,
    pub y_min: f64,
    pub y_max: f64,
    pub nx: usize,
    pub ny: usize,
    pub dx: f64,
    pub dy: f64,
}

impl GridSpec {
    pub fn new(
        x_min: f64,
        x_max: f64,
        y_min: f64,
        y_max: f64,
        nx: usize,
        ny: usize,
    ) -> Result<Self, SimError> {
        if !(x_max > x_min && y_max > y_min) {
            return Err(SimError::InvalidParameter(format!(
                "degenerate domain [{x_min}, {x_max}] x [{y_min}, {y_max}]"
            )));
        }
        if nx < 3 || ny < 3 {
            return Err(SimError::InvalidParameter(format!(
                "grid must be at least 3x3 cells, got {nx}x{ny}"
            )));
        }
        let dx = (x_max - x_min) / nx as f64;
        let dy = (y_max - y_min) / ny as f64;
        Ok(GridSpec { x_min, x_max, y_min, y_max, nx, ny, dx, dy })
    }

    /// Build a grid with (approximately) the requested cell size; `nx`, `ny`
    /// are rounded so the cells tile the domain exactly.
    pub fn from_cell_size(
        x_min: f64,
        x_max: f64,
        y_min: f64,
        y_max: f64,
        h: f64,
    ) -> Result<Self, SimError> {
        if !(h > 0.0) {
            return Err(SimError::InvalidParameter(format!("cell size must be positive, got {h}")));
        }
        let nx = ((x_max - x_min) / h).round() as usize;
        let ny = ((y_max - y_min) / h).round() as usize;
        GridSpec::new(x_min, x_max, y_min, y_max, nx, ny)
    }

    #[inline]
    pub fn x_center(&self, ix: usize) -> f64 {
        self.x_min + (ix as f64 + 0.5) * self.dx
    }

    #[inline]
    pub fn y_center(&self, iy: usize) -> f64 {
        self.y_min + (iy as f64 + 0.5) * self.dy
    }

    #[inline]
    pub fn cell_area(&self) -> f64 {
        self.dx * self.dy
    }

    pub fn cell_count(&self) -> usize {
        self.nx * self.ny
    }
}

/// A scalar quantity sampled at cell centers, row-major (`iy` slow, `ix` fast).
#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    pub grid: GridSpec,
    values: Vec<f64>,
}

impl Field {
    pub fn zeros(grid: GridSpec) -> Self {
        Field { grid, values: vec![0.0; grid.cell_count()] }
    }

    pub fn constant(grid: GridSpec, value: f64) -> Self {
        Field { grid, values: vec![value; grid.cell_count()] }
    }

    /// Sample `f(x, y)` at every cell center.
    pub fn from_fn(grid: GridSpec, f: impl Fn(f64, f64) -> f64) -> Self {
        let mut values = Vec::with_capacity(grid.cell_count());
        for iy in 0..grid.ny {
            let y = grid.y_center(iy);
            for ix in 0..grid.nx {
                values.push(f(grid.x_center(ix), y));
            }
        }
        Field { grid, values }
    }

    pub fn from_values(grid: GridSpec, values: Vec<f64>) -> Result<Self, SimError> {
        if values.len() != grid.cell_count() {
            return Err(SimError::InvalidParameter(format!(
                "value buffer has {} entries, grid needs {}",
                values.len(),
                grid.cell_count()
            )));
        }
        Ok(Field { grid, values })
    }

    #[inline]
    pub fn get(&self, ix: usize, iy: usize) -> f64 {
        self.values[iy * self.grid.nx + ix]
    }

    #[inline]
    pub fn set(&mut self, ix: usize, iy: usize, v: f64) {
        self.values[iy * self.grid.nx + ix] = v;
    }

    #[inline]
    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }

    #[inline]
    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.values
    }

    #[inline]
    pub fn row(&self, iy: usize) -> &[f64] {
        let nx = self.grid.nx;
        &self.values[iy * nx..(iy + 1) * nx]
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn all_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    /// Σ |f_ij| · dx·dy.
    pub fn l1_norm(&self) -> f64 {
        debug_assert!(self.all_finite(), "l1_norm on non-finite field");
        let s: f64 = self.values.iter().map(|v| v.abs()).sum();
        s * self.grid.cell_area()
    }

    /// Σ f_ij · dx·dy (signed domain integral).
    pub fn integral(&self) -> f64 {
        let s: f64 = self.values.iter().sum();
        s * self.grid.cell_area()
    }

    /// max |f_ij|.
    pub fn linf_norm(&self) -> f64 {
        debug_assert!(self.all_finite(), "linf_norm on non-finite field");
        self.values.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    /// Anisotropic discrete total variation,
    /// `dy·Σ|f_{i+1,j}−f_{i,j}| + dx·Σ|f_{i,j+1}−f_{i,j}|`,
    /// forward differences over interior cell pairs only.
    pub fn total_variation(&self) -> f64 {
        let (nx, ny) = (self.grid.nx, self.grid.ny);
        let mut sx = 0.0;
        let mut sy = 0.0;
        for iy in 0..ny {
            let row = self.row(iy);
            for ix in 0..nx - 1 {
                sx += (row[ix + 1] - row[ix]).abs();
            }
        }
        for iy in 0..ny - 1 {
            let (row, next) = (self.row(iy), self.row(iy + 1));
            for ix in 0..nx {
                sy += (next[ix] - row[ix]).abs();
            }
        }
        self.grid.dy * sx + self.grid.dx * sy
    }

    /// Largest cell-center distance from the origin among cells with
    /// `|f_ij| > threshold`; 0 when no cell exceeds the threshold.
    pub fn support_radius(&self, threshold: f64) -> f64 {
        let mut r2_max = 0.0f64;
        for iy in 0..self.grid.ny {
            let y = self.grid.y_center(iy);
            let row = self.row(iy);
            for (ix, v) in row.iter().enumerate() {
                if v.abs() > threshold {
                    let x = self.grid.x_center(ix);
                    r2_max = r2_max.max(x * x + y * y);
                }
            }
        }
        r2_max.sqrt()
    }

    /// `support_radius` with the default threshold `1e-12 · ‖f‖_∞`,
    /// which ignores rounding dust left behind by the schemes.
    pub fn support_radius_auto(&self) -> f64 {
        self.support_radius(1e-12 * self.linf_norm())
    }
}
