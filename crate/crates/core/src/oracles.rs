//! Closed-form reference solutions for the decoupled subproblems, used to
//! verify both solvers: the heat-kernel representation for pure diffusion and
//! integration along characteristics for pure transport. Oracles are analytic
//! callables evaluated on demand, never gridded internally.

use crate::error::SimError;

/// `J₂ = Γ(3/2)/Γ(1) = √π/2`, the constant in `‖∇H_μ(t)‖₁ = J₂/√(μt)`.
pub const J2: f64 = 0.886226925452758013649; // sqrt(pi)/2

/// The heat kernel `H_μ(t,x) = (4πμt)^{−1} exp(−‖x‖²/(4μt))` in 2D,
/// with `‖H_μ(t)‖₁ = 1` for every t > 0.
#[derive(Debug, Clone, Copy)]
pub struct HeatKernelOracle {
    pub mu: f64,
}

impl HeatKernelOracle {
    pub fn new(mu: f64) -> Result<Self, SimError> {
        if !(mu > 0.0) {
            return Err(SimError::InvalidParameter(format!("mu must be > 0, got {mu}")));
        }
        Ok(HeatKernelOracle { mu })
    }

    pub fn eval(&self, t: f64, x: f64, y: f64) -> f64 {
        let four_mu_t = 4.0 * self.mu * t;
        (-(x * x + y * y) / four_mu_t).exp() / (std::f64::consts::PI * four_mu_t)
    }

    /// Pointwise Euclidean norm of ∇H_μ(t, ·).
    pub fn grad_norm(&self, t: f64, x: f64, y: f64) -> f64 {
        let r = (x * x + y * y).sqrt();
        r / (2.0 * self.mu * t) * self.eval(t, x, y)
    }
}

/// `‖∇H_μ(t)‖_{L¹} = J₂/√(μt)`.
pub fn grad_heat_kernel_l1(mu: f64, t: f64) -> Result<f64, SimError> {
    if !(mu > 0.0) {
        return Err(SimError::InvalidParameter(format!("mu must be > 0, got {mu}")));
    }
    if !(t > 0.0) {
        return Err(SimError::InvalidParameter(format!("t must be > 0, got {t}")));
    }
    Ok(J2 / (mu * t).sqrt())
}

/// Exact solution of `∂t w = μΔw` for the Gaussian initial datum
/// `A·exp(−r²/(2σ₀²))`: the variance grows by 2μt and the amplitude scales
/// accordingly, `A σ₀²/(σ₀² + 2μt) · exp(−r²/(2(σ₀² + 2μt)))`.
pub fn gaussian_heat_solution(
    sigma0: f64,
    amplitude: f64,
    mu: f64,
    t: f64,
    x: f64,
    y: f64,
) -> f64 {
    debug_assert!(sigma0 > 0.0 && mu > 0.0 && t >= 0.0);
    let var = sigma0 * sigma0 + 2.0 * mu * t;
    amplitude * sigma0 * sigma0 / var * (-(x * x + y * y) / (2.0 * var)).exp()
}

/// Exact solution of `∂t u + div(c u) = B u` for constant velocity `c` and
/// constant rate `B`: the profile translated by `t·c` and scaled by `e^{Bt}`.
pub fn constant_coefficient_transport(
    u0: impl Fn(f64, f64) -> f64,
    c: (f64, f64),
    b: f64,
    t: f64,
    x: f64,
    y: f64,
) -> f64 {
    u0(x - t * c.0, y - t * c.1) * (b * t).exp()
}

/// Characteristic flow for a user-supplied velocity `c(t, x, y)` plus the
/// exponent `∫ (b − div c) dτ` along it, integrated with fixed-step RK4 on
/// the augmented system.
pub struct CharacteristicsOracle<C, S>
where
    C: Fn(f64, f64, f64) -> (f64, f64),
    S: Fn(f64, f64, f64) -> f64,
{
    pub velocity: C,
    /// `b − div c` as an analytic callable.
    pub growth: S,
    pub substeps: usize,
}

impl<C, S> CharacteristicsOracle<C, S>
where
    C: Fn(f64, f64, f64) -> (f64, f64),
    S: Fn(f64, f64, f64) -> f64,
{
    /// Solve `Ẋ = c(t, X)`, `φ̇ = (b − div c)(t, X)` from `(t0, x0, y0)` to
    /// `t1` (forward or backward); returns `(X(t1), φ(t1))` with `φ(t0) = 0`.
    pub fn flow(&self, t0: f64, x0: f64, y0: f64, t1: f64) -> (f64, f64, f64) {
        let n = self.substeps.max(1);
        let h = (t1 - t0) / n as f64;
        let (mut x, mut y, mut phi) = (x0, y0, 0.0);
        let mut t = t0;
        let f = |t: f64, x: f64, y: f64| -> (f64, f64, f64) {
            let (cx, cy) = (self.velocity)(t, x, y);
            (cx, cy, (self.growth)(t, x, y))
        };
        for _ in 0..n {
            let k1 = f(t, x, y);
            let k2 = f(t + 0.5 * h, x + 0.5 * h * k1.0, y + 0.5 * h * k1.1);
            let k3 = f(t + 0.5 * h, x + 0.5 * h * k2.0, y + 0.5 * h * k2.1);
            let k4 = f(t + h, x + h * k3.0, y + h * k3.1);
            x += h / 6.0 * (k1.0 + 2.0 * k2.0 + 2.0 * k3.0 + k4.0);
            y += h / 6.0 * (k1.1 + 2.0 * k2.1 + 2.0 * k3.1 + k4.1);
            phi += h / 6.0 * (k1.2 + 2.0 * k2.2 + 2.0 * k3.2 + k4.2);
            t += h;
        }
        (x, y, phi)
    }

    /// Evaluate `u(t, x) = u₀(X(t₀; t, x)) · exp(∫_{t₀}^{t} (b − div c) dτ)`
    /// by tracing the characteristic through `(t, x, y)` back to `t0`.
    pub fn solution_at(
        &self,
        u0: impl Fn(f64, f64) -> f64,
        t0: f64,
        t: f64,
        x: f64,
        y: f64,
    ) -> f64 {
        let (x0, y0, phi_back) = self.flow(t, x, y, t0);
        // φ was accumulated backwards, so the forward exponent is −φ.
        u0(x0, y0) * (-phi_back).exp()
    }
}
