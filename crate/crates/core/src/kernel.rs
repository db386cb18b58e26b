//! The compactly supported averaging kernel
//! `η(x) = η̂ (ℓ² − ‖x‖²)³` on `B(0, ℓ)`, zero outside, normalized so that
//! `∫ η = 1` (in 2D this forces `η̂ = 4/(π ℓ⁸)`).
//!
//! Everything downstream needs η in two discrete guises: stencils sampled at
//! cell-center offsets (for the velocity convolution) and Sobolev norms of
//! ∇η (for the Lipschitz constant K that the analytical bounds use). All
//! derivatives here are closed-form polynomials in r²; nothing is obtained by
//! numerical differencing.

use crate::error::SimError;
use crate::grid::GridSpec;

/// Closed-form evaluators for η and its derivatives. η is C² across the
/// support boundary: η, ∇η and ∇²η all vanish at r = ℓ, while third
/// derivatives have a bounded jump there (harmless for their L¹ norms).
#[derive(Debug, Clone, Copy)]
pub struct Mollifier {
    ell: f64,
    eta_hat: f64,
}

pub fn build_mollifier(ell: f64) -> Result<Mollifier, SimError> {
    if !(ell > 0.0 && ell.is_finite()) {
        return Err(SimError::InvalidParameter(format!(
            "kernel radius must be positive and finite, got {ell}"
        )));
    }
    let eta_hat = 4.0 / (std::f64::consts::PI * ell.powi(8));
    Ok(Mollifier { ell, eta_hat })
}

impl Mollifier {
    #[inline]
    pub fn ell(&self) -> f64 {
        self.ell
    }

    #[inline]
    pub fn eta_hat(&self) -> f64 {
        self.eta_hat
    }

    /// `g = ℓ² − r²` on the support, negative outside.
    #[inline]
    fn g(&self, x: f64, y: f64) -> f64 {
        self.ell * self.ell - (x * x + y * y)
    }

    pub fn eval(&self, x: f64, y: f64) -> f64 {
        let g = self.g(x, y);
        if g <= 0.0 {
            0.0
        } else {
            self.eta_hat * g * g * g
        }
    }

    /// ∇η = −6 η̂ (ℓ² − r²)² · (x, y).
    pub fn grad(&self, x: f64, y: f64) -> (f64, f64) {
        let g = self.g(x, y);
        if g <= 0.0 {
            (0.0, 0.0)
        } else {
            let c = -6.0 * self.eta_hat * g * g;
            (c * x, c * y)
        }
    }

    /// Hessian entries `(∂xx η, ∂xy η, ∂yy η)`;
    /// ∇²η = −6 η̂ g (g·I − 4 x⊗x).
    pub fn hessian(&self, x: f64, y: f64) -> (f64, f64, f64) {
        let g = self.g(x, y);
        if g <= 0.0 {
            (0.0, 0.0, 0.0)
        } else {
            let c = -6.0 * self.eta_hat * g;
            (c * (g - 4.0 * x * x), c * (-4.0 * x * y), c * (g - 4.0 * y * y))
        }
    }

    /// Δη = −12 η̂ (ℓ² − r²)(ℓ² − 3r²).
    pub fn laplacian(&self, x: f64, y: f64) -> f64 {
        let r2 = x * x + y * y;
        let g = self.ell * self.ell - r2;
        if g <= 0.0 {
            0.0
        } else {
            -12.0 * self.eta_hat * g * (self.ell * self.ell - 3.0 * r2)
        }
    }

    /// ∇Δη = 48 η̂ (2ℓ² − 3r²) · (x, y).
    pub fn grad_laplacian(&self, x: f64, y: f64) -> (f64, f64) {
        let r2 = x * x + y * y;
        if self.ell * self.ell - r2 <= 0.0 {
            (0.0, 0.0)
        } else {
            let c = 48.0 * self.eta_hat * (2.0 * self.ell * self.ell - 3.0 * r2);
            (c * x, c * y)
        }
    }

    /// Frobenius norm of the symmetric third-derivative tensor ∇³η.
    pub fn third_frobenius(&self, x: f64, y: f64) -> f64 {
        let g = self.g(x, y);
        if g <= 0.0 {
            return 0.0;
        }
        let c = 24.0 * self.eta_hat;
        let txxx = c * x * (3.0 * g - 2.0 * x * x);
        let txxy = c * y * (g - 2.0 * x * x);
        let txyy = c * x * (g - 2.0 * y * y);
        let tyyy = c * y * (3.0 * g - 2.0 * y * y);
        (txxx * txxx + 3.0 * txxy * txxy + 3.0 * txyy * txyy + tyyy * tyyy).sqrt()
    }

    /// Pointwise Euclidean norm of ∇η, radial: `6 η̂ (ℓ²−r²)² r`.
    fn grad_norm_radial(&self, r: f64) -> f64 {
        let g = self.ell * self.ell - r * r;
        if g <= 0.0 {
            0.0
        } else {
            6.0 * self.eta_hat * g * g * r
        }
    }

    /// Pointwise operator norm of ∇²η, radial:
    /// eigenvalues are −6η̂g·(ℓ²−5r²) and −6η̂g², so the norm is
    /// `6 η̂ g · max(g, |ℓ²−5r²|)`.
    fn hessian_opnorm_radial(&self, r: f64) -> f64 {
        let l2 = self.ell * self.ell;
        let g = l2 - r * r;
        if g <= 0.0 {
            0.0
        } else {
            6.0 * self.eta_hat * g * g.max((l2 - 5.0 * r * r).abs())
        }
    }
}

/// A rectangular convolution stencil over integer cell offsets
/// `p ∈ [−radius_x, radius_x]`, `q ∈ [−radius_y, radius_y]`, stored
/// row-major in `q` with `p` fastest.
#[derive(Debug, Clone)]
pub struct Stencil {
    pub radius_x: usize,
    pub radius_y: usize,
    weights: Vec<f64>,
}

impl Stencil {
    fn from_fn(radius_x: usize, radius_y: usize, f: impl Fn(i64, i64) -> f64) -> Self {
        let (wx, wy) = (2 * radius_x + 1, 2 * radius_y + 1);
        let mut weights = Vec::with_capacity(wx * wy);
        for q in -(radius_y as i64)..=radius_y as i64 {
            for p in -(radius_x as i64)..=radius_x as i64 {
                weights.push(f(p, q));
            }
        }
        Stencil { radius_x, radius_y, weights }
    }

    #[inline]
    pub fn weight(&self, p: i64, q: i64) -> f64 {
        let col = (p + self.radius_x as i64) as usize;
        let row = (q + self.radius_y as i64) as usize;
        self.weights[row * (2 * self.radius_x + 1) + col]
    }

    /// Row of weights at offset `q`, indexed by `p + radius_x`.
    #[inline]
    pub fn row(&self, q: i64) -> &[f64] {
        let w = 2 * self.radius_x + 1;
        let row = (q + self.radius_y as i64) as usize;
        &self.weights[row * w..(row + 1) * w]
    }

    pub fn sum(&self) -> f64 {
        self.weights.iter().sum()
    }
}

/// η and ∇η sampled at cell-center offsets and scaled by the cell area, so
/// that `Σ_pq stencil[p][q]·w[i−p][j−q]` approximates the convolution
/// integral. The η weights are renormalized to sum to exactly one; the
/// gradient weights are left as sampled (they inherit exact antisymmetry
/// from the closed form).
#[derive(Debug, Clone)]
pub struct KernelTable {
    pub radius_x: usize,
    pub radius_y: usize,
    pub eta: Stencil,
    pub grad_x: Stencil,
    pub grad_y: Stencil,
}

pub fn sample_kernel(m: &Mollifier, g: &GridSpec) -> Result<KernelTable, SimError> {
    let h = g.dx.max(g.dy);
    if m.ell() < 3.0 * h * (1.0 - 1e-12) {
        return Err(SimError::MeshTooCoarse { ell: m.ell(), h });
    }
    let radius_x = (m.ell() / g.dx + 1e-9).floor() as usize;
    let radius_y = (m.ell() / g.dy + 1e-9).floor() as usize;
    let area = g.cell_area();

    let mut eta =
        Stencil::from_fn(radius_x, radius_y, |p, q| m.eval(p as f64 * g.dx, q as f64 * g.dy) * area);
    // Renormalize so the naive sum is exactly 1: divide by the raw sum, then
    // push any residual into the center weight until the sum lands on 1.0.
    let raw = eta.sum();
    if !(raw > 0.0) {
        return Err(SimError::MeshTooCoarse { ell: m.ell(), h });
    }
    for w in eta.weights.iter_mut() {
        *w /= raw;
    }
    let center = radius_y * (2 * radius_x + 1) + radius_x;
    for _ in 0..32 {
        let s = eta.sum();
        if s == 1.0 {
            break;
        }
        eta.weights[center] += 1.0 - s;
    }
    assert_eq!(eta.sum(), 1.0, "stencil renormalization did not converge");

    let grad_x = Stencil::from_fn(radius_x, radius_y, |p, q| {
        m.grad(p as f64 * g.dx, q as f64 * g.dy).0 * area
    });
    let grad_y = Stencil::from_fn(radius_x, radius_y, |p, q| {
        m.grad(p as f64 * g.dx, q as f64 * g.dy).1 * area
    });

    Ok(KernelTable { radius_x, radius_y, eta, grad_x, grad_y })
}

/// Sobolev norms of ∇η and the Lipschitz constant
/// `K = max{ 2κ‖∇η‖_W²¹, 2κ‖∇η‖_W¹∞, 3‖∇η‖_W¹∞, (48/(25√5))‖∇η‖_W²¹ }`
/// together with the increasing map `C(ξ) = K(1 + Kξ)`.
///
/// Matrix-valued derivatives use the pointwise operator norm, the third
/// derivative tensor the Frobenius norm (an upper bound on its operator
/// norm, so K stays on the conservative side).
#[derive(Debug, Clone, Copy)]
pub struct KernelNorms {
    pub kappa: f64,
    pub l1_grad: f64,
    pub l1_hess: f64,
    pub l1_third: f64,
    pub linf_grad: f64,
    pub linf_hess: f64,
    /// ‖∇η‖_{W^{2,1}} = ‖∇η‖₁ + ‖∇²η‖₁ + ‖∇³η‖₁
    pub grad_eta_w21: f64,
    /// ‖∇η‖_{W^{1,∞}} = max(‖∇η‖_∞, ‖∇²η‖_∞)
    pub grad_eta_w1inf: f64,
    pub k: f64,
}

impl KernelNorms {
    /// C(ξ) = K (1 + K ξ).
    pub fn c_of(&self, xi: f64) -> f64 {
        self.k * (1.0 + self.k * xi)
    }

    /// The four quantities whose maximum defines K.
    pub fn k_candidates(&self) -> [f64; 4] {
        [
            2.0 * self.kappa * self.grad_eta_w21,
            2.0 * self.kappa * self.grad_eta_w1inf,
            3.0 * self.grad_eta_w1inf,
            48.0 / (25.0 * 5.0f64.sqrt()) * self.grad_eta_w21,
        ]
    }
}

/// Composite Simpson weights on `n` (even) intervals over `[0, upper]`.
fn simpson_nodes(upper: f64, n: usize) -> impl Iterator<Item = (f64, f64)> {
    let n = if n % 2 == 0 { n } else { n + 1 };
    let h = upper / n as f64;
    (0..=n).map(move |i| {
        let w = if i == 0 || i == n {
            1.0
        } else if i % 2 == 1 {
            4.0
        } else {
            2.0
        };
        (i as f64 * h, w * h / 3.0)
    })
}

pub fn compute_kernel_norms(
    m: &Mollifier,
    kappa: f64,
    quad_points: usize,
) -> Result<KernelNorms, SimError> {
    if !(kappa >= 0.0 && kappa.is_finite()) {
        return Err(SimError::InvalidParameter(format!("kappa must be >= 0, got {kappa}")));
    }
    if quad_points < 64 {
        return Err(SimError::InvalidParameter(format!(
            "quad_points must be >= 64, got {quad_points}"
        )));
    }

    let two_pi = 2.0 * std::f64::consts::PI;

    // Radially symmetric pointwise norms: L¹ = 2π ∫ f(r) r dr.
    let mut l1_grad = 0.0;
    let mut l1_hess = 0.0;
    let mut linf_grad = 0.0f64;
    let mut linf_hess = 0.0f64;
    for (r, w) in simpson_nodes(m.ell(), quad_points) {
        let gn = m.grad_norm_radial(r);
        let hn = m.hessian_opnorm_radial(r);
        l1_grad += w * gn * r;
        l1_hess += w * hn * r;
        linf_grad = linf_grad.max(gn);
        linf_hess = linf_hess.max(hn);
    }
    l1_grad *= two_pi;
    l1_hess *= two_pi;

    // ‖∇³η‖_F depends on the angle; tensor-product quadrature
    // (Simpson radially, periodic trapezoid in θ).
    let n_theta = (quad_points / 8).max(64);
    let dtheta = two_pi / n_theta as f64;
    let mut l1_third = 0.0;
    for it in 0..n_theta {
        let theta = it as f64 * dtheta;
        let (c, s) = (theta.cos(), theta.sin());
        let mut radial = 0.0;
        for (r, w) in simpson_nodes(m.ell(), quad_points) {
            radial += w * m.third_frobenius(r * c, r * s) * r;
        }
        l1_third += radial * dtheta;
    }

    let grad_eta_w21 = l1_grad + l1_hess + l1_third;
    let grad_eta_w1inf = linf_grad.max(linf_hess);

    let norms = KernelNorms {
        kappa,
        l1_grad,
        l1_hess,
        l1_third,
        linf_grad,
        linf_hess,
        grad_eta_w21,
        grad_eta_w1inf,
        k: 0.0,
    };
    let k = norms.k_candidates().into_iter().fold(0.0f64, f64::max);
    Ok(KernelNorms { k, ..norms })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    #[test]
    fn rejects_nonpositive_radius() {
        assert!(build_mollifier(0.0).is_err());
        assert!(build_mollifier(-1.0).is_err());
    }

    #[test]
    fn normalization_constant() {
        // derived from the radial quadrature ∫₀¹ (1−r²)³ 2πr dr = π/4
        let m = build_mollifier(1.0).unwrap();
        assert_relative_eq!(m.eta_hat(), 4.0 / PI, max_relative = 1e-15);
        let m = build_mollifier(0.15).unwrap();
        assert_relative_eq!(m.eta_hat(), 4.0 / (PI * 0.15f64.powi(8)), max_relative = 1e-15);
    }

    #[test]
    fn unit_mass_against_radial_quadrature() {
        let m = build_mollifier(0.35).unwrap();
        let mut mass = 0.0;
        for (r, w) in simpson_nodes(m.ell(), 4096) {
            mass += w * m.eval(r, 0.0) * r;
        }
        mass *= 2.0 * PI;
        assert_relative_eq!(mass, 1.0, max_relative = 1e-12);
    }

    #[test]
    fn vanishes_at_the_support_boundary_and_is_flat_at_zero() {
        for ell in [0.15, 0.25, 1.0, 3.0] {
            let m = build_mollifier(ell).unwrap();
            assert_eq!(m.eval(ell, 0.0), 0.0);
            assert_eq!(m.eval(0.0, -ell), 0.0);
            assert_eq!(m.grad(0.0, 0.0), (0.0, 0.0));
            assert!(m.eval(0.9 * ell, 0.0) > 0.0);
        }
    }

    #[test]
    fn normalization_scaling_law() {
        // doubling ℓ scales η̂ by 2⁻⁸ in 2D
        let m1 = build_mollifier(0.4).unwrap();
        let m2 = build_mollifier(0.8).unwrap();
        assert_relative_eq!(m2.eta_hat(), m1.eta_hat() / 256.0, max_relative = 1e-14);
    }

    #[test]
    fn central_differences_converge_to_analytic_gradient() {
        let m = build_mollifier(0.7).unwrap();
        let (x, y) = (0.21, -0.13);
        let exact = m.grad(x, y).0;
        let diff = |h: f64| (m.eval(x + h, y) - m.eval(x - h, y)) / (2.0 * h);
        let e1 = (diff(1e-3) - exact).abs();
        let e2 = (diff(5e-4) - exact).abs();
        // second-order differencing: quartering the error when halving h
        assert!(e2 < e1 / 3.0, "errors {e1} -> {e2} not ~4x smaller");
    }

    #[test]
    fn stencil_radius_matches_kernel_support() {
        let m = build_mollifier(0.25).unwrap();
        let g = GridSpec::from_cell_size(-1.0, 1.0, -2.0, 2.0, 0.005).unwrap();
        let t = sample_kernel(&m, &g).unwrap();
        assert_eq!(t.radius_x, 50);
        assert_eq!(t.radius_y, 50);
    }

    #[test]
    fn too_coarse_mesh_is_rejected() {
        let m = build_mollifier(0.01).unwrap();
        let g = GridSpec::from_cell_size(-1.0, 1.0, -1.0, 1.0, 0.02).unwrap();
        assert!(matches!(sample_kernel(&m, &g), Err(SimError::MeshTooCoarse { .. })));
    }

    #[test]
    fn eta_weights_sum_to_exactly_one() {
        let m = build_mollifier(0.15).unwrap();
        let g = GridSpec::from_cell_size(-1.0, 1.0, -2.0, 2.0, 0.02).unwrap();
        let t = sample_kernel(&m, &g).unwrap();
        assert_eq!(t.eta.sum(), 1.0);
    }

    #[test]
    fn gradient_weights_are_exactly_antisymmetric() {
        let m = build_mollifier(0.25).unwrap();
        let g = GridSpec::from_cell_size(-1.0, 1.0, -2.0, 2.0, 0.02).unwrap();
        let t = sample_kernel(&m, &g).unwrap();
        let (rx, ry) = (t.radius_x as i64, t.radius_y as i64);
        let mut paired_sum_x = 0.0;
        for q in -ry..=ry {
            assert_eq!(t.grad_x.weight(0, q), 0.0);
            for p in 1..=rx {
                // bitwise antisymmetry in p, symmetry in q
                assert_eq!(t.grad_x.weight(-p, q), -t.grad_x.weight(p, q));
                assert_eq!(t.grad_x.weight(p, -q), t.grad_x.weight(p, q));
                paired_sum_x += t.grad_x.weight(p, q) + t.grad_x.weight(-p, q);
                assert_eq!(t.grad_y.weight(-p, q), t.grad_y.weight(p, q));
                assert_eq!(t.grad_y.weight(p, -q), -t.grad_y.weight(p, q));
            }
        }
        assert_eq!(paired_sum_x, 0.0);
    }

    #[test]
    fn grad_l1_norm_matches_closed_form() {
        // ∫‖∇η‖ = 12πη̂ ∫₀^ℓ (ℓ²−r²)² r² dr = 12πη̂ · 8ℓ⁷/105 = 128/(35 ℓ)
        for ell in [0.15, 0.25, 1.0] {
            let n = compute_kernel_norms(&build_mollifier(ell).unwrap(), 1.0, 4096).unwrap();
            assert_relative_eq!(n.l1_grad, 128.0 / (35.0 * ell), max_relative = 1e-10);
        }
    }

    #[test]
    fn hessian_l1_norm_matches_closed_form() {
        // 48/ℓ² · ∫₀¹ (1−ρ²)·max(1−ρ², |1−5ρ²|) ρ dρ = 48/ℓ² · 17/54 = 136/(9ℓ²)
        let n = compute_kernel_norms(&build_mollifier(0.5).unwrap(), 1.0, 8192).unwrap();
        assert_relative_eq!(n.l1_hess, 136.0 / (9.0 * 0.25), max_relative = 1e-6);
    }

    #[test]
    fn sup_norms_match_closed_forms() {
        // ‖∇η‖_∞ attained at r = ℓ/√5: 96η̂ℓ⁵/(25√5);
        // ‖∇²η‖_∞ attained at r = 0: 6η̂ℓ⁴.
        let ell: f64 = 0.6;
        let m = build_mollifier(ell).unwrap();
        let n = compute_kernel_norms(&m, 1.0, 4096).unwrap();
        let grad_max = 96.0 * m.eta_hat() * ell.powi(5) / (25.0 * 5.0f64.sqrt());
        let hess_max = 6.0 * m.eta_hat() * ell.powi(4);
        assert_relative_eq!(n.linf_grad, grad_max, max_relative = 1e-6);
        assert_relative_eq!(n.linf_hess, hess_max, max_relative = 1e-6);
    }

    #[test]
    fn quadrature_is_resolution_stable() {
        let m = build_mollifier(0.25).unwrap();
        let a = compute_kernel_norms(&m, 1.0, 2048).unwrap();
        let b = compute_kernel_norms(&m, 1.0, 4096).unwrap();
        for (x, y) in [
            (a.l1_grad, b.l1_grad),
            (a.l1_hess, b.l1_hess),
            (a.l1_third, b.l1_third),
            (a.grad_eta_w21, b.grad_eta_w21),
            (a.k, b.k),
        ] {
            assert_relative_eq!(x, y, max_relative = 1e-6);
        }
    }

    #[test]
    fn k_is_the_maximum_of_its_four_candidates() {
        let n = compute_kernel_norms(&build_mollifier(0.25).unwrap(), 1.0, 2048).unwrap();
        let cands = n.k_candidates();
        for c in cands {
            assert!(c <= n.k);
        }
        assert!(cands.contains(&n.k));
    }

    #[test]
    fn kappa_zero_drops_the_speed_terms() {
        let n = compute_kernel_norms(&build_mollifier(0.4).unwrap(), 0.0, 2048).unwrap();
        let expect = (3.0 * n.grad_eta_w1inf).max(48.0 / (25.0 * 5.0f64.sqrt()) * n.grad_eta_w21);
        assert_eq!(n.k, expect);
        assert_eq!(n.c_of(0.0), n.k);
    }

    #[test]
    fn parameter_validation() {
        let m = build_mollifier(1.0).unwrap();
        assert!(compute_kernel_norms(&m, -1.0, 2048).is_err());
        assert!(compute_kernel_norms(&m, 1.0, 32).is_err());
    }
}
