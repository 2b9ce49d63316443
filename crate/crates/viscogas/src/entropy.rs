//! Weak entropy–entropy flux pairs of the flux-shifted system.
//!
//! A generator function `g` produces the weak entropy
//!
//! ```text
//! eta(rho, u, s) = rho * int_0^1 [tau(1-tau)]^lambda g(Phi) dtau,
//! Phi = u + rho^theta e^s (1 - 2 tau),
//! ```
//!
//! together with its flux. The endpoint-singular weight is integrated by a
//! Gauss–Jacobi rule built with the Golub–Welsch algorithm, so the
//! singularity at the endpoints (present for `gamma > 3`) is absorbed
//! exactly. Derivative formulas and finite-difference verification of the
//! compatibility equations live here as well.

use crate::error::{Error, Result};
use crate::model::{GasParams, PrimitiveState};
use crate::special::beta;
use nalgebra::DMatrix;

/// Generator `g` of a weak entropy, with `g'`, `g''` and the
/// antiderivative `G` normalized by `G(0) = 0`.
#[derive(Debug, Clone, PartialEq)]
pub enum EntropyGenerator {
    /// `g = 1`; generates the mass pair (up to the weight normalization).
    Constant,
    /// `g = xi`; generates the momentum pair.
    Linear,
    /// `g = xi^2`, strictly convex.
    Quadratic,
    /// `g = exp(a xi)`, strictly convex for `a != 0`.
    Exponential(f64),
    /// Polynomial with coefficients in increasing degree order.
    Polynomial(Vec<f64>),
}

impl EntropyGenerator {
    pub fn eval(&self, xi: f64) -> f64 {
        match self {
            Self::Constant => 1.0,
            Self::Linear => xi,
            Self::Quadratic => xi * xi,
            Self::Exponential(a) => (a * xi).exp(),
            Self::Polynomial(c) => horner(c, xi),
        }
    }

    pub fn deriv(&self, xi: f64) -> f64 {
        match self {
            Self::Constant => 0.0,
            Self::Linear => 1.0,
            Self::Quadratic => 2.0 * xi,
            Self::Exponential(a) => a * (a * xi).exp(),
            Self::Polynomial(c) => {
                let d: Vec<f64> = c
                    .iter()
                    .enumerate()
                    .skip(1)
                    .map(|(i, ci)| i as f64 * ci)
                    .collect();
                horner(&d, xi)
            }
        }
    }

    pub fn second(&self, xi: f64) -> f64 {
        match self {
            Self::Constant | Self::Linear => 0.0,
            Self::Quadratic => 2.0,
            Self::Exponential(a) => a * a * (a * xi).exp(),
            Self::Polynomial(c) => {
                let d: Vec<f64> = c
                    .iter()
                    .enumerate()
                    .skip(2)
                    .map(|(i, ci)| (i * (i - 1)) as f64 * ci)
                    .collect();
                horner(&d, xi)
            }
        }
    }

    /// Antiderivative `G` with `G(0) = 0`. The free constant would shift
    /// the flux component `q2` by a constant that drops out of all
    /// x-derivatives; fixing it keeps cross-implementation comparisons
    /// reproducible.
    pub fn antideriv(&self, xi: f64) -> f64 {
        match self {
            Self::Constant => xi,
            Self::Linear => 0.5 * xi * xi,
            Self::Quadratic => xi * xi * xi / 3.0,
            Self::Exponential(a) => ((a * xi).exp() - 1.0) / a,
            Self::Polynomial(c) => {
                let mut anti = Vec::with_capacity(c.len() + 1);
                anti.push(0.0);
                anti.extend(c.iter().enumerate().map(|(i, ci)| ci / (i + 1) as f64));
                horner(&anti, xi)
            }
        }
    }

    /// Minimum of `g''` on `[lo, hi]`: closed form for the built-in kinds,
    /// sampled for polynomials.
    pub fn convexity_margin(&self, lo: f64, hi: f64) -> f64 {
        match self {
            Self::Constant | Self::Linear => 0.0,
            Self::Quadratic => 2.0,
            Self::Exponential(a) => {
                let at = if *a >= 0.0 { lo } else { hi };
                a * a * (a * at).exp()
            }
            Self::Polynomial(_) => {
                let n = 256;
                (0..=n)
                    .map(|i| self.second(lo + (hi - lo) * i as f64 / n as f64))
                    .fold(f64::INFINITY, f64::min)
            }
        }
    }

    pub fn is_strictly_convex_on(&self, lo: f64, hi: f64) -> bool {
        self.convexity_margin(lo, hi) > 0.0
    }
}

fn horner(coeffs: &[f64], x: f64) -> f64 {
    coeffs.iter().rev().fold(0.0, |acc, c| acc * x + c)
}

/// Argument of the kernel: `Phi(tau) = u + rho^theta e^s (1 - 2 tau)`,
/// affine in `tau`, spanning the two Riemann-invariant values at the
/// endpoints.
#[derive(Debug, Clone, Copy)]
pub struct KernelArgument {
    pub u: f64,
    /// `rho^theta e^s`, half the invariant spread.
    pub amplitude: f64,
}

impl KernelArgument {
    pub fn new(state: PrimitiveState, p: &GasParams) -> Self {
        Self {
            u: state.u,
            amplitude: state.rho.powf(p.theta) * state.s.exp(),
        }
    }

    #[inline]
    pub fn eval(&self, tau: f64) -> f64 {
        self.u + self.amplitude * (1.0 - 2.0 * tau)
    }
}

/// Gauss–Jacobi rule for the weight `[tau (1 - tau)]^lambda` on `(0, 1)`.
///
/// The weights sum to `B(lambda + 1, lambda + 1)` and the rule integrates
/// polynomials of degree up to `2n - 1` against the weight exactly.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureRule {
    lambda_kernel: f64,
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

/// Build the quadrature rule with `n` nodes for exponent `lambda > -1`.
///
/// Golub–Welsch: nodes are the eigenvalues of the symmetric tridiagonal
/// Jacobi matrix of the recurrence for the ultraspherical weight
/// `(1 - x^2)^lambda`, weights come from the first eigenvector components.
pub fn build_quadrature(lambda_kernel: f64, n: usize) -> Result<QuadratureRule> {
    if !(lambda_kernel.is_finite() && lambda_kernel > -1.0) {
        return Err(Error::InvalidQuadrature(format!(
            "weight exponent must exceed -1 for integrability, got {lambda_kernel}"
        )));
    }
    if n < 2 {
        return Err(Error::InvalidQuadrature(format!(
            "at least 2 nodes required, got {n}"
        )));
    }
    let lam = lambda_kernel;
    let mut jacobi = DMatrix::<f64>::zeros(n, n);
    // Symmetric weight: zero diagonal, off-diagonal
    // b_k^2 = k (k + 2 lam) / ((2k + 2 lam)^2 - 1).
    for k in 1..n {
        let kf = k as f64;
        let b = (kf * (kf + 2.0 * lam) / ((2.0 * kf + 2.0 * lam).powi(2) - 1.0)).sqrt();
        jacobi[(k - 1, k)] = b;
        jacobi[(k, k - 1)] = b;
    }
    let eigen = jacobi.symmetric_eigen();
    // Total weight mass on [-1, 1] is 2^{2 lam + 1} B(lam+1, lam+1); the
    // map x -> (1+x)/2 carries it onto (0,1) with a 4^{-lam}/2 factor.
    let mu0 = 2.0_f64.powf(2.0 * lam + 1.0) * beta(lam + 1.0, lam + 1.0);
    let map_factor = 4.0_f64.powf(-lam) * 0.5;
    let mut pairs: Vec<(f64, f64)> = (0..n)
        .map(|j| {
            let x = eigen.eigenvalues[j];
            let v0 = eigen.eigenvectors[(0, j)];
            ((1.0 + x) / 2.0, mu0 * v0 * v0 * map_factor)
        })
        .collect();
    pairs.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    // The weight is symmetric about 1/2; pin the middle node of odd rules.
    if n % 2 == 1 {
        pairs[n / 2].0 = 0.5;
    }
    Ok(QuadratureRule {
        lambda_kernel,
        nodes: pairs.iter().map(|p| p.0).collect(),
        weights: pairs.iter().map(|p| p.1).collect(),
    })
}

impl QuadratureRule {
    pub fn lambda_kernel(&self) -> f64 {
        self.lambda_kernel
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// `int_0^1 [tau(1-tau)]^lambda f(tau) dtau`.
    #[inline]
    pub fn integrate(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&t, &w)| w * f(t))
            .sum()
    }

    /// Sum of the weights, i.e. the integral of the bare weight.
    pub fn weight_mass(&self) -> f64 {
        self.weights.iter().sum()
    }
}

/// Weak entropy `eta = rho * int w g(Phi) dtau`; vanishes identically on
/// the vacuum line.
pub fn weak_entropy(
    state: PrimitiveState,
    g: &EntropyGenerator,
    quad: &QuadratureRule,
    p: &GasParams,
) -> f64 {
    let phi = KernelArgument::new(state, p);
    state.rho * quad.integrate(|t| g.eval(phi.eval(t)))
}

/// The flux split `q = q1 - 2 delta q2`: `q1` is the flux of the limit
/// system, `q2` the shift correction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeakEntropyFlux {
    pub total: f64,
    pub q1: f64,
    pub q2: f64,
}

/// Weak entropy flux associated with `eta`.
pub fn weak_entropy_flux(
    state: PrimitiveState,
    g: &EntropyGenerator,
    delta: f64,
    quad: &QuadratureRule,
    p: &GasParams,
) -> WeakEntropyFlux {
    let phi = KernelArgument::new(state, p);
    let a = phi.amplitude;
    let q1 = state.rho
        * quad.integrate(|t| g.eval(phi.eval(t)) * (state.u + p.theta * (1.0 - 2.0 * t) * a));
    let q2 = quad.integrate(|t| g.antideriv(phi.eval(t)))
        + p.theta * a * quad.integrate(|t| g.eval(phi.eval(t)) * (1.0 - 2.0 * t));
    WeakEntropyFlux {
        total: q1 - 2.0 * delta * q2,
        q1,
        q2,
    }
}

/// Physical entropy pair
/// `eta0 = rho u^2 / 2 + (k/(gamma-1)) rho^gamma e^{2s}`,
/// `q0 = u (rho u^2 / 2 + (k gamma/(gamma-1)) rho^gamma e^{2s})`.
pub fn physical_entropy_pair(state: PrimitiveState, p: &GasParams) -> (f64, f64) {
    let PrimitiveState { rho, u, s } = state;
    let pg = p.k / (p.gamma - 1.0) * rho.powf(p.gamma) * (2.0 * s).exp();
    let eta0 = 0.5 * rho * u * u + pg;
    let q0 = u * (0.5 * rho * u * u + p.gamma * pg);
    (eta0, q0)
}

/// First and second partial derivatives of the weak entropy, from the
/// closed quadrature formulas. Requires `rho > 0` (second derivatives
/// carry negative powers of `rho`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EntropyDerivatives {
    pub d_rho: f64,
    pub d_u: f64,
    pub d_s: f64,
    pub d_rho_rho: f64,
    pub d_rho_u: f64,
    pub d_uu: f64,
    pub d_rho_s: f64,
    pub d_ss: f64,
    pub d_us: f64,
}

pub fn entropy_derivatives(
    state: PrimitiveState,
    g: &EntropyGenerator,
    quad: &QuadratureRule,
    p: &GasParams,
) -> Result<EntropyDerivatives> {
    let PrimitiveState { rho, .. } = state;
    if !(rho > 0.0) {
        return Err(Error::NonpositiveDensity(rho));
    }
    let phi = KernelArgument::new(state, p);
    let a = phi.amplitude;
    let th = p.theta;

    let j0 = quad.integrate(|t| g.eval(phi.eval(t)));
    let k0 = quad.integrate(|t| g.deriv(phi.eval(t)));
    let k1 = quad.integrate(|t| g.deriv(phi.eval(t)) * (1.0 - 2.0 * t));
    let l0 = quad.integrate(|t| g.second(phi.eval(t)));
    let l1 = quad.integrate(|t| g.second(phi.eval(t)) * (1.0 - 2.0 * t));
    let l2 = quad.integrate(|t| {
        let m = 1.0 - 2.0 * t;
        g.second(phi.eval(t)) * m * m
    });

    Ok(EntropyDerivatives {
        d_rho: j0 + th * a * k1,
        d_u: rho * k0,
        d_s: rho * a * k1,
        d_rho_rho: (th + th * th) * (a / rho) * k1 + th * th * (a * a / rho) * l2,
        d_rho_u: k0 + th * a * l1,
        d_uu: rho * l0,
        d_rho_s: (1.0 + th) * a * k1 + th * a * a * l2,
        d_ss: rho * a * k1 + rho * a * a * l2,
        d_us: rho * a * l1,
    })
}

/// Maximum residuals of the four compatibility identities linking the
/// weak entropy and its flux, over a set of sample states.
///
/// Every derivative is evaluated by centered differences of step `h` on
/// the kernel functions themselves, so the check is independent of the
/// closed derivative formulas; all four residuals then converge at second
/// order in `h`. Identities that an individual generator satisfies
/// exactly sit at roundoff level instead.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PdeCompatibilityReport {
    /// `eta_rho_rho = theta^2 rho^{gamma-3} e^{2s} eta_uu`
    pub eta_pde: f64,
    /// `q_u = (rho - 2 delta) eta_rho + u eta_u`
    pub flux_u: f64,
    /// `q1_rho = u eta_rho + theta^2 rho^{gamma-2} e^{2s} eta_u`
    pub flux1_rho: f64,
    /// `q2_rho = theta^2 rho^{gamma-3} e^{2s} eta_u`
    pub flux2_rho: f64,
}

impl PdeCompatibilityReport {
    pub fn max(&self) -> f64 {
        self.eta_pde
            .max(self.flux_u)
            .max(self.flux1_rho)
            .max(self.flux2_rho)
    }

    pub fn as_array(&self) -> [f64; 4] {
        [self.eta_pde, self.flux_u, self.flux1_rho, self.flux2_rho]
    }
}

/// Identity labels matching [`PdeCompatibilityReport::as_array`].
pub const PDE_IDENTITY_NAMES: [&str; 4] = ["eta_pde", "flux_u", "flux1_rho", "flux2_rho"];

pub fn verify_entropy_pde(
    g: &EntropyGenerator,
    sample_states: &[PrimitiveState],
    h: f64,
    p: &GasParams,
    delta: f64,
    quad: &QuadratureRule,
) -> Result<PdeCompatibilityReport> {
    if !(h > 0.0) {
        return Err(Error::MonitorPrecondition(format!(
            "finite-difference step must be positive, got {h}"
        )));
    }
    let mut report = PdeCompatibilityReport {
        eta_pde: 0.0,
        flux_u: 0.0,
        flux1_rho: 0.0,
        flux2_rho: 0.0,
    };
    for &st in sample_states {
        if st.rho <= 2.0 * h {
            return Err(Error::MonitorPrecondition(format!(
                "sample density {} is not bounded away from vacuum for step {h}",
                st.rho
            )));
        }
        let eta = |rho: f64, u: f64| weak_entropy(PrimitiveState::new(rho, u, st.s), g, quad, p);
        let flux =
            |rho: f64, u: f64| weak_entropy_flux(PrimitiveState::new(rho, u, st.s), g, delta, quad, p);

        let eta_0 = eta(st.rho, st.u);
        let eta_rp = eta(st.rho + h, st.u);
        let eta_rm = eta(st.rho - h, st.u);
        let eta_up = eta(st.rho, st.u + h);
        let eta_um = eta(st.rho, st.u - h);

        let d_rho = (eta_rp - eta_rm) / (2.0 * h);
        let d_u = (eta_up - eta_um) / (2.0 * h);
        let d_rho_rho = (eta_rp - 2.0 * eta_0 + eta_rm) / (h * h);
        let d_uu = (eta_up - 2.0 * eta_0 + eta_um) / (h * h);

        let e2s = (2.0 * st.s).exp();
        let wave = p.theta * p.theta * st.rho.powf(p.gamma - 3.0) * e2s;

        let f_rp = flux(st.rho + h, st.u);
        let f_rm = flux(st.rho - h, st.u);
        let f_up = flux(st.rho, st.u + h);
        let f_um = flux(st.rho, st.u - h);

        let q_u = (f_up.total - f_um.total) / (2.0 * h);
        let q1_rho = (f_rp.q1 - f_rm.q1) / (2.0 * h);
        let q2_rho = (f_rp.q2 - f_rm.q2) / (2.0 * h);

        report.eta_pde = report.eta_pde.max((d_rho_rho - wave * d_uu).abs());
        report.flux_u = report
            .flux_u
            .max((q_u - ((st.rho - 2.0 * delta) * d_rho + st.u * d_u)).abs());
        report.flux1_rho = report
            .flux1_rho
            .max((q1_rho - (st.u * d_rho + wave * st.rho * d_u)).abs());
        report.flux2_rho = report.flux2_rho.max((q2_rho - wave * d_u).abs());
    }
    Ok(report)
}

/// Entropy pair selector used by the weak-formulation verifiers.
#[derive(Debug, Clone, Copy)]
pub enum EntropyPair<'a> {
    /// The physical energy pair.
    Physical,
    /// `(rho, rho u)`: an exact equality pair.
    Mass,
    /// Kernel-generated pair; `delta = 0` gives the limit-system flux.
    Weak {
        generator: &'a EntropyGenerator,
        quadrature: &'a QuadratureRule,
        delta: f64,
    },
}

impl EntropyPair<'_> {
    pub fn eval(&self, state: PrimitiveState, p: &GasParams) -> (f64, f64) {
        match self {
            Self::Physical => physical_entropy_pair(state, p),
            Self::Mass => (state.rho, state.rho * state.u),
            Self::Weak {
                generator,
                quadrature,
                delta,
            } => {
                let eta = weak_entropy(state, generator, quadrature, p);
                let q = weak_entropy_flux(state, generator, *delta, quadrature, p);
                (eta, q.total)
            }
        }
    }

    /// Whether the pair qualifies for the pass/fail entropy inequality.
    pub fn is_convex_for_inequality(&self, xi_lo: f64, xi_hi: f64) -> bool {
        match self {
            Self::Physical => true,
            Self::Mass => false,
            Self::Weak { generator, .. } => generator.is_strictly_convex_on(xi_lo, xi_hi),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::derive_params;
    use approx::{assert_abs_diff_eq, assert_relative_eq};

    fn quad_for(p: &GasParams) -> QuadratureRule {
        build_quadrature(p.lambda_kernel, 32).unwrap()
    }

    #[test]
    fn quadrature_rejects_bad_arguments() {
        assert!(build_quadrature(-1.0, 8).is_err());
        assert!(build_quadrature(-1.5, 8).is_err());
        assert!(build_quadrature(0.5, 1).is_err());
    }

    #[test]
    fn quadrature_weight_mass() {
        // lambda = 0: int_0^1 dtau = 1
        assert_relative_eq!(
            build_quadrature(0.0, 12).unwrap().weight_mass(),
            1.0,
            max_relative = 1e-13
        );
        // lambda = 1: int tau(1-tau) = 1/6
        assert_relative_eq!(
            build_quadrature(1.0, 12).unwrap().weight_mass(),
            1.0 / 6.0,
            max_relative = 1e-13
        );
        // lambda = 1/4 (gamma = 2): oracle value of B(5/4, 5/4)
        assert_relative_eq!(
            build_quadrature(0.25, 32).unwrap().weight_mass(),
            0.618024892433790639,
            max_relative = 1e-12
        );
        // singular-endpoint regime (gamma > 3)
        assert_relative_eq!(
            build_quadrature(-0.3, 24).unwrap().weight_mass(),
            beta(0.7, 0.7),
            max_relative = 1e-12
        );
    }

    #[test]
    fn quadrature_nodes_inside_weights_positive() {
        for lam in [-0.4, 0.0, 0.25, 1.0, 2.5] {
            for n in [2, 7, 32] {
                let q = build_quadrature(lam, n).unwrap();
                assert_eq!(q.len(), n);
                for (&t, &w) in q.nodes().iter().zip(q.weights()) {
                    assert!(t > 0.0 && t < 1.0, "node {t} outside (0,1)");
                    assert!(w > 0.0, "weight {w} not positive");
                }
            }
        }
    }

    #[test]
    fn quadrature_polynomial_exactness() {
        // Moments against the weight follow the recurrence
        // M_{m+1} = M_m (lam + m + 1) / (2 lam + m + 2), an oracle
        // independent of the gamma-function route.
        for lam in [-0.3, 0.25, 1.0] {
            for n in [2usize, 5, 8] {
                let q = build_quadrature(lam, n).unwrap();
                let mut moment = beta(lam + 1.0, lam + 1.0);
                for m in 0..=(2 * n - 1) {
                    let computed = q.integrate(|t| t.powi(m as i32));
                    assert_relative_eq!(computed, moment, max_relative = 1e-12);
                    moment *= (lam + m as f64 + 1.0) / (2.0 * lam + m as f64 + 2.0);
                }
            }
        }
    }

    #[test]
    fn kernel_argument_endpoints() {
        let p = derive_params(2.0).unwrap();
        let st = PrimitiveState::new(1.3, 0.4, 0.25);
        let phi = KernelArgument::new(st, &p);
        let a = st.rho.powf(p.theta) * st.s.exp();
        assert_eq!(phi.eval(0.0), st.u + a);
        assert_eq!(phi.eval(1.0), st.u - a);
        // affine in tau
        let mid = 0.5 * (phi.eval(0.2) + phi.eval(0.6));
        assert_relative_eq!(phi.eval(0.4), mid, max_relative = 1e-15);
    }

    #[test]
    fn generator_derivatives_consistent() {
        let gens = [
            EntropyGenerator::Constant,
            EntropyGenerator::Linear,
            EntropyGenerator::Quadratic,
            EntropyGenerator::Exponential(0.5),
            EntropyGenerator::Polynomial(vec![1.0, -2.0, 0.5, 0.25]),
        ];
        let h = 1e-6;
        for g in &gens {
            assert_eq!(g.antideriv(0.0), 0.0);
            for &xi in &[-1.3, 0.0, 0.7, 2.1] {
                let fd_g = (g.antideriv(xi + h) - g.antideriv(xi - h)) / (2.0 * h);
                let fd_gp = (g.eval(xi + h) - g.eval(xi - h)) / (2.0 * h);
                let fd_gpp = (g.deriv(xi + h) - g.deriv(xi - h)) / (2.0 * h);
                let scale = 1.0 + g.eval(xi).abs();
                assert_abs_diff_eq!(fd_g, g.eval(xi), epsilon = 1e-6 * scale);
                assert_abs_diff_eq!(fd_gp, g.deriv(xi), epsilon = 1e-6 * scale);
                assert_abs_diff_eq!(fd_gpp, g.second(xi), epsilon = 1e-6 * scale);
            }
        }
    }

    #[test]
    fn convexity_classification() {
        assert!(!EntropyGenerator::Constant.is_strictly_convex_on(-2.0, 2.0));
        assert!(!EntropyGenerator::Linear.is_strictly_convex_on(-2.0, 2.0));
        assert!(EntropyGenerator::Quadratic.is_strictly_convex_on(-2.0, 2.0));
        assert!(EntropyGenerator::Exponential(0.5).is_strictly_convex_on(-2.0, 2.0));
        assert!(EntropyGenerator::Exponential(-1.0).is_strictly_convex_on(-2.0, 2.0));
        assert!(!EntropyGenerator::Polynomial(vec![0.0, 0.0, 0.0, 1.0])
            .is_strictly_convex_on(-2.0, 2.0));
    }

    #[test]
    fn weak_entropy_closed_forms_at_gamma_three() {
        let p = derive_params(3.0).unwrap();
        let q = quad_for(&p);
        let st = PrimitiveState::new(1.7, -0.6, 0.2);
        assert_relative_eq!(
            weak_entropy(st, &EntropyGenerator::Constant, &q, &p),
            st.rho,
            max_relative = 1e-13
        );
        assert_relative_eq!(
            weak_entropy(st, &EntropyGenerator::Linear, &q, &p),
            st.rho * st.u,
            max_relative = 1e-13
        );
        let unit = PrimitiveState::new(1.0, 0.0, 0.0);
        assert_relative_eq!(
            weak_entropy(unit, &EntropyGenerator::Quadratic, &q, &p),
            1.0 / 3.0,
            max_relative = 1e-13
        );
    }

    #[test]
    fn weak_entropy_vanishes_at_vacuum() {
        for gamma in [1.4, 2.0, 3.0] {
            let p = derive_params(gamma).unwrap();
            let q = quad_for(&p);
            let st = PrimitiveState::new(0.0, 1.3, -0.4);
            for g in [
                EntropyGenerator::Quadratic,
                EntropyGenerator::Exponential(0.5),
            ] {
                assert_eq!(weak_entropy(st, &g, &q, &p), 0.0);
            }
        }
    }

    #[test]
    fn weak_entropy_flux_closed_forms() {
        let p = derive_params(3.0).unwrap();
        let q = quad_for(&p);
        let st = PrimitiveState::new(0.7, -1.1, 0.3);

        // delta = 0 collapses the split.
        let f = weak_entropy_flux(st, &EntropyGenerator::Quadratic, 0.0, &q, &p);
        assert_eq!(f.total, f.q1);

        // mass pair: (rho, rho u)
        let f = weak_entropy_flux(st, &EntropyGenerator::Constant, 0.0, &q, &p);
        assert_relative_eq!(f.q1, st.rho * st.u, max_relative = 1e-13);

        // momentum pair: q1 = rho u^2 + k rho^3 e^{2s}, oracle 1.05532891617798153
        let f = weak_entropy_flux(st, &EntropyGenerator::Linear, 0.0, &q, &p);
        let expect = st.rho * st.u * st.u + p.k * st.rho.powi(3) * (2.0 * st.s).exp();
        assert_relative_eq!(f.q1, expect, max_relative = 1e-13);
        assert_relative_eq!(f.q1, 1.0553289161779815, max_relative = 1e-13);
    }

    #[test]
    fn kernel_values_match_adaptive_oracle() {
        // Frozen 30-digit adaptive-quadrature values for gamma = 2,
        // g = exp(0.5 xi), state (1.3, 0.4, 0.25).
        let p = derive_params(2.0).unwrap();
        let q = quad_for(&p);
        let st = PrimitiveState::new(1.3, 0.4, 0.25);
        let g = EntropyGenerator::Exponential(0.5);
        assert_relative_eq!(
            weak_entropy(st, &g, &q, &p),
            1.0582834490014061,
            max_relative = 1e-12
        );
        let f = weak_entropy_flux(st, &g, 0.07, &q, &p);
        assert_relative_eq!(f.q1, 0.5809984825999030, max_relative = 1e-12);
        assert_relative_eq!(f.q2, 0.5133748312879208, max_relative = 1e-12);
        assert_relative_eq!(f.total, f.q1 - 0.14 * f.q2, max_relative = 1e-15);
    }

    #[test]
    fn physical_pair_examples() {
        let p = derive_params(2.0).unwrap();
        assert_eq!(
            physical_entropy_pair(PrimitiveState::new(0.0, 0.0, 0.0), &p),
            (0.0, 0.0)
        );
        let (eta0, q0) = physical_entropy_pair(PrimitiveState::new(1.0, 2.0, 0.0), &p);
        assert_relative_eq!(eta0, 2.125, max_relative = 1e-15);
        assert_relative_eq!(q0, 4.5, max_relative = 1e-15);
        let (_, q0) = physical_entropy_pair(PrimitiveState::new(1.4, 0.0, 0.3), &p);
        assert_eq!(q0, 0.0);
    }

    #[test]
    fn entropy_derivatives_match_finite_differences() {
        let h = 1e-4;
        for gamma in [1.4, 2.0, 3.0] {
            let p = derive_params(gamma).unwrap();
            let q = quad_for(&p);
            for g in [
                EntropyGenerator::Quadratic,
                EntropyGenerator::Exponential(0.5),
            ] {
                let st = PrimitiveState::new(1.3, -0.4, 0.25);
                let d = entropy_derivatives(st, &g, &q, &p).unwrap();
                let eta = |rho: f64, u: f64, s: f64| {
                    weak_entropy(PrimitiveState::new(rho, u, s), &g, &q, &p)
                };
                let (r, u, s) = (st.rho, st.u, st.s);
                let checks = [
                    (d.d_rho, (eta(r + h, u, s) - eta(r - h, u, s)) / (2.0 * h)),
                    (d.d_u, (eta(r, u + h, s) - eta(r, u - h, s)) / (2.0 * h)),
                    (d.d_s, (eta(r, u, s + h) - eta(r, u, s - h)) / (2.0 * h)),
                    (
                        d.d_rho_rho,
                        (eta(r + h, u, s) - 2.0 * eta(r, u, s) + eta(r - h, u, s)) / (h * h),
                    ),
                    (
                        d.d_uu,
                        (eta(r, u + h, s) - 2.0 * eta(r, u, s) + eta(r, u - h, s)) / (h * h),
                    ),
                    (
                        d.d_ss,
                        (eta(r, u, s + h) - 2.0 * eta(r, u, s) + eta(r, u, s - h)) / (h * h),
                    ),
                    (
                        d.d_rho_u,
                        (eta(r + h, u + h, s) - eta(r + h, u - h, s) - eta(r - h, u + h, s)
                            + eta(r - h, u - h, s))
                            / (4.0 * h * h),
                    ),
                    (
                        d.d_rho_s,
                        (eta(r + h, u, s + h) - eta(r + h, u, s - h) - eta(r - h, u, s + h)
                            + eta(r - h, u, s - h))
                            / (4.0 * h * h),
                    ),
                    (
                        d.d_us,
                        (eta(r, u + h, s + h) - eta(r, u + h, s - h) - eta(r, u - h, s + h)
                            + eta(r, u - h, s - h))
                            / (4.0 * h * h),
                    ),
                ];
                for (i, (exact, fd)) in checks.iter().enumerate() {
                    let scale = 1.0 + exact.abs();
                    assert_abs_diff_eq!(exact, fd, epsilon = 1e-5 * scale);
                    let _ = i;
                }
            }
        }
    }

    #[test]
    fn entropy_derivatives_special_cases() {
        let p = derive_params(2.0).unwrap();
        let q = quad_for(&p);
        let st = PrimitiveState::new(1.2, 0.3, -0.1);

        // Strictly convex generator gives d_uu > 0.
        let d = entropy_derivatives(st, &EntropyGenerator::Quadratic, &q, &p).unwrap();
        assert!(d.d_uu > 0.0);

        // Linear generator: all g''-terms drop, d_uu = 0.
        let d = entropy_derivatives(st, &EntropyGenerator::Linear, &q, &p).unwrap();
        assert_eq!(d.d_uu, 0.0);
        assert_eq!(d.d_us, 0.0);

        assert!(entropy_derivatives(
            PrimitiveState::new(0.0, 0.0, 0.0),
            &EntropyGenerator::Linear,
            &q,
            &p
        )
        .is_err());
    }

    #[test]
    fn entropy_pde_exact_for_mass_pair() {
        // g = 1 at gamma = 3 is the mass pair; all four identities hold to
        // quadrature/roundoff precision.
        let p = derive_params(3.0).unwrap();
        let q = quad_for(&p);
        let states = [
            PrimitiveState::new(0.8, -0.5, 0.1),
            PrimitiveState::new(1.6, 1.2, -0.3),
        ];
        let report =
            verify_entropy_pde(&EntropyGenerator::Constant, &states, 1e-3, &p, 0.05, &q).unwrap();
        assert!(report.max() < 1e-9, "report = {report:?}");
    }

    #[test]
    fn entropy_pde_delta_zero_reduction() {
        // At delta = 0 the flux_u identity reads q_u = rho eta_rho + u eta_u.
        let p = derive_params(2.0).unwrap();
        let q = quad_for(&p);
        let states = [PrimitiveState::new(1.1, 0.4, 0.2)];
        let report =
            verify_entropy_pde(&EntropyGenerator::Quadratic, &states, 1e-3, &p, 0.0, &q).unwrap();
        assert!(report.flux_u < 1e-6, "flux_u residual {}", report.flux_u);
    }

    #[test]
    fn entropy_pde_rejects_near_vacuum_samples() {
        let p = derive_params(2.0).unwrap();
        let q = quad_for(&p);
        let states = [PrimitiveState::new(1e-4, 0.0, 0.0)];
        assert!(
            verify_entropy_pde(&EntropyGenerator::Quadratic, &states, 1e-3, &p, 0.0, &q).is_err()
        );
    }

    #[test]
    fn vacuum_normalization_proportional_to_weight_mass() {
        // The kernel derivative at vacuum is B(lam+1, lam+1) * g(u): the
        // weight mass is the proportionality constant of the vacuum
        // normalization convention.
        let p = derive_params(2.0).unwrap();
        let q = quad_for(&p);
        let g = EntropyGenerator::Exponential(0.5);
        let u = 0.7;
        let h = 1e-8;
        let slope = weak_entropy(PrimitiveState::new(h, u, 0.3), &g, &q, &p) / h;
        let expect = q.weight_mass() * g.eval(u);
        assert_relative_eq!(slope, expect, max_relative = 1e-6);
    }
}
