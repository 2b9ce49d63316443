//! Pointwise algebra of the polytropic gas system.
//!
//! Everything here is a pure function of its arguments: gas parameters,
//! pressures, eigenvalues, Riemann invariants, conversions between
//! primitive and conserved variables, and the dissipation source terms
//! `A` and `D` of the energy-form equations. Spatial gradients are inputs
//! where needed; the solver owns the stencil.

use crate::error::{Error, Result};

/// Adiabatic exponent and its derived constants.
///
/// The pressure law is `p = k rho^gamma e^{2s}` with `k = theta^2 / gamma`
/// and `theta = (gamma - 1) / 2`; `lambda_kernel` is the exponent of the
/// weight `[tau (1 - tau)]^lambda` in the weak entropy kernel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GasParams {
    pub gamma: f64,
    pub theta: f64,
    pub k: f64,
    pub lambda_kernel: f64,
}

/// Derive the gas constants from the adiabatic exponent.
///
/// Rejects `gamma <= 1`. For `gamma > 3` the first two characteristic
/// fields lose genuine nonlinearity at vacuum; the monitors stay valid and
/// the kernel weight stays integrable, so this only logs a warning.
pub fn derive_params(gamma: f64) -> Result<GasParams> {
    if !gamma.is_finite() || gamma <= 1.0 {
        return Err(Error::InvalidGamma(gamma));
    }
    if gamma > 3.0 {
        log::warn!(
            "gamma = {gamma} > 3: characteristic fields degenerate at vacuum; \
             kernel exponent stays integrable"
        );
    }
    let theta = (gamma - 1.0) / 2.0;
    Ok(GasParams {
        gamma,
        theta,
        k: theta * theta / gamma,
        lambda_kernel: (3.0 - gamma) / (2.0 * (gamma - 1.0)),
    })
}

impl GasParams {
    pub fn new(gamma: f64) -> Result<Self> {
        derive_params(gamma)
    }

    /// Sound speed `theta rho^theta e^s`.
    #[inline]
    pub fn sound_speed(&self, rho: f64, s: f64) -> f64 {
        self.theta * rho.powf(self.theta) * s.exp()
    }
}

/// State in primitive variables `(rho, u, s)` with `rho >= 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PrimitiveState {
    pub rho: f64,
    pub u: f64,
    pub s: f64,
}

impl PrimitiveState {
    #[inline]
    pub fn new(rho: f64, u: f64, s: f64) -> Self {
        Self { rho, u, s }
    }
}

/// State in conserved variables `(rho, m, upsilon) = (rho, rho u, rho s)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConservedState {
    pub rho: f64,
    pub m: f64,
    pub upsilon: f64,
}

/// The two perturbation scales of the approximation.
///
/// `epsilon` is the viscosity, `delta` the flux shift that enforces the
/// density floor `2 delta`. Refinement sequences must send `epsilon` to
/// zero faster than `delta`; [`ApproxParams::coupled`] applies the default
/// coupling `epsilon = delta^2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ApproxParams {
    pub epsilon: f64,
    pub delta: f64,
}

impl ApproxParams {
    pub fn new(epsilon: f64, delta: f64) -> Result<Self> {
        if !(epsilon > 0.0 && epsilon.is_finite() && delta > 0.0 && delta.is_finite()) {
            return Err(Error::InvalidApproxParams { epsilon, delta });
        }
        Ok(Self { epsilon, delta })
    }

    /// Default coupling `epsilon = delta^2`.
    pub fn coupled(delta: f64) -> Result<Self> {
        Self::new(delta * delta, delta)
    }
}

/// Constants of the a-priori bounds: `|s| <= n_bound`, `TV(s) <= c0 < 1`,
/// and the invariant-region constants `big_m <= c_shift` with
/// `c_shift * c0 < big_m`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundsSpec {
    pub n_bound: f64,
    pub c0: f64,
    pub big_m: f64,
    pub c_shift: f64,
}

impl BoundsSpec {
    pub fn new(n_bound: f64, c0: f64, big_m: f64, c_shift: f64) -> Result<Self> {
        if !(c0 > 0.0 && c0 < 1.0) {
            return Err(Error::InvalidBounds(format!(
                "the total-variation budget must satisfy 0 < c0 < 1, got c0 = {c0}"
            )));
        }
        if !(big_m <= c_shift) {
            return Err(Error::InvalidBounds(format!(
                "the invariant-region constants must satisfy M <= c, got M = {big_m}, c = {c_shift}"
            )));
        }
        if !(c_shift * c0 < big_m) {
            return Err(Error::InvalidBounds(format!(
                "the invariant-region constants must satisfy c*c0 < M, got c*c0 = {}, M = {big_m}",
                c_shift * c0
            )));
        }
        if !(n_bound >= 0.0) {
            return Err(Error::InvalidBounds(format!(
                "the entropy sup-norm bound must be nonnegative, got {n_bound}"
            )));
        }
        Ok(Self {
            n_bound,
            c0,
            big_m,
            c_shift,
        })
    }
}

/// Spatial gradients `(rho_x, u_x, s_x)` supplied by the caller.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Gradients {
    pub rho_x: f64,
    pub u_x: f64,
    pub s_x: f64,
}

/// Pressure `k rho^gamma e^{2s}`; vanishes at vacuum.
#[inline]
pub fn pressure(state: PrimitiveState, p: &GasParams) -> f64 {
    p.k * state.rho.powf(p.gamma) * (2.0 * state.s).exp()
}

/// Shifted pressure `P1(rho, delta) = k rho^gamma - 2 delta k (gamma/(gamma-1)) rho^{gamma-1}`.
///
/// Call sites multiply by `e^{2s}`. Reduces to `k rho^gamma` at `delta = 0`
/// and is monotone increasing in `rho` on `rho >= 2 delta`.
#[inline]
pub fn perturbed_pressure(rho: f64, delta: f64, p: &GasParams) -> f64 {
    let rg1 = rho.powf(p.gamma - 1.0);
    p.k * rg1 * (rho - 2.0 * delta * p.gamma / (p.gamma - 1.0))
}

/// Eigenvalues `(u - theta rho^theta e^s, u + theta rho^theta e^s, u)`.
///
/// All three coincide at vacuum; away from vacuum the first strictly
/// precedes the third, which strictly precedes the second.
#[inline]
pub fn eigenvalues(state: PrimitiveState, p: &GasParams) -> (f64, f64, f64) {
    let c = p.sound_speed(state.rho, state.s);
    (state.u - c, state.u + c, state.u)
}

/// First two eigenvalues of the flux-shifted system,
/// `u -+ ((rho - 2 delta)/rho) theta rho^theta e^s`.
///
/// Rejects vacuum (the shift factor divides by `rho`).
pub fn perturbed_eigenvalues(
    state: PrimitiveState,
    delta: f64,
    p: &GasParams,
) -> Result<(f64, f64)> {
    if !(state.rho > 0.0) {
        return Err(Error::NonpositiveDensity(state.rho));
    }
    let factor = (state.rho - 2.0 * delta) / state.rho;
    let c = p.sound_speed(state.rho, state.s);
    Ok((state.u - factor * c, state.u + factor * c))
}

/// Riemann invariants `(z, w) = (rho^theta e^s - u, rho^theta e^s + u)`
/// of the isentropic reduction.
#[inline]
pub fn riemann_invariants(state: PrimitiveState, p: &GasParams) -> (f64, f64) {
    let a = state.rho.powf(p.theta) * state.s.exp();
    (a - state.u, a + state.u)
}

/// Directional derivatives of the eigenvalues along their eigenvectors,
/// `(-theta(1+theta) rho^{theta-1} e^s, +theta(1+theta) rho^{theta-1} e^s, 0)`.
///
/// Rejects vacuum when `theta < 1` (`rho^{theta-1}` is singular there);
/// otherwise evaluates the formulas, which vanish at vacuum for `gamma > 3`.
pub fn genuine_nonlinearity(state: PrimitiveState, p: &GasParams) -> Result<(f64, f64, f64)> {
    if state.rho == 0.0 && p.theta < 1.0 {
        return Err(Error::VacuumSingular { gamma: p.gamma });
    }
    let g2 = p.theta * (1.0 + p.theta) * state.rho.powf(p.theta - 1.0) * state.s.exp();
    Ok((-g2, g2, 0.0))
}

/// `(rho, u, s) -> (rho, rho u, rho s)`.
#[inline]
pub fn to_conserved(state: PrimitiveState) -> ConservedState {
    ConservedState {
        rho: state.rho,
        m: state.rho * state.u,
        upsilon: state.rho * state.s,
    }
}

/// `(rho, m, upsilon) -> (rho, m/rho, upsilon/rho)`; rejects `rho <= 0`.
pub fn to_primitive(c: ConservedState) -> Result<PrimitiveState> {
    if !(c.rho > 0.0) {
        return Err(Error::NonpositiveDensity(c.rho));
    }
    Ok(PrimitiveState {
        rho: c.rho,
        u: c.m / c.rho,
        s: c.upsilon / c.rho,
    })
}

/// Dissipation source
/// `A = rho u_x^2 + k rho^{gamma-2} e^{2s} (gamma rho_x^2 + (4/(gamma-1)) rho^2 s_x^2 + 4 rho rho_x s_x)`.
///
/// Nonnegative for every input with `gamma > 1`: the quadratic form in
/// `(rho_x, rho s_x)` has determinant margin `4/(gamma-1)`. For
/// `gamma < 2` the `rho^{gamma-2} rho_x^2` term is singular at vacuum, so
/// `rho = 0` with `rho_x != 0` is rejected in that regime.
pub fn dissipation_a(state: PrimitiveState, grads: Gradients, p: &GasParams) -> Result<f64> {
    let PrimitiveState { rho, s, .. } = state;
    if rho == 0.0 && p.gamma < 2.0 && grads.rho_x != 0.0 {
        return Err(Error::VacuumSingular { gamma: p.gamma });
    }
    let e2s = (2.0 * s).exp();
    // Group the powers of rho per term so vacuum limits come out finite.
    let term_rho_x = if grads.rho_x == 0.0 {
        0.0
    } else {
        p.gamma * rho.powf(p.gamma - 2.0) * grads.rho_x * grads.rho_x
    };
    let term_s_x = 4.0 / (p.gamma - 1.0) * rho.powf(p.gamma) * grads.s_x * grads.s_x;
    let term_cross = 4.0 * rho.powf(p.gamma - 1.0) * grads.rho_x * grads.s_x;
    Ok(rho * grads.u_x * grads.u_x + p.k * e2s * (term_rho_x + term_s_x + term_cross))
}

/// Flux-shift source
/// `D = (1/3)(u^3)_x + (4k/(gamma-1)) rho^{gamma-1} e^{2s} u s_x
///    + 2k(gamma/(gamma-1))(rho^{gamma-1} e^{2s} u)_x`,
/// with the two derivative groups expanded by the chain rule on the
/// supplied gradients. Sign-indefinite by construction.
pub fn dissipation_d(state: PrimitiveState, grads: Gradients, p: &GasParams) -> f64 {
    let PrimitiveState { rho, u, s } = state;
    let e2s = (2.0 * s).exp();
    let gm1 = p.gamma - 1.0;
    let rg1 = rho.powf(gm1);
    let cubic = u * u * grads.u_x;
    let entropy_term = 4.0 * p.k / gm1 * rg1 * e2s * u * grads.s_x;
    // (rho^{gamma-1} e^{2s} u)_x expanded:
    let product_x = gm1 * rho.powf(p.gamma - 2.0) * grads.rho_x * e2s * u
        + rg1 * e2s * (2.0 * grads.s_x * u + grads.u_x);
    cubic + entropy_term + 2.0 * p.k * p.gamma / gm1 * product_x
}
