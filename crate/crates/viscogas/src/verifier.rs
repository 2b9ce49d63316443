//! Weak-formulation and structure verification over trajectories.
//!
//! These checks quantify what the regularized runs should satisfy as the
//! perturbation scales shrink: the three weak integral identities of the
//! limit system, the entropy inequality for convex pairs, the equivalence
//! of the conserved and energy forms through the dissipation sources, and
//! self-convergence under joint `(epsilon, delta)` refinement.

use crate::entropy::EntropyPair;
use crate::error::{Error, Result};
use crate::model::{dissipation_a, dissipation_d, ApproxParams, GasParams, Gradients};
use crate::solver::{self, Boundary, Field, Grid1D, RawData, SolverConfig, Trajectory, Variant};
use rayon::prelude::*;

/// Compactly supported C^1 space-time bump
/// `phi(x, t) = amplitude * B((x - x0)/r_x) * B((t - t0)/r_t)` with
/// `B(y) = (1 - y^2)^3` inside `|y| < 1` and zero outside.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TestFunction {
    pub x0: f64,
    pub t0: f64,
    pub r_x: f64,
    pub r_t: f64,
    pub amplitude: f64,
}

#[inline]
fn bump(y: f64) -> f64 {
    if y.abs() < 1.0 {
        let w = 1.0 - y * y;
        w * w * w
    } else {
        0.0
    }
}

#[inline]
fn bump_deriv(y: f64) -> f64 {
    if y.abs() < 1.0 {
        let w = 1.0 - y * y;
        -6.0 * y * w * w
    } else {
        0.0
    }
}

impl TestFunction {
    pub fn new(x0: f64, t0: f64, r_x: f64, r_t: f64) -> Result<Self> {
        if !(r_x > 0.0 && r_t > 0.0) {
            return Err(Error::InvalidTestFunction(format!(
                "radii must be positive, got r_x = {r_x}, r_t = {r_t}"
            )));
        }
        Ok(Self {
            x0,
            t0,
            r_x,
            r_t,
            amplitude: 1.0,
        })
    }

    pub fn with_amplitude(mut self, amplitude: f64) -> Result<Self> {
        if !(amplitude >= 0.0) {
            return Err(Error::InvalidTestFunction(format!(
                "amplitude must be nonnegative, got {amplitude}"
            )));
        }
        self.amplitude = amplitude;
        Ok(self)
    }

    #[inline]
    pub fn eval(&self, x: f64, t: f64) -> f64 {
        self.amplitude * bump((x - self.x0) / self.r_x) * bump((t - self.t0) / self.r_t)
    }

    #[inline]
    pub fn eval_dx(&self, x: f64, t: f64) -> f64 {
        self.amplitude * bump_deriv((x - self.x0) / self.r_x) / self.r_x
            * bump((t - self.t0) / self.r_t)
    }

    #[inline]
    pub fn eval_dt(&self, x: f64, t: f64) -> f64 {
        self.amplitude * bump((x - self.x0) / self.r_x) * bump_deriv((t - self.t0) / self.r_t)
            / self.r_t
    }

    /// Support box `((x_lo, x_hi), (t_lo, t_hi))`.
    pub fn support(&self) -> ((f64, f64), (f64, f64)) {
        (
            (self.x0 - self.r_x, self.x0 + self.r_x),
            (self.t0 - self.r_t, self.t0 + self.r_t),
        )
    }
}

/// Checks shared by every space-time quadrature over a trajectory: the
/// spatial support must stay strictly inside the domain, the temporal
/// support must not extend past the final time, and the snapshot stride
/// must resolve the bump (spacing at most `r_t / 10`).
fn validate_support(traj: &Trajectory, phi: &TestFunction, forbid_initial_overlap: bool) -> Result<()> {
    let first = traj
        .snapshots
        .first()
        .ok_or_else(|| Error::InvalidTrajectory("trajectory has no snapshots".into()))?;
    let grid = first.grid;
    let ((x_lo, x_hi), (t_lo, t_hi)) = phi.support();
    if x_lo <= grid.x_min || x_hi >= grid.x_max {
        return Err(Error::InvalidTestFunction(format!(
            "spatial support [{x_lo}, {x_hi}] touches the domain boundary [{}, {}]",
            grid.x_min, grid.x_max
        )));
    }
    let t_end = traj.t_end();
    if t_hi > t_end * (1.0 + 1e-12) {
        return Err(Error::InvalidTestFunction(format!(
            "temporal support reaches {t_hi}, beyond the trajectory end {t_end}"
        )));
    }
    if t_lo >= t_end {
        return Err(Error::InvalidTestFunction(
            "temporal support lies entirely outside the trajectory".into(),
        ));
    }
    if forbid_initial_overlap && t_lo < 0.0 {
        return Err(Error::InvalidTestFunction(format!(
            "temporal support must stay away from t = 0, starts at {t_lo}"
        )));
    }
    let spacing = traj.max_snapshot_spacing();
    if spacing > phi.r_t / 10.0 {
        return Err(Error::InvalidTrajectory(format!(
            "snapshot spacing {spacing} exceeds r_t/10 = {}; store snapshots more often",
            phi.r_t / 10.0
        )));
    }
    Ok(())
}

/// Strictly interior support in both space and `(0, t_end)`: used by the
/// dissipation-measure estimate, which has no boundary terms to fall back
/// on.
pub(crate) fn validate_interior_support(traj: &Trajectory, phi: &TestFunction) -> Result<()> {
    validate_support(traj, phi, true)?;
    let ((_, _), (t_lo, t_hi)) = phi.support();
    let t_end = traj.t_end();
    if t_lo <= 0.0 || t_hi >= t_end {
        return Err(Error::InvalidTestFunction(format!(
            "temporal support [{t_lo}, {t_hi}] must lie strictly inside (0, {t_end})"
        )));
    }
    Ok(())
}

pub(crate) fn trapezoid_time_weights(traj: &Trajectory) -> Vec<f64> {
    time_weights(traj)
}

/// Trapezoid weights over the (possibly nonuniform) snapshot times.
fn time_weights(traj: &Trajectory) -> Vec<f64> {
    let ts: Vec<f64> = traj.snapshots.iter().map(|f| f.t).collect();
    let n = ts.len();
    let mut w = vec![0.0; n];
    for k in 0..n {
        let left = if k == 0 { ts[0] } else { ts[k - 1] };
        let right = if k == n - 1 { ts[n - 1] } else { ts[k + 1] };
        w[k] = 0.5 * (right - left);
    }
    w
}

/// Space-time quadrature of `eta phi_t + q phi_x` for a per-cell pair,
/// cell sums in x and trapezoid in t. The same path serves the weak
/// residuals and the entropy inequality, so identical pairs produce
/// identical floating-point results.
fn pair_integral(
    traj: &Trajectory,
    phi: &TestFunction,
    p: &GasParams,
    pair: &EntropyPair,
) -> f64 {
    let wt = time_weights(traj);
    let mut total = 0.0;
    for (field, w) in traj.snapshots.iter().zip(&wt) {
        let dx = field.grid.dx();
        let mut slab = 0.0;
        for i in 0..field.n_cells() {
            let x = field.grid.cell_center(i);
            let phi_t = phi.eval_dt(x, field.t);
            let phi_x = phi.eval_dx(x, field.t);
            if phi_t == 0.0 && phi_x == 0.0 {
                continue;
            }
            let (eta, q) = pair.eval(field.primitive(i), p);
            slab += eta * phi_t + q * phi_x;
        }
        total += w * slab * dx;
    }
    total
}

/// Quadrature of `|eta| |phi_t| + |q| |phi_x|`: the natural magnitude
/// against which a residual of the same integral is judged.
fn pair_integral_scale(
    traj: &Trajectory,
    phi: &TestFunction,
    p: &GasParams,
    pair: &EntropyPair,
) -> f64 {
    let wt = time_weights(traj);
    let mut total = 0.0;
    for (field, w) in traj.snapshots.iter().zip(&wt) {
        let dx = field.grid.dx();
        let mut slab = 0.0;
        for i in 0..field.n_cells() {
            let x = field.grid.cell_center(i);
            let phi_t = phi.eval_dt(x, field.t);
            let phi_x = phi.eval_dx(x, field.t);
            if phi_t == 0.0 && phi_x == 0.0 {
                continue;
            }
            let (eta, q) = pair.eval(field.primitive(i), p);
            slab += eta.abs() * phi_t.abs() + q.abs() * phi_x.abs();
        }
        total += w * slab * dx;
    }
    total
}

fn initial_term(field0: &Field, phi: &TestFunction, density: impl Fn(&Field, usize) -> f64) -> f64 {
    let dx = field0.grid.dx();
    let mut total = 0.0;
    for i in 0..field0.n_cells() {
        let x = field0.grid.cell_center(i);
        let w = phi.eval(x, 0.0);
        if w != 0.0 {
            total += density(field0, i) * w;
        }
    }
    total * dx
}

/// Residuals of the three weak integral identities of the limit system:
/// mass, momentum and entropy density, including the initial-data term
/// when the support of `phi` overlaps `t = 0`.
pub fn weak_residual(
    traj: &Trajectory,
    phi: &TestFunction,
    p: &GasParams,
) -> Result<(f64, f64, f64)> {
    validate_support(traj, phi, false)?;
    let momentum = MomentumPair;
    let entropy_density = EntropyDensityPair;
    let mut r_mass = pair_integral(traj, phi, p, &EntropyPair::Mass);
    let mut r_mom = custom_pair_integral(traj, phi, p, &momentum);
    let mut r_ent = custom_pair_integral(traj, phi, p, &entropy_density);
    let field0 = &traj.snapshots[0];
    if phi.t0 - phi.r_t < 0.0 {
        r_mass += initial_term(field0, phi, |f, i| f.rho[i]);
        r_mom += initial_term(field0, phi, |f, i| f.m[i]);
        r_ent += initial_term(field0, phi, |f, i| f.upsilon[i]);
    }
    Ok((r_mass, r_mom, r_ent))
}

/// Momentum pair of the limit system: `(rho u, rho u^2 + k rho^gamma e^{2s})`.
struct MomentumPair;
/// Entropy-density pair of the limit system: `(rho s, rho u s)`.
struct EntropyDensityPair;

trait CellPair {
    fn eval(&self, field: &Field, i: usize, p: &GasParams) -> (f64, f64);
}

impl CellPair for MomentumPair {
    fn eval(&self, field: &Field, i: usize, p: &GasParams) -> (f64, f64) {
        let st = field.primitive(i);
        (
            st.rho * st.u,
            st.rho * st.u * st.u + crate::model::pressure(st, p),
        )
    }
}

impl CellPair for EntropyDensityPair {
    fn eval(&self, field: &Field, i: usize, _p: &GasParams) -> (f64, f64) {
        let st = field.primitive(i);
        (st.rho * st.s, st.rho * st.u * st.s)
    }
}

fn custom_pair_integral(
    traj: &Trajectory,
    phi: &TestFunction,
    p: &GasParams,
    pair: &impl CellPair,
) -> f64 {
    let wt = time_weights(traj);
    let mut total = 0.0;
    for (field, w) in traj.snapshots.iter().zip(&wt) {
        let dx = field.grid.dx();
        let mut slab = 0.0;
        for i in 0..field.n_cells() {
            let x = field.grid.cell_center(i);
            let phi_t = phi.eval_dt(x, field.t);
            let phi_x = phi.eval_dx(x, field.t);
            if phi_t == 0.0 && phi_x == 0.0 {
                continue;
            }
            let (eta, q) = pair.eval(field, i, p);
            slab += eta * phi_t + q * phi_x;
        }
        total += w * slab * dx;
    }
    total
}

/// Value and magnitude of the entropy-inequality integral
/// `int int eta phi_t + q phi_x dx dt`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InequalityOutcome {
    pub integral: f64,
    /// `int int |eta| |phi_t| + |q| |phi_x|`, the comparison scale.
    pub scale: f64,
}

/// Entropy-inequality integral for a nonnegative test function supported
/// away from `t = 0`. Nonnegative in the vanishing-perturbation limit for
/// convex weak pairs; `strict` rejects pairs that are not strictly convex
/// over the range of kernel arguments seen by the trajectory.
pub fn entropy_inequality_residual(
    traj: &Trajectory,
    pair: &EntropyPair,
    phi: &TestFunction,
    p: &GasParams,
    strict: bool,
) -> Result<InequalityOutcome> {
    validate_support(traj, phi, true)?;
    if strict {
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for field in &traj.snapshots {
            for i in 0..field.n_cells() {
                let st = field.primitive(i);
                let a = st.rho.powf(p.theta) * st.s.exp();
                lo = lo.min(st.u - a);
                hi = hi.max(st.u + a);
            }
        }
        if !pair.is_convex_for_inequality(lo, hi) {
            return Err(Error::InvalidTestFunction(
                "entropy pair is not strictly convex over the trajectory range; \
                 pass strict = false for informational use"
                    .into(),
            ));
        }
    }
    Ok(InequalityOutcome {
        integral: pair_integral(traj, phi, p, pair),
        scale: pair_integral_scale(traj, phi, p, pair),
    })
}

/// Discrete residual of the energy-form equation over all consecutive
/// snapshot pairs: forward difference in time, centered differences in
/// space, with the dissipation sources `eps A - delta D` included.
///
/// On resolved smooth flux-viscosity runs the maximum is `O(dt + dx^2)`.
/// Requires snapshots stored every step.
pub fn equivalence_residual(
    traj: &Trajectory,
    approx: ApproxParams,
    p: &GasParams,
) -> Result<f64> {
    if traj.variant != Variant::FluxViscosity {
        return Err(Error::InvalidTrajectory(
            "energy-form equivalence applies to flux-viscosity runs".into(),
        ));
    }
    if traj.snapshot_stride != 1 {
        return Err(Error::InvalidTrajectory(format!(
            "energy-form equivalence needs snapshots every step, stride is {}",
            traj.snapshot_stride
        )));
    }
    if traj.snapshots.len() < 2 {
        return Err(Error::InvalidTrajectory(
            "at least two snapshots are required".into(),
        ));
    }
    let eps = approx.epsilon;
    let delta = approx.delta;
    let mut worst: f64 = 0.0;
    for pair in traj.snapshots.windows(2) {
        let (before, after) = (&pair[0], &pair[1]);
        let dt = after.t - before.t;
        let dx = before.grid.dx();
        let n = before.n_cells();
        let eta0 = |f: &Field, i: usize| crate::entropy::physical_entropy_pair(f.primitive(i), p);
        for i in 1..n - 1 {
            let (e_c, _) = eta0(before, i);
            let (e_l, q_l) = eta0(before, i - 1);
            let (e_r, q_r) = eta0(before, i + 1);
            let (e_next, _) = eta0(after, i);
            let grads = Gradients {
                rho_x: (before.rho[i + 1] - before.rho[i - 1]) / (2.0 * dx),
                u_x: (before.velocity(i + 1) - before.velocity(i - 1)) / (2.0 * dx),
                s_x: (before.specific_entropy(i + 1) - before.specific_entropy(i - 1))
                    / (2.0 * dx),
            };
            let st = before.primitive(i);
            let a = dissipation_a(st, grads, p).expect("positive density on trajectory");
            let d = dissipation_d(st, grads, p);
            let r = (e_next - e_c) / dt + (q_r - q_l) / (2.0 * dx)
                - eps * (e_r - 2.0 * e_c + e_l) / (dx * dx)
                + eps * a
                - delta * d;
            worst = worst.max(r.abs());
        }
    }
    Ok(worst)
}

/// Pointwise regrouping identity behind the shift-flux terms of the
/// energy form: moving `rho u` inside the derivative of
/// `rho^{gamma-1} e^{2s}` and adding the matching `u_x` term equals the
/// full product derivative. Exact algebra on any jet values.
pub fn shift_flux_product_identity(
    rho: f64,
    u: f64,
    s: f64,
    grads: Gradients,
    delta: f64,
    p: &GasParams,
) -> (f64, f64) {
    let gm1 = p.gamma - 1.0;
    let base = p.k * p.gamma / gm1;
    let e2s = (2.0 * s).exp();
    // d/dx of rho^{gamma-1} e^{2s} on the jet values
    let weight_x =
        gm1 * rho.powf(p.gamma - 2.0) * grads.rho_x * e2s + rho.powf(gm1) * e2s * 2.0 * grads.s_x;
    let lhs = rho * u * (2.0 * delta * base / rho) * weight_x
        + base * rho.powf(gm1) * e2s * (2.0 * delta * grads.u_x);
    let rhs = 2.0 * delta * base * (u * weight_x + rho.powf(gm1) * e2s * grads.u_x);
    (lhs, rhs)
}

/// Pointwise regrouping of the entropy-weighted transport term: splitting
/// `rho (s_t + u s_x)` into the shifted advection plus the `delta` excess.
pub fn entropy_weight_split_identity(
    rho: f64,
    u: f64,
    s: f64,
    s_t: f64,
    s_x: f64,
    delta: f64,
    p: &GasParams,
) -> (f64, f64) {
    let gm1 = p.gamma - 1.0;
    let w = 2.0 * p.k / gm1 * rho.powf(gm1) * (2.0 * s).exp();
    let lhs = w * rho * (s_t + u * s_x);
    let rhs = w * (rho * s_t + (rho - 2.0 * delta) * u * s_x) + 2.0 * delta * w * u * s_x;
    (lhs, rhs)
}

/// Pointwise cubic identity of the shift term:
/// `u^2/2 * (2 delta u_x) = (delta/3) (u^3)_x`.
pub fn cubic_shift_identity(u: f64, u_x: f64, delta: f64) -> (f64, f64) {
    (0.5 * u * u * (2.0 * delta * u_x), delta / 3.0 * (3.0 * u * u * u_x))
}

/// One refinement level: flux shift, coupled viscosity, and a grid that
/// resolves the viscosity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LadderLevel {
    pub delta: f64,
    pub epsilon: f64,
    pub grid: Grid1D,
}

/// Halving-`delta` refinement ladder with `epsilon = delta^2` and
/// `dx <= epsilon / 2`; the finest level serves as the reference.
#[derive(Debug, Clone, PartialEq)]
pub struct RefinementLadder {
    pub levels: Vec<LadderLevel>,
}

impl RefinementLadder {
    /// Build `n_levels` levels starting from `delta0`, halving each time.
    pub fn coupled(
        delta0: f64,
        n_levels: usize,
        x_min: f64,
        x_max: f64,
        boundary: Boundary,
    ) -> Result<Self> {
        if !(delta0 > 0.0) || n_levels == 0 {
            return Err(Error::InvalidLadder(format!(
                "need delta0 > 0 and at least one level, got delta0 = {delta0}, levels = {n_levels}"
            )));
        }
        let mut levels = Vec::with_capacity(n_levels);
        let mut delta = delta0;
        for _ in 0..n_levels {
            let epsilon = delta * delta;
            let n_cells = ((x_max - x_min) / (epsilon / 2.0)).ceil() as usize;
            levels.push(LadderLevel {
                delta,
                epsilon,
                grid: Grid1D::new(x_min, x_max, n_cells.max(16), boundary)?,
            });
            delta *= 0.5;
        }
        Ok(Self { levels })
    }
}

/// Shared run parameters for every ladder level.
#[derive(Debug, Clone, Copy)]
pub struct LadderRunConfig {
    pub params: GasParams,
    pub cfl: f64,
    pub t_end: f64,
    pub variant: Variant,
    /// Snapshot stride per level; large values store only endpoints.
    pub snapshot_every: usize,
}

/// One row of the refinement error table.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorTableRow {
    pub level: usize,
    pub delta: f64,
    pub epsilon: f64,
    pub dx: f64,
    pub err_rho: f64,
    pub err_u: f64,
    pub err_s: f64,
    pub order: Option<f64>,
}

/// Run every ladder level and compare final states against the finest
/// level in L1, away from the flux-shift floor: density everywhere,
/// velocity and entropy only where the reference density exceeds
/// `4 * max delta`. Empirical orders come from consecutive levels.
pub fn convergence_study(
    ladder: &RefinementLadder,
    raw: &RawData,
    run_cfg: &LadderRunConfig,
) -> Result<Vec<ErrorTableRow>> {
    if ladder.levels.len() < 3 {
        return Err(Error::InvalidLadder(format!(
            "need at least 3 levels, got {}",
            ladder.levels.len()
        )));
    }
    let finest = ladder.levels.last().unwrap();
    if finest.grid.dx() > finest.epsilon / 2.0 * (1.0 + 1e-12) {
        return Err(Error::InvalidLadder(format!(
            "finest level does not resolve its viscosity: dx = {}, epsilon/2 = {}",
            finest.grid.dx(),
            finest.epsilon / 2.0
        )));
    }
    let trajectories: Vec<Result<Trajectory>> = ladder
        .levels
        .par_iter()
        .map(|level| {
            let cfg = SolverConfig {
                params: run_cfg.params,
                approx: ApproxParams::new(level.epsilon, level.delta)?,
                grid: level.grid,
                cfl: run_cfg.cfl,
                t_end: run_cfg.t_end,
                snapshot_every: run_cfg.snapshot_every,
                variant: run_cfg.variant,
            };
            solver::run(&cfg, raw)
        })
        .collect();
    let mut finals = Vec::with_capacity(trajectories.len());
    for t in trajectories {
        finals.push(t?.final_field().clone());
    }
    let reference = finals.last().unwrap().clone();
    let rho_cut = 4.0 * ladder.levels.iter().map(|l| l.delta).fold(0.0, f64::max);

    let mut rows = Vec::new();
    let mut previous_total: Option<f64> = None;
    for (j, (level, field)) in ladder.levels.iter().zip(&finals).enumerate() {
        let is_reference = j + 1 == ladder.levels.len();
        let (err_rho, err_u, err_s) = if is_reference {
            (0.0, 0.0, 0.0)
        } else {
            l1_errors(field, &reference, rho_cut)
        };
        let total = err_rho + err_u + err_s;
        let order = match (previous_total, is_reference) {
            (Some(prev), false) if total > 0.0 => Some((prev / total).log2()),
            _ => None,
        };
        if !is_reference {
            previous_total = Some(total);
        }
        rows.push(ErrorTableRow {
            level: j,
            delta: level.delta,
            epsilon: level.epsilon,
            dx: level.grid.dx(),
            err_rho,
            err_u,
            err_s,
            order,
        });
    }
    Ok(rows)
}

/// Linear interpolation of a reference field at a coordinate.
fn interp(values: &[f64], grid: &Grid1D, x: f64) -> f64 {
    let dx = grid.dx();
    let pos = (x - grid.x_min) / dx - 0.5;
    if pos <= 0.0 {
        return values[0];
    }
    let n = values.len();
    if pos >= (n - 1) as f64 {
        return values[n - 1];
    }
    let i = pos.floor() as usize;
    let frac = pos - i as f64;
    values[i] * (1.0 - frac) + values[i + 1] * frac
}

fn l1_errors(coarse: &Field, reference: &Field, rho_cut: f64) -> (f64, f64, f64) {
    let dx = coarse.grid.dx();
    let n_ref = reference.n_cells();
    let u_ref: Vec<f64> = (0..n_ref).map(|i| reference.velocity(i)).collect();
    let s_ref: Vec<f64> = (0..n_ref).map(|i| reference.specific_entropy(i)).collect();
    let mut err_rho = 0.0;
    let mut err_u = 0.0;
    let mut err_s = 0.0;
    for i in 0..coarse.n_cells() {
        let x = coarse.grid.cell_center(i);
        let rho_r = interp(&reference.rho, &reference.grid, x);
        err_rho += (coarse.rho[i] - rho_r).abs() * dx;
        if rho_r > rho_cut {
            err_u += (coarse.velocity(i) - interp(&u_ref, &reference.grid, x)).abs() * dx;
            err_s += (coarse.specific_entropy(i) - interp(&s_ref, &reference.grid, x)).abs() * dx;
        }
    }
    (err_rho, err_u, err_s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::entropy::EntropyPair;
    use crate::model::derive_params;
    use crate::solver::Profile;
    use approx::{assert_abs_diff_eq, assert_relative_eq};

    #[test]
    fn test_function_derivatives_match_finite_differences() {
        let phi = TestFunction::new(0.2, 0.5, 0.7, 0.3).unwrap();
        let h = 1e-6;
        for &(x, t) in &[(0.0, 0.4), (0.5, 0.6), (0.21, 0.5), (-0.3, 0.35)] {
            let fd_x = (phi.eval(x + h, t) - phi.eval(x - h, t)) / (2.0 * h);
            let fd_t = (phi.eval(x, t + h) - phi.eval(x, t - h)) / (2.0 * h);
            let scale = 1.0 + phi.eval_dx(x, t).abs() + phi.eval_dt(x, t).abs();
            assert_abs_diff_eq!(phi.eval_dx(x, t), fd_x, epsilon = 1e-7 * scale);
            assert_abs_diff_eq!(phi.eval_dt(x, t), fd_t, epsilon = 1e-7 * scale);
        }
    }

    #[test]
    fn test_function_vanishes_outside_support() {
        let phi = TestFunction::new(0.0, 0.5, 0.5, 0.2).unwrap();
        for &(x, t) in &[(0.51, 0.5), (-0.6, 0.5), (0.0, 0.71), (0.0, 0.29), (2.0, 2.0)] {
            assert_eq!(phi.eval(x, t), 0.0);
            assert_eq!(phi.eval_dx(x, t), 0.0);
            assert_eq!(phi.eval_dt(x, t), 0.0);
        }
        assert!(phi.eval(0.0, 0.5) > 0.0);
        assert!(TestFunction::new(0.0, 0.0, -1.0, 1.0).is_err());
    }

    fn constant_trajectory() -> (Trajectory, SolverConfig) {
        let grid = Grid1D::new(-1.0, 1.0, 64, Boundary::ZeroGradient).unwrap();
        let approx = ApproxParams::coupled(0.13).unwrap();
        let cfg = SolverConfig {
            params: derive_params(2.0).unwrap(),
            approx,
            grid,
            cfl: 0.4,
            t_end: 0.5,
            snapshot_every: 1,
            variant: Variant::FluxViscosity,
        };
        let traj = solver::run(&cfg, &RawData::constant(1.0, 0.1, 0.2)).unwrap();
        (traj, cfg)
    }

    #[test]
    fn weak_residual_vanishes_on_constant_state() {
        let (traj, cfg) = constant_trajectory();
        // Interior support, away from t = 0.
        let phi = TestFunction::new(0.0, 0.25, 0.6, 0.15).unwrap();
        let (r_mass, r_mom, r_ent) = weak_residual(&traj, &phi, &cfg.params).unwrap();
        for r in [r_mass, r_mom, r_ent] {
            assert_abs_diff_eq!(r, 0.0, epsilon = 2e-5);
        }
        // Initial-overlap support: the t = 0 boundary integral enters.
        let phi0 = TestFunction::new(0.0, 0.05, 0.6, 0.15).unwrap();
        let (r_mass, r_mom, r_ent) = weak_residual(&traj, &phi0, &cfg.params).unwrap();
        for r in [r_mass, r_mom, r_ent] {
            assert_abs_diff_eq!(r, 0.0, epsilon = 2e-5);
        }
    }

    #[test]
    fn weak_residual_scales_exactly_with_amplitude() {
        let (traj, cfg) = constant_trajectory();
        let phi = TestFunction::new(0.1, 0.25, 0.5, 0.15).unwrap();
        let phi2 = phi.with_amplitude(2.0).unwrap();
        let r1 = weak_residual(&traj, &phi, &cfg.params).unwrap();
        let r2 = weak_residual(&traj, &phi2, &cfg.params).unwrap();
        // Doubling is exact in floating point.
        assert_eq!(r2.0, 2.0 * r1.0);
        assert_eq!(r2.1, 2.0 * r1.1);
        assert_eq!(r2.2, 2.0 * r1.2);
    }

    #[test]
    fn weak_residual_support_validation() {
        let (traj, cfg) = constant_trajectory();
        // touches the spatial boundary
        assert!(weak_residual(
            &traj,
            &TestFunction::new(0.8, 0.25, 0.5, 0.1).unwrap(),
            &cfg.params
        )
        .is_err());
        // extends past the final time
        assert!(weak_residual(
            &traj,
            &TestFunction::new(0.0, 0.48, 0.5, 0.1).unwrap(),
            &cfg.params
        )
        .is_err());
        // entirely after the data
        assert!(weak_residual(
            &traj,
            &TestFunction::new(0.0, 2.0, 0.5, 0.1).unwrap(),
            &cfg.params
        )
        .is_err());
    }

    #[test]
    fn additivity_over_disjoint_supports() {
        let (traj, cfg) = constant_trajectory();
        let phi_a = TestFunction::new(-0.45, 0.25, 0.3, 0.12).unwrap();
        let phi_b = TestFunction::new(0.45, 0.25, 0.3, 0.12).unwrap();
        let ra = pair_integral(&traj, &phi_a, &cfg.params, &EntropyPair::Mass);
        let rb = pair_integral(&traj, &phi_b, &cfg.params, &EntropyPair::Mass);
        // Disjoint supports let the combined quadrature split; roundoff
        // differs only through accumulation order.
        let combined: f64 = {
            let wt = time_weights(&traj);
            let mut total = 0.0;
            for (field, w) in traj.snapshots.iter().zip(&wt) {
                let dx = field.grid.dx();
                let mut slab = 0.0;
                for i in 0..field.n_cells() {
                    let x = field.grid.cell_center(i);
                    let phi_t = phi_a.eval_dt(x, field.t) + phi_b.eval_dt(x, field.t);
                    let phi_x = phi_a.eval_dx(x, field.t) + phi_b.eval_dx(x, field.t);
                    if phi_t == 0.0 && phi_x == 0.0 {
                        continue;
                    }
                    let st = field.primitive(i);
                    slab += st.rho * phi_t + st.rho * st.u * phi_x;
                }
                total += w * slab * dx;
            }
            total
        };
        assert_abs_diff_eq!(ra + rb, combined, epsilon = 1e-12);
    }

    #[test]
    fn mass_pair_inequality_equals_mass_residual_bitwise() {
        let (traj, cfg) = constant_trajectory();
        let phi = TestFunction::new(0.0, 0.25, 0.6, 0.15).unwrap();
        let (r_mass, _, _) = weak_residual(&traj, &phi, &cfg.params).unwrap();
        let outcome =
            entropy_inequality_residual(&traj, &EntropyPair::Mass, &phi, &cfg.params, false)
                .unwrap();
        assert_eq!(outcome.integral, r_mass);
    }

    #[test]
    fn inequality_rejects_nonconvex_for_strict_use() {
        let (traj, cfg) = constant_trajectory();
        let phi = TestFunction::new(0.0, 0.25, 0.6, 0.15).unwrap();
        assert!(entropy_inequality_residual(
            &traj,
            &EntropyPair::Mass,
            &phi,
            &cfg.params,
            true
        )
        .is_err());
        assert!(entropy_inequality_residual(
            &traj,
            &EntropyPair::Physical,
            &phi,
            &cfg.params,
            true
        )
        .is_ok());
        // support reaching t = 0 is rejected for the inequality
        let phi0 = TestFunction::new(0.0, 0.05, 0.6, 0.15).unwrap();
        assert!(entropy_inequality_residual(
            &traj,
            &EntropyPair::Physical,
            &phi0,
            &cfg.params,
            false
        )
        .is_err());
    }

    #[test]
    fn equivalence_residual_zero_on_constant_run() {
        let (traj, cfg) = constant_trajectory();
        let r = equivalence_residual(&traj, cfg.approx, &cfg.params).unwrap();
        assert_abs_diff_eq!(r, 0.0, epsilon = 1e-11);
    }

    #[test]
    fn equivalence_requires_flux_variant() {
        let grid = Grid1D::new(-1.0, 1.0, 64, Boundary::ZeroGradient).unwrap();
        let approx = ApproxParams::coupled(0.13).unwrap();
        let cfg = SolverConfig {
            params: derive_params(2.0).unwrap(),
            approx,
            grid,
            cfl: 0.4,
            t_end: 0.05,
            snapshot_every: 1,
            variant: Variant::PureViscosity,
        };
        let traj = solver::run(&cfg, &RawData::constant(1.0, 0.0, 0.0)).unwrap();
        assert!(equivalence_residual(&traj, cfg.approx, &cfg.params).is_err());
    }

    #[test]
    fn pointwise_regroup_identities_exact() {
        let p = derive_params(1.4).unwrap();
        let jets = [
            (1.3, 0.4, 0.2, 0.7, -0.5, 0.3, 0.02),
            (0.8, -1.1, -0.3, -0.2, 0.9, -1.4, 0.05),
            (2.4, 0.0, 0.5, 0.1, 0.2, 0.3, 0.001),
        ];
        for &(rho, u, s, rho_x, u_x, s_x, delta) in &jets {
            let grads = Gradients { rho_x, u_x, s_x };
            let (lhs, rhs) = shift_flux_product_identity(rho, u, s, grads, delta, &p);
            assert_relative_eq!(lhs, rhs, max_relative = 1e-12, epsilon = 1e-14);
            let (lhs, rhs) = entropy_weight_split_identity(rho, u, s, 0.37, s_x, delta, &p);
            assert_relative_eq!(lhs, rhs, max_relative = 1e-12, epsilon = 1e-14);
            let (lhs, rhs) = cubic_shift_identity(u, u_x, delta);
            assert_relative_eq!(lhs, rhs, max_relative = 1e-12, epsilon = 1e-16);
        }
    }

    #[test]
    fn ladder_construction_and_validation() {
        let ladder =
            RefinementLadder::coupled(0.1, 3, 0.0, 1.0, Boundary::Periodic).unwrap();
        assert_eq!(ladder.levels.len(), 3);
        assert_relative_eq!(ladder.levels[1].delta, 0.05);
        assert_relative_eq!(ladder.levels[1].epsilon, 0.0025);
        for level in &ladder.levels {
            assert!(level.grid.dx() <= level.epsilon / 2.0 * (1.0 + 1e-12));
        }
        assert!(RefinementLadder::coupled(0.0, 3, 0.0, 1.0, Boundary::Periodic).is_err());
    }

    #[test]
    fn convergence_study_constant_data_is_exact() {
        let ladder =
            RefinementLadder::coupled(0.12, 3, 0.0, 1.0, Boundary::Periodic).unwrap();
        let run_cfg = LadderRunConfig {
            params: derive_params(2.0).unwrap(),
            cfl: 0.4,
            t_end: 0.01,
            variant: Variant::FluxViscosity,
            snapshot_every: 1_000_000,
        };
        let raw = RawData::constant(1.0, 0.0, 0.0);
        let rows = convergence_study(&ladder, &raw, &run_cfg).unwrap();
        assert_eq!(rows.len(), 3);
        for row in &rows[..2] {
            // Levels have different delta lifts; only rho is lifted, and by
            // construction the difference is exactly the floor difference.
            let lift_gap = 2.0 * (row.delta - ladder.levels.last().unwrap().delta);
            assert_abs_diff_eq!(row.err_rho, lift_gap, epsilon = 1e-10);
            assert_abs_diff_eq!(row.err_u, 0.0, epsilon = 1e-10);
            assert_abs_diff_eq!(row.err_s, 0.0, epsilon = 1e-10);
        }
    }

    #[test]
    fn convergence_study_decreases_on_smooth_data() {
        let ladder =
            RefinementLadder::coupled(0.1, 3, 0.0, 1.0, Boundary::Periodic).unwrap();
        let run_cfg = LadderRunConfig {
            params: derive_params(2.0).unwrap(),
            cfl: 0.4,
            t_end: 0.05,
            variant: Variant::FluxViscosity,
            snapshot_every: 1_000_000,
        };
        let raw = RawData {
            rho: Profile::Sine {
                offset: 1.0,
                amplitude: 0.15,
                wavelength: 1.0,
                phase: 0.0,
            },
            u: Profile::Constant(0.0),
            s: Profile::Sine {
                offset: 0.0,
                amplitude: 0.1,
                wavelength: 1.0,
                phase: 0.5,
            },
        };
        let rows = convergence_study(&ladder, &raw, &run_cfg).unwrap();
        let totals: Vec<f64> = rows[..2]
            .iter()
            .map(|r| r.err_rho + r.err_u + r.err_s)
            .collect();
        assert!(
            totals[0] > totals[1],
            "distances should shrink along the ladder: {totals:?}"
        );
    }
}
