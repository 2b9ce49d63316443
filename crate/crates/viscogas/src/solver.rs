//! Explicit finite-difference integration of the regularized gas system.
//!
//! The conserved variables `(rho, m, upsilon)` evolve under centered
//! second-order flux differences plus the 3-point Laplacian scaled by the
//! viscosity `epsilon`; no artificial viscosity is added on top, so the
//! physical regularization is the only stabilizer and the grid must
//! resolve it (`dx <= 2 epsilon`, warning above `epsilon / 2`). Time
//! integration is two-stage Heun with a combined advective/diffusive step
//! restriction. Initial data is mollified with a truncated Gaussian of
//! standard deviation `epsilon` and lifted by the flux-shift floor
//! `2 delta`.

use crate::error::{Error, Result};
use crate::model::{ApproxParams, GasParams, PrimitiveState};

/// Boundary handling of the truncated domain.
///
/// `ZeroGradient` mimics data that are constant near infinity; `Periodic`
/// exists for conservation tests.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Boundary {
    ZeroGradient,
    Periodic,
}

/// Uniform cell-centered 1-D grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid1D {
    pub x_min: f64,
    pub x_max: f64,
    pub n_cells: usize,
    pub boundary: Boundary,
}

impl Grid1D {
    pub fn new(x_min: f64, x_max: f64, n_cells: usize, boundary: Boundary) -> Result<Self> {
        if !(x_max > x_min && x_min.is_finite() && x_max.is_finite()) {
            return Err(Error::InvalidGrid(format!(
                "domain ends must be finite with x_min < x_max, got [{x_min}, {x_max}]"
            )));
        }
        if n_cells < 16 {
            return Err(Error::InvalidGrid(format!(
                "at least 16 cells required, got {n_cells}"
            )));
        }
        Ok(Self {
            x_min,
            x_max,
            n_cells,
            boundary,
        })
    }

    #[inline]
    pub fn dx(&self) -> f64 {
        (self.x_max - self.x_min) / self.n_cells as f64
    }

    #[inline]
    pub fn cell_center(&self, i: usize) -> f64 {
        self.x_min + (i as f64 + 0.5) * self.dx()
    }
}

/// Conserved state on a grid at one time.
#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    pub grid: Grid1D,
    pub t: f64,
    pub rho: Vec<f64>,
    pub m: Vec<f64>,
    pub upsilon: Vec<f64>,
}

impl Field {
    pub fn n_cells(&self) -> usize {
        self.rho.len()
    }

    #[inline]
    pub fn velocity(&self, i: usize) -> f64 {
        self.m[i] / self.rho[i]
    }

    #[inline]
    pub fn specific_entropy(&self, i: usize) -> f64 {
        self.upsilon[i] / self.rho[i]
    }

    #[inline]
    pub fn primitive(&self, i: usize) -> PrimitiveState {
        PrimitiveState {
            rho: self.rho[i],
            u: self.velocity(i),
            s: self.specific_entropy(i),
        }
    }

    pub fn min_rho(&self) -> f64 {
        self.rho.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Finite entries and strictly positive density everywhere.
    pub fn ensure_valid(&self) -> Result<()> {
        for i in 0..self.n_cells() {
            for (component, v) in [
                ("rho", self.rho[i]),
                ("m", self.m[i]),
                ("upsilon", self.upsilon[i]),
            ] {
                if !v.is_finite() {
                    return Err(Error::NonFinite {
                        index: i,
                        t: self.t,
                        component,
                    });
                }
            }
            if self.rho[i] <= 0.0 {
                return Err(Error::PositivityViolation {
                    index: i,
                    t: self.t,
                    rho: self.rho[i],
                });
            }
        }
        Ok(())
    }
}

/// Which regularization the solver integrates.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Variant {
    /// Flux shift `delta` active in the fluxes (floor `rho >= 2 delta`).
    FluxViscosity,
    /// Plain viscosity: `delta = 0` in the fluxes only. Runs may approach
    /// vacuum legitimately; positivity monitoring then means `rho > 0`.
    PureViscosity,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverConfig {
    pub params: GasParams,
    pub approx: ApproxParams,
    pub grid: Grid1D,
    pub cfl: f64,
    pub t_end: f64,
    pub snapshot_every: usize,
    pub variant: Variant,
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.cfl > 0.0 && self.cfl <= 0.9) {
            return Err(Error::InvalidSolverConfig(format!(
                "Courant number must lie in (0, 0.9], got {}",
                self.cfl
            )));
        }
        if !(self.t_end > 0.0 && self.t_end.is_finite()) {
            return Err(Error::InvalidSolverConfig(format!(
                "final time must be positive, got {}",
                self.t_end
            )));
        }
        if self.snapshot_every == 0 {
            return Err(Error::InvalidSolverConfig(
                "snapshot stride must be at least 1".into(),
            ));
        }
        Ok(())
    }

    /// Flux shift actually used by the fluxes of this variant.
    #[inline]
    pub fn effective_delta(&self) -> f64 {
        match self.variant {
            Variant::FluxViscosity => self.approx.delta,
            Variant::PureViscosity => 0.0,
        }
    }
}

/// Analytic initial profile, evaluated pointwise during mollification.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Profile {
    Constant(f64),
    /// Jump at `x0` from `left` to `right`.
    Step { x0: f64, left: f64, right: f64 },
    /// `offset + amplitude * sin(2 pi (x - phase) / wavelength)`.
    Sine {
        offset: f64,
        amplitude: f64,
        wavelength: f64,
        phase: f64,
    },
}

impl Profile {
    pub fn eval(&self, x: f64) -> f64 {
        match *self {
            Profile::Constant(v) => v,
            Profile::Step { x0, left, right } => {
                if x < x0 {
                    left
                } else {
                    right
                }
            }
            Profile::Sine {
                offset,
                amplitude,
                wavelength,
                phase,
            } => offset + amplitude * (2.0 * std::f64::consts::PI * (x - phase) / wavelength).sin(),
        }
    }

    pub fn min_value(&self) -> f64 {
        match *self {
            Profile::Constant(v) => v,
            Profile::Step { left, right, .. } => left.min(right),
            Profile::Sine {
                offset, amplitude, ..
            } => offset - amplitude.abs(),
        }
    }
}

/// Piecewise initial data for `(rho, u, s)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RawData {
    pub rho: Profile,
    pub u: Profile,
    pub s: Profile,
}

impl RawData {
    pub fn constant(rho: f64, u: f64, s: f64) -> Self {
        Self {
            rho: Profile::Constant(rho),
            u: Profile::Constant(u),
            s: Profile::Constant(s),
        }
    }

    /// Riemann data jumping at `x0`.
    pub fn riemann(x0: f64, left: (f64, f64, f64), right: (f64, f64, f64)) -> Self {
        Self {
            rho: Profile::Step {
                x0,
                left: left.0,
                right: right.0,
            },
            u: Profile::Step {
                x0,
                left: left.1,
                right: right.1,
            },
            s: Profile::Step {
                x0,
                left: left.2,
                right: right.2,
            },
        }
    }
}

/// Mollify raw data at scale `epsilon` and lift the density by `2 delta`.
///
/// Discrete convolution with a normalized Gaussian of standard deviation
/// `epsilon`, truncated at `6 epsilon`. The result satisfies
/// `rho >= 2 delta`, inherits the raw data's entropy variation bound and
/// has decaying entropy derivatives at the domain ends when the raw data
/// is constant there.
pub fn mollify_initial_data(raw: &RawData, approx: ApproxParams, grid: Grid1D) -> Result<Field> {
    if raw.rho.min_value() < 0.0 {
        return Err(Error::InvalidInitialData(format!(
            "raw density must be nonnegative, minimum is {}",
            raw.rho.min_value()
        )));
    }
    let dx = grid.dx();
    let eps = approx.epsilon;
    if dx > 2.0 * eps {
        return Err(Error::UnresolvedMollifier {
            dx,
            limit: 2.0 * eps,
        });
    }
    if dx > 0.5 * eps {
        log::warn!(
            "dx = {dx} exceeds epsilon/2 = {}: mollifier marginally resolved",
            0.5 * eps
        );
    }

    // Gaussian taps at cell offsets, renormalized to unit mass.
    let half = (6.0 * eps / dx).ceil() as i64;
    let mut kernel: Vec<f64> = (-half..=half)
        .map(|j| (-0.5 * (j as f64 * dx / eps).powi(2)).exp())
        .collect();
    let mass: f64 = kernel.iter().sum();
    kernel.iter_mut().for_each(|w| *w /= mass);

    let span = grid.x_max - grid.x_min;
    let sample = |profile: &Profile, x: f64| -> f64 {
        match grid.boundary {
            Boundary::ZeroGradient => profile.eval(x),
            Boundary::Periodic => {
                let wrapped = grid.x_min + (x - grid.x_min).rem_euclid(span);
                profile.eval(wrapped)
            }
        }
    };

    let n = grid.n_cells;
    let mut rho = vec![0.0; n];
    let mut m = vec![0.0; n];
    let mut upsilon = vec![0.0; n];
    let two_delta = 2.0 * approx.delta;
    for i in 0..n {
        let x = grid.cell_center(i);
        let mut r = 0.0;
        let mut u = 0.0;
        let mut s = 0.0;
        for (j, w) in (-half..=half).zip(&kernel) {
            let xj = x - j as f64 * dx;
            r += w * (sample(&raw.rho, xj) + two_delta);
            u += w * sample(&raw.u, xj);
            s += w * sample(&raw.s, xj);
        }
        rho[i] = r;
        m[i] = r * u;
        upsilon[i] = r * s;
    }
    Ok(Field {
        grid,
        t: 0.0,
        rho,
        m,
        upsilon,
    })
}

/// Largest stable time step for the current field:
/// `cfl * min(dx / max |wave speed|, dx^2 / (2 epsilon))`.
pub fn stable_dt(field: &Field, cfg: &SolverConfig) -> Result<f64> {
    let delta = cfg.effective_delta();
    let p = &cfg.params;
    let mut max_speed: f64 = 0.0;
    for i in 0..field.n_cells() {
        let rho = field.rho[i];
        if !(rho > 0.0) {
            return Err(Error::PositivityViolation {
                index: i,
                t: field.t,
                rho,
            });
        }
        let u = field.velocity(i);
        let s = field.specific_entropy(i);
        let c = (rho - 2.0 * delta) / rho * p.sound_speed(rho, s);
        max_speed = max_speed.max((u - c).abs()).max((u + c).abs()).max(u.abs());
    }
    let dx = field.grid.dx();
    let advective = dx / max_speed; // +inf for a gas at rest on the floor
    let diffusive = dx * dx / (2.0 * cfg.approx.epsilon);
    Ok(cfg.cfl * advective.min(diffusive))
}

#[inline]
fn neighbor_indices(i: usize, n: usize, boundary: Boundary) -> (usize, usize) {
    match boundary {
        Boundary::ZeroGradient => (i.saturating_sub(1), (i + 1).min(n - 1)),
        Boundary::Periodic => ((i + n - 1) % n, (i + 1) % n),
    }
}

/// Semi-discrete right-hand side: centered flux differences plus the
/// viscous Laplacian.
fn rhs(field: &Field, cfg: &SolverConfig, out: &mut [Vec<f64>; 3], flux: &mut [Vec<f64>; 3]) {
    let n = field.n_cells();
    let p = &cfg.params;
    let delta = cfg.effective_delta();
    let eps = cfg.approx.epsilon;
    let dx = field.grid.dx();
    let gm1 = p.gamma - 1.0;
    let shift = 2.0 * delta * p.gamma / gm1;

    for i in 0..n {
        let rho = field.rho[i];
        let u = field.m[i] / rho;
        let s = field.upsilon[i] / rho;
        let e2s = (2.0 * s).exp();
        // P1(rho, delta) e^{2s} = k rho^{gamma-1} (rho - 2 delta gamma/(gamma-1)) e^{2s}
        let p1 = p.k * rho.powf(gm1) * (rho - shift) * e2s;
        let f1 = (rho - 2.0 * delta) * u;
        flux[0][i] = f1;
        flux[1][i] = field.m[i] * u - delta * u * u + p1;
        flux[2][i] = f1 * s;
    }

    let inv_2dx = 1.0 / (2.0 * dx);
    let visc = eps / (dx * dx);
    let comps: [(&[f64], usize); 3] = [(&field.rho, 0), (&field.m, 1), (&field.upsilon, 2)];
    for (vals, c) in comps {
        for i in 0..n {
            let (im, ip) = neighbor_indices(i, n, field.grid.boundary);
            out[c][i] = -(flux[c][ip] - flux[c][im]) * inv_2dx
                + visc * (vals[ip] - 2.0 * vals[i] + vals[im]);
        }
    }
}

fn advance(base: &Field, rate: &[Vec<f64>; 3], dt: f64, t_new: f64) -> Field {
    let n = base.n_cells();
    let mut out = Field {
        grid: base.grid,
        t: t_new,
        rho: vec![0.0; n],
        m: vec![0.0; n],
        upsilon: vec![0.0; n],
    };
    for i in 0..n {
        out.rho[i] = base.rho[i] + dt * rate[0][i];
        out.m[i] = base.m[i] + dt * rate[1][i];
        out.upsilon[i] = base.upsilon[i] + dt * rate[2][i];
    }
    out
}

/// One two-stage explicit (Heun) step.
///
/// Flags any cell where the density becomes nonpositive or non-finite;
/// that indicates a time step or resolution failure, not a recoverable
/// state.
pub fn step(field: &Field, dt: f64, cfg: &SolverConfig) -> Result<Field> {
    let n = field.n_cells();
    let mut k1: [Vec<f64>; 3] = [vec![0.0; n], vec![0.0; n], vec![0.0; n]];
    let mut k2: [Vec<f64>; 3] = [vec![0.0; n], vec![0.0; n], vec![0.0; n]];
    let mut flux: [Vec<f64>; 3] = [vec![0.0; n], vec![0.0; n], vec![0.0; n]];

    rhs(field, cfg, &mut k1, &mut flux);
    let predictor = advance(field, &k1, dt, field.t + dt);
    predictor.ensure_valid()?;
    rhs(&predictor, cfg, &mut k2, &mut flux);
    for c in 0..3 {
        for i in 0..n {
            k1[c][i] = 0.5 * (k1[c][i] + k2[c][i]);
        }
    }
    let next = advance(field, &k1, dt, field.t + dt);
    next.ensure_valid()?;
    Ok(next)
}

/// Snapshots of a run, in time order, including the initial field.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub snapshots: Vec<Field>,
    pub variant: Variant,
    /// Steps between stored snapshots; 1 means every step is stored.
    pub snapshot_stride: usize,
}

impl Trajectory {
    pub fn t_end(&self) -> f64 {
        self.snapshots.last().map_or(0.0, |f| f.t)
    }

    pub fn final_field(&self) -> &Field {
        self.snapshots.last().expect("trajectory has snapshots")
    }

    /// Largest spacing between stored snapshots.
    pub fn max_snapshot_spacing(&self) -> f64 {
        self.snapshots
            .windows(2)
            .map(|w| w[1].t - w[0].t)
            .fold(0.0, f64::max)
    }
}

/// Integrate from mollified raw data to `t_end`, storing every
/// `snapshot_every`-th step plus the final state.
///
/// Aborts with a diagnostic if any step loses positivity or produces a
/// non-finite value.
pub fn run(cfg: &SolverConfig, raw: &RawData) -> Result<Trajectory> {
    cfg.validate()?;
    let field0 = mollify_initial_data(raw, cfg.approx, cfg.grid)?;
    field0.ensure_valid()?;

    let edge = 10.min(field0.n_cells() / 2);
    let initial_edges: Vec<f64> = field0.rho[..edge]
        .iter()
        .chain(&field0.rho[field0.n_cells() - edge..])
        .copied()
        .collect();
    let mut boundary_warned = false;

    let mut snapshots = vec![field0.clone()];
    let mut field = field0;
    let mut steps: u64 = 0;
    let t_end = cfg.t_end;
    while field.t < t_end * (1.0 - 1e-14) {
        let dt = stable_dt(&field, cfg)?.min(t_end - field.t);
        if !(dt > 0.0) || steps > 200_000_000 {
            return Err(Error::InvalidSolverConfig(format!(
                "time stepping stalled at t = {} after {steps} steps (dt = {dt})",
                field.t
            )));
        }
        field = step(&field, dt, cfg)?;
        steps += 1;
        let at_end = field.t >= t_end * (1.0 - 1e-14);
        if steps % cfg.snapshot_every as u64 == 0 || at_end {
            if cfg.grid.boundary == Boundary::ZeroGradient && !boundary_warned {
                let n = field.n_cells();
                let moved = field.rho[..edge]
                    .iter()
                    .chain(&field.rho[n - edge..])
                    .zip(&initial_edges)
                    .any(|(now, init)| (now - init).abs() > 1e-6 * (1.0 + init.abs()));
                if moved {
                    log::warn!(
                        "waves reached within 10 cells of the zero-gradient boundary at t = {}",
                        field.t
                    );
                    boundary_warned = true;
                }
            }
            snapshots.push(field.clone());
        }
    }
    Ok(Trajectory {
        snapshots,
        variant: cfg.variant,
        snapshot_stride: cfg.snapshot_every,
    })
}

/// Residual of the nonconservative entropy transport equation
/// `s_t + ((rho - 2 delta)/rho) u s_x = eps s_xx + 2 eps (rho_x / rho) s_x`
/// between two consecutive snapshots (forward difference in time,
/// centered in space on the earlier snapshot, interior cells).
///
/// On resolved runs the maximum is `O(dt + dx^2)`.
pub fn s_equation_residual(before: &Field, after: &Field, dt: f64, cfg: &SolverConfig) -> f64 {
    let n = before.n_cells();
    let dx = before.grid.dx();
    let delta = cfg.effective_delta();
    let eps = cfg.approx.epsilon;
    let mut worst: f64 = 0.0;
    for i in 1..n - 1 {
        let s_c = before.specific_entropy(i);
        let s_l = before.specific_entropy(i - 1);
        let s_r = before.specific_entropy(i + 1);
        let s_t = (after.specific_entropy(i) - s_c) / dt;
        let s_x = (s_r - s_l) / (2.0 * dx);
        let s_xx = (s_r - 2.0 * s_c + s_l) / (dx * dx);
        let rho = before.rho[i];
        let rho_x = (before.rho[i + 1] - before.rho[i - 1]) / (2.0 * dx);
        let u = before.velocity(i);
        let r = s_t + (rho - 2.0 * delta) / rho * u * s_x
            - eps * s_xx
            - 2.0 * eps * rho_x / rho * s_x;
        worst = worst.max(r.abs());
    }
    worst
}
