//! A-priori estimate monitors over snapshots and trajectories.
//!
//! Each monitor reports the worst observed value of one bound together
//! with the tolerance it was judged against and the location of the worst
//! cell. Monitors verify; they do not certify — a failure on a resolved
//! run is a finding about the scheme, not about the estimate.

use crate::error::{Error, Result};
use crate::model::{dissipation_a, ApproxParams, BoundsSpec, GasParams, Gradients};
use crate::solver::{Field, Trajectory};
use crate::verifier::TestFunction;

/// Outcome of one monitor: `pass` holds when `worst_value` is within
/// `threshold` in the monitor's own direction (at-most for excess-style
/// monitors, at-least for margin-style monitors).
#[derive(Debug, Clone, PartialEq)]
pub struct MonitorReport {
    pub name: String,
    pub worst_value: f64,
    pub threshold: f64,
    pub pass: bool,
    pub x_index: usize,
    pub snapshot_index: usize,
}

/// Discrete total variation of the specific entropy over cell interfaces.
pub fn tv_s(field: &Field) -> f64 {
    let mut acc = 0.0;
    for i in 0..field.n_cells().saturating_sub(1) {
        acc += (field.specific_entropy(i + 1) - field.specific_entropy(i)).abs();
    }
    acc
}

/// Density floor check on one snapshot: `worst_value = min rho - 2 delta`,
/// passing when it stays above `-1e-8 (1 + 2 delta)`.
pub fn check_lower_bound(field: &Field, delta: f64) -> MonitorReport {
    let mut worst = f64::INFINITY;
    let mut at = 0;
    for (i, &r) in field.rho.iter().enumerate() {
        let margin = r - 2.0 * delta;
        if margin < worst {
            worst = margin;
            at = i;
        }
    }
    let threshold = -1e-8 * (1.0 + 2.0 * delta);
    MonitorReport {
        name: "lower_bound".into(),
        worst_value: worst,
        threshold,
        pass: worst >= threshold,
        x_index: at,
        snapshot_index: 0,
    }
}

fn lower_bound_trajectory(traj: &Trajectory, delta: f64) -> MonitorReport {
    let mut report = check_lower_bound(&traj.snapshots[0], delta);
    for (k, field) in traj.snapshots.iter().enumerate().skip(1) {
        let r = check_lower_bound(field, delta);
        if r.worst_value < report.worst_value {
            report = MonitorReport {
                snapshot_index: k,
                ..r
            };
        }
    }
    report
}

/// Entropy bounds over a trajectory plus the informational monotonicity
/// of its total variation.
#[derive(Debug, Clone, PartialEq)]
pub struct SBoundsOutcome {
    pub report: MonitorReport,
    /// Whether `TV(s)` never increased between snapshots (within 1e-8).
    /// The estimates only assert preservation, so this is informational.
    pub tv_nonincreasing: bool,
}

/// Sup-norm and total-variation bounds on the entropy over the whole
/// trajectory: `|s| <= n_bound` and `TV(s) <= c0`, each within 1e-8.
pub fn check_s_bounds(traj: &Trajectory, bounds: &BoundsSpec) -> Result<SBoundsOutcome> {
    let first = traj
        .snapshots
        .first()
        .ok_or_else(|| Error::InvalidTrajectory("trajectory has no snapshots".into()))?;
    let max_s0 = (0..first.n_cells())
        .map(|i| first.specific_entropy(i).abs())
        .fold(0.0, f64::max);
    if bounds.n_bound < max_s0 {
        return Err(Error::MonitorPrecondition(format!(
            "entropy bound {} is below the initial sup-norm {max_s0}",
            bounds.n_bound
        )));
    }
    let tv0 = tv_s(first);
    if bounds.c0 < tv0 {
        return Err(Error::MonitorPrecondition(format!(
            "variation budget {} is below the initial total variation {tv0}",
            bounds.c0
        )));
    }

    let mut worst = f64::NEG_INFINITY;
    let mut at = (0usize, 0usize);
    let mut tv_prev = f64::INFINITY;
    let mut tv_nonincreasing = true;
    for (k, field) in traj.snapshots.iter().enumerate() {
        for i in 0..field.n_cells() {
            let excess = field.specific_entropy(i).abs() - bounds.n_bound;
            if excess > worst {
                worst = excess;
                at = (i, k);
            }
        }
        let tv = tv_s(field);
        let tv_excess = tv - bounds.c0;
        if tv_excess > worst {
            worst = tv_excess;
            at = (0, k);
        }
        if tv > tv_prev + 1e-8 {
            tv_nonincreasing = false;
        }
        tv_prev = tv;
    }
    let threshold = 1e-8;
    Ok(SBoundsOutcome {
        report: MonitorReport {
            name: "s_bounds".into(),
            worst_value: worst,
            threshold,
            pass: worst <= threshold,
            x_index: at.0,
            snapshot_index: at.1,
        },
        tv_nonincreasing,
    })
}

/// Cumulative variation weight `beta(x) = c * sum_{j <= i} |s_{j+1} - s_j|`:
/// nondecreasing in `x`, ending at `c * TV(s)`.
#[derive(Debug, Clone, PartialEq)]
pub struct VariationProfile {
    pub beta: Vec<f64>,
    pub c_shift: f64,
}

impl VariationProfile {
    pub fn from_field(field: &Field, c_shift: f64) -> Self {
        let n = field.n_cells();
        let mut beta = vec![0.0; n];
        let mut acc = 0.0;
        for i in 0..n {
            if i < n - 1 {
                acc += (field.specific_entropy(i + 1) - field.specific_entropy(i)).abs();
            }
            beta[i] = c_shift * acc;
        }
        Self { beta, c_shift }
    }
}

/// Invariant-region check: on every snapshot both
/// `w - M - beta <= tol` and `z - M + beta <= tol` with `tol = 1e-6`.
///
/// Requires valid bound constants and initial data already inside the
/// region (`w0 <= M + beta0`, `z0 <= M - beta0`); a failure on a resolved
/// compliant run is a build-breaking event, not a tolerance issue.
pub fn check_invariant_region(
    traj: &Trajectory,
    bounds: &BoundsSpec,
    p: &GasParams,
) -> Result<MonitorReport> {
    // Revalidate: the struct fields are public and may have been edited.
    BoundsSpec::new(bounds.n_bound, bounds.c0, bounds.big_m, bounds.c_shift)?;
    if traj.snapshots.is_empty() {
        return Err(Error::InvalidTrajectory("trajectory has no snapshots".into()));
    }

    let excess = |field: &Field| -> (f64, usize) {
        let profile = VariationProfile::from_field(field, bounds.c_shift);
        let mut worst = f64::NEG_INFINITY;
        let mut at = 0;
        for i in 0..field.n_cells() {
            let st = field.primitive(i);
            let (z, w) = crate::model::riemann_invariants(st, p);
            let v1 = w - bounds.big_m - profile.beta[i];
            let v2 = z - bounds.big_m + profile.beta[i];
            let e = v1.max(v2);
            if e > worst {
                worst = e;
                at = i;
            }
        }
        (worst, at)
    };

    let (initial_excess, at0) = excess(&traj.snapshots[0]);
    if initial_excess > 1e-12 {
        return Err(Error::MonitorPrecondition(format!(
            "initial data lies outside the invariant region at cell {at0} \
             (excess {initial_excess}); enlarge M"
        )));
    }

    let mut worst = f64::NEG_INFINITY;
    let mut at = (0usize, 0usize);
    for (k, field) in traj.snapshots.iter().enumerate() {
        let (e, i) = excess(field);
        if e > worst {
            worst = e;
            at = (i, k);
        }
    }
    let threshold = 1e-6;
    Ok(MonitorReport {
        name: "invariant_region".into(),
        worst_value: worst,
        threshold,
        pass: worst <= threshold,
        x_index: at.0,
        snapshot_index: at.1,
    })
}

/// Centered spatial gradients of one snapshot, one-sided at the ends.
fn cell_gradients(field: &Field, i: usize) -> Gradients {
    let n = field.n_cells();
    let dx = field.grid.dx();
    let (l, r, span) = if i == 0 {
        (0, 1, dx)
    } else if i == n - 1 {
        (n - 2, n - 1, dx)
    } else {
        (i - 1, i + 1, 2.0 * dx)
    };
    Gradients {
        rho_x: (field.rho[r] - field.rho[l]) / span,
        u_x: (field.velocity(r) - field.velocity(l)) / span,
        s_x: (field.specific_entropy(r) - field.specific_entropy(l)) / span,
    }
}

/// Space-time quadrature of `eps * A(x, t) * phi`: the mass the residual
/// dissipation measure assigns to the test function. Nonnegative because
/// the integrand is pointwise nonnegative.
pub fn estimate_mu(
    traj: &Trajectory,
    phi: &TestFunction,
    approx: ApproxParams,
    p: &GasParams,
) -> Result<f64> {
    crate::verifier::validate_interior_support(traj, phi)?;
    let mut total = 0.0;
    let wt = crate::verifier::trapezoid_time_weights(traj);
    for (field, w) in traj.snapshots.iter().zip(&wt) {
        let dx = field.grid.dx();
        let mut slab = 0.0;
        for i in 0..field.n_cells() {
            let x = field.grid.cell_center(i);
            let weight = phi.eval(x, field.t);
            if weight == 0.0 {
                continue;
            }
            let a = dissipation_a(field.primitive(i), cell_gradients(field, i), p)?;
            slab += weight * a;
        }
        total += w * slab * dx * approx.epsilon;
    }
    Ok(total)
}

/// Aggregate of the uniform estimates: density floor, entropy bounds, and
/// the sup-norm consequences of the invariant region,
/// `rho <= (M e^N)^{1/theta}` and `|u| <= M + c c0`.
pub fn check_uniform_bounds(
    traj: &Trajectory,
    bounds: &BoundsSpec,
    approx: ApproxParams,
    p: &GasParams,
) -> Result<Vec<MonitorReport>> {
    let mut reports = Vec::with_capacity(4);
    reports.push(lower_bound_trajectory(traj, approx.delta));
    reports.push(check_s_bounds(traj, bounds)?.report);

    let rho_bound = (bounds.big_m * bounds.n_bound.exp()).powf(1.0 / p.theta);
    let u_bound = bounds.big_m + bounds.c_shift * bounds.c0;
    let mut rho_worst = (f64::NEG_INFINITY, 0usize, 0usize);
    let mut u_worst = (f64::NEG_INFINITY, 0usize, 0usize);
    for (k, field) in traj.snapshots.iter().enumerate() {
        for i in 0..field.n_cells() {
            let re = field.rho[i] - rho_bound;
            if re > rho_worst.0 {
                rho_worst = (re, i, k);
            }
            let ue = field.velocity(i).abs() - u_bound;
            if ue > u_worst.0 {
                u_worst = (ue, i, k);
            }
        }
    }
    reports.push(MonitorReport {
        name: "rho_sup".into(),
        worst_value: rho_worst.0,
        threshold: 1e-8 * (1.0 + rho_bound),
        pass: rho_worst.0 <= 1e-8 * (1.0 + rho_bound),
        x_index: rho_worst.1,
        snapshot_index: rho_worst.2,
    });
    reports.push(MonitorReport {
        name: "u_sup".into(),
        worst_value: u_worst.0,
        threshold: 1e-8 * (1.0 + u_bound),
        pass: u_worst.0 <= 1e-8 * (1.0 + u_bound),
        x_index: u_worst.1,
        snapshot_index: u_worst.2,
    });
    Ok(reports)
}

/// Pointwise diagnostic of the transport inequalities used by the
/// invariant-region argument.
///
/// The first report is the minimum over cells of the term dropped when
/// bounding the invariant transport from below,
/// `theta ((rho - 2 delta)/rho) X |s_x| (c -\+ X)` with `X = rho^theta e^s`;
/// it must be nonnegative whenever `X <= c` holds. The second report is
/// the minimum of the coefficient
/// `I = theta ((rho - 2 delta)/rho) X - (2 delta / rho) u`, informational
/// only (it may legitimately dip negative near the density floor).
pub fn check_transport_margins(
    traj: &Trajectory,
    bounds: &BoundsSpec,
    approx: ApproxParams,
    p: &GasParams,
) -> (MonitorReport, MonitorReport) {
    let delta = approx.delta;
    let mut drop_worst = (f64::INFINITY, 0usize, 0usize);
    let mut coeff_worst = (f64::INFINITY, 0usize, 0usize);
    for (k, field) in traj.snapshots.iter().enumerate() {
        let n = field.n_cells();
        let dx = field.grid.dx();
        for i in 1..n - 1 {
            let st = field.primitive(i);
            let x_val = st.rho.powf(p.theta) * st.s.exp();
            let s_x = (field.specific_entropy(i + 1) - field.specific_entropy(i - 1))
                / (2.0 * dx);
            let shift = (st.rho - 2.0 * delta) / st.rho;
            let sign = if s_x >= 0.0 { 1.0 } else { -1.0 };
            let dropped =
                p.theta * shift * x_val * s_x.abs() * (bounds.c_shift - sign * x_val);
            if dropped < drop_worst.0 {
                drop_worst = (dropped, i, k);
            }
            let coeff = p.theta * shift * x_val - 2.0 * delta / st.rho * st.u;
            if coeff < coeff_worst.0 {
                coeff_worst = (coeff, i, k);
            }
        }
    }
    let drop_threshold = -1e-8;
    (
        MonitorReport {
            name: "transport_margin".into(),
            worst_value: drop_worst.0,
            threshold: drop_threshold,
            pass: drop_worst.0 >= drop_threshold,
            x_index: drop_worst.1,
            snapshot_index: drop_worst.2,
        },
        MonitorReport {
            name: "transport_coefficient".into(),
            worst_value: coeff_worst.0,
            threshold: f64::NEG_INFINITY,
            pass: true,
            x_index: coeff_worst.1,
            snapshot_index: coeff_worst.2,
        },
    )
}
