//! Interior mass of the domain for the local operator: the singular
//! solution `H ~ r^{-beta_+}` of the linear problem is produced by shooting,
//! and the mass is the coefficient of its regular part `r^{-beta_-}`.

use super::{GridFunction, GridMode, RadialGrid};
use crate::error::{Error, Result};
use crate::thresholds::{beta_pm, gamma_h, ProblemInstance};
use std::sync::Arc;

/// Relative residual above which the regular-part fit is rejected.
const FIT_RESIDUAL_MAX: f64 = 0.05;

/// Singular solution and its extracted mass.
#[derive(Debug, Clone)]
pub struct MassProfile {
    /// Coefficient of `r^{-beta_-}` in `H - r^{-beta_+}` near the origin.
    pub mass: f64,
    /// The singular solution sampled on the grid (zero at the boundary,
    /// `r^{beta_+} H -> 1` at the origin).
    pub singular: GridFunction,
    /// Relative residual of the regular-part fit.
    pub fit_residual: f64,
    pub beta_minus: f64,
    pub beta_plus: f64,
}

/// Estimate the interior mass; see [`mass_profile`].
pub fn mass_estimate(inst: &ProblemInstance, grid: &Arc<RadialGrid>) -> Result<f64> {
    Ok(mass_profile(inst, grid)?.mass)
}

/// Solve the radial boundary-value problem
/// `-H'' - (n-1) H'/r - (gamma/r^2 + lambda) H = 0` on the ball, with
/// `H = 0` at the boundary and `H ~ r^{-beta_+}` at the origin, and fit the
/// regular part against `r^{-beta_-}` on the inner tenth of the nodes.
///
/// Requires `alpha = 2`, `gamma` strictly between the criticality threshold
/// and the Hardy constant, and `lambda` below the first eigenvalue.
pub fn mass_profile(inst: &ProblemInstance, grid: &Arc<RadialGrid>) -> Result<MassProfile> {
    if inst.alpha != 2.0 {
        return Err(Error::unsupported(
            "mass estimation is implemented for the local case alpha = 2 only",
        ));
    }
    if grid.mode() != GridMode::RadialAlpha2 {
        return Err(Error::validation("mass estimation needs a radial grid"));
    }
    grid.check_instance(inst)?;

    let n = inst.n;
    let gamma = inst.gamma;
    let lambda = inst.lambda;
    let gh = gamma_h(n, 2.0)?;
    // Closed-form criticality threshold for alpha = 2, valid for all n > 2
    // (negative for n = 3, where it still bounds the mass window).
    let gamma_crit = 0.25 * (n - 2.0) * (n - 2.0) - 1.0;
    if !(gamma > gamma_crit && gamma < gh) {
        return Err(Error::domain(format!(
            "mass is defined for gamma in ({gamma_crit}, {gh}), got {gamma}"
        )));
    }
    let lambda1 = super::rayleigh::smallest_eigenvalue(inst, grid)?;
    if lambda >= lambda1 {
        return Err(Error::domain(format!(
            "mass needs lambda < lambda_1 = {lambda1:.6}, got {lambda}"
        )));
    }

    let (beta_minus, beta_plus) = beta_pm(n, 2.0, gamma)?;

    // Frobenius series H = r^{-beta} sum_k a_k r^{2k} around the origin;
    // starting the shoot at a moderate radius from the series keeps the
    // error amplification (R/r_start)^{beta_+ - beta_-} harmless.
    let series_plus = frobenius_series(beta_plus, n, gamma, lambda);
    let series_minus = frobenius_series(beta_minus, n, gamma, lambda);
    let a1_scale = series_plus[1].abs().max(series_minus[1].abs());
    let extent = grid.extent();
    let mut r_start = (0.2 * extent).min(0.4 / (1.0 + a1_scale).sqrt());
    r_start = r_start.max(grid.nodes()[0]);

    let singular = integrate_radial(grid, n, gamma, lambda, beta_plus, &series_plus, r_start);
    let regular = integrate_radial(grid, n, gamma, lambda, beta_minus, &series_minus, r_start);

    let m_nodes = grid.len();
    let w_outer = regular[m_nodes - 1];
    if w_outer.abs() < 1e-300 {
        return Err(Error::domain(
            "regular solution vanishes at the boundary: lambda sits on an eigenvalue",
        ));
    }
    let theta = -singular[m_nodes - 1] / w_outer;
    let h_vals: Vec<f64> = singular
        .iter()
        .zip(&regular)
        .map(|(s, w)| s + theta * w)
        .collect();

    // least-squares fit of the regular part g = H - (singular branch)
    // against the regular branch, on the inner tenth of the nodes (the
    // cutoff is identically 1 there). Using the full Frobenius branches as
    // the fit basis removes the O(r^{2 - (beta_+ - beta_-)}) bias that the
    // bare powers would leave when the exponent gap is close to 2.
    let fit_count = (m_nodes / 10).max(5).min(m_nodes);
    let mut sxx = 0.0;
    let mut sgx = 0.0;
    for i in 0..fit_count {
        let r = grid.nodes()[i];
        let g = h_vals[i] - eval_series(&series_plus, beta_plus, r)[0];
        let x = eval_series(&series_minus, beta_minus, r)[0];
        sxx += x * x;
        sgx += g * x;
    }
    let mass = sgx / sxx;
    let mut res_num = 0.0;
    let mut res_den = 0.0;
    for i in 0..fit_count {
        let r = grid.nodes()[i];
        let g = h_vals[i] - eval_series(&series_plus, beta_plus, r)[0];
        let x = eval_series(&series_minus, beta_minus, r)[0];
        res_num += (g - mass * x) * (g - mass * x);
        res_den += g * g;
    }
    let fit_residual = if res_den > 0.0 {
        (res_num / res_den).sqrt()
    } else {
        0.0
    };
    if fit_residual > FIT_RESIDUAL_MAX {
        return Err(Error::FitResidual {
            what: "regular-part fit of the singular solution".into(),
            residual: fit_residual,
            threshold: FIT_RESIDUAL_MAX,
        });
    }

    Ok(MassProfile {
        mass,
        singular: GridFunction::new(grid, h_vals)?,
        fit_residual,
        beta_minus,
        beta_plus,
    })
}

/// Coefficients `a_0..a_K` of `H = r^{-beta} sum a_k r^{2k}` solving the
/// linear problem; `psi(beta - 2k) - gamma` never vanishes inside the mass
/// window, though `a_1` blows up as gamma approaches the criticality
/// threshold (the resonance behind the boundary log terms).
fn frobenius_series(beta: f64, n: f64, gamma: f64, lambda: f64) -> Vec<f64> {
    const K: usize = 16;
    let mut a = vec![0.0; K + 1];
    a[0] = 1.0;
    for k in 1..=K {
        let t = beta - 2.0 * k as f64;
        let den = t * (n - 2.0 - t) - gamma;
        a[k] = lambda * a[k - 1] / den;
    }
    a
}

fn eval_series(a: &[f64], beta: f64, r: f64) -> [f64; 2] {
    let mut v = 0.0;
    let mut d = 0.0;
    for (k, &ak) in a.iter().enumerate() {
        let e = 2.0 * k as f64 - beta;
        v += ak * r.powf(e);
        d += ak * e * r.powf(e - 1.0);
    }
    [v, d]
}

/// H at the grid nodes: Frobenius series up to `r_start`, then RK4 with
/// log-uniform substeps out to the boundary.
fn integrate_radial(
    grid: &RadialGrid,
    n: f64,
    gamma: f64,
    lambda: f64,
    beta: f64,
    series: &[f64],
    r_start: f64,
) -> Vec<f64> {
    let nodes = grid.nodes();
    let rhs = |r: f64, y: [f64; 2]| -> [f64; 2] {
        [
            y[1],
            -(n - 1.0) / r * y[1] - (gamma / (r * r) + lambda) * y[0],
        ]
    };
    let extent = grid.extent();
    let h_log_target = ((extent / r_start).ln() / 12_000.0).max(1e-12);

    let step_to = |y: &mut [f64; 2], ra: f64, rb: f64| {
        let dlog = (rb / ra).ln();
        let steps = (dlog / h_log_target).ceil().max(1.0) as usize;
        let ratio = (dlog / steps as f64).exp();
        let mut r = ra;
        for _ in 0..steps {
            let r_next = r * ratio;
            let h = r_next - r;
            let k1 = rhs(r, *y);
            let k2 = rhs(r + 0.5 * h, [y[0] + 0.5 * h * k1[0], y[1] + 0.5 * h * k1[1]]);
            let k3 = rhs(r + 0.5 * h, [y[0] + 0.5 * h * k2[0], y[1] + 0.5 * h * k2[1]]);
            let k4 = rhs(r_next, [y[0] + h * k3[0], y[1] + h * k3[1]]);
            *y = [
                y[0] + h / 6.0 * (k1[0] + 2.0 * k2[0] + 2.0 * k3[0] + k4[0]),
                y[1] + h / 6.0 * (k1[1] + 2.0 * k2[1] + 2.0 * k3[1] + k4[1]),
            ];
            r = r_next;
        }
    };

    let mut out = Vec::with_capacity(nodes.len());
    let mut y = eval_series(series, beta, r_start);
    let mut r_cur = r_start;
    for &node in nodes {
        if node <= r_start {
            out.push(eval_series(series, beta, node)[0]);
        } else {
            step_to(&mut y, r_cur, node);
            r_cur = node;
            out.push(y[0]);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadform::build_grid;

    fn instance(n: f64, gamma: f64, lambda: f64) -> ProblemInstance {
        ProblemInstance::new(n, 2.0, 0.0, gamma, lambda, 2.0 + 0.5 * (2.0 / (n - 2.0)), 1.0)
            .unwrap()
    }

    fn grid_for(n: f64) -> Arc<RadialGrid> {
        Arc::new(build_grid(GridMode::RadialAlpha2, n, 1.0, 400, 2.0).unwrap())
    }

    #[test]
    fn lambda_zero_exact_two_power_solution() {
        // H = r^{-beta_+} - r^{-beta_-} solves the problem exactly: m = -1
        for &(n, gamma) in &[(5.0, 2.0), (3.0, 0.21), (4.0, 0.5)] {
            let grid = grid_for(n);
            let inst = instance(n, gamma, 0.0);
            let prof = mass_profile(&inst, &grid).unwrap();
            assert!(
                (prof.mass + 1.0).abs() < 1e-5,
                "n={n} gamma={gamma}: mass {} should be -1",
                prof.mass
            );
            assert!(prof.fit_residual < 1e-6);
        }
    }

    #[test]
    fn small_lambda_increases_mass_continuously() {
        let grid = grid_for(3.0);
        let m0 = mass_estimate(&instance(3.0, 0.21, 0.0), &grid).unwrap();
        let m1 = mass_estimate(&instance(3.0, 0.21, 0.5), &grid).unwrap();
        assert!(m1 > m0);
        // frozen Bessel oracle value at lambda = 0.5
        assert!(
            (m1 - (-0.9447467571442784)).abs() < 1e-3,
            "mass(0.5) = {m1}"
        );
    }

    #[test]
    fn bessel_oracle_positive_mass_values() {
        let cases = [
            (3.0, 0.21, 5.5, 0.9734359161184655),
            (5.0, 2.0, 3.0, 0.2817472899138141),
            (4.0, 0.5, 2.0, 0.5458831948844844),
        ];
        for &(n, gamma, lambda, want) in &cases {
            let grid = grid_for(n);
            let m = mass_estimate(&instance(n, gamma, lambda), &grid).unwrap();
            assert!(
                (m - want).abs() < 2e-3 * want.abs().max(0.1),
                "n={n} gamma={gamma} lambda={lambda}: {m} vs {want}"
            );
        }
    }

    #[test]
    fn mass_blows_up_toward_first_eigenvalue() {
        // lambda_1(3, 0.21, B_1) = j_{0.2,1}^2 = 7.3282429...
        let grid = grid_for(3.0);
        let m = mass_estimate(&instance(3.0, 0.21, 7.327), &grid).unwrap();
        assert!(m > 1e3, "mass near lambda_1 should exceed 1e3, got {m}");
    }

    #[test]
    fn preconditions_enforced() {
        let grid = grid_for(5.0);
        // gamma below the criticality threshold
        assert!(mass_profile(&instance(5.0, 1.0, 0.0), &grid).is_err());
        // lambda above the first eigenvalue (lambda_1(5, 2.0) = pi^2)
        assert!(mass_profile(&instance(5.0, 2.0, 11.0), &grid).is_err());
    }

    #[test]
    fn singular_solution_positive_inside() {
        let grid = grid_for(3.0);
        let prof = mass_profile(&instance(3.0, 0.21, 5.5), &grid).unwrap();
        let vals = prof.singular.values();
        assert_eq!(*vals.last().unwrap(), 0.0);
        for &v in &vals[..vals.len() - 1] {
            assert!(v > 0.0, "singular solution must be positive inside");
        }
    }
}
