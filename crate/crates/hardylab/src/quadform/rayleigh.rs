//! Gram-matrix assembly and Rayleigh-quotient minimization: the discrete
//! Hardy-Sobolev constant and the first Dirichlet eigenvalue.

use super::linop::SymOp;
use super::{GridFunction, GridMode, RadialGrid};
use crate::error::{Error, Result};
use crate::thresholds::{gamma_h, ProblemInstance};
use std::sync::Arc;

const MU_MAX_ITERS: usize = 100_000;
const MU_REL_TOL: f64 = 1e-10;

/// Assemble the Gram matrix of the plain seminorm (no Hardy term).
pub(crate) fn assemble_seminorm(grid: &RadialGrid, alpha: f64) -> Result<SymOp> {
    match grid.mode() {
        GridMode::RadialAlpha2 => {
            let nodes = grid.nodes();
            let m = nodes.len();
            let n = grid.dim();
            let omega = super::sphere_area(n);
            let mut diag = vec![0.0; m];
            let mut sub = vec![0.0; m - 1];
            for i in 0..m - 1 {
                let h = nodes[i + 1] - nodes[i];
                let p = omega * (nodes[i + 1].powf(n) - nodes[i].powf(n)) / n;
                let k = p / (h * h);
                diag[i] += k;
                diag[i + 1] += k;
                sub[i] -= k;
            }
            Ok(SymOp::Tridiag { diag, sub })
        }
        GridMode::Interval1D => assemble_gagliardo(grid, alpha),
    }
}

/// Dense Gagliardo Gram matrix, mirroring `gagliardo_seminorm_sq` term by
/// term (a unit test pins the two routes together).
fn assemble_gagliardo(grid: &RadialGrid, alpha: f64) -> Result<SymOp> {
    if !(alpha > 0.0 && alpha < 2.0) {
        return Err(Error::domain(format!(
            "gagliardo assembly needs alpha in (0, 2), got {alpha}"
        )));
    }
    let nodes = grid.nodes();
    let m = nodes.len();
    let np = m - 1;
    let extent = grid.extent();
    let mut a = vec![0.0; m * m];

    // accumulate c * (sum_k coef_k u_{idx_k})^2
    let add_sq = |a: &mut Vec<f64>, idx: &[usize], coef: &[f64], c: f64| {
        for (k, &i) in idx.iter().enumerate() {
            for (l, &j) in idx.iter().enumerate() {
                a[i * m + j] += c * coef[k] * coef[l];
            }
        }
    };

    for p in 0..np {
        let (xa, xb) = (nodes[p], nodes[p + 1]);
        let hp = xb - xa;

        // diagonal block
        add_sq(
            &mut a,
            &[p, p + 1],
            &[-1.0, 1.0],
            2.0 * hp.powf(1.0 - alpha) / ((2.0 - alpha) * (3.0 - alpha)),
        );

        for q in p + 1..np {
            let (ya, yb) = (nodes[q], nodes[q + 1]);
            let hq = yb - ya;
            if q == p + 1 {
                const K: usize = 16;
                let sub = |h: f64, i: usize| {
                    let lo = h * ((i as f64) / K as f64).powi(2);
                    let hi = h * (((i + 1) as f64) / K as f64).powi(2);
                    (0.5 * (lo + hi), hi - lo)
                };
                for i in 0..K {
                    let (xi, dxi) = sub(hp, i);
                    for j in 0..K {
                        let (zeta, dzeta) = sub(hq, j);
                        let mu = (xi + zeta).powf(-1.0 - alpha) * dxi * dzeta;
                        // s_p xi + s_q zeta in nodal values
                        let cp = xi / hp;
                        let cq = zeta / hq;
                        add_sq(
                            &mut a,
                            &[p, p + 1, p + 2],
                            &[-cp, cp - cq, cq],
                            2.0 * mu,
                        );
                    }
                }
            } else {
                for (gi, &gx) in super::GAUSS3_X.iter().enumerate() {
                    let x = xa + hp * gx;
                    for (gj, &gy) in super::GAUSS3_X.iter().enumerate() {
                        let y = ya + hq * gy;
                        let w = super::GAUSS3_W[gi] * super::GAUSS3_W[gj] * hp * hq;
                        let kern = (y - x).abs().powf(-1.0 - alpha);
                        add_sq(
                            &mut a,
                            &[p, p + 1, q, q + 1],
                            &[-(1.0 - gx), -gx, 1.0 - gy, gy],
                            2.0 * w * kern,
                        );
                    }
                }
            }
        }

        // exterior interaction, weight 2 in the total
        let right_boundary = p == np - 1;
        let left_boundary = p == 0;
        if right_boundary {
            add_sq(
                &mut a,
                &[p, p + 1],
                &[-1.0, 1.0],
                2.0 * hp.powf(1.0 - alpha) / ((3.0 - alpha) * alpha),
            );
        } else {
            for (gi, &gx) in super::GAUSS4_X.iter().enumerate() {
                let x = xa + hp * gx;
                let w = super::GAUSS4_W[gi] * hp / alpha;
                add_sq(
                    &mut a,
                    &[p, p + 1],
                    &[1.0 - gx, gx],
                    2.0 * w * (extent - x).powf(-alpha),
                );
            }
        }
        if left_boundary {
            add_sq(
                &mut a,
                &[p, p + 1],
                &[-1.0, 1.0],
                2.0 * hp.powf(1.0 - alpha) / ((3.0 - alpha) * alpha),
            );
        } else {
            for (gi, &gx) in super::GAUSS4_X.iter().enumerate() {
                let x = xa + hp * gx;
                let w = super::GAUSS4_W[gi] * hp / alpha;
                add_sq(
                    &mut a,
                    &[p, p + 1],
                    &[1.0 - gx, gx],
                    2.0 * w * (extent + x).powf(-alpha),
                );
            }
        }
    }

    let c = super::gagliardo_constant(1.0, alpha)?;
    for v in &mut a {
        *v *= 0.5 * c;
    }
    Ok(SymOp::Dense { n: m, a })
}

/// Gram matrix of the triple norm `seminorm - gamma * hardy`, with the
/// Dirichlet boundary pinned.
pub(crate) fn triple_gram(inst: &ProblemInstance, grid: &RadialGrid) -> Result<SymOp> {
    let mut op = assemble_seminorm(grid, inst.alpha)?;
    let hardy = super::weighted_mass_matrix(grid, inst.alpha);
    op.add_scaled(&hardy, -inst.gamma);
    pin_dirichlet(&mut op, &grid.boundary_indices());
    Ok(op)
}

pub(crate) fn pin_dirichlet(op: &mut SymOp, indices: &[usize]) {
    match op {
        SymOp::Tridiag { diag, sub } => {
            for &i in indices {
                diag[i] = 1.0;
                if i > 0 {
                    sub[i - 1] = 0.0;
                }
                if i < sub.len() {
                    sub[i] = 0.0;
                }
            }
        }
        SymOp::Dense { n, a } => {
            for &i in indices {
                for j in 0..*n {
                    a[i * *n + j] = 0.0;
                    a[j * *n + i] = 0.0;
                }
                a[i * *n + i] = 1.0;
            }
        }
    }
}

fn zero_at(v: &mut [f64], indices: &[usize]) {
    for &i in indices {
        v[i] = 0.0;
    }
}

/// Euclidean gradient of the quotient `N(u)/D(u)^{2/p}` at `u`, where
/// `N = u^T A u` and `D = int u_+^p |x|^{-s}`. Assumes `D > 0`.
fn quotient_gradient(
    a: &SymOp,
    grid: &RadialGrid,
    u: &[f64],
    p: f64,
    s: f64,
    bnd: &[usize],
) -> (Vec<f64>, f64, f64) {
    let m = u.len();
    let mut au = vec![0.0; m];
    a.matvec(u, &mut au);
    let n_val: f64 = au.iter().zip(u).map(|(x, y)| x * y).sum();
    let mut gd = vec![0.0; m];
    let d_val = super::pow_integral(grid, s, p, u, Some(&mut gd));
    let scale = d_val.powf(-2.0 / p);
    let mut g = vec![0.0; m];
    for i in 0..m {
        g[i] = scale * (2.0 * au[i] - (2.0 / p) * (n_val / d_val) * gd[i]);
        // projected gradient: components pushing into the u >= 0 bound are
        // stationary directions of the constrained problem
        if u[i] <= 0.0 && g[i] > 0.0 {
            g[i] = 0.0;
        }
    }
    zero_at(&mut g, bnd);
    (g, n_val, d_val)
}

fn quotient_value(a: &SymOp, grid: &RadialGrid, u: &[f64], p: f64, s: f64) -> f64 {
    let n_val = a.quad(u);
    let d_val = super::pow_integral(grid, s, p, u, None);
    n_val / d_val.powf(2.0 / p)
}

fn check_mu_preconditions(inst: &ProblemInstance, grid: &RadialGrid) -> Result<()> {
    grid.check_instance(inst)?;
    let gh = gamma_h(inst.n, inst.alpha)?;
    if !(inst.gamma >= 0.0 && inst.gamma < gh) {
        return Err(Error::domain(format!(
            "quotient minimization requires 0 <= gamma < gamma_H = {gh}, got {}",
            inst.gamma
        )));
    }
    Ok(())
}

/// Minimize the Hardy-Sobolev quotient
/// `(seminorm^2 - gamma hardy) / (int u_+^{2*(s)}/|x|^s)^{2/2*(s)}`
/// over nonnegative grid functions by projected descent, preconditioned by
/// the triple-norm Gram matrix, with backtracking line search.
///
/// Deterministic from the default initial profile `(1 + r^2)^{-(n-alpha)/2}`.
/// The returned minimizer is normalized so the Hardy-Sobolev integral is 1.
pub fn rayleigh_min_mu(
    inst: &ProblemInstance,
    grid: &Arc<RadialGrid>,
) -> Result<(f64, GridFunction)> {
    let init = GridFunction::from_fn(grid, |r| {
        (1.0 + r * r).powf(-0.5 * (inst.n - inst.alpha))
    })?;
    rayleigh_min_mu_from(inst, &init)
}

/// As [`rayleigh_min_mu`] but starting from a caller-supplied profile.
pub fn rayleigh_min_mu_from(
    inst: &ProblemInstance,
    init: &GridFunction,
) -> Result<(f64, GridFunction)> {
    let grid = init.grid();
    check_mu_preconditions(inst, grid)?;
    let a = triple_gram(inst, grid)?;
    let factor = a.factor()?;
    let bnd = grid.boundary_indices();
    let p = inst.two_star_s();
    let s = inst.s;

    let normalize = |u: &mut [f64]| {
        let d = super::pow_integral(grid, s, p, u, None);
        let c = d.powf(-1.0 / p);
        for v in u.iter_mut() {
            *v *= c;
        }
    };

    let mut u = init.values().to_vec();
    if u.iter().all(|&v| v <= 0.0) {
        return Err(Error::validation("initial profile must have a positive part"));
    }
    for v in u.iter_mut() {
        *v = v.max(0.0);
    }
    zero_at(&mut u, &bnd);
    normalize(&mut u);

    let mut q = quotient_value(&a, grid, &u, p, s);
    let mut step = 1.0;
    let mut flat_count = 0;
    let mut converged = false;
    let mut residual0 = f64::NAN;

    for it in 0..MU_MAX_ITERS {
        let (g, _, _) = quotient_gradient(&a, grid, &u, p, s, &bnd);
        let dir = factor.solve(&g);
        let slope: f64 = g.iter().zip(&dir).map(|(x, y)| x * y).sum();
        if !slope.is_finite() || slope <= 0.0 {
            converged = true;
            break;
        }
        let residual = slope.sqrt();
        if it == 0 {
            residual0 = residual;
        } else if residual <= 1e-8 * residual0 {
            converged = true;
            break;
        }
        // try the Newton polish periodically; accept it when it reaches a
        // stationary point at least as good as the current iterate
        if it > 0 && it % 25 == 0 {
            if let Some(polished) =
                newton_polish(&a, &factor, grid, &u, p, s, &bnd, residual0)
            {
                let qn = quotient_value(&a, grid, &polished, p, s);
                if qn <= q * (1.0 + 1e-8) {
                    u = polished;
                    q = qn;
                    converged = true;
                    break;
                }
            }
        }
        if it > 20 && (residual <= 1e-2 * residual0 || flat_count >= 5) {
            converged = true;
            break;
        }

        let mut t = step;
        let mut accepted = false;
        for _ in 0..60 {
            let mut trial: Vec<f64> = u
                .iter()
                .zip(&dir)
                .map(|(&ui, &di)| (ui - t * di).max(0.0))
                .collect();
            zero_at(&mut trial, &bnd);
            if trial.iter().all(|&v| v == 0.0) {
                t *= 0.5;
                continue;
            }
            normalize(&mut trial);
            let q_trial = quotient_value(&a, grid, &trial, p, s);
            if q_trial <= q - 1e-4 * t * slope || q_trial < q * (1.0 - 1e-15) {
                let rel_drop = (q - q_trial) / q.abs().max(f64::MIN_POSITIVE);
                u = trial;
                q = q_trial;
                accepted = true;
                step = (t * 2.0).min(1e3);
                if rel_drop < MU_REL_TOL {
                    flat_count += 1;
                } else {
                    flat_count = 0;
                }
                break;
            }
            t *= 0.5;
        }
        if !accepted {
            // no descent possible at any step size: stationary
            converged = true;
            break;
        }
        if flat_count >= 50 {
            converged = true;
            break;
        }
    }

    if !converged {
        return Err(Error::NonConvergence {
            what: "Hardy-Sobolev quotient minimization".into(),
            iterations: MU_MAX_ITERS,
        });
    }
    normalize(&mut u);

    // Newton polish of the Euler-Lagrange system (radial mode): descent
    // crawls along the nearly flat concentration valley, Newton lands on
    // the stationary point in a few steps.
    if let SymOp::Tridiag { .. } = &a {
        if let Some(polished) = newton_polish(&a, &factor, grid, &u, p, s, &bnd, residual0) {
            u = polished;
            normalize(&mut u);
            q = quotient_value(&a, grid, &u, p, s);
        }
    }
    Ok((q, GridFunction::new(grid, u)?))
}

/// Bordered Newton iteration on `A u = theta D'(u)`, `D(u) = 1`.
/// Returns the polished profile when it converges to a nonnegative
/// stationary point, `None` otherwise.
#[allow(clippy::too_many_arguments)]
fn newton_polish(
    a: &SymOp,
    factor: &super::linop::Factor,
    grid: &RadialGrid,
    u0: &[f64],
    p: f64,
    s: f64,
    bnd: &[usize],
    residual0: f64,
) -> Option<Vec<f64>> {
    use super::linop::solve_tridiag_symmetric;

    let m = u0.len();
    let mut u = u0.to_vec();

    let eval = |u: &[f64]| -> (Vec<f64>, f64, f64, f64) {
        // F = A u - theta d, with theta = N/(p D)
        let mut au = vec![0.0; m];
        a.matvec(u, &mut au);
        let n_val: f64 = au.iter().zip(u).map(|(x, y)| x * y).sum();
        let mut d = vec![0.0; m];
        let d_val = super::pow_integral(grid, s, p, u, Some(&mut d));
        let theta = n_val / (p * d_val);
        let mut f = vec![0.0; m];
        for i in 0..m {
            f[i] = au[i] - theta * d[i];
        }
        zero_at(&mut f, bnd);
        (f, theta, d_val, n_val)
    };

    let dual_norm = |f: &[f64]| -> f64 {
        let x = factor.solve(f);
        f.iter().zip(&x).map(|(a, b)| a * b).sum::<f64>().max(0.0).sqrt()
    };

    let (mut f, mut theta, _, _) = eval(&u);
    let mut best = dual_norm(&f);
    let target = 1e-9 * residual0;

    for _ in 0..60 {
        if best <= target {
            break;
        }
        // J = A - theta Hess(D), pinned at the boundary
        let hess = super::integrate::pow_hessian(grid, s, p, &u);
        let (mut jd, mut js) = match (a, &hess) {
            (
                SymOp::Tridiag { diag, sub },
                SymOp::Tridiag {
                    diag: hd,
                    sub: hs,
                },
            ) => (
                diag.iter().zip(hd).map(|(x, y)| x - theta * y).collect::<Vec<f64>>(),
                sub.iter().zip(hs).map(|(x, y)| x - theta * y).collect::<Vec<f64>>(),
            ),
            _ => return None,
        };
        for &i in bnd {
            jd[i] = 1.0;
            if i > 0 {
                js[i - 1] = 0.0;
            }
            if i < js.len() {
                js[i] = 0.0;
            }
        }
        let mut dvec = vec![0.0; m];
        super::pow_integral(grid, s, p, &u, Some(&mut dvec));
        zero_at(&mut dvec, bnd);

        let x1 = solve_tridiag_symmetric(&jd, &js, &dvec)?;
        let x2 = solve_tridiag_symmetric(&jd, &js, &f)?;
        let d_dot_x1: f64 = dvec.iter().zip(&x1).map(|(a, b)| a * b).sum();
        if d_dot_x1 == 0.0 {
            return None;
        }
        let d_val = super::pow_integral(grid, s, p, &u, None);
        let d_dot_x2: f64 = dvec.iter().zip(&x2).map(|(a, b)| a * b).sum();
        let dtheta = ((1.0 - d_val) + d_dot_x2) / d_dot_x1;
        // delta u = -J^{-1} F + dtheta J^{-1} d
        let du: Vec<f64> = x2
            .iter()
            .zip(&x1)
            .map(|(f_part, d_part)| -f_part + dtheta * d_part)
            .collect();

        // damped update
        let mut step = 1.0;
        let mut improved = false;
        for _ in 0..12 {
            let trial: Vec<f64> = u.iter().zip(&du).map(|(a, b)| a + step * b).collect();
            let (tf, tt, _, _) = eval(&trial);
            let tn = dual_norm(&tf);
            if tn < best {
                u = trial;
                f = tf;
                theta = tt;
                best = tn;
                improved = true;
                break;
            }
            step *= 0.5;
        }
        if !improved {
            break;
        }
    }

    if best > target {
        return None;
    }
    let scale = u.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
    if u.iter().any(|&v| v < -1e-10 * scale) {
        return None;
    }
    for v in u.iter_mut() {
        if *v < 0.0 {
            *v = 0.0;
        }
    }
    Some(u)
}

/// Preconditioned gradient norm of the quotient at `u` (the Euler-Lagrange
/// residual in the triple-norm dual metric), for stationarity checks.
pub fn mu_residual(inst: &ProblemInstance, u: &GridFunction) -> Result<f64> {
    let grid = u.grid();
    check_mu_preconditions(inst, grid)?;
    let a = triple_gram(inst, grid)?;
    let factor = a.factor()?;
    let bnd = grid.boundary_indices();
    let (g, _, _) = quotient_gradient(&a, grid, u.values(), inst.two_star_s(), inst.s, &bnd);
    let d = factor.solve(&g);
    Ok(g.iter().zip(&d).map(|(x, y)| x * y).sum::<f64>().sqrt())
}

/// Plain quotient value at a given profile (plug-in upper bound for mu).
pub fn mu_quotient(inst: &ProblemInstance, u: &GridFunction) -> Result<f64> {
    let f = super::forms(u, inst)?;
    if f.hs_integral <= 0.0 {
        return Err(Error::domain("quotient needs a nonzero positive part"));
    }
    Ok(f.triple_norm_sq / f.hs_integral.powf(2.0 / inst.two_star_s()))
}

/// First Dirichlet eigenvalue of the operator: minimize
/// `triple norm^2 / int u^2` by inverse-power iteration. Positive whenever
/// `gamma < gamma_H` holds discretely.
pub fn first_eigenvalue(inst: &ProblemInstance, grid: &Arc<RadialGrid>) -> Result<f64> {
    check_mu_preconditions(inst, grid)?;
    smallest_eigenvalue(inst, grid)
}

/// Inverse-power core, also usable for the closed-form negative-gamma
/// extension at alpha = 2 (the Gram matrix stays positive definite there).
pub(crate) fn smallest_eigenvalue(inst: &ProblemInstance, grid: &Arc<RadialGrid>) -> Result<f64> {
    grid.check_instance(inst)?;
    let a = triple_gram(inst, grid)?;
    let factor = a.factor()?;
    let bnd = grid.boundary_indices();
    let m = grid.len();
    let w = grid.weights();

    let mut x = vec![1.0; m];
    zero_at(&mut x, &bnd);
    let mut lambda = f64::INFINITY;
    for it in 0..10_000 {
        let mut rhs: Vec<f64> = x.iter().zip(w).map(|(&xi, &wi)| wi * xi).collect();
        zero_at(&mut rhs, &bnd);
        let mut y = factor.solve(&rhs);
        zero_at(&mut y, &bnd);
        let ym: f64 = y.iter().zip(w).map(|(&yi, &wi)| wi * yi * yi).sum();
        let c = ym.sqrt().recip();
        for v in y.iter_mut() {
            *v *= c;
        }
        let num = a.quad(&y);
        let den: f64 = y.iter().zip(w).map(|(&yi, &wi)| wi * yi * yi).sum();
        let next = num / den;
        let done = (next - lambda).abs() <= 1e-12 * next.abs();
        lambda = next;
        x = y;
        if done && it > 3 {
            return Ok(lambda);
        }
    }
    Err(Error::NonConvergence {
        what: "inverse-power iteration for the first eigenvalue".into(),
        iterations: 10_000,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadform::{build_grid, forms, gagliardo_seminorm_sq, GridMode};
    use crate::thresholds::DomainSpec;

    fn ball_instance(n: f64, gamma: f64, s: f64) -> ProblemInstance {
        ProblemInstance::new(n, 2.0, s, gamma, 0.0, 3.0, 1.0).unwrap()
    }

    #[test]
    fn gagliardo_matrix_matches_scalar_route() {
        use rand::rngs::StdRng;
        use rand::{Rng, SeedableRng};
        let grid = Arc::new(build_grid(GridMode::Interval1D, 1.0, 1.0, 48, 1.0).unwrap());
        let mut rng = StdRng::seed_from_u64(21);
        for &alpha in &[0.4, 0.8, 1.0, 1.5] {
            let op = assemble_gagliardo(&grid, alpha).unwrap();
            for _ in 0..5 {
                let mut vals: Vec<f64> = (0..grid.len())
                    .map(|_| rng.random_range(-1.0..1.0))
                    .collect();
                vals[0] = 0.0;
                *vals.last_mut().unwrap() = 0.0;
                let direct = gagliardo_seminorm_sq(&grid, &vals, alpha).unwrap();
                let via_matrix = op.quad(&vals);
                assert!(
                    (direct - via_matrix).abs() <= 1e-11 * direct.abs().max(1.0),
                    "alpha={alpha}: {direct} vs {via_matrix}"
                );
            }
        }
    }

    #[test]
    fn radial_stiffness_matches_seminorm() {
        let grid = Arc::new(build_grid(GridMode::RadialAlpha2, 3.0, 1.0, 120, 2.0).unwrap());
        let u = GridFunction::from_fn(&grid, |r| (1.0 - r) * (1.0 + 0.3 * r)).unwrap();
        let op = assemble_seminorm(&grid, 2.0).unwrap();
        let direct = crate::quadform::radial_seminorm_sq(&grid, u.values());
        assert!((op.quad(u.values()) - direct).abs() < 1e-12 * direct);
    }

    #[test]
    fn first_eigenvalue_unit_ball_n3() {
        // -u'' - 2u'/r = lambda u on B_1: lambda_1 = pi^2, u = sin(pi r)/r
        let grid = Arc::new(build_grid(GridMode::RadialAlpha2, 3.0, 1.0, 400, 1.0).unwrap());
        let inst = ball_instance(3.0, 0.0, 0.0);
        let l1 = first_eigenvalue(&inst, &grid).unwrap();
        let want = std::f64::consts::PI * std::f64::consts::PI;
        assert!(
            (l1 - want).abs() < 0.01 * want,
            "lambda_1 = {l1}, want {want}"
        );
    }

    #[test]
    fn first_eigenvalue_decreases_with_gamma() {
        let grid = Arc::new(build_grid(GridMode::RadialAlpha2, 3.0, 1.0, 300, 2.0).unwrap());
        let l0 = first_eigenvalue(&ball_instance(3.0, 0.0, 0.0), &grid).unwrap();
        let l1 = first_eigenvalue(&ball_instance(3.0, 0.1, 0.0), &grid).unwrap();
        let l2 = first_eigenvalue(&ball_instance(3.0, 0.21, 0.0), &grid).unwrap();
        assert!(l0 > l1 && l1 > l2);
        // frozen Bessel oracle: lambda_1(3, 0.21, B_1) = j_{0.2,1}^2
        assert!(
            (l2 - 7.328242928833018).abs() < 0.01 * 7.328242928833018,
            "lambda_1 = {l2}"
        );
    }

    #[test]
    fn first_eigenvalue_dilation_scaling() {
        // lambda_1(B_R) = lambda_1(B_1)/R^2 for alpha = 2, gamma = 0
        let g1 = Arc::new(build_grid(GridMode::RadialAlpha2, 3.0, 1.0, 300, 1.0).unwrap());
        let g2 = Arc::new(build_grid(GridMode::RadialAlpha2, 3.0, 2.5, 300, 1.0).unwrap());
        let i1 = ball_instance(3.0, 0.0, 0.0);
        let i2 = ProblemInstance::new(3.0, 2.0, 0.0, 0.0, 0.0, 3.0, 1.0)
            .unwrap()
            .with_domain(DomainSpec::Ball { radius: 2.5 })
            .unwrap();
        let l1 = first_eigenvalue(&i1, &g1).unwrap();
        let l2 = first_eigenvalue(&i2, &g2).unwrap();
        assert!((l2 - l1 / 6.25).abs() < 1e-3 * l1);
    }

    #[test]
    fn mu_quotient_homogeneous() {
        let grid = Arc::new(build_grid(GridMode::RadialAlpha2, 3.0, 1.0, 200, 2.0).unwrap());
        let inst = ball_instance(3.0, 0.1, 0.5);
        let u = GridFunction::from_fn(&grid, |r| (1.0 + r * r).powf(-0.5)).unwrap();
        let base = mu_quotient(&inst, &u).unwrap();
        for &c in &[1e-3, 0.1, 7.0, 1e3] {
            let v = u.scaled(c);
            let q = mu_quotient(&inst, &v).unwrap();
            assert!((q - base).abs() <= 1e-12 * base, "c={c}: {q} vs {base}");
        }
    }

    #[test]
    fn mu_minimizer_stationary_and_below_plugin() {
        let grid = Arc::new(build_grid(GridMode::RadialAlpha2, 3.0, 1.0, 250, 2.0).unwrap());
        let inst = ball_instance(3.0, 0.0, 0.0);
        let init = GridFunction::from_fn(&grid, |r| (1.0 + r * r).powf(-0.5)).unwrap();
        let r0 = mu_residual(&inst, &init).unwrap();
        let (mu, minimizer) = rayleigh_min_mu(&inst, &grid).unwrap();
        let plugin = mu_quotient(&inst, &init).unwrap();
        assert!(mu <= plugin + 1e-12, "min {mu} above plug-in {plugin}");
        let r1 = mu_residual(&inst, &minimizer).unwrap();
        assert!(
            r1 <= 1e-6 * r0,
            "Euler-Lagrange residual not reduced: {r1} vs initial {r0}"
        );
        assert!(minimizer.values().iter().all(|&v| v >= 0.0));
    }

    #[test]
    fn mu_decreases_in_gamma() {
        let grid = Arc::new(build_grid(GridMode::RadialAlpha2, 3.0, 1.0, 200, 2.0).unwrap());
        let (mu0, _) = rayleigh_min_mu(&ball_instance(3.0, 0.0, 0.0), &grid).unwrap();
        let (mu1, _) = rayleigh_min_mu(&ball_instance(3.0, 0.12, 0.0), &grid).unwrap();
        let (mu2, _) = rayleigh_min_mu(&ball_instance(3.0, 0.21, 0.0), &grid).unwrap();
        assert!(mu0 > mu1 && mu1 > mu2, "{mu0} {mu1} {mu2}");
    }

    #[test]
    fn mu_rejects_negative_gamma() {
        let grid = Arc::new(build_grid(GridMode::RadialAlpha2, 5.0, 1.0, 64, 1.0).unwrap());
        let inst = ProblemInstance::new(5.0, 2.0, 0.0, -1.0, 0.0, 3.0, 1.0).unwrap();
        assert!(rayleigh_min_mu(&inst, &grid).is_err());
    }

    #[test]
    fn mu_minimizers_differ_across_s_but_both_stationary() {
        let grid = Arc::new(build_grid(GridMode::RadialAlpha2, 3.0, 1.0, 200, 2.0).unwrap());
        let i0 = ball_instance(3.0, 0.1, 0.0);
        let i1 = ball_instance(3.0, 0.1, 1.0);
        let (_, u0) = rayleigh_min_mu(&i0, &grid).unwrap();
        let (_, u1) = rayleigh_min_mu(&i1, &grid).unwrap();
        let diff: f64 = u0
            .values()
            .iter()
            .zip(u1.values())
            .map(|(a, b)| (a - b).abs())
            .sum();
        assert!(diff > 1e-3, "minimizers for s=0 and s=1 should differ");
        let init = GridFunction::from_fn(&grid, |r| (1.0 + r * r).powf(-0.5)).unwrap();
        for (inst, u) in [(&i0, &u0), (&i1, &u1)] {
            let r_init = mu_residual(inst, &init).unwrap();
            let r_min = mu_residual(inst, u).unwrap();
            assert!(r_min <= 1e-6 * r_init);
        }
    }

    #[test]
    fn gradient_matches_finite_differences() {
        use rand::rngs::StdRng;
        use rand::{Rng, SeedableRng};
        let grid = Arc::new(build_grid(GridMode::RadialAlpha2, 3.0, 1.0, 80, 2.0).unwrap());
        let inst = ball_instance(3.0, 0.15, 0.5);
        let a = triple_gram(&inst, &grid).unwrap();
        let bnd = grid.boundary_indices();
        let p = inst.two_star_s();
        let mut rng = StdRng::seed_from_u64(5);
        for _ in 0..10 {
            let u = GridFunction::from_fn(&grid, |r| {
                (1.0 + r * r).powf(-0.5) * (1.0 + 0.2 * (3.0 * r).sin())
            })
            .unwrap();
            let mut w: Vec<f64> = (0..grid.len()).map(|_| rng.random_range(-1.0..1.0)).collect();
            zero_at(&mut w, &bnd);

            let (g, _, _) = quotient_gradient(&a, &grid, u.values(), p, inst.s, &bnd);
            let deriv: f64 = g.iter().zip(&w).map(|(x, y)| x * y).sum();

            let h = 1e-6;
            let up: Vec<f64> = u.values().iter().zip(&w).map(|(a, b)| a + h * b).collect();
            let um: Vec<f64> = u.values().iter().zip(&w).map(|(a, b)| a - h * b).collect();
            let qp = quotient_value(&a, &grid, &up, p, inst.s);
            let qm = quotient_value(&a, &grid, &um, p, inst.s);
            let fd = (qp - qm) / (2.0 * h);
            assert!(
                (deriv - fd).abs() <= 1e-6 * fd.abs().max(1.0),
                "directional derivative {deriv} vs finite difference {fd}"
            );
        }
    }
}
