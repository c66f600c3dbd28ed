//! Numerical min-max for the local functional: verify the mountain-pass
//! geometry, deform a path from 0 to a negative-energy point, and polish
//! the pass point to a critical point of the energy.

use crate::error::{Error, Result};
use crate::quadform::{
    self, forms, rayleigh_min_mu, GridFunction, GridMode, RadialGrid, SymOp,
};
use crate::testfun::{fiber_max, make_bubble, upsilon_from_mu, CutoffSpec};
use crate::thresholds::ProblemInstance;
use std::sync::Arc;

/// Solver knobs for the min-max realization.
#[derive(Debug, Clone)]
pub struct MPConfig {
    /// Total iteration budget (deformation sweeps plus polish steps).
    pub max_iters: usize,
    /// Residual stopping threshold in the dual norm.
    pub grad_tol: f64,
    /// Path discretization (at least 16 points).
    pub path_points: usize,
    /// Initial trial step for the per-point descent.
    pub deform_step: f64,
    /// Seed direction `v_0`; `None` uses the truncated bubble.
    pub seed_direction: Option<GridFunction>,
}

impl Default for MPConfig {
    fn default() -> Self {
        MPConfig {
            max_iters: 2000,
            grad_tol: 1e-6,
            path_points: 33,
            deform_step: 0.5,
            seed_direction: None,
        }
    }
}

impl MPConfig {
    fn validate(&self) -> Result<()> {
        if !(self.grad_tol > 0.0) {
            return Err(Error::validation("grad_tol must be positive"));
        }
        if self.path_points < 16 {
            return Err(Error::validation("need at least 16 path points"));
        }
        if !(self.deform_step > 0.0) {
            return Err(Error::validation("deform_step must be positive"));
        }
        Ok(())
    }
}

/// One step of the level/residual history.
#[derive(Debug, Clone, Copy)]
pub struct TraceEntry {
    pub level: f64,
    pub residual: f64,
}

/// Outcome of a min-max run.
#[derive(Debug, Clone)]
pub struct MPResult {
    /// Estimated mountain-pass level.
    pub level: f64,
    pub solution: GridFunction,
    /// Dual-norm residual of the energy derivative at the solution.
    pub residual: f64,
    /// Whether `level < Upsilon_discrete` (the PS threshold on this grid).
    pub below_threshold: bool,
    /// Minimum node value is above `-1e-10` (verified, not enforced).
    pub positive: bool,
    pub iterations: usize,
    /// Measured ring minimum of the geometry check.
    pub rho: f64,
    /// Discrete PS threshold used for the comparison.
    pub upsilon_discrete: f64,
    /// Energy at the far path endpoint (stays negative).
    pub endpoint_energy: f64,
    pub trace: Vec<TraceEntry>,
    pub converged: bool,
}

/// Assembled discrete functional for `alpha = 2` on a radial grid.
struct Phi2 {
    inst: ProblemInstance,
    grid: Arc<RadialGrid>,
    /// pinned Gram matrix of the triple norm
    a: SymOp,
    factor: quadform::Factor,
    /// consistent mass matrix (L^2)
    m0: SymOp,
    bnd: Vec<usize>,
}

impl Phi2 {
    fn new(inst: &ProblemInstance, grid: &Arc<RadialGrid>) -> Result<Self> {
        if inst.alpha != 2.0 || grid.mode() != GridMode::RadialAlpha2 {
            return Err(Error::validation(
                "the local functional needs alpha = 2 on a radial grid",
            ));
        }
        let a = quadform::triple_gram(inst, grid)?;
        let factor = a.factor()?;
        let m0 = quadform::weighted_mass_matrix(grid, 0.0);
        Ok(Phi2 {
            inst: inst.clone(),
            grid: Arc::clone(grid),
            a,
            factor,
            m0,
            bnd: grid.boundary_indices(),
        })
    }

    fn value(&self, u: &[f64]) -> f64 {
        let triple = self.a.quad(u);
        let l2 = self.m0.quad(u);
        let p = self.inst.two_star_s();
        let hs = quadform::pow_integral(&self.grid, self.inst.s, p, u, None);
        let q = self.inst.q;
        let h0 = self.inst.h0;
        let pert_f = move |_: f64, v: f64| h0 * v.max(0.0).powf(q);
        let pert = quadform::weighted_integral(&self.grid, 0.0, u, &pert_f, None);
        0.5 * triple - 0.5 * self.inst.lambda * l2 - hs / p - pert / q
    }

    /// Euclidean derivative vector (the dual element), zeroed on the
    /// boundary.
    fn dual_gradient(&self, u: &[f64]) -> Vec<f64> {
        let m = u.len();
        let mut au = vec![0.0; m];
        self.a.matvec(u, &mut au);
        let mut mu = vec![0.0; m];
        self.m0.matvec(u, &mut mu);

        let p = self.inst.two_star_s();
        let mut g_hs = vec![0.0; m];
        quadform::pow_integral(&self.grid, self.inst.s, p, u, Some(&mut g_hs));
        let q = self.inst.q;
        let h0 = self.inst.h0;
        let pert_f = move |_: f64, v: f64| h0 * v.max(0.0).powf(q);
        let pert_df = move |_: f64, v: f64| h0 * q * v.max(0.0).powf(q - 1.0);
        let mut g_pert = vec![0.0; m];
        quadform::weighted_integral(&self.grid, 0.0, u, &pert_f, Some((&pert_df, &mut g_pert)));

        let mut f = vec![0.0; m];
        for i in 0..m {
            f[i] = au[i] - self.inst.lambda * mu[i] - g_hs[i] / p - g_pert[i] / q;
        }
        for &i in &self.bnd {
            f[i] = 0.0;
        }
        f
    }

    /// Riesz representative of the dual vector and the dual-norm residual.
    fn riesz(&self, f: &[f64]) -> (Vec<f64>, f64) {
        let g = self.factor.solve(f);
        let r2: f64 = f.iter().zip(&g).map(|(a, b)| a * b).sum();
        (g, r2.max(0.0).sqrt())
    }

    /// Tridiagonal Hessian of the energy at `u`, boundary-pinned.
    fn hessian(&self, u: &[f64]) -> Option<(Vec<f64>, Vec<f64>)> {
        let p = self.inst.two_star_s();
        let q = self.inst.q;
        let hs_h = quadform::integrate::pow_hessian(&self.grid, self.inst.s, p, u);
        let pert_h = quadform::integrate::pow_hessian(&self.grid, 0.0, q, u);
        let (mut jd, mut js) = match (&self.a, &self.m0, &hs_h, &pert_h) {
            (
                SymOp::Tridiag { diag: ad, sub: asb },
                SymOp::Tridiag { diag: md, sub: ms },
                SymOp::Tridiag { diag: hd, sub: hsb },
                SymOp::Tridiag { diag: pd, sub: ps },
            ) => {
                let lam = self.inst.lambda;
                let h0 = self.inst.h0;
                let jd: Vec<f64> = (0..ad.len())
                    .map(|i| ad[i] - lam * md[i] - hd[i] / p - h0 * pd[i] / q)
                    .collect();
                let js: Vec<f64> = (0..asb.len())
                    .map(|i| asb[i] - lam * ms[i] - hsb[i] / p - h0 * ps[i] / q)
                    .collect();
                (jd, js)
            }
            _ => return None,
        };
        for &i in &self.bnd {
            jd[i] = 1.0;
            if i > 0 {
                js[i - 1] = 0.0;
            }
            if i < js.len() {
                js[i] = 0.0;
            }
        }
        Some((jd, js))
    }

    /// Rescale `u` to its fiber maximum `t* u`; `None` when the ray has no
    /// positive maximum (degenerate direction).
    fn to_fiber_peak(&self, u: &[f64]) -> Option<Vec<f64>> {
        let triple = self.a.quad(u);
        let l2 = self.m0.quad(u);
        let i = triple - self.inst.lambda * l2;
        let p = self.inst.two_star_s();
        let j = quadform::pow_integral(&self.grid, self.inst.s, p, u, None);
        let q = self.inst.q;
        let h0 = self.inst.h0;
        let pert_f = move |_: f64, v: f64| h0 * v.max(0.0).powf(q);
        let k = quadform::weighted_integral(&self.grid, 0.0, u, &pert_f, None);
        let fm = fiber_max(i, j, k, p, q).ok()?;
        Some(u.iter().map(|&v| fm.t_star * v).collect())
    }
}

/// Energy value and the Riesz representative of the derivative of the
/// local functional.
pub fn phi2_and_gradient(
    inst: &ProblemInstance,
    u: &GridFunction,
) -> Result<(f64, GridFunction)> {
    let phi = Phi2::new(inst, u.grid())?;
    let value = phi.value(u.values());
    let f = phi.dual_gradient(u.values());
    let (g, _) = phi.riesz(&f);
    Ok((value, GridFunction::new(u.grid(), g)?))
}

/// Directional derivative `DPhi_2(u)[w]` (pairs the dual vector with `w`).
pub fn phi2_directional(inst: &ProblemInstance, u: &GridFunction, w: &GridFunction) -> Result<f64> {
    let phi = Phi2::new(inst, u.grid())?;
    let f = phi.dual_gradient(u.values());
    Ok(f.iter().zip(w.values()).map(|(a, b)| a * b).sum())
}

/// Run the min-max and return diagnostics even when the residual target is
/// not reached (the error, if any, is attached).
pub fn mountain_pass_attempt(
    inst: &ProblemInstance,
    grid: &Arc<RadialGrid>,
    cfg: &MPConfig,
) -> Result<(MPResult, Option<Error>)> {
    cfg.validate()?;
    inst.validate()?;
    let phi = Phi2::new(inst, grid)?;

    // geometry needs lambda below the discrete first eigenvalue
    let lambda1 = quadform::smallest_eigenvalue(inst, grid)?;
    if inst.lambda >= lambda1 {
        return Err(Error::domain(format!(
            "geometry failure: lambda = {} is not below the discrete lambda_1 = {lambda1:.8}",
            inst.lambda
        )));
    }

    // seed direction: truncated bubble by default
    let seed = match &cfg.seed_direction {
        Some(s) => {
            if s.values().iter().any(|&v| v < 0.0) || s.max_abs() == 0.0 {
                return Err(Error::validation(
                    "seed direction must be nonnegative and nonzero",
                ));
            }
            s.clone()
        }
        None => {
            let bubble = make_bubble(inst)?;
            let cutoff = CutoffSpec::default_for(inst.domain.extent());
            let eps = cutoff.delta() / 10.0;
            let scale = eps.powf(-0.5 * (inst.n - inst.alpha));
            GridFunction::from_fn(grid, |r| {
                cutoff.eta(r) * scale * bubble.eval(r / eps)
            })?
        }
    };

    // (a) Phi(0) = 0 by construction; (c) find t0 with Phi(t0 seed) < 0
    let mut t0 = 1.0;
    let mut endpoint_energy = phi.value(&seed.scaled(t0).values().to_vec());
    let mut grew = 0;
    while endpoint_energy >= 0.0 && grew < 200 {
        t0 *= 2.0;
        endpoint_energy = phi.value(&seed.scaled(t0).values().to_vec());
        grew += 1;
    }
    if endpoint_energy >= 0.0 {
        return Err(Error::domain(
            "could not drive the energy negative along the seed ray",
        ));
    }

    // (b) ring minimum: sample profiles at a small triple-norm radius
    let endpoint = seed.scaled(t0);
    let ring_radius = 0.05 * phi.a.quad(endpoint.values()).sqrt();
    let mut rho = f64::INFINITY;
    for k in 0..8 {
        let kf = k as f64;
        let modulated = GridFunction::from_fn(grid, |r| {
            let base = interp(&seed, r);
            base * (1.0 + 0.3 * (kf * 1.7 + 3.0 * kf * r / grid.extent()).sin())
        })?;
        let norm = phi.a.quad(modulated.values()).sqrt();
        if norm == 0.0 {
            continue;
        }
        let probe = modulated.scaled(ring_radius / norm);
        rho = rho.min(phi.value(probe.values()));
    }
    if !(rho > 0.0) {
        return Err(Error::domain(format!(
            "geometry failure: sampled ring minimum {rho:.3e} is not positive"
        )));
    }

    // discrete PS threshold for the diagnostics
    let (mu_d, _) = rayleigh_min_mu(inst, grid)?;
    let upsilon = upsilon_from_mu(inst, mu_d);

    // path deformation: straight segment to t0 seed, pointwise descent
    let pp = cfg.path_points;
    let mut path: Vec<Vec<f64>> = (0..pp)
        .map(|j| {
            let t = t0 * (j as f64) / (pp as f64 - 1.0);
            seed.values().iter().map(|&v| t * v).collect()
        })
        .collect();

    let mut trace = Vec::new();
    let mut iterations = 0;
    let sweep_budget = (cfg.max_iters / 8).clamp(10, 40);
    let mut last_max = f64::INFINITY;
    for _ in 0..sweep_budget {
        iterations += 1;
        // move interior points down-gradient with backtracking
        for point in path.iter_mut().take(pp - 1).skip(1) {
            let f = phi.dual_gradient(point);
            let (g, r) = phi.riesz(&f);
            if r <= cfg.grad_tol {
                continue;
            }
            let val = phi.value(point);
            let mut t = cfg.deform_step;
            for _ in 0..25 {
                let trial: Vec<f64> =
                    point.iter().zip(&g).map(|(&u, &d)| u - t * d).collect();
                if phi.value(&trial) <= val - 1e-4 * t * r * r {
                    *point = trial;
                    break;
                }
                t *= 0.5;
            }
        }
        // locate the path maximum
        let (jmax, max_val) = path
            .iter()
            .enumerate()
            .map(|(j, u)| (j, phi.value(u)))
            .max_by(|a, b| a.1.total_cmp(&b.1))
            .unwrap();
        let f = phi.dual_gradient(&path[jmax]);
        let (_, rmax) = phi.riesz(&f);
        trace.push(TraceEntry {
            level: max_val,
            residual: rmax,
        });
        if rmax <= cfg.grad_tol {
            break;
        }
        if (last_max - max_val).abs() <= 1e-6 * max_val.abs().max(1.0) {
            break;
        }
        last_max = max_val;
    }

    // polish the pass point: descent with radial remaximization for the
    // global approach, then damped Newton on the stationarity system
    let (jmax, _) = path
        .iter()
        .enumerate()
        .map(|(j, u)| (j, phi.value(u)))
        .max_by(|a, b| a.1.total_cmp(&b.1))
        .unwrap();
    let mut v = match phi.to_fiber_peak(&path[jmax]) {
        Some(v) => v,
        None => path[jmax].clone(),
    };
    let mut level = phi.value(&v);
    let mut residual = f64::INFINITY;
    let mut converged = false;

    for _round in 0..3 {
        // phase 1: Nehari-style descent
        let mut step = 1.0;
        let descent_budget = 150.min(cfg.max_iters.saturating_sub(iterations));
        for _ in 0..descent_budget {
            iterations += 1;
            let f = phi.dual_gradient(&v);
            let (g, r) = phi.riesz(&f);
            residual = r;
            trace.push(TraceEntry { level, residual });
            if r <= cfg.grad_tol {
                converged = true;
                break;
            }
            let mut t = step;
            let mut advanced = false;
            for _ in 0..40 {
                let raw: Vec<f64> = v.iter().zip(&g).map(|(&u, &d)| u - t * d).collect();
                if let Some(peak) = phi.to_fiber_peak(&raw) {
                    let val = phi.value(&peak);
                    if val < level {
                        v = peak;
                        level = val;
                        advanced = true;
                        step = (t * 2.0).min(4.0);
                        break;
                    }
                }
                t *= 0.5;
            }
            if !advanced {
                break;
            }
        }
        if converged && residual <= 0.02 * cfg.grad_tol {
            break;
        }

        // phase 2: damped Newton drives the residual to the target
        let mut f = phi.dual_gradient(&v);
        let (_, mut r) = phi.riesz(&f);
        let newton_budget = 60.min(cfg.max_iters.saturating_sub(iterations));
        for _ in 0..newton_budget {
            iterations += 1;
            if r <= 0.02 * cfg.grad_tol {
                break;
            }
            let Some((jd, js)) = phi.hessian(&v) else {
                break;
            };
            let Some(du) = quadform::solve_tridiag_symmetric(&jd, &js, &f) else {
                break;
            };
            let mut t = 1.0;
            let mut improved = false;
            for _ in 0..15 {
                let trial: Vec<f64> =
                    v.iter().zip(&du).map(|(&u, &d)| u - t * d).collect();
                let tf = phi.dual_gradient(&trial);
                let (_, tr) = phi.riesz(&tf);
                if tr < r {
                    v = trial;
                    f = tf;
                    r = tr;
                    improved = true;
                    break;
                }
                t *= 0.5;
            }
            level = phi.value(&v);
            residual = r;
            trace.push(TraceEntry { level, residual });
            if !improved {
                break;
            }
        }
        if residual <= cfg.grad_tol {
            converged = true;
        }
        if converged || iterations >= cfg.max_iters {
            break;
        }
    }
    level = phi.value(&v);

    let solution = GridFunction::new(grid, v)?;
    let min_val = solution.min_value();
    let result = MPResult {
        level,
        residual,
        below_threshold: level < upsilon,
        positive: min_val >= -1e-10,
        iterations,
        rho,
        upsilon_discrete: upsilon,
        endpoint_energy,
        trace,
        converged,
        solution,
    };
    let err = if converged {
        None
    } else {
        Some(Error::NonConvergence {
            what: format!(
                "mountain-pass residual plateau at {residual:.3e} (tol {})",
                cfg.grad_tol
            ),
            iterations,
        })
    };
    Ok((result, err))
}

/// Run the min-max; errors on geometry failure or residual stagnation.
pub fn mountain_pass_solve(
    inst: &ProblemInstance,
    grid: &Arc<RadialGrid>,
    cfg: &MPConfig,
) -> Result<MPResult> {
    let (result, err) = mountain_pass_attempt(inst, grid, cfg)?;
    match err {
        None => Ok(result),
        Some(e) => Err(e),
    }
}

fn interp(u: &GridFunction, r: f64) -> f64 {
    let nodes = u.grid().nodes();
    let vals = u.values();
    match nodes.binary_search_by(|x| x.partial_cmp(&r).unwrap()) {
        Ok(i) => vals[i],
        Err(0) => vals[0],
        Err(i) if i >= nodes.len() => *vals.last().unwrap(),
        Err(i) => {
            let t = (r - nodes[i - 1]) / (nodes[i] - nodes[i - 1]);
            vals[i - 1] * (1.0 - t) + vals[i] * t
        }
    }
}

/// Palais-Smale style report over a solve trace.
#[derive(Debug, Clone)]
pub struct PsReport {
    pub iterations: usize,
    pub final_level: Option<f64>,
    pub final_residual: Option<f64>,
    /// Tail of the level sequence settles (Cauchy at 1e-6 relative).
    pub levels_cauchy: bool,
    pub below_threshold: bool,
    /// Final level within 1% of the discrete PS threshold.
    pub compactness_risk: bool,
}

/// Inspect a solve trace against the discrete PS threshold.
pub fn ps_monitor(trace: &[TraceEntry], upsilon: f64) -> PsReport {
    if trace.is_empty() {
        return PsReport {
            iterations: 0,
            final_level: None,
            final_residual: None,
            levels_cauchy: false,
            below_threshold: false,
            compactness_risk: false,
        };
    }
    let final_level = trace.last().unwrap().level;
    let tail_start = trace.len() - (trace.len() / 4).max(1);
    let tail = &trace[tail_start..];
    let cauchy = tail
        .iter()
        .all(|e| (e.level - final_level).abs() <= 1e-6 * (1.0 + final_level.abs()));
    PsReport {
        iterations: trace.len(),
        final_level: Some(final_level),
        final_residual: Some(trace.last().unwrap().residual),
        levels_cauchy: cauchy,
        below_threshold: final_level < upsilon,
        compactness_risk: (final_level - upsilon).abs() <= 0.01 * upsilon.abs(),
    }
}
