//! Concentrating test functions and their energy expansions: the bubble
//! profile (extremal of the Hardy-Sobolev quotient), the cutoff, the
//! energy pieces I/J/K, the exact fiber maximum, and log-log fits of the
//! threshold deficit against the concentration parameter.

use crate::error::{Error, Result};
use crate::quadform::{
    self, build_grid, forms, rayleigh_min_mu, GridFunction, GridMode, MassProfile, RadialGrid,
};
use crate::roots::brent;
use crate::thresholds::{beta_pm, DomainSpec, ProblemInstance};
use std::sync::Arc;

/// Smooth radial cutoff: identically 1 on `[0, delta]`, quintic smoothstep
/// down to 0 on `[delta, 2 delta]`.
#[derive(Debug, Clone, Copy)]
pub struct CutoffSpec {
    delta: f64,
}

impl CutoffSpec {
    /// `delta > 0` with `4 delta < extent`.
    pub fn new(delta: f64, extent: f64) -> Result<Self> {
        if !(delta > 0.0 && 4.0 * delta < extent) {
            return Err(Error::validation(format!(
                "cutoff needs 0 < delta and 4 delta < {extent}, got {delta}"
            )));
        }
        Ok(CutoffSpec { delta })
    }

    /// Default `delta = extent / 5`.
    pub fn default_for(extent: f64) -> Self {
        CutoffSpec { delta: extent / 5.0 }
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn eta(&self, r: f64) -> f64 {
        let r = r.abs();
        if r <= self.delta {
            1.0
        } else if r >= 2.0 * self.delta {
            0.0
        } else {
            let t = (r - self.delta) / self.delta;
            1.0 - t * t * t * (10.0 - 15.0 * t + 6.0 * t * t)
        }
    }
}

/// Numerical extremal of the Hardy-Sobolev quotient on a large reference
/// domain, normalized so the far tail is `r^{-beta_+}` with unit
/// coefficient; evaluable at any radius by log-log interpolation with
/// power-law extrapolation on both ends.
#[derive(Debug, Clone)]
pub struct BubbleProfile {
    profile: GridFunction,
    log_r: Vec<f64>,
    log_u: Vec<f64>,
    window_hi: usize,
    beta_minus: f64,
    beta_plus: f64,
    inner_coeff: f64,
    /// Euler-Lagrange constant of the normalized extremal.
    pub kappa: f64,
    /// Discrete quotient value on the reference grid.
    pub mu: f64,
    /// Fitted log-log tail slope (close to `-beta_+` when healthy).
    pub tail_exponent: f64,
    pub beta_plus_decay_checked: bool,
}

impl BubbleProfile {
    pub fn grid_function(&self) -> &GridFunction {
        &self.profile
    }

    pub fn beta_minus(&self) -> f64 {
        self.beta_minus
    }

    pub fn beta_plus(&self) -> f64 {
        self.beta_plus
    }

    /// Evaluate the profile at radius `x > 0`.
    pub fn eval(&self, x: f64) -> f64 {
        let r_lo = self.log_r[0].exp();
        let r_hi = self.log_r[self.window_hi].exp();
        if x >= r_hi {
            return x.powf(-self.beta_plus);
        }
        if x <= r_lo {
            return self.inner_coeff * x.powf(-self.beta_minus);
        }
        let lx = x.ln();
        let mut a = 0;
        let mut b = self.window_hi;
        while b - a > 1 {
            let mid = (a + b) / 2;
            if self.log_r[mid] <= lx {
                a = mid;
            } else {
                b = mid;
            }
        }
        let t = (lx - self.log_r[a]) / (self.log_r[b] - self.log_r[a]);
        (self.log_u[a] * (1.0 - t) + self.log_u[b] * t).exp()
    }
}

const BUBBLE_R_FACTOR: f64 = 50.0;
const BUBBLE_NODES: usize = 2000;

/// Compute the bubble profile for the instance's `(n, alpha, s, gamma)` by
/// minimizing the Hardy-Sobolev quotient on a reference domain 50x the
/// instance domain, then normalizing the tail coefficient to 1. The
/// boundary-polluted far field is replaced by the fitted asymptote.
pub fn make_bubble(inst: &ProblemInstance) -> Result<BubbleProfile> {
    let r_ref = BUBBLE_R_FACTOR * inst.domain.extent();
    let (mode, dim, ref_domain) = match inst.domain {
        DomainSpec::Ball { .. } => (
            GridMode::RadialAlpha2,
            inst.n,
            DomainSpec::Ball { radius: r_ref },
        ),
        DomainSpec::Interval { .. } => (
            GridMode::Interval1D,
            1.0,
            DomainSpec::Interval { half_length: r_ref },
        ),
    };
    let ref_inst = ProblemInstance {
        lambda: 0.0,
        mass: None,
        ..inst.clone()
    }
    .with_domain(ref_domain)?;
    ref_inst.validate()?;

    let grid = Arc::new(build_grid(mode, dim, r_ref, BUBBLE_NODES, 2.0)?);
    let (mu, minimizer) = rayleigh_min_mu(&ref_inst, &grid)?;
    let (beta_minus, beta_plus) = beta_pm(inst.n, inst.alpha, inst.gamma)?;

    // positive-radius half (identity in radial mode)
    let (nodes, mut vals): (Vec<f64>, Vec<f64>) = grid
        .nodes()
        .iter()
        .zip(minimizer.values())
        .filter(|(&r, _)| r > 0.0)
        .map(|(&r, &v)| (r, v))
        .unzip();
    let m = nodes.len();

    // tail window away from the concentration core and from the Dirichlet
    // boundary
    let (w_lo, w_hi) = (0.08 * r_ref, 0.35 * r_ref);
    let tail_idx: Vec<usize> = (0..m)
        .filter(|&i| nodes[i] >= w_lo && nodes[i] <= w_hi && vals[i] > 0.0)
        .collect();
    if tail_idx.len() < 8 {
        return Err(Error::domain(
            "bubble tail window too small; refine the reference grid",
        ));
    }

    // The Dirichlet truncation mixes an O(r_ref^{-(beta_+ - beta_-)})
    // multiple of the regular branch into the far field (for gamma = 0 the
    // tail is c (1/r - 1/R) rather than c/r). Fit both branches on the
    // window and strip the regular one.
    let (c_plus, c_minus) = {
        let mut spp = 0.0;
        let mut spm = 0.0;
        let mut smm = 0.0;
        let mut bp = 0.0;
        let mut bm = 0.0;
        for &i in &tail_idx {
            let xp = nodes[i].powf(-beta_plus);
            let xm = nodes[i].powf(-beta_minus);
            spp += xp * xp;
            spm += xp * xm;
            smm += xm * xm;
            bp += vals[i] * xp;
            bm += vals[i] * xm;
        }
        let det = spp * smm - spm * spm;
        if det == 0.0 {
            return Err(Error::domain("degenerate tail basis"));
        }
        ((smm * bp - spm * bm) / det, (spp * bm - spm * bp) / det)
    };
    if !(c_plus > 0.0) {
        return Err(Error::domain("bubble tail coefficient not positive"));
    }
    for (v, &r) in vals.iter_mut().zip(&nodes) {
        *v = (*v - c_minus * r.powf(-beta_minus)) / c_plus;
    }

    let (tail_exponent, _, _) = loglog_fit(
        tail_idx
            .iter()
            .filter(|&&i| vals[i] > 0.0)
            .map(|&i| (nodes[i], vals[i])),
    )?;
    let decay_ok = (tail_exponent + beta_plus).abs() <= 0.05 * beta_plus.max(1.0);
    if !decay_ok {
        return Err(Error::FitResidual {
            what: format!(
                "bubble tail decay: fitted slope {tail_exponent:.4} vs -beta_+ = {:.4}",
                -beta_plus
            ),
            residual: (tail_exponent + beta_plus).abs(),
            threshold: 0.05 * beta_plus.max(1.0),
        });
    }

    // replace the far field beyond the window by the asymptote
    let window_hi = *tail_idx.last().unwrap();
    for i in window_hi..m {
        vals[i] = nodes[i].powf(-beta_plus);
    }

    // inner coefficient for extrapolation below the innermost nodes
    let inner_hi = nodes[0] * 8.0;
    let inner_idx: Vec<usize> = (0..m).filter(|&i| nodes[i] <= inner_hi).collect();
    let mut inner_coeff = 0.0;
    for &i in &inner_idx {
        inner_coeff += vals[i] * nodes[i].powf(beta_minus);
    }
    inner_coeff /= inner_idx.len() as f64;

    if vals[..m - 1].iter().any(|&v| v <= 0.0) {
        return Err(Error::domain(
            "bubble profile has non-positive interior values",
        ));
    }

    // Euler-Lagrange constant of the tail-normalized extremal:
    // kappa = mu J^{2/p - 1}
    let p = inst.two_star_s();
    let full_vals = mirror_to_grid(&grid, &nodes, &vals);
    let profile_fn = GridFunction::new(&grid, full_vals)?;
    let f = forms(&profile_fn, &ref_inst)?;
    let kappa = mu * f.hs_integral.powf(2.0 / p - 1.0);

    let log_r: Vec<f64> = nodes.iter().map(|r| r.ln()).collect();
    let log_u: Vec<f64> = vals.iter().map(|v| v.max(f64::MIN_POSITIVE).ln()).collect();

    Ok(BubbleProfile {
        profile: profile_fn,
        log_r,
        log_u,
        window_hi,
        beta_minus,
        beta_plus,
        inner_coeff,
        kappa,
        mu,
        tail_exponent,
        beta_plus_decay_checked: decay_ok,
    })
}

/// Map positive-half values back onto the full grid (mirror in interval
/// mode; identity in radial mode).
fn mirror_to_grid(grid: &Arc<RadialGrid>, pos_nodes: &[f64], pos_vals: &[f64]) -> Vec<f64> {
    grid.nodes()
        .iter()
        .map(|&r| {
            let x = r.abs();
            match pos_nodes.binary_search_by(|a| a.partial_cmp(&x).unwrap()) {
                Ok(i) => pos_vals[i],
                Err(i) => pos_vals[i.min(pos_nodes.len() - 1)],
            }
        })
        .collect()
}

/// Least-squares fit of `ln y = slope ln x + intercept`:
/// `(slope, intercept, r_squared)`.
fn loglog_fit(points: impl Iterator<Item = (f64, f64)>) -> Result<(f64, f64, f64)> {
    let data: Vec<(f64, f64)> = points.map(|(x, y)| (x.ln(), y.ln())).collect();
    let n = data.len() as f64;
    if data.len() < 2 {
        return Err(Error::domain("log-log fit needs at least two points"));
    }
    let sx: f64 = data.iter().map(|d| d.0).sum();
    let sy: f64 = data.iter().map(|d| d.1).sum();
    let sxx: f64 = data.iter().map(|d| d.0 * d.0).sum();
    let sxy: f64 = data.iter().map(|d| d.0 * d.1).sum();
    let denom = n * sxx - sx * sx;
    if denom == 0.0 {
        return Err(Error::domain("degenerate abscissae in log-log fit"));
    }
    let slope = (n * sxy - sx * sy) / denom;
    let intercept = (sy - slope * sx) / n;
    let mean_y = sy / n;
    let mut ss_res = 0.0;
    let mut ss_tot = 0.0;
    for &(x, y) in &data {
        let fit = slope * x + intercept;
        ss_res += (y - fit) * (y - fit);
        ss_tot += (y - mean_y) * (y - mean_y);
    }
    let r2 = if ss_tot > 0.0 {
        1.0 - ss_res / ss_tot
    } else {
        1.0
    };
    Ok((slope, intercept, r2))
}

/// A concentrating test function and its components.
#[derive(Debug, Clone)]
pub struct TestFunction {
    pub eps: f64,
    /// Full profile: cutoff bubble plus the mass correction in the mass
    /// window.
    pub total: GridFunction,
    /// `eta(r) u_eps(r)`.
    pub bubble_part: GridFunction,
    /// Regular part `g = H - eta r^{-beta_+}` (mass window only).
    pub regular_part: Option<GridFunction>,
    /// Scale `eps^{(beta_+ - beta_-)/2}` applied to the regular part.
    pub mass_scale: f64,
}

/// Whether the instance sits in the mass window
/// `gamma_crit < gamma < gamma_H`, where the test function needs the
/// singular-solution data. Uses the closed-form threshold for `alpha = 2`
/// (defined for every n > 2, negative when n = 3).
pub fn needs_mass_branch(inst: &ProblemInstance) -> Result<bool> {
    if inst.alpha == 2.0 {
        let gc = 0.25 * (inst.n - 2.0) * (inst.n - 2.0) - 1.0;
        return Ok(inst.gamma > gc);
    }
    match crate::thresholds::gamma_crit(inst.n, inst.alpha)? {
        Some(gc) => Ok(inst.gamma > gc),
        None => Ok(true),
    }
}

/// Build the test function at concentration `eps`: the rescaled cutoff
/// bubble `eta(r) eps^{-(n-alpha)/2} U(r/eps)`, plus
/// `eps^{(beta_+ - beta_-)/2} g` in the mass window (where the
/// singular-solution profile must be supplied on the same grid).
pub fn test_function(
    inst: &ProblemInstance,
    bubble: &BubbleProfile,
    cutoff: &CutoffSpec,
    mass: Option<&MassProfile>,
    grid: &Arc<RadialGrid>,
    eps: f64,
) -> Result<TestFunction> {
    if !(eps > 0.0 && eps <= cutoff.delta() / 10.0) {
        return Err(Error::validation(format!(
            "eps must lie in (0, delta/10] = (0, {}], got {eps}",
            cutoff.delta() / 10.0
        )));
    }
    let scale = eps.powf(-0.5 * (inst.n - inst.alpha));
    let bubble_vals: Vec<f64> = grid
        .nodes()
        .iter()
        .map(|&r| {
            let x = r.abs();
            cutoff.eta(x) * scale * bubble.eval(x / eps)
        })
        .collect();
    let bubble_part = GridFunction::new(grid, bubble_vals)?;

    if !needs_mass_branch(inst)? {
        return Ok(TestFunction {
            eps,
            total: bubble_part.clone(),
            bubble_part,
            regular_part: None,
            mass_scale: 0.0,
        });
    }

    if inst.alpha != 2.0 {
        return Err(Error::unsupported(
            "the mass-window test function is implemented for alpha = 2 only",
        ));
    }
    let profile = mass.ok_or_else(|| {
        Error::validation(
            "instance lies in the mass window; supply the singular-solution profile",
        )
    })?;
    let gap = profile.beta_plus - profile.beta_minus;
    let mass_scale = eps.powf(0.5 * gap);
    let g_vals: Vec<f64> = grid
        .nodes()
        .iter()
        .zip(profile.singular.values())
        .map(|(&r, &h)| h - cutoff.eta(r) * r.abs().powf(-profile.beta_plus))
        .collect();
    let regular_part = GridFunction::new(grid, g_vals)?;
    let total_vals: Vec<f64> = bubble_part
        .values()
        .iter()
        .zip(regular_part.values())
        .map(|(&b, &g)| b + mass_scale * g)
        .collect();
    Ok(TestFunction {
        eps,
        total: GridFunction::new(grid, total_vals)?,
        bubble_part,
        regular_part: Some(regular_part),
        mass_scale,
    })
}

/// The energy pieces of one test function and its exact fiber maximum.
#[derive(Debug, Clone, Copy)]
pub struct EnergyBreakdown {
    pub eps: f64,
    /// `|||v|||^2 - lambda ||v||_2^2`
    pub i: f64,
    /// Hardy-Sobolev integral
    pub j: f64,
    /// perturbation integral
    pub k: f64,
    /// `I / J^{2/2*(s)}`
    pub psi_quotient: f64,
    pub sup_phi: f64,
    /// cross term `int u_eps^{2*(s)-1} eta g / |x|^s` (0 outside the mass
    /// window)
    pub theta: f64,
}

/// Location and value of the fiber maximum `sup_{t>=0} Phi(t v)`.
#[derive(Debug, Clone, Copy)]
pub struct FiberMax {
    pub t_star: f64,
    pub sup: f64,
}

/// Maximize `t^2 I/2 - t^p J/p - t^q K/q` over `t >= 0` by bracketed root
/// finding on the derivative: the positive root of
/// `I - t^{p-2} J - t^{q-2} K` is unique when `I, J > 0`, `K >= 0`.
pub fn fiber_max(i: f64, j: f64, k: f64, p: f64, q: f64) -> Result<FiberMax> {
    if !(i > 0.0) {
        return Err(Error::domain(format!(
            "fiber map needs I > 0 (I <= 0 signals lambda >= lambda_1 discretely), got {i}"
        )));
    }
    if !(j > 0.0) || k < 0.0 {
        return Err(Error::domain(format!(
            "fiber map needs J > 0 and K >= 0, got J = {j}, K = {k}"
        )));
    }
    if !(p > 2.0 && q > 2.0) {
        return Err(Error::domain("fiber exponents must exceed 2"));
    }
    let phi = |t: f64| {
        i - t.powf(p - 2.0) * j - if k > 0.0 { t.powf(q - 2.0) * k } else { 0.0 }
    };
    // K = 0 makes (I/J)^{1/(p-2)} the exact root; otherwise grow a bracket
    let mut hi = (i / j).powf(1.0 / (p - 2.0));
    for _ in 0..200 {
        if phi(hi) <= 0.0 {
            break;
        }
        hi *= 2.0;
    }
    let t_star = brent(phi, 0.0, hi, 1e-15 * hi.max(1e-300))?;
    let sup = 0.5 * t_star * t_star * i - t_star.powf(p) * j / p - t_star.powf(q) * k / q;
    Ok(FiberMax { t_star, sup })
}

/// Evaluate I, J, K for a test function and maximize the fiber map.
pub fn energy_breakdown(inst: &ProblemInstance, tf: &TestFunction) -> Result<EnergyBreakdown> {
    let f = forms(&tf.total, inst)?;
    let i = f.triple_norm_sq - inst.lambda * f.l2;
    let j = f.hs_integral;
    let k = f.pert_integral;
    let p = inst.two_star_s();
    let fm = fiber_max(i, j, k, p, inst.q)?;

    let theta = match &tf.regular_part {
        None => 0.0,
        Some(g) => cross_integral(
            tf.total.grid(),
            inst.s,
            tf.bubble_part.values(),
            g.values(),
            p - 1.0,
        ),
    };

    Ok(EnergyBreakdown {
        eps: tf.eps,
        i,
        j,
        k,
        psi_quotient: i / j.powf(2.0 / p),
        sup_phi: fm.sup,
        theta,
    })
}

/// `int a(x)_+^{pm1} b(x) |x|^{-s}` for two grid functions, by panel Gauss
/// quadrature of their linear interpolants.
fn cross_integral(grid: &Arc<RadialGrid>, s: f64, a: &[f64], b: &[f64], pm1: f64) -> f64 {
    let nodes: Vec<f64> = grid.nodes().to_vec();
    let bvals = b.to_vec();
    let interp_b = move |r: f64| -> f64 {
        match nodes.binary_search_by(|x| x.partial_cmp(&r).unwrap()) {
            Ok(i) => bvals[i],
            Err(0) => bvals[0],
            Err(i) if i >= bvals.len() => *bvals.last().unwrap(),
            Err(i) => {
                let t = (r - nodes[i - 1]) / (nodes[i] - nodes[i - 1]);
                bvals[i - 1] * (1.0 - t) + bvals[i] * t
            }
        }
    };
    let f = move |r: f64, u: f64| u.max(0.0).powf(pm1) * interp_b(r);
    quadform::integrate::weighted_integral(grid, s, a, &f, None)
}

/// Result of a log-log slope fit of the deficit series.
#[derive(Debug, Clone, Copy)]
pub struct SlopeFit {
    pub exponent: f64,
    pub prefactor: f64,
    pub r_squared: f64,
    pub eps_range: (f64, f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FitVerdict {
    Match,
    Mismatch,
}

/// Full record of one expansion verification run.
#[derive(Debug, Clone)]
pub struct ExpansionReport {
    pub fit: SlopeFit,
    pub predicted_exponent: f64,
    pub verdict: FitVerdict,
    pub mu_discrete: f64,
    pub upsilon_discrete: f64,
    pub series: Vec<EnergyBreakdown>,
    pub deficits: Vec<f64>,
}

/// Default epsilon series: `count` geometric points from `delta/10` down
/// to `delta/80`.
pub fn default_eps_series(delta: f64, count: usize) -> Vec<f64> {
    geometric_series(delta / 80.0, delta / 10.0, count)
}

pub fn geometric_series(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    let ratio = (lo / hi).powf(1.0 / (count.max(2) as f64 - 1.0));
    (0..count).map(|k| hi * ratio.powi(k as i32)).collect()
}

/// PS-threshold prefactor `(alpha - s) / (2 (n - s))`.
pub fn ps_prefactor(inst: &ProblemInstance) -> f64 {
    (inst.alpha - inst.s) / (2.0 * (inst.n - inst.s))
}

/// Discrete threshold `(alpha-s)/(2(n-s)) mu^{(n-s)/(alpha-s)}`.
pub fn upsilon_from_mu(inst: &ProblemInstance, mu: f64) -> f64 {
    ps_prefactor(inst) * mu.powf((inst.n - inst.s) / (inst.alpha - inst.s))
}

/// Exponent of the dominant small-eps deficit predicted by the energy
/// expansions, given which correction terms are active.
pub fn predicted_deficit_exponent(inst: &ProblemInstance) -> Result<f64> {
    let pert = inst.n - inst.q * 0.5 * (inst.n - inst.alpha);
    if needs_mass_branch(inst)? {
        let (bm, bp) = beta_pm(inst.n, inst.alpha, inst.gamma)?;
        let gap = bp - bm;
        if inst.h0 > 0.0 {
            Ok(pert.min(gap))
        } else {
            Ok(gap)
        }
    } else if inst.h0 > 0.0 {
        Ok(pert)
    } else if inst.lambda > 0.0 {
        // lambda-only check: the linear term carries the eps^alpha rate
        Ok(inst.alpha)
    } else {
        Err(Error::domain(
            "no leading correction to fit: h(0) = 0 and lambda <= 0 outside the mass window",
        ))
    }
}

/// Run the deficit fit: build the bubble (and the singular solution in the
/// mass window), evaluate `sup_t Phi(t v_eps)` over the series, and compare
/// the deficit `Upsilon_discrete - sup_phi` against the predicted power.
///
/// The discrete threshold uses `rayleigh_min_mu` on the same grid, so the
/// discretization bias cancels in the deficit.
pub fn expansion_fit(
    inst: &ProblemInstance,
    grid: &Arc<RadialGrid>,
    eps_series: &[f64],
) -> Result<ExpansionReport> {
    if eps_series.len() < 5 {
        return Err(Error::validation(format!(
            "need at least 5 eps samples, got {}",
            eps_series.len()
        )));
    }
    let (lo, hi) = eps_series
        .iter()
        .fold((f64::INFINITY, 0.0f64), |(l, h), &e| (l.min(e), h.max(e)));
    if hi / lo < 8.0 {
        return Err(Error::validation(format!(
            "eps samples must span about a decade (ratio >= 8), got {:.3}",
            hi / lo
        )));
    }

    let cutoff = CutoffSpec::default_for(inst.domain.extent());
    let bubble = make_bubble(inst)?;
    let mass = if needs_mass_branch(inst)? {
        Some(quadform::mass_profile(inst, grid)?)
    } else {
        None
    };

    let (mu_d, _) = rayleigh_min_mu(inst, grid)?;
    let upsilon = upsilon_from_mu(inst, mu_d);

    let mut series = Vec::with_capacity(eps_series.len());
    let mut deficits = Vec::with_capacity(eps_series.len());
    let mut offending = Vec::new();
    for &eps in eps_series {
        let tf = test_function(inst, &bubble, &cutoff, mass.as_ref(), grid, eps)?;
        let eb = energy_breakdown(inst, &tf)?;
        let deficit = upsilon - eb.sup_phi;
        if !(deficit > 0.0) {
            offending.push(eps);
        }
        series.push(eb);
        deficits.push(deficit);
    }
    if !offending.is_empty() {
        return Err(Error::NegativeDeficit(offending));
    }

    let (slope, intercept, r2) =
        loglog_fit(eps_series.iter().zip(&deficits).map(|(&e, &d)| (e, d)))?;
    let predicted = predicted_deficit_exponent(inst)?;
    let verdict = if (slope - predicted).abs() <= 0.15 * predicted && r2 >= 0.98 {
        FitVerdict::Match
    } else {
        FitVerdict::Mismatch
    };

    Ok(ExpansionReport {
        fit: SlopeFit {
            exponent: slope,
            prefactor: intercept.exp(),
            r_squared: r2,
            eps_range: (lo, hi),
        },
        predicted_exponent: predicted,
        verdict,
        mu_discrete: mu_d,
        upsilon_discrete: upsilon,
        series,
        deficits,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadform::mass_profile;

    #[test]
    fn cutoff_shape() {
        let c = CutoffSpec::new(0.2, 1.0).unwrap();
        assert_eq!(c.eta(0.0), 1.0);
        assert_eq!(c.eta(0.2), 1.0);
        assert_eq!(c.eta(0.4), 0.0);
        assert_eq!(c.eta(0.9), 0.0);
        let mid = c.eta(0.3);
        assert!(mid > 0.0 && mid < 1.0);
        // C^1: one-sided difference quotients vanish at the junctions
        let h = 1e-7;
        assert!((c.eta(0.2 + h) - 1.0).abs() / h < 1e-4);
        assert!(c.eta(0.4 - h).abs() / h < 1e-4);
        assert!(CutoffSpec::new(0.25, 1.0).is_err());
    }

    #[test]
    fn fiber_max_closed_form_when_k_zero() {
        use rand::rngs::StdRng;
        use rand::{Rng, SeedableRng};
        let mut rng = StdRng::seed_from_u64(17);
        for _ in 0..100 {
            let i: f64 = rng.random_range(0.1..50.0);
            let j: f64 = rng.random_range(0.1..50.0);
            let p: f64 = rng.random_range(2.2..8.0);
            let fm = fiber_max(i, j, 0.0, p, 3.0).unwrap();
            // analytic: (1/2 - 1/p) (I/J^{2/p})^{p/(p-2)}
            let psi = i / j.powf(2.0 / p);
            let want = (0.5 - 1.0 / p) * psi.powf(p / (p - 2.0));
            assert!(
                (fm.sup - want).abs() <= 1e-10 * want,
                "I={i} J={j} p={p}: {} vs {want}",
                fm.sup
            );
        }
    }

    #[test]
    fn fiber_max_hand_value() {
        // I=2, J=1, K=0, p=6: t* = 2^{1/4}, sup = 2^{3/2}/3
        let fm = fiber_max(2.0, 1.0, 0.0, 6.0, 3.0).unwrap();
        assert!((fm.t_star - 2f64.powf(0.25)).abs() < 1e-12);
        assert!((fm.sup - 2f64.powf(1.5) / 3.0).abs() < 1e-12);
    }

    #[test]
    fn fiber_max_k_decreases_sup() {
        let base = fiber_max(2.0, 1.0, 0.0, 6.0, 3.0).unwrap();
        let with_k = fiber_max(2.0, 1.0, 0.5, 6.0, 3.0).unwrap();
        assert!(with_k.sup < base.sup);
        assert!(fiber_max(-1.0, 1.0, 0.0, 6.0, 3.0).is_err());
    }

    fn n3_instance(gamma: f64, lambda: f64, q: f64, h0: f64) -> ProblemInstance {
        ProblemInstance::new(3.0, 2.0, 0.0, gamma, lambda, q, h0).unwrap()
    }

    #[test]
    fn bubble_matches_aubin_talenti_for_gamma_zero() {
        // gamma = 0, s = 0, n = 3: extremal is A (1 + c r^2)^{-1/2};
        // 1/U^2 is linear in r^2 with unit slope after tail normalization
        let inst = n3_instance(0.0, 0.0, 3.0, 1.0);
        let bubble = make_bubble(&inst).unwrap();
        assert!(bubble.beta_plus_decay_checked);
        assert!((bubble.tail_exponent + 1.0).abs() < 0.05);

        let peak = bubble.eval(1e-6);
        // fit c from 1/U^2 = 1/c + r^2 on the half-maximum region
        let mut num = 0.0;
        let mut cnt = 0.0;
        let mut r = 1e-3;
        while r < 60.0 {
            let u = bubble.eval(r);
            if u > 0.3 * peak && u < 0.9 * peak {
                num += 1.0 / (u * u) - r * r;
                cnt += 1.0;
            }
            r *= 1.15;
        }
        let inv_c = num / cnt;
        assert!(inv_c > 0.0, "AT intercept should be positive");
        let c = 1.0 / inv_c;
        // L-infinity comparison over the core region
        let mut max_rel: f64 = 0.0;
        let mut r = 1e-4;
        while r < 3.0 / c.sqrt() {
            let at = c.sqrt() / (1.0 + c * r * r).sqrt();
            let rel = (bubble.eval(r) - at).abs() / peak;
            max_rel = max_rel.max(rel);
            r *= 1.1;
        }
        assert!(max_rel <= 0.02, "AT shape deviation {max_rel}");
    }

    #[test]
    fn bubble_bounded_at_origin_when_gamma_zero() {
        let inst = n3_instance(0.0, 0.0, 3.0, 1.0);
        let bubble = make_bubble(&inst).unwrap();
        assert_eq!(bubble.beta_minus(), 0.0);
        let a = bubble.eval(1e-9);
        let b = bubble.eval(1e-7);
        assert!((a - b).abs() <= 1e-6 * a.abs(), "not flat at origin: {a} vs {b}");
    }

    #[test]
    fn test_function_scaling_identities() {
        let inst = n3_instance(0.0, 0.0, 3.0, 1.0);
        let grid = Arc::new(
            build_grid(GridMode::RadialAlpha2, 3.0, 1.0, 400, 2.0).unwrap(),
        );
        let bubble = make_bubble(&inst).unwrap();
        let cutoff = CutoffSpec::default_for(1.0);
        let mass = mass_profile(&inst, &grid).unwrap();

        let eps_list = [0.02, 0.01, 0.005, 0.0025];
        let mut js = Vec::new();
        let mut maxima = Vec::new();
        for &eps in &eps_list {
            let tf = test_function(&inst, &bubble, &cutoff, Some(&mass), &grid, eps).unwrap();
            let eb = energy_breakdown(&inst, &tf).unwrap();
            js.push(eb.j);
            maxima.push(tf.bubble_part.max_abs());
        }
        // J is scale-invariant up to tail terms
        for w in js.windows(2) {
            assert!((w[1] - w[0]).abs() <= 0.05 * w[0], "J drift: {js:?}");
        }
        // peak value grows like eps^{-(n-alpha)/2} = eps^{-1/2}
        for k in 0..eps_list.len() - 1 {
            let ratio = maxima[k + 1] / maxima[k];
            let want = (eps_list[k] / eps_list[k + 1]).powf(0.5);
            assert!(
                (ratio - want).abs() <= 0.1 * want,
                "peak growth {ratio} vs {want}"
            );
        }
    }

    #[test]
    fn critical_branch_adds_scaled_regular_part() {
        let inst = n3_instance(0.21, 0.5, 3.0, 1.0);
        let grid = Arc::new(
            build_grid(GridMode::RadialAlpha2, 3.0, 1.0, 400, 2.0).unwrap(),
        );
        let bubble = make_bubble(&inst).unwrap();
        let cutoff = CutoffSpec::default_for(1.0);
        let mass = mass_profile(&inst, &grid).unwrap();
        let eps = 0.01;
        let tf = test_function(&inst, &bubble, &cutoff, Some(&mass), &grid, eps).unwrap();
        let g = tf.regular_part.as_ref().unwrap();
        let want_scale = eps.powf(0.5 * 0.4);
        assert!((tf.mass_scale - want_scale).abs() < 1e-14);
        for ((t, b), gval) in tf
            .total
            .values()
            .iter()
            .zip(tf.bubble_part.values())
            .zip(g.values())
        {
            assert!((t - (b + want_scale * gval)).abs() <= 1e-12 * t.abs().max(1.0));
        }
        // missing mass data errors out
        assert!(test_function(&inst, &bubble, &cutoff, None, &grid, eps).is_err());
    }

    #[test]
    fn theta_vanishes_along_the_series() {
        let inst = n3_instance(0.21, 0.5, 3.0, 1.0);
        let grid = Arc::new(
            build_grid(GridMode::RadialAlpha2, 3.0, 1.0, 400, 2.0).unwrap(),
        );
        let bubble = make_bubble(&inst).unwrap();
        let cutoff = CutoffSpec::default_for(1.0);
        let mass = mass_profile(&inst, &grid).unwrap();
        let mut thetas = Vec::new();
        for &eps in &[0.02, 0.01, 0.005, 0.0025] {
            let tf = test_function(&inst, &bubble, &cutoff, Some(&mass), &grid, eps).unwrap();
            let eb = energy_breakdown(&inst, &tf).unwrap();
            thetas.push(eb.theta.abs());
        }
        assert!(
            thetas.last().unwrap() < thetas.first().unwrap(),
            "theta should decay along the series: {thetas:?}"
        );
    }

    #[test]
    fn eps_out_of_range_rejected() {
        let inst = n3_instance(0.0, 0.0, 3.0, 1.0);
        let grid = Arc::new(
            build_grid(GridMode::RadialAlpha2, 3.0, 1.0, 64, 1.0).unwrap(),
        );
        let bubble = make_bubble(&inst).unwrap();
        let cutoff = CutoffSpec::default_for(1.0);
        let mass = mass_profile(&inst, &grid).unwrap();
        assert!(test_function(&inst, &bubble, &cutoff, Some(&mass), &grid, 0.5).is_err());
        assert!(test_function(&inst, &bubble, &cutoff, Some(&mass), &grid, 0.0).is_err());
    }

    #[test]
    fn eps_series_preconditions() {
        let inst = n3_instance(0.0, 0.0, 3.0, 1.0);
        let grid = Arc::new(
            build_grid(GridMode::RadialAlpha2, 3.0, 1.0, 64, 1.0).unwrap(),
        );
        assert!(expansion_fit(&inst, &grid, &[0.01, 0.009, 0.008]).is_err());
        assert!(expansion_fit(
            &inst,
            &grid,
            &[0.02, 0.018, 0.016, 0.014, 0.012, 0.011]
        )
        .is_err());
    }

    #[test]
    fn default_series_spans_configured_range() {
        let s = default_eps_series(0.2, 8);
        assert_eq!(s.len(), 8);
        assert!((s[0] - 0.02).abs() < 1e-15);
        assert!((s[7] - 0.0025).abs() < 1e-15);
        assert!(s.windows(2).all(|w| w[1] < w[0]));
    }
}
