//! Discrete quadratic and nonlinear forms: graded grids, the
//! seminorm/Hardy/Hardy-Sobolev integrals, Rayleigh-quotient minimizers and
//! the interior-mass estimator.

pub(crate) mod integrate;
mod linop;
mod mass;
mod rayleigh;

pub use mass::{mass_estimate, mass_profile, MassProfile};
pub use rayleigh::{
    first_eigenvalue, mu_quotient, mu_residual, rayleigh_min_mu, rayleigh_min_mu_from,
};

pub(crate) use integrate::{pow_integral, weighted_integral, weighted_mass_matrix};
pub(crate) use linop::{solve_tridiag_symmetric, Factor, SymOp};
pub(crate) use rayleigh::{smallest_eigenvalue, triple_gram};

use crate::error::{Error, Result};
use crate::specfun::log_gamma;
use crate::thresholds::ProblemInstance;
use std::sync::Arc;

/// Discretization mode.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GridMode {
    /// Radial profiles on a ball, local operator (alpha = 2).
    RadialAlpha2,
    /// Symmetric interval (-R, R) for one-dimensional fractional runs.
    Interval1D,
}

/// Discretized radial or one-dimensional domain with quadrature weights.
///
/// Radial mode: nodes on (0, R] clustered toward the origin by the power
/// law `r_i = R (i/m)^grading`; weights carry the surface-measure factor so
/// that summing the unit function gives the ball volume exactly.
/// Interval mode: symmetric nodes on [-R, R] excluding 0, plain trapezoid
/// weights summing to the interval length.
#[derive(Debug, Clone)]
pub struct RadialGrid {
    mode: GridMode,
    dim: f64,
    extent: f64,
    grading: f64,
    nodes: Vec<f64>,
    weights: Vec<f64>,
    // node cells (midpoint split); singular weights integrate the weight
    // function exactly over these
    cell_lo: Vec<f64>,
    cell_hi: Vec<f64>,
}

/// Surface area of the unit sphere in dimension `n`.
pub fn sphere_area(n: f64) -> f64 {
    let half = 0.5 * n;
    (half * std::f64::consts::PI.ln() + std::f64::consts::LN_2
        - log_gamma(half).expect("n > 0"))
    .exp()
}

/// Build a grid. `dim` is the spatial dimension (ignored and set to 1 in
/// interval mode); `m` the node count (per spec at least 16, even in
/// interval mode); `grading >= 1` the power-law clustering exponent.
pub fn build_grid(mode: GridMode, dim: f64, extent: f64, m: usize, grading: f64) -> Result<RadialGrid> {
    if !(extent > 0.0 && extent.is_finite()) {
        return Err(Error::validation("grid extent must be positive"));
    }
    if m < 16 {
        return Err(Error::validation(format!("need at least 16 nodes, got {m}")));
    }
    if !(grading >= 1.0 && grading.is_finite()) {
        return Err(Error::validation(format!("grading must be >= 1, got {grading}")));
    }
    let nodes = match mode {
        GridMode::RadialAlpha2 => {
            if !(dim > 1.0) {
                return Err(Error::validation(format!(
                    "radial mode needs dimension > 1, got {dim}"
                )));
            }
            let mut nodes = Vec::with_capacity(m);
            for i in 1..=m {
                nodes.push(extent * ((i as f64) / (m as f64)).powf(grading));
            }
            nodes
        }
        GridMode::Interval1D => {
            if m % 2 != 0 {
                return Err(Error::validation(
                    "interval mode needs an even node count (symmetric grid)",
                ));
            }
            let half = m / 2;
            let mut pos = Vec::with_capacity(half);
            for i in 1..=half {
                pos.push(extent * ((i as f64) / (half as f64)).powf(grading));
            }
            let mut nodes = Vec::with_capacity(m);
            for &x in pos.iter().rev() {
                nodes.push(-x);
            }
            nodes.extend_from_slice(&pos);
            nodes
        }
    };

    // node cells split at panel midpoints; in radial mode the first cell
    // reaches down to the origin, so the weights sum to |Omega| exactly
    let inner = match mode {
        GridMode::RadialAlpha2 => 0.0,
        GridMode::Interval1D => -extent,
    };
    let mut cell_lo = Vec::with_capacity(m);
    let mut cell_hi = Vec::with_capacity(m);
    for i in 0..m {
        cell_lo.push(if i == 0 {
            inner
        } else {
            0.5 * (nodes[i - 1] + nodes[i])
        });
        cell_hi.push(if i == m - 1 {
            extent
        } else {
            0.5 * (nodes[i] + nodes[i + 1])
        });
    }

    let mut grid = RadialGrid {
        mode,
        dim: if mode == GridMode::Interval1D { 1.0 } else { dim },
        extent,
        grading,
        nodes,
        weights: Vec::new(),
        cell_lo,
        cell_hi,
    };
    grid.weights = grid.singular_weights(0.0);
    Ok(grid)
}

impl RadialGrid {
    pub fn mode(&self) -> GridMode {
        self.mode
    }

    pub fn dim(&self) -> f64 {
        self.dim
    }

    pub fn extent(&self) -> f64 {
        self.extent
    }

    pub fn grading(&self) -> f64 {
        self.grading
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Per-node quadrature weights for integrals against `|x|^{-beta}`:
    /// the weight function is integrated exactly over each node cell, so
    /// that the discrete Hardy and Hardy-Sobolev terms are never
    /// overweighted near the origin. Requires `beta < n`.
    pub fn singular_weights(&self, beta: f64) -> Vec<f64> {
        let n = self.dim;
        debug_assert!(beta < n);
        let e = n - beta;
        match self.mode {
            GridMode::RadialAlpha2 => {
                let omega = sphere_area(n);
                self.cell_lo
                    .iter()
                    .zip(&self.cell_hi)
                    .map(|(&a, &b)| omega * (b.powf(e) - a.powf(e)) / e)
                    .collect()
            }
            GridMode::Interval1D => {
                // integrate |x|^{-beta} over the cell; no cell straddles 0
                let anti = |x: f64| x.abs().powf(e) / e * x.signum();
                self.cell_lo
                    .iter()
                    .zip(&self.cell_hi)
                    .map(|(&a, &b)| anti(b) - anti(a))
                    .collect()
            }
        }
    }

    /// Indices at which Dirichlet zero is enforced.
    pub(crate) fn boundary_indices(&self) -> Vec<usize> {
        match self.mode {
            GridMode::RadialAlpha2 => vec![self.nodes.len() - 1],
            GridMode::Interval1D => vec![0, self.nodes.len() - 1],
        }
    }

    fn check_instance(&self, inst: &ProblemInstance) -> Result<()> {
        match self.mode {
            GridMode::RadialAlpha2 => {
                if inst.alpha != 2.0 {
                    return Err(Error::validation(format!(
                        "radial grid requires alpha = 2, instance has alpha = {}",
                        inst.alpha
                    )));
                }
                if inst.n != self.dim {
                    return Err(Error::validation(format!(
                        "grid dimension {} does not match instance n = {}",
                        self.dim, inst.n
                    )));
                }
            }
            GridMode::Interval1D => {
                if inst.n != 1.0 {
                    return Err(Error::validation(format!(
                        "interval grid requires n = 1, instance has n = {}",
                        inst.n
                    )));
                }
            }
        }
        if (inst.domain.extent() - self.extent).abs() > 1e-12 * self.extent {
            return Err(Error::validation(format!(
                "grid extent {} does not match instance domain extent {}",
                self.extent,
                inst.domain.extent()
            )));
        }
        Ok(())
    }
}

/// A function sampled on a grid, with Dirichlet zero at the outer boundary.
#[derive(Debug, Clone)]
pub struct GridFunction {
    grid: Arc<RadialGrid>,
    values: Vec<f64>,
}

impl GridFunction {
    /// Wrap node values; the boundary nodes are forced to zero.
    pub fn new(grid: &Arc<RadialGrid>, mut values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::validation(format!(
                "value count {} does not match grid size {}",
                values.len(),
                grid.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::validation("grid function values must be finite"));
        }
        for i in grid.boundary_indices() {
            values[i] = 0.0;
        }
        Ok(GridFunction {
            grid: Arc::clone(grid),
            values,
        })
    }

    /// Sample a function of the node coordinate.
    pub fn from_fn(grid: &Arc<RadialGrid>, f: impl Fn(f64) -> f64) -> Result<Self> {
        let values = grid.nodes().iter().map(|&r| f(r)).collect();
        Self::new(grid, values)
    }

    pub fn zero(grid: &Arc<RadialGrid>) -> Self {
        GridFunction {
            grid: Arc::clone(grid),
            values: vec![0.0; grid.len()],
        }
    }

    pub fn grid(&self) -> &Arc<RadialGrid> {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub(crate) fn values_mut(&mut self) -> &mut Vec<f64> {
        &mut self.values
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0f64, |a, &v| a.max(v.abs()))
    }

    pub fn min_value(&self) -> f64 {
        self.values.iter().fold(f64::INFINITY, |a, &v| a.min(v))
    }

    pub fn scaled(&self, c: f64) -> Self {
        GridFunction {
            grid: Arc::clone(&self.grid),
            values: self.values.iter().map(|v| c * v).collect(),
        }
    }
}

/// The discrete integrals entering the functional.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FormValues {
    /// Discrete `H_0^{alpha/2}` seminorm squared.
    pub seminorm_sq: f64,
    /// `int u^2 / |x|^alpha`.
    pub hardy: f64,
    /// `int u^2`.
    pub l2: f64,
    /// `int u_+^{2*(s)} / |x|^s`.
    pub hs_integral: f64,
    /// `int h u_+^q`.
    pub pert_integral: f64,
    /// `seminorm_sq - gamma * hardy`.
    pub triple_norm_sq: f64,
}

/// Evaluate all forms with the constant weight `h == h0`.
pub fn forms(u: &GridFunction, inst: &ProblemInstance) -> Result<FormValues> {
    forms_with_h(u, inst, |_| inst.h0)
}

/// Evaluate all forms with a radial perturbation-weight profile.
pub fn forms_with_h(
    u: &GridFunction,
    inst: &ProblemInstance,
    h_at: impl Fn(f64) -> f64,
) -> Result<FormValues> {
    let grid = u.grid();
    grid.check_instance(inst)?;

    let seminorm_sq = match grid.mode() {
        GridMode::RadialAlpha2 => radial_seminorm_sq(grid, u.values()),
        GridMode::Interval1D => gagliardo_seminorm_sq(grid, u.values(), inst.alpha)?,
    };

    // all integrals are taken of the piecewise-linear interpolant, so the
    // discrete forms are continuum forms of a genuine Sobolev function and
    // the Hardy inequality survives discretization
    let vals = u.values();
    let hardy = weighted_mass_matrix(grid, inst.alpha).quad(vals);
    let l2 = weighted_mass_matrix(grid, 0.0).quad(vals);
    let hs = pow_integral(grid, inst.s, inst.two_star_s(), vals, None);
    let q = inst.q;
    let pert_f = move |r: f64, v: f64| h_at(r) * v.max(0.0).powf(q);
    let pert = weighted_integral(grid, 0.0, vals, &pert_f, None);

    Ok(FormValues {
        seminorm_sq,
        hardy,
        l2,
        hs_integral: hs,
        pert_integral: pert,
        triple_norm_sq: seminorm_sq - inst.gamma * hardy,
    })
}

/// Local radial Dirichlet energy: per-panel slopes against the exact panel
/// integrals of `omega r^(n-1)`. The innermost panel `[0, r_1]` carries no
/// stiffness (natural condition at the inner cutoff).
pub(crate) fn radial_seminorm_sq(grid: &RadialGrid, values: &[f64]) -> f64 {
    let nodes = grid.nodes();
    let omega = sphere_area(grid.dim());
    let n = grid.dim();
    let mut acc = 0.0;
    for i in 0..nodes.len() - 1 {
        let h = nodes[i + 1] - nodes[i];
        let slope = (values[i + 1] - values[i]) / h;
        acc += slope * slope * omega * (nodes[i + 1].powf(n) - nodes[i].powf(n)) / n;
    }
    acc
}

/// Normalization constant `C_{n,alpha}` of the Gagliardo seminorm,
/// `2^alpha G((n+alpha)/2) / (pi^{n/2} |G(-alpha/2)|)`, for `alpha` in (0, 2).
pub fn gagliardo_constant(n: f64, alpha: f64) -> Result<f64> {
    if !(alpha > 0.0 && alpha < 2.0) {
        return Err(Error::domain(format!(
            "gagliardo constant needs alpha in (0, 2), got {alpha}"
        )));
    }
    // |G(-alpha/2)| = 2 G(1 - alpha/2) / alpha
    let ln = (alpha - 1.0) * std::f64::consts::LN_2 + alpha.ln()
        + log_gamma(0.5 * (n + alpha))?
        - 0.5 * n * std::f64::consts::PI.ln()
        - log_gamma(1.0 - 0.5 * alpha)?;
    Ok(ln.exp())
}

/// One-dimensional fractional seminorm
/// `(C_{1,alpha}/2) iint (u(x)-u(y))^2 / |x-y|^{1+alpha} dx dy`
/// over the whole line with `u` extended by zero outside the interval.
///
/// Panels on the diagonal use the exact closed form for the local linear
/// slope; panels sharing a node use graded sub-quadrature toward the common
/// corner; disjoint pairs use 3x3 Gauss-Legendre; the exterior contribution
/// is integrated against the closed-form tail kernel.
///
/// `alpha` may be anything in (0, 2) here; instance-level validation
/// (`n > alpha`) happens in [`forms`].
pub fn gagliardo_seminorm_sq(grid: &RadialGrid, values: &[f64], alpha: f64) -> Result<f64> {
    if grid.mode() != GridMode::Interval1D {
        return Err(Error::validation(
            "gagliardo seminorm is defined on interval grids",
        ));
    }
    if !(alpha > 0.0 && alpha < 2.0) {
        return Err(Error::domain(format!(
            "gagliardo seminorm needs alpha in (0, 2), got {alpha}"
        )));
    }
    if values.len() != grid.len() {
        return Err(Error::validation("value count does not match grid"));
    }
    let c = gagliardo_constant(1.0, alpha)?;
    let interior = gagliardo_interior(grid.nodes(), values, alpha);
    let exterior = gagliardo_exterior(grid.nodes(), values, alpha, grid.extent());
    Ok(0.5 * c * (interior + 2.0 * exterior))
}

// 3-point Gauss-Legendre nodes/weights on [0, 1].
const GAUSS3_X: [f64; 3] = [0.112_701_665_379_258_3, 0.5, 0.887_298_334_620_741_7];
const GAUSS3_W: [f64; 3] = [
    0.277_777_777_777_777_8,
    0.444_444_444_444_444_4,
    0.277_777_777_777_777_8,
];
// 4-point Gauss-Legendre nodes/weights on [0, 1].
const GAUSS4_X: [f64; 4] = [
    0.069_431_844_202_973_71,
    0.330_009_478_207_571_9,
    0.669_990_521_792_428_1,
    0.930_568_155_797_026_3,
];
const GAUSS4_W: [f64; 4] = [
    0.173_927_422_568_726_93,
    0.326_072_577_431_273_07,
    0.326_072_577_431_273_07,
    0.173_927_422_568_726_93,
];

fn gagliardo_interior(nodes: &[f64], values: &[f64], alpha: f64) -> f64 {
    let np = nodes.len() - 1; // panel count
    let mut acc = 0.0;
    for p in 0..np {
        let (xa, xb) = (nodes[p], nodes[p + 1]);
        let hp = xb - xa;
        let sp = (values[p + 1] - values[p]) / hp;

        // diagonal block: integrand is slope^2 |x-y|^(1-alpha)
        acc += 2.0 * sp * sp * hp.powf(3.0 - alpha) / ((2.0 - alpha) * (3.0 - alpha));

        for q in p + 1..np {
            let (ya, yb) = (nodes[q], nodes[q + 1]);
            let hq = yb - ya;
            let sq = (values[q + 1] - values[q]) / hq;
            if q == p + 1 {
                // shared corner at xb == ya: in corner coordinates
                // xi = xb - x, zeta = y - ya the integrand is
                // (sp xi + sq zeta)^2 (xi + zeta)^(-1-alpha), continuous but
                // steep at the corner; quadratically graded midpoint cells.
                const K: usize = 16;
                let sub = |h: f64, i: usize| {
                    let a = h * ((i as f64) / K as f64).powi(2);
                    let b = h * (((i + 1) as f64) / K as f64).powi(2);
                    (0.5 * (a + b), b - a)
                };
                let mut block = 0.0;
                for i in 0..K {
                    let (xi, dxi) = sub(hp, i);
                    for j in 0..K {
                        let (zeta, dzeta) = sub(hq, j);
                        let d = sp * xi + sq * zeta;
                        block += d * d * (xi + zeta).powf(-1.0 - alpha) * dxi * dzeta;
                    }
                }
                acc += 2.0 * block;
            } else {
                // disjoint panels: smooth integrand, tensor Gauss
                let mut block = 0.0;
                for (gi, &gx) in GAUSS3_X.iter().enumerate() {
                    let x = xa + hp * gx;
                    let ux = values[p] + sp * (x - xa);
                    for (gj, &gy) in GAUSS3_X.iter().enumerate() {
                        let y = ya + hq * gy;
                        let uy = values[q] + sq * (y - ya);
                        let d = ux - uy;
                        block += GAUSS3_W[gi]
                            * GAUSS3_W[gj]
                            * d
                            * d
                            * (y - x).abs().powf(-1.0 - alpha);
                    }
                }
                acc += 2.0 * block * hp * hq;
            }
        }
    }
    acc
}

/// `int_Omega u(x)^2 [ (R-x)^(-alpha) + (R+x)^(-alpha) ] / alpha dx`:
/// the interaction of `u` with its zero extension outside (-R, R).
fn gagliardo_exterior(nodes: &[f64], values: &[f64], alpha: f64, extent: f64) -> f64 {
    let np = nodes.len() - 1;
    let mut acc = 0.0;
    for p in 0..np {
        let (xa, xb) = (nodes[p], nodes[p + 1]);
        let hp = xb - xa;
        let sp = (values[p + 1] - values[p]) / hp;
        let right_boundary = p == np - 1;
        let left_boundary = p == 0;

        // (R - x)^(-alpha) factor; on the right boundary panel u = s (R - x)
        // exactly, giving a closed form
        if right_boundary {
            acc += sp * sp * hp.powf(3.0 - alpha) / ((3.0 - alpha) * alpha);
        } else {
            let mut block = 0.0;
            for (gi, &gx) in GAUSS4_X.iter().enumerate() {
                let x = xa + hp * gx;
                let ux = values[p] + sp * (x - xa);
                block += GAUSS4_W[gi] * ux * ux * (extent - x).powf(-alpha);
            }
            acc += block * hp / alpha;
        }

        // (R + x)^(-alpha) factor, mirrored
        if left_boundary {
            acc += sp * sp * hp.powf(3.0 - alpha) / ((3.0 - alpha) * alpha);
        } else {
            let mut block = 0.0;
            for (gi, &gx) in GAUSS4_X.iter().enumerate() {
                let x = xa + hp * gx;
                let ux = values[p] + sp * (x - xa);
                block += GAUSS4_W[gi] * ux * ux * (extent + x).powf(-alpha);
            }
            acc += block * hp / alpha;
        }
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::thresholds::DomainSpec;

    fn ball_instance(n: f64, gamma: f64) -> ProblemInstance {
        ProblemInstance::new(n, 2.0, 0.0, gamma, 0.0, 3.0, 1.0).unwrap()
    }

    #[test]
    fn grid_weights_sum_to_volume() {
        let g = build_grid(GridMode::RadialAlpha2, 3.0, 1.0, 100, 1.0).unwrap();
        let vol: f64 = g.weights().iter().sum();
        let want = 4.0 * std::f64::consts::PI / 3.0;
        assert!((vol - want).abs() < 1e-12 * want);

        let g = build_grid(GridMode::RadialAlpha2, 5.0, 2.5, 400, 2.0).unwrap();
        let vol: f64 = g.weights().iter().sum();
        let want = sphere_area(5.0) * 2.5f64.powi(5) / 5.0;
        assert!((vol - want).abs() < 1e-10 * want);

        let g = build_grid(GridMode::Interval1D, 1.0, 1.0, 200, 1.0).unwrap();
        let vol: f64 = g.weights().iter().sum();
        assert!((vol - 2.0).abs() < 1e-12);
    }

    #[test]
    fn graded_grid_first_node() {
        let g = build_grid(GridMode::RadialAlpha2, 3.0, 1.0, 400, 2.0).unwrap();
        assert!((g.nodes()[0] - 1.0 / 160_000.0).abs() < 1e-18);
        assert!(g.nodes()[0] > 0.0);
        assert!(g.nodes().windows(2).all(|w| w[1] > w[0]));
        assert_eq!(*g.nodes().last().unwrap(), 1.0);
    }

    #[test]
    fn interval_grid_symmetric_and_zero_free() {
        let g = build_grid(GridMode::Interval1D, 1.0, 1.0, 200, 1.0).unwrap();
        assert_eq!(g.len(), 200);
        assert!(g.nodes().iter().all(|&x| x != 0.0));
        for i in 0..g.len() {
            let mirrored = -g.nodes()[g.len() - 1 - i];
            assert!((g.nodes()[i] - mirrored).abs() < 1e-15);
        }
    }

    #[test]
    fn grid_validation() {
        assert!(build_grid(GridMode::RadialAlpha2, 3.0, 1.0, 8, 1.0).is_err());
        assert!(build_grid(GridMode::RadialAlpha2, 3.0, -1.0, 100, 1.0).is_err());
        assert!(build_grid(GridMode::RadialAlpha2, 3.0, 1.0, 100, 0.5).is_err());
        assert!(build_grid(GridMode::Interval1D, 1.0, 1.0, 101, 1.0).is_err());
    }

    #[test]
    fn boundary_zero_enforced() {
        let grid = Arc::new(build_grid(GridMode::RadialAlpha2, 3.0, 1.0, 50, 1.0).unwrap());
        let u = GridFunction::from_fn(&grid, |_| 1.0).unwrap();
        assert_eq!(*u.values().last().unwrap(), 0.0);

        let grid = Arc::new(build_grid(GridMode::Interval1D, 1.0, 1.0, 64, 1.0).unwrap());
        let u = GridFunction::from_fn(&grid, |_| 1.0).unwrap();
        assert_eq!(u.values()[0], 0.0);
        assert_eq!(*u.values().last().unwrap(), 0.0);
    }

    #[test]
    fn forms_zero_function() {
        let grid = Arc::new(build_grid(GridMode::RadialAlpha2, 3.0, 1.0, 64, 1.0).unwrap());
        let u = GridFunction::zero(&grid);
        let f = forms(&u, &ball_instance(3.0, 0.1)).unwrap();
        assert_eq!(f.seminorm_sq, 0.0);
        assert_eq!(f.hardy, 0.0);
        assert_eq!(f.l2, 0.0);
        assert_eq!(f.hs_integral, 0.0);
        assert_eq!(f.pert_integral, 0.0);
        assert_eq!(f.triple_norm_sq, 0.0);
    }

    #[test]
    fn forms_tent_on_ball_closed_form() {
        // u(r) = 1 - r on B_1 in R^3: seminorm = 4 pi / 3, l2 = 4 pi / 30
        let grid = Arc::new(build_grid(GridMode::RadialAlpha2, 3.0, 1.0, 400, 1.0).unwrap());
        let u = GridFunction::from_fn(&grid, |r| 1.0 - r).unwrap();
        let f = forms(&u, &ball_instance(3.0, 0.0)).unwrap();
        let pi = std::f64::consts::PI;
        assert!((f.seminorm_sq - 4.0 * pi / 3.0).abs() < 1e-6 * (4.0 * pi / 3.0));
        assert!((f.l2 - 4.0 * pi / 30.0).abs() < 1e-4 * (4.0 * pi / 30.0));
        assert_eq!(f.triple_norm_sq, f.seminorm_sq);
    }

    #[test]
    fn forms_positive_part_only() {
        let grid = Arc::new(build_grid(GridMode::RadialAlpha2, 3.0, 1.0, 64, 1.0).unwrap());
        let u = GridFunction::from_fn(&grid, |r| -(1.0 - r)).unwrap();
        let f = forms(&u, &ball_instance(3.0, 0.0)).unwrap();
        assert_eq!(f.hs_integral, 0.0);
        assert_eq!(f.pert_integral, 0.0);
        assert!(f.l2 > 0.0);
    }

    #[test]
    fn forms_mode_mismatch() {
        let grid = Arc::new(build_grid(GridMode::Interval1D, 1.0, 1.0, 64, 1.0).unwrap());
        let u = GridFunction::zero(&grid);
        assert!(forms(&u, &ball_instance(3.0, 0.0)).is_err());
    }

    #[test]
    fn gagliardo_constant_alpha_one() {
        // C_{1,1} = 1/pi
        let c = gagliardo_constant(1.0, 1.0).unwrap();
        assert!((c - 1.0 / std::f64::consts::PI).abs() < 1e-14);
    }

    #[test]
    fn triple_norm_comparable_to_seminorm() {
        // discrete analogue of (1 - gamma/gamma_H) ||u||^2 <= |||u|||^2
        let n = 3.0;
        let grid = Arc::new(build_grid(GridMode::RadialAlpha2, n, 1.0, 600, 2.0).unwrap());
        let gh = crate::thresholds::gamma_h(n, 2.0).unwrap();
        for &gamma in &[0.0, 0.1, 0.2, 0.24] {
            let inst = ball_instance(n, gamma);
            for u in [
                GridFunction::from_fn(&grid, |r| 1.0 - r).unwrap(),
                GridFunction::from_fn(&grid, |r| (1.0 - r) * (0.2 + r).sqrt()).unwrap(),
                GridFunction::from_fn(&grid, |r| (std::f64::consts::PI * r).sin() / (r + 0.05))
                    .unwrap(),
            ] {
                let f = forms(&u, &inst).unwrap();
                let floor = (1.0 - gamma / gh) * f.seminorm_sq;
                assert!(
                    f.triple_norm_sq >= floor * (1.0 - 0.05),
                    "gamma={gamma}: {} < {floor}",
                    f.triple_norm_sq
                );
                assert!(f.triple_norm_sq > 0.0);
            }
        }
    }
}
