//! Weighted integrals of piecewise-linear grid functions.
//!
//! All integrals treat the nodal values as a piecewise-linear interpolant
//! (constant on the radial flat core `[0, r_1]`), integrated against the
//! weight `omega r^{n-1-beta}` (radial) or `|x|^{-beta}` (interval). The
//! quadratic forms use closed-form power moments and the fractional powers
//! use per-panel Gauss quadrature, so the discrete quadratic forms are the
//! continuum forms of a genuine Sobolev function; in particular the Hardy
//! inequality survives discretization instead of being overweighted at
//! graded nodes.

use super::linop::SymOp;
use super::{GridMode, RadialGrid};

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

/// `int_lo^hi x^e dx` (e > -1).
fn moment(lo: f64, hi: f64, e: f64) -> f64 {
    (hi.powf(e + 1.0) - lo.powf(e + 1.0)) / (e + 1.0)
}

/// `int_lo^hi (c0 + c1 x)(d0 + d1 x) x^e dx` on `0 <= lo < hi`.
fn pair_moment(lo: f64, hi: f64, e: f64, c: [f64; 2], d: [f64; 2]) -> f64 {
    c[0] * d[0] * moment(lo, hi, e)
        + (c[0] * d[1] + c[1] * d[0]) * moment(lo, hi, e + 1.0)
        + c[1] * d[1] * moment(lo, hi, e + 2.0)
}

/// Weighted "mass" Gram matrix: `int u v weight` for piecewise-linear u, v.
/// Exact (closed-form moments). `beta < n` required.
pub(crate) fn weighted_mass_matrix(grid: &RadialGrid, beta: f64) -> SymOp {
    let nodes = grid.nodes();
    let m = nodes.len();
    let mut diag = vec![0.0; m];
    let mut sub = vec![0.0; m - 1];

    match grid.mode() {
        GridMode::RadialAlpha2 => {
            let n = grid.dim();
            let omega = super::sphere_area(n);
            let e = n - 1.0 - beta;
            // flat core: u = u_0 constant on [0, r_1]
            diag[0] += omega * moment(0.0, nodes[0], e);
            for i in 0..m - 1 {
                let (a, b) = (nodes[i], nodes[i + 1]);
                let h = b - a;
                // shape functions (b - x)/h and (x - a)/h
                let phi_l = [b / h, -1.0 / h];
                let phi_r = [-a / h, 1.0 / h];
                diag[i] += omega * pair_moment(a, b, e, phi_l, phi_l);
                diag[i + 1] += omega * pair_moment(a, b, e, phi_r, phi_r);
                sub[i] += omega * pair_moment(a, b, e, phi_l, phi_r);
            }
        }
        GridMode::Interval1D => {
            let e = -beta;
            for i in 0..m - 1 {
                let (a, b) = (nodes[i], nodes[i + 1]);
                let h = b - a;
                let phi_l = [b / h, -1.0 / h];
                let phi_r = [-a / h, 1.0 / h];
                // integrate |x|^{-beta}: split any panel crossing zero and
                // mirror negative pieces onto positive coordinates
                let mut acc = |lo: f64, hi: f64, pl: [f64; 2], pr: [f64; 2]| {
                    diag[i] += pair_moment(lo, hi, e, pl, pl);
                    diag[i + 1] += pair_moment(lo, hi, e, pr, pr);
                    sub[i] += pair_moment(lo, hi, e, pl, pr);
                };
                if a >= 0.0 {
                    acc(a, b, phi_l, phi_r);
                } else if b <= 0.0 {
                    // x = -y: linear coefficients flip sign in the slope
                    acc(-b, -a, [phi_l[0], -phi_l[1]], [phi_r[0], -phi_r[1]]);
                } else {
                    acc(0.0, b, phi_l, phi_r);
                    acc(0.0, -a, [phi_l[0], -phi_l[1]], [phi_r[0], -phi_r[1]]);
                }
            }
        }
    }
    SymOp::Tridiag { diag, sub }
}

/// Gauss samples `(x, w)` for one weighted panel; the caller multiplies by
/// the weight at `x`. A panel with the singular weight `x^{-beta}` touching
/// zero is regularized by the substitution `x = y^{1/(1-beta)}`, with the
/// Jacobian folded into `w` so the caller's weight factor cancels.
fn panel_samples(lo: f64, hi: f64, singular_beta: Option<f64>, out: &mut Vec<(f64, f64)>) {
    out.clear();
    match singular_beta {
        Some(beta) if lo == 0.0 && beta > 0.0 => {
            let e = 1.0 - beta;
            let y_hi = hi.powf(e);
            const K: usize = 6;
            for k in 0..K {
                let ya = y_hi * (k as f64) / K as f64;
                let yb = y_hi * ((k + 1) as f64) / K as f64;
                for (gx, gw) in GAUSS4_X.iter().zip(&GAUSS4_W) {
                    let y = ya + (yb - ya) * gx;
                    let x = y.powf(1.0 / e);
                    out.push((x, gw * (yb - ya) / e * x.powf(beta)));
                }
            }
        }
        _ => {
            for (gx, gw) in GAUSS4_X.iter().zip(&GAUSS4_W) {
                out.push((lo + (hi - lo) * gx, gw * (hi - lo)));
            }
        }
    }
}

/// `int f(x, u(x)) * weight(x) dx` for the piecewise-linear interpolant,
/// with optional accumulation of the gradient with respect to the nodal
/// values (`df` = derivative of `f` in its second argument).
pub(crate) fn weighted_integral(
    grid: &RadialGrid,
    beta: f64,
    values: &[f64],
    f: &dyn Fn(f64, f64) -> f64,
    mut df: Option<(&dyn Fn(f64, f64) -> f64, &mut [f64])>,
) -> f64 {
    let nodes = grid.nodes();
    let m = nodes.len();
    let (radial, n) = match grid.mode() {
        GridMode::RadialAlpha2 => (true, grid.dim()),
        GridMode::Interval1D => (false, 1.0),
    };
    let omega = if radial { super::sphere_area(n) } else { 1.0 };

    let mut total = 0.0;

    // radial flat core [0, r_1]: u constant
    if radial {
        let core = omega * moment(0.0, nodes[0], n - 1.0 - beta);
        total += core * f(nodes[0], values[0]);
        if let Some((dfun, g)) = df.as_mut() {
            g[0] += core * dfun(nodes[0], values[0]);
        }
    }

    // (|position| magnitude, quadrature weight, signed position)
    let mut samples: Vec<(f64, f64)> = Vec::with_capacity(64);
    for i in 0..m - 1 {
        let (a, b) = (nodes[i], nodes[i + 1]);
        let h = b - a;
        // pieces of this panel in |x| coordinates, with a sign to map back
        let pieces: [Option<(f64, f64, f64)>; 2] = if radial || a >= 0.0 {
            [Some((a, b, 1.0)), None]
        } else if b <= 0.0 {
            [Some((-b, -a, -1.0)), None]
        } else {
            [Some((0.0, b, 1.0)), Some((0.0, -a, -1.0))]
        };
        for piece in pieces.into_iter().flatten() {
            let (lo, hi, sign) = piece;
            panel_samples(
                lo,
                hi,
                if !radial { Some(beta) } else { None },
                &mut samples,
            );
            for &(x, w) in samples.iter() {
                let pos = sign * x;
                let phi_r = (pos - a) / h;
                let u = values[i] * (1.0 - phi_r) + values[i + 1] * phi_r;
                let ww = w
                    * if radial {
                        omega * x.powf(n - 1.0 - beta)
                    } else {
                        x.powf(-beta)
                    };
                total += ww * f(pos, u);
                if let Some((dfun, g)) = df.as_mut() {
                    let d = ww * dfun(pos, u);
                    g[i] += d * (1.0 - phi_r);
                    g[i + 1] += d * phi_r;
                }
            }
        }
    }
    total
}

/// `int u_+^p |x|^{-beta}` and optionally its nodal gradient.
pub(crate) fn pow_integral(
    grid: &RadialGrid,
    beta: f64,
    p: f64,
    values: &[f64],
    grad: Option<&mut [f64]>,
) -> f64 {
    let f = move |_: f64, u: f64| u.max(0.0).powf(p);
    match grad {
        None => weighted_integral(grid, beta, values, &f, None),
        Some(g) => {
            let df = move |_: f64, u: f64| p * u.max(0.0).powf(p - 1.0);
            weighted_integral(grid, beta, values, &f, Some((&df, g)))
        }
    }
}

/// Tridiagonal Hessian of `int u_+^p |x|^{-beta}` with respect to the nodal
/// values (panel-local coupling only).
pub(crate) fn pow_hessian(grid: &RadialGrid, beta: f64, p: f64, values: &[f64]) -> SymOp {
    let nodes = grid.nodes();
    let m = nodes.len();
    let mut diag = vec![0.0; m];
    let mut sub = vec![0.0; m - 1];
    let ddf = |u: f64| p * (p - 1.0) * u.max(0.0).powf(p - 2.0);

    let (radial, n) = match grid.mode() {
        GridMode::RadialAlpha2 => (true, grid.dim()),
        GridMode::Interval1D => (false, 1.0),
    };
    let omega = if radial { super::sphere_area(n) } else { 1.0 };

    if radial {
        let core = omega * moment(0.0, nodes[0], n - 1.0 - beta);
        diag[0] += core * ddf(values[0]);
    }

    let mut samples: Vec<(f64, f64)> = Vec::with_capacity(64);
    for i in 0..m - 1 {
        let (a, b) = (nodes[i], nodes[i + 1]);
        let h = b - a;
        let pieces: [Option<(f64, f64, f64)>; 2] = if radial || a >= 0.0 {
            [Some((a, b, 1.0)), None]
        } else if b <= 0.0 {
            [Some((-b, -a, -1.0)), None]
        } else {
            [Some((0.0, b, 1.0)), Some((0.0, -a, -1.0))]
        };
        for (lo, hi, sign) in pieces.into_iter().flatten() {
            panel_samples(
                lo,
                hi,
                if !radial { Some(beta) } else { None },
                &mut samples,
            );
            for &(x, w) in samples.iter() {
                let pos = sign * x;
                let phi_r = (pos - a) / h;
                let u = values[i] * (1.0 - phi_r) + values[i + 1] * phi_r;
                let ww = w
                    * if radial {
                        omega * x.powf(n - 1.0 - beta)
                    } else {
                        x.powf(-beta)
                    };
                let d2 = ww * ddf(u);
                diag[i] += d2 * (1.0 - phi_r) * (1.0 - phi_r);
                diag[i + 1] += d2 * phi_r * phi_r;
                sub[i] += d2 * (1.0 - phi_r) * phi_r;
            }
        }
    }
    SymOp::Tridiag { diag, sub }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadform::{build_grid, GridMode};

    #[test]
    fn mass_matrix_constant_function_gives_volume() {
        let grid = build_grid(GridMode::RadialAlpha2, 3.0, 1.0, 100, 2.0).unwrap();
        let m = weighted_mass_matrix(&grid, 0.0);
        let ones = vec![1.0; grid.len()];
        let vol = m.quad(&ones);
        let want = 4.0 * std::f64::consts::PI / 3.0;
        assert!((vol - want).abs() < 1e-12 * want, "{vol} vs {want}");

        let grid = build_grid(GridMode::Interval1D, 1.0, 2.0, 64, 1.0).unwrap();
        let m = weighted_mass_matrix(&grid, 0.0);
        let ones = vec![1.0; grid.len()];
        assert!((m.quad(&ones) - 4.0).abs() < 1e-12);
    }

    #[test]
    fn hardy_moment_exact_for_linear_function() {
        // int_0^1 (1-r)^2 r^{n-3} dr * omega, n = 3: omega * (1 - 2/2 + 1/3)...
        // = 4 pi * int_0^1 (1-r)^2 dr = 4 pi / 3
        let grid = build_grid(GridMode::RadialAlpha2, 3.0, 1.0, 200, 1.0).unwrap();
        let m = weighted_mass_matrix(&grid, 2.0);
        let u: Vec<f64> = grid.nodes().iter().map(|&r| 1.0 - r).collect();
        let got = m.quad(&u);
        // the flat core treats u as constant u(r_1) on [0, r_1]; the induced
        // error is O(r_1) here
        let want = 4.0 * std::f64::consts::PI / 3.0;
        assert!((got - want).abs() < 1e-2 * want, "{got} vs {want}");
    }

    #[test]
    fn pow_integral_matches_closed_form() {
        // int_{B_1} (1-r)^2 dx in R^3 = 4 pi (1/3 - 2/4 + 1/5) = 4pi/30
        let grid = build_grid(GridMode::RadialAlpha2, 3.0, 1.0, 200, 1.0).unwrap();
        let u: Vec<f64> = grid.nodes().iter().map(|&r| 1.0 - r).collect();
        let got = pow_integral(&grid, 0.0, 2.0, &u, None);
        let want = 4.0 * std::f64::consts::PI / 30.0;
        assert!((got - want).abs() < 1e-8 * want, "{got} vs {want}");
    }

    #[test]
    fn pow_integral_gradient_matches_fd() {
        let grid = build_grid(GridMode::RadialAlpha2, 3.0, 1.0, 60, 2.0).unwrap();
        let u: Vec<f64> = grid.nodes().iter().map(|&r| (1.0 + r).recip()).collect();
        let mut g = vec![0.0; grid.len()];
        let p = 2.7;
        pow_integral(&grid, 0.5, p, &u, Some(&mut g));
        let h = 1e-6;
        for &i in &[0usize, 5, 30, 59] {
            let mut up = u.clone();
            up[i] += h;
            let mut um = u.clone();
            um[i] -= h;
            let fp = pow_integral(&grid, 0.5, p, &up, None);
            let fm = pow_integral(&grid, 0.5, p, &um, None);
            let fd = (fp - fm) / (2.0 * h);
            assert!(
                (g[i] - fd).abs() <= (1e-6 * fd.abs()).max(1e-9),
                "node {i}: {} vs {fd}",
                g[i]
            );
        }
    }

    #[test]
    fn interval_weighted_integral_symmetric() {
        // int_{-1}^{1} (1-|x|)^2 |x|^{-1/2} dx = 2 (2 - 4/3 + 2/5) = 32/15;
        // the interpolant clips the peak over the central panel, so the
        // discrete value converges to the closed form from below
        let want = 32.0 / 15.0;
        let mut prev_err = f64::INFINITY;
        for m in [64usize, 256, 1024] {
            let grid = build_grid(GridMode::Interval1D, 1.0, 1.0, m, 1.5).unwrap();
            let u: Vec<f64> = grid.nodes().iter().map(|&x| 1.0 - x.abs()).collect();
            let got = pow_integral(&grid, 0.5, 2.0, &u, None);
            let err = (got - want).abs() / want;
            assert!(err < prev_err, "no convergence at m={m}: err {err}");
            prev_err = err;
        }
        assert!(prev_err < 1e-4, "final relative error {prev_err}");
    }
}
