//! Log-gamma and the Gamma-product map whose roots are the fundamental
//! exponents of the Hardy-Schrodinger operator.
//!
//! Everything is evaluated in log space so that arguments growing with the
//! dimension never overflow.

use crate::error::{Error, Result};

/// Dimension/order pair for the Gamma-product map.
///
/// Requires `n > alpha` and `alpha` in `(0, 2]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PsiParams {
    n: f64,
    alpha: f64,
}

impl PsiParams {
    pub fn new(n: f64, alpha: f64) -> Result<Self> {
        if !n.is_finite() || !alpha.is_finite() {
            return Err(Error::validation("psi params must be finite"));
        }
        if !(alpha > 0.0 && alpha <= 2.0) {
            return Err(Error::validation(format!(
                "alpha must lie in (0, 2], got {alpha}"
            )));
        }
        if n <= alpha {
            return Err(Error::validation(format!(
                "need n > alpha, got n = {n}, alpha = {alpha}"
            )));
        }
        Ok(PsiParams { n, alpha })
    }

    pub fn n(&self) -> f64 {
        self.n
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// Length of the open interval on which the map is positive.
    pub fn span(&self) -> f64 {
        self.n - self.alpha
    }

    /// Midpoint `(n - alpha) / 2`, where the map attains its maximum.
    pub fn midpoint(&self) -> f64 {
        0.5 * (self.n - self.alpha)
    }
}

// Lanczos coefficients for g = 607/128, N = 15 (Godfrey's set). Close to
// machine precision for positive real arguments.
const LANCZOS_G_PLUS_HALF: f64 = 5.242_187_5;
const LANCZOS_SER0: f64 = 0.999_999_999_999_997_1;
const LANCZOS_COEF: [f64; 14] = [
    57.156_235_665_862_92,
    -59.597_960_355_475_49,
    14.136_097_974_741_746,
    -0.491_913_816_097_620_2,
    0.339_946_499_848_118_89e-4,
    0.465_236_289_270_485_76e-4,
    -0.983_744_753_048_795_6e-4,
    0.158_088_703_224_912_49e-3,
    -0.210_264_441_724_104_88e-3,
    0.217_439_618_115_212_64e-3,
    -0.164_318_106_536_763_89e-3,
    0.844_182_239_838_527_4e-4,
    -0.261_908_384_015_814_08e-4,
    0.368_991_826_595_316_25e-5,
];
const SQRT_2PI: f64 = 2.506_628_274_631_000_5;

/// Natural log of the Gamma function for `x > 0`.
pub fn log_gamma(x: f64) -> Result<f64> {
    if !(x > 0.0) {
        return Err(Error::domain(format!("log_gamma requires x > 0, got {x}")));
    }
    let tmp = x + LANCZOS_G_PLUS_HALF;
    let log_part = (x + 0.5) * tmp.ln() - tmp;
    let mut ser = LANCZOS_SER0;
    let mut y = x;
    for c in LANCZOS_COEF {
        y += 1.0;
        ser += c / y;
    }
    Ok(log_part + (SQRT_2PI * ser / x).ln())
}

/// The Gamma-product map
/// `2^alpha G((n-t)/2) G((alpha+t)/2) / (G((n-t-alpha)/2) G(t/2))`
/// on `t in [0, n-alpha]`, extended by continuity to 0 at both endpoints
/// (the denominator Gamma factors blow up there).
pub fn psi(params: PsiParams, t: f64) -> Result<f64> {
    let span = params.span();
    if !(t >= 0.0 && t <= span) {
        return Err(Error::domain(format!(
            "psi requires t in [0, {span}], got {t}"
        )));
    }
    if t == 0.0 || t == span {
        return Ok(0.0);
    }
    let (n, alpha) = (params.n, params.alpha);
    let ln_psi = alpha * std::f64::consts::LN_2 + log_gamma(0.5 * (n - t))?
        + log_gamma(0.5 * (alpha + t))?
        - log_gamma(0.5 * (n - t - alpha))?
        - log_gamma(0.5 * t)?;
    Ok(ln_psi.exp())
}

/// Derivative of [`psi`] by central finite differences with step
/// `h = 1e-6 * max(1, t)`. The stencil is clamped to the closed interval,
/// using the continuity values at the endpoints.
pub fn psi_derivative(params: PsiParams, t: f64) -> Result<f64> {
    let span = params.span();
    if !(t > 0.0 && t < span) {
        return Err(Error::domain(format!(
            "psi_derivative requires t in (0, {span}), got {t}"
        )));
    }
    let h = 1e-6 * t.max(1.0);
    let lo = (t - h).max(0.0);
    let hi = (t + h).min(span);
    Ok((psi(params, hi)? - psi(params, lo)?) / (hi - lo))
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Digamma by recurrence + asymptotic series; independent derivative oracle.
    fn digamma(mut x: f64) -> f64 {
        let mut acc = 0.0;
        while x < 10.0 {
            acc -= 1.0 / x;
            x += 1.0;
        }
        let inv = 1.0 / x;
        let inv2 = inv * inv;
        acc + x.ln() - 0.5 * inv
            - inv2
                * (1.0 / 12.0
                    - inv2 * (1.0 / 120.0 - inv2 * (1.0 / 252.0 - inv2 * (1.0 / 240.0))))
    }

    fn psi_derivative_analytic(p: PsiParams, t: f64) -> f64 {
        let (n, a) = (p.n(), p.alpha());
        let v = psi(p, t).unwrap();
        v * 0.5
            * (-digamma(0.5 * (n - t)) + digamma(0.5 * (a + t)) + digamma(0.5 * (n - t - a))
                - digamma(0.5 * t))
    }

    // Frozen 25-digit reference values (high-precision series/recurrence oracle).
    const LGAMMA_REF: &[(f64, f64)] = &[
        (0.001, 6.907178885383853682512345),
        (0.01, 4.599479878042021722513945),
        (0.1, 2.252712651734205959869702),
        (0.25, 1.28802252469807745737061),
        (0.5, 0.5723649429247000870717137),
        (1.0, 0.0),
        (1.5, -0.1207822376352452223455184),
        (2.0, 0.0),
        (3.75, 1.486815578593417055540582),
        (7.25, 7.052185450738539444925749),
        (10.0, 12.80182748008146961120772),
        (42.5, 115.9000704704145301234203),
        (100.0, 359.134205369575398776044),
        (317.2, 1507.763140755755734678325),
        (1000.0, 5905.220423209181211826077),
    ];

    #[test]
    fn log_gamma_matches_high_precision_oracle() {
        for &(x, want) in LGAMMA_REF {
            let got = log_gamma(x).unwrap();
            // 1e-13 absolute, relaxed to a few ulp once |ln G| itself is large
            let tol = 1e-13f64.max(5e-15 * want.abs());
            assert!(
                (got - want).abs() <= tol,
                "log_gamma({x}) = {got}, want {want} (err {:.2e})",
                (got - want).abs()
            );
        }
    }

    #[test]
    fn log_gamma_special_points() {
        assert_eq!(log_gamma(1.0).unwrap(), 0.0);
        let half = log_gamma(0.5).unwrap();
        assert!((half - std::f64::consts::PI.sqrt().ln()).abs() < 1e-15);
    }

    #[test]
    fn log_gamma_rejects_nonpositive() {
        assert!(log_gamma(0.0).is_err());
        assert!(log_gamma(-3.5).is_err());
        assert!(log_gamma(f64::NAN).is_err());
    }

    #[test]
    fn psi_alpha2_reduces_to_quadratic() {
        // For alpha = 2 the Gamma factors telescope to t(n-2-t).
        let p = PsiParams::new(3.0, 2.0).unwrap();
        assert!((psi(p, 0.3).unwrap() - 0.21).abs() < 1e-12);
        assert!((psi(p, 0.5).unwrap() - 0.25).abs() < 1e-12);
        let p5 = PsiParams::new(5.0, 2.0).unwrap();
        assert!((psi(p5, 1.5).unwrap() - 2.25).abs() < 1e-12);

        for n in 3..=10 {
            let p = PsiParams::new(n as f64, 2.0).unwrap();
            let span = p.span();
            for i in 1..1000 {
                let t = span * (i as f64) / 1000.0;
                let exact = t * (n as f64 - 2.0 - t);
                let got = psi(p, t).unwrap();
                assert!(
                    (got - exact).abs() <= 1e-10 * exact.abs(),
                    "n={n} t={t}: {got} vs {exact}"
                );
            }
        }
    }

    #[test]
    fn psi_fractional_frozen_values() {
        let p = PsiParams::new(4.0, 1.5).unwrap();
        let got = psi(p, 0.7).unwrap();
        assert!((got - 0.8901726329370330).abs() < 1e-13 * got);

        // 2 G(1.25) G(0.75) / (G(0.75) G(0.25)) = 2 * 0.25 = 0.5
        let p31 = PsiParams::new(3.0, 1.0).unwrap();
        assert!((psi(p31, 0.5).unwrap() - 0.5).abs() < 1e-13);

        let p9 = PsiParams::new(9.0, 0.4).unwrap();
        let got = psi(p9, 4.1).unwrap();
        assert!((got - 1.6577557772392134).abs() < 1e-12 * got);
    }

    #[test]
    fn psi_endpoints_are_zero_and_outside_errors() {
        let p = PsiParams::new(4.0, 1.5).unwrap();
        assert_eq!(psi(p, 0.0).unwrap(), 0.0);
        assert_eq!(psi(p, p.span()).unwrap(), 0.0);
        assert!(psi(p, -0.1).is_err());
        assert!(psi(p, p.span() + 0.1).is_err());
    }

    #[test]
    fn psi_symmetry_about_midpoint() {
        for &(n, alpha) in &[(3.0, 2.0), (5.0, 2.0), (4.0, 1.5), (2.0, 0.7), (11.0, 1.0)] {
            let p = PsiParams::new(n, alpha).unwrap();
            let span = p.span();
            for i in 1..80 {
                let t = span * (i as f64) / 80.0;
                let a = psi(p, t).unwrap();
                let b = psi(p, span - t).unwrap();
                assert!(
                    (a - b).abs() <= 1e-10 * (1.0 + a.abs()),
                    "symmetry broken at n={n}, alpha={alpha}, t={t}"
                );
            }
        }
    }

    #[test]
    fn psi_unimodal_on_grid() {
        for &(n, alpha) in &[(3.0, 2.0), (6.0, 2.0), (4.0, 1.5), (1.0, 0.6)] {
            let p = PsiParams::new(n, alpha).unwrap();
            let span = p.span();
            let m = 400;
            let mid = p.midpoint();
            let mut prev = 0.0;
            for i in 1..m {
                let t = span * (i as f64) / (m as f64);
                let v = psi(p, t).unwrap();
                if t <= mid {
                    assert!(v > prev, "not increasing at t={t} (n={n}, alpha={alpha})");
                } else {
                    assert!(v < prev, "not decreasing at t={t} (n={n}, alpha={alpha})");
                }
                prev = v;
            }
        }
    }

    #[test]
    fn derivative_matches_digamma_oracle() {
        let p = PsiParams::new(3.0, 2.0).unwrap();
        assert!(psi_derivative(p, 0.5).unwrap().abs() < 1e-9);
        assert!((psi_derivative(p, 0.25).unwrap() - 0.5).abs() < 1e-8);
        assert!((psi_derivative(p, 0.75).unwrap() + 0.5).abs() < 1e-8);

        for &(n, alpha) in &[(5.0, 2.0), (4.0, 1.5), (3.0, 1.0), (9.0, 0.4)] {
            let p = PsiParams::new(n, alpha).unwrap();
            let span = p.span();
            for i in 1..20 {
                let t = span * (i as f64) / 20.0;
                let fd = psi_derivative(p, t).unwrap();
                let an = psi_derivative_analytic(p, t);
                // relative tolerance with an absolute floor near the
                // midpoint, where the derivative vanishes
                let scale = an.abs().max(1e-3 * psi(p, t).unwrap().max(1.0));
                assert!(
                    (fd - an).abs() <= 1e-6 * scale,
                    "n={n} alpha={alpha} t={t}: fd={fd} analytic={an}"
                );
            }
        }
    }

    #[test]
    fn params_validation() {
        assert!(PsiParams::new(3.0, 0.0).is_err());
        assert!(PsiParams::new(3.0, 2.5).is_err());
        assert!(PsiParams::new(1.5, 2.0).is_err());
        assert!(PsiParams::new(f64::INFINITY, 1.0).is_err());
        assert!(PsiParams::new(3.0, 2.0).is_ok());
    }
}
