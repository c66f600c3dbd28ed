//! Constants and regime classification for the perturbed problem: the Hardy
//! constant, the fundamental exponents, the criticality threshold, the
//! critical Hardy-Sobolev exponent and the perturbation threshold, plus the
//! existence-table lookup they induce.

use crate::error::{Error, Result};
use crate::roots::brent;
use crate::specfun::{psi, PsiParams};

/// Relative tolerance for the equality decisions `q = q_crit` and
/// `gamma = gamma_crit` (root accuracy is 1e-10, so 1e-9 is safe).
pub const EQUALITY_RTOL: f64 = 1e-9;

/// Domain descriptor: radial ball for the local case, symmetric interval
/// for one-dimensional fractional runs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DomainSpec {
    /// Ball of the given radius centred at the origin (used with alpha = 2).
    Ball { radius: f64 },
    /// Interval (-half_length, half_length) (used with n = 1, alpha < 1).
    Interval { half_length: f64 },
}

impl DomainSpec {
    pub fn extent(&self) -> f64 {
        match *self {
            DomainSpec::Ball { radius } => radius,
            DomainSpec::Interval { half_length } => half_length,
        }
    }
}

/// One instance of the perturbed problem.
#[derive(Debug, Clone, PartialEq)]
pub struct ProblemInstance {
    pub n: f64,
    pub alpha: f64,
    pub s: f64,
    pub gamma: f64,
    pub lambda: f64,
    pub q: f64,
    /// Value of the perturbation weight at the origin.
    pub h0: f64,
    /// Interior mass of the domain, when known or previously computed.
    pub mass: Option<f64>,
    pub domain: DomainSpec,
}

impl ProblemInstance {
    /// Build and validate an instance. The default domain is the unit ball.
    pub fn new(
        n: f64,
        alpha: f64,
        s: f64,
        gamma: f64,
        lambda: f64,
        q: f64,
        h0: f64,
    ) -> Result<Self> {
        let inst = ProblemInstance {
            n,
            alpha,
            s,
            gamma,
            lambda,
            q,
            h0,
            mass: None,
            domain: DomainSpec::Ball { radius: 1.0 },
        };
        inst.validate()?;
        Ok(inst)
    }

    pub fn with_mass(mut self, mass: f64) -> Self {
        self.mass = Some(mass);
        self
    }

    pub fn with_domain(mut self, domain: DomainSpec) -> Result<Self> {
        if !(domain.extent() > 0.0 && domain.extent().is_finite()) {
            return Err(Error::validation("domain extent must be positive"));
        }
        self.domain = domain;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("n", self.n),
            ("alpha", self.alpha),
            ("s", self.s),
            ("gamma", self.gamma),
            ("lambda", self.lambda),
            ("q", self.q),
            ("h0", self.h0),
        ] {
            if !v.is_finite() {
                return Err(Error::validation(format!("{name} must be finite")));
            }
        }
        if !(self.alpha > 0.0 && self.alpha <= 2.0) {
            return Err(Error::validation(format!(
                "alpha must lie in (0, 2], got {}",
                self.alpha
            )));
        }
        if self.n <= self.alpha {
            return Err(Error::validation(format!(
                "need n > alpha, got n = {}, alpha = {}",
                self.n, self.alpha
            )));
        }
        if !(self.s >= 0.0 && self.s < self.alpha) {
            return Err(Error::validation(format!(
                "need 0 <= s < alpha, got s = {}, alpha = {}",
                self.s, self.alpha
            )));
        }
        let two_star = self.two_star();
        if !(self.q > 2.0 && self.q < two_star) {
            return Err(Error::validation(format!(
                "need 2 < q < 2*_alpha = {two_star}, got q = {}",
                self.q
            )));
        }
        let gh = gamma_h(self.n, self.alpha)?;
        if self.gamma >= gh {
            return Err(Error::validation(format!(
                "need gamma < gamma_H = {gh}, got gamma = {}",
                self.gamma
            )));
        }
        if self.h0 < 0.0 {
            return Err(Error::validation(format!(
                "need h(0) >= 0, got {}",
                self.h0
            )));
        }
        if !(self.domain.extent() > 0.0) {
            return Err(Error::validation("domain extent must be positive"));
        }
        Ok(())
    }

    /// Critical exponent `2*_alpha = 2n/(n - alpha)`.
    pub fn two_star(&self) -> f64 {
        2.0 * self.n / (self.n - self.alpha)
    }

    /// Hardy-Sobolev exponent `2*_alpha(s) = 2(n - s)/(n - alpha)`.
    pub fn two_star_s(&self) -> f64 {
        2.0 * (self.n - self.s) / (self.n - self.alpha)
    }

    pub fn psi_params(&self) -> Result<PsiParams> {
        PsiParams::new(self.n, self.alpha)
    }
}

/// Criticality regime of the operator.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Regime {
    NonCritical,
    Critical,
}

/// Which analytic condition governs existence for the instance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GoverningCondition {
    /// `h(0) > 0` suffices.
    H0Positive,
    /// Positive interior mass is required.
    MassPositive,
    /// `c1 h(0) + c2 m > 0` with positive constants `c1, c2`. The
    /// coefficients are attached when a fitted estimate is available;
    /// otherwise the condition is certified symbolically (true only when it
    /// holds for every positive coefficient pair).
    CombinedPositive { coefficients: Option<(f64, f64)> },
}

/// Outcome of evaluating the governing condition on the supplied data.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    /// The governing condition evaluates (or certifies) true.
    ExistenceGuaranteed,
    /// The condition evaluates false, or cannot be certified true from the
    /// supplied data.
    ConditionNotMet,
    /// The condition needs the interior mass, which was not supplied.
    MassUnknown,
}

/// Every constant of the existence table for one instance.
#[derive(Debug, Clone, PartialEq)]
pub struct ThresholdReport {
    pub gamma_h: f64,
    /// `None` in the always-critical dimension range `n < 2 alpha`.
    pub gamma_crit: Option<f64>,
    pub beta_minus: f64,
    pub beta_plus: f64,
    pub two_star_s: f64,
    pub two_star: f64,
    /// Perturbation threshold from the fundamental-exponent gap. Only acts
    /// as a threshold in the critical regime; reported always.
    pub q_crit: f64,
    pub regime: Regime,
    pub governing: GoverningCondition,
    pub verdict: Verdict,
    /// `n - q (n - alpha)/2`, the perturbation-term rate.
    pub exponent_perturbation: f64,
    /// `beta_+ - beta_-`, the mass-term rate.
    pub exponent_mass: f64,
}

/// Best Hardy constant `2^alpha G^2((n+alpha)/4) / G^2((n-alpha)/4)`,
/// evaluated in log space.
pub fn gamma_h(n: f64, alpha: f64) -> Result<f64> {
    if !(alpha > 0.0 && n > alpha) {
        return Err(Error::domain(format!(
            "gamma_h requires n > alpha > 0, got n = {n}, alpha = {alpha}"
        )));
    }
    let ln = alpha * std::f64::consts::LN_2
        + 2.0 * crate::specfun::log_gamma(0.25 * (n + alpha))?
        - 2.0 * crate::specfun::log_gamma(0.25 * (n - alpha))?;
    Ok(ln.exp())
}

/// Fundamental exponents `(beta_-, beta_+)`: the two roots of the
/// Gamma-product map at level `gamma`, one on each side of the midpoint.
///
/// `gamma = 0` returns `(0, n - alpha)` exactly; `gamma` within 1e-12
/// (relative) of the Hardy constant returns the midpoint pair. Negative
/// `gamma` is supported through the quadratic closed form when `alpha = 2`
/// and rejected otherwise.
pub fn beta_pm(n: f64, alpha: f64, gamma: f64) -> Result<(f64, f64)> {
    let gh = gamma_h(n, alpha)?;
    let span = n - alpha;
    let mid = 0.5 * span;

    if gamma > gh {
        return Err(Error::domain(format!(
            "beta_pm requires gamma < gamma_H = {gh}, got {gamma}"
        )));
    }
    if (gamma - gh).abs() <= 1e-12 * gh.max(1.0) {
        return Ok((mid, mid));
    }
    if gamma == 0.0 {
        return Ok((0.0, span));
    }
    if gamma < 0.0 {
        if alpha == 2.0 {
            let disc = (0.25 * (n - 2.0) * (n - 2.0) - gamma).sqrt();
            return Ok((mid - disc, mid + disc));
        }
        return Err(Error::unsupported(format!(
            "beta_pm with gamma < 0 is only defined for alpha = 2 (got alpha = {alpha})"
        )));
    }

    let params = PsiParams::new(n, alpha)?;
    let f = |t: f64| psi(params, t).unwrap_or(f64::NAN) - gamma;
    let xtol = 1e-13 * span.max(1.0);
    let beta_minus = brent(f, 0.0, mid, xtol)?;
    let beta_plus = brent(f, mid, span, xtol)?;
    Ok((beta_minus, beta_plus))
}

/// Criticality threshold: the map value at `t = (n - 2 alpha)/2`, i.e. the
/// level at which the exponent gap equals `alpha`. Returns `None` when
/// `n < 2 alpha`, where every admissible `gamma` is critical.
pub fn gamma_crit(n: f64, alpha: f64) -> Result<Option<f64>> {
    if !(alpha > 0.0 && alpha <= 2.0 && n > alpha) {
        return Err(Error::domain(format!(
            "gamma_crit requires n > alpha and alpha in (0, 2], got n = {n}, alpha = {alpha}"
        )));
    }
    if n < 2.0 * alpha {
        return Ok(None);
    }
    let params = PsiParams::new(n, alpha)?;
    // n = 2 alpha hits the left endpoint, which is 0 by continuity.
    Ok(Some(psi(params, 0.5 * (n - 2.0 * alpha))?))
}

/// Whether the operator is critical at this `gamma` (the complement of the
/// non-critical region `n >= 2 alpha` and `gamma <= gamma_crit`, with the
/// boundary counted as non-critical).
pub fn is_critical(n: f64, alpha: f64, gamma: f64) -> Result<bool> {
    match gamma_crit(n, alpha)? {
        None => Ok(true),
        Some(gc) => Ok(gamma > gc + EQUALITY_RTOL * gc.abs().max(1.0)),
    }
}

/// Perturbation threshold `2*_alpha - 2 (beta_+ - beta_-)/(n - alpha)`.
/// Only defined in the critical regime, where it lies in `(2, 2*_alpha)`
/// for `gamma >= 0`.
pub fn q_crit(n: f64, alpha: f64, gamma: f64) -> Result<f64> {
    if !is_critical(n, alpha, gamma)? {
        return Err(Error::domain(format!(
            "q_crit is only defined for critical instances (n = {n}, alpha = {alpha}, gamma = {gamma})"
        )));
    }
    let (bm, bp) = beta_pm(n, alpha, gamma)?;
    Ok(q_crit_from_betas(n, alpha, bm, bp))
}

fn q_crit_from_betas(n: f64, alpha: f64, beta_minus: f64, beta_plus: f64) -> f64 {
    (2.0 * n - 2.0 * (beta_plus - beta_minus)) / (n - alpha)
}

/// Classify an instance into the existence table, with optional explicit
/// coefficients for the combined condition at `q = q_crit`.
pub fn classify_with(
    inst: &ProblemInstance,
    combined_coefficients: Option<(f64, f64)>,
) -> Result<ThresholdReport> {
    inst.validate()?;
    let gh = gamma_h(inst.n, inst.alpha)?;
    let gc = gamma_crit(inst.n, inst.alpha)?;
    let (beta_minus, beta_plus) = beta_pm(inst.n, inst.alpha, inst.gamma)?;
    let critical = is_critical(inst.n, inst.alpha, inst.gamma)?;
    let q_crit = q_crit_from_betas(inst.n, inst.alpha, beta_minus, beta_plus);

    let governing = if !critical {
        GoverningCondition::H0Positive
    } else if (inst.q - q_crit).abs() <= EQUALITY_RTOL * q_crit.abs().max(1.0) {
        GoverningCondition::CombinedPositive {
            coefficients: combined_coefficients,
        }
    } else if inst.q > q_crit {
        GoverningCondition::H0Positive
    } else {
        GoverningCondition::MassPositive
    };

    let verdict = match governing {
        GoverningCondition::H0Positive => {
            if inst.h0 > 0.0 {
                Verdict::ExistenceGuaranteed
            } else {
                Verdict::ConditionNotMet
            }
        }
        GoverningCondition::MassPositive => match inst.mass {
            None => Verdict::MassUnknown,
            Some(m) => {
                if m > 0.0 {
                    Verdict::ExistenceGuaranteed
                } else {
                    Verdict::ConditionNotMet
                }
            }
        },
        GoverningCondition::CombinedPositive { coefficients } => match inst.mass {
            None => Verdict::MassUnknown,
            Some(m) => match coefficients {
                Some((c1, c2)) => {
                    if c1 * inst.h0 + c2 * m > 0.0 {
                        Verdict::ExistenceGuaranteed
                    } else {
                        Verdict::ConditionNotMet
                    }
                }
                // Symbolic coefficients: certify over all positive (c1, c2).
                None => {
                    if (inst.h0 > 0.0 && m >= 0.0) || (m > 0.0) {
                        Verdict::ExistenceGuaranteed
                    } else {
                        Verdict::ConditionNotMet
                    }
                }
            },
        },
    };

    Ok(ThresholdReport {
        gamma_h: gh,
        gamma_crit: gc,
        beta_minus,
        beta_plus,
        two_star_s: inst.two_star_s(),
        two_star: inst.two_star(),
        q_crit,
        regime: if critical {
            Regime::Critical
        } else {
            Regime::NonCritical
        },
        governing,
        verdict,
        exponent_perturbation: inst.n - inst.q * 0.5 * (inst.n - inst.alpha),
        exponent_mass: beta_plus - beta_minus,
    })
}

/// Classify an instance with symbolic combined-condition coefficients.
pub fn classify(inst: &ProblemInstance) -> Result<ThresholdReport> {
    classify_with(inst, None)
}
