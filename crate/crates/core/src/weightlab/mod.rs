//! Radial weights `h`, represented through `ψ(t) = h(e^t)`.
//!
//! Closed forms are used for the power family `h = r^β`, the log-power family `ψ = t_+^α` and
//! the piecewise-linear lacunary family; custom weights fall back to central differences whose
//! step follows the local metric `τ = (ψ'')^{-1/2}`.

mod ell;
mod lacunary;
mod regime;

use std::fmt;
use std::sync::Arc;

use serde::Serialize;

pub use ell::{companion_ell, CompanionEll, SandwichReport};
pub use lacunary::{
    choose_r_for_phi, GreedyCertificate, GreedyStep, LacunarySequence, SequenceOrigin, GREEDY_HORIZON,
};
pub use regime::{classify, find_flat_point, FlatPoint, ProbeWindow, Regime, RegimeReport};

use crate::{Error, Result};

pub type PsiFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

#[derive(Clone)]
pub enum Family {
    /// `h(r) = r^β`, so `ψ(t) = e^{βt}`.
    PowerExponent { beta: f64 },
    /// `ψ(t) = t_+^α`, i.e. `h(r) = (log⁺ r)^α`.
    LogPower { alpha: f64 },
    /// Piecewise-linear `ψ` on a lacunary sequence.
    Lacunary(LacunarySequence),
    Custom { name: String, psi: PsiFn },
}

impl fmt::Debug for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Family::PowerExponent { beta } => write!(f, "PowerExponent {{ beta: {beta} }}"),
            Family::LogPower { alpha } => write!(f, "LogPower {{ alpha: {alpha} }}"),
            Family::Lacunary(r) => write!(f, "Lacunary({:?})", r.stored()),
            Family::Custom { name, .. } => write!(f, "Custom({name})"),
        }
    }
}

/// A radial weight; `offset` is added to `ψ` (i.e. the weight `e^{-h}` is scaled by
/// `e^{-offset}`).
#[derive(Clone, Debug)]
pub struct Weight {
    family: Family,
    offset: f64,
}

/// `ρ` and `τ` at one location.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct MetricCoefficients {
    /// `ρ(r) = (Δh)^{-1/2}` at radius `r = e^t`.
    pub rho: f64,
    /// `τ(t) = ψ''(t)^{-1/2}`.
    pub tau: f64,
}

impl Weight {
    pub fn new(family: Family) -> Result<Self> {
        match &family {
            Family::PowerExponent { beta } if !(*beta > 0.0 && beta.is_finite()) => {
                return Err(Error::Invalid(format!("power exponent beta = {beta} must be positive")))
            }
            Family::LogPower { alpha } if !(*alpha > 1.0 && alpha.is_finite()) => {
                return Err(Error::Invalid(format!("log-power alpha = {alpha} must exceed 1")))
            }
            _ => {}
        }
        Ok(Weight { family, offset: 0.0 })
    }

    pub fn power(beta: f64) -> Result<Self> {
        Self::new(Family::PowerExponent { beta })
    }

    pub fn log_power(alpha: f64) -> Result<Self> {
        Self::new(Family::LogPower { alpha })
    }

    pub fn custom(name: impl Into<String>, psi: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        Weight { family: Family::Custom { name: name.into(), psi: Arc::new(psi) }, offset: 0.0 }
    }

    /// The lacunary weight `ψ` on `seq`; below `log R_1` it continues as `ψ(t) = t`.
    pub fn theorem3(seq: LacunarySequence) -> Self {
        Weight { family: Family::Lacunary(seq), offset: 0.0 }
    }

    pub fn shifted(&self, c: f64) -> Self {
        Weight { family: self.family.clone(), offset: self.offset + c }
    }

    pub fn family(&self) -> &Family {
        &self.family
    }

    pub fn offset(&self) -> f64 {
        self.offset
    }

    pub fn lacunary(&self) -> Option<&LacunarySequence> {
        match &self.family {
            Family::Lacunary(r) => Some(r),
            _ => None,
        }
    }

    pub fn family_name(&self) -> String {
        match &self.family {
            Family::PowerExponent { beta } => format!("power(beta={beta})"),
            Family::LogPower { alpha } => format!("log-power(alpha={alpha})"),
            Family::Lacunary(r) => format!("theorem3(depth={})", r.depth()),
            Family::Custom { name, .. } => format!("custom({name})"),
        }
    }

    pub fn psi(&self, t: f64) -> f64 {
        self.offset
            + match &self.family {
                Family::PowerExponent { beta } => (beta * t).exp(),
                Family::LogPower { alpha } => {
                    if t > 0.0 {
                        t.powf(*alpha)
                    } else {
                        0.0
                    }
                }
                Family::Lacunary(r) => r.psi(t),
                Family::Custom { psi, .. } => psi(t),
            }
    }

    /// `h(r) = ψ(log r)`.
    pub fn h(&self, r: f64) -> f64 {
        self.psi(r.ln())
    }

    pub fn dpsi(&self, t: f64) -> f64 {
        match &self.family {
            Family::PowerExponent { beta } => beta * (beta * t).exp(),
            Family::LogPower { alpha } => {
                if t > 0.0 {
                    alpha * t.powf(alpha - 1.0)
                } else {
                    0.0
                }
            }
            Family::Lacunary(r) => r.dpsi(t),
            Family::Custom { psi, .. } => {
                let h = self.fd_step(t, 1);
                (psi(t + h) - psi(t - h)) / (2.0 * h)
            }
        }
    }

    pub fn d2psi(&self, t: f64) -> f64 {
        match &self.family {
            Family::PowerExponent { beta } => beta * beta * (beta * t).exp(),
            Family::LogPower { alpha } => {
                if t > 0.0 {
                    alpha * (alpha - 1.0) * t.powf(alpha - 2.0)
                } else {
                    0.0
                }
            }
            // corner atoms are not represented
            Family::Lacunary(_) => 0.0,
            Family::Custom { psi, .. } => {
                let h = self.fd_step(t, 2);
                (psi(t + h) - 2.0 * psi(t) + psi(t - h)) / (h * h)
            }
        }
    }

    pub fn d3psi(&self, t: f64) -> f64 {
        match &self.family {
            Family::PowerExponent { beta } => beta.powi(3) * (beta * t).exp(),
            Family::LogPower { alpha } => {
                if t > 0.0 {
                    alpha * (alpha - 1.0) * (alpha - 2.0) * t.powf(alpha - 3.0)
                } else {
                    0.0
                }
            }
            Family::Lacunary(_) => 0.0,
            Family::Custom { psi, .. } => {
                let h = self.fd_step(t, 3);
                (psi(t + 2.0 * h) - 2.0 * psi(t + h) + 2.0 * psi(t - h) - psi(t - 2.0 * h)) / (2.0 * h * h * h)
            }
        }
    }

    /// Difference step for custom weights: `max(1e-6, 1e-4 τ)` for ψ', widened for higher orders.
    fn fd_step(&self, t: f64, order: u32) -> f64 {
        let Family::Custom { psi, .. } = &self.family else {
            unreachable!("finite differences only for custom weights")
        };
        let h0 = 1e-3;
        let d2 = (psi(t + h0) - 2.0 * psi(t) + psi(t - h0)) / (h0 * h0);
        let tau = if d2 > 0.0 { d2.powf(-0.5).min(1e3) } else { 1.0 };
        match order {
            1 => (1e-4 * tau).max(1e-6),
            2 => (1e-2 * tau).max(1e-4),
            _ => (5e-2 * tau).max(1e-3),
        }
    }

    fn require_smooth(&self, what: &str) -> Result<()> {
        if let Family::Lacunary(_) = self.family {
            return Err(Error::FamilyMismatch { family: self.family_name(), what: what.into() });
        }
        Ok(())
    }

    /// `τ(t) = ψ''(t)^{-1/2}`; `None` where `ψ'' ≤ 0`.
    pub fn tau(&self, t: f64) -> Result<Option<f64>> {
        self.require_smooth("tau")?;
        let d2 = self.d2psi(t);
        Ok((d2 > 0.0).then(|| d2.powf(-0.5)))
    }

    /// Radial Laplacian `Δh(r) = h''(r) + h'(r)/r`, from the radial closed forms where available.
    pub fn laplacian_h(&self, r: f64) -> Result<f64> {
        self.require_smooth("laplacian")?;
        Ok(match &self.family {
            Family::PowerExponent { beta } => beta * beta * r.powf(beta - 2.0),
            Family::LogPower { alpha } => {
                let l = r.ln();
                if l > 0.0 {
                    // h' = α l^{α-1}/r, h'' = α(α-1) l^{α-2}/r² − α l^{α-1}/r²
                    let h1 = alpha * l.powf(alpha - 1.0) / r;
                    let h2 = (alpha * (alpha - 1.0) * l.powf(alpha - 2.0) - alpha * l.powf(alpha - 1.0)) / (r * r);
                    h2 + h1 / r
                } else {
                    0.0
                }
            }
            Family::Custom { .. } => self.d2psi(r.ln()) / (r * r),
            Family::Lacunary(_) => unreachable!(),
        })
    }

    /// `ρ(r) = (Δh(r))^{-1/2}`; `None` where `Δh ≤ 0`.
    pub fn rho(&self, r: f64) -> Result<Option<f64>> {
        let lap = self.laplacian_h(r)?;
        Ok((lap > 0.0).then(|| lap.powf(-0.5)))
    }

    pub fn metric(&self, t: f64) -> Result<Option<MetricCoefficients>> {
        let (tau, rho) = (self.tau(t)?, self.rho(t.exp())?);
        Ok(tau.zip(rho).map(|(tau, rho)| MetricCoefficients { rho, tau }))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tau_matches_rho_for_closed_families() {
        let weights = [Weight::power(2.0).unwrap(), Weight::power(0.7).unwrap(), Weight::log_power(1.5).unwrap()];
        for w in &weights {
            for &t in &[0.3, 1.0, 2.5, 4.0] {
                let m = w.metric(t).unwrap().unwrap();
                assert!((m.tau - m.rho * (-t).exp()).abs() <= 1e-9 * m.tau, "{}", w.family_name());
                assert!((m.tau * w.d2psi(t).sqrt() - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn custom_family_derivatives() {
        let w = Weight::custom("t^2", |t| t * t);
        for &t in &[1.0, 3.0, 7.5] {
            assert!((w.dpsi(t) - 2.0 * t).abs() < 1e-8);
            assert!((w.d2psi(t) - 2.0).abs() < 1e-6);
            assert!(w.d3psi(t).abs() < 1e-3);
        }
        let m = w.metric(2.0).unwrap().unwrap();
        assert!((m.tau - m.rho * (-2f64).exp()).abs() < 1e-9 * m.tau);
    }

    #[test]
    fn lacunary_refuses_metric() {
        let w = Weight::theorem3(LacunarySequence::squaring(4));
        assert!(matches!(w.tau(1.0), Err(Error::FamilyMismatch { .. })));
        assert!(matches!(w.rho(3.0), Err(Error::FamilyMismatch { .. })));
    }

    #[test]
    fn lacunary_psi_is_monotone() {
        for depth in 1..=8 {
            let w = Weight::theorem3(LacunarySequence::squaring(depth));
            let top = w.lacunary().unwrap().log_r(depth + 1);
            let mut prev = w.psi(-2.0);
            let mut t = -2.0;
            while t < top {
                t += top / 2000.0;
                let v = w.psi(t);
                assert!(v >= prev);
                assert!(w.dpsi(t) >= 1.0);
                prev = v;
            }
        }
    }

    #[test]
    fn invalid_parameters() {
        assert!(Weight::power(0.0).is_err());
        assert!(Weight::log_power(1.0).is_err());
    }
}
