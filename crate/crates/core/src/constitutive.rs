//! Van Genuchten moisture content and hydraulic conductivity.

use libm::{exp, log};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConstitutiveError {
    #[error("parameter `{name}` out of range: {value}")]
    InvalidParameter { name: &'static str, value: f64 },
    #[error("pressure head is not finite: {0}")]
    NonFinite(f64),
}

/// Soil and fluid constants.
///
/// `s(p) = alpha (s_s - s_r) / (alpha + |p|^beta) + s_r` and
/// `K(p) = k_s a / (a + |p|^gamma)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VanGenuchtenParams {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub a: f64,
    pub s_s: f64,
    pub s_r: f64,
    pub k_s: f64,
    pub rho: f64,
    pub phi: f64,
    /// Treat `p >= 0` as fully saturated (constant curves, zero slopes).
    pub clamp_saturated: bool,
}

impl VanGenuchtenParams {
    /// Loam-like sample soil used for the 1D infiltration benchmark.
    pub const fn infiltration_1d() -> Self {
        Self {
            alpha: 1.611e6,
            beta: 3.96,
            gamma: 4.74,
            a: 1.175e6,
            s_s: 0.287,
            s_r: 0.075,
            k_s: 0.00944,
            rho: 1.0,
            phi: 1.0,
            clamp_saturated: false,
        }
    }

    pub fn validate(&self) -> Result<(), ConstitutiveError> {
        let checks: [(&'static str, f64, bool); 9] = [
            ("alpha", self.alpha, self.alpha > 0.0),
            ("a", self.a, self.a > 0.0),
            ("beta", self.beta, self.beta > 1.0),
            ("gamma", self.gamma, self.gamma > 1.0),
            ("k_s", self.k_s, self.k_s > 0.0),
            ("s_r", self.s_r, self.s_r >= 0.0 && self.s_r < self.s_s),
            ("s_s", self.s_s, self.s_s <= 1.0),
            ("rho", self.rho, self.rho > 0.0),
            ("phi", self.phi, self.phi > 0.0),
        ];
        for (name, value, ok) in checks {
            if !ok || !value.is_finite() {
                return Err(ConstitutiveError::InvalidParameter { name, value });
            }
        }
        Ok(())
    }

    pub fn saturation(&self, p: f64) -> Result<f64, ConstitutiveError> {
        finite(p).map(|p| self.s(p))
    }

    pub fn conductivity(&self, p: f64) -> Result<f64, ConstitutiveError> {
        finite(p).map(|p| self.k(p))
    }

    pub fn d_saturation(&self, p: f64) -> Result<f64, ConstitutiveError> {
        finite(p).map(|p| self.ds(p))
    }

    pub fn d_conductivity(&self, p: f64) -> Result<f64, ConstitutiveError> {
        finite(p).map(|p| self.dk(p))
    }

    /// Unchecked `s(p)`; callers guarantee a finite argument.
    #[inline]
    pub fn s(&self, p: f64) -> f64 {
        if self.clamp_saturated && p >= 0.0 {
            return self.s_s;
        }
        self.alpha * (self.s_s - self.s_r) / (self.alpha + abs_pow(p, self.beta)) + self.s_r
    }

    #[inline]
    pub fn k(&self, p: f64) -> f64 {
        if self.clamp_saturated && p >= 0.0 {
            return self.k_s;
        }
        self.k_s * self.a / (self.a + abs_pow(p, self.gamma))
    }

    #[inline]
    pub fn ds(&self, p: f64) -> f64 {
        if p == 0.0 || (self.clamp_saturated && p > 0.0) {
            return 0.0;
        }
        let den = self.alpha + abs_pow(p, self.beta);
        -self.alpha * self.beta * abs_pow(p, self.beta - 1.0) * sign(p) * (self.s_s - self.s_r)
            / (den * den)
    }

    #[inline]
    pub fn dk(&self, p: f64) -> f64 {
        if p == 0.0 || (self.clamp_saturated && p > 0.0) {
            return 0.0;
        }
        let den = self.a + abs_pow(p, self.gamma);
        -self.a * self.gamma * self.k_s * abs_pow(p, self.gamma - 1.0) * sign(p) / (den * den)
    }
}

fn finite(p: f64) -> Result<f64, ConstitutiveError> {
    if p.is_finite() {
        Ok(p)
    } else {
        Err(ConstitutiveError::NonFinite(p))
    }
}

#[inline]
fn sign(p: f64) -> f64 {
    if p > 0.0 {
        1.0
    } else {
        -1.0
    }
}

/// `|p|^e` as `exp(e ln|p|)`, with `|p| = 0` mapped to 0.
#[inline]
pub fn abs_pow(p: f64, e: f64) -> f64 {
    let m = p.abs();
    if m == 0.0 {
        0.0
    } else {
        exp(e * log(m))
    }
}
