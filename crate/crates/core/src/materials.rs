//! Material constants of the resonators and the background medium.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::real::Real;

/// Densities and bulk moduli: `ρ, κ` outside, `ρ_b, κ_b` inside the bubbles.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MaterialParams<T> {
    pub rho: T,
    pub rho_b: T,
    pub kappa: T,
    pub kappa_b: T,
}

impl<T: Real> MaterialParams<T> {
    pub fn new(rho: T, rho_b: T, kappa: T, kappa_b: T) -> Result<Self> {
        for (what, v) in [("rho", rho), ("rho_b", rho_b), ("kappa", kappa), ("kappa_b", kappa_b)] {
            if !(v > T::zero() && v.is_finite()) {
                return Err(Error::Domain {
                    what,
                    value: v.as_f64(),
                    domain: "(0, inf)",
                });
            }
        }
        Ok(MaterialParams { rho, rho_b, kappa, kappa_b })
    }

    /// Parameters with the given contrast `δ` and interior speed `v_b`; the
    /// exterior medium is normalized to `ρ = κ = 1`.
    pub fn from_contrast(delta: T, v_b: T) -> Result<Self> {
        if !(delta > T::zero() && delta < T::one()) {
            return Err(Error::Domain {
                what: "delta",
                value: delta.as_f64(),
                domain: "(0, 1)",
            });
        }
        if !(v_b > T::zero() && v_b.is_finite()) {
            return Err(Error::Domain {
                what: "v_b",
                value: v_b.as_f64(),
                domain: "(0, inf)",
            });
        }
        Self::new(T::one(), delta, T::one(), v_b * v_b * delta)
    }

    /// Density contrast `δ = ρ_b / ρ`.
    pub fn delta(&self) -> T {
        self.rho_b / self.rho
    }

    pub fn v(&self) -> T {
        (self.kappa / self.rho).sqrt()
    }

    pub fn v_b(&self) -> T {
        (self.kappa_b / self.rho_b).sqrt()
    }

    /// Speed ratio `v / v_b`. Carried along; no leading-order formula uses it.
    pub fn tau(&self) -> T {
        self.v() / self.v_b()
    }
}
