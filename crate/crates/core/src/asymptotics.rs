//! Closed-form small-gap asymptotics and regression of the unknown constants.
//!
//! With `m` the contact order and `Λ` the gap coefficient,
//!
//! ```text
//! Cᵢᵢ(ε) = L_m / Λ^{2/m} · ρ_m(ε) + Mᵢ + O(E_m(ε))
//! ρ_2 = |log ε|,            ρ_m = ε^{−(1−2/m)}
//! E_2 = ε^{1/4}|log ε|,     E_m = ε^{1/(2m)}
//! L_2 = π,                  L_m = 2π ∫₀^∞ r dr / (1 + r^m)
//! ```

use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::{gap_profile, ContactCoefficient, ResonatorPair};
use crate::materials::MaterialParams;
use crate::quadrature::adaptive_simpson;
use crate::real::Real;

fn check_order(m: u32) -> Result<()> {
    if m < 2 {
        return Err(Error::Domain {
            what: "m",
            value: m as f64,
            domain: "m >= 2",
        });
    }
    Ok(())
}

fn check_gap<T: Real>(eps: T) -> Result<()> {
    if !(eps > T::zero() && eps < T::one()) {
        return Err(Error::Domain {
            what: "eps",
            value: eps.as_f64(),
            domain: "(0, 1)",
        });
    }
    Ok(())
}

/// Blow-up rate `ρ_m(ε)`.
pub fn rho_m<T: Real>(m: u32, eps: T) -> Result<T> {
    check_order(m)?;
    check_gap(eps)?;
    Ok(if m == 2 {
        -eps.ln()
    } else {
        let p = T::one() - T::lit(2.0) / T::from_usize_lossy(m as usize);
        eps.powf(-p)
    })
}

/// Remainder envelope `E_m(ε)`.
pub fn e_m<T: Real>(m: u32, eps: T) -> Result<T> {
    check_order(m)?;
    check_gap(eps)?;
    Ok(if m == 2 {
        eps.powf(T::lit(0.25)) * -eps.ln()
    } else {
        eps.powf(T::one() / T::from_usize_lossy(2 * m as usize))
    })
}

/// Shape constant `L_m` in closed form: `π` for `m = 2`, `2π (π/m) / sin(2π/m)` otherwise.
pub fn l_m<T: Real>(m: u32) -> Result<T> {
    check_order(m)?;
    if m == 2 {
        return Ok(T::PI());
    }
    let mm = T::from_usize_lossy(m as usize);
    let two_pi = T::lit(2.0) * T::PI();
    Ok(two_pi * (T::PI() / mm) / (two_pi / mm).sin())
}

/// `L_m` from its defining integral (`m > 2`), mapped to `[0, 1)` by `r = t/(1 − t)`.
pub fn l_m_quadrature(m: u32) -> Result<f64> {
    if m <= 2 {
        return Err(Error::Domain {
            what: "m",
            value: m as f64,
            domain: "m > 2 (the integral diverges at m = 2)",
        });
    }
    let f = |t: f64| {
        if t >= 1.0 {
            // r^{1−m} · r² → 1 for m = 3, 0 beyond
            return if m == 3 { 1.0 } else { 0.0 };
        }
        let r = t / (1.0 - t);
        r / (1.0 + r.powi(m as i32)) / ((1.0 - t) * (1.0 - t))
    };
    Ok(2.0 * std::f64::consts::PI * adaptive_simpson(&f, 0.0, 1.0, 1e-13))
}

/// Asymptotic description of one pair geometry.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AsymptoticModel<T> {
    pub m: u32,
    pub lambda: ContactCoefficient<T>,
    pub l_m: T,
    /// Fitted or supplied `M₁, M₂`.
    pub constants: [Option<T>; 2],
    pub volumes: [T; 2],
    pub materials: Option<MaterialParams<T>>,
}

/// `Cᵢᵢ` estimate; `complete` is false when `Mᵢ` was unavailable.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct DiagonalEstimate<T> {
    pub leading: T,
    pub value: T,
    pub complete: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct OmegaEstimate<T> {
    /// `√(δ v_b² C_*)`, present when `C_*` was supplied.
    pub omega1: Option<T>,
    pub omega2: T,
    /// `√(δ/ρ_m) + δ` with unit constants; a diagnostic, not a bound.
    pub band: T,
}

impl<T: Real> AsymptoticModel<T> {
    pub fn new(m: u32, lambda: ContactCoefficient<T>, volumes: [T; 2]) -> Result<Self> {
        let l = l_m(m)?;
        if !(lambda.effective() > T::zero()) {
            return Err(Error::Domain {
                what: "Lambda",
                value: lambda.effective().as_f64(),
                domain: "(0, inf)",
            });
        }
        Ok(AsymptoticModel {
            m,
            lambda,
            l_m: l,
            constants: [None, None],
            volumes,
            materials: None,
        })
    }

    pub fn for_pair(pair: &ResonatorPair<T>, volumes: [T; 2]) -> Result<Self> {
        let profile = gap_profile(pair);
        Self::new(profile.order, profile.lambda, volumes)
    }

    pub fn with_constants(mut self, m1: T, m2: T) -> Self {
        self.constants = [Some(m1), Some(m2)];
        self
    }

    pub fn with_materials(mut self, materials: MaterialParams<T>) -> Self {
        self.materials = Some(materials);
        self
    }

    /// `L_m / Λ^{2/m}`; for an anisotropic quadratic contact `π/√(Λ₁Λ₂)`.
    pub fn leading_coefficient(&self) -> T {
        let exponent = T::lit(2.0) / T::from_usize_lossy(self.m as usize);
        self.l_m / self.lambda.effective().powf(exponent)
    }

    pub fn rho(&self, eps: T) -> Result<T> {
        rho_m(self.m, eps)
    }

    pub fn envelope(&self, eps: T) -> Result<T> {
        e_m(self.m, eps)
    }
}

/// `Cᵢᵢ(ε) ≈ L_m/Λ^{2/m} ρ_m(ε) + Mᵢ` for body `i ∈ {1, 2}`.
pub fn cii_asymptotic<T: Real>(model: &AsymptoticModel<T>, i: usize, eps: T) -> Result<DiagonalEstimate<T>> {
    if !(1..=2).contains(&i) {
        return Err(Error::Domain {
            what: "body index",
            value: i as f64,
            domain: "{1, 2}",
        });
    }
    let leading = model.leading_coefficient() * model.rho(eps)?;
    Ok(match model.constants[i - 1] {
        Some(m) => DiagonalEstimate {
            leading,
            value: leading + m,
            complete: true,
        },
        None => DiagonalEstimate {
            leading,
            value: leading,
            complete: false,
        },
    })
}

/// Leading-order resonances. `c_star` comes from a numeric run, since the
/// asymptotics leave it as an O(1) unknown.
pub fn omega_asymptotic<T: Real>(model: &AsymptoticModel<T>, eps: T, c_star: Option<T>) -> Result<OmegaEstimate<T>> {
    let materials = model
        .materials
        .ok_or_else(|| Error::Unsupported("resonance asymptotics need material parameters".into()))?;
    let delta = materials.delta();
    if !(delta > T::zero() && delta < T::one()) {
        return Err(Error::Domain {
            what: "delta",
            value: delta.as_f64(),
            domain: "(0, 1)",
        });
    }
    let vb2 = materials.v_b() * materials.v_b();
    let rho = model.rho(eps)?;
    let inv_volumes = T::one() / model.volumes[0] + T::one() / model.volumes[1];
    let omega2 = (delta * vb2 * inv_volumes * model.leading_coefficient() * rho).sqrt();
    let omega1 = c_star.map(|c| (delta * vb2 * c).sqrt());
    Ok(OmegaEstimate {
        omega1,
        omega2,
        band: (delta / rho).sqrt() + delta,
    })
}

/// Gap `ε(δ)` that makes `ω₂ ∼ δ^{β/2}`:
/// `exp(−δ^{β−1})` for `m = 2`, `δ^{(1−β)/(1−2/m)}` for `m > 2`.
pub fn scaling_regimes<T: Real>(m: u32, delta: T, beta: T) -> Result<T> {
    check_order(m)?;
    if !(beta > T::zero() && beta < T::one()) {
        return Err(Error::Domain {
            what: "beta",
            value: beta.as_f64(),
            domain: "(0, 1)",
        });
    }
    if !(delta > T::zero() && delta < T::one()) {
        return Err(Error::Domain {
            what: "delta",
            value: delta.as_f64(),
            domain: "(0, 1)",
        });
    }
    Ok(if m == 2 {
        (-delta.powf(beta - T::one())).exp()
    } else {
        let p = T::one() - T::lit(2.0) / T::from_usize_lossy(m as usize);
        delta.powf((T::one() - beta) / p)
    })
}

/// Least-squares line `y = a + b x`; returns `(a, b)`.
pub fn linear_fit<T: Real>(x: &[T], y: &[T]) -> Result<(T, T)> {
    if x.len() != y.len() || x.len() < 2 {
        return Err(Error::InsufficientData(format!(
            "line fit needs two or more paired points, got {} and {}",
            x.len(),
            y.len()
        )));
    }
    let n = T::from_usize_lossy(x.len());
    let mx = x.iter().copied().sum::<T>() / n;
    let my = y.iter().copied().sum::<T>() / n;
    let sxx: T = x.iter().map(|&v| (v - mx) * (v - mx)).sum();
    let sxy: T = x.iter().zip(y).map(|(&u, &v)| (u - mx) * (v - my)).sum();
    if sxx == T::zero() {
        return Err(Error::InsufficientData("line fit needs distinct abscissae".into()));
    }
    let b = sxy / sxx;
    Ok((my - b * mx, b))
}

/// Slope of `log y` against `log x`.
pub fn loglog_slope<T: Real>(x: &[T], y: &[T]) -> Result<T> {
    if x.iter().chain(y).any(|&v| !(v > T::zero())) {
        return Err(Error::Domain {
            what: "log-log data",
            value: f64::NAN,
            domain: "positive values",
        });
    }
    let lx: Vec<T> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<T> = y.iter().map(|v| v.ln()).collect();
    Ok(linear_fit(&lx, &ly)?.1)
}

/// Fit of one diagonal entry: `Cᵢᵢ − L ρ_m ≈ M`, residuals held against `κ E_m`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConstantFit<T> {
    pub constant: T,
    /// Smallest κ with `|residual| ≤ κ E_m(ε)` at every point.
    pub envelope_coefficient: T,
    /// `Cᵢᵢ − L ρ_m − M` per point.
    pub residuals: Vec<T>,
    /// Residuals divided by `E_m(ε)`.
    pub scaled_residuals: Vec<T>,
    /// Free slope of `Cᵢᵢ` against `ρ_m`.
    pub free_slope: T,
    /// Set when the free slope is off the theoretical coefficient by more than 25%.
    pub slope_mismatch: bool,
}

/// Constant fits on two disjoint halves of the sweep.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct WindowStability<T> {
    /// `(M_large_eps_window, M_small_eps_window)`.
    pub constants: (T, T),
    pub difference: T,
    /// `|κ| · E_m` at the largest ε of the large-ε window.
    pub envelope: T,
    pub stable: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FitReport<T> {
    pub fits: [ConstantFit<T>; 2],
    pub windows: [Option<WindowStability<T>>; 2],
}

impl<T: Real> FitReport<T> {
    pub fn constants(&self) -> [T; 2] {
        [self.fits[0].constant, self.fits[1].constant]
    }
}

const MIN_FIT_POINTS: usize = 5;
const SLOPE_MISMATCH: f64 = 0.25;

fn fit_one<T: Real>(model: &AsymptoticModel<T>, eps: &[T], c: &[T]) -> Result<ConstantFit<T>> {
    let lead = model.leading_coefficient();
    let rho: Vec<T> = eps.iter().map(|&e| model.rho(e)).collect::<Result<_>>()?;
    let env: Vec<T> = eps.iter().map(|&e| model.envelope(e)).collect::<Result<_>>()?;
    let y: Vec<T> = c.iter().zip(&rho).map(|(&c, &r)| c - lead * r).collect();
    let constant = y.iter().copied().sum::<T>() / T::from_usize_lossy(y.len());
    let residuals: Vec<T> = y.iter().map(|&v| v - constant).collect();
    let scaled_residuals: Vec<T> = residuals.iter().zip(&env).map(|(&r, &e)| r / e).collect();
    let kappa = scaled_residuals.iter().fold(T::zero(), |m, r| m.max(r.abs()));
    let free_slope = linear_fit(&rho, c)?.1;
    let slope_mismatch = ((free_slope / lead) - T::one()).abs() > T::lit(SLOPE_MISMATCH);
    Ok(ConstantFit {
        constant,
        envelope_coefficient: kappa,
        residuals,
        scaled_residuals,
        free_slope,
        slope_mismatch,
    })
}

/// Fit `M₁, M₂` from a sweep `(ε, C₁₁, C₂₂)`. Requires five or more points
/// spanning two decades of `ε` or of `ρ_m`.
pub fn fit_constants<T: Real>(model: &AsymptoticModel<T>, eps: &[T], c11: &[T], c22: &[T]) -> Result<FitReport<T>> {
    if eps.len() != c11.len() || eps.len() != c22.len() {
        return Err(Error::InsufficientData("sweep columns differ in length".into()));
    }
    if eps.len() < MIN_FIT_POINTS {
        return Err(Error::InsufficientData(format!(
            "{} sweep points, need {MIN_FIT_POINTS}",
            eps.len()
        )));
    }
    let (lo, hi) = eps
        .iter()
        .fold((T::infinity(), T::zero()), |(lo, hi), &e| (lo.min(e), hi.max(e)));
    let (rho_lo, rho_hi) = (model.rho(hi)?, model.rho(lo)?);
    let decades = |a: T, b: T| (b / a).log10();
    let span = decades(lo, hi).max(decades(rho_lo, rho_hi));
    if span < T::lit(2.0) {
        return Err(Error::InsufficientData(format!(
            "sweep spans {:.2} decades, need 2",
            span.as_f64()
        )));
    }
    let fits = [fit_one(model, eps, c11)?, fit_one(model, eps, c22)?];
    let windows = [
        window_stability(model, eps, c11, fits[0].envelope_coefficient),
        window_stability(model, eps, c22, fits[1].envelope_coefficient),
    ];
    Ok(FitReport { fits, windows })
}

fn window_stability<T: Real>(model: &AsymptoticModel<T>, eps: &[T], c: &[T], kappa: T) -> Option<WindowStability<T>> {
    let mut order: Vec<usize> = (0..eps.len()).collect();
    order.sort_by(|&a, &b| eps[b].partial_cmp(&eps[a]).unwrap_or(std::cmp::Ordering::Equal));
    let half = order.len() / 2;
    if half < 3 {
        return None;
    }
    let window = |idx: &[usize]| -> Option<T> {
        let e: Vec<T> = idx.iter().map(|&k| eps[k]).collect();
        let v: Vec<T> = idx.iter().map(|&k| c[k]).collect();
        fit_one(model, &e, &v).ok().map(|f| f.constant)
    };
    let large = window(&order[..half])?;
    let small = window(&order[order.len() - half..])?;
    let envelope = kappa.abs() * model.envelope(eps[order[0]]).ok()?;
    let difference = (large - small).abs();
    Some(WindowStability {
        constants: (large, small),
        difference,
        envelope,
        stable: difference <= envelope,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    #[test]
    fn rate_tables() {
        assert_relative_eq!(rho_m(2, (-10.0f64).exp()).unwrap(), 10.0, max_relative = 1e-14);
        assert_relative_eq!(rho_m(4, 1e-4f64).unwrap(), 100.0, max_relative = 1e-12);
        assert_relative_eq!(rho_m(3, 1e-3f64).unwrap(), 10.0, max_relative = 1e-12);
        assert_relative_eq!(e_m(2, 1e-4f64).unwrap(), 0.1 * 1e4f64.ln(), max_relative = 1e-12);
        assert_relative_eq!(e_m(4, 1e-8f64).unwrap(), 0.1, max_relative = 1e-12);
        assert!(rho_m(2, 1.0f64).is_err());
        assert!(e_m(1, 0.1f64).is_err());
    }

    #[test]
    fn envelopes_shrink_and_rates_grow_toward_contact() {
        // ε^{1/4}|log ε| peaks at ε = e⁻⁴; the asymptotic regime lies below it
        for m in 2..=6 {
            let grid: Vec<f64> = (0..30).map(|k| 1e-2 * 10f64.powf(-0.3 * k as f64)).collect();
            for w in grid.windows(2) {
                assert!(e_m(m, w[1]).unwrap() < e_m(m, w[0]).unwrap());
                assert!(rho_m(m, w[1]).unwrap() > rho_m(m, w[0]).unwrap());
            }
        }
    }

    #[test]
    fn shape_constants() {
        assert_eq!(l_m::<f64>(2).unwrap(), PI);
        assert_relative_eq!(l_m::<f64>(4).unwrap(), PI * PI / 2.0, max_relative = 1e-14);
        assert_relative_eq!(l_m::<f64>(3).unwrap(), 7.5976, max_relative = 1e-4);
        for m in 3..=12 {
            let closed = l_m::<f64>(m).unwrap();
            let quad = l_m_quadrature(m).unwrap();
            assert!((closed - quad).abs() < 1e-9, "m={m}: {closed} vs {quad}");
        }
    }

    #[test]
    fn leading_terms() {
        let model = AsymptoticModel::new(2, ContactCoefficient::Isotropic(1.0), [1.0, 1.0]).unwrap();
        let c = cii_asymptotic(&model, 1, (-8.0f64).exp()).unwrap();
        assert_relative_eq!(c.leading, 8.0 * PI, max_relative = 1e-12);
        assert!(!c.complete);
        let model4 = AsymptoticModel::new(4, ContactCoefficient::Isotropic(0.5), [1.0, 1.0]).unwrap();
        let c4 = cii_asymptotic(&model4, 1, 1e-4).unwrap();
        assert_relative_eq!(c4.leading, 697.89, max_relative = 1e-5);
        for m in [2, 3, 4, 7] {
            let a = AsymptoticModel::new(m, ContactCoefficient::Isotropic(0.3), [1.0, 1.0]).unwrap();
            let b = AsymptoticModel::new(m, ContactCoefficient::Isotropic(0.6), [1.0, 1.0]).unwrap();
            let ratio = cii_asymptotic(&b, 2, 1e-3).unwrap().leading / cii_asymptotic(&a, 2, 1e-3).unwrap().leading;
            assert_relative_eq!(ratio, 2f64.powf(-2.0 / m as f64), max_relative = 1e-13);
        }
        let with_m = model.with_constants(7.0, 7.0);
        assert_relative_eq!(cii_asymptotic(&with_m, 2, 0.01).unwrap().value, PI * 100f64.ln() + 7.0);
    }

    #[test]
    fn anisotropic_quadratic_contact() {
        let model = AsymptoticModel::new(2, ContactCoefficient::Anisotropic(0.5, 2.0), [1.0, 1.0]).unwrap();
        assert_relative_eq!(model.leading_coefficient(), PI);
    }

    #[test]
    fn resonance_asymptotics() {
        let vol = 4.0 * PI / 3.0;
        let model = AsymptoticModel::new(2, ContactCoefficient::Isotropic(1.0), [vol, vol])
            .unwrap()
            .with_materials(MaterialParams::from_contrast(1e-3, 1.0).unwrap());
        let w = omega_asymptotic(&model, (-8.0f64).exp(), None).unwrap();
        assert_relative_eq!(w.omega2, (1e-3 * (2.0 * 3.0 / (4.0 * PI)) * PI * 8.0f64).sqrt(), max_relative = 1e-12);
        assert!((w.omega2 - 0.10954).abs() < 1e-4);
        assert!(w.omega1.is_none());
        let w1 = omega_asymptotic(&model, 1e-3, Some(2.0)).unwrap();
        assert_relative_eq!(w1.omega1.unwrap(), 0.002f64.sqrt());
        let ratios: Vec<f64> = [1e-2, 1e-4, 1e-6]
            .iter()
            .map(|&e| {
                let w = omega_asymptotic(&model, e, Some(2.0)).unwrap();
                w.omega2 / w.omega1.unwrap() / rho_m(2, e).unwrap().sqrt()
            })
            .collect();
        assert_relative_eq!(ratios[0], ratios[2], max_relative = 1e-12);
        let bare = AsymptoticModel::new(2, ContactCoefficient::Isotropic(1.0), [vol, vol]).unwrap();
        assert!(omega_asymptotic(&bare, 0.1, None).is_err());
    }

    #[test]
    fn coupled_scalings() {
        let e2 = scaling_regimes(2, 1e-3f64, 0.5).unwrap();
        assert_relative_eq!(e2, (-(1e-3f64).powf(-0.5)).exp(), max_relative = 1e-12);
        assert_relative_eq!(scaling_regimes(4, 1e-3f64, 0.5).unwrap(), 1e-3, max_relative = 1e-12);
        for m in [2, 4] {
            for delta in [1e-2, 1e-3, 1e-4, 1e-5] {
                let eps = scaling_regimes(m, delta, 0.5f64).unwrap();
                let product = rho_m(m, eps).unwrap() * delta;
                assert_relative_eq!(product, delta.powf(0.5), max_relative = 1e-10);
            }
        }
        assert!(scaling_regimes(2, 1e-3f64, 1.0).is_err());
    }

    fn synthetic(grid: &[f64], noise: f64) -> Vec<f64> {
        grid.iter()
            .map(|&e| PI * e.ln().abs() + 7.0 + noise * e_m(2, e).unwrap())
            .collect()
    }

    #[test]
    fn constant_fit_round_trip() {
        let model = AsymptoticModel::new(2, ContactCoefficient::Isotropic(1.0), [1.0, 1.0]).unwrap();
        let grid: Vec<f64> = (0..10).map(|k| (-2.0 - 1.5 * k as f64).exp()).collect();
        let c = synthetic(&grid, 0.1);
        let report = fit_constants(&model, &grid, &c, &c).unwrap();
        let e_max = grid.iter().map(|&e| e_m(2, e).unwrap()).fold(0.0, f64::max);
        assert!((report.fits[0].constant - 7.0).abs() < 0.1 * e_max);
        assert!(!report.fits[0].slope_mismatch);
        let kappa = report.fits[0].envelope_coefficient;
        assert!(report.fits[0].scaled_residuals.iter().all(|r| r.abs() <= kappa));
        let w = report.windows[0].as_ref().unwrap();
        assert!(w.stable, "{w:?}");
    }

    #[test]
    fn misuse_is_detected() {
        let model = AsymptoticModel::new(2, ContactCoefficient::Isotropic(1.0), [1.0, 1.0]).unwrap();
        let grid: Vec<f64> = (0..10).map(|k| (-2.0 - 1.5 * k as f64).exp()).collect();
        let flat = vec![3.0; grid.len()];
        let report = fit_constants(&model, &grid, &flat, &flat).unwrap();
        assert!(report.fits[0].slope_mismatch);
        let short: Vec<f64> = vec![0.1, 0.09, 0.08, 0.07, 0.06];
        let c = synthetic(&short, 0.0);
        assert!(matches!(
            fit_constants(&model, &short, &c, &c),
            Err(Error::InsufficientData(_))
        ));
        assert!(fit_constants(&model, &grid[..4], &c[..4], &c[..4]).is_err());
    }

    #[test]
    fn slopes() {
        let x = [1.0, 10.0, 100.0];
        let y = [2.0, 2.0 * 10f64.sqrt(), 20.0];
        assert_relative_eq!(loglog_slope(&x, &y).unwrap(), 0.5, max_relative = 1e-12);
        assert!(loglog_slope(&[1.0, -1.0], &[1.0, 1.0]).is_err());
        let (a, b) = linear_fit(&[0.0, 1.0, 2.0], &[1.0, 3.0, 5.0]).unwrap();
        assert_relative_eq!(a, 1.0);
        assert_relative_eq!(b, 2.0);
    }
}
