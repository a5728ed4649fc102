//! Certificates of Fourier structure and of (weak) characters of order 1
//! and 2, plus the stability diagnostics tying weak quadratic characters to
//! approximate invariance under the denoising lift.
//!
//! A certificate never asserts existential parameters: it records what was
//! *measured* on the given function and, where a closed-form bound exists,
//! compares measurement against bound as an inequality.
//!
//! Order-1 structure is certified through the top-R Fourier projection
//! (which is L²-optimal among R-term character combinations by Parseval),
//! not through the U²-dual-norm formulation; each report names the notion
//! it certifies.

use crate::fourier_ops::{lift, InvariantOperator};
use crate::group::{fourier_transform, mult_derivative, DualCharacter, GroupFunction};
use crate::spectral::{eigendecompose, is_theta_isolated};
use crate::util::sum_f64;
use crate::zmatrix::{outer, ZMatrix};
use crate::{HofaError, Result};
use rayon::prelude::*;
use serde::Serialize;

/// Certifies that `f` is within L² distance `residual` of a combination of
/// at most `r` characters (the optimal such combination: the top-`r`
/// Fourier projection).
#[derive(Debug, Clone, Serialize)]
pub struct FourierStructureCertificate {
    pub r: usize,
    pub residual: f64,
    /// Dual indices of the kept characters (zero-modulus coefficients are
    /// dropped, so the support may be smaller than `r`).
    pub support: Vec<usize>,
}

/// Order-`k` character certificate: every multiplicative derivative
/// `Δ_t f` is within `delta` of an `r`-term character combination.
#[derive(Debug, Clone, Serialize)]
pub struct CharacterCertificate {
    pub order: u32,
    pub r: usize,
    /// Worst per-shift structure residual.
    pub delta: f64,
    pub per_shift_residuals: Vec<f64>,
    pub worst_t: usize,
}

/// Weak variant: the `(r, delta1)` structure test on `Δ_t f` may fail on a
/// `delta2` fraction of shifts.
#[derive(Debug, Clone, Serialize)]
pub struct WeakCharacterCertificate {
    pub r: usize,
    pub delta1: f64,
    pub delta2: f64,
    pub good_set_size: usize,
}

fn ranked_dual_indices(f: &GroupFunction) -> (GroupFunction, Vec<usize>) {
    let fhat = fourier_transform(f);
    let mut idx: Vec<usize> = (0..f.len()).collect();
    // descending modulus; ties keep the lexicographically smaller dual index
    idx.sort_by(|&a, &b| {
        fhat.values()[b]
            .norm()
            .partial_cmp(&fhat.values()[a].norm())
            .unwrap()
            .then(a.cmp(&b))
    });
    (fhat, idx)
}

/// Measure how close `f` is to an `r`-term character combination.
pub fn fourier_structure(f: &GroupFunction, r: usize) -> FourierStructureCertificate {
    let (fhat, idx) = ranked_dual_indices(f);
    let keep = r.min(f.len());
    let mut support: Vec<usize> = idx[..keep]
        .iter()
        .copied()
        .filter(|&i| fhat.values()[i].norm() > 0.0)
        .collect();
    support.sort_unstable();
    let residual = sum_f64(idx[keep..].iter().map(|&i| fhat.values()[i].norm_sqr()))
        .max(0.0)
        .sqrt();
    FourierStructureCertificate {
        r,
        residual,
        support,
    }
}

fn require_unit_l2(f: &GroupFunction) -> Result<()> {
    let n = f.norm_l2();
    if n > 1.0 + 1e-9 {
        return Err(HofaError::BadParameter(format!(
            "certificate requires ‖f‖₂ ≤ 1, got {n}"
        )));
    }
    Ok(())
}

/// Best single-character approximation: the argmax-modulus character and
/// the L² residual `(‖f‖₂² − ‖f̂‖_∞²)^{1/2}`.
pub fn order1_certificate(f: &GroupFunction) -> Result<(DualCharacter, f64)> {
    require_unit_l2(f)?;
    let (fhat, idx) = ranked_dual_indices(f);
    let best = idx[0];
    let residual = (f.norm_l2().powi(2) - fhat.values()[best].norm_sqr())
        .max(0.0)
        .sqrt();
    Ok((DualCharacter::from_index(f.group().clone(), best), residual))
}

fn shift_residuals(f: &GroupFunction, r: usize) -> Vec<f64> {
    (0..f.len())
        .into_par_iter()
        .map(|t| fourier_structure(&mult_derivative(f, t), r).residual)
        .collect()
}

/// Order-2 certificate: worst-case structure residual of the derivatives
/// `Δ_t f` over all shifts.
pub fn quadratic_certificate(f: &GroupFunction, r: usize) -> Result<CharacterCertificate> {
    require_unit_l2(f)?;
    let per_shift_residuals = shift_residuals(f, r);
    let mut worst_t = 0;
    for (t, &res) in per_shift_residuals.iter().enumerate() {
        if res > per_shift_residuals[worst_t] {
            worst_t = t;
        }
    }
    Ok(CharacterCertificate {
        order: 2,
        r,
        delta: per_shift_residuals[worst_t],
        per_shift_residuals,
        worst_t,
    })
}

/// Weak order-2 certificate: fraction of shifts whose derivative fails the
/// `(r, delta1)` structure test.
pub fn weak_quadratic_certificate(
    f: &GroupFunction,
    r: usize,
    delta1: f64,
) -> Result<WeakCharacterCertificate> {
    require_unit_l2(f)?;
    let residuals = shift_residuals(f, r);
    let good = residuals.iter().filter(|&&res| res <= delta1).count();
    Ok(WeakCharacterCertificate {
        r,
        delta1,
        delta2: (f.len() - good) as f64 / f.len() as f64,
        good_set_size: good,
    })
}

/// `‖𝒦_ε(f⊗f̄) − f⊗f̄‖₂`: how far `f⊗f̄` moves under per-diagonal denoising.
pub fn k_eps_residual(f: &GroupFunction, eps: f64) -> Result<f64> {
    let m = outer(f, f)?;
    let km = lift(&InvariantOperator::Denoise(eps), &m)?;
    Ok(km.sub_mat(&m)?.l2_norm())
}

/// Report of both directions of the stability correspondence between weak
/// quadratic characters and approximate `𝒦_ε`-invariance.
#[derive(Debug, Clone, Serialize)]
pub struct StabilityReport {
    pub eps: f64,
    pub gamma: f64,
    pub delta: f64,
    /// Measured `‖𝒦_ε(f⊗f̄) − f⊗f̄‖₂`.
    pub residual: f64,
    /// Direction (i): when `residual ≤ gamma`, the weak certificate the
    /// theory promises at parameters `(4/(ε²δ²), (2γ/δ)^{1/2}, δ)` —
    /// measured on `f`, with `R` clamped to `|Z|`.
    pub implied_certificate: Option<WeakCharacterCertificate>,
    /// Direction (i) passes when the measured `delta2` is at most `delta`.
    pub direction_i_pass: Option<bool>,
    /// Direction (ii): bound `6ε^{1/4}R^{1/2} + 4δ₁ + 2δ₂^{1/2}` computed
    /// from the measured certificate.
    pub residual_bound: Option<f64>,
    pub direction_ii_pass: Option<bool>,
}

/// Run both directions of the weak-character / invariance correspondence
/// on a 1-bounded function.
pub fn stability_correspondence(
    f: &GroupFunction,
    eps: f64,
    gamma: f64,
    delta: f64,
) -> Result<StabilityReport> {
    if f.norm_inf() > 1.0 + 1e-9 {
        return Err(HofaError::BadParameter(format!(
            "stability correspondence requires ‖f‖_∞ ≤ 1, got {}",
            f.norm_inf()
        )));
    }
    for (name, v) in [("eps", eps), ("gamma", gamma), ("delta", delta)] {
        if !(v > 0.0 && v <= 1.0) {
            return Err(HofaError::BadParameter(format!("{name} must lie in (0,1], got {v}")));
        }
    }
    let residual = k_eps_residual(f, eps)?;
    let mut report = StabilityReport {
        eps,
        gamma,
        delta,
        residual,
        implied_certificate: None,
        direction_i_pass: None,
        residual_bound: None,
        direction_ii_pass: None,
    };
    if residual <= gamma {
        let r_implied = (4.0 / (eps * eps * delta * delta)).ceil();
        let r = if r_implied >= f.len() as f64 {
            f.len()
        } else {
            r_implied as usize
        };
        let delta1 = (2.0 * gamma / delta).sqrt();
        let cert = weak_quadratic_certificate(f, r, delta1)?;
        report.direction_i_pass = Some(cert.delta2 <= delta + 1e-12);
        let bound =
            6.0 * eps.powf(0.25) * (cert.r as f64).sqrt() + 4.0 * cert.delta1 + 2.0 * cert.delta2.sqrt();
        report.residual_bound = Some(bound);
        report.direction_ii_pass = Some(residual <= bound + 1e-9);
        report.implied_certificate = Some(cert);
    }
    Ok(report)
}

/// Per-eigenvalue entry of [`isolated_eigenvector_check`].
#[derive(Debug, Clone, Serialize)]
pub struct IsolatedEigenvectorReport {
    pub lambda: f64,
    pub theta: f64,
    /// Natural log of the guaranteed structure parameter
    /// `2θ⁻³ε⁻¹(1/(2ε)+1)^{2n}` with `n = ⌈8θ⁻²ln(θ⁻¹)⌉` (the parameter
    /// itself overflows for any interesting θ).
    pub ln_r_theoretical: f64,
    /// The parameter actually used: the theoretical one clamped to `|Z|`.
    pub r_used: usize,
    pub delta1: f64,
    pub certificate: WeakCharacterCertificate,
    /// Whether the measured failure fraction is within the promised θ.
    pub pass: bool,
}

/// Verify that eigenvectors of `𝒦_ε(f⊗f̄)` at θ-isolated eigenvalues
/// `λ ≥ θ` are weak quadratic characters with the guaranteed parameters
/// `(2θ⁻³ε⁻¹(1/(2ε)+1)^{2n}, 3θ^{1/2}, θ)`.
pub fn isolated_eigenvector_check(
    f: &GroupFunction,
    eps: f64,
    theta: f64,
) -> Result<Vec<IsolatedEigenvectorReport>> {
    if !(eps > 0.0 && eps <= 1.0) || !(theta > 0.0 && theta <= 1.0) {
        return Err(HofaError::BadParameter(format!(
            "eps and theta must lie in (0,1], got eps={eps}, theta={theta}"
        )));
    }
    require_unit_l2(f)?;
    let km = lift(&InvariantOperator::Denoise(eps), &outer(f, f)?)?;
    let ed = eigendecompose(&km)?;
    let n_iter = (8.0 * theta.powi(-2) * (1.0 / theta).ln()).ceil();
    let ln_r = 2f64.ln() - 3.0 * theta.ln() - eps.ln() + 2.0 * n_iter * (1.0 / (2.0 * eps) + 1.0).ln();
    let order = f.len() as f64;
    let r_used = if ln_r >= order.ln() {
        f.len()
    } else {
        (ln_r.exp().ceil() as usize).min(f.len())
    };
    let delta1 = 3.0 * theta.sqrt();
    let mut out = Vec::new();
    for (i, &lambda) in ed.eigenvalues().iter().enumerate() {
        if lambda < theta {
            continue;
        }
        if !is_theta_isolated(&ed, lambda, theta)? {
            continue;
        }
        let cert = weak_quadratic_certificate(&ed.eigenvectors()[i], r_used, delta1)?;
        out.push(IsolatedEigenvectorReport {
            lambda,
            theta,
            ln_r_theoretical: ln_r,
            r_used,
            delta1,
            pass: cert.delta2 <= theta + 1e-12,
            certificate: cert,
        });
    }
    if out.is_empty() {
        return Err(HofaError::NoQualifyingEigenvalue(format!(
            "no θ-isolated eigenvalue ≥ θ = {theta} in the spectrum"
        )));
    }
    Ok(out)
}

/// The denoising lift of `f⊗f̄` (shared by the checks above and by the
/// regularization algorithms).
pub fn denoised_gram(f: &GroupFunction, eps: f64) -> Result<ZMatrix> {
    lift(&InvariantOperator::Denoise(eps), &outer(f, f)?)
}
