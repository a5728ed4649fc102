//! Shift/conjugation-invariant operators on functions and their lift to
//! kernels, including the soft-threshold Fourier denoiser `K_ε`.
//!
//! `K_ε` shrinks the modulus of every Fourier coefficient by `ε` (ReLU),
//! keeping the phase:
//!
//! ```text
//! K_ε(f) = Σ_{|f̂(χ)| ≥ ε} (|f̂(χ)|−ε)/|f̂(χ)| · f̂(χ) χ
//! ```
//!
//! The scalar map `q_ε(z) = z·max(|z|−ε,0)/|z|` is 1-Lipschitz on ℂ, which
//! makes `K_ε` an L² contraction; its complement `q′_ε(z) = z − q_ε(z)` has
//! `|q′_ε(z)| = min(|z|, ε)` exactly.
//!
//! An invariant operator `K` lifts to kernels diagonal-by-diagonal:
//! `𝒦(M)` is the kernel whose diagonal at `t` is `K(𝔇_{M,t})`. The lift of a
//! self-adjoint kernel stays self-adjoint.

use crate::group::{
    fourier_transform, inverse_fourier_transform, GroupFunction,
};
use crate::util::sum_f64;
use crate::zmatrix::{from_diagonals, ZMatrix};
use crate::{C64, HofaError, Result};

/// Soft threshold: shrink `|z|` by `ε`, keep the phase.
#[inline]
pub fn q_eps(z: C64, eps: f64) -> C64 {
    debug_assert!(eps > 0.0);
    let r = z.norm();
    if r <= eps {
        C64::new(0.0, 0.0)
    } else {
        z * ((r - eps) / r)
    }
}

/// The complement `q′_ε(z) = z − q_ε(z)`; `|q′_ε(z)| = min(|z|, ε)`.
#[inline]
pub fn q_eps_prime(z: C64, eps: f64) -> C64 {
    z - q_eps(z, eps)
}

/// A named radial profile `r: ℝ_{≥0} → ℝ_{≥0}` with `r(0) = 0`, applied to
/// coefficient moduli via `q_r(z) = z·r(|z|)/|z|`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RadialProfile {
    /// `r(x) = max(x − ε, 0)` — the soft threshold behind `K_ε`.
    ReluShift(f64),
    /// Piecewise-linear ramp: `x` for `x ≥ ε`, `2x − ε` on `[ε/2, ε]`, `0`
    /// below. Steeper than the soft threshold but still Lipschitz; shipped
    /// for experiments, unused by the regularization algorithms.
    Ramp(f64),
}

impl RadialProfile {
    pub fn eval(&self, x: f64) -> f64 {
        match *self {
            RadialProfile::ReluShift(eps) => (x - eps).max(0.0),
            RadialProfile::Ramp(eps) => {
                if x >= eps {
                    x
                } else if x >= eps / 2.0 {
                    2.0 * x - eps
                } else {
                    0.0
                }
            }
        }
    }

    pub fn apply_scalar(&self, z: C64) -> C64 {
        let r = z.norm();
        if r == 0.0 {
            return z;
        }
        z * (self.eval(r) / r)
    }
}

/// A function-to-function map that commutes with all shifts and with complex
/// conjugation. Invariance is a testable property, not an assumption baked
/// into the type.
#[derive(Debug, Clone, PartialEq)]
pub enum InvariantOperator {
    Identity,
    /// `K_ε` soft-threshold denoiser.
    Denoise(f64),
    /// Generic radial coefficient map.
    Radial(RadialProfile),
    /// Replace `f` by its mean.
    Average,
    /// Discard coefficients with `|f̂(χ)| < ε`, keep the rest untouched.
    SharpCutoff(f64),
    /// The order-`k` dual function map `f ↦ [f]_k`.
    Dual(u32),
}

impl InvariantOperator {
    pub fn apply(&self, f: &GroupFunction) -> Result<GroupFunction> {
        match *self {
            InvariantOperator::Identity => Ok(f.clone()),
            InvariantOperator::Denoise(eps) => apply_k_eps(f, eps),
            InvariantOperator::Radial(p) => Ok(apply_k_r(f, p)),
            InvariantOperator::Average => Ok(averaging_operator(f)),
            InvariantOperator::SharpCutoff(eps) => Ok(sharp_cutoff(f, eps)),
            InvariantOperator::Dual(k) => dual_function(f, k),
        }
    }
}

/// Apply a radial coefficient profile: FFT, map each coefficient, inverse FFT.
pub fn apply_k_r(f: &GroupFunction, profile: RadialProfile) -> GroupFunction {
    let mut fh = fourier_transform(f);
    for z in fh.values_mut() {
        *z = profile.apply_scalar(*z);
    }
    inverse_fourier_transform(&fh)
}

/// The denoiser `K_ε`.
pub fn apply_k_eps(f: &GroupFunction, eps: f64) -> Result<GroupFunction> {
    if eps <= 0.0 {
        return Err(HofaError::BadParameter(format!("ε must be positive, got {eps}")));
    }
    Ok(apply_k_r(f, RadialProfile::ReluShift(eps)))
}

/// Replace `f` by its mean value.
pub fn averaging_operator(f: &GroupFunction) -> GroupFunction {
    GroupFunction::constant(f.group().clone(), f.mean())
}

/// Hard Fourier truncation: zero the coefficients with `|f̂(χ)| < ε`.
///
/// Unlike `K_ε` this is discontinuous in `f` — a coefficient sitting at the
/// threshold flips the output between two distant functions.
pub fn sharp_cutoff(f: &GroupFunction, eps: f64) -> GroupFunction {
    let mut fh = fourier_transform(f);
    for z in fh.values_mut() {
        if z.norm() < eps {
            *z = C64::new(0.0, 0.0);
        }
    }
    inverse_fourier_transform(&fh)
}

/// Dual function `[f]_k`: for `k = 2` this is `Σ_χ f̂(χ)|f̂(χ)|² χ` (computed
/// by FFT); for `k = 3` the direct cube average over an edge-deleted cube,
/// size-guarded at `|Z| ≤ 256`.
pub fn dual_function(f: &GroupFunction, k: u32) -> Result<GroupFunction> {
    match k {
        2 => {
            let mut fh = fourier_transform(f);
            for z in fh.values_mut() {
                *z *= z.norm_sqr();
            }
            Ok(inverse_fourier_transform(&fh))
        }
        3 => {
            let g = f.group().clone();
            let n = g.order();
            if n > 256 {
                return Err(HofaError::SizeGuard(format!(
                    "direct order-3 dual function capped at |Z| ≤ 256, got {n}"
                )));
            }
            // [f]_3(x) = E_{t₁,t₂,t₃} Π_{v≠0} C^{|v|+1} f(x + v·t)
            let values: Vec<C64> = (0..n)
                .map(|x| {
                    let mut acc = crate::util::KahanC::new();
                    for t1 in 0..n {
                        for t2 in 0..n {
                            for t3 in 0..n {
                                let ts = [t1, t2, t3];
                                let mut term = C64::new(1.0, 0.0);
                                for v in 1..8usize {
                                    let mut pt = x;
                                    let mut bits = 0;
                                    for (j, &t) in ts.iter().enumerate() {
                                        if v >> j & 1 == 1 {
                                            pt = g.add(pt, t);
                                            bits += 1;
                                        }
                                    }
                                    let val = f.at(pt);
                                    term *= if bits % 2 == 0 { val.conj() } else { val };
                                }
                                acc.add(term);
                            }
                        }
                    }
                    acc.value() / (n as f64).powi(3)
                })
                .collect();
            GroupFunction::new(g, values)
        }
        _ => Err(HofaError::BadParameter(format!(
            "dual function supported for k in {{2,3}}, got {k}"
        ))),
    }
}

/// Lift an invariant operator to kernels, diagonal by diagonal:
/// `𝒦(M)(x, y) = [K(𝔇_{M, x−y})](y)`.
pub fn lift(op: &InvariantOperator, m: &ZMatrix) -> Result<ZMatrix> {
    let family = m.diagonals();
    // map() runs per-diagonal work in parallel; assembly is index-addressed.
    let mapped = family.map(|d| op.apply(d).expect("diagonal apply"));
    Ok(from_diagonals(&mapped))
}

/// `‖𝒦_ε(f⊗f̄) − f⊗f̄‖₂` via the spectral closed form
/// `(E_t Σ_χ min(|Δ̂_t f(χ)|, ε)²)^{1/2}`, without materializing the kernel.
pub fn denoising_residual(f: &GroupFunction, eps: f64) -> Result<f64> {
    if eps <= 0.0 {
        return Err(HofaError::BadParameter(format!("ε must be positive, got {eps}")));
    }
    let n = f.len();
    let mean = sum_f64((0..n).map(|t| {
        let dh = fourier_transform(&crate::group::mult_derivative(f, t));
        sum_f64(dh.values().iter().map(|z| {
            let m = z.norm().min(eps);
            m * m
        }))
    })) / n as f64;
    Ok(mean.sqrt())
}

/// Reference route for [`denoising_residual`]: materialize the lifted kernel
/// and take the L² distance. Used to validate the closed form.
pub fn denoising_residual_via_matrix(f: &GroupFunction, eps: f64) -> Result<f64> {
    let m = crate::zmatrix::outer(f, f)?;
    let km = lift(&InvariantOperator::Denoise(eps), &m)?;
    Ok(km.sub_mat(&m)?.l2_norm())
}
