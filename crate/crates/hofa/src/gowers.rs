//! Gowers uniformity norms and related machinery.
//!
//! The `U^k` norm averages conjugation-alternating products of `f` over
//! `k`-dimensional combinatorial cubes. Computable routes used here:
//!
//! * `U¹`: `‖f‖_{U¹} = |E_x f(x)|` (a seminorm);
//! * `U²`: `‖f‖_{U²}⁴ = Σ_χ |f̂(χ)|⁴`;
//! * `U^k`, `k ≥ 3`: the shift recursion
//!   `‖f‖_{U^k}^{2^k} = E_t ‖Δ_t f‖_{U^{k−1}}^{2^{k−1}}`,
//!   costing `O(|Z|² log|Z|)` at `k = 3`.
//!
//! The direct cube average (`O(|Z|^{k+1})`) is retained as a reference
//! oracle behind a size guard.

use crate::group::{fourier_transform, mult_derivative, shift, GroupFunction, GroupSpec};
use crate::util::{sum_f64, KahanC};
use crate::{C64, HofaError, Result};
use std::f64::consts::TAU;

/// Size guard for the direct cube-average routes.
const DIRECT_BUDGET: u128 = 100_000_000;

fn check_direct_budget(order: usize, k: u32) -> Result<()> {
    let cost = (order as u128).checked_pow(k + 1).unwrap_or(u128::MAX);
    if cost > DIRECT_BUDGET {
        return Err(HofaError::SizeGuard(format!(
            "direct U^{k} average needs |Z|^{} = {cost} cube evaluations (budget {DIRECT_BUDGET})",
            k + 1
        )));
    }
    Ok(())
}

/// `‖f‖_{U^k}` via the fast route (FFT base case + shift recursion).
pub fn uk_norm(f: &GroupFunction, k: u32) -> Result<f64> {
    Ok(uk_norm_pow(f, k)?.powf(1.0 / (1u64 << k) as f64))
}

/// `‖f‖_{U^k}^{2^k}` — the underlying cube average, always non-negative.
pub fn uk_norm_pow(f: &GroupFunction, k: u32) -> Result<f64> {
    match k {
        0 => Err(HofaError::BadParameter("U^k norm needs k ≥ 1".into())),
        1 => Ok(f.mean().norm_sqr()),
        2 => {
            let fh = fourier_transform(f);
            Ok(sum_f64(fh.values().iter().map(|z| {
                let p = z.norm_sqr();
                p * p
            })))
        }
        _ => {
            let n = f.len();
            let mean = sum_f64(
                (0..n).map(|t| uk_norm_pow(&mult_derivative(f, t), k - 1).unwrap()),
            ) / n as f64;
            Ok(mean)
        }
    }
}

/// Direct cube-average oracle: `E_{x,t₁..t_k} Π_{v∈{0,1}^k} C^{|v|} f(x+v·t)`.
pub fn uk_norm_direct(f: &GroupFunction, k: u32) -> Result<f64> {
    if k == 0 {
        return Err(HofaError::BadParameter("U^k norm needs k ≥ 1".into()));
    }
    let family: Vec<&GroupFunction> = std::iter::repeat(f).take(1usize << k).collect();
    let avg = gowers_product(&family, k)?;
    if avg.im.abs() > 1e-9 * (1.0 + avg.re.abs()) {
        return Err(HofaError::Numerical(format!(
            "cube average has imaginary residue {:.3e}",
            avg.im
        )));
    }
    Ok(avg.re.max(0.0).powf(1.0 / (1u64 << k) as f64))
}

/// The Gowers product of `2^k` functions: the cube average with `f_v` at
/// vertex `v`, conjugated when `v` has odd weight.
pub fn gowers_product(family: &[&GroupFunction], k: u32) -> Result<C64> {
    let arity = 1usize << k;
    if family.len() != arity {
        return Err(HofaError::BadParameter(format!(
            "Gowers product of order {k} needs {arity} functions, got {}",
            family.len()
        )));
    }
    let g = family[0].group().clone();
    for f in family {
        if f.group() != &g {
            return Err(HofaError::GroupMismatch("mixed groups in Gowers product".into()));
        }
    }
    check_direct_budget(g.order(), k)?;
    let n = g.order();
    let kk = k as usize;
    let mut acc = KahanC::new();
    // iterate over (t_1, …, t_k) by odometer
    let mut ts = vec![0usize; kk];
    loop {
        for x in 0..n {
            let mut term = C64::new(1.0, 0.0);
            for v in 0..arity {
                let mut pt = x;
                let mut bits = 0u32;
                for (j, &t) in ts.iter().enumerate() {
                    if v >> j & 1 == 1 {
                        pt = g.add(pt, t);
                        bits += 1;
                    }
                }
                let val = family[v].at(pt);
                term *= if bits % 2 == 1 { val.conj() } else { val };
            }
            acc.add(term);
        }
        // odometer increment
        let mut j = 0;
        loop {
            if j == kk {
                let total = (n as f64).powi(kk as i32 + 1);
                return Ok(acc.value() / total);
            }
            ts[j] += 1;
            if ts[j] < n {
                break;
            }
            ts[j] = 0;
            j += 1;
        }
    }
}

/// `⟨f,g⟩_{U^k} = E_t ‖f·T^t ḡ‖_{U^{k−1}}^{2^{k−1}} ≥ 0` for `k ≥ 2`.
pub fn gowers_inner(f: &GroupFunction, g: &GroupFunction, k: u32) -> Result<f64> {
    if k < 2 {
        return Err(HofaError::BadParameter("Gowers inner product needs k ≥ 2".into()));
    }
    if f.group() != g.group() {
        return Err(HofaError::GroupMismatch("Gowers inner product".into()));
    }
    let n = f.len();
    let mean = sum_f64((0..n).map(|t| {
        let prod = f.mul_fn(&shift(g, t).conj()).unwrap();
        uk_norm_pow(&prod, k - 1).unwrap()
    })) / n as f64;
    Ok(mean)
}

/// The dual of the `U²` norm: `‖f‖*_{U²} = ‖f̂‖_{ℓ^{4/3}}`.
pub fn u2_dual_norm(f: &GroupFunction) -> f64 {
    let fh = fourier_transform(f);
    sum_f64(fh.values().iter().map(|z| z.norm().powf(4.0 / 3.0))).powf(0.75)
}

/// Polynomial phase fixture on a cyclic group: `x ↦ e(P(x)/N)` with integer
/// coefficients `P(x) = a_0 + a_1 x + … + a_k x^k` evaluated mod `N`.
pub fn poly_phase(group: &GroupSpec, coeffs: &[i64]) -> Result<GroupFunction> {
    if group.factors().len() != 1 {
        return Err(HofaError::BadParameter(
            "polynomial phase fixtures need a single cyclic factor".into(),
        ));
    }
    let n = group.factors()[0] as i64;
    Ok(GroupFunction::from_fn(group.clone(), |x| {
        // Horner mod N keeps the argument small and the phase exact.
        let mut acc = 0i64;
        for &c in coeffs.iter().rev() {
            acc = (acc * x as i64 + c).rem_euclid(n);
        }
        C64::from_polar(1.0, TAU * acc as f64 / n as f64)
    }))
}

/// L² distance from `f` to the nearest constant — the computable stand-in
/// for "structured of order 0".
pub fn distance_to_constant(f: &GroupFunction) -> f64 {
    let m = f.mean();
    f.sub_fn(&GroupFunction::constant(f.group().clone(), m))
        .expect("same group")
        .norm_l2()
}
