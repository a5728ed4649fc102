//! Dense kernels on `Z × Z` treated as normalized integral operators.
//!
//! A kernel `M` acts by `Mf(x) = E_y M(x,y) f(y)` and composes by
//! `(MM′)(x,y) = E_z M(x,z) M′(z,y)`. Under this convention the identity of
//! the algebra is `Id(x,y) = |Z|·1(x = y)` — note the `|Z|` factor, which the
//! averaging absorbs.
//!
//! Every kernel decomposes into its diagonals `𝔇_{M,t}(z) = M(z+t, z)`, one
//! function per shift `t`, and is reconstructed exactly (no arithmetic, so
//! bit-exactly) by `M(x,y) = [F(x−y)](y)`.

use crate::group::{fourier_transform, GroupFunction, GroupSpec};
use crate::util::{sum_f64, KahanC};
use crate::{C64, HofaError, Result};
use rayon::prelude::*;

/// Dense complex `|Z| × |Z|` kernel, rows and columns in enumeration order.
#[derive(Debug, Clone, PartialEq)]
pub struct ZMatrix {
    group: GroupSpec,
    /// Row-major entries, `entries[x * |Z| + y] = M(x, y)`.
    entries: Vec<C64>,
}

/// The complete family of diagonals of a kernel: one function per shift.
#[derive(Debug, Clone)]
pub struct DiagonalFamily {
    group: GroupSpec,
    /// `diagonals[t]` is `z ↦ M(z+t, z)`.
    diagonals: Vec<GroupFunction>,
}

impl DiagonalFamily {
    pub fn new(group: GroupSpec, diagonals: Vec<GroupFunction>) -> Result<Self> {
        if diagonals.len() != group.order() {
            return Err(HofaError::ShapeMismatch(format!(
                "need one diagonal per shift: got {}, group order {}",
                diagonals.len(),
                group.order()
            )));
        }
        for d in &diagonals {
            if d.group() != &group {
                return Err(HofaError::GroupMismatch(
                    "diagonal on a different group".into(),
                ));
            }
        }
        Ok(Self { group, diagonals })
    }

    pub fn group(&self) -> &GroupSpec {
        &self.group
    }

    pub fn at(&self, t: usize) -> &GroupFunction {
        &self.diagonals[t]
    }

    pub fn iter(&self) -> impl Iterator<Item = &GroupFunction> {
        self.diagonals.iter()
    }

    /// Map every diagonal through `op` (e.g. a denoiser), keeping shifts.
    pub fn map(&self, op: impl Fn(&GroupFunction) -> GroupFunction + Sync) -> DiagonalFamily {
        let diagonals: Vec<GroupFunction> =
            self.diagonals.par_iter().map(|d| op(d)).collect();
        DiagonalFamily {
            group: self.group.clone(),
            diagonals,
        }
    }
}

impl ZMatrix {
    pub fn new(group: GroupSpec, entries: Vec<C64>) -> Result<Self> {
        let n = group.order();
        if entries.len() != n * n {
            return Err(HofaError::ShapeMismatch(format!(
                "kernel needs {}×{} entries, got {}",
                n,
                n,
                entries.len()
            )));
        }
        Ok(Self { group, entries })
    }

    pub fn zero(group: GroupSpec) -> Self {
        let n = group.order();
        Self {
            group,
            entries: vec![C64::new(0.0, 0.0); n * n],
        }
    }

    /// The identity of the normalized matrix algebra: `|Z|` on the diagonal.
    pub fn identity(group: GroupSpec) -> Self {
        let n = group.order();
        let mut m = Self::zero(group);
        for i in 0..n {
            m.entries[i * n + i] = C64::new(n as f64, 0.0);
        }
        m
    }

    pub fn from_fn(group: GroupSpec, mut f: impl FnMut(usize, usize) -> C64) -> Self {
        let n = group.order();
        let mut entries = Vec::with_capacity(n * n);
        for x in 0..n {
            for y in 0..n {
                entries.push(f(x, y));
            }
        }
        Self { group, entries }
    }

    pub fn group(&self) -> &GroupSpec {
        &self.group
    }

    pub fn order(&self) -> usize {
        self.group.order()
    }

    #[inline]
    pub fn at(&self, x: usize, y: usize) -> C64 {
        self.entries[x * self.order() + y]
    }

    pub fn entries(&self) -> &[C64] {
        &self.entries
    }

    pub fn entries_mut(&mut self) -> &mut [C64] {
        &mut self.entries
    }

    fn check_same_group(&self, other: &ZMatrix) -> Result<()> {
        if self.group != other.group {
            return Err(HofaError::GroupMismatch(format!(
                "{} vs {}",
                self.group, other.group
            )));
        }
        Ok(())
    }

    pub fn adjoint(&self) -> ZMatrix {
        let n = self.order();
        ZMatrix::from_fn(self.group.clone(), |x, y| self.entries[y * n + x].conj())
    }

    /// Largest entrywise deviation from `M(x,y) = conj(M(y,x))`.
    pub fn self_adjointness_defect(&self) -> f64 {
        let n = self.order();
        let mut worst = 0.0f64;
        for x in 0..n {
            for y in x..n {
                let d = (self.entries[x * n + y] - self.entries[y * n + x].conj()).norm();
                worst = worst.max(d);
            }
        }
        worst
    }

    pub fn scale(&self, c: C64) -> ZMatrix {
        ZMatrix {
            group: self.group.clone(),
            entries: self.entries.iter().map(|&z| z * c).collect(),
        }
    }

    pub fn add_mat(&self, other: &ZMatrix) -> Result<ZMatrix> {
        self.check_same_group(other)?;
        Ok(ZMatrix {
            group: self.group.clone(),
            entries: self
                .entries
                .iter()
                .zip(&other.entries)
                .map(|(a, b)| a + b)
                .collect(),
        })
    }

    pub fn sub_mat(&self, other: &ZMatrix) -> Result<ZMatrix> {
        self.check_same_group(other)?;
        Ok(ZMatrix {
            group: self.group.clone(),
            entries: self
                .entries
                .iter()
                .zip(&other.entries)
                .map(|(a, b)| a - b)
                .collect(),
        })
    }

    /// The diagonal at shift `t`: `z ↦ M(z+t, z)`.
    pub fn diagonal(&self, t: usize) -> GroupFunction {
        let g = self.group.clone();
        let n = self.order();
        let values = (0..n)
            .map(|z| self.entries[g.add(z, t) * n + z])
            .collect();
        GroupFunction::new(g, values).expect("length matches")
    }

    /// All diagonals.
    pub fn diagonals(&self) -> DiagonalFamily {
        let diagonals = (0..self.order()).map(|t| self.diagonal(t)).collect();
        DiagonalFamily {
            group: self.group.clone(),
            diagonals,
        }
    }

    /// `Mf(x) = E_y M(x,y) f(y)`.
    pub fn matvec(&self, f: &GroupFunction) -> Result<GroupFunction> {
        if f.group() != &self.group {
            return Err(HofaError::GroupMismatch(format!(
                "{} vs {}",
                self.group,
                f.group()
            )));
        }
        let n = self.order();
        let values: Vec<C64> = (0..n)
            .map(|x| {
                let mut acc = KahanC::new();
                for y in 0..n {
                    acc.add(self.entries[x * n + y] * f.at(y));
                }
                acc.value() / n as f64
            })
            .collect();
        GroupFunction::new(self.group.clone(), values)
    }

    /// Normalized product `(MM′)(x,y) = E_z M(x,z) M′(z,y)`.
    pub fn matmul(&self, other: &ZMatrix) -> Result<ZMatrix> {
        self.check_same_group(other)?;
        let n = self.order();
        let scale = 1.0 / n as f64;
        let entries: Vec<C64> = (0..n)
            .into_par_iter()
            .flat_map_iter(|x| {
                let row = &self.entries[x * n..(x + 1) * n];
                (0..n).map(move |y| {
                    let mut acc = KahanC::new();
                    for z in 0..n {
                        acc.add(row[z] * other.entries[z * n + y]);
                    }
                    acc.value() * scale
                })
            })
            .collect();
        Ok(ZMatrix {
            group: self.group.clone(),
            entries,
        })
    }

    /// Normalized L² norm `(E_{x,y} |M(x,y)|²)^{1/2}`.
    pub fn l2_norm(&self) -> f64 {
        let n2 = self.entries.len() as f64;
        (sum_f64(self.entries.iter().map(|z| z.norm_sqr())) / n2).sqrt()
    }

    pub fn norm_inf(&self) -> f64 {
        self.entries.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }
}

/// Rank-1 kernel `f ⊗ ḡ : (x,y) ↦ f(x)·conj(g(y))`.
pub fn outer(f: &GroupFunction, g: &GroupFunction) -> Result<ZMatrix> {
    if f.group() != g.group() {
        return Err(HofaError::GroupMismatch(format!(
            "{} vs {}",
            f.group(),
            g.group()
        )));
    }
    Ok(ZMatrix::from_fn(f.group().clone(), |x, y| {
        f.at(x) * g.at(y).conj()
    }))
}

/// Reassemble a kernel from its diagonals: `M(x,y) = [F(x−y)](y)`.
pub fn from_diagonals(family: &DiagonalFamily) -> ZMatrix {
    let g = family.group().clone();
    let n = g.order();
    let mut m = ZMatrix::zero(g.clone());
    for t in 0..n {
        let d = family.at(t);
        for y in 0..n {
            let x = g.add(y, t);
            m.entries[x * n + y] = d.at(y);
        }
    }
    m
}

/// Product computed through the diagonal calculus:
/// `𝔇_{MM′,w}(z) = E_t 𝔇_{M,t}(z+w−t) · 𝔇_{M′,w−t}(z)`.
///
/// Exists as an independent route to [`ZMatrix::matmul`]; the two must agree.
pub fn matmul_via_diagonals(m: &ZMatrix, other: &ZMatrix) -> Result<ZMatrix> {
    if m.group() != other.group() {
        return Err(HofaError::GroupMismatch(format!(
            "{} vs {}",
            m.group(),
            other.group()
        )));
    }
    let g = m.group().clone();
    let n = g.order();
    let dm = m.diagonals();
    let do_ = other.diagonals();
    let diagonals: Vec<GroupFunction> = (0..n)
        .into_par_iter()
        .map(|w| {
            let values: Vec<C64> = (0..n)
                .map(|z| {
                    let mut acc = KahanC::new();
                    for t in 0..n {
                        let wt = g.sub(w, t);
                        let z_shift = g.add(z, wt);
                        acc.add(dm.at(t).at(z_shift) * do_.at(wt).at(z));
                    }
                    acc.value() / n as f64
                })
                .collect();
            GroupFunction::new(g.clone(), values).expect("length matches")
        })
        .collect();
    Ok(from_diagonals(&DiagonalFamily {
        group: g,
        diagonals,
    }))
}

/// Wiener norm `‖f‖_A = Σ_χ |f̂(χ)|`.
pub fn wiener_norm(f: &GroupFunction) -> f64 {
    sum_f64(fourier_transform(f).values().iter().map(|z| z.norm()))
}

/// `‖M‖_MA = max_t ‖𝔇_{M,t}‖_A` — submultiplicative under the normalized
/// product.
pub fn ma_norm(m: &ZMatrix) -> f64 {
    (0..m.order())
        .map(|t| wiener_norm(&m.diagonal(t)))
        .fold(0.0, f64::max)
}

/// `‖M‖_{DU^k} = (E_t ‖𝔇_{M,t}‖_{U^k}^{2^k})^{1/2^k}` for `k ∈ {2,3}`.
pub fn du_norm(m: &ZMatrix, k: u32) -> Result<f64> {
    if !(2..=3).contains(&k) {
        return Err(HofaError::BadParameter(format!(
            "DU^k norm supported for k in {{2,3}}, got {k}"
        )));
    }
    let n = m.order();
    let pow = 1u32 << k;
    let mean = sum_f64(
        (0..n).map(|t| crate::gowers::uk_norm(&m.diagonal(t), k).unwrap().powi(pow as i32)),
    ) / n as f64;
    Ok(mean.powf(1.0 / pow as f64))
}

/// `P(M) = Σ_i a_i M^i` under the normalized product; the constant term
/// multiplies the normalized identity kernel.
pub fn poly_apply(coeffs: &[C64], m: &ZMatrix) -> Result<ZMatrix> {
    if coeffs.len() > 65 {
        return Err(HofaError::BadParameter(format!(
            "polynomial degree capped at 64, got {}",
            coeffs.len().saturating_sub(1)
        )));
    }
    // Horner: P(M) = a_0·Id + M·(a_1·Id + M·(…)).
    let id = ZMatrix::identity(m.group().clone());
    let mut acc = match coeffs.last() {
        Some(&c) => id.scale(c),
        None => return Ok(ZMatrix::zero(m.group().clone())),
    };
    for &c in coeffs.iter().rev().skip(1) {
        acc = m.matmul(&acc)?.add_mat(&id.scale(c))?;
    }
    Ok(acc)
}

/// Coefficientwise absolute value: `P⁺(x) = Σ_i |a_i| x^i`.
pub fn poly_plus(coeffs: &[C64]) -> Vec<f64> {
    coeffs.iter().map(|c| c.norm()).collect()
}

/// Evaluate a real-coefficient polynomial at a real point.
pub fn poly_eval_real(coeffs: &[f64], x: f64) -> f64 {
    coeffs.iter().rev().fold(0.0, |acc, &c| acc * x + c)
}

/// Coefficients of the spectral isolation polynomial
/// `p_n(x, λ) = λ⁻¹ · x · (1 − (x−λ)²/4)ⁿ`, expanded in powers of `x`.
///
/// Satisfies `p_n(λ, λ) = 1` and decays on eigenvalues away from `λ`.
pub fn isolation_polynomial(n: u32, lambda: f64) -> Result<Vec<C64>> {
    if lambda == 0.0 {
        return Err(HofaError::BadParameter("isolation level λ must be nonzero".into()));
    }
    if 2 * n + 1 > 64 {
        return Err(HofaError::BadParameter(format!(
            "isolation polynomial degree 2n+1 = {} exceeds cap 64",
            2 * n + 1
        )));
    }
    // base(x) = 1 − (x−λ)²/4 = (1 − λ²/4) + (λ/2)x − x²/4
    let base = [1.0 - lambda * lambda / 4.0, lambda / 2.0, -0.25];
    let mut pow = vec![1.0f64];
    for _ in 0..n {
        let mut next = vec![0.0; pow.len() + 2];
        for (i, &a) in pow.iter().enumerate() {
            for (j, &b) in base.iter().enumerate() {
                next[i + j] += a * b;
            }
        }
        pow = next;
    }
    // multiply by λ⁻¹·x
    let mut out = vec![C64::new(0.0, 0.0)];
    out.extend(pow.iter().map(|&a| C64::new(a / lambda, 0.0)));
    Ok(out)
}
