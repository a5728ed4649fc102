//! Finite abelian groups `Z = Z_{N1} × … × Z_{Nd}` and functions on them.
//!
//! Elements are enumerated in mixed-radix order: the tuple `(x_1, …, x_d)`
//! sits at index `Σ_j x_j · Π_{l>j} N_l`, so the identity is index 0 and the
//! last factor varies fastest. Every matrix and file format in this crate
//! inherits this ordering; it is a bit-exact contract.
//!
//! All geometry is normalized (Haar): `⟨f,g⟩ = E_x f(x)·conj(g(x))` and
//! `f̂(χ) = E_x f(x)·conj(χ(x))`, so characters are an orthonormal basis and
//! Parseval reads `‖f‖₂² = Σ_χ |f̂(χ)|²`.

use crate::util::{sum_f64, KahanC};
use crate::{C64, HofaError, Result};
use rustfft::FftPlanner;
use std::f64::consts::TAU;
use std::fmt;

/// A finite abelian group given as a product of cyclic factors.
#[derive(Debug, Clone, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
pub struct GroupSpec {
    factors: Vec<usize>,
}

impl GroupSpec {
    pub fn new(factors: Vec<usize>) -> Result<Self> {
        if factors.is_empty() || factors.iter().any(|&n| n == 0) {
            return Err(HofaError::BadGroupSpec(format!(
                "factors must be non-empty positive integers, got {factors:?}"
            )));
        }
        Ok(Self { factors })
    }

    /// The cyclic group `Z_n`.
    pub fn cyclic(n: usize) -> Self {
        Self::new(vec![n]).expect("positive modulus")
    }

    /// Parse `"Z8"` or `"Z2xZ4"` (case-insensitive).
    pub fn parse(s: &str) -> Result<Self> {
        let mut factors = Vec::new();
        for part in s.split(['x', 'X']) {
            let part = part.trim();
            let rest = part
                .strip_prefix('Z')
                .or_else(|| part.strip_prefix('z'))
                .ok_or_else(|| {
                    HofaError::BadGroupSpec(format!("expected Z<N> segment, got {part:?} in {s:?}"))
                })?;
            let n: usize = rest.parse().map_err(|_| {
                HofaError::BadGroupSpec(format!("bad modulus {rest:?} in {s:?}"))
            })?;
            if n == 0 {
                return Err(HofaError::BadGroupSpec(format!("zero modulus in {s:?}")));
            }
            factors.push(n);
        }
        Self::new(factors)
    }

    pub fn factors(&self) -> &[usize] {
        &self.factors
    }

    /// `|Z| = Π N_j`.
    pub fn order(&self) -> usize {
        self.factors.iter().product()
    }

    pub fn coords_of(&self, mut index: usize) -> Vec<usize> {
        debug_assert!(index < self.order());
        let mut coords = vec![0; self.factors.len()];
        for (j, &n) in self.factors.iter().enumerate().rev() {
            coords[j] = index % n;
            index /= n;
        }
        coords
    }

    pub fn index_of(&self, coords: &[usize]) -> usize {
        debug_assert_eq!(coords.len(), self.factors.len());
        let mut idx = 0;
        for (j, &n) in self.factors.iter().enumerate() {
            idx = idx * n + coords[j] % n;
        }
        idx
    }

    /// Index of the sum of the elements at indices `a` and `b`.
    #[inline]
    pub fn add(&self, a: usize, b: usize) -> usize {
        let (mut a, mut b) = (a, b);
        let mut idx = 0;
        let mut weight = 1;
        // Work from the fastest-varying factor upward.
        for &n in self.factors.iter().rev() {
            let ca = a % n;
            let cb = b % n;
            a /= n;
            b /= n;
            idx += ((ca + cb) % n) * weight;
            weight *= n;
        }
        idx
    }

    /// Index of the negation of the element at index `a`.
    #[inline]
    pub fn neg(&self, a: usize) -> usize {
        let mut a = a;
        let mut idx = 0;
        let mut weight = 1;
        for &n in self.factors.iter().rev() {
            let c = a % n;
            a /= n;
            idx += ((n - c) % n) * weight;
            weight *= n;
        }
        idx
    }

    /// Index of `a - b`.
    #[inline]
    pub fn sub(&self, a: usize, b: usize) -> usize {
        self.add(a, self.neg(b))
    }

    /// All group elements in enumeration order (identity first).
    pub fn enumerate(&self) -> Vec<Element> {
        (0..self.order())
            .map(|i| Element {
                coords: self.coords_of(i),
            })
            .collect()
    }

    /// Canonical spec string, e.g. `"Z2xZ4"`.
    pub fn spec_string(&self) -> String {
        self.factors
            .iter()
            .map(|n| format!("Z{n}"))
            .collect::<Vec<_>>()
            .join("x")
    }
}

impl fmt::Display for GroupSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.spec_string())
    }
}

/// A group element as a coordinate tuple; residue `j` lies in `[0, N_j)`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Element {
    pub coords: Vec<usize>,
}

/// A character of the dual group: `χ(x) = exp(2πi Σ_j freq_j x_j / N_j)`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct DualCharacter {
    group: GroupSpec,
    freq: Vec<usize>,
}

impl DualCharacter {
    pub fn new(group: GroupSpec, freq: Vec<usize>) -> Result<Self> {
        if freq.len() != group.factors().len() {
            return Err(HofaError::ShapeMismatch(format!(
                "frequency tuple has {} coordinates, group has {} factors",
                freq.len(),
                group.factors().len()
            )));
        }
        let freq = freq
            .iter()
            .zip(group.factors())
            .map(|(&f, &n)| f % n)
            .collect();
        Ok(Self { group, freq })
    }

    /// The character at dual enumeration index `i`.
    pub fn from_index(group: GroupSpec, i: usize) -> Self {
        let freq = group.coords_of(i);
        Self { group, freq }
    }

    pub fn freq(&self) -> &[usize] {
        &self.freq
    }

    pub fn index(&self) -> usize {
        self.group.index_of(&self.freq)
    }

    /// `χ(x)` for the element at index `x`.
    pub fn value_at(&self, x: usize) -> C64 {
        let coords = self.group.coords_of(x);
        let mut phase = 0.0;
        for ((&f, &c), &n) in self.freq.iter().zip(&coords).zip(self.group.factors()) {
            phase += (f * c % n) as f64 / n as f64;
        }
        C64::from_polar(1.0, TAU * phase)
    }

    /// The character as a function on the group.
    pub fn as_function(&self) -> GroupFunction {
        let values = (0..self.group.order()).map(|x| self.value_at(x)).collect();
        GroupFunction {
            group: self.group.clone(),
            values,
        }
    }
}

/// A complex-valued function on a finite abelian group, stored densely in
/// enumeration order.
#[derive(Debug, Clone, PartialEq)]
pub struct GroupFunction {
    group: GroupSpec,
    values: Vec<C64>,
}

impl GroupFunction {
    pub fn new(group: GroupSpec, values: Vec<C64>) -> Result<Self> {
        if values.len() != group.order() {
            return Err(HofaError::ShapeMismatch(format!(
                "function has {} values, group {} has order {}",
                values.len(),
                group,
                group.order()
            )));
        }
        Ok(Self { group, values })
    }

    pub fn zero(group: GroupSpec) -> Self {
        let n = group.order();
        Self {
            group,
            values: vec![C64::new(0.0, 0.0); n],
        }
    }

    pub fn constant(group: GroupSpec, c: C64) -> Self {
        let n = group.order();
        Self {
            group,
            values: vec![c; n],
        }
    }

    /// Indicator of a single element, scaled so that `‖δ‖₂² = 1/|Z|` … i.e.
    /// the plain pointwise indicator (value 1 at `at`, 0 elsewhere).
    pub fn delta(group: GroupSpec, at: usize) -> Self {
        let mut f = Self::zero(group);
        f.values[at] = C64::new(1.0, 0.0);
        f
    }

    /// Build from a closure over enumeration indices.
    pub fn from_fn(group: GroupSpec, mut f: impl FnMut(usize) -> C64) -> Self {
        let values = (0..group.order()).map(&mut f).collect();
        Self { group, values }
    }

    pub fn group(&self) -> &GroupSpec {
        &self.group
    }

    pub fn values(&self) -> &[C64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [C64] {
        &mut self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    #[inline]
    pub fn at(&self, x: usize) -> C64 {
        self.values[x]
    }

    fn check_same_group(&self, other: &GroupFunction) -> Result<()> {
        if self.group != other.group {
            return Err(HofaError::GroupMismatch(format!(
                "{} vs {}",
                self.group, other.group
            )));
        }
        Ok(())
    }

    /// Normalized inner product `⟨f,g⟩ = E_x f(x)·conj(g(x))`.
    pub fn inner(&self, other: &GroupFunction) -> Result<C64> {
        self.check_same_group(other)?;
        let mut acc = KahanC::new();
        for (a, b) in self.values.iter().zip(&other.values) {
            acc.add(a * b.conj());
        }
        Ok(acc.value() / self.len() as f64)
    }

    /// Normalized L² norm `(E_x |f(x)|²)^{1/2}`.
    pub fn norm_l2(&self) -> f64 {
        let s = sum_f64(self.values.iter().map(|z| z.norm_sqr()));
        (s / self.len() as f64).sqrt()
    }

    pub fn norm_inf(&self) -> f64 {
        self.values.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// `E_x f(x)`.
    pub fn mean(&self) -> C64 {
        let mut acc = KahanC::new();
        for z in &self.values {
            acc.add(*z);
        }
        acc.value() / self.len() as f64
    }

    pub fn conj(&self) -> GroupFunction {
        self.map(|z| z.conj())
    }

    pub fn scale(&self, c: C64) -> GroupFunction {
        self.map(|z| z * c)
    }

    pub fn map(&self, f: impl Fn(C64) -> C64) -> GroupFunction {
        GroupFunction {
            group: self.group.clone(),
            values: self.values.iter().map(|&z| f(z)).collect(),
        }
    }

    pub fn add_fn(&self, other: &GroupFunction) -> Result<GroupFunction> {
        self.check_same_group(other)?;
        Ok(GroupFunction {
            group: self.group.clone(),
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| a + b)
                .collect(),
        })
    }

    pub fn sub_fn(&self, other: &GroupFunction) -> Result<GroupFunction> {
        self.check_same_group(other)?;
        Ok(GroupFunction {
            group: self.group.clone(),
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| a - b)
                .collect(),
        })
    }

    /// Pointwise product.
    pub fn mul_fn(&self, other: &GroupFunction) -> Result<GroupFunction> {
        self.check_same_group(other)?;
        Ok(GroupFunction {
            group: self.group.clone(),
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| a * b)
                .collect(),
        })
    }
}

/// `(T^h f)(x) = f(x+h)`, with `h` given by enumeration index.
pub fn shift(f: &GroupFunction, h: usize) -> GroupFunction {
    let g = f.group();
    GroupFunction::from_fn(g.clone(), |x| f.at(g.add(x, h)))
}

/// Multiplicative derivative `Δ_t f(x) = f(x+t)·conj(f(x))`.
pub fn mult_derivative(f: &GroupFunction, t: usize) -> GroupFunction {
    let g = f.group();
    GroupFunction::from_fn(g.clone(), |x| f.at(g.add(x, t)) * f.at(x).conj())
}

/// FFT along every factor, in place. `forward` uses the `e^{-2πi…}` kernel.
fn fft_axes(values: &mut [C64], factors: &[usize], forward: bool) {
    let mut planner = FftPlanner::<f64>::new();
    let total: usize = factors.iter().product();
    debug_assert_eq!(values.len(), total);
    let mut inner = 1usize; // stride of the current axis
    for &n in factors.iter().rev() {
        if n > 1 {
            let fft = if forward {
                planner.plan_fft_forward(n)
            } else {
                planner.plan_fft_inverse(n)
            };
            let outer = total / (n * inner);
            let mut line = vec![C64::new(0.0, 0.0); n];
            for o in 0..outer {
                let base = o * n * inner;
                for i in 0..inner {
                    for (t, slot) in line.iter_mut().enumerate() {
                        *slot = values[base + t * inner + i];
                    }
                    fft.process(&mut line);
                    for (t, slot) in line.iter().enumerate() {
                        values[base + t * inner + i] = *slot;
                    }
                }
            }
        }
        inner *= n;
    }
}

/// Normalized Fourier transform `f̂(χ) = E_x f(x)·conj(χ(x))`, indexed by the
/// dual character's frequency tuple in the same mixed-radix order.
pub fn fourier_transform(f: &GroupFunction) -> GroupFunction {
    let mut values = f.values().to_vec();
    fft_axes(&mut values, f.group().factors(), true);
    let scale = 1.0 / f.len() as f64;
    for z in &mut values {
        *z *= scale;
    }
    GroupFunction {
        group: f.group().clone(),
        values,
    }
}

/// Inverse of [`fourier_transform`]: `f(x) = Σ_χ f̂(χ)·χ(x)`.
pub fn inverse_fourier_transform(coeffs: &GroupFunction) -> GroupFunction {
    let mut values = coeffs.values().to_vec();
    fft_axes(&mut values, coeffs.group().factors(), false);
    GroupFunction {
        group: coeffs.group().clone(),
        values,
    }
}

/// Direct `O(|Z|²)` transform; reference oracle for [`fourier_transform`].
pub fn fourier_transform_direct(f: &GroupFunction) -> GroupFunction {
    let g = f.group().clone();
    let n = g.order();
    let values: Vec<C64> = (0..n)
        .map(|ci| {
            let chi = DualCharacter::from_index(g.clone(), ci);
            let mut acc = KahanC::new();
            for x in 0..n {
                acc.add(f.at(x) * chi.value_at(x).conj());
            }
            acc.value() / n as f64
        })
        .collect();
    GroupFunction { group: g, values }
}

/// Direct `O(|Z|²)` inverse transform; reference oracle.
pub fn inverse_fourier_transform_direct(coeffs: &GroupFunction) -> GroupFunction {
    let g = coeffs.group().clone();
    let n = g.order();
    let values: Vec<C64> = (0..n)
        .map(|x| {
            let mut acc = KahanC::new();
            for ci in 0..n {
                let chi = DualCharacter::from_index(g.clone(), ci);
                acc.add(coeffs.at(ci) * chi.value_at(x));
            }
            acc.value()
        })
        .collect();
    GroupFunction { group: g, values }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn e(x: f64) -> C64 {
        C64::from_polar(1.0, TAU * x)
    }

    #[test]
    fn enumeration_order() {
        let z3 = GroupSpec::cyclic(3);
        let els: Vec<Vec<usize>> = z3.enumerate().into_iter().map(|e| e.coords).collect();
        assert_eq!(els, vec![vec![0], vec![1], vec![2]]);

        let z2z2 = GroupSpec::new(vec![2, 2]).unwrap();
        let els: Vec<Vec<usize>> = z2z2.enumerate().into_iter().map(|e| e.coords).collect();
        assert_eq!(els, vec![vec![0, 0], vec![0, 1], vec![1, 0], vec![1, 1]]);

        let z1 = GroupSpec::cyclic(1);
        assert_eq!(z1.order(), 1);
        assert_eq!(z1.enumerate()[0].coords, vec![0]);
    }

    #[test]
    fn parse_spec_strings() {
        assert_eq!(GroupSpec::parse("Z500").unwrap().factors(), &[500]);
        assert_eq!(GroupSpec::parse("z2xZ4").unwrap().factors(), &[2, 4]);
        assert!(GroupSpec::parse("Q8").is_err());
        assert!(GroupSpec::parse("Z0").is_err());
    }

    #[test]
    fn index_arithmetic_round_trips() {
        let g = GroupSpec::new(vec![3, 4, 5]).unwrap();
        for i in 0..g.order() {
            assert_eq!(g.index_of(&g.coords_of(i)), i);
            assert_eq!(g.add(i, g.neg(i)), 0);
        }
        // (1,2,3) + (2,3,4) = (0,1,2)
        let a = g.index_of(&[1, 2, 3]);
        let b = g.index_of(&[2, 3, 4]);
        assert_eq!(g.add(a, b), g.index_of(&[0, 1, 2]));
    }

    #[test]
    fn characters_are_homomorphisms() {
        let g = GroupSpec::new(vec![4, 3]).unwrap();
        let chi = DualCharacter::from_index(g.clone(), 7);
        for x in 0..g.order() {
            for y in 0..g.order() {
                let lhs = chi.value_at(g.add(x, y));
                let rhs = chi.value_at(x) * chi.value_at(y);
                assert!((lhs - rhs).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn transform_of_constant_is_delta_at_trivial_character() {
        let g = GroupSpec::cyclic(4);
        let f = GroupFunction::constant(g, C64::new(1.0, 0.0));
        let fh = fourier_transform(&f);
        assert!((fh.at(0) - C64::new(1.0, 0.0)).norm() < 1e-14);
        for i in 1..4 {
            assert!(fh.at(i).norm() < 1e-14);
        }
    }

    #[test]
    fn gauss_phase_has_flat_spectrum() {
        // f(x) = e(x²/5) on Z_5: every |f̂(χ)| = 1/√5.
        let g = GroupSpec::cyclic(5);
        let f = GroupFunction::from_fn(g, |x| e((x * x % 5) as f64 / 5.0));
        let fh = fourier_transform(&f);
        for i in 0..5 {
            assert!((fh.at(i).norm() - 1.0 / 5f64.sqrt()).abs() < 1e-12);
        }
    }

    #[test]
    fn fft_matches_direct_oracle_and_round_trips() {
        let g = GroupSpec::new(vec![2, 3]).unwrap();
        let f = GroupFunction::from_fn(g.clone(), |x| {
            C64::new((x as f64).sin(), (x as f64 * 0.7).cos())
        });
        let fh = fourier_transform(&f);
        let fh_direct = fourier_transform_direct(&f);
        for i in 0..g.order() {
            assert!((fh.at(i) - fh_direct.at(i)).norm() < 1e-12);
        }
        let back = inverse_fourier_transform(&fh);
        for i in 0..g.order() {
            assert!((back.at(i) - f.at(i)).norm() < 1e-12);
        }
        // inverse against direct-sum oracle
        let back_direct = inverse_fourier_transform_direct(&fh);
        for i in 0..g.order() {
            assert!((back.at(i) - back_direct.at(i)).norm() < 1e-12);
        }
    }

    #[test]
    fn parseval() {
        let g = GroupSpec::cyclic(8);
        let f = GroupFunction::from_fn(g, |x| C64::new(x as f64 * 0.3 - 1.0, (x as f64).cos()));
        let fh = fourier_transform(&f);
        let lhs = f.norm_l2().powi(2);
        let rhs = sum_f64(fh.values().iter().map(|z| z.norm_sqr()));
        assert!((lhs - rhs).abs() / lhs < 1e-10);
    }

    #[test]
    fn shift_phase_law() {
        let g = GroupSpec::cyclic(6);
        let f = GroupFunction::from_fn(g.clone(), |x| C64::new((x as f64).sin(), 0.2 * x as f64));
        let h = 2;
        let lhs = fourier_transform(&shift(&f, h));
        let rhs = fourier_transform(&f);
        for ci in 0..6 {
            let chi = DualCharacter::from_index(g.clone(), ci);
            assert!((lhs.at(ci) - rhs.at(ci) * chi.value_at(h)).norm() < 1e-12);
        }
    }

    #[test]
    fn shift_trivia() {
        let g = GroupSpec::cyclic(5);
        let f = GroupFunction::from_fn(g.clone(), |x| C64::new(x as f64, 0.0));
        assert_eq!(shift(&f, 0), f);
        let d0 = GroupFunction::delta(g.clone(), 0);
        let sh = shift(&d0, 2);
        // T^h δ_0 = δ_{-h}
        assert!((sh.at(g.neg(2)) - C64::new(1.0, 0.0)).norm() < 1e-15);
        assert_eq!(sh.values().iter().filter(|z| z.norm() > 0.0).count(), 1);
    }

    #[test]
    fn mult_derivative_of_quadratic_phase_is_character_times_constant() {
        let n = 9;
        let g = GroupSpec::cyclic(n);
        let phi = GroupFunction::from_fn(g.clone(), |x| e((x * x % n) as f64 / n as f64));
        let t = 4;
        let d = mult_derivative(&phi, t);
        for x in 0..n {
            let expect = e(((2 * t * x + t * t) % n) as f64 / n as f64);
            assert!((d.at(x) - expect).norm() < 1e-12);
        }
    }

    #[test]
    fn energy_of_derivatives() {
        // E_t ‖Δ_t f‖₂² = ‖f‖₂⁴ … holds when f has constant modulus; in
        // general E_t ‖Δ_t f‖₂² = E_t E_x |f(x+t)|²|f(x)|² = ‖|f|²‖… use the
        // exact identity E_t ‖Δ_t f‖₂² = ‖ |f|² ‖_{U¹-style}:
        //   E_t E_x |f(x+t)|² |f(x)|² = (E_x |f(x)|²)² = ‖f‖₂⁴.
        let g = GroupSpec::cyclic(7);
        let f = GroupFunction::from_fn(g, |x| C64::new((x as f64).sin() + 0.3, 0.1 * x as f64));
        let lhs = sum_f64((0..7).map(|t| mult_derivative(&f, t).norm_l2().powi(2))) / 7.0;
        let rhs = f.norm_l2().powi(4);
        assert!((lhs - rhs).abs() < 1e-12);
    }

    #[test]
    fn derivative_multiplicativity() {
        let g = GroupSpec::cyclic(10);
        let f = GroupFunction::from_fn(g.clone(), |x| C64::new(0.2 * x as f64, -0.1));
        let h = GroupFunction::from_fn(g.clone(), |x| C64::new((x as f64).cos(), 0.4));
        for t in 0..10 {
            let lhs = mult_derivative(&f.mul_fn(&h).unwrap(), t);
            let rhs = mult_derivative(&f, t)
                .mul_fn(&mult_derivative(&h, t))
                .unwrap();
            for x in 0..10 {
                assert!((lhs.at(x) - rhs.at(x)).norm() < 1e-12);
            }
        }
    }
}
