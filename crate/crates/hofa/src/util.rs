//! Deterministic summation helpers.
//!
//! Norms and inner products across the crate are accumulated with Kahan
//! compensation so that results do not depend on the whims of the optimizer
//! and parallel callers can rely on bit-stable reductions (all reductions in
//! this crate are sequential over index order; parallelism is only used for
//! independent, index-addressed work).

use crate::C64;

/// Compensated (Kahan–Babuška) accumulator for `f64`.
#[derive(Debug, Clone, Copy, Default)]
pub struct Kahan {
    sum: f64,
    c: f64,
}

impl Kahan {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.c += (self.sum - t) + x;
        } else {
            self.c += (x - t) + self.sum;
        }
        self.sum = t;
    }

    #[inline]
    pub fn value(&self) -> f64 {
        self.sum + self.c
    }
}

/// Compensated complex accumulator (independent real/imaginary parts).
#[derive(Debug, Clone, Copy, Default)]
pub struct KahanC {
    re: Kahan,
    im: Kahan,
}

impl KahanC {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn add(&mut self, z: C64) {
        self.re.add(z.re);
        self.im.add(z.im);
    }

    #[inline]
    pub fn value(&self) -> C64 {
        C64::new(self.re.value(), self.im.value())
    }
}

/// Compensated sum of an iterator of reals.
pub fn sum_f64<I: IntoIterator<Item = f64>>(it: I) -> f64 {
    let mut k = Kahan::new();
    for x in it {
        k.add(x);
    }
    k.value()
}

/// Compensated sum of an iterator of complex numbers.
pub fn sum_c64<I: IntoIterator<Item = C64>>(it: I) -> C64 {
    let mut k = KahanC::new();
    for z in it {
        k.add(z);
    }
    k.value()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kahan_beats_naive_on_ill_conditioned_sum() {
        // 1 + 1e-16 repeated: naive summation loses the small terms entirely.
        let mut k = Kahan::new();
        k.add(1.0);
        for _ in 0..10_000 {
            k.add(1e-16);
        }
        assert!((k.value() - (1.0 + 1e-12)).abs() < 1e-15);
    }

    #[test]
    fn complex_sum_matches_componentwise() {
        let zs: Vec<C64> = (0..100).map(|i| C64::new(i as f64, -(i as f64))).collect();
        let s = sum_c64(zs.iter().copied());
        assert_eq!(s, C64::new(4950.0, -4950.0));
    }
}
