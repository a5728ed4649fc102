//! Normalized Hermitian eigendecomposition and the spectral toolkit.
//!
//! Conventions (enforced by invariant tests, stated once here):
//!
//! * a kernel acting by `Mf(x) = E_y M(x,y) f(y)` has **normalized**
//!   eigenvalues = raw matrix eigenvalues / `|Z|`;
//! * eigenvectors are unit in the normalized L² inner product, i.e. raw
//!   ℓ²-unit vectors scaled by `√|Z|`;
//! * eigenvalues are sorted non-increasing, ties broken by the solver's
//!   original index (deterministic given a deterministic backend);
//! * eigenvector phase is arbitrary — comparisons must be phase-invariant.

use crate::group::{GroupFunction, GroupSpec};
use crate::util::sum_f64;
use crate::zmatrix::ZMatrix;
use crate::{C64, HofaError, Result};
use nalgebra::{DMatrix, DVector};
use sha2::{Digest, Sha256};
use std::io::{Read as _, Write as _};
use std::path::Path;

/// Eigenvalues (descending, normalized) and L²-orthonormal eigenvectors of a
/// self-adjoint kernel.
#[derive(Debug, Clone)]
pub struct EigenDecomposition {
    group: GroupSpec,
    eigenvalues: Vec<f64>,
    eigenvectors: Vec<GroupFunction>,
}

/// The part of a spectrum at or above a threshold, with its eigenvector span.
#[derive(Debug, Clone)]
pub struct SpectrumSlice {
    pub threshold: f64,
    /// Indices into the parent decomposition (descending eigenvalue order).
    pub kept: Vec<usize>,
    pub eigenvalues: Vec<f64>,
    pub basis: Vec<GroupFunction>,
}

impl EigenDecomposition {
    pub fn group(&self) -> &GroupSpec {
        &self.group
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn eigenvectors(&self) -> &[GroupFunction] {
        &self.eigenvectors
    }

    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    /// `Spec_ρ` and `Eigen_ρ`: eigenvalues ≥ ρ (inclusive, with a 1e-12
    /// slack so a threshold sitting numerically on an eigenvalue keeps it)
    /// and their eigenvectors.
    pub fn slice(&self, rho: f64) -> SpectrumSlice {
        let kept: Vec<usize> = (0..self.len())
            .filter(|&i| self.eigenvalues[i] >= rho - 1e-12)
            .collect();
        SpectrumSlice {
            threshold: rho,
            eigenvalues: kept.iter().map(|&i| self.eigenvalues[i]).collect(),
            basis: kept.iter().map(|&i| self.eigenvectors[i].clone()).collect(),
            kept,
        }
    }

    /// Serialize to a little-endian binary container with a SHA-256 trailer.
    pub fn save_binary(&self, path: &Path) -> Result<()> {
        let mut payload = Vec::new();
        payload.extend_from_slice(b"HOFAED01");
        let spec = self.group.spec_string();
        payload.extend_from_slice(&(spec.len() as u32).to_le_bytes());
        payload.extend_from_slice(spec.as_bytes());
        payload.extend_from_slice(&(self.len() as u64).to_le_bytes());
        for &l in &self.eigenvalues {
            payload.extend_from_slice(&l.to_le_bytes());
        }
        for v in &self.eigenvectors {
            for z in v.values() {
                payload.extend_from_slice(&z.re.to_le_bytes());
                payload.extend_from_slice(&z.im.to_le_bytes());
            }
        }
        let hash = Sha256::digest(&payload);
        let mut file = std::fs::File::create(path)?;
        file.write_all(&payload)?;
        file.write_all(&hash)?;
        Ok(())
    }

    pub fn load_binary(path: &Path) -> Result<Self> {
        let mut bytes = Vec::new();
        std::fs::File::open(path)?.read_to_end(&mut bytes)?;
        if bytes.len() < 44 || &bytes[0..8] != b"HOFAED01" {
            return Err(HofaError::Numerical("bad eigendecomposition container".into()));
        }
        let (payload, hash) = bytes.split_at(bytes.len() - 32);
        if Sha256::digest(payload).as_slice() != hash {
            return Err(HofaError::Numerical(
                "eigendecomposition container hash mismatch".into(),
            ));
        }
        let mut pos = 8;
        let take = |pos: &mut usize, n: usize| -> Result<&[u8]> {
            if *pos + n > payload.len() {
                return Err(HofaError::Numerical("truncated container".into()));
            }
            let s = &payload[*pos..*pos + n];
            *pos += n;
            Ok(s)
        };
        let spec_len = u32::from_le_bytes(take(&mut pos, 4)?.try_into().unwrap()) as usize;
        let spec = std::str::from_utf8(take(&mut pos, spec_len)?)
            .map_err(|_| HofaError::Numerical("bad spec string".into()))?
            .to_string();
        let group = GroupSpec::parse(&spec)?;
        let n = u64::from_le_bytes(take(&mut pos, 8)?.try_into().unwrap()) as usize;
        let mut eigenvalues = Vec::with_capacity(n);
        for _ in 0..n {
            eigenvalues.push(f64::from_le_bytes(take(&mut pos, 8)?.try_into().unwrap()));
        }
        let order = group.order();
        let mut eigenvectors = Vec::with_capacity(n);
        for _ in 0..n {
            let mut values = Vec::with_capacity(order);
            for _ in 0..order {
                let re = f64::from_le_bytes(take(&mut pos, 8)?.try_into().unwrap());
                let im = f64::from_le_bytes(take(&mut pos, 8)?.try_into().unwrap());
                values.push(C64::new(re, im));
            }
            eigenvectors.push(GroupFunction::new(group.clone(), values)?);
        }
        Ok(Self {
            group,
            eigenvalues,
            eigenvectors,
        })
    }

    /// JSON summary: group, size, and the top-k eigenvalues.
    pub fn json_summary(&self, top_k: usize) -> serde_json::Value {
        serde_json::json!({
            "group": self.group.spec_string(),
            "count": self.len(),
            "top_eigenvalues": &self.eigenvalues[..top_k.min(self.len())],
        })
    }
}

impl SpectrumSlice {
    pub fn len(&self) -> usize {
        self.kept.len()
    }

    pub fn is_empty(&self) -> bool {
        self.kept.is_empty()
    }
}

pub(crate) fn to_nalgebra(m: &ZMatrix) -> DMatrix<C64> {
    let n = m.order();
    DMatrix::from_fn(n, n, |r, c| m.at(r, c))
}

/// Eigendecompose a self-adjoint kernel under the normalized conventions.
///
/// The input is symmetrized as `(M + M*)/2` first; an asymmetry beyond
/// `1e-8·max(1, ‖M‖_∞)` is an error.
pub fn eigendecompose(m: &ZMatrix) -> Result<EigenDecomposition> {
    let defect = m.self_adjointness_defect();
    let scale = m.norm_inf().max(1.0);
    if defect > 1e-8 * scale {
        return Err(HofaError::NotSelfAdjoint(defect));
    }
    let n = m.order();
    let raw = to_nalgebra(m);
    let herm = (&raw + raw.adjoint()) * C64::new(0.5, 0.0);
    let eig = nalgebra::SymmetricEigen::new(herm);
    // sort: descending eigenvalue, ascending solver index on ties
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        eig.eigenvalues[b]
            .partial_cmp(&eig.eigenvalues[a])
            .unwrap()
            .then(a.cmp(&b))
    });
    let nf = n as f64;
    let sqrt_n = nf.sqrt();
    let eigenvalues: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i] / nf).collect();
    let eigenvectors: Vec<GroupFunction> = order
        .iter()
        .map(|&i| {
            let col = eig.eigenvectors.column(i);
            // raw ℓ²-unit column → unit in normalized L²
            let values: Vec<C64> = col.iter().map(|&z| z * sqrt_n).collect();
            GroupFunction::new(m.group().clone(), values).expect("length matches")
        })
        .collect();
    Ok(EigenDecomposition {
        group: m.group().clone(),
        eigenvalues,
        eigenvectors,
    })
}

/// Orthogonal projection of `f` onto the span of a spectrum slice.
pub fn project(f: &GroupFunction, slice: &SpectrumSlice) -> Result<GroupFunction> {
    let mut out = GroupFunction::zero(f.group().clone());
    for v in &slice.basis {
        let c = f.inner(v)?;
        out = out.add_fn(&v.scale(c))?;
    }
    Ok(out)
}

/// True iff all pairwise gaps in the multiset are ≥ δ (so for δ > 0 every
/// value must have multiplicity one). Empty and singleton sets pass.
pub fn is_separated(values: &[f64], delta: f64) -> bool {
    for (i, &a) in values.iter().enumerate() {
        for &b in &values[i + 1..] {
            if (a - b).abs() < delta {
                return false;
            }
        }
    }
    true
}

/// True iff `λ` appears exactly once in the spectrum and every other
/// eigenvalue is at distance > θ.
pub fn is_theta_isolated(ed: &EigenDecomposition, lambda: f64, theta: f64) -> Result<bool> {
    let hits = ed
        .eigenvalues()
        .iter()
        .filter(|&&l| (l - lambda).abs() <= 1e-10)
        .count();
    if hits == 0 {
        return Err(HofaError::NoQualifyingEigenvalue(format!(
            "{lambda} not in the spectrum (tolerance 1e-10)"
        )));
    }
    if hits > 1 {
        return Ok(false);
    }
    Ok(ed
        .eigenvalues()
        .iter()
        .filter(|&&l| (l - lambda).abs() > 1e-10)
        .all(|&l| (l - lambda).abs() > theta))
}

/// `‖Mv − λv‖₂` for a unit vector `v`: the pseudoeigenvector residual.
pub fn pseudo_residual(m: &ZMatrix, v: &GroupFunction, lambda: f64) -> Result<f64> {
    if (v.norm_l2() - 1.0).abs() > 1e-8 {
        return Err(HofaError::BadParameter(format!(
            "pseudoeigenvector residual needs a unit vector, ‖v‖₂ = {}",
            v.norm_l2()
        )));
    }
    let mv = m.matvec(v)?;
    mv.sub_fn(&v.scale(C64::new(lambda, 0.0))).map(|d| d.norm_l2())
}

/// Project `u = Σ μ_i v_i` onto the eigenvalue cluster `C_δ(λ) = {i : |λ_i − λ| < δ}`.
///
/// When `u` is a β-pseudoeigenvector for `λ`, the discarded part has norm
/// ≤ β/δ (asserted by tests, not by this function).
pub fn cluster_project(
    ed: &EigenDecomposition,
    u: &GroupFunction,
    lambda: f64,
    delta: f64,
) -> Result<GroupFunction> {
    let mut out = GroupFunction::zero(u.group().clone());
    for (i, v) in ed.eigenvectors().iter().enumerate() {
        if (ed.eigenvalues()[i] - lambda).abs() < delta {
            out = out.add_fn(&v.scale(u.inner(v)?))?;
        }
    }
    Ok(out)
}

fn check_orthonormal(basis: &[GroupFunction]) -> Result<()> {
    for (i, a) in basis.iter().enumerate() {
        for (j, b) in basis.iter().enumerate() {
            let ip = a.inner(b)?;
            let expect = if i == j { 1.0 } else { 0.0 };
            if (ip - C64::new(expect, 0.0)).norm() > 1e-8 {
                return Err(HofaError::BadParameter(format!(
                    "basis is not orthonormal: ⟨b_{i}, b_{j}⟩ = {ip}"
                )));
            }
        }
    }
    Ok(())
}

/// Aperture between the subspaces spanned by two orthonormal bases: the
/// operator norm of the difference of the orthogonal projections. Always in
/// `[0, 1]`; a value < 1 forces equal dimensions.
pub fn subspace_distance(p_basis: &[GroupFunction], q_basis: &[GroupFunction]) -> Result<f64> {
    check_orthonormal(p_basis)?;
    check_orthonormal(q_basis)?;
    let n = match p_basis.first().or(q_basis.first()) {
        Some(f) => f.len(),
        None => return Ok(0.0),
    };
    // raw ℓ²-unit columns: divide normalized-unit values by √n
    let scale = 1.0 / (n as f64).sqrt();
    let proj = |basis: &[GroupFunction]| -> DMatrix<C64> {
        let mut p = DMatrix::zeros(n, n);
        for v in basis {
            let col = DVector::from_iterator(n, v.values().iter().map(|&z| z * scale));
            p += &col * col.adjoint();
        }
        p
    };
    let diff = proj(p_basis) - proj(q_basis);
    let svd = diff.svd(false, false);
    Ok(svd.singular_values.iter().copied().fold(0.0, f64::max))
}

/// Sorted-eigenvalue ℓ² distance `(Σ |λ_i(A) − λ_i(B)|²)^{1/2}` between two
/// self-adjoint kernels; never exceeds `‖A − B‖₂` under the normalized
/// conventions.
pub fn hoffman_wielandt_gap(a: &ZMatrix, b: &ZMatrix) -> Result<f64> {
    let ea = eigendecompose(a)?;
    let eb = eigendecompose(b)?;
    Ok(sum_f64(
        ea.eigenvalues()
            .iter()
            .zip(eb.eigenvalues())
            .map(|(x, y)| (x - y) * (x - y)),
    )
    .sqrt())
}

/// Growth constants of the quantitative Gram–Schmidt bound: `C₂ = 1`,
/// `C_s = 13·5^{s−3} − 1` for `s ≥ 3`.
pub fn gram_schmidt_constant(s: usize) -> f64 {
    match s {
        0 | 1 => 0.0,
        2 => 1.0,
        _ => 13.0 * 5f64.powi(s as i32 - 3) - 1.0,
    }
}

/// Orthonormalize near-orthonormal unit vectors, reporting per-vector drift
/// `‖u_i − w_i‖₂`.
///
/// When the inputs satisfy `|⟨u_i, u_j⟩| ≤ τ/C_s`, every drift is at most
/// `C_s·τ`. Violated preconditions are not fatal — the process still runs —
/// but the drift guarantee is then void.
pub fn gram_schmidt_quantitative(
    vectors: &[GroupFunction],
) -> Result<(Vec<GroupFunction>, Vec<f64>)> {
    let mut out: Vec<GroupFunction> = Vec::with_capacity(vectors.len());
    let mut drifts = Vec::with_capacity(vectors.len());
    for u in vectors {
        if (u.norm_l2() - 1.0).abs() > 1e-6 {
            return Err(HofaError::BadParameter(format!(
                "Gram–Schmidt inputs must be unit vectors, got ‖u‖₂ = {}",
                u.norm_l2()
            )));
        }
        let mut w = u.clone();
        for prev in &out {
            let c = w.inner(prev)?;
            w = w.sub_fn(&prev.scale(c))?;
        }
        let nrm = w.norm_l2();
        if nrm < 1e-12 {
            return Err(HofaError::Numerical(
                "Gram–Schmidt input is (numerically) linearly dependent".into(),
            ));
        }
        let w = w.scale(C64::new(1.0 / nrm, 0.0));
        drifts.push(u.sub_fn(&w)?.norm_l2());
        out.push(w);
    }
    Ok((out, drifts))
}

/// Closest unitary to a square complex matrix (polar decomposition), plus
/// the operator-norm residual `max_i |σ_i − 1|`.
pub fn nearest_unitary(w: &DMatrix<C64>) -> Result<(DMatrix<C64>, f64)> {
    if w.nrows() != w.ncols() {
        return Err(HofaError::ShapeMismatch(format!(
            "nearest unitary needs a square matrix, got {}×{}",
            w.nrows(),
            w.ncols()
        )));
    }
    let svd = w.clone().svd(true, true);
    let smin = svd.singular_values.iter().copied().fold(f64::INFINITY, f64::min);
    if smin < 1e-12 {
        return Err(HofaError::Numerical(format!(
            "matrix is rank-deficient (σ_min = {smin:.3e}); no well-defined nearest unitary"
        )));
    }
    let u = svd.u.as_ref().expect("requested");
    let vt = svd.v_t.as_ref().expect("requested");
    let unitary = u * vt;
    let residual = svd
        .singular_values
        .iter()
        .map(|&s| (s - 1.0).abs())
        .fold(0.0, f64::max);
    Ok((unitary, residual))
}

/// Exact `sup_{‖x‖=1} |‖Wx‖² − ‖x‖²|` — the spectral radius of `W*W − I`,
/// i.e. `max_i |σ_i² − 1|`.
pub fn quasiunitary_defect(w: &DMatrix<C64>) -> Result<f64> {
    if w.nrows() != w.ncols() {
        return Err(HofaError::ShapeMismatch(format!(
            "quasiunitary defect needs a square matrix, got {}×{}",
            w.nrows(),
            w.ncols()
        )));
    }
    let svd = w.clone().svd(false, false);
    Ok(svd
        .singular_values
        .iter()
        .map(|&s| (s * s - 1.0).abs())
        .fold(0.0, f64::max))
}
