//! The two top-level procedures — spectral U³-regularization and quadratic
//! character decomposition — together with the ρ-selection scan, seeded
//! random unit vectors, the order-increment iteration, and the denoising
//! demonstration experiment.

use crate::characters::denoised_gram;
use crate::fourier_ops::apply_k_eps;
use crate::gowers::uk_norm;
use crate::group::{fourier_transform, inverse_fourier_transform, GroupFunction, GroupSpec};
use crate::spectral::{
    eigendecompose, is_separated, project, EigenDecomposition, SpectrumSlice,
};
use crate::util::sum_f64;
use crate::zmatrix::{from_diagonals, outer, DiagonalFamily};
use crate::{C64, HofaError, Result};
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};

/// Seed plus stream id for the counter-based generator. The Gaussian
/// sampling algorithm is fixed (Box–Muller over 53-bit uniforms), so equal
/// seeds give bit-identical output on every platform.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RngSeed {
    pub seed: u64,
    pub stream: u64,
}

impl RngSeed {
    pub fn new(seed: u64) -> Self {
        Self { seed, stream: 0 }
    }

    pub fn with_stream(seed: u64, stream: u64) -> Self {
        Self { seed, stream }
    }

    pub(crate) fn source(self) -> GaussianSource {
        let mut rng = ChaCha12Rng::seed_from_u64(self.seed);
        rng.set_stream(self.stream);
        GaussianSource { rng }
    }
}

pub(crate) struct GaussianSource {
    rng: ChaCha12Rng,
}

impl GaussianSource {
    /// Uniform in (0, 1], from the top 53 bits.
    fn uniform(&mut self) -> f64 {
        ((self.rng.next_u64() >> 11) + 1) as f64 * (1.0 / 9007199254740992.0)
    }

    /// One standard normal draw (Box–Muller, cosine branch only — simple
    /// and branch-free beats caching the second draw here).
    pub(crate) fn standard_normal(&mut self) -> f64 {
        let u1 = self.uniform();
        let u2 = self.uniform();
        (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
    }

    pub(crate) fn standard_complex(&mut self) -> C64 {
        C64::new(self.standard_normal(), self.standard_normal())
    }
}

/// Output of one run of the U³-regularization procedure.
#[derive(Debug, Clone)]
pub struct RegularizationReport {
    pub epsilon: f64,
    pub rho: f64,
    pub f_reg: GroupFunction,
    pub kept: SpectrumSlice,
    /// `‖f − f_reg‖_{U³}`, recomputed from the final output.
    pub u3_residual: f64,
    pub l2_residual: f64,
    /// Full spectrum, descending.
    pub eigenvalues: Vec<f64>,
    pub decomposition: EigenDecomposition,
}

impl RegularizationReport {
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "epsilon": self.epsilon,
            "rho": self.rho,
            "u3_residual": self.u3_residual,
            "l2_residual": self.l2_residual,
            "eigenvalues": self.eigenvalues,
            "kept_indices": self.kept.kept,
            "kept_eigenvalues": self.kept.eigenvalues,
        })
    }
}

fn check_unit_interval(pairs: &[(&str, f64)]) -> Result<()> {
    for &(name, v) in pairs {
        if !(v > 0.0 && v <= 1.0) {
            return Err(HofaError::BadParameter(format!(
                "{name} must lie in (0,1], got {v}"
            )));
        }
    }
    Ok(())
}

/// Regularize `f`: build `𝒦_ε(f⊗f̄)`, eigendecompose, and keep the part of
/// `f` lying in eigenspaces with eigenvalue ≥ ρ.
///
/// 1-boundedness of `f` is assumed by the theory behind the residual
/// guarantees but deliberately not enforced; the report always carries the
/// measured residuals.
pub fn regularize_u3(f: &GroupFunction, rho: f64, epsilon: f64) -> Result<RegularizationReport> {
    check_unit_interval(&[("rho", rho), ("epsilon", epsilon)])?;
    let ed = eigendecompose(&denoised_gram(f, epsilon)?)?;
    let kept = ed.slice(rho);
    let f_reg = project(f, &kept)?;
    finish_report(f, f_reg, kept, ed, rho, epsilon)
}

fn finish_report(
    f: &GroupFunction,
    f_reg: GroupFunction,
    kept: SpectrumSlice,
    ed: EigenDecomposition,
    rho: f64,
    epsilon: f64,
) -> Result<RegularizationReport> {
    let diff = f.sub_fn(&f_reg)?;
    Ok(RegularizationReport {
        epsilon,
        rho,
        u3_residual: uk_norm(&diff, 3)?,
        l2_residual: diff.norm_l2(),
        f_reg,
        kept,
        eigenvalues: ed.eigenvalues().to_vec(),
        decomposition: ed,
    })
}

/// Weight of an eigenvalue in the continuous variant: the average over
/// `ρ′ ∈ [ρ/2, ρ]` of the indicator `1(μ ≥ ρ′)`, which evaluates to
/// `clamp((μ − ρ/2)/(ρ/2), 0, 1)`.
pub fn continuous_weight(mu: f64, rho: f64) -> f64 {
    ((mu - rho / 2.0) / (rho / 2.0)).clamp(0.0, 1.0)
}

/// Continuous variant: averages the discrete output over thresholds
/// `ρ′ ∈ [ρ/2, ρ]`, so eigenvalues near the threshold are kept with
/// fractional weight instead of jumping in and out.
pub fn regularize_u3_continuous(
    f: &GroupFunction,
    rho: f64,
    epsilon: f64,
) -> Result<RegularizationReport> {
    check_unit_interval(&[("rho", rho), ("epsilon", epsilon)])?;
    let ed = eigendecompose(&denoised_gram(f, epsilon)?)?;
    let mut f_reg = GroupFunction::zero(f.group().clone());
    for (i, v) in ed.eigenvectors().iter().enumerate() {
        let w = continuous_weight(ed.eigenvalues()[i], rho);
        if w > 0.0 {
            f_reg = f_reg.add_fn(&v.scale(f.inner(v)? * C64::new(w, 0.0)))?;
        }
    }
    // the slice records which eigenvalues carry any weight (μ > ρ/2)
    let kept = ed.slice(rho / 2.0 + f64::EPSILON);
    finish_report(f, f_reg, kept, ed, rho, epsilon)
}

/// Result of the threshold scan: the chosen ρ and its distance to the
/// nearest eigenvalue.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct RhoChoice {
    pub rho: f64,
    pub gap: f64,
}

/// Scan `[ρ₀/2, ρ₀]` for the threshold farthest (two-sidedly) from the
/// spectrum; ties go to the largest ρ. The maximum over the closed interval
/// is attained either at an endpoint or at a midpoint of two consecutive
/// eigenvalues, so only those are examined.
pub fn choose_rho_from_values(eigenvalues: &[f64], rho0: f64) -> Result<RhoChoice> {
    if !(rho0 > 0.0 && rho0 < 1.0) {
        return Err(HofaError::BadParameter(format!(
            "rho0 must lie in (0,1), got {rho0}"
        )));
    }
    let lo = rho0 / 2.0;
    let hi = rho0;
    let gap = |rho: f64| -> f64 {
        eigenvalues
            .iter()
            .map(|&l| (l - rho).abs())
            .fold(f64::INFINITY, f64::min)
    };
    let mut sorted = eigenvalues.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mut candidates = vec![lo, hi];
    for pair in sorted.windows(2) {
        let mid = (pair[0] + pair[1]) / 2.0;
        if mid > lo && mid < hi {
            candidates.push(mid);
        }
    }
    let mut best = RhoChoice { rho: hi, gap: gap(hi) };
    for &c in &candidates {
        let g = gap(c);
        if g > best.gap + 1e-15 || ((g - best.gap).abs() <= 1e-15 && c > best.rho) {
            best = RhoChoice { rho: c, gap: g };
        }
    }
    Ok(best)
}

/// [`choose_rho_from_values`] applied to a decomposition's spectrum.
pub fn choose_rho(ed: &EigenDecomposition, rho0: f64) -> Result<RhoChoice> {
    choose_rho_from_values(ed.eigenvalues(), rho0)
}

/// A random unit vector in the span of an orthonormal basis: coefficients
/// are iid complex Gaussians normalized to the unit sphere, so the result
/// is uniform on the unit sphere of the span.
pub fn random_unit_vector(basis: &[GroupFunction], seed: RngSeed) -> Result<GroupFunction> {
    if basis.is_empty() {
        return Err(HofaError::BadParameter(
            "random unit vector needs a non-empty basis".into(),
        ));
    }
    let mut src = seed.source();
    let coeffs: Vec<C64> = basis.iter().map(|_| src.standard_complex()).collect();
    let norm = sum_f64(coeffs.iter().map(|c| c.norm_sqr())).sqrt();
    if norm < 1e-300 {
        return Err(HofaError::Numerical("degenerate Gaussian draw".into()));
    }
    let mut h = GroupFunction::zero(basis[0].group().clone());
    for (c, v) in coeffs.iter().zip(basis) {
        h = h.add_fn(&v.scale(c / norm))?;
    }
    Ok(h)
}

/// Which branch the decomposition took after the first pass.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum DecompositionBranch {
    Separated,
    Randomized,
}

/// Output of the quadratic character decomposition.
#[derive(Debug, Clone)]
pub struct CharacterDecompositionReport {
    pub rho: f64,
    pub epsilon: f64,
    pub delta: f64,
    pub seed: RngSeed,
    pub branch: DecompositionBranch,
    /// Unit vectors from the second pass, descending by eigenvalue.
    pub vectors: Vec<GroupFunction>,
    /// `⟨f, v′_i⟩` for each output vector.
    pub correlations: Vec<C64>,
    pub first_pass_eigenvalues: Vec<f64>,
    pub second_pass_eigenvalues: Vec<f64>,
    /// Separation of the second-pass top spectrum AND equal slice sizes —
    /// exactly the procedure's own acceptance test.
    pub success: bool,
    /// `√(ρ/2) − 56ρ^{7/2}`: the correlation each output vector should
    /// reach when it approximates a genuine component.
    pub correlation_floor: f64,
}

impl CharacterDecompositionReport {
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "rho": self.rho,
            "epsilon": self.epsilon,
            "delta": self.delta,
            "seed": self.seed,
            "branch": self.branch,
            "success": self.success,
            "correlation_floor": self.correlation_floor,
            "correlations": self.correlations.iter()
                .map(|c| serde_json::json!([c.re, c.im])).collect::<Vec<_>>(),
            "first_pass_eigenvalues": self.first_pass_eigenvalues,
            "second_pass_eigenvalues": self.second_pass_eigenvalues,
        })
    }
}

/// Two-pass quadratic character decomposition.
///
/// First pass regularizes `f` at `(ρ, ε)`. If the retained eigenvalues are
/// pairwise δ-separated the regularized function itself seeds the second
/// pass; otherwise a random unit vector in the retained eigenspace does.
/// The second pass regularizes the seed at `(δ, ε)`; its eigenvectors are
/// the output, and the run self-reports success when the second-pass top
/// spectrum is δ-separated with the same cardinality as the first.
pub fn quadratic_character_decomposition(
    f: &GroupFunction,
    rho: f64,
    epsilon: f64,
    delta: f64,
    seed: RngSeed,
) -> Result<CharacterDecompositionReport> {
    check_unit_interval(&[("rho", rho), ("epsilon", epsilon), ("delta", delta)])?;
    let pass1 = regularize_u3(f, rho, epsilon)?;
    let s = pass1.kept.len();
    let (branch, h) = if s > 0 && !is_separated(&pass1.kept.eigenvalues, delta) {
        (
            DecompositionBranch::Randomized,
            random_unit_vector(&pass1.kept.basis, seed)?,
        )
    } else {
        (DecompositionBranch::Separated, pass1.f_reg.clone())
    };
    let pass2 = regularize_u3(&h, delta, epsilon)?;
    let success = is_separated(&pass2.kept.eigenvalues, delta) && s == pass2.kept.len();
    let mut correlations = Vec::with_capacity(pass2.kept.len());
    for v in &pass2.kept.basis {
        correlations.push(f.inner(v)?);
    }
    Ok(CharacterDecompositionReport {
        rho,
        epsilon,
        delta,
        seed,
        branch,
        vectors: pass2.kept.basis,
        correlations,
        first_pass_eigenvalues: pass1.kept.eigenvalues,
        second_pass_eigenvalues: pass2.kept.eigenvalues,
        success,
        correlation_floor: (rho / 2.0).sqrt() - 56.0 * rho.powf(3.5),
    })
}

/// Innermost operator of the order-increment tower: Fourier truncation at
/// `|ĝ(χ)|² ≥ ρ` followed by coefficient denoising at ε.
fn stage_one(g: &GroupFunction, epsilon: f64, rho: f64) -> Result<GroupFunction> {
    let mut ghat = fourier_transform(g);
    for z in ghat.values_mut() {
        if z.norm_sqr() < rho {
            *z = C64::new(0.0, 0.0);
        }
    }
    apply_k_eps(&inverse_fourier_transform(&ghat), epsilon)
}

/// One projection stage: lift the previous-stage operator to the diagonals
/// of `g⊗ḡ`, eigendecompose, and project `g` at threshold ρ.
fn stage_project(
    g: &GroupFunction,
    prev: &dyn Fn(&GroupFunction) -> Result<GroupFunction>,
    rho: f64,
) -> Result<GroupFunction> {
    let m = outer(g, g)?;
    let mut mapped = Vec::with_capacity(g.len());
    for d in m.diagonals().iter() {
        mapped.push(prev(d)?);
    }
    let lifted = from_diagonals(&DiagonalFamily::new(g.group().clone(), mapped)?);
    let ed = eigendecompose(&lifted)?;
    project(g, &ed.slice(rho))
}

/// Iterated regularization with increasing order, up to three levels.
///
/// Level 1 truncates the spectrum at `ρ₁` and denoises at `ε₁` (with
/// `ρ₁ = 0` this is plain denoising). Each further level j lifts the
/// операtor below it to the diagonals of `g⊗ḡ` and projects at `ρ_j`; with
/// `k = 2` and `ρ₁ = 0` this reproduces [`regularize_u3`]. Only `ε₁` enters
/// the computation — later list entries are accepted for symmetry and
/// ignored. `k = 3` is experimental and guarded to `|Z| ≤ 64`.
pub fn order_increment(
    f: &GroupFunction,
    eps_list: &[f64],
    rho_list: &[f64],
) -> Result<GroupFunction> {
    order_increment_with_spectrum(f, eps_list, rho_list).map(|(g, _)| g)
}

/// [`order_increment`] that also returns the spectrum of the final lifted
/// matrix (empty for `k = 1`, which has no lifted matrix).
pub fn order_increment_with_spectrum(
    f: &GroupFunction,
    eps_list: &[f64],
    rho_list: &[f64],
) -> Result<(GroupFunction, Vec<f64>)> {
    if eps_list.is_empty() || eps_list.len() != rho_list.len() {
        return Err(HofaError::BadParameter(format!(
            "need matching non-empty parameter lists, got {} epsilons and {} rhos",
            eps_list.len(),
            rho_list.len()
        )));
    }
    let k = eps_list.len();
    if k > 3 {
        return Err(HofaError::BadParameter(format!(
            "order increment is implemented for at most 3 levels, got {k}"
        )));
    }
    for (i, &e) in eps_list.iter().enumerate() {
        if !(e > 0.0 && e <= 1.0) {
            return Err(HofaError::BadParameter(format!("eps[{i}] = {e} outside (0,1]")));
        }
    }
    for (i, &r) in rho_list.iter().enumerate() {
        if !(0.0..=1.0).contains(&r) {
            return Err(HofaError::BadParameter(format!("rho[{i}] = {r} outside [0,1]")));
        }
    }
    if k == 3 && f.len() > 64 {
        return Err(HofaError::SizeGuard(format!(
            "three-level order increment is O(|Z|⁴); |Z| = {} exceeds the 64 guard",
            f.len()
        )));
    }
    let (e1, r1) = (eps_list[0], rho_list[0]);
    let o1 = move |g: &GroupFunction| stage_one(g, e1, r1);
    match k {
        1 => Ok((o1(f)?, Vec::new())),
        2 => {
            let m = outer(f, f)?;
            let mut mapped = Vec::with_capacity(f.len());
            for d in m.diagonals().iter() {
                mapped.push(o1(d)?);
            }
            let lifted = from_diagonals(&DiagonalFamily::new(f.group().clone(), mapped)?);
            let ed = eigendecompose(&lifted)?;
            let out = project(f, &ed.slice(rho_list[1]))?;
            Ok((out, ed.eigenvalues().to_vec()))
        }
        _ => {
            let r2 = rho_list[1];
            let o2 = move |g: &GroupFunction| stage_project(g, &o1, r2);
            let m = outer(f, f)?;
            let mut mapped = Vec::with_capacity(f.len());
            for d in m.diagonals().iter() {
                mapped.push(o2(d)?);
            }
            let lifted = from_diagonals(&DiagonalFamily::new(f.group().clone(), mapped)?);
            let ed = eigendecompose(&lifted)?;
            let out = project(f, &ed.slice(rho_list[2]))?;
            Ok((out, ed.eigenvalues().to_vec()))
        }
    }
}

/// The four series of the denoising experiment: clean signal, noisy input,
/// spectral reconstruction, pointwise error.
#[derive(Debug, Clone)]
pub struct DenoiseSeries {
    pub group: GroupSpec,
    pub f: GroupFunction,
    pub g: GroupFunction,
    pub f2: GroupFunction,
    pub err: Vec<f64>,
    pub noise_norm: f64,
    pub reconstruction_error: f64,
}

/// Denoise a quadratic chirp: `f(i) = sin(8i² + 3i + 1)` (integer-argument
/// radians) on `Z_n`, plus Gaussian noise of deviation σ; reconstruct from
/// the `top_k` leading eigenvectors of `𝒦_ε(g⊗ḡ)`.
pub fn denoise_experiment(
    n: usize,
    noise_sigma: f64,
    top_k: usize,
    epsilon: f64,
    seed: RngSeed,
) -> Result<DenoiseSeries> {
    if n < 8 {
        return Err(HofaError::BadParameter(format!(
            "experiment needs n ≥ 8, got {n}"
        )));
    }
    check_unit_interval(&[("epsilon", epsilon)])?;
    if noise_sigma < 0.0 {
        return Err(HofaError::BadParameter(format!(
            "noise deviation must be non-negative, got {noise_sigma}"
        )));
    }
    let group = GroupSpec::cyclic(n);
    let f = GroupFunction::from_fn(group.clone(), |i| {
        let i = i as u64;
        C64::new(((8 * i * i + 3 * i + 1) as f64).sin(), 0.0)
    });
    let mut src = seed.source();
    let g = GroupFunction::from_fn(group.clone(), |i| {
        f.values()[i] + C64::new(noise_sigma * src.standard_normal(), 0.0)
    });
    let ed = eigendecompose(&denoised_gram(&g, epsilon)?)?;
    let mut f2 = GroupFunction::zero(group.clone());
    for v in ed.eigenvectors().iter().take(top_k) {
        f2 = f2.add_fn(&v.scale(g.inner(v)?))?;
    }
    let diff = f.sub_fn(&f2)?;
    Ok(DenoiseSeries {
        group,
        err: diff.values().iter().map(|z| z.norm()).collect(),
        noise_norm: g.sub_fn(&f)?.norm_l2(),
        reconstruction_error: diff.norm_l2(),
        f,
        g,
        f2,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gowers::poly_phase;
    use crate::group::DualCharacter;
    use rand::Rng;

    fn gauss_phase(n: usize, a: i64) -> GroupFunction {
        poly_phase(&GroupSpec::cyclic(n), &[0, 0, a]).unwrap()
    }

    #[test]
    fn regularize_recovers_quadratic_phase() {
        let f = gauss_phase(64, 1);
        let report = regularize_u3(&f, 0.5, 0.1).unwrap();
        assert_eq!(report.kept.len(), 1);
        assert!((report.kept.eigenvalues[0] - 0.9).abs() < 1e-8);
        assert!(report.l2_residual <= 1e-7, "{}", report.l2_residual);
        assert!(report.u3_residual <= 1e-8, "{}", report.u3_residual);
        let j = report.to_json();
        assert_eq!(j["kept_indices"].as_array().unwrap().len(), 1);
    }

    #[test]
    fn regularize_zero_and_noise() {
        let zero = GroupFunction::zero(GroupSpec::cyclic(16));
        let report = regularize_u3(&zero, 0.3, 0.1).unwrap();
        assert!(report.kept.is_empty());
        assert_eq!(report.f_reg.norm_l2(), 0.0);

        let mut src = RngSeed::new(81).source();
        let noise = GroupFunction::from_fn(GroupSpec::cyclic(128), |_| {
            C64::new(if src.standard_normal() > 0.0 { 1.0 } else { -1.0 }, 0.0)
        });
        let noise = noise.sub_fn(&GroupFunction::constant(
            noise.group().clone(),
            noise.mean(),
        ))
        .unwrap();
        let report = regularize_u3(&noise, 0.3, 0.1).unwrap();
        assert!(report.kept.is_empty(), "kept {:?}", report.kept.eigenvalues);
        assert!(report.f_reg.norm_l2() < 1e-12);
    }

    #[test]
    fn rejects_bad_parameters() {
        let f = gauss_phase(9, 1);
        assert!(regularize_u3(&f, 0.0, 0.1).is_err());
        assert!(regularize_u3(&f, 0.5, 1.5).is_err());
        assert!(quadratic_character_decomposition(&f, 0.2, 0.1, 0.0, RngSeed::new(1)).is_err());
    }

    #[test]
    fn continuous_weights() {
        let rho = 0.4;
        assert_eq!(continuous_weight(rho, rho), 1.0);
        assert_eq!(continuous_weight(rho / 2.0, rho), 0.0);
        assert_eq!(continuous_weight(0.1, rho), 0.0);
        assert!((continuous_weight(0.75 * rho, rho) - 0.5).abs() < 1e-12);
        assert_eq!(continuous_weight(0.9, rho), 1.0);
    }

    #[test]
    fn continuous_matches_discrete_away_from_threshold() {
        // spectrum {0.9, ~0}: all weight at 1 for ρ = 0.5
        let f = gauss_phase(32, 1);
        let d = regularize_u3(&f, 0.5, 0.1).unwrap();
        let c = regularize_u3_continuous(&f, 0.5, 0.1).unwrap();
        assert!(c.f_reg.sub_fn(&d.f_reg).unwrap().norm_l2() < 1e-10);
    }

    #[test]
    fn continuous_variant_is_empirically_stable() {
        // perturbation suite at fixed (ρ,ε): report the worst ratio
        // ‖H′(f)−H′(f′)‖/‖f−f′‖; logged, not asserted (no proven constant)
        let f = gauss_phase(16, 1);
        let mut rng = ChaCha12Rng::seed_from_u64(82);
        let mut worst: f64 = 0.0;
        for _ in 0..5 {
            let pert = GroupFunction::from_fn(f.group().clone(), |_| {
                C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
            })
            .scale(C64::new(1e-3, 0.0));
            let fp = f.add_fn(&pert).unwrap();
            let a = regularize_u3_continuous(&f, 0.5, 0.1).unwrap();
            let b = regularize_u3_continuous(&fp, 0.5, 0.1).unwrap();
            let ratio = a.f_reg.sub_fn(&b.f_reg).unwrap().norm_l2() / pert.norm_l2();
            assert!(ratio.is_finite());
            worst = worst.max(ratio);
        }
        println!("continuous-variant worst perturbation ratio: {worst:.3}");
    }

    #[test]
    fn rho_scan() {
        let c = choose_rho_from_values(&[0.9, 0.1], 0.5).unwrap();
        assert_eq!(c.rho, 0.5);
        assert!((c.gap - 0.4).abs() < 1e-12);

        // dense band with one hole: ρ lands at the hole's midpoint
        let mut vals: Vec<f64> = (25..=50).map(|i| i as f64 / 100.0).collect();
        vals.retain(|&v| !(0.34..0.42).contains(&v));
        let c = choose_rho_from_values(&vals, 0.5).unwrap();
        assert!((c.rho - 0.375).abs() < 1e-9, "{}", c.rho);

        // empty spectrum in range: largest candidate wins
        let c = choose_rho_from_values(&[0.9, 0.95], 0.5).unwrap();
        assert_eq!(c.rho, 0.25, "ρ₀/2 is farthest from the high spectrum");
        let c = choose_rho_from_values(&[], 0.5).unwrap();
        assert_eq!(c.rho, 0.5, "no spectrum: infinite gap everywhere, largest ρ");
    }

    #[test]
    fn random_unit_vector_basics() {
        let g = GroupSpec::cyclic(8);
        let basis: Vec<GroupFunction> = (0..3)
            .map(|i| DualCharacter::from_index(g.clone(), i).as_function())
            .collect();
        let seed = RngSeed::new(4);
        let h = random_unit_vector(&basis, seed).unwrap();
        assert!((h.norm_l2() - 1.0).abs() < 1e-12);
        let h2 = random_unit_vector(&basis, seed).unwrap();
        assert_eq!(h.values(), h2.values(), "same seed, bitwise equal");
        let h3 = random_unit_vector(&basis, RngSeed::with_stream(4, 1)).unwrap();
        assert!(h.sub_fn(&h3).unwrap().norm_l2() > 1e-6, "stream changes draw");

        let single = random_unit_vector(&basis[..1], seed).unwrap();
        let ip = single.inner(&basis[0]).unwrap();
        assert!((ip.norm() - 1.0).abs() < 1e-12, "unit multiple of the one vector");

        assert!(random_unit_vector(&[], seed).is_err());
    }

    #[test]
    fn sphere_coefficients_follow_dirichlet_marginals() {
        // |c₁|² of a uniform point on the complex 4-sphere is Beta(1,3):
        // CDF 1 − (1−x)³. Kolmogorov–Smirnov over 10⁴ draws.
        let g = GroupSpec::cyclic(8);
        let basis: Vec<GroupFunction> = (0..4)
            .map(|i| DualCharacter::from_index(g.clone(), i).as_function())
            .collect();
        let mut samples: Vec<f64> = (0..10_000)
            .map(|i| {
                let h = random_unit_vector(&basis, RngSeed::with_stream(99, i)).unwrap();
                h.inner(&basis[0]).unwrap().norm_sqr()
            })
            .collect();
        samples.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let n = samples.len() as f64;
        let mut ks: f64 = 0.0;
        for (i, &x) in samples.iter().enumerate() {
            let cdf = 1.0 - (1.0 - x).powi(3);
            ks = ks
                .max((cdf - i as f64 / n).abs())
                .max((cdf - (i + 1) as f64 / n).abs());
        }
        assert!(ks < 0.02, "KS statistic {ks}");
    }

    #[test]
    fn decomposition_separated_branch() {
        // Components e(x²/64) and e((2x²+x)/64) are exactly orthogonal: their
        // cross terms carry an odd linear and odd quadratic coefficient, so the
        // x ↦ x+32 pairing cancels every cross Gauss sum. All cross-diagonal
        // coefficients sit on odd frequencies with modulus ≤ 2·0.48·√(1/32),
        // so ε = 0.2 removes them entirely and the recovered correlations are
        // the exact component weights.
        let g = GroupSpec::cyclic(64);
        let f = gauss_phase(64, 1)
            .scale(C64::new(0.8, 0.0))
            .add_fn(&poly_phase(&g, &[0, 1, 2]).unwrap().scale(C64::new(0.6, 0.0)))
            .unwrap();
        let report =
            quadratic_character_decomposition(&f, 0.1, 0.2, 0.05, RngSeed::new(2)).unwrap();
        assert_eq!(report.branch, DecompositionBranch::Separated);
        assert!(report.success);
        assert_eq!(report.vectors.len(), 2);
        let mut mags: Vec<f64> = report.correlations.iter().map(|c| c.norm()).collect();
        mags.sort_by(|a, b| b.partial_cmp(a).unwrap());
        assert!((mags[0] - 0.8).abs() < 1e-9, "{}", mags[0]);
        assert!((mags[1] - 0.6).abs() < 1e-9, "{}", mags[1]);
    }

    #[test]
    fn decomposition_single_character() {
        let g = GroupSpec::cyclic(32);
        let chi = DualCharacter::from_index(g, 5).as_function();
        let report =
            quadratic_character_decomposition(&chi, 0.3, 0.1, 0.1, RngSeed::new(3)).unwrap();
        assert!(report.success);
        assert_eq!(report.vectors.len(), 1);
        let ip = report.vectors[0].inner(&chi).unwrap();
        assert!((ip.norm() - 1.0).abs() < 1e-8);
    }

    #[test]
    fn decomposition_randomized_branch() {
        // Equal weights over the exactly orthogonal Z_64 pair: at ε = 0.2 the
        // first-pass eigenvalues are exactly equal, so any δ > 0 triggers the
        // random seed vector. Seed 2 draws weights whose second pass keeps
        // both components and separates them.
        let g = GroupSpec::cyclic(64);
        let phi1 = gauss_phase(64, 1);
        let phi2 = poly_phase(&g, &[0, 1, 2]).unwrap();
        let f = phi1.add_fn(&phi2).unwrap();
        let f = f.scale(C64::new(1.0 / f.norm_l2(), 0.0));
        let report =
            quadratic_character_decomposition(&f, 0.2, 0.2, 0.01, RngSeed::new(2)).unwrap();
        assert_eq!(report.branch, DecompositionBranch::Randomized);
        assert!(report.success);
        assert_eq!(report.vectors.len(), 2);
        let mut best = [0.0f64; 2];
        for (v, slot) in report.vectors.iter().zip(&mut best) {
            let c1 = v.inner(&phi1).unwrap().norm();
            let c2 = v.inner(&phi2).unwrap().norm();
            assert!(
                c1.max(c2) > 0.9,
                "recovered vector correlates with neither component: {c1}, {c2}"
            );
            *slot = c2 - c1;
        }
        assert!(
            best[0] * best[1] < 0.0,
            "the two vectors must recover distinct components"
        );
        // determinism of the full report
        let again =
            quadratic_character_decomposition(&f, 0.2, 0.2, 0.01, RngSeed::new(2)).unwrap();
        assert_eq!(report.success, again.success);
        for (a, b) in report.vectors.iter().zip(&again.vectors) {
            assert_eq!(a.values(), b.values());
        }
    }

    #[test]
    fn order_increment_level_1_closed_form() {
        // coefficients (0.8, 0.5): truncation at ρ = 0.3 drops the second,
        // then denoising shrinks the survivor by ε
        let g = GroupSpec::cyclic(16);
        let f = DualCharacter::from_index(g.clone(), 1)
            .as_function()
            .scale(C64::new(0.8, 0.0))
            .add_fn(
                &DualCharacter::from_index(g.clone(), 2)
                    .as_function()
                    .scale(C64::new(0.5, 0.0)),
            )
            .unwrap();
        let out = order_increment(&f, &[0.1], &[0.3]).unwrap();
        let expect = DualCharacter::from_index(g, 1)
            .as_function()
            .scale(C64::new(0.7, 0.0));
        assert!(out.sub_fn(&expect).unwrap().norm_l2() < 1e-10);
    }

    #[test]
    fn order_increment_level_2_is_regularization() {
        let f = gauss_phase(32, 1);
        let via_iter = order_increment(&f, &[0.1, 0.1], &[0.0, 0.5]).unwrap();
        let direct = regularize_u3(&f, 0.5, 0.1).unwrap().f_reg;
        assert!(via_iter.sub_fn(&direct).unwrap().norm_l2() < 1e-9);
    }

    #[test]
    fn order_increment_level_3_on_cubic_phase() {
        let f = poly_phase(&GroupSpec::cyclic(27), &[0, 0, 0, 1]).unwrap();
        let (out, spectrum) =
            order_increment_with_spectrum(&f, &[0.1, 0.1, 0.1], &[0.0, 0.25, 0.25]).unwrap();
        assert!(spectrum[0] >= 0.5, "top eigenvalue {}", spectrum[0]);
        assert!(out.norm_l2() > 0.5, "projection retains the phase");
    }

    #[test]
    fn order_increment_guards() {
        let f = gauss_phase(9, 1);
        assert!(order_increment(&f, &[], &[]).is_err());
        assert!(order_increment(&f, &[0.1], &[0.3, 0.4]).is_err());
        assert!(order_increment(&f, &[0.1; 4], &[0.3; 4]).is_err());
        let big = gauss_phase(128, 1);
        assert!(matches!(
            order_increment(&big, &[0.1; 3], &[0.2; 3]),
            Err(HofaError::SizeGuard(_))
        ));
    }

    #[test]
    fn denoise_experiment_invariants() {
        // σ = 0: the chirp is not periodic on Z_128, so six Gram eigenvectors
        // capture most but not all of it. The relative error is a frozen
        // regression value, not a near-zero bound.
        let clean = denoise_experiment(128, 0.0, 6, 0.1, RngSeed::new(7)).unwrap();
        let rel = clean.reconstruction_error / clean.f.norm_l2();
        assert!((rel - 0.2075671275626775).abs() < 1e-9, "relative error {rel}");

        // top_k = 0 returns the zero reconstruction
        let none = denoise_experiment(64, 0.3, 0, 0.1, RngSeed::new(7)).unwrap();
        assert_eq!(none.f2.norm_l2(), 0.0);
        assert!((none.reconstruction_error - none.f.norm_l2()).abs() < 1e-12);

        assert!(denoise_experiment(4, 0.1, 6, 0.1, RngSeed::new(7)).is_err());
    }

    #[test]
    fn regularization_is_nearly_idempotent_on_mixtures() {
        let n = 32;
        let f = gauss_phase(n, 1)
            .scale(C64::new(0.8, 0.0))
            .add_fn(&gauss_phase(n, 3).scale(C64::new(0.55, 0.0)))
            .unwrap();
        let once = regularize_u3(&f, 0.2, 0.05).unwrap();
        let twice = regularize_u3(&once.f_reg, 0.2, 0.05).unwrap();
        let drift = twice.f_reg.sub_fn(&once.f_reg).unwrap().norm_l2();
        assert!(drift < 0.1, "second application moved output by {drift}");
    }

    #[test]
    fn chosen_rho_meets_residual_bound_on_corpus() {
        // ‖f − f_reg‖_{U³} ≤ 2ρ^{3/8} for 1-bounded corpus inputs with
        // (ρ, gap) from the scan
        let corpus: Vec<GroupFunction> = vec![
            gauss_phase(32, 1),
            gauss_phase(27, 2),
            gauss_phase(32, 1)
                .scale(C64::new(0.6, 0.0))
                .add_fn(&gauss_phase(32, 3).scale(C64::new(0.5, 0.0)))
                .unwrap(),
        ];
        for f in &corpus {
            let eps = 0.1;
            let ed = eigendecompose(&denoised_gram(f, eps).unwrap()).unwrap();
            let rho = choose_rho(&ed, 0.4).unwrap().rho;
            let report = regularize_u3(f, rho, eps).unwrap();
            let bound = 2.0 * rho.powf(0.375);
            assert!(
                report.u3_residual <= bound,
                "residual {} vs bound {bound}",
                report.u3_residual
            );
        }
    }

    use rand_chacha::ChaCha12Rng;
    use rand::SeedableRng;
}
