//! Signature-aware pointwise algebra of second fundamental forms.
//!
//! A second fundamental form at a point is stored as the coefficient array
//! `h[α][i][j]` with respect to pseudo-orthonormal bases of the domain
//! `E^m_p` and codomain `E^n_q`. Indices are 1-based in the mathematical
//! notation used in doc comments and 0-based in storage; [`Signature::epsilon`]
//! is the single place where the sign convention `ε_i = -1` for the first `p`
//! basis vectors is applied.
//!
//! The degree-two invariants are
//!
//! ```text
//! Q1(H) = Σ_α ε'_α Σ_{i,j} ε_i ε_j (h^α_ij)^2
//! Q2(H) = Σ_α ε'_α (Σ_i ε_i h^α_ii)^2
//! CF(H) = Q2(H) - Q1(H)
//! WC(H) = m Q1(H) - Q2(H)
//! ```
//!
//! and they can equally be read off the four-tensor
//! `ρ_ijkl = Σ_α ε'_α h^α_ij h^α_kl` by the contractions `C12 C34` (giving Q2)
//! and `C13 C24` (giving Q1).

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::sum::pairwise_sum;

/// Tolerance for `aᵀ η a = η`.
pub const PSEUDO_ORTHOGONAL_TOL: f64 = 1e-10;

/// Dimension and index of a pseudo-Euclidean space `E^dim_index`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Signature {
    dim: usize,
    index: usize,
}

impl Signature {
    pub fn new(dim: usize, index: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidInput("signature dimension must be positive".into()));
        }
        if index > dim {
            return Err(Error::InvalidInput(format!(
                "signature index {index} exceeds dimension {dim}"
            )));
        }
        Ok(Self { dim, index })
    }

    /// Positive-definite signature `(dim, 0)`.
    pub fn riemannian(dim: usize) -> Self {
        assert!(dim > 0, "signature dimension must be positive");
        Self { dim, index: 0 }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn index(&self) -> usize {
        self.index
    }

    /// `ε` for the 0-based storage index `i` (basis vector `i + 1`).
    #[inline]
    pub fn epsilon(&self, i: usize) -> f64 {
        if i < self.index {
            -1.0
        } else {
            1.0
        }
    }

    /// The diagonal signature matrix `η = diag(ε_1, …, ε_dim)`.
    pub fn eta(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.dim, self.dim, |i, j| if i == j { self.epsilon(i) } else { 0.0 })
    }
}

/// Coefficients `h^α_ij` of a symmetric bilinear map `E^m_p × E^m_p → E^n_q`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FormCoefficients {
    domain: Signature,
    codomain: Signature,
    h: Vec<f64>,
}

impl FormCoefficients {
    /// Builds a form from a flat `[α][i][j]` array, rejecting non-symmetric input.
    pub fn new(domain: Signature, codomain: Signature, h: Vec<f64>) -> Result<Self> {
        let m = domain.dim();
        let n = codomain.dim();
        if h.len() != n * m * m {
            return Err(Error::InvalidInput(format!(
                "expected {} coefficients for m={m}, n={n}, got {}",
                n * m * m,
                h.len()
            )));
        }
        let scale = h.iter().fold(0.0_f64, |a, v| a.max(v.abs())).max(1.0);
        for a in 0..n {
            for i in 0..m {
                for j in (i + 1)..m {
                    let d = (h[(a * m + i) * m + j] - h[(a * m + j) * m + i]).abs();
                    if d > 1e-12 * scale {
                        return Err(Error::InvalidInput(format!(
                            "h[{a}][{i}][{j}] is not symmetric (deviation {d:.3e})"
                        )));
                    }
                }
            }
        }
        Ok(Self { domain, codomain, h })
    }

    /// Builds a form from `f(α, i, j)`, evaluated for `i ≤ j` and mirrored.
    pub fn from_fn(domain: Signature, codomain: Signature, mut f: impl FnMut(usize, usize, usize) -> f64) -> Self {
        let m = domain.dim();
        let n = codomain.dim();
        let mut h = vec![0.0; n * m * m];
        for a in 0..n {
            for i in 0..m {
                for j in i..m {
                    let v = f(a, i, j);
                    h[(a * m + i) * m + j] = v;
                    h[(a * m + j) * m + i] = v;
                }
            }
        }
        Self { domain, codomain, h }
    }

    pub fn zeros(domain: Signature, codomain: Signature) -> Self {
        Self::from_fn(domain, codomain, |_, _, _| 0.0)
    }

    /// Random symmetric coefficients with standard normal entries.
    pub fn random(domain: Signature, codomain: Signature, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Self::from_fn(domain, codomain, |_, _, _| rng.sample(StandardNormal))
    }

    pub fn domain(&self) -> Signature {
        self.domain
    }

    pub fn codomain(&self) -> Signature {
        self.codomain
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.h
    }

    #[inline]
    pub fn get(&self, alpha: usize, i: usize, j: usize) -> f64 {
        let m = self.domain.dim();
        self.h[(alpha * m + i) * m + j]
    }

    pub fn scaled(&self, t: f64) -> Self {
        Self {
            domain: self.domain,
            codomain: self.codomain,
            h: self.h.iter().map(|v| v * t).collect(),
        }
    }
}

/// `Q1(H) = Σ_α ε'_α Σ_{i,j} ε_i ε_j (h^α_ij)^2`.
pub fn eval_q1(form: &FormCoefficients) -> f64 {
    let (m, n) = (form.domain.dim(), form.codomain.dim());
    let mut terms = Vec::with_capacity(n * m * m);
    for a in 0..n {
        let ea = form.codomain.epsilon(a);
        for i in 0..m {
            for j in 0..m {
                let v = form.get(a, i, j);
                terms.push(ea * form.domain.epsilon(i) * form.domain.epsilon(j) * v * v);
            }
        }
    }
    pairwise_sum(&terms)
}

/// `Q2(H) = Σ_α ε'_α (Σ_i ε_i h^α_ii)^2`.
pub fn eval_q2(form: &FormCoefficients) -> f64 {
    let (m, n) = (form.domain.dim(), form.codomain.dim());
    let mut terms = Vec::with_capacity(n);
    for a in 0..n {
        let diag: Vec<f64> = (0..m).map(|i| form.domain.epsilon(i) * form.get(a, i, i)).collect();
        let trace = pairwise_sum(&diag);
        terms.push(form.codomain.epsilon(a) * trace * trace);
    }
    pairwise_sum(&terms)
}

/// Chern–Federer polynomial `Q2 - Q1`.
pub fn eval_cf(form: &FormCoefficients) -> f64 {
    eval_q2(form) - eval_q1(form)
}

/// Willmore–Chen polynomial `m Q1 - Q2`.
pub fn eval_wc(form: &FormCoefficients) -> f64 {
    form.domain.dim() as f64 * eval_q1(form) - eval_q2(form)
}

/// Largest entry of `|aᵀ η a - η|`.
pub fn pseudo_orthogonality_defect(a: &DMatrix<f64>, sig: Signature) -> f64 {
    if a.nrows() != sig.dim() || a.ncols() != sig.dim() {
        return f64::INFINITY;
    }
    let eta = sig.eta();
    (a.transpose() * &eta * a - eta).amax()
}

/// Applies `g = (a, b)`: `(gH)(u, v) = b(H(a⁻¹u, a⁻¹v))`.
pub fn act_group(a: &DMatrix<f64>, b: &DMatrix<f64>, form: &FormCoefficients) -> Result<FormCoefficients> {
    let defect_a = pseudo_orthogonality_defect(a, form.domain);
    let defect_b = pseudo_orthogonality_defect(b, form.codomain);
    let defect = defect_a.max(defect_b);
    if !(defect <= PSEUDO_ORTHOGONAL_TOL) {
        return Err(Error::NotPseudoOrthogonal(defect));
    }
    let (m, n) = (form.domain.dim(), form.codomain.dim());
    let eta_m = form.domain.eta();
    // a⁻¹ = η aᵀ η for a pseudo-orthogonal a
    let a_inv = &eta_m * a.transpose() * &eta_m;

    // Components of H(e_i, e_j) in the basis ξ_β are ε'_β h^β_ij.
    let mut comp = vec![0.0; n * m * m];
    for beta in 0..n {
        let eb = form.codomain.epsilon(beta);
        for i in 0..m {
            for j in 0..m {
                comp[(beta * m + i) * m + j] = eb * form.get(beta, i, j);
            }
        }
    }
    // Domain change: c'_kl = Σ_ij (a⁻¹)_ik (a⁻¹)_jl c_ij, done in two passes.
    let mut half = vec![0.0; n * m * m];
    for beta in 0..n {
        for k in 0..m {
            for j in 0..m {
                let mut acc = 0.0;
                for i in 0..m {
                    acc += a_inv[(i, k)] * comp[(beta * m + i) * m + j];
                }
                half[(beta * m + k) * m + j] = acc;
            }
        }
    }
    let mut dom = vec![0.0; n * m * m];
    for beta in 0..n {
        for k in 0..m {
            for l in 0..m {
                let mut acc = 0.0;
                for j in 0..m {
                    acc += a_inv[(j, l)] * half[(beta * m + k) * m + j];
                }
                dom[(beta * m + k) * m + l] = acc;
            }
        }
    }
    Ok(FormCoefficients::from_fn(form.domain, form.codomain, |alpha, k, l| {
        let mut acc = 0.0;
        for beta in 0..n {
            acc += b[(alpha, beta)] * dom[(beta * m + k) * m + l];
        }
        form.codomain.epsilon(alpha) * acc
    }))
}

fn haar_orthogonal(dim: usize, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    if dim == 0 {
        return DMatrix::zeros(0, 0);
    }
    let g = DMatrix::from_fn(dim, dim, |_, _| rng.sample::<f64, _>(StandardNormal));
    let qr = g.qr();
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..dim {
        if r[(j, j)] < 0.0 {
            for i in 0..dim {
                q[(i, j)] = -q[(i, j)];
            }
        }
    }
    q
}

/// Deterministic random element of `O(p, m - p)` for the given seed.
///
/// Riemannian signatures get a Haar-distributed orthogonal matrix. Indefinite
/// signatures get block rotations around one hyperbolic boost per timelike
/// direction, each with rapidity drawn from `[-1, 1]`.
pub fn random_pseudo_orthogonal(sig: Signature, seed: u64) -> DMatrix<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (m, p) = (sig.dim(), sig.index());
    if p == 0 || p == m {
        return haar_orthogonal(m, &mut rng);
    }
    let block = |rng: &mut ChaCha8Rng| {
        let neg = haar_orthogonal(p, rng);
        let pos = haar_orthogonal(m - p, rng);
        let mut out = DMatrix::zeros(m, m);
        out.view_mut((0, 0), (p, p)).copy_from(&neg);
        out.view_mut((p, p), (m - p, m - p)).copy_from(&pos);
        out
    };
    let mut a = block(&mut rng);
    for i in 0..p {
        let j = p + rng.random_range(0..(m - p));
        let rapidity: f64 = rng.random_range(-1.0..=1.0);
        let mut boost = DMatrix::identity(m, m);
        boost[(i, i)] = rapidity.cosh();
        boost[(j, j)] = rapidity.cosh();
        boost[(i, j)] = rapidity.sinh();
        boost[(j, i)] = rapidity.sinh();
        a = boost * a;
    }
    block(&mut rng) * a
}

/// Dense `(0,4)`-tensor on `E^m_p`, stored row-major in `[i][j][k][l]`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FourTensor {
    domain: Signature,
    data: Vec<f64>,
}

impl FourTensor {
    pub fn new(domain: Signature, data: Vec<f64>) -> Result<Self> {
        let m = domain.dim();
        if data.len() != m.pow(4) {
            return Err(Error::InvalidInput(format!(
                "four-tensor on m={m} needs {} entries, got {}",
                m.pow(4),
                data.len()
            )));
        }
        Ok(Self { domain, data })
    }

    pub fn domain(&self) -> Signature {
        self.domain
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize, k: usize, l: usize) -> f64 {
        let m = self.domain.dim();
        self.data[((i * m + j) * m + k) * m + l]
    }
}

/// `ρ_ijkl = Σ_α ε'_α h^α_ij h^α_kl`.
pub fn rho_tensor(form: &FormCoefficients) -> FourTensor {
    let (m, n) = (form.domain.dim(), form.codomain.dim());
    let mut data = vec![0.0; m.pow(4)];
    for i in 0..m {
        for j in 0..m {
            for k in 0..m {
                for l in 0..m {
                    let mut acc = 0.0;
                    for a in 0..n {
                        acc += form.codomain.epsilon(a) * form.get(a, i, j) * form.get(a, k, l);
                    }
                    data[((i * m + j) * m + k) * m + l] = acc;
                }
            }
        }
    }
    FourTensor { domain: form.domain, data }
}

/// Double contractions `(C12 C34 T, C13 C24 T)`, signed by the domain signature.
pub fn contract_pattern(t: &FourTensor) -> (f64, f64) {
    let m = t.domain.dim();
    let mut c1234 = Vec::with_capacity(m * m);
    let mut c1324 = Vec::with_capacity(m * m);
    for i in 0..m {
        for j in 0..m {
            let s = t.domain.epsilon(i) * t.domain.epsilon(j);
            c1234.push(s * t.get(i, i, j, j));
            c1324.push(s * t.get(i, j, i, j));
        }
    }
    (pairwise_sum(&c1234), pairwise_sum(&c1324))
}

/// The Chern–Federer contraction `det(C12 C13; C24 C34) T = C12C34 T - C13C24 T`.
pub fn cf_contraction(t: &FourTensor) -> f64 {
    let (a, b) = contract_pattern(t);
    a - b
}

/// A permutation of the four tensor slots, given by its images of `(1, 2, 3, 4)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Permutation4 {
    images: [usize; 4],
}

impl Permutation4 {
    /// `images` are 1-based: `images[s - 1] = σ(s)`.
    pub fn new(images: [usize; 4]) -> Result<Self> {
        let mut seen = [false; 4];
        for &v in &images {
            if !(1..=4).contains(&v) || seen[v - 1] {
                return Err(Error::InvalidInput(format!("{images:?} is not a permutation of 1..4")));
            }
            seen[v - 1] = true;
        }
        Ok(Self { images })
    }

    pub fn identity() -> Self {
        Self { images: [1, 2, 3, 4] }
    }

    /// The six representatives `σ1 … σ6` acting on the contraction spans.
    pub fn sigma(k: usize) -> Self {
        let images = match k {
            1 => [2, 1, 3, 4],
            2 => [3, 2, 1, 4],
            3 => [4, 2, 3, 1],
            4 => [3, 4, 1, 2],
            5 => [1, 4, 3, 2],
            6 => [1, 3, 2, 4],
            _ => panic!("sigma index must be in 1..=6, got {k}"),
        };
        Self { images }
    }

    pub fn images(&self) -> [usize; 4] {
        self.images
    }

    /// 0-based image of the 0-based slot `s`.
    #[inline]
    pub fn image0(&self, s: usize) -> usize {
        self.images[s] - 1
    }

    /// `(self ∘ other)(s) = self(other(s))`.
    pub fn compose(&self, other: &Self) -> Self {
        let mut images = [0; 4];
        for s in 0..4 {
            images[s] = self.images[other.images[s] - 1];
        }
        Self { images }
    }

    pub fn inverse(&self) -> Self {
        let mut images = [0; 4];
        for s in 0..4 {
            images[self.images[s] - 1] = s + 1;
        }
        Self { images }
    }

    /// Source multi-index for target `idx`: `(σT)[idx] = T[src]`, `src[s] = idx[σ(s)]`.
    #[inline]
    pub fn source_index(&self, idx: [usize; 4]) -> [usize; 4] {
        [idx[self.image0(0)], idx[self.image0(1)], idx[self.image0(2)], idx[self.image0(3)]]
    }
}

/// `(σT)_{i1 i2 i3 i4} = T_{i_σ(1) i_σ(2) i_σ(3) i_σ(4)}`.
pub fn permute4(t: &FourTensor, sigma: &Permutation4) -> FourTensor {
    let m = t.domain.dim();
    let mut data = vec![0.0; m.pow(4)];
    for i in 0..m {
        for j in 0..m {
            for k in 0..m {
                for l in 0..m {
                    let [a, b, c, d] = sigma.source_index([i, j, k, l]);
                    data[((i * m + j) * m + k) * m + l] = t.get(a, b, c, d);
                }
            }
        }
    }
    FourTensor { domain: t.domain, data }
}

/// Contraction values of `σ_k ρ` for one `σ_k`.
#[derive(Debug, Clone, Serialize)]
pub struct PermutedContraction {
    pub sigma: usize,
    pub images: [usize; 4],
    pub c1234: f64,
    pub c1324: f64,
    pub cf: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct S4SymmetryReport {
    pub cf: f64,
    pub entries: Vec<PermutedContraction>,
    pub sigma1_invariance_deviation: f64,
    pub sigma3_antisymmetry_deviation: f64,
    pub sigma6_antisymmetry_deviation: f64,
    pub holds: bool,
}

/// Evaluates the CF contraction on `σ_k ρ(H)` for `k = 1..6`.
pub fn s4_symmetry_report(form: &FormCoefficients) -> S4SymmetryReport {
    let rho = rho_tensor(form);
    let cf = cf_contraction(&rho);
    let entries: Vec<PermutedContraction> = (1..=6)
        .map(|k| {
            let sigma = Permutation4::sigma(k);
            let (c1234, c1324) = contract_pattern(&permute4(&rho, &sigma));
            PermutedContraction {
                sigma: k,
                images: sigma.images(),
                c1234,
                c1324,
                cf: c1234 - c1324,
            }
        })
        .collect();
    let sigma1 = (entries[0].cf - cf).abs();
    let sigma3 = (entries[2].cf + cf).abs();
    let sigma6 = (entries[5].cf + cf).abs();
    let tol = 1e-12 * (1.0 + cf.abs());
    S4SymmetryReport {
        cf,
        entries,
        sigma1_invariance_deviation: sigma1,
        sigma3_antisymmetry_deviation: sigma3,
        sigma6_antisymmetry_deviation: sigma6,
        holds: sigma3 <= tol && sigma6 <= tol,
    }
}

/// Null space of the antisymmetry conditions on `a·C12C34 + b·C13C24`.
#[derive(Debug, Clone, Serialize)]
pub struct SpanKernel {
    pub rank: usize,
    /// Unit kernel vector `(a, b)`, sign fixed so that `a ≥ 0`.
    pub kernel: [f64; 2],
    pub singular_values: [f64; 2],
}

/// For each sample and `σ ∈ {σ3, σ6}`, the functional `f = a·C12C34 + b·C13C24`
/// must satisfy `f(σρ) + f(ρ) = 0`. Stacks these rows and returns the rank of
/// the resulting `k × 2` system together with its kernel direction.
pub fn antisymmetric_span_kernel(samples: &[FormCoefficients]) -> SpanKernel {
    let mut rows: Vec<[f64; 2]> = Vec::new();
    for form in samples {
        let rho = rho_tensor(form);
        let (q2, q1) = contract_pattern(&rho);
        for k in [3, 6] {
            let (s2, s1) = contract_pattern(&permute4(&rho, &Permutation4::sigma(k)));
            rows.push([s2 + q2, s1 + q1]);
        }
    }
    let mat = DMatrix::from_fn(rows.len(), 2, |r, c| rows[r][c]);
    let svd = mat.svd(false, true);
    let v_t = svd.v_t.expect("requested right singular vectors");
    let mut order = [0usize, 1];
    order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));
    let sv = [svd.singular_values[order[0]], svd.singular_values[order[1]]];
    let tol = 1e-10 * sv[0].max(1e-300);
    let rank = sv.iter().filter(|&&s| s > tol).count();
    let row = order[1];
    let mut kernel = [v_t[(row, 0)], v_t[(row, 1)]];
    if kernel[0] < 0.0 {
        kernel = [-kernel[0], -kernel[1]];
    }
    SpanKernel {
        rank,
        kernel,
        singular_values: sv,
    }
}
