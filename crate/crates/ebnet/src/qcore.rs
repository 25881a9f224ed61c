//! Density-matrix states over ordered tensor factors, and the unitary /
//! measurement primitives the channel layer builds on.
//!
//! Factor ordering is big-endian row-major throughout: a basis label
//! `(j_0, ..., j_{k-1})` over dims `(d_0, ..., d_{k-1})` flattens to
//! `j_0·(d_1···d_{k-1}) + ... + j_{k-1}`, so factor 0 is the left operand of
//! every Kronecker product.

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::linalg::{
    self, czero, dagger, frob_norm, hermitian_eigenvalues, identity, trace, CMat, ONE, ZERO,
};

/// Hermiticity / trace / unitarity tolerance for structural validation.
pub const STRUCT_TOL: f64 = 1e-9;
/// Most-negative eigenvalue a validated density matrix may carry.
pub const PSD_TOL: f64 = -1e-9;
/// Eigenvalues in `[-ENTROPY_CLAMP, ENTROPY_CLAMP]` contribute zero entropy;
/// anything below the negative end is treated as a bug, not noise.
pub const ENTROPY_CLAMP: f64 = 1e-12;

// ---------------------------------------------------------------------------
// index bookkeeping
// ---------------------------------------------------------------------------

/// Row-major strides: `stride[k] = d_{k+1}···d_{n-1}`.
pub(crate) fn strides(dims: &[usize]) -> Vec<usize> {
    let mut s = vec![1usize; dims.len()];
    for k in (0..dims.len().saturating_sub(1)).rev() {
        s[k] = s[k + 1] * dims[k + 1];
    }
    s
}

pub(crate) fn total_dim(dims: &[usize]) -> usize {
    dims.iter().product()
}

fn check_factor_list(dims: &[usize], factors: &[usize], what: &str) -> Result<()> {
    if factors.is_empty() {
        return Err(Error::IndexOutOfRange(format!(
            "{what}: factor list is empty"
        )));
    }
    for w in factors.windows(2) {
        if w[0] >= w[1] {
            return Err(Error::IndexOutOfRange(format!(
                "{what}: factor list must be strictly ascending, got {factors:?}"
            )));
        }
    }
    if *factors.last().unwrap() >= dims.len() {
        return Err(Error::IndexOutOfRange(format!(
            "{what}: factor {} out of range for {} factors",
            factors.last().unwrap(),
            dims.len()
        )));
    }
    Ok(())
}

/// Flat-index remap for reordering tensor factors: entry `i` is the new flat
/// index of old flat index `i` when factors are reordered as `perm` (new
/// factor `k` = old factor `perm[k]`).
fn permutation_map(dims: &[usize], perm: &[usize]) -> Vec<usize> {
    let n = total_dim(dims);
    let old_strides = strides(dims);
    let new_dims: Vec<usize> = perm.iter().map(|&f| dims[f]).collect();
    let new_strides = strides(&new_dims);
    // weight[f] = new stride of old factor f
    let mut weight = vec![0usize; dims.len()];
    for (k, &f) in perm.iter().enumerate() {
        weight[f] = new_strides[k];
    }
    let mut map = vec![0usize; n];
    for (u, slot) in map.iter_mut().enumerate() {
        let mut rem = u;
        let mut v = 0usize;
        for f in 0..dims.len() {
            let idx = rem / old_strides[f];
            rem %= old_strides[f];
            v += idx * weight[f];
        }
        *slot = v;
    }
    map
}

/// Reorder the tensor factors of a density/operator matrix.
pub(crate) fn permute_factors(mat: &CMat, dims: &[usize], perm: &[usize]) -> (CMat, Vec<usize>) {
    debug_assert_eq!(perm.len(), dims.len());
    let map = permutation_map(dims, perm);
    let n = mat.nrows();
    let mut out = czero(n, n);
    for ((i, j), &v) in mat.indexed_iter() {
        out[[map[i], map[j]]] = v;
    }
    (out, perm.iter().map(|&f| dims[f]).collect())
}

/// Conjugation `Σ_k (A_k ⊗ I_rest) ρ (A_k ⊗ I_rest)†` where the operators act
/// on the leading block of dimension `d_s` and `d_r` is the trailing
/// (untouched) dimension. Each `A_k` is `d_o × d_s`.
pub(crate) fn conjugate_on_leading(
    rho: &CMat,
    d_s: usize,
    d_r: usize,
    ops: &[CMat],
    d_o: usize,
) -> CMat {
    debug_assert_eq!(rho.nrows(), d_s * d_r);
    let cols = d_r * d_s * d_r;
    let g = rho
        .view()
        .into_shape_with_order((d_s, cols))
        .expect("standard layout");
    let mut out = czero(d_o * d_r, d_o * d_r);
    let mut mid = czero(d_o * d_r * d_r, d_s);
    for a in ops {
        debug_assert_eq!(a.dim(), (d_o, d_s));
        // t1[(o), (r, s', r')] = Σ_s A[o,s] ρ[(s,r),(s',r')]
        let t1 = a.dot(&g);
        // reorder to rows (o, r, r'), cols s'
        for o in 0..d_o {
            for r in 0..d_r {
                for sp in 0..d_s {
                    for rp in 0..d_r {
                        mid[[(o * d_r + r) * d_r + rp, sp]] = t1[[o, (r * d_s + sp) * d_r + rp]];
                    }
                }
            }
        }
        // contract s' against A†: res[(o, r, r'), p]
        let res = mid.dot(&dagger(a));
        for o in 0..d_o {
            for r in 0..d_r {
                for rp in 0..d_r {
                    let row = (o * d_r + r) * d_r + rp;
                    for p in 0..d_o {
                        out[[o * d_r + r, p * d_r + rp]] += res[[row, p]];
                    }
                }
            }
        }
    }
    out
}

// ---------------------------------------------------------------------------
// states
// ---------------------------------------------------------------------------

/// A density matrix together with the ordered dimensions of its tensor
/// factors. Valid states are Hermitian, unit trace, and positive
/// semidefinite (all within [`STRUCT_TOL`] / [`PSD_TOL`]).
#[derive(Debug, Clone, PartialEq)]
pub struct QuantumState {
    mat: CMat,
    dims: Vec<usize>,
}

impl QuantumState {
    /// Validating constructor for externally supplied matrices. Checks shape,
    /// hermiticity, trace and positive semidefiniteness.
    pub fn new(mat: CMat, dims: Vec<usize>) -> Result<Self> {
        let st = Self { mat, dims };
        st.validate()?;
        Ok(st)
    }

    /// Constructor for matrices whose invariants are guaranteed by the
    /// calling algebra; skips the O(n³) eigenvalue check.
    pub(crate) fn trusted(mat: CMat, dims: Vec<usize>) -> Self {
        debug_assert!(linalg::is_hermitian(&mat, 1e-8), "trusted state not hermitian");
        debug_assert!(
            (trace(&mat).re - 1.0).abs() < 1e-8,
            "trusted state trace {} != 1",
            trace(&mat).re
        );
        Self { mat, dims }
    }

    pub fn matrix(&self) -> &CMat {
        &self.mat
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn total_dim(&self) -> usize {
        total_dim(&self.dims)
    }

    /// Re-checks every invariant (used by property tests on op outputs).
    pub fn validate(&self) -> Result<()> {
        let n = self.mat.nrows();
        if self.mat.ncols() != n {
            return Err(Error::InvalidMatrix(format!(
                "density matrix must be square, got {}x{}",
                n,
                self.mat.ncols()
            )));
        }
        if self.dims.is_empty() || self.dims.iter().any(|&d| d < 2) {
            return Err(Error::InvalidState(format!(
                "factor dims must all be >= 2, got {:?}",
                self.dims
            )));
        }
        if total_dim(&self.dims) != n {
            return Err(Error::DimensionMismatch(format!(
                "factor dims {:?} do not multiply to matrix dimension {}",
                self.dims, n
            )));
        }
        let herm = linalg::max_abs_offhermitian(&self.mat);
        if herm > STRUCT_TOL {
            return Err(Error::InvalidState(format!(
                "not hermitian: max deviation {herm:.3e}"
            )));
        }
        let tr = trace(&self.mat);
        if (tr.re - 1.0).abs() > STRUCT_TOL || tr.im.abs() > STRUCT_TOL {
            return Err(Error::InvalidState(format!("trace {tr} != 1")));
        }
        let min_ev = hermitian_eigenvalues(&self.mat)
            .first()
            .copied()
            .unwrap_or(0.0);
        if min_ev < PSD_TOL {
            return Err(Error::InvalidState(format!(
                "not positive semidefinite: min eigenvalue {min_ev:.3e}"
            )));
        }
        Ok(())
    }

    /// `self ⊗ other`; factor lists concatenate.
    pub fn tensor(&self, other: &QuantumState) -> QuantumState {
        let mat = linalg::kron(&self.mat, &other.mat);
        let mut dims = self.dims.clone();
        dims.extend_from_slice(&other.dims);
        QuantumState::trusted(mat, dims)
    }

    /// Trace out every factor not listed in `keep` (ascending, non-empty).
    /// Kept factors preserve their original relative order.
    pub fn partial_trace(&self, keep: &[usize]) -> Result<QuantumState> {
        check_factor_list(&self.dims, keep, "partial_trace")?;
        if keep.len() == self.dims.len() {
            return Ok(self.clone());
        }
        let traced: Vec<usize> = (0..self.dims.len()).filter(|f| !keep.contains(f)).collect();
        let full_strides = strides(&self.dims);

        let kept_dims: Vec<usize> = keep.iter().map(|&f| self.dims[f]).collect();
        let d_k = total_dim(&kept_dims);
        let kept_strides = strides(&kept_dims);
        // flat offset inside the full matrix for each kept multi-index
        let mut base = vec![0usize; d_k];
        for (a, slot) in base.iter_mut().enumerate() {
            let mut acc = 0usize;
            for (pos, &f) in keep.iter().enumerate() {
                acc += (a / kept_strides[pos] % kept_dims[pos]) * full_strides[f];
            }
            *slot = acc;
        }
        let traced_dims: Vec<usize> = traced.iter().map(|&f| self.dims[f]).collect();
        let d_t = total_dim(&traced_dims);
        let traced_strides = strides(&traced_dims);
        let mut toff = vec![0usize; d_t];
        for (t, slot) in toff.iter_mut().enumerate() {
            let mut acc = 0usize;
            for (pos, &f) in traced.iter().enumerate() {
                acc += (t / traced_strides[pos] % traced_dims[pos]) * full_strides[f];
            }
            *slot = acc;
        }

        let mut out = czero(d_k, d_k);
        for a in 0..d_k {
            for b in 0..d_k {
                let mut acc = ZERO;
                for &t in &toff {
                    acc += self.mat[[base[a] + t, base[b] + t]];
                }
                out[[a, b]] = acc;
            }
        }
        Ok(QuantumState::trusted(out, kept_dims))
    }

    /// Apply `u` to the listed factors (ascending; their dims must multiply
    /// to `u.dim()`). Factor order and dims are unchanged.
    pub fn apply_unitary(&self, u: &UnitaryOperator, factors: &[usize]) -> Result<QuantumState> {
        check_factor_list(&self.dims, factors, "apply_unitary")?;
        let d_s: usize = factors.iter().map(|&f| self.dims[f]).product();
        if d_s != u.dim() {
            return Err(Error::DimensionMismatch(format!(
                "unitary dim {} != selected factor product {}",
                u.dim(),
                d_s
            )));
        }
        let rest: Vec<usize> = (0..self.dims.len())
            .filter(|f| !factors.contains(f))
            .collect();
        let mut perm: Vec<usize> = factors.to_vec();
        perm.extend_from_slice(&rest);
        let (permuted, pdims) = permute_factors(&self.mat, &self.dims, &perm);
        let d_r = total_dim(&pdims) / d_s;
        let conj = conjugate_on_leading(&permuted, d_s, d_r, std::slice::from_ref(&u.mat), d_s);
        // invert the permutation to restore original factor order
        let mut inv = vec![0usize; perm.len()];
        for (k, &f) in perm.iter().enumerate() {
            inv[f] = k;
        }
        let (restored, rdims) = permute_factors(&conj, &pdims, &inv);
        debug_assert_eq!(rdims, self.dims);
        Ok(QuantumState::trusted(restored, rdims))
    }

    /// Reinterpret the factor decomposition without touching the matrix.
    /// `new_dims` must multiply to the same total dimension.
    pub fn with_factor_dims(&self, new_dims: Vec<usize>) -> Result<QuantumState> {
        if total_dim(&new_dims) != self.total_dim() || new_dims.iter().any(|&d| d < 2) {
            return Err(Error::DimensionMismatch(format!(
                "cannot reinterpret dims {:?} as {:?}",
                self.dims, new_dims
            )));
        }
        Ok(QuantumState {
            mat: self.mat.clone(),
            dims: new_dims,
        })
    }

    /// Project factor `factor` onto basis label `value`, remove that factor,
    /// and renormalize. Returns the outcome probability and the conditional
    /// state (`None` when the probability is below 1e-12).
    pub fn condition_on_basis_outcome(
        &self,
        factor: usize,
        value: usize,
    ) -> Result<(f64, Option<QuantumState>)> {
        if factor >= self.dims.len() {
            return Err(Error::IndexOutOfRange(format!(
                "factor {factor} out of range for {} factors",
                self.dims.len()
            )));
        }
        if value >= self.dims[factor] {
            return Err(Error::IndexOutOfRange(format!(
                "value {value} out of range for factor of dim {}",
                self.dims[factor]
            )));
        }
        if self.dims.len() == 1 {
            return Err(Error::InvalidState(
                "cannot condition away the only factor".into(),
            ));
        }
        let full_strides = strides(&self.dims);
        let rest: Vec<usize> = (0..self.dims.len()).filter(|&f| f != factor).collect();
        let rest_dims: Vec<usize> = rest.iter().map(|&f| self.dims[f]).collect();
        let d_rest = total_dim(&rest_dims);
        let rest_strides = strides(&rest_dims);
        let mut ix = vec![0usize; d_rest];
        for (r, slot) in ix.iter_mut().enumerate() {
            let mut acc = value * full_strides[factor];
            for (pos, &f) in rest.iter().enumerate() {
                acc += (r / rest_strides[pos] % rest_dims[pos]) * full_strides[f];
            }
            *slot = acc;
        }
        let mut sub = czero(d_rest, d_rest);
        for a in 0..d_rest {
            for b in 0..d_rest {
                sub[[a, b]] = self.mat[[ix[a], ix[b]]];
            }
        }
        let p = trace(&sub).re;
        if p <= 1e-12 {
            return Ok((p.max(0.0), None));
        }
        sub.mapv_inplace(|z| z / p);
        Ok((p, Some(QuantumState::trusted(sub, rest_dims))))
    }

    /// `Tr ρ²`; equals 1 exactly for pure states.
    pub fn purity(&self) -> f64 {
        let f = frob_norm(&self.mat);
        f * f
    }

    /// Base-2 von Neumann entropy. Eigenvalues within [`ENTROPY_CLAMP`] of
    /// zero contribute nothing.
    ///
    /// # Panics
    /// On an eigenvalue below `-ENTROPY_CLAMP`: that is a corrupted state
    /// (a bug upstream), not numerical noise.
    pub fn von_neumann_entropy(&self) -> f64 {
        let mut s = 0.0;
        for ev in hermitian_eigenvalues(&self.mat) {
            assert!(
                ev >= -ENTROPY_CLAMP,
                "entropy of a matrix with eigenvalue {ev:.3e}: not a density matrix"
            );
            if ev > ENTROPY_CLAMP {
                s -= ev * ev.log2();
            }
        }
        s
    }

    /// `⟨ψ|ρ|ψ⟩` against a pure target given as a density matrix. Errors if
    /// the target is mixed (purity off by more than [`STRUCT_TOL`]).
    pub fn fidelity_with_pure(&self, target: &QuantumState) -> Result<f64> {
        if target.total_dim() != self.total_dim() {
            return Err(Error::DimensionMismatch(format!(
                "state dim {} vs target dim {}",
                self.total_dim(),
                target.total_dim()
            )));
        }
        let purity = target.purity();
        if (purity - 1.0).abs() > STRUCT_TOL {
            return Err(Error::NotPure(purity));
        }
        let f = self
            .mat
            .iter()
            .zip(target.mat.t().iter())
            .map(|(a, b)| a * b)
            .sum::<Complex64>();
        Ok(f.re)
    }
}

// ---------------------------------------------------------------------------
// unitaries
// ---------------------------------------------------------------------------

/// A square matrix verified unitary within [`STRUCT_TOL`].
#[derive(Debug, Clone, PartialEq)]
pub struct UnitaryOperator {
    mat: CMat,
    dim: usize,
}

impl UnitaryOperator {
    pub fn new(mat: CMat) -> Result<Self> {
        let n = mat.nrows();
        if mat.ncols() != n || n < 2 {
            return Err(Error::InvalidMatrix(format!(
                "unitary must be square of dim >= 2, got {}x{}",
                n,
                mat.ncols()
            )));
        }
        let dev = linalg::frob_dist(&dagger(&mat).dot(&mat), &identity(n));
        if dev > STRUCT_TOL {
            return Err(Error::InvalidMatrix(format!(
                "not unitary: ‖U†U - I‖ = {dev:.3e}"
            )));
        }
        Ok(Self { mat, dim: n })
    }

    pub(crate) fn trusted(mat: CMat) -> Self {
        let dim = mat.nrows();
        debug_assert!(linalg::frob_dist(&dagger(&mat).dot(&mat), &identity(dim)) < 1e-8);
        Self { mat, dim }
    }

    pub fn matrix(&self) -> &CMat {
        &self.mat
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// `U†` (the inverse).
    pub fn adjoint(&self) -> UnitaryOperator {
        UnitaryOperator::trusted(dagger(&self.mat))
    }

    /// Entry-wise transpose without conjugation (unitary whenever `U` is).
    pub fn transpose(&self) -> UnitaryOperator {
        UnitaryOperator::trusted(self.mat.t().to_owned())
    }

    /// `self ⊗ other`.
    pub fn tensor(&self, other: &UnitaryOperator) -> UnitaryOperator {
        UnitaryOperator::trusted(linalg::kron(&self.mat, &other.mat))
    }
}

// ---------------------------------------------------------------------------
// named constructions
// ---------------------------------------------------------------------------

fn check_qudit_dim(d: usize) -> Result<()> {
    if d < 2 {
        Err(Error::ParameterOutOfRange(format!("qudit dim {d} < 2")))
    } else {
        Ok(())
    }
}

/// `|j⟩⟨j|` on a single qudit of dimension `d`.
pub fn computational_basis_state(d: usize, j: usize) -> Result<QuantumState> {
    check_qudit_dim(d)?;
    if j >= d {
        return Err(Error::IndexOutOfRange(format!("basis label {j} >= {d}")));
    }
    let mut m = czero(d, d);
    m[[j, j]] = ONE;
    Ok(QuantumState::trusted(m, vec![d]))
}

/// `|Φ⁺⟩⟨Φ⁺|` with `|Φ⁺⟩ = d^{-1/2} Σ_j |jj⟩`, dims `[d, d]`.
pub fn maximally_entangled_state(d: usize) -> Result<QuantumState> {
    generalized_bell_state(d, 0, 0)
}

/// Discrete Weyl (generalized Pauli) unitary `U_(a,b) = X^a Z^b` where
/// `X|j⟩ = |j+1 mod d⟩` and `Z|j⟩ = ω^j |j⟩`, `ω = e^{2πi/d}`.
pub fn weyl_operator(d: usize, a: usize, b: usize) -> Result<UnitaryOperator> {
    check_qudit_dim(d)?;
    if a >= d || b >= d {
        return Err(Error::IndexOutOfRange(format!(
            "weyl labels ({a},{b}) out of range for d={d}"
        )));
    }
    let mut m = czero(d, d);
    for j in 0..d {
        let phase = 2.0 * std::f64::consts::PI * ((b * j) % d) as f64 / d as f64;
        m[[(j + a) % d, j]] = Complex64::from_polar(1.0, phase);
    }
    Ok(UnitaryOperator::trusted(m))
}

/// State vector of `(U_(a,b) ⊗ I)|Φ⁺⟩` in the flat `d²` space.
pub(crate) fn bell_vector(d: usize, a: usize, b: usize) -> Vec<Complex64> {
    let norm = 1.0 / (d as f64).sqrt();
    let mut v = vec![ZERO; d * d];
    for j in 0..d {
        let phase = 2.0 * std::f64::consts::PI * ((b * j) % d) as f64 / d as f64;
        v[((j + a) % d) * d + j] = Complex64::from_polar(norm, phase);
    }
    v
}

/// Generalized Bell state `(U_(a,b) ⊗ I)|Φ⁺⟩⟨Φ⁺|(U_(a,b) ⊗ I)†`, dims `[d, d]`.
/// The `d²` states for all `(a, b)` form an orthonormal basis.
pub fn generalized_bell_state(d: usize, a: usize, b: usize) -> Result<QuantumState> {
    check_qudit_dim(d)?;
    if a >= d || b >= d {
        return Err(Error::IndexOutOfRange(format!(
            "bell labels ({a},{b}) out of range for d={d}"
        )));
    }
    let v = bell_vector(d, a, b);
    Ok(QuantumState::trusted(outer(&v), vec![d, d]))
}

pub(crate) fn outer(v: &[Complex64]) -> CMat {
    let n = v.len();
    let mut m = czero(n, n);
    for i in 0..n {
        for j in 0..n {
            m[[i, j]] = v[i] * v[j].conj();
        }
    }
    m
}

/// Haar-random pure state on one qudit, deterministic in `seed`
/// (normalized vector of iid complex Gaussians).
pub fn random_pure_state(d: usize, seed: u64) -> Result<QuantumState> {
    check_qudit_dim(d)?;
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let mut v = Vec::with_capacity(d);
    for _ in 0..d {
        let re: f64 = StandardNormal.sample(&mut rng);
        let im: f64 = StandardNormal.sample(&mut rng);
        v.push(Complex64::new(re, im));
    }
    let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    for z in &mut v {
        *z /= norm;
    }
    Ok(QuantumState::trusted(outer(&v), vec![d]))
}

/// Full-rank random density matrix (Ginibre `GG†` normalized), deterministic
/// in `seed`. Test utility for property suites.
pub fn random_mixed_state(d: usize, seed: u64) -> Result<QuantumState> {
    check_qudit_dim(d)?;
    let mut rng = ChaCha12Rng::seed_from_u64(seed.wrapping_mul(0x9E37_79B9_7F4A_7C15));
    let mut g = czero(d, d);
    for i in 0..d {
        for j in 0..d {
            let re: f64 = StandardNormal.sample(&mut rng);
            let im: f64 = StandardNormal.sample(&mut rng);
            g[[i, j]] = Complex64::new(re, im);
        }
    }
    let mut m = g.dot(&dagger(&g));
    let tr = trace(&m).re;
    m.mapv_inplace(|z| z / tr);
    Ok(QuantumState::trusted(m, vec![d]))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn frob_to(st: &QuantumState, m: &CMat) -> f64 {
        linalg::frob_dist(st.matrix(), m)
    }

    #[test]
    fn basis_state_and_bounds() {
        let s = computational_basis_state(3, 2).unwrap();
        assert_eq!(s.dims(), &[3]);
        assert_relative_eq!(s.matrix()[[2, 2]].re, 1.0);
        assert!(computational_basis_state(3, 3).is_err());
        assert!(computational_basis_state(1, 0).is_err());
    }

    #[test]
    fn maximally_entangled_marginals_are_uniform() {
        for d in 2..=4 {
            let phi = maximally_entangled_state(d).unwrap();
            for keep in [[0], [1]] {
                let red = phi.partial_trace(&keep).unwrap();
                let mut uniform = czero(d, d);
                for i in 0..d {
                    uniform[[i, i]] = Complex64::new(1.0 / d as f64, 0.0);
                }
                assert!(frob_to(&red, &uniform) < 1e-12);
            }
        }
    }

    #[test]
    fn weyl_commutation_zx_eq_omega_xz() {
        for d in 2..=5 {
            let x = weyl_operator(d, 1, 0).unwrap();
            let z = weyl_operator(d, 0, 1).unwrap();
            let zx = z.matrix().dot(x.matrix());
            let omega = Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI / d as f64);
            let xz = x.matrix().dot(z.matrix()).mapv(|v| v * omega);
            assert!(linalg::frob_dist(&zx, &xz) < 1e-12, "d={d}");
        }
    }

    #[test]
    fn weyl_unitarity_and_identity() {
        for d in 2..=4 {
            assert!(linalg::frob_dist(weyl_operator(d, 0, 0).unwrap().matrix(), &identity(d)) == 0.0);
            for a in 0..d {
                for b in 0..d {
                    let u = weyl_operator(d, a, b).unwrap();
                    let g = dagger(u.matrix()).dot(u.matrix());
                    assert!(linalg::frob_dist(&g, &identity(d)) < 1e-12);
                }
            }
        }
        assert!(weyl_operator(3, 3, 0).is_err());
    }

    #[test]
    fn bell_basis_is_orthonormal() {
        for d in 2..=3 {
            let vecs: Vec<Vec<Complex64>> = (0..d)
                .flat_map(|a| (0..d).map(move |b| (a, b)))
                .map(|(a, b)| bell_vector(d, a, b))
                .collect();
            for (i, u) in vecs.iter().enumerate() {
                for (j, v) in vecs.iter().enumerate() {
                    let ip: Complex64 = u.iter().zip(v.iter()).map(|(x, y)| x.conj() * y).sum();
                    let expect = if i == j { 1.0 } else { 0.0 };
                    assert!((ip.norm() - expect).abs() < 1e-12, "d={d} ({i},{j})");
                }
            }
        }
    }

    #[test]
    fn tensor_then_partial_trace_recovers_factors() {
        let a = random_mixed_state(2, 11).unwrap();
        let b = random_mixed_state(3, 12).unwrap();
        let ab = a.tensor(&b);
        assert_eq!(ab.dims(), &[2, 3]);
        assert!(frob_to(&ab.partial_trace(&[0]).unwrap(), a.matrix()) < 1e-12);
        assert!(frob_to(&ab.partial_trace(&[1]).unwrap(), b.matrix()) < 1e-12);
    }

    #[test]
    fn partial_trace_middle_factor_of_triple() {
        let a = computational_basis_state(2, 0).unwrap();
        let b = random_mixed_state(3, 5).unwrap();
        let c = computational_basis_state(2, 1).unwrap();
        let abc = a.tensor(&b).tensor(&c);
        let kept = abc.partial_trace(&[1]).unwrap();
        assert!(frob_to(&kept, b.matrix()) < 1e-12);
        let pair = abc.partial_trace(&[0, 2]).unwrap();
        assert!(frob_to(&pair, a.tensor(&c).matrix()) < 1e-12);
    }

    #[test]
    fn partial_trace_rejects_bad_factor_lists() {
        let s = maximally_entangled_state(2).unwrap();
        assert!(s.partial_trace(&[]).is_err());
        assert!(s.partial_trace(&[1, 0]).is_err());
        assert!(s.partial_trace(&[2]).is_err());
    }

    #[test]
    fn apply_unitary_shift_on_basis_state() {
        let s = computational_basis_state(3, 0).unwrap();
        let x = weyl_operator(3, 1, 0).unwrap();
        let s1 = s.apply_unitary(&x, &[0]).unwrap();
        assert!(frob_to(&s1, computational_basis_state(3, 1).unwrap().matrix()) < 1e-12);
    }

    #[test]
    fn apply_unitary_on_one_half_of_bell_state() {
        // (U_(a,b) ⊗ I)|Φ⁺⟩ is the generalized Bell state (a,b)
        for d in 2..=3 {
            for a in 0..d {
                for b in 0..d {
                    let u = weyl_operator(d, a, b).unwrap();
                    let moved = maximally_entangled_state(d)
                        .unwrap()
                        .apply_unitary(&u, &[0])
                        .unwrap();
                    let target = generalized_bell_state(d, a, b).unwrap();
                    assert!(frob_to(&moved, target.matrix()) < 1e-12, "d={d} ({a},{b})");
                }
            }
        }
    }

    #[test]
    fn apply_unitary_on_trailing_factor_keeps_order() {
        // (I ⊗ X)|0⟩⟨0| ⊗ |0⟩⟨0| = |0⟩⟨0| ⊗ |1⟩⟨1|
        let s = computational_basis_state(2, 0)
            .unwrap()
            .tensor(&computational_basis_state(2, 0).unwrap());
        let x = weyl_operator(2, 1, 0).unwrap();
        let out = s.apply_unitary(&x, &[1]).unwrap();
        let expect = computational_basis_state(2, 0)
            .unwrap()
            .tensor(&computational_basis_state(2, 1).unwrap());
        assert!(frob_to(&out, expect.matrix()) < 1e-12);
        assert_eq!(out.dims(), &[2, 2]);
    }

    #[test]
    fn apply_unitary_dim_mismatch_is_rejected() {
        let s = maximally_entangled_state(2).unwrap();
        let u = weyl_operator(3, 1, 0).unwrap();
        assert!(s.apply_unitary(&u, &[0]).is_err());
    }

    #[test]
    fn entropy_of_pure_and_of_known_diagonal() {
        let pure = random_pure_state(4, 3).unwrap();
        assert!(pure.von_neumann_entropy().abs() < 1e-9);
        // S(diag(3/4, 1/4)) frozen from an independent high-precision evaluation
        let mut m = czero(2, 2);
        m[[0, 0]] = Complex64::new(0.75, 0.0);
        m[[1, 1]] = Complex64::new(0.25, 0.0);
        let s = QuantumState::new(m, vec![2]).unwrap();
        assert_relative_eq!(
            s.von_neumann_entropy(),
            0.811_278_124_459_132_86,
            epsilon = 1e-12
        );
    }

    #[test]
    fn entropy_is_additive_over_tensor_products() {
        let a = random_mixed_state(2, 21).unwrap();
        let b = random_mixed_state(3, 22).unwrap();
        let joint = a.tensor(&b).von_neumann_entropy();
        assert_relative_eq!(
            joint,
            a.von_neumann_entropy() + b.von_neumann_entropy(),
            epsilon = 1e-9
        );
    }

    #[test]
    #[should_panic(expected = "not a density matrix")]
    fn entropy_panics_on_genuinely_negative_eigenvalue() {
        let mut m = czero(2, 2);
        m[[0, 0]] = Complex64::new(1.0 + 1e-6, 0.0);
        m[[1, 1]] = Complex64::new(-1e-6, 0.0);
        QuantumState::trusted(m, vec![2]).von_neumann_entropy();
    }

    #[test]
    fn fidelity_basics() {
        let psi = random_pure_state(3, 7).unwrap();
        assert_relative_eq!(psi.fidelity_with_pure(&psi).unwrap(), 1.0, epsilon = 1e-12);
        let e0 = computational_basis_state(3, 0).unwrap();
        let e1 = computational_basis_state(3, 1).unwrap();
        assert!(e0.fidelity_with_pure(&e1).unwrap().abs() < 1e-15);
        // mixed target is rejected
        let mixed = random_mixed_state(3, 8).unwrap();
        assert!(matches!(psi.fidelity_with_pure(&mixed), Err(Error::NotPure(_))));
    }

    #[test]
    fn random_pure_state_is_deterministic_and_pure() {
        let a = random_pure_state(5, 42).unwrap();
        let b = random_pure_state(5, 42).unwrap();
        assert_eq!(linalg::frob_dist(a.matrix(), b.matrix()), 0.0);
        assert_relative_eq!(a.purity(), 1.0, epsilon = 1e-12);
        let c = random_pure_state(5, 43).unwrap();
        assert!(linalg::frob_dist(a.matrix(), c.matrix()) > 1e-3);
    }

    #[test]
    fn haar_average_approaches_maximally_mixed() {
        let d = 2;
        let mut acc = czero(d, d);
        let n = 10_000u64;
        for seed in 0..n {
            acc += random_pure_state(d, seed).unwrap().matrix();
        }
        acc.mapv_inplace(|z| z / n as f64);
        let mut uniform = czero(d, d);
        for i in 0..d {
            uniform[[i, i]] = Complex64::new(0.5, 0.0);
        }
        assert!(linalg::frob_dist(&acc, &uniform) < 0.05);
    }

    #[test]
    fn conditioning_bell_state_on_one_side() {
        let d = 3;
        let phi = maximally_entangled_state(d).unwrap();
        for v in 0..d {
            let (p, cond) = phi.condition_on_basis_outcome(0, v).unwrap();
            assert_relative_eq!(p, 1.0 / d as f64, epsilon = 1e-12);
            let cond = cond.unwrap();
            assert!(frob_to(&cond, computational_basis_state(d, v).unwrap().matrix()) < 1e-12);
        }
    }

    #[test]
    fn conditioning_on_impossible_outcome_returns_none() {
        let s = computational_basis_state(2, 0)
            .unwrap()
            .tensor(&computational_basis_state(2, 0).unwrap());
        let (p, cond) = s.condition_on_basis_outcome(0, 1).unwrap();
        assert_eq!(p, 0.0);
        assert!(cond.is_none());
    }

    #[test]
    fn factor_reinterpretation_is_pure_bookkeeping() {
        let s = maximally_entangled_state(2).unwrap();
        let flat = s.with_factor_dims(vec![4]).unwrap();
        assert_eq!(flat.dims(), &[4]);
        assert_eq!(linalg::frob_dist(flat.matrix(), s.matrix()), 0.0);
        assert!(s.with_factor_dims(vec![3]).is_err());
    }

    #[test]
    fn validation_rejects_bad_matrices() {
        // non-unit trace
        let m = identity(2);
        assert!(matches!(
            QuantumState::new(m, vec![2]),
            Err(Error::InvalidState(_))
        ));
        // not hermitian
        let mut m = czero(2, 2);
        m[[0, 0]] = ONE;
        m[[0, 1]] = Complex64::new(0.5, 0.0);
        assert!(QuantumState::new(m, vec![2]).is_err());
        // hermitian, unit trace, but indefinite
        let mut m = czero(2, 2);
        m[[0, 0]] = Complex64::new(1.5, 0.0);
        m[[1, 1]] = Complex64::new(-0.5, 0.0);
        assert!(matches!(
            QuantumState::new(m, vec![2]),
            Err(Error::InvalidState(_))
        ));
        // dims do not match the matrix
        let mut m = czero(2, 2);
        m[[0, 0]] = ONE;
        assert!(QuantumState::new(m, vec![3]).is_err());
    }

    #[test]
    fn unitary_validation() {
        assert!(UnitaryOperator::new(identity(3)).is_ok());
        let mut bad = identity(2);
        bad[[0, 0]] = Complex64::new(0.5, 0.0);
        assert!(UnitaryOperator::new(bad).is_err());
    }

    #[test]
    fn transpose_undoes_partner_side_rotation() {
        // (V ⊗ I)|Φ⁺⟩ = (I ⊗ Vᵀ)|Φ⁺⟩: applying V on factor 0 must equal
        // applying Vᵀ on factor 1.
        for d in 2..=3 {
            for (a, b) in [(1, 0), (0, 1), (1, 1)] {
                let u = weyl_operator(d, a, b).unwrap();
                let phi = maximally_entangled_state(d).unwrap();
                let left = phi.apply_unitary(&u, &[0]).unwrap();
                let right = phi.apply_unitary(&u.transpose(), &[1]).unwrap();
                assert!(linalg::frob_dist(left.matrix(), right.matrix()) < 1e-12);
            }
        }
    }
}
