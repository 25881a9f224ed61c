//! Completely positive trace-preserving maps in Kraus form, their Choi
//! matrices, and the named channel constructors used by the capacity and
//! protocol layers.
//!
//! All maps are exact: channels act on density matrices by conjugation with
//! every Kraus operator, never by sampling.

use ndarray::s;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{self, czero, dagger, frob_norm, identity, CMat, ZERO};
use crate::qcore::{
    bell_vector, conjugate_on_leading, permute_factors, strides, total_dim, weyl_operator,
    QuantumState, STRUCT_TOL,
};

/// A CPTP map `ρ ↦ Σ_k K_k ρ K_k†` with ordered input/output tensor factors.
/// Every Kraus operator has shape `out_dim × in_dim` (flat products), and
/// `Σ_k K_k† K_k = I` within [`STRUCT_TOL`].
#[derive(Debug, Clone)]
pub struct QuantumChannel {
    kraus: Vec<CMat>,
    in_dims: Vec<usize>,
    out_dims: Vec<usize>,
}

impl QuantumChannel {
    /// Validating constructor for externally supplied Kraus families.
    pub fn new(kraus: Vec<CMat>, in_dims: Vec<usize>, out_dims: Vec<usize>) -> Result<Self> {
        if kraus.is_empty() {
            return Err(Error::InvalidMatrix("empty Kraus family".into()));
        }
        if in_dims.iter().any(|&d| d < 2) || out_dims.iter().any(|&d| d < 2) {
            return Err(Error::DimensionMismatch(format!(
                "factor dims must all be >= 2: in {in_dims:?}, out {out_dims:?}"
            )));
        }
        let din = total_dim(&in_dims);
        let dout = total_dim(&out_dims);
        for k in &kraus {
            if k.dim() != (dout, din) {
                return Err(Error::DimensionMismatch(format!(
                    "Kraus operator is {:?}, expected ({dout}, {din})",
                    k.dim()
                )));
            }
        }
        let mut sum = czero(din, din);
        for k in &kraus {
            sum += &dagger(k).dot(k);
        }
        let dev = linalg::frob_dist(&sum, &identity(din));
        if dev > STRUCT_TOL {
            return Err(Error::NotTracePreserving(dev));
        }
        Ok(Self::trusted(kraus, in_dims, out_dims))
    }

    /// Constructor for families whose completeness is guaranteed by
    /// construction; exact-zero operators are dropped. Debug builds re-check
    /// trace preservation.
    pub(crate) fn trusted(kraus: Vec<CMat>, in_dims: Vec<usize>, out_dims: Vec<usize>) -> Self {
        let kraus: Vec<CMat> = kraus.into_iter().filter(|k| frob_norm(k) > 0.0).collect();
        #[cfg(debug_assertions)]
        {
            let din = total_dim(&in_dims);
            let mut sum = czero(din, din);
            for k in &kraus {
                sum += &dagger(k).dot(k);
            }
            debug_assert!(
                linalg::frob_dist(&sum, &identity(din)) < 1e-8,
                "trusted Kraus family is not trace preserving"
            );
        }
        Self {
            kraus,
            in_dims,
            out_dims,
        }
    }

    pub fn kraus_ops(&self) -> &[CMat] {
        &self.kraus
    }

    pub fn in_dims(&self) -> &[usize] {
        &self.in_dims
    }

    pub fn out_dims(&self) -> &[usize] {
        &self.out_dims
    }

    /// Flat input dimension (product of `in_dims`).
    pub fn in_dim(&self) -> usize {
        total_dim(&self.in_dims)
    }

    /// Flat output dimension (product of `out_dims`).
    pub fn out_dim(&self) -> usize {
        total_dim(&self.out_dims)
    }

    /// Apply to a state occupying exactly the channel input space.
    pub fn apply(&self, state: &QuantumState) -> Result<QuantumState> {
        if state.total_dim() != self.in_dim() {
            return Err(Error::DimensionMismatch(format!(
                "state dim {} != channel input dim {}",
                state.total_dim(),
                self.in_dim()
            )));
        }
        let out = conjugate_on_leading(state.matrix(), self.in_dim(), 1, &self.kraus, self.out_dim());
        Ok(QuantumState::trusted(out, self.out_dims.clone()))
    }

    /// Apply to the listed factors (strictly ascending) of a larger state;
    /// the remaining factors ride along unchanged.
    ///
    /// The output factor list is the channel's `out_dims` followed by the
    /// untouched factors in their original relative order.
    pub fn apply_on_factors(&self, state: &QuantumState, factors: &[usize]) -> Result<QuantumState> {
        let dims = state.dims();
        // reuse the factor-list validation from partial_trace's contract
        if factors.is_empty()
            || factors.windows(2).any(|w| w[0] >= w[1])
            || *factors.last().unwrap() >= dims.len()
        {
            return Err(Error::IndexOutOfRange(format!(
                "apply_on_factors: invalid factor list {factors:?} for {} factors",
                dims.len()
            )));
        }
        let d_s: usize = factors.iter().map(|&f| dims[f]).product();
        if d_s != self.in_dim() {
            return Err(Error::DimensionMismatch(format!(
                "selected factors have dim {} != channel input dim {}",
                d_s,
                self.in_dim()
            )));
        }
        if factors.len() == dims.len() {
            return self.apply(state);
        }
        let rest: Vec<usize> = (0..dims.len()).filter(|f| !factors.contains(f)).collect();
        let mut perm: Vec<usize> = factors.to_vec();
        perm.extend_from_slice(&rest);
        let (permuted, pdims) = permute_factors(state.matrix(), dims, &perm);
        let d_r = total_dim(&pdims) / d_s;
        let out = conjugate_on_leading(&permuted, d_s, d_r, &self.kraus, self.out_dim());
        let mut out_dims = self.out_dims.clone();
        out_dims.extend(rest.iter().map(|&f| dims[f]));
        Ok(QuantumState::trusted(out, out_dims))
    }

    /// Serial composition: `self` first, `then` second (Kraus `{B_j A_k}`).
    pub fn compose_serial(&self, then: &QuantumChannel) -> Result<QuantumChannel> {
        if then.in_dim() != self.out_dim() {
            return Err(Error::DimensionMismatch(format!(
                "serial composition: downstream input dim {} != upstream output dim {}",
                then.in_dim(),
                self.out_dim()
            )));
        }
        let mut kraus = Vec::with_capacity(self.kraus.len() * then.kraus.len());
        for b in &then.kraus {
            for a in &self.kraus {
                kraus.push(b.dot(a));
            }
        }
        Ok(QuantumChannel::trusted(
            kraus,
            self.in_dims.clone(),
            then.out_dims.clone(),
        ))
    }

    /// Parallel composition `self ⊗ other` (Kraus `{A_k ⊗ B_j}`).
    pub fn compose_parallel(&self, other: &QuantumChannel) -> Result<QuantumChannel> {
        let mut kraus = Vec::with_capacity(self.kraus.len() * other.kraus.len());
        for a in &self.kraus {
            for b in &other.kraus {
                kraus.push(linalg::kron(a, b));
            }
        }
        let mut in_dims = self.in_dims.clone();
        in_dims.extend_from_slice(&other.in_dims);
        let mut out_dims = self.out_dims.clone();
        out_dims.extend_from_slice(&other.out_dims);
        Ok(QuantumChannel::trusted(kraus, in_dims, out_dims))
    }

    /// Unnormalized Choi matrix `J(Λ) = Σ_{ij} |i⟩⟨j| ⊗ Λ(|i⟩⟨j|)`
    /// (input factor first; trace equals the input dimension).
    pub fn choi(&self) -> ChoiMatrix {
        let din = self.in_dim();
        let dout = self.out_dim();
        let n = din * dout;
        let mut j = czero(n, n);
        // J = Σ_k |v_k⟩⟨v_k| with v_k = Σ_i |i⟩ ⊗ K_k|i⟩
        for k in &self.kraus {
            let mut v = vec![ZERO; n];
            for i in 0..din {
                for r in 0..dout {
                    v[i * dout + r] = k[[r, i]];
                }
            }
            for a in 0..n {
                if v[a] == ZERO {
                    continue;
                }
                for b in 0..n {
                    j[[a, b]] += v[a] * v[b].conj();
                }
            }
        }
        ChoiMatrix {
            mat: j,
            in_dim: din,
            out_dim: dout,
        }
    }
}

/// Unnormalized Choi matrix of a CPTP map: Hermitian, positive semidefinite,
/// `Tr J = in_dim`, and `Tr_out J = I_in`.
#[derive(Debug, Clone)]
pub struct ChoiMatrix {
    mat: CMat,
    in_dim: usize,
    out_dim: usize,
}

impl ChoiMatrix {
    pub fn matrix(&self) -> &CMat {
        &self.mat
    }

    pub fn in_dim(&self) -> usize {
        self.in_dim
    }

    pub fn out_dim(&self) -> usize {
        self.out_dim
    }

    /// Structural invariants: hermiticity, PSD within `-1e-9`, unit input
    /// marginal. Used by property suites.
    pub fn validate(&self) -> Result<()> {
        let n = self.in_dim * self.out_dim;
        if self.mat.dim() != (n, n) {
            return Err(Error::DimensionMismatch(format!(
                "Choi matrix is {:?}, expected ({n}, {n})",
                self.mat.dim()
            )));
        }
        let herm = linalg::max_abs_offhermitian(&self.mat);
        if herm > STRUCT_TOL {
            return Err(Error::InvalidMatrix(format!(
                "Choi not hermitian: deviation {herm:.3e}"
            )));
        }
        let min_ev = linalg::hermitian_eigenvalues(&self.mat)
            .first()
            .copied()
            .unwrap_or(0.0);
        if min_ev < -1e-9 {
            return Err(Error::InvalidMatrix(format!(
                "Choi not PSD: min eigenvalue {min_ev:.3e}"
            )));
        }
        // Tr_out J must be the identity on the input space
        let mut marg = czero(self.in_dim, self.in_dim);
        for i in 0..self.in_dim {
            for j in 0..self.in_dim {
                let mut acc = ZERO;
                for r in 0..self.out_dim {
                    acc += self.mat[[i * self.out_dim + r, j * self.out_dim + r]];
                }
                marg[[i, j]] = acc;
            }
        }
        let dev = linalg::frob_dist(&marg, &identity(self.in_dim));
        if dev > STRUCT_TOL {
            return Err(Error::InvalidMatrix(format!(
                "Choi output marginal deviates from identity by {dev:.3e}"
            )));
        }
        Ok(())
    }

    /// Frobenius distance to another Choi matrix on the same spaces.
    pub fn frobenius_distance(&self, other: &ChoiMatrix) -> Result<f64> {
        if self.in_dim != other.in_dim || self.out_dim != other.out_dim {
            return Err(Error::DimensionMismatch(format!(
                "Choi spaces differ: ({}, {}) vs ({}, {})",
                self.in_dim, self.out_dim, other.in_dim, other.out_dim
            )));
        }
        Ok(linalg::frob_dist(&self.mat, &other.mat))
    }
}

// ---------------------------------------------------------------------------
// named constructors
// ---------------------------------------------------------------------------

fn check_dim(d: usize) -> Result<()> {
    if d < 2 {
        Err(Error::ParameterOutOfRange(format!("qudit dim {d} < 2")))
    } else {
        Ok(())
    }
}

fn check_unit_interval(name: &str, v: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&v) || !v.is_finite() {
        Err(Error::ParameterOutOfRange(format!("{name} = {v} not in [0, 1]")))
    } else {
        Ok(())
    }
}

/// The identity channel on one qudit.
pub fn identity_channel(d: usize) -> Result<QuantumChannel> {
    check_dim(d)?;
    Ok(QuantumChannel::trusted(vec![identity(d)], vec![d], vec![d]))
}

/// Depolarizing channel `ρ ↦ (1-x)ρ + x·I/d` in its discrete-Weyl Kraus form:
/// `√(1-x+x/d²)·U_(0,0)` together with `√(x/d²)·U_(a,b)` for `(a,b) ≠ (0,0)`.
pub fn depolarizing_channel(d: usize, x: f64) -> Result<QuantumChannel> {
    check_dim(d)?;
    check_unit_interval("x", x)?;
    let dd = (d * d) as f64;
    let mut kraus = Vec::with_capacity(d * d);
    for a in 0..d {
        for b in 0..d {
            let w = if a == 0 && b == 0 {
                (1.0 - x + x / dd).sqrt()
            } else {
                (x / dd).sqrt()
            };
            let u = weyl_operator(d, a, b)?;
            kraus.push(u.matrix().mapv(|z| z * w));
        }
    }
    Ok(QuantumChannel::trusted(kraus, vec![d], vec![d]))
}

/// Projective measurement of two qudits in the generalized Bell basis,
/// recording the outcome `(a, b)` in a classical register of dimension `d²`
/// at index `a·d + b`. Kraus operators are the rank-one `|a·d+b⟩⟨Ψ^(a,b)|`,
/// so the channel is entanglement breaking by construction.
pub fn bell_measurement_channel(d: usize) -> Result<QuantumChannel> {
    check_dim(d)?;
    let dd = d * d;
    let mut kraus = Vec::with_capacity(dd);
    for a in 0..d {
        for b in 0..d {
            let v = bell_vector(d, a, b);
            let mut k = czero(dd, dd);
            let row = a * d + b;
            for (col, amp) in v.iter().enumerate() {
                k[[row, col]] = amp.conj();
            }
            kraus.push(k);
        }
    }
    Ok(QuantumChannel::trusted(kraus, vec![d, d], vec![dd]))
}

/// Two-sender multiple-access channel: Alice's classical register (dim `d²`)
/// selects a Weyl encoding applied to Bob's qudit, which then passes through
/// the depolarizing channel `D_x`. Kraus `{K_m U_i (⟨i| ⊗ I_d)}`.
pub fn dense_coding_mac(d: usize, x: f64) -> Result<QuantumChannel> {
    check_dim(d)?;
    check_unit_interval("x", x)?;
    let dd = d * d;
    let dep = depolarizing_channel(d, x)?;
    let mut kraus = Vec::with_capacity(dd * dep.kraus.len());
    for a in 0..d {
        for b in 0..d {
            let i = a * d + b;
            let u = weyl_operator(d, a, b)?;
            for m in dep.kraus_ops() {
                let block = m.dot(u.matrix());
                let mut k = czero(d, dd * d);
                k.slice_mut(s![.., i * d..(i + 1) * d]).assign(&block);
                kraus.push(k);
            }
        }
    }
    Ok(QuantumChannel::trusted(kraus, vec![dd, d], vec![d]))
}

/// Register-controlled Weyl correction: measures a `d²` register and applies
/// `U_(a,b)` to the payload qudit, discarding the register.
/// Kraus `{U_i (⟨i| ⊗ I_d)}`.
pub fn correction_channel(d: usize) -> Result<QuantumChannel> {
    check_dim(d)?;
    let dd = d * d;
    let mut kraus = Vec::with_capacity(dd);
    for a in 0..d {
        for b in 0..d {
            let i = a * d + b;
            let u = weyl_operator(d, a, b)?;
            let mut k = czero(d, dd * d);
            k.slice_mut(s![.., i * d..(i + 1) * d]).assign(u.matrix());
            kraus.push(k);
        }
    }
    Ok(QuantumChannel::trusted(kraus, vec![dd, d], vec![d]))
}

/// Bell measurement that succeeds with probability `1-q` and otherwise
/// replaces the register with uniform classical noise `I/d²`.
pub fn noisy_bm_channel(d: usize, q: f64) -> Result<QuantumChannel> {
    check_dim(d)?;
    check_unit_interval("q", q)?;
    let dd = d * d;
    let bm = bell_measurement_channel(d)?;
    let mut kraus: Vec<CMat> = bm
        .kraus_ops()
        .iter()
        .map(|k| k.mapv(|z| z * (1.0 - q).sqrt()))
        .collect();
    // ρ ↦ Tr(ρ)·I/d² from the d⁴ operators (√q/d)|r⟩⟨s|
    let c = q.sqrt() / d as f64;
    if c > 0.0 {
        for r in 0..dd {
            for s_ in 0..dd {
                let mut k = czero(dd, dd);
                k[[r, s_]] = Complex64::new(c, 0.0);
                kraus.push(k);
            }
        }
    }
    Ok(QuantumChannel::trusted(kraus, vec![d, d], vec![dd]))
}

/// Flagged mixture of Bell measurement and full two-qudit identity: with
/// probability `1-q` the output is flag `|0⟩` and the measurement register;
/// with probability `q` it is flag `|1⟩` and both input qudits intact.
/// Output factors are `[flag (dim 2), payload (dim d²)]`.
pub fn flagged_bm_identity_channel(d: usize, q: f64) -> Result<QuantumChannel> {
    check_dim(d)?;
    check_unit_interval("q", q)?;
    let dd = d * d;
    let mut kraus = Vec::with_capacity(dd + 1);
    let w_meas = (1.0 - q).sqrt();
    for a in 0..d {
        for b in 0..d {
            let v = bell_vector(d, a, b);
            let mut k = czero(2 * dd, dd);
            let row = a * d + b; // flag 0 block occupies rows 0..dd
            for (col, amp) in v.iter().enumerate() {
                k[[row, col]] = amp.conj() * w_meas;
            }
            kraus.push(k);
        }
    }
    let w_id = q.sqrt();
    let mut k = czero(2 * dd, dd);
    for i in 0..dd {
        k[[dd + i, i]] = Complex64::new(w_id, 0.0); // flag 1 block
    }
    kraus.push(k);
    Ok(QuantumChannel::trusted(kraus, vec![d, d], vec![2, dd]))
}

/// The two-receiver butterfly core: input factors
/// `[register_a (d²), qudit A (d), register_b (d²), qudit B (d)]`. Both
/// registers are measured; the cross encodings `U_b` on qudit A and `U_a` on
/// qudit B are applied; each qudit then passes through `D_x`.
///
/// The Kraus family has `d⁴ · n_dep²` operators (256 at `d = 2`); the size
/// grows as `d⁸`, so only `d = 2` is exercised by the default suites.
pub fn butterfly_channel(d: usize, x: f64) -> Result<QuantumChannel> {
    check_dim(d)?;
    check_unit_interval("x", x)?;
    let dd = d * d;
    let dep = depolarizing_channel(d, x)?;
    let dep_ops = dep.kraus_ops();
    let in_flat = dd * d * dd * d;
    // column strides for input factor layout [d², d, d², d]
    let st = strides(&[dd, d, dd, d]);
    let mut kraus = Vec::with_capacity(dd * dd * dep_ops.len() * dep_ops.len());
    let mut weyl = Vec::with_capacity(dd);
    for a in 0..d {
        for b in 0..d {
            weyl.push(weyl_operator(d, a, b)?);
        }
    }
    for i in 0..dd {
        for j in 0..dd {
            // registers read (i, j); qudit A gets U_j, qudit B gets U_i
            for m1 in dep_ops {
                let left = m1.dot(weyl[j].matrix());
                for m2 in dep_ops {
                    let right = m2.dot(weyl[i].matrix());
                    let mut k = czero(dd, in_flat);
                    for alpha in 0..d {
                        for beta in 0..d {
                            let row = alpha * d + beta;
                            for a_in in 0..d {
                                let l = left[[alpha, a_in]];
                                if l == ZERO {
                                    continue;
                                }
                                for b_in in 0..d {
                                    let col = i * st[0] + a_in * st[1] + j * st[2] + b_in * st[3];
                                    k[[row, col]] = l * right[[beta, b_in]];
                                }
                            }
                        }
                    }
                    kraus.push(k);
                }
            }
        }
    }
    Ok(QuantumChannel::trusted(
        kraus,
        vec![dd, d, dd, d],
        vec![d, d],
    ))
}

/// Channel that adjoins a fixed pure state: `ρ ↦ ρ ⊗ |φ⟩⟨φ|`. Single Kraus
/// operator `I ⊗ |φ⟩` (kept pure so the family stays rank-controlled).
pub fn append_pure_state_channel(d: usize, appended: &QuantumState) -> Result<QuantumChannel> {
    check_dim(d)?;
    if (appended.purity() - 1.0).abs() > STRUCT_TOL {
        return Err(Error::NotPure(appended.purity()));
    }
    let n = appended.total_dim();
    // extract the state vector: dominant eigen-column of a pure projector is
    // any nonzero column, normalized
    let m = appended.matrix();
    let mut col = 0usize;
    let mut best = 0.0;
    for c in 0..n {
        let w: f64 = (0..n).map(|r| m[[r, c]].norm_sqr()).sum();
        if w > best {
            best = w;
            col = c;
        }
    }
    let norm = best.sqrt();
    let v: Vec<Complex64> = (0..n).map(|r| m[[r, col]] / norm).collect();
    let mut k = czero(d * n, d);
    for i in 0..d {
        for (r, amp) in v.iter().enumerate() {
            k[[i * n + r, i]] = *amp;
        }
    }
    let mut out_dims = vec![d];
    out_dims.extend_from_slice(appended.dims());
    Ok(QuantumChannel::trusted(vec![k], vec![d], out_dims))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::trace;
    use crate::qcore::{
        computational_basis_state, generalized_bell_state, maximally_entangled_state,
        random_mixed_state,
    };
    use approx::assert_relative_eq;

    #[test]
    fn identity_channel_is_identity() {
        let ch = identity_channel(3).unwrap();
        let rho = random_mixed_state(3, 1).unwrap();
        let out = ch.apply(&rho).unwrap();
        assert!(linalg::frob_dist(out.matrix(), rho.matrix()) < 1e-14);
    }

    #[test]
    fn depolarizing_action_matches_closed_form() {
        for d in 2..=3 {
            for &x in &[0.0, 0.3, 0.5, 1.0] {
                let ch = depolarizing_channel(d, x).unwrap();
                let rho = random_mixed_state(d, 7).unwrap();
                let out = ch.apply(&rho).unwrap();
                let mut expect = rho.matrix().mapv(|z| z * (1.0 - x));
                for i in 0..d {
                    expect[[i, i]] += Complex64::new(x / d as f64, 0.0);
                }
                assert!(
                    linalg::frob_dist(out.matrix(), &expect) < 1e-12,
                    "d={d} x={x}"
                );
            }
        }
    }

    #[test]
    fn depolarizing_kraus_count_prunes_at_zero_noise() {
        assert_eq!(depolarizing_channel(2, 0.0).unwrap().kraus_ops().len(), 1);
        assert_eq!(depolarizing_channel(2, 0.5).unwrap().kraus_ops().len(), 4);
    }

    #[test]
    fn kraus_completeness_where_validated() {
        // run full validation on each named constructor at small d
        let fams: Vec<QuantumChannel> = vec![
            identity_channel(2).unwrap(),
            depolarizing_channel(2, 0.37).unwrap(),
            depolarizing_channel(3, 0.8).unwrap(),
            bell_measurement_channel(2).unwrap(),
            bell_measurement_channel(3).unwrap(),
            dense_coding_mac(2, 0.4).unwrap(),
            correction_channel(3).unwrap(),
            noisy_bm_channel(2, 0.3).unwrap(),
            flagged_bm_identity_channel(2, 0.5).unwrap(),
            butterfly_channel(2, 2.0 / 3.0).unwrap(),
        ];
        for ch in fams {
            let revalidated = QuantumChannel::new(
                ch.kraus_ops().to_vec(),
                ch.in_dims().to_vec(),
                ch.out_dims().to_vec(),
            );
            assert!(revalidated.is_ok());
        }
    }

    #[test]
    fn rejects_incomplete_kraus_family() {
        let k = identity(2).mapv(|z| z * 0.9);
        let err = QuantumChannel::new(vec![k], vec![2], vec![2]);
        assert!(matches!(err, Err(Error::NotTracePreserving(_))));
    }

    #[test]
    fn depolarizing_composition_law() {
        // D_x ∘ D_y = D_{x+y-xy}, compared at the Choi level
        let (x, y) = (0.3, 0.5);
        for d in 2..=3 {
            let a = depolarizing_channel(d, x).unwrap();
            let b = depolarizing_channel(d, y).unwrap();
            let serial = a.compose_serial(&b).unwrap();
            let direct = depolarizing_channel(d, x + y - x * y).unwrap();
            let dist = serial
                .choi()
                .frobenius_distance(&direct.choi())
                .unwrap();
            assert!(dist < 1e-12, "d={d} dist={dist:.3e}");
        }
    }

    #[test]
    fn depolarizing_choi_matches_isotropic_form() {
        // J(D_x) = (1-x)|Ω⟩⟨Ω| + (x/d)·I, |Ω⟩ = Σ|ii⟩
        for d in 2..=3 {
            for &x in &[0.0, 0.25, 2.0 / 3.0, 1.0] {
                let j = depolarizing_channel(d, x).unwrap().choi();
                let n = d * d;
                let mut expect = czero(n, n);
                for i in 0..d {
                    for k in 0..d {
                        expect[[i * d + i, k * d + k]] += Complex64::new(1.0 - x, 0.0);
                    }
                }
                for r in 0..n {
                    expect[[r, r]] += Complex64::new(x / d as f64, 0.0);
                }
                assert!(linalg::frob_dist(j.matrix(), &expect) < 1e-12, "d={d} x={x}");
                j.validate().unwrap();
                assert_relative_eq!(trace(j.matrix()).re, d as f64, epsilon = 1e-9);
            }
        }
    }

    #[test]
    fn bell_measurement_identifies_bell_inputs() {
        for d in 2..=3 {
            let bm = bell_measurement_channel(d).unwrap();
            for a in 0..d {
                for b in 0..d {
                    let input = generalized_bell_state(d, a, b).unwrap();
                    let out = bm.apply(&input).unwrap();
                    let expect = computational_basis_state(d * d, a * d + b).unwrap();
                    assert!(
                        linalg::frob_dist(out.matrix(), expect.matrix()) < 1e-12,
                        "d={d} ({a},{b})"
                    );
                }
            }
        }
    }

    #[test]
    fn bell_measurement_output_is_always_diagonal() {
        let bm = bell_measurement_channel(2).unwrap();
        let rho = random_mixed_state(4, 9).unwrap().with_factor_dims(vec![2, 2]).unwrap();
        let out = bm.apply(&rho).unwrap();
        for i in 0..4 {
            for j in 0..4 {
                if i != j {
                    assert!(out.matrix()[[i, j]].norm() < 1e-14);
                }
            }
        }
        assert_relative_eq!(trace(out.matrix()).re, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn mac_encodes_and_depolarizes() {
        // register |i⟩⟨i| with payload σ must map to D_x(U_i σ U_i†)
        let d = 3;
        let x = 0.45;
        let mac = dense_coding_mac(d, x).unwrap();
        let dep = depolarizing_channel(d, x).unwrap();
        let sigma = random_mixed_state(d, 17).unwrap();
        for a in 0..d {
            for b in 0..d {
                let i = a * d + b;
                let reg = computational_basis_state(d * d, i).unwrap();
                let joint = reg.tensor(&sigma);
                let out = mac.apply(&joint).unwrap();
                let u = weyl_operator(d, a, b).unwrap();
                let rotated = sigma.apply_unitary(&u, &[0]).unwrap();
                let expect = dep.apply(&rotated).unwrap();
                assert!(
                    linalg::frob_dist(out.matrix(), expect.matrix()) < 1e-12,
                    "i={i}"
                );
            }
        }
    }

    #[test]
    fn mac_ignores_register_coherences() {
        // a superposed register acts like its diagonal: classical control
        let d = 2;
        let mac = dense_coding_mac(d, 0.0).unwrap();
        let sigma = computational_basis_state(d, 0).unwrap();
        // register (|0⟩+|1⟩)(⟨0|+⟨1|)/2 over the d²-dim register space
        let mut reg = czero(4, 4);
        for i in 0..2 {
            for j in 0..2 {
                reg[[i, j]] = Complex64::new(0.5, 0.0);
            }
        }
        let reg = QuantumState::new(reg, vec![4]).unwrap();
        let out = mac.apply(&reg.tensor(&sigma)).unwrap();
        // diagonal mixture: (U_0 σ U_0† + U_1 σ U_1†)/2
        let u0 = weyl_operator(d, 0, 0).unwrap();
        let u1 = weyl_operator(d, 0, 1).unwrap();
        let mix = sigma
            .apply_unitary(&u0, &[0])
            .unwrap()
            .matrix()
            .mapv(|z| z * 0.5)
            + sigma
                .apply_unitary(&u1, &[0])
                .unwrap()
                .matrix()
                .mapv(|z| z * 0.5);
        assert!(linalg::frob_dist(out.matrix(), &mix) < 1e-12);
    }

    #[test]
    fn parallel_composition_factorizes_on_products() {
        let a = depolarizing_channel(2, 0.3).unwrap();
        let b = bell_measurement_channel(2).unwrap();
        let par = a.compose_parallel(&b).unwrap();
        assert_eq!(par.in_dims(), &[2, 2, 2]);
        assert_eq!(par.out_dims(), &[2, 4]);
        let rho = random_mixed_state(2, 3).unwrap();
        let sigma = maximally_entangled_state(2).unwrap();
        let out = par.apply(&rho.tensor(&sigma)).unwrap();
        let expect = a.apply(&rho).unwrap().tensor(&b.apply(&sigma).unwrap());
        assert!(linalg::frob_dist(out.matrix(), expect.matrix()) < 1e-12);
    }

    #[test]
    fn apply_on_factors_leaves_spectator_alone() {
        // depolarize factor 0 of |Φ⁺⟩ → (1-x)|Φ⁺⟩⟨Φ⁺| + x·I/d ⊗ I/d ... the
        // isotropic state
        let d = 2;
        let x = 2.0 / 3.0;
        let dep = depolarizing_channel(d, x).unwrap();
        let phi = maximally_entangled_state(d).unwrap();
        let out = dep.apply_on_factors(&phi, &[0]).unwrap();
        assert_eq!(out.dims(), &[2, 2]);
        let mut expect = phi.matrix().mapv(|z| z * (1.0 - x));
        for i in 0..4 {
            expect[[i, i]] += Complex64::new(x / 4.0, 0.0);
        }
        assert!(linalg::frob_dist(out.matrix(), &expect) < 1e-12);
    }

    #[test]
    fn apply_on_factors_order_convention() {
        // applying to the trailing factor moves the channel output to the
        // front of the factor list
        let a = computational_basis_state(2, 0).unwrap();
        let b = computational_basis_state(3, 1).unwrap();
        let joint = a.tensor(&b); // dims [2, 3]
        let shift = {
            let u = weyl_operator(3, 1, 0).unwrap();
            QuantumChannel::trusted(vec![u.matrix().clone()], vec![3], vec![3])
        };
        let out = shift.apply_on_factors(&joint, &[1]).unwrap();
        assert_eq!(out.dims(), &[3, 2]);
        let expect = computational_basis_state(3, 2).unwrap().tensor(&a);
        assert!(linalg::frob_dist(out.matrix(), expect.matrix()) < 1e-12);
    }

    #[test]
    fn apply_on_factors_validates_selection() {
        let dep = depolarizing_channel(2, 0.5).unwrap();
        let phi = maximally_entangled_state(2).unwrap();
        assert!(dep.apply_on_factors(&phi, &[]).is_err());
        assert!(dep.apply_on_factors(&phi, &[0, 0]).is_err());
        assert!(dep.apply_on_factors(&phi, &[2]).is_err());
        // dimension mismatch: channel acts on d=2, factor product is 4
        assert!(dep.apply_on_factors(&phi, &[0, 1]).is_err());
    }

    #[test]
    fn serial_composition_requires_matching_interface() {
        let bm = bell_measurement_channel(2).unwrap(); // out dim 4
        let dep3 = depolarizing_channel(3, 0.1).unwrap(); // in dim 3
        assert!(bm.compose_serial(&dep3).is_err());
    }

    #[test]
    fn serial_composition_acts_in_sequence() {
        let d = 2;
        let x = 0.4;
        let dep = depolarizing_channel(d, x).unwrap();
        let id = identity_channel(d).unwrap();
        let comp = dep.compose_serial(&id).unwrap();
        let rho = random_mixed_state(d, 23).unwrap();
        let got = comp.apply(&rho).unwrap();
        let expect = dep.apply(&rho).unwrap();
        assert!(linalg::frob_dist(got.matrix(), expect.matrix()) < 1e-13);
    }

    #[test]
    fn choi_of_identity_is_unnormalized_bell_projector() {
        let j = identity_channel(2).unwrap().choi();
        j.validate().unwrap();
        let phi = maximally_entangled_state(2).unwrap();
        let expect = phi.matrix().mapv(|z| z * 2.0);
        assert!(linalg::frob_dist(j.matrix(), &expect) < 1e-14);
    }

    #[test]
    fn choi_validation_on_all_constructors() {
        let chs = vec![
            bell_measurement_channel(2).unwrap(),
            dense_coding_mac(2, 0.6).unwrap(),
            noisy_bm_channel(2, 0.4).unwrap(),
            flagged_bm_identity_channel(2, 0.2).unwrap(),
            correction_channel(2).unwrap(),
        ];
        for ch in chs {
            ch.choi().validate().unwrap();
            assert_relative_eq!(
                trace(ch.choi().matrix()).re,
                ch.in_dim() as f64,
                epsilon = 1e-9
            );
        }
    }

    #[test]
    fn noisy_bm_interpolates_between_bm_and_uniform() {
        let d = 2;
        // q = 0 is exactly the Bell measurement
        let dist = noisy_bm_channel(d, 0.0)
            .unwrap()
            .choi()
            .frobenius_distance(&bell_measurement_channel(d).unwrap().choi())
            .unwrap();
        assert!(dist < 1e-14);
        // q = 1 sends everything to I/d²
        let ch = noisy_bm_channel(d, 1.0).unwrap();
        let out = ch.apply(&generalized_bell_state(d, 1, 1).unwrap()).unwrap();
        let mut uniform = czero(4, 4);
        for i in 0..4 {
            uniform[[i, i]] = Complex64::new(0.25, 0.0);
        }
        assert!(linalg::frob_dist(out.matrix(), &uniform) < 1e-14);
    }

    #[test]
    fn flagged_channel_flag_marginal() {
        let d = 2;
        let q = 0.3;
        let ch = flagged_bm_identity_channel(d, q).unwrap();
        let input = maximally_entangled_state(d).unwrap();
        let out = ch.apply(&input).unwrap();
        assert_eq!(out.dims(), &[2, 4]);
        let flag = out.partial_trace(&[0]).unwrap();
        assert_relative_eq!(flag.matrix()[[0, 0]].re, 1.0 - q, epsilon = 1e-12);
        assert_relative_eq!(flag.matrix()[[1, 1]].re, q, epsilon = 1e-12);
    }

    #[test]
    fn flagged_identity_branch_transmits_both_qudits() {
        let d = 2;
        let ch = flagged_bm_identity_channel(d, 1.0).unwrap();
        let input = generalized_bell_state(d, 1, 0).unwrap();
        let out = ch.apply(&input).unwrap();
        let (p, payload) = out.condition_on_basis_outcome(0, 1).unwrap();
        assert_relative_eq!(p, 1.0, epsilon = 1e-12);
        let payload = payload.unwrap().with_factor_dims(vec![d, d]).unwrap();
        assert!(linalg::frob_dist(payload.matrix(), input.matrix()) < 1e-12);
    }

    #[test]
    fn butterfly_is_trace_preserving_and_cross_controls() {
        let d = 2;
        let x = 0.0; // noiseless: pure cross-control
        let ch = butterfly_channel(d, x).unwrap();
        assert_eq!(ch.in_dims(), &[4, 2, 4, 2]);
        assert_eq!(ch.out_dims(), &[2, 2]);
        // registers (i, j) with basis qudits: A ends as U_j|a⟩, B as U_i|b⟩
        let (i, j) = (2usize, 3usize); // i = (1,0), j = (1,1)
        let reg_a = computational_basis_state(4, i).unwrap();
        let reg_b = computational_basis_state(4, j).unwrap();
        let qa = computational_basis_state(2, 0).unwrap();
        let qb = computational_basis_state(2, 1).unwrap();
        let input = reg_a.tensor(&qa).tensor(&reg_b).tensor(&qb);
        let out = ch.apply(&input).unwrap();
        let uj = weyl_operator(d, j / d, j % d).unwrap();
        let ui = weyl_operator(d, i / d, i % d).unwrap();
        let expect = qa
            .apply_unitary(&uj, &[0])
            .unwrap()
            .tensor(&qb.apply_unitary(&ui, &[0]).unwrap());
        assert!(linalg::frob_dist(out.matrix(), expect.matrix()) < 1e-12);
    }

    #[test]
    fn butterfly_with_noise_depolarizes_each_output() {
        let d = 2;
        let x = 0.7;
        let ch = butterfly_channel(d, x).unwrap();
        let reg_a = computational_basis_state(4, 0).unwrap();
        let reg_b = computational_basis_state(4, 0).unwrap();
        let qa = computational_basis_state(2, 1).unwrap();
        let qb = computational_basis_state(2, 0).unwrap();
        let input = reg_a.tensor(&qa).tensor(&reg_b).tensor(&qb);
        let out = ch.apply(&input).unwrap();
        let dep = depolarizing_channel(d, x).unwrap();
        let expect = dep.apply(&qa).unwrap().tensor(&dep.apply(&qb).unwrap());
        assert!(linalg::frob_dist(out.matrix(), expect.matrix()) < 1e-12);
    }

    #[test]
    fn constructor_domain_errors() {
        assert!(depolarizing_channel(1, 0.5).is_err());
        assert!(depolarizing_channel(2, -0.1).is_err());
        assert!(depolarizing_channel(2, 1.1).is_err());
        assert!(noisy_bm_channel(2, f64::NAN).is_err());
        assert!(flagged_bm_identity_channel(0, 0.5).is_err());
    }
}
