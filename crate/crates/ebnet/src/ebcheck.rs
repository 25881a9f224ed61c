//! Entanglement-breaking certification: a sufficient Kraus-rank witness, the
//! partial-transpose (PPT) necessary test on the Choi state, and a bisection
//! scan for the depolarizing noise threshold.

use serde::Serialize;

use crate::channels::{depolarizing_channel, QuantumChannel};
use crate::error::{Error, Result};
use crate::linalg::{czero, hermitian_eigenvalues, singular_values};

/// PSD slack tolerated before a PT eigenvalue counts as negative.
pub const PPT_TOL: f64 = 1e-9;
/// Absolute ceiling on trailing singular values for the rank-one witness.
pub const RANK_ONE_TOL: f64 = 1e-9;

/// Outcome of the entanglement-breaking checks on one channel.
///
/// `kraus_rank_one` is sufficient for entanglement breaking (a rank-one
/// family is measure-and-prepare); `ppt` (positivity of the partially
/// transposed Choi state) is necessary. For the depolarizing family the Choi
/// state is isotropic, where PPT coincides with separability, so the two
/// directions meet.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EbVerdict {
    pub kraus_rank_one: bool,
    pub min_pt_eigenvalue: f64,
    pub ppt: bool,
}

/// True when every Kraus operator is rank one (all singular values beyond
/// the largest at most [`RANK_ONE_TOL`]).
pub fn kraus_rank_one_witness(ch: &QuantumChannel) -> bool {
    ch.kraus_ops().iter().all(|k| {
        let sv = singular_values(k);
        sv.iter().skip(1).all(|&s| s <= RANK_ONE_TOL)
    })
}

/// Minimum eigenvalue of `(T ⊗ id)(J/in_dim)`: the Choi state with the
/// transpose applied to its input factor. Nonnegative (within [`PPT_TOL`])
/// is the PPT criterion.
pub fn choi_partial_transpose_min_eig(ch: &QuantumChannel) -> f64 {
    let j = ch.choi();
    let din = j.in_dim();
    let dout = j.out_dim();
    let n = din * dout;
    let m = j.matrix();
    let mut pt = czero(n, n);
    let scale = 1.0 / din as f64;
    for i in 0..din {
        for r in 0..dout {
            for jj in 0..din {
                for s in 0..dout {
                    // transpose the input factor: (i,r),(j,s) <- (j,r),(i,s)
                    pt[[i * dout + r, jj * dout + s]] = m[[jj * dout + r, i * dout + s]] * scale;
                }
            }
        }
    }
    hermitian_eigenvalues(&pt)
        .first()
        .copied()
        .unwrap_or(f64::NAN)
}

/// Run both checks.
pub fn eb_verdict(ch: &QuantumChannel) -> EbVerdict {
    let min_ev = choi_partial_transpose_min_eig(ch);
    EbVerdict {
        kraus_rank_one: kraus_rank_one_witness(ch),
        min_pt_eigenvalue: min_ev,
        ppt: min_ev >= -PPT_TOL,
    }
}

/// Bisection scan for the depolarizing noise level at which the partially
/// transposed Choi state stops being negative: converges to `d/(d+1)` within
/// `1e-8` (the PT minimum eigenvalue is strictly increasing in `x`).
pub fn eb_threshold_scan(d: usize) -> Result<f64> {
    if d < 2 {
        return Err(Error::ParameterOutOfRange(format!("qudit dim {d} < 2")));
    }
    let f = |x: f64| -> Result<f64> {
        Ok(choi_partial_transpose_min_eig(&depolarizing_channel(d, x)?))
    };
    let mut lo = 0.0_f64;
    let mut hi = 1.0_f64;
    let f_lo = f(lo)?;
    let f_hi = f(hi)?;
    if f_lo >= 0.0 || f_hi <= 0.0 {
        return Err(Error::Undefined(format!(
            "no sign change on [0, 1]: f(0) = {f_lo:.3e}, f(1) = {f_hi:.3e}"
        )));
    }
    for _ in 0..60 {
        if hi - lo <= 1e-8 {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if f(mid)? < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}
