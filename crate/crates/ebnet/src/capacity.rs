//! Closed-form capacities of the depolarizing channel, Holevo quantities of
//! explicit ensembles, and rate-region data for the two-sender channels and
//! the butterfly network.
//!
//! Everything is in bits (base-2 logarithms).

use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::czero;
use crate::qcore::QuantumState;

/// `C` below this is treated as exactly zero: ratios against it are refused
/// rather than returned as garbage.
pub const RATE_FLOOR: f64 = 1e-12;

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

/// Entropy of the distribution that puts weight `p` on one symbol and splits
/// the rest evenly over the remaining `d - 1`:
/// `H_d(p) = -p log p - (1-p) log((1-p)/(d-1))`.
pub fn h_d(d: usize, p: f64) -> Result<f64> {
    check_dim(d)?;
    check_unit_interval("p", p)?;
    let mut h = 0.0;
    if p > 0.0 {
        h -= p * p.log2();
    }
    if p < 1.0 {
        h -= (1.0 - p) * ((1.0 - p) / (d as f64 - 1.0)).log2();
    }
    Ok(h)
}

/// `log2(1 + t)` without cancellation for small `t`.
fn log2_1p(t: f64) -> f64 {
    t.ln_1p() / std::f64::consts::LN_2
}

/// `log D - H_D(1 - x(D-1)/D)` rewritten as the relative entropy of the
/// output distribution against uniform:
/// `p·log2(p·D) + (1-p)·log2(x)` with `p·D = 1 + (D-1)(1-x)`.
///
/// The textbook difference form loses ~8 significant digits near `x = 1`
/// (the capacity is `O((1-x)²)` there while both terms stay `O(log D)`);
/// this form keeps full precision across the whole parameter range.
fn relative_entropy_capacity(dim: f64, x: f64) -> f64 {
    let p = 1.0 - x * (dim - 1.0) / dim;
    let mut c = p * log2_1p((dim - 1.0) * (1.0 - x));
    if x > 0.0 {
        c += (1.0 - p) * x.log2();
    }
    c
}

/// Holevo (product-state classical) capacity of the depolarizing channel:
/// `C = log d - H_d(1 - x(d-1)/d)`, achieved by uniform basis signalling.
pub fn holevo_capacity_depolarizing(d: usize, x: f64) -> Result<f64> {
    check_dim(d)?;
    check_unit_interval("x", x)?;
    Ok(relative_entropy_capacity(d as f64, x))
}

/// Entanglement-assisted classical capacity of the depolarizing channel:
/// `C_E = 2 log d - H_{d²}(1 - x(d²-1)/d²)`.
pub fn ea_capacity_depolarizing(d: usize, x: f64) -> Result<f64> {
    check_dim(d)?;
    check_unit_interval("x", x)?;
    Ok(relative_entropy_capacity((d * d) as f64, x))
}

/// `C_E / C`; approaches `d + 1` as `x → 1`. Errors when `C` is below
/// [`RATE_FLOOR`] (at `x = 1` both capacities vanish and the ratio is
/// undefined).
pub fn superadditivity_ratio(d: usize, x: f64) -> Result<f64> {
    let c = holevo_capacity_depolarizing(d, x)?;
    if c < RATE_FLOOR {
        return Err(Error::Undefined(format!(
            "C({d}, {x}) = {c:.3e} is below the rate floor; ratio undefined"
        )));
    }
    Ok(ea_capacity_depolarizing(d, x)? / c)
}

/// One grid sample of the depolarizing-channel rates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CapacitySample {
    pub d: usize,
    pub x: f64,
    pub c: f64,
    pub c_e: f64,
    /// `c_e / c`; absent once `c` falls below [`RATE_FLOOR`].
    pub ratio: Option<f64>,
    /// whether `x` is at or past the breaking threshold `d/(d+1)`
    pub eb: bool,
}

/// Evaluates both capacities on `steps` evenly spaced points covering
/// `[x_min, x_max]`, optionally fanning the grid out over the thread pool;
/// the row order is the grid order either way.
pub fn capacity_sweep(
    d: usize,
    x_min: f64,
    x_max: f64,
    steps: usize,
    parallel: bool,
) -> Result<Vec<CapacitySample>> {
    check_dim(d)?;
    check_unit_interval("x_min", x_min)?;
    check_unit_interval("x_max", x_max)?;
    if x_min >= x_max {
        return Err(Error::ParameterOutOfRange(format!(
            "empty sweep range [{x_min}, {x_max}]"
        )));
    }
    if steps < 2 {
        return Err(Error::ParameterOutOfRange(format!(
            "sweep needs at least 2 steps, got {steps}"
        )));
    }
    let threshold = d as f64 / (d as f64 + 1.0);
    let grid: Vec<f64> = (0..steps)
        .map(|k| x_min + (x_max - x_min) * k as f64 / (steps - 1) as f64)
        .collect();
    let rows = crate::par::map_collect(parallel, grid, move |x| {
        let c = relative_entropy_capacity(d as f64, x);
        let c_e = relative_entropy_capacity((d * d) as f64, x);
        CapacitySample {
            d,
            x,
            c,
            c_e,
            ratio: (c > RATE_FLOOR).then(|| c_e / c),
            eb: x >= threshold - 1e-12,
        }
    });
    Ok(rows)
}

// ---------------------------------------------------------------------------
// ensembles and the Holevo quantity
// ---------------------------------------------------------------------------

/// A finite ensemble `{(p_i, ρ_i)}` of equal-dimension states with a
/// normalized probability vector.
#[derive(Debug, Clone)]
pub struct Ensemble {
    entries: Vec<(f64, QuantumState)>,
}

impl Ensemble {
    pub fn new(entries: Vec<(f64, QuantumState)>) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::InvalidDistribution("empty ensemble".into()));
        }
        let dim = entries[0].1.total_dim();
        let mut total = 0.0;
        for (p, st) in &entries {
            if !p.is_finite() || *p < 0.0 {
                return Err(Error::InvalidDistribution(format!(
                    "negative or non-finite probability {p}"
                )));
            }
            if st.total_dim() != dim {
                return Err(Error::DimensionMismatch(format!(
                    "ensemble states live on dims {} and {}",
                    dim,
                    st.total_dim()
                )));
            }
            total += p;
        }
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidDistribution(format!(
                "probabilities sum to {total}"
            )));
        }
        Ok(Self { entries })
    }

    /// Uniform ensemble over the given states.
    pub fn uniform(states: Vec<QuantumState>) -> Result<Self> {
        let n = states.len();
        if n == 0 {
            return Err(Error::InvalidDistribution("empty ensemble".into()));
        }
        let p = 1.0 / n as f64;
        Ensemble::new(states.into_iter().map(|s| (p, s)).collect())
    }

    pub fn entries(&self) -> &[(f64, QuantumState)] {
        &self.entries
    }

    /// `ρ̄ = Σ p_i ρ_i`.
    pub fn average_state(&self) -> QuantumState {
        let n = self.entries[0].1.total_dim();
        let mut acc = czero(n, n);
        for (p, st) in &self.entries {
            if *p > 0.0 {
                acc += &st.matrix().mapv(|z| z * *p);
            }
        }
        QuantumState::trusted(acc, self.entries[0].1.dims().to_vec())
    }
}

/// `χ = S(Σ p_i ρ_i) - Σ p_i S(ρ_i)`, in bits.
pub fn holevo_quantity(ens: &Ensemble) -> f64 {
    let avg = ens.average_state().von_neumann_entropy();
    let cond: f64 = ens
        .entries()
        .iter()
        .filter(|(p, _)| *p > 1e-15)
        .map(|(p, st)| p * st.von_neumann_entropy())
        .sum();
    avg - cond
}

// ---------------------------------------------------------------------------
// rate vectors and regions
// ---------------------------------------------------------------------------

/// Rates (bits per channel use) across the two-sender, two-receiver network:
/// four point-to-point flows plus one extra inflow bound per receiver.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RateVector {
    /// sender A → receiver on the A output wire
    pub a_to_a: f64,
    /// sender A → receiver on the B output wire (cross flow)
    pub a_to_b: f64,
    /// sender B → receiver on the A output wire (cross flow)
    pub b_to_a: f64,
    /// sender B → receiver on the B output wire
    pub b_to_b: f64,
    /// any further flow terminating at the A-side receiver
    pub other_to_a: f64,
    /// any further flow terminating at the B-side receiver
    pub other_to_b: f64,
}

impl RateVector {
    pub const ZERO: RateVector = RateVector {
        a_to_a: 0.0,
        a_to_b: 0.0,
        b_to_a: 0.0,
        b_to_b: 0.0,
        other_to_a: 0.0,
        other_to_b: 0.0,
    };

    pub fn as_array(&self) -> [f64; 6] {
        [
            self.a_to_a,
            self.a_to_b,
            self.b_to_a,
            self.b_to_b,
            self.other_to_a,
            self.other_to_b,
        ]
    }
}

/// One linear bound `Σ coeffs·rates ≤ bound`.
#[derive(Debug, Clone, Serialize)]
pub struct Inequality {
    pub label: String,
    pub coeffs: Vec<f64>,
    pub bound: f64,
}

/// A labeled rate point.
#[derive(Debug, Clone, Serialize)]
pub struct LabeledPoint {
    pub label: String,
    pub values: Vec<f64>,
}

/// A polyhedral outer bound on achievable rates: nonnegativity plus the
/// listed inequalities, with named achievable corner points.
#[derive(Debug, Clone, Serialize)]
pub struct RateRegion {
    pub components: Vec<String>,
    pub inequalities: Vec<Inequality>,
    pub extreme_points: Vec<LabeledPoint>,
}

impl RateRegion {
    /// Membership within `tol` slack (includes nonnegativity).
    pub fn contains(&self, rates: &[f64], tol: f64) -> Result<bool> {
        if rates.len() != self.components.len() {
            return Err(Error::DimensionMismatch(format!(
                "rate point has {} components, region has {}",
                rates.len(),
                self.components.len()
            )));
        }
        if rates.iter().any(|&r| r < -tol) {
            return Ok(false);
        }
        Ok(self.inequalities.iter().all(|iq| {
            let lhs: f64 = iq.coeffs.iter().zip(rates).map(|(c, r)| c * r).sum();
            lhs <= iq.bound + tol
        }))
    }

    /// Internal consistency: coefficient lengths match, and every listed
    /// extreme point satisfies every inequality within `1e-9`.
    pub fn validate(&self) -> Result<()> {
        for iq in &self.inequalities {
            if iq.coeffs.len() != self.components.len() {
                return Err(Error::DimensionMismatch(format!(
                    "inequality '{}' has {} coefficients for {} components",
                    iq.label,
                    iq.coeffs.len(),
                    self.components.len()
                )));
            }
        }
        for pt in &self.extreme_points {
            if !self.contains(&pt.values, 1e-9)? {
                return Err(Error::InvalidState(format!(
                    "extreme point '{}' violates the region bounds",
                    pt.label
                )));
            }
        }
        Ok(())
    }
}

/// Rate region of the two-sender channel under product (unentangled) inputs
/// with one shared entangled pair between Alice and the receiver: the sum
/// rate is capped by `C + log d`, Alice alone by `C_E`. Extreme points:
/// `(C_E, 0)` (Alice uses dense coding alone) and `(0, C + log d)` (Bob
/// signals through Alice's dense-coded zero).
pub fn product_region_extreme_points(d: usize, x: f64) -> Result<RateRegion> {
    let c = holevo_capacity_depolarizing(d, x)?;
    let ce = ea_capacity_depolarizing(d, x)?;
    let logd = (d as f64).log2();
    let region = RateRegion {
        components: vec!["r_a".into(), "r_b".into()],
        inequalities: vec![
            Inequality {
                label: "alice_ceiling".into(),
                coeffs: vec![1.0, 0.0],
                bound: ce,
            },
            Inequality {
                label: "sum_rate".into(),
                coeffs: vec![1.0, 1.0],
                bound: c + logd,
            },
        ],
        extreme_points: vec![
            LabeledPoint {
                label: "alice_max".into(),
                values: vec![ce, 0.0],
            },
            LabeledPoint {
                label: "bob_max".into(),
                values: vec![0.0, c + logd],
            },
        ],
    };
    region.validate()?;
    Ok(region)
}

/// Quantum-capacity product region of the noiseless version: the senders
/// share `log d` qubits of quantum throughput in total.
pub fn quantum_product_region(d: usize) -> Result<RateRegion> {
    check_dim(d)?;
    let logd = (d as f64).log2();
    let region = RateRegion {
        components: vec!["q_a".into(), "q_b".into()],
        inequalities: vec![Inequality {
            label: "sum_rate".into(),
            coeffs: vec![1.0, 1.0],
            bound: logd,
        }],
        extreme_points: vec![
            LabeledPoint {
                label: "alice_max".into(),
                values: vec![logd, 0.0],
            },
            LabeledPoint {
                label: "bob_max".into(),
                values: vec![0.0, logd],
            },
        ],
    };
    region.validate()?;
    Ok(region)
}

/// Outer bounds for the butterfly network: the bare network caps each
/// receiver's total inflow at `C`; the assisting side channel is a pair of
/// noiseless `log d` links; and the cross-transfer point — both cross flows
/// at `C_E` simultaneously — is achievable only with assistance and
/// deliberately violates the bare bound whenever `C_E > C`.
#[derive(Debug, Clone, Serialize)]
pub struct ButterflyOuterRegion {
    pub bare: RateRegion,
    pub assist: RateRegion,
    pub cross_transfer_point: RateVector,
}

impl ButterflyOuterRegion {
    /// By how much the cross-transfer point exceeds the bare receiver bound
    /// (positive = genuine superadditivity witness).
    pub fn cross_transfer_excess(&self) -> Result<f64> {
        let pt = self.cross_transfer_point.as_array();
        let worst = self
            .bare
            .inequalities
            .iter()
            .map(|iq| {
                iq.coeffs
                    .iter()
                    .zip(pt.iter())
                    .map(|(c, r)| c * r)
                    .sum::<f64>()
                    - iq.bound
            })
            .fold(f64::NEG_INFINITY, f64::max);
        Ok(worst)
    }
}

pub fn butterfly_outer_region(d: usize, x: f64) -> Result<ButterflyOuterRegion> {
    let c = holevo_capacity_depolarizing(d, x)?;
    let ce = ea_capacity_depolarizing(d, x)?;
    let logd = (d as f64).log2();
    let components: Vec<String> = [
        "a_to_a", "a_to_b", "b_to_a", "b_to_b", "other_to_a", "other_to_b",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect();
    let bare = RateRegion {
        components: components.clone(),
        inequalities: vec![
            Inequality {
                label: "inflow_receiver_a".into(),
                coeffs: vec![1.0, 0.0, 1.0, 0.0, 1.0, 0.0],
                bound: c,
            },
            Inequality {
                label: "inflow_receiver_b".into(),
                coeffs: vec![0.0, 1.0, 0.0, 1.0, 0.0, 1.0],
                bound: c,
            },
        ],
        extreme_points: vec![
            LabeledPoint {
                label: "direct_a_saturation".into(),
                values: vec![c, 0.0, 0.0, 0.0, 0.0, 0.0],
            },
            LabeledPoint {
                label: "direct_b_saturation".into(),
                values: vec![0.0, 0.0, 0.0, c, 0.0, 0.0],
            },
        ],
    };
    bare.validate()?;
    let assist = RateRegion {
        components: vec!["a_pair".into(), "b_pair".into()],
        inequalities: vec![
            Inequality {
                label: "a_pair_capacity".into(),
                coeffs: vec![1.0, 0.0],
                bound: logd,
            },
            Inequality {
                label: "b_pair_capacity".into(),
                coeffs: vec![0.0, 1.0],
                bound: logd,
            },
        ],
        extreme_points: vec![LabeledPoint {
            label: "both_saturated".into(),
            values: vec![logd, logd],
        }],
    };
    assist.validate()?;
    let cross = RateVector {
        a_to_b: ce,
        b_to_a: ce,
        ..RateVector::ZERO
    };
    Ok(ButterflyOuterRegion {
        bare,
        assist,
        cross_transfer_point: cross,
    })
}
