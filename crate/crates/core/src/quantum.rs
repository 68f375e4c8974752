//! Two-qubit pure states and equatorial projective measurements.
//!
//! Amplitudes are stored big-endian with object 1 first: index `2*x1 + x2`
//! holds the coefficient of |x1 x2⟩.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::{BellError, Result, INPUT_NORM_TOL};

/// Per-amplitude tolerance for ray equality.
pub const RAY_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwoQubitState {
    amp: [Complex64; 4],
}

impl TwoQubitState {
    /// Wraps raw amplitudes. Normalization is checked where probabilities
    /// are taken, not here, so unnormalized vectors can be represented.
    pub fn new(amp: [Complex64; 4]) -> Self {
        TwoQubitState { amp }
    }

    pub fn from_real(amp: [f64; 4]) -> Self {
        TwoQubitState {
            amp: amp.map(|a| Complex64::new(a, 0.0)),
        }
    }

    /// Computational basis state |x1 x2⟩.
    pub fn basis_state(x1: usize, x2: usize) -> Self {
        assert!(x1 < 2 && x2 < 2, "qubit values are 0 or 1");
        let mut amp = [Complex64::new(0.0, 0.0); 4];
        amp[2 * x1 + x2] = Complex64::new(1.0, 0.0);
        TwoQubitState { amp }
    }

    pub fn amplitudes(&self) -> &[Complex64; 4] {
        &self.amp
    }

    pub fn amplitude(&self, x1: usize, x2: usize) -> Complex64 {
        self.amp[2 * x1 + x2]
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amp.iter().map(|a| a.norm_sqr()).sum()
    }

    pub fn is_normalized(&self, tol: f64) -> bool {
        (self.norm_sqr() - 1.0).abs() <= tol
    }

    fn ensure_normalized(&self) -> Result<()> {
        let n = self.norm_sqr();
        if !n.is_finite() || (n - 1.0).abs() > INPUT_NORM_TOL {
            return Err(BellError::InvalidState(format!(
                "state norm squared is {n}, expected 1"
            )));
        }
        Ok(())
    }

    /// ⟨u ⊗ v|ψ⟩ for real single-qubit kets `u`, `v`.
    fn overlap_product(&self, u: [f64; 2], v: [f64; 2]) -> Complex64 {
        let mut acc = Complex64::new(0.0, 0.0);
        for i in 0..2 {
            for j in 0..2 {
                acc += self.amp[2 * i + j] * (u[i] * v[j]);
            }
        }
        acc
    }
}

/// (|00⟩ + |11⟩)/√2.
pub fn make_phi_plus() -> TwoQubitState {
    TwoQubitState::from_real([FRAC_1_SQRT_2, 0.0, 0.0, FRAC_1_SQRT_2])
}

/// Orthonormal real basis at equatorial angle `theta`:
/// ket0 = (cos θ/2, sin θ/2), ket1 = (sin θ/2, −cos θ/2).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeasurementBasis {
    pub theta: f64,
    pub ket0: [f64; 2],
    pub ket1: [f64; 2],
    pub label: String,
}

impl MeasurementBasis {
    pub fn ket(&self, outcome: usize) -> [f64; 2] {
        match outcome {
            0 => self.ket0,
            1 => self.ket1,
            _ => panic!("outcome must be 0 or 1, got {outcome}"),
        }
    }
}

pub fn basis_from_angle(theta: f64, label: impl Into<String>) -> Result<MeasurementBasis> {
    if !theta.is_finite() {
        return Err(BellError::InvalidArgument(format!(
            "basis angle must be finite, got {theta}"
        )));
    }
    let (s, c) = (theta / 2.0).sin_cos();
    Ok(MeasurementBasis {
        theta,
        ket0: [c, s],
        ket1: [s, -c],
        label: label.into(),
    })
}

/// The trine A (0), B (2π/3), C (−2π/3).
pub fn trine_bases() -> [MeasurementBasis; 3] {
    [
        basis_from_angle(0.0, "A").expect("finite"),
        basis_from_angle(2.0 * PI / 3.0, "B").expect("finite"),
        basis_from_angle(-2.0 * PI / 3.0, "C").expect("finite"),
    ]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JointOutcomeDistribution {
    /// `p[x][x']`: object 1 yields `x`, object 2 yields `x'`.
    pub p: [[f64; 2]; 2],
    pub settings: (String, String),
}

impl JointOutcomeDistribution {
    pub fn p_same(&self) -> f64 {
        self.p[0][0] + self.p[1][1]
    }

    pub fn total(&self) -> f64 {
        self.p.iter().flatten().sum()
    }
}

pub fn joint_distribution(
    state: &TwoQubitState,
    basis1: &MeasurementBasis,
    basis2: &MeasurementBasis,
) -> Result<JointOutcomeDistribution> {
    state.ensure_normalized()?;
    let mut p = [[0.0; 2]; 2];
    for (x, row) in p.iter_mut().enumerate() {
        for (xp, cell) in row.iter_mut().enumerate() {
            *cell = state
                .overlap_product(basis1.ket(x), basis2.ket(xp))
                .norm_sqr();
        }
    }
    Ok(JointOutcomeDistribution {
        p,
        settings: (basis1.label.clone(), basis2.label.clone()),
    })
}

/// Probability that the two objects give equal outcomes.
pub fn p_same(
    state: &TwoQubitState,
    basis1: &MeasurementBasis,
    basis2: &MeasurementBasis,
) -> Result<f64> {
    Ok(joint_distribution(state, basis1, basis2)?.p_same())
}

/// The three pairwise agreement probabilities and their sum.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CorrelationRecord {
    pub p_same_ab: f64,
    pub p_same_ac: f64,
    pub p_same_bc: f64,
    pub bell_sum: f64,
}

impl CorrelationRecord {
    pub fn new(p_same_ab: f64, p_same_ac: f64, p_same_bc: f64) -> Self {
        CorrelationRecord {
            p_same_ab,
            p_same_ac,
            p_same_bc,
            bell_sum: p_same_ab + p_same_ac + p_same_bc,
        }
    }

    pub fn pairs(&self) -> [f64; 3] {
        [self.p_same_ab, self.p_same_ac, self.p_same_bc]
    }
}

pub fn bell_record(
    state: &TwoQubitState,
    a: &MeasurementBasis,
    b: &MeasurementBasis,
    c: &MeasurementBasis,
) -> Result<CorrelationRecord> {
    Ok(CorrelationRecord::new(
        p_same(state, a, b)?,
        p_same(state, a, c)?,
        p_same(state, b, c)?,
    ))
}

/// Whether `state` equals (ket0⊗ket0 + ket1⊗ket1)/√2 as a ray.
///
/// The optimal global phase is the phase of the overlap with the target,
/// after which amplitudes are compared one by one.
pub fn verify_schmidt_invariance(state: &TwoQubitState, basis: &MeasurementBasis) -> bool {
    let mut target = [0.0; 4];
    for ket in [basis.ket0, basis.ket1] {
        for i in 0..2 {
            for j in 0..2 {
                target[2 * i + j] += ket[i] * ket[j] * FRAC_1_SQRT_2;
            }
        }
    }
    let overlap: Complex64 = state
        .amp
        .iter()
        .zip(target)
        .map(|(a, t)| a * t)
        .sum();
    let modulus = overlap.norm();
    if modulus < RAY_TOL {
        return false;
    }
    let phase = overlap / modulus;
    state
        .amp
        .iter()
        .zip(target)
        .all(|(a, t)| (a - phase * t).norm() <= RAY_TOL)
}
