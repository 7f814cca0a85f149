//! Product-formula schedules and the unitaries they realize.
//!
//! A schedule lists `(group, fraction)` pairs; the step unitary is the matrix
//! product of `exp(-i H_group fraction dt)` in list order, so the *last* entry
//! acts on the state first.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hamiltonian::GroupedHamiltonian;
use crate::linalg::{matrix_exp_hermitian, ComplexMatrix, HermitianEigen, C64};
use crate::pauli::PauliMasks;
use crate::state::MAX_DENSE_QUBITS;

/// Which counting of circuit layers per step to use.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LayerConvention {
    /// 2 for first order, 4 for second order, `2 * 5^(p/2 - 1)` above.
    #[default]
    Worked,
    /// `2 * 5^(p/2 - 1)` for every even order (so 2 at second order), 2 at first order.
    Asymptotic,
}

/// Layer count of an order-`p` step under `convention`.
pub fn layer_count(p: usize, convention: LayerConvention) -> usize {
    match (p, convention) {
        (1, _) => 2,
        (2, LayerConvention::Worked) => 4,
        _ => 2 * 5usize.pow((p / 2).saturating_sub(1) as u32),
    }
}

/// The Suzuki weight `u_p = 1 / (4 - 4^{1/(p-1)})`.
pub fn suzuki_weight(p: usize) -> f64 {
    1.0 / (4.0 - 4f64.powf(1.0 / (p as f64 - 1.0)))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Schedule {
    pub order: usize,
    pub entries: Vec<(usize, f64)>,
    pub layers: usize,
}

fn validate_order(p: usize) -> Result<()> {
    if p == 0 || (p > 1 && p % 2 == 1) {
        return Err(Error::InvalidParameter(format!(
            "product-formula order must be 1 or even, got {p}"
        )));
    }
    Ok(())
}

fn raw_recursive(p: usize, n_groups: usize, s: f64, out: &mut Vec<(usize, f64)>) {
    match p {
        1 => out.extend((0..n_groups).map(|g| (g, s))),
        2 => {
            out.extend((0..n_groups).map(|g| (g, s / 2.0)));
            out.extend((0..n_groups).rev().map(|g| (g, s / 2.0)));
        }
        _ => {
            let u = suzuki_weight(p);
            for w in [u, u, 1.0 - 4.0 * u, u, u] {
                raw_recursive(p - 2, n_groups, w * s, out);
            }
        }
    }
}

/// Schedule entries before merging adjacent repeats of the same group.
pub fn raw_entries(p: usize, n_groups: usize) -> Result<Vec<(usize, f64)>> {
    validate_order(p)?;
    if n_groups == 0 {
        return Err(Error::InvalidParameter("need at least one group".into()));
    }
    let mut out = Vec::new();
    raw_recursive(p, n_groups, 1.0, &mut out);
    Ok(out)
}

pub fn build_schedule(p: usize, n_groups: usize) -> Result<Schedule> {
    build_schedule_with(p, n_groups, LayerConvention::default())
}

pub fn build_schedule_with(
    p: usize,
    n_groups: usize,
    convention: LayerConvention,
) -> Result<Schedule> {
    let mut entries: Vec<(usize, f64)> = Vec::new();
    for (g, c) in raw_entries(p, n_groups)? {
        match entries.last_mut() {
            Some((lg, lc)) if *lg == g => *lc += c,
            _ => entries.push((g, c)),
        }
    }
    Ok(Schedule {
        order: p,
        entries,
        layers: layer_count(p, convention),
    })
}

impl Schedule {
    /// Total fraction of `dt` assigned to each group.
    pub fn group_totals(&self, n_groups: usize) -> Vec<f64> {
        let mut t = vec![0.0; n_groups];
        for &(g, c) in &self.entries {
            t[g] += c;
        }
        t
    }

    fn check_groups(&self, h: &GroupedHamiltonian) -> Result<()> {
        if let Some(&(g, _)) = self.entries.iter().find(|(g, _)| *g >= h.n_groups()) {
            return Err(Error::InvalidParameter(format!(
                "schedule references group {g} but the Hamiltonian has {}",
                h.n_groups()
            )));
        }
        Ok(())
    }
}

/// Builds step unitaries from dense group exponentials, memoizing each
/// `exp(-i H_g theta)` on `(g, theta)`. Not shared across threads; create one
/// per worker.
#[derive(Debug)]
pub struct StepUnitaryBuilder<'a> {
    h: &'a GroupedHamiltonian,
    group_matrices: HashMap<usize, ComplexMatrix>,
    cache: HashMap<(usize, u64), ComplexMatrix>,
}

impl<'a> StepUnitaryBuilder<'a> {
    pub fn new(h: &'a GroupedHamiltonian) -> Self {
        Self {
            h,
            group_matrices: HashMap::new(),
            cache: HashMap::new(),
        }
    }

    pub fn group_exponential(&mut self, group: usize, theta: f64) -> Result<&ComplexMatrix> {
        let key = (group, theta.to_bits());
        if !self.cache.contains_key(&key) {
            if !self.group_matrices.contains_key(&group) {
                let m = self.h.group_matrix(group)?;
                self.group_matrices.insert(group, m);
            }
            let u = matrix_exp_hermitian(&self.group_matrices[&group], theta)?;
            self.cache.insert(key, u);
        }
        Ok(&self.cache[&key])
    }

    pub fn step(&mut self, schedule: &Schedule, dt: f64) -> Result<ComplexMatrix> {
        schedule.check_groups(self.h)?;
        let mut acc = ComplexMatrix::identity(self.h.dim());
        for &(g, c) in &schedule.entries {
            let u = self.group_exponential(g, c * dt)?;
            acc = acc.matmul(u);
        }
        Ok(acc)
    }

    pub fn cached_factors(&self) -> usize {
        self.cache.len()
    }
}

/// One product-formula step `PF_p(dt)` as a dense unitary.
pub fn step_unitary(h: &GroupedHamiltonian, schedule: &Schedule, dt: f64) -> Result<ComplexMatrix> {
    StepUnitaryBuilder::new(h).step(schedule, dt)
}

/// Eigendecomposition of the full Hamiltonian, reusable for any time.
#[derive(Clone, Debug)]
pub struct ExactPropagator {
    eig: HermitianEigen,
}

impl ExactPropagator {
    pub fn new(h: &GroupedHamiltonian) -> Result<Self> {
        if h.n_qubits() > MAX_DENSE_QUBITS {
            return Err(Error::SizeLimit {
                what: "exact propagation",
                n_qubits: h.n_qubits(),
                max: MAX_DENSE_QUBITS,
            });
        }
        Ok(Self {
            eig: HermitianEigen::new(&h.to_matrix()?)?,
        })
    }

    /// `exp(-i H t)`
    pub fn unitary(&self, t: f64) -> ComplexMatrix {
        self.eig.map(|w| C64::from_polar(1.0, -w * t))
    }

    pub fn energies(&self) -> &[f64] {
        &self.eig.values
    }
}

pub fn exact_unitary(h: &GroupedHamiltonian, t: f64) -> Result<ComplexMatrix> {
    Ok(ExactPropagator::new(h)?.unitary(t))
}

/// `M_p = U^dagger PF - I`
pub fn multiplicative_error_operator(u: &ComplexMatrix, pf: &ComplexMatrix) -> Result<ComplexMatrix> {
    if u.dim() != pf.dim() {
        return Err(Error::DimensionMismatch {
            expected: u.dim(),
            found: pf.dim(),
        });
    }
    let mut m = u.adjoint().matmul(pf);
    for i in 0..m.dim() {
        m[(i, i)] -= C64::new(1.0, 0.0);
    }
    Ok(m)
}

/// A product-formula step expanded into individual Pauli rotations, listed
/// in the order they act on a state.
#[derive(Clone, Debug)]
pub struct StepKernel {
    n_qubits: usize,
    rotations: Vec<(PauliMasks, f64)>,
}

impl StepKernel {
    pub fn new(h: &GroupedHamiltonian, schedule: &Schedule, dt: f64) -> Result<Self> {
        schedule.check_groups(h)?;
        let mut rotations = Vec::new();
        for &(g, c) in schedule.entries.iter().rev() {
            for p in &h.groups()[g] {
                // the identity contributes only a global phase
                if !p.is_identity() {
                    rotations.push((p.masks(), p.coeff * c * dt));
                }
            }
        }
        Ok(Self {
            n_qubits: h.n_qubits(),
            rotations,
        })
    }

    pub fn n_rotations(&self) -> usize {
        self.rotations.len()
    }

    /// `rho <- PF rho PF^dagger`
    pub fn apply(&self, rho: &mut ComplexMatrix) {
        for (m, theta) in &self.rotations {
            m.conjugate_rotation(rho, *theta);
        }
    }

    /// `O <- PF^dagger O PF`
    pub fn apply_heisenberg(&self, o: &mut ComplexMatrix) {
        for (m, theta) in self.rotations.iter().rev() {
            m.conjugate_rotation(o, -theta);
        }
    }

    /// `psi <- PF psi`
    pub fn apply_state(&self, psi: &mut [C64]) {
        for (m, theta) in &self.rotations {
            m.rotate_state(psi, *theta);
        }
    }

    /// Dense unitary of the step, up to the global phase of identity terms.
    pub fn unitary(&self) -> ComplexMatrix {
        let mut u = ComplexMatrix::identity(1 << self.n_qubits);
        for (m, theta) in &self.rotations {
            m.left_rotation(&mut u, *theta);
        }
        u
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hamiltonian::build_tfi;

    #[test]
    fn first_order_schedule() {
        let s = build_schedule(1, 2).unwrap();
        assert_eq!(s.entries, vec![(0, 1.0), (1, 1.0)]);
        assert_eq!(s.layers, 2);
    }

    #[test]
    fn second_order_schedule() {
        assert_eq!(
            raw_entries(2, 2).unwrap(),
            vec![(0, 0.5), (1, 0.5), (1, 0.5), (0, 0.5)]
        );
        let s = build_schedule(2, 2).unwrap();
        assert_eq!(s.entries, vec![(0, 0.5), (1, 1.0), (0, 0.5)]);
        let groups: Vec<usize> = s.entries.iter().map(|e| e.0).collect();
        assert!(groups.iter().eq(groups.iter().rev()));
    }

    #[test]
    fn suzuki_weights_close() {
        let u = suzuki_weight(4);
        assert!((u - 0.414_490_771_794_375_7).abs() < 1e-12);
        for p in [4, 6] {
            for total in build_schedule(p, 3).unwrap().group_totals(3) {
                assert!((total - 1.0).abs() < 1e-12);
            }
        }
        assert!(build_schedule(3, 2).is_err());
        assert!(build_schedule(0, 2).is_err());
    }

    #[test]
    fn layer_counts() {
        assert_eq!(layer_count(1, LayerConvention::Worked), 2);
        assert_eq!(layer_count(2, LayerConvention::Worked), 4);
        assert_eq!(layer_count(4, LayerConvention::Worked), 10);
        assert_eq!(layer_count(2, LayerConvention::Asymptotic), 2);
        assert_eq!(layer_count(6, LayerConvention::Asymptotic), 50);
    }

    #[test]
    fn kernel_matches_dense_step() {
        let h = build_tfi(3, 2.0, 1.0, true).unwrap();
        for p in [1, 2, 4] {
            let s = build_schedule(p, 2).unwrap();
            let dense = step_unitary(&h, &s, 0.13).unwrap();
            let kernel = StepKernel::new(&h, &s, 0.13).unwrap().unitary();
            assert!(dense.max_abs_diff(&kernel) < 1e-12, "p={p}");
        }
    }

    #[test]
    fn memo_reuses_factors() {
        let h = build_tfi(3, 2.0, 1.0, false).unwrap();
        let s = build_schedule(2, 2).unwrap();
        let mut b = StepUnitaryBuilder::new(&h);
        b.step(&s, 0.1).unwrap();
        b.step(&s, 0.1).unwrap();
        assert_eq!(b.cached_factors(), 2);
    }

    #[test]
    fn error_operator_vanishes_for_equal_inputs() {
        let h = build_tfi(2, 2.0, 1.0, false).unwrap();
        let u = exact_unitary(&h, 0.4).unwrap();
        let m = multiplicative_error_operator(&u, &u).unwrap();
        assert!(m.max_abs() < 1e-12);
        assert!(multiplicative_error_operator(&u, &ComplexMatrix::identity(2)).is_err());
    }
}
