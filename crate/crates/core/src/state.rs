//! Density matrices, partial traces and entropies.
//!
//! Entropies are measured in bits, so that `D(rho || I/2^n) = n - S(rho)`.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::linalg::{eigenvalues_hermitian, ComplexMatrix, HermitianEigen, C64, ONE, ZERO};

/// Tolerance used when validating trace, Hermiticity and positivity.
pub const STATE_TOL: f64 = 1e-10;

/// Eigenvalues are clamped to this floor before taking logarithms.
pub const LOG_FLOOR: f64 = 1e-14;

/// Largest register handled by dense routines.
pub const MAX_DENSE_QUBITS: usize = 12;

#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix {
    n_qubits: usize,
    matrix: ComplexMatrix,
}

impl DensityMatrix {
    /// Validates trace, Hermiticity and positivity.
    pub fn new(matrix: ComplexMatrix) -> Result<Self> {
        let rho = Self::from_matrix_unchecked(matrix)?;
        rho.validate()?;
        Ok(rho)
    }

    /// Only checks that the dimension is a power of two. Used on the hot path,
    /// where states are produced by trace-preserving maps of valid states.
    pub fn from_matrix_unchecked(matrix: ComplexMatrix) -> Result<Self> {
        let dim = matrix.dim();
        if dim == 0 || !dim.is_power_of_two() {
            return Err(Error::InvalidState(format!(
                "dimension {dim} is not a power of two"
            )));
        }
        Ok(Self {
            n_qubits: dim.trailing_zeros() as usize,
            matrix,
        })
    }

    pub fn validate(&self) -> Result<()> {
        let tr = self.matrix.trace();
        if (tr.re - 1.0).abs() > STATE_TOL || tr.im.abs() > STATE_TOL {
            return Err(Error::InvalidState(format!("trace is {tr}, expected 1")));
        }
        let dev = self.matrix.hermitian_deviation();
        if dev > STATE_TOL {
            return Err(Error::InvalidState(format!(
                "not Hermitian (deviation {dev:.3e})"
            )));
        }
        let min = self.min_eigenvalue()?;
        if min < -STATE_TOL {
            return Err(Error::InvalidState(format!(
                "negative eigenvalue {min:.3e}"
            )));
        }
        Ok(())
    }

    pub fn from_pure(psi: &[C64]) -> Result<Self> {
        let norm = psi.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
        if norm == 0.0 || !norm.is_finite() {
            return Err(Error::InvalidState("state vector has zero norm".into()));
        }
        let v: Vec<C64> = psi.iter().map(|x| x / norm).collect();
        Self::from_matrix_unchecked(ComplexMatrix::outer(&v))
    }

    /// Computational basis state `|index>`.
    pub fn basis(n_qubits: usize, index: usize) -> Result<Self> {
        let dim = 1usize << n_qubits;
        if index >= dim {
            return Err(Error::InvalidParameter(format!(
                "basis index {index} out of range for {n_qubits} qubits"
            )));
        }
        let mut m = ComplexMatrix::zeros(dim);
        m[(index, index)] = ONE;
        Self::from_matrix_unchecked(m)
    }

    /// `|0...0>`
    pub fn zero_state(n_qubits: usize) -> Self {
        Self::basis(n_qubits, 0).expect("index 0 always valid")
    }

    /// `|+...+>`
    pub fn plus_state(n_qubits: usize) -> Self {
        let dim = 1usize << n_qubits;
        let m = ComplexMatrix::from_fn(dim, |_, _| C64::new(1.0 / dim as f64, 0.0));
        Self::from_matrix_unchecked(m).expect("power-of-two dimension")
    }

    pub fn maximally_mixed(n_qubits: usize) -> Self {
        let dim = 1usize << n_qubits;
        let mut m = ComplexMatrix::zeros(dim);
        for i in 0..dim {
            m[(i, i)] = C64::new(1.0 / dim as f64, 0.0);
        }
        Self::from_matrix_unchecked(m).expect("power-of-two dimension")
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn dim(&self) -> usize {
        self.matrix.dim()
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> ComplexMatrix {
        self.matrix
    }

    pub fn matrix_mut(&mut self) -> &mut ComplexMatrix {
        &mut self.matrix
    }

    pub fn trace(&self) -> C64 {
        self.matrix.trace()
    }

    pub fn purity(&self) -> f64 {
        // Tr(rho^2) = sum |rho_ij|^2 for Hermitian rho
        self.matrix.as_slice().iter().map(|x| x.norm_sqr()).sum()
    }

    pub fn eigenvalues(&self) -> Result<Vec<f64>> {
        eigenvalues_hermitian(&self.matrix)
    }

    pub fn min_eigenvalue(&self) -> Result<f64> {
        Ok(self.eigenvalues()?.first().copied().unwrap_or(0.0))
    }

    pub fn kron(&self, other: &Self) -> Self {
        Self {
            n_qubits: self.n_qubits + other.n_qubits,
            matrix: self.matrix.kron(&other.matrix),
        }
    }

    /// Expectation value Tr(rho O), real part.
    pub fn expectation(&self, o: &ComplexMatrix) -> f64 {
        trace_product(&self.matrix, o).re
    }
}

/// Tr(A B) without forming the product.
pub fn trace_product(a: &ComplexMatrix, b: &ComplexMatrix) -> C64 {
    assert_eq!(a.dim(), b.dim());
    let n = a.dim();
    let mut acc = ZERO;
    for i in 0..n {
        for j in 0..n {
            acc += a[(i, j)] * b[(j, i)];
        }
    }
    acc
}

fn check_qubits(n_qubits: usize, qubits: &[usize]) -> Result<()> {
    let mut seen = vec![false; n_qubits];
    for &q in qubits {
        if q >= n_qubits {
            return Err(Error::QubitOutOfRange { index: q, n_qubits });
        }
        if seen[q] {
            return Err(Error::DuplicateQubit(q));
        }
        seen[q] = true;
    }
    Ok(())
}

/// Traces out `traced` and returns the reduced state on the remaining qubits,
/// which keep their relative order.
pub fn partial_trace(rho: &DensityMatrix, traced: &[usize]) -> Result<DensityMatrix> {
    let n = rho.n_qubits();
    check_qubits(n, traced)?;
    let kept: Vec<usize> = (0..n).filter(|q| !traced.contains(q)).collect();
    let traced_sorted: Vec<usize> = (0..n).filter(|q| traced.contains(q)).collect();
    let bit = |q: usize| 1usize << (n - 1 - q);

    // Scatter tables: reduced index -> full-register bit pattern.
    let expand = |qs: &[usize]| -> Vec<usize> {
        let k = qs.len();
        (0..1usize << k)
            .map(|idx| {
                qs.iter()
                    .enumerate()
                    .filter(|(pos, _)| idx >> (k - 1 - pos) & 1 == 1)
                    .map(|(_, &q)| bit(q))
                    .sum()
            })
            .collect()
    };
    let keep_map = expand(&kept);
    let trace_map = expand(&traced_sorted);

    let m = rho.matrix();
    let dk = keep_map.len();
    let mut out = ComplexMatrix::zeros(dk);
    for (j, &kj) in keep_map.iter().enumerate() {
        for (i, &ki) in keep_map.iter().enumerate() {
            let mut acc = ZERO;
            for &t in &trace_map {
                acc += m[(ki | t, kj | t)];
            }
            out[(i, j)] = acc;
        }
    }
    DensityMatrix::from_matrix_unchecked(out)
}

fn entropy_of_spectrum(values: &[f64]) -> f64 {
    values
        .iter()
        .map(|&p| {
            let p = p.max(0.0);
            if p == 0.0 {
                0.0
            } else {
                -p * p.max(LOG_FLOOR).log2()
            }
        })
        .sum()
}

/// Von Neumann entropy in bits.
pub fn von_neumann_entropy(rho: &DensityMatrix) -> Result<f64> {
    let s = entropy_of_spectrum(&rho.eigenvalues()?);
    Ok(s.clamp(0.0, rho.n_qubits() as f64))
}

/// Relative entropy `D(rho || sigma)` in bits, or `+inf` when the support of
/// `rho` leaks outside the support of `sigma`.
pub fn relative_entropy(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<f64> {
    match relative_entropy_checked(rho, sigma) {
        Err(Error::SupportMismatch { .. }) => Ok(f64::INFINITY),
        other => other,
    }
}

/// Like [`relative_entropy`] but reports a support violation as an error.
pub fn relative_entropy_checked(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<f64> {
    if rho.dim() != sigma.dim() {
        return Err(Error::DimensionMismatch {
            expected: rho.dim(),
            found: sigma.dim(),
        });
    }
    let neg_s = -entropy_of_spectrum(&rho.eigenvalues()?);
    let eig = HermitianEigen::new(sigma.matrix())?;
    let mut cross = 0.0;
    let mut leaked = 0.0;
    for (k, &lam) in eig.values.iter().enumerate() {
        let v = eig.vector(k);
        let w = rho.matrix().apply(&v);
        let weight: f64 = v.iter().zip(&w).map(|(a, b)| (a.conj() * b).re).sum();
        if lam <= LOG_FLOOR {
            leaked += weight.max(0.0);
        }
        cross += weight * lam.max(LOG_FLOOR).log2();
    }
    if leaked > 1e-9 {
        return Err(Error::SupportMismatch { weight: leaked });
    }
    Ok((neg_s - cross).max(0.0))
}

/// `D(rho || I/2^n) = n - S(rho)`
pub fn relative_entropy_to_mixed(rho: &DensityMatrix) -> Result<f64> {
    Ok((rho.n_qubits() as f64 - von_neumann_entropy(rho)?).max(0.0))
}

/// Haar-random pure state from a normalized vector of complex Gaussians.
pub fn haar_random_state(n_qubits: usize, seed: u64) -> Result<DensityMatrix> {
    if n_qubits == 0 {
        return Err(Error::InvalidParameter("need at least one qubit".into()));
    }
    if n_qubits > MAX_DENSE_QUBITS {
        return Err(Error::SizeLimit {
            what: "Haar sampling",
            n_qubits,
            max: MAX_DENSE_QUBITS,
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let psi: Vec<C64> = (0..1usize << n_qubits)
        .map(|_| {
            let re: f64 = StandardNormal.sample(&mut rng);
            let im: f64 = StandardNormal.sample(&mut rng);
            C64::new(re, im)
        })
        .collect();
    DensityMatrix::from_pure(&psi)
}

/// Random mixed state `G G^dagger / Tr` with a complex Gaussian `G`; used
/// by the property tests.
pub fn random_mixed_state(n_qubits: usize, seed: u64) -> Result<DensityMatrix> {
    let dim = 1usize << n_qubits;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let g = ComplexMatrix::from_fn(dim, |_, _| {
        let re: f64 = StandardNormal.sample(&mut rng);
        let im: f64 = StandardNormal.sample(&mut rng);
        C64::new(re, im)
    });
    let mut m = g.matmul(&g.adjoint());
    let tr = m.trace().re;
    m.scale_real_in_place(1.0 / tr);
    DensityMatrix::from_matrix_unchecked(m)
}
