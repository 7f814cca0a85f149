//! Pauli strings and in-place Pauli-rotation kernels.
//!
//! A Pauli string acts on basis states as
//! `P|b> = i^{n_y} (-1)^{|b & z|} |b ^ x>`, where `x` marks X/Y positions and
//! `z` marks Y/Z positions. Rotations `exp(-i theta P)` are applied directly on
//! dense matrices from these masks, without materializing `P`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{ComplexMatrix, C64, I, ONE, ZERO};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Pauli {
    I,
    X,
    Y,
    Z,
}

impl Pauli {
    pub fn from_char(c: char) -> Option<Self> {
        match c.to_ascii_uppercase() {
            'I' => Some(Pauli::I),
            'X' => Some(Pauli::X),
            'Y' => Some(Pauli::Y),
            'Z' => Some(Pauli::Z),
            _ => None,
        }
    }

    pub fn as_char(self) -> char {
        match self {
            Pauli::I => 'I',
            Pauli::X => 'X',
            Pauli::Y => 'Y',
            Pauli::Z => 'Z',
        }
    }

    pub fn matrix(self) -> ComplexMatrix {
        let rows = match self {
            Pauli::I => [[ONE, ZERO], [ZERO, ONE]],
            Pauli::X => [[ZERO, ONE], [ONE, ZERO]],
            Pauli::Y => [[ZERO, -I], [I, ZERO]],
            Pauli::Z => [[ONE, ZERO], [ZERO, -ONE]],
        };
        ComplexMatrix::from_rows(&[rows[0].to_vec(), rows[1].to_vec()])
    }
}

/// Bit masks of a Pauli string over `n` qubits (qubit 0 is the MSB).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct PauliMasks {
    pub x: usize,
    pub z: usize,
    pub n_y: u32,
}

impl PauliMasks {
    /// `(-1)^{|b & z|}`
    #[inline]
    fn sign(&self, b: usize) -> f64 {
        if (b & self.z).count_ones() & 1 == 0 {
            1.0
        } else {
            -1.0
        }
    }

    #[inline]
    fn i_power(&self) -> C64 {
        match self.n_y % 4 {
            0 => ONE,
            1 => I,
            2 => -ONE,
            _ => -I,
        }
    }

    /// Amplitude with which `P` maps `|b>` to `|b ^ x>`.
    #[inline]
    pub fn phase(&self, b: usize) -> C64 {
        self.i_power() * self.sign(b)
    }

    /// `rho <- R rho R^dagger` with `R = exp(-i theta P)`.
    pub fn conjugate_rotation(&self, m: &mut ComplexMatrix, theta: f64) {
        if theta == 0.0 {
            return;
        }
        let dim = m.dim();
        let data = m.as_mut_slice();
        if self.x == 0 {
            // diagonal: R = diag(exp(-i theta s_b))
            let up = C64::from_polar(1.0, -2.0 * theta);
            let down = up.conj();
            for j in 0..dim {
                let sj = self.sign(j);
                let col = &mut data[j * dim..(j + 1) * dim];
                for (i, v) in col.iter_mut().enumerate() {
                    let si = self.sign(i);
                    if si != sj {
                        *v *= if si > 0.0 { up } else { down };
                    }
                }
            }
            return;
        }
        let (c, s) = (theta.cos(), theta.sin());
        let cc = c * c;
        let ss = s * s;
        let ics = I * (c * s);
        let ip = self.i_power();
        let ip2 = ip * ip;
        let x = self.x;
        for j in 0..dim {
            let jp = j ^ x;
            if jp < j {
                continue;
            }
            let (sj, sjp) = (self.sign(j), self.sign(jp));
            for i in 0..dim {
                let ip_ = i ^ x;
                if ip_ < i {
                    continue;
                }
                let (si, sip) = (self.sign(i), self.sign(ip_));
                let a = data[i + j * dim];
                let b = data[ip_ + j * dim];
                let cq = data[i + jp * dim];
                let d = data[ip_ + jp * dim];
                // new[a,b] = c^2 r[a,b] + s^2 ph(a^x) ph(b) r[a^x,b^x]
                //           + ics (r[a,b^x] ph(b) - ph(a^x) r[a^x,b])
                // with ph(k) = ip * sign(k)
                let ph_i = ip * si;
                let ph_ip = ip * sip;
                let ph_j = ip * sj;
                let ph_jp = ip * sjp;
                let na = a * cc + d * (ip2 * sip * sj * ss) + ics * (cq * ph_j - ph_ip * b);
                let nb = b * cc + cq * (ip2 * si * sj * ss) + ics * (d * ph_j - ph_i * a);
                let nc = cq * cc + b * (ip2 * sip * sjp * ss) + ics * (a * ph_jp - ph_ip * d);
                let nd = d * cc + a * (ip2 * si * sjp * ss) + ics * (b * ph_jp - ph_i * cq);
                data[i + j * dim] = na;
                data[ip_ + j * dim] = nb;
                data[i + jp * dim] = nc;
                data[ip_ + jp * dim] = nd;
            }
        }
    }

    /// `m <- R m` with `R = exp(-i theta P) = cos(theta) I - i sin(theta) P`.
    pub fn left_rotation(&self, m: &mut ComplexMatrix, theta: f64) {
        if theta == 0.0 {
            return;
        }
        let dim = m.dim();
        let (c, s) = (theta.cos(), theta.sin());
        let data = m.as_mut_slice();
        for col in data.chunks_mut(dim) {
            self.rotate_vector(col, c, s);
        }
    }

    /// `psi <- R psi`
    pub fn rotate_state(&self, psi: &mut [C64], theta: f64) {
        self.rotate_vector(psi, theta.cos(), theta.sin());
    }

    fn rotate_vector(&self, v: &mut [C64], c: f64, s: f64) {
        let mis = -I * s;
        if self.x == 0 {
            for (b, a) in v.iter_mut().enumerate() {
                *a *= C64::new(c, 0.0) + mis * self.sign(b);
            }
            return;
        }
        for a in 0..v.len() {
            let ap = a ^ self.x;
            if ap < a {
                continue;
            }
            let (va, vap) = (v[a], v[ap]);
            // (P v)_a = ph(a^x) v[a^x]
            v[a] = va * c + mis * self.phase(ap) * vap;
            v[ap] = vap * c + mis * self.phase(a) * va;
        }
    }

    /// Dense matrix of the bare string (unit coefficient).
    pub fn to_matrix(&self, dim: usize) -> ComplexMatrix {
        let mut m = ComplexMatrix::zeros(dim);
        for b in 0..dim {
            m[(b ^ self.x, b)] = self.phase(b);
        }
        m
    }
}

/// Tensor product of single-qubit Paulis with a real coefficient.
#[derive(Clone, Debug, PartialEq)]
pub struct PauliString {
    letters: Vec<Pauli>,
    pub coeff: f64,
}

impl PauliString {
    pub fn new(letters: Vec<Pauli>, coeff: f64) -> Result<Self> {
        if letters.is_empty() {
            return Err(Error::InvalidParameter("empty Pauli string".into()));
        }
        if !coeff.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "coefficient {coeff} is not finite"
            )));
        }
        Ok(Self { letters, coeff })
    }

    pub fn parse(s: &str, coeff: f64) -> Result<Self> {
        let letters = s
            .chars()
            .map(|c| {
                Pauli::from_char(c)
                    .ok_or_else(|| Error::Parse(format!("invalid Pauli letter {c:?} in {s:?}")))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(letters, coeff)
    }

    /// Identity everywhere except the listed `(qubit, letter)` pairs.
    pub fn from_sparse(n_qubits: usize, ops: &[(usize, Pauli)], coeff: f64) -> Result<Self> {
        let mut letters = vec![Pauli::I; n_qubits];
        for &(q, p) in ops {
            if q >= n_qubits {
                return Err(Error::QubitOutOfRange { index: q, n_qubits });
            }
            letters[q] = p;
        }
        Self::new(letters, coeff)
    }

    pub fn n_qubits(&self) -> usize {
        self.letters.len()
    }

    pub fn letters(&self) -> &[Pauli] {
        &self.letters
    }

    pub fn label(&self) -> String {
        self.letters.iter().map(|p| p.as_char()).collect()
    }

    pub fn is_identity(&self) -> bool {
        self.letters.iter().all(|&p| p == Pauli::I)
    }

    pub fn masks(&self) -> PauliMasks {
        let n = self.letters.len();
        let mut m = PauliMasks { x: 0, z: 0, n_y: 0 };
        for (q, &p) in self.letters.iter().enumerate() {
            let bit = 1usize << (n - 1 - q);
            match p {
                Pauli::I => {}
                Pauli::X => m.x |= bit,
                Pauli::Z => m.z |= bit,
                Pauli::Y => {
                    m.x |= bit;
                    m.z |= bit;
                    m.n_y += 1;
                }
            }
        }
        m
    }

    /// Two Pauli strings commute iff they differ (both non-identity) on an
    /// even number of sites.
    pub fn commutes_with(&self, other: &Self) -> bool {
        let anti = self
            .letters
            .iter()
            .zip(&other.letters)
            .filter(|(a, b)| **a != Pauli::I && **b != Pauli::I && a != b)
            .count();
        anti % 2 == 0
    }

    /// Dense matrix `coeff * P`.
    pub fn to_matrix(&self) -> ComplexMatrix {
        let dim = 1usize << self.n_qubits();
        self.masks().to_matrix(dim).scale(C64::new(self.coeff, 0.0))
    }
}

impl fmt::Display for PauliString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}*{}", self.coeff, self.label())
    }
}

impl FromStr for PauliString {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Self::parse(s, 1.0)
    }
}
