//! Grouped Pauli-sum Hamiltonians: builders for the benchmark models and a
//! JSON file format for externally generated ones.

use std::fs;
use std::path::Path;

use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::linalg::{ComplexMatrix, HermitianEigen, C64};
use crate::pauli::{Pauli, PauliString};
use crate::state::{DensityMatrix, MAX_DENSE_QUBITS};

/// `H = sum_l H_l`, each group a list of mutually commuting Pauli strings.
#[derive(Clone, Debug, PartialEq)]
pub struct GroupedHamiltonian {
    n_qubits: usize,
    groups: Vec<Vec<PauliString>>,
    pub label: String,
}

impl GroupedHamiltonian {
    /// Validates string lengths and, for up to 12 qubits, that every group
    /// commutes internally.
    pub fn new(
        n_qubits: usize,
        groups: Vec<Vec<PauliString>>,
        label: impl Into<String>,
    ) -> Result<Self> {
        if n_qubits == 0 {
            return Err(Error::InvalidParameter("Hamiltonian needs at least one qubit".into()));
        }
        for (g, terms) in groups.iter().enumerate() {
            for (t, p) in terms.iter().enumerate() {
                if p.n_qubits() != n_qubits {
                    return Err(Error::LetterLengthMismatch {
                        group: g,
                        term: t,
                        pauli: p.label(),
                        expected: n_qubits,
                        found: p.n_qubits(),
                    });
                }
            }
        }
        let h = Self {
            n_qubits,
            groups,
            label: label.into(),
        };
        if n_qubits <= MAX_DENSE_QUBITS {
            h.check_commuting_groups()?;
        }
        Ok(h)
    }

    fn check_commuting_groups(&self) -> Result<()> {
        for (g, terms) in self.groups.iter().enumerate() {
            for (a, pa) in terms.iter().enumerate() {
                for pb in &terms[a + 1..] {
                    if !pa.commutes_with(pb) {
                        return Err(Error::NonCommutingGroup {
                            group: g,
                            a: pa.label(),
                            b: pb.label(),
                        });
                    }
                }
            }
        }
        Ok(())
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn dim(&self) -> usize {
        1 << self.n_qubits
    }

    pub fn groups(&self) -> &[Vec<PauliString>] {
        &self.groups
    }

    pub fn n_groups(&self) -> usize {
        self.groups.len()
    }

    pub fn n_terms(&self) -> usize {
        self.groups.iter().map(Vec::len).sum()
    }

    /// Returns a copy with every coefficient multiplied by `s`.
    pub fn scaled(&self, s: f64) -> Self {
        let groups = self
            .groups
            .iter()
            .map(|g| {
                g.iter()
                    .map(|p| {
                        let mut p = p.clone();
                        p.coeff *= s;
                        p
                    })
                    .collect()
            })
            .collect();
        Self {
            n_qubits: self.n_qubits,
            groups,
            label: self.label.clone(),
        }
    }

    fn ensure_dense(&self, what: &'static str) -> Result<()> {
        if self.n_qubits > MAX_DENSE_QUBITS {
            return Err(Error::SizeLimit {
                what,
                n_qubits: self.n_qubits,
                max: MAX_DENSE_QUBITS,
            });
        }
        Ok(())
    }

    /// Dense matrix of a single group.
    pub fn group_matrix(&self, group: usize) -> Result<ComplexMatrix> {
        self.ensure_dense("dense group matrix")?;
        let terms = self.groups.get(group).ok_or_else(|| {
            Error::InvalidParameter(format!("group index {group} out of range"))
        })?;
        Ok(sum_terms(self.dim(), terms))
    }

    /// Dense matrix of the full Hamiltonian.
    pub fn to_matrix(&self) -> Result<ComplexMatrix> {
        self.ensure_dense("dense Hamiltonian")?;
        let all: Vec<PauliString> = self.groups.iter().flatten().cloned().collect();
        Ok(sum_terms(self.dim(), &all))
    }

    pub fn to_json(&self) -> Value {
        let groups: Vec<Value> = self
            .groups
            .iter()
            .map(|g| {
                Value::Array(
                    g.iter()
                        .map(|p| json!({ "pauli": p.label(), "coeff": p.coeff }))
                        .collect(),
                )
            })
            .collect();
        json!({ "n_qubits": self.n_qubits, "label": self.label, "groups": groups })
    }

    pub fn from_json(v: &Value) -> Result<Self> {
        let obj = v
            .as_object()
            .ok_or_else(|| Error::Parse("top level must be an object".into()))?;
        let n_qubits = obj
            .get("n_qubits")
            .and_then(Value::as_u64)
            .ok_or_else(|| Error::Parse("missing or invalid `n_qubits`".into()))?
            as usize;
        let label = match obj.get("label") {
            None => String::new(),
            Some(Value::String(s)) => s.clone(),
            Some(_) => return Err(Error::Parse("`label` must be a string".into())),
        };
        let raw_groups = obj
            .get("groups")
            .and_then(Value::as_array)
            .ok_or_else(|| Error::Parse("missing or invalid `groups`".into()))?;
        let mut groups = Vec::with_capacity(raw_groups.len());
        for (g, raw) in raw_groups.iter().enumerate() {
            let raw = raw
                .as_array()
                .ok_or_else(|| Error::Parse(format!("group {g} must be an array")))?;
            let mut terms = Vec::with_capacity(raw.len());
            for (t, term) in raw.iter().enumerate() {
                let pauli = term
                    .get("pauli")
                    .and_then(Value::as_str)
                    .ok_or_else(|| Error::Parse(format!("group {g}, term {t}: missing `pauli`")))?;
                let coeff = parse_coeff(term.get("coeff"), g, t)?;
                if pauli.chars().count() != n_qubits {
                    return Err(Error::LetterLengthMismatch {
                        group: g,
                        term: t,
                        pauli: pauli.to_string(),
                        expected: n_qubits,
                        found: pauli.chars().count(),
                    });
                }
                terms.push(PauliString::parse(pauli, coeff)?);
            }
            groups.push(terms);
        }
        Self::new(n_qubits, groups, label)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        fs::write(path, serde_json::to_string_pretty(&self.to_json())?)?;
        Ok(())
    }
}

fn sum_terms(dim: usize, terms: &[PauliString]) -> ComplexMatrix {
    let mut m = ComplexMatrix::zeros(dim);
    for p in terms {
        let masks = p.masks();
        let c = C64::new(p.coeff, 0.0);
        for b in 0..dim {
            m[(b ^ masks.x, b)] += c * masks.phase(b);
        }
    }
    m
}

fn parse_coeff(v: Option<&Value>, group: usize, term: usize) -> Result<f64> {
    match v {
        Some(Value::Number(n)) => n
            .as_f64()
            .ok_or_else(|| Error::Parse(format!("group {group}, term {term}: bad coefficient"))),
        Some(Value::String(s)) => {
            let s = s.trim();
            if let Ok(x) = s.parse::<f64>() {
                if x.is_finite() {
                    return Ok(x);
                }
            }
            if s.contains(['i', 'j']) && s.parse::<f64>().is_err() {
                return Err(Error::NonRealCoefficient {
                    group,
                    term,
                    value: s.to_string(),
                });
            }
            Err(Error::Parse(format!(
                "group {group}, term {term}: cannot parse coefficient {s:?}"
            )))
        }
        Some(Value::Object(o)) if o.contains_key("im") || o.contains_key("imag") => {
            Err(Error::NonRealCoefficient {
                group,
                term,
                value: Value::Object(o.clone()).to_string(),
            })
        }
        _ => Err(Error::Parse(format!(
            "group {group}, term {term}: missing or invalid `coeff`"
        ))),
    }
}

pub fn load_hamiltonian(path: impl AsRef<Path>) -> Result<GroupedHamiltonian> {
    let text = fs::read_to_string(path)?;
    let v: Value = serde_json::from_str(&text).map_err(|e| Error::Parse(e.to_string()))?;
    GroupedHamiltonian::from_json(&v)
}

/// Transverse-field Ising chain `J sum X_j X_{j+1} + h sum Z_j`, grouped as
/// `[H_X, H_Z]`. For `n = 2` the wrap-around bond coincides with the open bond
/// and is not added twice.
pub fn build_tfi(n: usize, j: f64, h: f64, periodic: bool) -> Result<GroupedHamiltonian> {
    if n < 2 {
        return Err(Error::InvalidParameter(format!("TFI needs n >= 2, got {n}")));
    }
    let mut xx = Vec::new();
    if j != 0.0 {
        for q in 0..n - 1 {
            xx.push(PauliString::from_sparse(n, &[(q, Pauli::X), (q + 1, Pauli::X)], j)?);
        }
        if periodic && n >= 3 {
            xx.push(PauliString::from_sparse(n, &[(n - 1, Pauli::X), (0, Pauli::X)], j)?);
        }
    }
    let mut z = Vec::new();
    if h != 0.0 {
        for q in 0..n {
            z.push(PauliString::from_sparse(n, &[(q, Pauli::Z)], h)?);
        }
    }
    let bc = if periodic { "periodic" } else { "open" };
    GroupedHamiltonian::new(n, vec![xx, z], format!("tfi(n={n},J={j},h={h},{bc})"))
}

/// Heisenberg chain with `1/|k-j|^alpha` couplings in the XYZ grouping
/// `[XX terms, YY terms, ZZ terms + fields]`.
pub fn build_powerlaw_heisenberg(n: usize, alpha: f64, fields: &[f64]) -> Result<GroupedHamiltonian> {
    if n < 2 {
        return Err(Error::InvalidParameter(format!("power-law model needs n >= 2, got {n}")));
    }
    if !(alpha > 0.0) || !alpha.is_finite() {
        return Err(Error::InvalidParameter(format!("alpha must be positive, got {alpha}")));
    }
    if fields.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: fields.len(),
        });
    }
    let mut groups = vec![Vec::new(), Vec::new(), Vec::new()];
    for a in 0..n {
        for b in a + 1..n {
            let c = 1.0 / ((b - a) as f64).powf(alpha);
            for (g, p) in [Pauli::X, Pauli::Y, Pauli::Z].into_iter().enumerate() {
                groups[g].push(PauliString::from_sparse(n, &[(a, p), (b, p)], c)?);
            }
        }
    }
    for (q, &hq) in fields.iter().enumerate() {
        if hq != 0.0 {
            groups[2].push(PauliString::from_sparse(n, &[(q, Pauli::Z)], hq)?);
        }
    }
    GroupedHamiltonian::new(n, groups, format!("powerlaw(n={n},alpha={alpha})"))
}

/// Jordan-Wigner qubit of site `site` and spin `down` (false = up).
pub fn hubbard_mode(site: usize, down: bool) -> usize {
    2 * site + down as usize
}

/// `a_p^dagger a_q + a_q^dagger a_p = (X_p Z..Z X_q + Y_p Z..Z Y_q) / 2`
fn jw_hopping(n_modes: usize, p: usize, q: usize, v: f64) -> Result<Vec<PauliString>> {
    let (lo, hi) = if p < q { (p, q) } else { (q, p) };
    let mut out = Vec::with_capacity(2);
    for letter in [Pauli::X, Pauli::Y] {
        let mut ops: Vec<(usize, Pauli)> = (lo + 1..hi).map(|m| (m, Pauli::Z)).collect();
        ops.push((lo, letter));
        ops.push((hi, letter));
        out.push(PauliString::from_sparse(n_modes, &ops, v / 2.0)?);
    }
    Ok(out)
}

/// One-dimensional Fermi-Hubbard chain with open boundaries, grouped as
/// `[even bonds, odd bonds, interaction]`.
pub fn build_fermi_hubbard(n_sites: usize, v: f64, u: f64) -> Result<GroupedHamiltonian> {
    if n_sites < 2 {
        return Err(Error::InvalidParameter(format!(
            "Fermi-Hubbard needs at least 2 sites, got {n_sites}"
        )));
    }
    let n = 2 * n_sites;
    let mut even = Vec::new();
    let mut odd = Vec::new();
    if v != 0.0 {
        for s in 0..n_sites - 1 {
            let target = if s % 2 == 0 { &mut even } else { &mut odd };
            for down in [false, true] {
                target.extend(jw_hopping(n, hubbard_mode(s, down), hubbard_mode(s + 1, down), v)?);
            }
        }
    }
    let mut int = Vec::new();
    if u != 0.0 {
        let q = u / 4.0;
        for s in 0..n_sites {
            let (a, b) = (hubbard_mode(s, false), hubbard_mode(s, true));
            int.push(PauliString::from_sparse(n, &[], q)?);
            int.push(PauliString::from_sparse(n, &[(a, Pauli::Z)], -q)?);
            int.push(PauliString::from_sparse(n, &[(b, Pauli::Z)], -q)?);
            int.push(PauliString::from_sparse(n, &[(a, Pauli::Z), (b, Pauli::Z)], q)?);
        }
    }
    GroupedHamiltonian::new(
        n,
        vec![even, odd, int],
        format!("hubbard(sites={n_sites},v={v},u={u})"),
    )
}

/// Dense Jordan-Wigner annihilation operator `a_p = Z_0..Z_{p-1} |0><1|_p`.
pub fn jw_annihilation(n_modes: usize, p: usize) -> Result<ComplexMatrix> {
    if p >= n_modes {
        return Err(Error::QubitOutOfRange {
            index: p,
            n_qubits: n_modes,
        });
    }
    let dim = 1usize << n_modes;
    let bit = 1usize << (n_modes - 1 - p);
    let higher = !((bit << 1).wrapping_sub(1)) & (dim - 1);
    let mut m = ComplexMatrix::zeros(dim);
    for b in 0..dim {
        if b & bit != 0 {
            let sign = if (b & higher).count_ones() % 2 == 0 { 1.0 } else { -1.0 };
            m[(b ^ bit, b)] = C64::new(sign, 0.0);
        }
    }
    Ok(m)
}

/// Lowest eigenpair of the dense Hamiltonian.
pub fn ground_state(h: &GroupedHamiltonian) -> Result<(f64, DensityMatrix)> {
    let m = h.to_matrix()?;
    let eig = HermitianEigen::new(&m)?;
    let e0 = eig.values[0];
    let psi = eig.vector(0);
    let hpsi = m.apply(&psi);
    let residual = hpsi
        .iter()
        .zip(&psi)
        .map(|(a, b)| (a - b * e0).norm_sqr())
        .sum::<f64>()
        .sqrt();
    if residual > 1e-8 {
        return Err(Error::Numerical(format!(
            "ground-state residual {residual:.3e} exceeds 1e-8"
        )));
    }
    Ok((e0, DensityMatrix::from_pure(&psi)?))
}
