use num_complex::Complex64;
use rand::Rng;

use super::jacobi::hermitian_eigenvalues_doubled;
use super::{BitString, QStateError};

/// Pure states keep a full amplitude vector; 20 qubits is 16 MiB of
/// amplitudes and marks the practical ceiling for this toolkit.
pub const PURE_QUBIT_CAP: usize = 20;
/// Density matrices are quadratically bigger; 10 qubits is the ceiling.
pub const DENSITY_QUBIT_CAP: usize = 10;

const HERMITICITY_TOLERANCE: f64 = 1e-9;
const TRACE_TOLERANCE: f64 = 1e-9;
const POSITIVITY_TOLERANCE: f64 = 1e-9;
const NORM_TOLERANCE: f64 = 1e-9;
/// Probability vectors whose sum drifts from 1 by more than this are
/// rejected rather than silently renormalized.
const DISTRIBUTION_DRIFT_TOLERANCE: f64 = 1e-6;

/// The two single-qubit gates the protocol uses, selected by the verifier's
/// bit: `0` picks the Hadamard, `1` picks the square root of X.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LocalGate {
    Hadamard,
    SqrtX,
}

impl LocalGate {
    pub fn for_bit(b: u8) -> Result<Self, QStateError> {
        match b {
            0 => Ok(Self::Hadamard),
            1 => Ok(Self::SqrtX),
            other => Err(QStateError::BadBit(other)),
        }
    }

    pub fn matrix(self) -> [[Complex64; 2]; 2] {
        match self {
            Self::Hadamard => {
                let h = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
                [[h, h], [h, -h]]
            }
            Self::SqrtX => {
                let p = Complex64::new(0.5, 0.5);
                let m = Complex64::new(0.5, -0.5);
                [[p, m], [m, p]]
            }
        }
    }
}

fn check_finite(data: &[Complex64]) -> Result<(), QStateError> {
    for (i, z) in data.iter().enumerate() {
        if !z.re.is_finite() || !z.im.is_finite() {
            return Err(QStateError::NonFinite(i));
        }
    }
    Ok(())
}

fn qubit_stride(n: usize, position: usize) -> Result<usize, QStateError> {
    if position == 0 || position > n {
        return Err(QStateError::BadQubitPosition { got: position, n });
    }
    Ok(1usize << (n - position))
}

/// Iterate over all indices whose bit at `stride` is zero; each paired with
/// `index + stride` covers the full range once.
fn zero_bit_indices(dim: usize, stride: usize) -> impl Iterator<Item = usize> {
    (0..dim / (2 * stride))
        .flat_map(move |block| (0..stride).map(move |off| block * 2 * stride + off))
}

/// An n-qubit pure state as a dense amplitude vector, big-endian indexed.
#[derive(Clone, Debug, PartialEq)]
pub struct PureState {
    n: usize,
    amps: Vec<Complex64>,
}

impl PureState {
    pub fn new(n: usize, amps: Vec<Complex64>) -> Result<Self, QStateError> {
        if n == 0 || n > PURE_QUBIT_CAP {
            return Err(QStateError::QubitCountOutOfRange { got: n, cap: PURE_QUBIT_CAP });
        }
        if amps.len() != 1 << n {
            return Err(QStateError::BadDataLength { got: amps.len(), want: 1 << n });
        }
        check_finite(&amps)?;
        let norm2: f64 = amps.iter().map(|z| z.norm_sqr()).sum();
        if (norm2 - 1.0).abs() > NORM_TOLERANCE {
            return Err(QStateError::NotNormalized(norm2));
        }
        Ok(Self { n, amps })
    }

    /// `(|0..0> + |1..1>)/sqrt(2)`; for one qubit this is `|+>`.
    pub fn ghz(n: usize) -> Result<Self, QStateError> {
        if n == 0 || n > PURE_QUBIT_CAP {
            return Err(QStateError::QubitCountOutOfRange { got: n, cap: PURE_QUBIT_CAP });
        }
        let dim = 1usize << n;
        let mut amps = vec![Complex64::ZERO; dim];
        let a = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
        amps[0] = a;
        amps[dim - 1] = a;
        Ok(Self { n, amps })
    }

    /// Computational-basis state `|bits>`.
    pub fn basis(bits: &BitString) -> Result<Self, QStateError> {
        let n = bits.len();
        if n == 0 || n > PURE_QUBIT_CAP {
            return Err(QStateError::QubitCountOutOfRange { got: n, cap: PURE_QUBIT_CAP });
        }
        let mut amps = vec![Complex64::ZERO; 1 << n];
        amps[bits.to_index()] = Complex64::ONE;
        Ok(Self { n, amps })
    }

    pub fn num_qubits(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn inner(&self, other: &Self) -> Result<Complex64, QStateError> {
        if self.n != other.n {
            return Err(QStateError::DimensionMismatch(self.dim(), other.dim()));
        }
        Ok(self
            .amps
            .iter()
            .zip(&other.amps)
            .map(|(a, b)| a.conj() * b)
            .sum())
    }

    /// Apply a single-qubit gate at `position` (1-based, 1 = most
    /// significant).
    pub fn apply_gate(&mut self, gate: LocalGate, position: usize) -> Result<(), QStateError> {
        let stride = qubit_stride(self.n, position)?;
        let g = gate.matrix();
        for i0 in zero_bit_indices(self.dim(), stride) {
            let i1 = i0 + stride;
            let a = self.amps[i0];
            let b = self.amps[i1];
            self.amps[i0] = g[0][0] * a + g[0][1] * b;
            self.amps[i1] = g[1][0] * a + g[1][1] * b;
        }
        Ok(())
    }

    /// Probabilities of measuring 0 / 1 on one qubit.
    pub fn measure_probabilities(&self, position: usize) -> Result<[f64; 2], QStateError> {
        let stride = qubit_stride(self.n, position)?;
        let mut p1 = 0.0;
        for (k, amp) in self.amps.iter().enumerate() {
            if k & stride != 0 {
                p1 += amp.norm_sqr();
            }
        }
        let p1 = p1.clamp(0.0, 1.0);
        Ok([1.0 - p1, p1])
    }

    /// Project one qubit onto `outcome` and renormalize.
    pub fn collapse(&mut self, position: usize, outcome: u8) -> Result<(), QStateError> {
        let stride = qubit_stride(self.n, position)?;
        let keep_one = match outcome {
            0 => false,
            1 => true,
            other => return Err(QStateError::BadBit(other)),
        };
        let mut kept = 0.0;
        for (k, amp) in self.amps.iter_mut().enumerate() {
            if ((k & stride) != 0) == keep_one {
                kept += amp.norm_sqr();
            } else {
                *amp = Complex64::ZERO;
            }
        }
        if kept <= 0.0 {
            return Err(QStateError::ImpossibleOutcome(kept));
        }
        let scale = Complex64::new(1.0 / kept.sqrt(), 0.0);
        for amp in &mut self.amps {
            *amp *= scale;
        }
        Ok(())
    }

    pub fn outcome_distribution(&self) -> Vec<f64> {
        self.amps.iter().map(|z| z.norm_sqr()).collect()
    }
}

/// An n-qubit density matrix, row-major, big-endian indexed. Construction
/// validates Hermiticity, unit trace and positive semidefiniteness.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix {
    n: usize,
    entries: Vec<Complex64>,
}

impl DensityMatrix {
    pub fn new(n: usize, entries: Vec<Complex64>) -> Result<Self, QStateError> {
        let rho = Self::new_unvalidated(n, entries)?;
        rho.validate()?;
        Ok(rho)
    }

    /// Shape and finiteness checks only; used internally where the physical
    /// invariants hold by construction.
    fn new_unvalidated(n: usize, entries: Vec<Complex64>) -> Result<Self, QStateError> {
        if n == 0 || n > DENSITY_QUBIT_CAP {
            return Err(QStateError::QubitCountOutOfRange { got: n, cap: DENSITY_QUBIT_CAP });
        }
        let dim = 1usize << n;
        if entries.len() != dim * dim {
            return Err(QStateError::BadDataLength { got: entries.len(), want: dim * dim });
        }
        check_finite(&entries)?;
        Ok(Self { n, entries })
    }

    fn validate(&self) -> Result<(), QStateError> {
        let dim = self.dim();
        for r in 0..dim {
            for c in r..dim {
                let dev = (self.entries[r * dim + c] - self.entries[c * dim + r].conj()).norm();
                if dev > HERMITICITY_TOLERANCE {
                    return Err(QStateError::NotHermitian { row: r, col: c, dev });
                }
            }
        }
        let trace = self.trace();
        if (trace.re - 1.0).abs() > TRACE_TOLERANCE || trace.im.abs() > TRACE_TOLERANCE {
            return Err(QStateError::BadTrace(trace.re));
        }
        let eigs = hermitian_eigenvalues_doubled(&self.entries, dim)?;
        if let Some(&min) = eigs.first() {
            if min < -POSITIVITY_TOLERANCE {
                return Err(QStateError::NotPositive(min));
            }
        }
        Ok(())
    }

    pub fn from_pure(psi: &PureState) -> Result<Self, QStateError> {
        let n = psi.num_qubits();
        if n > DENSITY_QUBIT_CAP {
            return Err(QStateError::QubitCountOutOfRange { got: n, cap: DENSITY_QUBIT_CAP });
        }
        let dim = psi.dim();
        let mut entries = vec![Complex64::ZERO; dim * dim];
        for r in 0..dim {
            for c in 0..dim {
                entries[r * dim + c] = psi.amps[r] * psi.amps[c].conj();
            }
        }
        Self::new_unvalidated(n, entries)
    }

    pub fn ghz(n: usize) -> Result<Self, QStateError> {
        Self::from_pure(&PureState::ghz(n)?)
    }

    pub fn maximally_mixed(n: usize) -> Result<Self, QStateError> {
        if n == 0 || n > DENSITY_QUBIT_CAP {
            return Err(QStateError::QubitCountOutOfRange { got: n, cap: DENSITY_QUBIT_CAP });
        }
        let dim = 1usize << n;
        let mut entries = vec![Complex64::ZERO; dim * dim];
        let w = Complex64::new(1.0 / dim as f64, 0.0);
        for k in 0..dim {
            entries[k * dim + k] = w;
        }
        Self::new_unvalidated(n, entries)
    }

    /// `(1 - weight) * GHZ + weight * I/2^n`.
    pub fn depolarized_ghz(n: usize, weight: f64) -> Result<Self, QStateError> {
        if !(0.0..=1.0).contains(&weight) || !weight.is_finite() {
            return Err(QStateError::BadMixingWeight(weight));
        }
        let ghz = Self::ghz(n)?;
        let mixed = Self::maximally_mixed(n)?;
        let entries = ghz
            .entries
            .iter()
            .zip(&mixed.entries)
            .map(|(g, m)| g * (1.0 - weight) + m * weight)
            .collect();
        Self::new_unvalidated(n, entries)
    }

    pub fn num_qubits(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        1 << self.n
    }

    pub fn entry(&self, row: usize, col: usize) -> Complex64 {
        self.entries[row * self.dim() + col]
    }

    pub fn entries(&self) -> &[Complex64] {
        &self.entries
    }

    pub fn trace(&self) -> Complex64 {
        let dim = self.dim();
        (0..dim).map(|k| self.entries[k * dim + k]).sum()
    }

    /// Conjugate by a single-qubit gate on one qubit: `(G x I) rho (G x I)^+`.
    pub fn apply_gate(&mut self, gate: LocalGate, position: usize) -> Result<(), QStateError> {
        let stride = qubit_stride(self.n, position)?;
        let dim = self.dim();
        let g = gate.matrix();
        // Left factor on row pairs.
        for r0 in zero_bit_indices(dim, stride) {
            let r1 = r0 + stride;
            for c in 0..dim {
                let a = self.entries[r0 * dim + c];
                let b = self.entries[r1 * dim + c];
                self.entries[r0 * dim + c] = g[0][0] * a + g[0][1] * b;
                self.entries[r1 * dim + c] = g[1][0] * a + g[1][1] * b;
            }
        }
        // Right factor (conjugate transpose) on column pairs.
        for c0 in zero_bit_indices(dim, stride) {
            let c1 = c0 + stride;
            for r in 0..dim {
                let a = self.entries[r * dim + c0];
                let b = self.entries[r * dim + c1];
                self.entries[r * dim + c0] = a * g[0][0].conj() + b * g[0][1].conj();
                self.entries[r * dim + c1] = a * g[1][0].conj() + b * g[1][1].conj();
            }
        }
        Ok(())
    }

    /// Apply the protocol's gate pattern: for each qubit `i`, Hadamard when
    /// `x_i = 0` and sqrt(X) when `x_i = 1`.
    pub fn apply_local_gates(&self, x: &BitString) -> Result<Self, QStateError> {
        if x.len() != self.n {
            return Err(QStateError::BadBitLength { got: x.len(), want: self.n });
        }
        let mut out = self.clone();
        for pos in 1..=self.n {
            out.apply_gate(LocalGate::for_bit(x.bit(pos - 1))?, pos)?;
        }
        Ok(out)
    }

    /// Computational-basis outcome probabilities from the diagonal. Small
    /// numerical negatives are clamped; drift of the total beyond the fixed
    /// tolerance is an error.
    pub fn outcome_distribution(&self) -> Result<Vec<f64>, QStateError> {
        let dim = self.dim();
        let mut probs = Vec::with_capacity(dim);
        for k in 0..dim {
            let p = self.entries[k * dim + k].re;
            if p < -POSITIVITY_TOLERANCE {
                return Err(QStateError::NegativeProbability(p, k));
            }
            probs.push(p.max(0.0));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > DISTRIBUTION_DRIFT_TOLERANCE {
            return Err(QStateError::BadDistribution(total));
        }
        for p in &mut probs {
            *p /= total;
        }
        Ok(probs)
    }

    pub fn measure_probabilities(&self, position: usize) -> Result<[f64; 2], QStateError> {
        let stride = qubit_stride(self.n, position)?;
        let dim = self.dim();
        let mut p1 = 0.0;
        for k in 0..dim {
            if k & stride != 0 {
                p1 += self.entries[k * dim + k].re;
            }
        }
        let p1 = p1.clamp(0.0, 1.0);
        Ok([1.0 - p1, p1])
    }

    /// Project one qubit onto `outcome` and renormalize.
    pub fn collapse(&mut self, position: usize, outcome: u8) -> Result<(), QStateError> {
        let stride = qubit_stride(self.n, position)?;
        let keep_one = match outcome {
            0 => false,
            1 => true,
            other => return Err(QStateError::BadBit(other)),
        };
        let dim = self.dim();
        let mut kept = 0.0;
        for k in 0..dim {
            if ((k & stride) != 0) == keep_one {
                kept += self.entries[k * dim + k].re;
            }
        }
        if kept <= 0.0 {
            return Err(QStateError::ImpossibleOutcome(kept));
        }
        let scale = Complex64::new(1.0 / kept, 0.0);
        for r in 0..dim {
            for c in 0..dim {
                let keep =
                    ((r & stride) != 0) == keep_one && ((c & stride) != 0) == keep_one;
                let v = &mut self.entries[r * dim + c];
                *v = if keep { *v * scale } else { Complex64::ZERO };
            }
        }
        Ok(())
    }

    /// Hermitian spectrum (each eigenvalue once), ascending.
    pub fn eigenvalues(&self) -> Result<Vec<f64>, QStateError> {
        let doubled = hermitian_eigenvalues_doubled(&self.entries, self.dim())?;
        // The embedding doubles every eigenvalue; adjacent sorted entries
        // form the pairs.
        Ok(doubled.into_iter().step_by(2).collect())
    }
}

/// Trace distance `0.5 * ||a - b||_1` between density matrices.
pub fn trace_distance(a: &DensityMatrix, b: &DensityMatrix) -> Result<f64, QStateError> {
    if a.num_qubits() != b.num_qubits() {
        return Err(QStateError::DimensionMismatch(a.dim(), b.dim()));
    }
    let dim = a.dim();
    let diff: Vec<Complex64> = a
        .entries
        .iter()
        .zip(&b.entries)
        .map(|(x, y)| x - y)
        .collect();
    let eigs = hermitian_eigenvalues_doubled(&diff, dim)?;
    // Each eigenvalue of the difference appears twice in the embedding:
    // 0.5 * sum |lambda| = 0.25 * sum over the doubled spectrum.
    Ok(eigs.iter().map(|v| v.abs()).sum::<f64>() / 4.0)
}

/// Closed form for pure states: `sqrt(1 - |<a|b>|^2)`. Used as an
/// independent cross-check of [`trace_distance`].
pub fn pure_trace_distance(a: &PureState, b: &PureState) -> Result<f64, QStateError> {
    let overlap = a.inner(b)?.norm_sqr();
    Ok((1.0 - overlap).max(0.0).sqrt())
}

/// Map a uniform draw in `[0, 1)` to an index of the distribution by its
/// cumulative sums. Shared by seeded sampling and the run kernel so both
/// agree bit-for-bit.
pub fn index_from_uniform(dist: &[f64], u: f64) -> Result<usize, QStateError> {
    if dist.is_empty() {
        return Err(QStateError::EmptyDistribution);
    }
    let mut total = 0.0;
    for (i, &p) in dist.iter().enumerate() {
        if p < -POSITIVITY_TOLERANCE || !p.is_finite() {
            return Err(QStateError::NegativeProbability(p, i));
        }
        total += p.max(0.0);
    }
    if (total - 1.0).abs() > DISTRIBUTION_DRIFT_TOLERANCE {
        return Err(QStateError::BadDistribution(total));
    }
    let target = u * total;
    let mut acc = 0.0;
    let mut last_positive = 0;
    for (i, &p) in dist.iter().enumerate() {
        if p > 0.0 {
            acc += p;
            last_positive = i;
            if target < acc {
                return Ok(i);
            }
        }
    }
    Ok(last_positive)
}

/// Draw one index distributed per `dist` using the supplied generator.
pub fn sample_outcome<R: Rng + ?Sized>(dist: &[f64], rng: &mut R) -> Result<usize, QStateError> {
    let u: f64 = rng.random();
    index_from_uniform(dist, u)
}

/// A state description as carried in protocol messages and state files:
/// either representation, converted on demand.
#[derive(Clone, Debug, PartialEq)]
pub enum QuantumState {
    Pure(PureState),
    Density(DensityMatrix),
}

impl QuantumState {
    pub fn num_qubits(&self) -> usize {
        match self {
            Self::Pure(p) => p.num_qubits(),
            Self::Density(d) => d.num_qubits(),
        }
    }

    pub fn to_density(&self) -> Result<DensityMatrix, QStateError> {
        match self {
            Self::Pure(p) => DensityMatrix::from_pure(p),
            Self::Density(d) => Ok(d.clone()),
        }
    }

    /// Trace distance to the n-qubit GHZ state, using the pure closed form
    /// when available.
    pub fn distance_to_ghz(&self) -> Result<f64, QStateError> {
        match self {
            Self::Pure(p) => pure_trace_distance(p, &PureState::ghz(p.num_qubits())?),
            Self::Density(d) => trace_distance(d, &DensityMatrix::ghz(d.num_qubits())?),
        }
    }

    /// Apply the per-qubit gate pattern selected by `x` (qubit i gets the
    /// gate for bit i), staying in the cheaper pure representation when
    /// possible.
    pub fn apply_local_gates(&self, x: &BitString) -> Result<Self, QStateError> {
        if x.len() != self.num_qubits() {
            return Err(QStateError::DimensionMismatch(x.len(), self.num_qubits()));
        }
        match self {
            Self::Pure(p) => {
                let mut out = p.clone();
                for (i, bit) in x.bits().iter().enumerate() {
                    out.apply_gate(LocalGate::for_bit(*bit)?, i + 1)?;
                }
                Ok(Self::Pure(out))
            }
            Self::Density(d) => Ok(Self::Density(d.apply_local_gates(x)?)),
        }
    }

    /// Probability of each full computational-basis outcome, indexed by the
    /// big-endian outcome bitstring.
    pub fn outcome_distribution(&self) -> Result<Vec<f64>, QStateError> {
        match self {
            Self::Pure(p) => Ok(p.outcome_distribution()),
            Self::Density(d) => d.outcome_distribution(),
        }
    }
}

impl From<PureState> for QuantumState {
    fn from(p: PureState) -> Self {
        Self::Pure(p)
    }
}

impl From<DensityMatrix> for QuantumState {
    fn from(d: DensityMatrix) -> Self {
        Self::Density(d)
    }
}
