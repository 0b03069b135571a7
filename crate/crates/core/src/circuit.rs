//! Gate sequences with gate-class noise, and the unmitigated noisy evolution.

use crate::channels::QuantumChannel;
use crate::error::{Error, Result};
use crate::linalg::{ComplexMatrix, DensityMatrix};
use crate::noise::{LocalNoise, NoiseModel};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum GateClass {
    Single,
    Two,
    /// No noise attached.
    Ideal,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Gate {
    pub unitary: ComplexMatrix,
    pub qubits: Vec<usize>,
    pub class: GateClass,
}

impl Gate {
    pub fn new(unitary: ComplexMatrix, qubits: Vec<usize>, class: GateClass) -> Result<Self> {
        if unitary.rows() != 1 << qubits.len() || !unitary.is_square() {
            return Err(Error::Dimension(format!(
                "{}x{} unitary on {} qubits",
                unitary.rows(),
                unitary.cols(),
                qubits.len()
            )));
        }
        if unitary.unitarity_deviation() > 1e-10 {
            return Err(Error::InvalidChannel("gate is not unitary".into()));
        }
        Ok(Self { unitary, qubits, class })
    }

    pub fn single(u: ComplexMatrix, q: usize) -> Result<Self> {
        Self::new(u, vec![q], GateClass::Single)
    }

    pub fn two(u: ComplexMatrix, q0: usize, q1: usize) -> Result<Self> {
        Self::new(u, vec![q0, q1], GateClass::Two)
    }
}

/// A register-level circuit: preparation, encoding steps and readout. Steps are the
/// unit that purification layers split on.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Circuit {
    pub num_qubits: usize,
    pub prep: Vec<Gate>,
    pub steps: Vec<Vec<Gate>>,
    pub readout: Vec<Gate>,
}

impl Circuit {
    pub fn new(num_qubits: usize) -> Self {
        Self { num_qubits, ..Default::default() }
    }

    pub fn gate_count(&self) -> usize {
        self.prep.len() + self.steps.iter().map(Vec::len).sum::<usize>() + self.readout.len()
    }

    pub fn validate(&self) -> Result<()> {
        for g in self.all_gates() {
            if let Some(&q) = g.qubits.iter().find(|&&q| q >= self.num_qubits) {
                return Err(Error::Dimension(format!("gate on qubit {q} in a {}-qubit circuit", self.num_qubits)));
            }
        }
        Ok(())
    }

    pub fn all_gates(&self) -> impl Iterator<Item = &Gate> {
        self.prep.iter().chain(self.steps.iter().flatten()).chain(self.readout.iter())
    }

    /// Splits the steps into `layers` contiguous blocks whose sizes differ by at
    /// most one, larger blocks first. Preparation joins the first block and
    /// readout the last.
    pub fn blocks(&self, layers: usize) -> Result<Vec<Vec<&Gate>>> {
        if layers == 0 {
            return Err(Error::InvalidOrder { min: 1, got: 0 });
        }
        let sizes = block_sizes(self.steps.len(), layers);
        let mut out = Vec::with_capacity(layers);
        let mut start = 0;
        for (l, &size) in sizes.iter().enumerate() {
            let mut block: Vec<&Gate> = Vec::new();
            if l == 0 {
                block.extend(&self.prep);
            }
            block.extend(self.steps[start..start + size].iter().flatten());
            start += size;
            if l == layers - 1 {
                block.extend(&self.readout);
            }
            out.push(block);
        }
        Ok(out)
    }
}

pub fn block_sizes(steps: usize, layers: usize) -> Vec<usize> {
    let base = steps / layers;
    let rem = steps % layers;
    (0..layers).map(|l| base + usize::from(l < rem)).collect()
}

/// Column-stacking superoperator of `ρ ↦ UρU†`.
pub fn unitary_superop(u: &ComplexMatrix) -> ComplexMatrix {
    u.conj().kron(u)
}

/// Noise channels per gate class, tensored to the gate arity, cached.
#[derive(Clone, Debug)]
pub struct NoiseTable {
    single: LocalNoise,
    two: LocalNoise,
    cache: Vec<((GateClass, usize), Option<ComplexMatrix>)>,
}

impl NoiseTable {
    pub fn new(model: &NoiseModel) -> Result<Self> {
        model.single_qubit.validate()?;
        model.two_qubit.validate()?;
        Ok(Self { single: model.single_qubit, two: model.two_qubit, cache: Vec::new() })
    }

    fn noise_superop(&mut self, class: GateClass, arity: usize) -> Result<Option<ComplexMatrix>> {
        if let Some((_, s)) = self.cache.iter().find(|(k, _)| *k == (class, arity)) {
            return Ok(s.clone());
        }
        let local = match class {
            GateClass::Single => Some(self.single),
            GateClass::Two => Some(self.two),
            GateClass::Ideal => None,
        };
        let s = match local {
            Some(n) if !n.is_trivial() => Some(n.channel(arity)?.superoperator().clone()),
            _ => None,
        };
        self.cache.push(((class, arity), s.clone()));
        Ok(s)
    }

    /// Superoperator of the noisy gate, `noise ∘ U`, on the gate's own qubits.
    pub fn compile(&mut self, gate: &Gate) -> Result<ComplexMatrix> {
        let su = unitary_superop(&gate.unitary);
        Ok(match self.noise_superop(gate.class, gate.qubits.len())? {
            Some(sn) => &sn * &su,
            None => su,
        })
    }
}

/// A gate lowered to a superoperator on fixed qubits.
#[derive(Clone, Debug)]
pub struct CompiledGate {
    pub qubits: Vec<usize>,
    pub superop: ComplexMatrix,
}

impl CompiledGate {
    /// Applies the gate with its qubits shifted by `offset`.
    pub fn apply(&self, rho: &mut DensityMatrix, offset: usize) -> Result<()> {
        let qs: Vec<usize> = self.qubits.iter().map(|q| q + offset).collect();
        rho.apply_superoperator(&self.superop, &qs)
    }
}

pub fn compile_gates<'a>(
    gates: impl IntoIterator<Item = &'a Gate>,
    table: &mut NoiseTable,
) -> Result<Vec<CompiledGate>> {
    gates.into_iter().map(|g| Ok(CompiledGate { qubits: g.qubits.clone(), superop: table.compile(g)? })).collect()
}

/// Applies each gate followed by its class's noise.
pub fn build_noisy_target(circuit: &Circuit, probe: &DensityMatrix, noise: &NoiseModel) -> Result<DensityMatrix> {
    circuit.validate()?;
    if probe.num_qubits() != circuit.num_qubits {
        return Err(Error::Dimension(format!(
            "{}-qubit probe for a {}-qubit circuit",
            probe.num_qubits(),
            circuit.num_qubits
        )));
    }
    let mut table = NoiseTable::new(noise)?;
    let mut rho = probe.clone();
    for g in compile_gates(circuit.all_gates(), &mut table)? {
        g.apply(&mut rho, 0)?;
    }
    Ok(rho)
}

/// The whole noisy circuit as one channel (small registers only).
pub fn circuit_channel(circuit: &Circuit, noise: &NoiseModel) -> Result<QuantumChannel> {
    let n = circuit.num_qubits;
    let d = 1usize << n;
    let mut table = NoiseTable::new(noise)?;
    let gates = compile_gates(circuit.all_gates(), &mut table)?;
    // Push every matrix unit through and assemble the superoperator column by column.
    let mut s = ComplexMatrix::zeros(d * d, d * d);
    for j in 0..d {
        for i in 0..d {
            let mut x = DensityMatrix::new_unchecked(ComplexMatrix::unit(d, i, j))?;
            for g in &gates {
                g.apply(&mut x, 0)?;
            }
            let m = x.matrix();
            for b in 0..d {
                for a in 0..d {
                    s[(a + b * d, i + j * d)] = m[(a, b)];
                }
            }
        }
    }
    QuantumChannel::from_superoperator_unchecked(s)
}
