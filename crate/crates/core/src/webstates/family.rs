use std::collections::BTreeMap;

use num_complex::Complex;
use rand::{Rng, SeedableRng};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::bitstring::BitString;
use crate::error::{Error, Result};
use crate::linalg::Unitary2;
use crate::statevec::{PureState, QubitBasis};

/// Phase table `θ(s)` over the even-parity strings of length `n_parties`.
#[derive(Debug, Clone, PartialEq)]
pub struct WebStateSpec {
    n_parties: usize,
    phases: BTreeMap<BitString, f64>,
}

impl WebStateSpec {
    pub fn new(n_parties: usize, phases: BTreeMap<BitString, f64>) -> Result<Self> {
        if n_parties < 3 {
            return Err(Error::InvalidParameter(format!(
                "web states need at least 3 parties, got {n_parties}"
            )));
        }
        if n_parties > 20 {
            return Err(Error::RegisterTooLarge {
                n_qubits: n_parties,
                limit: 20,
            });
        }
        for (s, theta) in &phases {
            if s.len() != n_parties || s.parity() != 0 {
                return Err(Error::InvalidParameter(format!(
                    "phase key {s} is not an even string of length {n_parties}"
                )));
            }
            if !theta.is_finite() {
                return Err(Error::InvalidParameter(format!("phase for {s} is {theta}")));
            }
        }
        let expected = 1usize << (n_parties - 1);
        if phases.len() != expected {
            return Err(Error::InvalidParameter(format!(
                "{} phase entries, expected {expected}",
                phases.len()
            )));
        }
        Ok(Self { n_parties, phases })
    }

    /// All phases zero.
    pub fn uniform(n_parties: usize) -> Result<Self> {
        Self::new(
            n_parties,
            BitString::even(n_parties).map(|s| (s, 0.0)).collect(),
        )
    }

    /// Phases in lexicographic order of the even strings.
    pub fn from_phase_list(n_parties: usize, phases: &[f64]) -> Result<Self> {
        if !(3..=20).contains(&n_parties) {
            return Self::new(n_parties, BTreeMap::new());
        }
        let keys: Vec<BitString> = BitString::even(n_parties).collect();
        if keys.len() != phases.len() {
            return Err(Error::InvalidParameter(format!(
                "{} phases, expected {}",
                phases.len(),
                keys.len()
            )));
        }
        Self::new(n_parties, keys.into_iter().zip(phases.iter().copied()).collect())
    }

    pub fn n_parties(&self) -> usize {
        self.n_parties
    }

    pub fn phases(&self) -> &BTreeMap<BitString, f64> {
        &self.phases
    }

    pub fn phase(&self, s: &BitString) -> Option<f64> {
        self.phases.get(s).copied()
    }

    pub fn with_phase(mut self, s: &BitString, theta: f64) -> Result<Self> {
        match self.phases.get_mut(s) {
            Some(slot) => {
                *slot = theta;
                Ok(self)
            }
            None => Err(Error::InvalidParameter(format!("{s} is not a key of this table"))),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("phase table serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: SpecFile = serde_json::from_str(text)?;
        Self::try_from(file)
    }
}

#[derive(Serialize, Deserialize)]
struct SpecFile {
    n: usize,
    phases: BTreeMap<String, f64>,
}

impl TryFrom<SpecFile> for WebStateSpec {
    type Error = Error;

    fn try_from(file: SpecFile) -> Result<Self> {
        let phases = file
            .phases
            .into_iter()
            .map(|(k, v)| Ok((k.parse::<BitString>()?, v)))
            .collect::<Result<BTreeMap<_, _>>>()?;
        Self::new(file.n, phases)
    }
}

impl Serialize for WebStateSpec {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        SpecFile {
            n: self.n_parties,
            phases: self.phases.iter().map(|(k, v)| (k.to_string(), *v)).collect(),
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for WebStateSpec {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let file = SpecFile::deserialize(deserializer)?;
        Self::try_from(file).map_err(serde::de::Error::custom)
    }
}

/// One measurement basis per party.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PreparationBases {
    bases: Vec<QubitBasis>,
    context_free: bool,
}

impl PreparationBases {
    pub fn context_free(bases: Vec<QubitBasis>) -> Self {
        Self {
            bases,
            context_free: true,
        }
    }

    pub fn uniform(n_parties: usize, basis: QubitBasis) -> Self {
        Self::context_free(vec![basis; n_parties])
    }

    /// Bases for states of the phase family, stored in the computational frame.
    pub fn computational(n_parties: usize) -> Self {
        Self::uniform(n_parties, QubitBasis::computational())
    }

    /// `{|+>, |->}` on every party: the preparation bases of the GHZ state.
    pub fn ghz(n_parties: usize) -> Self {
        Self::uniform(n_parties, QubitBasis::x_basis())
    }

    pub fn n_parties(&self) -> usize {
        self.bases.len()
    }

    pub fn is_context_free(&self) -> bool {
        self.context_free
    }

    pub fn basis(&self, party: usize) -> Result<&QubitBasis> {
        self.bases.get(party).ok_or(Error::QubitOutOfRange {
            index: party,
            n_qubits: self.bases.len(),
        })
    }

    pub fn bases(&self) -> &[QubitBasis] {
        &self.bases
    }

    /// The bases inherited by the remaining parties after `party` measures.
    pub fn without(&self, party: usize) -> Result<Self> {
        self.basis(party)?;
        let mut bases = self.bases.clone();
        bases.remove(party);
        Ok(Self {
            bases,
            context_free: self.context_free,
        })
    }
}

/// `(|0…0> + |1…1>)/√2`.
pub fn make_ghz(n_parties: usize) -> Result<PureState> {
    if n_parties < 2 {
        return Err(Error::InvalidParameter(format!("GHZ needs N ≥ 2, got {n_parties}")));
    }
    if n_parties > 24 {
        return Err(Error::RegisterTooLarge {
            n_qubits: n_parties,
            limit: 24,
        });
    }
    let dim = 1usize << n_parties;
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let mut amps = vec![Complex::new(0.0, 0.0); dim];
    amps[0] = Complex::new(h, 0.0);
    amps[dim - 1] = Complex::new(h, 0.0);
    PureState::new(n_parties, amps)
}

/// `2^{−(N−1)/2} Σ_{even s} e^{iθ(s)} |s>` in the computational frame.
pub fn make_web_state(spec: &WebStateSpec) -> PureState {
    let n = spec.n_parties();
    let weight = (1.0 / (1usize << (n - 1)) as f64).sqrt();
    let mut amps = vec![Complex::new(0.0, 0.0); 1 << n];
    for (s, theta) in spec.phases() {
        amps[s.to_index()] = Complex::from_polar(weight, *theta);
    }
    PureState::new(n, amps).expect("phase family is normalized")
}

/// The same superposition with `|s>` read as `⊗_k |b^{(k)}_{s_k}>`.
pub fn expand_in_bases(spec: &WebStateSpec, bases: &PreparationBases) -> Result<PureState> {
    let n = spec.n_parties();
    if bases.n_parties() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: bases.n_parties(),
        });
    }
    let frame: Vec<Unitary2> = bases
        .bases()
        .iter()
        .map(|b| {
            let (v0, v1) = (b.vector(0), b.vector(1));
            Unitary2::new([[v0[0], v1[0]], [v0[1], v1[1]]])
        })
        .collect();
    let mut state = make_web_state(spec);
    for (q, u) in frame.iter().enumerate() {
        state = state.apply_one_qubit(u, q)?;
    }
    Ok(state)
}

/// Uniform phases in `[0, 2π)` from a seeded generator.
pub fn random_web_state(n_parties: usize, seed: u64) -> Result<(WebStateSpec, PureState)> {
    if n_parties < 3 {
        return Err(Error::InvalidParameter(format!(
            "web states need at least 3 parties, got {n_parties}"
        )));
    }
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let phases: Vec<f64> = (0..1usize << (n_parties - 1))
        .map(|_| rng.gen_range(0.0..std::f64::consts::TAU))
        .collect();
    let spec = WebStateSpec::from_phase_list(n_parties, &phases)?;
    let state = make_web_state(&spec);
    Ok((spec, state))
}

/// `½[(|00> + |11>)|00> + (|00> − |11>)|11>]` on parties A, B, C, D.
pub fn make_contextual_example() -> PureState {
    let mut amps = vec![Complex::new(0.0, 0.0); 16];
    for (index, sign) in [(0b0000, 1.0), (0b1100, 1.0), (0b0011, 1.0), (0b1111, -1.0)] {
        amps[index] = Complex::new(0.5 * sign, 0.0);
    }
    PureState::new(4, amps).expect("contextual example is normalized")
}
