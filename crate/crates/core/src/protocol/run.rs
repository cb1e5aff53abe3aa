use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::statevec::PureState;
use crate::webstates::{make_ghz, make_web_state, PreparationBases, WebStateSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    Publisher,
    Retriever,
    Assistant,
    Idle,
}

/// A party and the logical qubits it holds. Qubit `k < N` is party `k`'s
/// share of the network state; qubit `N` is the published qubit.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Party {
    pub id: usize,
    pub local_qubits: Vec<usize>,
    pub role: Role,
}

/// The network state, either by its phase table or by amplitudes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SharedState {
    Spec(WebStateSpec),
    Explicit(PureState),
}

impl SharedState {
    pub fn n_parties(&self) -> usize {
        match self {
            Self::Spec(s) => s.n_parties(),
            Self::Explicit(p) => p.n_qubits(),
        }
    }

    pub fn state(&self) -> PureState {
        match self {
            Self::Spec(s) => make_web_state(s),
            Self::Explicit(p) => p.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProtocolRun {
    pub n_parties: usize,
    pub shared: SharedState,
    /// Measurement basis of each assistant; entries for the publisher and
    /// retriever are not used.
    pub bases: PreparationBases,
    pub chi: PureState,
    pub publisher: usize,
    pub retriever: usize,
    pub cooperating: BTreeSet<usize>,
    pub seed: u64,
}

impl ProtocolRun {
    pub fn new(
        shared: SharedState,
        bases: PreparationBases,
        chi: PureState,
        publisher: usize,
        retriever: usize,
        cooperating: BTreeSet<usize>,
        seed: u64,
    ) -> Result<Self> {
        let run = Self {
            n_parties: shared.n_parties(),
            shared,
            bases,
            chi,
            publisher,
            retriever,
            cooperating,
            seed,
        };
        run.validate()?;
        Ok(run)
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.n_parties;
        if self.shared.n_parties() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: self.shared.n_parties(),
            });
        }
        if n < 2 {
            return Err(Error::InvalidParameter(format!("need at least 2 parties, got {n}")));
        }
        if n > 14 {
            return Err(Error::RegisterTooLarge { n_qubits: n + 1, limit: 15 });
        }
        if self.bases.n_parties() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: self.bases.n_parties(),
            });
        }
        if self.chi.n_qubits() != 1 {
            return Err(Error::DimensionMismatch {
                expected: 1,
                found: self.chi.n_qubits(),
            });
        }
        for p in [self.publisher, self.retriever] {
            if p >= n {
                return Err(Error::QubitOutOfRange { index: p, n_qubits: n });
            }
        }
        if self.publisher == self.retriever {
            return Err(Error::InvalidParameter("publisher and retriever coincide".into()));
        }
        if let Some(&p) = self
            .cooperating
            .iter()
            .find(|&&p| p >= n || p == self.publisher || p == self.retriever)
        {
            return Err(Error::InvalidParameter(format!("party {p} cannot be an assistant")));
        }
        Ok(())
    }

    /// GHZ network with `{|+>, |->}` bases and every assistant cooperating.
    pub fn ghz(n_parties: usize, chi: PureState, publisher: usize, retriever: usize, seed: u64) -> Result<Self> {
        let shared = SharedState::Explicit(make_ghz(n_parties)?);
        let mut run = Self::new(
            shared,
            PreparationBases::ghz(n_parties),
            chi,
            publisher,
            retriever,
            BTreeSet::new(),
            seed,
        )?;
        run.cooperating = run.assistants().into_iter().collect();
        Ok(run)
    }

    /// Phase-family network with computational bases and every assistant
    /// cooperating.
    pub fn web(spec: WebStateSpec, chi: PureState, publisher: usize, retriever: usize, seed: u64) -> Result<Self> {
        let n = spec.n_parties();
        Self::explicit(SharedState::Spec(spec), PreparationBases::computational(n), chi, publisher, retriever, seed)
    }

    /// Any network state with the given bases and every assistant cooperating.
    pub fn explicit(
        shared: SharedState,
        bases: PreparationBases,
        chi: PureState,
        publisher: usize,
        retriever: usize,
        seed: u64,
    ) -> Result<Self> {
        let mut run = Self::new(shared, bases, chi, publisher, retriever, BTreeSet::new(), seed)?;
        run.cooperating = run.assistants().into_iter().collect();
        Ok(run)
    }

    /// Parties other than the publisher and retriever, ascending.
    pub fn assistants(&self) -> Vec<usize> {
        (0..self.n_parties)
            .filter(|&p| p != self.publisher && p != self.retriever)
            .collect()
    }

    pub fn fully_cooperative(&self) -> bool {
        self.assistants().iter().all(|p| self.cooperating.contains(p))
    }

    pub fn parties(&self) -> Vec<Party> {
        (0..self.n_parties)
            .map(|id| {
                let mut local_qubits = vec![id];
                let role = if id == self.publisher {
                    local_qubits.push(self.n_parties);
                    Role::Publisher
                } else if id == self.retriever {
                    Role::Retriever
                } else if self.cooperating.contains(&id) {
                    Role::Assistant
                } else {
                    Role::Idle
                };
                Party { id, local_qubits, role }
            })
            .collect()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("run serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let run: Self = serde_json::from_str(text)?;
        run.validate()?;
        Ok(run)
    }
}
