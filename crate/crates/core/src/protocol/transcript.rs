use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::statevec::QubitBasis;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scope {
    Broadcast,
    Directed(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MessageTag {
    BellResult,
    PrepOutcome,
    Ack,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassicalMessage {
    pub seq: u64,
    pub sender: usize,
    pub scope: Scope,
    pub tag: MessageTag,
    pub payload: Vec<u8>,
}

impl ClassicalMessage {
    pub fn visible_to(&self, party: usize) -> bool {
        match self.scope {
            Scope::Broadcast => true,
            Scope::Directed(to) => to == party || self.sender == party,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MeasuredBasis {
    Bell,
    Single(QubitBasis),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeasurementRecord {
    pub party: usize,
    pub basis: MeasuredBasis,
    pub outcome: Vec<u8>,
    pub probability: f64,
}

/// Ordered classical messages and measurement records of one run.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Transcript {
    pub messages: Vec<ClassicalMessage>,
    pub measurement_records: Vec<MeasurementRecord>,
    pub seed: u64,
}

impl Transcript {
    pub fn new(seed: u64) -> Self {
        Self {
            seed,
            ..Self::default()
        }
    }

    /// Appends a message with the next sequence number.
    pub fn post(&mut self, sender: usize, scope: Scope, tag: MessageTag, payload: Vec<u8>) -> u64 {
        let seq = self.messages.last().map_or(0, |m| m.seq + 1);
        self.messages.push(ClassicalMessage {
            seq,
            sender,
            scope,
            tag,
            payload,
        });
        seq
    }

    /// Messages visible to `party`, delivered by sender id and then sequence
    /// number.
    pub fn deliver_to(&self, party: usize) -> Vec<&ClassicalMessage> {
        let mut inbox: Vec<&ClassicalMessage> = self.messages.iter().filter(|m| m.visible_to(party)).collect();
        inbox.sort_by_key(|m| (m.sender, m.seq));
        inbox
    }

    pub fn sequence_is_increasing(&self) -> bool {
        self.messages.windows(2).all(|w| w[0].seq < w[1].seq)
    }

    pub fn count(&self, tag: MessageTag) -> usize {
        self.messages.iter().filter(|m| m.tag == tag).count()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("transcript serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}
