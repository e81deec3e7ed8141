use serde::Serialize;

use super::message::Message;
use super::Role;

/// Whether a transcript keeps the messages themselves or only counters.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TranscriptMode {
    #[default]
    Counting,
    Full,
}

#[derive(Debug, Clone, Default)]
pub struct ProtocolTranscript {
    mode: TranscriptMode,
    messages: Vec<Message>,
    message_count: u64,
    round_trips: u64,
    bytes_alice: u64,
    bytes_bob: u64,
    last_sender: Option<Role>,
}

/// Counter snapshot suitable for reports.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub struct TranscriptStats {
    pub messages: u64,
    pub round_trips: u64,
    pub bytes_alice: u64,
    pub bytes_bob: u64,
}

impl TranscriptStats {
    pub fn bytes_total(&self) -> u64 {
        self.bytes_alice + self.bytes_bob
    }

    pub fn merge(&mut self, other: &TranscriptStats) {
        self.messages += other.messages;
        self.round_trips += other.round_trips;
        self.bytes_alice += other.bytes_alice;
        self.bytes_bob += other.bytes_bob;
    }
}

impl ProtocolTranscript {
    pub fn new(mode: TranscriptMode) -> Self {
        ProtocolTranscript {
            mode,
            ..Default::default()
        }
    }

    /// A round trip completes each time Alice answers a message from Bob.
    pub(crate) fn record(&mut self, msg: &Message) {
        let len = msg.wire_len() as u64;
        match msg.sender {
            Role::Alice => {
                self.bytes_alice += len;
                if self.last_sender == Some(Role::Bob) {
                    self.round_trips += 1;
                }
            }
            Role::Bob => self.bytes_bob += len,
        }
        self.last_sender = Some(msg.sender);
        self.message_count += 1;
        if self.mode == TranscriptMode::Full {
            self.messages.push(msg.clone());
        }
    }

    pub fn messages(&self) -> &[Message] {
        &self.messages
    }

    pub fn round_trips(&self) -> u64 {
        self.round_trips
    }

    pub fn bytes_sent(&self, role: Role) -> u64 {
        match role {
            Role::Alice => self.bytes_alice,
            Role::Bob => self.bytes_bob,
        }
    }

    pub fn message_count(&self) -> u64 {
        self.message_count
    }

    pub fn stats(&self) -> TranscriptStats {
        TranscriptStats {
            messages: self.message_count,
            round_trips: self.round_trips,
            bytes_alice: self.bytes_alice,
            bytes_bob: self.bytes_bob,
        }
    }
}
