use std::collections::VecDeque;
use std::time::{Duration, Instant};

use super::message::{Item, Message};
use super::transcript::{ProtocolTranscript, TranscriptMode};
use super::{ProtocolError, ProtocolId, Role};

/// Ordered, reliable, bidirectional channel between Alice and Bob.
pub trait Transport: Send {
    fn send(&mut self, msg: Message) -> Result<(), ProtocolError>;
    /// Next message addressed to `receiver`.
    fn recv(&mut self, receiver: Role) -> Result<Message, ProtocolError>;
}

/// Two FIFO queues in memory; both parties run in the caller's thread.
#[derive(Debug, Default)]
pub struct InProcessTransport {
    to_alice: VecDeque<Message>,
    to_bob: VecDeque<Message>,
}

impl Transport for InProcessTransport {
    fn send(&mut self, msg: Message) -> Result<(), ProtocolError> {
        match msg.sender {
            Role::Alice => self.to_bob.push_back(msg),
            Role::Bob => self.to_alice.push_back(msg),
        }
        Ok(())
    }

    fn recv(&mut self, receiver: Role) -> Result<Message, ProtocolError> {
        let queue = match receiver {
            Role::Alice => &mut self.to_alice,
            Role::Bob => &mut self.to_bob,
        };
        queue
            .pop_front()
            .ok_or_else(|| ProtocolError::Transport(format!("no message pending for {receiver:?}")))
    }
}

/// A transport plus the transcript of everything that crossed it.
///
/// The session also keeps a busy clock per role: the time since the previous
/// mark is charged to whoever sends next, or to the role passed to
/// [`Session::mark`].
pub struct Session {
    transport: Box<dyn Transport>,
    transcript: ProtocolTranscript,
    next_step: u32,
    clock: Instant,
    busy: [Duration; 2],
}

impl Session {
    pub fn new(transport: Box<dyn Transport>, mode: TranscriptMode) -> Self {
        Session {
            transport,
            transcript: ProtocolTranscript::new(mode),
            next_step: 0,
            clock: Instant::now(),
            busy: [Duration::ZERO; 2],
        }
    }

    pub fn in_process(mode: TranscriptMode) -> Self {
        Self::new(Box::<InProcessTransport>::default(), mode)
    }

    pub fn send(
        &mut self,
        from: Role,
        protocol: ProtocolId,
        payload: Vec<Item>,
    ) -> Result<(), ProtocolError> {
        self.mark(from);
        let msg = Message {
            protocol,
            step: self.next_step,
            sender: from,
            payload,
        };
        self.next_step += 1;
        self.transcript.record(&msg);
        self.transport.send(msg)
    }

    /// Receives the next message for `to`, checking it belongs to `protocol`.
    pub fn recv(&mut self, to: Role, protocol: ProtocolId) -> Result<Vec<Item>, ProtocolError> {
        let msg = self.transport.recv(to)?;
        if msg.protocol != protocol || msg.sender == to {
            return Err(ProtocolError::UnexpectedMessage {
                expected: protocol,
                found: msg.protocol,
            });
        }
        Ok(msg.payload)
    }

    /// Charges the time since the last mark to `role`.
    pub fn mark(&mut self, role: Role) {
        let now = Instant::now();
        self.busy[role as usize] += now - self.clock;
        self.clock = now;
    }

    /// Restarts the clock without charging anyone.
    pub fn reset_clock(&mut self) {
        self.clock = Instant::now();
    }

    pub fn busy(&self, role: Role) -> Duration {
        self.busy[role as usize]
    }

    pub fn transcript(&self) -> &ProtocolTranscript {
        &self.transcript
    }

    pub fn into_transcript(self) -> ProtocolTranscript {
        self.transcript
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_bigint::BigUint;

    fn item(v: u32) -> Item {
        Item::Plain(BigUint::from(v))
    }

    #[test]
    fn fifo_per_direction_and_round_trip_counting() {
        let mut s = Session::in_process(TranscriptMode::Full);
        s.send(Role::Alice, ProtocolId::SecureAdd, vec![item(1)]).unwrap();
        s.send(Role::Alice, ProtocolId::SecureAdd, vec![item(2)]).unwrap();
        assert_eq!(s.recv(Role::Bob, ProtocolId::SecureAdd).unwrap(), vec![item(1)]);
        assert_eq!(s.recv(Role::Bob, ProtocolId::SecureAdd).unwrap(), vec![item(2)]);
        assert_eq!(s.transcript().round_trips(), 0);

        s.send(Role::Bob, ProtocolId::Rekey, vec![item(3)]).unwrap();
        s.recv(Role::Alice, ProtocolId::Rekey).unwrap();
        s.send(Role::Alice, ProtocolId::Rekey, vec![item(4)]).unwrap();
        s.recv(Role::Bob, ProtocolId::Rekey).unwrap();
        assert_eq!(s.transcript().round_trips(), 1);

        let steps: Vec<u32> = s.transcript().messages().iter().map(|m| m.step).collect();
        assert_eq!(steps, vec![0, 1, 2, 3]);
        assert!(s.recv(Role::Bob, ProtocolId::Rekey).is_err());
    }

    #[test]
    fn rejects_wrong_protocol() {
        let mut s = Session::in_process(TranscriptMode::Counting);
        s.send(Role::Alice, ProtocolId::SecureAdd, vec![item(1)]).unwrap();
        assert!(matches!(
            s.recv(Role::Bob, ProtocolId::SecureDot),
            Err(ProtocolError::UnexpectedMessage { .. })
        ));
    }
}
