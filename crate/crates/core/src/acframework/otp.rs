//! One-time-pad over an authenticated channel: the canonical warm-up
//! construction, used to exercise every kernel feature end to end.
//!
//! The real system wires an encryptor and a decryptor to a shared key cell
//! and a channel that shows every ciphertext to the outside on `eve`. The
//! ideal system is a private channel that reveals only the message length,
//! with a simulator translating that leak into fresh uniform noise on the
//! same `eve` port. Pad reuse is what the construction guards against, so
//! the key cell hands out its pad exactly once per side.
//!
//! [`otp_pair`] builds the two systems; [`otp_distinguishers`] is a small
//! family of probes, none of which can tell them apart. [`control_pair`]
//! builds two systems that *are* trivially distinguishable, as a check that
//! zero advantage elsewhere is a finding and not a harness defect.

use super::distinguisher::{DistAction, Distinguisher, DistinguisherSpec, ScriptedObserver};
use super::machine::{Machine, MachineError, MachineSpec, StepCtx};
use super::message::Message;
use super::wiring::Wiring;
use super::AcError;
use crate::qstate::BitString;

/// Lazily draws one uniform pad and serves it once to each of two sides.
struct KeyCell {
    len: usize,
    pad: Option<BitString>,
    served_a: bool,
    served_b: bool,
}

impl KeyCell {
    fn pad(&mut self, ctx: &mut StepCtx<'_>) -> Result<BitString, MachineError> {
        if self.pad.is_none() {
            self.pad = Some(ctx.rand_bits(self.len)?);
        }
        Ok(self.pad.clone().expect("pad drawn above"))
    }
}

impl Machine for KeyCell {
    fn step(
        &mut self,
        port: &str,
        msg: Message,
        ctx: &mut StepCtx<'_>,
    ) -> Result<Vec<(String, Message)>, MachineError> {
        let served = match port {
            "a" => &mut self.served_a,
            "b" => &mut self.served_b,
            _ => {
                return Err(MachineError::ProtocolState {
                    port: port.to_string(),
                    tag: msg.tag(),
                    phase: "key-cell".to_string(),
                })
            }
        };
        if *served {
            return Err(MachineError::ProtocolState {
                port: port.to_string(),
                tag: msg.tag(),
                phase: "pad-already-served".to_string(),
            });
        }
        *served = true;
        let pad = self.pad(ctx)?;
        Ok(vec![(port.to_string(), Message::Bits(pad))])
    }
}

/// Forwards length-`len` inputs and shows a copy on `leak`.
struct AuthChannel {
    len: usize,
}

impl Machine for AuthChannel {
    fn step(
        &mut self,
        port: &str,
        msg: Message,
        _ctx: &mut StepCtx<'_>,
    ) -> Result<Vec<(String, Message)>, MachineError> {
        match (port, msg) {
            ("in", Message::Bits(c)) if c.len() == self.len => Ok(vec![
                ("out".to_string(), Message::Bits(c.clone())),
                ("leak".to_string(), Message::Bits(c)),
            ]),
            (port, msg) => Err(MachineError::ProtocolState {
                port: port.to_string(),
                tag: msg.tag(),
                phase: "auth-channel".to_string(),
            }),
        }
    }
}

/// Encryptor: XORs each message with the pad fetched from the key cell.
struct OtpSender {
    len: usize,
    pending: Option<BitString>,
}

impl Machine for OtpSender {
    fn step(
        &mut self,
        port: &str,
        msg: Message,
        _ctx: &mut StepCtx<'_>,
    ) -> Result<Vec<(String, Message)>, MachineError> {
        match (port, msg) {
            ("msg", Message::Bits(m)) if m.len() == self.len && self.pending.is_none() => {
                self.pending = Some(m);
                Ok(vec![("key".to_string(), Message::Start)])
            }
            ("key", Message::Bits(k)) => {
                let m = self.pending.take().ok_or_else(|| MachineError::ProtocolState {
                    port: "key".to_string(),
                    tag: "bits",
                    phase: "no-message-pending".to_string(),
                })?;
                let c = m.xor(&k).map_err(|e| MachineError::Other(e.to_string()))?;
                Ok(vec![("chan".to_string(), Message::Bits(c))])
            }
            (port, msg) => Err(MachineError::ProtocolState {
                port: port.to_string(),
                tag: msg.tag(),
                phase: "otp-sender".to_string(),
            }),
        }
    }
}

/// Decryptor: XORs each ciphertext with the pad fetched from the key cell.
struct OtpReceiver {
    pending: Option<BitString>,
}

impl Machine for OtpReceiver {
    fn step(
        &mut self,
        port: &str,
        msg: Message,
        _ctx: &mut StepCtx<'_>,
    ) -> Result<Vec<(String, Message)>, MachineError> {
        match (port, msg) {
            ("chan", Message::Bits(c)) if self.pending.is_none() => {
                self.pending = Some(c);
                Ok(vec![("key".to_string(), Message::Start)])
            }
            ("key", Message::Bits(k)) => {
                let c = self.pending.take().ok_or_else(|| MachineError::ProtocolState {
                    port: "key".to_string(),
                    tag: "bits",
                    phase: "no-ciphertext-pending".to_string(),
                })?;
                let m = c.xor(&k).map_err(|e| MachineError::Other(e.to_string()))?;
                Ok(vec![("out".to_string(), Message::Bits(m))])
            }
            (port, msg) => Err(MachineError::ProtocolState {
                port: port.to_string(),
                tag: msg.tag(),
                phase: "otp-receiver".to_string(),
            }),
        }
    }
}

/// Delivers messages intact, revealing only their length on `leak`.
struct PrivateChannel {
    len: usize,
}

impl Machine for PrivateChannel {
    fn step(
        &mut self,
        port: &str,
        msg: Message,
        _ctx: &mut StepCtx<'_>,
    ) -> Result<Vec<(String, Message)>, MachineError> {
        match (port, msg) {
            ("in", Message::Bits(m)) if m.len() == self.len => Ok(vec![
                ("out".to_string(), Message::Bits(m)),
                ("leak".to_string(), Message::PartyId(self.len)),
            ]),
            (port, msg) => Err(MachineError::ProtocolState {
                port: port.to_string(),
                tag: msg.tag(),
                phase: "private-channel".to_string(),
            }),
        }
    }
}

/// Turns a length leak into uniform noise of that length.
struct NoiseSimulator;

impl Machine for NoiseSimulator {
    fn step(
        &mut self,
        port: &str,
        msg: Message,
        ctx: &mut StepCtx<'_>,
    ) -> Result<Vec<(String, Message)>, MachineError> {
        match (port, msg) {
            ("leak", Message::PartyId(len)) => {
                Ok(vec![("eve".to_string(), Message::Bits(ctx.rand_bits(len)?))])
            }
            (port, msg) => Err(MachineError::ProtocolState {
                port: port.to_string(),
                tag: msg.tag(),
                phase: "noise-simulator".to_string(),
            }),
        }
    }
}

/// Real system: encrypt, ship over the leaky channel, decrypt.
pub fn otp_real(len: usize) -> Result<Wiring, AcError> {
    let mut w = Wiring::new();
    w.add_machine(MachineSpec::new("key", vec!["a".into(), "b".into()], move || KeyCell {
        len,
        pad: None,
        served_a: false,
        served_b: false,
    }))?;
    w.add_machine(MachineSpec::new(
        "auth",
        vec!["in".into(), "out".into(), "leak".into()],
        move || AuthChannel { len },
    ))?;
    w.add_machine(MachineSpec::new(
        "enc",
        vec!["msg".into(), "key".into(), "chan".into()],
        move || OtpSender { len, pending: None },
    ))?;
    w.add_machine(MachineSpec::new(
        "dec",
        vec!["out".into(), "key".into(), "chan".into()],
        || OtpReceiver { pending: None },
    ))?;
    w.link(("enc", "key"), ("key", "a"))?;
    w.link(("dec", "key"), ("key", "b"))?;
    w.link(("enc", "chan"), ("auth", "in"))?;
    w.link(("dec", "chan"), ("auth", "out"))?;
    w.export_as(("enc", "msg"), "alice")?;
    w.export_as(("dec", "out"), "bob")?;
    w.export_as(("auth", "leak"), "eve")?;
    Ok(w)
}

/// Ideal system: a private channel plus the noise simulator on its leak.
pub fn otp_ideal(len: usize) -> Result<Wiring, AcError> {
    let mut w = Wiring::new();
    w.add_machine(MachineSpec::new(
        "sec",
        vec!["in".into(), "out".into(), "leak".into()],
        move || PrivateChannel { len },
    ))?;
    w.add_machine(MachineSpec::new("sim", vec!["leak".into(), "eve".into()], || NoiseSimulator))?;
    w.link(("sec", "leak"), ("sim", "leak"))?;
    w.export_as(("sec", "in"), "alice")?;
    w.export_as(("sec", "out"), "bob")?;
    w.export_as(("sim", "eve"), "eve")?;
    Ok(w)
}

/// The matched pair (real, ideal) for a given message length.
pub fn otp_pair(len: usize) -> Result<(Wiring, Wiring), AcError> {
    Ok((otp_real(len)?, otp_ideal(len)?))
}

/// A deliberately broken "real" system: ships plaintext over the leaky
/// channel. Against [`otp_ideal`] the `eve-matches-message` probe wins
/// with probability `1 - 2^-len`.
pub fn otp_real_unencrypted(len: usize) -> Result<Wiring, AcError> {
    let mut w = Wiring::new();
    w.add_machine(MachineSpec::new(
        "auth",
        vec!["in".into(), "out".into(), "leak".into()],
        move || AuthChannel { len },
    ))?;
    // Surface names must match the honest pair exactly.
    w.export_as(("auth", "in"), "alice")?;
    w.export_as(("auth", "out"), "bob")?;
    w.export_as(("auth", "leak"), "eve")?;
    Ok(w)
}

/// Forwards bits, or flips them when `flip` is set.
struct BitChannel {
    flip: bool,
}

impl Machine for BitChannel {
    fn step(
        &mut self,
        port: &str,
        msg: Message,
        _ctx: &mut StepCtx<'_>,
    ) -> Result<Vec<(String, Message)>, MachineError> {
        match (port, msg) {
            ("in", Message::Bit(b)) => {
                Ok(vec![("out".to_string(), Message::Bit(b ^ u8::from(self.flip)))])
            }
            (port, msg) => Err(MachineError::ProtocolState {
                port: port.to_string(),
                tag: msg.tag(),
                phase: "bit-channel".to_string(),
            }),
        }
    }
}

/// Two systems any probe tells apart at a glance: a forwarding bit channel
/// and a flipping one. Used to validate the advantage harness itself.
pub fn control_pair() -> Result<(Wiring, Wiring), AcError> {
    let build = |flip: bool| -> Result<Wiring, AcError> {
        let mut w = Wiring::new();
        w.add_machine(MachineSpec::new("chan", vec!["in".into(), "out".into()], move || {
            BitChannel { flip }
        }))?;
        w.export_as(("chan", "in"), "alice")?;
        w.export_as(("chan", "out"), "bob")?;
        Ok(w)
    };
    Ok((build(false)?, build(true)?))
}

/// Probe that detects the control pair: sends 0, guesses the echoed bit.
pub fn control_distinguisher() -> DistinguisherSpec {
    ScriptedObserver::spec(
        "echo-bit",
        vec![("alice".to_string(), Message::Bit(0))],
        |seen| match seen.first() {
            Some((_, Message::Bit(b))) => *b,
            _ => 1,
        },
    )
}

/// Sends a chosen message, then guesses from a predicate over the whole
/// observation sequence.
fn probe(
    name: &str,
    message: BitString,
    decide: impl Fn(&[(String, Message)]) -> u8 + Send + Sync + 'static,
) -> DistinguisherSpec {
    ScriptedObserver::spec(name, vec![("alice".to_string(), Message::Bits(message))], decide)
}

fn bits_at<'a>(seen: &'a [(String, Message)], port: &str) -> Option<&'a BitString> {
    seen.iter().find_map(|(p, m)| match (p.as_str(), m) {
        (q, Message::Bits(b)) if q == port => Some(b),
        _ => None,
    })
}

/// A delivery-correctness probe plus several leak probes. None of them can
/// separate the honest pair; `eve-matches-message` separates the
/// unencrypted control from the ideal system almost surely.
pub fn otp_distinguishers(len: usize) -> Vec<DistinguisherSpec> {
    let ones = BitString::new(vec![1; len]).expect("all-ones is a valid bit string");
    let zeros = BitString::zeros(len);
    let alt = BitString::new((0..len).map(|i| (i % 2) as u8).collect())
        .expect("alternating bits are valid");
    let mut family = vec![
        probe("bob-delivers-message", ones.clone(), {
            let want = ones.clone();
            move |seen| match bits_at(seen, "bob") {
                Some(got) if *got == want => 0,
                _ => 1,
            }
        }),
        probe("eve-first-bit", ones.clone(), |seen| match bits_at(seen, "eve") {
            Some(got) => got.bit(0),
            None => 1,
        }),
        probe("eve-parity", alt, |seen| match bits_at(seen, "eve") {
            Some(got) => got.parity(),
            None => 1,
        }),
        probe("eve-matches-message", ones.clone(), {
            let want = ones;
            move |seen| match bits_at(seen, "eve") {
                Some(got) if *got == want => 0,
                _ => 1,
            }
        }),
        probe("eve-matches-zeros", zeros.clone(), {
            let want = zeros;
            move |seen| match bits_at(seen, "eve") {
                Some(got) if *got == want => 0,
                _ => 1,
            }
        }),
    ];
    family.push(adaptive_two_message_probe(len));
    family
}

/// An adaptive probe: reacts to the first observation by deciding whether
/// to guess immediately, exercising mid-run guesses in the kernel.
fn adaptive_two_message_probe(len: usize) -> DistinguisherSpec {
    struct Adaptive {
        len: usize,
        eve_seen: Option<BitString>,
    }
    impl Distinguisher for Adaptive {
        fn begin(
            &mut self,
            _ctx: &mut StepCtx<'_>,
        ) -> Result<Vec<(String, Message)>, MachineError> {
            Ok(vec![("alice".to_string(), Message::Bits(BitString::zeros(self.len)))])
        }
        fn observe(
            &mut self,
            port: &str,
            msg: &Message,
            _ctx: &mut StepCtx<'_>,
        ) -> Result<DistAction, MachineError> {
            if port == "eve" {
                if let Message::Bits(b) = msg {
                    self.eve_seen = Some(b.clone());
                }
            }
            if port == "bob" {
                // Guess as soon as delivery is confirmed: 0 when the leak
                // looked like the all-zero plaintext, 1 otherwise.
                let zeroish = self
                    .eve_seen
                    .as_ref()
                    .map(|b| b.weight() == 0)
                    .unwrap_or(false);
                return Ok(DistAction::Guess(u8::from(!zeroish)));
            }
            Ok(DistAction::Continue)
        }
        fn finish(&mut self, _ctx: &mut StepCtx<'_>) -> Result<u8, MachineError> {
            Ok(1)
        }
    }
    let name = "adaptive-zero-leak";
    DistinguisherSpec::new(name, move || Adaptive { len, eve_seen: None })
}
