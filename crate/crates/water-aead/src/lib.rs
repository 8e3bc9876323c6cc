//! Reference implementation of the water AEAD transport.
//!
//! This crate is the native, engine-free side of the AEAD transport: it
//! defines the wire format and key schedule, and provides plaintext
//! byte-stream endpoints ([`oracle_client`] / [`OracleServer`]) that speak
//! that format over TCP. It exists so the sandboxed guest implementation of
//! the same transport can be tested against an independent counterparty in
//! both directions, byte for byte.
//!
//! # Wire format
//!
//! Each direction of a connection is an independent stream:
//!
//! ```text
//! stream   = salt frame*
//! salt     = 32 random bytes
//! frame    = seal(len_be2) seal(payload)
//! len_be2  = big-endian u16 payload length, 1..=0x3FFF (top two bits zero)
//! seal(m)  = ChaCha20-Poly1305(subkey, nonce_n, m)    ; ciphertext || 16-byte tag
//! ```
//!
//! The nonce is a 96-bit little-endian counter starting at zero, incremented
//! once per sealed message (so a frame consumes two nonces). Keys:
//!
//! ```text
//! psk    = HKDF-SHA256(salt = "",   ikm = password, info = "water-psk",    32)
//! subkey = HKDF-SHA256(salt = salt, ikm = psk,      info = "water-subkey", 32)
//! ```
//!
//! A writer derives its sending subkey from its own salt and emits the salt
//! ahead of its first frame; a reader derives its receiving subkey from the
//! 32 salt bytes that prefix the peer's stream.

use chacha20poly1305::aead::{Aead, KeyInit, Payload};
use chacha20poly1305::{ChaCha20Poly1305, Nonce};
use hkdf::Hkdf;
use sha2::Sha256;

mod oracle;

pub use oracle::{oracle_client, OracleServer, OracleStream};

/// Per-direction salt length in bytes.
pub const SALT_LEN: usize = 32;
/// Poly1305 tag length in bytes.
pub const TAG_LEN: usize = 16;
/// Sealed length section: 2-byte big-endian length plus tag.
pub const LEN_SECTION_LEN: usize = 2 + TAG_LEN;
/// Maximum payload plaintext per frame; keeps the length field's top two
/// bits reserved.
pub const MAX_PAYLOAD: usize = 0x3FFF;
/// Maximum wire size of one frame.
pub const MAX_FRAME_LEN: usize = LEN_SECTION_LEN + MAX_PAYLOAD + TAG_LEN;

const PSK_INFO: &[u8] = b"water-psk";
const SUBKEY_INFO: &[u8] = b"water-subkey";

#[derive(thiserror::Error, Debug, PartialEq, Eq)]
pub enum AeadError {
    /// Tag verification failed on a length or payload section.
    #[error("authentication failed")]
    AuthFailed,
    /// Decrypted length field is zero or exceeds [`MAX_PAYLOAD`].
    #[error("frame length field out of range")]
    BadLengthField,
    /// `seal` was handed an empty or oversized payload.
    #[error("payload length {0} out of range (1..={MAX_PAYLOAD})")]
    PayloadLength(usize),
}

/// Derives the pre-shared key from a password.
pub fn derive_psk(password: &[u8]) -> [u8; 32] {
    let hk = Hkdf::<Sha256>::new(Some(&[]), password);
    let mut psk = [0u8; 32];
    hk.expand(PSK_INFO, &mut psk).expect("32 bytes is a valid hkdf length");
    psk
}

/// Derives a per-direction session subkey from the psk and that direction's
/// salt.
pub fn derive_subkey(psk: &[u8; 32], salt: &[u8; SALT_LEN]) -> [u8; 32] {
    let hk = Hkdf::<Sha256>::new(Some(salt), psk);
    let mut subkey = [0u8; 32];
    hk.expand(SUBKEY_INFO, &mut subkey).expect("32 bytes is a valid hkdf length");
    subkey
}

/// 96-bit little-endian nonce counter.
#[derive(Clone, Default)]
struct NonceCounter([u8; 12]);

impl NonceCounter {
    fn next(&mut self) -> Nonce {
        let current = Nonce::from(self.0);
        for byte in self.0.iter_mut() {
            let (v, carry) = byte.overflowing_add(1);
            *byte = v;
            if !carry {
                break;
            }
        }
        current
    }
}

/// Sending half of a session: owns the direction's salt, subkey, and nonce
/// counter.
pub struct Sealer {
    cipher: ChaCha20Poly1305,
    nonce: NonceCounter,
    salt: [u8; SALT_LEN],
    salt_sent: bool,
}

impl Sealer {
    /// Creates a sealer with a fresh random salt.
    pub fn new(psk: &[u8; 32]) -> Self {
        let mut salt = [0u8; SALT_LEN];
        rand::fill(&mut salt[..]);
        Self::with_salt(psk, salt)
    }

    /// Creates a sealer with a caller-provided salt. Used to reproduce
    /// transcripts.
    pub fn with_salt(psk: &[u8; 32], salt: [u8; SALT_LEN]) -> Self {
        let subkey = derive_subkey(psk, &salt);
        Self {
            cipher: ChaCha20Poly1305::new((&subkey).into()),
            nonce: NonceCounter::default(),
            salt,
            salt_sent: false,
        }
    }

    pub fn salt(&self) -> &[u8; SALT_LEN] {
        &self.salt
    }

    /// Takes the salt for transmission. The first call returns it; later
    /// calls return nothing. `seal` prefixes it automatically, so this is
    /// only needed when the salt is sent ahead of any frame (the dialer
    /// handshake).
    pub fn take_salt(&mut self) -> Option<[u8; SALT_LEN]> {
        if self.salt_sent {
            None
        } else {
            self.salt_sent = true;
            Some(self.salt)
        }
    }

    /// Seals one frame. The output is prefixed with the salt if it has not
    /// been sent yet.
    pub fn seal(&mut self, plaintext: &[u8]) -> Result<Vec<u8>, AeadError> {
        if plaintext.is_empty() || plaintext.len() > MAX_PAYLOAD {
            return Err(AeadError::PayloadLength(plaintext.len()));
        }
        let mut out = Vec::with_capacity(SALT_LEN + LEN_SECTION_LEN + plaintext.len() + TAG_LEN);
        if let Some(salt) = self.take_salt() {
            out.extend_from_slice(&salt);
        }
        let len_be = (plaintext.len() as u16).to_be_bytes();
        let nonce = self.nonce.next();
        let sealed_len = self
            .cipher
            .encrypt(&nonce, Payload::from(&len_be[..]))
            .expect("chacha20poly1305 encryption is infallible");
        out.extend_from_slice(&sealed_len);
        let nonce = self.nonce.next();
        let sealed_payload = self
            .cipher
            .encrypt(&nonce, Payload::from(plaintext))
            .expect("chacha20poly1305 encryption is infallible");
        out.extend_from_slice(&sealed_payload);
        Ok(out)
    }

    /// Seals arbitrary-length plaintext as a sequence of maximal frames.
    pub fn seal_all(&mut self, plaintext: &[u8]) -> Vec<u8> {
        let mut out = Vec::new();
        if plaintext.is_empty() {
            return out;
        }
        for chunk in plaintext.chunks(MAX_PAYLOAD) {
            out.extend_from_slice(&self.seal(chunk).expect("chunk length in range"));
        }
        out
    }
}

/// Result of feeding accumulated wire bytes to an [`Opener`].
#[derive(Debug, PartialEq, Eq)]
pub enum OpenOutcome {
    /// Not enough buffered input to make progress; nothing was consumed.
    NeedMore,
    /// `consumed` leading bytes were processed. `plaintext` is empty when
    /// the consumed bytes were a salt or a length section.
    Progress { consumed: usize, plaintext: Vec<u8> },
}

enum OpenStage {
    Salt,
    Len,
    Payload(usize),
}

/// Receiving half of a session: a resumable decoder over the peer's stream.
pub struct Opener {
    psk: [u8; 32],
    cipher: Option<ChaCha20Poly1305>,
    nonce: NonceCounter,
    stage: OpenStage,
}

impl Opener {
    /// Decoder that expects the peer salt at the head of the stream.
    pub fn new(psk: &[u8; 32]) -> Self {
        Self {
            psk: *psk,
            cipher: None,
            nonce: NonceCounter::default(),
            stage: OpenStage::Salt,
        }
    }

    /// Decoder for a stream whose salt was already consumed.
    pub fn with_peer_salt(psk: &[u8; 32], salt: &[u8; SALT_LEN]) -> Self {
        let subkey = derive_subkey(psk, salt);
        Self {
            psk: *psk,
            cipher: Some(ChaCha20Poly1305::new((&subkey).into())),
            nonce: NonceCounter::default(),
            stage: OpenStage::Len,
        }
    }

    /// True once the decoder is mid-frame (length accepted, payload pending).
    pub fn awaiting_payload(&self) -> bool {
        matches!(self.stage, OpenStage::Payload(_))
    }

    /// Consumes as much of `acc` as one step allows. Callers drain
    /// `consumed` bytes from the front of their buffer and repeat until
    /// `NeedMore`. No input is consumed on `NeedMore` or on error.
    pub fn open(&mut self, acc: &[u8]) -> Result<OpenOutcome, AeadError> {
        match self.stage {
            OpenStage::Salt => {
                if acc.len() < SALT_LEN {
                    return Ok(OpenOutcome::NeedMore);
                }
                let salt: [u8; SALT_LEN] = acc[..SALT_LEN].try_into().unwrap();
                let subkey = derive_subkey(&self.psk, &salt);
                self.cipher = Some(ChaCha20Poly1305::new((&subkey).into()));
                self.stage = OpenStage::Len;
                Ok(OpenOutcome::Progress { consumed: SALT_LEN, plaintext: Vec::new() })
            }
            OpenStage::Len => {
                if acc.len() < LEN_SECTION_LEN {
                    return Ok(OpenOutcome::NeedMore);
                }
                let nonce = self.nonce.next();
                let len_be = self
                    .cipher
                    .as_ref()
                    .expect("cipher set before Len stage")
                    .decrypt(&nonce, Payload::from(&acc[..LEN_SECTION_LEN]))
                    .map_err(|_| AeadError::AuthFailed)?;
                let len = u16::from_be_bytes([len_be[0], len_be[1]]) as usize;
                if len == 0 || len > MAX_PAYLOAD {
                    return Err(AeadError::BadLengthField);
                }
                self.stage = OpenStage::Payload(len);
                Ok(OpenOutcome::Progress { consumed: LEN_SECTION_LEN, plaintext: Vec::new() })
            }
            OpenStage::Payload(len) => {
                let want = len + TAG_LEN;
                if acc.len() < want {
                    return Ok(OpenOutcome::NeedMore);
                }
                let nonce = self.nonce.next();
                let plaintext = self
                    .cipher
                    .as_ref()
                    .expect("cipher set before Payload stage")
                    .decrypt(&nonce, Payload::from(&acc[..want]))
                    .map_err(|_| AeadError::AuthFailed)?;
                self.stage = OpenStage::Len;
                Ok(OpenOutcome::Progress { consumed: want, plaintext })
            }
        }
    }

    /// Decodes every complete frame at the front of `acc`, draining consumed
    /// bytes in place and appending plaintext to `out`.
    pub fn open_all(&mut self, acc: &mut Vec<u8>, out: &mut Vec<u8>) -> Result<(), AeadError> {
        loop {
            match self.open(acc)? {
                OpenOutcome::NeedMore => return Ok(()),
                OpenOutcome::Progress { consumed, plaintext } => {
                    acc.drain(..consumed);
                    out.extend_from_slice(&plaintext);
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    // RFC 8439 section 2.8.2 test vector, restated through the chacha20poly1305
    // crate to pin the cipher this wire format is built on.
    #[test]
    fn cipher_matches_rfc8439_vector() {
        let key = hex::decode("808182838485868788898a8b8c8d8e8f909192939495969798999a9b9c9d9e9f")
            .unwrap();
        let nonce = hex::decode("070000004041424344454647").unwrap();
        let aad = hex::decode("50515253c0c1c2c3c4c5c6c7").unwrap();
        let plaintext = b"Ladies and Gentlemen of the class of '99: If I could offer you \
only one tip for the future, sunscreen would be it.";
        let cipher = ChaCha20Poly1305::new(key.as_slice().into());
        let out = cipher
            .encrypt(
                Nonce::from_slice(&nonce),
                Payload { msg: plaintext, aad: &aad },
            )
            .unwrap();
        let expected_ct = hex::decode(
            "d31a8d34648e60db7b86afbc53ef7ec2a4aded51296e08fea9e2b5a736ee62d6\
             3dbea45e8ca9671282fafb69da92728b1a71de0a9e060b2905d6a5b67ecd3b36\
             92ddbd7f2d778b8c9803aee328091b58fab324e4fad675945585808b4831d7bc\
             3ff4def08e4b7a9de576d26586cec64b6116",
        )
        .unwrap();
        let expected_tag = hex::decode("1ae10b594f09e26a7e902ecbd0600691").unwrap();
        assert_eq!(&out[..expected_ct.len()], &expected_ct[..]);
        assert_eq!(&out[expected_ct.len()..], &expected_tag[..]);
    }

    // RFC 5869 test case 1 pins the HKDF construction.
    #[test]
    fn hkdf_matches_rfc5869_case1() {
        let ikm = [0x0b; 22];
        let salt: Vec<u8> = (0x00..=0x0c).collect();
        let info: Vec<u8> = (0xf0..=0xf9).collect();
        let hk = Hkdf::<Sha256>::new(Some(&salt), &ikm);
        let mut okm = [0u8; 42];
        hk.expand(&info, &mut okm).unwrap();
        assert_eq!(
            hex::encode(okm),
            "3cb25f25faacd57a90434f64d0362f2a2d2d0a90cf1a5a4c5db02d56ecc4c5bf34007208d5b887185865"
        );
    }

    #[test]
    fn key_schedule_is_stable() {
        // Frozen from this implementation; guards against accidental changes
        // to the context strings or extract/expand order.
        let psk = derive_psk(b"hunter2");
        assert_eq!(
            hex::encode(psk),
            "3326b9a251b8a9bcb6a0ba6b659811b042bec6aa789dc01d324bfd0123cf0a29"
        );
        let subkey = derive_subkey(&psk, &[0x42; 32]);
        assert_eq!(
            hex::encode(subkey),
            "c4bbfece054aa6dd30b59dc952984881716df716c6a2fcbb22ace74347b3af43"
        );
    }

    #[test]
    fn frame_layout_hi() {
        // 2-byte plaintext: 18-byte length section + 18-byte payload section.
        let psk = derive_psk(b"pw");
        let mut sealer = Sealer::with_salt(&psk, [7; 32]);
        sealer.take_salt();
        let frame = sealer.seal(b"hi").unwrap();
        assert_eq!(frame.len(), 36);
    }

    #[test]
    fn seal_rejects_out_of_range_payloads() {
        let psk = derive_psk(b"pw");
        let mut sealer = Sealer::with_salt(&psk, [7; 32]);
        assert_eq!(sealer.seal(b"").unwrap_err(), AeadError::PayloadLength(0));
        let big = vec![0u8; MAX_PAYLOAD + 1];
        assert_eq!(
            sealer.seal(&big).unwrap_err(),
            AeadError::PayloadLength(MAX_PAYLOAD + 1)
        );
    }

    #[test]
    fn salt_prefixes_first_frame_only() {
        let psk = derive_psk(b"pw");
        let mut sealer = Sealer::with_salt(&psk, [9; 32]);
        let first = sealer.seal(b"a").unwrap();
        let second = sealer.seal(b"b").unwrap();
        assert_eq!(&first[..SALT_LEN], &[9; 32]);
        assert_eq!(first.len(), SALT_LEN + LEN_SECTION_LEN + 1 + TAG_LEN);
        assert_eq!(second.len(), LEN_SECTION_LEN + 1 + TAG_LEN);
    }

    #[test]
    fn roundtrip_with_stream_reassembly() {
        let psk = derive_psk(b"hunter2");
        let mut sealer = Sealer::with_salt(&psk, [3; 32]);
        let payload: Vec<u8> = (0..100_000u32).map(|i| (i * 31 % 251) as u8).collect();
        let wire = sealer.seal_all(&payload);

        let mut opener = Opener::new(&psk);
        let mut acc = wire;
        let mut out = Vec::new();
        opener.open_all(&mut acc, &mut out).unwrap();
        assert!(acc.is_empty());
        assert_eq!(out, payload);
    }

    #[test]
    fn wrong_password_fails_on_first_length_section() {
        let psk = derive_psk(b"right");
        let mut sealer = Sealer::with_salt(&psk, [1; 32]);
        let wire = sealer.seal(b"hello").unwrap();

        let other = derive_psk(b"wrong");
        let mut opener = Opener::new(&other);
        let mut acc = wire;
        let mut out = Vec::new();
        let err = opener.open_all(&mut acc, &mut out).unwrap_err();
        assert_eq!(err, AeadError::AuthFailed);
        assert!(out.is_empty());
    }

    #[test]
    fn zero_length_field_rejected() {
        // Forge a stream whose first sealed length decodes to zero.
        let psk = derive_psk(b"pw");
        let salt = [5u8; 32];
        let subkey = derive_subkey(&psk, &salt);
        let cipher = ChaCha20Poly1305::new((&subkey).into());
        let mut nonce = NonceCounter::default();
        let sealed_len = cipher
            .encrypt(&nonce.next(), Payload::from(&0u16.to_be_bytes()[..]))
            .unwrap();
        let mut wire = salt.to_vec();
        wire.extend_from_slice(&sealed_len);

        let mut opener = Opener::new(&psk);
        let mut out = Vec::new();
        let err = opener.open_all(&mut wire.clone(), &mut out).unwrap_err();
        assert_eq!(err, AeadError::BadLengthField);
    }

    #[test]
    fn nonce_counter_carries() {
        let mut counter = NonceCounter([0xff, 0xff, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0]);
        counter.next();
        assert_eq!(counter.0[..4], [0, 0, 1, 0]);
    }
}
