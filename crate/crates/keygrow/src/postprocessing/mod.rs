//! Classical post-processing: generalized sifting, reconciliation, privacy
//! amplification and authentication, with every disclosed parity and hash
//! key paid for from a ledger of pre-shared secret bits.

mod auth;
mod privacy;
mod reconcile;

pub use auth::{
    authenticate_exchange, wegman_carter_key_bits, wegman_carter_tag, AuthOutcome, AuthView,
};
pub use privacy::privacy_amplify;
pub use reconcile::{
    block_code_cost_model, reconcile_block_code, reconcile_discard_demo, reconcile_interactive,
    BlockCodeCost, DiscardOutcome,
};

use crate::attack_model::{Basis, DetectionOutcome};
use crate::security_math::ReconciliationScenario;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand::SeedableRng;
use serde::Serialize;
use std::fmt;

#[derive(Debug, Clone, PartialEq)]
pub enum PostprocError {
    LedgerExhausted { requested: u64, available: i64 },
    LengthMismatch { left: usize, right: usize },
    InsufficientKey { needed: u64, available: u64 },
    Domain(String),
}

impl fmt::Display for PostprocError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PostprocError::LedgerExhausted { requested, available } => {
                write!(f, "secret-bit ledger exhausted: requested {requested}, have {available}")
            }
            PostprocError::LengthMismatch { left, right } => {
                write!(f, "bit-string lengths differ: {left} vs {right}")
            }
            PostprocError::InsufficientKey { needed, available } => {
                write!(f, "hash key too short: need {needed} bits, have {available}")
            }
            PostprocError::Domain(s) => write!(f, "domain error: {s}"),
        }
    }
}

impl std::error::Error for PostprocError {}

/// Parity of a bit slice.
pub fn parity(bits: &[bool]) -> bool {
    bits.iter().fold(false, |acc, &b| acc ^ b)
}

/// Bits rendered as hex, most significant bit of each byte first; the tail
/// byte is zero-padded.
pub fn bits_to_hex(bits: &[bool]) -> String {
    let mut out = String::with_capacity(bits.len().div_ceil(8) * 2);
    for chunk in bits.chunks(8) {
        let mut byte = 0u8;
        for (i, &b) in chunk.iter().enumerate() {
            if b {
                byte |= 1 << (7 - i);
            }
        }
        out.push_str(&format!("{byte:02x}"));
    }
    out
}

/// Inverse of [`bits_to_hex`] for a known bit count.
pub fn bits_from_hex(hex: &str, n_bits: usize) -> Result<Vec<bool>, PostprocError> {
    let bytes = (0..hex.len())
        .step_by(2)
        .map(|i| u8::from_str_radix(&hex[i..(i + 2).min(hex.len())], 16))
        .collect::<Result<Vec<u8>, _>>()
        .map_err(|e| PostprocError::Domain(format!("bad hex: {e}")))?;
    if bytes.len() * 8 < n_bits {
        return Err(PostprocError::Domain("hex shorter than requested bit count".into()));
    }
    Ok((0..n_bits).map(|i| (bytes[i / 8] >> (7 - i % 8)) & 1 == 1).collect())
}

/// One transmitted signal as the sifting step sees it.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct SignalRecord {
    pub sent_bit: bool,
    pub sent_basis: Basis,
    pub outcome: DetectionOutcome,
}

/// The generalized sifted key: deterministic detections with matching bases
/// plus ambiguous detections, which enter with a fixed placeholder bit on
/// Bob's side and are corrected like errors.
#[derive(Debug, Clone, Serialize)]
pub struct GeneralizedSiftedKey {
    pub bits_alice: Vec<bool>,
    pub bits_bob: Vec<bool>,
    /// Indices into the sifted string that came from ambiguous detections.
    pub ambiguous_positions: Vec<usize>,
    /// Alice's preparation basis per kept position.
    pub basis_string: Vec<Basis>,
}

impl GeneralizedSiftedKey {
    pub fn n_sif(&self) -> u64 {
        self.bits_alice.len() as u64
    }

    pub fn n_d(&self) -> u64 {
        self.ambiguous_positions.len() as u64
    }

    pub fn truncate(&mut self, n: usize) {
        self.bits_alice.truncate(n);
        self.bits_bob.truncate(n);
        self.basis_string.truncate(n);
        self.ambiguous_positions.retain(|&p| p < n);
    }
}

/// Keep positions where the detection is unambiguous in the preparation
/// basis; ambiguous detections enter with Bob's bit fixed to 0; vacuum and
/// wrong-basis rounds are dropped.
pub fn sift(records: &[SignalRecord]) -> GeneralizedSiftedKey {
    let mut key = GeneralizedSiftedKey {
        bits_alice: Vec::new(),
        bits_bob: Vec::new(),
        ambiguous_positions: Vec::new(),
        basis_string: Vec::new(),
    };
    for rec in records {
        match rec.outcome {
            DetectionOutcome::Vacuum => {}
            DetectionOutcome::Unambiguous { bit, basis } => {
                if basis == rec.sent_basis {
                    key.bits_alice.push(rec.sent_bit);
                    key.bits_bob.push(bit);
                    key.basis_string.push(rec.sent_basis);
                }
            }
            DetectionOutcome::Ambiguous => {
                key.ambiguous_positions.push(key.bits_alice.len());
                key.bits_alice.push(rec.sent_bit);
                key.bits_bob.push(false);
                key.basis_string.push(rec.sent_basis);
            }
        }
    }
    key
}

/// Reconciliation output. `key` is the receiver's corrected string;
/// `parity_bits_used` is the number of encrypted parity bits the sender
/// disclosed, all drawn from the ledger.
#[derive(Debug, Clone, Serialize)]
pub struct ReconciliationResult {
    pub key: Vec<bool>,
    pub n_err: u64,
    pub parity_bits_used: u64,
    /// Model estimate of the probability that an error survived; None when
    /// no estimate is attached (interactive and discard modes).
    pub residual_error_prob_beta1: Option<f64>,
    /// What the exchange leaked to the eavesdropper.
    pub scenario: ReconciliationScenario,
}

/// Purpose tags for ledger draws.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DrawPurpose {
    Reconciliation,
    Authentication,
}

/// The pre-shared secret-bit pool. Draws hand out deterministic bits from a
/// seeded stream (both parties hold the same pool) and decrement the
/// balance; deposits happen only when a session is accepted.
#[derive(Debug, Clone)]
pub struct SecretBitLedger {
    initial: i64,
    balance: i64,
    drawn_for_rec: u64,
    drawn_for_auth: u64,
    deposited: u64,
    pad: ChaCha8Rng,
}

impl SecretBitLedger {
    pub fn new(initial_balance: u64, pad_seed: u64) -> Self {
        SecretBitLedger {
            initial: initial_balance as i64,
            balance: initial_balance as i64,
            drawn_for_rec: 0,
            drawn_for_auth: 0,
            deposited: 0,
            pad: ChaCha8Rng::seed_from_u64(pad_seed),
        }
    }

    pub fn balance(&self) -> i64 {
        self.balance
    }

    pub fn drawn_for_rec(&self) -> u64 {
        self.drawn_for_rec
    }

    pub fn drawn_for_auth(&self) -> u64 {
        self.drawn_for_auth
    }

    pub fn deposited(&self) -> u64 {
        self.deposited
    }

    /// Draw `n` secret bits for the given purpose.
    pub fn draw(&mut self, n: u64, purpose: DrawPurpose) -> Result<Vec<bool>, PostprocError> {
        if self.balance < n as i64 {
            return Err(PostprocError::LedgerExhausted {
                requested: n,
                available: self.balance,
            });
        }
        self.balance -= n as i64;
        match purpose {
            DrawPurpose::Reconciliation => self.drawn_for_rec += n,
            DrawPurpose::Authentication => self.drawn_for_auth += n,
        }
        Ok((0..n).map(|_| self.pad.random::<bool>()).collect())
    }

    /// Credit newly grown key bits; call only on session acceptance.
    pub fn deposit(&mut self, n: u64) {
        self.deposited += n;
        self.balance += n as i64;
    }

    /// Conservation audit: initial - draws + deposits must equal balance.
    pub fn is_conserved(&self) -> bool {
        self.initial - self.drawn_for_rec as i64 - self.drawn_for_auth as i64
            + self.deposited as i64
            == self.balance
    }
}

/// Descriptor of a randomly chosen hash, announced publicly.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum HashKind {
    /// Random-subset parity matrix for privacy amplification.
    SubsetParityMatrix,
    /// Keyed affine tree for authentication tags.
    AuthPoly,
}

/// Fully deterministic hash description: the seed expands to the matrix (or
/// names the tag family shape).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct HashSpec {
    pub kind: HashKind,
    pub seed: u64,
    /// Output rows (matrix) or tag length (auth).
    pub rows: u64,
    /// Input columns (matrix) or message length (auth).
    pub cols: u64,
}
