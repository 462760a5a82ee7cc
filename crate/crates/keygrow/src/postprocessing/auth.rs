//! Wegman-Carter authentication: a tree of keyed affine maps over binary
//! fields compresses the message to a t-bit tag.
//!
//! Each level splits the running string into 2s-bit chunks and maps every
//! chunk through x -> a*x + b in GF(2^{2s}), keeping the low s bits; the
//! final level keeps t bits instead. The intermediate width is s = t + l
//! with l chosen so that the per-level collision probabilities sum below
//! 2^-t, which makes the whole family's collision probability at most
//! 2^(-t+1). Every level consumes 4s fresh key bits (a and b), which is
//! what prices the printed hash-function-length budget.

use super::{DrawPurpose, PostprocError, SecretBitLedger};
use crate::gf2poly::Gf2k;
use serde::Serialize;

/// Shape of one tag computation: intermediate width and level count fixed
/// by (t, message length).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct TreePlan {
    /// Intermediate output width s = t + l.
    s: u32,
    /// Halving levels plus the final level.
    levels: u32,
    /// Total key bits consumed: 4 s levels.
    key_bits: u64,
}

fn levels_for(m_bits: u64, s: u32) -> u32 {
    let chunk = 2 * s as u64;
    let mut data = m_bits;
    let mut levels = 1; // the final level always runs
    while data > chunk {
        data = data.div_ceil(chunk) * s as u64;
        levels += 1;
    }
    levels
}

fn plan(t: u32, m_bits: u64) -> Result<TreePlan, PostprocError> {
    if t == 0 {
        return Err(PostprocError::Domain("tag length t must be >= 1".into()));
    }
    if m_bits == 0 {
        return Err(PostprocError::Domain("cannot authenticate an empty message".into()));
    }
    for ell in 1..=40u32 {
        let s = t + ell;
        if 2 * s > 126 {
            return Err(PostprocError::Domain(format!(
                "tag length {t} needs a field wider than 126 bits"
            )));
        }
        let levels = levels_for(m_bits, s);
        // Collision budget: (levels-1) * 2^-s + 2^-t <= 2^(1-t) requires
        // levels - 1 <= 2^ell.
        if (levels as u64 - 1) <= (1u64 << ell.min(63)) {
            return Ok(TreePlan { s, levels, key_bits: 4 * s as u64 * levels as u64 });
        }
    }
    Err(PostprocError::Domain("no workable intermediate width".into()))
}

/// Key bits one tag computation consumes for a message of `m_bits` bits.
pub fn wegman_carter_key_bits(t: u32, m_bits: u64) -> Result<u64, PostprocError> {
    Ok(plan(t, m_bits)?.key_bits)
}

/// Reads big-endian field elements out of a bit-string key.
struct KeyReader<'a> {
    bits: &'a [bool],
    pos: usize,
}

impl<'a> KeyReader<'a> {
    fn take(&mut self, width: u32) -> Result<u128, PostprocError> {
        if self.pos + width as usize > self.bits.len() {
            return Err(PostprocError::InsufficientKey {
                needed: (self.pos + width as usize) as u64,
                available: self.bits.len() as u64,
            });
        }
        let mut v = 0u128;
        for _ in 0..width {
            v = (v << 1) | self.bits[self.pos] as u128;
            self.pos += 1;
        }
        Ok(v)
    }
}

fn chunk_to_element(bits: &[bool], start: usize, width: usize) -> u128 {
    let mut v = 0u128;
    for i in 0..width {
        let bit = bits.get(start + i).copied().unwrap_or(false);
        v = (v << 1) | bit as u128;
    }
    v
}

fn push_low_bits(out: &mut Vec<bool>, value: u128, width: u32) {
    for i in (0..width).rev() {
        out.push((value >> i) & 1 == 1);
    }
}

/// Hash `message` to a t-bit tag under `hash_key`. Bit-exact: the same
/// inputs give the same tag on any implementation of this construction.
pub fn wegman_carter_tag(
    message: &[bool],
    hash_key: &[bool],
    t: u32,
) -> Result<Vec<bool>, PostprocError> {
    let plan = plan(t, message.len() as u64)?;
    if (hash_key.len() as u64) < plan.key_bits {
        return Err(PostprocError::InsufficientKey {
            needed: plan.key_bits,
            available: hash_key.len() as u64,
        });
    }
    let field = Gf2k::new(2 * plan.s);
    let chunk_bits = 2 * plan.s as usize;
    let mut reader = KeyReader { bits: hash_key, pos: 0 };
    let mut data = message.to_vec();

    for level in 0..plan.levels {
        let a = reader.take(2 * plan.s)?;
        let b = reader.take(2 * plan.s)?;
        let last = level == plan.levels - 1;
        let out_width = if last { t } else { plan.s };
        let chunks = data.len().div_ceil(chunk_bits).max(1);
        let mut next = Vec::with_capacity(chunks * out_width as usize);
        for c in 0..chunks {
            let x = chunk_to_element(&data, c * chunk_bits, chunk_bits);
            let y = field.add(field.mul(a, x), b);
            push_low_bits(&mut next, y, out_width);
        }
        data = next;
        if last {
            break;
        }
    }
    debug_assert_eq!(data.len(), t as usize);
    Ok(data)
}

/// One party's view of what must be authenticated: the sift announcement,
/// the step-3 time stamp, and the final key.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AuthView {
    pub announcement: Vec<bool>,
    pub time_stamp: u64,
    pub final_key: Vec<bool>,
}

impl AuthView {
    /// The authenticated message: announcement, then the 64 stamp bits,
    /// then the key.
    pub fn message(&self) -> Vec<bool> {
        let mut m = self.announcement.clone();
        for i in (0..64).rev() {
            m.push((self.time_stamp >> i) & 1 == 1);
        }
        m.extend_from_slice(&self.final_key);
        m
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum AuthOutcome {
    /// Both directions verified.
    Ok,
    /// A tag comparison failed: either residual errors or a substituted
    /// message.
    Mismatch,
    /// The exchange itself was malformed (view sizes disagree), so the tags
    /// never became comparable.
    Tampered,
}

/// Symmetric two-direction authentication. Each direction draws the printed
/// budget of 4 t ceil(log2 m) secret bits for its hash key; the tag itself
/// travels unencrypted and may be altered by `tag_transport` (the classical
/// channel). Returns the outcome and the secret bits drawn.
pub fn authenticate_exchange(
    alice: &AuthView,
    bob: &AuthView,
    ledger: &mut SecretBitLedger,
    t: u32,
    mut tag_transport: impl FnMut(bool, Vec<bool>) -> Vec<bool>,
) -> Result<(AuthOutcome, u64), PostprocError> {
    let msg_a = alice.message();
    let msg_b = bob.message();
    let mut drawn = 0u64;
    let mut verify = |sender_msg: &[bool],
                      receiver_msg: &[bool],
                      a_to_b: bool,
                      ledger: &mut SecretBitLedger,
                      drawn: &mut u64|
     -> Result<bool, PostprocError> {
        let m = sender_msg.len() as u64;
        if m < 2 {
            return Err(PostprocError::Domain("message too short to authenticate".into()));
        }
        // The printed budget 4 t ceil(log2 m) covers the tree for tag
        // lengths from 16 up; short tags on long messages need the actual
        // construction cost instead.
        let printed = 4 * t as u64 * (m as f64).log2().ceil() as u64;
        let budget = printed.max(wegman_carter_key_bits(t, m)?);
        let key = ledger.draw(budget, DrawPurpose::Authentication)?;
        *drawn += budget;
        let tag = wegman_carter_tag(sender_msg, &key, t)?;
        let delivered = tag_transport(a_to_b, tag);
        if delivered.len() != t as usize {
            return Ok(false);
        }
        // The receiver can only compare against the tag of its own view;
        // key lengths differ when the views differ in size, which reads as
        // a failed comparison.
        if receiver_msg.len() != sender_msg.len() {
            return Ok(false);
        }
        let expected = wegman_carter_tag(receiver_msg, &key, t)?;
        Ok(delivered == expected)
    };

    if msg_a.len() != msg_b.len() {
        // Views of different shape: still burn both directions' budgets, as
        // the parties would, then report the structural failure.
        let ok_ab = verify(&msg_a, &msg_a, true, ledger, &mut drawn)?;
        let ok_ba = verify(&msg_b, &msg_b, false, ledger, &mut drawn)?;
        let _ = (ok_ab, ok_ba);
        return Ok((AuthOutcome::Tampered, drawn));
    }

    let ok_ab = verify(&msg_a, &msg_b, true, ledger, &mut drawn)?;
    let ok_ba = verify(&msg_b, &msg_a, false, ledger, &mut drawn)?;
    Ok((if ok_ab && ok_ba { AuthOutcome::Ok } else { AuthOutcome::Mismatch }, drawn))
}
