//! Closed-form security bounds and budget formulas.
//!
//! Everything in this module is a pure function of its arguments: the binary
//! Shannon information of an error rate, the collision-probability bounds for
//! the three reconciliation scenarios, the privacy-amplification fraction
//! `tau1`, the Hoeffding confidence estimate linking measured to expected
//! disturbance, the authentication cost model, and the asymptotic gain
//! threshold. All logarithms are base 2.

use serde::{Serialize, Serializer};
use std::fmt;

/// Below this base-2 exponent a probability is reported as 0.0 with the
/// underflow flag set (2^-996 is slightly above 1e-300).
const LOG2_UNDERFLOW: f64 = -996.0;

/// Errors raised by the closed-form layer.
#[derive(Debug, Clone, PartialEq)]
pub enum MathError {
    /// An argument fell outside its mathematical domain.
    Domain(String),
    /// An operation was requested for a scenario it is not defined for.
    Scenario(String),
}

impl fmt::Display for MathError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MathError::Domain(s) => write!(f, "domain error: {s}"),
            MathError::Scenario(s) => write!(f, "scenario error: {s}"),
        }
    }
}

impl std::error::Error for MathError {}

/// Errors per sifted bit, a dimensionless fraction in [0, 1].
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize)]
pub struct ErrorRate(f64);

impl ErrorRate {
    pub fn new(value: f64) -> Result<Self, MathError> {
        if value.is_finite() && (0.0..=1.0).contains(&value) {
            Ok(ErrorRate(value))
        } else {
            Err(MathError::Domain(format!(
                "error rate must lie in [0, 1], got {value}"
            )))
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }

    /// The disturbance an error rate maps to when errors are discarded:
    /// e / (1 - e). Undefined at e = 1.
    pub fn to_discarded_disturbance(self) -> Result<Disturbance, MathError> {
        if self.0 >= 1.0 {
            return Err(MathError::Domain(
                "e = 1 has no finite discarded-error disturbance".into(),
            ));
        }
        Disturbance::new(self.0 / (1.0 - self.0))
    }
}

/// Weighted errors per reconciled bit; equals the error rate for corrected
/// errors and e/(1-e) for discarded errors. Nonnegative, may exceed 1.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize)]
pub struct Disturbance(f64);

impl Disturbance {
    pub fn new(value: f64) -> Result<Self, MathError> {
        if value.is_finite() && value >= 0.0 {
            Ok(Disturbance(value))
        } else {
            Err(MathError::Domain(format!(
                "disturbance must be finite and >= 0, got {value}"
            )))
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

/// What reconciliation revealed to the eavesdropper. The three cases carry
/// different collision-probability bounds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum ReconciliationScenario {
    /// Errors were discarded; Eve knows every surviving bit arrived correctly.
    /// No confidence bound on the expected disturbance can be formed from
    /// measured data in this mode.
    Discarded,
    /// Errors were corrected by one-way redundancy; Eve learned nothing
    /// beyond the quantum transmission.
    CorrectedNoLeak,
    /// Errors were corrected interactively; Eve knows the error positions.
    CorrectedLeaked,
}

impl ReconciliationScenario {
    pub fn is_corrected(self) -> bool {
        !matches!(self, ReconciliationScenario::Discarded)
    }

    pub const ALL: [ReconciliationScenario; 3] = [
        ReconciliationScenario::Discarded,
        ReconciliationScenario::CorrectedNoLeak,
        ReconciliationScenario::CorrectedLeaked,
    ];
}

/// A probability kept in base-2 log form so that values like 2^-3599 survive
/// intermediate arithmetic. `value()` reports 0.0 once the probability drops
/// below ~1e-300; `is_underflow()` flags that case.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TinyProb {
    log2: f64,
}

impl TinyProb {
    pub const ONE: TinyProb = TinyProb { log2: 0.0 };

    pub fn from_log2(log2: f64) -> Self {
        TinyProb { log2: log2.min(0.0) }
    }

    pub fn from_value(v: f64) -> Self {
        TinyProb {
            log2: if v <= 0.0 { f64::NEG_INFINITY } else { v.log2().min(0.0) },
        }
    }

    pub fn log2(self) -> f64 {
        self.log2
    }

    pub fn value(self) -> f64 {
        if self.log2 < LOG2_UNDERFLOW {
            0.0
        } else {
            self.log2.exp2()
        }
    }

    pub fn is_underflow(self) -> bool {
        self.log2.is_finite() && self.log2 < LOG2_UNDERFLOW
    }
}

impl Serialize for TinyProb {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        use serde::ser::SerializeStruct;
        let mut s = serializer.serialize_struct("TinyProb", 3)?;
        s.serialize_field("value", &self.value())?;
        s.serialize_field("log2", &self.log2)?;
        s.serialize_field("underflow", &self.is_underflow())?;
        s.end()
    }
}

/// The per-session security parameters fixed before a run.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct SecurityBudget {
    /// Tolerated entropy change on the final key, in bits. Must be > 0.
    pub delta_tol: f64,
    /// Tolerated total probability that Eve's entropy change exceeds
    /// `delta_tol`.
    pub alpha_tol: f64,
    /// Tolerated probability that the parties end up not sharing a key
    /// without noticing.
    pub gamma_tol: f64,
    /// Extra bits removed during privacy amplification beyond the `tau1`
    /// fraction; Eve's expected information decays as 2^-n_s.
    pub n_s: u64,
    /// Authentication tag length in bits, >= 1.
    pub t: u32,
    /// Hoeffding slack added to the measured disturbance. Zero disables the
    /// confidence estimate (alpha1 = 1).
    pub delta: f64,
    /// Weight of ambiguous detections in the disturbance measure.
    pub w_d: f64,
}

impl SecurityBudget {
    pub fn validate(&self) -> Result<(), MathError> {
        if !(self.delta_tol > 0.0) {
            return Err(MathError::Domain("delta_tol must be > 0".into()));
        }
        for (name, p) in [("alpha_tol", self.alpha_tol), ("gamma_tol", self.gamma_tol)] {
            if !(0.0..=1.0).contains(&p) {
                return Err(MathError::Domain(format!("{name} must lie in [0, 1]")));
            }
        }
        if self.t < 1 {
            return Err(MathError::Domain("tag length t must be >= 1".into()));
        }
        if !(self.delta >= 0.0) {
            return Err(MathError::Domain("delta must be >= 0".into()));
        }
        if !(self.w_d > 0.0) {
            return Err(MathError::Domain("w_d must be > 0".into()));
        }
        Ok(())
    }
}

/// Observed counts a disturbance estimate is formed from.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct DisturbanceRecord {
    /// Errors found during reconciliation.
    pub n_err: u64,
    /// Ambiguous (multi-detector) results.
    pub n_d: u64,
    /// Length of the generalized sifted key.
    pub n_sif: u64,
    /// Weight of ambiguous results.
    pub w_d: f64,
}

impl DisturbanceRecord {
    /// Measured disturbance (n_err + w_d * n_d) / n_sif.
    pub fn epsilon_meas(&self) -> Result<Disturbance, MathError> {
        if self.n_sif == 0 {
            return Err(MathError::Domain("n_sif must be > 0".into()));
        }
        Disturbance::new((self.n_err as f64 + self.w_d * self.n_d as f64) / self.n_sif as f64)
    }
}

/// Bit and secret-bit accounting for one session.
#[derive(Debug, Clone, Copy, Default, Serialize)]
pub struct KeyAccounting {
    /// Length of the generalized sifted key.
    pub n_sif: u64,
    /// Length of the reconciled key (= n_sif when errors are corrected).
    pub n_rec: u64,
    /// Length of the final key after privacy amplification.
    pub n_fin: u64,
    /// Errors corrected (or observed) during reconciliation.
    pub n_err: u64,
    /// Ambiguous detections entering the generalized sifted key.
    pub n_d: u64,
    /// Bits on which a multi-photon splitting attack must be assumed.
    pub n_m: u64,
    /// Secret bits drawn to encrypt reconciliation parities.
    pub rec_secret_bits: u64,
    /// Secret bits drawn for the two-direction authentication.
    pub auth_secret_bits: u64,
    /// Security parameter used in privacy amplification.
    pub n_s_used: u64,
    /// Net secret-bit balance change of the session (may be negative).
    pub gain: i64,
}

/// The failure-probability audit attached to a session.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct InfoBound {
    /// Bound on Eve's expected Shannon information on the final key, bits.
    pub shannon_info: f64,
    /// Probability the disturbance estimate failed.
    pub alpha1: TinyProb,
    /// Probability the per-run entropy change exceeds delta_tol.
    pub alpha2: f64,
    /// Probability Eve faked the authentication.
    pub alpha3: TinyProb,
    /// Probability an unshared key goes unnoticed.
    pub gamma: TinyProb,
    /// min(1, alpha1 + alpha2 + alpha3).
    pub alpha_total: f64,
    /// min(1, beta1 + beta2).
    pub beta_total: f64,
}

fn xlog2x(x: f64) -> f64 {
    if x == 0.0 {
        0.0
    } else {
        x * x.log2()
    }
}

/// Binary Shannon information 1 + e log e + (1-e) log(1-e), with 0 log 0 = 0.
pub fn binary_info(e: ErrorRate) -> f64 {
    let e = e.value();
    1.0 + xlog2x(e) + xlog2x(1.0 - e)
}

/// Minimum number of bits which must be revealed, on average, to reconcile a
/// key of length `n` affected by error rate `e`: ceil(n * (1 - I_S(e))).
pub fn shannon_limit(n: u64, e: ErrorRate) -> u64 {
    (n as f64 * (1.0 - binary_info(e))).ceil() as u64
}

/// Upper bound on the one-photon collision probability per bit as a function
/// of the disturbance, for the given reconciliation scenario. Clamped to
/// [1/2, 1].
pub fn pc1_bound(s: ReconciliationScenario, eps: Disturbance) -> f64 {
    let e = eps.value();
    let pc = if e >= 0.5 {
        1.0
    } else {
        match s {
            ReconciliationScenario::Discarded => 0.5 * (1.0 + 4.0 * e - 4.0 * e * e),
            ReconciliationScenario::CorrectedNoLeak => {
                if e <= 0.25 {
                    0.5 + 3.0 * e - 5.0 * e * e
                } else {
                    0.75 + e - e * e
                }
            }
            ReconciliationScenario::CorrectedLeaked => 0.5 + 2.0 * e - 2.0 * e * e,
        }
    };
    pc.clamp(0.5, 1.0)
}

/// The discarded-errors collision bound expressed in the traditional error
/// rate: (1 + 2e - 7e^2) / (2 (1-e)^2). Equals
/// `pc1_bound(Discarded, e/(1-e))` identically.
pub fn pc_discarded_from_error_rate(e: ErrorRate) -> Result<f64, MathError> {
    let e = e.value();
    if e >= 1.0 {
        return Err(MathError::Domain("undefined at e = 1".into()));
    }
    // e = 1/3 maps to disturbance 1/2, where the bound saturates.
    if e >= 1.0 / 3.0 {
        return Ok(1.0);
    }
    let pc = (1.0 + 2.0 * e - 7.0 * e * e) / (2.0 * (1.0 - e) * (1.0 - e));
    Ok(pc.clamp(0.5, 1.0))
}

/// Fraction of the reconciled key that must be discarded during privacy
/// amplification so that Eve's expected information on the final key is one
/// bit: log2(2 * pc1_bound). Clamped to [0, 1].
pub fn tau1(s: ReconciliationScenario, eps: Disturbance) -> f64 {
    (1.0 + pc1_bound(s, eps).log2()).clamp(0.0, 1.0)
}

/// `tau1` extended to keys where `n_m` of the `n_rec` bits may be fully known
/// to Eve through multi-photon splitting.
pub fn tau1_multiphoton(
    eps: Disturbance,
    n_m: u64,
    n_rec: u64,
    s: ReconciliationScenario,
) -> Result<f64, MathError> {
    if n_rec == 0 {
        return Err(MathError::Domain("n_rec must be > 0".into()));
    }
    if n_m > n_rec {
        return Err(MathError::Domain("n_m must not exceed n_rec".into()));
    }
    if n_m == n_rec {
        return Ok(1.0);
    }
    let frac = n_m as f64 / n_rec as f64;
    let scaled = Disturbance::new(eps.value() * n_rec as f64 / (n_rec - n_m) as f64)?;
    Ok(frac + (1.0 - frac) * tau1(s, scaled))
}

/// Probability that the expected disturbance exceeds the measured one by more
/// than `delta`: exp(-2 n_sif delta^2), with the weight correction
/// exp(-2 n_sif delta^2 / w_d^2) once w_d > 1.
///
/// `delta = 0` yields the vacuous bound alpha1 = 1.
pub fn hoeffding_alpha1(n_sif: u64, delta: f64, w_d: f64) -> Result<TinyProb, MathError> {
    if n_sif == 0 {
        return Err(MathError::Domain("n_sif must be > 0".into()));
    }
    if !(delta >= 0.0) {
        return Err(MathError::Domain("delta must be >= 0".into()));
    }
    if !(w_d > 0.0) {
        return Err(MathError::Domain("w_d must be > 0".into()));
    }
    let mut exponent = -2.0 * n_sif as f64 * delta * delta;
    if w_d > 1.0 {
        exponent /= w_d * w_d;
    }
    Ok(TinyProb::from_log2(exponent / std::f64::consts::LN_2))
}

/// Upper confidence bound on the expected disturbance:
/// (n_err + w_d n_d) / n_sif + delta.
pub fn epsilon_max(rec: &DisturbanceRecord, delta: f64) -> Result<Disturbance, MathError> {
    let meas = rec.epsilon_meas()?;
    Disturbance::new(meas.value() + delta)
}

/// Bound on Eve's expected Shannon information after removing `n_s` security
/// bits: log2(2^-n_s + 1).
pub fn final_info_bound(n_s: u64) -> f64 {
    // ln_1p keeps precision once 2^-n_s is tiny.
    (-(n_s as f64)).exp2().ln_1p() / std::f64::consts::LN_2
}

/// Probability that the per-run entropy change exceeds `delta_tol`:
/// min(1, final_info_bound(n_s) / delta_tol).
pub fn alpha2(n_s: u64, delta_tol: f64) -> Result<f64, MathError> {
    if !(delta_tol > 0.0) {
        return Err(MathError::Domain("delta_tol must be > 0".into()));
    }
    Ok((final_info_bound(n_s) / delta_tol).min(1.0))
}

/// Authentication cost and failure probabilities for tag length `t` and
/// message length `m` bits.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct AuthParams {
    /// Secret bits consumed by the two-direction exchange:
    /// 2 * 4 * t * ceil(log2 m).
    pub n_aut: u64,
    /// Probability Eve can fake one authentication: 2^(-t+1).
    pub alpha3: TinyProb,
    /// Probability an unshared key passes authentication, as printed:
    /// 2^(-n_aut+1).
    pub gamma: TinyProb,
}

/// Budget for authenticating an `m`-bit message with a `t`-bit tag. Each
/// direction draws n_aut/2 = 4 t ceil(log2 m) secret bits.
pub fn auth_params(t: u32, m: u64) -> Result<AuthParams, MathError> {
    if t < 1 {
        return Err(MathError::Domain("t must be >= 1".into()));
    }
    if m < 2 {
        return Err(MathError::Domain("message length must be >= 2 bits".into()));
    }
    let log2m = (m as f64).log2().ceil() as u64;
    let n_aut = 2 * 4 * t as u64 * log2m;
    Ok(AuthParams {
        n_aut,
        alpha3: TinyProb::from_log2(1.0 - t as f64),
        gamma: TinyProb::from_log2(1.0 - n_aut as f64),
    })
}

/// Expected net secret-bit gain of a session:
/// (1-beta) { n_sif [1 - tau1(s, eps_max)] - n_s } - N_aut - N_rec.
pub fn expected_gain(
    acct: &KeyAccounting,
    beta: f64,
    s: ReconciliationScenario,
    eps_max: Disturbance,
) -> f64 {
    let n_out = acct.n_sif as f64 * (1.0 - tau1(s, eps_max)) - acct.n_s() as f64;
    (1.0 - beta) * n_out - acct.auth_secret_bits as f64 - acct.rec_secret_bits as f64
}

impl KeyAccounting {
    fn n_s(&self) -> u64 {
        self.n_s_used
    }

    pub fn with_n_s(mut self, n_s: u64) -> Self {
        self.n_s_used = n_s;
        self
    }
}

/// Gain per sifted bit in the limit of ideal error correction and infinite
/// samples: G(e) = I_AB(e) - tau1(s, e).
pub fn asymptotic_gain(s: ReconciliationScenario, e: ErrorRate) -> Result<f64, MathError> {
    if !s.is_corrected() {
        return Err(MathError::Scenario(
            "asymptotic gain is defined for corrected-error scenarios".into(),
        ));
    }
    Ok(binary_info(e) - tau1(s, Disturbance::new(e.value())?))
}

/// Largest tolerable error rate: the positive root of the asymptotic gain,
/// found by bisection on (1e-6, 0.5) to 1e-6. Reports the sentinel 0.5 when
/// the gain does not change sign there.
pub fn gain_threshold(s: ReconciliationScenario) -> Result<ErrorRate, MathError> {
    if !s.is_corrected() {
        return Err(MathError::Scenario(
            "gain threshold is defined for corrected-error scenarios".into(),
        ));
    }
    let g = |e: f64| asymptotic_gain(s, ErrorRate::new(e).unwrap()).unwrap();
    let (mut lo, mut hi) = (1e-6, 0.5);
    if g(lo) <= 0.0 || g(hi) >= 0.0 {
        return ErrorRate::new(0.5);
    }
    while hi - lo > 1e-6 {
        let mid = 0.5 * (lo + hi);
        if g(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    ErrorRate::new(0.5 * (lo + hi))
}

/// Combined failure probabilities of one session.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct FailureBudget {
    pub alpha_total: f64,
    pub beta_total: f64,
}

/// alpha_total = min(1, a1+a2+a3), beta_total = min(1, b1+b2). Every input
/// must be a probability.
pub fn compose_failure_budget(
    alpha1: f64,
    alpha2: f64,
    alpha3: f64,
    beta1: f64,
    beta2: f64,
) -> Result<FailureBudget, MathError> {
    for (name, p) in [
        ("alpha1", alpha1),
        ("alpha2", alpha2),
        ("alpha3", alpha3),
        ("beta1", beta1),
        ("beta2", beta2),
    ] {
        if !(0.0..=1.0).contains(&p) {
            return Err(MathError::Domain(format!(
                "{name} must lie in [0, 1], got {p}"
            )));
        }
    }
    Ok(FailureBudget {
        alpha_total: (alpha1 + alpha2 + alpha3).min(1.0),
        beta_total: (beta1 + beta2).min(1.0),
    })
}
