//! Detection-unit probability operator measures on fixed photon-number
//! sectors.
//!
//! Two set-ups are modeled. The active unit switches a single polarization
//! analyzer between the two bases at random; the passive unit splits the
//! signal onto two analyzers. Both report one of six outcomes: vacuum, one of
//! four unambiguous single-detector results, or the ambiguous multi-detector
//! result. Sectors are spanned by `|j, N-j>` number states of the two
//! rectilinear modes.

use super::{AttackError, Basis};
use crate::security_math::ReconciliationScenario;
use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum DetectorKind {
    Active,
    Passive,
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct DetectorModel {
    pub kind: DetectorKind,
    /// Fock-expansion truncation; states above it are rejected.
    pub max_photons: u32,
}

impl DetectorModel {
    pub fn new(kind: DetectorKind, max_photons: u32) -> Result<Self, AttackError> {
        if max_photons < 1 {
            return Err(AttackError::Domain("max_photons must be >= 1".into()));
        }
        Ok(DetectorModel { kind, max_photons })
    }
}

/// A pure state of one photon-number sector, stored as real amplitudes over
/// the rectilinear number basis `|j, N-j>` for j = 0..=N.
#[derive(Debug, Clone, PartialEq)]
pub struct SectorState {
    total: u32,
    amps: Vec<f64>,
}

fn ln_factorial(n: u32) -> f64 {
    (2..=n as u64).map(|k| (k as f64).ln()).sum()
}

/// Amplitudes of a two-mode number state after the mode substitution
/// `old_0 -> u00 new_0 + u01 new_1`, `old_1 -> u10 new_0 + u11 new_1`.
fn rotate_amps(total: u32, amps: &[f64], u: [[f64; 2]; 2]) -> Vec<f64> {
    let n = total as usize;
    let mut out = vec![0.0; n + 1];
    for (j, &amp) in amps.iter().enumerate() {
        if amp == 0.0 {
            continue;
        }
        // Expand (u00 x + u01 y)^j (u10 x + u11 y)^(n-j) as a polynomial in
        // x, then convert monomial coefficients to normalized amplitudes.
        let mut poly = vec![0.0; n + 1];
        let mut first = vec![0.0; j + 1];
        for a in 0..=j {
            first[a] = binomial(j as u32, a as u32)
                * u[0][0].powi(a as i32)
                * u[0][1].powi((j - a) as i32);
        }
        let m = n - j;
        for b in 0..=m {
            let second =
                binomial(m as u32, b as u32) * u[1][0].powi(b as i32) * u[1][1].powi((m - b) as i32);
            for a in 0..=j {
                poly[a + b] += first[a] * second;
            }
        }
        let norm_j = 0.5 * (ln_factorial(j as u32) + ln_factorial(m as u32));
        for (a, c) in poly.iter().enumerate() {
            if *c != 0.0 {
                let norm_a = 0.5 * (ln_factorial(a as u32) + ln_factorial((n - a) as u32));
                out[a] += amp * c * (norm_a - norm_j).exp();
            }
        }
    }
    out
}

fn binomial(n: u32, k: u32) -> f64 {
    (ln_factorial(n) - ln_factorial(k) - ln_factorial(n - k)).exp().round()
}

impl SectorState {
    pub fn vacuum() -> Self {
        SectorState { total: 0, amps: vec![1.0] }
    }

    /// `|n, m>` with n photons in the bit-0 mode and m in the bit-1 mode of
    /// the given basis.
    pub fn fock(n: u32, m: u32, basis: Basis) -> Self {
        let total = n + m;
        let mut amps = vec![0.0; total as usize + 1];
        amps[n as usize] = 1.0;
        match basis {
            Basis::Plus => SectorState { total, amps },
            Basis::Times => {
                // Diagonal creation operators in rectilinear ones:
                // d0 = (p0 - p1)/sqrt2, d1 = (p0 + p1)/sqrt2.
                let r = 1.0 / std::f64::consts::SQRT_2;
                let rotated = rotate_amps(total, &amps, [[r, -r], [r, r]]);
                SectorState { total, amps: rotated }
            }
        }
    }

    /// Arbitrary normalized amplitudes over `|j, N-j>` in the rectilinear
    /// basis.
    pub fn new(amps: Vec<f64>) -> Result<Self, AttackError> {
        if amps.is_empty() {
            return Err(AttackError::Domain("empty amplitude vector".into()));
        }
        let total = (amps.len() - 1) as u32;
        let s = SectorState { total, amps };
        if (s.norm2() - 1.0).abs() > 1e-9 {
            return Err(AttackError::Domain("state is not normalized".into()));
        }
        Ok(s)
    }

    pub fn total_photons(&self) -> u32 {
        self.total
    }

    fn norm2(&self) -> f64 {
        self.amps.iter().map(|a| a * a).sum()
    }

    /// Amplitudes re-expressed over the diagonal-basis number states.
    fn to_times(&self) -> Vec<f64> {
        let r = 1.0 / std::f64::consts::SQRT_2;
        // Rectilinear creation operators in diagonal ones:
        // p0 = (d0 + d1)/sqrt2, p1 = (d1 - d0)/sqrt2.
        rotate_amps(self.total, &self.amps, [[r, r], [-r, r]])
    }
}

/// Outcome probabilities of one detection: vacuum, the four unambiguous
/// results, and the ambiguous (dual-click) result.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OutcomeProbs {
    pub vac: f64,
    pub zero_plus: f64,
    pub one_plus: f64,
    pub zero_times: f64,
    pub one_times: f64,
    pub dual: f64,
}

impl OutcomeProbs {
    pub fn sum(&self) -> f64 {
        self.vac + self.zero_plus + self.one_plus + self.zero_times + self.one_times + self.dual
    }
}

/// Outcome distribution of the detection unit on a photon-number-sector
/// state.
pub fn pom_outcome_probs(d: &DetectorModel, state: &SectorState) -> Result<OutcomeProbs, AttackError> {
    if state.total > d.max_photons {
        return Err(AttackError::Domain(format!(
            "state has {} photons, detector truncated at {}",
            state.total, d.max_photons
        )));
    }
    if (state.norm2() - 1.0).abs() > 1e-9 {
        return Err(AttackError::Domain("state is not normalized".into()));
    }
    if state.total == 0 {
        return Ok(OutcomeProbs {
            vac: 1.0,
            zero_plus: 0.0,
            one_plus: 0.0,
            zero_times: 0.0,
            one_times: 0.0,
            dual: 0.0,
        });
    }
    let n = state.total as usize;
    let cp = &state.amps;
    let ct = state.to_times();
    // Mass with every photon in a single mode, per basis. Index n holds the
    // bit-0 mode, index 0 the bit-1 mode.
    let all0p = cp[n] * cp[n];
    let all1p = cp[0] * cp[0];
    let all0t = ct[n] * ct[n];
    let all1t = ct[0] * ct[0];
    let bothp = (1.0 - all0p - all1p).max(0.0);
    let botht = (1.0 - all0t - all1t).max(0.0);

    let probs = match d.kind {
        DetectorKind::Active => OutcomeProbs {
            vac: 0.0,
            zero_plus: 0.5 * all0p,
            one_plus: 0.5 * all1p,
            zero_times: 0.5 * all0t,
            one_times: 0.5 * all1t,
            dual: 0.5 * bothp + 0.5 * botht,
        },
        DetectorKind::Passive => {
            let w = 0.5f64.powi(state.total as i32);
            OutcomeProbs {
                vac: 0.0,
                zero_plus: w * all0p,
                one_plus: w * all1p,
                zero_times: w * all0t,
                one_times: w * all1t,
                dual: (0.5 - w) * (all0p + all1p + all0t + all1t) + 0.5 * bothp + 0.5 * botht,
            }
        }
    };
    Ok(probs)
}

/// Lower bound on the ambiguous-to-accepted ratio a multi-photon signal
/// inflicts on the passive unit: (1/2 - 2^-n) / 2^-n, at least 1 for n >= 2.
/// The same expression bounds both the discarded and the corrected
/// disturbance denominators.
pub fn multiphoton_disturbance_floor(
    n: u32,
    _mode: ReconciliationScenario,
) -> Result<f64, AttackError> {
    if n < 2 {
        return Err(AttackError::Domain("the floor applies to n >= 2 photons".into()));
    }
    Ok((0.5 - 0.5f64.powi(n as i32)) / 0.5f64.powi(n as i32))
}
