//! Operator-level model of individual eavesdropping attacks on one-photon
//! signals.
//!
//! An attack is a family of real Kraus operators `A_k` mapping the two
//! dimensional signal space into Bob's one-photon space. Only the four
//! transition-amplitude vectors survive into the analysis: component `k` of
//! `a_psi_psi'` is the amplitude from signal state `psi'` (diagonal basis
//! written in the rectilinear one) to detection state `psi`. One family
//! serves both bases; the diagonal-basis amplitudes are the derived tilde
//! vectors. Everything downstream — disturbance, per-bit collision
//! probability, Monte Carlo outcome sampling — is a function of these four
//! vectors.

mod brute_force;
mod pom;

pub use brute_force::{brute_force_max_pc, GridSpec};
pub use pom::{
    multiphoton_disturbance_floor, pom_outcome_probs, DetectorKind, DetectorModel, OutcomeProbs,
    SectorState,
};

use crate::security_math::{Disturbance, ReconciliationScenario};
use rand::Rng;
use serde::Serialize;
use std::fmt;

/// Tolerance on the trace-nonincreasing (completeness) check.
const COMPLETENESS_TOL: f64 = 1e-9;
/// Probabilities below this are treated as never occurring.
const PROB_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub enum AttackError {
    DimensionMismatch(String),
    NotTraceNonincreasing { max_eigenvalue: f64 },
    Domain(String),
    Infeasible(String),
    Parse(String),
}

impl fmt::Display for AttackError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AttackError::DimensionMismatch(s) => write!(f, "dimension mismatch: {s}"),
            AttackError::NotTraceNonincreasing { max_eigenvalue } => write!(
                f,
                "strategy is not trace-nonincreasing (max eigenvalue {max_eigenvalue})"
            ),
            AttackError::Domain(s) => write!(f, "domain error: {s}"),
            AttackError::Infeasible(s) => write!(f, "infeasible: {s}"),
            AttackError::Parse(s) => write!(f, "parse error: {s}"),
        }
    }
}

impl std::error::Error for AttackError {}

/// Signal and measurement basis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum Basis {
    /// Rectilinear.
    Plus,
    /// Diagonal.
    Times,
}

/// What Bob's detection unit reports for one signal.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum DetectionOutcome {
    /// No detector fired.
    Vacuum,
    /// Exactly one detector fired: a deterministic bit in the given basis.
    Unambiguous { bit: bool, basis: Basis },
    /// More than one detector fired.
    Ambiguous,
}

fn dot(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| a * b).sum()
}

fn norm2(x: &[f64]) -> f64 {
    dot(x, x)
}

/// Largest eigenvalue of the symmetric 2x2 matrix [[m00, m01], [m01, m11]].
fn sym2_max_eigenvalue(m00: f64, m01: f64, m11: f64) -> f64 {
    let half_tr = 0.5 * (m00 + m11);
    half_tr + (0.25 * (m00 - m11) * (m00 - m11) + m01 * m01).sqrt()
}

/// Eve's attack on one-photon signals: four real transition-amplitude
/// vectors of a common dimension, one component per measurement outcome.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KrausVectorStrategy {
    a00: Vec<f64>,
    a01: Vec<f64>,
    a10: Vec<f64>,
    a11: Vec<f64>,
}

/// The same strategy expressed in the diagonal basis, i.e. the four signed
/// half-sum combinations of the plain vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct TildeVectors {
    pub b00t: Vec<f64>,
    pub b01t: Vec<f64>,
    pub b10t: Vec<f64>,
    pub b11t: Vec<f64>,
}

impl KrausVectorStrategy {
    /// Build and validate a strategy. The vectors must share a dimension
    /// >= 1 and the completeness matrix must satisfy M <= I (loss shows up
    /// as the missing trace).
    pub fn new(
        a00: Vec<f64>,
        a01: Vec<f64>,
        a10: Vec<f64>,
        a11: Vec<f64>,
    ) -> Result<Self, AttackError> {
        let d = a00.len();
        if d == 0 {
            return Err(AttackError::DimensionMismatch("dimension must be >= 1".into()));
        }
        if a01.len() != d || a10.len() != d || a11.len() != d {
            return Err(AttackError::DimensionMismatch(format!(
                "vector lengths {} {} {} {} differ",
                d,
                a01.len(),
                a10.len(),
                a11.len()
            )));
        }
        for v in [&a00, &a01, &a10, &a11] {
            if v.iter().any(|x| !x.is_finite()) {
                return Err(AttackError::Domain("non-finite component".into()));
            }
        }
        let s = KrausVectorStrategy { a00, a01, a10, a11 };
        let max_eig = s.completeness_max_eigenvalue();
        if max_eig > 1.0 + COMPLETENESS_TOL {
            return Err(AttackError::NotTraceNonincreasing { max_eigenvalue: max_eig });
        }
        Ok(s)
    }

    /// Build from arbitrary vectors, rescaling so the completeness matrix
    /// just touches the identity (the largest admissible signal flux).
    pub fn new_rescaled(
        a00: Vec<f64>,
        a01: Vec<f64>,
        a10: Vec<f64>,
        a11: Vec<f64>,
    ) -> Result<Self, AttackError> {
        let mut s = KrausVectorStrategy { a00, a01, a10, a11 };
        let d = s.a00.len();
        if d == 0 || s.a01.len() != d || s.a10.len() != d || s.a11.len() != d {
            return Err(AttackError::DimensionMismatch("vector lengths differ".into()));
        }
        let max_eig = s.completeness_max_eigenvalue();
        if max_eig <= 0.0 || !max_eig.is_finite() {
            return Err(AttackError::Domain("zero or non-finite strategy".into()));
        }
        let scale = 1.0 / max_eig.sqrt();
        for v in [&mut s.a00, &mut s.a01, &mut s.a10, &mut s.a11] {
            for x in v.iter_mut() {
                *x *= scale;
            }
        }
        Ok(s)
    }

    pub fn dim(&self) -> usize {
        self.a00.len()
    }

    pub fn vectors(&self) -> [&[f64]; 4] {
        [&self.a00, &self.a01, &self.a10, &self.a11]
    }

    fn completeness_max_eigenvalue(&self) -> f64 {
        let m00 = norm2(&self.a00) + norm2(&self.a10);
        let m11 = norm2(&self.a01) + norm2(&self.a11);
        let m01 = dot(&self.a00, &self.a01) + dot(&self.a10, &self.a11);
        sym2_max_eigenvalue(m00, m01, m11)
    }

    /// The lossless identity channel; Eve learns nothing.
    pub fn identity() -> Self {
        KrausVectorStrategy {
            a00: vec![1.0],
            a01: vec![0.0],
            a10: vec![0.0],
            a11: vec![1.0],
        }
    }

    /// Measure in a random basis, resend what was measured. Four outcomes:
    /// (basis, result). Causes a 25% sifted-key error rate.
    pub fn intercept_resend() -> Self {
        let h = 0.5 / std::f64::consts::SQRT_2; // (1/sqrt2) * 1/2 overlaps
        let r = 1.0 / std::f64::consts::SQRT_2;
        KrausVectorStrategy {
            a00: vec![r, 0.0, h, h],
            a01: vec![0.0, 0.0, -h, h],
            a10: vec![0.0, 0.0, -h, h],
            a11: vec![0.0, r, h, h],
        }
    }

    /// Measure every signal in the rectilinear basis and resend.
    pub fn measure_plus_resend() -> Self {
        KrausVectorStrategy {
            a00: vec![1.0, 0.0],
            a01: vec![0.0, 0.0],
            a10: vec![0.0, 0.0],
            a11: vec![0.0, 1.0],
        }
    }

    /// Random trace-nonincreasing strategy of the given dimension; used by
    /// the soundness tests that sweep evaluate() against the closed bounds.
    pub fn random_feasible<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Self {
        assert!(dim >= 1);
        loop {
            let mut v = || (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect::<Vec<f64>>();
            let (a00, a01, a10, a11) = (v(), v(), v(), v());
            if let Ok(s) = KrausVectorStrategy::new_rescaled(a00, a01, a10, a11) {
                return s;
            }
        }
    }

    /// The diagonal-basis amplitude vectors.
    pub fn tilde(&self) -> TildeVectors {
        tilde_from_plain(self)
    }

    /// Serialize as four whitespace-separated rows (a00, a01, a10, a11).
    pub fn to_text(&self) -> String {
        let row = |v: &[f64]| {
            v.iter().map(|x| format!("{x}")).collect::<Vec<_>>().join(" ")
        };
        format!(
            "{}\n{}\n{}\n{}\n",
            row(&self.a00),
            row(&self.a01),
            row(&self.a10),
            row(&self.a11)
        )
    }

    /// Parse the plain-text matrix format written by [`Self::to_text`].
    pub fn from_text(text: &str) -> Result<Self, AttackError> {
        let mut rows = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let row: Result<Vec<f64>, _> = line.split_whitespace().map(str::parse::<f64>).collect();
            rows.push(row.map_err(|e| AttackError::Parse(format!("row {}: {e}", i + 1)))?);
        }
        if rows.len() != 4 {
            return Err(AttackError::Parse(format!(
                "expected 4 rows (a00 a01 a10 a11), found {}",
                rows.len()
            )));
        }
        let a11 = rows.pop().unwrap();
        let a10 = rows.pop().unwrap();
        let a01 = rows.pop().unwrap();
        let a00 = rows.pop().unwrap();
        KrausVectorStrategy::new(a00, a01, a10, a11)
    }
}

/// The four signed half-sum combinations relating diagonal-basis amplitudes
/// to the plain vectors.
pub fn tilde_from_plain(s: &KrausVectorStrategy) -> TildeVectors {
    let d = s.dim();
    let mut t = TildeVectors {
        b00t: vec![0.0; d],
        b01t: vec![0.0; d],
        b10t: vec![0.0; d],
        b11t: vec![0.0; d],
    };
    for k in 0..d {
        let (p00, p01, p10, p11) = (s.a00[k], s.a01[k], s.a10[k], s.a11[k]);
        t.b00t[k] = 0.5 * (p00 - p10 - p01 + p11);
        t.b01t[k] = 0.5 * (p00 - p10 + p01 - p11);
        t.b10t[k] = 0.5 * (p00 + p10 - p01 - p11);
        t.b11t[k] = 0.5 * (p00 + p10 + p01 + p11);
    }
    t
}

/// Disturbance, collision probability and per-signal sector probabilities of
/// one strategy under one reconciliation scenario.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct AttackEvaluation {
    /// One-photon disturbance implied by the strategy.
    pub eps1: Disturbance,
    /// Expected per-bit collision probability; NaN when `degenerate`.
    pub pc1: f64,
    /// Probability a signal enters the generalized sifted key.
    pub p_sif: f64,
    /// Probability a signal enters the reconciled key.
    pub p_rec: f64,
    /// Probability a signal enters the sifted key as an error.
    pub p_err: f64,
    /// Probability of an ambiguous result (always 0 in the one-photon sector).
    pub p_d: f64,
    /// Set when no signal is ever accepted, leaving pc1 undefined.
    pub degenerate: bool,
}

/// Sum of (x^4 + y^4) / (x^2 + y^2) over components; zero-denominator
/// components occur with probability zero and contribute nothing.
fn quartic_ratio_sum(x: &[f64], y: &[f64]) -> f64 {
    x.iter()
        .zip(y)
        .map(|(&a, &b)| {
            let den = a * a + b * b;
            if den <= PROB_FLOOR * PROB_FLOOR {
                0.0
            } else {
                (a.powi(4) + b.powi(4)) / den
            }
        })
        .sum()
}

/// Sum of (t0^2 + t1^2) / (t0 + t1) over components, with t0, t1 the
/// per-outcome acceptance masses of the two signal values in one basis.
fn corrected_ratio_sum(v0a: &[f64], v0b: &[f64], v1a: &[f64], v1b: &[f64]) -> f64 {
    (0..v0a.len())
        .map(|k| {
            let t0 = v0a[k] * v0a[k] + v0b[k] * v0b[k];
            let t1 = v1a[k] * v1a[k] + v1b[k] * v1b[k];
            let den = t0 + t1;
            if den <= PROB_FLOOR * PROB_FLOOR {
                0.0
            } else {
                (t0 * t0 + t1 * t1) / den
            }
        })
        .sum()
}

/// Evaluate a strategy: one-photon disturbance and collision probability for
/// the given reconciliation scenario. `w_d` only enters through the
/// disturbance definition; the one-photon sector produces no ambiguous
/// results, so p_d = 0 here and the weight is inert.
pub fn evaluate(
    s: &KrausVectorStrategy,
    scenario: ReconciliationScenario,
    _w_d: f64,
) -> AttackEvaluation {
    let t = s.tilde();
    let n00 = norm2(&s.a00);
    let n01 = norm2(&s.a01);
    let n10 = norm2(&s.a10);
    let n11 = norm2(&s.a11);
    let nt00 = norm2(&t.b00t);
    let nt11 = norm2(&t.b11t);

    let p_sif = 0.25 * (n00 + n01 + n10 + n11);
    // Mass arriving correctly, which is the reconciled mass when errors are
    // discarded.
    let p_correct = 0.125 * (n00 + n11 + nt00 + nt11);
    let p_err = (p_sif - p_correct).max(0.0);

    let (p_rec, eps_den, pc_num) = match scenario {
        ReconciliationScenario::Discarded => (
            p_correct,
            p_correct,
            quartic_ratio_sum(&s.a00, &s.a11) + quartic_ratio_sum(&t.b00t, &t.b11t),
        ),
        ReconciliationScenario::CorrectedNoLeak => (
            p_sif,
            p_sif,
            corrected_ratio_sum(&s.a00, &s.a10, &s.a01, &s.a11)
                + corrected_ratio_sum(&t.b00t, &t.b10t, &t.b01t, &t.b11t),
        ),
        ReconciliationScenario::CorrectedLeaked => (
            p_sif,
            p_sif,
            quartic_ratio_sum(&s.a00, &s.a11)
                + quartic_ratio_sum(&t.b00t, &t.b11t)
                + quartic_ratio_sum(&s.a01, &s.a10)
                + quartic_ratio_sum(&t.b01t, &t.b10t),
        ),
    };

    if eps_den <= PROB_FLOOR {
        return AttackEvaluation {
            eps1: Disturbance::new(0.0).unwrap(),
            pc1: f64::NAN,
            p_sif,
            p_rec,
            p_err,
            p_d: 0.0,
            degenerate: true,
        };
    }

    AttackEvaluation {
        eps1: Disturbance::new(p_err / eps_den).unwrap(),
        pc1: pc_num / (8.0 * p_rec),
        p_sif,
        p_rec,
        p_err,
        p_d: 0.0,
        degenerate: false,
    }
}

/// Construct the strategy that realizes the printed optimum for the given
/// scenario and disturbance. For the discarded and leaked-positions bounds
/// the construction attains the closed form exactly; the no-leak bound is
/// not sharp and its construction realizes the printed parameters without
/// reaching it.
pub fn build_optimal_strategy(
    scenario: ReconciliationScenario,
    eps: Disturbance,
) -> Result<KrausVectorStrategy, AttackError> {
    let e = eps.value();
    if !(0.0..=0.5).contains(&e) {
        return Err(AttackError::Domain(format!(
            "optimal strategies are defined for disturbance in [0, 1/2], got {e}"
        )));
    }
    // angle pairs (cos, sin) with sin(2 psi) = c realize |A| cos phi = c
    // between the mirrored vectors (x, y) and (y, x).
    let mirrored_pair = |c: f64| {
        let psi = 0.5 * c.clamp(-1.0, 1.0).asin();
        (psi.cos(), psi.sin())
    };
    let (c1, s1) = mirrored_pair(1.0 - 2.0 * e);
    let zeros = || vec![0.0; 4];

    let raw = match scenario {
        ReconciliationScenario::Discarded => {
            // |A01| = |A10| = sqrt(eps) |A00|, both along A00 + A11.
            let b = e.sqrt();
            let h = b / std::f64::consts::SQRT_2;
            let mut a00 = zeros();
            let mut a11 = zeros();
            let mut a01 = zeros();
            a00[0] = c1;
            a00[1] = s1;
            a11[0] = s1;
            a11[1] = c1;
            a01[0] = h;
            a01[1] = h;
            let a10 = a01.clone();
            (a00, a01, a10, a11)
        }
        ReconciliationScenario::CorrectedLeaked => {
            // A01 and A10 proportional to A00 and A11 with ratio
            // sqrt(eps / (1 - eps)).
            let r = (e / (1.0 - e)).sqrt();
            let mut a00 = zeros();
            let mut a11 = zeros();
            a00[0] = c1;
            a00[1] = s1;
            a11[0] = s1;
            a11[1] = c1;
            let a01 = a00.iter().map(|x| r * x).collect::<Vec<_>>();
            let a10 = a11.iter().map(|x| r * x).collect::<Vec<_>>();
            (a00, a01, a10, a11)
        }
        ReconciliationScenario::CorrectedNoLeak => {
            let r = (e / (1.0 - e)).sqrt();
            let mut a00 = zeros();
            let mut a11 = zeros();
            let mut a01 = zeros();
            let mut a10 = zeros();
            if e <= 0.25 {
                let (c, s) = mirrored_pair((1.0 - 3.0 * e) / (1.0 - e));
                a00[0] = c;
                a00[1] = s;
                a11[0] = s;
                a11[1] = c;
                // parallel error vectors orthogonal to the a00/a11 plane
                a01[2] = r;
                a10[2] = r;
            } else {
                let (c, s) = mirrored_pair((1.0 - 2.0 * e) / (2.0 * (1.0 - e)));
                let (c2, s2) = mirrored_pair((1.0 - 2.0 * e) / (2.0 * e));
                a00[0] = c;
                a00[1] = s;
                a11[0] = s;
                a11[1] = c;
                a01[2] = r * c2;
                a01[3] = r * s2;
                a10[2] = r * s2;
                a10[3] = r * c2;
            }
            (a00, a01, a10, a11)
        }
    };
    KrausVectorStrategy::new_rescaled(raw.0, raw.1, raw.2, raw.3)
}

/// Draw one signal through the attack: Eve's outcome (None when the signal
/// is lost) and Bob's detection result. Deterministic given the generator
/// state.
pub fn sample_outcome<R: Rng + ?Sized>(
    s: &KrausVectorStrategy,
    signal: (bool, Basis),
    rng: &mut R,
) -> (Option<usize>, DetectionOutcome) {
    let r = 1.0 / std::f64::consts::SQRT_2;
    // Signal state in rectilinear coordinates; |0x> = (|0+> - |1+>)/sqrt2.
    let (v0, v1) = match signal {
        (false, Basis::Plus) => (1.0, 0.0),
        (true, Basis::Plus) => (0.0, 1.0),
        (false, Basis::Times) => (r, -r),
        (true, Basis::Times) => (r, r),
    };

    let d = s.dim();
    let mut masses = Vec::with_capacity(d);
    let mut total = 0.0;
    for k in 0..d {
        let w0 = s.a00[k] * v0 + s.a01[k] * v1;
        let w1 = s.a10[k] * v0 + s.a11[k] * v1;
        let m = w0 * w0 + w1 * w1;
        masses.push((m, w0, w1));
        total += m;
    }

    let u: f64 = rng.random::<f64>();
    if u >= total {
        return (None, DetectionOutcome::Vacuum);
    }
    let mut acc = 0.0;
    let mut pick = d - 1;
    for (k, (m, _, _)) in masses.iter().enumerate() {
        acc += m;
        if u < acc {
            pick = k;
            break;
        }
    }
    let (m, w0, w1) = masses[pick];
    // Bob's one-photon POM: each unambiguous outcome carries weight 1/2 of
    // the squared amplitude in its basis; active and passive agree here.
    let x0 = (w0 - w1) * r;
    let x1 = (w0 + w1) * r;
    let probs = [
        (0.5 * w0 * w0, DetectionOutcome::Unambiguous { bit: false, basis: Basis::Plus }),
        (0.5 * w1 * w1, DetectionOutcome::Unambiguous { bit: true, basis: Basis::Plus }),
        (0.5 * x0 * x0, DetectionOutcome::Unambiguous { bit: false, basis: Basis::Times }),
        (0.5 * x1 * x1, DetectionOutcome::Unambiguous { bit: true, basis: Basis::Times }),
    ];
    let mut v: f64 = rng.random::<f64>() * m;
    for (p, outcome) in probs {
        if v < p {
            return (Some(pick), outcome);
        }
        v -= p;
    }
    (Some(pick), probs[3].1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::security_math::pc1_bound;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    const S_ALL: [ReconciliationScenario; 3] = ReconciliationScenario::ALL;

    fn eps(v: f64) -> Disturbance {
        Disturbance::new(v).unwrap()
    }

    #[test]
    fn tilde_of_identity_and_bit_flip() {
        let id = KrausVectorStrategy::identity();
        let t = id.tilde();
        assert_eq!(t.b00t, vec![1.0]);
        assert_eq!(t.b11t, vec![1.0]);
        assert_eq!(t.b01t, vec![0.0]);
        assert_eq!(t.b10t, vec![0.0]);

        let flip = KrausVectorStrategy::new(vec![0.0], vec![1.0], vec![1.0], vec![0.0]).unwrap();
        let t = flip.tilde();
        assert_eq!(t.b00t, vec![-1.0]);
        assert_eq!(t.b11t, vec![1.0]);
        assert_eq!(t.b01t, vec![0.0]);
        assert_eq!(t.b10t, vec![0.0]);
    }

    #[test]
    fn tilde_preserves_dot_products() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        // Sign patterns of the four combinations in plain-vector order
        // (a00, a01, a10, a11), each scaled by 1/2.
        let signs: [[f64; 4]; 4] = [
            [1.0, -1.0, -1.0, 1.0],
            [1.0, 1.0, -1.0, -1.0],
            [1.0, -1.0, 1.0, -1.0],
            [1.0, 1.0, 1.0, 1.0],
        ];
        for _ in 0..50 {
            let s = KrausVectorStrategy::random_feasible(4, &mut rng);
            let plain = s.vectors();
            let gram: Vec<Vec<f64>> = (0..4)
                .map(|i| (0..4).map(|j| dot(plain[i], plain[j])).collect())
                .collect();
            let t = s.tilde();
            let tilde = [&t.b00t, &t.b01t, &t.b10t, &t.b11t];
            for i in 0..4 {
                for j in 0..4 {
                    let direct = dot(tilde[i], tilde[j]);
                    let mut expanded = 0.0;
                    for u in 0..4 {
                        for v in 0..4 {
                            expanded += 0.25 * signs[i][u] * signs[j][v] * gram[u][v];
                        }
                    }
                    assert!((direct - expanded).abs() < 1e-12, "({i},{j})");
                }
            }
            // Applying the transform twice conjugates by a 90-degree
            // rotation: 00 and 11 swap, 01 and 10 swap with a sign.
            let back = KrausVectorStrategy {
                a00: t.b00t.clone(),
                a01: t.b01t.clone(),
                a10: t.b10t.clone(),
                a11: t.b11t.clone(),
            }
            .tilde();
            let negated = |v: &[f64]| v.iter().map(|x| -x).collect::<Vec<_>>();
            let expected = [
                plain[3].to_vec(),
                negated(plain[2]),
                negated(plain[1]),
                plain[0].to_vec(),
            ];
            for (round, expect) in [&back.b00t, &back.b01t, &back.b10t, &back.b11t]
                .iter()
                .zip(&expected)
            {
                for (a, b) in round.iter().zip(expect.iter()) {
                    assert!((a - b).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn dimension_mismatch_is_rejected() {
        assert!(
            KrausVectorStrategy::new(vec![1.0], vec![0.0, 0.0], vec![0.0], vec![1.0]).is_err()
        );
        let overweight =
            KrausVectorStrategy::new(vec![2.0], vec![0.0], vec![0.0], vec![1.0]);
        assert!(matches!(overweight, Err(AttackError::NotTraceNonincreasing { .. })));
    }

    #[test]
    fn identity_strategy_evaluates_clean() {
        let id = KrausVectorStrategy::identity();
        for s in S_ALL {
            let ev = evaluate(&id, s, 0.5);
            assert!(!ev.degenerate);
            assert!(ev.eps1.value().abs() < 1e-15);
            assert!((ev.pc1 - 0.5).abs() < 1e-15, "{s:?}: {}", ev.pc1);
            assert!((ev.p_sif - 0.5).abs() < 1e-15);
        }
    }

    #[test]
    fn measure_plus_resend_quarter_error() {
        let s = KrausVectorStrategy::measure_plus_resend();
        let ev = evaluate(&s, ReconciliationScenario::CorrectedNoLeak, 0.5);
        assert!((ev.eps1.value() - 0.25).abs() < 1e-15);
        // Rectilinear signals are known perfectly (collision 1), diagonal
        // ones not at all (collision 1/2): pc averages to 3/4.
        assert!((ev.pc1 - 0.75).abs() < 1e-15);
        assert!(ev.pc1 <= pc1_bound(ReconciliationScenario::CorrectedNoLeak, ev.eps1) + 1e-12);
    }

    #[test]
    fn intercept_resend_quarter_error_all_scenarios() {
        let s = KrausVectorStrategy::intercept_resend();
        for sc in [ReconciliationScenario::CorrectedNoLeak, ReconciliationScenario::CorrectedLeaked]
        {
            let ev = evaluate(&s, sc, 0.5);
            assert!((ev.eps1.value() - 0.25).abs() < 1e-12, "{sc:?}");
            assert!(ev.pc1 <= pc1_bound(sc, ev.eps1) + 1e-9);
        }
    }

    #[test]
    fn optimal_strategies_attain_sharp_bounds() {
        for e in [0.0, 0.1, 0.2, 0.25, 0.4, 0.5] {
            for sc in [ReconciliationScenario::Discarded, ReconciliationScenario::CorrectedLeaked]
            {
                let s = build_optimal_strategy(sc, eps(e)).unwrap();
                let ev = evaluate(&s, sc, 0.5);
                assert!((ev.eps1.value() - e).abs() < 1e-9, "{sc:?} eps at {e}");
                assert!(
                    (ev.pc1 - pc1_bound(sc, eps(e))).abs() < 1e-9,
                    "{sc:?} pc at {e}: {} vs {}",
                    ev.pc1,
                    pc1_bound(sc, eps(e))
                );
            }
        }
        // Appendix value at eps = 0.2, discarded: pc = (1 + 0.8 - 0.16)/2.
        let s = build_optimal_strategy(ReconciliationScenario::Discarded, eps(0.2)).unwrap();
        let ev = evaluate(&s, ReconciliationScenario::Discarded, 0.5);
        assert!((ev.pc1 - 0.82).abs() < 1e-9);
    }

    #[test]
    fn no_leak_construction_round_trips_eps_and_stays_sound() {
        for e in [0.0, 0.1, 0.25, 0.3, 0.5] {
            let s =
                build_optimal_strategy(ReconciliationScenario::CorrectedNoLeak, eps(e)).unwrap();
            let ev = evaluate(&s, ReconciliationScenario::CorrectedNoLeak, 0.5);
            assert!((ev.eps1.value() - e).abs() < 1e-9, "eps at {e}");
            assert!(ev.pc1 <= pc1_bound(ReconciliationScenario::CorrectedNoLeak, eps(e)) + 1e-9);
        }
        assert!(build_optimal_strategy(ReconciliationScenario::Discarded, eps(0.6)).is_err());
    }

    #[test]
    fn random_strategies_never_beat_the_bounds() {
        let mut rng = ChaCha8Rng::seed_from_u64(20260809);
        for i in 0..1500 {
            let dim = 1 + (i % 4);
            let s = KrausVectorStrategy::random_feasible(dim, &mut rng);
            for sc in S_ALL {
                let ev = evaluate(&s, sc, 0.5);
                if ev.degenerate {
                    continue;
                }
                let bound = pc1_bound(sc, ev.eps1);
                assert!(
                    ev.pc1 <= bound + 1e-9,
                    "{sc:?}: pc {} > bound {} at eps {}",
                    ev.pc1,
                    bound,
                    ev.eps1.value()
                );
                assert!(ev.p_err + ev.p_rec <= ev.p_sif + 1e-12 || sc.is_corrected());
                assert!((0.25..=1.0 + 1e-12).contains(&ev.pc1));
            }
        }
    }

    #[test]
    fn degenerate_strategy_is_flagged() {
        // |0+> -> -|1+>, |1+> -> |0+>: every sifted bit is an error, so the
        // discarded-mode reconciled mass vanishes.
        let s = KrausVectorStrategy::new(vec![0.0], vec![1.0], vec![-1.0], vec![0.0]).unwrap();
        let ev = evaluate(&s, ReconciliationScenario::Discarded, 0.5);
        assert!(ev.degenerate);
        assert!(ev.pc1.is_nan());
        let ev = evaluate(&s, ReconciliationScenario::CorrectedLeaked, 0.5);
        assert!(!ev.degenerate);
        assert!((ev.eps1.value() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn sampling_is_deterministic_and_identity_is_faithful() {
        let s = KrausVectorStrategy::identity();
        let mut rng1 = ChaCha8Rng::seed_from_u64(3);
        let mut rng2 = ChaCha8Rng::seed_from_u64(3);
        for i in 0..200 {
            let signal = (i % 2 == 0, if i % 4 < 2 { Basis::Plus } else { Basis::Times });
            let a = sample_outcome(&s, signal, &mut rng1);
            let b = sample_outcome(&s, signal, &mut rng2);
            assert_eq!(a, b);
            if let (Some(_), DetectionOutcome::Unambiguous { bit, basis }) = a {
                if basis == signal.1 {
                    assert_eq!(bit, signal.0, "identity channel must be error-free");
                }
            }
        }
    }

    #[test]
    fn intercept_resend_empirical_error_rate() {
        let s = KrausVectorStrategy::intercept_resend();
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        let mut sifted = 0u32;
        let mut errors = 0u32;
        for _ in 0..100_000 {
            let signal = (rng.random::<bool>(), if rng.random::<bool>() { Basis::Plus } else { Basis::Times });
            let (_, outcome) = sample_outcome(&s, signal, &mut rng);
            if let DetectionOutcome::Unambiguous { bit, basis } = outcome {
                if basis == signal.1 {
                    sifted += 1;
                    if bit != signal.0 {
                        errors += 1;
                    }
                }
            }
        }
        let rate = errors as f64 / sifted as f64;
        assert!((rate - 0.25).abs() < 0.01, "rate = {rate}");
    }

    #[test]
    fn sampling_matches_analytic_probabilities() {
        // Chi-square against the analytic per-signal distribution for an
        // asymmetric strategy.
        let s = build_optimal_strategy(ReconciliationScenario::Discarded, eps(0.2)).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let n = 100_000usize;
        // Outcome cells: loss, and (eve k, bob unambiguous 4) per k.
        let d = s.dim();
        let cells = 1 + 4 * d;
        let mut counts = vec![0u64; cells];
        let signal = (false, Basis::Plus);
        for _ in 0..n {
            match sample_outcome(&s, signal, &mut rng) {
                (None, _) => counts[0] += 1,
                (Some(k), DetectionOutcome::Unambiguous { bit, basis }) => {
                    let o = match (bit, basis) {
                        (false, Basis::Plus) => 0,
                        (true, Basis::Plus) => 1,
                        (false, Basis::Times) => 2,
                        (true, Basis::Times) => 3,
                    };
                    counts[1 + 4 * k + o] += 1;
                }
                (Some(_), _) => unreachable!("one-photon sector has no ambiguous outcomes"),
            }
        }
        // Analytic cell probabilities.
        let mut probs = vec![0.0; cells];
        let (v0, v1) = (1.0, 0.0);
        let mut total = 0.0;
        let vs = s.vectors();
        let r = 1.0 / std::f64::consts::SQRT_2;
        for k in 0..d {
            let w0 = vs[0][k] * v0 + vs[1][k] * v1;
            let w1 = vs[2][k] * v0 + vs[3][k] * v1;
            let x0 = (w0 - w1) * r;
            let x1 = (w0 + w1) * r;
            probs[1 + 4 * k] = 0.5 * w0 * w0;
            probs[1 + 4 * k + 1] = 0.5 * w1 * w1;
            probs[1 + 4 * k + 2] = 0.5 * x0 * x0;
            probs[1 + 4 * k + 3] = 0.5 * x1 * x1;
            total += w0 * w0 + w1 * w1;
        }
        probs[0] = 1.0 - total;
        let mut chi2 = 0.0;
        let mut dof = 0;
        for (c, p) in counts.iter().zip(&probs) {
            let expect = p * n as f64;
            if expect > 5.0 {
                chi2 += (*c as f64 - expect).powi(2) / expect;
                dof += 1;
            }
        }
        // p > 0.001 for chi2 below roughly dof + 3 sqrt(2 dof) at these sizes.
        let cutoff = dof as f64 + 3.3 * (2.0 * dof as f64).sqrt();
        assert!(chi2 < cutoff, "chi2 = {chi2}, dof = {dof}");
    }

    #[test]
    fn text_round_trip() {
        let s = build_optimal_strategy(ReconciliationScenario::CorrectedLeaked, eps(0.17)).unwrap();
        let text = s.to_text();
        let back = KrausVectorStrategy::from_text(&text).unwrap();
        assert_eq!(s, back);
        assert!(KrausVectorStrategy::from_text("1 2\n3 4\n").is_err());
        assert!(KrausVectorStrategy::from_text("a b\nc d\ne f\ng h\n").is_err());
    }
}
