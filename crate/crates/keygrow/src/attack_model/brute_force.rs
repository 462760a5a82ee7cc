//! Independent maximizer for the per-bit collision probability at fixed
//! disturbance.
//!
//! The search runs over the reduced strategy family that the optimization
//! arguments justify: |A00| = |A11|, |A01| = |A10|, leaving the error-vector
//! norm ratio and the three relative angles (00-11, 01-10, 00-10) free. The
//! ratio is eliminated against the disturbance constraint in closed form, so
//! every evaluated candidate satisfies the constraint exactly; a coarse grid
//! over the angles is then refined with a Nelder-Mead simplex. Collision
//! probability and disturbance are scale invariant, so |A00| is fixed to 1
//! and candidates are rescaled only to pass the completeness check.

use super::{evaluate, AttackError, KrausVectorStrategy};
use crate::security_math::{Disturbance, ReconciliationScenario};

/// Search resolution for [`brute_force_max_pc`].
#[derive(Debug, Clone, Copy)]
pub struct GridSpec {
    /// Grid points per angle axis.
    pub points_per_axis: usize,
    /// Accepted deviation of the candidate disturbance from the target.
    pub eps_tolerance: f64,
    /// Nelder-Mead iterations for the local refinement.
    pub refine_iters: usize,
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec { points_per_axis: 21, eps_tolerance: 1e-4, refine_iters: 400 }
    }
}

/// One candidate: relative angles plus the sign of the antisymmetric
/// component of the error vectors.
#[derive(Debug, Clone, Copy)]
struct Candidate {
    c0011: f64,
    c0110: f64,
    c0010: f64,
    delta_sign: f64,
}

/// Squared error-vector norm that pins the disturbance to `eps`, or None
/// when no nonnegative solution exists for these angles.
fn solve_b2(scenario: ReconciliationScenario, eps: f64, c0011: f64, c0110: f64) -> Option<f64> {
    let b2 = match scenario {
        ReconciliationScenario::Discarded => {
            let num = eps * (3.0 + c0011) - (1.0 - c0011);
            let den = (3.0 - c0110) - eps * (1.0 + c0110);
            if den <= 1e-12 {
                return None;
            }
            num / den
        }
        _ => {
            let num = 4.0 * eps - (1.0 - c0011);
            let den = (3.0 - c0110) - 4.0 * eps;
            if den <= 1e-12 {
                return None;
            }
            num / den
        }
    };
    if !(0.0..=1e8).contains(&b2) {
        return None;
    }
    Some(b2)
}

fn build_candidate(
    scenario: ReconciliationScenario,
    eps: f64,
    cand: &Candidate,
) -> Option<KrausVectorStrategy> {
    let c0011 = cand.c0011.clamp(-1.0, 1.0);
    let c0110 = cand.c0110.clamp(-1.0, 1.0);
    let c0010 = cand.c0010.clamp(-1.0, 1.0);
    let alpha = ((1.0 + c0011) / 2.0).sqrt();
    let beta = ((1.0 - c0011) / 2.0).sqrt();
    if alpha < 1e-9 {
        return None;
    }
    let b2 = solve_b2(scenario, eps, c0011, c0110)?;
    let b = b2.sqrt();
    let q = ((1.0 - c0110) / 2.0).sqrt();
    let gu = (c0010 + beta * cand.delta_sign * q) / alpha; // gamma / b
    let zeta2_unit = (1.0 + c0110) / 2.0 - gu * gu;
    if zeta2_unit < -1e-12 {
        return None;
    }
    let gamma = b * gu;
    let delta = cand.delta_sign * b * q;
    let zeta = (b2 * zeta2_unit.max(0.0)).sqrt();

    let r = 1.0 / std::f64::consts::SQRT_2;
    let a00 = vec![(alpha + beta) * r, (alpha - beta) * r, 0.0, 0.0];
    let a11 = vec![(alpha - beta) * r, (alpha + beta) * r, 0.0, 0.0];
    let a01 = vec![(gamma + delta) * r, (gamma - delta) * r, zeta, 0.0];
    let a10 = vec![(gamma - delta) * r, (gamma + delta) * r, zeta, 0.0];
    KrausVectorStrategy::new_rescaled(a00, a01, a10, a11).ok()
}

fn score(scenario: ReconciliationScenario, eps: f64, tol: f64, cand: &Candidate) -> f64 {
    match build_candidate(scenario, eps, cand) {
        Some(s) => {
            let ev = evaluate(&s, scenario, 0.5);
            if ev.degenerate || (ev.eps1.value() - eps).abs() > tol {
                f64::NEG_INFINITY
            } else {
                ev.pc1
            }
        }
        None => f64::NEG_INFINITY,
    }
}

/// Maximize the evaluated collision probability over the reduced strategy
/// family at the given disturbance. Errors when no feasible strategy exists
/// at that disturbance.
pub fn brute_force_max_pc(
    scenario: ReconciliationScenario,
    eps: Disturbance,
    grid: &GridSpec,
) -> Result<f64, AttackError> {
    let e = eps.value();
    if e > 0.5 {
        return Err(AttackError::Domain(format!(
            "oracle covers disturbance in [0, 1/2], got {e}"
        )));
    }
    let n = grid.points_per_axis.max(3);
    let axis: Vec<f64> = (0..n).map(|i| -1.0 + 2.0 * i as f64 / (n - 1) as f64).collect();

    let mut best: Option<(f64, Candidate)> = None;
    for &c0011 in &axis {
        for &c0110 in &axis {
            for &c0010 in &axis {
                for delta_sign in [1.0, -1.0] {
                    let cand = Candidate { c0011, c0110, c0010, delta_sign };
                    let v = score(scenario, e, grid.eps_tolerance, &cand);
                    if v.is_finite() && best.map_or(true, |(bv, _)| v > bv) {
                        best = Some((v, cand));
                    }
                }
            }
        }
    }
    let (grid_best, seed) = best.ok_or_else(|| {
        AttackError::Infeasible(format!("no strategy in the family reaches disturbance {e}"))
    })?;

    let step = 2.0 / (n - 1) as f64;
    let refined = nelder_mead_max(
        |x| {
            score(
                scenario,
                e,
                grid.eps_tolerance,
                &Candidate { c0011: x[0], c0110: x[1], c0010: x[2], delta_sign: seed.delta_sign },
            )
        },
        [seed.c0011, seed.c0110, seed.c0010],
        step,
        grid.refine_iters,
    );
    Ok(refined.max(grid_best))
}

/// Compact Nelder-Mead maximizer on a box-clamped 3-dimensional domain.
fn nelder_mead_max<F: Fn([f64; 3]) -> f64>(
    f: F,
    start: [f64; 3],
    scale: f64,
    iters: usize,
) -> f64 {
    let clamp = |x: [f64; 3]| x.map(|v| v.clamp(-1.0, 1.0));
    let mut simplex: Vec<([f64; 3], f64)> = Vec::with_capacity(4);
    simplex.push((clamp(start), f(clamp(start))));
    for i in 0..3 {
        let mut p = start;
        p[i] = (p[i] + scale).clamp(-1.0, 1.0);
        if (p[i] - start[i]).abs() < 1e-12 {
            p[i] = (start[i] - scale).clamp(-1.0, 1.0);
        }
        simplex.push((p, f(p)));
    }

    for _ in 0..iters {
        // descending by value: best first
        simplex.sort_by(|a, b| b.1.total_cmp(&a.1));
        let worst = simplex[3];
        let centroid = {
            let mut c = [0.0; 3];
            for (p, _) in &simplex[..3] {
                for i in 0..3 {
                    c[i] += p[i] / 3.0;
                }
            }
            c
        };
        let dir = |t: f64| {
            clamp([
                centroid[0] + t * (centroid[0] - worst.0[0]),
                centroid[1] + t * (centroid[1] - worst.0[1]),
                centroid[2] + t * (centroid[2] - worst.0[2]),
            ])
        };
        let reflect = dir(1.0);
        let fr = f(reflect);
        if fr > simplex[0].1 {
            let expand = dir(2.0);
            let fe = f(expand);
            simplex[3] = if fe > fr { (expand, fe) } else { (reflect, fr) };
        } else if fr > simplex[2].1 {
            simplex[3] = (reflect, fr);
        } else {
            let contract = dir(-0.5);
            let fc = f(contract);
            if fc > worst.1 {
                simplex[3] = (contract, fc);
            } else {
                let best = simplex[0].0;
                for v in simplex.iter_mut().skip(1) {
                    let p = clamp([
                        best[0] + 0.5 * (v.0[0] - best[0]),
                        best[1] + 0.5 * (v.0[1] - best[1]),
                        best[2] + 0.5 * (v.0[2] - best[2]),
                    ]);
                    *v = (p, f(p));
                }
            }
        }
        let spread = simplex.iter().map(|(_, v)| *v).fold(f64::NAN, f64::max)
            - simplex.iter().map(|(_, v)| *v).filter(|v| v.is_finite()).fold(f64::INFINITY, f64::min);
        if spread.is_finite() && spread < 1e-12 {
            break;
        }
    }
    simplex.iter().map(|(_, v)| *v).fold(f64::NEG_INFINITY, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::security_math::pc1_bound;

    #[test]
    fn oracle_trivial_endpoint() {
        let grid = GridSpec::default();
        for s in ReconciliationScenario::ALL {
            let pc = brute_force_max_pc(s, Disturbance::new(0.0).unwrap(), &grid).unwrap();
            assert!((pc - 0.5).abs() < 1e-6, "{s:?}: {pc}");
        }
    }

    #[test]
    fn oracle_matches_sharp_discarded_bound() {
        let grid = GridSpec::default();
        for e in [0.1, 0.3] {
            let eps = Disturbance::new(e).unwrap();
            let pc = brute_force_max_pc(ReconciliationScenario::Discarded, eps, &grid).unwrap();
            let bound = pc1_bound(ReconciliationScenario::Discarded, eps);
            assert!((pc - bound).abs() < 2e-3, "eps {e}: oracle {pc} vs bound {bound}");
            assert!(pc <= bound + 1e-9);
        }
    }

    #[test]
    fn oracle_never_exceeds_loose_corrected_bound() {
        let grid = GridSpec::default();
        let eps = Disturbance::new(0.2).unwrap();
        let pc =
            brute_force_max_pc(ReconciliationScenario::CorrectedNoLeak, eps, &grid).unwrap();
        let bound = pc1_bound(ReconciliationScenario::CorrectedNoLeak, eps);
        assert!(pc <= bound + 1e-9, "oracle {pc} vs bound {bound}");
    }

    #[test]
    fn oracle_rejects_out_of_range() {
        let grid = GridSpec::default();
        assert!(brute_force_max_pc(
            ReconciliationScenario::Discarded,
            Disturbance::new(0.7).unwrap(),
            &grid
        )
        .is_err());
    }
}
