//! The three-move penny flip: Q moves, Picard moves, Q moves again, then the
//! box is opened.

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::qmat::{evolve_mixed, measure_probs, mixture_transfer, transfer_apply, DensityMatrix, Transfer};
use crate::strategy::MoveSpec;

/// Head-up penny, `|0⟩⟨0|`.
pub fn initial_state() -> DensityMatrix {
    DensityMatrix::ground()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GameProfile {
    pub q_move1: MoveSpec,
    pub picard_move: MoveSpec,
    pub q_move2: MoveSpec,
}

impl GameProfile {
    pub fn new(q_move1: MoveSpec, picard_move: MoveSpec, q_move2: MoveSpec) -> Self {
        GameProfile { q_move1, picard_move, q_move2 }
    }

    pub fn moves(&self) -> [&MoveSpec; 3] {
        [&self.q_move1, &self.picard_move, &self.q_move2]
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GameOutcome {
    pub rho_final: DensityMatrix,
    /// `P(|0⟩) - P(|1⟩)`.
    pub payoff_q: f64,
    /// `P(|1⟩) - P(|0⟩)`.
    pub payoff_picard: f64,
}

pub fn apply_move(rho: &DensityMatrix, m: &MoveSpec) -> Result<DensityMatrix> {
    evolve_mixed(rho, &m.branches()?)
}

/// The four protocol states `ρ₀..ρ₃`.
pub fn play_trace(profile: &GameProfile) -> Result<[DensityMatrix; 4]> {
    let rho0 = initial_state();
    let rho1 = apply_move(&rho0, &profile.q_move1)?;
    let rho2 = apply_move(&rho1, &profile.picard_move)?;
    let rho3 = apply_move(&rho2, &profile.q_move2)?;
    Ok([rho0, rho1, rho2, rho3])
}

pub fn outcome_of(rho_final: DensityMatrix) -> GameOutcome {
    let (p0, p1) = measure_probs(&rho_final);
    GameOutcome {
        rho_final,
        payoff_q: p0 - p1,
        payoff_picard: p1 - p0,
    }
}

pub fn play(profile: &GameProfile) -> Result<GameOutcome> {
    let [_, _, _, rho3] = play_trace(profile)?;
    Ok(outcome_of(rho3))
}

/// Q's two moves reduced to the Bloch vector after move 1 and the
/// observable that move 2 turns into Q's payoff.
///
/// Q's expected payoff against any Picard channel `T` is `n · (T r₁)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CompiledQ {
    after_first: [f64; 3],
    observable: [f64; 3],
}

impl CompiledQ {
    pub fn new(q_move1: &MoveSpec, q_move2: &MoveSpec) -> Result<Self> {
        let after_first = apply_move(&initial_state(), q_move1)?.bloch();
        let t2 = mixture_transfer(&q_move2.branches()?);
        Ok(CompiledQ { after_first, observable: t2[2] })
    }
}

/// Picard's move as a Bloch transfer matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CompiledPicard {
    transfer: Transfer,
}

impl CompiledPicard {
    pub fn new(picard_move: &MoveSpec) -> Result<Self> {
        Ok(CompiledPicard { transfer: mixture_transfer(&picard_move.branches()?) })
    }
}

/// Q's payoff for a compiled pairing. Agrees with [`play`] to rounding.
#[inline]
pub fn compiled_payoff_q(q: &CompiledQ, picard: &CompiledPicard) -> f64 {
    let r2 = transfer_apply(&picard.transfer, &q.after_first);
    q.observable[0] * r2[0] + q.observable[1] * r2[1] + q.observable[2] * r2[2]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qmat::TOL;
    use crate::strategy::{NamedOperator, StrategyParams, PHI_MAX, THETA_MAX};
    use proptest::prelude::*;
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};

    #[test]
    fn initial_state_is_head_up() {
        let rho = initial_state();
        assert_eq!(rho, DensityMatrix::ground());
        assert_eq!(measure_probs(&rho), (1.0, 0.0));
        let out = apply_move(&rho, &MoveSpec::named(NamedOperator::Identity)).unwrap();
        assert!(out.max_abs_diff(&DensityMatrix::ground()) < TOL);
    }

    #[test]
    fn classical_half_half_ties() {
        for p in [0.0, 0.3, 1.0] {
            let o = play(&GameProfile::new(
                MoveSpec::classical(0.5),
                MoveSpec::classical(0.5),
                MoveSpec::classical(p),
            ))
            .unwrap();
            assert!(o.payoff_q.abs() < TOL && o.payoff_picard.abs() < TOL);
        }
    }

    #[test]
    fn quarter_turn_then_hadamard_wins() {
        for phi1 in [0.0, 1.0, PI] {
            for p in [0.0, 0.4, 1.0] {
                let o = play(&GameProfile::new(
                    MoveSpec::pure(FRAC_PI_4, phi1),
                    MoveSpec::classical(p),
                    MoveSpec::pure(FRAC_PI_4, PI),
                ))
                .unwrap();
                assert!((o.payoff_q - 1.0).abs() < TOL);
                assert!((o.payoff_picard + 1.0).abs() < TOL);
            }
        }
    }

    #[test]
    fn quantum_picard_against_classical_q_ties() {
        for (p1, p2, phi) in [(0.0, 0.0, 0.0), (0.2, 0.9, 1.3), (1.0, 0.5, PI)] {
            let o = play(&GameProfile::new(
                MoveSpec::classical(p1),
                MoveSpec::pure(FRAC_PI_4, phi),
                MoveSpec::classical(p2),
            ))
            .unwrap();
            assert!(o.payoff_q.abs() < TOL);
        }
    }

    #[test]
    fn sigma1_sigma3_mix_against_half_phase_ties() {
        for (phi1, p, theta) in [(0.0, 0.0, 0.0), (1.1, 0.3, 0.9), (PI, 1.0, FRAC_PI_2)] {
            let o = play(&GameProfile::new(
                MoveSpec::pure(FRAC_PI_4, phi1),
                MoveSpec::MixedTwoUnitary {
                    p_first: p,
                    first: StrategyParams { theta: FRAC_PI_2, phi: PI },
                    second: StrategyParams { theta: 0.0, phi: PI },
                },
                MoveSpec::pure(theta, FRAC_PI_2),
            ))
            .unwrap();
            assert!(o.payoff_q.abs() < TOL, "{o:?}");
        }
    }

    #[test]
    fn classical_deviation_is_punished() {
        let grid: Vec<f64> = (0..=20).map(|i| i as f64 * 0.05).collect();
        for &a in &grid {
            for &b in &grid {
                if (a - 0.5).abs() < 1e-9 || (b - 0.5).abs() < 1e-9 {
                    continue;
                }
                let best = grid
                    .iter()
                    .map(|&p| {
                        play(&GameProfile::new(
                            MoveSpec::classical(a),
                            MoveSpec::classical(p),
                            MoveSpec::classical(b),
                        ))
                        .unwrap()
                        .payoff_picard
                    })
                    .fold(f64::NEG_INFINITY, f64::max);
                assert!(best > 0.0, "a={a} b={b}");
            }
        }
    }

    #[test]
    fn classical_subgame_grid_ties() {
        for i in 0..=10 {
            let p = i as f64 / 10.0;
            let half = MoveSpec::classical(0.5);
            let a = play(&GameProfile::new(half, half, MoveSpec::classical(p))).unwrap();
            let b = play(&GameProfile::new(MoveSpec::classical(p), half, half)).unwrap();
            assert!(a.payoff_q.abs() < TOL && b.payoff_q.abs() < TOL);
        }
    }

    fn params() -> impl Strategy<Value = StrategyParams> {
        (0.0..=THETA_MAX, 0.0..=PHI_MAX).prop_map(|(theta, phi)| StrategyParams { theta, phi })
    }

    pub(crate) fn any_move() -> impl Strategy<Value = MoveSpec> {
        prop_oneof![
            (0.0..=1.0f64).prop_map(MoveSpec::classical),
            params().prop_map(|params| MoveSpec::PureQuantum { params }),
            (0.0..=1.0f64, params(), params()).prop_map(|(p_first, first, second)| {
                MoveSpec::MixedTwoUnitary { p_first, first, second }
            }),
        ]
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(10_000))]

        #[test]
        fn zero_sum_and_bounded(a in any_move(), b in any_move(), c in any_move()) {
            let o = play(&GameProfile::new(a, b, c)).unwrap();
            prop_assert!((o.payoff_q + o.payoff_picard).abs() < TOL);
            prop_assert!((-1.0 - TOL..=1.0 + TOL).contains(&o.payoff_q));
            let (p0, p1) = measure_probs(&o.rho_final);
            prop_assert!((p0 + p1 - 1.0).abs() < TOL);
            prop_assert!((-TOL..=1.0 + TOL).contains(&p0));
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(2_000))]

        #[test]
        fn compiled_payoff_matches_play(a in any_move(), b in any_move(), c in any_move()) {
            let direct = play(&GameProfile::new(a, b, c)).unwrap().payoff_q;
            let q = CompiledQ::new(&a, &c).unwrap();
            let p = CompiledPicard::new(&b).unwrap();
            prop_assert!((direct - compiled_payoff_q(&q, &p)).abs() < 1e-12);
        }
    }
}
