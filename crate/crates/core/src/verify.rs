//! Closed-form state oracles for the analysed strategy families and
//! grid-search certification of equilibrium claims.
//!
//! The oracle formulas below are written out by hand per family and never
//! call into the game pipeline, so `check_oracle_agreement` compares two
//! independent routes to the same states.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};
use std::fmt;

use rand::Rng as _;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::game::{play, play_trace, GameProfile};
use crate::qmat::{Complex, DensityMatrix};
use crate::rng::{stream, Rng};
use crate::strategy::{make_unitary, GeneKind, MoveKind, MoveSpec, NamedOperator, Schema, StrategyParams};

/// Parameters are recognised as a family's fixed values within this distance.
const MATCH_TOL: f64 = 1e-12;

/// Default acceptance threshold for unilateral gains.
pub const NE_EPS: f64 = 1e-9;

/// The four protocol states.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StateTrace {
    pub rho0: DensityMatrix,
    pub rho1: DensityMatrix,
    pub rho2: DensityMatrix,
    pub rho3: DensityMatrix,
}

impl StateTrace {
    pub fn from_array([rho0, rho1, rho2, rho3]: [DensityMatrix; 4]) -> Self {
        StateTrace { rho0, rho1, rho2, rho3 }
    }

    /// Largest elementwise difference over `ρ₁..ρ₃`.
    pub fn max_abs_diff(&self, other: &StateTrace) -> f64 {
        [
            self.rho1.max_abs_diff(&other.rho1),
            self.rho2.max_abs_diff(&other.rho2),
            self.rho3.max_abs_diff(&other.rho3),
        ]
        .into_iter()
        .fold(0.0, f64::max)
    }
}

/// Strategy families with hand-derived state sequences.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    /// `[p₁, p, p₂]`: all three moves classical.
    Classical,
    /// `[U(π/4,φ), p, H]`: Q's winning quantum strategy against classical Picard.
    QuantumQ,
    /// `[p₁, U(π/4,φ), p₂]`: quantum Picard against classical Q.
    QuantumPicard,
    /// `[U(π/4,φ₁), σ₁/σ₃ mix, U(θ₂,π/2)]`.
    Cat1,
    /// `[U(π/4,φ₁), σ₂/I mix, U(θ₂,π/2)]`.
    Cat2,
    /// `[U(0,φ₁), σ₃/σ₂ mix, H]`.
    Cat3,
    /// `[U(π/2,φ₁), I/σ₁ mix, U(π/4,0)]`.
    Cat4,
}

impl Family {
    pub const ALL: [Family; 7] = [
        Family::Classical,
        Family::QuantumQ,
        Family::QuantumPicard,
        Family::Cat1,
        Family::Cat2,
        Family::Cat3,
        Family::Cat4,
    ];

    /// A uniformly drawn member. Mixed Picard moves list their two
    /// operators in a random order.
    pub fn sample(self, rng: &mut Rng) -> GameProfile {
        let p = |rng: &mut Rng| rng.random_range(0.0..=1.0);
        let phi = |rng: &mut Rng| rng.random_range(0.0..=PI);
        let theta = |rng: &mut Rng| rng.random_range(0.0..=FRAC_PI_2);
        let mix = |rng: &mut Rng, a: NamedOperator, b: NamedOperator| {
            let pro = p(rng);
            if rng.random_bool(0.5) {
                MoveSpec::mix(pro, a, b)
            } else {
                MoveSpec::mix(1.0 - pro, b, a)
            }
        };
        use NamedOperator::*;
        match self {
            Family::Classical => {
                GameProfile::new(MoveSpec::classical(p(rng)), MoveSpec::classical(p(rng)), MoveSpec::classical(p(rng)))
            }
            Family::QuantumQ => GameProfile::new(
                MoveSpec::pure(FRAC_PI_4, phi(rng)),
                MoveSpec::classical(p(rng)),
                MoveSpec::named(Hadamard),
            ),
            Family::QuantumPicard => GameProfile::new(
                MoveSpec::classical(p(rng)),
                MoveSpec::pure(FRAC_PI_4, phi(rng)),
                MoveSpec::classical(p(rng)),
            ),
            Family::Cat1 => GameProfile::new(
                MoveSpec::pure(FRAC_PI_4, phi(rng)),
                mix(rng, Sigma1, Sigma3),
                MoveSpec::pure(theta(rng), FRAC_PI_2),
            ),
            Family::Cat2 => GameProfile::new(
                MoveSpec::pure(FRAC_PI_4, phi(rng)),
                mix(rng, Sigma2, Identity),
                MoveSpec::pure(theta(rng), FRAC_PI_2),
            ),
            Family::Cat3 => GameProfile::new(
                MoveSpec::pure(0.0, phi(rng)),
                mix(rng, Sigma3, Sigma2),
                MoveSpec::named(Hadamard),
            ),
            Family::Cat4 => GameProfile::new(
                MoveSpec::pure(FRAC_PI_2, phi(rng)),
                mix(rng, Identity, Sigma1),
                MoveSpec::pure(FRAC_PI_4, 0.0),
            ),
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Family::Classical => "classical",
            Family::QuantumQ => "quantum_q",
            Family::QuantumPicard => "quantum_picard",
            Family::Cat1 => "cat1",
            Family::Cat2 => "cat2",
            Family::Cat3 => "cat3",
            Family::Cat4 => "cat4",
        };
        f.write_str(s)
    }
}

fn near(a: f64, b: f64) -> bool {
    (a - b).abs() <= MATCH_TOL
}

fn classical_p(m: &MoveSpec) -> Option<f64> {
    match m {
        MoveSpec::ClassicalMixed { p_flip } => Some(*p_flip),
        _ => None,
    }
}

fn pure(m: &MoveSpec) -> Option<StrategyParams> {
    match m {
        MoveSpec::PureQuantum { params } => Some(*params),
        _ => None,
    }
}

fn is_operator(params: StrategyParams, op: NamedOperator) -> bool {
    make_unitary(params).is_ok_and(|u| u.matrix().max_abs_diff(&op.matrix()) <= MATCH_TOL)
}

/// Weight of `a` if `m` mixes `a` and `b` in either order.
fn mix_weight(m: &MoveSpec, a: NamedOperator, b: NamedOperator) -> Option<f64> {
    let MoveSpec::MixedTwoUnitary { p_first, first, second } = *m else {
        return None;
    };
    if is_operator(first, a) && is_operator(second, b) {
        Some(p_first)
    } else if is_operator(first, b) && is_operator(second, a) {
        Some(1.0 - p_first)
    } else {
        None
    }
}

/// Family of `profile` with its free probability parameters.
fn recognize(profile: &GameProfile) -> Option<(Family, [f64; 3])> {
    use NamedOperator::*;
    let (q1, pic, q2) = (&profile.q_move1, &profile.picard_move, &profile.q_move2);

    if let (Some(a), Some(b), Some(c)) = (classical_p(q1), classical_p(pic), classical_p(q2)) {
        return Some((Family::Classical, [a, b, c]));
    }
    if let (Some(a), Some(u), Some(c)) = (classical_p(q1), pure(pic), classical_p(q2)) {
        if near(u.theta, FRAC_PI_4) {
            return Some((Family::QuantumPicard, [a, 0.0, c]));
        }
    }
    let (u1, u2) = (pure(q1)?, pure(q2)?);
    if near(u1.theta, FRAC_PI_4) {
        if let Some(p) = classical_p(pic) {
            if is_operator(u2, Hadamard) {
                return Some((Family::QuantumQ, [0.0, p, 0.0]));
            }
        }
        if near(u2.phi, FRAC_PI_2) {
            if let Some(w) = mix_weight(pic, Sigma1, Sigma3) {
                return Some((Family::Cat1, [0.0, w, 0.0]));
            }
            if let Some(w) = mix_weight(pic, Sigma2, Identity) {
                return Some((Family::Cat2, [0.0, w, 0.0]));
            }
        }
    }
    if near(u1.theta, 0.0) && is_operator(u2, Hadamard) {
        if let Some(w) = mix_weight(pic, Sigma3, Sigma2) {
            return Some((Family::Cat3, [0.0, w, 0.0]));
        }
    }
    if near(u1.theta, FRAC_PI_2) && near(u2.theta, FRAC_PI_4) && near(u2.phi, 0.0) {
        if let Some(w) = mix_weight(pic, Identity, Sigma1) {
            return Some((Family::Cat4, [0.0, w, 0.0]));
        }
    }
    None
}

pub fn family_of(profile: &GameProfile) -> Option<Family> {
    recognize(profile).map(|(f, _)| f)
}

fn real(x: f64) -> Complex {
    Complex::new(x, 0.0)
}

/// States of `profile` from the closed forms of its family.
pub fn oracle_trace(profile: &GameProfile) -> Result<StateTrace> {
    let (family, [a, p, c]) = recognize(profile).ok_or(Error::UnknownFamily)?;
    let ground = DensityMatrix::ground();
    let plus = DensityMatrix::equator(real(1.0))?;
    let trace = match family {
        Family::Classical => {
            // diag(s, 1-s) with s the probability of heads.
            let s1 = 1.0 - a;
            let s2 = (1.0 - p) * s1 + p * (1.0 - s1);
            let s3 = (1.0 - c) * s2 + c * (1.0 - s2);
            [
                ground,
                DensityMatrix::classical(s1)?,
                DensityMatrix::classical(s2)?,
                DensityMatrix::classical(s3)?,
            ]
        }
        Family::QuantumQ => [ground, plus, plus, ground],
        Family::QuantumPicard => {
            let rho2 = DensityMatrix::equator(real(1.0 - 2.0 * a))?;
            [ground, DensityMatrix::classical(1.0 - a)?, rho2, rho2]
        }
        Family::Cat1 => [
            ground,
            plus,
            DensityMatrix::equator(real(2.0 * p - 1.0))?,
            DensityMatrix::equator(Complex::new(0.0, -(2.0 * p - 1.0)))?,
        ],
        Family::Cat2 => [
            ground,
            plus,
            DensityMatrix::equator(real(1.0 - 2.0 * p))?,
            DensityMatrix::equator(Complex::new(0.0, -(1.0 - 2.0 * p)))?,
        ],
        Family::Cat3 => [
            ground,
            ground,
            DensityMatrix::classical(p)?,
            DensityMatrix::equator(real(2.0 * p - 1.0))?,
        ],
        Family::Cat4 => [
            ground,
            DensityMatrix::excited(),
            DensityMatrix::classical(1.0 - p)?,
            DensityMatrix::equator(real(1.0 - 2.0 * p))?,
        ],
    };
    Ok(StateTrace::from_array(trace))
}

/// Max elementwise deviation between `oracle` and the game pipeline over `ρ₁..ρ₃`.
pub fn check_oracle_agreement_with<F>(profile: &GameProfile, oracle: F) -> Result<f64>
where
    F: FnOnce(&GameProfile) -> Result<StateTrace>,
{
    let expected = oracle(profile)?;
    let actual = StateTrace::from_array(play_trace(profile)?);
    Ok(expected.max_abs_diff(&actual))
}

pub fn check_oracle_agreement(profile: &GameProfile) -> Result<f64> {
    check_oracle_agreement_with(profile, oracle_trace)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Player {
    Q,
    Picard,
}

impl fmt::Display for Player {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Player::Q => f.write_str("Q"),
            Player::Picard => f.write_str("Picard"),
        }
    }
}

/// Evenly spaced points per free parameter, both endpoints included.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Grid {
    pub points: usize,
}

impl Default for Grid {
    fn default() -> Self {
        Grid { points: 21 }
    }
}

impl Grid {
    pub fn values(&self, kind: GeneKind) -> Vec<f64> {
        let (lo, hi) = kind.bounds();
        match self.points {
            0 => Vec::new(),
            1 => vec![lo],
            n => (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect(),
        }
    }
}

/// Gene axes along which a deviation is payoff-equivalent to the profile.
/// Indices follow each player's schema order (Q's two moves concatenated).
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct EquivalentAxes {
    pub q: Vec<usize>,
    pub picard: Vec<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Verdict {
    #[serde(rename = "NE-pair")]
    NePair,
    #[serde(rename = "strict-NE-pair")]
    StrictNePair,
    #[serde(rename = "refuted")]
    Refuted,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Verdict::NePair => f.write_str("NE-pair"),
            Verdict::StrictNePair => f.write_str("strict-NE-pair"),
            Verdict::Refuted => f.write_str("refuted"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StrategyProfile {
    pub q: [MoveSpec; 2],
    pub picard: MoveSpec,
}

impl StrategyProfile {
    pub fn game(&self) -> GameProfile {
        GameProfile::new(self.q[0], self.picard, self.q[1])
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Deviation {
    pub player: Player,
    /// The deviating player's moves (two for Q, one for Picard).
    pub moves: Vec<MoveSpec>,
    /// Deviator's payoff.
    pub payoff: f64,
    /// Deviator's payoff minus their payoff at the profile.
    pub gain: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NeCertificate {
    pub profile: StrategyProfile,
    pub grid: Grid,
    pub eps: f64,
    pub payoff_q: f64,
    pub max_gain_q: f64,
    pub max_gain_picard: f64,
    /// Named axes declared payoff-equivalent by the caller.
    pub equivalent_axes: Vec<String>,
    pub verdict: Verdict,
    pub witness: Option<Deviation>,
}

/// Scan result for one player's deviations.
struct Scan {
    best_gain: f64,
    best_index: usize,
    /// Every grid point off the profile (modulo equivalent axes) is worse by more than eps.
    strict: bool,
}

/// Decodes grid point `index` (first gene most significant).
fn grid_genes(axes: &[Vec<f64>], mut index: usize) -> Vec<f64> {
    let mut genes = vec![0.0; axes.len()];
    for (g, vals) in genes.iter_mut().zip(axes).rev() {
        *g = vals[index % vals.len()];
        index /= vals.len();
    }
    genes
}

fn grid_axes(schema: &Schema, grid: Grid) -> Vec<Vec<f64>> {
    schema.gene_kinds().map(|k| grid.values(k)).collect()
}

/// Payoffs this close are treated as equal when picking a grid maximum.
const TIE_TOL: f64 = 1e-12;

/// Scores every grid point in lexicographic order (first gene most significant).
fn grid_scores<F>(schema: &Schema, grid: Grid, score: F) -> Result<(Vec<Vec<f64>>, Vec<f64>)>
where
    F: Fn(&[MoveSpec]) -> Result<f64> + Sync,
{
    let axes = grid_axes(schema, grid);
    let total: usize = axes.iter().map(Vec::len).product();
    if total == 0 {
        return Err(Error::EmptyInput);
    }
    let scores = (0..total)
        .into_par_iter()
        .map(|i| score(&schema.decode(&grid_genes(&axes, i))?))
        .collect::<Result<Vec<f64>>>()?;
    Ok((axes, scores))
}

/// Index and value of the maximum; near-ties go to the smallest index.
fn argmax(scores: &[f64]) -> (usize, f64) {
    let max = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let i = scores.iter().position(|&s| s >= max - TIE_TOL).expect("non-empty scores");
    (i, scores[i])
}

fn grid_argmax<F>(schema: &Schema, grid: Grid, score: F) -> Result<(usize, f64)>
where
    F: Fn(&[MoveSpec]) -> Result<f64> + Sync,
{
    let (_, scores) = grid_scores(schema, grid, score)?;
    Ok(argmax(&scores))
}

fn scan_player(
    schema: &Schema,
    grid: Grid,
    base_genes: &[f64],
    base_payoff: f64,
    equivalent: &[usize],
    eps: f64,
    payoff_of: impl Fn(&[MoveSpec]) -> Result<f64> + Sync,
) -> Result<Scan> {
    let (axes, payoffs) = grid_scores(schema, grid, payoff_of)?;
    let gains: Vec<f64> = payoffs.iter().map(|p| p - base_payoff).collect();
    let (best_index, best_gain) = argmax(&gains);
    let strict = gains.iter().enumerate().all(|(i, &gain)| {
        let genes = grid_genes(&axes, i);
        let distinct = genes
            .iter()
            .zip(base_genes)
            .enumerate()
            .any(|(k, (g, b))| !equivalent.contains(&k) && (g - b).abs() > MATCH_TOL);
        !distinct || gain < -eps
    });
    Ok(Scan { best_gain, best_index, strict })
}

/// Grid search for profitable unilateral deviations from
/// `(q, picard)`. Q deviates over both moves jointly, Picard over his
/// single move; each keeps the move kinds of the profile.
pub fn certify_ne(
    q: [MoveSpec; 2],
    picard: MoveSpec,
    grid: Grid,
    eps: f64,
    equivalent: &EquivalentAxes,
) -> Result<NeCertificate> {
    for m in q.iter().chain([&picard]) {
        m.validate()?;
    }
    let profile = StrategyProfile { q, picard };
    let payoff_q = play(&profile.game())?.payoff_q;

    let q_schema = Schema::new(vec![q[0].kind(), q[1].kind()]);
    let p_schema = Schema::new(vec![picard.kind()]);
    let q_genes: Vec<f64> = q.iter().flat_map(|m| m.genes()).collect();
    let p_genes: Vec<f64> = picard.genes().to_vec();
    for &i in &equivalent.q {
        q_genes.get(i).ok_or_else(|| Error::Config(format!("Q has no gene axis {i}")))?;
    }
    for &i in &equivalent.picard {
        p_genes.get(i).ok_or_else(|| Error::Config(format!("Picard has no gene axis {i}")))?;
    }

    let q_scan = scan_player(&q_schema, grid, &q_genes, payoff_q, &equivalent.q, eps, |m| {
        Ok(play(&GameProfile::new(m[0], picard, m[1]))?.payoff_q)
    })?;
    let p_scan = scan_player(&p_schema, grid, &p_genes, -payoff_q, &equivalent.picard, eps, |m| {
        Ok(play(&GameProfile::new(q[0], m[0], q[1]))?.payoff_picard)
    })?;

    let refuted = q_scan.best_gain > eps || p_scan.best_gain > eps;
    let verdict = if refuted {
        Verdict::Refuted
    } else if q_scan.strict && p_scan.strict {
        Verdict::StrictNePair
    } else {
        Verdict::NePair
    };

    let witness = if refuted {
        let (player, schema, scan, base) = if q_scan.best_gain >= p_scan.best_gain {
            (Player::Q, &q_schema, &q_scan, payoff_q)
        } else {
            (Player::Picard, &p_schema, &p_scan, -payoff_q)
        };
        let moves = schema.decode(&grid_genes(&grid_axes(schema, grid), scan.best_index))?;
        Some(Deviation { player, moves, payoff: base + scan.best_gain, gain: scan.best_gain })
    } else {
        None
    };

    let q_names = q_schema.gene_names();
    let p_names = p_schema.gene_names();
    let equivalent_axes = equivalent
        .q
        .iter()
        .map(|&i| format!("Q.{}", q_names[i]))
        .chain(equivalent.picard.iter().map(|&i| format!("Picard.{}", p_names[i])))
        .collect();

    Ok(NeCertificate {
        profile,
        grid,
        eps,
        payoff_q,
        max_gain_q: q_scan.best_gain,
        max_gain_picard: p_scan.best_gain,
        equivalent_axes,
        verdict,
        witness,
    })
}

/// Picard's best move of `kind` against Q's `q`, with Picard's payoff.
pub fn best_response_picard(q: &[MoveSpec; 2], kind: MoveKind, grid: Grid) -> Result<(MoveSpec, f64)> {
    let schema = Schema::new(vec![kind]);
    let (i, payoff) = grid_argmax(&schema, grid, |m| Ok(play(&GameProfile::new(q[0], m[0], q[1]))?.payoff_picard))?;
    let mv = schema.decode(&grid_genes(&grid_axes(&schema, grid), i))?[0];
    Ok((mv, payoff))
}

/// Q's best pair of moves of `kinds` against `picard`, with Q's payoff.
pub fn best_response_q(picard: &MoveSpec, kinds: [MoveKind; 2], grid: Grid) -> Result<([MoveSpec; 2], f64)> {
    let schema = Schema::new(kinds.to_vec());
    let (i, payoff) = grid_argmax(&schema, grid, |m| Ok(play(&GameProfile::new(m[0], *picard, m[1]))?.payoff_q))?;
    let moves = schema.decode(&grid_genes(&grid_axes(&schema, grid), i))?;
    Ok(([moves[0], moves[1]], payoff))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DominanceLink {
    pub q: [MoveSpec; 2],
    pub picard: MoveSpec,
    pub payoff_q: f64,
    pub winner: Option<Player>,
}

/// The four-link chain among the tie-forcing strategies' counters:
/// Q beats the σ₃/σ₂ mix, the I/σ₁ mix beats that Q, Q with H beats the
/// I/σ₁ mix, and the σ₃/σ₂ mix beats Q with H.
pub fn cyclic_dominance_table(pro: f64) -> Result<[DominanceLink; 4]> {
    use NamedOperator::*;
    let q_a = [MoveSpec::pure(FRAC_PI_4, 0.0), MoveSpec::pure(FRAC_PI_4, 0.0)];
    let q_b = [MoveSpec::pure(FRAC_PI_4, 0.0), MoveSpec::named(Hadamard)];
    let p_a = MoveSpec::mix(pro, Sigma3, Sigma2);
    let p_b = MoveSpec::mix(pro, Identity, Sigma1);
    let link = |q: [MoveSpec; 2], picard: MoveSpec| -> Result<DominanceLink> {
        let payoff_q = play(&GameProfile::new(q[0], picard, q[1]))?.payoff_q;
        let winner = if payoff_q > NE_EPS {
            Some(Player::Q)
        } else if payoff_q < -NE_EPS {
            Some(Player::Picard)
        } else {
            None
        };
        Ok(DominanceLink { q, picard, payoff_q, winner })
    };
    Ok([link(q_a, p_a)?, link(q_a, p_b)?, link(q_b, p_b)?, link(q_b, p_a)?])
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FamilyAgreement {
    pub family: Family,
    pub draws: usize,
    pub max_deviation: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleReport {
    pub tolerance: f64,
    pub families: Vec<FamilyAgreement>,
    pub pass: bool,
}

/// Oracle agreement over `draws` random members of every family.
pub fn oracle_report(draws: usize, seed: u64, tolerance: f64) -> Result<OracleReport> {
    let mut rng = stream(seed, 0);
    let mut families = Vec::new();
    for family in Family::ALL {
        let mut max_deviation: f64 = 0.0;
        for _ in 0..draws {
            let profile = family.sample(&mut rng);
            max_deviation = max_deviation.max(check_oracle_agreement(&profile)?);
        }
        families.push(FamilyAgreement { family, draws, max_deviation, pass: max_deviation < tolerance });
    }
    let pass = families.iter().all(|f| f.pass);
    Ok(OracleReport { tolerance, families, pass })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NamedCertificate {
    pub name: String,
    pub expected: Vec<Verdict>,
    pub certificate: NeCertificate,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NeReport {
    pub certificates: Vec<NamedCertificate>,
    pub pass: bool,
}

/// Representative profiles of each equilibrium claim with the verdicts
/// they must receive.
pub fn reference_profiles() -> Vec<(&'static str, StrategyProfile, EquivalentAxes, Vec<Verdict>)> {
    use NamedOperator::*;
    let ne = vec![Verdict::NePair, Verdict::StrictNePair];
    let cat_q = [MoveSpec::pure(FRAC_PI_4, 0.0), MoveSpec::pure(FRAC_PI_4, FRAC_PI_2)];
    vec![
        (
            "classical_es_set",
            StrategyProfile { q: [MoveSpec::classical(0.5), MoveSpec::classical(0.3)], picard: MoveSpec::classical(0.5) },
            EquivalentAxes { q: vec![1], picard: vec![] },
            vec![Verdict::NePair],
        ),
        (
            "quantum_q_winning",
            StrategyProfile { q: [MoveSpec::pure(FRAC_PI_4, 0.0), MoveSpec::named(Hadamard)], picard: MoveSpec::classical(0.5) },
            EquivalentAxes::default(),
            ne.clone(),
        ),
        (
            "cat1",
            StrategyProfile { q: cat_q, picard: MoveSpec::mix(0.5, Sigma1, Sigma3) },
            EquivalentAxes::default(),
            ne.clone(),
        ),
        (
            "cat2",
            StrategyProfile { q: cat_q, picard: MoveSpec::mix(0.5, Sigma2, Identity) },
            EquivalentAxes::default(),
            ne,
        ),
        (
            "cat3",
            StrategyProfile { q: [MoveSpec::pure(0.0, 0.0), MoveSpec::named(Hadamard)], picard: MoveSpec::mix(0.5, Sigma3, Sigma2) },
            EquivalentAxes::default(),
            vec![Verdict::Refuted],
        ),
        (
            "cat4",
            StrategyProfile {
                q: [MoveSpec::pure(FRAC_PI_2, 0.0), MoveSpec::pure(FRAC_PI_4, 0.0)],
                picard: MoveSpec::mix(0.5, Identity, Sigma1),
            },
            EquivalentAxes::default(),
            vec![Verdict::Refuted],
        ),
    ]
}

pub fn ne_report(grid: Grid, eps: f64) -> Result<NeReport> {
    let mut certificates = Vec::new();
    for (name, profile, axes, expected) in reference_profiles() {
        let certificate = certify_ne(profile.q, profile.picard, grid, eps, &axes)?;
        let pass = expected.contains(&certificate.verdict)
            && (certificate.verdict != Verdict::Refuted || certificate.witness.is_some());
        certificates.push(NamedCertificate { name: name.to_string(), expected, certificate, pass });
    }
    let pass = certificates.iter().all(|c| c.pass);
    Ok(NeReport { certificates, pass })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CycleReport {
    pub links: Vec<DominanceLink>,
    pub pass: bool,
}

/// The chain must alternate Q, Picard, Q, Picard; the last winner's
/// counter is the first link again.
pub fn cycle_report(pro: f64) -> Result<CycleReport> {
    let links = cyclic_dominance_table(pro)?;
    let expected = [Player::Q, Player::Picard, Player::Q, Player::Picard];
    let pass = links.iter().zip(expected).all(|(l, w)| l.winner == Some(w));
    Ok(CycleReport { links: links.to_vec(), pass })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qmat::Mat2;

    fn approx(a: &DensityMatrix, m: [[f64; 2]; 2]) -> bool {
        a.matrix().max_abs_diff(&Mat2::from_real(m)) < 1e-12
    }

    #[test]
    fn quantum_q_family_ends_heads_up() {
        let t = oracle_trace(&GameProfile::new(
            MoveSpec::pure(FRAC_PI_4, 1.3),
            MoveSpec::classical(0.8),
            MoveSpec::named(NamedOperator::Hadamard),
        ))
        .unwrap();
        assert!(approx(&t.rho3, [[1.0, 0.0], [0.0, 0.0]]));
    }

    #[test]
    fn quantum_picard_family_keeps_second_state() {
        let p1 = 0.3;
        let t = oracle_trace(&GameProfile::new(
            MoveSpec::classical(p1),
            MoveSpec::pure(FRAC_PI_4, 2.0),
            MoveSpec::classical(0.9),
        ))
        .unwrap();
        assert_eq!(t.rho2, t.rho3);
        assert!(approx(&t.rho3, [[0.5, 0.5 * (1.0 - 2.0 * p1)], [0.5 * (1.0 - 2.0 * p1), 0.5]]));
    }

    #[test]
    fn cat3_family_final_state() {
        let pro = 0.7;
        let t = oracle_trace(&GameProfile::new(
            MoveSpec::pure(0.0, 0.4),
            MoveSpec::mix(pro, NamedOperator::Sigma3, NamedOperator::Sigma2),
            MoveSpec::named(NamedOperator::Hadamard),
        ))
        .unwrap();
        let off = 0.5 * (2.0 * pro - 1.0);
        assert!(approx(&t.rho3, [[0.5, off], [off, 0.5]]));
    }

    #[test]
    fn swapped_branch_order_is_recognized() {
        let a = GameProfile::new(
            MoveSpec::pure(0.0, 0.4),
            MoveSpec::mix(0.7, NamedOperator::Sigma3, NamedOperator::Sigma2),
            MoveSpec::named(NamedOperator::Hadamard),
        );
        let mut b = a;
        b.picard_move = MoveSpec::mix(0.3, NamedOperator::Sigma2, NamedOperator::Sigma3);
        assert_eq!(oracle_trace(&a).unwrap(), oracle_trace(&b).unwrap());
    }

    #[test]
    fn unknown_profiles_are_rejected() {
        let p = GameProfile::new(MoveSpec::pure(0.3, 0.0), MoveSpec::classical(0.5), MoveSpec::pure(0.2, 0.1));
        assert_eq!(family_of(&p), None);
        assert_eq!(oracle_trace(&p), Err(Error::UnknownFamily));
    }

    #[test]
    fn flip_no_flip_matches_classical_oracle() {
        let p = GameProfile::new(MoveSpec::classical(1.0), MoveSpec::classical(0.0), MoveSpec::classical(1.0));
        assert!(check_oracle_agreement(&p).unwrap() < 1e-12);
        let p = GameProfile::new(MoveSpec::classical(0.0), MoveSpec::classical(1.0), MoveSpec::classical(0.0));
        assert!(check_oracle_agreement(&p).unwrap() < 1e-12);
    }

    #[test]
    fn perturbed_oracle_is_detected() {
        let mut rng = stream(3, 0);
        let profile = Family::Cat1.sample(&mut rng);
        let deviation = check_oracle_agreement_with(&profile, |p| {
            let mut t = oracle_trace(p)?;
            t.rho2 = DensityMatrix::from_bloch({
                let [x, y, z] = t.rho2.bloch();
                [x * 0.99, y, z]
            })?;
            Ok(t)
        })
        .unwrap();
        // Bloch x scaled by 0.99 moves an off-diagonal entry by x/200.
        let x = play_trace(&profile).unwrap()[2].bloch()[0];
        assert!((deviation - x.abs() * 0.005).abs() < 1e-12);

        let profile = GameProfile::new(MoveSpec::classical(0.2), MoveSpec::classical(0.6), MoveSpec::classical(0.1));
        let deviation = check_oracle_agreement_with(&profile, |p| {
            let mut t = oracle_trace(p)?;
            t.rho3 = DensityMatrix::classical(t.rho3.matrix().get(0, 0).re - 0.01)?;
            Ok(t)
        })
        .unwrap();
        assert!(deviation > 1e-3);
    }

    #[test]
    fn grid_values_cover_full_ranges() {
        let g = Grid::default();
        let th = g.values(GeneKind::Theta);
        assert_eq!(th.len(), 21);
        assert_eq!(th[0], 0.0);
        assert_eq!(th[20], FRAC_PI_2);
        assert!((th[10] - FRAC_PI_4).abs() < 1e-15);
        let ph = g.values(GeneKind::Phi);
        assert_eq!(ph[20], PI);
        assert!((ph[10] - FRAC_PI_2).abs() < 1e-15);
        assert_eq!(g.values(GeneKind::Probability)[1], 0.05);
    }

    #[test]
    fn grid_points_enumerate_lexicographically() {
        let axes = vec![vec![0.0, 1.0], vec![10.0, 20.0, 30.0]];
        let all: Vec<Vec<f64>> = (0..6).map(|i| grid_genes(&axes, i)).collect();
        assert_eq!(all[0], vec![0.0, 10.0]);
        assert_eq!(all[2], vec![0.0, 30.0]);
        assert_eq!(all[3], vec![1.0, 10.0]);
    }

    #[test]
    fn winning_profile_is_an_equilibrium_picard_cannot_touch() {
        let q = [MoveSpec::pure(FRAC_PI_4, 0.0), MoveSpec::pure(FRAC_PI_4, PI)];
        let cert = certify_ne(q, MoveSpec::classical(0.5), Grid::default(), NE_EPS, &EquivalentAxes::default()).unwrap();
        assert!((cert.payoff_q - 1.0).abs() < 1e-12);
        assert!(cert.max_gain_picard.abs() < 1e-12);
        assert_eq!(cert.verdict, Verdict::NePair);
        assert!(cert.witness.is_none());

        // Picard's probability is payoff-irrelevant and Q's first phase is free:
        // declaring both leaves no equal-payoff deviation.
        let axes = EquivalentAxes { q: vec![1], picard: vec![0] };
        let cert = certify_ne(q, MoveSpec::classical(0.5), Grid::default(), NE_EPS, &axes).unwrap();
        assert_eq!(cert.verdict, Verdict::StrictNePair);
        assert_eq!(cert.equivalent_axes, vec!["Q.m1_phi".to_string(), "Picard.pro".to_string()]);
    }

    #[test]
    fn classical_es_set_is_an_equilibrium_but_not_strict() {
        let cert = certify_ne(
            [MoveSpec::classical(0.5), MoveSpec::classical(0.3)],
            MoveSpec::classical(0.5),
            Grid::default(),
            NE_EPS,
            &EquivalentAxes { q: vec![1], picard: vec![] },
        )
        .unwrap();
        assert_eq!(cert.verdict, Verdict::NePair);
        assert!(cert.max_gain_q.abs() < 1e-12 && cert.max_gain_picard.abs() < 1e-12);
    }

    #[test]
    fn classical_profile_off_the_es_set_is_refuted() {
        let cert = certify_ne(
            [MoveSpec::classical(0.2), MoveSpec::classical(0.3)],
            MoveSpec::classical(0.1),
            Grid::default(),
            NE_EPS,
            &EquivalentAxes::default(),
        )
        .unwrap();
        assert_eq!(cert.verdict, Verdict::Refuted);
        let w = cert.witness.unwrap();
        assert!(w.gain > NE_EPS);
    }

    #[test]
    fn theta_deviation_in_second_move_is_punished() {
        let q = [MoveSpec::pure(FRAC_PI_4, 0.0), MoveSpec::pure(PI / 3.0, PI)];
        let (_, picard_payoff) = best_response_picard(&q, MoveKind::ClassicalMixed, Grid::default()).unwrap();
        assert!(-picard_payoff < 1.0 - 1e-3);
    }

    #[test]
    fn ties_resolve_to_the_smallest_grid_point() {
        // Every classical Picard move scores the same against the winning Q.
        let q = [MoveSpec::pure(FRAC_PI_4, 0.0), MoveSpec::pure(FRAC_PI_4, PI)];
        let (mv, _) = best_response_picard(&q, MoveKind::ClassicalMixed, Grid::default()).unwrap();
        assert_eq!(mv, MoveSpec::classical(0.0));
    }

    #[test]
    fn dominance_chain_alternates_winners() {
        for pro in [0.0, 0.5, 1.0] {
            let r = cycle_report(pro).unwrap();
            assert!(r.pass, "{:?}", r.links);
            assert!(r.links[0].payoff_q > 0.0);
        }
    }

    #[test]
    fn certificate_serializes_verdict_names() {
        let cert = certify_ne(
            [MoveSpec::classical(0.5), MoveSpec::classical(0.5)],
            MoveSpec::classical(0.5),
            Grid { points: 3 },
            NE_EPS,
            &EquivalentAxes::default(),
        )
        .unwrap();
        let json = serde_json::to_string(&cert).unwrap();
        assert!(json.contains("\"verdict\":\"NE-pair\""), "{json}");
    }

    #[test]
    fn bad_equivalent_axis_is_a_config_error() {
        let r = certify_ne(
            [MoveSpec::classical(0.5), MoveSpec::classical(0.5)],
            MoveSpec::classical(0.5),
            Grid { points: 3 },
            NE_EPS,
            &EquivalentAxes { q: vec![7], picard: vec![] },
        );
        assert!(matches!(r, Err(Error::Config(_))));
    }
}
