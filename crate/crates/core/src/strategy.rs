//! Strategy parametrization, moves and gene encodings.

use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_2, PI};
use std::fmt;
use std::sync::Arc;

use arrayvec::ArrayVec;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::qmat::{Complex, Mat2, Unitary2};

pub const THETA_MAX: f64 = FRAC_PI_2;
pub const PHI_MAX: f64 = PI;

fn check_range(name: &'static str, value: f64, lo: f64, hi: f64) -> Result<()> {
    if value.is_finite() && (lo..=hi).contains(&value) {
        Ok(())
    } else {
        Err(Error::OutOfRange { name, value, lo, hi })
    }
}

/// Angles of the two-parameter unitary family `U(θ, φ)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StrategyParams {
    pub theta: f64,
    pub phi: f64,
}

impl StrategyParams {
    pub fn new(theta: f64, phi: f64) -> Result<Self> {
        let p = StrategyParams { theta, phi };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        check_range("theta", self.theta, 0.0, THETA_MAX)?;
        check_range("phi", self.phi, 0.0, PHI_MAX)
    }

    pub fn unitary(&self) -> Result<Unitary2> {
        make_unitary(*self)
    }
}

/// `U(θ,φ) = [[cos θ, -e^{iφ} sin θ], [sin θ, e^{iφ} cos θ]]`.
pub fn make_unitary(params: StrategyParams) -> Result<Unitary2> {
    params.validate()?;
    let (s, c) = params.theta.sin_cos();
    let phase = Complex::from_polar(1.0, params.phi);
    Unitary2::new(Mat2::new(
        Complex::new(c, 0.0),
        -phase * s,
        Complex::new(s, 0.0),
        phase * c,
    ))
}

/// Operators that appear among the evolved strategies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NamedOperator {
    Sigma1,
    Sigma2,
    Sigma3,
    Identity,
    Hadamard,
}

impl NamedOperator {
    pub const ALL: [NamedOperator; 5] = [
        NamedOperator::Sigma1,
        NamedOperator::Sigma2,
        NamedOperator::Sigma3,
        NamedOperator::Identity,
        NamedOperator::Hadamard,
    ];

    /// Exact matrix. σ₂ uses the real form `[[0,-1],[1,0]]`.
    pub fn matrix(self) -> Mat2 {
        match self {
            NamedOperator::Sigma1 => Mat2::from_real([[0.0, 1.0], [1.0, 0.0]]),
            NamedOperator::Sigma2 => Mat2::from_real([[0.0, -1.0], [1.0, 0.0]]),
            NamedOperator::Sigma3 => Mat2::from_real([[1.0, 0.0], [0.0, -1.0]]),
            NamedOperator::Identity => Mat2::IDENTITY,
            NamedOperator::Hadamard => {
                Mat2::from_real([[FRAC_1_SQRT_2, FRAC_1_SQRT_2], [FRAC_1_SQRT_2, -FRAC_1_SQRT_2]])
            }
        }
    }

    pub fn unitary(self) -> Unitary2 {
        Unitary2::new(self.matrix()).expect("named operators are unitary")
    }

    /// The `(θ, φ)` at which `U(θ, φ)` equals this operator.
    pub fn params(self) -> StrategyParams {
        let (theta, phi) = match self {
            NamedOperator::Sigma1 => (FRAC_PI_2, PI),
            NamedOperator::Sigma2 => (FRAC_PI_2, 0.0),
            NamedOperator::Sigma3 => (0.0, PI),
            NamedOperator::Identity => (0.0, 0.0),
            NamedOperator::Hadamard => (FRAC_PI_2 / 2.0, PI),
        };
        StrategyParams { theta, phi }
    }
}

impl fmt::Display for NamedOperator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            NamedOperator::Sigma1 => "sigma1",
            NamedOperator::Sigma2 => "sigma2",
            NamedOperator::Sigma3 => "sigma3",
            NamedOperator::Identity => "identity",
            NamedOperator::Hadamard => "hadamard",
        };
        f.write_str(s)
    }
}

pub fn named_operator(name: NamedOperator) -> Unitary2 {
    name.unitary()
}

/// One player action.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MoveSpec {
    /// Flip with probability `p_flip`, otherwise leave the penny alone.
    ClassicalMixed { p_flip: f64 },
    PureQuantum { params: StrategyParams },
    /// Apply `first` with probability `p_first`, otherwise `second`.
    MixedTwoUnitary {
        p_first: f64,
        first: StrategyParams,
        second: StrategyParams,
    },
}

/// At most two weighted unitaries.
pub type Branches = ArrayVec<(f64, Unitary2), 2>;

impl MoveSpec {
    pub fn classical(p_flip: f64) -> Self {
        MoveSpec::ClassicalMixed { p_flip }
    }

    pub fn pure(theta: f64, phi: f64) -> Self {
        MoveSpec::PureQuantum { params: StrategyParams { theta, phi } }
    }

    pub fn named(op: NamedOperator) -> Self {
        MoveSpec::PureQuantum { params: op.params() }
    }

    pub fn mix(p_first: f64, first: NamedOperator, second: NamedOperator) -> Self {
        MoveSpec::MixedTwoUnitary {
            p_first,
            first: first.params(),
            second: second.params(),
        }
    }

    pub fn kind(&self) -> MoveKind {
        match self {
            MoveSpec::ClassicalMixed { .. } => MoveKind::ClassicalMixed,
            MoveSpec::PureQuantum { .. } => MoveKind::PureQuantum,
            MoveSpec::MixedTwoUnitary { .. } => MoveKind::MixedTwoUnitary,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            MoveSpec::ClassicalMixed { p_flip } => check_range("p_flip", *p_flip, 0.0, 1.0),
            MoveSpec::PureQuantum { params } => params.validate(),
            MoveSpec::MixedTwoUnitary { p_first, first, second } => {
                check_range("p_first", *p_first, 0.0, 1.0)?;
                first.validate()?;
                second.validate()
            }
        }
    }

    /// The move as a list of `(probability, unitary)` branches.
    pub fn branches(&self) -> Result<Branches> {
        self.validate()?;
        let mut out = Branches::new();
        match self {
            MoveSpec::ClassicalMixed { p_flip } => {
                out.push((*p_flip, NamedOperator::Sigma1.unitary()));
                out.push((1.0 - p_flip, Unitary2::identity()));
            }
            MoveSpec::PureQuantum { params } => out.push((1.0, make_unitary(*params)?)),
            MoveSpec::MixedTwoUnitary { p_first, first, second } => {
                out.push((*p_first, make_unitary(*first)?));
                out.push((1.0 - p_first, make_unitary(*second)?));
            }
        }
        Ok(out)
    }

    /// Genes in natural units, in schema order.
    pub fn genes(&self) -> ArrayVec<f64, 5> {
        let mut g = ArrayVec::new();
        match self {
            MoveSpec::ClassicalMixed { p_flip } => g.push(*p_flip),
            MoveSpec::PureQuantum { params } => {
                g.push(params.theta);
                g.push(params.phi);
            }
            MoveSpec::MixedTwoUnitary { p_first, first, second } => {
                g.extend([*p_first, first.theta, first.phi, second.theta, second.phi]);
            }
        }
        g
    }
}

pub fn move_to_branches(m: &MoveSpec) -> Result<Branches> {
    m.branches()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GeneKind {
    Probability,
    Theta,
    Phi,
}

impl GeneKind {
    pub fn bounds(self) -> (f64, f64) {
        match self {
            GeneKind::Probability => (0.0, 1.0),
            GeneKind::Theta => (0.0, THETA_MAX),
            GeneKind::Phi => (0.0, PHI_MAX),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MoveKind {
    ClassicalMixed,
    PureQuantum,
    MixedTwoUnitary,
}

impl MoveKind {
    pub fn genes(self) -> &'static [(GeneKind, &'static str)] {
        use GeneKind::*;
        match self {
            MoveKind::ClassicalMixed => &[(Probability, "pro")],
            MoveKind::PureQuantum => &[(Theta, "theta"), (Phi, "phi")],
            MoveKind::MixedTwoUnitary => &[
                (Probability, "pro"),
                (Theta, "theta1"),
                (Phi, "phi1"),
                (Theta, "theta2"),
                (Phi, "phi2"),
            ],
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            MoveKind::ClassicalMixed => "classical_mixed",
            MoveKind::PureQuantum => "pure_quantum",
            MoveKind::MixedTwoUnitary => "mixed_two_unitary",
        }
    }

    fn decode(self, g: &[f64]) -> MoveSpec {
        match self {
            MoveKind::ClassicalMixed => MoveSpec::ClassicalMixed { p_flip: g[0] },
            MoveKind::PureQuantum => MoveSpec::pure(g[0], g[1]),
            MoveKind::MixedTwoUnitary => MoveSpec::MixedTwoUnitary {
                p_first: g[0],
                first: StrategyParams { theta: g[1], phi: g[2] },
                second: StrategyParams { theta: g[3], phi: g[4] },
            },
        }
    }
}

/// Maps a flat gene vector to a player's full move sequence.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Schema {
    moves: Vec<MoveKind>,
}

impl Schema {
    pub fn new(moves: Vec<MoveKind>) -> Self {
        Schema { moves }
    }

    pub fn moves(&self) -> &[MoveKind] {
        &self.moves
    }

    pub fn gene_count(&self) -> usize {
        self.moves.iter().map(|m| m.genes().len()).sum()
    }

    pub fn gene_kinds(&self) -> impl Iterator<Item = GeneKind> + '_ {
        self.moves.iter().flat_map(|m| m.genes().iter().map(|(k, _)| *k))
    }

    pub fn bounds(&self) -> Vec<(f64, f64)> {
        self.gene_kinds().map(GeneKind::bounds).collect()
    }

    /// Column names: `pro`, `theta`, ... for one move, `m1_theta`, `m2_phi`, ... otherwise.
    pub fn gene_names(&self) -> Vec<String> {
        let multi = self.moves.len() > 1;
        self.moves
            .iter()
            .enumerate()
            .flat_map(|(i, m)| {
                m.genes().iter().map(move |(_, n)| {
                    if multi {
                        format!("m{}_{}", i + 1, n)
                    } else {
                        (*n).to_string()
                    }
                })
            })
            .collect()
    }

    pub fn check_genes(&self, genes: &[f64]) -> Result<()> {
        let expected = self.gene_count();
        if genes.len() != expected {
            return Err(Error::GeneCount { expected, got: genes.len() });
        }
        for (g, kind) in genes.iter().zip(self.gene_kinds()) {
            let (lo, hi) = kind.bounds();
            let name = match kind {
                GeneKind::Probability => "probability gene",
                GeneKind::Theta => "theta gene",
                GeneKind::Phi => "phi gene",
            };
            check_range(name, *g, lo, hi)?;
        }
        Ok(())
    }

    pub fn decode(&self, genes: &[f64]) -> Result<Vec<MoveSpec>> {
        self.check_genes(genes)?;
        let mut out = Vec::with_capacity(self.moves.len());
        let mut at = 0;
        for kind in &self.moves {
            let n = kind.genes().len();
            out.push(kind.decode(&genes[at..at + n]));
            at += n;
        }
        Ok(out)
    }

    pub fn encode(&self, moves: &[MoveSpec]) -> Result<Vec<f64>> {
        if moves.len() != self.moves.len() {
            return Err(Error::GeneCount { expected: self.moves.len(), got: moves.len() });
        }
        let mut genes = Vec::with_capacity(self.gene_count());
        for (index, (m, kind)) in moves.iter().zip(&self.moves).enumerate() {
            if m.kind() != *kind {
                return Err(Error::MoveKindMismatch { index, expected: kind.name() });
            }
            m.validate()?;
            genes.extend(m.genes());
        }
        Ok(genes)
    }
}

/// A real-valued gene vector bound to its schema.
#[derive(Debug, Clone, PartialEq)]
pub struct Chromosome {
    schema: Arc<Schema>,
    genes: Vec<f64>,
}

impl Chromosome {
    pub fn new(schema: Arc<Schema>, genes: Vec<f64>) -> Result<Self> {
        schema.check_genes(&genes)?;
        Ok(Chromosome { schema, genes })
    }

    pub fn encode(schema: Arc<Schema>, moves: &[MoveSpec]) -> Result<Self> {
        let genes = schema.encode(moves)?;
        Ok(Chromosome { schema, genes })
    }

    pub fn schema(&self) -> &Arc<Schema> {
        &self.schema
    }

    pub fn genes(&self) -> &[f64] {
        &self.genes
    }

    pub fn decode(&self) -> Result<Vec<MoveSpec>> {
        self.schema.decode(&self.genes)
    }

    pub(crate) fn from_parts_unchecked(schema: Arc<Schema>, genes: Vec<f64>) -> Self {
        debug_assert!(schema.check_genes(&genes).is_ok());
        Chromosome { schema, genes }
    }

    pub fn same_schema(&self, other: &Chromosome) -> bool {
        Arc::ptr_eq(&self.schema, &other.schema) || self.schema == other.schema
    }
}

pub fn decode(chrom: &Chromosome) -> Result<Vec<MoveSpec>> {
    chrom.decode()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qmat::{evolve_pure, DensityMatrix, TOL};
    use proptest::prelude::*;
    use std::f64::consts::FRAC_PI_4;

    #[test]
    fn unitary_family_special_points() {
        let f = make_unitary(StrategyParams::new(FRAC_PI_2, PI).unwrap()).unwrap();
        assert!(f.matrix().max_abs_diff(&NamedOperator::Sigma1.matrix()) < 1e-15);
        let n = make_unitary(StrategyParams::new(0.0, 0.0).unwrap()).unwrap();
        assert_eq!(*n.matrix(), Mat2::IDENTITY);
        let h = make_unitary(StrategyParams::new(FRAC_PI_4, PI).unwrap()).unwrap();
        assert!(h.matrix().max_abs_diff(&NamedOperator::Hadamard.matrix()) < 1e-15);
    }

    #[test]
    fn named_operators_match_family() {
        for op in NamedOperator::ALL {
            let u = make_unitary(op.params()).unwrap();
            assert!(u.matrix().max_abs_diff(&op.matrix()) < 1e-15, "{op}");
        }
        assert_eq!(
            named_operator(NamedOperator::Sigma3).matrix(),
            &Mat2::from_real([[1.0, 0.0], [0.0, -1.0]])
        );
        assert_eq!(
            named_operator(NamedOperator::Sigma2).matrix(),
            &Mat2::from_real([[0.0, -1.0], [1.0, 0.0]])
        );
    }

    #[test]
    fn rejects_out_of_range_angles() {
        assert!(StrategyParams::new(1.6, 0.0).is_err());
        assert!(StrategyParams::new(0.2, -0.1).is_err());
        assert!(make_unitary(StrategyParams { theta: 0.1, phi: 4.0 }).is_err());
        assert!(MoveSpec::classical(1.1).branches().is_err());
    }

    #[test]
    fn branches_for_each_kind() {
        let b = move_to_branches(&MoveSpec::classical(0.5)).unwrap();
        assert_eq!(b.len(), 2);
        assert_eq!(b[0].0, 0.5);
        assert_eq!(*b[0].1.matrix(), NamedOperator::Sigma1.matrix());
        assert_eq!(*b[1].1.matrix(), Mat2::IDENTITY);

        let b = move_to_branches(&MoveSpec::pure(FRAC_PI_4, PI)).unwrap();
        assert_eq!(b.len(), 1);
        assert_eq!(b[0].0, 1.0);
        assert!(b[0].1.matrix().max_abs_diff(&NamedOperator::Hadamard.matrix()) < 1e-15);

        let m = MoveSpec::MixedTwoUnitary {
            p_first: 0.3,
            first: StrategyParams { theta: FRAC_PI_2, phi: 0.0 },
            second: StrategyParams { theta: 0.0, phi: 0.0 },
        };
        let b = move_to_branches(&m).unwrap();
        assert_eq!(b[0].0, 0.3);
        assert_eq!(b[1].0, 0.7);
        assert!(b[0].1.matrix().max_abs_diff(&NamedOperator::Sigma2.matrix()) < 1e-15);
        assert_eq!(*b[1].1.matrix(), Mat2::IDENTITY);
    }

    #[test]
    fn decode_examples() {
        let one_classical = Arc::new(Schema::new(vec![MoveKind::ClassicalMixed]));
        let c = Chromosome::new(one_classical, vec![0.5]).unwrap();
        assert_eq!(decode(&c).unwrap(), vec![MoveSpec::classical(0.5)]);

        let two_pure = Arc::new(Schema::new(vec![MoveKind::PureQuantum; 2]));
        let c = Chromosome::new(two_pure, vec![FRAC_PI_4, FRAC_PI_2, FRAC_PI_4, PI]).unwrap();
        assert_eq!(
            c.decode().unwrap(),
            vec![MoveSpec::pure(FRAC_PI_4, FRAC_PI_2), MoveSpec::pure(FRAC_PI_4, PI)]
        );

        let mixed = Arc::new(Schema::new(vec![MoveKind::MixedTwoUnitary]));
        let c = Chromosome::new(mixed, vec![0.5, FRAC_PI_2, PI, 0.0, 0.0]).unwrap();
        assert_eq!(
            c.decode().unwrap(),
            vec![MoveSpec::MixedTwoUnitary {
                p_first: 0.5,
                first: StrategyParams { theta: FRAC_PI_2, phi: PI },
                second: StrategyParams { theta: 0.0, phi: 0.0 },
            }]
        );
    }

    #[test]
    fn decode_rejects_bad_genes() {
        let schema = Arc::new(Schema::new(vec![MoveKind::PureQuantum]));
        assert_eq!(
            Chromosome::new(schema.clone(), vec![0.1]),
            Err(Error::GeneCount { expected: 2, got: 1 })
        );
        assert!(Chromosome::new(schema.clone(), vec![2.0, 0.0]).is_err());
        assert!(schema.decode(&[0.1, 3.5]).is_err());
        assert!(matches!(
            schema.encode(&[MoveSpec::classical(0.2)]),
            Err(Error::MoveKindMismatch { index: 0, .. })
        ));
    }

    #[test]
    fn gene_names_follow_schema() {
        let k = Schema::new(vec![MoveKind::PureQuantum; 2]);
        assert_eq!(k.gene_names(), ["m1_theta", "m1_phi", "m2_theta", "m2_phi"]);
        let p = Schema::new(vec![MoveKind::MixedTwoUnitary]);
        assert_eq!(p.gene_names(), ["pro", "theta1", "phi1", "theta2", "phi2"]);
    }

    fn params() -> impl Strategy<Value = StrategyParams> {
        (0.0..=THETA_MAX, 0.0..=PHI_MAX).prop_map(|(theta, phi)| StrategyParams { theta, phi })
    }

    fn any_move() -> impl Strategy<Value = MoveSpec> {
        prop_oneof![
            (0.0..=1.0f64).prop_map(MoveSpec::classical),
            params().prop_map(|params| MoveSpec::PureQuantum { params }),
            (0.0..=1.0f64, params(), params()).prop_map(|(p_first, first, second)| {
                MoveSpec::MixedTwoUnitary { p_first, first, second }
            }),
        ]
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]

        #[test]
        fn family_is_unitary(p in params()) {
            let u = make_unitary(p).unwrap();
            let dev = (*u.matrix() * u.matrix().dagger()).max_abs_diff(&Mat2::IDENTITY);
            prop_assert!(dev < TOL);
        }

        #[test]
        fn encode_decode_round_trip(moves in prop::collection::vec(any_move(), 1..4)) {
            let schema = Arc::new(Schema::new(moves.iter().map(MoveSpec::kind).collect()));
            let c = Chromosome::encode(schema, &moves).unwrap();
            prop_assert_eq!(c.decode().unwrap(), moves);
        }

        #[test]
        fn phi_does_not_matter_on_diagonal_states(s in 0.0..=1.0f64, p in params()) {
            let rho = DensityMatrix::classical(s).unwrap();
            let with_phi = evolve_pure(&rho, &make_unitary(p).unwrap());
            let without = evolve_pure(&rho, &make_unitary(StrategyParams { phi: 0.0, ..p }).unwrap());
            let (a, b) = (with_phi.matrix(), without.matrix());
            prop_assert!((a.get(0, 0) - b.get(0, 0)).norm() < TOL);
            prop_assert!((a.get(1, 1) - b.get(1, 1)).norm() < TOL);
            prop_assert!((a.get(0, 1).norm() - b.get(0, 1).norm()).abs() < TOL);
        }

        #[test]
        fn quarter_turn_equalizes_diagonal(s in 0.0..=1.0f64, phi in 0.0..=PHI_MAX) {
            let rho = DensityMatrix::classical(s).unwrap();
            let out = evolve_pure(&rho, &make_unitary(StrategyParams { theta: FRAC_PI_4, phi }).unwrap());
            prop_assert!((out.matrix().get(0, 0).re - 0.5).abs() < TOL);
            prop_assert!((out.matrix().get(1, 1).re - 0.5).abs() < TOL);
        }
    }
}
