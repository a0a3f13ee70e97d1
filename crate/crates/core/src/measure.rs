//! Finite probability spaces, σ-algebras as partitions, and random variables.
//!
//! A finite σ-algebra is stored as the partition of the outcome set into its
//! atoms; events are exactly the unions of atoms. Weights are exact
//! rationals so that null-set tests are exact predicates.

use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::sync::Arc;

use num::{One, Signed, Zero};
use thiserror::Error;

use crate::scalar::{format_rational, Rational, Scalar, Tolerance};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MeasureError {
    #[error("outcome label must be non-empty")]
    EmptyLabel,
    #[error("duplicate outcome `{0}`")]
    DuplicateOutcome(String),
    #[error("unknown outcome `{0}`")]
    UnknownOutcome(String),
    #[error("a space needs at least one outcome")]
    NoOutcomes,
    #[error("weight of `{outcome}` is negative ({weight})")]
    NegativeWeight { outcome: String, weight: String },
    #[error("weights sum to {0}, expected 1")]
    WeightsNotNormalized(String),
    #[error("expected {expected} weights, got {got}")]
    WeightCount { expected: usize, got: usize },
    #[error("atoms do not partition the outcomes: {0}")]
    NotAPartition(String),
    #[error("event is not a union of atoms (atom {atom} is split)")]
    NotAnEvent { atom: String },
    #[error("random variables live on different spaces")]
    SpaceMismatch,
    #[error("expected {expected} values, got {got}")]
    ValueCount { expected: usize, got: usize },
    #[error("random variable is not constant on atom {atom}")]
    NotMeasurable { atom: String },
    #[error("random variable takes two values on positive-weight outcomes of atom {atom}")]
    NotAEMeasurable { atom: String },
    #[error("random variable has a non-finite value at `{0}`")]
    NonFinite(String),
}

pub type Result<T, E = MeasureError> = std::result::Result<T, E>;

/// An element of a finite outcome set.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Outcome(String);

impl Outcome {
    pub fn new(label: impl Into<String>) -> Result<Self> {
        let label = label.into();
        if label.is_empty() {
            return Err(MeasureError::EmptyLabel);
        }
        Ok(Self(label))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// A finite σ-algebra, held as the ordered list of its atoms.
///
/// Atoms are lists of outcome indices; `atom_of[i]` is the atom containing
/// outcome `i`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SigmaAlgebra {
    atoms: Vec<Vec<usize>>,
    atom_of: Vec<usize>,
}

impl SigmaAlgebra {
    /// Validates that `atoms` partition `0..n` into non-empty blocks.
    pub fn from_atoms(n: usize, atoms: Vec<Vec<usize>>) -> Result<Self> {
        let mut atom_of = vec![usize::MAX; n];
        for (a, atom) in atoms.iter().enumerate() {
            if atom.is_empty() {
                return Err(MeasureError::NotAPartition(format!("atom {a} is empty")));
            }
            for &i in atom {
                if i >= n {
                    return Err(MeasureError::NotAPartition(format!(
                        "atom {a} refers to outcome index {i} out of range"
                    )));
                }
                if atom_of[i] != usize::MAX {
                    return Err(MeasureError::NotAPartition(format!(
                        "outcome index {i} appears in atoms {} and {a}",
                        atom_of[i]
                    )));
                }
                atom_of[i] = a;
            }
        }
        if let Some(i) = atom_of.iter().position(|&a| a == usize::MAX) {
            return Err(MeasureError::NotAPartition(format!(
                "outcome index {i} is in no atom"
            )));
        }
        Ok(Self { atoms, atom_of })
    }

    /// One atom per outcome.
    pub fn discrete(n: usize) -> Self {
        Self {
            atoms: (0..n).map(|i| vec![i]).collect(),
            atom_of: (0..n).collect(),
        }
    }

    /// The single atom `{all outcomes}`.
    pub fn trivial(n: usize) -> Self {
        Self {
            atoms: vec![(0..n).collect()],
            atom_of: vec![0; n],
        }
    }

    /// Builds the partition whose blocks are the level sets of `block`.
    /// Blocks are numbered by first appearance.
    pub fn from_labels(block: &[usize]) -> Self {
        let mut renumber = HashMap::new();
        let mut atoms: Vec<Vec<usize>> = Vec::new();
        let mut atom_of = Vec::with_capacity(block.len());
        for (i, b) in block.iter().enumerate() {
            let a = *renumber.entry(*b).or_insert_with(|| {
                atoms.push(Vec::new());
                atoms.len() - 1
            });
            atoms[a].push(i);
            atom_of.push(a);
        }
        Self { atoms, atom_of }
    }

    pub fn atoms(&self) -> &[Vec<usize>] {
        &self.atoms
    }

    pub fn num_atoms(&self) -> usize {
        self.atoms.len()
    }

    pub fn atom_of(&self, outcome: usize) -> usize {
        self.atom_of[outcome]
    }

    pub fn is_discrete(&self) -> bool {
        self.atoms.len() == self.atom_of.len()
    }

    pub fn is_trivial(&self) -> bool {
        self.atoms.len() == 1
    }

    /// Outcome set of the event given as a set of atom indices.
    pub fn event_of_atoms(&self, atoms: impl IntoIterator<Item = usize>) -> BTreeSet<usize> {
        atoms
            .into_iter()
            .flat_map(|a| self.atoms[a].iter().copied())
            .collect()
    }
}

/// A finite probability space `(outcomes, σ-algebra, weights)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FinProbSpace {
    outcomes: Vec<Outcome>,
    weights: Vec<Rational>,
    sigma: SigmaAlgebra,
}

impl FinProbSpace {
    pub fn new(
        outcomes: Vec<Outcome>,
        weights: Vec<Rational>,
        sigma: SigmaAlgebra,
    ) -> Result<Self> {
        if outcomes.is_empty() {
            return Err(MeasureError::NoOutcomes);
        }
        let mut seen = BTreeSet::new();
        for o in &outcomes {
            if !seen.insert(o.as_str()) {
                return Err(MeasureError::DuplicateOutcome(o.0.clone()));
            }
        }
        if weights.len() != outcomes.len() {
            return Err(MeasureError::WeightCount {
                expected: outcomes.len(),
                got: weights.len(),
            });
        }
        if sigma.atom_of.len() != outcomes.len() {
            return Err(MeasureError::NotAPartition(format!(
                "partition covers {} outcomes, space has {}",
                sigma.atom_of.len(),
                outcomes.len()
            )));
        }
        for (o, w) in outcomes.iter().zip(&weights) {
            if w.is_negative() {
                return Err(MeasureError::NegativeWeight {
                    outcome: o.0.clone(),
                    weight: format_rational(w),
                });
            }
        }
        let total: Rational = weights.iter().sum();
        if !total.is_one() {
            return Err(MeasureError::WeightsNotNormalized(format_rational(&total)));
        }
        Ok(Self {
            outcomes,
            weights,
            sigma,
        })
    }

    /// Convenience constructor from labels; `atoms` are given by label.
    pub fn from_labels<S: AsRef<str>>(
        labels: &[S],
        weights: Vec<Rational>,
        atoms: &[Vec<S>],
    ) -> Result<Self> {
        let outcomes = labels
            .iter()
            .map(|l| Outcome::new(l.as_ref()))
            .collect::<Result<Vec<_>>>()?;
        let index: HashMap<&str, usize> = labels
            .iter()
            .enumerate()
            .map(|(i, l)| (l.as_ref(), i))
            .collect();
        let atoms = atoms
            .iter()
            .map(|atom| {
                atom.iter()
                    .map(|l| {
                        index
                            .get(l.as_ref())
                            .copied()
                            .ok_or_else(|| MeasureError::UnknownOutcome(l.as_ref().to_string()))
                    })
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        let sigma = SigmaAlgebra::from_atoms(labels.len(), atoms)?;
        Self::new(outcomes, weights, sigma)
    }

    /// Uniform weights over `labels` with the discrete σ-algebra.
    pub fn uniform_discrete<S: AsRef<str>>(labels: &[S]) -> Result<Self> {
        let n = labels.len().max(1) as i64;
        let weights = vec![crate::scalar::ratio(1, n); labels.len()];
        let atoms: Vec<Vec<&str>> = labels.iter().map(|l| vec![l.as_ref()]).collect();
        Self::from_labels(
            &labels.iter().map(|l| l.as_ref()).collect::<Vec<_>>(),
            weights,
            &atoms,
        )
    }

    pub fn len(&self) -> usize {
        self.outcomes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.outcomes.is_empty()
    }

    pub fn outcomes(&self) -> &[Outcome] {
        &self.outcomes
    }

    pub fn weights(&self) -> &[Rational] {
        &self.weights
    }

    pub fn weight(&self, outcome: usize) -> &Rational {
        &self.weights[outcome]
    }

    pub fn sigma(&self) -> &SigmaAlgebra {
        &self.sigma
    }

    pub fn index_of(&self, label: &str) -> Result<usize> {
        self.outcomes
            .iter()
            .position(|o| o.as_str() == label)
            .ok_or_else(|| MeasureError::UnknownOutcome(label.to_string()))
    }

    pub fn is_null(&self, outcome: usize) -> bool {
        self.weights[outcome].is_zero()
    }

    /// Probability of an arbitrary set of outcome indices (no event check).
    pub fn mass<'a>(&self, outcomes: impl IntoIterator<Item = &'a usize>) -> Rational {
        outcomes.into_iter().map(|&i| &self.weights[i]).sum()
    }

    pub fn atom_mass(&self, atom: usize) -> Rational {
        self.mass(&self.sigma.atoms[atom])
    }

    /// `{a,b}`-style label of an atom.
    pub fn atom_label(&self, atom: usize) -> String {
        let names: Vec<&str> = self.sigma.atoms[atom]
            .iter()
            .map(|&i| self.outcomes[i].as_str())
            .collect();
        format!("{{{}}}", names.join(","))
    }

    /// Checks that a set of outcome indices is a union of atoms.
    pub fn check_event(&self, event: &BTreeSet<usize>) -> Result<()> {
        for (a, atom) in self.sigma.atoms.iter().enumerate() {
            let inside = atom.iter().filter(|i| event.contains(i)).count();
            if inside != 0 && inside != atom.len() {
                return Err(MeasureError::NotAnEvent {
                    atom: self.atom_label(a),
                });
            }
        }
        Ok(())
    }

    /// `P(event)` for an event given by outcome labels.
    pub fn measure_of<S: AsRef<str>>(&self, event: &[S]) -> Result<Rational> {
        let indices = event
            .iter()
            .map(|l| self.index_of(l.as_ref()))
            .collect::<Result<BTreeSet<_>>>()?;
        self.check_event(&indices)?;
        Ok(self.mass(&indices))
    }
}

/// A total, σ-measurable map from outcomes to scalars.
#[derive(Debug, Clone)]
pub struct RandomVariable<S> {
    space: Arc<FinProbSpace>,
    values: Vec<S>,
}

impl<S: PartialEq> PartialEq for RandomVariable<S> {
    fn eq(&self, other: &Self) -> bool {
        same_space(&self.space, &other.space) && self.values == other.values
    }
}

/// Pointer equality first, structural equality as fallback.
pub fn same_space(a: &Arc<FinProbSpace>, b: &Arc<FinProbSpace>) -> bool {
    Arc::ptr_eq(a, b) || **a == **b
}

impl<S: Scalar> RandomVariable<S> {
    /// Builds a variable that must be constant on every atom.
    pub fn new(space: Arc<FinProbSpace>, values: Vec<S>) -> Result<Self> {
        if values.len() != space.len() {
            return Err(MeasureError::ValueCount {
                expected: space.len(),
                got: values.len(),
            });
        }
        for (i, v) in values.iter().enumerate() {
            if !v.to_f64().is_finite() {
                return Err(MeasureError::NonFinite(space.outcomes[i].0.clone()));
            }
        }
        for (a, atom) in space.sigma.atoms.iter().enumerate() {
            let first = &values[atom[0]];
            if atom.iter().any(|&i| values[i] != *first) {
                return Err(MeasureError::NotMeasurable {
                    atom: space.atom_label(a),
                });
            }
        }
        Ok(Self { space, values })
    }

    /// Builds the canonical representative of an a.e.-measurable vector.
    pub fn from_ae(space: Arc<FinProbSpace>, values: Vec<S>) -> Result<Self> {
        if values.len() != space.len() {
            return Err(MeasureError::ValueCount {
                expected: space.len(),
                got: values.len(),
            });
        }
        let values = canonicalize(&space, space.sigma(), &values)?;
        Self::new(space, values)
    }

    /// Builds from one value per atom.
    pub fn from_atom_values(space: Arc<FinProbSpace>, per_atom: &[S]) -> Result<Self> {
        if per_atom.len() != space.sigma.num_atoms() {
            return Err(MeasureError::ValueCount {
                expected: space.sigma.num_atoms(),
                got: per_atom.len(),
            });
        }
        let values = (0..space.len())
            .map(|i| per_atom[space.sigma.atom_of(i)].clone())
            .collect();
        Self::new(space, values)
    }

    pub fn constant(space: Arc<FinProbSpace>, c: S) -> Self {
        let values = vec![c; space.len()];
        Self { space, values }
    }

    pub fn zero(space: Arc<FinProbSpace>) -> Self {
        Self::constant(space, S::zero())
    }

    /// Indicator of an event given as a set of atom indices.
    pub fn indicator(space: Arc<FinProbSpace>, atoms: &BTreeSet<usize>) -> Self {
        let values = (0..space.len())
            .map(|i| {
                if atoms.contains(&space.sigma.atom_of(i)) {
                    S::one()
                } else {
                    S::zero()
                }
            })
            .collect();
        Self { space, values }
    }

    pub fn space(&self) -> &Arc<FinProbSpace> {
        &self.space
    }

    pub fn values(&self) -> &[S] {
        &self.values
    }

    pub fn value(&self, outcome: usize) -> &S {
        &self.values[outcome]
    }

    /// Value on an atom (the variable is constant there).
    pub fn atom_value(&self, atom: usize) -> &S {
        &self.values[self.space.sigma.atoms[atom][0]]
    }

    pub fn get(&self, label: &str) -> Result<&S> {
        Ok(&self.values[self.space.index_of(label)?])
    }

    /// Representative with value 0 on null atoms.
    pub fn canonicalize(&self) -> Self {
        let mut values = self.values.clone();
        for (a, atom) in self.space.sigma.atoms.iter().enumerate() {
            if self.space.atom_mass(a).is_zero() {
                for &i in atom {
                    values[i] = S::zero();
                }
            }
        }
        Self {
            space: self.space.clone(),
            values,
        }
    }

    fn zip_with(&self, other: &Self, op: impl Fn(&S, &S) -> S) -> Result<Self> {
        if !same_space(&self.space, &other.space) {
            return Err(MeasureError::SpaceMismatch);
        }
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| op(a, b))
            .collect();
        Ok(Self {
            space: self.space.clone(),
            values,
        })
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a.clone() + b.clone())
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a.clone() - b.clone())
    }

    /// Pointwise product.
    pub fn mul(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a.clone() * b.clone())
    }

    pub fn scale(&self, c: &S) -> Self {
        self.map(|v| c.clone() * v.clone())
    }

    pub fn add_constant(&self, c: &S) -> Self {
        self.map(|v| v.clone() + c.clone())
    }

    /// Applies `f` pointwise; measurability is preserved automatically.
    pub fn map<T: Scalar>(&self, f: impl Fn(&S) -> T) -> RandomVariable<T> {
        RandomVariable {
            space: self.space.clone(),
            values: self.values.iter().map(f).collect(),
        }
    }

    /// Rational → real promotion (or the identity for reals).
    pub fn to_real(&self) -> RandomVariable<f64> {
        self.map(|v| v.to_f64())
    }
}

impl RandomVariable<f64> {
    /// Rejects non-finite values.
    pub fn check_finite(&self) -> Result<()> {
        match self.values.iter().position(|v| !v.is_finite()) {
            Some(i) => Err(MeasureError::NonFinite(self.space.outcomes[i].0.clone())),
            None => Ok(()),
        }
    }
}

/// Representative of an a.e.-measurable vector w.r.t. `sigma`: on each atom
/// the common value of its positive-weight outcomes, and 0 on null atoms.
pub fn canonicalize<S: Scalar>(
    space: &FinProbSpace,
    sigma: &SigmaAlgebra,
    values: &[S],
) -> Result<Vec<S>> {
    if values.len() != space.len() || sigma.atom_of.len() != space.len() {
        return Err(MeasureError::ValueCount {
            expected: space.len(),
            got: values.len(),
        });
    }
    let mut out = vec![S::zero(); values.len()];
    for atom in &sigma.atoms {
        let mut support = atom.iter().filter(|&&i| !space.is_null(i));
        let Some(&first) = support.next() else {
            continue;
        };
        if support.any(|&i| values[i] != values[first]) {
            let names: Vec<&str> = atom.iter().map(|&i| space.outcomes[i].as_str()).collect();
            return Err(MeasureError::NotAEMeasurable {
                atom: format!("{{{}}}", names.join(",")),
            });
        }
        for &i in atom {
            out[i] = values[first].clone();
        }
    }
    Ok(out)
}

fn check_pair<S>(u: &RandomVariable<S>, v: &RandomVariable<S>) -> Result<()> {
    if same_space(&u.space, &v.space) {
        Ok(())
    } else {
        Err(MeasureError::SpaceMismatch)
    }
}

fn support_all<S>(
    u: &RandomVariable<S>,
    v: &RandomVariable<S>,
    pred: impl Fn(&S, &S) -> bool,
) -> Result<bool> {
    check_pair(u, v)?;
    Ok((0..u.space.len())
        .filter(|&i| !u.space.is_null(i))
        .all(|i| pred(&u.values[i], &v.values[i])))
}

/// `u ~ v`: equal on every positive-weight outcome.
pub fn ae_equal<S: Scalar>(u: &RandomVariable<S>, v: &RandomVariable<S>) -> Result<bool> {
    support_all(u, v, |a, b| a == b)
}

/// `u ≲ v`: `u ≤ v` on every positive-weight outcome.
pub fn ae_leq<S: Scalar>(u: &RandomVariable<S>, v: &RandomVariable<S>) -> Result<bool> {
    support_all(u, v, |a, b| a <= b)
}

/// `ae_equal` under a tolerance.
pub fn ae_close(u: &RandomVariable<f64>, v: &RandomVariable<f64>, tol: &Tolerance) -> Result<bool> {
    support_all(u, v, |a, b| tol.close(*a, *b))
}

/// `ae_leq` with one-sided slack.
pub fn ae_leq_within(
    u: &RandomVariable<f64>,
    v: &RandomVariable<f64>,
    tol: &Tolerance,
) -> Result<bool> {
    support_all(u, v, |a, b| tol.leq(*a, *b))
}

/// Largest `|u - v|` over the support.
pub fn ae_max_abs_diff(u: &RandomVariable<f64>, v: &RandomVariable<f64>) -> Result<f64> {
    check_pair(u, v)?;
    Ok((0..u.space.len())
        .filter(|&i| !u.space.is_null(i))
        .map(|i| (u.values[i] - v.values[i]).abs())
        .fold(0.0, f64::max))
}

/// `∫ v dP`.
pub fn integral<S: Scalar>(v: &RandomVariable<S>) -> S {
    v.values
        .iter()
        .zip(&v.space.weights)
        .filter(|(_, w)| !w.is_zero())
        .fold(S::zero(), |acc, (x, w)| {
            acc + x.clone() * S::from_rational(w)
        })
}

/// `∫_event v dP` for an event given by outcome indices.
pub fn integral_over<S: Scalar>(v: &RandomVariable<S>, event: &BTreeSet<usize>) -> S {
    event
        .iter()
        .filter(|&&i| !v.space.is_null(i))
        .fold(S::zero(), |acc, &i| {
            acc + v.values[i].clone() * S::from_rational(&v.space.weights[i])
        })
}

/// Essential supremum of `|v|`.
pub fn ess_sup_norm<S: Scalar>(v: &RandomVariable<S>) -> S {
    (0..v.space.len())
        .filter(|&i| !v.space.is_null(i))
        .map(|i| v.values[i].abs())
        .fold(S::zero(), |m, x| if x > m { x } else { m })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::{int, ratio};
    use proptest::prelude::*;

    fn uniform4() -> Arc<FinProbSpace> {
        Arc::new(FinProbSpace::uniform_discrete(&["a", "b", "c", "d"]).unwrap())
    }

    fn skewed() -> Arc<FinProbSpace> {
        Arc::new(
            FinProbSpace::from_labels(
                &["x", "y"],
                vec![ratio(1, 4), ratio(3, 4)],
                &[vec!["x"], vec!["y"]],
            )
            .unwrap(),
        )
    }

    fn with_null() -> Arc<FinProbSpace> {
        Arc::new(
            FinProbSpace::from_labels(&["a", "b"], vec![int(1), int(0)], &[vec!["a"], vec!["b"]])
                .unwrap(),
        )
    }

    fn rv(space: &Arc<FinProbSpace>, values: &[i64]) -> RandomVariable<Rational> {
        RandomVariable::new(space.clone(), values.iter().map(|&v| int(v)).collect()).unwrap()
    }

    #[test]
    fn measure_of_events() {
        let s = uniform4();
        assert_eq!(s.measure_of(&["a", "c"]).unwrap(), ratio(1, 2));
        assert_eq!(s.measure_of::<&str>(&[]).unwrap(), int(0));
        // direct summation of the single weight
        assert_eq!(skewed().measure_of(&["y"]).unwrap(), ratio(3, 4));
    }

    #[test]
    fn measure_of_rejects_non_events_and_foreign_outcomes() {
        let s = Arc::new(
            FinProbSpace::from_labels(
                &["a", "b", "c"],
                vec![ratio(1, 3); 3],
                &[vec!["a", "b"], vec!["c"]],
            )
            .unwrap(),
        );
        assert!(matches!(
            s.measure_of(&["a"]),
            Err(MeasureError::NotAnEvent { .. })
        ));
        assert_eq!(
            s.measure_of(&["z"]),
            Err(MeasureError::UnknownOutcome("z".into()))
        );
        assert_eq!(s.measure_of(&["a", "b"]).unwrap(), ratio(2, 3));
    }

    #[test]
    fn construction_errors() {
        let err = FinProbSpace::from_labels(
            &["a", "b"],
            vec![ratio(1, 2), ratio(49, 100)],
            &[vec!["a"], vec!["b"]],
        )
        .unwrap_err();
        assert_eq!(err.to_string(), "weights sum to 99/100, expected 1");
        assert!(matches!(
            FinProbSpace::from_labels(&["a", "a"], vec![ratio(1, 2); 2], &[vec!["a"]]),
            Err(MeasureError::DuplicateOutcome(_)) | Err(MeasureError::NotAPartition(_))
        ));
        assert!(matches!(
            FinProbSpace::from_labels(&["a", "b"], vec![ratio(1, 2); 2], &[vec!["a"]]),
            Err(MeasureError::NotAPartition(_))
        ));
        assert!(matches!(
            FinProbSpace::from_labels(
                &["a", "b"],
                vec![ratio(3, 2), ratio(-1, 2)],
                &[vec!["a"], vec!["b"]]
            ),
            Err(MeasureError::NegativeWeight { .. })
        ));
        assert_eq!(Outcome::new(""), Err(MeasureError::EmptyLabel));
    }

    #[test]
    fn ae_relations() {
        let s = uniform4();
        let u = rv(&s, &[1, 2, 3, 4]);
        assert!(ae_equal(&u, &u).unwrap());
        let n = with_null();
        assert!(ae_equal(&rv(&n, &[1, 5]), &rv(&n, &[1, 9])).unwrap());
        assert!(ae_leq(&rv(&n, &[1, 9]), &rv(&n, &[1, 5])).unwrap());
        let two = Arc::new(FinProbSpace::uniform_discrete(&["a", "b"]).unwrap());
        assert!(!ae_equal(&rv(&two, &[1, 2]), &rv(&two, &[1, 3])).unwrap());
        assert!(ae_leq(&rv(&two, &[1, 2]), &rv(&two, &[1, 3])).unwrap());
        assert_eq!(
            ae_equal(&rv(&two, &[1, 2]), &u),
            Err(MeasureError::SpaceMismatch)
        );
    }

    #[test]
    fn integral_and_norm() {
        let s = uniform4();
        assert_eq!(integral(&rv(&s, &[1, 3, 2, 4])), ratio(5, 2));
        assert_eq!(
            integral(&RandomVariable::constant(s.clone(), int(7))),
            int(7)
        );
        let ind: RandomVariable<Rational> =
            RandomVariable::indicator(s.clone(), &[0, 2].into_iter().collect());
        assert_eq!(integral(&ind), s.measure_of(&["a", "c"]).unwrap());
        assert_eq!(ess_sup_norm(&rv(&s, &[1, 3, 2, 4])), int(4));
        assert_eq!(ess_sup_norm(&RandomVariable::constant(s, int(-3))), int(3));
        assert_eq!(ess_sup_norm(&rv(&with_null(), &[1, -5])), int(1));
    }

    #[test]
    fn canonical_representatives() {
        let n = with_null();
        let v = rv(&n, &[2, 7]);
        let c = v.canonicalize();
        assert_eq!(c.values(), &[int(2), int(0)]);
        assert_eq!(rv(&n, &[2, -4]).canonicalize(), c);
        let s = Arc::new(
            FinProbSpace::from_labels(
                &["a", "b", "c"],
                vec![ratio(1, 2), int(0), ratio(1, 2)],
                &[vec!["a", "b"], vec!["c"]],
            )
            .unwrap(),
        );
        // b is null inside a positive atom: its value is overwritten
        let fixed = RandomVariable::from_ae(s.clone(), vec![int(1), int(99), int(3)]).unwrap();
        assert_eq!(fixed.values(), &[int(1), int(1), int(3)]);
        let bad = FinProbSpace::from_labels(
            &["a", "b"],
            vec![ratio(1, 2), ratio(1, 2)],
            &[vec!["a", "b"]],
        )
        .unwrap();
        assert!(matches!(
            canonicalize(&bad, bad.sigma(), &[int(1), int(2)]),
            Err(MeasureError::NotAEMeasurable { .. })
        ));
        assert!(matches!(
            RandomVariable::new(Arc::new(bad), vec![int(1), int(2)]),
            Err(MeasureError::NotMeasurable { .. })
        ));
    }

    fn arb_space() -> impl Strategy<Value = Arc<FinProbSpace>> {
        (2usize..8)
            .prop_flat_map(|n| {
                (
                    prop::collection::vec(0u32..5, n),
                    prop::collection::vec(0usize..3, n),
                )
            })
            .prop_filter("needs positive mass", |(w, _)| w.iter().any(|&x| x > 0))
            .prop_map(|(w, blocks)| {
                let total: u32 = w.iter().sum();
                let labels: Vec<String> = (0..w.len()).map(|i| format!("o{i}")).collect();
                let weights = w.iter().map(|&x| ratio(x as i64, total as i64)).collect();
                let outcomes = labels
                    .iter()
                    .map(|l| Outcome::new(l.clone()).unwrap())
                    .collect();
                Arc::new(
                    FinProbSpace::new(outcomes, weights, SigmaAlgebra::from_labels(&blocks))
                        .unwrap(),
                )
            })
    }

    fn arb_rv(space: Arc<FinProbSpace>) -> impl Strategy<Value = RandomVariable<Rational>> {
        let k = space.sigma().num_atoms();
        prop::collection::vec(-4i64..5, k).prop_map(move |vals| {
            let per: Vec<Rational> = vals.into_iter().map(int).collect();
            RandomVariable::from_atom_values(space.clone(), &per).unwrap()
        })
    }

    fn arb_triple() -> impl Strategy<Value = [RandomVariable<Rational>; 3]> {
        arb_space().prop_flat_map(|s| {
            (arb_rv(s.clone()), arb_rv(s.clone()), arb_rv(s)).prop_map(|(a, b, c)| [a, b, c])
        })
    }

    proptest! {
        #[test]
        fn ae_leq_is_a_preorder_inducing_ae_equal([u, v, w] in arb_triple()) {
            prop_assert!(ae_leq(&u, &u).unwrap());
            if ae_leq(&u, &v).unwrap() && ae_leq(&v, &w).unwrap() {
                prop_assert!(ae_leq(&u, &w).unwrap());
            }
            let both = ae_leq(&u, &v).unwrap() && ae_leq(&v, &u).unwrap();
            prop_assert_eq!(both, ae_equal(&u, &v).unwrap());
            prop_assert_eq!(ae_equal(&u, &v).unwrap(), ae_equal(&v, &u).unwrap());
        }

        #[test]
        fn canonicalize_is_idempotent([u, _v, _w] in arb_triple()) {
            let once = u.canonicalize();
            prop_assert_eq!(once.canonicalize(), once.clone());
            prop_assert!(ae_equal(&once, &u).unwrap());
        }

        #[test]
        fn integral_is_linear([u, v, _w] in arb_triple(), a in -5i64..6, b in -5i64..6) {
            let (a, b) = (ratio(a, 3), ratio(b, 2));
            let lhs = integral(&u.scale(&a).add(&v.scale(&b)).unwrap());
            prop_assert_eq!(lhs, a * integral(&u) + b * integral(&v));
        }

        #[test]
        fn measure_is_additive(s in arb_space(), mask in 0u32..256) {
            let k = s.sigma().num_atoms();
            let left: BTreeSet<usize> = (0..k).filter(|a| mask >> a & 1 == 1).collect();
            let right: BTreeSet<usize> = (0..k).filter(|a| mask >> a & 1 == 0).collect();
            let le = s.sigma().event_of_atoms(left.iter().copied());
            let re = s.sigma().event_of_atoms(right.iter().copied());
            let all: BTreeSet<usize> = (0..s.len()).collect();
            prop_assert_eq!(s.mass(&le) + s.mass(&re), s.mass(&all));
        }
    }
}
