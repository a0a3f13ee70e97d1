//! Arrows of the category of finite probability spaces, the pullback functor
//! `L` and the conditional-expectation functor `E`.
//!
//! An arrow `f⁻: X̄ → Ȳ` is stored through its underlying measurable map
//! `f: Y → X`, so `src` is `X̄` while the outcome table is indexed by the
//! outcomes of `dst = Ȳ`. Admissibility requires measurability and
//! `P_Y ∘ f⁻¹ ≪ P_X`; both are checked atom by atom at construction.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use num::Zero;
use thiserror::Error;

use crate::measure::{same_space, FinProbSpace, MeasureError, RandomVariable};
use crate::scalar::{format_rational, Rational, Scalar};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CategoryError {
    #[error(transparent)]
    Measure(#[from] MeasureError),
    #[error("underlying map is not total: {0}")]
    Totality(String),
    #[error("underlying map is not measurable: preimage of atom {atom} is not a union of atoms")]
    NotMeasurable { atom: String },
    #[error("not absolutely continuous: atom {atom} is null but its preimage has measure {preimage_mass}")]
    NotAbsolutelyContinuous { atom: String, preimage_mass: String },
    #[error("arrows are not composable: codomain of the first is not the domain of the second")]
    CompositionMismatch,
}

pub type Result<T, E = CategoryError> = std::result::Result<T, E>;

#[derive(Debug, Clone)]
pub struct ProbArrow {
    src: Arc<FinProbSpace>,
    dst: Arc<FinProbSpace>,
    /// `map[y] = f(y)` as outcome indices.
    map: Vec<usize>,
    /// `image_atom[y]` is the src atom containing `f(y)`.
    image_atom: Vec<usize>,
    /// `P_Y(f⁻¹(A))` per src atom `A`.
    preimage_mass: Vec<Rational>,
    measure_preserving: bool,
}

impl PartialEq for ProbArrow {
    fn eq(&self, other: &Self) -> bool {
        same_space(&self.src, &other.src)
            && same_space(&self.dst, &other.dst)
            && self.map == other.map
    }
}

impl ProbArrow {
    /// Validates an arrow `src → dst` whose underlying map sends the `y`-th
    /// outcome of `dst` to outcome `map[y]` of `src`.
    pub fn from_indices(
        src: Arc<FinProbSpace>,
        dst: Arc<FinProbSpace>,
        map: Vec<usize>,
    ) -> Result<Self> {
        if map.len() != dst.len() {
            return Err(CategoryError::Totality(format!(
                "map has {} entries, codomain has {} outcomes",
                map.len(),
                dst.len()
            )));
        }
        if let Some((y, &x)) = map.iter().enumerate().find(|(_, &x)| x >= src.len()) {
            return Err(CategoryError::Totality(format!(
                "`{}` maps to outcome index {x}, outside the domain",
                dst.outcomes()[y]
            )));
        }
        let xs = src.sigma();
        let image_atom: Vec<usize> = map.iter().map(|&x| xs.atom_of(x)).collect();

        // Measurable iff every dst atom lands inside a single src atom.
        for atom in dst.sigma().atoms() {
            let target = image_atom[atom[0]];
            if let Some(&y) = atom.iter().find(|&&y| image_atom[y] != target) {
                let split = target.min(image_atom[y]);
                return Err(CategoryError::NotMeasurable {
                    atom: src.atom_label(split),
                });
            }
        }

        let mut preimage_mass = vec![Rational::zero(); xs.num_atoms()];
        for (y, &a) in image_atom.iter().enumerate() {
            preimage_mass[a] += dst.weight(y);
        }
        let mut measure_preserving = true;
        for (a, mass) in preimage_mass.iter().enumerate() {
            let own = src.atom_mass(a);
            if own.is_zero() && !mass.is_zero() {
                return Err(CategoryError::NotAbsolutelyContinuous {
                    atom: src.atom_label(a),
                    preimage_mass: format_rational(mass),
                });
            }
            measure_preserving &= own == *mass;
        }

        Ok(Self {
            src,
            dst,
            map,
            image_atom,
            preimage_mass,
            measure_preserving,
        })
    }

    /// Label-based constructor: `map` sends each `dst` outcome label to a
    /// `src` outcome label.
    pub fn new(
        src: Arc<FinProbSpace>,
        dst: Arc<FinProbSpace>,
        map: &BTreeMap<String, String>,
    ) -> Result<Self> {
        for y in map.keys() {
            if dst.index_of(y).is_err() {
                return Err(CategoryError::Totality(format!(
                    "`{y}` is not an outcome of the codomain"
                )));
            }
        }
        let indices = dst
            .outcomes()
            .iter()
            .map(|y| {
                let x = map
                    .get(y.as_str())
                    .ok_or_else(|| CategoryError::Totality(format!("no image given for `{y}`")))?;
                src.index_of(x).map_err(|_| {
                    CategoryError::Totality(format!(
                        "`{y}` maps to `{x}`, which is not an outcome of the domain"
                    ))
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Self::from_indices(src, dst, indices)
    }

    pub fn identity(space: Arc<FinProbSpace>) -> Self {
        let n = space.len();
        Self::from_indices(space.clone(), space, (0..n).collect())
            .expect("identity arrow is always admissible")
    }

    /// `second ∘ first`: given `first: X̄ → Ȳ` and `second: Ȳ → Z̄`, returns
    /// `X̄ → Z̄` with underlying map `f ∘ g: Z → X`.
    pub fn compose(first: &ProbArrow, second: &ProbArrow) -> Result<Self> {
        if !same_space(&first.dst, &second.src) {
            return Err(CategoryError::CompositionMismatch);
        }
        let map = second.map.iter().map(|&y| first.map[y]).collect();
        Self::from_indices(first.src.clone(), second.dst.clone(), map)
    }

    /// `self` followed by `next`.
    pub fn then(&self, next: &ProbArrow) -> Result<Self> {
        Self::compose(self, next)
    }

    pub fn src(&self) -> &Arc<FinProbSpace> {
        &self.src
    }

    pub fn dst(&self) -> &Arc<FinProbSpace> {
        &self.dst
    }

    pub fn underlying(&self) -> &[usize] {
        &self.map
    }

    /// Underlying map by label, `dst` outcome → `src` outcome.
    pub fn underlying_labels(&self) -> BTreeMap<String, String> {
        self.map
            .iter()
            .enumerate()
            .map(|(y, &x)| {
                (
                    self.dst.outcomes()[y].to_string(),
                    self.src.outcomes()[x].to_string(),
                )
            })
            .collect()
    }

    pub fn is_measure_preserving(&self) -> bool {
        self.measure_preserving
    }

    pub fn is_identity(&self) -> bool {
        same_space(&self.src, &self.dst) && self.map.iter().enumerate().all(|(i, &x)| i == x)
    }

    /// The src atom that `f(y)` belongs to.
    pub fn image_atom(&self, y: usize) -> usize {
        self.image_atom[y]
    }

    /// `f⁻¹(A)` for src atom `A`, as dst outcome indices.
    pub fn preimage_of_atom(&self, atom: usize) -> BTreeSet<usize> {
        (0..self.dst.len())
            .filter(|&y| self.image_atom[y] == atom)
            .collect()
    }

    /// `f⁻¹(E)` for an event of src given by atom indices.
    pub fn preimage(&self, atoms: &BTreeSet<usize>) -> BTreeSet<usize> {
        (0..self.dst.len())
            .filter(|&y| atoms.contains(&self.image_atom[y]))
            .collect()
    }

    /// `P_Y(f⁻¹(A))` for src atom `A`.
    pub fn preimage_mass(&self, atom: usize) -> &Rational {
        &self.preimage_mass[atom]
    }

    /// Dst atoms that make up `f⁻¹(A)` for src atom `A`.
    pub fn preimage_atoms(&self, atom: usize) -> Vec<usize> {
        self.dst
            .sigma()
            .atoms()
            .iter()
            .enumerate()
            .filter(|(_, b)| self.image_atom[b[0]] == atom)
            .map(|(b, _)| b)
            .collect()
    }
}

/// `L f⁻ : [u] ↦ [u ∘ f]`, from variables on `src` to variables on `dst`.
pub fn pullback_l<S: Scalar>(
    arrow: &ProbArrow,
    u: &RandomVariable<S>,
) -> Result<RandomVariable<S>> {
    if !same_space(u.space(), &arrow.src) {
        return Err(MeasureError::SpaceMismatch.into());
    }
    let values = arrow.map.iter().map(|&x| u.value(x).clone()).collect();
    Ok(RandomVariable::new(arrow.dst.clone(), values)?.canonicalize())
}

/// `E^{f⁻}(v)`: on each positive src atom `A` the value
/// `∫_{f⁻¹(A)} v dP_Y / P_X(A)`; zero on null atoms.
pub fn cond_expect<S: Scalar>(
    arrow: &ProbArrow,
    v: &RandomVariable<S>,
) -> Result<RandomVariable<S>> {
    if !same_space(v.space(), &arrow.dst) {
        return Err(MeasureError::SpaceMismatch.into());
    }
    let xs = arrow.src.sigma();
    let mut sums = vec![S::zero(); xs.num_atoms()];
    for (y, &a) in arrow.image_atom.iter().enumerate() {
        let w = arrow.dst.weight(y);
        if !w.is_zero() {
            sums[a] = sums[a].clone() + v.value(y).clone() * S::from_rational(w);
        }
    }
    let per_atom: Vec<S> = sums
        .into_iter()
        .enumerate()
        .map(|(a, sum)| {
            let mass = arrow.src.atom_mass(a);
            if mass.is_zero() {
                S::zero()
            } else {
                sum / S::from_rational(&mass)
            }
        })
        .collect();
    Ok(RandomVariable::from_atom_values(
        arrow.src.clone(),
        &per_atom,
    )?)
}

/// Density of `P_Y ∘ f⁻¹` with respect to `P_X`, i.e. `E^{f⁻}(1)`.
pub fn rn_derivative(arrow: &ProbArrow) -> RandomVariable<Rational> {
    let per_atom: Vec<Rational> = arrow
        .preimage_mass
        .iter()
        .enumerate()
        .map(|(a, m)| {
            let own = arrow.src.atom_mass(a);
            if own.is_zero() {
                Rational::zero()
            } else {
                m / own
            }
        })
        .collect();
    RandomVariable::from_atom_values(arrow.src.clone(), &per_atom)
        .expect("one value per atom is measurable")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measure::{ae_equal, integral, integral_over};
    use crate::scalar::{int, ratio};

    fn two_point(p: Rational) -> Arc<FinProbSpace> {
        let q = int(1) - p.clone();
        Arc::new(
            FinProbSpace::from_labels(&["p", "q"], vec![p, q], &[vec!["p"], vec!["q"]]).unwrap(),
        )
    }

    fn four() -> Arc<FinProbSpace> {
        Arc::new(FinProbSpace::uniform_discrete(&["a", "b", "c", "d"]).unwrap())
    }

    fn pairing() -> BTreeMap<String, String> {
        [("a", "p"), ("b", "p"), ("c", "q"), ("d", "q")]
            .into_iter()
            .map(|(y, x)| (y.to_string(), x.to_string()))
            .collect()
    }

    fn rv(space: &Arc<FinProbSpace>, values: &[i64]) -> RandomVariable<Rational> {
        RandomVariable::new(space.clone(), values.iter().map(|&v| int(v)).collect()).unwrap()
    }

    #[test]
    fn worked_arrows() {
        let mp = ProbArrow::new(two_point(ratio(1, 2)), four(), &pairing()).unwrap();
        assert!(mp.is_measure_preserving());
        let skew = ProbArrow::new(two_point(ratio(1, 4)), four(), &pairing()).unwrap();
        assert!(!skew.is_measure_preserving());
        let err = ProbArrow::new(two_point(int(1)), four(), &pairing()).unwrap_err();
        assert_eq!(
            err,
            CategoryError::NotAbsolutelyContinuous {
                atom: "{q}".into(),
                preimage_mass: "1/2".into()
            }
        );
    }

    #[test]
    fn validation_errors() {
        let mut partial = pairing();
        partial.remove("d");
        assert!(matches!(
            ProbArrow::new(two_point(ratio(1, 2)), four(), &partial),
            Err(CategoryError::Totality(_))
        ));
        let mut foreign = pairing();
        foreign.insert("d".into(), "zz".into());
        assert!(matches!(
            ProbArrow::new(two_point(ratio(1, 2)), four(), &foreign),
            Err(CategoryError::Totality(_))
        ));
        // {a,b} is one atom of the codomain but a ↦ p, b ↦ q
        let coarse = Arc::new(
            FinProbSpace::from_labels(
                &["a", "b", "c", "d"],
                vec![ratio(1, 4); 4],
                &[vec!["a", "b"], vec!["c", "d"]],
            )
            .unwrap(),
        );
        let mut split = pairing();
        split.insert("b".into(), "q".into());
        assert_eq!(
            ProbArrow::new(two_point(ratio(1, 2)), coarse, &split).unwrap_err(),
            CategoryError::NotMeasurable { atom: "{p}".into() }
        );
    }

    #[test]
    fn identity_and_composition() {
        let x = two_point(ratio(1, 2));
        let f = ProbArrow::new(x.clone(), four(), &pairing()).unwrap();
        let id_x = ProbArrow::identity(x.clone());
        assert!(id_x.is_measure_preserving());
        assert!(id_x.is_identity());
        assert_eq!(ProbArrow::compose(&id_x, &f).unwrap(), f);
        assert_eq!(
            ProbArrow::compose(&f, &ProbArrow::identity(four())).unwrap(),
            f
        );
        assert_eq!(
            ProbArrow::compose(&f, &id_x).unwrap_err(),
            CategoryError::CompositionMismatch
        );

        // Z = {z0..z7} uniform, g: z_i ↦ outcome i/2 of Y
        let zl: Vec<String> = (0..8).map(|i| format!("z{i}")).collect();
        let z = Arc::new(FinProbSpace::uniform_discrete(&zl).unwrap());
        let g = ProbArrow::from_indices(four(), z, (0..8).map(|i| i / 2).collect()).unwrap();
        let gf = ProbArrow::compose(&f, &g).unwrap();
        for (zi, &x) in gf.underlying().iter().enumerate() {
            assert_eq!(x, f.underlying()[g.underlying()[zi]]);
        }
        assert_eq!(gf.underlying(), &[0, 0, 0, 0, 1, 1, 1, 1]);
        assert!(gf.is_measure_preserving());
    }

    #[test]
    fn pullback_composes_pointwise() {
        let x = two_point(ratio(1, 2));
        let f = ProbArrow::new(x.clone(), four(), &pairing()).unwrap();
        let u = rv(&x, &[10, 20]);
        assert_eq!(
            pullback_l(&f, &u).unwrap().values(),
            rv(&four(), &[10, 10, 20, 20]).values()
        );
        let id = ProbArrow::identity(x.clone());
        assert!(ae_equal(&pullback_l(&id, &u).unwrap(), &u).unwrap());
        assert_eq!(
            pullback_l(&f, &rv(&four(), &[1, 2, 3, 4])).unwrap_err(),
            CategoryError::Measure(MeasureError::SpaceMismatch)
        );
    }

    #[test]
    fn conditional_expectation_worked_values() {
        let y = four();
        let v = rv(&y, &[1, 3, 2, 4]);
        let mp = ProbArrow::new(two_point(ratio(1, 2)), y.clone(), &pairing()).unwrap();
        assert_eq!(cond_expect(&mp, &v).unwrap().values(), &[int(2), int(3)]);
        let skew = ProbArrow::new(two_point(ratio(1, 4)), y.clone(), &pairing()).unwrap();
        assert_eq!(cond_expect(&skew, &v).unwrap().values(), &[int(4), int(2)]);
        let id = ProbArrow::identity(y.clone());
        assert!(ae_equal(&cond_expect(&id, &v).unwrap(), &v).unwrap());
    }

    #[test]
    fn radon_nikodym_density() {
        let y = four();
        let mp = ProbArrow::new(two_point(ratio(1, 2)), y.clone(), &pairing()).unwrap();
        assert!(ae_equal(
            &rn_derivative(&mp),
            &RandomVariable::constant(mp.src().clone(), int(1))
        )
        .unwrap());
        let skew = ProbArrow::new(two_point(ratio(1, 4)), y.clone(), &pairing()).unwrap();
        let d = rn_derivative(&skew);
        assert_eq!(d.values(), &[int(2), ratio(2, 3)]);
        assert_eq!(integral(&d), int(1));
        assert_eq!(
            d,
            cond_expect(&skew, &RandomVariable::constant(y, int(1))).unwrap()
        );
    }

    #[test]
    fn null_atoms_get_zero() {
        // X has a null atom {n}; nothing maps there.
        let x = Arc::new(
            FinProbSpace::from_labels(&["p", "n"], vec![int(1), int(0)], &[vec!["p"], vec!["n"]])
                .unwrap(),
        );
        let y = Arc::new(
            FinProbSpace::from_labels(&["a", "b"], vec![int(1), int(0)], &[vec!["a"], vec!["b"]])
                .unwrap(),
        );
        // b is null, so it may map into the null atom
        let f = ProbArrow::from_indices(x.clone(), y.clone(), vec![0, 1]).unwrap();
        let v = rv(&y, &[5, 9]);
        let e = cond_expect(&f, &v).unwrap();
        assert_eq!(e.values(), &[int(5), int(0)]);
        let atom: BTreeSet<usize> = [1].into_iter().collect();
        assert_eq!(
            integral_over(&e, &x.sigma().event_of_atoms([1])),
            integral_over(&v, &f.preimage(&atom))
        );
    }
}
