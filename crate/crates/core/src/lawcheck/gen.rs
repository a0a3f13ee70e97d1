//! Random finite instances.
//!
//! Distributions are artifact choices: small integer weights (some forced to
//! zero), σ-algebras that are trivial or discrete with boosted probability,
//! and variable values on a grid of quarters so conditional variances are
//! never vanishingly small.

use std::sync::Arc;

use num::{BigInt, Signed, Zero};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::category::ProbArrow;
use crate::measure::{FinProbSpace, Outcome, RandomVariable, SigmaAlgebra};
use crate::scalar::{format_rational, int, ratio, Rational, Scalar, Tolerance};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ConfigError {
    #[error("trials must be at least 1")]
    ZeroTrials,
    #[error("max_outcomes must be at least 2, got {0}")]
    TooFewOutcomes(usize),
    #[error("null_weight_prob must lie in [0, 1], got {0}")]
    NullProbability(String),
    #[error("value_range must be a non-empty interval, got [{0}, {1}]")]
    EmptyRange(String, String),
    #[error("tolerance must be finite and non-negative")]
    Tolerance,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GenError {
    #[error("no admissible arrow found after {0} attempts")]
    GenerationExhausted(usize),
}

#[derive(Debug, Clone, PartialEq)]
pub struct GenConfig {
    pub seed: u64,
    pub trials: usize,
    pub max_outcomes: usize,
    pub null_weight_prob: Rational,
    pub value_range: (Rational, Rational),
    /// Comparison policy for the approximate layer.
    pub tolerance: Tolerance,
}

impl Default for GenConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            trials: 100,
            max_outcomes: 12,
            null_weight_prob: ratio(1, 5),
            value_range: (int(-10), int(10)),
            tolerance: Tolerance::default(),
        }
    }
}

impl GenConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.trials == 0 {
            return Err(ConfigError::ZeroTrials);
        }
        if self.max_outcomes < 2 {
            return Err(ConfigError::TooFewOutcomes(self.max_outcomes));
        }
        if self.null_weight_prob.is_negative() || self.null_weight_prob > int(1) {
            return Err(ConfigError::NullProbability(format_rational(
                &self.null_weight_prob,
            )));
        }
        if self.value_range.0 >= self.value_range.1 {
            return Err(ConfigError::EmptyRange(
                format_rational(&self.value_range.0),
                format_rational(&self.value_range.1),
            ));
        }
        let t = self.tolerance;
        if !(t.relative.is_finite()
            && t.relative >= 0.0
            && t.absolute.is_finite()
            && t.absolute >= 0.0)
        {
            return Err(ConfigError::Tolerance);
        }
        Ok(())
    }
}

const ARROW_ATTEMPTS: usize = 16;

/// Deterministic instance generator; one per trial.
pub struct Generator<'a> {
    config: &'a GenConfig,
    rng: ChaCha8Rng,
    fresh: usize,
}

impl<'a> Generator<'a> {
    pub fn new(config: &'a GenConfig, rng: ChaCha8Rng) -> Self {
        Self {
            config,
            rng,
            fresh: 0,
        }
    }

    pub fn from_seed(config: &'a GenConfig, seed: u64) -> Self {
        Self::new(config, ChaCha8Rng::seed_from_u64(seed))
    }

    pub fn rng(&mut self) -> &mut ChaCha8Rng {
        &mut self.rng
    }

    fn fresh_labels(&mut self, n: usize) -> Vec<Outcome> {
        let prefix = (b'a' + (self.fresh % 26) as u8) as char;
        let tag = if self.fresh < 26 {
            prefix.to_string()
        } else {
            format!("{prefix}{}", self.fresh / 26)
        };
        self.fresh += 1;
        (0..n)
            .map(|i| Outcome::new(format!("{tag}{i}")).expect("non-empty label"))
            .collect()
    }

    fn is_null_draw(&mut self) -> bool {
        let p = self.config.null_weight_prob.to_f64();
        self.rng.gen_bool(p.clamp(0.0, 1.0))
    }

    fn normalize(raw: &[u32]) -> Vec<Rational> {
        let total: u32 = raw.iter().sum();
        raw.iter().map(|&w| ratio(w as i64, total as i64)).collect()
    }

    fn partition(&mut self, n: usize) -> SigmaAlgebra {
        match self.rng.gen_range(0..6) {
            0 => SigmaAlgebra::trivial(n),
            1 => SigmaAlgebra::discrete(n),
            _ => {
                let k = self.rng.gen_range(1..=n);
                let blocks: Vec<usize> = (0..n).map(|_| self.rng.gen_range(0..k)).collect();
                SigmaAlgebra::from_labels(&blocks)
            }
        }
    }

    pub fn space(&mut self) -> Arc<FinProbSpace> {
        let n = self.rng.gen_range(2..=self.config.max_outcomes);
        let mut raw: Vec<u32> = (0..n)
            .map(|_| {
                if self.is_null_draw() {
                    0
                } else {
                    self.rng.gen_range(1..=9)
                }
            })
            .collect();
        if raw.iter().all(|&w| w == 0) {
            let i = self.rng.gen_range(0..n);
            raw[i] = 1;
        }
        let sigma = self.partition(n);
        let outcomes = self.fresh_labels(n);
        Arc::new(
            FinProbSpace::new(outcomes, Self::normalize(&raw), sigma)
                .expect("generated weights are normalized"),
        )
    }

    /// A random admissible arrow `src → dst`: each atom of `dst` is sent
    /// into one atom of `src`, avoiding null atoms when it carries mass.
    pub fn arrow(
        &mut self,
        src: &Arc<FinProbSpace>,
        dst: &Arc<FinProbSpace>,
    ) -> Result<ProbArrow, GenError> {
        let xs = src.sigma();
        let positive: Vec<usize> = (0..xs.num_atoms())
            .filter(|&a| !src.atom_mass(a).is_zero())
            .collect();
        for _ in 0..ARROW_ATTEMPTS {
            let mut map = vec![0; dst.len()];
            for (b, atom) in dst.sigma().atoms().iter().enumerate() {
                let target = if dst.atom_mass(b).is_zero() {
                    self.rng.gen_range(0..xs.num_atoms())
                } else {
                    *positive.choose(&mut self.rng).expect("some atom has mass")
                };
                for &y in atom {
                    map[y] = *xs.atoms()[target]
                        .choose(&mut self.rng)
                        .expect("atoms are non-empty");
                }
            }
            if let Ok(arrow) = ProbArrow::from_indices(src.clone(), dst.clone(), map) {
                return Ok(arrow);
            }
        }
        Err(GenError::GenerationExhausted(ARROW_ATTEMPTS))
    }

    /// Coarsens `dst` into a fresh source space and returns the arrow. With
    /// `reweight` unset the source carries the pushforward measure, so the
    /// arrow is measure-preserving; with it set, atom masses are redrawn
    /// while keeping exactly the same null atoms.
    fn coarsening(
        &mut self,
        dst: &Arc<FinProbSpace>,
        reweight: bool,
    ) -> (Arc<FinProbSpace>, ProbArrow) {
        let ys = dst.sigma();
        let k = self.rng.gen_range(1..=ys.num_atoms());
        let group_of_atom: Vec<usize> = (0..ys.num_atoms())
            .map(|_| self.rng.gen_range(0..k))
            .collect();
        let grouping = SigmaAlgebra::from_labels(&group_of_atom);
        let groups = grouping.num_atoms();

        let budget = self.config.max_outcomes.max(groups);
        let mut sizes = vec![1usize; groups];
        let mut total = groups;
        for s in sizes.iter_mut() {
            let extra = self.rng.gen_range(0..=2);
            if total + extra <= budget {
                *s += extra;
                total += extra;
            }
        }
        let mut first = Vec::with_capacity(groups);
        let mut block = Vec::with_capacity(total);
        for (g, &s) in sizes.iter().enumerate() {
            first.push(block.len());
            block.extend(std::iter::repeat_n(g, s));
        }

        let mut map = vec![0; dst.len()];
        for (b, atom) in ys.atoms().iter().enumerate() {
            let g = grouping.atom_of(b);
            for &y in atom {
                map[y] = first[g] + self.rng.gen_range(0..sizes[g]);
            }
        }
        let mut weights = vec![Rational::zero(); total];
        for (y, &x) in map.iter().enumerate() {
            weights[x] += dst.weight(y);
        }
        if reweight {
            let mut scaled = Vec::with_capacity(total);
            for g in 0..groups {
                let cell = &weights[first[g]..first[g] + sizes[g]];
                let factor = int(self.rng.gen_range(1..=5));
                scaled.extend(cell.iter().map(|w| w * &factor));
            }
            let norm: Rational = scaled.iter().sum();
            weights = scaled.into_iter().map(|w| w / &norm).collect();
        }
        let outcomes = self.fresh_labels(total);
        let src = Arc::new(
            FinProbSpace::new(outcomes, weights, SigmaAlgebra::from_labels(&block))
                .expect("pushforward weights are normalized"),
        );
        let arrow = ProbArrow::from_indices(src.clone(), dst.clone(), map)
            .expect("coarsening maps are admissible");
        (src, arrow)
    }

    /// A measure-preserving arrow into `dst` from a fresh coarser space.
    pub fn mp_arrow(&mut self, dst: &Arc<FinProbSpace>) -> (Arc<FinProbSpace>, ProbArrow) {
        self.coarsening(dst, false)
    }

    /// An arrow into `dst` whose positive source atoms all have positive
    /// preimages, so entropic values are finite; measure-preserving only by
    /// chance.
    pub fn equivalent_arrow(&mut self, dst: &Arc<FinProbSpace>) -> (Arc<FinProbSpace>, ProbArrow) {
        let reweight = self.rng.gen_bool(0.75);
        self.coarsening(dst, reweight)
    }

    fn grid_value(&mut self) -> Rational {
        let (lo, hi) = &self.config.value_range;
        let lo4 = (lo * int(4)).ceil().to_integer();
        let hi4 = (hi * int(4)).floor().to_integer();
        let span: BigInt = &hi4 - &lo4;
        let span = span.try_into().unwrap_or(i64::MAX).max(0);
        let step = self.rng.gen_range(0..=span);
        Rational::new(lo4 + BigInt::from(step), BigInt::from(4))
    }

    /// Exact variable, one grid value per atom; constant with boosted odds.
    pub fn rational_rv(&mut self, space: &Arc<FinProbSpace>) -> RandomVariable<Rational> {
        let k = space.sigma().num_atoms();
        let per_atom: Vec<Rational> = if self.rng.gen_ratio(1, 8) {
            vec![self.grid_value(); k]
        } else {
            (0..k).map(|_| self.grid_value()).collect()
        };
        RandomVariable::from_atom_values(space.clone(), &per_atom).expect("one value per atom")
    }

    /// Real variable: grid values most of the time, arbitrary reals otherwise.
    pub fn real_rv(&mut self, space: &Arc<FinProbSpace>) -> RandomVariable<f64> {
        if self.rng.gen_ratio(3, 4) {
            return self.rational_rv(space).to_real();
        }
        let lo = self.config.value_range.0.to_f64();
        let hi = self.config.value_range.1.to_f64();
        let per_atom: Vec<f64> = (0..space.sigma().num_atoms())
            .map(|_| self.rng.gen_range(lo..hi))
            .collect();
        RandomVariable::from_atom_values(space.clone(), &per_atom).expect("one value per atom")
    }

    /// Exact non-negative variable on the support; null atoms may be negative.
    pub fn nonneg_rational_rv(&mut self, space: &Arc<FinProbSpace>) -> RandomVariable<Rational> {
        let base = self.rational_rv(space);
        let per_atom: Vec<Rational> = (0..space.sigma().num_atoms())
            .map(|a| {
                let v = base.atom_value(a).clone();
                if space.atom_mass(a).is_zero() {
                    v
                } else {
                    Signed::abs(&v)
                }
            })
            .collect();
        RandomVariable::from_atom_values(space.clone(), &per_atom).expect("one value per atom")
    }

    /// Same variable with the values on null atoms redrawn.
    pub fn perturb_null<S: Scalar>(
        &mut self,
        v: &RandomVariable<S>,
        junk: impl Fn(&mut Self) -> S,
    ) -> RandomVariable<S> {
        let space = v.space().clone();
        let per_atom: Vec<S> = (0..space.sigma().num_atoms())
            .map(|a| {
                if space.atom_mass(a).is_zero() {
                    junk(self)
                } else {
                    v.atom_value(a).clone()
                }
            })
            .collect();
        RandomVariable::from_atom_values(space, &per_atom).expect("one value per atom")
    }

    pub fn rational(&mut self) -> Rational {
        self.grid_value()
    }

    /// Risk aversion: one of {1e-3, 1, 10} half the time, log-uniform on
    /// `[1e-3, 10]` otherwise.
    pub fn lambda(&mut self) -> f64 {
        if self.rng.gen_bool(0.5) {
            *[1e-3, 1.0, 10.0].choose(&mut self.rng).expect("non-empty")
        } else {
            10f64.powf(self.rng.gen_range(-3.0..1.0))
        }
    }

    /// Random subset of `0..k` as a bit mask.
    pub fn subset(&mut self, k: usize) -> Vec<bool> {
        (0..k).map(|_| self.rng.gen_bool(0.5)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measure::ae_equal;
    use num::One;

    fn cfg() -> GenConfig {
        GenConfig::default()
    }

    #[test]
    fn spaces_are_normalized_and_deterministic() {
        let c = cfg();
        let mut g1 = Generator::from_seed(&c, 7);
        let mut g2 = Generator::from_seed(&c, 7);
        for _ in 0..50 {
            let s = g1.space();
            let total: Rational = s.weights().iter().sum();
            assert!(total.is_one());
            assert!((2..=12).contains(&s.len()));
            assert_eq!(*s, *g2.space());
        }
    }

    #[test]
    fn trivial_and_discrete_partitions_both_occur() {
        let c = cfg();
        let mut g = Generator::from_seed(&c, 1);
        let (mut trivial, mut discrete) = (0, 0);
        for _ in 0..1000 {
            let s = g.space();
            trivial += s.sigma().is_trivial() as usize;
            discrete += s.sigma().is_discrete() as usize;
        }
        assert!(trivial >= 1 && discrete >= 1, "{trivial} {discrete}");
    }

    #[test]
    fn generated_arrows_validate() {
        let c = cfg();
        let mut g = Generator::from_seed(&c, 3);
        for _ in 0..300 {
            let (x, y) = (g.space(), g.space());
            let f = g.arrow(&x, &y).unwrap();
            // revalidate from scratch
            let again =
                ProbArrow::from_indices(x.clone(), y.clone(), f.underlying().to_vec()).unwrap();
            assert_eq!(again, f);
            for a in 0..x.sigma().num_atoms() {
                if x.atom_mass(a).is_zero() {
                    assert!(f.preimage_mass(a).is_zero());
                }
            }
        }
    }

    #[test]
    fn identity_assignment_is_identity_arrow() {
        let c = cfg();
        let mut g = Generator::from_seed(&c, 4);
        let s = g.space();
        let f = ProbArrow::from_indices(s.clone(), s.clone(), (0..s.len()).collect()).unwrap();
        assert_eq!(f, ProbArrow::identity(s));
    }

    #[test]
    fn pairing_pushforward_is_half_half() {
        let y = Arc::new(FinProbSpace::uniform_discrete(&["a", "b", "c", "d"]).unwrap());
        let x = Arc::new(
            FinProbSpace::from_labels(
                &["p", "q"],
                vec![ratio(1, 2), ratio(1, 2)],
                &[vec!["p"], vec!["q"]],
            )
            .unwrap(),
        );
        // summation oracle: each of p, q receives two quarters
        let f = ProbArrow::from_indices(x, y, vec![0, 0, 1, 1]).unwrap();
        assert!(f.is_measure_preserving());
    }

    #[test]
    fn mp_arrows_preserve_and_compose() {
        let c = cfg();
        let mut g = Generator::from_seed(&c, 5);
        for _ in 0..300 {
            let z = g.space();
            let (y, gz) = g.mp_arrow(&z);
            let (_, fy) = g.mp_arrow(&y);
            assert!(gz.is_measure_preserving() && fy.is_measure_preserving());
            assert!(y.len() <= c.max_outcomes.max(z.sigma().num_atoms()));
            let comp = ProbArrow::compose(&fy, &gz).unwrap();
            for a in 0..comp.src().sigma().num_atoms() {
                assert_eq!(*comp.preimage_mass(a), comp.src().atom_mass(a));
            }
        }
    }

    #[test]
    fn equivalent_arrows_have_positive_preimages() {
        let c = cfg();
        let mut g = Generator::from_seed(&c, 6);
        for _ in 0..300 {
            let y = g.space();
            let (x, f) = g.equivalent_arrow(&y);
            for a in 0..x.sigma().num_atoms() {
                assert_eq!(x.atom_mass(a).is_zero(), f.preimage_mass(a).is_zero());
            }
        }
    }

    #[test]
    fn perturbing_null_atoms_keeps_ae_class() {
        let c = cfg();
        let mut g = Generator::from_seed(&c, 8);
        for _ in 0..100 {
            let s = g.space();
            let v = g.rational_rv(&s);
            let w = g.perturb_null(&v, |g| g.rational());
            assert!(ae_equal(&v, &w).unwrap());
        }
    }

    #[test]
    fn config_validation() {
        let mut c = cfg();
        c.trials = 0;
        assert_eq!(c.validate(), Err(ConfigError::ZeroTrials));
        let mut c = cfg();
        c.max_outcomes = 1;
        assert_eq!(c.validate(), Err(ConfigError::TooFewOutcomes(1)));
        let mut c = cfg();
        c.null_weight_prob = ratio(3, 2);
        assert!(matches!(c.validate(), Err(ConfigError::NullProbability(_))));
        let mut c = cfg();
        c.value_range = (int(1), int(1));
        assert!(matches!(c.validate(), Err(ConfigError::EmptyRange(..))));
        assert_eq!(cfg().validate(), Ok(()));
    }
}
