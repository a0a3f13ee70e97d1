//! Monetary value measures as presheaves on the category of finite
//! probability spaces.
//!
//! A [`ValueMeasure`] assigns to every arrow `f⁻: X̄ → Ȳ` a transform
//! `φ^{f⁻}` from variables on `Ȳ` to variables on `X̄`. The axioms (cash
//! invariance, monotonicity, normalization, boundedness) are not enforced by
//! the type; the law suite in [`crate::lawcheck`] checks them.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use num::{One, Zero};
use thiserror::Error;

use crate::category::{pullback_l, CategoryError, ProbArrow};
use crate::measure::{
    ae_close, ae_max_abs_diff, same_space, FinProbSpace, MeasureError, RandomVariable,
};
use crate::scalar::{Rational, Scalar, Tolerance};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ValueError {
    #[error(transparent)]
    Category(#[from] CategoryError),
    #[error("lambda must be positive and finite, got {0}")]
    InvalidLambda(f64),
    #[error("the arrow `g` must be measure-preserving (pass `force` to run anyway)")]
    RequiresMeasurePreserving,
    #[error("component map is not defined at arrows into this space")]
    HorizonMismatch,
    #[error("empty chain")]
    EmptyChain,
    #[error("entropic value is -inf on atom {atom}: positive atom with a null preimage")]
    Undefined { atom: String },
}

impl From<MeasureError> for ValueError {
    fn from(e: MeasureError) -> Self {
        ValueError::Category(e.into())
    }
}

pub type Result<T, E = ValueError> = std::result::Result<T, E>;

/// How results of a value measure should be compared.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Comparison {
    Exact,
    Approximate(Tolerance),
}

impl Comparison {
    pub fn tolerance(&self) -> Tolerance {
        match self {
            Comparison::Exact => Tolerance {
                relative: 0.0,
                absolute: 0.0,
            },
            Comparison::Approximate(t) => *t,
        }
    }
}

pub trait ValueMeasure: Send + Sync {
    fn name(&self) -> &str;

    /// `φ^{f⁻}(v)` for `v` on `arrow.dst()`; the result lives on `arrow.src()`.
    fn phi(&self, arrow: &ProbArrow, v: &RandomVariable<f64>) -> Result<RandomVariable<f64>>;

    fn comparison(&self) -> Comparison {
        Comparison::Approximate(Tolerance::default())
    }
}

impl<T: ValueMeasure + ?Sized> ValueMeasure for Box<T> {
    fn name(&self) -> &str {
        (**self).name()
    }

    fn phi(&self, arrow: &ProbArrow, v: &RandomVariable<f64>) -> Result<RandomVariable<f64>> {
        (**self).phi(arrow, v)
    }

    fn comparison(&self) -> Comparison {
        (**self).comparison()
    }
}

/// A value measure given by a user-provided per-arrow transform.
pub struct FnValueMeasure<F> {
    name: String,
    phi: F,
    comparison: Comparison,
}

impl<F> FnValueMeasure<F>
where
    F: Fn(&ProbArrow, &RandomVariable<f64>) -> Result<RandomVariable<f64>> + Send + Sync,
{
    pub fn new(name: impl Into<String>, comparison: Comparison, phi: F) -> Self {
        Self {
            name: name.into(),
            phi,
            comparison,
        }
    }
}

impl<F> ValueMeasure for FnValueMeasure<F>
where
    F: Fn(&ProbArrow, &RandomVariable<f64>) -> Result<RandomVariable<f64>> + Send + Sync,
{
    fn name(&self) -> &str {
        &self.name
    }

    fn phi(&self, arrow: &ProbArrow, v: &RandomVariable<f64>) -> Result<RandomVariable<f64>> {
        (self.phi)(arrow, v)
    }

    fn comparison(&self) -> Comparison {
        self.comparison
    }
}

impl<F> fmt::Debug for FnValueMeasure<F> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FnValueMeasure")
            .field("name", &self.name)
            .finish_non_exhaustive()
    }
}

/// Risk-aversion parameter of the entropic measure.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EntropicParams {
    lambda: f64,
}

impl EntropicParams {
    pub fn new(lambda: f64) -> Result<Self> {
        if lambda.is_finite() && lambda > 0.0 {
            Ok(Self { lambda })
        } else {
            Err(ValueError::InvalidLambda(lambda))
        }
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }
}

/// `φ^{f⁻}(v) = λ⁻¹ log E^{f⁻}(e^{λv})`.
#[derive(Debug, Clone)]
pub struct Entropic {
    params: EntropicParams,
    name: String,
    tolerance: Tolerance,
}

impl Entropic {
    pub fn new(lambda: f64) -> Result<Self> {
        let params = EntropicParams::new(lambda)?;
        Ok(Self {
            params,
            name: format!("entropic(lambda={lambda})"),
            tolerance: Tolerance::default(),
        })
    }

    pub fn with_tolerance(mut self, tolerance: Tolerance) -> Self {
        self.tolerance = tolerance;
        self
    }

    pub fn params(&self) -> EntropicParams {
        self.params
    }
}

impl ValueMeasure for Entropic {
    fn name(&self) -> &str {
        &self.name
    }

    fn phi(&self, arrow: &ProbArrow, v: &RandomVariable<f64>) -> Result<RandomVariable<f64>> {
        entropic_phi(self.params, arrow, v)
    }

    fn comparison(&self) -> Comparison {
        Comparison::Approximate(self.tolerance)
    }
}

/// Entropic transform along `arrow`.
///
/// On a positive src atom `A`, the preimage outcomes are grouped by value
/// with their masses summed exactly, giving ratios `r_c = P_Y(f⁻¹(A), v = c)
/// / P_X(A)`. With `m = max c` the result is
///
/// `m + λ⁻¹ · ln_1p( (Σ r_c − 1) + Σ r_c · expm1(λ(c − m)) )`
///
/// which never overflows and returns `c` exactly when `v ≡ c` on the
/// preimage of an atom that the arrow preserves. Null atoms get 0. A positive
/// atom whose preimage is null would give `log 0`; that is an error.
pub fn entropic_phi(
    params: EntropicParams,
    arrow: &ProbArrow,
    v: &RandomVariable<f64>,
) -> Result<RandomVariable<f64>> {
    if !same_space(v.space(), arrow.dst()) {
        return Err(MeasureError::SpaceMismatch.into());
    }
    v.check_finite()?;
    let lambda = params.lambda();
    let src = arrow.src();
    let dst = arrow.dst();
    let mut groups: Vec<BTreeMap<OrdF64, Rational>> =
        vec![BTreeMap::new(); src.sigma().num_atoms()];
    for y in 0..dst.len() {
        let w = dst.weight(y);
        if w.is_zero() {
            continue;
        }
        *groups[arrow.image_atom(y)]
            .entry(OrdF64(*v.value(y)))
            .or_insert_with(Rational::zero) += w;
    }
    let mut per_atom = Vec::with_capacity(groups.len());
    for (a, group) in groups.iter().enumerate() {
        let mass = src.atom_mass(a);
        if mass.is_zero() {
            per_atom.push(0.0);
            continue;
        }
        let Some(top) = group.keys().next_back().map(|k| k.0) else {
            return Err(ValueError::Undefined {
                atom: src.atom_label(a),
            });
        };
        let mut total_ratio = Rational::zero();
        let mut acc = 0.0;
        for (c, m) in group {
            let r = m / &mass;
            acc += r.to_f64() * (lambda * (c.0 - top)).exp_m1();
            total_ratio += r;
        }
        let excess = (total_ratio - Rational::one()).to_f64();
        per_atom.push(top + (excess + acc).ln_1p() / lambda);
    }
    Ok(RandomVariable::from_atom_values(src.clone(), &per_atom)?)
}

/// Total order on finite floats for grouping.
#[derive(Debug, Clone, Copy, PartialEq)]
struct OrdF64(f64);

impl Eq for OrdF64 {}

impl PartialOrd for OrdF64 {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for OrdF64 {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.0.total_cmp(&other.0)
    }
}

/// `Φf⁻ ∘ Lf⁻` applied to `u` on `arrow.src()`.
pub fn phi_after_l(
    vm: &dyn ValueMeasure,
    arrow: &ProbArrow,
    u: &RandomVariable<f64>,
) -> Result<RandomVariable<f64>> {
    vm.phi(arrow, &pullback_l(arrow, u)?)
}

/// Backward induction along `chain = [f₁⁻, …, fₙ⁻]` with `fₖ⁻: X̄ₖ₋₁ → X̄ₖ`.
///
/// Returns `[vₙ, vₙ₋₁, …, v₀]` where `vₙ = terminal` and
/// `vₖ₋₁ = φ^{fₖ⁻}(vₖ)`.
pub fn rollback_chain(
    vm: &dyn ValueMeasure,
    chain: &[ProbArrow],
    terminal: &RandomVariable<f64>,
) -> Result<Vec<RandomVariable<f64>>> {
    let last = chain.last().ok_or(ValueError::EmptyChain)?;
    for pair in chain.windows(2) {
        if !same_space(pair[0].dst(), pair[1].src()) {
            return Err(CategoryError::CompositionMismatch.into());
        }
    }
    if !same_space(terminal.space(), last.dst()) {
        return Err(MeasureError::SpaceMismatch.into());
    }
    let mut stages = Vec::with_capacity(chain.len() + 1);
    stages.push(terminal.clone());
    for arrow in chain.iter().rev() {
        let next = vm.phi(arrow, stages.last().expect("non-empty"))?;
        stages.push(next);
    }
    Ok(stages)
}

/// Composite `f₁⁻ ; … ; fₙ⁻` of a chain.
pub fn compose_chain(chain: &[ProbArrow]) -> Result<ProbArrow> {
    let (first, rest) = chain.split_first().ok_or(ValueError::EmptyChain)?;
    rest.iter().try_fold(first.clone(), |acc, next| {
        Ok(ProbArrow::compose(&acc, next)?)
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct DppCheck {
    pub holds: bool,
    pub hypothesis_met: bool,
    pub residual: f64,
}

/// Compares `φ^{g⁻∘f⁻}(w)` with `φ^{g⁻∘f⁻}(φ^{g⁻}(w) ∘ g)`.
///
/// Requires `g` to be measure-preserving unless `force` is set, in which
/// case the result reports `hypothesis_met = false`.
pub fn check_dpp(
    vm: &dyn ValueMeasure,
    f: &ProbArrow,
    g: &ProbArrow,
    w: &RandomVariable<f64>,
    force: bool,
) -> Result<DppCheck> {
    let hypothesis_met = g.is_measure_preserving();
    if !hypothesis_met && !force {
        return Err(ValueError::RequiresMeasurePreserving);
    }
    let gf = ProbArrow::compose(f, g)?;
    let direct = vm.phi(&gf, w)?;
    let one_step = pullback_l(g, &vm.phi(g, w)?)?;
    let via = vm.phi(&gf, &one_step)?;
    let tol = vm.comparison().tolerance();
    Ok(DppCheck {
        holds: ae_close(&direct, &via, &tol)?,
        hypothesis_met,
        residual: ae_max_abs_diff(&direct, &via)?,
    })
}

/// A natural transformation `Prob(−, X̄) ⇒ Φ`, viewed through its components:
/// each arrow `f⁻: Ȳ → X̄` is sent to a variable on `Ȳ`.
pub trait Transformation {
    fn horizon(&self) -> &Arc<FinProbSpace>;
    fn component(&self, arrow: &ProbArrow) -> Result<RandomVariable<f64>>;
}

/// The transformation `ũ` determined by a terminal variable:
/// `ũ(f⁻) = φ^{f⁻}(u)`.
pub struct Represented<'a> {
    vm: &'a dyn ValueMeasure,
    horizon: Arc<FinProbSpace>,
    terminal: RandomVariable<f64>,
}

impl Transformation for Represented<'_> {
    fn horizon(&self) -> &Arc<FinProbSpace> {
        &self.horizon
    }

    fn component(&self, arrow: &ProbArrow) -> Result<RandomVariable<f64>> {
        if !same_space(arrow.dst(), &self.horizon) {
            return Err(ValueError::HorizonMismatch);
        }
        self.vm.phi(arrow, &self.terminal)
    }
}

pub fn yoneda_from_rv<'a>(
    vm: &'a dyn ValueMeasure,
    horizon: Arc<FinProbSpace>,
    u: RandomVariable<f64>,
) -> Result<Represented<'a>> {
    if !same_space(u.space(), &horizon) {
        return Err(MeasureError::SpaceMismatch.into());
    }
    Ok(Represented {
        vm,
        horizon,
        terminal: u,
    })
}

/// `α ↦ α_X(Id_X⁻)`.
pub fn yoneda_to_rv(alpha: &dyn Transformation) -> Result<RandomVariable<f64>> {
    alpha.component(&ProbArrow::identity(alpha.horizon().clone()))
}

/// Naturality square for `f⁻: W̄ → Ȳ`, `g⁻: Ȳ → X̄` (horizon):
/// `α(g⁻ ∘ f⁻)` against `φ^{f⁻}(α(g⁻))`. Returns the max residual.
pub fn naturality_residual(
    vm: &dyn ValueMeasure,
    alpha: &dyn Transformation,
    f: &ProbArrow,
    g: &ProbArrow,
) -> Result<f64> {
    let lhs = alpha.component(&ProbArrow::compose(f, g)?)?;
    let rhs = vm.phi(f, &alpha.component(g)?)?;
    Ok(ae_max_abs_diff(&lhs, &rhs)?)
}
