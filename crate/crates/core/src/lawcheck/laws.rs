//! The law catalogue. Each law draws one random instance per trial, records
//! it for replay, and returns a verdict.
//!
//! Exact-layer laws compare rationals with `==`; entropic-layer laws use
//! the configured tolerance (one-sided for order relations).

use std::collections::BTreeSet;
use std::sync::Arc;

use num::Zero;
use serde_json::{Map, Value};

use super::gen::Generator;
use crate::category::{cond_expect, pullback_l, ProbArrow};
use crate::doc::{arrow_to_json, real, rv_to_json, space_to_json, ToJsonScalar};
use crate::measure::{
    ae_close, ae_equal, ae_leq, ae_leq_within, ae_max_abs_diff, ess_sup_norm, FinProbSpace,
    RandomVariable,
};
use crate::scalar::{Rational, Scalar, Tolerance};
use crate::value::{
    check_dpp, naturality_residual, phi_after_l, yoneda_from_rv, yoneda_to_rv, Transformation,
    ValueError, ValueMeasure,
};

/// Builds the value measure under test for a given risk aversion.
pub type MeasureFactory = dyn Fn(f64) -> Box<dyn ValueMeasure> + Sync;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Layer {
    Exact,
    Approximate,
}

impl Layer {
    pub fn as_str(&self) -> &'static str {
        match self {
            Layer::Exact => "exact",
            Layer::Approximate => "approximate",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Verdict {
    pub pass: bool,
    /// Hypothesis of the law did not hold on this instance.
    pub vacuous: bool,
    pub residual: f64,
    pub note: Option<String>,
}

impl Verdict {
    fn exact(pass: bool, residual: f64) -> Self {
        Self {
            pass,
            vacuous: false,
            residual: if pass { 0.0 } else { residual },
            note: None,
        }
    }

    fn approx(pass: bool, residual: f64) -> Self {
        Self {
            pass,
            vacuous: false,
            residual,
            note: None,
        }
    }

    fn vacuous() -> Self {
        Self {
            pass: true,
            vacuous: true,
            residual: 0.0,
            note: None,
        }
    }

    fn with_note(mut self, note: impl Into<String>) -> Self {
        self.note = Some(note.into());
        self
    }
}

pub type LawResult = Result<Verdict, String>;

/// Per-trial state: generator, measure factory and the replay record.
pub struct Trial<'a> {
    pub gen: Generator<'a>,
    pub factory: &'a MeasureFactory,
    pub tolerance: Tolerance,
    instance: Map<String, Value>,
    space_ids: Vec<(Arc<FinProbSpace>, String)>,
}

impl<'a> Trial<'a> {
    pub fn new(gen: Generator<'a>, factory: &'a MeasureFactory, tolerance: Tolerance) -> Self {
        Self {
            gen,
            factory,
            tolerance,
            instance: Map::new(),
            space_ids: Vec::new(),
        }
    }

    pub fn into_instance(self) -> Value {
        Value::Object(self.instance)
    }

    fn section(&mut self, key: &str) -> &mut Map<String, Value> {
        self.instance
            .entry(key)
            .or_insert_with(|| Value::Object(Map::new()))
            .as_object_mut()
            .expect("sections are objects")
    }

    fn space_id(&self, space: &Arc<FinProbSpace>) -> String {
        self.space_ids
            .iter()
            .find(|(s, _)| Arc::ptr_eq(s, space))
            .map(|(_, id)| id.clone())
            .unwrap_or_else(|| "?".into())
    }

    fn space(&mut self, id: &str, space: Arc<FinProbSpace>) -> Arc<FinProbSpace> {
        let doc = space_to_json(&space);
        self.section("spaces").insert(id.into(), doc);
        self.space_ids.push((space.clone(), id.into()));
        space
    }

    fn arrow(&mut self, id: &str, arrow: ProbArrow) -> ProbArrow {
        let doc = arrow_to_json(
            &arrow,
            &self.space_id(arrow.src()),
            &self.space_id(arrow.dst()),
        );
        self.section("arrows").insert(id.into(), doc);
        arrow
    }

    fn var<S: Scalar + ToJsonScalar>(
        &mut self,
        id: &str,
        v: RandomVariable<S>,
    ) -> RandomVariable<S> {
        let values = rv_to_json(&v);
        let space = self.space_id(v.space());
        self.section("variables").insert(
            id.into(),
            serde_json::json!({ "space": space, "values": values }),
        );
        v
    }

    fn scalar(&mut self, id: &str, x: Value) {
        self.section("scalars").insert(id.into(), x);
    }

    fn new_space(&mut self, id: &str) -> Arc<FinProbSpace> {
        let s = self.gen.space();
        self.space(id, s)
    }

    fn new_arrow(
        &mut self,
        id: &str,
        src: &Arc<FinProbSpace>,
        dst: &Arc<FinProbSpace>,
    ) -> Result<ProbArrow, String> {
        let a = self.gen.arrow(src, dst).map_err(|e| e.to_string())?;
        Ok(self.arrow(id, a))
    }

    /// Measure-preserving arrow `id: src_id → dst`.
    fn mp_into(&mut self, id: &str, src_id: &str, dst: &Arc<FinProbSpace>) -> ProbArrow {
        let (src, a) = self.gen.mp_arrow(dst);
        self.space(src_id, src);
        self.arrow(id, a)
    }

    fn equiv_into(&mut self, id: &str, src_id: &str, dst: &Arc<FinProbSpace>) -> ProbArrow {
        let (src, a) = self.gen.equivalent_arrow(dst);
        self.space(src_id, src);
        self.arrow(id, a)
    }

    /// Exact-layer arrow: general admissible, sometimes measure-preserving.
    fn general_into(
        &mut self,
        id: &str,
        src_id: &str,
        dst: &Arc<FinProbSpace>,
    ) -> Result<ProbArrow, String> {
        if self.gen.rng_ratio(1, 4) {
            Ok(self.mp_into(id, src_id, dst))
        } else {
            let src = self.new_space(src_id);
            self.new_arrow(id, &src, dst)
        }
    }

    fn qvar(&mut self, id: &str, space: &Arc<FinProbSpace>) -> RandomVariable<Rational> {
        let v = self.gen.rational_rv(space);
        self.var(id, v)
    }

    fn rvar(&mut self, id: &str, space: &Arc<FinProbSpace>) -> RandomVariable<f64> {
        let v = self.gen.real_rv(space);
        self.var(id, v)
    }

    fn measure(&mut self) -> (f64, Box<dyn ValueMeasure>) {
        let lambda = self.gen.lambda();
        self.scalar("lambda", real(lambda));
        (lambda, (self.factory)(lambda))
    }
}

impl Generator<'_> {
    fn rng_ratio(&mut self, n: u32, d: u32) -> bool {
        use rand::Rng;
        self.rng().gen_ratio(n, d)
    }
}

fn err<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

fn rational_gap(a: &RandomVariable<Rational>, b: &RandomVariable<Rational>) -> f64 {
    (0..a.space().len())
        .filter(|&i| !a.space().is_null(i))
        .map(|i| (a.value(i).clone() - b.value(i).clone()).abs().to_f64())
        .fold(0.0, f64::max)
}

fn exact_ae(a: &RandomVariable<Rational>, b: &RandomVariable<Rational>) -> LawResult {
    let pass = ae_equal(a, b).map_err(err)?;
    Ok(Verdict::exact(pass, rational_gap(a, b)))
}

fn approx_ae(a: &RandomVariable<f64>, b: &RandomVariable<f64>, tol: &Tolerance) -> LawResult {
    let pass = ae_close(a, b, tol).map_err(err)?;
    Ok(Verdict::approx(pass, ae_max_abs_diff(a, b).map_err(err)?))
}

/// `u ∘ f` computed straight from the outcome table.
fn compose_raw<S: Scalar>(
    arrow: &ProbArrow,
    u: &RandomVariable<S>,
) -> Result<RandomVariable<S>, String> {
    let values = arrow
        .underlying()
        .iter()
        .map(|&x| u.value(x).clone())
        .collect();
    RandomVariable::new(arrow.dst().clone(), values).map_err(err)
}

/// Atom subsets to test an event-quantified law on: all of them when there
/// are at most 64, otherwise 64 random ones.
fn events(gen: &mut Generator<'_>, k: usize) -> Vec<BTreeSet<usize>> {
    if k <= 6 {
        (0u32..1 << k)
            .map(|mask| (0..k).filter(|a| mask >> a & 1 == 1).collect())
            .collect()
    } else {
        (0..64)
            .map(|_| {
                gen.subset(k)
                    .into_iter()
                    .enumerate()
                    .filter_map(|(a, keep)| keep.then_some(a))
                    .collect()
            })
            .collect()
    }
}

// ---------------------------------------------------------------------------
// Exact layer

fn ce_defining_identity(t: &mut Trial) -> LawResult {
    let y = t.new_space("Y");
    let f = t.general_into("f", "X", &y)?;
    let x = f.src().clone();
    let v = t.qvar("v", &y);
    let u = cond_expect(&f, &v).map_err(err)?;
    // brute force: ∫_A u dP_X against Σ_{y: f(y) ∈ A} v(y) P_Y(y)
    let mut worst = Rational::zero();
    let mut atom_sets: Vec<BTreeSet<usize>> =
        (0..x.sigma().num_atoms()).map(|a| [a].into()).collect();
    atom_sets.extend(
        events(&mut t.gen, x.sigma().num_atoms())
            .into_iter()
            .take(8),
    );
    for atoms in atom_sets {
        let lhs: Rational = (0..x.len())
            .filter(|&i| atoms.contains(&x.sigma().atom_of(i)))
            .map(|i| u.value(i) * x.weight(i))
            .sum();
        let rhs: Rational = (0..y.len())
            .filter(|&j| atoms.contains(&x.sigma().atom_of(f.underlying()[j])))
            .map(|j| v.value(j) * y.weight(j))
            .sum();
        let gap = (lhs - rhs).abs();
        if gap > worst {
            worst = gap;
        }
    }
    Ok(Verdict::exact(worst.is_zero(), worst.to_f64()))
}

fn ce_identity(t: &mut Trial) -> LawResult {
    let x = t.new_space("X");
    let u = t.qvar("u", &x);
    let e = cond_expect(&ProbArrow::identity(x), &u).map_err(err)?;
    exact_ae(&e, &u)
}

fn ce_congruence(t: &mut Trial) -> LawResult {
    let y = t.new_space("Y");
    let f = t.general_into("f", "X", &y)?;
    let v1 = t.qvar("v1", &y);
    let v2 = t.gen.perturb_null(&v1, |g| g.rational());
    let v2 = t.var("v2", v2);
    if !ae_equal(&v1, &v2).map_err(err)? {
        return Err("generator produced variables that differ on the support".into());
    }
    exact_ae(
        &cond_expect(&f, &v1).map_err(err)?,
        &cond_expect(&f, &v2).map_err(err)?,
    )
}

fn ce_composition(t: &mut Trial) -> LawResult {
    let z = t.new_space("Z");
    let g = t.general_into("g", "Y", &z)?;
    let f = t.general_into("f", "X", &g.src().clone())?;
    let w = t.qvar("w", &z);
    let stepwise = cond_expect(&f, &cond_expect(&g, &w).map_err(err)?).map_err(err)?;
    let direct = cond_expect(&ProbArrow::compose(&f, &g).map_err(err)?, &w).map_err(err)?;
    exact_ae(&stepwise, &direct)
}

fn ce_linearity(t: &mut Trial) -> LawResult {
    let y = t.new_space("Y");
    let f = t.general_into("f", "X", &y)?;
    let u = t.qvar("u", &y);
    let v = t.qvar("v", &y);
    let alpha = t.gen.rational();
    let beta = t.gen.rational();
    t.scalar("alpha", alpha.to_json());
    t.scalar("beta", beta.to_json());
    let combo = u.scale(&alpha).add(&v.scale(&beta)).map_err(err)?;
    let lhs = cond_expect(&f, &combo).map_err(err)?;
    let rhs = cond_expect(&f, &u)
        .map_err(err)?
        .scale(&alpha)
        .add(&cond_expect(&f, &v).map_err(err)?.scale(&beta))
        .map_err(err)?;
    exact_ae(&lhs, &rhs)
}

fn ce_positivity(t: &mut Trial) -> LawResult {
    let y = t.new_space("Y");
    let f = t.general_into("f", "X", &y)?;
    let v = t.gen.nonneg_rational_rv(&y);
    let v = t.var("v", v);
    let e = cond_expect(&f, &v).map_err(err)?;
    let zero = RandomVariable::zero(e.space().clone());
    let pass = ae_leq(&zero, &e).map_err(err)?;
    let worst = (0..e.space().len())
        .filter(|&i| !e.space().is_null(i))
        .map(|i| (-e.value(i).to_f64()).max(0.0))
        .fold(0.0, f64::max);
    Ok(Verdict::exact(pass, worst))
}

fn ce_take_out_known(t: &mut Trial) -> LawResult {
    let y = t.new_space("Y");
    let f = t.general_into("f", "X", &y)?;
    let x = f.src().clone();
    let u = t.qvar("u", &y);
    let w = t.qvar("w", &x);
    let lhs = cond_expect(&f, &compose_raw(&f, &w)?.mul(&u).map_err(err)?).map_err(err)?;
    let rhs = w.mul(&cond_expect(&f, &u).map_err(err)?).map_err(err)?;
    exact_ae(&lhs, &rhs)
}

fn ce_bounded_mp(t: &mut Trial) -> LawResult {
    let y = t.new_space("Y");
    let f = t.mp_into("f", "X", &y);
    let v = t.qvar("v", &y);
    let m = ess_sup_norm(&v);
    let e = cond_expect(&f, &v).map_err(err)?;
    let bound = RandomVariable::constant(e.space().clone(), m.clone());
    let floor = RandomVariable::constant(e.space().clone(), -m.clone());
    let pass = ae_leq(&e, &bound).map_err(err)? && ae_leq(&floor, &e).map_err(err)?;
    let excess = (ess_sup_norm(&e) - m).to_f64().max(0.0);
    Ok(Verdict::exact(pass, excess))
}

fn l_identity(t: &mut Trial) -> LawResult {
    let x = t.new_space("X");
    let u = t.qvar("u", &x);
    exact_ae(&pullback_l(&ProbArrow::identity(x), &u).map_err(err)?, &u)
}

fn l_composition(t: &mut Trial) -> LawResult {
    let z = t.new_space("Z");
    let g = t.general_into("g", "Y", &z)?;
    let f = t.general_into("f", "X", &g.src().clone())?;
    let u = t.qvar("u", &f.src().clone());
    let direct = pullback_l(&ProbArrow::compose(&f, &g).map_err(err)?, &u).map_err(err)?;
    let stepwise = pullback_l(&g, &pullback_l(&f, &u).map_err(err)?).map_err(err)?;
    exact_ae(&direct, &stepwise)
}

// ---------------------------------------------------------------------------
// Approximate layer

fn phi(
    vm: &dyn ValueMeasure,
    f: &ProbArrow,
    v: &RandomVariable<f64>,
) -> Result<RandomVariable<f64>, String> {
    vm.phi(f, v).map_err(|e: ValueError| e.to_string())
}

fn vm_presheaf_identity(t: &mut Trial) -> LawResult {
    let (_, vm) = t.measure();
    let y = t.new_space("Y");
    let v = t.rvar("v", &y);
    approx_ae(&phi(&*vm, &ProbArrow::identity(y), &v)?, &v, &t.tolerance)
}

fn vm_presheaf_composition(t: &mut Trial) -> LawResult {
    let (_, vm) = t.measure();
    let z = t.new_space("Z");
    let g = t.equiv_into("g", "Y", &z);
    let f = t.equiv_into("f", "X", &g.src().clone());
    let w = t.rvar("w", &z);
    let stepwise = phi(&*vm, &f, &phi(&*vm, &g, &w)?)?;
    let direct = phi(&*vm, &ProbArrow::compose(&f, &g).map_err(err)?, &w)?;
    approx_ae(&stepwise, &direct, &t.tolerance)
}

fn vm_congruence(t: &mut Trial) -> LawResult {
    let (_, vm) = t.measure();
    let y = t.new_space("Y");
    let f = t.equiv_into("f", "X", &y);
    let v1 = t.rvar("v1", &y);
    let v2 = t.gen.perturb_null(&v1, |g| g.rational().to_f64());
    let v2 = t.var("v2", v2);
    approx_ae(&phi(&*vm, &f, &v1)?, &phi(&*vm, &f, &v2)?, &t.tolerance)
}

fn vm_cash_invariance(t: &mut Trial) -> LawResult {
    let (_, vm) = t.measure();
    let y = t.new_space("Y");
    let f = t.equiv_into("f", "X", &y);
    let v = t.rvar("v", &y);
    let u = t.rvar("u", &f.src().clone());
    let shifted = v.add(&pullback_l(&f, &u).map_err(err)?).map_err(err)?;
    let lhs = phi(&*vm, &f, &shifted)?;
    let rhs = phi(&*vm, &f, &v)?.add(&u).map_err(err)?;
    approx_ae(&lhs, &rhs, &t.tolerance)
}

fn order_verdict(lo: &RandomVariable<f64>, hi: &RandomVariable<f64>, tol: &Tolerance) -> LawResult {
    let pass = ae_leq_within(lo, hi, tol).map_err(err)?;
    let worst = (0..lo.space().len())
        .filter(|&i| !lo.space().is_null(i))
        .map(|i| (lo.value(i) - hi.value(i)).max(0.0))
        .fold(0.0, f64::max);
    Ok(Verdict::approx(pass, worst))
}

fn vm_monotonicity(t: &mut Trial) -> LawResult {
    let (_, vm) = t.measure();
    let y = t.new_space("Y");
    let f = t.equiv_into("f", "X", &y);
    let v1 = t.rvar("v1", &y);
    let bump = t.gen.nonneg_rational_rv(&y).to_real();
    let v2 = t.var("v2", v1.add(&bump).map_err(err)?);
    if !ae_leq(&v1, &v2).map_err(err)? {
        return Err("generator broke the order hypothesis".into());
    }
    order_verdict(&phi(&*vm, &f, &v1)?, &phi(&*vm, &f, &v2)?, &t.tolerance)
}

fn vm_normalization(t: &mut Trial) -> LawResult {
    let (_, vm) = t.measure();
    let y = t.new_space("Y");
    let f = t.mp_into("f", "X", &y);
    let out = phi(&*vm, &f, &RandomVariable::zero(y))?;
    approx_ae(&out, &RandomVariable::zero(f.src().clone()), &t.tolerance)
}

fn vm_boundedness(t: &mut Trial) -> LawResult {
    let (_, vm) = t.measure();
    let y = t.new_space("Y");
    let f = t.mp_into("f", "X", &y);
    let v = t.rvar("v", &y);
    let m = ess_sup_norm(&v);
    let out = phi(&*vm, &f, &v)?;
    let abs = out.map(|x| x.abs());
    order_verdict(
        &abs,
        &RandomVariable::constant(out.space().clone(), m),
        &t.tolerance,
    )
}

fn thm_identity_after_pullback(t: &mut Trial) -> LawResult {
    let (_, vm) = t.measure();
    let y = t.new_space("Y");
    let f = t.mp_into("f", "X", &y);
    let u = t.rvar("u", &f.src().clone());
    approx_ae(&phi_after_l(&*vm, &f, &u).map_err(err)?, &u, &t.tolerance)
}

fn thm_idempotence(t: &mut Trial) -> LawResult {
    let (_, vm) = t.measure();
    let y = t.new_space("Y");
    let f = t.mp_into("f", "X", &y);
    let v = t.rvar("v", &y);
    let once = phi(&*vm, &f, &v)?;
    let twice = phi_after_l(&*vm, &f, &once).map_err(err)?;
    approx_ae(&twice, &once, &t.tolerance)
}

fn thm_local_property(t: &mut Trial) -> LawResult {
    let (_, vm) = t.measure();
    let y = t.new_space("Y");
    let f = t.equiv_into("f", "X", &y);
    let x = f.src().clone();
    let v1 = t.rvar("v1", &y);
    let v2 = t.rvar("v2", &y);
    let p1 = phi(&*vm, &f, &v1)?;
    let p2 = phi(&*vm, &f, &v2)?;
    let k = x.sigma().num_atoms();
    let mut worst = Verdict::approx(true, 0.0);
    for event in events(&mut t.gen, k) {
        let on_x: RandomVariable<f64> = RandomVariable::indicator(x.clone(), &event);
        let off_x = on_x.map(|c| 1.0 - c);
        let on_y = pullback_l(&f, &on_x).map_err(err)?;
        let off_y = pullback_l(&f, &off_x).map_err(err)?;
        let spliced = on_y
            .mul(&v1)
            .map_err(err)?
            .add(&off_y.mul(&v2).map_err(err)?)
            .map_err(err)?;
        let lhs = phi(&*vm, &f, &spliced)?;
        let rhs = on_x
            .mul(&p1)
            .map_err(err)?
            .add(&off_x.mul(&p2).map_err(err)?)
            .map_err(err)?;
        let v = approx_ae(&lhs, &rhs, &t.tolerance)?;
        if !v.pass {
            let atoms: Vec<String> = event.iter().map(|&a| x.atom_label(a)).collect();
            return Ok(v.with_note(format!("event A = {}", atoms.join(" ∪ "))));
        }
        if v.residual > worst.residual {
            worst = v;
        }
    }
    Ok(worst)
}

fn thm_dpp(t: &mut Trial) -> LawResult {
    let (_, vm) = t.measure();
    let z = t.new_space("Z");
    let g = t.mp_into("g", "Y", &z);
    let f = t.equiv_into("f", "X", &g.src().clone());
    let w = t.rvar("w", &z);
    let check = check_dpp(&*vm, &f, &g, &w, false).map_err(err)?;
    Ok(Verdict::approx(check.holds, check.residual))
}

fn thm_time_consistency(t: &mut Trial) -> LawResult {
    let (_, vm) = t.measure();
    let z = t.new_space("Z");
    let g = t.equiv_into("g", "Y", &z);
    let f = t.equiv_into("f", "X", &g.src().clone());
    let w1 = t.rvar("w1", &z);
    let w2 = if t.gen.rng_ratio(1, 2) {
        let bump = t.gen.nonneg_rational_rv(&z).to_real();
        w1.add(&bump).map_err(err)?
    } else {
        t.gen.real_rv(&z)
    };
    let w2 = t.var("w2", w2);
    let tol = t.tolerance;
    if !ae_leq_within(&phi(&*vm, &g, &w1)?, &phi(&*vm, &g, &w2)?, &tol).map_err(err)? {
        return Ok(Verdict::vacuous());
    }
    let gf = ProbArrow::compose(&f, &g).map_err(err)?;
    order_verdict(&phi(&*vm, &gf, &w1)?, &phi(&*vm, &gf, &w2)?, &tol)
}

fn yoneda_round_trip(t: &mut Trial) -> LawResult {
    let (_, vm) = t.measure();
    let x = t.new_space("X");
    let u = t.rvar("u", &x);
    let alpha = yoneda_from_rv(&*vm, x, u.clone()).map_err(err)?;
    let back = yoneda_to_rv(&alpha).map_err(err)?;
    // exact: the identity component must return u itself on the support
    let pass = ae_equal(&back, &u).map_err(err)?;
    Ok(Verdict::exact(
        pass,
        ae_max_abs_diff(&back, &u).map_err(err)?,
    ))
}

fn yoneda_naturality(t: &mut Trial) -> LawResult {
    let (_, vm) = t.measure();
    let x = t.new_space("X");
    let g = t.equiv_into("g", "Y", &x);
    let f = t.equiv_into("f", "W", &g.src().clone());
    let u = t.rvar("u", &x);
    let alpha = yoneda_from_rv(&*vm, x, u).map_err(err)?;
    let lhs = alpha
        .component(&ProbArrow::compose(&f, &g).map_err(err)?)
        .map_err(err)?;
    let rhs = phi(&*vm, &f, &alpha.component(&g).map_err(err)?)?;
    let residual = naturality_residual(&*vm, &alpha, &f, &g).map_err(err)?;
    let pass = ae_close(&lhs, &rhs, &t.tolerance).map_err(err)?;
    Ok(Verdict::approx(pass, residual))
}

/// A transformation built from a terminal payoff further out:
/// `α(f⁻) = φ^{h⁻ ∘ f⁻}(w)` for a fixed `h⁻: X̄ → V̄`.
struct Factored<'a> {
    vm: &'a dyn ValueMeasure,
    horizon: Arc<FinProbSpace>,
    h: ProbArrow,
    w: RandomVariable<f64>,
}

impl Transformation for Factored<'_> {
    fn horizon(&self) -> &Arc<FinProbSpace> {
        &self.horizon
    }

    fn component(&self, arrow: &ProbArrow) -> Result<RandomVariable<f64>, ValueError> {
        self.vm.phi(&ProbArrow::compose(arrow, &self.h)?, &self.w)
    }
}

fn yoneda_reverse_round_trip(t: &mut Trial) -> LawResult {
    let (_, vm) = t.measure();
    let v = t.new_space("V");
    let h = t.equiv_into("h", "X", &v);
    let x = h.src().clone();
    let w = t.rvar("w", &v);
    let alpha = Factored {
        vm: &*vm,
        horizon: x.clone(),
        h,
        w,
    };
    let u = yoneda_to_rv(&alpha).map_err(err)?;
    let rebuilt = yoneda_from_rv(&*vm, x.clone(), u).map_err(err)?;
    let mut probes = vec![ProbArrow::identity(x.clone())];
    for i in 0..3 {
        probes.push(t.equiv_into(&format!("probe{i}"), &format!("Y{i}"), &x));
    }
    let mut worst = Verdict::approx(true, 0.0);
    for probe in &probes {
        let a = alpha.component(probe).map_err(err)?;
        let b = rebuilt.component(probe).map_err(err)?;
        let v = approx_ae(&a, &b, &t.tolerance)?;
        if !v.pass {
            return Ok(v);
        }
        if v.residual > worst.residual {
            worst = v;
        }
    }
    Ok(worst)
}

/// Small-λ ratio test: `|φ_λ − E| / λ` fitted at two λ's must agree within a
/// factor of 10 on every positive atom with non-zero conditional variance.
fn vm_small_lambda(t: &mut Trial) -> LawResult {
    const LAMBDAS: [f64; 2] = [1e-3, 1e-5];
    let y = t.new_space("Y");
    let f = t.mp_into("f", "X", &y);
    let x = f.src().clone();
    let v = t.qvar("v", &y);
    let mean = cond_expect(&f, &v).map_err(err)?;
    let second = cond_expect(&f, &v.mul(&v).map_err(err)?).map_err(err)?;
    let variance = second.sub(&mean.mul(&mean).map_err(err)?).map_err(err)?;
    let mut slopes = Vec::with_capacity(LAMBDAS.len());
    for lambda in LAMBDAS {
        let vm = (t.factory)(lambda);
        let out = phi(&*vm, &f, &v.to_real())?;
        slopes.push(
            (0..x.len())
                .map(|i| (out.value(i) - mean.value(i).to_f64()).abs() / lambda)
                .collect::<Vec<f64>>(),
        );
    }
    let mut worst = 0.0f64;
    for a in 0..x.sigma().num_atoms() {
        if x.atom_mass(a).is_zero() {
            continue;
        }
        let i = x.sigma().atoms()[a][0];
        let (c_big, c_small) = (slopes[0][i], slopes[1][i]);
        if variance.value(i).is_zero() {
            // degenerate atom: both deviations must vanish
            let scale = mean.value(i).to_f64().abs().max(1.0);
            let dev = c_big * LAMBDAS[0];
            let dev_small = c_small * LAMBDAS[1];
            if dev > 1e-12 * scale || dev_small > 1e-12 * scale {
                return Ok(Verdict::approx(false, dev.max(dev_small))
                    .with_note(format!("atom {} has zero variance", x.atom_label(a))));
            }
            continue;
        }
        let ratio = c_big / c_small;
        let log_gap = ratio.log10().abs();
        if !(0.1..=10.0).contains(&ratio) || !ratio.is_finite() {
            return Ok(Verdict::approx(false, log_gap).with_note(format!(
                "atom {}: fitted slopes {c_big:e} and {c_small:e}",
                x.atom_label(a)
            )));
        }
        worst = worst.max(log_gap);
    }
    Ok(Verdict::approx(true, worst))
}

pub struct Law {
    pub id: &'static str,
    pub anchor: &'static str,
    pub layer: Layer,
    pub run: fn(&mut Trial) -> LawResult,
}

/// Every statement the suite checks, by anchor.
pub const COVERAGE: &[&str] = &[
    "conditional expectation: defining identity",
    "conditional expectation functor: identity",
    "conditional expectation functor: respects a.e. equality",
    "conditional expectation functor: composition",
    "conditional expectation: linearity",
    "conditional expectation: positivity",
    "conditional expectation: taking out what is known",
    "conditional expectation: bounds preserved by measure-preserving arrows",
    "pullback functor: identity",
    "pullback functor: composition",
    "value measure: presheaf identity",
    "value measure: presheaf composition",
    "value measure: respects a.e. equality",
    "value measure: cash invariance",
    "value measure: monotonicity",
    "value measure: normalization",
    "value measure: boundedness under measure-preserving arrows",
    "value measure: valuation after pullback is the identity",
    "value measure: idempotence",
    "value measure: local property",
    "value measure: dynamic programming principle",
    "value measure: time consistency",
    "yoneda: identity component recovers the payoff",
    "yoneda: transformation rebuilt from its payoff",
    "yoneda: naturality",
    "entropic value measure: small risk aversion limit",
];

pub static LAWS: &[Law] = &[
    Law {
        id: "ce.bounded_mp",
        anchor: COVERAGE[7],
        layer: Layer::Exact,
        run: ce_bounded_mp,
    },
    Law {
        id: "ce.composition",
        anchor: COVERAGE[3],
        layer: Layer::Exact,
        run: ce_composition,
    },
    Law {
        id: "ce.congruence",
        anchor: COVERAGE[2],
        layer: Layer::Exact,
        run: ce_congruence,
    },
    Law {
        id: "ce.defining_identity",
        anchor: COVERAGE[0],
        layer: Layer::Exact,
        run: ce_defining_identity,
    },
    Law {
        id: "ce.identity",
        anchor: COVERAGE[1],
        layer: Layer::Exact,
        run: ce_identity,
    },
    Law {
        id: "ce.linearity",
        anchor: COVERAGE[4],
        layer: Layer::Exact,
        run: ce_linearity,
    },
    Law {
        id: "ce.positivity",
        anchor: COVERAGE[5],
        layer: Layer::Exact,
        run: ce_positivity,
    },
    Law {
        id: "ce.take_out_known",
        anchor: COVERAGE[6],
        layer: Layer::Exact,
        run: ce_take_out_known,
    },
    Law {
        id: "l.composition",
        anchor: COVERAGE[9],
        layer: Layer::Exact,
        run: l_composition,
    },
    Law {
        id: "l.identity",
        anchor: COVERAGE[8],
        layer: Layer::Exact,
        run: l_identity,
    },
    Law {
        id: "thm.dpp",
        anchor: COVERAGE[20],
        layer: Layer::Approximate,
        run: thm_dpp,
    },
    Law {
        id: "thm.idempotence",
        anchor: COVERAGE[18],
        layer: Layer::Approximate,
        run: thm_idempotence,
    },
    Law {
        id: "thm.identity_after_pullback",
        anchor: COVERAGE[17],
        layer: Layer::Approximate,
        run: thm_identity_after_pullback,
    },
    Law {
        id: "thm.local_property",
        anchor: COVERAGE[19],
        layer: Layer::Approximate,
        run: thm_local_property,
    },
    Law {
        id: "thm.time_consistency",
        anchor: COVERAGE[21],
        layer: Layer::Approximate,
        run: thm_time_consistency,
    },
    Law {
        id: "vm.boundedness",
        anchor: COVERAGE[16],
        layer: Layer::Approximate,
        run: vm_boundedness,
    },
    Law {
        id: "vm.cash_invariance",
        anchor: COVERAGE[13],
        layer: Layer::Approximate,
        run: vm_cash_invariance,
    },
    Law {
        id: "vm.congruence",
        anchor: COVERAGE[12],
        layer: Layer::Approximate,
        run: vm_congruence,
    },
    Law {
        id: "vm.monotonicity",
        anchor: COVERAGE[14],
        layer: Layer::Approximate,
        run: vm_monotonicity,
    },
    Law {
        id: "vm.normalization",
        anchor: COVERAGE[15],
        layer: Layer::Approximate,
        run: vm_normalization,
    },
    Law {
        id: "vm.presheaf_composition",
        anchor: COVERAGE[11],
        layer: Layer::Approximate,
        run: vm_presheaf_composition,
    },
    Law {
        id: "vm.presheaf_identity",
        anchor: COVERAGE[10],
        layer: Layer::Approximate,
        run: vm_presheaf_identity,
    },
    Law {
        id: "vm.small_lambda",
        anchor: COVERAGE[25],
        layer: Layer::Approximate,
        run: vm_small_lambda,
    },
    Law {
        id: "yoneda.naturality",
        anchor: COVERAGE[24],
        layer: Layer::Approximate,
        run: yoneda_naturality,
    },
    Law {
        id: "yoneda.reverse_round_trip",
        anchor: COVERAGE[23],
        layer: Layer::Approximate,
        run: yoneda_reverse_round_trip,
    },
    Law {
        id: "yoneda.round_trip",
        anchor: COVERAGE[22],
        layer: Layer::Exact,
        run: yoneda_round_trip,
    },
];
