//! Randomized law checking.
//!
//! Every law runs `trials` independent instances. Trial `i` of law `id`
//! draws from a ChaCha8 stream keyed by `(seed, id, i)`, so a run is
//! reproducible regardless of thread count, and any counterexample can be
//! replayed from the recorded instance alone.

mod gen;
mod laws;

use std::time::{Duration, Instant};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde_json::{json, Value};

use crate::doc::{real, to_canonical_string};
use crate::value::{Entropic, ValueMeasure};

pub use gen::{ConfigError, GenConfig, GenError, Generator};
pub use laws::{Law, LawResult, Layer, MeasureFactory, Trial, Verdict, COVERAGE, LAWS};

fn fnv1a(s: &str) -> u64 {
    s.bytes().fold(0xcbf2_9ce4_8422_2325, |h, b| {
        (h ^ b as u64).wrapping_mul(0x0100_0000_01b3)
    })
}

/// Key of the random stream used by one law.
pub fn law_seed(seed: u64, id: &str) -> u64 {
    seed ^ fnv1a(id)
}

pub fn trial_rng(seed: u64, id: &str, trial: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(law_seed(seed, id));
    rng.set_stream(trial as u64);
    rng
}

#[derive(Debug, Clone, PartialEq)]
pub struct Counterexample {
    pub trial: usize,
    /// Key of the law's ChaCha8 stream; `trial` is the stream number.
    pub rng_seed: u64,
    pub residual: f64,
    pub note: Option<String>,
    pub instance: Value,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LawRecord {
    pub id: &'static str,
    pub anchor: &'static str,
    pub layer: Layer,
    pub trials: usize,
    pub failures: usize,
    pub vacuous: usize,
    pub max_residual: f64,
    /// Zero tolerance for the exact layer.
    pub tolerance: f64,
    /// Lowest-index failing trial.
    pub counterexample: Option<Counterexample>,
}

impl LawRecord {
    pub fn passed(&self) -> bool {
        self.failures == 0
    }

    pub fn to_json(&self) -> Value {
        json!({
            "id": self.id,
            "anchor": self.anchor,
            "layer": self.layer.as_str(),
            "trials": self.trials,
            "failures": self.failures,
            "vacuous": self.vacuous,
            "max_residual": real(self.max_residual),
            "tolerance": real(self.tolerance),
            "counterexample": self.counterexample.as_ref().map(|c| json!({
                "trial": c.trial,
                "rng_seed": c.rng_seed,
                "residual": real(c.residual),
                "note": c.note,
                "instance": c.instance,
            })),
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LawReport {
    pub seed: u64,
    pub trials: usize,
    pub max_outcomes: usize,
    pub measure: String,
    pub records: Vec<LawRecord>,
    /// Shown in the summary only; the JSON report stays byte-stable.
    pub wall_time: Duration,
}

impl LawReport {
    pub fn all_passed(&self) -> bool {
        self.records.iter().all(LawRecord::passed)
    }

    pub fn record(&self, id: &str) -> Option<&LawRecord> {
        self.records.iter().find(|r| r.id == id)
    }

    pub fn failing(&self) -> impl Iterator<Item = &LawRecord> {
        self.records.iter().filter(|r| !r.passed())
    }

    pub fn to_json(&self) -> Value {
        json!({
            "seed": self.seed,
            "trials": self.trials,
            "max_outcomes": self.max_outcomes,
            "measure": self.measure,
            "all_passed": self.all_passed(),
            "laws": self.records.iter().map(LawRecord::to_json).collect::<Vec<_>>(),
        })
    }

    pub fn to_canonical_json(&self) -> String {
        to_canonical_string(&self.to_json())
    }

    /// One line per law.
    pub fn summary(&self) -> String {
        let width = self.records.iter().map(|r| r.id.len()).max().unwrap_or(0);
        let mut out = String::new();
        for r in &self.records {
            out.push_str(&format!(
                "{:<4} {:<width$}  {:>5}/{:<5} vacuous={:<4} max_residual={:.3e}  {}\n",
                if r.passed() { "ok" } else { "FAIL" },
                r.id,
                r.trials - r.failures,
                r.trials,
                r.vacuous,
                r.max_residual,
                r.anchor,
            ));
        }
        let failed = self.failing().count();
        out.push_str(&format!(
            "{} laws, {} failed (seed {}, {} trials each, {:.2}s)\n",
            self.records.len(),
            failed,
            self.seed,
            self.trials,
            self.wall_time.as_secs_f64()
        ));
        out
    }
}

/// Runs the full catalogue against the entropic measure.
pub fn run_suite(config: &GenConfig) -> Result<LawReport, ConfigError> {
    let tolerance = config.tolerance;
    let factory = move |lambda: f64| -> Box<dyn ValueMeasure> {
        Box::new(
            Entropic::new(lambda)
                .expect("generated risk aversion is positive")
                .with_tolerance(tolerance),
        )
    };
    run_suite_with(config, "entropic", &factory, |_| true)
}

/// Runs the laws accepted by `select` against measures built by `factory`.
pub fn run_suite_with(
    config: &GenConfig,
    measure: &str,
    factory: &MeasureFactory,
    select: impl Fn(&Law) -> bool,
) -> Result<LawReport, ConfigError> {
    config.validate()?;
    let start = Instant::now();
    let mut records: Vec<LawRecord> = LAWS
        .iter()
        .filter(|law| select(law))
        .map(|law| run_law(config, factory, law))
        .collect();
    records.sort_by(|a, b| a.id.cmp(b.id));
    Ok(LawReport {
        seed: config.seed,
        trials: config.trials,
        max_outcomes: config.max_outcomes,
        measure: measure.to_string(),
        records,
        wall_time: start.elapsed(),
    })
}

pub fn law(id: &str) -> Option<&'static Law> {
    LAWS.iter().find(|l| l.id == id)
}

/// Runs one trial of `law`, returning the verdict and the recorded instance.
pub fn run_trial(
    config: &GenConfig,
    factory: &MeasureFactory,
    law: &Law,
    trial: usize,
) -> (LawResult, Value) {
    let gen = Generator::new(config, trial_rng(config.seed, law.id, trial));
    let mut t = Trial::new(gen, factory, config.tolerance);
    let result = (law.run)(&mut t);
    (result, t.into_instance())
}

fn run_law(config: &GenConfig, factory: &MeasureFactory, law: &Law) -> LawRecord {
    let outcomes: Vec<(LawResult, Value)> = (0..config.trials)
        .into_par_iter()
        .map(|i| run_trial(config, factory, law, i))
        .collect();
    let tolerance = match law.layer {
        Layer::Exact => 0.0,
        Layer::Approximate => config.tolerance.relative,
    };
    let mut record = LawRecord {
        id: law.id,
        anchor: law.anchor,
        layer: law.layer,
        trials: config.trials,
        failures: 0,
        vacuous: 0,
        max_residual: 0.0,
        tolerance,
        counterexample: None,
    };
    for (trial, (result, instance)) in outcomes.into_iter().enumerate() {
        let verdict = result.unwrap_or_else(|message| Verdict {
            pass: false,
            vacuous: false,
            residual: f64::INFINITY,
            note: Some(format!("error: {message}")),
        });
        if verdict.vacuous {
            record.vacuous += 1;
        }
        if verdict.residual.is_finite() {
            record.max_residual = record.max_residual.max(verdict.residual);
        }
        if !verdict.pass {
            record.failures += 1;
            if record.counterexample.is_none() {
                record.counterexample = Some(Counterexample {
                    trial,
                    rng_seed: law_seed(config.seed, law.id),
                    residual: verdict.residual,
                    note: verdict.note,
                    instance,
                });
            }
        }
    }
    record
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(trials: usize) -> GenConfig {
        GenConfig {
            seed: 7,
            trials,
            ..GenConfig::default()
        }
    }

    #[test]
    fn every_anchor_is_covered_once() {
        let mut anchors: Vec<&str> = LAWS.iter().map(|l| l.anchor).collect();
        anchors.sort();
        let mut expected = COVERAGE.to_vec();
        expected.sort();
        assert_eq!(anchors, expected);
    }

    #[test]
    fn law_ids_are_unique_and_sorted() {
        let ids: Vec<&str> = LAWS.iter().map(|l| l.id).collect();
        let mut sorted = ids.clone();
        sorted.sort();
        sorted.dedup();
        assert_eq!(ids, sorted);
    }

    #[test]
    fn entropic_suite_passes_small_run() {
        let report = run_suite(&small(20)).unwrap();
        assert!(report.all_passed(), "{}", report.summary());
        assert_eq!(report.records.len(), LAWS.len());
    }

    #[test]
    fn exact_layer_reports_zero_residual() {
        let report = run_suite(&small(10)).unwrap();
        for r in report.records.iter().filter(|r| r.layer == Layer::Exact) {
            assert_eq!(r.max_residual, 0.0, "{}", r.id);
        }
    }

    #[test]
    fn rejects_zero_trials() {
        assert_eq!(run_suite(&small(0)).unwrap_err(), ConfigError::ZeroTrials);
    }

    #[test]
    fn trial_streams_depend_on_law_and_index() {
        use rand::RngCore;
        let a = trial_rng(1, "x", 0).next_u64();
        assert_eq!(a, trial_rng(1, "x", 0).next_u64());
        assert_ne!(a, trial_rng(1, "x", 1).next_u64());
        assert_ne!(a, trial_rng(1, "y", 0).next_u64());
    }

    #[test]
    fn broken_measure_yields_replayable_counterexample() {
        let factory = |_: f64| -> Box<dyn ValueMeasure> {
            Box::new(crate::value::FnValueMeasure::new(
                "plus-one",
                crate::value::Comparison::Approximate(Default::default()),
                |arrow, v| Ok(crate::category::cond_expect(arrow, v)?.add_constant(&1.0)),
            ))
        };
        let config = small(10);
        let report = run_suite_with(&config, "plus-one", &factory, |l| {
            l.id == "vm.presheaf_identity"
        })
        .unwrap();
        let rec = report.record("vm.presheaf_identity").unwrap();
        assert_eq!(rec.failures, 10);
        let cx = rec.counterexample.as_ref().unwrap();
        assert_eq!(cx.trial, 0);
        let (again, instance) =
            run_trial(&config, &factory, law("vm.presheaf_identity").unwrap(), 0);
        assert!(!again.unwrap().pass);
        assert_eq!(instance, cx.instance);
    }
}
