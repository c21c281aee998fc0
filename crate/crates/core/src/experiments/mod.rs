//! Batch experiment sweeps and their JSONL report format.
//!
//! Each experiment walks a deterministic family of instances, runs the
//! relevant checks, and emits one [`ExperimentRecord`] per instance.  A
//! record carries named boolean hypothesis flags, an optional conclusion,
//! and a `fatal` bit: fatal means an invariant that should never fail did
//! fail, and the run as a whole must be treated as broken.  Reports are
//! sorted by instance key and contain no timestamps, so two runs over the
//! same configuration produce byte-identical files.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::elliptic_curves::Curve;
use crate::error::{Error, Result};
use crate::finite_fields::{is_prime, ExtField};

mod descent;
mod equiv;
mod isotypic;
mod lemma_defined;
mod mink;

pub use descent::run_descent;
pub use equiv::run_equiv;
pub use isotypic::run_isotypic;
pub use lemma_defined::run_lemma_defined;
pub use mink::run_mink;

/// Tunable bounds for the experiment sweeps.  Every field has a default,
/// so an empty JSON object `{}` is a valid configuration.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepConfig {
    /// largest base characteristic visited by the curve sweeps
    pub max_p: u64,
    /// curves per prime in the oracle-agreement sweep
    pub curves_per_prime: usize,
    /// curves per prime offered to the descent sweep
    pub descent_curves_per_prime: usize,
    /// isogeny degrees used when quotienting
    pub isogeny_degrees: Vec<u64>,
    /// marked-subgroup levels n explored by the descent sweep
    pub levels: Vec<u64>,
    /// extension degrees m of the larger field L over F
    pub extension_degrees: Vec<usize>,
    /// primes (3 mod 4) for the quaternion-model experiments
    pub quaternion_primes: Vec<u64>,
    /// number of product varieties sampled by the isotypic sweep
    pub product_count: usize,
    /// largest number of factors in a sampled product
    pub max_product_factors: usize,
    /// seed for the reproducible random choices of the isotypic sweep
    pub seed: u64,
}

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig {
            max_p: 50,
            curves_per_prime: 8,
            descent_curves_per_prime: 12,
            isogeny_degrees: vec![2, 3, 5, 7],
            levels: vec![5, 6, 7, 8, 9, 10, 11, 12, 13],
            extension_degrees: vec![2, 3],
            quaternion_primes: vec![7, 11, 19, 23],
            product_count: 200,
            max_product_factors: 4,
            seed: 2026,
        }
    }
}

impl SweepConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::BadConfig(msg));
        if self.max_p < 5 || self.max_p > 200 {
            return bad(format!("max_p must lie in 5..=200, got {}", self.max_p));
        }
        if self.curves_per_prime == 0 || self.curves_per_prime > 100 {
            return bad(format!(
                "curves_per_prime must lie in 1..=100, got {}",
                self.curves_per_prime
            ));
        }
        if self.descent_curves_per_prime == 0 || self.descent_curves_per_prime > 2500 {
            return bad(format!(
                "descent_curves_per_prime must lie in 1..=2500, got {}",
                self.descent_curves_per_prime
            ));
        }
        if self.isogeny_degrees.is_empty() {
            return bad("isogeny_degrees must not be empty".into());
        }
        for &ell in &self.isogeny_degrees {
            if !is_prime(ell) || ell > 13 {
                return bad(format!("isogeny degree {ell} is not a prime <= 13"));
            }
        }
        for &n in &self.levels {
            if !(2..=13).contains(&n) {
                return bad(format!("marked level {n} is outside 2..=13"));
            }
        }
        if self.extension_degrees.is_empty() {
            return bad("extension_degrees must not be empty".into());
        }
        for &m in &self.extension_degrees {
            if !(1..=3).contains(&m) {
                return bad(format!("extension degree {m} is outside 1..=3"));
            }
        }
        for &p in &self.quaternion_primes {
            if !is_prime(p) || p % 4 != 3 || p > 200 {
                return bad(format!("quaternion prime {p} must be a prime = 3 mod 4, at most 200"));
            }
        }
        if self.product_count > 5000 {
            return bad(format!("product_count must be at most 5000, got {}", self.product_count));
        }
        if self.max_product_factors == 0 || self.max_product_factors > 4 {
            return bad(format!(
                "max_product_factors must lie in 1..=4, got {}",
                self.max_product_factors
            ));
        }
        Ok(())
    }
}

/// One line of a JSONL report.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExperimentRecord {
    /// experiment name, e.g. "descent"
    pub experiment: String,
    /// unique sort key describing the instance
    pub instance: String,
    /// named boolean facts established while checking the instance
    pub hypotheses: BTreeMap<String, bool>,
    /// verdict of the instance's main implication, when one applies
    pub conclusion: Option<bool>,
    /// true when an invariant that must always hold failed
    pub fatal: bool,
    /// short human-readable context
    pub witness: String,
}

impl ExperimentRecord {
    pub fn new(experiment: &str, instance: String) -> ExperimentRecord {
        ExperimentRecord {
            experiment: experiment.to_string(),
            instance,
            hypotheses: BTreeMap::new(),
            conclusion: None,
            fatal: false,
            witness: String::new(),
        }
    }

    pub fn hyp(&mut self, name: &str, value: bool) -> &mut Self {
        self.hypotheses.insert(name.to_string(), value);
        self
    }
}

/// Per-experiment record and fatal counts for a finished run.
#[derive(Clone, Debug, Default, Serialize)]
pub struct ReportSummary {
    pub total: usize,
    pub fatal: usize,
    pub per_experiment: BTreeMap<String, ExperimentCounts>,
}

#[derive(Clone, Copy, Debug, Default, Serialize)]
pub struct ExperimentCounts {
    pub records: usize,
    pub fatal: usize,
}

impl ReportSummary {
    /// Aligned text table, one experiment per row plus a total row.
    pub fn table(&self) -> String {
        let mut width = "experiment".len();
        for name in self.per_experiment.keys() {
            width = width.max(name.len());
        }
        let mut out = format!("{:<width$}  {:>7}  {:>5}\n", "experiment", "records", "fatal");
        for (name, counts) in &self.per_experiment {
            out.push_str(&format!(
                "{:<width$}  {:>7}  {:>5}\n",
                name, counts.records, counts.fatal
            ));
        }
        out.push_str(&format!("{:<width$}  {:>7}  {:>5}\n", "total", self.total, self.fatal));
        out
    }
}

pub fn summarize(records: &[ExperimentRecord]) -> ReportSummary {
    let mut summary = ReportSummary::default();
    for r in records {
        summary.total += 1;
        let counts = summary.per_experiment.entry(r.experiment.clone()).or_default();
        counts.records += 1;
        if r.fatal {
            summary.fatal += 1;
            counts.fatal += 1;
        }
    }
    summary
}

/// Serialize records as sorted JSONL (one compact object per line).
pub fn render_report(records: &[ExperimentRecord]) -> Result<String> {
    let mut sorted: Vec<&ExperimentRecord> = records.iter().collect();
    sorted.sort_by(|x, y| {
        x.experiment
            .cmp(&y.experiment)
            .then_with(|| x.instance.cmp(&y.instance))
            .then_with(|| x.witness.cmp(&y.witness))
    });
    let mut out = String::new();
    for r in sorted {
        out.push_str(&serde_json::to_string(r)?);
        out.push('\n');
    }
    Ok(out)
}

/// Write the sorted report to `path` and return its summary.  An empty
/// record list produces an empty file.
pub fn emit_report(records: &[ExperimentRecord], path: &Path) -> Result<ReportSummary> {
    let body = render_report(records)?;
    fs::write(path, body)?;
    Ok(summarize(records))
}

/// The experiment names accepted by [`run_experiment`].
pub const EXPERIMENT_NAMES: [&str; 6] =
    ["lemma-defined", "equiv", "mink", "descent", "isotypic", "all"];

/// Run one named experiment (or all five) under the given configuration.
pub fn run_experiment(name: &str, cfg: &SweepConfig) -> Result<Vec<ExperimentRecord>> {
    cfg.validate()?;
    match name {
        "lemma-defined" => run_lemma_defined(cfg),
        "equiv" => run_equiv(cfg),
        "mink" => run_mink(cfg),
        "descent" => run_descent(cfg),
        "isotypic" => run_isotypic(cfg),
        "all" => run_all(cfg),
        other => Err(Error::BadConfig(format!(
            "unknown experiment {other:?}; expected one of {:?}",
            EXPERIMENT_NAMES
        ))),
    }
}

/// All five experiments in a fixed order.
pub fn run_all(cfg: &SweepConfig) -> Result<Vec<ExperimentRecord>> {
    cfg.validate()?;
    let mut records = run_lemma_defined(cfg)?;
    records.extend(run_equiv(cfg)?);
    records.extend(run_mink(cfg)?);
    records.extend(run_descent(cfg)?);
    records.extend(run_isotypic(cfg)?);
    Ok(records)
}

// ---------------------------------------------------------------------------
// shared selectors

/// Primes in [lo, hi], ascending.
pub(crate) fn primes_in(lo: u64, hi: u64) -> Vec<u64> {
    (lo..=hi).filter(|&n| is_prime(n)).collect()
}

/// The first `count` nonsingular curves y^2 = x^3 + ax + b over F_p in
/// lexicographic (a, b) order.
pub(crate) fn canonical_curves(p: u64, count: usize) -> Result<Vec<Curve>> {
    let field = ExtField::new(p, 1)?;
    let mut out = Vec::with_capacity(count);
    'outer: for a in 0..p {
        for b in 0..p {
            if let Ok(curve) = Curve::from_i64(&field, a as i64, b as i64) {
                out.push(curve);
                if out.len() == count {
                    break 'outer;
                }
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_config_is_valid_and_deserializes_from_empty_object() {
        let cfg: SweepConfig = serde_json::from_str("{}").expect("empty object");
        cfg.validate().expect("default config valid");
        assert_eq!(cfg.max_p, SweepConfig::default().max_p);
        assert_eq!(cfg.seed, SweepConfig::default().seed);
    }

    #[test]
    fn config_rejects_out_of_range_fields() {
        let mut cfg = SweepConfig { max_p: 4, ..SweepConfig::default() };
        assert!(matches!(cfg.validate(), Err(Error::BadConfig(_))));
        cfg = SweepConfig { isogeny_degrees: vec![4], ..SweepConfig::default() };
        assert!(matches!(cfg.validate(), Err(Error::BadConfig(_))));
        cfg = SweepConfig { quaternion_primes: vec![13], ..SweepConfig::default() };
        assert!(matches!(cfg.validate(), Err(Error::BadConfig(_))));
        cfg = SweepConfig { extension_degrees: vec![5], ..SweepConfig::default() };
        assert!(matches!(cfg.validate(), Err(Error::BadConfig(_))));
        let err: Result<SweepConfig> =
            serde_json::from_str("{\"unknown_field\": 3}").map_err(Error::from);
        assert!(err.is_err());
    }

    #[test]
    fn empty_record_set_renders_an_empty_report() {
        let rendered = render_report(&[]).expect("render");
        assert!(rendered.is_empty());
        let summary = summarize(&[]);
        assert_eq!(summary.total, 0);
        assert_eq!(summary.fatal, 0);
    }

    #[test]
    fn reports_sort_by_instance_key_and_count_fatal_records() {
        let mut r1 = ExperimentRecord::new("mink", "p=11 second".into());
        r1.hyp("fixed", true);
        r1.conclusion = Some(true);
        let mut r2 = ExperimentRecord::new("mink", "p=07 first".into());
        r2.fatal = true;
        r2.witness = "invariant broke".into();
        let rendered = render_report(&[r1.clone(), r2.clone()]).expect("render");
        let lines: Vec<&str> = rendered.lines().collect();
        assert_eq!(lines.len(), 2);
        assert!(lines[0].contains("p=07 first"));
        assert!(lines[1].contains("p=11 second"));
        let summary = summarize(&[r1, r2]);
        assert_eq!(summary.total, 2);
        assert_eq!(summary.fatal, 1);
        assert_eq!(summary.per_experiment["mink"].records, 2);
        assert_eq!(summary.per_experiment["mink"].fatal, 1);
        // a fatal record round-trips through serde with its flag intact
        let line: ExperimentRecord = serde_json::from_str(lines[0]).expect("parse");
        assert!(line.fatal);
        assert_eq!(line.experiment, "mink");
    }

    #[test]
    fn canonical_curve_selector_skips_singular_equations() {
        let curves = canonical_curves(5, 6).expect("curves");
        assert_eq!(curves.len(), 6);
        // (a, b) = (0, 0) is singular, so the list starts at (0, 1)
        let first = &curves[0];
        assert_eq!(first.field().ordinal(first.a()), 0);
        assert_eq!(first.field().ordinal(first.b()), 1);
        for c in &curves {
            let disc_zero = c.rhs(&c.field().zero()).is_zero();
            // b = 0 with a = 0 never appears
            assert!(!(c.a().is_zero() && c.b().is_zero()));
            let _ = disc_zero;
        }
        assert_eq!(primes_in(5, 20), vec![5, 7, 11, 13, 17, 19]);
    }
}
