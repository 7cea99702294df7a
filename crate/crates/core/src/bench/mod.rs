//! Registry of the benchmark problems used by the experiment harness: the
//! fourteen black-box problems and the five grey-box configurations, each
//! carrying closed-form functions, bounds, a best known feasible value and a
//! reference solution validated on load.

mod problems;

use std::sync::{Arc, OnceLock};

use nalgebra::DVector;
use thiserror::Error;

use crate::problem::{GreyBoxProblem, SlackProblem, FEASIBILITY_TOL};

type Maker = Arc<dyn Fn() -> GreyBoxProblem + Send + Sync>;

/// Grey-box configuration of an entry: which functions are exposed in
/// closed form with derivatives.
#[derive(Clone)]
pub struct GreyBoxSplit {
    pub bb_constraints: usize,
    pub wb_constraints: usize,
    pub objective_white: bool,
    pub make: Maker,
}

#[derive(Clone)]
pub struct BenchmarkEntry {
    /// Display name (as published).
    pub name: &'static str,
    /// ASCII lookup key.
    pub key: &'static str,
    pub n: usize,
    /// Published constraint count (bounds not included).
    pub constraints: usize,
    pub best_known: f64,
    /// A feasible point attaining the best known value.
    pub reference: Vec<f64>,
    pub make_black: Maker,
    pub greybox: Option<GreyBoxSplit>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProblemMode {
    BlackBox,
    GreyBox,
}

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("unknown problem '{0}'")]
    UnknownProblem(String),
    #[error("problem '{0}' has no grey-box configuration")]
    UnsupportedMode(String),
    #[error("reference validation failed for '{name}': f = {f}, best known = {best}, cv = {cv}")]
    ValidationFailure {
        name: String,
        f: f64,
        best: f64,
        cv: f64,
    },
}

/// All registered entries, in table order.
pub fn registry() -> &'static [BenchmarkEntry] {
    static REG: OnceLock<Vec<BenchmarkEntry>> = OnceLock::new();
    REG.get_or_init(problems::registry_entries)
}

/// The fourteen problems of the black-box experiment table, in order.
pub fn blackbox_suite() -> Vec<&'static BenchmarkEntry> {
    registry()
        .iter()
        .filter(|e| !matches!(e.key, "hs21" | "hs23"))
        .collect()
}

/// The five grey-box configurations.
pub fn greybox_suite() -> Vec<&'static BenchmarkEntry> {
    registry().iter().filter(|e| e.greybox.is_some()).collect()
}

fn normalize(name: &str) -> String {
    name.chars()
        .filter(|c| c.is_ascii_alphanumeric())
        .map(|c| c.to_ascii_lowercase())
        .collect()
}

pub fn find(name: &str) -> Result<&'static BenchmarkEntry, BenchError> {
    let want = normalize(name);
    registry()
        .iter()
        .find(|e| normalize(e.key) == want || normalize(e.name) == want)
        .ok_or_else(|| BenchError::UnknownProblem(name.to_string()))
}

/// Instantiates a registered problem in the requested mode.
pub fn get_problem(name: &str, mode: ProblemMode) -> Result<GreyBoxProblem, BenchError> {
    let entry = find(name)?;
    match mode {
        ProblemMode::BlackBox => Ok((entry.make_black)()),
        ProblemMode::GreyBox => match &entry.greybox {
            Some(split) => Ok((split.make)()),
            None => Err(BenchError::UnsupportedMode(name.to_string())),
        },
    }
}

#[derive(Debug, Clone)]
pub struct ValidationReport {
    pub name: &'static str,
    pub f: f64,
    pub cv: f64,
}

/// Evaluates the stored reference solution: it must attain the best known
/// value within `1e-3 (1 + |best|)` at violation at most the feasibility
/// filter, for every available mode.
pub fn validate_reference(entry: &BenchmarkEntry) -> Result<ValidationReport, BenchError> {
    let mut report = ValidationReport {
        name: entry.name,
        f: f64::NAN,
        cv: f64::NAN,
    };
    let modes: Vec<GreyBoxProblem> = match &entry.greybox {
        Some(split) => vec![(entry.make_black)(), (split.make)()],
        None => vec![(entry.make_black)()],
    };
    for prob in modes {
        let slack = SlackProblem::new(prob).expect("registry entries are valid");
        let x = DVector::from_column_slice(&entry.reference);
        let ledger = crate::problem::EvaluationLedger::new(1);
        let ev = ledger
            .evaluate(&slack, &x)
            .expect("reference point must be inside the x box");
        let cv = slack.constraint_violation(&ev.z);
        let ok = (ev.f - entry.best_known).abs() <= 1e-3 * (1.0 + entry.best_known.abs())
            && cv <= FEASIBILITY_TOL;
        if !ok {
            return Err(BenchError::ValidationFailure {
                name: entry.name.to_string(),
                f: ev.f,
                best: entry.best_known,
                cv,
            });
        }
        report.f = ev.f;
        report.cv = cv;
    }
    Ok(report)
}

/// CSV listing of the registry metadata (both tables).
pub fn list_csv() -> String {
    let mut out = String::from(
        "name,key,n,constraints,best_known,greybox,bb_constraints,wb_constraints,objective\n",
    );
    for e in registry() {
        let (g, bb, wb, obj) = match &e.greybox {
            Some(s) => (
                "yes",
                s.bb_constraints.to_string(),
                s.wb_constraints.to_string(),
                if s.objective_white { "WB" } else { "BB" },
            ),
            None => ("no", String::new(), String::new(), "BB"),
        };
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{}\n",
            e.name, e.key, e.n, e.constraints, e.best_known, g, bb, wb, obj
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_entry_validates() {
        for entry in registry() {
            let report = validate_reference(entry)
                .unwrap_or_else(|e| panic!("{e}"));
            assert!(report.cv <= FEASIBILITY_TOL);
        }
    }

    #[test]
    fn lookup_by_alias() {
        assert_eq!(find("G11").unwrap().n, 2);
        assert_eq!(find("Gómez #3").unwrap().key, "gomez3");
        assert_eq!(find("gomez3").unwrap().constraints, 1);
        assert!(find("nosuch").is_err());
    }

    #[test]
    fn table_counts_match_published_rows() {
        let t2: Vec<(&str, usize, usize)> = vec![
            ("harley", 9, 6),
            ("wb4", 4, 6),
            ("gtcd4", 4, 1),
            ("pvd4", 4, 3),
            ("sr7", 7, 11),
            ("hesse", 6, 6),
            ("gomez3", 2, 1),
            ("g3", 2, 1),
            ("g4", 5, 6),
            ("g6", 2, 2),
            ("g7", 10, 8),
            ("g8", 2, 2),
            ("g9", 7, 4),
            ("g11", 2, 1),
        ];
        assert_eq!(blackbox_suite().len(), 14);
        for (key, n, cons) in t2 {
            let e = find(key).unwrap();
            assert_eq!(e.n, n, "{key}");
            assert_eq!(e.constraints, cons, "{key}");
            // The instantiated problem carries exactly that many rows.
            let p = get_problem(key, ProblemMode::BlackBox).unwrap();
            assert_eq!(p.q + p.l, cons, "{key}");
        }
    }

    #[test]
    fn greybox_splits_match_published_rows() {
        let t4: Vec<(&str, usize, usize, bool)> = vec![
            ("gtcd4", 0, 1, false),
            ("sr7", 9, 2, true),
            ("hesse", 3, 3, true),
            ("hs21", 1, 0, true),
            ("hs23", 3, 2, false),
        ];
        assert_eq!(greybox_suite().len(), 5);
        for (key, bb, wb, obj_white) in t4 {
            let e = find(key).unwrap();
            let split = e.greybox.as_ref().unwrap();
            assert_eq!(split.bb_constraints, bb, "{key}");
            assert_eq!(split.wb_constraints, wb, "{key}");
            assert_eq!(split.objective_white, obj_white, "{key}");
            let p = get_problem(key, ProblemMode::GreyBox).unwrap();
            assert_eq!(p.q, bb, "{key}");
            assert_eq!(p.l, wb, "{key}");
            assert_eq!(
                p.f_kind == crate::problem::FnKind::WhiteBox,
                obj_white,
                "{key}"
            );
        }
    }

    #[test]
    fn greybox_mode_rejected_without_split() {
        assert!(matches!(
            get_problem("G6", ProblemMode::GreyBox),
            Err(BenchError::UnsupportedMode(_))
        ));
    }

    #[test]
    fn corrupted_reference_fails_validation() {
        let entry = find("g11").unwrap();
        let mut bad = entry.clone();
        let mut r = bad.reference.clone();
        r[0] += 0.1;
        bad.reference = r;
        assert!(validate_reference(&bad).is_err());
    }

    #[test]
    fn list_csv_has_all_rows() {
        let csv = list_csv();
        assert_eq!(csv.lines().count(), 1 + registry().len());
        assert!(csv.contains("Gómez #3"));
        assert!(csv.contains("sr7,7,11"));
    }
}
