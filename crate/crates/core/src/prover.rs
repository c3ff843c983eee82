//! The equality decision procedure.
//!
//! To decide `s = t`:
//!
//! 1. reduce both sides to normal form with the **fold set only** — the
//!    simplification rules are sound but not part of the decision
//!    pipeline, which relies on the fold normal form's shape;
//! 2. gate on theory membership: both normal forms must be free of
//!    cycle-escaping folds and open structure arguments, otherwise the
//!    procedure refuses (it neither affirms nor denies);
//! 3. build both charts and compare them up to bisimulation.
//!
//! The verdict carries certificates: the rewrite traces, the refined
//! block count, and — for inequality — a machine-checked distinguishing
//! formula. Verdicts over charts with opaque (stuck) content are marked
//! `incomplete`: equality then means "equal up to identifying stuck
//! subterms with the same shape".

use crate::bisim::{chart, check_bisimilar, Formula};
use crate::kernel::Term;
use crate::rewrite::{check_in_theory, normalize, RewriteError, Trace};
use crate::rules::RuleSet;
use crate::signature::Signature;

/// Outcome of the decision procedure.
#[derive(Debug, Clone)]
pub enum Verdict {
    Equal {
        incomplete: bool,
    },
    NotEqual {
        incomplete: bool,
        /// Root component index and a formula satisfied by the left
        /// normal form but not the right.
        evidence: Option<(usize, Formula)>,
    },
    Refused {
        reason: String,
        /// The offending subterm, when one exists.
        offending: Option<Term>,
    },
}

impl Verdict {
    /// Conventional exit code: 0 equal, 1 not equal, 2 refused.
    pub fn exit_code(&self) -> i32 {
        match self {
            Verdict::Equal { .. } => 0,
            Verdict::NotEqual { .. } => 1,
            Verdict::Refused { .. } => 2,
        }
    }
}

/// The full report: verdict plus certificates.
#[derive(Debug, Clone)]
pub struct ProveReport {
    pub verdict: Verdict,
    pub lhs_nf: Option<Term>,
    pub rhs_nf: Option<Term>,
    pub lhs_trace: Trace,
    pub rhs_trace: Trace,
    /// Number of bisimulation classes in the refined union chart (0 when
    /// the comparison never ran).
    pub block_count: usize,
}

/// Decide `lhs = rhs` over `sig` using the fold rule set.
pub fn prove(
    sig: &Signature,
    foldr: &RuleSet,
    lhs: &Term,
    rhs: &Term,
    fuel: usize,
) -> ProveReport {
    let mut report = ProveReport {
        verdict: Verdict::Refused { reason: String::new(), offending: None },
        lhs_nf: None,
        rhs_nf: None,
        lhs_trace: Trace::default(),
        rhs_trace: Trace::default(),
        block_count: 0,
    };

    let lnf = match normalize(sig, foldr, lhs, fuel) {
        Ok((nf, trace)) => {
            report.lhs_trace = trace;
            report.lhs_nf = Some(nf.clone());
            nf
        }
        Err(RewriteError::FuelExhausted { steps, last }) => {
            report.verdict = Verdict::Refused {
                reason: format!("left side did not normalize within {} steps", steps),
                offending: Some(last),
            };
            return report;
        }
    };
    let rnf = match normalize(sig, foldr, rhs, fuel) {
        Ok((nf, trace)) => {
            report.rhs_trace = trace;
            report.rhs_nf = Some(nf.clone());
            nf
        }
        Err(RewriteError::FuelExhausted { steps, last }) => {
            report.verdict = Verdict::Refused {
                reason: format!("right side did not normalize within {} steps", steps),
                offending: Some(last),
            };
            return report;
        }
    };

    for (side, nf) in [("left", &lnf), ("right", &rnf)] {
        if let Err(v) = check_in_theory(nf) {
            let offending = match &v {
                crate::rewrite::TheoryViolation::CycleEscapingFold { fold, .. }
                | crate::rewrite::TheoryViolation::OpenStructure { fold, .. } => {
                    Some(fold.clone())
                }
            };
            report.verdict = Verdict::Refused {
                reason: format!("{} normal form falls outside the decidable fragment: {}", side, v),
                offending,
            };
            return report;
        }
    }

    let (ca, cb) = match (chart(sig, &lnf), chart(sig, &rnf)) {
        (Ok(a), Ok(b)) => (a, b),
        (Err(e), _) | (_, Err(e)) => {
            report.verdict =
                Verdict::Refused { reason: format!("cannot build chart: {}", e), offending: None };
            return report;
        }
    };
    let r = check_bisimilar(&ca, &cb);
    report.block_count = r.block_count;
    report.verdict = if r.equal {
        Verdict::Equal { incomplete: r.incomplete }
    } else {
        Verdict::NotEqual { incomplete: r.incomplete, evidence: r.evidence }
    };
    report
}
