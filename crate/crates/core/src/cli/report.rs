use std::fmt::Write as _;

use serde::Serialize;

use super::data::{fmt_full, load_dataset, AnalysisSpec};
use crate::error::Result;
use crate::intervals::{ci_asobel, IntervalPair};
use crate::models::{fit_mediation, MediationFit, OutcomeFamily};
use crate::multitest::test_all;
use crate::simulate::{Estimates, SimulationSummary};
use crate::testing::{Method, TestReport};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MediatorRow {
    pub name: String,
    pub fit: MediationFit,
    pub test: TestReport,
    pub intervals: IntervalPair,
    /// Rejections at the Bonferroni threshold, in [`Method::ALL`] order.
    pub rejected: [bool; 4],
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AnalysisReport {
    pub family: OutcomeFamily,
    pub n: usize,
    pub d: usize,
    /// 1-based data rows removed by the NA policy.
    pub dropped_rows: Vec<usize>,
    pub delta: f64,
    pub threshold: f64,
    pub lambda_n: f64,
    pub mediators: Vec<MediatorRow>,
}

/// Reads, fits and tests every mediator named in `spec`.
pub fn analyze(spec: &AnalysisSpec) -> Result<AnalysisReport> {
    let loaded = load_dataset(spec)?;
    analyze_loaded(spec, loaded)
}

pub(crate) fn analyze_loaded(
    spec: &AnalysisSpec,
    loaded: super::data::LoadedData,
) -> Result<AnalysisReport> {
    let data = &loaded.dataset;
    let fits = fit_mediation(data, spec.outcome_family)?;
    let multi = test_all(&fits, spec.delta)?;
    let mediators = fits
        .iter()
        .zip(&multi.per_mediator)
        .zip(&spec.mediator_columns)
        .map(|((fit, test), name)| {
            Ok(MediatorRow {
                name: name.clone(),
                fit: *fit,
                test: *test,
                intervals: ci_asobel(fit, spec.delta)?,
                rejected: Method::ALL.map(|m| multi.rejected(m).contains(&fit.mediator_index)),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(AnalysisReport {
        family: spec.outcome_family,
        n: data.n(),
        d: data.d(),
        dropped_rows: loaded.dropped_rows,
        delta: spec.delta,
        threshold: multi.threshold,
        lambda_n: multi.per_mediator[0].lambda_n,
        mediators,
    })
}

pub const ANALYSIS_COLUMNS: [&str; 25] = [
    "mediator",
    "alpha_hat",
    "se_alpha",
    "beta_hat",
    "se_beta",
    "t_alpha",
    "t_beta",
    "t_sobel",
    "t_max",
    "adaptive_branch",
    "p_sobel",
    "p_js",
    "p_asobel",
    "p_ajs",
    "product",
    "se_product",
    "sobel_lo",
    "sobel_hi",
    "asobel_lo",
    "asobel_hi",
    "ci_degenerate",
    "reject_sobel",
    "reject_js",
    "reject_asobel",
    "reject_ajs",
];

impl AnalysisReport {
    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(ANALYSIS_COLUMNS)?;
        for m in &self.mediators {
            let (f, t, ci) = (&m.fit, &m.test, &m.intervals);
            let mut rec = vec![m.name.clone()];
            rec.extend(
                [
                    f.alpha_hat,
                    f.se_alpha,
                    f.beta_hat,
                    f.se_beta,
                    t.t_alpha,
                    t.t_beta,
                    t.t_sobel,
                    t.t_max,
                ]
                .map(fmt_full),
            );
            rec.push(t.adaptive_branch.to_string());
            rec.extend(
                [
                    t.p_sobel,
                    t.p_js,
                    t.p_asobel,
                    t.p_ajs,
                    ci.point,
                    ci.se_product,
                    ci.sobel.lo,
                    ci.sobel.hi,
                    ci.asobel.lo,
                    ci.asobel.hi,
                ]
                .map(fmt_full),
            );
            rec.push(ci.degenerate.to_string());
            rec.extend(m.rejected.map(|r| r.to_string()));
            w.write_record(&rec)?;
        }
        Ok(String::from_utf8(w.into_inner().expect("in-memory writer")).expect("csv is utf-8"))
    }

    pub fn to_table(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(
            s,
            "{} mediation, n = {}, d = {}, level {}, Bonferroni threshold {:.4}, lambda_n = {:.4}",
            self.family, self.n, self.d, self.delta, self.threshold, self.lambda_n
        );
        if !self.dropped_rows.is_empty() {
            let _ = writeln!(
                s,
                "dropped {} rows with missing values",
                self.dropped_rows.len()
            );
        }
        let _ = writeln!(
            s,
            "{:<12} {:>9} {:>9} {:>9} {:>9} {:>8} {:>8} {:>8} {:>8} {:>21} {:>21}  reject",
            "mediator",
            "alpha",
            "se",
            "beta",
            "se",
            "Sobel",
            "JS",
            "ASobel",
            "AJS",
            "Sobel CI",
            "ASobel CI"
        );
        for m in &self.mediators {
            let (f, t, ci) = (&m.fit, &m.test, &m.intervals);
            let rejected: Vec<&str> = Method::ALL
                .iter()
                .zip(m.rejected)
                .filter(|(_, r)| *r)
                .map(|(m, _)| m.name())
                .collect();
            let _ = writeln!(
                s,
                "{:<12} {:>9.4} {:>9.4} {:>9.4} {:>9.4} {:>8.4} {:>8.4} {:>8.4} {:>8.4} {:>21} {:>21}  {}",
                m.name,
                f.alpha_hat,
                f.se_alpha,
                f.beta_hat,
                f.se_beta,
                t.p_sobel,
                t.p_js,
                t.p_asobel,
                t.p_ajs,
                format!("[{:.4}, {:.4}]", ci.sobel.lo, ci.sobel.hi),
                format!("[{:.4}, {:.4}]", ci.asobel.lo, ci.asobel.hi),
                if rejected.is_empty() { "-".to_string() } else { rejected.join(",") }
            );
        }
        s
    }
}

fn method_columns(prefix: &str) -> Vec<String> {
    Method::ALL
        .iter()
        .map(|m| format!("{prefix}{}", m.name()))
        .collect()
}

fn opt_full(v: Option<f64>) -> String {
    v.map(fmt_full).unwrap_or_default()
}

/// CSV for a batch of summaries of one kind. Timing is left out so the
/// bytes depend only on the scenarios and seeds.
pub fn summaries_to_csv(summaries: &[SimulationSummary]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let Some(first) = summaries.first() else {
        return Ok(String::new());
    };
    let lead = [
        "scenario",
        "family",
        "n",
        "d",
        "seed",
        "reps_used",
        "failures",
        "flagged",
    ];
    let mut header: Vec<String> = lead.iter().map(|s| s.to_string()).collect();
    match &first.estimates {
        Estimates::SizePower { .. } => {
            header.extend(["alpha", "beta", "label"].map(String::from));
            header.extend(method_columns(""));
            header.extend(method_columns("se_"));
            header.extend(["mu_alpha", "mu_beta", "prob_tmax_ge"].map(String::from));
        }
        Estimates::Fwer { .. } => {
            header.push("metric".into());
            header.extend(method_columns(""));
            header.extend(method_columns("se_"));
        }
        Estimates::Coverage { .. } => {
            header.extend(
                [
                    "mediator",
                    "alpha",
                    "beta",
                    "cp_Sobel",
                    "cp_ASobel",
                    "se_cp_Sobel",
                    "se_cp_ASobel",
                    "lci_Sobel",
                    "lci_ASobel",
                    "degenerate",
                ]
                .map(String::from),
            );
        }
    }
    w.write_record(&header)?;
    for s in summaries {
        let c = &s.scenario;
        let lead = vec![
            c.name.clone().unwrap_or_default(),
            c.family.to_string(),
            c.n.to_string(),
            c.d().to_string(),
            c.base_seed.to_string(),
            s.reps_used.to_string(),
            s.failures.to_string(),
            s.flagged.to_string(),
        ];
        match &s.estimates {
            Estimates::SizePower { label, rates } => {
                let mut rec = lead.clone();
                rec.extend([fmt_full(c.alpha[0]), fmt_full(c.beta[0]), label.clone()]);
                rec.extend(rates.iter().map(|r| fmt_full(r.rate)));
                rec.extend(rates.iter().map(|r| fmt_full(r.standard_error)));
                let p = &s.plug_in[0];
                rec.extend([p.mu_alpha, p.mu_beta, p.prob_tmax_ge].map(fmt_full));
                w.write_record(&rec)?;
            }
            Estimates::Fwer { rates } => {
                let mut rec = lead.clone();
                rec.push("fwer".into());
                rec.extend(rates.iter().map(|r| fmt_full(r.fwer)));
                rec.extend(rates.iter().map(|r| fmt_full(r.fwer_se)));
                w.write_record(&rec)?;
                let mut rec = lead.clone();
                rec.push("power".into());
                rec.extend(rates.iter().map(|r| opt_full(r.power)));
                rec.extend(rates.iter().map(|r| opt_full(r.power_se)));
                w.write_record(&rec)?;
            }
            Estimates::Coverage { rows } => {
                for r in rows {
                    let mut rec = lead.clone();
                    rec.push((r.mediator_index + 1).to_string());
                    rec.extend(
                        [
                            r.alpha,
                            r.beta,
                            r.sobel_cp,
                            r.asobel_cp,
                            r.sobel_cp_se,
                            r.asobel_cp_se,
                            r.sobel_lci,
                            r.asobel_lci,
                        ]
                        .map(fmt_full),
                    );
                    rec.push(r.degenerate.to_string());
                    w.write_record(&rec)?;
                }
            }
        }
    }
    Ok(String::from_utf8(w.into_inner().expect("in-memory writer")).expect("csv is utf-8"))
}

fn opt4(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.4}")).unwrap_or_else(|| "-".into())
}

pub fn summaries_to_table(summaries: &[SimulationSummary]) -> String {
    let mut s = String::new();
    let names = Method::ALL.map(|m| m.name());
    for sum in summaries {
        let c = &sum.scenario;
        let _ = write!(
            s,
            "{}: {} n = {} d = {} reps {}/{} seed {}",
            c.name.as_deref().unwrap_or("scenario"),
            c.family,
            c.n,
            c.d(),
            sum.reps_used,
            sum.reps_requested,
            c.base_seed
        );
        if let Some(c0) = c.c0 {
            let _ = write!(s, " c0 = {c0:.4}");
        }
        let _ = writeln!(s, " ({:.1}s)", sum.elapsed_seconds);
        if sum.flagged {
            let _ = writeln!(
                s,
                "  warning: {} replications failed: {}",
                sum.failures,
                sum.first_failure.as_deref().unwrap_or("")
            );
        }
        match &sum.estimates {
            Estimates::SizePower { label, rates } => {
                let _ = writeln!(
                    s,
                    "  {:<6} {:>8} {:>8} {:>8} {:>8}",
                    "", names[0], names[1], names[2], names[3]
                );
                let _ = write!(s, "  {label:<6}");
                for r in rates {
                    let _ = write!(s, " {:>8.4}", r.rate);
                }
                let _ = write!(s, "\n  {:<6}", "se");
                for r in rates {
                    let _ = write!(s, " {:>8.4}", r.standard_error);
                }
                s.push('\n');
            }
            Estimates::Fwer { rates } => {
                let _ = writeln!(
                    s,
                    "  {:<6} {:>8} {:>8} {:>8} {:>8}",
                    "", names[0], names[1], names[2], names[3]
                );
                let _ = write!(s, "  {:<6}", "FWER");
                for r in rates {
                    let _ = write!(s, " {:>8.4}", r.fwer);
                }
                let _ = write!(s, "\n  {:<6}", "Power");
                for r in rates {
                    let _ = write!(s, " {:>8}", opt4(r.power));
                }
                s.push('\n');
            }
            Estimates::Coverage { rows } => {
                let _ = writeln!(
                    s,
                    "  {:<4} {:>6} {:>6} {:>9} {:>9} {:>10} {:>10}",
                    "k", "alpha", "beta", "CP Sobel", "CP ASob", "LCI Sobel", "LCI ASob"
                );
                for r in rows {
                    let _ = writeln!(
                        s,
                        "  {:<4} {:>6.2} {:>6.2} {:>9.4} {:>9.4} {:>10.5} {:>10.5}",
                        r.mediator_index + 1,
                        r.alpha,
                        r.beta,
                        r.sobel_cp,
                        r.asobel_cp,
                        r.sobel_lci,
                        r.asobel_lci
                    );
                }
            }
        }
    }
    s
}
