//! Reports produced by the `bell` subcommands.
//!
//! Each run yields one [`ReportDocument`], rendered either as plain text or
//! as a single JSON document. Rendering never looks at the clock or any
//! other ambient state, so identical inputs give identical bytes.

use std::collections::BTreeMap;
use std::fmt::{self, Write as _};

use serde::Serialize;

use crate::analysis::{
    bell_sum_check, degree_grid, refine_minimum, scan_angles, venn_bound_chain, ScanResult,
    VennChain,
};
use crate::lhv::{
    check_bell_locality, classify_model, derive_determinism, lhv_bell_record, triplet_weights_of,
    DeterminismReport, HypothesisFlags, JointTable,
};
use crate::model_file::ModelDocument;
use crate::montecarlo::{run_experiment, EstimateReport, RunConfig, SettingsPolicy, Source};
use crate::quantum::{basis_from_angle, bell_record, make_phi_plus, CorrelationRecord};
use crate::{Result, Setting};

/// Grep-able statement of the bound, embedded in every report.
pub const BOUND_ANCHOR: &str = "Bell bound: P_same(A,B) + P_same(A,C) + P_same(B,C) >= 1";

/// Anchor printed when the exact quantum sum equals the trine value.
pub const TRINE_ANCHOR: &str = "quantum trine value: 3/4 < 1";

pub const DEFAULT_ANGLES_DEG: [f64; 3] = [0.0, 120.0, -120.0];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Verdict {
    #[serde(rename = "SATISFIES Bell inequality")]
    Satisfies,
    #[serde(rename = "VIOLATES Bell inequality")]
    Violates,
    #[serde(rename = "INCONCLUSIVE (statistical)")]
    Inconclusive,
}

impl Verdict {
    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::Satisfies => "SATISFIES Bell inequality",
            Verdict::Violates => "VIOLATES Bell inequality",
            Verdict::Inconclusive => "INCONCLUSIVE (statistical)",
        }
    }

    fn exact(record: &CorrelationRecord) -> Result<Verdict> {
        let (_, ok) = bell_sum_check(record)?;
        Ok(if ok {
            Verdict::Satisfies
        } else {
            Verdict::Violates
        })
    }

    /// From a 99% interval on the Bell sum.
    pub fn statistical(interval: Option<(f64, f64)>) -> Verdict {
        match interval {
            Some((_, hi)) if hi < 1.0 => Verdict::Violates,
            Some((lo, _)) if lo >= 1.0 => Verdict::Satisfies,
            _ => Verdict::Inconclusive,
        }
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    Quantum,
    Lhv,
    Scan,
    Sample,
    AppendixA,
}

impl Mode {
    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Quantum => "quantum",
            Mode::Lhv => "lhv",
            Mode::Scan => "scan",
            Mode::Sample => "sample",
            Mode::AppendixA => "appendix-a",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScanSummary {
    pub family: &'static str,
    pub grid_step_deg: f64,
    pub points: usize,
    pub min_sum: f64,
    pub argmin_deg: (f64, f64, f64),
    pub refined: Option<RefinedMinimum>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RefinedMinimum {
    pub step_deg: f64,
    pub min_sum: f64,
    pub argmin_deg: (f64, f64, f64),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AppendixA {
    pub bell_local: bool,
    pub perfect_correlation: BTreeMap<Setting, bool>,
    pub determinism: DeterminismReport,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReportDocument {
    pub mode: Mode,
    pub inputs: BTreeMap<String, String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub correlations: Option<CorrelationRecord>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub estimate: Option<EstimateReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub hypotheses: Option<HypothesisFlags>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub venn: Option<VennChain>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub scan: Option<ScanSummary>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub appendix_a: Option<AppendixA>,
    pub bound: &'static str,
    pub verdict: Verdict,
    pub notes: Vec<String>,
}

impl ReportDocument {
    fn new(mode: Mode, verdict: Verdict) -> Self {
        ReportDocument {
            mode,
            inputs: BTreeMap::new(),
            correlations: None,
            estimate: None,
            hypotheses: None,
            venn: None,
            scan: None,
            appendix_a: None,
            bound: BOUND_ANCHOR,
            verdict,
            notes: Vec::new(),
        }
    }

    fn input(mut self, key: &str, value: impl ToString) -> Self {
        self.inputs.insert(key.to_string(), value.to_string());
        self
    }

    pub fn render_structured(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("reports serialize");
        s.push('\n');
        s
    }

    pub fn render_text(&self) -> String {
        let mut out = String::new();
        let w = &mut out;
        let _ = writeln!(w, "mode: {}", self.mode.as_str());
        if !self.inputs.is_empty() {
            let _ = writeln!(w, "inputs:");
            for (k, v) in &self.inputs {
                let _ = writeln!(w, "  {k} = {v}");
            }
        }
        if let Some(r) = &self.correlations {
            let _ = writeln!(w, "correlations:");
            let _ = writeln!(w, "  P_same(A,B) = {}", r.p_same_ab);
            let _ = writeln!(w, "  P_same(A,C) = {}", r.p_same_ac);
            let _ = writeln!(w, "  P_same(B,C) = {}", r.p_same_bc);
            let _ = writeln!(w, "  sum = {}", r.bell_sum);
        }
        if let Some(e) = &self.estimate {
            text_estimate(w, e);
        }
        if let Some(v) = &self.venn {
            text_venn(w, v);
        }
        if let Some(s) = &self.scan {
            text_scan(w, s);
        }
        if let Some(h) = &self.hypotheses {
            text_hypotheses(w, h);
        }
        if let Some(a) = &self.appendix_a {
            text_appendix_a(w, a);
        }
        for n in &self.notes {
            let _ = writeln!(w, "note: {n}");
        }
        let _ = writeln!(w, "{}", self.bound);
        let _ = writeln!(w, "verdict: {}", self.verdict);
        out
    }
}

fn yes_no(b: bool) -> &'static str {
    if b {
        "yes"
    } else {
        "no"
    }
}

fn text_estimate(w: &mut String, e: &EstimateReport) {
    let _ = writeln!(w, "estimates (99% intervals):");
    for p in &e.pairs {
        let _ = writeln!(
            w,
            "  P_same({},{}) = {} +/- {} [{}, {}] n={} ({:?})",
            p.settings.0,
            p.settings.1,
            p.p_same,
            p.standard_error,
            p.interval.0,
            p.interval.1,
            p.trials,
            p.method
        );
    }
    match &e.bell_sum {
        Some(b) => {
            let _ = writeln!(
                w,
                "  sum = {} +/- {} [{}, {}]",
                b.value, b.standard_error, b.interval.0, b.interval.1
            );
        }
        None => {
            let _ = writeln!(w, "  sum = n/a (pairs AB, AC, BC not all sampled)");
        }
    }
}

fn text_venn(w: &mut String, v: &VennChain) {
    let a = &v.areas;
    let _ = writeln!(w, "venn regions:");
    let _ = writeln!(w, "  dashed (A=B) = {}", a.dashed);
    let _ = writeln!(w, "  gray (A=C) = {}", a.gray);
    let _ = writeln!(w, "  dotted (A!=B, A!=C) = {}", a.dotted);
    let _ = writeln!(w, "  overlap (A=B=C) = {}", a.overlap);
    let _ = writeln!(
        w,
        "  P_same(B,C) = {} >= dotted = {}: {}",
        v.record.p_same_bc,
        a.dotted,
        yes_no(v.bc_covers_dotted)
    );
    let _ = writeln!(
        w,
        "  P_same sum = {} >= dashed+gray+dotted = {}: {}",
        v.record.bell_sum,
        v.region_sum,
        yes_no(v.sum_covers_regions)
    );
    let _ = writeln!(
        w,
        "  dashed+gray+dotted = {} >= 1: {}",
        v.region_sum,
        yes_no(v.regions_cover_circle)
    );
}

fn text_scan(w: &mut String, s: &ScanSummary) {
    let _ = writeln!(w, "scan ({}):", s.family);
    let _ = writeln!(w, "  grid step = {} deg, points = {}", s.grid_step_deg, s.points);
    let _ = writeln!(w, "  minimum sum = {}", s.min_sum);
    let _ = writeln!(
        w,
        "  argmin (theta_A, theta_B, theta_C) deg = ({}, {}, {})",
        s.argmin_deg.0, s.argmin_deg.1, s.argmin_deg.2
    );
    if let Some(r) = &s.refined {
        let _ = writeln!(w, "  refined step = {} deg", r.step_deg);
        let _ = writeln!(w, "  refined minimum sum = {}", r.min_sum);
        let _ = writeln!(
            w,
            "  refined argmin deg = ({}, {}, {})",
            r.argmin_deg.0, r.argmin_deg.1, r.argmin_deg.2
        );
    }
}

fn text_hypotheses(w: &mut String, h: &HypothesisFlags) {
    let _ = writeln!(w, "hypotheses:");
    let _ = writeln!(w, "  (A)  counterfactual definiteness: {}", yes_no(h.counterfactual_definite));
    let _ = writeln!(w, "  (B)  Einstein locality: {}", h.einstein_local);
    let _ = writeln!(w, "  (C)  no super-determinism: assumed");
    let _ = writeln!(w, "  (D)  measurement independence: assumed");
    let _ = writeln!(w, "  (A') hidden variable model: {}", yes_no(h.hidden_variable));
    let _ = writeln!(w, "  (B') Bell locality: {}", yes_no(h.bell_local));
    let _ = writeln!(w, "  perfect correlations: {}", yes_no(h.perfect_correlations));
}

fn text_appendix_a(w: &mut String, a: &AppendixA) {
    let d = &a.determinism;
    let _ = writeln!(w, "implication chain:");
    let _ = writeln!(
        w,
        "  Bell locality (factorized joint table): {}",
        if a.bell_local { "holds" } else { "FAILS" }
    );
    for (s, ok) in &a.perfect_correlation {
        let _ = writeln!(w, "  perfect correlation on {s}: {}", yes_no(*ok));
    }
    let status = if d.confirmed {
        "CONFIRMED"
    } else if !d.precondition_holds {
        "PRECONDITION FAILED"
    } else {
        "NOT CONFIRMED"
    };
    let _ = writeln!(w, "perfect correlations ⇒ determinism: {status}");
    if d.degenerate {
        let _ = writeln!(w, "  degenerate: no supported lambda");
    }
    if !d.failing_settings.is_empty() {
        let names: Vec<String> = d.failing_settings.iter().map(|s| s.to_string()).collect();
        let _ = writeln!(w, "  failing settings: {}", names.join(", "));
        for x in &d.discordances {
            let _ = writeln!(
                w,
                "  discordance: setting {} lambda {} mass {}",
                x.setting, x.lambda, x.mass
            );
        }
    }
    let _ = writeln!(w, "witnesses (lambda, setting: P1(0), P2(0) -> value):");
    for x in &d.witnesses {
        let value = match x.value {
            Some(v) => v.to_string(),
            None => format!(
                "undetermined (object 1 {}, object 2 {})",
                if x.first_deterministic { "deterministic" } else { "stochastic" },
                if x.second_deterministic { "deterministic" } else { "stochastic" }
            ),
        };
        let _ = writeln!(
            w,
            "  {} (w={}), {}: {}, {} -> {}",
            x.lambda, x.weight, x.setting, x.first[0], x.second[0], value
        );
    }
    if d.confirmed {
        let _ = writeln!(
            w,
            "hidden variables + Bell locality + perfect correlations ⇒ counterfactual definiteness ⇒ Bell inequality holds"
        );
    }
}

fn fmt_policy(p: SettingsPolicy) -> String {
    match p {
        SettingsPolicy::Fixed(a, b) => format!("fixed {a}{b}"),
        SettingsPolicy::Uniform => "uniform".into(),
    }
}

/// Exact |Φ⁺⟩ record at the given angles (degrees).
pub fn quantum_report(angles_deg: [f64; 3]) -> Result<ReportDocument> {
    let [a, b, c] = [
        basis_from_angle(angles_deg[0].to_radians(), "A")?,
        basis_from_angle(angles_deg[1].to_radians(), "B")?,
        basis_from_angle(angles_deg[2].to_radians(), "C")?,
    ];
    let record = bell_record(&make_phi_plus(), &a, &b, &c)?;
    let mut doc = ReportDocument::new(Mode::Quantum, Verdict::exact(&record)?)
        .input("state", "phi+ = (|00> + |11>)/sqrt(2)")
        .input("theta_a_deg", angles_deg[0])
        .input("theta_b_deg", angles_deg[1])
        .input("theta_c_deg", angles_deg[2]);
    if (record.bell_sum - 0.75).abs() <= crate::PROB_TOL {
        doc.notes.push(TRINE_ANCHOR.to_string());
    }
    doc.correlations = Some(record);
    Ok(doc)
}

/// Exact correlations, hypotheses and (for triplet models) Venn regions.
pub fn lhv_report(document: &ModelDocument, source_name: &str) -> Result<ReportDocument> {
    let model = document.model()?;
    let record = lhv_bell_record(&model);
    let mut doc = ReportDocument::new(Mode::Lhv, Verdict::exact(&record)?)
        .input("model", source_name)
        .input("lambdas", model.lambdas().len());
    doc.correlations = Some(record);
    doc.hypotheses = Some(classify_model(&model));
    match triplet_weights_of(&model) {
        Some(w) => doc.venn = Some(venn_bound_chain(&w)?),
        None => doc
            .notes
            .push("venn regions need a deterministic model with identical objects".into()),
    }
    Ok(doc)
}

/// Scans θ_B, θ_C on a degree grid with θ_A = 0.
pub fn scan_report(step_deg: f64, refine: bool) -> Result<(ScanResult, ReportDocument)> {
    let result = scan_angles(&degree_grid(step_deg)?)?;
    let refined = if refine {
        let r = refine_minimum(&result, 1.0, 0.01)?;
        Some(RefinedMinimum {
            step_deg: 0.01,
            min_sum: r.min_sum,
            argmin_deg: deg3(r.argmin),
        })
    } else {
        None
    };
    let min_sum = refined.as_ref().map_or(result.min_sum, |r| r.min_sum);
    let verdict = if min_sum >= 1.0 - crate::PROB_TOL {
        Verdict::Satisfies
    } else {
        Verdict::Violates
    };
    let mut doc = ReportDocument::new(Mode::Scan, verdict)
        .input("state", "phi+ = (|00> + |11>)/sqrt(2)")
        .input("grid_step_deg", step_deg)
        .input("refine", refine)
        .input("theta_a_deg", 0);
    doc.scan = Some(ScanSummary {
        family: "equatorial measurement angles only",
        grid_step_deg: step_deg,
        points: result.grid.len(),
        min_sum: result.min_sum,
        argmin_deg: deg3(result.argmin),
        refined,
    });
    Ok((result, doc))
}

fn deg3(t: (f64, f64, f64)) -> (f64, f64, f64) {
    (t.0.to_degrees(), t.1.to_degrees(), t.2.to_degrees())
}

/// Monte Carlo estimate; verdict from the 99% interval on the sum.
pub fn sample_report(config: &RunConfig, source: &Source, source_desc: &str) -> Result<ReportDocument> {
    let estimate = run_experiment(config, source)?;
    let verdict = Verdict::statistical(estimate.bell_sum.map(|b| b.interval));
    let mut doc = ReportDocument::new(Mode::Sample, verdict)
        .input("n", config.n_samples)
        .input("seed", config.seed)
        .input("source", source_desc)
        .input("settings_policy", fmt_policy(config.settings_policy))
        .input("rng", "ChaCha8 (rand_chacha), stream 0");
    doc.estimate = Some(estimate);
    Ok(doc)
}

/// Factorization, perfect correlations and the determinism they force.
pub fn appendix_a_report(document: &ModelDocument, source_name: &str) -> Result<ReportDocument> {
    let model = document.model()?;
    let record = lhv_bell_record(&model);
    let determinism = derive_determinism(&model);
    let perfect_correlation = Setting::ALL
        .iter()
        .map(|&s| (s, !determinism.failing_settings.contains(&s)))
        .collect();
    let mut doc = ReportDocument::new(Mode::AppendixA, Verdict::exact(&record)?)
        .input("model", source_name)
        .input("lambdas", model.lambdas().len());
    doc.correlations = Some(record);
    doc.hypotheses = Some(classify_model(&model));
    doc.appendix_a = Some(AppendixA {
        bell_local: check_bell_locality(&JointTable::from_model(&model), &model),
        perfect_correlation,
        determinism,
    });
    Ok(doc)
}
