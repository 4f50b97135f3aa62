//! Command implementations for the `mdclt` binary.
//!
//! Every command writes plain data files into the output directory and a
//! short summary to stdout. File contents depend only on the arguments and
//! the seed, never on the clock or the worker count.

pub mod args;

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use mdclt::ergodic::{BetaSequence, HBetaParams};
use mdclt::families::{default_grid, family_scheme, Family, FamilyParams};
use mdclt::gordin::{summarize, GordinSummary};
use mdclt::inequality::{
    lemma1_bounds, lemma33_tail_profile, write_records_csv, BoundRecord, DecayExponent, TailProfile,
};
use mdclt::io::{read_chain, write_json, write_with};
use mdclt::montecarlo::{sample_statistic, write_samples};
use mdclt::report::{float, fmt_float, fmt_opt, trend_opt, Trend};
use mdclt::scheme::{
    evaluate_conditions, variance_lower_bound_check, ArrayScheme, BetaSource, ConditionRecord,
    ConditionReport, Theorem1Variant,
};
use mdclt::{Error, Result};

use args::{Command, ConditionArgs, OutputArgs, SimArgs, SourceArgs, VariantArg};

/// Exit status of a completed command.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Outcome {
    Success,
    /// Some checked inequality failed.
    BoundFailure,
}

pub fn run(command: Command) -> Result<Outcome> {
    match command {
        Command::Check {
            source,
            conditions,
            output,
        } => run_check(&source, &conditions, &output),
        Command::Gordin { source, output } => run_gordin(&source, &output),
        Command::Simulate {
            source,
            sim,
            dump_samples,
            output,
        } => run_simulate(&source, &sim, dump_samples, &output),
        Command::Experiment {
            source,
            conditions,
            sim,
            output,
        } => run_experiment(&source, &conditions, &sim, &output),
        Command::Verify {
            input,
            instances,
            seed,
            conditions,
            output,
        } => run_verify(input.as_deref(), instances, seed, &conditions, &output),
    }
}

fn family_params(source: &SourceArgs, family: Family) -> FamilyParams {
    FamilyParams {
        family,
        gamma: source.gamma,
        lam: source.lam,
        period: source.period,
        seed: 0,
    }
}

fn build_scheme(source: &SourceArgs) -> Result<ArrayScheme> {
    match (&source.input, source.family) {
        (Some(path), _) => Ok(ArrayScheme::single(
            path.file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| "input".into()),
            read_chain(path)?,
        )),
        (None, Some(family)) => family_scheme(
            &family_params(source, family),
            source.grid.clone().unwrap_or_else(default_grid),
        ),
        (None, None) => Err(Error::Input(
            "either --family or --input is required".into(),
        )),
    }
}

fn h_beta_params(c: &ConditionArgs, family: Option<&FamilyParams>) -> Result<HBetaParams> {
    let (m0, density) = match family {
        Some(p) if p.family == Family::B => {
            let d = p.h_beta_params();
            (d.m0(), d.c())
        }
        _ => (4, 0.25),
    };
    HBetaParams::new(c.m0.unwrap_or(m0), c.c.unwrap_or(density))
}

fn beta_source(spec: &str, scheme: &ArrayScheme) -> Result<BetaSource> {
    Ok(match spec {
        "auto" if scheme.companion_beta(scheme.grid()[0]).is_some() => BetaSource::Companion,
        "auto" => BetaSource::default(),
        "companion" => BetaSource::Companion,
        "all-ones" => BetaSource::AllOnes,
        bits => BetaSource::Fixed(
            bits.parse::<BetaSequence>()
                .map_err(|e| Error::Input(format!("--beta: {e}")))?,
        ),
    })
}

fn variant(v: VariantArg) -> Theorem1Variant {
    match v {
        VariantArg::Consistent => Theorem1Variant::Consistent,
        VariantArg::AsPrinted => Theorem1Variant::AsPrinted,
    }
}

fn conditions_report(source: &SourceArgs, c: &ConditionArgs) -> Result<ConditionReport> {
    let scheme = build_scheme(source)?;
    let family = source.family.map(|f| family_params(source, f));
    let p = h_beta_params(c, family.as_ref())?;
    evaluate_conditions(
        &scheme,
        &beta_source(&c.beta, &scheme)?,
        &p,
        variant(c.variant),
    )
}

fn prepare(output: &OutputArgs) -> Result<&Path> {
    fs::create_dir_all(&output.output)?;
    Ok(&output.output)
}

pub fn run_check(source: &SourceArgs, c: &ConditionArgs, output: &OutputArgs) -> Result<Outcome> {
    let report = conditions_report(source, c)?;
    let dir = prepare(output)?;
    if output.format.json() {
        write_json(&report, &dir.join("conditions.json"))?;
    }
    if output.format.csv() {
        write_with(&dir.join("conditions.csv"), |w| report.write_csv(w))?;
    }
    println!(
        "scheme {} ({} grid points)",
        report.scheme,
        report.records.len()
    );
    for r in &report.records {
        println!(
            "  n={:<6} alpha_n={:.4e} dobrushin={:.4e} corollary2={} h_beta_ok={}",
            r.n,
            r.alpha_n,
            r.dobrushin_value,
            r.corollary2_value
                .map_or("-".into(), |v| format!("{v:.4e}")),
            r.h_beta_ok
        );
    }
    for (name, t) in &report.trends {
        println!("  trend {name}: {t}");
    }
    Ok(Outcome::Success)
}

/// Decomposition summary and tail hypotheses for one horizon.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GordinEntry {
    pub summary: GordinSummary,
    /// Missing for degenerate chains.
    pub tail_profile: Option<TailProfile>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GordinReport {
    pub scheme: String,
    pub entries: Vec<GordinEntry>,
    pub trends: BTreeMap<String, Trend>,
}

pub fn gordin_report(source: &SourceArgs) -> Result<GordinReport> {
    let scheme = build_scheme(source)?;
    let mut entries = Vec::new();
    for &n in scheme.grid() {
        let chain = scheme.chain(n)?.centered();
        let summary = summarize(&chain)?;
        let tail_profile = match lemma33_tail_profile(&chain) {
            Ok(t) => Some(t),
            Err(Error::Degenerate(_)) => None,
            Err(e) => return Err(e),
        };
        entries.push(GordinEntry {
            summary,
            tail_profile,
        });
    }
    let col = |f: fn(&GordinEntry) -> Option<f64>| entries.iter().map(f).collect::<Vec<_>>();
    let trends = BTreeMap::from([
        (
            "a_value".to_string(),
            trend_opt(&col(|e| e.summary.a_value)),
        ),
        (
            "osc_tail_sup".to_string(),
            trend_opt(&col(|e| e.summary.osc_tail_sup)),
        ),
        (
            "norm_ratio".to_string(),
            trend_opt(&col(|e| e.summary.norm_ratio)),
        ),
        (
            "sup_y".to_string(),
            trend_opt(&col(|e| e.tail_profile.as_ref().map(|t| t.sup_y))),
        ),
    ]);
    Ok(GordinReport {
        scheme: scheme.name().to_string(),
        entries,
        trends,
    })
}

fn write_gordin_csv<W: std::io::Write>(report: &GordinReport, w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record([
        "n",
        "var_sn",
        "var_z1",
        "decomposition_gap",
        "norm_ratio",
        "xi_sup",
        "osc_tail_sup",
        "a_value",
        "b_value",
        "expected_sum_y",
        "sup_y",
    ])?;
    for e in &report.entries {
        let s = &e.summary;
        out.write_record([
            s.n.to_string(),
            fmt_float(s.var_sn),
            fmt_float(s.var_z1),
            fmt_float(s.decomposition_gap),
            fmt_opt(s.norm_ratio),
            fmt_opt(s.xi_sup),
            fmt_opt(s.osc_tail_sup),
            fmt_opt(s.a_value),
            fmt_opt(s.b_value),
            fmt_opt(e.tail_profile.as_ref().map(|t| t.expected_sum)),
            fmt_opt(e.tail_profile.as_ref().map(|t| t.sup_y)),
        ])?;
    }
    out.flush()?;
    Ok(())
}

pub fn run_gordin(source: &SourceArgs, output: &OutputArgs) -> Result<Outcome> {
    let report = gordin_report(source)?;
    let dir = prepare(output)?;
    if output.format.json() {
        write_json(&report, &dir.join("gordin.json"))?;
    }
    if output.format.csv() {
        write_with(&dir.join("gordin.csv"), |w| write_gordin_csv(&report, w))?;
    }
    println!("scheme {}", report.scheme);
    for e in &report.entries {
        let s = &e.summary;
        println!(
            "  n={:<6} var_sn={:.6e} gap={:.2e} a={} osc_tail={}",
            s.n,
            s.var_sn,
            s.decomposition_gap,
            s.a_value.map_or("-".into(), |v| format!("{v:.4e}")),
            s.osc_tail_sup.map_or("-".into(), |v| format!("{v:.4e}")),
        );
    }
    Ok(Outcome::Success)
}

/// One simulated horizon without the raw samples.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimulationRow {
    pub n: usize,
    pub replicates: usize,
    pub seed: u64,
    #[serde(with = "float::option")]
    pub ks_distance: Option<f64>,
    #[serde(with = "float::option")]
    pub mean: Option<f64>,
    #[serde(with = "float::option")]
    pub variance: Option<f64>,
    /// Set when the horizon was skipped.
    pub warning: Option<String>,
}

fn simulate_grid(
    scheme: &ArrayScheme,
    sim: &SimArgs,
    mut keep: impl FnMut(usize, &[f64]) -> Result<()>,
) -> Result<Vec<SimulationRow>> {
    if sim.replicates == 0 {
        return Err(Error::Input("--replicates must be at least 1".into()));
    }
    let mut rows = Vec::new();
    for &n in scheme.grid() {
        let chain = scheme.chain(n)?;
        let row = match sample_statistic(&chain, sim.replicates, sim.seed) {
            Ok(res) => {
                keep(n, &res.samples)?;
                SimulationRow {
                    n,
                    replicates: res.replicates,
                    seed: res.seed,
                    ks_distance: Some(res.ks_distance),
                    mean: Some(res.mean),
                    variance: Some(res.variance),
                    warning: None,
                }
            }
            Err(Error::Degenerate(msg)) => {
                eprintln!("warning: n = {n} skipped: {msg}");
                SimulationRow {
                    n,
                    replicates: sim.replicates,
                    seed: sim.seed,
                    ks_distance: None,
                    mean: None,
                    variance: None,
                    warning: Some(format!("skipped: {msg}")),
                }
            }
            Err(e) => return Err(e),
        };
        rows.push(row);
    }
    Ok(rows)
}

fn simulation_fields(r: &SimulationRow) -> [String; 4] {
    [
        fmt_opt(r.ks_distance),
        fmt_opt(r.mean),
        fmt_opt(r.variance),
        r.warning.clone().unwrap_or_default(),
    ]
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimulationReport {
    pub scheme: String,
    pub rows: Vec<SimulationRow>,
    pub ks_trend: Trend,
}

pub fn run_simulate(
    source: &SourceArgs,
    sim: &SimArgs,
    dump_samples: bool,
    output: &OutputArgs,
) -> Result<Outcome> {
    let scheme = build_scheme(source)?;
    let dir = prepare(output)?;
    let rows = simulate_grid(&scheme, sim, |n, samples| {
        if dump_samples {
            write_with(&dir.join(format!("samples_n{n}.bin")), |w| {
                write_samples(samples, w)
            })?;
        }
        Ok(())
    })?;
    let report = SimulationReport {
        scheme: scheme.name().to_string(),
        ks_trend: ks_trend(&rows),
        rows,
    };
    if output.format.json() {
        write_json(&report, &dir.join("simulation.json"))?;
    }
    if output.format.csv() {
        write_with(&dir.join("simulation.csv"), |w| {
            let mut out = csv::Writer::from_writer(w);
            out.write_record([
                "n",
                "replicates",
                "seed",
                "ks_distance",
                "mean",
                "variance",
                "warning",
            ])?;
            for r in &report.rows {
                let mut rec = vec![
                    r.n.to_string(),
                    r.replicates.to_string(),
                    r.seed.to_string(),
                ];
                rec.extend(simulation_fields(r));
                out.write_record(rec)?;
            }
            out.flush()?;
            Ok(())
        })?;
    }
    print_ks(&report.scheme, &report.rows, report.ks_trend);
    Ok(Outcome::Success)
}

fn ks_trend(rows: &[SimulationRow]) -> Trend {
    trend_opt(&rows.iter().map(|r| r.ks_distance).collect::<Vec<_>>())
}

fn print_ks(scheme: &str, rows: &[SimulationRow], t: Trend) {
    println!("scheme {scheme}");
    for r in rows {
        match (r.ks_distance, &r.warning) {
            (Some(ks), _) => println!("  n={:<6} ks_distance={ks:.5}", r.n),
            (None, w) => println!("  n={:<6} {}", r.n, w.as_deref().unwrap_or("")),
        }
    }
    println!("  trend ks_distance: {t}");
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub conditions: ConditionReport,
    pub simulations: Vec<SimulationRow>,
    pub replicates: usize,
    pub seed: u64,
    pub ks_trend: Trend,
}

impl ExperimentReport {
    pub fn write_csv<W: std::io::Write>(&self, w: W) -> Result<()> {
        // condition columns followed by the simulation columns
        let mut cond = Vec::new();
        self.conditions.write_csv(&mut cond)?;
        let mut reader = csv::Reader::from_reader(cond.as_slice());
        let mut out = csv::Writer::from_writer(w);
        let mut header: Vec<String> = reader.headers()?.iter().map(String::from).collect();
        header
            .extend(["ks_distance", "sample_mean", "sample_variance", "warning"].map(String::from));
        out.write_record(&header)?;
        for (rec, sim) in reader.records().zip(&self.simulations) {
            let mut row: Vec<String> = rec?.iter().map(String::from).collect();
            row.extend(simulation_fields(sim));
            out.write_record(&row)?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn record(&self, n: usize) -> Option<(&ConditionRecord, &SimulationRow)> {
        let i = self.conditions.records.iter().position(|r| r.n == n)?;
        Some((&self.conditions.records[i], &self.simulations[i]))
    }
}

pub fn run_experiment(
    source: &SourceArgs,
    c: &ConditionArgs,
    sim: &SimArgs,
    output: &OutputArgs,
) -> Result<Outcome> {
    let conditions = conditions_report(source, c)?;
    let scheme = build_scheme(source)?;
    let simulations = simulate_grid(&scheme, sim, |_, _| Ok(()))?;
    let report = ExperimentReport {
        ks_trend: ks_trend(&simulations),
        conditions,
        simulations,
        replicates: sim.replicates,
        seed: sim.seed,
    };
    let dir = prepare(output)?;
    if output.format.json() {
        write_json(&report, &dir.join("experiment.json"))?;
    }
    if output.format.csv() {
        write_with(&dir.join("experiment.csv"), |w| report.write_csv(w))?;
    }
    print_ks(
        &report.conditions.scheme,
        &report.simulations,
        report.ks_trend,
    );
    for name in ["dobrushin_value", "corollary2_value", "theorem1_value"] {
        if let Some(t) = report.conditions.trends.get(name) {
            println!("  trend {name}: {t}");
        }
    }
    Ok(Outcome::Success)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LemmaSummary {
    pub count: usize,
    pub failed: usize,
    #[serde(with = "float")]
    pub min_margin: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub instances: usize,
    pub seed: u64,
    pub total: usize,
    pub failed: usize,
    pub lemmas: BTreeMap<String, LemmaSummary>,
}

fn summarize_records(records: &[BoundRecord], instances: usize, seed: u64) -> VerifyReport {
    let mut lemmas: BTreeMap<String, LemmaSummary> = BTreeMap::new();
    for r in records {
        let entry = lemmas.entry(r.lemma.clone()).or_insert(LemmaSummary {
            count: 0,
            failed: 0,
            min_margin: f64::INFINITY,
        });
        entry.count += 1;
        entry.failed += usize::from(!r.ok);
        entry.min_margin = entry.min_margin.min(r.margin);
    }
    VerifyReport {
        instances,
        seed,
        total: records.len(),
        failed: records.iter().filter(|r| !r.ok).count(),
        lemmas,
    }
}

/// Bounds for a user-supplied chain, tagged `input:` in the lemma column.
fn input_records(path: &Path, c: &ConditionArgs, seed: u64) -> Result<Vec<BoundRecord>> {
    let chain = read_chain(path)?.centered();
    let scheme = ArrayScheme::single("input", chain.clone());
    let n = chain.n();
    let beta = match beta_source(&c.beta, &scheme)? {
        BetaSource::Fixed(b) => b,
        _ => BetaSequence::all_ones(n),
    };
    if beta.len() != n {
        return Err(Error::Input(format!(
            "--beta: length {} but n = {n}",
            beta.len()
        )));
    }
    let mut records = Vec::new();
    if n >= 2 {
        let check = variance_lower_bound_check(&chain)?;
        records.push(BoundRecord::lower(
            "input:variance",
            vec![],
            check.lhs,
            check.rhs,
        ));
        if beta.bits()[..n - 1].iter().any(|&b| b) {
            records.extend(
                lemma1_bounds(&chain, &beta, DecayExponent::KernelsInProduct, seed)?
                    .into_iter()
                    .map(|mut r| {
                        r.lemma = format!("input:{}", r.lemma);
                        r
                    }),
            );
        }
    }
    Ok(records)
}

pub fn run_verify(
    input: Option<&Path>,
    instances: usize,
    seed: u64,
    c: &ConditionArgs,
    output: &OutputArgs,
) -> Result<Outcome> {
    let mut records = match input {
        Some(path) => input_records(path, c, seed)?,
        None => Vec::new(),
    };
    records.extend(mdclt::suite::full_suite(instances, seed)?);
    let report = summarize_records(&records, instances, seed);
    let dir = prepare(output)?;
    if output.format.json() {
        write_json(&report, &dir.join("verify.json"))?;
    }
    if output.format.csv() {
        write_with(&dir.join("bounds.csv"), |w| write_records_csv(&records, w))?;
    }
    for (lemma, s) in &report.lemmas {
        println!(
            "  {lemma:<14} records={:<6} failed={:<4} min_margin={:.3e}",
            s.count, s.failed, s.min_margin
        );
    }
    println!("{} records, {} failed", report.total, report.failed);
    Ok(if report.failed == 0 {
        Outcome::Success
    } else {
        Outcome::BoundFailure
    })
}
