//! Run configuration and the end-to-end commands behind the CLI.
//!
//! Every command reads all inputs and computes all outputs before it touches
//! the output directory, so a failed run leaves nothing behind. Outputs do not
//! embed timestamps or output paths: the same inputs and config give the same
//! bytes.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::json;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::ingest::{
    merge_monthly_update, parse_source, write_records, DatasetRole, IngestReport, RawRecord, Role, RowError,
    SourceLayout,
};
use crate::linker::{
    build_indexes, link_deaths, priority_list, validate_all, Category, CategoryThresholds, LinkDataset,
    ValidationOptions,
};
use crate::normalizer::{clean_record, CleanRecord, FieldStatus, ValidityConfig};
use crate::profiler::{invalid_ssn_breakdown, profile_fields, profile_tokens, DistinctMode, PROFILE_FIELDS};
use crate::report;
use crate::synth::{generate_population, read_truth, score_against_truth, write_truth, SynthConfig};
use crate::tokenizer::{generate_all, write_token_dump, RuleTable, TokenId};

/// Summaries keep at most this many row errors; the full list goes to
/// `row_errors.csv`.
const SUMMARY_ROW_ERRORS: usize = 50;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SourceConfig {
    pub path: PathBuf,
    /// Inline layout. Defaults to the standard delimited layout.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub layout: Option<SourceLayout>,
    /// Layout in a separate TOML file.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub layout_file: Option<PathBuf>,
}

/// Fixed presentation order, used instead of the validation ranking.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PriorityEntry {
    pub token_id: TokenId,
    pub category: u8,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub patient: Option<SourceConfig>,
    #[serde(default)]
    pub external: Option<SourceConfig>,
    #[serde(default)]
    pub validity: ValidityConfig,
    /// Rule table override file.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rules: Option<PathBuf>,
    #[serde(default)]
    pub thresholds: CategoryThresholds,
    #[serde(default)]
    pub validation: ValidationOptions,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub priority: Option<Vec<PriorityEntry>>,
    /// Truth map for synthetic runs; adds a score to the link summary.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub truth: Option<PathBuf>,
    #[serde(default = "default_output_dir", skip_serializing)]
    pub output_dir: PathBuf,
    /// Year bound 2022 and no month/day checks.
    #[serde(default)]
    pub strict_paper: bool,
    /// Exit code 2 when more rows than this were rejected.
    #[serde(default)]
    pub row_error_threshold: u64,
    #[serde(default)]
    pub distinct_mode: DistinctMode,
    #[serde(default = "default_pct_digits")]
    pub pct_significant_digits: usize,
    /// Also write `<role>.tokens.csv` from the profile command.
    #[serde(default)]
    pub dump_tokens: bool,
    /// Base for relative paths; the config file's directory.
    #[serde(skip)]
    pub base_dir: PathBuf,
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("out")
}
fn default_pct_digits() -> usize {
    4
}

impl Default for RunConfig {
    fn default() -> Self {
        toml::from_str("").expect("empty config parses")
    }
}

impl RunConfig {
    pub fn from_toml(text: &str, base_dir: impl Into<PathBuf>) -> Result<Self> {
        let mut cfg: RunConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.base_dir = base_dir.into();
        cfg.apply_strict_paper();
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Self::from_toml(&text, base)
    }

    pub fn apply_strict_paper(&mut self) {
        if self.strict_paper {
            let strict = ValidityConfig::strict_paper();
            self.validity.max_year = strict.max_year;
            self.validity.check_month_day = strict.check_month_day;
        }
    }

    pub fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base_dir.join(p)
        }
    }

    fn output_dir(&self) -> PathBuf {
        self.resolve(&self.output_dir)
    }

    fn rule_table(&self) -> Result<RuleTable> {
        match &self.rules {
            None => Ok(RuleTable::builtin()),
            Some(p) => {
                let path = self.resolve(p);
                let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
                Ok(RuleTable::from_toml(&text)?)
            }
        }
    }

    fn check(&self) -> Result<()> {
        self.validity.validate().map_err(Error::Config)?;
        self.thresholds.validate()?;
        Ok(())
    }

    fn layout(&self, src: &SourceConfig) -> Result<SourceLayout> {
        match (&src.layout, &src.layout_file) {
            (Some(_), Some(_)) => Err(Error::Config("give either layout or layout_file, not both".into())),
            (Some(l), None) => Ok(l.clone()),
            (None, Some(p)) => {
                let path = self.resolve(p);
                let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
                Ok(SourceLayout::from_toml(&text)?)
            }
            (None, None) => Ok(SourceLayout::standard_delimited()),
        }
    }
}

/// What a finished command reports back to the caller.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RunOutcome {
    pub written: Vec<PathBuf>,
    pub row_errors: u64,
    pub row_error_threshold: u64,
}

impl RunOutcome {
    pub fn exit_code(&self) -> i32 {
        if self.row_errors > self.row_error_threshold {
            2
        } else {
            0
        }
    }
}

#[derive(Debug, Clone, Serialize)]
struct Fingerprint {
    role: String,
    path: String,
    bytes: u64,
    sha256: String,
}

fn fingerprint(role: &str, path: &Path, bytes: &[u8]) -> Fingerprint {
    Fingerprint {
        role: role.to_string(),
        path: path.display().to_string(),
        bytes: bytes.len() as u64,
        sha256: hex::encode(Sha256::digest(bytes)),
    }
}

fn read_input(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).map_err(|e| Error::io(path, e))
}

/// A source after ingest and cleaning.
pub struct LoadedDataset {
    pub label: &'static str,
    pub raw: Vec<RawRecord>,
    pub clean: Vec<CleanRecord>,
    pub errors: Vec<RowError>,
    pub report: IngestReport,
    fingerprint: Fingerprint,
}

fn load(cfg: &RunConfig, src: &SourceConfig, role: DatasetRole) -> Result<LoadedDataset> {
    let label = match role {
        DatasetRole::Patient => "patient",
        DatasetRole::External => "external",
    };
    let layout = cfg.layout(src)?;
    layout.validate(role)?;
    let path = cfg.resolve(&src.path);
    let bytes = read_input(&path)?;
    let parsed = parse_source(&layout, &bytes[..])?;
    let clean: Vec<CleanRecord> =
        parsed.records.par_iter().map(|r| clean_record(r, &cfg.validity, layout.date_order)).collect();
    Ok(LoadedDataset {
        label,
        report: parsed.report(),
        raw: parsed.records,
        errors: parsed.errors,
        clean,
        fingerprint: fingerprint(label, &src.path, &bytes),
    })
}

fn load_all(cfg: &RunConfig, need_both: bool) -> Result<Vec<LoadedDataset>> {
    let mut out = Vec::new();
    match (&cfg.patient, need_both) {
        (Some(p), _) => out.push(load(cfg, p, DatasetRole::Patient)?),
        (None, true) => return Err(Error::Config("missing [patient] source".into())),
        (None, false) => {}
    }
    match (&cfg.external, need_both) {
        (Some(e), _) => out.push(load(cfg, e, DatasetRole::External)?),
        (None, true) => return Err(Error::Config("missing [external] source".into())),
        (None, false) => {}
    }
    if out.is_empty() {
        return Err(Error::Config("no [patient] or [external] source configured".into()));
    }
    Ok(out)
}

/// Files produced by a command, written together at the end.
#[derive(Default)]
struct Outputs(Vec<(String, Vec<u8>)>);

impl Outputs {
    fn add(&mut self, name: impl Into<String>, bytes: impl Into<Vec<u8>>) {
        self.0.push((name.into(), bytes.into()));
    }

    fn json(&mut self, name: &str, value: &serde_json::Value) -> Result<()> {
        let mut bytes = serde_json::to_vec_pretty(value)?;
        bytes.push(b'\n');
        self.add(name, bytes);
        Ok(())
    }

    fn write(self, dir: &Path) -> Result<Vec<PathBuf>> {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let mut written = Vec::new();
        for (name, bytes) in self.0 {
            let path = dir.join(name);
            fs::write(&path, bytes).map_err(|e| Error::io(&path, e))?;
            written.push(path);
        }
        Ok(written)
    }
}

fn row_errors_csv(datasets: &[LoadedDataset]) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["dataset", "line", "message"])?;
    for d in datasets {
        for e in &d.errors {
            w.write_record([d.label, &e.line.to_string(), &e.message])?;
        }
    }
    Ok(w.into_inner().map_err(|e| e.into_error())?)
}

fn summary(command: &str, cfg: &RunConfig, datasets: &[LoadedDataset], extra: serde_json::Value) -> serde_json::Value {
    let ingest: BTreeMap<&str, serde_json::Value> = datasets
        .iter()
        .map(|d| {
            let sample: Vec<String> = d.errors.iter().take(SUMMARY_ROW_ERRORS).map(|e| e.to_string()).collect();
            (d.label, json!({ "report": d.report, "row_errors": sample }))
        })
        .collect();
    json!({
        "tool": env!("CARGO_PKG_NAME"),
        "version": env!("CARGO_PKG_VERSION"),
        "command": command,
        "config": cfg,
        "inputs": datasets.iter().map(|d| &d.fingerprint).collect::<Vec<_>>(),
        "ingest": ingest,
        "results": extra,
    })
}

fn outcome(cfg: &RunConfig, datasets: &[LoadedDataset], written: Vec<PathBuf>) -> RunOutcome {
    RunOutcome {
        written,
        row_errors: datasets.iter().map(|d| d.report.rows_rejected).sum(),
        row_error_threshold: cfg.row_error_threshold,
    }
}

fn clean_csv(clean: &[CleanRecord]) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let fields = [Role::FirstName, Role::MiddleName, Role::LastName, Role::BirthDate, Role::DeathDate, Role::Ssn];
    let mut header = vec!["record_id".to_string()];
    header.extend(fields.iter().map(|f| f.to_string()));
    header.extend(fields.iter().map(|f| format!("{f}_status")));
    w.write_record(&header)?;
    for c in clean {
        let mut row = vec![c.record_id.clone()];
        let cells: Vec<_> = fields.iter().map(|&f| c.field(f).expect("identity field")).collect();
        row.extend(cells.iter().map(|x| x.value().unwrap_or("").to_string()));
        row.extend(cells.iter().map(|x| {
            match x.status() {
                FieldStatus::Valid => "valid",
                FieldStatus::Missing => "missing",
                FieldStatus::Invalid => "invalid",
            }
            .to_string()
        }));
        w.write_record(&row)?;
    }
    Ok(w.into_inner().map_err(|e| e.into_error())?)
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct StatusTally {
    pub valid: u64,
    pub missing: u64,
    pub invalid: u64,
}

pub fn status_tallies(clean: &[CleanRecord]) -> BTreeMap<Role, StatusTally> {
    let mut out: BTreeMap<Role, StatusTally> = BTreeMap::new();
    for c in clean {
        for f in PROFILE_FIELDS {
            let t = out.entry(f).or_default();
            match c.field(f).expect("identity field").status() {
                FieldStatus::Valid => t.valid += 1,
                FieldStatus::Missing => t.missing += 1,
                FieldStatus::Invalid => t.invalid += 1,
            }
        }
    }
    out
}

/// Ingest and clean the configured sources.
pub fn cmd_normalize(cfg: &RunConfig) -> Result<RunOutcome> {
    cfg.check()?;
    let datasets = load_all(cfg, false)?;
    let mut out = Outputs::default();
    let mut text = String::new();
    let mut results = serde_json::Map::new();
    for d in &datasets {
        out.add(format!("{}.clean.csv", d.label), clean_csv(&d.clean)?);
        let tallies = status_tallies(&d.clean);
        let profiles = profile_fields(&d.raw, &d.clean);
        let mut rows = vec![vec![
            "Field".to_string(),
            "Valid".into(),
            "Missing".into(),
            "Invalid".into(),
            "Complete".into(),
            "Distinct".into(),
        ]];
        for p in &profiles {
            let t = &tallies.get(&p.field).cloned().unwrap_or_default();
            rows.push(vec![
                p.field.to_string(),
                report::thousands(t.valid),
                report::thousands(t.missing),
                report::thousands(t.invalid),
                report::thousands(p.complete),
                report::thousands(p.distinct),
            ]);
        }
        text.push_str(&format!(
            "{} dataset: {} rows read, {} emitted, {} rejected\n\n{}\n",
            d.label,
            report::thousands(d.report.rows_read),
            report::thousands(d.report.rows_emitted),
            report::thousands(d.report.rows_rejected),
            report::text_table(&rows)
        ));
        results.insert(d.label.to_string(), json!({ "status": tallies, "fields": profiles }));
    }
    let results = serde_json::Value::Object(results);
    out.add("normalization_report.txt", text);
    out.json("normalization_report.json", &results)?;
    out.add("row_errors.csv", row_errors_csv(&datasets)?);
    out.json("run_summary.json", &summary("normalize", cfg, &datasets, results))?;
    let written = out.write(&cfg.output_dir())?;
    Ok(outcome(cfg, &datasets, written))
}

/// Field and token profiles for the configured sources.
pub fn cmd_profile(cfg: &RunConfig) -> Result<RunOutcome> {
    cfg.check()?;
    let rules = cfg.rule_table()?;
    let datasets = load_all(cfg, false)?;
    let mut out = Outputs::default();
    let (mut field_txt, mut token_txt, mut ssn_txt) = (String::new(), String::new(), String::new());
    let mut results = serde_json::Map::new();
    for d in &datasets {
        let fields = profile_fields(&d.raw, &d.clean);
        let tokens = profile_tokens(&d.clean, &rules, cfg.distinct_mode);
        let ssn = invalid_ssn_breakdown(&d.raw, &cfg.validity);
        field_txt.push_str(&report::field_profile_table(&format!("{} fields", d.label), &fields));
        field_txt.push('\n');
        token_txt.push_str(&report::token_profile_table(
            &format!("{} tokens", d.label),
            &tokens,
            &rules,
            cfg.pct_significant_digits,
        ));
        token_txt.push('\n');
        ssn_txt.push_str(&report::invalid_ssn_table(&format!("{} invalid ssn breakdown", d.label), &ssn));
        ssn_txt.push('\n');
        if cfg.dump_tokens {
            let sets: Vec<_> = d.clean.par_iter().map(|c| generate_all(c, &rules)).collect();
            let mut buf = Vec::new();
            write_token_dump(&sets, &rules, &mut buf)?;
            out.add(format!("{}.tokens.csv", d.label), buf);
        }
        let ssn_json: Vec<_> = ssn.iter().map(|(p, c)| json!({ "pattern": p, "count": c })).collect();
        results.insert(
            d.label.to_string(),
            json!({ "fields": fields, "tokens": tokens, "invalid_ssn": ssn_json }),
        );
    }
    let results = serde_json::Value::Object(results);
    out.add("field_profile.txt", field_txt);
    out.add("token_profile.txt", token_txt);
    out.add("invalid_ssn.txt", ssn_txt);
    out.json("profile_report.json", &results)?;
    out.add("row_errors.csv", row_errors_csv(&datasets)?);
    out.json("run_summary.json", &summary("profile", cfg, &datasets, results))?;
    let written = out.write(&cfg.output_dir())?;
    Ok(outcome(cfg, &datasets, written))
}

/// Validate every rule, rank them and link deaths to every patient.
pub fn cmd_link(cfg: &RunConfig) -> Result<RunOutcome> {
    cfg.check()?;
    let rules = cfg.rule_table()?;
    let truth = match &cfg.truth {
        Some(p) => {
            let path = cfg.resolve(p);
            Some(read_truth(&read_input(&path)?[..])?)
        }
        None => None,
    };
    let datasets = load_all(cfg, true)?;
    let (pat, ext) = (&datasets[0], &datasets[1]);
    let patients = LinkDataset::from_clean(pat.label, &pat.clean, &rules);
    let external = LinkDataset::from_clean(ext.label, &ext.clean, &rules);
    let ext_indexes = build_indexes(&external);
    let stats = validate_all(&patients, &external, &ext_indexes, &cfg.validation)?;
    let ranked = priority_list(&stats, &cfg.thresholds);
    let priority: Vec<(TokenId, Category)> = match &cfg.priority {
        None => ranked.clone(),
        Some(entries) => entries
            .iter()
            .map(|e| {
                if rules.get(e.token_id).is_none() {
                    return Err(Error::Config(format!("priority token {} is not a rule", e.token_id)));
                }
                let cat = Category::from_number(e.category)
                    .ok_or_else(|| Error::Config(format!("category {} is not 1, 2 or 3", e.category)))?;
                Ok((e.token_id, cat))
            })
            .collect::<Result<_>>()?,
    };
    let rows = link_deaths(&patients, &external, &priority)?;

    let lines = report::validation_lines(&stats, &ranked, &rules);
    let mut out = Outputs::default();
    out.add(
        "validation_report.txt",
        report::validation_table(
            &format!("Validation subset: {} patients with a death date", patients.validation_rows().len()),
            &lines,
        ),
    );
    out.add("validation_report.csv", report::validation_csv(&lines)?);
    out.add("linked_deaths.csv", report::linked_csv(&rows)?);
    out.add("row_errors.csv", row_errors_csv(&datasets)?);

    let mut per_token: BTreeMap<String, u64> = BTreeMap::new();
    for r in &rows {
        if let Some(t) = r.token_id {
            *per_token.entry(t.to_string()).or_default() += 1;
        }
    }
    let linked = rows.iter().filter(|r| r.token_id.is_some()).count();
    let score = match &truth {
        Some(t) => {
            let ids: BTreeSet<String> = external.record_ids.iter().cloned().collect();
            Some(score_against_truth(&rows, t, &ids)?)
        }
        None => None,
    };
    let results = json!({
        "validation_subset": patients.validation_rows().len(),
        "validation": lines,
        "priority": priority.iter().map(|(t, c)| json!({ "token_id": t, "category": c.number() })).collect::<Vec<_>>(),
        "patients": rows.len(),
        "linked": linked,
        "links_by_token": per_token,
        "truth_score": score,
    });
    out.json("run_summary.json", &summary("link", cfg, &datasets, results))?;
    let written = out.write(&cfg.output_dir())?;
    Ok(outcome(cfg, &datasets, written))
}

/// Generate a synthetic pair, its truth map and a ready-to-run link config.
pub fn cmd_synth(synth: &SynthConfig, output_dir: &Path) -> Result<RunOutcome> {
    let pop = generate_population(synth)?;
    let layout = SourceLayout::standard_delimited();
    let mut out = Outputs::default();
    let mut buf = Vec::new();
    write_records(&layout, &pop.patients, &mut buf)?;
    out.add("patients.csv", buf);
    let mut buf = Vec::new();
    write_records(&layout, &pop.external, &mut buf)?;
    out.add("external.csv", buf);
    let mut buf = Vec::new();
    write_truth(&pop.truth, &mut buf)?;
    out.add("truth.csv", buf);
    out.add(
        "run.toml",
        "output_dir = \"report\"\ntruth = \"truth.csv\"\n\n[patient]\npath = \"patients.csv\"\n\n[external]\npath = \"external.csv\"\n",
    );
    out.json(
        "run_summary.json",
        &json!({
            "tool": env!("CARGO_PKG_NAME"),
            "version": env!("CARGO_PKG_VERSION"),
            "command": "synth",
            "config": synth,
            "results": { "patients": pop.patients.len(), "external": pop.external.len(), "truth_pairs": pop.truth.len() },
        }),
    )?;
    let written = out.write(output_dir)?;
    Ok(RunOutcome { written, row_errors: 0, row_error_threshold: 0 })
}

#[derive(Debug, Clone)]
pub struct MergeArgs {
    pub layout: SourceLayout,
    pub existing: PathBuf,
    pub update: PathBuf,
    pub output_dir: PathBuf,
    pub row_error_threshold: u64,
}

/// Fold a monthly update into an existing death-master file.
pub fn cmd_merge(args: &MergeArgs) -> Result<RunOutcome> {
    args.layout.validate(DatasetRole::External)?;
    let existing_bytes = read_input(&args.existing)?;
    let update_bytes = read_input(&args.update)?;
    let existing = parse_source(&args.layout, &existing_bytes[..])?;
    let update = parse_source(&args.layout, &update_bytes[..])?;
    let row_errors = (existing.errors.len() + update.errors.len()) as u64;
    let errors: Vec<String> = existing
        .errors
        .iter()
        .map(|e| format!("existing {e}"))
        .chain(update.errors.iter().map(|e| format!("update {e}")))
        .collect();
    let (n_existing, n_update) = (existing.records.len(), update.records.len());
    let merged = merge_monthly_update(existing.records, update.records);
    let mut buf = Vec::new();
    write_records(&args.layout, &merged.records, &mut buf)?;
    let mut out = Outputs::default();
    let name = match args.update.extension().and_then(|e| e.to_str()) {
        Some(ext) => format!("merged.{ext}"),
        None => "merged".to_string(),
    };
    out.add(name, buf);
    out.json(
        "run_summary.json",
        &json!({
            "tool": env!("CARGO_PKG_NAME"),
            "version": env!("CARGO_PKG_VERSION"),
            "command": "merge",
            "layout": args.layout,
            "inputs": [
                fingerprint("existing", &args.existing, &existing_bytes),
                fingerprint("update", &args.update, &update_bytes),
            ],
            "results": {
                "existing_records": n_existing,
                "update_records": n_update,
                "merged_records": merged.records.len(),
                "rejected_without_ssn": merged.rejected.len(),
                "warnings": merged.warnings,
                "row_errors": errors,
            },
        }),
    )?;
    let written = out.write(&args.output_dir)?;
    Ok(RunOutcome { written, row_errors, row_error_threshold: args.row_error_threshold })
}
