use std::fmt::Write as _;
use std::fs;
use std::io::BufReader;
use std::path::{Path, PathBuf};

use mediprobe_core::binning::{self, ThresholdChoice};
use mediprobe_core::distribution::{
    attainable_interval, detect_paradox, enumerate_rankings, extreme_differences, LayerInterval, ParadoxWitness,
};
use mediprobe_core::mediation::{self, PairwiseReport};
use mediprobe_core::metrics::{expected_layer_by_threshold, BinTable};
use mediprobe_core::record::{self, parse_records};
use mediprobe_core::settings::{AnalysisSettings, MissingBinPolicy, DEFAULT_MIN_TAIL};
use mediprobe_core::synth::{self, ScenarioSpec};
use mediprobe_core::{BinSpec, ContextDistribution, RecordSet, TaskId};
use rayon::prelude::*;

use crate::config::{StudyConfig, TailRule};
use crate::error::CliError;
use crate::report::*;
use crate::{Cli, Command, GlobalArgs, DEFAULT_OUT_DIR};

/// Runs one command inside a pool of `--workers` threads; returns the stdout summary.
pub fn run(cli: &Cli) -> Result<String, CliError> {
    let workers = cli.global.workers.unwrap_or(0);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| CliError::Usage(format!("cannot start {workers} workers: {e}")))?;
    pool.install(|| dispatch(cli))
}

fn dispatch(cli: &Cli) -> Result<String, CliError> {
    let g = &cli.global;
    match &cli.command {
        Command::Validate { files } => validate(g, files),
        Command::Synth { scenario } => synth_cmd(g, scenario),
        cmd => {
            let study = Study::load(g)?;
            let mut out = ReportDir::create(&study.out)?;
            match cmd {
                Command::Bins => bins(&study, &mut out),
                Command::Elayer {
                    threshold_curve,
                    by_bin,
                } => {
                    let both = !threshold_curve && !by_bin;
                    elayer(&study, &mut out, *threshold_curve || both, *by_bin || both)
                }
                Command::Nde {
                    from,
                    to,
                    dist_of,
                    dist,
                } => nde(&study, &mut out, from, to, dist_of.as_deref(), dist.as_deref()),
                Command::Pairwise => pairwise(&study, &mut out),
                Command::Intervals => intervals_cmd(&study, &mut out),
                Command::Rankings => rankings(&study, &mut out),
                Command::Paradox => paradox(&study, &mut out),
                Command::Extremes => extremes_cmd(&study, &mut out),
                Command::PlotData => plot_data(&study, &mut out),
                Command::Validate { .. } | Command::Synth { .. } => unreachable!(),
            }
        }
    }
}

fn out_dir(g: &GlobalArgs, cfg: Option<&StudyConfig>) -> PathBuf {
    g.out
        .clone()
        .or_else(|| cfg.and_then(|c| c.out.clone()))
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT_DIR))
}

fn load_config(g: &GlobalArgs) -> Result<StudyConfig, CliError> {
    let path = g
        .config
        .as_ref()
        .ok_or_else(|| CliError::Usage("--config is required for this command".into()))?;
    let mut cfg = StudyConfig::load(path)?;
    let a = &mut cfg.analysis;
    a.clamp_deltas |= g.clamp_deltas;
    a.include_low_support |= g.include_low_support;
    if g.renormalize_missing_bins {
        a.missing_bins = MissingBinPolicy::Renormalize;
    }
    if let Some(n) = g.min_support {
        a.min_support = n;
    }
    if let Some(eps) = g.epsilon {
        a.epsilon = eps;
    }
    cfg.check()?;
    Ok(cfg)
}

/// A loaded study: records, task list, shared bin spec and resolved settings.
pub struct Study {
    pub config: StudyConfig,
    pub records: RecordSet,
    pub tasks: Vec<TaskId>,
    pub spec: BinSpec,
    pub thresholds: Vec<(TaskId, ThresholdChoice)>,
    pub out: PathBuf,
}

impl Study {
    pub fn load(g: &GlobalArgs) -> Result<Self, CliError> {
        let config = load_config(g)?;
        let mut records: Option<RecordSet> = None;
        for path in &config.records {
            let file = fs::File::open(path).map_err(|e| CliError::io(path, e))?;
            let rs = record::ingest(BufReader::new(file), config.layers).map_err(|e| match e {
                mediprobe_core::Error::Schema { line, message } => mediprobe_core::Error::Schema {
                    line,
                    message: format!("{}: {message}", path.display()),
                },
                other => other,
            })?;
            records = Some(match records {
                None => rs,
                Some(acc) => acc.merge(rs)?,
            });
        }
        let records = records.ok_or_else(|| CliError::Config("no record files configured".into()))?;
        let tasks: Vec<TaskId> = match &config.tasks {
            Some(list) => {
                for t in list {
                    records.variant(t)?;
                }
                list.clone()
            }
            None => records.tasks().cloned().collect(),
        };
        if tasks.is_empty() {
            return Err(CliError::Findings("the record files declare no tasks".into()));
        }
        for t in &tasks {
            config.analysis.aggregator(&records, t)?;
        }
        let min_tail = match config.binning.tail_start {
            TailRule::Auto(n) => n,
            TailRule::Fixed(_) => DEFAULT_MIN_TAIL,
        };
        let thresholds = tasks
            .iter()
            .map(|t| Ok((t.clone(), binning::choose_max_threshold(&records, t, min_tail)?)))
            .collect::<Result<Vec<_>, CliError>>()?;
        let width = config.binning.width;
        let spec = match config.binning.tail_start {
            TailRule::Fixed(t) => BinSpec::new(width, t)?,
            // one spec shared by all tasks: the smallest per-task tail among tasks with enough data
            TailRule::Auto(_) => {
                let tail = thresholds
                    .iter()
                    .filter(|(_, c)| c.sufficient)
                    .map(|(_, c)| c.threshold / width * width)
                    .min()
                    .unwrap_or(0);
                BinSpec::new(width, tail)?
            }
        };
        let out = out_dir(g, Some(&config));
        Ok(Self {
            config,
            records,
            tasks,
            spec,
            thresholds,
            out,
        })
    }

    pub fn settings(&self) -> &AnalysisSettings {
        &self.config.analysis
    }

    fn bin_tables(&self) -> Result<Vec<BinTable>, CliError> {
        self.tasks
            .par_iter()
            .map(|t| Ok(mediation::bin_table(&self.records, t, &self.spec, self.settings())?))
            .collect()
    }

    fn intervals(&self) -> Result<Vec<LayerInterval>, CliError> {
        let include = self.settings().include_low_support;
        self.bin_tables()?
            .iter()
            .map(|table| Ok(attainable_interval(&table.task, &table.defined(include))?))
            .collect()
    }

    fn pairwise(&self) -> Result<PairwiseReport, CliError> {
        Ok(mediation::pairwise_report(
            &self.records,
            &self.tasks,
            &self.spec,
            self.settings(),
        )?)
    }

    fn header(&self) -> String {
        let labels: Vec<String> = self.spec.bins().iter().map(|b| b.label()).collect();
        format!(
            "{} records, {} tasks, L = {}, bins: {}\n",
            self.records.len(),
            self.tasks.len(),
            self.records.layer_count(),
            labels.join(" ")
        )
    }
}

fn pairs(n: usize) -> Vec<(usize, usize)> {
    (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect()
}

fn validate(g: &GlobalArgs, files: &[PathBuf]) -> Result<String, CliError> {
    let (files, layers, out) = if files.is_empty() {
        let cfg = load_config(g)?;
        let out = out_dir(g, Some(&cfg));
        (cfg.records.clone(), cfg.layers, out)
    } else {
        (files.to_vec(), None, out_dir(g, None))
    };
    let mut rows = Vec::new();
    let mut total = 0;
    for path in &files {
        let file = fs::File::open(path).map_err(|e| CliError::io(path, e))?;
        let parsed = parse_records(BufReader::new(file), layers)?;
        total += parsed.set.len();
        for v in parsed.set.validate() {
            rows.push(ViolationRow {
                file: path.display().to_string(),
                line: parsed.line_of(&v),
                violation: v,
            });
        }
    }
    let mut dir = ReportDir::create(&out)?;
    dir.write_report("validation", &rows)?;
    let mut summary = format!(
        "{} records in {} file(s), {} violations\n",
        total,
        files.len(),
        rows.len()
    );
    for r in rows.iter().take(20) {
        let _ = writeln!(summary, "  {}:{}: {}", r.file, r.line, r.violation);
    }
    if rows.is_empty() {
        Ok(summary)
    } else {
        Err(CliError::Findings(summary))
    }
}

fn share_rows(study: &Study) -> Result<(Vec<BinShareRow>, bool), CliError> {
    let min_frac = study.config.binning.min_fraction;
    let mut rows = Vec::new();
    let mut all_pass = true;
    for t in &study.tasks {
        let rep = binning::validate_min_fraction(&study.records, t, &study.spec, min_frac)?;
        all_pass &= rep.pass;
        rows.extend(rep.bins.into_iter().map(|b| BinShareRow {
            task: t.clone(),
            bin: b.bin,
            count: b.count,
            fraction: b.fraction,
            pass: b.pass,
        }));
    }
    Ok((rows, all_pass))
}

fn threshold_choice_rows(study: &Study) -> Vec<ThresholdChoiceRow> {
    study
        .thresholds
        .iter()
        .map(|(t, c)| ThresholdChoiceRow {
            task: t.clone(),
            max_threshold: c.threshold,
            tail_count: c.tail_count,
            total: c.total,
            sufficient: c.sufficient,
        })
        .collect()
}

fn bins(study: &Study, out: &mut ReportDir) -> Result<String, CliError> {
    let (rows, all_pass) = share_rows(study)?;
    out.write_report("bins", &rows)?;
    let choices = threshold_choice_rows(study);
    out.write_report("thresholds", &choices)?;
    let mut s = study.header();
    let failing = rows.iter().filter(|r| !r.pass).count();
    let _ = writeln!(
        s,
        "min-fraction check ({}): {}",
        study.config.binning.min_fraction,
        if all_pass {
            "all bins pass".to_string()
        } else {
            format!("{failing} bin(s) below threshold")
        }
    );
    for c in &choices {
        if !c.sufficient {
            let _ = writeln!(
                s,
                "warning: task {} has only {} records; maximal threshold set to 0",
                c.task, c.total
            );
        }
    }
    Ok(s)
}

fn threshold_rows(study: &Study) -> Result<Vec<ThresholdRow>, CliError> {
    let per_task: Vec<Vec<ThresholdRow>> = study
        .thresholds
        .par_iter()
        .map(|(t, choice)| {
            let agg = study.settings().aggregator(&study.records, t)?;
            let curve = expected_layer_by_threshold(
                &study.records,
                t,
                agg,
                0..=choice.threshold,
                study.settings().clamp_deltas,
            )?;
            Ok(curve
                .into_iter()
                .map(|p| ThresholdRow {
                    task: t.clone(),
                    threshold: p.threshold,
                    expected_layer: p.expected_layer,
                    support: p.support,
                    flag: p.flag,
                })
                .collect())
        })
        .collect::<Result<_, CliError>>()?;
    Ok(per_task.into_iter().flatten().collect())
}

fn bin_layer_rows(tables: &[BinTable]) -> Vec<BinLayerRow> {
    tables
        .iter()
        .flat_map(|table| {
            table.entries.iter().map(|e| BinLayerRow {
                task: table.task.clone(),
                bin: e.bin,
                expected_layer: e.expected_layer,
                support: e.support,
                flag: e.flag,
            })
        })
        .collect()
}

fn elayer(study: &Study, out: &mut ReportDir, curve: bool, by_bin: bool) -> Result<String, CliError> {
    let mut s = study.header();
    if curve {
        let rows = threshold_rows(study)?;
        out.write_report("elayer_threshold", &rows)?;
        let gaps = rows.iter().filter(|r| r.expected_layer.is_none()).count();
        let _ = writeln!(s, "threshold curves: {} points, {} gaps", rows.len(), gaps);
    }
    if by_bin {
        let rows = bin_layer_rows(&study.bin_tables()?);
        out.write_report("elayer_by_bin", &rows)?;
        for r in &rows {
            let _ = writeln!(
                s,
                "  {:<12} {:>6}  {:>10}  n={:<8} {:?}",
                r.task.as_str(),
                r.bin.label(),
                fmt_opt(r.expected_layer),
                r.support,
                r.flag
            );
        }
    }
    Ok(s)
}

fn parse_task(study: &Study, name: &str) -> Result<TaskId, CliError> {
    let t = TaskId::new(name).map_err(|e| CliError::Usage(e.to_string()))?;
    study.records.variant(&t)?;
    Ok(t)
}

fn nde(
    study: &Study,
    out: &mut ReportDir,
    from: &str,
    to: &str,
    dist_of: Option<&str>,
    dist_file: Option<&Path>,
) -> Result<String, CliError> {
    let t1 = parse_task(study, from)?;
    let t2 = parse_task(study, to)?;
    let dist = match (dist_of, dist_file) {
        (_, Some(path)) => {
            let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
            serde_json::from_str::<ContextDistribution>(&text)
                .map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?
        }
        (Some(name), None) => {
            let t = parse_task(study, name)?;
            binning::empirical_distribution(&study.records, &t, &study.spec)?
        }
        (None, None) => binning::empirical_distribution(&study.records, &t1, &study.spec)?,
    };
    let rep = mediation::nde(&study.records, &t1, &t2, &study.spec, study.settings(), Some(&dist))?;
    let rows: Vec<ContributionRow> = dist
        .iter()
        .map(|(bin, w)| ContributionRow {
            task_from: t1.clone(),
            task_to: t2.clone(),
            bin: *bin,
            weight: w,
            contribution: rep.per_bin_contributions.get(bin).copied(),
        })
        .collect();
    out.write_tsv("nde.tsv", &rows)?;
    out.write_jsonl("nde.jsonl", std::slice::from_ref(&rep))?;
    let unmediated = mediation::unmediated_difference(&study.records, &t1, &t2, &study.spec, study.settings());
    let mut s = study.header();
    let _ = writeln!(s, "NDE {t1} -> {t2} = {}", fmt_f64(rep.value));
    match unmediated {
        Ok(u) => {
            let _ = writeln!(s, "unmediated difference = {}", fmt_f64(u));
        }
        Err(e) => {
            let _ = writeln!(s, "unmediated difference unavailable: {e}");
        }
    }
    if !rep.skipped_bins.is_empty() {
        let labels: Vec<String> = rep.skipped_bins.iter().map(|b| b.label()).collect();
        let _ = writeln!(s, "skipped bins: {}", labels.join(", "));
    }
    Ok(s)
}

fn nde_matrix(report: &PairwiseReport, tasks: &[TaskId]) -> String {
    let n = tasks.len();
    let mut m = vec![vec![Some(0.0); n]; n];
    for (e, (i, j)) in report.entries.iter().zip(pairs(n)) {
        // row task's distribution imposed; cell is E(col) - E(row)
        m[i][j] = e.nde_t1_dist;
        m[j][i] = e.nde_t2_dist.map(|v| -v);
    }
    let mut s = String::from("nde_under_row_dist");
    for t in tasks {
        let _ = write!(s, "\t{t}");
    }
    s.push('\n');
    for (i, t) in tasks.iter().enumerate() {
        s.push_str(t.as_str());
        for cell in &m[i] {
            let _ = write!(s, "\t{}", fmt_opt(*cell));
        }
        s.push('\n');
    }
    s
}

fn pairwise(study: &Study, out: &mut ReportDir) -> Result<String, CliError> {
    let report = study.pairwise()?;
    out.write_report("pairwise", &report.entries)?;
    out.write_text("pairwise_matrix.tsv", &nde_matrix(&report, &study.tasks))?;
    let mut s = study.header();
    for e in &report.entries {
        let cells = e.cells();
        let _ = writeln!(
            s,
            "  {} vs {}: unmediated {}  nde({}) {}  nde({}) {}  [{}]",
            e.t1, e.t2, cells[2], e.t1, cells[3], e.t2, cells[4], cells[7]
        );
    }
    Ok(s)
}

fn intervals_cmd(study: &Study, out: &mut ReportDir) -> Result<String, CliError> {
    let ivs = study.intervals()?;
    out.write_report("intervals", &ivs)?;
    let mut s = study.header();
    for iv in &ivs {
        let _ = writeln!(
            s,
            "  {:<12} [{}, {}]",
            iv.task.as_str(),
            fmt_f64(iv.low),
            fmt_f64(iv.high)
        );
    }
    Ok(s)
}

fn rankings(study: &Study, out: &mut ReportDir) -> Result<String, CliError> {
    let ivs = study.intervals()?;
    let set = enumerate_rankings(&ivs, study.settings().epsilon, study.settings().ranking_cap)?;
    let mut text = format!("count\t{}\n", set.count);
    for r in &set.rankings {
        text.push_str(&ranking_line(r));
        text.push('\n');
    }
    out.write_text("rankings.txt", &text)?;
    out.write_report("rankings", &set.rankings)?;
    let mut s = study.header();
    let _ = writeln!(s, "{} feasible ranking(s) of {} tasks", set.count, set.tasks.len());
    Ok(s)
}

fn paradox_witnesses(study: &Study) -> Result<(Vec<ParadoxWitness>, Vec<String>), CliError> {
    let include = study.settings().include_low_support;
    let layers: Vec<_> = study.bin_tables()?.iter().map(|t| t.defined(include)).collect();
    let eps = study.settings().epsilon;
    let results: Vec<_> = pairs(study.tasks.len())
        .par_iter()
        .map(|&(i, j)| detect_paradox(&study.tasks[i], &layers[i], &study.tasks[j], &layers[j], eps))
        .collect();
    let mut witnesses = Vec::new();
    let mut notes = Vec::new();
    for r in results {
        match r {
            Ok(Some(w)) => witnesses.push(w),
            Ok(None) => {}
            Err(e) => notes.push(e.to_string()),
        }
    }
    Ok((witnesses, notes))
}

fn paradox(study: &Study, out: &mut ReportDir) -> Result<String, CliError> {
    let (witnesses, notes) = paradox_witnesses(study)?;
    out.write_report("paradox", &witnesses)?;
    let mut s = study.header();
    let _ = writeln!(s, "{} paradox witness(es)", witnesses.len());
    for w in &witnesses {
        let _ = writeln!(
            s,
            "  {} vs {}: per-bin {:?}, aggregates {} vs {} (margin {})",
            w.task_a,
            w.task_b,
            w.dominance,
            fmt_f64(w.aggregate_a),
            fmt_f64(w.aggregate_b),
            fmt_f64(w.margin)
        );
    }
    for n in notes {
        let _ = writeln!(s, "  skipped: {n}");
    }
    Ok(s)
}

fn extreme_rows(ivs: &[LayerInterval]) -> Vec<ExtremeRow> {
    pairs(ivs.len())
        .into_iter()
        .map(|(i, j)| {
            let (max_difference, min_difference) = extreme_differences(&ivs[i], &ivs[j]);
            ExtremeRow {
                t1: ivs[i].task.clone(),
                t2: ivs[j].task.clone(),
                max_difference,
                min_difference,
                order_fixed: max_difference < 0.0 || min_difference > 0.0,
            }
        })
        .collect()
}

fn extremes_cmd(study: &Study, out: &mut ReportDir) -> Result<String, CliError> {
    let rows = extreme_rows(&study.intervals()?);
    out.write_report("extremes", &rows)?;
    let mut s = study.header();
    let fixed = rows.iter().filter(|r| r.order_fixed).count();
    let _ = writeln!(
        s,
        "{} pair(s), {} with an order no distribution can change",
        rows.len(),
        fixed
    );
    Ok(s)
}

fn nde_bar_rows(report: &PairwiseReport) -> Vec<NdeBarRow> {
    report
        .entries
        .iter()
        .flat_map(|e| {
            [
                ("unmediated".to_string(), e.unmediated),
                (format!("nde:{}", e.t1), e.nde_t1_dist),
                (format!("nde:{}", e.t2), e.nde_t2_dist),
            ]
            .into_iter()
            .map(|(measure, value)| NdeBarRow {
                t1: e.t1.clone(),
                t2: e.t2.clone(),
                measure,
                value,
            })
        })
        .collect()
}

fn plot_data(study: &Study, out: &mut ReportDir) -> Result<String, CliError> {
    let mut dir = out.subdir("plot-data")?;
    dir.write_report("threshold_curves", &threshold_rows(study)?)?;
    let tables = study.bin_tables()?;
    dir.write_report("per_bin", &bin_layer_rows(&tables))?;
    let ivs = study.intervals()?;
    dir.write_report("intervals", &ivs)?;
    dir.write_report("nde_vs_unmediated", &nde_bar_rows(&study.pairwise()?))?;
    dir.write_report("distributions", &share_rows(study)?.0)?;
    dir.write_report("extremes", &extreme_rows(&ivs))?;
    let mut s = study.header();
    let _ = writeln!(s, "wrote {} files to {}", dir.written().len(), dir.root().display());
    Ok(s)
}

fn synth_cmd(g: &GlobalArgs, scenario: &Path) -> Result<String, CliError> {
    let text = fs::read_to_string(scenario).map_err(|e| CliError::io(scenario, e))?;
    let mut spec: ScenarioSpec = if scenario.extension().is_some_and(|e| e == "json") {
        serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", scenario.display())))?
    } else {
        toml::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", scenario.display())))?
    };
    if let Some(seed) = g.seed {
        spec.seed = seed;
    }
    spec.validate().map_err(|e| CliError::Config(e.to_string()))?;
    let rs = synth::generate(&spec)?;
    let mut dir = ReportDir::create(&out_dir(g, None))?;
    let path = dir.root().join("records.jsonl");
    let file = fs::File::create(&path).map_err(|e| CliError::io(&path, e))?;
    let mut w = std::io::BufWriter::new(file);
    record::serialize(&rs, &mut w).map_err(|e| CliError::io(&path, e))?;
    std::io::Write::flush(&mut w).map_err(|e| CliError::io(&path, e))?;
    let planted: Vec<PlantedRow> = synth::planted_oracle(&spec)?
        .into_iter()
        .map(|o| PlantedRow {
            task: o.task,
            bin: o.bin,
            weight: o.weight,
            expected_layer: o.expected_layer,
        })
        .collect();
    dir.write_report("planted", &planted)?;
    Ok(format!(
        "generated {} records for {} task(s) (seed {}) into {}\n",
        rs.len(),
        spec.tasks.len(),
        spec.seed,
        path.display()
    ))
}
