use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use anyhow::{Context, Result};
use serde_json::{json, Value};

use continuo::eval::{
    cross_validate_profiles, griff_distribution, histogram, note_stats, player_focused, segment_scan, stratified_kfold,
    CvReport, Scope, HISTOGRAM_BINS,
};
use continuo::features::{build_vocabulary, dataset_profiles, performance_tokens, GriffProfile, Representation};
use continuo::ingest::{load_dataset_from_path, Dataset, Manifest};
use continuo::synth::{export, generate, SynthConfig};

use crate::report::{num, sha256_file, Report, Table};
use crate::{Command, Common, RunConfig};

pub const WHOLE_DATASET: &str = "Whole Dataset";

pub fn dispatch(command: Command) -> Result<Vec<String>> {
    match command {
        Command::Extract(common) => extract(&RunConfig::new("extract", &common)?, &common),
        Command::Classify(common) => classify(&RunConfig::new("classify", &common)?, &common),
        Command::Player { common, player } => {
            let mut cfg = RunConfig::new("player", &common)?;
            cfg.player = player;
            player_cmd(&cfg, &common)
        }
        Command::Segments { common, score } => {
            let mut cfg = RunConfig::new("segments", &common)?;
            cfg.score = score;
            segments(&cfg, &common)
        }
        Command::Note { common, score, note } => {
            let mut cfg = RunConfig::new("note", &common)?;
            cfg.score = Some(score);
            cfg.note = Some(note);
            note_cmd(&cfg, &common)
        }
        Command::Synth { config, seed, out } => synth(config.as_deref(), seed, &out),
    }
}

/// Loads the dataset and fingerprints the manifest and every file it names.
fn load(manifest: &Path) -> Result<(Dataset, BTreeMap<String, String>)> {
    let text = fs::read_to_string(manifest).with_context(|| format!("reading manifest {}", manifest.display()))?;
    let base = manifest.parent().unwrap_or(Path::new("."));
    let parsed = Manifest::parse(&text).with_context(|| format!("manifest {}", manifest.display()))?;
    let mut inputs = BTreeMap::new();
    inputs.insert(manifest.display().to_string(), sha256_file(manifest)?);
    let dataset = load_dataset_from_path(manifest)?;
    for (file, entry) in parsed.referenced_files(base).iter().zip(
        parsed
            .performances
            .iter()
            .flat_map(|p| [p.midi_path.display().to_string(), p.alignment_path.display().to_string()]),
    ) {
        inputs.insert(entry, sha256_file(file)?);
    }
    Ok((dataset, inputs))
}

fn report(cfg: &RunConfig, inputs: BTreeMap<String, String>, tables: Vec<Table>, results: Value) -> Result<Report> {
    Ok(Report {
        command: cfg.command.clone(),
        version: env!("CARGO_PKG_VERSION").to_string(),
        run: serde_json::to_value(cfg)?,
        inputs,
        tables,
        results,
    })
}

/// Score names in order, followed by `None` for the whole dataset, as the
/// scope selection asks.
fn scope_rows(ds: &Dataset, scopes: &[Scope]) -> Vec<Option<String>> {
    let mut rows = Vec::new();
    if scopes.contains(&Scope::PerScore) {
        rows.extend(ds.scores().map(|s| Some(s.name().to_string())));
    }
    if scopes.contains(&Scope::WholeDataset) {
        rows.push(None);
    }
    rows
}

fn scope_label(score: &Option<String>) -> String {
    score.clone().unwrap_or_else(|| WHOLE_DATASET.to_string())
}

fn extract(cfg: &RunConfig, common: &Common) -> Result<Vec<String>> {
    let (ds, inputs) = load(&common.manifest)?;
    let opts = cfg.griff_options();
    let mut reprs = Representation::STANDARD.to_vec();
    for r in &cfg.representations {
        if !reprs.contains(r) {
            reprs.push(*r);
        }
    }

    let mut vocab = Table::new("vocabulary", std::iter::once("scope".to_string()).chain(reprs.iter().map(|r| r.to_string())));
    let mut totals = Table::new("tokens", ["scope", "performances", "griff_tokens"]);
    let mut results = serde_json::Map::new();
    if !ds.is_empty() {
        for scope in scope_rows(&ds, &[Scope::PerScore, Scope::WholeDataset]) {
            let mut row = vec![scope_label(&scope)];
            let mut sizes = serde_json::Map::new();
            for &r in &reprs {
                let profiles = dataset_profiles(&ds, scope.as_deref(), r, opts)?;
                let n = build_vocabulary(&profiles)?.len();
                sizes.insert(r.to_string(), json!(n));
                row.push(n.to_string());
            }
            vocab.push(row);
            let mut performances = 0;
            let mut tokens = 0;
            for (key, perf) in ds.performances().filter(|(k, _)| scope.as_ref().is_none_or(|s| &k.score == s)) {
                let sc = ds.score(&key.score)?;
                performances += 1;
                tokens += performance_tokens(key, perf, sc, Representation::Griffs, opts)?
                    .iter()
                    .filter(|t| !t.is_empty())
                    .count();
            }
            totals.push(vec![scope_label(&scope), performances.to_string(), tokens.to_string()]);
            results.insert(scope_label(&scope), json!({"vocabulary": sizes, "performances": performances, "griff_tokens": tokens}));
        }
    }

    let mut written = report(cfg, inputs, vec![vocab, totals], Value::Object(results))?.emit(common.out.as_deref(), cfg.format)?;
    if let Some(out) = &common.out {
        let dir = out.join("tokens");
        fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
        for &r in &cfg.representations {
            for (key, perf) in ds.performances() {
                let tokens = performance_tokens(key, perf, ds.score(&key.score)?, r, opts)?;
                let path = dir.join(format!("{}_{}_{}.{r}.txt", key.score, key.player, key.take));
                let mut text = tokens.join("\n");
                text.push('\n');
                fs::write(&path, text).with_context(|| format!("writing {}", path.display()))?;
            }
            written.push(format!("{} {r} token files under {}", ds.len(), dir.display()));
            let profiles = dataset_profiles(&ds, None, r, opts)?;
            let path = out.join(format!("vocabulary.{r}.txt"));
            fs::write(&path, build_vocabulary(&profiles)?.to_lines()).with_context(|| format!("writing {}", path.display()))?;
            written.push(path.display().to_string());
        }
    }
    Ok(written)
}

fn cv(cfg: &RunConfig, ds: &Dataset, score: Option<&str>, repr: Representation) -> Result<CvReport> {
    let profiles = dataset_profiles(ds, score, repr, cfg.griff_options())?;
    let labels: Vec<&str> = profiles.iter().map(GriffProfile::label).collect();
    let plan = stratified_kfold(&labels, cfg.folds, cfg.seed)
        .with_context(|| format!("scope {}", score.unwrap_or(WHOLE_DATASET)))?;
    Ok(cross_validate_profiles(&profiles, &plan, &cfg.svm(), cfg.vocab_mode)?)
}

fn classify(cfg: &RunConfig, common: &Common) -> Result<Vec<String>> {
    let (ds, inputs) = load(&common.manifest)?;
    let mut accuracy = Table::new(
        "accuracy",
        std::iter::once("scope".to_string()).chain(cfg.representations.iter().map(|r| r.to_string())),
    );
    let mut folds = Table::new("folds", ["scope", "representation", "fold", "accuracy"]);
    let mut confusion = Table::new("confusion", ["scope", "representation", "true", "predicted", "count"]);
    let mut results = serde_json::Map::new();
    for scope in scope_rows(&ds, &cfg.scope.scopes()) {
        let label = scope_label(&scope);
        let mut row = vec![label.clone()];
        let mut per_repr = serde_json::Map::new();
        for &r in &cfg.representations {
            let rep = cv(cfg, &ds, scope.as_deref(), r)?;
            row.push(num(rep.accuracy));
            for (f, a) in rep.fold_accuracies.iter().enumerate() {
                folds.push(vec![label.clone(), r.to_string(), f.to_string(), num(*a)]);
            }
            for (i, t) in rep.classes.iter().enumerate() {
                for (j, p) in rep.classes.iter().enumerate() {
                    confusion.push(vec![label.clone(), r.to_string(), t.clone(), p.clone(), rep.confusion[i][j].to_string()]);
                }
            }
            per_repr.insert(r.to_string(), serde_json::to_value(&rep)?);
        }
        accuracy.push(row);
        results.insert(label, Value::Object(per_repr));
    }
    report(cfg, inputs, vec![accuracy, folds, confusion], Value::Object(results))?.emit(common.out.as_deref(), cfg.format)
}

fn player_cmd(cfg: &RunConfig, common: &Common) -> Result<Vec<String>> {
    let (ds, inputs) = load(&common.manifest)?;
    let players = match &cfg.player {
        Some(p) => vec![p.clone()],
        None => ds.players(),
    };
    let mut summary = Table::new("accuracy", ["player", "scope", "representation", "group", "runs", "accuracy"]);
    let mut runs = Table::new("runs", ["player", "scope", "representation", "score", "take", "predicted", "correct"]);
    let mut results = Vec::new();
    for &r in &cfg.representations {
        for scope in cfg.scope.scopes() {
            for player in &players {
                let rep = player_focused(&ds, scope, player, r, cfg.griff_options(), &cfg.svm(), cfg.vocab_mode)?;
                for (score, acc) in &rep.per_score {
                    let n = rep.runs.iter().filter(|x| &x.test.score == score).count();
                    summary.push(vec![player.clone(), scope.to_string(), r.to_string(), score.clone(), n.to_string(), num(*acc)]);
                }
                summary.push(vec![
                    player.clone(),
                    scope.to_string(),
                    r.to_string(),
                    "all".into(),
                    rep.runs.len().to_string(),
                    num(rep.accuracy),
                ]);
                for run in &rep.runs {
                    runs.push(vec![
                        player.clone(),
                        scope.to_string(),
                        r.to_string(),
                        run.test.score.clone(),
                        run.test.take.clone(),
                        run.predicted.clone(),
                        run.correct.to_string(),
                    ]);
                }
                results.push(json!({"representation": r, "report": rep}));
            }
        }
    }
    report(cfg, inputs, vec![summary, runs], Value::Array(results))?.emit(common.out.as_deref(), cfg.format)
}

fn segments(cfg: &RunConfig, common: &Common) -> Result<Vec<String>> {
    let (ds, inputs) = load(&common.manifest)?;
    let scores: Vec<String> = match &cfg.score {
        Some(s) => vec![ds.score(s)?.name().to_string()],
        None => ds.scores().map(|s| s.name().to_string()).collect(),
    };
    let mut seg_table = Table::new("segments", ["score", "length", "start", "accuracy"]);
    let mut curves = Table::new("note_means", ["score", "ordinal", "note_id", "length", "mean_accuracy"]);
    let mut pooled: BTreeMap<usize, Vec<f64>> = BTreeMap::new();
    let mut results = Vec::new();
    for name in &scores {
        let scan = segment_scan(&ds, name, &cfg.segment_lengths, &cfg.svm(), cfg.folds, cfg.seed, cfg.griff_options(), cfg.vocab_mode)?;
        let sc = ds.score(name)?;
        for (l, rs) in &scan.segments {
            for r in rs {
                seg_table.push(vec![name.clone(), l.to_string(), r.segment.start.to_string(), num(r.accuracy)]);
                pooled.entry(*l).or_default().push(r.accuracy);
            }
        }
        for (l, means) in &scan.note_means {
            for (o, m) in means.iter().enumerate() {
                curves.push(vec![name.clone(), o.to_string(), sc.notes()[o].id.clone(), l.to_string(), num(*m)]);
            }
        }
        results.push(serde_json::to_value(&scan)?);
    }
    let mut hist = Table::new("histogram", ["length", "bin_low", "bin_high", "count"]);
    let mut moments = Table::new("skewness", ["length", "segments", "mean", "skewness"]);
    let mut pooled_json = serde_json::Map::new();
    for (l, accs) in &pooled {
        let h = histogram(accs, HISTOGRAM_BINS);
        for (b, c) in h.counts.iter().enumerate() {
            hist.push(vec![l.to_string(), num(h.edges[b]), num(h.edges[b + 1]), c.to_string()]);
        }
        moments.push(vec![l.to_string(), h.n.to_string(), num(h.mean), num(h.skewness)]);
        pooled_json.insert(l.to_string(), serde_json::to_value(&h)?);
    }
    let results = json!({"scans": results, "pooled_histograms": pooled_json});
    report(cfg, inputs, vec![seg_table, curves, hist, moments], results)?.emit(common.out.as_deref(), cfg.format)
}

fn note_cmd(cfg: &RunConfig, common: &Common) -> Result<Vec<String>> {
    let (ds, inputs) = load(&common.manifest)?;
    let score = cfg.score.as_deref().expect("set by dispatch");
    let note = cfg.note.as_deref().expect("set by dispatch");
    let opts = cfg.griff_options();
    // Fail on an unknown note before the comparatively slow scan.
    let dist = griff_distribution(&ds, score, note, opts)?;
    let scan = segment_scan(&ds, score, &cfg.segment_lengths, &cfg.svm(), cfg.folds, cfg.seed, opts, cfg.vocab_mode)?;
    let stats = note_stats(&ds, score, note, opts, &scan.note_means)?;

    let mut columns: Vec<String> = ["score", "note_id", "ordinal", "spelling", "types", "occurrences", "mean_usage"]
        .map(String::from)
        .to_vec();
    columns.extend(stats.accuracy.keys().map(|l| format!("accuracy_L{l}")));
    let mut st = Table::new("stats", columns);
    let mut row = vec![
        stats.score.clone(),
        stats.note_id.clone(),
        stats.ordinal.to_string(),
        stats.spelling.clone(),
        stats.types.to_string(),
        stats.occurrences.to_string(),
        num(stats.mean_usage),
    ];
    row.extend(stats.accuracy.values().map(|a| num(*a)));
    st.push(row);

    let mut dt = Table::new(
        "distribution",
        std::iter::once("token".to_string()).chain(dist.players.iter().cloned()).chain(std::iter::once("total".to_string())),
    );
    for (token, counts) in &dist.rows {
        let mut row = vec![token.clone()];
        row.extend(counts.iter().map(u32::to_string));
        row.push(counts.iter().sum::<u32>().to_string());
        dt.push(row);
    }
    let results = json!({"stats": stats, "distribution": dist});
    report(cfg, inputs, vec![st, dt], results)?.emit(common.out.as_deref(), cfg.format)
}

fn synth(config: Option<&Path>, seed: Option<u64>, out: &Path) -> Result<Vec<String>> {
    let mut cfg = match config {
        Some(path) => {
            let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            SynthConfig::from_json(&text).with_context(|| format!("config {}", path.display()))?
        }
        None => SynthConfig::default(),
    };
    if let Some(s) = seed {
        cfg.seed = s;
    }
    let corpus = generate(&cfg)?;
    let manifest = export(&corpus, out)?;
    let truth: BTreeMap<String, &Vec<String>> = corpus.ground_truth.iter().map(|(k, v)| (k.to_string(), v)).collect();
    let meta = json!({
        "config": cfg,
        "palettes": corpus.palettes,
        "common_token": corpus.common_token,
        "ground_truth": truth,
    });
    let path = out.join("ground_truth.json");
    fs::write(&path, serde_json::to_string_pretty(&meta)? + "\n").with_context(|| format!("writing {}", path.display()))?;
    Ok(vec![manifest.display().to_string(), path.display().to_string()])
}
