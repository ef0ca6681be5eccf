//! Command-line front end.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{CommandFactory, Parser, Subcommand};

use crate::error::{Error, Result};
use crate::io::cache::FeatureCache;
use crate::io::config::Config;
use crate::io::fixtures::{make_fixture, write_warp_dataset, FixtureKind, FixtureParams};
use crate::io::manifest::Manifest;
use crate::io::results::{
    hex, write_folds_csv, write_json, write_ranking_csv, write_scatter_csv, write_significance_csv, EvalReport,
    ModelFile, ScoreTable,
};
use crate::io::svg::scatter_svg;
use crate::io::video::{ingest, write_y4m};
use crate::motion::{FileFlow, FlowEstimator, PyramidalLk, Stream};
use crate::pipeline::Extractor;
use crate::regression::svr::grid_search;
use crate::regression::{
    cross_validate, fit_logistic, krasula_auc, rank_groups, significance_matrix, svr_train, CvConfig, CvRecord,
    FoldModel, GroupStatistic, Orientation, PairSignificance, SvrModel,
};

#[derive(Debug, Parser)]
#[command(name = "emvqm", version, about = "Quality assessment for synthesized free-viewpoint video")]
struct Cli {
    /// `key = value` settings file
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Debug, Subcommand)]
enum Cmd {
    /// Extract feature vectors for every manifest entry into a cache
    Extract {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Precomputed flow: <dir>/<video_id>/<ref|syn>/<frame:06>.flo
        #[arg(long)]
        flow_dir: Option<PathBuf>,
    },
    /// Train the aggregator on all cached records
    Train {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        cache: PathBuf,
        #[arg(long)]
        model: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Predict the score of one reference/synthesized pair
    Score {
        #[arg(long)]
        model: PathBuf,
        #[arg(long = "ref")]
        reference: PathBuf,
        #[arg(long = "syn")]
        synthesized: PathBuf,
        #[arg(long)]
        flow_dir: Option<PathBuf>,
        /// Id used to look up precomputed flow
        #[arg(long, default_value = "score")]
        id: String,
    },
    /// Repeated random-split cross-validation and result files
    Eval {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        cache: PathBuf,
        #[arg(long)]
        folds: Option<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        /// Baseline metric scores (`video_id` plus one column per metric)
        #[arg(long)]
        scores: Option<PathBuf>,
        /// Also write scatter.svg
        #[arg(long)]
        svg: bool,
    },
    /// Rank groups by DMOS and by each metric of a score table
    Rank {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        scores: PathBuf,
        /// higher|lower: which direction of the metric scores means better
        #[arg(long)]
        orientation: String,
        /// mean|median
        #[arg(long, default_value = "mean")]
        statistic: String,
        /// Write CSV here instead of stdout
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Write a synthetic test pair, or a local_warp dataset with --records
    Fixtures {
        #[arg(long)]
        kind: String,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 128)]
        width: usize,
        #[arg(long, default_value_t = 128)]
        height: usize,
        #[arg(long, default_value_t = 20)]
        frames: usize,
        #[arg(long, default_value_t = 4.0)]
        amplitude: f64,
        /// Number of pairs for a local_warp dataset with manifest
        #[arg(long)]
        records: Option<usize>,
    },
}

enum Failure {
    Usage(String),
    Data(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::MissingPath(_) => Failure::Usage(e.to_string()),
            e => Failure::Data(e),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Data(e.into())
    }
}

/// Run with process stdout/stderr. Returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    run_with(args, &mut std::io::stdout(), &mut std::io::stderr())
}

/// 0 on success, 2 on usage errors (including missing inputs), 1 on data errors.
pub fn run_with<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let text = e.render().to_string();
            let _ = if code == 0 { write!(out, "{text}") } else { write!(err, "{text}") };
            return code;
        }
    };
    match dispatch(cli, out, err) {
        Ok(()) => 0,
        Err(Failure::Usage(msg)) => {
            let _ = writeln!(err, "error: {msg}\n\n{}", Cli::command().render_usage());
            2
        }
        Err(Failure::Data(e)) => {
            let _ = writeln!(err, "error: {e}");
            1
        }
    }
}

fn usage(msg: impl Into<String>) -> Failure {
    Failure::Usage(msg.into())
}

fn flow_source(cfg: &Config, dir: Option<PathBuf>) -> Box<dyn FlowEstimator> {
    match dir {
        Some(root) => Box::new(FileFlow {
            root,
            max_flow: cfg.extract.flow.max_flow,
        }),
        None => Box::new(PyramidalLk { cfg: cfg.extract.flow }),
    }
}

fn dispatch(cli: Cli, out: &mut dyn Write, err: &mut dyn Write) -> std::result::Result<(), Failure> {
    let cfg = match &cli.config {
        Some(p) => Config::load(p)?,
        None => Config::default(),
    };
    match cli.cmd {
        Cmd::Extract {
            manifest,
            out: cache_path,
            flow_dir,
        } => {
            let manifest = Manifest::load(&manifest)?;
            let mut cache = FeatureCache::load_or_default(&cache_path)?;
            let ex = Extractor::new(cfg.extract.clone(), flow_source(&cfg, flow_dir));
            ex.extract_manifest(&manifest, &mut cache, cfg.eval.workers)?;
            cache.save(&cache_path)?;
            writeln!(
                out,
                "extracted {} of {} records into {}",
                ex.computed(),
                manifest.entries.len(),
                cache_path.display()
            )?;
        }
        Cmd::Train {
            manifest,
            cache,
            model,
            seed,
        } => {
            let cache_file = cache;
            let manifest = Manifest::load(&manifest)?;
            let cache = FeatureCache::load(&cache_file)?;
            let digest = cfg.extract.digest();
            let records = cv_records(&manifest, &cache, &digest)?;
            let m = train_svr(&records, &cfg)?;
            ModelFile {
                config_digest: hex(&digest),
                seed,
                model: m,
            }
            .save(&model)?;
            writeln!(out, "trained on {} records -> {}", records.len(), model.display())?;
        }
        Cmd::Score {
            model,
            reference,
            synthesized,
            flow_dir,
            id,
        } => {
            let mf = ModelFile::load(&model)?;
            let digest = hex(&cfg.extract.digest());
            if mf.config_digest != digest {
                writeln!(err, "warning: model was trained with different extraction settings")?;
            }
            let r = ingest(&reference, None)?;
            let s = ingest(&synthesized, None)?;
            let ex = Extractor::new(cfg.extract.clone(), flow_source(&cfg, flow_dir));
            let fv = ex.extract(&id, &r, &s)?;
            writeln!(out, "{}", mf.model.predict(&fv.values)?)?;
        }
        Cmd::Eval {
            manifest,
            cache,
            folds,
            seed,
            out: dir,
            scores,
            svg,
        } => {
            let manifest = Manifest::load(&manifest)?;
            let cache = FeatureCache::load(&cache)?;
            let scores = scores.map(|p| ScoreTable::load(&p)).transpose()?;
            let report = evaluate(&manifest, &cache, &cfg, folds, seed, &dir, scores.as_ref(), svg)?;
            let s = &report.summary;
            writeln!(
                out,
                "folds {}: median PCC {:.4}, SCC {:.4}, RMSE {:.4}",
                s.folds, s.pcc_median, s.scc_median, s.rmse_median
            )?;
        }
        Cmd::Rank {
            manifest,
            scores,
            orientation,
            statistic,
            out: dest,
        } => {
            let orientation = Orientation::parse(&orientation)
                .ok_or_else(|| usage(format!("--orientation must be higher or lower, got {orientation:?}")))?;
            let statistic = match statistic.as_str() {
                "mean" => GroupStatistic::Mean,
                "median" => GroupStatistic::Median,
                s => return Err(usage(format!("--statistic must be mean or median, got {s:?}"))),
            };
            let manifest = Manifest::load(&manifest)?;
            let table = ScoreTable::load(&scores)?;
            let dmos: Vec<(String, f64)> = manifest.entries.iter().map(|e| (e.group.clone(), e.dmos)).collect();
            let mut blocks = vec![("dmos".to_string(), rank_groups(&dmos, Orientation::LowerIsBetter, statistic)?)];
            for (c, name) in table.metrics.iter().enumerate() {
                let recs = manifest
                    .entries
                    .iter()
                    .map(|e| Ok((e.group.clone(), table.score(&e.video_id, c)?)))
                    .collect::<Result<Vec<_>>>()?;
                blocks.push((name.clone(), rank_groups(&recs, orientation, statistic)?));
            }
            let view: Vec<(&str, &[_])> = blocks.iter().map(|(n, r)| (n.as_str(), r.as_slice())).collect();
            match dest {
                Some(p) => write_ranking_csv(fs::File::create(p)?, &view)?,
                None => write_ranking_csv(&mut *out, &view)?,
            }
        }
        Cmd::Fixtures {
            kind,
            out: dir,
            seed,
            width,
            height,
            frames,
            amplitude,
            records,
        } => {
            let kind: FixtureKind = kind.parse().map_err(|e: Error| usage(e.to_string()))?;
            let params = FixtureParams {
                width,
                height,
                frames,
                amplitude,
                ..FixtureParams::default()
            };
            if let Some(n) = records {
                if kind != FixtureKind::LocalWarp {
                    return Err(usage("--records is only supported for local_warp"));
                }
                let path = write_warp_dataset(&dir, n, &params, seed)?;
                writeln!(out, "{}", path.display())?;
            } else {
                write_pair(kind, &params, seed, &dir)?;
                writeln!(out, "{}", dir.display())?;
            }
        }
    }
    Ok(())
}

/// `ref.y4m`, `syn.y4m` and `truth.json`; the translating square also gets
/// its exact flow under `flow/` in the precomputed-flow layout.
fn write_pair(kind: FixtureKind, params: &FixtureParams, seed: u64, dir: &Path) -> Result<()> {
    let pair = make_fixture(kind, params, seed)?;
    fs::create_dir_all(dir)?;
    write_y4m(&dir.join("ref.y4m"), &pair.reference)?;
    write_y4m(&dir.join("syn.y4m"), &pair.synthesized)?;
    let t = &pair.truth;
    let truth = serde_json::json!({
        "kind": kind.name(),
        "seed": seed,
        "velocity": t.velocity,
        "shift": t.shift,
        "amplitude": t.amplitude,
        "phase": t.phase,
        "origin": t.origin,
        "size": t.size,
    });
    write_json(&dir.join("truth.json"), &truth)?;
    if kind == FixtureKind::TranslatingSquare {
        let root = dir.join("flow");
        for stream in [Stream::Reference, Stream::Synthesized] {
            for f in 0..params.frames.saturating_sub(1) {
                let p = FileFlow::path_for(&root, kind.name(), stream, f);
                fs::create_dir_all(p.parent().expect("flow path has a parent"))?;
                t.square_flow(f, params.width, params.height).save(&p)?;
            }
        }
    }
    Ok(())
}

fn cv_records(manifest: &Manifest, cache: &FeatureCache, digest: &[u8; 32]) -> Result<Vec<CvRecord>> {
    manifest
        .entries
        .iter()
        .map(|e| {
            let fv = cache.get(&e.video_id, digest).ok_or_else(|| {
                Error::Malformed(format!(
                    "no cached features for {} with the current extraction settings",
                    e.video_id
                ))
            })?;
            Ok(CvRecord {
                id: e.video_id.clone(),
                group: e.group.clone(),
                dmos: e.dmos,
                features: fv.values.clone(),
            })
        })
        .collect()
}

fn train_svr(records: &[CvRecord], cfg: &Config) -> Result<SvrModel> {
    let x: Vec<Vec<f64>> = records.iter().map(|r| r.features.clone()).collect();
    let y: Vec<f64> = records.iter().map(|r| r.dmos).collect();
    let p = if cfg.eval.grid_search {
        grid_search(&x, &y, &cfg.eval.svr)?
    } else {
        cfg.eval.svr
    };
    svr_train(&x, &y, &p)
}

/// Index of the fold whose PCC is closest to the median of the defined
/// fold PCCs; the lowest index wins ties.
fn median_fold(pccs: &[f64], median: f64) -> Option<usize> {
    pccs.iter()
        .enumerate()
        .filter(|(_, p)| p.is_finite())
        .min_by(|a, b| (a.1 - median).abs().total_cmp(&(b.1 - median).abs()).then(a.0.cmp(&b.0)))
        .map(|(i, _)| i)
}

#[allow(clippy::too_many_arguments)]
fn evaluate(
    manifest: &Manifest,
    cache: &FeatureCache,
    cfg: &Config,
    folds: Option<usize>,
    seed: u64,
    dir: &Path,
    scores: Option<&ScoreTable>,
    svg: bool,
) -> Result<EvalReport> {
    let records = cv_records(manifest, cache, &cfg.extract.digest())?;
    let mut cv = cfg.eval.cv(seed);
    if let Some(f) = folds {
        cv.folds = f;
    }
    let outcome = cross_validate(&records, &cv)?;
    fs::create_dir_all(dir)?;
    write_folds_csv(&dir.join("folds.csv"), &outcome.folds)?;

    // The median-PCC fold's model drives the scatter and pairwise analysis.
    let pccs = outcome.fold_pccs();
    let mid = median_fold(&pccs, outcome.summary.pcc_median).unwrap_or(0);
    let train_ids = &outcome.folds[mid].train_ids;
    let train: Vec<CvRecord> = records.iter().filter(|r| train_ids.contains(&r.id)).cloned().collect();
    let model = train_svr(&train, cfg)?;
    let predicted = records
        .iter()
        .map(|r| model.predict(&r.features))
        .collect::<Result<Vec<f64>>>()?;
    let dmos: Vec<f64> = records.iter().map(|r| r.dmos).collect();
    let logistic = fit_logistic(&predicted, &dmos).ok();
    let krasula = manifest
        .stderrs()
        .and_then(|se| krasula_auc(&predicted, &dmos, PairSignificance::StdErr(&se), Orientation::LowerIsBetter).ok());

    let rows: Vec<(String, String, f64, f64)> = records
        .iter()
        .zip(&predicted)
        .map(|(r, p)| (r.id.clone(), r.group.clone(), r.dmos, *p))
        .collect();
    write_scatter_csv(&dir.join("scatter.csv"), &rows)?;
    if svg {
        let pts: Vec<(f64, f64)> = predicted.iter().copied().zip(dmos.iter().copied()).collect();
        fs::write(dir.join("scatter.svg"), scatter_svg(&pts, logistic.as_ref(), "predicted", "DMOS"))?;
    }

    let mut baselines = BTreeMap::new();
    if let Some(table) = scores {
        let mut names = vec!["emvqm".to_string()];
        let mut lists = vec![pccs.clone()];
        for (c, name) in table.metrics.iter().enumerate() {
            let recs = records
                .iter()
                .map(|r| {
                    Ok(CvRecord {
                        features: vec![table.score(&r.id, c)?],
                        ..r.clone()
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            let o = cross_validate(
                &recs,
                &CvConfig {
                    model: FoldModel::Objective { logistic: true },
                    ..cv
                },
            )?;
            baselines.insert(name.clone(), o.summary);
            names.push(name.clone());
            lists.push(o.fold_pccs());
        }
        let m = significance_matrix(&lists, cfg.eval.alpha, cfg.eval.t_test)?;
        write_significance_csv(&dir.join("significance.csv"), &names, &m)?;
    }

    let report = EvalReport {
        seed,
        records: records.len(),
        summary: outcome.summary,
        median_fold: outcome.folds[mid].fold,
        krasula,
        logistic,
        baselines,
    };
    write_json(&dir.join("summary.json"), &report)?;
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn median_fold_picks_closest() {
        assert_eq!(median_fold(&[0.1, f64::NAN, 0.5, 0.9], 0.5), Some(2));
        assert_eq!(median_fold(&[0.4, 0.6], 0.5), Some(0));
        assert_eq!(median_fold(&[f64::NAN], f64::NAN), None);
    }

    #[test]
    fn usage_errors_exit_2() {
        let (mut o, mut e) = (Vec::new(), Vec::new());
        assert_eq!(run_with(["emvqm", "bogus"], &mut o, &mut e), 2);
        assert_eq!(run_with(["emvqm", "--help"], &mut o, &mut e), 0);
        e.clear();
        let code = run_with(
            ["emvqm", "rank", "--manifest", "/nonexistent/m.csv", "--scores", "s.csv", "--orientation", "higher"],
            &mut o,
            &mut e,
        );
        assert_eq!(code, 2);
        assert!(String::from_utf8(e).unwrap().contains("Usage"));
    }
}
