use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{bail, Context, Result};
use clap::Args;
use emofit::geometry::{cache_key, load_neighborhood_cache, save_neighborhood_cache};
use emofit::{
    build_constraints, compute_neighborhoods, load_embeddings, parse_nrc_lexicon, save_embeddings,
    train_with, EmbeddingFormat, EmotionModel, LoadOptions, NeighborScope, TermWeights,
    TrainingConfig, UpdateMode, VspScope,
};

use crate::manifest::{
    input_file, NeighborhoodSummary, Outputs, ResolvedConfig, RunManifest, Timings,
};

#[derive(Args, Debug)]
pub struct RetrofitArgs {
    /// Embedding file to retrofit.
    #[arg(long, value_name = "PATH")]
    pub input: Option<PathBuf>,
    /// Format of the input file: glove or word2vec.
    #[arg(long, value_name = "FORMAT")]
    pub format: Option<EmbeddingFormat>,
    /// Emotion lexicon in word<TAB>emotion<TAB>flag form.
    #[arg(long, value_name = "PATH")]
    pub lexicon: Option<PathBuf>,
    /// Where to write the retrofitted vectors.
    #[arg(long, value_name = "PATH")]
    pub output: Option<PathBuf>,
    /// Output format (defaults to the input format).
    #[arg(long, value_name = "FORMAT")]
    pub output_format: Option<EmbeddingFormat>,
    /// Lowercase embedding tokens on load.
    #[arg(long)]
    pub lowercase: bool,
    #[arg(long, default_value_t = 20)]
    pub epochs: usize,
    #[arg(long = "lr", alias = "learning-rate", default_value_t = 0.05)]
    pub learning_rate: f64,
    /// Neighborhood radius in cosine distance.
    #[arg(long, default_value_t = 0.2)]
    pub radius: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Keep emotion anchor vectors fixed.
    #[arg(long)]
    pub freeze_anchors: bool,
    /// Rows that receive neighborhoods: constrained or all.
    #[arg(long, default_value = "constrained")]
    pub vsp_scope: VspScope,
    #[arg(long, default_value_t = 1)]
    pub threads: usize,
    /// stochastic or full-batch.
    #[arg(long, default_value = "stochastic")]
    pub mode: UpdateMode,
    #[arg(long, default_value_t = 1.0)]
    pub weight_pr: f64,
    #[arg(long, default_value_t = 1.0)]
    pub weight_nr: f64,
    #[arg(long, default_value_t = 1.0)]
    pub weight_vsp: f64,
    /// Per-epoch objective log (CSV).
    #[arg(long, value_name = "PATH")]
    pub log: Option<PathBuf>,
    /// Run manifest (JSON).
    #[arg(long, value_name = "PATH")]
    pub manifest: Option<PathBuf>,
    /// JSON list of opposite emotion pairs replacing the default model.
    #[arg(long, value_name = "PATH")]
    pub emotion_model: Option<PathBuf>,
    /// Binary cache for the neighborhood graph, reused when it matches the input.
    #[arg(long, value_name = "PATH")]
    pub neighbor_cache: Option<PathBuf>,
    /// Write a checkpoint of the vectors every K epochs.
    #[arg(long, value_name = "K")]
    pub checkpoint_every: Option<usize>,
}

fn required<'a, T>(value: &'a Option<T>, flag: &str) -> Result<&'a T> {
    value
        .as_ref()
        .with_context(|| format!("missing required flag --{}", flag))
}

/// Path of the checkpoint written after `epoch`.
pub fn checkpoint_path(output: &Path, epoch: usize) -> PathBuf {
    let mut name = output.as_os_str().to_owned();
    name.push(format!(".epoch{}", epoch));
    PathBuf::from(name)
}

pub fn run(args: RetrofitArgs) -> Result<()> {
    let input = required(&args.input, "input")?;
    let format = *required(&args.format, "format")?;
    let lexicon_path = required(&args.lexicon, "lexicon")?;
    let output = required(&args.output, "output")?;
    let output_format = args.output_format.unwrap_or(format);
    if args.checkpoint_every == Some(0) {
        bail!("--checkpoint-every must be at least 1");
    }

    let config = TrainingConfig {
        epochs: args.epochs,
        learning_rate: args.learning_rate,
        radius: args.radius,
        seed: args.seed,
        freeze_anchors: args.freeze_anchors,
        vsp_scope: args.vsp_scope,
        threads: args.threads,
        mode: args.mode,
        weights: TermWeights {
            pr: args.weight_pr,
            nr: args.weight_nr,
            vsp: args.weight_vsp,
        },
        ..TrainingConfig::default()
    };
    config.validate()?;
    if config.threads > 1 && config.mode == UpdateMode::Stochastic {
        log::info!(
            "stochastic updates with {} threads are not bit-reproducible",
            config.threads
        );
    }

    let mut inputs = vec![
        input_file("embeddings", input)?,
        input_file("lexicon", lexicon_path)?,
    ];
    let model = match &args.emotion_model {
        Some(path) => {
            inputs.push(input_file("emotion_model", path)?);
            EmotionModel::from_json_file(path)?
        }
        None => EmotionModel::plutchik(),
    };

    let mut timings = Timings::default();
    let clock = Instant::now();
    let (space, load_stats) = load_embeddings(
        input,
        format,
        &LoadOptions {
            lowercase: args.lowercase,
        },
    )?;
    timings.load = clock.elapsed().as_millis();
    log::info!(
        "loaded {} vectors of dimension {} from {}",
        space.len(),
        space.dim(),
        input.display()
    );

    let clock = Instant::now();
    let lexicon = parse_nrc_lexicon(lexicon_path)?;
    let constraints = build_constraints(&lexicon, &model, &space)?;
    timings.constraints = clock.elapsed().as_millis();
    let stats = &constraints.stats;
    log::info!(
        "{} attraction and {} repulsion pairs ({} out-of-vocabulary words, {} records without anchors)",
        stats.positive_pairs,
        stats.negative_pairs,
        stats.oov_words,
        stats.missing_anchor_records
    );

    let clock = Instant::now();
    let scope = config.vsp_scope.neighbor_scope(&constraints);
    let rows_in_scope = match &scope {
        NeighborScope::All => space.len(),
        NeighborScope::Rows(rows) => rows.len(),
    };
    let mut cache_hit = false;
    let graph = match &args.neighbor_cache {
        Some(path) => {
            let key = cache_key(&space, config.radius, &scope)?;
            match load_neighborhood_cache(path, &key)? {
                Some(graph) => {
                    cache_hit = true;
                    log::info!("reusing neighborhoods from {}", path.display());
                    graph
                }
                None => {
                    let graph =
                        compute_neighborhoods(&space, config.radius, &scope, config.threads)?;
                    save_neighborhood_cache(&graph, &key, path)?;
                    graph
                }
            }
        }
        None => compute_neighborhoods(&space, config.radius, &scope, config.threads)?,
    };
    timings.neighborhoods = clock.elapsed().as_millis();
    let graph_stats = graph.stats();
    log::info!(
        "{} neighborhood edges over {} rows",
        graph_stats.edges,
        rows_in_scope
    );

    let mut epoch_log = match &args.log {
        Some(path) => {
            let file =
                File::create(path).with_context(|| format!("cannot create {}", path.display()))?;
            let mut w = BufWriter::new(file);
            writeln!(w, "epoch,pr,nr,vsp,total")?;
            Some(w)
        }
        None => None,
    };
    let mut checkpoints = Vec::new();

    let clock = Instant::now();
    let outcome = train_with(&space, &constraints, &graph, &config, |record, matrix| {
        let o = record.objective;
        log::info!(
            "epoch {} total {} (lr {})",
            record.epoch,
            o.total,
            record.learning_rate
        );
        if let Some(w) = epoch_log.as_mut() {
            writeln!(
                w,
                "{},{},{},{},{}",
                record.epoch, o.pr, o.nr, o.vsp, o.total
            )
            .map_err(|e| emofit::Error::io(args.log.as_deref().unwrap_or(Path::new("")), e))?;
        }
        if let Some(k) = args.checkpoint_every {
            if record.epoch % k == 0 && record.epoch < config.epochs {
                let path = checkpoint_path(output, record.epoch);
                let snapshot = space.with_matrix(matrix.mapv(|v| v as f32))?;
                save_embeddings(&snapshot, &path, output_format)?;
                checkpoints.push(path);
            }
        }
        Ok(())
    });
    if let Some(mut w) = epoch_log.take() {
        w.flush()?;
    }
    let outcome = outcome?;
    timings.training = clock.elapsed().as_millis();

    let clock = Instant::now();
    save_embeddings(&outcome.space, output, output_format)?;
    timings.write = clock.elapsed().as_millis();

    let final_objective = outcome.final_objective();
    eprintln!(
        "objective {} -> {} after {} epochs",
        outcome.initial.total, final_objective.total, config.epochs
    );

    if let Some(path) = &args.manifest {
        let manifest = RunManifest {
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            config: ResolvedConfig {
                input_format: format,
                output_format,
                lowercase: args.lowercase,
                normalization: "none (raw vectors)".to_string(),
                emotion_model: model
                    .pairs()
                    .into_iter()
                    .map(|(a, b)| (a.name().to_string(), b.name().to_string()))
                    .collect(),
                checkpoint_every: args.checkpoint_every,
                training: config.clone(),
            },
            inputs,
            outputs: Outputs {
                vectors: output.clone(),
                epoch_log: args.log.clone(),
                checkpoints,
            },
            embeddings: load_stats,
            constraints: constraints.stats.clone(),
            sentiment_rows_dropped: lexicon.sentiment_rows,
            neighborhoods: NeighborhoodSummary {
                radius: config.radius,
                scope: config.vsp_scope.to_string(),
                rows_in_scope,
                cache: args.neighbor_cache.clone(),
                cache_hit,
                graph: graph_stats,
            },
            initial_objective: outcome.initial,
            final_objective,
            epochs: outcome.log.clone(),
            timings_ms: timings,
        };
        manifest.write(path)?;
    }
    Ok(())
}
