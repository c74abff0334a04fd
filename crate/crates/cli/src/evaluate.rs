use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::Args;
use emofit::eval::evaluate_space;
use emofit::{
    evaluate, load_embeddings, EmbeddingFormat, EmotionTaxonomy, LoadOptions, TaxonomyOptions,
};

#[derive(Args, Debug)]
pub struct EvaluateArgs {
    /// Vectors before retrofitting.
    #[arg(long, value_name = "PATH")]
    pub before: Option<PathBuf>,
    /// Vectors after retrofitting.
    #[arg(long, value_name = "PATH")]
    pub after: Option<PathBuf>,
    /// A single space to score on its own.
    #[arg(long, value_name = "PATH", conflicts_with_all = ["before", "after"])]
    pub vectors: Option<PathBuf>,
    /// Format of every vector file: glove or word2vec.
    #[arg(long, value_name = "FORMAT")]
    pub format: Option<EmbeddingFormat>,
    /// Lowercase embedding tokens on load.
    #[arg(long)]
    pub lowercase: bool,
    /// Taxonomy JSON ({"Love": [...], ...}); defaults to the built-in table.
    #[arg(long, value_name = "PATH")]
    pub taxonomy: Option<PathBuf>,
    /// Match taxonomy words case-sensitively instead of lowercasing them.
    #[arg(long)]
    pub keep_case: bool,
    /// Model name recorded in the report.
    #[arg(long, default_value = "embeddings")]
    pub model: String,
    /// Report JSON output.
    #[arg(long, value_name = "PATH")]
    pub report: Option<PathBuf>,
    /// Optional CSV with one row per metric.
    #[arg(long, value_name = "PATH")]
    pub csv: Option<PathBuf>,
}

pub fn run(args: EvaluateArgs) -> Result<()> {
    let format = args.format.context("missing required flag --format")?;
    let options = TaxonomyOptions {
        lowercase: !args.keep_case,
    };
    let taxonomy = match &args.taxonomy {
        Some(path) => EmotionTaxonomy::from_json_file(path, &options)?,
        None => EmotionTaxonomy::builtin(&options),
    };
    for entry in &taxonomy.dropped {
        log::info!("taxonomy entry dropped: {}", entry);
    }
    let load = LoadOptions {
        lowercase: args.lowercase,
    };

    if let Some(path) = &args.vectors {
        if args.csv.is_some() {
            bail!("--csv needs --before and --after");
        }
        let (space, _) = load_embeddings(path, format, &load)?;
        let report = evaluate_space(&space, &taxonomy, &args.model)?;
        let ic = &report.in_category;
        println!("{:<28} {:>10}", "metric", "value");
        for (name, score) in &ic.categories {
            println!(
                "{:<28} {:>10}",
                format!("in-category {}", name),
                fmt_opt(score.mean_similarity)
            );
        }
        println!(
            "{:<28} {:>10}",
            "in-category (pairs)",
            fmt_opt(ic.pair_weighted)
        );
        println!(
            "{:<28} {:>10}",
            "in-category (categories)",
            fmt_opt(ic.category_weighted)
        );
        for (label, value) in &report.opposite {
            println!("{:<28} {:>10.4}", label, value);
        }
        if let Some(out) = &args.report {
            write_json(out, &report)?;
        }
        return Ok(());
    }

    let (Some(before_path), Some(after_path)) = (&args.before, &args.after) else {
        bail!("missing required flags: pass --before and --after, or --vectors");
    };
    let (before, _) = load_embeddings(before_path, format, &load)?;
    let (after, _) = load_embeddings(after_path, format, &load)?;
    let evaluation = evaluate(&before, &after, &taxonomy, &args.model)?;
    print!("{}", evaluation.render_table());
    if let Some(out) = &args.report {
        write_json(out, &evaluation)?;
    }
    if let Some(out) = &args.csv {
        std::fs::write(out, evaluation.to_csv())
            .with_context(|| format!("cannot write {}", out.display()))?;
    }
    Ok(())
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|v| format!("{:.4}", v))
        .unwrap_or_else(|| "n/a".into())
}

fn write_json<T: serde::Serialize>(path: &std::path::Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    std::fs::write(path, text + "\n").with_context(|| format!("cannot write {}", path.display()))
}
