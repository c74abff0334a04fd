use std::path::PathBuf;

use anyhow::{Context, Result};
use clap::Args;
use emofit::{
    compute_neighborhoods, cosine_distance, load_embeddings, EmbeddingFormat, LoadOptions,
    NeighborScope,
};

#[derive(Args, Debug)]
#[command(group = clap::ArgGroup::new("query").required(true).args(["word", "stats"]))]
pub struct NeighborsArgs {
    #[arg(long, value_name = "PATH")]
    pub input: Option<PathBuf>,
    #[arg(long, value_name = "FORMAT")]
    pub format: Option<EmbeddingFormat>,
    #[arg(long)]
    pub lowercase: bool,
    /// Neighborhood radius in cosine distance, in (0, 2].
    #[arg(long, default_value_t = 0.2)]
    pub radius: f64,
    #[arg(long, default_value_t = 1)]
    pub threads: usize,
    /// Print the neighbors of this word with their distances.
    #[arg(long)]
    pub word: Option<String>,
    /// Print graph statistics for the whole vocabulary.
    #[arg(long)]
    pub stats: bool,
}

pub fn run(args: NeighborsArgs) -> Result<()> {
    let input = args
        .input
        .as_ref()
        .context("missing required flag --input")?;
    let format = args.format.context("missing required flag --format")?;
    if !(args.radius > 0.0 && args.radius <= 2.0) {
        anyhow::bail!("--radius must lie in (0, 2], got {}", args.radius);
    }
    let (space, _) = load_embeddings(
        input,
        format,
        &LoadOptions {
            lowercase: args.lowercase,
        },
    )?;

    if let Some(word) = &args.word {
        let row = space
            .row_of(word)
            .ok_or_else(|| emofit::Error::UnknownWord(word.clone()))?;
        let query = space.vector(row);
        let mut hits: Vec<(f64, &str)> = (0..space.len())
            .filter(|&j| j != row)
            .map(|j| (cosine_distance(query, space.vector(j)), space.token(j)))
            .filter(|&(d, _)| d <= args.radius)
            .collect();
        hits.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(b.1)));
        for (d, token) in hits {
            println!("{}\t{}", token, d);
        }
        return Ok(());
    }

    let graph = compute_neighborhoods(&space, args.radius, &NeighborScope::All, args.threads)?;
    let stats = graph.stats();
    println!("radius\t{}", args.radius);
    println!("nodes\t{}", stats.nodes);
    println!("nodes_with_neighbors\t{}", stats.nodes_with_neighbors);
    println!("edges\t{}", stats.edges);
    for (degree, count) in stats.degree_histogram {
        println!("degree {}\t{}", degree, count);
    }
    Ok(())
}
