//! `morphlm count`: token files (shards) in, one binary count file out;
//! `--merge` folds existing count files instead.

use std::fs;
use std::io::{BufReader, BufWriter, Write};
use std::path::PathBuf;

use clap::Args;
use log::info;
use morphlm::counts::{count_ngrams, merge_tables, CountError, NGramTable};
use morphlm::vocab::Vocabulary;
use rayon::prelude::*;

use crate::config::ConfigFile;
use crate::manifest::Manifest;
use crate::CliError;

#[derive(Args, Debug)]
pub struct CountArgs {
    /// Token files to count (shards), or binary count files with --merge.
    #[arg(required = true)]
    inputs: Vec<PathBuf>,

    /// Vocabulary file (required unless --merge).
    #[arg(long)]
    vocab: Option<PathBuf>,

    /// Highest n-gram order to count.
    #[arg(long)]
    order: Option<usize>,

    /// Merge binary count files instead of counting text.
    #[arg(long)]
    merge: bool,

    /// Output count file.
    #[arg(long)]
    out: PathBuf,
}

fn from_count_error(e: CountError) -> CliError {
    match e {
        CountError::Io(io) => CliError::Io(io.to_string()),
        other => CliError::Input(other.to_string()),
    }
}

pub fn run(args: CountArgs, file: &ConfigFile, print_config: bool) -> Result<(), CliError> {
    let order = file.resolve(args.order, "order", 3usize)?;

    let mut manifest = Manifest::new("count");
    manifest.config("merge", args.merge);
    if !args.merge {
        manifest.config("order", order);
    }
    for input in &args.inputs {
        manifest.config("input", input.display());
    }
    if let Some(v) = &args.vocab {
        manifest.config("vocab", v.display());
    }
    if print_config {
        print!("{}", manifest.render_config());
        return Ok(());
    }

    let table: NGramTable = if args.merge {
        let mut merged: Option<NGramTable> = None;
        for path in &args.inputs {
            manifest.input(path)?;
            let reader = BufReader::new(
                fs::File::open(path)
                    .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?,
            );
            let t = NGramTable::read_from(reader).map_err(from_count_error)?;
            merged = Some(match merged {
                None => t,
                Some(m) => merge_tables(&m, &t).map_err(from_count_error)?,
            });
        }
        merged.ok_or_else(|| CliError::Usage("no inputs".into()))?
    } else {
        let vocab_path = args
            .vocab
            .as_ref()
            .ok_or_else(|| CliError::Usage("--vocab is required when counting".into()))?;
        manifest.input(vocab_path)?;
        let vocab = Vocabulary::read_from(BufReader::new(
            fs::File::open(vocab_path)
                .map_err(|e| CliError::Io(format!("{}: {e}", vocab_path.display())))?,
        ))
        .map_err(|e| CliError::Input(format!("{}: {e}", vocab_path.display())))?;

        for path in &args.inputs {
            manifest.input(path)?;
        }
        // Shards count independently and merge pairwise; input order fixes
        // the merge order, so results do not depend on scheduling.
        let shards: Vec<NGramTable> = args
            .inputs
            .par_iter()
            .map(|path| {
                let sentences = super::read_token_file(path)?;
                count_ngrams(&sentences, order, &vocab).map_err(|e| match e {
                    CountError::UnknownToken { token } => CliError::Input(format!(
                        "{}: token `{token}` not in vocabulary",
                        path.display()
                    )),
                    other => from_count_error(other),
                })
            })
            .collect::<Result<_, _>>()?;
        let mut merged: Option<NGramTable> = None;
        for t in shards {
            merged = Some(match merged {
                None => t,
                Some(m) => merge_tables(&m, &t).map_err(from_count_error)?,
            });
        }
        merged.ok_or_else(|| CliError::Usage("no inputs".into()))?
    };

    if table.total_events() == 0 {
        return Err(CliError::Input("no sentences counted".into()));
    }
    for k in 1..=table.order() {
        info!("order {k}: {} gram types", table.gram_count(k));
    }

    let mut w = BufWriter::new(fs::File::create(&args.out)?);
    table.write_to(&mut w)?;
    w.flush()?;
    manifest.output(&args.out)?;
    manifest.write(&args.out.with_extension("manifest"))?;
    Ok(())
}
