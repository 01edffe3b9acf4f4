//! `morphlm train-class`: build a class-model bundle (assignment,
//! emissions, class-sequence ARPA) from an annotated corpus and the
//! preprocessed token corpus it produced.

use std::fs;
use std::io::BufReader;
use std::path::PathBuf;

use clap::Args;
use log::{info, warn};
use morphlm::classlm::{assign_classes, save_bundle, train_class_lm, DEFAULT_ALPHA};
use morphlm::corpus::read_annotated;
use morphlm::kn::{Flavor, TrainConfig, TrainError};
use morphlm::preprocess::{PreprocessConfig, TokenMode};
use morphlm::vocab::Vocabulary;

use crate::config::ConfigFile;
use crate::manifest::Manifest;
use crate::CliError;

use super::train::FlavorArg;

#[derive(Args, Debug)]
pub struct TrainClassArgs {
    /// Annotated TSV corpus providing the POS evidence.
    #[arg(long)]
    annotated: PathBuf,

    /// Preprocessed token corpus (training split).
    #[arg(long)]
    corpus: PathBuf,

    /// Vocabulary of the token corpus.
    #[arg(long)]
    vocab: PathBuf,

    /// Token stream the vocabulary was built with (glf | word).
    #[arg(long)]
    mode: Option<String>,

    /// Class-sequence model order.
    #[arg(long)]
    order: Option<usize>,

    /// Class-sequence model flavor or preset.
    #[arg(long, value_enum)]
    flavor: Option<FlavorArg>,

    /// Add-alpha emission smoothing.
    #[arg(long)]
    alpha: Option<f64>,

    /// Bundle output directory.
    #[arg(long = "out-dir")]
    out_dir: PathBuf,
}

pub fn run(args: TrainClassArgs, file: &ConfigFile, print_config: bool) -> Result<(), CliError> {
    let mode = match file
        .resolve(args.mode, "mode", "glf".to_string())?
        .as_str()
    {
        "glf" => TokenMode::Glf,
        "word" => TokenMode::Word,
        other => {
            return Err(CliError::Usage(format!(
                "class assignment supports modes glf|word, got `{other}`"
            )))
        }
    };
    let order = file.resolve(args.order, "order", 3usize)?;
    let flavor_arg = file.resolve(args.flavor, "flavor", FlavorArg::UnprunedInterpolated)?;
    let alpha = file.resolve(args.alpha, "alpha", DEFAULT_ALPHA)?;

    let mut manifest = Manifest::new("train-class");
    manifest.config("annotated", args.annotated.display());
    manifest.config("corpus", args.corpus.display());
    manifest.config("vocab", args.vocab.display());
    manifest.config("mode", mode.as_str());
    manifest.config("order", order);
    manifest.config("alpha", alpha);

    let mut config = match flavor_arg {
        FlavorArg::Backoff => TrainConfig::unpruned(order, Flavor::Backoff),
        FlavorArg::Interpolated => TrainConfig::unpruned(order, Flavor::Interpolated),
        FlavorArg::SrilmDefault => TrainConfig::srilm_default(order),
        FlavorArg::UnprunedInterpolated => TrainConfig::unpruned_interpolated(order),
    };
    config.order = order;
    manifest.config("flavor", config.flavor.as_str());
    if print_config {
        print!("{}", manifest.render_config());
        return Ok(());
    }

    manifest.input(&args.annotated)?;
    manifest.input(&args.corpus)?;
    manifest.input(&args.vocab)?;

    let vocab = Vocabulary::read_from(BufReader::new(
        fs::File::open(&args.vocab)
            .map_err(|e| CliError::Io(format!("{}: {e}", args.vocab.display())))?,
    ))
    .map_err(|e| CliError::Input(format!("{}: {e}", args.vocab.display())))?;

    let reader = BufReader::new(
        fs::File::open(&args.annotated)
            .map_err(|e| CliError::Io(format!("{}: {e}", args.annotated.display())))?,
    );
    let mut annotated = Vec::new();
    for sent in read_annotated(reader) {
        annotated.push(sent?);
    }
    let corpus = super::read_token_file(&args.corpus)?;

    let pre_cfg = PreprocessConfig::default();
    let (assignment, stats) = assign_classes(&vocab, &annotated, mode, &pre_cfg);
    if stats.uncovered > 0 {
        warn!(
            "{} vocabulary entries never observed in the annotated corpus; assigned to the <unk> class",
            stats.uncovered
        );
    }
    info!(
        "{} classes over {} token types",
        assignment.classes().len(),
        vocab.len()
    );

    let lm = train_class_lm(assignment, &corpus, &vocab, &config, alpha).map_err(|e| match e {
        TrainError::BadConfig(m) => CliError::Usage(m),
        other => CliError::Input(other.to_string()),
    })?;

    save_bundle(&lm, &args.out_dir)?;
    for name in ["assignment.tsv", "emissions.tsv", "transitions.arpa", "manifest.txt"] {
        if name != "manifest.txt" {
            manifest.output(&args.out_dir.join(name))?;
        }
    }
    manifest.write(&args.out_dir.join("run-manifest.txt"))?;
    Ok(())
}
