//! `morphlm preprocess`: annotated (or plain) corpus in; train/dev/test
//! token files, vocabulary, frequency dictionaries and a manifest out.

use std::collections::BTreeSet;
use std::fs;
use std::io::{BufReader, BufWriter, Write};
use std::path::PathBuf;

use clap::{Args, ValueEnum};
use log::info;
use morphlm::corpus::{
    count_annotated, count_tokens, read_annotated, write_frequency_dictionary, write_plain,
    AnnotatedSentence, TokenSentence,
};
use morphlm::preprocess::{run_pipeline, sentence_tokens, PreprocessConfig, TokenMode};

use crate::config::{ConfigFile, SplitRatios};
use crate::manifest::Manifest;
use crate::CliError;

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq)]
pub enum FormatArg {
    #[value(name = "annotated-tsv")]
    AnnotatedTsv,
    #[value(name = "plain-tokens")]
    PlainTokens,
}

impl std::str::FromStr for FormatArg {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "annotated-tsv" => Ok(FormatArg::AnnotatedTsv),
            "plain-tokens" => Ok(FormatArg::PlainTokens),
            _ => Err(format!("unknown format `{s}`")),
        }
    }
}

#[derive(Args, Debug)]
pub struct PreprocessArgs {
    /// Input corpus.
    #[arg(long)]
    input: PathBuf,

    /// Input format (annotated-tsv | plain-tokens).
    #[arg(long, value_enum)]
    format: Option<FormatArg>,

    /// Deglutinized stream: lemma + split inflection tokens (default).
    #[arg(long, group = "mode")]
    glf: bool,

    /// Lowercased surface forms.
    #[arg(long, group = "mode")]
    word: bool,

    /// Each word replaced by its full morph code.
    #[arg(long = "full-pos", group = "mode")]
    full_pos: bool,

    /// Deglutinized stream with the lemma replaced by the morph head.
    #[arg(long = "pos-glf", group = "mode")]
    pos_glf: bool,

    /// Frequency threshold: rarer tokens become <unk> (0 disables).
    #[arg(long)]
    threshold: Option<u64>,

    /// Shuffle seed.
    #[arg(long)]
    seed: Option<u64>,

    /// Train,dev,test ratios summing to 1.
    #[arg(long)]
    splits: Option<SplitRatios>,

    /// Remove duplicate sentences (first occurrence wins).
    #[arg(long)]
    dedup: bool,

    /// Comma-separated derivational tag names to split (e.g.
    /// COMPAR,SUPERLAT).
    #[arg(long = "derivational-tags")]
    derivational_tags: Option<String>,

    /// Comma-separated affix tag names to drop entirely.
    #[arg(long = "zero-morpheme-filter")]
    zero_morpheme_filter: Option<String>,

    /// Output directory.
    #[arg(long = "out-dir")]
    out_dir: PathBuf,
}

fn csv_set(csv: &str) -> BTreeSet<String> {
    csv.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(str::to_string)
        .collect()
}

pub fn run(args: PreprocessArgs, file: &ConfigFile, print_config: bool) -> Result<(), CliError> {
    let format = file.resolve(args.format, "format", FormatArg::AnnotatedTsv)?;
    let mode_flag = [
        (args.glf, TokenMode::Glf),
        (args.word, TokenMode::Word),
        (args.full_pos, TokenMode::FullPos),
        (args.pos_glf, TokenMode::PosGlf),
    ]
    .into_iter()
    .find(|(set, _)| *set)
    .map(|(_, m)| m);
    let mode = match mode_flag {
        Some(m) => m,
        None => match file.resolve(None::<String>, "mode", "glf".to_string())?.as_str() {
            "glf" => TokenMode::Glf,
            "word" => TokenMode::Word,
            "full-pos" => TokenMode::FullPos,
            "pos-glf" => TokenMode::PosGlf,
            other => return Err(CliError::Usage(format!("unknown mode `{other}`"))),
        },
    };

    let mut config = PreprocessConfig {
        threshold: file.resolve(args.threshold, "threshold", 0)?,
        shuffle_seed: file.resolve(args.seed, "seed", 0)?,
        split_ratios: file
            .resolve(args.splits, "splits", SplitRatios([0.9, 0.05, 0.05]))?
            .0,
        ..PreprocessConfig::default()
    };
    if let Some(csv) = &args.derivational_tags {
        config.included_derivational_tags = csv_set(csv);
    }
    if let Some(csv) = &args.zero_morpheme_filter {
        config.zero_morpheme_filter = csv_set(csv);
    }
    config
        .validate()
        .map_err(|e| CliError::Usage(e.to_string()))?;

    let mut manifest = Manifest::new("preprocess");
    manifest.config("input", args.input.display());
    manifest.config("format", format!("{format:?}"));
    manifest.config("mode", mode.as_str());
    manifest.config("threshold", config.threshold);
    manifest.config("seed", config.shuffle_seed);
    manifest.config(
        "splits",
        SplitRatios(config.split_ratios),
    );
    manifest.config("dedup", args.dedup);
    manifest.config(
        "derivational_tags",
        config
            .included_derivational_tags
            .iter()
            .cloned()
            .collect::<Vec<_>>()
            .join(","),
    );
    manifest.config(
        "zero_morpheme_filter",
        config
            .zero_morpheme_filter
            .iter()
            .cloned()
            .collect::<Vec<_>>()
            .join(","),
    );
    if print_config {
        print!("{}", manifest.render_config());
        return Ok(());
    }

    manifest.input(&args.input)?;
    fs::create_dir_all(&args.out_dir)?;

    // Read, build frequency dictionaries, map to the token stream.
    let mut dict_files: Vec<PathBuf> = Vec::new();
    let sentences: Vec<TokenSentence> = match format {
        FormatArg::AnnotatedTsv => {
            let reader = BufReader::new(
                fs::File::open(&args.input)
                    .map_err(|e| CliError::Io(format!("{}: {e}", args.input.display())))?,
            );
            let mut annotated: Vec<AnnotatedSentence> = Vec::new();
            for sent in read_annotated(reader) {
                annotated.push(sent?);
            }
            let (surface, lemma) = count_annotated(&annotated);
            for (name, counts) in [("freq_word.tsv", &surface), ("freq_lemma.tsv", &lemma)] {
                let path = args.out_dir.join(name);
                let mut w = BufWriter::new(fs::File::create(&path)?);
                write_frequency_dictionary(counts, &mut w)?;
                w.flush()?;
                dict_files.push(path);
            }
            annotated
                .iter()
                .map(|s| sentence_tokens(s, mode, &config))
                .collect()
        }
        FormatArg::PlainTokens => {
            let sentences = super::read_token_file(&args.input)?;
            let counts = count_tokens(&sentences);
            let path = args.out_dir.join("freq_token.tsv");
            let mut w = BufWriter::new(fs::File::create(&path)?);
            write_frequency_dictionary(&counts, &mut w)?;
            w.flush()?;
            dict_files.push(path);
            sentences
        }
    };
    let n_input = sentences.len();

    let out = run_pipeline(sentences, &config, args.dedup)
        .map_err(|e| CliError::Usage(e.to_string()))?;
    if let Some(stats) = &out.dedup {
        info!(
            "dedup: removed {} of {} sentences ({:.2}%)",
            stats.removed,
            stats.input,
            stats.removed_fraction() * 100.0
        );
    }
    info!(
        "{} sentences in, {}/{}/{} train/dev/test, vocabulary {}",
        n_input,
        out.train.len(),
        out.dev.len(),
        out.test.len(),
        out.vocab.len()
    );

    for (name, part) in [
        ("train.txt", &out.train),
        ("dev.txt", &out.dev),
        ("test.txt", &out.test),
    ] {
        let path = args.out_dir.join(name);
        let mut w = BufWriter::new(fs::File::create(&path)?);
        write_plain(&mut w, part.iter())?;
        w.flush()?;
        manifest.output(&path)?;
    }
    let vocab_path = args.out_dir.join("vocab.txt");
    let mut w = BufWriter::new(fs::File::create(&vocab_path)?);
    out.vocab.write_to(&mut w)?;
    w.flush()?;
    manifest.output(&vocab_path)?;
    for path in &dict_files {
        manifest.output(path)?;
    }

    manifest.write(&args.out_dir.join("manifest.txt"))?;
    Ok(())
}
