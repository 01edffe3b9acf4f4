//! `morphlm train`: binary count file in, ARPA model out.

use std::fs;
use std::io::{BufReader, BufWriter, Write};
use std::path::PathBuf;

use clap::{Args, ValueEnum};
use log::info;
use morphlm::arpa::write_arpa;
use morphlm::counts::NGramTable;
use morphlm::kn::{train, Flavor, TrainConfig, TrainError};
use morphlm::vocab::Vocabulary;

use crate::config::{ConfigFile, MinCounts};
use crate::manifest::Manifest;
use crate::CliError;

/// `backoff` and `interpolated` are unpruned flavors; the presets
/// `srilm-default` (pruned backoff, min counts 1,1,2,2,…) and
/// `unpruned-interpolated` mirror the two standard configurations.
#[derive(ValueEnum, Clone, Copy, Debug, PartialEq)]
pub enum FlavorArg {
    #[value(name = "backoff")]
    Backoff,
    #[value(name = "interpolated")]
    Interpolated,
    #[value(name = "srilm-default")]
    SrilmDefault,
    #[value(name = "unpruned-interpolated")]
    UnprunedInterpolated,
}

impl std::str::FromStr for FlavorArg {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "backoff" => Ok(FlavorArg::Backoff),
            "interpolated" => Ok(FlavorArg::Interpolated),
            "srilm-default" => Ok(FlavorArg::SrilmDefault),
            "unpruned-interpolated" => Ok(FlavorArg::UnprunedInterpolated),
            _ => Err(format!("unknown flavor `{s}`")),
        }
    }
}

#[derive(Args, Debug)]
pub struct TrainArgs {
    /// Binary count file from `morphlm count`.
    #[arg(long)]
    counts: PathBuf,

    /// Vocabulary the counts were built with.
    #[arg(long)]
    vocab: PathBuf,

    /// Model flavor or preset.
    #[arg(long, value_enum)]
    flavor: Option<FlavorArg>,

    /// Model order (defaults to the count file's order).
    #[arg(long)]
    order: Option<usize>,

    /// Per-order minimum counts, overriding the preset (e.g. 1,1,2).
    #[arg(long = "min-counts")]
    min_counts: Option<MinCounts>,

    /// ARPA output path.
    #[arg(long = "arpa-out")]
    arpa_out: PathBuf,

    /// Optional binary model output (fast-load mirror).
    #[arg(long = "binary-out")]
    binary_out: Option<PathBuf>,
}

pub fn run(args: TrainArgs, file: &ConfigFile, print_config: bool) -> Result<(), CliError> {
    let flavor_arg = file.resolve(args.flavor, "flavor", FlavorArg::SrilmDefault)?;

    let mut manifest = Manifest::new("train");
    manifest.config("counts", args.counts.display());
    manifest.config("vocab", args.vocab.display());

    let reader = BufReader::new(
        fs::File::open(&args.counts)
            .map_err(|e| CliError::Io(format!("{}: {e}", args.counts.display())))?,
    );
    let table = NGramTable::read_from(reader).map_err(|e| match e {
        morphlm::counts::CountError::Io(io) => CliError::Io(io.to_string()),
        other => CliError::Input(other.to_string()),
    })?;
    let vocab = Vocabulary::read_from(BufReader::new(
        fs::File::open(&args.vocab)
            .map_err(|e| CliError::Io(format!("{}: {e}", args.vocab.display())))?,
    ))
    .map_err(|e| CliError::Input(format!("{}: {e}", args.vocab.display())))?;

    let order = file.resolve(args.order, "order", table.order())?;
    let mut config = match flavor_arg {
        FlavorArg::Backoff => TrainConfig::unpruned(order, Flavor::Backoff),
        FlavorArg::Interpolated => TrainConfig::unpruned(order, Flavor::Interpolated),
        FlavorArg::SrilmDefault => TrainConfig::srilm_default(order),
        FlavorArg::UnprunedInterpolated => TrainConfig::unpruned_interpolated(order),
    };
    let preset = MinCounts(config.min_counts.clone());
    config.min_counts = file.resolve(args.min_counts, "min_counts", preset)?.0;

    manifest.config("flavor", config.flavor.as_str());
    manifest.config("order", order);
    manifest.config("min_counts", MinCounts(config.min_counts.clone()));
    manifest.config("arpa_out", args.arpa_out.display());
    if print_config {
        print!("{}", manifest.render_config());
        return Ok(());
    }
    manifest.input(&args.counts)?;
    manifest.input(&args.vocab)?;

    let model = train(&table, &vocab, &config).map_err(|e| match e {
        TrainError::BadConfig(m) => CliError::Usage(m),
        other => CliError::Input(other.to_string()),
    })?;
    for k in 1..=model.order() {
        info!("order {k}: {} grams stored", model.gram_count(k));
    }

    let mut w = BufWriter::new(fs::File::create(&args.arpa_out)?);
    write_arpa(&model, &mut w)?;
    w.flush()?;
    manifest.output(&args.arpa_out)?;
    if let Some(bin) = &args.binary_out {
        let mut w = BufWriter::new(fs::File::create(bin)?);
        model.write_binary(&mut w)?;
        w.flush()?;
        manifest.output(bin)?;
    }
    manifest.write(&args.arpa_out.with_extension("manifest"))?;
    Ok(())
}
