//! `morphlm eval`: perplexity reports for one model over one or more
//! corpora, optionally interpolated with a class model.

use std::fs;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use clap::{Args, ValueEnum};
use log::info;
use morphlm::arpa::read_arpa;
use morphlm::classlm::{load_bundle, tune_lambda, ClassLM, Interpolated};
use morphlm::eval::{
    cross_evaluate, perplexity, render_records, render_text, EvalReport, ProbSource,
    ReportLayout,
};
use morphlm::kn::NGramModel;

use crate::config::ConfigFile;
use crate::manifest::Manifest;
use crate::CliError;

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq)]
pub enum LayoutArg {
    #[value(name = "by-model")]
    ByModel,
    #[value(name = "by-corpus")]
    ByCorpus,
    #[value(name = "cross-matrix")]
    CrossMatrix,
}

impl std::str::FromStr for LayoutArg {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "by-model" => Ok(LayoutArg::ByModel),
            "by-corpus" => Ok(LayoutArg::ByCorpus),
            "cross-matrix" => Ok(LayoutArg::CrossMatrix),
            _ => Err(format!("unknown layout `{s}`")),
        }
    }
}

impl From<LayoutArg> for ReportLayout {
    fn from(l: LayoutArg) -> Self {
        match l {
            LayoutArg::ByModel => ReportLayout::ByModel,
            LayoutArg::ByCorpus => ReportLayout::ByCorpus,
            LayoutArg::CrossMatrix => ReportLayout::CrossMatrix,
        }
    }
}

#[derive(Args, Debug)]
pub struct EvalArgs {
    /// Model file (ARPA text or binary).
    #[arg(long)]
    model: PathBuf,

    /// Evaluation corpus (repeatable).
    #[arg(long = "corpus", required = true)]
    corpora: Vec<PathBuf>,

    /// Flag the runs as cross-corpus (foreign vocabulary mapped to <unk>).
    #[arg(long)]
    cross: bool,

    /// Class-model bundle directory to interpolate with.
    #[arg(long = "class-model")]
    class_model: Option<PathBuf>,

    /// Interpolation weight of the word model (0..=1).
    #[arg(long)]
    lambda: Option<f64>,

    /// Dev corpus for tuning lambda when --lambda is not given.
    #[arg(long = "tune-dev")]
    tune_dev: Option<PathBuf>,

    /// Write machine-readable records here (plus a manifest).
    #[arg(long)]
    report: Option<PathBuf>,

    /// Text table layout.
    #[arg(long, value_enum)]
    layout: Option<LayoutArg>,

    /// Model identifier in reports (default: model file stem).
    #[arg(long = "model-id")]
    model_id: Option<String>,
}

/// ARPA unless the binary magic matches.
fn load_model(path: &Path) -> Result<NGramModel, CliError> {
    let mut file =
        fs::File::open(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    let mut magic = [0u8; 4];
    let n = file.read(&mut magic)?;
    drop(file);
    if n == 4 && &magic == b"MLMM" {
        let reader = BufReader::new(fs::File::open(path)?);
        NGramModel::read_binary(reader).map_err(|e| match e {
            morphlm::kn::ModelIoError::Io(io) => CliError::Io(io.to_string()),
            other => CliError::Input(format!("{}: {other}", path.display())),
        })
    } else {
        let reader = BufReader::new(fs::File::open(path)?);
        read_arpa(reader).map_err(|e| match e {
            morphlm::arpa::ArpaError::Io(io) => CliError::Io(io.to_string()),
            other => CliError::Input(format!("{}: {other}", path.display())),
        })
    }
}

pub fn run(args: EvalArgs, file: &ConfigFile, print_config: bool) -> Result<(), CliError> {
    let layout: ReportLayout = file.resolve(args.layout, "layout", LayoutArg::ByModel)?.into();
    let lambda = match args.lambda {
        Some(l) => Some(l),
        None => match file.resolve(None::<f64>, "lambda", f64::NAN)? {
            l if l.is_nan() => None,
            l => Some(l),
        },
    };
    if let Some(l) = lambda {
        if !(0.0..=1.0).contains(&l) {
            return Err(CliError::Usage(format!("lambda must be in [0, 1], got {l}")));
        }
    }

    let mut manifest = Manifest::new("eval");
    manifest.config("model", args.model.display());
    for c in &args.corpora {
        manifest.config("corpus", c.display());
    }
    manifest.config("cross", args.cross);
    if let Some(cm) = &args.class_model {
        manifest.config("class_model", cm.display());
    }
    if let Some(l) = lambda {
        manifest.config("lambda", l);
    }
    manifest.config("layout", layout.as_str());
    if print_config {
        print!("{}", manifest.render_config());
        return Ok(());
    }

    manifest.input(&args.model)?;
    let model = load_model(&args.model)?;
    let model_id = args
        .model_id
        .clone()
        .unwrap_or_else(|| super::file_stem(&args.model));

    let class: Option<(ClassLM, f64)> = match &args.class_model {
        None => None,
        Some(dir) => {
            let lm = load_bundle(dir).map_err(|e| match e {
                morphlm::classlm::BundleError::Io(io) => CliError::Io(io.to_string()),
                other => CliError::Input(format!("{}: {other}", dir.display())),
            })?;
            let lambda = match lambda {
                Some(l) => l,
                None => {
                    let dev_path = args.tune_dev.as_ref().ok_or_else(|| {
                        CliError::Usage(
                            "--class-model needs --lambda or --tune-dev".into(),
                        )
                    })?;
                    manifest.input(dev_path)?;
                    let dev = super::read_token_file(dev_path)?;
                    let tuned = tune_lambda(&model, &lm, &dev)
                        .map_err(|e| CliError::Input(e.to_string()))?;
                    info!("tuned lambda = {tuned}");
                    tuned
                }
            };
            Some((lm, lambda))
        }
    };

    let mut reports: Vec<EvalReport> = Vec::new();
    for path in &args.corpora {
        manifest.input(path)?;
        let sentences = super::read_token_file(path)?;
        let corpus_id = super::file_stem(path);
        let evaluate = |m: &dyn ProbSource| {
            if args.cross {
                cross_evaluate(m, &sentences, &model_id, &corpus_id)
            } else {
                perplexity(m, &sentences, &model_id, &corpus_id)
            }
        };
        let report = match &class {
            None => evaluate(&model),
            Some((lm, lambda)) => evaluate(&Interpolated {
                word: &model,
                class: lm,
                lambda: *lambda,
            }),
        }
        .map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
        info!(
            "{} on {}: ppl {:.4} ({} events, {} OOV)",
            report.model, report.corpus, report.perplexity, report.events, report.oov
        );
        reports.push(report);
    }

    print!("{}", render_text(&reports, layout));

    if let Some(report_path) = &args.report {
        let mut w = BufWriter::new(fs::File::create(report_path)?);
        w.write_all(render_records(&reports).as_bytes())?;
        w.flush()?;
        manifest.output(report_path)?;
        manifest.write(&report_path.with_extension("manifest"))?;
    }
    Ok(())
}
