pub mod count;
pub mod eval;
pub mod preprocess;
pub mod train;
pub mod train_class;

use std::path::Path;

use morphlm::corpus::{CorpusError, TokenSentence};

use crate::CliError;

impl From<CorpusError> for CliError {
    fn from(e: CorpusError) -> Self {
        match e {
            CorpusError::Io(io) => CliError::Io(io.to_string()),
            other => CliError::Input(other.to_string()),
        }
    }
}

/// Read a plain-tokens corpus file fully into memory.
pub fn read_token_file(path: &Path) -> Result<Vec<TokenSentence>, CliError> {
    let file = std::fs::File::open(path)
        .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    let reader = std::io::BufReader::new(file);
    let mut sentences = Vec::new();
    for sent in morphlm::corpus::read_plain(reader) {
        sentences.push(sent.map_err(|e| match e {
            CorpusError::Io(io) => CliError::Io(format!("{}: {io}", path.display())),
            other => CliError::Input(format!("{}: {other}", path.display())),
        })?);
    }
    Ok(sentences)
}

/// Identifier for reports: the file stem.
pub fn file_stem(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| path.display().to_string())
}
