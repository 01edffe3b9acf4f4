//! Run manifests: every command that produces files records its fully
//! resolved configuration and the digests of everything it read and wrote,
//! so a run can be reproduced (byte-identically) from the manifest alone.

use std::fmt::Display;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use sha2::{Digest, Sha256};

pub struct Manifest {
    command: &'static str,
    config: Vec<(String, String)>,
    inputs: Vec<(PathBuf, String)>,
    outputs: Vec<(PathBuf, String)>,
    started: Instant,
}

impl Manifest {
    pub fn new(command: &'static str) -> Manifest {
        Manifest {
            command,
            config: Vec::new(),
            inputs: Vec::new(),
            outputs: Vec::new(),
            started: Instant::now(),
        }
    }

    pub fn config(&mut self, key: &str, value: impl Display) {
        self.config.push((key.to_string(), value.to_string()));
    }

    pub fn input(&mut self, path: &Path) -> io::Result<()> {
        let digest = sha256_file(path)?;
        self.inputs.push((path.to_path_buf(), digest));
        Ok(())
    }

    pub fn output(&mut self, path: &Path) -> io::Result<()> {
        let digest = sha256_file(path)?;
        self.outputs.push((path.to_path_buf(), digest));
        Ok(())
    }

    /// Render the resolved configuration (for `--print-config`).
    pub fn render_config(&self) -> String {
        let mut out = format!("command = {}\n", self.command);
        for (k, v) in &self.config {
            out.push_str(&format!("{k} = {v}\n"));
        }
        out
    }

    pub fn write(self, path: &Path) -> io::Result<()> {
        let mut w = io::BufWriter::new(fs::File::create(path)?);
        writeln!(w, "command = {}", self.command)?;
        writeln!(w, "toolkit_version = {}", env!("CARGO_PKG_VERSION"))?;
        writeln!(w, "duration_ms = {}", self.started.elapsed().as_millis())?;
        for (k, v) in &self.config {
            writeln!(w, "config.{k} = {v}")?;
        }
        for (p, d) in &self.inputs {
            writeln!(w, "input.{} = sha256:{d}", p.display())?;
        }
        for (p, d) in &self.outputs {
            writeln!(w, "output.{} = sha256:{d}", p.display())?;
        }
        w.flush()
    }
}

pub fn sha256_file(path: &Path) -> io::Result<String> {
    let mut file = fs::File::open(path)?;
    let mut hasher = Sha256::new();
    io::copy(&mut file, &mut hasher)?;
    Ok(hex(&hasher.finalize()))
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}
