use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use serde::Serialize;
use serde_json::json;

use crate::error::CliError;

/// Output directory plus the list of files written into it.
pub struct Output {
    dir: PathBuf,
    written: Vec<PathBuf>,
    started: SystemTime,
    clock: Instant,
}

fn unix(t: SystemTime) -> f64 {
    t.duration_since(UNIX_EPOCH).map_or(0.0, |d| d.as_secs_f64())
}

impl Output {
    pub fn new(dir: &Path) -> Result<Self, CliError> {
        std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
        let probe = dir.join(".kpzlab-write-test");
        File::create(&probe).map_err(|e| CliError::io(dir, e))?;
        let _ = std::fs::remove_file(&probe);
        Ok(Self { dir: dir.to_path_buf(), written: Vec::new(), started: SystemTime::now(), clock: Instant::now() })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }

    /// Writes `name` through `body`.
    pub fn write_with(
        &mut self,
        name: &str,
        body: impl FnOnce(&mut BufWriter<File>) -> std::io::Result<()>,
    ) -> Result<(), CliError> {
        let path = self.path(name);
        let file = File::create(&path).map_err(|e| CliError::io(&path, e))?;
        let mut w = BufWriter::new(file);
        body(&mut w).and_then(|_| w.flush()).map_err(|e| CliError::io(&path, e))?;
        self.written.push(path);
        Ok(())
    }

    pub fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<(), CliError> {
        let text = serde_json::to_string_pretty(value).expect("serializable");
        self.write_with(name, |w| writeln!(w, "{text}"))
    }

    pub fn write_json_compact<T: Serialize>(&mut self, name: &str, value: &T) -> Result<(), CliError> {
        let text = serde_json::to_string(value).expect("serializable");
        self.write_with(name, |w| writeln!(w, "{text}"))
    }

    pub fn write_text(&mut self, name: &str, text: &str) -> Result<(), CliError> {
        self.write_with(name, |w| w.write_all(text.as_bytes()))
    }

    /// Writes `metadata.json` (wall-clock data kept out of the other files)
    /// and returns the summary printed on stdout.
    pub fn finish(mut self, command: &str, workers: usize) -> Result<serde_json::Value, CliError> {
        let finished = SystemTime::now();
        let host = std::env::var("HOSTNAME")
            .ok()
            .or_else(|| std::fs::read_to_string("/etc/hostname").ok().map(|s| s.trim().to_string()))
            .filter(|s| !s.is_empty());
        let meta = json!({
            "command": command,
            "version": env!("CARGO_PKG_VERSION"),
            "started_unix": unix(self.started),
            "finished_unix": unix(finished),
            "elapsed_seconds": self.clock.elapsed().as_secs_f64(),
            "hostname": host,
            "workers": workers,
        });
        self.write_json("metadata.json", &meta)?;
        let files: Vec<String> = self.written.iter().map(|p| p.display().to_string()).collect();
        Ok(json!({ "command": command, "files": files }))
    }
}
