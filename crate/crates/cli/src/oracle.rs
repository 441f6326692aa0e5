use std::io::Write;
use std::process::{Command, Stdio};
use std::thread;

use isea_core::cpa::EncryptionOracle;
use isea_core::imgio::{read_pgm, write_pgm};
use isea_core::{Error, GrayImage, Result};

/// Oracle backed by a shell command: one process per query, PGM in on
/// stdin, PGM out on stdout.
pub struct CommandOracle {
    cmd: String,
    queries: usize,
}

impl CommandOracle {
    pub fn new(cmd: String) -> Self {
        CommandOracle { cmd, queries: 0 }
    }

    pub fn queries(&self) -> usize {
        self.queries
    }
}

impl EncryptionOracle for CommandOracle {
    fn query(&mut self, plain: &GrayImage) -> Result<GrayImage> {
        self.queries += 1;
        let mut child = Command::new("sh")
            .arg("-c")
            .arg(&self.cmd)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::piped())
            .spawn()
            .map_err(|e| Error::Protocol(format!("spawn {:?}: {e}", self.cmd)))?;
        let mut stdin = child.stdin.take().expect("piped stdin");
        let input = write_pgm(plain);
        // Writer thread so a command that emits output before draining its
        // input cannot deadlock against us.
        let writer = thread::spawn(move || stdin.write_all(&input));
        let output = child
            .wait_with_output()
            .map_err(|e| Error::Protocol(format!("waiting for oracle: {e}")))?;
        // A broken pipe just means the command stopped reading; its exit
        // status decides.
        let _ = writer.join();
        if !output.status.success() {
            let err = String::from_utf8_lossy(&output.stderr);
            let mut msg = format!("query {} exited with {}", self.queries, output.status);
            if let Some(line) = err.lines().map(str::trim).find(|l| !l.is_empty()) {
                msg.push_str(": ");
                msg.push_str(line);
            }
            return Err(Error::Protocol(msg));
        }
        read_pgm(&output.stdout).map_err(|e| Error::Protocol(format!("query {} response: {e}", self.queries)))
    }
}
