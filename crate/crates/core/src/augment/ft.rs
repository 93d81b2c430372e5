//! Forward translation over shards with an external line-oriented
//! translator, resumable through a manifest.
//!
//! Layout of the output directory:
//! `shard-NNNN.tsv` (one `SOURCE<TAB>TARGET` file per shard), `merged.tsv`
//! (all finished shards appended in order) and `manifest.txt`.

use std::fmt::Write as _;
use std::fs::{self, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::process::{Command, Stdio};

use sha2::{Digest, Sha256};

use super::AugmentError;
use crate::corpus::{shard, Corpus, ParallelPair, Phrase};

pub const FT_MAGIC: &str = "#cuneilab-ft v1";
pub const FT_MANIFEST: &str = "manifest.txt";
pub const FT_MERGED: &str = "merged.tsv";

/// Program plus arguments. The program reads source lines on stdin and
/// must print exactly one line per input line.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TranslatorCommand {
    pub program: String,
    pub args: Vec<String>,
}

impl TranslatorCommand {
    pub fn new(program: impl Into<String>, args: &[&str]) -> Self {
        TranslatorCommand {
            program: program.into(),
            args: args.iter().map(|s| s.to_string()).collect(),
        }
    }

    /// Recorded in the manifest; a resumed run must use the same command.
    pub fn identity(&self) -> String {
        std::iter::once(self.program.as_str())
            .chain(self.args.iter().map(String::as_str))
            .collect::<Vec<_>>()
            .join(" ")
    }

    fn translate(&self, shard: usize, lines: &[&str]) -> Result<Vec<String>, AugmentError> {
        let mut child = Command::new(&self.program)
            .args(&self.args)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::inherit())
            .spawn()
            .map_err(|_| AugmentError::TranslatorFailed { shard, code: None })?;
        let mut input = String::new();
        for l in lines {
            input.push_str(l);
            input.push('\n');
        }
        let mut stdin = child.stdin.take().expect("piped stdin");
        // A separate writer keeps large shards from deadlocking on full pipes.
        let writer = std::thread::spawn(move || {
            let _ = stdin.write_all(input.as_bytes());
        });
        let output = child.wait_with_output()?;
        let _ = writer.join();
        if !output.status.success() {
            return Err(AugmentError::TranslatorFailed {
                shard,
                code: output.status.code(),
            });
        }
        let text = String::from_utf8_lossy(&output.stdout);
        let translated: Vec<String> = text
            .lines()
            .map(|l| l.trim_end_matches('\r').replace('\t', " "))
            .collect();
        if translated.len() != lines.len() {
            return Err(AugmentError::LineCountMismatch {
                shard,
                expected: lines.len(),
                got: translated.len(),
            });
        }
        Ok(translated)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FtReport {
    pub shards: usize,
    /// Shards translated in this run.
    pub translated: usize,
    /// Shards found complete in the manifest and skipped.
    pub skipped: usize,
    pub pairs: usize,
    pub merged: PathBuf,
    pub manifest: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Eq)]
struct ShardRecord {
    start: usize,
    end: usize,
    merged_end: u64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
struct Manifest {
    translator: String,
    shard_size: usize,
    total_lines: usize,
    input_sha256: String,
    done: Vec<ShardRecord>,
}

impl Manifest {
    fn render(&self) -> String {
        let mut out = format!("{FT_MAGIC}\n");
        let _ = writeln!(out, "translator\t{}", self.translator);
        let _ = writeln!(out, "shard_size\t{}", self.shard_size);
        let _ = writeln!(out, "total_lines\t{}", self.total_lines);
        let _ = writeln!(out, "input_sha256\t{}", self.input_sha256);
        for (i, s) in self.done.iter().enumerate() {
            let _ = writeln!(
                out,
                "shard\t{i}\tstart={}\tend={}\tstatus=done\tmerged_end={}",
                s.start, s.end, s.merged_end
            );
        }
        out
    }

    fn parse(text: &str) -> Result<Self, AugmentError> {
        let bad = |no: usize, why: &str| {
            AugmentError::ManifestMismatch(format!("{FT_MANIFEST} line {no}: {why}"))
        };
        let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
        if lines.next().map(|(_, l)| l) != Some(FT_MAGIC) {
            return Err(bad(1, "missing header"));
        }
        let mut m = Manifest {
            translator: String::new(),
            shard_size: 0,
            total_lines: 0,
            input_sha256: String::new(),
            done: Vec::new(),
        };
        for (no, line) in lines {
            let fields: Vec<&str> = line.split('\t').collect();
            let num = |s: &str| s.parse::<usize>().map_err(|_| bad(no, "bad number"));
            match fields[..] {
                ["translator", v] => m.translator = v.to_string(),
                ["shard_size", v] => m.shard_size = num(v)?,
                ["total_lines", v] => m.total_lines = num(v)?,
                ["input_sha256", v] => m.input_sha256 = v.to_string(),
                ["shard", i, start, end, "status=done", merged_end] => {
                    if num(i)? != m.done.len() {
                        return Err(bad(no, "shards out of order"));
                    }
                    let kv = |s: &str, key: &str| {
                        s.strip_prefix(key)
                            .and_then(|v| v.parse::<u64>().ok())
                            .ok_or_else(|| bad(no, "bad shard record"))
                    };
                    m.done.push(ShardRecord {
                        start: kv(start, "start=")? as usize,
                        end: kv(end, "end=")? as usize,
                        merged_end: kv(merged_end, "merged_end=")?,
                    });
                }
                _ => return Err(bad(no, "unknown record")),
            }
        }
        Ok(m)
    }
}

fn input_digest(corpus: &Corpus<Phrase>) -> String {
    let mut h = Sha256::new();
    for p in corpus {
        h.update(p.source_line.as_bytes());
        h.update(b"\n");
    }
    h.finalize().iter().map(|b| format!("{b:02x}")).collect()
}

fn write_atomic(path: &Path, contents: &str) -> Result<(), AugmentError> {
    let tmp = path.with_extension("tmp");
    fs::write(&tmp, contents)?;
    fs::rename(tmp, path)?;
    Ok(())
}

fn shard_path(out: &Path, i: usize) -> PathBuf {
    out.join(format!("shard-{i:04}.tsv"))
}

/// Targets of a finished shard, checked against the expected sources.
fn read_shard(path: &Path, sources: &[&str]) -> Result<Vec<String>, AugmentError> {
    let file = BufReader::new(fs::File::open(path)?);
    let mut targets = Vec::new();
    for line in file.lines() {
        let line = line?;
        let (src, tgt) = line
            .split_once('\t')
            .ok_or_else(|| AugmentError::ManifestMismatch(format!("{}: bad line", path.display())))?;
        if sources.get(targets.len()) != Some(&src) {
            return Err(AugmentError::ManifestMismatch(format!(
                "{} does not match the input",
                path.display()
            )));
        }
        targets.push(tgt.to_string());
    }
    if targets.len() != sources.len() {
        return Err(AugmentError::ManifestMismatch(format!(
            "{} is incomplete",
            path.display()
        )));
    }
    Ok(targets)
}

/// Translates `corpus` shard by shard, strictly in order.
///
/// After each shard its bitext is written to its own file and appended to
/// the merged file, and the manifest is rewritten. When a manifest from an
/// earlier run with the same translator, shard size and input is present,
/// finished shards are skipped and the merged file is cut back to the end
/// of the last finished shard, so a rerun produces the same bytes.
pub fn ft_orchestrate(
    corpus: &Corpus<Phrase>,
    translator: &TranslatorCommand,
    shard_size: usize,
    out: &Path,
) -> Result<(Corpus<ParallelPair>, FtReport), AugmentError> {
    let shards = shard(corpus, shard_size)?;
    fs::create_dir_all(out)?;
    let manifest_path = out.join(FT_MANIFEST);
    let merged_path = out.join(FT_MERGED);

    let fresh = Manifest {
        translator: translator.identity(),
        shard_size,
        total_lines: corpus.len(),
        input_sha256: input_digest(corpus),
        done: Vec::new(),
    };
    let mut manifest = if manifest_path.exists() {
        let old = Manifest::parse(&fs::read_to_string(&manifest_path)?)?;
        for (what, a, b) in [
            ("translator", &old.translator, &fresh.translator),
            ("input", &old.input_sha256, &fresh.input_sha256),
        ] {
            if a != b {
                return Err(AugmentError::ManifestMismatch(format!("{what} differs")));
            }
        }
        if old.shard_size != shard_size || old.total_lines != corpus.len() {
            return Err(AugmentError::ManifestMismatch("shard layout differs".into()));
        }
        old
    } else {
        fresh
    };

    let keep = manifest.done.last().map_or(0, |s| s.merged_end);
    let merged_len = fs::metadata(&merged_path).map(|m| m.len()).unwrap_or(0);
    if merged_len < keep {
        return Err(AugmentError::ManifestMismatch(format!(
            "{FT_MERGED} is shorter than the manifest records"
        )));
    }
    let merged = OpenOptions::new()
        .create(true)
        .write(true)
        .truncate(false)
        .open(&merged_path)?;
    merged.set_len(keep)?;
    drop(merged);

    let mut pairs = Vec::with_capacity(corpus.len());
    let mut report = FtReport {
        shards: shards.len(),
        translated: 0,
        skipped: 0,
        pairs: 0,
        merged: merged_path.clone(),
        manifest: manifest_path.clone(),
    };
    let mut start = 0;
    for (i, part) in shards.iter().enumerate() {
        let end = start + part.len();
        let sources: Vec<&str> = part.iter().map(|p| p.source_line.as_str()).collect();
        let targets = if let Some(rec) = manifest.done.get(i) {
            if rec.start != start || rec.end != end {
                return Err(AugmentError::ManifestMismatch(format!("shard {i} boundaries differ")));
            }
            report.skipped += 1;
            read_shard(&shard_path(out, i), &sources)?
        } else {
            let targets = translator.translate(i, &sources)?;
            let mut block = String::new();
            for (s, t) in sources.iter().zip(&targets) {
                block.push_str(s);
                block.push('\t');
                block.push_str(t);
                block.push('\n');
            }
            write_atomic(&shard_path(out, i), &block)?;
            let mut merged = OpenOptions::new().append(true).open(&merged_path)?;
            merged.write_all(block.as_bytes())?;
            merged.sync_data()?;
            let merged_end = merged.metadata()?.len();
            manifest.done.push(ShardRecord {
                start,
                end,
                merged_end,
            });
            write_atomic(&manifest_path, &manifest.render())?;
            report.translated += 1;
            targets
        };
        for (p, t) in part.iter().zip(targets) {
            pairs.push(ParallelPair::new(p.clone(), t)?);
        }
        start = end;
    }
    if manifest.done.is_empty() {
        // empty input: still leave a manifest behind
        write_atomic(&manifest_path, &manifest.render())?;
    }
    report.pairs = pairs.len();
    Ok((Corpus::new(corpus.config, pairs), report))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn manifest_round_trip() {
        let m = Manifest {
            translator: "cat -u".into(),
            shard_size: 5,
            total_lines: 10,
            input_sha256: "ab".into(),
            done: vec![ShardRecord {
                start: 0,
                end: 5,
                merged_end: 40,
            }],
        };
        assert_eq!(Manifest::parse(&m.render()).unwrap(), m);
        assert!(Manifest::parse("nope\n").is_err());
    }

    #[test]
    fn identity_string() {
        assert_eq!(TranslatorCommand::new("sh", &["-c", "cat"]).identity(), "sh -c cat");
    }
}
