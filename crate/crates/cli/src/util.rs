use std::fs::{self, File};
use std::io::{self, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::Result;
use cuneilab::corpus::{parse_conll, parse_monolingual, Corpus, Phrase, TagSet, TaggedPhrase};
use cuneilab::crf::{read_crf, CrfModel, CRF_MAGIC};
use cuneilab::hmm::{read_hmm, HmmModel, HMM_MAGIC};

use crate::config::Config;
use crate::fail::{data, data_msg, usage};

pub const SEED_ENV: &str = "CUNEILAB_SEED";

/// `--seed`, then the config, then `CUNEILAB_SEED`. The chosen seed is
/// echoed to standard error.
pub fn seed(cfg: &Config, flag: &Option<u64>) -> Result<u64> {
    let seed = match cfg.value(flag, "seed")? {
        Some(s) => s,
        None => match std::env::var(SEED_ENV) {
            Ok(v) => v
                .trim()
                .parse()
                .map_err(|_| usage(format!("{SEED_ENV}={v:?} is not an unsigned integer")))?,
            Err(_) => return Err(usage(format!("this command needs --seed (or {SEED_ENV})"))),
        },
    };
    eprintln!("seed {seed}");
    Ok(seed)
}

pub fn tagset(name: &str) -> Result<TagSet> {
    TagSet::by_name(name).ok_or_else(|| usage(format!("unknown tag set {name:?} (pos or ner)")))
}

pub fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| data_msg(path, e))
}

pub fn open(path: &Path) -> Result<BufReader<File>> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| data_msg(path, e))
}

pub fn read_conll(path: &Path, tagset: &TagSet) -> Result<Corpus<TaggedPhrase>> {
    parse_conll(open(path)?, tagset).map_err(|e| data(path, e))
}

pub fn read_lines(path: &Path) -> Result<Corpus<Phrase>> {
    parse_monolingual(open(path)?).map_err(|e| data(path, e))
}

/// Creates `path` (and its parent directories) for writing.
pub fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(|e| data_msg(parent, e))?;
    }
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| data_msg(path, e))
}

/// A file when `--out` is given, standard output otherwise.
pub fn output(path: &Option<PathBuf>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(create(p)?),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

pub fn write_file(path: &Path, contents: &[u8]) -> Result<()> {
    let mut w = create(path)?;
    w.write_all(contents)?;
    w.flush()?;
    Ok(())
}

pub enum Model {
    Crf(CrfModel),
    Hmm(HmmModel),
}

impl Model {
    pub fn tagset(&self) -> &TagSet {
        match self {
            Model::Crf(m) => m.tagset(),
            Model::Hmm(m) => m.tagset(),
        }
    }
}

/// Loads either model kind, chosen by the file's header line.
pub fn load_model(path: &Path) -> Result<Model> {
    let text = read_text(path)?;
    let first = text.lines().next().unwrap_or("");
    if first.starts_with(CRF_MAGIC) {
        Ok(Model::Crf(read_crf(&text).map_err(|e| data(path, e))?))
    } else if first.starts_with(HMM_MAGIC) {
        Ok(Model::Hmm(read_hmm(&text).map_err(|e| data(path, e))?))
    } else {
        Err(data_msg(path, "not a cuneilab model file"))
    }
}
