use std::fs;
use std::io::Write;
use std::path::Path;

use indexmap::IndexSet;

use super::{CrfError, CrfModel, FeatureTemplate};
use crate::corpus::TagSet;
use crate::util::{join_floats, parse_floats};

pub const CRF_MAGIC: &str = "#cuneilab-crf v1";

/// Writes the model as text: tag set, prior, templates, then one line per
/// feature (in id order) with its per-tag weights, then transition rows.
pub fn write_crf<W: Write>(model: &CrfModel, mut w: W) -> Result<(), CrfError> {
    let n = model.n_tags();
    writeln!(w, "{CRF_MAGIC}")?;
    writeln!(w, "tagset\t{}", model.tagset.to_line())?;
    writeln!(w, "l2_sigma2\t{}", model.l2_sigma2)?;
    for t in &model.templates {
        writeln!(w, "template\t{}", t.to_record())?;
    }
    for (id, name) in model.features.iter().enumerate() {
        writeln!(
            w,
            "feature\t{name}\t{}",
            join_floats(&model.weights[id * n..(id + 1) * n])
        )?;
    }
    let trans = model.transitions();
    for from in 0..n {
        writeln!(
            w,
            "transition\t{from}\t{}",
            join_floats(&trans[from * n..(from + 1) * n])
        )?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_crf(text: &str) -> Result<CrfModel, CrfError> {
    let fail = |line: usize, reason: &str| CrfError::Format {
        line,
        reason: reason.to_string(),
    };
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
    match lines.next() {
        Some((_, l)) if l == CRF_MAGIC => {}
        _ => return Err(fail(1, "missing #cuneilab-crf v1 header")),
    }
    let mut tagset: Option<TagSet> = None;
    let mut sigma2 = None;
    let mut templates = Vec::new();
    let mut features = IndexSet::new();
    let mut state = Vec::new();
    let mut transition: Vec<f64> = Vec::new();
    let mut rows = 0;

    for (no, line) in lines {
        let (key, rest) = line.split_once('\t').ok_or_else(|| fail(no, "missing tab"))?;
        match key {
            "tagset" => tagset = Some(TagSet::from_line(rest).map_err(|e| fail(no, &e))?),
            "l2_sigma2" => {
                sigma2 = Some(rest.parse::<f64>().map_err(|_| fail(no, "bad l2_sigma2"))?)
            }
            "template" => {
                templates.push(FeatureTemplate::from_record(rest).map_err(|e| fail(no, &e))?)
            }
            "feature" | "transition" => {
                let n = tagset.as_ref().ok_or_else(|| fail(no, "tagset must come first"))?.len();
                let (head, values) = rest.rsplit_once('\t').ok_or_else(|| fail(no, "missing tab"))?;
                let values = parse_floats(values).map_err(|e| fail(no, &e))?;
                if values.len() != n {
                    return Err(fail(no, "weight row length does not match the tag set"));
                }
                if key == "feature" {
                    if !transition.is_empty() {
                        return Err(fail(no, "feature after transition rows"));
                    }
                    if !features.insert(head.to_string()) {
                        return Err(fail(no, "duplicate feature"));
                    }
                    state.extend(values);
                } else {
                    if head.parse::<usize>().ok() != Some(rows) {
                        return Err(fail(no, "transition rows out of order"));
                    }
                    rows += 1;
                    transition.extend(values);
                }
            }
            _ => return Err(fail(no, "unknown record")),
        }
    }
    let tagset = tagset.ok_or_else(|| fail(0, "missing tagset"))?;
    if rows != tagset.len() {
        return Err(fail(0, "missing transition rows"));
    }
    let sigma2 = sigma2.ok_or_else(|| fail(0, "missing l2_sigma2"))?;
    let mut model = CrfModel::new(tagset, templates, features, sigma2)?;
    state.extend(transition);
    model.set_weights(state)?;
    Ok(model)
}

pub fn save_crf(model: &CrfModel, path: impl AsRef<Path>) -> Result<(), CrfError> {
    let mut buf = Vec::new();
    write_crf(model, &mut buf)?;
    fs::write(path, buf)?;
    Ok(())
}

pub fn load_crf(path: impl AsRef<Path>) -> Result<CrfModel, CrfError> {
    read_crf(&fs::read_to_string(path)?)
}
