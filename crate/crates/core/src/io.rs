//! File formats: embedding sets (CSV and binary), pair protocols (LFW
//! `pairs.txt`, YTF `splits.txt`-style CSV, and a plain CSV), binary maps, and
//! JSON/CSV reports. Every writer goes through [`write_atomic`].

use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use nalgebra::DMatrix;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::experiments::{RankCurve, SensitivityCurve};
use crate::types::{EmbeddingSet, Fold, Label, LinearMap, Pair, PairProtocol};

const EMBEDDING_MAGIC: &[u8; 8] = b"EMBSET\0\0";
const EMBEDDING_VERSION: u32 = 1;
const MAP_MAGIC: &[u8; 8] = b"LINMAP\0\0";
const MAP_VERSION: u32 = 1;
pub const REPORT_VERSION: u32 = 1;

/// Writes `bytes` to a temporary file next to `path`, then renames it into place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| Error::io(dir, e))?;
    tmp.write_all(bytes).map_err(|e| Error::io(path, e))?;
    tmp.as_file().sync_all().map_err(|e| Error::io(path, e))?;
    #[cfg(unix)]
    {
        use std::os::unix::fs::PermissionsExt;
        // tempfile creates 0600
        fs::set_permissions(tmp.path(), fs::Permissions::from_mode(0o644))
            .map_err(|e| Error::io(path, e))?;
    }
    tmp.persist(path).map_err(|e| Error::io(path, e.error))?;
    Ok(())
}

fn read_bytes(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).map_err(|e| Error::io(path, e))
}

fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

fn extension(path: &Path) -> String {
    path.extension()
        .and_then(|e| e.to_str())
        .unwrap_or("")
        .to_ascii_lowercase()
}

fn parse_err(path: &Path, line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        path: path.to_path_buf(),
        line,
        message: message.into(),
    }
}

fn format_err(path: &Path, message: impl Into<String>) -> Error {
    Error::Format {
        path: path.to_path_buf(),
        message: message.into(),
    }
}

// ---------------------------------------------------------------------------
// embeddings

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EmbeddingFormat {
    Csv,
    Binary,
}

impl EmbeddingFormat {
    /// `.csv` is text; `.bin` and `.emb` are binary.
    pub fn from_path(path: &Path) -> Result<Self> {
        match extension(path).as_str() {
            "csv" => Ok(Self::Csv),
            "bin" | "emb" => Ok(Self::Binary),
            other => Err(format_err(
                path,
                format!("unknown embedding file extension {other:?} (use .csv, .bin or .emb)"),
            )),
        }
    }
}

/// Reads an embedding set; the format follows the file extension. CSV files
/// take their system tag from the file stem.
pub fn read_embeddings(path: impl AsRef<Path>) -> Result<EmbeddingSet> {
    let path = path.as_ref();
    match EmbeddingFormat::from_path(path)? {
        EmbeddingFormat::Csv => read_embeddings_csv(path),
        EmbeddingFormat::Binary => read_embeddings_binary(path),
    }
}

pub fn write_embeddings(set: &EmbeddingSet, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let bytes = match EmbeddingFormat::from_path(path)? {
        EmbeddingFormat::Csv => embeddings_csv(set)?.into_bytes(),
        EmbeddingFormat::Binary => embeddings_binary(set),
    };
    write_atomic(path, &bytes)
}

fn file_stem(path: &Path) -> String {
    path.file_stem()
        .and_then(|s| s.to_str())
        .unwrap_or("")
        .to_string()
}

fn check_id(id: &str, forbidden: &[char]) -> Result<()> {
    if id.is_empty() || id.contains(forbidden) || id.trim() != id {
        return Err(Error::protocol(format!(
            "entity id {id:?} cannot be written (empty, padded, or contains one of {forbidden:?})"
        )));
    }
    Ok(())
}

fn embeddings_csv(set: &EmbeddingSet) -> Result<String> {
    let mut out = String::from("id");
    for i in 0..set.dim() {
        let _ = write!(out, ",v{i}");
    }
    out.push('\n');
    for (id, v) in set.iter() {
        check_id(id, &[',', '\n', '\r', '"'])?;
        out.push_str(id);
        for x in v {
            // 17 significant digits: exact f64 round trip
            let _ = write!(out, ",{x:.16e}");
        }
        out.push('\n');
    }
    Ok(out)
}

fn read_embeddings_csv(path: &Path) -> Result<EmbeddingSet> {
    let text = read_text(path)?;
    let mut lines = text
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty());
    let Some((_, header)) = lines.next() else {
        return Err(Error::protocol(format!("{}: no entries", path.display())));
    };
    let columns: Vec<&str> = header.split(',').map(str::trim).collect();
    if columns[0] != "id" {
        return Err(parse_err(path, 1, "header must start with \"id\""));
    }
    for (i, c) in columns[1..].iter().enumerate() {
        if *c != format!("v{i}") {
            return Err(parse_err(
                path,
                1,
                format!("header column {} is {c:?}, expected \"v{i}\"", i + 1),
            ));
        }
    }
    let dim = columns.len() - 1;
    if dim == 0 {
        return Err(parse_err(path, 1, "header declares no value columns"));
    }
    let mut set = EmbeddingSet::new(dim, file_stem(path))?;
    let mut row = Vec::with_capacity(dim);
    for (idx, line) in lines {
        let line_no = idx + 1;
        let mut fields = line.split(',');
        let id = fields.next().unwrap_or("").trim();
        row.clear();
        for f in fields {
            let value: f64 = f
                .trim()
                .parse()
                .map_err(|_| parse_err(path, line_no, format!("non-numeric value {f:?}")))?;
            row.push(value);
        }
        if row.len() != dim {
            return Err(parse_err(
                path,
                line_no,
                format!("row has {} values, expected {dim}", row.len()),
            ));
        }
        set.insert(id, &row).map_err(|e| match e {
            Error::Protocol(msg) if msg.starts_with("duplicate") => {
                Error::protocol(format!("{}:{line_no}: {msg}", path.display()))
            }
            Error::Protocol(msg) => parse_err(path, line_no, msg),
            other => other,
        })?;
    }
    if set.is_empty() {
        return Err(Error::protocol(format!("{}: no entries", path.display())));
    }
    Ok(set)
}

fn put_str(buf: &mut Vec<u8>, s: &str) {
    buf.extend_from_slice(&(s.len() as u32).to_le_bytes());
    buf.extend_from_slice(s.as_bytes());
}

fn embeddings_binary(set: &EmbeddingSet) -> Vec<u8> {
    let mut buf = Vec::with_capacity(32 + set.len() * (set.dim() * 8 + 16));
    buf.extend_from_slice(EMBEDDING_MAGIC);
    buf.extend_from_slice(&EMBEDDING_VERSION.to_le_bytes());
    buf.extend_from_slice(&(set.dim() as u64).to_le_bytes());
    buf.extend_from_slice(&(set.len() as u64).to_le_bytes());
    put_str(&mut buf, set.system_tag());
    for id in set.ids() {
        put_str(&mut buf, id);
    }
    for (_, v) in set.iter() {
        for x in v {
            buf.extend_from_slice(&x.to_le_bytes());
        }
    }
    buf
}

/// Bounds-checked little-endian reader; running off the end is a format error.
struct Reader<'a> {
    path: &'a Path,
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn new(path: &'a Path, bytes: &'a [u8]) -> Self {
        Self {
            path,
            bytes,
            pos: 0,
        }
    }

    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|&e| e <= self.bytes.len())
            .ok_or_else(|| format_err(self.path, format!("truncated at byte {}", self.pos)))?;
        let out = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(out)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn size(&mut self) -> Result<usize> {
        let v = self.u64()?;
        usize::try_from(v).map_err(|_| format_err(self.path, format!("size {v} too large")))
    }

    fn string(&mut self) -> Result<String> {
        let len = self.u32()? as usize;
        let raw = self.take(len)?;
        String::from_utf8(raw.to_vec())
            .map_err(|_| format_err(self.path, "string field is not valid UTF-8"))
    }

    fn header(&mut self, magic: &[u8; 8], supported: u32) -> Result<()> {
        let found = self
            .take(8)
            .map_err(|_| format_err(self.path, "file too short for header"))?;
        if found != magic {
            return Err(format_err(
                self.path,
                format!("bad magic bytes {found:?}, expected {magic:?}"),
            ));
        }
        let version = self.u32()?;
        if version != supported {
            return Err(Error::Incompatible {
                path: self.path.to_path_buf(),
                found: version,
                supported,
            });
        }
        Ok(())
    }

    fn finish(&self) -> Result<()> {
        if self.pos != self.bytes.len() {
            return Err(format_err(
                self.path,
                format!("{} trailing bytes", self.bytes.len() - self.pos),
            ));
        }
        Ok(())
    }

    /// `count` f64 values, guarding the allocation against corrupted counts.
    fn f64s(&mut self, count: usize) -> Result<Vec<f64>> {
        let bytes = count
            .checked_mul(8)
            .ok_or_else(|| format_err(self.path, "value count overflows"))?;
        let raw = self.take(bytes)?;
        Ok(raw
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect())
    }
}

fn read_embeddings_binary(path: &Path) -> Result<EmbeddingSet> {
    let bytes = read_bytes(path)?;
    let mut r = Reader::new(path, &bytes);
    r.header(EMBEDDING_MAGIC, EMBEDDING_VERSION)?;
    let dim = r.size()?;
    let n = r.size()?;
    let tag = r.string()?;
    if n == 0 {
        return Err(Error::protocol(format!("{}: no entries", path.display())));
    }
    let mut ids = Vec::new();
    for _ in 0..n {
        ids.push(r.string()?);
    }
    let values = r.f64s(
        n.checked_mul(dim)
            .ok_or_else(|| format_err(path, "entry count overflows"))?,
    )?;
    r.finish()?;
    let mut set = EmbeddingSet::new(dim, tag)?;
    for (i, id) in ids.into_iter().enumerate() {
        set.insert(id, &values[i * dim..(i + 1) * dim])?;
    }
    Ok(set)
}

// ---------------------------------------------------------------------------
// pair protocols

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PairFormat {
    /// `.txt` is LFW; `.csv` is YTF when its header starts with "split number", plain otherwise.
    Auto,
    Lfw,
    Ytf,
    Csv,
}

impl std::str::FromStr for PairFormat {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "auto" => Ok(Self::Auto),
            "lfw" => Ok(Self::Lfw),
            "ytf" => Ok(Self::Ytf),
            "csv" => Ok(Self::Csv),
            other => Err(format!(
                "unknown pair format {other:?} (auto, lfw, ytf, csv)"
            )),
        }
    }
}

pub fn read_pairs(path: impl AsRef<Path>, format: PairFormat) -> Result<PairProtocol> {
    let path = path.as_ref();
    match format {
        PairFormat::Lfw => read_pairs_lfw(path),
        PairFormat::Ytf => read_pairs_ytf(path),
        PairFormat::Csv => read_pairs_csv(path),
        PairFormat::Auto => match extension(path).as_str() {
            "txt" => read_pairs_lfw(path),
            "csv" => {
                let text = read_text(path)?;
                let first = text
                    .lines()
                    .next()
                    .unwrap_or("")
                    .trim()
                    .to_ascii_lowercase();
                if first.starts_with("split number") {
                    read_pairs_ytf(path)
                } else {
                    read_pairs_csv(path)
                }
            }
            other => Err(format_err(
                path,
                format!("cannot infer pair format from extension {other:?}"),
            )),
        },
    }
}

fn lfw_id(name: &str, index: &str, path: &Path, line: usize) -> Result<String> {
    let n: u32 = index.parse().map_err(|_| {
        parse_err(
            path,
            line,
            format!("image index {index:?} is not an integer"),
        )
    })?;
    Ok(format!("{name}/{n:04}"))
}

/// LFW `pairs.txt`: header `<folds>\t<n>`, then per fold `n` matched lines
/// `name i j` followed by `n` mismatched lines `name1 i name2 j`.
/// Entity ids are rendered `name/0001`.
pub fn read_pairs_lfw(path: impl AsRef<Path>) -> Result<PairProtocol> {
    let path = path.as_ref();
    let text = read_text(path)?;
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l))
        .filter(|(_, l)| !l.trim().is_empty());
    let (_, header) = lines
        .next()
        .ok_or_else(|| parse_err(path, 1, "missing header line"))?;
    let head: Vec<&str> = header.split_whitespace().collect();
    let parse_count = |s: &str| {
        s.parse::<usize>()
            .map_err(|_| parse_err(path, 1, format!("header value {s:?} is not a count")))
    };
    if head.len() != 2 {
        return Err(parse_err(
            path,
            1,
            "header must be \"<folds> <pairs per class>\"",
        ));
    }
    let (n_folds, per_class) = (parse_count(head[0])?, parse_count(head[1])?);

    let mut folds = Vec::with_capacity(n_folds);
    let mut last_line = 1;
    for f in 0..n_folds {
        let mut pairs = Vec::with_capacity(2 * per_class);
        for (label, expected_tokens) in [(Label::Same, 3), (Label::Different, 4)] {
            for k in 0..per_class {
                let (line_no, line) = lines.next().ok_or_else(|| {
                    parse_err(
                        path,
                        last_line + 1,
                        format!(
                            "file ends in fold {} after {k} of {per_class} {label} pairs",
                            f + 1
                        ),
                    )
                })?;
                last_line = line_no;
                let tokens: Vec<&str> = line.split_whitespace().collect();
                if tokens.len() != expected_tokens {
                    return Err(parse_err(
                        path,
                        line_no,
                        format!(
                            "fold {} expects {label} line {} of {per_class} with {expected_tokens} \
                             fields, found {}",
                            f + 1,
                            k + 1,
                            tokens.len()
                        ),
                    ));
                }
                let pair = if label == Label::Same {
                    Pair::new(
                        lfw_id(tokens[0], tokens[1], path, line_no)?,
                        lfw_id(tokens[0], tokens[2], path, line_no)?,
                        Label::Same,
                    )
                } else {
                    Pair::new(
                        lfw_id(tokens[0], tokens[1], path, line_no)?,
                        lfw_id(tokens[2], tokens[3], path, line_no)?,
                        Label::Different,
                    )
                };
                pairs.push(pair);
            }
        }
        folds.push(Fold::new(pairs));
    }
    if let Some((line_no, _)) = lines.next() {
        return Err(parse_err(
            path,
            line_no,
            format!(
                "extra lines beyond the {n_folds} x {} pairs declared",
                2 * per_class
            ),
        ));
    }
    PairProtocol::new(folds)
}

fn split_lfw_id(id: &str) -> Option<(&str, u32)> {
    let (name, index) = id.rsplit_once('/')?;
    if name.is_empty() || name.contains(char::is_whitespace) {
        return None;
    }
    Some((name, index.parse().ok()?))
}

/// Writes a protocol in LFW layout. Every fold must hold the same number of
/// matched and mismatched pairs, matched first, with `name/NNNN` ids.
pub fn write_pairs_lfw(proto: &PairProtocol, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let per_class = proto.folds()[0].matched_count();
    let mut out = format!("{}\t{per_class}\n", proto.n_folds());
    for (f, fold) in proto.folds().iter().enumerate() {
        let ok = fold.pairs.len() == 2 * per_class
            && fold.pairs[..per_class].iter().all(|p| p.label.is_same())
            && fold.pairs[per_class..].iter().all(|p| !p.label.is_same());
        if !ok {
            return Err(Error::protocol(format!(
                "fold {f} is not {per_class} matched pairs followed by {per_class} mismatched"
            )));
        }
        for pair in &fold.pairs {
            let bad = || {
                Error::protocol(format!(
                    "ids ({}, {}) are not name/index",
                    pair.id_a, pair.id_b
                ))
            };
            let (na, ia) = split_lfw_id(&pair.id_a).ok_or_else(bad)?;
            let (nb, ib) = split_lfw_id(&pair.id_b).ok_or_else(bad)?;
            if pair.label.is_same() {
                if na != nb {
                    return Err(Error::protocol(format!(
                        "matched pair ({}, {}) names two different people",
                        pair.id_a, pair.id_b
                    )));
                }
                let _ = writeln!(out, "{na}\t{ia}\t{ib}");
            } else {
                let _ = writeln!(out, "{na}\t{ia}\t{nb}\t{ib}");
            }
        }
    }
    write_atomic(path, out.as_bytes())
}

/// YTF-style split file: header `split number, pair id, first name, second name, is same`,
/// then one row per pair. Splits are 1-based and become folds; ids are kept verbatim.
pub fn read_pairs_ytf(path: impl AsRef<Path>) -> Result<PairProtocol> {
    let path = path.as_ref();
    let text = read_text(path)?;
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l))
        .filter(|(_, l)| !l.trim().is_empty());
    let (_, header) = lines
        .next()
        .ok_or_else(|| parse_err(path, 1, "missing header"))?;
    let columns: Vec<String> = header
        .split(',')
        .map(|c| c.trim().to_ascii_lowercase())
        .filter(|c| !c.is_empty())
        .collect();
    let expected = [
        "split number",
        "pair id",
        "first name",
        "second name",
        "is same",
    ];
    if columns != expected {
        return Err(parse_err(
            path,
            1,
            format!("header {columns:?} does not match the YTF layout {expected:?}"),
        ));
    }
    let mut folds: Vec<Fold> = Vec::new();
    for (line_no, line) in lines {
        let mut fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.last() == Some(&"") {
            fields.pop();
        }
        if fields.len() != 5 {
            return Err(parse_err(
                path,
                line_no,
                format!("expected 5 fields, found {}", fields.len()),
            ));
        }
        let split: usize = fields[0]
            .parse()
            .map_err(|_| parse_err(path, line_no, format!("split number {:?}", fields[0])))?;
        let label = match fields[4] {
            "1" => Label::Same,
            "0" => Label::Different,
            other => return Err(parse_err(path, line_no, format!("is-same value {other:?}"))),
        };
        if fields[2].is_empty() || fields[3].is_empty() {
            return Err(parse_err(path, line_no, "empty video name"));
        }
        if split == 0 || split > folds.len() + 1 {
            return Err(parse_err(
                path,
                line_no,
                format!(
                    "split {split} out of sequence (expected 1..={})",
                    folds.len() + 1
                ),
            ));
        }
        if split == folds.len() + 1 {
            folds.push(Fold::default());
        }
        folds[split - 1]
            .pairs
            .push(Pair::new(fields[2], fields[3], label));
    }
    PairProtocol::new(folds)
}

const PAIRS_CSV_HEADER: &str = "fold,id_a,id_b,label";

/// Plain protocol CSV: `fold,id_a,id_b,label` with 0-based folds and labels `same`/`different`.
pub fn read_pairs_csv(path: impl AsRef<Path>) -> Result<PairProtocol> {
    let path = path.as_ref();
    let text = read_text(path)?;
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l))
        .filter(|(_, l)| !l.trim().is_empty());
    match lines.next() {
        Some((_, h)) if h.trim() == PAIRS_CSV_HEADER => {}
        _ => {
            return Err(parse_err(
                path,
                1,
                format!("header must be {PAIRS_CSV_HEADER:?}"),
            ))
        }
    }
    let mut folds: Vec<Fold> = Vec::new();
    for (line_no, line) in lines {
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != 4 {
            return Err(parse_err(
                path,
                line_no,
                format!("expected 4 fields, found {}", fields.len()),
            ));
        }
        let fold: usize = fields[0]
            .parse()
            .map_err(|_| parse_err(path, line_no, format!("fold {:?}", fields[0])))?;
        let label = match fields[3] {
            "same" => Label::Same,
            "different" => Label::Different,
            other => return Err(parse_err(path, line_no, format!("label {other:?}"))),
        };
        if fold > folds.len() {
            return Err(parse_err(
                path,
                line_no,
                format!("fold {fold} out of sequence"),
            ));
        }
        if fold == folds.len() {
            folds.push(Fold::default());
        }
        folds[fold]
            .pairs
            .push(Pair::new(fields[1], fields[2], label));
    }
    PairProtocol::new(folds)
}

pub fn write_pairs_csv(proto: &PairProtocol, path: impl AsRef<Path>) -> Result<()> {
    let mut out = format!("{PAIRS_CSV_HEADER}\n");
    for (f, fold) in proto.folds().iter().enumerate() {
        for p in &fold.pairs {
            check_id(&p.id_a, &[',', '\n', '\r'])?;
            check_id(&p.id_b, &[',', '\n', '\r'])?;
            let _ = writeln!(out, "{f},{},{},{}", p.id_a, p.id_b, p.label);
        }
    }
    write_atomic(path.as_ref(), out.as_bytes())
}

// ---------------------------------------------------------------------------
// maps

/// Binary map: magic, version, dims, lambda, pair count, tags, then the
/// source_dim x target_dim matrix row-major as little-endian f64.
pub fn write_map(map: &LinearMap, path: impl AsRef<Path>) -> Result<()> {
    let (rows, cols) = (map.source_dim(), map.target_dim());
    let mut buf = Vec::with_capacity(64 + rows * cols * 8);
    buf.extend_from_slice(MAP_MAGIC);
    buf.extend_from_slice(&MAP_VERSION.to_le_bytes());
    buf.extend_from_slice(&(rows as u64).to_le_bytes());
    buf.extend_from_slice(&(cols as u64).to_le_bytes());
    buf.extend_from_slice(&map.lambda.to_le_bytes());
    buf.extend_from_slice(&(map.n_pairs_used as u64).to_le_bytes());
    put_str(&mut buf, &map.source_tag);
    put_str(&mut buf, &map.target_tag);
    for r in 0..rows {
        for c in 0..cols {
            buf.extend_from_slice(&map.matrix()[(r, c)].to_le_bytes());
        }
    }
    write_atomic(path.as_ref(), &buf)
}

pub fn read_map(path: impl AsRef<Path>) -> Result<LinearMap> {
    let path = path.as_ref();
    let bytes = read_bytes(path)?;
    let mut r = Reader::new(path, &bytes);
    r.header(MAP_MAGIC, MAP_VERSION)?;
    let rows = r.size()?;
    let cols = r.size()?;
    let lambda = r.f64()?;
    let n_pairs = r.size()?;
    let source_tag = r.string()?;
    let target_tag = r.string()?;
    let values = r.f64s(
        rows.checked_mul(cols)
            .ok_or_else(|| format_err(path, "matrix size overflows"))?,
    )?;
    r.finish()?;
    if rows == 0 || cols == 0 {
        return Err(format_err(path, "map has a zero dimension"));
    }
    LinearMap::new(
        DMatrix::from_row_slice(rows, cols, &values),
        lambda,
        n_pairs,
        source_tag,
        target_tag,
    )
}

// ---------------------------------------------------------------------------
// reports

#[derive(Serialize, Deserialize)]
struct Envelope<T> {
    format_version: u32,
    kind: String,
    #[serde(flatten)]
    body: T,
}

/// Kinds of JSON report this crate writes.
pub trait ReportKind: Serialize + DeserializeOwned {
    const KIND: &'static str;
}

impl ReportKind for crate::types::EvaluationReport {
    const KIND: &'static str = "evaluation";
}

impl ReportKind for crate::protocol::CrossMatrix {
    const KIND: &'static str = "cross_matrix";
}

impl ReportKind for SensitivityCurve {
    const KIND: &'static str = "sensitivity";
}

impl ReportKind for RankCurve {
    const KIND: &'static str = "rank";
}

pub fn report_json<T: ReportKind>(report: &T) -> Result<String> {
    let envelope = Envelope {
        format_version: REPORT_VERSION,
        kind: T::KIND.to_string(),
        body: report,
    };
    let mut text = serde_json::to_string_pretty(&envelope)?;
    text.push('\n');
    Ok(text)
}

pub fn write_report<T: ReportKind>(report: &T, path: impl AsRef<Path>) -> Result<()> {
    write_atomic(path.as_ref(), report_json(report)?.as_bytes())
}

pub fn read_report<T: ReportKind>(path: impl AsRef<Path>) -> Result<T> {
    let path = path.as_ref();
    let text = read_text(path)?;
    let raw: serde_json::Value = serde_json::from_str(&text)?;
    let version = raw
        .get("format_version")
        .and_then(|v| v.as_u64())
        .ok_or_else(|| format_err(path, "missing format_version"))?;
    if version != REPORT_VERSION as u64 {
        return Err(Error::Incompatible {
            path: PathBuf::from(path),
            found: version as u32,
            supported: REPORT_VERSION,
        });
    }
    let kind = raw.get("kind").and_then(|v| v.as_str()).unwrap_or("");
    if kind != T::KIND {
        return Err(format_err(
            path,
            format!("report kind {kind:?}, expected {:?}", T::KIND),
        ));
    }
    let envelope: Envelope<T> = serde_json::from_value(raw)?;
    Ok(envelope.body)
}

pub fn sensitivity_csv(curve: &SensitivityCurve) -> String {
    let mut out = String::from("p,accuracy\n");
    for pt in &curve.points {
        let _ = writeln!(out, "{},{}", pt.p, pt.mean_accuracy);
    }
    out
}

pub fn rank_csv(curve: &RankCurve) -> String {
    let mut out = String::from("k,accuracy,variance_explained\n");
    for pt in &curve.points {
        let _ = writeln!(
            out,
            "{},{},{}",
            pt.k, pt.mean_accuracy, pt.variance_explained
        );
    }
    out
}
