use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use super::format::{data_lines, fmt6, read_text, write_bytes};
use super::{valid_id, ChannelSpec, Embedding};
use crate::error::{Error, Result};

const MAGIC: &[u8; 8] = b"TDSVEMB1";
const TSV_TAG: &str = "#EMB";
const TSV_VERSION: &str = "v1";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EmbeddingFormat {
    Tsv,
    Binary,
}

impl EmbeddingFormat {
    pub fn extension(self) -> &'static str {
        match self {
            EmbeddingFormat::Tsv => "tsv",
            EmbeddingFormat::Binary => "bin",
        }
    }

    /// Guesses the format from a file extension (`.tsv` or `.bin`).
    pub fn from_path(path: &Path) -> Option<Self> {
        match path.extension()?.to_str()? {
            "tsv" => Some(EmbeddingFormat::Tsv),
            "bin" => Some(EmbeddingFormat::Binary),
            _ => None,
        }
    }
}

impl FromStr for EmbeddingFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "tsv" => Ok(EmbeddingFormat::Tsv),
            "bin" | "binary" => Ok(EmbeddingFormat::Binary),
            _ => Err(format!("unknown embedding format `{s}`")),
        }
    }
}

/// All embeddings of one channel, in file order, with an id index.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingSet {
    channel: ChannelSpec,
    embeddings: Vec<Embedding>,
    index: HashMap<String, usize>,
}

impl EmbeddingSet {
    pub fn new(channel: ChannelSpec, embeddings: Vec<Embedding>) -> Result<Self> {
        let mut index = HashMap::with_capacity(embeddings.len());
        for (i, e) in embeddings.iter().enumerate() {
            e.validate()?;
            if e.channel != channel.name {
                return Err(Error::Data(format!(
                    "embedding `{}` belongs to channel `{}`, expected `{}`",
                    e.utterance_id, e.channel, channel.name
                )));
            }
            if e.dim() != channel.dim {
                return Err(Error::Data(format!(
                    "embedding `{}` has dimension {}, channel `{}` expects {}",
                    e.utterance_id,
                    e.dim(),
                    channel.name,
                    channel.dim
                )));
            }
            if index.insert(e.utterance_id.clone(), i).is_some() {
                return Err(Error::Data(format!(
                    "duplicate utterance `{}` in channel `{}`",
                    e.utterance_id, channel.name
                )));
            }
        }
        Ok(EmbeddingSet {
            channel,
            embeddings,
            index,
        })
    }

    pub fn channel(&self) -> &ChannelSpec {
        &self.channel
    }

    pub fn embeddings(&self) -> &[Embedding] {
        &self.embeddings
    }

    pub fn get(&self, utterance_id: &str) -> Option<&Embedding> {
        self.index.get(utterance_id).map(|&i| &self.embeddings[i])
    }

    pub fn len(&self) -> usize {
        self.embeddings.len()
    }

    pub fn is_empty(&self) -> bool {
        self.embeddings.is_empty()
    }

    pub fn into_embeddings(self) -> Vec<Embedding> {
        self.embeddings
    }
}

pub fn read_embeddings(path: &Path, format: EmbeddingFormat) -> Result<EmbeddingSet> {
    match format {
        EmbeddingFormat::Tsv => read_tsv(path),
        EmbeddingFormat::Binary => {
            let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
            decode_binary(&bytes).map_err(|e| match e {
                Error::Format(msg) => Error::Format(format!("{}: {msg}", path.display())),
                other => other,
            })
        }
    }
}

pub fn write_embeddings(set: &EmbeddingSet, path: &Path, format: EmbeddingFormat) -> Result<()> {
    let bytes = match format {
        EmbeddingFormat::Tsv => encode_tsv(set).into_bytes(),
        EmbeddingFormat::Binary => encode_binary(set)?,
    };
    write_bytes(path, &bytes)
}

fn read_tsv(path: &Path) -> Result<EmbeddingSet> {
    let text = read_text(path)?;
    let mut lines = text.lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::parse(path, 1, "missing #EMB header"))?;
    let fields: Vec<&str> = header.split('\t').collect();
    if fields.len() != 4 || fields[0] != TSV_TAG {
        return Err(Error::parse(
            path,
            1,
            "expected `#EMB<TAB>v1<TAB>channel<TAB>dim` header",
        ));
    }
    if fields[1] != TSV_VERSION {
        return Err(Error::parse(
            path,
            1,
            format!("unsupported version `{}`", fields[1]),
        ));
    }
    let dim: usize = fields[3]
        .parse()
        .map_err(|_| Error::parse(path, 1, format!("bad dimension `{}`", fields[3])))?;
    let channel =
        ChannelSpec::new(fields[2], dim).map_err(|e| Error::parse(path, 1, e.to_string()))?;

    let mut embeddings = Vec::new();
    let mut seen = HashMap::new();
    for (line, content) in data_lines(&text).skip_while(|&(n, _)| n == 1) {
        let cols: Vec<&str> = content.split('\t').collect();
        if cols.len() != 3 {
            return Err(Error::parse(
                path,
                line,
                format!("expected 3 columns, found {}", cols.len()),
            ));
        }
        let id = cols[0];
        if !valid_id(id) {
            return Err(Error::parse(
                path,
                line,
                format!("invalid utterance id `{id}`"),
            ));
        }
        let line_dim: usize = cols[1]
            .parse()
            .map_err(|_| Error::parse(path, line, format!("bad dimension `{}`", cols[1])))?;
        if line_dim != dim {
            return Err(Error::Format(format!(
                "{}:{line}: dimension {line_dim} does not match header dimension {dim}",
                path.display()
            )));
        }
        let mut vector = Vec::with_capacity(dim);
        for tok in cols[2].split(' ') {
            let v: f64 = tok
                .parse()
                .map_err(|_| Error::parse(path, line, format!("`{tok}` is not a number")))?;
            let v = v as f32;
            if !v.is_finite() {
                return Err(Error::Data(format!(
                    "{}:{line}: non-finite value `{tok}`",
                    path.display()
                )));
            }
            vector.push(v);
        }
        if vector.len() != dim {
            return Err(Error::Format(format!(
                "{}:{line}: {} values, header dimension {dim}",
                path.display(),
                vector.len()
            )));
        }
        if seen.insert(id.to_string(), line).is_some() {
            return Err(Error::parse(
                path,
                line,
                format!("duplicate utterance `{id}`"),
            ));
        }
        embeddings.push(Embedding {
            utterance_id: id.to_string(),
            channel: channel.name.clone(),
            vector,
        });
    }
    EmbeddingSet::new(channel, embeddings)
}

fn encode_tsv(set: &EmbeddingSet) -> String {
    let ch = set.channel();
    let mut out = format!("{TSV_TAG}\t{TSV_VERSION}\t{}\t{}\n", ch.name, ch.dim);
    for e in set.embeddings() {
        let _ = write!(out, "{}\t{}\t", e.utterance_id, e.dim());
        for (i, &v) in e.vector.iter().enumerate() {
            if i > 0 {
                out.push(' ');
            }
            out.push_str(&fmt6(f64::from(v)));
        }
        out.push('\n');
    }
    out
}

fn encode_binary(set: &EmbeddingSet) -> Result<Vec<u8>> {
    let ch = set.channel();
    let name_len =
        u16::try_from(ch.name.len()).map_err(|_| Error::Format("channel name too long".into()))?;
    let dim = u32::try_from(ch.dim).map_err(|_| Error::Format("dimension too large".into()))?;
    let count =
        u32::try_from(set.len()).map_err(|_| Error::Format("too many embeddings".into()))?;

    let mut out = Vec::with_capacity(20 + set.len() * (16 + 4 * ch.dim));
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&name_len.to_le_bytes());
    out.extend_from_slice(ch.name.as_bytes());
    out.extend_from_slice(&dim.to_le_bytes());
    out.extend_from_slice(&count.to_le_bytes());
    for e in set.embeddings() {
        let id_len = u16::try_from(e.utterance_id.len())
            .map_err(|_| Error::Format(format!("utterance id `{}` too long", e.utterance_id)))?;
        out.extend_from_slice(&id_len.to_le_bytes());
        out.extend_from_slice(e.utterance_id.as_bytes());
        for &v in &e.vector {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    Ok(out)
}

struct Cursor<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize, what: &str) -> Result<&'a [u8]> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|&e| e <= self.buf.len())
            .ok_or_else(|| {
                Error::Format(format!(
                    "truncated file while reading {what} at byte {}",
                    self.pos
                ))
            })?;
        let s = &self.buf[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u16(&mut self, what: &str) -> Result<u16> {
        Ok(u16::from_le_bytes(self.take(2, what)?.try_into().unwrap()))
    }

    fn u32(&mut self, what: &str) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4, what)?.try_into().unwrap()))
    }

    fn string(&mut self, what: &str) -> Result<String> {
        let len = usize::from(self.u16(what)?);
        let bytes = self.take(len, what)?;
        String::from_utf8(bytes.to_vec()).map_err(|_| Error::Format(format!("{what} is not UTF-8")))
    }
}

fn decode_binary(buf: &[u8]) -> Result<EmbeddingSet> {
    let mut cur = Cursor { buf, pos: 0 };
    if cur.take(8, "magic")? != MAGIC {
        return Err(Error::Format("bad magic, expected TDSVEMB1".into()));
    }
    let name = cur.string("channel name")?;
    let dim = cur.u32("dimension")? as usize;
    let count = cur.u32("count")? as usize;
    let channel = ChannelSpec::new(name, dim).map_err(|e| Error::Format(e.to_string()))?;

    let mut embeddings = Vec::with_capacity(count.min(buf.len() / (4 * dim).max(1)));
    for i in 0..count {
        let id = cur.string("utterance id")?;
        let raw = cur.take(4 * dim, "vector")?;
        let vector: Vec<f32> = raw
            .chunks_exact(4)
            .map(|b| f32::from_le_bytes(b.try_into().unwrap()))
            .collect();
        if vector.iter().any(|v| !v.is_finite()) {
            return Err(Error::Data(format!(
                "record {i} (`{id}`) has a non-finite value"
            )));
        }
        if !valid_id(&id) {
            return Err(Error::Format(format!("record {i} has invalid id `{id}`")));
        }
        embeddings.push(Embedding {
            utterance_id: id,
            channel: channel.name.clone(),
            vector,
        });
    }
    if cur.pos != buf.len() {
        return Err(Error::Format(format!(
            "{} trailing bytes",
            buf.len() - cur.pos
        )));
    }
    EmbeddingSet::new(channel, embeddings)
}
