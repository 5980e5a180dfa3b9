use std::collections::BTreeMap;
use std::fmt::Write as _;

use triad_coref_core::document::{Document, Token};

use crate::{AppError, AppResult};

const WORD: usize = 3;
const POS: usize = 4;
const SPEAKER: usize = 9;
const MIN_COLUMNS: usize = 11;

fn parse_error(line: usize, message: impl Into<String>) -> AppError {
    AppError::Parse {
        line,
        message: message.into(),
    }
}

struct Part {
    key: String,
    part: u32,
    begin_line: usize,
    tokens: Vec<Token>,
    spans: Vec<(usize, usize, Option<i64>)>,
    // entity id -> stack of (start token, line of the opening bracket)
    open: BTreeMap<i64, Vec<(usize, usize)>>,
    sentence: usize,
    sentence_has_tokens: bool,
}

impl Part {
    fn finish(self, line: usize) -> AppResult<Document> {
        if let Some((id, (_, open_line))) = self
            .open
            .iter()
            .find_map(|(id, stack)| stack.first().map(|s| (id, *s)))
        {
            return Err(parse_error(
                open_line,
                format!("mention of entity {id} opened here is never closed before line {line}"),
            ));
        }
        Document::new(self.key, self.part, self.tokens, self.spans).map_err(|e| parse_error(self.begin_line, e.to_string()))
    }
}

fn parse_header(rest: &str, line: usize) -> AppResult<(String, u32)> {
    let rest = rest.trim();
    let (key, tail) = match rest.strip_prefix('(') {
        Some(inner) => {
            let close = inner
                .find(')')
                .ok_or_else(|| parse_error(line, "unterminated document key"))?;
            (inner[..close].to_string(), &inner[close + 1..])
        }
        None => match rest.split_once(';') {
            Some((k, t)) => (k.trim().to_string(), t),
            None => (rest.to_string(), ""),
        },
    };
    let tail = tail.trim().trim_start_matches(';').trim();
    let part = match tail.strip_prefix("part") {
        Some(n) => n
            .trim()
            .parse::<u32>()
            .map_err(|_| parse_error(line, format!("bad part number {:?}", n.trim())))?,
        None if tail.is_empty() => 0,
        None => return Err(parse_error(line, format!("unexpected header text {tail:?}"))),
    };
    if key.is_empty() {
        return Err(parse_error(line, "empty document key"));
    }
    Ok((key, part))
}

fn parse_coref(cell: &str, token: usize, line: usize, part: &mut Part) -> AppResult<()> {
    if cell == "-" {
        return Ok(());
    }
    let number = |s: &str| {
        s.parse::<i64>()
            .map_err(|_| parse_error(line, format!("bad coreference entry {cell:?}")))
    };
    for piece in cell.split('|') {
        if let Some(inner) = piece.strip_prefix('(') {
            if let Some(id) = inner.strip_suffix(')') {
                part.spans.push((token, token, Some(number(id)?)));
            } else {
                part.open.entry(number(inner)?).or_default().push((token, line));
            }
        } else if let Some(id) = piece.strip_suffix(')') {
            let id = number(id)?;
            let (start, _) = part
                .open
                .get_mut(&id)
                .and_then(|stack| stack.pop())
                .ok_or_else(|| parse_error(line, format!("closing bracket for entity {id} without an opening one")))?;
            if part.open.get(&id).is_some_and(Vec::is_empty) {
                part.open.remove(&id);
            }
            part.spans.push((start, token, Some(id)));
        } else {
            return Err(parse_error(line, format!("bad coreference entry {cell:?}")));
        }
    }
    Ok(())
}

/// Parses CoNLL-2012 style text. Every `#begin document` block becomes one
/// document; word, POS, speaker and coreference come from columns 4, 5, 10
/// and the last column.
pub fn parse_conll(text: &str) -> AppResult<Vec<Document>> {
    let mut docs = Vec::new();
    let mut current: Option<Part> = None;
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let trimmed = raw.trim();
        if let Some(rest) = trimmed.strip_prefix("#begin document") {
            if current.is_some() {
                return Err(parse_error(line, "#begin document inside an open document"));
            }
            let (key, part) = parse_header(rest, line)?;
            current = Some(Part {
                key,
                part,
                begin_line: line,
                tokens: Vec::new(),
                spans: Vec::new(),
                open: BTreeMap::new(),
                sentence: 0,
                sentence_has_tokens: false,
            });
            continue;
        }
        if trimmed.starts_with("#end document") {
            let part = current
                .take()
                .ok_or_else(|| parse_error(line, "#end document without #begin document"))?;
            docs.push(part.finish(line)?);
            continue;
        }
        if trimmed.starts_with('#') {
            continue;
        }
        let Some(part) = current.as_mut() else {
            if trimmed.is_empty() {
                continue;
            }
            return Err(parse_error(line, "data line outside a document"));
        };
        if trimmed.is_empty() {
            if part.sentence_has_tokens {
                part.sentence += 1;
                part.sentence_has_tokens = false;
            }
            continue;
        }
        let cols: Vec<&str> = trimmed.split_whitespace().collect();
        if cols.len() < MIN_COLUMNS {
            return Err(parse_error(
                line,
                format!("expected at least {MIN_COLUMNS} columns, found {}", cols.len()),
            ));
        }
        let index = part.tokens.len();
        let speaker = match cols[SPEAKER] {
            "-" => None,
            s => Some(s.to_string()),
        };
        part.tokens.push(Token {
            surface: cols[WORD].to_string(),
            pos: cols[POS].to_string(),
            speaker,
            sentence_index: part.sentence,
            doc_token_index: index,
        });
        part.sentence_has_tokens = true;
        parse_coref(cols[cols.len() - 1], index, line, part)?;
    }
    if let Some(part) = current {
        return Err(parse_error(
            part.begin_line,
            format!("document {} is missing #end document", part.key),
        ));
    }
    Ok(docs)
}

fn check_field(value: &str, what: &str, doc: &Document) -> AppResult<()> {
    if value.is_empty() || value.chars().any(char::is_whitespace) {
        return Err(AppError::Format(format!(
            "{}: {what} {value:?} cannot be written as a CoNLL column",
            doc.doc_key
        )));
    }
    Ok(())
}

fn coref_cell(doc: &Document, token: usize) -> AppResult<String> {
    let mut pieces = Vec::new();
    let id = |m: &triad_coref_core::document::Mention| {
        m.entity_id.ok_or_else(|| {
            AppError::Format(format!("{}: mention {} has no entity id", doc.doc_key, m.id))
        })
    };
    // Closings first so an entity that ends and restarts on one token pairs correctly.
    for m in doc.mentions.iter().filter(|m| m.end == token && m.start < token) {
        pieces.push(format!("{})", id(m)?));
    }
    let mut opens: Vec<_> = doc.mentions.iter().filter(|m| m.start == token && m.end > token).collect();
    opens.sort_by_key(|m| std::cmp::Reverse(m.end));
    for m in opens {
        pieces.push(format!("({}", id(m)?));
    }
    for m in doc.mentions.iter().filter(|m| m.start == token && m.end == token) {
        pieces.push(format!("({})", id(m)?));
    }
    Ok(if pieces.is_empty() { "-".to_string() } else { pieces.join("|") })
}

/// Writes documents in a 12-column layout that [`parse_conll`] reads back
/// unchanged. Every mention must carry an entity id.
pub fn write_conll(docs: &[Document]) -> AppResult<String> {
    let mut out = String::new();
    for doc in docs {
        check_field(&doc.doc_key, "document key", doc)?;
        writeln!(out, "#begin document ({}); part {:03}", doc.doc_key, doc.part).expect("string write");
        let mut in_sentence = 0usize;
        for (i, t) in doc.tokens.iter().enumerate() {
            if i > 0 && t.sentence_index != doc.tokens[i - 1].sentence_index {
                out.push('\n');
                in_sentence = 0;
            }
            check_field(&t.surface, "token", doc)?;
            check_field(&t.pos, "POS tag", doc)?;
            let speaker = t.speaker.as_deref().unwrap_or("-");
            check_field(speaker, "speaker", doc)?;
            writeln!(
                out,
                "{}\t{}\t{}\t{}\t{}\t-\t-\t-\t-\t{}\t*\t{}",
                doc.doc_key,
                doc.part,
                in_sentence,
                t.surface,
                t.pos,
                speaker,
                coref_cell(doc, i)?
            )
            .expect("string write");
            in_sentence += 1;
        }
        out.push_str("\n#end document\n");
    }
    Ok(out)
}
