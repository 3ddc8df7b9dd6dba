use std::collections::{BTreeMap, HashMap};
use std::fs;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use super::{
    parse_bracketed_tree, ConstituencyNode, Document, Head, IngestError, Sentence, Token, Upos,
};

const DEFAULT_DOC_ID: &str = "doc";

struct PendingToken {
    token: Token,
    raw_head: Option<usize>,
    line: usize,
}

#[derive(Default)]
struct DocBuilder {
    id: Option<String>,
    sentences: Vec<Sentence>,
    paragraph: usize,
    newpar_pending: bool,
}

struct Reader {
    default_id: String,
    docs: Vec<Document>,
    current: DocBuilder,
    tokens: Vec<PendingToken>,
    sent_id: Option<String>,
    sentence_line: usize,
    seen_newdoc: bool,
}

impl Reader {
    fn flush_sentence(&mut self) -> Result<(), IngestError> {
        if self.tokens.is_empty() {
            return Ok(());
        }
        let n = self.tokens.len();
        let mut tokens = Vec::with_capacity(n);
        for pending in self.tokens.drain(..) {
            let mut token = pending.token;
            token.head = match pending.raw_head {
                None => Head::Missing,
                Some(0) => Head::Root,
                Some(h) if h <= n => Head::Index(h - 1),
                Some(h) => {
                    return Err(IngestError::Structure {
                        line: pending.line,
                        message: format!("HEAD {h} does not exist in a sentence of {n} tokens"),
                    })
                }
            };
            tokens.push(token);
        }
        let doc = &mut self.current;
        if doc.newpar_pending && !doc.sentences.is_empty() {
            doc.paragraph += 1;
        }
        doc.newpar_pending = false;
        let sentence = Sentence {
            sent_id: self.sent_id.take(),
            tokens,
            const_tree: None,
            paragraph_id: doc.paragraph,
        };
        sentence
            .check_tree()
            .map_err(|message| IngestError::Structure {
                line: self.sentence_line,
                message,
            })?;
        doc.sentences.push(sentence);
        Ok(())
    }

    fn flush_document(&mut self) -> Result<(), IngestError> {
        self.flush_sentence()?;
        let builder = std::mem::take(&mut self.current);
        if builder.sentences.is_empty() {
            if let Some(id) = builder.id {
                return Err(IngestError::Structure {
                    line: self.sentence_line,
                    message: format!("document {id:?} has no sentences"),
                });
            }
            return Ok(());
        }
        let id = builder.id.unwrap_or_else(|| {
            if self.docs.is_empty() {
                self.default_id.clone()
            } else {
                format!("{}-{}", self.default_id, self.docs.len())
            }
        });
        self.docs.push(Document::new(id, builder.sentences)?);
        Ok(())
    }

    fn comment(&mut self, line_no: usize, body: &str) -> Result<(), IngestError> {
        let (key, value) = match body.split_once('=') {
            Some((k, v)) => (k.trim(), Some(v.trim())),
            None => (body.trim(), None),
        };
        match key {
            "newdoc" | "newdoc id" => {
                if self.seen_newdoc || !self.current.sentences.is_empty() || !self.tokens.is_empty()
                {
                    self.flush_document()?;
                }
                self.seen_newdoc = true;
                self.current.id = value.map(str::to_string);
                if self.current.id.is_none() {
                    self.current.id = Some(format!("{}-{}", self.default_id, self.docs.len()));
                }
            }
            "newpar" | "newpar id" => {
                self.flush_sentence()?;
                self.current.newpar_pending = true;
            }
            "sent_id" => {
                self.sentence_line = line_no;
                self.sent_id = value.map(str::to_string);
            }
            _ => {}
        }
        Ok(())
    }
}

fn parse_feats(raw: &str, line: usize) -> Result<BTreeMap<String, String>, IngestError> {
    let mut feats = BTreeMap::new();
    if raw == "_" || raw.is_empty() {
        return Ok(feats);
    }
    for pair in raw.split('|') {
        let (k, v) = pair.split_once('=').ok_or_else(|| IngestError::Parse {
            line,
            message: format!("malformed FEATS entry {pair:?}"),
        })?;
        feats.insert(k.to_string(), v.to_string());
    }
    Ok(feats)
}

/// Parses CoNLL-U into documents. `# newdoc` starts a document, `# newpar`
/// a paragraph; multiword ranges (`3-4`) and empty nodes (`3.1`) are skipped.
pub fn parse_conllu<R: Read>(input: R) -> Result<Vec<Document>, IngestError> {
    parse_conllu_with_id(input, DEFAULT_DOC_ID)
}

pub(crate) fn parse_conllu_with_id<R: Read>(
    input: R,
    default_id: &str,
) -> Result<Vec<Document>, IngestError> {
    let mut reader = Reader {
        default_id: default_id.to_string(),
        docs: Vec::new(),
        current: DocBuilder::default(),
        tokens: Vec::new(),
        sent_id: None,
        sentence_line: 1,
        seen_newdoc: false,
    };
    for (idx, line) in BufReader::new(input).lines().enumerate() {
        let line_no = idx + 1;
        let line = line?;
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() {
            reader.flush_sentence()?;
            continue;
        }
        if let Some(body) = line.strip_prefix('#') {
            reader.comment(line_no, body)?;
            continue;
        }
        let cols: Vec<&str> = line.split('\t').collect();
        if cols.len() != 10 {
            return Err(IngestError::Parse {
                line: line_no,
                message: format!("expected 10 tab-separated columns, found {}", cols.len()),
            });
        }
        let id = cols[0];
        if id.contains('-') || id.contains('.') {
            continue;
        }
        let id: usize = id.parse().map_err(|_| IngestError::Parse {
            line: line_no,
            message: format!("invalid token ID {id:?}"),
        })?;
        if reader.tokens.is_empty() && reader.sent_id.is_none() {
            reader.sentence_line = line_no;
        }
        if id != reader.tokens.len() + 1 {
            return Err(IngestError::Parse {
                line: line_no,
                message: format!("token ID {id} out of sequence"),
            });
        }
        let upos: Upos = cols[3].parse().map_err(|message| IngestError::Parse {
            line: line_no,
            message,
        })?;
        let raw_head = match cols[6] {
            "_" => None,
            h => Some(h.parse::<usize>().map_err(|_| IngestError::Parse {
                line: line_no,
                message: format!("invalid HEAD {h:?}"),
            })?),
        };
        if raw_head == Some(id) {
            return Err(IngestError::Structure {
                line: line_no,
                message: format!("token {id} is its own head"),
            });
        }
        reader.tokens.push(PendingToken {
            token: Token {
                form: cols[1].to_string(),
                lemma: cols[2].to_string(),
                upos,
                feats: parse_feats(cols[5], line_no)?,
                head: Head::Missing,
                deprel: cols[7].to_string(),
            },
            raw_head,
            line: line_no,
        });
    }
    reader.flush_document()?;
    Ok(reader.docs)
}

/// Reads a CoNLL-U file; documents without a `# newdoc id` take the file stem as id.
/// A sidecar `<stem>.trees` next to the file, if present, supplies constituency trees.
pub fn read_conllu_file(path: &Path) -> Result<Vec<Document>, IngestError> {
    let stem = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| DEFAULT_DOC_ID.to_string());
    let file = fs::File::open(path)?;
    let mut docs = parse_conllu_with_id(file, &stem)?;
    let sidecar = path.with_extension("trees");
    if sidecar.exists() {
        let trees = parse_tree_sidecar(fs::File::open(&sidecar)?)?;
        for doc in &mut docs {
            attach_trees(doc, &trees)?;
        }
    }
    Ok(docs)
}

fn render_feats(feats: &BTreeMap<String, String>) -> String {
    if feats.is_empty() {
        return "_".to_string();
    }
    feats
        .iter()
        .map(|(k, v)| format!("{k}={v}"))
        .collect::<Vec<_>>()
        .join("|")
}

fn or_underscore(s: &str) -> &str {
    if s.is_empty() {
        "_"
    } else {
        s
    }
}

/// Writes documents as CoNLL-U; [`parse_conllu`] reads the output back to equal documents.
pub fn write_conllu<W: Write>(docs: &[Document], mut out: W) -> std::io::Result<()> {
    for doc in docs {
        writeln!(out, "# newdoc id = {}", doc.id)?;
        let mut paragraph = None;
        for sentence in &doc.sentences {
            if paragraph != Some(sentence.paragraph_id) {
                writeln!(out, "# newpar")?;
                paragraph = Some(sentence.paragraph_id);
            }
            if let Some(id) = &sentence.sent_id {
                writeln!(out, "# sent_id = {id}")?;
            }
            let text: Vec<&str> = sentence.tokens.iter().map(|t| t.form.as_str()).collect();
            writeln!(out, "# text = {}", text.join(" "))?;
            for (i, tok) in sentence.tokens.iter().enumerate() {
                let head = match tok.head {
                    Head::Root => "0".to_string(),
                    Head::Index(h) => (h + 1).to_string(),
                    Head::Missing => "_".to_string(),
                };
                writeln!(
                    out,
                    "{}\t{}\t{}\t{}\t_\t{}\t{}\t{}\t_\t_",
                    i + 1,
                    or_underscore(&tok.form),
                    or_underscore(&tok.lemma),
                    tok.upos,
                    render_feats(&tok.feats),
                    head,
                    or_underscore(&tok.deprel),
                )?;
            }
            writeln!(out)?;
        }
    }
    Ok(())
}

/// Reads a constituency sidecar: one `sent_id<TAB>(bracketed tree)` per line,
/// blank lines and `#` comments ignored.
pub fn parse_tree_sidecar<R: Read>(
    input: R,
) -> Result<HashMap<String, ConstituencyNode>, IngestError> {
    let mut trees = HashMap::new();
    for (idx, line) in BufReader::new(input).lines().enumerate() {
        let line = line?;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (id, tree) = line.split_once('\t').ok_or_else(|| IngestError::Parse {
            line: idx + 1,
            message: "expected sent_id<TAB>tree".into(),
        })?;
        let tree = parse_bracketed_tree(tree).map_err(|e| IngestError::Parse {
            line: idx + 1,
            message: e.to_string(),
        })?;
        trees.insert(id.trim().to_string(), tree);
    }
    Ok(trees)
}

/// Attaches trees to the sentences whose `sent_id` they are keyed by.
/// A tree whose leaves differ from the sentence's token forms is an error.
pub fn attach_trees(
    doc: &mut Document,
    trees: &HashMap<String, ConstituencyNode>,
) -> Result<(), IngestError> {
    for sentence in &mut doc.sentences {
        let Some(id) = &sentence.sent_id else {
            continue;
        };
        let Some(tree) = trees.get(id) else {
            continue;
        };
        let leaves = tree.leaves();
        let matches = leaves.len() == sentence.tokens.len()
            && leaves.iter().zip(&sentence.tokens).all(|(l, t)| *l == t.form);
        if !matches {
            return Err(IngestError::TreeMismatch {
                sent_id: id.clone(),
            });
        }
        sentence.const_tree = Some(tree.clone());
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = "1\tLe\tle\tDET\t_\t_\t2\tdet\t_\t_\n\
                           2\tchat\tchat\tNOUN\t_\tGender=Masc|Number=Sing\t0\troot\t_\t_\n\
                           3\tnoir\tnoir\tADJ\t_\t_\t2\tamod\t_\t_\n";

    #[test]
    fn minimal_sentence() {
        let docs = parse_conllu(MINIMAL.as_bytes()).unwrap();
        assert_eq!(docs.len(), 1);
        let s = &docs[0].sentences[0];
        assert_eq!(s.tokens.len(), 3);
        assert_eq!(s.root(), Some(1));
        assert_eq!(s.tokens[0].head, Head::Index(1));
        assert_eq!(s.tokens[1].feat("Gender"), Some("Masc"));
        assert_eq!(docs[0].id, "doc");
    }

    #[test]
    fn multiword_range_skipped() {
        let input = "# sent_id = s1\n\
                     1\tIl\til\tPRON\t_\t_\t2\tnsubj\t_\t_\n\
                     2\tparle\tparler\tVERB\t_\t_\t0\troot\t_\t_\n\
                     3-4\tdu\t_\t_\t_\t_\t_\t_\t_\t_\n\
                     3\tde\tde\tADP\t_\t_\t5\tcase\t_\t_\n\
                     4\tle\tle\tDET\t_\t_\t5\tdet\t_\t_\n\
                     5\tchat\tchat\tNOUN\t_\t_\t2\tobl\t_\t_\n\
                     5.1\tx\tx\tX\t_\t_\t_\t_\t_\t_\n\n";
        let docs = parse_conllu(input.as_bytes()).unwrap();
        let forms: Vec<&str> = docs[0].sentences[0]
            .tokens
            .iter()
            .map(|t| t.form.as_str())
            .collect();
        // 7 lines, one range and one empty node skipped.
        assert_eq!(forms, ["Il", "parle", "de", "le", "chat"]);
    }

    #[test]
    fn wrong_column_count_names_line() {
        let input = "1\tLe\tle\tDET\t_\t_\t2\tdet\t_\t_\n2\tchat\tchat\tNOUN\t_\t_\t0\troot\t_\n";
        match parse_conllu(input.as_bytes()) {
            Err(IngestError::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn nonexistent_head_is_structural() {
        let input = "1\tLe\tle\tDET\t_\t_\t7\tdet\t_\t_\n2\tchat\tchat\tNOUN\t_\t_\t0\troot\t_\t_\n";
        assert!(matches!(
            parse_conllu(input.as_bytes()),
            Err(IngestError::Structure { line: 1, .. })
        ));
    }

    #[test]
    fn empty_input_is_empty_list() {
        assert!(parse_conllu("".as_bytes()).unwrap().is_empty());
        assert!(parse_conllu("\n\n".as_bytes()).unwrap().is_empty());
    }

    #[test]
    fn newdoc_and_newpar() {
        let input = format!(
            "# newdoc id = a\n# newpar\n{MINIMAL}\n{MINIMAL}\n# newpar\n{MINIMAL}\n# newdoc id = b\n{MINIMAL}"
        );
        let docs = parse_conllu(input.as_bytes()).unwrap();
        assert_eq!(docs.len(), 2);
        assert_eq!(docs[0].id, "a");
        let paras: Vec<usize> = docs[0].sentences.iter().map(|s| s.paragraph_id).collect();
        assert_eq!(paras, [0, 0, 1]);
        assert_eq!(docs[1].id, "b");
        assert_eq!(docs[1].sentences.len(), 1);
    }

    #[test]
    fn missing_heads_allowed_but_not_mixed() {
        let input = "1\tLe\tle\tDET\t_\t_\t_\t_\t_\t_\n2\tchat\tchat\tNOUN\t_\t_\t_\t_\t_\t_\n";
        let docs = parse_conllu(input.as_bytes()).unwrap();
        assert!(!docs[0].sentences[0].has_heads());
        let mixed = "1\tLe\tle\tDET\t_\t_\t2\tdet\t_\t_\n2\tchat\tchat\tNOUN\t_\t_\t_\t_\t_\t_\n";
        assert!(parse_conllu(mixed.as_bytes()).is_err());
    }

    #[test]
    fn write_then_parse_is_identity() {
        let input = format!("# newdoc id = a\n# sent_id = s1\n{MINIMAL}\n# newpar\n{MINIMAL}");
        let docs = parse_conllu(input.as_bytes()).unwrap();
        let mut buf = Vec::new();
        write_conllu(&docs, &mut buf).unwrap();
        assert_eq!(parse_conllu(buf.as_slice()).unwrap(), docs);
    }

    #[test]
    fn sidecar_trees_attach() {
        let input = format!("# sent_id = s1\n{MINIMAL}");
        let mut doc = parse_conllu(input.as_bytes()).unwrap().remove(0);
        let sidecar = "s1\t(NP (DET Le) (NC chat) (ADJ noir))\n";
        let trees = parse_tree_sidecar(sidecar.as_bytes()).unwrap();
        attach_trees(&mut doc, &trees).unwrap();
        assert_eq!(doc.sentences[0].const_tree.as_ref().unwrap().height(), 1);

        let bad = parse_tree_sidecar("s1\t(NP (DET Le) (NC chien))\n".as_bytes()).unwrap();
        assert!(matches!(
            attach_trees(&mut doc, &bad),
            Err(IngestError::TreeMismatch { .. })
        ));
    }
}
