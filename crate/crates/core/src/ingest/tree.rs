use super::{ConstituencyNode, IngestError};

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Open(usize),
    Close(usize),
    Atom(String, usize),
}

fn lex(input: &str) -> Vec<Tok> {
    let mut toks = Vec::new();
    let mut atom_start: Option<usize> = None;
    for (i, c) in input.char_indices() {
        if c == '(' || c == ')' || c.is_whitespace() {
            if let Some(start) = atom_start.take() {
                toks.push(Tok::Atom(input[start..i].to_string(), start));
            }
            match c {
                '(' => toks.push(Tok::Open(i)),
                ')' => toks.push(Tok::Close(i)),
                _ => {}
            }
        } else if atom_start.is_none() {
            atom_start = Some(i);
        }
    }
    if let Some(start) = atom_start {
        toks.push(Tok::Atom(input[start..].to_string(), start));
    }
    toks
}

fn unescape_terminal(atom: &str) -> String {
    match atom {
        "-LRB-" => "(".into(),
        "-RRB-" => ")".into(),
        "-LSB-" => "[".into(),
        "-RSB-" => "]".into(),
        other => other.into(),
    }
}

pub(super) fn escape_terminal(form: &str) -> String {
    match form {
        "(" => "-LRB-".into(),
        ")" => "-RRB-".into(),
        "[" => "-LSB-".into(),
        "]" => "-RSB-".into(),
        other => other.into(),
    }
}

struct Parser {
    toks: Vec<Tok>,
    pos: usize,
    len: usize,
}

impl Parser {
    fn err(&self, offset: usize, message: impl Into<String>) -> IngestError {
        IngestError::Tree {
            offset,
            message: message.into(),
        }
    }

    fn node(&mut self) -> Result<ConstituencyNode, IngestError> {
        let open = match self.toks.get(self.pos) {
            Some(Tok::Open(o)) => *o,
            Some(Tok::Close(o)) => return Err(self.err(*o, "unexpected ')'")),
            Some(Tok::Atom(_, o)) => return Err(self.err(*o, "expected '('")),
            None => return Err(self.err(self.len, "unexpected end of input")),
        };
        self.pos += 1;
        let label = match self.toks.get(self.pos) {
            Some(Tok::Atom(a, _)) => {
                self.pos += 1;
                a.clone()
            }
            _ => String::new(),
        };
        let mut children = Vec::new();
        loop {
            match self.toks.get(self.pos).cloned() {
                None => return Err(self.err(open, "unbalanced parenthesis: '(' is never closed")),
                Some(Tok::Close(_)) => {
                    self.pos += 1;
                    break;
                }
                Some(Tok::Open(_)) => children.push(self.node()?),
                Some(Tok::Atom(a, _)) => {
                    self.pos += 1;
                    children.push(ConstituencyNode::leaf("", unescape_terminal(&a)));
                }
            }
        }
        // A pre-terminal "(DET Le)" becomes a leaf carrying both label and form.
        if children.len() == 1 && children[0].label.is_empty() && children[0].leaf_form.is_some() {
            let form = children.pop().and_then(|c| c.leaf_form);
            return Ok(ConstituencyNode {
                label,
                children: Vec::new(),
                leaf_form: form,
            });
        }
        if children.is_empty() {
            return Err(self.err(open, "empty constituent"));
        }
        Ok(ConstituencyNode::node(label, children))
    }
}

/// Parses one Penn-style bracketed tree, e.g. `(SENT (NP (DET Le) (NC chat)) (VN (V dort)))`.
pub fn parse_bracketed_tree(input: &str) -> Result<ConstituencyNode, IngestError> {
    if input.trim().is_empty() {
        return Err(IngestError::Tree {
            offset: 0,
            message: "empty input".into(),
        });
    }
    let mut parser = Parser {
        toks: lex(input),
        pos: 0,
        len: input.len(),
    };
    let root = parser.node()?;
    if let Some(extra) = parser.toks.get(parser.pos) {
        let offset = match extra {
            Tok::Open(o) | Tok::Close(o) | Tok::Atom(_, o) => *o,
        };
        return Err(parser.err(offset, "unexpected input after the tree"));
    }
    Ok(root)
}
