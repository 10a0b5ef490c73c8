//! The XML subset used by every OOML input: page definitions, macro libraries,
//! scheme files, data documents and the `Screen` envelope.
//!
//! Supported: elements, attributes, character data, the five predefined
//! entities plus numeric character references, comments and a leading XML
//! declaration. Rejected: CDATA sections, DTDs, processing instructions and
//! namespace declarations.
//!
//! Text handling is deliberately lossy: each run of character data is trimmed,
//! whitespace-only runs are dropped, and the remaining runs of an element are
//! joined with a single space into [`XmlNode::text`]. Child order is kept
//! separately, so the position of text relative to child elements is not
//! preserved.

use std::fmt;

use thiserror::Error;

/// Maximum element nesting accepted by the parser.
pub const MAX_NESTING: usize = 256;

/// 1-based line/column of a construct in its source file.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct SourcePos {
    pub line: u32,
    pub column: u32,
}

impl SourcePos {
    pub fn new(line: u32, column: u32) -> Self {
        Self {
            line: line.max(1),
            column: column.max(1),
        }
    }
}

impl fmt::Display for SourcePos {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.column)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum XmlError {
    #[error("{pos}: malformed XML: {reason}")]
    Malformed { pos: SourcePos, reason: String },
    #[error("{pos}: unsupported XML feature: {feature}")]
    Unsupported {
        pos: SourcePos,
        feature: &'static str,
    },
}

impl XmlError {
    pub fn pos(&self) -> SourcePos {
        match self {
            XmlError::Malformed { pos, .. } | XmlError::Unsupported { pos, .. } => *pos,
        }
    }
}

/// A parsed element.
///
/// Equality is structural: the source position is ignored and attributes are
/// compared as a set.
#[derive(Debug, Clone, Default)]
pub struct XmlNode {
    pub name: String,
    pub attrs: Vec<(String, String)>,
    pub children: Vec<XmlNode>,
    pub text: String,
    pub pos: Option<SourcePos>,
}

/// An element with no name, attributes, children or text. Used as the base
/// for lookups that must find nothing.
pub static EMPTY_NODE: XmlNode = XmlNode {
    name: String::new(),
    attrs: Vec::new(),
    children: Vec::new(),
    text: String::new(),
    pos: None,
};

impl XmlNode {
    pub fn new(name: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            ..Self::default()
        }
    }

    pub fn with_text(mut self, text: impl Into<String>) -> Self {
        self.text = text.into();
        self
    }

    /// Sets an attribute, replacing an existing value of the same name.
    pub fn with_attr(mut self, name: impl Into<String>, value: impl Into<String>) -> Self {
        self.set_attr(name, value);
        self
    }

    pub fn with_child(mut self, child: XmlNode) -> Self {
        self.children.push(child);
        self
    }

    pub fn set_attr(&mut self, name: impl Into<String>, value: impl Into<String>) {
        let name = name.into();
        let value = value.into();
        match self.attrs.iter_mut().find(|(n, _)| *n == name) {
            Some(slot) => slot.1 = value,
            None => self.attrs.push((name, value)),
        }
    }

    pub fn attr(&self, name: &str) -> Option<&str> {
        self.attrs
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, v)| v.as_str())
    }

    /// First child element with the given name.
    pub fn child(&self, name: &str) -> Option<&XmlNode> {
        self.children.iter().find(|c| c.name == name)
    }

    pub fn child_mut(&mut self, name: &str) -> Option<&mut XmlNode> {
        self.children.iter_mut().find(|c| c.name == name)
    }

    pub fn children_named<'a>(&'a self, name: &'a str) -> impl Iterator<Item = &'a XmlNode> + 'a {
        self.children.iter().filter(move |c| c.name == name)
    }

    /// Depth-first pre-order traversal including `self`.
    pub fn descendants(&self) -> Vec<&XmlNode> {
        let mut out = Vec::new();
        let mut stack = vec![self];
        while let Some(node) = stack.pop() {
            out.push(node);
            stack.extend(node.children.iter().rev());
        }
        out
    }
}

impl PartialEq for XmlNode {
    fn eq(&self, other: &Self) -> bool {
        if self.name != other.name
            || self.text != other.text
            || self.attrs.len() != other.attrs.len()
            || self.children != other.children
        {
            return false;
        }
        self.attrs
            .iter()
            .all(|(n, v)| other.attr(n) == Some(v.as_str()))
    }
}

impl Eq for XmlNode {}

impl fmt::Display for XmlNode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&serialize_xml(self))
    }
}

/// True when `name` matches `[A-Za-z_][A-Za-z0-9_.:-]*`.
pub fn is_element_name(name: &str) -> bool {
    let mut chars = name.chars();
    match chars.next() {
        Some(c) if c.is_ascii_alphabetic() || c == '_' => {}
        _ => return false,
    }
    chars.all(|c| c.is_ascii_alphanumeric() || matches!(c, '_' | '.' | ':' | '-'))
}

/// Escapes `&`, `<`, `>` and `"` for inclusion in HTML text or a
/// double-quoted attribute. Not idempotent: already-escaped input is escaped
/// again.
pub fn escape_html(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    push_escaped(&mut out, text);
    out
}

/// Appending form of [`escape_html`].
pub fn push_escaped(out: &mut String, text: &str) {
    for c in text.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            c => out.push(c),
        }
    }
}

/// Serializes a node as compact XML. Text is written before child elements.
pub fn serialize_xml(node: &XmlNode) -> String {
    let mut out = String::new();
    write_node(&mut out, node);
    out
}

fn write_node(out: &mut String, node: &XmlNode) {
    out.push('<');
    out.push_str(&node.name);
    for (name, value) in &node.attrs {
        out.push(' ');
        out.push_str(name);
        out.push_str("=\"");
        push_escaped(out, value);
        out.push('"');
    }
    if node.text.is_empty() && node.children.is_empty() {
        out.push_str("/>");
        return;
    }
    out.push('>');
    for c in node.text.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            c => out.push(c),
        }
    }
    for child in &node.children {
        write_node(out, child);
    }
    out.push_str("</");
    out.push_str(&node.name);
    out.push('>');
}

/// Parses a UTF-8 document with exactly one root element.
pub fn parse_xml(input: &[u8]) -> Result<XmlNode, XmlError> {
    let text = std::str::from_utf8(input).map_err(|e| {
        let prefix = &input[..e.valid_up_to()];
        let line = prefix.iter().filter(|&&b| b == b'\n').count() as u32 + 1;
        let column = prefix.iter().rev().take_while(|&&b| b != b'\n').count() as u32 + 1;
        XmlError::Malformed {
            pos: SourcePos::new(line, column),
            reason: "invalid UTF-8".into(),
        }
    })?;
    Parser::new(text).parse_document()
}

struct Open {
    node: XmlNode,
    runs: Vec<String>,
}

struct Parser<'a> {
    src: &'a str,
    at: usize,
    line_starts: Vec<usize>,
}

impl<'a> Parser<'a> {
    fn new(src: &'a str) -> Self {
        let src = src.strip_prefix('\u{feff}').unwrap_or(src);
        let mut line_starts = vec![0];
        line_starts.extend(src.match_indices('\n').map(|(i, _)| i + 1));
        Self {
            src,
            at: 0,
            line_starts,
        }
    }

    fn pos_at(&self, offset: usize) -> SourcePos {
        let line = self.line_starts.partition_point(|&s| s <= offset);
        let start = self.line_starts[line - 1];
        let column = self.src[start..offset.min(self.src.len())].chars().count() + 1;
        SourcePos::new(line as u32, column as u32)
    }

    fn malformed(&self, offset: usize, reason: impl Into<String>) -> XmlError {
        XmlError::Malformed {
            pos: self.pos_at(offset),
            reason: reason.into(),
        }
    }

    fn unsupported(&self, offset: usize, feature: &'static str) -> XmlError {
        XmlError::Unsupported {
            pos: self.pos_at(offset),
            feature,
        }
    }

    fn rest(&self) -> &'a str {
        &self.src[self.at..]
    }

    fn skip_ws(&mut self) {
        let rest = self.rest();
        self.at += rest.len() - rest.trim_start().len();
    }

    fn parse_document(mut self) -> Result<XmlNode, XmlError> {
        if self.rest().starts_with("<?xml") {
            let after = &self.rest()[5..];
            if after.starts_with(|c: char| c.is_whitespace() || c == '?') {
                match self.rest().find("?>") {
                    Some(end) => self.at += end + 2,
                    None => return Err(self.malformed(self.at, "unterminated XML declaration")),
                }
            }
        }

        let mut stack: Vec<Open> = Vec::new();
        let mut root: Option<XmlNode> = None;

        while self.at < self.src.len() {
            let rest = self.rest();
            let start = self.at;
            if let Some(comment) = rest.strip_prefix("<!--") {
                match comment.find("-->") {
                    Some(end) => self.at += 4 + end + 3,
                    None => return Err(self.malformed(start, "unterminated comment")),
                }
            } else if rest.starts_with("<![CDATA[") {
                return Err(self.unsupported(start, "CDATA section"));
            } else if rest.starts_with("<!") {
                return Err(self.unsupported(start, "document type declaration"));
            } else if rest.starts_with("<?") {
                return Err(self.unsupported(start, "processing instruction"));
            } else if rest.starts_with("</") {
                self.at += 2;
                let name = self.read_name()?;
                self.skip_ws();
                if !self.rest().starts_with('>') {
                    return Err(self.malformed(self.at, format!("expected '>' to close </{name}")));
                }
                self.at += 1;
                let Some(open) = stack.pop() else {
                    return Err(self.malformed(start, format!("unexpected closing tag </{name}>")));
                };
                if open.node.name != name {
                    return Err(self.malformed(
                        start,
                        format!("closing tag </{name}> does not match <{}>", open.node.name),
                    ));
                }
                self.finish(open, &mut stack, &mut root, start)?;
            } else if rest.starts_with('<') {
                if stack.is_empty() && root.is_some() {
                    return Err(self.malformed(start, "multiple root elements"));
                }
                if stack.len() >= MAX_NESTING {
                    return Err(self.malformed(start, "elements nested too deeply"));
                }
                self.at += 1;
                let name = self.read_name()?;
                let mut node = XmlNode::new(name);
                node.pos = Some(self.pos_at(start));
                let self_closing = self.read_attrs(&mut node)?;
                let open = Open {
                    node,
                    runs: Vec::new(),
                };
                if self_closing {
                    self.finish(open, &mut stack, &mut root, start)?;
                } else {
                    stack.push(open);
                }
            } else {
                let end = rest.find('<').unwrap_or(rest.len());
                let raw = rest[..end].trim();
                let raw_offset = start + (rest[..end].len() - rest[..end].trim_start().len());
                self.at += end;
                if raw.is_empty() {
                    continue;
                }
                let Some(open) = stack.last_mut() else {
                    return Err(self.malformed(raw_offset, "text outside the root element"));
                };
                let decoded = decode_entities(raw).map_err(|(i, reason)| XmlError::Malformed {
                    pos: self.pos_at(raw_offset + i),
                    reason,
                })?;
                open.runs.push(decoded);
            }
        }

        if let Some(open) = stack.last() {
            return Err(self.malformed(
                self.src.len(),
                format!("element <{}> is never closed", open.node.name),
            ));
        }
        root.ok_or_else(|| self.malformed(self.src.len(), "no root element"))
    }

    fn finish(
        &self,
        open: Open,
        stack: &mut [Open],
        root: &mut Option<XmlNode>,
        offset: usize,
    ) -> Result<(), XmlError> {
        let Open { mut node, runs } = open;
        node.text = runs.join(" ");
        match stack.last_mut() {
            Some(parent) => parent.node.children.push(node),
            None if root.is_some() => return Err(self.malformed(offset, "multiple root elements")),
            None => *root = Some(node),
        }
        Ok(())
    }

    fn read_name(&mut self) -> Result<String, XmlError> {
        let rest = self.rest();
        let len = rest
            .find(|c: char| !(c.is_ascii_alphanumeric() || matches!(c, '_' | '.' | ':' | '-')))
            .unwrap_or(rest.len());
        let name = &rest[..len];
        if !is_element_name(name) {
            return Err(self.malformed(self.at, format!("invalid name {name:?}")));
        }
        self.at += len;
        Ok(name.to_string())
    }

    /// Reads attributes up to and including the tag end; returns true for `/>`.
    fn read_attrs(&mut self, node: &mut XmlNode) -> Result<bool, XmlError> {
        loop {
            let before = self.at;
            self.skip_ws();
            let rest = self.rest();
            if rest.starts_with("/>") {
                self.at += 2;
                return Ok(true);
            }
            if rest.starts_with('>') {
                self.at += 1;
                return Ok(false);
            }
            if rest.is_empty() {
                return Err(self.malformed(self.at, format!("unterminated tag <{}", node.name)));
            }
            if self.at == before {
                return Err(self.malformed(self.at, "expected whitespace before attribute"));
            }
            let name_at = self.at;
            let name = self.read_name()?;
            if name == "xmlns" || name.starts_with("xmlns:") {
                return Err(self.unsupported(name_at, "namespace declaration"));
            }
            self.skip_ws();
            if !self.rest().starts_with('=') {
                return Err(self.malformed(self.at, format!("expected '=' after attribute {name}")));
            }
            self.at += 1;
            self.skip_ws();
            let quote = match self.rest().chars().next() {
                Some(q @ ('"' | '\'')) => q,
                _ => return Err(self.malformed(self.at, "attribute value must be quoted")),
            };
            self.at += 1;
            let value_at = self.at;
            let Some(end) = self.rest().find(quote) else {
                return Err(self.malformed(value_at, "unterminated attribute value"));
            };
            let raw = &self.rest()[..end];
            if let Some(i) = raw.find('<') {
                return Err(self.malformed(value_at + i, "'<' in attribute value"));
            }
            let value = decode_entities(raw).map_err(|(i, reason)| XmlError::Malformed {
                pos: self.pos_at(value_at + i),
                reason,
            })?;
            self.at += end + 1;
            if node.attr(&name).is_some() {
                return Err(self.malformed(name_at, format!("duplicate attribute {name}")));
            }
            node.attrs.push((name, value));
        }
    }
}

/// Decodes entity and character references. On failure returns the byte
/// offset of the offending `&` and a reason.
fn decode_entities(raw: &str) -> Result<String, (usize, String)> {
    if !raw.contains('&') {
        return Ok(raw.to_string());
    }
    let mut out = String::with_capacity(raw.len());
    let mut rest = raw;
    let mut offset = 0;
    while let Some(amp) = rest.find('&') {
        out.push_str(&rest[..amp]);
        let after = &rest[amp + 1..];
        let Some(semi) = after.find(';') else {
            return Err((offset + amp, "'&' without terminating ';'".into()));
        };
        let entity = &after[..semi];
        let decoded = match entity {
            "lt" => Some('<'),
            "gt" => Some('>'),
            "amp" => Some('&'),
            "quot" => Some('"'),
            "apos" => Some('\''),
            _ => entity
                .strip_prefix("#x")
                .map(|hex| u32::from_str_radix(hex, 16))
                .or_else(|| entity.strip_prefix('#').map(|dec| dec.parse::<u32>()))
                .and_then(Result::ok)
                .and_then(char::from_u32),
        };
        match decoded {
            Some(c) => out.push(c),
            None => return Err((offset + amp, format!("unknown entity &{entity};"))),
        }
        let consumed = amp + 1 + semi + 1;
        rest = &rest[consumed..];
        offset += consumed;
    }
    out.push_str(rest);
    Ok(out)
}
