//! Dot-separated element paths (`Customer.Address.State`) and their
//! resolution against an XML tree.
//!
//! The same convention names macro parameters, dynamic data and CGI keys.
//! Each segment descends exactly one level through child elements; there is
//! no deep search, attribute axis or predicate.

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::xml::XmlNode;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("bad path {0:?}")]
pub struct PathError(pub String);

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct DotPath {
    segments: Vec<String>,
}

fn is_segment(s: &str) -> bool {
    let mut chars = s.chars();
    match chars.next() {
        Some(c) if c.is_ascii_alphabetic() || c == '_' => {}
        _ => return false,
    }
    chars.all(|c| c.is_ascii_alphanumeric() || matches!(c, '_' | ':' | '-'))
}

impl DotPath {
    pub fn parse(text: &str) -> Result<Self, PathError> {
        let segments: Vec<String> = text.split('.').map(str::to_string).collect();
        if text.is_empty() || !segments.iter().all(|s| is_segment(s)) {
            return Err(PathError(text.to_string()));
        }
        Ok(Self { segments })
    }

    pub fn from_segments<I, S>(segments: I) -> Result<Self, PathError>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let segments: Vec<String> = segments.into_iter().map(Into::into).collect();
        if segments.is_empty() || !segments.iter().all(|s| is_segment(s)) {
            return Err(PathError(segments.join(".")));
        }
        Ok(Self { segments })
    }

    pub fn segments(&self) -> &[String] {
        &self.segments
    }

    pub fn first(&self) -> &str {
        &self.segments[0]
    }

    pub fn len(&self) -> usize {
        self.segments.len()
    }

    /// Always false; a path has at least one segment.
    pub fn is_empty(&self) -> bool {
        self.segments.is_empty()
    }

    /// `self` followed by `other`.
    pub fn join(&self, other: &DotPath) -> DotPath {
        let mut segments = self.segments.clone();
        segments.extend(other.segments.iter().cloned());
        DotPath { segments }
    }
}

impl FromStr for DotPath {
    type Err = PathError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::parse(s)
    }
}

impl fmt::Display for DotPath {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.segments.join("."))
    }
}

/// Nodes matched by a path, in document order.
#[derive(Debug, Clone, Default)]
pub struct NodeSet<'a> {
    nodes: Vec<&'a XmlNode>,
}

impl<'a> NodeSet<'a> {
    pub fn first(&self) -> Option<&'a XmlNode> {
        self.nodes.first().copied()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &'a XmlNode> + '_ {
        self.nodes.iter().copied()
    }

    pub fn as_slice(&self) -> &[&'a XmlNode] {
        &self.nodes
    }
}

impl<'a> IntoIterator for NodeSet<'a> {
    type Item = &'a XmlNode;
    type IntoIter = std::vec::IntoIter<&'a XmlNode>;

    fn into_iter(self) -> Self::IntoIter {
        self.nodes.into_iter()
    }
}

/// All nodes reached from `base` by following `path` one child level per
/// segment. An unmatched path yields an empty set.
pub fn resolve<'a>(base: &'a XmlNode, path: &DotPath) -> NodeSet<'a> {
    let mut nodes = Vec::new();
    descend(base, &path.segments, &mut nodes);
    NodeSet { nodes }
}

// Split off the first segment, select matching children, recurse on the rest.
fn descend<'a>(node: &'a XmlNode, segments: &[String], out: &mut Vec<&'a XmlNode>) {
    let Some((head, tail)) = segments.split_first() else {
        out.push(node);
        return;
    };
    for child in node.children.iter().filter(|c| c.name == *head) {
        descend(child, tail, out);
    }
}

/// Text of the first match, or `""` when nothing matches.
pub fn resolve_first_text<'a>(base: &'a XmlNode, path: &DotPath) -> &'a str {
    first_match(base, &path.segments)
        .map(|n| n.text.as_str())
        .unwrap_or("")
}

fn first_match<'a>(node: &'a XmlNode, segments: &[String]) -> Option<&'a XmlNode> {
    let Some((head, tail)) = segments.split_first() else {
        return Some(node);
    };
    node.children
        .iter()
        .filter(|c| c.name == *head)
        .find_map(|c| first_match(c, tail))
}
