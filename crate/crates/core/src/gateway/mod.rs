//! Request handling: CGI parameter parsing, the `Screen` envelope, page
//! routing and the HTTP front door.
//!
//! Batch rendering and the server share [`render_screen`], so a page rendered
//! from the command line and one served over HTTP are byte-identical for the
//! same inputs.

mod server;

use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::path::DotPath;
use crate::render::{RenderError, RenderErrorKind};
use crate::site::{load_xml_file, LoadError, Site};
use crate::xml::{escape_html, XmlNode};

pub use server::{HttpServer, ServerHandle};

/// Client address used when none is known, e.g. for batch renders.
pub const LOCAL_IP: &str = "127.0.0.1";

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GatewayError {
    #[error("bad percent-encoding in {0:?}")]
    BadEncoding(String),
}

/// Decoded query parameters in arrival order.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct QueryParams(pub Vec<(String, String)>);

impl QueryParams {
    pub fn iter(&self) -> impl Iterator<Item = (&str, &str)> {
        self.0.iter().map(|(k, v)| (k.as_str(), v.as_str()))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn extend(&mut self, other: QueryParams) {
        self.0.extend(other.0);
    }
}

fn hex(b: u8) -> Option<u8> {
    (b as char).to_digit(16).map(|d| d as u8)
}

/// `application/x-www-form-urlencoded` decoding of one key or value.
fn form_decode(raw: &str, token: &str) -> Result<String, GatewayError> {
    let bad = || GatewayError::BadEncoding(token.to_string());
    let bytes = raw.as_bytes();
    let mut out = Vec::with_capacity(bytes.len());
    let mut i = 0;
    while i < bytes.len() {
        match bytes[i] {
            b'+' => out.push(b' '),
            b'%' => {
                let hi = bytes.get(i + 1).copied().and_then(hex).ok_or_else(bad)?;
                let lo = bytes.get(i + 2).copied().and_then(hex).ok_or_else(bad)?;
                out.push(hi << 4 | lo);
                i += 2;
            }
            b => out.push(b),
        }
        i += 1;
    }
    String::from_utf8(out).map_err(|_| bad())
}

/// Splits a raw query string (no leading `?`) into decoded pairs. A token
/// without `=` has an empty value; empty tokens are skipped.
pub fn parse_query(query: &str) -> Result<QueryParams, GatewayError> {
    let mut params = Vec::new();
    for token in query.split('&').filter(|t| !t.is_empty()) {
        let (key, value) = token.split_once('=').unwrap_or((token, ""));
        params.push((form_decode(key, token)?, form_decode(value, token)?));
    }
    Ok(QueryParams(params))
}

/// Expands dot-keyed parameters into nested elements under `<Input>`, and
/// reports keys that were skipped because they are not valid paths.
///
/// Intermediate segments merge into the most recent element of that name;
/// the final segment always appends a new element, so a repeated key yields
/// siblings in arrival order.
pub fn params_to_xml_with_diagnostics(params: &QueryParams) -> (XmlNode, Vec<String>) {
    let mut input = XmlNode::new("Input");
    let mut skipped = Vec::new();
    for (key, value) in params.iter() {
        let Ok(path) = DotPath::parse(key) else {
            skipped.push(format!("skipped CGI parameter {key:?}: not a dot path"));
            continue;
        };
        let (leaf, parents) = path.segments().split_last().expect("paths are non-empty");
        let mut node = &mut input;
        for segment in parents {
            let existing = node.children.iter().rposition(|c| c.name == *segment);
            let index = match existing {
                Some(i) => i,
                None => {
                    node.children.push(XmlNode::new(segment.clone()));
                    node.children.len() - 1
                }
            };
            node = &mut node.children[index];
        }
        node.children
            .push(XmlNode::new(leaf.clone()).with_text(value));
    }
    (input, skipped)
}

pub fn params_to_xml(params: &QueryParams) -> XmlNode {
    let (input, skipped) = params_to_xml_with_diagnostics(params);
    for message in skipped {
        log::warn!("{message}");
    }
    input
}

/// Normalizes a data document to a `<Data>` element: a `<Data>` root is used
/// as is, a root with a `<Data>` child yields that child, anything else is
/// wrapped.
pub fn data_section(doc: XmlNode) -> XmlNode {
    if doc.name == "Data" {
        return doc;
    }
    let mut doc = doc;
    if let Some(i) = doc.children.iter().position(|c| c.name == "Data") {
        return doc.children.swap_remove(i);
    }
    XmlNode::new("Data").with_child(doc)
}

/// Builds the `<Screen>` envelope with `Config`, `Input` and `Data` sections.
pub fn build_screen(
    page: &str,
    client_ip: &str,
    domain: &str,
    params: &QueryParams,
    data: Option<XmlNode>,
) -> XmlNode {
    let config = XmlNode::new("Config")
        .with_child(XmlNode::new("IP").with_text(client_ip))
        .with_child(XmlNode::new("Page").with_text(page))
        .with_child(XmlNode::new("Domain").with_text(domain));
    XmlNode::new("Screen")
        .with_child(config)
        .with_child(params_to_xml(params))
        .with_child(
            data.map(data_section)
                .unwrap_or_else(|| XmlNode::new("Data")),
        )
}

/// Everything that varies per render besides the site itself.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ScreenInputs<'a> {
    pub page: &'a str,
    pub client_ip: &'a str,
    pub domain: &'a str,
    pub params: QueryParams,
    pub data_file: Option<PathBuf>,
}

#[derive(Debug, Error)]
pub enum ServeError {
    #[error(transparent)]
    Load(#[from] LoadError),
    #[error(transparent)]
    Render(#[from] RenderError),
}

/// The shared rendering path: loads the data file (if any), builds the
/// Screen and renders the page.
pub fn render_screen(site: &Site, inputs: &ScreenInputs<'_>) -> Result<String, ServeError> {
    let data = inputs.data_file.as_deref().map(load_xml_file).transpose()?;
    let screen = build_screen(
        inputs.page,
        inputs.client_ip,
        inputs.domain,
        &inputs.params,
        data,
    );
    let (html, warnings) = site.render_with_warnings(inputs.page, &screen)?;
    for w in warnings {
        log::warn!("{}: {w}", inputs.page);
    }
    Ok(html)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Request {
    pub method: String,
    /// URL path without the query string.
    pub path: String,
    pub query: String,
    /// Form-encoded body, used for POST.
    pub body: String,
    pub client_ip: String,
    /// `Host` header, if sent.
    pub host: Option<String>,
}

impl Request {
    pub fn get(target: &str) -> Self {
        let (path, query) = target.split_once('?').unwrap_or((target, ""));
        Self {
            method: "GET".into(),
            path: path.into(),
            query: query.into(),
            body: String::new(),
            client_ip: LOCAL_IP.into(),
            host: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Response {
    pub status: u16,
    pub headers: Vec<(String, String)>,
    pub body: String,
}

impl Response {
    fn html(status: u16, body: String) -> Self {
        Self {
            status,
            headers: vec![("Content-Type".into(), "text/html; charset=utf-8".into())],
            body,
        }
    }

    fn error(status: u16, reason: &str, detail: &str) -> Self {
        let body = format!(
            "<!DOCTYPE html>\n<html>\n<head><title>{status} {reason}</title></head>\n<body><h1>{status} {reason}</h1><p>{}</p></body>\n</html>\n",
            escape_html(detail)
        );
        Self::html(status, body)
    }

    pub fn header(&self, name: &str) -> Option<&str> {
        self.headers
            .iter()
            .find(|(n, _)| n.eq_ignore_ascii_case(name))
            .map(|(_, v)| v.as_str())
    }
}

/// Server-wide settings.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ServerConfig {
    /// Directory holding `{page}.xml` data files.
    pub data_dir: Option<PathBuf>,
    /// Fixed domain for scheme selection; the `Host` header is used otherwise.
    pub domain: Option<String>,
}

/// The page a URL path names: its last segment, or `index.html` for a
/// directory path.
pub fn page_name(path: &str) -> Result<String, GatewayError> {
    let last = path.rsplit('/').next().unwrap_or("");
    if last.is_empty() {
        return Ok("index.html".into());
    }
    form_decode(&last.replace('+', "%2B"), path)
}

fn data_file_for(dir: Option<&Path>, page: &str) -> Option<PathBuf> {
    let file = dir?.join(format!("{page}.xml"));
    file.is_file().then_some(file)
}

/// Routes and renders one request against a site snapshot.
pub fn handle_request(request: &Request, site: &Site, config: &ServerConfig) -> Response {
    if request.method != "GET" && request.method != "POST" {
        let mut r = Response::error(405, "Method Not Allowed", "only GET and POST are supported");
        r.headers.push(("Allow".into(), "GET, POST".into()));
        return r;
    }
    let page = match page_name(&request.path) {
        Ok(p) => p,
        Err(e) => return Response::error(400, "Bad Request", &e.to_string()),
    };
    let mut params = match parse_query(&request.query) {
        Ok(p) => p,
        Err(e) => return Response::error(400, "Bad Request", &e.to_string()),
    };
    if request.method == "POST" {
        match parse_query(request.body.trim_end()) {
            Ok(p) => params.extend(p),
            Err(e) => return Response::error(400, "Bad Request", &e.to_string()),
        }
    }
    if site.pages.get(&page).is_none() {
        return Response::error(404, "Not Found", &format!("no page named {page:?}"));
    }
    let host_domain = request
        .host
        .as_deref()
        .map(|h| h.rsplit_once(':').map_or(h, |(name, _)| name));
    let domain = config.domain.as_deref().or(host_domain).unwrap_or("");
    let inputs = ScreenInputs {
        page: &page,
        client_ip: &request.client_ip,
        domain,
        params,
        data_file: data_file_for(config.data_dir.as_deref(), &page),
    };
    match render_screen(site, &inputs) {
        Ok(html) => Response::html(200, html),
        Err(ServeError::Render(RenderError {
            kind: RenderErrorKind::PageNotFound(name),
            ..
        })) => Response::error(404, "Not Found", &format!("no page named {name:?}")),
        Err(e) => {
            log::error!("{page}: {e}");
            Response::error(500, "Internal Server Error", &e.to_string())
        }
    }
}
