//! A loaded site (pages, macros, schemes) and its on-disk source.

use std::fs;
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex, RwLock};
use std::thread;
use std::time::{Duration, SystemTime};

use thiserror::Error;

use crate::ast::{load_macros, load_pages, validate, AstError, Diagnostic, MacroTable, PageSet};
use crate::render::{render_page_with_warnings, RenderError};
use crate::widgets::{load_schemes, select_scheme, SchemeError, SchemeSet, StyleScheme};
use crate::xml::{parse_xml, XmlError, XmlNode};

#[derive(Debug, Error)]
pub enum LoadErrorKind {
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Xml(#[from] XmlError),
    #[error(transparent)]
    Ast(#[from] AstError),
    #[error(transparent)]
    Scheme(#[from] SchemeError),
}

/// A failure loading one input file. Displays as `path:line:col: message`
/// when the position is known.
#[derive(Debug, Error)]
pub struct LoadError {
    pub path: String,
    #[source]
    pub kind: LoadErrorKind,
}

impl LoadError {
    pub fn new(path: impl Into<String>, kind: impl Into<LoadErrorKind>) -> Self {
        Self {
            path: path.into(),
            kind: kind.into(),
        }
    }

    fn has_pos(&self) -> bool {
        match &self.kind {
            LoadErrorKind::Io(_) => false,
            LoadErrorKind::Xml(_) => true,
            LoadErrorKind::Ast(e) => e.pos().is_some(),
            LoadErrorKind::Scheme(e) => e.pos().is_some(),
        }
    }
}

impl std::fmt::Display for LoadError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if self.has_pos() {
            write!(f, "{}:{}", self.path, self.kind)
        } else {
            write!(f, "{}: {}", self.path, self.kind)
        }
    }
}

/// Reads and parses an XML file.
pub fn load_xml_file(path: &Path) -> Result<XmlNode, LoadError> {
    let shown = path.display().to_string();
    let bytes = fs::read(path).map_err(|e| LoadError::new(&shown, e))?;
    parse_xml(&bytes).map_err(|e| LoadError::new(shown, e))
}

/// Pages, macros and schemes ready to render.
#[derive(Debug, Clone, Default)]
pub struct Site {
    pub pages: PageSet,
    pub macros: MacroTable,
    pub schemes: SchemeSet,
}

impl Site {
    /// Builds a site from parsed documents. Macros defined inline in the
    /// pages document are merged with those of the macros document.
    pub fn from_xml(
        pages: &XmlNode,
        macros: Option<&XmlNode>,
        schemes: Option<&XmlNode>,
    ) -> Result<Site, LoadErrorKind> {
        let page_set = load_pages(pages)?;
        let mut table = load_macros(pages)?;
        if let Some(doc) = macros {
            table.merge(load_macros(doc)?)?;
        }
        let schemes = match schemes {
            Some(doc) => load_schemes(doc)?,
            None => SchemeSet::default(),
        };
        Ok(Site {
            pages: page_set,
            macros: table,
            schemes,
        })
    }

    pub fn validate(&self) -> Vec<Diagnostic> {
        validate(&self.pages, &self.macros)
    }

    /// The scheme selected by the Screen's `Config/Domain`.
    pub fn scheme_for(&self, screen: &XmlNode) -> &StyleScheme {
        let domain = screen
            .child("Config")
            .and_then(|c| c.child("Domain"))
            .map(|d| d.text.as_str())
            .unwrap_or("");
        select_scheme(&self.schemes, domain)
    }

    pub fn render(&self, page: &str, screen: &XmlNode) -> Result<String, RenderError> {
        self.render_with_warnings(page, screen)
            .map(|(html, _)| html)
    }

    pub fn render_with_warnings(
        &self,
        page: &str,
        screen: &XmlNode,
    ) -> Result<(String, Vec<String>), RenderError> {
        render_page_with_warnings(
            page,
            screen,
            &self.pages,
            &self.macros,
            self.scheme_for(screen),
        )
    }
}

/// File locations a site is loaded from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SiteSource {
    pub pages: PathBuf,
    pub macros: Option<PathBuf>,
    pub schemes: Option<PathBuf>,
}

impl SiteSource {
    pub fn new(pages: impl Into<PathBuf>) -> Self {
        Self {
            pages: pages.into(),
            macros: None,
            schemes: None,
        }
    }

    pub fn load(&self) -> Result<Site, LoadError> {
        let pages = load_xml_file(&self.pages)?;
        let macros = self.macros.as_deref().map(load_xml_file).transpose()?;
        let schemes = self.schemes.as_deref().map(load_xml_file).transpose()?;
        // Attribute errors to the file most likely responsible.
        let page_set = load_pages(&pages).map_err(|e| self.err(&self.pages, e))?;
        let mut table = load_macros(&pages).map_err(|e| self.err(&self.pages, e))?;
        if let (Some(doc), Some(path)) = (&macros, &self.macros) {
            let extra = load_macros(doc).map_err(|e| self.err(path, e))?;
            table.merge(extra).map_err(|e| self.err(path, e))?;
        }
        let scheme_set = match (&schemes, &self.schemes) {
            (Some(doc), Some(path)) => load_schemes(doc).map_err(|e| self.err(path, e))?,
            _ => SchemeSet::default(),
        };
        Ok(Site {
            pages: page_set,
            macros: table,
            schemes: scheme_set,
        })
    }

    fn err(&self, path: &Path, e: impl Into<LoadErrorKind>) -> LoadError {
        LoadError::new(path.display().to_string(), e)
    }

    fn paths(&self) -> impl Iterator<Item = &Path> {
        std::iter::once(self.pages.as_path())
            .chain(self.macros.as_deref())
            .chain(self.schemes.as_deref())
    }

    /// Modification times of every source file, for change detection.
    pub fn stamp(&self) -> Vec<Option<SystemTime>> {
        self.paths()
            .map(|p| fs::metadata(p).and_then(|m| m.modified()).ok())
            .collect()
    }
}

/// A site that reloads from disk when its files change. Each reader gets one
/// consistent snapshot; reloads swap the whole snapshot atomically.
pub struct LiveSite {
    source: SiteSource,
    current: RwLock<Arc<Site>>,
    stamp: Mutex<Vec<Option<SystemTime>>>,
}

impl LiveSite {
    pub fn load(source: SiteSource) -> Result<Self, LoadError> {
        let stamp = source.stamp();
        let site = source.load()?;
        Ok(Self {
            source,
            current: RwLock::new(Arc::new(site)),
            stamp: Mutex::new(stamp),
        })
    }

    /// A fixed site with no files behind it.
    pub fn fixed(site: Site) -> Self {
        Self {
            source: SiteSource::new(PathBuf::new()),
            current: RwLock::new(Arc::new(site)),
            stamp: Mutex::new(Vec::new()),
        }
    }

    pub fn snapshot(&self) -> Arc<Site> {
        self.current
            .read()
            .unwrap_or_else(|e| e.into_inner())
            .clone()
    }

    /// Reloads when any source file's modification time changed. A failed
    /// reload keeps the previous snapshot.
    pub fn reload_if_changed(&self) -> Result<bool, LoadError> {
        if self.source.pages.as_os_str().is_empty() {
            return Ok(false);
        }
        let mut stamp = self.stamp.lock().unwrap_or_else(|e| e.into_inner());
        let now = self.source.stamp();
        if now == *stamp {
            return Ok(false);
        }
        *stamp = now;
        let site = self.source.load()?;
        *self.current.write().unwrap_or_else(|e| e.into_inner()) = Arc::new(site);
        Ok(true)
    }

    /// Polls for changes on a background thread.
    pub fn watch(self: &Arc<Self>, interval: Duration) -> thread::JoinHandle<()> {
        let live = Arc::downgrade(self);
        thread::spawn(move || loop {
            thread::sleep(interval);
            let Some(live) = live.upgrade() else { return };
            match live.reload_if_changed() {
                Ok(true) => log::info!("reloaded {}", live.source.pages.display()),
                Ok(false) => {}
                Err(e) => log::error!("reload failed, keeping previous site: {e}"),
            }
        })
    }
}
