//! The `ooml` command: batch rendering, a development server and a lint.
//!
//! [`run`] takes the argument vector and output streams and returns the
//! process exit code, so the binary is a thin shim and tests can drive it
//! in-process.

use std::fs;
use std::io::Write;
use std::path::PathBuf;
use std::sync::Arc;
use std::time::Duration;

use clap::{Args, Parser, Subcommand};
use ooml::{
    parse_query, render_screen, HttpServer, LiveSite, ScreenInputs, ServerConfig, SiteSource,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

const RELOAD_INTERVAL: Duration = Duration::from_millis(500);

#[derive(Debug, Parser)]
#[command(name = "ooml", version, about = "Render OOML page structures to HTML")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Render one page to HTML.
    Render(RenderArgs),
    /// Serve pages over HTTP, reloading when the site files change.
    Serve(ServeArgs),
    /// Load and lint a site.
    Check(CheckArgs),
}

#[derive(Debug, Args)]
pub struct SiteArgs {
    /// Pages document (`<Pages>`).
    #[arg(long)]
    pub pages: PathBuf,
    /// Separate macros document (`<Macros>`).
    #[arg(long)]
    pub macros: Option<PathBuf>,
    /// Style schemes document (`<Schemes>`).
    #[arg(long)]
    pub schemes: Option<PathBuf>,
}

impl SiteArgs {
    fn source(&self) -> SiteSource {
        SiteSource {
            pages: self.pages.clone(),
            macros: self.macros.clone(),
            schemes: self.schemes.clone(),
        }
    }
}

#[derive(Debug, Args)]
pub struct RenderArgs {
    #[command(flatten)]
    pub site: SiteArgs,
    /// Page name, e.g. `search.html`.
    #[arg(long)]
    pub page: String,
    /// Data document bound to the `Data` section.
    #[arg(long)]
    pub data: Option<PathBuf>,
    /// CGI query string bound to the `Input` section.
    #[arg(long, default_value = "")]
    pub query: String,
    /// Domain used for scheme selection.
    #[arg(long, default_value = "")]
    pub domain: String,
    /// Client IP bound to `Config.IP`.
    #[arg(long, default_value = ooml::LOCAL_IP)]
    pub ip: String,
    /// Output file; stdout when absent.
    #[arg(short = 'o', long = "output")]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    #[command(flatten)]
    pub site: SiteArgs,
    /// Directory of `{page}.xml` data files.
    #[arg(long)]
    pub data_dir: Option<PathBuf>,
    #[arg(long, env = "OOML_PORT", default_value_t = 8080)]
    pub port: u16,
    /// Address to bind.
    #[arg(long, default_value = "0.0.0.0")]
    pub bind: String,
    /// Fixed domain for scheme selection; the Host header is used otherwise.
    #[arg(long)]
    pub domain: Option<String>,
    #[arg(long, default_value_t = 4)]
    pub workers: usize,
}

#[derive(Debug, Args)]
pub struct CheckArgs {
    #[command(flatten)]
    pub site: SiteArgs,
    /// Treat diagnostics as errors.
    #[arg(long)]
    pub strict: bool,
}

/// Parses `argv` (including the program name) and runs the command.
pub fn run<I, T>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if e.use_stderr() {
                err.write_all(text.as_bytes())
            } else {
                out.write_all(text.as_bytes())
            };
            return code;
        }
    };
    match cli.command {
        Command::Render(args) => render(&args, out, err),
        Command::Serve(args) => serve(&args, err),
        Command::Check(args) => check(&args, out, err),
    }
}

fn render(args: &RenderArgs, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let params = match parse_query(&args.query) {
        Ok(p) => p,
        Err(e) => {
            let _ = writeln!(err, "error: --query: {e}");
            return EXIT_USAGE;
        }
    };
    let site = match args.site.source().load() {
        Ok(site) => site,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            return EXIT_FAILURE;
        }
    };
    let inputs = ScreenInputs {
        page: &args.page,
        client_ip: &args.ip,
        domain: &args.domain,
        params,
        data_file: args.data.clone(),
    };
    let html = match render_screen(&site, &inputs) {
        Ok(html) => html,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            return EXIT_FAILURE;
        }
    };
    let written = match &args.output {
        Some(path) => fs::write(path, &html).map_err(|e| format!("{}: {e}", path.display())),
        None => out.write_all(html.as_bytes()).map_err(|e| e.to_string()),
    };
    match written {
        Ok(()) => EXIT_OK,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            EXIT_FAILURE
        }
    }
}

fn check(args: &CheckArgs, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let site = match args.site.source().load() {
        Ok(site) => site,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            return EXIT_FAILURE;
        }
    };
    let diagnostics = site.validate();
    let level = if args.strict { "error" } else { "warning" };
    for d in &diagnostics {
        let _ = writeln!(err, "{level}: {}: {d}", args.site.pages.display());
    }
    let _ = writeln!(
        out,
        "{} pages, {} macros, {} schemes, {} diagnostics",
        site.pages.len(),
        site.macros.len(),
        site.schemes.len(),
        diagnostics.len()
    );
    if args.strict && !diagnostics.is_empty() {
        EXIT_FAILURE
    } else {
        EXIT_OK
    }
}

fn serve(args: &ServeArgs, err: &mut dyn Write) -> i32 {
    let live = match LiveSite::load(args.site.source()) {
        Ok(live) => Arc::new(live),
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            return EXIT_FAILURE;
        }
    };
    let config = ServerConfig {
        data_dir: args.data_dir.clone(),
        domain: args.domain.clone(),
    };
    let addr = format!("{}:{}", args.bind, args.port);
    let server = match HttpServer::bind(&addr, Arc::clone(&live), config) {
        Ok(s) => s,
        Err(e) => {
            let _ = writeln!(err, "error: cannot bind {addr}: {e}");
            return EXIT_FAILURE;
        }
    };
    let _watcher = live.watch(RELOAD_INTERVAL);
    let _ = writeln!(
        err,
        "listening on http://{}:{}/",
        args.bind,
        server.local_port()
    );
    let _ = err.flush();
    server.run(args.workers);
    EXIT_OK
}
