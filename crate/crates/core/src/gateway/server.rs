use std::io::Read;
use std::net::SocketAddr;
use std::sync::Arc;
use std::thread;

use tiny_http::{Header, Server};

use super::{handle_request, Request, Response, ServerConfig};
use crate::site::LiveSite;

/// Upper bound on request bodies read for POST.
const MAX_BODY: u64 = 1 << 20;

/// An HTTP listener that renders pages from a [`LiveSite`].
pub struct HttpServer {
    server: Arc<Server>,
    site: Arc<LiveSite>,
    config: Arc<ServerConfig>,
}

impl HttpServer {
    /// Binds to `addr`; port 0 picks a free port.
    pub fn bind(
        addr: &str,
        site: Arc<LiveSite>,
        config: ServerConfig,
    ) -> Result<Self, Box<dyn std::error::Error + Send + Sync>> {
        Ok(Self {
            server: Arc::new(Server::http(addr)?),
            site,
            config: Arc::new(config),
        })
    }

    pub fn local_addr(&self) -> Option<SocketAddr> {
        self.server.server_addr().to_ip()
    }

    pub fn local_port(&self) -> u16 {
        self.local_addr().map_or(0, |a| a.port())
    }

    /// Serves requests on `workers` threads, blocking the caller. Use
    /// [`HttpServer::spawn`] for a server that can be stopped.
    pub fn run(&self, workers: usize) {
        let handles: Vec<_> = (0..workers.max(1))
            .map(|_| {
                let server = Arc::clone(&self.server);
                let site = Arc::clone(&self.site);
                let config = Arc::clone(&self.config);
                thread::spawn(move || {
                    for request in server.incoming_requests() {
                        serve_one(request, &site, &config);
                    }
                })
            })
            .collect();
        for h in handles {
            let _ = h.join();
        }
    }

    /// Runs the server on background threads and returns immediately.
    pub fn spawn(self, workers: usize) -> ServerHandle {
        let server = Arc::clone(&self.server);
        let join = thread::spawn(move || self.run(workers));
        ServerHandle {
            server,
            join: Some(join),
        }
    }
}

/// A server running in the background. Dropping it stops the server.
pub struct ServerHandle {
    server: Arc<Server>,
    join: Option<thread::JoinHandle<()>>,
}

impl ServerHandle {
    pub fn local_port(&self) -> u16 {
        self.server.server_addr().to_ip().map_or(0, |a| a.port())
    }

    pub fn shutdown(mut self) {
        self.stop();
    }

    fn stop(&mut self) {
        self.server.unblock();
        if let Some(join) = self.join.take() {
            // One unblock per worker.
            while !join.is_finished() {
                self.server.unblock();
                thread::sleep(std::time::Duration::from_millis(5));
            }
            let _ = join.join();
        }
    }
}

impl Drop for ServerHandle {
    fn drop(&mut self) {
        self.stop();
    }
}

fn serve_one(mut request: tiny_http::Request, site: &LiveSite, config: &ServerConfig) {
    let url = request.url().to_string();
    let (path, query) = url.split_once('?').unwrap_or((&url, ""));
    let mut body = String::new();
    if request.method() == &tiny_http::Method::Post {
        let _ = request.as_reader().take(MAX_BODY).read_to_string(&mut body);
    }
    let req = Request {
        method: request.method().as_str().to_ascii_uppercase(),
        path: path.to_string(),
        query: query.to_string(),
        body,
        client_ip: request
            .remote_addr()
            .map_or_else(|| super::LOCAL_IP.to_string(), |a| a.ip().to_string()),
        host: request
            .headers()
            .iter()
            .find(|h| h.field.equiv("Host"))
            .map(|h| h.value.as_str().to_string()),
    };
    let snapshot = site.snapshot();
    let Response {
        status,
        headers,
        body,
    } = handle_request(&req, &snapshot, config);
    log::info!("{} {} {}", req.method, url, status);
    let mut response = tiny_http::Response::from_string(body).with_status_code(status);
    for (name, value) in headers {
        if let Ok(h) = Header::from_bytes(name.as_bytes(), value.as_bytes()) {
            response.add_header(h);
        }
    }
    if let Err(e) = request.respond(response) {
        log::warn!("failed to send response for {url}: {e}");
    }
}
