//! Minimal in-process chat-completions server for tests. Compiled only with
//! the `mock-server` feature.

use std::io::{BufRead, BufReader, Read, Write};
use std::net::{TcpListener, TcpStream};
use std::sync::atomic::{AtomicBool, AtomicUsize, Ordering};
use std::sync::Arc;

use serde_json::json;

/// What the handler wants sent back.
pub enum MockReply {
    /// 200 with a chat-completion body wrapping this assistant text.
    Content(String),
    /// A bare status code with an empty JSON body.
    Status(u16),
}

pub type Handler = dyn Fn(&serde_json::Value) -> MockReply + Send + Sync;

/// One-thread-per-connection HTTP server speaking just enough of the
/// protocol for the blocking client.
pub struct MockServer {
    addr: String,
    requests: Arc<AtomicUsize>,
    shutdown: Arc<AtomicBool>,
}

impl MockServer {
    pub fn start(handler: impl Fn(&serde_json::Value) -> MockReply + Send + Sync + 'static) -> Self {
        let listener = TcpListener::bind("127.0.0.1:0").expect("bind mock server");
        let addr = format!("http://{}", listener.local_addr().unwrap());
        let requests = Arc::new(AtomicUsize::new(0));
        let shutdown = Arc::new(AtomicBool::new(false));
        let handler: Arc<Handler> = Arc::new(handler);
        {
            let requests = requests.clone();
            let shutdown = shutdown.clone();
            std::thread::spawn(move || {
                for stream in listener.incoming() {
                    if shutdown.load(Ordering::SeqCst) {
                        break;
                    }
                    let Ok(stream) = stream else { continue };
                    let handler = handler.clone();
                    let requests = requests.clone();
                    std::thread::spawn(move || {
                        let _ = serve_one(stream, &*handler, &requests);
                    });
                }
            });
        }
        Self {
            addr,
            requests,
            shutdown,
        }
    }

    pub fn url(&self) -> &str {
        &self.addr
    }

    pub fn request_count(&self) -> usize {
        self.requests.load(Ordering::SeqCst)
    }
}

impl Drop for MockServer {
    fn drop(&mut self) {
        self.shutdown.store(true, Ordering::SeqCst);
        // Wake the accept loop.
        if let Some(hostport) = self.addr.strip_prefix("http://") {
            let _ = TcpStream::connect(hostport);
        }
    }
}

fn serve_one(
    stream: TcpStream,
    handler: &Handler,
    requests: &AtomicUsize,
) -> std::io::Result<()> {
    let mut reader = BufReader::new(stream.try_clone()?);
    let mut line = String::new();
    reader.read_line(&mut line)?;
    if line.is_empty() {
        return Ok(()); // shutdown poke
    }
    let mut content_length = 0usize;
    loop {
        let mut header = String::new();
        reader.read_line(&mut header)?;
        let header = header.trim();
        if header.is_empty() {
            break;
        }
        if let Some(value) = header
            .to_ascii_lowercase()
            .strip_prefix("content-length:")
            .map(str::trim)
            .and_then(|v| v.parse::<usize>().ok())
        {
            content_length = value;
        }
    }
    let mut body = vec![0u8; content_length];
    reader.read_exact(&mut body)?;
    requests.fetch_add(1, Ordering::SeqCst);

    let parsed: serde_json::Value = serde_json::from_slice(&body).unwrap_or(serde_json::Value::Null);
    let (status, body) = match handler(&parsed) {
        MockReply::Content(text) => (
            200,
            json!({"choices": [{"message": {"role": "assistant", "content": text}}]}).to_string(),
        ),
        MockReply::Status(code) => (code, "{}".to_string()),
    };
    let reason = if status == 200 { "OK" } else { "Error" };
    let mut stream = stream;
    write!(
        stream,
        "HTTP/1.1 {status} {reason}\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{body}",
        body.len()
    )?;
    stream.flush()
}

/// The user-message content of a chat request body.
pub fn user_prompt(body: &serde_json::Value) -> String {
    body["messages"]
        .as_array()
        .and_then(|msgs| {
            msgs.iter()
                .find(|m| m["role"] == "user")
                .and_then(|m| m["content"].as_str())
        })
        .unwrap_or_default()
        .to_string()
}
