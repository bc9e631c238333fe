//! Loopback completion server speaking the echo-scoring protocol.
//!
//! Token log-probabilities are a hash of the token and its predecessor, so the
//! same text always scores the same. Used for tests and for recording fixtures
//! without network access.

use std::io::{BufRead, BufReader, Read, Write};
use std::net::{SocketAddr, TcpListener, TcpStream};
use std::sync::atomic::{AtomicBool, AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};
use std::thread::JoinHandle;

use serde_json::json;
use sha2::{Digest, Sha256};

#[derive(Debug, Clone, Default)]
pub struct StubOptions {
    /// Answer the first `fail_first` requests with 503.
    pub fail_first: usize,
    /// Leave `logprobs` out of every response.
    pub omit_logprobs: bool,
}

#[derive(Default)]
struct Shared {
    requests: AtomicUsize,
    stop: AtomicBool,
    auth_headers: Mutex<Vec<Option<String>>>,
}

pub struct StubCompletionServer {
    addr: SocketAddr,
    shared: Arc<Shared>,
    handle: Option<JoinHandle<()>>,
}

impl StubCompletionServer {
    pub fn start(options: StubOptions) -> std::io::Result<Self> {
        let listener = TcpListener::bind("127.0.0.1:0")?;
        let addr = listener.local_addr()?;
        let shared = Arc::new(Shared::default());
        let s = Arc::clone(&shared);
        let handle = std::thread::spawn(move || {
            for stream in listener.incoming() {
                if s.stop.load(Ordering::SeqCst) {
                    break;
                }
                let Ok(stream) = stream else { continue };
                let s = Arc::clone(&s);
                let options = options.clone();
                std::thread::spawn(move || {
                    let _ = serve(stream, &s, &options);
                });
            }
        });
        Ok(StubCompletionServer {
            addr,
            shared,
            handle: Some(handle),
        })
    }

    pub fn endpoint(&self) -> String {
        format!("http://{}/v1/completions", self.addr)
    }

    pub fn request_count(&self) -> usize {
        self.shared.requests.load(Ordering::SeqCst)
    }

    /// `Authorization` header of every request received so far.
    pub fn auth_headers(&self) -> Vec<Option<String>> {
        self.shared.auth_headers.lock().expect("stub state poisoned").clone()
    }
}

impl Drop for StubCompletionServer {
    fn drop(&mut self) {
        self.shared.stop.store(true, Ordering::SeqCst);
        // wake the accept loop
        let _ = TcpStream::connect(self.addr);
        if let Some(h) = self.handle.take() {
            let _ = h.join();
        }
    }
}

/// Splits text into runs of alphanumerics and single other characters.
pub fn stub_tokens(text: &str) -> Vec<(usize, String)> {
    let mut out: Vec<(usize, String)> = Vec::new();
    let mut prev_alnum = false;
    for (i, c) in text.chars().enumerate() {
        let alnum = c.is_alphanumeric() || c == '_' || c == '-';
        match out.last_mut() {
            Some((_, tok)) if alnum && prev_alnum => tok.push(c),
            _ => out.push((i, c.to_string())),
        }
        prev_alnum = alnum;
    }
    out
}

/// Log-probability in `[-4.05, -0.05)` for `token` after `prev`.
pub fn stub_logprob(prev: &str, token: &str) -> f64 {
    let d = Sha256::new().chain_update(prev).chain_update([0u8]).chain_update(token).finalize();
    let u = u64::from_le_bytes(d[..8].try_into().expect("32-byte digest")) >> 11;
    -0.05 - 4.0 * (u as f64 / (1u64 << 53) as f64)
}

pub fn stub_response(model: &str, text: &str, omit_logprobs: bool) -> serde_json::Value {
    let toks = stub_tokens(text);
    let mut logprobs = Vec::with_capacity(toks.len());
    for i in 0..toks.len() {
        if i == 0 {
            logprobs.push(serde_json::Value::Null);
        } else {
            logprobs.push(stub_logprob(&toks[i - 1].1, &toks[i].1).into());
        }
    }
    let mut choice = json!({"text": text, "index": 0, "finish_reason": "length"});
    if !omit_logprobs {
        choice["logprobs"] = json!({
            "tokens": toks.iter().map(|t| &t.1).collect::<Vec<_>>(),
            "token_logprobs": logprobs,
            "text_offset": toks.iter().map(|t| t.0).collect::<Vec<_>>(),
        });
    }
    json!({"object": "text_completion", "model": model, "choices": [choice]})
}

fn serve(stream: TcpStream, shared: &Shared, options: &StubOptions) -> std::io::Result<()> {
    let mut reader = BufReader::new(stream.try_clone()?);
    let mut line = String::new();
    reader.read_line(&mut line)?;
    if line.is_empty() {
        return Ok(());
    }
    let mut content_length = 0usize;
    let mut chunked = false;
    let mut auth = None;
    loop {
        line.clear();
        reader.read_line(&mut line)?;
        let trimmed = line.trim_end();
        if trimmed.is_empty() {
            break;
        }
        if let Some((name, value)) = trimmed.split_once(':') {
            let value = value.trim();
            match name.to_ascii_lowercase().as_str() {
                "content-length" => content_length = value.parse().unwrap_or(0),
                "transfer-encoding" => chunked = value.eq_ignore_ascii_case("chunked"),
                "authorization" => auth = Some(value.to_owned()),
                _ => {}
            }
        }
    }
    let body = if chunked {
        read_chunked(&mut reader)?
    } else {
        let mut buf = vec![0; content_length];
        reader.read_exact(&mut buf)?;
        buf
    };
    let n = shared.requests.fetch_add(1, Ordering::SeqCst);
    shared.auth_headers.lock().expect("stub state poisoned").push(auth);

    let (status, payload) = if n < options.fail_first {
        ("503 Service Unavailable", json!({"error": "overloaded"}))
    } else {
        match serde_json::from_slice::<serde_json::Value>(&body) {
            Ok(req) => {
                let prompt = req["prompt"].as_str().unwrap_or_default();
                let model = req["model"].as_str().unwrap_or_default();
                ("200 OK", stub_response(model, prompt, options.omit_logprobs))
            }
            Err(e) => ("400 Bad Request", json!({"error": e.to_string()})),
        }
    };
    let payload = payload.to_string();
    let mut stream = stream;
    write!(
        stream,
        "HTTP/1.1 {status}\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{payload}",
        payload.len()
    )?;
    stream.flush()
}

fn read_chunked(reader: &mut impl BufRead) -> std::io::Result<Vec<u8>> {
    let mut body = Vec::new();
    let mut line = String::new();
    loop {
        line.clear();
        reader.read_line(&mut line)?;
        let size = usize::from_str_radix(line.trim().split(';').next().unwrap_or("0"), 16).unwrap_or(0);
        if size == 0 {
            line.clear();
            reader.read_line(&mut line)?;
            return Ok(body);
        }
        let start = body.len();
        body.resize(start + size, 0);
        reader.read_exact(&mut body[start..])?;
        line.clear();
        reader.read_line(&mut line)?;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tokens_carry_char_offsets() {
        let toks = stub_tokens(";; é x\n(condition (> 40))");
        assert_eq!(toks[0], (0, ";".into()));
        assert_eq!(toks[3], (3, "é".into()));
        let texts: Vec<_> = toks.iter().map(|t| t.1.as_str()).collect();
        assert!(texts.contains(&"condition"));
        assert!(texts.contains(&"40"));
    }

    #[test]
    fn logprobs_are_negative_and_stable() {
        let a = stub_logprob("(", "condition");
        assert!(a < 0.0 && a >= -4.05);
        assert_eq!(a, stub_logprob("(", "condition"));
        assert_ne!(a, stub_logprob(" ", "condition"));
    }
}
