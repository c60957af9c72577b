//! Client for an external sentence-pair scoring service.
//!
//! Transport: frames of a 4-byte big-endian length followed by a UTF-8 JSON
//! body, over TCP or a child process's stdio. The client opens with
//!
//! ```json
//! {"type": "handshake", "protocol_version": 1}
//! ```
//!
//! and expects `{"protocol_version": 1, "feature_length": F, "model_name": "..."}`.
//! Each score request `{"request_id", "sentence_a", "sentence_b"}` gets exactly
//! one reply: either `{"request_id", "features": [..F], "scalar_score",
//! "truncated"}` or an error frame `{"request_id", "error", "message"}`.

use std::io::{self, BufReader, Read, Write};
use std::net::{TcpStream, ToSocketAddrs};
use std::process::{Child, Command, Stdio};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Mutex;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use super::{LexicalScorer, ScorerError, SemanticFeatures, SemanticScorer, SentencePair};

pub const PROTOCOL_VERSION: u32 = 1;
/// Frames above this size are rejected.
pub const MAX_FRAME_BYTES: usize = 16 << 20;

pub fn write_frame<W: Write + ?Sized, T: Serialize>(w: &mut W, body: &T) -> io::Result<()> {
    let bytes = serde_json::to_vec(body).map_err(io::Error::other)?;
    if bytes.len() > MAX_FRAME_BYTES {
        return Err(io::Error::new(io::ErrorKind::InvalidInput, "frame too large"));
    }
    w.write_all(&(bytes.len() as u32).to_be_bytes())?;
    w.write_all(&bytes)?;
    w.flush()
}

pub fn read_frame<R: Read + ?Sized>(r: &mut R) -> io::Result<Vec<u8>> {
    let mut len = [0u8; 4];
    r.read_exact(&mut len)?;
    let len = u32::from_be_bytes(len) as usize;
    if len > MAX_FRAME_BYTES {
        return Err(io::Error::new(io::ErrorKind::InvalidData, "frame too large"));
    }
    let mut body = vec![0u8; len];
    r.read_exact(&mut body)?;
    Ok(body)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HandshakeRequest {
    #[serde(rename = "type")]
    pub kind: String,
    pub protocol_version: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HandshakeReply {
    pub protocol_version: u32,
    pub feature_length: usize,
    pub model_name: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreRequest {
    pub request_id: String,
    pub sentence_a: String,
    pub sentence_b: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreResponse {
    pub request_id: String,
    pub features: Vec<f64>,
    pub scalar_score: f64,
    #[serde(default)]
    pub truncated: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorFrame {
    pub request_id: Option<String>,
    pub error: String,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Reply {
    Error(ErrorFrame),
    Score(ScoreResponse),
}

struct Conn {
    reader: Box<dyn Read + Send>,
    writer: Box<dyn Write + Send>,
    _child: Option<Child>,
}

/// Sentence-pair scorer backed by a remote service.
pub struct NeuralScorer {
    conn: Mutex<Conn>,
    reply: HandshakeReply,
    next_id: AtomicU64,
    endpoint: String,
}

fn unavailable(e: impl std::fmt::Display) -> ScorerError {
    ScorerError::ScorerUnavailable(e.to_string())
}

impl NeuralScorer {
    /// Connects over TCP and performs the handshake.
    pub fn connect_tcp(addr: &str, timeout: Duration) -> Result<Self, ScorerError> {
        let sock = addr
            .to_socket_addrs()
            .map_err(unavailable)?
            .next()
            .ok_or_else(|| unavailable(format!("cannot resolve {addr}")))?;
        let stream = TcpStream::connect_timeout(&sock, timeout).map_err(unavailable)?;
        stream.set_read_timeout(Some(timeout)).map_err(unavailable)?;
        stream.set_nodelay(true).ok();
        let reader = stream.try_clone().map_err(unavailable)?;
        Self::handshake(
            Conn { reader: Box::new(BufReader::new(reader)), writer: Box::new(stream), _child: None },
            format!("tcp://{addr}"),
        )
    }

    /// Spawns `program args..` and talks to it over stdin/stdout.
    pub fn spawn_stdio(program: &str, args: &[String]) -> Result<Self, ScorerError> {
        let mut child = Command::new(program)
            .args(args)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::inherit())
            .spawn()
            .map_err(unavailable)?;
        let stdin = child.stdin.take().ok_or_else(|| unavailable("no stdin"))?;
        let stdout = child.stdout.take().ok_or_else(|| unavailable("no stdout"))?;
        Self::handshake(
            Conn { reader: Box::new(BufReader::new(stdout)), writer: Box::new(stdin), _child: Some(child) },
            format!("stdio://{program}"),
        )
    }

    /// Uses an already open duplex stream.
    pub fn over_streams(
        reader: impl Read + Send + 'static,
        writer: impl Write + Send + 'static,
        endpoint: &str,
    ) -> Result<Self, ScorerError> {
        Self::handshake(
            Conn { reader: Box::new(reader), writer: Box::new(writer), _child: None },
            endpoint.to_string(),
        )
    }

    fn handshake(mut conn: Conn, endpoint: String) -> Result<Self, ScorerError> {
        write_frame(
            &mut conn.writer,
            &HandshakeRequest { kind: "handshake".into(), protocol_version: PROTOCOL_VERSION },
        )
        .map_err(unavailable)?;
        let body = read_frame(&mut conn.reader).map_err(unavailable)?;
        let reply: HandshakeReply = serde_json::from_slice(&body)
            .map_err(|e| unavailable(format!("bad handshake reply: {e}")))?;
        if reply.protocol_version != PROTOCOL_VERSION {
            return Err(unavailable(format!(
                "protocol version {} (client speaks {PROTOCOL_VERSION})",
                reply.protocol_version
            )));
        }
        if reply.feature_length == 0 {
            return Err(unavailable("service declared zero features"));
        }
        Ok(Self { conn: Mutex::new(conn), reply, next_id: AtomicU64::new(0), endpoint })
    }

    pub fn model_name(&self) -> &str {
        &self.reply.model_name
    }

    pub fn endpoint(&self) -> &str {
        &self.endpoint
    }
}

impl SemanticScorer for NeuralScorer {
    fn identity(&self) -> String {
        format!("neural:{}@{}", self.reply.model_name, self.endpoint)
    }

    fn feature_len(&self) -> usize {
        self.reply.feature_length
    }

    fn score(&self, pair: &SentencePair) -> Result<SemanticFeatures, ScorerError> {
        let id = self.next_id.fetch_add(1, Ordering::Relaxed).to_string();
        let req = ScoreRequest {
            request_id: id.clone(),
            sentence_a: pair.sentence_a.clone(),
            sentence_b: pair.sentence_b.clone(),
        };
        let mut conn = self.conn.lock().map_err(|_| unavailable("connection poisoned"))?;
        write_frame(&mut conn.writer, &req).map_err(unavailable)?;
        let body = read_frame(&mut conn.reader).map_err(unavailable)?;
        drop(conn);
        let reply: Reply = serde_json::from_slice(&body)
            .map_err(|e| unavailable(format!("bad reply: {e}")))?;
        match reply {
            Reply::Error(e) => Err(ScorerError::Remote { code: e.error, message: e.message }),
            Reply::Score(r) => {
                if r.request_id != id {
                    return Err(unavailable(format!("reply for {} to request {id}", r.request_id)));
                }
                if r.features.len() != self.reply.feature_length {
                    return Err(ScorerError::FeatureLength {
                        got: r.features.len(),
                        declared: self.reply.feature_length,
                    });
                }
                if r.features.iter().any(|x| !x.is_finite()) || !(0.0..=1.0).contains(&r.scalar_score) {
                    return Err(unavailable("non-finite or out-of-range scores"));
                }
                Ok(SemanticFeatures { vector: r.features, scalar_score: r.scalar_score })
            }
        }
    }
}

/// Why the lexical scorer was used instead of a configured neural endpoint.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FallbackEvent {
    pub endpoint: String,
    pub reason: String,
}

/// Tries `endpoint` (`host:port`, or `stdio:<program>`); on any failure
/// returns `fallback` together with the recorded event.
pub fn connect_or_fallback(
    endpoint: &str,
    timeout: Duration,
    fallback: LexicalScorer,
) -> (Box<dyn SemanticScorer>, Option<FallbackEvent>) {
    let attempt = match endpoint.strip_prefix("stdio:") {
        Some(cmd) => {
            let mut parts = cmd.split_whitespace();
            match parts.next() {
                Some(program) => NeuralScorer::spawn_stdio(program, &parts.map(String::from).collect::<Vec<_>>()),
                None => Err(unavailable("empty stdio command")),
            }
        }
        None => NeuralScorer::connect_tcp(endpoint, timeout),
    };
    match attempt {
        Ok(s) => (Box::new(s), None),
        Err(e) => (
            Box::new(fallback),
            Some(FallbackEvent { endpoint: endpoint.to_string(), reason: e.to_string() }),
        ),
    }
}
