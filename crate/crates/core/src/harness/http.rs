use crate::lang::{VarDecl, VarKind};
use crate::value::{Assignment, Value};

use super::{SampleRun, TargetProgram};

/// Size of the message buffer the parser writes into.
pub const MSGBUF_LEN: usize = 100;

const VERSION_FORMAT: &str = "HTTP/1.1";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct HttpOutcome {
    pub uri_len: usize,
    pub ver_len: usize,
    /// Buffer index of the terminating write.
    pub ptr: usize,
    /// Some write landed past the end of the buffer.
    pub overflow: bool,
}

/// Parse `GET <uri> <version>\n` and build `<uri>,<version>\0` in a
/// fixed-size buffer, recording out-of-bounds writes instead of performing them.
pub fn process_request(input: &str) -> Result<HttpOutcome, String> {
    let bytes = input.as_bytes();
    if !bytes.starts_with(b"GET ") {
        return Err("not a GET request".into());
    }
    let mut ptr = 4;
    let mut uri = Vec::new();
    while ptr < bytes.len() && bytes[ptr] != b' ' {
        uri.push(bytes[ptr]);
        ptr += 1;
    }
    if ptr >= bytes.len() {
        return Err("missing version field".into());
    }
    ptr += 1;
    let mut version = Vec::new();
    while ptr < bytes.len() && bytes[ptr] != b'\n' {
        version.push(bytes[ptr]);
        ptr += 1;
    }
    if version.len() < 8 || version[5] != b'1' {
        return Err("Unsupported protocol version".into());
    }

    let mut msgbuf = [0u8; MSGBUF_LEN];
    let mut overflow = false;
    let mut put = |at: usize, b: u8| match msgbuf.get_mut(at) {
        Some(slot) => *slot = b,
        None => overflow = true,
    };
    let mut ptr = 0;
    for &b in &uri {
        put(ptr, b);
        ptr += 1;
    }
    put(ptr, b',');
    ptr += 1;
    for &b in &version {
        put(ptr, b);
        ptr += 1;
    }
    put(ptr, 0);
    Ok(HttpOutcome { uri_len: uri.len(), ver_len: version.len(), ptr, overflow })
}

/// `GET <uri> <version>\n`, with the version's leading bytes replaced by the
/// protocol format so only its length is free.
pub fn materialize_request(uri: &str, version: &str) -> String {
    let n = version.chars().count();
    let prefix: String = VERSION_FORMAT.chars().take(n).collect();
    let rest: String = version.chars().skip(prefix.len()).collect();
    format!("GET {uri} {prefix}{rest}\n")
}

/// The request parser as a sampled program: inputs are the two field
/// contents, the observation is `ptr` at the terminating write.
#[derive(Debug, Clone)]
pub struct HttpParser {
    inputs: Vec<VarDecl>,
    observed: Vec<VarDecl>,
}

impl HttpParser {
    pub fn new(max_field_len: usize) -> Self {
        HttpParser {
            inputs: vec![
                VarDecl::new("uri", VarKind::Str).with_max_len(max_field_len),
                VarDecl::new("ver", VarKind::Str).with_max_len(max_field_len),
            ],
            observed: vec![VarDecl::new("ptr", VarKind::Int)],
        }
    }
}

impl Default for HttpParser {
    fn default() -> Self {
        HttpParser::new(128)
    }
}

impl TargetProgram for HttpParser {
    fn name(&self) -> &str {
        "http"
    }

    fn inputs(&self) -> &[VarDecl] {
        &self.inputs
    }

    fn observed(&self) -> &[VarDecl] {
        &self.observed
    }

    fn step_limit(&self) -> usize {
        0
    }

    fn run(&self, inputs: &Assignment) -> Result<SampleRun, String> {
        let field = |n: &str| inputs.get(n).and_then(Value::as_str).ok_or_else(|| format!("input `{n}` missing"));
        let out = process_request(&materialize_request(field("uri")?, field("ver")?))?;
        let obs: Assignment = [("ptr".to_string(), Value::Int(out.ptr as i64))].into_iter().collect();
        Ok(SampleRun { inputs: inputs.clone(), rows: vec![(0, obs)] })
    }
}
