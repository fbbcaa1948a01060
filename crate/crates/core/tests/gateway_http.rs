//! Remote backend against a scripted local HTTP server.

use std::io::{BufRead, BufReader, Read, Write};
use std::net::TcpListener;
use std::sync::{Arc, Mutex};
use std::thread::JoinHandle;

use statebench::env::EpisodeSeed;
use statebench::llm::{CallContext, CallPurpose, Gateway, GatewayError, MockRegistry, ModelConfig};
use statebench::prompting::{PromptBundle, TemplateId};

struct Stub {
    url: String,
    requests: Arc<Mutex<Vec<(String, String)>>>,
    handle: JoinHandle<()>,
}

/// Serves one scripted (status, body) per connection, then stops.
fn stub(script: Vec<(u16, String)>) -> Stub {
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let url = format!("http://{}/v1", listener.local_addr().unwrap());
    let requests = Arc::new(Mutex::new(Vec::new()));
    let seen = requests.clone();
    let handle = std::thread::spawn(move || {
        for (status, body) in script {
            let (stream, _) = listener.accept().unwrap();
            let mut reader = BufReader::new(stream.try_clone().unwrap());
            let mut head = String::new();
            let mut length = 0usize;
            loop {
                let mut line = String::new();
                reader.read_line(&mut line).unwrap();
                if let Some(v) = line.to_ascii_lowercase().strip_prefix("content-length:") {
                    length = v.trim().parse().unwrap();
                }
                let end = line == "\r\n";
                head.push_str(&line);
                if end {
                    break;
                }
            }
            let mut payload = vec![0; length];
            reader.read_exact(&mut payload).unwrap();
            seen.lock().unwrap().push((head, String::from_utf8(payload).unwrap()));
            let mut stream = stream;
            write!(
                stream,
                "HTTP/1.1 {status} X\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{body}",
                body.len()
            )
            .unwrap();
            stream.flush().unwrap();
        }
    });
    Stub { url, requests, handle }
}

fn config(url: &str) -> ModelConfig {
    ModelConfig {
        backoff_initial_ms: 1,
        backoff_max_ms: 4,
        timeout_secs: 10.0,
        api_key: Some("test-key".into()),
        ..ModelConfig::remote(url, "test-model")
    }
}

fn bundle() -> PromptBundle {
    PromptBundle {
        system_text: String::new(),
        user_text: "Current observation: x".into(),
        image: None,
        action_count: 5,
        template_id: TemplateId::Agent,
    }
}

fn ctx() -> CallContext {
    CallContext {
        seed: EpisodeSeed::new(0, 0),
        timestep: 1,
        attempt: 0,
        purpose: CallPurpose::Agent,
    }
}

const OK: &str = r#"{"choices":[{"message":{"role":"assistant","content":"Action: 2. Reason: ok"}}],"usage":{"prompt_tokens":812,"completion_tokens":9}}"#;

#[test]
fn two_server_errors_then_success() {
    let s = stub(vec![(503, "{}".into()), (500, "{}".into()), (200, OK.into())]);
    let gw = Gateway::new(config(&s.url), MockRegistry::new()).unwrap();
    let reply = gw.chat(&bundle(), &ctx()).unwrap();
    s.handle.join().unwrap();
    assert_eq!(reply.attempt_count, 3);
    assert_eq!((reply.input_tokens, reply.output_tokens), (812, 9));
    assert!(!reply.approximate_tokens);
    assert_eq!(reply.text, "Action: 2. Reason: ok");

    let requests = s.requests.lock().unwrap();
    let (head, body) = &requests[0];
    assert!(head.starts_with("POST /v1/chat/completions "));
    assert!(head.to_ascii_lowercase().contains("authorization: bearer test-key"));
    let json: serde_json::Value = serde_json::from_str(body).unwrap();
    assert_eq!(json["model"], "test-model");
    assert_eq!(json["messages"].as_array().unwrap().len(), 1);
    assert_eq!(json["messages"][0]["role"], "user");
}

#[test]
fn rate_limit_exhaustion_is_an_incident() {
    let s = stub(vec![(429, "{}".into()); 4]);
    let gw = Gateway::new(config(&s.url), MockRegistry::new()).unwrap();
    let err = gw.chat(&bundle(), &ctx()).unwrap_err();
    s.handle.join().unwrap();
    assert!(matches!(err, GatewayError::Transport { attempts: 4, .. }));
    assert!(err.is_incident());
}

#[test]
fn client_errors_are_not_retried() {
    let s = stub(vec![(400, r#"{"error":"bad"}"#.into())]);
    let gw = Gateway::new(config(&s.url), MockRegistry::new()).unwrap();
    let err = gw.chat(&bundle(), &ctx()).unwrap_err();
    s.handle.join().unwrap();
    assert!(matches!(err, GatewayError::Protocol(_)));
    assert_eq!(s.requests.lock().unwrap().len(), 1);
}

#[test]
fn missing_usage_is_flagged_approximate() {
    let body = r#"{"choices":[{"message":{"content":"Action: 1"}}]}"#;
    let s = stub(vec![(200, body.into())]);
    let gw = Gateway::new(config(&s.url), MockRegistry::new()).unwrap();
    let reply = gw.chat(&bundle(), &ctx()).unwrap();
    s.handle.join().unwrap();
    assert!(reply.approximate_tokens);
    assert_eq!((reply.input_tokens, reply.output_tokens), (3, 2));
}

#[test]
fn connection_refused_exhausts_retries() {
    let port = {
        let l = TcpListener::bind("127.0.0.1:0").unwrap();
        l.local_addr().unwrap().port()
    };
    let mut c = config(&format!("http://127.0.0.1:{port}"));
    c.max_retries = 1;
    let gw = Gateway::new(c, MockRegistry::new()).unwrap();
    assert!(matches!(
        gw.chat(&bundle(), &ctx()),
        Err(GatewayError::Transport { attempts: 2, .. })
    ));
}
