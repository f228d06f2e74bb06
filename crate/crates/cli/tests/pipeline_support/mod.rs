//! End-to-end helpers: a deterministic mock judge endpoint and a driver that
//! runs the shipped binary through score, infer, select, and eval.
//!
//! Shared by several test targets, each of which uses a subset.
#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::process::Command;

use ensemble_client::mock::{MockReply, MockServer};
use ensemble_core::scoring::render_score_mapping;

const ORDINALS: [&str; 4] = ["One", "Two", "Three", "Four"];

/// Pull the response texts out of a rendered prompt. Responses sit on their
/// own lines as `Response <Ordinal>: <text>`.
fn extract_responses(prompt: &str) -> Vec<String> {
    let mut out = Vec::new();
    for ord in ORDINALS {
        let marker = format!("\nResponse {ord}: ");
        let Some(at) = prompt.rfind(&marker) else {
            break;
        };
        let rest = &prompt[at + marker.len()..];
        let end = rest.find("\n\n").unwrap_or(rest.len());
        out.push(rest[..end].to_string());
    }
    out
}

fn fnv(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf29ce484222325;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x100000001b3);
    }
    h
}

/// Judge endpoint whose score for a response depends only on the judging
/// model and the response text, so reruns are reproducible.
pub fn start_mock_judge() -> MockServer {
    MockServer::start(|body| {
        let model = body["model"].as_str().unwrap_or_default().to_string();
        let prompt = ensemble_client::mock::user_prompt(body);
        let responses = extract_responses(&prompt);
        let scores: Vec<usize> = responses
            .iter()
            .map(|text| 1 + (fnv(format!("{model}\x1f{text}").as_bytes()) % 5) as usize)
            .collect();
        MockReply::Content(render_score_mapping(&scores))
    })
}

pub struct PipelineRun {
    pub out: PathBuf,
    _tmp: tempfile::TempDir,
    _server: MockServer,
}

fn fixtures_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures")
}

fn write_config(dir: &Path, server_url: &str, out: &Path, cache: &Path) -> PathBuf {
    let fixtures = fixtures_dir();
    let config = format!(
        r#"dataset = "{dataset}"
labels = "{labels}"
strategy = "flipped-triple"
seed = 7
out = "{out}"
cache_dir = "{cache}"

[levels]
values = [1.0, 2.0, 3.0, 4.0, 5.0]

[templates]
1 = "{t1}"
2 = "{t2}"
3 = "{t3}"
4 = "{t4}"

[[judges]]
base_url = "{url}"
model_name = "mock-judge-a"
api_key_env = "MOCK_JUDGE_KEY"

[[judges]]
base_url = "{url}"
model_name = "mock-judge-b"
api_key_env = "MOCK_JUDGE_KEY"
"#,
        dataset = fixtures.join("dataset.jsonl").display(),
        labels = fixtures.join("labels.jsonl").display(),
        out = out.display(),
        cache = cache.display(),
        t1 = fixtures.join("templates/single.txt").display(),
        t2 = fixtures.join("templates/double.txt").display(),
        t3 = fixtures.join("templates/triple.txt").display(),
        t4 = fixtures.join("templates/quadruple.txt").display(),
        url = server_url,
    );
    let path = dir.join("pipeline.toml");
    std::fs::write(&path, config).unwrap();
    path
}

fn run_subcommand(config: &Path, args: &[&str]) {
    let status = Command::new(env!("CARGO_BIN_EXE_ensemble"))
        .arg(args[0])
        .args(&args[1..])
        .arg("--config")
        .arg(config)
        .env("MOCK_JUDGE_KEY", "test-secret")
        .status()
        .unwrap();
    assert!(status.success(), "`ensemble {}` failed", args.join(" "));
}

/// Drive the binary through the whole pipeline against a fresh mock judge
/// and a cold cache.
pub fn run_full_pipeline(label: &str) -> PipelineRun {
    let tmp = tempfile::tempdir().unwrap();
    let server = start_mock_judge();
    let out = tmp.path().join(format!("out-{label}"));
    let cache = tmp.path().join(format!("cache-{label}"));
    let config = write_config(tmp.path(), server.url(), &out, &cache);
    run_subcommand(&config, &["score"]);
    run_subcommand(&config, &["infer", "--mode", "weighted"]);
    run_subcommand(&config, &["select"]);
    run_subcommand(&config, &["eval"]);
    PipelineRun {
        out,
        _tmp: tmp,
        _server: server,
    }
}
