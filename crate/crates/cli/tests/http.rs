//! In-process tests of the HTTP service: the production router is bound to
//! an ephemeral port and driven with a real client over the loopback
//! interface, including a round trip through a mock JSON-RPC node.

use std::future::IntoFuture;
use std::net::SocketAddr;
use std::path::Path;
use std::sync::Arc;

use axum::extract::State;
use axum::routing::post;
use axum::{Json, Router};
use serde_json::{json, Value};

use pmascan::server::{build_router, AppState};
use pmascan_core::features::AccountDb;
use pmascan_core::gnn::{init_params, ModelConfig};

fn fixture_doc() -> Value {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/tests/data/worked_example.json");
    serde_json::from_slice(&std::fs::read(path).unwrap()).unwrap()
}

fn test_state(default_rpc: Option<String>) -> AppState {
    AppState {
        params: init_params(&ModelConfig::default(), 42).unwrap(),
        db: AccountDb::empty(),
        default_rpc,
        model_path: "test://in-memory".into(),
    }
}

async fn spawn_app(state: AppState, max_body_bytes: usize) -> SocketAddr {
    let listener = tokio::net::TcpListener::bind("127.0.0.1:0").await.unwrap();
    let addr = listener.local_addr().unwrap();
    let app = build_router(Arc::new(state), max_body_bytes);
    tokio::spawn(axum::serve(listener, app).into_future());
    addr
}

/// Mock JSON-RPC node answering from a canned method → result table.
async fn spawn_rpc_node(table: Value) -> SocketAddr {
    async fn handler(State(table): State<Arc<Value>>, Json(req): Json<Value>) -> Json<Value> {
        let method = req["method"].as_str().unwrap_or_default();
        match table.get(method) {
            Some(result) => Json(json!({ "jsonrpc": "2.0", "id": req["id"], "result": result })),
            None => Json(json!({
                "jsonrpc": "2.0",
                "id": req["id"],
                "error": { "code": -32601, "message": "method not found" },
            })),
        }
    }
    let app = Router::new()
        .route("/", post(handler))
        .with_state(Arc::new(table));
    let listener = tokio::net::TcpListener::bind("127.0.0.1:0").await.unwrap();
    let addr = listener.local_addr().unwrap();
    tokio::spawn(axum::serve(listener, app).into_future());
    addr
}

#[tokio::test]
async fn health_reports_model_identity() {
    let addr = spawn_app(test_state(None), 1 << 20).await;
    let body: Value = reqwest::get(format!("http://{addr}/health"))
        .await
        .unwrap()
        .json()
        .await
        .unwrap();
    assert_eq!(body["status"], "ok");
    assert_eq!(body["model"]["arch"], "graphsage");
    assert_eq!(body["model"]["in_dim"], 8);
    assert_eq!(body["model"]["seed"], 42);
    assert!(body["model"]["param_count"].as_u64().unwrap() > 0);
}

#[tokio::test]
async fn classify_accepts_an_inline_fixture() {
    let addr = spawn_app(test_state(None), 1 << 20).await;
    let response = reqwest::Client::new()
        .post(format!("http://{addr}/classify"))
        .json(&json!({ "fixture": fixture_doc() }))
        .send()
        .await
        .unwrap();
    assert_eq!(response.status(), 200);
    let body: Value = response.json().await.unwrap();
    assert_eq!(body["graph_stats"]["node_count"], 5);
    assert_eq!(body["graph_stats"]["asset_count"], 2);
    assert_eq!(body["no_transfers"], false);
    let score = body["score"].as_f64().unwrap();
    assert!((0.0..=1.0).contains(&score));
}

#[tokio::test]
async fn malformed_body_is_400_in_phase_parse() {
    let addr = spawn_app(test_state(None), 1 << 20).await;
    let response = reqwest::Client::new()
        .post(format!("http://{addr}/classify"))
        .body("{definitely not json")
        .send()
        .await
        .unwrap();
    assert_eq!(response.status(), 400);
    let body: Value = response.json().await.unwrap();
    assert_eq!(body["phase"], "parse");
    assert!(body["error"].as_str().unwrap().contains("malformed request body"));
}

#[tokio::test]
async fn bad_fixture_contents_are_400_in_phase_parse() {
    let addr = spawn_app(test_state(None), 1 << 20).await;
    // Well-formed request JSON, but the fixture inside violates the schema.
    let response = reqwest::Client::new()
        .post(format!("http://{addr}/classify"))
        .json(&json!({ "fixture": { "tx_hash": "0x12", "chain": "ethereum" } }))
        .send()
        .await
        .unwrap();
    assert_eq!(response.status(), 400);
    let body: Value = response.json().await.unwrap();
    assert_eq!(body["phase"], "parse");
}

#[tokio::test]
async fn missing_source_is_400() {
    let addr = spawn_app(test_state(None), 1 << 20).await;
    let response = reqwest::Client::new()
        .post(format!("http://{addr}/classify"))
        .json(&json!({}))
        .send()
        .await
        .unwrap();
    assert_eq!(response.status(), 400);
    let body: Value = response.json().await.unwrap();
    assert!(body["error"].as_str().unwrap().contains("fixture"));
}

#[tokio::test]
async fn oversized_body_is_413() {
    let addr = spawn_app(test_state(None), 512).await;
    let huge = format!("{{\"fixture\": \"{}\"}}", "x".repeat(4096));
    let response = reqwest::Client::new()
        .post(format!("http://{addr}/classify"))
        .body(huge)
        .send()
        .await
        .unwrap();
    assert_eq!(response.status(), 413);
}

#[tokio::test]
async fn tx_hash_without_any_endpoint_is_400() {
    let addr = spawn_app(test_state(None), 1 << 20).await;
    let response = reqwest::Client::new()
        .post(format!("http://{addr}/classify"))
        .json(&json!({ "tx_hash": "0x51ce51ce51ce51ce51ce51ce51ce51ce51ce51ce51ce51ce51ce51ce51ce51ce" }))
        .send()
        .await
        .unwrap();
    assert_eq!(response.status(), 400);
    let body: Value = response.json().await.unwrap();
    assert_eq!(body["phase"], "parse");
}

#[tokio::test]
async fn tx_hash_resolves_through_the_default_rpc_endpoint() {
    let doc = fixture_doc();
    // Re-nest the flat trace list into a callTracer tree (depths 0,1,2,1).
    let t = doc["call_traces"].as_array().unwrap();
    let frame = |i: usize, calls: Vec<Value>| -> Value {
        json!({
            "type": t[i]["call_kind"], "from": t[i]["from"], "to": t[i]["to"],
            "value": t[i]["value"], "calls": calls,
        })
    };
    let tree = frame(0, vec![frame(1, vec![frame(2, vec![])]), frame(3, vec![])]);
    let node = spawn_rpc_node(json!({
        "eth_chainId": "0x1",
        "eth_getTransactionReceipt": { "logs": doc["event_logs"] },
        "debug_traceTransaction": tree,
    }))
    .await;

    let addr = spawn_app(test_state(Some(format!("http://{node}"))), 1 << 20).await;
    let client = reqwest::Client::new();

    let via_rpc = client
        .post(format!("http://{addr}/classify"))
        .json(&json!({ "tx_hash": doc["tx_hash"] }))
        .send()
        .await
        .unwrap();
    assert_eq!(via_rpc.status(), 200);
    let via_rpc: Value = via_rpc.json().await.unwrap();

    let via_fixture: Value = client
        .post(format!("http://{addr}/classify"))
        .json(&json!({ "fixture": doc }))
        .send()
        .await
        .unwrap()
        .json()
        .await
        .unwrap();

    // Identical transaction through either ingestion path: same verdict.
    assert_eq!(via_rpc["prediction"], via_fixture["prediction"]);
    assert_eq!(via_rpc["score"], via_fixture["score"]);
    assert_eq!(via_rpc["graph_stats"], via_fixture["graph_stats"]);
}

#[tokio::test]
async fn fetch_failures_are_502_in_phase_fetch() {
    // A default endpoint that immediately refuses connections.
    let dead = {
        let listener = tokio::net::TcpListener::bind("127.0.0.1:0").await.unwrap();
        listener.local_addr().unwrap()
    };
    let addr = spawn_app(test_state(Some(format!("http://{dead}"))), 1 << 20).await;
    let response = reqwest::Client::new()
        .post(format!("http://{addr}/classify"))
        .json(&json!({ "tx_hash": "0x51ce51ce51ce51ce51ce51ce51ce51ce51ce51ce51ce51ce51ce51ce51ce51ce" }))
        .send()
        .await
        .unwrap();
    assert_eq!(response.status(), 502);
    let body: Value = response.json().await.unwrap();
    assert_eq!(body["phase"], "fetch");
}

#[tokio::test]
async fn transfer_free_transactions_classify_as_benign() {
    let addr = spawn_app(test_state(None), 1 << 20).await;
    let fixture = json!({
        "tx_hash": "0xabababababababababababababababababababababababababababababababab",
        "chain": "ethereum",
        "call_traces": [{
            "from": "0x1111111111111111111111111111111111111111",
            "to": "0x2222222222222222222222222222222222222222",
            "value": "0x0",
            "depth": 0,
            "call_kind": "CALL",
        }],
        "event_logs": [],
    });
    let body: Value = reqwest::Client::new()
        .post(format!("http://{addr}/classify"))
        .json(&json!({ "fixture": fixture }))
        .send()
        .await
        .unwrap()
        .json()
        .await
        .unwrap();
    assert_eq!(body["prediction"], 0);
    assert_eq!(body["no_transfers"], true);
    assert_eq!(body["graph_stats"]["node_count"], 0);
}

#[tokio::test]
async fn concurrent_requests_return_identical_verdicts() {
    let addr = spawn_app(test_state(None), 1 << 20).await;
    let client = reqwest::Client::new();
    let doc = fixture_doc();

    let mut handles = Vec::new();
    for _ in 0..32 {
        let client = client.clone();
        let doc = doc.clone();
        handles.push(tokio::spawn(async move {
            let body: Value = client
                .post(format!("http://{addr}/classify"))
                .json(&json!({ "fixture": doc }))
                .send()
                .await
                .unwrap()
                .json()
                .await
                .unwrap();
            (
                body["prediction"].clone(),
                body["score"].clone(),
                body["graph_stats"].clone(),
            )
        }));
    }
    let mut results = Vec::new();
    for handle in handles {
        results.push(handle.await.unwrap());
    }
    for other in &results[1..] {
        assert_eq!(&results[0], other);
    }
}
