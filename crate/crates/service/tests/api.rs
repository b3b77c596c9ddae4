use std::net::SocketAddr;
use std::path::PathBuf;
use std::time::Duration;

use facplan_service::{serve, AppState, ServiceConfig};
use reqwest::{Client, StatusCode};
use serde_json::{json, Value};
use tokio::sync::oneshot;

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures").join(name)
}

struct Server {
    base: String,
    state: AppState,
    client: Client,
    _stop: oneshot::Sender<()>,
    _dir: tempfile::TempDir,
}

impl Server {
    async fn start() -> Server {
        let dir = tempfile::tempdir().unwrap();
        let state = AppState::open(&ServiceConfig::new(dir.path())).unwrap();
        let listener = tokio::net::TcpListener::bind("127.0.0.1:0").await.unwrap();
        let addr: SocketAddr = listener.local_addr().unwrap();
        let (stop, rx) = oneshot::channel();
        tokio::spawn(serve(listener, state.clone(), async {
            let _ = rx.await;
        }));
        Server {
            base: format!("http://{addr}"),
            state,
            client: Client::new(),
            _stop: stop,
            _dir: dir,
        }
    }

    fn url(&self, path: &str) -> String {
        format!("{}{path}", self.base)
    }

    async fn upload(&self, name: &str) -> String {
        let text = std::fs::read_to_string(fixture(name)).unwrap();
        let resp = self.client.post(self.url("/scenarios")).body(text).send().await.unwrap();
        assert_eq!(resp.status(), StatusCode::CREATED);
        resp.json::<Value>().await.unwrap()["id"].as_str().unwrap().to_string()
    }

    async fn post_json(&self, path: &str, body: Value) -> reqwest::Response {
        self.client.post(self.url(path)).json(&body).send().await.unwrap()
    }

    async fn get(&self, path: &str) -> reqwest::Response {
        self.client.get(self.url(path)).send().await.unwrap()
    }

    async fn wait(&self, job: &str) -> Value {
        for _ in 0..600 {
            let v: Value = self.get(&format!("/jobs/{job}")).await.json().await.unwrap();
            if v["state"] == "done" || v["state"] == "failed" {
                return v;
            }
            tokio::time::sleep(Duration::from_millis(50)).await;
        }
        panic!("job {job} did not finish");
    }
}

#[tokio::test]
async fn health_endpoint_responds() {
    let s = Server::start().await;
    let resp = s.get("/healthz").await;
    assert_eq!(resp.status(), StatusCode::OK);
    assert_eq!(resp.text().await.unwrap(), "ok");
}

#[tokio::test]
async fn uploaded_scenario_reads_back() {
    let s = Server::start().await;
    let id = s.upload("golden_16.scn").await;
    let v: Value = s.get(&format!("/scenarios/{id}?from=2&count=3")).await.json().await.unwrap();
    assert_eq!(v["rows"], 16);
    assert_eq!(v["page"], json!({"from": 2, "count": 3, "total_rows": 16}));
    assert_eq!(v["grids"]["friction"].as_array().unwrap().len(), 3);
    assert_eq!(v["grids"]["population"].as_array().unwrap().len(), 5);
    let text = s.get(&format!("/scenarios/{id}?format=text")).await.text().await.unwrap();
    assert_eq!(text, std::fs::read_to_string(fixture("golden_16.scn")).unwrap());
}

#[tokio::test]
async fn generated_scenario_matches_seed() {
    let s = Server::start().await;
    let resp = s
        .post_json("/scenarios", json!({"generate": {"seed": 0, "rows": 16, "cols": 16, "districts": 3, "years": 5}}))
        .await;
    assert_eq!(resp.status(), StatusCode::CREATED);
    let id = resp.json::<Value>().await.unwrap()["id"].as_str().unwrap().to_string();
    let text = s.get(&format!("/scenarios/{id}?format=text")).await.text().await.unwrap();
    assert_eq!(text, std::fs::read_to_string(fixture("golden_16.scn")).unwrap());
}

#[tokio::test]
async fn malformed_input_is_400() {
    let s = Server::start().await;
    let resp = s.client.post(s.url("/scenarios")).body("facplan-scenario 1\nname = broken\nrows = x\n").send().await.unwrap();
    assert_eq!(resp.status(), StatusCode::BAD_REQUEST);
    let v: Value = resp.json().await.unwrap();
    assert!(v["error"].as_str().unwrap().contains("line"), "{v}");

    let id = s.upload("golden_16.scn").await;
    let resp = s.post_json(&format!("/scenarios/{id}/plan"), json!({"policy": "dp9"})).await;
    assert_eq!(resp.status(), StatusCode::BAD_REQUEST);
    let resp = s.post_json(&format!("/scenarios/{id}/plan"), json!({"unknown": 1})).await;
    assert_eq!(resp.status(), StatusCode::BAD_REQUEST);
}

#[tokio::test]
async fn unknown_ids_are_404() {
    let s = Server::start().await;
    assert_eq!(s.get("/scenarios/s99").await.status(), StatusCode::NOT_FOUND);
    assert_eq!(s.get("/jobs/j99").await.status(), StatusCode::NOT_FOUND);
    assert_eq!(s.get("/jobs/j99/result").await.status(), StatusCode::NOT_FOUND);
    assert_eq!(s.post_json("/scenarios/s99/plan", json!({})).await.status(), StatusCode::NOT_FOUND);
}

#[tokio::test]
async fn invalid_requests_are_422() {
    let s = Server::start().await;
    let id = s.upload("golden_16.scn").await;
    let resp = s.post_json(&format!("/scenarios/{id}/plan"), json!({"budgets": [1, 1]})).await;
    assert_eq!(resp.status(), StatusCode::UNPROCESSABLE_ENTITY);
    let resp = s.post_json(&format!("/scenarios/{id}/plan"), json!({"budgets": [999, 1, 1, 1, 1]})).await;
    assert_eq!(resp.status(), StatusCode::UNPROCESSABLE_ENTITY);
    let resp = s.post_json(&format!("/scenarios/{id}/plan"), json!({"algorithm": "multistep-advice"})).await;
    assert_eq!(resp.status(), StatusCode::UNPROCESSABLE_ENTITY);
    let resp = s.post_json(&format!("/scenarios/{id}/refine"), json!({"round": 9, "advice": [{"row": 0, "col": 0}]})).await;
    assert_eq!(resp.status(), StatusCode::UNPROCESSABLE_ENTITY);
}

#[tokio::test]
async fn plan_result_matches_golden_and_reports_progress() {
    let s = Server::start().await;
    let id = s.upload("golden_16.scn").await;
    let resp = s.post_json(&format!("/scenarios/{id}/plan"), json!({"policy": "dp0"})).await;
    assert_eq!(resp.status(), StatusCode::ACCEPTED);
    let job: Value = resp.json().await.unwrap();
    assert_eq!(job["state"], "queued");
    let job_id = job["id"].as_str().unwrap();
    let done = s.wait(job_id).await;
    assert_eq!(done["state"], "done");
    assert_eq!(done["progress"], json!({"completed": 5, "total": 5}));
    let body = s.get(&format!("/jobs/{job_id}/result")).await.text().await.unwrap();
    assert_eq!(body, std::fs::read_to_string(fixture("golden_16_dp0.json")).unwrap());
}

#[tokio::test]
async fn result_is_404_until_done_and_edits_conflict_with_pending_jobs() {
    let s = Server::start().await;
    let id = s.upload("golden_16.scn").await;
    let paused = s.state.pause().await;
    let job: Value = s.post_json(&format!("/scenarios/{id}/plan"), json!({})).await.json().await.unwrap();
    let job_id = job["id"].as_str().unwrap().to_string();
    assert_eq!(s.get(&format!("/jobs/{job_id}/result")).await.status(), StatusCode::NOT_FOUND);
    let text = std::fs::read_to_string(fixture("golden_16.scn")).unwrap();
    let put = s.client.put(s.url(&format!("/scenarios/{id}"))).body(text.clone()).send().await.unwrap();
    assert_eq!(put.status(), StatusCode::CONFLICT);

    drop(paused);
    assert_eq!(s.wait(&job_id).await["state"], "done");
    let put = s.client.put(s.url(&format!("/scenarios/{id}"))).body(text).send().await.unwrap();
    assert_eq!(put.status(), StatusCode::OK);
    assert_eq!(put.json::<Value>().await.unwrap()["version"], 2);
    let old: Value = s.get(&format!("/jobs/{job_id}")).await.json().await.unwrap();
    assert_eq!(old["scenario_version"], 1);
}

#[tokio::test]
async fn refining_a_plan_round_never_loses_value() {
    let s = Server::start().await;
    let id = s.upload("golden_16.scn").await;
    let job: Value = s.post_json(&format!("/scenarios/{id}/plan"), json!({"policy": "dp1"})).await.json().await.unwrap();
    let job_id = job["id"].as_str().unwrap();
    s.wait(job_id).await;
    let plan: Value = s.get(&format!("/jobs/{job_id}/result")).await.json().await.unwrap();
    let cells = |r: &Value| -> Vec<Value> { r["selected"].as_array().unwrap().iter().map(|f| f["cell"].clone()).collect() };
    let rounds = plan["rounds"].as_array().unwrap();
    let mut fixed = serde_json::Map::new();
    for r in &rounds[1..] {
        fixed.insert(r["round"].to_string(), Value::Array(cells(r)));
    }
    let body = json!({"round": 1, "advice": cells(&rounds[0]), "permutations": 4, "seed": 7, "fixed": fixed});
    let resp = s.post_json(&format!("/scenarios/{id}/refine"), body).await;
    assert_eq!(resp.status(), StatusCode::ACCEPTED);
    let refine_id = resp.json::<Value>().await.unwrap()["id"].as_str().unwrap().to_string();
    assert_eq!(s.wait(&refine_id).await["state"], "done");
    let out: Value = s.get(&format!("/jobs/{refine_id}/result")).await.json().await.unwrap();
    let plan_total = plan["total"].as_f64().unwrap();
    assert_eq!(out["advice_value"].as_f64().unwrap(), plan_total);
    assert!(out["refined_value"].as_f64().unwrap() >= plan_total);
}

#[tokio::test]
async fn coverage_overlay_unions_sites_and_existing() {
    let s = Server::start().await;
    let id = s.upload("golden_16.scn").await;
    let v: Value = s.get(&format!("/scenarios/{id}/coverage?cells=3,3;10,10")).await.json().await.unwrap();
    let sites = v["sites"].as_array().unwrap();
    assert_eq!(sites.len(), 2);
    let union: Vec<u64> = v["union"].as_array().unwrap().iter().map(|x| x.as_u64().unwrap()).collect();
    for part in sites.iter().map(|s| &s["covered"]).chain([&v["existing"]]) {
        for c in part.as_array().unwrap() {
            assert!(union.contains(&c.as_u64().unwrap()));
        }
    }
    assert!(union.contains(&(3 * 16 + 3)));
    let resp = s.get(&format!("/scenarios/{id}/coverage?cells=99,99")).await;
    assert_eq!(resp.status(), StatusCode::UNPROCESSABLE_ENTITY);
    let resp = s.get(&format!("/scenarios/{id}/coverage?cells=oops")).await;
    assert_eq!(resp.status(), StatusCode::BAD_REQUEST);
}

#[tokio::test]
async fn cors_headers_are_sent() {
    let s = Server::start().await;
    let resp = s
        .client
        .get(s.url("/healthz"))
        .header("Origin", "http://localhost:5173")
        .send()
        .await
        .unwrap();
    assert!(resp.headers().contains_key("access-control-allow-origin"));
}

#[tokio::test]
async fn saved_scenarios_survive_a_restart() {
    let dir = tempfile::tempdir().unwrap();
    let config = ServiceConfig::new(dir.path());
    {
        let state = AppState::open(&config).unwrap();
        let listener = tokio::net::TcpListener::bind("127.0.0.1:0").await.unwrap();
        let addr = listener.local_addr().unwrap();
        let (stop, rx) = oneshot::channel::<()>();
        let server = tokio::spawn(serve(listener, state, async {
            let _ = rx.await;
        }));
        let text = std::fs::read_to_string(fixture("retrospective_district.scn")).unwrap();
        let resp = Client::new().post(format!("http://{addr}/scenarios")).body(text).send().await.unwrap();
        assert_eq!(resp.status(), StatusCode::CREATED);
        let _ = stop.send(());
        server.await.unwrap().unwrap();
    }
    let state = AppState::open(&config).unwrap();
    let listener = tokio::net::TcpListener::bind("127.0.0.1:0").await.unwrap();
    let addr = listener.local_addr().unwrap();
    tokio::spawn(serve(listener, state, std::future::pending()));
    let resp = Client::new().get(format!("http://{addr}/scenarios/s1")).send().await.unwrap();
    assert_eq!(resp.status(), StatusCode::OK);
}
