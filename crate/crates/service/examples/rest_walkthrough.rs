//! Starts the service in-process on a free port, then drives it over HTTP:
//! generate a region, plan it, poll the job and fetch the coverage overlay.
//!
//! ```text
//! cargo run -p facplan-service --example rest_walkthrough
//! ```

use std::time::Duration;

use facplan_service::{serve, AppState, ServiceConfig};
use serde_json::{json, Value};

#[tokio::main]
async fn main() -> Result<(), Box<dyn std::error::Error>> {
    let data = std::env::temp_dir().join(format!("facplan-walkthrough-{}", std::process::id()));
    std::fs::create_dir_all(&data)?;
    let state = AppState::open(&ServiceConfig::new(&data))?;
    let listener = tokio::net::TcpListener::bind("127.0.0.1:0").await?;
    let base = format!("http://{}", listener.local_addr()?);
    tokio::spawn(serve(listener, state, std::future::pending()));
    println!("service at {base}, data in {}", data.display());

    let http = reqwest::Client::new();
    let created: Value = http
        .post(format!("{base}/scenarios"))
        .json(&json!({"generate": {"seed": 3, "rows": 12, "cols": 12, "years": 3}}))
        .send()
        .await?
        .json()
        .await?;
    let id = created["id"].as_str().unwrap_or_default().to_string();
    println!("POST /scenarios -> {created}");

    let job: Value = http
        .post(format!("{base}/scenarios/{id}/plan"))
        .json(&json!({"policy": "dp2"}))
        .send()
        .await?
        .json()
        .await?;
    let job_id = job["id"].as_str().unwrap_or_default().to_string();
    loop {
        let status: Value = http.get(format!("{base}/jobs/{job_id}")).send().await?.json().await?;
        println!("GET /jobs/{job_id} -> {} {}", status["state"], status["progress"]);
        if status["state"] == "done" || status["state"] == "failed" {
            break;
        }
        tokio::time::sleep(Duration::from_millis(20)).await;
    }
    let plan: Value = http.get(format!("{base}/jobs/{job_id}/result")).send().await?.json().await?;
    let cells: Vec<String> = plan["rounds"][0]["selected"]
        .as_array()
        .into_iter()
        .flatten()
        .map(|f| format!("{},{}", f["cell"]["row"], f["cell"]["col"]))
        .collect();
    println!("total {} (baseline {}), first-year sites {}", plan["total"], plan["baseline"], cells.join(" "));

    let overlay: Value = http
        .get(format!("{base}/scenarios/{id}/coverage?cells={}", cells.join(";")))
        .send()
        .await?
        .json()
        .await?;
    println!(
        "coverage overlay: {} cells from existing sites, {} in the union",
        overlay["existing"].as_array().map_or(0, Vec::len),
        overlay["union"].as_array().map_or(0, Vec::len)
    );
    std::fs::remove_dir_all(&data)?;
    Ok(())
}
