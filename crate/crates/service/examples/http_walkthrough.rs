//! One student works a factoring problem over HTTP: a wrong answer, two
//! hints, the bottom-out, then every step and `done`.

use apprentice_core::domains::Catalog;
use apprentice_service::config::Config;
use apprentice_service::http::AppState;
use apprentice_service::storage::MemoryStorage;
use serde_json::{json, Value};

async fn post(client: &reqwest::Client, url: String, token: Option<&str>, body: Value) -> Value {
    let mut req = client.post(url).json(&body);
    if let Some(t) = token {
        req = req.bearer_auth(t);
    }
    let res = req.send().await.expect("server is up");
    let status = res.status();
    let body: Value = res.json().await.expect("JSON body");
    println!("  <- {status} {body}");
    body
}

#[tokio::main]
async fn main() {
    let config = Config::default();
    let platform = apprentice_service::open_platform(&config, Box::new(MemoryStorage::default())).expect("platform");
    let addr = apprentice_service::spawn(AppState::new(platform, None)).await.expect("bind");
    let base = format!("http://{addr}/api");
    let client = reqwest::Client::new();

    println!("POST /sessions");
    let session = post(&client, format!("{base}/sessions"), None, json!({"student_id": "ada", "consent": true})).await;
    let token = session["token"].as_str().unwrap();

    println!("POST /tutors/factoring/problems");
    let created = post(&client, format!("{base}/tutors/factoring/problems"), Some(token), json!({})).await;
    let problem = &created["problem"];
    let id = problem["id"].as_str().unwrap();
    println!("\n{}: {}\n", problem["name"], problem["statement"]);

    // The server knows the answers; this client recomputes them from the id.
    let catalog = Catalog::builtin();
    let trace = catalog.solve(&catalog.regenerate(id).unwrap()).unwrap();

    for step in problem["steps"].as_array().unwrap() {
        let slot = step["slot"].as_str().unwrap();
        let attempts = format!("{base}/problems/{id}/steps/{slot}/attempts");
        if step["order"] == json!(0) {
            println!("POST {slot}/attempts (wrong)");
            post(&client, attempts.clone(), Some(token), json!({"input": "1, 1"})).await;
            for _ in 0..3 {
                println!("POST {slot}/hints");
                post(&client, format!("{base}/problems/{id}/steps/{slot}/hints"), Some(token), json!({})).await;
            }
        }
        let answer = trace.preferred(slot).unwrap().value.to_plain();
        println!("POST {slot}/attempts {answer:?}");
        post(&client, attempts, Some(token), json!({"input": answer})).await;
    }
    println!("POST done");
    post(&client, format!("{base}/problems/{id}/done"), Some(token), json!({})).await;

    let mastery: Value = client
        .get(format!("{base}/profile/mastery"))
        .bearer_auth(token)
        .send()
        .await
        .unwrap()
        .json()
        .await
        .unwrap();
    println!("\nmastery:");
    for kc in mastery["mastery"].as_array().unwrap() {
        println!("  {:<24} {:.3}", kc["kc_id"].as_str().unwrap(), kc["p_mastery"].as_f64().unwrap());
    }
}
