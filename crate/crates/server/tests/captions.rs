use std::collections::HashMap;
use std::time::Duration;

use axum::extract::Query;
use axum::http::StatusCode;
use axum::routing::get;
use axum::Router;
use prepline_server::captions::{CaptionClient, CaptionError};

const VTT: &str = "WEBVTT\n\n00:00:01.000 --> 00:00:02.000\nhello\n";

async fn stub() -> String {
    let app = Router::new().route(
        "/api/timedtext",
        get(|Query(q): Query<HashMap<String, String>>| async move {
            assert_eq!(q.get("fmt").map(String::as_str), Some("vtt"));
            match (q["v"].as_str(), q["lang"].as_str()) {
                ("abc", "en") => (StatusCode::OK, VTT.to_owned()),
                ("abc", "de") => (StatusCode::OK, String::new()),
                ("down", _) => (StatusCode::SERVICE_UNAVAILABLE, String::new()),
                _ => (StatusCode::NOT_FOUND, String::new()),
            }
        }),
    );
    let listener = tokio::net::TcpListener::bind("127.0.0.1:0").await.unwrap();
    let addr = listener.local_addr().unwrap();
    tokio::spawn(async move { axum::serve(listener, app).await.unwrap() });
    format!("http://{addr}/api/timedtext")
}

#[tokio::test]
async fn fetches_document_verbatim() {
    let client = CaptionClient::new(stub().await, Duration::from_secs(2));
    assert_eq!(client.fetch_remote_track("abc", "en").await.unwrap(), VTT);
}

#[tokio::test]
async fn unknown_language_or_video() {
    let client = CaptionClient::new(stub().await, Duration::from_secs(2));
    for (id, lang) in [("abc", "de"), ("zzz", "en")] {
        assert_eq!(
            client.fetch_remote_track(id, lang).await.unwrap_err(),
            CaptionError::NoTrackForLanguage {
                source_id: id.into(),
                language: lang.into()
            }
        );
    }
}

#[tokio::test]
async fn server_errors_and_refused_connections() {
    let client = CaptionClient::new(stub().await, Duration::from_secs(2));
    assert!(matches!(
        client.fetch_remote_track("down", "en").await,
        Err(CaptionError::RemoteUnavailable(_))
    ));
    // bind then drop to get a port nobody listens on
    let port = std::net::TcpListener::bind("127.0.0.1:0").unwrap().local_addr().unwrap().port();
    let refused = CaptionClient::new(format!("http://127.0.0.1:{port}/"), Duration::from_secs(2));
    assert!(matches!(
        refused.fetch_remote_track("abc", "en").await,
        Err(CaptionError::RemoteUnavailable(_))
    ));
}
