mod stub;

use feverpipe::entailment::{Classifier, ClassifyItem, RemoteClassifier, RemoteConfig, MODEL_URL_ENV};
use feverpipe::EntailmentLabel;
use stub::{serve, toy_reply};

// Sole test in this binary: it mutates the process environment.
#[test]
fn environment_url_overrides_configured_url() {
    let server = serve(|_, req| toy_reply(req));
    let config = RemoteConfig {
        backoff_ms: 1,
        max_retries: 0,
        ..RemoteConfig::new("http://127.0.0.1:1")
    };
    assert_eq!(config.endpoint(), "http://127.0.0.1:1/classify");

    std::env::set_var(MODEL_URL_ENV, format!("{}/", server.url));
    let client = RemoteClassifier::new(config).unwrap();
    assert_eq!(client.endpoint(), format!("{}/classify", server.url));
    let item = ClassifyItem {
        claim_id: 1,
        page: "P",
        line: 0,
        premise: "YES",
        hypothesis: "h",
    };
    let outcome = client.classify_batch(&[item]).unwrap();
    std::env::remove_var(MODEL_URL_ENV);

    assert_eq!(outcome.failed, 0);
    assert_eq!(outcome.verdicts[0].label, EntailmentLabel::Supports);
    assert_eq!(server.requests().len(), 1);
}
