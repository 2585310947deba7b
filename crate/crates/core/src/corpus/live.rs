//! Count-only esearch client with a shared rate limiter and retry/backoff.
//!
//! Every query is answered from result counts alone. First-occurrence years
//! are located by bisecting publication-date ranges, so no record is ever
//! fetched.

use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex};
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use super::{BackendKind, CorpusError, CorpusProvider, PopularitySeries};
use crate::vocab::TermRecord;

pub const DEFAULT_BASE_URL: &str = "https://eutils.ncbi.nlm.nih.gov/entrez/eutils/esearch.fcgi";
pub const API_KEY_ENV: &str = "NCBI_API_KEY";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LiveConfig {
    pub base_url: String,
    /// Never serialized into artifacts; normally supplied through the
    /// environment.
    #[serde(skip_serializing)]
    pub api_key: Option<String>,
    /// Requests per second. Defaults to 3 without an API key, 10 with one.
    pub rate: Option<f64>,
    pub max_retries: u32,
    pub backoff_base_ms: u64,
    pub timeout_secs: u64,
    /// Bounds of the date range searched for first occurrences.
    pub earliest_year: i32,
    pub latest_year: i32,
    /// Hard cap on requests issued by one provider, if set.
    pub request_budget: Option<u64>,
}

impl Default for LiveConfig {
    fn default() -> Self {
        Self {
            base_url: DEFAULT_BASE_URL.into(),
            api_key: None,
            rate: None,
            max_retries: 5,
            backoff_base_ms: 500,
            timeout_secs: 30,
            earliest_year: 1900,
            latest_year: 2100,
            request_budget: None,
        }
    }
}

impl LiveConfig {
    pub fn effective_rate(&self) -> f64 {
        self.rate
            .unwrap_or(if self.api_key.is_some() { 10.0 } else { 3.0 })
    }

    /// Fills the API key from the environment when the config has none.
    pub fn with_env_overrides(mut self) -> Self {
        if let Ok(key) = std::env::var(API_KEY_ENV) {
            if !key.trim().is_empty() {
                self.api_key = Some(key);
            }
        }
        self
    }
}

/// Monotonic time source; the mock implementation lets tests observe
/// request spacing without sleeping.
pub trait Clock: Send + Sync {
    /// Time elapsed since the clock's origin.
    fn now(&self) -> Duration;
    fn sleep_until(&self, deadline: Duration);
}

#[derive(Debug)]
pub struct SystemClock {
    origin: Instant,
}

impl Default for SystemClock {
    fn default() -> Self {
        Self {
            origin: Instant::now(),
        }
    }
}

impl Clock for SystemClock {
    fn now(&self) -> Duration {
        self.origin.elapsed()
    }

    fn sleep_until(&self, deadline: Duration) {
        let now = self.now();
        if deadline > now {
            std::thread::sleep(deadline - now);
        }
    }
}

/// Virtual clock that only advances when someone sleeps.
#[derive(Debug, Default)]
pub struct MockClock {
    nanos: AtomicU64,
}

impl Clock for MockClock {
    fn now(&self) -> Duration {
        Duration::from_nanos(self.nanos.load(Ordering::SeqCst))
    }

    fn sleep_until(&self, deadline: Duration) {
        self.nanos
            .fetch_max(deadline.as_nanos() as u64, Ordering::SeqCst);
    }
}

/// Admits callers no faster than `rate` per second. Admission slots are
/// handed out under one lock, so concurrent workers share the budget.
pub struct RateLimiter {
    interval: Duration,
    next_slot: Mutex<Duration>,
    clock: Arc<dyn Clock>,
}

impl RateLimiter {
    pub fn new(rate: f64, clock: Arc<dyn Clock>) -> Self {
        assert!(rate > 0.0, "rate must be positive");
        Self {
            // rounded up so that `rate` slots never fit inside one second
            interval: Duration::from_nanos((1e9 / rate).ceil() as u64),
            next_slot: Mutex::new(Duration::ZERO),
            clock,
        }
    }

    /// Blocks until the caller may issue a request; returns the admission
    /// time on the limiter's clock.
    pub fn acquire(&self) -> Duration {
        let slot = {
            let mut next = self.next_slot.lock().unwrap();
            let slot = (*next).max(self.clock.now());
            *next = slot + self.interval;
            slot
        };
        self.clock.sleep_until(slot);
        slot
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HttpResponse {
    pub status: u16,
    pub body: String,
}

pub trait Transport: Send + Sync {
    /// Issues a GET; `Err` means the request never produced a status.
    fn get(&self, url: &str, params: &[(String, String)]) -> Result<HttpResponse, String>;
}

/// Blocking HTTP transport.
pub struct UreqTransport {
    agent: ureq::Agent,
}

impl UreqTransport {
    pub fn new(timeout: Duration) -> Self {
        let config = ureq::Agent::config_builder()
            .http_status_as_error(false)
            .timeout_global(Some(timeout))
            .build();
        Self {
            agent: ureq::Agent::new_with_config(config),
        }
    }
}

impl Transport for UreqTransport {
    fn get(&self, url: &str, params: &[(String, String)]) -> Result<HttpResponse, String> {
        let mut req = self.agent.get(url);
        for (k, v) in params {
            req = req.query(k, v);
        }
        let resp = req.call().map_err(|e| e.to_string())?;
        let status = resp.status().as_u16();
        let body = resp
            .into_body()
            .read_to_string()
            .map_err(|e| e.to_string())?;
        Ok(HttpResponse { status, body })
    }
}

/// One esearch request.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EsearchQuery {
    pub term: String,
    pub sort: Option<String>,
}

fn quoted(label: &str) -> String {
    format!("\"{}\"", label.replace('"', ""))
}

fn date_range(start: i32, end: i32) -> String {
    if start == end {
        format!("{start}[dp]")
    } else {
        format!("{start}:{end}[dp]")
    }
}

impl EsearchQuery {
    /// Articles with `label` as major topic, descendants excluded.
    pub fn major_topic(label: &str, start: i32, end: i32) -> Self {
        Self {
            term: format!("{}[MAJR:noexp] AND {}", quoted(label), date_range(start, end)),
            sort: None,
        }
    }

    /// Clinical-trial articles indexed with `label` in any role.
    pub fn clinical_trial(label: &str, start: i32, end: i32) -> Self {
        Self {
            term: format!(
                "{}[MeSH Terms] AND clinical trial[pt] AND {}",
                quoted(label),
                date_range(start, end)
            ),
            sort: Some("pub_date".into()),
        }
    }
}

#[derive(Deserialize)]
struct EsearchEnvelope {
    esearchresult: EsearchResult,
}

#[derive(Deserialize)]
struct EsearchResult {
    count: serde_json::Value,
}

pub fn parse_count(body: &str) -> Result<u64, CorpusError> {
    let env: EsearchEnvelope =
        serde_json::from_str(body).map_err(|e| CorpusError::BadResponse(e.to_string()))?;
    match env.esearchresult.count {
        serde_json::Value::String(s) => s
            .trim()
            .parse()
            .map_err(|_| CorpusError::BadResponse(format!("count {s:?} is not an integer"))),
        serde_json::Value::Number(n) => n
            .as_u64()
            .ok_or_else(|| CorpusError::BadResponse(format!("count {n} is not an integer"))),
        other => Err(CorpusError::BadResponse(format!("count field {other}"))),
    }
}

/// Corpus provider backed by an esearch-compatible endpoint.
pub struct LiveCorpus {
    config: LiveConfig,
    transport: Arc<dyn Transport>,
    clock: Arc<dyn Clock>,
    limiter: RateLimiter,
    issued: AtomicU64,
}

impl LiveCorpus {
    pub fn new(config: LiveConfig, transport: Arc<dyn Transport>, clock: Arc<dyn Clock>) -> Self {
        let limiter = RateLimiter::new(config.effective_rate(), clock.clone());
        Self {
            config,
            transport,
            clock,
            limiter,
            issued: AtomicU64::new(0),
        }
    }

    /// Real HTTP transport and wall clock.
    pub fn connect(config: LiveConfig) -> Self {
        let transport = Arc::new(UreqTransport::new(Duration::from_secs(config.timeout_secs)));
        Self::new(config, transport, Arc::new(SystemClock::default()))
    }

    pub fn requests_issued(&self) -> u64 {
        self.issued.load(Ordering::SeqCst)
    }

    fn params(&self, query: &EsearchQuery) -> Vec<(String, String)> {
        let mut params = vec![
            ("db".to_string(), "pubmed".to_string()),
            ("retmode".into(), "json".into()),
            ("rettype".into(), "count".into()),
            ("term".into(), query.term.clone()),
        ];
        if let Some(sort) = &query.sort {
            params.push(("sort".into(), sort.clone()));
        }
        if let Some(key) = &self.config.api_key {
            params.push(("api_key".into(), key.clone()));
        }
        params
    }

    /// Result count for one esearch request, retrying 429/5xx and transport
    /// failures with exponential backoff.
    pub fn live_count(&self, query: &EsearchQuery) -> Result<u64, CorpusError> {
        let params = self.params(query);
        let mut attempt = 0u32;
        loop {
            if let Some(budget) = self.config.request_budget {
                if self.issued.fetch_add(1, Ordering::SeqCst) >= budget {
                    return Err(CorpusError::BudgetExceeded(budget));
                }
            } else {
                self.issued.fetch_add(1, Ordering::SeqCst);
            }
            self.limiter.acquire();
            let outcome = self.transport.get(&self.config.base_url, &params);
            let retryable = match &outcome {
                Ok(resp) if resp.status == 200 => return parse_count(&resp.body),
                Ok(resp) => resp.status == 429 || resp.status >= 500,
                Err(_) => true,
            };
            if !retryable || attempt >= self.config.max_retries {
                return Err(match outcome {
                    Ok(resp) => CorpusError::Status {
                        status: resp.status,
                        attempts: attempt + 1,
                    },
                    Err(msg) => CorpusError::Transport(msg),
                });
            }
            let backoff = Duration::from_millis(self.config.backoff_base_ms << attempt.min(16));
            self.clock.sleep_until(self.clock.now() + backoff);
            attempt += 1;
        }
    }

    /// Earliest year in the searchable range with a nonzero count, found by
    /// bisection over date ranges.
    fn first_year(&self, query: impl Fn(i32, i32) -> EsearchQuery) -> Result<Option<i32>, CorpusError> {
        let (mut lo, mut hi) = (self.config.earliest_year, self.config.latest_year);
        if self.live_count(&query(lo, hi))? == 0 {
            return Ok(None);
        }
        while lo < hi {
            let mid = lo + (hi - lo) / 2;
            if self.live_count(&query(lo, mid))? > 0 {
                hi = mid;
            } else {
                lo = mid + 1;
            }
        }
        Ok(Some(lo))
    }
}

impl CorpusProvider for LiveCorpus {
    fn kind(&self) -> BackendKind {
        BackendKind::Live
    }

    fn yearly_major_counts(
        &self,
        term: &TermRecord,
        start_year: i32,
        end_year: i32,
    ) -> Result<PopularitySeries, CorpusError> {
        if start_year > end_year {
            return Err(CorpusError::InvalidRange {
                start: start_year,
                end: end_year,
            });
        }
        let counts = (start_year..=end_year)
            .map(|y| self.live_count(&EsearchQuery::major_topic(&term.label, y, y)))
            .collect::<Result<Vec<_>, _>>()?;
        PopularitySeries::new(term.ui.clone(), start_year, end_year, counts)
    }

    fn first_indexed_year(&self, term: &TermRecord) -> Result<Option<i32>, CorpusError> {
        self.first_year(|a, b| EsearchQuery::major_topic(&term.label, a, b))
    }

    fn first_clinical_trial_year(&self, term: &TermRecord) -> Result<Option<i32>, CorpusError> {
        self.first_year(|a, b| EsearchQuery::clinical_trial(&term.label, a, b))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::VecDeque;

    struct Scripted {
        replies: Mutex<VecDeque<Result<HttpResponse, String>>>,
        calls: Mutex<Vec<Vec<(String, String)>>>,
    }

    impl Scripted {
        fn new(replies: Vec<Result<HttpResponse, String>>) -> Self {
            Self {
                replies: Mutex::new(replies.into()),
                calls: Mutex::new(Vec::new()),
            }
        }
    }

    impl Transport for Scripted {
        fn get(&self, _url: &str, params: &[(String, String)]) -> Result<HttpResponse, String> {
            self.calls.lock().unwrap().push(params.to_vec());
            self.replies
                .lock()
                .unwrap()
                .pop_front()
                .unwrap_or_else(|| Err("script exhausted".into()))
        }
    }

    fn ok(count: &str) -> Result<HttpResponse, String> {
        Ok(HttpResponse {
            status: 200,
            body: format!(r#"{{"header":{{}},"esearchresult":{{"count":"{count}","retmax":"0"}}}}"#),
        })
    }

    fn status(code: u16) -> Result<HttpResponse, String> {
        Ok(HttpResponse {
            status: code,
            body: String::new(),
        })
    }

    fn provider(script: Vec<Result<HttpResponse, String>>, cfg: LiveConfig) -> (LiveCorpus, Arc<Scripted>, Arc<MockClock>) {
        let t = Arc::new(Scripted::new(script));
        let c = Arc::new(MockClock::default());
        (LiveCorpus::new(cfg, t.clone(), c.clone()), t, c)
    }

    fn q() -> EsearchQuery {
        EsearchQuery::major_topic("Nanocapsules", 2005, 2005)
    }

    #[test]
    fn passes_count_through() {
        let (p, t, _) = provider(vec![ok("42")], LiveConfig::default());
        assert_eq!(p.live_count(&q()).unwrap(), 42);
        let call = &t.calls.lock().unwrap()[0];
        let get = |k: &str| call.iter().find(|(a, _)| a == k).map(|(_, v)| v.as_str());
        assert_eq!(get("db"), Some("pubmed"));
        assert_eq!(get("retmode"), Some("json"));
        assert_eq!(get("rettype"), Some("count"));
        assert_eq!(get("term"), Some("\"Nanocapsules\"[MAJR:noexp] AND 2005[dp]"));
        assert_eq!(get("api_key"), None);
    }

    #[test]
    fn retries_after_429_with_backoff() {
        let cfg = LiveConfig {
            backoff_base_ms: 500,
            ..LiveConfig::default()
        };
        let (p, t, clock) = provider(vec![status(429), ok("7")], cfg);
        assert_eq!(p.live_count(&q()).unwrap(), 7);
        assert_eq!(t.calls.lock().unwrap().len(), 2);
        // first admission at 0, one 500 ms backoff, second admission after it
        assert_eq!(clock.now(), Duration::from_millis(500));
    }

    #[test]
    fn persistent_500_fails_after_max_retries() {
        let cfg = LiveConfig {
            max_retries: 3,
            ..LiveConfig::default()
        };
        let (p, t, _) = provider(vec![status(500); 10], cfg);
        match p.live_count(&q()) {
            Err(CorpusError::Status { status: 500, attempts: 4 }) => {}
            other => panic!("unexpected {other:?}"),
        }
        assert_eq!(t.calls.lock().unwrap().len(), 4);
    }

    #[test]
    fn client_errors_are_not_retried() {
        let (p, t, _) = provider(vec![status(400), ok("1")], LiveConfig::default());
        assert!(matches!(p.live_count(&q()), Err(CorpusError::Status { status: 400, attempts: 1 })));
        assert_eq!(t.calls.lock().unwrap().len(), 1);
    }

    #[test]
    fn unparsable_body() {
        let bad = Ok(HttpResponse {
            status: 200,
            body: "<html>".into(),
        });
        let (p, _, _) = provider(vec![bad], LiveConfig::default());
        assert!(matches!(p.live_count(&q()), Err(CorpusError::BadResponse(_))));
        assert_eq!(parse_count(r#"{"esearchresult":{"count":13}}"#).unwrap(), 13);
    }

    #[test]
    fn budget_is_enforced() {
        let cfg = LiveConfig {
            request_budget: Some(1),
            ..LiveConfig::default()
        };
        let (p, _, _) = provider(vec![ok("1"), ok("2")], cfg);
        assert_eq!(p.live_count(&q()).unwrap(), 1);
        assert!(matches!(p.live_count(&q()), Err(CorpusError::BudgetExceeded(1))));
    }

    #[test]
    fn api_key_raises_default_rate() {
        let mut cfg = LiveConfig::default();
        assert_eq!(cfg.effective_rate(), 3.0);
        cfg.api_key = Some("k".into());
        assert_eq!(cfg.effective_rate(), 10.0);
        cfg.rate = Some(1.5);
        assert_eq!(cfg.effective_rate(), 1.5);
    }

    #[test]
    fn limiter_spaces_admissions() {
        let clock = Arc::new(MockClock::default());
        let limiter = RateLimiter::new(4.0, clock.clone());
        let slots: Vec<_> = (0..9).map(|_| limiter.acquire()).collect();
        assert_eq!(slots[0], Duration::ZERO);
        assert_eq!(slots[8], Duration::from_secs(2));
        assert_eq!(clock.now(), Duration::from_secs(2));
    }
}
