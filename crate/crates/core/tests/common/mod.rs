//! Shared test doubles.

#![allow(dead_code)]

use std::collections::HashMap;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex};
use std::time::Duration;

use emergence::corpus::live::{Clock, HttpResponse, Transport};
use emergence::corpus::{Article, CLINICAL_TRIAL};
use emergence::vocab::TermRecord;

/// Answers esearch count queries by scanning an article list, the way the
/// real service would for the two query shapes the client issues.
pub struct EsearchMock {
    by_label: HashMap<String, Vec<(i32, bool, bool)>>,
    clock: Arc<dyn Clock>,
    /// Clock readings at each call.
    pub calls: Mutex<Vec<Duration>>,
    /// Status codes to return, in order, before answering normally.
    pub failures: Mutex<Vec<u16>>,
    pub served: AtomicU64,
}

fn split_range(s: &str) -> Option<(i32, i32)> {
    let s = s.strip_suffix("[dp]")?;
    match s.split_once(':') {
        Some((a, b)) => Some((a.parse().ok()?, b.parse().ok()?)),
        None => {
            let y = s.parse().ok()?;
            Some((y, y))
        }
    }
}

impl EsearchMock {
    pub fn new(terms: &[TermRecord], articles: &[Article], clock: Arc<dyn Clock>) -> Self {
        let label_of: HashMap<&str, &str> = terms.iter().map(|t| (t.ui.as_str(), t.label.as_str())).collect();
        let mut by_label: HashMap<String, Vec<(i32, bool, bool)>> = HashMap::new();
        for a in articles {
            let trial = a.pub_types.iter().any(|p| p == CLINICAL_TRIAL);
            for h in &a.headings {
                if let Some(label) = label_of.get(h.ui.as_str()) {
                    by_label
                        .entry(label.to_string())
                        .or_default()
                        .push((a.year, h.major, trial));
                }
            }
        }
        Self {
            by_label,
            clock,
            calls: Mutex::new(Vec::new()),
            failures: Mutex::new(Vec::new()),
            served: AtomicU64::new(0),
        }
    }

    fn answer(&self, term: &str) -> Option<u64> {
        let rest = term.strip_prefix('"')?;
        let (label, rest) = rest.split_once('"')?;
        let (major_only, trial_only, range) = match rest.strip_prefix("[MAJR:noexp] AND ") {
            Some(r) => (true, false, r),
            None => (false, true, rest.strip_prefix("[MeSH Terms] AND clinical trial[pt] AND ")?),
        };
        let (lo, hi) = split_range(range)?;
        let hits = self.by_label.get(label).map_or(0, |v| {
            v.iter()
                .filter(|(y, major, trial)| {
                    (lo..=hi).contains(y) && (!major_only || *major) && (!trial_only || *trial)
                })
                .count()
        });
        Some(hits as u64)
    }
}

impl Transport for EsearchMock {
    fn get(&self, _url: &str, params: &[(String, String)]) -> Result<HttpResponse, String> {
        self.calls.lock().unwrap().push(self.clock.now());
        let scripted = {
            let mut f = self.failures.lock().unwrap();
            (!f.is_empty()).then(|| f.remove(0))
        };
        if let Some(status) = scripted {
            return Ok(HttpResponse {
                status,
                body: String::new(),
            });
        }
        let term = params
            .iter()
            .find(|(k, _)| k == "term")
            .map(|(_, v)| v.as_str())
            .unwrap_or_default();
        match self.answer(term) {
            Some(n) => {
                self.served.fetch_add(1, Ordering::SeqCst);
                Ok(HttpResponse {
                    status: 200,
                    body: format!(r#"{{"esearchresult":{{"count":"{n}","retmax":"0","idlist":[]}}}}"#),
                })
            }
            None => Ok(HttpResponse {
                status: 400,
                body: format!("unsupported query {term:?}"),
            }),
        }
    }
}

/// Largest number of calls falling inside any half-open window of length
/// `window`.
pub fn max_in_window(times: &[Duration], window: Duration) -> usize {
    let mut t = times.to_vec();
    t.sort();
    let mut best = 0;
    let mut lo = 0;
    for hi in 0..t.len() {
        while t[hi] - t[lo] >= window {
            lo += 1;
        }
        best = best.max(hi - lo + 1);
    }
    best
}
