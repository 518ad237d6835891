//! Blocking JSON client for the inference sidecar.

use std::sync::{Condvar, Mutex};
use std::time::Duration;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use super::{canonical_ranking, check_paraphrase_request, tidy_paraphrases, validate_mentions};
use super::{EntityMention, FillQuery, ModelGateway};
use crate::error::GatewayError;
use crate::model::EntityLabel;
use crate::text::char_to_byte;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HttpConfig {
    pub base_url: String,
    pub timeout_ms: u64,
    pub retries: u32,
    /// First retry delay; doubled on every further attempt.
    pub backoff_base_ms: u64,
    pub max_in_flight: usize,
}

impl Default for HttpConfig {
    fn default() -> Self {
        Self {
            base_url: "http://127.0.0.1:8000".into(),
            timeout_ms: 30_000,
            retries: 2,
            backoff_base_ms: 100,
            max_in_flight: 4,
        }
    }
}

/// Counting semaphore bounding concurrent requests.
struct Permits {
    free: Mutex<usize>,
    cv: Condvar,
}

struct Permit<'a>(&'a Permits);

impl Permits {
    fn acquire(&self) -> Permit<'_> {
        let mut free = self.free.lock().unwrap_or_else(|e| e.into_inner());
        while *free == 0 {
            free = self.cv.wait(free).unwrap_or_else(|e| e.into_inner());
        }
        *free -= 1;
        Permit(self)
    }
}

impl Drop for Permit<'_> {
    fn drop(&mut self) {
        *self.0.free.lock().unwrap_or_else(|e| e.into_inner()) += 1;
        self.0.cv.notify_one();
    }
}

pub struct HttpGateway {
    cfg: HttpConfig,
    agent: ureq::Agent,
    permits: Permits,
}

#[derive(Serialize)]
struct ParaphraseReq<'a> {
    text: &'a str,
    n: usize,
}

#[derive(Deserialize)]
struct ParaphraseResp {
    candidates: Vec<String>,
}

#[derive(Serialize)]
struct NerReq<'a> {
    text: &'a str,
}

#[derive(Deserialize)]
struct WireMention {
    start: usize,
    end: usize,
    label: String,
}

#[derive(Deserialize)]
struct NerResp {
    mentions: Vec<WireMention>,
}

#[derive(Serialize)]
struct FillReq<'a> {
    template: &'a str,
    options: &'a [String],
}

#[derive(Deserialize)]
struct RankedOption {
    option: String,
    score: f64,
}

#[derive(Deserialize)]
struct FillResp {
    ranked: Vec<RankedOption>,
}

#[derive(Deserialize)]
struct HealthResp {
    status: String,
}

enum Attempt {
    Retry(String),
    Fatal(GatewayError),
}

impl HttpGateway {
    pub fn new(cfg: HttpConfig) -> Self {
        let agent: ureq::Agent = ureq::Agent::config_builder()
            .timeout_global(Some(Duration::from_millis(cfg.timeout_ms)))
            .http_status_as_error(false)
            .build()
            .into();
        let permits = Permits {
            free: Mutex::new(cfg.max_in_flight.max(1)),
            cv: Condvar::new(),
        };
        Self { cfg, agent, permits }
    }

    pub fn config(&self) -> &HttpConfig {
        &self.cfg
    }

    fn url(&self, path: &str) -> String {
        format!("{}{}", self.cfg.base_url.trim_end_matches('/'), path)
    }

    fn once<B: Serialize, T: DeserializeOwned>(&self, path: &str, body: Option<&B>) -> Result<T, Attempt> {
        let url = self.url(path);
        let resp = match body {
            Some(b) => self.agent.post(&url).send_json(b),
            None => self.agent.get(&url).call(),
        };
        let mut resp = resp.map_err(|e| Attempt::Retry(format!("{url}: {e}")))?;
        let status = resp.status().as_u16();
        if status != 200 {
            return Err(Attempt::Retry(format!("{url}: HTTP {status}")));
        }
        resp.body_mut()
            .read_json::<T>()
            .map_err(|e| Attempt::Fatal(GatewayError::MalformedResponse(format!("{url}: {e}"))))
    }

    /// Sends one request with retries and exponential backoff.
    fn request<B: Serialize, T: DeserializeOwned>(&self, path: &str, body: Option<&B>) -> Result<T, GatewayError> {
        let _permit = self.permits.acquire();
        let mut delay = self.cfg.backoff_base_ms;
        let mut last = String::new();
        for attempt in 0..=self.cfg.retries {
            if attempt > 0 {
                std::thread::sleep(Duration::from_millis(delay));
                delay = delay.saturating_mul(2);
            }
            match self.once(path, body) {
                Ok(v) => return Ok(v),
                Err(Attempt::Fatal(e)) => return Err(e),
                Err(Attempt::Retry(msg)) => {
                    log::debug!("attempt {} failed: {msg}", attempt + 1);
                    last = msg;
                }
            }
        }
        Err(GatewayError::BackendUnavailable(format!(
            "{last} (after {} attempts)",
            self.cfg.retries + 1
        )))
    }

    /// True when `/health` answers `{"status": "ok"}`.
    pub fn health(&self) -> Result<bool, GatewayError> {
        let h: HealthResp = self.request::<(), _>("/health", None)?;
        Ok(h.status == "ok")
    }
}

impl ModelGateway for HttpGateway {
    fn paraphrase(&self, text: &str, n: usize) -> Result<Vec<String>, GatewayError> {
        check_paraphrase_request(text, n)?;
        let resp: ParaphraseResp = self.request("/paraphrase", Some(&ParaphraseReq { text, n }))?;
        Ok(tidy_paraphrases(text, resp.candidates, n))
    }

    fn recognize_entities(&self, text: &str) -> Result<Vec<EntityMention>, GatewayError> {
        let resp: NerResp = self.request("/ner", Some(&NerReq { text }))?;
        let mentions = resp
            .mentions
            .into_iter()
            .map(|m| {
                let label = EntityLabel::from_wire(&m.label)
                    .ok_or_else(|| GatewayError::MalformedResponse(format!("unknown entity label {:?}", m.label)))?;
                let (s, e) = match (char_to_byte(text, m.start), char_to_byte(text, m.end)) {
                    (Some(s), Some(e)) if s < e => (s, e),
                    _ => {
                        return Err(GatewayError::MalformedResponse(format!(
                            "span {}..{} out of range",
                            m.start, m.end
                        )))
                    }
                };
                Ok(EntityMention {
                    start: m.start,
                    end: m.end,
                    surface: text[s..e].to_string(),
                    label,
                })
            })
            .collect::<Result<Vec<_>, _>>()?;
        validate_mentions(text, &mentions)?;
        Ok(mentions)
    }

    fn score_fill(&self, query: &FillQuery) -> Result<Vec<(String, f64)>, GatewayError> {
        let req = FillReq {
            template: query.template(),
            options: query.options(),
        };
        let resp: FillResp = self.request("/fill", Some(&req))?;
        canonical_ranking(query, resp.ranked.into_iter().map(|r| (r.option, r.score)).collect())
    }
}
