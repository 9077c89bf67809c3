//! Remote oracle client: the same [`Oracle`] contract as the in-process
//! simulator, over HTTP.
//!
//! Throttle replies (429) are waited out and retried transparently; only
//! granted replies count against the caller's budget. Transient transport
//! failures are retried a bounded number of times, then surface as an
//! oracle transport error (the harness marks the trial failed).

use std::time::Duration;

use tagseek_core::env::{Oracle, OracleError, QueryOutcome};

use crate::wire::{WireError, WireHealth, WireReply, WireSessionReply, WireSessionRequest, WIRE_VERSION};
use crate::NetError;

const DEFAULT_TRANSPORT_RETRIES: u32 = 3;
/// Upper bound on consecutive throttle waits for one query; a server that
/// never grants within this many windows is treated as down.
const MAX_THROTTLE_RETRIES: u32 = 10_000;

pub struct RemoteOracle {
    base_url: String,
    http: reqwest::blocking::Client,
    session_id: String,
    granted_calls: u64,
    transport_retries: u32,
}

impl RemoteOracle {
    /// Creates a server-side session seeded with `seed` (the same seed the
    /// in-process simulator would take, so runs are comparable across
    /// transports).
    pub fn connect(base_url: &str, seed: u64) -> Result<Self, NetError> {
        let base_url = base_url.trim_end_matches('/').to_string();
        let http = reqwest::blocking::Client::builder()
            .timeout(Duration::from_secs(30))
            .build()
            .map_err(|e| NetError::Client(e.to_string()))?;
        let request = WireSessionRequest { v: WIRE_VERSION, seed };
        let reply: WireSessionReply = http
            .post(format!("{base_url}/session"))
            .json(&request)
            .send()
            .map_err(|e| NetError::Client(e.to_string()))?
            .error_for_status()
            .map_err(|e| NetError::Client(e.to_string()))?
            .json()
            .map_err(|e| NetError::Client(format!("bad session reply: {e}")))?;
        Ok(Self {
            base_url,
            http,
            session_id: reply.session_id,
            granted_calls: 0,
            transport_retries: DEFAULT_TRANSPORT_RETRIES,
        })
    }

    pub fn session_id(&self) -> &str {
        &self.session_id
    }

    /// Server corpus statistics.
    pub fn health(base_url: &str) -> Result<WireHealth, NetError> {
        let base_url = base_url.trim_end_matches('/');
        reqwest::blocking::get(format!("{base_url}/health"))
            .map_err(|e| NetError::Client(e.to_string()))?
            .error_for_status()
            .map_err(|e| NetError::Client(e.to_string()))?
            .json()
            .map_err(|e| NetError::Client(format!("bad health reply: {e}")))
    }
}

impl Oracle for RemoteOracle {
    fn query(&mut self, tag: &str) -> Result<QueryOutcome, OracleError> {
        let url = format!("{}/query", self.base_url);
        let mut transport_failures = 0u32;
        let mut throttles = 0u32;
        loop {
            let response = self
                .http
                .get(&url)
                .query(&[("tag", tag), ("session", &self.session_id)])
                .send();
            let response = match response {
                Ok(r) => r,
                Err(e) => {
                    transport_failures += 1;
                    if transport_failures > self.transport_retries {
                        return Err(OracleError::Transport(e.to_string()));
                    }
                    std::thread::sleep(Duration::from_millis(50 << transport_failures));
                    continue;
                }
            };
            let status = response.status();
            if status.as_u16() == 429 {
                // Throttled: wait the advised duration; retries do not count
                // against the budget.
                throttles += 1;
                if throttles > MAX_THROTTLE_RETRIES {
                    return Err(OracleError::Transport("throttled indefinitely".into()));
                }
                let wait = response
                    .json::<WireError>()
                    .ok()
                    .and_then(|e| e.retry_after_ms)
                    .unwrap_or(100);
                std::thread::sleep(Duration::from_millis(wait));
                continue;
            }
            if status.is_server_error() {
                transport_failures += 1;
                if transport_failures > self.transport_retries {
                    return Err(OracleError::Transport(format!("server error {status}")));
                }
                std::thread::sleep(Duration::from_millis(50 << transport_failures));
                continue;
            }
            if !status.is_success() {
                let detail = response
                    .json::<WireError>()
                    .map(|e| e.error)
                    .unwrap_or_else(|e| e.to_string());
                return Err(OracleError::Transport(format!("{status}: {detail}")));
            }
            let reply: WireReply = response
                .json()
                .map_err(|e| OracleError::Protocol(format!("bad reply body: {e}")))?;
            let outcome = reply.into_outcome(tag)?;
            self.granted_calls += 1;
            return Ok(outcome);
        }
    }

    fn call_count(&self) -> u64 {
        self.granted_calls
    }
}
