//! Blocking client for REST-v3 style forge endpoints.

use std::collections::hash_map::DefaultHasher;
use std::hash::{Hash, Hasher};
use std::sync::Arc;
use std::time::Duration;

use chrono::{DateTime, NaiveDate, Utc};
use serde::de::DeserializeOwned;
use serde::Deserialize;

use super::{IssueRecord, IssueState, MinerError, PrFile, PullRequestRecord, RepoId};

pub const DEFAULT_API_URL: &str = "https://api.github.com";
pub const MAX_RETRIES: u32 = 5;

type Sleeper = Arc<dyn Fn(Duration) + Send + Sync>;

#[derive(Clone)]
pub struct ForgeClient {
    agent: ureq::Agent,
    base_url: String,
    token: Option<String>,
    max_retries: u32,
    base_backoff: Duration,
    max_wait: Duration,
    sleeper: Sleeper,
}

impl std::fmt::Debug for ForgeClient {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ForgeClient")
            .field("base_url", &self.base_url)
            .field("token", &self.token.as_ref().map(|_| "***"))
            .field("max_retries", &self.max_retries)
            .finish()
    }
}

impl ForgeClient {
    pub fn new(base_url: impl Into<String>, token: Option<String>) -> Self {
        let agent: ureq::Agent = ureq::Agent::config_builder()
            .http_status_as_error(false)
            .timeout_global(Some(Duration::from_secs(60)))
            .user_agent("bugscope")
            .build()
            .into();
        Self {
            agent,
            base_url: base_url.into().trim_end_matches('/').to_string(),
            token: token.filter(|t| !t.is_empty()),
            max_retries: MAX_RETRIES,
            base_backoff: Duration::from_secs(1),
            max_wait: Duration::from_secs(3600),
            sleeper: Arc::new(std::thread::sleep),
        }
    }

    /// Token read from the named environment variable, if set.
    pub fn from_env(base_url: impl Into<String>, token_env: &str) -> Self {
        Self::new(base_url, std::env::var(token_env).ok())
    }

    pub fn with_backoff(mut self, base: Duration, max_wait: Duration) -> Self {
        self.base_backoff = base;
        self.max_wait = max_wait;
        self
    }

    pub fn with_sleeper(mut self, sleeper: impl Fn(Duration) + Send + Sync + 'static) -> Self {
        self.sleeper = Arc::new(sleeper);
        self
    }

    /// Closed issues carrying every label of `labels`, excluding pull requests.
    pub fn list_closed_issues(
        &self,
        repo: &RepoId,
        labels: &[String],
        since: Option<NaiveDate>,
    ) -> Result<Vec<IssueRecord>, MinerError> {
        let mut url = format!(
            "{}/repos/{}/issues?state=closed&per_page=100&sort=created&direction=asc",
            self.base_url, repo
        );
        if !labels.is_empty() {
            url.push_str("&labels=");
            url.push_str(&encode(&labels.join(",")));
        }
        if let Some(day) = since {
            url.push_str(&format!("&since={day}T00:00:00Z"));
        }
        let raw: Vec<ApiIssue> = self.get_all(&url)?;
        let mut out = Vec::new();
        for issue in raw.into_iter().filter(|i| i.pull_request.is_none()) {
            let comments: Vec<ApiComment> = self.get_all(&format!(
                "{}/repos/{}/issues/{}/comments?per_page=100",
                self.base_url, repo, issue.number
            ))?;
            let timeline: Vec<ApiTimelineEvent> = self.get_all(&format!(
                "{}/repos/{}/issues/{}/timeline?per_page=100",
                self.base_url, repo, issue.number
            ))?;
            out.push(issue.into_record(repo, &comments, &timeline));
        }
        Ok(out)
    }

    pub fn get_pull(&self, repo: &RepoId, number: u64) -> Result<PullRequestRecord, MinerError> {
        let base = format!("{}/repos/{}/pulls/{}", self.base_url, repo, number);
        let pull: ApiPull = self.get_json(&base)?.0;
        let commits: Vec<ApiCommit> = self.get_all(&format!("{base}/commits?per_page=100"))?;
        let files: Vec<ApiPullFile> = self.get_all(&format!("{base}/files?per_page=100"))?;
        let discussion: Vec<ApiComment> = self.get_all(&format!(
            "{}/repos/{}/issues/{}/comments?per_page=100",
            self.base_url, repo, number
        ))?;
        let review_comments: Vec<ApiComment> = self.get_all(&format!("{base}/comments?per_page=100"))?;
        let reviews: Vec<ApiComment> = self.get_all(&format!("{base}/reviews?per_page=100"))?;

        // Reviews without text (bare approvals) are not messages.
        let reviews: Vec<&ApiComment> = reviews.iter().filter(|r| r.has_text()).collect();
        let all = discussion
            .iter()
            .chain(review_comments.iter())
            .chain(reviews.iter().copied());
        let (mut message_count, mut bot_message_count) = (0, 0);
        for c in all {
            message_count += 1;
            bot_message_count += u32::from(c.is_bot());
        }
        Ok(PullRequestRecord {
            number,
            merged_at: pull.merged_at,
            message_count,
            bot_message_count,
            commits: commits.into_iter().map(|c| c.sha).collect(),
            merge_commit: pull.merge_commit_sha,
            files: files
                .into_iter()
                .map(|f| PrFile {
                    path: f.filename,
                    lines_added: f.additions,
                    lines_removed: f.deletions,
                })
                .collect(),
        })
    }

    /// Follows `rel="next"` links until exhausted.
    fn get_all<T: DeserializeOwned>(&self, url: &str) -> Result<Vec<T>, MinerError> {
        let mut out = Vec::new();
        let mut next = Some(url.to_string());
        while let Some(url) = next {
            let (page, link): (Vec<T>, Option<String>) = self.get_json(&url)?;
            out.extend(page);
            next = link.as_deref().and_then(next_link);
        }
        Ok(out)
    }

    fn get_json<T: DeserializeOwned>(&self, url: &str) -> Result<(T, Option<String>), MinerError> {
        let mut attempt = 0;
        loop {
            let mut req = self
                .agent
                .get(url)
                .header("Accept", "application/vnd.github+json")
                .header("X-GitHub-Api-Version", "2022-11-28");
            if let Some(token) = &self.token {
                req = req.header("Authorization", &format!("Bearer {token}"));
            }
            let wait = match req.call() {
                Err(e) => {
                    if attempt >= self.max_retries {
                        return Err(MinerError::Network(format!("{url}: {e}")));
                    }
                    self.backoff(url, attempt)
                }
                Ok(mut resp) => {
                    let status = resp.status().as_u16();
                    let header = |name: &str| {
                        resp.headers()
                            .get(name)
                            .and_then(|v| v.to_str().ok())
                            .map(str::to_string)
                    };
                    let link = header("link");
                    let retry_after = header("retry-after").and_then(|v| v.trim().parse::<u64>().ok());
                    let remaining = header("x-ratelimit-remaining");
                    let reset = header("x-ratelimit-reset").and_then(|v| v.trim().parse::<i64>().ok());
                    let limited = status == 429
                        || (status == 403 && (remaining.as_deref() == Some("0") || retry_after.is_some()));
                    match status {
                        200..=299 => {
                            let body = resp
                                .body_mut()
                                .with_config()
                                .limit(64 * 1024 * 1024)
                                .read_to_string()
                                .map_err(|e| MinerError::Network(format!("{url}: {e}")))?;
                            let value = serde_json::from_str(&body)
                                .map_err(|e| MinerError::Network(format!("{url}: malformed response: {e}")))?;
                            return Ok((value, link));
                        }
                        401 => return Err(MinerError::Auth(format!("{url}: 401 unauthorized"))),
                        _ if limited => {
                            if attempt >= self.max_retries {
                                return Err(MinerError::RateLimited {
                                    retries: attempt,
                                    reset,
                                });
                            }
                            match (retry_after, reset) {
                                (Some(secs), _) => Duration::from_secs(secs),
                                (None, Some(epoch)) => {
                                    Duration::from_secs((epoch - Utc::now().timestamp()).max(0) as u64 + 1)
                                }
                                _ => self.backoff(url, attempt),
                            }
                        }
                        403 => return Err(MinerError::Auth(format!("{url}: 403 forbidden"))),
                        500..=599 if attempt < self.max_retries => self.backoff(url, attempt),
                        _ => {
                            return Err(MinerError::Http {
                                status,
                                url: url.to_string(),
                            })
                        }
                    }
                }
            };
            log::warn!("retrying {url} in {wait:?} (attempt {})", attempt + 1);
            (self.sleeper)(wait.min(self.max_wait));
            attempt += 1;
        }
    }

    /// Exponential backoff with a deterministic jitter of up to half the step.
    fn backoff(&self, url: &str, attempt: u32) -> Duration {
        let step = self.base_backoff.saturating_mul(1 << attempt.min(16));
        let mut h = DefaultHasher::new();
        (url, attempt).hash(&mut h);
        let frac = (h.finish() % 1000) as u32;
        step + step / 2 * frac / 1000
    }
}

fn next_link(header: &str) -> Option<String> {
    header.split(',').find_map(|part| {
        let (target, params) = part.split_once(';')?;
        params
            .split(';')
            .any(|p| p.trim() == "rel=\"next\"")
            .then(|| target.trim().trim_start_matches('<').trim_end_matches('>').to_string())
    })
}

fn encode(s: &str) -> String {
    let mut out = String::new();
    for b in s.bytes() {
        match b {
            b'A'..=b'Z' | b'a'..=b'z' | b'0'..=b'9' | b'-' | b'_' | b'.' | b'~' | b',' => out.push(b as char),
            _ => out.push_str(&format!("%{b:02X}")),
        }
    }
    out
}

#[derive(Deserialize)]
struct ApiUser {
    #[serde(default)]
    login: String,
    #[serde(default, rename = "type")]
    kind: String,
}

#[derive(Deserialize)]
struct ApiLabel {
    name: String,
}

#[derive(Deserialize)]
struct ApiIssue {
    number: u64,
    title: String,
    #[serde(default)]
    labels: Vec<ApiLabel>,
    state: IssueState,
    created_at: DateTime<Utc>,
    closed_at: Option<DateTime<Utc>>,
    #[serde(default)]
    comments: u32,
    #[serde(default)]
    body: Option<String>,
    #[serde(default)]
    pull_request: Option<serde_json::Value>,
}

impl ApiIssue {
    fn into_record(self, repo: &RepoId, comments: &[ApiComment], timeline: &[ApiTimelineEvent]) -> IssueRecord {
        let mut linked_prs = Vec::new();
        let mut closing_commits = Vec::new();
        for ev in timeline {
            match ev.event.as_deref() {
                Some("cross-referenced") => {
                    let Some(src) = ev.source.as_ref().and_then(|s| s.issue.as_ref()) else {
                        continue;
                    };
                    let same_repo = src
                        .repository
                        .as_ref()
                        .is_none_or(|r| r.full_name.eq_ignore_ascii_case(&repo.to_string()));
                    if src.pull_request.is_some() && same_repo && !linked_prs.contains(&src.number) {
                        linked_prs.push(src.number);
                    }
                }
                Some("closed") => {
                    if let Some(sha) = &ev.commit_id {
                        if !closing_commits.contains(sha) {
                            closing_commits.push(sha.clone());
                        }
                    }
                }
                _ => {}
            }
        }
        IssueRecord {
            number: self.number,
            title: self.title,
            labels: self.labels.into_iter().map(|l| l.name).collect(),
            state: self.state,
            created_at: self.created_at,
            closed_at: self.closed_at,
            comment_count: comments.len().max(self.comments as usize) as u32,
            bot_comment_count: comments.iter().filter(|c| c.is_bot()).count() as u32,
            linked_prs,
            closing_commits,
            body: self.body.unwrap_or_default(),
        }
    }
}

#[derive(Deserialize)]
struct ApiComment {
    #[serde(default)]
    user: Option<ApiUser>,
    #[serde(default)]
    body: Option<String>,
}

impl ApiComment {
    fn is_bot(&self) -> bool {
        self.user
            .as_ref()
            .is_some_and(|u| u.kind == "Bot" || u.login.ends_with("[bot]"))
    }

    fn has_text(&self) -> bool {
        self.body.as_deref().is_some_and(|b| !b.trim().is_empty())
    }
}

#[derive(Deserialize)]
struct ApiTimelineEvent {
    #[serde(default)]
    event: Option<String>,
    #[serde(default)]
    commit_id: Option<String>,
    #[serde(default)]
    source: Option<ApiSource>,
}

#[derive(Deserialize)]
struct ApiSource {
    #[serde(default)]
    issue: Option<ApiSourceIssue>,
}

#[derive(Deserialize)]
struct ApiSourceIssue {
    number: u64,
    #[serde(default)]
    pull_request: Option<serde_json::Value>,
    #[serde(default)]
    repository: Option<ApiRepo>,
}

#[derive(Deserialize)]
struct ApiRepo {
    full_name: String,
}

#[derive(Deserialize)]
struct ApiPull {
    merged_at: Option<DateTime<Utc>>,
    #[serde(default)]
    merge_commit_sha: Option<String>,
}

#[derive(Debug, Deserialize)]
struct ApiCommit {
    sha: String,
}

#[derive(Deserialize)]
struct ApiPullFile {
    filename: String,
    #[serde(default)]
    additions: u32,
    #[serde(default)]
    deletions: u32,
}


#[cfg(test)]
mod tests {
    use super::mock::*;
    use super::*;
    use std::sync::Mutex;

    fn client(url: &str) -> (ForgeClient, Arc<Mutex<Vec<Duration>>>) {
        let waits = Arc::new(Mutex::new(Vec::new()));
        let sink = waits.clone();
        let c = ForgeClient::new(url, Some("tok".into()))
            .with_backoff(Duration::from_millis(10), Duration::from_secs(5))
            .with_sleeper(move |d| sink.lock().unwrap().push(d));
        (c, waits)
    }

    #[test]
    fn link_header_parsing() {
        let h = r#"<https://x/y?page=2>; rel="next", <https://x/y?page=9>; rel="last""#;
        assert_eq!(next_link(h).as_deref(), Some("https://x/y?page=2"));
        assert_eq!(next_link(r#"<https://x/y?page=1>; rel="prev""#), None);
    }

    #[test]
    fn label_encoding() {
        assert_eq!(encode("Type:Bug,Component:RTL"), "Type%3ABug,Component%3ARTL");
        assert_eq!(encode("a b"), "a%20b");
    }

    #[test]
    fn backoff_is_exponential_and_deterministic() {
        let (c, _) = client("http://unused");
        let a: Vec<_> = (0..4).map(|i| c.backoff("u", i)).collect();
        let b: Vec<_> = (0..4).map(|i| c.backoff("u", i)).collect();
        assert_eq!(a, b);
        for (i, d) in a.iter().enumerate() {
            let step = Duration::from_millis(10 << i);
            assert!(*d >= step && *d <= step + step / 2, "{d:?}");
        }
    }

    #[test]
    fn paginates_and_sends_token() {
        let own_url = Arc::new(std::sync::OnceLock::<String>::new());
        let seen = own_url.clone();
        let server = serve(move |target| {
            if target.contains("/comments") || target.contains("/timeline") {
                return Reply::json("[]");
            }
            if target.contains("page=2") {
                Reply::json(
                    r#"[{"number":3,"title":"c","labels":[],"state":"closed","created_at":"2021-01-01T00:00:00Z","closed_at":"2021-01-02T00:00:00Z","comments":0,"body":null}]"#,
                )
            } else {
                let next = format!("<{}/repos/o/n/issues?page=2>; rel=\"next\"", seen.get().unwrap());
                Reply::json(
                    r#"[{"number":1,"title":"a","labels":[{"name":"Type:Bug"}],"state":"closed","created_at":"2021-01-01T00:00:00Z","closed_at":"2021-01-02T00:00:00Z","comments":2,"body":"x"},
                        {"number":2,"title":"pr","labels":[],"state":"closed","created_at":"2021-01-01T00:00:00Z","closed_at":"2021-01-02T00:00:00Z","comments":0,"body":"","pull_request":{}}]"#,
                )
                .header("Link", &next)
            }
        });
        own_url.set(server.url.clone()).unwrap();
        let (c, _) = client(&server.url);
        let issues = c
            .list_closed_issues(&"o/n".parse().unwrap(), &["Type:Bug".into()], None)
            .unwrap();
        assert_eq!(issues.iter().map(|i| i.number).collect::<Vec<_>>(), vec![1, 3]);
        assert_eq!(issues[0].comment_count, 2);
        assert_eq!(issues[1].body, "");
        let reqs = server.requests.lock().unwrap();
        assert!(reqs[0].contains("labels=Type%3ABug"));
        assert!(reqs[0].to_ascii_lowercase().ends_with("authorization: bearer tok"));
        assert!(reqs.iter().any(|r| r.contains("page=2")));
    }

    #[test]
    fn unauthorized_is_auth_error() {
        let server = scripted(vec![Reply::status(401)]);
        let (c, _) = client(&server.url);
        let err = c.get_pull(&"o/n".parse().unwrap(), 1).unwrap_err();
        assert!(matches!(err, MinerError::Auth(_)), "{err}");
    }

    #[test]
    fn rate_limit_honours_retry_after_then_succeeds() {
        let server = scripted(vec![
            Reply::status(429).header("Retry-After", "2"),
            Reply::status(403).header("X-RateLimit-Remaining", "0"),
            Reply::json("[]"),
        ]);
        let (c, waits) = client(&server.url);
        let out: Vec<ApiCommit> = c.get_all(&format!("{}/x", server.url)).unwrap();
        assert!(out.is_empty());
        let waits = waits.lock().unwrap();
        assert_eq!(waits.len(), 2);
        assert_eq!(waits[0], Duration::from_secs(2));
    }

    #[test]
    fn rate_limit_gives_up_after_bounded_retries() {
        let server = serve(|_| Reply::status(429).header("X-RateLimit-Reset", "0"));
        let (c, waits) = client(&server.url);
        let err = c.get_all::<ApiCommit>(&format!("{}/x", server.url)).unwrap_err();
        assert!(
            matches!(
                err,
                MinerError::RateLimited {
                    retries: MAX_RETRIES,
                    ..
                }
            ),
            "{err}"
        );
        assert_eq!(waits.lock().unwrap().len(), MAX_RETRIES as usize);
        assert_eq!(server.requests.lock().unwrap().len(), MAX_RETRIES as usize + 1);
    }

    #[test]
    fn connection_refused_is_network_error() {
        let port = std::net::TcpListener::bind("127.0.0.1:0")
            .unwrap()
            .local_addr()
            .unwrap()
            .port();
        let (c, _) = client(&format!("http://127.0.0.1:{port}"));
        let err = c.get_pull(&"o/n".parse().unwrap(), 1).unwrap_err();
        assert!(matches!(err, MinerError::Network(_)), "{err}");
    }

    #[test]
    fn pull_messages_exclude_bare_approvals() {
        let server = serve(|target| {
            let body = if target.ends_with("/pulls/7") {
                r#"{"merged_at":"2022-02-02T00:00:00Z","merge_commit_sha":"m1"}"#
            } else if target.contains("/pulls/7/commits") {
                r#"[{"sha":"c1"},{"sha":"c2"}]"#
            } else if target.contains("/pulls/7/files") {
                r#"[{"filename":"hw/ip/aes/rtl/aes.sv","additions":3,"deletions":1,"status":"modified"}]"#
            } else if target.contains("/issues/7/comments") {
                r#"[{"user":{"login":"alice","type":"User"},"body":"lgtm?"},{"user":{"login":"ci[bot]","type":"Bot"},"body":"ok"}]"#
            } else if target.contains("/pulls/7/comments") {
                r#"[{"user":{"login":"bob","type":"User"},"body":"nit"}]"#
            } else if target.contains("/pulls/7/reviews") {
                r#"[{"user":{"login":"bob","type":"User"},"body":"","state":"APPROVED"},{"user":{"login":"carol","type":"User"},"body":"please fix","state":"CHANGES_REQUESTED"}]"#
            } else {
                "[]"
            };
            Reply::json(body)
        });
        let (c, _) = client(&server.url);
        let pr = c.get_pull(&"o/n".parse().unwrap(), 7).unwrap();
        assert_eq!(pr.message_count, 4);
        assert_eq!(pr.bot_message_count, 1);
        assert_eq!(pr.commits, vec!["c1", "c2"]);
        assert_eq!(pr.merge_commit.as_deref(), Some("m1"));
        assert_eq!(pr.files[0].lines_added, 3);
    }

    #[test]
    fn timeline_links_prs_and_closing_commits() {
        let server = serve(|target| {
            let body = if target.contains("/timeline") {
                r#"[{"event":"cross-referenced","source":{"type":"issue","issue":{"number":12,"pull_request":{},"repository":{"full_name":"o/n"}}}},
                    {"event":"cross-referenced","source":{"type":"issue","issue":{"number":13,"repository":{"full_name":"o/n"}}}},
                    {"event":"cross-referenced","source":{"type":"issue","issue":{"number":14,"pull_request":{},"repository":{"full_name":"x/y"}}}},
                    {"event":"closed","commit_id":"abc123"},
                    {"event":"labeled"}]"#
            } else if target.contains("/comments") {
                "[]"
            } else {
                r#"[{"number":5,"title":"t","labels":[],"state":"closed","created_at":"2021-01-01T00:00:00Z","closed_at":"2021-01-03T00:00:00Z","comments":0,"body":""}]"#
            };
            Reply::json(body)
        });
        let (c, _) = client(&server.url);
        let issues = c.list_closed_issues(&"o/n".parse().unwrap(), &[], None).unwrap();
        assert_eq!(issues[0].linked_prs, vec![12]);
        assert_eq!(issues[0].closing_commits, vec!["abc123"]);
    }
}
