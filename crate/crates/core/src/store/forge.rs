//! GitHub-style REST client that produces offline archives.
//!
//! The client pages through commits (with per-commit diff stats), issues,
//! pull requests and both kinds of pull-request comments, then writes the
//! same newline-delimited files that [`load_archive`](super::load_archive)
//! reads. Network access goes through [`HttpTransport`] and waiting through
//! [`Clock`], so the paging and rate-limit logic runs unchanged under test.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;
use std::time::Duration;

use chrono::{DateTime, Utc};
use serde_json::Value;

use super::archive::{
    write_jsonl, ArchivePaths, COMMITS_FILE, DEVELOPERS_FILE, ISSUES_FILE, PR_COMMENTS_FILE,
    SPRINT_WINDOWS_FILE,
};
use super::model::{
    Commit, CommentKind, Developer, FileChange, IssueRecord, IssueStatus, PRCommentRecord, Role,
    SprintWindow, StatusChange, Timestamp,
};
use crate::error::{Error, Result};

pub const TOKEN_ENV: &str = "FORGE_TOKEN";
pub const DEFAULT_API_BASE: &str = "https://api.github.com";
/// Optional override of [`DEFAULT_API_BASE`], e.g. for an enterprise forge.
pub const API_BASE_ENV: &str = "FORGE_API_BASE";
pub const PAGE_SIZE: usize = 100;
const UNASSIGNED_TEAM: &str = "unassigned";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HttpResponse {
    pub status: u16,
    /// Header names lower-cased.
    pub headers: Vec<(String, String)>,
    pub body: String,
}

impl HttpResponse {
    pub fn header(&self, name: &str) -> Option<&str> {
        self.headers
            .iter()
            .find(|(k, _)| k.eq_ignore_ascii_case(name))
            .map(|(_, v)| v.as_str())
    }
}

pub trait HttpTransport {
    fn get(&self, url: &str, token: &str) -> Result<HttpResponse>;
}

pub trait Clock {
    fn now(&self) -> Timestamp;
    fn sleep(&self, duration: Duration);
}

#[derive(Debug, Default, Clone, Copy)]
pub struct SystemClock;

impl Clock for SystemClock {
    fn now(&self) -> Timestamp {
        Utc::now()
    }

    fn sleep(&self, duration: Duration) {
        std::thread::sleep(duration);
    }
}

/// Blocking transport backed by `ureq`.
pub struct UreqTransport {
    agent: ureq::Agent,
}

impl Default for UreqTransport {
    fn default() -> Self {
        let agent = ureq::Agent::config_builder()
            .http_status_as_error(false)
            .timeout_global(Some(Duration::from_secs(60)))
            .build()
            .into();
        UreqTransport { agent }
    }
}

impl HttpTransport for UreqTransport {
    fn get(&self, url: &str, token: &str) -> Result<HttpResponse> {
        let mut req = self
            .agent
            .get(url)
            .header("Accept", "application/vnd.github+json")
            .header("User-Agent", "sprintscope");
        if !token.is_empty() {
            req = req.header("Authorization", format!("Bearer {token}"));
        }
        let mut resp = req.call().map_err(|e| Error::Transport(e.to_string()))?;
        let status = resp.status().as_u16();
        let headers = resp
            .headers()
            .iter()
            .map(|(k, v)| {
                (
                    k.as_str().to_ascii_lowercase(),
                    v.to_str().unwrap_or_default().to_string(),
                )
            })
            .collect();
        let body = resp
            .body_mut()
            .read_to_string()
            .map_err(|e| Error::Transport(e.to_string()))?;
        Ok(HttpResponse {
            status,
            headers,
            body,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ForgeConfig {
    pub api_base: String,
    pub page_size: usize,
    /// Total time the client may spend waiting on rate limits.
    pub wait_budget: Duration,
    /// First delay for secondary rate limits and server errors; doubles per retry.
    pub initial_backoff: Duration,
    pub max_retries: u32,
}

impl Default for ForgeConfig {
    fn default() -> Self {
        ForgeConfig {
            api_base: DEFAULT_API_BASE.into(),
            page_size: PAGE_SIZE,
            wait_budget: Duration::from_secs(15 * 60),
            initial_backoff: Duration::from_secs(1),
            max_retries: 6,
        }
    }
}

impl ForgeConfig {
    /// Defaults, with the API base taken from `FORGE_API_BASE` when set.
    pub fn from_env() -> Self {
        let mut config = ForgeConfig::default();
        if let Ok(base) = std::env::var(API_BASE_ENV) {
            if !base.trim().is_empty() {
                config.api_base = base.trim().to_string();
            }
        }
        config
    }
}

/// `owner/name` repository slug.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RepoSlug {
    pub owner: String,
    pub name: String,
}

impl std::str::FromStr for RepoSlug {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.split_once('/') {
            Some((o, n)) if !o.is_empty() && !n.is_empty() && !n.contains('/') => Ok(RepoSlug {
                owner: o.into(),
                name: n.into(),
            }),
            _ => Err(Error::Usage(format!(
                "repository must look like owner/name, got {s:?}"
            ))),
        }
    }
}

impl std::fmt::Display for RepoSlug {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}/{}", self.owner, self.name)
    }
}

#[derive(Debug, Clone, Default)]
pub struct FetchRequest {
    pub since: Option<Timestamp>,
    /// Declared developers. Without a roster every discovered author is
    /// written as a developer of an `unassigned` team.
    pub roster: Option<Vec<Developer>>,
    pub windows: Vec<SprintWindow>,
}

/// Raw records as fetched, before referential validation.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct FetchedArchive {
    pub developers: Vec<Developer>,
    pub commits: Vec<Commit>,
    pub issues: Vec<IssueRecord>,
    pub pr_comments: Vec<PRCommentRecord>,
    pub sprint_windows: Vec<SprintWindow>,
}

impl FetchedArchive {
    pub fn write(&self, dir: impl AsRef<Path>) -> Result<ArchivePaths> {
        let dir = dir.as_ref();
        std::fs::create_dir_all(dir)?;
        write_jsonl(&dir.join(DEVELOPERS_FILE), &self.developers)?;
        write_jsonl(&dir.join(COMMITS_FILE), &self.commits)?;
        write_jsonl(&dir.join(ISSUES_FILE), &self.issues)?;
        write_jsonl(&dir.join(PR_COMMENTS_FILE), &self.pr_comments)?;
        write_jsonl(&dir.join(SPRINT_WINDOWS_FILE), &self.sprint_windows)?;
        Ok(ArchivePaths::in_dir(dir))
    }
}

pub struct ForgeClient<T, C = SystemClock> {
    transport: T,
    clock: C,
    token: String,
    config: ForgeConfig,
    waited: Duration,
}

impl ForgeClient<UreqTransport, SystemClock> {
    /// Client with the token taken from `FORGE_TOKEN`.
    pub fn from_env(config: ForgeConfig) -> Result<Self> {
        let token = std::env::var(TOKEN_ENV)
            .map_err(|_| Error::Auth(format!("environment variable {TOKEN_ENV} is not set")))?;
        Ok(ForgeClient::new(
            UreqTransport::default(),
            SystemClock,
            token,
            config,
        ))
    }
}

impl<T: HttpTransport, C: Clock> ForgeClient<T, C> {
    pub fn new(transport: T, clock: C, token: impl Into<String>, config: ForgeConfig) -> Self {
        ForgeClient {
            transport,
            clock,
            token: token.into(),
            config,
            waited: Duration::ZERO,
        }
    }

    /// Time spent waiting on rate limits so far.
    pub fn waited(&self) -> Duration {
        self.waited
    }

    pub fn fetch(&mut self, repo: &RepoSlug, request: &FetchRequest) -> Result<FetchedArchive> {
        let since_q = request
            .since
            .map(|t| format!("&since={}", t.format("%Y-%m-%dT%H:%M:%SZ")))
            .unwrap_or_default();
        let keep = |t: Timestamp| request.since.is_none_or(|s| t >= s);
        let base = format!("{}/repos/{repo}", self.config.api_base.trim_end_matches('/'));

        let mut commits = Vec::new();
        for item in self.get_all(&format!("{base}/commits?{}{since_q}", self.page_q()))? {
            let sha = str_field(&item, &["sha"])?;
            let detail = self.get_json(&format!("{base}/commits/{sha}"))?;
            let commit = parse_commit(&detail)?;
            if keep(commit.timestamp) {
                commits.push(commit);
            }
        }
        commits.sort_by(|a, b| (a.timestamp, &a.sha).cmp(&(b.timestamp, &b.sha)));

        let pr_numbers: BTreeSet<u64> = self
            .get_all(&format!("{base}/pulls?state=all&{}", self.page_q()))?
            .iter()
            .filter_map(|p| p.get("number").and_then(Value::as_u64))
            .collect();

        let mut issues = Vec::new();
        for item in
            self.get_all(&format!("{base}/issues?state=all&{}{since_q}", self.page_q()))?
        {
            if item.get("pull_request").is_some() {
                continue;
            }
            issues.push(parse_issue(&item)?);
        }

        let mut pr_comments = Vec::new();
        for item in self.get_all(&format!("{base}/pulls/comments?{}{since_q}", self.page_q()))? {
            let c = parse_comment(&item, "pull_request_url", CommentKind::Review)?;
            if keep(c.timestamp) {
                pr_comments.push(c);
            }
        }
        for item in self.get_all(&format!("{base}/issues/comments?{}{since_q}", self.page_q()))?
        {
            let c = parse_comment(&item, "issue_url", CommentKind::Conversation)?;
            if pr_numbers.contains(&c.pr_number) && keep(c.timestamp) {
                pr_comments.push(c);
            }
        }
        pr_comments.sort_by(|a, b| (a.timestamp, a.id).cmp(&(b.timestamp, b.id)));

        let developers = match &request.roster {
            Some(roster) => {
                let declared: BTreeSet<&str> = roster.iter().map(|d| d.id.as_str()).collect();
                for issue in &mut issues {
                    issue.assignees.retain(|a| declared.contains(a.as_str()));
                }
                let mut r = roster.clone();
                r.sort_by(|a, b| a.id.cmp(&b.id));
                r
            }
            None => {
                let ids: BTreeSet<&str> = commits
                    .iter()
                    .map(|c| c.author_id.as_str())
                    .chain(pr_comments.iter().map(|c| c.author_id.as_str()))
                    .chain(issues.iter().flat_map(|i| i.assignees.iter().map(String::as_str)))
                    .collect();
                ids.into_iter()
                    .map(|id| Developer {
                        id: id.to_string(),
                        team_id: UNASSIGNED_TEAM.into(),
                        role: Role::Developer,
                    })
                    .collect()
            }
        };
        issues.sort_by_key(|i| i.number);

        Ok(FetchedArchive {
            developers,
            commits,
            issues,
            pr_comments,
            sprint_windows: request.windows.clone(),
        })
    }

    fn page_q(&self) -> String {
        format!("per_page={}", self.config.page_size)
    }

    fn get_json(&mut self, url: &str) -> Result<Value> {
        let resp = self.get(url)?;
        serde_json::from_str(&resp.body).map_err(|e| Error::Transport(format!("{url}: {e}")))
    }

    /// Follow `Link: rel="next"` until the listing is exhausted.
    fn get_all(&mut self, first: &str) -> Result<Vec<Value>> {
        let mut items = Vec::new();
        let mut next = Some(first.to_string());
        while let Some(url) = next.take() {
            let resp = self.get(&url)?;
            let page: Value = serde_json::from_str(&resp.body)
                .map_err(|e| Error::Transport(format!("{url}: {e}")))?;
            match page {
                Value::Array(v) => items.extend(v),
                _ => return Err(Error::Transport(format!("{url}: expected a JSON array"))),
            }
            next = resp.header("link").and_then(next_link);
        }
        Ok(items)
    }

    fn get(&mut self, url: &str) -> Result<HttpResponse> {
        let mut attempt = 0u32;
        loop {
            let resp = self.transport.get(url, &self.token)?;
            let delay = match resp.status {
                200..=299 => {
                    if resp.header("x-ratelimit-remaining") == Some("0") {
                        if let Some(d) = self.until_reset(&resp) {
                            self.wait(d, url)?;
                        }
                    }
                    return Ok(resp);
                }
                401 => return Err(Error::Auth(format!("{url}: 401 {}", message(&resp)))),
                403 | 429 => {
                    if let Some(secs) = resp.header("retry-after").and_then(|v| v.parse().ok()) {
                        Duration::from_secs(secs)
                    } else if resp.header("x-ratelimit-remaining") == Some("0") {
                        self.until_reset(&resp).unwrap_or(self.backoff(attempt))
                    } else if resp.status == 429 || message(&resp).contains("rate limit") {
                        self.backoff(attempt)
                    } else {
                        return Err(Error::Auth(format!("{url}: 403 {}", message(&resp))));
                    }
                }
                500..=599 => {
                    if attempt >= self.config.max_retries {
                        return Err(Error::Transport(format!(
                            "{url}: server error {} after {attempt} retries",
                            resp.status
                        )));
                    }
                    self.backoff(attempt)
                }
                s => return Err(Error::Transport(format!("{url}: HTTP {s} {}", message(&resp)))),
            };
            if attempt >= self.config.max_retries {
                return Err(Error::RateLimited(format!(
                    "{url}: still limited after {attempt} retries"
                )));
            }
            self.wait(delay, url)?;
            attempt += 1;
        }
    }

    fn backoff(&self, attempt: u32) -> Duration {
        self.config.initial_backoff * 2u32.saturating_pow(attempt)
    }

    fn until_reset(&self, resp: &HttpResponse) -> Option<Duration> {
        let reset: i64 = resp.header("x-ratelimit-reset")?.parse().ok()?;
        let secs = reset - self.clock.now().timestamp();
        Some(Duration::from_secs(secs.max(0) as u64 + 1))
    }

    fn wait(&mut self, delay: Duration, url: &str) -> Result<()> {
        if self.waited + delay > self.config.wait_budget {
            return Err(Error::RateLimited(format!(
                "{url}: waiting {delay:?} would exceed the {:?} budget",
                self.config.wait_budget
            )));
        }
        log::info!("rate limited on {url}; waiting {delay:?}");
        self.clock.sleep(delay);
        self.waited += delay;
        Ok(())
    }
}

/// Fetch `repo` with `FORGE_TOKEN` (and `FORGE_API_BASE`, if set) and write
/// an archive into `out`.
pub fn fetch_forge(
    repo: &RepoSlug,
    request: &FetchRequest,
    out: impl AsRef<Path>,
) -> Result<ArchivePaths> {
    let mut client = ForgeClient::from_env(ForgeConfig::from_env())?;
    client.fetch(repo, request)?.write(out)
}

fn next_link(header: &str) -> Option<String> {
    header.split(',').find_map(|part| {
        let (url, params) = part.split_once(';')?;
        params
            .split(';')
            .any(|p| p.trim() == "rel=\"next\"")
            .then(|| url.trim().trim_start_matches('<').trim_end_matches('>').to_string())
    })
}

fn message(resp: &HttpResponse) -> String {
    serde_json::from_str::<Value>(&resp.body)
        .ok()
        .and_then(|v| v.get("message").and_then(Value::as_str).map(str::to_string))
        .unwrap_or_default()
        .to_ascii_lowercase()
}

fn pointer<'a>(v: &'a Value, path: &[&str]) -> Option<&'a Value> {
    path.iter()
        .try_fold(v, |cur, key| cur.get(*key))
        .filter(|v| !v.is_null())
}

fn str_field<'a>(v: &'a Value, path: &[&str]) -> Result<&'a str> {
    pointer(v, path)
        .and_then(Value::as_str)
        .ok_or_else(|| Error::Transport(format!("response lacks field {}", path.join("."))))
}

fn time_field(v: &Value, path: &[&str]) -> Result<Timestamp> {
    let s = str_field(v, path)?;
    DateTime::parse_from_rfc3339(s)
        .map(|t| t.with_timezone(&Utc))
        .map_err(|e| Error::Transport(format!("bad timestamp {s:?}: {e}")))
}

fn user_login(v: &Value) -> Option<String> {
    pointer(v, &["login"])
        .and_then(Value::as_str)
        .map(str::to_string)
}

fn parse_commit(v: &Value) -> Result<Commit> {
    let author_id = pointer(v, &["author"])
        .and_then(user_login)
        .or_else(|| {
            pointer(v, &["commit", "author", "name"])
                .and_then(Value::as_str)
                .map(str::to_string)
        })
        .ok_or_else(|| Error::Transport("commit without author".into()))?;
    let changes = pointer(v, &["files"])
        .and_then(Value::as_array)
        .map(|files| {
            files
                .iter()
                .map(|f| {
                    FileChange::new(
                        str_field(f, &["filename"])?,
                        f.get("additions").and_then(Value::as_u64).unwrap_or(0),
                        f.get("deletions").and_then(Value::as_u64).unwrap_or(0),
                    )
                })
                .collect::<Result<Vec<_>>>()
        })
        .transpose()?
        .unwrap_or_default();
    Ok(Commit {
        sha: str_field(v, &["sha"])?.to_string(),
        author_id,
        timestamp: time_field(v, &["commit", "committer", "date"])?,
        message: pointer(v, &["commit", "message"])
            .and_then(Value::as_str)
            .unwrap_or_default()
            .to_string(),
        is_merge: pointer(v, &["parents"])
            .and_then(Value::as_array)
            .is_some_and(|p| p.len() > 1),
        changes,
    })
}

fn parse_issue(v: &Value) -> Result<IssueRecord> {
    let names = |key: &str, field: &str| -> BTreeSet<String> {
        pointer(v, &[key])
            .and_then(Value::as_array)
            .map(|a| {
                a.iter()
                    .filter_map(|x| x.get(field).and_then(Value::as_str))
                    .map(str::to_string)
                    .collect()
            })
            .unwrap_or_default()
    };
    let mut status_history = vec![StatusChange {
        status: IssueStatus::Open,
        timestamp: time_field(v, &["created_at"])?,
    }];
    if let Some(closed) = pointer(v, &["closed_at"]) {
        if closed.is_string() {
            status_history.push(StatusChange {
                status: IssueStatus::Closed,
                timestamp: time_field(v, &["closed_at"])?,
            });
        }
    }
    Ok(IssueRecord {
        number: pointer(v, &["number"])
            .and_then(Value::as_u64)
            .ok_or_else(|| Error::Transport("issue without number".into()))?,
        labels: names("labels", "name"),
        assignees: names("assignees", "login"),
        title: pointer(v, &["title"])
            .and_then(Value::as_str)
            .unwrap_or_default()
            .to_string(),
        body: pointer(v, &["body"])
            .and_then(Value::as_str)
            .unwrap_or_default()
            .to_string(),
        status_history,
    })
}

fn parse_comment(v: &Value, url_key: &str, kind: CommentKind) -> Result<PRCommentRecord> {
    let url = str_field(v, &[url_key])?;
    let pr_number = url
        .rsplit('/')
        .next()
        .and_then(|n| n.parse().ok())
        .ok_or_else(|| Error::Transport(format!("cannot read PR number from {url}")))?;
    Ok(PRCommentRecord {
        id: pointer(v, &["id"])
            .and_then(Value::as_u64)
            .ok_or_else(|| Error::Transport("comment without id".into()))?,
        pr_number,
        author_id: pointer(v, &["user"])
            .and_then(user_login)
            .ok_or_else(|| Error::Transport("comment without user".into()))?,
        timestamp: time_field(v, &["created_at"])?,
        kind,
        body: pointer(v, &["body"])
            .and_then(Value::as_str)
            .unwrap_or_default()
            .to_string(),
    })
}

/// In-memory forge used by tests and examples.
#[derive(Debug, Default)]
pub struct CannedTransport {
    routes: BTreeMap<String, Vec<HttpResponse>>,
    calls: std::cell::RefCell<Vec<String>>,
    served: std::cell::RefCell<BTreeMap<String, usize>>,
}

impl CannedTransport {
    pub fn new() -> Self {
        Self::default()
    }

    /// Responses for `url` are served in order; the last one repeats.
    pub fn route(mut self, url: impl Into<String>, responses: Vec<HttpResponse>) -> Self {
        self.routes.insert(url.into(), responses);
        self
    }

    pub fn json(url: impl Into<String>, body: Value) -> (String, HttpResponse) {
        (url.into(), ok_json(body, None))
    }

    pub fn calls(&self) -> Vec<String> {
        self.calls.borrow().clone()
    }
}

pub fn ok_json(body: Value, link_next: Option<&str>) -> HttpResponse {
    let mut headers = vec![("content-type".to_string(), "application/json".to_string())];
    if let Some(next) = link_next {
        headers.push(("link".into(), format!("<{next}>; rel=\"next\"")));
    }
    HttpResponse {
        status: 200,
        headers,
        body: body.to_string(),
    }
}

impl HttpTransport for CannedTransport {
    fn get(&self, url: &str, _token: &str) -> Result<HttpResponse> {
        self.calls.borrow_mut().push(url.to_string());
        let responses = self
            .routes
            .get(url)
            .ok_or_else(|| Error::Transport(format!("no canned route for {url}")))?;
        let mut served = self.served.borrow_mut();
        let i = served.entry(url.to_string()).or_insert(0);
        let resp = responses[(*i).min(responses.len() - 1)].clone();
        *i += 1;
        Ok(resp)
    }
}
