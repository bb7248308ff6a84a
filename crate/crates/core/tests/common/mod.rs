#![allow(dead_code)]

use std::collections::BTreeMap;
use std::io::{BufRead, BufReader, Write};
use std::net::TcpListener;
use std::path::PathBuf;
use std::sync::{Arc, Mutex};
use std::thread;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

pub fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

/// Midranks by counting: rank = #smaller + (#equal + 1) / 2.
pub fn naive_ranks(v: &[f64]) -> Vec<f64> {
    v.iter()
        .map(|x| {
            let less = v.iter().filter(|y| *y < x).count() as f64;
            let equal = v.iter().filter(|y| *y == x).count() as f64;
            less + (equal + 1.0) / 2.0
        })
        .collect()
}

fn all_permutations(v: &[f64]) -> Vec<Vec<f64>> {
    if v.len() <= 1 {
        return vec![v.to_vec()];
    }
    let mut out = Vec::new();
    for i in 0..v.len() {
        let mut rest = v.to_vec();
        let head = rest.remove(i);
        for mut tail in all_permutations(&rest) {
            tail.insert(0, head);
            out.push(tail);
        }
    }
    out
}

/// Sum of squared column rank sums: monotone in the Friedman statistic for a
/// fixed set of blocks.
fn friedman_score(cols: &[f64]) -> f64 {
    cols.iter().map(|c| c * c).sum()
}

/// Exact Friedman p: every combination of within-block orderings (k!^n) is
/// visited and its statistic compared with the observed one.
pub fn friedman_exact_oracle(blocks: &[Vec<f64>]) -> f64 {
    let ranked: Vec<Vec<f64>> = blocks.iter().map(|b| naive_ranks(b)).collect();
    let k = ranked[0].len();
    let mut observed = vec![0.0; k];
    for r in &ranked {
        for (o, x) in observed.iter_mut().zip(r) {
            *o += x;
        }
    }
    let threshold = friedman_score(&observed) - 1e-9;
    let perms: Vec<Vec<Vec<f64>>> = ranked.iter().map(|r| all_permutations(r)).collect();
    let (mut hits, mut total) = (0u64, 0u64);
    let mut cols = vec![0.0; k];
    fn walk(perms: &[Vec<Vec<f64>>], i: usize, cols: &mut Vec<f64>, t: f64, hits: &mut u64, total: &mut u64) {
        if i == perms.len() {
            *total += 1;
            if friedman_score(cols) >= t {
                *hits += 1;
            }
            return;
        }
        for p in &perms[i] {
            for (c, x) in cols.iter_mut().zip(p) {
                *c += x;
            }
            walk(perms, i + 1, cols, t, hits, total);
            for (c, x) in cols.iter_mut().zip(p) {
                *c -= x;
            }
        }
    }
    walk(&perms, 0, &mut cols, threshold, &mut hits, &mut total);
    hits as f64 / total as f64
}

/// Kruskal-Wallis H from scratch, with the tie correction.
pub fn kw_statistic(groups: &[Vec<f64>]) -> f64 {
    let pooled: Vec<f64> = groups.iter().flatten().copied().collect();
    let n = pooled.len() as f64;
    let ranks = naive_ranks(&pooled);
    let mut at = 0;
    let mut s = 0.0;
    for g in groups {
        let r: f64 = ranks[at..at + g.len()].iter().sum();
        s += r * r / g.len() as f64;
        at += g.len();
    }
    let h = 12.0 / (n * (n + 1.0)) * s - 3.0 * (n + 1.0);
    let mut ties = 0.0;
    let mut seen: Vec<f64> = Vec::new();
    for x in &pooled {
        if !seen.contains(x) {
            seen.push(*x);
            let t = pooled.iter().filter(|y| *y == x).count() as f64;
            ties += t * t * t - t;
        }
    }
    let c = 1.0 - ties / (n * n * n - n);
    if c <= 0.0 {
        0.0
    } else {
        h / c
    }
}

/// Exact KW p over every assignment of the pooled values to groups of the
/// observed sizes.
pub fn kw_exact_oracle(groups: &[Vec<f64>]) -> f64 {
    let pooled: Vec<f64> = groups.iter().flatten().copied().collect();
    let sizes: Vec<usize> = groups.iter().map(Vec::len).collect();
    let observed = kw_statistic(groups) - 1e-9;
    let (mut hits, mut total) = (0u64, 0u64);
    let mut labels = vec![0usize; pooled.len()];
    fn walk(
        pooled: &[f64],
        sizes: &[usize],
        labels: &mut Vec<usize>,
        i: usize,
        obs: f64,
        hits: &mut u64,
        total: &mut u64,
    ) {
        if i == pooled.len() {
            let groups: Vec<Vec<f64>> = (0..sizes.len())
                .map(|g| (0..pooled.len()).filter(|j| labels[*j] == g).map(|j| pooled[j]).collect())
                .collect();
            if groups.iter().zip(sizes).any(|(g, s)| g.len() != *s) {
                return;
            }
            *total += 1;
            if kw_statistic(&groups) >= obs {
                *hits += 1;
            }
            return;
        }
        for g in 0..sizes.len() {
            labels[i] = g;
            walk(pooled, sizes, labels, i + 1, obs, hits, total);
        }
    }
    walk(&pooled, &sizes, &mut labels, 0, observed, &mut hits, &mut total);
    hits as f64 / total as f64
}

/// Exact two-sided signed rank p over all 2^n sign assignments of the non-zero
/// absolute differences.
pub fn wilcoxon_exact_oracle(diffs: &[f64]) -> f64 {
    let nz: Vec<f64> = diffs.iter().copied().filter(|d| *d != 0.0).collect();
    if nz.is_empty() {
        return 1.0;
    }
    let abs: Vec<f64> = nz.iter().map(|d| d.abs()).collect();
    let ranks = naive_ranks(&abs);
    let total: f64 = ranks.iter().sum();
    let mean = total / 2.0;
    let w: f64 = nz.iter().zip(&ranks).filter(|(d, _)| **d > 0.0).map(|(_, r)| r).sum();
    let dev = (w - mean).abs() - 1e-9;
    let n = nz.len();
    let mut hits = 0u64;
    for mask in 0u64..(1 << n) {
        let s: f64 = (0..n).filter(|i| mask >> i & 1 == 1).map(|i| ranks[i]).sum();
        if (s - mean).abs() >= dev {
            hits += 1;
        }
    }
    hits as f64 / (1u64 << n) as f64
}

/// Kendall tau-b by visiting every pair.
pub fn kendall_tau_b_oracle(x: &[f64], y: &[f64]) -> Option<f64> {
    let n = x.len();
    let (mut c, mut d, mut tx, mut ty) = (0i64, 0i64, 0i64, 0i64);
    for i in 0..n {
        for j in i + 1..n {
            let a = (x[i] - x[j]).signum() * f64::from(x[i] != x[j]);
            let b = (y[i] - y[j]).signum() * f64::from(y[i] != y[j]);
            if a == 0.0 && b == 0.0 {
                continue;
            } else if a == 0.0 {
                tx += 1;
            } else if b == 0.0 {
                ty += 1;
            } else if a == b {
                c += 1;
            } else {
                d += 1;
            }
        }
    }
    let denom = (((c + d + tx) as f64) * ((c + d + ty) as f64)).sqrt();
    (denom > 0.0).then(|| (c - d) as f64 / denom)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Metric {
    Nominal,
    Ordinal,
    Interval,
}

/// Krippendorff's alpha straight from the coincidence matrix definition.
/// `None` when fewer than two pairable values exist.
pub fn krippendorff_oracle(units: &[Vec<Option<f64>>], metric: Metric) -> Option<f64> {
    let mut cats: Vec<f64> = units.iter().flatten().flatten().copied().collect();
    cats.sort_by(f64::total_cmp);
    cats.dedup();
    let v = cats.len();
    let idx = |x: f64| cats.iter().position(|c| *c == x).unwrap();
    let mut o = vec![vec![0.0f64; v]; v];
    for u in units {
        let vals: Vec<f64> = u.iter().flatten().copied().collect();
        let m = vals.len();
        if m < 2 {
            continue;
        }
        for i in 0..m {
            for j in 0..m {
                if i != j {
                    o[idx(vals[i])][idx(vals[j])] += 1.0 / (m as f64 - 1.0);
                }
            }
        }
    }
    let nc: Vec<f64> = o.iter().map(|row| row.iter().sum()).collect();
    let n: f64 = nc.iter().sum();
    if n < 2.0 - 1e-12 {
        return None;
    }
    let delta2 = |c: usize, k: usize| -> f64 {
        match metric {
            Metric::Nominal => f64::from(c != k),
            Metric::Interval => (cats[c] - cats[k]).powi(2),
            Metric::Ordinal => {
                let (lo, hi) = (c.min(k), c.max(k));
                let s: f64 = nc[lo..=hi].iter().sum::<f64>() - (nc[c] + nc[k]) / 2.0;
                s * s
            }
        }
    };
    let (mut dob, mut dex) = (0.0, 0.0);
    for c in 0..v {
        for k in 0..v {
            dob += o[c][k] * delta2(c, k);
            dex += nc[c] * nc[k] * delta2(c, k);
        }
    }
    if dex == 0.0 {
        return Some(1.0);
    }
    Some(1.0 - (n - 1.0) * dob / dex)
}

/// Small Likert-like value, occasionally a half step to vary the tie pattern.
pub fn likert(rng: &mut ChaCha8Rng) -> f64 {
    let v = f64::from(rng.random_range(1u8..=5));
    if rng.random_bool(0.1) {
        v + 0.5
    } else {
        v
    }
}

pub const TOKEN: &str = "secret-token";

pub type Routes = BTreeMap<String, (u16, Vec<(String, String)>, String)>;

/// Minimal HTTP/1.1 server answering GETs from a route table. Requests without
/// the expected bearer token get a 401.
pub struct LocalForge {
    pub base: String,
    pub requests: Arc<Mutex<Vec<String>>>,
}

pub fn serve(build: impl FnOnce(&str) -> Routes) -> LocalForge {
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let base = format!("http://{}", listener.local_addr().unwrap());
    let routes = build(&base);
    let requests = Arc::new(Mutex::new(Vec::new()));
    let seen = Arc::clone(&requests);
    thread::spawn(move || {
        for stream in listener.incoming() {
            let Ok(stream) = stream else { continue };
            handle(stream, &routes, &seen);
        }
    });
    LocalForge { base, requests }
}

fn ok(body: Value) -> (u16, Vec<(String, String)>, String) {
    (200, Vec::new(), body.to_string())
}

pub fn forge_routes(base_for_links: &str) -> Routes {
    let repo = "/repos/org/proj";
    let mut r = Routes::new();
    let page2 = format!("{base_for_links}{repo}/commits?per_page=100&page=2");
    r.insert(
        format!("{repo}/commits?per_page=100"),
        (200, vec![("Link".into(), format!("<{page2}>; rel=\"next\""))], json!([{"sha": "c1"}]).to_string()),
    );
    r.insert(format!("{repo}/commits?per_page=100&page=2"), ok(json!([{"sha": "c2"}])));
    r.insert(
        format!("{repo}/commits/c1"),
        ok(json!({
            "sha": "c1", "author": {"login": "alice"},
            "commit": {"message": "Login form #3", "committer": {"date": "2024-04-02T10:00:00Z"}},
            "parents": [{"sha": "p"}],
            "files": [
                {"filename": "app/models/user.rb", "additions": 4, "deletions": 2},
                {"filename": "spec/models/user_spec.rb", "additions": 3, "deletions": 0}
            ]
        })),
    );
    r.insert(
        format!("{repo}/commits/c2"),
        ok(json!({
            "sha": "c2", "author": {"login": "bob"},
            "commit": {"message": "Merge pull request #7", "committer": {"date": "2024-04-12T09:00:00Z"}},
            "parents": [{"sha": "a"}, {"sha": "b"}],
            "files": [{"filename": "README.md", "additions": 1, "deletions": 1}]
        })),
    );
    r.insert(format!("{repo}/pulls?state=all&per_page=100"), ok(json!([{"number": 7}])));
    r.insert(
        format!("{repo}/issues?state=all&per_page=100"),
        ok(json!([
            {"number": 3, "title": "As a user I can log in", "body": "",
             "labels": [{"name": "Team A"}], "assignees": [{"login": "alice"}],
             "created_at": "2024-04-01T08:00:00Z", "closed_at": null},
            {"number": 7, "pull_request": {}, "created_at": "2024-04-02T00:00:00Z"}
        ])),
    );
    r.insert(
        format!("{repo}/pulls/comments?per_page=100"),
        ok(json!([{"id": 21, "user": {"login": "bob"}, "created_at": "2024-04-03T12:00:00Z",
                   "body": "nit", "pull_request_url": "https://x/repos/org/proj/pulls/7"}])),
    );
    r.insert(
        format!("{repo}/issues/comments?per_page=100"),
        ok(json!([
            {"id": 22, "user": {"login": "alice"}, "created_at": "2024-04-04T12:00:00Z",
             "body": "thanks", "issue_url": "https://x/repos/org/proj/issues/7"},
            {"id": 23, "user": {"login": "alice"}, "created_at": "2024-04-04T13:00:00Z",
             "body": "story chatter", "issue_url": "https://x/repos/org/proj/issues/3"}
        ])),
    );
    r
}

fn handle(mut stream: std::net::TcpStream, routes: &Routes, seen: &Mutex<Vec<String>>) {
    let mut reader = BufReader::new(stream.try_clone().unwrap());
    let mut request_line = String::new();
    if reader.read_line(&mut request_line).is_err() {
        return;
    }
    let mut auth = String::new();
    loop {
        let mut line = String::new();
        if reader.read_line(&mut line).unwrap_or(0) == 0 || line == "\r\n" {
            break;
        }
        if let Some((k, v)) = line.split_once(':') {
            if k.eq_ignore_ascii_case("authorization") {
                auth = v.trim().to_string();
            }
        }
    }
    let path = request_line.split_whitespace().nth(1).unwrap_or("").to_string();
    seen.lock().unwrap().push(path.clone());
    let (status, headers, body) = if auth != format!("Bearer {TOKEN}") {
        (401, Vec::new(), json!({"message": "Bad credentials"}).to_string())
    } else {
        routes
            .get(&path)
            .cloned()
            .unwrap_or((404, Vec::new(), json!({"message": "Not Found"}).to_string()))
    };
    let mut head = format!(
        "HTTP/1.1 {status} X\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n",
        body.len()
    );
    for (k, v) in headers {
        head.push_str(&format!("{k}: {v}\r\n"));
    }
    head.push_str("\r\n");
    let _ = stream.write_all(head.as_bytes());
    let _ = stream.write_all(body.as_bytes());
}
