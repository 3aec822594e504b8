//! Regenerates the bundled fixture corpus used by the CLI tests.
//!
//! Usage: cargo run -p hsbr-cli --example gen_fixtures -- <corpus-dir>

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use chrono::{DateTime, Duration, TimeZone, Utc};
use hsbr_core::forge::{
    save_fixture, CommitRecord, DiffEntry, IssueRecord, PullRequestRecord, RepoStats,
    RepositorySnapshot, ReviewRecord, ReviewState, WorkflowFile,
};

const SHA: &str = "b4ffde65f46336ab88eb53be808477a3936bae11";

const PACKAGES: &str = "\
Package: libc6
Priority: required
Source: glibc

Package: base-files
Priority: required
Essential: yes

Package: bash
Priority: required
Essential: yes
Pre-Depends: libc6 (>= 2.36)
Depends: base-files

Package: liblzma5
Priority: required
Source: xz-utils
Depends: libc6 (>= 2.34)

Package: xz-utils
Priority: required
Source: xz-utils
Depends: liblzma5 (= 5.6.0-0.1), libc6

Package: zlib1g
Priority: required
Source: zlib
Depends: libc6

Package: libzstd1
Priority: required
Source: libzstd
Depends: libc6

Package: dpkg
Priority: required
Essential: yes
Pre-Depends: libc6, liblzma5 (>= 5.4.0), zlib1g
Depends: tar

Package: tar
Priority: required
Essential: yes
Pre-Depends: libc6

Package: libsystemd0
Priority: optional
Source: systemd
Depends: libc6, liblzma5, libzstd1

Package: systemd
Priority: important
Depends: libsystemd0 (= 255.4-1)

Package: apt
Priority: required
Depends: libsystemd0, libzstd1, zlib1g

Package: libssl3
Priority: important
Source: openssl
Depends: libc6

Package: openssl
Priority: optional
Depends: libssl3

Package: openssh-server
Priority: optional
Source: openssh
Depends: libsystemd0, libssl3, zlib1g | zlib1g-ng

Package: libcurl4
Priority: optional
Source: curl
Depends: libssl3, zlib1g, libzstd1

Package: curl
Priority: optional
Depends: libcurl4

Package: libonig5
Priority: optional
Source: libonig

Package: libjq1
Priority: optional
Source: jq
Depends: libonig5

Package: jq
Priority: optional
Depends: libjq1
";

const MAPPING: &str = "\
# repo_id\tbuilt packages
tukaani-project/xz\tliblzma5,xz-utils
facebook/zstd\tlibzstd1
madler/zlib\tzlib1g
openssl/openssl\tlibssl3,openssl
curl/curl\tlibcurl4,curl
jqlang/jq\tlibjq1,jq
";

fn t0() -> DateTime<Utc> {
    Utc.with_ymd_and_hms(2023, 1, 2, 9, 0, 0).unwrap()
}

fn day(n: i64) -> DateTime<Utc> {
    t0() + Duration::hours(n * 24)
}

/// Shape of one synthetic repository.
struct Spec {
    id: &'static str,
    stats: RepoStats,
    founder: &'static str,
    /// Later maintainers and how many PRs they author before their first merge.
    maintainers: Vec<(&'static str, usize)>,
    approvers: Vec<&'static str>,
    contributors: usize,
    /// Contributor PRs; each is merged unless its index is a multiple of `unmerged_every`.
    prs: usize,
    unmerged_every: usize,
    approvals: Vec<usize>,
    comments: Vec<u64>,
    direct_commits: usize,
    issues: usize,
    issue_participants: Vec<usize>,
    dependabot: bool,
    workflows: Vec<(&'static str, String)>,
    files: Vec<(&'static str, Vec<u8>)>,
    /// Merged PR whose description hides a binary addition.
    sneaky_pr: Option<(&'static str, &'static str)>,
}

struct Builder {
    snap: RepositorySnapshot,
    next_pr: u64,
    clock: i64,
}

impl Builder {
    fn tick(&mut self) -> DateTime<Utc> {
        self.clock += 1;
        day(self.clock)
    }

    fn pr(&mut self, author: &str, title: String) -> usize {
        let number = self.next_pr;
        self.next_pr += 1;
        let created_at = self.tick();
        self.snap.pull_requests.push(PullRequestRecord {
            number,
            author: author.into(),
            title,
            body: String::new(),
            created_at,
            merged_at: None,
            merged_by: None,
            reviews: vec![],
            comment_count: 0,
            participant_ids: [author.to_string()].into_iter().collect(),
            diff_summary: vec![DiffEntry {
                path: "src/lib.c".into(),
                additions: 12,
                deletions: 3,
                is_binary: false,
            }],
        });
        self.snap.pull_requests.len() - 1
    }

    fn merge(&mut self, idx: usize, by: &str, approvers: &[&str], comments: u64) {
        let at = self.tick();
        let pr = &mut self.snap.pull_requests[idx];
        for (i, a) in approvers.iter().enumerate() {
            pr.reviews.push(ReviewRecord {
                reviewer: a.to_string(),
                state: ReviewState::Approved,
                submitted_at: at - Duration::minutes(10 * (approvers.len() - i) as i64),
            });
            pr.participant_ids.insert(a.to_string());
        }
        pr.comment_count = comments;
        pr.merged_at = Some(at);
        pr.merged_by = Some(by.into());
        pr.participant_ids.insert(by.into());
        let number = pr.number;
        self.snap.commits_default_branch.push(CommitRecord {
            sha: format!("{:040x}", 0x1000 + self.snap.commits_default_branch.len()),
            author: pr.author.clone(),
            committed_at: at,
            linked_pr: Some(number),
        });
    }

    fn direct_commit(&mut self, author: &str) {
        let at = self.tick();
        self.snap.commits_default_branch.push(CommitRecord {
            sha: format!("{:040x}", 0x1000 + self.snap.commits_default_branch.len()),
            author: author.into(),
            committed_at: at,
            linked_pr: None,
        });
    }
}

fn build(spec: &Spec) -> RepositorySnapshot {
    let mut b = Builder {
        snap: RepositorySnapshot::empty(spec.id, Utc.with_ymd_and_hms(2024, 3, 28, 12, 0, 0).unwrap()),
        next_pr: 1,
        clock: 0,
    };
    b.snap.stats = spec.stats;
    b.snap.dependabot_config_present = spec.dependabot;
    b.snap.file_tree_ref = Some(PathBuf::from("tree"));

    // Founder acts first, so they are promoted with zero prior PRs.
    b.direct_commit(spec.founder);

    let mut maintainers = vec![spec.founder];
    for (name, before) in &spec.maintainers {
        for k in 0..*before {
            let idx = b.pr(name, format!("{name}: improvement {k}"));
            b.merge(idx, spec.founder, &[], 1);
        }
        let idx = b.pr("outsider", format!("fix build warning ({name})"));
        b.merge(idx, name, &[], 0);
        maintainers.push(name);
    }

    let contributors: Vec<String> = (0..spec.contributors).map(|i| format!("contrib{i:02}")).collect();
    for i in 0..spec.prs {
        let author = contributors[i % contributors.len()].clone();
        let idx = b.pr(&author, format!("change {i}"));
        if spec.unmerged_every > 0 && i % spec.unmerged_every == 0 {
            continue;
        }
        let n_appr = spec.approvals[i % spec.approvals.len()].min(spec.approvers.len());
        let appr: Vec<&str> = (0..n_appr)
            .map(|k| spec.approvers[(i + k) % spec.approvers.len()])
            .collect();
        let by = maintainers[i % maintainers.len()];
        b.merge(idx, by, &appr, spec.comments[i % spec.comments.len()]);
    }

    if let Some((author, path)) = spec.sneaky_pr {
        let idx = b.pr(author, "Tests: fix typo in test file description".into());
        b.snap.pull_requests[idx].diff_summary = vec![DiffEntry {
            path: path.into(),
            additions: 0,
            deletions: 0,
            is_binary: true,
        }];
        b.merge(idx, author, &[], 0);
    }

    for i in 0..spec.direct_commits {
        b.direct_commit(maintainers[i % maintainers.len()]);
    }

    for i in 0..spec.issues {
        let n = spec.issue_participants[i % spec.issue_participants.len()];
        let participant_ids: BTreeSet<String> = (0..n)
            .map(|k| contributors[(i + k) % contributors.len()].clone())
            .collect();
        b.snap.issues.push(IssueRecord {
            number: 1000 + i as u64,
            participant_ids,
        });
    }

    for (path, content) in &spec.workflows {
        b.snap.workflow_files.push(WorkflowFile {
            path: path.to_string(),
            content: content.clone(),
        });
    }
    b.snap
}

fn workflow(uses: &[&str]) -> String {
    let mut s = String::from("name: ci\non:\n  push:\n  pull_request:\njobs:\n  build:\n    runs-on: ubuntu-latest\n    steps:\n");
    for u in uses {
        s.push_str(&format!("      - uses: {u}\n"));
    }
    s.push_str("      - run: make check\n");
    s
}

fn text(s: &str) -> Vec<u8> {
    s.as_bytes().to_vec()
}

/// Compressed-looking payload: container magic followed by high bytes and NULs.
fn blob(magic: &[u8], len: usize) -> Vec<u8> {
    let mut v = magic.to_vec();
    let mut x: u32 = 0x9e37_79b9;
    while v.len() < len {
        x ^= x << 13;
        x ^= x >> 17;
        x ^= x << 5;
        v.push((x & 0xff) as u8);
    }
    v[magic.len()] = 0;
    v
}

fn stats(stargazers: u64, watchers: u64, forks: u64) -> RepoStats {
    RepoStats {
        stargazers,
        watchers,
        forks,
    }
}

fn specs() -> Vec<Spec> {
    let xz_magic: &[u8] = &[0xfd, b'7', b'z', b'X', b'Z', 0x00];
    let png_magic: &[u8] = &[0x89, b'P', b'N', b'G', 0x0d, 0x0a, 0x1a, 0x0a];
    let pinned = |name: &str| format!("{name}@{SHA}");
    vec![
        Spec {
            id: "tukaani-project/xz",
            stats: stats(420, 28, 95),
            founder: "lasse",
            maintainers: vec![("jiat75", 2)],
            approvers: vec!["jiat75"],
            contributors: 4,
            prs: 12,
            unmerged_every: 6,
            approvals: vec![0, 0, 0, 1],
            comments: vec![0, 0, 1],
            direct_commits: 40,
            issues: 6,
            issue_participants: vec![1, 2],
            dependabot: false,
            workflows: vec![(
                ".github/workflows/ci.yml",
                workflow(&["actions/checkout@v4", "jlumbroso/free-disk-space@main", "msys2/setup-msys2@v2"]),
            )],
            files: vec![
                ("src/liblzma/common/common.c", text("int lzma_code(void) { return 0; }\n")),
                ("tests/test_files.sh", text("#!/bin/sh\nexit 0\n")),
                ("tests/files/bad-3-corrupt_lzma2.xz", blob(xz_magic, 512)),
                ("tests/files/good-large_compressed.lzma", blob(&[0x5d, 0x00, 0x00, 0x80], 2048)),
                ("m4/build-to-host.m4", text("dnl build helper\n")),
                ("README", text("XZ Utils\n")),
            ],
            sneaky_pr: Some(("jiat75", "tests/files/bad-3-corrupt_lzma2.xz")),
        },
        Spec {
            id: "example/clean-lib",
            stats: stats(52000, 900, 8100),
            founder: "alice",
            maintainers: vec![("bob", 40), ("carol", 35), ("dave", 28)],
            approvers: vec!["bob", "carol", "dave", "erin"],
            contributors: 30,
            prs: 60,
            unmerged_every: 10,
            approvals: vec![2, 3, 2],
            comments: vec![4, 7, 2],
            direct_commits: 1,
            issues: 40,
            issue_participants: vec![4, 6, 9],
            dependabot: true,
            workflows: vec![(
                ".github/workflows/ci.yml",
                workflow(&[&pinned("actions/checkout"), &pinned("github/codeql-action/init"), "./.github/actions/setup"]),
            )],
            files: vec![
                ("src/lib.rs", text("pub fn add(a: u32, b: u32) -> u32 { a + b }\n")),
                ("tests/add.rs", text("#[test]\nfn adds() {}\n")),
                ("docs/guide.md", text("# Guide\n")),
            ],
            sneaky_pr: None,
        },
        Spec {
            id: "facebook/zstd",
            stats: stats(22000, 380, 2000),
            founder: "cyan",
            maintainers: vec![("terrelln", 12), ("embg", 6)],
            approvers: vec!["terrelln", "embg", "cyan"],
            contributors: 14,
            prs: 30,
            unmerged_every: 7,
            approvals: vec![1, 1, 2],
            comments: vec![2, 3],
            direct_commits: 3,
            issues: 20,
            issue_participants: vec![2, 3, 5],
            dependabot: true,
            workflows: vec![(
                ".github/workflows/dev.yml",
                workflow(&["actions/checkout@v4", &pinned("microsoft/setup-msbuild")]),
            )],
            files: vec![
                ("lib/zstd.c", text("int zstd(void) { return 1; }\n")),
                ("tests/golden-decompression/empty-block.zst", blob(&[0x28, 0xb5, 0x2f, 0xfd], 256)),
                ("doc/images/dict-cr.png", blob(png_magic, 300)),
            ],
            sneaky_pr: None,
        },
        Spec {
            id: "madler/zlib",
            stats: stats(5400, 190, 2300),
            founder: "madler",
            maintainers: vec![],
            approvers: vec![],
            contributors: 6,
            prs: 8,
            unmerged_every: 2,
            approvals: vec![0],
            comments: vec![1, 0],
            direct_commits: 25,
            issues: 10,
            issue_participants: vec![2, 3],
            dependabot: false,
            workflows: vec![(
                ".github/workflows/cmake.yml",
                workflow(&["actions/checkout@v4", "actions/upload-artifact@v4"]),
            )],
            files: vec![
                ("inflate.c", text("int inflate(void) { return 0; }\n")),
                ("contrib/dotzlib/DotZLib.chm", blob(&[b'I', b'T', b'S', b'F'], 400)),
            ],
            sneaky_pr: None,
        },
        Spec {
            id: "openssl/openssl",
            stats: stats(25000, 1100, 10000),
            founder: "levitte",
            maintainers: vec![("t8m", 30), ("paulidale", 25), ("mattcaswell", 18)],
            approvers: vec!["t8m", "paulidale", "mattcaswell", "levitte"],
            contributors: 24,
            prs: 50,
            unmerged_every: 8,
            approvals: vec![2, 2, 3],
            comments: vec![3, 5],
            direct_commits: 0,
            issues: 30,
            issue_participants: vec![3, 4, 6],
            dependabot: true,
            workflows: vec![(
                ".github/workflows/ci.yml",
                workflow(&["actions/checkout@v4", "actions/setup-python@v5"]),
            )],
            files: vec![
                ("crypto/aes/aes_core.c", text("void aes(void) {}\n")),
                ("test/certs/rootcert.der", blob(&[0x30, 0x82, 0x03, 0x00], 700)),
            ],
            sneaky_pr: None,
        },
        Spec {
            id: "curl/curl",
            stats: stats(35000, 780, 6300),
            founder: "bagder",
            maintainers: vec![("vszakats", 20), ("jay", 15)],
            approvers: vec!["vszakats", "jay", "bagder", "icing"],
            contributors: 26,
            prs: 45,
            unmerged_every: 9,
            approvals: vec![1, 2],
            comments: vec![2, 4, 1],
            direct_commits: 6,
            issues: 28,
            issue_participants: vec![2, 5],
            dependabot: true,
            workflows: vec![(
                ".github/workflows/linux.yml",
                workflow(&[&pinned("actions/checkout"), &pinned("actions/cache")]),
            )],
            files: vec![
                ("lib/url.c", text("int url(void) { return 0; }\n")),
                ("docs/examples/README.md", text("examples\n")),
            ],
            sneaky_pr: None,
        },
        Spec {
            id: "jqlang/jq",
            stats: stats(30000, 350, 1500),
            founder: "nicowilliams",
            maintainers: vec![("itchyny", 10), ("emanuele6", 8)],
            approvers: vec!["itchyny", "emanuele6"],
            contributors: 12,
            prs: 25,
            unmerged_every: 5,
            approvals: vec![1, 0, 1],
            comments: vec![1, 2],
            direct_commits: 4,
            issues: 25,
            issue_participants: vec![2, 3, 4],
            dependabot: true,
            workflows: vec![(
                ".github/workflows/ci.yml",
                workflow(&["actions/checkout@v4", "docker://alpine:3.19"]),
            )],
            files: vec![
                ("src/main.c", text("int main(void) { return 0; }\n")),
                ("docs/content/jq.png", blob(png_magic, 200)),
            ],
            sneaky_pr: None,
        },
        Spec {
            id: "example/webapp",
            stats: stats(800, 40, 120),
            founder: "owner",
            maintainers: vec![("helper", 4)],
            approvers: vec!["helper"],
            contributors: 5,
            prs: 14,
            unmerged_every: 4,
            approvals: vec![1, 0],
            comments: vec![0, 1],
            direct_commits: 10,
            issues: 8,
            issue_participants: vec![1, 2],
            dependabot: true,
            workflows: vec![(
                ".github/workflows/deploy.yml",
                workflow(&["actions/checkout@v4", "peaceiris/actions-gh-pages@v3", "someorg/deploy-action@master"]),
            )],
            files: vec![
                ("src/app.js", text("export const app = 1;\n")),
                ("static/img/logo.png", blob(png_magic, 500)),
                ("static/fonts/inter.woff2", blob(&[b'w', b'O', b'F', b'2'], 300)),
            ],
            sneaky_pr: None,
        },
        Spec {
            id: "example/docs-site",
            stats: stats(150, 12, 30),
            founder: "writer",
            maintainers: vec![],
            approvers: vec![],
            contributors: 3,
            prs: 6,
            unmerged_every: 3,
            approvals: vec![0],
            comments: vec![0],
            direct_commits: 18,
            issues: 3,
            issue_participants: vec![1],
            dependabot: false,
            workflows: vec![],
            files: vec![
                ("docs/manual.pdf", blob(b"%PDF-1.7\n", 900)),
                ("docs/index.md", text("# Docs\n")),
                ("vendor/tool.bin", blob(&[0x7f, b'E', b'L', b'F'], 600)),
            ],
            sneaky_pr: None,
        },
        Spec {
            id: "example/tiny-tool",
            stats: stats(9, 1, 2),
            founder: "solo",
            maintainers: vec![],
            approvers: vec![],
            contributors: 1,
            prs: 2,
            unmerged_every: 0,
            approvals: vec![0],
            comments: vec![0],
            direct_commits: 6,
            issues: 1,
            issue_participants: vec![1],
            dependabot: false,
            workflows: vec![(
                ".github/workflows/ci.yml",
                "jobs:\n  test:\n    runs-on: ubuntu-latest\n    steps:\n      - uses: ./.github/actions/local\n".into(),
            )],
            files: vec![("main.py", text("print('hi')\n"))],
            sneaky_pr: None,
        },
    ]
}

fn write_tree(dir: &Path, files: &[(&str, Vec<u8>)]) {
    let tree = dir.join("tree");
    if tree.exists() {
        std::fs::remove_dir_all(&tree).expect("clear tree");
    }
    for (path, bytes) in files {
        let p = tree.join(path);
        std::fs::create_dir_all(p.parent().unwrap()).expect("tree dirs");
        std::fs::write(p, bytes).expect("tree file");
    }
}

fn main() {
    let out = PathBuf::from(
        std::env::args()
            .nth(1)
            .unwrap_or_else(|| "crates/cli/tests/fixtures/corpus".into()),
    );
    std::fs::create_dir_all(out.join("repos")).expect("corpus dir");
    std::fs::write(out.join("Packages"), PACKAGES).expect("Packages");
    std::fs::write(out.join("mapping.tsv"), MAPPING).expect("mapping");
    for spec in specs() {
        let dir = out.join("repos").join(spec.id.replace('/', "__"));
        let snap = build(&spec);
        save_fixture(&snap, &dir).expect("fixture");
        write_tree(&dir, &spec.files);
        println!("{}", dir.display());
    }
}
