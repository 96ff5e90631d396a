#!/usr/bin/env python3
"""Builds the offline fixture: a cached repository, annotations, and the
expected report values.

The corpus is constructed to known totals (235 closed issues, 170 retained,
90 security, one 42-file outlier, 10 fixes without design files). After the
files are written, `oracle()` reads them back and recomputes the checked
report cells with plain loops and exact fractions; its results go to
expected.json. Run from anywhere: paths are relative to this file.
"""

import csv
import difflib
import hashlib
import json
import random
import re
from datetime import datetime, timedelta, timezone
from fractions import Fraction
from pathlib import Path

HERE = Path(__file__).resolve().parent
REPO = ("lowRISC", "opentitan")
CACHE = HERE / "cache" / f"{REPO[0]}__{REPO[1]}"
SEED = 20240611
MAX_FILES = 40
DAY = 86_400_000

IP_CATEGORIES = {
    "Cryptography": ["aes", "keymgr", "hmac", "kmac", "csrng", "edn"],
    "Memory": ["flash_ctrl", "otp_ctrl", "rom_ctrl"],
    "IO": ["spi_device", "spi_host", "pinmux"],
    "DeviceManager": ["rstmgr", "pwrmgr", "clkmgr", "sysrst_ctrl"],
    "Processor": ["otbn", "ibex"],
    "Debug": ["rv_dm"],
    "Other": ["tlul", "xbar", "prim", "aon_timer", "alert_handler"],
}
NON_CRYPTO = [c for c in IP_CATEGORIES if c != "Cryptography"]

# (year, functional, security)
YEARS = [(2019, 10, 10), (2020, 22, 30), (2021, 14, 17), (2022, 34, 33)]

# Security bugs: (impacts, count). Location plans are attached below.
IMPACT_GROUPS = [("C", 16), ("CI", 8), ("CA", 8), ("CIA", 2), ("IA", 14), ("I", 23), ("A", 19)]

MESSAGES = {"functional": (377, 7), "security": (584, 16)}  # (total, bugs over 10)
DAYS_TOTAL = {"functional": 2848, "security": 1908}

# Size population: (fixes, files, single-file fixes) per class.
SIZE = {"functional": (76, 238, 40), "security": (83, 225, 48)}
FOOTPRINT_GROUPS = (52, 45, 62)  # <=10, 11..30, >30 lines

CATEGORY_TARGETS = [("as", 80), ("co", 39), ("a_ff", 37), ("t", 23), ("i", 20), ("ca", 10), ("gen", 9), ("a_c", 7), ("m", 2)]

N_NO_FIX = 40
N_ANNOTATED_EXCLUDED = 25
N_OPEN = 5


def sha(*parts):
    return hashlib.sha1("/".join(map(str, parts)).encode()).hexdigest()


def iso(dt):
    return dt.strftime("%Y-%m-%dT%H:%M:%SZ")


# ---------------------------------------------------------------- SV files

def base_file(module):
    return [
        f"// {module}",
        f"module {module} (",
        "  input  logic clk_i,",
        "  input  logic rst_ni,",
        "  input  logic a_i,",
        "  output logic q_o",
        ");",
        "  logic tmp;",
        "  always_comb begin",
        "    tmp = a_i;",
        "  end",
        "  assign q_o = tmp;",
        "endmodule",
    ]


ASSIGN_LINE = 9  # index of "    tmp = a_i;"
END_LINE = 12  # index of "endmodule"


def apply_change(lines, kind, module):
    """Returns the file after a change of the given kind."""
    out = list(lines)
    if kind == "as":
        out.insert(ASSIGN_LINE + 1, "    tmp = tmp ^ a_i;")
    elif kind == "t":
        out[ASSIGN_LINE] = "    tmp = a_i ? 1'b1 : 1'b0;"
    elif kind == "co":
        out[ASSIGN_LINE] = "    if (a_i) tmp = a_i;"
    elif kind == "ca":
        out[ASSIGN_LINE] = "    case (a_i) default: tmp = a_i; endcase"
    elif kind == "a_c":
        out.insert(END_LINE, "  always_comb begin end")
    elif kind == "a_ff":
        out.insert(END_LINE, "  always_ff @(posedge clk_i) begin end")
    elif kind == "gen":
        out.insert(END_LINE, "  if (1) begin : g_fix end")
    elif kind == "i":
        out.insert(END_LINE, "  prim_buf u_buf (.in_i(a_i), .out_o());")
    elif kind == "m":
        out.append(f"module {module}_fix; endmodule")
    elif kind == "plain":
        out.insert(1, "// reviewed")
    else:
        raise ValueError(kind)
    return out


def min_lines(kind):
    return 2 if kind in ("t", "co", "ca") else 1


def line_counts(before, after):
    added = removed = 0
    for tag, i1, i2, j1, j2 in difflib.SequenceMatcher(None, before, after, autojunk=False).get_opcodes():
        if tag in ("replace", "delete"):
            removed += i2 - i1
        if tag in ("replace", "insert"):
            added += j2 - j1
    return added, removed


def path_for(ip, module_suffix, k):
    if ip == "ibex":
        return f"hw/vendor/lowrisc_ibex/rtl/ibex_{module_suffix}{k}.sv", f"ibex_{module_suffix}{k}"
    if ip == "xbar":
        return f"hw/top_earlgrey/ip/xbar_main/rtl/autogen/xbar_main_{module_suffix}{k}.sv", f"xbar_main_{module_suffix}{k}"
    if ip in ("pinmux", "clkmgr") and k % 2 == 0:
        return f"hw/top_earlgrey/ip/{ip}/rtl/autogen/{ip}_{module_suffix}{k}.sv", f"{ip}_{module_suffix}{k}"
    if ip == "prim" and k % 3 == 0:
        return f"hw/ip/prim_generic/rtl/prim_generic_{module_suffix}{k}.sv", f"prim_generic_{module_suffix}{k}"
    return f"hw/ip/{ip}/rtl/{ip}_{module_suffix}{k}.sv", f"{ip}_{module_suffix}{k}"


# ---------------------------------------------------------------- planning

def plan(rng):
    bugs = []

    # Security bugs with impact sets and location plans.
    # Each plan is a list of categories; "crypto" flags pick Cryptography.
    security = []
    for impacts, n in IMPACT_GROUPS:
        for _ in range(n):
            security.append({"class": "security", "impacts": impacts, "nloc": 1, "crypto": False, "zero": False, "outlier": False})

    def group(impacts):
        return [b for b in security if b["impacts"] == impacts]

    def flag(bs, n):
        for b in bs[:n]:
            b["crypto"] = True

    flag(group("C"), 8)
    ci = group("CI")
    ci[0]["nloc"] = 2
    flag(ci, 4)
    flag(group("CA"), 2)
    flag(group("CIA"), 2)
    ia = group("IA")
    ia[-1]["nloc"] = 2
    flag(ia, 4)
    i_only = group("I")
    i_only[0].update(outlier=True, nloc=3, crypto=True)
    flag(i_only[1:], 5)
    for b in i_only[-3:]:
        b.update(zero=True, nloc=0)
    a_only = group("A")
    for b in a_only[:3]:
        b["nloc"] = 2
    flag(a_only, 3)
    for b in a_only[-3:]:
        b.update(zero=True, nloc=0)

    functional = [{"class": "functional", "impacts": "", "nloc": 1, "crypto": False, "zero": False, "outlier": False} for _ in range(80)]
    for b in functional[-4:]:
        b.update(zero=True, nloc=0)
    bugs = security + functional

    # Locations.
    for b in bugs:
        if b["nloc"] == 0:
            b["locations"] = []
            continue
        others = rng.sample(NON_CRYPTO, b["nloc"] - 1 if b["crypto"] else b["nloc"])
        b["locations"] = (["Cryptography"] if b["crypto"] else []) + others
        if b["class"] == "functional":
            b["locations"] = [rng.choice(list(IP_CATEGORIES))]

    # Years.
    pool = {"functional": [b for b in bugs if b["class"] == "functional"], "security": [b for b in bugs if b["class"] == "security"]}
    for cls in pool:
        rng.shuffle(pool[cls])
    for year, nf, ns in YEARS:
        for _ in range(nf):
            pool["functional"].pop()["year"] = year
        for _ in range(ns):
            pool["security"].pop()["year"] = year

    # File counts for the size population.
    for cls, (nfix, nfiles, singles) in SIZE.items():
        members = [b for b in bugs if b["class"] == cls and not b["zero"] and not b["outlier"]]
        assert len(members) == nfix, (cls, len(members))
        rng.shuffle(members)
        members.sort(key=lambda b: -b["nloc"])  # multi-location bugs need several files
        multi, single = members[: nfix - singles], members[nfix - singles :]
        assert all(b["nloc"] <= 1 for b in single)
        for b in single:
            b["nfiles"] = 1
        for b in multi:
            b["nfiles"] = 2
        left = nfiles - singles - 2 * len(multi)
        while left:
            b = rng.choice(multi)
            if b["nfiles"] < 12:
                b["nfiles"] += 1
                left -= 1
    for b in bugs:
        if b["zero"]:
            b["nfiles"] = 0
        elif b["outlier"]:
            b["nfiles"] = 42

    population = [b for b in bugs if 0 < b["nfiles"] <= MAX_FILES]
    assert len(population) == 159

    # Construct categories, at most one per file.
    for b in bugs:
        b["kinds"] = []
    for cat, target in CATEGORY_TARGETS:
        free = [b for b in population if len(b["kinds"]) < b["nfiles"]]
        for b in rng.sample(free, target):
            b["kinds"].append(cat)
    for b in bugs:
        b["file_kinds"] = b["kinds"] + ["plain"] * (b["nfiles"] - len(b["kinds"]))
        rng.shuffle(b["file_kinds"])

    # Footprint targets.
    small, mid, large = FOOTPRINT_GROUPS
    order = list(population)
    rng.shuffle(order)
    eligible = [b for b in order if sum(min_lines(k) for k in b["file_kinds"]) <= 10]
    le10 = {id(b) for b in eligible[:small]}
    rest = [b for b in order if id(b) not in le10]
    mids = {id(b) for b in rest[:mid]}
    assert len(rest) - mid == large
    for b in population:
        lo = sum(min_lines(k) for k in b["file_kinds"])
        if id(b) in le10:
            b["footprint"] = rng.randint(lo, 10)
        elif id(b) in mids:
            b["footprint"] = rng.randint(max(11, lo), 30)
        else:
            b["footprint"] = rng.randint(31, 90) if rng.random() < 0.7 else rng.randint(101, 400)
    for b in bugs:
        if b["outlier"]:
            b["footprint"] = 600
        b.setdefault("footprint", 0)

    # Messages: `over` bugs get 11..30, the rest 0..10; then hit the total.
    for cls, (total, over) in MESSAGES.items():
        members = [b for b in bugs if b["class"] == cls]
        rng.shuffle(members)
        for i, b in enumerate(members):
            b["over"] = i < over
            b["messages"] = rng.randint(11, 30) if b["over"] else rng.randint(0, 8)
        diff = total - sum(b["messages"] for b in members)
        while diff:
            b = rng.choice(members)
            lo, hi = (11, 60) if b["over"] else (0, 10)
            step = 1 if diff > 0 else -1
            if lo <= b["messages"] + step <= hi:
                b["messages"] += step
                diff -= step

    # Days to close in whole minutes, summing exactly to the class total.
    for cls, total_days in DAYS_TOTAL.items():
        members = [b for b in bugs if b["class"] == cls]
        rng.shuffle(members)
        mean_min = total_days * 1440 / len(members)
        for b in members:
            b["minutes"] = max(60, min(int(rng.expovariate(1 / mean_min)), 300 * 1440))
        members[0]["minutes"] = 10 * 1440  # exactly on a bin edge
        diff = total_days * 1440 - sum(b["minutes"] for b in members)
        members.sort(key=lambda b: -b["minutes"])
        i = 1
        while diff:
            b = members[i % len(members)]
            step = max(-(b["minutes"] - 60), min(diff, 20 * 1440)) if diff < 0 else min(diff, 20 * 1440)
            b["minutes"] += step
            diff -= step
            i += 1
    return bugs


# ---------------------------------------------------------------- records

def build(rng, bugs):
    numbers = rng.sample(range(1000, 20000), len(bugs) + N_NO_FIX + N_ANNOTATED_EXCLUDED + N_OPEN)
    issues, pulls, fixes, ann_rows = [], [], [], []
    next_pr = [30000]

    def new_pr(merged, messages, bots, paths):
        n = next_pr[0]
        next_pr[0] += rng.randint(1, 7)
        commits = [sha("c", n, k) for k in range(rng.randint(1, 3))]
        pulls.append({
            "number": n,
            "merged_at": merged,
            "message_count": messages,
            "bot_message_count": bots,
            "commits": commits,
            "merge_commit": sha("m", n) if merged else None,
            "files": [{"path": p, "lines_added": a, "lines_removed": r} for p, a, r in paths],
        })
        return n

    def issue(number, created, closed, comments, bots, prs, state="closed"):
        labels = ["Component:RTL", "Type:Bug"]
        if number % 5 == 0:
            labels.append("Priority:P1")
        issues.append({
            "number": number,
            "title": f"[rtl] issue {number}",
            "labels": labels,
            "state": state,
            "created_at": iso(created),
            "closed_at": iso(closed) if closed else None,
            "comment_count": comments,
            "bot_comment_count": bots,
            "linked_prs": prs,
            "closing_commits": [],
            "body": f"Observed wrong behaviour in block {number}.",
        })

    def created_in(year):
        start = datetime(year, 1, 1, tzinfo=timezone.utc)
        return start + timedelta(minutes=rng.randint(0, 364 * 1440 - 1))

    def make_files(b, number):
        cats = b["locations"] or [rng.choice(list(IP_CATEGORIES))]
        files = []
        pad = b["footprint"] - sum(min_lines(k) for k in b["file_kinds"])
        assert pad >= 0, b
        for k, kind in enumerate(b["file_kinds"]):
            ip = rng.choice(IP_CATEGORIES[cats[k % len(cats)]])
            path, module = path_for(ip, f"n{number}_", k)
            before = base_file(module)
            after = apply_change(before, kind, module)
            if k == 0 and pad:
                after = after[:1] + [f"// detail {j}" for j in range(pad)] + after[1:]
            added, removed = line_counts(before, after)
            files.append({
                "path": path,
                "lines_added": added,
                "lines_removed": removed,
                "before_content": "\n".join(before) + "\n",
                "after_content": "\n".join(after) + "\n",
                "generated_flag": False,
            })
        assert sum(f["lines_added"] + f["lines_removed"] for f in files) == b["footprint"], b
        return files

    idx = iter(numbers)
    for b in bugs:
        n = next(idx)
        b["number"] = n
        created = created_in(b["year"])
        closed = created + timedelta(minutes=b["minutes"])
        files = make_files(b, n) if b["nfiles"] else []
        use_pr = b["nfiles"] > 0 and rng.random() < 0.55
        prs = []
        if use_pr:
            pr_msgs = rng.randint(0, b["messages"])
            comments = b["messages"] - pr_msgs
            split = [pr_msgs] if rng.random() < 0.85 or pr_msgs < 2 else [pr_msgs // 2, pr_msgs - pr_msgs // 2]
            merged = iso(closed - timedelta(minutes=min(30, b["minutes"] // 2)))
            paths = [(f["path"], f["lines_added"], f["lines_removed"]) for f in files]
            prs = [new_pr(merged, m, min(m, rng.randint(0, 1)), paths) for m in split]
            source = {"kind": "pull_requests", "ids": prs}
            if rng.random() < 0.2:
                prs = prs + [new_pr(None, rng.randint(0, 4), 0, [])]  # abandoned attempt
        else:
            comments = b["messages"]
            source = {"kind": "commits", "ids": [sha("fix", n)]}
        issue(n, created, closed, comments, min(comments, rng.randint(0, 1)), prs)
        fixes.append({"bug_id": n, "source": source, "files": files, "excluded": False, "reason": None})
        b["source"] = source["kind"]
        if b["class"] == "security":
            ann_rows.append([n, "security", b["impacts"], "", ""])
        else:
            ann_rows.append([n, "functional", "", "", ""])

    for _ in range(N_NO_FIX):
        n = next(idx)
        created = created_in(rng.choice([2019, 2020, 2021, 2022]))
        closed = created + timedelta(minutes=rng.randint(60, 90 * 1440))
        prs = [new_pr(None, rng.randint(0, 3), 0, [])] if rng.random() < 0.25 else []
        issue(n, created, closed, rng.randint(0, 6), 0, prs)
        fixes.append({"bug_id": n, "source": {"kind": "none"}, "files": [], "excluded": True, "reason": "no fix found"})
        ann_rows.append([n, rng.choice(["functional", "security"]), "", "", ""])
        if ann_rows[-1][1] == "security":
            ann_rows[-1][2] = "A"

    notes = ["testbench only", "not an RTL bug, documentation", "duplicate of another report", "tooling: lint waiver"]
    for k in range(N_ANNOTATED_EXCLUDED):
        n = next(idx)
        created = created_in(rng.choice([2019, 2020, 2021, 2022]))
        closed = created + timedelta(minutes=rng.randint(60, 60 * 1440))
        issue(n, created, closed, rng.randint(0, 5), 0, [])
        module = f"aes_x{n}"
        before = base_file(module)
        after = apply_change(before, "plain", module)
        added, removed = line_counts(before, after)
        fixes.append({
            "bug_id": n,
            "source": {"kind": "commits", "ids": [sha("fix", n)]},
            "files": [{"path": f"hw/ip/aes/rtl/{module}.sv", "lines_added": added, "lines_removed": removed,
                       "before_content": "\n".join(before) + "\n", "after_content": "\n".join(after) + "\n",
                       "generated_flag": False}],
            "excluded": False,
            "reason": None,
        })
        ann_rows.append([n, "functional", "", "yes", notes[k % len(notes)]])

    for _ in range(N_OPEN):
        n = next(idx)
        issue(n, created_in(2022), None, rng.randint(0, 3), 0, [], state="open")

    # Three functional bugs left unannotated, one row for an unknown issue,
    # one exact duplicate row.
    functional_rows = [r for r in ann_rows if r[1] == "functional" and r[3] == "" and any(b["number"] == r[0] for b in bugs)]
    for r in functional_rows[:3]:
        ann_rows.remove(r)
    ann_rows.append([99999, "functional", "", "", "issue not in cache"])
    ann_rows.append(list(ann_rows[0]))
    rng.shuffle(ann_rows)

    issues.sort(key=lambda i: i["number"])
    fixes.sort(key=lambda f: f["bug_id"])
    pulls.sort(key=lambda p: p["number"])
    return issues, pulls, fixes, ann_rows


def write(issues, pulls, fixes, ann_rows):
    CACHE.mkdir(parents=True, exist_ok=True)
    for name, records in (("issues.jsonl", issues), ("pulls.jsonl", pulls), ("fixes.jsonl", fixes)):
        with open(CACHE / name, "w", newline="\n") as f:
            for r in records:
                f.write(json.dumps(r, separators=(",", ":")) + "\n")
    with open(HERE / "ann.csv", "w", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(["issue", "class", "impacts", "excluded", "note"])
        w.writerows(ann_rows)
    with open(HERE / "ip_categories.json", "w") as f:
        json.dump(IP_CATEGORIES, f, indent=2)
        f.write("\n")


# ---------------------------------------------------------------- oracle

def pct(num, den):
    """Percent to one decimal, ties to even, from exact fractions."""
    q = round(Fraction(100 * num, den), 1)
    return f"{float(q):.1f}"


def fixed(num, den, decimals):
    q = round(Fraction(num, den), decimals)
    return f"{float(q):.{decimals}f}"


LINE_KINDS = [
    ("m", re.compile(r"^\s*module\b")),
    ("a_ff", re.compile(r"\balways_ff\b")),
    ("a_c", re.compile(r"\balways_comb\b")),
    ("gen", re.compile(r"^\s*if \(1\) begin :")),
    ("co", re.compile(r"^\s*if\s*\(")),
    ("ca", re.compile(r"\bcase\s*\(")),
    ("t", re.compile(r"\?")),
    ("i", re.compile(r"^\s*\w+\s+u_\w+\s*\(")),
]
PROC_ASSIGN = re.compile(r"\b\w+\s*=\s*[^=]")


def line_kinds(line):
    if line.lstrip().startswith("//"):
        return []
    kinds = []
    for kind, rx in LINE_KINDS:
        if rx.search(line) and not (kind == "co" and "begin :" in line):
            kinds.append(kind)
    if PROC_ASSIGN.search(line) and not line.lstrip().startswith("assign") and "i" not in kinds:
        kinds.append("as")
    return kinds


def touched(fix):
    """Categories whose line-level count changed in any file of the fix."""
    out = set()
    for f in fix["files"]:
        before = (f["before_content"] or "").splitlines()
        after = (f["after_content"] or "").splitlines()
        net = {}
        for tag, i1, i2, j1, j2 in difflib.SequenceMatcher(None, before, after, autojunk=False).get_opcodes():
            for line in before[i1:i2] if tag in ("replace", "delete") else []:
                for k in line_kinds(line):
                    net[k] = net.get(k, 0) - 1
            for line in after[j1:j2] if tag in ("replace", "insert") else []:
                for k in line_kinds(line):
                    net[k] = net.get(k, 0) + 1
        out |= {k for k, v in net.items() if v}
    return out


def category_of(path):
    parts = path.split("/")
    scope = path
    for i in range(len(parts) - 2):
        if parts[i] == "hw" and (parts[i + 1] == "ip" or parts[i + 1].startswith("top_")):
            j = i + 2 if parts[i + 1] == "ip" else i + 3
            if parts[i + 1].startswith("top_") and parts[i + 2] != "ip":
                continue
            scope = parts[j]
            break
    best = None
    for cat, ips in IP_CATEGORIES.items():
        for ip in ips:
            if re.search(r"(^|[/_.\-])" + re.escape(ip) + r"($|[/_.\-])", scope):
                if best is None or len(ip) > len(best[1]):
                    best = (cat, ip)
    return best[0] if best else "Other"


def oracle():
    issues = [json.loads(l) for l in open(CACHE / "issues.jsonl")]
    pulls = {p["number"]: p for p in map(json.loads, open(CACHE / "pulls.jsonl"))}
    fixes = {f["bug_id"]: f for f in map(json.loads, open(CACHE / "fixes.jsonl"))}
    ann = {}
    for row in csv.DictReader(open(HERE / "ann.csv")):
        ann[int(row["issue"])] = row

    closed = [i for i in issues if i["state"] == "closed"]
    rows = []
    no_fix = by_annotation = 0
    for i in sorted(closed, key=lambda i: i["number"]):
        fix = fixes.get(i["number"])
        if fix is None or fix["excluded"]:
            no_fix += 1
            continue
        a = ann.get(i["number"], {"class": "functional", "impacts": "", "excluded": ""})
        if a["excluded"].strip().lower() in ("yes", "true", "1", "y", "x"):
            by_annotation += 1
            continue
        created = datetime.strptime(i["created_at"], "%Y-%m-%dT%H:%M:%SZ")
        done = datetime.strptime(i["closed_at"], "%Y-%m-%dT%H:%M:%SZ")
        msgs = i["comment_count"]
        if fix["source"]["kind"] == "pull_requests":
            msgs += sum(pulls[p]["message_count"] for p in fix["source"]["ids"])
        rows.append({
            "issue": i["number"],
            "class": a["class"] or "functional",
            "impacts": a["impacts"],
            "year": created.year,
            "ms": int((done - created).total_seconds()) * 1000,
            "messages": msgs,
            "files": len(fix["files"]),
            "footprint": sum(f["lines_added"] + f["lines_removed"] for f in fix["files"]),
            "locations": sorted({category_of(f["path"]) for f in fix["files"]}),
            "touched": touched(fix),
        })

    cells = {}

    def put(entry, row, col, value):
        cells.setdefault(entry, {}).setdefault(row, {})[col] = str(value)

    classes = ["functional", "security"]
    sec = [r for r in rows if r["class"] == "security"]
    put("dataset_summary", "issues_considered", "count", len(closed))
    put("dataset_summary", "excluded_no_fix", "count", no_fix)
    put("dataset_summary", "excluded_by_annotation", "count", by_annotation)
    put("dataset_summary", "retained", "count", len(rows))
    put("dataset_summary", "security", "count", len(sec))
    put("dataset_summary", "functional", "count", len(rows) - len(sec))

    put("security_share", "overall", "share_num", len(sec))
    put("security_share", "overall", "share_den", len(rows))
    put("security_share", "overall", "share_pct", pct(len(sec), len(rows)))
    for year in sorted({r["year"] for r in rows}):
        ys = [r for r in rows if r["year"] == year]
        s = sum(r["class"] == "security" for r in ys)
        put("security_share", str(year), "share_pct", pct(s, len(ys)))
        put("security_share", str(year), "bugs", len(ys))

    names = {"C": "confidentiality", "I": "integrity", "A": "availability"}
    for letter, name in names.items():
        n = sum(letter in r["impacts"] for r in sec)
        put("impact_counts", name, "bugs", n)
        put("impact_counts", name, "share_of_security_pct", pct(n, len(sec)))
        placements = [loc for r in sec if letter in r["impacts"] for loc in r["locations"]]
        crypto = sum(loc == "Cryptography" for loc in placements)
        put("impact_location_matrix", name, "Cryptography", crypto)
        put("impact_location_matrix", name, "row_sum", len(placements))
        put("impact_location_matrix", name, "impact_total", n)
        put("impact_location_matrix", name, "Cryptography_pct", pct(crypto, len(placements)))

    over_all = sum(r["messages"] > 10 for r in rows)
    for cls in classes:
        g = [r for r in rows if r["class"] == cls]
        over = sum(r["messages"] > 10 for r in g)
        put("message_stats", cls, "bugs", len(g))
        put("message_stats", cls, "mean", fixed(sum(r["messages"] for r in g), len(g), 2))
        put("message_stats", cls, "over_10", over)
        put("message_stats", cls, "over_10_share_pct", pct(over, over_all))
        put("days_to_close_stats", cls, "mean", fixed(sum(r["ms"] for r in g), len(g) * DAY, 1))
    put("message_stats", "all", "over_10", over_all)

    size = [r for r in rows if 0 < r["files"] <= MAX_FILES]
    outliers = [r for r in rows if r["files"] > MAX_FILES]
    put("dataset_summary", "fix_outliers_excluded", "count", len(outliers))
    put("dataset_summary", "fixes_without_design_files", "count", sum(r["files"] == 0 for r in rows))
    put("dataset_summary", "fixes_in_size_analysis", "count", len(size))
    for cls in ["all"] + classes:
        g = size if cls == "all" else [r for r in size if r["class"] == cls]
        single = sum(r["files"] == 1 for r in g)
        put("files_changed_stats", cls, "fixes", len(g))
        put("files_changed_stats", cls, "mean", fixed(sum(r["files"] for r in g), len(g), 2))
        put("files_changed_stats", cls, "single_file_num", single)
        put("files_changed_stats", cls, "single_file_pct", pct(single, len(g)))
        for limit in (10, 30):
            k = sum(r["footprint"] <= limit for r in g)
            put("footprint_stats", cls, f"at_most_{limit}_num", k)
            put("footprint_stats", cls, f"at_most_{limit}_den", len(g))
            put("footprint_stats", cls, f"at_most_{limit}_pct", pct(k, len(g)))

    for cat, _ in CATEGORY_TARGETS:
        for cls in ["all"] + classes:
            g = size if cls == "all" else [r for r in size if r["class"] == cls]
            k = sum(cat in r["touched"] for r in g)
            put("node_involvement", cat, f"{cls}_num", k)
            put("node_involvement", cat, f"{cls}_pct", pct(k, len(g)))

    summary = {
        "outlier_files": [r["files"] for r in outliers],
        "boundary_bugs_at_10_days": sum(r["ms"] == 10 * DAY for r in rows),
    }
    return {"cells": cells, "facts": summary}


def main():
    rng = random.Random(SEED)
    bugs = plan(rng)
    issues, pulls, fixes, ann_rows = build(rng, bugs)
    write(issues, pulls, fixes, ann_rows)
    expected = oracle()
    with open(HERE / "expected.json", "w") as f:
        json.dump(expected, f, indent=2, sort_keys=True)
        f.write("\n")
    c = expected["cells"]
    print("security share", c["security_share"]["overall"]["share_pct"],
          "yearly", [c["security_share"][y]["share_pct"] for y in ("2019", "2020", "2021", "2022")])
    print("single-file", c["files_changed_stats"]["all"]["single_file_pct"],
          "<=10", c["footprint_stats"]["all"]["at_most_10_pct"], "<=30", c["footprint_stats"]["all"]["at_most_30_pct"])


if __name__ == "__main__":
    main()
