#!/usr/bin/env python3
"""Generates the bundled mini-dump fixture under fixtures/minidump/.

Two synthetic stackexchange-style domains with a known generating rule:
each question post carries a topic marker token; its genuine clarification
question carries the matching detail marker plus a post-unique value token
that also appears in the gold answer. Noise comments carry no marker.

The script also emits:
  expected_counts.json  -- ground-truth ingestion counts per domain
  test_set.csv          -- annotated (p, q) pairs labeled by the rule
  minidump_config.json  -- a ready-to-run pipeline config (repo-root relative)

Output is fully determined by SEED; re-running must be byte-identical.
"""

import csv
import json
import os
import random
import zlib

SEED = 20240613
N_TYPES = 6
FILLER = [
    "the", "a", "my", "setup", "config", "issue", "problem", "with", "when",
    "running", "trying", "getting", "error", "works", "fails", "after",
    "before", "install", "update", "help", "need", "broken", "slow", "new",
]
NOISE_QUESTIONS = [
    "is this still relevant ?",
    "did you ever solve this ?",
    "can you try rebooting first ?",
    "have you searched existing threads ?",
]
NOISE_STATEMENTS = [
    "thanks, great post.",
    "same here.",
    "this helped me a lot.",
    "see the linked answer above.",
]

DOMAINS = {"gadgets": 120, "recipes": 100}


def xml_escape(s):
    return (
        s.replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;").replace('"', "&quot;")
    )


def stamp(i):
    return "2019-01-%02dT%02d:%02d:%02d" % (
        1 + (i // 86400) % 28, (i // 3600) % 24, (i // 60) % 60, i % 60,
    )


def words(rng, n):
    return " ".join(rng.choice(FILLER) for _ in range(n))


def main():
    rng = random.Random(SEED)
    root = os.path.join(os.path.dirname(__file__), "..", "fixtures", "minidump")
    os.makedirs(root, exist_ok=True)
    counts = {}
    annotated = []

    for domain, n_posts in sorted(DOMAINS.items()):
        rng_d = random.Random(SEED ^ zlib.crc32(domain.encode()))
        post_rows, comment_rows = [], []
        next_id, comment_id, tick = 1, 1, 0
        domain_counts = {
            "questions": 0, "answered_posts": 0, "attached_comments": 0,
            "orphan_comments": 0, "answer_post_comments": 0,
        }

        for p in range(n_posts):
            qid = next_id
            next_id += 1
            t = rng_d.randrange(N_TYPES)
            tick += rng_d.randrange(50, 200)
            title = "trouble with topic%d %s" % (t, words(rng_d, 3))
            body = "%s topic%d %s" % (words(rng_d, 4), t, words(rng_d, 6))
            answered = rng_d.random() < 0.85
            post_rows.append(
                '  <row Id="%d" PostTypeId="1" CreationDate="%s" Title="%s" Body="%s" />'
                % (qid, stamp(tick), xml_escape(title), xml_escape("<p>" + body + "</p>"))
            )
            domain_counts["questions"] += 1

            answer_ids = []
            if answered:
                domain_counts["answered_posts"] += 1
                for _ in range(rng_d.randrange(1, 3)):
                    aid = next_id
                    next_id += 1
                    answer_ids.append(aid)
                    tick += rng_d.randrange(10, 60)
                    abody = "use value%d_%d with topic%d . %s" % (t, qid, t, words(rng_d, 5))
                    post_rows.append(
                        '  <row Id="%d" PostTypeId="2" ParentId="%d" CreationDate="%s" Body="%s" />'
                        % (aid, qid, stamp(tick), xml_escape("<p>" + abody + "</p>"))
                    )

            # earlier comments: noise statements or noise questions
            n_pre = rng_d.randrange(0, 3)
            for _ in range(n_pre):
                tick += rng_d.randrange(5, 40)
                text = rng_d.choice(NOISE_STATEMENTS + NOISE_QUESTIONS)
                comment_rows.append(
                    '  <row Id="%d" PostId="%d" Text="%s" CreationDate="%s" />'
                    % (comment_id, qid, xml_escape(text), stamp(tick))
                )
                comment_id += 1
                if answered:
                    domain_counts["attached_comments"] += 1
                    if "?" in text:
                        annotated.append((domain, qid, text, "negative"))

            # last comment: genuine clarification question 85% of the time
            tick += rng_d.randrange(5, 40)
            if rng_d.random() < 0.85:
                text = "about value%d_%d , what detail%d do you have ?" % (t, qid, t)
                gold = "positive"
            else:
                text = rng_d.choice(NOISE_QUESTIONS)
                gold = "negative"
            comment_rows.append(
                '  <row Id="%d" PostId="%d" Text="%s" CreationDate="%s" />'
                % (comment_id, qid, xml_escape(text), stamp(tick))
            )
            comment_id += 1
            if answered:
                domain_counts["attached_comments"] += 1
                annotated.append((domain, qid, text, gold))

            # occasionally a comment on an answer post (must be dropped)
            if answer_ids and rng_d.random() < 0.15:
                tick += rng_d.randrange(5, 40)
                comment_rows.append(
                    '  <row Id="%d" PostId="%d" Text="%s" CreationDate="%s" />'
                    % (comment_id, answer_ids[0],
                       xml_escape(rng_d.choice(NOISE_STATEMENTS)), stamp(tick))
                )
                comment_id += 1
                domain_counts["answer_post_comments"] += 1

        # one tag-wiki row (skipped by the parser) and two orphan comments
        post_rows.append(
            '  <row Id="%d" PostTypeId="4" CreationDate="%s" Body="tag wiki text" />'
            % (next_id, stamp(tick + 10))
        )
        for _ in range(2):
            tick += 7
            comment_rows.append(
                '  <row Id="%d" PostId="999999" Text="dangling reference ?" CreationDate="%s" />'
                % (comment_id, stamp(tick))
            )
            comment_id += 1
            domain_counts["orphan_comments"] += 1

        ddir = os.path.join(root, domain)
        os.makedirs(ddir, exist_ok=True)
        with open(os.path.join(ddir, "Posts.xml"), "w", newline="\n") as f:
            f.write('<?xml version="1.0" encoding="utf-8"?>\n<posts>\n')
            f.write("\n".join(post_rows))
            f.write("\n</posts>\n")
        with open(os.path.join(ddir, "Comments.xml"), "w", newline="\n") as f:
            f.write('<?xml version="1.0" encoding="utf-8"?>\n<comments>\n')
            f.write("\n".join(comment_rows))
            f.write("\n</comments>\n")
        counts[domain] = domain_counts

    with open(os.path.join(root, "expected_counts.json"), "w", newline="\n") as f:
        json.dump(counts, f, indent=2, sort_keys=True)
        f.write("\n")

    # annotated test slice: subsample to roughly 7:3 positives to negatives
    rng_t = random.Random(SEED + 1)
    positives = [a for a in annotated if a[3] == "positive"]
    negatives = [a for a in annotated if a[3] == "negative"]
    rng_t.shuffle(positives)
    rng_t.shuffle(negatives)
    n_pos = min(len(positives), 70)
    n_neg = min(len(negatives), 30)
    rows = sorted(positives[:n_pos] + negatives[:n_neg])
    with open(os.path.join(root, "test_set.csv"), "w", newline="") as f:
        writer = csv.writer(f, lineterminator="\r\n")
        writer.writerow(["domain", "post_id", "question_text", "gold_label"])
        for domain, qid, text, gold in rows:
            writer.writerow([domain, qid, text, gold])

    config = {
        "dump_dir": "fixtures/minidump",
        "work_dir": "minidump_work",
        "seed": 7,
        "test_set_csv": "fixtures/minidump/test_set.csv",
        "refine": {"n_iterations": 2, "keep_fraction": 0.4,
                   "negative_ratio": 1.0, "threshold": 0.5},
        "train": {"epochs": 50, "batch_size": 16, "learning_rate": 0.4,
                  "max_post_len": 40, "max_question_len": 20,
                  "embed_dim": 16, "hidden_dim": 24, "dense_dim": 16},
        "rerank": {"domains": ["gadgets", "recipes"],
                   "n_per_domain": 10, "pool_size": 50},
    }
    with open(os.path.join(root, "..", "minidump_config.json"), "w", newline="\n") as f:
        json.dump(config, f, indent=2, sort_keys=True)
        f.write("\n")


if __name__ == "__main__":
    main()
