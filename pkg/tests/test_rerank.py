import json
import threading
from http.server import BaseHTTPRequestHandler, HTTPServer

import pytest

from groundsum.corpus import Passage
from groundsum.grounding import CandidatePool, Provenance
from groundsum.rerank import (RemoteScorerError, ScoredCandidate, ScorerSpec, pool_idf,
                              rank_pool, score_lexical)


def make_pool(texts, source="c"):
    pool = CandidatePool("doc")
    for i, t in enumerate(texts, start=1):
        pool.add(Passage(f"p{i}", source, "", t), Provenance(source=source))
    return pool


class TestScoreLexical:
    def test_identical_texts(self):
        idf = {"a": 1.0, "b": 2.0}
        assert score_lexical("a b b", "a b b", idf) == pytest.approx(1.0)

    def test_disjoint(self):
        idf = {"a": 1.0, "b": 1.0, "c": 1.0, "d": 1.0}
        assert score_lexical("a b", "c d", idf) == 0.0

    def test_hand_cosine(self):
        idf = {"a": 1.0, "b": 1.0, "c": 1.0}
        assert score_lexical("a b", "a c", idf) == pytest.approx(0.5)

    def test_empty_sides(self):
        assert score_lexical("", "a", {"a": 1.0}) == 0.0
        assert score_lexical("a", "", {"a": 1.0}) == 0.0

    def test_out_of_vocabulary_query(self):
        assert score_lexical("zzz", "a b", {"a": 1.0, "b": 1.0}) == 0.0

    def test_bounded(self):
        idf = {"a": 3.0, "b": 0.5, "c": 1.7}
        s = score_lexical("a a b", "a b c c", idf)
        assert 0.0 <= s <= 1.0


class TestRankPoolLexical:
    def test_singleton(self):
        pool = make_pool(["only text"])
        ranked = rank_pool(pool, "only text", ScorerSpec())
        assert [sc.passage.passage_id for sc in ranked] == ["p1"]

    def test_tie_broken_by_id(self):
        pool = make_pool(["same words here", "same words here"])
        # identical texts score identically; p1 < p2
        ranked = rank_pool(pool, "same words", ScorerSpec())
        assert [sc.passage.passage_id for sc in ranked] == ["p1", "p2"]

    def test_matches_brute_force_order(self):
        pool = make_pool(["alpha beta gamma", "alpha noise words", "unrelated text here"])
        query = "alpha beta gamma"
        idf = pool_idf(pool)
        scores = {c.passage_id: score_lexical(query, c.text, idf) for c in pool.candidates}
        expected = sorted(scores, key=lambda pid: (-scores[pid], pid))
        ranked = rank_pool(pool, query, ScorerSpec())
        assert [sc.passage.passage_id for sc in ranked] == expected

    def test_permutation_of_pool(self):
        pool = make_pool(["one two", "three four", "five six", "seven eight"])
        ranked = rank_pool(pool, "three four five", ScorerSpec())
        assert sorted(sc.passage.passage_id for sc in ranked) == ["p1", "p2", "p3", "p4"]

    def test_query_repetition_keeps_order(self):
        pool = make_pool(["alpha beta", "beta gamma delta", "gamma alpha epsilon"])
        query = "alpha beta gamma"
        once = [sc.passage.passage_id for sc in rank_pool(pool, query, ScorerSpec())]
        twice = [sc.passage.passage_id for sc in rank_pool(pool, query + " " + query, ScorerSpec())]
        assert once == twice

    def test_deterministic(self):
        pool = make_pool(["alpha beta", "beta gamma", "gamma alpha"])
        r1 = rank_pool(pool, "alpha gamma", ScorerSpec())
        r2 = rank_pool(pool, "alpha gamma", ScorerSpec())
        assert r1 == r2


class TestScorerSpec:
    def test_remote_requires_endpoint(self):
        with pytest.raises(ValueError):
            ScorerSpec(kind="remote")

    def test_unknown_kind(self):
        with pytest.raises(ValueError):
            ScorerSpec(kind="neural")


class _ScorerHandler(BaseHTTPRequestHandler):
    behavior = "ok"

    def do_POST(self):
        body = json.loads(self.rfile.read(int(self.headers["Content-Length"])))
        if self.behavior == "ok":
            scores = [{"id": c["id"], "score": float(len(c["text"]))}
                      for c in body["candidates"]]
        elif self.behavior == "missing-id":
            scores = [{"id": c["id"], "score": 1.0} for c in body["candidates"][:-1]]
        elif self.behavior == "nan":
            scores = [{"id": c["id"], "score": float("nan")} for c in body["candidates"]]
        self.send_response(200)
        self.send_header("Content-Type", "application/json")
        self.end_headers()
        self.wfile.write(json.dumps({"scores": scores}).encode())

    def log_message(self, *args):
        pass


@pytest.fixture
def scorer_server():
    server = HTTPServer(("127.0.0.1", 0), _ScorerHandler)
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    yield f"http://127.0.0.1:{server.server_port}"
    server.shutdown()


class TestRankPoolRemote:
    def test_remote_scores_used(self, scorer_server):
        _ScorerHandler.behavior = "ok"
        pool = make_pool(["short", "a much longer passage text"])
        ranked = rank_pool(pool, "query", ScorerSpec(kind="remote", endpoint=scorer_server))
        assert [sc.passage.passage_id for sc in ranked] == ["p2", "p1"]

    def test_non_permutation_rejected(self, scorer_server):
        _ScorerHandler.behavior = "missing-id"
        pool = make_pool(["one", "two"])
        with pytest.raises(RemoteScorerError, match="expected"):
            rank_pool(pool, "query", ScorerSpec(kind="remote", endpoint=scorer_server))

    def test_non_finite_rejected(self, scorer_server):
        _ScorerHandler.behavior = "nan"
        pool = make_pool(["one"])
        with pytest.raises(RemoteScorerError, match="non-finite"):
            rank_pool(pool, "query", ScorerSpec(kind="remote", endpoint=scorer_server))

    def test_unreachable_endpoint(self):
        pool = make_pool(["one"])
        spec = ScorerSpec(kind="remote", endpoint="http://127.0.0.1:1")
        with pytest.raises(RemoteScorerError, match="failed"):
            rank_pool(pool, "query", spec)
