"""Decomposition prompt construction, tag parsing, and the cache."""

from __future__ import annotations

import json
import threading
from http.server import BaseHTTPRequestHandler, HTTPServer

import pytest

from joinrank.decompose import (ICL_EXAMPLES, DecompositionCache, DecompositionClient,
                                QueryDecomposition, SubQuery, build_decomposition_prompt,
                                decompose_query, escape_field, manual_decomposition,
                                parse_decomposition, render_tags, unescape_field)
from joinrank.errors import MissingDecompositionError

# Frozen copy of the prompt up to the new-question slot; the builder must
# reproduce it byte for byte.
FROZEN_PREFIX = (
    "I'm going to ask you a question. I want you to decompose it into a series of "
    "non-composite noun concepts and attributes. If you are uncertain about concepts, "
    "only output attributes. You should wrap each concept and attribute in "
    "<sub_c></sub_c> tags. Once you have all the concepts you need to cover the "
    "question, output <FIN></FIN> tags.\n"
    "Let's go through some examples together.\n"
    'Question: For movies with the keyword of "civil war", calculate the average '
    "revenue generated by these movies.\n"
    "\n"
    "Answer:\n"
    "<sub_c>movies:keyword</sub_c>\n"
    "<sub_c>movies:revenue</sub_c>\n"
    "<FIN></FIN>\n"
    "\n"
    "Question: How many customers have a credit limit of not more than 100,000 and "
    "which customer made the highest total payment amount for the year 2004?\n"
    "\n"
    "Answer:\n"
    "<sub_c>customers:credit limit</sub_c>\n"
    "<sub_c>customers:payment amount</sub_c>\n"
    "<sub_c>year</sub_c>\n"
    "<FIN></FIN>\n"
    "\n"
    "Question: What is the aircraft name for the flight with number 99?\n"
    "\n"
    "Answer:\n"
    "<sub_c>aircraft:name</sub_c>\n"
    "<sub_c>flight:number</sub_c>\n"
    "<FIN></FIN>\n"
    "\n"
    "Question: On which day has it neither been foggy nor rained in the zip code "
    "of 94107?\n"
    "\n"
    "Answer:\n"
    "<sub_c>zip code</sub_c>\n"
    "<sub_c>weather</sub_c>\n"
    "<FIN></FIN>\n"
    "\n"
    "Question: What is the id of the trip that started from the station with the "
    "highest dock count?\n"
    "\n"
    "Answer:\n"
    "<sub_c>trip:id</sub_c>\n"
    "<sub_c>station:dock count</sub_c>\n"
    "<FIN></FIN>\n"
    "\n"
)

EXPECTED_PARSES = [
    [("movies", "keyword"), ("movies", "revenue")],
    [("customers", "credit limit"), ("customers", "payment amount"), (None, "year")],
    [("aircraft", "name"), ("flight", "number")],
    [(None, "zip code"), (None, "weather")],
    [("trip", "id"), ("station", "dock count")],
]


def test_prompt_matches_frozen_structure():
    client = DecompositionClient(kind="cache-only")
    prompt = build_decomposition_prompt(client, "Q?")
    assert prompt == FROZEN_PREFIX + "Question: Q?\n\nAnswer:"


def test_prompt_ends_with_question_slot_and_is_deterministic():
    client = DecompositionClient(kind="cache-only")
    prompt = build_decomposition_prompt(client, "Q?")
    assert prompt.endswith("Question: Q?\n\nAnswer:")
    assert prompt == build_decomposition_prompt(client, "Q?")
    # five worked answers before the final slot
    assert prompt.count("Answer:") == 6
    # five worked end markers plus the one mentioned by the instruction text
    assert prompt.count("<FIN></FIN>") == 6


def test_parse_reproduces_every_worked_example():
    for (question, tags), expected in zip(ICL_EXAMPLES, EXPECTED_PARSES):
        parsed = parse_decomposition(render_tags(tags), question)
        assert [(sq.concept, sq.attribute) for sq in parsed.sub_queries] == expected


def test_parse_running_example():
    response = "<sub_c>trip:id</sub_c>\n<sub_c>station:dock count</sub_c>\n<FIN></FIN>"
    parsed = parse_decomposition(response, "q")
    assert [(sq.concept, sq.attribute) for sq in parsed.sub_queries] == \
        [("trip", "id"), ("station", "dock count")]
    assert parsed.sub_queries[0].text == "trip id"


def test_parse_ignores_tags_after_end_marker():
    response = ("<sub_c>year</sub_c>\n<FIN></FIN>\n<sub_c>ignored:tag</sub_c>")
    parsed = parse_decomposition(response, "q")
    assert [sq.attribute for sq in parsed.sub_queries] == ["year"]


def test_parse_attribute_with_colon_splits_once():
    parsed = parse_decomposition("<sub_c>time:hh:mm</sub_c><FIN></FIN>", "q")
    assert parsed.sub_queries[0].concept == "time"
    assert parsed.sub_queries[0].attribute == "hh:mm"


def test_parse_fallback_on_zero_tags():
    with pytest.warns(UserWarning):
        parsed = parse_decomposition("no tags here", "Who owns loans?")
    assert len(parsed.sub_queries) == 1
    assert parsed.sub_queries[0].attribute == "Who owns loans?"
    assert parsed.sub_queries[0].concept is None


def test_decomposition_never_empty():
    with pytest.raises(ValueError):
        QueryDecomposition(query_text="q", sub_queries=())
    assert len(manual_decomposition("q").sub_queries) == 1


def test_escape_roundtrip():
    tricky = "a\tb\nc\\d\re"
    assert unescape_field(escape_field(tricky)) == tricky


def test_cache_roundtrip(tmp_path):
    cache = DecompositionCache(tmp_path / "cache.tsv")
    original = parse_decomposition(
        render_tags(("trip:id", "station:dock count")),
        "What is the id of the trip?")
    cache.put(original.query_text, original.tag_string())

    reloaded = DecompositionCache(tmp_path / "cache.tsv")
    hit = reloaded.get(original.query_text)
    assert hit is not None
    assert hit.source == "cache"
    assert hit.same_content(original)


def test_cache_only_miss_raises(tmp_path):
    client = DecompositionClient(kind="cache-only")
    cache = DecompositionCache(tmp_path / "cache.tsv")
    with pytest.raises(MissingDecompositionError) as excinfo:
        decompose_query(client, cache, "novel question?")
    assert "novel question?" in str(excinfo.value)


def test_cache_hit_avoids_network(tmp_path):
    cache = DecompositionCache(tmp_path / "cache.tsv")
    cache.put("known?", render_tags(("topic:detail",)))
    client = DecompositionClient(kind="cache-only")
    result = decompose_query(client, cache, "known?")
    assert result.source == "cache"
    assert result.sub_queries[0].attribute == "detail"


class _LlmHandler(BaseHTTPRequestHandler):
    def do_POST(self):
        body = json.loads(self.rfile.read(int(self.headers["Content-Length"])))
        assert body["temperature"] == 0.0
        text = "<sub_c>trip:id</sub_c>\n<sub_c>station:dock count</sub_c>\n<FIN></FIN>"
        payload = json.dumps({"text": text}).encode()
        self.send_response(200)
        self.send_header("Content-Length", str(len(payload)))
        self.end_headers()
        self.wfile.write(payload)

    def log_message(self, *args):
        pass


def test_remote_decomposition_and_cache_write(tmp_path):
    server = HTTPServer(("127.0.0.1", 0), _LlmHandler)
    threading.Thread(target=server.serve_forever, daemon=True).start()
    try:
        client = DecompositionClient(kind="remote-llm",
                                     base_url=f"http://127.0.0.1:{server.server_port}")
        cache = DecompositionCache(tmp_path / "cache.tsv")
        query = "What is the id of the trip that started from the station " \
                "with the highest dock count?"
        result = decompose_query(client, cache, query)
        assert result.source == "llm"
        assert [(sq.concept, sq.attribute) for sq in result.sub_queries] == \
            [("trip", "id"), ("station", "dock count")]
        # second call is served from the cache
        second = decompose_query(DecompositionClient(kind="cache-only"), cache, query)
        assert second.source == "cache"
        assert second.same_content(result)
    finally:
        server.shutdown()
