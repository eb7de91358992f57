"""Query decomposition into concept/attribute sub-queries via a pluggable LLM client."""

from __future__ import annotations

import os
import re
import threading
import time
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import requests

from .errors import MissingDecompositionError, ParseError, TransportError

LLM_URL_ENV = "JOINRANK_LLM_URL"
LLM_TOKEN_ENV = "JOINRANK_LLM_TOKEN"

PROMPT_INSTRUCTION = (
    "I'm going to ask you a question. I want you to decompose it into a series of "
    "non-composite noun concepts and attributes. If you are uncertain about concepts, "
    "only output attributes. You should wrap each concept and attribute in "
    "<sub_c></sub_c> tags. Once you have all the concepts you need to cover the "
    "question, output <FIN></FIN> tags."
)

# The five worked examples shown to the model, in fixed order.
ICL_EXAMPLES: tuple[tuple[str, tuple[str, ...]], ...] = (
    (
        'For movies with the keyword of "civil war", calculate the average revenue '
        "generated by these movies.",
        ("movies:keyword", "movies:revenue"),
    ),
    (
        "How many customers have a credit limit of not more than 100,000 and which "
        "customer made the highest total payment amount for the year 2004?",
        ("customers:credit limit", "customers:payment amount", "year"),
    ),
    (
        "What is the aircraft name for the flight with number 99?",
        ("aircraft:name", "flight:number"),
    ),
    (
        "On which day has it neither been foggy nor rained in the zip code of 94107?",
        ("zip code", "weather"),
    ),
    (
        "What is the id of the trip that started from the station with the highest "
        "dock count?",
        ("trip:id", "station:dock count"),
    ),
)

_TAG_PATTERN = re.compile(r"<sub_c>(.*?)</sub_c>", re.DOTALL)
_FIN_MARK = "<FIN></FIN>"


def render_tags(tags: tuple[str, ...]) -> str:
    return "\n".join(f"<sub_c>{t}</sub_c>" for t in tags) + f"\n{_FIN_MARK}"


def _build_prompt_prefix() -> str:
    blocks = [PROMPT_INSTRUCTION, "Let's go through some examples together."]
    for question, tags in ICL_EXAMPLES:
        blocks.append(f"Question: {question}\n\nAnswer:\n{render_tags(tags)}")
    return "\n".join(blocks[:2]) + "\n" + "\n\n".join(blocks[2:]) + "\n\n"


PROMPT_PREFIX = _build_prompt_prefix()


@dataclass(frozen=True)
class SubQuery:
    """One information need: optional concept plus attribute."""

    concept: str | None
    attribute: str
    raw: str

    @property
    def text(self) -> str:
        return f"{self.concept} {self.attribute}" if self.concept else self.attribute


@dataclass(frozen=True)
class QueryDecomposition:
    query_text: str
    sub_queries: tuple[SubQuery, ...]
    source: str = "llm"  # llm | cache | manual

    def __post_init__(self) -> None:
        if not self.sub_queries:
            raise ValueError("a decomposition must have at least one sub-query")

    def tag_string(self) -> str:
        return render_tags(tuple(sq.raw for sq in self.sub_queries))

    def same_content(self, other: "QueryDecomposition") -> bool:
        return (self.query_text == other.query_text
                and self.sub_queries == other.sub_queries)


@dataclass
class DecompositionClient:
    """LLM access for decomposition; cache-only refuses to go to the network."""

    kind: str = "remote-llm"  # remote-llm | cache-only
    model: str = "gpt-3.5-turbo"
    temperature: float = 0.0
    base_url: str = ""
    token_env: str = LLM_TOKEN_ENV
    max_retries: int = 3
    timeout: float = 60.0

    @property
    def prompt_prefix(self) -> str:
        return PROMPT_PREFIX

    def complete(self, prompt: str) -> str:
        if self.kind != "remote-llm":
            raise MissingDecompositionError(prompt.rsplit("Question: ", 1)[-1])
        url = self.base_url or os.environ.get(LLM_URL_ENV, "")
        if not url:
            raise ValueError(f"remote-llm client needs a base URL (or {LLM_URL_ENV})")
        token = os.environ.get(self.token_env, "")
        headers = {"Authorization": f"Bearer {token}"} if token else {}
        payload = {"model": self.model, "temperature": self.temperature, "prompt": prompt}
        attempts = 0
        last_error = "no attempt made"
        while attempts < self.max_retries:
            attempts += 1
            try:
                response = requests.post(url, json=payload, headers=headers,
                                         timeout=self.timeout)
                if response.status_code != 200:
                    last_error = f"HTTP {response.status_code}"
                else:
                    return str(response.json()["text"])
            except (requests.RequestException, KeyError, ValueError) as exc:
                last_error = str(exc) or type(exc).__name__
            time.sleep(0.05 * attempts)
        raise TransportError(f"decomposition service failed: {last_error}", attempts)


def build_decomposition_prompt(client: DecompositionClient, query: str) -> str:
    """Instruction, the five worked examples, then the new question slot."""
    if not query.strip():
        raise ValueError("query must be non-empty")
    return client.prompt_prefix + f"Question: {query}\n\nAnswer:"


def parse_decomposition(response: str, query_text: str = "") -> QueryDecomposition:
    """Extract sub-query tags occurring before the first end marker.

    Spans split on their first colon into concept and attribute; spans without a
    colon are attribute-only. Zero parsed tags falls back to one sub-query holding
    the full query text.
    """
    head = response.split(_FIN_MARK, 1)[0]
    sub_queries = []
    for span in _TAG_PATTERN.findall(head):
        span = span.strip()
        if not span:
            continue
        concept, sep, attribute = span.partition(":")
        if sep:
            concept, attribute = concept.strip(), attribute.strip()
        else:
            concept, attribute = "", span
        if not attribute:
            continue
        sub_queries.append(SubQuery(concept=concept or None, attribute=attribute, raw=span))
    if not sub_queries:
        warnings.warn("no sub-query tags parsed; falling back to the full query")
        if not query_text.strip():
            raise ParseError("response has no sub-query tags and no query text was given")
        sub_queries = [SubQuery(concept=None, attribute=query_text, raw=query_text)]
    return QueryDecomposition(query_text=query_text, sub_queries=tuple(sub_queries))


def manual_decomposition(query_text: str) -> QueryDecomposition:
    """Single sub-query equal to the full query; used when no client is configured."""
    return QueryDecomposition(
        query_text=query_text,
        sub_queries=(SubQuery(concept=None, attribute=query_text, raw=query_text),),
        source="manual",
    )


_ESCAPES = [("\\", "\\\\"), ("\t", "\\t"), ("\n", "\\n"), ("\r", "\\r")]


def escape_field(text: str) -> str:
    for raw, escaped in _ESCAPES:
        text = text.replace(raw, escaped)
    return text


def unescape_field(text: str) -> str:
    out = []
    i = 0
    while i < len(text):
        if text[i] == "\\" and i + 1 < len(text):
            nxt = text[i + 1]
            out.append({"\\": "\\", "t": "\t", "n": "\n", "r": "\r"}.get(nxt, "\\" + nxt))
            i += 2
        else:
            out.append(text[i])
            i += 1
    return "".join(out)


class DecompositionCache:
    """File-backed query -> raw tag string cache; one tab-separated record per line."""

    def __init__(self, path):
        self.path = Path(path)
        self._lock = threading.Lock()
        self._entries: dict[str, str] = {}
        if self.path.exists():
            for lineno, line in enumerate(
                    self.path.read_text(encoding="utf-8").splitlines(), start=1):
                if not line.strip():
                    continue
                query, sep, tags = line.partition("\t")
                if not sep:
                    raise ParseError("expected 'query<TAB>tags'",
                                     source=str(self.path), line=lineno)
                self._entries[unescape_field(query)] = unescape_field(tags)

    def __contains__(self, query: str) -> bool:
        return query in self._entries

    def get(self, query: str) -> QueryDecomposition | None:
        raw = self._entries.get(query)
        if raw is None:
            return None
        parsed = parse_decomposition(raw, query)
        return QueryDecomposition(parsed.query_text, parsed.sub_queries, source="cache")

    def put(self, query: str, raw_tags: str) -> None:
        with self._lock:
            self._entries[query] = raw_tags
            self.path.parent.mkdir(parents=True, exist_ok=True)
            with self.path.open("a", encoding="utf-8") as handle:
                handle.write(f"{escape_field(query)}\t{escape_field(raw_tags)}\n")


def decompose_query(client: DecompositionClient, cache, query: str) -> QueryDecomposition:
    """Resolve a decomposition through the cache first, then the client."""
    if cache is not None and not isinstance(cache, DecompositionCache):
        cache = DecompositionCache(cache)
    if cache is not None:
        hit = cache.get(query)
        if hit is not None:
            return hit
    if client.kind == "cache-only":
        raise MissingDecompositionError(query)
    prompt = build_decomposition_prompt(client, query)
    response = client.complete(prompt)
    decomposition = parse_decomposition(response, query)
    if cache is not None:
        cache.put(query, decomposition.tag_string())
    return decomposition
