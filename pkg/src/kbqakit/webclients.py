"""Live HTTP clients behind the provider contracts.

These hit real services, so every client takes an optional `ProviderCache`
(responses are content-addressed by request payload) and a shared `RateGate`.
Parsing is split into module-level functions so it stays testable offline.
"""

from __future__ import annotations

import logging
import re

import requests

from .cache import ProviderCache, RateGate
from .providers import ProviderError, SearchResult, WikiHit

logger = logging.getLogger(__name__)

_USER_AGENT = "kbqakit/0.1 (dataset construction toolkit)"
_TIMEOUT = 20.0


class _HttpBase:
    def __init__(self, cache: ProviderCache | None = None, gate: RateGate | None = None):
        self.cache = cache
        self.gate = gate or RateGate(0.0)
        self.session = requests.Session()
        self.session.headers["User-Agent"] = _USER_AGENT

    def _get_json(self, name: str, url: str, params: dict):
        payload = {"url": url, "params": params}

        def compute():
            self.gate.wait()
            try:
                response = self.session.get(url, params=params, timeout=_TIMEOUT)
                response.raise_for_status()
                return response.json()
            except requests.RequestException as exc:
                raise ProviderError(name, exc) from exc

        if self.cache is not None:
            return self.cache.fetch(name, payload, compute)
        return compute()


def parse_suggest_response(body) -> list[str]:
    """The two-element [query, [completion, ...]] shape used by suggestion endpoints."""
    if not isinstance(body, list) or len(body) < 2 or not isinstance(body[1], list):
        return []
    return [item for item in body[1] if isinstance(item, str)]


class HttpSuggestClient(_HttpBase):
    name = "http-suggest"

    def __init__(self, url: str, language: str = "pl", **kwargs):
        super().__init__(**kwargs)
        self.url = url
        self.language = language

    def suggest(self, prefix: str, limit: int) -> list[str]:
        body = self._get_json(self.name, self.url, {"q": prefix, "hl": self.language})
        return parse_suggest_response(body)[:limit]


def parse_mediawiki_search(body, base_url: str) -> list[SearchResult]:
    hits = body.get("query", {}).get("search", []) if isinstance(body, dict) else []
    results = []
    for rank, hit in enumerate(hits, start=1):
        title = hit.get("title")
        if title:
            slug = title.replace(" ", "_")
            results.append(SearchResult(title, f"{base_url}/wiki/{slug}", rank=rank))
    return results


class MediaWikiSearchClient(_HttpBase):
    """Full-text article search against a MediaWiki API endpoint."""

    name = "mediawiki-search"

    def __init__(self, api_url: str, site_url: str, limit: int = 10, **kwargs):
        super().__init__(**kwargs)
        self.api_url = api_url
        self.site_url = site_url.rstrip("/")
        self.limit = limit

    def search(self, question: str) -> list[SearchResult]:
        body = self._get_json(
            self.name,
            self.api_url,
            {"action": "query", "list": "search", "srsearch": question, "srlimit": self.limit, "format": "json"},
        )
        return parse_mediawiki_search(body, self.site_url)


def parse_wbsearch(body) -> list[WikiHit]:
    rows = body.get("search", []) if isinstance(body, dict) else []
    return [WikiHit(row.get("label", ""), row.get("id")) for row in rows if row.get("id")]


class WikidataSearchClient(_HttpBase):
    """Entity search by label against a Wikibase API endpoint."""

    name = "wikidata-search"

    def __init__(self, api_url: str = "https://www.wikidata.org/w/api.php", language: str = "pl", **kwargs):
        super().__init__(**kwargs)
        self.api_url = api_url
        self.language = language

    def search(self, query: str) -> list[WikiHit]:
        body = self._get_json(
            self.name,
            self.api_url,
            {
                "action": "wbsearchentities",
                "search": query,
                "language": self.language,
                "uselang": self.language,
                "format": "json",
                "type": "item",
            },
        )
        return parse_wbsearch(body)


def strip_markup(wikitext: str) -> str:
    """Crude plain-texting of an HTML extract: tags out, whitespace collapsed."""
    text = re.sub(r"<[^>]+>", " ", wikitext)
    return re.sub(r"\s+", " ", text).strip()


class MediaWikiFetchClient(_HttpBase):
    """Fetches article plain text plus link titles from a MediaWiki API endpoint.

    The API does not anchor links to character positions, so each link title is
    anchored at its first case-insensitive occurrence in the extracted text;
    titles that never occur verbatim are dropped.
    """

    name = "mediawiki-fetch"

    def __init__(self, api_url: str, **kwargs):
        super().__init__(**kwargs)
        self.api_url = api_url

    def fetch(self, title: str):
        from .passages import Article, Link

        body = self._get_json(
            self.name,
            self.api_url,
            {
                "action": "query",
                "prop": "extracts|links",
                "titles": title,
                "explaintext": 1,
                "pllimit": "max",
                "format": "json",
            },
        )
        pages = body.get("query", {}).get("pages", {}) if isinstance(body, dict) else {}
        for page_id, page in pages.items():
            if page_id == "-1" or "extract" not in page:
                continue
            text = strip_markup(page["extract"])
            words = text.split(" ") if text else []
            links = []
            lowered = [word.casefold() for word in words]
            for row in page.get("links", []):
                target = row.get("title", "")
                target_words = [word.casefold() for word in target.split(" ") if word]
                if not target_words:
                    continue
                for start in range(len(lowered) - len(target_words) + 1):
                    if lowered[start : start + len(target_words)] == target_words:
                        links.append(Link(start, start + len(target_words), None, target))
                        break
            return Article(page.get("title", title), str(page_id), words, links)
        return None


class ChatCompletionClient(_HttpBase):
    """Minimal chat-completions client usable as an LLM provider."""

    name = "chat-completion"

    def __init__(self, base_url: str, api_key: str, model: str, temperature: float = 0.0, **kwargs):
        super().__init__(**kwargs)
        self.base_url = base_url.rstrip("/")
        self.api_key = api_key
        self.model = model
        self.temperature = temperature

    def complete(self, prompt: str) -> str:
        payload = {
            "model": self.model,
            "temperature": self.temperature,
            "messages": [{"role": "user", "content": prompt}],
        }

        def compute():
            self.gate.wait()
            try:
                response = self.session.post(
                    f"{self.base_url}/chat/completions",
                    json=payload,
                    headers={"Authorization": f"Bearer {self.api_key}"},
                    timeout=60.0,
                )
                response.raise_for_status()
                return response.json()
            except requests.RequestException as exc:
                raise ProviderError(self.name, exc) from exc

        if self.cache is not None:
            body = self.cache.fetch(self.name, payload, compute)
        else:
            body = compute()
        return parse_chat_completion(body)


def parse_chat_completion(body) -> str:
    choices = body.get("choices", []) if isinstance(body, dict) else []
    if not choices:
        return ""
    message = choices[0].get("message", {})
    return message.get("content", "") or ""
