"""On-disk response cache and a shared rate gate for live providers."""

from __future__ import annotations

import hashlib
import json
import threading
import time
from pathlib import Path


class ProviderCache:
    """Content-addressed JSON cache: one file per request hash."""

    def __init__(self, root: str | Path):
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)

    @staticmethod
    def key(provider: str, payload: dict) -> str:
        body = json.dumps({"provider": provider, "payload": payload}, sort_keys=True, ensure_ascii=False)
        return hashlib.sha256(body.encode("utf-8")).hexdigest()

    def _path(self, key: str) -> Path:
        return self.root / f"{key}.json"

    def get(self, key: str):
        path = self._path(key)
        if not path.exists():
            return None
        return json.loads(path.read_text(encoding="utf-8"))

    def put(self, key: str, response) -> None:
        tmp = self._path(key).with_suffix(".tmp")
        tmp.write_text(json.dumps(response, ensure_ascii=False, sort_keys=True), encoding="utf-8")
        tmp.replace(self._path(key))

    def fetch(self, provider: str, payload: dict, compute):
        """Returns the cached response for (provider, payload), computing and storing on miss."""
        key = self.key(provider, payload)
        hit = self.get(key)
        if hit is not None:
            return hit
        response = compute()
        self.put(key, response)
        return response


class RateGate:
    """Serializes calls so at most one request starts per `min_interval` seconds."""

    def __init__(self, min_interval: float = 0.0):
        self.min_interval = min_interval
        self._lock = threading.Lock()
        self._last = 0.0

    def wait(self) -> None:
        if self.min_interval <= 0:
            return
        with self._lock:
            now = time.monotonic()
            delta = self._last + self.min_interval - now
            if delta > 0:
                time.sleep(delta)
                now = time.monotonic()
            self._last = now
