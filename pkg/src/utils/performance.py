"""
Fan-out and caching helpers

`parallel_map` spreads pure evaluations over a thread pool and reassembles the
results in input order. `WordCache` persists large deterministic artifacts
(Oxtoby words) as plain JSON files keyed by a digest of their parameters.
"""

import hashlib
import json
import threading
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import Any, Callable, Dict, Iterable, List, Optional, TypeVar

from src.utils.logger import logger

T = TypeVar("T")
R = TypeVar("R")


def parallel_map(func: Callable[[T], R], items: Iterable[T], workers: int = 1) -> List[R]:
    """Apply func to every item; results keep the input order for any worker count"""
    items = list(items)
    if workers <= 1 or len(items) <= 1:
        return [func(item) for item in items]

    with ThreadPoolExecutor(max_workers=workers) as executor:
        return list(executor.map(func, items))


class WordCache:
    """File cache of JSON documents under a directory"""

    def __init__(self, cache_dir: Path):
        self.cache_dir = Path(cache_dir)
        self.cache_dir.mkdir(parents=True, exist_ok=True)
        self.stats = {'hits': 0, 'misses': 0, 'writes': 0, 'errors': 0}
        self._lock = threading.Lock()

    @staticmethod
    def cache_key(namespace: str, params: Dict[str, Any]) -> str:
        """Stable digest of a namespace and its parameters"""
        canonical = json.dumps({'namespace': namespace, 'params': params}, sort_keys=True)
        return hashlib.sha256(canonical.encode()).hexdigest()

    def _path(self, key: str) -> Path:
        return self.cache_dir / f"{key}.json"

    def get(self, namespace: str, params: Dict[str, Any]) -> Optional[Any]:
        path = self._path(self.cache_key(namespace, params))
        with self._lock:
            if not path.is_file():
                self.stats['misses'] += 1
                return None
            try:
                document = json.loads(path.read_text(encoding="utf-8"))
            except (OSError, ValueError) as e:
                logger.warning(f"Discarding unreadable cache entry {path.name}: {e}")
                self.stats['errors'] += 1
                return None
            self.stats['hits'] += 1
        return document.get('value')

    def set(self, namespace: str, params: Dict[str, Any], value: Any) -> bool:
        key = self.cache_key(namespace, params)
        path = self._path(key)
        document = {'namespace': namespace, 'params': params, 'value': value}
        with self._lock:
            try:
                tmp = path.with_suffix(".tmp")
                tmp.write_text(json.dumps(document, sort_keys=True), encoding="utf-8")
                tmp.replace(path)
            except OSError as e:
                logger.error(f"Failed to store cache entry {key}: {e}")
                self.stats['errors'] += 1
                return False
            self.stats['writes'] += 1
        return True

    def clear(self) -> int:
        removed = 0
        with self._lock:
            for path in self.cache_dir.glob("*.json"):
                path.unlink()
                removed += 1
        return removed

    def get_stats(self) -> Dict[str, int]:
        with self._lock:
            return dict(self.stats)
