import copy
import json
import logging
from threading import RLock
from typing import Optional

import fsspec

logger = logging.getLogger('revdiam.cache')


class Cache:
    """JSON-backed key/value store for expensive results such as polytope volumes.

    Any fsspec URL works as ``path``; changes are flushed every ``flush_every`` writes and on ``flush()``.
    """

    def __init__(self, path: str, *, flush_every: int = 10, storage_options: Optional[dict] = None):
        self._path = path
        self._flush_every = flush_every
        self._storage_options = storage_options or {}
        self._data = {}
        self._lock = RLock()
        self._change_counter = 0
        self._hits = 0
        self._misses = 0
        self._load()

    def _get_handle(self, mode):
        with self._lock:
            logger.debug(f"cache(mode={mode}) access: {self._path}")
            return fsspec.open(self._path, mode=mode, encoding="utf-8", **self._storage_options)

    @property
    def stats(self):
        with self._lock:
            return {'hits': self._hits, 'misses': self._misses, 'entries': len(self._data)}

    def invalidate(self, key):
        with self._lock:
            if key in self._data:
                self._data.pop(key, None)
                self._change_counter = self._change_counter + 1
                self._auto_flush_if_needed()

    def get(self, key):
        with self._lock:
            value = self._data.get(key)
            if value is None:
                self._misses += 1
            else:
                self._hits += 1
            return copy.deepcopy(value)

    def keys(self):
        with self._lock:
            return copy.deepcopy(self._data).keys()

    def __contains__(self, key):
        with self._lock:
            return key in self._data

    def __getitem__(self, key):
        return self.get(key)

    def __setitem__(self, key, value):
        with self._lock:
            self._data[key] = value
            self._change_counter = self._change_counter + 1
            self._auto_flush_if_needed()

    def _auto_flush_if_needed(self):
        with self._lock:
            if self._change_counter >= self._flush_every:
                self.flush()

    def _load(self):
        with self._lock:
            try:
                with self._get_handle("r") as f:
                    self._data = json.loads(f.read())
                logger.info(f"Loaded {len(self._data)} cached entries from {self._path}")
            except FileNotFoundError:
                self._data = {}

    def flush(self):
        with self._lock:
            json_str = json.dumps(self._data, indent=4, sort_keys=True)
            with self._get_handle("w") as f:
                f.write(json_str)

            self._change_counter = 0

    def clear(self):
        with self._lock:
            if self._data:
                self._data = {}
                self.flush()
